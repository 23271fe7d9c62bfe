//! Text formats: plain samples, `unit,increment` degradation tables,
//! `from,to,time` transition tables, and two-column CDF dumps.

use std::fmt::Write as _;

use crate::bounds::CdfVector;
use crate::error::{Error, Result};
use crate::semi_markov::TransitionRecord;

/// One real per line; blank lines and `#` comments are ignored.
pub fn parse_samples(text: &str) -> Result<Vec<f64>> {
    let mut out = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let body = line.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let v: f64 = body
            .parse()
            .map_err(|_| Error::Parse(format!("line {}: not a number: {body:?}", lineno + 1)))?;
        if !v.is_finite() {
            return Err(Error::Parse(format!(
                "line {}: non-finite value",
                lineno + 1
            )));
        }
        out.push(v);
    }
    if out.is_empty() {
        return Err(Error::Parse("no observations found".into()));
    }
    Ok(out)
}

pub fn write_samples(values: &[f64]) -> String {
    values.iter().map(|v| format!("{v}\n")).collect()
}

fn reader(text: &str) -> csv::Reader<&[u8]> {
    csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(text.as_bytes())
}

fn expect_header(rdr: &mut csv::Reader<&[u8]>, want: &[&str]) -> Result<()> {
    let got: Vec<String> = rdr
        .headers()
        .map_err(|e| Error::Parse(e.to_string()))?
        .iter()
        .map(|h| h.to_ascii_lowercase())
        .collect();
    if got != want {
        return Err(Error::Parse(format!(
            "expected header {:?}, found {:?}",
            want.join(","),
            got.join(",")
        )));
    }
    Ok(())
}

fn field<T: std::str::FromStr>(rec: &csv::StringRecord, i: usize, row: usize) -> Result<T> {
    let raw = rec.get(i).unwrap_or("");
    raw.parse()
        .map_err(|_| Error::Parse(format!("row {row}: bad field {raw:?}")))
}

/// Degradation table with header `unit,increment`, one increment per row in
/// inspection order. Units keep their order of first appearance.
pub fn parse_degradation(text: &str) -> Result<Vec<(String, Vec<f64>)>> {
    let mut rdr = reader(text);
    expect_header(&mut rdr, &["unit", "increment"])?;
    let mut units: Vec<(String, Vec<f64>)> = Vec::new();
    for (row, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| Error::Parse(e.to_string()))?;
        let unit = rec.get(0).unwrap_or("").to_string();
        if unit.is_empty() {
            return Err(Error::Parse(format!("row {}: empty unit label", row + 1)));
        }
        let inc: f64 = field(&rec, 1, row + 1)?;
        match units.iter_mut().find(|(u, _)| *u == unit) {
            Some((_, v)) => v.push(inc),
            None => units.push((unit, vec![inc])),
        }
    }
    if units.is_empty() {
        return Err(Error::Parse("no degradation rows".into()));
    }
    Ok(units)
}

pub fn write_degradation(units: &[(String, Vec<f64>)]) -> String {
    let mut out = String::from("unit,increment\n");
    for (u, incs) in units {
        for x in incs {
            let _ = writeln!(out, "{u},{x}");
        }
    }
    out
}

/// Transition table with header `from,to,time`.
pub fn parse_transitions(text: &str) -> Result<Vec<TransitionRecord>> {
    let mut rdr = reader(text);
    expect_header(&mut rdr, &["from", "to", "time"])?;
    let mut out = Vec::new();
    for (row, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| Error::Parse(e.to_string()))?;
        let from: u8 = field(&rec, 0, row + 1)?;
        let to: u8 = field(&rec, 1, row + 1)?;
        let time: f64 = field(&rec, 2, row + 1)?;
        out.push(TransitionRecord::new(from, to, time)?);
    }
    if out.is_empty() {
        return Err(Error::Parse("no transition rows".into()));
    }
    Ok(out)
}

pub fn write_transitions(records: &[TransitionRecord]) -> String {
    let mut out = String::from("from,to,time\n");
    for r in records {
        let _ = writeln!(out, "{},{},{}", r.from, r.to, r.sojourn);
    }
    out
}

/// `value<TAB>cumulative probability`, one row per grid point.
pub fn write_cdf_dump(cdf: &CdfVector) -> String {
    let mut out = String::with_capacity(cdf.cum().len() * 24);
    for (v, c) in cdf.grid().values().zip(cdf.cum()) {
        let _ = writeln!(out, "{v}\t{c}");
    }
    out
}
