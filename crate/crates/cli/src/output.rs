use std::fs;
use std::io::Write;
use std::path::Path;

use anyhow::{Context, Result};
use serde::Serialize;

use crate::OutputArgs;

/// Six significant digits, trailing zeros trimmed, scientific notation for
/// very large or small magnitudes.
pub fn num(x: f64) -> String {
    if !x.is_finite() {
        return x.to_string();
    }
    if x == 0.0 {
        return "0".into();
    }
    // The exponent after rounding, as printf's %g decides.
    let sci = format!("{x:.5e}");
    let (mantissa, e) = sci.split_once('e').unwrap_or((&sci, "0"));
    let exp: i32 = e.parse().unwrap_or(0);
    if !(-5..6).contains(&exp) {
        return format!("{}e{e}", trim_zeros(mantissa));
    }
    let s = format!("{x:.*}", (5 - exp) as usize);
    trim_zeros(&s).to_string()
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

pub fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

pub fn write_bytes(path: Option<&Path>, bytes: &[u8]) -> Result<()> {
    match path {
        Some(p) => fs::write(p, bytes).with_context(|| format!("cannot write {}", p.display())),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(bytes)?;
            out.flush()?;
            Ok(())
        }
    }
}

pub fn json<T: Serialize + ?Sized>(value: &T) -> Result<Vec<u8>> {
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    Ok(bytes)
}

pub fn csv(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for row in rows {
        w.write_record(&row)?;
    }
    Ok(w.into_inner().map_err(|e| e.into_error())?)
}

/// Writes CSV or JSON to the chosen destination.
pub fn emit<T: Serialize + ?Sized>(
    args: &OutputArgs,
    value: &T,
    csv_bytes: impl FnOnce() -> Result<Vec<u8>>,
) -> Result<()> {
    let bytes = match args.format {
        crate::Format::Csv => csv_bytes()?,
        crate::Format::Json => json(value)?,
    };
    write_bytes(args.out.as_deref(), &bytes)
}
