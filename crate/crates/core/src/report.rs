//! Deterministic CSV/JSON rendering shared by every report.
//!
//! CSV is RFC-4180 quoted only where needed, LF-terminated, UTF-8 without
//! BOM. Ratios are printed with three fractional digits, ties to even.

use std::fs;
use std::io;
use std::path::Path;

use num_rational::Ratio;
use num_traits::ToPrimitive;

/// Rounds an exact non-negative ratio to three decimals, ties to even.
pub fn fmt_ratio(r: &Ratio<u64>) -> String {
    let (n, d) = (*r.numer() as u128, *r.denom() as u128);
    let scaled = n * 1000;
    let (mut q, rem) = (scaled / d, scaled % d);
    if 2 * rem > d || (2 * rem == d && q % 2 == 1) {
        q += 1;
    }
    format!("{}.{:03}", q / 1000, q % 1000)
}

/// `fmt_ratio`, or the empty field for an undefined ratio.
pub fn fmt_opt_ratio(r: &Option<Ratio<u64>>) -> String {
    r.as_ref().map(fmt_ratio).unwrap_or_default()
}

/// Formats a float with three decimals. Rust rounds the exact binary value,
/// so representable ties go to even.
pub fn fmt_f64(x: f64) -> String {
    let s = format!("{x:.3}");
    if s == "-0.000" {
        "0.000".into()
    } else {
        s
    }
}

/// A ratio as a JSON number carrying exactly the rounded value.
pub fn ratio_json(r: &Option<Ratio<u64>>) -> serde_json::Value {
    match r {
        None => serde_json::Value::Null,
        Some(r) => {
            let rounded: f64 = fmt_ratio(r).parse().expect("formatted ratio parses");
            serde_json::Value::from(rounded)
        }
    }
}

pub fn ratio_to_f64(r: &Ratio<u64>) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

/// Writes `rows` under `header` to `path` as CSV.
pub fn write_csv<I, R>(path: &Path, header: &[&str], rows: I) -> io::Result<()>
where
    I: IntoIterator<Item = R>,
    R: IntoIterator,
    R::Item: AsRef<[u8]>,
{
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .quote_style(csv::QuoteStyle::Necessary)
        .from_writer(Vec::new());
    w.write_record(header)?;
    for row in rows {
        w.write_record(row)?;
    }
    let bytes = w.into_inner().map_err(|e| e.into_error())?;
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    fs::write(path, bytes)
}

/// Pretty JSON with a trailing newline. Map keys come out sorted because
/// `serde_json::Map` is a BTreeMap without the `preserve_order` feature.
pub fn write_json(path: &Path, value: &serde_json::Value) -> io::Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    let mut text = serde_json::to_string_pretty(value).map_err(io::Error::other)?;
    text.push('\n');
    fs::write(path, text)
}
