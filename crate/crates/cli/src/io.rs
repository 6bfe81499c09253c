//! CSV, manifest and cache helpers.

use std::fs;
use std::path::{Path, PathBuf};

use rabi_core::eigensolve::{Labeling, SpectrumSlice};
use rabi_core::Error;
use serde_json::{json, Value};

pub type Result<T> = std::result::Result<T, Error>;

/// Round-trip float formatting (17 significant digits).
pub fn f(x: f64) -> String {
    format!("{x:.16e}")
}

fn csv_err(e: csv::Error) -> Error {
    if e.is_io_error() {
        Error::Io(e.to_string())
    } else {
        Error::Domain(format!("csv: {e}"))
    }
}

/// Writes a CSV with `header` and string rows, LF line endings.
pub fn write_csv(path: &Path, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_path(path)
        .map_err(csv_err)?;
    w.write_record(header).map_err(csv_err)?;
    for r in rows {
        w.write_record(&r).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

/// A spectrum row read back from CSV.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectrumRow {
    pub n: u64,
    pub lambda: f64,
    pub branch: Option<char>,
}

pub fn read_spectrum_rows(path: &Path) -> Result<Vec<SpectrumRow>> {
    let mut r = csv::Reader::from_path(path).map_err(csv_err)?;
    let headers = r.headers().map_err(csv_err)?.clone();
    let col = |name: &str| headers.iter().position(|h| h.trim() == name);
    let n_col = col("n").ok_or_else(|| Error::Domain(format!("{}: missing column n", path.display())))?;
    let l_col = col("lambda").ok_or_else(|| Error::Domain(format!("{}: missing column lambda", path.display())))?;
    let b_col = col("branch");
    let mut out = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(csv_err)?;
        let field = |i: usize| rec.get(i).unwrap_or("").trim().to_string();
        let n = field(n_col)
            .parse::<u64>()
            .map_err(|e| Error::Domain(format!("bad n '{}': {e}", field(n_col))))?;
        let lambda = field(l_col)
            .parse::<f64>()
            .map_err(|e| Error::Domain(format!("bad lambda '{}': {e}", field(l_col))))?;
        let branch = match b_col.map(field).as_deref() {
            None | Some("") => None,
            Some("+") => Some('+'),
            Some("-") => Some('-'),
            Some(other) => return Err(Error::Domain(format!("bad branch '{other}' (+|-)"))),
        };
        out.push(SpectrumRow { n, lambda, branch });
    }
    Ok(out)
}

/// Contiguous slice from rows (sorted by `n`, no gaps or duplicates).
pub fn slice_from_rows(mut rows: Vec<SpectrumRow>) -> Result<SpectrumSlice> {
    rows.sort_by_key(|r| r.n);
    if rows.is_empty() {
        return Err(Error::Domain("empty spectrum".into()));
    }
    for w in rows.windows(2) {
        if w[1].n != w[0].n + 1 {
            return Err(Error::Domain(format!(
                "spectrum indices must be contiguous, found {} then {}",
                w[0].n, w[1].n
            )));
        }
    }
    let n_lo = rows[0].n;
    SpectrumSlice::from_values(n_lo, rows.into_iter().map(|r| r.lambda).collect(), Labeling::NondecreasingCount)
}

pub fn manifest_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".manifest.json");
    PathBuf::from(s)
}

/// Writes `<out>.manifest.json` (no timestamps, so reruns are byte-identical).
pub fn write_manifest(out: &Path, command: &str, inputs: Value, tolerances: Value, results: Value) -> Result<()> {
    let m = json!({
        "command": command,
        "version": env!("CARGO_PKG_VERSION"),
        "inputs": inputs,
        "tolerances": tolerances,
        "results": results,
        "output": out.display().to_string(),
    });
    fs::write(manifest_path(out), serde_json::to_string_pretty(&m)? + "\n")?;
    Ok(())
}

/// FNV-1a, used to name cache entries.
pub fn fnv1a(text: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in text.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// Cache directory from `RABI_CACHE_DIR`, created on demand.
pub fn cache_dir() -> Result<Option<PathBuf>> {
    match std::env::var_os("RABI_CACHE_DIR") {
        Some(d) if !d.is_empty() => {
            let p = PathBuf::from(d);
            fs::create_dir_all(&p)?;
            Ok(Some(p))
        }
        _ => Ok(None),
    }
}

pub fn parse_list<T: std::str::FromStr>(text: &str, what: &str) -> Result<Vec<T>>
where
    T::Err: std::fmt::Display,
{
    let v: Result<Vec<T>> = text
        .split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| {
            s.trim()
                .parse::<T>()
                .map_err(|e| Error::Domain(format!("bad {what} entry '{s}': {e}")))
        })
        .collect();
    let v = v?;
    if v.is_empty() {
        return Err(Error::Domain(format!("empty {what}")));
    }
    Ok(v)
}
