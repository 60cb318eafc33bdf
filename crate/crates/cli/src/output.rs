use std::io::Write;

use crate::CliError;

pub const GRID_HEADER: [&str; 13] = [
    "kind", "config", "gamma", "depth", "B", "n", "measure", "tree_value", "forest_value", "tree_se", "forest_se", "reps",
    "seed",
];

/// One line of a grid CSV. Missing values are written as empty fields.
#[derive(Debug, Clone, PartialEq)]
pub struct GridRow {
    pub kind: &'static str,
    pub config: String,
    pub gamma: f64,
    pub depth: usize,
    pub b: usize,
    pub n: usize,
    pub measure: &'static str,
    pub tree_value: Option<f64>,
    pub forest_value: Option<f64>,
    pub tree_se: Option<f64>,
    pub forest_se: Option<f64>,
    pub reps: usize,
    pub seed: u64,
}

/// `x` with `digits` significant digits, trailing zeros removed. Very large
/// or small magnitudes switch to exponent notation.
pub fn format_sig(x: f64, digits: usize) -> String {
    if x == 0.0 {
        return "0".into();
    }
    let exp = x.abs().log10().floor() as i32;
    if !(-5..=15).contains(&exp) {
        let s = format!("{:.*e}", digits - 1, x);
        let (mant, e) = s.split_once('e').expect("exponent form");
        return format!("{}e{e}", trim_zeros(mant));
    }
    let decimals = digits as i32 - 1 - exp;
    if decimals < 0 {
        let scale = 10f64.powi(-decimals);
        return format!("{:.0}", (x / scale).round() * scale);
    }
    let decimals = decimals as usize;
    trim_zeros(&format!("{x:.decimals$}")).to_string()
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

fn opt(x: Option<f64>, digits: usize) -> String {
    x.map(|v| format_sig(v, digits)).unwrap_or_default()
}

/// Refuse to emit anything when a value is NaN or infinite.
pub fn check_finite<'a>(values: impl IntoIterator<Item = (&'a str, f64)>) -> Result<(), CliError> {
    for (what, v) in values {
        if !v.is_finite() {
            return Err(CliError::Runtime(format!("non-finite value {v} in {what}")));
        }
    }
    Ok(())
}

impl GridRow {
    fn values(&self) -> impl Iterator<Item = (&str, f64)> + '_ {
        [self.tree_value, self.forest_value, self.tree_se, self.forest_se]
            .into_iter()
            .flatten()
            .map(|v| (self.measure, v))
    }
}

/// Sort by `(gamma, depth)`, keeping generation order inside a cell.
pub fn sort_rows(rows: &mut [GridRow]) {
    rows.sort_by(|a, b| a.gamma.total_cmp(&b.gamma).then(a.depth.cmp(&b.depth)));
}

pub fn write_grid<W: Write>(out: W, rows: &[GridRow], digits: usize) -> Result<(), CliError> {
    check_finite(rows.iter().flat_map(|r| r.values()))?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(GRID_HEADER).map_err(io_err)?;
    for r in rows {
        w.write_record([
            r.kind.to_string(),
            r.config.clone(),
            format_sig(r.gamma, digits),
            r.depth.to_string(),
            r.b.to_string(),
            r.n.to_string(),
            r.measure.to_string(),
            opt(r.tree_value, digits),
            opt(r.forest_value, digits),
            opt(r.tree_se, digits),
            opt(r.forest_se, digits),
            r.reps.to_string(),
            r.seed.to_string(),
        ])
        .map_err(io_err)?;
    }
    w.flush().map_err(|e| CliError::Runtime(format!("write failed: {e}")))
}

/// Header plus string records, for tables with their own schema.
pub fn write_table<W: Write>(out: W, header: &[&str], rows: &[Vec<String>]) -> Result<(), CliError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header).map_err(io_err)?;
    for r in rows {
        w.write_record(r).map_err(io_err)?;
    }
    w.flush().map_err(|e| CliError::Runtime(format!("write failed: {e}")))
}

fn io_err(e: csv::Error) -> CliError {
    CliError::Runtime(format!("write failed: {e}"))
}
