//! Number and table rendering shared by every command.

use std::fmt::Write as _;

/// Fixed 9-significant-digit rendering: positional for moderate magnitudes,
/// scientific otherwise. Non-finite values print as `nan`/`inf`/`-inf`.
pub fn sig9(v: f64) -> String {
    if v.is_nan() {
        return "nan".into();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if v == 0.0 {
        return "0.00000000".into();
    }
    // Round first so that e.g. 9.999999999 moves to the next decade.
    let rounded: f64 = format!("{v:.8e}").parse().expect("formatted float parses");
    let exponent = rounded.abs().log10().floor() as i32;
    if (-4..9).contains(&exponent) {
        let decimals = (8 - exponent).max(0) as usize;
        format!("{rounded:.decimals$}")
    } else {
        format!("{v:.8e}")
    }
}

pub fn opt_sig9(v: Option<f64>) -> String {
    v.map(sig9).unwrap_or_default()
}

/// CSV with a fixed header; rows are written with LF endings.
pub struct Csv {
    out: String,
    columns: usize,
}

impl Csv {
    pub fn new(header: &[&str]) -> Self {
        let mut out = header.join(",");
        out.push('\n');
        Self { out, columns: header.len() }
    }

    pub fn row(&mut self, cells: &[String]) {
        assert_eq!(cells.len(), self.columns, "CSV row width");
        let _ = writeln!(self.out, "{}", cells.join(","));
    }

    pub fn finish(self) -> String {
        self.out
    }
}
