//! Profile CSV (schema 1) and the optional SVG plot.

use std::fmt::Write as _;
use std::io::Write;

use minmod_core::GrowthProfile;

use crate::CliError;

/// Bumped whenever the column set or formatting changes.
pub const CSV_SCHEMA: u32 = 1;
pub const CSV_HEADER: [&str; 6] = ["log_r", "log_M", "log_m", "eps", "k", "log_M_over_sqrt_r"];

/// 17 significant digits; `-inf` for zeros of `f`, empty where undefined.
pub fn num(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else if v == f64::NEG_INFINITY {
        "-inf".to_string()
    } else if v == f64::INFINITY {
        "inf".to_string()
    } else {
        String::new()
    }
}

fn opt(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

pub fn write_profile_csv<W: Write>(profile: &GrowthProfile, out: W) -> Result<(), CliError> {
    let mut w = csv::Writer::from_writer(out);
    let io = |e: csv::Error| CliError::Io(e.to_string());
    w.write_record(CSV_HEADER).map_err(io)?;
    for s in &profile.samples {
        let lr = s.lr.get();
        let ratio = if s.log_max > 0.0 { (s.log_max.ln() - 0.5 * lr).exp() } else { s.log_max * (-0.5 * lr).exp() };
        w.write_record([num(lr), num(s.log_max), num(s.log_min.as_f64()), opt(s.eps), opt(s.k), num(ratio)])
            .map_err(io)?;
    }
    w.flush().map_err(|e| CliError::Io(e.to_string()))
}

/// `(log_r, log_M)` pairs from a profile CSV.
pub fn read_profile_csv(text: &str) -> Result<Vec<(f64, f64)>, CliError> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let headers = r.headers().map_err(|e| CliError::Spec(format!("profile csv: {e}")))?.clone();
    if headers.iter().collect::<Vec<_>>() != CSV_HEADER {
        return Err(CliError::Spec(format!("profile csv: unexpected header {headers:?}")));
    }
    let mut rows = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| CliError::Spec(format!("profile csv row {}: {e}", i + 2)))?;
        let field = |j: usize| -> Result<f64, CliError> {
            rec.get(j)
                .unwrap_or("")
                .parse::<f64>()
                .map_err(|e| CliError::Spec(format!("profile csv row {}, column {}: {e}", i + 2, CSV_HEADER[j])))
        };
        rows.push((field(0)?, field(1)?));
    }
    Ok(rows)
}

/// `log M`, `log m` and the identity line against `log r`.
pub fn profile_svg(profile: &GrowthProfile) -> String {
    let (w, h, pad) = (800.0, 500.0, 50.0);
    let xs: Vec<f64> = profile.samples.iter().map(|s| s.lr.get()).collect();
    let big: Vec<(f64, f64)> = profile.samples.iter().map(|s| (s.lr.get(), s.log_max)).collect();
    let small: Vec<(f64, f64)> =
        profile.samples.iter().filter_map(|s| s.log_min.finite().map(|v| (s.lr.get(), v))).collect();
    let ident: Vec<(f64, f64)> = xs.iter().map(|&x| (x, x)).collect();
    let (x0, x1) = bounds(xs.iter().copied());
    let (y0, y1) = bounds(big.iter().chain(&small).chain(&ident).map(|p| p.1));
    let sx = |x: f64| pad + (x - x0) / (x1 - x0).max(1e-300) * (w - 2.0 * pad);
    let sy = |y: f64| h - pad - (y - y0) / (y1 - y0).max(1e-300) * (h - 2.0 * pad);
    let line = |pts: &[(f64, f64)], colour: &str, dash: &str| -> String {
        let mut d = String::new();
        for (i, &(x, y)) in pts.iter().enumerate() {
            let _ = write!(d, "{}{:.2},{:.2}", if i == 0 { "" } else { " " }, sx(x), sy(y));
        }
        format!("<polyline fill=\"none\" stroke=\"{colour}\" stroke-width=\"1.5\"{dash} points=\"{d}\"/>\n")
    };
    let mut svg = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\">\n\
         <rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n\
         <line x1=\"{pad}\" y1=\"{b}\" x2=\"{r}\" y2=\"{b}\" stroke=\"black\"/>\n\
         <line x1=\"{pad}\" y1=\"{pad}\" x2=\"{pad}\" y2=\"{b}\" stroke=\"black\"/>\n",
        b = h - pad,
        r = w - pad
    );
    svg += &line(&big, "#1f77b4", "");
    svg += &line(&small, "#d62728", "");
    svg += &line(&ident, "#7f7f7f", " stroke-dasharray=\"4 3\"");
    let _ = write!(
        svg,
        "<text x=\"{pad}\" y=\"{ty}\" font-size=\"12\">log r from {x0:.3} to {x1:.3}; y from {y0:.3} to {y1:.3}</text>\n\
         <text x=\"{lx}\" y=\"20\" font-size=\"12\" fill=\"#1f77b4\">log M</text>\n\
         <text x=\"{lx}\" y=\"34\" font-size=\"12\" fill=\"#d62728\">log m</text>\n\
         <text x=\"{lx}\" y=\"48\" font-size=\"12\" fill=\"#7f7f7f\">log r</text>\n</svg>\n",
        ty = h - 15.0,
        lx = w - 120.0
    );
    svg
}

fn bounds(it: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = it.filter(|v| v.is_finite()).fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    if lo.is_finite() {
        (lo, hi)
    } else {
        (0.0, 1.0)
    }
}
