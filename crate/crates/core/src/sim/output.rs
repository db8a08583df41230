use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use super::{InitStudyRow, ResidualStats};
use crate::error::Result;

pub const COMPARISON_HEADER: &str =
    "method,sigma,n,m,k,lambda,alpha,reps,mean_residual,se_residual,residual_type,seed";
pub const INIT_STUDY_HEADER: &str = "init_label,l1_norm,iterations,converged,seed";
pub const M_SWEEP_HEADER: &str = "method,m,n,sigma,reps,mean_residual,se_residual,seed";

/// `printf("%.9g")`: nine significant digits, trailing zeros dropped, exponent
/// form outside `[1e-4, 1e9)`.
pub fn format_sig9(v: f64) -> String {
    if v.is_nan() {
        return "nan".into();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if v == 0.0 {
        return "0".into();
    }
    let sci = format!("{:.8e}", v);
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-4..9).contains(&exp) {
        let decimals = (8 - exp).max(0) as usize;
        trim_zeros(format!("{:.*}", decimals, v))
    } else {
        let sign = if exp < 0 { '-' } else { '+' };
        format!(
            "{}e{}{:02}",
            trim_zeros(mantissa.to_string()),
            sign,
            exp.abs()
        )
    }
}

fn trim_zeros(s: String) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

fn opt(v: Option<f64>) -> String {
    v.map(format_sig9).unwrap_or_default()
}

fn write_meta<W: Write>(w: &mut W, meta: &[(String, String)]) -> Result<()> {
    for (k, v) in meta {
        writeln!(w, "# {k}={v}")?;
    }
    Ok(())
}

/// Rows in output order: method, then σ, then residual type.
pub fn sorted_comparison(rows: &[ResidualStats]) -> Vec<&ResidualStats> {
    let mut sorted: Vec<&ResidualStats> = rows.iter().collect();
    sorted.sort_by(|a, b| {
        a.method
            .cmp(&b.method)
            .then(a.sigma.total_cmp(&b.sigma))
            .then(a.residual_type.cmp(&b.residual_type))
    });
    sorted
}

pub fn write_comparison<W: Write>(
    w: &mut W,
    rows: &[ResidualStats],
    meta: &[(String, String)],
) -> Result<()> {
    write_meta(w, meta)?;
    writeln!(w, "{COMPARISON_HEADER}")?;
    for r in sorted_comparison(rows) {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            r.method.as_str(),
            format_sig9(r.sigma),
            r.n,
            r.m,
            r.k,
            opt(r.lambda),
            format_sig9(r.alpha),
            r.reps,
            format_sig9(r.mean_residual),
            format_sig9(r.se_residual),
            r.residual_type.as_str(),
            r.seed
        )?;
    }
    Ok(())
}

pub fn write_m_sweep<W: Write>(
    w: &mut W,
    rows: &[ResidualStats],
    meta: &[(String, String)],
) -> Result<()> {
    write_meta(w, meta)?;
    writeln!(w, "{M_SWEEP_HEADER}")?;
    let mut sorted: Vec<&ResidualStats> = rows.iter().collect();
    sorted.sort_by(|a, b| a.method.cmp(&b.method).then(a.m.cmp(&b.m)));
    for r in sorted {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{}",
            r.method.as_str(),
            r.m,
            r.n,
            format_sig9(r.sigma),
            r.reps,
            format_sig9(r.mean_residual),
            format_sig9(r.se_residual),
            r.seed
        )?;
    }
    Ok(())
}

pub fn write_init_study<W: Write>(
    w: &mut W,
    rows: &[InitStudyRow],
    seed: u64,
    meta: &[(String, String)],
) -> Result<()> {
    write_meta(w, meta)?;
    writeln!(w, "{INIT_STUDY_HEADER}")?;
    for r in rows {
        writeln!(
            w,
            "{},{},{},{},{}",
            r.label.replace([',', '\n'], " "),
            format_sig9(r.l1_norm),
            r.iterations,
            r.converged,
            seed
        )?;
    }
    Ok(())
}

pub(crate) fn to_file(
    path: &Path,
    body: impl FnOnce(&mut BufWriter<File>) -> Result<()>,
) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    body(&mut w)?;
    w.flush()?;
    Ok(())
}

/// Writes comparison rows to `path` (see [`COMPARISON_HEADER`]).
pub fn write_comparison_csv(
    rows: &[ResidualStats],
    meta: &[(String, String)],
    path: &Path,
) -> Result<()> {
    to_file(path, |w| write_comparison(w, rows, meta))
}

pub fn write_m_sweep_csv(
    rows: &[ResidualStats],
    meta: &[(String, String)],
    path: &Path,
) -> Result<()> {
    to_file(path, |w| write_m_sweep(w, rows, meta))
}

pub fn write_init_study_csv(
    rows: &[InitStudyRow],
    seed: u64,
    meta: &[(String, String)],
    path: &Path,
) -> Result<()> {
    to_file(path, |w| write_init_study(w, rows, seed, meta))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nine_significant_digits() {
        assert_eq!(format_sig9(0.0), "0");
        assert_eq!(format_sig9(1.0), "1");
        assert_eq!(format_sig9(0.1), "0.1");
        assert_eq!(format_sig9(1.0 / 3.0), "0.333333333");
        assert_eq!(format_sig9(-2.0 / 3.0), "-0.666666667");
        assert_eq!(format_sig9(123456789.0), "123456789");
        assert_eq!(format_sig9(1234567891.0), "1.23456789e+09");
        assert_eq!(format_sig9(0.000012345678912), "1.23456789e-05");
        assert_eq!(format_sig9(0.00012345678912), "0.000123456789");
        assert_eq!(format_sig9(10.5667), "10.5667");
        assert_eq!(format_sig9(9.9999999999), "10");
    }
}
