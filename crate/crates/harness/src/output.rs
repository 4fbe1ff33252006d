//! CSV emission and gnuplot data blocks.

use std::fmt::Write as _;
use std::path::Path;

use crate::config::Mode;
use crate::experiments::Summary;
use crate::{HarnessError, ResultRow};

pub const CSV_HEADER: &str = "experiment,baud_gbd,mode,osnr_db,psd_ratio_db,detuning_ghz,pass_index,ber,q2_db,seed,config_hash";

pub fn mode_str(m: Mode) -> &'static str {
    match m {
        Mode::Nyquist => "nyquist",
        Mode::Cyclic => "cyclic",
    }
}

/// C `%g` formatting with 6 significant digits.
pub fn format_g(v: f64) -> String {
    const P: i32 = 6;
    if v.is_nan() {
        return "nan".into();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if v == 0.0 {
        return if v.is_sign_negative() { "-0".into() } else { "0".into() };
    }
    // exponent after rounding to P significant digits
    let sci = format!("{:.*e}", (P - 1) as usize, v);
    let (mant, exp) = sci.split_once('e').expect("exponent form");
    let x: i32 = exp.parse().expect("integer exponent");
    if (-4..P).contains(&x) {
        let s = format!("{:.*}", (P - 1 - x) as usize, v);
        strip_zeros(&s).to_string()
    } else {
        let m = strip_zeros(mant);
        let sign = if x < 0 { '-' } else { '+' };
        format!("{m}e{sign}{:02}", x.abs())
    }
}

fn strip_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// Render rows in canonical order under the fixed header.
pub fn to_csv(rows: &[ResultRow]) -> String {
    let mut sorted: Vec<&ResultRow> = rows.iter().collect();
    sorted.sort_by(|a, b| a.canonical_cmp(b));
    let mut out = String::with_capacity(64 * (rows.len() + 1));
    out.push_str(CSV_HEADER);
    out.push('\n');
    for r in sorted {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{}",
            r.experiment,
            format_g(r.baud_gbd),
            mode_str(r.mode),
            format_g(r.osnr_db),
            format_g(r.psd_ratio_db),
            format_g(r.detuning_ghz),
            r.pass_index,
            format_g(r.ber),
            format_g(r.q2_db),
            r.seed,
            r.config_hash
        );
    }
    out
}

/// Write the CSV to `path`. Empty input is an error and leaves no file.
pub fn emit_results(rows: &[ResultRow], path: &Path) -> Result<(), HarnessError> {
    if rows.is_empty() {
        return Err(HarnessError::Output("no result rows to write".into()));
    }
    std::fs::write(path, to_csv(rows)).map_err(|e| HarnessError::Output(format!("{}: {e}", path.display())))
}

/// Gnuplot data: one block per (baud, mode[, node mode]) series, blocks
/// separated by two blank lines so `index N` selects a series.
/// Columns: x, pooled Q², mean Q², min Q², max Q².
pub fn to_gnuplot(summary: &Summary) -> String {
    let mut out = String::new();
    let mut block = |title: String, pts: Vec<(f64, f64, f64, f64, f64)>| {
        if !out.is_empty() {
            out.push_str("\n\n");
        }
        let _ = writeln!(out, "# {title}");
        for p in pts {
            let _ = writeln!(out, "{} {} {} {} {}", format_g(p.0), format_g(p.1), format_g(p.2), format_g(p.3), format_g(p.4));
        }
    };
    match summary {
        Summary::B2b(v) => {
            for s in v {
                let pts = s
                    .curve
                    .iter()
                    .filter(|c| c.0.is_finite())
                    .map(|(x, p)| (*x, p.q2_db, p.q2_mean, p.q2_min, p.q2_max))
                    .collect();
                block(format!("b2b baud_gbd={} mode={} x=osnr_db", format_g(s.baud_gbd), mode_str(s.mode)), pts);
            }
        }
        Summary::Detuning(v) => {
            for s in v {
                let pts = s.points.iter().map(|(x, p)| (*x, p.q2_db, p.q2_mean, p.q2_min, p.q2_max)).collect();
                block(format!("detuning baud_gbd={} mode={} x=detuning_ghz", format_g(s.baud_gbd), mode_str(s.mode)), pts);
            }
        }
        Summary::Multipass(v) => {
            for s in v {
                let pts = s
                    .per_pass
                    .iter()
                    .enumerate()
                    .map(|(k, p)| ((k + 1) as f64, p.q2_db, p.q2_mean, p.q2_min, p.q2_max))
                    .collect();
                block(
                    format!("{} baud_gbd={} mode={} x=pass", s.experiment, format_g(s.baud_gbd), mode_str(s.mode)),
                    pts,
                );
            }
        }
    }
    out
}

pub fn emit_gnuplot(summary: &Summary, dir: &Path, stem: &str) -> Result<std::path::PathBuf, HarnessError> {
    let ctx = |e: std::io::Error| HarnessError::Output(format!("{}: {e}", dir.display()));
    std::fs::create_dir_all(dir).map_err(ctx)?;
    let path = dir.join(format!("{stem}.dat"));
    std::fs::write(&path, to_gnuplot(summary)).map_err(|e| HarnessError::Output(format!("{}: {e}", path.display())))?;
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn g_format_matches_c() {
        let cases = [
            (0.0, "0"),
            (1.0, "1"),
            (40.0, "40"),
            (42.5, "42.5"),
            (8.56, "8.56"),
            (3.7e-3, "0.0037"),
            (1.234567e-5, "1.23457e-05"),
            (123456.7, "123457"),
            (1234567.0, "1.23457e+06"),
            (-0.5, "-0.5"),
            (0.0001, "0.0001"),
            (99999.96, "100000"),
            (999999.5, "1e+06"),
            (f64::INFINITY, "inf"),
            (f64::NAN, "nan"),
        ];
        for (v, want) in cases {
            assert_eq!(format_g(v), want, "{v}");
        }
    }
}
