//! CSV output with platform-independent number formatting: `.` decimal
//! separator, 12 significant digits, LF line endings.

use std::io::{self, Write};

use crate::error::Result;
use crate::model::SystemParams;
use crate::oracle::GridPoint;
use crate::stability::{tdma_boundary, uncontrolled_boundary, RegionBoundary};

/// Formats `x` with 12 significant digits, trailing zeros removed.
pub fn fmt_num(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return if x.is_nan() { "nan".into() } else if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let magnitude = x.abs().log10().floor() as i32;
    let decimals = (11 - magnitude).max(0) as usize;
    let mut s = format!("{x:.decimals$}");
    if s.contains('.') {
        let trimmed = s.trim_end_matches('0').trim_end_matches('.').len();
        s.truncate(trimmed);
    }
    s
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_num).unwrap_or_default()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Source {
    Controlled,
    Tdma,
    Uncontrolled,
    GridOracle,
}

impl Source {
    pub fn label(self) -> &'static str {
        match self {
            Source::Controlled => "controlled",
            Source::Tdma => "tdma",
            Source::Uncontrolled => "uncontrolled",
            Source::GridOracle => "grid_oracle",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryRow {
    pub lambda1: f64,
    pub lambda2: f64,
    pub segment_kind: &'static str,
    pub source: Source,
}

/// `samples` evenly spaced values of `lambda1` in `[0, max)`.
pub fn lambda1_samples(max: f64, samples: usize) -> impl Iterator<Item = f64> {
    (0..samples).map(move |i| max * i as f64 / samples as f64)
}

pub fn controlled_rows(boundary: &RegionBoundary, samples: usize) -> Vec<BoundaryRow> {
    lambda1_samples(boundary.lambda1_max, samples)
        .filter_map(|x| {
            let seg = boundary.segment_at(x)?;
            Some(BoundaryRow {
                lambda1: x,
                lambda2: seg.kind.eval(x).max(0.0),
                segment_kind: seg.kind.label(),
                source: Source::Controlled,
            })
        })
        .collect()
}

pub fn baseline_rows(params: &SystemParams, samples: usize) -> Result<Vec<BoundaryRow>> {
    let max = params.good1() * params.f11;
    let mut rows = Vec::with_capacity(2 * samples);
    for x in lambda1_samples(max, samples) {
        rows.push(BoundaryRow {
            lambda1: x,
            lambda2: tdma_boundary(params, x)?,
            segment_kind: "linear",
            source: Source::Tdma,
        });
        rows.push(BoundaryRow {
            lambda1: x,
            lambda2: uncontrolled_boundary(params, x)?,
            segment_kind: "sqrt",
            source: Source::Uncontrolled,
        });
    }
    Ok(rows)
}

pub fn grid_rows(points: &[GridPoint]) -> Vec<BoundaryRow> {
    points
        .iter()
        .map(|p| BoundaryRow {
            lambda1: p.lambda1,
            lambda2: p.lambda2,
            segment_kind: "grid",
            source: Source::GridOracle,
        })
        .collect()
}

/// Writes rows sorted by `lambda1`, then by source.
pub fn write_boundary_csv<W: Write + ?Sized>(out: &mut W, rows: &[BoundaryRow]) -> io::Result<()> {
    let mut sorted: Vec<&BoundaryRow> = rows.iter().collect();
    sorted.sort_by(|a, b| a.lambda1.total_cmp(&b.lambda1).then(a.source.cmp(&b.source)));
    out.write_all(b"lambda1,lambda2,segment_kind,source\n")?;
    for r in sorted {
        writeln!(
            out,
            "{},{},{},{}",
            fmt_num(r.lambda1),
            fmt_num(r.lambda2),
            r.segment_kind,
            r.source.label()
        )?;
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct DelayRow {
    pub lambda: f64,
    pub q_star: Option<f64>,
    pub delay_analytic: Option<f64>,
    pub delay_simulated: Option<f64>,
    pub ci95: Option<f64>,
    /// `ok`, or why the row has no analytic values.
    pub status: String,
}

pub fn write_delay_csv<W: Write + ?Sized>(out: &mut W, rows: &[DelayRow]) -> io::Result<()> {
    let mut sorted: Vec<&DelayRow> = rows.iter().collect();
    sorted.sort_by(|a, b| a.lambda.total_cmp(&b.lambda));
    out.write_all(b"lambda,q_star,delay_analytic,delay_simulated,ci95,status\n")?;
    for r in sorted {
        writeln!(
            out,
            "{},{},{},{},{},{}",
            fmt_num(r.lambda),
            fmt_opt(r.q_star),
            fmt_opt(r.delay_analytic),
            fmt_opt(r.delay_simulated),
            fmt_opt(r.ci95),
            r.status
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stability::closed_form_boundary;

    #[test]
    fn number_formatting() {
        assert_eq!(fmt_num(0.0), "0");
        assert_eq!(fmt_num(-0.0), "0");
        assert_eq!(fmt_num(0.25), "0.25");
        assert_eq!(fmt_num(1.0 / 3.0), "0.333333333333");
        assert_eq!(fmt_num(2.0 / 3.0 * 100.0), "66.6666666667");
        assert_eq!(fmt_num(123456789012345.0), "123456789012345");
        assert_eq!(fmt_num(-1e-5), "-0.00001");
        assert_eq!(fmt_num(0.1 + 0.2), "0.3");
    }

    #[test]
    fn boundary_csv_is_sorted_with_header() {
        let p = SystemParams::from_stationary(0.6, 0.6, 1.0, 1.0).unwrap();
        let b = closed_form_boundary(&p).unwrap();
        let mut rows = baseline_rows(&p, 4).unwrap();
        rows.extend(controlled_rows(&b, 4));
        let mut buf = Vec::new();
        write_boundary_csv(&mut buf, &rows).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "lambda1,lambda2,segment_kind,source");
        assert_eq!(lines[1], "0,0.6,linear,controlled");
        assert_eq!(lines[2], "0,0.6,linear,tdma");
        assert_eq!(lines[3], "0,0.6,sqrt,uncontrolled");
        assert_eq!(lines.len(), 13);
        assert!(!text.contains('\r'));
    }

    #[test]
    fn delay_csv_leaves_missing_values_empty() {
        let rows = vec![DelayRow {
            lambda: 0.3,
            q_star: None,
            delay_analytic: None,
            delay_simulated: None,
            ci95: None,
            status: "unstable".into(),
        }];
        let mut buf = Vec::new();
        write_delay_csv(&mut buf, &rows).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "lambda,q_star,delay_analytic,delay_simulated,ci95,status\n0.3,,,,,unstable\n"
        );
    }
}
