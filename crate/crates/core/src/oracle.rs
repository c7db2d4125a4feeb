//! Brute-force counterparts of the closed forms.
//!
//! These evaluate the fixed-policy formulas on a grid of policies, or the
//! delay formula on a grid of transmission probabilities, and share no code
//! with the optimisation results they are used to check.

use serde::{Deserialize, Serialize};

use crate::delay::{average_delay, lambda_max, SymmetricParams};
use crate::error::{Error, Result};
use crate::model::{Policy, SystemParams};
use crate::stability::FixedPolicyRegion;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridPoint {
    pub lambda1: f64,
    pub lambda2: f64,
    /// Grid policy attaining the maximum (first found on ties).
    pub q11: f64,
    pub q12: f64,
}

fn grid(n: usize) -> impl Iterator<Item = f64> + Clone {
    (0..=n).map(move |i| i as f64 / n as f64)
}

/// Maximum over a `(grid_n + 1)^2` policy grid (endpoints included, bad-state
/// transmission off) of the fixed-policy boundary, at `lambda1_samples`
/// evenly spaced points of `[0, pi1(1) f11)`.
pub fn grid_union_boundary(
    params: &SystemParams,
    grid_n: usize,
    lambda1_samples: usize,
) -> Result<Vec<GridPoint>> {
    let params = params.checked()?;
    if grid_n < 100 {
        return Err(Error::OutOfRange {
            what: "grid_n",
            value: grid_n as f64,
            low: 100.0,
            high: f64::INFINITY,
        });
    }
    let regions: Vec<(f64, f64, FixedPolicyRegion)> = grid(grid_n)
        .flat_map(|q11| grid(grid_n).map(move |q12| (q11, q12)))
        .map(|(q11, q12)| (q11, q12, FixedPolicyRegion::compute(&params, &Policy::good_only(q11, q12))))
        .collect();

    let lambda1_max = params.good1() * params.f11;
    let sample = |i: usize| {
        let lambda1 = lambda1_max * i as f64 / lambda1_samples as f64;
        let mut best = GridPoint { lambda1, lambda2: 0.0, q11: 0.0, q12: 0.0 };
        for (q11, q12, region) in &regions {
            let y = region.boundary_lambda2(lambda1);
            if y > best.lambda2 {
                best = GridPoint { lambda1, lambda2: y, q11: *q11, q12: *q12 };
            }
        }
        best
    };

    #[cfg(feature = "parallel")]
    let points = {
        use rayon::prelude::*;
        (0..lambda1_samples).into_par_iter().map(sample).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let points = (0..lambda1_samples).map(sample).collect();
    Ok(points)
}

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Golden-section minimisation of a unimodal `f` on `[lo, hi]` until the
/// bracket is narrower than `tol`.
pub fn golden_section_min<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    let mut a = hi - INV_PHI * (hi - lo);
    let mut b = lo + INV_PHI * (hi - lo);
    let (mut fa, mut fb) = (f(a), f(b));
    while hi - lo > tol {
        if fa <= fb {
            hi = b;
            b = a;
            fb = fa;
            a = hi - INV_PHI * (hi - lo);
            fa = f(a);
        } else {
            lo = a;
            a = b;
            fa = fb;
            b = lo + INV_PHI * (hi - lo);
            fb = f(b);
        }
    }
    let mid = 0.5 * (lo + hi);
    // The bracket may have collapsed onto an endpoint of the original range.
    [mid, lo, hi]
        .into_iter()
        .min_by(|x, y| f(*x).total_cmp(&f(*y)))
        .unwrap()
}

/// Numerically minimises the symmetric average delay over `q11 in [0, 1]`.
///
/// Scans `q_grid_n + 1` evenly spaced probabilities, keeps the stable ones,
/// then refines around the best with golden-section search to `1e-6`.
pub fn brute_force_optimal_q(p: &SymmetricParams, q_grid_n: usize) -> Result<(f64, f64)> {
    let max = lambda_max(p);
    if p.lambda >= max {
        return Err(Error::OutOfRange { what: "lambda", value: p.lambda, low: 0.0, high: max });
    }
    let n = q_grid_n.max(2);
    let delay = |q: f64| average_delay(p, q).unwrap_or(f64::INFINITY);

    let best = (0..=n)
        .map(|i| i as f64 / n as f64)
        .map(|q| (q, delay(q)))
        .filter(|(_, d)| d.is_finite())
        .min_by(|a, b| a.1.total_cmp(&b.1));

    let (lo, hi) = match best {
        Some((q, _)) => {
            let step = 1.0 / n as f64;
            ((q - step).max(0.0), (q + step).min(1.0))
        }
        None => {
            // Stable interval narrower than the grid spacing: bracket it from
            // the stability roots directly.
            let scale = 2.0 * p.pi1;
            let root = (1.0 - 4.0 * p.lambda / p.f11).max(0.0).sqrt();
            (((1.0 - root) / scale).clamp(0.0, 1.0), ((1.0 + root) / scale).clamp(0.0, 1.0))
        }
    };
    let q = golden_section_min(delay, lo, hi, 1e-6);
    let d = delay(q);
    if !d.is_finite() {
        return Err(Error::Unstable { lambda: p.lambda, service: p.service_rate(q) });
    }
    Ok((q, d))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stability::{closed_form_boundary, ShapeClass};

    fn sys(g1: f64, g2: f64) -> SystemParams {
        SystemParams::from_stationary(g1, g2, 1.0, 1.0).unwrap()
    }

    fn grid_at(params: &SystemParams, lambda1: f64) -> GridPoint {
        // One sample at the requested point: choose the sample count so that
        // sample index 1 lands on lambda1.
        let max = params.good1() * params.f11;
        let n = (max / lambda1).round() as usize;
        let pts = grid_union_boundary(params, 400, n).unwrap();
        assert!((pts[1].lambda1 - lambda1).abs() < 1e-12);
        pts[1]
    }

    #[test]
    fn three_piece_midpoint() {
        let params = sys(0.6, 0.6);
        let p = grid_at(&params, 0.2);
        let exact = (1.0 - 0.2f64.sqrt()).powi(2);
        assert!((closed_form_boundary(&params).unwrap().value(0.2).unwrap() - exact).abs() < 1e-12);
        assert!((p.lambda2 - exact).abs() < 5e-3);
    }

    #[test]
    fn polygon_maximum_attained_at_full_transmission() {
        let params = sys(0.4, 0.4);
        let p = grid_at(&params, 0.10);
        let full = FixedPolicyRegion::compute(&params, &Policy::good_only(1.0, 1.0));
        assert!((full.boundary_lambda2(0.10) - p.lambda2).abs() < 1e-12);
        let b = closed_form_boundary(&params).unwrap();
        assert_eq!(b.shape_class, ShapeClass::Polygon);
        assert!((p.lambda2 - b.value(0.10).unwrap()).abs() < 5e-3);
    }

    #[test]
    fn zero_lambda1_gives_single_user_rate() {
        let params = sys(0.6, 0.7);
        let pts = grid_union_boundary(&params, 100, 10).unwrap();
        assert_eq!(pts[0].lambda1, 0.0);
        assert!((pts[0].lambda2 - 0.7).abs() < 1e-15);
        assert_eq!(pts[0].q12, 1.0);
    }

    #[test]
    fn grid_is_monotone() {
        let pts = grid_union_boundary(&sys(0.7, 0.55).with_mpr(0.2, 0.3).unwrap(), 100, 50).unwrap();
        for w in pts.windows(2) {
            assert!(w[1].lambda2 <= w[0].lambda2 + 1e-15);
        }
    }

    #[test]
    fn rejects_coarse_grid() {
        assert!(grid_union_boundary(&sys(0.5, 0.5), 99, 10).is_err());
    }

    #[test]
    fn golden_section_finds_parabola_minimum() {
        let x = golden_section_min(|x| (x - 0.3).powi(2), 0.0, 1.0, 1e-9);
        assert!((x - 0.3).abs() < 1e-8);
        let x = golden_section_min(|x| -x, 0.0, 1.0, 1e-9);
        assert!((x - 1.0).abs() < 1e-8);
    }

    #[test]
    fn brute_force_examples() {
        let (q, _) = brute_force_optimal_q(&SymmetricParams::new(0.6, 1.0, 0.2).unwrap(), 1000).unwrap();
        assert!((q - 0.9512).abs() < 1e-3);
        let (q, _) = brute_force_optimal_q(&SymmetricParams::new(0.4, 1.0, 0.1).unwrap(), 1000).unwrap();
        assert!((q - 1.0).abs() < 1e-5);
        let (q, _) = brute_force_optimal_q(&SymmetricParams::new(0.6, 1.0, 1e-4).unwrap(), 1000).unwrap();
        assert!((q - 1.0).abs() < 1e-5);
        assert!(brute_force_optimal_q(&SymmetricParams::new(0.6, 1.0, 0.25).unwrap(), 1000).is_err());
    }
}
