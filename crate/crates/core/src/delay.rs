//! Average packet delay of the symmetric two-user system without
//! multipacket reception, and the transmission probability minimising it.
//!
//! With attempt probability `r = pi1 * q11` the delay is
//!
//! ```text
//! D(q11) = [(1 - l) - (1 - l/2) r] / [r f11 (1 - r) - l]
//! ```
//!
//! valid while the denominator is positive. The formula assumes channel
//! states that are independent from slot to slot.

use serde::{Deserialize, Serialize};

use crate::error::{Error, FieldError, Result};
use crate::model::SystemParams;

/// Distance from 1 below which the interior optimum snaps to exactly 1.
const SNAP_TO_ONE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SymmetricParams {
    /// Common stationary good-state probability.
    pub pi1: f64,
    /// Common good-state success probability.
    pub f11: f64,
    /// Common arrival rate.
    pub lambda: f64,
}

impl SymmetricParams {
    pub fn new(pi1: f64, f11: f64, lambda: f64) -> Result<Self> {
        let mut errors = Vec::new();
        if !(pi1.is_finite() && pi1 > 0.0 && pi1 <= 1.0) {
            errors.push(FieldError::new("pi1", "pi1 must lie in (0, 1]"));
        }
        if !(f11.is_finite() && f11 > 0.0 && f11 <= 1.0) {
            errors.push(FieldError::new("f11", "f11 must lie in (0, 1]"));
        }
        if !(lambda.is_finite() && (0.0..1.0).contains(&lambda)) {
            errors.push(FieldError::new("lambda", "lambda must lie in [0, 1)"));
        }
        if errors.is_empty() {
            Ok(Self { pi1, f11, lambda })
        } else {
            Err(Error::InvalidParams(errors))
        }
    }

    /// Extracts the symmetric parameters from a system description.
    pub fn from_system(params: &SystemParams, lambda: f64) -> Result<Self> {
        let params = params.checked()?;
        if params.has_mpr() {
            return Err(Error::NotSymmetric("delay analysis requires mpr1 = mpr2 = 0"));
        }
        if params.f11 != params.f12 {
            return Err(Error::NotSymmetric("f11 and f12 differ"));
        }
        if (params.good1() - params.good2()).abs() > 1e-12 {
            return Err(Error::NotSymmetric("channels have different stationary distributions"));
        }
        Self::new(params.good1(), params.f11, lambda)
    }

    pub fn with_lambda(&self, lambda: f64) -> Result<Self> {
        Self::new(self.pi1, self.f11, lambda)
    }

    /// Per-user service rate when both queues are busy: `r f11 (1 - r)`.
    pub fn service_rate(&self, q11: f64) -> f64 {
        let r = self.pi1 * q11;
        r * self.f11 * (1.0 - r)
    }
}

/// Mean delay in slots for transmission probability `q11`.
pub fn average_delay(p: &SymmetricParams, q11: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&q11) {
        return Err(Error::OutOfRange { what: "q11", value: q11, low: 0.0, high: 1.0 });
    }
    let service = p.service_rate(q11);
    let slack = service - p.lambda;
    if slack <= 0.0 {
        return Err(Error::Unstable { lambda: p.lambda, service });
    }
    let r = p.pi1 * q11;
    Ok(((1.0 - p.lambda) - (1.0 - p.lambda / 2.0) * r) / slack)
}

/// Largest stable common arrival rate over all `q11 in [0, 1]`.
pub fn lambda_max(p: &SymmetricParams) -> f64 {
    if p.pi1 >= 0.5 {
        p.f11 / 4.0
    } else {
        p.pi1 * (1.0 - p.pi1) * p.f11
    }
}

/// Arrival rate at which the interior stationary point `p1` crosses 1.
pub fn lambda_star(p: &SymmetricParams) -> f64 {
    let (g, f) = (p.pi1, p.f11);
    let c = 1.0 - 2.0 * g + g * g / 2.0;
    1.0 + f * c - (1.0 - g * g * f + f * f * c * c).sqrt()
}

/// Roots `s1 <= s2` of `pi1^2 f11 q^2 - pi1 f11 q + lambda = 0`; the queues
/// are stable exactly for `s1 < q11 < s2`.
pub fn stability_roots(p: &SymmetricParams) -> Result<(f64, f64)> {
    let disc = 1.0 - 4.0 * p.lambda / p.f11;
    if disc < 0.0 {
        return Err(Error::ComplexRoots { lambda: p.lambda, limit: p.f11 / 4.0 });
    }
    let root = disc.sqrt();
    let scale = 2.0 * p.pi1;
    Ok(((1.0 - root) / scale, (1.0 + root) / scale))
}

/// Stationary points `p1 <= p2` of the delay in `q11`, or `None` when they
/// are complex.
pub fn delay_stationary_points(p: &SymmetricParams) -> Option<(f64, f64)> {
    let l = p.lambda;
    let half = 1.0 - l / 2.0;
    let inner = 2.0 / p.f11 * half * half - (1.0 - l);
    if inner < 0.0 {
        return None;
    }
    let spread = (l / 2.0).sqrt() * inner.sqrt();
    let scale = half * p.pi1;
    Some((((1.0 - l) - spread) / scale, ((1.0 - l) + spread) / scale))
}

/// `p1` computed as the smaller root of the stationary-point quadratic in
/// its expanded form. Agrees with [`delay_stationary_points`] when real.
pub fn lower_stationary_point_quadratic(p: &SymmetricParams) -> Option<f64> {
    let (l, f) = (p.lambda, p.f11);
    // The factor 1/f11 is cancelled into the bracket before rounding; taken
    // literally it leaves a spurious residue near lambda = 0.
    let disc = 4.0 * (1.0 - l).powi(2)
        - 4.0 * (1.0 - l / 2.0) * ((1.0 - l) - l * (1.0 - l / 2.0) / f);
    (disc >= 0.0).then(|| (2.0 * (1.0 - l) - disc.sqrt()) / ((2.0 - l) * p.pi1))
}

/// Delay-optimal transmission probability.
pub fn optimal_q11(p: &SymmetricParams) -> Result<f64> {
    let max = lambda_max(p);
    if p.lambda >= max {
        return Err(Error::OutOfRange { what: "lambda", value: p.lambda, low: 0.0, high: max });
    }
    if p.pi1 <= 0.5 || p.lambda < lambda_star(p) {
        return Ok(1.0);
    }
    let (p1, _) = delay_stationary_points(p).expect("real stationary points below lambda_max");
    if (p1 - 1.0).abs() <= SNAP_TO_ONE {
        Ok(1.0)
    } else {
        Ok(p1.min(1.0))
    }
}

/// Delay of slotted ALOHA that transmits with probability `q` whatever the
/// channel state. A lone transmission succeeds with probability `pi1 f11`.
pub fn uncontrolled_average_delay(p: &SymmetricParams, q: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&q) {
        return Err(Error::OutOfRange { what: "q", value: q, low: 0.0, high: 1.0 });
    }
    let service = q * p.pi1 * p.f11 * (1.0 - q);
    let slack = service - p.lambda;
    if slack <= 0.0 {
        return Err(Error::Unstable { lambda: p.lambda, service });
    }
    Ok(((1.0 - p.lambda) - (1.0 - p.lambda / 2.0) * q) / slack)
}
