//! Stability regions of the two interacting queues.
//!
//! A fixed transmission policy is analysed through two dominant systems:
//! in `S1` user 1 transmits dummy packets whenever its queue is empty, in
//! `S2` user 2 does. The region of the policy is the union of the two.
//! Optimising the policy over `(q11, q12)` gives a closed-form boundary
//! made of at most three pieces: two straight lines near the axes and a
//! square-root curve between them, or two straight lines (a polygon) when
//! the channels are bad often enough.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{ArrivalRates, Policy, SystemParams};

/// Tolerance used to classify a rate pair as lying on a boundary.
pub const CLASSIFY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Classification {
    Stable,
    Unstable,
    Boundary,
}

/// Constraint `rate < intercept - slope * other_rate`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearConstraint {
    pub intercept: f64,
    pub slope: f64,
}

impl LinearConstraint {
    fn margin(&self, rate: f64, other: f64) -> f64 {
        self.intercept - self.slope * other - rate
    }
}

/// Stability region of one fixed policy, as the union of both dominant systems.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FixedPolicyRegion {
    /// Service rate of user 1 when user 2 is saturated.
    pub mu1_sat: f64,
    /// Service rate of user 2 when user 1 is saturated.
    pub mu2_sat: f64,
    /// In `S1`: `lambda1 < intercept - slope * lambda2` (together with `lambda2 < mu2_sat`).
    pub s1_user1: LinearConstraint,
    /// In `S2`: `lambda2 < intercept - slope * lambda1` (together with `lambda1 < mu1_sat`).
    pub s2_user2: LinearConstraint,
}

impl FixedPolicyRegion {
    /// Computes the region for parameters and a policy that are already
    /// validated, with `q01 = q02 = 0` whenever multipacket reception is on.
    pub(crate) fn compute(params: &SystemParams, policy: &Policy) -> Self {
        let (g1, g2) = (params.good1(), params.good2());
        let peak1 = g1 * policy.q11 * params.f11;
        let peak2 = g2 * policy.q12 * params.f12;
        // Fraction of a user's solo success destroyed when the other transmits.
        let interference1 = (1.0 - g2) * policy.q02 + g2 * policy.q12 * params.collision_loss1();
        let interference2 = (1.0 - g1) * policy.q01 + g1 * policy.q11 * params.collision_loss2();
        let mu1 = peak1 * (1.0 - interference1);
        let mu2 = peak2 * (1.0 - interference2);
        let slope1 = if mu2 > 0.0 { peak1 * interference1 / mu2 } else { 0.0 };
        let slope2 = if mu1 > 0.0 { peak2 * interference2 / mu1 } else { 0.0 };
        Self {
            mu1_sat: mu1,
            mu2_sat: mu2,
            s1_user1: LinearConstraint { intercept: peak1, slope: slope1 },
            s2_user2: LinearConstraint { intercept: peak2, slope: slope2 },
        }
    }

    /// True when neither user can ever be served while the other is saturated.
    pub fn is_degenerate(&self) -> bool {
        self.mu1_sat <= 0.0 && self.mu2_sat <= 0.0
    }

    /// Supremum of stable `lambda2` at `lambda1`, or 0 when no positive
    /// `lambda2` is stable.
    pub fn boundary_lambda2(&self, lambda1: f64) -> f64 {
        let mut best = 0.0f64;
        if self.mu2_sat > 0.0 && lambda1 < self.s1_user1.intercept {
            let s1 = if self.s1_user1.slope > 0.0 {
                ((self.s1_user1.intercept - lambda1) / self.s1_user1.slope).min(self.mu2_sat)
            } else {
                self.mu2_sat
            };
            best = best.max(s1);
        }
        if lambda1 < self.mu1_sat {
            best = best.max(self.s2_user2.intercept - self.s2_user2.slope * lambda1);
        }
        best
    }

    fn margins(&self, rates: &ArrivalRates) -> (f64, f64) {
        let (l1, l2) = (rates.lambda1, rates.lambda2);
        let s1 = (self.mu2_sat - l2).min(self.s1_user1.margin(l1, l2));
        let s2 = (self.mu1_sat - l1).min(self.s2_user2.margin(l2, l1));
        (s1, s2)
    }
}

pub fn fixed_policy_region(params: &SystemParams, policy: &Policy) -> Result<FixedPolicyRegion> {
    let mut errors = params.validate();
    errors.extend(policy.validate());
    if !errors.is_empty() {
        return Err(Error::InvalidParams(errors));
    }
    if params.has_mpr() && (policy.q01 > 0.0 || policy.q02 > 0.0) {
        return Err(Error::Unsupported(
            "multipacket reception with bad-state transmissions (q01 or q02 > 0)",
        ));
    }
    Ok(FixedPolicyRegion::compute(params, policy))
}

fn classify_margin(margin: f64) -> Classification {
    if margin > CLASSIFY_TOL {
        Classification::Stable
    } else if margin >= -CLASSIFY_TOL {
        Classification::Boundary
    } else {
        Classification::Unstable
    }
}

/// Stable when either dominant system holds strictly.
pub fn is_stable_fixed(region: &FixedPolicyRegion, rates: &ArrivalRates) -> Classification {
    let (s1, s2) = region.margins(rates);
    classify_margin(s1.max(s2))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum SegmentKind {
    /// `lambda2 = intercept + slope * lambda1`
    Linear { slope: f64, intercept: f64 },
    /// `sqrt(a1 * lambda1) + sqrt(a2 * lambda2) = 1`
    SqrtCurve { a1: f64, a2: f64 },
}

impl SegmentKind {
    pub fn label(&self) -> &'static str {
        match self {
            SegmentKind::Linear { .. } => "linear",
            SegmentKind::SqrtCurve { .. } => "sqrt",
        }
    }

    pub fn eval(&self, lambda1: f64) -> f64 {
        match *self {
            SegmentKind::Linear { slope, intercept } => intercept + slope * lambda1,
            SegmentKind::SqrtCurve { a1, a2 } => {
                let r = 1.0 - (a1 * lambda1).sqrt();
                r * r / a2
            }
        }
    }
}

/// One piece of the boundary, valid on `start <= lambda1 < end`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub kind: SegmentKind,
    pub start: f64,
    pub end: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ShapeClass {
    ThreePiece,
    Polygon,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionBoundary {
    pub segments: Vec<Segment>,
    pub shape_class: ShapeClass,
    /// Value of the shape test; below 1 the boundary has a curved middle piece.
    pub shape_value: f64,
    /// User 1's single-user saturated throughput; the boundary reaches 0 here.
    pub lambda1_max: f64,
}

impl RegionBoundary {
    pub fn value(&self, lambda1: f64) -> Result<f64> {
        boundary_value(self, lambda1)
    }

    pub fn segment_at(&self, lambda1: f64) -> Option<&Segment> {
        self.segments
            .iter()
            .find(|s| s.start <= lambda1 && lambda1 < s.end)
    }
}

/// `pi0(1) + pi0(2) + pi1(2) mpr1/f11 + pi1(1) mpr2/f12`.
pub fn shape_value(params: &SystemParams) -> f64 {
    let (g1, g2) = (params.good1(), params.good2());
    (1.0 - g1) + (1.0 - g2) + g2 * params.mpr1 / params.f11 + g1 * params.mpr2 / params.f12
}

/// Boundary of the union of all fixed-policy regions.
pub fn closed_form_boundary(params: &SystemParams) -> Result<RegionBoundary> {
    let params = params.checked()?;
    let (g1, g2) = (params.good1(), params.good2());
    let (f11, f12) = (params.f11, params.f12);
    let loss1 = params.collision_loss1();
    let loss2 = params.collision_loss2();
    let lambda1_max = g1 * f11;
    let shape = shape_value(&params);

    // Line through (0, g2 f12): user 2 always transmits in its good state.
    let near_axis2 = SegmentKind::Linear {
        slope: -g2 * f12 * loss2 / (f11 * (1.0 - g2 * loss1)),
        intercept: g2 * f12,
    };
    // Line through (g1 f11, 0): user 1 always transmits in its good state.
    let intercept1 = f12 * (1.0 - g1 * loss2) / loss1;
    let near_axis1 = SegmentKind::Linear { slope: -intercept1 / lambda1_max, intercept: intercept1 };

    // Empty pieces may carry non-finite coefficients; they are dropped below.
    let (shape_class, pieces) = if shape < 1.0 {
        let x1 = f11 * (1.0 - g2 * loss1).powi(2) / loss2;
        let x2 = g1 * g1 * f11 * loss2;
        let curve = SegmentKind::SqrtCurve { a1: loss2 / f11, a2: loss1 / f12 };
        (
            ShapeClass::ThreePiece,
            vec![(0.0, x1, near_axis2), (x1, x2, curve), (x2, lambda1_max, near_axis1)],
        )
    } else {
        let corner = g1 * f11 * (1.0 - g2 * loss1);
        (
            ShapeClass::Polygon,
            vec![(0.0, corner, near_axis2), (corner, lambda1_max, near_axis1)],
        )
    };

    let segments = pieces
        .into_iter()
        .filter(|(start, end, _)| start < end)
        .map(|(start, end, kind)| Segment { kind, start, end })
        .collect();

    Ok(RegionBoundary { segments, shape_class, shape_value: shape, lambda1_max })
}

pub fn boundary_value(boundary: &RegionBoundary, lambda1: f64) -> Result<f64> {
    match boundary.segment_at(lambda1) {
        Some(seg) if lambda1 >= 0.0 => Ok(seg.kind.eval(lambda1).max(0.0)),
        _ => Err(Error::OutOfRange {
            what: "lambda1",
            value: lambda1,
            low: 0.0,
            high: boundary.lambda1_max,
        }),
    }
}

fn check_rates(rates: &ArrivalRates) -> Result<()> {
    let errors = rates.validate();
    if errors.is_empty() {
        Ok(())
    } else {
        Err(Error::InvalidParams(errors))
    }
}

/// Membership in the stability region optimised over all policies.
pub fn is_in_region(params: &SystemParams, rates: &ArrivalRates) -> Result<Classification> {
    check_rates(rates)?;
    let boundary = closed_form_boundary(params)?;
    let (l1, l2) = (rates.lambda1, rates.lambda2);
    if l1 >= boundary.lambda1_max {
        let on_corner = l1 - boundary.lambda1_max <= CLASSIFY_TOL && l2 <= CLASSIFY_TOL;
        return Ok(if on_corner {
            Classification::Boundary
        } else {
            Classification::Unstable
        });
    }
    let edge = boundary_value(&boundary, l1)?;
    Ok(classify_margin(edge - l2))
}

/// Policy whose fixed-policy region reaches the optimal boundary at `lambda1`.
///
/// Defined without multipacket reception only.
pub fn boundary_achieving_policy(params: &SystemParams, lambda1: f64) -> Result<Policy> {
    if params.has_mpr() {
        return Err(Error::Unsupported(
            "boundary-achieving policy with multipacket reception",
        ));
    }
    let boundary = closed_form_boundary(params)?;
    let segment = boundary.segment_at(lambda1).filter(|_| lambda1 >= 0.0).ok_or(
        Error::OutOfRange {
            what: "lambda1",
            value: lambda1,
            low: 0.0,
            high: boundary.lambda1_max,
        },
    )?;
    let (g1, g2, f11) = (params.good1(), params.good2(), params.f11);
    let first = segment.start == 0.0;
    let policy = match (boundary.shape_class, segment.kind) {
        (ShapeClass::Polygon, _) => Policy::good_only(1.0, 1.0),
        (ShapeClass::ThreePiece, SegmentKind::SqrtCurve { .. }) => {
            // Interior optimum in q12; q11 makes user 1's saturated rate
            // equal to lambda1 so the region's corner lands on the curve.
            let root = (lambda1 / f11).sqrt();
            Policy::good_only((root / g1).min(1.0), ((1.0 - root) / g2).clamp(0.0, 1.0))
        }
        (ShapeClass::ThreePiece, _) if first => Policy::good_only(1.0, 1.0),
        (ShapeClass::ThreePiece, _) => {
            let q12 = (1.0 - lambda1 / (g1 * f11)) / g2;
            Policy::good_only(1.0, q12.clamp(0.0, 1.0))
        }
    };
    Ok(policy)
}

fn single_user_corners(params: &SystemParams, lambda1: f64) -> Result<(f64, f64)> {
    let params = params.checked()?;
    let c1 = params.good1() * params.f11;
    let c2 = params.good2() * params.f12;
    if !(0.0..=c1).contains(&lambda1) {
        return Err(Error::OutOfRange { what: "lambda1", value: lambda1, low: 0.0, high: c1 });
    }
    Ok((c1, c2))
}

/// Time-sharing line between the two single-user saturated throughputs.
pub fn tdma_boundary(params: &SystemParams, lambda1: f64) -> Result<f64> {
    let (c1, c2) = single_user_corners(params, lambda1)?;
    if c1 == 0.0 {
        return Ok(c2);
    }
    Ok((c2 * (1.0 - lambda1 / c1)).max(0.0))
}

/// Slotted ALOHA whose transmission probability ignores the channel state:
/// `sqrt(lambda1 / c1) + sqrt(lambda2 / c2) = 1`.
pub fn uncontrolled_boundary(params: &SystemParams, lambda1: f64) -> Result<f64> {
    let (c1, c2) = single_user_corners(params, lambda1)?;
    if c1 == 0.0 {
        return Ok(c2);
    }
    let r = 1.0 - (lambda1 / c1).sqrt();
    Ok(c2 * r * r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sys(g1: f64, g2: f64) -> SystemParams {
        SystemParams::from_stationary(g1, g2, 1.0, 1.0).unwrap()
    }

    // No-multipacket boundary written out directly in stationary probabilities.
    fn no_mpr_boundary(g1: f64, g2: f64, f11: f64, f12: f64, x: f64) -> f64 {
        let (b1, b2) = (1.0 - g1, 1.0 - g2);
        if b1 + b2 < 1.0 {
            if x < b2 * b2 * f11 {
                g2 * f12 - g2 * f12 / (b2 * f11) * x
            } else if x < g1 * g1 * f11 {
                let r = 1.0 - (x / f11).sqrt();
                f12 * r * r
            } else {
                b1 * f12 - b1 * f12 / (g1 * f11) * x
            }
        } else if x < g1 * b2 * f11 {
            g2 * f12 - g2 * f12 / (b2 * f11) * x
        } else {
            b1 * f12 - b1 * f12 / (g1 * f11) * x
        }
    }

    #[test]
    fn fixed_policy_saturated_rates() {
        let r = fixed_policy_region(&sys(0.6, 0.6), &Policy::good_only(1.0, 1.0)).unwrap();
        assert!((r.mu1_sat - 0.24).abs() < 1e-12);
        assert!((r.mu2_sat - 0.24).abs() < 1e-12);

        let r = fixed_policy_region(&sys(0.3, 0.8), &Policy::good_only(0.0, 0.0)).unwrap();
        assert_eq!((r.mu1_sat, r.mu2_sat), (0.0, 0.0));
        assert!(r.is_degenerate());
    }

    #[test]
    fn fixed_policy_matches_no_mpr_saturated_form() {
        let p = sys(0.7, 0.45);
        let pol = Policy::good_only(0.8, 0.6);
        let r = fixed_policy_region(&p, &pol).unwrap();
        assert!((r.mu2_sat - 0.45 * 0.6 * (1.0 - 0.7 * 0.8)).abs() < 1e-12);
    }

    #[test]
    fn perfect_mpr_decouples_users() {
        let p = sys(0.6, 0.7).with_mpr(1.0, 1.0).unwrap();
        let r = fixed_policy_region(&p, &Policy::good_only(1.0, 1.0)).unwrap();
        assert!((r.mu2_sat - 0.7).abs() < 1e-12);
        assert!((r.mu1_sat - 0.6).abs() < 1e-12);
        assert_eq!(r.s1_user1.slope, 0.0);
    }

    #[test]
    fn mpr_with_bad_state_transmission_unsupported() {
        let p = sys(0.6, 0.7).with_mpr(0.3, 0.3).unwrap();
        let pol = Policy { q01: 0.1, ..Policy::good_only(1.0, 1.0) };
        assert!(matches!(fixed_policy_region(&p, &pol), Err(Error::Unsupported(_))));
    }

    #[test]
    fn fixed_policy_classification() {
        let r = fixed_policy_region(&sys(0.6, 0.6), &Policy::good_only(1.0, 1.0)).unwrap();
        // S1: lambda1 bound 0.6 (1 - (0.1 / 0.24) 0.6) = 0.45.
        assert!((r.s1_user1.intercept - r.s1_user1.slope * 0.1 - 0.45).abs() < 1e-12);
        assert_eq!(is_stable_fixed(&r, &ArrivalRates::new(0.1, 0.1)), Classification::Stable);
        // Outside S2 (lambda1 > mu1) but inside S1 (lambda2 < mu2, lambda1 < 0.45).
        assert_eq!(is_stable_fixed(&r, &ArrivalRates::new(0.3, 0.1)), Classification::Stable);
        assert_eq!(is_stable_fixed(&r, &ArrivalRates::new(0.3, 0.25)), Classification::Unstable);
        assert_eq!(is_stable_fixed(&r, &ArrivalRates::new(0.0, 0.0)), Classification::Stable);
        assert_eq!(is_stable_fixed(&r, &ArrivalRates::new(0.24, 0.24)), Classification::Boundary);
    }

    #[test]
    fn three_piece_example() {
        let b = closed_form_boundary(&sys(0.6, 0.6)).unwrap();
        assert_eq!(b.shape_class, ShapeClass::ThreePiece);
        assert!((b.shape_value - 0.8).abs() < 1e-12);
        assert_eq!(b.segments.len(), 3);
        assert!((b.segments[1].start - 0.16).abs() < 1e-12);
        assert!((b.segments[1].end - 0.36).abs() < 1e-12);
        assert!((b.value(0.0).unwrap() - 0.6).abs() < 1e-12);
        assert!((b.value(0.25).unwrap() - 0.25).abs() < 1e-12);
        assert!((b.value(0.5).unwrap() - (0.4 - 0.4 / 0.6 * 0.5)).abs() < 1e-12);
        assert!(matches!(b.value(0.6), Err(Error::OutOfRange { .. })));
        assert!(b.value(-0.1).is_err());
    }

    #[test]
    fn polygon_example() {
        let b = closed_form_boundary(&sys(0.4, 0.4)).unwrap();
        assert_eq!(b.shape_class, ShapeClass::Polygon);
        assert_eq!(b.segments.len(), 2);
        let corner = b.segments[0].end;
        assert!((corner - 0.24).abs() < 1e-12);
        assert!((b.value(corner).unwrap() - 0.24).abs() < 1e-12);
    }

    #[test]
    fn half_half_is_tdma_line() {
        let p = sys(0.5, 0.5);
        let b = closed_form_boundary(&p).unwrap();
        assert_eq!(b.shape_class, ShapeClass::Polygon);
        for i in 0..100 {
            let x = 0.5 * i as f64 / 100.0;
            assert!((b.value(x).unwrap() - (0.5 - x)).abs() < 1e-12);
            assert!((tdma_boundary(&p, x).unwrap() - (0.5 - x)).abs() < 1e-12);
        }
    }

    #[test]
    fn region_membership() {
        let p = sys(0.6, 0.6);
        assert_eq!(is_in_region(&p, &ArrivalRates::new(0.2, 0.2)).unwrap(), Classification::Stable);
        assert_eq!(is_in_region(&p, &ArrivalRates::new(0.25, 0.25)).unwrap(), Classification::Boundary);
        assert_eq!(is_in_region(&p, &ArrivalRates::new(0.6, 0.01)).unwrap(), Classification::Unstable);
        assert_eq!(is_in_region(&p, &ArrivalRates::new(0.6, 0.0)).unwrap(), Classification::Boundary);
        assert!(is_in_region(&p, &ArrivalRates::new(f64::NAN, 0.0)).is_err());
    }

    #[test]
    fn achieving_policy_examples() {
        let p = sys(0.6, 0.6);
        let pol = boundary_achieving_policy(&p, 0.25).unwrap();
        assert!((pol.q12 - 0.5 / 0.6).abs() < 1e-12);
        assert!((pol.q11 - 0.5 / 0.6).abs() < 1e-12);
        let r = fixed_policy_region(&p, &pol).unwrap();
        assert!((r.mu1_sat - 0.25).abs() < 1e-12);
        assert!((r.boundary_lambda2(0.25 - 1e-12) - 0.25).abs() < 1e-9);

        assert_eq!(boundary_achieving_policy(&p, 0.05).unwrap().q12, 1.0);

        let poly = sys(0.4, 0.4);
        for x in [0.0, 0.1, 0.2, 0.3, 0.39] {
            assert_eq!(boundary_achieving_policy(&poly, x).unwrap(), Policy::good_only(1.0, 1.0));
        }
        assert!(boundary_achieving_policy(&p, 0.6).is_err());
        let mpr = p.with_mpr(0.2, 0.2).unwrap();
        assert!(matches!(boundary_achieving_policy(&mpr, 0.1), Err(Error::Unsupported(_))));
    }

    #[test]
    fn baselines() {
        let p = sys(0.6, 0.6);
        assert!((tdma_boundary(&p, 0.3).unwrap() - 0.3).abs() < 1e-12);
        assert!((uncontrolled_boundary(&p, 0.15).unwrap() - 0.15).abs() < 1e-12);
        assert_eq!(uncontrolled_boundary(&p, 0.0).unwrap(), 0.6);
        assert!(tdma_boundary(&p, 0.7).is_err());
        assert!(uncontrolled_boundary(&p, -0.01).is_err());
    }

    #[test]
    fn polygon_edge_cases_do_not_produce_nan() {
        // Perfect multipacket reception for user 1 collapses the second piece.
        let p = sys(1.0, 0.3).with_mpr(1.0, 0.0).unwrap();
        let b = closed_form_boundary(&p).unwrap();
        for s in &b.segments {
            assert!(s.kind.eval(s.start).is_finite());
        }
        // Perfect reception for user 2 keeps user 2 flat.
        let p = sys(0.7, 0.8).with_mpr(0.0, 1.0).unwrap();
        let b = closed_form_boundary(&p).unwrap();
        assert!((b.value(0.1).unwrap() - 0.8).abs() < 1e-12);
    }

    fn params_strategy() -> impl Strategy<Value = (f64, f64, f64, f64, f64, f64)> {
        (0.02f64..1.0, 0.02f64..1.0, 0.05f64..=1.0, 0.05f64..=1.0, 0.0f64..1.0, 0.0f64..1.0)
    }

    proptest! {
        #[test]
        fn reduces_without_mpr((g1, g2, f11, f12, _, _) in params_strategy(), t in 0.0f64..1.0) {
            let p = SystemParams::from_stationary(g1, g2, f11, f12).unwrap();
            let b = closed_form_boundary(&p).unwrap();
            let x = t * b.lambda1_max;
            prop_assert!((b.value(x).unwrap() - no_mpr_boundary(g1, g2, f11, f12, x)).abs() <= 1e-12);
        }

        #[test]
        fn boundary_continuous_and_monotone((g1, g2, f11, f12, m1, m2) in params_strategy()) {
            let p = SystemParams::from_stationary(g1, g2, f11, f12).unwrap()
                .with_mpr(m1 * f11, m2 * f12).unwrap();
            let b = closed_form_boundary(&p).unwrap();
            prop_assert!((b.segments[0].start).abs() == 0.0);
            prop_assert!((b.segments.last().unwrap().end - b.lambda1_max).abs() == 0.0);
            for w in b.segments.windows(2) {
                prop_assert_eq!(w[0].end, w[1].start);
                let joint = w[0].end;
                prop_assert!((w[0].kind.eval(joint) - w[1].kind.eval(joint)).abs() <= 1e-9);
            }
            let mut prev = f64::INFINITY;
            for i in 0..1000 {
                let v = b.value(b.lambda1_max * i as f64 / 1000.0).unwrap();
                prop_assert!(v <= prev + 1e-12);
                prev = v;
            }
        }

        #[test]
        fn controlled_contains_uncontrolled((g1, g2, f11, f12, _, _) in params_strategy(), t in 0.0f64..1.0) {
            let p = SystemParams::from_stationary(g1, g2, f11, f12).unwrap();
            let b = closed_form_boundary(&p).unwrap();
            let x = t * b.lambda1_max;
            prop_assert!(b.value(x).unwrap() + 1e-12 >= uncontrolled_boundary(&p, x).unwrap());
        }

        #[test]
        fn bad_state_transmissions_never_help(
            (g1, g2, f11, f12, _, _) in params_strategy(),
            q11 in 0.0f64..=1.0, q12 in 0.0f64..=1.0,
            q01 in 0.01f64..=1.0, q02 in 0.01f64..=1.0,
            l1 in 0.0f64..0.5, l2 in 0.0f64..0.5,
        ) {
            let p = SystemParams::from_stationary(g1, g2, f11, f12).unwrap();
            let with_q0 = fixed_policy_region(&p, &Policy { q01, q11, q02, q12 }).unwrap();
            let without = fixed_policy_region(&p, &Policy::good_only(q11, q12)).unwrap();
            let rates = ArrivalRates::new(l1, l2);
            if is_stable_fixed(&with_q0, &rates) == Classification::Stable {
                prop_assert_eq!(is_stable_fixed(&without, &rates), Classification::Stable);
            }
        }

        #[test]
        fn achieving_policy_touches_boundary((g1, g2, f11, f12, _, _) in params_strategy(), t in 0.0f64..0.999) {
            let p = SystemParams::from_stationary(g1, g2, f11, f12).unwrap();
            let b = closed_form_boundary(&p).unwrap();
            let x = t * b.lambda1_max;
            let y = b.value(x).unwrap();
            let pol = boundary_achieving_policy(&p, x).unwrap();
            let r = fixed_policy_region(&p, &pol).unwrap();
            let eps = 1e-6;
            let inside = ArrivalRates::new(x * (1.0 - eps), y * (1.0 - eps));
            let outside = ArrivalRates::new(x * (1.0 + eps), y * (1.0 + eps));
            prop_assert_eq!(is_stable_fixed(&r, &inside), Classification::Stable);
            prop_assert_eq!(is_stable_fixed(&r, &outside), Classification::Unstable);
        }
    }
}
