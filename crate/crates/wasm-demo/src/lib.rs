//! Browser bindings for the demo page in `www/`. Each export takes plain
//! numbers and returns a JSON string for the page to plot.

use serde::Serialize;
use wasm_bindgen::prelude::*;

use ge_aloha::delay::{
    average_delay, lambda_max, lambda_star, optimal_q11, uncontrolled_average_delay, SymmetricParams,
};
use ge_aloha::export::lambda1_samples;
use ge_aloha::model::{ArrivalRates, Policy, SystemParams};
use ge_aloha::sim::{self, SimConfig, StabilityVerdict, TraceOptions};
use ge_aloha::stability::{
    boundary_achieving_policy, closed_form_boundary, fixed_policy_region, is_in_region, tdma_boundary,
    uncontrolled_boundary, Classification, ShapeClass,
};

#[derive(Serialize)]
struct RegionCurves {
    shape_class: &'static str,
    shape_value: f64,
    lambda1_max: f64,
    controlled: Vec<[f64; 2]>,
    tdma: Vec<[f64; 2]>,
    uncontrolled: Vec<[f64; 2]>,
    /// Start of each boundary piece along `lambda1`.
    breakpoints: Vec<f64>,
}

pub fn region_curves_json(
    pi1: f64,
    pi2: f64,
    f11: f64,
    f12: f64,
    mpr1: f64,
    mpr2: f64,
    samples: usize,
) -> Result<String, String> {
    let params = SystemParams::from_stationary(pi1, pi2, f11, f12)
        .and_then(|p| p.with_mpr(mpr1, mpr2))
        .map_err(|e| e.to_string())?;
    let boundary = closed_form_boundary(&params).map_err(|e| e.to_string())?;
    let samples = samples.clamp(2, 2000);
    let mut xs: Vec<f64> = lambda1_samples(boundary.lambda1_max, samples).collect();
    xs.push(boundary.lambda1_max);

    let mut controlled: Vec<[f64; 2]> = xs[..samples].iter().map(|&x| [x, boundary.value(x).unwrap_or(0.0)]).collect();
    controlled.push([boundary.lambda1_max, 0.0]);
    let curve = |f: fn(&SystemParams, f64) -> ge_aloha::Result<f64>| {
        xs.iter().map(|&x| [x, f(&params, x).unwrap_or(0.0)]).collect::<Vec<_>>()
    };
    let out = RegionCurves {
        shape_class: match boundary.shape_class {
            ShapeClass::ThreePiece => "ThreePiece",
            ShapeClass::Polygon => "Polygon",
        },
        shape_value: boundary.shape_value,
        lambda1_max: boundary.lambda1_max,
        controlled,
        tdma: curve(tdma_boundary),
        uncontrolled: curve(uncontrolled_boundary),
        breakpoints: boundary.segments.iter().map(|s| s.start).collect(),
    };
    Ok(serde_json::to_string(&out).expect("curves serialize"))
}

#[derive(Serialize)]
struct DelayPoint {
    lambda: f64,
    q_star: f64,
    delay: f64,
    /// Best delay when the transmission probability ignores the channel.
    uncontrolled: Option<f64>,
}

#[derive(Serialize)]
struct DelayCurve {
    lambda_max: f64,
    lambda_star: f64,
    points: Vec<DelayPoint>,
}

fn best_uncontrolled(p: &SymmetricParams) -> Option<f64> {
    (1..=2000)
        .filter_map(|i| uncontrolled_average_delay(p, i as f64 / 2000.0).ok())
        .min_by(f64::total_cmp)
}

pub fn delay_curve_json(pi1: f64, f11: f64, points: usize) -> Result<String, String> {
    let base = SymmetricParams::new(pi1, f11, 0.0).map_err(|e| e.to_string())?;
    let max = lambda_max(&base);
    let points = points.clamp(2, 500);
    let mut out = Vec::with_capacity(points);
    for i in 0..points {
        // Stay short of the limit, where the delay diverges.
        let lambda = 0.98 * max * i as f64 / (points - 1) as f64;
        let p = base.with_lambda(lambda).map_err(|e| e.to_string())?;
        let q = optimal_q11(&p).map_err(|e| e.to_string())?;
        out.push(DelayPoint {
            lambda,
            q_star: q,
            delay: average_delay(&p, q).map_err(|e| e.to_string())?,
            uncontrolled: best_uncontrolled(&p),
        });
    }
    let curve = DelayCurve { lambda_max: max, lambda_star: lambda_star(&base), points: out };
    Ok(serde_json::to_string(&curve).expect("curve serializes"))
}

#[derive(Serialize)]
struct PointCheck {
    predicted: &'static str,
    q11: f64,
    q12: f64,
    verdict: &'static str,
    throughput: [f64; 2],
    mean_queue: [f64; 2],
    mean_delay: Option<f64>,
    /// Mean queue length per window, for a growth plot.
    window_queue: Vec<[f64; 2]>,
}

/// Policy whose fixed-policy region reaches furthest above `rates` at its
/// `lambda1`: the closed-form maximiser without multipacket reception, a
/// policy-grid search with it.
fn policy_for(params: &SystemParams, rates: &ArrivalRates) -> Policy {
    if !params.has_mpr() {
        return boundary_achieving_policy(params, rates.lambda1).unwrap_or(Policy::good_only(1.0, 1.0));
    }
    let mut best = (f64::NEG_INFINITY, Policy::good_only(1.0, 1.0));
    for i in 0..=100 {
        for j in 0..=100 {
            let policy = Policy::good_only(i as f64 / 100.0, j as f64 / 100.0);
            let region = fixed_policy_region(params, &policy).expect("validated parameters");
            let height = region.boundary_lambda2(rates.lambda1);
            if height > best.0 {
                best = (height, policy);
            }
        }
    }
    best.1
}

/// Simulates one arrival-rate pair under a boundary-reaching policy and
/// compares with the analytical prediction.
#[allow(clippy::too_many_arguments)]
pub fn check_point_json(
    pi1: f64,
    pi2: f64,
    f11: f64,
    f12: f64,
    mpr1: f64,
    mpr2: f64,
    lambda1: f64,
    lambda2: f64,
    horizon: u64,
    seed: u64,
) -> Result<String, String> {
    let params = SystemParams::from_stationary(pi1, pi2, f11, f12)
        .and_then(|p| p.with_mpr(mpr1, mpr2))
        .map_err(|e| e.to_string())?;
    let rates = ArrivalRates::new(lambda1, lambda2);
    let predicted = match is_in_region(&params, &rates).map_err(|e| e.to_string())? {
        Classification::Stable => "stable",
        Classification::Unstable => "unstable",
        Classification::Boundary => "boundary",
    };
    let policy = policy_for(&params, &rates);
    let mut config = SimConfig::new(params, policy, rates);
    config.horizon = horizon.clamp(10_000, 5_000_000);
    config.warmup = config.horizon / 10;
    config.seed = seed;
    let (stats, trace) = sim::run_traced(&config, TraceOptions { windows: 20, ..Default::default() })
        .map_err(|e| e.to_string())?;
    let out = PointCheck {
        predicted,
        q11: policy.q11,
        q12: policy.q12,
        verdict: match stats.stability_verdict {
            StabilityVerdict::StableLikely => "stable",
            StabilityVerdict::UnstableLikely => "unstable",
            StabilityVerdict::Inconclusive => "inconclusive",
        },
        throughput: [stats.throughput1, stats.throughput2],
        mean_queue: [stats.mean_queue1, stats.mean_queue2],
        mean_delay: stats.mean_delay,
        window_queue: trace.window_queue_means,
    };
    Ok(serde_json::to_string(&out).expect("check serializes"))
}

#[wasm_bindgen]
pub fn region_curves(
    pi1: f64,
    pi2: f64,
    f11: f64,
    f12: f64,
    mpr1: f64,
    mpr2: f64,
    samples: usize,
) -> Result<String, JsValue> {
    region_curves_json(pi1, pi2, f11, f12, mpr1, mpr2, samples).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn delay_curve(pi1: f64, f11: f64, points: usize) -> Result<String, JsValue> {
    delay_curve_json(pi1, f11, points).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
#[allow(clippy::too_many_arguments)]
pub fn check_point(
    pi1: f64,
    pi2: f64,
    f11: f64,
    f12: f64,
    mpr1: f64,
    mpr2: f64,
    lambda1: f64,
    lambda2: f64,
    horizon: u32,
    seed: u32,
) -> Result<String, JsValue> {
    check_point_json(pi1, pi2, f11, f12, mpr1, mpr2, lambda1, lambda2, horizon.into(), seed.into()).map_err(|e| JsValue::from_str(&e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::Value;

    fn parse(s: String) -> Value {
        serde_json::from_str(&s).unwrap()
    }

    #[test]
    fn region_curves_shape() {
        let v = parse(region_curves_json(0.6, 0.6, 1.0, 1.0, 0.0, 0.0, 100).unwrap());
        assert_eq!(v["shape_class"], "ThreePiece");
        let c = v["controlled"].as_array().unwrap();
        assert_eq!(c.len(), 101);
        assert_eq!(c[0][1].as_f64().unwrap(), 0.6);
        assert_eq!(c[100][0].as_f64().unwrap(), 0.6);
        assert_eq!(v["breakpoints"].as_array().unwrap().len(), 3);
        assert_eq!(v["tdma"].as_array().unwrap().len(), 101);

        let v = parse(region_curves_json(0.4, 0.4, 1.0, 1.0, 0.0, 0.0, 10).unwrap());
        assert_eq!(v["shape_class"], "Polygon");
        assert!(region_curves_json(0.6, 0.6, 1.0, 1.0, 1.5, 0.0, 10).unwrap_err().contains("mpr1"));
    }

    #[test]
    fn delay_curve_contents() {
        let v = parse(delay_curve_json(0.6, 1.0, 50).unwrap());
        assert_eq!(v["lambda_max"].as_f64().unwrap(), 0.25);
        let pts = v["points"].as_array().unwrap();
        assert_eq!(pts.len(), 50);
        assert_eq!(pts[0]["q_star"].as_f64().unwrap(), 1.0);
        for p in pts {
            let d = p["delay"].as_f64().unwrap();
            if let Some(u) = p["uncontrolled"].as_f64() {
                assert!(d <= u + 1e-9);
            }
        }
        assert!(delay_curve_json(0.0, 1.0, 10).is_err());
    }

    #[test]
    fn point_check_agrees_on_clear_cases() {
        let v = parse(check_point_json(0.6, 0.6, 1.0, 1.0, 0.0, 0.0, 0.1, 0.1, 1_000_000, 1).unwrap());
        assert_eq!(v["predicted"], "stable");
        assert_eq!(v["verdict"], "stable");
        assert_eq!(v["window_queue"].as_array().unwrap().len(), 20);
        let v = parse(check_point_json(0.6, 0.6, 1.0, 1.0, 0.0, 0.0, 0.3, 0.3, 1_000_000, 1).unwrap());
        assert_eq!(v["predicted"], "unstable");
        assert_eq!(v["verdict"], "unstable");
        // Outside the no-MPR region but inside the region with strong MPR.
        let v = parse(check_point_json(0.6, 0.6, 1.0, 1.0, 0.8, 0.8, 0.3, 0.3, 1_000_000, 2).unwrap());
        assert_eq!(v["predicted"], "stable");
        assert_eq!(v["verdict"], "stable");
    }
}
