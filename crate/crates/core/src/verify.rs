//! Acceptance battery: each criterion checks a closed form against an
//! independent oracle, a simulation, or a property, and reports pass/fail
//! with the measured error.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::delay::{
    average_delay, delay_stationary_points, lambda_max, lower_stationary_point_quadratic,
    optimal_q11, stability_roots, SymmetricParams,
};
use crate::model::{ArrivalRates, Policy, SystemParams};
use crate::oracle::{brute_force_optimal_q, grid_union_boundary};
use crate::sim::{self, SimConfig, SimMode, StabilityVerdict, TraceOptions};
use crate::stability::{
    boundary_achieving_policy, closed_form_boundary, fixed_policy_region, shape_value,
    uncontrolled_boundary, ShapeClass,
};

pub const ORACLE_TOL: f64 = 5e-3;
pub const ORACLE_GRID_N: usize = 400;
pub const ORACLE_SAMPLES: usize = 100;
pub const ORACLE_TIME_LIMIT_S: f64 = 60.0;
pub const EXACT_TOL: f64 = 1e-12;
pub const STRICT_MARGIN: f64 = 1e-6;
pub const SERVICE_SIGMAS: f64 = 3.0;
pub const SERVICE_TIME_LIMIT_S: f64 = 30.0;
pub const DELAY_REL_TOL: f64 = 0.02;
pub const DELAY_MAX_LOAD: f64 = 0.8;
pub const OPTIMAL_Q_TOL: f64 = 1e-3;
pub const DETECT_WINDOWS: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    Region,
    Delay,
    Sim,
    All,
}

impl Suite {
    pub fn criteria(self) -> &'static [u8] {
        match self {
            Suite::Region => &[1, 2, 3, 4],
            Suite::Delay => &[6, 7, 8],
            Suite::Sim => &[5, 9, 10],
            Suite::All => &[1, 2, 3, 4, 5, 6, 7, 8, 9, 10],
        }
    }
}

impl FromStr for Suite {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "region" => Ok(Suite::Region),
            "delay" => Ok(Suite::Delay),
            "sim" => Ok(Suite::Sim),
            "all" => Ok(Suite::All),
            _ => Err(format!("unknown suite `{s}` (expected region, delay, sim or all)")),
        }
    }
}

/// `Full` runs every criterion at its stated size; `Quick` shrinks the
/// number of parameter sets and points but keeps tolerances.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Budget {
    Quick,
    Full,
}

impl Budget {
    fn pick(self, quick: usize, full: usize) -> usize {
        match self {
            Budget::Quick => quick,
            Budget::Full => full,
        }
    }
}

impl FromStr for Budget {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "quick" => Ok(Budget::Quick),
            "full" => Ok(Budget::Full),
            _ => Err(format!("unknown budget `{s}` (expected quick or full)")),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CriterionReport {
    pub id: u8,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
    pub seconds: f64,
}

impl fmt::Display for CriterionReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "[{}] {:>2} {}: {} ({:.1} s)",
            if self.passed { "PASS" } else { "FAIL" },
            self.id,
            self.name,
            self.detail,
            self.seconds
        )
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub suite: Suite,
    pub budget: Budget,
    pub passed: bool,
    pub criteria: Vec<CriterionReport>,
}

pub fn run_suite(suite: Suite, budget: Budget) -> Report {
    let criteria: Vec<_> = suite.criteria().iter().map(|&id| run_criterion(id, budget)).collect();
    Report { suite, budget, passed: criteria.iter().all(|c| c.passed), criteria }
}

/// Runs one criterion by number (1 to 10).
pub fn run_criterion(id: u8, budget: Budget) -> CriterionReport {
    let start = Instant::now();
    let (name, outcome): (&'static str, Outcome) = match id {
        1 => ("region-oracle", region_oracle(budget)),
        2 => ("mpr-region-oracle", mpr_region_oracle(budget)),
        3 => ("shape-transition", shape_transition()),
        4 => ("superset", superset(budget)),
        5 => ("service-rates", service_rates(budget)),
        6 => ("delay-simulation", delay_simulation(budget)),
        7 => ("optimal-q", optimal_q(budget)),
        8 => ("p1-dual-form", p1_dual_form(budget)),
        9 => ("dominance-coupling", dominance_coupling(budget)),
        10 => ("stability-detection", stability_detection(budget)),
        _ => ("unknown", Outcome::fail(format!("no criterion {id}"))),
    };
    let seconds = start.elapsed().as_secs_f64();
    let mut report = CriterionReport { id, name, passed: outcome.passed, detail: outcome.detail, seconds };
    let limit = match id {
        1 | 2 => Some(ORACLE_TIME_LIMIT_S),
        _ => None,
    };
    if let Some(limit) = limit {
        if seconds > limit {
            report.passed = false;
            report.detail.push_str(&format!("; exceeded {limit} s"));
        }
    }
    report
}

struct Outcome {
    passed: bool,
    detail: String,
}

impl Outcome {
    fn new(passed: bool, detail: String) -> Self {
        Self { passed, detail }
    }

    fn fail(detail: String) -> Self {
        Self { passed: false, detail }
    }
}

fn par_map<T: Sync, R: Send>(items: &[T], f: impl Fn(&T) -> R + Sync + Send) -> Vec<R> {
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        items.par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        items.iter().map(f).collect()
    }
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn system(g1: f64, g2: f64, f11: f64, f12: f64) -> SystemParams {
    SystemParams::from_stationary(g1, g2, f11, f12).expect("valid generated parameters")
}

/// Random system without multipacket reception whose shape class is `class`.
fn random_system(rng: &mut ChaCha8Rng, class: ShapeClass) -> SystemParams {
    loop {
        let (g1, g2) = (rng.gen_range(0.05..1.0), rng.gen_range(0.05..1.0));
        let sum0 = (1.0 - g1) + (1.0 - g2);
        let wanted = match class {
            ShapeClass::ThreePiece => sum0 < 0.98,
            ShapeClass::Polygon => sum0 > 1.02,
        };
        if wanted {
            return system(g1, g2, rng.gen_range(0.2..=1.0), rng.gen_range(0.2..=1.0));
        }
    }
}

/// Random system with `mpr_i` drawn from `(0, f_1i]` and the given shape class.
fn random_mpr_system(rng: &mut ChaCha8Rng, class: ShapeClass) -> SystemParams {
    loop {
        let base = system(
            rng.gen_range(0.05..1.0),
            rng.gen_range(0.05..1.0),
            rng.gen_range(0.2..=1.0),
            rng.gen_range(0.2..=1.0),
        );
        let m1 = base.f11 * (1.0 - rng.gen::<f64>());
        let m2 = base.f12 * (1.0 - rng.gen::<f64>());
        let p = base.with_mpr(m1, m2).expect("mpr within (0, f]");
        let s = shape_value(&p);
        let matches = match class {
            ShapeClass::ThreePiece => s < 0.98,
            ShapeClass::Polygon => s > 1.02,
        };
        if matches {
            return p;
        }
    }
}

/// Largest gap between the grid oracle and the closed form over the sampled
/// `lambda1` values.
fn oracle_gap(params: &SystemParams) -> f64 {
    let boundary = closed_form_boundary(params).expect("valid parameters");
    let grid = grid_union_boundary(params, ORACLE_GRID_N, ORACLE_SAMPLES).expect("valid grid");
    grid.iter()
        .map(|p| (p.lambda2 - boundary.value(p.lambda1).expect("inside range")).abs())
        .fold(0.0, f64::max)
}

fn oracle_battery(sets: &[SystemParams]) -> (f64, usize) {
    let gaps = par_map(sets, oracle_gap);
    let worst = gaps.iter().copied().fold(0.0, f64::max);
    (worst, gaps.iter().filter(|g| **g > ORACLE_TOL).count())
}

fn region_oracle(budget: Budget) -> Outcome {
    let sets: Vec<SystemParams> = match budget {
        Budget::Quick => vec![system(0.6, 0.6, 1.0, 1.0), system(0.8, 0.5, 0.7, 0.9), system(0.4, 0.45, 0.9, 0.8)],
        Budget::Full => {
            let mut r = rng(0x1e11a1);
            let mut v: Vec<_> = (0..10).map(|_| random_system(&mut r, ShapeClass::ThreePiece)).collect();
            v.extend((0..10).map(|_| random_system(&mut r, ShapeClass::Polygon)));
            v
        }
    };
    let (worst, bad) = oracle_battery(&sets);

    // In the polygon class the single policy (1, 1) attains the grid maximum.
    let mut corner_gap: f64 = 0.0;
    for p in sets.iter().filter(|p| shape_value(p) >= 1.0) {
        let full = fixed_policy_region(p, &Policy::good_only(1.0, 1.0)).expect("no q0");
        for g in grid_union_boundary(p, ORACLE_GRID_N, ORACLE_SAMPLES).expect("valid grid") {
            corner_gap = corner_gap.max(g.lambda2 - full.boundary_lambda2(g.lambda1));
        }
    }
    Outcome::new(
        bad == 0 && corner_gap <= EXACT_TOL,
        format!(
            "{} sets, max |grid - closed form| = {worst:.2e} (tol {ORACLE_TOL:.0e}); polygon (1,1) shortfall {corner_gap:.1e}",
            sets.len()
        ),
    )
}

/// The boundary as stated for systems without multipacket reception,
/// written in terms of the bad-state probabilities.
fn no_mpr_reference(p: &SystemParams, x: f64, class: ShapeClass) -> f64 {
    let (p11, p12) = (p.good1(), p.good2());
    let (p01, p02) = (1.0 - p11, 1.0 - p12);
    let (f11, f12) = (p.f11, p.f12);
    let l1 = |x: f64| p12 * f12 - p12 * f12 / (p02 * f11) * x;
    let l3 = |x: f64| p01 * f12 - p01 * f12 / (p11 * f11) * x;
    match class {
        ShapeClass::ThreePiece => {
            if x < p02 * p02 * f11 {
                l1(x)
            } else if x < p11 * p11 * f11 {
                f12 * (1.0 - (x / f11).sqrt()).powi(2)
            } else {
                l3(x)
            }
        }
        ShapeClass::Polygon => {
            if x < p11 * (1.0 - p12) * f11 {
                l1(x)
            } else {
                l3(x)
            }
        }
    }
}

fn mpr_region_oracle(budget: Budget) -> Outcome {
    let sets: Vec<SystemParams> = match budget {
        Budget::Quick => vec![
            system(0.6, 0.6, 1.0, 1.0).with_mpr(0.2, 0.2).unwrap(),
            system(0.8, 0.6, 0.9, 1.0).with_mpr(0.3, 0.4).unwrap(),
            system(0.5, 0.5, 1.0, 1.0).with_mpr(0.5, 0.5).unwrap(),
        ],
        Budget::Full => {
            let mut r = rng(0x1e22a2);
            let mut v: Vec<_> = (0..10).map(|_| random_mpr_system(&mut r, ShapeClass::ThreePiece)).collect();
            v.extend((0..10).map(|_| random_mpr_system(&mut r, ShapeClass::Polygon)));
            v
        }
    };
    let (worst, bad) = oracle_battery(&sets);

    // With zero multipacket success the general code reduces to the
    // no-multipacket statement at 1e3 points spread over ten systems.
    let mut r = rng(0x1e22a3);
    let mut reduction: f64 = 0.0;
    for i in 0..10 {
        let class = if i % 2 == 0 { ShapeClass::ThreePiece } else { ShapeClass::Polygon };
        let p = random_system(&mut r, class);
        let b = closed_form_boundary(&p).unwrap();
        for k in 0..100 {
            let x = b.lambda1_max * k as f64 / 100.0;
            reduction = reduction.max((b.value(x).unwrap() - no_mpr_reference(&p, x, class).max(0.0)).abs());
        }
    }
    Outcome::new(
        bad == 0 && reduction <= EXACT_TOL,
        format!(
            "{} sets, max |grid - closed form| = {worst:.2e} (tol {ORACLE_TOL:.0e}); zero-mpr reduction error {reduction:.1e}",
            sets.len()
        ),
    )
}

fn shape_transition() -> Outcome {
    let half = system(0.5, 0.5, 1.0, 1.0);
    let b = closed_form_boundary(&half).unwrap();
    let tdma_gap = (0..1000)
        .map(|k| 0.5 * k as f64 / 1000.0)
        .map(|x| (b.value(x).unwrap() - (0.5 - x)).abs())
        .fold(0.0, f64::max);

    // Both statements give the same line when the bad-state probabilities sum to one.
    let tie = system(0.7, 0.3, 0.9, 0.6);
    let tie_gap = (0..1000)
        .map(|k| 0.7 * 0.9 * k as f64 / 1000.0)
        .map(|x| {
            (no_mpr_reference(&tie, x, ShapeClass::ThreePiece)
                - no_mpr_reference(&tie, x, ShapeClass::Polygon))
            .abs()
        })
        .fold(0.0, f64::max);

    let mut flips = true;
    for d in [1e-3, 0.05, 0.2] {
        let good = closed_form_boundary(&system(0.5 + d, 0.5 + d, 1.0, 1.0)).unwrap();
        let bad = closed_form_boundary(&system(0.5 - d, 0.5 - d, 1.0, 1.0)).unwrap();
        flips &= good.shape_class == ShapeClass::ThreePiece && bad.shape_class == ShapeClass::Polygon;
    }
    Outcome::new(
        tdma_gap <= EXACT_TOL && tie_gap <= EXACT_TOL && flips,
        format!(
            "max |boundary - (0.5 - l1)| = {tdma_gap:.1e}; tie-line gap {tie_gap:.1e}; class flips: {flips}"
        ),
    )
}

fn superset(budget: Budget) -> Outcome {
    let mut r = rng(0x5e7);
    let n = budget.pick(3, 10);
    let sets: Vec<_> = (0..n)
        .map(|i| {
            let class = if i % 2 == 0 { ShapeClass::ThreePiece } else { ShapeClass::Polygon };
            random_system(&mut r, class)
        })
        .collect();
    let mut worst_violation: f64 = 0.0;
    let mut all_strict = true;
    for p in &sets {
        let b = closed_form_boundary(p).unwrap();
        let mut best_margin: f64 = 0.0;
        for k in 0..1000 {
            let x = b.lambda1_max * k as f64 / 1000.0;
            let margin = b.value(x).unwrap() - uncontrolled_boundary(p, x).unwrap();
            worst_violation = worst_violation.max(-margin);
            if k > 0 {
                best_margin = best_margin.max(margin);
            }
        }
        all_strict &= best_margin >= STRICT_MARGIN;
    }
    Outcome::new(
        worst_violation <= EXACT_TOL && all_strict,
        format!(
            "{n} sets x 1000 points, worst shortfall {:.1e}; strictly larger somewhere in every set: {all_strict}", worst_violation.max(0.0)
        ),
    )
}

/// Probability that user `u` succeeds in a slot where both users have a
/// packet to send: it must be in the good state and transmit, and the other
/// user must stay silent or (good state, multipacket reception) not collide.
fn saturated_success(p: &SystemParams, q: &Policy, u: usize) -> f64 {
    let (g, f, mpr) = if u == 0 { (p.good1(), p.f11, p.mpr1) } else { (p.good2(), p.f12, p.mpr2) };
    let og = if u == 0 { p.good2() } else { p.good1() };
    let o = 1 - u;
    let other_tx = (1.0 - og) * q.q(o + 1, false) + og * q.q(o + 1, true);
    let other_good_tx = og * q.q(o + 1, true);
    g * q.q(u + 1, true) * ((1.0 - other_tx) * f + other_good_tx * mpr)
}

struct ServiceCase {
    system: SystemParams,
    policy: Policy,
    mode: SimMode,
    arrivals: ArrivalRates,
    users: &'static [usize],
}

fn service_rates(budget: Budget) -> Outcome {
    let mut cases = vec![
        ServiceCase {
            system: system(0.6, 0.6, 1.0, 1.0),
            policy: Policy::good_only(1.0, 1.0),
            mode: SimMode::SaturatedBoth,
            arrivals: ArrivalRates::new(0.0, 0.0),
            users: &[0, 1],
        },
        ServiceCase {
            system: system(1.0, 1.0, 1.0, 1.0).with_mpr(0.5, 0.5).unwrap(),
            policy: Policy::good_only(1.0, 1.0),
            mode: SimMode::SaturatedBoth,
            arrivals: ArrivalRates::new(0.0, 0.0),
            users: &[0, 1],
        },
    ];
    if budget == Budget::Full {
        cases.extend([
            ServiceCase {
                system: system(0.7, 0.45, 0.9, 0.8),
                policy: Policy { q01: 0.2, q11: 0.8, q02: 0.1, q12: 0.6 },
                mode: SimMode::SaturatedBoth,
                arrivals: ArrivalRates::new(0.0, 0.0),
                users: &[0, 1],
            },
            ServiceCase {
                system: system(0.55, 0.8, 1.0, 0.7),
                policy: Policy::good_only(0.9, 0.5),
                mode: SimMode::DominantS1,
                arrivals: ArrivalRates::new(0.05, 0.1),
                users: &[1],
            },
            ServiceCase {
                system: system(0.8, 0.6, 0.9, 1.0).with_mpr(0.3, 0.4).unwrap(),
                policy: Policy::good_only(0.7, 0.9),
                mode: SimMode::DominantS2,
                arrivals: ArrivalRates::new(0.1, 0.05),
                users: &[0],
            },
        ]);
    }
    let results = par_map(&cases, |c| {
        let start = Instant::now();
        let mut config = SimConfig::new(c.system, c.policy, c.arrivals);
        config.mode = c.mode;
        config.seed = 0x5e41;
        let est = sim::estimate_service_rates(&config).expect("valid service configuration");
        let seconds = start.elapsed().as_secs_f64();
        let worst_z = c
            .users
            .iter()
            .map(|&u| {
                let expect = saturated_success(&c.system, &c.policy, u);
                let (rate, trials) = if u == 0 { (est.rate1, est.trials1) } else { (est.rate2, est.trials2) };
                let sigma = (expect * (1.0 - expect) / trials as f64).sqrt();
                if sigma > 0.0 {
                    (rate - expect).abs() / sigma
                } else if rate == expect {
                    0.0
                } else {
                    f64::INFINITY
                }
            })
            .fold(0.0, f64::max);
        (worst_z, seconds)
    });
    let worst_z = results.iter().map(|r| r.0).fold(0.0, f64::max);
    let slowest = results.iter().map(|r| r.1).fold(0.0, f64::max);
    Outcome::new(
        worst_z <= SERVICE_SIGMAS && slowest <= SERVICE_TIME_LIMIT_S,
        format!(
            "{} configs, worst deviation {worst_z:.2} sigma (tol {SERVICE_SIGMAS}); slowest {slowest:.1} s (limit {SERVICE_TIME_LIMIT_S} s)",
            cases.len()
        ),
    )
}

struct DelayCase {
    pi1: f64,
    f: f64,
    q: f64,
    lambda: f64,
}

fn delay_simulation(budget: Budget) -> Outcome {
    let mut cases = vec![DelayCase { pi1: 0.5, f: 1.0, q: 1.0, lambda: 0.1 }];
    let mut r = rng(0xde1a7);
    while cases.len() < budget.pick(2, 10) {
        let (pi1, f, q) = (r.gen_range(0.3..=1.0), r.gen_range(0.4..=1.0), r.gen_range(0.4..=1.0));
        let limit = SymmetricParams::new(pi1, f, 0.0).unwrap().service_rate(q);
        if limit < 0.02 {
            continue;
        }
        let lambda = limit * r.gen_range(0.2..=DELAY_MAX_LOAD);
        cases.push(DelayCase { pi1, f, q, lambda });
    }
    let errors = par_map(&cases, |c| {
        let sp = SymmetricParams::new(c.pi1, c.f, c.lambda).unwrap();
        let expect = average_delay(&sp, c.q).expect("stable by construction");
        let mut config = SimConfig::new(
            system(c.pi1, c.pi1, c.f, c.f),
            Policy::good_only(c.q, c.q),
            ArrivalRates::new(c.lambda, c.lambda),
        );
        config.horizon = 2_000_000;
        config.warmup = 100_000;
        config.seed = (c.lambda * 1e9) as u64;
        let stats = sim::run(&config).expect("valid delay configuration");
        let got = stats.mean_delay.unwrap_or(f64::NAN);
        ((got - expect) / expect).abs()
    });
    let worst = errors.iter().copied().fold(0.0, f64::max);
    let anchor = average_delay(&SymmetricParams::new(0.5, 1.0, 0.1).unwrap(), 1.0).unwrap();
    Outcome::new(
        worst <= DELAY_REL_TOL && (anchor - 2.8333).abs() < 1e-4,
        format!(
            "{} configs, worst relative error {:.2}% (tol {}%); anchor delay {anchor:.4}",
            cases.len(),
            worst * 100.0,
            DELAY_REL_TOL * 100.0
        ),
    )
}

fn optimal_q(budget: Budget) -> Outcome {
    let mut r = rng(0x0b71);
    let n = budget.pick(50, 200);
    let mut instances = Vec::with_capacity(n);
    while instances.len() < n {
        let pi1 = 1.0 - r.gen::<f64>();
        let f = r.gen_range(0.1..=1.0);
        let base = SymmetricParams::new(pi1, f, 0.0).unwrap();
        let lambda = lambda_max(&base) * r.gen_range(0.0..0.999);
        instances.push(base.with_lambda(lambda).unwrap());
    }
    let outcomes = par_map(&instances, |p| {
        let q = optimal_q11(p).expect("below lambda_max");
        let (brute, _) = brute_force_optimal_q(p, 1000).expect("below lambda_max");
        let forced_one = p.pi1 <= 0.5;
        ((q - brute).abs(), !forced_one || q == 1.0)
    });
    let worst = outcomes.iter().map(|o| o.0).fold(0.0, f64::max);
    let exact_ones = outcomes.iter().all(|o| o.1);
    let bad_states = instances.iter().filter(|p| p.pi1 <= 0.5).count();
    Outcome::new(
        worst <= OPTIMAL_Q_TOL && exact_ones,
        format!(
            "{n} instances, max |closed form - brute force| = {worst:.1e} (tol {OPTIMAL_Q_TOL:.0e}); exactly 1 on all {bad_states} with pi0 >= 0.5: {exact_ones}"
        ),
    )
}

fn p1_dual_form(budget: Budget) -> Outcome {
    let (n_pi, n_f, n_l) = match budget {
        Budget::Quick => (10, 10, 10),
        Budget::Full => (20, 10, 50),
    };
    let mut form_gap: f64 = 0.0;
    let mut ordering_ok = true;
    let mut real = 0usize;
    for i in 0..n_pi {
        let pi1 = 0.05 + 0.95 * i as f64 / (n_pi - 1) as f64;
        for j in 0..n_f {
            let f = 0.1 + 0.9 * j as f64 / (n_f - 1) as f64;
            for k in 0..n_l {
                let lambda = f / 4.0 * k as f64 / (n_l - 1) as f64;
                let p = SymmetricParams::new(pi1, f, lambda).unwrap();
                let (Some((p1, p2)), Some(p1_alt)) =
                    (delay_stationary_points(&p), lower_stationary_point_quadratic(&p))
                else {
                    continue;
                };
                form_gap = form_gap.max((p1 - p1_alt).abs());
                if let Ok((s1, s2)) = stability_roots(&p) {
                    real += 1;
                    let tol = EXACT_TOL * p2.abs().max(1.0);
                    ordering_ok &= s1 <= p1 + tol && p1 <= s2 + tol && s2 <= p2 + tol;
                }
            }
        }
    }
    let points = n_pi * n_f * n_l;
    Outcome::new(
        form_gap <= EXACT_TOL && ordering_ok && real > 0,
        format!(
            "{points} points, max |p1 forms| = {form_gap:.1e} (tol {EXACT_TOL:.0e}); s1 <= p1 <= s2 <= p2 on all {real} real points: {ordering_ok}"
        ),
    )
}

fn dominance_coupling(budget: Budget) -> Outcome {
    let systems = [
        (system(0.6, 0.6, 1.0, 1.0), Policy::good_only(0.9, 0.9), ArrivalRates::new(0.15, 0.15)),
        (
            system(0.7, 0.5, 0.9, 0.8).with_mpr(0.3, 0.2).unwrap(),
            Policy { q01: 0.1, q11: 0.8, q02: 0.2, q12: 1.0 },
            ArrivalRates::new(0.2, 0.12),
        ),
    ];
    let seeds: Vec<u64> = (0..budget.pick(2, 5) as u64).collect();
    let jobs: Vec<_> = systems.iter().flat_map(|s| seeds.iter().map(move |seed| (*s, *seed))).collect();
    let violations = par_map(&jobs, |((sys, policy, arrivals), seed)| {
        let mut config = SimConfig::new(*sys, *policy, *arrivals);
        config.horizon = 100_000;
        config.warmup = 0;
        config.seed = *seed;
        let opts = TraceOptions { queue_path: true, windows: 1, ..Default::default() };
        let (_, original) = sim::run_traced(&config, opts).unwrap();
        config.mode = SimMode::DominantS1;
        let (_, dominant) = sim::run_traced(&config, opts).unwrap();
        original
            .queue_path
            .unwrap()
            .iter()
            .zip(dominant.queue_path.unwrap())
            .filter(|(o, d)| d[1] < o[1])
            .count()
    });
    let total: usize = violations.iter().sum();
    Outcome::new(
        total == 0,
        format!(
            "{} runs x 1e5 slots, slots with dominant queue 2 shorter: {total}",
            jobs.len()
        ),
    )
}

fn stability_detection(budget: Budget) -> Outcome {
    let systems = [system(0.6, 0.6, 1.0, 1.0), system(0.4, 0.45, 0.9, 0.8)];
    let per_system = budget.pick(2, 10);
    let mut jobs = Vec::new();
    for sys in &systems {
        let b = closed_form_boundary(sys).unwrap();
        for i in 0..per_system {
            let x = b.lambda1_max * (i as f64 + 0.5) / per_system as f64;
            let y = b.value(x).unwrap();
            let policy = boundary_achieving_policy(sys, x).unwrap();
            for (scale, expect) in [(0.8, StabilityVerdict::StableLikely), (1.2, StabilityVerdict::UnstableLikely)] {
                jobs.push((*sys, policy, ArrivalRates::new(scale * x, scale * y), expect));
            }
        }
    }
    let verdicts = par_map(&jobs, |(sys, policy, arrivals, expect)| {
        let mut config = SimConfig::new(*sys, *policy, *arrivals);
        config.seed = (arrivals.lambda1 * 1e9) as u64 ^ (arrivals.lambda2 * 1e6) as u64;
        sim::detect_stability(&config, DETECT_WINDOWS).unwrap() == *expect
    });
    let agree = verdicts.iter().filter(|v| **v).count();
    let need = jobs.len() - jobs.len() / 20;
    Outcome::new(
        agree >= need,
        format!("{agree}/{} points classified as expected (need {need})", jobs.len()),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_names() {
        assert_eq!("region".parse::<Suite>().unwrap(), Suite::Region);
        assert_eq!("full".parse::<Budget>().unwrap(), Budget::Full);
        assert!("everything".parse::<Suite>().is_err());
        assert!("slow".parse::<Budget>().is_err());
    }

    #[test]
    fn reference_matches_known_points() {
        let p = system(0.6, 0.6, 1.0, 1.0);
        assert!((no_mpr_reference(&p, 0.25, ShapeClass::ThreePiece) - 0.25).abs() < 1e-12);
        let p = system(0.4, 0.4, 1.0, 1.0);
        assert!((no_mpr_reference(&p, 0.0, ShapeClass::Polygon) - 0.4).abs() < 1e-12);
    }

    #[test]
    fn saturated_success_examples() {
        let p = system(0.6, 0.6, 1.0, 1.0);
        let q = Policy::good_only(1.0, 1.0);
        assert!((saturated_success(&p, &q, 0) - 0.24).abs() < 1e-12);
        let p = system(1.0, 1.0, 1.0, 1.0).with_mpr(0.5, 0.5).unwrap();
        assert!((saturated_success(&p, &q, 1) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn saturated_success_matches_region_rates() {
        let p = system(0.7, 0.45, 0.9, 0.8);
        let q = Policy { q01: 0.2, q11: 0.8, q02: 0.1, q12: 0.6 };
        let region = fixed_policy_region(&p, &q).unwrap();
        assert!((saturated_success(&p, &q, 0) - region.mu1_sat).abs() < 1e-12);
        assert!((saturated_success(&p, &q, 1) - region.mu2_sat).abs() < 1e-12);
    }

    #[test]
    fn quick_region_suite_passes() {
        let report = run_suite(Suite::Region, Budget::Quick);
        for c in &report.criteria {
            assert!(c.passed, "{c}");
        }
    }
}
