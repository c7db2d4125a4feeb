//! Slot-level Monte-Carlo simulation of the two queues.
//!
//! Each slot runs in a fixed order: channel states, transmission decisions,
//! reception, departures, then Bernoulli arrivals. A packet that arrives at
//! the end of slot `t` is first eligible in slot `t + 1`, so the queue obeys
//! `Q[t+1] = max(Q[t] - D[t], 0) + A[t]`.
//!
//! Every random quantity comes from its own ChaCha stream, and every stream
//! is advanced exactly once per slot regardless of queue contents. Two runs
//! with the same seed but different modes therefore see the same channel,
//! transmission, reception and arrival draws (common random numbers).

use std::collections::VecDeque;
use std::io::{self, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::channel::{self, ChannelState};
use crate::error::{Error, Result};
use crate::model::{ArrivalRates, Policy, SystemParams};

/// Minimum horizons for the statistical estimators.
pub const MIN_SERVICE_HORIZON: u64 = 100_000;
pub const MIN_DETECT_HORIZON: u64 = 1_000_000;
const DEFAULT_WINDOWS: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SimMode {
    /// Users transmit only real packets.
    Original,
    /// User 1 sends dummy packets whenever its queue is empty.
    DominantS1,
    /// User 2 sends dummy packets whenever its queue is empty.
    DominantS2,
    /// Both users always have something to send.
    SaturatedBoth,
}

impl SimMode {
    fn dummy(self, user: usize) -> bool {
        match self {
            SimMode::Original => false,
            SimMode::DominantS1 => user == 0,
            SimMode::DominantS2 => user == 1,
            SimMode::SaturatedBoth => true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub system: SystemParams,
    pub policy: Policy,
    pub arrivals: ArrivalRates,
    pub horizon: u64,
    pub warmup: u64,
    pub seed: u64,
    pub mode: SimMode,
}

impl SimConfig {
    pub fn new(system: SystemParams, policy: Policy, arrivals: ArrivalRates) -> Self {
        Self {
            system,
            policy,
            arrivals,
            horizon: 1_000_000,
            warmup: 100_000,
            seed: 0,
            mode: SimMode::Original,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let mut errors = self.system.validate();
        errors.extend(self.policy.validate());
        errors.extend(self.arrivals.validate());
        if !errors.is_empty() {
            return Err(Error::InvalidParams(errors));
        }
        if self.horizon <= self.warmup {
            return Err(Error::ConfigInvalid(format!(
                "horizon ({}) must exceed warmup ({})",
                self.horizon, self.warmup
            )));
        }
        Ok(())
    }

    fn require_horizon(&self, min: u64) -> Result<()> {
        if self.horizon < min {
            return Err(Error::ConfigInvalid(format!(
                "horizon {} is below the required {min}",
                self.horizon
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum StabilityVerdict {
    StableLikely,
    UnstableLikely,
    Inconclusive,
}

/// Summary statistics over the post-warmup slots.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimStats {
    /// Real-packet departures per slot. Under `SaturatedBoth` the users are
    /// modelled as infinitely backlogged and every success counts.
    pub throughput1: f64,
    pub throughput2: f64,
    /// Time-average queue length, sampled at the end of each slot.
    pub mean_queue1: f64,
    pub mean_queue2: f64,
    pub mean_delay1: Option<f64>,
    pub mean_delay2: Option<f64>,
    /// Mean delay over both users' packets.
    pub mean_delay: Option<f64>,
    /// Half-width of a 95% batch-means interval around `mean_delay`.
    pub delay_ci95: Option<f64>,
    pub occupancy_good1: f64,
    pub occupancy_good2: f64,
    /// Successes (real or dummy) per slot in which the user had something to send.
    pub service_rate1: Option<f64>,
    pub service_rate2: Option<f64>,
    pub stability_verdict: StabilityVerdict,
    pub measured_slots: u64,
}

/// Everything that happened in one slot; `queue` is the length after arrivals.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SlotEvent {
    pub slot: u64,
    pub state: [ChannelState; 2],
    pub transmitted: [bool; 2],
    pub success: [bool; 2],
    pub arrival: [bool; 2],
    pub queue: [u64; 2],
}

/// Writes the event log as CSV.
pub fn write_event_log<W: Write + ?Sized>(out: &mut W, events: &[SlotEvent]) -> io::Result<()> {
    writeln!(out, "slot,state1,state2,tx1,tx2,succ1,succ2,q1,q2")?;
    for e in events {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            e.slot,
            e.state[0] as u8,
            e.state[1] as u8,
            e.transmitted[0] as u8,
            e.transmitted[1] as u8,
            e.success[0] as u8,
            e.success[1] as u8,
            e.queue[0],
            e.queue[1]
        )?;
    }
    Ok(())
}

/// Raw counters and traces of one run.
#[derive(Debug, Clone, Default)]
pub struct RunTrace {
    pub total_arrivals: [u64; 2],
    pub total_departures: [u64; 2],
    pub final_queue: [u64; 2],
    /// Queue length after every slot, when requested.
    pub queue_path: Option<Vec<[u64; 2]>>,
    pub events: Option<Vec<SlotEvent>>,
    /// Mean queue length per post-warmup window.
    pub window_queue_means: Vec<[f64; 2]>,
    pub window_queue_max: Vec<[u64; 2]>,
    /// Mean delay per window, pooled over users; NaN for windows without departures.
    pub window_delay_means: Vec<f64>,
    /// Post-warmup slots in which each user had a real or dummy packet.
    pub eligible_slots: [u64; 2],
    /// Post-warmup successful transmissions, real or dummy.
    pub successes: [u64; 2],
}

#[derive(Debug, Clone, Copy, Default)]
pub struct TraceOptions {
    pub queue_path: bool,
    pub events: bool,
    pub windows: usize,
}

enum Stream {
    Channel1 = 1,
    Channel2,
    Transmit1,
    Transmit2,
    Reception,
    Arrivals1,
    Arrivals2,
}

fn stream(seed: u64, s: Stream) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(s as u64);
    rng
}

#[derive(Default)]
struct Window {
    queue_sum: [u64; 2],
    queue_max: [u64; 2],
    delay_sum: u64,
    delay_count: u64,
    slots: u64,
}

/// Runs the simulation and returns statistics together with the raw trace.
pub fn run_traced(config: &SimConfig, opts: TraceOptions) -> Result<(SimStats, RunTrace)> {
    config.validate()?;
    let sys = &config.system;
    let channels = [sys.channel1, sys.channel2];
    let solo = [sys.f11, sys.f12];
    let joint = [sys.mpr1, sys.mpr2];
    let lambdas = [config.arrivals.lambda1, config.arrivals.lambda2];
    let dummy = [config.mode.dummy(0), config.mode.dummy(1)];

    let mut ch_rng = [stream(config.seed, Stream::Channel1), stream(config.seed, Stream::Channel2)];
    let mut tx_rng = [stream(config.seed, Stream::Transmit1), stream(config.seed, Stream::Transmit2)];
    let mut rx_rng = stream(config.seed, Stream::Reception);
    let mut arr_rng = [stream(config.seed, Stream::Arrivals1), stream(config.seed, Stream::Arrivals2)];

    let measured = config.horizon - config.warmup;
    let windows = opts.windows.max(1).min(measured as usize);
    let window_len = measured / windows as u64;

    let mut queues: [VecDeque<u64>; 2] = Default::default();
    let mut state = [ChannelState::Bad; 2];
    let mut trace = RunTrace::default();
    if opts.queue_path {
        trace.queue_path = Some(Vec::with_capacity(config.horizon as usize));
    }
    if opts.events {
        trace.events = Some(Vec::with_capacity(config.horizon as usize));
    }

    let mut successes = [0u64; 2];
    let mut eligible_slots = [0u64; 2];
    let mut departures = [0u64; 2];
    let mut queue_area = [0u64; 2];
    let mut good_slots = [0u64; 2];
    let mut delay_sum = [0u64; 2];
    let mut window = Window::default();

    for slot in 0..config.horizon {
        let measuring = slot >= config.warmup;
        for u in 0..2 {
            let draw: f64 = ch_rng[u].gen();
            state[u] = if slot == 0 {
                channel::sample_stationary(&channels[u], draw)
            } else {
                channel::step(state[u], &channels[u], draw)
            };
        }

        let mut tx = [false; 2];
        let mut has_packet = [false; 2];
        for u in 0..2 {
            let draw: f64 = tx_rng[u].gen();
            has_packet[u] = !queues[u].is_empty() || dummy[u];
            tx[u] = has_packet[u] && draw < config.policy.q(u + 1, state[u].is_good());
        }

        let rx: [f64; 2] = [rx_rng.gen(), rx_rng.gen()];
        let mut success = [false; 2];
        for u in 0..2 {
            let other = 1 - u;
            success[u] = tx[u]
                && state[u].is_good()
                && if tx[other] {
                    // A bad-channel interferer still destroys the packet.
                    state[other].is_good() && rx[u] < joint[u]
                } else {
                    rx[u] < solo[u]
                };
        }

        let mut arrival = [false; 2];
        for u in 0..2 {
            let draw: f64 = arr_rng[u].gen();
            arrival[u] = draw < lambdas[u];
        }

        for u in 0..2 {
            if success[u] {
                if let Some(eligible_since) = queues[u].pop_front() {
                    trace.total_departures[u] += 1;
                    if measuring {
                        let d = slot - eligible_since + 1;
                        departures[u] += 1;
                        delay_sum[u] += d;
                        window.delay_sum += d;
                        window.delay_count += 1;
                    }
                } else if measuring && config.mode == SimMode::SaturatedBoth {
                    departures[u] += 1;
                }
            }
            if arrival[u] {
                queues[u].push_back(slot + 1);
                trace.total_arrivals[u] += 1;
            }
        }

        let qlen = [queues[0].len() as u64, queues[1].len() as u64];
        if let Some(path) = trace.queue_path.as_mut() {
            path.push(qlen);
        }
        if let Some(events) = trace.events.as_mut() {
            events.push(SlotEvent { slot, state, transmitted: tx, success, arrival, queue: qlen });
        }

        if measuring {
            for u in 0..2 {
                if has_packet[u] {
                    eligible_slots[u] += 1;
                    successes[u] += success[u] as u64;
                }
                queue_area[u] += qlen[u];
                good_slots[u] += state[u].is_good() as u64;
                window.queue_sum[u] += qlen[u];
                window.queue_max[u] = window.queue_max[u].max(qlen[u]);
            }
            window.slots += 1;
            if window.slots == window_len && trace.window_queue_means.len() < windows {
                let n = window.slots as f64;
                trace.window_queue_means.push([
                    window.queue_sum[0] as f64 / n,
                    window.queue_sum[1] as f64 / n,
                ]);
                trace.window_queue_max.push(window.queue_max);
                trace.window_delay_means.push(if window.delay_count > 0 {
                    window.delay_sum as f64 / window.delay_count as f64
                } else {
                    f64::NAN
                });
                window = Window::default();
            }
        }
    }
    trace.final_queue = [queues[0].len() as u64, queues[1].len() as u64];
    trace.eligible_slots = eligible_slots;
    trace.successes = successes;

    let n = measured as f64;
    let per_user_delay = |u: usize| (departures[u] > 0 && config.mode != SimMode::SaturatedBoth)
        .then(|| delay_sum[u] as f64 / departures[u] as f64);
    let pooled_count = departures[0] + departures[1];
    let (mean_delay, delay_ci95) = if pooled_count > 0 && config.mode != SimMode::SaturatedBoth {
        let mean = (delay_sum[0] + delay_sum[1]) as f64 / pooled_count as f64;
        (Some(mean), batch_means_ci(&trace.window_delay_means))
    } else {
        (None, None)
    };
    let service = |u: usize| {
        (eligible_slots[u] > 0).then(|| successes[u] as f64 / eligible_slots[u] as f64)
    };

    let stats = SimStats {
        throughput1: departures[0] as f64 / n,
        throughput2: departures[1] as f64 / n,
        mean_queue1: queue_area[0] as f64 / n,
        mean_queue2: queue_area[1] as f64 / n,
        mean_delay1: per_user_delay(0),
        mean_delay2: per_user_delay(1),
        mean_delay,
        delay_ci95,
        occupancy_good1: good_slots[0] as f64 / n,
        occupancy_good2: good_slots[1] as f64 / n,
        service_rate1: service(0),
        service_rate2: service(1),
        stability_verdict: if config.horizon >= MIN_DETECT_HORIZON && windows >= 10 {
            classify_windows(&trace)
        } else {
            StabilityVerdict::Inconclusive
        },
        measured_slots: measured,
    };
    Ok((stats, trace))
}

/// Runs the simulation with default windowing.
pub fn run(config: &SimConfig) -> Result<SimStats> {
    run_traced(config, TraceOptions { windows: DEFAULT_WINDOWS, ..Default::default() })
        .map(|(stats, _)| stats)
}

/// Runs several configurations, in parallel when the `parallel` feature is on.
pub fn run_many(configs: &[SimConfig]) -> Vec<Result<SimStats>> {
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        configs.par_iter().map(run).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        configs.iter().map(run).collect()
    }
}

fn t_quantile_975(df: usize) -> f64 {
    // Cornish-Fisher expansion around the normal quantile.
    let z = 1.959_963_984_540_054_f64;
    let n = df.max(1) as f64;
    z + (z.powi(3) + z) / (4.0 * n)
        + (5.0 * z.powi(5) + 16.0 * z.powi(3) + 3.0 * z) / (96.0 * n * n)
}

fn batch_means_ci(batches: &[f64]) -> Option<f64> {
    let xs: Vec<f64> = batches.iter().copied().filter(|x| x.is_finite()).collect();
    if xs.len() < 2 {
        return None;
    }
    let k = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / k;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (k - 1.0);
    Some(t_quantile_975(xs.len() - 1) * (var / k).sqrt())
}

/// Empirical service rates with binomial confidence half-widths.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ServiceEstimate {
    pub rate1: f64,
    pub rate2: f64,
    pub ci95_1: f64,
    pub ci95_2: f64,
    /// Slots in which each user had a real or dummy packet.
    pub trials1: u64,
    pub trials2: u64,
}

pub fn estimate_service_rates(config: &SimConfig) -> Result<ServiceEstimate> {
    if config.mode == SimMode::Original {
        return Err(Error::ConfigInvalid(
            "service-rate estimation needs a dominant or saturated mode".into(),
        ));
    }
    config.require_horizon(MIN_SERVICE_HORIZON)?;
    let (_, trace) = run_traced(config, TraceOptions { windows: 1, ..Default::default() })?;
    let [t1, t2] = trace.eligible_slots;
    let rate = |u: usize| {
        let t = trace.eligible_slots[u];
        if t > 0 { trace.successes[u] as f64 / t as f64 } else { 0.0 }
    };
    let (r1, r2) = (rate(0), rate(1));
    let ci = |r: f64, t: u64| if t > 0 { 1.96 * (r * (1.0 - r) / t as f64).sqrt() } else { 0.0 };
    Ok(ServiceEstimate {
        rate1: r1,
        rate2: r2,
        ci95_1: ci(r1, t1),
        ci95_2: ci(r2, t2),
        trials1: t1,
        trials2: t2,
    })
}

/// Ordinary least-squares slope of `ys` against their index, with its
/// standard error.
fn ols_slope(ys: &[f64]) -> (f64, f64) {
    let n = ys.len() as f64;
    let mean_x = (n - 1.0) / 2.0;
    let mean_y = ys.iter().sum::<f64>() / n;
    let sxx: f64 = (0..ys.len()).map(|i| (i as f64 - mean_x).powi(2)).sum();
    let sxy: f64 = ys.iter().enumerate().map(|(i, y)| (i as f64 - mean_x) * (y - mean_y)).sum();
    let slope = sxy / sxx;
    let sse: f64 = ys
        .iter()
        .enumerate()
        .map(|(i, y)| (y - mean_y - slope * (i as f64 - mean_x)).powi(2))
        .sum();
    let se = (sse / (n - 2.0) / sxx).sqrt();
    (slope, se)
}

fn classify_user(means: &[f64], maxima: &[u64]) -> StabilityVerdict {
    let (slope, se) = ols_slope(means);
    let level = (means.iter().sum::<f64>() / means.len() as f64).max(1.0);
    let t = if se > 0.0 {
        slope / se
    } else if slope > 0.0 {
        f64::INFINITY
    } else {
        0.0
    };
    // Fitted rise of the queue across the measured span, relative to its level.
    let growth = slope * (means.len() - 1) as f64 / level;
    let half = maxima.len() / 2;
    let early_max = maxima[..half].iter().copied().max().unwrap_or(0) as f64;
    let late_max = maxima[half..].iter().copied().max().unwrap_or(0) as f64;
    let bounded = late_max <= 2.0 * early_max + 10.0 * level.sqrt() + 10.0;

    if t > 3.0 && growth > 0.5 {
        StabilityVerdict::UnstableLikely
    } else if (t.abs() <= 3.0 || growth.abs() <= 0.2) && bounded {
        StabilityVerdict::StableLikely
    } else {
        StabilityVerdict::Inconclusive
    }
}

fn classify_windows(trace: &RunTrace) -> StabilityVerdict {
    if trace.window_queue_means.len() < 3 {
        return StabilityVerdict::Inconclusive;
    }
    let verdicts: Vec<_> = (0..2)
        .map(|u| {
            let means: Vec<f64> = trace.window_queue_means.iter().map(|m| m[u]).collect();
            let maxima: Vec<u64> = trace.window_queue_max.iter().map(|m| m[u]).collect();
            classify_user(&means, &maxima)
        })
        .collect();
    if verdicts.contains(&StabilityVerdict::UnstableLikely) {
        StabilityVerdict::UnstableLikely
    } else if verdicts.iter().all(|v| *v == StabilityVerdict::StableLikely) {
        StabilityVerdict::StableLikely
    } else {
        StabilityVerdict::Inconclusive
    }
}

/// Classifies the arrival rates as stable or unstable from the trend of
/// windowed mean queue lengths.
pub fn detect_stability(config: &SimConfig, window_count: usize) -> Result<StabilityVerdict> {
    config.require_horizon(MIN_DETECT_HORIZON)?;
    if window_count < 10 {
        return Err(Error::ConfigInvalid(format!(
            "window_count {window_count} is below the required 10"
        )));
    }
    let (_, trace) = run_traced(config, TraceOptions { windows: window_count, ..Default::default() })?;
    Ok(classify_windows(&trace))
}
