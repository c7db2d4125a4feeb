//! Two-state Gilbert-Elliott channel of a single user.
//!
//! The analytical side only ever needs the stationary distribution; the
//! simulator steps the full Markov chain slot by slot.

use serde::{Deserialize, Serialize};

use crate::error::{Error, FieldError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ChannelState {
    Bad = 0,
    Good = 1,
}

impl ChannelState {
    pub fn is_good(self) -> bool {
        self == ChannelState::Good
    }
}

/// Per-slot transition probabilities of the chain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelParams {
    /// Probability of moving from the good state to the bad state.
    pub p_g2b: f64,
    /// Probability of moving from the bad state to the good state.
    pub p_b2g: f64,
}

/// Long-run fraction of slots spent in each state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StationaryDist {
    pub pi0: f64,
    pub pi1: f64,
}

fn check_probability(errors: &mut Vec<FieldError>, field: String, value: f64) {
    if !value.is_finite() {
        errors.push(FieldError::new(field, "must be a finite number"));
    } else if !(0.0..=1.0).contains(&value) {
        errors.push(FieldError::new(field, "must lie in [0, 1]"));
    }
}

impl ChannelParams {
    pub fn new(p_g2b: f64, p_b2g: f64) -> Result<Self> {
        let params = Self { p_g2b, p_b2g };
        let errors = params.validate_as("channel");
        if !errors.is_empty() {
            if errors.iter().all(|e| e.message.contains("reducible")) {
                return Err(Error::DegenerateChain);
            }
            return Err(Error::InvalidParams(errors));
        }
        Ok(params)
    }

    /// Chain with stationary good-state probability `pi1` and lag-one
    /// autocorrelation `memory`. `memory = 0` gives i.i.d. states.
    pub fn from_stationary(pi1: f64, memory: f64) -> Result<Self> {
        let mut errors = Vec::new();
        check_probability(&mut errors, "pi1".into(), pi1);
        if !memory.is_finite() || !(0.0..1.0).contains(&memory) {
            errors.push(FieldError::new("memory", "must lie in [0, 1)"));
        }
        if !errors.is_empty() {
            return Err(Error::InvalidParams(errors));
        }
        Self::new((1.0 - memory) * (1.0 - pi1), (1.0 - memory) * pi1)
    }

    /// Collects every violated invariant, prefixing field names with `prefix`.
    pub fn validate_as(&self, prefix: &str) -> Vec<FieldError> {
        let mut errors = Vec::new();
        check_probability(&mut errors, format!("{prefix}.p_g2b"), self.p_g2b);
        check_probability(&mut errors, format!("{prefix}.p_b2g"), self.p_b2g);
        if errors.is_empty() && self.p_g2b + self.p_b2g <= 0.0 {
            errors.push(FieldError::new(
                prefix,
                "reducible chain: p_g2b + p_b2g must be positive",
            ));
        }
        errors
    }

    /// Stationary distribution of an already validated chain.
    pub fn stationary(&self) -> StationaryDist {
        let pi1 = self.p_b2g / (self.p_g2b + self.p_b2g);
        StationaryDist { pi0: 1.0 - pi1, pi1 }
    }

    /// Lag-one autocorrelation of the state indicator, `1 - p_g2b - p_b2g`.
    pub fn memory(&self) -> f64 {
        1.0 - self.p_g2b - self.p_b2g
    }
}

pub fn stationary_distribution(params: &ChannelParams) -> Result<StationaryDist> {
    let errors = params.validate_as("channel");
    if errors.is_empty() {
        Ok(params.stationary())
    } else if params.p_g2b + params.p_b2g == 0.0 {
        Err(Error::DegenerateChain)
    } else {
        Err(Error::InvalidParams(errors))
    }
}

/// Advances the chain by one slot using a uniform draw in `[0, 1)`.
pub fn step(current: ChannelState, params: &ChannelParams, draw: f64) -> ChannelState {
    match current {
        ChannelState::Good if draw < params.p_g2b => ChannelState::Bad,
        ChannelState::Good => ChannelState::Good,
        ChannelState::Bad if draw < params.p_b2g => ChannelState::Good,
        ChannelState::Bad => ChannelState::Bad,
    }
}

/// Draws a state from the stationary distribution.
pub fn sample_stationary(params: &ChannelParams, draw: f64) -> ChannelState {
    if draw < params.stationary().pi1 {
        ChannelState::Good
    } else {
        ChannelState::Bad
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() <= 1e-12
    }

    #[test]
    fn stationary_examples() {
        let d = stationary_distribution(&ChannelParams { p_g2b: 0.2, p_b2g: 0.3 }).unwrap();
        assert!(close(d.pi0, 0.4) && close(d.pi1, 0.6));
        let d = stationary_distribution(&ChannelParams { p_g2b: 0.0, p_b2g: 0.5 }).unwrap();
        assert_eq!((d.pi0, d.pi1), (0.0, 1.0));
        let d = stationary_distribution(&ChannelParams { p_g2b: 0.5, p_b2g: 0.5 }).unwrap();
        assert_eq!((d.pi0, d.pi1), (0.5, 0.5));
    }

    #[test]
    fn reducible_chain_rejected() {
        assert_eq!(
            stationary_distribution(&ChannelParams { p_g2b: 0.0, p_b2g: 0.0 }),
            Err(Error::DegenerateChain)
        );
        assert_eq!(ChannelParams::new(0.0, 0.0), Err(Error::DegenerateChain));
        assert!(matches!(
            ChannelParams::new(f64::NAN, 0.1),
            Err(Error::InvalidParams(_))
        ));
        assert!(matches!(
            ChannelParams::new(1.5, 0.1),
            Err(Error::InvalidParams(_))
        ));
    }

    #[test]
    fn step_examples() {
        let p = ChannelParams { p_g2b: 0.0, p_b2g: 0.5 };
        assert_eq!(step(ChannelState::Good, &p, 0.99), ChannelState::Good);
        let p = ChannelParams { p_g2b: 0.3, p_b2g: 1.0 };
        assert_eq!(step(ChannelState::Bad, &p, 0.0), ChannelState::Good);
        let p = ChannelParams { p_g2b: 0.2, p_b2g: 0.3 };
        assert_eq!(step(ChannelState::Good, &p, 0.1), ChannelState::Bad);
        assert_eq!(step(ChannelState::Good, &p, 0.2), ChannelState::Good);
    }

    #[test]
    fn from_stationary_keeps_distribution() {
        for memory in [0.0, 0.3, 0.9] {
            let p = ChannelParams::from_stationary(0.7, memory).unwrap();
            assert!((p.stationary().pi1 - 0.7).abs() < 1e-12);
            assert!((p.memory() - memory).abs() < 1e-12);
        }
        assert!(ChannelParams::from_stationary(0.5, 1.0).is_err());
    }

    #[test]
    fn empirical_occupancy_converges() {
        let params = ChannelParams { p_g2b: 0.05, p_b2g: 0.08 };
        let pi = params.stationary();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut state = sample_stationary(&params, rng.gen());
        let t = 1_000_000usize;
        let mut good = 0usize;
        for _ in 0..t {
            if state.is_good() {
                good += 1;
            }
            state = step(state, &params, rng.gen());
        }
        let t_eff = t as f64 * (params.p_g2b + params.p_b2g) / 2.0;
        let tol = 4.0 * (pi.pi1 * pi.pi0 / t_eff).sqrt();
        assert!((good as f64 / t as f64 - pi.pi1).abs() <= tol);
    }

    #[test]
    fn independent_chains_factorize() {
        let a = ChannelParams { p_g2b: 0.2, p_b2g: 0.3 };
        let b = ChannelParams { p_g2b: 0.4, p_b2g: 0.1 };
        let mut ra = ChaCha8Rng::seed_from_u64(1);
        ra.set_stream(1);
        let mut rb = ChaCha8Rng::seed_from_u64(1);
        rb.set_stream(2);
        let (mut sa, mut sb) = (ChannelState::Good, ChannelState::Bad);
        let t = 1_000_000;
        let mut both = 0usize;
        for _ in 0..t {
            if sa.is_good() && sb.is_good() {
                both += 1;
            }
            sa = step(sa, &a, ra.gen());
            sb = step(sb, &b, rb.gen());
        }
        let expect = a.stationary().pi1 * b.stationary().pi1;
        assert!((both as f64 / t as f64 - expect).abs() < 0.01);
    }

    proptest! {
        #[test]
        fn stationary_is_fixed_point(p in 0.0f64..=1.0, q in 0.0f64..=1.0) {
            prop_assume!(p + q > 0.0);
            let params = ChannelParams { p_g2b: p, p_b2g: q };
            let d = stationary_distribution(&params).unwrap();
            prop_assert!((d.pi0 + d.pi1 - 1.0).abs() <= 1e-12);
            prop_assert!((d.pi1 * (1.0 - p) + d.pi0 * q - d.pi1).abs() <= 1e-12);
        }
    }
}
