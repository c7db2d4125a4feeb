//! Parameter types shared by the analytical and simulation modules.

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::channel::ChannelParams;
use crate::error::{Error, FieldError, Result};

/// Both users' channels and their reception probabilities.
///
/// Bad-state success probability is zero and is never stored.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemParams {
    pub channel1: ChannelParams,
    pub channel2: ChannelParams,
    /// Success probability of user 1 transmitting alone in the good state.
    pub f11: f64,
    /// Success probability of user 2 transmitting alone in the good state.
    pub f12: f64,
    /// Success probability of user 1 when both transmit (multipacket reception).
    #[serde(default)]
    pub mpr1: f64,
    /// Success probability of user 2 when both transmit.
    #[serde(default)]
    pub mpr2: f64,
}

fn finite(errors: &mut Vec<FieldError>, field: &str, v: f64) -> bool {
    if v.is_finite() {
        true
    } else {
        errors.push(FieldError::new(field, format!("{field} must be a finite number")));
        false
    }
}

fn unit_interval(errors: &mut Vec<FieldError>, field: &str, v: f64) {
    if finite(errors, field, v) && !(0.0..=1.0).contains(&v) {
        errors.push(FieldError::new(field, format!("{field} must lie in [0, 1]")));
    }
}

impl SystemParams {
    /// Builds parameters from stationary good-state probabilities with
    /// memoryless (i.i.d.) channels.
    pub fn from_stationary(pi1_1: f64, pi1_2: f64, f11: f64, f12: f64) -> Result<Self> {
        Self {
            channel1: ChannelParams::from_stationary(pi1_1, 0.0)?,
            channel2: ChannelParams::from_stationary(pi1_2, 0.0)?,
            f11,
            f12,
            mpr1: 0.0,
            mpr2: 0.0,
        }
        .checked()
    }

    pub fn with_mpr(mut self, mpr1: f64, mpr2: f64) -> Result<Self> {
        self.mpr1 = mpr1;
        self.mpr2 = mpr2;
        self.checked()
    }

    /// Every violated invariant, in field order. Never panics.
    pub fn validate(&self) -> Vec<FieldError> {
        let mut errors = self.channel1.validate_as("channel1");
        errors.extend(self.channel2.validate_as("channel2"));
        for (name, f) in [("f11", self.f11), ("f12", self.f12)] {
            if finite(&mut errors, name, f) {
                if f <= 0.0 {
                    errors.push(FieldError::new(name, format!("{name} must be positive")));
                } else if f > 1.0 {
                    errors.push(FieldError::new(name, format!("{name} must be at most 1")));
                }
            }
        }
        for (name, m, fname, f) in [
            ("mpr1", self.mpr1, "f11", self.f11),
            ("mpr2", self.mpr2, "f12", self.f12),
        ] {
            if finite(&mut errors, name, m) {
                if m < 0.0 {
                    errors.push(FieldError::new(name, format!("{name} must be non-negative")));
                } else if f.is_finite() && m > f {
                    errors.push(FieldError::new(name, format!("{name} > {fname}")));
                }
            }
        }
        errors
    }

    pub fn checked(self) -> Result<Self> {
        let errors = self.validate();
        if errors.is_empty() {
            Ok(self)
        } else {
            Err(Error::InvalidParams(errors))
        }
    }

    /// Stationary good-state probability of user 1's channel.
    pub fn good1(&self) -> f64 {
        self.channel1.stationary().pi1
    }

    pub fn good2(&self) -> f64 {
        self.channel2.stationary().pi1
    }

    /// Fraction of user 1's good-state success lost to a simultaneous
    /// good-state transmission by user 2: `1 - mpr1 / f11`.
    pub fn collision_loss1(&self) -> f64 {
        1.0 - self.mpr1 / self.f11
    }

    pub fn collision_loss2(&self) -> f64 {
        1.0 - self.mpr2 / self.f12
    }

    pub fn has_mpr(&self) -> bool {
        self.mpr1 > 0.0 || self.mpr2 > 0.0
    }
}

/// Channel-state-dependent transmission probabilities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Policy {
    /// User 1 transmits with this probability when its channel is bad.
    pub q01: f64,
    /// User 1 transmits with this probability when its channel is good.
    pub q11: f64,
    pub q02: f64,
    pub q12: f64,
}

impl Default for Policy {
    fn default() -> Self {
        Self::good_only(1.0, 1.0)
    }
}

impl Policy {
    /// Transmit only in the good state.
    pub fn good_only(q11: f64, q12: f64) -> Self {
        Self {
            q01: 0.0,
            q11,
            q02: 0.0,
            q12,
        }
    }

    pub fn validate(&self) -> Vec<FieldError> {
        let mut errors = Vec::new();
        for (name, v) in [
            ("policy.q01", self.q01),
            ("policy.q11", self.q11),
            ("policy.q02", self.q02),
            ("policy.q12", self.q12),
        ] {
            unit_interval(&mut errors, name, v);
        }
        errors
    }

    pub fn checked(self) -> Result<Self> {
        let errors = self.validate();
        if errors.is_empty() {
            Ok(self)
        } else {
            Err(Error::InvalidParams(errors))
        }
    }

    /// Transmission probability of `user` (1 or 2) in the given channel state.
    pub fn q(&self, user: usize, good: bool) -> f64 {
        match (user, good) {
            (1, false) => self.q01,
            (1, true) => self.q11,
            (_, false) => self.q02,
            (_, true) => self.q12,
        }
    }
}

/// Bernoulli arrival rates in packets per slot.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ArrivalRates {
    pub lambda1: f64,
    pub lambda2: f64,
}

impl ArrivalRates {
    pub fn new(lambda1: f64, lambda2: f64) -> Self {
        Self { lambda1, lambda2 }
    }

    pub fn validate(&self) -> Vec<FieldError> {
        let mut errors = Vec::new();
        unit_interval(&mut errors, "arrivals.lambda1", self.lambda1);
        unit_interval(&mut errors, "arrivals.lambda2", self.lambda2);
        errors
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self::new(self.lambda1 * factor, self.lambda2 * factor)
    }
}

/// JSON scenario file: system parameters plus optional policy and arrivals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub channel1: ChannelParams,
    pub channel2: ChannelParams,
    pub f11: f64,
    pub f12: f64,
    #[serde(default)]
    pub mpr1: f64,
    #[serde(default)]
    pub mpr2: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub policy: Option<Policy>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub arrivals: Option<ArrivalRates>,
}

impl Scenario {
    pub fn from_json(text: &str) -> Result<Self> {
        let scenario: Scenario = serde_json::from_str(text)
            .map_err(|e| Error::InvalidParams(vec![FieldError::new("scenario", e.to_string())]))?;
        scenario.checked()
    }

    pub fn system(&self) -> SystemParams {
        SystemParams {
            channel1: self.channel1,
            channel2: self.channel2,
            f11: self.f11,
            f12: self.f12,
            mpr1: self.mpr1,
            mpr2: self.mpr2,
        }
    }

    pub fn policy(&self) -> Policy {
        self.policy.unwrap_or_default()
    }

    pub fn arrivals(&self) -> ArrivalRates {
        self.arrivals.unwrap_or_default()
    }

    pub fn validate(&self) -> Vec<FieldError> {
        let mut errors = self.system().validate();
        if let Some(p) = &self.policy {
            errors.extend(p.validate());
        }
        if let Some(a) = &self.arrivals {
            errors.extend(a.validate());
        }
        errors
    }

    pub fn checked(self) -> Result<Self> {
        let errors = self.validate();
        if errors.is_empty() {
            Ok(self)
        } else {
            Err(Error::InvalidParams(errors))
        }
    }

    /// Applies a `dotted.path=value` override, e.g. `channel1.p_g2b=0.3`.
    pub fn apply_override(&self, assignment: &str) -> Result<Self> {
        let bad = |msg: String| Error::InvalidParams(vec![FieldError::new("--set", msg)]);
        let (path, raw) = assignment
            .split_once('=')
            .ok_or_else(|| bad(format!("expected key=value, got `{assignment}`")))?;
        let value: Value =
            serde_json::from_str(raw.trim()).unwrap_or_else(|_| Value::String(raw.trim().into()));

        let mut doc = serde_json::to_value(self).expect("scenario serializes");
        let mut node = &mut doc;
        let keys: Vec<&str> = path.trim().split('.').collect();
        for (i, key) in keys.iter().enumerate() {
            let obj = node
                .as_object_mut()
                .ok_or_else(|| bad(format!("`{path}` does not address an object field")))?;
            if i + 1 == keys.len() {
                obj.insert((*key).to_string(), value.clone());
                break;
            }
            node = obj
                .entry((*key).to_string())
                .or_insert_with(|| Value::Object(Default::default()));
        }
        let scenario: Scenario = serde_json::from_value(doc)
            .map_err(|e| bad(format!("`{assignment}`: {e}")))?;
        scenario.checked()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base() -> SystemParams {
        SystemParams::from_stationary(0.6, 0.6, 1.0, 1.0).unwrap()
    }

    fn messages(p: &SystemParams) -> Vec<String> {
        p.validate().into_iter().map(|e| e.to_string()).collect()
    }

    #[test]
    fn mpr_above_f_rejected() {
        let mut p = base();
        p.f11 = 0.9;
        p.mpr1 = 0.95;
        assert_eq!(messages(&p), vec!["mpr1 > f11"]);
    }

    #[test]
    fn unit_success_no_mpr_valid() {
        assert!(base().validate().is_empty());
    }

    #[test]
    fn zero_f12_rejected() {
        let mut p = base();
        p.f12 = 0.0;
        assert_eq!(messages(&p), vec!["f12 must be positive"]);
    }

    #[test]
    fn non_finite_fields_rejected_without_panic() {
        let mut p = base();
        p.f11 = f64::NAN;
        p.mpr2 = f64::INFINITY;
        p.channel1.p_g2b = f64::NEG_INFINITY;
        let errs = p.validate();
        let fields: Vec<_> = errs.iter().map(|e| e.field.as_str()).collect();
        assert!(fields.contains(&"f11"));
        assert!(fields.contains(&"mpr2"));
        assert!(fields.contains(&"channel1.p_g2b"));
    }

    #[test]
    fn scenario_rejects_unknown_keys() {
        let text = r#"{"channel1":{"p_g2b":0.4,"p_b2g":0.6},"channel2":{"p_g2b":0.4,"p_b2g":0.6},
                      "f11":1,"f12":1,"bogus":3}"#;
        assert!(Scenario::from_json(text).is_err());
    }

    #[test]
    fn scenario_defaults_and_override() {
        let text = r#"{"channel1":{"p_g2b":0.4,"p_b2g":0.6},"channel2":{"p_g2b":0.4,"p_b2g":0.6},
                      "f11":1,"f12":0.8}"#;
        let s = Scenario::from_json(text).unwrap();
        assert_eq!(s.mpr1, 0.0);
        assert_eq!(s.policy(), Policy::good_only(1.0, 1.0));
        let s2 = s.apply_override("channel1.p_g2b=0.2").unwrap();
        assert_eq!(s2.channel1.p_g2b, 0.2);
        let s3 = s.apply_override("arrivals.lambda1=0.1").unwrap();
        assert_eq!(s3.arrivals().lambda1, 0.1);
        assert!(s.apply_override("mpr2=0.9").is_err());
        assert!(s.apply_override("nothing").is_err());
    }

    #[test]
    fn policy_lookup() {
        let p = Policy { q01: 0.1, q11: 0.2, q02: 0.3, q12: 0.4 };
        assert_eq!(p.q(1, false), 0.1);
        assert_eq!(p.q(1, true), 0.2);
        assert_eq!(p.q(2, false), 0.3);
        assert_eq!(p.q(2, true), 0.4);
        assert_eq!(Policy { q11: 1.2, ..p }.validate().len(), 1);
    }
}
