//! Stability regions and delay of two-user slotted ALOHA in which each user
//! adapts its transmission probability to the state of its own
//! Gilbert-Elliott channel.
//!
//! * [`channel`]: the two-state Markov channel.
//! * [`model`]: system parameters, policies, arrival rates and JSON scenarios.
//! * [`stability`]: fixed-policy regions, the optimised closed-form boundary
//!   and the TDMA / uncontrolled baselines.
//! * [`delay`]: symmetric average delay and the delay-optimal policy.
//! * [`sim`]: slot-level Monte-Carlo simulator.
//! * [`oracle`]: brute-force grid search and numeric minimisation used to
//!   cross-check the closed forms.
//! * [`export`]: CSV writers.
//! * [`verify`]: the acceptance battery shared by the test suite and the CLI.

pub mod channel;
pub mod delay;
pub mod error;
pub mod export;
pub mod model;
pub mod oracle;
pub mod sim;
pub mod stability;
pub mod verify;

pub use error::{Error, FieldError, Result};
