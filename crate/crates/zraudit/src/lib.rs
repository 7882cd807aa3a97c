//! Post-hoc (zero-run) differential-privacy auditing.
//!
//! Standard privacy audits randomize which records enter training. When a
//! model is only available after the fact, the auditor instead holds two
//! fixed pools — known members and known non-members — whose feature
//! distributions usually differ. That distribution shift is itself a source
//! of membership signal, so uncorrected audits over-report leakage.
//!
//! This crate estimates per-record propensity scores (the probability that a
//! record is a member given its features) and uses them to correct
//! membership-inference audits in two ways:
//!
//! - **compositional**: treat observed leakage as the composition of a
//!   worst-case shift mechanism with the audited algorithm, and test a
//!   deflated hypothesis ([`audit::audit_comp_eps_delta`],
//!   [`audit::audit_comp_gdp`]);
//! - **conditional**: randomly drop ("tamper") guesses on shifted records so
//!   that the retained correct-guess count is stochastically dominated by the
//!   no-shift benchmark ([`audit::tamper`], [`audit::audit_cond_eps_delta`],
//!   [`audit::audit_cond_fdp`]).
//!
//! Both routes produce statistically valid empirical lower bounds on
//! (ε, δ)-DP and Gaussian-DP parameters. Supporting machinery includes the
//! closed-form trade-off calculus ([`tradeoff`]), bootstrap uncertainty
//! quantification over propensity estimation ([`bootstrap`]), a synthetic
//! noisy-sum benchmark with tunable shift ([`synth`]) and a Monte Carlo
//! harness for validity and robustness experiments ([`harness`]).
//!
//! The `examples/` directory contains one runnable walkthrough per major
//! capability; the `zraudit` binary exposes the same pipelines as small
//! file-oriented subcommands.

pub mod audit;
pub mod bootstrap;
pub mod error;
pub mod harness;
pub mod mia;
pub mod normal;
pub mod propensity;
pub mod records;
pub mod rng;
pub mod synth;
pub mod tradeoff;

pub use audit::{AuditInput, AuditMode, AuditRecord, AuditReport, Decision, PrivacyHypothesis};
pub use error::{Error, Result};
pub use tradeoff::TradeoffCurve;
