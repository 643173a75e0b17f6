// `!(x > 0.0)` is used instead of `x <= 0.0` throughout: the negated form
// also rejects NaN, which every guard here wants.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

//! Rescaled-range (R/S) Hurst-exponent analysis for high-frequency quote data.
//!
//! The crate covers the full pipeline:
//!
//! 1. [`quote`] — parse time-stamped quote files into validated, ordered
//!    series with clock-time fractions, inter-quote gaps, and hour/weekday
//!    coding, plus the hour-by-weekday cross-tabulation.
//! 2. [`returns`] — convert quotes into tau-adjusted log returns
//!    (`AR = [log Q_i − log Q_{i+τ}] · scale/τ`) carrying hour/weekday bins.
//! 3. [`hurst`] — per-window rescaled adjusted range `(R/σ)_n`, rolling local
//!    Hurst streams `h_n = ln(R/σ)/ln n`, global Hurst via log-log OLS over
//!    block means, and a sample-autocorrelation diagnostic.
//! 4. [`resample`] — scramble (permutation) bootstrap of the local Hurst
//!    distribution with deterministic per-iteration seeding, plus the
//!    one-sample Z-test against the bootstrap expectation.
//! 5. [`session`] — hourly bundling, one-way ANOVA, Kruskal–Wallis, the
//!    hourly profile and range/σ decomposition tables, and figure data.
//! 6. [`synthetic`] — IID Gaussian and exact fractional Gaussian noise
//!    generators (circulant embedding with a recursive fallback) that feed
//!    the same pipeline as real data.
//! 7. [`report`] — CSV/JSON emitters with fixed column orders.
//!
//! Every random quantity is driven by an explicit 64-bit seed; results are
//! bit-identical across runs and across worker counts.

pub mod error;
pub mod hurst;
pub mod quote;
pub mod report;
pub mod resample;
pub mod returns;
pub mod series;
pub mod session;
pub mod stats;
pub mod synthetic;

pub use error::{Error, Result};
pub use series::{AnalysisSeries, SeriesStamp};
