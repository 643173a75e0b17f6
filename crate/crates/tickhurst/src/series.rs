//! Shared value-plus-clock-tags series view consumed by the analysis stages.

use chrono::{DateTime, Datelike, Timelike, Utc};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Clock tags carried alongside one observation: the instant it belongs to,
/// its GMT hour 0..23, and its ISO weekday 1 (Monday) .. 7 (Sunday).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeriesStamp {
    pub timestamp: DateTime<Utc>,
    pub hour: u8,
    pub weekday: u8,
}

impl SeriesStamp {
    pub fn from_timestamp(timestamp: DateTime<Utc>) -> Self {
        SeriesStamp {
            timestamp,
            hour: timestamp.hour() as u8,
            weekday: timestamp.weekday().number_from_monday() as u8,
        }
    }
}

/// A value sequence with aligned clock stamps — the common input to windowed
/// Hurst analysis, bootstrap scrambling, and hourly bundling. Both adjusted
/// returns and synthetic series reduce to this view, so every downstream
/// stage treats them identically.
#[derive(Debug, Clone, PartialEq)]
pub struct AnalysisSeries {
    pub values: Vec<f64>,
    pub stamps: Vec<SeriesStamp>,
}

impl AnalysisSeries {
    pub fn new(values: Vec<f64>, stamps: Vec<SeriesStamp>) -> Result<Self> {
        if values.len() != stamps.len() {
            return Err(Error::Config(format!(
                "values ({}) and stamps ({}) must have equal length",
                values.len(),
                stamps.len()
            )));
        }
        Ok(AnalysisSeries { values, stamps })
    }

    /// Build a series on an evenly spaced synthetic clock starting at
    /// `start` with `spacing_seconds` between observations.
    pub fn with_uniform_clock(
        values: Vec<f64>,
        start: DateTime<Utc>,
        spacing_seconds: u64,
    ) -> Result<Self> {
        if spacing_seconds == 0 {
            return Err(Error::Config("clock spacing must be at least 1 second".into()));
        }
        let stamps = (0..values.len())
            .map(|i| {
                let t = start + chrono::Duration::seconds((i as u64 * spacing_seconds) as i64);
                SeriesStamp::from_timestamp(t)
            })
            .collect();
        Ok(AnalysisSeries { values, stamps })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Iterate `(hour, value)` pairs for hourly bundling.
    pub fn hour_tagged(&self) -> impl Iterator<Item = (u8, f64)> + '_ {
        self.stamps
            .iter()
            .zip(self.values.iter())
            .map(|(s, v)| (s.hour, *v))
    }
}
