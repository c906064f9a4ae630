//! Outcome records for individual identity checks.
//!
//! A [`CheckReport`] is the unit emitted by every verification routine and by
//! the CLI report stream. The serialized key names are part of the report
//! schema and must stay stable.

use std::collections::BTreeMap;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::{Error, C64};

/// Which deviation the tolerance applies to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    Absolute,
    Relative,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Pass,
    Fail,
    Skipped,
}

/// Machine-readable reason attached to skipped cases.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SkipReason {
    PoleProximity,
    DecayFailure,
    OutOfDomain,
    InvalidArgument,
}

impl SkipReason {
    pub fn from_error(err: &Error) -> Self {
        if err.is_pole() {
            SkipReason::PoleProximity
        } else if err.is_decay_failure() {
            SkipReason::DecayFailure
        } else if matches!(err, Error::OutOfDomain(_)) {
            SkipReason::OutOfDomain
        } else {
            SkipReason::InvalidArgument
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub suite: String,
    pub check: String,
    pub params: BTreeMap<String, String>,
    pub lhs: C64,
    pub rhs: C64,
    pub abs_dev: f64,
    pub rel_dev: f64,
    pub tolerance: f64,
    pub metric: Metric,
    pub status: Status,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reason: Option<SkipReason>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
    pub wall_time_s: f64,
}

impl CheckReport {
    /// Compares two values; the status is decided on `metric`.
    pub fn compare(check: &str, lhs: C64, rhs: C64, tolerance: f64, metric: Metric) -> Self {
        let abs_dev = (lhs - rhs).norm();
        let scale = if lhs.norm() > 0.0 { lhs.norm() } else { rhs.norm() };
        let rel_dev = if abs_dev == 0.0 { 0.0 } else { abs_dev / scale };
        let dev = match metric {
            Metric::Absolute => abs_dev,
            Metric::Relative => rel_dev,
        };
        // NaN deviations fail.
        let status = if dev <= tolerance { Status::Pass } else { Status::Fail };
        Self {
            suite: String::new(),
            check: check.to_owned(),
            params: BTreeMap::new(),
            lhs,
            rhs,
            abs_dev,
            rel_dev,
            tolerance,
            metric,
            status,
            reason: None,
            detail: None,
            wall_time_s: 0.0,
        }
    }

    pub fn skipped(check: &str, err: &Error, tolerance: f64, metric: Metric) -> Self {
        Self {
            suite: String::new(),
            check: check.to_owned(),
            params: BTreeMap::new(),
            lhs: C64::new(f64::NAN, f64::NAN),
            rhs: C64::new(f64::NAN, f64::NAN),
            abs_dev: f64::NAN,
            rel_dev: f64::NAN,
            tolerance,
            metric,
            status: Status::Skipped,
            reason: Some(SkipReason::from_error(err)),
            detail: Some(err.to_string()),
            wall_time_s: 0.0,
        }
    }

    /// Runs a fallible comparison, turning numerical-guard errors into skips.
    pub fn from_result(check: &str, result: Result<(C64, C64), Error>, tolerance: f64, metric: Metric) -> Self {
        match result {
            Ok((lhs, rhs)) => Self::compare(check, lhs, rhs, tolerance, metric),
            Err(err) => Self::skipped(check, &err, tolerance, metric),
        }
    }

    pub fn param(mut self, key: &str, value: impl ToString) -> Self {
        self.params.insert(key.to_owned(), value.to_string());
        self
    }

    pub fn in_suite(mut self, suite: &str) -> Self {
        self.suite = suite.to_owned();
        self
    }

    pub fn note(mut self, detail: impl Into<String>) -> Self {
        self.detail = Some(detail.into());
        self
    }

    pub fn timed(mut self, elapsed: Duration) -> Self {
        self.wall_time_s = elapsed.as_secs_f64();
        self
    }

    /// The deviation the status was decided on.
    pub fn deviation(&self) -> f64 {
        match self.metric {
            Metric::Absolute => self.abs_dev,
            Metric::Relative => self.rel_dev,
        }
    }

    pub fn passed(&self) -> bool {
        self.status == Status::Pass
    }

    /// Canonical ordering key: suite, check name, then the sorted parameters.
    pub fn key(&self) -> String {
        let mut key = format!("{}/{}", self.suite, self.check);
        for (k, v) in &self.params {
            key.push('/');
            key.push_str(k);
            key.push('=');
            key.push_str(v);
        }
        key
    }
}

/// Pass/fail/skip counts over a batch of reports.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Tally {
    pub passed: usize,
    pub failed: usize,
    pub skipped: usize,
}

impl Tally {
    pub fn of<'a>(reports: impl IntoIterator<Item = &'a CheckReport>) -> Self {
        let mut t = Tally::default();
        for r in reports {
            match r.status {
                Status::Pass => t.passed += 1,
                Status::Fail => t.failed += 1,
                Status::Skipped => t.skipped += 1,
            }
        }
        t
    }

    pub fn total(&self) -> usize {
        self.passed + self.failed + self.skipped
    }
}

/// Largest deviation among non-skipped reports (0 when there are none).
pub fn worst_deviation<'a>(reports: impl IntoIterator<Item = &'a CheckReport>) -> f64 {
    reports
        .into_iter()
        .filter(|r| r.status != Status::Skipped)
        .map(|r| if r.deviation().is_nan() { f64::INFINITY } else { r.deviation() })
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn status_follows_metric() {
        let r = CheckReport::compare("x", C64::new(1.0, 0.0), C64::new(1.0 + 1e-9, 0.0), 1e-10, Metric::Absolute);
        assert_eq!(r.status, Status::Fail);
        let r = CheckReport::compare("x", C64::new(1e3, 0.0), C64::new(1e3 + 1e-9, 0.0), 1e-10, Metric::Relative);
        assert_eq!(r.status, Status::Pass);
    }

    #[test]
    fn nan_is_a_failure() {
        let r = CheckReport::compare("x", C64::new(f64::NAN, 0.0), C64::new(1.0, 0.0), 1.0, Metric::Absolute);
        assert_eq!(r.status, Status::Fail);
    }

    #[test]
    fn both_zero_passes() {
        let r = CheckReport::compare("x", C64::new(0.0, 0.0), C64::new(0.0, 0.0), 0.0, Metric::Relative);
        assert!(r.passed());
    }

    #[test]
    fn skip_carries_reason_code() {
        let err = Error::Pole { function: "zeta", at: C64::new(1.0, 0.0) };
        let r = CheckReport::skipped("x", &err, 1e-8, Metric::Relative);
        assert_eq!(r.reason, Some(SkipReason::PoleProximity));
        assert_eq!(Tally::of([&r]).skipped, 1);
    }
}
