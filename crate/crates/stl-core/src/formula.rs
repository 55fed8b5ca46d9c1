use std::collections::BTreeSet;

use thiserror::Error;

/// Comparison direction of an atomic predicate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Comparison {
    /// signal > threshold
    Greater,
    /// signal < threshold
    Less,
}

#[derive(Debug, Error, PartialEq)]
pub enum IntervalError {
    #[error("interval bounds must satisfy 0 <= lower <= upper, got [{lower}, {upper}]")]
    InvalidBounds { lower: f64, upper: f64 },
}

/// Closed time interval `[lower, upper]` in seconds attached to a temporal
/// operator. `upper` may be `f64::INFINITY` for an unbounded horizon.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeInterval {
    lower: f64,
    upper: f64,
}

impl TimeInterval {
    pub fn new(lower: f64, upper: f64) -> Result<Self, IntervalError> {
        if !(lower >= 0.0) || !(upper >= lower) || lower.is_nan() || upper.is_nan() {
            return Err(IntervalError::InvalidBounds { lower, upper });
        }
        Ok(TimeInterval { lower, upper })
    }

    /// `[0, +inf)`: no timing constraint.
    pub fn unbounded() -> Self {
        TimeInterval { lower: 0.0, upper: f64::INFINITY }
    }

    pub fn lower(&self) -> f64 {
        self.lower
    }

    pub fn upper(&self) -> f64 {
        self.upper
    }

    /// True when the interval imposes no constraint at all (`[0, +inf)`).
    pub fn is_unconstrained(&self) -> bool {
        self.lower == 0.0 && self.upper == f64::INFINITY
    }
}

impl Default for TimeInterval {
    fn default() -> Self {
        TimeInterval::unbounded()
    }
}

/// Temporal-logic formula over named scalar signals.
///
/// Atoms compare one signal sample against a constant; the temporal
/// operators quantify over future samples of the trace relative to the
/// evaluation instant.
#[derive(Debug, Clone, PartialEq)]
pub enum Formula {
    /// Trivially satisfied.
    True,
    /// `signal > threshold` or `signal < threshold`.
    Predicate { signal: String, cmp: Comparison, threshold: f64 },
    Not(Box<Formula>),
    And(Box<Formula>, Box<Formula>),
    Or(Box<Formula>, Box<Formula>),
    /// `F[interval] f`: f holds at some sample within the window.
    Eventually(TimeInterval, Box<Formula>),
    /// `G[interval] f`: f holds at every sample within the window.
    Always(TimeInterval, Box<Formula>),
    /// `f U[interval] g`: g holds at some sample within the window and f
    /// holds from the evaluation instant through that sample.
    Until(TimeInterval, Box<Formula>, Box<Formula>),
}

impl Formula {
    pub fn gt(signal: impl Into<String>, threshold: f64) -> Formula {
        Formula::Predicate { signal: signal.into(), cmp: Comparison::Greater, threshold }
    }

    pub fn lt(signal: impl Into<String>, threshold: f64) -> Formula {
        Formula::Predicate { signal: signal.into(), cmp: Comparison::Less, threshold }
    }

    pub fn not(f: Formula) -> Formula {
        Formula::Not(Box::new(f))
    }

    pub fn and(a: Formula, b: Formula) -> Formula {
        Formula::And(Box::new(a), Box::new(b))
    }

    pub fn or(a: Formula, b: Formula) -> Formula {
        Formula::Or(Box::new(a), Box::new(b))
    }

    pub fn eventually(f: Formula) -> Formula {
        Formula::Eventually(TimeInterval::unbounded(), Box::new(f))
    }

    pub fn eventually_within(interval: TimeInterval, f: Formula) -> Formula {
        Formula::Eventually(interval, Box::new(f))
    }

    pub fn always(f: Formula) -> Formula {
        Formula::Always(TimeInterval::unbounded(), Box::new(f))
    }

    pub fn always_within(interval: TimeInterval, f: Formula) -> Formula {
        Formula::Always(interval, Box::new(f))
    }

    pub fn until(a: Formula, b: Formula) -> Formula {
        Formula::Until(TimeInterval::unbounded(), Box::new(a), Box::new(b))
    }

    pub fn until_within(interval: TimeInterval, a: Formula, b: Formula) -> Formula {
        Formula::Until(interval, Box::new(a), Box::new(b))
    }

    /// Names of all signals referenced by predicates, sorted and deduplicated.
    pub fn signal_names(&self) -> Vec<String> {
        let mut out = BTreeSet::new();
        self.collect_signals(&mut out);
        out.into_iter().collect()
    }

    fn collect_signals(&self, out: &mut BTreeSet<String>) {
        match self {
            Formula::True => {}
            Formula::Predicate { signal, .. } => {
                out.insert(signal.clone());
            }
            Formula::Not(f) => f.collect_signals(out),
            Formula::And(a, b) | Formula::Or(a, b) => {
                a.collect_signals(out);
                b.collect_signals(out);
            }
            Formula::Eventually(_, f) | Formula::Always(_, f) => f.collect_signals(out),
            Formula::Until(_, a, b) => {
                a.collect_signals(out);
                b.collect_signals(out);
            }
        }
    }
}
