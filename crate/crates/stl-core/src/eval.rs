use thiserror::Error;

use crate::formula::{Comparison, Formula, TimeInterval};
use crate::trace::Trace;

/// Quantitative satisfaction margin. Positive means satisfied, negative
/// violated, and magnitude is the margin in signal units.
pub type Robustness = f64;

/// Robustness assigned to `true`: a large finite constant instead of +inf
/// so results stay finite under negation and min/max composition.
pub const TRUE_ROBUSTNESS: f64 = f64::MAX;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EvalError {
    #[error("trace has no channel named `{0}`")]
    MissingSignal(String),
    #[error("empty evaluation window for `{op}` at t={time}")]
    EmptyWindow { op: char, time: f64 },
    #[error("time index {index} out of range for trace of length {len}")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("invalid signal table: {0}")]
    BadTable(String),
}

/// Borrowed column view of a sampled signal set, for callers that keep
/// their own growing buffers and want to evaluate without copying into a
/// [`Trace`].
pub struct SignalTable<'a> {
    times: &'a [f64],
    names: &'a [String],
    columns: &'a [Vec<f64>],
}

impl<'a> SignalTable<'a> {
    pub fn new(
        times: &'a [f64],
        names: &'a [String],
        columns: &'a [Vec<f64>],
    ) -> Result<Self, EvalError> {
        if times.is_empty() {
            return Err(EvalError::BadTable("no samples".into()));
        }
        if names.len() != columns.len() {
            return Err(EvalError::BadTable(format!(
                "{} names but {} columns",
                names.len(),
                columns.len()
            )));
        }
        for (name, col) in names.iter().zip(columns) {
            if col.len() != times.len() {
                return Err(EvalError::BadTable(format!(
                    "channel `{name}` has {} values for {} timestamps",
                    col.len(),
                    times.len()
                )));
            }
        }
        if times.windows(2).any(|w| w[0] >= w[1]) {
            return Err(EvalError::BadTable("timestamps not strictly increasing".into()));
        }
        Ok(SignalTable { times, names, columns })
    }

    fn column(&self, name: &str) -> Option<&'a [f64]> {
        self.names
            .iter()
            .position(|n| n == name)
            .map(|i| self.columns[i].as_slice())
    }
}

/// Robustness of `f` against `trace` at sample index `t_index`.
///
/// Semantics are over the trace's own samples: temporal operators range
/// over sample indices whose timestamp offset falls inside the operator
/// window (endpoints included), and an unbounded window extends to the end
/// of the trace. A window that contains no sample at all is an error, as is
/// a predicate over a channel the trace does not carry.
pub fn robustness(f: &Formula, trace: &Trace, t_index: usize) -> Result<Robustness, EvalError> {
    let (times, names, columns) = trace.columns();
    let table = SignalTable { times, names, columns };
    robustness_table(f, &table, t_index)
}

/// Robustness at the first sample: the whole trace participates.
pub fn robustness_prefix(f: &Formula, trace: &Trace) -> Result<Robustness, EvalError> {
    robustness(f, trace, 0)
}

/// [`robustness`] over a borrowed column view.
pub fn robustness_table(
    f: &Formula,
    table: &SignalTable,
    t_index: usize,
) -> Result<Robustness, EvalError> {
    let n = table.times.len();
    if t_index >= n {
        return Err(EvalError::IndexOutOfRange { index: t_index, len: n });
    }
    let mut sig = eval(f, table);
    sig.swap_remove(t_index)
}

/// Per-sample evaluation outcome of one subformula, computed bottom-up.
///
/// Definedness is tracked per index: with irregular sampling, a window
/// anchored at one instant can be empty while a later instant's window is
/// not, so the valid region is not contiguous in general.
type NodeSignal = Vec<Result<f64, EvalError>>;

fn eval(f: &Formula, tbl: &SignalTable) -> NodeSignal {
    let n = tbl.times.len();
    match f {
        Formula::True => vec![Ok(TRUE_ROBUSTNESS); n],
        Formula::Predicate { signal, cmp, threshold } => match tbl.column(signal) {
            None => vec![Err(EvalError::MissingSignal(signal.clone())); n],
            Some(col) => col
                .iter()
                .map(|x| {
                    Ok(match cmp {
                        Comparison::Greater => x - threshold,
                        Comparison::Less => threshold - x,
                    })
                })
                .collect(),
        },
        Formula::Not(sub) => eval(sub, tbl).into_iter().map(|r| r.map(|v| -v)).collect(),
        Formula::And(a, b) => eval_binary(eval(a, tbl), eval(b, tbl), f64::min),
        Formula::Or(a, b) => eval_binary(eval(a, tbl), eval(b, tbl), f64::max),
        Formula::Eventually(iv, sub) => eval_window('F', true, iv, eval(sub, tbl), tbl.times),
        Formula::Always(iv, sub) => eval_window('G', false, iv, eval(sub, tbl), tbl.times),
        Formula::Until(iv, a, b) => eval_until(iv, eval(a, tbl), eval(b, tbl), tbl.times),
    }
}

fn eval_binary(a: NodeSignal, b: NodeSignal, combine: fn(f64, f64) -> f64) -> NodeSignal {
    a.into_iter()
        .zip(b)
        .map(|(x, y)| match (x, y) {
            (Ok(x), Ok(y)) => Ok(combine(x, y)),
            (Err(e), _) | (Ok(_), Err(e)) => Err(e),
        })
        .collect()
}

fn eval_window(
    op: char,
    is_max: bool,
    iv: &TimeInterval,
    sub: NodeSignal,
    times: &[f64],
) -> NodeSignal {
    let n = times.len();
    let mut out = Vec::with_capacity(n);

    if iv.upper() == f64::INFINITY {
        // Every window reaches the trace end, so precompute suffix results:
        // first_err[j] is the earliest failed index at or after j (n when the
        // whole suffix is clean), and ext[j] the suffix extremum, meaningful
        // only when that suffix is clean.
        let mut first_err = vec![n; n + 1];
        let mut ext = vec![0.0; n];
        for j in (0..n).rev() {
            match &sub[j] {
                Err(_) => first_err[j] = j,
                Ok(v) => {
                    first_err[j] = first_err[j + 1];
                    ext[j] = if first_err[j] == n && j + 1 < n {
                        if is_max { v.max(ext[j + 1]) } else { v.min(ext[j + 1]) }
                    } else {
                        *v
                    };
                }
            }
        }
        let mut lo = 0usize;
        for i in 0..n {
            if lo < i {
                lo = i;
            }
            while lo < n && times[lo] - times[i] < iv.lower() {
                lo += 1;
            }
            out.push(if lo >= n {
                Err(EvalError::EmptyWindow { op, time: times[i] })
            } else if first_err[lo] < n {
                sub[first_err[lo]].clone()
            } else {
                Ok(ext[lo])
            });
        }
        return out;
    }

    let mut lo = 0usize;
    let mut end = 0usize; // exclusive window end
    for i in 0..n {
        if lo < i {
            lo = i;
        }
        while lo < n && times[lo] - times[i] < iv.lower() {
            lo += 1;
        }
        if end < lo {
            end = lo;
        }
        while end < n && times[end] - times[i] <= iv.upper() {
            end += 1;
        }
        if lo >= end {
            out.push(Err(EvalError::EmptyWindow { op, time: times[i] }));
            continue;
        }
        let mut acc: Result<f64, EvalError> = sub[lo].clone();
        for j in lo + 1..end {
            acc = match (acc, &sub[j]) {
                (Ok(x), Ok(y)) => Ok(if is_max { x.max(*y) } else { x.min(*y) }),
                (Err(e), _) => Err(e),
                (Ok(_), Err(e)) => Err(e.clone()),
            };
        }
        out.push(acc);
    }
    out
}

fn eval_until(iv: &TimeInterval, a: NodeSignal, b: NodeSignal, times: &[f64]) -> NodeSignal {
    let n = times.len();
    let mut out = Vec::with_capacity(n);
    let mut lo = 0usize;
    let mut end = 0usize; // exclusive end of the window over `b`
    for i in 0..n {
        if lo < i {
            lo = i;
        }
        while lo < n && times[lo] - times[i] < iv.lower() {
            lo += 1;
        }
        if end < lo {
            end = lo;
        }
        while end < n && times[end] - times[i] <= iv.upper() {
            end += 1;
        }
        if lo >= end {
            out.push(Err(EvalError::EmptyWindow { op: 'U', time: times[i] }));
            continue;
        }
        out.push(until_at(i, lo, end, &a, &b));
    }
    out
}

/// Witness quality at one evaluation instant: `b` is sampled inside the
/// window `[lo, end)`; `a` must hold from the instant `i` through the chosen
/// sample, endpoints included.
fn until_at(
    i: usize,
    lo: usize,
    end: usize,
    a: &NodeSignal,
    b: &NodeSignal,
) -> Result<f64, EvalError> {
    let mut run_min = f64::INFINITY;
    let mut best: Option<f64> = None;
    for j in i..end {
        match &a[j] {
            Err(e) => return Err(e.clone()),
            Ok(v) => run_min = run_min.min(*v),
        }
        if j >= lo {
            let witness = match &b[j] {
                Err(e) => return Err(e.clone()),
                Ok(v) => *v,
            };
            let cand = witness.min(run_min);
            best = Some(match best {
                Some(x) => x.max(cand),
                None => cand,
            });
        }
    }
    Ok(best.expect("window checked non-empty"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::parse_formula;

    fn trace(times: &[f64], channels: &[(&str, &[f64])]) -> Trace {
        Trace::new(
            times.to_vec(),
            channels.iter().map(|(n, v)| (n.to_string(), v.to_vec())).collect(),
        )
        .unwrap()
    }

    #[test]
    fn predicate_margin_is_signed_distance_to_threshold() {
        let tr = trace(&[0.0], &[("x", &[5.0])]);
        assert_eq!(robustness(&Formula::gt("x", 0.0), &tr, 0).unwrap(), 5.0);
        assert_eq!(robustness(&Formula::lt("x", 0.0), &tr, 0).unwrap(), -5.0);
        assert_eq!(robustness(&Formula::lt("x", 7.5), &tr, 0).unwrap(), 2.5);
    }

    #[test]
    fn eventually_takes_best_future_margin() {
        let tr = trace(&[0.0, 1.0, 2.0, 3.0], &[("x", &[0.0, 1.0, 2.0, 3.0])]);
        let f = parse_formula("F (x > 2.5)").unwrap();
        assert_eq!(robustness(&f, &tr, 0).unwrap(), 0.5);
        assert_eq!(robustness(&f, &tr, 3).unwrap(), 0.5);
    }

    #[test]
    fn always_takes_worst_margin_within_window() {
        let tr = trace(&[0.0, 1.0, 2.0, 3.0], &[("x", &[5.0, 4.0, 1.0, 9.0])]);
        let f = parse_formula("G[0,2] (x > 0)").unwrap();
        assert_eq!(robustness(&f, &tr, 0).unwrap(), 1.0);
        let g = parse_formula("G (x > 0)").unwrap();
        assert_eq!(robustness(&g, &tr, 0).unwrap(), 1.0);
        assert_eq!(robustness(&g, &tr, 3).unwrap(), 9.0);
    }

    #[test]
    fn until_requires_hold_through_the_witness() {
        let tr = trace(&[0.0, 1.0, 2.0], &[("x", &[2.0, 2.0, 2.0]), ("y", &[-1.0, -1.0, 3.0])]);
        let f = parse_formula("(x > 1) U (y > 0)").unwrap();
        assert_eq!(robustness(&f, &tr, 0).unwrap(), 1.0);
    }

    #[test]
    fn until_window_excludes_early_witnesses() {
        let tr = trace(
            &[0.0, 1.0, 2.0, 3.0],
            &[("x", &[5.0, 4.0, 3.0, 2.0]), ("y", &[9.0, -1.0, 1.0, -1.0])],
        );
        // Witness must fall in [1,2]; best is t=2 with y margin 1 and x
        // minimum over [0,2] equal to 3.
        let f = parse_formula("(x > 0) U[1,2] (y > 0)").unwrap();
        assert_eq!(robustness(&f, &tr, 0).unwrap(), 1.0);
    }

    #[test]
    fn boolean_connectives_are_min_max_negation() {
        let tr = trace(&[0.0], &[("x", &[3.0]), ("y", &[-2.0])]);
        let x = Formula::gt("x", 0.0);
        let y = Formula::gt("y", 0.0);
        assert_eq!(robustness(&Formula::and(x.clone(), y.clone()), &tr, 0).unwrap(), -2.0);
        assert_eq!(robustness(&Formula::or(x.clone(), y.clone()), &tr, 0).unwrap(), 3.0);
        assert_eq!(robustness(&Formula::not(x), &tr, 0).unwrap(), -3.0);
    }

    #[test]
    fn true_is_a_large_finite_margin() {
        let tr = trace(&[0.0], &[("x", &[1.0])]);
        assert_eq!(robustness(&Formula::True, &tr, 0).unwrap(), TRUE_ROBUSTNESS);
        assert_eq!(robustness(&Formula::not(Formula::True), &tr, 0).unwrap(), -TRUE_ROBUSTNESS);
        assert_eq!(
            robustness(&Formula::and(Formula::True, Formula::gt("x", 0.0)), &tr, 0).unwrap(),
            1.0
        );
    }

    #[test]
    fn prefix_evaluation_sees_the_whole_trace() {
        let tr = trace(&[0.0, 20.0, 40.0], &[("in_goal", &[-1.0, -1.0, 0.3])]);
        let f = parse_formula("F (in_goal > 0)").unwrap();
        assert_eq!(robustness_prefix(&f, &tr).unwrap(), 0.3);

        let single = trace(&[0.0], &[("in_goal", &[0.25])]);
        assert_eq!(robustness_prefix(&f, &single).unwrap(), 0.25);
    }

    #[test]
    fn staged_formula_rewards_ordered_visits() {
        let f = parse_formula("F ((d1 > 0) & F ((d2 > 0) & F G (d3 > 0)))").unwrap();
        let ordered = trace(
            &[0.0, 1.0, 2.0, 3.0],
            &[
                ("d1", &[-1.0, 2.0, -1.0, -1.0]),
                ("d2", &[-1.0, -1.0, 2.0, -1.0]),
                ("d3", &[-1.0, -1.0, -1.0, 2.0]),
            ],
        );
        assert!(robustness_prefix(&f, &ordered).unwrap() > 0.0);

        let reversed = trace(
            &[0.0, 1.0, 2.0, 3.0],
            &[
                ("d1", &[-1.0, -1.0, -1.0, 2.0]),
                ("d2", &[-1.0, -1.0, 2.0, -1.0]),
                ("d3", &[2.0, -1.0, -1.0, -1.0]),
            ],
        );
        assert!(robustness_prefix(&f, &reversed).unwrap() < 0.0);
    }

    #[test]
    fn empty_window_is_an_error_not_a_sentinel() {
        let tr = trace(&[0.0, 1.0, 2.0, 3.0], &[("x", &[1.0, 1.0, 1.0, 1.0])]);
        let f = parse_formula("G[5,6] (x > 0)").unwrap();
        assert!(matches!(
            robustness(&f, &tr, 0),
            Err(EvalError::EmptyWindow { op: 'G', .. })
        ));

        // Defined near the start, undefined when the shifted window slides
        // past the end of the trace.
        let g = parse_formula("F[2,3] (x > 0)").unwrap();
        assert!(robustness(&g, &tr, 0).is_ok());
        assert!(matches!(robustness(&g, &tr, 2), Err(EvalError::EmptyWindow { .. })));
    }

    #[test]
    fn window_emptiness_is_per_instant_not_a_prefix() {
        // With irregular sampling the window [3.5, 4.5] is empty at the
        // first instant yet lands on a sample at the second; the middle
        // index must evaluate even though its neighbors fail.
        let tr = trace(&[0.0, 3.0, 7.0], &[("x", &[1.0, 1.0, 8.0])]);
        let f = parse_formula("G[3.5,4.5] (x > 0)").unwrap();
        assert!(matches!(robustness(&f, &tr, 0), Err(EvalError::EmptyWindow { .. })));
        assert_eq!(robustness(&f, &tr, 1).unwrap(), 8.0);
        assert!(matches!(robustness(&f, &tr, 2), Err(EvalError::EmptyWindow { .. })));
    }

    #[test]
    fn missing_signal_and_bad_index_are_errors() {
        let tr = trace(&[0.0], &[("x", &[1.0])]);
        assert_eq!(
            robustness(&Formula::gt("nope", 0.0), &tr, 0),
            Err(EvalError::MissingSignal("nope".into()))
        );
        assert!(matches!(
            robustness(&Formula::gt("x", 0.0), &tr, 5),
            Err(EvalError::IndexOutOfRange { index: 5, len: 1 })
        ));
    }

    #[test]
    fn error_in_needed_subwindow_propagates() {
        let tr = trace(&[0.0, 1.0, 2.0], &[("x", &[1.0, 1.0, 1.0])]);
        // The outer F scans every suffix sample, so the inner bounded G's
        // undefined tail poisons the whole evaluation.
        let f = parse_formula("F (G[1,2] (x > 0))").unwrap();
        assert!(robustness(&f, &tr, 0).is_err());
        // With a bounded outer window that stops early, evaluation succeeds.
        let g = parse_formula("F[0,0] (G[1,2] (x > 0))").unwrap();
        assert_eq!(robustness(&g, &tr, 0).unwrap(), 1.0);
    }
}
