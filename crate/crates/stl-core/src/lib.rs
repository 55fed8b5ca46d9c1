//! Signal temporal logic over sampled traces: a formula AST with text
//! parsing and printing, and a quantitative robustness monitor.
//!
//! Robustness follows min/max semantics evaluated directly on the trace's
//! own samples: predicates score their margin to the threshold, boolean
//! connectives take min (and), max (or), and negation, and temporal
//! operators range over the samples whose timestamps fall inside the
//! operator window. Windows that contain no sample raise an error rather
//! than defaulting to an infinite bound.

mod eval;
mod formula;
mod parser;
mod printer;
mod trace;

pub use eval::{
    robustness, robustness_prefix, robustness_table, EvalError, Robustness, SignalTable,
    TRUE_ROBUSTNESS,
};
pub use formula::{Comparison, Formula, IntervalError, TimeInterval};
pub use parser::{parse_formula, ParseError};
pub use printer::print_formula;
pub use trace::{Trace, TraceError};
