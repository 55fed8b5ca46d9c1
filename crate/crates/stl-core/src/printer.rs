use std::fmt;

use crate::formula::{Comparison, Formula, TimeInterval};

fn write_interval(f: &mut fmt::Formatter<'_>, iv: &TimeInterval) -> fmt::Result {
    if iv.is_unconstrained() {
        return Ok(());
    }
    if iv.upper() == f64::INFINITY {
        write!(f, "[{},inf]", iv.lower())
    } else {
        write!(f, "[{},{}]", iv.lower(), iv.upper())
    }
}

impl fmt::Display for Formula {
    /// Canonical text form: binary operators are parenthesized, unary
    /// operators prefix their operand, unconstrained windows are omitted.
    /// The output parses back to a structurally identical formula.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Formula::True => write!(f, "true"),
            Formula::Predicate { signal, cmp, threshold } => {
                let op = match cmp {
                    Comparison::Greater => '>',
                    Comparison::Less => '<',
                };
                write!(f, "({signal} {op} {threshold})")
            }
            Formula::Not(sub) => write!(f, "! {sub}"),
            Formula::And(a, b) => write!(f, "({a} & {b})"),
            Formula::Or(a, b) => write!(f, "({a} | {b})"),
            Formula::Eventually(iv, sub) => {
                write!(f, "F")?;
                write_interval(f, iv)?;
                write!(f, " {sub}")
            }
            Formula::Always(iv, sub) => {
                write!(f, "G")?;
                write_interval(f, iv)?;
                write!(f, " {sub}")
            }
            Formula::Until(iv, a, b) => {
                write!(f, "({a} U")?;
                write_interval(f, iv)?;
                write!(f, " {b})")
            }
        }
    }
}

/// Render a formula to its canonical text form.
pub fn print_formula(f: &Formula) -> String {
    f.to_string()
}
