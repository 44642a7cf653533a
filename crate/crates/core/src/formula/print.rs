//! Canonical printing; the inverse of [`super::parse_formula`].

use std::fmt;

use super::{Exactness, Family, Formula};

fn family(f: &mut fmt::Formatter<'_>, head: &str, marker: &str, fam: &Family) -> fmt::Result {
    write!(f, "({head}")?;
    if fam.exactness == Exactness::PrefixOnly {
        write!(f, " {marker}")?;
    }
    f.write_str(" [")?;
    for (v, c) in &fam.declared.lipschitz {
        write!(f, "{v} {c} ")?;
    }
    write!(f, "| {}]", fam.declared.value_bound)?;
    for m in &fam.members {
        write!(f, " {m}")?;
    }
    f.write_str(")")
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Formula::Dist { left, right, truncated } => {
                write!(f, "({} {left} {right})", if *truncated { "dhat" } else { "d" })
            }
            Formula::Atom { pred, args } => {
                write!(f, "(pred {pred}")?;
                for a in args {
                    write!(f, " {a}")?;
                }
                f.write_str(")")
            }
            Formula::Const(c) => write!(f, "(const {c})"),
            Formula::Add(a, b) => write!(f, "(add {a} {b})"),
            Formula::Sub(a, b) => write!(f, "(sub {a} {b})"),
            Formula::Scale(c, a) => write!(f, "(scale {c} {a})"),
            Formula::Min(a, b) => write!(f, "(min {a} {b})"),
            Formula::Max(a, b) => write!(f, "(max {a} {b})"),
            Formula::Abs(a) => write!(f, "(abs {a})"),
            Formula::Sup(x, a) => write!(f, "(sup {x} {a})"),
            Formula::Inf(x, a) => write!(f, "(inf {x} {a})"),
            Formula::Join(fam) => family(f, "join", ":lower-bound-only", fam),
            Formula::Meet(fam) => family(f, "meet", ":upper-bound-only", fam),
        }
    }
}
