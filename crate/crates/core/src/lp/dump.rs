//! Plain-text dump in the CPLEX LP layout, for cross-checking with external solvers.

use std::fmt::Write;

use crate::lp::simplex::{LpProblem, Relation};
use crate::scalar::Scalar;

fn term<T: Scalar>(out: &mut String, first: bool, c: T, name: &str) {
    let v = c.to_f64().unwrap_or(f64::NAN);
    if first {
        let _ = write!(out, "{v} {name}");
    } else if v < 0.0 {
        let _ = write!(out, "- {} {name}", -v);
    } else {
        let _ = write!(out, "+ {v} {name}");
    }
}

pub fn dump_lp<T: Scalar>(p: &LpProblem<T>) -> String {
    let name = |j: usize| if p.names[j].is_empty() { format!("x{j}") } else { p.names[j].clone() };
    let mut out = String::from("Minimize\n obj:");
    let mut first = true;
    for (j, &c) in p.objective.iter().enumerate() {
        if c != T::zero() {
            out.push(' ');
            term(&mut out, first, c, &name(j));
            first = false;
        }
    }
    if first {
        out.push_str(" 0");
    }
    out.push_str("\nSubject To\n");
    for (r, con) in p.constraints.iter().enumerate() {
        let _ = write!(out, " c{r}:");
        let mut first = true;
        for &(j, a) in &con.coeffs {
            out.push(' ');
            term(&mut out, first, a, &name(j));
            first = false;
        }
        if first {
            out.push_str(" 0 x0");
        }
        let rel = match con.relation {
            Relation::Le => "<=",
            Relation::Ge => ">=",
            Relation::Eq => "=",
        };
        let _ = writeln!(out, " {rel} {}", con.rhs.to_f64().unwrap_or(f64::NAN));
    }
    out.push_str("Bounds\n");
    for (j, &(lo, hi)) in p.bounds.iter().enumerate() {
        let f = |v: T| {
            let v = v.to_f64().unwrap_or(f64::NAN);
            if v == f64::INFINITY {
                "+inf".to_string()
            } else if v == f64::NEG_INFINITY {
                "-inf".to_string()
            } else {
                v.to_string()
            }
        };
        let _ = writeln!(out, " {} <= {} <= {}", f(lo), name(j), f(hi));
    }
    out.push_str("End\n");
    out
}
