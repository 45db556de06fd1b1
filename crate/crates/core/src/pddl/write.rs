//! Canonical PDDL rendering. Output parses back to an identical structure.

use core::fmt::{self, Write};

use super::{Domain, GroundAtom, Literal, Problem, TypedName, ROOT_TYPE};

fn typed(f: &mut fmt::Formatter<'_>, names: &[TypedName]) -> fmt::Result {
    for (i, n) in names.iter().enumerate() {
        if i > 0 {
            f.write_char(' ')?;
        }
        write!(f, "{} - {}", n.name, n.ty)?;
    }
    Ok(())
}

fn literal(f: &mut fmt::Formatter<'_>, l: &Literal) -> fmt::Result {
    write!(f, "({}", l.predicate)?;
    for t in &l.terms {
        write!(f, " {}", t.name())?;
    }
    f.write_char(')')
}

fn conj<T>(
    f: &mut fmt::Formatter<'_>,
    items: &[T],
    mut each: impl FnMut(&mut fmt::Formatter<'_>, &T) -> fmt::Result,
) -> fmt::Result {
    f.write_str("(and")?;
    for x in items {
        f.write_char(' ')?;
        each(f, x)?;
    }
    f.write_char(')')
}

impl fmt::Display for Domain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "(define (domain {})", self.name)?;
        if !self.requirements.is_empty() {
            writeln!(f, "  (:requirements {})", self.requirements.join(" "))?;
        }
        if !self.types.is_empty() {
            f.write_str("  (:types")?;
            for t in &self.types {
                write!(f, " {} - {}", t.name, t.parent)?;
            }
            writeln!(f, ")")?;
        }
        if !self.constants.is_empty() {
            f.write_str("  (:constants ")?;
            typed(f, &self.constants)?;
            writeln!(f, ")")?;
        }
        if !self.predicates.is_empty() {
            f.write_str("  (:predicates")?;
            for p in &self.predicates {
                write!(f, " ({}", p.name)?;
                if !p.params.is_empty() {
                    f.write_char(' ')?;
                    typed(f, &p.params)?;
                }
                f.write_char(')')?;
            }
            writeln!(f, ")")?;
        }
        for op in &self.operators {
            writeln!(f, "  (:action {}", op.name)?;
            f.write_str("    :parameters (")?;
            typed(f, &op.parameters)?;
            f.write_str(")\n    :precondition ")?;
            conj(f, &op.preconditions, literal)?;
            f.write_str("\n    :effect (and")?;
            for l in &op.add_effects {
                f.write_char(' ')?;
                literal(f, l)?;
            }
            for l in &op.del_effects {
                f.write_str(" (not ")?;
                literal(f, l)?;
                f.write_char(')')?;
            }
            writeln!(f, "))")?;
        }
        f.write_str(")\n")
    }
}

impl fmt::Display for Problem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "(define (problem {})", self.name)?;
        writeln!(f, "  (:domain {})", self.domain)?;
        f.write_str("  (:objects")?;
        for o in &self.objects {
            if o.ty == ROOT_TYPE {
                write!(f, " {}", o.name)?;
            } else {
                write!(f, " {} - {}", o.name, o.ty)?;
            }
        }
        f.write_str(")\n  (:init")?;
        for a in &self.init {
            write!(f, " {a}")?;
        }
        f.write_str(")\n  (:goal ")?;
        conj(f, &self.goal, |f, a: &GroundAtom| write!(f, "{a}"))?;
        f.write_str("))\n")
    }
}
