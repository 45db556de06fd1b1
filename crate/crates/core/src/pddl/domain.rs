use alloc::borrow::ToOwned;
use alloc::collections::BTreeSet;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use super::sexpr::{self, SExpr};
use super::{
    Domain, Literal, Operator, ParseError, Pos, PredicateDecl, SymbolKind, Term, TypeDecl, TypedName, ROOT_TYPE,
};

const SUPPORTED_REQUIREMENTS: [&str; 2] = [":strips", ":typing"];

pub(super) fn expect_list<'a>(e: &'a SExpr, what: &str) -> Result<&'a [SExpr], ParseError> {
    e.as_list()
        .ok_or_else(|| ParseError::syntax(e.pos(), alloc::format!("expected {what}")))
}

pub(super) fn expect_atom<'a>(e: Option<&'a SExpr>, at: Pos, what: &str) -> Result<&'a str, ParseError> {
    match e {
        Some(SExpr::Atom { text, .. }) => Ok(text),
        Some(other) => Err(ParseError::syntax(other.pos(), alloc::format!("expected {what}"))),
        None => Err(ParseError::syntax(at, alloc::format!("missing {what}"))),
    }
}

/// Reads `(define (<kind> <name>) ...)` and returns the name and the sections.
pub(super) fn define_header<'a>(root: &'a SExpr, kind: &str) -> Result<(String, &'a [SExpr]), ParseError> {
    let items = expect_list(root, "`(define ...)`")?;
    if expect_atom(items.first(), root.pos(), "`define`")? != "define" {
        return Err(ParseError::syntax(root.pos(), "expected `define`"));
    }
    let header = items
        .get(1)
        .ok_or_else(|| ParseError::syntax(root.pos(), alloc::format!("missing `({kind} ...)`")))?;
    let h = expect_list(header, "header list")?;
    if expect_atom(h.first(), header.pos(), kind)? != kind {
        return Err(ParseError::syntax(
            header.pos(),
            alloc::format!("expected `({kind} <name>)`"),
        ));
    }
    let name = expect_atom(h.get(1), header.pos(), "name")?.to_owned();
    Ok((name, &items[2..]))
}

/// Maps a body keyword outside the fragment to the requirement flag it needs.
pub(super) fn requirement_for(keyword: &str) -> Option<&'static str> {
    Some(match keyword {
        "not" => ":negative-preconditions",
        "or" | "imply" => ":disjunctive-preconditions",
        "exists" => ":existential-preconditions",
        "forall" => ":universal-preconditions",
        "when" => ":conditional-effects",
        "=" => ":equality",
        "increase" | "decrease" | "assign" | "scale-up" | "scale-down" => ":action-costs",
        _ => return None,
    })
}

pub(super) fn check_requirements(items: &[SExpr]) -> Result<Vec<String>, ParseError> {
    let mut reqs = Vec::new();
    for r in items {
        let flag = expect_atom(Some(r), r.pos(), "requirement flag")?;
        if !SUPPORTED_REQUIREMENTS.contains(&flag) {
            return Err(ParseError::unsupported(r.pos(), flag));
        }
        if !reqs.iter().any(|x: &String| x == flag) {
            reqs.push(flag.to_owned());
        }
    }
    Ok(reqs)
}

/// Reads `a b - t1 c - t2 d`; untyped trailing names default to `object`.
pub(super) fn typed_list(items: &[SExpr], vars: bool) -> Result<Vec<(TypedName, Pos)>, ParseError> {
    let mut out = Vec::new();
    let mut pending: Vec<(String, Pos)> = Vec::new();
    let mut it = items.iter();
    while let Some(e) = it.next() {
        let pos = e.pos();
        let text = expect_atom(Some(e), pos, "name")?;
        if text == "-" {
            let ty = match it.next() {
                Some(SExpr::Atom { text, .. }) => text.clone(),
                Some(list @ SExpr::List { .. }) => {
                    let construct = list.head().unwrap_or("type list").to_string();
                    return Err(ParseError::unsupported(list.pos(), construct));
                }
                None => return Err(ParseError::syntax(pos, "missing type after `-`")),
            };
            if pending.is_empty() {
                return Err(ParseError::syntax(pos, "`-` without preceding names"));
            }
            for (name, p) in pending.drain(..) {
                out.push((TypedName { name, ty: ty.clone() }, p));
            }
        } else {
            if vars != text.starts_with('?') {
                let msg = if vars {
                    "expected `?variable`"
                } else {
                    "unexpected `?variable`"
                };
                return Err(ParseError::syntax(pos, msg));
            }
            pending.push((text.to_owned(), pos));
        }
    }
    for (name, p) in pending {
        out.push((
            TypedName {
                name,
                ty: ROOT_TYPE.to_owned(),
            },
            p,
        ));
    }
    Ok(out)
}

pub(super) fn check_type(domain: &Domain, ty: &str, pos: Pos) -> Result<(), ParseError> {
    if domain.has_type(ty) {
        Ok(())
    } else {
        Err(ParseError::Undeclared {
            kind: SymbolKind::Type,
            name: ty.to_owned(),
            pos,
        })
    }
}

pub(super) fn check_arity(domain: &Domain, name: &str, found: usize, pos: Pos) -> Result<(), ParseError> {
    let decl = domain.predicate(name).ok_or_else(|| ParseError::Undeclared {
        kind: SymbolKind::Predicate,
        name: name.to_owned(),
        pos,
    })?;
    if decl.params.len() != found {
        return Err(ParseError::Arity {
            predicate: name.to_owned(),
            expected: decl.params.len(),
            found,
            pos,
        });
    }
    Ok(())
}

/// Parses a domain definition in the supported fragment.
pub fn parse_domain(text: &str) -> Result<Domain, ParseError> {
    let root = sexpr::parse_one(text)?;
    let (name, sections) = define_header(&root, "domain")?;
    let mut domain = Domain {
        name,
        requirements: Vec::new(),
        types: Vec::new(),
        constants: Vec::new(),
        predicates: Vec::new(),
        operators: Vec::new(),
    };

    // Actions are read last so that sections may appear in any order.
    let mut actions = Vec::new();
    let mut types_section = None;
    let mut constants_section = None;
    let mut predicates_section = None;
    for section in sections {
        let items = expect_list(section, "domain section")?;
        let key = expect_atom(items.first(), section.pos(), "section keyword")?;
        match key {
            ":requirements" => domain.requirements = check_requirements(&items[1..])?,
            ":types" => types_section = Some(&items[1..]),
            ":constants" => constants_section = Some(&items[1..]),
            ":predicates" => predicates_section = Some(&items[1..]),
            ":action" => actions.push(section),
            other => return Err(ParseError::unsupported(section.pos(), other)),
        }
    }

    if let Some(items) = types_section {
        read_types(&mut domain, items)?;
    }
    if let Some(items) = constants_section {
        for (c, pos) in typed_list(items, false)? {
            check_type(&domain, &c.ty, pos)?;
            if domain.constants.iter().any(|x| x.name == c.name) {
                return Err(ParseError::Duplicate {
                    kind: SymbolKind::Object,
                    name: c.name,
                    pos,
                });
            }
            domain.constants.push(c);
        }
    }
    if let Some(items) = predicates_section {
        for p in items {
            let list = expect_list(p, "predicate declaration")?;
            let name = expect_atom(list.first(), p.pos(), "predicate name")?.to_owned();
            if domain.predicate(&name).is_some() {
                return Err(ParseError::Duplicate {
                    kind: SymbolKind::Predicate,
                    name,
                    pos: p.pos(),
                });
            }
            let mut params = Vec::new();
            for (v, pos) in typed_list(&list[1..], true)? {
                check_type(&domain, &v.ty, pos)?;
                params.push(v);
            }
            domain.predicates.push(PredicateDecl { name, params });
        }
    }
    for a in actions {
        let op = read_action(&domain, a)?;
        if domain.operators.iter().any(|o| o.name == op.name) {
            return Err(ParseError::Duplicate {
                kind: SymbolKind::Action,
                name: op.name,
                pos: a.pos(),
            });
        }
        domain.operators.push(op);
    }
    Ok(domain)
}

fn read_types(domain: &mut Domain, items: &[SExpr]) -> Result<(), ParseError> {
    let declared = typed_list(items, false)?;
    let names: BTreeSet<&str> = declared.iter().map(|(t, _)| t.name.as_str()).collect();
    for (t, pos) in &declared {
        if t.name == ROOT_TYPE {
            continue;
        }
        if t.ty != ROOT_TYPE && !names.contains(t.ty.as_str()) {
            return Err(ParseError::Undeclared {
                kind: SymbolKind::Type,
                name: t.ty.clone(),
                pos: *pos,
            });
        }
        if domain.types.iter().any(|d| d.name == t.name) {
            return Err(ParseError::Duplicate {
                kind: SymbolKind::Type,
                name: t.name.clone(),
                pos: *pos,
            });
        }
        domain.types.push(TypeDecl {
            name: t.name.clone(),
            parent: t.ty.clone(),
        });
    }
    // Reject cycles: every chain must reach the root within |types| steps.
    for (t, pos) in &declared {
        let mut cur = t.name.as_str();
        for _ in 0..=domain.types.len() {
            match domain.parent_type(cur) {
                Some(p) => cur = p,
                None => break,
            }
        }
        if domain.parent_type(cur).is_some() {
            return Err(ParseError::syntax(
                *pos,
                alloc::format!("cyclic type hierarchy at `{}`", t.name),
            ));
        }
    }
    Ok(())
}

struct ActionScope<'a> {
    domain: &'a Domain,
    params: &'a [TypedName],
}

impl ActionScope<'_> {
    fn literal(&self, e: &SExpr) -> Result<Literal, ParseError> {
        let items = expect_list(e, "atom")?;
        let predicate = expect_atom(items.first(), e.pos(), "predicate name")?;
        if let Some(flag) = requirement_for(predicate) {
            return Err(ParseError::unsupported(e.pos(), flag));
        }
        check_arity(self.domain, predicate, items.len() - 1, e.pos())?;
        let mut terms = Vec::with_capacity(items.len() - 1);
        for t in &items[1..] {
            let name = expect_atom(Some(t), t.pos(), "term")?;
            if name.starts_with('?') {
                if !self.params.iter().any(|p| p.name == name) {
                    return Err(ParseError::Undeclared {
                        kind: SymbolKind::Variable,
                        name: name.to_owned(),
                        pos: t.pos(),
                    });
                }
                terms.push(Term::Var(name.to_owned()));
            } else {
                if !self.domain.constants.iter().any(|c| c.name == name) {
                    return Err(ParseError::Undeclared {
                        kind: SymbolKind::Object,
                        name: name.to_owned(),
                        pos: t.pos(),
                    });
                }
                terms.push(Term::Const(name.to_owned()));
            }
        }
        Ok(Literal {
            predicate: predicate.to_owned(),
            terms,
        })
    }

    fn precondition(&self, e: &SExpr, out: &mut Vec<Literal>) -> Result<(), ParseError> {
        let items = expect_list(e, "precondition")?;
        match e.head() {
            None if items.is_empty() => Ok(()),
            Some("and") => items[1..].iter().try_for_each(|c| self.precondition(c, out)),
            _ => {
                out.push(self.literal(e)?);
                Ok(())
            }
        }
    }

    fn effect(&self, e: &SExpr, add: &mut Vec<Literal>, del: &mut Vec<Literal>) -> Result<(), ParseError> {
        let items = expect_list(e, "effect")?;
        match e.head() {
            None if items.is_empty() => Ok(()),
            Some("and") => items[1..].iter().try_for_each(|c| self.effect(c, add, del)),
            Some("not") => {
                if items.len() != 2 {
                    return Err(ParseError::syntax(e.pos(), "`not` takes exactly one atom"));
                }
                del.push(self.literal(&items[1])?);
                Ok(())
            }
            _ => {
                add.push(self.literal(e)?);
                Ok(())
            }
        }
    }
}

fn read_action(domain: &Domain, e: &SExpr) -> Result<Operator, ParseError> {
    let items = expect_list(e, "action")?;
    let name = expect_atom(items.get(1), e.pos(), "action name")?.to_owned();
    let mut params = Vec::new();
    let mut pre = None;
    let mut eff = None;
    let mut i = 2;
    while i < items.len() {
        let key = expect_atom(items.get(i), e.pos(), "action keyword")?;
        let value = items
            .get(i + 1)
            .ok_or_else(|| ParseError::syntax(items[i].pos(), alloc::format!("missing value for `{key}`")))?;
        match key {
            ":parameters" => {
                for (v, pos) in typed_list(expect_list(value, "parameter list")?, true)? {
                    check_type(domain, &v.ty, pos)?;
                    if params.iter().any(|p: &TypedName| p.name == v.name) {
                        return Err(ParseError::Duplicate {
                            kind: SymbolKind::Variable,
                            name: v.name,
                            pos,
                        });
                    }
                    params.push(v);
                }
            }
            ":precondition" => pre = Some(value),
            ":effect" => eff = Some(value),
            other => return Err(ParseError::unsupported(items[i].pos(), other)),
        }
        i += 2;
    }

    let scope = ActionScope {
        domain,
        params: &params,
    };
    let mut preconditions = Vec::new();
    if let Some(p) = pre {
        scope.precondition(p, &mut preconditions)?;
    }
    let (mut add_effects, mut del_effects) = (Vec::new(), Vec::new());
    if let Some(x) = eff {
        scope.effect(x, &mut add_effects, &mut del_effects)?;
    }
    Ok(Operator {
        name,
        parameters: params,
        preconditions,
        add_effects,
        del_effects,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testdata::BLOCKS;

    #[test]
    fn blocksworld_has_four_operators_in_order() {
        let d = parse_domain(BLOCKS).unwrap();
        assert_eq!(d.name, "blocks");
        let names: Vec<_> = d.operators.iter().map(|o| o.name.as_str()).collect();
        assert_eq!(names, ["pick-up", "put-down", "stack", "unstack"]);
        let stack = &d.operators[2];
        assert_eq!(stack.parameters.len(), 2);
        assert_eq!(stack.preconditions.len(), 2);
        assert_eq!(stack.add_effects.len(), 3);
        assert_eq!(stack.del_effects.len(), 2);
    }

    #[test]
    fn negative_preconditions_flag_is_rejected_by_name() {
        let text = "(define (domain d) (:requirements :strips :negative-preconditions))";
        match parse_domain(text) {
            Err(ParseError::Unsupported { construct, .. }) => {
                assert_eq!(construct, ":negative-preconditions")
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn negated_precondition_in_body_is_rejected() {
        let text = "(define (domain d) (:predicates (p) (q))
            (:action a :parameters () :precondition (and (p) (not (q))) :effect (q)))";
        match parse_domain(text) {
            Err(ParseError::Unsupported { construct, .. }) => {
                assert_eq!(construct, ":negative-preconditions")
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn conditional_effects_are_rejected() {
        let text = "(define (domain d) (:predicates (p) (q))
            (:action a :parameters () :precondition (p) :effect (when (p) (q))))";
        assert!(matches!(
            parse_domain(text),
            Err(ParseError::Unsupported { construct, .. }) if construct == ":conditional-effects"
        ));
    }

    #[test]
    fn empty_input_is_a_syntax_error_at_zero() {
        let err = parse_domain("").unwrap_err();
        assert!(matches!(err, ParseError::Syntax { .. }));
        assert_eq!(err.pos().offset, 0);
    }

    #[test]
    fn arity_and_undeclared_checks() {
        let text = "(define (domain d) (:predicates (p ?x))
            (:action a :parameters (?x) :precondition (p ?x ?x) :effect (p ?x)))";
        assert!(matches!(
            parse_domain(text),
            Err(ParseError::Arity {
                expected: 1,
                found: 2,
                ..
            })
        ));
        let text = "(define (domain d) (:predicates (p ?x))
            (:action a :parameters (?x) :precondition (p ?y) :effect (p ?x)))";
        assert!(matches!(
            parse_domain(text),
            Err(ParseError::Undeclared {
                kind: SymbolKind::Variable,
                ..
            })
        ));
        let text = "(define (domain d) (:predicates (p ?x - thing)))";
        assert!(matches!(
            parse_domain(text),
            Err(ParseError::Undeclared {
                kind: SymbolKind::Type,
                ..
            })
        ));
    }

    #[test]
    fn type_hierarchy_and_case_folding() {
        let text = "(DEFINE (DOMAIN L) (:requirements :STRIPS :typing)
            (:types truck airplane - vehicle vehicle place - object airport - place)
            (:predicates (AT ?v - vehicle ?p - place)))";
        let d = parse_domain(text).unwrap();
        assert!(d.is_subtype("truck", "vehicle"));
        assert!(d.is_subtype("airport", "object"));
        assert!(!d.is_subtype("airport", "vehicle"));
        assert_eq!(d.predicates[0].name, "at");
    }

    #[test]
    fn cyclic_types_rejected() {
        let text = "(define (domain d) (:types a - b b - a))";
        assert!(matches!(parse_domain(text), Err(ParseError::Syntax { .. })));
    }
}
