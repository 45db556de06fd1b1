use alloc::borrow::ToOwned;
use alloc::string::String;
use alloc::vec::Vec;

use super::domain::{
    check_arity, check_requirements, check_type, define_header, expect_atom, expect_list, requirement_for, typed_list,
};
use super::sexpr::{self, SExpr};
use super::{Domain, GroundAtom, ParseError, Problem, SymbolKind};

/// Parses a problem against an already parsed domain. Every symbol in the
/// problem must be declared by the domain or the problem's `:objects`.
pub fn parse_problem(text: &str, domain: &Domain) -> Result<Problem, ParseError> {
    let root = sexpr::parse_one(text)?;
    let (name, sections) = define_header(&root, "problem")?;
    let mut problem = Problem {
        name,
        domain: domain.name.clone(),
        objects: Vec::new(),
        init: Vec::new(),
        goal: Vec::new(),
    };

    let mut init = None;
    let mut goal = None;
    for section in sections {
        let items = expect_list(section, "problem section")?;
        let key = expect_atom(items.first(), section.pos(), "section keyword")?;
        match key {
            ":domain" => {
                let d = expect_atom(items.get(1), section.pos(), "domain name")?;
                if d != domain.name {
                    return Err(ParseError::Undeclared {
                        kind: SymbolKind::Domain,
                        name: d.to_owned(),
                        pos: items[1].pos(),
                    });
                }
            }
            ":requirements" => {
                check_requirements(&items[1..])?;
            }
            ":objects" => {
                for (o, pos) in typed_list(&items[1..], false)? {
                    check_type(domain, &o.ty, pos)?;
                    let taken = problem.objects.iter().any(|x| x.name == o.name)
                        || domain.constants.iter().any(|x| x.name == o.name);
                    if taken {
                        return Err(ParseError::Duplicate {
                            kind: SymbolKind::Object,
                            name: o.name,
                            pos,
                        });
                    }
                    problem.objects.push(o);
                }
            }
            ":init" => init = Some(&items[1..]),
            ":goal" => {
                let g = items
                    .get(1)
                    .ok_or_else(|| ParseError::syntax(section.pos(), "missing goal"))?;
                goal = Some(g);
            }
            ":metric" => return Err(ParseError::unsupported(section.pos(), ":action-costs")),
            other => return Err(ParseError::unsupported(section.pos(), other)),
        }
    }

    let declared =
        |name: &str| problem.objects.iter().any(|o| o.name == name) || domain.constants.iter().any(|c| c.name == name);
    let check = |e: &SExpr| -> Result<GroundAtom, ParseError> {
        let atom = read_atom(e)?;
        check_arity(domain, &atom.predicate, atom.args.len(), e.pos())?;
        let items = e.as_list().unwrap_or_default();
        for (arg, item) in atom.args.iter().zip(&items[1..]) {
            if !declared(arg) {
                return Err(ParseError::Undeclared {
                    kind: SymbolKind::Object,
                    name: arg.clone(),
                    pos: item.pos(),
                });
            }
        }
        Ok(atom)
    };

    let mut init_atoms = Vec::new();
    for e in init.unwrap_or_default() {
        let a = check(e)?;
        if !init_atoms.contains(&a) {
            init_atoms.push(a);
        }
    }
    let mut goal_atoms = Vec::new();
    if let Some(g) = goal {
        let mut raw = Vec::new();
        conjunction(g, &mut raw)?;
        for e in raw {
            let a = check(e)?;
            if !goal_atoms.contains(&a) {
                goal_atoms.push(a);
            }
        }
    }
    problem.init = init_atoms;
    problem.goal = goal_atoms;
    Ok(problem)
}

/// Flattens a positive conjunction; negation and other connectives are rejected.
fn conjunction<'a>(e: &'a SExpr, out: &mut Vec<&'a SExpr>) -> Result<(), ParseError> {
    let items = expect_list(e, "goal")?;
    match e.head() {
        None if items.is_empty() => Ok(()),
        Some("and") => items[1..].iter().try_for_each(|c| conjunction(c, out)),
        Some(kw) if requirement_for(kw).is_some() => {
            Err(ParseError::unsupported(e.pos(), requirement_for(kw).unwrap_or(kw)))
        }
        _ => {
            out.push(e);
            Ok(())
        }
    }
}

fn read_atom(e: &SExpr) -> Result<GroundAtom, ParseError> {
    let items = expect_list(e, "ground atom")?;
    let predicate = expect_atom(items.first(), e.pos(), "predicate name")?;
    if let Some(flag) = requirement_for(predicate) {
        return Err(ParseError::unsupported(e.pos(), flag));
    }
    let args = items[1..]
        .iter()
        .map(|a| {
            let s = expect_atom(Some(a), a.pos(), "object name")?;
            if s.starts_with('?') {
                return Err(ParseError::syntax(a.pos(), "variables are not allowed in ground atoms"));
            }
            Ok(s.to_owned())
        })
        .collect::<Result<Vec<String>, _>>()?;
    Ok(GroundAtom {
        predicate: predicate.to_owned(),
        args,
    })
}

/// Parses a single parenthesized ground atom such as `(stack a b)`.
pub fn parse_atom(text: &str) -> Result<GroundAtom, ParseError> {
    read_atom(&sexpr::parse_one(text)?)
}

/// Parses a comma- or whitespace-separated list of ground atoms, as found on
/// a line of a hypotheses file: `(on a b), (clear c)`.
pub fn parse_atom_list(text: &str) -> Result<Vec<GroundAtom>, ParseError> {
    let cleaned: String = text.chars().map(|c| if c == ',' { ' ' } else { c }).collect();
    sexpr::parse_all(&cleaned)?.iter().map(read_atom).collect()
}
