use alloc::string::{String, ToString};
use alloc::vec::Vec;

use super::{ParseError, Pos};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SExpr {
    /// A bare symbol, lowercased.
    Atom {
        text: String,
        pos: Pos,
    },
    List {
        items: Vec<SExpr>,
        pos: Pos,
    },
}

impl SExpr {
    pub fn pos(&self) -> Pos {
        match self {
            SExpr::Atom { pos, .. } | SExpr::List { pos, .. } => *pos,
        }
    }

    pub fn as_atom(&self) -> Option<&str> {
        match self {
            SExpr::Atom { text, .. } => Some(text),
            SExpr::List { .. } => None,
        }
    }

    pub fn as_list(&self) -> Option<&[SExpr]> {
        match self {
            SExpr::List { items, .. } => Some(items),
            SExpr::Atom { .. } => None,
        }
    }

    /// The leading symbol of a list, e.g. `and` in `(and ...)`.
    pub fn head(&self) -> Option<&str> {
        self.as_list()?.first()?.as_atom()
    }
}

struct Cursor<'a> {
    chars: core::iter::Peekable<core::str::CharIndices<'a>>,
    line: usize,
    column: usize,
}

impl Cursor<'_> {
    fn pos(&mut self, len: usize) -> Pos {
        let offset = self.chars.peek().map_or(len, |&(i, _)| i);
        Pos {
            offset,
            line: self.line,
            column: self.column,
        }
    }

    fn bump(&mut self) -> Option<char> {
        let (_, c) = self.chars.next()?;
        if c == '\n' {
            self.line += 1;
            self.column = 1;
        } else {
            self.column += 1;
        }
        Some(c)
    }

    fn skip_trivia(&mut self) {
        while let Some(&(_, c)) = self.chars.peek() {
            if c == ';' {
                while let Some(&(_, c)) = self.chars.peek() {
                    if c == '\n' {
                        break;
                    }
                    self.bump();
                }
            } else if c.is_whitespace() {
                self.bump();
            } else {
                break;
            }
        }
    }
}

/// Reads every top-level expression in `text`. Symbols are case-folded.
pub fn parse_all(text: &str) -> Result<Vec<SExpr>, ParseError> {
    let mut cur = Cursor {
        chars: text.char_indices().peekable(),
        line: 1,
        column: 1,
    };
    let len = text.len();
    // Stack of open lists: (start position, items so far).
    let mut stack: Vec<(Pos, Vec<SExpr>)> = Vec::new();
    let mut top = Vec::new();

    loop {
        cur.skip_trivia();
        let pos = cur.pos(len);
        let Some(&(_, c)) = cur.chars.peek() else {
            break;
        };
        let expr = match c {
            '(' => {
                cur.bump();
                stack.push((pos, Vec::new()));
                continue;
            }
            ')' => {
                cur.bump();
                let Some((start, items)) = stack.pop() else {
                    return Err(ParseError::syntax(pos, "unexpected `)`"));
                };
                SExpr::List { items, pos: start }
            }
            _ => {
                let mut text = String::new();
                while let Some(&(_, c)) = cur.chars.peek() {
                    if c.is_whitespace() || c == '(' || c == ')' || c == ';' {
                        break;
                    }
                    text.extend(c.to_lowercase());
                    cur.bump();
                }
                SExpr::Atom { text, pos }
            }
        };
        match stack.last_mut() {
            Some((_, items)) => items.push(expr),
            None => top.push(expr),
        }
    }

    if let Some((start, _)) = stack.pop() {
        return Err(ParseError::syntax(start, "unclosed `(`"));
    }
    if top.is_empty() {
        return Err(ParseError::syntax(cur.pos(len), "empty input"));
    }
    Ok(top)
}

/// Reads exactly one expression.
pub fn parse_one(text: &str) -> Result<SExpr, ParseError> {
    let mut all = parse_all(text)?;
    if all.len() > 1 {
        return Err(ParseError::syntax(
            all[1].pos(),
            "trailing input after expression".to_string(),
        ));
    }
    Ok(all.remove(0))
}
