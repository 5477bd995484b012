//! Hand-written recursive-descent parsers.
//!
//! RE grammar (loosest first): `union := concat ('+' concat)*`,
//! `concat := postfix ('.'? postfix)*`, `postfix := primary '*'*`,
//! `primary := ident | 'eps' | '(' union ')'`.
//!
//! LTL grammar: `or := and ('|' and)*`, `and := until ('&' until)*`,
//! `until := unary ('U' until)?`, `unary := ('!' | 'X' | 'F' | 'G') unary | primary`,
//! `primary := 'true' | ident | '(' or ')'`.
//!
//! Binary chains are folded to the right, so `a b c` is `concat(a, concat(b, c))`.

use super::{SpecAst, SpecError};

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Eps,
    True,
    Plus,
    Dot,
    Star,
    LParen,
    RParen,
    Not,
    And,
    Or,
    Next,
    Until,
    Eventually,
    Always,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Dialect {
    Re,
    Ltl,
}

fn lex(text: &str, dialect: Dialect) -> Result<Vec<(usize, Tok)>, SpecError> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        if c.is_ascii_alphabetic() || c == b'_' {
            let start = i;
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            let word = &text[start..i];
            let tok = match (dialect, word) {
                (Dialect::Re, "eps") => Tok::Eps,
                (Dialect::Ltl, "true") => Tok::True,
                (Dialect::Ltl, "X") => Tok::Next,
                (Dialect::Ltl, "U") => Tok::Until,
                (Dialect::Ltl, "F") => Tok::Eventually,
                (Dialect::Ltl, "G") => Tok::Always,
                _ => Tok::Ident(word.to_string()),
            };
            out.push((start, tok));
            continue;
        }
        if dialect == Dialect::Re && text[i..].starts_with('ε') {
            out.push((i, Tok::Eps));
            i += 'ε'.len_utf8();
            continue;
        }
        let tok = match (dialect, c) {
            (_, b'(') => Tok::LParen,
            (_, b')') => Tok::RParen,
            (Dialect::Re, b'+') => Tok::Plus,
            (Dialect::Re, b'.') => Tok::Dot,
            (Dialect::Re, b'*') => Tok::Star,
            (Dialect::Ltl, b'!') => Tok::Not,
            (Dialect::Ltl, b'&') => Tok::And,
            (Dialect::Ltl, b'|') => Tok::Or,
            _ => {
                let ch = text[i..].chars().next().unwrap_or('?');
                return Err(SpecError::Syntax {
                    offset: i,
                    message: format!("unexpected character `{ch}`"),
                });
            }
        };
        out.push((i, tok));
        i += 1;
    }
    Ok(out)
}

struct Parser {
    toks: Vec<(usize, Tok)>,
    pos: usize,
    end: usize,
}

impl Parser {
    fn new(text: &str, dialect: Dialect) -> Result<Self, SpecError> {
        let toks = lex(text, dialect)?;
        if toks.is_empty() {
            return Err(SpecError::Empty);
        }
        Ok(Parser {
            toks,
            pos: 0,
            end: text.len(),
        })
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(_, t)| t)
    }

    fn offset(&self) -> usize {
        self.toks.get(self.pos).map_or(self.end, |(o, _)| *o)
    }

    fn bump(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).map(|(_, t)| t.clone());
        self.pos += 1;
        t
    }

    fn error<T>(&self, message: impl Into<String>) -> Result<T, SpecError> {
        Err(SpecError::Syntax {
            offset: self.offset(),
            message: message.into(),
        })
    }

    fn expect(&mut self, tok: Tok, what: &str) -> Result<(), SpecError> {
        if self.peek() == Some(&tok) {
            self.pos += 1;
            Ok(())
        } else {
            self.error(format!("expected {what}"))
        }
    }

    fn finish(&self) -> Result<(), SpecError> {
        if self.pos < self.toks.len() {
            self.error("unexpected trailing input")
        } else {
            Ok(())
        }
    }

    // ---- regular expressions ----

    fn re_union(&mut self) -> Result<SpecAst, SpecError> {
        let mut items = vec![self.re_concat()?];
        while self.peek() == Some(&Tok::Plus) {
            self.bump();
            items.push(self.re_concat()?);
        }
        Ok(fold_right(items, SpecAst::Union))
    }

    fn re_concat(&mut self) -> Result<SpecAst, SpecError> {
        let mut items = vec![self.re_postfix()?];
        loop {
            match self.peek() {
                Some(Tok::Dot) => {
                    self.bump();
                    items.push(self.re_postfix()?);
                }
                Some(Tok::Ident(_) | Tok::Eps | Tok::LParen) => items.push(self.re_postfix()?),
                _ => break,
            }
        }
        Ok(fold_right(items, SpecAst::Concat))
    }

    fn re_postfix(&mut self) -> Result<SpecAst, SpecError> {
        let mut node = self.re_primary()?;
        while self.peek() == Some(&Tok::Star) {
            self.bump();
            node = SpecAst::Star(Box::new(node));
        }
        Ok(node)
    }

    fn re_primary(&mut self) -> Result<SpecAst, SpecError> {
        match self.peek().cloned() {
            Some(Tok::Ident(name)) => {
                self.bump();
                Ok(SpecAst::Atom(name))
            }
            Some(Tok::Eps) => {
                self.bump();
                Ok(SpecAst::Epsilon)
            }
            Some(Tok::LParen) => {
                self.bump();
                let inner = self.re_union()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(inner)
            }
            Some(_) => self.error("expected an atom, `eps` or `(`"),
            None => self.error("unexpected end of input"),
        }
    }

    // ---- co-safe LTL ----

    fn ltl_or(&mut self) -> Result<SpecAst, SpecError> {
        let mut items = vec![self.ltl_and()?];
        while self.peek() == Some(&Tok::Or) {
            self.bump();
            items.push(self.ltl_and()?);
        }
        Ok(fold_right(items, SpecAst::Or))
    }

    fn ltl_and(&mut self) -> Result<SpecAst, SpecError> {
        let mut items = vec![self.ltl_until()?];
        while self.peek() == Some(&Tok::And) {
            self.bump();
            items.push(self.ltl_until()?);
        }
        Ok(fold_right(items, SpecAst::And))
    }

    fn ltl_until(&mut self) -> Result<SpecAst, SpecError> {
        let lhs = self.ltl_unary()?;
        if self.peek() == Some(&Tok::Until) {
            self.bump();
            let rhs = self.ltl_until()?;
            return Ok(SpecAst::Until(Box::new(lhs), Box::new(rhs)));
        }
        Ok(lhs)
    }

    fn ltl_unary(&mut self) -> Result<SpecAst, SpecError> {
        let offset = self.offset();
        match self.peek() {
            Some(Tok::Not) => {
                self.bump();
                let inner = self.ltl_unary()?;
                match inner {
                    SpecAst::Atom(_) => Ok(SpecAst::Not(Box::new(inner))),
                    other => Err(SpecError::NotCoSafe {
                        offset,
                        operator: "!".into(),
                        message: format!("negation above a non-atom ({})", other.kind_name()),
                    }),
                }
            }
            Some(Tok::Next) => {
                self.bump();
                Ok(SpecAst::Next(Box::new(self.ltl_unary()?)))
            }
            Some(Tok::Eventually) => {
                self.bump();
                if self.peek() == Some(&Tok::Always) {
                    // F G p over a single atom means "reach p" on finite words.
                    let g_offset = self.offset();
                    self.bump();
                    return match self.ltl_unary()? {
                        atom @ SpecAst::Atom(_) => Ok(SpecAst::Eventually(Box::new(atom))),
                        other => Err(SpecError::NotCoSafe {
                            offset: g_offset,
                            operator: "G".into(),
                            message: format!(
                                "F G is only accepted over a single atom, found {}",
                                other.kind_name()
                            ),
                        }),
                    };
                }
                Ok(SpecAst::Eventually(Box::new(self.ltl_unary()?)))
            }
            Some(Tok::Always) => Err(SpecError::NotCoSafe {
                offset,
                operator: "G".into(),
                message: "always is not co-safe (only F G <atom> is accepted)".into(),
            }),
            _ => self.ltl_primary(),
        }
    }

    fn ltl_primary(&mut self) -> Result<SpecAst, SpecError> {
        match self.peek().cloned() {
            Some(Tok::Ident(name)) => {
                self.bump();
                Ok(SpecAst::Atom(name))
            }
            Some(Tok::True) => {
                self.bump();
                Ok(SpecAst::True)
            }
            Some(Tok::LParen) => {
                self.bump();
                let inner = self.ltl_or()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(inner)
            }
            Some(_) => self.error("expected an atom, `true` or `(`"),
            None => self.error("unexpected end of input"),
        }
    }
}

fn fold_right(
    mut items: Vec<SpecAst>,
    make: fn(Box<SpecAst>, Box<SpecAst>) -> SpecAst,
) -> SpecAst {
    let mut acc = items.pop().expect("at least one item");
    while let Some(prev) = items.pop() {
        acc = make(Box::new(prev), Box::new(acc));
    }
    acc
}

/// Parses a regular expression over atomic propositions.
pub fn parse_re(text: &str) -> Result<SpecAst, SpecError> {
    let mut p = Parser::new(text, Dialect::Re)?;
    let ast = p.re_union()?;
    p.finish()?;
    Ok(ast)
}

/// Parses a syntactically co-safe LTL formula.
pub fn parse_ltl(text: &str) -> Result<SpecAst, SpecError> {
    let mut p = Parser::new(text, Dialect::Ltl)?;
    let ast = p.ltl_or()?;
    p.finish()?;
    Ok(ast)
}
