use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::SpecError;
use crate::automata::is_identifier;

/// Parsed task specification. Regular expressions use `Atom`, `Epsilon`, `Concat`,
/// `Union` and `Star`; co-safe LTL uses `True`, `Atom`, `Not` (over atoms only), `And`,
/// `Or`, `Next`, `Until` and `Eventually`. `Always` exists so that hand-built trees can
/// be represented and rejected with a diagnostic.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum SpecAst {
    Atom(String),
    Epsilon,
    True,
    Not(Box<SpecAst>),
    And(Box<SpecAst>, Box<SpecAst>),
    Or(Box<SpecAst>, Box<SpecAst>),
    Next(Box<SpecAst>),
    Until(Box<SpecAst>, Box<SpecAst>),
    Eventually(Box<SpecAst>),
    Always(Box<SpecAst>),
    Concat(Box<SpecAst>, Box<SpecAst>),
    Union(Box<SpecAst>, Box<SpecAst>),
    Star(Box<SpecAst>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpecKind {
    Re,
    Ltl,
}

impl SpecAst {
    pub fn atom(name: &str) -> SpecAst {
        SpecAst::Atom(name.to_string())
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            SpecAst::Atom(_) => "atom",
            SpecAst::Epsilon => "epsilon",
            SpecAst::True => "true",
            SpecAst::Not(_) => "not",
            SpecAst::And(..) => "and",
            SpecAst::Or(..) => "or",
            SpecAst::Next(_) => "next",
            SpecAst::Until(..) => "until",
            SpecAst::Eventually(_) => "eventually",
            SpecAst::Always(_) => "always",
            SpecAst::Concat(..) => "concat",
            SpecAst::Union(..) => "union",
            SpecAst::Star(_) => "star",
        }
    }

    pub fn children(&self) -> Vec<&SpecAst> {
        match self {
            SpecAst::Atom(_) | SpecAst::Epsilon | SpecAst::True => vec![],
            SpecAst::Not(a)
            | SpecAst::Next(a)
            | SpecAst::Eventually(a)
            | SpecAst::Always(a)
            | SpecAst::Star(a) => vec![a],
            SpecAst::And(a, b)
            | SpecAst::Or(a, b)
            | SpecAst::Until(a, b)
            | SpecAst::Concat(a, b)
            | SpecAst::Union(a, b) => vec![a, b],
        }
    }

    /// Distinct atom names, sorted.
    pub fn atoms(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_atoms(&mut out);
        out
    }

    fn collect_atoms(&self, out: &mut BTreeSet<String>) {
        if let SpecAst::Atom(name) = self {
            out.insert(name.clone());
        }
        for c in self.children() {
            c.collect_atoms(out);
        }
    }

    pub fn depth(&self) -> usize {
        1 + self.children().iter().map(|c| c.depth()).max().unwrap_or(0)
    }

    /// Classifies the tree as RE or LTL. A bare atom counts as RE (both readings accept
    /// exactly the one-letter word).
    pub fn kind(&self) -> Result<SpecKind, SpecError> {
        let (mut re, mut ltl) = (false, false);
        self.visit(&mut |node| match node {
            SpecAst::Epsilon | SpecAst::Concat(..) | SpecAst::Union(..) | SpecAst::Star(_) => {
                re = true
            }
            SpecAst::Atom(_) => {}
            _ => ltl = true,
        });
        match (re, ltl) {
            (true, true) => Err(SpecError::MixedKinds),
            (_, true) => Ok(SpecKind::Ltl),
            _ => Ok(SpecKind::Re),
        }
    }

    fn visit(&self, f: &mut impl FnMut(&SpecAst)) {
        f(self);
        for c in self.children() {
            c.visit(f);
        }
    }

    /// Checks the structural invariants: identifier atoms, and for LTL trees negation only
    /// over atoms and no `always`.
    pub fn validate(&self) -> Result<SpecKind, SpecError> {
        let kind = self.kind()?;
        let mut result = Ok(());
        self.visit(&mut |node| {
            if result.is_err() {
                return;
            }
            match node {
                SpecAst::Atom(name) if !is_identifier(name) => {
                    result = Err(SpecError::Syntax {
                        offset: 0,
                        message: format!("invalid atom name `{name}`"),
                    })
                }
                SpecAst::Not(inner) if !matches!(**inner, SpecAst::Atom(_)) => {
                    result = Err(SpecError::NotCoSafe {
                        offset: 0,
                        operator: "!".into(),
                        message: "negation above a non-atom".into(),
                    })
                }
                SpecAst::Always(_) => {
                    result = Err(SpecError::NotCoSafe {
                        offset: 0,
                        operator: "G".into(),
                        message: "always is only accepted as F G <atom>".into(),
                    })
                }
                _ => {}
            }
        });
        result.map(|_| kind)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&AstJson::from(self)).expect("AST JSON is serializable")
    }

    pub fn from_json(text: &str) -> Result<SpecAst, SpecError> {
        let j: AstJson = serde_json::from_str(text).map_err(|e| SpecError::Syntax {
            offset: e.column(),
            message: e.to_string(),
        })?;
        SpecAst::try_from(&j)
    }
}

/// Serialization form: `{kind, name?, children}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AstJson {
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub children: Vec<AstJson>,
}

impl From<&SpecAst> for AstJson {
    fn from(ast: &SpecAst) -> Self {
        AstJson {
            kind: ast.kind_name().to_string(),
            name: match ast {
                SpecAst::Atom(n) => Some(n.clone()),
                _ => None,
            },
            children: ast.children().into_iter().map(AstJson::from).collect(),
        }
    }
}

impl TryFrom<&AstJson> for SpecAst {
    type Error = SpecError;

    fn try_from(j: &AstJson) -> Result<Self, Self::Error> {
        let bad = |msg: String| SpecError::Syntax {
            offset: 0,
            message: msg,
        };
        let kids = j
            .children
            .iter()
            .map(SpecAst::try_from)
            .collect::<Result<Vec<_>, _>>()?;
        let arity = |n: usize| {
            if kids.len() == n {
                Ok(())
            } else {
                Err(bad(format!(
                    "`{}` expects {n} children, got {}",
                    j.kind,
                    kids.len()
                )))
            }
        };
        let mut it = kids.clone().into_iter().map(Box::new);
        let mut next = || it.next().expect("arity checked");
        Ok(match j.kind.as_str() {
            "atom" => {
                arity(0)?;
                let name = j.name.clone().ok_or_else(|| bad("atom without name".into()))?;
                if !is_identifier(&name) {
                    return Err(bad(format!("invalid atom name `{name}`")));
                }
                SpecAst::Atom(name)
            }
            "epsilon" => arity(0).map(|_| SpecAst::Epsilon)?,
            "true" => arity(0).map(|_| SpecAst::True)?,
            "not" => arity(1).map(|_| SpecAst::Not(next()))?,
            "next" => arity(1).map(|_| SpecAst::Next(next()))?,
            "eventually" => arity(1).map(|_| SpecAst::Eventually(next()))?,
            "always" => arity(1).map(|_| SpecAst::Always(next()))?,
            "star" => arity(1).map(|_| SpecAst::Star(next()))?,
            "and" => arity(2).map(|_| SpecAst::And(next(), next()))?,
            "or" => arity(2).map(|_| SpecAst::Or(next(), next()))?,
            "until" => arity(2).map(|_| SpecAst::Until(next(), next()))?,
            "concat" => arity(2).map(|_| SpecAst::Concat(next(), next()))?,
            "union" => arity(2).map(|_| SpecAst::Union(next(), next()))?,
            other => return Err(bad(format!("unknown node kind `{other}`"))),
        })
    }
}

/// Fully parenthesized surface syntax that re-parses to the same tree
/// (RE nodes with `parse_re`, LTL nodes with `parse_ltl`).
impl fmt::Display for SpecAst {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SpecAst::Atom(n) => write!(f, "{n}"),
            SpecAst::Epsilon => write!(f, "eps"),
            SpecAst::True => write!(f, "true"),
            SpecAst::Not(a) => write!(f, "!{a}"),
            SpecAst::And(a, b) => write!(f, "({a} & {b})"),
            SpecAst::Or(a, b) => write!(f, "({a} | {b})"),
            SpecAst::Next(a) => write!(f, "X ({a})"),
            SpecAst::Until(a, b) => write!(f, "({a} U {b})"),
            SpecAst::Eventually(a) => write!(f, "F ({a})"),
            SpecAst::Always(a) => write!(f, "G ({a})"),
            SpecAst::Concat(a, b) => write!(f, "({a} {b})"),
            SpecAst::Union(a, b) => write!(f, "({a} + {b})"),
            SpecAst::Star(a) => write!(f, "({a})*"),
        }
    }
}
