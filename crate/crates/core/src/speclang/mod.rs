//! Boolean safety specifications over named predicates.
//!
//! A specification is parsed into a [`SpecAst`], normalized to negation
//! normal form, and lowered to a [`ParseTree`] whose internal nodes are
//! min (conjunction) and max (disjunction) and whose leaves are signed
//! predicate references. Evaluating the tree on a vector of predicate
//! values yields the quantitative robustness of the specification:
//! values `> 0` mean satisfied, `<= 0` mean violated.

mod parser;
mod tree;

pub use parser::{parse_spec, ParseError};
pub use tree::{build_parse_tree, ParseTree, Sign, TreeError, TreeNode};

/// Syntax tree of a boolean specification over named predicates.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SpecAst {
    Atom(String),
    Not(Box<SpecAst>),
    And(Box<SpecAst>, Box<SpecAst>),
    Or(Box<SpecAst>, Box<SpecAst>),
    Implies(Box<SpecAst>, Box<SpecAst>),
    Iff(Box<SpecAst>, Box<SpecAst>),
}

impl SpecAst {
    pub fn atom(name: impl Into<String>) -> Self {
        SpecAst::Atom(name.into())
    }

    pub fn not(self) -> Self {
        SpecAst::Not(Box::new(self))
    }

    pub fn and(self, rhs: Self) -> Self {
        SpecAst::And(Box::new(self), Box::new(rhs))
    }

    pub fn or(self, rhs: Self) -> Self {
        SpecAst::Or(Box::new(self), Box::new(rhs))
    }

    pub fn implies(self, rhs: Self) -> Self {
        SpecAst::Implies(Box::new(self), Box::new(rhs))
    }

    pub fn iff(self, rhs: Self) -> Self {
        SpecAst::Iff(Box::new(self), Box::new(rhs))
    }

    /// True if the formula contains only and/or/atom nodes with negation
    /// applied directly to atoms.
    pub fn is_nnf(&self) -> bool {
        match self {
            SpecAst::Atom(_) => true,
            SpecAst::Not(child) => matches!(**child, SpecAst::Atom(_)),
            SpecAst::And(l, r) | SpecAst::Or(l, r) => l.is_nnf() && r.is_nnf(),
            SpecAst::Implies(..) | SpecAst::Iff(..) => false,
        }
    }

    /// Predicate names in first-occurrence order, deduplicated.
    pub fn atom_names(&self) -> Vec<String> {
        let mut names = Vec::new();
        self.collect_atoms(&mut names);
        names
    }

    fn collect_atoms(&self, names: &mut Vec<String>) {
        match self {
            SpecAst::Atom(name) => {
                if !names.iter().any(|n| n == name) {
                    names.push(name.clone());
                }
            }
            SpecAst::Not(child) => child.collect_atoms(names),
            SpecAst::And(l, r)
            | SpecAst::Or(l, r)
            | SpecAst::Implies(l, r)
            | SpecAst::Iff(l, r) => {
                l.collect_atoms(names);
                r.collect_atoms(names);
            }
        }
    }

    fn precedence(&self) -> u8 {
        match self {
            SpecAst::Atom(_) => 6,
            SpecAst::Not(_) => 5,
            SpecAst::And(..) => 4,
            SpecAst::Or(..) => 3,
            SpecAst::Implies(..) => 2,
            SpecAst::Iff(..) => 1,
        }
    }

    fn fmt_prec(&self, min_prec: u8, out: &mut String) {
        let prec = self.precedence();
        let parens = prec < min_prec;
        if parens {
            out.push('(');
        }
        match self {
            SpecAst::Atom(name) => out.push_str(name),
            SpecAst::Not(child) => {
                out.push('!');
                child.fmt_prec(prec, out);
            }
            // && and || associate left; -> and <-> associate right.
            SpecAst::And(l, r) => {
                l.fmt_prec(prec, out);
                out.push_str(" && ");
                r.fmt_prec(prec + 1, out);
            }
            SpecAst::Or(l, r) => {
                l.fmt_prec(prec, out);
                out.push_str(" || ");
                r.fmt_prec(prec + 1, out);
            }
            SpecAst::Implies(l, r) => {
                l.fmt_prec(prec + 1, out);
                out.push_str(" -> ");
                r.fmt_prec(prec, out);
            }
            SpecAst::Iff(l, r) => {
                l.fmt_prec(prec + 1, out);
                out.push_str(" <-> ");
                r.fmt_prec(prec, out);
            }
        }
        if parens {
            out.push(')');
        }
    }
}

impl std::fmt::Display for SpecAst {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let mut out = String::new();
        self.fmt_prec(0, &mut out);
        f.write_str(&out)
    }
}

/// Rewrites a formula into negation normal form.
///
/// Implication and iff are desugared first (`a -> b` to `!a || b`,
/// `a <-> b` to `(!a && !b) || (a && b)`), then negations are pushed onto
/// atoms by De Morgan's laws and double negations are eliminated. The
/// result evaluates identically under the min/max semantics because
/// negation distributes exactly over min and max.
pub fn to_nnf(ast: &SpecAst) -> SpecAst {
    nnf(ast, false)
}

fn nnf(ast: &SpecAst, negated: bool) -> SpecAst {
    match ast {
        SpecAst::Atom(name) => {
            let atom = SpecAst::atom(name.clone());
            if negated {
                atom.not()
            } else {
                atom
            }
        }
        SpecAst::Not(child) => nnf(child, !negated),
        SpecAst::And(l, r) => {
            if negated {
                nnf(l, true).or(nnf(r, true))
            } else {
                nnf(l, false).and(nnf(r, false))
            }
        }
        SpecAst::Or(l, r) => {
            if negated {
                nnf(l, true).and(nnf(r, true))
            } else {
                nnf(l, false).or(nnf(r, false))
            }
        }
        SpecAst::Implies(l, r) => {
            // a -> b  ==  !a || b
            if negated {
                nnf(l, false).and(nnf(r, true))
            } else {
                nnf(l, true).or(nnf(r, false))
            }
        }
        SpecAst::Iff(l, r) => {
            // a <-> b  ==  (!a && !b) || (a && b)
            let desugared = (l.as_ref().clone().not().and(r.as_ref().clone().not()))
                .or(l.as_ref().clone().and(r.as_ref().clone()));
            nnf(&desugared, negated)
        }
    }
}
