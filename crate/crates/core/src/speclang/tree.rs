//! Min/max parse tree with signed predicate leaves.

use thiserror::Error;

use super::SpecAst;

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum TreeError {
    #[error("formula is not in negation normal form: {0}")]
    NotInNnf(String),
    #[error("expected {expected} leaf values, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("leaf value for predicate `{0}` is not finite")]
    NonFinite(String),
}

/// Leaf polarity: `Neg` encodes a negated atom.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sign {
    Pos,
    Neg,
}

impl Sign {
    pub fn factor(self) -> f64 {
        match self {
            Sign::Pos => 1.0,
            Sign::Neg => -1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TreeNode {
    /// Conjunction: value is the minimum over children.
    Min(Vec<TreeNode>),
    /// Disjunction: value is the maximum over children.
    Max(Vec<TreeNode>),
    /// Signed reference to predicate `pred`.
    Leaf { pred: usize, sign: Sign },
}

/// A specification lowered to min/max nodes over signed predicate leaves,
/// together with the ordered list of distinct predicate names.
///
/// Immutable after construction; shared freely across evaluation workers.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseTree {
    root: TreeNode,
    predicates: Vec<String>,
}

impl ParseTree {
    pub fn root(&self) -> &TreeNode {
        &self.root
    }

    /// Ordered predicate names; leaf indices point into this list.
    pub fn predicates(&self) -> &[String] {
        &self.predicates
    }

    /// Number of distinct predicates `q`.
    pub fn num_predicates(&self) -> usize {
        self.predicates.len()
    }

    /// Evaluates the quantitative semantics on one value per predicate.
    ///
    /// A leaf with index `i` and sign `s` contributes `s * values[i]`;
    /// min/max nodes fold their children. The result is positive iff the
    /// specification is satisfied.
    pub fn eval(&self, values: &[f64]) -> Result<f64, TreeError> {
        if values.len() != self.predicates.len() {
            return Err(TreeError::LengthMismatch {
                expected: self.predicates.len(),
                got: values.len(),
            });
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(TreeError::NonFinite(self.predicates[i].clone()));
        }
        Ok(self.eval_with(&mut |pred, sign| sign.factor() * values[pred]))
    }

    /// Evaluates the tree with an arbitrary per-leaf valuation.
    ///
    /// Used by the acquisition layer, where each leaf takes the endpoint of
    /// its predicate's confidence interval that lower-bounds the signed value.
    pub fn eval_with(&self, leaf: &mut impl FnMut(usize, Sign) -> f64) -> f64 {
        eval_node(&self.root, leaf)
    }

    /// Indented, deterministic rendering for debugging.
    pub fn render(&self) -> String {
        let mut out = String::new();
        out.push_str("predicates:");
        for name in &self.predicates {
            out.push(' ');
            out.push_str(name);
        }
        out.push('\n');
        render_node(&self.root, &self.predicates, 0, &mut out);
        out
    }
}

impl std::fmt::Display for ParseTree {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.render())
    }
}

fn eval_node(node: &TreeNode, leaf: &mut impl FnMut(usize, Sign) -> f64) -> f64 {
    match node {
        TreeNode::Leaf { pred, sign } => leaf(*pred, *sign),
        TreeNode::Min(children) => children
            .iter()
            .map(|c| eval_node(c, leaf))
            .fold(f64::INFINITY, f64::min),
        TreeNode::Max(children) => children
            .iter()
            .map(|c| eval_node(c, leaf))
            .fold(f64::NEG_INFINITY, f64::max),
    }
}

fn render_node(node: &TreeNode, predicates: &[String], depth: usize, out: &mut String) {
    for _ in 0..depth {
        out.push_str("  ");
    }
    match node {
        TreeNode::Leaf { pred, sign } => {
            let mark = match sign {
                Sign::Pos => '+',
                Sign::Neg => '-',
            };
            out.push_str(&format!("leaf {mark}{}\n", predicates[*pred]));
        }
        TreeNode::Min(children) => {
            out.push_str("min\n");
            for c in children {
                render_node(c, predicates, depth + 1, out);
            }
        }
        TreeNode::Max(children) => {
            out.push_str("max\n");
            for c in children {
                render_node(c, predicates, depth + 1, out);
            }
        }
    }
}

/// Lowers an NNF formula to a parse tree.
///
/// `and` becomes min, `or` becomes max, atoms become positive leaves and
/// negated atoms negative leaves. Chains of the same connective are
/// flattened into one n-ary node. Predicate names are deduplicated in
/// first-occurrence order; repeated atoms share an index but occupy
/// distinct leaves.
pub fn build_parse_tree(nnf: &SpecAst) -> Result<ParseTree, TreeError> {
    let mut predicates: Vec<String> = Vec::new();
    let root = lower(nnf, &mut predicates)?;
    Ok(ParseTree { root, predicates })
}

fn intern(name: &str, predicates: &mut Vec<String>) -> usize {
    match predicates.iter().position(|p| p == name) {
        Some(i) => i,
        None => {
            predicates.push(name.to_string());
            predicates.len() - 1
        }
    }
}

fn lower(ast: &SpecAst, predicates: &mut Vec<String>) -> Result<TreeNode, TreeError> {
    match ast {
        SpecAst::Atom(name) => Ok(TreeNode::Leaf {
            pred: intern(name, predicates),
            sign: Sign::Pos,
        }),
        SpecAst::Not(child) => match child.as_ref() {
            SpecAst::Atom(name) => Ok(TreeNode::Leaf {
                pred: intern(name, predicates),
                sign: Sign::Neg,
            }),
            other => Err(TreeError::NotInNnf(format!(
                "negation applied to non-atom `{other}`"
            ))),
        },
        SpecAst::And(l, r) => {
            let mut children = Vec::new();
            flatten_into(lower(l, predicates)?, true, &mut children);
            flatten_into(lower(r, predicates)?, true, &mut children);
            Ok(TreeNode::Min(children))
        }
        SpecAst::Or(l, r) => {
            let mut children = Vec::new();
            flatten_into(lower(l, predicates)?, false, &mut children);
            flatten_into(lower(r, predicates)?, false, &mut children);
            Ok(TreeNode::Max(children))
        }
        other @ (SpecAst::Implies(..) | SpecAst::Iff(..)) => Err(TreeError::NotInNnf(format!(
            "connective in `{other}` must be desugared first"
        ))),
    }
}

fn flatten_into(node: TreeNode, conj: bool, children: &mut Vec<TreeNode>) {
    match node {
        TreeNode::Min(inner) if conj => children.extend(inner),
        TreeNode::Max(inner) if !conj => children.extend(inner),
        other => children.push(other),
    }
}
