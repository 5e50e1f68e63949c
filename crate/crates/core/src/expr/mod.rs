//! Expression-tree genotype.
//!
//! A tree is stored as a flat prefix-order node list, so every subtree is a
//! contiguous slice. Evaluation works on vector inputs: `x` is the whole
//! decision vector, element-wise operators broadcast scalars against
//! vectors, and the reductions (`sum`, `mean`, `prod`, `max`) collapse a
//! vector to a scalar. A root that still yields a vector is reduced by its
//! mean.

mod simplify;
mod symbol;
mod text;

pub use simplify::simplify;
pub use symbol::{OpSpec, ProbabilityTable, Protection, Symbol, TableError, PROTECTION_THRESHOLD};
pub use text::ParseError;

use serde::{Deserialize, Serialize};

/// One node of a prefix-order tree.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Node {
    /// The decision vector.
    X,
    /// A real constant.
    Const(f64),
    /// A random number, realized once when the node is created.
    Rand(f64),
    /// An operator; never an operand symbol.
    Op(Symbol),
}

impl Node {
    pub fn symbol(&self) -> Symbol {
        match self {
            Node::X => Symbol::X,
            Node::Const(_) => Symbol::A,
            Node::Rand(_) => Symbol::Rand,
            Node::Op(s) => *s,
        }
    }

    pub fn arity(&self) -> usize {
        self.symbol().arity()
    }
}

/// How a vector-valued root is turned into the objective value.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RootReduction {
    #[default]
    Mean,
    Sum,
}

/// Either a scalar or a vector of the ambient dimension.
#[derive(Clone, Debug, PartialEq)]
pub enum EvalValue {
    Scalar(f64),
    Vector(Vec<f64>),
}

impl EvalValue {
    pub fn reduce(self, how: RootReduction) -> f64 {
        match self {
            EvalValue::Scalar(v) => v,
            EvalValue::Vector(v) => {
                let s: f64 = v.iter().sum();
                match how {
                    RootReduction::Mean => s / v.len() as f64,
                    RootReduction::Sum => s,
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum TreeError {
    #[error("empty node list")]
    Empty,
    #[error("node list ends before all operator arguments are supplied")]
    Truncated,
    #[error("{0} trailing nodes after the root subtree")]
    Trailing(usize),
    #[error("operand symbol {0} used as an operator node")]
    OperandAsOperator(Symbol),
}

/// A rooted expression tree in prefix order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct ExprTree {
    nodes: Vec<Node>,
}

impl ExprTree {
    /// Builds a tree from a prefix-order node list, checking arity structure.
    pub fn from_prefix(nodes: Vec<Node>) -> Result<Self, TreeError> {
        if nodes.is_empty() {
            return Err(TreeError::Empty);
        }
        let mut open = 1usize;
        for (i, node) in nodes.iter().enumerate() {
            if let Node::Op(s) = node {
                if s.is_operand() {
                    return Err(TreeError::OperandAsOperator(*s));
                }
            }
            if open == 0 {
                return Err(TreeError::Trailing(nodes.len() - i));
            }
            open = open - 1 + node.arity();
        }
        if open > 0 {
            return Err(TreeError::Truncated);
        }
        Ok(ExprTree { nodes })
    }

    pub fn leaf(node: Node) -> Self {
        assert_eq!(node.arity(), 0, "leaf must be an operand");
        ExprTree { nodes: vec![node] }
    }

    pub fn unary(op: Symbol, child: ExprTree) -> Self {
        assert_eq!(op.arity(), 1);
        let mut nodes = Vec::with_capacity(child.len() + 1);
        nodes.push(Node::Op(op));
        nodes.extend(child.nodes);
        ExprTree { nodes }
    }

    pub fn binary(op: Symbol, left: ExprTree, right: ExprTree) -> Self {
        assert_eq!(op.arity(), 2);
        let mut nodes = Vec::with_capacity(left.len() + right.len() + 1);
        nodes.push(Node::Op(op));
        nodes.extend(left.nodes);
        nodes.extend(right.nodes);
        ExprTree { nodes }
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Longest root-to-leaf path counted in edges; a lone leaf has depth 0.
    pub fn depth(&self) -> usize {
        // Stack of remaining child slots per open operator.
        let mut slots: Vec<usize> = Vec::new();
        let mut max_depth = 0;
        for node in &self.nodes {
            max_depth = max_depth.max(slots.len());
            if let Some(top) = slots.last_mut() {
                *top -= 1;
            }
            if node.arity() > 0 {
                slots.push(node.arity());
            }
            while slots.last() == Some(&0) {
                slots.pop();
            }
        }
        max_depth
    }

    /// Depth of the node at prefix index `index` (root is 0).
    pub fn depth_of(&self, index: usize) -> usize {
        let mut slots: Vec<usize> = Vec::new();
        for (i, node) in self.nodes.iter().enumerate() {
            if i == index {
                return slots.len();
            }
            if let Some(top) = slots.last_mut() {
                *top -= 1;
            }
            if node.arity() > 0 {
                slots.push(node.arity());
            }
            while slots.last() == Some(&0) {
                slots.pop();
            }
        }
        panic!("node index {index} out of range for tree of {} nodes", self.len());
    }

    /// Exclusive end index of the subtree rooted at `start`.
    pub fn subtree_end(&self, start: usize) -> usize {
        let mut open = 1usize;
        let mut i = start;
        while open > 0 {
            open = open - 1 + self.nodes[i].arity();
            i += 1;
        }
        i
    }

    pub fn subtree(&self, start: usize) -> ExprTree {
        ExprTree { nodes: self.nodes[start..self.subtree_end(start)].to_vec() }
    }

    /// A copy with the subtree at `start` replaced by `replacement`.
    pub fn replace_subtree(&self, start: usize, replacement: &ExprTree) -> ExprTree {
        let end = self.subtree_end(start);
        let mut nodes = Vec::with_capacity(self.len() - (end - start) + replacement.len());
        nodes.extend_from_slice(&self.nodes[..start]);
        nodes.extend_from_slice(&replacement.nodes);
        nodes.extend_from_slice(&self.nodes[end..]);
        ExprTree { nodes }
    }

    pub fn contains_x(&self) -> bool {
        self.nodes.iter().any(|n| matches!(n, Node::X))
    }

    /// Objective value at `point`, with vector roots reduced by their mean.
    ///
    /// Overflow and NaN are carried through rather than reported as errors.
    pub fn evaluate(&self, point: &[f64]) -> f64 {
        self.evaluate_with(point, RootReduction::Mean)
    }

    pub fn evaluate_with(&self, point: &[f64], how: RootReduction) -> f64 {
        self.evaluate_value(point).reduce(how)
    }

    /// Unreduced value of the root.
    pub fn evaluate_value(&self, point: &[f64]) -> EvalValue {
        let mut pos = 0;
        let v = eval_node(&self.nodes, &mut pos, point);
        debug_assert_eq!(pos, self.nodes.len());
        v
    }

    /// Row-wise evaluation over an `n x d` row-major design.
    pub fn evaluate_batch(&self, points: &crate::sampling::Points) -> Vec<f64> {
        points.rows().map(|row| self.evaluate(row)).collect()
    }

    pub fn to_text(&self) -> String {
        text::serialize(self)
    }

    pub fn parse(input: &str) -> Result<Self, ParseError> {
        text::parse(input)
    }
}

impl std::fmt::Display for ExprTree {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.to_text())
    }
}

impl std::str::FromStr for ExprTree {
    type Err = ParseError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        text::parse(s)
    }
}

impl TryFrom<String> for ExprTree {
    type Error = ParseError;
    fn try_from(s: String) -> Result<Self, Self::Error> {
        text::parse(&s)
    }
}

impl From<ExprTree> for String {
    fn from(t: ExprTree) -> String {
        t.to_text()
    }
}

fn protected(value: f64) -> bool {
    value.abs() <= PROTECTION_THRESHOLD
}

fn apply_unary(op: Symbol, v: f64) -> f64 {
    use std::f64::consts::PI;
    match op {
        Symbol::Neg => -v,
        Symbol::Rec => {
            if protected(v) {
                1.0
            } else {
                1.0 / v
            }
        }
        Symbol::Multen => 10.0 * v,
        Symbol::Square => v * v,
        Symbol::Sqrt => v.abs().sqrt(),
        Symbol::Abs => v.abs(),
        Symbol::Exp => v.exp(),
        Symbol::Log => {
            if protected(v) {
                1.0
            } else {
                v.abs().ln()
            }
        }
        Symbol::Sin => (2.0 * PI * v).sin(),
        Symbol::Cos => (2.0 * PI * v).cos(),
        Symbol::Round => v.ceil(),
        _ => unreachable!("{op} is not an element-wise unary operator"),
    }
}

fn apply_binary(op: Symbol, a: f64, b: f64) -> f64 {
    match op {
        Symbol::Add => a + b,
        Symbol::Sub => a - b,
        Symbol::Mul => a * b,
        Symbol::Div => {
            if protected(b) {
                1.0
            } else {
                a / b
            }
        }
        _ => unreachable!("{op} is not a binary operator"),
    }
}

fn nan_max(acc: f64, v: f64) -> f64 {
    if acc.is_nan() || v.is_nan() {
        f64::NAN
    } else {
        acc.max(v)
    }
}

fn eval_node(nodes: &[Node], pos: &mut usize, x: &[f64]) -> EvalValue {
    let node = nodes[*pos];
    *pos += 1;
    match node {
        Node::X => EvalValue::Vector(x.to_vec()),
        Node::Const(c) | Node::Rand(c) => EvalValue::Scalar(c),
        Node::Op(op) if op.arity() == 2 => {
            let a = eval_node(nodes, pos, x);
            let b = eval_node(nodes, pos, x);
            match (a, b) {
                (EvalValue::Scalar(a), EvalValue::Scalar(b)) => EvalValue::Scalar(apply_binary(op, a, b)),
                (EvalValue::Scalar(a), EvalValue::Vector(mut b)) => {
                    b.iter_mut().for_each(|v| *v = apply_binary(op, a, *v));
                    EvalValue::Vector(b)
                }
                (EvalValue::Vector(mut a), EvalValue::Scalar(b)) => {
                    a.iter_mut().for_each(|v| *v = apply_binary(op, *v, b));
                    EvalValue::Vector(a)
                }
                (EvalValue::Vector(mut a), EvalValue::Vector(b)) => {
                    a.iter_mut().zip(&b).for_each(|(v, &w)| *v = apply_binary(op, *v, w));
                    EvalValue::Vector(a)
                }
            }
        }
        Node::Op(op) => {
            let arg = eval_node(nodes, pos, x);
            match (op, arg) {
                // Reductions treat a scalar as a one-element vector.
                (Symbol::Sum | Symbol::Mean | Symbol::Prod | Symbol::Max | Symbol::Cum, EvalValue::Scalar(v)) => {
                    EvalValue::Scalar(v)
                }
                (Symbol::Sum, EvalValue::Vector(v)) => EvalValue::Scalar(v.iter().sum()),
                (Symbol::Mean, EvalValue::Vector(v)) => EvalValue::Scalar(v.iter().sum::<f64>() / v.len() as f64),
                (Symbol::Prod, EvalValue::Vector(v)) => EvalValue::Scalar(v.iter().product()),
                (Symbol::Max, EvalValue::Vector(v)) => {
                    EvalValue::Scalar(v.iter().copied().fold(f64::NEG_INFINITY, nan_max))
                }
                (Symbol::Cum, EvalValue::Vector(mut v)) => {
                    let mut acc = 0.0;
                    for e in v.iter_mut() {
                        acc += *e;
                        *e = acc;
                    }
                    EvalValue::Vector(v)
                }
                (op, EvalValue::Scalar(v)) => EvalValue::Scalar(apply_unary(op, v)),
                (op, EvalValue::Vector(mut v)) => {
                    v.iter_mut().for_each(|e| *e = apply_unary(op, *e));
                    EvalValue::Vector(v)
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::Points;

    fn x() -> ExprTree {
        ExprTree::leaf(Node::X)
    }

    fn c(v: f64) -> ExprTree {
        ExprTree::leaf(Node::Const(v))
    }

    #[test]
    fn add_constant_then_root_mean() {
        let t = ExprTree::binary(Symbol::Add, x(), c(2.0));
        assert_eq!(t.evaluate_value(&[1.0, 1.0]), EvalValue::Vector(vec![3.0, 3.0]));
        assert_eq!(t.evaluate(&[1.0, 1.0]), 3.0);
    }

    #[test]
    fn protected_division() {
        let t = ExprTree::binary(Symbol::Div, c(1.0), x());
        assert_eq!(t.evaluate_value(&[0.0, 4.0]), EvalValue::Vector(vec![1.0, 0.25]));
        assert_eq!(t.evaluate(&[0.0, 4.0]), 0.625);
        // Threshold is inclusive.
        assert_eq!(t.evaluate(&[1e-20]), 1.0);
        assert_eq!(t.evaluate(&[-1e-20]), 1.0);
        assert_eq!(t.evaluate(&[2e-20]), 5e19);
    }

    #[test]
    fn protected_rec_and_log() {
        let rec = ExprTree::unary(Symbol::Rec, x());
        let log = ExprTree::unary(Symbol::Log, x());
        assert_eq!(rec.evaluate(&[0.0]), 1.0);
        assert_eq!(log.evaluate(&[0.0]), 1.0);
        assert_eq!(log.evaluate(&[-std::f64::consts::E]), 1.0);
        assert_eq!(rec.evaluate(&[-4.0]), -0.25);
    }

    #[test]
    fn cum_prefix_sums_then_mean() {
        let t = ExprTree::unary(Symbol::Cum, x());
        assert_eq!(t.evaluate_value(&[1.0, 2.0, 3.0]), EvalValue::Vector(vec![1.0, 3.0, 6.0]));
        assert!((t.evaluate(&[1.0, 2.0, 3.0]) - 10.0 / 3.0).abs() < 1e-15);
        assert_eq!(t.evaluate_with(&[1.0, 2.0, 3.0], RootReduction::Sum), 10.0);
    }

    #[test]
    fn elementwise_semantics() {
        let p = [0.25, -1.5];
        let eval = |s: Symbol| ExprTree::unary(s, x()).evaluate_value(&p);
        assert_eq!(eval(Symbol::Sqrt), EvalValue::Vector(vec![0.5, 1.5f64.sqrt()]));
        assert_eq!(eval(Symbol::Round), EvalValue::Vector(vec![1.0, -1.0]));
        assert_eq!(eval(Symbol::Multen), EvalValue::Vector(vec![2.5, -15.0]));
        match eval(Symbol::Sin) {
            EvalValue::Vector(v) => {
                assert!((v[0] - 1.0).abs() < 1e-15);
                assert!((v[1] - (-3.0 * std::f64::consts::PI).sin()).abs() < 1e-15);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn reductions() {
        let p = [2.0, -3.0, 4.0];
        let eval = |s: Symbol| ExprTree::unary(s, x()).evaluate(&p);
        assert_eq!(eval(Symbol::Sum), 3.0);
        assert_eq!(eval(Symbol::Mean), 1.0);
        assert_eq!(eval(Symbol::Prod), -24.0);
        assert_eq!(eval(Symbol::Max), 4.0);
        // Reducing a scalar leaves it alone.
        assert_eq!(ExprTree::unary(Symbol::Sum, c(5.0)).evaluate(&p), 5.0);
    }

    #[test]
    fn max_propagates_nan() {
        let t = ExprTree::unary(Symbol::Max, ExprTree::unary(Symbol::Sqrt, x()));
        let nan_tree = ExprTree::unary(Symbol::Max, ExprTree::binary(Symbol::Mul, x(), c(f64::INFINITY)));
        assert_eq!(t.evaluate(&[4.0, 9.0]), 3.0);
        assert!(nan_tree.evaluate(&[0.0, 1.0]).is_nan());
    }

    #[test]
    fn batch_matches_rows() {
        let sphere = ExprTree::unary(Symbol::Sum, ExprTree::binary(Symbol::Mul, x(), x()));
        let pts = Points::new(2, vec![0.0, 0.0, 1.0, 1.0]);
        assert_eq!(sphere.evaluate_batch(&pts), vec![0.0, 2.0]);
        let single = Points::new(2, vec![0.3, -0.7]);
        assert_eq!(sphere.evaluate_batch(&single), vec![sphere.evaluate(&[0.3, -0.7])]);
    }

    #[test]
    fn overflow_is_reported_as_non_finite() {
        let t = ExprTree::unary(Symbol::Exp, ExprTree::binary(Symbol::Mul, x(), x()));
        let pts = Points::new(2, vec![100.0, -100.0, 0.0, 0.0]);
        let y = t.evaluate_batch(&pts);
        assert!(!y[0].is_finite());
        assert_eq!(y[1], 1.0);
    }

    #[test]
    fn structure_checks() {
        assert_eq!(ExprTree::from_prefix(vec![]), Err(TreeError::Empty));
        assert_eq!(ExprTree::from_prefix(vec![Node::Op(Symbol::Add), Node::X]), Err(TreeError::Truncated));
        assert_eq!(ExprTree::from_prefix(vec![Node::X, Node::X]), Err(TreeError::Trailing(1)));
        assert_eq!(ExprTree::from_prefix(vec![Node::Op(Symbol::X)]), Err(TreeError::OperandAsOperator(Symbol::X)));
    }

    #[test]
    fn depth_and_subtrees() {
        // add(neg(x), mul(x, 2))
        let t = ExprTree::binary(
            Symbol::Add,
            ExprTree::unary(Symbol::Neg, x()),
            ExprTree::binary(Symbol::Mul, x(), c(2.0)),
        );
        assert_eq!(t.depth(), 2);
        assert_eq!(x().depth(), 0);
        assert_eq!(t.subtree_end(0), t.len());
        assert_eq!(t.subtree(1).to_text(), "neg(x)");
        assert_eq!(t.subtree(3).to_text(), "mul(x, 2.0)");
        assert_eq!(t.depth_of(0), 0);
        assert_eq!(t.depth_of(2), 2);
        assert_eq!(t.depth_of(5), 2);
        let r = t.replace_subtree(1, &c(7.0));
        assert_eq!(r.to_text(), "add(7.0, mul(x, 2.0))");
        assert_eq!(r.depth(), 2);
    }
}
