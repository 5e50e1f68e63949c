//! Minimal clean-up pass: constant folding and double-negation removal.

use super::{eval_node, ExprTree, Node, Symbol};

/// Folds every operator subtree that does not reference `x` into a single
/// constant (when the folded value is finite) and rewrites `neg(neg(t))`
/// to `t`. Evaluation results are unchanged.
pub fn simplify(tree: &ExprTree) -> ExprTree {
    let mut pos = 0;
    let nodes = simplify_at(tree.nodes(), &mut pos);
    ExprTree::from_prefix(nodes).expect("simplification preserves structure")
}

fn simplify_at(nodes: &[Node], pos: &mut usize) -> Vec<Node> {
    let start = *pos;
    let node = nodes[start];
    *pos += 1;
    let Node::Op(op) = node else {
        return vec![node];
    };
    let mut children = Vec::with_capacity(op.arity());
    for _ in 0..op.arity() {
        children.push(simplify_at(nodes, pos));
    }

    if op == Symbol::Neg {
        if let [Node::Op(Symbol::Neg), rest @ ..] = children[0].as_slice() {
            return rest.to_vec();
        }
    }

    let mut out = Vec::with_capacity(1 + children.iter().map(Vec::len).sum::<usize>());
    out.push(node);
    children.into_iter().for_each(|c| out.extend(c));

    if !out.iter().any(|n| matches!(n, Node::X)) {
        // Without `x` every intermediate value is a scalar, so the point
        // passed here is never read.
        let mut p = 0;
        let value = eval_node(&out, &mut p, &[0.0]).reduce(super::RootReduction::Mean);
        if value.is_finite() {
            return vec![Node::Const(value)];
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(s: &str) -> ExprTree {
        ExprTree::parse(s).unwrap()
    }

    #[test]
    fn folds_constants() {
        assert_eq!(simplify(&p("add(2, 3)")).to_text(), "5.0");
        assert_eq!(simplify(&p("mul(x, add(1, 1))")).to_text(), "mul(x, 2.0)");
        assert_eq!(p("mul(x, add(1, 1))").evaluate(&[3.0]), 6.0);
        assert_eq!(simplify(&p("mul(x, add(1, 1))")).evaluate(&[3.0]), 6.0);
    }

    #[test]
    fn removes_double_negation() {
        assert_eq!(simplify(&p("neg(neg(x))")).to_text(), "x");
        assert_eq!(simplify(&p("neg(neg(neg(x)))")).to_text(), "neg(x)");
    }

    #[test]
    fn leaves_non_finite_folds_alone() {
        let t = p("add(x, exp(exp(10)))");
        let s = simplify(&t);
        assert_eq!(s.to_text(), format!("add(x, exp({:?}))", 10f64.exp()));
        assert_eq!(s.evaluate(&[0.0]), f64::INFINITY);
    }

    #[test]
    fn no_rule_is_identity() {
        let t = p("sum(mul(x, x))");
        assert_eq!(simplify(&t), t);
    }
}
