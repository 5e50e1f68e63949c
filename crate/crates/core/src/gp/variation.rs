//! Selection and variation operators.

use crate::expr::ExprTree;
use crate::funcgen::Grower;
use rand::Rng;

/// Index of the best of `size` uniformly drawn (with replacement)
/// contestants; ties go to the earlier draw.
pub fn tournament(fitness: &[f64], size: usize, rng: &mut impl Rng) -> usize {
    let mut best = rng.random_range(0..fitness.len());
    for _ in 1..size {
        let c = rng.random_range(0..fitness.len());
        if fitness[c] < fitness[best] {
            best = c;
        }
    }
    best
}

/// Swaps one uniformly chosen non-root subtree between the parents.
/// Returns `None` when either parent is a single node.
pub fn one_point_crossover(a: &ExprTree, b: &ExprTree, rng: &mut impl Rng) -> Option<(ExprTree, ExprTree)> {
    if a.len() < 2 || b.len() < 2 {
        return None;
    }
    let ia = rng.random_range(1..a.len());
    let ib = rng.random_range(1..b.len());
    let sa = a.subtree(ia);
    let sb = b.subtree(ib);
    Some((a.replace_subtree(ia, &sb), b.replace_subtree(ib, &sa)))
}

/// Replaces a uniformly chosen subtree (root included) by a freshly grown
/// tree of depth in `depth_min..=depth_max`.
pub fn subtree_mutation(
    tree: &ExprTree,
    grower: &Grower,
    depth_min: usize,
    depth_max: usize,
    rng: &mut impl Rng,
) -> ExprTree {
    let at = rng.random_range(0..tree.len());
    let fresh = grower.grow(depth_min, depth_max, rng);
    tree.replace_subtree(at, &fresh)
}
