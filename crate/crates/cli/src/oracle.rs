//! Brute-force tree classification, independent of the solver: enumerate
//! every inner node's one-step dominance sign pattern directly.

use noarb_core::ScenarioTree;

/// A tree admits an arbitrage iff some inner node's children sit weakly on
/// one side of the parent price with at least one strict move.
pub fn has_arbitrage(tree: &ScenarioTree) -> bool {
    for i in 0..tree.len() {
        let node = tree.node(i);
        if node.children.is_empty() {
            continue;
        }
        let mut strict_up = 0usize;
        let mut strict_down = 0usize;
        let mut flat = 0usize;
        for &c in &node.children {
            let child = tree.node(c).price;
            let tol = 1e-9 * node.price.abs().max(child.abs()).max(1.0);
            if child > node.price + tol {
                strict_up += 1;
            } else if child < node.price - tol {
                strict_down += 1;
            } else {
                flat += 1;
            }
        }
        let _ = flat;
        if (strict_up > 0 && strict_down == 0) || (strict_down > 0 && strict_up == 0) {
            return true;
        }
    }
    false
}
