//! Exact no-arbitrage certification on finite scenario trees.
//!
//! Each inner node poses a one-step problem: does the parent price lie in the
//! relative interior of the convex hull of its children's prices? In one
//! dimension that is a closed-form interval question, so no LP solver is
//! needed: interior (or all-equal) nodes admit strictly positive martingale
//! weights, and any other node yields a dominance position that lifts to a
//! global arbitrage certificate. The two outcomes are mutually exclusive and
//! exhaustive on every valid tree.
//!
//! Numeric policy: when every price is exactly representable as a small
//! rational, the one-step weights are solved in exact rational arithmetic;
//! otherwise floating point with a relative boundary tolerance of 1e-9.
//! Parent equal to an extreme child price with no child on the opposing side
//! counts as arbitrage. Measure equivalence is enforced as `q >= 1e-12` on
//! every branch.

use num_rational::Ratio;
use num_traits::Signed;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::TimeGrid;
use crate::procgen::{sample_batch, ProcessSpec};
use crate::strategy::{evaluate_stop_single, StoppingRule};

/// Relative tolerance for boundary decisions in floating point.
pub const BOUNDARY_TOL: f64 = 1e-9;
/// Strict positivity threshold enforcing measure equivalence.
pub const EQUIVALENCE_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeNode {
    pub parent: Option<usize>,
    /// Probability of the branch from the parent; 1 for the root.
    pub prob: f64,
    pub price: f64,
    pub level: usize,
    pub children: Vec<usize>,
}

/// Finite scenario tree: adapted price process on its natural filtration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioTree {
    nodes: Vec<TreeNode>,
}

impl ScenarioTree {
    pub fn new(root_price: f64) -> Self {
        Self {
            nodes: vec![TreeNode {
                parent: None,
                prob: 1.0,
                price: root_price,
                level: 0,
                children: Vec::new(),
            }],
        }
    }

    pub fn add_child(&mut self, parent: usize, prob: f64, price: f64) -> usize {
        let idx = self.nodes.len();
        let level = self.nodes[parent].level + 1;
        self.nodes.push(TreeNode {
            parent: Some(parent),
            prob,
            price,
            level,
            children: Vec::new(),
        });
        self.nodes[parent].children.push(idx);
        idx
    }

    pub fn node(&self, i: usize) -> &TreeNode {
        &self.nodes[i]
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[TreeNode] {
        &self.nodes
    }

    pub fn root(&self) -> usize {
        0
    }

    pub fn leaves(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.nodes.len()).filter(|&i| self.nodes[i].children.is_empty())
    }

    pub fn inner_nodes(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.nodes.len()).filter(|&i| !self.nodes[i].children.is_empty())
    }

    /// Total probability of the unique path from the root to `node`.
    pub fn path_probability(&self, node: usize) -> f64 {
        let mut p = 1.0;
        let mut cur = node;
        while let Some(parent) = self.nodes[cur].parent {
            p *= self.nodes[cur].prob;
            cur = parent;
        }
        p
    }

    pub fn validate(&self) -> Result<()> {
        if self.nodes.is_empty() {
            return Err(Error::InvalidTree("empty tree".into()));
        }
        for (i, node) in self.nodes.iter().enumerate() {
            if !node.price.is_finite() {
                return Err(Error::InvalidTree(format!("node {i} has a non-finite price")));
            }
            if i > 0 && !(node.prob > 0.0) {
                return Err(Error::InvalidTree(format!(
                    "branch probability at node {i} must be strictly positive"
                )));
            }
        }
        for i in self.inner_nodes().collect::<Vec<_>>() {
            let s: f64 = self.nodes[i].children.iter().map(|&c| self.nodes[c].prob).sum();
            if (s - 1.0).abs() > 1e-9 {
                return Err(Error::InvalidTree(format!(
                    "sibling probabilities under node {i} sum to {s}"
                )));
            }
        }
        // all leaves must sit at the same level for an adapted price chain
        let levels: Vec<usize> = self.leaves().map(|i| self.nodes[i].level).collect();
        if levels.windows(2).any(|w| w[0] != w[1]) {
            return Err(Error::InvalidTree("leaves at mixed levels".into()));
        }
        Ok(())
    }
}

/// Replacement branch weights making the price a martingale: strictly
/// positive, summing to one among siblings, and matching each parent price.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MartingaleCertificate {
    /// Weight of the branch leading into each node; index 0 (root) is unused.
    pub weights: Vec<f64>,
}

/// Predictable positions per node certifying an arbitrage: terminal gains
/// are nonnegative on every leaf path and positive on at least one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArbitrageCertificate {
    /// Position held over the step from each node to its children.
    pub positions: Vec<f64>,
    /// The node whose one-step dominance generated the certificate.
    pub witness_node: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Certificate {
    Martingale(MartingaleCertificate),
    Arbitrage(ArbitrageCertificate),
}

impl Certificate {
    pub fn is_martingale(&self) -> bool {
        matches!(self, Certificate::Martingale(_))
    }
}

/// One-step classification of an inner node.
enum NodeClass {
    /// all child prices equal the parent
    Degenerate,
    /// parent strictly inside the child price range
    Interior,
    /// children on one side only; `+1` when they dominate the parent
    Dominated(f64),
}

fn classify_node(parent_price: f64, child_prices: &[f64]) -> NodeClass {
    let scale = child_prices
        .iter()
        .fold(parent_price.abs(), |m, c| m.max(c.abs()))
        .max(1.0);
    let tol = BOUNDARY_TOL * scale;
    let min = child_prices.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = child_prices.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if (min - parent_price).abs() <= tol && (max - parent_price).abs() <= tol {
        NodeClass::Degenerate
    } else if parent_price - min > tol && max - parent_price > tol {
        NodeClass::Interior
    } else if min >= parent_price - tol {
        NodeClass::Dominated(1.0)
    } else {
        NodeClass::Dominated(-1.0)
    }
}

/// Interior weights: start from the uniform distribution and shift mass
/// toward the extreme child on the far side of the parent until the mean
/// matches. Every weight stays strictly positive.
fn interior_weights(parent_price: f64, child_prices: &[f64]) -> Vec<f64> {
    if let Some(exact) = exact_interior_weights(parent_price, child_prices) {
        return exact;
    }
    let n = child_prices.len() as f64;
    let mean: f64 = child_prices.iter().sum::<f64>() / n;
    let mut weights = vec![1.0 / n; child_prices.len()];
    if (mean - parent_price).abs() == 0.0 {
        return weights;
    }
    let target_idx = if mean > parent_price {
        (0..child_prices.len()).min_by(|&a, &b| child_prices[a].partial_cmp(&child_prices[b]).unwrap())
    } else {
        (0..child_prices.len()).max_by(|&a, &b| child_prices[a].partial_cmp(&child_prices[b]).unwrap())
    }
    .unwrap();
    let extreme = child_prices[target_idx];
    let theta = (mean - parent_price) / (mean - extreme);
    for w in weights.iter_mut() {
        *w *= 1.0 - theta;
    }
    weights[target_idx] += theta;
    weights
}

type Rat = Ratio<i128>;

/// Exact rational representation of a float when the denominator is small.
fn to_small_rational(x: f64) -> Option<Rat> {
    for denom in [1i128, 2, 4, 8, 16, 32, 64, 128, 10, 100, 1000, 10_000, 100_000, 1_000_000] {
        let scaled = x * denom as f64;
        if scaled.abs() > 1e15 {
            continue;
        }
        let num = scaled.round();
        if (scaled - num).abs() == 0.0 {
            return Some(Rat::new(num as i128, denom));
        }
    }
    None
}

fn exact_interior_weights(parent_price: f64, child_prices: &[f64]) -> Option<Vec<f64>> {
    let parent = to_small_rational(parent_price)?;
    let children: Option<Vec<Rat>> = child_prices.iter().map(|&c| to_small_rational(c)).collect();
    let children = children?;
    let n = Rat::new(children.len() as i128, 1);
    let mean: Rat = children.iter().sum::<Rat>() / n;
    let uniform = n.recip();
    if mean == parent {
        return Some(vec![uniform_to_f64(uniform); children.len()]);
    }
    let target_idx = if mean > parent {
        (0..children.len()).min_by_key(|&i| children[i])
    } else {
        (0..children.len()).max_by_key(|&i| children[i])
    }?;
    let extreme = children[target_idx];
    if mean == extreme {
        return None;
    }
    let theta = (mean - parent) / (mean - extreme);
    if theta.is_negative() || theta >= Ratio::new(1, 1) {
        return None;
    }
    let one = Rat::new(1, 1);
    let mut weights: Vec<Rat> = vec![(one - theta) * uniform; children.len()];
    weights[target_idx] += theta;
    // exact check before converting
    let recon: Rat = weights
        .iter()
        .zip(&children)
        .map(|(w, c)| *w * *c)
        .sum();
    if recon != parent || weights.iter().any(|w| !w.is_positive()) {
        return None;
    }
    Some(weights.into_iter().map(uniform_to_f64).collect())
}

fn uniform_to_f64(r: Rat) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

/// Decide the tree: exactly one of a strictly positive martingale measure or
/// an arbitrage strategy, by node-local decomposition in breadth-first order.
pub fn solve_tree(tree: &ScenarioTree) -> Result<Certificate> {
    tree.validate()?;
    let mut weights = vec![0.0; tree.len()];
    weights[tree.root()] = 1.0;
    for i in tree.inner_nodes().collect::<Vec<_>>() {
        let parent_price = tree.node(i).price;
        let child_prices: Vec<f64> = tree.node(i).children.iter().map(|&c| tree.node(c).price).collect();
        match classify_node(parent_price, &child_prices) {
            NodeClass::Degenerate => {
                let u = 1.0 / child_prices.len() as f64;
                for &c in &tree.node(i).children {
                    weights[c] = u;
                }
            }
            NodeClass::Interior => {
                let q = interior_weights(parent_price, &child_prices);
                for (&c, &w) in tree.node(i).children.iter().zip(&q) {
                    weights[c] = w;
                }
            }
            NodeClass::Dominated(side) => {
                let mut positions = vec![0.0; tree.len()];
                positions[i] = side;
                return Ok(Certificate::Arbitrage(ArbitrageCertificate {
                    positions,
                    witness_node: i,
                }));
            }
        }
    }
    Ok(Certificate::Martingale(MartingaleCertificate { weights }))
}

/// Re-validate a certificate from scratch; never trusts solver output.
pub fn verify_certificate(tree: &ScenarioTree, certificate: &Certificate) -> Result<bool> {
    tree.validate()?;
    match certificate {
        Certificate::Martingale(m) => {
            if m.weights.len() != tree.len() {
                return Err(Error::ShapeMismatch(format!(
                    "{} weights for {} nodes",
                    m.weights.len(),
                    tree.len()
                )));
            }
            for i in tree.inner_nodes().collect::<Vec<_>>() {
                let node = tree.node(i);
                let mut sum = 0.0;
                let mut mean = 0.0;
                let mut scale: f64 = node.price.abs().max(1.0);
                for &c in &node.children {
                    let q = m.weights[c];
                    if q < EQUIVALENCE_FLOOR {
                        return Ok(false);
                    }
                    sum += q;
                    mean += q * tree.node(c).price;
                    scale = scale.max(tree.node(c).price.abs());
                }
                if (sum - 1.0).abs() > 1e-9 {
                    return Ok(false);
                }
                if (mean - node.price).abs() > BOUNDARY_TOL * scale {
                    return Ok(false);
                }
            }
            Ok(true)
        }
        Certificate::Arbitrage(a) => {
            if a.positions.len() != tree.len() {
                return Err(Error::ShapeMismatch(format!(
                    "{} positions for {} nodes",
                    a.positions.len(),
                    tree.len()
                )));
            }
            let mut any_positive = false;
            for leaf in tree.leaves().collect::<Vec<_>>() {
                let mut gain = 0.0;
                let mut scale: f64 = 1.0;
                let mut cur = leaf;
                while let Some(parent) = tree.node(cur).parent {
                    gain += a.positions[parent] * (tree.node(cur).price - tree.node(parent).price);
                    scale = scale.max(tree.node(cur).price.abs());
                    cur = parent;
                }
                if gain < -EQUIVALENCE_FLOOR * scale {
                    return Ok(false);
                }
                if gain > BOUNDARY_TOL * scale {
                    any_positive = true;
                }
            }
            Ok(any_positive)
        }
    }
}

/// Per-node martingale residual `Σ q·S_child - S_node` (for reporting).
pub fn martingale_residuals(tree: &ScenarioTree, m: &MartingaleCertificate) -> Vec<(usize, f64)> {
    tree.inner_nodes()
        .map(|i| {
            let node = tree.node(i);
            let mean: f64 = node
                .children
                .iter()
                .map(|&c| m.weights[c] * tree.node(c).price)
                .sum();
            (i, mean - node.price)
        })
        .collect()
}

/// Quantize sampled chains `X_{τ_1}, ..., X_{τ_N}` into a scenario tree by
/// conditional equal-frequency binning: each node splits its paths at the
/// quantiles of the next stopped value; prices are bin conditional means and
/// branch probabilities the empirical frequencies. Nodes whose values are all
/// within a tiny spread collapse to a single child.
pub fn sample_chain_tree(
    spec: &ProcessSpec,
    grid: TimeGrid,
    rules: &[StoppingRule],
    n_paths: usize,
    bins: usize,
    seed: u64,
) -> Result<ScenarioTree> {
    if bins < 2 {
        return Err(Error::InvalidParameter {
            name: "bins",
            value: bins as f64,
            constraint: "need at least 2 bins",
        });
    }
    if rules.is_empty() {
        return Err(Error::InvalidTree("no stopping rules supplied".into()));
    }
    let paths = sample_batch(spec, grid, seed, n_paths)?;
    // stopped values per path per level; stops clamped nondecreasing
    let mut stopped: Vec<Vec<f64>> = Vec::with_capacity(n_paths);
    for p in &paths {
        let mut row = Vec::with_capacity(rules.len());
        let mut last = 0usize;
        for rule in rules {
            let i = evaluate_stop_single(rule, p)?.max(last);
            last = i;
            row.push(p.value(i));
        }
        stopped.push(row);
    }
    let root_price = paths[0].start();
    if paths.iter().any(|p| p.start() != root_price) {
        return Err(Error::InvalidTree("paths start at different values".into()));
    }
    let mut tree = ScenarioTree::new(root_price);
    let all: Vec<usize> = (0..n_paths).collect();
    split_node(&mut tree, 0, &all, 0, rules.len(), &stopped, bins)?;
    tree.validate()?;
    Ok(tree)
}

fn split_node(
    tree: &mut ScenarioTree,
    node: usize,
    members: &[usize],
    level: usize,
    depth: usize,
    stopped: &[Vec<f64>],
    bins: usize,
) -> Result<()> {
    if level == depth {
        return Ok(());
    }
    if members.len() < 10 * bins {
        let needed = 10 * bins;
        return Err(Error::InsufficientPaths {
            needed,
            got: members.len(),
            factor: needed.div_ceil(members.len().max(1)),
        });
    }
    let mut order: Vec<usize> = members.to_vec();
    order.sort_by(|&a, &b| stopped[a][level].partial_cmp(&stopped[b][level]).unwrap());
    let lo = stopped[order[0]][level];
    let hi = stopped[order[order.len() - 1]][level];
    let scale = lo.abs().max(hi.abs()).max(1.0);
    let groups: Vec<Vec<usize>> = if hi - lo <= 1e-12 * scale {
        // degenerate spread: collapse to one child
        vec![order]
    } else {
        let mut gs = Vec::with_capacity(bins);
        let total = order.len();
        let mut start = 0usize;
        for b in 0..bins {
            let end = if b + 1 == bins { total } else { (total * (b + 1)) / bins };
            if end > start {
                gs.push(order[start..end].to_vec());
            }
            start = end;
        }
        gs
    };
    let total = members.len() as f64;
    for group in groups {
        let prob = group.len() as f64 / total;
        let price = group.iter().map(|&k| stopped[k][level]).sum::<f64>() / group.len() as f64;
        let child = tree.add_child(node, prob, price);
        split_node(tree, child, &group, level + 1, depth, stopped, bins)?;
    }
    Ok(())
}

/// Seeded random tree with at most `levels` levels below the root and
/// between 1 and `max_children` children per node; prices move on a coarse
/// lattice so exact rational arithmetic applies.
pub fn random_tree(rng: &mut impl rand::Rng, levels: usize, max_children: usize) -> ScenarioTree {
    let mut tree = ScenarioTree::new((rng.gen_range(-20..=20) as f64) / 10.0);
    let mut frontier = vec![0usize];
    for _ in 0..levels {
        let mut next = Vec::new();
        for node in frontier {
            let k = rng.gen_range(1..=max_children);
            // probabilities on a 1/16 lattice, strictly positive
            let mut raw: Vec<f64> = (0..k).map(|_| rng.gen_range(1..=8) as f64).collect();
            let s: f64 = raw.iter().sum();
            for r in raw.iter_mut() {
                *r /= s;
            }
            for j in 0..k {
                let parent_price = tree.node(node).price;
                let shift = (rng.gen_range(-8..=8) as f64) / 10.0;
                let child = tree.add_child(node, raw[j], parent_price + shift);
                next.push(child);
            }
        }
        frontier = next;
    }
    tree
}
