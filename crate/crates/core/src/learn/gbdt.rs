//! Logistic-loss gradient boosting with leaf-wise regression trees.

use serde::{Deserialize, Serialize};

use super::tree::{midpoint, presort, Node, Tree};
use super::FeatureTable;
use crate::error::{Error, Result};

const GAIN_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GbdtParams {
    pub learning_rate: f64,
    pub n_trees: usize,
    pub max_leaves: usize,
    pub min_samples_leaf: usize,
    pub min_sum_hessian: f64,
    pub lambda_l2: f64,
}

impl Default for GbdtParams {
    fn default() -> Self {
        Self {
            learning_rate: 0.01,
            n_trees: 1000,
            max_leaves: 31,
            min_samples_leaf: 1,
            min_sum_hessian: 1e-5,
            lambda_l2: 0.0,
        }
    }
}

impl GbdtParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "learning_rate must be finite and non-negative, got {}",
                self.learning_rate
            )));
        }
        if self.max_leaves < 2 {
            return Err(Error::InvalidArgument(
                "max_leaves must be at least 2".into(),
            ));
        }
        if self.min_samples_leaf == 0 {
            return Err(Error::InvalidArgument(
                "min_samples_leaf must be at least 1".into(),
            ));
        }
        if !(self.min_sum_hessian >= 0.0) || !(self.lambda_l2 >= 0.0) {
            return Err(Error::InvalidArgument(
                "min_sum_hessian and lambda_l2 must be non-negative".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GbdtState {
    /// Log-odds of the training prior.
    pub init_score: f64,
    /// Leaf values already include the learning rate.
    pub trees: Vec<Tree>,
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

impl GbdtState {
    pub fn raw_score(&self, x: &[f64]) -> f64 {
        self.init_score + self.trees.iter().map(|t| t.predict(x)).sum::<f64>()
    }

    pub fn probability(&self, x: &[f64]) -> f64 {
        sigmoid(self.raw_score(x))
    }
}

pub fn train_gbdt(table: &FeatureTable, params: &GbdtParams) -> Result<GbdtState> {
    train_gbdt_traced(table, params).map(|(s, _)| s)
}

/// Also returns the mean training log-loss after each tree.
pub fn train_gbdt_traced(
    table: &FeatureTable,
    params: &GbdtParams,
) -> Result<(GbdtState, Vec<f64>)> {
    params.validate()?;
    table.require_both_classes("gbdt training")?;
    let n = table.n_rows();
    let y = table.label_values();
    let p = y.iter().sum::<f64>() / n as f64;
    let init_score = (p / (1.0 - p)).ln();
    let sorted = presort(&table.rows, table.n_features());
    let mut raw = vec![init_score; n];
    let mut trees = Vec::with_capacity(params.n_trees);
    let mut trace = Vec::with_capacity(params.n_trees);
    let mut grad = vec![0.0; n];
    let mut hess = vec![0.0; n];
    for _ in 0..params.n_trees {
        for i in 0..n {
            let pr = sigmoid(raw[i]);
            grad[i] = pr - y[i];
            hess[i] = pr * (1.0 - pr);
        }
        let tree = grow(table, &sorted, &grad, &hess, params);
        for (i, r) in raw.iter_mut().enumerate() {
            *r += tree.predict(&table.rows[i]);
        }
        trees.push(tree);
        trace.push(log_loss(&y, &raw));
    }
    Ok((GbdtState { init_score, trees }, trace))
}

pub fn log_loss(y: &[f64], raw: &[f64]) -> f64 {
    // log(1 + e^z) - y z, computed stably.
    let sum: f64 = y
        .iter()
        .zip(raw)
        .map(|(&t, &z)| z.max(0.0) + (-z.abs()).exp().ln_1p() - t * z)
        .sum();
    sum / y.len() as f64
}

struct Candidate {
    feature: usize,
    threshold: f64,
    gain: f64,
}

struct Leaf {
    rows: Vec<usize>,
    node: usize,
    best: Option<Candidate>,
}

fn grow(
    table: &FeatureTable,
    sorted: &[Vec<usize>],
    grad: &[f64],
    hess: &[f64],
    params: &GbdtParams,
) -> Tree {
    let n = table.n_rows();
    let mut membership = vec![usize::MAX; n];
    let mut nodes = vec![Node::Leaf { value: 0.0 }];
    let mut leaves = vec![Leaf {
        rows: (0..n).collect(),
        node: 0,
        best: None,
    }];
    leaves[0].best = best_split(
        table,
        sorted,
        grad,
        hess,
        &leaves[0].rows,
        0,
        &mut membership,
        params,
    );
    while leaves.len() < params.max_leaves {
        let mut pick: Option<usize> = None;
        for (li, leaf) in leaves.iter().enumerate() {
            if let Some(c) = &leaf.best {
                if pick.is_none_or(|p| c.gain > leaves[p].best.as_ref().unwrap().gain) {
                    pick = Some(li);
                }
            }
        }
        let Some(li) = pick else { break };
        let leaf = leaves.swap_remove(li);
        let c = leaf.best.unwrap();
        let (l, r): (Vec<usize>, Vec<usize>) = leaf
            .rows
            .iter()
            .partition(|&&i| table.rows[i][c.feature] <= c.threshold);
        let (ln, rn) = (nodes.len(), nodes.len() + 1);
        nodes.push(Node::Leaf { value: 0.0 });
        nodes.push(Node::Leaf { value: 0.0 });
        nodes[leaf.node] = Node::Split {
            feature: c.feature,
            threshold: c.threshold,
            left: ln,
            right: rn,
        };
        // Keep leaves ordered by node id so gain ties resolve to the older leaf.
        for (rows, node) in [(l, ln), (r, rn)] {
            let best = best_split(
                table,
                sorted,
                grad,
                hess,
                &rows,
                node,
                &mut membership,
                params,
            );
            leaves.push(Leaf { rows, node, best });
        }
        leaves.sort_by_key(|l| l.node);
    }
    for leaf in &leaves {
        let g: f64 = leaf.rows.iter().map(|&i| grad[i]).sum();
        let h: f64 = leaf.rows.iter().map(|&i| hess[i]).sum();
        let value = if h + params.lambda_l2 > 0.0 {
            -params.learning_rate * g / (h + params.lambda_l2)
        } else {
            0.0
        };
        nodes[leaf.node] = Node::Leaf { value };
    }
    Tree { nodes }
}

#[allow(clippy::too_many_arguments)]
fn best_split(
    table: &FeatureTable,
    sorted: &[Vec<usize>],
    grad: &[f64],
    hess: &[f64],
    rows: &[usize],
    node: usize,
    membership: &mut [usize],
    params: &GbdtParams,
) -> Option<Candidate> {
    if rows.len() < 2 * params.min_samples_leaf {
        return None;
    }
    for &i in rows {
        membership[i] = node;
    }
    let lambda = params.lambda_l2;
    let g_tot: f64 = rows.iter().map(|&i| grad[i]).sum();
    let h_tot: f64 = rows.iter().map(|&i| hess[i]).sum();
    let parent = g_tot * g_tot / (h_tot + lambda);
    let mut best: Option<Candidate> = None;
    for (f, order) in sorted.iter().enumerate() {
        let (mut gl, mut hl, mut nl) = (0.0, 0.0, 0usize);
        let mut prev: Option<usize> = None;
        for &i in order {
            if membership[i] != node {
                continue;
            }
            if let Some(p) = prev {
                let (a, b) = (table.rows[p][f], table.rows[i][f]);
                let nr = rows.len() - nl;
                let (gr, hr) = (g_tot - gl, h_tot - hl);
                if b > a
                    && nl >= params.min_samples_leaf
                    && nr >= params.min_samples_leaf
                    && hl >= params.min_sum_hessian
                    && hr >= params.min_sum_hessian
                {
                    let children = gl * gl / (hl + lambda) + gr * gr / (hr + lambda);
                    let gain = children - parent;
                    // Splits of gradient-constant leaves have zero true gain; only rounding remains.
                    if gain > GAIN_TOL * children && best.as_ref().is_none_or(|c| gain > c.gain) {
                        best = Some(Candidate {
                            feature: f,
                            threshold: midpoint(a, b),
                            gain,
                        });
                    }
                }
            }
            gl += grad[i];
            hl += hess[i];
            nl += 1;
            prev = Some(i);
        }
    }
    best
}
