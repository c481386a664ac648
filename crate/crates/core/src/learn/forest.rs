//! Random forest of CART classification trees (Gini impurity).

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::tree::{midpoint, presort, Node, Tree};
use super::FeatureTable;
use crate::error::{Error, Result};
use crate::par;
use crate::rng::stream;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mtry {
    /// floor(sqrt(p)), at least 1.
    Sqrt,
    All,
    Count(usize),
}

impl Mtry {
    pub fn resolve(self, p: usize) -> usize {
        match self {
            Mtry::Sqrt => ((p as f64).sqrt().floor() as usize).max(1),
            Mtry::All => p,
            Mtry::Count(m) => m.min(p),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestParams {
    pub n_trees: usize,
    /// `None` grows until leaves are pure or unsplittable.
    pub max_depth: Option<usize>,
    pub mtry: Mtry,
    pub bootstrap: bool,
    pub min_samples_split: usize,
}

impl Default for ForestParams {
    fn default() -> Self {
        Self {
            n_trees: 100,
            max_depth: None,
            mtry: Mtry::Sqrt,
            bootstrap: true,
            min_samples_split: 2,
        }
    }
}

impl ForestParams {
    pub fn validate(&self) -> Result<()> {
        if self.n_trees == 0 {
            return Err(Error::InvalidArgument("n_trees must be at least 1".into()));
        }
        if self.max_depth == Some(0) {
            return Err(Error::InvalidArgument(
                "max_depth must be at least 1".into(),
            ));
        }
        if self.mtry == Mtry::Count(0) {
            return Err(Error::InvalidArgument("mtry must be at least 1".into()));
        }
        if self.min_samples_split < 2 {
            return Err(Error::InvalidArgument(
                "min_samples_split must be at least 2".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestState {
    /// Leaf values are the positive-class fraction of the node's samples.
    pub trees: Vec<Tree>,
}

impl ForestState {
    /// Fraction of trees voting 1.
    pub fn probability(&self, x: &[f64]) -> f64 {
        let votes = self.trees.iter().filter(|t| t.predict(x) >= 0.5).count();
        votes as f64 / self.trees.len() as f64
    }
}

pub fn train_forest(table: &FeatureTable, params: &ForestParams, seed: u64) -> Result<ForestState> {
    params.validate()?;
    if table.n_rows() == 0 || table.n_features() == 0 {
        return Err(Error::InvalidArgument(
            "forest needs at least one row and one feature".into(),
        ));
    }
    let sorted = presort(&table.rows, table.n_features());
    let ids: Vec<u64> = (0..params.n_trees as u64).collect();
    let trees = par::map_indexed(&ids, |_, &t| grow_tree(table, &sorted, params, seed, t));
    Ok(ForestState { trees })
}

struct Grower<'a> {
    table: &'a FeatureTable,
    sorted: &'a [Vec<usize>],
    /// Bootstrap multiplicity of every row.
    weight: Vec<u32>,
    in_node: Vec<bool>,
    params: &'a ForestParams,
    mtry: usize,
    nodes: Vec<Node>,
}

struct Split {
    feature: usize,
    threshold: f64,
    score: f64,
}

fn grow_tree(
    table: &FeatureTable,
    sorted: &[Vec<usize>],
    params: &ForestParams,
    seed: u64,
    t: u64,
) -> Tree {
    let mut rng = stream(seed, &[t]);
    let n = table.n_rows();
    let mut weight = vec![0u32; n];
    if params.bootstrap {
        for _ in 0..n {
            weight[rng.random_range(0..n)] += 1;
        }
    } else {
        weight.fill(1);
    }
    let rows: Vec<usize> = (0..n).filter(|&i| weight[i] > 0).collect();
    let mut g = Grower {
        table,
        sorted,
        weight,
        in_node: vec![false; n],
        params,
        mtry: params.mtry.resolve(table.n_features()),
        nodes: Vec::new(),
    };
    g.build(rows, 0, &mut rng);
    Tree { nodes: g.nodes }
}

impl Grower<'_> {
    fn counts(&self, rows: &[usize]) -> [f64; 2] {
        let mut c = [0.0; 2];
        for &r in rows {
            c[self.table.labels[r] as usize] += self.weight[r] as f64;
        }
        c
    }

    fn build(&mut self, rows: Vec<usize>, depth: usize, rng: &mut impl Rng) -> usize {
        let id = self.nodes.len();
        let c = self.counts(&rows);
        let total = c[0] + c[1];
        self.nodes.push(Node::Leaf {
            value: c[1] / total,
        });
        let stop = c[0] == 0.0
            || c[1] == 0.0
            || total < self.params.min_samples_split as f64
            || self.params.max_depth.is_some_and(|d| depth >= d);
        if stop {
            return id;
        }
        let Some(split) = self.find_split(&rows, c, rng) else {
            return id;
        };
        let (l, r): (Vec<usize>, Vec<usize>) = rows
            .into_iter()
            .partition(|&i| self.table.rows[i][split.feature] <= split.threshold);
        let left = self.build(l, depth + 1, rng);
        let right = self.build(r, depth + 1, rng);
        self.nodes[id] = Node::Split {
            feature: split.feature,
            threshold: split.threshold,
            left,
            right,
        };
        id
    }

    /// Draws `mtry` candidate features; if none of them can split the node,
    /// keeps drawing from the remaining features one at a time.
    fn find_split(&mut self, rows: &[usize], c: [f64; 2], rng: &mut impl Rng) -> Option<Split> {
        let p = self.table.n_features();
        let mut order: Vec<usize> = (0..p).collect();
        order.shuffle(rng);
        for &r in rows {
            self.in_node[r] = true;
        }
        let mut best: Option<Split> = None;
        let mut first = order[..self.mtry].to_vec();
        first.sort_unstable();
        for f in first {
            self.consider(f, c, &mut best);
        }
        for &f in &order[self.mtry..] {
            if best.is_some() {
                break;
            }
            self.consider(f, c, &mut best);
        }
        for &r in rows {
            self.in_node[r] = false;
        }
        best
    }

    /// Scores by weighted child Gini (lower is better); candidates must be
    /// strictly better to replace the incumbent, so ties keep the lower
    /// feature index and lower threshold.
    fn consider(&self, f: usize, c: [f64; 2], best: &mut Option<Split>) {
        let x = |i: usize| self.table.rows[i][f];
        let total = c[0] + c[1];
        let mut left = [0.0; 2];
        let mut prev: Option<usize> = None;
        for &i in &self.sorted[f] {
            if !self.in_node[i] {
                continue;
            }
            if let Some(p) = prev {
                if x(i) > x(p) {
                    let nl = left[0] + left[1];
                    let nr = total - nl;
                    let right = [c[0] - left[0], c[1] - left[1]];
                    let score = nl - (left[0] * left[0] + left[1] * left[1]) / nl + nr
                        - (right[0] * right[0] + right[1] * right[1]) / nr;
                    if best.as_ref().is_none_or(|b| score < b.score - 1e-12) {
                        *best = Some(Split {
                            feature: f,
                            threshold: midpoint(x(p), x(i)),
                            score,
                        });
                    }
                }
            }
            left[self.table.labels[i] as usize] += self.weight[i] as f64;
            prev = Some(i);
        }
    }
}
