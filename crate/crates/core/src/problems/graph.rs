use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::{IsingPolynomial, Sense};
use crate::error::{Error, Result};
use crate::rng::stream;

/// Simple undirected graph; edges stored as sorted `(i, j)` with `i < j`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Graph {
    pub n: usize,
    pub edges: Vec<(usize, usize)>,
}

impl Graph {
    pub fn new(n: usize, edges: Vec<(usize, usize)>) -> Result<Self> {
        let mut seen = BTreeSet::new();
        let mut out = Vec::with_capacity(edges.len());
        for (a, b) in edges {
            if a >= n || b >= n {
                return Err(Error::QubitOutOfRange { index: a.max(b), n });
            }
            if a == b {
                return Err(Error::invalid("edges", format!("self-loop at {a}")));
            }
            let e = (a.min(b), a.max(b));
            if !seen.insert(e) {
                return Err(Error::invalid("edges", format!("duplicate edge {e:?}")));
            }
            out.push(e);
        }
        Ok(Self { n, edges: out })
    }

    pub fn neighbors(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.n];
        for &(a, b) in &self.edges {
            adj[a].push(b);
            adj[b].push(a);
        }
        for list in &mut adj {
            list.sort_unstable();
        }
        adj
    }

    pub fn degrees(&self) -> Vec<usize> {
        let mut d = vec![0; self.n];
        for &(a, b) in &self.edges {
            d[a] += 1;
            d[b] += 1;
        }
        d
    }

    /// `cut(x) = Σ_{(i,j)∈E} (1 − z_i z_j) / 2`, to be maximized.
    pub fn maxcut_polynomial(&self) -> Result<IsingPolynomial> {
        let mut p = IsingPolynomial::new(self.n, Sense::Maximize)?;
        p.set_offset(self.edges.len() as f64 / 2.0)?;
        for &(a, b) in &self.edges {
            p.add_quadratic(a, b, -0.5)?;
        }
        Ok(p)
    }

    pub fn cut_value(&self, bits: u128) -> usize {
        self.edges
            .iter()
            .filter(|&&(a, b)| ((bits >> a) ^ (bits >> b)) & 1 == 1)
            .count()
    }
}

const MAX_PAIRING_ATTEMPTS: usize = 100_000;

/// Random simple 3-regular graph from the pairing model, rejecting pairings
/// with self-loops or repeated edges.
pub fn maxcut_3regular(nodes: usize, seed: u64) -> Result<(Graph, IsingPolynomial)> {
    if nodes < 4 || nodes % 2 == 1 {
        return Err(Error::invalid(
            "nodes",
            format!("need an even count of at least 4, got {nodes}"),
        ));
    }
    let mut rng = stream(seed, 0);
    let mut stubs: Vec<usize> = (0..nodes).flat_map(|v| [v, v, v]).collect();
    for _ in 0..MAX_PAIRING_ATTEMPTS {
        stubs.shuffle(&mut rng);
        let mut edges = BTreeSet::new();
        let simple = stubs.chunks_exact(2).all(|pair| {
            let (a, b) = (pair[0].min(pair[1]), pair[0].max(pair[1]));
            a != b && edges.insert((a, b))
        });
        if simple {
            let graph = Graph::new(nodes, edges.into_iter().collect())?;
            let poly = graph.maxcut_polynomial()?;
            return Ok((graph, poly));
        }
    }
    Err(Error::invalid("nodes", "no simple pairing found"))
}
