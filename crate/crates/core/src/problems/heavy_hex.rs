use std::collections::VecDeque;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{Graph, IsingPolynomial, Sense};
use crate::error::{Error, Result};
use crate::rng::stream;

/// Heavy-hex lattice size. A patch has `rows` rows of `4·cells + 3` columns,
/// joined by bridge qubits every fourth column; row ends of degree one are dropped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum HeavyHexShape {
    /// 7 rows, 3 cells: 127 vertices, 144 edges.
    Eagle127,
    Patch {
        rows: usize,
        cells: usize,
    },
}

impl HeavyHexShape {
    fn dims(&self) -> (usize, usize) {
        match *self {
            HeavyHexShape::Eagle127 => (7, 3),
            HeavyHexShape::Patch { rows, cells } => (rows, cells),
        }
    }
}

impl FromStr for HeavyHexShape {
    type Err = Error;

    /// `"127"` or `"<rows>x<cells>"`.
    fn from_str(s: &str) -> Result<Self> {
        if s == "127" {
            return Ok(HeavyHexShape::Eagle127);
        }
        let bad = || {
            Error::invalid(
                "lattice",
                format!("expected \"127\" or \"<rows>x<cells>\", got {s:?}"),
            )
        };
        let (r, c) = s.split_once('x').ok_or_else(bad)?;
        Ok(HeavyHexShape::Patch {
            rows: r.parse().map_err(|_| bad())?,
            cells: c.parse().map_err(|_| bad())?,
        })
    }
}

impl fmt::Display for HeavyHexShape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            HeavyHexShape::Eagle127 => write!(f, "127"),
            HeavyHexShape::Patch { rows, cells } => write!(f, "{rows}x{cells}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeavyHexLattice {
    pub shape: HeavyHexShape,
    pub graph: Graph,
    /// Side of the bipartition with degree at most 2; parities are computed onto these.
    pub v2: Vec<usize>,
    pub v3: Vec<usize>,
    /// Degree-2 members of `v2` with their neighbors, `(l, n1, n2)` with `n1 < n2`.
    pub w: Vec<(usize, usize, usize)>,
    /// Color of `graph.edges[i]`, in `0..3`.
    pub edge_colors: Vec<usize>,
}

impl HeavyHexLattice {
    // rows and columns index a grid that is written while it is read
    #[allow(clippy::needless_range_loop)]
    pub fn new(shape: HeavyHexShape) -> Result<Self> {
        let (rows, cells) = shape.dims();
        if rows < 2 || cells < 1 {
            return Err(Error::invalid(
                "lattice",
                format!("need at least 2 rows and 1 cell, got {shape}"),
            ));
        }
        let len = 4 * cells + 3;
        // Bridges between row r and r+1 sit at columns ≡ 0 (r even) or 2 (r odd) mod 4.
        let bridge_cols = |r: usize| -> Vec<usize> { ((r % 2) * 2..len).step_by(4).collect() };
        let bridged = |r: usize, col: usize| {
            (r + 1 < rows && bridge_cols(r).contains(&col))
                || (r > 0 && bridge_cols(r - 1).contains(&col))
        };
        let kept = |r: usize, col: usize| (col != 0 && col != len - 1) || bridged(r, col);

        let mut index = vec![vec![None; len]; rows];
        let mut next = 0usize;
        let mut is_v2 = Vec::new();
        let mut edges = Vec::new();
        let mut pending_bridges: Vec<(usize, usize)> = Vec::new();
        for r in 0..rows {
            for col in 0..len {
                if kept(r, col) {
                    index[r][col] = Some(next);
                    is_v2.push(col % 2 == 1);
                    if col > 0 {
                        if let Some(left) = index[r][col - 1] {
                            edges.push((left, next));
                        }
                    }
                    next += 1;
                }
            }
            // bridges hanging below the previous row connect down to this row
            for (b, col) in pending_bridges.drain(..) {
                edges.push((b, index[r][col].expect("bridged column kept")));
            }
            if r + 1 < rows {
                for col in bridge_cols(r) {
                    let b = next;
                    next += 1;
                    is_v2.push(true);
                    edges.push((index[r][col].expect("bridged column kept"), b));
                    pending_bridges.push((b, col));
                }
            }
        }
        let graph = Graph::new(next, edges)?;
        let neighbors = graph.neighbors();
        let v2: Vec<usize> = (0..next).filter(|&v| is_v2[v]).collect();
        let v3: Vec<usize> = (0..next).filter(|&v| !is_v2[v]).collect();
        let w = v2
            .iter()
            .filter(|&&l| neighbors[l].len() == 2)
            .map(|&l| (l, neighbors[l][0], neighbors[l][1]))
            .collect();
        let edge_colors = bipartite_edge_coloring(&graph)?;
        Ok(Self {
            shape,
            graph,
            v2,
            v3,
            w,
            edge_colors,
        })
    }

    pub fn n(&self) -> usize {
        self.graph.n
    }

    pub fn is_v2(&self, v: usize) -> bool {
        self.v2.binary_search(&v).is_ok()
    }

    pub fn color_count(&self) -> usize {
        self.edge_colors.iter().max().map_or(0, |c| c + 1)
    }

    /// CNOT pairs per color, control on the `v3` endpoint and target on the `v2` endpoint.
    pub fn color_classes(&self) -> Vec<Vec<(usize, usize)>> {
        let mut classes = vec![Vec::new(); self.color_count()];
        for (&(a, b), &c) in self.graph.edges.iter().zip(&self.edge_colors) {
            let pair = if self.is_v2(a) { (b, a) } else { (a, b) };
            classes[c].push(pair);
        }
        classes
    }
}

/// Proper edge coloring of a bipartite graph with exactly max-degree colors,
/// by recoloring alternating paths.
pub fn bipartite_edge_coloring(graph: &Graph) -> Result<Vec<usize>> {
    two_color(graph)?;
    let delta = graph.degrees().into_iter().max().unwrap_or(0);
    let mut at = vec![vec![None::<usize>; delta]; graph.n];
    let mut color = vec![usize::MAX; graph.edges.len()];
    let other = |e: usize, v: usize| {
        let (a, b) = graph.edges[e];
        if a == v {
            b
        } else {
            a
        }
    };
    for (e, &(u, v)) in graph.edges.iter().enumerate() {
        let free = |x: usize, at: &Vec<Vec<Option<usize>>>| {
            at[x]
                .iter()
                .position(Option::is_none)
                .expect("degree bound")
        };
        let a = free(u, &at);
        if at[v][a].is_some() {
            let b = free(v, &at);
            // flip the a/b alternating path starting at v
            let mut path = Vec::new();
            let (mut x, mut c) = (v, a);
            while let Some(f) = at[x][c] {
                path.push(f);
                x = other(f, x);
                c = if c == a { b } else { a };
            }
            for &f in &path {
                let (p, q) = graph.edges[f];
                at[p][color[f]] = None;
                at[q][color[f]] = None;
            }
            for &f in &path {
                let (p, q) = graph.edges[f];
                color[f] = if color[f] == a { b } else { a };
                at[p][color[f]] = Some(f);
                at[q][color[f]] = Some(f);
            }
            debug_assert!(at[u][a].is_none() && at[v][a].is_none());
        }
        color[e] = a;
        at[u][a] = Some(e);
        at[v][a] = Some(e);
    }
    Ok(color)
}

fn two_color(graph: &Graph) -> Result<Vec<bool>> {
    let adj = graph.neighbors();
    let mut side = vec![None; graph.n];
    for start in 0..graph.n {
        if side[start].is_some() {
            continue;
        }
        side[start] = Some(false);
        let mut queue = VecDeque::from([start]);
        while let Some(x) = queue.pop_front() {
            let s = side[x].expect("visited");
            for &y in &adj[x] {
                match side[y] {
                    None => {
                        side[y] = Some(!s);
                        queue.push_back(y);
                    }
                    Some(t) if t == s => return Err(Error::invalid("graph", "not bipartite")),
                    _ => {}
                }
            }
        }
    }
    Ok(side.into_iter().map(|s| s.unwrap_or(false)).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeavyHexInstance {
    pub lattice: HeavyHexLattice,
    pub polynomial: IsingPolynomial,
}

/// Spin glass with iid ±1 coefficients on every vertex, every edge, and one
/// cubic term per degree-2 `v2` vertex. Minimization.
pub fn heavy_hex_instance(shape: HeavyHexShape, seed: u64) -> Result<HeavyHexInstance> {
    let lattice = HeavyHexLattice::new(shape)?;
    let mut rng = stream(seed, 0);
    let mut coin = || if rng.random::<bool>() { 1.0 } else { -1.0 };
    let mut poly = IsingPolynomial::new(lattice.n(), Sense::Minimize)?;
    for v in 0..lattice.n() {
        poly.add_linear(v, coin())?;
    }
    for &(a, b) in &lattice.graph.edges {
        poly.add_quadratic(a, b, coin())?;
    }
    for &(l, a, b) in &lattice.w {
        poly.add_cubic(l, a, b, coin())?;
    }
    Ok(HeavyHexInstance {
        lattice,
        polynomial: poly,
    })
}
