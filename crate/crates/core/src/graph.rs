//! Weighted graphs with self-loops and their loopy Laplacians.
//!
//! A [`WeightedGraph`] stores the symmetric nonnegative adjacency matrix `A`
//! with self-loop weights on the diagonal. Its loopy Laplacian is
//! `Q = L + diag(A_ii)` where `L = diag(A·1) - A` is the ordinary Laplacian of
//! the off-diagonal part. Row `i` of `Q` sums to the self-loop weight `A_ii`.

use std::collections::VecDeque;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::{row_sums, symmetrize};
use crate::tol;

/// Symmetric nonnegative edge and self-loop weights on `n` nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedGraph {
    weights: DMatrix<f64>,
}

impl WeightedGraph {
    pub fn new(weights: DMatrix<f64>) -> Result<Self> {
        let n = weights.nrows();
        if n == 0 || weights.ncols() != n {
            return Err(Error::Validation(format!(
                "weight matrix must be square and non-empty, got {}x{}",
                weights.nrows(),
                weights.ncols()
            )));
        }
        for i in 0..n {
            for j in 0..n {
                let w = weights[(i, j)];
                if !w.is_finite() {
                    return Err(Error::Validation(format!(
                        "weight ({},{}) is not finite",
                        i + 1,
                        j + 1
                    )));
                }
                if w < 0.0 {
                    return Err(Error::Validation(format!(
                        "weight ({},{}) = {w} is negative",
                        i + 1,
                        j + 1
                    )));
                }
                if j > i && (w - weights[(j, i)]).abs() > tol::SYM {
                    return Err(Error::Validation(format!(
                        "weights ({},{}) = {w} and ({},{}) = {} differ",
                        i + 1,
                        j + 1,
                        j + 1,
                        i + 1,
                        weights[(j, i)]
                    )));
                }
            }
        }
        Ok(WeightedGraph { weights })
    }

    /// Builds a graph from 0-based edge and loop lists. Repeated pairs are
    /// rejected.
    pub fn from_edges(n: usize, edges: &[(usize, usize, f64)], loops: &[(usize, f64)]) -> Result<Self> {
        if n == 0 {
            return Err(Error::Validation("graph must have at least one node".into()));
        }
        let mut w = DMatrix::zeros(n, n);
        let mut seen = DMatrix::from_element(n, n, false);
        for &(i, j, weight) in edges {
            if i >= n || j >= n {
                return Err(Error::Validation(format!(
                    "edge ({},{}) references a node outside 1..={n}",
                    i + 1,
                    j + 1
                )));
            }
            if i == j {
                return Err(Error::Validation(format!(
                    "edge ({},{}) joins a node to itself; use a self-loop",
                    i + 1,
                    j + 1
                )));
            }
            if seen[(i, j)] {
                return Err(Error::Validation(format!("duplicate edge ({},{})", i.min(j) + 1, i.max(j) + 1)));
            }
            seen[(i, j)] = true;
            seen[(j, i)] = true;
            w[(i, j)] = weight;
            w[(j, i)] = weight;
        }
        for &(i, weight) in loops {
            if i >= n {
                return Err(Error::Validation(format!(
                    "self-loop at node {} outside 1..={n}",
                    i + 1
                )));
            }
            if seen[(i, i)] {
                return Err(Error::Validation(format!("duplicate self-loop at node {}", i + 1)));
            }
            seen[(i, i)] = true;
            w[(i, i)] = weight;
        }
        WeightedGraph::new(w)
    }

    pub fn n(&self) -> usize {
        self.weights.nrows()
    }

    pub fn weights(&self) -> &DMatrix<f64> {
        &self.weights
    }

    pub fn weight(&self, i: usize, j: usize) -> f64 {
        self.weights[(i, j)]
    }

    pub fn self_loop(&self, i: usize) -> f64 {
        self.weights[(i, i)]
    }

    /// Edges `(i, j, w)` with `i < j` and `w > tol::EDGE`.
    pub fn edges(&self) -> Vec<(usize, usize, f64)> {
        let n = self.n();
        let mut out = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                let w = self.weights[(i, j)];
                if w > tol::EDGE {
                    out.push((i, j, w));
                }
            }
        }
        out
    }

    /// Self-loops `(i, w)` with `w > tol::EDGE`.
    pub fn loops(&self) -> Vec<(usize, f64)> {
        (0..self.n())
            .map(|i| (i, self.weights[(i, i)]))
            .filter(|&(_, w)| w > tol::EDGE)
            .collect()
    }
}

/// Whether a loopy Laplacian carries any self-loop.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize)]
pub enum LaplacianClass {
    LoopLess,
    StrictlyLoopy,
}

/// Symmetric matrix with nonpositive off-diagonal entries and nonnegative
/// row sums.
#[derive(Debug, Clone, PartialEq)]
pub struct LoopyLaplacian {
    entries: DMatrix<f64>,
    class: LaplacianClass,
}

impl LoopyLaplacian {
    /// Validates a user-supplied matrix at [`tol::SYM`].
    pub fn new(entries: DMatrix<f64>) -> Result<Self> {
        Self::validate(entries, tol::SYM)
    }

    /// Accepts a matrix produced by floating-point reduction: symmetrizes,
    /// snaps off-diagonal entries in `(0, tol::EDGE]` to zero and validates
    /// the rest at [`tol::EDGE`].
    pub fn from_computed(entries: DMatrix<f64>) -> Result<Self> {
        let mut m = symmetrize(&entries);
        let n = m.nrows();
        for i in 0..n {
            for j in 0..n {
                if i != j && m[(i, j)] > 0.0 && m[(i, j)] <= tol::EDGE {
                    m[(i, j)] = 0.0;
                }
            }
        }
        Self::validate(m, tol::EDGE).map_err(|e| match e {
            Error::Validation(msg) => Error::InvariantBreach(msg),
            other => other,
        })
    }

    fn validate(entries: DMatrix<f64>, tolerance: f64) -> Result<Self> {
        let n = entries.nrows();
        if n == 0 || entries.ncols() != n {
            return Err(Error::Validation(format!(
                "Laplacian must be square and non-empty, got {}x{}",
                entries.nrows(),
                entries.ncols()
            )));
        }
        for i in 0..n {
            for j in 0..n {
                let v = entries[(i, j)];
                if !v.is_finite() {
                    return Err(Error::Validation(format!("entry ({},{}) is not finite", i + 1, j + 1)));
                }
                if i != j && v > tolerance {
                    return Err(Error::Validation(format!(
                        "off-diagonal entry ({},{}) = {v} is positive",
                        i + 1,
                        j + 1
                    )));
                }
                if j > i && (v - entries[(j, i)]).abs() > tolerance {
                    return Err(Error::Validation(format!(
                        "entries ({},{}) and ({},{}) are not symmetric",
                        i + 1,
                        j + 1,
                        j + 1,
                        i + 1
                    )));
                }
            }
        }
        let sums = row_sums(&entries);
        if let Some(i) = (0..n).find(|&i| sums[i] < -tolerance) {
            return Err(Error::Validation(format!(
                "row {} sums to {} < 0",
                i + 1,
                sums[i]
            )));
        }
        let class = classify(&sums);
        Ok(LoopyLaplacian { entries, class })
    }

    pub fn n(&self) -> usize {
        self.entries.nrows()
    }

    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn into_entries(self) -> DMatrix<f64> {
        self.entries
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[(i, j)]
    }

    pub fn class(&self) -> LaplacianClass {
        self.class
    }

    pub fn is_loop_less(&self) -> bool {
        self.class == LaplacianClass::LoopLess
    }

    pub fn is_strictly_loopy(&self) -> bool {
        self.class == LaplacianClass::StrictlyLoopy
    }

    /// Self-loop weights `A_ii`, i.e. the row sums (round-off below zero is
    /// clamped).
    pub fn self_loops(&self) -> DVector<f64> {
        row_sums(&self.entries).map(|v| v.max(0.0))
    }

    /// Whether `A_ij > tol::EDGE` for distinct `i`, `j`.
    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        i != j && -self.entries[(i, j)] > tol::EDGE
    }
}

fn classify(row_sums: &DVector<f64>) -> LaplacianClass {
    if row_sums.iter().any(|&s| s > tol::EDGE) {
        LaplacianClass::StrictlyLoopy
    } else {
        LaplacianClass::LoopLess
    }
}

/// `Q = diag(A·1) - A + diag(A_ii)`: off-diagonals `-A_ij`, row sums `A_ii`.
pub fn laplacian_from_graph(g: &WeightedGraph) -> LoopyLaplacian {
    let n = g.n();
    let a = g.weights();
    let mut q = -a.clone();
    for i in 0..n {
        let off: f64 = (0..n).filter(|&j| j != i).map(|j| a[(i, j)]).sum();
        q[(i, i)] = off + a[(i, i)];
    }
    let class = if (0..n).any(|i| a[(i, i)] > tol::EDGE) {
        LaplacianClass::StrictlyLoopy
    } else {
        LaplacianClass::LoopLess
    };
    LoopyLaplacian { entries: q, class }
}

/// Recovers `A` from `Q`: `A_ij = -Q_ij` off the diagonal and `A_ii` = row sum.
pub fn graph_from_laplacian(q: &LoopyLaplacian) -> WeightedGraph {
    let n = q.n();
    let loops = q.self_loops();
    let weights = DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            loops[i]
        } else {
            (-q.get(i, j)).max(0.0)
        }
    });
    WeightedGraph { weights }
}

/// `L = Q - diag(A_ii)`.
pub fn loopless_part(q: &LoopyLaplacian) -> LoopyLaplacian {
    let n = q.n();
    let mut l = q.entries().clone();
    for i in 0..n {
        let off: f64 = (0..n).filter(|&j| j != i).map(|j| l[(i, j)]).sum();
        l[(i, i)] = -off;
    }
    LoopyLaplacian {
        entries: l,
        class: LaplacianClass::LoopLess,
    }
}

/// Connectivity of the graph with an edge wherever `Q_ij < -tol::EDGE`.
/// A single node counts as connected.
pub fn is_irreducible(q: &LoopyLaplacian) -> bool {
    let nodes: Vec<usize> = (0..q.n()).collect();
    components(q, &nodes).len() <= 1
}

/// Connected components of the subgraph induced on `nodes`, each sorted
/// ascending. Components are ordered by their smallest member.
pub fn components(q: &LoopyLaplacian, nodes: &[usize]) -> Vec<Vec<usize>> {
    let n = q.n();
    let mut member = vec![false; n];
    for &v in nodes {
        member[v] = true;
    }
    let mut visited = vec![false; n];
    let mut out = Vec::new();
    let mut sorted = nodes.to_vec();
    sorted.sort_unstable();
    for &start in &sorted {
        if visited[start] {
            continue;
        }
        visited[start] = true;
        let mut comp = vec![start];
        let mut queue = VecDeque::from([start]);
        while let Some(v) = queue.pop_front() {
            for w in 0..n {
                if member[w] && !visited[w] && q.has_edge(v, w) {
                    visited[w] = true;
                    comp.push(w);
                    queue.push_back(w);
                }
            }
        }
        comp.sort_unstable();
        out.push(comp);
    }
    out
}

/// Result of grounding a loopy Laplacian.
#[derive(Debug, Clone, PartialEq)]
pub struct Augmented {
    /// Loop-less Laplacian of dimension `n + 1`; the ground is the last node.
    pub laplacian: LoopyLaplacian,
    /// Set when the input had no self-loops, leaving the ground isolated.
    pub ground_isolated: bool,
}

/// Adds a grounded node `n` that carries every self-loop as an edge:
/// `[[Q, -a], [-aᵀ, Σ a]]` with `a = (A_ii)`.
pub fn augment(q: &LoopyLaplacian) -> Augmented {
    let aug = augment_quiet(q);
    if aug.ground_isolated {
        log::warn!("augmenting a loop-less Laplacian: the ground node is isolated");
    }
    aug
}

pub(crate) fn augment_quiet(q: &LoopyLaplacian) -> Augmented {
    let n = q.n();
    let loops = q.self_loops();
    let mut m = DMatrix::zeros(n + 1, n + 1);
    m.view_mut((0, 0), (n, n)).copy_from(q.entries());
    for i in 0..n {
        m[(i, n)] = -loops[i];
        m[(n, i)] = -loops[i];
    }
    m[(n, n)] = loops.sum();
    let ground_isolated = q.is_loop_less();
    Augmented {
        laplacian: LoopyLaplacian {
            entries: m,
            class: LaplacianClass::LoopLess,
        },
        ground_isolated,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dmatrix;

    fn lap(m: DMatrix<f64>) -> LoopyLaplacian {
        LoopyLaplacian::new(m).unwrap()
    }

    #[test]
    fn path_laplacian() {
        let g = WeightedGraph::from_edges(3, &[(0, 1, 1.0), (1, 2, 1.0)], &[]).unwrap();
        let q = laplacian_from_graph(&g);
        assert_eq!(q.entries(), &dmatrix![1.0, -1.0, 0.0; -1.0, 2.0, -1.0; 0.0, -1.0, 1.0]);
        assert!(q.is_loop_less());
    }

    #[test]
    fn loop_on_second_node() {
        let g = WeightedGraph::from_edges(2, &[(0, 1, 1.0)], &[(1, 1.0)]).unwrap();
        let q = laplacian_from_graph(&g);
        assert_eq!(q.entries(), &dmatrix![1.0, -1.0; -1.0, 2.0]);
        assert!(q.is_strictly_loopy());

        let back = graph_from_laplacian(&q);
        assert_eq!(back.weight(0, 1), 1.0);
        assert_eq!(back.self_loop(0), 0.0);
        assert_eq!(back.self_loop(1), 1.0);
    }

    #[test]
    fn single_node() {
        let g = WeightedGraph::from_edges(1, &[], &[]).unwrap();
        let q = laplacian_from_graph(&g);
        assert_eq!(q.entries(), &dmatrix![0.0]);
        assert!(is_irreducible(&q));
        assert_eq!(graph_from_laplacian(&q).weights(), &dmatrix![0.0]);
    }

    #[test]
    fn single_edge_from_laplacian() {
        let g = graph_from_laplacian(&lap(dmatrix![2.0, -2.0; -2.0, 2.0]));
        assert_eq!(g.weights(), &dmatrix![0.0, 2.0; 2.0, 0.0]);
    }

    #[test]
    fn validation_names_entry() {
        let err = WeightedGraph::new(dmatrix![0.0, 1.0; 2.0, 0.0]).unwrap_err();
        assert!(err.to_string().contains("(1,2)"), "{err}");
        let err = WeightedGraph::new(dmatrix![0.0, -1.0; -1.0, 0.0]).unwrap_err();
        assert!(err.to_string().contains("(1,2)"), "{err}");
        let err = LoopyLaplacian::new(dmatrix![1.0, 1.0; 1.0, 1.0]).unwrap_err();
        assert!(matches!(err, Error::Validation(_)));
        let err = LoopyLaplacian::new(dmatrix![1.0, -2.0; -2.0, 2.0]).unwrap_err();
        assert!(err.to_string().contains("row 1"), "{err}");
    }

    #[test]
    fn duplicate_edges_rejected() {
        assert!(WeightedGraph::from_edges(3, &[(0, 1, 1.0), (1, 0, 2.0)], &[]).is_err());
        assert!(WeightedGraph::from_edges(3, &[], &[(0, 1.0), (0, 1.0)]).is_err());
        assert!(WeightedGraph::from_edges(3, &[(0, 0, 1.0)], &[]).is_err());
    }

    #[test]
    fn loopless_part_drops_loops() {
        let l = loopless_part(&lap(dmatrix![1.0, -1.0; -1.0, 2.0]));
        assert_eq!(l.entries(), &dmatrix![1.0, -1.0; -1.0, 1.0]);
        assert!(l.is_loop_less());
        let path = lap(dmatrix![1.0, -1.0, 0.0; -1.0, 2.0, -1.0; 0.0, -1.0, 1.0]);
        assert_eq!(loopless_part(&path), path);
        assert_eq!(loopless_part(&lap(dmatrix![3.0])).entries(), &dmatrix![0.0]);
    }

    #[test]
    fn irreducibility() {
        let path = lap(dmatrix![1.0, -1.0, 0.0; -1.0, 2.0, -1.0; 0.0, -1.0, 1.0]);
        assert!(is_irreducible(&path));
        let two_k2 = lap(dmatrix![
            1.0, -1.0, 0.0, 0.0;
            -1.0, 1.0, 0.0, 0.0;
            0.0, 0.0, 1.0, -1.0;
            0.0, 0.0, -1.0, 1.0
        ]);
        assert!(!is_irreducible(&two_k2));
        assert_eq!(components(&two_k2, &[0, 1, 2, 3]), vec![vec![0, 1], vec![2, 3]]);
    }

    #[test]
    fn augment_examples() {
        let a = augment(&lap(dmatrix![1.0, -1.0; -1.0, 2.0]));
        assert!(!a.ground_isolated);
        assert_eq!(
            a.laplacian.entries(),
            &dmatrix![1.0, -1.0, 0.0; -1.0, 2.0, -1.0; 0.0, -1.0, 1.0]
        );
        assert!(is_irreducible(&a.laplacian));

        let a = augment(&lap(dmatrix![1.0, -1.0; -1.0, 1.0]));
        assert!(a.ground_isolated);
        assert_eq!(
            a.laplacian.entries(),
            &dmatrix![1.0, -1.0, 0.0; -1.0, 1.0, 0.0; 0.0, 0.0, 0.0]
        );

        let a = augment(&lap(dmatrix![2.5]));
        assert_eq!(a.laplacian.entries(), &dmatrix![2.5, -2.5; -2.5, 2.5]);
    }

    #[test]
    fn computed_matrices_are_cleaned() {
        let q = LoopyLaplacian::from_computed(dmatrix![1.0, 1e-12; -1e-12, 1.0]).unwrap();
        assert_eq!(q.get(0, 1), 0.0);
        assert!(LoopyLaplacian::from_computed(dmatrix![1.0, 1e-3; 1e-3, 1.0]).is_err());
    }
}
