//! Kron reduction: Schur complements of loopy Laplacians.
//!
//! For a boundary set `α` with interior complement `β`, the reduced matrix is
//!
//! ```text
//! Q_red = Q[α,α] - Q[α,β] Q[β,β]⁻¹ Q[β,α]
//! Q_ac  = -Q[α,β] Q[β,β]⁻¹
//! ```
//!
//! `Q_ac` maps interior current injections to equivalent boundary
//! injections, so the boundary network obeys `I_α + Q_ac I_β = Q_red V_α`.
//! Boundary labels are arbitrary: every result keeps an explicit map from
//! reduced position to original node.

use std::collections::BTreeSet;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::graph::{
    augment_quiet, components, graph_from_laplacian, is_irreducible, loopless_part, LoopyLaplacian,
    WeightedGraph,
};
use crate::linalg::{self, select, spd_inverse, symmetrize};
use crate::tol;

/// Split of `0..n` into retained boundary nodes and eliminated interior nodes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Partition {
    n: usize,
    boundary: Vec<usize>,
    interior: Vec<usize>,
}

impl Partition {
    /// `boundary` may come in any order; it is stored sorted. It must hold at
    /// least two nodes and leave at least one interior node.
    pub fn new(n: usize, boundary: &[usize]) -> Result<Self> {
        let set: BTreeSet<usize> = boundary.iter().copied().collect();
        if set.len() != boundary.len() {
            return Err(Error::Validation("boundary contains repeated nodes".into()));
        }
        if let Some(&bad) = set.iter().find(|&&i| i >= n) {
            return Err(Error::Validation(format!(
                "boundary node {} outside 1..={n}",
                bad + 1
            )));
        }
        if set.len() < 2 {
            return Err(Error::Validation("boundary must have at least 2 nodes".into()));
        }
        if set.len() >= n {
            return Err(Error::Validation(
                "boundary must be a proper subset of the nodes".into(),
            ));
        }
        let boundary: Vec<usize> = set.into_iter().collect();
        let interior = (0..n).filter(|i| boundary.binary_search(i).is_err()).collect();
        Ok(Partition {
            n,
            boundary,
            interior,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn boundary(&self) -> &[usize] {
        &self.boundary
    }

    pub fn interior(&self) -> &[usize] {
        &self.interior
    }

    pub fn is_boundary(&self, node: usize) -> bool {
        self.boundary.binary_search(&node).is_ok()
    }

    /// Position of `node` within the interior list.
    pub fn interior_position(&self, node: usize) -> Option<usize> {
        self.interior.binary_search(&node).ok()
    }

    /// Position of `node` within the boundary list.
    pub fn boundary_position(&self, node: usize) -> Option<usize> {
        self.boundary.binary_search(&node).ok()
    }

    fn check(&self, q: &LoopyLaplacian) -> Result<()> {
        if q.n() != self.n {
            return Err(Error::Dimension(format!(
                "partition is for {} nodes, Laplacian has {}",
                self.n,
                q.n()
            )));
        }
        Ok(())
    }
}

/// Outcome of eliminating the interior nodes of a partition.
#[derive(Debug, Clone)]
pub struct KronReduction {
    pub q_red: LoopyLaplacian,
    /// `|α| × |β|` accompanying matrix; columns follow `partition.interior()`.
    pub q_ac: DMatrix<f64>,
    pub a_red: WeightedGraph,
    pub partition: Partition,
    /// Original node index of each reduced position.
    pub permutation: Vec<usize>,
    interior_inverse: Option<DMatrix<f64>>,
}

impl KronReduction {
    fn assemble(
        q_red: DMatrix<f64>,
        q_ac: DMatrix<f64>,
        partition: Partition,
        interior_inverse: Option<DMatrix<f64>>,
    ) -> Result<Self> {
        let q_red = LoopyLaplacian::from_computed(q_red)?;
        if let Some(v) = q_ac.iter().find(|&&v| v < -tol::EDGE) {
            return Err(Error::InvariantBreach(format!(
                "accompanying matrix has negative entry {v}"
            )));
        }
        let a_red = graph_from_laplacian(&q_red);
        let permutation = partition.boundary.clone();
        Ok(KronReduction {
            q_red,
            q_ac,
            a_red,
            partition,
            permutation,
            interior_inverse,
        })
    }

    /// `L_red = Q_red - diag(A_red[i,i])`.
    pub fn l_red(&self) -> LoopyLaplacian {
        loopless_part(&self.q_red)
    }

    /// `Q[β,β]⁻¹`, cached from the one-shot reduction or recomputed from `q`.
    fn interior_inverse(&self, q: &LoopyLaplacian) -> Result<DMatrix<f64>> {
        match &self.interior_inverse {
            Some(inv) => Ok(inv.clone()),
            None => {
                let inner = self.partition.interior();
                spd_inverse(&select(q.entries(), inner, inner))
            }
        }
    }

    /// Rank-one update of `Q_red` after changing the weight of the interior
    /// edge `{i, j}` by `delta`. `q` must be the matrix this reduction came
    /// from; it is only used for the connectivity check and, when the
    /// reduction carries no cached interior factor, to rebuild it.
    pub fn perturb_interior_edge(
        &self,
        q: &LoopyLaplacian,
        i: usize,
        j: usize,
        delta: f64,
    ) -> Result<(LoopyLaplacian, InteriorPerturbation)> {
        let p = &self.partition;
        let (pi, pj) = interior_pair(p, i, j)?;
        check_edge_perturbation(q, i, j, delta)?;

        let inv = self.interior_inverse(q)?;
        let r_int = (inv[(pi, pi)] + inv[(pj, pj)] - 2.0 * inv[(pi, pj)]).max(0.0);
        let denominator = 1.0 + delta * r_int;
        if denominator <= tol::EDGE {
            return Err(Error::SingularUpdate { denominator });
        }
        let u: DVector<f64> = self.q_ac.column(pi) - self.q_ac.column(pj);
        let update = (&u * u.transpose()) * (delta / denominator);
        let q_red = LoopyLaplacian::from_computed(self.q_red.entries() + update)?;
        Ok((
            q_red,
            InteriorPerturbation {
                i,
                j,
                delta,
                r_int,
            },
        ))
    }
}

/// Details of an interior edge update.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InteriorPerturbation {
    pub i: usize,
    pub j: usize,
    pub delta: f64,
    /// `(e_i - e_j)ᵀ Q[β,β]⁻¹ (e_i - e_j)`, the resistance between `i` and `j`
    /// inside the interior network with the boundary grounded.
    pub r_int: f64,
}

impl InteriorPerturbation {
    pub fn denominator(&self) -> f64 {
        1.0 + self.delta * self.r_int
    }
}

fn interior_pair(p: &Partition, i: usize, j: usize) -> Result<(usize, usize)> {
    if i == j {
        return Err(Error::Validation("perturbed nodes must be distinct".into()));
    }
    let pos = |v: usize| {
        p.interior_position(v).ok_or_else(|| {
            Error::Validation(format!("node {} is not an interior node", v + 1))
        })
    };
    Ok((pos(i)?, pos(j)?))
}

/// Checks that `q + delta (e_i - e_j)(e_i - e_j)ᵀ` is still an irreducible
/// loopy Laplacian.
pub(crate) fn check_edge_perturbation(q: &LoopyLaplacian, i: usize, j: usize, delta: f64) -> Result<LoopyLaplacian> {
    let n = q.n();
    if i >= n || j >= n || i == j {
        return Err(Error::Validation("perturbed edge must join two distinct nodes".into()));
    }
    let new_weight = -q.get(i, j) + delta;
    if new_weight < -tol::EDGE {
        return Err(Error::PerturbationInvalid(format!(
            "edge ({},{}) would get negative weight {new_weight}",
            i + 1,
            j + 1
        )));
    }
    let mut m = q.entries().clone();
    m[(i, i)] += delta;
    m[(j, j)] += delta;
    m[(i, j)] -= delta;
    m[(j, i)] -= delta;
    let perturbed = LoopyLaplacian::from_computed(m)
        .map_err(|e| Error::PerturbationInvalid(e.to_string()))?;
    if !is_irreducible(&perturbed) {
        return Err(Error::Connectivity(format!(
            "changing edge ({},{}) by {delta} disconnects the graph",
            i + 1,
            j + 1
        )));
    }
    Ok(perturbed)
}

fn require_irreducible(q: &LoopyLaplacian) -> Result<()> {
    if is_irreducible(q) {
        Ok(())
    } else {
        Err(Error::Connectivity(format!(
            "{} components",
            components(q, &(0..q.n()).collect::<Vec<_>>()).len()
        )))
    }
}

/// One-shot Kron reduction of the interior of `p`.
pub fn kron_reduce(q: &LoopyLaplacian, p: &Partition) -> Result<KronReduction> {
    p.check(q)?;
    require_irreducible(q)?;
    let (outer, inner) = (p.boundary(), p.interior());
    let m = q.entries();
    let inv = spd_inverse(&select(m, inner, inner))?;
    let q_ab = select(m, outer, inner);
    let q_ac = -(&q_ab * &inv);
    let q_red = select(m, outer, outer) + &q_ac * q_ab.transpose();
    KronReduction::assemble(symmetrize(&q_red), q_ac, p.clone(), Some(inv))
}

/// One elimination step of an iterative reduction.
#[derive(Debug, Clone)]
pub struct EliminationStep {
    /// Original index of the node removed at this step.
    pub eliminated: usize,
    /// Original indices of the surviving nodes, in matrix order.
    pub remaining: Vec<usize>,
    pub laplacian: LoopyLaplacian,
}

#[derive(Debug, Clone)]
pub struct IterativeReduction {
    pub reduction: KronReduction,
    pub steps: Vec<EliminationStep>,
}

/// Default elimination order: interior nodes by descending index.
pub fn default_order(p: &Partition) -> Vec<usize> {
    p.interior().iter().rev().copied().collect()
}

/// Eliminates interior nodes one at a time in `order` using
/// `Q_ij ← Q_ij - Q_ik Q_jk / Q_kk`, recording every intermediate matrix.
pub fn kron_reduce_iterative(
    q: &LoopyLaplacian,
    p: &Partition,
    order: &[usize],
) -> Result<IterativeReduction> {
    p.check(q)?;
    require_irreducible(q)?;
    let mut sorted = order.to_vec();
    sorted.sort_unstable();
    if sorted != p.interior() {
        return Err(Error::Validation(
            "elimination order must be a permutation of the interior nodes".into(),
        ));
    }

    let mut m = q.entries().clone();
    let mut labels: Vec<usize> = (0..q.n()).collect();
    // Distribution of each interior injection over the surviving nodes;
    // columns follow `p.interior()`.
    let mut carry = DMatrix::from_fn(q.n(), p.interior().len(), |r, c| {
        if p.interior()[c] == r {
            1.0
        } else {
            0.0
        }
    });
    let mut steps = Vec::with_capacity(order.len());

    for &node in order {
        let k = labels.iter().position(|&v| v == node).expect("node present");
        let pivot = m[(k, k)];
        if pivot <= tol::EDGE {
            return Err(Error::SingularPivot { node, pivot });
        }
        let size = labels.len();
        let keep: Vec<usize> = (0..size).filter(|&r| r != k).collect();
        let next = DMatrix::from_fn(size - 1, size - 1, |a, b| {
            let (r, c) = (keep[a], keep[b]);
            m[(r, c)] - m[(r, k)] * m[(c, k)] / pivot
        });
        let next_carry = DMatrix::from_fn(size - 1, carry.ncols(), |a, c| {
            let r = keep[a];
            carry[(r, c)] - m[(r, k)] / pivot * carry[(k, c)]
        });
        labels.remove(k);
        m = symmetrize(&next);
        carry = next_carry;
        steps.push(EliminationStep {
            eliminated: node,
            remaining: labels.clone(),
            laplacian: LoopyLaplacian::from_computed(m.clone())?,
        });
    }

    // Surviving labels are the boundary in some order; bring them to sorted
    // boundary order.
    let pos: Vec<usize> = p
        .boundary()
        .iter()
        .map(|b| labels.iter().position(|v| v == b).expect("boundary survives"))
        .collect();
    let q_red = select(&m, &pos, &pos);
    let q_ac = DMatrix::from_fn(pos.len(), carry.ncols(), |a, c| carry[(pos[a], c)]);
    let reduction = KronReduction::assemble(q_red, q_ac, p.clone(), None)?;
    Ok(IterativeReduction { reduction, steps })
}

/// Self-loop weight of node `i` after eliminating node `k` from `q_prev`:
/// unchanged when `k` carries no loop, otherwise increased by
/// `A_ik (1 - L_kk / (L_kk + A_kk))`.
pub fn predict_loop_update(q_prev: &LoopyLaplacian, k: usize, i: usize) -> Result<f64> {
    let n = q_prev.n();
    if k >= n || i >= n || k == i {
        return Err(Error::Validation(format!(
            "nodes {} and {} must be distinct and within 1..={n}",
            k + 1,
            i + 1
        )));
    }
    let loops = linalg::row_sums(q_prev.entries());
    let a_ii = loops[i];
    let a_kk = loops[k];
    if a_kk <= 0.0 {
        return Ok(a_ii);
    }
    let a_ik = -q_prev.get(i, k);
    let l_kk = q_prev.get(k, k) - a_kk;
    Ok(a_ii + a_ik * (1.0 - l_kk / (l_kk + a_kk)))
}

/// Reduced self-loops `A_red[i,i] = Δ_i + Σ_j Q_ac[i,j] Δ_j` over interior `j`.
pub fn reduced_self_loops(q: &LoopyLaplacian, p: &Partition) -> Result<DVector<f64>> {
    let kr = kron_reduce(q, p)?;
    Ok(loops_through(&kr, q))
}

fn loops_through(kr: &KronReduction, q: &LoopyLaplacian) -> DVector<f64> {
    let loops = q.self_loops();
    let p = &kr.partition;
    let d_int = DVector::from_iterator(p.interior().len(), p.interior().iter().map(|&v| loops[v]));
    let d_bnd = DVector::from_iterator(p.boundary().len(), p.boundary().iter().map(|&v| loops[v]));
    d_bnd + &kr.q_ac * d_int
}

/// `Q_red = L/L[β,β] + diag(Δ_α) + S`.
#[derive(Debug, Clone)]
pub struct SelfLoopDecomposition {
    pub l_schur: LoopyLaplacian,
    pub boundary_loops: DVector<f64>,
    /// `S = L_ac (I + diag(Δ_β) L[β,β]⁻¹)⁻¹ diag(Δ_β) L_acᵀ`.
    pub s: DMatrix<f64>,
}

impl SelfLoopDecomposition {
    pub fn sum(&self) -> DMatrix<f64> {
        self.l_schur.entries() + DMatrix::from_diagonal(&self.boundary_loops) + &self.s
    }
}

pub fn self_loop_decomposition(q: &LoopyLaplacian, p: &Partition) -> Result<SelfLoopDecomposition> {
    p.check(q)?;
    require_irreducible(q)?;
    let l = loopless_part(q);
    // L[β,β] is invertible iff every interior node reaches the boundary
    // through edges.
    for comp in components(&l, p.interior()) {
        let touches = comp
            .iter()
            .any(|&v| p.boundary().iter().any(|&b| l.has_edge(v, b)));
        if !touches {
            return Err(Error::DecompositionUnavailable(format!(
                "interior node {} has no edge path to the boundary",
                comp[0] + 1
            )));
        }
    }
    let (outer, inner) = (p.boundary(), p.interior());
    let lm = l.entries();
    let l_inv = spd_inverse(&select(lm, inner, inner))?;
    let l_ab = select(lm, outer, inner);
    let l_ac = -(&l_ab * &l_inv);
    let l_schur = LoopyLaplacian::from_computed(select(lm, outer, outer) + &l_ac * l_ab.transpose())?;

    let loops = q.self_loops();
    let d_int = DMatrix::from_diagonal(&DVector::from_iterator(
        inner.len(),
        inner.iter().map(|&v| loops[v]),
    ));
    let boundary_loops = DVector::from_iterator(outer.len(), outer.iter().map(|&v| loops[v]));
    let middle = DMatrix::identity(inner.len(), inner.len()) + &d_int * &l_inv;
    let middle_inv = middle
        .lu()
        .try_inverse()
        .ok_or_else(|| Error::InvariantBreach("I + diag(Δ) L⁻¹ is singular".into()))?;
    let s = symmetrize(&(&l_ac * middle_inv * d_int * l_ac.transpose()));
    Ok(SelfLoopDecomposition {
        l_schur,
        boundary_loops,
        s,
    })
}

/// Whether `S` and `Q_ac` are guaranteed entrywise positive: the interior
/// subgraph is connected, every boundary node touches the interior, and some
/// interior node carries a loop.
pub fn positivity_hypothesis(q: &LoopyLaplacian, p: &Partition) -> bool {
    let loops = q.self_loops();
    components(q, p.interior()).len() == 1
        && p
            .boundary()
            .iter()
            .all(|&b| p.interior().iter().any(|&v| q.has_edge(b, v)))
        && p.interior().iter().any(|&v| loops[v] > tol::EDGE)
}

/// Boundary-restricted currents `I_α + Q_ac I_β` for a full current vector.
pub fn equivalent_injections(kr: &KronReduction, currents: &[f64]) -> Result<DVector<f64>> {
    let p = &kr.partition;
    if currents.len() != p.n() {
        return Err(Error::Dimension(format!(
            "expected {} currents, got {}",
            p.n(),
            currents.len()
        )));
    }
    let i_a = DVector::from_iterator(p.boundary().len(), p.boundary().iter().map(|&v| currents[v]));
    let i_b = DVector::from_iterator(p.interior().len(), p.interior().iter().map(|&v| currents[v]));
    Ok(i_a + &kr.q_ac * i_b)
}

/// Solves `Q_red V_α = I_α + Q_ac I_β`. Loop-less reductions return the
/// zero-mean solution and require zero net injection.
pub fn solve_reduced(kr: &KronReduction, currents: &[f64]) -> Result<DVector<f64>> {
    let rhs = equivalent_injections(kr, currents)?;
    if kr.q_red.is_loop_less() {
        let total = rhs.sum();
        if total.abs() > tol::EDGE {
            return Err(Error::Compatibility { total });
        }
        let pinv = linalg::symmetric_pinv(kr.q_red.entries(), Some(1))?;
        Ok(pinv * rhs)
    } else {
        kr.q_red
            .entries()
            .clone()
            .cholesky()
            .map(|c| c.solve(&rhs))
            .ok_or_else(|| Error::InvariantBreach("strictly loopy Q_red is not positive definite".into()))
    }
}

/// `Q_red + W` for a symmetric change `W` confined to the boundary.
pub fn perturb_boundary(kr: &KronReduction, w_alpha: &DMatrix<f64>) -> Result<LoopyLaplacian> {
    let m = kr.q_red.n();
    if w_alpha.shape() != (m, m) {
        return Err(Error::Dimension(format!(
            "boundary perturbation must be {m}x{m}, got {}x{}",
            w_alpha.nrows(),
            w_alpha.ncols()
        )));
    }
    let sum = kr.q_red.entries() + w_alpha;
    LoopyLaplacian::from_computed(sum).map_err(|e| match e {
        Error::InvariantBreach(msg) | Error::Validation(msg) => Error::PerturbationInvalid(msg),
        other => other,
    })
}

/// Reduces, then applies [`KronReduction::perturb_interior_edge`].
pub fn perturb_interior_edge(
    q: &LoopyLaplacian,
    p: &Partition,
    i: usize,
    j: usize,
    delta: f64,
) -> Result<(LoopyLaplacian, InteriorPerturbation)> {
    interior_pair(p, i, j)?;
    check_edge_perturbation(q, i, j, delta)?;
    kron_reduce(q, p)?.perturb_interior_edge(q, i, j, delta)
}

/// Edge and self-loop pattern of the reduced graph, in reduced positions.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ReducedTopology {
    /// Pairs `(a, b)` with `a < b`.
    pub edges: BTreeSet<(usize, usize)>,
    pub loops: BTreeSet<usize>,
}

impl ReducedTopology {
    /// Thresholded pattern of a reduced adjacency matrix.
    pub fn from_graph(a_red: &WeightedGraph) -> Self {
        ReducedTopology {
            edges: a_red.edges().into_iter().map(|(i, j, _)| (i, j)).collect(),
            loops: a_red.loops().into_iter().map(|(i, _)| i).collect(),
        }
    }
}

/// Predicts the reduced pattern by graph search alone. Two boundary nodes
/// are joined iff they are adjacent or linked by a path through interior
/// nodes; a boundary node is loopy iff it reaches the ground of the
/// augmented graph through interior nodes only.
pub fn predict_reduced_topology(q: &LoopyLaplacian, p: &Partition) -> Result<ReducedTopology> {
    p.check(q)?;
    require_irreducible(q)?;
    let outer = p.boundary();
    let mut topo = ReducedTopology::default();

    for (a, &u) in outer.iter().enumerate() {
        for (b, &v) in outer.iter().enumerate().skip(a + 1) {
            if q.has_edge(u, v) {
                topo.edges.insert((a, b));
            }
        }
    }
    for comp in components(q, p.interior()) {
        let touching: Vec<usize> = (0..outer.len())
            .filter(|&a| comp.iter().any(|&v| q.has_edge(outer[a], v)))
            .collect();
        for (x, &a) in touching.iter().enumerate() {
            for &b in &touching[x + 1..] {
                topo.edges.insert((a, b));
            }
        }
    }

    let hat = augment_quiet(q).laplacian;
    let ground = q.n();
    for (a, &u) in outer.iter().enumerate() {
        // Search from u over {u} ∪ β ∪ {ground}.
        let mut allowed: Vec<usize> = p.interior().to_vec();
        allowed.push(u);
        allowed.push(ground);
        let reach = components(&hat, &allowed);
        if reach.iter().any(|c| c.contains(&u) && c.contains(&ground)) {
            topo.loops.insert(a);
        }
    }
    Ok(topo)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::laplacian_from_graph;
    use nalgebra::dmatrix;

    const EPS: f64 = 1e-12;

    fn star(hub_loop: f64) -> LoopyLaplacian {
        let loops = if hub_loop > 0.0 { vec![(3, hub_loop)] } else { vec![] };
        laplacian_from_graph(
            &WeightedGraph::from_edges(4, &[(0, 3, 1.0), (1, 3, 1.0), (2, 3, 1.0)], &loops).unwrap(),
        )
    }

    fn chain() -> LoopyLaplacian {
        laplacian_from_graph(
            &WeightedGraph::from_edges(4, &[(0, 2, 1.0), (1, 3, 1.0), (2, 3, 1.0)], &[]).unwrap(),
        )
    }

    fn close(a: &DMatrix<f64>, b: &DMatrix<f64>, eps: f64) {
        let d = linalg::max_abs_diff(a, b);
        assert!(d <= eps, "difference {d}\n{a}\n{b}");
    }

    #[test]
    fn partition_rules() {
        assert!(Partition::new(4, &[0]).unwrap_err().to_string().contains("at least 2"));
        assert!(Partition::new(3, &[0, 1, 2]).is_err());
        assert!(Partition::new(3, &[0, 0]).is_err());
        assert!(Partition::new(3, &[0, 5]).is_err());
        let p = Partition::new(5, &[3, 0]).unwrap();
        assert_eq!(p.boundary(), &[0, 3]);
        assert_eq!(p.interior(), &[1, 2, 4]);
    }

    #[test]
    fn star_becomes_triangle() {
        let kr = kron_reduce(&star(0.0), &Partition::new(4, &[0, 1, 2]).unwrap()).unwrap();
        let third = 1.0 / 3.0;
        close(
            kr.q_red.entries(),
            &dmatrix![2.0 * third, -third, -third; -third, 2.0 * third, -third; -third, -third, 2.0 * third],
            EPS,
        );
        for (i, j) in [(0, 1), (0, 2), (1, 2)] {
            assert!((kr.a_red.weight(i, j) - third).abs() < EPS);
        }
        close(&kr.q_ac, &DMatrix::from_element(3, 1, third), EPS);
        assert!(kr.q_red.is_loop_less());
        assert_eq!(kr.permutation, vec![0, 1, 2]);
    }

    #[test]
    fn chain_reduction() {
        let kr = kron_reduce(&chain(), &Partition::new(4, &[0, 1]).unwrap()).unwrap();
        let t = 1.0 / 3.0;
        close(kr.q_red.entries(), &dmatrix![t, -t; -t, t], EPS);
        close(&kr.q_ac, &dmatrix![2.0 * t, t; t, 2.0 * t], EPS);
    }

    #[test]
    fn star_with_loop() {
        let kr = kron_reduce(&star(1.0), &Partition::new(4, &[0, 1, 2]).unwrap()).unwrap();
        let expected = DMatrix::identity(3, 3) - DMatrix::from_element(3, 3, 0.25);
        close(kr.q_red.entries(), &expected, EPS);
        close(&kr.q_ac, &DMatrix::from_element(3, 1, 0.25), EPS);
        assert!(kr.q_red.is_strictly_loopy());
        for i in 0..3 {
            assert!((kr.a_red.self_loop(i) - 0.25).abs() < EPS);
        }
    }

    #[test]
    fn unsorted_boundary_labels() {
        // Boundary {3, 1} on a path 0-1-2-3 with interior {0, 2}.
        let q = laplacian_from_graph(
            &WeightedGraph::from_edges(4, &[(0, 1, 2.0), (1, 2, 1.0), (2, 3, 1.0)], &[]).unwrap(),
        );
        let kr = kron_reduce(&q, &Partition::new(4, &[3, 1]).unwrap()).unwrap();
        assert_eq!(kr.permutation, vec![1, 3]);
        close(kr.q_red.entries(), &dmatrix![0.5, -0.5; -0.5, 0.5], EPS);
        // Node 0 is a dangling leaf on node 1: all its current lands there.
        assert!((kr.q_ac[(0, 0)] - 1.0).abs() < EPS);
    }

    #[test]
    fn disconnected_input_rejected() {
        let q = LoopyLaplacian::new(dmatrix![
            1.0, -1.0, 0.0, 0.0;
            -1.0, 1.0, 0.0, 0.0;
            0.0, 0.0, 1.0, -1.0;
            0.0, 0.0, -1.0, 1.0
        ])
        .unwrap();
        let err = kron_reduce(&q, &Partition::new(4, &[0, 2]).unwrap()).unwrap_err();
        assert!(matches!(err, Error::Connectivity(_)));
    }

    #[test]
    fn ill_conditioned_interior() {
        // Interior node hangs on a vanishing edge.
        let q = laplacian_from_graph(
            &WeightedGraph::from_edges(3, &[(0, 1, 1.0), (1, 2, 1e-14)], &[]).unwrap(),
        );
        // The 1e-14 edge is below the topology threshold.
        assert!(matches!(
            kron_reduce(&q, &Partition::new(3, &[0, 1]).unwrap()),
            Err(Error::Connectivity(_))
        ));
        // A stiff interior pair hanging on weak edges.
        let q = laplacian_from_graph(
            &WeightedGraph::from_edges(4, &[(0, 2, 1e-8), (2, 3, 1e8), (3, 1, 1e-8)], &[]).unwrap(),
        );
        let err = kron_reduce(&q, &Partition::new(4, &[0, 1]).unwrap()).unwrap_err();
        assert!(matches!(err, Error::IllConditioned { .. }), "{err}");
    }

    #[test]
    fn iterative_matches_one_shot() {
        let p = Partition::new(4, &[0, 1]).unwrap();
        let a = kron_reduce_iterative(&chain(), &p, &[2, 3]).unwrap();
        let b = kron_reduce_iterative(&chain(), &p, &[3, 2]).unwrap();
        close(a.reduction.q_red.entries(), b.reduction.q_red.entries(), EPS);
        let one = kron_reduce(&chain(), &p).unwrap();
        close(a.reduction.q_red.entries(), one.q_red.entries(), EPS);
        close(&a.reduction.q_ac, &one.q_ac, EPS);
        close(&b.reduction.q_ac, &one.q_ac, EPS);
        assert_eq!(a.steps.len(), 2);
        assert_eq!(a.steps[0].remaining, vec![0, 1, 3]);

        let ps = Partition::new(4, &[0, 1, 2]).unwrap();
        let it = kron_reduce_iterative(&star(0.0), &ps, &[3]).unwrap();
        close(it.reduction.q_red.entries(), kron_reduce(&star(0.0), &ps).unwrap().q_red.entries(), EPS);
        for step in &it.steps {
            assert!(step.laplacian.is_loop_less());
        }
    }

    #[test]
    fn iterative_rejects_bad_order() {
        let p = Partition::new(4, &[0, 1]).unwrap();
        assert!(kron_reduce_iterative(&chain(), &p, &[2]).is_err());
        assert!(kron_reduce_iterative(&chain(), &p, &[0, 2]).is_err());
        assert_eq!(default_order(&p), vec![3, 2]);
    }

    #[test]
    fn loop_update_prediction() {
        let q = star(1.0);
        // Node 3: L_kk = 3, A_kk = 1, A_ik = 1 -> 1·(1 - 3/4).
        assert!((predict_loop_update(&q, 3, 0).unwrap() - 0.25).abs() < EPS);
        assert_eq!(predict_loop_update(&star(0.0), 3, 0).unwrap(), 0.0);
        // Node 0 is not adjacent to node 1.
        let q2 = laplacian_from_graph(
            &WeightedGraph::from_edges(3, &[(0, 2, 1.0), (1, 2, 1.0)], &[(1, 2.0), (0, 0.5)]).unwrap(),
        );
        assert!((predict_loop_update(&q2, 1, 0).unwrap() - 0.5).abs() < EPS);
        assert!(predict_loop_update(&q, 1, 1).is_err());
    }

    #[test]
    fn reduced_loops() {
        let p = Partition::new(4, &[0, 1, 2]).unwrap();
        let loops = reduced_self_loops(&star(1.0), &p).unwrap();
        for v in loops.iter() {
            assert!((v - 0.25).abs() < EPS);
        }
        assert!(reduced_self_loops(&star(0.0), &p).unwrap().iter().all(|v| v.abs() < EPS));

        let q = laplacian_from_graph(
            &WeightedGraph::from_edges(4, &[(0, 3, 1.0), (1, 3, 1.0), (2, 3, 1.0)], &[(0, 2.0)]).unwrap(),
        );
        let loops = reduced_self_loops(&q, &p).unwrap();
        assert!((loops[0] - 2.0).abs() < EPS);
        assert!(loops[1].abs() < EPS && loops[2].abs() < EPS);
    }

    #[test]
    fn decomposition_examples() {
        let p = Partition::new(4, &[0, 1, 2]).unwrap();
        let d = self_loop_decomposition(&star(0.0), &p).unwrap();
        assert!(linalg::max_abs(&d.s) < EPS);
        assert!(d.boundary_loops.iter().all(|v| *v == 0.0));
        close(d.l_schur.entries(), kron_reduce(&star(0.0), &p).unwrap().q_red.entries(), EPS);

        let d = self_loop_decomposition(&star(1.0), &p).unwrap();
        close(&d.s, &DMatrix::from_element(3, 3, 1.0 / 12.0), EPS);
        close(&d.sum(), kron_reduce(&star(1.0), &p).unwrap().q_red.entries(), EPS);
        assert!(positivity_hypothesis(&star(1.0), &p));
        assert!(!positivity_hypothesis(&star(0.0), &p));
    }

    #[test]
    fn positivity_negative_control() {
        // Interior {3, 4} is split: node 4 hangs off boundary node 0 only and
        // node 3 carries the loop; the interior subgraph is disconnected.
        let q = laplacian_from_graph(
            &WeightedGraph::from_edges(
                5,
                &[(0, 1, 1.0), (1, 2, 1.0), (0, 3, 1.0), (0, 4, 1.0)],
                &[(3, 1.0)],
            )
            .unwrap(),
        );
        let p = Partition::new(5, &[0, 1, 2]).unwrap();
        assert!(!positivity_hypothesis(&q, &p));
        let d = self_loop_decomposition(&q, &p).unwrap();
        assert!(d.s.iter().all(|&v| v >= -tol::EDGE));
        close(&d.sum(), kron_reduce(&q, &p).unwrap().q_red.entries(), 1e-12);
    }

    #[test]
    fn solve_examples() {
        let p = Partition::new(4, &[0, 1, 2]).unwrap();
        let kr = kron_reduce(&star(0.0), &p).unwrap();
        let v = solve_reduced(&kr, &[1.0, -1.0, 0.0, 0.0]).unwrap();
        assert!((v - DVector::from_vec(vec![1.0, -1.0, 0.0])).amax() < 1e-12);
        assert!(solve_reduced(&kr, &[0.0; 4]).unwrap().amax() == 0.0);
        assert!(matches!(
            solve_reduced(&kr, &[1.0, 0.0, 0.0, 0.0]),
            Err(Error::Compatibility { .. })
        ));

        let kr = kron_reduce(&star(1.0), &p).unwrap();
        let v = solve_reduced(&kr, &[1.0, 0.0, 0.0, 0.0]).unwrap();
        let residual = kr.q_red.entries() * &v - DVector::from_vec(vec![1.0, 0.0, 0.0]);
        assert!(residual.amax() <= 1e-10);
    }

    #[test]
    fn boundary_perturbation() {
        let p = Partition::new(4, &[0, 1, 2]).unwrap();
        let kr = kron_reduce(&star(0.0), &p).unwrap();
        assert_eq!(perturb_boundary(&kr, &DMatrix::zeros(3, 3)).unwrap(), kr.q_red);
        let e = DVector::from_vec(vec![1.0, -1.0, 0.0]);
        let w = (&e * e.transpose()) * 0.5;
        let out = perturb_boundary(&kr, &w).unwrap();
        assert!((out.get(0, 1) - (kr.q_red.get(0, 1) - 0.5)).abs() < EPS);
        let err = perturb_boundary(&kr, &(-w)).unwrap_err();
        assert!(matches!(err, Error::PerturbationInvalid(_)), "{err}");
    }

    #[test]
    fn interior_edge_update() {
        let p = Partition::new(4, &[0, 1]).unwrap();
        let q = chain();
        let (q0, d0) = perturb_interior_edge(&q, &p, 2, 3, 0.0).unwrap();
        close(q0.entries(), kron_reduce(&q, &p).unwrap().q_red.entries(), EPS);
        assert_eq!(d0.delta, 0.0);

        let (q1, detail) = perturb_interior_edge(&q, &p, 2, 3, 1.0).unwrap();
        assert!((detail.r_int - 2.0 / 3.0).abs() < EPS);
        close(q1.entries(), &(dmatrix![1.0, -1.0; -1.0, 1.0] * 0.4), EPS);

        let err = perturb_interior_edge(&q, &p, 2, 3, -1.0).unwrap_err();
        assert!(matches!(err, Error::Connectivity(_)), "{err}");
        assert!(perturb_interior_edge(&q, &p, 0, 3, 1.0).is_err());
        assert!(matches!(
            perturb_interior_edge(&q, &p, 2, 3, -2.0),
            Err(Error::PerturbationInvalid(_))
        ));
    }

    #[test]
    fn topology_examples() {
        let p = Partition::new(4, &[0, 1, 2]).unwrap();
        let t = predict_reduced_topology(&star(0.0), &p).unwrap();
        assert_eq!(t.edges, BTreeSet::from([(0, 1), (0, 2), (1, 2)]));
        assert!(t.loops.is_empty());
        let t = predict_reduced_topology(&star(1.0), &p).unwrap();
        assert_eq!(t.loops, BTreeSet::from([0, 1, 2]));

        // Path 0-3-1-4-2 with boundary {0,1,2}: node 1 cuts the interior, so
        // 0 and 2 stay unjoined.
        let q = laplacian_from_graph(
            &WeightedGraph::from_edges(5, &[(0, 3, 1.0), (3, 1, 1.0), (1, 4, 1.0), (4, 2, 1.0)], &[])
                .unwrap(),
        );
        let p = Partition::new(5, &[0, 1, 2]).unwrap();
        let t = predict_reduced_topology(&q, &p).unwrap();
        assert_eq!(t.edges, BTreeSet::from([(0, 1), (1, 2)]));
        let kr = kron_reduce(&q, &p).unwrap();
        assert_eq!(t, ReducedTopology::from_graph(&kr.a_red));
    }
}
