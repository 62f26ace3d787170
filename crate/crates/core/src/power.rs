//! DC power-flow reduction, cutset stress measures and closed-form
//! synchronization conditions for lossless networks.
//!
//! Everything is real-valued: `b` is the susceptance Laplacian `B`, and the
//! reduced coupling `Im(Q_red[i,j])` of the lossless network is read off the
//! reduced adjacency of `B`.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::{is_irreducible, LoopyLaplacian};
use crate::kron::{equivalent_injections, kron_reduce, solve_reduced, KronReduction, Partition};
use crate::linalg;
use crate::resistance::ResistanceMatrix;
use crate::spectral::{algebraic_connectivity, weighted_connectivity};
use crate::tol;

/// Linearized power flow `P = B θ`.
#[derive(Debug, Clone)]
pub struct DcNetwork {
    pub b: LoopyLaplacian,
    pub p: DVector<f64>,
    pub theta: Option<DVector<f64>>,
}

impl DcNetwork {
    pub fn new(b: LoopyLaplacian, p: Vec<f64>) -> Result<Self> {
        if p.len() != b.n() {
            return Err(Error::Dimension(format!(
                "{} power injections for {} buses",
                p.len(),
                b.n()
            )));
        }
        if !is_irreducible(&b) {
            return Err(Error::Connectivity("susceptance network is not connected".into()));
        }
        Ok(DcNetwork {
            b,
            p: DVector::from_vec(p),
            theta: None,
        })
    }

    /// Phase angles from `P = B θ`; zero-mean when `B` is loop-less.
    pub fn solve_angles(&self) -> Result<DVector<f64>> {
        if self.b.is_loop_less() {
            let total = self.p.sum();
            if total.abs() > tol::EDGE {
                return Err(Error::Compatibility { total });
            }
            Ok(linalg::symmetric_pinv(self.b.entries(), Some(1))? * &self.p)
        } else {
            self.b
                .entries()
                .clone()
                .cholesky()
                .map(|c| c.solve(&self.p))
                .ok_or_else(|| Error::InvariantBreach("strictly loopy B is singular".into()))
        }
    }

    pub fn with_solved_angles(mut self) -> Result<Self> {
        self.theta = Some(self.solve_angles()?);
        Ok(self)
    }
}

/// Reduced DC model `P[α] + B_ac P[β] = B_red θ[α]`.
#[derive(Debug, Clone)]
pub struct DcReduction {
    pub b_red: LoopyLaplacian,
    pub b_ac: DMatrix<f64>,
    pub p_reduced: DVector<f64>,
    pub reduction: KronReduction,
}

impl DcReduction {
    /// Boundary angles from the reduced model (zero-mean when loop-less).
    pub fn solve_angles(&self) -> Result<DVector<f64>> {
        let n = self.reduction.partition.n();
        // Re-expand p_reduced onto the boundary with zero interior injection.
        let mut full = vec![0.0; n];
        for (k, &v) in self.reduction.partition.boundary().iter().enumerate() {
            full[v] = self.p_reduced[k];
        }
        solve_reduced(&self.reduction, &full)
    }
}

pub fn reduce_dc(net: &DcNetwork, part: &Partition) -> Result<DcReduction> {
    let reduction = kron_reduce(&net.b, part)?;
    let p_reduced = equivalent_injections(&reduction, net.p.as_slice())?;
    Ok(DcReduction {
        b_red: reduction.q_red.clone(),
        b_ac: reduction.q_ac.clone(),
        p_reduced,
        reduction,
    })
}

/// DC analog of the effective power inputs: `ω = P[α] + B_ac P[β]`.
pub fn effective_power_inputs(net: &DcNetwork, part: &Partition) -> Result<Vec<f64>> {
    Ok(reduce_dc(net, part)?.p_reduced.iter().copied().collect())
}

/// Stress across a cut separating boundary set `α₁` (σ = 1) from `α₂`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CutsetResult {
    pub p_cut: f64,
    pub b_cut: f64,
    pub theta_cut: f64,
    pub sigma: Vec<bool>,
}

pub fn cutset(net: &DcNetwork, part: &Partition, sigma: &[bool]) -> Result<CutsetResult> {
    let m = part.boundary().len();
    if sigma.len() != m {
        return Err(Error::Dimension(format!(
            "indicator has {} entries for {m} boundary nodes",
            sigma.len()
        )));
    }
    if sigma.iter().all(|&s| s) || sigma.iter().all(|&s| !s) {
        return Err(Error::CutsetDegenerate(
            "indicator must split the boundary into two non-empty sets".into(),
        ));
    }
    let red = reduce_dc(net, part)?;
    let s = DVector::from_iterator(m, sigma.iter().map(|&b| if b { 1.0 } else { 0.0 }));
    let p_cut = s.dot(&red.p_reduced);
    let b_cut = (s.transpose() * red.b_red.entries() * &s)[(0, 0)];
    if b_cut <= tol::EDGE {
        return Err(Error::CutsetDegenerate(format!("no susceptance across the cut ({b_cut:.3e})")));
    }
    Ok(CutsetResult {
        p_cut,
        b_cut,
        theta_cut: p_cut / b_cut,
        sigma: sigma.to_vec(),
    })
}

/// `P_ij = |V_i| |V_j| A_red[i,j]`, zero diagonal.
pub fn coupling_weights(b_red: &LoopyLaplacian, v_mag: &[f64]) -> Result<DMatrix<f64>> {
    let m = b_red.n();
    if v_mag.len() != m {
        return Err(Error::Dimension(format!("{} voltages for {m} nodes", v_mag.len())));
    }
    if let Some(v) = v_mag.iter().find(|&&v| !(v > 0.0 && v.is_finite())) {
        return Err(Error::Class(format!("voltage magnitudes must be positive, got {v}")));
    }
    Ok(DMatrix::from_fn(m, m, |i, j| {
        if i == j {
            0.0
        } else {
            v_mag[i] * v_mag[j] * (-b_red.get(i, j)).max(0.0)
        }
    }))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SyncCondition {
    /// `|α| min P_ij > max (ω_i - ω_j)`.
    ReducedElementwise,
    /// `λ₂(L(P)) > ‖(ω_i - ω_j)_{i<j}‖₂`.
    ReducedSpectral,
    /// `λ₂(L) > ‖(ω_i - ω_j)_{i<j}‖₂ / V² + max A_red[i,i]`.
    NonReducedSpectral,
    /// `1/R > max (ω_i - ω_j) / (2V²) + max A_red[i,i]`.
    NonReducedResistive,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SyncInputs {
    pub omega: Vec<f64>,
    pub v_lower: Option<f64>,
    pub max_reduced_loop: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SyncAssessment {
    pub condition_name: SyncCondition,
    pub lhs: f64,
    pub rhs: f64,
    pub satisfied: bool,
    pub inputs_digest: SyncInputs,
}

fn assessment(condition_name: SyncCondition, lhs: f64, rhs: f64, inputs_digest: SyncInputs) -> SyncAssessment {
    SyncAssessment {
        condition_name,
        lhs,
        rhs,
        satisfied: lhs > rhs,
        inputs_digest,
    }
}

fn spread(omega: &[f64]) -> f64 {
    let max = omega.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = omega.iter().copied().fold(f64::INFINITY, f64::min);
    max - min
}

fn pairwise_norm(omega: &[f64]) -> f64 {
    let mut sum = 0.0;
    for i in 0..omega.len() {
        for j in i + 1..omega.len() {
            let d = omega[i] - omega[j];
            sum += d * d;
        }
    }
    sum.sqrt()
}

fn check_v_lower(v_lower: f64) -> Result<()> {
    if v_lower > 0.0 && v_lower.is_finite() {
        Ok(())
    } else {
        Err(Error::Class(format!("voltage bound must be positive, got {v_lower}")))
    }
}

fn max_loop(loops: &[f64]) -> f64 {
    loops.iter().copied().fold(0.0, f64::max)
}

/// The element-wise and spectral conditions on the reduced coupling.
pub fn sync_reduced(pij: &DMatrix<f64>, omega: &[f64]) -> Result<[SyncAssessment; 2]> {
    let m = pij.nrows();
    if m < 2 || pij.ncols() != m || omega.len() != m {
        return Err(Error::Dimension(format!(
            "coupling is {}x{} with {} power inputs; need a square matrix of size >= 2",
            pij.nrows(),
            pij.ncols(),
            omega.len()
        )));
    }
    let mut min_p = f64::INFINITY;
    for i in 0..m {
        for j in 0..m {
            if i != j {
                min_p = min_p.min(pij[(i, j)]);
            }
        }
    }
    let digest = SyncInputs {
        omega: omega.to_vec(),
        v_lower: None,
        max_reduced_loop: None,
    };
    Ok([
        assessment(SyncCondition::ReducedElementwise, m as f64 * min_p, spread(omega), digest.clone()),
        assessment(SyncCondition::ReducedSpectral, weighted_connectivity(pij), pairwise_norm(omega), digest),
    ])
}

/// Spectral condition stated on the loop-less Laplacian of the original
/// network.
pub fn sync_spectral_nonreduced(
    l: &LoopyLaplacian,
    omega: &[f64],
    v_lower: f64,
    a_red_loops: &[f64],
) -> Result<SyncAssessment> {
    check_v_lower(v_lower)?;
    let lhs = algebraic_connectivity(l)?;
    let max_reduced_loop = max_loop(a_red_loops);
    let rhs = pairwise_norm(omega) / (v_lower * v_lower) + max_reduced_loop;
    Ok(assessment(
        SyncCondition::NonReducedSpectral,
        lhs,
        rhs,
        SyncInputs {
            omega: omega.to_vec(),
            v_lower: Some(v_lower),
            max_reduced_loop: Some(max_reduced_loop),
        },
    ))
}

/// Resistive condition under a uniform boundary resistance `r_uniform`.
/// When `boundary_resistance` is given, every off-diagonal entry must lie
/// within [`tol::UNIFORM`] (relative) of `r_uniform`.
pub fn sync_resistive_nonreduced(
    r_uniform: f64,
    omega: &[f64],
    v_lower: f64,
    a_red_loops: &[f64],
    boundary_resistance: Option<&ResistanceMatrix>,
) -> Result<SyncAssessment> {
    check_v_lower(v_lower)?;
    if !(r_uniform > 0.0 && r_uniform.is_finite()) {
        return Err(Error::Class(format!("uniform resistance must be positive, got {r_uniform}")));
    }
    if let Some(r) = boundary_resistance {
        let worst = uniformity_deviation(r, r_uniform);
        if worst > tol::UNIFORM {
            return Err(Error::Uniformity { worst });
        }
    }
    let max_reduced_loop = max_loop(a_red_loops);
    let rhs = spread(omega) / (2.0 * v_lower * v_lower) + max_reduced_loop;
    Ok(assessment(
        SyncCondition::NonReducedResistive,
        1.0 / r_uniform,
        rhs,
        SyncInputs {
            omega: omega.to_vec(),
            v_lower: Some(v_lower),
            max_reduced_loop: Some(max_reduced_loop),
        },
    ))
}

/// Worst `|R_ij - r| / r` over distinct pairs.
pub fn uniformity_deviation(r: &ResistanceMatrix, r_uniform: f64) -> f64 {
    let n = r.n();
    let mut worst = 0.0_f64;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                worst = worst.max((r.get(i, j) - r_uniform).abs() / r_uniform);
            }
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{laplacian_from_graph, loopless_part, WeightedGraph};
    use crate::kron::reduced_self_loops;
    use nalgebra::dmatrix;

    fn chain_net(p: Vec<f64>) -> DcNetwork {
        let b = laplacian_from_graph(
            &WeightedGraph::from_edges(4, &[(0, 2, 1.0), (1, 3, 1.0), (2, 3, 1.0)], &[]).unwrap(),
        );
        DcNetwork::new(b, p).unwrap()
    }

    fn star(hub_loop: f64) -> LoopyLaplacian {
        let loops = if hub_loop > 0.0 { vec![(3, hub_loop)] } else { vec![] };
        laplacian_from_graph(
            &WeightedGraph::from_edges(4, &[(0, 3, 1.0), (1, 3, 1.0), (2, 3, 1.0)], &loops).unwrap(),
        )
    }

    #[test]
    fn chain_reduction() {
        let net = chain_net(vec![1.0, -1.0, 0.0, 0.0]);
        let part = Partition::new(4, &[0, 1]).unwrap();
        let red = reduce_dc(&net, &part).unwrap();
        assert!((red.p_reduced[0] - 1.0).abs() < 1e-12 && (red.p_reduced[1] + 1.0).abs() < 1e-12);
        let theta = red.solve_angles().unwrap();
        assert!((theta[0] - theta[1] - 3.0).abs() < 1e-12);
        let full = net.solve_angles().unwrap();
        assert!((full[0] - full[1] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn interior_free_injection() {
        let net = chain_net(vec![0.5, -0.5, 0.0, 0.0]);
        let part = Partition::new(4, &[0, 1]).unwrap();
        let red = reduce_dc(&net, &part).unwrap();
        assert_eq!(red.p_reduced.as_slice(), &[0.5, -0.5]);
    }

    #[test]
    fn gauge_invariance() {
        let net = chain_net(vec![1.0, -1.0, 0.5, -0.5]);
        let theta = net.solve_angles().unwrap();
        let shifted = theta.add_scalar(3.7);
        assert!((net.b.entries() * shifted - &net.p).amax() < 1e-12);
        assert!(theta.sum().abs() < 1e-12);
    }

    #[test]
    fn unbalanced_injections_rejected() {
        let net = chain_net(vec![1.0, 0.0, 0.0, 0.0]);
        assert!(matches!(net.solve_angles(), Err(Error::Compatibility { .. })));
    }

    #[test]
    fn chain_cutset() {
        let part = Partition::new(4, &[0, 1]).unwrap();
        let c = cutset(&chain_net(vec![1.0, -1.0, 0.0, 0.0]), &part, &[true, false]).unwrap();
        assert!((c.p_cut - 1.0).abs() < 1e-12);
        assert!((c.b_cut - 1.0 / 3.0).abs() < 1e-12);
        assert!((c.theta_cut - 3.0).abs() < 1e-12);
        assert_eq!(c.theta_cut, c.p_cut / c.b_cut);

        let zero = cutset(&chain_net(vec![0.0; 4]), &part, &[true, false]).unwrap();
        assert_eq!(zero.p_cut, 0.0);
        assert_eq!(zero.theta_cut, 0.0);

        let net = chain_net(vec![1.0, -1.0, 0.0, 0.0]);
        let a = cutset(&net, &part, &[true, false]).unwrap();
        let b = cutset(&net, &part, &[false, true]).unwrap();
        assert!((a.b_cut - b.b_cut).abs() < 1e-12);
        assert!((a.p_cut + b.p_cut - net.p.sum()).abs() < 1e-12);

        assert!(matches!(cutset(&net, &part, &[true, true]), Err(Error::CutsetDegenerate(_))));
        assert!(matches!(cutset(&net, &part, &[false, false]), Err(Error::CutsetDegenerate(_))));
    }

    #[test]
    fn coupling_examples() {
        let part = Partition::new(4, &[0, 1, 2]).unwrap();
        let red = kron_reduce(&star(0.0), &part).unwrap();
        let p = coupling_weights(&red.q_red, &[1.0; 3]).unwrap();
        for (i, j) in [(0, 1), (0, 2), (1, 2)] {
            assert!((p[(i, j)] - 1.0 / 3.0).abs() < 1e-12);
        }
        let p = coupling_weights(&red.q_red, &[2.0, 1.0, 1.0]).unwrap();
        assert!((p[(0, 1)] - 2.0 / 3.0).abs() < 1e-12);
        assert!((p[(1, 2)] - 1.0 / 3.0).abs() < 1e-12);
        assert_eq!(p[(0, 0)], 0.0);
        assert!(matches!(coupling_weights(&red.q_red, &[1.0, 0.0, 1.0]), Err(Error::Class(_))));
    }

    #[test]
    fn reduced_conditions() {
        let [elem, spectral] = sync_reduced(&dmatrix![0.0, 1.0; 1.0, 0.0], &[0.5, -0.5]).unwrap();
        assert_eq!((elem.lhs, elem.rhs, elem.satisfied), (2.0, 1.0, true));
        assert!((spectral.lhs - 2.0).abs() < 1e-12 && (spectral.rhs - 1.0).abs() < 1e-12 && spectral.satisfied);

        let [elem, spectral] = sync_reduced(&dmatrix![0.0, 0.1; 0.1, 0.0], &[0.3, 0.3]).unwrap();
        assert_eq!(elem.rhs, 0.0);
        assert!(elem.satisfied && spectral.satisfied);

        let pij = dmatrix![0.0, 5.0, 0.0; 5.0, 0.0, 5.0; 0.0, 5.0, 0.0];
        let [elem, _] = sync_reduced(&pij, &[0.1, 0.0, -0.1]).unwrap();
        assert_eq!(elem.lhs, 0.0);
        assert!(!elem.satisfied);
    }

    #[test]
    fn spectral_nonreduced_example() {
        let q = star(1.0);
        let part = Partition::new(4, &[0, 1, 2]).unwrap();
        let loops: Vec<f64> = reduced_self_loops(&q, &part).unwrap().iter().copied().collect();
        let a = sync_spectral_nonreduced(&loopless_part(&q), &[0.1, -0.1, 0.0], 1.0, &loops).unwrap();
        assert!((a.lhs - 1.0).abs() < 1e-12);
        let expected = (0.04_f64 + 0.01 + 0.01).sqrt() + 0.25;
        assert!((a.rhs - expected).abs() < 1e-12);
        assert!(a.satisfied);

        let far = sync_spectral_nonreduced(&loopless_part(&q), &[0.1, -0.1, 0.0], 1e8, &loops).unwrap();
        assert!((far.rhs - 0.25).abs() < 1e-12);

        let l = loopless_part(&star(0.0));
        let a = sync_spectral_nonreduced(&l, &[0.2; 3], 1.0, &[0.0; 3]).unwrap();
        assert_eq!(a.rhs, 0.0);
        assert!(a.satisfied);
        assert!(matches!(
            sync_spectral_nonreduced(&l, &[0.2; 3], 0.0, &[0.0; 3]),
            Err(Error::Class(_))
        ));
    }

    #[test]
    fn resistive_examples() {
        let r = ResistanceMatrix::new(DMatrix::from_fn(4, 4, |i, j| if i == j { 0.0 } else { 0.5 })).unwrap();
        let a = sync_resistive_nonreduced(0.5, &[0.0; 4], 1.0, &[0.0; 4], Some(&r)).unwrap();
        assert_eq!((a.lhs, a.rhs, a.satisfied), (2.0, 0.0, true));

        let a = sync_resistive_nonreduced(0.5, &[0.5, -0.5], 1.0, &[0.0, 0.0], None).unwrap();
        assert_eq!((a.lhs, a.rhs, a.satisfied), (2.0, 0.5, true));

        let a = sync_resistive_nonreduced(10.0, &[0.5, -0.5], 1.0, &[0.0, 0.0], None).unwrap();
        assert!(!a.satisfied);

        assert!(matches!(
            sync_resistive_nonreduced(0.6, &[0.0; 4], 1.0, &[0.0; 4], Some(&r)),
            Err(Error::Uniformity { .. })
        ));
    }
}
