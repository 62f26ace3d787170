//! Effective resistance: three computation routes, recovery of impedance
//! matrices from resistance data, and closed forms for uniform networks.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::{is_irreducible, LoopyLaplacian};
use crate::kron::{check_edge_perturbation, Partition};
use crate::linalg::{self, resistances_from_inverse, select, symmetrize};
use crate::tol;

/// Symmetric, nonnegative, zero-diagonal matrix of pairwise resistances.
#[derive(Debug, Clone, PartialEq)]
pub struct ResistanceMatrix {
    entries: DMatrix<f64>,
}

impl ResistanceMatrix {
    /// Validates shape, zero diagonal, symmetry and sign at [`tol::SYM`].
    /// The triangle inequality is not enforced here; see
    /// [`ResistanceMatrix::metric_violation`].
    pub fn new(entries: DMatrix<f64>) -> Result<Self> {
        let n = entries.nrows();
        if n == 0 || entries.ncols() != n {
            return Err(Error::Validation("resistance matrix must be square and non-empty".into()));
        }
        for i in 0..n {
            if entries[(i, i)].abs() > tol::SYM {
                return Err(Error::Validation(format!(
                    "diagonal resistance ({},{}) is nonzero",
                    i + 1,
                    i + 1
                )));
            }
            for j in 0..n {
                let v = entries[(i, j)];
                if !v.is_finite() || v < -tol::SYM {
                    return Err(Error::Validation(format!(
                        "resistance ({},{}) = {v} is invalid",
                        i + 1,
                        j + 1
                    )));
                }
                if (v - entries[(j, i)]).abs() > tol::SYM {
                    return Err(Error::Validation(format!(
                        "resistances ({},{}) and ({},{}) differ",
                        i + 1,
                        j + 1,
                        j + 1,
                        i + 1
                    )));
                }
            }
        }
        Ok(ResistanceMatrix { entries })
    }

    pub fn n(&self) -> usize {
        self.entries.nrows()
    }

    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[(i, j)]
    }

    /// Restriction to the listed nodes, in list order.
    pub fn restrict(&self, nodes: &[usize]) -> ResistanceMatrix {
        ResistanceMatrix {
            entries: select(&self.entries, nodes, nodes),
        }
    }

    /// Largest `R_ik - R_ij - R_jk` over all triples; `<= 0` for a metric.
    pub fn metric_violation(&self) -> f64 {
        let n = self.n();
        let r = &self.entries;
        let mut worst = f64::NEG_INFINITY;
        for i in 0..n {
            for k in 0..n {
                for j in 0..n {
                    worst = worst.max(r[(i, k)] - r[(i, j)] - r[(j, k)]);
                }
            }
        }
        worst
    }
}

fn require_irreducible(q: &LoopyLaplacian) -> Result<()> {
    if is_irreducible(q) {
        Ok(())
    } else {
        Err(Error::Connectivity(
            "effective resistance between components is infinite".into(),
        ))
    }
}

/// `Q⁻¹` for strictly loopy `q`, `Q†` for loop-less `q`.
pub fn impedance(q: &LoopyLaplacian) -> Result<DMatrix<f64>> {
    if q.is_strictly_loopy() {
        q.entries()
            .clone()
            .cholesky()
            .map(|c| symmetrize(&c.inverse()))
            .ok_or_else(|| Error::InvariantBreach("strictly loopy Laplacian is singular".into()))
    } else {
        linalg::symmetric_pinv(q.entries(), Some(1))
    }
}

/// `R_ij = (e_i - e_j)ᵀ Q† (e_i - e_j)`.
pub fn effective_resistance(q: &LoopyLaplacian) -> Result<ResistanceMatrix> {
    require_irreducible(q)?;
    if q.n() == 1 {
        return Ok(ResistanceMatrix {
            entries: DMatrix::zeros(1, 1),
        });
    }
    Ok(ResistanceMatrix {
        entries: resistances_from_inverse(&impedance(q)?),
    })
}

fn require_loop_less(l: &LoopyLaplacian) -> Result<()> {
    if l.is_loop_less() {
        Ok(())
    } else {
        Err(Error::Class("expected a loop-less Laplacian".into()))
    }
}

/// Resistances among every node except `reference`, using the Dirichlet
/// matrix with the reference grounded. Output order skips `reference`.
pub fn resistance_via_reference(l: &LoopyLaplacian, reference: usize) -> Result<ResistanceMatrix> {
    require_loop_less(l)?;
    let n = l.n();
    if n < 3 {
        return Err(Error::Dimension(format!("need at least 3 nodes, got {n}")));
    }
    if reference >= n {
        return Err(Error::Dimension(format!("reference node {} outside 1..={n}", reference + 1)));
    }
    require_irreducible(l)?;
    let rest: Vec<usize> = (0..n).filter(|&i| i != reference).collect();
    let inv = linalg::spd_inverse(&select(l.entries(), &rest, &rest))?;
    Ok(ResistanceMatrix {
        entries: resistances_from_inverse(&inv),
    })
}

/// `L† = (L + (δ/n) 1)⁻¹ - (1/(δ n)) 1`, valid for any `δ != 0`.
pub fn pinv_via_shift(l: &LoopyLaplacian, delta: f64) -> Result<DMatrix<f64>> {
    require_loop_less(l)?;
    if delta == 0.0 || !delta.is_finite() {
        return Err(Error::Dimension("shift must be a nonzero finite number".into()));
    }
    require_irreducible(l)?;
    let n = l.n();
    let nf = n as f64;
    let ones = DMatrix::from_element(n, n, 1.0);
    let shifted = l.entries() + &ones * (delta / nf);
    let inv = shifted
        .lu()
        .try_inverse()
        .ok_or_else(|| Error::InvariantBreach("shifted Laplacian is singular".into()))?;
    Ok(symmetrize(&(inv - ones / (delta * nf))))
}

pub fn resistance_via_shift(l: &LoopyLaplacian, delta: f64) -> Result<ResistanceMatrix> {
    Ok(ResistanceMatrix {
        entries: resistances_from_inverse(&pinv_via_shift(l, delta)?),
    })
}

/// Which impedance matrix to recover from resistances.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ReconstructionMode {
    /// `L†` from the resistances of a loop-less network.
    LoopLess,
    /// `Q̂†` from the resistances of an augmented network (ground last).
    AugmentedLoopy,
    /// `Q⁻¹` from the resistances of an augmented network (ground last).
    LoopyDirect,
}

/// A recovered impedance matrix. `metric_violation` is set when the input
/// broke the triangle inequality beyond [`tol::QUOT`]; such data is used
/// anyway.
#[derive(Debug, Clone)]
pub struct Reconstruction {
    pub matrix: DMatrix<f64>,
    pub metric_violation: Option<f64>,
}

/// Recovers `L†`, `Q̂†` or `Q⁻¹` from an effective-resistance matrix. Also
/// valid for resistances restricted to a Kron-reduced boundary.
pub fn impedance_from_resistance(r: &ResistanceMatrix, mode: ReconstructionMode) -> Result<Reconstruction> {
    let violation = r.metric_violation();
    let metric_violation = if violation > tol::QUOT {
        log::warn!("resistance data violates the triangle inequality by {violation:.3e}");
        Some(violation)
    } else {
        None
    };
    let rm = r.entries();
    let n = r.n();
    let matrix = match mode {
        ReconstructionMode::LoopLess | ReconstructionMode::AugmentedLoopy => {
            let nf = n as f64;
            let row_mean = DVector::from_fn(n, |i, _| rm.row(i).sum() / nf);
            let total_mean = rm.sum() / (nf * nf);
            DMatrix::from_fn(n, n, |i, j| -0.5 * (rm[(i, j)] - row_mean[i] - row_mean[j] + total_mean))
        }
        ReconstructionMode::LoopyDirect => {
            if n < 2 {
                return Err(Error::Dimension("need at least one node besides the ground".into()));
            }
            let g = n - 1;
            let inv = DMatrix::from_fn(g, g, |i, j| 0.5 * (rm[(i, g)] + rm[(j, g)] - rm[(i, j)]));
            let eig = linalg::sorted_eigenvalues(&inv);
            let scale = eig.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
            if scale == 0.0 || eig.iter().any(|v| v.abs() <= tol::EIG * scale) {
                return Err(Error::SingularReconstruction);
            }
            inv
        }
    };
    Ok(Reconstruction {
        matrix: symmetrize(&matrix),
        metric_violation,
    })
}

/// Closed-form inverses of the uniform Laplacian `a (n I - 1) + b I`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UniformInverse {
    /// `Q†` for `b = 0`.
    Pseudo,
    /// `Q⁻¹` for `b > 0`.
    Inverse,
    /// `Q̂†` of the augmented `(n+1)`-node matrix for `b > 0`.
    AugmentedPseudo,
}

fn check_uniform_params(a: f64, b: f64) -> Result<()> {
    if !(a > 0.0 && a.is_finite()) {
        return Err(Error::Class(format!("edge weight must be positive, got {a}")));
    }
    if !(b >= 0.0 && b.is_finite()) {
        return Err(Error::Class(format!("self-loop weight must be nonnegative, got {b}")));
    }
    Ok(())
}

/// `a (n I - 1) + b I`.
pub fn uniform_laplacian(n: usize, a: f64, b: f64) -> DMatrix<f64> {
    let nf = n as f64;
    (DMatrix::identity(n, n) * nf - DMatrix::from_element(n, n, 1.0)) * a + DMatrix::identity(n, n) * b
}

/// The augmented `(n+1)`-node matrix of [`uniform_laplacian`].
pub fn uniform_augmented_laplacian(n: usize, a: f64, b: f64) -> DMatrix<f64> {
    bordered(uniform_laplacian(n, a, b), b, n)
}

fn bordered(block: DMatrix<f64>, border: f64, n: usize) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(n + 1, n + 1);
    m.view_mut((0, 0), (n, n)).copy_from(&block);
    for i in 0..n {
        m[(i, n)] = -border;
        m[(n, i)] = -border;
    }
    m[(n, n)] = n as f64 * border;
    m
}

pub fn uniform_laplacian_inverse(n: usize, a: f64, b: f64, which: UniformInverse) -> Result<DMatrix<f64>> {
    check_uniform_params(a, b)?;
    if n == 0 {
        return Err(Error::Dimension("need at least one node".into()));
    }
    let nf = n as f64;
    let centred = DMatrix::identity(n, n) * nf - DMatrix::from_element(n, n, 1.0);
    match which {
        UniformInverse::Pseudo => {
            if b != 0.0 {
                return Err(Error::Class("pseudo-inverse closed form needs b = 0".into()));
            }
            Ok(centred / (nf * nf * a))
        }
        UniformInverse::Inverse => {
            if b <= 0.0 {
                return Err(Error::Class("inverse closed form needs b > 0".into()));
            }
            Ok(centred * (-a / (b * (a * nf + b))) + DMatrix::identity(n, n) / b)
        }
        UniformInverse::AugmentedPseudo => {
            if b <= 0.0 {
                return Err(Error::Class("augmented closed form needs b > 0".into()));
            }
            let d = 1.0 / (b * (nf + 1.0) * (nf + 1.0));
            let c = -d * (a - (nf + 2.0) * b) / (a * nf + b);
            Ok(bordered(centred * c + DMatrix::identity(n, n) * d, d, n))
        }
    }
}

/// Boundary resistance `r` and ground resistance `g` of a uniform reduced
/// network with `m` boundary nodes, edge weight `a` and loop weight `b`.
/// `g` is `None` when `b = 0`.
pub fn uniform_reduced_resistance(m: usize, a: f64, b: f64) -> Result<(f64, Option<f64>)> {
    check_uniform_params(a, b)?;
    if m < 2 {
        return Err(Error::Dimension("need at least two boundary nodes".into()));
    }
    let mf = m as f64;
    if b == 0.0 {
        Ok((2.0 / (mf * a), None))
    } else {
        Ok((2.0 / (mf * a + b), Some((a + b) / (b * (a * mf + b)))))
    }
}

/// Inverse of [`uniform_reduced_resistance`]: the uniform weights `(a, b)`
/// that produce resistances `r` and ground resistance `g`.
pub fn uniform_weights_from_resistance(m: usize, r: f64, g: Option<f64>) -> Result<(f64, f64)> {
    if m < 2 {
        return Err(Error::Dimension("need at least two boundary nodes".into()));
    }
    if !(r > 0.0 && r.is_finite()) {
        return Err(Error::Class(format!("resistance must be positive, got {r}")));
    }
    let mf = m as f64;
    let s = 2.0 / r; // a m + b
    let (a, b) = match g {
        None => (s / mf, 0.0),
        Some(g) => {
            let b = s / (mf * g * s + 1.0 - mf);
            ((s - b) / mf, b)
        }
    };
    if !(a > 0.0 && a.is_finite() && b >= 0.0 && b.is_finite()) {
        return Err(Error::Class(format!(
            "resistances ({r}, {g:?}) do not come from a uniform network"
        )));
    }
    Ok((a, b))
}

/// Resistances after changing the weight of interior edge `{i, j}` by
/// `delta`, via `R̃_kl = R_kl - Δ/(1 + Δ R_ij) ((e_k - e_l)ᵀ Q† (e_i - e_j))²`.
pub fn perturbed_resistance(
    q: &LoopyLaplacian,
    p: &Partition,
    i: usize,
    j: usize,
    delta: f64,
) -> Result<ResistanceMatrix> {
    if q.n() != p.n() {
        return Err(Error::Dimension("partition does not match the Laplacian".into()));
    }
    if i == j || p.interior_position(i).is_none() || p.interior_position(j).is_none() {
        return Err(Error::Validation(format!(
            "nodes {} and {} must be distinct interior nodes",
            i + 1,
            j + 1
        )));
    }
    require_irreducible(q)?;
    check_edge_perturbation(q, i, j, delta)?;
    let x = impedance(q)?;
    let r = resistances_from_inverse(&x);
    let denominator = 1.0 + delta * r[(i, j)];
    if denominator <= tol::EDGE {
        return Err(Error::SingularUpdate { denominator });
    }
    let v: DVector<f64> = x.column(i) - x.column(j);
    let factor = delta / denominator;
    let n = q.n();
    let entries = DMatrix::from_fn(n, n, |k, l| {
        if k == l {
            0.0
        } else {
            let t = v[k] - v[l];
            (r[(k, l)] - factor * t * t).max(0.0)
        }
    });
    Ok(ResistanceMatrix { entries })
}
