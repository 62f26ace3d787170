//! Eigenvalue diagnostics for Kron reduction.
//!
//! The checks report a signed slack: the largest `lhs - rhs` over every
//! asserted inequality `lhs <= rhs`. A negative slack means every inequality
//! holds with room to spare.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::{augment, loopless_part, LoopyLaplacian};
use crate::kron::{kron_reduce, Partition};
use crate::linalg::{select, sorted_eigenvalues};

/// Ascending eigenvalues of `q` (symmetric QR on the tridiagonal form).
pub fn eigenvalues(q: &LoopyLaplacian) -> Vec<f64> {
    sorted_eigenvalues(q.entries())
}

/// `λ₂(L)` of a loop-less Laplacian.
pub fn algebraic_connectivity(l: &LoopyLaplacian) -> Result<f64> {
    if !l.is_loop_less() {
        return Err(Error::Class("algebraic connectivity needs a loop-less Laplacian".into()));
    }
    if l.n() < 2 {
        return Err(Error::Dimension("algebraic connectivity needs at least 2 nodes".into()));
    }
    Ok(eigenvalues(l)[1])
}

/// `λ₂` of the Laplacian of an arbitrary symmetric nonnegative weight matrix
/// (diagonal ignored).
pub(crate) fn weighted_connectivity(weights: &DMatrix<f64>) -> f64 {
    let n = weights.nrows();
    let mut lap = -weights.clone();
    for i in 0..n {
        let deg: f64 = (0..n).filter(|&j| j != i).map(|j| weights[(i, j)]).sum();
        lap[(i, i)] = deg;
    }
    sorted_eigenvalues(&lap).get(1).copied().unwrap_or(0.0)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectralReport {
    /// Spectrum of the full matrix (`Q`, or `L` for the loop-shift check).
    pub lambda_full: Vec<f64>,
    /// Spectrum of the reduced matrix (`Q_red`, or `L_red`).
    pub lambda_red: Vec<f64>,
    /// Spectrum of the boundary block `Q[α,α]`.
    pub lambda_block: Vec<f64>,
    /// Worst `lhs - rhs` over the checked inequalities.
    pub slack: f64,
    /// 1-based eigenvalue index `r` where the worst slack occurred.
    pub worst_index: usize,
    pub worst_inequality: String,
}

impl SpectralReport {
    pub fn holds(&self, tolerance: f64) -> bool {
        self.slack <= tolerance
    }
}

struct Worst {
    slack: f64,
    index: usize,
    label: &'static str,
}

impl Worst {
    fn new() -> Self {
        Worst {
            slack: f64::NEG_INFINITY,
            index: 0,
            label: "",
        }
    }

    fn check(&mut self, lhs: f64, rhs: f64, r: usize, label: &'static str) {
        let slack = lhs - rhs;
        if slack > self.slack {
            *self = Worst {
                slack,
                index: r + 1,
                label,
            };
        }
    }
}

/// `λ_r(Q) <= λ_r(Q_red) <= λ_r(Q[α,α]) <= λ_{r+n-|α|}(Q)` for every `r`.
pub fn verify_interlacing(q: &LoopyLaplacian, p: &Partition) -> Result<SpectralReport> {
    let kr = kron_reduce(q, p)?;
    let full = eigenvalues(q);
    let red = eigenvalues(&kr.q_red);
    let block = sorted_eigenvalues(&select(q.entries(), p.boundary(), p.boundary()));
    let shift = q.n() - red.len();
    let mut worst = Worst::new();
    for r in 0..red.len() {
        worst.check(full[r], red[r], r, "lambda_r(Q) <= lambda_r(Q_red)");
        worst.check(red[r], block[r], r, "lambda_r(Q_red) <= lambda_r(Q[a,a])");
        worst.check(block[r], full[r + shift], r, "lambda_r(Q[a,a]) <= lambda_(r+n-|a|)(Q)");
    }
    Ok(SpectralReport {
        lambda_full: full,
        lambda_red: red,
        lambda_block: block,
        slack: worst.slack,
        worst_index: worst.index,
        worst_inequality: worst.label.to_string(),
    })
}

/// Self-loop shifted bounds between the loop-less spectra:
///
/// ```text
/// λ_r(L) + min A_ii      <= λ_r(L_red) + max A_red[i,i]
/// λ_r(L_red) + min A_red <= λ_{r+n-|α|}(L) + max A_ii
/// ```
pub fn verify_loop_shift_bounds(q: &LoopyLaplacian, p: &Partition) -> Result<SpectralReport> {
    let kr = kron_reduce(q, p)?;
    let l = loopless_part(q);
    let l_red = kr.l_red();
    let full = eigenvalues(&l);
    let red = eigenvalues(&l_red);
    let block = sorted_eigenvalues(&select(q.entries(), p.boundary(), p.boundary()));
    let loops = q.self_loops();
    let loops_red = kr.q_red.self_loops();
    let (min_a, max_a) = (loops.min(), loops.max());
    let (min_red, max_red) = (loops_red.min(), loops_red.max());
    let shift = q.n() - red.len();
    let mut worst = Worst::new();
    for r in 0..red.len() {
        worst.check(full[r] + min_a, red[r] + max_red, r, "lambda_r(L) + min A <= lambda_r(L_red) + max A_red");
        worst.check(
            red[r] + min_red,
            full[r + shift] + max_a,
            r,
            "lambda_r(L_red) + min A_red <= lambda_(r+n-|a|)(L) + max A",
        );
    }
    Ok(SpectralReport {
        lambda_full: full,
        lambda_red: red,
        lambda_block: block,
        slack: worst.slack,
        worst_index: worst.index,
        worst_inequality: worst.label.to_string(),
    })
}

/// Interlacing between a strictly loopy `Q` and its augmentation `Q̂`:
/// `μ_1 <= 0 < λ_1` and `λ_r <= μ_{r+1} <= λ_{r+1}`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AugmentedSpectrum {
    pub mu: Vec<f64>,
    pub lambda: Vec<f64>,
    pub slack: f64,
    pub worst_index: usize,
}

pub fn verify_augmented_interlacing(q: &LoopyLaplacian) -> Result<AugmentedSpectrum> {
    if !q.is_strictly_loopy() {
        return Err(Error::Class("augmented interlacing needs a strictly loopy Laplacian".into()));
    }
    let mu = eigenvalues(&augment(q).laplacian);
    let lambda = eigenvalues(q);
    let n = lambda.len();
    let mut worst = Worst::new();
    // μ_1 ≈ 0 and strictly below λ_1.
    worst.check(mu[0].abs(), 0.0, 0, "mu_1 = 0");
    worst.check(mu[0] - lambda[0], 0.0, 0, "mu_1 < lambda_1");
    for r in 0..n {
        worst.check(lambda[r], mu[r + 1], r, "lambda_r <= mu_(r+1)");
        if r + 1 < n {
            worst.check(mu[r + 1], lambda[r + 1], r, "mu_(r+1) <= lambda_(r+1)");
        }
    }
    Ok(AugmentedSpectrum {
        mu,
        lambda,
        slack: worst.slack,
        worst_index: worst.index,
    })
}

/// `λ₂(L)` and `λ₂(L_red)` side by side.
pub fn connectivity_pair(q: &LoopyLaplacian, p: &Partition) -> Result<(f64, f64)> {
    let kr = kron_reduce(q, p)?;
    Ok((
        algebraic_connectivity(&loopless_part(q))?,
        algebraic_connectivity(&kr.l_red())?,
    ))
}
