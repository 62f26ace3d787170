//! Numerical tolerances shared by every module.

/// Absolute tolerance for symmetry and row-sum validation of user input.
pub const SYM: f64 = 1e-12;

/// Threshold deciding whether an edge or self-loop exists after floating
/// point reductions. Used for topology only, never to alter arithmetic.
pub const EDGE: f64 = 1e-9;

/// Max-norm tolerance for algebraic identity checks.
pub const QUOT: f64 = 1e-9;

/// Relative eigenvalue threshold for rank decisions (scaled by `λ_max`).
pub const EIG: f64 = 1e-10;

/// Absolute slack allowed on eigenvalue inequalities.
pub const EIG_ABS: f64 = 1e-8;

/// Interior blocks with a larger condition estimate are rejected.
pub const COND_MAX: f64 = 1e12;

/// Relative tolerance for the uniform-resistance hypothesis.
pub const UNIFORM: f64 = 1e-6;

/// Tolerance set used by the verification suite; the individual operations
/// use the module constants directly.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    pub edge: f64,
    pub quot: f64,
    pub eig_abs: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            edge: EDGE,
            quot: QUOT,
            eig_abs: EIG_ABS,
        }
    }
}
