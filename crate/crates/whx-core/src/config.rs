//! Centralized numerical tolerances and grid-resolution policy.
//!
//! Every threshold used by the toolkit lives here so that callers can tune
//! them in one place instead of chasing magic numbers through the solvers.

/// Tolerance bundle shared by all factorization and solve routines.
#[derive(Debug, Clone)]
pub struct Tolerances {
    /// Minimum admissible `|f|` on the contour; below this a kernel counts as
    /// singular on the contour.
    pub singularity: f64,
    /// Acceptable sup-norm residual for reconstruction identities.
    pub residual: f64,
    /// Rank / nullspace decision threshold for small dense solves and for
    /// root clustering.
    pub rank: f64,
    /// Coefficient magnitude (relative to the largest coefficient) below
    /// which a Laurent tail counts as resolved.
    pub tail: f64,
    /// Hard cap on grid refinement (samples per contour). Grids are powers
    /// of two and doubling stops here.
    pub grid_cap: usize,
    /// Largest admissible rounding defect when snapping a winding number to
    /// an integer.
    pub winding_defect: f64,
    /// Step cap for the continued-fraction style normalization at infinity.
    pub normalization_step_cap: usize,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            singularity: 1e-10,
            residual: 1e-8,
            rank: 1e-9,
            tail: 1e-10,
            grid_cap: 1 << 16,
            winding_defect: 0.1,
            normalization_step_cap: 64,
        }
    }
}

impl Tolerances {
    /// Tolerances with a custom refinement cap (e.g. from `WHX_GRID_CAP`).
    pub fn with_grid_cap(cap: usize) -> Self {
        Tolerances {
            grid_cap: cap.next_power_of_two().max(8),
            ..Tolerances::default()
        }
    }
}
