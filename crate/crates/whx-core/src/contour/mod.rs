//! Contour representations: Laurent-coefficient scalars on the unit circle,
//! matrix functions, Plemelj projections, winding numbers, and the transport
//! between the real line and the circle.

pub mod laurent;
pub mod matrix;
pub mod mobius;

pub use laurent::{
    glued_log_samples, glued_sqrt_samples, resolve_from_fn, unit_circle_nodes, LaurentFunction,
};
pub use matrix::{
    constant_matrix, det_at_point, probe_points, sort_indices_with_factors, Domain, FactorOrder,
    Factorization, MatrixFunction,
};
pub use mobius::{
    alpha_of_t, circle_to_line_samples, laurent_from_line_samples, line_nodes,
    line_rational_to_circle, mobius_transport, sample_line_function, t_of_alpha, MobiusDirection,
    MobiusMap,
};
