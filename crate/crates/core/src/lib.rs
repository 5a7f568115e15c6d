//! Volumes of monomial graded linear series on projective space, their
//! equilibrium symbols and Monge-Ampère masses.
//!
//! Series are described by exponent sets in the affine chart; volumes are
//! computed by lattice-point counting, by the self-intersection of the
//! Newton-Okounkov polytopes, and by the Monge-Ampère mass of the
//! piecewise-linear equilibrium symbol.

#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod bergman;
pub mod envelope;
pub mod error;
pub mod lattice_series;
pub mod lp;
pub mod monge_ampere;
pub mod polytope;
pub mod rational;
pub mod serde_q;

pub use bergman::{
    bergman_weight, monomial_norm, sandwich_report, BergmanLevel, QuadratureSpec, SandwichReport,
};
pub use envelope::{
    envelope_level, equilibrium_symbol, evaluate_on_grid, fubini_study_weight, legendre,
    EquilibriumSymbol, GridField, GridSpec, PLConvexFunction, SmoothToricWeight,
};
pub use error::{Error, Result};
pub use lattice_series::{
    complete_series, estimate_volume, example36_generators, example36_series, ideal_series,
    is_birational_at, series_from_generators, truncate, BirationalStatus, ExponentVector,
    GradedPiece, LatticeIndex, MonomialSeries, VolumeEstimate, DEFAULT_POINT_CAP,
};
pub use monge_ampere::{
    active_slopes, analytic_mass_limit, comparison_check, ma_mass_grid, ma_mass_grid_pl,
    ma_mass_pl, monotone_convergence_harness, GridMass, MassReport,
};
pub use polytope::{
    convex_hull, mk_self_intersection, Halfspace, RationalPolytope, SelfIntersection,
};
pub use rational::{format_q, parse_q, QVector, Q};
