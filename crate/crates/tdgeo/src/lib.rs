//! Numerical time-dependent Riemannian geometry.
//!
//! A time-dependent metric g_t on a manifold does not just carry a family of
//! Levi-Civita connections: its time variation enters the geodesic equation
//! through the endomorphism G⁻¹·Ġ, and the natural derivation operator on
//! time-dependent vector fields is the quadruple ∇̇ = (Γ, C, A, B) acting as
//! ∇̇_X Y = Ẏ + ∇_X Y + C + A(X) + B(Y). This crate provides:
//!
//! - differentiable field abstractions over (t, x) with exact first
//!   derivatives from forward-mode dual numbers ([`fields`], [`dual`]);
//! - connection data: Christoffel symbols, the tensor-valued dΓ/dt,
//!   derivation operators and full connections on ℝ × M ([`connection`]);
//! - flows of non-autonomous fields, geodesics (metric, operator, product
//!   space, forced), parallel transport, and the energy/length functionals
//!   ([`dynamics`], [`integrate`]);
//! - the time-dependent Lie bracket and torsion operator together with the
//!   flow-commutator and four-step-loop probes that recover them as ε²
//!   limits ([`operators`]);
//! - validated built-in models, including the variable-mass double pendulum
//!   whose printed reference formulas are adjudicated against autodiff
//!   oracles ([`models`]).

pub mod connection;
pub mod dual;
pub mod dynamics;
pub mod error;
pub mod fields;
pub mod integrate;
pub mod models;
pub mod operators;
pub mod quad;
pub mod sample;

pub use connection::{
    christoffel_inhomogeneous_term, pull_tensor21, pullback_metric, ChartMap, ChristoffelEval,
    DotNabla, ExtendedConnection,
};
pub use dual::{Dual, Dual1, Dual2, Real};
pub use dynamics::{
    embedded_length, flow, flow_tangent, forced_geodesic, forced_geodesic_signed, functionals,
    geodesic_dotnabla, geodesic_metric, geodesic_suspension, kinetic_energy_defect,
    length_critical_residual, mechanical_energy, parallel_transport, CurvePath, FunctionalReport,
    TrajSample, Trajectory,
};
pub use error::{GeoResult, GeomError};
pub use fields::{
    CovectorField, EndomorphismField, Event, MetricField, MetricProvenance, Rank3, ScalarField,
    TangentVector, TimeDepVectorField,
};
pub use integrate::{IntegratorConfig, Method};
pub use models::{
    builtin, circle_rotation_model, circle_scaling_model, conformal_plane_model, euclidean_model,
    induced_metric, pendulum_metric, pendulum_metric_autodiff, pendulum_model, pendulum_potential,
    validate_model, Adjudication, DenomCandidate, EmbeddingFamily, MassSchedule, ModelBundle,
    PendulumParams, PendulumPrinted, ReportRow, ValidationReport, WCandidate, BUILTIN_MODELS,
};
pub use operators::{
    bracket_probe, bracket_probe_with_tol, lie_derivative_scalar, lie_derivative_vector, suspend,
    td_bracket, torsion_loop_probe, torsion_loop_probe_with_tol, torsion_operator,
    torsion_operator_checked, torsion_via_dotnabla, vertical_torsion_check, ProbeResult,
};
pub use sample::SampleDomain;
