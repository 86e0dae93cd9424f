//! Numerical laboratory for Frobenius-Rieffel norms, tau-preserving
//! conditional expectations, and the induced L-seminorms on ladders of
//! finite-dimensional C*-algebras (Effros-Shen and UHF), together with
//! the Monge-Kantorovich metrics and propinquity-style bounds they
//! generate.

pub mod algebra;
pub mod error;
pub mod ladder;
pub mod metric;
pub mod report;
pub mod sample;
pub mod seminorm;
pub mod trace;
pub mod verify;

pub use algebra::{AlgebraShape, Element, ElementJson, Embedding};
pub use error::{Error, Result};
pub use ladder::{
    baire_distance, cf_expand, es_level, explicit_kappa, trace_floor_kappa, uhf_dim, uhf_level,
    BaireSequence, ContinuedFraction, ConvergentTable, EffrosShenLevel, EsLadder, UHFLevel,
    UhfLadder, DEFAULT_DIM_BUDGET, GOLDEN_CONJUGATE,
};
pub use metric::{
    approximation_witness, es_propinquity_bound, kantorovich_distance, kantorovich_lp_oracle,
    theta_continuity_experiment, uhf_locality_check, uhf_propinquity_bound, KantorovichBudget,
    KantorovichResult, KantorovichStatus, PropinquityBound, State,
};
pub use report::{CheckReport, PropertyCheck};
pub use seminorm::{
    check_quasi_leibniz, check_strongly_leibniz, sharp_constant_estimate, tunnel_seminorm,
    BlockSelection, FrNorm, LSeminorm, LSeminormRung, LeibnizParams,
};
pub use trace::{
    conditional_expectation, matrix_units, verify_tomiyama, ConditionalExpectation, TraceState,
};
pub use verify::{run_suite, SuiteOptions, SQRT2_MINUS_1, SUITE_NAMES};
