//! Growth, minimum modulus and `m~`-dynamics of entire functions given as
//! canonical products with negative real zeros.

mod balance;
pub mod constructors;
pub mod dynamics;
pub mod error;
pub mod golden;
pub mod growth;
pub mod logdomain;
pub mod modulus;
pub mod product;
pub mod quadrature;

pub use constructors::{
    lower_order_half_bands, minimal_type_bands, realize_bands, regular_function, regular_zeros, BandEnds, BandKind,
    BandSequence, DeltaSpec, DensityRule, EpsSpec, Magnitude, Realization, StepCheck,
};
pub use error::{Error, Result};
pub use logdomain::{log_add_exp, LogRadius, LogValue};
pub use modulus::{brute_force_extrema, m_tilde, m_tilde_profile, ArgMax, MTilde, MtildeCheckpoint, MtildeProfile, ScanSettings};
pub use product::{Band, CountingLaw, EntireProductFunction, EvalSettings, Zero, ZeroDistribution, ZeroLayout};
pub use growth::{
    beurling_verify, build_profile, check_condition_a, check_condition_b, condition_a, condition_b_with, counting_data,
    criterion_forms, criterion_witness, eps_k_at, eps_k_from, main_margin, profile_at, sample_grid, sandwich_check, BeurlingReport, CountingData,
    CriterionForms, CriterionReport, GrowthProfile, GrowthSample, GrowthSummary, SandwichReport, SearchSettings,
};
pub use quadrature::QuadSettings;
pub use dynamics::{
    escape_threshold, iterate_modulus, scan_escape_candidates, trap_check, EscapeScan, MapKind, OrbitRecord,
    OrbitSettings, Verdict, DEFAULT_ESCAPE_LOG,
};
