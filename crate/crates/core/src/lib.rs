//! Spectral and dynamical invariants of finitely generated subgroups of
//! SL(n, R): Cartan and Jordan projections, limit cones, growth exponents,
//! ping-pong certificates, and flag limit sets, with an exact rational
//! arithmetic layer underneath the floating point one.

pub mod cone;
pub mod config;
pub mod criteria3;
pub mod exactmat;
pub mod flags;
pub mod growth;
pub mod random;
pub mod spectral;
pub mod words;
pub mod xfloat;

pub use cone::{
    boundary_test, cone_estimate, ratio_check, BoundaryVerdict, ConeError, ConeEstimate,
    RatioReport, Ray,
};
pub use config::Tolerances;
pub use criteria3::{
    find_commuting_pair, find_complex_spectrum_witness, find_sl2z_block, run_criteria,
    zariski_density_heuristic, CommutingCase, CommutingPairWitness, ComplexSpectrumWitness,
    CriteriaError, CriteriaReport, DensityReport, DensityVerdict, SearchOutcome, Sl2BlockWitness,
    Verdict,
};
pub use exactmat::{CharPoly, FiniteOrder, RationalMatrix};
pub use flags::{
    contraction_diagnostic, fixed_flags, flag_distance, limit_set_sample, projections_sl3,
    transversality_margin, Flag, FlagError, FixedFlags, LimitPoint, LimitSetSample,
    TransversalityReport,
};
pub use growth::{
    anosov_growth_check, condition31_audit, critical_exponent, key_lemma_audit, pingpong_certify,
    select_power, ConditionAudit, ExponentEstimate, GrowthCheck, GrowthError, KeyLemmaReport,
    PingPongCertificate, PowerSelection, StageInput,
};
pub use spectral::{
    cartan_projection, classify, complex_invariant_pair, jordan_projection, log_operator_norm,
    operator_norm, AVector, InvariantPair, SpectralClass, SpectralError, DEFAULT_ORDER_BOUND,
};
pub use words::{enumerate, evaluate, GeneratorSet, Letter, Sign, Word, WordError};
