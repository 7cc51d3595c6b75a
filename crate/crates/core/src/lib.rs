//! Simulation and analysis of hidden-variable models of the singlet
//! experiment in which the hidden variable may depend on the measurement
//! settings.
//!
//! * [`sphere`]: unit vectors, uniform sampling, equal-area grids.
//! * [`causal`]: the causal DAGs of the one- and three-hidden-variable
//!   schemes and d-separation.
//! * [`models`]: the baseline and measurement-dependent models.
//! * [`estimation`]: seeded, parallel Monte Carlo estimates.
//! * [`info`]: discretized mutual information between `λ` and the settings.

pub mod causal;
pub mod error;
pub mod estimation;
pub mod info;
pub mod models;
pub mod sphere;

pub use causal::{
    d_separated, markov_identities, mic_holds, Dag, Figure, IndependenceQuery, Var, VarSet,
};
pub use error::{Error, Result};
pub use estimation::{
    chsh, correlation, derive_seed, estimate_joint, scan_angles, ChshResult, ChshSettings,
    EstimationResult, JointTable2x2, ScanRow,
};
pub use info::{
    discretize_conditional, mutual_information, paper_entropy_difference, shannon_entropy,
    three_hidden_report, verify_inequality, Convention, DiscreteDistribution, InequalityVerdict,
    OmegaPairs, RelaxationReport, SettingPair, SettingsPrior,
};
pub use models::{
    analytic_correlation, analytic_table, lambda_density, region_weight_plus, response_a,
    response_b, run_trial, sample_hidden, singlet_table, HiddenState, ModelId, Outcome,
    OutcomePair,
};
pub use sphere::grid::{equal_area_grid, Quadrature, SphereGrid};
pub use sphere::{angle_between, dot, sample_uniform_sphere, sign_pm, Angle, UnitVector3};
