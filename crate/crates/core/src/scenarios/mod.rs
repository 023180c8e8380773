//! Packaged experiments: the two counterexamples, normal and quantile
//! regression, and finite mixture models.

pub mod example1;
pub mod example2;
pub mod mixture;
pub mod regression;

pub use example1::{example1_family, example1_report, Example1Row};
pub use example2::{
    example2_family, example2_lower_bound, example2_simulate, Example2Series, Example2State,
};
pub use mixture::{mixture_scenario, MixtureScenario, MixtureSpec, TestFunction};
pub use regression::{
    ald_ratio_bound_test, build_regression_scenario, RegressionConfig, RegressionKind,
    RegressionScenario,
};
