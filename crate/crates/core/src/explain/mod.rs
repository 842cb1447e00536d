//! Kernel SHAP over a tuned SVR surrogate, an exact Shapley reference, and
//! exports for importance and dependence plots.

mod export;
mod shap;
mod surrogate;
mod workflow;

pub use export::{
    default_interaction, dependence_export, importance_ranking, DependenceRow, DependenceTable, Importance,
};
pub use shap::{
    coalition_value, exact_shapley, explain_rows, kernel_shap, shapley_kernel, BackgroundSet, Predictor,
    ShapExplanation, MAX_EXACT_FEATURES,
};
pub use surrogate::{fit_surrogate_svr, mse, GridScore, Surrogate, SurrogateGrid};
pub use workflow::{explain_table, ExplainConfig, ExplainReport};
