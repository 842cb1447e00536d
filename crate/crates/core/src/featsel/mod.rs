//! Feature selection: Pearson filter, PSO-ELM and GA-ELM wrappers, RFE-SVR
//! and Lasso, each producing a fixed-cardinality [`FeatureMask`].

mod data;
mod elm;
mod ga;
mod lasso;
mod mask;
mod pearson;
mod pso;
mod rfe;
mod select;
mod svr;

pub use data::SelectionData;
pub use elm::{elm_eval, elm_fit, ElmFitness, ElmModel, DEFAULT_HIDDEN};
pub use ga::{ga_run, random_subset, repair, GaConfig, GaResult, Population};
pub use lasso::{lasso_fit, lasso_select, soft_threshold, standardize, DEFAULT_LAMBDA};
pub use mask::{checkmark_table, FeatureMask, SelectorKind};
pub use pearson::{pearson, pearson_select};
pub use pso::{binarize, pso_binary, pso_minimize, PsoConfig, PsoResult, SwarmState};
pub use rfe::{rfe_svr_select, RfeConfig, RfeResult};
pub use select::{ga_select, pso_select, run_selector, SelectorConfig, DEFAULT_K};
pub use svr::{svr_fit, svr_primal, SvrModel};
