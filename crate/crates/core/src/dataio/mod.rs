//! Loading, cleaning, aggregation and normalization of the feature table,
//! plus the synthetic fixture generator.

mod aggregate;
mod catalog;
mod clean;
mod csvio;
mod normalize;
mod synth;
mod table;

pub use aggregate::{aggregate_daily, flow_deviation, TargetAggregation};
pub use catalog::{
    capacity_column, feature_names, Category, FeatureCatalog, FeatureId, FeatureRecord, FIRST_FLOW,
    FIRST_FLOW_DEVIATION, N_BASE_FEATURES, N_FEATURES, N_INTERCONNECTORS, TARGET,
};
pub use clean::{clean, interpolate};
pub use csvio::{load_csv, read_csv, schema_columns, to_csv_string, write_csv};
pub use normalize::{apply_normalizer, fit_normalizer, invert_normalizer, ColumnRange, NormalizationParams};
pub use synth::{synth_generate, SynthConfig, SynthMeta, SynthOutput};
pub use table::{Granularity, Stamp, TimeSeriesTable};
