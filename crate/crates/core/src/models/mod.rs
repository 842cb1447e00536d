//! The fourteen-entry model registry, the NARMAX benchmark and the per-fold
//! training and forecasting pipeline.

mod narmax;
mod pipeline;
mod registry;

pub use narmax::{narmax_fit, NarmaxModel, NarmaxOrder, ELS_MAX_ITERATIONS, ELS_TOLERANCE};
pub use pipeline::{
    bundle_file_name, fold_mask, predict, predict_rows, train_model, train_model_cached, walk_forward, FoldForecast,
    MaskCache, ModelMeta, ModelParameters, NarmaxGrid, PipelineConfig, TrainedModel, SELECTOR_STREAM, TRAIN_STREAM,
};
pub use registry::{
    build, build_named, build_with, parse_model_list, registry, ArchSizes, Architecture, EncoderKind, ModelId,
    ModelSpec,
};
