//! Large-scale fading: segmented path loss and shadow fading.

pub mod corpus;
pub mod mlp;
pub mod pathloss;
pub mod shadow;

pub use corpus::{generate_ngs_corpus, NgsCorpusConfig};
pub use mlp::{predict_ngs_pl, train_mlp, MlpModel, NgsPrediction, PlSample, TrainingConfig};
pub use pathloss::{fsl_path_loss, BreakpointCache, LinkGeometry, PlBranch, PlBreakpoints, PlValue, SegmentedPathLoss};
pub use shadow::{fit_shadow_fading, sf_pdf, ShadowFadingParams};
