//! The FCN-401 and FCN-785 subharmonic-period classifiers: architecture,
//! training, evaluation and recording analysis.

mod arch;
mod eval;
mod model;
mod report;
mod train;

pub use arch::{ConvSpec, FcnSpec, FcnVariant, HOP, NUM_CLASSES};
pub use eval::{
    classify_recording, classify_signal, evaluate, evaluate_examples, Classification, Evaluation,
    DEFAULT_SHR_BIN_DB, SPECTROGRAM_HOP, SPECTROGRAM_WINDOW,
};
pub use model::{build_fcn, BatchNormConfig, FcnModel};
pub use report::{
    accuracy_by_shr, accuracy_vs_fo, fo_table_csv, scores_csv, shr_table_csv, AccuracyBin,
    ConfusionMatrix, FoTrend, LinearFit, SignalScore, SnapshotReport, SHR_RANGE,
};
pub use train::{
    batch_tensor, load_examples, metrics_csv, one_hot_targets, train, train_examples,
    write_metrics_csv, EpochMetrics, Example, TrainConfig, TrainOutcome,
};
