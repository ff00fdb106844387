//! Classifiers for measuring the utility of anonymized tables.
//!
//! Tables are one-hot encoded ([`encoding`]) and fed to one of five model
//! families, all implemented here: k-nearest neighbours, a CART decision
//! tree, a random forest, AdaBoost over stumps and log-loss gradient
//! boosting. [`cv::grid_search_cv`] picks hyperparameters by stratified
//! k-fold cross-validation and refits the winner.

mod binned;

pub mod adaboost;
pub mod cv;
pub mod encoding;
pub mod error;
pub mod forest;
pub mod gboost;
pub mod knn;
pub mod model;
pub mod tree;

pub use adaboost::AdaBoost;
pub use cv::{
    grid_search_cv, stratified_folds, CvScore, GridSearchResult, ParamGrid, DEFAULT_FOLDS,
};
pub use encoding::{encode, fit_encoder, EncoderState, LabeledMatrix, Strategy};
pub use error::{MlError, Result};
pub use forest::{ForestParams, RandomForest};
pub use gboost::GradientBoosting;
pub use knn::Knn;
pub use model::{fit, Family, Hyperparams, ModelSpec, TrainedModel};
pub use tree::{DecisionTree, Tree};
