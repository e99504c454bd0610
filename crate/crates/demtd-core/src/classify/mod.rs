//! Classification harness: random forest with GINI impurity, metrics,
//! forward-step feature selection, repeated stratified two-fold
//! cross-validation, root-power x gray-level grid search, and Welch
//! t-tests over prediction scores. Every stochastic step is a pure
//! function of the master seed.

mod cv;
mod forest;
mod fsfs;
mod metrics;
mod ttest;

pub use cv::{cross_validate, grid_search, CvConfig, CvResult, GridCell, GridResult, LesionSample};
pub use forest::{predict_rf, train_rf, ForestModel, ForestParams};
pub use fsfs::{fsfs, FsfsConfig};
pub use metrics::{auc_mann_whitney, metrics, Metrics};
pub use ttest::{ttest_scores, TTestResult};

use crate::error::{Error, Result};

/// Labeled sample collection with a uniform feature dimension.
#[derive(Clone, Debug)]
pub struct Dataset {
    features: Vec<Vec<f64>>,
    labels: Vec<u8>,
    dim: usize,
}

impl Dataset {
    pub fn new(features: Vec<Vec<f64>>, labels: Vec<u8>) -> Result<Dataset> {
        if features.is_empty() {
            return Err(Error::EmptyTrainSet);
        }
        if features.len() != labels.len() {
            return Err(Error::BadParam(format!(
                "{} feature rows but {} labels",
                features.len(),
                labels.len()
            )));
        }
        let dim = features[0].len();
        if dim == 0 {
            return Err(Error::BadParam("zero-dimensional features".into()));
        }
        for row in &features {
            if row.len() != dim {
                return Err(Error::FeatureDimMismatch {
                    expected: dim,
                    actual: row.len(),
                });
            }
            if row.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite("dataset features".into()));
            }
        }
        if labels.iter().any(|&l| l > 1) {
            return Err(Error::BadParam("labels must be 0 or 1".into()));
        }
        Ok(Dataset {
            features,
            labels,
            dim,
        })
    }

    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn features(&self) -> &[Vec<f64>] {
        &self.features
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    pub fn sample(&self, i: usize) -> (&[f64], u8) {
        (&self.features[i], self.labels[i])
    }

    pub fn has_both_classes(&self) -> bool {
        self.labels.contains(&0) && self.labels.contains(&1)
    }

    /// Row subset by index (indices may repeat, e.g. bootstrap draws).
    pub fn subset(&self, indices: &[usize]) -> Dataset {
        Dataset {
            features: indices.iter().map(|&i| self.features[i].clone()).collect(),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            dim: self.dim,
        }
    }

    /// Column (feature) subset, preserving row order.
    pub fn select_features(&self, feature_indices: &[usize]) -> Dataset {
        Dataset {
            features: self
                .features
                .iter()
                .map(|row| feature_indices.iter().map(|&f| row[f]).collect())
                .collect(),
            labels: self.labels.clone(),
            dim: feature_indices.len(),
        }
    }
}
