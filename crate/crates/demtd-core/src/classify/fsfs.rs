//! Greedy forward-step feature selection maximizing cross-validated AUC.
//!
//! Candidates are evaluated by stratified k-fold AUC inside the training
//! data only; fold assignments and forest seeds are shared across the
//! candidates of one step so comparisons are paired. Selection stops when
//! the best improvement over the running best falls below epsilon or the
//! feature budget is reached.

use super::forest::{predict_rf, train_rf, ForestParams};
use super::metrics::auc_mann_whitney;
use super::Dataset;
use crate::error::{Error, Result};
use crate::rng::{derive_seed, Rng};

#[derive(Clone, Copy, Debug)]
pub struct FsfsConfig {
    /// Minimum AUC improvement to accept a step.
    pub epsilon: f64,
    /// Maximum number of selected features.
    pub budget: usize,
    /// Inner stratified folds (capped by the smaller class count).
    pub inner_folds: usize,
}

impl Default for FsfsConfig {
    fn default() -> Self {
        FsfsConfig {
            epsilon: 1e-4,
            budget: 30,
            inner_folds: 5,
        }
    }
}

#[derive(Clone, Debug)]
pub struct FsfsResult {
    /// Selected feature indices in acceptance order.
    pub selected: Vec<usize>,
    /// Best cross-validated AUC after each accepted step; strictly
    /// increasing by at least epsilon per step.
    pub auc_trace: Vec<f64>,
}

/// Stratified fold assignment: fold id per sample.
fn fold_assignment(labels: &[u8], folds: usize, rng: &mut Rng) -> Vec<usize> {
    let mut assignment = vec![0usize; labels.len()];
    for class in 0..2u8 {
        let mut idx: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
        rng.shuffle(&mut idx);
        for (k, &i) in idx.iter().enumerate() {
            assignment[i] = k % folds;
        }
    }
    assignment
}

/// Pooled k-fold AUC of the forest restricted to `feature_set`.
fn inner_cv_auc(
    data: &Dataset,
    feature_set: &[usize],
    params: &ForestParams,
    assignment: &[usize],
    folds: usize,
    step_seed: u64,
) -> Result<f64> {
    let restricted = data.select_features(feature_set);
    let mut scores = vec![0.0; data.len()];
    for fold in 0..folds {
        let train_idx: Vec<usize> = (0..data.len()).filter(|&i| assignment[i] != fold).collect();
        let test_idx: Vec<usize> = (0..data.len()).filter(|&i| assignment[i] == fold).collect();
        if test_idx.is_empty() {
            continue;
        }
        let train = restricted.subset(&train_idx);
        if !train.has_both_classes() {
            return Err(Error::SingleClass);
        }
        let model = train_rf(
            &train,
            &ForestParams {
                seed: derive_seed(step_seed, fold as u64),
                ..*params
            },
        )?;
        for &i in &test_idx {
            scores[i] = predict_rf(&model, &restricted.features()[i])?;
        }
    }
    auc_mann_whitney(&scores, data.labels())
}

pub fn fsfs(
    data: &Dataset,
    params: &ForestParams,
    cfg: &FsfsConfig,
    eval_seed: u64,
) -> Result<FsfsResult> {
    if !data.has_both_classes() {
        return Err(Error::SingleClass);
    }
    let n_pos = data.labels().iter().filter(|&&l| l == 1).count();
    let n_neg = data.len() - n_pos;
    let folds = cfg.inner_folds.min(n_pos).min(n_neg);
    if folds < 2 {
        return Err(Error::TooFewSamples {
            needed: 2,
            actual: n_pos.min(n_neg),
        });
    }

    let mut selected: Vec<usize> = Vec::new();
    let mut auc_trace = Vec::new();
    let mut best_so_far = 0.5; // chance-level baseline
    let budget = cfg.budget.min(data.dim());

    while selected.len() < budget {
        let step = selected.len() as u64;
        let step_seed = derive_seed(eval_seed, step);
        let mut rng = Rng::new(step_seed);
        let assignment = fold_assignment(data.labels(), folds, &mut rng);

        let mut step_best: Option<(f64, usize)> = None;
        let mut candidate_set = selected.clone();
        for feature in 0..data.dim() {
            if selected.contains(&feature) {
                continue;
            }
            candidate_set.push(feature);
            let auc = inner_cv_auc(data, &candidate_set, params, &assignment, folds, step_seed)?;
            candidate_set.pop();
            // Strict improvement keeps the lowest feature index on ties.
            if step_best.is_none_or(|(best_auc, _)| auc > best_auc) {
                step_best = Some((auc, feature));
            }
        }
        let Some((auc, feature)) = step_best else {
            break;
        };
        if auc - best_so_far < cfg.epsilon {
            break;
        }
        selected.push(feature);
        auc_trace.push(auc);
        best_so_far = auc;
    }
    Ok(FsfsResult {
        selected,
        auc_trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Rng;

    /// Feature 0 separates perfectly; the rest are noise.
    fn one_informative(n_per_class: usize, dim: usize, seed: u64) -> Dataset {
        let mut rng = Rng::new(seed);
        let mut features = Vec::new();
        let mut labels = Vec::new();
        for class in 0..2u8 {
            for _ in 0..n_per_class {
                let mut row: Vec<f64> = (0..dim).map(|_| rng.next_gaussian()).collect();
                row[0] = class as f64 * 10.0 + rng.next_gaussian();
                features.push(row);
                labels.push(class);
            }
        }
        Dataset::new(features, labels).unwrap()
    }

    fn all_noise(n_per_class: usize, dim: usize, seed: u64) -> Dataset {
        let mut rng = Rng::new(seed);
        let mut features = Vec::new();
        let mut labels = Vec::new();
        for class in 0..2u8 {
            for _ in 0..n_per_class {
                features.push((0..dim).map(|_| rng.next_gaussian()).collect());
                labels.push(class);
            }
        }
        Dataset::new(features, labels).unwrap()
    }

    #[test]
    fn informative_feature_selected_first() {
        let data = one_informative(30, 6, 17);
        let params = ForestParams {
            n_trees: 30,
            seed: 2,
            ..Default::default()
        };
        let result = fsfs(&data, &params, &FsfsConfig::default(), 5).unwrap();
        assert_eq!(result.selected.first(), Some(&0));
    }

    #[test]
    fn noise_features_stop_early() {
        let data = all_noise(40, 5, 23);
        let params = ForestParams {
            n_trees: 30,
            seed: 2,
            ..Default::default()
        };
        let result = fsfs(&data, &params, &FsfsConfig::default(), 6).unwrap();
        assert!(result.selected.len() <= 1, "selected {:?}", result.selected);
    }

    #[test]
    fn trace_is_strictly_increasing() {
        let data = one_informative(25, 8, 31);
        let params = ForestParams {
            n_trees: 30,
            seed: 4,
            ..Default::default()
        };
        let cfg = FsfsConfig {
            budget: 5,
            ..Default::default()
        };
        let result = fsfs(&data, &params, &cfg, 3).unwrap();
        for w in result.auc_trace.windows(2) {
            assert!(w[1] >= w[0] + cfg.epsilon);
        }
        assert!(result.selected.len() <= 5);
    }

    #[test]
    fn deterministic_given_seed() {
        let data = one_informative(20, 6, 41);
        let params = ForestParams {
            n_trees: 20,
            seed: 8,
            ..Default::default()
        };
        let a = fsfs(&data, &params, &FsfsConfig::default(), 11).unwrap();
        let b = fsfs(&data, &params, &FsfsConfig::default(), 11).unwrap();
        assert_eq!(a.selected, b.selected);
        assert_eq!(a.auc_trace, b.auc_trace);
    }

    #[test]
    fn too_few_samples_rejected() {
        let data = Dataset::new(vec![vec![0.0], vec![1.0], vec![2.0]], vec![0, 1, 1]).unwrap();
        assert!(matches!(
            fsfs(&data, &ForestParams::default(), &FsfsConfig::default(), 1),
            Err(Error::TooFewSamples { .. })
        ));
    }
}
