//! Repeated stratified two-fold cross-validation and the root-power x
//! gray-level grid search.

use rayon::prelude::*;
use serde::Serialize;

use super::forest::{predict_rf, train_rf, ForestParams};
use super::fsfs::{fsfs, FsfsConfig};
use super::metrics::{metrics, Metrics};
use super::Dataset;
use crate::error::{Error, Result};
use crate::glcm::{demtd_features, kl_transform_apply, kl_transform_fit, DESCRIPTOR_LEN};
use crate::invariants::MapParams;
use crate::rng::{derive_seed, Rng};
use crate::volume::{MaskROI, Volume3D};

/// Cross-validation configuration. Feature selection and the KL transform,
/// when enabled, are fitted inside each training fold only.
#[derive(Clone, Debug)]
pub struct CvConfig {
    pub repeats: usize,
    pub threshold: f64,
    pub seed: u64,
    pub fsfs: Option<FsfsConfig>,
    pub kl: bool,
}

impl Default for CvConfig {
    fn default() -> Self {
        CvConfig {
            repeats: 50,
            threshold: 0.5,
            seed: 0,
            fsfs: None,
            kl: false,
        }
    }
}

/// Mean and standard deviation across repeats, plus the per-repeat values.
#[derive(Clone, Debug, Serialize)]
pub struct CvResult {
    pub auc_mean: f64,
    pub auc_std: f64,
    pub acc_mean: f64,
    pub acc_std: f64,
    pub sn_mean: f64,
    pub sn_std: f64,
    pub sp_mean: f64,
    pub sp_std: f64,
    pub repeats: usize,
    pub seed: u64,
    /// Distinct features selected in any fold, ascending (FSFS runs only).
    pub selected_features: Vec<usize>,
    #[serde(skip)]
    pub per_repeat: Vec<Metrics>,
    /// Pooled per-sample scores of the final repeat, in dataset order
    /// (inputs to score-level t-tests).
    #[serde(skip)]
    pub last_repeat_scores: Vec<f64>,
}

fn mean_std(values: impl Iterator<Item = f64> + Clone, n: usize) -> (f64, f64) {
    let mean = values.clone().sum::<f64>() / n as f64;
    if n < 2 {
        return (mean, 0.0);
    }
    let var = values.map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64;
    (mean, var.sqrt())
}

/// Stratified split into two folds with class counts as even as possible.
/// Returns (fold_a, fold_b) index lists.
fn stratified_halves(labels: &[u8], rng: &mut Rng) -> (Vec<usize>, Vec<usize>) {
    let mut a = Vec::new();
    let mut b = Vec::new();
    for class in 0..2u8 {
        let mut idx: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
        rng.shuffle(&mut idx);
        let half = idx.len().div_ceil(2);
        a.extend_from_slice(&idx[..half]);
        b.extend_from_slice(&idx[half..]);
    }
    a.sort_unstable();
    b.sort_unstable();
    (a, b)
}

/// Train on one fold, score the other, with per-fold feature selection and
/// KL fitting when configured. Writes scores into `scores` at test indices.
#[allow(clippy::too_many_arguments)]
fn score_fold(
    data: &Dataset,
    train_idx: &[usize],
    test_idx: &[usize],
    params: &ForestParams,
    cfg: &CvConfig,
    fold_seed: u64,
    scores: &mut [f64],
    selected_out: &mut Vec<usize>,
) -> Result<()> {
    let mut train = data.subset(train_idx);
    let mut test = data.subset(test_idx);

    if cfg.kl {
        if data.dim() != DESCRIPTOR_LEN {
            return Err(Error::BadParam(format!(
                "KL transform expects {DESCRIPTOR_LEN}-dimensional descriptors, got {}",
                data.dim()
            )));
        }
        let basis = kl_transform_fit(train.features())?;
        let tf: Result<Vec<Vec<f64>>> = train
            .features()
            .iter()
            .map(|v| kl_transform_apply(&basis, v))
            .collect();
        train = Dataset::new(tf?, train.labels().to_vec())?;
        let tf: Result<Vec<Vec<f64>>> = test
            .features()
            .iter()
            .map(|v| kl_transform_apply(&basis, v))
            .collect();
        test = Dataset::new(tf?, test.labels().to_vec())?;
    }

    if let Some(fsfs_cfg) = &cfg.fsfs {
        let selection = fsfs(&train, params, fsfs_cfg, derive_seed(fold_seed, 0x5e1ec7))?;
        if !selection.selected.is_empty() {
            train = train.select_features(&selection.selected);
            test = test.select_features(&selection.selected);
            selected_out.extend_from_slice(&selection.selected);
        }
    }

    let model = train_rf(
        &train,
        &ForestParams {
            seed: fold_seed,
            ..*params
        },
    )?;
    for (row, &orig) in test.features().iter().zip(test_idx) {
        scores[orig] = predict_rf(&model, row)?;
    }
    Ok(())
}

/// Repeated stratified two-fold cross-validation: per repeat, train on each
/// half and score the other, pool the scores, compute metrics; report
/// mean +- std across repeats.
pub fn cross_validate(data: &Dataset, params: &ForestParams, cfg: &CvConfig) -> Result<CvResult> {
    let n_pos = data.labels().iter().filter(|&&l| l == 1).count();
    let n_neg = data.len() - n_pos;
    if n_pos < 2 || n_neg < 2 {
        return Err(Error::TooFewSamples {
            needed: 2,
            actual: n_pos.min(n_neg),
        });
    }
    if cfg.repeats == 0 {
        return Err(Error::BadParam("repeats must be >= 1".into()));
    }

    // (metrics, pooled scores, features selected in either fold)
    type RepeatOutcome = (Metrics, Vec<f64>, Vec<usize>);
    let repeat_results: Vec<Result<RepeatOutcome>> = (0..cfg.repeats)
        .into_par_iter()
        .map(|r| {
            let repeat_seed = derive_seed(cfg.seed, r as u64);
            let mut rng = Rng::new(repeat_seed);
            let (fold_a, fold_b) = stratified_halves(data.labels(), &mut rng);
            let mut scores = vec![0.0; data.len()];
            let mut selected = Vec::new();
            score_fold(
                data,
                &fold_a,
                &fold_b,
                params,
                cfg,
                derive_seed(repeat_seed, 1),
                &mut scores,
                &mut selected,
            )?;
            score_fold(
                data,
                &fold_b,
                &fold_a,
                params,
                cfg,
                derive_seed(repeat_seed, 2),
                &mut scores,
                &mut selected,
            )?;
            let m = metrics(&scores, data.labels(), cfg.threshold)?;
            Ok((m, scores, selected))
        })
        .collect();

    let mut per_repeat = Vec::with_capacity(cfg.repeats);
    let mut selected_features = Vec::new();
    let mut last_scores = Vec::new();
    for r in repeat_results {
        let (m, scores, selected) = r?;
        per_repeat.push(m);
        selected_features.extend(selected);
        last_scores = scores;
    }
    selected_features.sort_unstable();
    selected_features.dedup();

    let n = per_repeat.len();
    let (auc_mean, auc_std) = mean_std(per_repeat.iter().map(|m| m.auc), n);
    let (acc_mean, acc_std) = mean_std(per_repeat.iter().map(|m| m.acc), n);
    let (sn_mean, sn_std) = mean_std(per_repeat.iter().map(|m| m.sn), n);
    let (sp_mean, sp_std) = mean_std(per_repeat.iter().map(|m| m.sp), n);
    Ok(CvResult {
        auc_mean,
        auc_std,
        acc_mean,
        acc_std,
        sn_mean,
        sn_std,
        sp_mean,
        sp_std,
        repeats: n,
        seed: cfg.seed,
        selected_features,
        per_repeat,
        last_repeat_scores: last_scores,
    })
}

/// One labeled lesion: a cropped volume with its mask.
#[derive(Clone, Debug)]
pub struct LesionSample {
    pub id: String,
    pub label: u8,
    pub volume: Volume3D,
    pub mask: MaskROI,
}

/// One grid cell outcome.
#[derive(Clone, Debug, Serialize)]
pub struct GridCell {
    pub root_power: u32,
    pub levels: u32,
    pub auc_mean: f64,
    pub auc_std: f64,
    pub acc_mean: f64,
    pub sn_mean: f64,
    pub sp_mean: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct GridResult {
    pub cells: Vec<GridCell>,
    /// Index into `cells` of the highest mean AUC (first on ties, scanning
    /// root powers outer, gray levels inner).
    pub best: usize,
}

/// Brute-force search over root powers and gray levels: per cell, extract
/// descriptors for every lesion and cross-validate them.
pub fn grid_search(
    lesions: &[LesionSample],
    root_powers: &[u32],
    levels_list: &[u32],
    map_params: &MapParams,
    forest_params: &ForestParams,
    cv: &CvConfig,
) -> Result<GridResult> {
    if lesions.is_empty() {
        return Err(Error::EmptyTrainSet);
    }
    if root_powers.is_empty() || levels_list.is_empty() {
        return Err(Error::BadParam("empty grid axis".into()));
    }
    let pairs: Vec<(u32, u32)> = root_powers
        .iter()
        .flat_map(|&n| levels_list.iter().map(move |&l| (n, l)))
        .collect();
    let cells: Vec<Result<GridCell>> = pairs
        .par_iter()
        .map(|&(n, levels)| {
            let mut features = Vec::with_capacity(lesions.len());
            let mut labels = Vec::with_capacity(lesions.len());
            for lesion in lesions {
                features.push(demtd_features(
                    &lesion.volume,
                    &lesion.mask,
                    n,
                    levels,
                    map_params,
                )?);
                labels.push(lesion.label);
            }
            let data = Dataset::new(features, labels)?;
            let result = cross_validate(&data, forest_params, cv)?;
            Ok(GridCell {
                root_power: n,
                levels,
                auc_mean: result.auc_mean,
                auc_std: result.auc_std,
                acc_mean: result.acc_mean,
                sn_mean: result.sn_mean,
                sp_mean: result.sp_mean,
            })
        })
        .collect();
    let cells: Result<Vec<GridCell>> = cells.into_iter().collect();
    let cells = cells?;
    let mut best = 0;
    for (i, c) in cells.iter().enumerate() {
        if c.auc_mean > cells[best].auc_mean {
            best = i;
        }
    }
    Ok(GridResult { cells, best })
}
