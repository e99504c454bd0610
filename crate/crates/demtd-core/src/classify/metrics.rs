//! AUC, accuracy, sensitivity, specificity.

use serde::Serialize;

use crate::error::{Error, Result};

/// Classification metrics at a fixed threshold plus the ROC AUC.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct Metrics {
    pub auc: f64,
    pub acc: f64,
    pub sn: f64,
    pub sp: f64,
}

/// Mann-Whitney AUC via the midrank formulation: tied positive-negative
/// pairs count one half. Equivalent to counting concordant pairs directly.
pub fn auc_mann_whitney(scores: &[f64], labels: &[u8]) -> Result<f64> {
    if scores.len() != labels.len() {
        return Err(Error::BadParam("scores/labels length mismatch".into()));
    }
    let n_pos = labels.iter().filter(|&&l| l == 1).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::SingleClass);
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| {
        scores[a]
            .partial_cmp(&scores[b])
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });
    // Midranks over tied score groups; ranks are 1-based.
    let mut rank_sum_pos = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i + 1;
        while j < order.len() && scores[order[j]] == scores[order[i]] {
            j += 1;
        }
        let midrank = (i + 1 + j) as f64 / 2.0;
        for &idx in &order[i..j] {
            if labels[idx] == 1 {
                rank_sum_pos += midrank;
            }
        }
        i = j;
    }
    let u = rank_sum_pos - (n_pos * (n_pos + 1)) as f64 / 2.0;
    Ok(u / (n_pos as f64 * n_neg as f64))
}

/// Metrics at `threshold` (score >= threshold predicts class 1). SN is the
/// true-positive rate on class 1, SP the true-negative rate on class 0.
pub fn metrics(scores: &[f64], labels: &[u8], threshold: f64) -> Result<Metrics> {
    let auc = auc_mann_whitney(scores, labels)?;
    let mut tp = 0usize;
    let mut tn = 0usize;
    let mut n_pos = 0usize;
    let mut n_neg = 0usize;
    for (&s, &l) in scores.iter().zip(labels) {
        let predicted_pos = s >= threshold;
        if l == 1 {
            n_pos += 1;
            if predicted_pos {
                tp += 1;
            }
        } else {
            n_neg += 1;
            if !predicted_pos {
                tn += 1;
            }
        }
    }
    Ok(Metrics {
        auc,
        acc: (tp + tn) as f64 / (n_pos + n_neg) as f64,
        sn: tp as f64 / n_pos as f64,
        sp: tn as f64 / n_neg as f64,
    })
}
