use crate::error::{Error, Result};

/// Exact area under the ROC curve by the rank-sum statistic, ties counted ½.
///
/// Ranks are kept doubled so midranks stay integral and the only rounding is
/// the final division.
pub fn auc(scores: &[f64], labels: &[bool]) -> Result<f64> {
    if scores.len() != labels.len() {
        return Err(Error::DimensionMismatch { expected: labels.len(), found: scores.len() });
    }
    if scores.iter().any(|s| s.is_nan()) {
        return Err(Error::invalid("AUC scores contain NaN"));
    }
    let n_pos = labels.iter().filter(|&&l| l).count() as u128;
    let n_neg = labels.len() as u128 - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::SingleClass);
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    let mut rank2_pos: u128 = 0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        // ranks i+1..=j+1 share the midrank (i+j+2)/2
        let pos_in_group = order[i..=j].iter().filter(|&&k| labels[k]).count() as u128;
        rank2_pos += pos_in_group * (i + j + 2) as u128;
        i = j + 1;
    }
    let u2 = rank2_pos - n_pos * (n_pos + 1);
    Ok(u2 as f64 / (2 * n_pos * n_neg) as f64)
}
