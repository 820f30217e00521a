use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// 1-based ranks with ties sharing the average of the positions they occupy.
pub fn average_ranks(xs: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..xs.len()).collect();
    order.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]));
    let mut ranks = vec![0.0; xs.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && xs[order[j + 1]] == xs[order[i]] {
            j += 1;
        }
        // positions i..=j (0-based) share rank ((i+1)+(j+1))/2
        let r = (i + j + 2) as f64 / 2.0;
        for &o in &order[i..=j] {
            ranks[o] = r;
        }
        i = j + 1;
    }
    ranks
}

/// Pearson correlation; 0 when either side has zero variance.
pub fn pearson(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::shape("pearson", a.len(), b.len()));
    }
    if a.is_empty() {
        return Err(Error::Empty("correlation inputs"));
    }
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        let (dx, dy) = (x - ma, y - mb);
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    if saa == 0.0 || sbb == 0.0 {
        return Ok(0.0);
    }
    Ok((sab / (saa.sqrt() * sbb.sqrt())).clamp(-1.0, 1.0))
}

/// Spearman rank correlation with average ranks for ties.
pub fn spearman(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::shape("spearman", a.len(), b.len()));
    }
    pearson(&average_ranks(a), &average_ranks(b))
}

/// Error-uncertainty correlation: Spearman between per-sample squared error
/// and predicted variance.
pub fn euc(errors: &[f64], uncertainties: &[f64]) -> Result<f64> {
    let sq: Vec<f64> = errors.iter().map(|e| e * e).collect();
    spearman(&sq, uncertainties)
}

/// Mann–Whitney statistic: pairs with the OOD score above the ID score count
/// 1 and ties count ½. Exact for inputs below 2⁵² pairs.
pub fn mann_whitney_u(id: &[f64], ood: &[f64]) -> f64 {
    let mut all: Vec<f64> = Vec::with_capacity(id.len() + ood.len());
    all.extend_from_slice(ood);
    all.extend_from_slice(id);
    let ranks = average_ranks(&all);
    // ranks are multiples of ½, so the sum is exact
    let r_ood: f64 = ranks[..ood.len()].iter().sum();
    let n = ood.len() as f64;
    r_ood - n * (n + 1.0) / 2.0
}

/// Probability that a random OOD score exceeds a random ID score (ties ½).
///
/// Computed from whichever of the two complementary statistics is smaller, so
/// that `auroc(a, b) + auroc(b, a)` is exactly 1.
pub fn auroc(id: &[f64], ood: &[f64]) -> Result<f64> {
    if id.is_empty() || ood.is_empty() {
        return Err(Error::Empty("AUROC score sets"));
    }
    let pairs = id.len() as f64 * ood.len() as f64;
    let u = mann_whitney_u(id, ood);
    let rest = pairs - u;
    Ok(if u <= rest { u / pairs } else { 1.0 - rest / pairs })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RocPoint {
    pub threshold: f64,
    pub fpr: f64,
    pub tpr: f64,
}

/// ROC polyline with OOD as the positive class, from (0,0) to (1,1). Tied
/// scores form a single vertex.
pub fn roc_curve(id: &[f64], ood: &[f64]) -> Result<Vec<RocPoint>> {
    if id.is_empty() || ood.is_empty() {
        return Err(Error::Empty("ROC score sets"));
    }
    let mut scored: Vec<(f64, bool)> = ood.iter().map(|&s| (s, true)).chain(id.iter().map(|&s| (s, false))).collect();
    scored.sort_by(|a, b| b.0.total_cmp(&a.0));
    let (np, nn) = (ood.len() as f64, id.len() as f64);
    let mut pts = vec![RocPoint {
        threshold: f64::INFINITY,
        fpr: 0.0,
        tpr: 0.0,
    }];
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut i = 0;
    while i < scored.len() {
        let t = scored[i].0;
        while i < scored.len() && scored[i].0 == t {
            if scored[i].1 {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        pts.push(RocPoint {
            threshold: t,
            fpr: fp as f64 / nn,
            tpr: tp as f64 / np,
        });
    }
    Ok(pts)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_values() {
        assert_eq!(auroc(&[0.1, 0.3], &[0.2, 0.4]).unwrap(), 0.75);
        assert_eq!(auroc(&[0.0, 0.1], &[1.0, 2.0]).unwrap(), 1.0);
        assert_eq!(auroc(&[1.0, 1.0], &[1.0]).unwrap(), 0.5);
        assert!((euc(&[1.0, 2.0, 3.0], &[3.0, 1.0, 2.0]).unwrap() + 0.5).abs() < 1e-12);
        assert_eq!(spearman(&[1.0, 2.0, 3.0], &[2.0, 2.0, 2.0]).unwrap(), 0.0);
        assert_eq!(average_ranks(&[3.0, 1.0, 3.0, 2.0]), vec![3.5, 1.0, 3.5, 2.0]);
    }

    #[test]
    fn roc_trapezoid_equals_auroc() {
        let id = [0.1, 0.4, 0.35, 0.8, 0.4];
        let ood = [0.4, 0.9, 0.7, 0.2];
        let pts = roc_curve(&id, &ood).unwrap();
        let area: f64 = pts.windows(2).map(|w| (w[1].fpr - w[0].fpr) * (w[1].tpr + w[0].tpr) / 2.0).sum();
        assert!((area - auroc(&id, &ood).unwrap()).abs() < 1e-12);
        let last = pts.last().unwrap();
        assert_eq!((last.fpr, last.tpr), (1.0, 1.0));
    }
}
