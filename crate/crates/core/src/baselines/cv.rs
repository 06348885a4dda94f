use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::eval::{classification_report, ClassificationReport, EvalReport};
use crate::seed::{stream_rng, Rng};

/// Assigns rows to `k` folds. Rows are shuffled within each class, laid out
/// class by class, and dealt round-robin, so fold sizes differ by at most one
/// and each fold holds within one row of its share of every class. When a
/// class has fewer than `k` rows the deal runs over all rows instead.
pub fn kfold_indices(labels: &[usize], k: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    if k < 2 {
        return Err(Error::Config(format!("cross-validation needs k >= 2, got {k}")));
    }
    if labels.len() < k {
        return Err(Error::Config(format!("{} rows cannot fill {k} folds", labels.len())));
    }
    let mut rng: Rng = stream_rng(seed, "cv.folds");
    let classes = labels.iter().copied().max().unwrap_or(0) + 1;
    let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); classes];
    for (i, &l) in labels.iter().enumerate() {
        by_class[l].push(i);
    }
    let stratified = by_class.iter().all(|c| c.is_empty() || c.len() >= k);
    let order: Vec<usize> = if stratified {
        by_class
            .iter_mut()
            .flat_map(|c| {
                c.shuffle(&mut rng);
                c.clone()
            })
            .collect()
    } else {
        log::warn!("a class has fewer than {k} rows; folds are not stratified");
        let mut all: Vec<usize> = (0..labels.len()).collect();
        all.shuffle(&mut rng);
        all
    };
    let mut folds = vec![Vec::new(); k];
    for (p, i) in order.into_iter().enumerate() {
        folds[p % k].push(i);
    }
    folds.iter_mut().for_each(|f| f.sort_unstable());
    Ok(folds)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CvOutcome {
    pub report: EvalReport,
    pub folds: Vec<ClassificationReport>,
}

/// Runs `fit_predict(fold, train, test)`, which returns a predicted class
/// and a troll score per test row, over every fold, and summarizes the fold
/// metrics with mean and sample standard deviation.
pub fn cross_validate<F>(labels: &[usize], k: usize, seed: u64, mut fit_predict: F) -> Result<CvOutcome>
where
    F: FnMut(usize, &[usize], &[usize]) -> Result<Vec<(usize, f64)>>,
{
    let folds = kfold_indices(labels, k, seed)?;
    let mut reports = Vec::with_capacity(k);
    for (f, test) in folds.iter().enumerate() {
        let train: Vec<usize> = folds.iter().enumerate().filter(|&(g, _)| g != f).flat_map(|(_, rows)| rows.iter().copied()).collect();
        let mut train = train;
        train.sort_unstable();
        let out = fit_predict(f, &train, test)?;
        if out.len() != test.len() {
            return Err(Error::Shape(format!("{} predictions for {} test rows", out.len(), test.len())));
        }
        let pred: Vec<usize> = out.iter().map(|p| p.0).collect();
        let scores: Vec<f64> = out.iter().map(|p| p.1).collect();
        let truth: Vec<usize> = test.iter().map(|&i| labels[i]).collect();
        reports.push(classification_report(&pred, &truth, Some(&scores))?);
    }
    Ok(CvOutcome { report: EvalReport::from_folds(&reports), folds: reports })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn folds_partition_rows() {
        let labels: Vec<usize> = (0..10).map(|i| usize::from(i < 4)).collect();
        let folds = kfold_indices(&labels, 2, 1).unwrap();
        assert_eq!(folds.iter().map(Vec::len).collect::<Vec<_>>(), vec![5, 5]);
        let mut all: Vec<usize> = folds.concat();
        all.sort_unstable();
        assert_eq!(all, (0..10).collect::<Vec<_>>());
        assert!(kfold_indices(&labels, 11, 1).is_err());
    }

    #[test]
    fn perfect_stub_has_zero_spread() {
        let labels: Vec<usize> = (0..40).map(|i| usize::from(i % 4 == 0)).collect();
        let out = cross_validate(&labels, 10, 3, |_, _, test| Ok(test.iter().map(|&i| (labels[i], labels[i] as f64)).collect())).unwrap();
        let f1 = out.report.metric("f1").unwrap();
        assert_eq!((f1.mean, f1.std), (1.0, 0.0));
    }
}
