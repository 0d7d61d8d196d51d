use rayon::prelude::*;

use super::model::{Classifier, SvmModel};
use super::trainer::{train, TrainConfig};
use crate::data::Dataset;
use crate::error::{CvmError, Result};

/// One-vs-one ensemble: one binary model per unordered class pair.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiClassModel {
    classes: Vec<i32>,
    pairs: Vec<SvmModel>,
}

impl MultiClassModel {
    /// `pairs` must hold exactly one model per unordered pair of `classes`,
    /// each with `class_pair = (smaller, larger)`.
    pub fn new(mut classes: Vec<i32>, pairs: Vec<SvmModel>) -> Result<Self> {
        classes.sort_unstable();
        classes.dedup();
        if classes.len() < 2 {
            return Err(CvmError::invalid("a multi-class model needs at least two classes"));
        }
        let k = classes.len();
        if pairs.len() != k * (k - 1) / 2 {
            return Err(CvmError::invalid(format!(
                "expected {} pair models for {k} classes, got {}",
                k * (k - 1) / 2,
                pairs.len()
            )));
        }
        let mut ordered = Vec::with_capacity(pairs.len());
        let dim = pairs[0].dim();
        for (i, j) in class_pairs(&classes) {
            let found: Vec<&SvmModel> = pairs.iter().filter(|m| m.class_pair() == (i, j)).collect();
            if found.len() != 1 {
                return Err(CvmError::invalid(format!("pair ({i}, {j}) must appear exactly once")));
            }
            if found[0].dim() != dim {
                return Err(CvmError::Dimension {
                    expected: dim,
                    got: found[0].dim(),
                });
            }
            ordered.push(found[0].clone());
        }
        Ok(MultiClassModel { classes, pairs: ordered })
    }

    pub fn classes(&self) -> &[i32] {
        &self.classes
    }

    /// Pair models in canonical order `(c0,c1), (c0,c2), …, (c1,c2), …`.
    pub fn pairs(&self) -> &[SvmModel] {
        &self.pairs
    }

    pub fn into_pairs(self) -> Vec<SvmModel> {
        self.pairs
    }

    pub fn with_dim(&self, dim: usize) -> Result<MultiClassModel> {
        let pairs = self.pairs.iter().map(|m| m.with_dim(dim)).collect::<Result<_>>()?;
        Ok(MultiClassModel {
            classes: self.classes.clone(),
            pairs,
        })
    }

    /// Votes per class, in `classes()` order.
    pub fn votes(&self, x: &[f64]) -> Result<Vec<usize>> {
        let mut votes = vec![0usize; self.classes.len()];
        for m in &self.pairs {
            let label = m.predict_label(x)?;
            let idx = self.classes.binary_search(&label).expect("pair labels are classes");
            votes[idx] += 1;
        }
        Ok(votes)
    }
}

/// Unordered class pairs `(a, b)` with `a < b`, in canonical order.
pub fn class_pairs(classes: &[i32]) -> Vec<(i32, i32)> {
    let mut out = Vec::new();
    for (i, &a) in classes.iter().enumerate() {
        for &b in &classes[i + 1..] {
            out.push((a, b));
        }
    }
    out
}

impl Classifier for MultiClassModel {
    fn dim(&self) -> usize {
        self.pairs[0].dim()
    }

    /// Majority vote; ties go to the smallest label.
    fn predict_label(&self, x: &[f64]) -> Result<i32> {
        let votes = self.votes(x)?;
        let mut best = 0;
        for (i, &v) in votes.iter().enumerate() {
            if v > votes[best] {
                best = i;
            }
        }
        Ok(self.classes[best])
    }

    fn total_sv(&self) -> usize {
        self.pairs.iter().map(|m| m.n_sv()).sum()
    }
}

/// Trains one binary model per class pair on that pair's samples.
pub fn train_one_vs_one(ds: &Dataset, cfg: &TrainConfig) -> Result<MultiClassModel> {
    let classes = ds.classes().to_vec();
    if classes.len() < 2 {
        return Err(CvmError::invalid("one-vs-one training needs at least two classes"));
    }
    let pairs = class_pairs(&classes);
    let models = pairs
        .par_iter()
        .map(|&(a, b)| {
            let sub = ds.filter_classes(&[a, b]);
            if sub.classes() != [a, b] {
                return Err(CvmError::invalid(format!("pair ({a}, {b}) is missing a class")));
            }
            train(&sub, cfg)
        })
        .collect::<Result<Vec<_>>>()?;
    MultiClassModel::new(classes, models)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{generate_circle_synthetic, Sample};
    use crate::kernel::KernelParams;

    fn three_blobs() -> Dataset {
        let mut samples = Vec::new();
        for (label, cx) in [(3, -4.0), (7, 0.0), (9, 4.0)] {
            for k in 0..10 {
                let dx = (k as f64 * 0.37).sin() * 0.5;
                let dy = (k as f64 * 0.91).cos() * 0.5;
                samples.push(Sample::new(vec![cx + dx, dy], label));
            }
        }
        Dataset::new(samples, 2).unwrap()
    }

    fn cfg() -> TrainConfig {
        TrainConfig::new(10.0, KernelParams::new(1.0).unwrap())
    }

    #[test]
    fn pair_count() {
        let labels: Vec<i32> = (0..26).collect();
        assert_eq!(class_pairs(&labels).len(), 325);
        assert_eq!(class_pairs(&[1, 2]).len(), 1);
    }

    #[test]
    fn trains_and_classifies_blobs() {
        let ds = three_blobs();
        let m = train_one_vs_one(&ds, &cfg()).unwrap();
        assert_eq!(m.pairs().len(), 3);
        assert_eq!(m.pairs()[0].class_pair(), (3, 7));
        for s in ds.samples() {
            assert_eq!(m.predict_label(&s.features).unwrap(), s.label);
        }
    }

    #[test]
    fn two_class_vote_equals_binary_sign() {
        let ds = generate_circle_synthetic(100, 2).unwrap();
        let mc = train_one_vs_one(&ds, &cfg()).unwrap();
        assert_eq!(mc.pairs().len(), 1);
        let bin = &mc.pairs()[0];
        for i in -5..=5 {
            for j in -5..=5 {
                let x = [i as f64 * 0.9, j as f64 * 0.9];
                assert_eq!(mc.predict_label(&x).unwrap(), bin.predict_label(&x).unwrap());
            }
        }
    }

    #[test]
    fn tie_goes_to_smallest_label() {
        // Three pair models each voting for a different class: 1-1-1 tie.
        use ndarray::array;
        let k = KernelParams::new(1.0).unwrap();
        let sv = array![[0.0]];
        // (1,2) votes 1, (1,3) votes 3, (2,3) votes 2.
        let m12 = SvmModel::new(sv.clone(), vec![-1.0], 0.0, k, None, (1, 2)).unwrap();
        let m13 = SvmModel::new(sv.clone(), vec![1.0], 0.0, k, None, (1, 3)).unwrap();
        let m23 = SvmModel::new(sv, vec![-1.0], 0.0, k, None, (2, 3)).unwrap();
        let mc = MultiClassModel::new(vec![1, 2, 3], vec![m12, m13, m23]).unwrap();
        assert_eq!(mc.votes(&[0.0]).unwrap(), vec![1, 1, 1]);
        assert_eq!(mc.predict_label(&[0.0]).unwrap(), 1);
    }

    #[test]
    fn rejects_incomplete_pairs() {
        let ds = three_blobs();
        let m = train_one_vs_one(&ds, &cfg()).unwrap();
        let mut pairs = m.into_pairs();
        pairs.pop();
        assert!(MultiClassModel::new(vec![3, 7, 9], pairs).is_err());
    }

    #[test]
    fn single_class_rejected() {
        let ds = Dataset::new(vec![Sample::new(vec![0.0], 1)], 1).unwrap();
        assert!(train_one_vs_one(&ds, &cfg()).is_err());
    }
}
