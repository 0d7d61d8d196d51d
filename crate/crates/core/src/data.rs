//! Datasets: LibSVM text ingestion, the noisy-circle benchmark, splitting
//! and feature standardization.
//!
//! Features are stored dense. Sparse LibSVM lines are densified on load.

use std::fmt::Write as _;
use std::path::Path;

use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};

use crate::error::{CvmError, Result};
use crate::numfmt::g17;

/// Radius of the outer ring in [`generate_circle_synthetic`].
pub const CIRCLE_RADIUS: f64 = 4.0;
/// Standard deviation of the radial noise on the outer ring.
pub const CIRCLE_RADIAL_NOISE: f64 = 0.3;

#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub features: Vec<f64>,
    pub label: i32,
}

impl Sample {
    pub fn new(features: Vec<f64>, label: i32) -> Self {
        Sample { features, label }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    samples: Vec<Sample>,
    dim: usize,
    classes: Vec<i32>,
}

impl Dataset {
    /// Builds a dataset, checking that every sample has `dim` finite features.
    pub fn new(samples: Vec<Sample>, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(CvmError::invalid("dataset dimension must be positive"));
        }
        for (i, s) in samples.iter().enumerate() {
            if s.features.len() != dim {
                return Err(CvmError::Dimension {
                    expected: dim,
                    got: s.features.len(),
                });
            }
            if s.features.iter().any(|v| !v.is_finite()) {
                return Err(CvmError::invalid(format!("sample {i} has a non-finite feature")));
            }
        }
        let mut classes: Vec<i32> = samples.iter().map(|s| s.label).collect();
        classes.sort_unstable();
        classes.dedup();
        Ok(Dataset {
            samples,
            dim,
            classes,
        })
    }

    pub fn samples(&self) -> &[Sample] {
        &self.samples
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn classes(&self) -> &[i32] {
        &self.classes
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn labels(&self) -> Vec<i32> {
        self.samples.iter().map(|s| s.label).collect()
    }

    /// Features as an `n × dim` matrix.
    pub fn feature_matrix(&self) -> Array2<f64> {
        let mut x = Array2::zeros((self.len(), self.dim));
        for (i, s) in self.samples.iter().enumerate() {
            for (j, &v) in s.features.iter().enumerate() {
                x[[i, j]] = v;
            }
        }
        x
    }

    /// Samples at `indices`, in the given order.
    pub fn subset(&self, indices: &[usize]) -> Dataset {
        let samples = indices.iter().map(|&i| self.samples[i].clone()).collect();
        Dataset::new(samples, self.dim).expect("subset of a valid dataset")
    }

    /// Samples whose label is in `labels`.
    pub fn filter_classes(&self, labels: &[i32]) -> Dataset {
        let samples = self
            .samples
            .iter()
            .filter(|s| labels.contains(&s.label))
            .cloned()
            .collect();
        Dataset::new(samples, self.dim).expect("filter of a valid dataset")
    }

    /// Zero-pads every sample to `dim` features.
    pub fn with_dim(&self, dim: usize) -> Result<Dataset> {
        if dim < self.dim {
            return Err(CvmError::Dimension {
                expected: self.dim,
                got: dim,
            });
        }
        let samples = self
            .samples
            .iter()
            .map(|s| {
                let mut f = s.features.clone();
                f.resize(dim, 0.0);
                Sample::new(f, s.label)
            })
            .collect();
        Dataset::new(samples, dim)
    }

    /// LibSVM text: one `label idx:value ...` line per sample, zeros omitted.
    pub fn to_libsvm(&self) -> String {
        let mut out = String::new();
        for s in &self.samples {
            write!(out, "{}", s.label).unwrap();
            for (j, &v) in s.features.iter().enumerate() {
                if v != 0.0 {
                    write!(out, " {}:{}", j + 1, g17(v)).unwrap();
                }
            }
            out.push('\n');
        }
        out
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_libsvm())?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>, dim: Option<usize>) -> Result<Dataset> {
        let text = std::fs::read_to_string(path)?;
        parse_libsvm_with_dim(&text, dim)
    }
}

/// Parses LibSVM sparse text; the dimension is the largest index seen.
pub fn parse_libsvm(text: &str) -> Result<Dataset> {
    parse_libsvm_with_dim(text, None)
}

/// Parses LibSVM sparse text. With `dim = Some(d)` every sample has exactly
/// `d` features and an index above `d` is an error.
pub fn parse_libsvm_with_dim(text: &str, dim: Option<usize>) -> Result<Dataset> {
    let mut rows: Vec<(i32, Vec<(usize, f64)>)> = Vec::new();
    let mut max_index = 0usize;
    for (lineno, raw) in text.lines().enumerate() {
        let line_no = lineno + 1;
        let line = raw.trim_end_matches('\r').trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut tokens = line.split_whitespace();
        let label_tok = tokens.next().expect("nonempty line");
        let label = parse_label(label_tok).ok_or_else(|| {
            CvmError::parse(line_no, format!("invalid label '{label_tok}'"))
        })?;
        let mut entries = Vec::new();
        let mut last = 0usize;
        for tok in tokens {
            let (idx, val) = tok
                .split_once(':')
                .ok_or_else(|| CvmError::parse(line_no, format!("expected index:value, got '{tok}'")))?;
            let idx: usize = idx
                .parse()
                .map_err(|_| CvmError::parse(line_no, format!("invalid index '{idx}'")))?;
            if idx == 0 {
                return Err(CvmError::parse(line_no, "indices are 1-based"));
            }
            if idx <= last {
                return Err(CvmError::parse(line_no, format!("index {idx} is not increasing")));
            }
            let val: f64 = val
                .parse()
                .map_err(|_| CvmError::parse(line_no, format!("invalid value '{val}'")))?;
            if !val.is_finite() {
                return Err(CvmError::parse(line_no, format!("non-finite value '{tok}'")));
            }
            if let Some(d) = dim {
                if idx > d {
                    return Err(CvmError::parse(line_no, format!("index {idx} exceeds dimension {d}")));
                }
            }
            last = idx;
            entries.push((idx, val));
        }
        max_index = max_index.max(last);
        rows.push((label, entries));
    }
    if rows.is_empty() {
        return Err(CvmError::invalid("no samples in input"));
    }
    let dim = dim.unwrap_or(max_index).max(1);
    let samples = rows
        .into_iter()
        .map(|(label, entries)| {
            let mut features = vec![0.0; dim];
            for (idx, val) in entries {
                features[idx - 1] = val;
            }
            Sample::new(features, label)
        })
        .collect();
    Dataset::new(samples, dim)
}

fn parse_label(tok: &str) -> Option<i32> {
    if let Ok(v) = tok.parse::<i32>() {
        return Some(v);
    }
    // Tolerate "1.0" / "+1.0" style labels as long as they are integral.
    let v: f64 = tok.parse().ok()?;
    if v.is_finite() && v.fract() == 0.0 && v.abs() <= i32::MAX as f64 {
        Some(v as i32)
    } else {
        None
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitSpec {
    pub validation_fraction: f64,
    pub seed: u64,
}

impl SplitSpec {
    pub fn new(validation_fraction: f64, seed: u64) -> Result<Self> {
        if !(validation_fraction > 0.0 && validation_fraction < 1.0) {
            return Err(CvmError::invalid(format!(
                "validation fraction must be in (0, 1), got {validation_fraction}"
            )));
        }
        Ok(SplitSpec {
            validation_fraction,
            seed,
        })
    }
}

/// Seeded random partition into `(train, validation)`; each part keeps the
/// input order. The validation part has `round(fraction · n)` samples.
pub fn split(ds: &Dataset, spec: &SplitSpec) -> Result<(Dataset, Dataset)> {
    let n = ds.len();
    if n < 2 {
        return Err(CvmError::invalid("need at least two samples to split"));
    }
    let spec = SplitSpec::new(spec.validation_fraction, spec.seed)?;
    let n_val = (spec.validation_fraction * n as f64).round() as usize;
    if n_val == 0 || n_val >= n {
        return Err(CvmError::invalid(format!(
            "validation fraction {} leaves an empty part for n={n}",
            spec.validation_fraction
        )));
    }
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    order.shuffle(&mut rng);
    let mut val_idx = order[..n_val].to_vec();
    let mut train_idx = order[n_val..].to_vec();
    val_idx.sort_unstable();
    train_idx.sort_unstable();
    Ok((ds.subset(&train_idx), ds.subset(&val_idx)))
}

/// Two-class noisy-circle benchmark in 2-d.
///
/// The first `n/2` samples (label `+1`) come from an isotropic standard
/// Gaussian at the origin. The remaining `n/2` (label `-1`) lie on a ring of
/// radius [`CIRCLE_RADIUS`] at a uniform angle, with Gaussian radial noise of
/// standard deviation [`CIRCLE_RADIAL_NOISE`].
pub fn generate_circle_synthetic(n: usize, seed: u64) -> Result<Dataset> {
    if n < 2 || n % 2 != 0 {
        return Err(CvmError::invalid(format!("n must be even and at least 2, got {n}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let half = n / 2;
    let mut samples = Vec::with_capacity(n);
    for _ in 0..half {
        let x: f64 = StandardNormal.sample(&mut rng);
        let y: f64 = StandardNormal.sample(&mut rng);
        samples.push(Sample::new(vec![x, y], 1));
    }
    let radial = Normal::new(CIRCLE_RADIUS, CIRCLE_RADIAL_NOISE).expect("valid normal");
    for _ in 0..half {
        let theta = rng.gen_range(0.0..std::f64::consts::TAU);
        let r = radial.sample(&mut rng);
        samples.push(Sample::new(vec![r * theta.cos(), r * theta.sin()], -1));
    }
    Dataset::new(samples, 2)
}

/// Per-feature affine map `x ↦ (x − mean) / std` fitted on training data.
#[derive(Debug, Clone, PartialEq)]
pub struct Standardizer {
    pub means: Vec<f64>,
    /// 1.0 for constant features, which are only centered.
    pub stds: Vec<f64>,
}

impl Standardizer {
    pub fn fit(train: &Dataset) -> Result<Self> {
        if train.is_empty() {
            return Err(CvmError::invalid("cannot standardize an empty dataset"));
        }
        let n = train.len() as f64;
        let d = train.dim();
        let mut means = vec![0.0; d];
        for s in train.samples() {
            for (m, &v) in means.iter_mut().zip(&s.features) {
                *m += v;
            }
        }
        means.iter_mut().for_each(|m| *m /= n);
        let mut vars = vec![0.0; d];
        for s in train.samples() {
            for j in 0..d {
                let c = s.features[j] - means[j];
                vars[j] += c * c;
            }
        }
        let stds = vars
            .into_iter()
            .map(|v| {
                let sd = (v / n).sqrt();
                if sd > 0.0 {
                    sd
                } else {
                    1.0
                }
            })
            .collect();
        Ok(Standardizer { means, stds })
    }

    pub fn apply(&self, ds: &Dataset) -> Result<Dataset> {
        if ds.dim() != self.means.len() {
            return Err(CvmError::Dimension {
                expected: self.means.len(),
                got: ds.dim(),
            });
        }
        let samples = ds
            .samples()
            .iter()
            .map(|s| Sample::new(self.transform(&s.features), s.label))
            .collect();
        Dataset::new(samples, ds.dim())
    }

    pub fn transform(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(self.means.iter().zip(&self.stds))
            .map(|(&v, (&m, &s))| (v - m) / s)
            .collect()
    }

    /// One `mean std` pair per line.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (m, s) in self.means.iter().zip(&self.stds) {
            writeln!(out, "{} {}", g17(*m), g17(*s)).unwrap();
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut means = Vec::new();
        let mut stds = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let mut it = line.split_whitespace();
            let parse = |t: Option<&str>| -> Result<f64> {
                t.and_then(|t| t.parse().ok())
                    .ok_or_else(|| CvmError::parse(i + 1, "expected 'mean std'"))
            };
            means.push(parse(it.next())?);
            let s = parse(it.next())?;
            if !(s > 0.0) {
                return Err(CvmError::parse(i + 1, "std must be positive"));
            }
            stds.push(s);
        }
        if means.is_empty() {
            return Err(CvmError::invalid("empty scale file"));
        }
        Ok(Standardizer { means, stds })
    }
}

/// Fits a [`Standardizer`] on `train` and applies it to `train` and `others`.
pub fn standardize(
    train: &Dataset,
    others: &[Dataset],
) -> Result<(Dataset, Vec<Dataset>, Standardizer)> {
    let map = Standardizer::fit(train)?;
    let train_std = map.apply(train)?;
    let others_std = others.iter().map(|d| map.apply(d)).collect::<Result<Vec<_>>>()?;
    Ok((train_std, others_std, map))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn parse_with_forced_dim() {
        let ds = parse_libsvm_with_dim("+1 1:0.5 3:1.2", Some(3)).unwrap();
        assert_eq!(ds.samples()[0], Sample::new(vec![0.5, 0.0, 1.2], 1));
    }

    #[test]
    fn parse_infers_dim_and_classes() {
        let ds = parse_libsvm("-1 2:1\n+1 1:1\n").unwrap();
        assert_eq!(ds.dim(), 2);
        assert_eq!(ds.classes(), &[-1, 1]);
    }

    #[test]
    fn parse_reports_line_of_bad_token() {
        match parse_libsvm("1 3:abc") {
            Err(CvmError::Parse { line, .. }) => assert_eq!(line, 1),
            other => panic!("expected parse error, got {other:?}"),
        }
        match parse_libsvm("1 1:1\n1 2:1 2:3\n") {
            Err(CvmError::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn parse_rejects_empty_and_tolerates_crlf_comments() {
        assert!(parse_libsvm("").is_err());
        assert!(parse_libsvm("# only a comment\n\n").is_err());
        let ds = parse_libsvm("# header\r\n1 1:2\r\n-1 2:3\r\n").unwrap();
        assert_eq!(ds.len(), 2);
        assert_eq!(ds.samples()[1].features, vec![0.0, 3.0]);
    }

    #[test]
    fn parse_rejects_out_of_range_index() {
        assert!(parse_libsvm_with_dim("1 4:1", Some(3)).is_err());
        assert!(parse_libsvm("1 0:1").is_err());
    }

    fn ten_samples() -> Dataset {
        let samples = (0..10)
            .map(|i| Sample::new(vec![i as f64], if i % 2 == 0 { 1 } else { -1 }))
            .collect();
        Dataset::new(samples, 1).unwrap()
    }

    #[test]
    fn split_sizes_and_determinism() {
        let ds = ten_samples();
        let spec = SplitSpec::new(0.2, 7).unwrap();
        let (tr, va) = split(&ds, &spec).unwrap();
        assert_eq!((tr.len(), va.len()), (8, 2));
        let (tr2, va2) = split(&ds, &spec).unwrap();
        assert_eq!(tr, tr2);
        assert_eq!(va, va2);
    }

    #[test]
    fn split_rejects_degenerate() {
        let one = Dataset::new(vec![Sample::new(vec![0.0], 1)], 1).unwrap();
        assert!(split(&one, &SplitSpec { validation_fraction: 0.5, seed: 0 }).is_err());
        let ds = ten_samples();
        assert!(split(&ds, &SplitSpec { validation_fraction: 0.01, seed: 0 }).is_err());
        assert!(split(&ds, &SplitSpec { validation_fraction: 0.99, seed: 0 }).is_err());
        assert!(SplitSpec::new(1.0, 0).is_err());
    }

    #[test]
    fn circle_shape_and_determinism() {
        let a = generate_circle_synthetic(600, 0).unwrap();
        assert_eq!(a.len(), 600);
        assert_eq!(a.dim(), 2);
        assert_eq!(a.classes(), &[-1, 1]);
        assert_eq!(a.samples().iter().filter(|s| s.label == 1).count(), 300);
        let b = generate_circle_synthetic(600, 0).unwrap();
        assert_eq!(a, b);
        assert!(generate_circle_synthetic(601, 0).is_err());
        assert!(generate_circle_synthetic(0, 0).is_err());
    }

    #[test]
    fn circle_inner_radius_matches_gaussian() {
        // Monte-Carlo over 10^6 standard 2-d Gaussian draws gives a mean
        // radius of 1.2533 (sqrt(pi/2)); a 300-point sample must land in
        // [0.9, 1.6].
        let ds = generate_circle_synthetic(600, 0).unwrap();
        let inner: Vec<f64> = ds
            .samples()
            .iter()
            .filter(|s| s.label == 1)
            .map(|s| s.features.iter().map(|v| v * v).sum::<f64>().sqrt())
            .collect();
        let mean = inner.iter().sum::<f64>() / inner.len() as f64;
        assert!((0.9..=1.6).contains(&mean), "mean radius {mean}");
    }

    #[test]
    fn standardize_two_points() {
        let train = Dataset::new(vec![Sample::new(vec![0.0], 1), Sample::new(vec![2.0], -1)], 1).unwrap();
        let (st, _, map) = standardize(&train, &[]).unwrap();
        assert_eq!(st.samples()[0].features, vec![-1.0]);
        assert_eq!(st.samples()[1].features, vec![1.0]);
        assert_eq!(map.means, vec![1.0]);
        assert_eq!(map.stds, vec![1.0]);
    }

    #[test]
    fn standardize_constant_feature() {
        let train = Dataset::new(vec![Sample::new(vec![5.0], 1), Sample::new(vec![5.0], -1)], 1).unwrap();
        let (st, _, map) = standardize(&train, &[]).unwrap();
        assert_eq!(st.samples()[0].features, vec![0.0]);
        assert_eq!(st.samples()[1].features, vec![0.0]);
        assert_eq!(map.stds, vec![1.0]);
    }

    #[test]
    fn standardize_is_idempotent() {
        let ds = generate_circle_synthetic(100, 3).unwrap();
        let (st, _, _) = standardize(&ds, &[]).unwrap();
        let (again, _, map) = standardize(&st, &[]).unwrap();
        for (a, b) in st.samples().iter().zip(again.samples()) {
            for (x, y) in a.features.iter().zip(&b.features) {
                assert!((x - y).abs() < 1e-12);
            }
        }
        assert!(map.means.iter().all(|m| m.abs() < 1e-12));
    }

    #[test]
    fn scale_file_round_trip() {
        let map = Standardizer {
            means: vec![0.1, -3.5],
            stds: vec![1.0, 2.25],
        };
        assert_eq!(Standardizer::from_text(&map.to_text()).unwrap(), map);
    }

    fn arb_dataset() -> impl Strategy<Value = Dataset> {
        (1usize..5).prop_flat_map(|d| {
            prop::collection::vec(
                (
                    prop::collection::vec(prop_oneof![Just(0.0), -1e6f64..1e6], d),
                    -3i32..4,
                ),
                1..20,
            )
            .prop_map(move |rows| {
                let samples = rows.into_iter().map(|(f, l)| Sample::new(f, l)).collect();
                Dataset::new(samples, d).unwrap()
            })
        })
    }

    proptest! {
        #[test]
        fn libsvm_text_round_trips(ds in arb_dataset()) {
            let back = parse_libsvm_with_dim(&ds.to_libsvm(), Some(ds.dim())).unwrap();
            prop_assert_eq!(back, ds);
        }

        #[test]
        fn split_is_a_partition(ds in arb_dataset(), seed in any::<u64>(), frac in 0.05f64..0.95) {
            prop_assume!(ds.len() >= 2);
            let spec = SplitSpec { validation_fraction: frac, seed };
            if let Ok((tr, va)) = split(&ds, &spec) {
                prop_assert_eq!(tr.len() + va.len(), ds.len());
                let mut all: Vec<_> = tr.samples().iter().chain(va.samples()).map(|s| format!("{s:?}")).collect();
                let mut orig: Vec<_> = ds.samples().iter().map(|s| format!("{s:?}")).collect();
                all.sort();
                orig.sort();
                prop_assert_eq!(all, orig);
            }
        }

        #[test]
        fn standardized_moments(ds in arb_dataset()) {
            let (st, _, _) = standardize(&ds, &[]).unwrap();
            let n = st.len() as f64;
            for j in 0..st.dim() {
                let col: Vec<f64> = ds.samples().iter().map(|s| s.features[j]).collect();
                let constant = col.iter().all(|&v| v == col[0]);
                let scol: Vec<f64> = st.samples().iter().map(|s| s.features[j]).collect();
                let mean = scol.iter().sum::<f64>() / n;
                prop_assert!(mean.abs() < 1e-10);
                if !constant {
                    let sd = (scol.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt();
                    prop_assert!((sd - 1.0).abs() < 1e-10, "std {}", sd);
                }
            }
        }
    }
}
