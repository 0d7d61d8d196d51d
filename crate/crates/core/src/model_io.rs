//! LibSVM model files (`svm_type c_svc`, `kernel_type rbf`).
//!
//! Binary models are written with the positive class first on the `label`
//! line, so LibSVM's decision value has the same sign as ours. Multi-class
//! models use LibSVM's one-vs-one layout: every SV line carries `K − 1`
//! coefficients and belongs to one class block. A support vector is placed in
//! the block of the class its coefficient pushes towards. Lines with the same
//! class and features are shared between pairs; a pair that does not use a
//! line gets a zero coefficient there.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::io::Write;
use std::path::Path;

use ndarray::Array2;

use crate::error::{CvmError, Result};
use crate::kernel::KernelParams;
use crate::numfmt::g17;
use crate::svm::{class_pairs, Classifier, DecisionFunction, MultiClassModel, SvmModel};

/// A model as stored in a file.
#[derive(Debug, Clone, PartialEq)]
pub enum Model {
    Binary(SvmModel),
    MultiClass(MultiClassModel),
}

impl Model {
    pub fn dim(&self) -> usize {
        match self {
            Model::Binary(m) => DecisionFunction::dim(m),
            Model::MultiClass(m) => Classifier::dim(m),
        }
    }

    pub fn classes(&self) -> Vec<i32> {
        match self {
            Model::Binary(m) => {
                let (a, b) = m.class_pair();
                vec![a.min(b), a.max(b)]
            }
            Model::MultiClass(m) => m.classes().to_vec(),
        }
    }

    /// Zero-pads support vectors to `dim` features.
    pub fn with_dim(&self, dim: usize) -> Result<Model> {
        Ok(match self {
            Model::Binary(m) => Model::Binary(m.with_dim(dim)?),
            Model::MultiClass(m) => Model::MultiClass(m.with_dim(dim)?),
        })
    }

    /// Pair models: one for a binary model, `K(K−1)/2` otherwise.
    pub fn pairs(&self) -> Vec<&SvmModel> {
        match self {
            Model::Binary(m) => vec![m],
            Model::MultiClass(m) => m.pairs().iter().collect(),
        }
    }
}

impl Classifier for Model {
    fn dim(&self) -> usize {
        Model::dim(self)
    }

    fn predict_label(&self, x: &[f64]) -> Result<i32> {
        match self {
            Model::Binary(m) => m.predict_label(x),
            Model::MultiClass(m) => m.predict_label(x),
        }
    }

    fn total_sv(&self) -> usize {
        match self {
            Model::Binary(m) => m.total_sv(),
            Model::MultiClass(m) => m.total_sv(),
        }
    }
}

impl From<SvmModel> for Model {
    fn from(m: SvmModel) -> Self {
        Model::Binary(m)
    }
}

impl From<MultiClassModel> for Model {
    fn from(m: MultiClassModel) -> Self {
        Model::MultiClass(m)
    }
}

/// Borrowed view accepted by the writers.
#[derive(Debug, Clone, Copy)]
pub enum ModelRef<'a> {
    Binary(&'a SvmModel),
    MultiClass(&'a MultiClassModel),
}

impl<'a> From<&'a SvmModel> for ModelRef<'a> {
    fn from(m: &'a SvmModel) -> Self {
        ModelRef::Binary(m)
    }
}

impl<'a> From<&'a MultiClassModel> for ModelRef<'a> {
    fn from(m: &'a MultiClassModel) -> Self {
        ModelRef::MultiClass(m)
    }
}

impl<'a> From<&'a Model> for ModelRef<'a> {
    fn from(m: &'a Model) -> Self {
        match m {
            Model::Binary(m) => ModelRef::Binary(m),
            Model::MultiClass(m) => ModelRef::MultiClass(m),
        }
    }
}

struct SvLine<'a> {
    coefs: Vec<Option<f64>>,
    features: &'a [f64],
}

/// Feature vector with ±0 unified, as it will be printed.
fn feature_key(x: &[f64]) -> Vec<u64> {
    x.iter().map(|&v| if v == 0.0 { 0 } else { v.to_bits() }).collect()
}

fn header(out: &mut String, gamma: f64, labels: &[i32], rhos: &[f64], nr_sv: &[usize]) {
    let total: usize = nr_sv.iter().sum();
    writeln!(out, "svm_type c_svc").unwrap();
    writeln!(out, "kernel_type rbf").unwrap();
    writeln!(out, "gamma {}", g17(gamma)).unwrap();
    writeln!(out, "nr_class {}", labels.len()).unwrap();
    writeln!(out, "total_sv {total}").unwrap();
    out.push_str("rho");
    for &r in rhos {
        write!(out, " {}", g17(r)).unwrap();
    }
    out.push('\n');
    out.push_str("label");
    for l in labels {
        write!(out, " {l}").unwrap();
    }
    out.push('\n');
    out.push_str("nr_sv");
    for n in nr_sv {
        write!(out, " {n}").unwrap();
    }
    out.push('\n');
    out.push_str("SV\n");
}

fn sv_line(out: &mut String, coefs: impl IntoIterator<Item = f64>, features: &[f64]) {
    for c in coefs {
        write!(out, "{} ", g17(c)).unwrap();
    }
    for (j, &v) in features.iter().enumerate() {
        if v != 0.0 {
            write!(out, "{}:{} ", j + 1, g17(v)).unwrap();
        }
    }
    out.push('\n');
}

fn binary_text(m: &SvmModel) -> String {
    let (neg, pos) = m.class_pair();
    let (first, second): (Vec<usize>, Vec<usize>) = (0..m.n_sv()).partition(|&k| m.coef()[k] >= 0.0);
    let mut out = String::new();
    header(&mut out, m.kernel().gamma(), &[pos, neg], &[-m.bias()], &[first.len(), second.len()]);
    for k in first.into_iter().chain(second) {
        sv_line(&mut out, [m.coef()[k]], m.support_vector(k));
    }
    out
}

fn multiclass_text(m: &MultiClassModel) -> Result<String> {
    let kernel = m.pairs()[0].kernel();
    if m.pairs().iter().any(|p| p.kernel().gamma() != kernel.gamma()) {
        return Err(CvmError::Unsupported(
            "pair models with different kernel widths cannot share one model file".into(),
        ));
    }
    // File order: labels descending, so label i beats label j > i exactly
    // when our (smaller, larger) pair model scores positive.
    let labels: Vec<i32> = m.classes().iter().rev().copied().collect();
    let k = labels.len();
    let mut blocks: Vec<Vec<SvLine>> = (0..k).map(|_| Vec::new()).collect();
    let mut index: Vec<HashMap<Vec<u64>, Vec<usize>>> = vec![HashMap::new(); k];
    let mut rhos = Vec::with_capacity(k * (k - 1) / 2);
    for i in 0..k {
        for j in i + 1..k {
            let pair = m
                .pairs()
                .iter()
                .find(|p| p.class_pair() == (labels[j], labels[i]))
                .expect("multi-class model holds every pair");
            rhos.push(-pair.bias());
            for s in 0..pair.n_sv() {
                let c = pair.coef()[s];
                let (owner, col) = if c >= 0.0 { (i, j - 1) } else { (j, i) };
                let x = pair.support_vector(s);
                let slots = index[owner].entry(feature_key(x)).or_default();
                let line = match slots.iter().find(|&&l| blocks[owner][l].coefs[col].is_none()) {
                    Some(&l) => l,
                    None => {
                        blocks[owner].push(SvLine {
                            coefs: vec![None; k - 1],
                            features: x,
                        });
                        slots.push(blocks[owner].len() - 1);
                        blocks[owner].len() - 1
                    }
                };
                blocks[owner][line].coefs[col] = Some(c);
            }
        }
    }
    let nr_sv: Vec<usize> = blocks.iter().map(|b| b.len()).collect();
    let mut out = String::new();
    header(&mut out, kernel.gamma(), &labels, &rhos, &nr_sv);
    for line in blocks.iter().flatten() {
        sv_line(&mut out, line.coefs.iter().map(|c| c.unwrap_or(0.0)), line.features);
    }
    Ok(out)
}

/// LibSVM text of a model.
pub fn model_to_string<'a>(model: impl Into<ModelRef<'a>>) -> Result<String> {
    match model.into() {
        ModelRef::Binary(m) => Ok(binary_text(m)),
        ModelRef::MultiClass(m) => multiclass_text(m),
    }
}

pub fn write_model<'a, W: Write>(model: impl Into<ModelRef<'a>>, sink: &mut W) -> Result<()> {
    sink.write_all(model_to_string(model)?.as_bytes())?;
    Ok(())
}

pub fn save_model<'a>(model: impl Into<ModelRef<'a>>, path: impl AsRef<Path>) -> Result<()> {
    let text = model_to_string(model)?;
    std::fs::write(path, text)?;
    Ok(())
}

pub fn load_model(path: impl AsRef<Path>) -> Result<Model> {
    read_model(&std::fs::read_to_string(path)?)
}

#[derive(Default)]
struct Header {
    gamma: Option<f64>,
    nr_class: Option<usize>,
    total_sv: Option<usize>,
    rho: Option<Vec<f64>>,
    label: Option<Vec<i32>>,
    nr_sv: Option<Vec<usize>>,
}

fn parse_list<T: std::str::FromStr>(line: usize, key: &str, vals: &[&str]) -> Result<Vec<T>> {
    vals.iter()
        .map(|v| {
            v.parse()
                .map_err(|_| CvmError::parse(line, format!("bad {key} value {v:?}")))
        })
        .collect()
}

fn parse_one<T: std::str::FromStr>(line: usize, key: &str, vals: &[&str]) -> Result<T> {
    let mut v = parse_list(line, key, vals)?;
    if v.len() != 1 {
        return Err(CvmError::parse(line, format!("{key} takes one value")));
    }
    Ok(v.remove(0))
}

/// Parses a LibSVM model file.
pub fn read_model(text: &str) -> Result<Model> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim_end_matches('\r')));
    let mut h = Header::default();
    let mut sv_start = None;
    for (no, line) in lines.by_ref() {
        let mut tok = line.split_whitespace();
        let Some(key) = tok.next() else { continue };
        let vals: Vec<&str> = tok.collect();
        match key {
            "svm_type" => {
                if vals != ["c_svc"] {
                    return Err(CvmError::Unsupported(format!("svm_type {}", vals.join(" "))));
                }
            }
            "kernel_type" => {
                if vals != ["rbf"] {
                    return Err(CvmError::Unsupported(format!("kernel_type {}", vals.join(" "))));
                }
            }
            "gamma" => h.gamma = Some(parse_one(no, key, &vals)?),
            "nr_class" => h.nr_class = Some(parse_one(no, key, &vals)?),
            "total_sv" => h.total_sv = Some(parse_one(no, key, &vals)?),
            "rho" => h.rho = Some(parse_list(no, key, &vals)?),
            "label" => h.label = Some(parse_list(no, key, &vals)?),
            "nr_sv" => h.nr_sv = Some(parse_list(no, key, &vals)?),
            // Kernel parameters unused by rbf, and probability outputs.
            "degree" | "coef0" | "probA" | "probB" => {}
            "SV" => {
                sv_start = Some(no);
                break;
            }
            other => return Err(CvmError::parse(no, format!("unknown header key {other:?}"))),
        }
    }
    let sv_start = sv_start.ok_or_else(|| CvmError::parse(0, "missing SV section"))?;
    let missing = |k: &str| CvmError::parse(sv_start, format!("header lacks {k}"));
    let kernel = KernelParams::from_gamma(h.gamma.ok_or_else(|| missing("gamma"))?)?;
    let k = h.nr_class.ok_or_else(|| missing("nr_class"))?;
    let total = h.total_sv.ok_or_else(|| missing("total_sv"))?;
    let rho = h.rho.ok_or_else(|| missing("rho"))?;
    let labels = h.label.ok_or_else(|| missing("label"))?;
    let nr_sv = h.nr_sv.ok_or_else(|| missing("nr_sv"))?;
    if k < 2 {
        return Err(CvmError::parse(sv_start, "nr_class must be at least 2"));
    }
    if labels.len() != k || nr_sv.len() != k || rho.len() != k * (k - 1) / 2 {
        return Err(CvmError::parse(sv_start, "label, nr_sv or rho length disagrees with nr_class"));
    }
    if nr_sv.iter().sum::<usize>() != total {
        return Err(CvmError::parse(sv_start, "nr_sv does not sum to total_sv"));
    }

    let mut coefs: Vec<Vec<f64>> = Vec::with_capacity(total);
    let mut feats: Vec<Vec<(usize, f64)>> = Vec::with_capacity(total);
    let mut dim = 1;
    for (no, line) in lines {
        let mut tok = line.split_whitespace().peekable();
        if tok.peek().is_none() {
            continue;
        }
        let mut c = Vec::with_capacity(k - 1);
        for _ in 0..k - 1 {
            let t = tok.next().ok_or_else(|| CvmError::parse(no, "too few coefficients"))?;
            let v: f64 = t
                .parse()
                .map_err(|_| CvmError::parse(no, format!("bad coefficient {t:?}")))?;
            c.push(v);
        }
        let mut f = Vec::new();
        let mut last = 0;
        for t in tok {
            let (i, v) = t
                .split_once(':')
                .ok_or_else(|| CvmError::parse(no, format!("expected index:value, got {t:?}")))?;
            let i: usize = i.parse().map_err(|_| CvmError::parse(no, format!("bad index {i:?}")))?;
            let v: f64 = v.parse().map_err(|_| CvmError::parse(no, format!("bad value {v:?}")))?;
            if i <= last {
                return Err(CvmError::parse(no, "feature indices must be 1-based and increasing"));
            }
            last = i;
            f.push((i, v));
        }
        dim = dim.max(last);
        coefs.push(c);
        feats.push(f);
    }
    if coefs.len() != total {
        return Err(CvmError::parse(
            sv_start,
            format!("total_sv is {total} but the SV section has {} lines", coefs.len()),
        ));
    }
    let mut x = Array2::zeros((total, dim));
    for (r, f) in feats.iter().enumerate() {
        for &(i, v) in f {
            x[[r, i - 1]] = v;
        }
    }

    let start: Vec<usize> = nr_sv
        .iter()
        .scan(0, |acc, &n| {
            let s = *acc;
            *acc += n;
            Some(s)
        })
        .collect();

    if k == 2 {
        let coef: Vec<f64> = coefs.iter().map(|c| c[0]).collect();
        let m = SvmModel::new_allow_zero(x, coef, -rho[0], kernel, None, (labels[1], labels[0]))?;
        return Ok(Model::Binary(m));
    }

    let mut pairs = Vec::with_capacity(rho.len());
    let mut p = 0;
    for i in 0..k {
        for j in i + 1..k {
            let mut rows = Vec::new();
            let mut coef = Vec::new();
            for (class, col) in [(i, j - 1), (j, i)] {
                for r in start[class]..start[class] + nr_sv[class] {
                    let c = coefs[r][col];
                    if c != 0.0 {
                        rows.push(r);
                        coef.push(c);
                    }
                }
            }
            if rows.is_empty() {
                return Err(CvmError::invalid(format!(
                    "pair ({}, {}) has no support vectors",
                    labels[i], labels[j]
                )));
            }
            let sv = x.select(ndarray::Axis(0), &rows);
            // Positive score votes for labels[i]; our pair models vote for
            // the larger label.
            let m = if labels[i] > labels[j] {
                SvmModel::new_allow_zero(sv, coef, -rho[p], kernel, None, (labels[j], labels[i]))?
            } else {
                let coef = coef.into_iter().map(|c| -c).collect();
                SvmModel::new_allow_zero(sv, coef, rho[p], kernel, None, (labels[i], labels[j]))?
            };
            pairs.push(m);
            p += 1;
        }
    }
    debug_assert_eq!(pairs.len(), class_pairs(&labels).len());
    Ok(Model::MultiClass(MultiClassModel::new(labels, pairs)?))
}
