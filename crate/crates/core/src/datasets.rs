//! Data sources: the two-Gaussian artificial task, labelled CSV pools, and
//! the two-sample protocol that draws independent P, N and U sets.

use std::collections::HashSet;
use std::path::Path;

use ndarray::{Array2, ArrayView1, Axis};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::{Error, Label, Result};

/// Maximum holdout size when sampling from a pool.
pub const HOLDOUT_CAP: usize = 10_000;

/// Independent P, N and U samples with the known class prior.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleTriple {
    pub x_pos: Array2<f64>,
    pub x_neg: Array2<f64>,
    pub x_unl: Array2<f64>,
    pub pi: f64,
}

impl SampleTriple {
    pub fn new(
        x_pos: Array2<f64>,
        x_neg: Array2<f64>,
        x_unl: Array2<f64>,
        pi: f64,
    ) -> Result<Self> {
        check_prior(pi)?;
        let d = x_pos.ncols();
        for (name, m) in [("negative", &x_neg), ("unlabeled", &x_unl)] {
            if m.ncols() != d {
                return Err(Error::InvalidArgument(format!(
                    "{name} rows have dimension {} but positive rows have {d}",
                    m.ncols()
                )));
            }
        }
        Ok(Self {
            x_pos,
            x_neg,
            x_unl,
            pi,
        })
    }

    pub fn dim(&self) -> usize {
        self.x_pos.ncols()
    }

    pub fn n_pos(&self) -> usize {
        self.x_pos.nrows()
    }

    pub fn n_neg(&self) -> usize {
        self.x_neg.nrows()
    }

    pub fn n_unl(&self) -> usize {
        self.x_unl.nrows()
    }

    /// A 64-bit FNV-1a digest over shapes, prior and every value. Used to
    /// assert that several learners saw the very same sample.
    pub fn fingerprint(&self) -> u64 {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        let mut eat = |v: u64| {
            for b in v.to_le_bytes() {
                h ^= b as u64;
                h = h.wrapping_mul(0x0100_0000_01b3);
            }
        };
        eat(self.pi.to_bits());
        for m in [&self.x_pos, &self.x_neg, &self.x_unl] {
            eat(m.nrows() as u64);
            eat(m.ncols() as u64);
            for v in m.iter() {
                eat(v.to_bits());
            }
        }
        h
    }
}

/// Labelled rows, used both as a benchmark pool and as a test set.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledPool {
    pub features: Array2<f64>,
    pub labels: Vec<Label>,
}

impl LabeledPool {
    pub fn new(features: Array2<f64>, labels: Vec<Label>) -> Result<Self> {
        if features.nrows() != labels.len() {
            return Err(Error::DimensionMismatch {
                expected: features.nrows(),
                actual: labels.len(),
            });
        }
        Ok(Self { features, labels })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.features.ncols()
    }

    pub fn positive_ratio(&self) -> f64 {
        let p = self.labels.iter().filter(|&&l| l == Label::Pos).count();
        p as f64 / self.len() as f64
    }

    pub fn iter(&self) -> impl Iterator<Item = (ArrayView1<'_, f64>, Label)> {
        self.features.outer_iter().zip(self.labels.iter().copied())
    }

    fn class_indices(&self, class: Label) -> Vec<usize> {
        (0..self.len())
            .filter(|&i| self.labels[i] == class)
            .collect()
    }

    fn select(&self, idx: &[usize]) -> LabeledPool {
        LabeledPool {
            features: self.features.select(Axis(0), idx),
            labels: idx.iter().map(|&i| self.labels[i]).collect(),
        }
    }
}

fn check_prior(pi: f64) -> Result<()> {
    if pi > 0.0 && pi < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!(
            "class prior must lie in (0, 1), got {pi}"
        )))
    }
}

/// Mean of the positive class, `+1_2 / sqrt(2)`; the negative mean is its negation.
pub fn artificial_positive_mean() -> [f64; 2] {
    let m = std::f64::consts::FRAC_1_SQRT_2;
    [m, m]
}

fn gaussian_rows<R: Rng>(rng: &mut R, labels: &[Label]) -> Array2<f64> {
    let mu = artificial_positive_mean();
    let mut out = Array2::zeros((labels.len(), 2));
    for (mut row, &y) in out.outer_iter_mut().zip(labels) {
        for (j, v) in row.iter_mut().enumerate() {
            let z: f64 = rng.sample(StandardNormal);
            *v = y.sign() * mu[j] + z;
        }
    }
    out
}

/// Draws X+ ~ N(+1/sqrt2, I), X- ~ N(-1/sqrt2, I) and U from the mixture
/// with weight `pi` on the positive component.
pub fn gen_gaussian_artificial(
    n_pos: usize,
    n_neg: usize,
    n_unl: usize,
    pi: f64,
    seed: u64,
) -> Result<SampleTriple> {
    check_prior(pi)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x_pos = gaussian_rows(&mut rng, &vec![Label::Pos; n_pos]);
    let x_neg = gaussian_rows(&mut rng, &vec![Label::Neg; n_neg]);
    let latent: Vec<Label> = (0..n_unl)
        .map(|_| {
            if rng.random_bool(pi) {
                Label::Pos
            } else {
                Label::Neg
            }
        })
        .collect();
    let x_unl = gaussian_rows(&mut rng, &latent);
    SampleTriple::new(x_pos, x_neg, x_unl, pi)
}

/// Labelled draws from the artificial joint density with prior `pi`.
pub fn gen_gaussian_labeled(n: usize, pi: f64, seed: u64) -> Result<LabeledPool> {
    check_prior(pi)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let labels: Vec<Label> = (0..n)
        .map(|_| {
            if rng.random_bool(pi) {
                Label::Pos
            } else {
                Label::Neg
            }
        })
        .collect();
    let features = gaussian_rows(&mut rng, &labels);
    LabeledPool::new(features, labels)
}

/// Which CSV column holds the label.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LabelColumn {
    Name(String),
    Index(usize),
}

impl std::str::FromStr for LabelColumn {
    type Err = std::convert::Infallible;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Ok(match s.parse::<usize>() {
            Ok(i) => LabelColumn::Index(i),
            Err(_) => LabelColumn::Name(s.to_string()),
        })
    }
}

/// Loads a headed, comma-separated file into a standardised pool.
///
/// The label column must contain exactly two distinct values. Numeric labels
/// map the larger value to `+1`; non-numeric labels map the lexicographically
/// larger string to `+1`. Every feature column is shifted to zero mean and
/// scaled to unit variance over the whole file (constant columns are only
/// centred).
pub fn load_csv(path: impl AsRef<Path>, label_column: &LabelColumn) -> Result<LabeledPool> {
    let path = path.as_ref();
    let csv_err = |message: String| Error::Csv {
        path: path.to_path_buf(),
        message,
    };
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| csv_err(e.to_string()))?;
    let headers = reader
        .headers()
        .map_err(|e| csv_err(e.to_string()))?
        .clone();
    let label_idx = match label_column {
        LabelColumn::Index(i) if *i < headers.len() => *i,
        LabelColumn::Index(i) => {
            return Err(csv_err(format!(
                "label column {i} out of range ({} columns)",
                headers.len()
            )))
        }
        LabelColumn::Name(name) => headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| csv_err(format!("no column named `{name}`")))?,
    };
    let d = headers.len() - 1;
    if d == 0 {
        return Err(csv_err("file has no feature columns".into()));
    }

    let mut values = Vec::new();
    let mut raw_labels = Vec::new();
    for (line, record) in reader.records().enumerate() {
        let record = record.map_err(|e| csv_err(e.to_string()))?;
        let row = line + 2;
        if record.len() != headers.len() {
            return Err(csv_err(format!(
                "row {row} has {} fields, expected {}",
                record.len(),
                headers.len()
            )));
        }
        for (j, field) in record.iter().enumerate() {
            if j == label_idx {
                raw_labels.push(field.to_string());
            } else {
                let v: f64 = field.parse().map_err(|_| {
                    csv_err(format!(
                        "row {row}, column `{}`: `{field}` is not numeric",
                        &headers[j]
                    ))
                })?;
                if !v.is_finite() {
                    return Err(csv_err(format!("row {row}: non-finite value `{field}`")));
                }
                values.push(v);
            }
        }
    }

    let labels = map_labels(&raw_labels).map_err(csv_err)?;
    let m = labels.len();
    let mut features =
        Array2::from_shape_vec((m, d), values).map_err(|e| csv_err(e.to_string()))?;
    standardize(&mut features);
    LabeledPool::new(features, labels)
}

fn map_labels(raw: &[String]) -> std::result::Result<Vec<Label>, String> {
    let mut distinct: Vec<&str> = Vec::new();
    for r in raw {
        if !distinct.contains(&r.as_str()) {
            distinct.push(r);
            if distinct.len() > 2 {
                return Err(format!(
                    "label column has more than two values: {distinct:?}"
                ));
            }
        }
    }
    if distinct.len() < 2 {
        return Err(format!(
            "label column must contain two classes, found {distinct:?}"
        ));
    }
    let numeric: Option<Vec<f64>> = distinct.iter().map(|s| s.parse::<f64>().ok()).collect();
    let positive = match numeric {
        Some(v) if v[0] > v[1] => distinct[0],
        Some(_) => distinct[1],
        None => *distinct.iter().max().expect("two labels"),
    };
    Ok(raw
        .iter()
        .map(|r| {
            if r == positive {
                Label::Pos
            } else {
                Label::Neg
            }
        })
        .collect())
}

fn standardize(x: &mut Array2<f64>) {
    let m = x.nrows() as f64;
    for mut col in x.columns_mut() {
        let mean = col.sum() / m;
        let var = col.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / m;
        let sd = var.sqrt();
        let scale = if sd > 0.0 { 1.0 / sd } else { 1.0 };
        col.mapv_inplace(|v| (v - mean) * scale);
    }
}

/// Row indices into the source pool for every part of a draw.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitIndices {
    pub pos: Vec<usize>,
    pub neg: Vec<usize>,
    pub unl: Vec<usize>,
    pub holdout: Vec<usize>,
}

impl SplitIndices {
    /// True when no pool row is used twice.
    pub fn is_disjoint(&self) -> bool {
        let mut seen = HashSet::new();
        self.pos
            .iter()
            .chain(&self.neg)
            .chain(&self.unl)
            .chain(&self.holdout)
            .all(|i| seen.insert(*i))
    }
}

#[derive(Debug, Clone)]
pub struct PoolSample {
    pub triple: SampleTriple,
    pub holdout: LabeledPool,
    pub indices: SplitIndices,
}

/// Two-sample draw from a labelled pool.
///
/// P and N rows are drawn without replacement from their classes. Each U
/// row first flips a `pi`-coin for its latent class and then takes the next
/// unused row of that class. Everything left over forms the holdout, which
/// is subsampled uniformly to [`HOLDOUT_CAP`] rows when larger.
pub fn sample_triple_from_pool(
    pool: &LabeledPool,
    n_pos: usize,
    n_neg: usize,
    n_unl: usize,
    pi: f64,
    seed: u64,
) -> Result<PoolSample> {
    check_prior(pi)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pos = pool.class_indices(Label::Pos);
    let mut neg = pool.class_indices(Label::Neg);
    pos.shuffle(&mut rng);
    neg.shuffle(&mut rng);

    let latent: Vec<Label> = (0..n_unl)
        .map(|_| {
            if rng.random_bool(pi) {
                Label::Pos
            } else {
                Label::Neg
            }
        })
        .collect();
    let unl_pos = latent.iter().filter(|&&l| l == Label::Pos).count();
    let unl_neg = n_unl - unl_pos;
    for (class, have, need) in [
        ("positive", pos.len(), n_pos + unl_pos),
        ("negative", neg.len(), n_neg + unl_neg),
    ] {
        if need > have {
            return Err(Error::PoolExhausted {
                class,
                needed: need,
                available: have,
            });
        }
    }

    let idx_pos = pos[..n_pos].to_vec();
    let idx_neg = neg[..n_neg].to_vec();
    let (mut next_p, mut next_n) = (n_pos, n_neg);
    let idx_unl: Vec<usize> = latent
        .iter()
        .map(|l| match l {
            Label::Pos => {
                next_p += 1;
                pos[next_p - 1]
            }
            Label::Neg => {
                next_n += 1;
                neg[next_n - 1]
            }
        })
        .collect();

    let mut holdout: Vec<usize> = pos[next_p..]
        .iter()
        .chain(&neg[next_n..])
        .copied()
        .collect();
    holdout.sort_unstable();
    if holdout.len() > HOLDOUT_CAP {
        holdout.shuffle(&mut rng);
        holdout.truncate(HOLDOUT_CAP);
        holdout.sort_unstable();
    }

    let triple = SampleTriple::new(
        pool.features.select(Axis(0), &idx_pos),
        pool.features.select(Axis(0), &idx_neg),
        pool.features.select(Axis(0), &idx_unl),
        pi,
    )?;
    Ok(PoolSample {
        triple,
        holdout: pool.select(&holdout),
        indices: SplitIndices {
            pos: idx_pos,
            neg: idx_neg,
            unl: idx_unl,
            holdout,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write_csv(content: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(content.as_bytes()).unwrap();
        f
    }

    fn banana_like(m: usize, seed: u64) -> LabeledPool {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let labels: Vec<Label> = (0..m)
            .map(|_| {
                if rng.random_bool(0.448) {
                    Label::Pos
                } else {
                    Label::Neg
                }
            })
            .collect();
        let features = Array2::from_shape_fn((m, 2), |_| rng.sample(StandardNormal));
        LabeledPool::new(features, labels).unwrap()
    }

    #[test]
    fn artificial_shapes() {
        let t = gen_gaussian_artificial(45, 5, 100, 0.5, 3).unwrap();
        assert_eq!(t.x_pos.dim(), (45, 2));
        assert_eq!(t.x_neg.dim(), (5, 2));
        assert_eq!(t.x_unl.dim(), (100, 2));
        assert_eq!(t.dim(), 2);
    }

    #[test]
    fn artificial_is_deterministic() {
        let a = gen_gaussian_artificial(10, 10, 10, 0.3, 99).unwrap();
        let b = gen_gaussian_artificial(10, 10, 10, 0.3, 99).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.fingerprint(), b.fingerprint());
        let c = gen_gaussian_artificial(10, 10, 10, 0.3, 100).unwrap();
        assert_ne!(a.fingerprint(), c.fingerprint());
    }

    #[test]
    fn artificial_rejects_bad_prior() {
        for pi in [0.0, 1.0, -0.1, 1.5, f64::NAN] {
            assert!(gen_gaussian_artificial(1, 1, 1, pi, 0).is_err());
        }
    }

    #[test]
    fn unlabeled_mixture_mean_is_zero_at_half_prior() {
        let n = 1_000_000;
        let t = gen_gaussian_artificial(0, 0, n, 0.5, 5).unwrap();
        // per-coordinate variance of the mixture: 1 + mu^2 = 1.5
        let sigma = 1.5f64.sqrt();
        for j in 0..2 {
            let mean = t.x_unl.column(j).sum() / n as f64;
            assert!(
                mean.abs() < 3.0 * sigma / (n as f64).sqrt(),
                "coordinate {j}: {mean}"
            );
        }
    }

    #[test]
    fn csv_zero_one_labels_and_standardisation() {
        let f = write_csv("a,b,y\n1,10,0\n2,10,1\n3,10,1\n4,10,0\n");
        let pool = load_csv(f.path(), &LabelColumn::Name("y".into())).unwrap();
        assert_eq!(pool.dim(), 2);
        assert_eq!(pool.len(), 4);
        assert_eq!(
            pool.labels,
            vec![Label::Neg, Label::Pos, Label::Pos, Label::Neg]
        );
        assert_eq!(pool.positive_ratio(), 0.5);
        let a = pool.features.column(0);
        assert!(a.sum().abs() < 1e-12);
        assert!((a.iter().map(|v| v * v).sum::<f64>() / 4.0 - 1.0).abs() < 1e-12);
        // constant column only centred
        assert!(pool.features.column(1).iter().all(|&v| v == 0.0));
    }

    #[test]
    fn csv_label_by_index_and_strings() {
        let f = write_csv("y,x\nyes,1\nno,2\nyes,3\n");
        let pool = load_csv(f.path(), &LabelColumn::Index(0)).unwrap();
        assert_eq!(pool.labels, vec![Label::Pos, Label::Neg, Label::Pos]);
        let f = write_csv("x,y\n1,-1\n2,1\n");
        let pool = load_csv(f.path(), &"y".parse().unwrap()).unwrap();
        assert_eq!(pool.labels, vec![Label::Neg, Label::Pos]);
    }

    #[test]
    fn csv_errors() {
        let three = write_csv("x,y\n1,0\n2,1\n3,2\n");
        let err = load_csv(three.path(), &LabelColumn::Index(1)).unwrap_err();
        assert!(err.to_string().contains("more than two"), "{err}");

        let single = write_csv("x,y\n1,1\n2,1\n");
        assert!(load_csv(single.path(), &LabelColumn::Index(1)).is_err());

        let text = write_csv("x,y\n1,0\nabc,1\n");
        let err = load_csv(text.path(), &LabelColumn::Index(1)).unwrap_err();
        assert!(err.to_string().contains("not numeric"), "{err}");

        let ragged = write_csv("x,z,y\n1,2,0\n2,1\n");
        assert!(load_csv(ragged.path(), &LabelColumn::Index(2)).is_err());

        let f = write_csv("x,y\n1,0\n2,1\n");
        assert!(load_csv(f.path(), &LabelColumn::Name("label".into())).is_err());
        assert!(load_csv("/nonexistent/file.csv", &LabelColumn::Index(0)).is_err());
    }

    #[test]
    fn pool_sampling_shapes_and_disjointness() {
        let pool = banana_like(5300, 1);
        let s = sample_triple_from_pool(&pool, 25, 5, 300, 0.5, 17).unwrap();
        assert_eq!(s.triple.x_pos.dim(), (25, 2));
        assert_eq!(s.triple.x_neg.dim(), (5, 2));
        assert_eq!(s.triple.x_unl.dim(), (300, 2));
        assert_eq!(s.holdout.len(), 5300 - 330);
        assert!(s.holdout.len() <= 4970);
        assert!(s.indices.is_disjoint());
        for &i in &s.indices.pos {
            assert_eq!(pool.labels[i], Label::Pos);
        }
        for &i in &s.indices.neg {
            assert_eq!(pool.labels[i], Label::Neg);
        }
        for (k, &i) in s.indices.holdout.iter().enumerate() {
            assert_eq!(s.holdout.features.row(k), pool.features.row(i));
        }
    }

    #[test]
    fn pool_sampling_caps_holdout() {
        let pool = banana_like(12_000, 2);
        let s = sample_triple_from_pool(&pool, 10, 10, 10, 0.5, 1).unwrap();
        assert_eq!(s.holdout.len(), HOLDOUT_CAP);
        assert!(s.indices.is_disjoint());
    }

    #[test]
    fn pool_sampling_is_deterministic() {
        let pool = banana_like(500, 3);
        let a = sample_triple_from_pool(&pool, 20, 20, 50, 0.4, 8).unwrap();
        let b = sample_triple_from_pool(&pool, 20, 20, 50, 0.4, 8).unwrap();
        assert_eq!(a.indices, b.indices);
        assert_eq!(a.triple, b.triple);
    }

    #[test]
    fn pool_sampling_reports_exhausted_class() {
        let labels = [vec![Label::Pos; 10], vec![Label::Neg; 200]].concat();
        let pool = LabeledPool::new(Array2::zeros((210, 1)), labels).unwrap();
        let err = sample_triple_from_pool(&pool, 5, 5, 100, 0.95, 4).unwrap_err();
        assert!(
            matches!(
                err,
                Error::PoolExhausted {
                    class: "positive",
                    ..
                }
            ),
            "{err}"
        );
    }

    #[test]
    fn unlabeled_latent_frequency_matches_prior() {
        // 10^4 single-row U draws; the latent class is recovered from the pool index
        let pool = banana_like(400, 4);
        let pi = 0.3;
        let reps = 10_000;
        let hits = (0..reps)
            .filter(|&r| {
                let s = sample_triple_from_pool(&pool, 0, 0, 1, pi, r as u64).unwrap();
                pool.labels[s.indices.unl[0]] == Label::Pos
            })
            .count();
        let freq = hits as f64 / reps as f64;
        let tol = 4.0 * (pi * (1.0 - pi) / reps as f64).sqrt();
        assert!((freq - pi).abs() < tol, "freq {freq}");
    }
}
