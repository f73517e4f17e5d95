//! Linear decision functions `g(x) = <w, phi(x)> + b`, where `phi` is the
//! identity or a Gaussian empirical kernel map.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// `phi(x)_j = exp(-||x - a_j||^2 / (2 width^2))` over a fixed anchor set.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalKernelMap {
    anchors: Array2<f64>,
    width: f64,
}

impl EmpiricalKernelMap {
    pub fn new(anchors: Array2<f64>, width: f64) -> Result<Self> {
        check_width(width)?;
        if anchors.nrows() == 0 {
            return Err(Error::EmptySample("kernel anchors"));
        }
        Ok(Self { anchors, width })
    }

    pub fn anchors(&self) -> &Array2<f64> {
        &self.anchors
    }

    pub fn width(&self) -> f64 {
        self.width
    }

    pub fn input_dim(&self) -> usize {
        self.anchors.ncols()
    }

    pub fn output_dim(&self) -> usize {
        self.anchors.nrows()
    }

    pub fn map(&self, x: ArrayView1<'_, f64>) -> Result<Array1<f64>> {
        if x.len() != self.input_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.input_dim(),
                actual: x.len(),
            });
        }
        let gamma = 1.0 / (2.0 * self.width * self.width);
        Ok(self
            .anchors
            .outer_iter()
            .map(|a| (-gamma * sq_dist(a, x)).exp())
            .collect())
    }

    /// Maps every row of `x`.
    pub fn map_rows(&self, x: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        if x.ncols() != self.input_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.input_dim(),
                actual: x.ncols(),
            });
        }
        let gamma = 1.0 / (2.0 * self.width * self.width);
        let mut out = Array2::zeros((x.nrows(), self.output_dim()));
        for (mut dst, row) in out.outer_iter_mut().zip(x.outer_iter()) {
            for (v, a) in dst.iter_mut().zip(self.anchors.outer_iter()) {
                *v = (-gamma * sq_dist(a, row)).exp();
            }
        }
        Ok(out)
    }
}

fn check_width(width: f64) -> Result<()> {
    if width > 0.0 && width.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!(
            "kernel width must be positive, got {width}"
        )))
    }
}

#[inline]
fn sq_dist(a: ArrayView1<'_, f64>, b: ArrayView1<'_, f64>) -> f64 {
    a.iter().zip(b.iter()).map(|(u, v)| (u - v) * (u - v)).sum()
}

/// Gaussian empirical kernel map of a single point.
pub fn kernel_map(
    anchors: &Array2<f64>,
    width: f64,
    x: ArrayView1<'_, f64>,
) -> Result<Array1<f64>> {
    EmpiricalKernelMap::new(anchors.clone(), width)?.map(x)
}

/// Median pairwise Euclidean distance among the rows (at most the first
/// 500 rows are used). Falls back to 1 for degenerate inputs.
pub fn median_distance(x: ArrayView2<'_, f64>) -> f64 {
    let n = x.nrows().min(500);
    let mut d = Vec::with_capacity(n * n.saturating_sub(1) / 2);
    for i in 0..n {
        for j in (i + 1)..n {
            d.push(sq_dist(x.row(i), x.row(j)).sqrt());
        }
    }
    if d.is_empty() {
        return 1.0;
    }
    d.sort_by(f64::total_cmp);
    let mid = d.len() / 2;
    let med = if d.len() % 2 == 0 {
        0.5 * (d[mid - 1] + d[mid])
    } else {
        d[mid]
    };
    if med > 0.0 {
        med
    } else {
        1.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum FeatureMap {
    Identity { dim: usize },
    Kernel(EmpiricalKernelMap),
}

impl FeatureMap {
    pub fn input_dim(&self) -> usize {
        match self {
            FeatureMap::Identity { dim } => *dim,
            FeatureMap::Kernel(k) => k.input_dim(),
        }
    }

    pub fn output_dim(&self) -> usize {
        match self {
            FeatureMap::Identity { dim } => *dim,
            FeatureMap::Kernel(k) => k.output_dim(),
        }
    }

    pub fn apply_rows(&self, x: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        match self {
            FeatureMap::Identity { dim } if x.ncols() == *dim => Ok(x.to_owned()),
            FeatureMap::Identity { dim } => Err(Error::DimensionMismatch {
                expected: *dim,
                actual: x.ncols(),
            }),
            FeatureMap::Kernel(k) => k.map_rows(x),
        }
    }
}

/// A trained (or template) real-valued decision function.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ModelDocument", into = "ModelDocument")]
pub struct DecisionModel {
    weights: Array1<f64>,
    bias: f64,
    feature_map: FeatureMap,
}

impl DecisionModel {
    pub fn new(weights: Array1<f64>, bias: f64, feature_map: FeatureMap) -> Result<Self> {
        if weights.len() != feature_map.output_dim() {
            return Err(Error::DimensionMismatch {
                expected: feature_map.output_dim(),
                actual: weights.len(),
            });
        }
        Ok(Self {
            weights,
            bias,
            feature_map,
        })
    }

    pub fn linear(weights: Array1<f64>, bias: f64) -> Self {
        let dim = weights.len();
        Self {
            weights,
            bias,
            feature_map: FeatureMap::Identity { dim },
        }
    }

    /// The constant function `g(x) = bias` on `dim`-dimensional inputs.
    pub fn constant(dim: usize, bias: f64) -> Self {
        Self::linear(Array1::zeros(dim), bias)
    }

    pub fn weights(&self) -> &Array1<f64> {
        &self.weights
    }

    pub fn bias(&self) -> f64 {
        self.bias
    }

    pub fn feature_map(&self) -> &FeatureMap {
        &self.feature_map
    }

    pub fn input_dim(&self) -> usize {
        self.feature_map.input_dim()
    }

    pub fn predict(&self, x: ArrayView1<'_, f64>) -> Result<f64> {
        match &self.feature_map {
            FeatureMap::Identity { dim } => {
                if x.len() != *dim {
                    return Err(Error::DimensionMismatch {
                        expected: *dim,
                        actual: x.len(),
                    });
                }
                Ok(self.weights.dot(&x) + self.bias)
            }
            FeatureMap::Kernel(k) => Ok(self.weights.dot(&k.map(x)?) + self.bias),
        }
    }

    /// Scores for every row of `x`.
    pub fn predict_rows(&self, x: ArrayView2<'_, f64>) -> Result<Array1<f64>> {
        let z = match &self.feature_map {
            FeatureMap::Identity { dim } if x.ncols() == *dim => {
                return Ok(x.dot(&self.weights) + self.bias)
            }
            map => map.apply_rows(x)?,
        };
        Ok(z.dot(&self.weights) + self.bias)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

/// On-disk layout of a [`DecisionModel`].
#[derive(Serialize, Deserialize)]
#[serde(tag = "map", rename_all = "snake_case")]
enum ModelDocument {
    Identity {
        weights: Vec<f64>,
        bias: f64,
    },
    GaussianKernel {
        weights: Vec<f64>,
        bias: f64,
        width: f64,
        anchors: Vec<Vec<f64>>,
    },
}

impl From<DecisionModel> for ModelDocument {
    fn from(m: DecisionModel) -> Self {
        let weights = m.weights.to_vec();
        match m.feature_map {
            FeatureMap::Identity { .. } => ModelDocument::Identity {
                weights,
                bias: m.bias,
            },
            FeatureMap::Kernel(k) => ModelDocument::GaussianKernel {
                weights,
                bias: m.bias,
                width: k.width,
                anchors: k.anchors.outer_iter().map(|r| r.to_vec()).collect(),
            },
        }
    }
}

impl TryFrom<ModelDocument> for DecisionModel {
    type Error = Error;

    fn try_from(doc: ModelDocument) -> Result<Self> {
        match doc {
            ModelDocument::Identity { weights, bias } => {
                Ok(DecisionModel::linear(weights.into(), bias))
            }
            ModelDocument::GaussianKernel {
                weights,
                bias,
                width,
                anchors,
            } => {
                let d = anchors.first().map_or(0, Vec::len);
                if anchors.iter().any(|a| a.len() != d) {
                    return Err(Error::Parse("ragged anchor rows".into()));
                }
                let flat: Vec<f64> = anchors.iter().flatten().copied().collect();
                let anchors = Array2::from_shape_vec((anchors.len(), d), flat)
                    .map_err(|e| Error::Parse(e.to_string()))?;
                let map = EmpiricalKernelMap::new(anchors, width)?;
                DecisionModel::new(weights.into(), bias, FeatureMap::Kernel(map))
            }
        }
    }
}

/// Stacks row blocks vertically.
pub(crate) fn stack_rows(parts: &[ArrayView2<'_, f64>]) -> Array2<f64> {
    ndarray::concatenate(Axis(0), parts).expect("row blocks share a column count")
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use proptest::prelude::*;

    #[test]
    fn linear_predictions() {
        let m = DecisionModel::linear(array![1.0, 0.0], 0.0);
        assert_eq!(m.predict(array![2.0, 5.0].view()).unwrap(), 2.0);
        let c = DecisionModel::constant(3, 0.3);
        assert_eq!(c.predict(array![7.0, -1.0, 2.0].view()).unwrap(), 0.3);
        assert!(matches!(
            m.predict(array![1.0].view()),
            Err(Error::DimensionMismatch {
                expected: 2,
                actual: 1
            })
        ));
    }

    #[test]
    fn kernel_map_at_anchor_is_one() {
        let anchors = array![[0.0, 0.0], [1.0, 2.0], [-3.0, 0.5]];
        let v = kernel_map(&anchors, 0.7, anchors.row(1)).unwrap();
        assert_eq!(v[1], 1.0);
        assert!(v.iter().all(|&c| c > 0.0 && c <= 1.0));

        let map = EmpiricalKernelMap::new(anchors.clone(), 0.7).unwrap();
        let model =
            DecisionModel::new(array![0.0, 1.0, 0.0], 0.0, FeatureMap::Kernel(map)).unwrap();
        assert_eq!(model.predict(anchors.row(1)).unwrap(), 1.0);
    }

    #[test]
    fn kernel_half_height_distance() {
        let width = 1.3;
        let r = width * (2.0 * std::f64::consts::LN_2).sqrt();
        let anchors = array![[0.0, 0.0]];
        let v = kernel_map(&anchors, width, array![r, 0.0].view()).unwrap();
        assert!((v[0] - 0.5).abs() < 1e-14);
    }

    #[test]
    fn kernel_rejects_bad_width() {
        let anchors = array![[0.0]];
        for w in [0.0, -1.0, f64::NAN] {
            assert!(kernel_map(&anchors, w, array![1.0].view()).is_err());
        }
    }

    #[test]
    fn batch_matches_single() {
        let anchors = array![[0.0, 1.0], [2.0, -1.0]];
        let map = EmpiricalKernelMap::new(anchors, 1.5).unwrap();
        let model = DecisionModel::new(array![0.4, -2.0], 0.1, FeatureMap::Kernel(map)).unwrap();
        let x = array![[0.3, 0.2], [5.0, 1.0], [2.0, -1.0]];
        let batch = model.predict_rows(x.view()).unwrap();
        for (i, row) in x.outer_iter().enumerate() {
            assert_eq!(batch[i], model.predict(row).unwrap());
        }
    }

    #[test]
    fn json_round_trip() {
        let map = EmpiricalKernelMap::new(array![[0.0, 1.0], [2.0, -1.0]], 1.5).unwrap();
        let model = DecisionModel::new(array![0.4, -2.0], 0.1, FeatureMap::Kernel(map)).unwrap();
        let text = model.to_json().unwrap();
        assert!(text.contains("gaussian_kernel"));
        assert_eq!(DecisionModel::from_json(&text).unwrap(), model);

        let lin = DecisionModel::linear(array![1.0 / 3.0, -0.1], 2.5);
        assert_eq!(
            DecisionModel::from_json(&lin.to_json().unwrap()).unwrap(),
            lin
        );
    }

    #[test]
    fn median_distance_simple() {
        let x = array![[0.0], [1.0], [3.0]];
        // pairwise distances 1, 3, 2
        assert_eq!(median_distance(x.view()), 2.0);
        assert_eq!(median_distance(array![[1.0]].view()), 1.0);
    }

    proptest! {
        #[test]
        fn kernel_is_symmetric(a in prop::array::uniform3(-5.0f64..5.0), b in prop::array::uniform3(-5.0f64..5.0), w in 0.1f64..4.0) {
            let a = Array1::from(a.to_vec());
            let b = Array1::from(b.to_vec());
            let ab = kernel_map(&a.clone().insert_axis(Axis(0)), w, b.view()).unwrap()[0];
            let ba = kernel_map(&b.clone().insert_axis(Axis(0)), w, a.view()).unwrap()[0];
            prop_assert_eq!(ab, ba);
        }

        #[test]
        fn predict_is_linear_in_weights(
            w1 in prop::array::uniform2(-3.0f64..3.0),
            w2 in prop::array::uniform2(-3.0f64..3.0),
            x in prop::array::uniform2(-3.0f64..3.0),
            alpha in -2.0f64..2.0,
            beta in -2.0f64..2.0,
        ) {
            let anchors = array![[0.5, -0.5], [1.0, 1.0]];
            let map = FeatureMap::Kernel(EmpiricalKernelMap::new(anchors, 0.8).unwrap());
            let w1 = Array1::from(w1.to_vec());
            let w2 = Array1::from(w2.to_vec());
            let x = Array1::from(x.to_vec());
            let g = |w: Array1<f64>| DecisionModel::new(w, 0.0, map.clone()).unwrap().predict(x.view()).unwrap();
            let lhs = g(&w1 * alpha + &w2 * beta);
            let rhs = alpha * g(w1.clone()) + beta * g(w2.clone());
            prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + lhs.abs()));
        }
    }
}
