//! Analytic in-process oracles with known ground-truth salience.

use super::{batch_shape, check_scores, ScoringOracle};
use crate::error::{Error, Result};
use crate::tensor::{ImageTensor, ScalarField2D};

/// `score(x) = sum_{c,i,j} weights[i, j] * x[c, i, j]`.
///
/// With uniform unit weights this is the plain summation model. Being
/// linear, the drop in score from zeroing a region is exactly the weighted
/// sum over that region, which makes it a ground-truth oracle for every
/// perturbation method.
#[derive(Debug, Clone)]
pub struct WeightedSumProxy {
    weights: ScalarField2D,
    calls: u64,
}

impl WeightedSumProxy {
    pub fn new(weights: ScalarField2D) -> Self {
        Self { weights, calls: 0 }
    }

    pub fn uniform(height: usize, width: usize) -> Self {
        Self::new(ScalarField2D::filled(height, width, 1.0))
    }

    pub fn weights(&self) -> &ScalarField2D {
        &self.weights
    }

    pub fn score_unchecked(weights: &ScalarField2D, x: &ImageTensor) -> f64 {
        let w = weights.values();
        (0..x.channels())
            .map(|c| x.plane(c).iter().zip(w).map(|(&xv, &wv)| xv as f64 * wv as f64).sum::<f64>())
            .sum()
    }
}

fn check_plane(weights: &ScalarField2D, shape: (usize, usize, usize)) -> Result<()> {
    if (shape.1, shape.2) != weights.dims() {
        return Err(Error::dim(format!(
            "proxy weights are {:?}, input is {}x{}",
            weights.dims(),
            shape.1,
            shape.2
        )));
    }
    Ok(())
}

impl ScoringOracle for WeightedSumProxy {
    fn score_batch(&mut self, inputs: &[ImageTensor]) -> Result<Vec<f64>> {
        check_plane(&self.weights, batch_shape(inputs)?)?;
        let scores: Vec<f64> = inputs.iter().map(|x| Self::score_unchecked(&self.weights, x)).collect();
        check_scores(&scores)?;
        self.calls += inputs.len() as u64;
        Ok(scores)
    }

    fn call_count(&self) -> u64 {
        self.calls
    }

    fn set_target(&mut self, class: usize) -> Result<()> {
        if class == 0 {
            Ok(())
        } else {
            Err(Error::Oracle(format!("weighted-sum proxy has one class, asked for {class}")))
        }
    }
}

/// One weight field per class; the selected class behaves as a
/// [`WeightedSumProxy`].
#[derive(Debug, Clone)]
pub struct MultiClassProxy {
    classes: Vec<ScalarField2D>,
    target: usize,
    calls: u64,
}

impl MultiClassProxy {
    pub fn new(classes: Vec<ScalarField2D>, target: usize) -> Result<Self> {
        let first = classes
            .first()
            .ok_or_else(|| Error::InvalidConfig("multi-class proxy needs at least one class".into()))?;
        if classes.iter().any(|c| c.dims() != first.dims()) {
            return Err(Error::dim("class weight fields differ in size"));
        }
        if target >= classes.len() {
            return Err(Error::InvalidConfig(format!(
                "target {target} out of range for {} classes",
                classes.len()
            )));
        }
        Ok(Self { classes, target, calls: 0 })
    }

    /// Builds from a `k x h x w` tensor, one plane per class.
    pub fn from_tensor(t: &ImageTensor, target: usize) -> Result<Self> {
        let (k, h, w) = t.shape();
        let classes =
            (0..k).map(|c| ScalarField2D::new(h, w, t.plane(c).to_vec())).collect::<Result<Vec<_>>>()?;
        Self::new(classes, target)
    }

    pub fn num_classes(&self) -> usize {
        self.classes.len()
    }

    pub fn target(&self) -> usize {
        self.target
    }

    pub fn class_weights(&self, class: usize) -> &ScalarField2D {
        &self.classes[class]
    }
}

impl ScoringOracle for MultiClassProxy {
    fn score_batch(&mut self, inputs: &[ImageTensor]) -> Result<Vec<f64>> {
        let weights = &self.classes[self.target];
        check_plane(weights, batch_shape(inputs)?)?;
        let scores: Vec<f64> = inputs.iter().map(|x| WeightedSumProxy::score_unchecked(weights, x)).collect();
        check_scores(&scores)?;
        self.calls += inputs.len() as u64;
        Ok(scores)
    }

    fn call_count(&self) -> u64 {
        self.calls
    }

    fn set_target(&mut self, class: usize) -> Result<()> {
        if class >= self.classes.len() {
            return Err(Error::Oracle(format!(
                "class {class} out of range for {} classes",
                self.classes.len()
            )));
        }
        self.target = class;
        Ok(())
    }
}

/// Returns the same value for every input, whatever its shape.
#[derive(Debug, Clone)]
pub struct ConstantOracle {
    value: f64,
    calls: u64,
}

impl ConstantOracle {
    pub fn new(value: f64) -> Self {
        Self { value, calls: 0 }
    }
}

impl ScoringOracle for ConstantOracle {
    fn score_batch(&mut self, inputs: &[ImageTensor]) -> Result<Vec<f64>> {
        batch_shape(inputs)?;
        if !self.value.is_finite() {
            return Err(Error::Oracle("constant oracle holds a non-finite value".into()));
        }
        self.calls += inputs.len() as u64;
        Ok(vec![self.value; inputs.len()])
    }

    fn call_count(&self) -> u64 {
        self.calls
    }
}

/// Adapts a per-tensor closure.
pub struct FnOracle<F> {
    f: F,
    calls: u64,
}

impl<F: FnMut(&ImageTensor) -> f64> FnOracle<F> {
    pub fn new(f: F) -> Self {
        Self { f, calls: 0 }
    }
}

impl<F: FnMut(&ImageTensor) -> f64> ScoringOracle for FnOracle<F> {
    fn score_batch(&mut self, inputs: &[ImageTensor]) -> Result<Vec<f64>> {
        batch_shape(inputs)?;
        let scores: Vec<f64> = inputs.iter().map(&mut self.f).collect();
        check_scores(&scores)?;
        self.calls += inputs.len() as u64;
        Ok(scores)
    }

    fn call_count(&self) -> u64 {
        self.calls
    }
}
