//! Small dense-network runtime: forward pass, reverse-mode gradients, Adam.
//!
//! Batches are row-major matrices (`batch × features`); layer weights are
//! stored `out × in`.

mod adam;
mod loss;
mod persist;

pub use adam::{adam_step, AdamState, LrSchedule};
pub use loss::{cross_entropy, softmax_rows};
pub(crate) use persist::next_line as persist_next_line;
pub use persist::{load_network, save_network};

use std::fmt::{Debug, Display};
use std::str::FromStr;

use ndarray::{Array1, Array2, ArrayView2, Axis, LinalgScalar, ScalarOperand};
use num_traits::{Float, FromPrimitive, NumAssign};
use rand::Rng;

use crate::error::{contract, Error, Result};

/// Floating-point type a network can be instantiated with.
pub trait Real:
    Float
    + FromPrimitive
    + NumAssign
    + LinalgScalar
    + ScalarOperand
    + Debug
    + Display
    + FromStr
    + Default
    + Send
    + Sync
    + std::iter::Sum
    + 'static
{
    fn lit(v: f64) -> Self {
        <Self as FromPrimitive>::from_f64(v).expect("representable")
    }

    fn as_f64(self) -> f64 {
        num_traits::ToPrimitive::to_f64(&self).expect("representable")
    }
}

impl Real for f32 {}
impl Real for f64 {}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Relu,
    Linear,
    Softmax,
}

impl Activation {
    pub fn tag(&self) -> &'static str {
        match self {
            Activation::Relu => "relu",
            Activation::Linear => "linear",
            Activation::Softmax => "softmax",
        }
    }

    pub fn from_tag(tag: &str) -> Result<Self> {
        match tag {
            "relu" => Ok(Activation::Relu),
            "linear" => Ok(Activation::Linear),
            "softmax" => Ok(Activation::Softmax),
            other => Err(Error::Parse(format!("unknown activation `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DenseLayer<F: Real> {
    pub weights: Array2<F>,
    pub bias: Array1<F>,
    pub activation: Activation,
}

impl<F: Real> DenseLayer<F> {
    /// He-uniform weights for ReLU layers, Glorot-uniform otherwise; bias
    /// uniform in `±1/√inputs`, so no unit starts identically zero.
    pub fn init<R: Rng + ?Sized>(
        inputs: usize,
        outputs: usize,
        activation: Activation,
        rng: &mut R,
    ) -> Self {
        let limit = match activation {
            Activation::Relu => (6.0 / inputs as f64).sqrt(),
            Activation::Linear | Activation::Softmax => (6.0 / (inputs + outputs) as f64).sqrt(),
        };
        let weights = Array2::from_shape_simple_fn((outputs, inputs), || {
            F::lit(rng.random_range(-limit..limit))
        });
        let bias_limit = 1.0 / (inputs as f64).sqrt();
        let bias = Array1::from_shape_simple_fn(outputs, || {
            F::lit(rng.random_range(-bias_limit..bias_limit))
        });
        Self {
            weights,
            bias,
            activation,
        }
    }

    pub fn inputs(&self) -> usize {
        self.weights.ncols()
    }

    pub fn outputs(&self) -> usize {
        self.weights.nrows()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DenseNetwork<F: Real> {
    layers: Vec<DenseLayer<F>>,
}

/// Outputs of every layer from one forward call.
#[derive(Debug, Clone)]
pub struct Activations<F: Real> {
    input: Array2<F>,
    /// Pre-activation of the last layer (logits for a softmax head).
    last_preactivation: Array2<F>,
    outputs: Vec<Array2<F>>,
}

impl<F: Real> Activations<F> {
    pub fn output(&self) -> &Array2<F> {
        self.outputs.last().expect("at least one layer")
    }

    pub fn logits(&self) -> &Array2<F> {
        &self.last_preactivation
    }

    pub fn layer_outputs(&self) -> &[Array2<F>] {
        &self.outputs
    }
}

/// Gradient of a scalar loss with respect to one layer's parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerGrad<F: Real> {
    pub weights: Array2<F>,
    pub bias: Array1<F>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Gradients<F: Real> {
    pub layers: Vec<LayerGrad<F>>,
    /// Gradient with respect to the network input.
    pub input: Array2<F>,
}

impl<F: Real> Gradients<F> {
    pub fn scale(&mut self, factor: F) {
        for g in &mut self.layers {
            g.weights *= factor;
            g.bias *= factor;
        }
        self.input *= factor;
    }

    pub fn is_finite(&self) -> bool {
        self.layers
            .iter()
            .all(|g| g.weights.iter().chain(g.bias.iter()).all(|v| v.is_finite()))
    }
}

/// Which output the incoming loss gradient refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum GradTarget {
    Output,
    Logits,
}

impl<F: Real> DenseNetwork<F> {
    pub fn new(layers: Vec<DenseLayer<F>>) -> Result<Self> {
        contract!(!layers.is_empty(), "network needs at least one layer");
        for (i, pair) in layers.windows(2).enumerate() {
            contract!(
                pair[0].outputs() == pair[1].inputs(),
                "layer {i} outputs {} but layer {} expects {}",
                pair[0].outputs(),
                i + 1,
                pair[1].inputs()
            );
        }
        for (i, l) in layers.iter().enumerate() {
            contract!(
                l.bias.len() == l.outputs(),
                "layer {i} bias length {} != {}",
                l.bias.len(),
                l.outputs()
            );
        }
        Ok(Self { layers })
    }

    /// Freshly initialized network with the given widths and activations.
    /// `widths` has one more entry than `activations`.
    pub fn init<R: Rng + ?Sized>(
        widths: &[usize],
        activations: &[Activation],
        rng: &mut R,
    ) -> Result<Self> {
        contract!(
            widths.len() == activations.len() + 1,
            "need {} activations for {} widths",
            widths.len() - 1,
            widths.len()
        );
        let layers = widths
            .windows(2)
            .zip(activations)
            .map(|(w, &act)| DenseLayer::init(w[0], w[1], act, rng))
            .collect();
        Self::new(layers)
    }

    pub fn layers(&self) -> &[DenseLayer<F>] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [DenseLayer<F>] {
        &mut self.layers
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].inputs()
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().expect("nonempty").outputs()
    }

    pub fn parameter_count(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.weights.len() + l.bias.len())
            .sum()
    }

    pub fn forward(&self, batch: ArrayView2<'_, F>) -> Result<Activations<F>> {
        contract!(
            batch.ncols() == self.input_dim(),
            "batch has {} features, network expects {}",
            batch.ncols(),
            self.input_dim()
        );
        let mut outputs: Vec<Array2<F>> = Vec::with_capacity(self.layers.len());
        let mut last_pre = Array2::zeros((0, 0));
        for (i, layer) in self.layers.iter().enumerate() {
            let mut z = if i == 0 {
                batch.dot(&layer.weights.t())
            } else {
                outputs[i - 1].dot(&layer.weights.t())
            };
            z += &layer.bias;
            let is_last = i + 1 == self.layers.len();
            if is_last {
                last_pre = z.clone();
            }
            apply_activation(&mut z, layer.activation);
            outputs.push(z);
        }
        Ok(Activations {
            input: batch.to_owned(),
            last_preactivation: last_pre,
            outputs,
        })
    }

    /// Final-layer output only.
    pub fn predict(&self, batch: ArrayView2<'_, F>) -> Result<Array2<F>> {
        contract!(
            batch.ncols() == self.input_dim(),
            "batch has {} features, network expects {}",
            batch.ncols(),
            self.input_dim()
        );
        let mut x: Option<Array2<F>> = None;
        for layer in &self.layers {
            let mut z = match &x {
                None => batch.dot(&layer.weights.t()),
                Some(prev) => prev.dot(&layer.weights.t()),
            };
            z += &layer.bias;
            apply_activation(&mut z, layer.activation);
            x = Some(z);
        }
        Ok(x.expect("nonempty"))
    }

    /// Reverse pass given `dL/d(output)`.
    pub fn backward(
        &self,
        acts: &Activations<F>,
        output_grad: ArrayView2<'_, F>,
    ) -> Result<Gradients<F>> {
        self.backward_impl(acts, output_grad, GradTarget::Output)
    }

    /// Reverse pass given `dL/d(logits)` of the last layer, skipping its activation.
    pub fn backward_from_logits(
        &self,
        acts: &Activations<F>,
        logits_grad: ArrayView2<'_, F>,
    ) -> Result<Gradients<F>> {
        self.backward_impl(acts, logits_grad, GradTarget::Logits)
    }

    fn backward_impl(
        &self,
        acts: &Activations<F>,
        grad: ArrayView2<'_, F>,
        target: GradTarget,
    ) -> Result<Gradients<F>> {
        contract!(
            acts.outputs.len() == self.layers.len(),
            "activations from a network with {} layers, expected {}",
            acts.outputs.len(),
            self.layers.len()
        );
        let out_shape = acts.output().dim();
        contract!(
            grad.dim() == out_shape,
            "loss gradient shape {:?} != output shape {:?}",
            grad.dim(),
            out_shape
        );
        for (layer, out) in self.layers.iter().zip(&acts.outputs) {
            contract!(
                out.ncols() == layer.outputs(),
                "activation width {} does not match layer width {}",
                out.ncols(),
                layer.outputs()
            );
        }

        let mut layer_grads = Vec::with_capacity(self.layers.len());
        let mut delta = grad.to_owned();
        for i in (0..self.layers.len()).rev() {
            let layer = &self.layers[i];
            let skip_activation = i + 1 == self.layers.len() && target == GradTarget::Logits;
            if !skip_activation {
                activation_backward(&mut delta, &acts.outputs[i], layer.activation);
            }
            let x = if i == 0 {
                acts.input.view()
            } else {
                acts.outputs[i - 1].view()
            };
            let weights = delta.t().dot(&x);
            let bias = delta.sum_axis(Axis(0));
            delta = delta.dot(&layer.weights);
            layer_grads.push(LayerGrad { weights, bias });
        }
        layer_grads.reverse();
        Ok(Gradients {
            layers: layer_grads,
            input: delta,
        })
    }
}

fn apply_activation<F: Real>(z: &mut Array2<F>, activation: Activation) {
    match activation {
        Activation::Relu => z.mapv_inplace(|v| if v > F::zero() { v } else { F::zero() }),
        Activation::Linear => {}
        Activation::Softmax => softmax_rows(z),
    }
}

/// Turns `dL/d(output)` into `dL/d(pre-activation)` in place.
fn activation_backward<F: Real>(delta: &mut Array2<F>, output: &Array2<F>, activation: Activation) {
    match activation {
        Activation::Relu => {
            ndarray::Zip::from(delta).and(output).for_each(|d, &o| {
                if o <= F::zero() {
                    *d = F::zero();
                }
            });
        }
        Activation::Linear => {}
        Activation::Softmax => {
            for (mut d, p) in delta.rows_mut().into_iter().zip(output.rows()) {
                let dot = d
                    .iter()
                    .zip(p.iter())
                    .fold(F::zero(), |acc, (&a, &b)| acc + a * b);
                ndarray::Zip::from(&mut d)
                    .and(&p)
                    .for_each(|d, &p| *d = p * (*d - dot));
            }
        }
    }
}
