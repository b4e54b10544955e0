use ndarray::Zip;

use super::{DenseNetwork, Gradients, LayerGrad, Real};
use crate::error::{contract, Result};

/// Adam moment accumulators for one network.
#[derive(Debug, Clone)]
pub struct AdamState<F: Real> {
    first: Vec<LayerGrad<F>>,
    second: Vec<LayerGrad<F>>,
    step: u64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl<F: Real> AdamState<F> {
    pub fn new(net: &DenseNetwork<F>) -> Self {
        let zeros = || {
            net.layers()
                .iter()
                .map(|l| LayerGrad {
                    weights: ndarray::Array2::zeros(l.weights.dim()),
                    bias: ndarray::Array1::zeros(l.bias.dim()),
                })
                .collect::<Vec<_>>()
        };
        Self {
            first: zeros(),
            second: zeros(),
            step: 0,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }

    pub fn step(&self) -> u64 {
        self.step
    }
}

/// Exponentially decaying learning rate, `base · decay^epoch`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LrSchedule {
    pub base_lr: f64,
    pub decay: f64,
}

impl LrSchedule {
    pub fn constant(base_lr: f64) -> Self {
        Self {
            base_lr,
            decay: 1.0,
        }
    }

    pub fn lr(&self, epoch: usize) -> f64 {
        self.base_lr * self.decay.powi(epoch as i32)
    }
}

/// One bias-corrected Adam update of every parameter of `net`.
pub fn adam_step<F: Real>(
    net: &mut DenseNetwork<F>,
    grads: &Gradients<F>,
    state: &mut AdamState<F>,
    lr: f64,
) -> Result<()> {
    contract!(
        grads.layers.len() == net.layers().len() && state.first.len() == net.layers().len(),
        "gradient/state layer count does not match the network"
    );
    state.step += 1;
    let t = state.step as i32;
    let b1 = F::lit(state.beta1);
    let b2 = F::lit(state.beta2);
    let c1 = F::one() - b1;
    let c2 = F::one() - b2;
    let bias1 = F::lit(1.0 - state.beta1.powi(t));
    let bias2 = F::lit(1.0 - state.beta2.powi(t));
    let lr = F::lit(lr);
    let eps = F::lit(state.epsilon);

    let update = |p: &mut F, g: &F, m: &mut F, v: &mut F| {
        *m = b1 * *m + c1 * *g;
        *v = b2 * *v + c2 * *g * *g;
        let m_hat = *m / bias1;
        let v_hat = *v / bias2;
        *p = *p - lr * m_hat / (v_hat.sqrt() + eps);
    };

    for (((layer, g), m), v) in net
        .layers_mut()
        .iter_mut()
        .zip(&grads.layers)
        .zip(&mut state.first)
        .zip(&mut state.second)
    {
        contract!(
            layer.weights.dim() == g.weights.dim() && layer.bias.dim() == g.bias.dim(),
            "gradient shape does not match parameters"
        );
        Zip::from(&mut layer.weights)
            .and(&g.weights)
            .and(&mut m.weights)
            .and(&mut v.weights)
            .for_each(update);
        Zip::from(&mut layer.bias)
            .and(&g.bias)
            .and(&mut m.bias)
            .and(&mut v.bias)
            .for_each(update);
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::{Activation, DenseLayer};
    use ndarray::{array, Array2};

    fn scalar_net(p: f64) -> DenseNetwork<f64> {
        DenseNetwork::new(vec![DenseLayer {
            weights: array![[p]],
            bias: array![0.0],
            activation: Activation::Linear,
        }])
        .unwrap()
    }

    fn grads(g: f64) -> Gradients<f64> {
        Gradients {
            layers: vec![LayerGrad {
                weights: array![[g]],
                bias: array![0.0],
            }],
            input: Array2::zeros((0, 0)),
        }
    }

    #[test]
    fn zero_gradient_leaves_parameters() {
        let mut net = scalar_net(1.5);
        let mut state = AdamState::new(&net);
        for _ in 0..5 {
            adam_step(&mut net, &grads(0.0), &mut state, 0.1).unwrap();
        }
        assert_eq!(net.layers()[0].weights[[0, 0]], 1.5);
    }

    #[test]
    fn first_step_moves_by_learning_rate() {
        for g in [-3.0, 0.02, 7.5] {
            let mut net = scalar_net(0.0);
            let mut state = AdamState::new(&net);
            adam_step(&mut net, &grads(g), &mut state, 1e-3).unwrap();
            let delta = net.layers()[0].weights[[0, 0]];
            assert!(
                (delta + 1e-3 * f64::signum(g)).abs() < 1e-6,
                "g={g} delta={delta}"
            );
        }
    }

    #[test]
    fn converges_on_quadratic() {
        let mut net = scalar_net(0.0);
        let mut state = AdamState::new(&net);
        for _ in 0..200 {
            let p = net.layers()[0].weights[[0, 0]];
            adam_step(&mut net, &grads(2.0 * (p - 3.0)), &mut state, 0.1).unwrap();
        }
        let p = net.layers()[0].weights[[0, 0]];
        assert!((p - 3.0).abs() < 0.01, "p={p}");
    }

    #[test]
    fn schedule_decays() {
        let s = LrSchedule {
            base_lr: 1e-3,
            decay: 0.95,
        };
        assert_eq!(s.lr(0), 1e-3);
        assert!((s.lr(20) - 1e-3 * 0.95f64.powi(20)).abs() < 1e-15);
    }
}
