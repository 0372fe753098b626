//! Dense feed-forward networks with a recorded forward pass (`Tape`) and exact
//! reverse-mode gradients.

use rand::Rng;

use super::linalg::{gemm, Scalar};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Identity,
    Relu,
    Tanh,
}

impl Activation {
    pub fn name(self) -> &'static str {
        match self {
            Self::Identity => "identity",
            Self::Relu => "relu",
            Self::Tanh => "tanh",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        match s {
            "identity" => Some(Self::Identity),
            "relu" => Some(Self::Relu),
            "tanh" => Some(Self::Tanh),
            _ => None,
        }
    }

    fn apply<T: Scalar>(self, xs: &mut [T]) {
        match self {
            Self::Identity => {}
            Self::Relu => xs.iter_mut().for_each(|x| *x = x.max(T::zero())),
            Self::Tanh => xs.iter_mut().for_each(|x| *x = x.tanh()),
        }
    }

    /// Multiplies `grad` in place by the derivative, expressed via the output `y`.
    fn backprop<T: Scalar>(self, y: &[T], grad: &mut [T]) {
        match self {
            Self::Identity => {}
            Self::Relu => grad.iter_mut().zip(y).for_each(|(g, &y)| {
                if y <= T::zero() {
                    *g = T::zero();
                }
            }),
            Self::Tanh => grad
                .iter_mut()
                .zip(y)
                .for_each(|(g, &y)| *g = *g * (T::one() - y * y)),
        }
    }
}

/// Affine map followed by an activation. `weight` is `outputs x inputs`, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Layer<T> {
    pub inputs: usize,
    pub outputs: usize,
    pub weight: Vec<T>,
    pub bias: Vec<T>,
    pub activation: Activation,
}

impl<T: Scalar> Layer<T> {
    pub fn zeros(inputs: usize, outputs: usize, activation: Activation) -> Self {
        Self {
            inputs,
            outputs,
            weight: vec![T::zero(); inputs * outputs],
            bias: vec![T::zero(); outputs],
            activation,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mlp<T> {
    layers: Vec<Layer<T>>,
}

/// Activations of one batched forward pass; `activations[0]` is the input and
/// `activations[i + 1]` the post-activation output of layer `i`.
#[derive(Debug, Clone, Default)]
pub struct Tape<T> {
    batch: usize,
    activations: Vec<Vec<T>>,
}

impl<T: Scalar> Tape<T> {
    pub fn batch(&self) -> usize {
        self.batch
    }

    pub fn is_empty(&self) -> bool {
        self.activations.is_empty()
    }

    pub fn input(&self) -> &[T] {
        self.activations.first().map_or(&[], |v| v.as_slice())
    }

    pub fn output(&self) -> &[T] {
        self.activations.last().map_or(&[], |v| v.as_slice())
    }

    pub fn into_output(mut self) -> Vec<T> {
        self.activations.pop().unwrap_or_default()
    }
}

/// Per-layer `(d weight, d bias)` plus the gradient w.r.t. the network input.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients<T> {
    pub layers: Vec<(Vec<T>, Vec<T>)>,
    pub input: Vec<T>,
}

impl<T: Scalar> Gradients<T> {
    pub fn all_finite(&self) -> bool {
        self.layers
            .iter()
            .all(|(w, b)| w.iter().chain(b).all(|x| x.is_finite()))
    }
}

impl<T: Scalar> Mlp<T> {
    /// Uniform `±1/sqrt(fan_in)` initialization of weights and biases.
    pub fn new<R: Rng + ?Sized>(
        dims: &[usize],
        hidden: Activation,
        output: Activation,
        rng: &mut R,
    ) -> Result<Self> {
        let mut net = Self::zeros(dims, hidden, output)?;
        for layer in &mut net.layers {
            let bound = 1.0 / (layer.inputs as f64).sqrt();
            for w in layer.weight.iter_mut().chain(layer.bias.iter_mut()) {
                *w = T::from_f64(rng.random_range(-bound..bound));
            }
        }
        Ok(net)
    }

    pub fn zeros(dims: &[usize], hidden: Activation, output: Activation) -> Result<Self> {
        if dims.len() < 2 || dims.contains(&0) {
            return Err(Error::param("layer_dims", format!("need >= 2 positive widths, got {dims:?}")));
        }
        let last = dims.len() - 2;
        let layers = dims
            .windows(2)
            .enumerate()
            .map(|(i, w)| Layer::zeros(w[0], w[1], if i == last { output } else { hidden }))
            .collect();
        Ok(Self { layers })
    }

    pub fn from_layers(layers: Vec<Layer<T>>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::param("layers", "network needs at least one layer"));
        }
        for pair in layers.windows(2) {
            if pair[0].outputs != pair[1].inputs {
                return Err(Error::Dimension {
                    expected: pair[0].outputs,
                    got: pair[1].inputs,
                });
            }
        }
        for l in &layers {
            if l.weight.len() != l.inputs * l.outputs || l.bias.len() != l.outputs {
                return Err(Error::Dimension {
                    expected: l.inputs * l.outputs + l.outputs,
                    got: l.weight.len() + l.bias.len(),
                });
            }
        }
        Ok(Self { layers })
    }

    pub fn layers(&self) -> &[Layer<T>] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Layer<T>] {
        &mut self.layers
    }

    pub fn layer_dims(&self) -> Vec<usize> {
        std::iter::once(self.layers[0].inputs)
            .chain(self.layers.iter().map(|l| l.outputs))
            .collect()
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].inputs
    }

    pub fn output_dim(&self) -> usize {
        self.layers[self.layers.len() - 1].outputs
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(|l| l.weight.len() + l.bias.len()).sum()
    }

    /// Parameter tensors in declaration order: w0, b0, w1, b1, ...
    pub fn params(&self) -> Vec<&[T]> {
        self.layers
            .iter()
            .flat_map(|l| [l.weight.as_slice(), l.bias.as_slice()])
            .collect()
    }

    pub fn params_mut(&mut self) -> Vec<&mut [T]> {
        self.layers
            .iter_mut()
            .flat_map(|l| [l.weight.as_mut_slice(), l.bias.as_mut_slice()])
            .collect()
    }

    pub fn all_finite(&self) -> bool {
        self.params().iter().all(|p| p.iter().all(|x| x.is_finite()))
    }

    pub fn forward(&self, input: &[T]) -> Result<Vec<T>> {
        Ok(self.forward_batch(input, 1)?.into_output())
    }

    /// Runs `batch` row-major inputs and records every activation.
    pub fn forward_batch(&self, input: &[T], batch: usize) -> Result<Tape<T>> {
        let expected = self.input_dim() * batch;
        if input.len() != expected || batch == 0 {
            return Err(Error::Dimension {
                expected,
                got: input.len(),
            });
        }
        let mut activations = Vec::with_capacity(self.layers.len() + 1);
        activations.push(input.to_vec());
        for layer in &self.layers {
            let x = activations.last().expect("input pushed");
            let mut out: Vec<T> = Vec::with_capacity(batch * layer.outputs);
            for _ in 0..batch {
                out.extend_from_slice(&layer.bias);
            }
            gemm(batch, layer.inputs, layer.outputs, T::one(), x, false, &layer.weight, true, T::one(), &mut out);
            layer.activation.apply(&mut out);
            activations.push(out);
        }
        Ok(Tape { batch, activations })
    }

    pub fn predict_batch(&self, input: &[T], batch: usize) -> Result<Vec<T>> {
        Ok(self.forward_batch(input, batch)?.into_output())
    }

    fn check_tape(&self, tape: &Tape<T>, upstream: &[T]) -> Result<()> {
        if tape.is_empty() {
            return Err(Error::Contract("backward called without a recorded forward pass".into()));
        }
        if tape.activations.len() != self.layers.len() + 1 {
            return Err(Error::Contract("tape was recorded on a different network".into()));
        }
        let expected = tape.batch * self.output_dim();
        if upstream.len() != expected {
            return Err(Error::Dimension {
                expected,
                got: upstream.len(),
            });
        }
        Ok(())
    }

    /// Gradients of `sum(output * upstream)` w.r.t. every parameter and the input.
    pub fn backward(&self, tape: &Tape<T>, upstream: &[T]) -> Result<Gradients<T>> {
        self.backprop(tape, upstream, true)
    }

    /// Only the input gradient; skips the weight-gradient products.
    pub fn input_gradient(&self, tape: &Tape<T>, upstream: &[T]) -> Result<Vec<T>> {
        Ok(self.backprop(tape, upstream, false)?.input)
    }

    fn backprop(&self, tape: &Tape<T>, upstream: &[T], with_params: bool) -> Result<Gradients<T>> {
        self.check_tape(tape, upstream)?;
        let batch = tape.batch;
        let mut layers_grad = Vec::with_capacity(self.layers.len());
        let mut delta = upstream.to_vec();
        for (i, layer) in self.layers.iter().enumerate().rev() {
            let x = &tape.activations[i];
            let y = &tape.activations[i + 1];
            layer.activation.backprop(y, &mut delta);
            if with_params {
                let mut dw = vec![T::zero(); layer.weight.len()];
                gemm(layer.outputs, batch, layer.inputs, T::one(), &delta, true, x, false, T::zero(), &mut dw);
                let mut db = vec![T::zero(); layer.outputs];
                for row in delta.chunks_exact(layer.outputs) {
                    db.iter_mut().zip(row).for_each(|(acc, &g)| *acc = *acc + g);
                }
                layers_grad.push((dw, db));
            }
            let mut prev = vec![T::zero(); batch * layer.inputs];
            gemm(batch, layer.outputs, layer.inputs, T::one(), &delta, false, &layer.weight, false, T::zero(), &mut prev);
            delta = prev;
        }
        layers_grad.reverse();
        Ok(Gradients {
            layers: layers_grad,
            input: delta,
        })
    }

    /// Polyak step: `self = tau * online + (1 - tau) * self`.
    pub fn soft_update_from(&mut self, online: &Mlp<T>, tau: T) {
        debug_assert_eq!(self.layer_dims(), online.layer_dims());
        let keep = T::one() - tau;
        for (dst, src) in self.params_mut().into_iter().zip(online.params()) {
            dst.iter_mut().zip(src).for_each(|(t, &o)| *t = tau * o + keep * *t);
        }
    }

    pub fn cast<U: Scalar>(&self) -> Mlp<U> {
        let conv = |v: &[T]| v.iter().map(|x| U::from_f64(x.as_f64())).collect();
        Mlp {
            layers: self
                .layers
                .iter()
                .map(|l| Layer {
                    inputs: l.inputs,
                    outputs: l.outputs,
                    weight: conv(&l.weight),
                    bias: conv(&l.bias),
                    activation: l.activation,
                })
                .collect(),
        }
    }
}
