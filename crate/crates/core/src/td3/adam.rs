use super::linalg::Scalar;
use super::mlp::{Gradients, Mlp};
use crate::{Error, Result};

/// Adam with bias correction; one moment pair per parameter tensor.
#[derive(Debug, Clone, PartialEq)]
pub struct Adam<T> {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub step: u64,
    pub m: Vec<Vec<T>>,
    pub v: Vec<Vec<T>>,
}

impl<T: Scalar> Adam<T> {
    pub fn new(lr: f64, net: &Mlp<T>) -> Self {
        let zeros: Vec<Vec<T>> = net.params().iter().map(|p| vec![T::zero(); p.len()]).collect();
        Self {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            step: 0,
            m: zeros.clone(),
            v: zeros,
        }
    }

    pub fn apply(&mut self, net: &mut Mlp<T>, grads: &Gradients<T>) -> Result<()> {
        if grads.layers.len() * 2 != self.m.len() {
            return Err(Error::Dimension {
                expected: self.m.len(),
                got: grads.layers.len() * 2,
            });
        }
        self.step += 1;
        let t = self.step as i32;
        let bc1 = 1.0 - self.beta1.powi(t);
        let bc2 = 1.0 - self.beta2.powi(t);
        let step_size = T::from_f64(self.lr / bc1);
        let bc2_sqrt = T::from_f64(bc2.sqrt());
        let (b1, b2) = (T::from_f64(self.beta1), T::from_f64(self.beta2));
        let (one_b1, one_b2) = (T::one() - b1, T::one() - b2);
        let eps = T::from_f64(self.eps);

        let flat_grads = grads.layers.iter().flat_map(|(w, b)| [w.as_slice(), b.as_slice()]);
        for (((param, g), m), v) in net
            .params_mut()
            .into_iter()
            .zip(flat_grads)
            .zip(self.m.iter_mut())
            .zip(self.v.iter_mut())
        {
            if param.len() != g.len() {
                return Err(Error::Dimension {
                    expected: param.len(),
                    got: g.len(),
                });
            }
            for i in 0..param.len() {
                m[i] = b1 * m[i] + one_b1 * g[i];
                v[i] = b2 * v[i] + one_b2 * g[i] * g[i];
                let denom = v[i].sqrt() / bc2_sqrt + eps;
                param[i] = param[i] - step_size * m[i] / denom;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::td3::Activation;

    #[test]
    fn first_step_moves_by_lr_against_gradient_sign() {
        let mut net = Mlp::<f64>::zeros(&[2, 1], Activation::Relu, Activation::Identity).unwrap();
        let mut opt = Adam::new(1e-3, &net);
        let grads = Gradients {
            layers: vec![(vec![0.5, -2.0], vec![1e-3])],
            input: vec![],
        };
        opt.apply(&mut net, &grads).unwrap();
        let l = &net.layers()[0];
        assert!((l.weight[0] + 1e-3).abs() < 1e-8);
        assert!((l.weight[1] - 1e-3).abs() < 1e-8);
        assert!((l.bias[0] + 1e-3).abs() < 1e-6);
    }

    #[test]
    fn minimizes_quadratic() {
        // f(w) = sum (w - 3)^2
        let mut net = Mlp::<f64>::zeros(&[3, 1], Activation::Relu, Activation::Identity).unwrap();
        let mut opt = Adam::new(0.05, &net);
        for _ in 0..2000 {
            let l = &net.layers()[0];
            let gw: Vec<f64> = l.weight.iter().map(|w| 2.0 * (w - 3.0)).collect();
            let gb: Vec<f64> = l.bias.iter().map(|b| 2.0 * (b - 3.0)).collect();
            opt.apply(&mut net, &Gradients { layers: vec![(gw, gb)], input: vec![] }).unwrap();
        }
        assert!(net.layers()[0].weight.iter().all(|w| (w - 3.0).abs() < 1e-3));
    }
}
