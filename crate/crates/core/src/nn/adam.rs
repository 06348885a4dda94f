use crate::error::{Error, Result};

use super::tensor::{Parameter, Scalar, Tensor};

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self { lr: 1e-3, beta1: 0.9, beta2: 0.999, eps: 1e-8 }
    }
}

/// Moment estimates for an ordered list of parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState<T: Scalar = f32> {
    pub step: u64,
    m: Vec<Tensor<T>>,
    v: Vec<Tensor<T>>,
}

impl<T: Scalar> AdamState<T> {
    pub fn new(params: &[&Parameter<T>]) -> Self {
        Self {
            step: 0,
            m: params.iter().map(|p| Tensor::zeros(p.value.shape())).collect(),
            v: params.iter().map(|p| Tensor::zeros(p.value.shape())).collect(),
        }
    }
}

/// One bias-corrected Adam update of every parameter from its gradient.
pub fn adam_step<T: Scalar>(params: Vec<&mut Parameter<T>>, state: &mut AdamState<T>, cfg: &AdamConfig) -> Result<()> {
    if params.len() != state.m.len() {
        return Err(Error::Shape(format!("{} parameters for {} optimizer slots", params.len(), state.m.len())));
    }
    state.step += 1;
    let t = state.step as i32;
    let (b1, b2) = (T::from_f64(cfg.beta1), T::from_f64(cfg.beta2));
    let one = T::one();
    let c1 = T::from_f64(1.0 - cfg.beta1.powi(t));
    let c2 = T::from_f64(1.0 - cfg.beta2.powi(t));
    let (lr, eps) = (T::from_f64(cfg.lr), T::from_f64(cfg.eps));
    for ((p, m), v) in params.into_iter().zip(&mut state.m).zip(&mut state.v) {
        if p.value.shape() != m.shape() {
            return Err(Error::Shape(format!("optimizer slot for {} has shape {:?}", p.name, m.shape())));
        }
        let grads = p.grad.data();
        let values = p.value.data_mut();
        for (((x, &g), mi), vi) in values.iter_mut().zip(grads).zip(m.data_mut()).zip(v.data_mut()) {
            *mi = b1 * *mi + (one - b1) * g;
            *vi = b2 * *vi + (one - b2) * g * g;
            let m_hat = *mi / c1;
            let v_hat = *vi / c2;
            *x = *x - lr * m_hat / (v_hat.sqrt() + eps);
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn param(value: f64, grad: f64) -> Parameter<f64> {
        let mut p = Parameter::new("p", Tensor::from_vec(&[1], vec![value]).unwrap());
        p.grad.data_mut()[0] = grad;
        p
    }

    #[test]
    fn first_step_moves_by_lr() {
        let mut p = param(0.0, 1.0);
        let mut s = AdamState::new(&[&p]);
        adam_step(vec![&mut p], &mut s, &AdamConfig::default()).unwrap();
        // m̂ = 1, v̂ = 1, so the step is lr / (1 + ε)
        let expected = -1e-3 / (1.0 + 1e-8);
        assert!((p.value.data()[0] - expected).abs() < 1e-15);
        assert_eq!(s.step, 1);
    }

    #[test]
    fn zero_gradient_is_a_no_op() {
        let mut p = param(0.25, 0.0);
        let mut s = AdamState::new(&[&p]);
        for _ in 0..5 {
            adam_step(vec![&mut p], &mut s, &AdamConfig::default()).unwrap();
        }
        assert_eq!(p.value.data()[0], 0.25);
    }

    #[test]
    fn parameters_are_independent() {
        let mut a = param(1.0, 0.5);
        let mut b = param(1.0, 0.0);
        let mut s = AdamState::new(&[&a, &b]);
        adam_step(vec![&mut a, &mut b], &mut s, &AdamConfig::default()).unwrap();
        assert!(a.value.data()[0] < 1.0);
        assert_eq!(b.value.data()[0], 1.0);
    }
}
