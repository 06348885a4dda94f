use super::tensor::{Module, Parameter, Scalar};

/// Result of comparing analytic gradients with central differences.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct GradCheckReport {
    pub checked: usize,
    pub max_rel_err: f64,
    pub max_abs_numeric: f64,
    pub worst_param: Option<String>,
    pub worst_index: usize,
    pub analytic: f64,
    pub numeric: f64,
    pub tol: f64,
    pub passed: bool,
}

/// Relative error with a floor on the denominator so that two tiny values do
/// not register as a large relative disagreement.
pub fn rel_err(a: f64, n: f64) -> f64 {
    (a - n).abs() / a.abs().max(n.abs()).max(1e-6)
}

impl<T: Scalar> Module<T> for Vec<Parameter<T>> {
    fn params(&self) -> Vec<&Parameter<T>> {
        self.iter().collect()
    }
    fn params_mut(&mut self) -> Vec<&mut Parameter<T>> {
        self.iter_mut().collect()
    }
}

/// `f` evaluates the scalar loss and accumulates analytic gradients into the
/// model. Every coordinate of every parameter is compared against
/// `(f(θ + h) - f(θ - h)) / 2h`.
pub fn grad_check<M: Module<f64>>(model: &mut M, mut f: impl FnMut(&mut M) -> f64, h: f64, tol: f64) -> GradCheckReport {
    model.zero_grad();
    f(model);
    let analytic: Vec<Vec<f64>> = model.params().iter().map(|p| p.grad.data().to_vec()).collect();
    let mut report = GradCheckReport {
        checked: 0,
        max_rel_err: 0.0,
        max_abs_numeric: 0.0,
        worst_param: None,
        worst_index: 0,
        analytic: 0.0,
        numeric: 0.0,
        tol,
        passed: true,
    };
    for (pi, grads) in analytic.iter().enumerate() {
        for (j, &a) in grads.iter().enumerate() {
            let original = model.params()[pi].value.data()[j];
            model.params_mut()[pi].value.data_mut()[j] = original + h;
            let plus = f(model);
            model.params_mut()[pi].value.data_mut()[j] = original - h;
            let minus = f(model);
            model.params_mut()[pi].value.data_mut()[j] = original;
            let n = (plus - minus) / (2.0 * h);
            let e = rel_err(a, n);
            report.checked += 1;
            report.max_abs_numeric = report.max_abs_numeric.max(n.abs());
            if e > report.max_rel_err || report.worst_param.is_none() {
                report.max_rel_err = e;
                report.worst_param = Some(model.params()[pi].name.clone());
                report.worst_index = j;
                report.analytic = a;
                report.numeric = n;
            }
        }
    }
    model.zero_grad();
    report.passed = report.max_rel_err < tol;
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::{Activation, Linear, Tensor};

    #[test]
    fn constant_function_has_zero_gradients() {
        let mut ps = vec![Parameter::new("x", Tensor::<f64>::from_vec(&[3], vec![1.0, 2.0, 3.0]).unwrap())];
        let r = grad_check(&mut ps, |_| 4.0, 1e-5, 1e-4);
        assert!(r.passed);
        assert_eq!(r.analytic, 0.0);
        assert!(r.max_abs_numeric < 1e-8);
    }

    #[test]
    fn corrupted_backward_is_caught() {
        let mut rng = crate::seed::rng_from_seed(5);
        let mut lin = Linear::<f64>::new("lin", 3, 2, &mut rng);
        let x = Tensor::<f64>::glorot(4, 3, &mut rng);
        let report = grad_check(
            &mut lin,
            |m| {
                let y = m.forward(&x).unwrap();
                let y = Activation::Tanh.forward(&y);
                let dy = Activation::Tanh.backward(&y, &Tensor::from_vec(y.shape(), vec![1.0; y.len()]).unwrap()).unwrap();
                // wrong on purpose: doubles the weight gradient
                let dy2 = dy.map(|v| 2.0 * v);
                m.backward(&x, &dy2).unwrap();
                m.b.grad = m.b.grad.map(|v| v / 2.0);
                y.sum()
            },
            1e-5,
            1e-4,
        );
        assert!(!report.passed);
        assert_eq!(report.worst_param.as_deref(), Some("lin.w"));
    }
}
