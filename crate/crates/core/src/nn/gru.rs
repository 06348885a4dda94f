use crate::error::Result;
use crate::seed::Rng;

use super::ops::{add_row_bias, col_sums, matmul, matmul_nt, matmul_tn, sigmoid};
use super::tensor::{Module, Parameter, Scalar, Tensor};

/// Gated recurrent cell, row-vector convention:
///
/// ```text
/// z  = σ(x W_z + h U_z + b_z)
/// r  = σ(x W_r + h U_r + b_r)
/// h~ = tanh(x W_h + (r ⊙ h) U_h + b_h)
/// h' = (1 - z) ⊙ h~ + z ⊙ h
/// ```
#[derive(Debug, Clone, PartialEq)]
pub struct GruCell<T: Scalar = f32> {
    pub w_z: Parameter<T>,
    pub w_r: Parameter<T>,
    pub w_h: Parameter<T>,
    pub u_z: Parameter<T>,
    pub u_r: Parameter<T>,
    pub u_h: Parameter<T>,
    pub b_z: Parameter<T>,
    pub b_r: Parameter<T>,
    pub b_h: Parameter<T>,
}

/// Activations of one step, kept for the backward pass.
#[derive(Debug, Clone)]
pub struct GruStep<T: Scalar = f32> {
    pub x: Tensor<T>,
    pub h_prev: Tensor<T>,
    z: Tensor<T>,
    r: Tensor<T>,
    cand: Tensor<T>,
    rh: Tensor<T>,
    pub h: Tensor<T>,
}

fn pre_activation<T: Scalar>(
    x: &Tensor<T>,
    w: &Tensor<T>,
    h: &Tensor<T>,
    u: &Tensor<T>,
    b: &Tensor<T>,
) -> Result<Tensor<T>> {
    let mut a = matmul(x, w)?;
    a.add_assign(&matmul(h, u)?)?;
    add_row_bias(&mut a, b)?;
    Ok(a)
}

impl<T: Scalar> GruCell<T> {
    pub fn new(prefix: &str, input: usize, hidden: usize, rng: &mut Rng) -> Self {
        let w = |n: &str, rng: &mut Rng| Parameter::new(format!("{prefix}.{n}"), Tensor::glorot(input, hidden, rng));
        let u = |n: &str, rng: &mut Rng| Parameter::new(format!("{prefix}.{n}"), Tensor::glorot(hidden, hidden, rng));
        let b = |n: &str| Parameter::new(format!("{prefix}.{n}"), Tensor::zeros(&[hidden]));
        Self {
            w_z: w("w_z", rng),
            w_r: w("w_r", rng),
            w_h: w("w_h", rng),
            u_z: u("u_z", rng),
            u_r: u("u_r", rng),
            u_h: u("u_h", rng),
            b_z: b("b_z"),
            b_r: b("b_r"),
            b_h: b("b_h"),
        }
    }

    pub fn hidden(&self) -> usize {
        self.u_z.value.rows()
    }

    pub fn forward(&self, x: &Tensor<T>, h_prev: &Tensor<T>) -> Result<GruStep<T>> {
        let z = pre_activation(x, &self.w_z.value, h_prev, &self.u_z.value, &self.b_z.value)?.map(sigmoid);
        let r = pre_activation(x, &self.w_r.value, h_prev, &self.u_r.value, &self.b_r.value)?.map(sigmoid);
        let rh = r.hadamard(h_prev)?;
        let cand = pre_activation(x, &self.w_h.value, &rh, &self.u_h.value, &self.b_h.value)?.map(|v| v.tanh());
        let one = T::one();
        let data = z
            .data()
            .iter()
            .zip(cand.data())
            .zip(h_prev.data())
            .map(|((&z, &c), &hp)| (one - z) * c + z * hp)
            .collect();
        let h = Tensor::from_vec(z.shape(), data)?;
        Ok(GruStep { x: x.clone(), h_prev: h_prev.clone(), z, r, cand, rh, h })
    }

    /// Accumulates parameter gradients for one step given `∂L/∂h'` and
    /// returns `(∂L/∂x, ∂L/∂h_prev)`.
    pub fn backward(&mut self, step: &GruStep<T>, dh: &Tensor<T>) -> Result<(Tensor<T>, Tensor<T>)> {
        let one = T::one();
        let n = dh.len();
        let (z, r, c, hp) = (step.z.data(), step.r.data(), step.cand.data(), step.h_prev.data());
        let g = dh.data();

        let mut da_h = Vec::with_capacity(n);
        let mut da_z = Vec::with_capacity(n);
        let mut dh_prev = Vec::with_capacity(n);
        for i in 0..n {
            let dcand = g[i] * (one - z[i]);
            da_h.push(dcand * (one - c[i] * c[i]));
            let dz = g[i] * (hp[i] - c[i]);
            da_z.push(dz * z[i] * (one - z[i]));
            dh_prev.push(g[i] * z[i]);
        }
        let shape = dh.shape();
        let da_h = Tensor::from_vec(shape, da_h)?;
        let da_z = Tensor::from_vec(shape, da_z)?;
        let mut dh_prev = Tensor::from_vec(shape, dh_prev)?;

        self.w_h.accumulate(&matmul_tn(&step.x, &da_h)?)?;
        self.u_h.accumulate(&matmul_tn(&step.rh, &da_h)?)?;
        self.b_h.accumulate(&col_sums(&da_h))?;
        let mut dx = matmul_nt(&da_h, &self.w_h.value)?;
        let drh = matmul_nt(&da_h, &self.u_h.value)?;

        let drh_d = drh.data();
        let da_r: Vec<T> = (0..n).map(|i| drh_d[i] * hp[i] * r[i] * (one - r[i])).collect();
        dh_prev.data_mut().iter_mut().enumerate().for_each(|(i, d)| *d = *d + drh_d[i] * r[i]);
        let da_r = Tensor::from_vec(shape, da_r)?;

        self.w_z.accumulate(&matmul_tn(&step.x, &da_z)?)?;
        self.u_z.accumulate(&matmul_tn(&step.h_prev, &da_z)?)?;
        self.b_z.accumulate(&col_sums(&da_z))?;
        dx.add_assign(&matmul_nt(&da_z, &self.w_z.value)?)?;
        dh_prev.add_assign(&matmul_nt(&da_z, &self.u_z.value)?)?;

        self.w_r.accumulate(&matmul_tn(&step.x, &da_r)?)?;
        self.u_r.accumulate(&matmul_tn(&step.h_prev, &da_r)?)?;
        self.b_r.accumulate(&col_sums(&da_r))?;
        dx.add_assign(&matmul_nt(&da_r, &self.w_r.value)?)?;
        dh_prev.add_assign(&matmul_nt(&da_r, &self.u_r.value)?)?;

        Ok((dx, dh_prev))
    }
}

impl<T: Scalar> Module<T> for GruCell<T> {
    fn params(&self) -> Vec<&Parameter<T>> {
        vec![&self.w_z, &self.w_r, &self.w_h, &self.u_z, &self.u_r, &self.u_h, &self.b_z, &self.b_r, &self.b_h]
    }
    fn params_mut(&mut self) -> Vec<&mut Parameter<T>> {
        vec![
            &mut self.w_z,
            &mut self.w_r,
            &mut self.w_h,
            &mut self.u_z,
            &mut self.u_r,
            &mut self.u_h,
            &mut self.b_z,
            &mut self.b_r,
            &mut self.b_h,
        ]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_params_fixed_point() {
        let mut rng = crate::seed::rng_from_seed(0);
        let mut cell = GruCell::<f32>::new("gru", 3, 4, &mut rng);
        cell.params_mut().into_iter().for_each(|p| p.value.fill(0.0));
        let x = Tensor::matrix(2, 3, vec![1.0, -2.0, 0.5, 3.0, 0.0, 1.0]).unwrap();
        let step = cell.forward(&x, &Tensor::zeros(&[2, 4])).unwrap();
        assert!(step.h.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn parameter_count() {
        let mut rng = crate::seed::rng_from_seed(0);
        let cell = GruCell::<f32>::new("gru", 64, 64, &mut rng);
        assert_eq!(cell.param_count(), 3 * (64 * 64 * 2 + 64));
    }

    #[test]
    fn repeated_input_settles() {
        let mut rng = crate::seed::rng_from_seed(11);
        let cell = GruCell::<f64>::new("gru", 4, 6, &mut rng);
        let x = Tensor::<f64>::glorot(1, 4, &mut rng);
        let mut h = Tensor::zeros(&[1, 6]);
        let mut diffs = Vec::new();
        for _ in 0..40 {
            let next = cell.forward(&x, &h).unwrap().h;
            let d: f64 = next.data().iter().zip(h.data()).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
            diffs.push(d);
            h = next;
        }
        assert!(diffs[39] < diffs[0] * 1e-2, "{diffs:?}");
        assert!(diffs.windows(2).skip(5).all(|w| w[1] <= w[0] + 1e-12));
    }
}
