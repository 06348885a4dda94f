use crate::error::{Error, Result};
use crate::graph::Csr;
use crate::seed::Rng;

use super::tensor::{Module, Parameter, Scalar, Tensor};

fn check_finite<T: Scalar>(t: &Tensor<T>, op: &str) {
    debug_assert!(t.is_finite(), "{op} produced non-finite values");
}

/// `a · b` for `a: n×k`, `b: k×m`.
pub fn matmul<T: Scalar>(a: &Tensor<T>, b: &Tensor<T>) -> Result<Tensor<T>> {
    let (n, k, m) = (a.rows(), a.cols(), b.cols());
    if b.rows() != k {
        return Err(Error::Shape(format!("matmul: {:?} · {:?}", a.shape(), b.shape())));
    }
    let mut out = Tensor::zeros(&[n, m]);
    let (ad, bd) = (a.data(), b.data());
    let od = out.data_mut();
    for i in 0..n {
        let orow = &mut od[i * m..(i + 1) * m];
        for p in 0..k {
            let x = ad[i * k + p];
            if x == T::zero() {
                continue;
            }
            let brow = &bd[p * m..(p + 1) * m];
            for (o, &y) in orow.iter_mut().zip(brow) {
                *o = *o + x * y;
            }
        }
    }
    check_finite(&out, "matmul");
    Ok(out)
}

/// `aᵀ · b` for `a: k×n`, `b: k×m`.
pub fn matmul_tn<T: Scalar>(a: &Tensor<T>, b: &Tensor<T>) -> Result<Tensor<T>> {
    let (k, n, m) = (a.rows(), a.cols(), b.cols());
    if b.rows() != k {
        return Err(Error::Shape(format!("matmul_tn: {:?}ᵀ · {:?}", a.shape(), b.shape())));
    }
    let mut out = Tensor::zeros(&[n, m]);
    let (ad, bd) = (a.data(), b.data());
    let od = out.data_mut();
    for p in 0..k {
        let brow = &bd[p * m..(p + 1) * m];
        for i in 0..n {
            let x = ad[p * n + i];
            if x == T::zero() {
                continue;
            }
            let orow = &mut od[i * m..(i + 1) * m];
            for (o, &y) in orow.iter_mut().zip(brow) {
                *o = *o + x * y;
            }
        }
    }
    check_finite(&out, "matmul_tn");
    Ok(out)
}

/// `a · bᵀ` for `a: n×m`, `b: k×m`.
pub fn matmul_nt<T: Scalar>(a: &Tensor<T>, b: &Tensor<T>) -> Result<Tensor<T>> {
    if a.cols() != b.cols() {
        return Err(Error::Shape(format!("matmul_nt: {:?} · {:?}ᵀ", a.shape(), b.shape())));
    }
    matmul(a, &b.transpose())
}

/// Column sums of a matrix, as a rank-1 tensor.
pub fn col_sums<T: Scalar>(x: &Tensor<T>) -> Tensor<T> {
    let c = x.cols();
    let mut out = Tensor::zeros(&[c]);
    for r in 0..x.rows() {
        for (o, &v) in out.data_mut().iter_mut().zip(x.row(r)) {
            *o = *o + v;
        }
    }
    out
}

pub fn add_row_bias<T: Scalar>(y: &mut Tensor<T>, b: &Tensor<T>) -> Result<()> {
    if b.len() != y.cols() {
        return Err(Error::Shape(format!("bias {:?} for output {:?}", b.shape(), y.shape())));
    }
    for r in 0..y.rows() {
        for (o, &v) in y.row_mut(r).iter_mut().zip(b.data()) {
            *o = *o + v;
        }
    }
    Ok(())
}

/// Affine map `y = xW + b` with `W: in×out`.
#[derive(Debug, Clone, PartialEq)]
pub struct Linear<T: Scalar = f32> {
    pub w: Parameter<T>,
    pub b: Parameter<T>,
}

impl<T: Scalar> Linear<T> {
    pub fn new(prefix: &str, fan_in: usize, fan_out: usize, rng: &mut Rng) -> Self {
        Self {
            w: Parameter::new(format!("{prefix}.w"), Tensor::glorot(fan_in, fan_out, rng)),
            b: Parameter::new(format!("{prefix}.b"), Tensor::zeros(&[fan_out])),
        }
    }

    pub fn fan_in(&self) -> usize {
        self.w.value.rows()
    }

    pub fn fan_out(&self) -> usize {
        self.w.value.cols()
    }

    pub fn forward(&self, x: &Tensor<T>) -> Result<Tensor<T>> {
        linear(x, &self.w.value, &self.b.value)
    }

    /// Accumulates `∂L/∂W`, `∂L/∂b` and returns `∂L/∂x`.
    pub fn backward(&mut self, x: &Tensor<T>, dy: &Tensor<T>) -> Result<Tensor<T>> {
        let (dx, dw, db) = linear_backward(x, &self.w.value, dy)?;
        self.w.accumulate(&dw)?;
        self.b.accumulate(&db)?;
        Ok(dx)
    }
}

impl<T: Scalar> Module<T> for Linear<T> {
    fn params(&self) -> Vec<&Parameter<T>> {
        vec![&self.w, &self.b]
    }
    fn params_mut(&mut self) -> Vec<&mut Parameter<T>> {
        vec![&mut self.w, &mut self.b]
    }
}

pub fn linear<T: Scalar>(x: &Tensor<T>, w: &Tensor<T>, b: &Tensor<T>) -> Result<Tensor<T>> {
    let mut y = matmul(x, w)?;
    add_row_bias(&mut y, b)?;
    Ok(y)
}

/// Returns `(∂L/∂x, ∂L/∂W, ∂L/∂b)`.
pub fn linear_backward<T: Scalar>(
    x: &Tensor<T>,
    w: &Tensor<T>,
    dy: &Tensor<T>,
) -> Result<(Tensor<T>, Tensor<T>, Tensor<T>)> {
    let dw = matmul_tn(x, dy)?;
    let db = col_sums(dy);
    let dx = matmul_nt(dy, w)?;
    Ok((dx, dw, db))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
    Sigmoid,
    Tanh,
}

pub fn sigmoid<T: Scalar>(x: T) -> T {
    if x >= T::zero() {
        T::one() / (T::one() + (-x).exp())
    } else {
        let e = x.exp();
        e / (T::one() + e)
    }
}

impl Activation {
    pub fn apply<T: Scalar>(self, x: T) -> T {
        match self {
            Activation::Relu => x.max(T::zero()),
            Activation::Sigmoid => sigmoid(x),
            Activation::Tanh => x.tanh(),
        }
    }

    pub fn forward<T: Scalar>(self, x: &Tensor<T>) -> Tensor<T> {
        x.map(|v| self.apply(v))
    }

    /// Gradient through the activation, expressed in terms of its output `y`.
    pub fn backward<T: Scalar>(self, y: &Tensor<T>, dy: &Tensor<T>) -> Result<Tensor<T>> {
        y.require_same_shape(dy, "activation backward")?;
        let one = T::one();
        let data = y
            .data()
            .iter()
            .zip(dy.data())
            .map(|(&y, &g)| match self {
                Activation::Relu => {
                    if y > T::zero() {
                        g
                    } else {
                        T::zero()
                    }
                }
                Activation::Sigmoid => g * y * (one - y),
                Activation::Tanh => g * (one - y * y),
            })
            .collect();
        Tensor::from_vec(y.shape(), data)
    }
}

/// `M[v] = mean(H[u] for u in adj(v))`, zero row for an empty neighborhood.
pub fn mean_aggregate<T: Scalar>(adj: &Csr, h: &Tensor<T>) -> Result<Tensor<T>> {
    let n = h.rows();
    if adj.len() != n {
        return Err(Error::Shape(format!("aggregate: {} rows for {} nodes", n, adj.len())));
    }
    let c = h.cols();
    let mut out = Tensor::zeros(&[n, c]);
    for v in 0..n {
        let nb = adj.neighbors(v as u32);
        if nb.is_empty() {
            continue;
        }
        let inv = T::one() / T::from_f64(nb.len() as f64);
        let row = out.row_mut(v);
        for &u in nb {
            for (o, &x) in row.iter_mut().zip(h.row(u as usize)) {
                *o = *o + x;
            }
        }
        row.iter_mut().for_each(|o| *o = *o * inv);
    }
    check_finite(&out, "mean_aggregate");
    Ok(out)
}

/// Adjoint of [`mean_aggregate`]: scatters `dM[v] / |adj(v)|` to each
/// neighbor, visiting `v` in ascending order.
pub fn mean_aggregate_backward<T: Scalar>(adj: &Csr, dm: &Tensor<T>) -> Result<Tensor<T>> {
    let n = dm.rows();
    if adj.len() != n {
        return Err(Error::Shape(format!("aggregate backward: {} rows for {} nodes", n, adj.len())));
    }
    let mut dh = Tensor::zeros(&[n, dm.cols()]);
    let c = dm.cols();
    for v in 0..n {
        let nb = adj.neighbors(v as u32);
        if nb.is_empty() {
            continue;
        }
        let inv = T::one() / T::from_f64(nb.len() as f64);
        let g: Vec<T> = dm.row(v).iter().map(|&x| x * inv).collect();
        let data = dh.data_mut();
        for &u in nb {
            let row = &mut data[u as usize * c..(u as usize + 1) * c];
            for (o, &x) in row.iter_mut().zip(&g) {
                *o = *o + x;
            }
        }
    }
    Ok(dh)
}
