//! Single OS-ELM autoencoder instance.
//!
//! A three-layer network whose input weights and biases are drawn once from a
//! seed and frozen. Only the output weights are trained, one sample at a time,
//! with a recursive least-squares update. Training starts from a ridge prior
//! (`P = I / lambda`, `beta = 0`) so no batch pseudo-inverse is ever needed.
//! An optional forgetting rate below one turns the update into the
//! exponentially-weighted variant used by the passive baseline.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, check_finite, Error, Result};

/// Smallest admissible denominator in the rank-1 covariance update.
pub const DEGENERACY_EPS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    #[default]
    Sigmoid,
    Identity,
}

impl Activation {
    #[inline]
    pub fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Sigmoid => 1.0 / (1.0 + (-z).exp()),
            Activation::Identity => z,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OselmParams {
    pub input_dim: usize,
    pub hidden_dim: usize,
    pub activation: Activation,
    pub seed: u64,
    pub ridge_lambda: f64,
    /// 1.0 disables forgetting.
    pub forgetting_rate: f64,
}

impl Default for OselmParams {
    fn default() -> Self {
        Self {
            input_dim: 1,
            hidden_dim: 1,
            activation: Activation::Sigmoid,
            seed: 0,
            ridge_lambda: 0.01,
            forgetting_rate: 1.0,
        }
    }
}

impl OselmParams {
    pub fn new(input_dim: usize, hidden_dim: usize) -> Self {
        Self { input_dim, hidden_dim, ..Self::default() }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.input_dim == 0 || self.hidden_dim == 0 {
            return Err(Error::InvalidParams(format!(
                "input_dim and hidden_dim must be positive (got {} and {})",
                self.input_dim, self.hidden_dim
            )));
        }
        if !(self.ridge_lambda > 0.0 && self.ridge_lambda.is_finite()) {
            return Err(Error::InvalidParams(format!(
                "ridge_lambda must be positive, got {}",
                self.ridge_lambda
            )));
        }
        if !(self.forgetting_rate > 0.0 && self.forgetting_rate <= 1.0) {
            return Err(Error::InvalidParams(format!(
                "forgetting_rate must lie in (0, 1], got {}",
                self.forgetting_rate
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OselmModel {
    params: OselmParams,
    /// D x H, frozen.
    alpha: DMatrix<f64>,
    /// H, frozen.
    bias: DVector<f64>,
    /// H x D, the only trained weights.
    beta: DMatrix<f64>,
    /// H x H inverse of the regularized hidden-activation Gram matrix.
    p: DMatrix<f64>,
    trained_count: u64,
}

impl OselmModel {
    pub fn new(params: OselmParams) -> Result<Self> {
        params.validate()?;
        let (d, h) = (params.input_dim, params.hidden_dim);
        let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
        let alpha = DMatrix::from_fn(d, h, |_, _| rng.random_range(-1.0..=1.0));
        let bias = DVector::from_fn(h, |_, _| rng.random_range(-1.0..=1.0));
        let beta = DMatrix::zeros(h, d);
        let p = DMatrix::identity(h, h) / params.ridge_lambda;
        Ok(Self { params, alpha, bias, beta, p, trained_count: 0 })
    }

    pub fn params(&self) -> &OselmParams {
        &self.params
    }

    pub fn input_dim(&self) -> usize {
        self.params.input_dim
    }

    pub fn hidden_dim(&self) -> usize {
        self.params.hidden_dim
    }

    pub fn alpha(&self) -> &DMatrix<f64> {
        &self.alpha
    }

    pub fn bias(&self) -> &DVector<f64> {
        &self.bias
    }

    pub fn beta(&self) -> &DMatrix<f64> {
        &self.beta
    }

    pub fn p(&self) -> &DMatrix<f64> {
        &self.p
    }

    pub fn trained_count(&self) -> u64 {
        self.trained_count
    }

    /// Changes the forgetting rate used by subsequent updates.
    pub fn set_forgetting_rate(&mut self, rate: f64) -> Result<()> {
        let mut params = self.params.clone();
        params.forgetting_rate = rate;
        params.validate()?;
        self.params = params;
        Ok(())
    }

    /// Overwrites the input weights and biases. Mostly useful for tests that
    /// need a hand-built network.
    pub fn set_input_weights(&mut self, alpha: DMatrix<f64>, bias: DVector<f64>) -> Result<()> {
        check_dim(self.input_dim(), alpha.nrows())?;
        check_dim(self.hidden_dim(), alpha.ncols())?;
        check_dim(self.hidden_dim(), bias.len())?;
        self.alpha = alpha;
        self.bias = bias;
        Ok(())
    }

    pub fn set_output_weights(&mut self, beta: DMatrix<f64>) -> Result<()> {
        check_dim(self.hidden_dim(), beta.nrows())?;
        check_dim(self.input_dim(), beta.ncols())?;
        self.beta = beta;
        Ok(())
    }

    /// Hidden-layer activation `activation(x^T alpha + bias)`.
    pub fn hidden(&self, x: &[f64]) -> Result<DVector<f64>> {
        check_dim(self.input_dim(), x.len())?;
        Ok(self.hidden_unchecked(x))
    }

    fn hidden_unchecked(&self, x: &[f64]) -> DVector<f64> {
        let act = self.params.activation;
        DVector::from_fn(self.hidden_dim(), |j, _| {
            let col = self.alpha.column(j);
            let z = col.iter().zip(x).map(|(a, v)| a * v).sum::<f64>() + self.bias[j];
            act.apply(z)
        })
    }

    fn output_from_hidden(&self, h: &DVector<f64>) -> DVector<f64> {
        self.beta.tr_mul(h)
    }

    /// Reconstruction `hidden(x) * beta`.
    pub fn reconstruct(&self, x: &[f64]) -> Result<DVector<f64>> {
        let h = self.hidden(x)?;
        Ok(self.output_from_hidden(&h))
    }

    /// Mean squared reconstruction error.
    pub fn anomaly_score(&self, x: &[f64]) -> Result<f64> {
        let out = self.reconstruct(x)?;
        let sse: f64 = x.iter().zip(out.iter()).map(|(a, b)| (a - b) * (a - b)).sum();
        Ok(sse / x.len() as f64)
    }

    /// One recursive least-squares step with the sample as its own target.
    pub fn seq_train(&mut self, x: &[f64]) -> Result<()> {
        check_dim(self.input_dim(), x.len())?;
        check_finite(x)?;
        let h = self.hidden_unchecked(x);
        let rho2 = self.params.forgetting_rate * self.params.forgetting_rate;

        let ph = &self.p * &h;
        let denom = rho2 + h.dot(&ph);
        if !(denom > DEGENERACY_EPS) {
            return Err(Error::NumericalDegeneracy { denominator: denom });
        }
        // P <- (P - P h^T h P / denom) / rho^2; P is symmetric so h P = (P h)^T.
        self.p.ger(-1.0 / denom, &ph, &ph, 1.0);
        if rho2 != 1.0 {
            self.p /= rho2;
        }
        symmetrize(&mut self.p);

        let innovation = DVector::from_iterator(
            x.len(),
            x.iter().zip(self.output_from_hidden(&h).iter()).map(|(t, y)| t - y),
        );
        let gain = &self.p * &h;
        self.beta.ger(1.0, &gain, &innovation, 1.0);
        self.trained_count += 1;
        Ok(())
    }
}

fn symmetrize(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            let avg = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = avg;
            m[(j, i)] = avg;
        }
    }
}
