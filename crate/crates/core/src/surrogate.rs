//! Pseudo-target models: a GP posterior-mean gradient step and the
//! historical optimum, plus the span check for shift-invariant kernels.
//!
//! Values are always minimized. The GP posterior mean is
//! `f̂(x) = k(x, X)ᵀ w` with `(K(X, X) + λI) w = y`, and for a kernel
//! `k(z₁, z₂) = g(‖z₁ − z₂‖)` its gradient is `Σ_i w_i g′(r_i)/r_i (x − x_i)`.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};

use crate::error::{check_dim, Error, Result};
use crate::vector::{distance, is_finite, norm, sub};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelFamily {
    Gaussian,
    Matern52,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelSpec {
    pub family: KernelFamily,
    pub lengthscale: f64,
}

const SQRT5: f64 = 2.236_067_977_499_79;

impl KernelSpec {
    pub fn new(family: KernelFamily, lengthscale: f64) -> Result<Self> {
        if !(lengthscale > 0.0) || !lengthscale.is_finite() {
            return Err(Error::InvalidConfig(format!("kernel lengthscale must be positive, got {lengthscale}")));
        }
        Ok(Self { family, lengthscale })
    }

    /// `ℓ = √d`.
    pub fn sqrt_dim(family: KernelFamily, dim: usize) -> Self {
        Self { family, lengthscale: libm::sqrt(dim as f64) }
    }

    /// `g(r)`.
    pub fn profile(&self, r: f64) -> f64 {
        let l = self.lengthscale;
        match self.family {
            KernelFamily::Gaussian => libm::exp(-0.5 * r * r / (l * l)),
            KernelFamily::Matern52 => {
                let s = SQRT5 * r / l;
                (1.0 + s + s * s / 3.0) * libm::exp(-s)
            }
        }
    }

    /// `g′(r) / r`, finite at `r = 0` for both families.
    pub fn radial_derivative_ratio(&self, r: f64) -> f64 {
        let l = self.lengthscale;
        match self.family {
            KernelFamily::Gaussian => -libm::exp(-0.5 * r * r / (l * l)) / (l * l),
            KernelFamily::Matern52 => {
                let s = SQRT5 * r / l;
                -(5.0 / (3.0 * l * l)) * (1.0 + s) * libm::exp(-s)
            }
        }
    }

    pub fn eval(&self, a: &[f64], b: &[f64]) -> f64 {
        self.profile(distance(a, b))
    }
}

/// Gram regularizer `λ_reg`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Regularizer {
    Fixed(f64),
    /// `λ_reg = factor · mean(diag K)`.
    RelativeToDiagonal(f64),
}

impl Default for Regularizer {
    fn default() -> Self {
        Regularizer::RelativeToDiagonal(1e-2)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QueryRecord {
    pub x: Vec<f64>,
    pub y: f64,
    pub batch_index: u64,
}

/// Append-only record of every objective query.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct QueryDataset {
    records: Vec<QueryRecord>,
    query_count: u64,
}

impl QueryDataset {
    pub fn new() -> Self {
        Self::default()
    }

    /// Rebuilds a dataset from persisted records; the query count is the
    /// record count.
    pub fn from_records(records: Vec<QueryRecord>) -> Result<Self> {
        if let Some(first) = records.first() {
            for r in &records {
                check_dim(first.x.len(), r.x.len())?;
            }
        }
        let query_count = records.len() as u64;
        Ok(Self { records, query_count })
    }

    pub fn push(&mut self, x: Vec<f64>, y: f64, batch_index: u64) -> Result<()> {
        if let Some(first) = self.records.first() {
            check_dim(first.x.len(), x.len())?;
        }
        self.records.push(QueryRecord { x, y, batch_index });
        self.query_count += 1;
        Ok(())
    }

    pub fn records(&self) -> &[QueryRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn query_count(&self) -> u64 {
        self.query_count
    }

    /// The first `n` records as a dataset.
    pub fn prefix(&self, n: usize) -> Self {
        let records = self.records[..n.min(self.records.len())].to_vec();
        let query_count = records.len() as u64;
        Self { records, query_count }
    }
}

/// GP posterior mean with cached solve weights. Immutable once fitted.
#[derive(Debug, Clone, PartialEq)]
pub struct GpSurrogate {
    points: Vec<Vec<f64>>,
    targets: Vec<f64>,
    weights: Vec<f64>,
    kernel: KernelSpec,
    regularizer: f64,
}

impl GpSurrogate {
    pub fn empty(kernel: KernelSpec) -> Self {
        Self { points: Vec::new(), targets: Vec::new(), weights: Vec::new(), kernel, regularizer: 0.0 }
    }

    pub fn fit(data: &QueryDataset, kernel: KernelSpec, regularizer: Regularizer) -> Result<Self> {
        let n = data.len();
        if n == 0 {
            return Ok(Self::empty(kernel));
        }
        let bad: Vec<usize> = data
            .records()
            .iter()
            .enumerate()
            .filter(|(_, r)| !r.y.is_finite() || !is_finite(&r.x))
            .map(|(i, _)| i)
            .collect();
        if !bad.is_empty() {
            return Err(Error::GramSolve { reason: "non-finite record".into(), records: bad });
        }
        let points: Vec<Vec<f64>> = data.records().iter().map(|r| r.x.clone()).collect();
        let targets: Vec<f64> = data.records().iter().map(|r| r.y).collect();
        let gram = DMatrix::from_fn(n, n, |i, j| kernel.eval(&points[i], &points[j]));
        let lambda = match regularizer {
            Regularizer::Fixed(v) => v,
            Regularizer::RelativeToDiagonal(f) => f * gram.diagonal().mean(),
        };
        if !(lambda >= 0.0) || !lambda.is_finite() {
            return Err(Error::InvalidConfig(format!("regularizer must be nonnegative, got {lambda}")));
        }
        let mut system = gram;
        for i in 0..n {
            system[(i, i)] += lambda;
        }
        let chol = system.cholesky().ok_or_else(|| Error::GramSolve {
            reason: String::from("regularized gram matrix is not positive definite"),
            records: duplicate_records(&points),
        })?;
        let weights = chol.solve(&DVector::from_column_slice(&targets));
        if weights.iter().any(|w| !w.is_finite()) {
            return Err(Error::GramSolve { reason: "non-finite solve weights".into(), records: duplicate_records(&points) });
        }
        Ok(Self { points, targets, weights: weights.as_slice().to_vec(), kernel, regularizer: lambda })
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn kernel(&self) -> KernelSpec {
        self.kernel
    }

    pub fn regularizer(&self) -> f64 {
        self.regularizer
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    /// `‖(K + λI)w − y‖`.
    pub fn solve_residual(&self) -> f64 {
        let mut worst = 0.0;
        for (i, xi) in self.points.iter().enumerate() {
            let mut acc = self.regularizer * self.weights[i] - self.targets[i];
            for (xj, wj) in self.points.iter().zip(&self.weights) {
                acc += self.kernel.eval(xi, xj) * wj;
            }
            worst += acc * acc;
        }
        libm::sqrt(worst)
    }

    pub fn targets(&self) -> &[f64] {
        &self.targets
    }

    fn check_query(&self, x: &[f64]) -> Result<()> {
        match self.points.first() {
            Some(p) => check_dim(p.len(), x.len()),
            None => Ok(()),
        }
    }

    pub fn posterior_mean(&self, x: &[f64]) -> Result<f64> {
        self.check_query(x)?;
        Ok(self.points.iter().zip(&self.weights).map(|(p, w)| w * self.kernel.eval(x, p)).sum())
    }

    /// `∇f̂(x)`; the zero vector for the empty surrogate.
    pub fn posterior_mean_gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_query(x)?;
        let mut grad = vec![0.0; x.len()];
        for (p, w) in self.points.iter().zip(&self.weights) {
            let c = w * self.kernel.radial_derivative_ratio(distance(x, p));
            for ((g, xi), pi) in grad.iter_mut().zip(x).zip(p) {
                *g += c * (xi - pi);
            }
        }
        Ok(grad)
    }

    /// `x̂* = x_K − ∇f̂(x_K)`.
    pub fn pseudo_target(&self, x_k: &[f64]) -> Result<Vec<f64>> {
        let grad = self.posterior_mean_gradient(x_k)?;
        Ok(sub(x_k, &grad))
    }

    /// Relative norm of the part of `∇f̂(x)` outside `span{x, x¹..xⁿ}`.
    pub fn span_residual(&self, x: &[f64]) -> Result<f64> {
        self.check_query(x)?;
        let grad = self.posterior_mean_gradient(x)?;
        let d = x.len();
        let cols = self.points.len() + 1;
        let basis = DMatrix::from_fn(d, cols, |i, j| if j == 0 { x[i] } else { self.points[j - 1][i] });
        let svd = basis.svd(true, false);
        let u = svd.u.as_ref().expect("requested U");
        let smax = svd.singular_values.max();
        let tol = smax * (d.max(cols) as f64) * f64::EPSILON;
        let kept: Vec<usize> = (0..svd.singular_values.len()).filter(|&i| svd.singular_values[i] > tol).collect();
        if kept.len() >= d {
            return Ok(0.0);
        }
        let g = DVector::from_column_slice(&grad);
        let mut residual = g.clone();
        for &i in &kept {
            let col = u.column(i);
            let coeff = col.dot(&g);
            residual -= col * coeff;
        }
        Ok(residual.norm() / norm(&grad).max(f64::EPSILON))
    }
}

fn duplicate_records(points: &[Vec<f64>]) -> Vec<usize> {
    let mut out = Vec::new();
    for i in 0..points.len() {
        if points[..i].iter().any(|p| *p == points[i]) || points[i + 1..].iter().any(|p| *p == points[i]) {
            out.push(i);
        }
    }
    out
}

/// The record with the smallest `y`, earliest on ties.
pub fn pseudo_target_historical(data: &QueryDataset) -> Result<&QueryRecord> {
    let mut best: Option<&QueryRecord> = None;
    for r in data.records() {
        if best.is_none_or(|b| r.y < b.y) {
            best = Some(r);
        }
    }
    best.ok_or(Error::EmptyDataset)
}

/// How pseudo-targets are produced from the query history.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PseudoTargetRule {
    Gp { kernel: KernelSpec, regularizer: Regularizer },
    HistoricalOptimal,
}

/// A fitted pseudo-target model, frozen between refits.
#[derive(Debug, Clone, PartialEq)]
pub enum PseudoTargetModel {
    Gp(GpSurrogate),
    /// `None` until the first record arrives.
    HistoricalOptimal(Option<Vec<f64>>),
}

impl PseudoTargetModel {
    pub fn empty(rule: &PseudoTargetRule) -> Self {
        match rule {
            PseudoTargetRule::Gp { kernel, .. } => PseudoTargetModel::Gp(GpSurrogate::empty(*kernel)),
            PseudoTargetRule::HistoricalOptimal => PseudoTargetModel::HistoricalOptimal(None),
        }
    }

    pub fn fit(rule: &PseudoTargetRule, data: &QueryDataset) -> Result<Self> {
        match rule {
            PseudoTargetRule::Gp { kernel, regularizer } => {
                Ok(PseudoTargetModel::Gp(GpSurrogate::fit(data, *kernel, *regularizer)?))
            }
            PseudoTargetRule::HistoricalOptimal => Ok(PseudoTargetModel::HistoricalOptimal(
                pseudo_target_historical(data).ok().map(|r| r.x.clone()),
            )),
        }
    }

    /// `x̂*` for an instance whose chain produced `x_k`. Empty models return
    /// `x_k` itself, so the guidance direction vanishes.
    pub fn pseudo_target(&self, x_k: &[f64]) -> Result<Vec<f64>> {
        match self {
            PseudoTargetModel::Gp(gp) => gp.pseudo_target(x_k),
            PseudoTargetModel::HistoricalOptimal(Some(best)) => {
                check_dim(best.len(), x_k.len())?;
                Ok(best.clone())
            }
            PseudoTargetModel::HistoricalOptimal(None) => Ok(x_k.to_vec()),
        }
    }

    pub fn is_empty(&self) -> bool {
        match self {
            PseudoTargetModel::Gp(gp) => gp.is_empty(),
            PseudoTargetModel::HistoricalOptimal(best) => best.is_none(),
        }
    }
}
