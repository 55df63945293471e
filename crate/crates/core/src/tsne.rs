//! Exact t-SNE: Student-t output similarities, KL cost, its gradient and the
//! momentum gradient-descent loop.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

use crate::affinity::AffinityMatrix;
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::scalar::Scalar;

/// Clamp for `q` inside the logarithm of the cost.
pub const Q_FLOOR: f64 = 1e-12;
/// Standard deviation of the initial Gaussian cloud (variance 1e-4).
pub const INIT_STD: f64 = 1e-2;

/// Piecewise-constant momentum: `initial` for `t ≤ switch_iter`, `final_` after.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentumSchedule<T> {
    pub initial: T,
    pub final_: T,
    pub switch_iter: usize,
}

impl<T: Scalar> MomentumSchedule<T> {
    pub fn constant(alpha: T) -> Self {
        Self {
            initial: alpha,
            final_: alpha,
            switch_iter: 0,
        }
    }

    #[inline]
    pub fn at(&self, t: usize) -> T {
        if t <= self.switch_iter {
            self.initial
        } else {
            self.final_
        }
    }
}

impl<T: Scalar> Default for MomentumSchedule<T> {
    fn default() -> Self {
        Self {
            initial: T::lit(0.5),
            final_: T::lit(0.8),
            switch_iter: 250,
        }
    }
}

/// Multiply `P` by `factor` for the first `duration` iterations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EarlyExaggeration<T> {
    pub factor: T,
    pub duration: usize,
}

impl<T: Scalar> Default for EarlyExaggeration<T> {
    fn default() -> Self {
        Self {
            factor: T::lit(4.0),
            duration: 100,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TsneConfig<T> {
    pub perplexity: T,
    pub out_dim: usize,
    pub iterations: usize,
    pub learning_rate: T,
    pub momentum: MomentumSchedule<T>,
    pub seed: u64,
    pub early_exaggeration: Option<EarlyExaggeration<T>>,
    /// Cost is recorded every this many iterations (and at the last one).
    pub trace_every: usize,
}

impl<T: Scalar> Default for TsneConfig<T> {
    fn default() -> Self {
        Self {
            perplexity: T::lit(30.0),
            out_dim: 2,
            iterations: 1000,
            learning_rate: T::lit(100.0),
            momentum: MomentumSchedule::default(),
            seed: 0,
            early_exaggeration: None,
            trace_every: 10,
        }
    }
}

impl<T: Scalar> TsneConfig<T> {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidInput(m.to_string()));
        if !(self.out_dim == 2 || self.out_dim == 3) {
            return bad("output dimension must be 2 or 3");
        }
        if self.iterations == 0 {
            return bad("need at least one iteration");
        }
        if !(self.learning_rate > T::zero()) || !self.learning_rate.is_finite() {
            return bad("learning rate must be positive");
        }
        let in_range = |a: T| a >= T::zero() && a < T::one();
        if !in_range(self.momentum.initial) || !in_range(self.momentum.final_) {
            return bad("momentum must lie in [0, 1)");
        }
        if let Some(ex) = &self.early_exaggeration {
            if !(ex.factor > T::zero()) {
                return bad("exaggeration factor must be positive");
            }
        }
        if self.trace_every == 0 {
            return bad("trace interval must be positive");
        }
        Ok(())
    }
}

/// Low-dimensional coordinates plus the previous iterate (for momentum).
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingState<T> {
    pub y: Matrix<T>,
    pub y_prev: Matrix<T>,
    pub iteration: usize,
    /// `(iteration, KL)` pairs.
    pub cost_trace: Vec<(usize, T)>,
}

impl<T: Scalar> EmbeddingState<T> {
    pub fn new(y: Matrix<T>) -> Self {
        Self {
            y_prev: y.clone(),
            y,
            iteration: 0,
            cost_trace: Vec::new(),
        }
    }

    /// In-place version of [`step`].
    pub fn advance(&mut self, grad: &Matrix<T>, learning_rate: T, momentum: T) -> Result<()> {
        if grad.shape() != self.y.shape() {
            return Err(Error::DimensionMismatch(format!(
                "gradient {:?} vs embedding {:?}",
                grad.shape(),
                self.y.shape()
            )));
        }
        let (n, d) = self.y.shape();
        let mut next = Matrix::zeros(n, d);
        for ((o, (&y, &yp)), &g) in next
            .as_mut_slice()
            .iter_mut()
            .zip(self.y.as_slice().iter().zip(self.y_prev.as_slice()))
            .zip(grad.as_slice())
        {
            *o = y - learning_rate * g + momentum * (y - yp);
        }
        recenter(&mut next);
        self.iteration += 1;
        if !next.is_finite() {
            return Err(Error::NonFiniteUpdate {
                iteration: self.iteration,
            });
        }
        self.y_prev = std::mem::replace(&mut self.y, next);
        Ok(())
    }
}

fn recenter<T: Scalar>(y: &mut Matrix<T>) {
    let (n, d) = y.shape();
    if n == 0 {
        return;
    }
    let nt = T::from_usize_lossy(n);
    for k in 0..d {
        let mean = (0..n).map(|i| y[(i, k)]).fold(T::zero(), |a, b| a + b) / nt;
        if mean != T::zero() {
            for i in 0..n {
                y[(i, k)] -= mean;
            }
        }
    }
}

/// i.i.d. `N(0, 10⁻⁴)` coordinates, deterministic in `seed`.
pub fn init_embedding<T: Scalar>(n: usize, d: usize, seed: u64) -> Result<EmbeddingState<T>> {
    if n < 2 || !(d == 2 || d == 3) {
        return Err(Error::InvalidInput(format!(
            "embedding needs n ≥ 2 and d ∈ {{2, 3}}, got n = {n}, d = {d}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, INIT_STD).expect("valid normal parameters");
    let y = Matrix::from_fn(n, d, |_, _| T::lit(normal.sample(&mut rng)));
    Ok(EmbeddingState::new(y))
}

/// Student-t (one degree of freedom) similarities of the embedded points.
#[derive(Debug, Clone, PartialEq)]
pub struct QMatrix<T> {
    /// Normalized `q_ij`, zero diagonal.
    pub q: Matrix<T>,
    /// `(1 + ‖y_i − y_j‖²)⁻¹`, zero diagonal.
    pub unnorm: Matrix<T>,
}

pub fn low_dim_affinities<T: Scalar>(y: &Matrix<T>) -> QMatrix<T> {
    let n = y.rows();
    let mut unnorm = Matrix::zeros(n, n);
    let row_sums: Vec<T> = unnorm
        .as_mut_slice()
        .par_chunks_mut(n.max(1))
        .enumerate()
        .map(|(i, out)| {
            let yi = y.row(i);
            let mut s = T::zero();
            for (j, o) in out.iter_mut().enumerate() {
                if i != j {
                    let d2 = yi
                        .iter()
                        .zip(y.row(j))
                        .map(|(&a, &b)| (a - b) * (a - b))
                        .fold(T::zero(), |acc, v| acc + v);
                    *o = T::one() / (T::one() + d2);
                    s += *o;
                }
            }
            s
        })
        .collect();
    // fixed summation order keeps the normalizer independent of thread scheduling
    let z = row_sums.into_iter().fold(T::zero(), |a, b| a + b);
    let q = unnorm.map(|w| w / z);
    QMatrix { q, unnorm }
}

/// `Σ_i Σ_{j≠i} p_ij log(p_ij / q_ij)` with `q` clamped at [`Q_FLOOR`] inside the log.
pub fn kl_cost<T: Scalar>(p: &AffinityMatrix<T>, q: &QMatrix<T>) -> Result<T> {
    kl_cost_raw(p.p(), &q.q)
}

pub(crate) fn kl_cost_raw<T: Scalar>(p: &Matrix<T>, q: &Matrix<T>) -> Result<T> {
    if p.shape() != q.shape() {
        return Err(Error::DimensionMismatch(format!(
            "P {:?} vs Q {:?}",
            p.shape(),
            q.shape()
        )));
    }
    let n = p.rows();
    let floor = T::lit(Q_FLOOR);
    let row_costs: Vec<T> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut c = T::zero();
            for j in 0..n {
                let pij = p[(i, j)];
                if i != j && pij > T::zero() {
                    c += pij * (pij / q[(i, j)].max(floor)).ln();
                }
            }
            c
        })
        .collect();
    Ok(row_costs.into_iter().fold(T::zero(), |a, b| a + b))
}

/// `∂C/∂y_i = 4 Σ_j (p_ij − q_ij)(y_i − y_j)(1 + ‖y_i − y_j‖²)⁻¹`.
pub fn gradient<T: Scalar>(p: &AffinityMatrix<T>, q: &QMatrix<T>, y: &Matrix<T>) -> Result<Matrix<T>> {
    gradient_scaled(p.p(), T::one(), q, y)
}

fn gradient_scaled<T: Scalar>(p: &Matrix<T>, p_scale: T, q: &QMatrix<T>, y: &Matrix<T>) -> Result<Matrix<T>> {
    let n = y.rows();
    if p.shape() != (n, n) || q.q.shape() != (n, n) {
        return Err(Error::DimensionMismatch(format!(
            "P {:?}, Q {:?}, Y {:?}",
            p.shape(),
            q.q.shape(),
            y.shape()
        )));
    }
    let d = y.cols();
    let four = T::lit(4.0);
    let mut grad = Matrix::zeros(n, d);
    grad.as_mut_slice()
        .par_chunks_mut(d.max(1))
        .enumerate()
        .for_each(|(i, g)| {
            let yi = y.row(i);
            for j in 0..n {
                if i == j {
                    continue;
                }
                let mult = (p_scale * p[(i, j)] - q.q[(i, j)]) * q.unnorm[(i, j)];
                for ((gk, &a), &b) in g.iter_mut().zip(yi).zip(y.row(j)) {
                    *gk += mult * (a - b);
                }
            }
            for gk in g.iter_mut() {
                *gk *= four;
            }
        });
    Ok(grad)
}

/// One descent step: `Y ← Y − η·∂C/∂Y + α·(Y − Y_prev)`, then re-centered.
pub fn step<T: Scalar>(
    state: &EmbeddingState<T>,
    grad: &Matrix<T>,
    learning_rate: T,
    momentum: T,
) -> Result<EmbeddingState<T>> {
    let mut next = state.clone();
    next.advance(grad, learning_rate, momentum)?;
    Ok(next)
}

/// Runs the full optimization.
pub fn run_tsne<T: Scalar>(p: &AffinityMatrix<T>, cfg: &TsneConfig<T>) -> Result<EmbeddingState<T>> {
    run_tsne_observed(p, cfg, |_| {})
}

/// Like [`run_tsne`], calling `observer` with the state at every recorded cost.
pub fn run_tsne_observed<T: Scalar>(
    p: &AffinityMatrix<T>,
    cfg: &TsneConfig<T>,
    mut observer: impl FnMut(&EmbeddingState<T>),
) -> Result<EmbeddingState<T>> {
    cfg.validate()?;
    let mut state = init_embedding(p.n(), cfg.out_dim, cfg.seed)?;
    let initial = kl_cost(p, &low_dim_affinities(&state.y))?;
    state.cost_trace.push((0, initial));
    observer(&state);

    for t in 1..=cfg.iterations {
        let scale = match &cfg.early_exaggeration {
            Some(ex) if t <= ex.duration => ex.factor,
            _ => T::one(),
        };
        let q = low_dim_affinities(&state.y);
        let grad = gradient_scaled(p.p(), scale, &q, &state.y)?;
        state.advance(&grad, cfg.learning_rate, cfg.momentum.at(t))?;
        if t % cfg.trace_every == 0 || t == cfg.iterations {
            let kl = kl_cost(p, &low_dim_affinities(&state.y))?;
            state.cost_trace.push((t, kl));
            observer(&state);
        }
    }
    Ok(state)
}
