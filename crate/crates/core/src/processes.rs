//! VARMA models, their causal MA (Wold) expansion, filter convolution and
//! deconvolution against that expansion, and Gaussian simulation.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{MssaError, Result};
use crate::linalg::symmetric_sqrt;
use crate::spectral::{NoiseCovariance, StackedFilter};

pub const DEFAULT_BURN_IN: usize = 1000;
const TAIL_WARN_RATIO: f64 = 1e-6;

/// `x_t = c + Σ_m A_m x_{t-m} + ε_t + Σ_m Θ_m ε_{t-m}`, `ε_t ~ N(0, Σ)`.
#[derive(Debug, Clone)]
pub struct VarmaModel {
    ar: Vec<DMatrix<f64>>,
    ma: Vec<DMatrix<f64>>,
    intercept: DVector<f64>,
    sigma: NoiseCovariance,
}

impl VarmaModel {
    pub fn new(
        ar: Vec<DMatrix<f64>>,
        ma: Vec<DMatrix<f64>>,
        intercept: Option<DVector<f64>>,
        sigma: NoiseCovariance,
    ) -> Result<Self> {
        let n = sigma.dim();
        for m in ar.iter().chain(&ma) {
            if m.shape() != (n, n) {
                return Err(MssaError::InvalidDimension(format!(
                    "coefficient matrix is {}x{}, expected {n}x{n}",
                    m.nrows(),
                    m.ncols()
                )));
            }
        }
        let intercept = intercept.unwrap_or_else(|| DVector::zeros(n));
        if intercept.len() != n {
            return Err(MssaError::DimensionMismatch { expected: n, got: intercept.len() });
        }
        let model = Self { ar, ma, intercept, sigma };
        let radius = model.companion_spectral_radius();
        if radius >= 1.0 - 1e-10 {
            return Err(MssaError::NonStationary(format!("AR companion spectral radius {radius:.6} >= 1")));
        }
        Ok(model)
    }

    pub fn white_noise(sigma: NoiseCovariance) -> Self {
        let n = sigma.dim();
        Self { ar: Vec::new(), ma: Vec::new(), intercept: DVector::zeros(n), sigma }
    }

    /// Univariate ARMA(p, q) with innovation variance `var`.
    pub fn arma(ar: &[f64], ma: &[f64], var: f64) -> Result<Self> {
        let one = |v: f64| DMatrix::from_element(1, 1, v);
        Self::new(
            ar.iter().copied().map(one).collect(),
            ma.iter().copied().map(one).collect(),
            None,
            NoiseCovariance::new(one(var))?,
        )
    }

    pub fn dim(&self) -> usize {
        self.sigma.dim()
    }

    pub fn ar(&self) -> &[DMatrix<f64>] {
        &self.ar
    }

    pub fn ma(&self) -> &[DMatrix<f64>] {
        &self.ma
    }

    pub fn intercept(&self) -> &DVector<f64> {
        &self.intercept
    }

    pub fn sigma(&self) -> &NoiseCovariance {
        &self.sigma
    }

    /// Unconditional mean `(I - Σ A_m)^{-1} c`.
    pub fn mean(&self) -> DVector<f64> {
        let n = self.dim();
        let mut lhs = DMatrix::identity(n, n);
        for a in &self.ar {
            lhs -= a;
        }
        lhs.lu().solve(&self.intercept).unwrap_or_else(|| DVector::zeros(n))
    }

    pub fn companion_spectral_radius(&self) -> f64 {
        let p = self.ar.len();
        if p == 0 {
            return 0.0;
        }
        let n = self.dim();
        let mut comp = DMatrix::zeros(n * p, n * p);
        for (m, a) in self.ar.iter().enumerate() {
            comp.view_mut((0, m * n), (n, n)).copy_from(a);
        }
        for i in n..n * p {
            comp[(i, i - n)] = 1.0;
        }
        comp.complex_eigenvalues().iter().map(|z| z.norm()).fold(0.0, f64::max)
    }
}

/// Causal matrix sequence `C_0, ..., C_{L-1}` of shape `n_out × n_in`.
#[derive(Debug, Clone, PartialEq)]
pub struct MaExpansion {
    n_out: usize,
    n_in: usize,
    coeffs: Vec<DMatrix<f64>>,
}

impl MaExpansion {
    pub fn new(coeffs: Vec<DMatrix<f64>>) -> Result<Self> {
        let (n_out, n_in) = coeffs
            .first()
            .map(|c| c.shape())
            .ok_or_else(|| MssaError::InvalidDimension("empty coefficient sequence".into()))?;
        if coeffs.iter().any(|c| c.shape() != (n_out, n_in)) {
            return Err(MssaError::InvalidDimension("coefficient matrices differ in shape".into()));
        }
        if coeffs.iter().any(|c| c.iter().any(|v| !v.is_finite())) {
            return Err(MssaError::InvalidParameter("non-finite coefficient".into()));
        }
        Ok(Self { n_out, n_in, coeffs })
    }

    /// `I, 0, 0, ...`: the expansion of white noise.
    pub fn identity(n: usize, len: usize) -> Self {
        let mut coeffs = vec![DMatrix::zeros(n, n); len];
        coeffs[0] = DMatrix::identity(n, n);
        Self { n_out: n, n_in: n, coeffs }
    }

    /// Univariate expansion from scalar weights.
    pub fn scalar(weights: &[f64]) -> Result<Self> {
        Self::new(weights.iter().map(|&w| DMatrix::from_element(1, 1, w)).collect())
    }

    /// Stacks one filter per output row.
    pub fn from_rows(rows: &[StackedFilter]) -> Result<Self> {
        let first = rows.first().ok_or_else(|| MssaError::InvalidDimension("no filter rows".into()))?;
        let (n_in, len) = (first.series(), first.len());
        if rows.iter().any(|r| r.series() != n_in || r.len() != len) {
            return Err(MssaError::InvalidDimension("filter rows differ in shape".into()));
        }
        let coeffs = (0..len)
            .map(|k| DMatrix::from_fn(rows.len(), n_in, |i, j| rows[i].block(j)[k]))
            .collect();
        Self::new(coeffs)
    }

    pub fn n_out(&self) -> usize {
        self.n_out
    }

    pub fn n_in(&self) -> usize {
        self.n_in
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn coeffs(&self) -> &[DMatrix<f64>] {
        &self.coeffs
    }

    pub fn coeff(&self, k: usize) -> &DMatrix<f64> {
        &self.coeffs[k]
    }

    /// Output row `i` as a stacked filter: block `j` holds `C_k[i, j]` for `k = 0..L`.
    pub fn row(&self, i: usize) -> StackedFilter {
        let len = self.len();
        let mut data = Vec::with_capacity(self.n_in * len);
        for j in 0..self.n_in {
            data.extend(self.coeffs.iter().map(|c| c[(i, j)]));
        }
        StackedFilter::new(self.n_in, len, data).expect("shape is consistent")
    }

    /// Keeps the first `len` lags, padding with zeros if shorter.
    pub fn truncated(&self, len: usize) -> Self {
        let mut coeffs: Vec<_> = self.coeffs.iter().take(len).cloned().collect();
        coeffs.resize(len, DMatrix::zeros(self.n_out, self.n_in));
        Self { n_out: self.n_out, n_in: self.n_in, coeffs }
    }

    /// `‖C_{L-1}‖_F / ‖C_0‖_F`.
    pub fn tail_ratio(&self) -> f64 {
        let head = self.coeffs[0].norm();
        let tail = self.coeffs[self.len() - 1].norm();
        if head == 0.0 {
            f64::INFINITY
        } else {
            tail / head
        }
    }
}

/// Matrix filter `Γ_k` on lags `start, start+1, ...`; negative lags weight future observations.
#[derive(Debug, Clone, PartialEq)]
pub struct LaggedFilter {
    start: i64,
    coeffs: Vec<DMatrix<f64>>,
}

impl LaggedFilter {
    pub fn new(start: i64, coeffs: Vec<DMatrix<f64>>) -> Result<Self> {
        let shape = coeffs
            .first()
            .map(|c| c.shape())
            .ok_or_else(|| MssaError::InvalidDimension("empty filter".into()))?;
        if coeffs.iter().any(|c| c.shape() != shape) {
            return Err(MssaError::InvalidDimension("filter matrices differ in shape".into()));
        }
        Ok(Self { start, coeffs })
    }

    /// `w_k I_n` on lags `start..start+len`.
    pub fn diagonal(n: usize, start: i64, weights: &[f64]) -> Result<Self> {
        Self::new(start, weights.iter().map(|&w| DMatrix::identity(n, n) * w).collect())
    }

    pub fn start(&self) -> i64 {
        self.start
    }

    /// One past the last lag.
    pub fn end(&self) -> i64 {
        self.start + self.coeffs.len() as i64
    }

    pub fn coeffs(&self) -> &[DMatrix<f64>] {
        &self.coeffs
    }

    pub fn n_out(&self) -> usize {
        self.coeffs[0].nrows()
    }

    pub fn n_in(&self) -> usize {
        self.coeffs[0].ncols()
    }

    /// Coefficient at `lag`, zero outside the support.
    pub fn at(&self, lag: i64) -> Option<&DMatrix<f64>> {
        if lag < self.start || lag >= self.end() {
            None
        } else {
            Some(&self.coeffs[(lag - self.start) as usize])
        }
    }

    pub fn lags(&self) -> impl Iterator<Item = (i64, &DMatrix<f64>)> {
        self.coeffs.iter().enumerate().map(move |(i, c)| (self.start + i as i64, c))
    }
}

impl From<MaExpansion> for LaggedFilter {
    fn from(e: MaExpansion) -> Self {
        Self { start: 0, coeffs: e.coeffs }
    }
}

/// Wold weights `Ξ_0 = I`, `Ξ_k = Σ_m A_m Ξ_{k-m} + Θ_k` for `k < len`.
pub fn ma_inversion(model: &VarmaModel, len: usize) -> Result<MaExpansion> {
    if len == 0 {
        return Err(MssaError::InvalidDimension("expansion length must be positive".into()));
    }
    let n = model.dim();
    let mut xi: Vec<DMatrix<f64>> = Vec::with_capacity(len);
    xi.push(DMatrix::identity(n, n));
    let warmup = model.ar().len().max(model.ma().len()) + 1;
    let mut growth_run = 0;
    for k in 1..len {
        let mut next = model.ma().get(k - 1).cloned().unwrap_or_else(|| DMatrix::zeros(n, n));
        for (m, a) in model.ar().iter().enumerate().take(k) {
            next += a * &xi[k - m - 1];
        }
        let norm = next.norm();
        if !norm.is_finite() {
            return Err(MssaError::NonStationary(format!("MA weights overflow at lag {k}")));
        }
        if k > warmup && norm > xi[k - 1].norm() {
            growth_run += 1;
            let peak = xi.iter().take(warmup).map(|c| c.norm()).fold(1.0, f64::max);
            if growth_run >= 3 && norm > 1e3 * peak {
                return Err(MssaError::NonStationary(format!("MA weights diverge at lag {k} (norm {norm:.3e})")));
            }
        } else {
            growth_run = 0;
        }
        xi.push(next);
    }
    let out = MaExpansion::new(xi)?;
    let ratio = out.tail_ratio();
    if ratio > TAIL_WARN_RATIO {
        log::warn!("MA expansion truncated at L = {len} with tail ratio {ratio:.3e}");
    }
    Ok(out)
}

/// Lags `0..len` of `(Γ·Ξ)_{j+δ} = Σ_k Γ_k Ξ_{j+δ-k}`: the coefficients of the target
/// `z_{t+δ}` on the innovations `ε_{t-j}`. Weights on future innovations are dropped
/// and `Ξ` is treated as zero beyond its stored length.
pub fn convolve(filter: &LaggedFilter, xi: &MaExpansion, delta: i64, len: usize) -> Result<MaExpansion> {
    if filter.n_in() != xi.n_out() {
        return Err(MssaError::DimensionMismatch { expected: xi.n_out(), got: filter.n_in() });
    }
    let xi_len = xi.len() as i64;
    let coeffs = (0..len as i64)
        .map(|j| {
            let mut acc = DMatrix::zeros(filter.n_out(), xi.n_in());
            for (k, g) in filter.lags() {
                let m = j + delta - k;
                if (0..xi_len).contains(&m) {
                    acc += g * xi.coeff(m as usize);
                }
            }
            acc
        })
        .collect();
    MaExpansion::new(coeffs)
}

/// Causal convolution `(B·Ξ)_k` for `k < B.len()`.
pub fn convolve_causal(b: &MaExpansion, xi: &MaExpansion) -> Result<MaExpansion> {
    convolve(&LaggedFilter::from(b.clone()), xi, 0, b.len())
}

/// Recovers `B` from `(B·Ξ)`: `B_k = ((B·Ξ)_k - Σ_{m<k} B_m Ξ_{k-m}) Ξ_0^{-1}`.
pub fn deconvolve(bxi: &MaExpansion, xi: &MaExpansion) -> Result<MaExpansion> {
    if bxi.n_in() != xi.n_out() {
        return Err(MssaError::DimensionMismatch { expected: xi.n_out(), got: bxi.n_in() });
    }
    let inv0 = xi
        .coeff(0)
        .clone()
        .try_inverse()
        .ok_or_else(|| MssaError::Singular("leading MA coefficient is not invertible".into()))?;
    let mut out: Vec<DMatrix<f64>> = Vec::with_capacity(bxi.len());
    for k in 0..bxi.len() {
        let mut rhs = bxi.coeff(k).clone();
        for (m, bm) in out.iter().enumerate() {
            if k - m < xi.len() {
                rhs -= bm * xi.coeff(k - m);
            }
        }
        out.push(rhs * &inv0);
    }
    MaExpansion::new(out)
}

/// Simulates `n_obs` observations after discarding [`DEFAULT_BURN_IN`] start-up values.
/// Rows are time points, columns are series.
pub fn simulate(model: &VarmaModel, n_obs: usize, seed: u64) -> Result<DMatrix<f64>> {
    simulate_with_burn_in(model, n_obs, seed, DEFAULT_BURN_IN)
}

pub fn simulate_with_burn_in(model: &VarmaModel, n_obs: usize, seed: u64, burn_in: usize) -> Result<DMatrix<f64>> {
    if n_obs == 0 {
        return Err(MssaError::InvalidParameter("sample size must be positive".into()));
    }
    let n = model.dim();
    let root = symmetric_sqrt(model.sigma().matrix())?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let total = n_obs + burn_in;
    let p = model.ar().len();
    let q = model.ma().len();
    let mut x: Vec<DVector<f64>> = Vec::with_capacity(total);
    let mut eps: Vec<DVector<f64>> = Vec::with_capacity(total);
    for t in 0..total {
        let z = DVector::from_fn(n, |_, _| StandardNormal.sample(&mut rng));
        let e = &root * z;
        let mut xt = model.intercept().clone() + &e;
        for m in 1..=p.min(t) {
            xt += &model.ar()[m - 1] * &x[t - m];
        }
        for m in 1..=q.min(t) {
            xt += &model.ma()[m - 1] * &eps[t - m];
        }
        x.push(xt);
        eps.push(e);
    }
    Ok(DMatrix::from_fn(n_obs, n, |t, j| x[burn_in + t][j]))
}

/// Output of a lagged filter on a sample: `values` row `r` is time `first + r`.
#[derive(Debug, Clone)]
pub struct FilterOutput {
    pub first: usize,
    pub values: DMatrix<f64>,
}

/// `y_t = Σ_k Γ_k x_{t-k}` at every `t` where all required observations exist.
pub fn apply_filter(filter: &LaggedFilter, data: &DMatrix<f64>) -> Result<FilterOutput> {
    if filter.n_in() != data.ncols() {
        return Err(MssaError::DimensionMismatch { expected: filter.n_in(), got: data.ncols() });
    }
    let t_len = data.nrows() as i64;
    let first = (filter.end() - 1).max(0);
    let last = t_len - 1 + filter.start().min(0);
    if last < first {
        return Err(MssaError::Data(format!("sample of length {t_len} is shorter than the filter span")));
    }
    let rows = (last - first + 1) as usize;
    let n_out = filter.n_out();
    let mut values = DMatrix::zeros(rows, n_out);
    for (lag, g) in filter.lags() {
        for i in 0..n_out {
            for j in 0..filter.n_in() {
                let w = g[(i, j)];
                if w == 0.0 {
                    continue;
                }
                let src = data.column(j);
                let offset = (first - lag) as usize;
                let mut dst = values.column_mut(i);
                for r in 0..rows {
                    dst[r] += w * src[offset + r];
                }
            }
        }
    }
    Ok(FilterOutput { first: first as usize, values })
}
