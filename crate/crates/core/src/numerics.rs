//! Deterministic numerical kernel: polar quadrature rules, a dense Hermitian
//! eigensolver front-end, least-squares fits in inverse powers of `p` and
//! log-linear decay regressions.
//!
//! Every reduction in this module runs in a fixed index order through
//! [`CompensatedSum`], so results do not depend on thread count.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type ComplexMatrix = DMatrix<Complex64>;

/// Central tolerance record. Defaults are the thresholds every check reports against.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    pub hermitian: f64,
    pub eigen_reconstruction: f64,
    pub onb_identity: f64,
    pub gram_offdiagonal: f64,
    pub truncation: f64,
    pub quadrature_refinement: f64,
    pub positivity: f64,
    pub norm_slack: f64,
    pub fit_condition: f64,
    pub kernel_floor: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            hermitian: 1e-10,
            eigen_reconstruction: 1e-9,
            onb_identity: 1e-9,
            gram_offdiagonal: 1e-12,
            truncation: 1e-8,
            quadrature_refinement: 1e-9,
            positivity: 1e-8,
            norm_slack: 1e-8,
            fit_condition: 1e12,
            kernel_floor: 1e-280,
        }
    }
}

/// Neumaier-compensated accumulator.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.carry
    }
}

/// Compensated accumulator for complex values (componentwise).
#[derive(Debug, Clone, Copy, Default)]
pub struct ComplexSum {
    re: CompensatedSum,
    im: CompensatedSum,
}

impl ComplexSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, z: Complex64) {
        self.re.add(z.re);
        self.im.add(z.im);
    }

    pub fn value(&self) -> Complex64 {
        Complex64::new(self.re.value(), self.im.value())
    }
}

pub fn compensated_sum<I: IntoIterator<Item = f64>>(xs: I) -> f64 {
    let mut acc = CompensatedSum::new();
    for x in xs {
        acc.add(x);
    }
    acc.value()
}

pub fn compensated_complex_sum<I: IntoIterator<Item = Complex64>>(zs: I) -> Complex64 {
    let mut acc = ComplexSum::new();
    for z in zs {
        acc.add(z);
    }
    acc.value()
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`, ascending.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n > 0, "gauss_legendre needs at least one node");
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        // Tricomi initial guess, then Newton on P_n.
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

/// How the radial Gauss–Legendre variable is mapped onto the radius.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum RadialMap {
    /// Nodes uniform in `t = r²` on `[0, R²]` (split into panels).
    Squared,
    /// Nodes uniform in `u = r²/(1 + r²)` on `[0, 1)`: covers the whole plane.
    Compactified,
}

/// Tensor-product polar rule: radial nodes × uniform angular nodes.
///
/// Weights are Lebesgue weights: `Σ w_k f(node_k) ≈ ∫ f dx dy`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    center: Complex64,
    radii: Vec<f64>,
    /// Weights for `∫ h(r) r dr`.
    radial_weights: Vec<f64>,
    n_angular: usize,
}

impl QuadratureRule {
    pub fn from_polar(
        center: Complex64,
        radii: Vec<f64>,
        radial_weights: Vec<f64>,
        n_angular: usize,
    ) -> Result<Self> {
        if radii.is_empty() || radii.len() != radial_weights.len() {
            return Err(Error::config("radial nodes and weights must be non-empty and of equal length"));
        }
        if n_angular == 0 {
            return Err(Error::config("angular node count must be positive"));
        }
        if radial_weights.iter().any(|w| !(*w > 0.0)) {
            return Err(Error::numerical("quadrature weights must be positive"));
        }
        Ok(Self { center, radii, radial_weights, n_angular })
    }

    /// Composite Gauss–Legendre in `r²` with the given panel breakpoints
    /// (ascending, starting at 0) and `per_panel` nodes in each panel.
    pub fn squared_panels(breaks: &[f64], per_panel: usize, n_angular: usize) -> Result<Self> {
        if breaks.len() < 2 || breaks[0] != 0.0 || breaks.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::config("panel breakpoints must start at 0 and increase strictly"));
        }
        if per_panel == 0 {
            return Err(Error::config("panel node count must be positive"));
        }
        let (x, w) = gauss_legendre(per_panel);
        let mut radii = Vec::with_capacity(per_panel * (breaks.len() - 1));
        let mut weights = Vec::with_capacity(radii.capacity());
        for pair in breaks.windows(2) {
            let (t0, t1) = (pair[0] * pair[0], pair[1] * pair[1]);
            let half = 0.5 * (t1 - t0);
            for (xi, wi) in x.iter().zip(&w) {
                let t = t0 + half * (xi + 1.0);
                radii.push(t.sqrt());
                // r dr = dt / 2
                weights.push(0.5 * half * wi);
            }
        }
        Self::from_polar(Complex64::new(0.0, 0.0), radii, weights, n_angular)
    }

    /// Gauss–Legendre in `u = r²/(1+r²)` on `[0, 1)`: integrates over all of ℂ.
    pub fn compactified(n_radial: usize, n_angular: usize) -> Result<Self> {
        if n_radial == 0 {
            return Err(Error::config("radial node count must be positive"));
        }
        let (x, w) = gauss_legendre(n_radial);
        let mut radii = Vec::with_capacity(n_radial);
        let mut weights = Vec::with_capacity(n_radial);
        for (xi, wi) in x.iter().zip(&w) {
            let u = 0.5 * (xi + 1.0);
            let t = u / (1.0 - u);
            radii.push(t.sqrt());
            // r dr = dt/2 = du / (2 (1-u)^2)
            weights.push(0.25 * wi / ((1.0 - u) * (1.0 - u)));
        }
        Self::from_polar(Complex64::new(0.0, 0.0), radii, weights, n_angular)
    }

    pub fn recentered(mut self, center: Complex64) -> Self {
        self.center = center;
        self
    }

    pub fn center(&self) -> Complex64 {
        self.center
    }

    pub fn radii(&self) -> &[f64] {
        &self.radii
    }

    pub fn radial_weights(&self) -> &[f64] {
        &self.radial_weights
    }

    pub fn n_radial(&self) -> usize {
        self.radii.len()
    }

    pub fn n_angular(&self) -> usize {
        self.n_angular
    }

    pub fn len(&self) -> usize {
        self.radii.len() * self.n_angular
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn max_radius(&self) -> f64 {
        self.radii.iter().copied().fold(0.0, f64::max)
    }

    pub fn angle(&self, l: usize) -> f64 {
        2.0 * PI * l as f64 / self.n_angular as f64
    }

    pub fn angular_weight(&self) -> f64 {
        2.0 * PI / self.n_angular as f64
    }

    /// Node `(i, l)` in radial-major order.
    pub fn node(&self, i: usize, l: usize) -> Complex64 {
        self.center + Complex64::from_polar(self.radii[i], self.angle(l))
    }

    pub fn nodes(&self) -> impl Iterator<Item = Complex64> + '_ {
        (0..self.radii.len()).flat_map(move |i| (0..self.n_angular).map(move |l| self.node(i, l)))
    }

    pub fn weights(&self) -> impl Iterator<Item = f64> + '_ {
        let aw = self.angular_weight();
        self.radial_weights.iter().flat_map(move |w| std::iter::repeat_n(w * aw, self.n_angular))
    }

    /// `∫ f dx dy` with compensated, fixed-order summation.
    pub fn integrate<F: Fn(Complex64) -> Complex64>(&self, f: F) -> Complex64 {
        let mut acc = ComplexSum::new();
        for (z, w) in self.nodes().zip(self.weights()) {
            acc.add(f(z) * w);
        }
        acc.value()
    }

    pub fn integrate_real<F: Fn(Complex64) -> f64>(&self, f: F) -> f64 {
        let mut acc = CompensatedSum::new();
        for (z, w) in self.nodes().zip(self.weights()) {
            acc.add(f(z) * w);
        }
        acc.value()
    }
}

/// Polar rule on the disc `|z| < radius`: Gauss–Legendre in `r²`, trapezoid in θ.
pub fn radial_angular_rule(n_radial: usize, n_angular: usize, radius: f64) -> Result<QuadratureRule> {
    if n_radial < 4 || n_angular < 4 {
        return Err(Error::config(format!(
            "radial/angular sizes must be at least 4 (got {n_radial}×{n_angular})"
        )));
    }
    if !(radius > 0.0) || !radius.is_finite() {
        return Err(Error::config(format!("radius must be positive and finite (got {radius})")));
    }
    QuadratureRule::squared_panels(&[0.0, radius], n_radial, n_angular)
}

/// Maximum entrywise deviation from Hermitian symmetry.
pub fn hermitian_defect(m: &ComplexMatrix) -> f64 {
    let n = m.nrows();
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

#[derive(Debug, Clone)]
pub struct EigenDecomposition {
    /// Sorted descending.
    pub values: Vec<f64>,
    /// Columns are eigenvectors, in the order of `values`.
    pub vectors: ComplexMatrix,
}

/// Dense Hermitian eigendecomposition, eigenvalues sorted descending.
pub fn hermitian_eigen(m: &ComplexMatrix) -> Result<EigenDecomposition> {
    hermitian_eigen_with(m, &Tolerances::default())
}

pub fn hermitian_eigen_with(m: &ComplexMatrix, tol: &Tolerances) -> Result<EigenDecomposition> {
    if m.nrows() != m.ncols() {
        return Err(Error::numerical(format!("matrix is {}×{}, not square", m.nrows(), m.ncols())));
    }
    let defect = hermitian_defect(m);
    let scale = m.iter().map(|z| z.norm()).fold(1.0, f64::max);
    if defect > tol.hermitian * scale {
        return Err(Error::numerical(format!(
            "matrix is not Hermitian: max |M - M†| = {defect:e} > {:e}",
            tol.hermitian * scale
        )));
    }
    let n = m.nrows();
    if n == 0 {
        return Ok(EigenDecomposition { values: vec![], vectors: ComplexMatrix::zeros(0, 0) });
    }
    // Symmetrize so the solver sees an exactly Hermitian input.
    let h = ComplexMatrix::from_fn(n, n, |i, j| 0.5 * (m[(i, j)] + m[(j, i)].conj()));
    let eig = SymmetricEigen::new(h);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]).then(a.cmp(&b)));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vectors = ComplexMatrix::from_fn(n, n, |i, j| eig.eigenvectors[(i, order[j])]);
    Ok(EigenDecomposition { values, vectors })
}

impl EigenDecomposition {
    /// `‖M − VΛV†‖` (Frobenius).
    pub fn reconstruction_error(&self, m: &ComplexMatrix) -> f64 {
        let lambda = DMatrix::from_diagonal(&DVector::from_iterator(
            self.values.len(),
            self.values.iter().map(|&v| Complex64::new(v, 0.0)),
        ));
        (m - &self.vectors * lambda * self.vectors.adjoint()).norm()
    }

    /// `‖V†V − I‖` (Frobenius).
    pub fn unitarity_error(&self) -> f64 {
        let n = self.vectors.ncols();
        (self.vectors.adjoint() * &self.vectors - ComplexMatrix::identity(n, n)).norm()
    }
}

/// Operator (spectral) norm. Hermitian inputs use `max |λ|`, the rest go through `M†M`.
pub fn operator_norm(m: &ComplexMatrix) -> Result<f64> {
    if m.nrows() == 0 {
        return Ok(0.0);
    }
    let scale = m.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if scale == 0.0 {
        return Ok(0.0);
    }
    if m.is_square() && hermitian_defect(m) <= 1e-14 * scale {
        let eig = hermitian_eigen(m)?;
        let top = eig.values.first().copied().unwrap_or(0.0).abs();
        let bottom = eig.values.last().copied().unwrap_or(0.0).abs();
        return Ok(top.max(bottom));
    }
    // Rescale before squaring to keep M†M away from underflow.
    let scaled = m.map(|z| z / scale);
    let gram = scaled.adjoint() * &scaled;
    let eig = hermitian_eigen(&gram)?;
    Ok(scale * eig.values.first().copied().unwrap_or(0.0).max(0.0).sqrt())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitResult {
    /// `c_0 … c_order` of `Σ c_r p^{-r}`.
    pub coefficients: Vec<Complex64>,
    pub residual_norm: f64,
    pub condition_estimate: f64,
}

impl FitResult {
    pub fn evaluate(&self, p: f64) -> Complex64 {
        self.coefficients.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, c| acc / p + c)
    }
}

/// Least-squares fit `value(p) ≈ Σ_{r ≤ order} c_r p^{-r}`.
pub fn fit_inverse_powers(data: &[(u32, Complex64)], order: usize) -> Result<FitResult> {
    fit_inverse_powers_with(data, order, &Tolerances::default())
}

pub fn fit_inverse_powers_with(
    data: &[(u32, Complex64)],
    order: usize,
    tol: &Tolerances,
) -> Result<FitResult> {
    let mut levels: Vec<u32> = data.iter().map(|d| d.0).collect();
    levels.sort_unstable();
    levels.dedup();
    if levels.first() == Some(&0) {
        return Err(Error::config("levels p must be positive"));
    }
    if levels.len() < order + 2 {
        return Err(Error::config(format!(
            "fit of order {order} needs at least {} distinct levels, got {}",
            order + 2,
            levels.len()
        )));
    }
    // Columns in x = p_min / p keep the Vandermonde system well scaled.
    let p_min = f64::from(levels[0]);
    let rows = data.len();
    let cols = order + 1;
    let a = DMatrix::from_fn(rows, cols, |i, j| (p_min / f64::from(data[i].0)).powi(j as i32));
    let svd = a.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    let condition = if smin > 0.0 { smax / smin } else { f64::INFINITY };
    if !(condition < tol.fit_condition) {
        return Err(Error::numerical(format!(
            "inverse-power fit is rank deficient (condition estimate {condition:e})"
        )));
    }
    let re = DVector::from_iterator(rows, data.iter().map(|d| d.1.re));
    let im = DVector::from_iterator(rows, data.iter().map(|d| d.1.im));
    let sol_re = svd.solve(&re, 0.0).map_err(Error::numerical)?;
    let sol_im = svd.solve(&im, 0.0).map_err(Error::numerical)?;
    let res_re = &a * &sol_re - &re;
    let res_im = &a * &sol_im - &im;
    let residual_norm = (res_re.norm_squared() + res_im.norm_squared()).sqrt();
    let coefficients = (0..cols)
        .map(|j| Complex64::new(sol_re[j], sol_im[j]) * p_min.powi(j as i32))
        .collect();
    Ok(FitResult { coefficients, residual_norm, condition_estimate: condition })
}

/// Ordinary least-squares line through `(s, log|value|)` samples: returns `(slope, intercept)`.
pub fn decay_slope(data: &[(f64, f64)]) -> Result<(f64, f64)> {
    if data.len() < 3 {
        return Err(Error::config(format!("decay fit needs at least 3 points, got {}", data.len())));
    }
    if data.windows(2).any(|w| !(w[1].0 > w[0].0)) {
        return Err(Error::config("decay fit abscissae must be strictly increasing"));
    }
    if data.iter().any(|(s, v)| !s.is_finite() || !v.is_finite()) {
        return Err(Error::numerical("decay fit data must be finite"));
    }
    let n = data.len() as f64;
    let mean_s = compensated_sum(data.iter().map(|d| d.0)) / n;
    let mean_v = compensated_sum(data.iter().map(|d| d.1)) / n;
    let sxy = compensated_sum(data.iter().map(|d| (d.0 - mean_s) * (d.1 - mean_v)));
    let sxx = compensated_sum(data.iter().map(|d| (d.0 - mean_s) * (d.0 - mean_s)));
    let slope = sxy / sxx;
    Ok((slope, mean_v - slope * mean_s))
}
