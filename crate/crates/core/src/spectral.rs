//! Kernel-diagonal expansions, off-diagonal decay, the near-diagonal model
//! comparison and Szegő-type spectral statistics of Toeplitz operators.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{laplace_beltrami, Geometry, GeometryKind, Symbol};
use crate::numerics::{decay_slope, fit_inverse_powers, hermitian_eigen, CompensatedSum, ComplexSum, QuadratureRule, Tolerances};
use crate::quantum_space::{build_space, QuantumSpace, SpaceOptions};
use crate::toeplitz::{assemble_toeplitz, OperatorMatrix};

/// Which kernel diagonal to expand.
#[derive(Debug, Clone)]
pub enum ExpansionKind {
    Bergman,
    Toeplitz(Symbol),
}

#[derive(Debug, Clone, Serialize)]
pub struct ExpansionReport {
    pub x: Complex64,
    pub p_list: Vec<u32>,
    /// `p⁻¹·K_p(x,x)` per level.
    pub values: Vec<f64>,
    pub b0: f64,
    pub b1: f64,
    pub fit_residual: f64,
    pub reference_b0: f64,
    pub reference_b1: f64,
    /// `|p⁻¹K_p(x,x) − b̂₀|` per level.
    pub remainders: Vec<f64>,
    /// Log-log slope of the remainders, when they are above rounding.
    pub remainder_slope: Option<f64>,
    pub low_confidence: bool,
}

/// Relative fit residual above which an expansion is flagged.
pub const FIT_RESIDUAL_FLAG: f64 = 1e-6;
/// Remainders below this are treated as exact (no slope is fitted).
pub const REMAINDER_FLOOR: f64 = 1e-10;

fn expansion_value(geom: &Geometry, p: u32, x: Complex64, kind: &ExpansionKind, opts: &SpaceOptions) -> Result<f64> {
    let pf = f64::from(p);
    match kind {
        ExpansionKind::Bergman => {
            let space = build_space(geom, p, opts)?;
            Ok(space.bergman_diagonal(x)? / pf)
        }
        ExpansionKind::Toeplitz(f) => {
            let base = SpaceOptions::for_symbols(&[f]);
            let opts = SpaceOptions {
                effective_radius: opts.effective_radius.max(base.effective_radius),
                radial_breaks: [opts.radial_breaks.clone(), base.radial_breaks].concat(),
                ..opts.clone()
            };
            let space = build_space(geom, p, &opts)?;
            let t = assemble_toeplitz(&space, f)?;
            let k = t.kernel(&space, x, x)?;
            if f.is_real() && k.im.abs() > 1e-8 * k.norm().max(1.0) {
                return Err(Error::numerical(format!("Toeplitz diagonal is not real: {k}")));
            }
            Ok(k.re / pf)
        }
    }
}

/// Fits `p⁻¹K_p(x,x) ≈ b₀ + b₁p⁻¹ + b₂p⁻²` over `p_list`.
pub fn diagonal_expansion_fit(
    geom: &Geometry,
    x: Complex64,
    p_list: &[u32],
    kind: &ExpansionKind,
    opts: &SpaceOptions,
) -> Result<ExpansionReport> {
    if p_list.len() < 4 {
        return Err(Error::config("the diagonal expansion needs at least 4 levels"));
    }
    geom.check(x)?;
    let kind = match kind {
        ExpansionKind::Toeplitz(f) if f.constant_value() == Some(Complex64::new(1.0, 0.0)) => ExpansionKind::Bergman,
        k => k.clone(),
    };
    let values = p_list.iter().map(|&p| expansion_value(geom, p, x, &kind, opts)).collect::<Result<Vec<_>>>()?;
    let data: Vec<(u32, Complex64)> = p_list.iter().zip(&values).map(|(p, v)| (*p, Complex64::new(*v, 0.0))).collect();
    let fit = fit_inverse_powers(&data, 2)?;
    let (b0, b1) = (fit.coefficients[0].re, fit.coefficients[1].re);
    let scale = values.iter().map(|v| v.abs()).fold(0.0, f64::max).max(1e-300);
    let fit_residual = fit.residual_norm / scale;

    let bergman_b1 = geom.scalar_curvature(x)? / (8.0 * PI);
    let (reference_b0, reference_b1) = match &kind {
        ExpansionKind::Bergman => (1.0, bergman_b1),
        ExpansionKind::Toeplitz(f) => {
            let fx = f.eval(x).re;
            let lap = if f.derivatives() == crate::geometry::Derivatives::None {
                f64::NAN
            } else {
                laplace_beltrami(geom, f, x)?.re
            };
            (fx, bergman_b1 * fx - lap / (4.0 * PI))
        }
    };
    let remainders: Vec<f64> = values.iter().map(|v| (v - b0).abs()).collect();
    let remainder_slope = if remainders.iter().all(|r| *r > REMAINDER_FLOOR) {
        let pts: Vec<(f64, f64)> = p_list.iter().zip(&remainders).map(|(p, r)| (f64::from(*p).ln(), r.ln())).collect();
        Some(decay_slope(&pts)?.0)
    } else {
        None
    };
    Ok(ExpansionReport {
        x,
        p_list: p_list.to_vec(),
        values,
        b0,
        b1,
        fit_residual,
        reference_b0,
        reference_b1,
        remainders,
        remainder_slope,
        low_confidence: fit_residual > FIT_RESIDUAL_FLAG,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct DecayPair {
    pub x: Complex64,
    pub y: Complex64,
    pub distance: f64,
    /// `(p, log(|K_p(x,y)|/p))`
    pub samples: Vec<(u32, f64)>,
    /// Decay rate `ĉ` from regressing the log-kernel against `√p·d`.
    pub rate: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct DecayReport {
    pub pairs: Vec<DecayPair>,
    /// Pairs dropped because a kernel value fell below the floating-point floor.
    pub dropped: Vec<(Complex64, Complex64)>,
    pub min_rate: f64,
}

/// Off-diagonal decay of `P_p` (or `T_{f,p}` when `f` is given) over prebuilt spaces.
pub fn offdiagonal_decay_fit(
    spaces: &[QuantumSpace],
    f: Option<&Symbol>,
    x: Complex64,
    ys: &[Complex64],
    tol: &Tolerances,
) -> Result<DecayReport> {
    if spaces.len() < 3 {
        return Err(Error::config("decay fits need at least 3 levels"));
    }
    let geom = *spaces[0].geometry();
    let ops: Vec<Option<OperatorMatrix>> = spaces
        .iter()
        .map(|s| f.map(|f| assemble_toeplitz(s, f)).transpose())
        .collect::<Result<_>>()?;
    let mut pairs = Vec::new();
    let mut dropped = Vec::new();
    'pairs: for &y in ys {
        let d = geom.geodesic_distance(x, y)?;
        if !(d > 0.0) {
            return Err(Error::config("decay pairs must be at positive distance"));
        }
        let mut samples = Vec::new();
        for (space, op) in spaces.iter().zip(&ops) {
            let k = match op {
                Some(t) => t.kernel(space, x, y)?,
                None => space.bergman_kernel(x, y)?,
            };
            if k.norm() < tol.kernel_floor {
                dropped.push((x, y));
                continue 'pairs;
            }
            samples.push((space.p(), (k.norm() / f64::from(space.p())).ln()));
        }
        let pts: Vec<(f64, f64)> = samples.iter().map(|(p, v)| (f64::from(*p).sqrt() * d, *v)).collect();
        let (slope, _) = decay_slope(&pts)?;
        pairs.push(DecayPair { x, y, distance: d, samples, rate: -slope });
    }
    let min_rate = pairs.iter().map(|p| p.rate).fold(f64::INFINITY, f64::min);
    Ok(DecayReport { pairs, dropped, min_rate })
}

/// Max `|log|P_p(x,y)| − log p + (pa/4)|x − y|²|` on bargmann.
pub fn bargmann_exponent_defect(space: &QuantumSpace, pairs: &[(Complex64, Complex64)]) -> Result<f64> {
    let a = match space.geometry().kind() {
        GeometryKind::Bargmann { a } => a,
        _ => return Err(Error::config("the closed-form exponent exists on bargmann only")),
    };
    let pf = f64::from(space.p());
    let mut worst: f64 = 0.0;
    for &(x, y) in pairs {
        let k = space.bergman_kernel(x, y)?;
        let defect = k.norm().ln() - pf.ln() + 0.25 * pf * a * (x - y).norm_sqr();
        worst = worst.max(defect.abs());
    }
    Ok(worst)
}

#[derive(Debug, Clone, Serialize)]
pub struct NearDiagonalRow {
    pub p: u32,
    pub residual: f64,
}

/// Largest scaled-grid radius `|Z|/√p` admitted by the near-diagonal comparison.
pub const NEAR_DIAGONAL_EPS: f64 = 0.5;

/// `max |p⁻¹P_p(Z/√p, Z′/√p) − 𝒫₀(Z, Z′)|` at the chart origin.
pub fn near_diagonal_model_check(
    geom: &Geometry,
    p_list: &[u32],
    grid: &[(Complex64, Complex64)],
    opts: &SpaceOptions,
) -> Result<Vec<NearDiagonalRow>> {
    let a0 = 2.0 * geom.kzz_origin();
    p_list
        .iter()
        .map(|&p| {
            let pf = f64::from(p);
            let scale = pf.sqrt();
            for (z, w) in grid {
                let reach = z.norm().max(w.norm()) / scale;
                if reach > NEAR_DIAGONAL_EPS || !geom.contains(z / scale) || !geom.contains(w / scale) {
                    return Err(Error::config(format!("grid point {z} leaves the injectivity scale at p={p}")));
                }
            }
            let reach = grid.iter().map(|(z, w)| z.norm().max(w.norm())).fold(0.0, f64::max) / scale;
            let opts = SpaceOptions { effective_radius: opts.effective_radius.max(reach), ..opts.clone() };
            let space = build_space(geom, p, &opts)?;
            let mut residual: f64 = 0.0;
            for &(z, w) in grid {
                let k = space.bergman_kernel(z / scale, w / scale)? / pf;
                let model = (-(a0 / 4.0) * (z.norm_sqr() + w.norm_sqr() - 2.0 * z * w.conj())).exp();
                residual = residual.max((k - model).norm());
            }
            Ok(NearDiagonalRow { p, residual })
        })
        .collect()
}

/// Positive part of a spectrum, sorted descending.
#[derive(Debug, Clone, Serialize)]
pub struct SpectralMeasure {
    pub p: u32,
    pub dim: usize,
    pub eigenvalues: Vec<f64>,
    pub threshold: f64,
}

impl SpectralMeasure {
    /// `N_p(λ) = #{j : λ_{p,j} > λ}`.
    pub fn count_above(&self, lambda: f64) -> usize {
        self.eigenvalues.iter().filter(|v| **v > lambda).count()
    }

    /// `Σ_j λ_{p,j}^m`.
    pub fn power_sum(&self, m: u32) -> f64 {
        let mut acc = CompensatedSum::new();
        for v in &self.eigenvalues {
            acc.add(v.powi(m as i32));
        }
        acc.value()
    }
}

/// Eigenvalues above `threshold` of a Hermitian PSD operator.
pub fn positive_spectrum(m: &OperatorMatrix, threshold: f64) -> Result<SpectralMeasure> {
    positive_spectrum_with(m, threshold, &Tolerances::default())
}

pub fn positive_spectrum_with(m: &OperatorMatrix, threshold: f64, tol: &Tolerances) -> Result<SpectralMeasure> {
    if m.dim() == 0 {
        return Ok(SpectralMeasure { p: m.p(), dim: 0, eigenvalues: Vec::new(), threshold });
    }
    let eig = hermitian_eigen(m.matrix())?;
    let lowest = eig.values.last().copied().unwrap_or(0.0);
    if lowest < -tol.positivity {
        return Err(Error::Positivity(lowest));
    }
    let eigenvalues = eig.values.into_iter().filter(|v| *v > threshold).collect();
    Ok(SpectralMeasure { p: m.p(), dim: m.dim(), eigenvalues, threshold })
}

/// Default zero-eigenvalue threshold `1e-12·‖f‖∞`.
pub fn default_threshold(f: &Symbol) -> f64 {
    1e-12 * f.sup_norm()
}

/// How a superlevel area was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum AreaMethod {
    /// Analytic inverse of a radial power-bump profile.
    Analytic,
    /// Quadrature of a logistic indicator of the given width.
    Smoothed,
}

/// Indicator smoothing width of the quadrature fallback.
pub const SMOOTHING_WIDTH: f64 = 1e-3;

/// ω-area of the chart disc of radius `r` around the origin, `t·∂_tκ(t)` at `t = r²`.
pub fn centered_disc_area(geom: &Geometry, r: f64) -> f64 {
    let t = r * r;
    match geom.kind() {
        GeometryKind::Bargmann { a } => 0.5 * a * t,
        GeometryKind::FubiniStudy => t / (1.0 + t),
        GeometryKind::PoincareDisc { s } => s * t / (1.0 - t),
    }
}

/// Radial panels and angular nodes of the smoothed-indicator rule.
const SMOOTHED_PANELS: usize = 400;
const SMOOTHED_ANGULAR: usize = 1024;

fn smoothed_indicator(geom: &Geometry, f: &Symbol, lambda: f64, rule: &QuadratureRule) -> f64 {
    rule.integrate_real(|z| {
        let v = f.eval(z).re;
        let s = 1.0 / (1.0 + (-(v - lambda) / SMOOTHING_WIDTH).exp());
        s * geom.volume_density(z)
    })
}

/// `Area_ω{f > λ}` with the method used; the fallback integrates over the
/// symbol's support, or over `rule_space`'s rule when it has none.
pub fn superlevel_area(geom: &Geometry, f: &Symbol, lambda: f64, rule_space: &QuantumSpace) -> (f64, AreaMethod) {
    if lambda >= f.sup_norm() {
        return (0.0, AreaMethod::Analytic);
    }
    if let Some((c, radius, k)) = f.bump_profile() {
        let flat = matches!(geom.kind(), GeometryKind::Bargmann { .. });
        if flat || c.norm() == 0.0 {
            let level = if lambda <= 0.0 { radius } else { radius * (1.0 - lambda.powf(1.0 / f64::from(k))).sqrt() };
            return (centered_disc_area(geom, level), AreaMethod::Analytic);
        }
    }
    let area = match f.support() {
        Some((c, r)) => {
            let r = match geom.chart_radius() {
                Some(chart) => r.min(chart - c.norm()),
                None => r,
            };
            let breaks: Vec<f64> = (0..=SMOOTHED_PANELS).map(|i| r * i as f64 / SMOOTHED_PANELS as f64).collect();
            match QuadratureRule::squared_panels(&breaks, 4, SMOOTHED_ANGULAR) {
                Ok(rule) => smoothed_indicator(geom, f, lambda, &rule.recentered(c)),
                Err(_) => smoothed_indicator(geom, f, lambda, rule_space.rule()),
            }
        }
        None => smoothed_indicator(geom, f, lambda, rule_space.rule()),
    };
    (area, AreaMethod::Smoothed)
}

#[derive(Debug, Clone, Serialize)]
pub struct SzegoRow {
    pub p: u32,
    pub lambda: f64,
    pub count: usize,
    /// `N_p(λ)/p`
    pub normalized: f64,
    pub classical: f64,
    pub relative_error: f64,
    pub degenerate: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct SzegoReport {
    pub rows: Vec<SzegoRow>,
    pub method: AreaMethod,
    /// Per level: sup over a λ-grid on `[λ₀, ‖f‖∞]` of the tail-mass gap, relative to the classical mass at `λ₀`.
    pub cdf_distance: Vec<(u32, f64)>,
    /// Per level: largest eigenvalue minus `‖f‖∞` (must be ≤ 1e-8).
    pub top_excess: Vec<(u32, f64)>,
}

fn szego_space(geom: &Geometry, p: u32, f: &Symbol, opts: &SpaceOptions) -> Result<QuantumSpace> {
    let base = SpaceOptions::for_symbols(&[f]);
    build_space(
        geom,
        p,
        &SpaceOptions {
            effective_radius: opts.effective_radius.max(base.effective_radius),
            radial_breaks: [opts.radial_breaks.clone(), base.radial_breaks].concat(),
            ..opts.clone()
        },
    )
}

/// Counting-function comparison `N_p(λ)/p` vs `Area_ω{f > λ}`.
pub fn szego_counting(
    geom: &Geometry,
    f: &Symbol,
    lambdas: &[f64],
    p_list: &[u32],
    opts: &SpaceOptions,
) -> Result<SzegoReport> {
    if !f.is_real() || !f.is_bounded() {
        return Err(Error::config("Szegő statistics need a real bounded symbol"));
    }
    if f.support().is_none() && geom.finite_dim(1).is_none() {
        return Err(Error::config("Szegő statistics on non-compact charts need a compactly supported symbol"));
    }
    let sup = f.sup_norm();
    let mut rows = Vec::new();
    let mut cdf_distance = Vec::new();
    let mut top_excess = Vec::new();
    let mut method = AreaMethod::Analytic;
    for &p in p_list {
        let pf = f64::from(p);
        let space = szego_space(geom, p, f, opts)?;
        let t = assemble_toeplitz(&space, f)?;
        let spec = positive_spectrum_with(&t, default_threshold(f), &opts.tol)?;
        top_excess.push((p, spec.eigenvalues.first().copied().unwrap_or(0.0) - sup));
        for &lambda in lambdas {
            let (classical, m) = superlevel_area(geom, f, lambda, &space);
            method = m;
            let count = spec.count_above(lambda);
            let normalized = count as f64 / pf;
            let degenerate = lambda >= sup || lambda <= 0.0;
            let relative_error = if classical > 0.0 { (normalized - classical).abs() / classical } else { f64::NAN };
            rows.push(SzegoRow { p, lambda, count, normalized, classical, relative_error, degenerate });
        }
        let lambda0 = lambdas.iter().copied().fold(f64::INFINITY, f64::min).max(0.0);
        let base = superlevel_area(geom, f, lambda0, &space).0;
        let grid: Vec<f64> = (0..=200).map(|i| lambda0 + (sup - lambda0) * f64::from(i) / 200.0).collect();
        let dist = grid
            .iter()
            .map(|&l| (spec.count_above(l) as f64 / pf - superlevel_area(geom, f, l, &space).0).abs())
            .fold(0.0, f64::max);
        cdf_distance.push((p, if base > 0.0 { dist / base } else { f64::NAN }));
    }
    Ok(SzegoReport { rows, method, cdf_distance, top_excess })
}

#[derive(Debug, Clone, Serialize)]
pub struct MomentRow {
    pub m: u32,
    /// `p⁻¹ Σ λ_j^m` from the eigensolve.
    pub spectral: f64,
    /// `p⁻¹ Tr[T^m]` from matrix powers.
    pub trace: f64,
    /// `∫ f^m ω`.
    pub classical: f64,
    pub relative_error: f64,
    /// `|Σλ^m − Tr T^m| / |Tr T^m|`.
    pub consistency: f64,
}

/// Moments `p⁻¹Tr[T_{f,p}^m]` against `∫ f^m ω`.
pub fn szego_moments(space: &QuantumSpace, f: &Symbol, m_list: &[u32]) -> Result<Vec<MomentRow>> {
    if m_list.iter().any(|m| *m == 0 || *m > 6) {
        return Err(Error::config("moments are supported for 1 ≤ m ≤ 6"));
    }
    let pf = f64::from(space.p());
    let t = assemble_toeplitz(space, f)?;
    let spec = positive_spectrum_with(&t, 0.0, &space.options().tol)?;
    let geom = *space.geometry();
    let rule = space.rule();
    m_list
        .iter()
        .map(|&m| {
            let mut power = t.matrix().clone();
            for _ in 1..m {
                power = &power * t.matrix();
            }
            let mut tr = ComplexSum::new();
            for i in 0..power.nrows() {
                tr.add(power[(i, i)]);
            }
            let trace = tr.value().re;
            let spectral = spec.power_sum(m);
            let classical = rule.integrate_real(|z| f.eval(z).re.powi(m as i32) * geom.volume_density(z));
            Ok(MomentRow {
                m,
                spectral: spectral / pf,
                trace: trace / pf,
                classical,
                relative_error: (trace / pf - classical).abs() / classical.abs(),
                consistency: (spectral - trace).abs() / trace.abs().max(1e-300),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::ComplexMatrix;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn bargmann_expansion_is_exact() {
        let geom = Geometry::bargmann(1.0).unwrap();
        let r = diagonal_expansion_fit(&geom, c(0.3, 0.2), &[8, 16, 32, 64], &ExpansionKind::Bergman, &SpaceOptions::default())
            .unwrap();
        assert!((r.b0 - 1.0).abs() < 1e-6 && r.b1.abs() < 1e-6);
        assert!(r.remainder_slope.is_none());
    }

    #[test]
    fn fubini_study_expansion_recovers_curvature() {
        let geom = Geometry::fubini_study();
        let r =
            diagonal_expansion_fit(&geom, c(0.0, 0.0), &[8, 16, 32, 64], &ExpansionKind::Bergman, &SpaceOptions::default())
                .unwrap();
        assert!((r.b0 - 1.0).abs() < 1e-3);
        assert!((r.b1 - r.reference_b1).abs() < 0.05 * r.reference_b1.abs());
        assert!((r.remainder_slope.unwrap() + 1.0).abs() < 0.15);
    }

    #[test]
    fn toeplitz_kind_with_one_is_bergman_bitwise() {
        let geom = Geometry::poincare_disc(2.0).unwrap();
        let opts = SpaceOptions::with_radius(0.4);
        let ps = [8, 16, 32, 64];
        let a = diagonal_expansion_fit(&geom, c(0.1, 0.0), &ps, &ExpansionKind::Bergman, &opts).unwrap();
        let b = diagonal_expansion_fit(&geom, c(0.1, 0.0), &ps, &ExpansionKind::Toeplitz(Symbol::one()), &opts).unwrap();
        assert_eq!(a.values, b.values);
        assert_eq!(a.b0.to_bits(), b.b0.to_bits());
        assert_eq!(a.b1.to_bits(), b.b1.to_bits());
    }

    #[test]
    fn toeplitz_expansion_leading_terms() {
        let geom = Geometry::fubini_study();
        let f = Symbol::gaussian(c(0.1, 0.0), 0.6, 1.0);
        let r = diagonal_expansion_fit(&geom, c(0.0, 0.1), &[16, 32, 64, 128, 256], &ExpansionKind::Toeplitz(f), &SpaceOptions::default())
            .unwrap();
        assert!((r.b0 - r.reference_b0).abs() < 1e-3);
        assert!((r.b1 - r.reference_b1).abs() < 0.05 * r.reference_b1.abs(), "{} vs {}", r.b1, r.reference_b1);
    }

    #[test]
    fn positive_spectrum_basics() {
        let id = OperatorMatrix::identity(5, 1);
        let s = positive_spectrum(&id, 0.5).unwrap();
        assert_eq!(s.eigenvalues, vec![1.0; 5]);
        let zero = OperatorMatrix::new(ComplexMatrix::zeros(4, 4), "0", 1);
        assert!(positive_spectrum(&zero, 1e-12).unwrap().eigenvalues.is_empty());
        let neg = OperatorMatrix::new(ComplexMatrix::identity(3, 3).map(|z| -z), "-Id", 1);
        assert!(matches!(positive_spectrum(&neg, 0.0), Err(Error::Positivity(_))));
    }

    #[test]
    fn counting_function_is_monotone_and_integer() {
        let geom = Geometry::bargmann(1.0).unwrap();
        let f = Symbol::cubic_bump(c(0.0, 0.0), 1.0);
        let lambdas: Vec<f64> = (1..10).map(|i| f64::from(i) * 0.1).chain([1.0, 1.2]).collect();
        let rep = szego_counting(&geom, &f, &lambdas, &[32], &SpaceOptions::default()).unwrap();
        for w in rep.rows.windows(2) {
            assert!(w[0].count >= w[1].count);
        }
        assert_eq!(rep.rows.last().unwrap().count, 0);
        assert!(rep.top_excess[0].1 <= 1e-8);
        assert_eq!(rep.method, AreaMethod::Analytic);
    }

    #[test]
    fn analytic_superlevel_area_matches_smoothed_quadrature() {
        let geom = Geometry::fubini_study();
        let f = Symbol::cubic_bump(c(0.0, 0.0), 1.2);
        let space = build_space(&geom, 64, &SpaceOptions::for_symbols(&[&f])).unwrap();
        let (exact, m) = superlevel_area(&geom, &f, 0.4, &space);
        assert_eq!(m, AreaMethod::Analytic);
        let shifted = f.renamed("anon");
        let g = Symbol::from_fn("bump", move |z| shifted.eval(z), 1.0, true).with_reach(Some((c(0.0, 0.0), 1.2)));
        let (approx, m) = superlevel_area(&geom, &g, 0.4, &space);
        assert_eq!(m, AreaMethod::Smoothed);
        assert!((exact - approx).abs() < 1e-2 * exact, "{exact} vs {approx}");
    }

    #[test]
    fn moments_scale_homogeneously_and_match_trace() {
        let geom = Geometry::bargmann(1.0).unwrap();
        let f = Symbol::cubic_bump(c(0.0, 0.0), 1.0);
        let space = build_space(&geom, 32, &SpaceOptions::for_symbols(&[&f])).unwrap();
        let rows = szego_moments(&space, &f, &[1, 2, 3]).unwrap();
        // m = 1 is the trace identity: ∫f P(x,x) dv = p ∫ f ω on bargmann.
        assert!(rows[0].relative_error < 1e-9);
        // ∫(1 − t)^{3m} (a/2) dt = 1/(2(3m + 1)).
        for r in &rows {
            assert!((r.classical - 0.5 / (3.0 * f64::from(r.m) + 1.0)).abs() < 1e-10);
            assert!(r.consistency < 1e-8);
        }
        let scaled = szego_moments(&space, &f.scaled(2.0), &[1, 2, 3]).unwrap();
        for (a, b) in rows.iter().zip(&scaled) {
            let k = 2f64.powi(a.m as i32);
            assert!((b.trace - k * a.trace).abs() < 1e-10 * b.trace);
            assert!((b.classical - k * a.classical).abs() < 1e-10 * b.classical);
        }
    }

    #[test]
    fn decay_fit_on_bargmann_and_exponent() {
        let geom = Geometry::bargmann(1.0).unwrap();
        let opts = SpaceOptions::with_radius(1.2);
        let spaces: Vec<_> = [8, 16, 32].iter().map(|p| build_space(&geom, *p, &opts).unwrap()).collect();
        let rep = offdiagonal_decay_fit(&spaces, None, c(0.0, 0.0), &[c(0.3, 0.0), c(0.0, 0.6)], &Tolerances::default()).unwrap();
        assert!(rep.min_rate > 0.0);
        let defect = bargmann_exponent_defect(&spaces[2], &[(c(0.1, 0.2), c(-0.3, 0.5))]).unwrap();
        assert!(defect < 1e-8);
        assert!(offdiagonal_decay_fit(&spaces, None, c(0.1, 0.0), &[c(0.1, 0.0)], &Tolerances::default()).is_err());
    }

    #[test]
    fn near_diagonal_bargmann_is_exact() {
        let geom = Geometry::bargmann(1.0).unwrap();
        let grid = vec![(c(0.0, 0.0), c(0.0, 0.0)), (c(0.5, 0.2), c(-0.3, 0.4)), (c(1.0, 0.0), c(0.0, 1.0))];
        let rows = near_diagonal_model_check(&geom, &[8, 16, 32], &grid, &SpaceOptions::default()).unwrap();
        assert!(rows.iter().all(|r| r.residual < 1e-9));
        let far = vec![(c(10.0, 0.0), c(0.0, 0.0))];
        assert!(matches!(near_diagonal_model_check(&geom, &[8], &far, &SpaceOptions::default()), Err(Error::Config(_))));
    }
}
