//! Toeplitz operators `T_{f,p} = P_p f P_p` on a [`QuantumSpace`], the product,
//! commutator and norm laws, star-product coefficient extraction and the
//! Berezin calculus.

use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::DVector;
use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{
    c1_coefficient, c1_symbol, c2_coefficient, c2_symbol, poisson_bracket, poisson_symbol, Geometry, GeometryKind,
    Symbol,
};
use crate::numerics::{fit_inverse_powers, hermitian_defect, operator_norm, ComplexMatrix, ComplexSum};
use crate::quantum_space::{build_space, coherent_state, QuantumSpace, SpaceOptions};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Rings where the symbol stays below this fraction of its maximum are skipped.
const NEGLIGIBLE_RING: f64 = 1e-17;

/// A `d × d` operator in the ONB of a quantum space.
#[derive(Debug, Clone)]
pub struct OperatorMatrix {
    matrix: ComplexMatrix,
    hermitian: bool,
    label: String,
    p: u32,
}

impl OperatorMatrix {
    /// Wraps a matrix; the Hermitian flag is measured.
    pub fn new(matrix: ComplexMatrix, label: impl Into<String>, p: u32) -> Self {
        let scale = matrix.camax().max(1.0);
        let hermitian = matrix.is_square() && hermitian_defect(&matrix) < 1e-10 * scale;
        Self { matrix, hermitian, label: label.into(), p }
    }

    pub fn identity(dim: usize, p: u32) -> Self {
        Self { matrix: ComplexMatrix::identity(dim, dim), hermitian: true, label: "Id".into(), p }
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.matrix
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermitian
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn p(&self) -> u32 {
        self.p
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// Spectral norm.
    pub fn norm(&self) -> Result<f64> {
        operator_norm(&self.matrix)
    }

    pub fn trace(&self) -> Complex64 {
        let mut acc = ComplexSum::new();
        for i in 0..self.dim() {
            acc.add(self.matrix[(i, i)]);
        }
        acc.value()
    }

    pub fn compose(&self, other: &OperatorMatrix) -> OperatorMatrix {
        OperatorMatrix::new(&self.matrix * &other.matrix, format!("{}∘{}", self.label, other.label), self.p)
    }

    pub fn sub(&self, other: &OperatorMatrix) -> OperatorMatrix {
        OperatorMatrix::new(&self.matrix - &other.matrix, format!("{}−{}", self.label, other.label), self.p)
    }

    pub fn scaled(&self, c: Complex64) -> OperatorMatrix {
        OperatorMatrix::new(self.matrix.map(|z| z * c), format!("{c}·{}", self.label), self.p)
    }

    /// `Σ e_a(x) M_ab conj(e_b(x′))`.
    pub fn kernel(&self, space: &QuantumSpace, x: Complex64, y: Complex64) -> Result<Complex64> {
        space.geometry().check(x)?;
        space.geometry().check(y)?;
        let (ex, ey) = (space.basis_values(x), space.basis_values(y));
        let v = &self.matrix * ey.map(|z| z.conj());
        let mut acc = ComplexSum::new();
        for (a, b) in ex.iter().zip(v.iter()) {
            acc.add(a * b);
        }
        Ok(acc.value())
    }
}

/// Closed-form `T_{z^m z̄^n}` on `bargmann`, `dim × dim` in the monomial ONB.
pub fn monomial_matrix(geom: &Geometry, p: u32, dim: usize, m: u32, n: u32) -> Result<ComplexMatrix> {
    if !matches!(geom.kind(), GeometryKind::Bargmann { .. }) {
        return Err(Error::config(format!("monomial symbols are only admitted on bargmann, not {}", geom.name())));
    }
    let ln_norm = |k: usize| geom.monomial_log_norm_sq(p, k).unwrap_or(f64::NAN);
    let mut out = ComplexMatrix::zeros(dim, dim);
    for j in 0..dim {
        let target = j as i64 + i64::from(m) - i64::from(n);
        if target < 0 || target >= dim as i64 {
            continue;
        }
        let i = target as usize;
        let v = (ln_norm(j + m as usize) - 0.5 * ln_norm(j) - 0.5 * ln_norm(i)).exp();
        out[(i, j)] = Complex64::new(v, 0.0);
    }
    Ok(out)
}

/// `P_N T_{f₁} ⋯ T_{f_k} P_N` for monomials, computed in a padded space so the
/// truncation does not cut the intermediate states.
pub fn monomial_product(geom: &Geometry, p: u32, dim: usize, factors: &[(u32, u32)]) -> Result<ComplexMatrix> {
    let pad: usize = factors.iter().map(|(m, n)| (m + n) as usize).sum();
    let big = dim + pad;
    let mut acc = ComplexMatrix::identity(big, big);
    for &(m, n) in factors {
        acc *= monomial_matrix(geom, p, big, m, n)?;
    }
    Ok(acc.view((0, 0), (dim, dim)).into_owned())
}

/// `Σ c·T_{z^m z̄^n}` on bargmann.
pub fn polynomial_matrix(geom: &Geometry, p: u32, dim: usize, terms: &[(u32, u32, Complex64)]) -> Result<ComplexMatrix> {
    let mut out = ComplexMatrix::zeros(dim, dim);
    for &(m, n, c) in terms {
        out += monomial_matrix(geom, p, dim, m, n)? * c;
    }
    Ok(out)
}

/// `P_N T_f T_g P_N` for polynomial symbols, padded like [`monomial_product`].
pub fn polynomial_product(
    geom: &Geometry,
    p: u32,
    dim: usize,
    f: &[(u32, u32, Complex64)],
    g: &[(u32, u32, Complex64)],
) -> Result<ComplexMatrix> {
    let mut out = ComplexMatrix::zeros(dim, dim);
    for &(m, n, a) in f {
        for &(k, l, b) in g {
            out += monomial_product(geom, p, dim, &[(m, n), (k, l)])? * (a * b);
        }
    }
    Ok(out)
}

fn check_symbol(space: &QuantumSpace, f: &Symbol) -> Result<()> {
    let geom = space.geometry();
    if !f.is_bounded() && f.support().is_none() {
        return Err(Error::config(format!("symbol {} is unbounded without a support or reach", f.name())));
    }
    if let (Some((c, r)), None) = (f.support(), geom.chart_radius()) {
        let covered = space.rule().max_radius();
        if c.norm() + r > covered {
            return Err(Error::config(format!(
                "quadrature radius {covered:.4} does not cover the support of {} (|c| + R = {:.4})",
                f.name(),
                c.norm() + r
            )));
        }
    }
    Ok(())
}

/// Angular Fourier coefficients `Σ_l (2π/n_θ) f(r_i, θ_l) e^{−imθ_l}` per radial node.
fn angular_coefficients(space: &QuantumSpace, f: &Symbol) -> Vec<Option<Vec<Complex64>>> {
    let rule = space.rule();
    let n_theta = rule.n_angular();
    let fft = FftPlanner::<f64>::new().plan_fft_forward(n_theta);
    let weight = rule.angular_weight();
    let samples: Vec<Vec<Complex64>> = (0..rule.n_radial())
        .into_par_iter()
        .map(|i| (0..n_theta).map(|l| f.eval(rule.node(i, l)) * weight).collect())
        .collect();
    let ring_max: Vec<f64> = samples.iter().map(|b| b.iter().map(|z| z.norm()).fold(0.0, f64::max)).collect();
    let floor = NEGLIGIBLE_RING * ring_max.iter().copied().fold(0.0, f64::max);
    samples
        .into_par_iter()
        .zip(ring_max)
        .map(|(mut buf, m)| {
            if m <= floor {
                return None;
            }
            fft.process(&mut buf);
            Some(buf)
        })
        .collect()
}

/// `M_ij = ⟨f s_j, s_i⟩` by quadrature (constant and monomial shortcuts).
pub fn assemble_toeplitz(space: &QuantumSpace, f: &Symbol) -> Result<OperatorMatrix> {
    let (p, d) = (space.p(), space.dim());
    let label = format!("T[{}]", f.name());
    if let Some(c) = f.constant_value() {
        let mut m = OperatorMatrix::new(ComplexMatrix::identity(d, d).map(|z| z * c), label, p);
        m.hermitian = c.im == 0.0;
        return Ok(m);
    }
    if let Some(terms) = f.polynomial_terms() {
        let matrix = polynomial_matrix(space.geometry(), p, d, terms)?;
        return Ok(OperatorMatrix::new(matrix, label, p));
    }
    check_symbol(space, f)?;

    let coeffs = angular_coefficients(space, f);
    let profile = space.profile();
    let measure = space.measure();
    let n = space.n_raw();
    let n_theta = space.rule().n_angular();
    let real = f.is_real();
    let active: Vec<usize> = (0..coeffs.len()).filter(|i| coeffs[*i].is_some()).collect();
    let rows: Vec<Vec<Complex64>> = (0..n)
        .into_par_iter()
        .map(|j| {
            let upper = if real { j + 1 } else { n };
            (0..upper)
                .map(|k| {
                    let idx = (j as i64 - k as i64).rem_euclid(n_theta as i64) as usize;
                    let mut acc = ComplexSum::new();
                    for &i in &active {
                        let fh = coeffs[i].as_ref().map_or(ZERO, |c| c[idx]);
                        acc.add(fh * (measure[i] * profile[(i, j)] * profile[(i, k)]));
                    }
                    acc.value()
                })
                .collect()
        })
        .collect();
    let mut raw = ComplexMatrix::zeros(n, n);
    for (j, row) in rows.into_iter().enumerate() {
        for (k, v) in row.into_iter().enumerate() {
            raw[(j, k)] = v;
            if real && k < j {
                raw[(k, j)] = v.conj();
            }
        }
        if real {
            raw[(j, j)].im = 0.0;
        }
    }
    let matrix = if space.is_diagonal() {
        raw
    } else {
        let o = space.onb_coefficients();
        o.map(|z| z.conj()) * raw * o.transpose()
    };
    let mut out = OperatorMatrix::new(matrix, label, p);
    if real {
        out.hermitian = true;
    }
    Ok(out)
}

/// `T_{f,p}(x, x′)` through the assembled matrix.
pub fn toeplitz_kernel(space: &QuantumSpace, f: &Symbol, x: Complex64, y: Complex64) -> Result<Complex64> {
    assemble_toeplitz(space, f)?.kernel(space, x, y)
}

/// `∫ P_p(x,w) f(w) P_p(w,x′) dv(w)` evaluated directly by quadrature.
pub fn toeplitz_kernel_quadrature(space: &QuantumSpace, f: &Symbol, x: Complex64, y: Complex64) -> Result<Complex64> {
    check_symbol(space, f)?;
    let (ex, ey) = (space.basis_values(x), space.basis_values(y));
    let rule = space.rule();
    let aw = rule.angular_weight();
    let mut acc = ComplexSum::new();
    for i in 0..rule.n_radial() {
        for l in 0..rule.n_angular() {
            let fw = f.eval(rule.node(i, l));
            if fw == ZERO {
                continue;
            }
            let e = space.node_values(i, l);
            let pxw = ex.iter().zip(e.iter()).fold(ZERO, |s, (a, b)| s + a * b.conj());
            let pwy = e.iter().zip(ey.iter()).fold(ZERO, |s, (a, b)| s + a * b.conj());
            acc.add(pxw * fw * pwy * (space.measure()[i] * aw));
        }
    }
    Ok(acc.value())
}

/// `∫ f P_p(x,x) dv`, the trace of `T_{f,p}` by direct quadrature.
pub fn trace_integral(space: &QuantumSpace, f: &Symbol) -> Result<Complex64> {
    check_symbol(space, f)?;
    let rule = space.rule();
    let aw = rule.angular_weight();
    let mut acc = ComplexSum::new();
    for i in 0..rule.n_radial() {
        for l in 0..rule.n_angular() {
            let fw = f.eval(rule.node(i, l));
            if fw == ZERO {
                continue;
            }
            let e = space.node_values(i, l);
            let diag: f64 = e.iter().map(|z| z.norm_sqr()).sum();
            acc.add(fw * diag * space.measure()[i] * aw);
        }
    }
    Ok(acc.value())
}

#[derive(Debug, Clone, Serialize)]
pub struct ProductRow {
    pub p: u32,
    pub dim: usize,
    /// `‖T_fT_g − T_{fg}‖`
    pub e0: f64,
    /// `‖T_fT_g − T_{fg} − p⁻¹T_{C₁(f,g)}‖`
    pub e1: f64,
    pub flagged: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct CommutatorRow {
    pub p: u32,
    pub dim: usize,
    /// `‖(p/√−1)[T_f,T_g] − T_{{f,g}}‖`
    pub defect: f64,
    pub flagged: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct NormRow {
    pub p: u32,
    pub dim: usize,
    pub sup_norm: f64,
    pub operator_norm: f64,
    /// `‖f‖∞ − ‖T_{f,p}‖`
    pub gap: f64,
}

fn space_for(geom: &Geometry, p: u32, symbols: &[&Symbol], opts: Option<&SpaceOptions>) -> Result<QuantumSpace> {
    let base = SpaceOptions::for_symbols(symbols);
    let opts = match opts {
        Some(o) => SpaceOptions {
            effective_radius: o.effective_radius.max(base.effective_radius),
            radial_breaks: [o.radial_breaks.clone(), base.radial_breaks].concat(),
            ..o.clone()
        },
        None => base,
    };
    build_space(geom, p, &opts)
}

fn flag_row<T>(res: Result<T>, on_convergence: impl FnOnce() -> T) -> Result<(T, bool)> {
    match res {
        Ok(v) => Ok((v, false)),
        Err(Error::Convergence(_)) => Ok((on_convergence(), true)),
        Err(e) => Err(e),
    }
}

/// `C₁ = −(2/a) f_z g_z̄` of two polynomials on bargmann, as polynomial terms.
fn polynomial_c1(geom: &Geometry, f: &[(u32, u32, Complex64)], g: &[(u32, u32, Complex64)]) -> Result<Vec<(u32, u32, Complex64)>> {
    let a = match geom.kind() {
        GeometryKind::Bargmann { a } => a,
        _ => return Err(Error::config("polynomial symbols are only admitted on bargmann")),
    };
    let mut out = Vec::new();
    for &(m, n, cf) in f {
        for &(k, l, cg) in g {
            if m > 0 && l > 0 {
                // −(1/2π) g⁻¹ f_z g_z̄ with g = a/4π
                out.push((m - 1 + k, n + l - 1, cf * cg * (-(2.0 / a) * f64::from(m) * f64::from(l))));
            }
        }
    }
    Ok(out)
}

/// Exact `(T_fT_g, T_{fg}, T_{C₁})` for polynomial symbols on bargmann.
fn polynomial_triple(
    geom: &Geometry,
    p: u32,
    dim: usize,
    f: &[(u32, u32, Complex64)],
    g: &[(u32, u32, Complex64)],
) -> Result<(ComplexMatrix, ComplexMatrix, ComplexMatrix)> {
    let fg: Vec<_> = f.iter().flat_map(|&(m, n, a)| g.iter().map(move |&(k, l, b)| (m + k, n + l, a * b))).collect();
    Ok((
        polynomial_product(geom, p, dim, f, g)?,
        polynomial_matrix(geom, p, dim, &fg)?,
        polynomial_matrix(geom, p, dim, &polynomial_c1(geom, f, g)?)?,
    ))
}

fn product_row(geom: &Geometry, p: u32, f: &Symbol, g: &Symbol, opts: Option<&SpaceOptions>) -> Result<ProductRow> {
    let pf = f64::from(p);
    if let (Some(fp), Some(gp)) = (f.polynomial_terms(), g.polynomial_terms()) {
        let space = space_for(geom, p, &[], opts)?;
        let d = space.dim();
        let (tftg, tfg, c1) = polynomial_triple(geom, p, d, fp, gp)?;
        let r0 = &tftg - &tfg;
        let r1 = &r0 - c1.map(|z| z / pf);
        return Ok(ProductRow { p, dim: d, e0: operator_norm(&r0)?, e1: operator_norm(&r1)?, flagged: false });
    }
    let c1 = c1_symbol(geom, f, g);
    let fg = f.product(g);
    let space = space_for(geom, p, &[f, g], opts)?;
    let tf = assemble_toeplitz(&space, f)?;
    let tg = assemble_toeplitz(&space, g)?;
    let r0 = tf.compose(&tg).sub(&assemble_toeplitz(&space, &fg)?);
    let r1 = r0.sub(&assemble_toeplitz(&space, &c1)?.scaled(Complex64::new(1.0 / pf, 0.0)));
    Ok(ProductRow { p, dim: space.dim(), e0: r0.norm()?, e1: r1.norm()?, flagged: false })
}

/// Product-expansion defects `e₀`, `e₁` over `p_list`.
pub fn product_defect(
    geom: &Geometry,
    f: &Symbol,
    g: &Symbol,
    p_list: &[u32],
    opts: Option<&SpaceOptions>,
) -> Result<Vec<ProductRow>> {
    p_list
        .iter()
        .map(|&p| {
            let (row, flagged) = flag_row(product_row(geom, p, f, g, opts), || ProductRow {
                p,
                dim: 0,
                e0: f64::NAN,
                e1: f64::NAN,
                flagged: true,
            })?;
            Ok(ProductRow { flagged, ..row })
        })
        .collect()
}

fn commutator_row(geom: &Geometry, p: u32, f: &Symbol, g: &Symbol, opts: Option<&SpaceOptions>) -> Result<CommutatorRow> {
    let space = space_for(geom, p, &[f, g], opts)?;
    let tf = assemble_toeplitz(&space, f)?;
    let tg = assemble_toeplitz(&space, g)?;
    let comm = tf.compose(&tg).sub(&tg.compose(&tf));
    // (p/√−1)[T_f, T_g] = −√−1 p [T_f, T_g]
    let scaled = comm.scaled(Complex64::new(0.0, -f64::from(p)));
    let bracket = poisson_symbol(geom, f, g);
    let defect = if f.constant_value().is_some() || g.constant_value().is_some() {
        scaled.norm()?
    } else {
        scaled.sub(&assemble_toeplitz(&space, &bracket)?).norm()?
    };
    Ok(CommutatorRow { p, dim: space.dim(), defect, flagged: false })
}

/// Semiclassical commutator defects over `p_list`.
pub fn commutator_defect(
    geom: &Geometry,
    f: &Symbol,
    g: &Symbol,
    p_list: &[u32],
    opts: Option<&SpaceOptions>,
) -> Result<Vec<CommutatorRow>> {
    if !f.is_real() || !g.is_real() {
        return Err(Error::config("the commutator law is stated for real symbols"));
    }
    p_list
        .iter()
        .map(|&p| {
            let (row, flagged) = flag_row(commutator_row(geom, p, f, g, opts), || CommutatorRow {
                p,
                dim: 0,
                defect: f64::NAN,
                flagged: true,
            })?;
            Ok(CommutatorRow { flagged, ..row })
        })
        .collect()
}

/// `‖f‖∞ − ‖T_{f,p}‖` over `p_list`.
pub fn norm_convergence(geom: &Geometry, f: &Symbol, p_list: &[u32], opts: Option<&SpaceOptions>) -> Result<Vec<NormRow>> {
    if !f.is_real() || !f.is_bounded() {
        return Err(Error::config("the norm law needs a real bounded symbol"));
    }
    p_list
        .iter()
        .map(|&p| {
            let space = space_for(geom, p, &[f], opts)?;
            let t = assemble_toeplitz(&space, f)?;
            let norm = t.norm()?;
            Ok(NormRow { p, dim: space.dim(), sup_norm: f.sup_norm(), operator_norm: norm, gap: f.sup_norm() - norm })
        })
        .collect()
}

/// Star-product coefficient estimates at a point.
#[derive(Debug, Clone, Serialize)]
pub struct StarCoefficients {
    pub x: Complex64,
    /// `ĝ₀, ĝ₁, …, ĝ_{r_max}`.
    pub estimates: Vec<Complex64>,
    /// Relative fit residual per coefficient.
    pub residuals: Vec<f64>,
    /// Normalized diagonal data `(p, [σ₀, σ₁, …])` per level.
    pub levels: Vec<(u32, Vec<Complex64>)>,
    pub low_confidence: bool,
}

/// Residual threshold above which an extrapolated coefficient is flagged.
pub const EXTRAPOLATION_RESIDUAL: f64 = 1e-3;

/// Inductive extraction of `ĝ₀…ĝ_{r_max}` from Berezin symbols of
/// `T^{(l)} = p^l(T_fT_g − Σ_{j<l} p^{−j} T_{ĝ_j})`, extrapolated in `1/p`.
///
/// The subtracted `T_{ĝ_j}` for `j ≥ 1` uses the closed-form coefficient
/// symbols, since the induction needs `ĝ_j` as a function.
pub fn star_coefficient_extract(
    geom: &Geometry,
    f: &Symbol,
    g: &Symbol,
    x: Complex64,
    p_list: &[u32],
    r_max: usize,
    opts: Option<&SpaceOptions>,
) -> Result<StarCoefficients> {
    if r_max > 2 {
        return Err(Error::config("r_max must be at most 2"));
    }
    let order = r_max + 1;
    let mut distinct = p_list.to_vec();
    distinct.sort_unstable();
    distinct.dedup();
    if distinct.len() < order + 2 {
        return Err(Error::config(format!("extraction to order {r_max} needs at least {} levels", order + 2)));
    }
    geom.check(x)?;
    if let (Some(a), Some(b)) = (f.constant_value(), g.constant_value()) {
        let mut estimates = vec![ZERO; r_max + 1];
        estimates[0] = a * b;
        let levels = p_list.iter().map(|p| (*p, estimates.clone())).collect();
        return Ok(StarCoefficients { x, estimates, residuals: vec![0.0; r_max + 1], levels, low_confidence: false });
    }
    let levels: Vec<(u32, Vec<Complex64>)> = p_list
        .iter()
        .map(|&p| {
            let pf = f64::from(p);
            let cplx = |v: f64| Complex64::new(v, 0.0);
            let (prod, fg_op, c1_op, space) = if let (Some(fp), Some(gp)) = (f.polynomial_terms(), g.polynomial_terms()) {
                let space = space_for(geom, p, &[], opts)?;
                let (prod, fg, c1) = polynomial_triple(geom, p, space.dim(), fp, gp)?;
                let op = |m, label: &str| OperatorMatrix::new(m, label, p);
                (op(prod, "TfTg"), op(fg, "Tfg"), op(c1, "TC1"), space)
            } else {
                let space = space_for(geom, p, &[f, g], opts)?;
                let tf = assemble_toeplitz(&space, f)?;
                let tg = assemble_toeplitz(&space, g)?;
                let fg = assemble_toeplitz(&space, &f.product(g))?;
                let c1 = if r_max >= 2 { assemble_toeplitz(&space, &c1_symbol(geom, f, g))? } else { fg.scaled(ZERO) };
                (tf.compose(&tg), fg, c1, space)
            };
            let t0 = prod.clone();
            let t1 = prod.sub(&fg_op).scaled(cplx(pf));
            let t2 = t1.scaled(cplx(pf)).sub(&c1_op.scaled(cplx(pf)));
            let ops = [t0, t1, t2];
            let sigmas = ops[..=r_max].iter().map(|op| berezin_symbol(&space, op, x)).collect::<Result<Vec<_>>>()?;
            Ok((p, sigmas))
        })
        .collect::<Result<_>>()?;

    let mut estimates = Vec::new();
    let mut residuals = Vec::new();
    for l in 0..=r_max {
        let data: Vec<(u32, Complex64)> = levels.iter().map(|(p, s)| (*p, s[l])).collect();
        let fit = fit_inverse_powers(&data, order)?;
        let scale = data.iter().map(|(_, v)| v.norm()).fold(0.0, f64::max).max(1e-300);
        estimates.push(fit.coefficients[0]);
        residuals.push(fit.residual_norm / scale);
    }
    let low_confidence = residuals.iter().any(|r| *r > EXTRAPOLATION_RESIDUAL);
    Ok(StarCoefficients { x, estimates, residuals, levels, low_confidence })
}

/// Residual of the order-`k` associativity identity of the coefficient formulas at `x`.
pub fn star_associativity_check(geom: &Geometry, f: &Symbol, g: &Symbol, h: &Symbol, x: Complex64, k: u8) -> Result<f64> {
    geom.check(x)?;
    let fg = f.product(g);
    let gh = g.product(h);
    let v = |s: &Symbol| s.eval(x);
    let residual = match k {
        0 => v(&fg) * v(h) - v(f) * v(&gh),
        1 => {
            let left = v(f) * c1_coefficient(geom, g, h, x)? + c1_coefficient(geom, f, &gh, x)?;
            let right = c1_coefficient(geom, f, g, x)? * v(h) + c1_coefficient(geom, &fg, h, x)?;
            left - right
        }
        2 => {
            let c1_gh = c1_symbol(geom, g, h);
            let c1_fg = c1_symbol(geom, f, g);
            let left = v(f) * c2_coefficient(geom, g, h, x)?
                + c1_coefficient(geom, f, &c1_gh, x)?
                + c2_coefficient(geom, f, &gh, x)?;
            let right = c2_coefficient(geom, f, g, x)? * v(h)
                + c1_coefficient(geom, &c1_fg, h, x)?
                + c2_coefficient(geom, &fg, h, x)?;
            left - right
        }
        _ => return Err(Error::config("associativity is checked for orders 0, 1 and 2")),
    };
    Ok(residual.norm())
}

/// `σ(M)(x) = Tr[Π_p(x) M] = ⟨M s_x, s_x⟩ / ‖s_x‖²`.
pub fn berezin_symbol(space: &QuantumSpace, m: &OperatorMatrix, x: Complex64) -> Result<Complex64> {
    if m.dim() != space.dim() {
        return Err(Error::config(format!("operator dimension {} does not match space dimension {}", m.dim(), space.dim())));
    }
    let s = coherent_state(space, x)?;
    let c = &s.coefficients;
    let mc = m.matrix() * c;
    let mut acc = ComplexSum::new();
    for (a, b) in c.iter().zip(mc.iter()) {
        acc.add(a.conj() * b);
    }
    Ok(acc.value() / s.norm_sq)
}

/// `B_p f(x) = T_{f,p}(x,x) / P_p(x,x)` with the kernel integrated directly.
pub fn berezin_transform(space: &QuantumSpace, f: &Symbol, x: Complex64) -> Result<Complex64> {
    let diag = space.bergman_diagonal(x)?;
    if !(diag > 0.0) {
        return Err(Error::Degenerate { point: x, diagonal: diag });
    }
    if let Some(c) = f.constant_value() {
        return Ok(c);
    }
    Ok(toeplitz_kernel_quadrature(space, f, x, x)? / diag)
}

/// Entrywise gap between `∫ f Π_p(x) P_p(x,x) dv` on an independent rule and the assembled `T_{f,p}`.
pub fn coherent_quantization_check(space: &QuantumSpace, f: &Symbol) -> Result<f64> {
    let reconstructed = coherent_quantization(space, f)?;
    let assembled = assemble_toeplitz(space, f)?;
    Ok((reconstructed - assembled.matrix()).camax())
}

/// `∫ f(x) s_x s_x† dv(x)` by quadrature on [`QuantumSpace::alternate_rule`].
pub fn coherent_quantization(space: &QuantumSpace, f: &Symbol) -> Result<ComplexMatrix> {
    check_symbol(space, f)?;
    let rule = Arc::new(space.alternate_rule()?);
    let geom = *space.geometry();
    let d = space.dim();
    let aw = rule.angular_weight();
    let partial: Vec<ComplexMatrix> = (0..rule.n_radial())
        .into_par_iter()
        .map(|i| {
            let r = rule.radii()[i];
            let mu = rule.radial_weights()[i] * geom.volume_density_radial(r * r) * aw;
            let mut acc = ComplexMatrix::zeros(d, d);
            for l in 0..rule.n_angular() {
                let z = rule.node(i, l);
                let fz = f.eval(z);
                if fz == ZERO {
                    continue;
                }
                let c: DVector<Complex64> = space.basis_values(z).map(|v| v.conj());
                acc += (&c * c.adjoint()).map(|v| v * fz * mu);
            }
            acc
        })
        .collect();
    let mut total = ComplexMatrix::zeros(d, d);
    for m in partial {
        total += m;
    }
    Ok(total)
}

/// `−Δf(x)/4π`, the first Berezin-transform coefficient.
pub fn berezin_first_coefficient(geom: &Geometry, f: &Symbol, x: Complex64) -> Result<Complex64> {
    Ok(-crate::geometry::laplace_beltrami(geom, f, x)? / (4.0 * PI))
}

/// Poisson bracket at `x`, re-exported for the antisymmetry check.
pub fn bracket_at(geom: &Geometry, f: &Symbol, g: &Symbol, x: Complex64) -> Result<Complex64> {
    poisson_bracket(geom, f, g, x)
}

/// `C₂(f,g)` packaged as a symbol, for callers that subtract `T_{C₂}`.
pub fn c2_operator(space: &QuantumSpace, f: &Symbol, g: &Symbol) -> Result<OperatorMatrix> {
    assemble_toeplitz(space, &c2_symbol(space.geometry(), f, g))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::hermitian_eigen;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn bargmann() -> Geometry {
        Geometry::bargmann(1.0).unwrap()
    }

    #[test]
    fn constant_symbol_gives_scaled_identity() {
        let space = build_space(&bargmann(), 8, &SpaceOptions::default()).unwrap();
        let t = assemble_toeplitz(&space, &Symbol::one()).unwrap();
        assert_eq!(t.matrix(), &ComplexMatrix::identity(space.dim(), space.dim()));
        let t = assemble_toeplitz(&space, &Symbol::constant(c(2.0, 0.5))).unwrap();
        assert!(!t.is_hermitian());
    }

    #[test]
    fn quadrature_assembly_of_one_is_identity() {
        let one = Symbol::from_fn("one", |_| c(1.0, 0.0), 1.0, true);
        for geom in [bargmann(), Geometry::fubini_study(), Geometry::poincare_disc(2.0).unwrap()] {
            let space = build_space(&geom, 6, &SpaceOptions::with_radius(0.5)).unwrap();
            let t = assemble_toeplitz(&space, &one).unwrap();
            let id = ComplexMatrix::identity(space.dim(), space.dim());
            assert!((t.matrix() - id).camax() < 1e-10, "{}", geom.name());
        }
    }

    #[test]
    fn weighted_shift_from_quadrature_matches_closed_form() {
        // Quadrature of z·(cut-off) on modes well inside the cut-off.
        let geom = bargmann();
        let p = 8;
        let space = build_space(&geom, p, &SpaceOptions::with_radius(1.0)).unwrap();
        let z = Symbol::monomial(1, 0);
        let exact = assemble_toeplitz(&space, &z).unwrap();
        for k in 0..6 {
            let want = (0.5 * (geom.monomial_log_norm_sq(p, k + 1).unwrap() - geom.monomial_log_norm_sq(p, k).unwrap())).exp();
            assert!((exact.matrix()[(k + 1, k)].re - want).abs() < 1e-12);
        }
        let rough = Symbol::from_fn("z", |z| z, f64::INFINITY, false).with_reach(Some((c(0.0, 0.0), 0.0)));
        let quad = assemble_toeplitz(&space, &rough).unwrap();
        for k in 0..6 {
            assert!((quad.matrix()[(k + 1, k)] - exact.matrix()[(k + 1, k)]).norm() < 1e-9);
        }
    }

    #[test]
    fn exact_bargmann_monomial_algebra() {
        for a in [1.0, 2.5] {
            let geom = Geometry::bargmann(a).unwrap();
            for p in [4u32, 16, 64] {
                let d = 40;
                let h = 2.0 / (f64::from(p) * a);
                let zbar_z = monomial_product(&geom, p, d, &[(0, 1), (1, 0)]).unwrap();
                let z_zbar = monomial_product(&geom, p, d, &[(1, 0), (0, 1)]).unwrap();
                let t11 = monomial_matrix(&geom, p, d, 1, 1).unwrap();
                assert!((&zbar_z - &t11).camax() < 1e-10);
                let shifted = &t11 - ComplexMatrix::identity(d, d).map(|v| v * h);
                assert!((&z_zbar - shifted).camax() < 1e-10);
            }
        }
    }

    #[test]
    fn hermitian_iff_real_and_norm_bound() {
        let geom = bargmann();
        let space = build_space(&geom, 16, &SpaceOptions::with_radius(2.0)).unwrap();
        let real = Symbol::gaussian(c(0.2, 0.1), 0.5, 1.0);
        let t = assemble_toeplitz(&space, &real).unwrap();
        assert!(t.is_hermitian() && hermitian_defect(t.matrix()) < 1e-10);
        assert!(t.norm().unwrap() <= real.sup_norm() + 1e-8);
        let eig = hermitian_eigen(t.matrix()).unwrap();
        assert!(*eig.values.last().unwrap() > -1e-10);
        let cplx = Symbol::from_fn("i·gauss", move |z| c(0.0, 1.0) * real.eval(z), 1.0, false)
            .with_reach(Some((c(0.2, 0.1), 3.1)));
        let t = assemble_toeplitz(&space, &cplx).unwrap();
        assert!(!t.is_hermitian());
    }

    #[test]
    fn support_beyond_quadrature_is_a_configuration_error() {
        let space = build_space(&bargmann(), 16, &SpaceOptions::with_radius(0.5)).unwrap();
        let far = Symbol::cubic_bump(c(20.0, 0.0), 1.0);
        assert!(matches!(assemble_toeplitz(&space, &far), Err(Error::Config(_))));
    }

    #[test]
    fn kernel_paths_agree_and_trace_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for geom in [bargmann(), Geometry::fubini_study(), Geometry::poincare_disc(2.0).unwrap()] {
            let f = Symbol::gaussian(c(0.1, 0.0), 0.3, 1.0);
            let space = build_space(&geom, 8, &SpaceOptions::for_symbols(&[&f])).unwrap();
            let t = assemble_toeplitz(&space, &f).unwrap();
            for _ in 0..3 {
                let x = Complex64::from_polar(rng.random_range(0.0..0.4), rng.random_range(0.0..6.3));
                let y = Complex64::from_polar(rng.random_range(0.0..0.4), rng.random_range(0.0..6.3));
                let a = t.kernel(&space, x, y).unwrap();
                let b = toeplitz_kernel_quadrature(&space, &f, x, y).unwrap();
                assert!((a - b).norm() < 1e-8 * space.bergman_diagonal(x).unwrap().max(1.0));
                assert!(t.kernel(&space, x, x).unwrap().im.abs() < 1e-10);
            }
            let tr = trace_integral(&space, &f).unwrap();
            assert!((tr - t.trace()).norm() < 1e-7 * tr.norm(), "{}", geom.name());
            let x = c(0.2, 0.1);
            let one = toeplitz_kernel(&space, &Symbol::one(), x, c(0.0, 0.1)).unwrap();
            assert!((one - space.bergman_kernel(x, c(0.0, 0.1)).unwrap()).norm() < 1e-12);
        }
    }

    #[test]
    fn product_defect_of_constants_vanishes() {
        let rows =
            product_defect(&bargmann(), &Symbol::constant(c(2.0, 0.0)), &Symbol::constant(c(3.0, 0.0)), &[4, 8], None)
                .unwrap();
        for r in rows {
            assert!(r.e0 < 1e-10 && r.e1 < 1e-10);
        }
    }

    #[test]
    fn product_expansion_terminates_for_z_zbar() {
        let rows = product_defect(&bargmann(), &Symbol::monomial(1, 0), &Symbol::monomial(0, 1), &[4, 16], None).unwrap();
        for r in rows {
            assert!(r.e1 < 1e-10, "{r:?}");
            assert!((r.e0 - 2.0 / f64::from(r.p)).abs() < 1e-10);
        }
    }

    #[test]
    fn commutator_of_equal_and_constant_symbols_vanishes() {
        let f = Symbol::gaussian(c(0.0, 0.0), 0.5, 1.0);
        let rows = commutator_defect(&bargmann(), &f, &f, &[8], None).unwrap();
        assert!(rows[0].defect < 1e-12);
        let rows = commutator_defect(&bargmann(), &f, &Symbol::constant(c(2.0, 0.0)), &[8], None).unwrap();
        assert_eq!(rows[0].defect, 0.0);
    }

    #[test]
    fn norm_law_trivial_cases() {
        let rows = norm_convergence(&bargmann(), &Symbol::one(), &[8, 16], None).unwrap();
        assert!(rows.iter().all(|r| r.gap == 0.0));
        let tent = Symbol::tent(c(0.0, 0.0), 1.0);
        let rows = norm_convergence(&bargmann(), &tent, &[8, 16, 32], None).unwrap();
        for w in rows.windows(2) {
            assert!(w[0].gap > w[1].gap && w[1].gap > 0.0);
        }
    }

    #[test]
    fn berezin_calculus_identities() {
        let geom = Geometry::poincare_disc(2.0).unwrap();
        let f = Symbol::cubic_bump(c(0.1, 0.0), 0.4);
        let space = build_space(&geom, 10, &SpaceOptions::for_symbols(&[&f])).unwrap();
        let x = c(0.05, 0.1);
        let id = OperatorMatrix::identity(space.dim(), 10);
        assert!((berezin_symbol(&space, &id, x).unwrap() - 1.0).norm() < 1e-10);
        let proj = OperatorMatrix::new(coherent_state(&space, x).unwrap().projector(), "Pi", 10);
        assert!((berezin_symbol(&space, &proj, x).unwrap() - 1.0).norm() < 1e-10);
        let t = assemble_toeplitz(&space, &f).unwrap();
        let via_matrix = berezin_symbol(&space, &t, x).unwrap();
        let via_kernel = berezin_transform(&space, &f, x).unwrap();
        assert!((via_matrix - via_kernel).norm() < 1e-10);
        assert!(via_kernel.re >= 0.0 && via_kernel.re <= 1.0);
        assert!((berezin_transform(&space, &Symbol::one(), x).unwrap() - 1.0).norm() < 1e-10);
    }

    #[test]
    fn coherent_quantization_reconstructs_toeplitz() {
        let f = Symbol::cubic_bump(c(0.3, -0.2), 0.8);
        let g = Symbol::gaussian(c(-0.2, 0.1), 0.4, 1.0);
        let space = build_space(&bargmann(), 16, &SpaceOptions::for_symbols(&[&f, &g])).unwrap();
        assert!(coherent_quantization_check(&space, &g).unwrap() < 1e-7);
        let centered = Symbol::cubic_bump(c(0.0, 0.0), 0.8);
        let cspace = build_space(&bargmann(), 16, &SpaceOptions::for_symbols(&[&centered])).unwrap();
        assert!(coherent_quantization_check(&cspace, &centered).unwrap() < 1e-7);
        let one = Symbol::from_fn("one", |_| c(1.0, 0.0), 1.0, true);
        let id = coherent_quantization(&space, &one).unwrap();
        assert!((id - ComplexMatrix::identity(space.dim(), space.dim())).camax() < 1e-8);
        let sum = coherent_quantization(&space, &f.sum(&g)).unwrap();
        let parts = coherent_quantization(&space, &f).unwrap() + coherent_quantization(&space, &g).unwrap();
        assert!((sum - parts).camax() < 1e-12);
    }

    #[test]
    fn star_extraction_exact_for_monomials() {
        let geom = bargmann();
        let (z, zb) = (Symbol::monomial(1, 0), Symbol::monomial(0, 1));
        let x = c(0.3, -0.4);
        let star = star_coefficient_extract(&geom, &z, &zb, x, &[4, 8, 16, 32, 64], 2, None).unwrap();
        assert!((star.estimates[0] - x.norm_sqr()).norm() < 1e-9);
        assert!((star.estimates[1] + 2.0).norm() < 1e-9);
        assert!(star.estimates[2].norm() < 1e-8);
        let constants = star_coefficient_extract(&geom, &Symbol::constant(c(2.0, 0.0)), &Symbol::constant(c(3.0, 0.0)), x, &[4, 8, 16, 32], 1, None).unwrap();
        assert_eq!(constants.estimates[0], c(6.0, 0.0));
        assert!(star_coefficient_extract(&geom, &z, &zb, x, &[4, 8, 16, 32], 2, None).is_err());
    }

    #[test]
    fn associativity_orders() {
        let geom = bargmann();
        let (f, g, h) = (
            Symbol::gaussian(c(0.1, 0.0), 0.7, 1.0),
            Symbol::gaussian(c(0.0, 0.2), 0.9, 1.0),
            Symbol::monomial(1, 1),
        );
        let x = c(0.15, 0.05);
        assert!(star_associativity_check(&geom, &f, &g, &h, x, 0).unwrap() < 1e-14);
        assert!(star_associativity_check(&geom, &f, &g, &h, x, 1).unwrap() < 1e-8);
        let quad = |m, n| Symbol::monomial(m, n);
        assert!(star_associativity_check(&geom, &quad(2, 0), &quad(1, 1), &quad(0, 2), x, 2).unwrap() < 1e-4);
    }
}
