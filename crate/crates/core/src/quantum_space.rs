//! Truncated quantum spaces of L²-holomorphic sections at level `p`, their
//! Bergman kernels and coherent states.
//!
//! Sections are represented in the frame-normalized form `s(z)e^{−pκ(z)/2}`, so
//! kernel values are directly comparable across gauges. Raw monomials are
//! prescaled by their quadrature norms (`u_k = z^k/‖z^k‖`) so that no power
//! or factorial is ever formed explicitly.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Geometry, GeometryKind, Symbol};
use crate::numerics::{gauss_legendre, CompensatedSum, ComplexMatrix, ComplexSum, QuadratureRule, Tolerances};

/// `ln(1e18)`: quadrature tails below this fraction of the peak are dropped.
const TAIL_LOG: f64 = 41.45;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Truncation {
    /// Rule-based initial size, doubled until the stability gate passes.
    Auto,
    /// Exactly this many raw monomials; the gate is still enforced.
    Fixed(usize),
}

#[derive(Debug, Clone)]
pub struct SpaceOptions {
    pub truncation: Truncation,
    /// Radius that must be resolved: probe points and symbol supports.
    pub effective_radius: f64,
    /// Extra radial breakpoints (symbol support boundaries centered at 0).
    pub radial_breaks: Vec<f64>,
    /// Points where the truncation gate is evaluated.
    pub probes: Vec<Complex64>,
    /// Multiplier on all quadrature node counts.
    pub refinement: f64,
    pub angular_nodes: Option<usize>,
    /// Always orthonormalize through pivoted Cholesky.
    pub force_generic: bool,
    pub max_modes: usize,
    pub tol: Tolerances,
}

impl Default for SpaceOptions {
    fn default() -> Self {
        Self {
            truncation: Truncation::Auto,
            effective_radius: 1.0,
            radial_breaks: Vec::new(),
            probes: Vec::new(),
            refinement: 1.0,
            angular_nodes: None,
            force_generic: false,
            max_modes: 2048,
            tol: Tolerances::default(),
        }
    }
}

impl SpaceOptions {
    pub fn with_radius(radius: f64) -> Self {
        Self { effective_radius: radius, ..Self::default() }
    }

    pub fn fixed(mut self, n: usize) -> Self {
        self.truncation = Truncation::Fixed(n);
        self
    }

    pub fn with_probes(mut self, probes: Vec<Complex64>) -> Self {
        self.probes = probes;
        self
    }

    /// Radius and radial breakpoints covering the given symbols.
    pub fn for_symbols(symbols: &[&Symbol]) -> Self {
        let mut opts = Self::default();
        let radii: Vec<f64> = symbols.iter().filter_map(|s| s.effective_radius()).collect();
        if !radii.is_empty() {
            opts.effective_radius = radii.iter().copied().fold(0.0, f64::max);
        }
        opts.radial_breaks = symbols
            .iter()
            .filter(|s| s.has_compact_support())
            .filter_map(|s| s.support())
            .filter(|(c, _)| c.norm() < 1e-14)
            .map(|(_, r)| r)
            .collect();
        opts
    }

    pub fn with_breaks(mut self, breaks: Vec<f64>) -> Self {
        self.radial_breaks = breaks;
        self
    }
}

/// Truncated `H⁰₍₂₎(X, Lᵖ)` with an orthonormal basis.
#[derive(Debug, Clone)]
pub struct QuantumSpace {
    geometry: Geometry,
    p: u32,
    n_raw: usize,
    /// `ln G_kk` for the raw monomials.
    log_norms_sq: Vec<f64>,
    /// `G_jk / sqrt(G_jj G_kk)`.
    gram: ComplexMatrix,
    /// Rows: ONB sections in the prescaled basis `u_k`.
    onb: ComplexMatrix,
    diagonal: bool,
    rule: QuadratureRule,
    /// `|u_k|e^{−pκ/2}` at each radial node (rows: nodes, columns: k).
    profile: DMatrix<f64>,
    /// Radial weights times ω-density, per radial node.
    measure: Vec<f64>,
    truncation_defect: f64,
    options: SpaceOptions,
}

struct Radial {
    radii: Vec<f64>,
    weights: Vec<f64>,
}

fn solve_bargmann_extent(c: f64, k: usize) -> f64 {
    // Smallest T ≥ t* with k ln T − cT ≤ k ln t* − k − TAIL_LOG (t* = k/c).
    if k == 0 {
        return TAIL_LOG / c;
    }
    let kf = k as f64;
    let peak = kf / c;
    let target = kf * peak.ln() - kf - TAIL_LOG;
    let h = |t: f64| kf * t.ln() - c * t;
    let (mut lo, mut hi) = (peak, peak + 1.0 / c);
    while h(hi) > target {
        hi = peak + 2.0 * (hi - peak);
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if h(mid) > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    hi
}

fn gl_panels(breaks_t: &[f64], per_panel: usize) -> (Vec<f64>, Vec<f64>) {
    let (x, w) = gauss_legendre(per_panel);
    let mut ts = Vec::new();
    let mut ws = Vec::new();
    for pair in breaks_t.windows(2) {
        let half = 0.5 * (pair[1] - pair[0]);
        for (xi, wi) in x.iter().zip(&w) {
            ts.push(pair[0] + half * (xi + 1.0));
            ws.push(half * wi);
        }
    }
    (ts, ws)
}

fn merged_breaks(lo: f64, hi: f64, mut interior: Vec<f64>, min_gap: f64) -> Vec<f64> {
    interior.retain(|b| *b > lo + min_gap && *b < hi - min_gap);
    interior.sort_by(f64::total_cmp);
    let mut out = vec![lo];
    for b in interior {
        if b - out.last().copied().unwrap_or(lo) > min_gap {
            out.push(b);
        }
    }
    out.push(hi);
    out
}

/// Radial nodes and `∫ h(r) r dr` weights adapted to the geometry and mode count.
fn radial_rule(geom: &Geometry, p: u32, n_modes: usize, opts: &SpaceOptions) -> Radial {
    let pf = f64::from(p);
    let scale = opts.refinement.max(1.0);
    match geom.kind() {
        GeometryKind::Bargmann { a } => {
            let c = 0.5 * pf * a;
            let mut extent = solve_bargmann_extent(c, n_modes.saturating_sub(1)).max(solve_bargmann_extent(c, 0));
            let reach = opts.effective_radius + 6.0 / c.sqrt();
            extent = extent.max(reach * reach) * scale;
            let width = 32.0 / c;
            let mut interior: Vec<f64> = (1..).map(|i| i as f64 * width).take_while(|t| *t < extent).collect();
            interior.extend(opts.radial_breaks.iter().map(|r| r * r));
            let breaks = merged_breaks(0.0, extent, interior, 1e-3 * width);
            let per_panel = (24.0 * scale).ceil() as usize;
            let (ts, ws) = gl_panels(&breaks, per_panel);
            Radial { radii: ts.iter().map(|t| t.sqrt()).collect(), weights: ws.iter().map(|w| 0.5 * w).collect() }
        }
        GeometryKind::FubiniStudy => {
            // u = t/(1+t): the Gram integrands become polynomials of degree p in u.
            let interior = opts.radial_breaks.iter().map(|r| r * r / (1.0 + r * r)).collect();
            let breaks = merged_breaks(0.0, 1.0, interior, 1e-6);
            let per_panel = ((pf / 2.0 + 32.0) * scale).ceil() as usize;
            let (us, ws) = gl_panels(&breaks, per_panel);
            let radii = us.iter().map(|u| (u / (1.0 - u)).sqrt()).collect();
            let weights = us.iter().zip(&ws).map(|(u, w)| 0.5 * w / ((1.0 - u) * (1.0 - u))).collect();
            Radial { radii, weights }
        }
        GeometryKind::PoincareDisc { s } => {
            // Integrands t^k (1 − t)^{ps − 2} are polynomial in t on each panel.
            let interior = opts.radial_breaks.iter().filter(|r| **r < 1.0).map(|r| r * r).collect();
            let breaks = merged_breaks(0.0, 1.0, interior, 1e-6);
            let per_panel = (((n_modes as f64 + pf * s) / 2.0 + 32.0) * scale).ceil() as usize;
            let (ts, ws) = gl_panels(&breaks, per_panel);
            Radial { radii: ts.iter().map(|t| t.sqrt()).collect(), weights: ws.iter().map(|w| 0.5 * w).collect() }
        }
    }
}

/// `ln ∫ |z|^{2k} e^{−pκ} dv` for `k < n` by the given radial rule.
fn log_norms(geom: &Geometry, p: u32, radial: &Radial, n: usize) -> Vec<f64> {
    let pf = f64::from(p);
    let base: Vec<f64> = radial
        .radii
        .iter()
        .zip(&radial.weights)
        .map(|(r, w)| {
            let t = r * r;
            (2.0 * PI * w * geom.volume_density_radial(t)).ln() - pf * geom.potential_radial(t)
        })
        .collect();
    let ln_r: Vec<f64> = radial.radii.iter().map(|r| r.ln()).collect();
    (0..n)
        .map(|k| {
            let kf = k as f64;
            let terms: Vec<f64> = base.iter().zip(&ln_r).map(|(b, lr)| b + 2.0 * kf * lr).collect();
            let top = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let mut acc = CompensatedSum::new();
            for t in &terms {
                acc.add((t - top).exp());
            }
            top + acc.value().ln()
        })
        .collect()
}

/// Diagonal of the truncated kernel at `x` using the first `n` modes.
fn diagonal_partial_sums(geom: &Geometry, p: u32, log_norms: &[f64], x: Complex64, n: usize) -> f64 {
    let t = x.norm_sqr();
    let frame = -f64::from(p) * geom.potential_radial(t);
    let mut acc = CompensatedSum::new();
    for (k, ln_g) in log_norms.iter().take(n).enumerate() {
        let term = if t == 0.0 {
            if k == 0 { (frame - ln_g).exp() } else { 0.0 }
        } else {
            (k as f64 * t.ln() + frame - ln_g).exp()
        };
        acc.add(term);
    }
    acc.value()
}

/// Pivoted Cholesky `PᵀCP = LL†` with relative cutoff; returns (pivots, L) for the retained rank.
fn pivoted_cholesky(c: &ComplexMatrix, cutoff: f64) -> Result<(Vec<usize>, ComplexMatrix)> {
    let n = c.nrows();
    let mut a = c.clone();
    let mut perm: Vec<usize> = (0..n).collect();
    let mut l = ComplexMatrix::zeros(n, n);
    let scale = (0..n).map(|i| c[(i, i)].re).fold(0.0, f64::max);
    let mut rank = 0;
    for k in 0..n {
        let (piv, best) = (k..n).map(|i| (i, a[(perm[i], perm[i])].re)).fold((k, f64::NEG_INFINITY), |acc, x| if x.1 > acc.1 { x } else { acc });
        if best < -cutoff * scale {
            return Err(Error::numerical(format!("Gram matrix is not positive: pivot {best:e} at step {k}")));
        }
        if best <= cutoff * scale {
            break;
        }
        perm.swap(k, piv);
        l.swap_rows(k, piv);
        let d = best.sqrt();
        l[(k, k)] = Complex64::new(d, 0.0);
        let pk = perm[k];
        for i in k + 1..n {
            let pi = perm[i];
            let v = a[(pi, pk)] / d;
            l[(i, k)] = v;
        }
        for i in k + 1..n {
            for j in k + 1..=i {
                let (pi, pj) = (perm[i], perm[j]);
                let upd = l[(i, k)] * l[(j, k)].conj();
                a[(pi, pj)] -= upd;
                if i != j {
                    a[(pj, pi)] = a[(pi, pj)].conj();
                }
            }
        }
        rank += 1;
    }
    let l = l.view((0, 0), (rank, rank)).into_owned();
    perm.truncate(rank);
    Ok((perm, l))
}

/// ONB rows (in the raw basis) from pivoted Cholesky of the normalized Gram.
fn generic_onb(c: &ComplexMatrix, cutoff: f64) -> Result<ComplexMatrix> {
    let n = c.nrows();
    let (perm, l) = pivoted_cholesky(c, cutoff)?;
    let d = perm.len();
    // e = L^{-1} u_S  ⇒  rows of L^{-1} placed on the pivot columns.
    let linv = l
        .solve_lower_triangular(&ComplexMatrix::identity(d, d))
        .ok_or_else(|| Error::numerical("singular Cholesky factor"))?;
    let mut onb = ComplexMatrix::zeros(d, n);
    for a in 0..d {
        for (j, &col) in perm.iter().enumerate() {
            onb[(a, col)] = linv[(a, j)];
        }
    }
    Ok(onb)
}

impl QuantumSpace {
    /// Assemble and orthonormalize at level `p` with the given options.
    pub fn build(geom: &Geometry, p: u32, opts: &SpaceOptions) -> Result<Self> {
        if p == 0 {
            return Err(Error::config("level p must be at least 1"));
        }
        let probes = default_probes(geom, opts);
        for z in &probes {
            geom.check(*z)?;
        }
        if let Some(d) = geom.finite_dim(p) {
            if let Truncation::Fixed(n) = opts.truncation {
                if n != d {
                    return Err(Error::config(format!("{} at p={p} has dimension {d}; truncation {n} is not allowed", geom.name())));
                }
            }
            return Self::assemble(geom, p, d, opts, 0.0);
        }
        let mut n = match opts.truncation {
            Truncation::Fixed(0) => return Err(Error::config("truncation must be at least 1")),
            Truncation::Fixed(n) => n,
            Truncation::Auto => initial_truncation(geom, p, opts.effective_radius),
        };
        loop {
            let defect = truncation_defect(geom, p, n, &probes, opts);
            if defect < opts.tol.truncation {
                return Self::assemble(geom, p, n, opts, defect);
            }
            if matches!(opts.truncation, Truncation::Fixed(_)) || n >= opts.max_modes {
                return Err(Error::Convergence(format!(
                    "{} at p={p}: doubling N={n} changes P_p(x,x) by {defect:e} (> {:e})",
                    geom.name(),
                    opts.tol.truncation
                )));
            }
            n = (n + n.div_ceil(4)).min(opts.max_modes);
        }
    }

    fn assemble(geom: &Geometry, p: u32, n: usize, opts: &SpaceOptions, truncation_defect: f64) -> Result<Self> {
        let radial = radial_rule(geom, p, n, opts);
        let ln_g = log_norms(geom, p, &radial, n);
        // Quadrature gate: a refined (and, on ℂ, wider) radial rule must agree.
        let refined_opts = SpaceOptions { refinement: 1.5 * opts.refinement.max(1.0), ..opts.clone() };
        let refined = log_norms(geom, p, &radial_rule(geom, p, n, &refined_opts), n);
        let drift = ln_g.iter().zip(&refined).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        if !(drift < opts.tol.quadrature_refinement) {
            return Err(Error::Convergence(format!(
                "{} at p={p}: Gram diagonal changes by {drift:e} under quadrature refinement",
                geom.name()
            )));
        }

        let n_angular = opts
            .angular_nodes
            .unwrap_or_else(|| ((2 * n + 64) as f64 * opts.refinement.max(1.0)).ceil() as usize)
            .max(2 * n + 1);
        let rule = QuadratureRule::from_polar(Complex64::new(0.0, 0.0), radial.radii.clone(), radial.weights.clone(), n_angular)?;

        let pf = f64::from(p);
        let nr = radial.radii.len();
        let profile = DMatrix::from_fn(nr, n, |i, k| {
            let r = radial.radii[i];
            (k as f64 * r.ln() - 0.5 * pf * geom.potential_radial(r * r) - 0.5 * ln_g[k]).exp()
        });
        let measure: Vec<f64> =
            radial.radii.iter().zip(&radial.weights).map(|(r, w)| w * geom.volume_density_radial(r * r)).collect();

        // Angular sums A_m = Σ_l (2π/n_θ) e^{imθ_l}.
        let angular: Vec<Complex64> = (0..n)
            .map(|m| {
                let mut acc = ComplexSum::new();
                for l in 0..n_angular {
                    acc.add(Complex64::from_polar(rule.angular_weight(), m as f64 * rule.angle(l)));
                }
                acc.value()
            })
            .collect();
        let radial_overlap = |j: usize, k: usize| {
            let mut acc = CompensatedSum::new();
            for i in 0..nr {
                acc.add(measure[i] * profile[(i, j)] * profile[(i, k)]);
            }
            acc.value()
        };
        let diag: Vec<f64> = (0..n).map(|j| radial_overlap(j, j) * angular[0].re).collect();
        // |C_jk| ≤ |A_{j−k}|/A_0 by Cauchy–Schwarz on the radial overlaps.
        let alias = angular.iter().skip(1).map(|a| a.norm()).fold(0.0, f64::max) / angular[0].re;
        let diagonal = alias < opts.tol.gram_offdiagonal && !opts.force_generic;
        let mut gram = ComplexMatrix::zeros(n, n);
        for j in 0..n {
            gram[(j, j)] = Complex64::new(diag[j], 0.0);
            if diagonal {
                continue;
            }
            for k in 0..j {
                let v = Complex64::new(radial_overlap(j, k), 0.0) * angular[j - k];
                gram[(j, k)] = v;
                gram[(k, j)] = v.conj();
            }
        }

        let onb = if diagonal { ComplexMatrix::identity(n, n) } else { generic_onb(&gram, 1e-12)? };

        let space = QuantumSpace {
            geometry: *geom,
            p,
            n_raw: n,
            log_norms_sq: ln_g,
            gram,
            onb,
            diagonal,
            rule,
            profile,
            measure,
            truncation_defect,
            options: opts.clone(),
        };
        space.check_orthonormality(&opts.tol)?;
        if diagonal {
            space.cross_check_generic(&default_probes(geom, opts))?;
        }
        Ok(space)
    }

    fn check_orthonormality(&self, tol: &Tolerances) -> Result<()> {
        let o = &self.onb;
        let defect = (o * &self.gram * o.adjoint() - ComplexMatrix::identity(o.nrows(), o.nrows())).camax();
        if defect > tol.onb_identity {
            return Err(Error::numerical(format!("ONB·G·ONB† deviates from identity by {defect:e}")));
        }
        Ok(())
    }

    /// Pivoted-Cholesky orthonormalization of a leading block must reproduce the fast path.
    fn cross_check_generic(&self, probes: &[Complex64]) -> Result<()> {
        let m = self.n_raw.min(24);
        let block = self.gram.view((0, 0), (m, m)).into_owned();
        let onb = generic_onb(&block, 1e-12)?;
        for &x in probes {
            let u = self.raw_values(x);
            let fast: f64 = (0..m).map(|k| u[k].norm_sqr()).sum();
            let generic: f64 = (0..onb.nrows())
                .map(|a| (0..m).map(|k| onb[(a, k)] * u[k]).sum::<Complex64>().norm_sqr())
                .sum();
            if (fast - generic).abs() > 1e-9 * fast.max(1e-300) {
                return Err(Error::numerical(format!(
                    "generic orthonormalization disagrees with the diagonal path at {x}: {generic} vs {fast}"
                )));
            }
        }
        Ok(())
    }

    pub fn geometry(&self) -> &Geometry {
        &self.geometry
    }

    pub fn p(&self) -> u32 {
        self.p
    }

    /// Number of raw monomials `z⁰ … z^{N−1}`.
    pub fn n_raw(&self) -> usize {
        self.n_raw
    }

    /// Retained dimension.
    pub fn dim(&self) -> usize {
        self.onb.nrows()
    }

    pub fn rule(&self) -> &QuadratureRule {
        &self.rule
    }

    pub fn log_norms_sq(&self) -> &[f64] {
        &self.log_norms_sq
    }

    pub fn gram(&self) -> &ComplexMatrix {
        &self.gram
    }

    pub fn onb_coefficients(&self) -> &ComplexMatrix {
        &self.onb
    }

    pub fn is_diagonal(&self) -> bool {
        self.diagonal
    }

    /// Relative change of `P_p(x,x)` at the probes when N is doubled.
    pub fn truncation_defect(&self) -> f64 {
        self.truncation_defect
    }

    pub fn options(&self) -> &SpaceOptions {
        &self.options
    }

    /// An independent rule (refined radially, shifted angular count) over the same region.
    pub fn alternate_rule(&self) -> Result<QuadratureRule> {
        let opts = SpaceOptions { refinement: 1.5 * self.options.refinement.max(1.0), ..self.options.clone() };
        let radial = radial_rule(&self.geometry, self.p, self.n_raw, &opts);
        QuadratureRule::from_polar(Complex64::new(0.0, 0.0), radial.radii, radial.weights, self.rule.n_angular() + 3)
    }

    pub(crate) fn profile(&self) -> &DMatrix<f64> {
        &self.profile
    }

    pub(crate) fn measure(&self) -> &[f64] {
        &self.measure
    }

    /// Frame-normalized prescaled monomials `u_k(z)e^{−pκ(z)/2}`.
    pub fn raw_values(&self, z: Complex64) -> DVector<Complex64> {
        let t = z.norm_sqr();
        let frame = -0.5 * f64::from(self.p) * self.geometry.potential_radial(t);
        let theta = z.arg();
        DVector::from_fn(self.n_raw, |k, _| {
            if t == 0.0 {
                return if k == 0 { Complex64::new((frame - 0.5 * self.log_norms_sq[0]).exp(), 0.0) } else { Complex64::default() };
            }
            let modulus = (0.5 * k as f64 * t.ln() + frame - 0.5 * self.log_norms_sq[k]).exp();
            Complex64::from_polar(modulus, k as f64 * theta)
        })
    }

    /// Frame-normalized ONB sections `e_a(z)`.
    pub fn basis_values(&self, z: Complex64) -> DVector<Complex64> {
        let u = self.raw_values(z);
        if self.diagonal {
            u
        } else {
            &self.onb * u
        }
    }

    /// `e_a` at quadrature node `(i, l)`, using the cached radial profile.
    pub(crate) fn node_values(&self, i: usize, l: usize) -> DVector<Complex64> {
        let theta = self.rule.angle(l);
        let u = DVector::from_fn(self.n_raw, |k, _| Complex64::from_polar(self.profile[(i, k)], k as f64 * theta));
        if self.diagonal {
            u
        } else {
            &self.onb * u
        }
    }

    /// `P_p(x, x′)` in ω-normalization with frames at both points.
    pub fn bergman_kernel(&self, x: Complex64, y: Complex64) -> Result<Complex64> {
        self.geometry.check(x)?;
        self.geometry.check(y)?;
        let (ex, ey) = (self.basis_values(x), self.basis_values(y));
        let mut acc = ComplexSum::new();
        for (a, b) in ex.iter().zip(ey.iter()) {
            acc.add(a * b.conj());
        }
        Ok(acc.value())
    }

    /// Kernel with respect to Lebesgue measure (symmetrized density factors).
    pub fn bergman_kernel_lebesgue(&self, x: Complex64, y: Complex64) -> Result<Complex64> {
        let k = self.bergman_kernel(x, y)?;
        Ok(k * (self.geometry.volume_density(x) * self.geometry.volume_density(y)).sqrt())
    }

    pub fn bergman_diagonal(&self, x: Complex64) -> Result<f64> {
        self.geometry.check(x)?;
        let e = self.basis_values(x);
        let mut acc = CompensatedSum::new();
        for v in e.iter() {
            acc.add(v.norm_sqr());
        }
        Ok(acc.value())
    }

    /// `∫ s ē_a dv` for a frame-normalized function `s`, by quadrature.
    pub fn project_function<F: Fn(Complex64) -> Complex64>(&self, s: F) -> DVector<Complex64> {
        let d = self.dim();
        let mut acc = vec![ComplexSum::new(); d];
        let aw = self.rule.angular_weight();
        for i in 0..self.rule.n_radial() {
            for l in 0..self.rule.n_angular() {
                let z = self.rule.node(i, l);
                let sv = s(z) * (self.measure[i] * aw);
                if sv == Complex64::default() {
                    continue;
                }
                let e = self.node_values(i, l);
                for a in 0..d {
                    acc[a].add(sv * e[a].conj());
                }
            }
        }
        DVector::from_iterator(d, acc.iter().map(|a| a.value()))
    }

    /// Frame-normalized value of the section with ONB coefficients `coeffs`.
    pub fn section_value(&self, coeffs: &DVector<Complex64>, z: Complex64) -> Complex64 {
        self.basis_values(z).dot(&coeffs.map(|c| c))
    }

    /// Default sample points for reproducing checks.
    pub fn sample_points(&self) -> Vec<Complex64> {
        let r = match self.geometry.chart_radius() {
            Some(_) => 0.5,
            None => 1.0,
        };
        (0..7).map(|j| Complex64::from_polar(r * (j as f64 + 0.5) / 7.0, 0.9 * j as f64 + 0.3)).collect()
    }
}

fn default_probes(geom: &Geometry, opts: &SpaceOptions) -> Vec<Complex64> {
    if !opts.probes.is_empty() {
        return opts.probes.clone();
    }
    let r = match geom.chart_radius() {
        Some(c) => opts.effective_radius.min(0.95 * c),
        None => opts.effective_radius,
    };
    vec![Complex64::new(0.0, 0.0), Complex64::from_polar(0.5 * r, 0.7), Complex64::from_polar(r, 2.1)]
}

/// `N = max(p + 1, ⌈μ + 7√μ⌉ + 16)` where `μ = p·t·∂_tκ(t)` at `t = R²` is the
/// index of the monomial whose radial profile peaks at `R`; the `√μ` margin
/// covers the spread of the profiles.
pub fn initial_truncation(geom: &Geometry, p: u32, effective_radius: f64) -> usize {
    let t = match geom.chart_radius() {
        Some(c) => (effective_radius.min(0.99 * c)).powi(2),
        None => effective_radius * effective_radius,
    };
    let h = 1e-6 * t.max(1e-6);
    let slope = (geom.potential_radial(t + h) - geom.potential_radial((t - h).max(0.0))) / (t + h - (t - h).max(0.0));
    let mu = f64::from(p) * t * slope;
    let guess = (mu + 7.0 * mu.sqrt()).ceil() as usize + 16;
    guess.max(p as usize + 1)
}

/// Max relative change of `P_p(x,x)` at the probes between N and 2N modes.
fn truncation_defect(geom: &Geometry, p: u32, n: usize, probes: &[Complex64], opts: &SpaceOptions) -> f64 {
    let radial = radial_rule(geom, p, 2 * n, opts);
    let ln_g = log_norms(geom, p, &radial, 2 * n);
    probes
        .iter()
        .map(|&x| {
            let small = diagonal_partial_sums(geom, p, &ln_g, x, n);
            let large = diagonal_partial_sums(geom, p, &ln_g, x, 2 * n);
            (large - small).abs() / large
        })
        .fold(0.0, f64::max)
}

/// Build with default options covering `effective_radius`.
pub fn build_space(geom: &Geometry, p: u32, opts: &SpaceOptions) -> Result<QuantumSpace> {
    QuantumSpace::build(geom, p, opts)
}

/// Coherent state `s_x = P_p(·, x)·e_x`, stored by its ONB coefficients.
#[derive(Debug, Clone)]
pub struct CoherentVector {
    pub center: Complex64,
    /// `conj(e_a(x))`.
    pub coefficients: DVector<Complex64>,
    pub norm_sq: f64,
}

impl CoherentVector {
    /// Rank-one projector `Π_p(x) = s_x s_x† / ‖s_x‖²`.
    pub fn projector(&self) -> ComplexMatrix {
        let v = &self.coefficients;
        (v * v.adjoint()).map(|z| z / self.norm_sq)
    }
}

pub fn coherent_state(space: &QuantumSpace, x: Complex64) -> Result<CoherentVector> {
    space.geometry.check(x)?;
    let e = space.basis_values(x);
    let coefficients = e.map(|z| z.conj());
    let mut acc = CompensatedSum::new();
    for c in coefficients.iter() {
        acc.add(c.norm_sqr());
    }
    let norm_sq = acc.value();
    if !(norm_sq > 1e-12) {
        return Err(Error::Degenerate { point: x, diagonal: norm_sq });
    }
    Ok(CoherentVector { center: x, coefficients, norm_sq })
}

/// `max_x |(P_p s)(x) − s(x)|` for the section with ONB coefficients `coeffs`.
pub fn reproduce_check(space: &QuantumSpace, coeffs: &DVector<Complex64>) -> Result<f64> {
    if coeffs.len() != space.dim() {
        return Err(Error::config(format!("expected {} coefficients, got {}", space.dim(), coeffs.len())));
    }
    reproduce_residual(space, |z| space.section_value(coeffs, z))
}

/// Same check for an arbitrary frame-normalized function.
pub fn reproduce_residual<F: Fn(Complex64) -> Complex64>(space: &QuantumSpace, s: F) -> Result<f64> {
    let q = space.project_function(&s);
    Ok(space
        .sample_points()
        .into_iter()
        .map(|x| (space.section_value(&q, x) - s(x)).norm())
        .fold(0.0, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use statrs::function::gamma::ln_gamma;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn bargmann_monomial_norms_match_gamma_closed_form() {
        let geom = Geometry::bargmann(1.0).unwrap();
        let space = build_space(&geom, 4, &SpaceOptions::with_radius(1.5)).unwrap();
        assert!(space.is_diagonal());
        for k in 0..=10 {
            // Lebesgue form 2π·2^k k!/(pa)^{k+1}, times the ω-density a/2π.
            let kf = k as f64;
            let lebesgue = (2.0 * PI).ln() + kf * 2f64.ln() + ln_gamma(kf + 1.0) - (kf + 1.0) * 4f64.ln();
            let want = lebesgue + (1.0 / (2.0 * PI)).ln();
            assert!((space.log_norms_sq()[k] - want).abs() < 1e-9, "k={k}");
        }
    }

    #[test]
    fn fubini_study_dimension() {
        let space = build_space(&Geometry::fubini_study(), 8, &SpaceOptions::default()).unwrap();
        assert_eq!(space.dim(), 9);
        assert!(matches!(
            build_space(&Geometry::fubini_study(), 8, &SpaceOptions::default().fixed(5)),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn disc_norms_are_finite_and_match_beta_functions() {
        let geom = Geometry::poincare_disc(2.0).unwrap();
        let space = build_space(&geom, 3, &SpaceOptions::with_radius(0.6)).unwrap();
        for (k, ln_g) in space.log_norms_sq().iter().enumerate() {
            assert!(ln_g.is_finite());
            let want = geom.monomial_log_norm_sq(3, k).unwrap();
            assert!((ln_g - want).abs() < 1e-10, "k={k}");
        }
    }

    #[test]
    fn kernel_values_against_closed_forms() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let b = Geometry::bargmann(1.0).unwrap();
        let space = build_space(&b, 4, &SpaceOptions::with_radius(1.5)).unwrap();
        assert!((space.bergman_kernel(c(0.0, 0.0), c(0.0, 0.0)).unwrap().re - 4.0).abs() < 1e-10);
        let d = Geometry::poincare_disc(2.0).unwrap();
        let dspace = build_space(&d, 3, &SpaceOptions::with_radius(0.6)).unwrap();
        for _ in 0..10 {
            let x = Complex64::from_polar(rng.random_range(0.0..0.6), rng.random_range(0.0..6.3));
            let y = Complex64::from_polar(rng.random_range(0.0..0.6), rng.random_range(0.0..6.3));
            let got = dspace.bergman_kernel(x, y).unwrap();
            let want = d.reference_kernel(3, x, y).unwrap();
            assert!((got - want).norm() < 1e-7 * want.norm(), "{got} vs {want}");
            let got = space.bergman_kernel(x, y).unwrap();
            let want = b.reference_kernel(4, x, y).unwrap();
            assert!((got - want).norm() < 1e-8 * want.norm());
        }
    }

    #[test]
    fn kernel_is_hermitian_with_positive_diagonal() {
        let space = build_space(&Geometry::fubini_study(), 6, &SpaceOptions::default()).unwrap();
        let (x, y) = (c(0.3, 0.5), c(-1.0, 0.2));
        let k = space.bergman_kernel(x, y).unwrap();
        assert!((k - space.bergman_kernel(y, x).unwrap().conj()).norm() < 1e-13);
        let diag = space.bergman_kernel(x, x).unwrap();
        assert!(diag.im.abs() < 1e-14 && diag.re > 0.0);
    }

    #[test]
    fn lebesgue_kernel_is_the_model_kernel_with_scaled_weight() {
        let a = 1.0;
        let p = 4;
        let space = build_space(&Geometry::bargmann(a).unwrap(), p, &SpaceOptions::with_radius(1.0)).unwrap();
        let w = crate::model_space::ModelWeights::uniform(1, a * f64::from(p)).unwrap();
        let (x, y) = (c(0.2, -0.4), c(0.5, 0.1));
        let want = crate::model_space::model_kernel(&w, &[x], &[y]).unwrap();
        assert!((space.bergman_kernel_lebesgue(x, y).unwrap() - want).norm() < 1e-10 * want.norm());
    }

    #[test]
    fn trace_of_projection_and_semigroup() {
        let space = build_space(&Geometry::fubini_study(), 5, &SpaceOptions::default()).unwrap();
        let rule = space.rule().clone();
        let trace = rule.integrate_real(|z| space.bergman_diagonal(z).unwrap() * space.geometry().volume_density(z));
        assert!((trace - 6.0).abs() < 1e-8, "{trace}");
        let (x, y) = (c(0.4, 0.1), c(-0.2, 0.3));
        let comp = rule.integrate(|w| {
            space.bergman_kernel(x, w).unwrap() * space.bergman_kernel(w, y).unwrap() * space.geometry().volume_density(w)
        });
        assert!((comp - space.bergman_kernel(x, y).unwrap()).norm() < 1e-7);
    }

    #[test]
    fn generic_orthonormalization_agrees_with_fast_path() {
        let geom = Geometry::bargmann(1.0).unwrap();
        let opts = SpaceOptions::with_radius(1.0);
        let fast = build_space(&geom, 6, &opts).unwrap();
        let generic = build_space(&geom, 6, &SpaceOptions { force_generic: true, ..opts }).unwrap();
        assert!(!generic.is_diagonal());
        for x in [c(0.0, 0.0), c(0.3, 0.7), c(-0.9, 0.1)] {
            let a = fast.bergman_diagonal(x).unwrap();
            let b = generic.bergman_diagonal(x).unwrap();
            assert!((a - b).abs() < 1e-9 * a);
        }
    }

    #[test]
    fn forced_small_truncation_fails_the_gate() {
        let geom = Geometry::bargmann(1.0).unwrap();
        let err = build_space(&geom, 64, &SpaceOptions::with_radius(1.0).fixed(2)).unwrap_err();
        assert!(matches!(err, Error::Convergence(_)), "{err}");
    }

    #[test]
    fn truncation_and_quadrature_stability() {
        let geom = Geometry::bargmann(1.0).unwrap();
        let opts = SpaceOptions::with_radius(1.0);
        let space = build_space(&geom, 16, &opts).unwrap();
        assert!(space.truncation_defect() < 1e-8);
        let refined = build_space(&geom, 16, &SpaceOptions { refinement: 1.5, ..opts.clone() }).unwrap();
        for (a, b) in space.log_norms_sq().iter().zip(refined.log_norms_sq()) {
            assert!((a - b).abs() < 1e-9);
        }
        let doubled = build_space(&geom, 16, &opts.clone().fixed(2 * space.n_raw())).unwrap();
        for x in [c(0.0, 0.0), c(0.7, 0.2)] {
            let a = space.bergman_diagonal(x).unwrap();
            let b = doubled.bergman_diagonal(x).unwrap();
            assert!((a - b).abs() < 1e-8 * b);
        }
    }

    #[test]
    fn gauge_shift_leaves_kernels_invariant() {
        for geom in [Geometry::bargmann(1.0).unwrap(), Geometry::fubini_study(), Geometry::poincare_disc(2.0).unwrap()] {
            let opts = SpaceOptions::with_radius(0.6);
            let a = build_space(&geom, 8, &opts).unwrap();
            let b = build_space(&geom.with_potential_shift(0.7), 8, &opts).unwrap();
            for (x, y) in [(c(0.1, 0.2), c(0.3, -0.1)), (c(0.0, 0.0), c(0.5, 0.0))] {
                let ka = a.bergman_kernel(x, y).unwrap();
                let kb = b.bergman_kernel(x, y).unwrap();
                assert!((ka - kb).norm() < 1e-10 * ka.norm());
            }
            // Section norms rescale by e^{−pc}.
            assert!((b.log_norms_sq()[1] - a.log_norms_sq()[1] + 8.0 * 0.7).abs() < 1e-9);
        }
    }

    #[test]
    fn coherent_state_identities() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let space = build_space(&Geometry::poincare_disc(2.0).unwrap(), 6, &SpaceOptions::with_radius(0.6)).unwrap();
        for _ in 0..20 {
            let x = Complex64::from_polar(rng.random_range(0.0..0.6), rng.random_range(0.0..6.3));
            let s = coherent_state(&space, x).unwrap();
            let diag = space.bergman_diagonal(x).unwrap();
            assert!((s.norm_sq - diag).abs() < 1e-10 * diag);
            let pi = s.projector();
            assert!((&pi * &pi - &pi).camax() < 1e-10);
            assert!((pi.trace() - 1.0).norm() < 1e-10);
        }
    }

    #[test]
    fn coherent_state_at_origin_is_the_ground_mode() {
        let space = build_space(&Geometry::bargmann(1.0).unwrap(), 8, &SpaceOptions::with_radius(1.0)).unwrap();
        let s = coherent_state(&space, c(0.0, 0.0)).unwrap();
        assert!(s.coefficients[0].norm() > 0.1);
        assert!(s.coefficients.iter().skip(1).all(|v| v.norm() < 1e-12));
    }

    #[test]
    fn projector_annihilates_sections_vanishing_at_center() {
        let space = build_space(&Geometry::fubini_study(), 5, &SpaceOptions::default()).unwrap();
        let x = c(0.4, -0.3);
        let s = coherent_state(&space, x).unwrap();
        let e = space.basis_values(x);
        // v ⟂ s_x ⇔ section vanishes at x.
        let mut v = DVector::from_fn(space.dim(), |a, _| c(a as f64 * 0.1 + 0.2, 0.05));
        let val = e.dot(&v.map(|z| z));
        let correction = s.coefficients.map(|z| z * val / s.norm_sq);
        v -= correction;
        assert!(space.section_value(&v, x).norm() < 1e-12);
        assert!((s.projector() * &v).camax() < 1e-12);
    }

    #[test]
    fn reproducing_property() {
        let space = build_space(&Geometry::bargmann(1.0).unwrap(), 6, &SpaceOptions::with_radius(1.0)).unwrap();
        for a in 0..space.dim().min(10) {
            let mut e = DVector::zeros(space.dim());
            e[a] = c(1.0, 0.0);
            assert!(reproduce_check(&space, &e).unwrap() < 1e-7, "mode {a}");
        }
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let v = DVector::from_fn(space.dim(), |_, _| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
        assert!(reproduce_check(&space, &v).unwrap() < 1e-7);

        let bump = Symbol::cubic_bump(c(0.0, 0.0), 1.0);
        let geom = *space.geometry();
        let residual = reproduce_residual(&space, |z| z.conj() * bump.eval(z) * (-3.0 * geom.potential(z)).exp() * 3.0).unwrap();
        assert!(residual > 0.05, "{residual}");
    }
}
