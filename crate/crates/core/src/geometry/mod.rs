//! Concrete quantizable Kähler curves and the pointwise calculus on them.
//!
//! Conventions: the unit frame has `|1|²_h = e^{−κ}`, the Kähler form is
//! `ω = (√−1/2π)∂∂̄κ = √−1 g dz∧dz̄` with `g = κ_{zz̄}/2π`, and the ω-volume
//! density relative to Lebesgue measure is `2g`.

mod symbol;

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};

pub use symbol::{Derivatives, Jet, Symbol, FD_STEP_FIRST, FD_STEP_SECOND};

/// `Δf = LAPLACE_CONSTANT · g^{-1} ∂_z∂_z̄ f` (positive Laplace–Beltrami operator).
///
/// Calibrated against the Berezin transform of the flat model, where
/// `p(B_p f − f) → (2/a) f_{zz̄}` and `D₁ = −Δ/4π`.
pub const LAPLACE_CONSTANT: f64 = -2.0;

/// Normalization of `⟨D^{1,0}∂f, D^{0,1}∂̄g⟩ = C2_HESSIAN_PAIRING · g^{-2} f_{;zz} g_{;z̄z̄}`.
///
/// Calibrated against the exact monomial Toeplitz algebra of the flat model:
/// `T_{z²}T_{z̄²} = T_{z²z̄²} + p^{-1}T_{−8zz̄/a} + p^{-2}·8/a²`.
pub const C2_HESSIAN_PAIRING: f64 = 1.0;

/// Normalization of `⟨Ric_ω, ∂f∧∂̄g⟩ = C2_RICCI_PAIRING · √−1 R_{11̄} g^{-2} f_z g_z̄`.
pub const C2_RICCI_PAIRING: f64 = -1.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case", deny_unknown_fields)]
pub enum GeometryKind {
    /// `κ = a|z|²/2` on ℂ.
    Bargmann { a: f64 },
    /// `κ = log(1 + |z|²)` on the affine chart of ℂP¹.
    FubiniStudy,
    /// `κ = −s·log(1 − |z|²)` on the unit disc.
    PoincareDisc { s: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Geometry {
    kind: GeometryKind,
    /// Constant added to κ (frame gauge).
    shift: f64,
}

impl Geometry {
    pub fn new(kind: GeometryKind) -> Result<Self> {
        match kind {
            GeometryKind::Bargmann { a } if !(a > 0.0) || !a.is_finite() => {
                Err(Error::config(format!("bargmann weight a must be positive (got {a})")))
            }
            GeometryKind::PoincareDisc { s } if !(s >= 2.0) || !s.is_finite() => {
                Err(Error::config(format!("poincare_disc exponent s must be at least 2 (got {s})")))
            }
            _ => Ok(Geometry { kind, shift: 0.0 }),
        }
    }

    pub fn bargmann(a: f64) -> Result<Self> {
        Self::new(GeometryKind::Bargmann { a })
    }

    pub fn fubini_study() -> Self {
        Geometry { kind: GeometryKind::FubiniStudy, shift: 0.0 }
    }

    pub fn poincare_disc(s: f64) -> Result<Self> {
        Self::new(GeometryKind::PoincareDisc { s })
    }

    /// Same geometry with `κ ↦ κ + c`.
    pub fn with_potential_shift(mut self, c: f64) -> Self {
        self.shift = c;
        self
    }

    pub fn kind(&self) -> GeometryKind {
        self.kind
    }

    pub fn potential_shift(&self) -> f64 {
        self.shift
    }

    pub fn name(&self) -> String {
        match self.kind {
            GeometryKind::Bargmann { a } => format!("bargmann(a={a})"),
            GeometryKind::FubiniStudy => "fubini_study".to_string(),
            GeometryKind::PoincareDisc { s } => format!("poincare_disc(s={s})"),
        }
    }

    /// Chart radius; `None` for the whole plane.
    pub fn chart_radius(&self) -> Option<f64> {
        match self.kind {
            GeometryKind::PoincareDisc { .. } => Some(1.0),
            _ => None,
        }
    }

    pub fn contains(&self, z: Complex64) -> bool {
        z.re.is_finite() && z.im.is_finite() && self.chart_radius().is_none_or(|r| z.norm() < r)
    }

    pub fn check(&self, z: Complex64) -> Result<()> {
        if self.contains(z) {
            Ok(())
        } else {
            Err(Error::Domain { point: z, geometry: self.name() })
        }
    }

    /// Dimension of the quantum space when finite.
    pub fn finite_dim(&self, p: u32) -> Option<usize> {
        match self.kind {
            GeometryKind::FubiniStudy => Some(p as usize + 1),
            _ => None,
        }
    }

    /// κ as a function of `t = |z|²` (all instances are radial).
    pub fn potential_radial(&self, t: f64) -> f64 {
        self.shift
            + match self.kind {
                GeometryKind::Bargmann { a } => 0.5 * a * t,
                GeometryKind::FubiniStudy => t.ln_1p(),
                GeometryKind::PoincareDisc { s } => -s * (-t).ln_1p(),
            }
    }

    pub fn potential(&self, z: Complex64) -> f64 {
        self.potential_radial(z.norm_sqr())
    }

    /// `κ_{zz̄}` as a function of `t = |z|²`.
    pub fn kzz_radial(&self, t: f64) -> f64 {
        match self.kind {
            GeometryKind::Bargmann { a } => 0.5 * a,
            GeometryKind::FubiniStudy => 1.0 / ((1.0 + t) * (1.0 + t)),
            GeometryKind::PoincareDisc { s } => s / ((1.0 - t) * (1.0 - t)),
        }
    }

    /// Metric coefficient `g₁₁̄ = κ_{zz̄}/2π`.
    pub fn metric_at(&self, z: Complex64) -> Result<f64> {
        self.check(z)?;
        Ok(self.metric_unchecked(z))
    }

    pub(crate) fn metric_unchecked(&self, z: Complex64) -> f64 {
        self.kzz_radial(z.norm_sqr()) / (2.0 * PI)
    }

    /// ω-volume density relative to Lebesgue measure, `2g₁₁̄`.
    pub fn volume_density(&self, z: Complex64) -> f64 {
        2.0 * self.metric_unchecked(z)
    }

    pub fn volume_density_radial(&self, t: f64) -> f64 {
        self.kzz_radial(t) / PI
    }

    /// Christoffel symbol `Γ = ∂_z log g₁₁̄`.
    pub fn christoffel(&self, z: Complex64) -> Result<Complex64> {
        self.check(z)?;
        let t = z.norm_sqr();
        Ok(match self.kind {
            GeometryKind::Bargmann { .. } => Complex64::new(0.0, 0.0),
            GeometryKind::FubiniStudy => -2.0 * z.conj() / (1.0 + t),
            GeometryKind::PoincareDisc { .. } => 2.0 * z.conj() / (1.0 - t),
        })
    }

    /// Coefficient `R₁₁̄ = −∂_z∂_z̄ log g₁₁̄` of the Ricci form `√−1 R₁₁̄ dz∧dz̄`.
    pub fn ricci_form(&self, z: Complex64) -> Result<f64> {
        self.check(z)?;
        let t = z.norm_sqr();
        Ok(match self.kind {
            GeometryKind::Bargmann { .. } => 0.0,
            GeometryKind::FubiniStudy => 2.0 / ((1.0 + t) * (1.0 + t)),
            GeometryKind::PoincareDisc { .. } => -2.0 / ((1.0 - t) * (1.0 - t)),
        })
    }

    /// Riemannian scalar curvature `r = 2R₁₁̄/g₁₁̄` of the ω-metric.
    pub fn scalar_curvature(&self, z: Complex64) -> Result<f64> {
        Ok(2.0 * self.ricci_form(z)? / self.metric_unchecked(z))
    }

    /// Geodesic distance of the metric `2g₁₁̄|dz|²`.
    pub fn geodesic_distance(&self, x: Complex64, y: Complex64) -> Result<f64> {
        self.check(x)?;
        self.check(y)?;
        Ok(match self.kind {
            GeometryKind::Bargmann { a } => (a / (2.0 * PI)).sqrt() * (x - y).norm(),
            GeometryKind::FubiniStudy => {
                // Round sphere of area 1, radius 1/(2√π).
                let chord = (x - y).norm() / (1.0 + x * y.conj()).norm();
                chord.atan() / PI.sqrt()
            }
            GeometryKind::PoincareDisc { s } => {
                let ratio = ((x - y).norm() / (1.0 - x * y.conj()).norm()).min(1.0 - f64::EPSILON);
                (s / (4.0 * PI)).sqrt() * 2.0 * ratio.atanh()
            }
        })
    }

    /// Closed form of `ln ‖z^k‖²` at level `p`, when the norm is finite.
    pub fn monomial_log_norm_sq(&self, p: u32, k: usize) -> Option<f64> {
        let pf = f64::from(p);
        let kf = k as f64;
        let base = match self.kind {
            GeometryKind::Bargmann { a } => {
                a.ln() + ln_gamma(kf + 1.0) + kf * 2f64.ln() - (kf + 1.0) * (pf * a).ln()
            }
            GeometryKind::FubiniStudy => {
                if k > p as usize {
                    return None;
                }
                ln_gamma(kf + 1.0) + ln_gamma(pf - kf + 1.0) - ln_gamma(pf + 2.0)
            }
            GeometryKind::PoincareDisc { s } => {
                let q = pf * s;
                if q <= 1.0 {
                    return None;
                }
                s.ln() + ln_gamma(kf + 1.0) + ln_gamma(q - 1.0) - ln_gamma(kf + q)
            }
        };
        Some(base - pf * self.shift)
    }

    /// Closed-form Bergman kernel at level `p` in ω-normalization, frames included.
    pub fn reference_kernel(&self, p: u32, x: Complex64, y: Complex64) -> Option<Complex64> {
        let pf = f64::from(p);
        let (tx, ty) = (x.norm_sqr(), y.norm_sqr());
        let xy = x * y.conj();
        Some(match self.kind {
            GeometryKind::Bargmann { a } => pf * (-0.25 * pf * a * (tx + ty - 2.0 * xy)).exp(),
            GeometryKind::FubiniStudy => {
                let ln = pf * (1.0 + xy).ln() - 0.5 * pf * (tx.ln_1p() + ty.ln_1p());
                (pf + 1.0) * ln.exp()
            }
            GeometryKind::PoincareDisc { s } => {
                let q = pf * s;
                let ln = -q * (1.0 - xy).ln() + 0.5 * q * ((-tx).ln_1p() + (-ty).ln_1p());
                ((q - 1.0) / s) * ln.exp()
            }
        })
    }

    /// `κ_{zz̄}` at the chart origin.
    pub(crate) fn kzz_origin(&self) -> f64 {
        self.kzz_radial(0.0)
    }
}

fn inverse_metric(geom: &Geometry, z: Complex64) -> Result<f64> {
    Ok(1.0 / geom.metric_at(z)?)
}

/// `{f, g} = (√−1/2π) g^{11̄}(f_z g_z̄ − f_z̄ g_z)`, the bracket of `2π i_{ξ_f}ω = df`.
pub fn poisson_bracket(geom: &Geometry, f: &Symbol, g: &Symbol, z: Complex64) -> Result<Complex64> {
    let ginv = inverse_metric(geom, z)?;
    let (jf, jg) = (f.jet_of_order(z, 1)?, g.jet_of_order(z, 1)?);
    Ok(Complex64::new(0.0, 1.0 / (2.0 * PI)) * ginv * (jf.dz * jg.dzbar - jf.dzbar * jg.dz))
}

/// First star-product coefficient `C₁(f,g) = −(1/2π) g^{11̄} ∂_z f ∂_z̄ g`.
pub fn c1_coefficient(geom: &Geometry, f: &Symbol, g: &Symbol, z: Complex64) -> Result<Complex64> {
    let ginv = inverse_metric(geom, z)?;
    let (jf, jg) = (f.jet_of_order(z, 1)?, g.jet_of_order(z, 1)?);
    Ok(-ginv / (2.0 * PI) * jf.dz * jg.dzbar)
}

/// Second star-product coefficient: covariant Hessian pairing plus the Ricci term.
pub fn c2_coefficient(geom: &Geometry, f: &Symbol, g: &Symbol, z: Complex64) -> Result<Complex64> {
    let ginv = inverse_metric(geom, z)?;
    let (jf, jg) = (f.jet_of_order(z, 2)?, g.jet_of_order(z, 2)?);
    let gamma = geom.christoffel(z)?;
    let ricci = geom.ricci_form(z)?;
    let hess_f = jf.dzz - gamma * jf.dz;
    let hess_g = jg.dzbarzbar - gamma.conj() * jg.dzbar;
    let hessian = C2_HESSIAN_PAIRING * ginv * ginv * hess_f * hess_g / (8.0 * PI * PI);
    // (√−1/4π²)·(C2_RICCI_PAIRING · √−1 R g^{-2} f_z g_z̄)
    let curvature = -C2_RICCI_PAIRING * ricci * ginv * ginv * jf.dz * jg.dzbar / (4.0 * PI * PI);
    Ok(hessian + curvature)
}

/// Positive Laplace–Beltrami operator of the ω-metric.
pub fn laplace_beltrami(geom: &Geometry, f: &Symbol, z: Complex64) -> Result<Complex64> {
    let ginv = inverse_metric(geom, z)?;
    Ok(LAPLACE_CONSTANT * ginv * f.jet_of_order(z, 2)?.dzzbar)
}

/// `C₁(f, g)` packaged as a value-level symbol.
pub fn c1_symbol(geom: &Geometry, f: &Symbol, g: &Symbol) -> Symbol {
    if f.constant_value().is_some() || g.constant_value().is_some() {
        return Symbol::constant(Complex64::default());
    }
    let (geom, f1, g1) = (*geom, f.clone(), g.clone());
    Symbol::from_fn(
        format!("C1({},{})", f.name(), g.name()),
        move |z| if geom.contains(z) { c1_coefficient(&geom, &f1, &g1, z).unwrap_or_default() } else { Complex64::default() },
        f64::INFINITY,
        false,
    )
    .with_reach(joint_reach(f, g))
}

/// `C₂(f, g)` packaged as a value-level symbol.
pub fn c2_symbol(geom: &Geometry, f: &Symbol, g: &Symbol) -> Symbol {
    if f.constant_value().is_some() || g.constant_value().is_some() {
        return Symbol::constant(Complex64::default());
    }
    let (geom, f1, g1) = (*geom, f.clone(), g.clone());
    Symbol::from_fn(
        format!("C2({},{})", f.name(), g.name()),
        move |z| if geom.contains(z) { c2_coefficient(&geom, &f1, &g1, z).unwrap_or_default() } else { Complex64::default() },
        f64::INFINITY,
        false,
    )
    .with_reach(joint_reach(f, g))
}

/// `{f, g}` packaged as a value-level symbol.
pub fn poisson_symbol(geom: &Geometry, f: &Symbol, g: &Symbol) -> Symbol {
    if f.constant_value().is_some() || g.constant_value().is_some() {
        return Symbol::constant(Complex64::default());
    }
    let (geom, f1, g1) = (*geom, f.clone(), g.clone());
    Symbol::from_fn(
        format!("{{{},{}}}", f.name(), g.name()),
        move |z| if geom.contains(z) { poisson_bracket(&geom, &f1, &g1, z).unwrap_or_default() } else { Complex64::default() },
        f64::INFINITY,
        f.is_real() && g.is_real(),
    )
    .with_reach(joint_reach(f, g))
}

/// Region outside which a bidifferential expression in `f` and `g` is negligible.
fn joint_reach(f: &Symbol, g: &Symbol) -> Option<(Complex64, f64)> {
    match (f.support(), g.support()) {
        (Some(x), Some(y)) => Some(if x.1 <= y.1 { x } else { y }),
        (Some(x), None) | (None, Some(x)) => Some(x),
        (None, None) => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{radial_angular_rule, QuadratureRule};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn all() -> Vec<Geometry> {
        vec![Geometry::bargmann(1.0).unwrap(), Geometry::fubini_study(), Geometry::poincare_disc(2.0).unwrap()]
    }

    #[test]
    fn metric_values() {
        let b = Geometry::bargmann(1.0).unwrap();
        assert!((b.metric_at(c(3.0, -1.0)).unwrap() - 1.0 / (4.0 * PI)).abs() < 1e-15);
        assert!((Geometry::fubini_study().metric_at(c(0.0, 0.0)).unwrap() - 1.0 / (2.0 * PI)).abs() < 1e-15);
        let d = Geometry::poincare_disc(2.0).unwrap();
        assert!((d.metric_at(c(0.0, 0.0)).unwrap() - 1.0 / PI).abs() < 1e-15);
        assert!(matches!(d.metric_at(c(1.2, 0.0)), Err(Error::Domain { .. })));
    }

    #[test]
    fn invalid_parameters_are_rejected() {
        assert!(Geometry::bargmann(0.0).is_err());
        assert!(Geometry::poincare_disc(1.5).is_err());
    }

    #[test]
    fn closures_agree_with_finite_differences_of_the_potential() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let h = 1e-4;
        for geom in all() {
            for _ in 0..10 {
                let z = Complex64::from_polar(rng.random_range(0.0..0.8), rng.random_range(0.0..6.2));
                let k = |w: Complex64| geom.potential(w);
                // κ_{zz̄} = Δκ/4
                let lap = (k(z + h) + k(z - h) + k(z + c(0.0, h)) + k(z - c(0.0, h)) - 4.0 * k(z)) / (h * h);
                let kzz = geom.kzz_radial(z.norm_sqr());
                assert!((lap / 4.0 - kzz).abs() < 1e-5 * kzz, "{}", geom.name());

                // Γ = ∂_z log g and R = −∂∂̄ log g from differences of log g
                let lg = |w: Complex64| geom.metric_unchecked(w).ln();
                let gx = (lg(z + h) - lg(z - h)) / (2.0 * h);
                let gy = (lg(z + c(0.0, h)) - lg(z - c(0.0, h))) / (2.0 * h);
                let gamma = 0.5 * (c(gx, 0.0) - c(0.0, gy));
                let want = geom.christoffel(z).unwrap();
                assert!((gamma - want).norm() < 1e-5 * want.norm().max(1.0));
                let lap_lg = (lg(z + h) + lg(z - h) + lg(z + c(0.0, h)) + lg(z - c(0.0, h)) - 4.0 * lg(z)) / (h * h);
                let ric = geom.ricci_form(z).unwrap();
                assert!((-lap_lg / 4.0 - ric).abs() < 1e-5 * ric.abs().max(1.0));
            }
        }
    }

    #[test]
    fn scalar_curvature_signs() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..5 {
            let z = c(rng.random_range(-0.5..0.5), rng.random_range(-0.5..0.5));
            assert_eq!(Geometry::bargmann(2.0).unwrap().scalar_curvature(z).unwrap(), 0.0);
            assert!((Geometry::fubini_study().scalar_curvature(z).unwrap() - 8.0 * PI).abs() < 1e-12);
            assert!((Geometry::poincare_disc(2.0).unwrap().scalar_curvature(z).unwrap() + 4.0 * PI).abs() < 1e-12);
        }
    }

    #[test]
    fn omega_areas() {
        // Total ω-area of ℂP¹ is 1.
        let rule = QuadratureRule::compactified(80, 8).unwrap();
        let fs = Geometry::fubini_study();
        let area = rule.integrate_real(|z| fs.volume_density(z));
        assert!((area - 1.0).abs() < 1e-8, "{area}");

        // Bargmann ball: (a/2)R²; disc ball of radius ρ: s ρ²/(1 − ρ²).
        let b = Geometry::bargmann(1.5).unwrap();
        let rule = radial_angular_rule(40, 8, 2.0).unwrap();
        let area = rule.integrate_real(|z| b.volume_density(z));
        assert!((area - 0.75 * 4.0).abs() < 1e-8);
        let d = Geometry::poincare_disc(3.0).unwrap();
        let rule = radial_angular_rule(60, 8, 0.7).unwrap();
        let area = rule.integrate_real(|z| d.volume_density(z));
        assert!((area - 3.0 * 0.49 / 0.51).abs() < 1e-8);
    }

    #[test]
    fn bracket_examples() {
        let a = 1.7;
        let geom = Geometry::bargmann(a).unwrap();
        let z = Symbol::monomial(1, 0);
        let zb = Symbol::monomial(0, 1);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..5 {
            let x = c(rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0));
            assert!((poisson_bracket(&geom, &z, &zb, x).unwrap() - c(0.0, 2.0 / a)).norm() < 1e-14);
            assert!((c1_coefficient(&geom, &z, &zb, x).unwrap() + 2.0 / a).norm() < 1e-14);
            assert!(c1_coefficient(&geom, &zb, &z, x).unwrap().norm() < 1e-15);
            assert!(c2_coefficient(&geom, &z, &zb, x).unwrap().norm() < 1e-15);
        }
        let f = Symbol::gaussian(c(0.2, 0.1), 0.8, 1.0);
        let k = Symbol::constant(c(3.0, 0.0));
        for geom in all() {
            let x = c(0.1, -0.3);
            assert!(poisson_bracket(&geom, &f, &f, x).unwrap().norm() < 1e-15);
            assert!(poisson_bracket(&geom, &k, &f, x).unwrap().norm() < 1e-15);
            assert!(c2_coefficient(&geom, &k, &f, x).unwrap().norm() < 1e-15);
            assert!(laplace_beltrami(&geom, &k, x).unwrap().norm() < 1e-15);
        }
        let v = Symbol::values_only("v", |z| z, 1.0, false);
        assert!(matches!(poisson_bracket(&geom, &v, &z, c(0.0, 0.0)), Err(Error::Capability { .. })));
    }

    fn random_quadratic(rng: &mut ChaCha8Rng) -> Symbol {
        let mut s = Symbol::constant(c(rng.random_range(-1.0..1.0), 0.0));
        for (m, n) in [(1, 0), (0, 1), (2, 0), (1, 1), (0, 2)] {
            let coef = rng.random_range(-1.0..1.0);
            s = s.sum(&Symbol::monomial(m, n).scaled(coef));
        }
        s
    }

    #[test]
    fn c1_antisymmetrization_is_the_poisson_bracket() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for geom in all() {
            for _ in 0..20 {
                let f = random_quadratic(&mut rng);
                let g = random_quadratic(&mut rng);
                let x = Complex64::from_polar(rng.random_range(0.0..0.9), rng.random_range(0.0..6.3));
                let lhs = c1_coefficient(&geom, &f, &g, x).unwrap() - c1_coefficient(&geom, &g, &f, x).unwrap();
                let rhs = c(0.0, 1.0) * poisson_bracket(&geom, &f, &g, x).unwrap();
                assert!((lhs - rhs).norm() < 1e-12 * (1.0 + rhs.norm()));
            }
        }
    }

    #[test]
    fn bracket_is_bilinear_and_leibniz() {
        let geom = Geometry::fubini_study();
        let f = Symbol::gaussian(c(0.2, 0.1), 0.8, 1.0);
        let g = Symbol::monomial(1, 1);
        let h = Symbol::gaussian(c(-0.3, 0.0), 0.5, 2.0);
        let x = c(0.15, 0.25);
        let pb = |a: &Symbol, b: &Symbol| poisson_bracket(&geom, a, b, x).unwrap();
        let leibniz = pb(&f, &g.product(&h)) - (pb(&f, &g) * h.eval(x) + g.eval(x) * pb(&f, &h));
        assert!(leibniz.norm() < 1e-12);
        let bilinear = pb(&f.sum(&g.scaled(2.0)), &h) - (pb(&f, &h) + 2.0 * pb(&g, &h));
        assert!(bilinear.norm() < 1e-12);
        assert!((pb(&f, &h) + pb(&h, &f)).norm() < 1e-15);
    }

    #[test]
    fn flat_c2_matches_exact_monomial_algebra() {
        // T_{z²}T_{z̄²} = T_{z²z̄²} − 4h T_{zz̄} + 2h², h = 2/(pa): C₂(z², z̄²) = 8/a².
        let a = 1.3;
        let geom = Geometry::bargmann(a).unwrap();
        let v = c2_coefficient(&geom, &Symbol::monomial(2, 0), &Symbol::monomial(0, 2), c(0.4, 0.2)).unwrap();
        assert!((v - 8.0 / (a * a)).norm() < 1e-12);
    }

    #[test]
    fn laplacian_of_radial_square_is_constant_on_flat_plane() {
        let geom = Geometry::bargmann(1.0).unwrap();
        let r2 = Symbol::monomial(1, 1);
        let v0 = laplace_beltrami(&geom, &r2, c(0.0, 0.0)).unwrap();
        for x in [c(1.0, 2.0), c(-0.3, 0.7)] {
            assert!((laplace_beltrami(&geom, &r2, x).unwrap() - v0).norm() < 1e-14);
        }
        assert!((v0.re + 8.0 * PI).abs() < 1e-12);
    }

    #[test]
    fn distances() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for geom in all() {
            for _ in 0..20 {
                let mut pt = || Complex64::from_polar(rng.random_range(0.0..0.9), rng.random_range(0.0..6.3));
                let (x, y, w) = (pt(), pt(), pt());
                let d = |a, b| geom.geodesic_distance(a, b).unwrap();
                assert_eq!(d(x, x), 0.0);
                assert!((d(x, y) - d(y, x)).abs() < 1e-14);
                assert!(d(x, y) > 0.0);
                assert!(d(x, w) <= d(x, y) + d(y, w) + 1e-12);
            }
        }
        let a = 2.0;
        let b = Geometry::bargmann(a).unwrap();
        let (x, y) = (c(0.1, 0.2), c(-0.4, 0.9));
        let g = b.metric_unchecked(x);
        assert!((b.geodesic_distance(x, y).unwrap() - (2.0 * g).sqrt() * (x - y).norm()).abs() < 1e-14);

        let fs = Geometry::fubini_study();
        let mut last = 0.0;
        let half_great_circle = PI * 0.5 / PI.sqrt();
        for i in 1..50 {
            let d = fs.geodesic_distance(c(0.0, 0.0), c(0.3 * i as f64, 0.0)).unwrap();
            assert!(d > last && d <= half_great_circle);
            last = d;
        }
        // Infinitesimal consistency with the metric at the origin.
        let eps = 1e-6;
        for geom in all() {
            let d = geom.geodesic_distance(c(0.0, 0.0), c(eps, 0.0)).unwrap();
            let want = (geom.volume_density(c(0.0, 0.0))).sqrt() * eps;
            assert!((d - want).abs() < 1e-9 * want);
        }
    }

    #[test]
    fn reference_kernel_diagonals() {
        let z = c(0.3, 0.2);
        for p in [2u32, 7, 40] {
            let pf = f64::from(p);
            assert!((Geometry::bargmann(1.0).unwrap().reference_kernel(p, z, z).unwrap().re - pf).abs() < 1e-12 * pf);
            assert!((Geometry::fubini_study().reference_kernel(p, z, z).unwrap().re - pf - 1.0).abs() < 1e-12 * pf);
            let d = Geometry::poincare_disc(2.0).unwrap();
            assert!((d.reference_kernel(p, z, z).unwrap().re - pf + 0.5).abs() < 1e-12 * pf);
        }
    }
}
