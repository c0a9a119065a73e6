use std::fmt;
use std::ops::{Add, Mul};
use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };
const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// Value and Wirtinger derivatives up to second order at one point.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Jet {
    pub value: Complex64,
    pub dz: Complex64,
    pub dzbar: Complex64,
    pub dzz: Complex64,
    pub dzzbar: Complex64,
    pub dzbarzbar: Complex64,
}

impl Jet {
    pub fn constant(c: Complex64) -> Self {
        Jet { value: c, ..Jet::default() }
    }

    pub fn coordinate(z: Complex64) -> Self {
        Jet { value: z, dz: Complex64::new(1.0, 0.0), ..Jet::default() }
    }

    pub fn conj_coordinate(z: Complex64) -> Self {
        Jet { value: z.conj(), dzbar: Complex64::new(1.0, 0.0), ..Jet::default() }
    }

    pub fn scale(self, c: Complex64) -> Self {
        Jet {
            value: self.value * c,
            dz: self.dz * c,
            dzbar: self.dzbar * c,
            dzz: self.dzz * c,
            dzzbar: self.dzzbar * c,
            dzbarzbar: self.dzbarzbar * c,
        }
    }

    /// Chain rule for `φ ∘ self` given `φ, φ′, φ″` at `self.value`.
    pub fn compose(self, phi: Complex64, dphi: Complex64, ddphi: Complex64) -> Self {
        Jet {
            value: phi,
            dz: dphi * self.dz,
            dzbar: dphi * self.dzbar,
            dzz: ddphi * self.dz * self.dz + dphi * self.dzz,
            dzzbar: ddphi * self.dz * self.dzbar + dphi * self.dzzbar,
            dzbarzbar: ddphi * self.dzbar * self.dzbar + dphi * self.dzbarzbar,
        }
    }

    /// Jet of `|z − c|²`.
    fn squared_distance(z: Complex64, c: Complex64) -> Self {
        let d = z - c;
        Jet {
            value: Complex64::new(d.norm_sqr(), 0.0),
            dz: d.conj(),
            dzbar: d,
            dzz: ZERO,
            dzzbar: Complex64::new(1.0, 0.0),
            dzbarzbar: ZERO,
        }
    }
}

impl Add for Jet {
    type Output = Jet;

    fn add(self, o: Jet) -> Self {
        Jet {
            value: self.value + o.value,
            dz: self.dz + o.dz,
            dzbar: self.dzbar + o.dzbar,
            dzz: self.dzz + o.dzz,
            dzzbar: self.dzzbar + o.dzzbar,
            dzbarzbar: self.dzbarzbar + o.dzbarzbar,
        }
    }
}

impl Mul for Jet {
    type Output = Jet;

    /// Leibniz rule to second order.
    fn mul(self, o: Jet) -> Self {
        Jet {
            value: self.value * o.value,
            dz: self.dz * o.value + self.value * o.dz,
            dzbar: self.dzbar * o.value + self.value * o.dzbar,
            dzz: self.dzz * o.value + 2.0 * self.dz * o.dz + self.value * o.dzz,
            dzzbar: self.dzzbar * o.value + self.dz * o.dzbar + self.dzbar * o.dz + self.value * o.dzzbar,
            dzbarzbar: self.dzbarzbar * o.value + 2.0 * self.dzbar * o.dzbar + self.value * o.dzbarzbar,
        }
    }
}

type JetFn = dyn Fn(Complex64) -> Jet + Send + Sync;
type ValueFn = dyn Fn(Complex64) -> Complex64 + Send + Sync;

/// Where a symbol's derivatives come from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub enum Derivatives {
    /// Closed-form jets up to second order.
    Analytic,
    /// Central finite differences of the value.
    FiniteDifference,
    /// Values only.
    None,
}

/// A scalar observable on the chart with its jet.
#[derive(Clone)]
pub struct Symbol {
    name: String,
    jet: Arc<JetFn>,
    /// Direct value path, when cheaper than the jet.
    value: Option<Arc<ValueFn>>,
    derivatives: Derivatives,
    support: Option<(Complex64, f64)>,
    /// Whether `support` is exact (compact) or only an effective reach.
    compact: bool,
    sup_norm: f64,
    real: bool,
    constant: Option<Complex64>,
    /// Terms `c·z^m z̄^n` of a polynomial symbol.
    poly: Option<Vec<(u32, u32, Complex64)>>,
    /// `(center, radius, k)` of a power bump.
    bump: Option<(Complex64, f64, u32)>,
}

impl fmt::Debug for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Symbol")
            .field("name", &self.name)
            .field("derivatives", &self.derivatives)
            .field("support", &self.support)
            .field("sup_norm", &self.sup_norm)
            .field("real", &self.real)
            .finish()
    }
}

/// Gaussian reach in widths.
pub const GAUSSIAN_REACH: f64 = 5.0;

/// Step of the first-order central differences.
pub const FD_STEP_FIRST: f64 = 1e-5;
/// Step of the second-order central differences.
pub const FD_STEP_SECOND: f64 = 1e-4;

fn finite_difference_jet(f: &(dyn Fn(Complex64) -> Complex64 + Send + Sync), z: Complex64) -> Jet {
    let h = FD_STEP_FIRST;
    let fx = (f(z + h) - f(z - h)) / (2.0 * h);
    let fy = (f(z + I * h) - f(z - I * h)) / (2.0 * h);
    let k = FD_STEP_SECOND;
    let f0 = f(z);
    let fxx = (f(z + k) - 2.0 * f0 + f(z - k)) / (k * k);
    let fyy = (f(z + I * k) - 2.0 * f0 + f(z - I * k)) / (k * k);
    let fxy = (f(z + k + I * k) - f(z + k - I * k) - f(z - k + I * k) + f(z - k - I * k)) / (4.0 * k * k);
    Jet {
        value: f0,
        dz: 0.5 * (fx - I * fy),
        dzbar: 0.5 * (fx + I * fy),
        dzz: 0.25 * (fxx - fyy - 2.0 * I * fxy),
        dzzbar: 0.25 * (fxx + fyy),
        dzbarzbar: 0.25 * (fxx - fyy + 2.0 * I * fxy),
    }
}

/// Merge like terms, drop zeros and sort by exponents.
fn normalize_poly(mut terms: Vec<(u32, u32, Complex64)>) -> Vec<(u32, u32, Complex64)> {
    terms.sort_by_key(|&(m, n, _)| (m, n));
    let mut out: Vec<(u32, u32, Complex64)> = Vec::with_capacity(terms.len());
    for (m, n, c) in terms {
        match out.last_mut() {
            Some(last) if last.0 == m && last.1 == n => last.2 += c,
            _ => out.push((m, n, c)),
        }
    }
    out.retain(|t| t.2 != ZERO);
    out
}

impl Symbol {
    fn new(name: String, jet: Arc<JetFn>, sup_norm: f64, real: bool) -> Self {
        Symbol { name, jet, value: None, derivatives: Derivatives::Analytic, support: None, compact: false, sup_norm, real, constant: None, poly: None, bump: None }
    }

    pub fn constant(c: Complex64) -> Self {
        let mut s = Symbol::new(format!("const({c})"), Arc::new(move |_| Jet::constant(c)), c.norm(), c.im == 0.0);
        s.constant = Some(c);
        s.poly = Some(vec![(0, 0, c)]);
        s
    }

    pub fn one() -> Self {
        Symbol::constant(Complex64::new(1.0, 0.0))
    }

    /// `Σ c·z^m z̄^n` from `(m, n, c)` terms. Unbounded like [`Symbol::monomial`].
    pub fn polynomial(terms: &[(u32, u32, Complex64)]) -> Self {
        let name = terms.iter().map(|(m, n, c)| format!("({c})z^{m}·zbar^{n}")).collect::<Vec<_>>().join("+");
        terms
            .iter()
            .map(|&(m, n, c)| Symbol::monomial(m, n).product(&Symbol::constant(c)))
            .reduce(|a, b| a.sum(&b))
            .unwrap_or_else(|| Symbol::constant(ZERO))
            .renamed(name)
    }

    /// `Re z` as a real polynomial symbol.
    pub fn re_z() -> Self {
        let mut s = Symbol::polynomial(&[(1, 0, Complex64::new(0.5, 0.0)), (0, 1, Complex64::new(0.5, 0.0))]).renamed("Re z");
        s.real = true;
        s
    }

    /// `Im z` as a real polynomial symbol.
    pub fn im_z() -> Self {
        let mut s = Symbol::polynomial(&[(1, 0, Complex64::new(0.0, -0.5)), (0, 1, Complex64::new(0.0, 0.5))]).renamed("Im z");
        s.real = true;
        s
    }

    /// `z^m z̄^n`. Unbounded: only meaningful for matrix-element computations.
    pub fn monomial(m: u32, n: u32) -> Self {
        let jet = move |z: Complex64| {
            let zb = z.conj();
            let pw = |b: Complex64, e: u32, d: u32| -> Complex64 {
                if d > e {
                    ZERO
                } else {
                    let fall: f64 = (0..d).map(|j| f64::from(e - j)).product();
                    fall * b.powu(e - d)
                }
            };
            Jet {
                value: pw(z, m, 0) * pw(zb, n, 0),
                dz: pw(z, m, 1) * pw(zb, n, 0),
                dzbar: pw(z, m, 0) * pw(zb, n, 1),
                dzz: pw(z, m, 2) * pw(zb, n, 0),
                dzzbar: pw(z, m, 1) * pw(zb, n, 1),
                dzbarzbar: pw(z, m, 0) * pw(zb, n, 2),
            }
        };
        let name = match (m, n) {
            (0, 0) => "1".to_string(),
            _ => format!("z^{m}·zbar^{n}"),
        };
        let mut s = Symbol::new(name, Arc::new(jet), f64::INFINITY, m == n);
        s.poly = Some(vec![(m, n, Complex64::new(1.0, 0.0))]);
        if m == 0 && n == 0 {
            s.constant = Some(Complex64::new(1.0, 0.0));
            s.sup_norm = 1.0;
        }
        s
    }

    /// `A·exp(−|z − c|²/σ²)`.
    pub fn gaussian(center: Complex64, width: f64, amplitude: f64) -> Self {
        let jet = move |z: Complex64| {
            let u = Jet::squared_distance(z, center).scale(Complex64::new(-1.0 / (width * width), 0.0));
            let e = amplitude * u.value.exp();
            u.compose(e, e, e)
        };
        let mut s = Symbol::new(format!("gauss(c={center},w={width},A={amplitude})"), Arc::new(jet), amplitude.abs(), true);
        // e^{−25} ≈ 1e−11 relative beyond this reach.
        s.support = Some((center, GAUSSIAN_REACH * width));
        s
    }

    /// Compactly supported cubic bump `(1 − |z − c|²/R²)³` on `|z − c| ≤ R`.
    pub fn cubic_bump(center: Complex64, radius: f64) -> Self {
        Symbol::power_bump(center, radius, 3).renamed(format!("bump(c={center},R={radius})"))
    }

    /// `(1 − |z − c|²/R²)^k` on `|z − c| ≤ R`, of class `C^{k−1}`.
    pub fn power_bump(center: Complex64, radius: f64, k: u32) -> Self {
        let kf = f64::from(k);
        let jet = move |z: Complex64| {
            let v = Jet::squared_distance(z, center)
                .scale(Complex64::new(-1.0 / (radius * radius), 0.0))
                .add(Jet::constant(Complex64::new(1.0, 0.0)));
            let t = v.value.re;
            if t <= 0.0 {
                Jet::default()
            } else {
                let d2 = if k >= 2 { kf * (kf - 1.0) * t.powi(k as i32 - 2) } else { 0.0 };
                v.compose(
                    Complex64::new(t.powi(k as i32), 0.0),
                    Complex64::new(kf * t.powi(k as i32 - 1), 0.0),
                    Complex64::new(d2, 0.0),
                )
            }
        };
        let mut s = Symbol::new(format!("bump{k}(c={center},R={radius})"), Arc::new(jet), 1.0, true);
        s.support = Some((center, radius));
        s.compact = true;
        s.bump = Some((center, radius, k));
        s
    }

    /// Smooth compactly supported bump `exp(1 − 1/(1 − |z − c|²/R²))` with peak 1.
    pub fn smooth_bump(center: Complex64, radius: f64) -> Self {
        let jet = move |z: Complex64| {
            let u = Jet::squared_distance(z, center)
                .scale(Complex64::new(-1.0 / (radius * radius), 0.0))
                .add(Jet::constant(Complex64::new(1.0, 0.0)));
            let t = u.value.re;
            if t <= 0.0 {
                return Jet::default();
            }
            let e = (1.0 - 1.0 / t).exp();
            let d1 = e / (t * t);
            let d2 = e * (1.0 / t.powi(4) - 2.0 / t.powi(3));
            u.compose(Complex64::new(e, 0.0), Complex64::new(d1, 0.0), Complex64::new(d2, 0.0))
        };
        let mut s = Symbol::new(format!("smooth(c={center},R={radius})"), Arc::new(jet), 1.0, true);
        s.support = Some((center, radius));
        s.compact = true;
        s
    }

    /// Lipschitz tent `max(0, 1 − |z − c|/R)`, peaked (non-smoothly) at its center.
    pub fn tent(center: Complex64, radius: f64) -> Self {
        let jet = move |z: Complex64| {
            let d = z - center;
            let rho = d.norm();
            if rho >= radius {
                return Jet::default();
            }
            if rho == 0.0 {
                return Jet::constant(Complex64::new(1.0, 0.0));
            }
            // ρ_z = z̄/(2ρ), ρ_zz = −z̄²/(4ρ³), ρ_zz̄ = 1/(4ρ)
            let r = -1.0 / radius;
            Jet {
                value: Complex64::new(1.0 - rho / radius, 0.0),
                dz: r * d.conj() / (2.0 * rho),
                dzbar: r * d / (2.0 * rho),
                dzz: -r * d.conj() * d.conj() / (4.0 * rho.powi(3)),
                dzzbar: Complex64::new(r / (4.0 * rho), 0.0),
                dzbarzbar: -r * d * d / (4.0 * rho.powi(3)),
            }
        };
        let mut s = Symbol::new(format!("tent(c={center},R={radius})"), Arc::new(jet), 1.0, true);
        s.support = Some((center, radius));
        s.compact = true;
        s
    }

    /// Arbitrary value closure; derivatives by central finite differences (flagged).
    pub fn from_fn<F>(name: impl Into<String>, f: F, sup_norm: f64, real: bool) -> Self
    where
        F: Fn(Complex64) -> Complex64 + Send + Sync + 'static,
    {
        let f = Arc::new(f);
        let g = f.clone();
        let jet = move |z: Complex64| finite_difference_jet(g.as_ref(), z);
        let mut s = Symbol::new(name.into(), Arc::new(jet), sup_norm, real);
        s.value = Some(f);
        s.derivatives = Derivatives::FiniteDifference;
        s
    }

    /// Value-only closure.
    pub fn values_only<F>(name: impl Into<String>, f: F, sup_norm: f64, real: bool) -> Self
    where
        F: Fn(Complex64) -> Complex64 + Send + Sync + 'static,
    {
        let jet = move |z: Complex64| Jet::constant(f(z));
        let mut s = Symbol::new(name.into(), Arc::new(jet), sup_norm, real);
        s.derivatives = Derivatives::None;
        s
    }

    pub fn product(&self, other: &Symbol) -> Symbol {
        let (a, b) = (self.jet.clone(), other.jet.clone());
        let mut s = Symbol::new(
            format!("({})·({})", self.name, other.name),
            Arc::new(move |z| a(z) * b(z)),
            self.sup_norm * other.sup_norm,
            self.real && other.real,
        );
        s.derivatives = weaker(self.derivatives, other.derivatives);
        s.support = match (self.support, other.support) {
            (Some(x), Some(y)) => Some(if x.1 <= y.1 { x } else { y }),
            (Some(x), None) | (None, Some(x)) => Some(x),
            (None, None) => None,
        };
        s.compact = match (self.support, other.support) {
            (Some(_), Some(_)) => {
                if self.support.map(|x| x.1) <= other.support.map(|x| x.1) { self.compact } else { other.compact }
            }
            (Some(_), None) => self.compact,
            (None, Some(_)) => other.compact,
            (None, None) => false,
        };
        s.constant = self.constant.zip(other.constant).map(|(x, y)| x * y);
        s.poly = match (&self.poly, &other.poly) {
            (Some(x), Some(y)) => {
                Some(normalize_poly(x.iter().flat_map(|&(m, n, a)| y.iter().map(move |&(k, l, b)| (m + k, n + l, a * b))).collect()))
            }
            _ => None,
        };
        if self.value.is_some() || other.value.is_some() {
            let (x, y) = (self.clone(), other.clone());
            s.value = Some(Arc::new(move |z| x.eval(z) * y.eval(z)));
        }
        s
    }

    pub fn sum(&self, other: &Symbol) -> Symbol {
        let (a, b) = (self.jet.clone(), other.jet.clone());
        let mut s = Symbol::new(
            format!("({})+({})", self.name, other.name),
            Arc::new(move |z| a(z) + b(z)),
            self.sup_norm + other.sup_norm,
            self.real && other.real,
        );
        s.derivatives = weaker(self.derivatives, other.derivatives);
        s.support = match (self.support, other.support) {
            (Some((c1, r1)), Some((c2, r2))) => {
                let c = 0.5 * (c1 + c2);
                Some((c, (c1 - c).norm().max((c2 - c).norm()) + r1.max(r2)))
            }
            _ => None,
        };
        s.compact = self.compact && other.compact;
        s.constant = self.constant.zip(other.constant).map(|(x, y)| x + y);
        s.poly = match (&self.poly, &other.poly) {
            (Some(x), Some(y)) => Some(normalize_poly(x.iter().chain(y.iter()).copied().collect())),
            _ => None,
        };
        if self.value.is_some() || other.value.is_some() {
            let (x, y) = (self.clone(), other.clone());
            s.value = Some(Arc::new(move |z| x.eval(z) + y.eval(z)));
        }
        s
    }

    pub fn scaled(&self, c: f64) -> Symbol {
        let a = self.jet.clone();
        let mut s = Symbol::new(
            format!("{c}·({})", self.name),
            Arc::new(move |z| a(z).scale(Complex64::new(c, 0.0))),
            self.sup_norm * c.abs(),
            self.real,
        );
        s.derivatives = self.derivatives;
        s.support = self.support;
        s.compact = self.compact;
        s.constant = self.constant.map(|x| x * c);
        s.poly = self.poly.as_ref().map(|t| normalize_poly(t.iter().map(|&(m, n, a)| (m, n, a * c)).collect()));
        if self.value.is_some() {
            let x = self.clone();
            s.value = Some(Arc::new(move |z| x.eval(z) * c));
        }
        s
    }

    pub fn renamed(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    /// Attach an effective (non-compact) reach.
    pub fn with_reach(mut self, reach: Option<(Complex64, f64)>) -> Self {
        self.support = reach;
        self.compact = false;
        self
    }

    pub fn with_sup_norm(mut self, sup_norm: f64) -> Self {
        self.sup_norm = sup_norm;
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn eval(&self, z: Complex64) -> Complex64 {
        match &self.value {
            Some(v) => v(z),
            None => (self.jet)(z).value,
        }
    }

    pub fn jet(&self, z: Complex64) -> Jet {
        (self.jet)(z)
    }

    /// Jet, failing when derivatives of `order` are not available.
    pub fn jet_of_order(&self, z: Complex64, order: u8) -> Result<Jet> {
        if order > 0 && self.derivatives == Derivatives::None {
            return Err(Error::Capability { symbol: self.name.clone(), order });
        }
        Ok((self.jet)(z))
    }

    pub fn derivatives(&self) -> Derivatives {
        self.derivatives
    }

    pub fn support(&self) -> Option<(Complex64, f64)> {
        self.support
    }

    pub fn sup_norm(&self) -> f64 {
        self.sup_norm
    }

    pub fn is_real(&self) -> bool {
        self.real
    }

    pub fn is_bounded(&self) -> bool {
        self.sup_norm.is_finite()
    }

    /// `true` when the support is exact rather than an effective reach.
    pub fn has_compact_support(&self) -> bool {
        self.compact && self.support.is_some()
    }

    /// `(m, n)` for the exactly solvable monomials `z^m z̄^n`.
    pub fn monomial_exponents(&self) -> Option<(u32, u32)> {
        match self.poly.as_deref() {
            Some([(m, n, c)]) if *c == Complex64::new(1.0, 0.0) => Some((*m, *n)),
            _ => None,
        }
    }

    /// Terms `(m, n, c)` of `Σ c·z^m z̄^n` when the symbol is a polynomial.
    pub fn polynomial_terms(&self) -> Option<&[(u32, u32, Complex64)]> {
        self.poly.as_deref()
    }

    /// `(center, radius, k)` when this is an unmodified power bump.
    pub fn bump_profile(&self) -> Option<(Complex64, f64, u32)> {
        self.bump
    }

    pub fn constant_value(&self) -> Option<Complex64> {
        self.constant
    }

    /// Radius around the origin beyond which the symbol is negligible, if known.
    pub fn effective_radius(&self) -> Option<f64> {
        self.support.map(|(c, r)| c.norm() + r)
    }
}

fn weaker(a: Derivatives, b: Derivatives) -> Derivatives {
    use Derivatives::*;
    match (a, b) {
        (None, _) | (_, None) => None,
        (FiniteDifference, _) | (_, FiniteDifference) => FiniteDifference,
        _ => Analytic,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn assert_jets_close(a: Jet, b: Jet, tol: f64) {
        for (x, y, what) in [
            (a.value, b.value, "value"),
            (a.dz, b.dz, "dz"),
            (a.dzbar, b.dzbar, "dzbar"),
            (a.dzz, b.dzz, "dzz"),
            (a.dzzbar, b.dzzbar, "dzzbar"),
            (a.dzbarzbar, b.dzbarzbar, "dzbarzbar"),
        ] {
            assert!((x - y).norm() < tol * (1.0 + y.norm()), "{what}: {x} vs {y}");
        }
    }

    #[test]
    fn analytic_jets_match_finite_differences() {
        let pts = [c(0.3, -0.2), c(-0.5, 0.4), c(0.05, 0.6)];
        let symbols = [
            Symbol::gaussian(c(0.1, 0.2), 0.7, 1.5),
            Symbol::cubic_bump(c(0.0, 0.1), 1.2),
            Symbol::monomial(2, 1),
            Symbol::monomial(0, 2),
            Symbol::gaussian(c(0.0, 0.0), 0.5, 1.0).product(&Symbol::monomial(2, 0)),
            Symbol::tent(c(0.1, 0.0), 1.5),
        ];
        for s in &symbols {
            let f = s.clone();
            let fd = Symbol::from_fn("fd", move |z| f.eval(z), 1.0, false);
            for &z in &pts {
                assert_jets_close(s.jet(z), fd.jet(z), 1e-6);
            }
        }
    }

    #[test]
    fn bump_vanishes_outside_support() {
        let b = Symbol::cubic_bump(c(0.5, 0.0), 0.4);
        for z in [c(0.0, 0.0), c(1.0, 0.0), c(0.5, 0.41), c(-3.0, 2.0)] {
            assert_eq!(b.eval(z), c(0.0, 0.0));
        }
        assert!((b.eval(c(0.5, 0.0)) - 1.0).norm() < 1e-15);
        let t = Symbol::tent(c(0.0, 0.0), 1.0);
        assert_eq!(t.eval(c(1.5, 0.0)), c(0.0, 0.0));
    }

    #[test]
    fn sup_norm_bounds_samples() {
        let s = Symbol::gaussian(c(0.2, 0.0), 0.5, 2.0).product(&Symbol::cubic_bump(c(0.0, 0.0), 1.0));
        for i in 0..200 {
            let z = Complex64::from_polar(0.005 * i as f64, 0.37 * i as f64);
            assert!(s.eval(z).norm() <= s.sup_norm() + 1e-15);
        }
    }

    #[test]
    fn values_only_symbol_lacks_derivatives() {
        let s = Symbol::values_only("v", |z| z, 1.0, false);
        assert!(matches!(s.jet_of_order(c(0.0, 0.0), 1), Err(Error::Capability { .. })));
        assert!(s.jet_of_order(c(0.0, 0.0), 0).is_ok());
    }

    #[test]
    fn constants_are_tracked_through_algebra() {
        let a = Symbol::constant(c(2.0, 0.0));
        let b = Symbol::constant(c(0.5, 0.0));
        assert_eq!(a.product(&b).constant_value(), Some(c(1.0, 0.0)));
        assert_eq!(a.sum(&b).constant_value(), Some(c(2.5, 0.0)));
        assert_eq!(a.product(&Symbol::monomial(1, 0)).constant_value(), None);
    }
}
