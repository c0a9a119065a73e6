//! The flat model on ℂⁿ: weights `a`, the Gaussian projection kernel `𝒫(Z, Z′)`,
//! its orthonormal basis, the lattice spectrum of the harmonic oscillator and
//! the composition calculus `(F𝒫)∘(G𝒫) = K[F,G]𝒫` on polynomial kernels.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;

use num_complex::Complex64;
use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::numerics::QuadratureRule;

/// `0 < a₁ ≤ a₂ ≤ … ≤ a_n`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModelWeights {
    a: Vec<f64>,
}

impl ModelWeights {
    pub fn new(a: Vec<f64>) -> Result<Self> {
        if a.is_empty() {
            return Err(Error::config("model weights need at least one entry"));
        }
        if a.iter().any(|x| !(*x > 0.0) || !x.is_finite()) {
            return Err(Error::config("model weights must be positive and finite"));
        }
        if a.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::config("model weights must be nondecreasing"));
        }
        Ok(Self { a })
    }

    pub fn uniform(n: usize, a: f64) -> Result<Self> {
        Self::new(vec![a; n])
    }

    pub fn dim(&self) -> usize {
        self.a.len()
    }

    pub fn weights(&self) -> &[f64] {
        &self.a
    }

    /// Smallest nonzero eigenvalue of the model operator.
    pub fn spectral_gap(&self) -> f64 {
        2.0 * self.a[0]
    }

    fn prefactor(&self) -> f64 {
        self.a.iter().map(|a| a / (2.0 * PI)).product()
    }

    fn check(&self, pts: &[&[Complex64]]) -> Result<()> {
        for p in pts {
            if p.len() != self.dim() {
                return Err(Error::config(format!(
                    "point has {} coordinates, model dimension is {}",
                    p.len(),
                    self.dim()
                )));
            }
        }
        Ok(())
    }
}

/// `𝒫(Z, Z′) = ∏ aᵢ/2π · exp(−¼ Σ aᵢ(|zᵢ|² + |z′ᵢ|² − 2 zᵢ z̄′ᵢ))`.
pub fn model_kernel(w: &ModelWeights, z: &[Complex64], zp: &[Complex64]) -> Result<Complex64> {
    w.check(&[z, zp])?;
    Ok(model_kernel_unchecked(w, z, zp))
}

fn model_kernel_unchecked(w: &ModelWeights, z: &[Complex64], zp: &[Complex64]) -> Complex64 {
    let mut exponent = Complex64::new(0.0, 0.0);
    for ((a, zi), zpi) in w.a.iter().zip(z).zip(zp) {
        exponent -= 0.25 * a * (zi.norm_sqr() + zpi.norm_sqr() - 2.0 * zi * zpi.conj());
    }
    w.prefactor() * exponent.exp()
}

fn ln_factorial(k: u32) -> f64 {
    (1..=k).map(|j| f64::from(j).ln()).sum()
}

/// Orthonormal basis element `φ_β` of the model kernel space.
pub fn onb_phi(w: &ModelWeights, beta: &[u32], z: &[Complex64]) -> Result<Complex64> {
    w.check(&[z])?;
    if beta.len() != w.dim() {
        return Err(Error::config("multi-index dimension does not match the model"));
    }
    let mut ln_norm = 0.0;
    let mut value = Complex64::new(1.0, 0.0);
    let mut gauss = 0.0;
    for ((a, b), zi) in w.a.iter().zip(beta).zip(z) {
        ln_norm += f64::from(*b) * a.ln() - (2.0 * PI).ln() - f64::from(*b) * 2f64.ln() - ln_factorial(*b) + a.ln();
        value *= zi.powu(*b);
        gauss -= 0.25 * a * zi.norm_sqr();
    }
    Ok(value * (0.5 * ln_norm + gauss).exp())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectrumEntry {
    pub eigenvalue: f64,
    /// Number of lattice points α with `2 Σ aᵢαᵢ` equal to the eigenvalue.
    pub lattice_count: usize,
    /// Every eigenvalue of the model operator has infinite L²-multiplicity.
    pub infinite_multiplicity: bool,
}

/// Eigenvalues `2 Σ aᵢ αᵢ ≤ cutoff`, ascending, with their lattice counts.
pub fn model_spectrum(w: &ModelWeights, cutoff: f64) -> Result<Vec<SpectrumEntry>> {
    if !(cutoff >= 0.0) || !cutoff.is_finite() {
        return Err(Error::config("spectrum cutoff must be a finite nonnegative number"));
    }
    let mut values = Vec::new();
    let mut alpha = vec![0u32; w.dim()];
    enumerate_lattice(w, cutoff, 0, 0.0, &mut alpha, &mut values);
    values.sort_by(f64::total_cmp);
    let mut out: Vec<SpectrumEntry> = Vec::new();
    for v in values {
        match out.last_mut() {
            Some(last) if (v - last.eigenvalue).abs() <= 1e-12 * v.max(1.0) => last.lattice_count += 1,
            _ => out.push(SpectrumEntry { eigenvalue: v, lattice_count: 1, infinite_multiplicity: true }),
        }
    }
    Ok(out)
}

fn enumerate_lattice(w: &ModelWeights, cutoff: f64, i: usize, acc: f64, alpha: &mut [u32], out: &mut Vec<f64>) {
    if i == alpha.len() {
        out.push(acc);
        return;
    }
    let step = 2.0 * w.a[i];
    let mut k = 0u32;
    loop {
        let v = acc + step * f64::from(k);
        if v > cutoff * (1.0 + 1e-12) {
            break;
        }
        alpha[i] = k;
        enumerate_lattice(w, cutoff, i + 1, v, alpha, out);
        k += 1;
    }
    alpha[i] = 0;
}

/// Exponents of a monomial `z^α z̄^β z′^γ z̄′^δ` in the four alphabets.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct Exponents {
    pub z: Vec<u32>,
    pub zbar: Vec<u32>,
    pub zp: Vec<u32>,
    pub zpbar: Vec<u32>,
}

impl Exponents {
    pub fn zero(n: usize) -> Self {
        Self { z: vec![0; n], zbar: vec![0; n], zp: vec![0; n], zpbar: vec![0; n] }
    }

    pub fn degree(&self) -> u32 {
        self.z.iter().chain(&self.zbar).chain(&self.zp).chain(&self.zpbar).sum()
    }
}

/// Polynomial in `(Z, Z̄, Z′, Z̄′)` multiplying the model kernel.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PolyKernel {
    n: usize,
    terms: BTreeMap<Exponents, Complex64>,
}

impl PolyKernel {
    pub fn zero(n: usize) -> Self {
        Self { n, terms: BTreeMap::new() }
    }

    pub fn constant(n: usize, c: Complex64) -> Self {
        let mut k = Self::zero(n);
        k.add_term(Exponents::zero(n), c);
        k
    }

    pub fn one(n: usize) -> Self {
        Self::constant(n, Complex64::new(1.0, 0.0))
    }

    /// Single monomial with the given per-alphabet exponents.
    pub fn monomial(exps: Exponents, c: Complex64) -> Result<Self> {
        let n = exps.z.len();
        if [&exps.zbar, &exps.zp, &exps.zpbar].iter().any(|v| v.len() != n) {
            return Err(Error::config("exponent vectors must share one dimension"));
        }
        let mut k = Self::zero(n);
        k.add_term(exps, c);
        Ok(k)
    }

    pub fn add_term(&mut self, exps: Exponents, c: Complex64) {
        assert_eq!(exps.z.len(), self.n, "exponent dimension mismatch");
        let entry = self.terms.entry(exps).or_insert(Complex64::new(0.0, 0.0));
        *entry += c;
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Exponents, &Complex64)> {
        self.terms.iter()
    }

    pub fn coefficient(&self, exps: &Exponents) -> Complex64 {
        self.terms.get(exps).copied().unwrap_or_default()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.values().all(|c| *c == Complex64::new(0.0, 0.0))
    }

    /// Maximum total exponent over nonzero coefficients (0 for the zero kernel).
    pub fn degree(&self) -> u32 {
        self.terms.iter().filter(|(_, c)| c.norm() > 0.0).map(|(e, _)| e.degree()).max().unwrap_or(0)
    }

    /// Parities of the degrees of all nonzero monomials.
    pub fn parities(&self) -> Vec<u32> {
        let mut p: Vec<u32> =
            self.terms.iter().filter(|(_, c)| c.norm() > 0.0).map(|(e, _)| e.degree() % 2).collect();
        p.sort_unstable();
        p.dedup();
        p
    }

    pub fn eval(&self, z: &[Complex64], zp: &[Complex64]) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for (e, c) in &self.terms {
            let mut m = *c;
            for i in 0..self.n {
                m *= z[i].powu(e.z[i])
                    * z[i].conj().powu(e.zbar[i])
                    * zp[i].powu(e.zp[i])
                    * zp[i].conj().powu(e.zpbar[i]);
            }
            acc += m;
        }
        acc
    }

    /// Largest coefficient difference against another kernel.
    pub fn max_coefficient_distance(&self, other: &PolyKernel) -> f64 {
        let mut worst: f64 = 0.0;
        for (e, c) in &self.terms {
            worst = worst.max((c - other.coefficient(e)).norm());
        }
        for (e, c) in &other.terms {
            if !self.terms.contains_key(e) {
                worst = worst.max(c.norm());
            }
        }
        worst
    }
}

impl fmt::Display for PolyKernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (e, c) in &self.terms {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            write!(f, "({:.6}{:+.6}i)·z{:?}z̄{:?}z'{:?}z̄'{:?}", c.re, c.im, e.z, e.zbar, e.zp, e.zpbar)?;
        }
        if first {
            write!(f, "0")?;
        }
        Ok(())
    }
}

fn binomial(n: u32, k: u32) -> f64 {
    (0..k).fold(1.0, |acc, j| acc * f64::from(n - j) / f64::from(j + 1))
}

/// One coordinate of the Gaussian moment reduction:
/// `∫ w^m w̄^n 𝒫(z,w)𝒫(w,z′) dw / 𝒫(z,z′) = Σ_j C(m,j)C(n,j) j! (2/a)^j z^{m−j} z̄′^{n−j}`.
///
/// Returned as `(coefficient, power of z, power of z̄′)`.
fn moment_terms(a: f64, m: u32, n: u32) -> Vec<(f64, u32, u32)> {
    (0..=m.min(n))
        .map(|j| {
            let c = binomial(m, j) * binomial(n, j) * (1..=j).map(f64::from).product::<f64>() * (2.0 / a).powi(j as i32);
            (c, m - j, n - j)
        })
        .collect()
}

/// `K[F, G]` with `((F𝒫)∘(G𝒫))(Z, Z′) = K[F,G](Z, Z′) 𝒫(Z, Z′)`.
///
/// `F` is read as a kernel in `(Z, W)` and `G` in `(W, Z′)`; the `W` integral is
/// reduced monomial by monomial through [`moment_terms`].
pub fn kernel_compose(w: &ModelWeights, f: &PolyKernel, g: &PolyKernel) -> Result<PolyKernel> {
    let n = w.dim();
    if f.dim() != n || g.dim() != n {
        return Err(Error::config(format!(
            "kernel dimensions ({}, {}) do not match the model dimension {n}",
            f.dim(),
            g.dim()
        )));
    }
    let mut out = PolyKernel::zero(n);
    for (ef, cf) in &f.terms {
        for (eg, cg) in &g.terms {
            let coeff = cf * cg;
            if coeff == Complex64::new(0.0, 0.0) {
                continue;
            }
            // Cartesian product of the per-coordinate expansions.
            let mut partial: Vec<(f64, Vec<u32>, Vec<u32>)> = vec![(1.0, Vec::new(), Vec::new())];
            for i in 0..n {
                let m = ef.zp[i] + eg.z[i];
                let k = ef.zpbar[i] + eg.zbar[i];
                let terms = moment_terms(w.a[i], m, k);
                let mut next = Vec::with_capacity(partial.len() * terms.len());
                for (c0, zs, zbs) in &partial {
                    for &(c1, pz, pzb) in &terms {
                        let mut zs = zs.clone();
                        let mut zbs = zbs.clone();
                        zs.push(ef.z[i] + pz);
                        zbs.push(eg.zpbar[i] + pzb);
                        next.push((c0 * c1, zs, zbs));
                    }
                }
                partial = next;
            }
            for (c, zs, zpbars) in partial {
                let exps = Exponents { z: zs, zbar: ef.zbar.clone(), zp: eg.zp.clone(), zpbar: zpbars };
                out.add_term(exps, coeff * c);
            }
        }
    }
    Ok(out)
}

/// `pⁿ (F𝒫)(√p Z, √p Z′)`: the kernel of `F𝒫` at level `p`.
pub fn rescaled_kernel(
    w: &ModelWeights,
    f: &PolyKernel,
    p: u32,
    z: &[Complex64],
    zp: &[Complex64],
) -> Result<Complex64> {
    if p == 0 {
        return Err(Error::config("level p must be at least 1"));
    }
    w.check(&[z, zp])?;
    if f.dim() != w.dim() {
        return Err(Error::config("kernel dimension does not match the model"));
    }
    let s = f64::from(p).sqrt();
    let zs: Vec<_> = z.iter().map(|v| v * s).collect();
    let zps: Vec<_> = zp.iter().map(|v| v * s).collect();
    Ok(f64::from(p).powi(w.dim() as i32) * f.eval(&zs, &zps) * model_kernel_unchecked(w, &zs, &zps))
}

/// `((F𝒫)∘(G𝒫))(z, z′)` in one dimension by direct polar quadrature of the
/// middle variable, centred between the two points.
pub fn compose_by_quadrature(w: &ModelWeights, f: &PolyKernel, g: &PolyKernel, z: Complex64, zp: Complex64) -> Result<Complex64> {
    if w.dim() != 1 || f.dim() != 1 || g.dim() != 1 {
        return Err(Error::config("quadrature composition is implemented for one dimension"));
    }
    let reach = 9.0 / w.a[0].sqrt();
    let rule = QuadratureRule::squared_panels(&[0.0, reach / 3.0, 2.0 * reach / 3.0, reach], 48, 96)?.recentered(0.5 * (z + zp));
    Ok(rule.integrate(|x| {
        f.eval(&[z], &[x]) * model_kernel_unchecked(w, &[z], &[x]) * g.eval(&[x], &[zp]) * model_kernel_unchecked(w, &[x], &[zp])
    }))
}

/// Random one-dimensional kernel with all terms of total degree ≤ `max_deg`
/// and coefficients uniform in the unit square.
pub fn random_poly_kernel<R: Rng>(rng: &mut R, max_deg: u32) -> PolyKernel {
    let mut k = PolyKernel::zero(1);
    for a in 0..=max_deg {
        for b in 0..=max_deg - a {
            for cc in 0..=max_deg - a - b {
                for d in 0..=max_deg - a - b - cc {
                    let e = Exponents { z: vec![a], zbar: vec![b], zp: vec![cc], zpbar: vec![d] };
                    k.add_term(e, Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
                }
            }
        }
    }
    k
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

    fn w1() -> ModelWeights {
        ModelWeights::uniform(1, 1.0).unwrap()
    }

    fn rand_point(rng: &mut ChaCha8Rng, r: f64) -> Complex64 {
        c(rng.random_range(-r..r), rng.random_range(-r..r))
    }

    #[test]
    fn kernel_values() {
        let w = w1();
        let origin = [c(0.0, 0.0)];
        assert!((model_kernel(&w, &origin, &origin).unwrap() - 1.0 / (2.0 * PI)).norm() < 1e-15);
        let z = [c(0.7, -1.3)];
        assert!((model_kernel(&w, &z, &z).unwrap().norm() - 1.0 / (2.0 * PI)).abs() < 1e-15);
        let two = [c(2.0, 0.0)];
        let v = model_kernel(&w, &origin, &two).unwrap().norm();
        assert!((v - (-1.0f64).exp() / (2.0 * PI)).abs() < 1e-15);
        assert!(model_kernel(&w, &origin, &[c(0.0, 0.0), c(0.0, 0.0)]).is_err());
    }

    #[test]
    fn kernel_hermitian_and_modulus() {
        let w = ModelWeights::new(vec![0.5, 2.0]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..10 {
            let z = [rand_point(&mut rng, 1.0), rand_point(&mut rng, 1.0)];
            let zp = [rand_point(&mut rng, 1.0), rand_point(&mut rng, 1.0)];
            let k = model_kernel(&w, &z, &zp).unwrap();
            let kt = model_kernel(&w, &zp, &z).unwrap();
            assert!((k - kt.conj()).norm() < 1e-15);
            let d2: f64 = w.a.iter().zip(&z).zip(&zp).map(|((a, x), y)| a * (x - y).norm_sqr()).sum();
            assert!((k.norm() - w.prefactor() * (-0.25 * d2).exp()).abs() < 1e-15);
        }
    }

    #[test]
    fn onb_values_and_norms() {
        let w = w1();
        let v = onb_phi(&w, &[0], &[c(0.0, 0.0)]).unwrap();
        assert!((v.re - (1.0 / (2.0 * PI)).sqrt()).abs() < 1e-15);

        let rule = radial_angular_rule(120, 32, 12.0).unwrap();
        let inner = rule.integrate(|z| onb_phi(&w, &[0], &[z]).unwrap() * onb_phi(&w, &[1], &[z]).unwrap().conj());
        assert!(inner.norm() < 1e-12);
        for b in 0..=8 {
            let norm = rule.integrate_real(|z| onb_phi(&w, &[b], &[z]).unwrap().norm_sqr());
            assert!((norm - 1.0).abs() < 1e-10, "β={b}: {norm}");
        }
    }

    #[test]
    fn reproducing_property_by_quadrature() {
        let w = w1();
        let rule = radial_angular_rule(120, 48, 14.0).unwrap();
        let zs = [c(0.3, -0.2), c(-0.8, 0.5)];
        for b in 0..=4 {
            for z in zs {
                let lhs = rule.integrate(|x| model_kernel(&w, &[z], &[x]).unwrap() * onb_phi(&w, &[b], &[x]).unwrap());
                let rhs = onb_phi(&w, &[b], &[z]).unwrap();
                assert!((lhs - rhs).norm() < 1e-8, "β={b}");
            }
        }
    }

    #[test]
    fn spectrum_examples() {
        let s = model_spectrum(&w1(), 5.0).unwrap();
        let got: Vec<_> = s.iter().map(|e| (e.eigenvalue, e.lattice_count)).collect();
        assert_eq!(got, vec![(0.0, 1), (2.0, 1), (4.0, 1)]);
        assert!(s.iter().all(|e| e.infinite_multiplicity));

        let s = model_spectrum(&ModelWeights::new(vec![1.0, 2.0]).unwrap(), 4.5).unwrap();
        let got: Vec<_> = s.iter().map(|e| (e.eigenvalue, e.lattice_count)).collect();
        assert_eq!(got, vec![(0.0, 1), (2.0, 1), (4.0, 2)]);

        for a in [vec![0.3], vec![0.7, 1.1], vec![1.5, 1.5, 4.0]] {
            let w = ModelWeights::new(a).unwrap();
            let s = model_spectrum(&w, 20.0).unwrap();
            assert!((s[1].eigenvalue - w.spectral_gap()).abs() < 1e-14);
        }
        assert!(model_spectrum(&w1(), -1.0).is_err());
    }

    #[test]
    fn weights_are_validated() {
        assert!(ModelWeights::new(vec![2.0, 1.0]).is_err());
        assert!(ModelWeights::new(vec![0.0]).is_err());
        assert!(ModelWeights::new(vec![]).is_err());
    }

    #[test]
    fn composition_trivial_cases() {
        let w = w1();
        let one = PolyKernel::one(1);
        let k = kernel_compose(&w, &one, &one).unwrap();
        assert!(k.max_coefficient_distance(&one) < 1e-15);

        let z_first = PolyKernel::monomial(
            Exponents { z: vec![1], zbar: vec![0], zp: vec![0], zpbar: vec![0] },
            c(1.0, 0.0),
        )
        .unwrap();
        let k = kernel_compose(&w, &z_first, &one).unwrap();
        assert!(k.max_coefficient_distance(&z_first) < 1e-15);
        assert!(kernel_compose(&w, &PolyKernel::one(2), &one).is_err());
    }

    #[test]
    fn composition_matches_quadrature_for_wbar() {
        let w = w1();
        let g = PolyKernel::monomial(
            Exponents { z: vec![0], zbar: vec![1], zp: vec![0], zpbar: vec![0] },
            c(1.0, 0.0),
        )
        .unwrap();
        let k = kernel_compose(&w, &PolyKernel::one(1), &g).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..10 {
            let z = rand_point(&mut rng, 1.0);
            let zp = rand_point(&mut rng, 1.0);
            let lhs = compose_by_quadrature(&w, &PolyKernel::one(1), &g, z, zp).unwrap();
            let rhs = k.eval(&[z], &[zp]) * model_kernel(&w, &[z], &[zp]).unwrap();
            assert!((lhs - rhs).norm() < 1e-8, "{lhs} vs {rhs}");
        }
    }

    #[test]
    fn composition_matches_quadrature_for_random_kernels() {
        let w = ModelWeights::uniform(1, 1.3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let f = random_poly_kernel(&mut rng, 2);
        let g = random_poly_kernel(&mut rng, 2);
        let k = kernel_compose(&w, &f, &g).unwrap();
        for _ in 0..10 {
            let z = rand_point(&mut rng, 1.0);
            let zp = rand_point(&mut rng, 1.0);
            let lhs = compose_by_quadrature(&w, &f, &g, z, zp).unwrap();
            let rhs = k.eval(&[z], &[zp]) * model_kernel(&w, &[z], &[zp]).unwrap();
            assert!((lhs - rhs).norm() < 1e-8, "{lhs} vs {rhs}");
        }
    }

    #[test]
    fn composition_in_two_dimensions_factorizes() {
        let w = ModelWeights::new(vec![1.0, 2.0]).unwrap();
        let f = PolyKernel::monomial(
            Exponents { z: vec![0, 0], zbar: vec![0, 0], zp: vec![1, 0], zpbar: vec![0, 1] },
            c(1.0, 0.0),
        )
        .unwrap();
        let g = PolyKernel::monomial(
            Exponents { z: vec![0, 1], zbar: vec![1, 0], zp: vec![0, 0], zpbar: vec![0, 0] },
            c(1.0, 0.0),
        )
        .unwrap();
        // Coordinate 1: ∫ w₁ w̄₁ → z₁ z̄′₁ + 2/a₁; coordinate 2: ∫ w₂ w̄₂ → z₂ z̄′₂ + 2/a₂.
        let k = kernel_compose(&w, &f, &g).unwrap();
        let z = [c(0.3, 0.1), c(-0.2, 0.4)];
        let zp = [c(0.5, -0.3), c(0.1, 0.2)];
        let want = (z[0] * zp[0].conj() + 2.0) * (z[1] * zp[1].conj() + 1.0);
        assert!((k.eval(&z, &zp) - want).norm() < 1e-14);
    }

    #[test]
    fn rescaled_kernel_examples() {
        let w = w1();
        let one = PolyKernel::one(1);
        let origin = [c(0.0, 0.0)];
        for p in [1u32, 3, 10] {
            let v = rescaled_kernel(&w, &one, p, &origin, &origin).unwrap();
            assert!((v - f64::from(p) / (2.0 * PI)).norm() < 1e-14);
        }
        let z = [c(0.4, 0.2)];
        let zp = [c(-0.1, 0.3)];
        let v = rescaled_kernel(&w, &one, 1, &z, &zp).unwrap();
        assert!((v - model_kernel(&w, &z, &zp).unwrap()).norm() < 1e-15);
    }

    #[test]
    fn rescaled_composition_identity() {
        // ((F𝒫)_p ∘ (G𝒫)_p)(Z,Z′) by quadrature vs pⁿ K[F,G]𝒫 at (√pZ, √pZ′).
        let w = w1();
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for p in [2u32, 4] {
            let f = random_poly_kernel(&mut rng, 2);
            let g = random_poly_kernel(&mut rng, 2);
            let k = kernel_compose(&w, &f, &g).unwrap();
            let scale = 1.0 / f64::from(p).sqrt();
            let z = rand_point(&mut rng, 0.5);
            let zp = rand_point(&mut rng, 0.5);
            let rule = QuadratureRule::squared_panels(&[0.0, 3.0 * scale, 6.0 * scale, 9.0 * scale], 48, 96)
                .unwrap()
                .recentered(0.5 * (z + zp));
            let lhs = rule.integrate(|x| {
                rescaled_kernel(&w, &f, p, &[z], &[x]).unwrap() * rescaled_kernel(&w, &g, p, &[x], &[zp]).unwrap()
            });
            let rhs = rescaled_kernel(&w, &k, p, &[z], &[zp]).unwrap();
            assert!((lhs - rhs).norm() < 1e-9 * rhs.norm().max(1.0), "p={p}: {lhs} vs {rhs}");
        }
    }

    proptest::proptest! {
        #![proptest_config(proptest::prelude::ProptestConfig::with_cases(24))]
        #[test]
        fn composition_is_associative_and_respects_parity(seed in 0u64..10_000) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let w = ModelWeights::uniform(1, rng.random_range(0.5..2.0)).unwrap();
            let f = random_poly_kernel(&mut rng, 2);
            let g = random_poly_kernel(&mut rng, 2);
            let h = random_poly_kernel(&mut rng, 2);
            let left = kernel_compose(&w, &kernel_compose(&w, &f, &g).unwrap(), &h).unwrap();
            let right = kernel_compose(&w, &f, &kernel_compose(&w, &g, &h).unwrap()).unwrap();
            proptest::prop_assert!(left.max_coefficient_distance(&right) < 1e-10);

            // Homogeneous pieces: each monomial pair lands in the parity of deg F + deg G.
            for (ef, cf) in f.terms() {
                for (eg, cg) in g.terms() {
                    let mf = PolyKernel::monomial(ef.clone(), *cf).unwrap();
                    let mg = PolyKernel::monomial(eg.clone(), *cg).unwrap();
                    let k = kernel_compose(&w, &mf, &mg).unwrap();
                    if !k.is_zero() {
                        proptest::prop_assert_eq!(k.parities(), vec![(ef.degree() + eg.degree()) % 2]);
                        proptest::prop_assert_eq!(k.degree() % 2, (ef.degree() + eg.degree()) % 2);
                    }
                }
            }
        }
    }
}
