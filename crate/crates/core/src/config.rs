//! Run configuration: JSON schema, defaults and validation.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Geometry, Symbol};
use crate::numerics::Tolerances;
use crate::quantum_space::{SpaceOptions, Truncation};

/// Every check the runner knows, in report order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CheckId {
    Space,
    Bergman,
    Expansion,
    Decay,
    NearDiagonal,
    Toeplitz,
    Product,
    Commutator,
    Norm,
    Star,
    Associativity,
    Berezin,
    Coherent,
    Szego,
    Moments,
    Suite,
}

impl CheckId {
    pub const ALL: [CheckId; 16] = [
        CheckId::Space,
        CheckId::Bergman,
        CheckId::Expansion,
        CheckId::Decay,
        CheckId::NearDiagonal,
        CheckId::Toeplitz,
        CheckId::Product,
        CheckId::Commutator,
        CheckId::Norm,
        CheckId::Star,
        CheckId::Associativity,
        CheckId::Berezin,
        CheckId::Coherent,
        CheckId::Szego,
        CheckId::Moments,
        CheckId::Suite,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            CheckId::Space => "space",
            CheckId::Bergman => "bergman",
            CheckId::Expansion => "expansion",
            CheckId::Decay => "decay",
            CheckId::NearDiagonal => "near-diagonal",
            CheckId::Toeplitz => "toeplitz",
            CheckId::Product => "product",
            CheckId::Commutator => "commutator",
            CheckId::Norm => "norm",
            CheckId::Star => "star",
            CheckId::Associativity => "associativity",
            CheckId::Berezin => "berezin",
            CheckId::Coherent => "coherent",
            CheckId::Szego => "szego",
            CheckId::Moments => "moments",
            CheckId::Suite => "suite",
        }
    }

    /// Symbols the check reads from the config.
    pub fn required_symbols(self) -> &'static [&'static str] {
        match self {
            CheckId::Toeplitz | CheckId::Norm | CheckId::Berezin | CheckId::Coherent | CheckId::Szego | CheckId::Moments => &["f"],
            CheckId::Product | CheckId::Commutator | CheckId::Star => &["f", "g"],
            CheckId::Associativity => &["f", "g", "h"],
            _ => &[],
        }
    }

    /// What the check measures and which law it tests.
    pub fn describe(self) -> &'static str {
        match self {
            CheckId::Space => {
                "space: builds the level-p space of holomorphic sections by quadrature (Gram matrix, orthonormal basis, \
                 truncation stability gate) and compares monomial norms with their Gamma-function closed forms where they exist."
            }
            CheckId::Bergman => {
                "bergman: evaluates the Bergman kernel P_p(x,y) = sum_i s_i(x) s_i(y)* from the orthonormal basis and compares it \
                 with the closed-form kernels of the three model geometries (Gaussian kernel on the plane with weight pa)."
            }
            CheckId::Expansion => {
                "expansion: diagonal Bergman kernel expansion p^-1 P_p(x,x) = b0 + b1/p + O(p^-2); fits b0, b1 and checks \
                 b0 = 1, the 1/p decay of the remainder and b1 = r/(8 pi) with r the scalar curvature."
            }
            CheckId::Decay => {
                "decay: off-diagonal decay of the Bergman and Toeplitz kernels, |K_p(x,y)| <= C p exp(-c sqrt(p) d(x,y)); \
                 fits the rate c and, on the plane, compares the log-kernel with the exact Gaussian exponent."
            }
            CheckId::NearDiagonal => {
                "near-diagonal: rescaled kernel p^-1 P_p(Z/sqrt(p), Z'/sqrt(p)) against the model Bargmann kernel at the chart \
                 origin; the residual must shrink like 1/p."
            }
            CheckId::Toeplitz => {
                "toeplitz: assembles T_{f,p} = P_p f P_p; Hermitian for real f, contraction bound ||T_f|| <= sup|f|, trace identity \
                 Tr T_f = integral of f P_p(x,x), and the exact plane algebra T_zbar T_z = T_{zbar z}, T_z T_zbar = T_{z zbar} - 2/(pa)."
            }
            CheckId::Product => {
                "product: product expansion T_f T_g = T_{fg} + p^-1 T_{C1(f,g)} + O(p^-2) with the first bidifferential \
                 coefficient C1; p*e0 and p^2*e1 must stay within a factor 2."
            }
            CheckId::Commutator => {
                "commutator: semiclassical commutator law (p/i)[T_f, T_g] = T_{{f,g}} + O(1/p) with the Poisson bracket; \
                 the defect must halve per doubling of p."
            }
            CheckId::Norm => {
                "norm: operator norm law sup|f| - C/sqrt(p) <= ||T_{f,p}|| <= sup|f|; the gap times sqrt(p) stays bounded."
            }
            CheckId::Star => {
                "star: star-product coefficients g0, g1, g2 read from Berezin symbols of T_f T_g by extrapolation in 1/p, \
                 compared with fg, C1 and C2; antisymmetry C1(f,g) - C1(g,f) = i{f,g}."
            }
            CheckId::Associativity => {
                "associativity: order-k associativity identities of the coefficient formulas, sum C_r(f, C_s(g,h)) = \
                 sum C_r(C_s(f,g), h) over r + s = k for k = 0, 1, 2."
            }
            CheckId::Berezin => {
                "berezin: Berezin transform B_p f = T_{f,p}(x,x)/P_p(x,x); unital, positivity preserving, and \
                 p(B_p f - f) -> -Delta f/(4 pi)."
            }
            CheckId::Coherent => {
                "coherent: coherent states s_x with ||s_x||^2 = P_p(x,x) and the coherent-state quantization \
                 integral of f(x) s_x s_x* dv(x) reproducing T_{f,p}."
            }
            CheckId::Szego => {
                "szego: counting-function law N_p(lambda)/p -> area of {f > lambda} for the positive spectrum of T_{f,p}, \
                 pointwise and in cumulative-distribution form."
            }
            CheckId::Moments => {
                "moments: spectral moments p^-1 Tr[T_{f,p}^m] -> integral of f^m; trace of powers against the eigenvalue sum."
            }
            CheckId::Suite => "suite: the full acceptance battery (thirteen criteria on fixed geometries and symbols).",
        }
    }
}

impl fmt::Display for CheckId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for CheckId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        CheckId::ALL
            .iter()
            .copied()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| Error::config(format!("unknown check id '{s}'")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometrySpec {
    /// `bargmann`, `fubini_study` or `poincare_disc`.
    pub name: String,
    /// `a` (bargmann), `s` (poincare_disc), `potential_shift` (all).
    #[serde(default)]
    pub params: BTreeMap<String, f64>,
}

impl GeometrySpec {
    pub fn build(&self) -> Result<Geometry> {
        let allowed: &[&str] = match self.name.as_str() {
            "bargmann" => &["a", "potential_shift"],
            "fubini_study" => &["potential_shift"],
            "poincare_disc" => &["s", "potential_shift"],
            other => {
                return Err(Error::config(format!(
                    "geometry.name: unknown geometry '{other}' (expected bargmann, fubini_study or poincare_disc)"
                )))
            }
        };
        if let Some(k) = self.params.keys().find(|k| !allowed.contains(&k.as_str())) {
            return Err(Error::config(format!("geometry.params.{k}: not a parameter of {}", self.name)));
        }
        let get = |k: &str, default: f64| self.params.get(k).copied().unwrap_or(default);
        let geom = match self.name.as_str() {
            "bargmann" => Geometry::bargmann(get("a", 1.0))?,
            "fubini_study" => Geometry::fubini_study(),
            _ => Geometry::poincare_disc(get("s", 2.0))?,
        };
        Ok(match self.params.get("potential_shift") {
            Some(c) => geom.with_potential_shift(*c),
            None => geom,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolyTerm {
    pub m: u32,
    pub n: u32,
    #[serde(default)]
    pub re: f64,
    #[serde(default)]
    pub im: f64,
}

/// Symbol constructors. Centers are `[re, im]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SymbolSpec {
    Gaussian {
        center: [f64; 2],
        width: f64,
        #[serde(default = "one")]
        amplitude: f64,
    },
    /// `(1 − |z − c|²/R²)^power`, default power 3.
    Bump {
        center: [f64; 2],
        radius: f64,
        #[serde(default = "three")]
        power: u32,
    },
    SmoothBump {
        center: [f64; 2],
        radius: f64,
    },
    Tent {
        center: [f64; 2],
        radius: f64,
    },
    Constant {
        value: f64,
    },
    Polynomial {
        terms: Vec<PolyTerm>,
    },
    /// `Re z` or `Im z` times a bump.
    Coordinate {
        axis: Axis,
        center: [f64; 2],
        radius: f64,
        #[serde(default = "three")]
        power: u32,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Axis {
    Re,
    Im,
}

fn one() -> f64 {
    1.0
}

fn three() -> u32 {
    3
}

fn point(v: [f64; 2]) -> Complex64 {
    Complex64::new(v[0], v[1])
}

impl SymbolSpec {
    pub fn build(&self, name: &str) -> Result<Symbol> {
        let positive = |v: f64, field: &str| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::config(format!("symbols.{name}.{field}: must be positive and finite (got {v})")))
            }
        };
        Ok(match *self {
            SymbolSpec::Gaussian { center, width, amplitude } => {
                positive(width, "width")?;
                Symbol::gaussian(point(center), width, amplitude)
            }
            SymbolSpec::Bump { center, radius, power } => {
                positive(radius, "radius")?;
                if power == 0 {
                    return Err(Error::config(format!("symbols.{name}.power: must be at least 1")));
                }
                if power == 3 {
                    Symbol::cubic_bump(point(center), radius)
                } else {
                    Symbol::power_bump(point(center), radius, power)
                }
            }
            SymbolSpec::SmoothBump { center, radius } => {
                positive(radius, "radius")?;
                Symbol::smooth_bump(point(center), radius)
            }
            SymbolSpec::Tent { center, radius } => {
                positive(radius, "radius")?;
                Symbol::tent(point(center), radius)
            }
            SymbolSpec::Constant { value } => Symbol::constant(Complex64::new(value, 0.0)),
            SymbolSpec::Polynomial { ref terms } => {
                let t: Vec<_> = terms.iter().map(|t| (t.m, t.n, Complex64::new(t.re, t.im))).collect();
                Symbol::polynomial(&t)
            }
            SymbolSpec::Coordinate { axis, center, radius, power } => {
                positive(radius, "radius")?;
                let coord = match axis {
                    Axis::Re => Symbol::re_z(),
                    Axis::Im => Symbol::im_z(),
                };
                coord.product(&Symbol::power_bump(point(center), radius, power))
            }
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TruncationSpec {
    /// Fixed number of raw monomials; `null` selects the automatic rule.
    pub fixed: Option<usize>,
    pub max_modes: usize,
    /// Radius the space must resolve; `null` derives it from probes and symbols.
    pub effective_radius: Option<f64>,
    pub force_generic: bool,
}

impl Default for TruncationSpec {
    fn default() -> Self {
        Self { fixed: None, max_modes: 2048, effective_radius: None, force_generic: false }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QuadratureSpec {
    pub refinement: f64,
    pub angular_nodes: Option<usize>,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self { refinement: 1.0, angular_nodes: None }
    }
}

/// Per-check knobs with documented defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CheckParams {
    /// Random point pairs for `bergman`.
    pub kernel_pairs: usize,
    /// Target points for `decay`; `null` places three along a ray from the first probe.
    pub decay_targets: Option<Vec<[f64; 2]>>,
    /// Scaled grid `[Z, Z′]` pairs for `near-diagonal`.
    pub near_grid: Vec<[[f64; 2]; 2]>,
    /// Levels `λ/‖f‖∞` for `szego`.
    pub lambdas: Vec<f64>,
    /// Powers for `moments`.
    pub moments: Vec<u32>,
    /// Random points for `coherent`.
    pub coherent_points: usize,
    /// Highest star coefficient for `star`.
    pub r_max: usize,
}

impl Default for CheckParams {
    fn default() -> Self {
        Self {
            kernel_pairs: 25,
            decay_targets: None,
            near_grid: vec![[[0.0, 0.0], [0.0, 0.0]], [[0.5, 0.2], [-0.3, 0.4]], [[1.0, 0.0], [0.0, 1.0]]],
            lambdas: vec![0.25, 0.5, 0.75],
            moments: vec![1, 2, 3, 4],
            coherent_points: 20,
            r_max: 2,
        }
    }
}

fn default_p_list() -> Vec<u32> {
    vec![16, 32, 64, 128]
}

fn default_checks() -> Vec<CheckId> {
    vec![CheckId::Space, CheckId::Bergman]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub geometry: GeometrySpec,
    #[serde(default = "default_p_list")]
    pub p_list: Vec<u32>,
    #[serde(default)]
    pub truncation: TruncationSpec,
    #[serde(default)]
    pub quadrature: QuadratureSpec,
    /// Named symbols; checks read `f`, `g` and `h`.
    #[serde(default)]
    pub symbols: BTreeMap<String, SymbolSpec>,
    /// Probe points `[re, im]`; empty draws them from `seed`.
    #[serde(default)]
    pub probes: Vec<[f64; 2]>,
    #[serde(default = "default_checks")]
    pub checks: Vec<CheckId>,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub params: CheckParams,
    /// Report directory; `--out` overrides.
    #[serde(default)]
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub seed: u64,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: RunConfig = serde_json::from_str(text).map_err(|e| Error::config(format!("config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// Checks that do not need the numerics: names, levels, symbol presence.
    pub fn validate(&self) -> Result<()> {
        let geom = self.geometry.build()?;
        if self.p_list.is_empty() || self.p_list.contains(&0) {
            return Err(Error::config("p_list: must be non-empty with levels ≥ 1"));
        }
        if !(self.quadrature.refinement >= 1.0) {
            return Err(Error::config("quadrature.refinement: must be at least 1"));
        }
        for (name, spec) in &self.symbols {
            spec.build(name)?;
        }
        for (i, p) in self.probes.iter().enumerate() {
            if !geom.contains(point(*p)) {
                return Err(Error::config(format!("probes[{i}]: point {p:?} lies outside the chart of {}", geom.name())));
            }
        }
        for check in &self.checks {
            for s in check.required_symbols() {
                if !self.symbols.contains_key(*s) {
                    return Err(Error::config(format!("symbols.{s}: required by check '{check}'")));
                }
            }
        }
        Ok(())
    }

    pub fn geometry(&self) -> Result<Geometry> {
        self.geometry.build()
    }

    pub fn symbol(&self, name: &str) -> Result<Symbol> {
        self.symbols
            .get(name)
            .ok_or_else(|| Error::config(format!("symbols.{name}: not defined")))?
            .build(name)
    }

    /// Space options shared by all checks (radius is widened per check).
    pub fn space_options(&self) -> SpaceOptions {
        SpaceOptions {
            truncation: self.truncation.fixed.map_or(Truncation::Auto, Truncation::Fixed),
            effective_radius: self.truncation.effective_radius.unwrap_or(0.0),
            radial_breaks: Vec::new(),
            probes: Vec::new(),
            refinement: self.quadrature.refinement,
            angular_nodes: self.quadrature.angular_nodes,
            force_generic: self.truncation.force_generic,
            max_modes: self.truncation.max_modes,
            tol: self.tolerances,
        }
    }
}
