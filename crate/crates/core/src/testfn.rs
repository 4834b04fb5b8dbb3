//! Band-limited test functions `ψ(γ, x) = p₀(γ) + Σ_t p_t(γ) e_t(x)` and
//! their pairings with empirical measures of a vortex configuration.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::dynamics::VortexConfiguration;
use crate::error::{Error, Result};
use crate::prior::IntensityPrior;
use crate::spectral::{in_half_lattice, Mode, Parity, TorusPoint};

pub const MAX_DEGREE: usize = 8;

/// Polynomial in γ, coefficients in ascending order.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Poly(pub Vec<f64>);

impl Poly {
    pub fn constant(c: f64) -> Self {
        Poly(vec![c])
    }

    /// `c·γ`.
    pub fn linear(c: f64) -> Self {
        Poly(vec![0.0, c])
    }

    pub fn degree(&self) -> usize {
        self.0.iter().rposition(|c| *c != 0.0).unwrap_or(0)
    }

    pub fn is_constant(&self) -> bool {
        self.degree() == 0
    }

    pub fn constant_term(&self) -> f64 {
        self.0.first().copied().unwrap_or(0.0)
    }

    pub fn eval(&self, gamma: f64) -> f64 {
        self.0.iter().rev().fold(0.0, |acc, c| acc * gamma + c)
    }

    pub fn mul(&self, other: &Poly) -> Poly {
        if self.0.is_empty() || other.0.is_empty() {
            return Poly::default();
        }
        let mut out = vec![0.0; self.0.len() + other.0.len() - 1];
        for (i, a) in self.0.iter().enumerate() {
            for (j, b) in other.0.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Poly(out)
    }

    pub fn add(&self, other: &Poly) -> Poly {
        let n = self.0.len().max(other.0.len());
        Poly(
            (0..n)
                .map(|i| self.0.get(i).unwrap_or(&0.0) + other.0.get(i).unwrap_or(&0.0))
                .collect(),
        )
    }

    pub fn scale(&self, s: f64) -> Poly {
        Poly(self.0.iter().map(|c| c * s).collect())
    }

    /// `γ·p(γ)`.
    pub fn times_gamma(&self) -> Poly {
        let mut v = Vec::with_capacity(self.0.len() + 1);
        v.push(0.0);
        v.extend_from_slice(&self.0);
        Poly(v)
    }
}

/// Exact `∫ p dν` from the closed-form moments of the prior.
pub fn prior_moments(prior: &IntensityPrior, poly: &Poly) -> f64 {
    poly.0
        .iter()
        .enumerate()
        .filter(|(_, c)| **c != 0.0)
        .map(|(n, c)| c * prior.moment(n))
        .sum()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModalTerm {
    pub k1: i32,
    pub k2: i32,
    pub parity: Parity,
    pub poly: Poly,
}

impl ModalTerm {
    pub fn mode(&self) -> Mode {
        Mode::new(self.k1, self.k2, self.parity).expect("validated term")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestFunction {
    /// The x-average `ℓ(ψ)(γ)`.
    pub gamma_poly: Poly,
    #[serde(default)]
    pub terms: Vec<ModalTerm>,
}

/// Key identifying a basis function, ordered like the spectral table.
pub type ModeKey = (i32, i32, i32, Parity);

fn mode_key(k1: i32, k2: i32, parity: Parity) -> ModeKey {
    (k1 * k1 + k2 * k2, k1, k2, parity)
}

impl TestFunction {
    pub fn new(gamma_poly: Poly, terms: Vec<ModalTerm>) -> Result<Self> {
        let psi = Self { gamma_poly, terms };
        psi.validate()?;
        Ok(psi)
    }

    pub fn constant(c: f64) -> Self {
        Self {
            gamma_poly: Poly::constant(c),
            terms: Vec::new(),
        }
    }

    /// `poly(γ)·e_(k1,k2,parity)(x)`.
    pub fn single_mode(k1: i32, k2: i32, parity: Parity, poly: Poly) -> Result<Self> {
        Self::new(Poly::default(), vec![ModalTerm { k1, k2, parity, poly }])
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let psi: Self = serde_json::from_str(s)?;
        psi.validate()?;
        Ok(psi)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("plain data")
    }

    pub fn validate(&self) -> Result<()> {
        if self.gamma_poly.degree() > MAX_DEGREE {
            return Err(Error::InvalidParameter("gamma_poly degree exceeds 8".into()));
        }
        for t in &self.terms {
            if !in_half_lattice(t.k1, t.k2) {
                return Err(Error::InvalidParameter(format!(
                    "term wavevector ({},{}) is not in the half lattice",
                    t.k1, t.k2
                )));
            }
            if t.poly.degree() > MAX_DEGREE {
                return Err(Error::InvalidParameter("term degree exceeds 8".into()));
            }
        }
        Ok(())
    }

    /// True when no coefficient depends on γ.
    pub fn is_spatial_only(&self) -> bool {
        self.gamma_poly.is_constant() && self.terms.iter().all(|t| t.poly.is_constant())
    }

    pub fn eval(&self, gamma: f64, x: &TorusPoint) -> f64 {
        self.gamma_poly.eval(gamma)
            + self
                .terms
                .iter()
                .map(|t| t.poly.eval(gamma) * t.mode().eval(x))
                .sum::<f64>()
    }

    /// Spatial fluctuation `φ = ψ − ℓ(ψ)` at `(γ, x)`.
    pub fn eval_fluctuation(&self, gamma: f64, x: &TorusPoint) -> f64 {
        self.eval(gamma, x) - self.gamma_poly.eval(gamma)
    }

    /// Coefficient polynomials `φ_k(γ)` per basis function, duplicates merged,
    /// in table order.
    pub fn modal_coefficients(&self) -> BTreeMap<ModeKey, Poly> {
        let mut out: BTreeMap<ModeKey, Poly> = BTreeMap::new();
        for t in &self.terms {
            let e = out.entry(mode_key(t.k1, t.k2, t.parity)).or_default();
            *e = e.add(&t.poly);
        }
        out
    }

    /// `ν⊗ℓ(ψ)`.
    pub fn mean(&self, prior: &IntensityPrior) -> f64 {
        prior_moments(prior, &self.gamma_poly)
    }

    pub fn scale(&self, s: f64) -> Self {
        Self {
            gamma_poly: self.gamma_poly.scale(s),
            terms: self
                .terms
                .iter()
                .map(|t| ModalTerm {
                    poly: t.poly.scale(s),
                    ..t.clone()
                })
                .collect(),
        }
    }
}

/// `⟨ψ, η_N⟩ = (1/N) Σ_j ψ(γ_j, X_j)`.
pub fn pair_empirical(psi: &TestFunction, config: &VortexConfiguration) -> f64 {
    let n = config.len() as f64;
    config
        .gammas()
        .iter()
        .zip(config.positions())
        .map(|(g, x)| psi.eval(*g, x))
        .sum::<f64>()
        / n
}

/// `⟨ψ, ζ_N⟩ = √N (⟨ψ, η_N⟩ − ν⊗ℓ(ψ))`.
pub fn pair_fluctuation(psi: &TestFunction, config: &VortexConfiguration, prior: &IntensityPrior) -> f64 {
    let n = config.len() as f64;
    n.sqrt() * (pair_empirical(psi, config) - psi.mean(prior))
}

/// `⟨ψ, θ_N⟩ = (1/N) Σ_j γ_j ψ(X_j)` for a γ-independent `ψ`.
pub fn pair_pseudo_vorticity(psi_x: &TestFunction, config: &VortexConfiguration) -> Result<f64> {
    if !psi_x.is_spatial_only() {
        return Err(Error::GammaDependent);
    }
    let n = config.len() as f64;
    Ok(config
        .gammas()
        .iter()
        .zip(config.positions())
        .map(|(g, x)| g * psi_x.eval(0.0, x))
        .sum::<f64>()
        / n)
}
