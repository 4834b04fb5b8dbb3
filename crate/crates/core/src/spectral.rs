//! Zero-mean eigenbasis of −Δ on the unit torus and the (regularized)
//! fractional Green function built from it.
//!
//! The torus is `[0,1)²`, eigenvalues are `λ = 4π²|k|²` and the real basis is
//! `√2 cos(2πk·x)`, `√2 sin(2πk·x)` over the half lattice, which is
//! orthonormal for the Lebesgue measure.

use std::f64::consts::{PI, SQRT_2};

use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use crate::error::{Error, Result};

pub const TWO_PI: f64 = 2.0 * PI;
/// First nonzero eigenvalue of −Δ on the unit torus.
pub const LAMBDA_1: f64 = 4.0 * PI * PI;

/// A point of the unit torus, always reduced to `[0,1)²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TorusPoint {
    pub x1: f64,
    pub x2: f64,
}

fn wrap_unit(x: f64) -> f64 {
    let r = x.rem_euclid(1.0);
    // rem_euclid can round up to exactly 1.0 for tiny negative inputs
    if r >= 1.0 {
        0.0
    } else {
        r
    }
}

fn wrap_centered(x: f64) -> f64 {
    let r = wrap_unit(x);
    if r >= 0.5 {
        r - 1.0
    } else {
        r
    }
}

impl TorusPoint {
    pub fn new(x1: f64, x2: f64) -> Self {
        Self {
            x1: wrap_unit(x1),
            x2: wrap_unit(x2),
        }
    }

    pub const fn origin() -> Self {
        Self { x1: 0.0, x2: 0.0 }
    }

    /// Wrapped difference `self − other`.
    pub fn sub(&self, other: &TorusPoint) -> TorusPoint {
        TorusPoint::new(self.x1 - other.x1, self.x2 - other.x2)
    }

    pub fn translate(&self, v: [f64; 2]) -> TorusPoint {
        TorusPoint::new(self.x1 + v[0], self.x2 + v[1])
    }

    pub fn neg(&self) -> TorusPoint {
        TorusPoint::new(-self.x1, -self.x2)
    }

    /// Representative of the point in `[-½,½)²`.
    pub fn centered(&self) -> [f64; 2] {
        [wrap_centered(self.x1), wrap_centered(self.x2)]
    }

    /// Geodesic distance on the flat torus.
    pub fn distance(&self, other: &TorusPoint) -> f64 {
        let [d1, d2] = self.sub(other).centered();
        d1.hypot(d2)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Parity {
    Cos,
    Sin,
}

/// One real eigenfunction of −Δ.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Mode {
    pub k1: i32,
    pub k2: i32,
    pub parity: Parity,
    pub lambda: f64,
}

pub fn in_half_lattice(k1: i32, k2: i32) -> bool {
    k1 > 0 || (k1 == 0 && k2 > 0)
}

pub fn eigenvalue(k1: i32, k2: i32) -> f64 {
    LAMBDA_1 * f64::from(k1 * k1 + k2 * k2)
}

impl Mode {
    pub fn new(k1: i32, k2: i32, parity: Parity) -> Result<Self> {
        if !in_half_lattice(k1, k2) {
            return Err(Error::InvalidParameter(format!(
                "wavevector ({k1},{k2}) is not in the half lattice"
            )));
        }
        Ok(Self {
            k1,
            k2,
            parity,
            lambda: eigenvalue(k1, k2),
        })
    }

    pub fn norm_sq(&self) -> i32 {
        self.k1 * self.k1 + self.k2 * self.k2
    }

    pub fn phase(&self, x: &TorusPoint) -> f64 {
        TWO_PI * (f64::from(self.k1) * x.x1 + f64::from(self.k2) * x.x2)
    }

    pub fn eval(&self, x: &TorusPoint) -> f64 {
        let p = self.phase(x);
        match self.parity {
            Parity::Cos => SQRT_2 * p.cos(),
            Parity::Sin => SQRT_2 * p.sin(),
        }
    }

    /// Gradient of the basis function.
    pub fn grad(&self, x: &TorusPoint) -> [f64; 2] {
        let p = self.phase(x);
        let d = match self.parity {
            Parity::Cos => -SQRT_2 * TWO_PI * p.sin(),
            Parity::Sin => SQRT_2 * TWO_PI * p.cos(),
        };
        [d * f64::from(self.k1), d * f64::from(self.k2)]
    }

    fn sort_key(&self) -> (i32, i32, i32, Parity) {
        (self.norm_sq(), self.k1, self.k2, self.parity)
    }
}

/// Every half-lattice mode with `λ ≤ max_lambda`, both parities, in
/// `(lambda, k1, k2, parity)` order.
pub fn enumerate_modes(max_lambda: f64) -> Result<Vec<Mode>> {
    if !(max_lambda >= LAMBDA_1 * (1.0 - 1e-12)) {
        return Err(Error::EmptyBasis(max_lambda));
    }
    // integer radius, with slack for max_lambda computed as 4π²·R²
    let r2 = (max_lambda / LAMBDA_1 * (1.0 + 1e-12)).floor() as i64;
    let r = (r2 as f64).sqrt().floor() as i32 + 1;
    let mut modes = Vec::new();
    for k1 in 0..=r {
        for k2 in -r..=r {
            if !in_half_lattice(k1, k2) || i64::from(k1 * k1 + k2 * k2) > r2 {
                continue;
            }
            for parity in [Parity::Cos, Parity::Sin] {
                modes.push(Mode {
                    k1,
                    k2,
                    parity,
                    lambda: eigenvalue(k1, k2),
                });
            }
        }
    }
    modes.sort_by_key(|m| m.sort_key());
    Ok(modes)
}

/// Upper bound on `Σ_{|n|²>R²} λ_n^{-m/2} e^{-ελ_n}` over the full lattice,
/// obtained by comparing each lattice point with the unit cell around it.
pub fn lattice_tail_bound(m: f64, epsilon: f64, radius: f64) -> f64 {
    let half_diag = SQRT_2 / 2.0;
    let s0 = radius - SQRT_2;
    if s0 <= 0.0 || epsilon <= 0.0 {
        return f64::INFINITY;
    }
    let a = LAMBDA_1 * epsilon;
    let prefactor = (TWO_PI * s0).powf(-m);
    let gauss = (-a * s0 * s0).exp() / (2.0 * a);
    let linear = half_diag * PI.sqrt() / (2.0 * a.sqrt()) * erfc(a.sqrt() * s0);
    TWO_PI * prefactor * (gauss + linear)
}

/// Truncated spectral data of `G_{m,ε}`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralTable {
    m: f64,
    epsilon: f64,
    max_lambda: f64,
    modes: Vec<Mode>,
    g: Vec<f64>,
    tail_bound: f64,
    kmax: i32,
}

impl SpectralTable {
    /// Picks the truncation so that the analytic tail bound is below `tail_tol`.
    pub fn build(m: f64, epsilon: f64, tail_tol: f64) -> Result<Self> {
        check_order(m)?;
        if epsilon == 0.0 {
            return Err(Error::UnregularizedDiagonal);
        }
        if !(epsilon > 0.0) || !epsilon.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "epsilon must be positive, got {epsilon}"
            )));
        }
        if !(tail_tol > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "tail_tol must be positive, got {tail_tol}"
            )));
        }
        let mut radius: f64 = 2.0;
        loop {
            let bound = lattice_tail_bound(m, epsilon, radius);
            if bound < tail_tol {
                let max_lambda = LAMBDA_1 * radius * radius;
                let mut table = Self::assemble(m, epsilon, max_lambda)?;
                table.tail_bound = bound;
                return Ok(table);
            }
            if radius > 4096.0 {
                return Err(Error::InvalidParameter(format!(
                    "tail tolerance {tail_tol} unreachable for epsilon {epsilon}"
                )));
            }
            radius += 0.5;
        }
    }

    /// Explicit truncation. This is the only way to get `epsilon = 0`.
    pub fn with_max_lambda(m: f64, epsilon: f64, max_lambda: f64) -> Result<Self> {
        check_order(m)?;
        if !(epsilon >= 0.0) {
            return Err(Error::InvalidParameter(format!("epsilon must be >= 0, got {epsilon}")));
        }
        let mut table = Self::assemble(m, epsilon, max_lambda)?;
        table.tail_bound = if epsilon > 0.0 {
            lattice_tail_bound(m, epsilon, (max_lambda / LAMBDA_1).sqrt())
        } else {
            f64::INFINITY
        };
        Ok(table)
    }

    fn assemble(m: f64, epsilon: f64, max_lambda: f64) -> Result<Self> {
        let modes = enumerate_modes(max_lambda)?;
        let g = modes
            .iter()
            .map(|md| md.lambda.powf(-m / 2.0) * (-epsilon * md.lambda).exp())
            .collect();
        let kmax = modes.iter().map(|md| md.k1.abs().max(md.k2.abs())).max().unwrap_or(0);
        Ok(Self {
            m,
            epsilon,
            max_lambda,
            modes,
            g,
            tail_bound: f64::INFINITY,
            kmax,
        })
    }

    pub fn m(&self) -> f64 {
        self.m
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn max_lambda(&self) -> f64 {
        self.max_lambda
    }

    pub fn modes(&self) -> &[Mode] {
        &self.modes
    }

    pub fn g(&self) -> &[f64] {
        &self.g
    }

    pub fn tail_bound(&self) -> f64 {
        self.tail_bound
    }

    /// Largest `|k_i|` present in the table.
    pub fn kmax(&self) -> i32 {
        self.kmax
    }

    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    /// `G_{m,ε}(x, y)`.
    pub fn green(&self, x: &TorusPoint, y: &TorusPoint) -> f64 {
        self.green_at(&x.sub(y))
    }

    /// `G_{m,ε}(d, 0)`. Cosine and sine modes of one wavevector pair up into
    /// `2 g_k cos(2πk·d)`.
    pub fn green_at(&self, d: &TorusPoint) -> f64 {
        self.pairs().map(|(md, g)| 2.0 * g * md.phase(d).cos()).sum()
    }

    /// `G_{m,ε}(0,0) = Σ_k g_k`.
    pub fn green_diag(&self) -> f64 {
        self.g.iter().sum()
    }

    /// `∇G_{m,ε}(d, 0)`.
    pub fn grad_green(&self, d: &TorusPoint) -> [f64; 2] {
        let mut out = [0.0; 2];
        for (md, g) in self.pairs() {
            let s = -2.0 * g * TWO_PI * md.phase(d).sin();
            out[0] += s * f64::from(md.k1);
            out[1] += s * f64::from(md.k2);
        }
        out
    }

    /// `∇⊥G_{m,ε}(d, 0) = (−∂₂G, ∂₁G)`.
    pub fn grad_perp_green(&self, d: &TorusPoint) -> [f64; 2] {
        let [g1, g2] = self.grad_green(d);
        [-g2, g1]
    }

    /// Writes `e_k(x)` for every mode of the table into `out`.
    pub fn basis_into(&self, x: &TorusPoint, out: &mut [f64]) {
        debug_assert_eq!(out.len(), self.modes.len());
        let trig = AxisTrig::new(self.kmax, x);
        for (i, pair) in self.modes.chunks_exact(2).enumerate() {
            let (c, s) = trig.cos_sin(pair[0].k1, pair[0].k2);
            out[2 * i] = SQRT_2 * c;
            out[2 * i + 1] = SQRT_2 * s;
        }
    }

    pub fn basis(&self, x: &TorusPoint) -> Vec<f64> {
        let mut out = vec![0.0; self.modes.len()];
        self.basis_into(x, &mut out);
        out
    }

    /// One representative (the cosine mode) per wavevector with its weight.
    fn pairs(&self) -> impl Iterator<Item = (&Mode, f64)> {
        self.modes
            .chunks_exact(2)
            .zip(self.g.chunks_exact(2))
            .map(|(m, g)| (&m[0], g[0]))
    }
}

fn check_order(m: f64) -> Result<()> {
    if !(m > 0.0 && m <= 2.0) {
        return Err(Error::InvalidParameter(format!("m must lie in (0, 2], got {m}")));
    }
    Ok(())
}

/// `cos`/`sin` of `2πj·x_i` for `0 ≤ j ≤ kmax`, combined by angle addition.
struct AxisTrig {
    c1: Vec<f64>,
    s1: Vec<f64>,
    c2: Vec<f64>,
    s2: Vec<f64>,
}

impl AxisTrig {
    fn new(kmax: i32, x: &TorusPoint) -> Self {
        let n = kmax.max(0) as usize + 1;
        let (mut c1, mut s1, mut c2, mut s2) = (
            Vec::with_capacity(n),
            Vec::with_capacity(n),
            Vec::with_capacity(n),
            Vec::with_capacity(n),
        );
        for j in 0..n {
            let (s, c) = (TWO_PI * j as f64 * x.x1).sin_cos();
            c1.push(c);
            s1.push(s);
            let (s, c) = (TWO_PI * j as f64 * x.x2).sin_cos();
            c2.push(c);
            s2.push(s);
        }
        Self { c1, s1, c2, s2 }
    }

    fn cos_sin(&self, k1: i32, k2: i32) -> (f64, f64) {
        let (a_c, a_s) = (self.c1[k1 as usize], self.s1[k1 as usize]);
        let j = k2.unsigned_abs() as usize;
        let (b_c, b_s) = if k2 >= 0 {
            (self.c2[j], self.s2[j])
        } else {
            (self.c2[j], -self.s2[j])
        };
        (a_c * b_c - a_s * b_s, a_s * b_c + a_c * b_s)
    }
}
