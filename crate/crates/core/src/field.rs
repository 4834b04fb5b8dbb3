//! Gaussian random field `U_{β,ε}` with covariance `β G_{m,ε}`, sampled by
//! independent modal coefficients, and numerical checks of the Gaussian
//! representation of the Gibbs density.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::dynamics::{hamiltonian, VortexConfiguration};
use crate::error::{Error, Result};
use crate::spectral::{SpectralTable, TorusPoint};
use crate::testfn::TestFunction;

/// One realization `U(x) = Σ_k c_k e_k(x)` with `c_k ~ N(0, β g_k)`.
#[derive(Debug, Clone)]
pub struct FieldSample<'a> {
    table: &'a SpectralTable,
    beta: f64,
    coeffs: Vec<f64>,
}

impl<'a> FieldSample<'a> {
    /// Field with prescribed coefficients (one per table mode).
    pub fn from_coeffs(table: &'a SpectralTable, beta: f64, coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.len() != table.len() {
            return Err(Error::InvalidParameter(format!(
                "{} coefficients for {} modes",
                coeffs.len(),
                table.len()
            )));
        }
        Ok(Self { table, beta, coeffs })
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn table(&self) -> &SpectralTable {
        self.table
    }
}

fn check_field_params(table: &SpectralTable, beta: f64) -> Result<()> {
    if !(beta > 0.0) {
        return Err(Error::NonPositiveTemperature(beta));
    }
    if !(table.epsilon() > 0.0) {
        return Err(Error::InvalidParameter("field sampling requires epsilon > 0".into()));
    }
    Ok(())
}

pub fn sample_field<'a, R: Rng + ?Sized>(table: &'a SpectralTable, beta: f64, rng: &mut R) -> Result<FieldSample<'a>> {
    check_field_params(table, beta)?;
    let coeffs = table
        .g()
        .iter()
        .map(|g| (beta * g).sqrt() * rng.sample::<f64, _>(StandardNormal))
        .collect();
    Ok(FieldSample { table, beta, coeffs })
}

pub fn eval_field(sample: &FieldSample<'_>, x: &TorusPoint) -> f64 {
    sample
        .table
        .basis(x)
        .iter()
        .zip(&sample.coeffs)
        .map(|(e, c)| e * c)
        .sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianRepCheck {
    pub lhs: f64,
    pub rhs_mean: f64,
    pub rhs_stderr: f64,
    /// Monte Carlo mean of the imaginary part; zero in expectation.
    pub imag_mean: f64,
    pub nsamples: usize,
}

pub const MIN_REP_SAMPLES: usize = 100;

/// Compares `exp(−(β/N) H_N^ε)` with the Monte Carlo estimate of
/// `E[exp((i/√N) Σ γ_j U(x_j))] · exp(β G(0,0) Σ γ_j² / 2N)`.
pub fn verify_gaussian_rep<R: Rng + ?Sized>(
    config: &VortexConfiguration,
    beta: f64,
    table: &SpectralTable,
    nsamples: usize,
    rng: &mut R,
) -> Result<GaussianRepCheck> {
    check_field_params(table, beta)?;
    if nsamples < MIN_REP_SAMPLES {
        return Err(Error::InsufficientSamples {
            got: nsamples,
            need: MIN_REP_SAMPLES,
        });
    }
    let n = config.len() as f64;
    let lhs = (-beta / n * hamiltonian(config, table)).exp();
    let sum_g2: f64 = config.gammas().iter().map(|g| g * g).sum();
    let correction = (beta * table.green_diag() * sum_g2 / (2.0 * n)).exp();

    // γ-weighted basis at the vortex positions, so that the phase is a single dot product
    let k = table.len();
    let mut weighted = vec![0.0; k];
    for (g, x) in config.gammas().iter().zip(config.positions()) {
        for (w, e) in weighted.iter_mut().zip(table.basis(x)) {
            *w += g * e / n.sqrt();
        }
    }
    let sd: Vec<f64> = table.g().iter().map(|g| (beta * g).sqrt()).collect();

    let (mut s, mut s2, mut si) = (0.0, 0.0, 0.0);
    for _ in 0..nsamples {
        let mut phase = 0.0;
        for (w, sdk) in weighted.iter().zip(&sd) {
            phase += w * sdk * rng.sample::<f64, _>(StandardNormal);
        }
        let (sin, cos) = phase.sin_cos();
        let r = cos * correction;
        s += r;
        s2 += r * r;
        si += sin * correction;
    }
    let nf = nsamples as f64;
    let mean = s / nf;
    let var = ((s2 - nf * mean * mean) / (nf - 1.0)).max(0.0);
    Ok(GaussianRepCheck {
        lhs,
        rhs_mean: mean,
        rhs_stderr: (var / nf).sqrt(),
        imag_mean: si / nf,
        nsamples,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CharBound {
    /// `|∫e^{if} dℓ − e^{−½‖f‖²}|`
    pub lhs: f64,
    /// `‖f‖³_{L³}`
    pub rhs: f64,
}

/// Tensor-grid evaluation of both sides of the characteristic-function bound
/// for a zero-mean spatial test function.
pub fn check_char_bound(f: &TestFunction, grid: usize) -> Result<CharBound> {
    if !f.is_spatial_only() {
        return Err(Error::GammaDependent);
    }
    let mean = f.gamma_poly.constant_term();
    if mean.abs() > 1e-12 {
        return Err(Error::NonzeroMean(mean));
    }
    if grid == 0 {
        return Err(Error::InvalidParameter("grid must be positive".into()));
    }
    let h = 1.0 / grid as f64;
    let mut values = Vec::with_capacity(grid * grid);
    for i in 0..grid {
        for j in 0..grid {
            values.push(f.eval(0.0, &TorusPoint::new(i as f64 * h, j as f64 * h)));
        }
    }
    let npts = values.len() as f64;
    let grid_mean = values.iter().sum::<f64>() / npts;
    // accumulate cos v − 1 = −2 sin²(v/2) so the small difference survives summation
    let (mut re_m1, mut im, mut l2, mut l3) = (0.0, 0.0, 0.0, 0.0);
    for v in values.iter().map(|v| v - grid_mean) {
        let h = (0.5 * v).sin();
        re_m1 -= 2.0 * h * h;
        im += v.sin();
        l2 += v * v;
        l3 += v.abs().powi(3);
    }
    re_m1 /= npts;
    im /= npts;
    l2 /= npts;
    l3 /= npts;
    Ok(CharBound {
        lhs: (re_m1 - (-0.5 * l2).exp_m1()).hypot(im),
        rhs: l3,
    })
}
