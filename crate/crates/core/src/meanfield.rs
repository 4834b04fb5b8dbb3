//! Mean-field equation `ρ = Z⁻¹ exp(−βγψ_ρ)`, its free energy and the
//! negative-temperature instability threshold of the uniform state.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::prior::IntensityPrior;
use crate::spectral::{SpectralTable, TorusPoint, LAMBDA_1};

/// Density `ρ(γ, x)` w.r.t. `ν⊗ℓ` on prior atoms × an `n × n` grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityGrid {
    pub gamma_atoms: Vec<(f64, f64)>,
    pub n: usize,
    /// `values[a·n² + i·n + j] = ρ(γ_a, (i/n, j/n))`.
    pub values: Vec<f64>,
}

impl DensityGrid {
    pub fn uniform(prior: &IntensityPrior, n: usize) -> Self {
        let atoms = prior.quadrature();
        let len = atoms.len() * n * n;
        Self {
            gamma_atoms: atoms,
            n,
            values: vec![1.0; len],
        }
    }

    pub fn from_fn(prior: &IntensityPrior, n: usize, f: impl Fn(f64, &TorusPoint) -> f64) -> Self {
        let atoms = prior.quadrature();
        let mut values = Vec::with_capacity(atoms.len() * n * n);
        for (g, _) in &atoms {
            for i in 0..n {
                for j in 0..n {
                    values.push(f(*g, &grid_point(n, i, j)));
                }
            }
        }
        Self {
            gamma_atoms: atoms,
            n,
            values,
        }
    }

    fn cells(&self) -> usize {
        self.n * self.n
    }

    pub fn atom_values(&self, a: usize) -> &[f64] {
        let c = self.cells();
        &self.values[a * c..(a + 1) * c]
    }

    /// `∫ρ d(ν⊗ℓ)` by atom × grid quadrature.
    pub fn total_mass(&self) -> f64 {
        let c = self.cells() as f64;
        self.gamma_atoms
            .iter()
            .enumerate()
            .map(|(a, (_, w))| w * self.atom_values(a).iter().sum::<f64>() / c)
            .sum()
    }

    pub fn normalized(mut self) -> Self {
        let mass = self.total_mass();
        self.values.iter_mut().for_each(|v| *v /= mass);
        self
    }

    /// `θ̄(y) = Σ_a w_a γ_a ρ(γ_a, y)`.
    pub fn gamma_average(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.cells()];
        for (a, (g, w)) in self.gamma_atoms.iter().enumerate() {
            for (o, v) in out.iter_mut().zip(self.atom_values(a)) {
                *o += g * w * v;
            }
        }
        out
    }
}

fn grid_point(n: usize, i: usize, j: usize) -> TorusPoint {
    TorusPoint::new(i as f64 / n as f64, j as f64 / n as f64)
}

/// Table basis functions sampled on the grid.
struct GridBasis {
    k: usize,
    values: Vec<f64>,
}

impl GridBasis {
    fn new(table: &SpectralTable, n: usize) -> Result<Self> {
        if n <= 2 * table.kmax() as usize {
            return Err(Error::Aliasing {
                grid: n,
                kmax: table.kmax(),
            });
        }
        let k = table.len();
        let mut values = vec![0.0; n * n * k];
        for i in 0..n {
            for j in 0..n {
                let c = i * n + j;
                table.basis_into(&grid_point(n, i, j), &mut values[c * k..(c + 1) * k]);
            }
        }
        Ok(Self { k, values })
    }

    fn analyze(&self, f: &[f64]) -> Vec<f64> {
        let mut coeffs = vec![0.0; self.k];
        for (c, fv) in f.iter().enumerate() {
            for (co, e) in coeffs.iter_mut().zip(&self.values[c * self.k..(c + 1) * self.k]) {
                *co += fv * e;
            }
        }
        let cells = f.len() as f64;
        coeffs.iter_mut().for_each(|c| *c /= cells);
        coeffs
    }

    fn synthesize(&self, coeffs: &[f64], cells: usize) -> Vec<f64> {
        (0..cells)
            .map(|c| {
                self.values[c * self.k..(c + 1) * self.k]
                    .iter()
                    .zip(coeffs)
                    .map(|(e, a)| e * a)
                    .sum()
            })
            .collect()
    }
}

/// `ψ_ρ(x) = ∫ γ G_{m,ε}(x,y) ρ(γ,y) dν dℓ` on the grid of `rho`.
pub fn averaged_stream(rho: &DensityGrid, table: &SpectralTable) -> Result<Vec<f64>> {
    let basis = GridBasis::new(table, rho.n)?;
    Ok(stream_with(&basis, rho, table))
}

fn stream_with(basis: &GridBasis, rho: &DensityGrid, table: &SpectralTable) -> Vec<f64> {
    let mut coeffs = basis.analyze(&rho.gamma_average());
    for (c, g) in coeffs.iter_mut().zip(table.g()) {
        *c *= g;
    }
    basis.synthesize(&coeffs, rho.cells())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MfeResult {
    pub rho: DensityGrid,
    pub residual: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// The fixed-point map `ρ ↦ Z⁻¹ exp(−βγψ_ρ)`.
fn mean_field_map(basis: &GridBasis, rho: &DensityGrid, beta: f64, table: &SpectralTable) -> DensityGrid {
    let psi = stream_with(basis, rho, table);
    let mut out = rho.clone();
    let cells = rho.cells();
    for (a, (g, _)) in rho.gamma_atoms.iter().enumerate() {
        for (o, p) in out.values[a * cells..(a + 1) * cells].iter_mut().zip(&psi) {
            *o = (-beta * g * p).exp();
        }
    }
    out.normalized()
}

/// Damped fixed-point iteration of the mean-field equation. Returns the
/// best iterate seen when `max_iter` is exhausted.
pub fn mfe_iterate(
    beta: f64,
    table: &SpectralTable,
    prior: &IntensityPrior,
    rho0: &DensityGrid,
    damping: f64,
    tol: f64,
    max_iter: usize,
) -> Result<MfeResult> {
    if !(damping > 0.0 && damping <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "damping must lie in (0, 1], got {damping}"
        )));
    }
    if rho0.gamma_atoms != prior.quadrature() {
        return Err(Error::InvalidParameter(
            "density atoms do not match the prior quadrature".into(),
        ));
    }
    if let Some(v) = rho0.values.iter().find(|v| **v < 0.0) {
        return Err(Error::NegativeDensity(*v));
    }
    let basis = GridBasis::new(table, rho0.n)?;
    let mut rho = rho0.clone();
    let mut best: Option<(f64, DensityGrid)> = None;
    for iter in 0..=max_iter {
        let image = mean_field_map(&basis, &rho, beta, table);
        let residual = image
            .values
            .iter()
            .zip(&rho.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        if residual < tol {
            return Ok(MfeResult {
                rho,
                residual,
                iterations: iter,
                converged: true,
            });
        }
        if best.as_ref().is_none_or(|(r, _)| residual < *r) {
            best = Some((residual, rho.clone()));
        }
        if iter == max_iter {
            break;
        }
        for (r, t) in rho.values.iter_mut().zip(&image.values) {
            *r = (1.0 - damping) * *r + damping * t;
        }
    }
    let (residual, rho) = best.expect("at least one iteration");
    Ok(MfeResult {
        rho,
        residual,
        iterations: max_iter,
        converged: false,
    })
}

/// `∫ρ log ρ dν dℓ + ½β Σ_k g_k θ̄_k²`.
pub fn free_energy(rho: &DensityGrid, beta: f64, table: &SpectralTable, prior: &IntensityPrior) -> Result<f64> {
    if let Some(v) = rho.values.iter().find(|v| **v < 0.0) {
        return Err(Error::NegativeDensity(*v));
    }
    if rho.gamma_atoms != prior.quadrature() {
        return Err(Error::InvalidParameter(
            "density atoms do not match the prior quadrature".into(),
        ));
    }
    let basis = GridBasis::new(table, rho.n)?;
    let cells = rho.cells() as f64;
    let entropy: f64 = rho
        .gamma_atoms
        .iter()
        .enumerate()
        .map(|(a, (_, w))| {
            w * rho
                .atom_values(a)
                .iter()
                .map(|v| if *v > 0.0 { v * v.ln() } else { 0.0 })
                .sum::<f64>()
                / cells
        })
        .sum();
    let theta = basis.analyze(&rho.gamma_average());
    let interaction: f64 = theta.iter().zip(table.g()).map(|(c, g)| g * c * c).sum();
    Ok(entropy + 0.5 * beta * interaction)
}

/// `β₀ = −λ₁^{m/2} e^{ελ₁} / ν(γ²)`.
pub fn beta_zero(m: f64, epsilon: f64, prior: &IntensityPrior) -> f64 {
    -LAMBDA_1.powf(m / 2.0) * (epsilon * LAMBDA_1).exp() / prior.gamma_inf()
}

/// `1 + β λ₁^{−m/2} e^{−ελ₁} ν(γ²)`: twice the t² coefficient of the free
/// energy along `ρ_t = 1 + tγe₁`.
pub fn second_variation_coefficient(beta: f64, epsilon: f64, m: f64, prior: &IntensityPrior) -> f64 {
    1.0 + beta * LAMBDA_1.powf(-m / 2.0) * (-epsilon * LAMBDA_1).exp() * prior.gamma_inf()
}
