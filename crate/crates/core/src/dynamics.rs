//! Point-vortex dynamics for the regularized kernel.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::{SpectralTable, TorusPoint};

/// Intensities and positions of `N` vortices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VortexConfiguration {
    gammas: Vec<f64>,
    positions: Vec<TorusPoint>,
}

impl VortexConfiguration {
    pub fn new(gammas: Vec<f64>, positions: Vec<TorusPoint>) -> Result<Self> {
        if gammas.len() != positions.len() {
            return Err(Error::InvalidParameter(format!(
                "{} intensities for {} positions",
                gammas.len(),
                positions.len()
            )));
        }
        if gammas.is_empty() {
            return Err(Error::InvalidParameter("empty configuration".into()));
        }
        let positions = positions.into_iter().map(|p| TorusPoint::new(p.x1, p.x2)).collect();
        Ok(Self { gammas, positions })
    }

    pub fn len(&self) -> usize {
        self.gammas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gammas.is_empty()
    }

    pub fn gammas(&self) -> &[f64] {
        &self.gammas
    }

    pub fn positions(&self) -> &[TorusPoint] {
        &self.positions
    }

    pub fn set_position(&mut self, j: usize, x: TorusPoint) {
        self.positions[j] = x;
    }

    pub fn set_gamma(&mut self, j: usize, gamma: f64) {
        self.gammas[j] = gamma;
    }

    /// `Γ_N = (1/N) Σ γ_j²`.
    pub fn gamma_n(&self) -> f64 {
        self.gammas.iter().map(|g| g * g).sum::<f64>() / self.len() as f64
    }

    /// Same configuration with all intensities negated; runs the flow backwards.
    pub fn reversed(&self) -> Self {
        Self {
            gammas: self.gammas.iter().map(|g| -g).collect(),
            positions: self.positions.clone(),
        }
    }
}

/// `H = ½ Σ_{j≠k} γ_j γ_k G_{m,ε}(X_j, X_k)`.
pub fn hamiltonian(config: &VortexConfiguration, table: &SpectralTable) -> f64 {
    let (g, x) = (config.gammas(), config.positions());
    let mut h = 0.0;
    for j in 0..g.len() {
        for k in (j + 1)..g.len() {
            h += g[j] * g[k] * table.green(&x[j], &x[k]);
        }
    }
    h
}

/// `Ẋ_j = Σ_{k≠j} γ_k ∇⊥G_{m,ε}(X_j − X_k)`.
pub fn vortex_rhs(config: &VortexConfiguration, table: &SpectralTable) -> Vec<[f64; 2]> {
    velocities(config.gammas(), config.positions(), table)
}

fn velocities(gammas: &[f64], x: &[TorusPoint], table: &SpectralTable) -> Vec<[f64; 2]> {
    let n = gammas.len();
    let mut v = vec![[0.0; 2]; n];
    for j in 0..n {
        for k in (j + 1)..n {
            let w = table.grad_perp_green(&x[j].sub(&x[k]));
            // ∇⊥G is odd in the separation
            v[j][0] += gammas[k] * w[0];
            v[j][1] += gammas[k] * w[1];
            v[k][0] -= gammas[j] * w[0];
            v[k][1] -= gammas[j] * w[1];
        }
    }
    v
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryDiagnostics {
    pub initial_energy: f64,
    pub final_energy: f64,
    pub max_rel_energy_drift: f64,
    pub steps: usize,
    pub dt: f64,
}

/// Classical RK4 with wraparound; `observer` sees the state after every step.
pub fn integrate_with<F>(
    config: &VortexConfiguration,
    table: &SpectralTable,
    dt: f64,
    steps: usize,
    mut observer: F,
) -> Result<(VortexConfiguration, TrajectoryDiagnostics)>
where
    F: FnMut(usize, &VortexConfiguration),
{
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::InvalidParameter(format!("dt must be positive, got {dt}")));
    }
    if !(table.epsilon() > 0.0) {
        return Err(Error::InvalidParameter("dynamics requires epsilon > 0".into()));
    }
    let gammas = config.gammas();
    let n = config.len();
    let mut state = config.clone();
    let h0 = hamiltonian(&state, table);
    let scale = h0.abs().max(1.0);
    let mut max_drift: f64 = 0.0;
    let mut h = h0;

    let shifted = |base: &[TorusPoint], k: &[[f64; 2]], s: f64| -> Vec<TorusPoint> {
        base.iter()
            .zip(k)
            .map(|(p, v)| p.translate([s * v[0], s * v[1]]))
            .collect()
    };

    for step in 1..=steps {
        let x0 = state.positions().to_vec();
        let k1 = velocities(gammas, &x0, table);
        let k2 = velocities(gammas, &shifted(&x0, &k1, 0.5 * dt), table);
        let k3 = velocities(gammas, &shifted(&x0, &k2, 0.5 * dt), table);
        let k4 = velocities(gammas, &shifted(&x0, &k3, dt), table);
        for j in 0..n {
            let d = [
                dt / 6.0 * (k1[j][0] + 2.0 * k2[j][0] + 2.0 * k3[j][0] + k4[j][0]),
                dt / 6.0 * (k1[j][1] + 2.0 * k2[j][1] + 2.0 * k3[j][1] + k4[j][1]),
            ];
            if !(d[0].is_finite() && d[1].is_finite()) {
                return Err(Error::Diverged(step));
            }
            state.positions[j] = x0[j].translate(d);
        }
        h = hamiltonian(&state, table);
        if !h.is_finite() {
            return Err(Error::Diverged(step));
        }
        max_drift = max_drift.max((h - h0).abs() / scale);
        observer(step, &state);
    }
    Ok((
        state,
        TrajectoryDiagnostics {
            initial_energy: h0,
            final_energy: h,
            max_rel_energy_drift: max_drift,
            steps,
            dt,
        },
    ))
}

pub fn integrate(
    config: &VortexConfiguration,
    table: &SpectralTable,
    dt: f64,
    steps: usize,
) -> Result<(VortexConfiguration, TrajectoryDiagnostics)> {
    integrate_with(config, table, dt, steps, |_, _| {})
}

/// Largest vortex speed in the configuration.
pub fn max_speed(config: &VortexConfiguration, table: &SpectralTable) -> f64 {
    vortex_rhs(config, table)
        .iter()
        .map(|v| v[0].hypot(v[1]))
        .fold(0.0, f64::max)
}
