//! Python bindings for the `vortexmc` core crate.

use pyo3::create_exception;
use pyo3::exceptions::PyException;
use pyo3::prelude::*;
use pyo3::types::PyDict;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use vortexmc::gibbs::stream_rng;
use vortexmc::{ChainSchedule, DensityGrid, GibbsParams, IntensityPrior, TorusPoint};

create_exception!(vortexmc_py, VortexError, PyException);

fn err(e: vortexmc::Error) -> PyErr {
    VortexError::new_err(format!("{}: {}", e.kind(), e))
}

fn prior(spec: &str) -> PyResult<IntensityPrior> {
    spec.parse().map_err(err)
}

fn point(p: (f64, f64)) -> TorusPoint {
    TorusPoint::new(p.0, p.1)
}

/// Truncated spectral data of the regularized Green function.
#[pyclass(module = "vortexmc_py", frozen, skip_from_py_object)]
#[derive(Clone)]
struct SpectralTable {
    inner: vortexmc::SpectralTable,
}

#[pymethods]
impl SpectralTable {
    #[new]
    #[pyo3(signature = (m, epsilon, tail_tol = 1e-8))]
    fn new(m: f64, epsilon: f64, tail_tol: f64) -> PyResult<Self> {
        let inner = vortexmc::SpectralTable::build(m, epsilon, tail_tol).map_err(err)?;
        Ok(Self { inner })
    }

    #[getter]
    fn m(&self) -> f64 {
        self.inner.m()
    }

    #[getter]
    fn epsilon(&self) -> f64 {
        self.inner.epsilon()
    }

    #[getter]
    fn kmax(&self) -> i32 {
        self.inner.kmax()
    }

    #[getter]
    fn tail_bound(&self) -> f64 {
        self.inner.tail_bound()
    }

    #[getter]
    fn weights(&self) -> Vec<f64> {
        self.inner.g().to_vec()
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn green(&self, x: (f64, f64), y: (f64, f64)) -> f64 {
        self.inner.green(&point(x), &point(y))
    }

    fn green_diag(&self) -> f64 {
        self.inner.green_diag()
    }

    fn grad_perp_green(&self, d: (f64, f64)) -> (f64, f64) {
        let v = self.inner.grad_perp_green(&point(d));
        (v[0], v[1])
    }

    fn __repr__(&self) -> String {
        format!(
            "SpectralTable(m={}, epsilon={}, modes={})",
            self.inner.m(),
            self.inner.epsilon(),
            self.inner.len()
        )
    }
}

/// Band-limited observable `ψ(γ, x)` in the JSON schema of the CLI.
#[pyclass(module = "vortexmc_py", frozen, skip_from_py_object)]
#[derive(Clone)]
struct TestFunction {
    inner: vortexmc::TestFunction,
}

#[pymethods]
impl TestFunction {
    #[staticmethod]
    fn from_json(s: &str) -> PyResult<Self> {
        let inner = vortexmc::TestFunction::from_json(s).map_err(err)?;
        Ok(Self { inner })
    }

    fn to_json(&self) -> String {
        self.inner.to_json()
    }

    fn eval(&self, gamma: f64, x: (f64, f64)) -> f64 {
        self.inner.eval(gamma, &point(x))
    }

    #[pyo3(signature = (prior = "rademacher"))]
    fn mean(&self, prior: &str) -> PyResult<f64> {
        Ok(self.inner.mean(&self::prior(prior)?))
    }

    fn pairing(&self, config: &VortexConfiguration) -> f64 {
        vortexmc::pair_empirical(&self.inner, &config.inner)
    }
}

#[pyclass(module = "vortexmc_py", skip_from_py_object)]
#[derive(Clone)]
struct VortexConfiguration {
    inner: vortexmc::VortexConfiguration,
}

#[pymethods]
impl VortexConfiguration {
    #[new]
    fn new(gammas: Vec<f64>, positions: Vec<(f64, f64)>) -> PyResult<Self> {
        let positions = positions.into_iter().map(point).collect();
        let inner = vortexmc::VortexConfiguration::new(gammas, positions).map_err(err)?;
        Ok(Self { inner })
    }

    #[getter]
    fn gammas(&self) -> Vec<f64> {
        self.inner.gammas().to_vec()
    }

    #[getter]
    fn positions(&self) -> Vec<(f64, f64)> {
        self.inner.positions().iter().map(|p| (p.x1, p.x2)).collect()
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn hamiltonian(&self, table: &SpectralTable) -> f64 {
        vortexmc::hamiltonian(&self.inner, &table.inner)
    }

    fn velocities(&self, table: &SpectralTable) -> Vec<(f64, f64)> {
        vortexmc::vortex_rhs(&self.inner, &table.inner)
            .into_iter()
            .map(|v| (v[0], v[1]))
            .collect()
    }

    /// Runs RK4 for `steps` steps; returns the final configuration and the
    /// energy diagnostics.
    fn integrate<'py>(
        &self,
        py: Python<'py>,
        table: &SpectralTable,
        dt: f64,
        steps: usize,
    ) -> PyResult<(Self, Bound<'py, PyDict>)> {
        let (end, diag) = py
            .detach(|| vortexmc::integrate(&self.inner, &table.inner, dt, steps))
            .map_err(err)?;
        let d = PyDict::new(py);
        d.set_item("initial_energy", diag.initial_energy)?;
        d.set_item("final_energy", diag.final_energy)?;
        d.set_item("max_rel_energy_drift", diag.max_rel_energy_drift)?;
        d.set_item("steps", diag.steps)?;
        d.set_item("dt", diag.dt)?;
        Ok((Self { inner: end }, d))
    }

    fn __repr__(&self) -> String {
        format!("VortexConfiguration(n={})", self.inner.len())
    }
}

/// Gibbs samples of the canonical ensemble; stream `stream` of `seed`.
#[pyfunction]
#[pyo3(signature = (m, beta, epsilon, n_vortices, prior = "rademacher", burn_in = 1000, thin = 10, n_keep = 1000, seed = 0, stream = 0))]
#[allow(clippy::too_many_arguments)]
fn sample<'py>(
    py: Python<'py>,
    m: f64,
    beta: f64,
    epsilon: f64,
    n_vortices: usize,
    prior: &str,
    burn_in: usize,
    thin: usize,
    n_keep: usize,
    seed: u64,
    stream: u64,
) -> PyResult<(Vec<VortexConfiguration>, Bound<'py, PyDict>)> {
    let params = GibbsParams::new(m, beta, epsilon, n_vortices, self::prior(prior)?);
    let schedule = ChainSchedule { burn_in, thin, n_keep };
    let (configs, stats) = py
        .detach(|| vortexmc::run_chain(&params, schedule, &mut stream_rng(seed, stream)))
        .map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("position_acceptance", stats.position_acceptance)?;
    d.set_item("intensity_acceptance", stats.intensity_acceptance)?;
    d.set_item("ess_energy", stats.ess_energy)?;
    d.set_item("proposal_scale", stats.proposal_scale)?;
    d.set_item("warnings", stats.warnings)?;
    let configs = configs.into_iter().map(|inner| VortexConfiguration { inner }).collect();
    Ok((configs, d))
}

#[pyfunction]
#[pyo3(signature = (psi, beta, m, prior = "rademacher"))]
fn sigma_infinity(psi: &TestFunction, beta: f64, m: f64, prior: &str) -> PyResult<f64> {
    Ok(vortexmc::sigma_infinity_spectral(
        &psi.inner,
        beta,
        m,
        &self::prior(prior)?,
    ))
}

#[pyfunction]
#[pyo3(signature = (n, c = 1.0, m = 1.0, eps_min = 0.0))]
fn epsilon_schedule(n: usize, c: f64, m: f64, eps_min: f64) -> PyResult<f64> {
    vortexmc::epsilon_schedule(n, c, m, eps_min).map_err(err)
}

#[pyfunction]
#[pyo3(signature = (m, epsilon, prior = "rademacher"))]
fn beta_zero(m: f64, epsilon: f64, prior: &str) -> PyResult<f64> {
    Ok(vortexmc::beta_zero(m, epsilon, &self::prior(prior)?))
}

#[pyfunction]
fn check_char_bound(psi: &TestFunction, grid: usize) -> PyResult<(f64, f64)> {
    let b = vortexmc::check_char_bound(&psi.inner, grid).map_err(err)?;
    Ok((b.lhs, b.rhs))
}

/// Monte Carlo check of the Gaussian representation; returns
/// `(lhs, rhs_mean, rhs_stderr)`.
#[pyfunction]
#[pyo3(signature = (config, beta, table, nsamples = 100_000, seed = 0))]
fn verify_gaussian_rep(
    py: Python<'_>,
    config: &VortexConfiguration,
    beta: f64,
    table: &SpectralTable,
    nsamples: usize,
    seed: u64,
) -> PyResult<(f64, f64, f64)> {
    let c = py
        .detach(|| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            vortexmc::verify_gaussian_rep(&config.inner, beta, &table.inner, nsamples, &mut rng)
        })
        .map_err(err)?;
    Ok((c.lhs, c.rhs_mean, c.rhs_stderr))
}

/// Damped fixed-point iteration of the mean-field equation from
/// `1 + perturb·γ·√2 cos(2πx₁)`.
#[pyfunction]
#[pyo3(signature = (beta, m, epsilon, prior = "rademacher", grid = 64, damping = 0.5, tol = 1e-12, max_iter = 10_000, perturb = 0.0))]
#[allow(clippy::too_many_arguments)]
fn meanfield<'py>(
    py: Python<'py>,
    beta: f64,
    m: f64,
    epsilon: f64,
    prior: &str,
    grid: usize,
    damping: f64,
    tol: f64,
    max_iter: usize,
    perturb: f64,
) -> PyResult<Bound<'py, PyDict>> {
    let prior = self::prior(prior)?;
    let table = vortexmc::SpectralTable::build(m, epsilon, 1e-10).map_err(err)?;
    let rho0 = DensityGrid::from_fn(&prior, grid, |g, x| {
        1.0 + perturb * g * std::f64::consts::SQRT_2 * (std::f64::consts::TAU * x.x1).cos()
    })
    .normalized();
    let r = py
        .detach(|| vortexmc::mfe_iterate(beta, &table, &prior, &rho0, damping, tol, max_iter))
        .map_err(err)?;
    let f = vortexmc::free_energy(&r.rho, beta, &table, &prior).map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("residual", r.residual)?;
    d.set_item("iterations", r.iterations)?;
    d.set_item("converged", r.converged)?;
    d.set_item("free_energy", f)?;
    d.set_item("gamma_atoms", r.rho.gamma_atoms.clone())?;
    d.set_item("rho", r.rho.values)?;
    Ok(d)
}

#[pymodule]
fn vortexmc_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("VortexError", m.py().get_type::<VortexError>())?;
    m.add_class::<SpectralTable>()?;
    m.add_class::<TestFunction>()?;
    m.add_class::<VortexConfiguration>()?;
    m.add_function(wrap_pyfunction!(sample, m)?)?;
    m.add_function(wrap_pyfunction!(sigma_infinity, m)?)?;
    m.add_function(wrap_pyfunction!(epsilon_schedule, m)?)?;
    m.add_function(wrap_pyfunction!(beta_zero, m)?)?;
    m.add_function(wrap_pyfunction!(check_char_bound, m)?)?;
    m.add_function(wrap_pyfunction!(verify_gaussian_rep, m)?)?;
    m.add_function(wrap_pyfunction!(meanfield, m)?)?;
    Ok(())
}
