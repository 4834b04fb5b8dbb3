//! Limit objects of the mean-field theory (fluctuation variances) and the
//! Monte Carlo harnesses that check the law of large numbers, the central
//! limit theorem and propagation of chaos against them.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::VortexConfiguration;
use crate::error::{Error, Result};
use crate::gibbs::{epsilon_schedule, run_chain_with, stream_rng, ChainSchedule, ChainStats, GibbsParams};
use crate::prior::IntensityPrior;
use crate::spectral::eigenvalue;
use crate::stats::{effective_sample_size, jackknife_variance_se, ks_pvalue, mean, normal_cdf, variance};
use crate::testfn::{pair_empirical, pair_fluctuation, prior_moments, ModeKey, TestFunction};

/// `λ^{−m/2} e^{−ελ}` for the wavevector of `key`.
fn kernel_weight(key: &ModeKey, m: f64, epsilon: f64) -> f64 {
    let lambda = eigenvalue(key.1, key.2);
    lambda.powf(-m / 2.0) * (-epsilon * lambda).exp()
}

/// Closed-form fluctuation variance with kernel `λ^{−m/2} e^{−ελ}`; the
/// limit object is `epsilon = 0`.
pub fn sigma_infinity_spectral_eps(psi: &TestFunction, beta: f64, m: f64, epsilon: f64, prior: &IntensityPrior) -> f64 {
    let p0 = &psi.gamma_poly;
    let mean = prior_moments(prior, p0);
    let gamma_var = prior_moments(prior, &p0.mul(p0)) - mean * mean;
    let gamma_inf = prior.gamma_inf();
    let mut fluct = 0.0;
    let mut interaction = 0.0;
    for (key, phi) in psi.modal_coefficients() {
        fluct += prior_moments(prior, &phi.mul(&phi));
        let g = kernel_weight(&key, m, epsilon);
        let proj = prior_moments(prior, &phi.times_gamma());
        interaction += g * proj * proj / (1.0 + beta * gamma_inf * g);
    }
    gamma_var + fluct - beta * interaction
}

/// `σ∞(ψ)²` from the modal sum with the bare kernel `G_{m,k} = λ_k^{−m/2}`.
pub fn sigma_infinity_spectral(psi: &TestFunction, beta: f64, m: f64, prior: &IntensityPrior) -> f64 {
    sigma_infinity_spectral_eps(psi, beta, m, 0.0, prior)
}

/// Element of `L²(ν⊗ℓ)` discretized on prior quadrature atoms: column 0 is
/// the x-constant part, the remaining columns are modal coefficients.
#[derive(Debug, Clone)]
struct AtomField {
    atoms: Vec<(f64, f64)>,
    kernel: Vec<f64>,
    values: Vec<Vec<f64>>,
}

impl AtomField {
    fn from_test_function(psi: &TestFunction, prior: &IntensityPrior, m: f64) -> Self {
        let atoms = prior.quadrature();
        let coeffs = psi.modal_coefficients();
        let kernel = coeffs.keys().map(|k| kernel_weight(k, m, 0.0)).collect();
        let values = atoms
            .iter()
            .map(|(g, _)| {
                std::iter::once(psi.gamma_poly.eval(*g))
                    .chain(coeffs.values().map(|p| p.eval(*g)))
                    .collect()
            })
            .collect();
        Self { atoms, kernel, values }
    }

    fn map(&self, f: impl Fn(usize, usize, f64) -> f64) -> Self {
        let values = self
            .values
            .iter()
            .enumerate()
            .map(|(a, row)| row.iter().enumerate().map(|(c, v)| f(a, c, *v)).collect())
            .collect();
        Self { values, ..self.clone() }
    }

    fn inner(&self, other: &AtomField) -> f64 {
        self.atoms
            .iter()
            .zip(self.values.iter().zip(&other.values))
            .map(|((_, w), (r1, r2))| w * r1.iter().zip(r2).map(|(a, b)| a * b).sum::<f64>())
            .sum()
    }

    /// `∫ψ d(ν⊗ℓ)`.
    fn total_mean(&self) -> f64 {
        self.atoms
            .iter()
            .zip(&self.values)
            .map(|((_, w), row)| w * row[0])
            .sum()
    }

    fn centered(&self) -> Self {
        let mean = self.total_mean();
        self.map(|_, c, v| if c == 0 { v - mean } else { v })
    }

    /// `ℰφ(γ,x) = γ ∫∫ γ' G_m(x,y) φ(γ',y)`.
    fn apply_e(&self) -> Self {
        let ncols = self.kernel.len() + 1;
        let mut proj = vec![0.0; ncols];
        for ((g, w), row) in self.atoms.iter().zip(&self.values) {
            for c in 1..ncols {
                proj[c] += w * g * row[c];
            }
        }
        self.map(|a, c, _| {
            if c == 0 {
                0.0
            } else {
                self.atoms[a].0 * self.kernel[c - 1] * proj[c]
            }
        })
    }

    /// `(I + βΓ∞𝒢)^{−1}`, diagonal on spatial modes.
    fn apply_resolvent(&self, beta: f64, gamma_inf: f64) -> Self {
        self.map(|_, c, v| {
            if c == 0 {
                v
            } else {
                v / (1.0 + beta * gamma_inf * self.kernel[c - 1])
            }
        })
    }

    fn second_moment(&self) -> f64 {
        self.atoms.iter().map(|(g, w)| w * g * g).sum()
    }
}

/// `⟨(I − β(I+βΓ∞𝒢)^{−1}ℰ)(ψ−ψ̄), ψ−ψ̄⟩` by composing the operators on a
/// quadrature discretization of the prior.
pub fn sigma_infinity_operator(psi: &TestFunction, beta: f64, m: f64, prior: &IntensityPrior) -> f64 {
    let h = AtomField::from_test_function(psi, prior, m).centered();
    let gamma_inf = h.second_moment();
    let correction = h.apply_e().apply_resolvent(beta, gamma_inf);
    h.inner(&h) - beta * correction.inner(&h)
}

/// Pseudo-vorticity variance `Γ∞ ⟨(I+βΓ∞𝒢)^{−1}(ψ−ψ̄), ψ−ψ̄⟩`.
pub fn sigma_tilde(psi_x: &TestFunction, beta: f64, m: f64, prior: &IntensityPrior) -> Result<f64> {
    if !psi_x.is_spatial_only() {
        return Err(Error::GammaDependent);
    }
    let gamma_inf = prior.gamma_inf();
    Ok(gamma_inf
        * psi_x
            .modal_coefficients()
            .iter()
            .map(|(key, p)| {
                let c = p.constant_term();
                c * c / (1.0 + beta * gamma_inf * kernel_weight(key, m, 0.0))
            })
            .sum::<f64>())
}

/// How ε is chosen for each N of an experiment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EpsilonChoice {
    Fixed(f64),
    /// `ε(N) = max(C (ln N)^{−2/(2−m)}, eps_min)`.
    Schedule {
        c: f64,
        eps_min: f64,
    },
}

/// Shared configuration of the statistical experiments.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub m: f64,
    pub beta: f64,
    pub prior: IntensityPrior,
    pub epsilon: EpsilonChoice,
    pub tail_tol: f64,
    pub chain: ChainSchedule,
    pub n_chains: usize,
    pub seed: u64,
}

impl ExperimentConfig {
    pub fn resolve_epsilon(&self, n: usize) -> Result<f64> {
        match self.epsilon {
            EpsilonChoice::Fixed(e) => Ok(e),
            EpsilonChoice::Schedule { c, eps_min } => epsilon_schedule(n, c, self.m, eps_min),
        }
    }

    pub fn gibbs_params(&self, n: usize) -> Result<GibbsParams> {
        let mut p = GibbsParams::new(self.m, self.beta, self.resolve_epsilon(n)?, n, self.prior.clone());
        p.tail_tol = self.tail_tol;
        Ok(p)
    }

    /// Stream id of chain `chain` at size `n`: `n · 2¹⁶ + chain`.
    pub fn stream_id(n: usize, chain: usize) -> u64 {
        ((n as u64) << 16) + chain as u64
    }
}

/// Runs `n_chains` independent chains at size `n`, mapping every retained
/// configuration through `observe`, in parallel over chains.
fn run_legs<T, F>(cfg: &ExperimentConfig, n: usize, observe: F) -> Result<Vec<(Vec<T>, ChainStats)>>
where
    T: Send,
    F: Fn(&VortexConfiguration) -> T + Sync,
{
    if cfg.n_chains == 0 {
        return Err(Error::InvalidParameter("n_chains must be >= 1".into()));
    }
    let params = cfg.gibbs_params(n)?;
    let table = params.table()?;
    (0..cfg.n_chains)
        .into_par_iter()
        .map(|chain| {
            let mut rng = stream_rng(cfg.seed, ExperimentConfig::stream_id(n, chain));
            let mut series = Vec::with_capacity(cfg.chain.n_keep);
            let stats = run_chain_with(&params, &table, cfg.chain, &mut rng, |_, c, _| series.push(observe(c)))?;
            Ok((series, stats))
        })
        .collect()
}

fn merge_warnings(legs: &[ChainStats]) -> Vec<String> {
    let mut w: Vec<String> = legs.iter().flat_map(|s| s.warnings.iter().cloned()).collect();
    w.dedup();
    w
}

/// Mean of a scalar series over several chains with an ESS-based error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeriesSummary {
    pub mean: f64,
    pub stderr: f64,
    pub ess: f64,
}

fn summarize(chains: &[Vec<f64>]) -> SeriesSummary {
    let k = chains.len() as f64;
    let mut m = 0.0;
    let mut se2 = 0.0;
    let mut ess = 0.0;
    for s in chains {
        let e = effective_sample_size(s);
        let v = variance(s);
        m += mean(s);
        se2 += if v > 0.0 { v / e } else { 0.0 };
        ess += e;
    }
    SeriesSummary {
        mean: m / k,
        stderr: se2.sqrt() / k,
        ess,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LlnRow {
    pub n_vortices: usize,
    pub epsilon: f64,
    pub mean_pairing: f64,
    pub target: f64,
    pub deviation: f64,
    pub stderr: f64,
    pub ess: f64,
    pub within_3se: bool,
    pub position_acceptance: f64,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LlnReport {
    pub rows: Vec<LlnRow>,
    /// Whether |deviation| is non-increasing along the N ladder.
    pub deviation_non_increasing: bool,
}

/// `⟨ψ, η_N⟩` against `ν⊗ℓ(ψ)` along a ladder of N.
pub fn lln_experiment(cfg: &ExperimentConfig, psi: &TestFunction, ladder: &[usize]) -> Result<LlnReport> {
    let target = psi.mean(&cfg.prior);
    let mut rows = Vec::with_capacity(ladder.len());
    for &n in ladder {
        let legs = run_legs(cfg, n, |c| pair_empirical(psi, c))?;
        let (series, stats): (Vec<_>, Vec<_>) = legs.into_iter().unzip();
        let summary = summarize(&series);
        let deviation = if psi.terms.is_empty() && psi.gamma_poly.is_constant() {
            0.0
        } else {
            summary.mean - target
        };
        rows.push(LlnRow {
            n_vortices: n,
            epsilon: cfg.resolve_epsilon(n)?,
            mean_pairing: summary.mean,
            target,
            deviation,
            stderr: summary.stderr,
            ess: summary.ess,
            within_3se: deviation.abs() <= 3.0 * summary.stderr,
            position_acceptance: mean(&stats.iter().map(|s| s.position_acceptance).collect::<Vec<_>>()),
            warnings: merge_warnings(&stats),
        });
    }
    let deviation_non_increasing = rows.windows(2).all(|w| w[1].deviation.abs() <= w[0].deviation.abs());
    Ok(LlnReport {
        rows,
        deviation_non_increasing,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CltReport {
    pub psi_id: String,
    pub n_vortices: usize,
    pub n_samples: usize,
    pub sample_mean: f64,
    pub sample_variance: f64,
    pub sample_variance_se: f64,
    pub sigma_inf_sq: f64,
    /// Same closed form evaluated with the regularized kernel at the run's ε.
    pub sigma_eps_sq: f64,
    pub variance_ratio: f64,
    pub gaussian_ks_pvalue: f64,
    pub degenerate: bool,
    pub epsilon: f64,
    pub ess: f64,
    pub thin_spacing: usize,
    pub warnings: Vec<String>,
}

/// Distribution of `⟨ψ, ζ_N⟩` against the centred Gaussian of variance `σ∞(ψ)²`.
pub fn clt_experiment(cfg: &ExperimentConfig, psi: &TestFunction, psi_id: &str, n: usize) -> Result<CltReport> {
    if cfg.beta > 0.0 && !(cfg.m < 2.0) {
        return Err(Error::InvalidParameter("clt at beta > 0 requires m < 2".into()));
    }
    let prior = &cfg.prior;
    let legs = run_legs(cfg, n, |c| pair_fluctuation(psi, c, prior))?;
    let (series, stats): (Vec<_>, Vec<_>) = legs.into_iter().unzip();
    let sigma_inf_sq = sigma_infinity_spectral(psi, cfg.beta, cfg.m, prior);
    let epsilon = cfg.resolve_epsilon(n)?;
    let sigma_eps_sq = sigma_infinity_spectral_eps(psi, cfg.beta, cfg.m, epsilon, prior);

    let mut ess = 0.0;
    let mut thin_spacing = 1;
    let mut pooled = Vec::new();
    for s in &series {
        let e = effective_sample_size(s);
        ess += e;
        let spacing = ((s.len() as f64 / e).ceil() as usize).max(1);
        thin_spacing = thin_spacing.max(spacing);
        pooled.extend(s.iter().step_by(spacing).copied());
    }
    if ess < 100.0 {
        return Err(Error::InsufficientEffectiveSamples(ess));
    }
    let sample_mean = mean(&pooled);
    let sample_variance = variance(&pooled);
    let degenerate = sigma_inf_sq <= 1e-300;
    let (variance_ratio, gaussian_ks_pvalue) = if degenerate {
        let all_zero = pooled.iter().all(|v| v.abs() < 1e-12);
        (f64::NAN, if all_zero { 1.0 } else { 0.0 })
    } else {
        let sd = sigma_inf_sq.sqrt();
        (
            sample_variance / sigma_inf_sq,
            ks_pvalue(&pooled, |x| normal_cdf(x / sd)),
        )
    };
    Ok(CltReport {
        psi_id: psi_id.to_string(),
        n_vortices: n,
        n_samples: pooled.len(),
        sample_mean,
        sample_variance,
        sample_variance_se: jackknife_variance_se(&pooled),
        sigma_inf_sq,
        sigma_eps_sq,
        variance_ratio,
        gaussian_ks_pvalue,
        degenerate,
        epsilon,
        ess,
        thin_spacing,
        warnings: merge_warnings(&stats),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChaosRow {
    pub n_vortices: usize,
    pub epsilon: f64,
    pub covariance: f64,
    pub stderr: f64,
    pub ess: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChaosReport {
    pub rows: Vec<ChaosRow>,
    /// Last N of the ladder is within 3 SE of zero.
    pub last_within_3se: bool,
    /// |cov| at the last N is below |cov| at the first N.
    pub decreasing: bool,
}

fn is_constant(psi: &TestFunction) -> bool {
    psi.gamma_poly.is_constant() && psi.terms.iter().all(|t| t.poly.0.iter().all(|c| *c == 0.0))
}

/// Two-point covariance `Cov(f(γ₁,X₁), g(γ₂,X₂))`, averaged over all ordered
/// pairs of distinct vortices.
pub fn chaos_experiment(
    cfg: &ExperimentConfig,
    f: &TestFunction,
    g: &TestFunction,
    ladder: &[usize],
) -> Result<ChaosReport> {
    let trivial = is_constant(f) || is_constant(g);
    let mut rows = Vec::new();
    for &n in ladder {
        if n < 2 {
            return Err(Error::InvalidParameter("chaos needs N >= 2".into()));
        }
        let legs = run_legs(cfg, n, |c| {
            let (mut a, mut b, mut ab) = (0.0, 0.0, 0.0);
            for (gm, x) in c.gammas().iter().zip(c.positions()) {
                let fv = f.eval(*gm, x);
                let gv = g.eval(*gm, x);
                a += fv;
                b += gv;
                ab += fv * gv;
            }
            let nf = n as f64;
            [(a * b - ab) / (nf * (nf - 1.0)), a / nf, b / nf]
        })?;
        let mut ess = 0.0;
        let mut covs = Vec::new();
        let mut se2 = 0.0;
        for (series, _) in &legs {
            let p: Vec<f64> = series.iter().map(|v| v[0]).collect();
            let fa: Vec<f64> = series.iter().map(|v| v[1]).collect();
            let ga: Vec<f64> = series.iter().map(|v| v[2]).collect();
            let (mf, mg) = (mean(&fa), mean(&ga));
            covs.push(mean(&p) - mf * mg);
            // delta-method linearization of mean(P) − mean(F)·mean(G)
            let z: Vec<f64> = series.iter().map(|v| v[0] - mg * v[1] - mf * v[2]).collect();
            let e = effective_sample_size(&z);
            ess += e;
            let vz = variance(&z);
            se2 += if vz > 0.0 { vz / e } else { 0.0 };
        }
        let k = covs.len() as f64;
        let (covariance, stderr) = if trivial {
            (0.0, 0.0)
        } else {
            (mean(&covs), se2.sqrt() / k)
        };
        rows.push(ChaosRow {
            n_vortices: n,
            epsilon: cfg.resolve_epsilon(n)?,
            covariance,
            stderr,
            ess,
        });
    }
    let first = &rows[0];
    let last = &rows[rows.len() - 1];
    Ok(ChaosReport {
        last_within_3se: last.covariance.abs() <= 3.0 * last.stderr,
        decreasing: last.covariance.abs() < first.covariance.abs() || trivial,
        rows,
    })
}
