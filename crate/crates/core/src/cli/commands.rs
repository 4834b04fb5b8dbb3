use std::f64::consts::{PI, SQRT_2};
use std::fmt::Write as _;

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Map, Value};

use super::{read_psi, to_pretty, RunConfig, RunOutput, Subcommand, FIELD_STREAM, INIT_STREAM};
use crate::dynamics::{integrate_with, max_speed, VortexConfiguration};
use crate::error::{Error, Result};
use crate::field::{check_char_bound, verify_gaussian_rep};
use crate::gibbs::{run_chain_with, stream_rng};
use crate::limits::{chaos_experiment, clt_experiment, lln_experiment, ExperimentConfig};
use crate::meanfield::{beta_zero, free_energy, mfe_iterate, second_variation_coefficient, DensityGrid};
use crate::prior::IntensityPrior;
use crate::spectral::{SpectralTable, TorusPoint};
use crate::testfn::TestFunction;

const GREEN_RAY_POINTS: usize = 128;

pub(crate) fn dispatch(c: &RunConfig) -> Result<RunOutput> {
    let mut resolved = Map::new();
    let prior = c.prior()?;
    resolved.insert("prior".into(), json!(prior.to_string()));
    resolved.insert("prior_quadrature".into(), json!(prior.quadrature_rule()));
    resolved.insert("schedule_c".into(), json!(c.schedule_c));
    let eps: Vec<Value> = c
        .sizes()
        .into_iter()
        .map(|n| Ok(json!({ "n_vortices": n, "epsilon": c.resolve_epsilon(n)? })))
        .collect::<Result<_>>()?;
    resolved.insert("epsilon".into(), Value::Array(eps));

    let mut out = RunOutput {
        files: Vec::new(),
        resolved,
    };
    match c.subcommand {
        Subcommand::Green => green(c, &mut out)?,
        Subcommand::Dynamics => dynamics(c, &prior, &mut out)?,
        Subcommand::Sample => sample(c, &mut out)?,
        Subcommand::Fieldcheck => fieldcheck(c, &prior, &mut out)?,
        Subcommand::Lln => lln(c, &mut out)?,
        Subcommand::Clt => clt(c, &mut out)?,
        Subcommand::Chaos => chaos(c, &mut out)?,
        Subcommand::Meanfield => meanfield(c, &prior, &mut out)?,
    }
    Ok(out)
}

fn table(c: &RunConfig, out: &mut RunOutput) -> Result<SpectralTable> {
    let t = SpectralTable::build(c.m, c.resolve_epsilon(c.n_vortices)?, c.modes_tail_tol)?;
    out.resolved.insert(
        "table".into(),
        json!({
            "modes": t.len(),
            "kmax": t.kmax(),
            "max_lambda": t.max_lambda(),
            "tail_bound": t.tail_bound(),
        }),
    );
    Ok(t)
}

fn random_config(c: &RunConfig, prior: &IntensityPrior) -> Result<VortexConfiguration> {
    let mut rng = stream_rng(c.seed, INIT_STREAM);
    let gammas = (0..c.n_vortices).map(|_| prior.sample(&mut rng)).collect();
    let positions = (0..c.n_vortices)
        .map(|_| TorusPoint::new(rng.random(), rng.random()))
        .collect();
    VortexConfiguration::new(gammas, positions)
}

fn psi(c: &RunConfig, out: &mut RunOutput) -> Result<TestFunction> {
    let path = c
        .psi_file
        .as_ref()
        .ok_or_else(|| Error::InvalidParameter("--psi-file is required".into()))?;
    let f = read_psi(path)?;
    out.resolved.insert("psi".into(), serde_json::to_value(&f)?);
    Ok(f)
}

/// Parameter echo attached to every report record.
fn echo(c: &RunConfig) -> Map<String, Value> {
    let mut o = Map::new();
    o.insert("experiment".into(), json!(c.subcommand.name()));
    o.insert("seed".into(), json!(c.seed));
    o.insert("m".into(), json!(c.m));
    o.insert("beta".into(), json!(c.beta));
    o.insert("prior".into(), json!(c.prior_spec));
    o.insert("epsilon_spec".into(), json!(c.epsilon));
    o.insert("schedule_c".into(), json!(c.schedule_c));
    o.insert("chain".into(), json!(c.chain));
    o
}

fn record<T: Serialize>(c: &RunConfig, body: &T, kind: &str, n: Option<usize>) -> Result<String> {
    let mut v = serde_json::to_value(body)?;
    if let Value::Object(o) = &mut v {
        o.insert("record".into(), json!(kind));
        o.extend(echo(c));
        if let Some(n) = n {
            let streams: Vec<u64> = (0..c.chain.n_chains)
                .map(|k| ExperimentConfig::stream_id(n, k))
                .collect();
            o.insert("streams".into(), json!(streams));
        }
    }
    let mut line = v.to_string();
    line.push('\n');
    Ok(line)
}

fn green(c: &RunConfig, out: &mut RunOutput) -> Result<()> {
    let t = table(c, out)?;
    out.resolved.insert("green_diag".into(), json!(t.green_diag()));
    let mut csv = String::from("t,x1,x2,green\n");
    for i in 0..GREEN_RAY_POINTS {
        let s = i as f64 / (2 * GREEN_RAY_POINTS) as f64;
        let d = TorusPoint::new(s, s);
        writeln!(csv, "{s},{},{},{}", d.x1, d.x2, t.green_at(&d)).unwrap();
    }
    out.files.push(("green.csv".into(), csv));
    Ok(())
}

fn trajectory_rows(csv: &mut String, step: usize, dt: f64, config: &VortexConfiguration) {
    for (j, (g, x)) in config.gammas().iter().zip(config.positions()).enumerate() {
        writeln!(csv, "{step},{},{j},{g},{},{}", step as f64 * dt, x.x1, x.x2).unwrap();
    }
}

fn dynamics(c: &RunConfig, prior: &IntensityPrior, out: &mut RunOutput) -> Result<()> {
    let t = table(c, out)?;
    let d = c.dynamics;
    if d.record_every == 0 {
        return Err(Error::InvalidParameter("--record-every must be >= 1".into()));
    }
    let init = random_config(c, prior)?;
    let mut csv = String::from("step,time,vortex_index,gamma,x1,x2\n");
    trajectory_rows(&mut csv, 0, d.dt, &init);
    let (last, diag) = integrate_with(&init, &t, d.dt, d.steps, |step, s| {
        if step % d.record_every == 0 || step == d.steps {
            trajectory_rows(&mut csv, step, d.dt, s);
        }
    })?;
    let unchanged = init
        .gammas()
        .iter()
        .zip(last.gammas())
        .all(|(a, b)| a.to_bits() == b.to_bits());
    let mut v = serde_json::to_value(&diag)?;
    if let Value::Object(o) = &mut v {
        o.insert("intensities_unchanged".into(), json!(unchanged));
        o.insert("initial_max_speed".into(), json!(max_speed(&init, &t)));
    }
    out.files.push(("trajectory.csv".into(), csv));
    out.files.push(("diagnostics.json".into(), to_pretty(&v)));
    Ok(())
}

fn sample(c: &RunConfig, out: &mut RunOutput) -> Result<()> {
    let exp = c.experiment()?;
    let n = c.n_vortices;
    let params = exp.gibbs_params(n)?;
    let t = table(c, out)?;
    let streams: Vec<u64> = (0..c.chain.n_chains)
        .map(|k| ExperimentConfig::stream_id(n, k))
        .collect();
    out.resolved.insert("streams".into(), json!(&streams));
    let n_keep = c.chain.n_keep;
    let legs: Vec<(String, _)> = (0..c.chain.n_chains)
        .into_par_iter()
        .map(|k| {
            let mut rng = stream_rng(c.seed, ExperimentConfig::stream_id(n, k));
            let mut rows = String::new();
            let stats = run_chain_with(&params, &t, c.schedule(), &mut rng, |i, conf, _| {
                for (j, (g, x)) in conf.gammas().iter().zip(conf.positions()).enumerate() {
                    writeln!(rows, "{},{j},{g},{},{}", k * n_keep + i, x.x1, x.x2).unwrap();
                }
            })?;
            Ok((rows, stats))
        })
        .collect::<Result<_>>()?;
    let mut csv = String::from("sample_index,vortex_index,gamma,x1,x2\n");
    let mut stats = Vec::new();
    for (rows, s) in legs {
        csv.push_str(&rows);
        stats.push(s);
    }
    out.files.push(("samples.csv".into(), csv));
    out.files.push((
        "stats.json".into(),
        to_pretty(&json!({
            "seed": c.seed,
            "streams": streams,
            "params": {
                "m": params.m,
                "beta": params.beta,
                "epsilon": params.epsilon,
                "n_vortices": n,
                "prior": params.prior.to_string(),
                "initial_proposal_scale": params.proposal_scale,
                "burn_in": c.chain.burn_in,
                "thin": c.chain.thin,
                "n_keep": n_keep,
            },
            "chains": stats,
        })),
    ));
    Ok(())
}

fn fieldcheck(c: &RunConfig, prior: &IntensityPrior, out: &mut RunOutput) -> Result<()> {
    let t = table(c, out)?;
    let init = random_config(c, prior)?;
    let mut rng = stream_rng(c.seed, FIELD_STREAM);
    let rep = verify_gaussian_rep(&init, c.beta, &t, c.field_samples, &mut rng)?;
    let z = (rep.lhs - rep.rhs_mean).abs() / rep.rhs_stderr;
    let mut report = json!({
        "gaussian_rep": rep,
        "z_score": z,
        "within_3se": z <= 3.0,
    });
    if c.psi_file.is_some() {
        let f = psi(c, out)?;
        report["char_bound"] = serde_json::to_value(check_char_bound(&f, c.meanfield.grid)?)?;
    }
    out.files.push(("fieldcheck.json".into(), to_pretty(&report)));
    Ok(())
}

fn lln(c: &RunConfig, out: &mut RunOutput) -> Result<()> {
    let f = psi(c, out)?;
    let r = lln_experiment(&c.experiment()?, &f, &c.ladder())?;
    let mut body = String::new();
    for row in &r.rows {
        body += &record(c, row, "row", Some(row.n_vortices))?;
    }
    body += &record(
        c,
        &json!({ "deviation_non_increasing": r.deviation_non_increasing }),
        "summary",
        None,
    )?;
    out.files.push(("lln.jsonl".into(), body));
    Ok(())
}

fn clt(c: &RunConfig, out: &mut RunOutput) -> Result<()> {
    let f = psi(c, out)?;
    let id = c
        .psi_file
        .as_ref()
        .and_then(|p| p.file_stem())
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    let r = clt_experiment(&c.experiment()?, &f, &id, c.n_vortices)?;
    out.files
        .push(("clt.jsonl".into(), record(c, &r, "row", Some(c.n_vortices))?));
    Ok(())
}

fn chaos(c: &RunConfig, out: &mut RunOutput) -> Result<()> {
    let f = psi(c, out)?;
    let g = match &c.psi2_file {
        Some(p) => {
            let g = read_psi(p)?;
            out.resolved.insert("psi2".into(), serde_json::to_value(&g)?);
            g
        }
        None => f.clone(),
    };
    let r = chaos_experiment(&c.experiment()?, &f, &g, &c.ladder())?;
    let mut body = String::new();
    for row in &r.rows {
        body += &record(c, row, "row", Some(row.n_vortices))?;
    }
    body += &record(
        c,
        &json!({ "last_within_3se": r.last_within_3se, "decreasing": r.decreasing }),
        "summary",
        None,
    )?;
    out.files.push(("chaos.jsonl".into(), body));
    Ok(())
}

fn meanfield(c: &RunConfig, prior: &IntensityPrior, out: &mut RunOutput) -> Result<()> {
    let t = table(c, out)?;
    let mf = c.meanfield;
    let a = mf.perturb;
    let rho0 = DensityGrid::from_fn(prior, mf.grid, |g, x| 1.0 + a * g * SQRT_2 * (2.0 * PI * x.x1).cos());
    let rho0 = rho0.normalized();
    let r = mfe_iterate(c.beta, &t, prior, &rho0, mf.damping, mf.tol, mf.max_iter)?;
    let n = r.rho.n;
    let mut csv = String::from("atom_value,i,j,rho\n");
    for (ai, (g, _)) in r.rho.gamma_atoms.iter().enumerate() {
        for (cell, v) in r.rho.atom_values(ai).iter().enumerate() {
            writeln!(csv, "{g},{},{},{v}", cell / n, cell % n).unwrap();
        }
    }
    let eps = t.epsilon();
    let meta = json!({
        "residual": r.residual,
        "iterations": r.iterations,
        "converged": r.converged,
        "free_energy": free_energy(&r.rho, c.beta, &t, prior)?,
        "beta_zero": beta_zero(c.m, eps, prior),
        "second_variation_coefficient": second_variation_coefficient(c.beta, eps, c.m, prior),
        "gamma_atoms": r.rho.gamma_atoms,
        "grid": n,
    });
    out.files.push(("density.csv".into(), csv));
    out.files.push(("meanfield.json".into(), to_pretty(&meta)));
    Ok(())
}
