use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use vortexmc::dynamics::max_speed;
use vortexmc::{hamiltonian, integrate, vortex_rhs, SpectralTable, TorusPoint, VortexConfiguration};

fn lattice_green(m: f64, eps: f64, d: &TorusPoint) -> f64 {
    let mut s = 0.0;
    for k1 in -30i32..=30 {
        for k2 in -30i32..=30 {
            if k1 == 0 && k2 == 0 {
                continue;
            }
            let lam = 4.0 * PI * PI * f64::from(k1 * k1 + k2 * k2);
            s += lam.powf(-m / 2.0)
                * (-eps * lam).exp()
                * (2.0 * PI * (f64::from(k1) * d.x1 + f64::from(k2) * d.x2)).cos();
        }
    }
    s
}

fn random_config(rng: &mut ChaCha8Rng, n: usize) -> VortexConfiguration {
    let gammas = (0..n)
        .map(|_| rng.random_range(0.5..1.5) * if rng.random() { 1.0 } else { -1.0 })
        .collect();
    let positions = (0..n).map(|_| TorusPoint::new(rng.random(), rng.random())).collect();
    VortexConfiguration::new(gammas, positions).unwrap()
}

/// Distance between configurations with matching labels, on the torus.
fn torus_gap(a: &VortexConfiguration, b: &VortexConfiguration) -> f64 {
    a.positions()
        .iter()
        .zip(b.positions())
        .map(|(p, q)| p.distance(q))
        .fold(0.0, f64::max)
}

#[test]
fn hamiltonian_matches_brute_force_pair_sum() {
    let (m, eps) = (1.0, 0.05);
    let table = SpectralTable::build(m, eps, 1e-12).unwrap();
    let config = random_config(&mut ChaCha8Rng::seed_from_u64(1), 5);
    let (g, x) = (config.gammas(), config.positions());
    let mut h = 0.0;
    for j in 0..5 {
        for k in 0..5 {
            if j != k {
                h += 0.5 * g[j] * g[k] * lattice_green(m, eps, &x[j].sub(&x[k]));
            }
        }
    }
    assert!((hamiltonian(&config, &table) - h).abs() < 1e-10);
}

#[test]
fn velocity_is_symplectic_gradient_of_energy() {
    let table = SpectralTable::build(1.5, 0.03, 1e-12).unwrap();
    let config = random_config(&mut ChaCha8Rng::seed_from_u64(2), 6);
    let rhs = vortex_rhs(&config, &table);
    let h = 1e-5;
    for (j, v) in rhs.iter().enumerate() {
        let p = config.positions()[j];
        let partial = |v: [f64; 2]| {
            let mut plus = config.clone();
            plus.set_position(j, p.translate(v));
            let mut minus = config.clone();
            minus.set_position(j, p.translate([-v[0], -v[1]]));
            (hamiltonian(&plus, &table) - hamiltonian(&minus, &table)) / (2.0 * h)
        };
        let (d1, d2) = (partial([h, 0.0]), partial([0.0, h]));
        let gamma = config.gammas()[j];
        let want = [-d2 / gamma, d1 / gamma];
        let scale = want[0].hypot(want[1]).max(1.0);
        assert!((v[0] - want[0]).abs() < 1e-6 * scale, "{v:?} vs {want:?}");
        assert!((v[1] - want[1]).abs() < 1e-6 * scale, "{v:?} vs {want:?}");
    }
}

#[test]
fn opposite_pair_translates_rigidly() {
    let table = SpectralTable::build(1.0, 0.05, 1e-12).unwrap();
    let config = VortexConfiguration::new(
        vec![1.0, -1.0],
        vec![TorusPoint::new(0.2, 0.3), TorusPoint::new(0.45, 0.4)],
    )
    .unwrap();
    let v = vortex_rhs(&config, &table);
    assert!((v[0][0] - v[1][0]).abs() < 1e-14 && (v[0][1] - v[1][1]).abs() < 1e-14);
    let (end, _) = integrate(&config, &table, 1e-3, 2000).unwrap();
    let d0 = config.positions()[0].sub(&config.positions()[1]);
    let d1 = end.positions()[0].sub(&end.positions()[1]);
    assert!(d0.distance(&d1) < 1e-9);
}

#[test]
fn two_vortex_separation_is_conserved() {
    let table = SpectralTable::build(1.0, 0.05, 1e-12).unwrap();
    let config = VortexConfiguration::new(
        vec![1.0, 0.7],
        vec![TorusPoint::new(0.1, 0.2), TorusPoint::new(0.3, 0.35)],
    )
    .unwrap();
    let g0 = table.green(&config.positions()[0], &config.positions()[1]);
    let dt = 1e-3 / max_speed(&config, &table).max(1.0);
    let mut worst: f64 = 0.0;
    vortexmc::dynamics::integrate_with(&config, &table, dt, 10_000, |_, c| {
        worst = worst.max((table.green(&c.positions()[0], &c.positions()[1]) - g0).abs());
    })
    .unwrap();
    assert!(worst < 1e-8, "G drift {worst}");
}

#[test]
fn energy_is_conserved_and_intensities_fixed() {
    let table = SpectralTable::build(1.0, 0.1, 1e-10).unwrap();
    let config = random_config(&mut ChaCha8Rng::seed_from_u64(3), 8);
    let dt = 1e-3 / max_speed(&config, &table).max(1.0);
    let (end, diag) = integrate(&config, &table, dt, 5000).unwrap();
    assert!(diag.max_rel_energy_drift < 1e-8);
    assert_eq!(end.gammas(), config.gammas());
}

#[test]
fn single_step_error_is_fifth_order() {
    let table = SpectralTable::build(1.0, 0.05, 1e-12).unwrap();
    let config = random_config(&mut ChaCha8Rng::seed_from_u64(4), 4);
    let speed = max_speed(&config, &table);
    let err = |h: f64| {
        let (one, _) = integrate(&config, &table, h, 1).unwrap();
        let (fine, _) = integrate(&config, &table, h / 256.0, 256).unwrap();
        torus_gap(&one, &fine)
    };
    let h = 0.02 / speed;
    let ratio = err(h) / err(h / 2.0);
    assert!((22.0..44.0).contains(&ratio), "error ratio {ratio}");
}

#[test]
fn reversing_intensities_retraces_the_flow() {
    let table = SpectralTable::build(1.0, 0.1, 1e-10).unwrap();
    let config = random_config(&mut ChaCha8Rng::seed_from_u64(5), 6);
    let dt = 1e-3 / max_speed(&config, &table).max(1.0);
    let (fwd, _) = integrate(&config, &table, dt, 2000).unwrap();
    let (back, _) = integrate(&fwd.reversed(), &table, dt, 2000).unwrap();
    assert!(torus_gap(&back, &config) < 1e-6);
    assert_eq!(back.reversed().gammas(), config.gammas());
}

#[test]
fn integration_requires_regularization() {
    let table = SpectralTable::with_max_lambda(1.0, 0.0, 200.0).unwrap();
    let config = random_config(&mut ChaCha8Rng::seed_from_u64(6), 3);
    assert!(integrate(&config, &table, 1e-3, 1).is_err());
}
