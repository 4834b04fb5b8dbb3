//! Compactly supported priors on vortex intensities.

use std::fmt;
use std::str::FromStr;

use rand::Rng;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum IntensityPrior {
    /// ±1 with probability ½ each.
    Rademacher,
    Uniform {
        a: f64,
        b: f64,
    },
    Discrete {
        atoms: Vec<(f64, f64)>,
    },
}

/// Number of Gauss–Legendre nodes used to discretize uniform priors.
pub const UNIFORM_QUADRATURE_NODES: usize = 32;

impl IntensityPrior {
    pub fn uniform(a: f64, b: f64) -> Result<Self> {
        if !(a.is_finite() && b.is_finite() && a < b) {
            return Err(Error::PriorSpec(format!("uniform:{a},{b}")));
        }
        Ok(Self::Uniform { a, b })
    }

    /// Weights are normalized; nonpositive weights and empty atom lists are rejected.
    pub fn discrete(atoms: Vec<(f64, f64)>) -> Result<Self> {
        if atoms.is_empty() || atoms.iter().any(|(v, w)| !v.is_finite() || !w.is_finite() || *w <= 0.0) {
            return Err(Error::PriorSpec(format!("discrete atoms {atoms:?}")));
        }
        let total: f64 = atoms.iter().map(|(_, w)| w).sum();
        Ok(Self::Discrete {
            atoms: atoms.into_iter().map(|(v, w)| (v, w / total)).collect(),
        })
    }

    pub fn support_bound(&self) -> f64 {
        match self {
            Self::Rademacher => 1.0,
            Self::Uniform { a, b } => a.abs().max(b.abs()),
            Self::Discrete { atoms } => atoms.iter().map(|(v, _)| v.abs()).fold(0.0, f64::max),
        }
    }

    pub fn contains(&self, gamma: f64) -> bool {
        match self {
            Self::Rademacher => gamma == 1.0 || gamma == -1.0,
            Self::Uniform { a, b } => (*a..=*b).contains(&gamma),
            Self::Discrete { atoms } => atoms.iter().any(|(v, _)| *v == gamma),
        }
    }

    /// Exact `ν(γⁿ)`.
    pub fn moment(&self, n: usize) -> f64 {
        match self {
            Self::Rademacher => {
                if n.is_multiple_of(2) {
                    1.0
                } else {
                    0.0
                }
            }
            Self::Uniform { a, b } => {
                let p = (n + 1) as i32;
                (b.powi(p) - a.powi(p)) / (f64::from(p) * (b - a))
            }
            Self::Discrete { atoms } => atoms.iter().map(|(v, w)| w * v.powi(n as i32)).sum(),
        }
    }

    /// `ν(γ)`.
    pub fn mean(&self) -> f64 {
        self.moment(1)
    }

    /// `Γ∞ = ν(γ²)`.
    pub fn gamma_inf(&self) -> f64 {
        self.moment(2)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            Self::Rademacher => {
                if rng.random::<bool>() {
                    1.0
                } else {
                    -1.0
                }
            }
            Self::Uniform { a, b } => a + (b - a) * rng.random::<f64>(),
            Self::Discrete { atoms } => {
                let u: f64 = rng.random();
                let mut acc = 0.0;
                for (v, w) in atoms {
                    acc += w;
                    if u < acc {
                        return *v;
                    }
                }
                atoms[atoms.len() - 1].0
            }
        }
    }

    /// Quadrature atoms `(γ, weight)` for `ν`: exact for discrete priors,
    /// Gauss–Legendre for uniform ones.
    pub fn quadrature(&self) -> Vec<(f64, f64)> {
        match self {
            Self::Rademacher => vec![(-1.0, 0.5), (1.0, 0.5)],
            Self::Discrete { atoms } => atoms.clone(),
            Self::Uniform { a, b } => gauss_legendre(UNIFORM_QUADRATURE_NODES)
                .into_iter()
                .map(|(x, w)| (0.5 * (a + b) + 0.5 * (b - a) * x, 0.5 * w))
                .collect(),
        }
    }

    /// Name of the quadrature rule recorded in output metadata.
    pub fn quadrature_rule(&self) -> String {
        match self {
            Self::Uniform { .. } => format!("gauss-legendre-{UNIFORM_QUADRATURE_NODES}"),
            _ => "exact-atoms".to_string(),
        }
    }
}

/// Nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(n);
    let nf = n as f64;
    for i in 0..n {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre(n, x);
        if d != 0.0 {
            dp = d;
        }
        out.push((x, 2.0 / ((1.0 - x * x) * dp * dp)));
    }
    out.sort_by(|a, b| a.0.total_cmp(&b.0));
    out
}

fn legendre(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let nf = n as f64;
    (p1, nf * (x * p1 - p0) / (x * x - 1.0))
}

impl FromStr for IntensityPrior {
    type Err = Error;

    /// Accepts `rademacher`, `uniform:a,b` and `discrete:v1:w1,v2:w2,...`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::PriorSpec(s.to_string());
        let s = s.trim();
        if s == "rademacher" {
            return Ok(Self::Rademacher);
        }
        if let Some(rest) = s.strip_prefix("uniform:") {
            let parts: Vec<&str> = rest.split(',').collect();
            if parts.len() != 2 {
                return Err(bad());
            }
            let a: f64 = parts[0].trim().parse().map_err(|_| bad())?;
            let b: f64 = parts[1].trim().parse().map_err(|_| bad())?;
            return Self::uniform(a, b).map_err(|_| bad());
        }
        if let Some(rest) = s.strip_prefix("discrete:") {
            let mut atoms = Vec::new();
            for item in rest.split(',') {
                let (v, w) = item.split_once(':').ok_or_else(bad)?;
                let v: f64 = v.trim().parse().map_err(|_| bad())?;
                let w: f64 = w.trim().parse().map_err(|_| bad())?;
                atoms.push((v, w));
            }
            return Self::discrete(atoms).map_err(|_| bad());
        }
        Err(bad())
    }
}

impl fmt::Display for IntensityPrior {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Rademacher => write!(f, "rademacher"),
            Self::Uniform { a, b } => write!(f, "uniform:{a},{b}"),
            Self::Discrete { atoms } => {
                write!(f, "discrete:")?;
                for (i, (v, w)) in atoms.iter().enumerate() {
                    if i > 0 {
                        write!(f, ",")?;
                    }
                    write!(f, "{v}:{w}")?;
                }
                Ok(())
            }
        }
    }
}
