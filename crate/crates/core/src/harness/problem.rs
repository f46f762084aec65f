//! Deterministic problem generation from configs.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::config::{DomainSpec, MatrixSpec, ObjectiveSpec, ProblemConfig, StartSpec, TauSource, VectorSpec};
use crate::directions::Method;
use crate::domains::{Domain, SublevelSet};
use crate::error::{Error, Result};
use crate::kl_rates::theoretical_tau;
use crate::model::{FnObjective, Linear, Matrix, Objective, Quadratic, Vector};

pub struct Problem {
    pub objective: Box<dyn Objective>,
    pub domain: Domain,
    pub x0: Vector,
    pub method: Method,
    pub tau: f64,
    /// Kept for reference solves on quadratic objectives.
    pub quadratic: Option<Quadratic>,
}

/// Random orthogonal matrix from the QR factor of a Gaussian matrix.
pub fn random_orthogonal(n: usize, rng: &mut ChaCha8Rng) -> Matrix {
    let g = Matrix::from_fn(n, n, |_, _| rng.sample::<f64, _>(StandardNormal));
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..n {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    q
}

fn conjugate(u: &Matrix, lambda: &[f64]) -> Matrix {
    let d = Matrix::from_diagonal(&Vector::from_column_slice(lambda));
    let m = u * d * u.transpose();
    (&m + m.transpose()) * 0.5
}

/// Symmetric matrix with spectrum in [mu, l]; both ends are eigenvalues when n ≥ 2.
pub fn random_spd(n: usize, seed: u64, mu: f64, l: f64) -> Result<Matrix> {
    if !(mu > 0.0 && l >= mu && l.is_finite()) {
        return Err(Error::Config(format!("random-spd needs 0 < mu ≤ l, got mu={mu} l={l}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let u = random_orthogonal(n, &mut rng);
    let lambda: Vec<f64> = (0..n)
        .map(|i| match i {
            0 => mu,
            _ if i == n - 1 => l,
            _ => mu + (l - mu) * rng.gen::<f64>(),
        })
        .collect();
    Ok(conjugate(&u, &lambda))
}

/// Symmetric matrix with spectrum in [−scale, scale] and at least one negative eigenvalue.
pub fn random_indefinite(n: usize, seed: u64, scale: f64) -> Result<Matrix> {
    if !(scale > 0.0) {
        return Err(Error::Config(format!("random-indefinite scale {scale}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let u = random_orthogonal(n, &mut rng);
    let lambda: Vec<f64> =
        (0..n).map(|i| if i == 0 { -scale } else { scale * (2.0 * rng.gen::<f64>() - 1.0) }).collect();
    Ok(conjugate(&u, &lambda))
}

pub fn build_matrix(spec: &MatrixSpec, n: usize) -> Result<Matrix> {
    match spec {
        MatrixSpec::Identity => Ok(Matrix::identity(n, n)),
        MatrixSpec::Explicit { rows } => {
            if rows.len() != n || rows.iter().any(|r| r.len() != n) {
                return Err(Error::Config(format!("explicit matrix must be {n}x{n}")));
            }
            Ok(Matrix::from_fn(n, n, |i, j| rows[i][j]))
        }
        MatrixSpec::RandomSpd { seed, mu, l } => random_spd(n, *seed, *mu, *l),
        MatrixSpec::RandomIndefinite { seed, scale } => random_indefinite(n, *seed, *scale),
    }
}

pub fn build_vector(spec: &VectorSpec, n: usize) -> Result<Vector> {
    match spec {
        VectorSpec::Zero => Ok(Vector::zeros(n)),
        VectorSpec::Explicit { values } => {
            if values.len() != n {
                return Err(Error::Config(format!("vector has length {} (expected {n})", values.len())));
            }
            Ok(Vector::from_column_slice(values))
        }
        VectorSpec::Random { seed, scale } => {
            let mut rng = ChaCha8Rng::seed_from_u64(*seed);
            Ok(Vector::from_fn(n, |_, _| scale * rng.sample::<f64, _>(StandardNormal)))
        }
    }
}

pub fn build_domain(spec: &DomainSpec) -> Result<Domain> {
    let positive = |what: &str, v: f64| {
        if v > 0.0 && v.is_finite() {
            Ok(())
        } else {
            Err(Error::Config(format!("{what} must be positive, got {v}")))
        }
    };
    match spec {
        DomainSpec::Simplex { dim, scale } => {
            positive("scale", *scale)?;
            Ok(Domain::simplex(*dim, *scale))
        }
        DomainSpec::L1Ball { dim, scale } => {
            positive("scale", *scale)?;
            Ok(Domain::l1_ball(*dim, *scale))
        }
        DomainSpec::Box { dim, scale } => {
            positive("scale", *scale)?;
            Ok(Domain::cube(*dim, *scale))
        }
        DomainSpec::LpBall { dim, p, radius } => Domain::lp_ball(*dim, *p, *radius),
        DomainSpec::Sublevel { dim, hessian, center, level } => {
            let h = build_matrix(hessian, *dim)?;
            let c = match center {
                Some(c) => build_vector(&VectorSpec::Explicit { values: c.clone() }, *dim)?,
                None => Vector::zeros(*dim),
            };
            Ok(Domain::sublevel(SublevelSet::new(h, c, *level)?))
        }
        DomainSpec::Product { blocks } => Domain::product(blocks.iter().map(build_domain).collect::<Result<Vec<_>>>()?),
    }
}

fn rosenbrock(x: &Vector) -> f64 {
    (0..x.len().saturating_sub(1)).map(|i| 100.0 * (x[i + 1] - x[i] * x[i]).powi(2) + (1.0 - x[i]).powi(2)).sum()
}

fn rosenbrock_grad(x: &Vector) -> Vector {
    let n = x.len();
    let mut g = Vector::zeros(n);
    for i in 0..n.saturating_sub(1) {
        let r = x[i + 1] - x[i] * x[i];
        g[i] += -400.0 * x[i] * r - 2.0 * (1.0 - x[i]);
        g[i + 1] += 200.0 * r;
    }
    g
}

/// Builds objective, domain, start point and certified τ from a config.
pub fn generate_problem(cfg: &ProblemConfig) -> Result<Problem> {
    cfg.validate()?;
    let domain = build_domain(&cfg.domain)?;
    let n = domain.dim();
    cfg.method.check_admissible(&domain)?;
    let (objective, quadratic): (Box<dyn Objective>, Option<Quadratic>) = match &cfg.objective {
        ObjectiveSpec::Quadratic { q, b } => {
            let mut quad = Quadratic::new(build_matrix(q, n)?, build_vector(b, n)?)?;
            if let Some(l) = cfg.lipschitz {
                quad = quad.with_lipschitz(l)?;
            }
            (Box::new(quad.clone()), Some(quad))
        }
        ObjectiveSpec::Linear { c, lipschitz } => {
            let l = cfg.lipschitz.unwrap_or(*lipschitz);
            (Box::new(Linear { c: build_vector(c, n)?, lipschitz: l }), None)
        }
        ObjectiveSpec::Rosenbrock => {
            let l =
                cfg.lipschitz.ok_or_else(|| Error::Config("rosenbrock needs an explicit lipschitz constant".into()))?;
            (Box::new(FnObjective::new(n, l, rosenbrock, rosenbrock_grad)), None)
        }
    };
    let x0 = match &cfg.start {
        StartSpec::Barycenter => domain.barycenter(),
        StartSpec::Random => domain.random_point(&mut ChaCha8Rng::seed_from_u64(cfg.seed)),
        StartSpec::Point(p) => build_vector(&VectorSpec::Explicit { values: p.clone() }, n)?,
    };
    domain.check_feasible(&x0)?;
    let tau = match cfg.tau {
        TauSource::Theoretical => theoretical_tau(&domain, &cfg.method)?,
        TauSource::User { value } => value,
    };
    Ok(Problem { objective, domain, x0, method: cfg.method.clone(), tau, quadratic })
}
