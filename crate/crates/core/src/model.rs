//! Vectors, objectives and run records.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Vector = DVector<f64>;
pub type Matrix = DMatrix<f64>;

/// A smooth objective with an explicit gradient Lipschitz constant.
pub trait Objective: Send + Sync {
    fn dim(&self) -> usize;
    fn eval(&self, x: &Vector) -> f64;
    fn grad(&self, x: &Vector) -> Vector;
    fn lipschitz(&self) -> f64;
}

/// f(x) = ½ xᵀQx − bᵀx.
#[derive(Clone, Debug)]
pub struct Quadratic {
    q: Matrix,
    b: Vector,
    lipschitz: f64,
}

impl Quadratic {
    pub fn new(q: Matrix, b: Vector) -> Result<Self> {
        if !q.is_square() || q.nrows() != b.len() {
            return Err(Error::InvalidInput(format!("Q is {}x{} but b has length {}", q.nrows(), q.ncols(), b.len())));
        }
        if q.iter().chain(b.iter()).any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("non-finite entry".into()));
        }
        let scale = q.amax().max(f64::MIN_POSITIVE);
        let asym = (&q - q.transpose()).amax();
        if asym > 1e-12 * scale {
            return Err(Error::InvalidInput(format!("Q is not symmetric (relative asymmetry {:.3e})", asym / scale)));
        }
        let lipschitz = spectral_radius(&q, 1e-10);
        Ok(Self { q, b, lipschitz })
    }

    /// Same objective with a caller-supplied constant (must still dominate the spectrum).
    pub fn with_lipschitz(mut self, l: f64) -> Result<Self> {
        if !(l.is_finite() && l > 0.0) {
            return Err(Error::InvalidInput(format!("lipschitz constant {l}")));
        }
        self.lipschitz = l;
        Ok(self)
    }

    pub fn q(&self) -> &Matrix {
        &self.q
    }

    pub fn b(&self) -> &Vector {
        &self.b
    }
}

impl Objective for Quadratic {
    fn dim(&self) -> usize {
        self.b.len()
    }

    fn eval(&self, x: &Vector) -> f64 {
        0.5 * x.dot(&(&self.q * x)) - self.b.dot(x)
    }

    fn grad(&self, x: &Vector) -> Vector {
        &self.q * x - &self.b
    }

    fn lipschitz(&self) -> f64 {
        self.lipschitz
    }
}

/// Spectral radius of a symmetric matrix by power iteration.
///
/// Stops once the eigen-residual ‖Qv − λv‖ drops below `tol·|λ|` and returns
/// |λ| + ‖Qv − λv‖, which is never below the eigenvalue the iteration locked onto.
pub fn spectral_radius(q: &Matrix, tol: f64) -> f64 {
    let n = q.nrows();
    if n == 0 {
        return 0.0;
    }
    let mut v = Vector::from_fn(n, |i, _| 1.0 + 0.1 * ((i * 7919 % 104729) as f64 / 104729.0));
    v /= v.norm();
    let mut lambda = 0.0;
    let mut resid = f64::INFINITY;
    for _ in 0..200_000 {
        let w = q * &v;
        lambda = v.dot(&w);
        resid = (&w - &v * lambda).norm();
        let wn = w.norm();
        if wn == 0.0 {
            return 0.0;
        }
        if resid <= tol * lambda.abs() {
            break;
        }
        v = w / wn;
    }
    lambda.abs() + resid
}

/// f(x) = ⟨c, x⟩ with a nominal Lipschitz constant.
#[derive(Clone, Debug)]
pub struct Linear {
    pub c: Vector,
    pub lipschitz: f64,
}

impl Objective for Linear {
    fn dim(&self) -> usize {
        self.c.len()
    }
    fn eval(&self, x: &Vector) -> f64 {
        self.c.dot(x)
    }
    fn grad(&self, _x: &Vector) -> Vector {
        self.c.clone()
    }
    fn lipschitz(&self) -> f64 {
        self.lipschitz
    }
}

type ScalarFn = Box<dyn Fn(&Vector) -> f64 + Send + Sync>;
type GradFn = Box<dyn Fn(&Vector) -> Vector + Send + Sync>;

/// Objective assembled from closures.
pub struct FnObjective {
    dim: usize,
    lipschitz: f64,
    f: ScalarFn,
    g: GradFn,
}

impl FnObjective {
    pub fn new(
        dim: usize,
        lipschitz: f64,
        f: impl Fn(&Vector) -> f64 + Send + Sync + 'static,
        g: impl Fn(&Vector) -> Vector + Send + Sync + 'static,
    ) -> Self {
        Self { dim, lipschitz, f: Box::new(f), g: Box::new(g) }
    }
}

impl Objective for FnObjective {
    fn dim(&self) -> usize {
        self.dim
    }
    fn eval(&self, x: &Vector) -> f64 {
        (self.f)(x)
    }
    fn grad(&self, x: &Vector) -> Vector {
        (self.g)(x)
    }
    fn lipschitz(&self) -> f64 {
        self.lipschitz
    }
}

/// max_i |(f(x+he_i) − f(x−he_i))/2h − ∇f(x)_i|
pub fn finite_difference_grad_check(obj: &dyn Objective, x: &Vector, h: f64) -> Result<f64> {
    if !(h > 0.0) {
        return Err(Error::InvalidInput(format!("step h = {h}")));
    }
    let g = obj.grad(x);
    let mut worst = 0.0f64;
    let mut xp = x.clone();
    for i in 0..x.len() {
        xp[i] = x[i] + h;
        let fp = obj.eval(&xp);
        xp[i] = x[i] - h;
        let fm = obj.eval(&xp);
        xp[i] = x[i];
        worst = worst.max(((fp - fm) / (2.0 * h) - g[i]).abs());
    }
    Ok(worst)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum TerminationCase {
    Stationary,
    Case1,
    Case2,
    Case3,
    Case4,
}

impl TerminationCase {
    pub fn label(self) -> &'static str {
        match self {
            TerminationCase::Stationary => "stationary",
            TerminationCase::Case1 => "case1",
            TerminationCase::Case2 => "case2",
            TerminationCase::Case3 => "case3",
            TerminationCase::Case4 => "case4",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OuterStepRecord {
    pub k: usize,
    pub x_k: Vec<f64>,
    pub x_tr: Vec<f64>,
    pub x_next: Vec<f64>,
    pub x_tilde: Vec<f64>,
    pub f_k: f64,
    pub f_tr: f64,
    pub f_next: f64,
    pub f_tilde: f64,
    pub inner_steps: usize,
    pub maximal_steps: usize,
    pub termination_case: TerminationCase,
    pub pi_tilde: f64,
    pub gap_proxy: f64,
    pub wall_ms: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunTrace {
    pub records: Vec<OuterStepRecord>,
    pub config_hash: String,
    pub wall_time: f64,
    pub lipschitz: f64,
    pub tau: f64,
}

impl RunTrace {
    pub fn final_f(&self) -> f64 {
        self.records.last().map(|r| r.f_next).unwrap_or(f64::NAN)
    }

    pub fn final_x(&self) -> Option<&[f64]> {
        self.records.last().map(|r| r.x_next.as_slice())
    }
}

pub fn to_vec(v: &Vector) -> Vec<f64> {
    v.iter().copied().collect()
}

pub fn from_slice(v: &[f64]) -> Vector {
    Vector::from_column_slice(v)
}
