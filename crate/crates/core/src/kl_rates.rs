//! KL rate machinery: desingularizers, the worst-case sequence σ_α, rate
//! envelopes, trace certification and certified slope constants.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use serde::{Deserialize, Serialize};

use crate::directions::{Method, ProductMode};
use crate::domains::{Domain, PolytopeFamily, SmoothKind};
use crate::error::{Error, Result};
use crate::model::{from_slice, RunTrace, Vector};
use crate::pwidth::{box_pwidth, pyramidal_width_bruteforce, simplex_pwidth};
use crate::ssc::k_constant;

type ScalarMap = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Clone)]
pub enum DesingForm {
    /// φ(t) = (M/θ) t^θ
    Power { m: f64, theta: f64 },
    /// φ and a positive nonincreasing φ′ on (0, η).
    General { phi: ScalarMap, phi_prime: ScalarMap },
}

impl std::fmt::Debug for DesingForm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            DesingForm::Power { m, theta } => write!(f, "Power {{ m: {m}, theta: {theta} }}"),
            DesingForm::General { .. } => write!(f, "General"),
        }
    }
}

#[derive(Clone, Debug)]
pub struct Desingularizer {
    pub form: DesingForm,
    pub eta: f64,
    /// KL neighbourhood radius; kept as metadata only.
    pub delta: Option<f64>,
}

impl Desingularizer {
    pub fn power(m: f64, theta: f64) -> Result<Self> {
        if !(m > 0.0 && m.is_finite()) {
            return Err(Error::Domain(format!("M = {m}")));
        }
        if !(theta > 0.0 && theta <= 0.5) {
            return Err(Error::Domain(format!("theta = {theta} outside (0, 1/2]")));
        }
        Ok(Self { form: DesingForm::Power { m, theta }, eta: f64::INFINITY, delta: None })
    }

    pub fn general(
        phi: impl Fn(f64) -> f64 + Send + Sync + 'static,
        phi_prime: impl Fn(f64) -> f64 + Send + Sync + 'static,
        eta: f64,
    ) -> Result<Self> {
        if !(eta > 0.0) {
            return Err(Error::Domain(format!("eta = {eta}")));
        }
        Ok(Self { form: DesingForm::General { phi: Arc::new(phi), phi_prime: Arc::new(phi_prime) }, eta, delta: None })
    }

    pub fn with_eta(mut self, eta: f64) -> Self {
        self.eta = eta;
        self
    }

    pub fn phi(&self, t: f64) -> f64 {
        match &self.form {
            DesingForm::Power { m, theta } => m / theta * t.max(0.0).powf(*theta),
            DesingForm::General { phi, .. } => phi(t),
        }
    }

    pub fn phi_prime(&self, t: f64) -> f64 {
        match &self.form {
            DesingForm::Power { m, theta } => m * t.powf(theta - 1.0),
            DesingForm::General { phi_prime, .. } => phi_prime(t),
        }
    }
}

/// Constants a, b of the descent conditions.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateConstants {
    pub a: f64,
    pub b: f64,
}

impl RateConstants {
    pub fn new(a: f64, b: f64) -> Result<Self> {
        if !(a > 0.0 && b > 0.0 && a.is_finite() && b.is_finite()) {
            return Err(Error::Domain(format!("rate constants a={a} b={b}")));
        }
        Ok(Self { a, b })
    }

    /// a = L/2 and b = 1/K with K = τ/(L(1+τ)).
    pub fn for_ssc(l: f64, tau: f64) -> Result<Self> {
        Self::new(l / 2.0, 1.0 / k_constant(tau, l))
    }

    /// α(t) = (b/√a) φ′(t)
    pub fn alpha_of(&self, desing: &Desingularizer, t: f64) -> f64 {
        self.b / self.a.sqrt() * desing.phi_prime(t)
    }

    /// 1/α(s)², evaluated without forming α for power desingularizers.
    fn inv_alpha_sq(&self, desing: &Desingularizer, s: f64) -> f64 {
        match &desing.form {
            DesingForm::Power { m, theta } => self.a / (self.b * self.b * m * m) * s.powf(2.0 - 2.0 * theta),
            DesingForm::General { .. } => {
                let al = self.alpha_of(desing, s);
                if al.is_infinite() {
                    0.0
                } else {
                    1.0 / (al * al)
                }
            }
        }
    }
}

/// σ_α(t): the largest s ∈ [0,t] with s + 1/α(s)² ≤ t, or 0 when none exists.
pub fn sigma_alpha(rc: &RateConstants, desing: &Desingularizer, t: f64) -> Result<f64> {
    if !(t >= 0.0 && t < desing.eta) {
        return Err(Error::Domain(format!("t = {t} outside [0, {})", desing.eta)));
    }
    if t == 0.0 {
        return Ok(0.0);
    }
    let resid = |s: f64| s + rc.inv_alpha_sq(desing, s) - t;
    if resid(0.0) > 0.0 {
        return Ok(0.0);
    }
    let (mut lo, mut hi) = (0.0f64, t);
    loop {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if resid(mid) <= 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo)
}

/// [f0, σ(f0), …, σ^{(k)}(f0)]
pub fn sigma_iterates(rc: &RateConstants, desing: &Desingularizer, f0: f64, k: usize) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(k + 1);
    let mut cur = f0;
    sigma_alpha(rc, desing, f0)?;
    out.push(cur);
    for _ in 0..k {
        cur = sigma_alpha(rc, desing, cur)?;
        out.push(cur);
    }
    Ok(out)
}

/// Rate envelope for φ(t) = (M/θ)t^θ started from gap f0.
pub fn holder_envelope(theta: f64, m: f64, a: f64, b: f64, k: usize, f0: f64) -> Result<f64> {
    if !(theta > 0.0 && theta <= 0.5) {
        return Err(Error::Domain(format!("theta = {theta} outside (0, 1/2]")));
    }
    let c = a / (b * b * m * m);
    if theta == 0.5 {
        return Ok(f0 * (1.0 + c).powf(-(k as f64)));
    }
    let r = 1.0 / (1.0 - 2.0 * theta);
    let p = f0.max((2f64.powf(r + 2.0) * r * b * b * m * m / a).powf(r));
    Ok(p / ((k + 1) as f64).powf(r))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateCertificate {
    pub name: String,
    pub inequality: String,
    pub passed_at: Vec<bool>,
    pub lhs: Vec<f64>,
    pub rhs: Vec<f64>,
    pub worst_violation: f64,
    pub tol: f64,
    pub notes: Vec<String>,
}

impl RateCertificate {
    pub fn passed(&self) -> bool {
        self.passed_at.iter().all(|&b| b)
    }

    pub fn first_failure(&self) -> Option<usize> {
        self.passed_at.iter().position(|&b| !b)
    }

    fn record(&mut self, lhs: f64, rhs: f64, extra_ok: bool) {
        let viol = lhs - rhs;
        let ok = extra_ok && viol <= self.tol && lhs.is_finite() && rhs.is_finite();
        self.passed_at.push(ok);
        self.lhs.push(lhs);
        self.rhs.push(rhs);
        if viol > self.worst_violation || viol.is_nan() {
            self.worst_violation = if viol.is_nan() { f64::INFINITY } else { viol };
        }
    }
}

const ASSUMED_NOTE: &str = "KL neighbourhood condition on (delta, eta) is assumed, not checked";

/// Iterates x_0, …, x_N of a run with their objective values.
fn iterate_sequence(run: &RunTrace) -> (Vec<Vector>, Vec<f64>) {
    let mut xs: Vec<Vector> = run.records.iter().map(|r| from_slice(&r.x_k)).collect();
    let mut fs: Vec<f64> = run.records.iter().map(|r| r.f_k).collect();
    if let Some(last) = run.records.last() {
        if last.x_next != last.x_k {
            xs.push(from_slice(&last.x_next));
            fs.push(last.f_next);
        }
    }
    (xs, fs)
}

/// f(x_k) − f* ≤ σ^{(k)}(f(x_0) − f*) at every recorded k.
pub fn certify_objective_rate(
    run: &RunTrace,
    desing: &Desingularizer,
    rc: &RateConstants,
    f_star: f64,
) -> Result<RateCertificate> {
    let (_, fs) = iterate_sequence(run);
    let f0 = fs.first().copied().unwrap_or(0.0);
    let tol = 1e-9 * (1.0 + f0.abs());
    let mut cert = RateCertificate {
        name: "objective_rate".into(),
        inequality: "f(x_k) − f* ≤ σ^{(k)}(f(x_0) − f*)".into(),
        passed_at: Vec::new(),
        lhs: Vec::new(),
        rhs: Vec::new(),
        worst_violation: 0.0,
        tol,
        notes: vec![ASSUMED_NOTE.into()],
    };
    if fs.is_empty() {
        return Ok(cert);
    }
    let sig = sigma_iterates(rc, desing, (f0 - f_star).max(0.0), fs.len() - 1)?;
    for (k, &fk) in fs.iter().enumerate() {
        let gap = fk - f_star;
        cert.record(gap, sig[k], gap >= -tol);
    }
    if cert.passed_at.iter().zip(&cert.lhs).any(|(ok, g)| !ok && *g < -tol) {
        cert.notes.push("f* exceeds a recorded objective value".into());
    }
    Ok(cert)
}

/// Σ_{i≥k} ‖x_{i+1} − x_i‖ ≤ (b/a)φ(gap_k) + 2√((gap_k − σ(gap_k))/a) at every k.
pub fn certify_tail_length(
    run: &RunTrace,
    desing: &Desingularizer,
    rc: &RateConstants,
    f_star: f64,
) -> Result<RateCertificate> {
    let (xs, fs) = iterate_sequence(run);
    let x0n = xs.first().map_or(0.0, |x| x.norm());
    let f0 = fs.first().copied().unwrap_or(0.0);
    let tol = 1e-9 * (1.0 + x0n);
    let gap_tol = 1e-9 * (1.0 + f0.abs());
    let mut cert = RateCertificate {
        name: "tail_length".into(),
        inequality: "Σ_{i≥k}‖x_{i+1} − x_i‖ ≤ (b/a)φ(f(x_k) − f*) + 2√((f(x_k) − f* − σ(f(x_k) − f*))/a)".into(),
        passed_at: Vec::new(),
        lhs: Vec::new(),
        rhs: Vec::new(),
        worst_violation: 0.0,
        tol,
        notes: vec![ASSUMED_NOTE.into()],
    };
    let n = xs.len();
    let mut tails = vec![0.0; n];
    for i in (0..n.saturating_sub(1)).rev() {
        tails[i] = tails[i + 1] + (&xs[i + 1] - &xs[i]).norm();
    }
    for k in 0..n {
        let raw = fs[k] - f_star;
        let gap = raw.max(0.0);
        let sig = sigma_alpha(rc, desing, gap)?;
        let rhs = rc.b / rc.a * desing.phi(gap) + 2.0 * ((gap - sig).max(0.0) / rc.a).sqrt();
        cert.record(tails[k], rhs, raw >= -gap_tol);
    }
    Ok(cert)
}

/// Default sampling resolution for brute-force widths.
pub const PWIDTH_GRID: usize = 6;

/// Certified slope constant τ for a (domain, method) pair.
pub fn theoretical_tau(dom: &Domain, method: &Method) -> Result<f64> {
    method.check_admissible(dom)?;
    let unsupported = || Err(Error::UnsupportedPair(format!("no slope bound for {} on {}", method.name(), dom.name())));
    match (dom, method) {
        (Domain::Polytope(_), Method::Fw) => unsupported(),
        (Domain::Polytope(p), Method::Pfw | Method::Afw | Method::Fdfw) => {
            let d = dom.diameter();
            if p.dim < 2 && p.family == PolytopeFamily::Simplex {
                return unsupported();
            }
            let pw = polytope_pwidth(dom)?;
            Ok(match method {
                Method::Pfw => pw / d,
                _ => pw / (2.0 * d),
            })
        }
        (Domain::Sublevel(s), Method::Fdfw) => Ok(s.mu_h() / (2.0 * s.l_h())),
        (Domain::Smooth(b), Method::Fdfw) => {
            let SmoothKind::LpBall { p } = b.kind;
            if p == 2.0 {
                Ok(0.5)
            } else if b.dim == 2 {
                let interior = 0.5 * 2f64.powf(-(0.5 - 1.0 / p).abs());
                Ok(interior.min(lp_planar_boundary_bound(p)))
            } else {
                unsupported()
            }
        }
        (_, Method::Sor { tau_bar, .. }) => Ok(*tau_bar),
        (Domain::Product(pd), Method::Product { mode, blocks }) => {
            let mut worst = f64::INFINITY;
            for (b, m) in pd.blocks().iter().zip(blocks) {
                worst = worst.min(theoretical_tau(b, m)?);
            }
            Ok(match mode {
                ProductMode::Case1 => worst,
                ProductMode::Case2 => worst / blocks.len() as f64,
            })
        }
        _ => unsupported(),
    }
}

/// Pyramidal width of a structured polytope: closed forms for simplices and
/// cubes, brute force for small cross-polytopes.
pub fn polytope_pwidth(dom: &Domain) -> Result<f64> {
    let Domain::Polytope(p) = dom else {
        return Err(Error::InvalidInput(format!("{} is not a polytope", dom.name())));
    };
    match p.family {
        PolytopeFamily::Simplex => Ok(simplex_pwidth(p.dim, p.scale)),
        PolytopeFamily::Box => Ok(box_pwidth(p.dim, p.scale)),
        PolytopeFamily::L1Ball => {
            if p.dim > 3 {
                return Err(Error::UnsupportedPair(format!(
                    "pyramidal width of the l1 ball in dimension {} is not available",
                    p.dim
                )));
            }
            let unit: Vec<Vector> = Domain::l1_ball(p.dim, 1.0).vertices().unwrap_or_default();
            Ok(p.scale * pyramidal_width_bruteforce(&unit, PWIDTH_GRID)?.value)
        }
    }
}

const LP_BOUNDARY_SAMPLES: usize = 2048;
const LP_BOUNDARY_SAFETY: f64 = 0.9;

/// Lower bound for FW slopes on the boundary of a planar lp ball, from
/// inf ⟨n(y), y − x⟩ / (‖n(x) − n(y)‖ ‖y − x‖) over boundary pairs with unit
/// normals n, sampled on an angular grid and shrunk by a safety factor.
pub fn lp_planar_boundary_bound(p: f64) -> f64 {
    static CACHE: OnceLock<Mutex<HashMap<u64, f64>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(v) = cache.lock().unwrap().get(&p.to_bits()) {
        return *v;
    }
    let n = LP_BOUNDARY_SAMPLES;
    let pts: Vec<([f64; 2], [f64; 2])> = (0..n)
        .map(|i| {
            let th = std::f64::consts::TAU * (i as f64 + 0.5) / n as f64;
            let (s, c) = th.sin_cos();
            let nrm = (c.abs().powf(p) + s.abs().powf(p)).powf(1.0 / p);
            let x = [c / nrm, s / nrm];
            let j = [x[0].signum() * x[0].abs().powf(p - 1.0), x[1].signum() * x[1].abs().powf(p - 1.0)];
            let jn = j[0].hypot(j[1]);
            (x, [j[0] / jn, j[1] / jn])
        })
        .collect();
    let mut best = f64::INFINITY;
    for (y, jy) in &pts {
        for (x, jx) in &pts {
            let d = [y[0] - x[0], y[1] - x[1]];
            let dn = d[0].hypot(d[1]);
            let jd = (jx[0] - jy[0]).hypot(jx[1] - jy[1]);
            if dn < 1e-12 || jd < 1e-15 {
                continue;
            }
            best = best.min((jy[0] * d[0] + jy[1] * d[1]) / (jd * dn));
        }
    }
    let v = LP_BOUNDARY_SAFETY * best;
    cache.lock().unwrap().insert(p.to_bits(), v);
    v
}
