//! Short step chains and the outer first-order loop.

use serde::{Deserialize, Serialize};

use crate::directions::{advance, select_direction, DirectionChoice, DirectionKind, Method, MethodState};
use crate::domains::Domain;
use crate::error::{Error, Result};
use crate::model::{from_slice, to_vec, Objective, OuterStepRecord, RunTrace, TerminationCase, Vector};

pub const INNER_CAP: usize = 1_000_000;
const BALL_TOL: f64 = 1e-10;
const CASE_TOL: f64 = 1e-9;

/// Two-ball region around x̄ for the frozen gradient g.
#[derive(Clone, Debug)]
pub struct SscRegion {
    pub xbar: Vector,
    pub g: Vector,
    pub l: f64,
}

/// Largest β ≥ 0 with ‖z + βd‖² − ⟨z + βd, w⟩ ≤ r2 (z relative to x̄), or 0 if z is outside.
fn ball_step(z: &Vector, d: &Vector, w: Option<&Vector>, r2: f64, scale2: f64) -> f64 {
    let a = d.norm_squared();
    let (mut b, mut c) = (2.0 * z.dot(d), z.norm_squared() - r2);
    if let Some(w) = w {
        b -= w.dot(d);
        c -= z.dot(w);
    }
    if c > 2.0 * BALL_TOL * scale2 {
        return 0.0;
    }
    let c = c.min(0.0);
    let disc = (b * b - 4.0 * a * c).max(0.0);
    let beta = if b < 0.0 { (-b + disc.sqrt()) / (2.0 * a) } else { -2.0 * c / (b + disc.sqrt()) };
    beta.max(0.0)
}

impl SscRegion {
    pub fn new(xbar: Vector, g: Vector, l: f64) -> Self {
        Self { xbar, g, l }
    }

    /// L‖y − x̄‖² − ⟨y − x̄, g⟩, nonpositive inside B̄.
    pub fn bar_residual(&self, y: &Vector) -> f64 {
        let z = y - &self.xbar;
        self.l * z.norm_squared() - z.dot(&self.g)
    }

    /// β for B̄ = B(x̄ + g/2L, ‖g‖/2L).
    pub fn beta_bar(&self, y: &Vector, d: &Vector) -> f64 {
        let z = y - &self.xbar;
        let w = &self.g / self.l;
        let r = self.g.norm() / (2.0 * self.l);
        ball_step(&z, d, Some(&w), 0.0, r * r)
    }

    /// β for B_j = B(x̄, radius).
    pub fn beta_j(&self, y: &Vector, d: &Vector, radius: f64) -> f64 {
        let z = y - &self.xbar;
        ball_step(&z, d, None, radius * radius, radius * radius)
    }

    /// β_j = β_max(Ω_j, y, d), zero when y ∉ Ω_j.
    pub fn beta_step(&self, y: &Vector, d: &Vector, j_radius: f64) -> f64 {
        self.beta_bar(y, d).min(self.beta_j(y, d, j_radius))
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct InnerStep {
    pub d: Vec<f64>,
    pub alpha: f64,
    pub beta: f64,
    pub alpha_max: f64,
    pub was_maximal: bool,
    pub kind: DirectionKind,
    /// ⟨g, d̂_j⟩
    pub slope: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SscTrace {
    /// y_0, …, y_T
    pub ys: Vec<Vec<f64>>,
    pub steps: Vec<InnerStep>,
    pub case: TerminationCase,
    pub t: usize,
    pub tilde_index: usize,
}

impl SscTrace {
    pub fn maximal_steps(&self) -> usize {
        self.steps.iter().filter(|s| s.was_maximal).count()
    }
}

/// Index of x̃ within the inner sequence.
pub fn classify_and_tilde(case: TerminationCase, t: usize, slopes: &[f64]) -> usize {
    match case {
        TerminationCase::Stationary | TerminationCase::Case1 | TerminationCase::Case2 => t,
        TerminationCase::Case3 => t.saturating_sub(1),
        TerminationCase::Case4 => {
            let upto = t.min(slopes.len());
            let mut best = 0;
            for j in 1..upto {
                if slopes[j] < slopes[best] {
                    best = j;
                }
            }
            best
        }
    }
}

/// Called with (y, g, choice) at every direction selection.
pub type Observer<'a> = dyn FnMut(&Vector, &Vector, &DirectionChoice) + 'a;

/// Runs SSC(x̄, g).
pub fn ssc(
    xbar: &Vector,
    g: &Vector,
    method: &Method,
    state: &mut MethodState,
    dom: &Domain,
    l: f64,
) -> Result<(Vector, SscTrace)> {
    ssc_observed(xbar, g, method, state, dom, l, None)
}

pub fn ssc_observed(
    xbar: &Vector,
    g: &Vector,
    method: &Method,
    state: &mut MethodState,
    dom: &Domain,
    l: f64,
    mut observer: Option<&mut Observer<'_>>,
) -> Result<(Vector, SscTrace)> {
    if !(l > 0.0) {
        return Err(Error::InvalidInput(format!("lipschitz constant {l}")));
    }
    let region = SscRegion::new(xbar.clone(), g.clone(), l);
    let s = dom.lmo(g);
    let mut y = xbar.clone();
    let mut ys = vec![to_vec(&y)];
    let mut steps: Vec<InnerStep> = Vec::new();
    let mut slopes: Vec<f64> = Vec::new();
    for j in 0..INNER_CAP {
        // Phase I
        let choice = select_direction(method, dom, &y, g, state, &s)?;
        if let Some(obs) = observer.as_deref_mut() {
            obs(&y, g, &choice);
        }
        if choice.is_zero() {
            let tilde = classify_and_tilde(TerminationCase::Case1, j, &slopes);
            return Ok((y, SscTrace { ys, steps, case: TerminationCase::Case1, t: j, tilde_index: tilde }));
        }
        // Phase II
        let dn = choice.d.norm();
        let slope = g.dot(&choice.d) / dn;
        let radius = slope / l;
        let b_bar = region.beta_bar(&y, &choice.d);
        let b_j = region.beta_j(&y, &choice.d, radius);
        let beta = b_bar.min(b_j);
        let alpha = choice.alpha_max.min(beta);
        if !(alpha > 0.0) {
            let tilde = classify_and_tilde(TerminationCase::Case2, j, &slopes);
            return Ok((y, SscTrace { ys, steps, case: TerminationCase::Case2, t: j, tilde_index: tilde }));
        }
        // Phase III
        let was_maximal = alpha == choice.alpha_max;
        y = advance(dom, state, &y, &choice, alpha)?;
        ys.push(to_vec(&y));
        slopes.push(slope);
        steps.push(InnerStep {
            d: to_vec(&choice.d),
            alpha,
            beta,
            alpha_max: choice.alpha_max,
            was_maximal,
            kind: choice.kind,
            slope,
        });
        if alpha == beta {
            let case = if b_bar <= b_j * (1.0 + CASE_TOL) { TerminationCase::Case4 } else { TerminationCase::Case3 };
            let t = j + 1;
            let tilde = classify_and_tilde(case, t, &slopes);
            return Ok((y, SscTrace { ys, steps, case, t, tilde_index: tilde }));
        }
    }
    Err(Error::NonTermination(INNER_CAP))
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChainStats {
    pub steps: usize,
    pub maximal_steps: usize,
    pub ended_stationary: bool,
}

/// Applies the oracle with a frozen gradient, always taking the maximal step,
/// until no descent direction remains.
pub fn frozen_linear_chain(
    dom: &Domain,
    method: &Method,
    state: &mut MethodState,
    x: &Vector,
    g: &Vector,
    cap: usize,
) -> Result<ChainStats> {
    let s = dom.lmo(g);
    let mut y = x.clone();
    let mut stats = ChainStats::default();
    for _ in 0..cap {
        let choice = select_direction(method, dom, &y, g, state, &s)?;
        if choice.is_zero() {
            stats.ended_stationary = true;
            return Ok(stats);
        }
        if !choice.alpha_max.is_finite() || !(choice.alpha_max > 0.0) {
            return Err(Error::NumericConsistency(format!("maximal step {}", choice.alpha_max)));
        }
        y = advance(dom, state, &y, &choice, choice.alpha_max)?;
        stats.steps += 1;
        stats.maximal_steps += 1;
    }
    Ok(stats)
}

#[derive(Clone, Debug)]
pub struct SolveOptions {
    pub max_iter: usize,
    pub eps_stat: f64,
    pub tau: f64,
    pub timing: bool,
}

impl SolveOptions {
    pub fn new(tau: f64) -> Self {
        Self { max_iter: 1000, eps_stat: 1e-8, tau, timing: false }
    }
}

/// K = τ / (L(1+τ)).
pub fn k_constant(tau: f64, l: f64) -> f64 {
    tau / (l * (1.0 + tau))
}

pub type Step4Hook<'a> = dyn FnMut(&Vector, &Vector) -> Option<Vector> + 'a;

pub fn outer_solve(
    obj: &dyn Objective,
    dom: &Domain,
    method: &Method,
    x0: &Vector,
    opts: &SolveOptions,
) -> Result<RunTrace> {
    outer_solve_with(obj, dom, method, x0, opts, None, None)
}

/// Outer loop with an optional step-4 improvement hook and a direction observer.
pub fn outer_solve_with(
    obj: &dyn Objective,
    dom: &Domain,
    method: &Method,
    x0: &Vector,
    opts: &SolveOptions,
    mut hook: Option<&mut Step4Hook<'_>>,
    mut observer: Option<&mut Observer<'_>>,
) -> Result<RunTrace> {
    dom.check_feasible(x0)?;
    if obj.dim() != dom.dim() {
        return Err(Error::InvalidInput(format!("objective dim {} vs domain dim {}", obj.dim(), dom.dim())));
    }
    if !(opts.tau > 0.0) {
        return Err(Error::InvalidInput(format!("tau {}", opts.tau)));
    }
    let l = obj.lipschitz();
    let kc = k_constant(opts.tau, l);
    let start = if opts.timing { Some(std::time::Instant::now()) } else { None };
    let elapsed = || start.map_or(0.0, |s| s.elapsed().as_secs_f64() * 1e3);
    let mut state = MethodState::init(method, dom, x0)?;
    let mut x = x0.clone();
    let mut fx = obj.eval(&x);
    let mut records = Vec::new();
    for k in 0..opts.max_iter.max(1) {
        let g = -obj.grad(&x);
        let (x_tr, tr) = ssc_observed(&x, &g, method, &mut state, dom, l, observer.as_deref_mut())?;
        if tr.case == TerminationCase::Case1 && tr.t == 0 {
            let (_, pi) = dom.tangent_projection(&x, &g)?;
            records.push(OuterStepRecord {
                k,
                x_k: to_vec(&x),
                x_tr: to_vec(&x),
                x_next: to_vec(&x),
                x_tilde: to_vec(&x),
                f_k: fx,
                f_tr: fx,
                f_next: fx,
                f_tilde: fx,
                inner_steps: 0,
                maximal_steps: 0,
                termination_case: TerminationCase::Stationary,
                pi_tilde: pi,
                gap_proxy: 0.0,
                wall_ms: elapsed(),
            });
            break;
        }
        let x_tilde = from_slice(&tr.ys[tr.tilde_index]);
        let g_tilde = -obj.grad(&x_tilde);
        let (_, pi_tilde) = dom.tangent_projection(&x_tilde, &g_tilde)?;
        let f_tr = obj.eval(&x_tr);
        let mut x_next = x_tr.clone();
        let mut f_next = f_tr;
        if let Some(h) = hook.as_deref_mut() {
            if let Some(cand) = h(&x, &x_tr) {
                if dom.is_feasible(&cand) {
                    let fc = obj.eval(&cand);
                    if fc <= f_tr.min(fx - 0.5 * l * (&cand - &x).norm_squared()) {
                        state = MethodState::init(method, dom, &cand)?;
                        x_next = cand;
                        f_next = fc;
                    }
                }
            }
        }
        let gap_proxy = (&x_tr - &x).norm() / kc;
        records.push(OuterStepRecord {
            k,
            x_k: to_vec(&x),
            x_tr: to_vec(&x_tr),
            x_next: to_vec(&x_next),
            x_tilde: to_vec(&x_tilde),
            f_k: fx,
            f_tr,
            f_next,
            f_tilde: obj.eval(&x_tilde),
            inner_steps: tr.steps.len(),
            maximal_steps: tr.maximal_steps(),
            termination_case: tr.case,
            pi_tilde,
            gap_proxy,
            wall_ms: elapsed(),
        });
        x = x_next;
        fx = f_next;
        if gap_proxy <= opts.eps_stat {
            break;
        }
    }
    Ok(RunTrace { records, config_hash: String::new(), wall_time: elapsed() / 1e3, lipschitz: l, tau: opts.tau })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub inequality: String,
    pub checked: usize,
    pub failures: usize,
    pub worst_violation: f64,
    pub first_failure: Option<usize>,
    pub passed_at: Vec<bool>,
}

impl CheckResult {
    pub fn new(name: &str, inequality: &str) -> Self {
        Self {
            name: name.into(),
            inequality: inequality.into(),
            checked: 0,
            failures: 0,
            worst_violation: 0.0,
            first_failure: None,
            passed_at: Vec::new(),
        }
    }

    /// Records `lhs ≤ rhs + tol` at index k.
    pub fn le(&mut self, k: usize, lhs: f64, rhs: f64, tol: f64) {
        let viol = lhs - rhs;
        let ok = viol <= tol && lhs.is_finite() && rhs.is_finite();
        self.push(k, ok, if viol.is_nan() { f64::INFINITY } else { viol });
    }

    pub fn push(&mut self, k: usize, ok: bool, violation: f64) {
        self.checked += 1;
        self.passed_at.push(ok);
        if !ok {
            self.failures += 1;
            self.first_failure.get_or_insert(k);
        }
        if violation > self.worst_violation {
            self.worst_violation = violation;
        }
    }

    pub fn passed(&self) -> bool {
        self.failures == 0
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CertificationReport {
    pub checks: Vec<CheckResult>,
    pub tol: f64,
    pub notes: Vec<String>,
}

impl CertificationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed())
    }

    pub fn failed_names(&self) -> Vec<String> {
        self.checks.iter().filter(|c| !c.passed()).map(|c| c.name.clone()).collect()
    }

    pub fn get(&self, name: &str) -> Option<&CheckResult> {
        self.checks.iter().find(|c| c.name == name)
    }
}

/// Checks the descent inequalities of a run against recomputed values.
pub fn verify_descent(run: &RunTrace, obj: &dyn Objective, dom: &Domain, tau: f64) -> CertificationReport {
    let l = obj.lipschitz();
    let kc = k_constant(tau, l);
    let recs = &run.records;
    let f0 = recs.first().map_or(0.0, |r| r.f_k);
    let tol = 1e-8 * (1.0 + f0.abs());
    let exact = |v: f64| 1e-12 * (1.0 + v.abs());
    let mut index = CheckResult::new("index", "k_i = i");
    let mut feas = CheckResult::new("feasibility", "x_k, x_tr, x_tilde ∈ Ω");
    let mut frec = CheckResult::new("f_record", "recorded f = f(x) at x_k, x_tr, x_tilde, x_next");
    let mut pirec = CheckResult::new("pi_record", "recorded π = π_{x̃}(−∇f(x̃))");
    let mut gaprec = CheckResult::new("gap_record", "gap_proxy = ‖x_tr − x_k‖/K");
    let mut cont = CheckResult::new("continuity", "x_{k+1} of record k = x_k of record k+1");
    let mut step4 = CheckResult::new("step4", "f(x_{k+1}) ≤ min(f(x_tr), f(x_k) − L/2‖x_{k+1} − x_k‖²)");
    let mut h1 = CheckResult::new("H1", "f(x_k) − f(x_tr) ≥ L/2 ‖x_k − x_tr‖²");
    let mut dq2 = CheckResult::new("dq2", "‖x_k − x_tr‖ ≥ K π_{x̃}(−∇f(x̃))");
    let mut xt = CheckResult::new("xtilde", "f(x_tr) ≤ f(x̃) ≤ f(x_k) − L/2 ‖x_k − x̃‖²");
    let mut h2a = CheckResult::new("H'2a", "f(x_k) − f(x_{k+1}) ≥ (L/2) K² π_{x̃}(−∇f(x̃))²");
    let mut qs = CheckResult::new("qsqrk", "min_{i≤k} ‖x_tr − x_i‖/K ≤ √(2(f(x_0) − f_final)/(K² L (k+1)))");
    let mut mono = CheckResult::new("monotone", "f(x_{k+1}) ≤ f(x_k)");
    let f_final = run.final_f();
    let mut running_min = f64::INFINITY;
    for (i, r) in recs.iter().enumerate() {
        index.push(i, r.k == i, if r.k == i { 0.0 } else { 1.0 });
        let xk = from_slice(&r.x_k);
        let xtr = from_slice(&r.x_tr);
        let xtl = from_slice(&r.x_tilde);
        let xn = from_slice(&r.x_next);
        let dims_ok = [&xk, &xtr, &xtl, &xn].iter().all(|v| v.len() == dom.dim());
        if !dims_ok {
            feas.push(i, false, f64::INFINITY);
            continue;
        }
        let worst_viol = [&xk, &xtr, &xtl, &xn].iter().map(|v| dom.violation(v)).fold(0.0, f64::max);
        feas.push(i, worst_viol <= crate::domains::FEAS_TOL, worst_viol);
        let fk = obj.eval(&xk);
        let ftr = obj.eval(&xtr);
        let ftl = obj.eval(&xtl);
        let fnx = obj.eval(&xn);
        let dev = [(r.f_k, fk), (r.f_tr, ftr), (r.f_tilde, ftl), (r.f_next, fnx)]
            .iter()
            .map(|(a, b)| (a - b).abs() - exact(*b))
            .fold(f64::NEG_INFINITY, f64::max);
        frec.push(i, dev <= 0.0, dev.max(0.0));
        let pi = if dom.is_feasible(&xtl) {
            dom.tangent_projection(&xtl, &(-obj.grad(&xtl))).map(|t| t.1).unwrap_or(f64::NAN)
        } else {
            f64::NAN
        };
        pirec.le(i, (r.pi_tilde - pi).abs(), 0.0, 1e-9 * (1.0 + pi.abs()));
        let step = (&xk - &xtr).norm();
        gaprec.le(i, (r.gap_proxy - step / kc).abs(), 0.0, exact(step / kc));
        if let Some(nx) = recs.get(i + 1) {
            let same = nx.x_k == r.x_next && nx.f_k == r.f_next;
            cont.push(i, same, if same { 0.0 } else { 1.0 });
            mono.le(i, fnx, fk, tol);
        }
        step4.le(i, fnx, ftr.min(fk - 0.5 * l * (&xn - &xk).norm_squared()), tol);
        h1.le(i, 0.5 * l * step * step, fk - ftr, tol);
        dq2.le(i, kc * pi, step, tol);
        let a = ftr - ftl;
        let b = ftl - (fk - 0.5 * l * (&xk - &xtl).norm_squared());
        xt.le(i, a.max(b), 0.0, tol);
        h2a.le(i, 0.5 * l * kc * kc * pi * pi, fk - fnx, tol);
        running_min = running_min.min(step / kc);
        let bound = (2.0 * (f0 - f_final).max(0.0) / (kc * kc * l * (i + 1) as f64)).sqrt();
        qs.le(i, running_min, bound, tol);
    }
    CertificationReport {
        checks: vec![index, feas, frec, pirec, gaprec, cont, step4, h1, dq2, xt, h2a, qs, mono],
        tol,
        notes: vec![format!("K = {kc:.6e}, tau = {tau:.6e}, L = {l:.6e}")],
    }
}
