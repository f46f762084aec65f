//! Browser bindings for the solver. Every export takes and returns JSON strings;
//! failures come back as `{"error": "..."}`.

use serde_json::{json, Value};
use wasm_bindgen::prelude::*;

use ssc_fw::directions::MethodState;
use ssc_fw::domains::Domain;
use ssc_fw::harness::config::DomainSpec;
use ssc_fw::harness::problem::build_domain;
use ssc_fw::harness::{generate_problem, ProblemConfig};
use ssc_fw::kl_rates::{holder_envelope, sigma_iterates, Desingularizer, RateConstants};
use ssc_fw::model::{from_slice, to_vec, Vector};
use ssc_fw::ssc::{outer_solve, ssc, verify_descent, SolveOptions};

fn respond(r: Result<Value, String>) -> String {
    match r {
        Ok(v) => v.to_string(),
        Err(e) => json!({ "error": e }).to_string(),
    }
}

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn parse_domain(text: &str) -> Result<Domain, String> {
    let spec: DomainSpec = serde_json::from_str(text).map_err(err)?;
    build_domain(&spec).map_err(err)
}

fn solve_impl(config: &str) -> Result<Value, String> {
    let cfg = ProblemConfig::from_json(config).map_err(err)?;
    let pb = generate_problem(&cfg).map_err(err)?;
    let obj = pb.objective.as_ref();
    let opts = SolveOptions { max_iter: cfg.max_iter, eps_stat: cfg.eps_stat, tau: pb.tau, timing: false };
    let trace = outer_solve(obj, &pb.domain, &pb.method, &pb.x0, &opts).map_err(err)?;
    let cert = verify_descent(&trace, obj, &pb.domain, pb.tau);

    let mut state = MethodState::init(&pb.method, &pb.domain, &pb.x0).map_err(err)?;
    let g0 = obj.grad(&pb.x0);
    let (_, chain) = ssc(&pb.x0, &g0, &pb.method, &mut state, &pb.domain, obj.lipschitz()).map_err(err)?;

    let mut path = vec![to_vec(&pb.x0)];
    path.extend(trace.records.iter().map(|r| r.x_next.clone()));
    Ok(json!({
        "tau": pb.tau,
        "lipschitz": obj.lipschitz(),
        "iterations": trace.records.len(),
        "path": path,
        "f": trace.records.iter().map(|r| r.f_next).collect::<Vec<_>>(),
        "gap_proxy": trace.records.iter().map(|r| r.gap_proxy).collect::<Vec<_>>(),
        "cases": trace.records.iter().map(|r| r.termination_case.label()).collect::<Vec<_>>(),
        "certified": cert.passed(),
        "failed": cert.failed_names(),
        "first_chain": { "ys": chain.ys, "case": chain.case.label(), "tilde_index": chain.tilde_index },
    }))
}

/// Runs a full config and returns the outer path, the first inner chain and the certificate.
#[wasm_bindgen]
pub fn solve(config_json: &str) -> String {
    respond(solve_impl(config_json))
}

fn tangent_impl(domain: &str, x: &[f64], g: &[f64]) -> Result<Value, String> {
    let dom = parse_domain(domain)?;
    if x.len() != dom.dim() || g.len() != dom.dim() {
        return Err(format!("expected vectors of length {}", dom.dim()));
    }
    let x = from_slice(x);
    let (p, pi) = dom.tangent_projection(&x, &from_slice(g)).map_err(err)?;
    Ok(json!({ "p": to_vec(&p), "pi": pi, "on_boundary": dom.on_boundary(&x) }))
}

/// Projection of g onto the tangent cone at x, and its norm.
#[wasm_bindgen]
pub fn tangent(domain_json: &str, x: &[f64], g: &[f64]) -> String {
    respond(tangent_impl(domain_json, x, g))
}

fn rates_impl(m: f64, theta: f64, l: f64, tau: f64, f0: f64, k: usize) -> Result<Value, String> {
    let rc = RateConstants::for_ssc(l, tau).map_err(err)?;
    let desing = Desingularizer::power(m, theta).map_err(err)?;
    let sigma = sigma_iterates(&rc, &desing, f0, k).map_err(err)?;
    let envelope = (0..=k)
        .map(|i| holder_envelope(theta, m, rc.a, rc.b, i, f0))
        .collect::<ssc_fw::Result<Vec<_>>>()
        .map_err(err)?;
    Ok(json!({ "a": rc.a, "b": rc.b, "sigma": sigma, "envelope": envelope }))
}

/// σ-iterates of the rate recursion for φ(t) = (M/θ)t^θ next to the closed-form envelope.
#[wasm_bindgen]
pub fn rates(m: f64, theta: f64, l: f64, tau: f64, f0: f64, k: usize) -> String {
    respond(rates_impl(m, theta, l, tau, f0, k))
}

fn outline_impl(domain: &str, samples: usize) -> Result<Value, String> {
    let dom = parse_domain(domain)?;
    if dom.dim() != 2 {
        return Err("outline needs a two-dimensional domain".into());
    }
    if let Some(mut vs) = dom.vertices() {
        let c = dom.barycenter();
        vs.sort_by(|a, b| {
            let ta = (a[1] - c[1]).atan2(a[0] - c[0]);
            let tb = (b[1] - c[1]).atan2(b[0] - c[0]);
            ta.total_cmp(&tb)
        });
        return Ok(json!(vs.iter().map(to_vec).collect::<Vec<_>>()));
    }
    let c = dom.barycenter();
    let reach = 2.0 * dom.diameter();
    let pts: Vec<Vec<f64>> = (0..samples.max(8))
        .map(|i| {
            let t = std::f64::consts::TAU * i as f64 / samples.max(8) as f64;
            let dir = Vector::from_vec(vec![t.cos(), t.sin()]);
            let (mut lo, mut hi) = (0.0, reach);
            for _ in 0..60 {
                let mid = 0.5 * (lo + hi);
                if dom.is_feasible(&(&c + &dir * mid)) {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            to_vec(&(&c + &dir * lo))
        })
        .collect();
    Ok(json!(pts))
}

/// Boundary polyline of a two-dimensional domain, for drawing.
#[wasm_bindgen]
pub fn outline(domain_json: &str, samples: usize) -> String {
    respond(outline_impl(domain_json, samples))
}
