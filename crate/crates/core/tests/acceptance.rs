//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits non-zero
//! if any criterion fails.

use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde_json::{json, Value};

use ssc_fw::directions::{Method, MethodState};
use ssc_fw::domains::{Domain, SublevelSet};
use ssc_fw::harness::config::ProblemConfig;
use ssc_fw::harness::problem::{generate_problem, random_spd};
use ssc_fw::harness::reference::reference_minimize;
use ssc_fw::harness::report::{log_linear_fit, solve_and_report, Report};
use ssc_fw::kl_rates::{
    certify_objective_rate, certify_tail_length, sigma_alpha, sigma_iterates, Desingularizer, RateConstants,
    PWIDTH_GRID,
};
use ssc_fw::model::{from_slice, Vector};
use ssc_fw::pwidth::pyramidal_width_bruteforce;
use ssc_fw::ssc::{frozen_linear_chain, outer_solve_with, SolveOptions};

type Outcome = Result<String, String>;

fn randn(rng: &mut ChaCha8Rng, n: usize) -> Vector {
    Vector::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal))
}

fn config(v: Value) -> ProblemConfig {
    ProblemConfig::from_json(&v.to_string()).unwrap_or_else(|e| panic!("bad config {v}: {e}"))
}

fn objective(kind: usize, seed: u64, n: usize) -> Value {
    match kind % 3 {
        0 => json!({"kind": "quadratic",
                    "q": {"source": "random-spd", "seed": seed, "mu": 0.1, "l": 10.0},
                    "b": {"source": "random", "seed": seed + 1, "scale": 3.0}}),
        1 => json!({"kind": "quadratic",
                    "q": {"source": "random-indefinite", "seed": seed, "scale": 5.0},
                    "b": {"source": "random", "seed": seed + 1, "scale": 3.0}}),
        _ => {
            json!({"kind": "linear", "c": {"source": "random", "seed": seed, "scale": 1.0 + n as f64 / 10.0}, "lipschitz": 1.0})
        }
    }
}

fn problem(name: String, domain: Value, method: Value, kind: usize, seed: u64) -> ProblemConfig {
    let n = domain_dim(&domain);
    config(json!({
        "schema": "ssc-fw/config/v1",
        "name": name,
        "domain": domain,
        "objective": objective(kind, seed, n),
        "method": method,
        "eps_stat": 1e-9,
        "max_iter": 300,
        "seed": seed,
        "start": "random",
    }))
}

fn domain_dim(d: &Value) -> usize {
    match d.get("dim") {
        Some(n) => n.as_u64().unwrap() as usize,
        None => d["blocks"].as_array().unwrap().iter().map(domain_dim).sum(),
    }
}

fn sublevel_spec(rng: &mut ChaCha8Rng, n: usize, seed: u64) -> Value {
    let center: Vec<f64> = (0..n).map(|_| rng.gen_range(-0.5..0.5)).collect();
    json!({"family": "sublevel", "dim": n,
           "hessian": {"source": "random-spd", "seed": seed, "mu": 0.5, "l": 4.0},
           "center": center, "level": 1.0})
}

/// The descent suite shared by criteria 1 to 3.
fn descent_suite() -> Vec<ProblemConfig> {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut out = Vec::new();
    let mut seed = 1000u64;
    let mut next = || {
        seed += 7;
        seed
    };
    for family in ["simplex", "l1_ball", "box"] {
        for method in ["afw", "pfw", "fdfw"] {
            for i in 0..45 {
                let n = match family {
                    "l1_ball" => 2 + i % 2,
                    _ if i % 15 == 14 => 100,
                    _ => rng.gen_range(2..=30),
                };
                let scale: f64 = if family == "l1_ball" { 1.0 } else { [1.0, 2.5][i % 2] };
                let d = json!({"family": family, "dim": n, "scale": scale});
                out.push(problem(format!("{family}-{method}-{i}"), d, json!({"type": method}), i, next()));
            }
        }
    }
    for method in ["fdfw", "sor"] {
        for i in 0..60 {
            let n = rng.gen_range(2..=20);
            let s = next();
            let d = sublevel_spec(&mut rng, n, s);
            out.push(problem(format!("sublevel-{method}-{i}"), d, json!({"type": method}), i, next()));
        }
    }
    for p in [1.5, 2.0, 3.0] {
        for method in ["fdfw", "sor"] {
            for i in 0..60 {
                let n = if method == "fdfw" && p != 2.0 { 2 } else { rng.gen_range(2..=20) };
                let radius = [1.0, 2.0][i % 2];
                let d = json!({"family": "lp_ball", "dim": n, "p": p, "radius": radius});
                out.push(problem(format!("lp{p}-{method}-{i}"), d, json!({"type": method}), i, next()));
            }
        }
    }
    for i in 0..60 {
        let (n1, n2) = (rng.gen_range(2..=10), rng.gen_range(2..=10));
        let d = json!({"family": "product", "blocks": [
            {"family": "simplex", "dim": n1},
            {"family": "lp_ball", "dim": n2, "p": 2.0, "radius": 1.0}]});
        let m = json!({"type": "product", "mode": "case1", "blocks": [{"type": "pfw"}, {"type": "fdfw"}]});
        out.push(problem(format!("product1-{i}"), d, m, i, next()));
    }
    for i in 0..60 {
        let (n1, n2) = (rng.gen_range(2..=10), rng.gen_range(2..=10));
        let s = next();
        let d = json!({"family": "product", "blocks": [
            {"family": "box", "dim": n1, "scale": 1.0},
            sublevel_spec(&mut rng, n2, s)]});
        let m = json!({"type": "product", "mode": "case2", "blocks": [{"type": "afw"}, {"type": "sor"}]});
        out.push(problem(format!("product2-{i}"), d, m, i, next()));
    }
    out
}

struct SuiteRun {
    results: Vec<(String, Result<Report, String>)>,
    seconds: f64,
}

fn run_suite() -> SuiteRun {
    let start = Instant::now();
    let results = descent_suite()
        .into_iter()
        .map(|cfg| {
            let r = solve_and_report(&cfg, false).map(|(_, rep)| rep).map_err(|e| e.to_string());
            (cfg.name, r)
        })
        .collect();
    SuiteRun { results, seconds: start.elapsed().as_secs_f64() }
}

fn check_suite(run: &SuiteRun, names: &[&str]) -> Outcome {
    let mut iterations = 0;
    let mut failures = Vec::new();
    for (name, r) in &run.results {
        match r {
            Err(e) => failures.push(format!("{name}: {e}")),
            Ok(rep) => {
                iterations += rep.iterations;
                for c in names {
                    let check = rep.certification.get(c).expect("check present");
                    if !check.passed() {
                        failures.push(format!(
                            "{name}: {c} first fails at k={:?} (violation {:.3e})",
                            check.first_failure, check.worst_violation
                        ));
                    }
                }
            }
        }
    }
    if failures.is_empty() {
        Ok(format!("{} problems, {} outer iterations, {:.1} s", run.results.len(), iterations, run.seconds))
    } else {
        Err(format!("{} failures, first: {}", failures.len(), failures[0]))
    }
}

fn criterion_1(run: &SuiteRun) -> Outcome {
    if run.results.len() < 1000 {
        return Err(format!("only {} problems", run.results.len()));
    }
    if run.seconds > 300.0 {
        return Err(format!("suite took {:.1} s", run.seconds));
    }
    check_suite(run, &["H1", "dq2", "H'2a"])
}

fn criterion_2(run: &SuiteRun) -> Outcome {
    check_suite(run, &["qsqrk"])
}

/// A random point on a random face of a polytope, or on the boundary of a smooth body.
fn face_point(dom: &Domain, rng: &mut ChaCha8Rng) -> Vector {
    match dom {
        Domain::Polytope(_) => {
            let name = dom.name();
            let x = dom.random_point(rng);
            let n = x.len();
            let scale = dom.diameter();
            if name.starts_with("simplex") {
                let s: f64 = x.sum();
                let keep = rng.gen_range(0..n);
                let mut y = x.map(|v| if rng.gen_bool(0.4) { 0.0 } else { v });
                y[keep] = x[keep];
                let t = y.sum();
                y * (s / t)
            } else if name.starts_with("box") {
                let side = scale / (n as f64).sqrt();
                x.map(|v| match rng.gen_range(0..5) {
                    0 => 0.0,
                    1 => side,
                    _ => v,
                })
            } else {
                let r = 0.5 * scale;
                let y = x.map(|v| if rng.gen_bool(0.3) { 0.0 } else { v });
                let norm = y.lp_norm(1);
                if norm == 0.0 || rng.gen_bool(0.3) {
                    y
                } else {
                    y * (r / norm)
                }
            }
        }
        Domain::Product(pd) => {
            let parts: Vec<Vector> = pd.blocks().iter().map(|b| face_point(b, rng)).collect();
            pd.concat(&parts)
        }
        _ => {
            if rng.gen_bool(0.6) {
                dom.random_boundary_point(rng).unwrap()
            } else {
                dom.random_point(rng)
            }
        }
    }
}

type DomainMaker = Box<dyn Fn(&mut ChaCha8Rng) -> Domain>;

fn chain_domains() -> Vec<(String, DomainMaker)> {
    vec![
        ("simplex".into(), Box::new(|r: &mut ChaCha8Rng| Domain::simplex(r.gen_range(2..=10), 1.0))),
        ("l1_ball".into(), Box::new(|r: &mut ChaCha8Rng| Domain::l1_ball(r.gen_range(2..=10), 1.0))),
        ("box".into(), Box::new(|r: &mut ChaCha8Rng| Domain::cube(r.gen_range(2..=10), 2.0))),
        ("lp1.5".into(), Box::new(|r: &mut ChaCha8Rng| Domain::lp_ball(r.gen_range(2..=10), 1.5, 1.0).unwrap())),
        ("lp2".into(), Box::new(|r: &mut ChaCha8Rng| Domain::lp_ball(r.gen_range(2..=10), 2.0, 1.0).unwrap())),
        ("lp3".into(), Box::new(|r: &mut ChaCha8Rng| Domain::lp_ball(r.gen_range(2..=10), 3.0, 1.0).unwrap())),
        (
            "sublevel".into(),
            Box::new(|r: &mut ChaCha8Rng| {
                let n = r.gen_range(2..=10);
                let h = random_spd(n, r.gen(), 0.5, 4.0).unwrap();
                Domain::sublevel(SublevelSet::new(h, Vector::zeros(n), 1.0).unwrap())
            }),
        ),
    ]
}

fn criterion_3(run: &SuiteRun) -> Outcome {
    let capped: Vec<&String> = run
        .results
        .iter()
        .filter(|(_, r)| matches!(r, Err(e) if e.contains("did not terminate")))
        .map(|(n, _)| n)
        .collect();
    if !capped.is_empty() {
        return Err(format!("inner cap hit on {} runs, first {}", capped.len(), capped[0]));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(33);
    let mut longest = 0;
    for (name, make) in chain_domains() {
        for i in 0..100 {
            let dom = make(&mut rng);
            let n = dom.dim();
            let x = face_point(&dom, &mut rng);
            let g = randn(&mut rng, n);
            let mut state = MethodState::init(&Method::Fdfw, &dom, &x).map_err(|e| e.to_string())?;
            let stats =
                frozen_linear_chain(&dom, &Method::Fdfw, &mut state, &x, &g, n + 2).map_err(|e| e.to_string())?;
            if !stats.ended_stationary || stats.maximal_steps > n + 1 {
                return Err(format!(
                    "{name} #{i} (n={n}): {} maximal steps, stationary={}",
                    stats.maximal_steps, stats.ended_stationary
                ));
            }
            longest = longest.max(stats.maximal_steps);
        }
    }
    Ok(format!("no capped chains in {} runs; 700 frozen linear chains, longest {longest}", run.results.len()))
}

/// Slope constant from a brute-force width, independent of `theoretical_tau`.
fn bruteforce_tau(dom: &Domain, method: &Method) -> f64 {
    let atoms = dom.vertices().expect("polytope");
    let pw = pyramidal_width_bruteforce(&atoms, PWIDTH_GRID).unwrap().value;
    let d = dom.diameter();
    match method {
        Method::Pfw => pw / d,
        _ => pw / (2.0 * d),
    }
}

fn criterion_4() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(44);
    let mut cases: Vec<(String, Domain, Method, f64)> = Vec::new();
    let polys = [
        Domain::simplex(2, 1.0),
        Domain::simplex(3, 1.0),
        Domain::l1_ball(2, 1.0),
        Domain::l1_ball(3, 1.0),
        Domain::cube(2, 1.0),
    ];
    for dom in &polys {
        for method in [Method::Afw, Method::Pfw, Method::Fdfw] {
            let tau = bruteforce_tau(dom, &method);
            for _ in 0..20 {
                cases.push((format!("{} {}", dom.name(), method.name()), dom.clone(), method.clone(), tau));
            }
        }
    }
    for _ in 0..30 {
        let n = rng.gen_range(2..=6);
        let h = random_spd(n, rng.gen(), 0.5, 4.0).unwrap();
        let set = SublevelSet::new(h, Vector::zeros(n), 1.0).unwrap();
        let tau = set.mu_h() / (2.0 * set.l_h());
        cases.push(("sublevel fdfw".into(), Domain::sublevel(set.clone()), Method::Fdfw, tau));
        cases.push(("sublevel sor".into(), Domain::sublevel(set), Method::sor(), 0.5));
        let p = [1.5, 2.0, 3.0][rng.gen_range(0..3)];
        cases.push((format!("lp{p} sor"), Domain::lp_ball(n, p, 1.0).unwrap(), Method::sor(), 0.5));
    }
    let mut checked = 0usize;
    let mut unresolved = 0usize;
    let mut worst = f64::INFINITY;
    for (name, dom, method, tau) in &cases {
        let n = dom.dim();
        let q = random_spd(n, rng.gen(), 0.1, 5.0).unwrap();
        let obj = ssc_fw::model::Quadratic::new(q, randn(&mut rng, n) * 3.0).unwrap();
        let x0 = face_point(dom, &mut rng);
        let opts = SolveOptions { max_iter: 200, eps_stat: 1e-9, tau: *tau, timing: false };
        let mut bad: Option<String> = None;
        let mut observer = |y: &Vector, g: &Vector, choice: &ssc_fw::directions::DirectionChoice| {
            if choice.is_zero() {
                return;
            }
            let pi = dom.tangent_projection(y, g).map(|t| t.1).unwrap_or(f64::NAN);
            if pi.is_nan() || pi <= 1e-12 * (1.0 + g.norm()) {
                return;
            }
            let ratio = g.dot(&choice.d) / (pi * choice.d.norm());
            // Rounding in the stored coordinates of y and y + d perturbs ⟨g, d⟩ by about
            // ε‖g‖(1 + ‖y‖); below that scale the ratio carries no information.
            let resolution = 8.0 * f64::EPSILON * g.norm() * (1.0 + y.norm()) / (pi * choice.d.norm());
            if resolution > *tau {
                unresolved += 1;
                return;
            }
            checked += 1;
            worst = worst.min(ratio - tau);
            if ratio < tau - 1e-8 - resolution && bad.is_none() {
                bad = Some(format!("{name}: ratio {ratio:.6} < τ {tau:.6} at y={y:?}"));
            }
        };
        outer_solve_with(&obj, dom, method, &x0, &opts, None, Some(&mut observer))
            .map_err(|e| format!("{name}: {e}"))?;
        if let Some(b) = bad {
            return Err(b);
        }
    }
    Ok(format!(
        "{checked} direction selections on {} runs, min(ratio − τ) = {worst:.3e}, {unresolved} below rounding resolution",
        cases.len()
    ))
}

fn criterion_5() -> Outcome {
    let mut worst = 0.0f64;
    let mut points = 0;
    for ci in 0..10 {
        let c = 10f64.powf(-2.0 + 4.0 * ci as f64 / 9.0);
        for ei in 0..10 {
            let eta = 10f64.powf(-3.0 + 4.0 * ei as f64 / 9.0);
            let desing = Desingularizer::power(1.0, 0.5).map_err(|e| e.to_string())?.with_eta(eta);
            let rc = RateConstants::new(c, 1.0).map_err(|e| e.to_string())?;
            for ti in 0..10 {
                let t = eta * ti as f64 / 10.0;
                let s = sigma_alpha(&rc, &desing, t).map_err(|e| e.to_string())?;
                let err = (s - t / (1.0 + c)).abs();
                worst = worst.max(err);
                points += 1;
                if err > 1e-12 {
                    return Err(format!("c={c:.3e} η={eta:.3e} t={t:.3e}: σ={s:.17e} vs {:.17e}", t / (1.0 + c)));
                }
            }
            let f0 = 0.999 * eta;
            let k = ((1e9f64).ln() / (1.0 + c).ln()).ceil() as usize + 1;
            let it = sigma_iterates(&rc, &desing, f0, k).map_err(|e| e.to_string())?;
            if !it.windows(2).all(|w| w[1] < w[0]) {
                return Err(format!("c={c:.3e} η={eta:.3e}: iterates not strictly decreasing"));
            }
            let last = *it.last().unwrap();
            if !(last >= 0.0 && last <= 1e-8 * f0) {
                return Err(format!("c={c:.3e} η={eta:.3e}: σ_{k} = {last:.3e} has not decayed"));
            }
        }
    }
    Ok(format!("{points} grid points, max |σ − t/(1+c)| = {worst:.2e}; iterates decrease below 1e-8·σ₀"))
}

fn criterion_6() -> Outcome {
    let start = Instant::now();
    let n = 20;
    let (mu, l, side) = (1.0, 10.0, 10.0);
    let q = random_spd(n, 606, mu, l).map_err(|e| e.to_string())?;
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let xstar = Vector::from_fn(n, |_, _| rng.gen_range(1.0..3.0));
    let b = &q * &xstar;
    let rows: Vec<Vec<f64>> = (0..n).map(|i| q.row(i).iter().copied().collect()).collect();
    // eps_stat keeps f − f* well above the rounding error of evaluating f, which
    // otherwise reads as a zero gap while the iterates still move.
    let cfg = config(json!({
        "schema": "ssc-fw/config/v1", "name": "kl-box",
        "domain": {"family": "box", "dim": n, "scale": side},
        "objective": {"kind": "quadratic", "q": {"source": "explicit", "rows": rows},
                      "b": {"source": "explicit", "values": b.iter().collect::<Vec<_>>()}},
        "method": {"type": "fdfw"}, "eps_stat": 1e-4, "max_iter": 3000,
        "start": {"point": vec![9.0; n]},
    }));
    let pb = generate_problem(&cfg).map_err(|e| e.to_string())?;
    let (tf, report) = solve_and_report(&cfg, false).map_err(|e| e.to_string())?;
    if !report.certification.passed() {
        return Err(format!("descent certificate failed: {:?}", report.certification.failed_names()));
    }
    let solved = q.clone().cholesky().ok_or("Q not positive definite")?.solve(&b);
    let fstar = pb.objective.eval(&solved);
    for (i, r) in tf.trace.records.iter().enumerate() {
        for x in [&r.x_k, &r.x_next] {
            let x = from_slice(x);
            let lhs = pb.objective.grad(&x).norm_squared();
            let rhs = 2.0 * mu * (pb.objective.eval(&x) - fstar);
            if lhs < rhs - 1e-9 * (1.0 + rhs.abs()) {
                return Err(format!("PL fails at k={i}: {lhs:.6e} < {rhs:.6e}"));
            }
        }
    }
    let desing = Desingularizer::power(1.0 / (2.0 * mu).sqrt(), 0.5).map_err(|e| e.to_string())?;
    let rc = RateConstants::for_ssc(l, tf.trace.tau).map_err(|e| e.to_string())?;
    let obj = certify_objective_rate(&tf.trace, &desing, &rc, fstar).map_err(|e| e.to_string())?;
    let tail = certify_tail_length(&tf.trace, &desing, &rc, fstar).map_err(|e| e.to_string())?;
    for c in [&obj, &tail] {
        if !c.passed() {
            let k = c.first_failure().unwrap_or(0);
            return Err(format!(
                "{} fails at k={k} (violation {:.3e}, lhs {:.6e}, rhs {:.6e})",
                c.name, c.worst_violation, c.lhs[k], c.rhs[k]
            ));
        }
    }
    let secs = start.elapsed().as_secs_f64();
    if secs > 1.0 {
        return Err(format!("took {secs:.2} s"));
    }
    Ok(format!(
        "{} iterations, final gap {:.3e}, PL + objective and tail rates hold, {secs:.2} s",
        tf.trace.records.len(),
        tf.trace.final_f() - fstar
    ))
}

fn criterion_7() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let mut worst_gap = f64::NEG_INFINITY;
    let mut worst_slope = f64::NEG_INFINITY;
    let mut worst_r2 = f64::INFINITY;
    let mut runs = 0;
    for i in 0..50 {
        let n = [10, 50][i % 2];
        let seed: u64 = rng.gen_range(1..1_000_000);
        for method in ["afw", "pfw", "fdfw"] {
            let cfg = config(json!({
                "schema": "ssc-fw/config/v1", "name": format!("qp-{i}-{method}"),
                "domain": {"family": "simplex", "dim": n},
                "objective": {"kind": "quadratic",
                              "q": {"source": "random-spd", "seed": seed, "mu": 1.0, "l": 10.0},
                              "b": {"source": "random", "seed": seed + 1, "scale": 2.0}},
                "method": {"type": method}, "eps_stat": 1e-6, "max_iter": 5000,
            }));
            let pb = generate_problem(&cfg).map_err(|e| e.to_string())?;
            let reference =
                reference_minimize(pb.objective.as_ref(), &pb.domain, &pb.x0, 200_000).map_err(|e| e.to_string())?;
            let (tf, _) = solve_and_report(&cfg, false).map_err(|e| e.to_string())?;
            let recs = &tf.trace.records;
            let gap = tf.trace.final_f() - reference.f;
            let gaps: Vec<f64> = recs.iter().map(|r| r.f_next - reference.f).collect();
            let fit = log_linear_fit(&gaps, gaps.len() / 2);
            runs += 1;
            worst_gap = worst_gap.max(gap);
            let Some(fit) = fit else {
                return Err(format!("{}: {} iterations, too few positive gaps to fit", cfg.name, recs.len()));
            };
            worst_slope = worst_slope.max(fit.slope);
            worst_r2 = worst_r2.min(fit.r2);
            if gap > 1e-8 || fit.slope > -1e-3 || fit.r2 < 0.9 {
                return Err(format!(
                    "{}: {} iterations, gap {gap:.3e}, slope {:.4e}, R² {:.4}",
                    cfg.name,
                    recs.len(),
                    fit.slope,
                    fit.r2
                ));
            }
        }
    }
    Ok(format!("{runs} runs: max gap {worst_gap:.2e}, max slope {worst_slope:.3e}, min R² {worst_r2:.3}"))
}

fn geometry_domains() -> Vec<Domain> {
    let mut rng = ChaCha8Rng::seed_from_u64(88);
    let h = random_spd(4, 8, 0.5, 4.0).unwrap();
    let c = randn(&mut rng, 4) * 0.3;
    vec![
        Domain::simplex(5, 1.0),
        Domain::l1_ball(5, 2.0),
        Domain::cube(5, 1.5),
        Domain::lp_ball(4, 1.5, 1.0).unwrap(),
        Domain::lp_ball(4, 2.0, 1.0).unwrap(),
        Domain::lp_ball(4, 3.0, 1.0).unwrap(),
        Domain::sublevel(SublevelSet::new(h, c, 1.0).unwrap()),
    ]
}

fn lp_norm(x: &Vector, p: f64) -> f64 {
    x.iter().map(|v| v.abs().powf(p)).sum::<f64>().powf(1.0 / p)
}

fn boundary_residual(dom: &Domain, x: &Vector) -> f64 {
    match dom {
        Domain::Sublevel(s) => (s.h(x) - s.level()).abs(),
        _ => {
            let name = dom.name();
            let p: f64 = name.trim_start_matches("lp_ball(p=").trim_end_matches(')').parse().unwrap();
            (lp_norm(x, p) - 1.0).abs()
        }
    }
}

fn criterion_8() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut moreau_worst = 0.0f64;
    for dom in geometry_domains() {
        let n = dom.dim();
        let d = dom.diameter();
        for i in 0..500 {
            let x = face_point(&dom, &mut rng);
            let g = randn(&mut rng, n) * 10f64.powf(rng.gen_range(-2.0..2.0));
            let (t, pi) = dom.tangent_projection(&x, &g).map_err(|e| e.to_string())?;
            let normal = &g - &t;
            let gn2 = g.norm_squared();
            let orth = t.dot(&normal).abs() / gn2;
            let support = normal.dot(&(dom.lmo(&normal) - &x)) / (g.norm() * (1.0 + d));
            let tangent_ok = if t.norm() <= 1e-12 * g.norm() {
                true
            } else if dom.is_polytope() {
                dom.max_feasible_step(&x, &t) > 0.0
            } else if dom.on_boundary(&x) {
                t.dot(&dom.outward_normal(&x).map_err(|e| e.to_string())?) <= 1e-9 * g.norm()
            } else {
                normal.norm() <= 1e-12 * g.norm()
            };
            moreau_worst = moreau_worst.max(orth).max(support);
            if orth > 1e-9 || support > 1e-9 || (pi - t.norm()).abs() > 0.0 || !tangent_ok {
                return Err(format!(
                    "Moreau fails on {} #{i}: orth {orth:.2e}, support {support:.2e}, tangent ok {tangent_ok}",
                    dom.name()
                ));
            }
        }
    }
    for n in 1..=6 {
        for dom in [Domain::simplex(n, 1.3), Domain::l1_ball(n, 0.7)] {
            let verts = dom.vertices().unwrap();
            for _ in 0..200 {
                let g = randn(&mut rng, n);
                let best = verts.iter().map(|v| v.dot(&g)).fold(f64::NEG_INFINITY, f64::max);
                let s = dom.lmo(&g);
                if (s.dot(&g) - best).abs() > 1e-12 * (1.0 + best.abs()) || !verts.contains(&s) {
                    return Err(format!("lmo on {} misses the best vertex for g={g:?}", dom.name()));
                }
            }
        }
    }
    let mut retractions = 0;
    let mut undefined = 0;
    let mut smallest_miss = f64::INFINITY;
    let mut retract_worst = 0.0f64;
    for dom in geometry_domains().into_iter().filter(|d| d.is_smooth()) {
        let n = dom.dim();
        let mut defined = 0;
        let mut attempts = 0;
        while defined < 500 {
            attempts += 1;
            if attempts > 5000 {
                return Err(format!("retraction undefined too often on {}", dom.name()));
            }
            let x = dom.random_boundary_point(&mut rng).map_err(|e| e.to_string())?;
            let nu = dom.outward_normal(&x).map_err(|e| e.to_string())?;
            let z = randn(&mut rng, n);
            let u = (&z - &nu * z.dot(&nu)) * 10f64.powf(rng.gen_range(-4.0..0.0));
            match dom.orthographic_retraction(&x, &u) {
                Ok(p) => {
                    let r = boundary_residual(&dom, &p);
                    retract_worst = retract_worst.max(r);
                    if r > 1e-10 || !dom.is_feasible(&p) {
                        return Err(format!("retraction residual {r:.3e} on {}", dom.name()));
                    }
                    defined += 1;
                }
                Err(_) => {
                    undefined += 1;
                    // The normal line may miss Ω only for tangents comparable to its size.
                    let rel = u.norm() / dom.diameter();
                    smallest_miss = smallest_miss.min(rel);
                    if rel < 1e-2 {
                        return Err(format!("retraction undefined for ‖u‖/D = {rel:.3e} on {}", dom.name()));
                    }
                }
            }
        }
        retractions += defined;
    }
    let h = random_spd(3, 5, 0.5, 2.0).unwrap();
    let prod = Domain::product(vec![
        Domain::simplex(3, 1.0),
        Domain::lp_ball(2, 2.0, 1.0).unwrap(),
        Domain::cube(3, 1.0),
        Domain::sublevel(SublevelSet::new(h, Vector::zeros(3), 1.0).unwrap()),
    ])
    .map_err(|e| e.to_string())?;
    let Domain::Product(pd) = &prod else { unreachable!() };
    let mut additivity_worst = 0.0f64;
    for _ in 0..500 {
        let x = face_point(&prod, &mut rng);
        let g = randn(&mut rng, prod.dim());
        let (_, pi) = prod.tangent_projection(&x, &g).map_err(|e| e.to_string())?;
        let mut sum = 0.0;
        for (i, b) in pd.blocks().iter().enumerate() {
            let (_, pb) = b.tangent_projection(&pd.slice(&x, i), &pd.slice(&g, i)).map_err(|e| e.to_string())?;
            sum += pb * pb;
        }
        let err = (pi * pi - sum).abs() / (1.0 + sum);
        additivity_worst = additivity_worst.max(err);
        if err > 1e-10 {
            return Err(format!("π² = {:.12e} vs block sum {sum:.12e}", pi * pi));
        }
    }
    Ok(format!(
        "Moreau worst {moreau_worst:.1e}, lmo exact for n ≤ 6, {retractions} retractions (worst residual {retract_worst:.1e}, {undefined} misses all with ‖u‖/D ≥ {smallest_miss:.2}), product additivity worst {additivity_worst:.1e}"
    ))
}

fn repo_root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn verify(path: &Path) -> (i32, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_ssc-fw")).arg("verify").arg(path).output().expect("run ssc-fw");
    (out.status.code().unwrap_or(-1), String::from_utf8_lossy(&out.stdout).into_owned())
}

fn criterion_9() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut solved = 0;
    let mut tampered = 0;
    for cfg in ["qp_simplex_afw", "ball_sor", "product_pfw_fdfw"] {
        let status = Command::new(env!("CARGO_BIN_EXE_ssc-fw"))
            .arg("solve")
            .arg(repo_root().join("configs").join(format!("{cfg}.json")))
            .arg("--out")
            .arg(dir.path())
            .output()
            .map_err(|e| e.to_string())?;
        if !status.status.success() {
            return Err(format!("solve {cfg} exited {}", status.status));
        }
        solved += 1;
        let trace_path = dir.path().join(format!("{cfg}.trace.json"));
        let (code, out) = verify(&trace_path);
        if code != 0 {
            return Err(format!("untampered {cfg} exits {code}: {out}"));
        }
        let original: Value = serde_json::from_str(&std::fs::read_to_string(&trace_path).unwrap()).unwrap();
        let last = original["trace"]["records"].as_array().unwrap().len() - 1;
        let k = last.min(2);
        type Edit = Box<dyn Fn(&mut Value)>;
        let bump = |field: &'static str, k: usize, delta: f64| -> Edit {
            Box::new(move |v: &mut Value| {
                let r = &mut v["trace"]["records"][k][field];
                *r = json!(r.as_f64().unwrap() + delta);
            })
        };
        let bump_x = |field: &'static str, k: usize, delta: f64| -> Edit {
            Box::new(move |v: &mut Value| {
                let r = &mut v["trace"]["records"][k][field][0];
                *r = json!(r.as_f64().unwrap() + delta);
            })
        };
        let edits: Vec<(&str, Edit)> = vec![
            ("f_record", bump("f_k", k, -1e-3)),
            ("f_record", bump("f_tr", k, 1e-6)),
            ("f_record", bump("f_next", last, 1e-3)),
            ("f_record", bump("f_tilde", k, 1e-4)),
            ("pi_record", bump("pi_tilde", k, 1e-3)),
            ("gap_record", bump("gap_proxy", last, 1e-5)),
            ("f_record", bump_x("x_k", k, 1e-3)),
            ("f_record", bump_x("x_tr", k, 1e-3)),
            ("f_record", bump_x("x_tilde", k, 1e-3)),
            ("f_record", bump_x("x_next", last, 1e-3)),
            ("index", Box::new(move |v: &mut Value| v["trace"]["records"][k]["k"] = json!(k + 5))),
            ("replay", Box::new(move |v: &mut Value| v["trace"]["records"][k]["inner_steps"] = json!(99))),
            ("replay", Box::new(move |v: &mut Value| v["trace"]["records"][k]["maximal_steps"] = json!(42))),
            (
                "replay",
                Box::new(move |v: &mut Value| {
                    let c = &mut v["trace"]["records"][k]["termination_case"];
                    *c = json!(if c == "Case3" { "Case4" } else { "Case3" });
                }),
            ),
            ("wall_clock", bump("wall_ms", k, -1.0)),
            (
                "constants",
                Box::new(|v: &mut Value| {
                    v["trace"]["lipschitz"] = json!(v["trace"]["lipschitz"].as_f64().unwrap() * 1.5)
                }),
            ),
            (
                "constants",
                Box::new(|v: &mut Value| v["trace"]["tau"] = json!(v["trace"]["tau"].as_f64().unwrap() * 0.5)),
            ),
            ("wall_clock", Box::new(|v: &mut Value| v["trace"]["wall_time"] = json!(-1.0))),
            ("config_hash", Box::new(|v: &mut Value| v["trace"]["config_hash"] = json!("0".repeat(64)))),
            ("config_hash", Box::new(|v: &mut Value| v["config"]["eps_stat"] = json!(1e-3))),
            (
                "replay",
                Box::new(|v: &mut Value| {
                    let recs = v["trace"]["records"].as_array_mut().unwrap();
                    recs.pop();
                }),
            ),
        ];
        for (i, (expect, edit)) in edits.iter().enumerate() {
            let mut v = original.clone();
            edit(&mut v);
            let path = dir.path().join(format!("{cfg}-tampered-{i}.trace.json"));
            std::fs::write(&path, serde_json::to_string_pretty(&v).unwrap()).unwrap();
            let (code, out) = verify(&path);
            let named = out.lines().any(|l| l.starts_with("violated:") && l.split([' ', ',']).any(|w| w == *expect));
            let has_fail_line = out.lines().any(|l| l.starts_with(&format!("FAIL {expect} ")));
            if code != 2 || !named || !has_fail_line {
                return Err(format!("{cfg} edit #{i} (expect {expect}): exit {code}\n{out}"));
            }
            tampered += 1;
        }
        // CSV rows are checked against the sibling JSON trace.
        let csv_path = dir.path().join(format!("{cfg}.trace.csv"));
        let csv = std::fs::read_to_string(&csv_path).unwrap();
        let mut lines: Vec<String> = csv.lines().map(str::to_string).collect();
        let mut cells: Vec<String> = lines[1].split(',').map(str::to_string).collect();
        let f: f64 = cells[1].parse().unwrap();
        cells[1] = format!("{:.16e}", f + 1e-9);
        lines[1] = cells.join(",");
        let bad_dir = dir.path().join(format!("{cfg}-csv"));
        std::fs::create_dir_all(&bad_dir).unwrap();
        std::fs::write(bad_dir.join(format!("{cfg}.trace.csv")), lines.join("\n") + "\n").unwrap();
        std::fs::copy(&trace_path, bad_dir.join(format!("{cfg}.trace.json"))).unwrap();
        let (code, out) = verify(&bad_dir.join(format!("{cfg}.trace.csv")));
        if code != 2 || !out.contains("violated: csv_consistency") {
            return Err(format!("{cfg} csv tamper: exit {code}\n{out}"));
        }
        tampered += 1;
    }
    Ok(format!("{solved} traces verified clean, {tampered} tampered copies rejected with exit 2"))
}

type Criterion<'a> = (usize, &'static str, Box<dyn Fn() -> Outcome + 'a>);

fn main() {
    // libtest flags such as --nocapture or a name filter are accepted and ignored.
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let wanted = |n: usize| filter.is_empty() || filter.iter().any(|f| f == &n.to_string() || f == "acceptance");
    let suite = if wanted(1) || wanted(2) || wanted(3) { Some(run_suite()) } else { None };
    let criteria: Vec<Criterion<'_>> = vec![
        (1, "descent suite: H1 and H'2a on every outer iteration", Box::new(|| criterion_1(suite.as_ref().unwrap()))),
        (2, "global rate: running-min proxy bound at every k", Box::new(|| criterion_2(suite.as_ref().unwrap()))),
        (
            3,
            "inner finiteness and FDFW frozen linear chains ≤ dim+1",
            Box::new(|| criterion_3(suite.as_ref().unwrap())),
        ),
        (4, "observed slope ratios ≥ τ − 1e-8", Box::new(criterion_4)),
        (5, "σ_α exactness and decreasing σ-iterates", Box::new(criterion_5)),
        (6, "KL certificate on a strongly convex box QP", Box::new(criterion_6)),
        (7, "linear convergence on random simplex QPs", Box::new(criterion_7)),
        (8, "geometry oracles", Box::new(criterion_8)),
        (9, "tampered traces make verify exit 2", Box::new(criterion_9)),
    ];
    let mut failed = 0;
    for (n, title, run) in criteria {
        if !wanted(n) {
            continue;
        }
        let start = Instant::now();
        let outcome = std::panic::catch_unwind(std::panic::AssertUnwindSafe(run)).unwrap_or_else(|p| {
            let msg = p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()));
            Err(format!("panicked: {}", msg.unwrap_or_default()))
        });
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(msg) => println!("PASS criterion {n}: {title} ({msg}) [{secs:.2} s]"),
            Err(msg) => {
                failed += 1;
                println!("FAIL criterion {n}: {title}: {msg} [{secs:.2} s]");
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
