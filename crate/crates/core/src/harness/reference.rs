//! Independent reference solver: accelerated projected gradient with restarts.

use crate::domains::{Domain, PolytopeFamily};
use crate::error::{Error, Result};
use crate::model::{Objective, Vector};

/// Euclidean projection onto {x ≥ 0, Σx = s}.
pub fn project_simplex(v: &Vector, s: f64) -> Vector {
    let mut u: Vec<f64> = v.iter().copied().collect();
    u.sort_by(|a, b| b.total_cmp(a));
    let mut cum = 0.0;
    let mut theta = 0.0;
    for (i, &ui) in u.iter().enumerate() {
        cum += ui;
        let t = (cum - s) / (i + 1) as f64;
        if ui - t > 0.0 {
            theta = t;
        }
    }
    v.map(|x| (x - theta).max(0.0))
}

/// Euclidean projection onto a polytope family.
pub fn project(dom: &Domain, v: &Vector) -> Result<Vector> {
    let Domain::Polytope(p) = dom else {
        return Err(Error::UnsupportedPair(format!("no reference projection onto {}", dom.name())));
    };
    Ok(match p.family {
        PolytopeFamily::Simplex => project_simplex(v, p.scale),
        PolytopeFamily::Box => v.map(|x| x.clamp(0.0, p.scale)),
        PolytopeFamily::L1Ball => {
            if v.lp_norm(1) <= p.scale {
                v.clone()
            } else {
                let w = project_simplex(&v.abs(), p.scale);
                w.zip_map(v, |a, b| a * b.signum())
            }
        }
    })
}

#[derive(Clone, Debug)]
pub struct ReferenceSolution {
    pub x: Vector,
    pub f: f64,
    pub iterations: usize,
}

/// Minimizes a smooth objective over a polytope to near machine precision.
pub fn reference_minimize(
    obj: &dyn Objective,
    dom: &Domain,
    x0: &Vector,
    max_iter: usize,
) -> Result<ReferenceSolution> {
    let step = 1.0 / obj.lipschitz();
    let mut x = project(dom, x0)?;
    let mut y = x.clone();
    let mut t = 1.0f64;
    let mut fx = obj.eval(&x);
    let mut iterations = 0;
    for it in 0..max_iter {
        iterations = it + 1;
        let xn = project(dom, &(&y - obj.grad(&y) * step))?;
        let fn_ = obj.eval(&xn);
        let moved = (&xn - &x).norm();
        if fn_ > fx {
            // function-value restart
            t = 1.0;
            y = x.clone();
            continue;
        }
        let tn = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        y = &xn + (&xn - &x) * ((t - 1.0) / tn);
        t = tn;
        x = xn;
        fx = fn_;
        if moved <= 1e-15 * (1.0 + x.norm()) {
            break;
        }
    }
    // polish with plain projected gradient steps
    for _ in 0..1000 {
        let xn = project(dom, &(&x - obj.grad(&x) * step))?;
        let fn_ = obj.eval(&xn);
        if fn_ >= fx {
            break;
        }
        x = xn;
        fx = fn_;
    }
    Ok(ReferenceSolution { x, f: fx, iterations })
}
