//! Brute-force pyramidal width for tiny atom sets.

use std::collections::HashMap;
use std::sync::{Mutex, OnceLock};

use microlp::{ComparisonOp, OptimizationDirection, Problem};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::Vector;

pub const MAX_ATOMS: usize = 8;
pub const MAX_DIM: usize = 4;
const MEMBER_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PWidthEstimate {
    /// Smallest sampled directional width; +∞ when no admissible direction exists.
    pub value: f64,
    pub degenerate: bool,
    pub faces: usize,
    pub samples: usize,
}

type CacheKey = (Vec<u64>, usize);

fn cache() -> &'static Mutex<HashMap<CacheKey, PWidthEstimate>> {
    static CACHE: OnceLock<Mutex<HashMap<CacheKey, PWidthEstimate>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

/// Samples the pyramidal width of conv(atoms) over faces, barycentric points
/// and cone directions. The result is an upper estimate of the true width
/// that tightens as `grid` grows.
pub fn pyramidal_width_bruteforce(atoms: &[Vector], grid: usize) -> Result<PWidthEstimate> {
    if atoms.is_empty() {
        return Err(Error::InvalidInput("empty atom set".into()));
    }
    if atoms.len() > MAX_ATOMS {
        return Err(Error::InvalidInput(format!("{} atoms, at most {MAX_ATOMS} supported", atoms.len())));
    }
    let d = atoms[0].len();
    if d == 0 || d > MAX_DIM || atoms.iter().any(|a| a.len() != d) {
        return Err(Error::InvalidInput(format!("atoms must share a dimension in 1..={MAX_DIM}")));
    }
    if atoms.iter().any(|a| a.iter().any(|v| !v.is_finite())) {
        return Err(Error::InvalidInput("non-finite atom coordinate".into()));
    }
    if grid == 0 {
        return Err(Error::InvalidInput("grid must be positive".into()));
    }
    let key: CacheKey = (atoms.iter().flat_map(|a| a.iter().map(|v| v.to_bits())).collect(), grid);
    if let Some(hit) = cache().lock().unwrap().get(&key) {
        return Ok(hit.clone());
    }
    let m = atoms.len();
    let faces: Vec<Vec<usize>> = (1u32..(1u32 << m))
        .filter(|&mask| mask.count_ones() >= 2)
        .map(|mask| (0..m).filter(|i| mask >> i & 1 == 1).collect::<Vec<_>>())
        .filter(|w| is_face(atoms, w))
        .collect();
    let mut jobs: Vec<(usize, Vector)> = Vec::new();
    for (fi, w) in faces.iter().enumerate() {
        for c in compositions(grid, w.len()) {
            let mut x = Vector::zeros(d);
            for (j, &i) in w.iter().enumerate() {
                x += &atoms[i] * (c[j] as f64 / grid as f64);
            }
            jobs.push((fi, x));
        }
    }
    let results: Vec<(f64, usize)> = jobs.par_iter().map(|(fi, x)| width_at(atoms, &faces[*fi], x, grid)).collect();
    let mut value = f64::INFINITY;
    let mut samples = 0;
    for (v, s) in results {
        value = value.min(v);
        samples += s;
    }
    let est = PWidthEstimate { value, degenerate: !value.is_finite(), faces: faces.len(), samples };
    cache().lock().unwrap().insert(key, est.clone());
    Ok(est)
}

/// Minimum over sampled directions r ∈ cone(F − x) of
/// max_{a∈F∩A}⟨r̂,a⟩ − max_{S∈S_x} min_{s∈S}⟨r̂,s⟩.
fn width_at(atoms: &[Vector], face: &[usize], x: &Vector, grid: usize) -> (f64, usize) {
    let scale = face.iter().map(|&i| atoms[i].norm()).fold(1.0, f64::max);
    let gens: Vec<Vector> =
        face.iter().map(|&i| &atoms[i] - x).filter(|v| v.norm() > 1e-12 * scale).map(|v| v.normalize()).collect();
    if gens.is_empty() {
        return (f64::INFINITY, 0);
    }
    let mut member: HashMap<u32, bool> = HashMap::new();
    let mut best = f64::INFINITY;
    let mut samples = 0;
    let mut order: Vec<(f64, usize)> = Vec::with_capacity(face.len());
    for c in compositions(grid, gens.len()) {
        let mut r = Vector::zeros(x.len());
        for (j, g) in gens.iter().enumerate() {
            r += g * c[j] as f64;
        }
        let rn = r.norm();
        if rn <= 1e-12 * grid as f64 {
            continue;
        }
        r /= rn;
        order.clear();
        order.extend(face.iter().map(|&i| (r.dot(&atoms[i]), i)));
        order.sort_by(|a, b| b.0.total_cmp(&a.0));
        let top = order[0].0;
        let mut mask = 0u32;
        let mut inner = f64::NEG_INFINITY;
        for &(v, i) in &order {
            mask |= 1 << i;
            let inside = *member.entry(mask).or_insert_with(|| in_hull(atoms, mask, x));
            if inside {
                inner = v;
                break;
            }
        }
        samples += 1;
        best = best.min(top - inner);
    }
    (best, samples)
}

/// x ∈ conv{a_i : i ∈ mask}, by minimizing the l1 residual of a convex combination.
fn in_hull(atoms: &[Vector], mask: u32, x: &Vector) -> bool {
    let idx: Vec<usize> = (0..atoms.len()).filter(|i| mask >> i & 1 == 1).collect();
    let d = x.len();
    let mut pb = Problem::new(OptimizationDirection::Minimize);
    let lam: Vec<_> = idx.iter().map(|_| pb.add_var(0.0, (0.0, f64::INFINITY))).collect();
    let plus: Vec<_> = (0..d).map(|_| pb.add_var(1.0, (0.0, f64::INFINITY))).collect();
    let minus: Vec<_> = (0..d).map(|_| pb.add_var(1.0, (0.0, f64::INFINITY))).collect();
    pb.add_constraint(lam.iter().map(|&v| (v, 1.0)).collect::<Vec<_>>(), ComparisonOp::Eq, 1.0);
    for k in 0..d {
        let mut row: Vec<_> = idx.iter().zip(&lam).map(|(&i, &v)| (v, atoms[i][k])).collect();
        row.push((plus[k], 1.0));
        row.push((minus[k], -1.0));
        pb.add_constraint(row, ComparisonOp::Eq, x[k]);
    }
    let scale = 1.0 + x.amax();
    match pb.solve().ok().and_then(|o| o.solution().map(|s| s.objective())) {
        Some(res) => res <= MEMBER_TOL * scale,
        None => false,
    }
}

/// W spans a face iff some hyperplane contains W and strictly separates the other atoms.
fn is_face(atoms: &[Vector], w: &[usize]) -> bool {
    if w.len() == atoms.len() {
        return true;
    }
    let d = atoms[0].len();
    let mut pb = Problem::new(OptimizationDirection::Minimize);
    let c: Vec<_> = (0..d).map(|_| pb.add_var(0.0, (f64::NEG_INFINITY, f64::INFINITY))).collect();
    let beta = pb.add_var(0.0, (f64::NEG_INFINITY, f64::INFINITY));
    for (i, a) in atoms.iter().enumerate() {
        let mut row: Vec<_> = c.iter().zip(a.iter()).map(|(&v, &ak)| (v, ak)).collect();
        row.push((beta, -1.0));
        if w.contains(&i) {
            pb.add_constraint(row, ComparisonOp::Eq, 0.0);
        } else {
            pb.add_constraint(row, ComparisonOp::Le, -1.0);
        }
    }
    pb.solve().map(|o| o.solution().is_some()).unwrap_or(false)
}

/// All vectors of `parts` nonnegative integers summing to `total`.
fn compositions(total: usize, parts: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = vec![0; parts];
    fn rec(i: usize, left: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if i + 1 == cur.len() {
            cur[i] = left;
            out.push(cur.clone());
            return;
        }
        for v in 0..=left {
            cur[i] = v;
            rec(i + 1, left - v, cur, out);
        }
    }
    if parts > 0 {
        rec(0, total, &mut cur, &mut out);
    }
    out
}

/// Pyramidal width of the scaled probability simplex {x ≥ 0, Σx = s} in ℝⁿ.
pub fn simplex_pwidth(n: usize, scale: f64) -> f64 {
    if n < 2 {
        return f64::INFINITY;
    }
    let nf = n as f64;
    if n.is_multiple_of(2) {
        2.0 * scale / nf.sqrt()
    } else {
        2.0 * scale / (nf - 1.0 / nf).sqrt()
    }
}

/// Pyramidal width of the cube [0,s]ⁿ.
pub fn box_pwidth(n: usize, scale: f64) -> f64 {
    if n == 0 {
        return f64::INFINITY;
    }
    scale / (n as f64).sqrt()
}
