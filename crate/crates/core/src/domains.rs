//! Feasible sets and their first-order geometry.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Matrix, Vector};

/// Pinning tolerance, relative to the polytope scale.
pub const PIN_TOL: f64 = 1e-12;
/// Feasibility tolerance.
pub const FEAS_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum PolytopeFamily {
    Simplex,
    L1Ball,
    Box,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Polytope {
    pub family: PolytopeFamily,
    pub scale: f64,
    pub dim: usize,
}

/// {x : ½(x−c)ᵀH(x−c) ≤ a}
#[derive(Clone, Debug)]
pub struct SublevelSet {
    center: Vector,
    hessian: Matrix,
    hessian_inv: Matrix,
    level: f64,
    mu_h: f64,
    l_h: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SmoothKind {
    LpBall { p: f64 },
}

#[derive(Clone, Debug, PartialEq)]
pub struct SmoothBody {
    pub kind: SmoothKind,
    pub radius: f64,
    pub dim: usize,
}

#[derive(Clone, Debug)]
pub struct ProductDomain {
    blocks: Vec<Domain>,
    offsets: Vec<usize>,
}

#[derive(Clone, Debug)]
pub enum Domain {
    Polytope(Polytope),
    Sublevel(SublevelSet),
    Smooth(SmoothBody),
    Product(ProductDomain),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CoordStatus {
    Free,
    AtLower,
    AtUpper,
}

/// Minimal face of the domain containing a point.
#[derive(Clone, Debug, PartialEq)]
pub enum FaceDescriptor {
    /// The whole domain.
    Whole,
    /// Simplex or box face given by pinned coordinates.
    Coordinates(Vec<CoordStatus>),
    /// Face of the L1 ball: sign of each coordinate, 0 meaning pinned at zero.
    L1Signs(Vec<i8>),
    /// Singleton face of a strictly convex body.
    BoundaryAt(Vector),
    Product(Vec<FaceDescriptor>),
}

impl FaceDescriptor {
    pub fn is_whole(&self) -> bool {
        match self {
            FaceDescriptor::Whole => true,
            FaceDescriptor::Coordinates(s) => s.iter().all(|c| *c == CoordStatus::Free),
            FaceDescriptor::Product(b) => b.iter().all(|f| f.is_whole()),
            _ => false,
        }
    }
}

impl SublevelSet {
    pub fn new(hessian: Matrix, center: Vector, level: f64) -> Result<Self> {
        let n = center.len();
        if hessian.nrows() != n || hessian.ncols() != n {
            return Err(Error::InvalidInput("hessian/center dimension mismatch".into()));
        }
        let scale = hessian.amax().max(f64::MIN_POSITIVE);
        if (&hessian - hessian.transpose()).amax() > 1e-12 * scale {
            return Err(Error::InvalidInput("hessian is not symmetric".into()));
        }
        if !(level > 0.0) {
            return Err(Error::InvalidInput(format!("level {level} must exceed min h = 0")));
        }
        let eig = hessian.clone().symmetric_eigen();
        let mu_h = eig.eigenvalues.min();
        let l_h = eig.eigenvalues.max();
        if !(mu_h > 0.0) {
            return Err(Error::InvalidInput("hessian is not positive definite".into()));
        }
        let hessian_inv =
            hessian.clone().cholesky().ok_or_else(|| Error::InvalidInput("cholesky failed".into()))?.inverse();
        Ok(Self { center, hessian, hessian_inv, level, mu_h, l_h })
    }

    /// Euclidean ball of the given radius centered at `center`.
    pub fn ball(center: Vector, radius: f64) -> Result<Self> {
        let n = center.len();
        Self::new(Matrix::identity(n, n), center, 0.5 * radius * radius)
    }

    pub fn h(&self, x: &Vector) -> f64 {
        let z = x - &self.center;
        0.5 * z.dot(&(&self.hessian * &z))
    }

    pub fn grad_h(&self, x: &Vector) -> Vector {
        &self.hessian * (x - &self.center)
    }

    pub fn mu_h(&self) -> f64 {
        self.mu_h
    }
    pub fn l_h(&self) -> f64 {
        self.l_h
    }
    pub fn level(&self) -> f64 {
        self.level
    }
    pub fn center(&self) -> &Vector {
        &self.center
    }
    pub fn hessian(&self) -> &Matrix {
        &self.hessian
    }
    pub fn dim(&self) -> usize {
        self.center.len()
    }

    fn on_boundary(&self, x: &Vector) -> bool {
        self.level - self.h(x) <= FEAS_TOL * self.level
    }
}

impl ProductDomain {
    pub fn blocks(&self) -> &[Domain] {
        &self.blocks
    }

    pub fn offsets(&self) -> &[usize] {
        &self.offsets
    }

    pub fn range(&self, i: usize) -> std::ops::Range<usize> {
        self.offsets[i]..self.offsets[i] + self.blocks[i].dim()
    }

    pub fn slice(&self, v: &Vector, i: usize) -> Vector {
        let r = self.range(i);
        v.rows(r.start, r.len()).into_owned()
    }

    pub fn concat(&self, parts: &[Vector]) -> Vector {
        let n: usize = self.blocks.iter().map(|b| b.dim()).sum();
        let mut out = Vector::zeros(n);
        for (i, p) in parts.iter().enumerate() {
            out.rows_mut(self.offsets[i], p.len()).copy_from(p);
        }
        out
    }
}

fn lp_norm(x: &Vector, p: f64) -> f64 {
    let m = x.amax();
    if m == 0.0 {
        return 0.0;
    }
    m * x.iter().map(|v| (v.abs() / m).powf(p)).sum::<f64>().powf(1.0 / p)
}

fn signed_pow(v: f64, e: f64) -> f64 {
    if v == 0.0 {
        0.0
    } else {
        v.signum() * v.abs().powf(e)
    }
}

/// Solves base_sum − ν·base_count + Σ (v_i − ν)₊ = 0 for ν (base_count ≥ 1).
fn shifted_root(base_sum: f64, base_count: usize, vals: &[f64]) -> f64 {
    let mut v: Vec<f64> = vals.to_vec();
    v.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let mut acc = base_sum;
    for m in 0..=v.len() {
        let nu = acc / (base_count + m) as f64;
        if m == v.len() || v[m] <= nu {
            return nu;
        }
        acc += v[m];
    }
    unreachable!()
}

impl Domain {
    pub fn simplex(dim: usize, scale: f64) -> Self {
        Domain::Polytope(Polytope { family: PolytopeFamily::Simplex, scale, dim })
    }

    pub fn l1_ball(dim: usize, scale: f64) -> Self {
        Domain::Polytope(Polytope { family: PolytopeFamily::L1Ball, scale, dim })
    }

    pub fn cube(dim: usize, scale: f64) -> Self {
        Domain::Polytope(Polytope { family: PolytopeFamily::Box, scale, dim })
    }

    pub fn lp_ball(dim: usize, p: f64, radius: f64) -> Result<Self> {
        if !(p > 1.0 && p.is_finite()) || !(radius > 0.0) {
            return Err(Error::InvalidInput(format!("lp ball p={p} radius={radius}")));
        }
        Ok(Domain::Smooth(SmoothBody { kind: SmoothKind::LpBall { p }, radius, dim }))
    }

    pub fn sublevel(set: SublevelSet) -> Self {
        Domain::Sublevel(set)
    }

    pub fn product(blocks: Vec<Domain>) -> Result<Self> {
        if blocks.is_empty() {
            return Err(Error::InvalidInput("empty product".into()));
        }
        let mut offsets = Vec::with_capacity(blocks.len());
        let mut acc = 0;
        for b in &blocks {
            if matches!(b, Domain::Product(_)) {
                return Err(Error::InvalidInput("nested products are not supported".into()));
            }
            offsets.push(acc);
            acc += b.dim();
        }
        Ok(Domain::Product(ProductDomain { blocks, offsets }))
    }

    pub fn dim(&self) -> usize {
        match self {
            Domain::Polytope(p) => p.dim,
            Domain::Sublevel(s) => s.dim(),
            Domain::Smooth(s) => s.dim,
            Domain::Product(p) => p.blocks.iter().map(|b| b.dim()).sum(),
        }
    }

    pub fn name(&self) -> String {
        match self {
            Domain::Polytope(p) => match p.family {
                PolytopeFamily::Simplex => "simplex".into(),
                PolytopeFamily::L1Ball => "l1_ball".into(),
                PolytopeFamily::Box => "box".into(),
            },
            Domain::Sublevel(_) => "sublevel".into(),
            Domain::Smooth(s) => match s.kind {
                SmoothKind::LpBall { p } => format!("lp_ball(p={p})"),
            },
            Domain::Product(p) => {
                let names: Vec<String> = p.blocks.iter().map(|b| b.name()).collect();
                format!("product[{}]", names.join(" x "))
            }
        }
    }

    pub fn is_polytope(&self) -> bool {
        matches!(self, Domain::Polytope(_))
    }

    pub fn is_smooth(&self) -> bool {
        matches!(self, Domain::Sublevel(_) | Domain::Smooth(_))
    }

    fn check_dim(&self, v: &Vector) -> Result<()> {
        if v.len() != self.dim() {
            return Err(Error::InvalidInput(format!(
                "vector of length {} for domain of dimension {}",
                v.len(),
                self.dim()
            )));
        }
        Ok(())
    }

    /// Feasibility violation measure; zero when inside.
    pub fn violation(&self, x: &Vector) -> f64 {
        match self {
            Domain::Polytope(p) => {
                let s = p.scale;
                match p.family {
                    PolytopeFamily::Simplex => {
                        let neg = x.iter().fold(0.0f64, |m, v| m.max(-v));
                        neg.max((x.sum() - s).abs()) / s.max(1.0)
                    }
                    PolytopeFamily::L1Ball => (x.lp_norm(1) - s).max(0.0) / s.max(1.0),
                    PolytopeFamily::Box => x.iter().fold(0.0f64, |m, v| m.max(-v).max(v - s)) / s.max(1.0),
                }
            }
            Domain::Sublevel(set) => ((set.h(x) - set.level) / set.level).max(0.0),
            Domain::Smooth(b) => match b.kind {
                SmoothKind::LpBall { p } => ((lp_norm(x, p) - b.radius) / b.radius).max(0.0),
            },
            Domain::Product(p) => {
                (0..p.blocks.len()).map(|i| p.blocks[i].violation(&p.slice(x, i))).fold(0.0, f64::max)
            }
        }
    }

    pub fn is_feasible(&self, x: &Vector) -> bool {
        x.len() == self.dim() && x.iter().all(|v| v.is_finite()) && self.violation(x) <= FEAS_TOL
    }

    pub fn check_feasible(&self, x: &Vector) -> Result<()> {
        self.check_dim(x)?;
        if !self.is_feasible(x) {
            return Err(Error::Infeasible(format!("violation {:.3e} on {}", self.violation(x), self.name())));
        }
        Ok(())
    }

    /// A canonical interior (or relative-interior) starting point.
    pub fn barycenter(&self) -> Vector {
        match self {
            Domain::Polytope(p) => match p.family {
                PolytopeFamily::Simplex => Vector::from_element(p.dim, p.scale / p.dim as f64),
                PolytopeFamily::L1Ball => Vector::zeros(p.dim),
                PolytopeFamily::Box => Vector::from_element(p.dim, 0.5 * p.scale),
            },
            Domain::Sublevel(s) => s.center.clone(),
            Domain::Smooth(b) => Vector::zeros(b.dim),
            Domain::Product(p) => {
                let parts: Vec<Vector> = p.blocks.iter().map(|b| b.barycenter()).collect();
                p.concat(&parts)
            }
        }
    }

    /// Random feasible point, deterministic in the generator state.
    pub fn random_point(&self, rng: &mut ChaCha8Rng) -> Vector {
        match self {
            Domain::Polytope(p) => {
                let n = p.dim;
                match p.family {
                    PolytopeFamily::Simplex => {
                        let w: Vec<f64> = (0..n).map(|_| -rng.gen::<f64>().max(1e-300).ln()).collect();
                        let t: f64 = w.iter().sum();
                        Vector::from_iterator(n, w.into_iter().map(|v| p.scale * v / t))
                    }
                    PolytopeFamily::L1Ball => {
                        let z: Vector = Vector::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal));
                        let r = rng.gen::<f64>();
                        let norm = z.lp_norm(1).max(f64::MIN_POSITIVE);
                        z * (r * p.scale / norm)
                    }
                    PolytopeFamily::Box => Vector::from_fn(n, |_, _| p.scale * rng.gen::<f64>()),
                }
            }
            Domain::Sublevel(s) => {
                let n = s.dim();
                let z: Vector = Vector::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal));
                let hz = s.h(&(&z + &s.center));
                let r = rng.gen::<f64>();
                if hz == 0.0 {
                    return s.center.clone();
                }
                &s.center + z * (r * (s.level / hz).sqrt())
            }
            Domain::Smooth(b) => {
                let SmoothKind::LpBall { p } = b.kind;
                let z: Vector = Vector::from_fn(b.dim, |_, _| rng.sample::<f64, _>(StandardNormal));
                let r = rng.gen::<f64>();
                let norm = lp_norm(&z, p).max(f64::MIN_POSITIVE);
                z * (r * b.radius / norm)
            }
            Domain::Product(p) => {
                let parts: Vec<Vector> = p.blocks.iter().map(|b| b.random_point(rng)).collect();
                p.concat(&parts)
            }
        }
    }

    /// Random boundary point of a smooth domain.
    pub fn random_boundary_point(&self, rng: &mut ChaCha8Rng) -> Result<Vector> {
        match self {
            Domain::Sublevel(s) => {
                let z: Vector = Vector::from_fn(s.dim(), |_, _| rng.sample::<f64, _>(StandardNormal));
                let hz = s.h(&(&z + &s.center));
                Ok(&s.center + z * (s.level / hz).sqrt())
            }
            Domain::Smooth(b) => {
                let SmoothKind::LpBall { p } = b.kind;
                let z: Vector = Vector::from_fn(b.dim, |_, _| rng.sample::<f64, _>(StandardNormal));
                Ok(&z * (b.radius / lp_norm(&z, p)))
            }
            _ => Err(Error::Domain("boundary sampling needs a smooth domain".into())),
        }
    }

    /// argmax_{s ∈ Ω} ⟨s, g⟩.
    pub fn lmo(&self, g: &Vector) -> Vector {
        match self {
            Domain::Polytope(p) => {
                let n = p.dim;
                let mut s = Vector::zeros(n);
                match p.family {
                    PolytopeFamily::Simplex => {
                        let i = argmax_first(g.iter().copied());
                        s[i] = p.scale;
                    }
                    PolytopeFamily::L1Ball => {
                        let i = argmax_first(g.iter().map(|v| v.abs()));
                        s[i] = if g[i] < 0.0 { -p.scale } else { p.scale };
                    }
                    PolytopeFamily::Box => {
                        for i in 0..n {
                            if g[i] > 0.0 {
                                s[i] = p.scale;
                            }
                        }
                    }
                }
                s
            }
            Domain::Sublevel(set) => {
                let hg = &set.hessian_inv * g;
                let q = g.dot(&hg);
                if q <= 0.0 {
                    // zero functional: every point is a maximizer
                    return set.center.clone() + set.boundary_offset_along_first_axis();
                }
                self.snap(&(&set.center + hg * (2.0 * set.level / q).sqrt()))
            }
            Domain::Smooth(b) => {
                let SmoothKind::LpBall { p } = b.kind;
                let m = g.amax();
                if m == 0.0 {
                    let mut s = Vector::zeros(b.dim);
                    s[0] = b.radius;
                    return s;
                }
                let q = p / (p - 1.0);
                let gs = g / m;
                let t = gs.map(|v| signed_pow(v, q - 1.0));
                let nq = lp_norm(&gs, q);
                self.snap(&(t * (b.radius / nq.powf(q - 1.0))))
            }
            Domain::Product(pd) => {
                let parts: Vec<Vector> = (0..pd.blocks.len()).map(|i| pd.blocks[i].lmo(&pd.slice(g, i))).collect();
                pd.concat(&parts)
            }
        }
    }

    pub fn minimal_face(&self, x: &Vector) -> Result<FaceDescriptor> {
        self.check_feasible(x)?;
        Ok(self.face_unchecked(x))
    }

    fn face_unchecked(&self, x: &Vector) -> FaceDescriptor {
        match self {
            Domain::Polytope(p) => {
                let tol = PIN_TOL * p.scale;
                match p.family {
                    PolytopeFamily::Simplex => FaceDescriptor::Coordinates(
                        x.iter().map(|&v| if v <= tol { CoordStatus::AtLower } else { CoordStatus::Free }).collect(),
                    ),
                    PolytopeFamily::Box => FaceDescriptor::Coordinates(
                        x.iter()
                            .map(|&v| {
                                if v <= tol {
                                    CoordStatus::AtLower
                                } else if v >= p.scale - tol {
                                    CoordStatus::AtUpper
                                } else {
                                    CoordStatus::Free
                                }
                            })
                            .collect(),
                    ),
                    PolytopeFamily::L1Ball => {
                        if x.lp_norm(1) < p.scale * (1.0 - PIN_TOL) {
                            FaceDescriptor::Whole
                        } else {
                            FaceDescriptor::L1Signs(
                                x.iter()
                                    .map(|&v| {
                                        if v > tol {
                                            1
                                        } else if v < -tol {
                                            -1
                                        } else {
                                            0
                                        }
                                    })
                                    .collect(),
                            )
                        }
                    }
                }
            }
            Domain::Sublevel(s) => {
                if s.on_boundary(x) {
                    FaceDescriptor::BoundaryAt(x.clone())
                } else {
                    FaceDescriptor::Whole
                }
            }
            Domain::Smooth(_) => {
                if self.smooth_on_boundary(x) {
                    FaceDescriptor::BoundaryAt(x.clone())
                } else {
                    FaceDescriptor::Whole
                }
            }
            Domain::Product(pd) => FaceDescriptor::Product(
                (0..pd.blocks.len()).map(|i| pd.blocks[i].face_unchecked(&pd.slice(x, i))).collect(),
            ),
        }
    }

    fn smooth_on_boundary(&self, x: &Vector) -> bool {
        match self {
            Domain::Sublevel(s) => s.on_boundary(x),
            Domain::Smooth(b) => {
                let SmoothKind::LpBall { p } = b.kind;
                b.radius - lp_norm(x, p) <= FEAS_TOL * b.radius
            }
            _ => false,
        }
    }

    /// True if a smooth domain's boundary contains x (within tolerance).
    pub fn on_boundary(&self, x: &Vector) -> bool {
        self.smooth_on_boundary(x)
    }

    /// argmin of ⟨g, y⟩ over the face.
    pub fn face_lmo(&self, face: &FaceDescriptor, g: &Vector) -> Vector {
        let neg = -g;
        match (self, face) {
            (_, FaceDescriptor::Whole) => self.lmo(&neg),
            (_, FaceDescriptor::BoundaryAt(x)) => x.clone(),
            (Domain::Polytope(p), FaceDescriptor::Coordinates(status)) => {
                let n = p.dim;
                let mut y = Vector::zeros(n);
                match p.family {
                    PolytopeFamily::Simplex => {
                        let mut best: Option<usize> = None;
                        for i in 0..n {
                            if status[i] == CoordStatus::Free && best.is_none_or(|b| g[i] < g[b]) {
                                best = Some(i);
                            }
                        }
                        y[best.unwrap_or(0)] = p.scale;
                    }
                    _ => {
                        for i in 0..n {
                            y[i] = match status[i] {
                                CoordStatus::AtLower => 0.0,
                                CoordStatus::AtUpper => p.scale,
                                CoordStatus::Free => {
                                    if g[i] < 0.0 {
                                        p.scale
                                    } else {
                                        0.0
                                    }
                                }
                            };
                        }
                    }
                }
                y
            }
            (Domain::Polytope(p), FaceDescriptor::L1Signs(signs)) => {
                let mut best: Option<(usize, f64)> = None;
                for (i, &s) in signs.iter().enumerate() {
                    if s != 0 {
                        let val = s as f64 * g[i];
                        if best.is_none_or(|(_, b)| val < b) {
                            best = Some((i, val));
                        }
                    }
                }
                let mut y = Vector::zeros(p.dim);
                if let Some((i, _)) = best {
                    y[i] = signs[i] as f64 * p.scale;
                }
                y
            }
            (Domain::Product(pd), FaceDescriptor::Product(faces)) => {
                let parts: Vec<Vector> =
                    (0..pd.blocks.len()).map(|i| pd.blocks[i].face_lmo(&faces[i], &pd.slice(g, i))).collect();
                pd.concat(&parts)
            }
            _ => self.lmo(&neg),
        }
    }

    /// Largest α ≥ 0 with x + αd ∈ Ω (+∞ if unbounded, i.e. d = 0).
    pub fn max_feasible_step(&self, x: &Vector, d: &Vector) -> f64 {
        if d.iter().all(|v| *v == 0.0) {
            return f64::INFINITY;
        }
        match self {
            Domain::Polytope(p) => {
                let tol = PIN_TOL * p.scale;
                match p.family {
                    PolytopeFamily::Simplex => {
                        if d.sum().abs() > 1e-10 * d.lp_norm(1) {
                            return 0.0;
                        }
                        let mut a = f64::INFINITY;
                        for i in 0..p.dim {
                            if d[i] < 0.0 {
                                let xi = if x[i] <= tol { 0.0 } else { x[i] };
                                a = a.min(xi / -d[i]);
                            }
                        }
                        a
                    }
                    PolytopeFamily::Box => {
                        let mut a = f64::INFINITY;
                        for i in 0..p.dim {
                            if d[i] < 0.0 {
                                let xi = if x[i] <= tol { 0.0 } else { x[i] };
                                a = a.min(xi / -d[i]);
                            } else if d[i] > 0.0 {
                                let room = if x[i] >= p.scale - tol { 0.0 } else { p.scale - x[i] };
                                a = a.min(room / d[i]);
                            }
                        }
                        a
                    }
                    PolytopeFamily::L1Ball => l1_max_step(x, d, p.scale),
                }
            }
            Domain::Sublevel(s) => {
                let z = x - &s.center;
                let hd = &s.hessian * d;
                let qa = 0.5 * d.dot(&hd);
                let qb = z.dot(&hd);
                let qc = (0.5 * z.dot(&(&s.hessian * &z)) - s.level).min(0.0);
                if s.on_boundary(x) && qb >= 0.0 {
                    return 0.0;
                }
                let disc = (qb * qb - 4.0 * qa * qc).max(0.0);
                if qb >= 0.0 {
                    -2.0 * qc / (qb + disc.sqrt())
                } else {
                    (-qb + disc.sqrt()) / (2.0 * qa)
                }
            }
            Domain::Smooth(b) => {
                let SmoothKind::LpBall { p } = b.kind;
                lp_max_step(x, d, p, b.radius)
            }
            Domain::Product(pd) => {
                let mut a = f64::INFINITY;
                for i in 0..pd.blocks.len() {
                    let di = pd.slice(d, i);
                    if di.iter().any(|v| *v != 0.0) {
                        a = a.min(pd.blocks[i].max_feasible_step(&pd.slice(x, i), &di));
                    }
                }
                a
            }
        }
    }

    /// Projection of g onto the tangent cone at x and its norm π_x(g).
    pub fn tangent_projection(&self, x: &Vector, g: &Vector) -> Result<(Vector, f64)> {
        self.check_feasible(x)?;
        self.check_dim(g)?;
        let t = self.tangent_unchecked(x, g);
        let n = t.norm();
        Ok((t, n))
    }

    fn tangent_unchecked(&self, x: &Vector, g: &Vector) -> Vector {
        match self {
            Domain::Polytope(p) => match self.face_unchecked(x) {
                FaceDescriptor::Whole => g.clone(),
                FaceDescriptor::Coordinates(status) => match p.family {
                    PolytopeFamily::Simplex => {
                        let mut sum_free = 0.0;
                        let mut n_free = 0;
                        let mut pinned = Vec::new();
                        for i in 0..p.dim {
                            if status[i] == CoordStatus::Free {
                                sum_free += g[i];
                                n_free += 1;
                            } else {
                                pinned.push(g[i]);
                            }
                        }
                        let nu = shifted_root(sum_free, n_free.max(1), &pinned);
                        Vector::from_fn(p.dim, |i, _| match status[i] {
                            CoordStatus::Free => g[i] - nu,
                            _ => (g[i] - nu).max(0.0),
                        })
                    }
                    _ => Vector::from_fn(p.dim, |i, _| match status[i] {
                        CoordStatus::Free => g[i],
                        CoordStatus::AtLower => g[i].max(0.0),
                        CoordStatus::AtUpper => g[i].min(0.0),
                    }),
                },
                FaceDescriptor::L1Signs(signs) => {
                    let mut base = 0.0;
                    let mut count = 0;
                    let mut zs = Vec::new();
                    for i in 0..p.dim {
                        if signs[i] != 0 {
                            base += signs[i] as f64 * g[i];
                            count += 1;
                        } else {
                            zs.push(g[i].abs());
                        }
                    }
                    let excess = base + zs.iter().sum::<f64>();
                    if excess <= 0.0 {
                        return g.clone();
                    }
                    let lam = shifted_root(base, count.max(1), &zs).max(0.0);
                    Vector::from_fn(p.dim, |i, _| {
                        if signs[i] != 0 {
                            g[i] - lam * signs[i] as f64
                        } else {
                            g[i].signum() * (g[i].abs() - lam).max(0.0)
                        }
                    })
                }
                _ => g.clone(),
            },
            Domain::Sublevel(_) | Domain::Smooth(_) => {
                if !self.smooth_on_boundary(x) {
                    return g.clone();
                }
                let j = self.normal_unchecked(x);
                let c = g.dot(&j);
                if c > 0.0 {
                    g - j * c
                } else {
                    g.clone()
                }
            }
            Domain::Product(pd) => {
                let parts: Vec<Vector> = (0..pd.blocks.len())
                    .map(|i| pd.blocks[i].tangent_unchecked(&pd.slice(x, i), &pd.slice(g, i)))
                    .collect();
                pd.concat(&parts)
            }
        }
    }

    fn normal_unchecked(&self, x: &Vector) -> Vector {
        let v = match self {
            Domain::Sublevel(s) => s.grad_h(x),
            Domain::Smooth(b) => {
                let SmoothKind::LpBall { p } = b.kind;
                let m = x.amax().max(f64::MIN_POSITIVE);
                x.map(|v| signed_pow(v / m, p - 1.0))
            }
            _ => Vector::zeros(x.len()),
        };
        let n = v.norm();
        if n > 0.0 {
            v / n
        } else {
            v
        }
    }

    /// Unit outward normal at a boundary point of a smooth domain.
    pub fn outward_normal(&self, x: &Vector) -> Result<Vector> {
        if !self.is_smooth() {
            return Err(Error::Domain(format!("outward normal undefined on {}", self.name())));
        }
        self.check_dim(x)?;
        if !self.smooth_on_boundary(x) || self.violation(x) > FEAS_TOL {
            return Err(Error::Domain("point is not on the boundary".into()));
        }
        Ok(self.normal_unchecked(x))
    }

    /// First intersection of the domain with x + u − t·J(x), t ≥ 0.
    pub fn orthographic_retraction(&self, x: &Vector, u: &Vector) -> Result<Vector> {
        Ok(x + self.retraction_step(x, u)?)
    }

    /// P(x, u) − x = u − t·J(x), computed without forming P. The target is the
    /// level set through x (x is on ∂Ω up to tolerance), so the displacement
    /// stays accurate when u is tiny.
    pub fn retraction_step(&self, x: &Vector, u: &Vector) -> Result<Vector> {
        let j = self.outward_normal(x)?;
        if u.iter().all(|v| *v == 0.0) {
            return Ok(Vector::zeros(x.len()));
        }
        match self {
            Domain::Sublevel(s) => {
                // h(x + u − tJ) − h(x) = qa t² + qb t + qc
                let xc = x - &s.center;
                let w = &xc + u;
                let hu = &s.hessian * u;
                let hj = &s.hessian * &j;
                let qa = 0.5 * j.dot(&hj);
                let qb = -w.dot(&hj);
                let qc = (xc.dot(&hu) + 0.5 * u.dot(&hu)).max(0.0);
                let disc = qb * qb - 4.0 * qa * qc;
                if disc < 0.0 || (qc > 0.0 && qb >= 0.0) {
                    return Err(Error::RetractionUndefined(format!(
                        "normal line misses the sublevel set (disc {disc:.3e})"
                    )));
                }
                let t = if qc == 0.0 { 0.0 } else { 2.0 * qc / (-qb + disc.sqrt()) };
                Ok(u - &j * t)
            }
            Domain::Smooth(b) => {
                let SmoothKind::LpBall { p } = b.kind;
                lp_retract_step(x, u, &j, p, b.radius)
            }
            _ => unreachable!(),
        }
    }

    /// Lower bound on the shrinking coefficient at a boundary point.
    pub fn shrink_coefficient_bound(&self, x: &Vector, g: &Vector) -> Result<f64> {
        let j = self.outward_normal(x)?;
        let c = g.dot(&j).max(0.0);
        let tang = (g - &j * c).norm();
        if tang <= 1e-12 * g.norm() || g.norm() == 0.0 {
            return Err(Error::Domain("no tangential component".into()));
        }
        match self {
            Domain::Sublevel(s) => Ok(s.grad_h(x).norm() / (g.norm() * s.l_h)),
            Domain::Smooth(b) => {
                let SmoothKind::LpBall { p } = b.kind;
                if p >= 2.0 {
                    // φ(y) = ‖y‖_p^p has Hessian entries p(p−1)|y_i|^{p−2} ≤ p(p−1)(3r)^{p−2}
                    // on the region reachable by the retraction
                    let grad_phi = x.map(|v| p * signed_pow(v, p - 1.0)).norm();
                    let l_phi = p * (p - 1.0) * (3.0 * b.radius).powf(p - 2.0);
                    Ok(grad_phi / (g.norm() * l_phi))
                } else {
                    Ok(b.radius / g.norm())
                }
            }
            _ => Err(Error::Domain("shrink bound needs a smooth domain".into())),
        }
    }

    pub fn diameter(&self) -> f64 {
        match self {
            Domain::Polytope(p) => match p.family {
                PolytopeFamily::Simplex => {
                    if p.dim <= 1 {
                        0.0
                    } else {
                        std::f64::consts::SQRT_2 * p.scale
                    }
                }
                PolytopeFamily::L1Ball => 2.0 * p.scale,
                PolytopeFamily::Box => (p.dim as f64).sqrt() * p.scale,
            },
            Domain::Sublevel(s) => 2.0 * (2.0 * s.level / s.mu_h).sqrt(),
            Domain::Smooth(b) => {
                let SmoothKind::LpBall { p } = b.kind;
                if p <= 2.0 {
                    2.0 * b.radius
                } else {
                    2.0 * b.radius * (b.dim as f64).powf(0.5 - 1.0 / p)
                }
            }
            Domain::Product(pd) => pd.blocks.iter().map(|b| b.diameter().powi(2)).sum::<f64>().sqrt(),
        }
    }

    /// Removes roundoff drift after a step: clamps near-bound coordinates and
    /// pulls points that leaked outside back onto the boundary.
    pub fn snap(&self, x: &Vector) -> Vector {
        match self {
            Domain::Polytope(p) => {
                let tol = PIN_TOL * p.scale;
                match p.family {
                    PolytopeFamily::Simplex => {
                        let mut y = x.map(|v| if v <= tol { 0.0 } else { v });
                        let s = y.sum();
                        if s > 0.0 {
                            y *= p.scale / s;
                        }
                        y
                    }
                    PolytopeFamily::Box => x.map(|v| {
                        if v <= tol {
                            0.0
                        } else if v >= p.scale - tol {
                            p.scale
                        } else {
                            v
                        }
                    }),
                    PolytopeFamily::L1Ball => {
                        let mut y = x.map(|v| if v.abs() <= tol { 0.0 } else { v });
                        let n1 = y.lp_norm(1);
                        if n1 > p.scale * (1.0 - PIN_TOL) {
                            y *= p.scale / n1;
                        }
                        y
                    }
                }
            }
            Domain::Sublevel(s) => {
                let h = s.h(x);
                if h <= s.level {
                    return x.clone();
                }
                let z = x - &s.center;
                shrink_until(|t| &s.center + &z * t, (s.level / h).sqrt(), |y| s.h(y) <= s.level)
            }
            Domain::Smooth(b) => {
                let SmoothKind::LpBall { p } = b.kind;
                let n = lp_norm(x, p);
                if n <= b.radius {
                    return x.clone();
                }
                shrink_until(|t| x * t, b.radius / n, |y| lp_norm(y, p) <= b.radius)
            }
            Domain::Product(pd) => {
                let parts: Vec<Vector> = (0..pd.blocks.len()).map(|i| pd.blocks[i].snap(&pd.slice(x, i))).collect();
                pd.concat(&parts)
            }
        }
    }

    /// Explicit vertex list of a polytope (Box only up to 16 coordinates).
    pub fn vertices(&self) -> Option<Vec<Vector>> {
        let Domain::Polytope(p) = self else { return None };
        let n = p.dim;
        let e = |i: usize, v: f64| {
            let mut x = Vector::zeros(n);
            x[i] = v;
            x
        };
        match p.family {
            PolytopeFamily::Simplex => Some((0..n).map(|i| e(i, p.scale)).collect()),
            PolytopeFamily::L1Ball => Some((0..n).flat_map(|i| [e(i, p.scale), e(i, -p.scale)]).collect()),
            PolytopeFamily::Box => {
                if n > 16 {
                    return None;
                }
                Some(
                    (0..1usize << n)
                        .map(|m| Vector::from_fn(n, |i, _| if m >> i & 1 == 1 { p.scale } else { 0.0 }))
                        .collect(),
                )
            }
        }
    }

    /// Monte Carlo estimate of sup_{h ∈ Ω∖{x}} ⟨g, (h−x)/‖h−x‖⟩, clipped at 0.
    pub fn slope_oracle(&self, x: &Vector, g: &Vector, samples: usize, seed: u64) -> f64 {
        let gn = g.norm();
        if gn == 0.0 {
            return 0.0;
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = x.len();
        let mut best = 0.0f64;
        let mut extremes: Vec<Vector> = Vec::with_capacity(3);
        for _ in 0..samples {
            extremes.clear();
            let k = rng.gen_range(1..=3usize);
            for _ in 0..k {
                let spread = 10f64.powf(rng.gen_range(-4.0..3.0)) * gn;
                let z: Vector = Vector::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal));
                let dir = if rng.gen_bool(0.2) { z } else { g + z * (spread / (n as f64).sqrt()) };
                extremes.push(self.lmo(&dir));
            }
            let mut d = Vector::zeros(n);
            for e in &extremes {
                d += (e - x) * rng.gen::<f64>();
            }
            let dn = d.norm();
            if dn > 1e-14 {
                best = best.max(g.dot(&d) / dn);
            }
        }
        best
    }
}

impl SublevelSet {
    fn boundary_offset_along_first_axis(&self) -> Vector {
        let n = self.dim();
        let mut e = Vector::zeros(n);
        e[0] = 1.0;
        let he = 0.5 * self.hessian[(0, 0)];
        e * (self.level / he).sqrt()
    }
}

/// Evaluates `at(t)` for t, then for t shrunk by one ulp at a time, until `ok` holds.
fn shrink_until(at: impl Fn(f64) -> Vector, mut t: f64, ok: impl Fn(&Vector) -> bool) -> Vector {
    let mut y = at(t);
    for _ in 0..64 {
        if ok(&y) {
            break;
        }
        t *= 1.0 - f64::EPSILON;
        y = at(t);
    }
    y
}

fn argmax_first(it: impl Iterator<Item = f64>) -> usize {
    let mut best = 0;
    let mut val = f64::NEG_INFINITY;
    for (i, v) in it.enumerate() {
        if v > val {
            best = i;
            val = v;
        }
    }
    best
}

fn l1_max_step(x: &Vector, d: &Vector, scale: f64) -> f64 {
    let n = x.len();
    let dn1 = d.lp_norm(1);
    let slope_tol = 1e-12 * dn1;
    let phi0 = x.lp_norm(1);
    let mut budget = (scale - phi0).max(0.0);
    if phi0 >= scale * (1.0 - PIN_TOL) {
        budget = 0.0;
    }
    let tol = PIN_TOL * scale;
    let mut bps: Vec<(f64, usize)> = Vec::new();
    for i in 0..n {
        if d[i] != 0.0 && x[i].abs() > tol && x[i].signum() != d[i].signum() {
            bps.push((-x[i] / d[i], i));
        }
    }
    bps.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    // right-derivative of ‖x + αd‖₁ at α = 0
    let mut slope: f64 = (0..n).map(|i| if x[i].abs() > tol { x[i].signum() * d[i] } else { d[i].abs() }).sum();
    let mut alpha = 0.0;
    for (bp, i) in bps {
        if slope > slope_tol {
            let reach = alpha + budget / slope;
            if reach <= bp {
                return reach;
            }
        }
        budget -= slope * (bp - alpha);
        if budget < 0.0 {
            budget = 0.0;
        }
        alpha = bp;
        // coordinate i flips from −|d_i| to +|d_i|
        slope += 2.0 * d[i].abs();
    }
    if slope > slope_tol {
        alpha + budget / slope
    } else {
        f64::INFINITY
    }
}

fn lp_pow_sum(z: &Vector, p: f64) -> f64 {
    z.iter().map(|v| v.abs().powf(p)).sum()
}

fn lp_max_step(x: &Vector, d: &Vector, p: f64, r: f64) -> f64 {
    let rp = r.powf(p);
    let psi = |a: f64| lp_pow_sum(&(x + d * a), p) - rp;
    let deriv0: f64 = (0..x.len()).map(|i| p * signed_pow(x[i], p - 1.0) * d[i]).sum();
    let psi0 = psi(0.0);
    if psi0 >= -FEAS_TOL * rp && deriv0 >= 0.0 {
        return 0.0;
    }
    let mut lo = 0.0;
    let mut hi = r / d.amax();
    let mut guard = 0;
    while psi(hi) <= 0.0 {
        lo = hi;
        hi *= 2.0;
        guard += 1;
        if guard > 200 {
            return f64::INFINITY;
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if psi(mid) <= 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

/// |a + δ|^p − |a|^p without cancellation when δ is small against a.
fn pow_increment(a: f64, delta: f64, p: f64) -> f64 {
    let q = delta / a;
    if a != 0.0 && q > -0.5 && q.is_finite() {
        a.abs().powf(p) * (p * q.ln_1p()).exp_m1()
    } else {
        (a + delta).abs().powf(p) - a.abs().powf(p)
    }
}

/// Displacement u − tJ onto the ℓp level set through x.
fn lp_retract_step(x: &Vector, u: &Vector, j: &Vector, p: f64, r: f64) -> Result<Vector> {
    let scale = r.powf(p);
    let psi = |t: f64| (0..x.len()).map(|i| pow_increment(x[i], u[i] - t * j[i], p)).sum::<f64>();
    let dpsi = |t: f64| -(0..x.len()).map(|i| p * signed_pow(x[i] + u[i] - t * j[i], p - 1.0) * j[i]).sum::<f64>();
    let limit = 4.0 * r + u.norm();
    if psi(0.0) <= 0.0 {
        return Ok(u.clone());
    }
    let mut t = 0.0;
    for _ in 0..500 {
        let v = psi(t);
        if v <= 0.0 {
            break;
        }
        let dv = dpsi(t);
        if !(dv < 0.0) {
            return Err(Error::RetractionUndefined("normal line does not enter the ball".into()));
        }
        let nt = t - v / dv;
        if nt > limit {
            return Err(Error::RetractionUndefined("bracket expansion limit reached".into()));
        }
        if nt <= t {
            break;
        }
        t = nt;
    }
    // Newton iterates stay left of the root; finish by bisection on a tight bracket.
    let mut lo = t;
    let mut width = f64::EPSILON * (t.abs() + f64::MIN_POSITIVE) + 1e-30 * scale;
    let mut hi = t + width;
    let mut grow = 0;
    while psi(hi) > 0.0 {
        width *= 4.0;
        hi = t + width;
        grow += 1;
        if grow > 200 || hi > limit {
            return Err(Error::RetractionUndefined("no boundary intersection".into()));
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if psi(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(u - j * hi)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(x: &[f64]) -> Vector {
        Vector::from_column_slice(x)
    }

    fn close(a: &Vector, b: &Vector, tol: f64) -> bool {
        (a - b).amax() <= tol
    }

    #[test]
    fn lmo_examples() {
        assert_eq!(Domain::simplex(3, 1.0).lmo(&v(&[0.5, 2.0, -1.0])), v(&[0.0, 1.0, 0.0]));
        assert_eq!(Domain::l1_ball(3, 1.0).lmo(&v(&[0.0, -3.0, 1.0])), v(&[0.0, -1.0, 0.0]));
        let s = Domain::lp_ball(2, 2.0, 1.0).unwrap().lmo(&v(&[3.0, 4.0]));
        assert!(close(&s, &v(&[0.6, 0.8]), 1e-14));
        let s = Domain::sublevel(SublevelSet::ball(Vector::zeros(2), 1.0).unwrap()).lmo(&v(&[3.0, 4.0]));
        assert!(close(&s, &v(&[0.6, 0.8]), 1e-14));
    }

    #[test]
    fn minimal_face_examples() {
        let d = Domain::simplex(3, 1.0);
        let f = d.minimal_face(&v(&[0.5, 0.5, 0.0])).unwrap();
        assert_eq!(f, FaceDescriptor::Coordinates(vec![CoordStatus::Free, CoordStatus::Free, CoordStatus::AtLower]));
        assert!(d.minimal_face(&v(&[1.0 / 3.0; 3])).unwrap().is_whole());
        let l1 = Domain::l1_ball(2, 1.0);
        assert_eq!(l1.minimal_face(&v(&[0.3, -0.7])).unwrap(), FaceDescriptor::L1Signs(vec![1, -1]));
        assert!(matches!(d.minimal_face(&v(&[0.9, 0.9, 0.0])), Err(Error::Infeasible(_))));
    }

    #[test]
    fn face_lmo_examples() {
        let d = Domain::simplex(3, 1.0);
        let face = FaceDescriptor::Coordinates(vec![CoordStatus::Free, CoordStatus::Free, CoordStatus::AtLower]);
        assert_eq!(d.face_lmo(&face, &v(&[1.0, -1.0, 5.0])), v(&[0.0, 1.0, 0.0]));
        let b = Domain::cube(2, 1.0);
        let face = FaceDescriptor::Coordinates(vec![CoordStatus::AtUpper, CoordStatus::Free]);
        assert_eq!(b.face_lmo(&face, &v(&[0.0, 1.0])), v(&[1.0, 0.0]));
        let s2 = Domain::simplex(2, 1.0);
        assert_eq!(s2.face_lmo(&FaceDescriptor::Whole, &v(&[2.0, 2.0])), v(&[1.0, 0.0]));
    }

    #[test]
    fn max_step_examples() {
        let d = Domain::simplex(3, 1.0);
        assert!((d.max_feasible_step(&v(&[0.5, 0.5, 0.0]), &v(&[1.0, -1.0, 0.0])) - 0.5).abs() < 1e-15);
        let ball = Domain::lp_ball(2, 2.0, 1.0).unwrap();
        assert!((ball.max_feasible_step(&v(&[0.0, 0.0]), &v(&[0.6, 0.8])) - 1.0).abs() < 1e-12);
        let sub = Domain::sublevel(SublevelSet::ball(Vector::zeros(2), 1.0).unwrap());
        let a = sub.max_feasible_step(&v(&[0.6, 0.0]), &v(&[0.0, 1.0]));
        assert!((a - 0.8).abs() < 1e-14);
        // bisection cross-check
        let (mut lo, mut hi) = (0.0, 2.0);
        for _ in 0..100 {
            let m = 0.5 * (lo + hi);
            if 0.36 + m * m <= 1.0 {
                lo = m
            } else {
                hi = m
            }
        }
        assert!((a - lo).abs() < 1e-12);
    }

    #[test]
    fn tangent_examples() {
        let d = Domain::simplex(3, 1.0);
        let (t, pi) = d.tangent_projection(&v(&[1.0 / 3.0; 3]), &v(&[1.0, 0.0, 0.0])).unwrap();
        assert!(close(&t, &v(&[2.0 / 3.0, -1.0 / 3.0, -1.0 / 3.0]), 1e-15));
        assert!((pi - 6f64.sqrt() / 3.0).abs() < 1e-15);
        let ball = Domain::lp_ball(2, 2.0, 1.0).unwrap();
        let (t, pi) = ball.tangent_projection(&v(&[1.0, 0.0]), &v(&[2.0, 0.0])).unwrap();
        assert_eq!(pi, 0.0);
        assert!(close(&t, &v(&[0.0, 0.0]), 0.0));
        let (_, pi) = ball.tangent_projection(&v(&[1.0, 0.0]), &v(&[0.0, 3.0])).unwrap();
        assert!((pi - 3.0).abs() < 1e-15);
    }

    #[test]
    fn slope_oracle_simplex_interior() {
        let d = Domain::simplex(3, 1.0);
        let s = d.slope_oracle(&v(&[1.0 / 3.0; 3]), &v(&[1.0, 0.0, 0.0]), 20_000, 1);
        assert!((s - 0.81650).abs() < 1e-2, "{s}");
        assert_eq!(d.slope_oracle(&v(&[1.0 / 3.0; 3]), &Vector::zeros(3), 10, 1), 0.0);
        let ball = Domain::lp_ball(2, 2.0, 1.0).unwrap();
        assert!(ball.slope_oracle(&v(&[1.0, 0.0]), &v(&[2.0, 0.0]), 1000, 3) <= 1e-9);
    }

    #[test]
    fn normal_examples() {
        let ball = Domain::lp_ball(2, 2.0, 1.0).unwrap();
        assert!(close(&ball.outward_normal(&v(&[0.0, 1.0])).unwrap(), &v(&[0.0, 1.0]), 1e-15));
        let sub = Domain::sublevel(SublevelSet::ball(Vector::zeros(2), 1.0).unwrap());
        assert!(close(&sub.outward_normal(&v(&[1.0, 0.0])).unwrap(), &v(&[1.0, 0.0]), 1e-15));
        let p4 = Domain::lp_ball(2, 4.0, 1.0).unwrap();
        assert!(close(&p4.outward_normal(&v(&[1.0, 0.0])).unwrap(), &v(&[1.0, 0.0]), 1e-15));
        assert!(matches!(ball.outward_normal(&v(&[0.2, 0.1])), Err(Error::Domain(_))));
    }

    #[test]
    fn retraction_examples() {
        let ball = Domain::lp_ball(2, 2.0, 1.0).unwrap();
        let p = ball.orthographic_retraction(&v(&[1.0, 0.0]), &v(&[0.0, 0.6])).unwrap();
        assert!(close(&p, &v(&[0.8, 0.6]), 1e-12));
        let sub = Domain::sublevel(SublevelSet::ball(Vector::zeros(2), 1.0).unwrap());
        let p = sub.orthographic_retraction(&v(&[1.0, 0.0]), &v(&[0.0, 0.6])).unwrap();
        assert!(close(&p, &v(&[0.8, 0.6]), 1e-14));
        assert_eq!(sub.orthographic_retraction(&v(&[1.0, 0.0]), &v(&[0.0, 0.0])).unwrap(), v(&[1.0, 0.0]));
        let ell =
            Domain::sublevel(SublevelSet::new(Matrix::from_diagonal(&v(&[1.0, 4.0])), Vector::zeros(2), 0.5).unwrap());
        let p = ell.orthographic_retraction(&v(&[1.0, 0.0]), &v(&[0.0, 0.3])).unwrap();
        assert!(close(&p, &v(&[(1.0f64 - 4.0 * 0.09).sqrt(), 0.3]), 1e-14));
        assert!(matches!(
            sub.orthographic_retraction(&v(&[1.0, 0.0]), &v(&[0.0, 1.5])),
            Err(Error::RetractionUndefined(_))
        ));
    }

    #[test]
    fn shrink_bound_examples() {
        let sub = Domain::sublevel(SublevelSet::ball(Vector::zeros(2), 1.0).unwrap());
        assert!((sub.shrink_coefficient_bound(&v(&[1.0, 0.0]), &v(&[0.0, 2.0])).unwrap() - 0.5).abs() < 1e-15);
        assert!((sub.shrink_coefficient_bound(&v(&[1.0, 0.0]), &v(&[0.0, 1.0])).unwrap() - 1.0).abs() < 1e-15);
        let ell =
            Domain::sublevel(SublevelSet::new(Matrix::from_diagonal(&v(&[1.0, 4.0])), Vector::zeros(2), 0.5).unwrap());
        assert!((ell.shrink_coefficient_bound(&v(&[1.0, 0.0]), &v(&[0.0, 1.0])).unwrap() - 0.25).abs() < 1e-15);
        assert!(sub.shrink_coefficient_bound(&v(&[1.0, 0.0]), &v(&[3.0, 0.0])).is_err());
    }

    #[test]
    fn diameter_examples() {
        assert!((Domain::simplex(3, 1.0).diameter() - 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(Domain::lp_ball(3, 2.0, 1.0).unwrap().diameter(), 2.0);
        let sub = Domain::sublevel(SublevelSet::ball(Vector::zeros(3), 1.0).unwrap());
        assert!((sub.diameter() - 2.0).abs() < 1e-15);
        assert!((Domain::lp_ball(4, 4.0, 1.0).unwrap().diameter() - 2.0 * 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn shifted_root_matches_bisection() {
        let vals = [0.3, -1.0, 2.0, 0.7];
        let nu = shifted_root(1.5, 2, &vals);
        let f = |nu: f64| 1.5 - 2.0 * nu + vals.iter().map(|v| (v - nu).max(0.0)).sum::<f64>();
        assert!(f(nu).abs() < 1e-14);
    }

    #[test]
    fn l1_boundary_step_stays_on_face() {
        let d = Domain::l1_ball(3, 1.0);
        let x = v(&[0.5, -0.3, 0.2]);
        // move within the face toward +e1
        let dir = v(&[1.0, 0.0, 0.0]) - &x;
        assert!((d.max_feasible_step(&x, &dir) - 1.0).abs() < 1e-12);
        // leaving the ball from the boundary
        assert_eq!(d.max_feasible_step(&x, &v(&[0.0, 0.0, 1.0])), 0.0);
        // interior point
        let a = d.max_feasible_step(&v(&[0.1, 0.0, 0.0]), &v(&[-1.0, 0.0, 0.0]));
        assert!((a - 1.1).abs() < 1e-14);
    }
}
