//! Direction oracles and active-set bookkeeping.

use serde::{Deserialize, Serialize};

use crate::domains::{Domain, PolytopeFamily};
use crate::error::{Error, Result};
use crate::model::Vector;

/// ⟨g,d⟩ ≤ SLOPE_TOL·‖g‖‖d‖ counts as no descent.
pub const SLOPE_TOL: f64 = 1e-12;
const WEIGHT_DROP: f64 = 1e-15;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProductMode {
    Case1,
    Case2,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum Method {
    Fw,
    Afw,
    Pfw,
    Fdfw,
    Sor {
        #[serde(default = "default_tau_bar")]
        tau_bar: f64,
        #[serde(default = "default_nu_hat")]
        nu_hat: f64,
    },
    Product {
        mode: ProductMode,
        blocks: Vec<Method>,
    },
}

fn default_tau_bar() -> f64 {
    0.5
}
fn default_nu_hat() -> f64 {
    1.0
}

impl Method {
    pub fn sor() -> Self {
        Method::Sor { tau_bar: 0.5, nu_hat: 1.0 }
    }

    pub fn name(&self) -> String {
        match self {
            Method::Fw => "fw".into(),
            Method::Afw => "afw".into(),
            Method::Pfw => "pfw".into(),
            Method::Fdfw => "fdfw".into(),
            Method::Sor { .. } => "sor".into(),
            Method::Product { mode, blocks } => {
                let names: Vec<String> = blocks.iter().map(|b| b.name()).collect();
                format!("product-{:?}[{}]", mode, names.join(",")).to_lowercase()
            }
        }
    }

    fn uses_active_set(&self) -> bool {
        matches!(self, Method::Afw | Method::Pfw)
    }

    /// Checks that the method can run on the domain.
    pub fn check_admissible(&self, dom: &Domain) -> Result<()> {
        match (self, dom) {
            (Method::Afw | Method::Pfw, Domain::Polytope(_)) => Ok(()),
            (Method::Afw | Method::Pfw, _) => {
                Err(Error::UnsupportedPair(format!("{} needs an atom polytope, got {}", self.name(), dom.name())))
            }
            (Method::Sor { tau_bar, nu_hat }, d) if d.is_smooth() => {
                if !(*tau_bar > 0.0 && *tau_bar < 1.0 && *nu_hat > 0.0 && *nu_hat <= 1.0) {
                    return Err(Error::InvalidInput(format!("sor parameters tau_bar={tau_bar} nu_hat={nu_hat}")));
                }
                Ok(())
            }
            (Method::Sor { .. }, _) => {
                Err(Error::UnsupportedPair(format!("sor needs a smooth domain, got {}", dom.name())))
            }
            (Method::Product { blocks, .. }, Domain::Product(pd)) => {
                if blocks.len() != pd.blocks().len() {
                    return Err(Error::InvalidInput("one method per product block required".into()));
                }
                for (m, b) in blocks.iter().zip(pd.blocks()) {
                    m.check_admissible(b)?;
                }
                Ok(())
            }
            (Method::Product { .. }, _) => Err(Error::UnsupportedPair("product method on a non-product domain".into())),
            (_, Domain::Product(_)) => {
                Err(Error::UnsupportedPair(format!("{} on a product domain; use a product method", self.name())))
            }
            _ => Ok(()),
        }
    }
}

/// Atoms with positive weights whose combination is the current point.
#[derive(Clone, Debug, PartialEq)]
pub struct ActiveSet {
    pub atoms: Vec<Vector>,
    pub weights: Vec<f64>,
}

impl ActiveSet {
    pub fn new(atoms: Vec<Vector>, weights: Vec<f64>) -> Result<Self> {
        if atoms.is_empty() || atoms.len() != weights.len() {
            return Err(Error::InvalidActiveSet("atoms and weights must be nonempty and aligned".into()));
        }
        if weights.iter().any(|w| !(*w > 0.0)) {
            return Err(Error::InvalidActiveSet("weights must be positive".into()));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-10 {
            return Err(Error::InvalidActiveSet(format!("weights sum to {total}")));
        }
        Ok(Self { atoms, weights })
    }

    pub fn singleton(atom: Vector) -> Self {
        Self { atoms: vec![atom], weights: vec![1.0] }
    }

    /// Decomposes a feasible polytope point into vertices.
    pub fn from_point(dom: &Domain, x: &Vector) -> Result<Self> {
        dom.check_feasible(x)?;
        let Domain::Polytope(p) = dom else {
            return Err(Error::InvalidActiveSet(format!("no atoms for {}", dom.name())));
        };
        let n = p.dim;
        let s = p.scale;
        let unit = |i: usize, v: f64| {
            let mut e = Vector::zeros(n);
            e[i] = v;
            e
        };
        let mut atoms = Vec::new();
        let mut weights = Vec::new();
        match p.family {
            PolytopeFamily::Simplex => {
                for i in 0..n {
                    if x[i] > 0.0 {
                        atoms.push(unit(i, s));
                        weights.push(x[i] / s);
                    }
                }
            }
            PolytopeFamily::L1Ball => {
                for i in 0..n {
                    if x[i] != 0.0 {
                        atoms.push(unit(i, s * x[i].signum()));
                        weights.push(x[i].abs() / s);
                    }
                }
                let rest = 1.0 - weights.iter().sum::<f64>();
                if rest > WEIGHT_DROP {
                    atoms.push(unit(0, s));
                    weights.push(0.5 * rest);
                    atoms.push(unit(0, -s));
                    weights.push(0.5 * rest);
                }
            }
            PolytopeFamily::Box => {
                // threshold decomposition: x = Σ (t_k − t_{k+1}) · s·1{x ≥ s·t_k}
                let mut levels: Vec<f64> = x.iter().map(|v| (v / s).clamp(0.0, 1.0)).collect();
                levels.push(0.0);
                levels.push(1.0);
                levels.sort_by(|a, b| b.partial_cmp(a).unwrap());
                levels.dedup();
                for w in levels.windows(2) {
                    let (hi, lo) = (w[0], w[1]);
                    if hi - lo > 0.0 {
                        atoms.push(Vector::from_fn(n, |i, _| if x[i] / s >= hi { s } else { 0.0 }));
                        weights.push(hi - lo);
                    }
                }
            }
        }
        let mut set = ActiveSet { atoms, weights };
        set.clean()?;
        Ok(set)
    }

    pub fn point(&self) -> Vector {
        let mut x = Vector::zeros(self.atoms[0].len());
        for (a, w) in self.atoms.iter().zip(&self.weights) {
            x.axpy(*w, a, 1.0);
        }
        x
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn check_represents(&self, x: &Vector, tol: f64) -> Result<()> {
        let err = (self.point() - x).amax();
        if err > tol {
            return Err(Error::InvalidActiveSet(format!("reconstruction error {err:.3e}")));
        }
        Ok(())
    }

    fn position(&self, atom: &Vector) -> Option<usize> {
        self.atoms.iter().position(|a| a == atom)
    }

    /// Index of argmin_{q ∈ S} ⟨q, g⟩, lowest index on ties.
    pub fn away_atom(&self, g: &Vector) -> usize {
        let mut best = 0;
        let mut val = f64::INFINITY;
        for (i, a) in self.atoms.iter().enumerate() {
            let v = a.dot(g);
            if v < val {
                best = i;
                val = v;
            }
        }
        best
    }

    fn clean(&mut self) -> Result<()> {
        if let Some(w) = self.weights.iter().find(|w| **w < -1e-12) {
            return Err(Error::NumericConsistency(format!("negative atom weight {w:.3e}")));
        }
        let mut i = 0;
        while i < self.weights.len() {
            if self.weights[i] <= WEIGHT_DROP {
                self.weights.swap_remove(i);
                self.atoms.swap_remove(i);
            } else {
                i += 1;
            }
        }
        let total: f64 = self.weights.iter().sum();
        if self.atoms.is_empty() || !(total > 0.0) {
            return Err(Error::NumericConsistency("active set emptied".into()));
        }
        for w in &mut self.weights {
            *w /= total;
        }
        Ok(())
    }

    fn add_weight(&mut self, atom: &Vector, w: f64) {
        match self.position(atom) {
            Some(i) => self.weights[i] += w,
            None => {
                self.atoms.push(atom.clone());
                self.weights.push(w);
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum DirectionKind {
    FW,
    Away,
    Pairwise,
    InFace,
    SOR,
    Zero,
    ProductComposite,
}

/// A block's share of a product direction: the block moves by `alpha * scale` along `choice.d`.
#[derive(Clone, Debug)]
pub struct BlockStep {
    pub choice: DirectionChoice,
    pub scale: f64,
}

#[derive(Clone, Debug)]
pub struct DirectionChoice {
    pub d: Vector,
    pub alpha_max: f64,
    pub kind: DirectionKind,
    /// Atom to add (FW and pairwise steps).
    pub s: Option<Vector>,
    /// Active-set index of the atom that loses weight (away and pairwise steps).
    pub q: Option<usize>,
    pub blocks: Option<Vec<BlockStep>>,
}

impl DirectionChoice {
    pub fn zero(n: usize) -> Self {
        Self { d: Vector::zeros(n), alpha_max: 0.0, kind: DirectionKind::Zero, s: None, q: None, blocks: None }
    }

    pub fn is_zero(&self) -> bool {
        self.kind == DirectionKind::Zero
    }

    fn simple(d: Vector, alpha_max: f64, kind: DirectionKind) -> Self {
        Self { d, alpha_max, kind, s: None, q: None, blocks: None }
    }
}

fn is_descent(g: &Vector, d: &Vector) -> bool {
    let dn = d.norm();
    dn > 0.0 && g.dot(d) > SLOPE_TOL * g.norm() * dn
}

/// d = lmo(g) − x with α_max = 1.
pub fn fw_direction(dom: &Domain, x: &Vector, g: &Vector) -> DirectionChoice {
    fw_with_lmo(x, g, &dom.lmo(g))
}

fn fw_with_lmo(x: &Vector, g: &Vector, s: &Vector) -> DirectionChoice {
    let d = s - x;
    if !is_descent(g, &d) {
        return DirectionChoice::zero(x.len());
    }
    DirectionChoice { d, alpha_max: 1.0, kind: DirectionKind::FW, s: Some(s.clone()), q: None, blocks: None }
}

pub fn afw_direction(dom: &Domain, x: &Vector, g: &Vector, set: &ActiveSet) -> Result<DirectionChoice> {
    set.check_represents(x, 1e-9)?;
    Ok(afw_with_lmo(dom, x, g, set, &dom.lmo(g)))
}

fn afw_with_lmo(dom: &Domain, x: &Vector, g: &Vector, set: &ActiveSet, s: &Vector) -> DirectionChoice {
    let d_fw = s - x;
    let qi = set.away_atom(g);
    let d_a = x - &set.atoms[qi];
    if g.dot(&d_a) > g.dot(&d_fw) {
        if !is_descent(g, &d_a) {
            return DirectionChoice::zero(x.len());
        }
        let lq = set.weights[qi];
        let alpha_max = if lq < 1.0 { lq / (1.0 - lq) } else { dom.max_feasible_step(x, &d_a) };
        DirectionChoice { d: d_a, alpha_max, kind: DirectionKind::Away, s: None, q: Some(qi), blocks: None }
    } else {
        fw_with_lmo(x, g, s)
    }
}

pub fn pfw_direction(dom: &Domain, x: &Vector, g: &Vector, set: &ActiveSet) -> Result<DirectionChoice> {
    set.check_represents(x, 1e-9)?;
    Ok(pfw_with_lmo(x, g, set, &dom.lmo(g)))
}

fn pfw_with_lmo(x: &Vector, g: &Vector, set: &ActiveSet, s: &Vector) -> DirectionChoice {
    let qi = set.away_atom(g);
    if &set.atoms[qi] == s {
        return DirectionChoice::zero(x.len());
    }
    let d = s - &set.atoms[qi];
    if !is_descent(g, &d) {
        return DirectionChoice::zero(x.len());
    }
    DirectionChoice {
        d,
        alpha_max: set.weights[qi],
        kind: DirectionKind::Pairwise,
        s: Some(s.clone()),
        q: Some(qi),
        blocks: None,
    }
}

pub fn fdfw_direction(dom: &Domain, x: &Vector, g: &Vector) -> Result<DirectionChoice> {
    fdfw_with_lmo(dom, x, g, &dom.lmo(g))
}

fn fdfw_with_lmo(dom: &Domain, x: &Vector, g: &Vector, s: &Vector) -> Result<DirectionChoice> {
    let face = dom.minimal_face(x)?;
    let d_a = x - dom.face_lmo(&face, g);
    let d_fw = s - x;
    if g.dot(&d_a) > g.dot(&d_fw) {
        if !is_descent(g, &d_a) {
            return Ok(DirectionChoice::zero(x.len()));
        }
        let alpha_max = dom.max_feasible_step(x, &d_a);
        Ok(DirectionChoice::simple(d_a, alpha_max, DirectionKind::InFace))
    } else {
        Ok(fw_with_lmo(x, g, s))
    }
}

/// Slope ratio ⟨g, P − x⟩ / (π ‖P − x‖) of a retracted tangent step.
fn retraction_slope(dom: &Domain, x: &Vector, g: &Vector, gt: &Vector, pi: f64, lam: f64) -> Option<(Vector, f64)> {
    let d = dom.retraction_step(x, &(gt * lam)).ok()?;
    let dn = d.norm();
    if dn == 0.0 {
        return None;
    }
    Some((d.clone(), g.dot(&d) / (pi * dn)))
}

pub fn sor_direction(dom: &Domain, x: &Vector, g: &Vector, tau_bar: f64, nu_hat: f64) -> Result<DirectionChoice> {
    if !dom.is_smooth() {
        return Err(Error::UnsupportedPair(format!("sor on {}", dom.name())));
    }
    dom.check_feasible(x)?;
    let n = x.len();
    if g.norm() == 0.0 {
        return Ok(DirectionChoice::zero(n));
    }
    let interior = !dom.on_boundary(x);
    let j = if interior { None } else { Some(dom.outward_normal(x)?) };
    let gj = j.as_ref().map_or(-1.0, |j| g.dot(j));
    if interior || gj < 0.0 {
        let alpha_max = dom.max_feasible_step(x, g);
        if !(alpha_max > 0.0) {
            return Ok(DirectionChoice::zero(n));
        }
        return Ok(DirectionChoice::simple(g.clone(), alpha_max, DirectionKind::SOR));
    }
    let j = j.unwrap();
    let mut gt = g - &j * gj;
    // second pass: the first leaves an O(ε·gj) normal residue that swamps small π
    gt -= &j * j.dot(&gt);
    let pi = gt.norm();
    if pi <= SLOPE_TOL * g.norm() {
        return Ok(DirectionChoice::zero(n));
    }
    let mut lam = nu_hat * dom.shrink_coefficient_bound(x, g)?;
    let mut best = retraction_slope(dom, x, g, &gt, pi, lam).filter(|(_, s)| *s >= tau_bar);
    let mut halvings = 0;
    while best.is_none() {
        lam *= 0.5;
        halvings += 1;
        if halvings > 60 {
            return Err(Error::RetractionUndefined("no admissible shrinking coefficient".into()));
        }
        best = retraction_slope(dom, x, g, &gt, pi, lam).filter(|(_, s)| *s >= tau_bar);
    }
    if halvings == 0 {
        for _ in 0..30 {
            match retraction_slope(dom, x, g, &gt, pi, 2.0 * lam) {
                Some((d, s)) if s >= tau_bar => {
                    lam *= 2.0;
                    best = Some((d, s));
                }
                _ => break,
            }
        }
    }
    let (d, _) = best.unwrap();
    if !is_descent(g, &d) {
        return Ok(DirectionChoice::zero(n));
    }
    // x + d lies on the level set through x, so the whole chord is feasible
    Ok(DirectionChoice::simple(d, 1.0, DirectionKind::SOR))
}

/// Per-method mutable state carried across steps.
#[derive(Clone, Debug)]
pub enum MethodState {
    Stateless,
    Active(ActiveSet),
    Blocks(Vec<MethodState>),
}

impl MethodState {
    pub fn init(method: &Method, dom: &Domain, x: &Vector) -> Result<Self> {
        method.check_admissible(dom)?;
        match (method, dom) {
            (m, d) if m.uses_active_set() => Ok(MethodState::Active(ActiveSet::from_point(d, x)?)),
            (Method::Product { blocks, .. }, Domain::Product(pd)) => {
                let mut states = Vec::with_capacity(blocks.len());
                for (i, m) in blocks.iter().enumerate() {
                    states.push(MethodState::init(m, &pd.blocks()[i], &pd.slice(x, i))?);
                }
                Ok(MethodState::Blocks(states))
            }
            _ => Ok(MethodState::Stateless),
        }
    }

    pub fn active_set(&self) -> Option<&ActiveSet> {
        match self {
            MethodState::Active(s) => Some(s),
            _ => None,
        }
    }

    /// Point represented by the state, if it determines one.
    fn represented(&self, dom: &Domain, fallback: &Vector) -> Vector {
        match (self, dom) {
            (MethodState::Active(s), _) => s.point(),
            (MethodState::Blocks(states), Domain::Product(pd)) => {
                let parts: Vec<Vector> = states
                    .iter()
                    .enumerate()
                    .map(|(i, st)| st.represented(&pd.blocks()[i], &pd.slice(fallback, i)))
                    .collect();
                pd.concat(&parts)
            }
            _ => dom.snap(fallback),
        }
    }
}

/// Selects a direction at x for the frozen gradient g, with `s = lmo(g)` precomputed.
pub fn select_direction(
    method: &Method,
    dom: &Domain,
    x: &Vector,
    g: &Vector,
    state: &MethodState,
    s: &Vector,
) -> Result<DirectionChoice> {
    match method {
        Method::Fw => Ok(fw_with_lmo(x, g, s)),
        Method::Afw | Method::Pfw => {
            let set = state
                .active_set()
                .ok_or_else(|| Error::InvalidActiveSet("active-set method without an active set".into()))?;
            if matches!(method, Method::Afw) {
                Ok(afw_with_lmo(dom, x, g, set, s))
            } else {
                Ok(pfw_with_lmo(x, g, set, s))
            }
        }
        Method::Fdfw => fdfw_with_lmo(dom, x, g, s),
        Method::Sor { tau_bar, nu_hat } => sor_direction(dom, x, g, *tau_bar, *nu_hat),
        Method::Product { mode, blocks } => {
            let Domain::Product(pd) = dom else {
                return Err(Error::UnsupportedPair("product method on a non-product domain".into()));
            };
            let MethodState::Blocks(states) = state else {
                return Err(Error::InvalidInput("product method without block states".into()));
            };
            let mut choices = Vec::with_capacity(blocks.len());
            for (i, m) in blocks.iter().enumerate() {
                let c = select_direction(
                    m,
                    &pd.blocks()[i],
                    &pd.slice(x, i),
                    &pd.slice(g, i),
                    &states[i],
                    &pd.slice(s, i),
                )?;
                choices.push(c);
            }
            Ok(combine_product(pd, g, choices, *mode))
        }
    }
}

/// Combines block directions c_i into d_(i) = w_i ĉ_i with w_i = ⟨g_(i), ĉ_i⟩.
pub fn product_direction(
    dom: &Domain,
    x: &Vector,
    g: &Vector,
    methods: &[Method],
    states: &[MethodState],
    mode: ProductMode,
) -> Result<DirectionChoice> {
    let method = Method::Product { mode, blocks: methods.to_vec() };
    let state = MethodState::Blocks(states.to_vec());
    select_direction(&method, dom, x, g, &state, &dom.lmo(g))
}

fn combine_product(
    pd: &crate::domains::ProductDomain,
    g: &Vector,
    choices: Vec<DirectionChoice>,
    mode: ProductMode,
) -> DirectionChoice {
    let m = choices.len();
    let n: usize = pd.blocks().iter().map(|b| b.dim()).sum();
    let weights: Vec<f64> = choices
        .iter()
        .enumerate()
        .map(|(i, c)| {
            if c.is_zero() {
                0.0
            } else {
                let cn = c.d.norm();
                if cn > 0.0 {
                    (pd.slice(g, i).dot(&c.d) / cn).max(0.0)
                } else {
                    0.0
                }
            }
        })
        .collect();
    let included: Vec<bool> = match mode {
        ProductMode::Case1 => weights.iter().map(|w| *w > 0.0).collect(),
        ProductMode::Case2 => {
            let mut best = None;
            for (i, w) in weights.iter().enumerate() {
                if *w > 0.0 && best.is_none_or(|b: usize| *w > weights[b]) {
                    best = Some(i);
                }
            }
            (0..m).map(|i| Some(i) == best).collect()
        }
    };
    if !included.iter().any(|b| *b) {
        return DirectionChoice::zero(n);
    }
    let mut parts = Vec::with_capacity(m);
    let mut steps = Vec::with_capacity(m);
    let mut alpha_max = f64::INFINITY;
    for (i, c) in choices.into_iter().enumerate() {
        let bdim = pd.blocks()[i].dim();
        if included[i] {
            let cn = c.d.norm();
            let scale = weights[i] / cn;
            parts.push(&c.d * scale);
            alpha_max = alpha_max.min(c.alpha_max / scale);
            steps.push(BlockStep { choice: c, scale });
        } else {
            parts.push(Vector::zeros(bdim));
            steps.push(BlockStep { choice: DirectionChoice::zero(bdim), scale: 0.0 });
        }
    }
    let d = pd.concat(&parts);
    if !is_descent(g, &d) {
        return DirectionChoice::zero(n);
    }
    DirectionChoice { d, alpha_max, kind: DirectionKind::ProductComposite, s: None, q: None, blocks: Some(steps) }
}

/// Weight update for a step of size α along an active-set direction.
pub fn apply_bookkeeping(set: &ActiveSet, choice: &DirectionChoice, alpha: f64) -> Result<ActiveSet> {
    if !(alpha >= 0.0) || alpha > choice.alpha_max * (1.0 + 1e-12) {
        return Err(Error::InvalidInput(format!("step {alpha} outside [0, {}]", choice.alpha_max)));
    }
    let mut out = set.clone();
    if alpha == 0.0 {
        return Ok(out);
    }
    let maximal = (alpha - choice.alpha_max).abs() <= 1e-12 * choice.alpha_max.max(1e-300);
    match choice.kind {
        DirectionKind::FW => {
            let s = choice.s.as_ref().ok_or_else(|| Error::InvalidInput("FW step without atom".into()))?;
            for w in &mut out.weights {
                *w *= 1.0 - alpha;
            }
            out.add_weight(s, alpha);
        }
        DirectionKind::Away => {
            let q = choice.q.ok_or_else(|| Error::InvalidInput("away step without atom".into()))?;
            for w in &mut out.weights {
                *w *= 1.0 + alpha;
            }
            out.weights[q] -= alpha;
            if maximal {
                out.weights[q] = 0.0;
            }
        }
        DirectionKind::Pairwise => {
            let q = choice.q.ok_or_else(|| Error::InvalidInput("pairwise step without atom".into()))?;
            let s = choice.s.as_ref().ok_or_else(|| Error::InvalidInput("pairwise step without atom".into()))?;
            out.weights[q] -= alpha;
            if maximal {
                out.weights[q] = 0.0;
            }
            out.add_weight(s, alpha);
        }
        _ => return Ok(out),
    }
    out.clean()?;
    Ok(out)
}

/// Advances x and the method state by α along the chosen direction.
pub fn advance(
    dom: &Domain,
    state: &mut MethodState,
    x: &Vector,
    choice: &DirectionChoice,
    alpha: f64,
) -> Result<Vector> {
    update_state(dom, state, choice, alpha)?;
    let raw = match (&choice.s, choice.kind) {
        // a full FW step lands on s exactly, even when x + d rounds back to x
        (Some(s), DirectionKind::FW) if alpha == 1.0 && choice.alpha_max == 1.0 => s.clone(),
        _ => x + &choice.d * alpha,
    };
    Ok(state.represented(dom, &raw))
}

fn update_state(dom: &Domain, state: &mut MethodState, choice: &DirectionChoice, alpha: f64) -> Result<()> {
    match state {
        MethodState::Stateless => Ok(()),
        MethodState::Active(set) => {
            *set = apply_bookkeeping(set, choice, alpha)?;
            Ok(())
        }
        MethodState::Blocks(states) => {
            let (Some(steps), Domain::Product(pd)) = (&choice.blocks, dom) else {
                return Ok(());
            };
            for (i, st) in steps.iter().enumerate() {
                if st.scale > 0.0 {
                    let mut a = alpha * st.scale;
                    // the binding block lands exactly on its cap
                    if (a - st.choice.alpha_max).abs() <= 1e-12 * st.choice.alpha_max {
                        a = st.choice.alpha_max;
                    }
                    update_state(&pd.blocks()[i], &mut states[i], &st.choice, a)?;
                }
            }
            Ok(())
        }
    }
}
