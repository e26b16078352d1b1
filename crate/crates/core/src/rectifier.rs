//! Rectification of homotopy-commutative diagrams by double induction.
//!
//! Outer induction runs over degrees: every object `x` of degree `n + 1` is
//! attached to the strict truncation on degrees `≤ n`. Inner induction runs
//! over `k`: the maps out of `x` into degree `k` are made strictly compatible
//! with those into lower degrees.
//!
//! * `k = 0` picks representatives.
//! * `k = 1` is a homotopy pullback lift and never obstructs.
//! * `k ≥ 2` decides a total operation on the grid
//!
//! ```text
//!   F³ ──r′──▶ D = ∏_{|s|=k} Y(s)
//!   │μ          │∏ m^s_{k−1}
//!   F² ──s───▶ C = ∏ M^s_{k−1}
//!   │q          │forget
//!   F¹ ──Ψ′──▶ B = ∏_{(g,f)} Y(v)
//!   ▲ι      ↗Ψ
//!   A = ∏_{|t|<k} Y(t)
//! ```
//!
//! with `Q = A ×_B C`, `γ: Q → F²`, `η = (σ_{<k}, ρ): Y(x) → Q`. The operation
//! vanishes iff some chain map `κ: Y(x) → F³` satisfies `r′κ = σ_k` and
//! `μκ − γη = dS + Sd` for a homotopy `S`; this is one linear system.
//!
//! The object `x` itself is replaced (to keep the truncation Reedy fibrant)
//! only after its inner induction has finished.

use crate::chain::{
    direct_sum, factor_we_fib, find_homotopy, homotopy_classes, homotopy_pullback_lift, lift_homotopy, pullback,
    ChainComplex, ChainError, ChainHomotopy, ChainMap, Complex, DirectSum, Factorization, LinSys, MapTerm, Pullback,
};
use crate::index_cat::{delta_truncated, Mor, WeakLattice};
use crate::linalg::{self, AbGroupPresentation, ExactMatrix, Ring};
use crate::matching::{
    generalized_diagonal, is_pointed_reedy_fibrant, is_reedy_fibrant, matching_object,
    pointed_reedy_fibrant_replacement, reedy_fibrant_replacement, sigma_product, Diagram, DiagramError,
    GeneralizedDiagonal, IndexedProduct, MatchingObject,
};
use num_bigint::BigInt;
use num_traits::Zero;
use rand::{Rng, SeedableRng};
use serde_json::{json, Value};
use std::collections::BTreeMap;
use std::sync::Arc;

#[derive(Debug, thiserror::Error)]
pub enum RectifyError {
    #[error("object `{0}` has no complex")]
    MissingObject(String),
    #[error("arrow `{0}` has no representative")]
    MissingArrow(String),
    #[error("representative of `{0}` does not match the object complexes")]
    Ends(String),
    #[error("relation {0} does not hold up to homotopy")]
    Incoherent(String),
    #[error("ideal morphism {0} is not nullhomotopic")]
    NotNull(String),
    #[error("stage ({x}, {k}): {msg}")]
    Precondition { x: String, k: u32, msg: String },
    #[error("Δ-truncations are supported up to length 3, got {0}")]
    OutOfScope(u32),
    #[error("shape is not a truncated Δ-category")]
    NotDelta,
    #[error("internal inconsistency: {0}")]
    Internal(String),
    #[error(transparent)]
    Diagram(#[from] DiagramError),
    #[error(transparent)]
    Chain(#[from] ChainError),
}

type Result<T> = std::result::Result<T, RectifyError>;

// ---------------------------------------------------------------------------
// Input diagrams.

/// A diagram that commutes up to homotopy: complexes and one representative per arrow.
#[derive(Clone)]
pub struct HoDiagram {
    pub shape: Arc<WeakLattice>,
    pub ring: Ring,
    pub objects: BTreeMap<usize, Complex>,
    pub reps: BTreeMap<usize, ChainMap>,
    /// `coherence[i]` is a homotopy from the left to the right side of relation `i`.
    pub coherence: Vec<Option<ChainHomotopy>>,
    /// Nullhomotopies of ideal morphisms (pointed mode only).
    pub nullity: BTreeMap<Mor, ChainHomotopy>,
}

impl std::fmt::Debug for HoDiagram {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("HoDiagram").field("objects", &self.objects.len()).field("reps", &self.reps.len()).finish()
    }
}

impl HoDiagram {
    pub fn new(
        shape: Arc<WeakLattice>,
        ring: Ring,
        objects: BTreeMap<usize, Complex>,
        reps: BTreeMap<usize, ChainMap>,
    ) -> Result<Self> {
        for x in 0..shape.num_objects() {
            let c = objects.get(&x).ok_or_else(|| RectifyError::MissingObject(shape.name(x).into()))?;
            if c.ring() != ring {
                return Err(ChainError::RingMismatch.into());
            }
        }
        for (a, arr) in shape.arrows().iter().enumerate() {
            let m = reps.get(&a).ok_or_else(|| RectifyError::MissingArrow(arr.label.clone()))?;
            if *m.src != *objects[&arr.src] || *m.dst != *objects[&arr.dst] {
                return Err(RectifyError::Ends(arr.label.clone()));
            }
            m.validate()?;
        }
        let coherence = vec![None; shape.relations().len()];
        Ok(HoDiagram { shape, ring, objects, reps, coherence, nullity: BTreeMap::new() })
    }

    /// A strict diagram seen as a homotopy-commutative one (zero witnesses).
    pub fn from_strict(y: &Diagram) -> Result<Self> {
        let mut h = HoDiagram::new(y.shape.clone(), y.ring, y.objects.clone(), y.maps.clone())?;
        h.complete(false)?;
        Ok(h)
    }

    fn word_map(&self, w: &[usize]) -> ChainMap {
        let mut out = self.reps[&w[0]].clone();
        for a in &w[1..] {
            out = self.reps[a].compose(&out);
        }
        out
    }

    /// The composite of representatives along the normal form of `m`.
    pub fn rep_of(&self, m: Mor) -> ChainMap {
        if self.shape.is_identity(m) {
            return ChainMap::identity(&self.objects[&m.src]);
        }
        self.word_map(&self.shape.data(m).word)
    }

    fn relation_label(&self, i: usize) -> String {
        let j = &self.shape;
        let (l, r) = &j.relations()[i];
        let lab = |w: &[usize]| w.iter().map(|a| j.arrows()[*a].label.clone()).collect::<Vec<_>>().join(".");
        format!("{} = {}", lab(l), lab(r))
    }

    /// Validates supplied witnesses and solves for missing ones. In pointed mode
    /// ideal generators are first normalized to the zero map.
    pub fn complete(&mut self, pointed: bool) -> Result<()> {
        let j = self.shape.clone();
        if pointed {
            for (a, arr) in j.arrows().iter().enumerate() {
                if arr.ideal {
                    let m = &self.reps[&a];
                    if find_homotopy(m, &ChainMap::zero(&m.src, &m.dst)).is_none() {
                        return Err(RectifyError::NotNull(arr.label.clone()));
                    }
                    self.reps.insert(a, ChainMap::zero(&m.src, &m.dst));
                }
            }
        }
        for i in 0..j.relations().len() {
            let (l, r) = j.relations()[i].clone();
            let (ml, mr) = (self.word_map(&l), self.word_map(&r));
            let ok = match &self.coherence[i] {
                Some(h) => h.witnesses(&ml, &mr),
                None => match find_homotopy(&ml, &mr) {
                    Some(h) => {
                        self.coherence[i] = Some(h);
                        true
                    }
                    None => false,
                },
            };
            if !ok {
                return Err(RectifyError::Incoherent(self.relation_label(i)));
            }
        }
        if pointed {
            for m in j.all_morphisms() {
                if !j.is_ideal(m) {
                    continue;
                }
                let f = self.rep_of(m);
                let zero = ChainMap::zero(&f.src, &f.dst);
                if self.nullity.get(&m).is_some_and(|h| h.witnesses(&f, &zero)) {
                    continue;
                }
                let h = find_homotopy(&f, &zero).ok_or_else(|| RectifyError::NotNull(j.describe(m)))?;
                self.nullity.insert(m, h);
            }
        }
        Ok(())
    }

    /// A homotopy from the composite along `from` to the composite along `to`,
    /// chained from whiskered coherence witnesses; `None` if no chain of
    /// relation rewrites connects the two paths or a witness is missing.
    pub fn word_homotopy(&self, from: &[usize], to: &[usize]) -> Option<ChainHomotopy> {
        let rels = self.shape.relations();
        let start = self.word_map(from);
        let mut seen: BTreeMap<Vec<usize>, ChainHomotopy> = BTreeMap::new();
        seen.insert(from.to_vec(), ChainHomotopy::zero(&start.src, &start.dst));
        let mut queue = std::collections::VecDeque::from([from.to_vec()]);
        while let Some(w) = queue.pop_front() {
            if w == to {
                return seen.remove(&w);
            }
            let acc = seen[&w].clone();
            for (i, (l, r)) in rels.iter().enumerate() {
                for (side, other, sign) in [(l, r, false), (r, l, true)] {
                    for p in 0..(w.len() + 1).saturating_sub(side.len()) {
                        if w[p..p + side.len()] != side[..] {
                            continue;
                        }
                        let mut next = w[..p].to_vec();
                        next.extend_from_slice(other);
                        next.extend_from_slice(&w[p + side.len()..]);
                        if seen.contains_key(&next) {
                            continue;
                        }
                        let c = self.coherence[i].as_ref()?;
                        let mut step = if sign { c.neg() } else { c.clone() };
                        if p > 0 {
                            step = step.pre(&self.word_map(&w[..p]));
                        }
                        if p + side.len() < w.len() {
                            step = step.post(&self.word_map(&w[p + side.len()..]));
                        }
                        seen.insert(next.clone(), acc.add(&step));
                        queue.push_back(next);
                    }
                }
            }
        }
        None
    }

    /// Replaces the representative of `arrow` by `f + (dh + hd)`.
    pub fn perturbed(&self, arrow: usize, h: &ChainHomotopy) -> HoDiagram {
        let mut out = self.clone();
        let m = out.reps[&arrow].add(&h.boundary());
        out.reps.insert(arrow, m);
        out.coherence.iter_mut().for_each(|c| *c = None);
        out.nullity.clear();
        out
    }
}

// ---------------------------------------------------------------------------
// Strict truncations and inner states.

/// Strict part on degrees `≤ n` together with `e_t: Ỹ(t) → Y(t)`.
#[derive(Clone)]
pub struct StrictTruncation {
    pub base: Arc<HoDiagram>,
    pub pointed: bool,
    pub n: u32,
    pub strict: Diagram,
    pub equivalence: BTreeMap<usize, ChainMap>,
    /// `Ỹ(a) ∘ e ≃ e ∘ Y(a)` for arrows whose strict map was lifted at a
    /// degree-one stage; arrows into degree 0 commute on the nose.
    pub naturality: BTreeMap<usize, ChainHomotopy>,
}

impl StrictTruncation {
    /// The truncation on degree 0, where nothing has to commute.
    pub fn start(base: Arc<HoDiagram>, pointed: bool) -> Self {
        let j = base.shape.clone();
        let mut strict = Diagram::new(j.clone(), base.ring);
        let mut equivalence = BTreeMap::new();
        for x in j.objects_of_degree(0) {
            let c = base.objects[&x].clone();
            equivalence.insert(x, ChainMap::identity(&c));
            strict.objects.insert(x, c);
        }
        StrictTruncation { base, pointed, n: 0, strict, equivalence, naturality: BTreeMap::new() }
    }

    /// Keeps the given strictly commuting maps on degrees `< n` (Reedy replacement only),
    /// so lower coherences stay the trivial ones instead of being re-chosen.
    pub fn from_strict_below(base: Arc<HoDiagram>, pointed: bool, n: u32) -> Result<Self> {
        let j = base.shape.clone();
        let mut y = Diagram::new(j.clone(), base.ring);
        y.objects = base.objects.clone();
        y.maps = base.reps.clone();
        let below: Vec<usize> = (0..j.num_objects()).filter(|x| j.degree(*x) < n).collect();
        let r = if pointed {
            pointed_reedy_fibrant_replacement(&y.restrict(&below))
        } else {
            reedy_fibrant_replacement(&y.restrict(&below))
        }
        .map_err(|e| RectifyError::Incoherent(format!("strict part below degree {n}: {e}")))?;
        let naturality = (0..j.arrows().len())
            .filter(|a| j.degree(j.arrows()[*a].src) < n)
            .map(|a| {
                let arr = &j.arrows()[a];
                (a, ChainHomotopy::zero(&base.objects[&arr.src], r.diagram.obj(arr.dst)))
            })
            .collect();
        Ok(StrictTruncation {
            base,
            pointed,
            n: n.saturating_sub(1),
            strict: r.diagram,
            equivalence: r.equivalence,
            naturality,
        })
    }

    fn shape(&self) -> &WeakLattice {
        &self.base.shape
    }

    /// Representative of `g: x → t` (`|t| ≤ n`) landing in the strict `Y(t)`:
    /// `Y(rest) ∘ e ∘ Ỹ(first arrow)` along the normal form; zero on the ideal in pointed mode.
    pub fn representative(&self, g: Mor) -> ChainMap {
        let j = self.shape();
        let src = &self.base.objects[&g.src];
        let dst = self.strict.obj(g.dst);
        if self.pointed && j.is_ideal(g) {
            return ChainMap::zero(src, dst);
        }
        let word = &j.data(g).word;
        let a0 = &j.arrows()[word[0]];
        let mut out = self.equivalence[&a0.dst].compose(&self.base.reps[&word[0]]);
        for a in &word[1..] {
            out = self.strict.maps[a].compose(&out);
        }
        out
    }

    fn precondition(&self, x: usize, k: u32, msg: impl Into<String>) -> RectifyError {
        RectifyError::Precondition { x: self.shape().name(x).into(), k, msg: msg.into() }
    }
}

/// Strict maps `Y(x) → Y(t)` for all morphisms with `|t| ≤ k`.
#[derive(Clone)]
pub struct InnerState {
    pub x: usize,
    pub k: u32,
    pub source: Complex,
    pub family: BTreeMap<Mor, ChainMap>,
    /// `family[g] ≃ representative(g)` where the stage that chose `g` knows one.
    pub drift: BTreeMap<Mor, ChainHomotopy>,
}

impl InnerState {
    pub fn map(&self, g: Mor) -> &ChainMap {
        &self.family[&g]
    }

    fn tuple_over(&self, prod: &IndexedProduct<Mor>) -> ChainMap {
        let maps: Vec<ChainMap> = prod.keys.iter().map(|g| self.family[g].clone()).collect();
        prod.tuple(&self.source, &maps)
    }
}

/// Stage `k = 0`: representatives into degree 0 (zero on the ideal in pointed mode).
pub fn lift_base(trunc: &StrictTruncation, x: usize) -> Result<InnerState> {
    let j = trunc.shape();
    if j.degree(x) == 0 {
        return Err(trunc.precondition(x, 0, "object has degree 0"));
    }
    let source = trunc.base.objects[&x].clone();
    let family = j.morphisms_at(x, 0, false).into_iter().map(|g| (g, trunc.representative(g))).collect();
    Ok(InnerState { x, k: 0, source, family, drift: BTreeMap::new() })
}

fn stage_products(trunc: &StrictTruncation, state: &InnerState, k: u32) -> (IndexedProduct<Mor>, ChainMap) {
    let j = trunc.shape();
    let tops = IndexedProduct::new(trunc.base.ring, j.morphisms_at(state.x, k, trunc.pointed), |g: &Mor| {
        trunc.strict.obj(g.dst).clone()
    });
    let reps: Vec<ChainMap> = tops.keys.iter().map(|g| trunc.representative(*g)).collect();
    let sigma = tops.tuple(&state.source, &reps);
    (tops, sigma)
}

/// What a stage-`(x, k)` grid reads: the strict part below `k`, strict maps
/// out of `x` into degrees `< k`, and the current `σ_k` into degree `k`.
#[derive(Clone)]
pub struct StageData<'a> {
    pub strict: &'a Diagram,
    pub pointed: bool,
    pub x: usize,
    pub k: u32,
    pub source: Complex,
    pub family: BTreeMap<Mor, ChainMap>,
    pub tops: IndexedProduct<Mor>,
    pub sigma_top: ChainMap,
}

impl StageData<'_> {
    pub fn shape(&self) -> &WeakLattice {
        &self.strict.shape
    }

    pub fn ring(&self) -> Ring {
        self.strict.ring
    }

    pub fn name(&self) -> &str {
        self.shape().name(self.x)
    }

    fn tuple_over(&self, prod: &IndexedProduct<Mor>) -> ChainMap {
        let maps: Vec<ChainMap> = prod
            .keys
            .iter()
            .map(|g| {
                self.family.get(g).cloned().unwrap_or_else(|| ChainMap::zero(&self.source, self.strict.obj(g.dst)))
            })
            .collect();
        prod.tuple(&self.source, &maps)
    }

    pub fn precondition(&self, msg: impl Into<String>) -> RectifyError {
        RectifyError::Precondition { x: self.name().into(), k: self.k, msg: msg.into() }
    }
}

impl StrictTruncation {
    pub fn stage(&self, state: &InnerState, k: u32) -> StageData<'_> {
        let (tops, sigma_top) = stage_products(self, state, k);
        StageData {
            strict: &self.strict,
            pointed: self.pointed,
            x: state.x,
            k,
            source: state.source.clone(),
            family: state.family.clone(),
            tops,
            sigma_top,
        }
    }
}

/// Stage `(x, k)` of an object that is already strict in `strict`.
pub fn strict_stage(strict: &Diagram, pointed: bool, x: usize, k: u32) -> Result<StageData<'_>> {
    let j = &strict.shape;
    if !strict.has_object(x) {
        return Err(RectifyError::MissingObject(j.name(x).into()));
    }
    let family = j.morphisms_below(x, k.saturating_sub(1), false).into_iter().map(|g| (g, strict.map_of(g))).collect();
    let tops = IndexedProduct::new(strict.ring, j.morphisms_at(x, k, pointed), |g: &Mor| strict.obj(g.dst).clone());
    let maps: Vec<ChainMap> = tops.keys.iter().map(|g| strict.map_of(*g)).collect();
    let source = strict.obj(x).clone();
    let sigma_top = tops.tuple(&source, &maps);
    Ok(StageData { strict, pointed, x, k, source, family, tops, sigma_top })
}

fn with_ideal_zeros(
    trunc: &StrictTruncation,
    state: &InnerState,
    k: u32,
    mut family: BTreeMap<Mor, ChainMap>,
) -> BTreeMap<Mor, ChainMap> {
    let j = trunc.shape();
    for g in j.morphisms_at(state.x, k, false) {
        family.entry(g).or_insert_with(|| ChainMap::zero(&state.source, trunc.strict.obj(g.dst)));
    }
    family
}

/// Stage `k = 1`: alter the degree-one representatives within their classes so
/// that they factor strictly through the matching data below.
///
/// With a seed, the compatibility homotopy is moved by a seeded degree-one cycle,
/// which changes the strict maps chosen out of `x` (and so later stages) but not
/// their homotopy classes.
pub fn extend_degree_one(trunc: &StrictTruncation, state: &InnerState, seed: Option<u64>) -> Result<InnerState> {
    let (x, k) = (state.x, 1);
    let j = trunc.shape();
    if state.k != 0 || j.degree(x) < 2 || trunc.n < 1 {
        return Err(trunc.precondition(x, k, "degree-one stage needs the degree-zero stage and |x| ≥ 2"));
    }
    let gd = generalized_diagonal(&trunc.strict, x, k, trunc.pointed);
    let (tops, sigma_d) = sigma_product(&trunc.strict, &gd, x, k, trunc.pointed);
    if let Some(n) = sigma_d.surjectivity_defect() {
        return Err(trunc.precondition(x, k, format!("matching maps in degree 1 are not fibrations (degree {n})")));
    }
    let sigma0 = state.tuple_over(&gd.src);
    let (_, sigma1) = stage_products(trunc, state, k);
    let psi_sigma0 = gd.psi.compose(&sigma0);
    let composite = sigma_d.compose(&sigma1);
    let h = match coherent_homotopy(trunc, &gd, x, &state.source).filter(|h| h.witnesses(&composite, &psi_sigma0)) {
        Some(h) => h,
        None => {
            log::debug!("({}, 1): no usable witnesses, searching for a homotopy", j.name(x));
            find_homotopy(&composite, &psi_sigma0).ok_or_else(|| {
                trunc.precondition(x, k, "representatives are not homotopy compatible (input not homotopy commutative)")
            })?
        }
    };
    let h = match seed {
        None => h,
        Some(seed) => h.add(&seeded_cycle(seed ^ (x as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15), &h.src, &h.dst)),
    };
    let square = pullback(&gd.psi, &sigma_d);
    let (g, s) = homotopy_pullback_lift(&square, &sigma0, &sigma1, &h)?;
    let sigma1p = square.py.compose(&g);
    let mut family = state.family.clone();
    let mut drift = state.drift.clone();
    for t in &tops.keys {
        family.insert(*t, tops.proj(t).compose(&sigma1p));
        drift.insert(*t, s.post(tops.proj(t)));
    }
    let family = with_ideal_zeros(trunc, state, k, family);
    Ok(InnerState { x, k, source: state.source.clone(), family, drift })
}

/// `σ_d σ_1 ≃ ψ σ_0` assembled per component `(g, f)` from the diagram's own
/// witnesses: settle the strict path onto base representatives, rewrite it
/// into the normal form of `f ∘ g`, then unsettle or null it.
fn coherent_homotopy(
    trunc: &StrictTruncation,
    gd: &GeneralizedDiagonal,
    x: usize,
    source: &Complex,
) -> Option<ChainHomotopy> {
    let (j, base) = (trunc.shape(), &trunc.base);
    if base.objects[&x] != *source {
        return None;
    }
    let mut total = ChainHomotopy::zero(source, gd.dst.obj());
    for (c, (g, f)) in gd.dst.keys.iter().enumerate() {
        let fg = j.compose(*f, *g);
        let normal = &j.data(fg).word;
        let mut path = j.data(*g).word.clone();
        path.extend_from_slice(&j.data(*f).word);
        let mut h = settle(trunc, &path)?.add(&base.word_homotopy(&path, normal)?);
        h = match gd.src.position(&fg) {
            Some(_) => h.add(&settle(trunc, normal)?.neg()),
            None => h.add(base.nullity.get(&fg)?),
        };
        total = total.add(&h.post(&gd.dst.sum.inj[c]));
    }
    Some(total)
}

/// For a path `a_0 … a_n` ending in degree 0: the strict composite after the
/// first base arrow is homotopic to the base composite, summing the arrows'
/// naturality witnesses whiskered in place.
fn settle(trunc: &StrictTruncation, path: &[usize]) -> Option<ChainHomotopy> {
    let (j, base) = (trunc.shape(), &trunc.base);
    let strict =
        |w: &[usize]| w[1..].iter().fold(trunc.strict.maps[&w[0]].clone(), |acc, a| trunc.strict.maps[a].compose(&acc));
    let src = &base.objects[&j.arrows()[path[0]].src];
    let dst = trunc.strict.obj(j.arrows()[path[path.len() - 1]].dst);
    let mut total = ChainHomotopy::zero(src, dst);
    for i in 1..path.len() {
        let arr = &j.arrows()[path[i]];
        if j.degree(arr.dst) == 0 {
            continue;
        }
        let mut s = trunc.naturality.get(&path[i])?.pre(&base.word_map(&path[..i]));
        if i + 1 < path.len() {
            s = s.post(&strict(&path[i + 1..]));
        }
        total = total.add(&s);
    }
    Some(total)
}

/// A degree-one `z: X → Y` with `dz + zd = 0`, drawn from the solution space.
fn seeded_cycle(seed: u64, x: &Complex, y: &Complex) -> ChainHomotopy {
    let mut sys = LinSys::new(x.ring());
    let z = sys.map_var(x, y, 1);
    sys.map_equation(x, y, &[MapTerm::Boundary { left: None, var: &z, right: None, sign: 1 }], None);
    let sol = sys.solve_with_kernel().expect("zero solves the homogeneous system");
    sol.homotopy_from(&small_combination(seed, &sol.kernel, &sol.particular), &z)
}

// ---------------------------------------------------------------------------
// The grid.

/// `ρ_{k−1}: Y(x) → C = ∏_{|s|=k} M^s_{k−1}` with `∏ m^s: D → C`.
pub struct RhoMaps {
    pub tops: IndexedProduct<Mor>,
    pub matching: Vec<MatchingObject>,
    pub c: DirectSum,
    pub rho: ChainMap,
    pub m_d: ChainMap,
}

pub fn rho_maps(stage: &StageData<'_>) -> Result<RhoMaps> {
    let (j, k) = (stage.shape(), stage.k);
    let tops = stage.tops.clone();
    let mut matching = vec![];
    for g in &tops.keys {
        matching.push(matching_object(stage.strict, g.dst, k - 1, stage.pointed)?);
    }
    let c = direct_sum(stage.ring(), &matching.iter().map(|m| m.obj.clone()).collect::<Vec<_>>());
    let mut rho_parts = vec![];
    let mut md_parts = vec![];
    for (g, m) in tops.keys.iter().zip(&matching) {
        // cone over (s ↓ J^s_{k−1}) given by the composites f∘g
        let comps: Vec<ChainMap> = m
            .product
            .keys
            .iter()
            .map(|f| {
                let h = j.compose(*f, *g);
                stage.family.get(&h).cloned().unwrap_or_else(|| ChainMap::zero(&stage.source, stage.strict.obj(f.dst)))
            })
            .collect();
        let fam = m.product.tuple(&stage.source, &comps);
        let r = m.lift(&fam).ok_or_else(|| {
            RectifyError::Internal(format!("composites out of `{}` do not form a cone", j.name(g.dst)))
        })?;
        rho_parts.push(r);
        let own: Vec<ChainMap> = m.product.keys.iter().map(|f| stage.strict.map_of(*f)).collect();
        let mm = m
            .lift(&m.product.tuple(stage.strict.obj(g.dst), &own))
            .ok_or_else(|| RectifyError::Internal("strict part is not a diagram".into()))?;
        md_parts.push(mm.compose(tops.proj(g)));
    }
    let rho = c.tuple(&stage.source, &rho_parts);
    let m_d = c.tuple(tops.obj(), &md_parts);
    Ok(RhoMaps { tops, matching, c, rho, m_d })
}

/// All objects and maps of the stage-`(x, k)` grid.
pub struct BasicGrid {
    pub x: usize,
    pub k: u32,
    pub pointed: bool,
    pub a: IndexedProduct<Mor>,
    pub b: IndexedProduct<(Mor, Mor)>,
    pub psi: ChainMap,
    pub rho: RhoMaps,
    /// `C → B`
    pub forget_c: ChainMap,
    /// `Ψ = Ψ′ ∘ ι`
    pub f1: Factorization,
    /// `F² = F¹ ×_B C`
    pub f2: Pullback,
    /// `F³ = F² ×_C D`
    pub f3: Pullback,
    /// `Q = A ×_B C`
    pub q_obj: Pullback,
    pub gamma: ChainMap,
    pub mk1: MatchingObject,
    /// `N = M^x_{k−1} ×_A Q`
    pub n_obj: Pullback,
    /// `P = Q ×_{F²} F³`
    pub p_obj: Pullback,
    pub sigma_below: ChainMap,
    pub sigma_top: ChainMap,
    pub eta: ChainMap,
    pub beta: ChainMap,
}

impl BasicGrid {
    pub fn mu(&self) -> &ChainMap {
        &self.f3.px
    }

    pub fn r_prime(&self) -> &ChainMap {
        &self.f3.py
    }

    pub fn q(&self) -> &ChainMap {
        &self.f2.px
    }

    pub fn s(&self) -> &ChainMap {
        &self.f2.py
    }

    pub fn iota(&self) -> &ChainMap {
        &self.f1.first
    }

    pub fn target(&self) -> &Complex {
        &self.f2.obj
    }

    /// Re-verifies every square, the fibration legs and the mono `C → B`.
    pub fn audit(&self) -> std::result::Result<(), String> {
        let check = |ok: bool, what: &str| if ok { Ok(()) } else { Err(what.to_string()) };
        for (pb, name) in
            [(&self.f2, "F²"), (&self.f3, "F³"), (&self.q_obj, "Q"), (&self.n_obj, "N"), (&self.p_obj, "P")]
        {
            check(pb.verify(), &format!("{name} is not a pullback"))?;
        }
        check(self.f1.second.compose(&self.f1.first) == self.psi, "Ψ′ι ≠ Ψ")?;
        check(self.q().compose(&self.gamma) == self.iota().compose(&self.q_obj.px), "qγ ≠ ιu")?;
        check(self.s().compose(&self.gamma) == self.q_obj.py, "sγ ≠ v")?;
        check(self.rho.m_d.is_degreewise_surjective(), "∏ m^s is not a fibration")?;
        check(self.f1.second.is_degreewise_surjective(), "Ψ′ is not a fibration")?;
        check(self.forget_c.is_degreewise_injective(), "C → B is not a mono")?;
        check(self.mu().is_degreewise_surjective(), "μ is not a fibration")?;
        check(self.q_obj.px.compose(&self.eta) == self.sigma_below, "uη ≠ σ_{<k}")?;
        check(self.q_obj.py.compose(&self.eta) == self.rho.rho, "vη ≠ ρ")?;
        Ok(())
    }
}

pub fn build_basic_grid(stage: &StageData<'_>) -> Result<BasicGrid> {
    let (x, k) = (stage.x, stage.k);
    let j = stage.shape();
    if k < 2
        || k >= j.degree(x)
        || j.objects_by_degree().iter().any(|&t| j.degree(t) <= k && !stage.strict.has_object(t))
    {
        return Err(stage.precondition("grid needs 2 ≤ k < |x| and the strict part up to degree k"));
    }
    let pointed = stage.pointed;
    let gd = generalized_diagonal(stage.strict, x, k, pointed);
    let rho = rho_maps(stage)?;
    if let Some(n) = rho.m_d.surjectivity_defect() {
        return Err(stage.precondition(format!("strict part is not Reedy fibrant (degree {n})")));
    }
    // C → B is the product of the matching inclusions, in (g, f) order
    let forget_parts: Vec<ChainMap> = gd
        .dst
        .keys
        .iter()
        .map(|(g, f)| {
            let i = rho.tops.position(g).expect("top in product");
            let m = &rho.matching[i];
            m.projection(f).compose(&rho.c.proj[i])
        })
        .collect();
    let forget_c = gd.dst.tuple(&rho.c.obj, &forget_parts);
    let f1 = factor_we_fib(&gd.psi);
    let f2 = pullback(&f1.second, &forget_c);
    let f3 = pullback(&f2.py, &rho.m_d);
    let q_obj = pullback(&gd.psi, &forget_c);
    let gamma = f2.factor(&f1.first.compose(&q_obj.px), &q_obj.py)?;
    let mk1 = matching_object(stage.strict, x, k - 1, pointed)?;
    let sigma_below = stage.tuple_over(&gd.src);
    let sigma_top = stage.sigma_top.clone();
    let eta = q_obj.factor(&sigma_below, &rho.rho)?;
    let forget_a = mk1.forget.rebase(&mk1.obj, gd.src.obj());
    let n_obj = pullback(&forget_a, &q_obj.px);
    let m_below = mk1.lift(&sigma_below).ok_or_else(|| RectifyError::Internal("Y^x_{k−1} is not strict".into()))?;
    let beta = n_obj.factor(&m_below, &eta)?;
    let p_obj = pullback(&gamma, &f3.px);
    Ok(BasicGrid {
        x,
        k,
        pointed,
        a: gd.src,
        b: gd.dst,
        psi: gd.psi,
        rho,
        forget_c,
        f1,
        f2,
        f3,
        q_obj,
        gamma,
        mk1,
        n_obj,
        p_obj,
        sigma_below,
        sigma_top,
        eta,
        beta,
    })
}

// ---------------------------------------------------------------------------
// Total operations.

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Vanishes,
    Obstructed,
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Verdict::Vanishes => "vanishes",
            Verdict::Obstructed => "obstructed",
        })
    }
}

/// The admissible values `[μκ]` as a coset `particular + ⟨indeterminacy⟩` in `[Y(x), F²]`.
#[derive(Clone, Debug)]
pub struct ValueSet {
    pub ambient: AbGroupPresentation,
    pub particular: Vec<BigInt>,
    pub indeterminacy: Vec<Vec<BigInt>>,
    /// Class of `γη`; the operation vanishes iff it lies in the coset.
    pub target: Vec<BigInt>,
    /// `[Y(x), F²] / ⟨indeterminacy⟩`.
    pub quotient: AbGroupPresentation,
    /// Class of `γη − θ₀` in the quotient.
    pub defect: Vec<BigInt>,
}

#[derive(Clone, Debug, Default)]
pub struct RectifyOptions {
    pub pointed: bool,
    /// Also run [`vanish_oracle`] at every total stage and fail on disagreement.
    pub check_oracle: bool,
    /// Perturb the chosen `κ` by a seeded kernel combination (alternative choices).
    pub choice_seed: Option<u64>,
    /// Process the objects of one degree on separate threads.
    pub parallel: bool,
    /// Also run the separated operations at every total stage and fail on disagreement.
    pub separate: bool,
}

pub struct ObstructionReport {
    pub x: usize,
    pub x_name: String,
    pub k: u32,
    pub pointed: bool,
    pub verdict: Verdict,
    pub oracle: Option<Verdict>,
    /// Canonical value `θ₀ = μκ₀`.
    pub theta: ChainMap,
    pub value_set: ValueSet,
    /// `(κ, S)` with `r′κ = σ_k`, `μκ − γη = dS + Sd`.
    pub witness: Option<(ChainMap, ChainHomotopy)>,
    pub unknowns: usize,
    pub grid: Arc<BasicGrid>,
}

impl std::fmt::Debug for ObstructionReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ObstructionReport")
            .field("x", &self.x_name)
            .field("k", &self.k)
            .field("verdict", &self.verdict)
            .field("ambient", &self.value_set.ambient.describe())
            .finish()
    }
}

fn ints(v: &[BigInt]) -> Value {
    Value::Array(v.iter().map(|x| json!(x.to_string())).collect())
}

pub fn ranks_json(c: &ChainComplex) -> Value {
    Value::Object(c.ranks().into_iter().map(|(n, r)| (n.to_string(), json!(r))).collect())
}

pub fn map_json(f: &ChainMap) -> Value {
    Value::Object(
        f.components()
            .iter()
            .filter(|(_, m)| m.rows() * m.cols() > 0)
            .map(|(n, m)| (n.to_string(), json!(m.to_string_rows())))
            .collect(),
    )
}

impl ObstructionReport {
    pub fn to_json(&self) -> Value {
        let vs = &self.value_set;
        json!({
            "stage": { "object": self.x_name, "k": self.k },
            "pointed": self.pointed,
            "verdict": self.verdict,
            "oracle": self.oracle,
            "target_ranks": ranks_json(self.grid.target()),
            "ambient": vs.ambient.describe(),
            "value": {
                "particular": ints(&vs.particular),
                "indeterminacy": vs.indeterminacy.iter().map(|v| ints(v)).collect::<Vec<_>>(),
                "target": ints(&vs.target),
                "quotient": vs.quotient.describe(),
                "defect": ints(&vs.defect),
            },
            "theta": map_json(&self.theta),
            "unknowns": self.unknowns,
        })
    }
}

fn small_combination(seed: u64, kernel: &[Vec<BigInt>], base: &[BigInt]) -> Vec<BigInt> {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut out = base.to_vec();
    for v in kernel {
        let c: i64 = rng.gen_range(-1..=1);
        if c != 0 {
            for (o, x) in out.iter_mut().zip(v) {
                *o += x * c;
            }
        }
    }
    out
}

/// Decides the total operation at stage `(x, k)` and describes its value set.
pub fn total_operation(
    trunc: &StrictTruncation,
    state: &InnerState,
    k: u32,
    opts: &RectifyOptions,
) -> Result<ObstructionReport> {
    total_operation_on(&trunc.stage(state, k), opts)
}

/// [`total_operation`] on an arbitrary stage description.
pub fn total_operation_on(stage: &StageData<'_>, opts: &RectifyOptions) -> Result<ObstructionReport> {
    let k = stage.k;
    let grid = build_basic_grid(stage)?;
    grid.audit().map_err(|m| stage.precondition(m))?;
    let ring = stage.ring();
    let yx = &stage.source;
    let (mu, rp) = (grid.mu().clone(), grid.r_prime().clone());
    let f2 = grid.target().clone();
    let f3 = grid.f3.obj.clone();
    let d = grid.rho.tops.obj().clone();
    let gamma_eta = grid.gamma.compose(&grid.eta);

    // vanishing: r′κ = σ_k, μκ − (dS + Sd) = γη
    let mut sys = LinSys::new(ring);
    let kappa = sys.map_var(yx, &f3, 0);
    let s = sys.map_var(yx, &f2, 1);
    sys.chain_map_condition(&kappa);
    sys.map_equation(
        yx,
        &d,
        &[MapTerm::Plain { left: Some(&rp), var: &kappa, right: None, sign: 1 }],
        Some(&grid.sigma_top),
    );
    sys.map_equation(
        yx,
        &f2,
        &[
            MapTerm::Plain { left: Some(&mu), var: &kappa, right: None, sign: 1 },
            MapTerm::Boundary { left: None, var: &s, right: None, sign: -1 },
        ],
        Some(&gamma_eta),
    );
    let unknowns = sys.num_unknowns();
    let witness = match opts.choice_seed {
        None => sys.solve().map(|sol| (sol.map(&kappa), sol.homotopy(&s))),
        Some(seed) => sys.solve_with_kernel().map(|sol| {
            let v = small_combination(seed, &sol.kernel, &sol.particular);
            (sol.map_from(&v, &kappa), sol.homotopy_from(&v, &s))
        }),
    };
    let verdict = if witness.is_some() { Verdict::Vanishes } else { Verdict::Obstructed };

    // value set: r′κ = σ_k, qμκ − (dT + Td) = ισ_{<k}
    let f1 = grid.f1.obj.clone();
    let qmu = grid.q().compose(&mu);
    let isig = grid.iota().compose(&grid.sigma_below);
    let mut vsys = LinSys::new(ring);
    let vk = vsys.map_var(yx, &f3, 0);
    let vt = vsys.map_var(yx, &f1, 1);
    vsys.chain_map_condition(&vk);
    vsys.map_equation(
        yx,
        &d,
        &[MapTerm::Plain { left: Some(&rp), var: &vk, right: None, sign: 1 }],
        Some(&grid.sigma_top),
    );
    vsys.map_equation(
        yx,
        &f1,
        &[
            MapTerm::Plain { left: Some(&qmu), var: &vk, right: None, sign: 1 },
            MapTerm::Boundary { left: None, var: &vt, right: None, sign: -1 },
        ],
        Some(&isig),
    );
    let vsol = vsys
        .solve_with_kernel()
        .ok_or_else(|| stage.precondition("no admissible value: input is not homotopy commutative"))?;
    let classes = homotopy_classes(yx, &f2)?;
    let theta = mu.compose(&vsol.map(&vk));
    let theta_vec = classes.hom.map_vector(&theta);
    let mut indet_vecs: Vec<Vec<BigInt>> = vec![];
    let mut indeterminacy: Vec<Vec<BigInt>> = vec![];
    for kv in &vsol.kernel {
        let km = vsol.map_from(kv, &vk);
        if km.is_zero() {
            continue;
        }
        let v = classes.hom.map_vector(&mu.compose(&km));
        let c = classes.class_of(&mu.compose(&km));
        if c.iter().all(|x| x.is_zero()) || indeterminacy.contains(&c) {
            continue;
        }
        indeterminacy.push(c);
        indet_vecs.push(v);
    }
    let quotient = classes.group.quotient_by(&indet_vecs);
    let target_vec = classes.hom.map_vector(&gamma_eta);
    let diff: Vec<BigInt> = target_vec.iter().zip(&theta_vec).map(|(a, b)| a - b).collect();
    let defect = quotient.class_of(&diff);
    let in_coset = defect.iter().all(|x| x.is_zero());
    if in_coset != (verdict == Verdict::Vanishes) {
        return Err(RectifyError::Internal(format!(
            "stage ({}, {k}): coset membership disagrees with direct solvability",
            stage.name()
        )));
    }
    let value_set = ValueSet {
        ambient: classes.group.clone(),
        particular: classes.class_of(&theta),
        indeterminacy,
        target: classes.class_of(&gamma_eta),
        quotient,
        defect,
    };
    let oracle = if opts.check_oracle {
        let o = if vanish_oracle(stage)? { Verdict::Vanishes } else { Verdict::Obstructed };
        if o != verdict {
            return Err(RectifyError::Internal(format!(
                "stage ({}, {k}): oracle says {o}, grid says {verdict}",
                stage.name()
            )));
        }
        Some(o)
    } else {
        None
    };
    Ok(ObstructionReport {
        x: stage.x,
        x_name: stage.name().to_string(),
        k,
        pointed: stage.pointed,
        verdict,
        oracle,
        theta,
        value_set,
        witness,
        unknowns,
        grid: Arc::new(grid),
    })
}

/// Result of [`extend_step`].
pub struct Extension {
    pub state: InnerState,
    /// `α_k: Y(x) → P`
    pub alpha: ChainMap,
    /// `m^x_k: Y(x) → M^x_k`
    pub matching_map: ChainMap,
    /// Homotopy from the old `σ_k` to the new one.
    pub sigma_homotopy: ChainHomotopy,
}

/// Replaces `σ_k` by `r′κ′` where `κ′ = κ − (dS̃ + S̃d)` and `μS̃ = S`, so that `μκ′ = γη`.
pub fn extend_step(trunc: &StrictTruncation, state: &InnerState, report: &ObstructionReport) -> Result<Extension> {
    let k = report.k;
    let Some((kappa, s)) = &report.witness else {
        return Err(trunc.precondition(state.x, k, "extension requested for an obstructed stage"));
    };
    let grid = &report.grid;
    let s_lift = lift_homotopy(grid.mu(), s);
    let kappa2 = kappa.sub(&s_lift.boundary());
    if grid.mu().compose(&kappa2) != grid.gamma.compose(&grid.eta) {
        return Err(RectifyError::Internal("μκ′ ≠ γη after rectification".into()));
    }
    let alpha = grid.p_obj.factor(&grid.eta, &kappa2)?;
    let sigma = grid.r_prime().compose(&kappa2);
    let mut family = state.family.clone();
    for g in &grid.rho.tops.keys {
        family.insert(*g, grid.rho.tops.proj(g).compose(&sigma));
    }
    let family = with_ideal_zeros(trunc, state, k, family);
    let next = InnerState { x: state.x, k, source: state.source.clone(), family, drift: state.drift.clone() };
    let mk = matching_object(&trunc.strict, state.x, k, trunc.pointed)?;
    let matching_map = mk
        .lift(&next.tuple_over(&mk.product))
        .ok_or_else(|| RectifyError::Internal("extension does not commute strictly".into()))?;
    Ok(Extension { state: next, alpha, matching_map, sigma_homotopy: s_lift.post(grid.r_prime()) })
}

/// Independent decision: is there `T` with `Y(a)(σ_g + dT_g + T_g d) = Y(a∘g)` for every
/// degree-`k` morphism `g` and every generating arrow `a` out of its target?
/// Assembled directly as one integer matrix.
pub fn vanish_oracle(stage: &StageData<'_>) -> Result<bool> {
    let j = stage.shape();
    let ring = stage.ring();
    let yx = &stage.source;
    let tops: Vec<Mor> = stage.tops.keys.clone();
    // unknown blocks T_g(n): s(n+1) × x(n)
    let mut offsets: BTreeMap<(usize, i64), usize> = BTreeMap::new();
    let mut nvars = 0;
    for (gi, g) in tops.iter().enumerate() {
        let s = stage.strict.obj(g.dst);
        for n in yx.degrees() {
            let size = s.rank(n + 1) * yx.rank(n);
            if size > 0 {
                offsets.insert((gi, n), nvars);
                nvars += size;
            }
        }
    }
    let mut rows: Vec<Vec<(usize, BigInt)>> = vec![];
    let mut rhs: Vec<BigInt> = vec![];
    for (gi, g) in tops.iter().enumerate() {
        let s = stage.strict.obj(g.dst);
        let sigma = stage.tops.proj(g).compose(&stage.sigma_top);
        for a in j.arrows_from(g.dst) {
            let ya = &stage.strict.maps[&a];
            let h = j.compose(j.arrow_mor(a), *g);
            let want =
                if stage.pointed && j.is_ideal(h) { ChainMap::zero(yx, &ya.dst) } else { stage.family[&h].clone() };
            for n in yx.degrees() {
                let (rv, rx) = (ya.dst.rank(n), yx.rank(n));
                if rv * rx == 0 {
                    continue;
                }
                let yad = ya.at(n).mul(&s.d(n + 1));
                let ya_n = ya.at(n);
                let dx = yx.d(n);
                let c = want.at(n).sub(&ya_n.mul(&sigma.at(n)));
                for i in 0..rv {
                    for jj in 0..rx {
                        let mut row = vec![];
                        if let Some(&off) = offsets.get(&(gi, n)) {
                            let cols = yx.rank(n);
                            for p in 0..s.rank(n + 1) {
                                let l = yad.get(i, p);
                                if !l.is_zero() {
                                    row.push((off + p * cols + jj, l.clone()));
                                }
                            }
                        }
                        if let Some(&off) = offsets.get(&(gi, n - 1)) {
                            let cols = yx.rank(n - 1);
                            for p in 0..s.rank(n) {
                                let l = ya_n.get(i, p);
                                if l.is_zero() {
                                    continue;
                                }
                                for q in 0..cols {
                                    let r = dx.get(q, jj);
                                    if !r.is_zero() {
                                        row.push((off + p * cols + q, l * r));
                                    }
                                }
                            }
                        }
                        rows.push(row);
                        rhs.push(c.get(i, jj).clone());
                    }
                }
            }
        }
    }
    let mut m = ExactMatrix::zeros(ring, rows.len(), nvars);
    for (r, row) in rows.iter().enumerate() {
        for (c, v) in row {
            let cur = m.get(r, *c).clone();
            m.set(r, *c, cur + v);
        }
    }
    Ok(linalg::solve(&m, &rhs).map_err(|e| RectifyError::Internal(e.to_string()))?.is_some())
}

// ---------------------------------------------------------------------------
// The driver.

/// One line of the rectification log.
#[derive(Clone, Debug, serde::Serialize)]
pub struct StageRecord {
    pub object: String,
    pub k: u32,
    pub label: String,
    pub verdict: Verdict,
    pub detail: String,
}

pub struct Rectified {
    pub diagram: Diagram,
    pub equivalence: BTreeMap<usize, ChainMap>,
    pub stages: Vec<StageRecord>,
}

impl Rectified {
    /// `Y′(a) e_s ≃ e_t Ỹ(a)` for every generating arrow `a: s → t`.
    pub fn verify_classes(&self, base: &HoDiagram) -> std::result::Result<(), String> {
        let j = &base.shape;
        for (a, arr) in j.arrows().iter().enumerate() {
            let lhs = self.diagram.maps[&a].compose(&self.equivalence[&arr.src]);
            let rhs = self.equivalence[&arr.dst].compose(&base.reps[&a]);
            if find_homotopy(&lhs, &rhs).is_none() {
                return Err(format!("arrow `{}` left its homotopy class", arr.label));
            }
        }
        Ok(())
    }
}

pub enum Outcome {
    Rectified(Rectified),
    Obstructed { report: Box<ObstructionReport>, truncation: Box<StrictTruncation>, stages: Vec<StageRecord> },
}

impl std::fmt::Debug for Outcome {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Outcome::Rectified(r) => write!(f, "Rectified({} stages)", r.stages.len()),
            Outcome::Obstructed { report, .. } => write!(f, "Obstructed({report:?})"),
        }
    }
}

impl Outcome {
    pub fn is_rectified(&self) -> bool {
        matches!(self, Outcome::Rectified(_))
    }

    pub fn stages(&self) -> &[StageRecord] {
        match self {
            Outcome::Rectified(r) => &r.stages,
            Outcome::Obstructed { stages, .. } => stages,
        }
    }
}

enum ObjectResult {
    Done(InnerState, Vec<StageRecord>),
    Obstructed(Box<ObstructionReport>, Vec<StageRecord>),
}

fn record(trunc: &StrictTruncation, x: usize, k: u32, label: &str, verdict: Verdict, detail: String) -> StageRecord {
    log::debug!("({}, {k}) {label}: {verdict:?} {detail}", trunc.shape().name(x));
    StageRecord { object: trunc.shape().name(x).to_string(), k, label: label.to_string(), verdict, detail }
}

/// Inner induction for `x` stopped at stage `last`.
pub struct InnerRun {
    /// Strict through the last vanishing stage below the report.
    pub state: InnerState,
    pub stages: Vec<StageRecord>,
    /// The first obstruction, or the stage-`last` report; `None` when `last` has no targets.
    pub report: Option<Box<ObstructionReport>>,
}

/// Runs the inner induction for `x` through stage `last`, extending after every
/// vanishing stage below it. Pure in `trunc`.
pub fn inner_until(trunc: &StrictTruncation, x: usize, last: u32, opts: &RectifyOptions) -> Result<InnerRun> {
    let j = trunc.shape();
    let mut stages = vec![];
    let mut state = lift_base(trunc, x)?;
    stages.push(record(
        trunc,
        x,
        0,
        "representatives",
        Verdict::Vanishes,
        format!("{} maps chosen", state.family.len()),
    ));
    if last >= 1 {
        state = extend_degree_one(trunc, &state, opts.choice_seed)?;
        stages.push(record(trunc, x, 1, "homotopy pullback lift", Verdict::Vanishes, String::new()));
    }
    for k in 2..=last {
        if j.morphisms_at(x, k, trunc.pointed).is_empty() {
            state = InnerState { k, family: with_ideal_zeros(trunc, &state, k, state.family.clone()), ..state };
            stages.push(record(trunc, x, k, "total operation", Verdict::Vanishes, "no targets".into()));
            continue;
        }
        let report = total_operation(trunc, &state, k, opts)?;
        let detail = format!("value in [Y({}), F²] = {}", j.name(x), report.value_set.ambient.describe());
        stages.push(record(trunc, x, k, "total operation", report.verdict, detail));
        if opts.separate {
            let sep = crate::separation::separate_total(&trunc.stage(&state, k), opts)?;
            let detail = sep
                .operations
                .iter()
                .map(|o| format!("order {}: {}", o.order(), o.verdict))
                .collect::<Vec<_>>()
                .join(", ");
            stages.push(record(trunc, x, k, "separated operations", sep.verdict, detail));
        }
        if report.verdict == Verdict::Obstructed || k == last {
            return Ok(InnerRun { state, stages, report: Some(Box::new(report)) });
        }
        state = extend_step(trunc, &state, &report)?.state;
    }
    Ok(InnerRun { state, stages, report: None })
}

fn process_object(trunc: &StrictTruncation, x: usize, opts: &RectifyOptions) -> Result<ObjectResult> {
    let run = inner_until(trunc, x, trunc.shape().degree(x) - 1, opts)?;
    match run.report {
        None => Ok(ObjectResult::Done(run.state, run.stages)),
        Some(report) if report.verdict == Verdict::Obstructed => Ok(ObjectResult::Obstructed(report, run.stages)),
        Some(report) => {
            let state = extend_step(trunc, &run.state, &report)?.state;
            Ok(ObjectResult::Done(state, run.stages))
        }
    }
}

/// Attaches `x` to the strict part, replacing `Y(x)` when its matching map is not a fibration.
fn attach(trunc: &mut StrictTruncation, state: &InnerState) -> Result<()> {
    let j = trunc.base.shape.clone();
    let x = state.x;
    let m = matching_object(&trunc.strict, x, j.degree(x) - 1, trunc.pointed)?;
    let mm = m
        .lift(&state.tuple_over(&m.product))
        .ok_or_else(|| RectifyError::Internal("inner induction left a non-cone".into()))?;
    let (obj, e, q) = if mm.is_degreewise_surjective() {
        (state.source.clone(), ChainMap::identity(&state.source), mm)
    } else {
        let f = factor_we_fib(&mm);
        (f.obj.clone(), f.first.clone(), f.second.clone())
    };
    for a in j.arrows_from(x) {
        let am = j.arrow_mor(a);
        let map = match m.product.position(&am) {
            Some(_) => m.projection(&am).compose(&q),
            None => ChainMap::zero(&obj, trunc.strict.obj(j.arrows()[a].dst)),
        };
        trunc.strict.maps.insert(a, map);
        if let Some(s) = state.drift.get(&am) {
            trunc.naturality.insert(a, s.clone());
        }
    }
    trunc.strict.objects.insert(x, obj);
    trunc.equivalence.insert(x, e);
    Ok(())
}

/// Where [`rectify_below`] stopped.
pub enum Progress {
    /// Strict, pointed-or-unpointed Reedy fibrant on degrees `< n`.
    Reached {
        truncation: Box<StrictTruncation>,
        stages: Vec<StageRecord>,
    },
    Obstructed(Outcome),
}

/// Runs the double induction until the strict part covers all degrees `< n`.
pub fn rectify_below(base: &HoDiagram, opts: &RectifyOptions, n: u32) -> Result<Progress> {
    let mut base = base.clone();
    base.complete(opts.pointed)?;
    let base = Arc::new(base);
    let j = base.shape.clone();
    let mut trunc = StrictTruncation::start(base.clone(), opts.pointed);
    let mut stages = vec![];
    for m in 0..n.min(j.max_degree() + 1).saturating_sub(1) {
        trunc.n = m;
        let xs = j.objects_of_degree(m + 1);
        let results: Vec<Result<ObjectResult>> = if opts.parallel && xs.len() > 1 {
            let t = &trunc;
            std::thread::scope(|sc| {
                let hs: Vec<_> = xs.iter().map(|&x| sc.spawn(move || process_object(t, x, opts))).collect();
                hs.into_iter().map(|h| h.join().expect("worker panicked")).collect()
            })
        } else {
            xs.iter().map(|&x| process_object(&trunc, x, opts)).collect()
        };
        let mut done = vec![];
        let mut obstruction = None;
        for r in results {
            match r? {
                ObjectResult::Done(state, st) => {
                    stages.extend(st);
                    done.push(state);
                }
                ObjectResult::Obstructed(report, st) => {
                    stages.extend(st);
                    obstruction.get_or_insert(report);
                }
            }
        }
        if let Some(report) = obstruction {
            return Ok(Progress::Obstructed(Outcome::Obstructed { report, truncation: Box::new(trunc), stages }));
        }
        for state in &done {
            attach(&mut trunc, state)?;
        }
        trunc.n = m + 1;
    }
    Ok(Progress::Reached { truncation: Box::new(trunc), stages })
}

/// Runs the double induction. Canonical choices make reruns reproducible.
pub fn rectify(base: &HoDiagram, opts: &RectifyOptions) -> Result<Outcome> {
    let (trunc, stages) = match rectify_below(base, opts, base.shape.max_degree() + 1)? {
        Progress::Reached { truncation, stages } => (*truncation, stages),
        Progress::Obstructed(out) => return Ok(out),
    };
    trunc.strict.check_strict(opts.pointed)?;
    let fibrant =
        if opts.pointed { is_pointed_reedy_fibrant(&trunc.strict)? } else { is_reedy_fibrant(&trunc.strict)? };
    if !fibrant {
        return Err(RectifyError::Internal("output is not Reedy fibrant".into()));
    }
    let out = Rectified { diagram: trunc.strict, equivalence: trunc.equivalence, stages };
    out.verify_classes(&trunc.base).map_err(RectifyError::Internal)?;
    Ok(Outcome::Rectified(out))
}

/// [`rectify`] restricted to truncated Δ-shapes of length at most 3.
pub fn delta_rectify(base: &HoDiagram, opts: &RectifyOptions) -> Result<Outcome> {
    let n = base.shape.max_degree();
    if *base.shape.spec() != delta_truncated(n) {
        return Err(RectifyError::NotDelta);
    }
    if n > 3 {
        return Err(RectifyError::OutOfScope(n));
    }
    rectify(base, &RectifyOptions { pointed: false, ..opts.clone() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::{arc, mat};
    use crate::index_cat::toda_chain;

    const Z: Ring = Ring::Integers;

    fn toda_strict(n: u32) -> HoDiagram {
        let j = Arc::new(WeakLattice::compile(&toda_chain(n)).unwrap());
        let c = arc(ChainComplex::sphere(Z, 0));
        let objects = (0..j.num_objects()).map(|x| (x, c.clone())).collect();
        let reps = (0..j.arrows().len()).map(|a| (a, ChainMap::identity(&c))).collect();
        HoDiagram::new(j, Z, objects, reps).unwrap()
    }

    #[test]
    fn strict_chain_rectifies_unchanged() {
        let h = toda_strict(3);
        let out = rectify(&h, &RectifyOptions { check_oracle: true, ..Default::default() }).unwrap();
        let Outcome::Rectified(r) = out else { panic!("obstructed") };
        for (a, m) in &r.diagram.maps {
            assert_eq!(*m, h.reps[a]);
        }
    }

    #[test]
    fn pointed_rejects_nonnull_composite() {
        let h = toda_strict(2);
        let err = rectify(&h, &RectifyOptions { pointed: true, ..Default::default() }).unwrap_err();
        assert!(matches!(err, RectifyError::NotNull(_)));
    }

    #[test]
    fn incoherent_relation_is_reported() {
        use crate::index_cat::double_diamond;
        let j = Arc::new(WeakLattice::compile(&double_diamond()).unwrap());
        let c = arc(ChainComplex::sphere(Z, 0));
        let objects = (0..j.num_objects()).map(|x| (x, c.clone())).collect();
        let mut reps: BTreeMap<usize, ChainMap> = (0..j.arrows().len()).map(|a| (a, ChainMap::identity(&c))).collect();
        let two = ChainMap::new(&c, &c, [(0, mat(Z, 1, 1, &[2]))].into()).unwrap();
        reps.insert(0, two);
        let h = HoDiagram::new(j, Z, objects, reps).unwrap();
        assert!(matches!(rectify(&h, &RectifyOptions::default()), Err(RectifyError::Incoherent(_))));
    }

    /// `S⁰ −(c·2)→ S⁰ −i→ M(2) −(e·p)→ S¹`: the bracket is `c·e` modulo `2c`.
    fn moore_chain(c: i64, e: i64) -> HoDiagram {
        let j = Arc::new(WeakLattice::compile(&toda_chain(3)).unwrap());
        let s0 = arc(ChainComplex::sphere(Z, 0));
        let m2 = arc(ChainComplex::moore(Z, 2, 0));
        let s1 = arc(ChainComplex::sphere(Z, 1));
        let objs = [
            (j.object("3").unwrap(), s0.clone()),
            (j.object("2").unwrap(), s0.clone()),
            (j.object("1").unwrap(), m2.clone()),
            (j.object("0").unwrap(), s1.clone()),
        ];
        let f3 = ChainMap::new(&s0, &s0, [(0, mat(Z, 1, 1, &[2 * c]))].into()).unwrap();
        let f2 = ChainMap::new(&s0, &m2, [(0, mat(Z, 1, 1, &[1]))].into()).unwrap();
        let f1 = ChainMap::new(&m2, &s1, [(1, mat(Z, 1, 1, &[e]))].into()).unwrap();
        let reps = [
            (j.arrow_by_label("f3").unwrap(), f3),
            (j.arrow_by_label("f2").unwrap(), f2),
            (j.arrow_by_label("f1").unwrap(), f1),
        ];
        HoDiagram::new(j, Z, objs.into_iter().collect(), reps.into_iter().collect()).unwrap()
    }

    #[test]
    fn moore_bracket_obstructs_with_fixed_choices() {
        let opts = RectifyOptions { pointed: true, check_oracle: true, ..Default::default() };
        for (e, want) in [(1i64, 1i64), (2, 2), (3, 3)] {
            let out = rectify(&moore_chain(1, e), &opts).unwrap();
            let Outcome::Obstructed { report, .. } = out else { panic!("expected an obstruction") };
            assert_eq!((report.x_name.as_str(), report.k), ("3", 2));
            assert!(report.grid.q_obj.obj.is_zero());
            // the strict truncation below is fixed, so nothing is divided out
            assert_eq!(report.value_set.quotient.describe(), "Z");
            assert_eq!(report.value_set.defect[0].magnitude(), &BigInt::from(want).magnitude().clone());
        }
    }

    #[test]
    fn zero_bracket_rectifies() {
        let opts = RectifyOptions { pointed: true, check_oracle: true, ..Default::default() };
        let out = rectify(&moore_chain(0, 1), &opts).unwrap();
        let Outcome::Rectified(r) = out else { panic!("expected rectification") };
        r.diagram.check_strict(true).unwrap();
    }
}
