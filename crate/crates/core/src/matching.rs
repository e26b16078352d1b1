//! Diagrams over weak lattices and their matching objects.
//!
//! Products are indexed by morphisms in (target index, normal form) order.
//! In pointed mode only non-ideal morphisms index factors, and a composite
//! that falls into the ideal imposes the condition `Y(f) c_g = 0`.

use crate::chain::{
    direct_sum, factor_we_fib, kernel_complex, lift_through_mono, pullback, ChainError, ChainMap, Complex, DirectSum,
};
use crate::index_cat::{Mor, WeakLattice};
use crate::linalg::Ring;
use std::collections::BTreeMap;
use std::sync::Arc;

#[derive(Debug, thiserror::Error, Clone, PartialEq, Eq)]
pub enum DiagramError {
    #[error("object `{0}` has no complex assigned")]
    MissingObject(String),
    #[error("arrow `{0}` has no map assigned")]
    MissingArrow(String),
    #[error("arrow `{0}` does not match the assigned complexes")]
    Ends(String),
    #[error("relation {0} fails strictly")]
    Relation(String),
    #[error("ideal morphism {0} is not sent to zero")]
    IdealNonzero(String),
    #[error("object degree {0} must exceed k = {1}")]
    DegreeTooLow(u32, u32),
    #[error(transparent)]
    Chain(#[from] ChainError),
}

/// A (possibly partial) assignment of complexes to objects and maps to generating arrows.
#[derive(Clone)]
pub struct Diagram {
    pub shape: Arc<WeakLattice>,
    pub ring: Ring,
    pub objects: BTreeMap<usize, Complex>,
    pub maps: BTreeMap<usize, ChainMap>,
}

impl std::fmt::Debug for Diagram {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let mut d = f.debug_struct("Diagram");
        for (x, c) in &self.objects {
            d.field(self.shape.name(*x), c);
        }
        d.finish()
    }
}

impl Diagram {
    pub fn new(shape: Arc<WeakLattice>, ring: Ring) -> Self {
        Diagram { shape, ring, objects: BTreeMap::new(), maps: BTreeMap::new() }
    }

    pub fn obj(&self, x: usize) -> &Complex {
        self.objects.get(&x).unwrap_or_else(|| panic!("no complex at `{}`", self.shape.name(x)))
    }

    pub fn has_object(&self, x: usize) -> bool {
        self.objects.contains_key(&x)
    }

    /// `Y(m)`, composed along the normal form; the identity for identities.
    pub fn map_of(&self, m: Mor) -> ChainMap {
        let j = &self.shape;
        if j.is_identity(m) {
            return ChainMap::identity(self.obj(m.src));
        }
        let word = &j.data(m).word;
        let mut out = self.maps[&word[0]].clone();
        for a in &word[1..] {
            out = self.maps[a].compose(&out);
        }
        out
    }

    /// Whether every arrow of the word has a map assigned.
    pub fn defines(&self, m: Mor) -> bool {
        self.shape.is_identity(m) && self.has_object(m.src)
            || self.shape.data(m).word.iter().all(|a| self.maps.contains_key(a))
    }

    /// Restriction to the objects in `objs` and arrows between them.
    pub fn restrict(&self, objs: &[usize]) -> Diagram {
        let keep = |x: &usize| objs.contains(x);
        Diagram {
            shape: self.shape.clone(),
            ring: self.ring,
            objects: self.objects.iter().filter(|(x, _)| keep(x)).map(|(x, c)| (*x, c.clone())).collect(),
            maps: self
                .maps
                .iter()
                .filter(|(a, _)| keep(&self.shape.arrows()[**a].src) && keep(&self.shape.arrows()[**a].dst))
                .map(|(a, m)| (*a, m.clone()))
                .collect(),
        }
    }

    /// Shape checks plus strict functoriality on the assigned part.
    pub fn check_strict(&self, pointed: bool) -> Result<(), DiagramError> {
        let j = &self.shape;
        for (a, m) in &self.maps {
            let arr = &j.arrows()[*a];
            let (Some(s), Some(t)) = (self.objects.get(&arr.src), self.objects.get(&arr.dst)) else {
                return Err(DiagramError::Ends(arr.label.clone()));
            };
            if **s != *m.src || **t != *m.dst {
                return Err(DiagramError::Ends(arr.label.clone()));
            }
            m.validate()?;
        }
        for (l, r) in j.relations() {
            if l.iter().chain(r).all(|a| self.maps.contains_key(a)) {
                let comp = |w: &[usize]| {
                    let mut out = self.maps[&w[0]].clone();
                    for a in &w[1..] {
                        out = self.maps[a].compose(&out);
                    }
                    out
                };
                if comp(l) != comp(r) {
                    let lab =
                        |w: &[usize]| w.iter().map(|a| j.arrows()[*a].label.clone()).collect::<Vec<_>>().join(".");
                    return Err(DiagramError::Relation(format!("{} = {}", lab(l), lab(r))));
                }
            }
        }
        if pointed {
            for m in j.all_morphisms() {
                if j.is_ideal(m) && self.defines(m) && !self.map_of(m).is_zero() {
                    return Err(DiagramError::IdealNonzero(j.describe(m)));
                }
            }
        }
        Ok(())
    }
}

/// A product whose factors are indexed by keys, in key order.
#[derive(Clone)]
pub struct IndexedProduct<K> {
    pub keys: Vec<K>,
    pub sum: Arc<DirectSum>,
}

impl<K: PartialEq + Clone> IndexedProduct<K> {
    pub fn new(ring: Ring, keys: Vec<K>, factor: impl Fn(&K) -> Complex) -> Self {
        let parts: Vec<Complex> = keys.iter().map(&factor).collect();
        IndexedProduct { keys, sum: Arc::new(direct_sum(ring, &parts)) }
    }

    pub fn obj(&self) -> &Complex {
        &self.sum.obj
    }

    pub fn position(&self, k: &K) -> Option<usize> {
        self.keys.iter().position(|x| x == k)
    }

    pub fn proj(&self, k: &K) -> &ChainMap {
        &self.sum.proj[self.position(k).expect("key in product")]
    }

    pub fn inj(&self, k: &K) -> &ChainMap {
        &self.sum.inj[self.position(k).expect("key in product")]
    }

    pub fn tuple(&self, src: &Complex, maps: &[ChainMap]) -> ChainMap {
        self.sum.tuple(src, maps)
    }

    pub fn len(&self) -> usize {
        self.keys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keys.is_empty()
    }
}

/// Morphisms `x → t` with `|t| ≤ k` indexing the (reduced) matching product.
pub fn matching_index(j: &WeakLattice, x: usize, k: u32, pointed: bool) -> Vec<Mor> {
    j.morphisms_below(x, k, pointed)
}

/// `M^x_k` as a subcomplex of `∏ Y(t)`.
#[derive(Clone)]
pub struct MatchingObject {
    pub x: usize,
    pub k: u32,
    pub pointed: bool,
    pub product: IndexedProduct<Mor>,
    pub obj: Complex,
    pub forget: ChainMap,
}

impl MatchingObject {
    pub fn projection(&self, g: &Mor) -> ChainMap {
        self.product.proj(g).compose(&self.forget)
    }

    /// The unique map into `M` whose composite with `forget` is `family`.
    pub fn lift(&self, family: &ChainMap) -> Option<ChainMap> {
        lift_through_mono(&self.forget, family)
    }
}

/// Limit of `Y` over the comma category `(x ↓ J^x_k)` restricted to the index.
pub fn matching_object(y: &Diagram, x: usize, k: u32, pointed: bool) -> Result<MatchingObject, DiagramError> {
    let j = &y.shape;
    if j.degree(x) <= k {
        return Err(DiagramError::DegreeTooLow(j.degree(x), k));
    }
    let index = matching_index(j, x, k, pointed);
    for g in &index {
        if !y.has_object(g.dst) {
            return Err(DiagramError::MissingObject(j.name(g.dst).to_string()));
        }
    }
    let product = IndexedProduct::new(y.ring, index.clone(), |g: &Mor| y.obj(g.dst).clone());
    // one constraint block per (g, generating arrow f out of g.dst)
    let mut blocks: Vec<(usize, usize, Option<usize>)> = vec![];
    for (gi, g) in index.iter().enumerate() {
        for a in j.arrows_from(g.dst) {
            if !y.maps.contains_key(&a) {
                return Err(DiagramError::MissingArrow(j.arrows()[a].label.clone()));
            }
            let h = j.compose(j.arrow_mor(a), *g);
            let hi = index.iter().position(|m| *m == h);
            if pointed && hi.is_none() && !j.is_ideal(h) {
                unreachable!("non-ideal composite below k is indexed");
            }
            blocks.push((gi, a, hi));
        }
    }
    let targets: Vec<Complex> = blocks.iter().map(|(_, a, _)| y.obj(j.arrows()[*a].dst).clone()).collect();
    let cod = direct_sum(y.ring, &targets);
    let mut diff = ChainMap::zero(product.obj(), &cod.obj);
    for (bi, (gi, a, hi)) in blocks.iter().enumerate() {
        let fa = &y.maps[a];
        let mut term = fa.compose(&product.sum.proj[*gi]);
        if let Some(h) = hi {
            term = term.sub(&product.sum.proj[*h].rebase(product.obj(), &fa.dst));
        }
        diff = diff.add(&cod.inj[bi].compose(&term));
    }
    let (obj, forget) = kernel_complex(&diff);
    Ok(MatchingObject { x, k, pointed, product, obj, forget })
}

/// Reduced matching object (pointed mode of [`matching_object`]).
pub fn reduced_matching_object(y: &Diagram, x: usize, k: u32) -> Result<MatchingObject, DiagramError> {
    matching_object(y, x, k, true)
}

/// The reduced matching object computed as the pullback of `forget` along the
/// section `Θ` that inserts zeros at ideal coordinates; returns `(W, W → ∏ non-ideal)`.
pub fn reduced_matching_via_section(y: &Diagram, x: usize, k: u32) -> Result<(Complex, ChainMap), DiagramError> {
    let full = matching_object(y, x, k, false)?;
    let index = matching_index(&y.shape, x, k, true);
    let reduced = IndexedProduct::new(y.ring, index.clone(), |g: &Mor| y.obj(g.dst).clone());
    let theta_parts: Vec<ChainMap> = full
        .product
        .keys
        .iter()
        .map(|g| match reduced.position(g) {
            Some(i) => reduced.sum.proj[i].clone(),
            None => ChainMap::zero(reduced.obj(), y.obj(g.dst)),
        })
        .collect();
    let theta = full.product.tuple(reduced.obj(), &theta_parts);
    let pb = pullback(&theta, &full.forget);
    Ok((pb.obj.clone(), pb.px.clone()))
}

/// `Y(g)` for each indexed `g`, tupled into the product.
pub fn sigma_into(y: &Diagram, product: &IndexedProduct<Mor>, x: usize) -> ChainMap {
    let maps: Vec<ChainMap> = product.keys.iter().map(|g| y.map_of(*g)).collect();
    product.tuple(y.obj(x), &maps)
}

/// `(σ^x_{k−1}, σ^x_{<k})` together with their target products.
pub struct SigmaMaps {
    pub top: IndexedProduct<Mor>,
    pub sigma_top: ChainMap,
    pub below: IndexedProduct<Mor>,
    pub sigma_below: ChainMap,
}

pub fn sigma_maps(y: &Diagram, x: usize, k: u32, pointed: bool) -> SigmaMaps {
    let j = &y.shape;
    assert!(k >= 1);
    let top_idx = j.morphisms_at(x, k - 1, pointed);
    let below_idx = j.morphisms_below(x, k - 1, pointed);
    let top = IndexedProduct::new(y.ring, top_idx, |g: &Mor| y.obj(g.dst).clone());
    let below = IndexedProduct::new(y.ring, below_idx, |g: &Mor| y.obj(g.dst).clone());
    let sigma_top = sigma_into(y, &top, x);
    let sigma_below = sigma_into(y, &below, x);
    SigmaMaps { top, sigma_top, below, sigma_below }
}

/// `Ψ: ∏_{|v|<k} Y(v) → ∏_{|s|=k} ∏_{|v|<k} Y(v)`, a coordinate routing.
pub struct GeneralizedDiagonal {
    pub src: IndexedProduct<Mor>,
    pub dst: IndexedProduct<(Mor, Mor)>,
    pub psi: ChainMap,
}

pub fn generalized_diagonal(y: &Diagram, x: usize, k: u32, pointed: bool) -> GeneralizedDiagonal {
    let j = &y.shape;
    assert!(k >= 1);
    let src_idx = j.morphisms_below(x, k - 1, pointed);
    let mut pairs = vec![];
    for g in j.morphisms_at(x, k, pointed) {
        for f in j.morphisms_below(g.dst, k - 1, pointed) {
            pairs.push((g, f));
        }
    }
    let src = IndexedProduct::new(y.ring, src_idx, |g: &Mor| y.obj(g.dst).clone());
    let dst = IndexedProduct::new(y.ring, pairs, |p: &(Mor, Mor)| y.obj(p.1.dst).clone());
    let parts: Vec<ChainMap> = dst
        .keys
        .iter()
        .map(|(g, f)| {
            let h = j.compose(*f, *g);
            match src.position(&h) {
                Some(i) => src.sum.proj[i].clone(),
                None => ChainMap::zero(src.obj(), y.obj(f.dst)),
            }
        })
        .collect();
    let psi = dst.tuple(src.obj(), &parts);
    GeneralizedDiagonal { src, dst, psi }
}

/// `∏_g σ^s_{<k}: ∏_{|s|=k} Y(s) → ∏_{(g,f)} Y(v)`.
pub fn sigma_product(
    y: &Diagram,
    gd: &GeneralizedDiagonal,
    x: usize,
    k: u32,
    pointed: bool,
) -> (IndexedProduct<Mor>, ChainMap) {
    let j = &y.shape;
    let tops = IndexedProduct::new(y.ring, j.morphisms_at(x, k, pointed), |g: &Mor| y.obj(g.dst).clone());
    let parts: Vec<ChainMap> = gd.dst.keys.iter().map(|(g, f)| y.map_of(*f).compose(tops.proj(g))).collect();
    let m = gd.dst.tuple(tops.obj(), &parts);
    (tops, m)
}

/// Checks that `M^x_k` is the pullback of `M^x_{k−1} → ∏ ← ∏_{|s|=k} Y(s)`;
/// returns the comparison isomorphism `M^x_k → pullback` when it is one.
pub fn matching_pullback_check(y: &Diagram, x: usize, k: u32, pointed: bool) -> Result<Option<ChainMap>, DiagramError> {
    assert!(k >= 1);
    let mk = matching_object(y, x, k, pointed)?;
    let mk1 = matching_object(y, x, k - 1, pointed)?;
    let gd = generalized_diagonal(y, x, k, pointed);
    let (tops, sig) = sigma_product(y, &gd, x, k, pointed);
    // M_{k−1} → ∏_{|t|<k} coincides with gd.src up to rebasing
    let forget1 = mk1.forget.rebase(&mk1.obj, gd.src.obj());
    let left = gd.psi.compose(&forget1);
    let pb = pullback(&left, &sig);
    // components of M_k
    let below_parts: Vec<ChainMap> = gd.src.keys.iter().map(|g| mk.projection(g)).collect();
    let to_below = gd.src.tuple(&mk.obj, &below_parts);
    let Some(a) = lift_through_mono(&forget1, &to_below) else { return Ok(None) };
    let top_parts: Vec<ChainMap> = tops.keys.iter().map(|g| mk.projection(g)).collect();
    let b = tops.tuple(&mk.obj, &top_parts);
    let Ok(cmp) = pb.factor(&a, &b) else { return Ok(None) };
    if cmp.is_iso() {
        Ok(Some(cmp))
    } else {
        Ok(None)
    }
}

/// The matching map `m^x_k: Y(x) → M^x_k`.
pub fn matching_map(y: &Diagram, m: &MatchingObject) -> Option<ChainMap> {
    let fam = sigma_into(y, &m.product, m.x);
    m.lift(&fam)
}

/// First `(object, degree)` where a matching map fails to be surjective.
pub fn fibrancy_defect(y: &Diagram, pointed: bool) -> Result<Option<(usize, i64)>, DiagramError> {
    let j = &y.shape;
    for x in j.objects_by_degree() {
        if j.degree(x) == 0 || !y.has_object(x) {
            continue;
        }
        let m = matching_object(y, x, j.degree(x) - 1, pointed)?;
        let mm = matching_map(y, &m).ok_or_else(|| DiagramError::Relation(format!("cone at `{}`", j.name(x))))?;
        if let Some(n) = mm.surjectivity_defect() {
            return Ok(Some((x, n)));
        }
    }
    Ok(None)
}

pub fn is_reedy_fibrant(y: &Diagram) -> Result<bool, DiagramError> {
    Ok(fibrancy_defect(y, false)?.is_none())
}

pub fn is_pointed_reedy_fibrant(y: &Diagram) -> Result<bool, DiagramError> {
    Ok(fibrancy_defect(y, true)?.is_none())
}

/// A strict diagram together with a levelwise weak equivalence from the input.
pub struct Replacement {
    pub diagram: Diagram,
    pub equivalence: BTreeMap<usize, ChainMap>,
}

/// Replace objects by increasing degree so every (reduced) matching map is a
/// fibration; objects whose matching map is already surjective are kept.
pub fn reedy_fibrant_replacement_mode(y: &Diagram, pointed: bool) -> Result<Replacement, DiagramError> {
    y.check_strict(pointed)?;
    let j = y.shape.clone();
    let mut out = Diagram::new(j.clone(), y.ring);
    let mut eq: BTreeMap<usize, ChainMap> = BTreeMap::new();
    for x in j.objects_by_degree() {
        // partial diagrams: replace only the assigned objects
        if !y.has_object(x) {
            continue;
        }
        let yx = y.obj(x).clone();
        let out_arrows = j.arrows_from(x);
        if j.degree(x) == 0 {
            out.objects.insert(x, yx.clone());
            eq.insert(x, ChainMap::identity(&yx));
            continue;
        }
        let m = matching_object(&out, x, j.degree(x) - 1, pointed)?;
        // family e_t ∘ Y(g)
        let fam_parts: Vec<ChainMap> = m.product.keys.iter().map(|g| eq[&g.dst].compose(&y.map_of(*g))).collect();
        let fam = m.product.tuple(&yx, &fam_parts);
        let mm = m.lift(&fam).ok_or_else(|| DiagramError::Relation(format!("cone at `{}`", j.name(x))))?;
        let (newx, e, q) = if mm.is_degreewise_surjective() {
            (yx.clone(), ChainMap::identity(&yx), mm.clone())
        } else {
            let f = factor_we_fib(&mm);
            (f.obj.clone(), f.first.clone(), f.second.clone())
        };
        out.objects.insert(x, newx.clone());
        eq.insert(x, e);
        for a in out_arrows {
            let am = j.arrow_mor(a);
            let map = match m.product.position(&am) {
                Some(_) => m.projection(&am).compose(&q),
                None => ChainMap::zero(&newx, out.obj(j.arrows()[a].dst)),
            };
            out.maps.insert(a, map);
        }
    }
    out.check_strict(pointed)?;
    Ok(Replacement { diagram: out, equivalence: eq })
}

pub fn reedy_fibrant_replacement(y: &Diagram) -> Result<Replacement, DiagramError> {
    reedy_fibrant_replacement_mode(y, false)
}

pub fn pointed_reedy_fibrant_replacement(y: &Diagram) -> Result<Replacement, DiagramError> {
    reedy_fibrant_replacement_mode(y, true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::{arc, mat, ChainComplex};
    use crate::index_cat::{double_diamond, toda_chain, WeakLattice};
    use crate::linalg::ExactMatrix;

    const Z: Ring = Ring::Integers;

    fn s0() -> Complex {
        arc(ChainComplex::sphere(Z, 0))
    }

    fn constant(spec: &crate::index_cat::CategorySpec, c: &Complex) -> Diagram {
        let j = Arc::new(WeakLattice::compile(spec).unwrap());
        let mut y = Diagram::new(j.clone(), Z);
        for x in 0..j.num_objects() {
            y.objects.insert(x, c.clone());
        }
        for a in 0..j.arrows().len() {
            y.maps.insert(a, ChainMap::identity(c));
        }
        y
    }

    #[test]
    fn double_diamond_matching_objects() {
        let y = constant(&double_diamond(), &s0());
        let x = y.shape.object("x").unwrap();
        let m0 = matching_object(&y, x, 0, false).unwrap();
        assert_eq!(m0.obj.total_rank(), 2);
        let m1 = matching_object(&y, x, 1, false).unwrap();
        assert_eq!(m1.obj.total_rank(), 1);
        assert!(m1.forget.is_split_mono());
        for k in 1..3 {
            assert!(matching_pullback_check(&y, x, k, false).unwrap().is_some());
        }
        assert!(y.check_strict(false).is_ok());
    }

    #[test]
    fn toda_chain_reduced_matching() {
        // 3 → 2 → 1 → 0 with M_2-shaped complexes and zero composites
        let spec = toda_chain(3);
        let j = Arc::new(WeakLattice::compile(&spec).unwrap());
        let mut y = Diagram::new(j.clone(), Z);
        let c = s0();
        for x in 0..4 {
            y.objects.insert(x, c.clone());
        }
        for a in 0..3 {
            y.maps.insert(a, ChainMap::zero(&c, &c));
        }
        let x3 = j.object("3").unwrap();
        assert!(reduced_matching_object(&y, x3, 0).unwrap().obj.is_zero());
        let r = reduced_matching_object(&y, x3, 2).unwrap();
        assert_eq!(r.obj.total_rank(), 1);
        let (w, _) = reduced_matching_via_section(&y, x3, 2).unwrap();
        assert_eq!(w.ranks(), r.obj.ranks());
        assert!(matching_pullback_check(&y, x3, 1, false).unwrap().is_some());
        assert!(matching_pullback_check(&y, x3, 1, true).unwrap().is_some());
        let gd = generalized_diagonal(&y, x3, 2, true);
        assert!(gd.psi.is_zero());
        assert_eq!(gd.dst.obj().total_rank(), 1);
    }

    #[test]
    fn toda_chain_fiber_at_top_stage() {
        // 2 → 1 → 0 with f: S^0 ⊕ S^0 → S^0 the sum map
        let spec = toda_chain(2);
        let j = Arc::new(WeakLattice::compile(&spec).unwrap());
        let mut y = Diagram::new(j.clone(), Z);
        let two: Complex = arc(ChainComplex::graded(Z, &BTreeMap::from([(0, 2)])));
        let (o2, o1, o0) = (j.object("2").unwrap(), j.object("1").unwrap(), j.object("0").unwrap());
        y.objects.insert(o2, s0());
        y.objects.insert(o1, two.clone());
        y.objects.insert(o0, s0());
        let f = ChainMap::new(&two, &s0(), BTreeMap::from([(0, mat(Z, 1, 2, &[1, 1]))])).unwrap();
        let g = ChainMap::new(&s0(), &two, BTreeMap::from([(0, mat(Z, 2, 1, &[1, -1]))])).unwrap();
        y.maps.insert(j.arrow_by_label("f1").unwrap(), f);
        y.maps.insert(j.arrow_by_label("f2").unwrap(), g);
        assert!(y.check_strict(true).is_ok());
        let r = reduced_matching_object(&y, o2, 1).unwrap();
        assert_eq!(r.obj.total_rank(), 1); // the fibre of f
        assert!(is_pointed_reedy_fibrant(&y).unwrap());
        assert!(!is_reedy_fibrant(&y).unwrap());
        let rep = reedy_fibrant_replacement(&y).unwrap();
        assert!(is_reedy_fibrant(&rep.diagram).unwrap());
        for (x, e) in &rep.equivalence {
            assert!(e.is_quasi_iso(), "object {}", x);
        }
    }

    #[test]
    fn non_surjective_map_gets_replaced() {
        let spec = toda_chain(1);
        let j = Arc::new(WeakLattice::compile(&spec).unwrap());
        let mut y = Diagram::new(j.clone(), Z);
        let (o1, o0) = (j.object("1").unwrap(), j.object("0").unwrap());
        y.objects.insert(o1, s0());
        y.objects.insert(o0, s0());
        let two = ChainMap::new(&s0(), &s0(), BTreeMap::from([(0, mat(Z, 1, 1, &[2]))])).unwrap();
        y.maps.insert(0, two);
        assert_eq!(fibrancy_defect(&y, true).unwrap(), Some((o1, 0)));
        let rep = pointed_reedy_fibrant_replacement(&y).unwrap();
        assert!(is_pointed_reedy_fibrant(&rep.diagram).unwrap());
        assert!(rep.equivalence[&o1].is_quasi_iso());
        assert_ne!(rep.diagram.obj(o1).ranks(), y.obj(o1).ranks());
        // an already fibrant diagram is left alone
        let again = pointed_reedy_fibrant_replacement(&rep.diagram).unwrap();
        assert_eq!(again.diagram.obj(o1).ranks(), rep.diagram.obj(o1).ranks());
        assert!(again.equivalence.values().all(|e| e.is_iso()));
    }

    #[test]
    fn zero_diagram_is_fibrant() {
        let z: Complex = arc(ChainComplex::zero(Z));
        let y = constant(&double_diamond(), &z);
        assert!(is_reedy_fibrant(&y).unwrap());
        let _ = ExactMatrix::zeros(Z, 0, 0);
    }
}
