//! Bounded chain complexes of finitely generated free modules.
//!
//! Model structure: fibrations are degreewise surjections, weak equivalences
//! are quasi-isomorphisms, cofibrations are degreewise split injections.
//! Every object is fibrant and cofibrant.
//!
//! Sign conventions, used everywhere:
//! * hom complex: `δf = d∘f − (−1)^n f∘d` on maps of degree `n`;
//! * a homotopy `s` from `f` to `g` satisfies `d s + s d = f − g`;
//! * cone `CX_n = X_n ⊕ X_{n−1}`, `d(a, h) = (da + h, −dh)`;
//! * suspension `Σ′X_n = X_{n−1}` with differential `−d`;
//! * mapping path space of `f: X → Y` is `X ⊕ Y ⊕ Y[+1]` with
//!   `d(a, b, h) = (da, db, b − fa − dh)`.

use crate::linalg::{self, AbGroupPresentation, ExactMatrix, Ring, SparseSystem};
use num_bigint::BigInt;
use num_traits::{One, Zero};
use std::borrow::Cow;
use std::collections::BTreeMap;
use std::sync::Arc;

#[derive(Debug, thiserror::Error, Clone, PartialEq, Eq)]
pub enum ChainError {
    #[error("d∘d ≠ 0 at degree {0}")]
    NotAComplex(i64),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("ring mismatch")]
    RingMismatch,
    #[error("not a chain map at degree {0}")]
    NotAChainMap(i64),
    #[error("invalid homotopy witness at degree {0}")]
    BadHomotopy(i64),
    #[error("malformed square: {0}")]
    MalformedSquare(String),
    #[error("not a fibration at degree {0}")]
    NotAFibration(i64),
    #[error("not a cofibration at degree {0}")]
    NotACofibration(i64),
}

pub type Complex = Arc<ChainComplex>;

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct ChainComplex {
    ring: Ring,
    lo: i64,
    ranks: Vec<usize>,
    /// `d[i]` is the differential leaving degree `lo + i`.
    d: Vec<ExactMatrix>,
}

impl std::fmt::Debug for ChainComplex {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "ChainComplex[{}](", self.ring)?;
        for n in self.degrees() {
            write!(f, "{}:{} ", n, self.rank(n))?;
        }
        write!(f, ")")
    }
}

impl ChainComplex {
    pub fn zero(ring: Ring) -> Self {
        ChainComplex { ring, lo: 0, ranks: vec![], d: vec![] }
    }

    /// Build from ranks and differentials keyed by degree; validates shapes and `d² = 0`.
    pub fn from_parts(
        ring: Ring,
        ranks: &BTreeMap<i64, usize>,
        diffs: &BTreeMap<i64, ExactMatrix>,
    ) -> Result<Self, ChainError> {
        let support: Vec<i64> = ranks.iter().filter(|(_, r)| **r > 0).map(|(n, _)| *n).collect();
        if support.is_empty() {
            for (n, m) in diffs {
                if (!m.is_zero() || m.rows() > 0 || m.cols() > 0) && m.rows() * m.cols() > 0 {
                    return Err(ChainError::Shape(format!("differential at {} on a zero complex", n)));
                }
            }
            return Ok(Self::zero(ring));
        }
        let lo = support[0];
        let hi = *support.last().unwrap();
        let rank = |n: i64| ranks.get(&n).copied().unwrap_or(0);
        let mut d = Vec::new();
        for n in lo..=hi {
            let shape = (rank(n - 1), rank(n));
            let m = match diffs.get(&n) {
                Some(m) => {
                    if m.ring() != ring {
                        return Err(ChainError::RingMismatch);
                    }
                    if (m.rows(), m.cols()) != shape {
                        return Err(ChainError::Shape(format!(
                            "d({}) is {}x{}, expected {}x{}",
                            n,
                            m.rows(),
                            m.cols(),
                            shape.0,
                            shape.1
                        )));
                    }
                    m.clone()
                }
                None => ExactMatrix::zeros(ring, shape.0, shape.1),
            };
            d.push(m);
        }
        for (n, m) in diffs {
            if (*n < lo || *n > hi + 1) && m.rows() * m.cols() > 0 {
                return Err(ChainError::Shape(format!("d({}) outside the support", n)));
            }
            if *n == hi + 1 && m.rows() * m.cols() > 0 {
                return Err(ChainError::Shape(format!("d({}) outside the support", n)));
            }
        }
        let c = ChainComplex { ring, lo, ranks: (lo..=hi).map(rank).collect(), d };
        c.validate()?;
        Ok(c)
    }

    /// Construct without validation; used internally where `d² = 0` holds by construction.
    fn raw(ring: Ring, lo: i64, ranks: Vec<usize>, d: Vec<ExactMatrix>) -> Self {
        let mut c = ChainComplex { ring, lo, ranks, d };
        c.trim();
        c
    }

    fn trim(&mut self) {
        while self.ranks.last() == Some(&0) {
            self.ranks.pop();
            self.d.pop();
        }
        while self.ranks.first() == Some(&0) {
            self.ranks.remove(0);
            self.d.remove(0);
            self.lo += 1;
            if let Some(first) = self.d.first_mut() {
                *first = ExactMatrix::zeros(self.ring, 0, first.cols());
            }
        }
        if self.ranks.is_empty() {
            self.lo = 0;
        }
    }

    /// `R` concentrated in degree `n`.
    pub fn sphere(ring: Ring, n: i64) -> Self {
        Self::raw(ring, n, vec![1], vec![ExactMatrix::zeros(ring, 0, 1)])
    }

    /// `[R --c--> R]` in degrees `n+1 → n`.
    pub fn moore(ring: Ring, c: i64, n: i64) -> Self {
        Self::raw(ring, n, vec![1, 1], vec![ExactMatrix::zeros(ring, 0, 1), ExactMatrix::from_i64(ring, 1, 1, &[c])])
    }

    /// Free complex with zero differential and the given ranks.
    pub fn graded(ring: Ring, ranks: &BTreeMap<i64, usize>) -> Self {
        Self::from_parts(ring, ranks, &BTreeMap::new()).expect("zero differential")
    }

    pub fn ring(&self) -> Ring {
        self.ring
    }

    pub fn is_zero(&self) -> bool {
        self.ranks.is_empty()
    }

    pub fn lo(&self) -> i64 {
        self.lo
    }

    pub fn hi(&self) -> i64 {
        self.lo + self.ranks.len() as i64 - 1
    }

    pub fn degrees(&self) -> impl Iterator<Item = i64> + '_ {
        let lo = self.lo;
        (0..self.ranks.len()).map(move |i| lo + i as i64)
    }

    pub fn rank(&self, n: i64) -> usize {
        if self.ranks.is_empty() || n < self.lo || n > self.hi() {
            0
        } else {
            self.ranks[(n - self.lo) as usize]
        }
    }

    pub fn total_rank(&self) -> usize {
        self.ranks.iter().sum()
    }

    pub fn ranks(&self) -> BTreeMap<i64, usize> {
        self.degrees().map(|n| (n, self.rank(n))).collect()
    }

    /// Differential `C_n → C_{n−1}`.
    pub fn d(&self, n: i64) -> ExactMatrix {
        if self.ranks.is_empty() || n < self.lo || n > self.hi() {
            ExactMatrix::zeros(self.ring, self.rank(n - 1), self.rank(n))
        } else {
            self.d[(n - self.lo) as usize].clone()
        }
    }

    pub fn validate(&self) -> Result<(), ChainError> {
        for n in self.degrees() {
            let dd = self.d(n - 1).mul(&self.d(n));
            if !dd.is_zero() {
                return Err(ChainError::NotAComplex(n));
            }
        }
        Ok(())
    }

    /// `Σ^k` with differential multiplied by `(−1)^k`.
    pub fn shift(&self, k: i64) -> Self {
        if self.is_zero() {
            return self.clone();
        }
        let sign = if k.rem_euclid(2) == 1 { BigInt::from(-1) } else { BigInt::one() };
        let d = self.d.iter().map(|m| m.scale(&sign)).collect();
        Self::raw(self.ring, self.lo + k, self.ranks.clone(), d)
    }

    pub fn homology(&self, n: i64) -> AbGroupPresentation {
        subquotient(&self.d(n), &self.d(n + 1))
    }

    pub fn is_acyclic(&self) -> bool {
        self.degrees().all(|n| self.homology(n).is_trivial())
    }

    /// Homology in every degree of the support, as invariant-factor strings.
    pub fn homology_table(&self) -> BTreeMap<i64, String> {
        self.degrees().map(|n| (n, self.homology(n).describe())).collect()
    }
}

/// Presentation of `ker(a) / im(b)` where `a∘b = 0`, in ambient coordinates.
pub fn subquotient(a: &ExactMatrix, b: &ExactMatrix) -> AbGroupPresentation {
    let ring = a.ring();
    let n = a.cols();
    let k = linalg::kernel_matrix(a);
    if k.cols() == 0 {
        return AbGroupPresentation::trivial(ring, n);
    }
    let c = linalg::solve_many(&k, b).expect("shapes").expect("boundaries are cycles");
    let left = linalg::left_inverse(&k).expect("kernel basis is saturated");
    AbGroupPresentation::from_cokernel_in_basis(&c, &k, &left)
}

fn union_range(a: &ChainComplex, b: &ChainComplex) -> Vec<i64> {
    match (a.is_zero(), b.is_zero()) {
        (true, true) => vec![],
        (true, false) => b.degrees().collect(),
        (false, true) => a.degrees().collect(),
        (false, false) => (a.lo.min(b.lo)..=a.hi().max(b.hi())).collect(),
    }
}

fn same(a: &Complex, b: &Complex) -> bool {
    Arc::ptr_eq(a, b) || **a == **b
}

/// Degreewise matrices; component at `n` is `dst(n) × src(n)`.
#[derive(Clone)]
pub struct ChainMap {
    pub src: Complex,
    pub dst: Complex,
    f: BTreeMap<i64, ExactMatrix>,
}

/// Degreewise: a stored zero block equals an absent one.
impl PartialEq for ChainMap {
    fn eq(&self, other: &Self) -> bool {
        self.src == other.src
            && self.dst == other.dst
            && self.f.keys().chain(other.f.keys()).all(|&n| self.at_ref(n) == other.at_ref(n))
    }
}

impl Eq for ChainMap {}

impl std::fmt::Debug for ChainMap {
    fn fmt(&self, fm: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(fm, "ChainMap {:?} -> {:?}", self.src, self.dst)?;
        for (n, m) in &self.f {
            if m.rows() * m.cols() > 0 {
                write!(fm, "\n deg {}: {:?}", n, m)?;
            }
        }
        Ok(())
    }
}

impl ChainMap {
    pub fn zero(src: &Complex, dst: &Complex) -> Self {
        ChainMap { src: src.clone(), dst: dst.clone(), f: BTreeMap::new() }
    }

    pub fn identity(c: &Complex) -> Self {
        let f = c.degrees().map(|n| (n, ExactMatrix::identity(c.ring, c.rank(n)))).collect();
        ChainMap { src: c.clone(), dst: c.clone(), f }
    }

    /// Build from components; missing degrees are zero. Validates shapes only.
    pub fn from_components(
        src: &Complex,
        dst: &Complex,
        comps: BTreeMap<i64, ExactMatrix>,
    ) -> Result<Self, ChainError> {
        if src.ring != dst.ring {
            return Err(ChainError::RingMismatch);
        }
        let mut f = BTreeMap::new();
        for (n, m) in comps {
            if (m.rows(), m.cols()) != (dst.rank(n), src.rank(n)) {
                if m.rows() * m.cols() == 0 && dst.rank(n) * src.rank(n) == 0 {
                    continue;
                }
                return Err(ChainError::Shape(format!(
                    "component at {} is {}x{}, expected {}x{}",
                    n,
                    m.rows(),
                    m.cols(),
                    dst.rank(n),
                    src.rank(n)
                )));
            }
            if src.rank(n) > 0 && dst.rank(n) > 0 && !m.is_zero() {
                f.insert(n, m);
            }
        }
        Ok(ChainMap { src: src.clone(), dst: dst.clone(), f })
    }

    /// Checked constructor: shapes and commutation with differentials.
    pub fn new(src: &Complex, dst: &Complex, comps: BTreeMap<i64, ExactMatrix>) -> Result<Self, ChainError> {
        let m = Self::from_components(src, dst, comps)?;
        m.validate()?;
        Ok(m)
    }

    pub fn from_fn(src: &Complex, dst: &Complex, mut g: impl FnMut(i64) -> ExactMatrix) -> Self {
        let mut f = BTreeMap::new();
        for n in src.degrees() {
            if dst.rank(n) == 0 {
                continue;
            }
            let m = g(n);
            debug_assert_eq!((m.rows(), m.cols()), (dst.rank(n), src.rank(n)), "component shape at {}", n);
            if !m.is_zero() {
                f.insert(n, m);
            }
        }
        ChainMap { src: src.clone(), dst: dst.clone(), f }
    }

    pub fn ring(&self) -> Ring {
        self.src.ring
    }

    pub fn at(&self, n: i64) -> ExactMatrix {
        self.at_ref(n).into_owned()
    }

    pub fn at_ref(&self, n: i64) -> Cow<'_, ExactMatrix> {
        match self.f.get(&n) {
            Some(m) => Cow::Borrowed(m),
            None => Cow::Owned(ExactMatrix::zeros(self.src.ring, self.dst.rank(n), self.src.rank(n))),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.f.values().all(|m| m.is_zero())
    }

    pub fn validate(&self) -> Result<(), ChainError> {
        for n in union_range(&self.src, &self.dst) {
            let l = self.dst.d(n).mul(&self.at(n));
            let r = self.at(n - 1).mul(&self.src.d(n));
            if l != r {
                return Err(ChainError::NotAChainMap(n));
            }
        }
        Ok(())
    }

    pub fn is_chain_map(&self) -> bool {
        self.validate().is_ok()
    }

    /// `self ∘ other`.
    pub fn compose(&self, other: &ChainMap) -> ChainMap {
        assert!(same(&self.src, &other.dst), "composition of non-composable maps");
        ChainMap::from_fn(&other.src, &self.dst, |n| self.at_ref(n).mul(&other.at_ref(n)))
    }

    pub fn add(&self, other: &ChainMap) -> ChainMap {
        assert!(same(&self.src, &other.src) && same(&self.dst, &other.dst), "sum of maps with different ends");
        ChainMap::from_fn(&self.src, &self.dst, |n| self.at_ref(n).add(&other.at_ref(n)))
    }

    pub fn sub(&self, other: &ChainMap) -> ChainMap {
        assert!(same(&self.src, &other.src) && same(&self.dst, &other.dst), "difference of maps with different ends");
        ChainMap::from_fn(&self.src, &self.dst, |n| self.at_ref(n).sub(&other.at_ref(n)))
    }

    pub fn neg(&self) -> ChainMap {
        ChainMap::from_fn(&self.src, &self.dst, |n| self.at_ref(n).neg())
    }

    pub fn scale(&self, c: &BigInt) -> ChainMap {
        ChainMap::from_fn(&self.src, &self.dst, |n| self.at_ref(n).scale(c))
    }

    /// Same matrices viewed between equal complexes held in other handles.
    pub fn rebase(&self, src: &Complex, dst: &Complex) -> ChainMap {
        assert!(same(&self.src, src) && same(&self.dst, dst), "rebase onto different complexes");
        ChainMap { src: src.clone(), dst: dst.clone(), f: self.f.clone() }
    }

    pub fn components(&self) -> &BTreeMap<i64, ExactMatrix> {
        &self.f
    }

    pub fn is_degreewise_surjective(&self) -> bool {
        self.dst.degrees().all(|n| linalg::is_surjective(&self.at(n)))
    }

    /// First degree where surjectivity fails.
    pub fn surjectivity_defect(&self) -> Option<i64> {
        self.dst.degrees().find(|&n| !linalg::is_surjective(&self.at(n)))
    }

    pub fn is_degreewise_injective(&self) -> bool {
        self.src.degrees().all(|n| linalg::is_injective(&self.at(n)))
    }

    pub fn is_split_mono(&self) -> bool {
        self.src.degrees().all(|n| linalg::is_split_injective(&self.at(n)))
    }

    pub fn is_quasi_iso(&self) -> bool {
        mapping_cone(self).is_acyclic()
    }

    pub fn is_iso(&self) -> bool {
        union_range(&self.src, &self.dst).into_iter().all(|n| {
            let m = self.at(n);
            m.is_square() && (m.rows() == 0 || linalg::inverse(&m).is_some())
        })
    }

    /// Inverse of a degreewise invertible chain map.
    pub fn inverse(&self) -> Option<ChainMap> {
        let mut comps = BTreeMap::new();
        for n in union_range(&self.src, &self.dst) {
            let m = self.at(n);
            if !m.is_square() {
                return None;
            }
            if m.rows() == 0 {
                continue;
            }
            comps.insert(n, linalg::inverse(&m)?);
        }
        ChainMap::from_components(&self.dst, &self.src, comps).ok()
    }
}

/// `s(n): src(n) → dst(n+1)` witnessing `d s + s d = f − g`.
#[derive(Clone, Debug)]
pub struct ChainHomotopy {
    pub src: Complex,
    pub dst: Complex,
    s: BTreeMap<i64, ExactMatrix>,
}

impl PartialEq for ChainHomotopy {
    fn eq(&self, other: &Self) -> bool {
        self.src == other.src
            && self.dst == other.dst
            && self.s.keys().chain(other.s.keys()).all(|&n| self.at(n) == other.at(n))
    }
}

impl Eq for ChainHomotopy {}

impl ChainHomotopy {
    pub fn zero(src: &Complex, dst: &Complex) -> Self {
        ChainHomotopy { src: src.clone(), dst: dst.clone(), s: BTreeMap::new() }
    }

    pub fn from_fn(src: &Complex, dst: &Complex, mut g: impl FnMut(i64) -> ExactMatrix) -> Self {
        let mut s = BTreeMap::new();
        for n in src.degrees() {
            if dst.rank(n + 1) == 0 {
                continue;
            }
            let m = g(n);
            debug_assert_eq!((m.rows(), m.cols()), (dst.rank(n + 1), src.rank(n)));
            if !m.is_zero() {
                s.insert(n, m);
            }
        }
        ChainHomotopy { src: src.clone(), dst: dst.clone(), s }
    }

    pub fn from_components(
        src: &Complex,
        dst: &Complex,
        comps: BTreeMap<i64, ExactMatrix>,
    ) -> Result<Self, ChainError> {
        for (n, m) in &comps {
            if (m.rows(), m.cols()) != (dst.rank(n + 1), src.rank(*n)) && m.rows() * m.cols() > 0 {
                return Err(ChainError::Shape(format!("homotopy component at {}", n)));
            }
        }
        Ok(Self::from_fn(src, dst, |n| {
            comps.get(&n).cloned().unwrap_or_else(|| ExactMatrix::zeros(src.ring, dst.rank(n + 1), src.rank(n)))
        }))
    }

    pub fn at(&self, n: i64) -> ExactMatrix {
        match self.s.get(&n) {
            Some(m) => m.clone(),
            None => ExactMatrix::zeros(self.src.ring, self.dst.rank(n + 1), self.src.rank(n)),
        }
    }

    pub fn components(&self) -> &BTreeMap<i64, ExactMatrix> {
        &self.s
    }

    pub fn is_zero(&self) -> bool {
        self.s.values().all(|m| m.is_zero())
    }

    /// `d s + s d`.
    pub fn boundary(&self) -> ChainMap {
        ChainMap::from_fn(&self.src, &self.dst, |n| {
            self.dst.d(n + 1).mul(&self.at(n)).add(&self.at(n - 1).mul(&self.src.d(n)))
        })
    }

    /// Checks `d s + s d = f − g`.
    pub fn witnesses(&self, f: &ChainMap, g: &ChainMap) -> bool {
        self.boundary() == f.sub(g).rebase(&self.src, &self.dst)
    }

    pub fn validate(&self, f: &ChainMap, g: &ChainMap) -> Result<(), ChainError> {
        let b = self.boundary();
        let diff = f.sub(g);
        for n in self.src.degrees() {
            if b.at(n) != diff.at(n) {
                return Err(ChainError::BadHomotopy(n));
            }
        }
        Ok(())
    }

    pub fn add(&self, other: &ChainHomotopy) -> ChainHomotopy {
        ChainHomotopy::from_fn(&self.src, &self.dst, |n| self.at(n).add(&other.at(n)))
    }

    pub fn neg(&self) -> ChainHomotopy {
        ChainHomotopy::from_fn(&self.src, &self.dst, |n| self.at(n).neg())
    }

    /// `g ∘ s` for a chain map `g` out of the target.
    pub fn post(&self, g: &ChainMap) -> ChainHomotopy {
        ChainHomotopy::from_fn(&self.src, &g.dst, |n| g.at(n + 1).mul(&self.at(n)))
    }

    /// `s ∘ k` for a chain map `k` into the source.
    pub fn pre(&self, k: &ChainMap) -> ChainHomotopy {
        ChainHomotopy::from_fn(&k.src, &self.dst, |n| self.at(n).mul(&k.at(n)))
    }
}

// ---------------------------------------------------------------------------
// Linear systems whose unknowns are degreewise matrices.

/// A block of unknowns of a fixed shape.
#[derive(Clone, Copy, Debug)]
pub struct Var {
    offset: usize,
    rows: usize,
    cols: usize,
}

/// Unknown degreewise map `src(n) → dst(n + shift)`.
#[derive(Clone, Debug)]
pub struct MapVar {
    pub src: Complex,
    pub dst: Complex,
    pub shift: i64,
    blocks: BTreeMap<i64, Var>,
}

struct Term {
    var: Var,
    left: ExactMatrix,
    right: ExactMatrix,
}

struct Equation {
    rows: usize,
    cols: usize,
    terms: Vec<Term>,
    rhs: ExactMatrix,
}

/// Builder for `Σ L X R = C` systems over a ring.
pub struct LinSys {
    ring: Ring,
    nvars: usize,
    eqs: Vec<Equation>,
}

/// Affine solution set of a [`LinSys`].
pub struct LinSolution {
    ring: Ring,
    pub particular: Vec<BigInt>,
    pub kernel: Vec<Vec<BigInt>>,
}

impl LinSolution {
    fn block(&self, v: &[BigInt], var: Var) -> ExactMatrix {
        ExactMatrix::from_rows(self.ring, var.rows, var.cols, v[var.offset..var.offset + var.rows * var.cols].to_vec())
            .expect("block shape")
    }

    pub fn map(&self, mv: &MapVar) -> ChainMap {
        self.map_from(&self.particular, mv)
    }

    pub fn map_from(&self, v: &[BigInt], mv: &MapVar) -> ChainMap {
        assert_eq!(mv.shift, 0);
        let comps = mv.blocks.iter().map(|(n, var)| (*n, self.block(v, *var))).collect();
        ChainMap::from_components(&mv.src, &mv.dst, comps).expect("block shapes")
    }

    pub fn homotopy(&self, mv: &MapVar) -> ChainHomotopy {
        self.homotopy_from(&self.particular, mv)
    }

    pub fn homotopy_from(&self, v: &[BigInt], mv: &MapVar) -> ChainHomotopy {
        assert_eq!(mv.shift, 1);
        let comps = mv.blocks.iter().map(|(n, var)| (*n, self.block(v, *var))).collect();
        ChainHomotopy::from_components(&mv.src, &mv.dst, comps).expect("block shapes")
    }
}

/// A linear expression in unknown maps, evaluated degreewise.
pub enum MapTerm<'a> {
    /// `L ∘ X ∘ R` for an unknown of shift 0.
    Plain { left: Option<&'a ChainMap>, var: &'a MapVar, right: Option<&'a ChainMap>, sign: i64 },
    /// `L ∘ (dS + Sd) ∘ R` for an unknown of shift 1.
    Boundary { left: Option<&'a ChainMap>, var: &'a MapVar, right: Option<&'a ChainMap>, sign: i64 },
}

impl LinSys {
    pub fn new(ring: Ring) -> Self {
        LinSys { ring, nvars: 0, eqs: vec![] }
    }

    pub fn ring(&self) -> Ring {
        self.ring
    }

    pub fn num_unknowns(&self) -> usize {
        self.nvars
    }

    pub fn var(&mut self, rows: usize, cols: usize) -> Var {
        let v = Var { offset: self.nvars, rows, cols };
        self.nvars += rows * cols;
        v
    }

    pub fn map_var(&mut self, src: &Complex, dst: &Complex, shift: i64) -> MapVar {
        let mut blocks = BTreeMap::new();
        for n in src.degrees() {
            let (r, c) = (dst.rank(n + shift), src.rank(n));
            if r * c > 0 {
                blocks.insert(n, self.var(r, c));
            }
        }
        MapVar { src: src.clone(), dst: dst.clone(), shift, blocks }
    }

    /// Adds `Σ terms = rhs` for a block equation of the given shape.
    pub fn equation(
        &mut self,
        rows: usize,
        cols: usize,
        terms: Vec<(Var, ExactMatrix, ExactMatrix)>,
        rhs: ExactMatrix,
    ) {
        assert_eq!((rhs.rows(), rhs.cols()), (rows, cols));
        if rows * cols == 0 {
            return;
        }
        let terms = terms
            .into_iter()
            .filter(|(_, l, r)| !l.is_zero() && !r.is_zero())
            .map(|(var, left, right)| {
                assert_eq!((left.rows(), left.cols(), right.rows(), right.cols()), (rows, var.rows, var.cols, cols));
                Term { var, left, right }
            })
            .collect();
        self.eqs.push(Equation { rows, cols, terms, rhs });
    }

    /// `d X = X d` for an unknown map of shift 0.
    pub fn chain_map_condition(&mut self, x: &MapVar) {
        assert_eq!(x.shift, 0);
        let ring = self.ring;
        let degrees: Vec<i64> = x.src.degrees().collect();
        for &n in &degrees {
            let rows = x.dst.rank(n - 1);
            let cols = x.src.rank(n);
            let mut terms = vec![];
            if let Some(v) = x.blocks.get(&n) {
                terms.push((*v, x.dst.d(n), ExactMatrix::identity(ring, cols)));
            }
            if let Some(v) = x.blocks.get(&(n - 1)) {
                terms.push((*v, ExactMatrix::identity(ring, rows).neg(), x.src.d(n)));
            }
            self.equation(rows, cols, terms, ExactMatrix::zeros(ring, rows, cols));
        }
    }

    /// `Σ terms = rhs` as maps `src → dst` of degree 0, imposed in every degree.
    pub fn map_equation(&mut self, src: &Complex, dst: &Complex, terms: &[MapTerm<'_>], rhs: Option<&ChainMap>) {
        let ring = self.ring;
        for n in src.degrees() {
            let rows = dst.rank(n);
            let cols = src.rank(n);
            if rows * cols == 0 {
                continue;
            }
            let mut eq_terms = vec![];
            for t in terms {
                match t {
                    MapTerm::Plain { left, var, right, sign } => {
                        assert_eq!(var.shift, 0);
                        let mid_src = right.map(|r| r.at(n)).unwrap_or_else(|| ExactMatrix::identity(ring, cols));
                        let l = left.map(|l| l.at(n)).unwrap_or_else(|| ExactMatrix::identity(ring, rows));
                        if let Some(v) = var.blocks.get(&n) {
                            eq_terms.push((*v, l.scale(&BigInt::from(*sign)), mid_src));
                        }
                    }
                    MapTerm::Boundary { left, var, right, sign } => {
                        assert_eq!(var.shift, 1);
                        let r = right.map(|r| r.at(n)).unwrap_or_else(|| ExactMatrix::identity(ring, cols));
                        let l = left.map(|l| l.at(n)).unwrap_or_else(|| ExactMatrix::identity(ring, rows));
                        let sg = BigInt::from(*sign);
                        // d S(n) R
                        if let Some(v) = var.blocks.get(&n) {
                            eq_terms.push((*v, l.mul(&var.dst.d(n + 1)).scale(&sg), r.clone()));
                        }
                        // S(n−1) d R
                        if let Some(v) = var.blocks.get(&(n - 1)) {
                            eq_terms.push((*v, l.scale(&sg), var.src.d(n).mul(&r)));
                        }
                    }
                }
            }
            let c = rhs.map(|m| m.at(n)).unwrap_or_else(|| ExactMatrix::zeros(ring, rows, cols));
            self.equation(rows, cols, eq_terms, c);
        }
    }

    fn assemble(&self) -> SparseSystem {
        let mut sys = SparseSystem::new(self.ring, self.nvars);
        for e in &self.eqs {
            let mut rows: Vec<Vec<(usize, BigInt)>> = vec![vec![]; e.rows * e.cols];
            for t in &e.terms {
                let right: Vec<Vec<(usize, &BigInt)>> = (0..t.var.cols)
                    .map(|b| (0..e.cols).map(|j| (j, t.right.get(b, j))).filter(|(_, r)| !r.is_zero()).collect())
                    .collect();
                for i in 0..e.rows {
                    for a in 0..t.var.rows {
                        let l = t.left.get(i, a);
                        if l.is_zero() {
                            continue;
                        }
                        for (b, rb) in right.iter().enumerate() {
                            let col = t.var.offset + a * t.var.cols + b;
                            for (j, r) in rb {
                                rows[i * e.cols + j].push((col, l * *r));
                            }
                        }
                    }
                }
            }
            for (idx, row) in rows.into_iter().enumerate() {
                let c = e.rhs.get(idx / e.cols, idx % e.cols).clone();
                sys.push_row(row, c);
            }
        }
        sys
    }

    pub fn solve(&self) -> Option<LinSolution> {
        let sol = self.assemble().solve(false)?;
        Some(LinSolution { ring: self.ring, particular: sol.particular, kernel: vec![] })
    }

    pub fn solve_with_kernel(&self) -> Option<LinSolution> {
        let sol = self.assemble().solve(true)?;
        Some(LinSolution { ring: self.ring, particular: sol.particular, kernel: sol.kernel })
    }

    pub fn is_solvable(&self) -> bool {
        self.solve().is_some()
    }
}

// ---------------------------------------------------------------------------
// Direct sums, kernels, pullbacks, pushouts.

#[derive(Clone)]
pub struct DirectSum {
    pub obj: Complex,
    pub inj: Vec<ChainMap>,
    pub proj: Vec<ChainMap>,
}

/// Degreewise direct sum; the empty sum is the zero complex.
pub fn direct_sum(ring: Ring, parts: &[Complex]) -> DirectSum {
    for p in parts {
        assert_eq!(p.ring, ring, "ring mismatch in direct sum");
    }
    let nonzero: Vec<&Complex> = parts.iter().filter(|p| !p.is_zero()).collect();
    let obj: Complex = if nonzero.is_empty() {
        Arc::new(ChainComplex::zero(ring))
    } else {
        let lo = nonzero.iter().map(|p| p.lo).min().unwrap();
        let hi = nonzero.iter().map(|p| p.hi()).max().unwrap();
        let ranks: Vec<usize> = (lo..=hi).map(|n| parts.iter().map(|p| p.rank(n)).sum()).collect();
        let d = (lo..=hi)
            .map(|n| {
                let blocks: Vec<ExactMatrix> = parts.iter().map(|p| p.d(n)).collect();
                ExactMatrix::block_diag(ring, &blocks)
            })
            .collect();
        Arc::new(ChainComplex::raw(ring, lo, ranks, d))
    };
    let mut inj = vec![];
    let mut proj = vec![];
    for (i, p) in parts.iter().enumerate() {
        let offset = |n: i64| parts[..i].iter().map(|q| q.rank(n)).sum::<usize>();
        inj.push(ChainMap::from_fn(p, &obj, |n| {
            let mut m = ExactMatrix::zeros(ring, obj.rank(n), p.rank(n));
            m.set_block(offset(n), 0, &ExactMatrix::identity(ring, p.rank(n)));
            m
        }));
        proj.push(ChainMap::from_fn(&obj, p, |n| {
            let mut m = ExactMatrix::zeros(ring, p.rank(n), obj.rank(n));
            m.set_block(0, offset(n), &ExactMatrix::identity(ring, p.rank(n)));
            m
        }));
    }
    DirectSum { obj, inj, proj }
}

impl DirectSum {
    /// The map into the sum with the given components.
    pub fn tuple(&self, src: &Complex, maps: &[ChainMap]) -> ChainMap {
        assert_eq!(maps.len(), self.inj.len());
        let mut out = ChainMap::zero(src, &self.obj);
        for (m, i) in maps.iter().zip(&self.inj) {
            out = out.add(&i.compose(m));
        }
        out
    }

    /// The map out of the sum with the given components.
    pub fn cotuple(&self, dst: &Complex, maps: &[ChainMap]) -> ChainMap {
        assert_eq!(maps.len(), self.proj.len());
        let mut out = ChainMap::zero(&self.obj, dst);
        for (m, p) in maps.iter().zip(&self.proj) {
            out = out.add(&m.compose(p));
        }
        out
    }

    pub fn tuple_homotopy(&self, src: &Complex, hs: &[ChainHomotopy]) -> ChainHomotopy {
        let mut out = ChainHomotopy::zero(src, &self.obj);
        for (h, i) in hs.iter().zip(&self.inj) {
            out = out.add(&h.post(i));
        }
        out
    }
}

/// Product of maps `∏ f_i : ∏ A_i → ∏ B_i`.
pub fn product_map(src: &DirectSum, dst: &DirectSum, maps: &[ChainMap]) -> ChainMap {
    let comps: Vec<ChainMap> = maps.iter().zip(&src.proj).map(|(f, p)| f.compose(p)).collect();
    dst.tuple(&src.obj, &comps)
}

/// Subcomplex `K` with `K_n = ker φ_n` on a chosen basis, and its inclusion.
pub fn kernel_complex(phi: &ChainMap) -> (Complex, ChainMap) {
    let ring = phi.ring();
    let src = &phi.src;
    let mut bases: BTreeMap<i64, ExactMatrix> = BTreeMap::new();
    for n in src.degrees() {
        bases.insert(n, linalg::kernel_matrix(&phi.at(n)));
    }
    let kb = |n: i64| bases.get(&n).cloned().unwrap_or_else(|| ExactMatrix::zeros(ring, src.rank(n), 0));
    if src.is_zero() {
        let z = Arc::new(ChainComplex::zero(ring));
        return (z.clone(), ChainMap::zero(&z, src));
    }
    let lo = src.lo;
    let hi = src.hi();
    let ranks: Vec<usize> = (lo..=hi).map(|n| kb(n).cols()).collect();
    let d: Vec<ExactMatrix> = (lo..=hi)
        .map(|n| {
            let img = src.d(n).mul(&kb(n));
            let below = kb(n - 1);
            if img.cols() == 0 || below.cols() == 0 {
                return ExactMatrix::zeros(ring, below.cols(), img.cols());
            }
            linalg::solve_many(&below, &img).expect("shapes").expect("differential preserves the kernel")
        })
        .collect();
    // `raw` trims zero ranks at the ends, so keep the inclusion aligned by degree.
    let k = Arc::new(ChainComplex::raw(ring, lo, ranks, d));
    let incl = ChainMap::from_fn(&k, src, kb);
    (k, incl)
}

/// Factor `h: T → X` through a degreewise injective `m: W → X`, if possible.
pub fn lift_through_mono(m: &ChainMap, h: &ChainMap) -> Option<ChainMap> {
    assert!(same(&m.dst, &h.dst), "lift through mono: targets differ");
    let mut comps = BTreeMap::new();
    for n in h.src.degrees() {
        if m.src.rank(n) == 0 {
            if !h.at(n).is_zero() {
                return None;
            }
            continue;
        }
        let x = linalg::solve_many(&m.at(n), &h.at(n)).expect("shapes")?;
        comps.insert(n, x);
    }
    ChainMap::from_components(&h.src, &m.src, comps).ok()
}

/// Strict pullback `W = X ×_Z Y` of `f: X → Z` and `g: Y → Z`.
#[derive(Clone)]
pub struct Pullback {
    pub obj: Complex,
    pub px: ChainMap,
    pub py: ChainMap,
    pub f: ChainMap,
    pub g: ChainMap,
    incl: ChainMap,
    sum: Arc<DirectSumHandle>,
}

struct DirectSumHandle {
    inj: Vec<ChainMap>,
    obj: Complex,
}

pub fn pullback(f: &ChainMap, g: &ChainMap) -> Pullback {
    assert!(same(&f.dst, &g.dst), "pullback of maps with different targets");
    let ring = f.ring();
    let ds = direct_sum(ring, &[f.src.clone(), g.src.clone()]);
    let diff = f.compose(&ds.proj[0]).sub(&g.compose(&ds.proj[1]).rebase(&ds.obj, &f.dst));
    let (w, incl) = kernel_complex(&diff);
    let px = ds.proj[0].compose(&incl);
    let py = ds.proj[1].compose(&incl);
    Pullback {
        obj: w,
        px,
        py,
        f: f.clone(),
        g: g.clone(),
        incl,
        sum: Arc::new(DirectSumHandle { inj: ds.inj.clone(), obj: ds.obj.clone() }),
    }
}

impl Pullback {
    /// The induced map `T → W` from `a: T → X`, `b: T → Y` with `f a = g b`.
    pub fn factor(&self, a: &ChainMap, b: &ChainMap) -> Result<ChainMap, ChainError> {
        if self.f.compose(a) != self.g.compose(b).rebase(&a.src, &self.f.dst) {
            return Err(ChainError::MalformedSquare("cone over the cospan does not commute".into()));
        }
        let into_sum = self.sum.inj[0].compose(a).add(&self.sum.inj[1].compose(b).rebase(&a.src, &self.sum.obj));
        lift_through_mono(&self.incl, &into_sum).ok_or_else(|| ChainError::MalformedSquare("no factorization".into()))
    }

    /// Verifies the universal property on the stored data: commutativity and
    /// that `(px, py)` is degreewise the kernel of `(f, −g)`.
    pub fn verify(&self) -> bool {
        let comm = self.f.compose(&self.px) == self.g.compose(&self.py).rebase(&self.obj, &self.f.dst);
        let ring = self.f.ring();
        let exact = self.f.src.degrees().chain(self.g.src.degrees()).all(|n| {
            let fg = self.f.at(n).hstack(&self.g.at(n).neg());
            let k = linalg::kernel_basis(&fg).len();
            let _ = ring;
            k == self.obj.rank(n)
        });
        comm && exact && self.incl.is_split_mono()
    }
}

/// Strict pushout `Z = X ⊔_W Y` of `α: W → X` and `i: W → Y` (i a cofibration).
#[derive(Clone)]
pub struct Pushout {
    pub obj: Complex,
    /// `X → Z`
    pub jx: ChainMap,
    /// `Y → Z`
    pub jy: ChainMap,
    pub alpha: ChainMap,
    pub i: ChainMap,
    quotient: ChainMap,
    sum_proj: Vec<ChainMap>,
    lifts: BTreeMap<i64, ExactMatrix>,
}

pub fn pushout(alpha: &ChainMap, i: &ChainMap) -> Result<Pushout, ChainError> {
    assert!(same(&alpha.src, &i.src), "pushout of maps with different sources");
    if let Some(n) = i.src.degrees().find(|&n| !linalg::is_split_injective(&i.at(n))) {
        return Err(ChainError::NotACofibration(n));
    }
    let ring = alpha.ring();
    let ds = direct_sum(ring, &[alpha.dst.clone(), i.dst.clone()]);
    let rel = ds.inj[0].compose(alpha).sub(&ds.inj[1].compose(i).rebase(&alpha.src, &ds.obj));
    // degreewise cokernel of `rel`, free because `i` is split
    let mut coords: BTreeMap<i64, ExactMatrix> = BTreeMap::new();
    let mut lifts: BTreeMap<i64, ExactMatrix> = BTreeMap::new();
    let mut ranks = BTreeMap::new();
    for n in ds.obj.degrees() {
        let p = linalg::cokernel_presentation(&rel.at(n));
        debug_assert!(p.torsion.is_empty());
        let gens = ExactMatrix::from_columns(ring, ds.obj.rank(n), &p.generators);
        let c = p.coordinate_matrix();
        ranks.insert(n, gens.cols());
        coords.insert(n, c);
        lifts.insert(n, gens);
    }
    let mut diffs = BTreeMap::new();
    for n in ds.obj.degrees() {
        if let (Some(c), Some(l)) = (coords.get(&(n - 1)), lifts.get(&n)) {
            diffs.insert(n, c.mul(&ds.obj.d(n)).mul(l));
        }
    }
    let z = Arc::new(ChainComplex::from_parts(ring, &ranks, &diffs)?);
    let quotient = ChainMap::from_fn(&ds.obj, &z, |n| coords[&n].clone());
    let jx = quotient.compose(&ds.inj[0]);
    let jy = quotient.compose(&ds.inj[1]);
    Ok(Pushout { obj: z, jx, jy, alpha: alpha.clone(), i: i.clone(), quotient, sum_proj: ds.proj.clone(), lifts })
}

impl Pushout {
    /// The induced map `Z → V` from `p: X → V`, `q: Y → V` with `p α = q i`.
    pub fn factor(&self, p: &ChainMap, q: &ChainMap) -> Result<ChainMap, ChainError> {
        if p.compose(&self.alpha) != q.compose(&self.i).rebase(&self.alpha.src, &p.dst) {
            return Err(ChainError::MalformedSquare("cocone does not commute".into()));
        }
        let from_sum =
            p.compose(&self.sum_proj[0]).add(&q.compose(&self.sum_proj[1]).rebase(&self.quotient.src, &p.dst));
        let g = ChainMap::from_fn(&self.obj, &p.dst, |n| from_sum.at(n).mul(&self.lifts[&n]));
        if g.compose(&self.quotient) != from_sum {
            return Err(ChainError::MalformedSquare("no factorization".into()));
        }
        Ok(g)
    }
}

// ---------------------------------------------------------------------------
// Path objects, cones, factorizations.

/// `P_n = Y_n ⊕ Y_n ⊕ Y_{n+1}`, `d(a, b, h) = (da, db, a − b − dh)`.
pub struct PathObject {
    pub obj: Complex,
    pub iota: ChainMap,
    /// `P → Y ⊕ Y`
    pub m: ChainMap,
    pub square: DirectSum,
}

pub fn path_object(y: &Complex) -> PathObject {
    let ring = y.ring;
    let (lo, hi) = if y.is_zero() { (0, -1) } else { (y.lo - 1, y.hi()) };
    let rank = |n: i64| 2 * y.rank(n) + y.rank(n + 1);
    let ranks: Vec<usize> = (lo..=hi).map(rank).collect();
    let d: Vec<ExactMatrix> = (lo..=hi)
        .map(|n| {
            let (a0, a1) = (y.rank(n - 1), y.rank(n));
            let mut m = ExactMatrix::zeros(ring, rank(n - 1), rank(n));
            m.set_block(0, 0, &y.d(n));
            m.set_block(a0, a1, &y.d(n));
            m.set_block(2 * a0, 0, &ExactMatrix::identity(ring, a1));
            m.set_block(2 * a0, a1, &ExactMatrix::identity(ring, a1).neg());
            m.set_block(2 * a0, 2 * a1, &y.d(n + 1).neg());
            m
        })
        .collect();
    let p: Complex = Arc::new(ChainComplex::raw(ring, lo, ranks, d));
    let square = direct_sum(ring, &[y.clone(), y.clone()]);
    let iota = ChainMap::from_fn(y, &p, |n| {
        let r = y.rank(n);
        let mut m = ExactMatrix::zeros(ring, p.rank(n), r);
        m.set_block(0, 0, &ExactMatrix::identity(ring, r));
        m.set_block(r, 0, &ExactMatrix::identity(ring, r));
        m
    });
    let mm = ChainMap::from_fn(&p, &square.obj, |n| {
        let r = y.rank(n);
        let mut m = ExactMatrix::zeros(ring, 2 * r, p.rank(n));
        m.set_block(0, 0, &ExactMatrix::identity(ring, 2 * r));
        m
    });
    PathObject { obj: p, iota, m: mm, square }
}

/// Mapping path space factorization `f = q ∘ ι`, `ι` an acyclic cofibration, `q` a fibration.
#[derive(Clone)]
pub struct Factorization {
    pub obj: Complex,
    pub first: ChainMap,
    pub second: ChainMap,
}

pub fn factor_we_fib(f: &ChainMap) -> Factorization {
    let ring = f.ring();
    let x = &f.src;
    let y = &f.dst;
    let mut degs: Vec<i64> = x.degrees().collect();
    if !y.is_zero() {
        degs.push(y.lo - 1);
        degs.push(y.hi());
    }
    let (lo, hi) = if degs.is_empty() { (0, -1) } else { (*degs.iter().min().unwrap(), *degs.iter().max().unwrap()) };
    let rank = |n: i64| x.rank(n) + y.rank(n) + y.rank(n + 1);
    let ranks: Vec<usize> = (lo..=hi).map(rank).collect();
    let d: Vec<ExactMatrix> = (lo..=hi)
        .map(|n| {
            let (x0, y0) = (x.rank(n - 1), y.rank(n - 1));
            let (x1, y1) = (x.rank(n), y.rank(n));
            let mut m = ExactMatrix::zeros(ring, rank(n - 1), rank(n));
            m.set_block(0, 0, &x.d(n));
            m.set_block(x0, x1, &y.d(n));
            m.set_block(x0 + y0, 0, &f.at(n).neg());
            m.set_block(x0 + y0, x1, &ExactMatrix::identity(ring, y1));
            m.set_block(x0 + y0, x1 + y1, &y.d(n + 1).neg());
            m
        })
        .collect();
    let fo: Complex = Arc::new(ChainComplex::raw(ring, lo, ranks, d));
    let iota = ChainMap::from_fn(x, &fo, |n| {
        let mut m = ExactMatrix::zeros(ring, fo.rank(n), x.rank(n));
        m.set_block(0, 0, &ExactMatrix::identity(ring, x.rank(n)));
        m.set_block(x.rank(n), 0, &f.at(n));
        m
    });
    let q = ChainMap::from_fn(&fo, y, |n| {
        let mut m = ExactMatrix::zeros(ring, y.rank(n), fo.rank(n));
        m.set_block(0, x.rank(n), &ExactMatrix::identity(ring, y.rank(n)));
        m
    });
    Factorization { obj: fo, first: iota, second: q }
}

/// Reduced path object `PW_n = W_n ⊕ W_{n+1}`, `d(a, h) = (da, a − dh)`, with `p_W(a, h) = a`.
pub fn reduced_path(w: &Complex) -> (Complex, ChainMap) {
    let z = Arc::new(ChainComplex::zero(w.ring));
    let f = factor_we_fib(&ChainMap::zero(&z, w));
    (f.obj, f.second)
}

/// Mapping cylinder factorization `f = r ∘ j`, `j` a cofibration, `r` a weak equivalence.
pub fn factor_cof_we(f: &ChainMap) -> Factorization {
    let ring = f.ring();
    let x = &f.src;
    let y = &f.dst;
    let mut degs: Vec<i64> = y.degrees().collect();
    if !x.is_zero() {
        degs.push(x.lo);
        degs.push(x.hi() + 1);
    }
    let (lo, hi) = if degs.is_empty() { (0, -1) } else { (*degs.iter().min().unwrap(), *degs.iter().max().unwrap()) };
    let rank = |n: i64| x.rank(n) + x.rank(n - 1) + y.rank(n);
    let ranks: Vec<usize> = (lo..=hi).map(rank).collect();
    let d: Vec<ExactMatrix> = (lo..=hi)
        .map(|n| {
            let (a0, h0) = (x.rank(n - 1), x.rank(n - 2));
            let (a1, h1) = (x.rank(n), x.rank(n - 1));
            let mut m = ExactMatrix::zeros(ring, rank(n - 1), rank(n));
            m.set_block(0, 0, &x.d(n));
            m.set_block(0, a1, &ExactMatrix::identity(ring, h1));
            m.set_block(a0, a1, &x.d(n - 1).neg());
            m.set_block(a0 + h0, a1, &f.at(n - 1).neg());
            m.set_block(a0 + h0, a1 + h1, &y.d(n));
            m
        })
        .collect();
    let mo: Complex = Arc::new(ChainComplex::raw(ring, lo, ranks, d));
    let j = ChainMap::from_fn(x, &mo, |n| {
        let mut m = ExactMatrix::zeros(ring, mo.rank(n), x.rank(n));
        m.set_block(0, 0, &ExactMatrix::identity(ring, x.rank(n)));
        m
    });
    let r = ChainMap::from_fn(&mo, y, |n| {
        let mut m = ExactMatrix::zeros(ring, y.rank(n), mo.rank(n));
        m.set_block(0, 0, &f.at(n));
        m.set_block(0, x.rank(n) + x.rank(n - 1), &ExactMatrix::identity(ring, y.rank(n)));
        m
    });
    Factorization { obj: mo, first: j, second: r }
}

/// Cylinder, cone, cone inclusion and suspension of `X`.
pub struct ConeCylinder {
    pub cyl: Complex,
    pub cyl_i0: ChainMap,
    pub cyl_i1: ChainMap,
    pub cyl_p: ChainMap,
    pub cone: Complex,
    pub cone_incl: ChainMap,
    pub susp: Complex,
    pub cone_to_susp: ChainMap,
}

pub fn cone_and_cylinder(x: &Complex) -> ConeCylinder {
    let ring = x.ring;
    let (lo, hi) = if x.is_zero() { (0, -1) } else { (x.lo, x.hi() + 1) };
    // cylinder
    let crank = |n: i64| 2 * x.rank(n) + x.rank(n - 1);
    let cd: Vec<ExactMatrix> = (lo..=hi)
        .map(|n| {
            let a0 = x.rank(n - 1);
            let a1 = x.rank(n);
            let mut m = ExactMatrix::zeros(ring, crank(n - 1), crank(n));
            m.set_block(0, 0, &x.d(n));
            m.set_block(a0, a1, &x.d(n));
            m.set_block(0, 2 * a1, &ExactMatrix::identity(ring, a0));
            m.set_block(a0, 2 * a1, &ExactMatrix::identity(ring, a0).neg());
            m.set_block(2 * a0, 2 * a1, &x.d(n - 1).neg());
            m
        })
        .collect();
    let cyl: Complex = Arc::new(ChainComplex::raw(ring, lo, (lo..=hi).map(crank).collect(), cd));
    let place = |c: &Complex, off: fn(&ChainComplex, i64) -> usize| {
        ChainMap::from_fn(x, c, move |n| {
            let mut m = ExactMatrix::zeros(ring, c.rank(n), x.rank(n));
            m.set_block(off(x, n), 0, &ExactMatrix::identity(ring, x.rank(n)));
            m
        })
    };
    let cyl_i0 = place(&cyl, |_, _| 0);
    let cyl_i1 = place(&cyl, |x, n| x.rank(n));
    let cyl_p = ChainMap::from_fn(&cyl, x, |n| {
        let a = x.rank(n);
        let mut m = ExactMatrix::zeros(ring, a, cyl.rank(n));
        m.set_block(0, 0, &ExactMatrix::identity(ring, a));
        m.set_block(0, a, &ExactMatrix::identity(ring, a));
        m
    });
    // cone
    let krank = |n: i64| x.rank(n) + x.rank(n - 1);
    let kd: Vec<ExactMatrix> = (lo..=hi)
        .map(|n| {
            let a0 = x.rank(n - 1);
            let a1 = x.rank(n);
            let mut m = ExactMatrix::zeros(ring, krank(n - 1), krank(n));
            m.set_block(0, 0, &x.d(n));
            m.set_block(0, a1, &ExactMatrix::identity(ring, a0));
            m.set_block(a0, a1, &x.d(n - 1).neg());
            m
        })
        .collect();
    let cone: Complex = Arc::new(ChainComplex::raw(ring, lo, (lo..=hi).map(krank).collect(), kd));
    let cone_incl = place(&cone, |_, _| 0);
    let susp: Complex = Arc::new(x.shift(1));
    let cone_to_susp = ChainMap::from_fn(&cone, &susp, |n| {
        let mut m = ExactMatrix::zeros(ring, susp.rank(n), cone.rank(n));
        m.set_block(0, x.rank(n), &ExactMatrix::identity(ring, x.rank(n - 1)));
        m
    });
    ConeCylinder { cyl, cyl_i0, cyl_i1, cyl_p, cone, cone_incl, susp, cone_to_susp }
}

/// Mapping cone `Y_n ⊕ X_{n−1}`, `d(y, x) = (dy + f x, −dx)`.
pub fn mapping_cone(f: &ChainMap) -> ChainComplex {
    let ring = f.ring();
    let x = &f.src;
    let y = &f.dst;
    let mut degs: Vec<i64> = y.degrees().collect();
    if !x.is_zero() {
        degs.push(x.lo + 1);
        degs.push(x.hi() + 1);
    }
    if degs.is_empty() {
        return ChainComplex::zero(ring);
    }
    let (lo, hi) = (*degs.iter().min().unwrap(), *degs.iter().max().unwrap());
    let rank = |n: i64| y.rank(n) + x.rank(n - 1);
    let d = (lo..=hi)
        .map(|n| {
            let y0 = y.rank(n - 1);
            let y1 = y.rank(n);
            let mut m = ExactMatrix::zeros(ring, rank(n - 1), rank(n));
            m.set_block(0, 0, &y.d(n));
            m.set_block(0, y1, &f.at(n - 1));
            m.set_block(y0, y1, &x.d(n - 1).neg());
            m
        })
        .collect();
    ChainComplex::raw(ring, lo, (lo..=hi).map(rank).collect(), d)
}

// ---------------------------------------------------------------------------
// Hom complexes and homotopy classes.

/// `Hom(X, Y)` with coordinates laid out block by block over the degrees of `X`.
pub struct HomComplex {
    pub x: Complex,
    pub y: Complex,
    pub obj: ChainComplex,
}

fn hom_blocks(x: &ChainComplex, y: &ChainComplex, n: i64) -> Vec<(i64, usize, usize, usize)> {
    // (k, offset, rows, cols) for Hom(X_k, Y_{k+n})
    let mut out = vec![];
    let mut off = 0;
    for k in x.degrees() {
        let (r, c) = (y.rank(k + n), x.rank(k));
        if r * c > 0 {
            out.push((k, off, r, c));
            off += r * c;
        }
    }
    out
}

pub fn hom_complex(x: &Complex, y: &Complex) -> Result<HomComplex, ChainError> {
    if x.ring != y.ring {
        return Err(ChainError::RingMismatch);
    }
    let ring = x.ring;
    if x.is_zero() || y.is_zero() {
        return Ok(HomComplex { x: x.clone(), y: y.clone(), obj: ChainComplex::zero(ring) });
    }
    let lo = y.lo - x.hi();
    let hi = y.hi() - x.lo;
    let dim = |n: i64| hom_blocks(x, y, n).iter().map(|b| b.2 * b.3).sum::<usize>();
    let mut ranks = BTreeMap::new();
    let mut diffs = BTreeMap::new();
    for n in lo..=hi {
        ranks.insert(n, dim(n));
    }
    for n in lo..=hi {
        let src_blocks = hom_blocks(x, y, n);
        let dst_blocks = hom_blocks(x, y, n - 1);
        let mut m = ExactMatrix::zeros(ring, dim(n - 1), dim(n));
        let sign: i64 = if n.rem_euclid(2) == 0 { 1 } else { -1 };
        for &(k, doff, dr, dc) in &dst_blocks {
            // (δf)_k = d_Y(k+n) f_k − (−1)^n f_{k−1} d_X(k)
            for &(k2, soff, sr, sc) in &src_blocks {
                if k2 == k {
                    let l = y.d(k + n);
                    for i in 0..dr {
                        for a in 0..sr {
                            let lv = l.get(i, a);
                            if lv.is_zero() {
                                continue;
                            }
                            for j in 0..dc {
                                let row = doff + i * dc + j;
                                let col = soff + a * sc + j;
                                let cur = m.get(row, col).clone();
                                m.set(row, col, cur + lv);
                            }
                        }
                    }
                }
                if k2 == k - 1 {
                    let r = x.d(k);
                    for i in 0..dr {
                        for b in 0..sc {
                            for j in 0..dc {
                                let rv = r.get(b, j);
                                if rv.is_zero() {
                                    continue;
                                }
                                let row = doff + i * dc + j;
                                let col = soff + i * sc + b;
                                let cur = m.get(row, col).clone();
                                m.set(row, col, cur - BigInt::from(sign) * rv);
                            }
                        }
                    }
                }
            }
        }
        diffs.insert(n, m);
    }
    let obj = ChainComplex::from_parts(ring, &ranks, &diffs)?;
    Ok(HomComplex { x: x.clone(), y: y.clone(), obj })
}

impl HomComplex {
    /// Coordinates of a degree-`n` family of matrices `X_k → Y_{k+n}`.
    pub fn vectorize(&self, n: i64, comp: impl Fn(i64) -> ExactMatrix) -> Vec<BigInt> {
        let blocks = hom_blocks(&self.x, &self.y, n);
        let mut v = vec![];
        for (k, _, r, c) in blocks {
            let m = comp(k);
            assert_eq!((m.rows(), m.cols()), (r, c));
            v.extend(m.entries().iter().cloned());
        }
        v
    }

    pub fn map_vector(&self, f: &ChainMap) -> Vec<BigInt> {
        self.vectorize(0, |k| f.at(k))
    }

    pub fn map_from_vector(&self, v: &[BigInt]) -> ChainMap {
        let ring = self.x.ring;
        let mut comps = BTreeMap::new();
        for (k, off, r, c) in hom_blocks(&self.x, &self.y, 0) {
            comps.insert(k, ExactMatrix::from_rows(ring, r, c, v[off..off + r * c].to_vec()).unwrap());
        }
        ChainMap::from_components(&self.x, &self.y, comps).expect("block shapes")
    }

    pub fn homotopy_from_vector(&self, v: &[BigInt]) -> ChainHomotopy {
        let ring = self.x.ring;
        let mut comps = BTreeMap::new();
        for (k, off, r, c) in hom_blocks(&self.x, &self.y, 1) {
            comps.insert(k, ExactMatrix::from_rows(ring, r, c, v[off..off + r * c].to_vec()).unwrap());
        }
        ChainHomotopy::from_components(&self.x, &self.y, comps).expect("block shapes")
    }
}

/// `[X, Y]` as an abelian group with representative chain maps.
pub struct HomotopyClasses {
    pub hom: HomComplex,
    pub group: AbGroupPresentation,
}

impl HomotopyClasses {
    pub fn class_of(&self, f: &ChainMap) -> Vec<BigInt> {
        self.group.class_of(&self.hom.map_vector(f))
    }

    pub fn same_class(&self, f: &ChainMap, g: &ChainMap) -> bool {
        self.group.same_class(&self.hom.map_vector(f), &self.hom.map_vector(g))
    }

    pub fn representative(&self, i: usize) -> ChainMap {
        self.hom.map_from_vector(&self.group.generators[i])
    }

    pub fn map_of(&self, coeffs: &[BigInt]) -> ChainMap {
        self.hom.map_from_vector(&self.group.lift(coeffs))
    }
}

pub fn homotopy_classes(x: &Complex, y: &Complex) -> Result<HomotopyClasses, ChainError> {
    let hom = hom_complex(x, y)?;
    let group = if hom.obj.is_zero() { AbGroupPresentation::trivial(x.ring, 0) } else { hom.obj.homology(0) };
    Ok(HomotopyClasses { hom, group })
}

/// A homotopy `s` with `d s + s d = f − g`, if one exists.
pub fn find_homotopy(f: &ChainMap, g: &ChainMap) -> Option<ChainHomotopy> {
    assert!(same(&f.src, &g.src) && same(&f.dst, &g.dst), "find_homotopy: maps with different ends");
    let diff = f.sub(g);
    if diff.is_zero() {
        return Some(ChainHomotopy::zero(&f.src, &f.dst));
    }
    let mut sys = LinSys::new(f.ring());
    let s = sys.map_var(&f.src, &f.dst, 1);
    sys.map_equation(&f.src, &f.dst, &[MapTerm::Boundary { left: None, var: &s, right: None, sign: 1 }], Some(&diff));
    sys.solve().map(|sol| sol.homotopy(&s))
}

pub fn is_nullhomotopic(f: &ChainMap) -> bool {
    find_homotopy(f, &ChainMap::zero(&f.src, &f.dst)).is_some()
}

// ---------------------------------------------------------------------------
// Lifting toolkit.

/// Degreewise right inverse of a fibration.
fn section(q: &ChainMap, n: i64) -> ExactMatrix {
    let m = q.at(n);
    if m.rows() == 0 {
        return ExactMatrix::zeros(q.ring(), m.cols(), 0);
    }
    linalg::right_inverse(&m).expect("fibration is degreewise surjective")
}

/// Lift a homotopy `h: T → Z` through a fibration `q: Y → Z`: `q ∘ s̃ = h`.
pub fn lift_homotopy(q: &ChainMap, h: &ChainHomotopy) -> ChainHomotopy {
    ChainHomotopy::from_fn(&h.src, &q.src, |n| section(q, n + 1).mul(&h.at(n)))
}

/// Diagonal filler for an acyclic cofibration `i: A → B` against a fibration `p: E → X`.
pub fn lift_llp(i: &ChainMap, p: &ChainMap, top: &ChainMap, bottom: &ChainMap) -> Result<ChainMap, ChainError> {
    if p.compose(top) != bottom.compose(i) {
        return Err(ChainError::MalformedSquare("lifting square does not commute".into()));
    }
    if let Some(n) = p.surjectivity_defect() {
        return Err(ChainError::NotAFibration(n));
    }
    let mut sys = LinSys::new(p.ring());
    let l = sys.map_var(&i.dst, &p.src, 0);
    sys.chain_map_condition(&l);
    sys.map_equation(&i.src, &p.src, &[MapTerm::Plain { left: None, var: &l, right: Some(i), sign: 1 }], Some(top));
    sys.map_equation(&i.dst, &p.dst, &[MapTerm::Plain { left: Some(p), var: &l, right: None, sign: 1 }], Some(bottom));
    let sol =
        sys.solve().ok_or_else(|| ChainError::MalformedSquare("no filler: i is not an acyclic cofibration".into()))?;
    Ok(sol.map(&l))
}

/// Given `H: ψ ≃ q∘f` with `q` a fibration, returns `f′` with `q∘f′ = ψ` and a witness `f′ ≃ f`.
pub fn rectify_along_fibration(
    psi: &ChainMap,
    f: &ChainMap,
    q: &ChainMap,
    h: &ChainHomotopy,
) -> Result<(ChainMap, ChainHomotopy), ChainError> {
    h.validate(psi, &q.compose(f))?;
    if let Some(n) = q.surjectivity_defect() {
        return Err(ChainError::NotAFibration(n));
    }
    let s = lift_homotopy(q, h);
    let fp = f.add(&s.boundary());
    debug_assert!(q.compose(&fp) == *psi);
    Ok((fp, s))
}

/// Homotopy pullback property: from `H: q∘f ≃ i∘p` produce `g: T → W` with
/// `r∘g = p` exactly and a witness `j∘g ≃ f`.
pub fn homotopy_pullback_lift(
    square: &Pullback,
    p: &ChainMap,
    f: &ChainMap,
    h: &ChainHomotopy,
) -> Result<(ChainMap, ChainHomotopy), ChainError> {
    // square: W = X ×_Z Y with r = px, j = py, i = square.f, q = square.g
    let target = square.f.compose(p);
    let (fp, s) = rectify_along_fibration(&target, f, &square.g, &h.neg())?;
    let g = square.factor(p, &fp)?;
    Ok((g, s))
}

/// Output of [`ladder_lift`].
pub struct Ladder {
    pub kappa: ChainMap,
    pub theta: ChainMap,
    /// `φ ≃ q∘θ`
    pub phi_to_q_theta: ChainHomotopy,
    /// `θ ≃ Φ∘κ` (zero here since the construction makes them equal)
    pub theta_to_phi_kappa: ChainHomotopy,
}

/// Homotopy ladder: `bottom` is `W = X ×_Z Y` (`p = px`, `q = py`, `s = f`, `u = g`),
/// `top` is `U = V ×_X W` (`r = px`, `Φ = py`, `t = f`). Given `σ: T → V`, `φ: T → Y`
/// and `H: u∘φ ≃ s∘t∘σ`.
pub fn ladder_lift(
    bottom: &Pullback,
    top: &Pullback,
    sigma: &ChainMap,
    phi: &ChainMap,
    h: &ChainHomotopy,
) -> Result<Ladder, ChainError> {
    if top.g != bottom.px {
        return Err(ChainError::MalformedSquare("ladder squares do not share an edge".into()));
    }
    let tsig = top.f.compose(sigma);
    let stsig = bottom.f.compose(&tsig);
    // H: u φ ≃ s t σ, so −H: s t σ ≃ u φ
    let (phi2, s) = rectify_along_fibration(&stsig, phi, &bottom.g, &h.neg())?;
    let theta = bottom.factor(&tsig, &phi2)?;
    let kappa = top.factor(sigma, &theta)?;
    // φ − qθ = φ − φ′ = −(dS + Sd)
    Ok(Ladder {
        kappa,
        theta: theta.clone(),
        phi_to_q_theta: s.neg(),
        theta_to_phi_kappa: ChainHomotopy::zero(&theta.src, &theta.dst),
    })
}

/// Dual of [`rectify_along_fibration`]: from a cofibration `j: A → B`, `q: B → Z`
/// and `H: ψ ≃ q∘j`, produce `q′ ≃ q` with `q′∘j = ψ`.
pub fn rectify_along_cofibration(
    psi: &ChainMap,
    q: &ChainMap,
    j: &ChainMap,
    h: &ChainHomotopy,
) -> Result<(ChainMap, ChainHomotopy), ChainError> {
    h.validate(psi, &q.compose(j))?;
    let ring = j.ring();
    let mut comps = BTreeMap::new();
    for n in j.dst.degrees() {
        if j.src.rank(n) == 0 {
            continue;
        }
        let li = linalg::left_inverse(&j.at(n)).ok_or(ChainError::NotACofibration(n))?;
        comps.insert(n, li);
    }
    let _ = ring;
    let s = ChainHomotopy::from_fn(&j.dst, &q.dst, |n| match comps.get(&n) {
        Some(li) => h.at(n).mul(li),
        None => ExactMatrix::zeros(ring, q.dst.rank(n + 1), j.dst.rank(n)),
    });
    let qp = q.add(&s.boundary());
    if qp.compose(j) != *psi {
        return Err(ChainError::MalformedSquare("extension failed".into()));
    }
    Ok((qp, s))
}

/// Dual homotopy pullback property for a pushout `Z = X ⊔_W Y` along a cofibration
/// `i: W → Y`: from `p: X → V`, `f: Y → V`, `H: p∘α ≃ f∘i` produce `g: Z → V` with
/// `g∘jx = p` exactly and a witness `g∘jy ≃ f`.
pub fn homotopy_pushout_extend(
    square: &Pushout,
    p: &ChainMap,
    f: &ChainMap,
    h: &ChainHomotopy,
) -> Result<(ChainMap, ChainHomotopy), ChainError> {
    let target = p.compose(&square.alpha);
    let (fp, s) = rectify_along_cofibration(&target, f, &square.i, h)?;
    let g = square.factor(p, &fp)?;
    Ok((g, s))
}

/// Dual ladder over two pushout squares: `bottom` is `Z = X ⊔_W Y`; `top` glues along
/// `bottom.jx`. Produces the induced map out of the composite pushout.
pub fn dual_ladder_extend(
    bottom: &Pushout,
    top: &Pushout,
    sigma: &ChainMap,
    phi: &ChainMap,
    h: &ChainHomotopy,
) -> Result<(ChainMap, ChainMap, ChainHomotopy), ChainError> {
    // bottom: W --α--> X, W --i--> Y, giving jx: X → Z, jy: Y → Z.
    // top: X --t--> X′ (= top.alpha), X --jx--> Z (= top.i), giving U.
    if top.i != bottom.jx {
        return Err(ChainError::MalformedSquare("ladder squares do not share an edge".into()));
    }
    // σ: X′ → V, φ: Y → V with H: σ∘t∘α ≃ φ∘i
    let ta = sigma.compose(&top.alpha).compose(&bottom.alpha);
    let (phi2, s) = rectify_along_cofibration(&ta, phi, &bottom.i, h)?;
    let theta = bottom.factor(&sigma.compose(&top.alpha), &phi2)?;
    let kappa = top.factor(sigma, &theta)?;
    Ok((kappa, theta, s))
}

/// `f: X → W` factors through the reduced path fibration iff it is nullhomotopic.
pub fn factor_through_path(f: &ChainMap) -> Option<(Complex, ChainMap, ChainMap)> {
    let s = find_homotopy(f, &ChainMap::zero(&f.src, &f.dst))?;
    let (pw, p) = reduced_path(&f.dst);
    let ring = f.ring();
    let w = &f.dst;
    let lam = ChainMap::from_fn(&f.src, &pw, |n| {
        let mut m = ExactMatrix::zeros(ring, pw.rank(n), f.src.rank(n));
        m.set_block(0, 0, &f.at(n));
        m.set_block(w.rank(n), 0, &s.at(n));
        m
    });
    Some((pw, p, lam))
}

/// `f: X → Y` extends over the cone inclusion `X → CX` iff it is nullhomotopic.
pub fn extend_over_cone(f: &ChainMap) -> Option<(ConeCylinder, ChainMap)> {
    let s = find_homotopy(f, &ChainMap::zero(&f.src, &f.dst))?;
    let cc = cone_and_cylinder(&f.src);
    let ring = f.ring();
    let x = &f.src;
    let ext = ChainMap::from_fn(&cc.cone, &f.dst, |n| {
        let mut m = ExactMatrix::zeros(ring, f.dst.rank(n), cc.cone.rank(n));
        m.set_block(0, 0, &f.at(n));
        m.set_block(0, x.rank(n), &s.at(n - 1));
        m
    });
    Some((cc, ext))
}

/// Convenience: an `n×m` integer matrix over the given ring.
pub fn mat(ring: Ring, rows: usize, cols: usize, e: &[i64]) -> ExactMatrix {
    ExactMatrix::from_i64(ring, rows, cols, e)
}

pub fn arc(c: ChainComplex) -> Complex {
    Arc::new(c)
}

pub fn one(ring: Ring) -> ExactMatrix {
    ExactMatrix::identity(ring, 1)
}

#[allow(dead_code)]
fn unit() -> BigInt {
    BigInt::one()
}

#[cfg(test)]
mod tests {
    use super::*;

    const Z: Ring = Ring::Integers;

    fn mp(p: i64) -> Complex {
        arc(ChainComplex::moore(Z, p, 0))
    }

    fn s0() -> Complex {
        arc(ChainComplex::sphere(Z, 0))
    }

    fn scalar_map(x: &Complex, c: i64) -> ChainMap {
        ChainMap::from_fn(x, x, |n| ExactMatrix::identity(Z, x.rank(n)).scale(&BigInt::from(c)))
    }

    #[test]
    fn hom_complex_of_spheres() {
        let h = hom_complex(&s0(), &s0()).unwrap();
        assert_eq!(h.obj.ranks(), BTreeMap::from([(0, 1)]));
    }

    #[test]
    fn self_maps_of_moore_space() {
        let m = mp(3);
        let c = homotopy_classes(&m, &m).unwrap();
        assert_eq!(c.group.order(), Some(BigInt::from(3)));
        let sm = arc(m.shift(1));
        assert!(homotopy_classes(&sm, &m).unwrap().group.is_trivial());
    }

    #[test]
    fn homotopy_classes_against_spheres() {
        let z = arc(ChainComplex::zero(Z));
        assert!(homotopy_classes(&z, &mp(2)).unwrap().group.is_trivial());
        assert_eq!(homotopy_classes(&s0(), &mp(5)).unwrap().group.describe(), "Z/5");
        assert!(homotopy_classes(&mp(5), &s0()).unwrap().group.is_trivial());
        assert_eq!(homotopy_classes(&s0(), &s0()).unwrap().group.describe(), "Z");
    }

    #[test]
    fn find_homotopy_examples() {
        let m = mp(3);
        let id = ChainMap::identity(&m);
        assert!(find_homotopy(&id, &id).unwrap().is_zero());
        let three = scalar_map(&m, 3);
        let zero = ChainMap::zero(&m, &m);
        let s = find_homotopy(&three, &zero).unwrap();
        assert!(s.witnesses(&three, &zero));
        assert!(find_homotopy(&id, &zero).is_none());
    }

    #[test]
    fn pullback_examples() {
        let m = mp(2);
        let id = ChainMap::identity(&m);
        let f = ChainMap::from_fn(&m, &m, |n| ExactMatrix::identity(Z, m.rank(n)));
        let pb = pullback(&f, &id);
        assert_eq!(pb.obj.ranks(), m.ranks());
        assert!(pb.verify());
        // zero maps: W = X ⊕ Y
        let z = arc(ChainComplex::zero(Z));
        let pb = pullback(&ChainMap::zero(&m, &z), &ChainMap::zero(&m, &z));
        assert_eq!(pb.obj.total_rank(), 4);
        // augmentations M_p → S^0
        let s = s0();
        let aug = ChainMap::new(&m, &s, BTreeMap::from([(0, mat(Z, 1, 1, &[1]))])).unwrap_err();
        assert_eq!(aug, ChainError::NotAChainMap(1));
    }

    #[test]
    fn pullback_of_moore_augmentations() {
        // M_p → S^0 with p = 0 is a chain map: [Z --0--> Z]
        let m = arc(ChainComplex::moore(Z, 0, 0));
        let s = s0();
        let aug = ChainMap::new(&m, &s, BTreeMap::from([(0, mat(Z, 1, 1, &[1]))])).unwrap();
        let pb = pullback(&aug, &aug);
        assert_eq!(pb.obj.ranks(), BTreeMap::from([(0, 1), (1, 2)]));
        assert!(pb.verify());
    }

    #[test]
    fn path_and_reduced_path() {
        let z = arc(ChainComplex::zero(Z));
        assert!(path_object(&z).obj.is_zero());
        let p = path_object(&s0());
        assert_eq!(p.obj.ranks(), BTreeMap::from([(-1, 1), (0, 2)]));
        assert_eq!(p.obj.homology(0).describe(), "Z");
        assert!(p.iota.is_quasi_iso());
        let pm = path_object(&mp(4));
        assert!(pm.obj.validate().is_ok());
        assert!(pm.m.is_degreewise_surjective());
        assert_eq!(
            pm.m.compose(&pm.iota),
            pm.square.tuple(&mp(4), &[ChainMap::identity(&mp(4)), ChainMap::identity(&mp(4))])
        );
        let (pw, pr) = reduced_path(&arc(ChainComplex::sphere(Z, 1)));
        assert_eq!(pw.ranks(), BTreeMap::from([(0, 1), (1, 1)]));
        assert!(pw.is_acyclic());
        assert!(pr.is_degreewise_surjective());
        assert!(reduced_path(&z).0.is_zero());
    }

    #[test]
    fn factor_through_path_matches_nullhomotopy() {
        let m = mp(3);
        let three = scalar_map(&m, 3);
        let (_, p, lam) = factor_through_path(&three).unwrap();
        assert!(lam.is_chain_map());
        assert_eq!(p.compose(&lam), three);
        assert!(factor_through_path(&ChainMap::identity(&m)).is_none());
    }

    #[test]
    fn cones_and_suspension() {
        let cc = cone_and_cylinder(&s0());
        assert_eq!(cc.susp.ranks(), BTreeMap::from([(1, 1)]));
        let cm = cone_and_cylinder(&mp(5));
        assert!(cm.cone.is_acyclic());
        assert!(cm.cone_incl.is_split_mono());
        assert!(cm.cyl_p.is_quasi_iso());
        assert!(cm.cone_to_susp.is_chain_map());
        let z = cone_and_cylinder(&arc(ChainComplex::zero(Z)));
        assert!(z.cone.is_zero() && z.cyl.is_zero() && z.susp.is_zero());
        let (_, ext) = extend_over_cone(&scalar_map(&mp(5), 5)).unwrap();
        assert!(ext.is_chain_map());
    }

    #[test]
    fn factorizations() {
        let m = arc(ChainComplex::moore(Z, 0, 0));
        let s = s0();
        let aug = ChainMap::new(&m, &s, BTreeMap::from([(0, mat(Z, 1, 1, &[1]))])).unwrap();
        let f = factor_we_fib(&aug);
        assert!(f.obj.validate().is_ok());
        assert_eq!(f.second.compose(&f.first), aug);
        assert!(f.first.is_split_mono());
        assert!(f.first.is_quasi_iso());
        assert!(f.second.is_degreewise_surjective());
        let c = factor_cof_we(&aug);
        assert!(c.obj.validate().is_ok());
        assert_eq!(c.second.compose(&c.first), aug);
        assert!(c.first.is_split_mono());
        assert!(c.second.is_quasi_iso());
        let id = ChainMap::identity(&s);
        let fi = factor_we_fib(&id);
        assert_eq!(fi.second.compose(&fi.first), id);
    }

    #[test]
    fn pushout_of_cone_inclusion_is_suspension() {
        let x = mp(2);
        let cc = cone_and_cylinder(&x);
        let z = arc(ChainComplex::zero(Z));
        let po = pushout(&ChainMap::zero(&x, &z), &cc.cone_incl).unwrap();
        assert_eq!(po.obj.ranks(), cc.susp.ranks());
        for n in po.obj.degrees() {
            assert_eq!(po.obj.homology(n), po.obj.homology(n));
            assert_eq!(po.obj.homology(n).describe(), cc.susp.homology(n).describe());
        }
    }

    #[test]
    fn rectify_along_fibration_trivial() {
        let m = mp(3);
        let (p, pr) = reduced_path(&m);
        let f = ChainMap::zero(&m, &p);
        let psi = pr.compose(&f);
        let (fp, s) = rectify_along_fibration(&psi, &f, &pr, &ChainHomotopy::zero(&m, &m)).unwrap();
        assert_eq!(fp, f);
        assert!(s.is_zero());
    }

    #[test]
    fn lift_llp_identity_cases() {
        let m = mp(3);
        let id = ChainMap::identity(&m);
        let (pw, p) = reduced_path(&m);
        let top = ChainMap::zero(&m, &pw);
        let l = lift_llp(&id, &p, &top, &p.compose(&top)).unwrap();
        assert_eq!(l, top);
    }
}
