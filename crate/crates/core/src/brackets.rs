//! Toda brackets, Massey products and their indeterminacy.
//!
//! Chain-level conventions: a DGA is stored cohomologically and viewed as the
//! homological complex `A_n = A^{−n}`; `K_i = Σ^i A`, so chain maps `S⁰ → K_i`
//! are the `i`-cocycles and homotopies between them are `(i−1)`-cochains.
//! `Ω′Y = Σ^{−1}Y`, hence `[Y, Ω′Z] = [Σ′Y, Z]`.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use num_bigint::BigInt;
use num_traits::{One, Zero};
use serde_json::{json, Value};

use crate::chain::{
    direct_sum, factor_cof_we, find_homotopy, homotopy_classes, path_object, pullback, ChainComplex, ChainError,
    ChainHomotopy, ChainMap, Complex, HomotopyClasses, LinSys, MapTerm, Pullback,
};
use crate::index_cat::{massey_shape, toda_chain, Mor, WeakLattice};
use crate::linalg::{self, AbGroupPresentation, ExactMatrix, Ring};
use crate::rectifier::{
    inner_until, rectify_below, total_operation, HoDiagram, InnerState, ObstructionReport, Outcome, Progress,
    RectifyError, RectifyOptions, StageRecord, StrictTruncation, Verdict,
};
use crate::separation::{fully_reduced_targets, separate_total, LoopCheck, SeparatedOperation};

#[derive(Debug, thiserror::Error)]
pub enum BracketError {
    #[error("malformed algebra: {0}")]
    Algebra(String),
    #[error("{0} is not nullhomotopic")]
    NotNull(String),
    #[error("precondition: {0}")]
    Precondition(String),
    #[error("cross-check failed: {0}")]
    Mismatch(String),
    #[error(transparent)]
    Rectify(#[from] RectifyError),
    #[error(transparent)]
    Chain(#[from] ChainError),
}

type Result<T> = std::result::Result<T, BracketError>;

fn sign(odd: bool) -> BigInt {
    if odd {
        BigInt::from(-1)
    } else {
        BigInt::one()
    }
}

// ---------------------------------------------------------------------------
// Differential graded algebras.

/// Homogeneous element in the basis of its degree.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Cochain {
    pub deg: i64,
    pub coeffs: Vec<BigInt>,
}

impl Cochain {
    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_zero())
    }
}

/// Finite-dimensional DGA on a basis; `d` raises degree by one.
#[derive(Clone, Debug)]
pub struct Dga {
    ring: Ring,
    names: Vec<String>,
    degrees: Vec<i64>,
    unit: usize,
    diff: Vec<Vec<(usize, BigInt)>>,
    mult: BTreeMap<(usize, usize), Vec<(usize, BigInt)>>,
    blocks: BTreeMap<i64, Vec<usize>>,
    pos: Vec<usize>,
    complex: Complex,
}

impl Dga {
    /// Validates `d² = 0`, Leibniz `d(xy) = (dx)y + (−1)^{|x|} x(dy)`, associativity and the unit.
    pub fn new(
        ring: Ring,
        names: Vec<String>,
        degrees: Vec<i64>,
        unit: usize,
        diff: Vec<Vec<(usize, BigInt)>>,
        mult: BTreeMap<(usize, usize), Vec<(usize, BigInt)>>,
    ) -> Result<Self> {
        let n = names.len();
        if degrees.len() != n || diff.len() != n || unit >= n {
            return Err(BracketError::Algebra("basis, degrees and differential disagree in length".into()));
        }
        if degrees[unit] != 0 {
            return Err(BracketError::Algebra("unit is not in degree 0".into()));
        }
        let mut blocks: BTreeMap<i64, Vec<usize>> = BTreeMap::new();
        let mut pos = vec![0; n];
        for (i, d) in degrees.iter().enumerate() {
            let b = blocks.entry(*d).or_default();
            pos[i] = b.len();
            b.push(i);
        }
        for (i, terms) in diff.iter().enumerate() {
            if let Some((j, _)) = terms.iter().find(|(j, _)| *j >= n || degrees[*j] != degrees[i] + 1) {
                return Err(BracketError::Algebra(format!("d({}) has a term `{j}` of the wrong degree", names[i])));
            }
        }
        for ((i, j), terms) in &mult {
            if *i >= n || *j >= n || terms.iter().any(|(k, _)| *k >= n || degrees[*k] != degrees[*i] + degrees[*j]) {
                return Err(BracketError::Algebra(format!("product table entry ({i}, {j}) is not additive in degree")));
            }
        }
        // homological degree m ↔ cohomological −m
        let ranks: BTreeMap<i64, usize> = blocks.iter().map(|(c, b)| (-c, b.len())).collect();
        let mut diffs: BTreeMap<i64, ExactMatrix> = BTreeMap::new();
        for (c, b) in &blocks {
            let rows = blocks.get(&(c + 1)).map_or(0, |t| t.len());
            let mut m = ExactMatrix::zeros(ring, rows, b.len());
            for &i in b {
                for (j, v) in &diff[i] {
                    let cur = m.get(pos[*j], pos[i]).clone();
                    m.set(pos[*j], pos[i], ring.reduce(cur + v));
                }
            }
            diffs.insert(-c, m);
        }
        let complex: Complex = Arc::new(
            ChainComplex::from_parts(ring, &ranks, &diffs)
                .map_err(|e| BracketError::Algebra(format!("differential: {e}")))?,
        );
        let out = Dga { ring, names, degrees, unit, diff, mult, blocks, pos, complex };
        out.check_axioms()?;
        Ok(out)
    }

    fn check_axioms(&self) -> Result<()> {
        let n = self.names.len();
        let e: Vec<Cochain> = (0..n).map(|i| self.basis(i)).collect();
        for i in 0..n {
            if self.mul(&e[self.unit], &e[i]) != e[i] || self.mul(&e[i], &e[self.unit]) != e[i] {
                return Err(BracketError::Algebra(format!("`{}` is not unital", self.names[i])));
            }
            for j in 0..n {
                let lhs = self.d(&self.mul(&e[i], &e[j]));
                let t1 = self.mul(&self.d(&e[i]), &e[j]);
                let t2 = self.scale(&self.mul(&e[i], &self.d(&e[j])), &sign(self.degrees[i].rem_euclid(2) == 1));
                if lhs != self.add(&t1, &t2) {
                    return Err(BracketError::Algebra(format!(
                        "Leibniz fails on ({}, {})",
                        self.names[i], self.names[j]
                    )));
                }
                let ij = self.mul(&e[i], &e[j]);
                for (k, ek) in e.iter().enumerate() {
                    if self.mul(&ij, ek) != self.mul(&e[i], &self.mul(&e[j], ek)) {
                        return Err(BracketError::Algebra(format!(
                            "not associative on ({}, {}, {})",
                            self.names[i], self.names[j], self.names[k]
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    /// Exterior algebra on the given generators (squares vanish, graded commutative),
    /// with `d` prescribed on generators as combinations of generator words.
    pub fn exterior(ring: Ring, gens: &[(&str, i64)], diffs: &[(&str, Vec<(Vec<&str>, i64)>)]) -> Result<Self> {
        let g = gens.len();
        if g > 16 {
            return Err(BracketError::Algebra("at most 16 exterior generators".into()));
        }
        let gdeg = |mask: u32| (0..g).filter(|i| mask >> i & 1 == 1).map(|i| gens[i].1).sum::<i64>();
        let mut masks: Vec<u32> = (0..1u32 << g).collect();
        masks.sort_by_key(|m| (gdeg(*m), m.count_ones(), *m));
        let index: BTreeMap<u32, usize> = masks.iter().enumerate().map(|(i, m)| (*m, i)).collect();
        let mono_mul = |s: u32, t: u32| -> Option<(u32, bool)> {
            if s & t != 0 {
                return None;
            }
            let mut odd = false;
            for i in (0..g).filter(|i| s >> i & 1 == 1) {
                for j in (0..g).filter(|j| t >> j & 1 == 1 && *j < i) {
                    odd ^= (gens[i].1 * gens[j].1).rem_euclid(2) == 1;
                }
            }
            Some((s | t, odd))
        };
        type El = BTreeMap<u32, BigInt>;
        let el_mul = |x: &El, y: &El| -> El {
            let mut out = El::new();
            for (s, a) in x {
                for (t, b) in y {
                    if let Some((m, odd)) = mono_mul(*s, *t) {
                        *out.entry(m).or_insert_with(BigInt::zero) += a * b * sign(odd);
                    }
                }
            }
            out.into_iter().map(|(m, c)| (m, ring.reduce(c))).filter(|(_, c)| !c.is_zero()).collect()
        };
        let gen_index = |name: &str| -> Result<usize> {
            gens.iter()
                .position(|(n, _)| *n == name)
                .ok_or_else(|| BracketError::Algebra(format!("unknown generator `{name}`")))
        };
        let mut dgen: Vec<El> = vec![El::new(); g];
        for (name, terms) in diffs {
            let i = gen_index(name)?;
            for (word, c) in terms {
                let mut w: El = El::from([(0u32, BigInt::one())]);
                for x in word {
                    w = el_mul(&w, &El::from([(1u32 << gen_index(x)?, BigInt::one())]));
                }
                for (m, v) in w {
                    *dgen[i].entry(m).or_insert_with(BigInt::zero) += v * c;
                }
            }
            dgen[i] = std::mem::take(&mut dgen[i])
                .into_iter()
                .map(|(m, c)| (m, ring.reduce(c)))
                .filter(|(_, c)| !c.is_zero())
                .collect();
        }
        let d_mono = |mask: u32| -> El {
            let mut out = El::new();
            let mut before = 0i64;
            let idx: Vec<usize> = (0..g).filter(|i| mask >> i & 1 == 1).collect();
            for (p, &i) in idx.iter().enumerate() {
                let left: u32 = idx[..p].iter().map(|j| 1u32 << j).sum();
                let right: u32 = idx[p + 1..].iter().map(|j| 1u32 << j).sum();
                let t =
                    el_mul(&el_mul(&El::from([(left, BigInt::one())]), &dgen[i]), &El::from([(right, BigInt::one())]));
                for (m, c) in t {
                    *out.entry(m).or_insert_with(BigInt::zero) += c * sign(before.rem_euclid(2) == 1);
                }
                before += gens[i].1;
            }
            out.into_iter().map(|(m, c)| (m, ring.reduce(c))).filter(|(_, c)| !c.is_zero()).collect()
        };
        let names: Vec<String> = masks
            .iter()
            .map(|m| {
                if *m == 0 {
                    "1".to_string()
                } else {
                    (0..g).filter(|i| m >> i & 1 == 1).map(|i| gens[i].0).collect()
                }
            })
            .collect();
        let degrees: Vec<i64> = masks.iter().map(|m| gdeg(*m)).collect();
        let diff: Vec<Vec<(usize, BigInt)>> =
            masks.iter().map(|m| d_mono(*m).into_iter().map(|(k, c)| (index[&k], c)).collect()).collect();
        let mut mult = BTreeMap::new();
        for (i, s) in masks.iter().enumerate() {
            for (j, t) in masks.iter().enumerate() {
                if let Some((m, odd)) = mono_mul(*s, *t) {
                    mult.insert((i, j), vec![(index[&m], ring.reduce(sign(odd)))]);
                }
            }
        }
        Dga::new(ring, names, degrees, index[&0], diff, mult)
    }

    pub fn ring(&self) -> Ring {
        self.ring
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn dim(&self) -> usize {
        self.names.len()
    }

    pub fn degree_of(&self, i: usize) -> i64 {
        self.degrees[i]
    }

    pub fn basis_of_degree(&self, n: i64) -> &[usize] {
        self.blocks.get(&n).map_or(&[], |b| b.as_slice())
    }

    pub fn zero(&self, deg: i64) -> Cochain {
        Cochain { deg, coeffs: vec![BigInt::zero(); self.basis_of_degree(deg).len()] }
    }

    pub fn basis(&self, i: usize) -> Cochain {
        let mut c = self.zero(self.degrees[i]);
        c.coeffs[self.pos[i]] = BigInt::one();
        c
    }

    pub fn element(&self, terms: &[(&str, i64)]) -> Result<Cochain> {
        let mut out: Option<Cochain> = None;
        for (name, c) in terms {
            let i = self
                .names
                .iter()
                .position(|n| n == name)
                .ok_or_else(|| BracketError::Algebra(format!("no basis element `{name}`")))?;
            let t = self.scale(&self.basis(i), &BigInt::from(*c));
            out = Some(match out {
                None => t,
                Some(o) if o.deg == t.deg => self.add(&o, &t),
                Some(_) => return Err(BracketError::Algebra("inhomogeneous element".into())),
            });
        }
        out.ok_or_else(|| BracketError::Algebra("empty element".into()))
    }

    fn from_terms(&self, deg: i64, terms: impl IntoIterator<Item = (usize, BigInt)>) -> Cochain {
        let mut c = self.zero(deg);
        for (k, v) in terms {
            debug_assert_eq!(self.degrees[k], deg);
            c.coeffs[self.pos[k]] += v;
        }
        c.coeffs = c.coeffs.into_iter().map(|x| self.ring.reduce(x)).collect();
        c
    }

    pub fn add(&self, x: &Cochain, y: &Cochain) -> Cochain {
        assert_eq!(x.deg, y.deg, "sum of elements of different degrees");
        Cochain { deg: x.deg, coeffs: x.coeffs.iter().zip(&y.coeffs).map(|(a, b)| self.ring.reduce(a + b)).collect() }
    }

    pub fn scale(&self, x: &Cochain, c: &BigInt) -> Cochain {
        Cochain { deg: x.deg, coeffs: x.coeffs.iter().map(|a| self.ring.reduce(a * c)).collect() }
    }

    pub fn mul(&self, x: &Cochain, y: &Cochain) -> Cochain {
        let deg = x.deg + y.deg;
        let (bx, by) = (self.basis_of_degree(x.deg), self.basis_of_degree(y.deg));
        let mut terms = vec![];
        for (a, i) in x.coeffs.iter().zip(bx) {
            if a.is_zero() {
                continue;
            }
            for (b, j) in y.coeffs.iter().zip(by) {
                if b.is_zero() {
                    continue;
                }
                for (k, c) in self.mult.get(&(*i, *j)).into_iter().flatten() {
                    terms.push((*k, a * b * c));
                }
            }
        }
        self.from_terms(deg, terms)
    }

    pub fn d(&self, x: &Cochain) -> Cochain {
        let terms = x
            .coeffs
            .iter()
            .zip(self.basis_of_degree(x.deg))
            .filter(|(a, _)| !a.is_zero())
            .flat_map(|(a, i)| self.diff[*i].iter().map(move |(k, c)| (*k, a * c)));
        self.from_terms(x.deg + 1, terms.collect::<Vec<_>>())
    }

    pub fn is_cocycle(&self, x: &Cochain) -> bool {
        self.d(x).is_zero()
    }

    /// Some `y` with `dy = x`.
    pub fn primitive(&self, x: &Cochain) -> Option<Cochain> {
        let m = self.complex.d(1 - x.deg);
        if m.rows() == 0 {
            return x.is_zero().then(|| self.zero(x.deg - 1));
        }
        let y = linalg::solve(&m, &x.coeffs).expect("block shapes")?;
        Some(Cochain { deg: x.deg - 1, coeffs: y })
    }

    pub fn cohomology(&self, n: i64) -> AbGroupPresentation {
        self.complex.homology(-n)
    }

    pub fn class_of(&self, x: &Cochain) -> Vec<BigInt> {
        self.cohomology(x.deg).class_of(&x.coeffs)
    }

    /// Cocycles representing the generators of `Hⁿ`.
    pub fn cocycle_basis(&self, n: i64) -> Vec<Cochain> {
        self.cohomology(n).generators.into_iter().map(|coeffs| Cochain { deg: n, coeffs }).collect()
    }

    pub fn describe(&self, x: &Cochain) -> String {
        let terms: Vec<String> = x
            .coeffs
            .iter()
            .zip(self.basis_of_degree(x.deg))
            .filter(|(c, _)| !c.is_zero())
            .map(|(c, i)| if c.is_one() { self.names[*i].clone() } else { format!("{c}·{}", self.names[*i]) })
            .collect();
        if terms.is_empty() {
            "0".into()
        } else {
            terms.join(" + ")
        }
    }

    /// The underlying homological complex, `A_n = A^{−n}`.
    pub fn complex(&self) -> &Complex {
        &self.complex
    }

    /// `K_i = Σ^i A`; degree 0 holds `A^i`.
    pub fn k_object(&self, i: i64) -> Complex {
        Arc::new(self.complex.shift(i))
    }

    /// The cocycle `x` as a map `S⁰ → K_{|x|}`.
    pub fn element_map(&self, x: &Cochain) -> ChainMap {
        assert!(self.is_cocycle(x), "element_map needs a cocycle");
        let s0: Complex = Arc::new(ChainComplex::sphere(self.ring, 0));
        let k = self.k_object(x.deg);
        let col = ExactMatrix::from_columns(self.ring, x.coeffs.len(), std::slice::from_ref(&x.coeffs));
        ChainMap::new(&s0, &k, BTreeMap::from([(0, col)])).expect("cocycles are chain maps from S⁰")
    }

    fn mult_map(&self, i: i64, p: i64, f: impl Fn(&Cochain) -> Cochain, sign_of: impl Fn(i64) -> bool) -> ChainMap {
        let (src, dst) = (self.k_object(i), self.k_object(i + p));
        ChainMap::from_fn(&src, &dst, |n| {
            let cols: Vec<Vec<BigInt>> = self
                .basis_of_degree(i - n)
                .iter()
                .map(|b| self.scale(&f(&self.basis(*b)), &sign(sign_of(n))).coeffs)
                .collect();
            ExactMatrix::from_columns(self.ring, self.basis_of_degree(i + p - n).len(), &cols)
        })
    }

    /// `a ↦ x·a` as a chain map `K_i → K_{i+|x|}`.
    pub fn left_mult(&self, x: &Cochain, i: i64) -> ChainMap {
        assert!(self.is_cocycle(x), "left_mult needs a cocycle");
        self.mult_map(i, x.deg, |a| self.mul(x, a), |_| false)
    }

    /// `a ↦ (−1)^{|y|n} a·y` in homological degree `n`, a chain map `K_i → K_{i+|y|}`.
    pub fn right_mult(&self, y: &Cochain, i: i64) -> ChainMap {
        assert!(self.is_cocycle(y), "right_mult needs a cocycle");
        self.mult_map(i, y.deg, |a| self.mul(a, y), |n| (y.deg * n).rem_euclid(2) == 1)
    }
}

// ---------------------------------------------------------------------------
// Value sets.

/// A coset `value + ⟨indeterminacy⟩` in an abelian group given by ambient vectors.
#[derive(Clone, Debug)]
pub struct BracketValue {
    pub ambient: AbGroupPresentation,
    /// Ambient vector of one value.
    pub value: Vec<BigInt>,
    /// Ambient vectors; their classes generate the indeterminacy.
    pub indeterminacy: Vec<Vec<BigInt>>,
    /// `ambient / ⟨indeterminacy⟩`.
    pub quotient: AbGroupPresentation,
    /// `0` lies in the coset.
    pub verdict: Verdict,
}

impl BracketValue {
    pub fn new(ambient: AbGroupPresentation, value: Vec<BigInt>, indeterminacy: Vec<Vec<BigInt>>) -> Self {
        let indeterminacy: Vec<Vec<BigInt>> =
            indeterminacy.into_iter().filter(|v| !ambient.class_of(v).iter().all(|c| c.is_zero())).collect();
        let quotient = ambient.quotient_by(&indeterminacy);
        let verdict =
            if quotient.class_of(&value).iter().all(|c| c.is_zero()) { Verdict::Vanishes } else { Verdict::Obstructed };
        BracketValue { ambient, value, indeterminacy, quotient, verdict }
    }

    /// Coset in `[X, Y]` from representative chain maps.
    pub fn from_maps(classes: &HomotopyClasses, value: &ChainMap, indeterminacy: &[ChainMap]) -> Self {
        let v = classes.hom.map_vector(value);
        let ind = indeterminacy.iter().map(|m| classes.hom.map_vector(m)).collect();
        Self::new(classes.group.clone(), v, ind)
    }

    pub fn value_class(&self) -> Vec<BigInt> {
        self.ambient.class_of(&self.value)
    }

    pub fn indeterminacy_classes(&self) -> Vec<Vec<BigInt>> {
        self.indeterminacy.iter().map(|v| self.ambient.class_of(v)).collect()
    }

    /// Class of the value modulo the indeterminacy.
    pub fn residue(&self) -> Vec<BigInt> {
        self.quotient.class_of(&self.value)
    }

    pub fn has_zero_indeterminacy(&self) -> bool {
        self.indeterminacy.is_empty()
    }

    /// `v` (an ambient vector) lies in the coset.
    pub fn contains(&self, v: &[BigInt]) -> bool {
        self.quotient.same_class(v, &self.value)
    }

    /// Same subgroup and same coset, both compared inside `self.ambient`.
    pub fn same_coset(&self, other: &BracketValue) -> bool {
        let inside = |a: &BracketValue, b: &BracketValue| {
            a.indeterminacy.iter().all(|v| b.quotient.class_of(v).iter().all(|c| c.is_zero()))
        };
        inside(self, other) && inside(other, self) && other.contains(&self.value)
    }

    fn normalize(&self, c: Vec<BigInt>) -> Vec<BigInt> {
        c.into_iter()
            .enumerate()
            .map(|(i, x)| match self.ambient.modulus(i) {
                Some(m) => num_integer::Integer::mod_floor(&x, &m),
                None => x,
            })
            .collect()
    }

    /// All classes of the coset, or `None` past `limit` elements.
    pub fn enumerate(&self, limit: usize) -> Option<BTreeSet<Vec<BigInt>>> {
        let gens = self.indeterminacy_classes();
        let start = self.value_class();
        let mut seen = BTreeSet::from([start.clone()]);
        let mut frontier = vec![start];
        while let Some(c) = frontier.pop() {
            for g in &gens {
                let n = self.normalize(c.iter().zip(g).map(|(a, b)| a + b).collect());
                if seen.insert(n.clone()) {
                    if seen.len() > limit {
                        return None;
                    }
                    frontier.push(n);
                }
            }
        }
        Some(seen)
    }

    /// `set + g ⊆ set` for every indeterminacy generator `g`.
    pub fn is_closed(&self, set: &BTreeSet<Vec<BigInt>>) -> bool {
        let gens = self.indeterminacy_classes();
        set.iter()
            .all(|c| gens.iter().all(|g| set.contains(&self.normalize(c.iter().zip(g).map(|(a, b)| a + b).collect()))))
    }

    pub fn to_json(&self) -> Value {
        let ints = |v: &[BigInt]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>();
        json!({
            "ambient": self.ambient.describe(),
            "value": ints(&self.value_class()),
            "indeterminacy": self.indeterminacy_classes().iter().map(|v| ints(v)).collect::<Vec<_>>(),
            "quotient": self.quotient.describe(),
            "residue": ints(&self.residue()),
            "verdict": self.verdict,
        })
    }
}

/// Every vector of `F_p^n`, or `None` past `limit`.
fn fp_vectors(ring: Ring, n: usize, limit: usize) -> Option<Vec<Vec<BigInt>>> {
    let Ring::PrimeField(p) = ring else { return None };
    let total = (p as u128).checked_pow(n as u32)?;
    if total > limit as u128 {
        return None;
    }
    let mut out = vec![vec![]];
    for _ in 0..n {
        out = out
            .into_iter()
            .flat_map(|v: Vec<BigInt>| (0..p).map(move |c| [v.clone(), vec![BigInt::from(c)]].concat()))
            .collect();
    }
    Some(out)
}

fn combine(ring: Ring, base: &[BigInt], dirs: &[Vec<BigInt>], coeffs: &[BigInt]) -> Vec<BigInt> {
    let mut out = base.to_vec();
    for (c, d) in coeffs.iter().zip(dirs) {
        if !c.is_zero() {
            for (o, x) in out.iter_mut().zip(d) {
                *o += c * x;
            }
        }
    }
    out.into_iter().map(|x| ring.reduce(x)).collect()
}

// ---------------------------------------------------------------------------
// Massey products.

fn k_sum(a: &Dga, degs: &[i64]) -> crate::chain::DirectSum {
    let parts: Vec<Complex> = degs.iter().map(|i| a.k_object(*i)).collect();
    direct_sum(a.ring(), &parts)
}

/// Linear model of the Massey diagram: the products `x·y` into `K_{r+s+t}` are
/// replaced by multiplication with the fixed outer factors, so every arrow is a
/// chain map. Ideal words `G·fb ≃ 0` and `G·fe ≃ 0` say `βγ` and `αβ` are exact.
pub fn massey_diagram(a: &Dga, alpha: &Cochain, beta: &Cochain, gamma: &Cochain) -> Result<HoDiagram> {
    for (n, x) in [("α", alpha), ("β", beta), ("γ", gamma)] {
        if !a.is_cocycle(x) {
            return Err(BracketError::Precondition(format!("{n} is not a cocycle")));
        }
    }
    let (r, s, t) = (alpha.deg, beta.deg, gamma.deg);
    let ring = a.ring();
    let j = Arc::new(WeakLattice::compile(&massey_shape()).map_err(|d| BracketError::Precondition(format!("{d:?}")))?);
    let yf = k_sum(a, &[r, s, t]);
    let yc = k_sum(a, &[r, s + t]);
    let yd = k_sum(a, &[r + s, t]);
    let (kb, ke, ka) = (a.k_object(s + t), a.k_object(r + s), a.k_object(r + s + t));
    let s0: Complex = Arc::new(ChainComplex::sphere(ring, 0));
    let objects: BTreeMap<&str, Complex> = BTreeMap::from([
        ("g", s0.clone()),
        ("f", yf.obj.clone()),
        ("c", yc.obj.clone()),
        ("d", yd.obj.clone()),
        ("b", kb.clone()),
        ("e", ke.clone()),
        ("a", ka.clone()),
    ]);
    let (pu, pv, pw) = (&yf.proj[0], &yf.proj[1], &yf.proj[2]);
    let rho_v = a.right_mult(gamma, s).compose(pv);
    let lam_v = a.left_mult(alpha, s).compose(pv);
    let maps: Vec<(&str, ChainMap)> = vec![
        ("G", yf.tuple(&s0, &[a.element_map(alpha), a.element_map(beta), a.element_map(gamma)])),
        ("fb", rho_v.clone()),
        ("fc", yc.tuple(&yf.obj, &[pu.clone(), rho_v])),
        ("fd", yd.tuple(&yf.obj, &[lam_v.clone(), pw.clone()])),
        ("fe", lam_v),
        ("cb", yc.proj[1].clone()),
        ("de", yd.proj[0].clone()),
        ("ca", a.left_mult(alpha, s + t).compose(&yc.proj[1])),
        ("da", a.right_mult(gamma, r + s).compose(&yd.proj[0])),
        ("ba", ChainMap::zero(&kb, &ka)),
        ("ea", ChainMap::zero(&ke, &ka)),
    ];
    let objs = objects.iter().map(|(n, c)| (j.object(n).expect("shape object"), c.clone())).collect();
    let reps = maps.into_iter().map(|(l, m)| (j.arrow_by_label(l).expect("shape arrow"), m)).collect();
    Ok(HoDiagram::new(j, ring, objs, reps)?)
}

/// Stage-`k` state at `x` from a strictly compatible family in the original
/// objects, pushed into the replacements along the equivalences.
pub fn pinned_state(trunc: &StrictTruncation, x: usize, k: u32, family: impl Fn(Mor) -> ChainMap) -> InnerState {
    let j = &trunc.base.shape;
    let source = trunc.base.objects[&x].clone();
    let family = j
        .morphisms_below(x, k, false)
        .into_iter()
        .map(|m| {
            let dst = trunc.strict.obj(m.dst);
            let map = if trunc.pointed && j.is_ideal(m) {
                ChainMap::zero(&source, dst)
            } else {
                trunc.equivalence[&m.dst].compose(&family(m))
            };
            (m, map)
        })
        .collect();
    InnerState { x, k, source, family, drift: BTreeMap::new() }
}

/// The stage `(g, 3)` operation of [`massey_diagram`] with the strict part below
/// `g` kept as given and the stage-2 family pinned to `(α, 0)` at `c`, `(0, γ)` at `d`
/// and zero at `a`, `b`, `e`; the defining systems then enter only at stage 3.
pub fn massey_pipeline(
    a: &Dga,
    alpha: &Cochain,
    beta: &Cochain,
    gamma: &Cochain,
    opts: &RectifyOptions,
) -> Result<ObstructionReport> {
    let mut h = massey_diagram(a, alpha, beta, gamma)?;
    h.complete(true)?;
    let h = Arc::new(h);
    let trunc = StrictTruncation::from_strict_below(h.clone(), true, 4)?;
    let j = h.shape.clone();
    let g = j.object("g").expect("shape object");
    let s0 = h.objects[&g].clone();
    let (r, s, t) = (alpha.deg, beta.deg, gamma.deg);
    let state = pinned_state(&trunc, g, 2, |m| match j.name(m.dst) {
        "c" => k_sum(a, &[r, s + t]).tuple(&s0, &[a.element_map(alpha), ChainMap::zero(&s0, &a.k_object(s + t))]),
        "d" => k_sum(a, &[r + s, t]).tuple(&s0, &[ChainMap::zero(&s0, &a.k_object(r + s)), a.element_map(gamma)]),
        _ => ChainMap::zero(&s0, &h.objects[&m.dst]),
    });
    let opts = RectifyOptions { pointed: true, ..opts.clone() };
    Ok(total_operation(&trunc, &state, 3, &opts)?)
}

/// `⟨α, β, γ⟩ ⊂ H^{r+s+t−1}` with value `[αG − (−1)^r Fγ]`, `dF = αβ`, `dG = βγ`.
pub struct MasseyProduct {
    pub degree: i64,
    pub defining: (Cochain, Cochain),
    pub representative: Cochain,
    pub value: BracketValue,
    /// Stage `(g, 3)` report of [`massey_pipeline`], when requested.
    pub pipeline: Option<Box<ObstructionReport>>,
}

impl MasseyProduct {
    pub fn to_json(&self, a: &Dga) -> Value {
        json!({
            "degree": self.degree,
            "defining": { "F": a.describe(&self.defining.0), "G": a.describe(&self.defining.1) },
            "representative": a.describe(&self.representative),
            "value": self.value.to_json(),
            "pipeline": self.pipeline.as_ref().map(|r| json!({
                "stage": { "object": r.x_name, "k": r.k },
                "verdict": r.verdict,
                "oracle": r.oracle,
                "ambient": r.value_set.ambient.describe(),
            })),
        })
    }
}

fn defining_pair(a: &Dga, alpha: &Cochain, beta: &Cochain, gamma: &Cochain) -> Result<(Cochain, Cochain)> {
    for (n, x) in [("α", alpha), ("β", beta), ("γ", gamma)] {
        if !a.is_cocycle(x) {
            return Err(BracketError::Precondition(format!("{n} is not a cocycle")));
        }
    }
    let f = a.primitive(&a.mul(alpha, beta)).ok_or_else(|| BracketError::NotNull("[α][β]".into()))?;
    let g = a.primitive(&a.mul(beta, gamma)).ok_or_else(|| BracketError::NotNull("[β][γ]".into()))?;
    Ok((f, g))
}

fn massey_rep(a: &Dga, alpha: &Cochain, gamma: &Cochain, f: &Cochain, g: &Cochain) -> Cochain {
    let fg = a.scale(&a.mul(f, gamma), &-sign(alpha.deg.rem_euclid(2) == 1));
    a.add(&a.mul(alpha, g), &fg)
}

pub fn massey3(
    a: &Dga,
    alpha: &Cochain,
    beta: &Cochain,
    gamma: &Cochain,
    pipeline: Option<&RectifyOptions>,
) -> Result<MasseyProduct> {
    let (f, g) = defining_pair(a, alpha, beta, gamma)?;
    let rep = massey_rep(a, alpha, gamma, &f, &g);
    if !a.is_cocycle(&rep) {
        return Err(BracketError::Mismatch("Massey representative is not a cocycle".into()));
    }
    let (r, s, t) = (alpha.deg, beta.deg, gamma.deg);
    let n = r + s + t - 1;
    let mut indet: Vec<Vec<BigInt>> = a.cocycle_basis(s + t - 1).iter().map(|z| a.mul(alpha, z).coeffs).collect();
    indet.extend(a.cocycle_basis(r + s - 1).iter().map(|z| a.mul(z, gamma).coeffs));
    let value = BracketValue::new(a.cohomology(n), rep.coeffs.clone(), indet);
    let pipeline = match pipeline {
        None => None,
        Some(opts) => {
            let report = massey_pipeline(a, alpha, beta, gamma, opts)?;
            if report.verdict != value.verdict {
                return Err(BracketError::Mismatch(format!(
                    "cochain formula says {}, stage ({}, {}) says {}",
                    value.verdict, report.x_name, report.k, report.verdict
                )));
            }
            Some(Box::new(report))
        }
    };
    Ok(MasseyProduct { degree: n, defining: (f, g), representative: rep, value, pipeline })
}

/// Cocycles of degree `n` as a basis of `Zⁿ`.
fn cocycle_space(a: &Dga, n: i64) -> Vec<Vec<BigInt>> {
    let dim = a.basis_of_degree(n).len();
    let m = a.complex().d(-n);
    if m.rows() == 0 {
        return (0..dim).map(|i| (0..dim).map(|j| BigInt::from((i == j) as i64)).collect()).collect();
    }
    linalg::kernel_basis(&m)
}

/// Classes `[αG − (−1)^r Fγ]` over every defining system `(F, G)`; `None` over `Z`
/// or past `limit` systems.
pub fn massey_enumerate(
    a: &Dga,
    alpha: &Cochain,
    beta: &Cochain,
    gamma: &Cochain,
    limit: usize,
) -> Result<Option<BTreeSet<Vec<BigInt>>>> {
    let (f0, g0) = defining_pair(a, alpha, beta, gamma)?;
    let ring = a.ring();
    let (zf, zg) = (cocycle_space(a, f0.deg), cocycle_space(a, g0.deg));
    let Some(cf) = fp_vectors(ring, zf.len(), limit) else { return Ok(None) };
    let Some(cg) = fp_vectors(ring, zg.len(), limit / cf.len().max(1)) else { return Ok(None) };
    let h = a.cohomology(alpha.deg + beta.deg + gamma.deg - 1);
    let mut out = BTreeSet::new();
    for x in &cf {
        let f = Cochain { deg: f0.deg, coeffs: combine(ring, &f0.coeffs, &zf, x) };
        for y in &cg {
            let g = Cochain { deg: g0.deg, coeffs: combine(ring, &g0.coeffs, &zg, y) };
            out.insert(h.class_of(&massey_rep(a, alpha, gamma, &f, &g).coeffs));
        }
    }
    Ok(Some(out))
}

// ---------------------------------------------------------------------------
// Toda brackets.

/// `Ω′Y = Σ^{−1}Y`.
pub fn loop_object(y: &Complex) -> Complex {
    Arc::new(y.shift(-1))
}

/// The same matrices between `Σ^k` of both ends.
pub fn shift_map(f: &ChainMap, k: i64) -> ChainMap {
    let (src, dst): (Complex, Complex) = (Arc::new(f.src.shift(k)), Arc::new(f.dst.shift(k)));
    ChainMap::from_fn(&src, &dst, |n| f.at(n - k))
}

/// A degree-one `s` with `ds + sd = 0` read as a chain map into `Ω′(dst)`.
pub fn as_loop(s: &ChainHomotopy) -> ChainMap {
    let t = loop_object(&s.dst);
    ChainMap::from_fn(&s.src, &t, |n| s.at(n))
}

/// `Y(n) → ⋯ → Y(0)` on `toda_chain(n)`; `maps[i]` is the arrow out of `Y(n − i)`.
pub fn toda_diagram(maps: &[ChainMap]) -> Result<HoDiagram> {
    let n = maps.len() as u32;
    if n < 2 {
        return Err(BracketError::Precondition("a Toda chain needs at least two maps".into()));
    }
    for w in maps.windows(2) {
        if *w[0].dst != *w[1].src {
            return Err(BracketError::Precondition("maps are not composable".into()));
        }
    }
    let ring = maps[0].ring();
    let j = Arc::new(WeakLattice::compile(&toda_chain(n)).map_err(|d| BracketError::Precondition(format!("{d:?}")))?);
    let mut objects = BTreeMap::new();
    let mut reps = BTreeMap::new();
    for (i, m) in maps.iter().enumerate() {
        let top = n - i as u32;
        objects.insert(j.object(&top.to_string()).expect("chain object"), m.src.clone());
        objects.insert(j.object(&(top - 1).to_string()).expect("chain object"), m.dst.clone());
        reps.insert(j.arrow_by_label(&format!("f{top}")).expect("chain arrow"), m.clone());
    }
    Ok(HoDiagram::new(j, ring, objects, reps)?)
}

fn toda_maps(h: &HoDiagram) -> Result<Vec<ChainMap>> {
    let j = &h.shape;
    let n = j.max_degree();
    (1..=n)
        .rev()
        .map(|i| {
            j.arrow_by_label(&format!("f{i}"))
                .map(|a| h.reps[&a].clone())
                .ok_or_else(|| BracketError::Precondition(format!("no arrow `f{i}`: not a Toda chain")))
        })
        .collect()
}

fn check_toda_shape(h: &HoDiagram) -> Result<u32> {
    let j = &h.shape;
    let n = j.max_degree();
    let ok = j.num_objects() == n as usize + 1
        && j.arrows().len() == n as usize
        && (0..=n).all(|i| j.object(&i.to_string()).is_some_and(|x| j.degree(x) == i));
    if !ok || n < 3 {
        return Err(BracketError::Precondition("diagram is not on toda_chain(n), n ≥ 3".into()));
    }
    Ok(n)
}

/// Chain-level value `fB − Ah` with `dA + Ad = fg`, `dB + Bd = gh`, as a map
/// `Y3 → Ω′Y0`; `None` when a composite is essential.
pub fn toda_cochain_value(f: &ChainMap, g: &ChainMap, h: &ChainMap) -> Option<ChainMap> {
    let a = find_homotopy(&f.compose(g), &ChainMap::zero(&g.src, &f.dst))?;
    let b = find_homotopy(&g.compose(h), &ChainMap::zero(&h.src, &g.dst))?;
    let fb = b.post(f);
    let ah = a.pre(h);
    Some(as_loop(&fb.add(&ah.neg())))
}

/// Generators of `h^#[Y2, Ω′Y0] + (Ω′f)_#[Y3, Ω′Y1]` inside `[Y3, Ω′Y0]`.
pub fn toda_indeterminacy(f: &ChainMap, h: &ChainMap) -> Result<Vec<ChainMap>> {
    let t = loop_object(&f.dst);
    let mut out = vec![];
    let u = homotopy_classes(&h.dst, &t)?;
    out.extend((0..u.group.num_generators()).map(|i| u.representative(i).compose(h)));
    let lf = shift_map(f, -1);
    let v = homotopy_classes(&h.src, &lf.src)?;
    out.extend((0..v.group.num_generators()).map(|i| lf.compose(&v.representative(i))));
    Ok(out)
}

/// Right-justified bracket `⟨f, g⟩, h` read off the stage `(3, 2)` operation.
pub struct TodaBracket {
    /// Values with the strict part below `Y3` held fixed, moved into `[Y3, Ω′Y0]`.
    pub fixed: BracketValue,
    /// `fixed` with the classical indeterminacy added.
    pub union: BracketValue,
    pub report: Box<ObstructionReport>,
    pub stages: Vec<StageRecord>,
}

impl TodaBracket {
    pub fn verdict(&self) -> Verdict {
        self.fixed.verdict
    }

    pub fn to_json(&self) -> Value {
        json!({
            "stage": { "object": self.report.x_name, "k": self.report.k },
            "verdict": self.verdict(),
            "oracle": self.report.oracle,
            "fixed": self.fixed.to_json(),
            "union": self.union.to_json(),
        })
    }
}

/// `λ: F² → Ω′Y0`, the path coordinate over `(f3, f2)` pushed along `f1`.
fn toda_transport(report: &ObstructionReport, f1: &ChainMap, t: &Complex) -> Result<ChainMap> {
    let grid = &report.grid;
    let f2o = grid.target().clone();
    if grid.b.keys.len() != 1 {
        return Err(BracketError::Precondition("stage (3, 2) should have a single generalized-diagonal pair".into()));
    }
    let pb = grid.b.proj(&grid.b.keys[0]).clone();
    let (a, b) = (grid.a.obj().clone(), grid.b.obj().clone());
    let build = |flip: bool| {
        ChainMap::from_fn(&f2o, t, |n| {
            let off = a.rank(n) + b.rank(n);
            let rows: Vec<usize> = (off..off + b.rank(n + 1)).collect();
            let m = f1.at(n + 1).mul(&pb.at(n + 1)).mul(&grid.q().at(n).select_rows(&rows));
            if flip && n.rem_euclid(2) == 1 {
                m.neg()
            } else {
                m
            }
        })
    };
    [build(false), build(true)]
        .into_iter()
        .find(|l| l.is_chain_map())
        .ok_or_else(|| BracketError::Mismatch("path coordinate of F² is not a chain map to Ω′Y0".into()))
}

pub fn toda3_right(h: &HoDiagram, opts: &RectifyOptions) -> Result<TodaBracket> {
    if check_toda_shape(h)? != 3 {
        return Err(BracketError::Precondition("toda3_right needs toda_chain(3)".into()));
    }
    let opts = RectifyOptions { pointed: true, ..opts.clone() };
    let (trunc, mut stages) = match rectify_below(h, &opts, 3)? {
        Progress::Reached { truncation, stages } => (truncation, stages),
        Progress::Obstructed(_) => return Err(BracketError::Precondition("obstructed below degree 3".into())),
    };
    let j = h.shape.clone();
    let x3 = j.object("3").expect("chain object");
    let run = inner_until(&trunc, x3, 2, &opts)?;
    stages.extend(run.stages);
    let report = run.report.ok_or_else(|| BracketError::Precondition("no stage-2 targets".into()))?;
    let f1s = &trunc.strict.maps[&j.arrow_by_label("f1").expect("chain arrow")];
    let y0 = trunc.strict.obj(j.object("0").expect("chain object")).clone();
    if y0 != trunc.base.objects[&j.object("0").expect("chain object")] {
        return Err(BracketError::Mismatch("replacement moved Y0".into()));
    }
    let t = loop_object(&y0);
    let lam = toda_transport(&report, f1s, &t)?;
    let src = &trunc.base.objects[&x3];
    let cls_f2 = homotopy_classes(src, report.grid.target())?;
    let obstruction = report.grid.gamma.compose(&report.grid.eta).sub(&report.theta);
    let fixed_ind: Vec<ChainMap> =
        report.value_set.indeterminacy.iter().map(|c| lam.compose(&cls_f2.map_of(c))).collect();
    let tcls = homotopy_classes(src, &t)?;
    let value = lam.compose(&obstruction);
    let fixed = BracketValue::from_maps(&tcls, &value, &fixed_ind);
    if fixed.verdict != report.verdict {
        return Err(BracketError::Mismatch(format!(
            "transport to [Y3, Ω′Y0] says {}, stage says {}",
            fixed.verdict, report.verdict
        )));
    }
    let maps = toda_maps(h)?;
    let mut all = fixed_ind;
    all.extend(toda_indeterminacy(&maps[2], &maps[0])?);
    let union = BracketValue::from_maps(&tcls, &value, &all);
    Ok(TodaBracket { fixed, union, report, stages })
}

/// Left-justified `⟨f, g, h⟩` through the cylinder `j: Y3 ↣ Cyl ≃ Y2` of `h`.
pub struct LeftToda {
    pub value: BracketValue,
    /// `ψ = φ∘j` for the canonical choices.
    pub psi: ChainMap,
    /// Homotopies `G` with `(dG + Gd)j = 0` spanning the choices of `g′`.
    pub g_choices: usize,
}

impl LeftToda {
    pub fn to_json(&self) -> Value {
        json!({ "value": self.value.to_json(), "g_choices": self.g_choices })
    }
}

struct LeftSetup {
    j: ChainMap,
    cyl: Complex,
    gr: ChainMap,
    sol: crate::chain::LinSolution,
    var: crate::chain::MapVar,
    t: Complex,
}

fn left_setup(g: &ChainMap, h: &ChainMap) -> Result<LeftSetup> {
    let fac = factor_cof_we(h);
    let (j, cyl) = (fac.first.clone(), fac.obj.clone());
    let gr = g.compose(&fac.second);
    let mut sys = LinSys::new(g.ring());
    let var = sys.map_var(&cyl, &g.dst, 1);
    let rhs = g.compose(h);
    sys.map_equation(
        &h.src,
        &g.dst,
        &[MapTerm::Boundary { left: None, var: &var, right: Some(&j), sign: 1 }],
        Some(&rhs),
    );
    let sol = sys.solve_with_kernel().ok_or_else(|| BracketError::NotNull("g∘h".into()))?;
    Ok(LeftSetup { j, cyl, gr, sol, var, t: Complex::clone(&h.src) })
}

/// `g′ = gr − (dG + Gd)` with `g′j = 0`, then `ψ = φj` for `dφ + φd = fg′`.
fn left_psi(f: &ChainMap, st: &LeftSetup, gvec: &[BigInt]) -> Result<ChainMap> {
    let gh = st.sol.homotopy_from(gvec, &st.var);
    let gp = st.gr.sub(&gh.boundary());
    if !gp.compose(&st.j).is_zero() {
        return Err(BracketError::Mismatch("g′ does not vanish on Y3".into()));
    }
    let fg = f.compose(&gp);
    let phi =
        find_homotopy(&fg, &ChainMap::zero(&st.cyl, &f.dst)).ok_or_else(|| BracketError::NotNull("f∘g".into()))?;
    Ok(as_loop(&phi.pre(&st.j)))
}

pub fn toda3_left(f: &ChainMap, g: &ChainMap, h: &ChainMap) -> Result<LeftToda> {
    let st = left_setup(g, h)?;
    let psi = left_psi(f, &st, &st.sol.particular)?;
    let t = loop_object(&f.dst);
    let mut indet: Vec<ChainMap> = vec![];
    let cyl_cls = homotopy_classes(&st.cyl, &t)?;
    indet.extend((0..cyl_cls.group.num_generators()).map(|i| cyl_cls.representative(i).compose(&st.j)));
    for k in &st.sol.kernel {
        let g1 = st.sol.homotopy_from(k, &st.var);
        indet.push(as_loop(&g1.post(f).pre(&st.j)));
    }
    let tcls = homotopy_classes(&st.t, &t)?;
    let value = BracketValue::from_maps(&tcls, &psi, &indet);
    Ok(LeftToda { value, psi, g_choices: st.sol.kernel.len() })
}

/// Classes of `ψ` over every choice of `G` and of `φ` (up to homotopy); `None`
/// over `Z` or past `limit` choices.
pub fn toda3_left_enumerate(
    f: &ChainMap,
    g: &ChainMap,
    h: &ChainMap,
    limit: usize,
) -> Result<Option<BTreeSet<Vec<BigInt>>>> {
    let st = left_setup(g, h)?;
    let ring = f.ring();
    let t = loop_object(&f.dst);
    let cyl_cls = homotopy_classes(&st.cyl, &t)?;
    let tcls = homotopy_classes(&st.t, &t)?;
    let Some(gs) = fp_vectors(ring, st.sol.kernel.len(), limit) else { return Ok(None) };
    let Some(us) = fp_vectors(ring, cyl_cls.group.num_generators(), limit / gs.len().max(1)) else { return Ok(None) };
    let shifts: Vec<ChainMap> = us.iter().map(|c| cyl_cls.map_of(c).compose(&st.j)).collect();
    let mut out = BTreeSet::new();
    for c in &gs {
        let psi = left_psi(f, &st, &combine(ring, &st.sol.particular, &st.sol.kernel, c))?;
        for u in &shifts {
            out.insert(tcls.class_of(&psi.add(u)));
        }
    }
    Ok(Some(out))
}

/// Long bracket on `toda_chain(n)`: lower stages, the top total operation at
/// `(n, n − 1)`, and its separated operations.
pub struct TodaLong {
    pub n: u32,
    pub stages: Vec<StageRecord>,
    /// First obstruction below the top stage.
    pub earlier: Option<Box<ObstructionReport>>,
    pub total: Option<Box<ObstructionReport>>,
    pub separated: Vec<SeparatedOperation>,
    pub loops: Vec<LoopCheck>,
}

impl TodaLong {
    pub fn verdict(&self) -> Verdict {
        match (&self.earlier, &self.total) {
            (Some(_), _) => Verdict::Obstructed,
            (None, Some(t)) => t.verdict,
            (None, None) => Verdict::Vanishes,
        }
    }

    pub fn to_json(&self) -> Value {
        let stage =
            |r: &ObstructionReport| json!({ "object": r.x_name, "k": r.k, "verdict": r.verdict, "oracle": r.oracle });
        json!({
            "n": self.n,
            "verdict": self.verdict(),
            "earlier": self.earlier.as_deref().map(stage),
            "total": self.total.as_deref().map(stage),
            "separated": self.separated.iter().map(|o| o.to_json()).collect::<Vec<_>>(),
            "loops": self.loops.iter().map(|l| json!({ "j": l.j, "holds": l.holds, "actual": l.actual, "expected": l.expected })).collect::<Vec<_>>(),
            "stages": self.stages.iter().map(|s| json!({ "object": s.object, "k": s.k, "label": s.label, "verdict": s.verdict })).collect::<Vec<_>>(),
        })
    }
}

pub fn toda_long(h: &HoDiagram, opts: &RectifyOptions) -> Result<TodaLong> {
    let n = check_toda_shape(h)?;
    let opts = RectifyOptions { pointed: true, ..opts.clone() };
    let mut out = TodaLong { n, stages: vec![], earlier: None, total: None, separated: vec![], loops: vec![] };
    let trunc = match rectify_below(h, &opts, n)? {
        Progress::Reached { truncation, stages } => {
            out.stages = stages;
            truncation
        }
        Progress::Obstructed(Outcome::Obstructed { report, stages, .. }) => {
            out.stages = stages;
            out.earlier = Some(report);
            return Ok(out);
        }
        Progress::Obstructed(Outcome::Rectified(_)) => {
            return Err(BracketError::Mismatch("rectified before the top degree".into()))
        }
    };
    let top = h.shape.object(&n.to_string()).expect("chain object");
    let run = inner_until(&trunc, top, n - 1, &opts)?;
    out.stages.extend(run.stages);
    let Some(report) = run.report else { return Ok(out) };
    if report.k < n - 1 {
        out.earlier = Some(report);
        return Ok(out);
    }
    let stage = trunc.stage(&run.state, n - 1);
    let sep = separate_total(&stage, &opts)?;
    out.loops = fully_reduced_targets(&sep.grid, &stage)?;
    out.separated = sep.operations;
    out.total = Some(report);
    Ok(out)
}

// ---------------------------------------------------------------------------
// Indeterminacy from re-choosing φ.

/// Pullbacks attached to `W = Y ×_Z X` and `θ: T → W`, with element-wise checks.
pub struct ChoiceSpread {
    /// `|Var_u(φ)|`, `|Lift_{u′}(φ)|`
    pub var: (usize, usize),
    /// `|V̄ar_u(φ)|`, `|Lift_{ū′}(φ)|`, `|Lift_{p̄′}(θ)|`
    pub var_bar: (usize, usize, usize),
    pub bijections_hold: bool,
    pub ambient: AbGroupPresentation,
    /// `[p̄″ρ]` over lifts `ρ` of `θ` along `p̄′`.
    pub image: BTreeSet<Vec<BigInt>>,
    /// `[θ′]` over `φ′ ≃ φ` with `uφ′ = uφ`, `θ′ = (φ′, pθ)`.
    pub spread: BTreeSet<Vec<BigInt>>,
}

impl ChoiceSpread {
    pub fn to_json(&self) -> Value {
        let ints = |v: &Vec<BigInt>| v.iter().map(|x| x.to_string()).collect::<Vec<_>>();
        json!({
            "var": [self.var.0, self.var.1],
            "var_bar": [self.var_bar.0, self.var_bar.1, self.var_bar.2],
            "bijections_hold": self.bijections_hold,
            "ambient": self.ambient.describe(),
            "image": self.image.iter().map(ints).collect::<Vec<_>>(),
            "spread": self.spread.iter().map(ints).collect::<Vec<_>>(),
        })
    }
}

/// Every chain map `T → D` with `L∘x = rhs`, or `None` past `limit`.
fn all_lifts(t: &Complex, d: &Complex, left: &ChainMap, rhs: &ChainMap, limit: usize) -> Option<Vec<ChainMap>> {
    let mut sys = LinSys::new(left.ring());
    let x = sys.map_var(t, d, 0);
    sys.chain_map_condition(&x);
    sys.map_equation(t, &left.dst, &[MapTerm::Plain { left: Some(left), var: &x, right: None, sign: 1 }], Some(rhs));
    let sol = sys.solve_with_kernel()?;
    let cs = fp_vectors(left.ring(), sol.kernel.len(), limit)?;
    Some(cs.iter().map(|c| sol.map_from(&combine(left.ring(), &sol.particular, &sol.kernel, c), &x)).collect())
}

fn injective_into(maps: &[ChainMap], targets: &[ChainMap]) -> bool {
    let set: BTreeSet<Vec<Vec<String>>> = maps.iter().map(fingerprint).collect();
    set.len() == maps.len() && maps.iter().all(|m| targets.contains(m))
}

fn fingerprint(m: &ChainMap) -> Vec<Vec<String>> {
    m.components().iter().flat_map(|(n, c)| std::iter::once(vec![n.to_string()]).chain(c.to_string_rows())).collect()
}

/// Over `F_p`: builds `Y⟨u⟩`, `Ȳ⟨u⟩`, `W̄⟨p,u⟩`, checks `Var_u(φ) ≅ Lift_{u′}(φ)`,
/// `V̄ar_u(φ) ≅ Lift_{ū′}(φ) ≅ Lift_{p̄′}(θ)` element by element, and compares the
/// image of `p̄″` over the fibre of `θ` with the spread found by direct search.
pub fn choice_spread(w: &Pullback, theta: &ChainMap, limit: usize) -> Result<Option<ChoiceSpread>> {
    if !matches!(w.f.ring(), Ring::PrimeField(_)) {
        return Ok(None);
    }
    let (u, s) = (&w.f, &w.g);
    let (q, p) = (&w.px, &w.py);
    let (y, z) = (u.src.clone(), u.dst.clone());
    let t = theta.src.clone();
    let phi = q.compose(theta);
    if s.compose(&p.compose(theta)) != u.compose(&phi) {
        return Err(BracketError::Precondition("θ does not land in the pullback".into()));
    }
    let y_u = pullback(u, u);
    let path = path_object(&y);
    let yz = direct_sum(u.ring(), &[y.clone(), z.clone()]);
    let m0 = path.square.proj[0].compose(&path.m);
    let m1 = path.square.proj[1].compose(&path.m);
    let one_u_m = yz.tuple(&path.obj, &[m0.clone(), u.compose(&m1)]);
    let one_top_u = yz.tuple(&y, &[ChainMap::identity(&y), u.clone()]);
    let ybar = pullback(&one_top_u, &one_u_m);
    let wbar = pullback(q, &ybar.px);
    let end = m1.compose(&ybar.py).compose(&wbar.py);
    let pbar2 = w.factor(&end, &p.compose(&wbar.px))?;

    let uphi = u.compose(&phi);
    let Some(var) = all_lifts(&t, &y, u, &uphi, limit) else { return Ok(None) };
    let Some(lift) = all_lifts(&t, &y_u.obj, &y_u.px, &phi, limit) else { return Ok(None) };
    let var_img: Vec<ChainMap> = var.iter().map(|v| y_u.factor(&phi, v)).collect::<std::result::Result<_, _>>()?;
    let canonical = y_u.factor(&phi, &phi)?;
    let mut ok = var.len() == lift.len() && injective_into(&var_img, &lift) && lift.contains(&canonical);

    // right homotopies H: φ ≃ φ′ with uφ′ = uφ, as maps into Path(Y)
    let cond = yz.tuple(&path.obj, &[m0.clone(), u.compose(&m1)]);
    let Some(hs) = all_lifts(&t, &path.obj, &cond, &one_top_u.compose(&phi), limit) else { return Ok(None) };
    let Some(lift_bar) = all_lifts(&t, &ybar.obj, &ybar.px, &phi, limit) else { return Ok(None) };
    let Some(lift_w) = all_lifts(&t, &wbar.obj, &wbar.px, theta, limit) else { return Ok(None) };
    let hs_bar: Vec<ChainMap> = hs.iter().map(|hm| ybar.factor(&phi, hm)).collect::<std::result::Result<_, _>>()?;
    let hs_w: Vec<ChainMap> = hs_bar.iter().map(|b| wbar.factor(theta, b)).collect::<std::result::Result<_, _>>()?;
    ok &= hs.len() == lift_bar.len() && hs.len() == lift_w.len();
    ok &= injective_into(&hs_bar, &lift_bar) && injective_into(&hs_w, &lift_w);
    ok &= lift_bar.contains(&ybar.factor(&phi, &path.iota.compose(&phi))?);

    let cls = homotopy_classes(&t, &w.obj)?;
    let image: BTreeSet<Vec<BigInt>> = lift_w.iter().map(|r| cls.class_of(&pbar2.compose(r))).collect();
    let ptheta = p.compose(theta);
    let mut spread = BTreeSet::new();
    for v in &var {
        if find_homotopy(v, &phi).is_some() {
            spread.insert(cls.class_of(&w.factor(v, &ptheta)?));
        }
    }
    Ok(Some(ChoiceSpread {
        var: (var.len(), lift.len()),
        var_bar: (hs.len(), lift_bar.len(), lift_w.len()),
        bijections_hold: ok,
        ambient: cls.group.clone(),
        image,
        spread,
    }))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lambda_abx(ring: Ring) -> Dga {
        Dga::exterior(ring, &[("a", 1), ("b", 1), ("x", 1)], &[("x", vec![(vec!["a", "b"], 1)])]).unwrap()
    }

    #[test]
    fn exterior_algebra_axioms() {
        for ring in [Ring::PrimeField(2), Ring::PrimeField(3), Ring::Integers] {
            let a = lambda_abx(ring);
            assert_eq!(a.dim(), 8);
            let ab = a.element(&[("ab", 1)]).unwrap();
            assert_eq!(a.d(&a.element(&[("x", 1)]).unwrap()), ab);
            let (ea, eb) = (a.element(&[("a", 1)]).unwrap(), a.element(&[("b", 1)]).unwrap());
            assert_eq!(a.mul(&eb, &ea), a.scale(&ab, &BigInt::from(-1)));
            assert!(a.mul(&ea, &ea).is_zero());
        }
    }

    #[test]
    fn massey_pipeline_verdicts() {
        let a = lambda_abx(Ring::PrimeField(2));
        let e = |n: &str| a.element(&[(n, 1)]).unwrap();
        for (third, want) in [("b", Verdict::Obstructed), ("a", Verdict::Vanishes)] {
            let rep = massey_pipeline(&a, &e("a"), &e("b"), &e(third), &pointed_opts()).unwrap();
            assert_eq!((rep.verdict, rep.oracle), (want, Some(want)));
        }
    }

    fn arc(c: ChainComplex) -> Complex {
        Arc::new(c)
    }

    fn single(src: &Complex, dst: &Complex, n: i64, x: i64) -> ChainMap {
        let ring = src.ring();
        ChainMap::new(src, dst, [(n, ExactMatrix::from_i64(ring, 1, 1, &[x]))].into()).unwrap()
    }

    /// `S⁰ −(c·2)→ S⁰ −i→ M(2) −e→ S¹` over `Z`.
    fn moore_maps(c: i64, e: i64) -> Vec<ChainMap> {
        let z = Ring::Integers;
        let s0 = arc(ChainComplex::sphere(z, 0));
        let m2 = arc(ChainComplex::moore(z, 2, 0));
        let s1 = arc(ChainComplex::sphere(z, 1));
        vec![single(&s0, &s0, 0, 2 * c), single(&s0, &m2, 0, 1), single(&m2, &s1, 1, e)]
    }

    fn pointed_opts() -> RectifyOptions {
        RectifyOptions { pointed: true, check_oracle: true, ..Default::default() }
    }

    #[test]
    fn massey_aab_is_essential_without_indeterminacy() {
        let a = lambda_abx(Ring::PrimeField(2));
        let e = |n: &str| a.element(&[(n, 1)]).unwrap();
        let m = massey3(&a, &e("a"), &e("b"), &e("b"), Some(&pointed_opts())).unwrap();
        assert_eq!(m.degree, 2);
        assert_eq!(m.value.verdict, Verdict::Obstructed);
        assert!(m.value.has_zero_indeterminacy());
        assert!(m.pipeline.is_some());
        let set = massey_enumerate(&a, &e("a"), &e("b"), &e("b"), 1 << 12).unwrap().unwrap();
        assert_eq!(set, m.value.enumerate(1 << 12).unwrap());
        assert_eq!(set.len(), 1);
    }

    #[test]
    fn massey_aba_vanishes() {
        let a = lambda_abx(Ring::PrimeField(2));
        let e = |n: &str| a.element(&[(n, 1)]).unwrap();
        let m = massey3(&a, &e("a"), &e("b"), &e("a"), Some(&pointed_opts())).unwrap();
        assert_eq!(m.value.verdict, Verdict::Vanishes);
        let set = massey_enumerate(&a, &e("a"), &e("b"), &e("a"), 1 << 12).unwrap().unwrap();
        assert!(m.value.is_closed(&set));
        assert_eq!(set, m.value.enumerate(1 << 12).unwrap());
    }

    #[test]
    fn massey_rejects_essential_products() {
        let a = Dga::exterior(Ring::PrimeField(3), &[("a", 1), ("b", 1)], &[]).unwrap();
        let e = |n: &str| a.element(&[(n, 1)]).unwrap();
        assert!(matches!(massey3(&a, &e("a"), &e("b"), &e("a"), None), Err(BracketError::NotNull(_))));
    }

    #[test]
    fn moore_bracket_fixed_and_union() {
        for e in 0..4i64 {
            let maps = moore_maps(1, e);
            let h = toda_diagram(&maps).unwrap();
            let t = toda3_right(&h, &pointed_opts()).unwrap();
            assert_eq!(t.fixed.quotient.describe(), "Z");
            assert_eq!(t.fixed.residue()[0].magnitude(), BigInt::from(e).magnitude());
            // h^#[S⁰, S⁰] = 2Z, and [S⁰, Ω′M(2)] = 0
            assert_eq!(t.union.quotient.describe(), "Z/2");
            assert_eq!(t.union.verdict == Verdict::Vanishes, e % 2 == 0);
            let chain = toda_cochain_value(&maps[2], &maps[1], &maps[0]).unwrap();
            assert!(t.union.contains(&homotopy_classes(&maps[0].src, &chain.dst).unwrap().hom.map_vector(&chain)));
            let left = toda3_left(&maps[2], &maps[1], &maps[0]).unwrap();
            assert!(left.value.same_coset(&t.union));
        }
    }

    #[test]
    fn toda_rejects_essential_composites() {
        let z = Ring::Integers;
        let s0 = arc(ChainComplex::sphere(z, 0));
        let id = ChainMap::identity(&s0);
        assert!(matches!(toda3_left(&id, &id, &id), Err(BracketError::NotNull(_))));
        assert!(toda_cochain_value(&id, &id, &id).is_none());
        assert!(toda_diagram(std::slice::from_ref(&id)).is_err());
    }

    #[test]
    fn left_and_right_agree_on_random_fp_chains() {
        use crate::random::{Sampler, ShapeKind};
        let j = ShapeKind::Toda(3).lattice();
        let mut seen = 0;
        for seed in 0..40u64 {
            let ring = Ring::PrimeField(if seed % 2 == 0 { 2 } else { 3 });
            let h = Sampler::new(seed, ring).ho_diagram(&j, true).unwrap();
            let maps = toda_maps(&h).unwrap();
            let right = toda3_right(&h, &pointed_opts()).unwrap();
            let left = toda3_left(&maps[2], &maps[1], &maps[0]).unwrap();
            assert!(left.value.same_coset(&right.union), "seed {seed}");
            if let (Some(l), Some(r)) =
                (toda3_left_enumerate(&maps[2], &maps[1], &maps[0], 1 << 12).unwrap(), right.union.enumerate(1 << 12))
            {
                assert_eq!(l, r, "seed {seed}");
                seen += 1;
            }
        }
        assert!(seen > 10);
    }

    #[test]
    fn long_bracket_on_four_maps() {
        use crate::random::{Sampler, ShapeKind};
        let j = ShapeKind::Toda(4).lattice();
        let mut separated = 0;
        for seed in 0..12u64 {
            let h = Sampler::new(seed, Ring::PrimeField(2)).ho_diagram(&j, true).unwrap();
            let out = toda_long(&h, &pointed_opts()).unwrap();
            if out.earlier.is_none() && out.total.is_some() {
                assert_eq!(out.separated.len(), 2);
                assert!(out.loops.iter().all(|l| l.holds));
                separated += 1;
            }
        }
        assert!(separated > 0);
    }

    #[test]
    fn long_bracket_at_three_matches_right_bracket() {
        for e in 0..3i64 {
            let h = toda_diagram(&moore_maps(1, e)).unwrap();
            let long = toda_long(&h, &pointed_opts()).unwrap();
            let right = toda3_right(&h, &pointed_opts()).unwrap();
            assert_eq!(long.verdict(), right.verdict());
        }
    }

    #[test]
    fn choice_spread_trivial_cases() {
        let f2 = Ring::PrimeField(2);
        let s0 = arc(ChainComplex::sphere(f2, 0));
        let zero = arc(ChainComplex::graded(f2, &BTreeMap::new()));
        let id = ChainMap::identity(&s0);
        let w = pullback(&id, &id);
        // T = 0
        let theta = ChainMap::zero(&zero, &w.obj);
        let c = choice_spread(&w, &theta, 1 << 10).unwrap().unwrap();
        assert!(c.bijections_hold);
        assert_eq!(c.image, c.spread);
        assert_eq!(c.image.len(), 1);
        // u injective: Var_u(φ) = {φ}
        let theta = w.factor(&id, &id).unwrap();
        let c = choice_spread(&w, &theta, 1 << 10).unwrap().unwrap();
        assert!(c.bijections_hold);
        assert_eq!(c.var, (1, 1));
        assert_eq!(c.image, c.spread);
        // no enumeration over Z
        let z0 = arc(ChainComplex::sphere(Ring::Integers, 0));
        let zid = ChainMap::identity(&z0);
        let wz = pullback(&zid, &zid);
        assert!(choice_spread(&wz, &wz.factor(&zid, &zid).unwrap(), 10).unwrap().is_none());
    }

    #[test]
    fn choice_spread_on_toda_grid() {
        use crate::random::{Sampler, ShapeKind};
        let j = ShapeKind::Toda(3).lattice();
        let mut checked = 0;
        for seed in 0..30u64 {
            let h = Sampler::new(seed, Ring::PrimeField(2)).ho_diagram(&j, true).unwrap();
            let right = toda3_right(&h, &pointed_opts()).unwrap();
            let grid = &right.report.grid;
            if let Some(c) = choice_spread(&grid.f2, &right.report.theta, 1 << 12).unwrap() {
                assert!(c.bijections_hold, "seed {seed}");
                assert_eq!(c.image, c.spread, "seed {seed}");
                checked += 1;
            }
        }
        assert!(checked > 0);
    }
}
