//! Finite indexing categories presented by generating arrows and relations.
//!
//! Words are sequences of arrow indices in path order: `[a, b]` means "first
//! `a`, then `b`", i.e. the composite `b ∘ a`. Every generating arrow must
//! strictly lower the degree, so the set of paths out of any object is finite
//! and hom-sets are computed by enumerating all paths and closing under the
//! relations with a union-find.

use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
pub struct ObjectSpec {
    pub name: String,
    pub degree: u32,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
pub struct ArrowSpec {
    pub src: String,
    pub dst: String,
    pub label: String,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub ideal: bool,
}

/// Raw category description, as found in input files.
#[derive(Clone, Debug, Default, Serialize, Deserialize, PartialEq, Eq)]
pub struct CategorySpec {
    pub objects: Vec<ObjectSpec>,
    #[serde(default)]
    pub arrows: Vec<ArrowSpec>,
    /// Pairs of equal words (labels in path order).
    #[serde(default)]
    pub relations: Vec<(Vec<String>, Vec<String>)>,
    /// Composite morphisms in the ideal, besides the flagged arrows.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub ideal_words: Vec<Vec<String>>,
    #[serde(default)]
    pub pointed: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Diagnostic {
    DuplicateObject(String),
    DuplicateArrow(String),
    UnknownObject(String),
    UnknownArrow(String),
    /// Arrow label, source degree, target degree.
    Degree(String, u32, u32),
    NotComposable(String),
    RelationEndpoints(String),
    Disconnected(String),
    NoDegreeZero(String),
    EmptyIdealWord,
    IdealWithoutPointing,
    /// Composite `f ∘ g` outside the ideal although one factor is inside.
    NonAbsorbing {
        first: String,
        second: String,
    },
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Diagnostic::DuplicateObject(o) => write!(f, "duplicate object `{}`", o),
            Diagnostic::DuplicateArrow(a) => write!(f, "duplicate arrow label `{}`", a),
            Diagnostic::UnknownObject(o) => write!(f, "unknown object `{}`", o),
            Diagnostic::UnknownArrow(a) => write!(f, "unknown arrow `{}`", a),
            Diagnostic::Degree(a, s, t) => {
                write!(f, "degree: arrow `{}` goes from degree {} to degree {}", a, s, t)
            }
            Diagnostic::NotComposable(w) => write!(f, "word {} is not a path", w),
            Diagnostic::RelationEndpoints(w) => write!(f, "relation {} relates paths with different ends", w),
            Diagnostic::Disconnected(o) => write!(f, "category is not connected: `{}` unreachable", o),
            Diagnostic::NoDegreeZero(o) => write!(f, "object `{}` maps to no object of degree 0", o),
            Diagnostic::EmptyIdealWord => write!(f, "identity listed in the ideal"),
            Diagnostic::IdealWithoutPointing => write!(f, "ideal given for an unpointed category"),
            Diagnostic::NonAbsorbing { first, second } => {
                write!(f, "ideal is not absorbing: {} then {} leaves the ideal", first, second)
            }
        }
    }
}

/// A morphism: `idx` indexes the hom-set `src → dst` in normal-form order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Mor {
    pub src: usize,
    pub dst: usize,
    pub idx: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MorData {
    /// Normal form: shortest, then lexicographically smallest, representing path.
    pub word: Vec<usize>,
    pub ideal: bool,
}

#[derive(Clone, Debug)]
pub struct Arrow {
    pub src: usize,
    pub dst: usize,
    pub label: String,
    pub ideal: bool,
}

/// A validated weak lattice with all hom-sets computed.
#[derive(Clone, Debug)]
pub struct WeakLattice {
    names: Vec<String>,
    degrees: Vec<u32>,
    arrows: Vec<Arrow>,
    relations: Vec<(Vec<usize>, Vec<usize>)>,
    pointed: bool,
    homs: Vec<Vec<Vec<MorData>>>,
    path_class: HashMap<Vec<usize>, Mor>,
    spec: CategorySpec,
}

struct UnionFind(Vec<usize>);

impl UnionFind {
    fn find(&mut self, i: usize) -> usize {
        let mut r = i;
        while self.0[r] != r {
            r = self.0[r];
        }
        let mut j = i;
        while self.0[j] != r {
            let n = self.0[j];
            self.0[j] = r;
            j = n;
        }
        r
    }
    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            let (lo, hi) = (ra.min(rb), ra.max(rb));
            self.0[hi] = lo;
        }
    }
}

fn word_key(w: &[usize]) -> (usize, &[usize]) {
    (w.len(), w)
}

/// All checks that do not need hom-sets, plus the resolved words.
struct Parsed {
    names: Vec<String>,
    degrees: Vec<u32>,
    arrows: Vec<Arrow>,
    relations: Vec<(Vec<usize>, Vec<usize>)>,
    ideal_words: Vec<Vec<usize>>,
}

fn parse(spec: &CategorySpec, diags: &mut Vec<Diagnostic>) -> Option<Parsed> {
    let mut index: BTreeMap<&str, usize> = BTreeMap::new();
    for (i, o) in spec.objects.iter().enumerate() {
        if index.insert(&o.name, i).is_some() {
            diags.push(Diagnostic::DuplicateObject(o.name.clone()));
        }
    }
    let degrees: Vec<u32> = spec.objects.iter().map(|o| o.degree).collect();
    let mut labels: BTreeMap<&str, usize> = BTreeMap::new();
    let mut arrows = vec![];
    let mut ok = true;
    for a in &spec.arrows {
        let (s, t) = match (index.get(a.src.as_str()), index.get(a.dst.as_str())) {
            (Some(s), Some(t)) => (*s, *t),
            (s, _) => {
                let missing = if s.is_none() { &a.src } else { &a.dst };
                diags.push(Diagnostic::UnknownObject(missing.clone()));
                ok = false;
                continue;
            }
        };
        if labels.insert(&a.label, arrows.len()).is_some() {
            diags.push(Diagnostic::DuplicateArrow(a.label.clone()));
            ok = false;
        }
        if degrees[t] >= degrees[s] {
            diags.push(Diagnostic::Degree(a.label.clone(), degrees[s], degrees[t]));
            ok = false;
        }
        if a.ideal && !spec.pointed {
            diags.push(Diagnostic::IdealWithoutPointing);
        }
        arrows.push(Arrow { src: s, dst: t, label: a.label.clone(), ideal: a.ideal });
    }
    let resolve = |w: &[String], diags: &mut Vec<Diagnostic>| -> Option<Vec<usize>> {
        let mut out = vec![];
        for l in w {
            match labels.get(l.as_str()) {
                Some(i) => out.push(*i),
                None => {
                    diags.push(Diagnostic::UnknownArrow(l.clone()));
                    return None;
                }
            }
        }
        for p in out.windows(2) {
            if arrows[p[0]].dst != arrows[p[1]].src {
                diags.push(Diagnostic::NotComposable(format!("{:?}", w)));
                return None;
            }
        }
        Some(out)
    };
    let mut relations = vec![];
    for (l, r) in &spec.relations {
        let (Some(a), Some(b)) = (resolve(l, diags), resolve(r, diags)) else {
            ok = false;
            continue;
        };
        let ends = |w: &[usize]| (arrows[w[0]].src, arrows[*w.last().unwrap()].dst);
        if a.is_empty() || b.is_empty() || ends(&a) != ends(&b) {
            diags.push(Diagnostic::RelationEndpoints(format!("{:?} = {:?}", l, r)));
            ok = false;
            continue;
        }
        relations.push((a, b));
    }
    let mut ideal_words = vec![];
    for w in &spec.ideal_words {
        if !spec.pointed {
            diags.push(Diagnostic::IdealWithoutPointing);
        }
        match resolve(w, diags) {
            Some(v) if v.is_empty() => {
                diags.push(Diagnostic::EmptyIdealWord);
                ok = false;
            }
            Some(v) => ideal_words.push(v),
            None => ok = false,
        }
    }
    // connectivity of the underlying graph
    if !spec.objects.is_empty() {
        let n = spec.objects.len();
        let mut uf = UnionFind((0..n).collect());
        for a in &arrows {
            uf.union(a.src, a.dst);
        }
        for (i, o) in spec.objects.iter().enumerate() {
            if uf.find(i) != uf.find(0) {
                diags.push(Diagnostic::Disconnected(o.name.clone()));
            }
        }
    }
    if !ok {
        return None;
    }
    // every object reaches degree 0 (well-founded since degrees strictly drop)
    let n = degrees.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by_key(|&i| degrees[i]);
    let mut reaches = vec![false; n];
    for &i in &order {
        reaches[i] = degrees[i] == 0 || arrows.iter().any(|a| a.src == i && reaches[a.dst]);
        if !reaches[i] {
            diags.push(Diagnostic::NoDegreeZero(spec.objects[i].name.clone()));
        }
    }
    Some(Parsed {
        names: spec.objects.iter().map(|o| o.name.clone()).collect(),
        degrees,
        arrows,
        relations,
        ideal_words,
    })
}

/// Structural diagnostics for a category description; empty iff valid.
pub fn validate(spec: &CategorySpec) -> Vec<Diagnostic> {
    match WeakLattice::compile(spec) {
        Ok(_) => vec![],
        Err(d) => d,
    }
}

impl WeakLattice {
    pub fn compile(spec: &CategorySpec) -> Result<Self, Vec<Diagnostic>> {
        let mut diags = vec![];
        let parsed = parse(spec, &mut diags);
        let (Some(p), true) = (parsed, diags.is_empty()) else {
            diags.sort();
            diags.dedup();
            return Err(diags);
        };
        let n = p.names.len();
        // enumerate all nonempty paths
        let mut out_arrows: Vec<Vec<usize>> = vec![vec![]; n];
        for (i, a) in p.arrows.iter().enumerate() {
            out_arrows[a.src].push(i);
        }
        let mut paths: Vec<Vec<usize>> = vec![];
        let mut stack: Vec<Vec<usize>> = out_arrows.iter().flatten().map(|&a| vec![a]).collect();
        while let Some(w) = stack.pop() {
            let end = p.arrows[*w.last().unwrap()].dst;
            for &a in &out_arrows[end] {
                let mut w2 = w.clone();
                w2.push(a);
                stack.push(w2);
            }
            paths.push(w);
        }
        paths.sort_by(|a, b| word_key(a).cmp(&word_key(b)));
        let id_of: HashMap<Vec<usize>, usize> = paths.iter().enumerate().map(|(i, w)| (w.clone(), i)).collect();
        let mut uf = UnionFind((0..paths.len()).collect());
        for (i, w) in paths.iter().enumerate() {
            for (l, r) in &p.relations {
                for (from, to) in [(l, r), (r, l)] {
                    if from.len() > w.len() {
                        continue;
                    }
                    for start in 0..=(w.len() - from.len()) {
                        if &w[start..start + from.len()] == from.as_slice() {
                            let mut w2 = w[..start].to_vec();
                            w2.extend_from_slice(to);
                            w2.extend_from_slice(&w[start + from.len()..]);
                            uf.union(i, id_of[&w2]);
                        }
                    }
                }
            }
        }
        // classes: representative = smallest path index = normal form (paths are sorted)
        let ends = |w: &[usize]| (p.arrows[w[0]].src, p.arrows[*w.last().unwrap()].dst);
        let mut homs: Vec<Vec<Vec<MorData>>> = vec![vec![vec![]; n]; n];
        let mut rep_to_mor: HashMap<usize, Mor> = HashMap::new();
        for x in 0..n {
            homs[x][x].push(MorData { word: vec![], ideal: false });
        }
        for (i, w) in paths.iter().enumerate() {
            let r = uf.find(i);
            if r == i {
                let (s, t) = ends(w);
                let m = Mor { src: s, dst: t, idx: homs[s][t].len() };
                homs[s][t].push(MorData { word: w.clone(), ideal: false });
                rep_to_mor.insert(r, m);
            }
        }
        let mut path_class: HashMap<Vec<usize>, Mor> = HashMap::new();
        for (i, w) in paths.iter().enumerate() {
            let r = uf.find(i);
            path_class.insert(w.clone(), rep_to_mor[&r]);
        }
        for x in 0..n {
            path_class.insert(identity_key(x), Mor { src: x, dst: x, idx: 0 });
        }
        let mut lat = WeakLattice {
            names: p.names,
            degrees: p.degrees,
            arrows: p.arrows,
            relations: p.relations,
            pointed: spec.pointed,
            homs,
            path_class,
            spec: spec.clone(),
        };
        // declared ideal, then the absorption check
        let mut declared: BTreeSet<Mor> = BTreeSet::new();
        for (i, a) in lat.arrows.iter().enumerate() {
            if a.ideal {
                declared.insert(lat.class_of_path(&[i]));
            }
        }
        for w in &p.ideal_words {
            declared.insert(lat.class_of_path(w));
        }
        for m in &declared {
            lat.homs[m.src][m.dst][m.idx].ideal = true;
        }
        let mut diags = vec![];
        for g in lat.all_morphisms() {
            for f in lat.morphisms_from(g.dst) {
                let fg = lat.compose(f, g);
                if (lat.is_ideal(f) || lat.is_ideal(g)) && !lat.is_ideal(fg) {
                    diags.push(Diagnostic::NonAbsorbing { first: lat.describe(g), second: lat.describe(f) });
                }
            }
        }
        if diags.is_empty() {
            Ok(lat)
        } else {
            diags.sort();
            diags.dedup();
            Err(diags)
        }
    }

    /// The smallest ideal containing the given arrows and words, as words in
    /// normal form; useful when writing category files by hand.
    pub fn ideal_closure(spec: &CategorySpec) -> Result<Vec<Vec<String>>, Vec<Diagnostic>> {
        let mut open = spec.clone();
        let gens = open.ideal_words.clone();
        open.ideal_words.clear();
        let flagged: Vec<String> = open.arrows.iter().filter(|a| a.ideal).map(|a| a.label.clone()).collect();
        for a in open.arrows.iter_mut() {
            a.ideal = false;
        }
        let lat = WeakLattice::compile(&open)?;
        let mut seeds: BTreeSet<Mor> = BTreeSet::new();
        for l in &flagged {
            seeds.insert(lat.word_class(std::slice::from_ref(l)).expect("declared arrow"));
        }
        for w in &gens {
            seeds.insert(lat.word_class(w).expect("declared word"));
        }
        let mut ideal = seeds.clone();
        loop {
            let mut grown = ideal.clone();
            for &m in &ideal {
                for a in lat.morphisms_to(m.src) {
                    grown.insert(lat.compose(m, a));
                }
                for b in lat.morphisms_from(m.dst) {
                    grown.insert(lat.compose(b, m));
                }
            }
            if grown == ideal {
                break;
            }
            ideal = grown;
        }
        Ok(ideal.into_iter().map(|m| lat.word_labels(m)).collect())
    }

    pub fn spec(&self) -> &CategorySpec {
        &self.spec
    }

    pub fn num_objects(&self) -> usize {
        self.names.len()
    }

    pub fn name(&self, x: usize) -> &str {
        &self.names[x]
    }

    pub fn object(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn degree(&self, x: usize) -> u32 {
        self.degrees[x]
    }

    pub fn max_degree(&self) -> u32 {
        self.degrees.iter().copied().max().unwrap_or(0)
    }

    pub fn is_pointed(&self) -> bool {
        self.pointed
    }

    pub fn arrows(&self) -> &[Arrow] {
        &self.arrows
    }

    pub fn relations(&self) -> &[(Vec<usize>, Vec<usize>)] {
        &self.relations
    }

    pub fn arrow_by_label(&self, label: &str) -> Option<usize> {
        self.arrows.iter().position(|a| a.label == label)
    }

    pub fn identity(&self, x: usize) -> Mor {
        Mor { src: x, dst: x, idx: 0 }
    }

    pub fn is_identity(&self, m: Mor) -> bool {
        m.src == m.dst
    }

    /// The morphism represented by a generating arrow.
    pub fn arrow_mor(&self, a: usize) -> Mor {
        self.class_of_path(&[a])
    }

    fn class_of_path(&self, w: &[usize]) -> Mor {
        self.path_class[w]
    }

    /// Class of a word given by labels; `None` if it is not a path.
    pub fn word_class(&self, labels: &[String]) -> Option<Mor> {
        let mut w = vec![];
        for l in labels {
            w.push(self.arrow_by_label(l)?);
        }
        if w.is_empty() {
            return None;
        }
        self.path_class.get(&w).copied()
    }

    pub fn data(&self, m: Mor) -> &MorData {
        &self.homs[m.src][m.dst][m.idx]
    }

    pub fn is_ideal(&self, m: Mor) -> bool {
        self.data(m).ideal
    }

    pub fn word_labels(&self, m: Mor) -> Vec<String> {
        self.data(m).word.iter().map(|&a| self.arrows[a].label.clone()).collect()
    }

    /// `id_x` or `a.b.c` (path order).
    pub fn describe(&self, m: Mor) -> String {
        if self.is_identity(m) {
            format!("id_{}", self.names[m.src])
        } else {
            self.word_labels(m).join(".")
        }
    }

    pub fn hom(&self, x: usize, t: usize) -> Vec<Mor> {
        (0..self.homs[x][t].len()).map(|idx| Mor { src: x, dst: t, idx }).collect()
    }

    pub fn hom_data(&self, x: usize, t: usize) -> &[MorData] {
        &self.homs[x][t]
    }

    /// Non-identity morphisms out of `x`, ordered by (target index, normal form).
    pub fn morphisms_from(&self, x: usize) -> Vec<Mor> {
        (0..self.num_objects()).filter(|&t| t != x).flat_map(|t| self.hom(x, t)).collect()
    }

    pub fn morphisms_to(&self, t: usize) -> Vec<Mor> {
        (0..self.num_objects()).filter(|&x| x != t).flat_map(|x| self.hom(x, t)).collect()
    }

    pub fn all_morphisms(&self) -> Vec<Mor> {
        (0..self.num_objects()).flat_map(|x| (0..self.num_objects()).flat_map(move |t| self.hom(x, t))).collect()
    }

    /// `f ∘ g`: first `g`, then `f`.
    pub fn compose(&self, f: Mor, g: Mor) -> Mor {
        assert_eq!(g.dst, f.src, "composition of non-composable morphisms");
        if self.is_identity(g) {
            return f;
        }
        if self.is_identity(f) {
            return g;
        }
        let mut w = self.data(g).word.clone();
        w.extend_from_slice(&self.data(f).word);
        self.class_of_path(&w)
    }

    /// Generating arrows out of an object.
    pub fn arrows_from(&self, s: usize) -> Vec<usize> {
        (0..self.arrows.len()).filter(|&a| self.arrows[a].src == s).collect()
    }

    /// Objects by increasing degree, ties in input order.
    pub fn objects_by_degree(&self) -> Vec<usize> {
        let mut v: Vec<usize> = (0..self.num_objects()).collect();
        v.sort_by_key(|&i| (self.degrees[i], i));
        v
    }

    pub fn objects_of_degree(&self, d: u32) -> Vec<usize> {
        (0..self.num_objects()).filter(|&i| self.degrees[i] == d).collect()
    }

    /// Non-identity morphisms `x → t` with `|t| ≤ k`, optionally only non-ideal ones.
    pub fn morphisms_below(&self, x: usize, k: u32, skip_ideal: bool) -> Vec<Mor> {
        self.morphisms_from(x)
            .into_iter()
            .filter(|m| self.degrees[m.dst] <= k && !(skip_ideal && self.is_ideal(*m)))
            .collect()
    }

    pub fn morphisms_at(&self, x: usize, k: u32, skip_ideal: bool) -> Vec<Mor> {
        self.morphisms_from(x)
            .into_iter()
            .filter(|m| self.degrees[m.dst] == k && !(skip_ideal && self.is_ideal(*m)))
            .collect()
    }
}

fn identity_key(x: usize) -> Vec<usize> {
    // never a valid path: paths are nonempty
    vec![usize::MAX, x]
}

pub fn hom_set(j: &WeakLattice, x: usize, t: usize) -> Vec<Mor> {
    j.hom(x, t)
}

/// The four full subcategories attached to `x` and `k`, as sorted object lists.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Subcategories {
    pub j_k: Vec<usize>,
    pub j_x: Vec<usize>,
    pub j_x_k: Vec<usize>,
    pub boundary_j_x_k: Vec<usize>,
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum IndexError {
    #[error("object degree {0} must exceed k = {1}")]
    DegreeTooLow(u32, u32),
    #[error("category is not pointed")]
    Unpointed,
}

pub fn subcategories(j: &WeakLattice, x: usize, k: u32) -> Result<Subcategories, IndexError> {
    if j.degree(x) <= k {
        return Err(IndexError::DegreeTooLow(j.degree(x), k));
    }
    let n = j.num_objects();
    let j_k: Vec<usize> = (0..n).filter(|&t| j.degree(t) <= k).collect();
    let j_x: Vec<usize> = (0..n).filter(|&t| !j.hom(x, t).is_empty()).collect();
    let j_x_k: Vec<usize> = j_x.iter().copied().filter(|&t| t == x || j.degree(t) <= k).collect();
    let boundary_j_x_k = j_x_k.iter().copied().filter(|&t| t != x).collect();
    Ok(Subcategories { j_k, j_x, j_x_k, boundary_j_x_k })
}

/// Arrow of the comma category: `f: g.dst → h.dst` with `f ∘ g = h`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CommaArrow {
    pub from: usize,
    pub to: usize,
    pub f: Mor,
    /// `f` is a generating arrow; these suffice to impose the limit conditions.
    pub generator: bool,
}

#[derive(Clone, Debug)]
pub struct CommaCategory {
    pub x: usize,
    pub k: u32,
    /// Morphisms `x → t` with `|t| ≤ k`, ordered by (target index, normal form).
    pub objects: Vec<Mor>,
    pub arrows: Vec<CommaArrow>,
}

pub fn comma_category(j: &WeakLattice, x: usize, k: u32) -> Result<CommaCategory, IndexError> {
    comma_category_filtered(j, x, k, false)
}

/// Comma category, optionally restricted to non-ideal morphisms.
pub fn comma_category_filtered(
    j: &WeakLattice,
    x: usize,
    k: u32,
    skip_ideal: bool,
) -> Result<CommaCategory, IndexError> {
    if j.degree(x) <= k {
        return Err(IndexError::DegreeTooLow(j.degree(x), k));
    }
    let objects = j.morphisms_below(x, k, skip_ideal);
    let pos: HashMap<Mor, usize> = objects.iter().enumerate().map(|(i, m)| (*m, i)).collect();
    let mut arrows = vec![];
    for (i, g) in objects.iter().enumerate() {
        for f in j.morphisms_from(g.dst) {
            let h = j.compose(f, *g);
            if let Some(&to) = pos.get(&h) {
                let generator = j.data(f).word.len() == 1;
                arrows.push(CommaArrow { from: i, to, f, generator });
            }
        }
    }
    Ok(CommaCategory { x, k, objects, arrows })
}

pub fn is_fully_reduced(j: &WeakLattice) -> Result<bool, IndexError> {
    if !j.is_pointed() {
        return Err(IndexError::Unpointed);
    }
    Ok(j.all_morphisms().into_iter().all(|m| j.degree(m.src) < j.degree(m.dst) + 2 || j.is_ideal(m)))
}

fn obj(name: &str, degree: u32) -> ObjectSpec {
    ObjectSpec { name: name.into(), degree }
}

fn arr(src: &str, dst: &str, label: &str, ideal: bool) -> ArrowSpec {
    ArrowSpec { src: src.into(), dst: dst.into(), label: label.into(), ideal }
}

fn words(ws: &[&[&str]]) -> Vec<Vec<String>> {
    ws.iter().map(|w| w.iter().map(|s| s.to_string()).collect()).collect()
}

fn rel(l: &[&str], r: &[&str]) -> (Vec<String>, Vec<String>) {
    (l.iter().map(|s| s.to_string()).collect(), r.iter().map(|s| s.to_string()).collect())
}

/// The pointed chain `n → n−1 → … → 0`; composites of length ≥ 2 form the ideal.
pub fn toda_chain(n: u32) -> CategorySpec {
    let objects = (0..=n).rev().map(|i| obj(&i.to_string(), i)).collect();
    let label = |i: u32| format!("f{}", i);
    let arrows = (1..=n).rev().map(|i| arr(&i.to_string(), &(i - 1).to_string(), &label(i), false)).collect();
    let mut ideal_words = vec![];
    for top in (2..=n).rev() {
        for bottom in (0..=top - 2).rev() {
            ideal_words.push(((bottom + 1)..=top).rev().map(label).collect());
        }
    }
    CategorySpec { objects, arrows, relations: vec![], ideal_words, pointed: true }
}

/// Objects `n, …, 0` with face maps `d_i: m → m−1` (`0 ≤ i ≤ m`) subject to
/// `d_i d_j = d_{j−1} d_i` for `i < j`.
pub fn delta_truncated(n: u32) -> CategorySpec {
    let objects = (0..=n).rev().map(|i| obj(&i.to_string(), i)).collect();
    let label = |m: u32, i: u32| format!("d{}_{}", i, m);
    let mut arrows = vec![];
    for m in (1..=n).rev() {
        for i in 0..=m {
            arrows.push(arr(&m.to_string(), &(m - 1).to_string(), &label(m, i), false));
        }
    }
    let mut relations = vec![];
    for m in (2..=n).rev() {
        for j in 1..=m {
            for i in 0..j {
                // d_i ∘ d_j = d_{j−1} ∘ d_i, in path order
                relations.push((vec![label(m, j), label(m - 1, i)], vec![label(m, i), label(m - 1, j - 1)]));
            }
        }
    }
    CategorySpec { objects, arrows, relations, ideal_words: vec![], pointed: false }
}

/// Two stacked commuting diamonds over `x` (degrees 3, 2, 1, 0).
pub fn double_diamond() -> CategorySpec {
    CategorySpec {
        objects: vec![
            obj("x", 3),
            obj("a", 2),
            obj("b", 2),
            obj("u", 1),
            obj("v", 1),
            obj("w", 1),
            obj("s", 0),
            obj("t", 0),
        ],
        arrows: vec![
            arr("x", "a", "xa", false),
            arr("x", "b", "xb", false),
            arr("a", "u", "au", false),
            arr("a", "v", "av", false),
            arr("b", "v", "bv", false),
            arr("b", "w", "bw", false),
            arr("u", "s", "us", false),
            arr("v", "s", "vs", false),
            arr("v", "t", "vt", false),
            arr("w", "t", "wt", false),
        ],
        relations: vec![
            rel(&["xa", "av"], &["xb", "bv"]),
            rel(&["au", "us"], &["av", "vs"]),
            rel(&["bv", "vt"], &["bw", "wt"]),
        ],
        ideal_words: vec![],
        pointed: false,
    }
}

/// The pointed shape carrying a triple product: `g → f → {c, d} → {b, e} → a`.
///
/// `c → b` and `d → e` force `c, d` one degree above `b, e`, so the degrees
/// are `g 4, f 3, c d 2, b e 1, a 0`.
/// Solid: `G: g→f`, `fb, fc, fd, fe`, `cb: c→b`, `de: d→e`, `ca, da`.
/// Ideal: `ba, ea`, and the composites through them, plus `G.fb` and `G.fe`.
/// The inner square `fc.ca = fd.da` and the outer one `fb.ba = fe.ea` commute.
pub fn massey_shape() -> CategorySpec {
    let mut spec = CategorySpec {
        objects: vec![obj("g", 4), obj("f", 3), obj("b", 1), obj("c", 2), obj("d", 2), obj("e", 1), obj("a", 0)],
        arrows: vec![
            arr("g", "f", "G", false),
            arr("f", "b", "fb", false),
            arr("f", "c", "fc", false),
            arr("f", "d", "fd", false),
            arr("f", "e", "fe", false),
            arr("c", "b", "cb", false),
            arr("d", "e", "de", false),
            arr("c", "a", "ca", false),
            arr("d", "a", "da", false),
            arr("b", "a", "ba", true),
            arr("e", "a", "ea", true),
        ],
        relations: vec![
            rel(&["fc", "cb"], &["fb"]),
            rel(&["fd", "de"], &["fe"]),
            rel(&["fc", "ca"], &["fd", "da"]),
            rel(&["fb", "ba"], &["fe", "ea"]),
        ],
        ideal_words: words(&[&["G", "fb"], &["G", "fe"]]),
        pointed: true,
    };
    spec.ideal_words = WeakLattice::ideal_closure(&spec).expect("well-formed shape");
    spec.ideal_words.retain(|w| w.len() > 1);
    spec
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lat(spec: &CategorySpec) -> WeakLattice {
        WeakLattice::compile(spec).unwrap()
    }

    #[test]
    fn double_diamond_is_valid_and_collapses() {
        let j = lat(&double_diamond());
        let (x, s, t) = (j.object("x").unwrap(), j.object("s").unwrap(), j.object("t").unwrap());
        assert_eq!(j.hom(x, s).len(), 1);
        assert_eq!(j.hom(x, t).len(), 1);
        assert_eq!(j.hom(x, x).len(), 1);
        let sub = subcategories(&j, x, 0).unwrap();
        assert_eq!(sub.boundary_j_x_k, vec![s, t]);
        let sub2 = subcategories(&j, x, 2).unwrap();
        assert_eq!(sub2.j_x_k, (0..8).collect::<Vec<_>>());
        assert!(subcategories(&j, x, 3).is_err());
    }

    #[test]
    fn comma_categories_of_double_diamond() {
        let j = lat(&double_diamond());
        let x = j.object("x").unwrap();
        let c0 = comma_category(&j, x, 0).unwrap();
        assert_eq!(c0.objects.len(), 2);
        assert!(c0.arrows.is_empty());
        let c1 = comma_category(&j, x, 1).unwrap();
        assert_eq!(c1.objects.len(), 5);
        assert_eq!(c1.arrows.len(), 4);
        for a in &c1.arrows {
            let tgt = c1.objects[a.to].dst;
            assert!(j.degree(tgt) == 0);
        }
    }

    #[test]
    fn single_object_is_valid() {
        let spec = CategorySpec { objects: vec![obj("p", 0)], ..Default::default() };
        assert!(validate(&spec).is_empty());
        let mut pointed = spec.clone();
        pointed.pointed = true;
        assert!(is_fully_reduced(&lat(&pointed)).unwrap());
    }

    #[test]
    fn degree_violation_reported() {
        let spec = CategorySpec {
            objects: vec![obj("p", 1), obj("q", 1), obj("r", 0)],
            arrows: vec![arr("p", "q", "pq", false), arr("q", "r", "qr", false)],
            ..Default::default()
        };
        let d = validate(&spec);
        assert!(d.iter().any(|d| matches!(d, Diagnostic::Degree(..))));
        assert!(d.iter().any(|d| d.to_string().starts_with("degree")));
    }

    #[test]
    fn missing_degree_zero_and_disconnection() {
        let spec = CategorySpec { objects: vec![obj("p", 1), obj("q", 0)], ..Default::default() };
        let d = validate(&spec);
        assert!(d.contains(&Diagnostic::NoDegreeZero("p".into())));
        assert!(d.contains(&Diagnostic::Disconnected("q".into())));
    }

    #[test]
    fn toda_chain_ideal() {
        let j = lat(&toda_chain(3));
        let o = |n: &str| j.object(n).unwrap();
        let h = j.hom(o("3"), o("0"));
        assert_eq!(h.len(), 1);
        assert!(j.is_ideal(h[0]));
        let ideal: Vec<(String, String)> = j
            .all_morphisms()
            .into_iter()
            .filter(|m| j.is_ideal(*m))
            .map(|m| (j.name(m.src).to_string(), j.name(m.dst).to_string()))
            .collect();
        let mut expect = vec![("3", "1"), ("3", "0"), ("2", "0")]
            .into_iter()
            .map(|(a, b)| (a.to_string(), b.to_string()))
            .collect::<Vec<_>>();
        let mut got = ideal;
        got.sort();
        expect.sort();
        assert_eq!(got, expect);
        assert!(is_fully_reduced(&j).unwrap());
        let j4 = lat(&toda_chain(4));
        let sub = subcategories(&j4, j4.object("4").unwrap(), 1).unwrap();
        assert_eq!(sub.boundary_j_x_k, vec![j4.object("1").unwrap(), j4.object("0").unwrap()]);
        let c = comma_category(&j, o("3"), 1).unwrap();
        assert_eq!(c.objects.len(), 2);
    }

    #[test]
    fn non_absorbing_ideal_rejected() {
        let mut spec = toda_chain(3);
        spec.ideal_words.retain(|w| w.len() != 3);
        let d = validate(&spec);
        assert!(d.iter().any(|d| matches!(d, Diagnostic::NonAbsorbing { .. })));
    }

    #[test]
    fn delta_truncated_hom_counts() {
        let j = lat(&delta_truncated(3));
        let o = |n: &str| j.object(n).unwrap();
        assert_eq!(j.hom(o("2"), o("0")).len(), 3);
        assert_eq!(j.hom(o("3"), o("0")).len(), 4);
        assert_eq!(j.hom(o("3"), o("1")).len(), 6);
        assert_eq!(j.hom(o("3"), o("2")).len(), 4);
    }

    #[test]
    fn massey_shape_structure() {
        let spec = massey_shape();
        let j = lat(&spec);
        assert_eq!(j.num_objects(), 7);
        let g = j.object("g").unwrap();
        let a = j.object("a").unwrap();
        let h = j.hom(g, a);
        assert_eq!(h.len(), 2);
        assert_eq!(h.iter().filter(|m| j.is_ideal(**m)).count(), 1);
        let out = j.morphisms_from(g);
        assert_eq!(out.iter().filter(|m| !j.is_ideal(**m)).count(), 4);
        assert_eq!(out.iter().filter(|m| j.is_ideal(**m)).count(), 3);
        assert!(!is_fully_reduced(&j).unwrap());
        assert!(validate(&spec).is_empty());
    }

    #[test]
    fn spec_round_trips_through_json() {
        let spec = massey_shape();
        let s = serde_json::to_string(&spec).unwrap();
        let back: CategorySpec = serde_json::from_str(&s).unwrap();
        assert_eq!(back, spec);
    }
}
