//! Seeded random instances: small complexes and diagrams that commute
//! strictly or up to homotopy.

use std::collections::BTreeMap;
use std::sync::Arc;

use num_bigint::BigInt;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::chain::{ChainComplex, ChainHomotopy, ChainMap, Complex, LinSys, MapTerm, MapVar};
use crate::index_cat::{delta_truncated, double_diamond, toda_chain, CategorySpec, WeakLattice};
use crate::linalg::{kernel_basis, ExactMatrix, Ring};
use crate::matching::Diagram;
use crate::rectifier::{HoDiagram, RectifyError};

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum ShapeKind {
    Toda(u32),
    Delta(u32),
    DoubleDiamond,
}

impl ShapeKind {
    pub fn spec(&self) -> CategorySpec {
        match *self {
            ShapeKind::Toda(n) => toda_chain(n),
            ShapeKind::Delta(n) => delta_truncated(n),
            ShapeKind::DoubleDiamond => double_diamond(),
        }
    }

    pub fn lattice(&self) -> Arc<WeakLattice> {
        Arc::new(WeakLattice::compile(&self.spec()).expect("built-in shapes compile"))
    }

    pub fn supports_pointed(&self) -> bool {
        matches!(self, ShapeKind::Toda(_))
    }
}

impl std::fmt::Display for ShapeKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ShapeKind::Toda(n) => write!(f, "toda_chain({n})"),
            ShapeKind::Delta(n) => write!(f, "delta_truncated({n})"),
            ShapeKind::DoubleDiamond => f.write_str("double_diamond"),
        }
    }
}

/// Deterministic sampler; every draw depends only on the seed and the call sequence.
pub struct Sampler {
    rng: ChaCha8Rng,
    pub ring: Ring,
    /// Per complex, over degrees 0..=2.
    pub max_total_rank: usize,
    pub max_entry: i64,
}

impl Sampler {
    pub fn new(seed: u64, ring: Ring) -> Self {
        Sampler { rng: ChaCha8Rng::seed_from_u64(seed), ring, max_total_rank: 6, max_entry: 2 }
    }

    pub fn rng(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }

    fn entry(&mut self) -> BigInt {
        let m = self.max_entry;
        self.ring.from_i64(self.rng.gen_range(-m..=m))
    }

    pub fn matrix(&mut self, rows: usize, cols: usize) -> ExactMatrix {
        let mut out = ExactMatrix::zeros(self.ring, rows, cols);
        for r in 0..rows {
            for c in 0..cols {
                let e = self.entry();
                out.set(r, c, e);
            }
        }
        out
    }

    /// Ranks in degrees 0..=2 and entries in `[−max_entry, max_entry]`; `d₂` is a
    /// random combination of kernel vectors of `d₁`, redrawn until it fits the range.
    pub fn complex(&mut self) -> Complex {
        let mut ranks = [0usize; 3];
        loop {
            for r in ranks.iter_mut() {
                *r = self.rng.gen_range(0..=2);
            }
            if ranks.iter().sum::<usize>() <= self.max_total_rank {
                break;
            }
        }
        let d1 = self.matrix(ranks[0], ranks[1]);
        let ker = kernel_basis(&d1);
        let mut d2 = ExactMatrix::zeros(self.ring, ranks[1], ranks[2]);
        if !ker.is_empty() && ranks[2] > 0 {
            for _ in 0..8 {
                let mut cand = ExactMatrix::zeros(self.ring, ranks[1], ranks[2]);
                for c in 0..ranks[2] {
                    let mut col = vec![BigInt::from(0); ranks[1]];
                    for v in &ker {
                        let t: i64 = self.rng.gen_range(-1..=1);
                        for (o, x) in col.iter_mut().zip(v) {
                            *o += x * t;
                        }
                    }
                    for (r, x) in col.into_iter().enumerate() {
                        cand.set(r, c, self.ring.reduce(x));
                    }
                }
                let fits = (0..ranks[1]).all(|r| (0..ranks[2]).all(|c| self.within(cand.get(r, c))));
                if fits {
                    d2 = cand;
                    break;
                }
            }
        }
        let rank_map: BTreeMap<i64, usize> = ranks.iter().enumerate().map(|(n, r)| (n as i64, *r)).collect();
        let diffs = BTreeMap::from([(1, d1), (2, d2)]);
        Arc::new(ChainComplex::from_parts(self.ring, &rank_map, &diffs).expect("d² = 0 by construction"))
    }

    fn within(&self, x: &BigInt) -> bool {
        let m = BigInt::from(self.max_entry);
        match self.ring {
            Ring::Integers => *x <= m && *x >= -m,
            Ring::PrimeField(_) => true,
        }
    }

    pub fn homotopy(&mut self, src: &Complex, dst: &Complex) -> ChainHomotopy {
        let mut comps = BTreeMap::new();
        for n in src.degrees() {
            let (r, c) = (dst.rank(n + 1), src.rank(n));
            if r * c > 0 {
                let mut m = ExactMatrix::zeros(self.ring, r, c);
                for i in 0..r {
                    for j in 0..c {
                        let e = self.ring.from_i64(self.rng.gen_range(-1..=1));
                        m.set(i, j, e);
                    }
                }
                comps.insert(n, m);
            }
        }
        ChainHomotopy::from_components(src, dst, comps).expect("shapes match")
    }

    fn combination(&mut self, particular: &[BigInt], kernel: &[Vec<BigInt>]) -> Vec<BigInt> {
        let mut out = particular.to_vec();
        for v in kernel {
            let c: i64 = self.rng.gen_range(-1..=1);
            if c != 0 {
                for (o, x) in out.iter_mut().zip(v) {
                    *o += x * c;
                }
            }
        }
        out.into_iter().map(|x| self.ring.reduce(x)).collect()
    }

    /// One chain map per arrow, chosen source by source in increasing degree so
    /// that relations (and, pointed, nullity of ideal morphisms) hold strictly or
    /// up to homotopy.
    fn arrow_maps(
        &mut self,
        j: &WeakLattice,
        objects: &BTreeMap<usize, Complex>,
        pointed: bool,
        up_to_homotopy: bool,
    ) -> BTreeMap<usize, ChainMap> {
        let ring = self.ring;
        let mut maps: BTreeMap<usize, ChainMap> = BTreeMap::new();
        let mut order = j.objects_by_degree();
        order.sort_by_key(|&x| j.degree(x));
        for x in order {
            let out = j.arrows_from(x);
            if out.is_empty() {
                continue;
            }
            let src = &objects[&x];
            let mut sys = LinSys::new(ring);
            let vars: BTreeMap<usize, MapVar> =
                out.iter().map(|&a| (a, sys.map_var(src, &objects[&j.arrows()[a].dst], 0))).collect();
            for v in vars.values() {
                sys.chain_map_condition(v);
            }
            let rest = |w: &[usize]| -> Option<ChainMap> {
                let mut it = w[1..].iter();
                let first = it.next()?;
                let mut m = maps[first].clone();
                for a in it {
                    m = maps[a].compose(&m);
                }
                Some(m)
            };
            let end = |w: &[usize]| objects[&j.arrows()[*w.last().unwrap()].dst].clone();
            let mut constraints: Vec<(Vec<(Option<ChainMap>, usize, i64)>, Complex)> = vec![];
            for (l, r) in j.relations() {
                if j.arrows()[l[0]].src == x {
                    constraints.push((vec![(rest(l), l[0], 1), (rest(r), r[0], -1)], end(l)));
                }
            }
            if pointed {
                for m in j.morphisms_from(x) {
                    if j.is_ideal(m) {
                        let w = j.data(m).word.clone();
                        constraints.push((vec![(rest(&w), w[0], 1)], end(&w)));
                    }
                }
            }
            for (terms, dst) in &constraints {
                let s = up_to_homotopy.then(|| sys.map_var(src, dst, 1));
                let mut mt: Vec<MapTerm<'_>> = terms
                    .iter()
                    .map(|(left, a, sign)| MapTerm::Plain {
                        left: left.as_ref(),
                        var: &vars[a],
                        right: None,
                        sign: *sign,
                    })
                    .collect();
                if let Some(s) = &s {
                    mt.push(MapTerm::Boundary { left: None, var: s, right: None, sign: -1 });
                }
                sys.map_equation(src, dst, &mt, None);
            }
            let sol = sys.solve_with_kernel().expect("zero maps solve the homogeneous system");
            let v = self.combination(&sol.particular, &sol.kernel);
            for (a, var) in &vars {
                maps.insert(*a, sol.map_from(&v, var));
            }
        }
        maps
    }

    pub fn objects(&mut self, j: &WeakLattice) -> BTreeMap<usize, Complex> {
        (0..j.num_objects()).map(|x| (x, self.complex())).collect()
    }

    /// A diagram commuting up to homotopy (pointed: ideal morphisms nullhomotopic).
    pub fn ho_diagram(&mut self, j: &Arc<WeakLattice>, pointed: bool) -> Result<HoDiagram, RectifyError> {
        let objects = self.objects(j);
        let maps = self.arrow_maps(j, &objects, pointed, true);
        HoDiagram::new(j.clone(), self.ring, objects, maps)
    }

    /// A strictly commuting diagram (pointed: ideal morphisms are zero).
    pub fn strict_diagram(&mut self, j: &Arc<WeakLattice>, pointed: bool) -> Diagram {
        let objects = self.objects(j);
        let maps = self.arrow_maps(j, &objects, pointed, false);
        let mut y = Diagram::new(j.clone(), self.ring);
        y.objects = objects;
        y.maps = maps;
        y
    }

    /// Every representative moved by a random boundary `dh + hd`.
    /// Ideal arrows stay put, so a pointed strict diagram stays pointed. The
    /// relation and nullity witnesses are the ones the moves induce.
    pub fn perturb(&mut self, y: &Diagram) -> Result<HoDiagram, RectifyError> {
        let j = y.shape.clone();
        let mut reps = BTreeMap::new();
        let mut moves = BTreeMap::new();
        for (a, m) in &y.maps {
            let h =
                if j.arrows()[*a].ideal { ChainHomotopy::zero(&m.src, &m.dst) } else { self.homotopy(&m.src, &m.dst) };
            reps.insert(*a, m.add(&h.boundary()));
            moves.insert(*a, h);
        }
        // `K_w: W'_w ≃ W_w` is `Σ_i (later strict) ∘ s_i ∘ (earlier moved)`.
        let drift = |w: &[usize]| {
            let mut total: Option<ChainHomotopy> = None;
            for i in 0..w.len() {
                let mut s = moves[&w[i]].clone();
                if i > 0 {
                    s = s.pre(&word(&reps, &w[..i]));
                }
                if i + 1 < w.len() {
                    s = s.post(&word(&y.maps, &w[i + 1..]));
                }
                total = Some(match total {
                    None => s,
                    Some(t) => t.add(&s),
                });
            }
            total.expect("non-empty word")
        };
        let mut h = HoDiagram::new(j.clone(), y.ring, y.objects.clone(), reps.clone())?;
        for (i, (l, r)) in j.relations().iter().enumerate() {
            h.coherence[i] = Some(drift(l).add(&drift(r).neg()));
        }
        for m in j.all_morphisms() {
            if j.is_ideal(m) && y.map_of(m).is_zero() {
                h.nullity.insert(m, drift(&j.data(m).word));
            }
        }
        Ok(h)
    }
}

fn word(maps: &BTreeMap<usize, ChainMap>, w: &[usize]) -> ChainMap {
    w[1..].iter().fold(maps[&w[0]].clone(), |acc, a| maps[a].compose(&acc))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn complexes_respect_bounds() {
        for ring in [Ring::Integers, Ring::PrimeField(2), Ring::PrimeField(3)] {
            let mut s = Sampler::new(7, ring);
            for _ in 0..50 {
                let c = s.complex();
                assert!(c.total_rank() <= 6);
                c.validate().unwrap();
            }
        }
    }

    #[test]
    fn sampled_diagrams_are_coherent() {
        for (shape, pointed) in
            [(ShapeKind::Toda(3), true), (ShapeKind::Delta(3), false), (ShapeKind::DoubleDiamond, false)]
        {
            let j = shape.lattice();
            let mut s = Sampler::new(11, Ring::Integers);
            let mut h = s.ho_diagram(&j, pointed).unwrap();
            h.complete(pointed).unwrap();
            let y = s.strict_diagram(&j, pointed);
            y.check_strict(pointed).unwrap();
        }
    }

    #[test]
    fn same_seed_same_instance() {
        let j = ShapeKind::Toda(4).lattice();
        let a = Sampler::new(3, Ring::PrimeField(3)).ho_diagram(&j, true).unwrap();
        let b = Sampler::new(3, Ring::PrimeField(3)).ho_diagram(&j, true).unwrap();
        assert_eq!(a.reps, b.reps);
    }
}
