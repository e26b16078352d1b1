//! Separated operations.
//!
//! The total operation at stage `(x, k)` splits into `k − 1` operations, the
//! one of order `j + 1` taking values in the staircase object `F^{j,j+1}`:
//!
//! ```text
//!   col:    k−1            2            1            0
//!   k+1   F^{k−1,k+1} ─▶ … ─▶ F^{2,k+1} ─▶ F^{1,k+1} ─▶ D
//!   k     F^{k−1,k}   ─▶ … ─▶ F^{2,k}   ─▶ F^{1,k}   ─▶ C
//!    ⋮                          ⋮            ⋮          ⋮
//!   2                          F^{2,2}   ─▶ F^{1,2}   ─▶ F^{0,2}
//!   1                                       F^{1,1}   ─▶ B
//! ```
//!
//! Every small square is a pullback; horizontal maps are fibrations, the
//! vertical maps out of row `k+1` are fibrations, those out of row `k` are
//! monos. `F^{1,1}` factors `Ψ`, `F^{j,j}` (`j ≥ 2`) factors `Q → F^{j−1,j}`.
//! Column 0 factors `C ↪ B` through the top rows of the grids at stage
//! `(s, k−1)` for every `g: x → s` with `|s| = k` (`F`-factors) and through
//! pullbacks of their right columns along `Ψ_s` (`G`-factors).
//!
//! A sequence `κ_j: Y(x) → F^{j,k+1}` with `u_j κ_j = κ_{j−1}`, `κ_0 = σ_k`, and
//! `Φ^j κ_j ≃ q_{j+1} φ^{j+1} η` for all `j ≤ k − 1` exists iff the total
//! operation vanishes.

use std::collections::BTreeMap;
use std::sync::Arc;

use num_bigint::BigInt;
use serde_json::{json, Value};

use crate::chain::{
    direct_sum, factor_we_fib, find_homotopy, homotopy_classes, lift_homotopy, product_map, pullback, ChainHomotopy,
    ChainMap, Complex, DirectSum, Factorization, LinSys, MapTerm, Pullback,
};
use crate::index_cat::{is_fully_reduced, Mor};
use crate::linalg::AbGroupPresentation;
use crate::matching::{IndexedProduct, MatchingObject};
use crate::rectifier::{
    build_basic_grid, map_json, ranks_json, strict_stage, total_operation_on, BasicGrid, RectifyError, RectifyOptions,
    StageData, Verdict,
};

type Result<T> = std::result::Result<T, RectifyError>;

/// `(column j, row l)` of `F^{j,l}`.
pub type Cell = (u32, u32);

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FlagKind {
    Fibration,
    Mono,
    AcyclicCofibration,
}

#[derive(Clone)]
pub struct Flag {
    pub name: String,
    pub kind: FlagKind,
    pub map: ChainMap,
}

impl Flag {
    fn holds(&self) -> bool {
        match self.kind {
            FlagKind::Fibration => self.map.is_degreewise_surjective(),
            FlagKind::Mono => self.map.is_degreewise_injective(),
            FlagKind::AcyclicCofibration => self.map.is_split_mono() && self.map.is_quasi_iso(),
        }
    }
}

/// Cells and maps of a grid, without the stage bookkeeping.
#[derive(Clone, Default)]
pub struct Layout {
    pub k: u32,
    pub cells: BTreeMap<Cell, Complex>,
    /// `u: F^{j,l} → F^{j−1,l}`
    pub horiz: BTreeMap<Cell, ChainMap>,
    /// `F^{j,l} → F^{j,l−1}`
    pub vert: BTreeMap<Cell, ChainMap>,
    /// `F^{j,l} = F^{j,l−1} ×_{F^{j−1,l−1}} F^{j−1,l}` above the staircase.
    pub squares: BTreeMap<Cell, Pullback>,
    /// Staircase factorizations, `F^{j,j}` (`F^{1,1}` for `j = 1`).
    pub stairs: BTreeMap<u32, Factorization>,
    /// `φ^j: Q → F^{j,j}`
    pub phi: BTreeMap<u32, ChainMap>,
    /// `v: Q → C`
    pub q_to_c: Option<ChainMap>,
}

/// Lowest row of column `j`.
pub fn base_row(j: u32) -> u32 {
    j.max(1)
}

impl Layout {
    pub fn cell(&self, c: Cell) -> &Complex {
        &self.cells[&c]
    }

    /// Vertical composite in column `j` from row `from` down to row `to`.
    pub fn vdown(&self, j: u32, from: u32, to: u32) -> ChainMap {
        let mut out = ChainMap::identity(self.cell((j, from)));
        for l in (to + 1..=from).rev() {
            out = self.vert[&(j, l)].compose(&out);
        }
        out
    }

    /// Horizontal composite in row `l` from column `from` to column `to`.
    pub fn hcomp(&self, l: u32, from: u32, to: u32) -> ChainMap {
        let mut out = ChainMap::identity(self.cell((from, l)));
        for j in (to + 1..=from).rev() {
            out = self.horiz[&(j, l)].compose(&out);
        }
        out
    }

    /// The map into `F^{j,l}` (`j ≥ 1`) induced by `base` into the bottom cell of
    /// column `j` and `prev` into `F^{j−1,l}`.
    pub fn cell_map(&self, j: u32, l: u32, base: &ChainMap, prev: &ChainMap) -> Result<ChainMap> {
        let mut m = base.clone();
        for r in base_row(j) + 1..=l {
            let side = self.vdown(j - 1, l, r).compose(prev);
            m = self.squares[&(j, r)].factor(&m, &side)?;
        }
        Ok(m)
    }

    /// `Q → F^{j,l}` for `l ≤ k`.
    pub fn q_into(&self, j: u32, l: u32) -> Result<ChainMap> {
        let v = self.q_to_c.as_ref().expect("layout without Q");
        if j == 0 {
            return Ok(self.vdown(0, self.k, l).compose(v));
        }
        let prev = if l > base_row(j) { self.q_into(j - 1, l)? } else { ChainMap::zero(&v.src, &v.src) };
        self.cell_map(j, l, &self.phi[&j], &prev)
    }

    /// Pulls column `j − 1` back along the staircase map at `(j, base_row(j))`.
    fn grow_column(&mut self, j: u32, stair: Factorization, phi: ChainMap) {
        let b = base_row(j);
        self.cells.insert((j, b), stair.obj.clone());
        self.horiz.insert((j, b), stair.second.clone());
        self.stairs.insert(j, stair);
        self.phi.insert(j, phi);
        for l in b + 1..=self.k + 1 {
            let sq = pullback(&self.horiz[&(j, l - 1)], &self.vert[&(j - 1, l)]);
            self.cells.insert((j, l), sq.obj.clone());
            self.vert.insert((j, l), sq.px.clone());
            self.horiz.insert((j, l), sq.py.clone());
            self.squares.insert((j, l), sq);
        }
    }
}

/// `M^s_{k−1} ↪ T_{k−2} ↠ ⋯ ↠ T_0 = D_s ⊕ A_s` with `T_i = F^{i,k}_s ⊕ G^{i,k}_s`.
pub struct Tower {
    pub s: usize,
    pub sub: Arc<SeparationGrid>,
    pub levels: Vec<DirectSum>,
    /// `down[i − 1]: T_i → T_{i−1}`
    pub down: Vec<ChainMap>,
    pub top: ChainMap,
    pub d_s: IndexedProduct<Mor>,
    pub a_s: IndexedProduct<Mor>,
    /// `G^{i,k}_s = A_s ×_{B_s} F^{0,i+1}_s` for `1 ≤ i ≤ k − 3`.
    pub g_pullbacks: Vec<Pullback>,
    /// `N^s_{k−2} ≃→ G^{k−2,k}_s ↠ G^{k−3,k}_s`
    pub g_last: Factorization,
}

fn build_tower(sub: Arc<SeparationGrid>, m: &MatchingObject) -> Result<Tower> {
    let k = sub.k + 1;
    let sb = &sub.basic;
    let lay = &sub.layout;
    let d_s = sb.rho.tops.clone();
    let a_s = sb.a.clone();
    let coords = |p: &IndexedProduct<Mor>| {
        let maps: Vec<ChainMap> = p.keys.iter().map(|t| m.projection(t)).collect();
        p.tuple(&m.obj, &maps)
    };
    let (p_a, p_d) = (coords(&a_s), coords(&d_s));
    let to_q = sb.q_obj.factor(&p_a, &sb.rho.m_d.compose(&p_d))?;
    let to_mk =
        sb.mk1.lift(&p_a).ok_or_else(|| RectifyError::Internal("matching coordinates are not a cone".into()))?;
    let to_n = sb.n_obj.factor(&to_mk, &to_q)?;

    // F-part: top row of the stage-(s, k−1) grid
    let mut top_f = p_d;
    for i in 1..=k - 2 {
        top_f = lay.cell_map(i, k, &lay.phi[&i].compose(&to_q), &top_f)?;
    }

    // G-part
    let mut g_objs: Vec<Complex> = vec![a_s.obj().clone()];
    let mut g_down: Vec<ChainMap> = vec![];
    let mut g_pullbacks: Vec<Pullback> = vec![];
    for i in 1..=k.saturating_sub(3) {
        let pb = pullback(&sb.psi, &lay.vdown(0, i + 1, 1));
        let down = match g_pullbacks.last() {
            None => pb.px.clone(),
            Some(prev) => prev.factor(&pb.px, &lay.vert[&(0, i + 1)].compose(&pb.py))?,
        };
        g_objs.push(pb.obj.clone());
        g_down.push(down);
        g_pullbacks.push(pb);
    }
    let q_to_prev = match g_pullbacks.last() {
        None => sb.q_obj.px.clone(),
        Some(prev) => prev.factor(&sb.q_obj.px, &lay.q_into(0, k - 2)?)?,
    };
    let g_last = factor_we_fib(&q_to_prev.compose(&sb.n_obj.py));
    g_objs.push(g_last.obj.clone());
    g_down.push(g_last.second.clone());
    let top_g = g_last.first.compose(&to_n);

    let ring = m.obj.ring();
    let mut levels = vec![];
    for (i, g) in g_objs.iter().enumerate() {
        let f = lay.cell((i as u32, k)).clone();
        levels.push(direct_sum(ring, &[f, g.clone()]));
    }
    let mut down = vec![];
    for i in 1..levels.len() {
        let f_down = lay.horiz[&(i as u32, k)].clone();
        down.push(product_map(&levels[i], &levels[i - 1], &[f_down, g_down[i - 1].clone()]));
    }
    let top = levels[k as usize - 2].tuple(&m.obj, &[top_f, top_g]);
    Ok(Tower { s: m.x, sub: sub.clone(), levels, down, top, d_s, a_s, g_pullbacks, g_last })
}

/// The stage-`(x, k)` separation grid.
pub struct SeparationGrid {
    pub x: usize,
    pub name: String,
    pub k: u32,
    pub pointed: bool,
    pub basic: BasicGrid,
    pub layout: Layout,
    /// `γ_k: Q → F^{k−1,k}`
    pub gamma: ChainMap,
    /// `P = Q ×_{F^{k−1,k}} F^{k−1,k+1}`
    pub p_obj: Pullback,
    /// One tower per degree-`k` morphism out of `x`, in product order.
    pub towers: Vec<Arc<Tower>>,
    pub flags: Vec<Flag>,
}

impl std::fmt::Debug for SeparationGrid {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SeparationGrid")
            .field("x", &self.name)
            .field("k", &self.k)
            .field("cells", &self.layout.cells.len())
            .finish()
    }
}

pub fn build_separation_grid(stage: &StageData<'_>) -> Result<SeparationGrid> {
    let basic = build_basic_grid(stage)?;
    let k = stage.k;
    let mut lay = Layout { k, q_to_c: Some(basic.q_obj.py.clone()), ..Layout::default() };
    let mut flags = vec![];
    let flag =
        |flags: &mut Vec<Flag>, name: String, kind, map: &ChainMap| flags.push(Flag { name, kind, map: map.clone() });

    // column 0
    lay.cells.insert((0, k + 1), basic.rho.tops.obj().clone());
    lay.cells.insert((0, k), basic.rho.c.obj.clone());
    lay.cells.insert((0, 1), basic.b.obj().clone());
    lay.vert.insert((0, k + 1), basic.rho.m_d.clone());
    let mut towers: Vec<Arc<Tower>> = vec![];
    if k == 2 {
        lay.vert.insert((0, 2), basic.forget_c.clone());
    } else {
        let mut subs: BTreeMap<usize, Arc<SeparationGrid>> = BTreeMap::new();
        for (i, g) in basic.rho.tops.keys.iter().enumerate() {
            let s = g.dst;
            if let std::collections::btree_map::Entry::Vacant(e) = subs.entry(s) {
                let st = strict_stage(stage.strict, stage.pointed, s, k - 1)?;
                e.insert(Arc::new(build_separation_grid(&st)?));
            }
            towers.push(Arc::new(build_tower(subs[&s].clone(), &basic.rho.matching[i])?));
        }
        let ring = stage.ring();
        let rows: BTreeMap<u32, DirectSum> = (2..k)
            .map(|l| {
                (l, direct_sum(ring, &towers.iter().map(|t| t.levels[l as usize - 1].obj.clone()).collect::<Vec<_>>()))
            })
            .collect();
        for (l, r) in &rows {
            lay.cells.insert((0, *l), r.obj.clone());
        }
        let tops: Vec<ChainMap> = towers.iter().enumerate().map(|(i, t)| t.top.compose(&basic.rho.c.proj[i])).collect();
        lay.vert.insert((0, k), rows[&(k - 1)].tuple(&basic.rho.c.obj, &tops));
        for l in 3..k {
            let downs: Vec<ChainMap> = towers.iter().map(|t| t.down[l as usize - 2].clone()).collect();
            lay.vert.insert((0, l), product_map(&rows[&l], &rows[&(l - 1)], &downs));
        }
        // row 2 → B, coordinate by coordinate
        let parts: Vec<ChainMap> = basic
            .b
            .keys
            .iter()
            .map(|(g, f)| {
                let gi = basic.rho.tops.position(g).expect("top in product");
                let t = &towers[gi];
                let lvl0 = &t.levels[0];
                let coord = match t.d_s.position(f) {
                    Some(p) => t.d_s.sum.proj[p].compose(&lvl0.proj[0]),
                    None => t.a_s.proj(f).compose(&lvl0.proj[1]),
                };
                coord.compose(&t.down[0]).compose(&rows[&2].proj[gi])
            })
            .collect();
        lay.vert.insert((0, 2), basic.b.tuple(&rows[&2].obj, &parts));
    }

    // columns 1 .. k−1
    let phi1 = basic.f1.first.compose(&basic.q_obj.px);
    lay.grow_column(1, basic.f1.clone(), phi1);
    for j in 2..k {
        let stair = factor_we_fib(&lay.q_into(j - 1, j)?);
        let phi = stair.first.clone();
        lay.grow_column(j, stair, phi);
    }
    let gamma = lay.q_into(k - 1, k)?;
    let p_obj = pullback(&gamma, &lay.vert[&(k - 1, k + 1)]);

    for (&(j, l), m) in &lay.horiz {
        flag(&mut flags, format!("u at F^{{{j},{l}}}"), FlagKind::Fibration, m);
    }
    for (&(j, l), m) in &lay.vert {
        let kind = if l == k { FlagKind::Mono } else { FlagKind::Fibration };
        flag(&mut flags, format!("vertical out of F^{{{j},{l}}}"), kind, m);
    }
    for (&j, m) in &lay.phi {
        if j >= 2 {
            flag(&mut flags, format!("φ^{j}"), FlagKind::AcyclicCofibration, m);
        }
    }
    for (i, t) in towers.iter().enumerate() {
        flag(&mut flags, format!("tower {i} top"), FlagKind::Mono, &t.top);
        for (n, d) in t.down.iter().enumerate() {
            flag(&mut flags, format!("tower {i} level {}", n + 1), FlagKind::Fibration, d);
        }
        flag(&mut flags, format!("tower {i} G-factorization"), FlagKind::AcyclicCofibration, &t.g_last.first);
    }
    Ok(SeparationGrid {
        x: stage.x,
        name: stage.name().to_string(),
        k,
        pointed: stage.pointed,
        basic,
        layout: lay,
        gamma,
        p_obj,
        towers,
        flags,
    })
}

impl SeparationGrid {
    /// Re-verifies pullbacks, flags, the column-0 factorization of `C ↪ B` and
    /// the staircase relations `r_j q_{j+1} φ^{j+1} = φ^j`.
    pub fn audit(&self) -> std::result::Result<(), String> {
        self.basic.audit()?;
        let lay = &self.layout;
        let k = self.k;
        for (c, sq) in &lay.squares {
            if !sq.verify() {
                return Err(format!("square at F^{{{},{}}} is not a pullback", c.0, c.1));
            }
        }
        if !self.p_obj.verify() {
            return Err("P is not a pullback".into());
        }
        for t in &self.towers {
            if t.g_pullbacks.iter().any(|p| !p.verify()) {
                return Err("a G-factor is not a pullback".into());
            }
            t.sub.audit()?;
        }
        for f in &self.flags {
            if !f.holds() {
                return Err(format!("flag {:?} fails on {}", f.kind, f.name));
            }
        }
        if lay.vdown(0, k, 1) != self.basic.forget_c {
            return Err("column 0 does not factor C → B".into());
        }
        for j in 1..k {
            let down = lay.vert[&(j, j + 1)].compose(&lay.q_into(j, j + 1).map_err(|e| e.to_string())?);
            if down != lay.phi[&j] {
                return Err(format!("r_{j} q_{} φ^{} ≠ φ^{j}", j + 1, j + 1));
            }
        }
        Ok(())
    }

    /// `Φ^j: F^{j,k+1} → F^{j,j+1}`
    pub fn phi_vertical(&self, j: u32) -> ChainMap {
        self.layout.vdown(j, self.k + 1, j + 1)
    }

    /// `q_{j+1} φ^{j+1}: Q → F^{j,j+1}`; equals `γ_k` for `j = k − 1`.
    pub fn stair_target(&self, j: u32) -> Result<ChainMap> {
        self.layout.q_into(j, j + 1)
    }

    pub fn to_json(&self) -> Value {
        let lay = &self.layout;
        let cells: Vec<Value> =
            lay.cells.iter().map(|((j, l), c)| json!({ "cell": [j, l], "ranks": ranks_json(c) })).collect();
        let flags: Vec<Value> = self
            .flags
            .iter()
            .map(|f| json!({ "map": f.name, "kind": f.kind, "holds": f.holds(), "matrices": map_json(&f.map) }))
            .collect();
        json!({
            "stage": { "object": self.name, "k": self.k },
            "pointed": self.pointed,
            "cells": cells,
            "P": ranks_json(&self.p_obj.obj),
            "Q": ranks_json(&self.basic.q_obj.obj),
            "g_factors": self.towers.iter().map(|t| ranks_json(&t.g_last.obj)).collect::<Vec<_>>(),
            "flags": flags,
        })
    }
}

// ---------------------------------------------------------------------------
// Operations.

/// One separated operation of order `j + 1`.
#[derive(Clone, Debug)]
pub struct SeparatedOperation {
    pub j: u32,
    /// Some admissible sequence `κ_1, …, κ_j` meets the first `j` conditions.
    pub verdict: Verdict,
    /// Verdict with `κ_1, …, κ_{j−1}` held at the supplied prefix.
    pub at_prefix: Verdict,
    /// `[Y(x), F^{j,j+1}]`
    pub ambient: AbGroupPresentation,
    pub value: Vec<BigInt>,
    pub indeterminacy: Vec<Vec<BigInt>>,
    pub target: Vec<BigInt>,
    /// `κ_j` and the homotopy `Φ^j κ_j ≃ q_{j+1} φ^{j+1} η` when vanishing at the prefix.
    pub witness: Option<(ChainMap, ChainHomotopy)>,
}

impl SeparatedOperation {
    pub fn order(&self) -> u32 {
        self.j + 1
    }

    pub fn to_json(&self) -> Value {
        let ints = |v: &[BigInt]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>();
        json!({
            "order": self.order(),
            "verdict": self.verdict,
            "at_prefix": self.at_prefix,
            "ambient": self.ambient.describe(),
            "value": ints(&self.value),
            "indeterminacy": self.indeterminacy.iter().map(|v| ints(v)).collect::<Vec<_>>(),
            "target": ints(&self.target),
        })
    }
}

fn prefix_tail<'a>(stage: &'a StageData<'_>, prefix: &'a [ChainMap], j: u32) -> &'a ChainMap {
    if j == 1 {
        &stage.sigma_top
    } else {
        &prefix[j as usize - 2]
    }
}

/// The operation of order `j + 1` with `κ_1, …, κ_{j−1}` fixed to `prefix`.
/// Values are `Φ^j κ_j` over `κ_j` with `u_j κ_j = κ_{j−1}` and `r_j Φ^j κ_j ≃ φ^j η`.
pub fn separated_operation(
    grid: &SeparationGrid,
    stage: &StageData<'_>,
    j: u32,
    prefix: &[ChainMap],
) -> Result<SeparatedOperation> {
    let k = grid.k;
    if j == 0 || j >= k || prefix.len() + 1 != j as usize {
        return Err(stage.precondition(format!("order {} needs the {} previous κ", j + 1, j - 1)));
    }
    let lay = &grid.layout;
    let eta = &grid.basic.eta;
    let yx = &stage.source;
    let ring = stage.ring();
    // predecessor must vanish at the prefix
    let prev = prefix_tail(stage, prefix, j);
    let prev_lhs = lay.vdown(j - 1, k + 1, j).compose(prev);
    let prev_rhs = if j == 1 { lay.q_into(0, 1)?.compose(eta) } else { grid.stair_target(j - 1)?.compose(eta) };
    if find_homotopy(&prev_lhs, &prev_rhs).is_none() {
        return Err(stage.precondition(format!("operation of order {j} does not vanish at the supplied prefix")));
    }
    let top = lay.cell((j, k + 1)).clone();
    let stair = lay.cell((j, j + 1)).clone();
    let u = lay.horiz[&(j, k + 1)].clone();
    let phi_v = grid.phi_vertical(j);
    let target = grid.stair_target(j)?.compose(eta);

    let mut sys = LinSys::new(ring);
    let kappa = sys.map_var(yx, &top, 0);
    let s = sys.map_var(yx, &stair, 1);
    sys.chain_map_condition(&kappa);
    sys.map_equation(yx, &u.dst, &[MapTerm::Plain { left: Some(&u), var: &kappa, right: None, sign: 1 }], Some(prev));
    sys.map_equation(
        yx,
        &stair,
        &[
            MapTerm::Plain { left: Some(&phi_v), var: &kappa, right: None, sign: 1 },
            MapTerm::Boundary { left: None, var: &s, right: None, sign: -1 },
        ],
        Some(&target),
    );
    let witness = sys.solve().map(|sol| (sol.map(&kappa), sol.homotopy(&s)));

    let base = lay.cell((j, j)).clone();
    let down = lay.vdown(j, k + 1, j);
    let phi_eta = lay.phi[&j].compose(eta);
    let mut vsys = LinSys::new(ring);
    let vk = vsys.map_var(yx, &top, 0);
    let vt = vsys.map_var(yx, &base, 1);
    vsys.chain_map_condition(&vk);
    vsys.map_equation(yx, &u.dst, &[MapTerm::Plain { left: Some(&u), var: &vk, right: None, sign: 1 }], Some(prev));
    vsys.map_equation(
        yx,
        &base,
        &[
            MapTerm::Plain { left: Some(&down), var: &vk, right: None, sign: 1 },
            MapTerm::Boundary { left: None, var: &vt, right: None, sign: -1 },
        ],
        Some(&phi_eta),
    );
    let vsol =
        vsys.solve_with_kernel().ok_or_else(|| RectifyError::Internal(format!("order {}: no admissible κ", j + 1)))?;
    let classes = homotopy_classes(yx, &stair)?;
    let theta = phi_v.compose(&vsol.map(&vk));
    let mut indeterminacy = vec![];
    let mut indet_vecs = vec![];
    for kv in &vsol.kernel {
        let m = phi_v.compose(&vsol.map_from(kv, &vk));
        let c = classes.class_of(&m);
        if c.iter().all(|x| x == &BigInt::from(0)) || indeterminacy.contains(&c) {
            continue;
        }
        indeterminacy.push(c);
        indet_vecs.push(classes.hom.map_vector(&m));
    }
    let quotient = classes.group.quotient_by(&indet_vecs);
    let diff: Vec<BigInt> =
        classes.hom.map_vector(&target).iter().zip(classes.hom.map_vector(&theta)).map(|(a, b)| a - b).collect();
    let in_coset = quotient.class_of(&diff).iter().all(|x| x == &BigInt::from(0));
    if in_coset != witness.is_some() {
        return Err(RectifyError::Internal(format!("order {}: coset membership disagrees with solvability", j + 1)));
    }
    let verdict = if witness.is_some() { Verdict::Vanishes } else { Verdict::Obstructed };
    Ok(SeparatedOperation {
        j,
        verdict,
        at_prefix: verdict,
        ambient: classes.group.clone(),
        value: classes.class_of(&theta),
        indeterminacy,
        target: classes.class_of(&target),
        witness,
    })
}

/// Joint solve for `κ_j` meeting conditions `1..=j`; returns `κ_j` and the homotopies.
fn joint_sequence(
    grid: &SeparationGrid,
    stage: &StageData<'_>,
    j: u32,
) -> Result<Option<(ChainMap, Vec<ChainHomotopy>)>> {
    let lay = &grid.layout;
    let k = grid.k;
    let yx = &stage.source;
    let mut sys = LinSys::new(stage.ring());
    let kappa = sys.map_var(yx, lay.cell((j, k + 1)), 0);
    sys.chain_map_condition(&kappa);
    let h0 = lay.hcomp(k + 1, j, 0);
    sys.map_equation(
        yx,
        &h0.dst,
        &[MapTerm::Plain { left: Some(&h0), var: &kappa, right: None, sign: 1 }],
        Some(&stage.sigma_top),
    );
    let mut lefts = vec![];
    let mut rhss = vec![];
    for i in 1..=j {
        lefts.push(grid.phi_vertical(i).compose(&lay.hcomp(k + 1, j, i)));
        rhss.push(grid.stair_target(i)?.compose(&grid.basic.eta));
    }
    let mut hs = vec![];
    for i in 1..=j {
        let c = lay.cell((i, i + 1));
        let s = sys.map_var(yx, c, 1);
        let idx = i as usize - 1;
        sys.map_equation(
            yx,
            c,
            &[
                MapTerm::Plain { left: Some(&lefts[idx]), var: &kappa, right: None, sign: 1 },
                MapTerm::Boundary { left: None, var: &s, right: None, sign: -1 },
            ],
            Some(&rhss[idx]),
        );
        hs.push(s);
    }
    Ok(sys.solve().map(|sol| (sol.map(&kappa), hs.iter().map(|h| sol.homotopy(h)).collect())))
}

/// All separated operations at one stage, checked against the total operation.
pub struct SeparationReport {
    pub x: usize,
    pub name: String,
    pub k: u32,
    pub operations: Vec<SeparatedOperation>,
    pub verdict: Verdict,
    pub total: Verdict,
    /// `f: Y(x) → P` with `P.px ∘ f = η`, present on full vanishing.
    pub lift: Option<ChainMap>,
    pub grid: Arc<SeparationGrid>,
}

impl std::fmt::Debug for SeparationReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SeparationReport")
            .field("x", &self.name)
            .field("k", &self.k)
            .field("verdicts", &self.operations.iter().map(|o| o.verdict).collect::<Vec<_>>())
            .field("total", &self.total)
            .finish()
    }
}

impl SeparationReport {
    pub fn to_json(&self) -> Value {
        json!({
            "stage": { "object": self.name, "k": self.k },
            "verdict": self.verdict,
            "total": self.total,
            "operations": self.operations.iter().map(|o| o.to_json()).collect::<Vec<_>>(),
            "lift": self.lift.is_some(),
        })
    }
}

/// Runs the separated operations in order. The combined verdict must equal the
/// total one; on full vanishing returns the lift into `P`.
pub fn separate_total(stage: &StageData<'_>, opts: &RectifyOptions) -> Result<SeparationReport> {
    let total = total_operation_on(stage, opts)?.verdict;
    let grid = Arc::new(build_separation_grid(stage)?);
    grid.audit().map_err(|m| stage.precondition(m))?;
    let k = grid.k;
    let lay = &grid.layout;
    let mut operations = vec![];
    let mut prefix: Vec<ChainMap> = vec![];
    let mut last = None;
    for j in 1..k {
        let joint = joint_sequence(&grid, stage, j)?;
        let mut op = separated_operation(&grid, stage, j, &prefix)?;
        if op.at_prefix == Verdict::Vanishes && joint.is_none() {
            return Err(RectifyError::Internal(format!("order {}: vanishes at a prefix but not jointly", j + 1)));
        }
        op.verdict = if joint.is_some() { Verdict::Vanishes } else { Verdict::Obstructed };
        operations.push(op);
        match joint {
            None => break,
            Some((kappa, hs)) => {
                prefix = (1..=j).map(|i| lay.hcomp(k + 1, j, i).compose(&kappa)).collect();
                last = Some((kappa, hs));
            }
        }
    }
    let verdict =
        if operations.iter().all(|o| o.verdict == Verdict::Vanishes) { Verdict::Vanishes } else { Verdict::Obstructed };
    if verdict != total {
        return Err(RectifyError::Internal(format!(
            "stage ({}, {k}): separated {verdict}, total {total}",
            stage.name()
        )));
    }
    let lift = match (verdict, last) {
        (Verdict::Vanishes, Some((kappa, hs))) => Some(lift_into_p(&grid, stage, &kappa, hs.last().expect("k ≥ 2"))?),
        _ => None,
    };
    Ok(SeparationReport { x: stage.x, name: stage.name().to_string(), k, operations, verdict, total, lift, grid })
}

/// Straightens `κ_{k−1}` along the fibration `μ_{k−1}` and factors through `P`.
fn lift_into_p(grid: &SeparationGrid, stage: &StageData<'_>, kappa: &ChainMap, s: &ChainHomotopy) -> Result<ChainMap> {
    let k = grid.k;
    let mu = &grid.layout.vert[&(k - 1, k + 1)];
    let s_lift = lift_homotopy(mu, s);
    let kappa2 = kappa.sub(&s_lift.boundary());
    let eta = &grid.basic.eta;
    let f = grid.p_obj.factor(eta, &kappa2)?;
    let back = grid.layout.hcomp(k + 1, k - 1, 0).compose(&kappa2);
    if grid.p_obj.px.compose(&f) != *eta || find_homotopy(&back, &stage.sigma_top).is_none() {
        return Err(RectifyError::Internal("lift into P does not validate".into()));
    }
    Ok(f)
}

// ---------------------------------------------------------------------------
// Fully reduced grids.

/// Homology comparison of one staircase target with its predicted decomposition.
#[derive(Clone, Debug, serde::Serialize)]
pub struct LoopCheck {
    pub j: u32,
    /// Composable strings `x → ⋯ → v`, by object names.
    pub strings: Vec<Vec<String>>,
    pub actual: BTreeMap<i64, String>,
    pub expected: BTreeMap<i64, String>,
    pub holds: bool,
}

fn strings_from(stage: &StageData<'_>, x: usize, degrees: &[u32]) -> Vec<Vec<usize>> {
    let j = stage.shape();
    let Some((&d, rest)) = degrees.split_first() else {
        return vec![vec![x]];
    };
    let mut out = vec![];
    for m in j.morphisms_at(x, d, true) {
        for mut tail in strings_from(stage, m.dst, rest) {
            tail.insert(0, x);
            out.push(tail);
        }
    }
    out
}

/// For `2 ≤ j ≤ k`, compares `H_*(F^{j−1,j})` with `⊕ H_{*+j−1}(Y(v))` over strings
/// of non-ideal morphisms through degrees `k, k−1, …, k−j+1`, ending at `v`.
pub fn fully_reduced_targets(grid: &SeparationGrid, stage: &StageData<'_>) -> Result<Vec<LoopCheck>> {
    if !grid.pointed || !is_fully_reduced(stage.shape()).unwrap_or(false) {
        return Err(stage.precondition("shape is not fully reduced"));
    }
    let k = grid.k;
    let ring = stage.ring();
    let mut out = vec![];
    for j in 2..=k {
        let degrees: Vec<u32> = (0..=j).map(|i| k - i).collect();
        let strings = strings_from(stage, stage.x, &degrees);
        let parts: Vec<Complex> =
            strings.iter().map(|s| Arc::new(stage.strict.obj(*s.last().unwrap()).shift(-(j as i64 - 1)))).collect();
        let expected_c = direct_sum(ring, &parts).obj;
        let actual_c = grid.layout.cell((j - 1, j));
        let lo = actual_c.lo().min(expected_c.lo()) - 1;
        let hi = actual_c.hi().max(expected_c.hi()) + 1;
        let mut actual = BTreeMap::new();
        let mut expected = BTreeMap::new();
        let mut holds = true;
        for n in lo..=hi {
            let (a, e) = (actual_c.homology(n), expected_c.homology(n));
            holds &= a.free_rank == e.free_rank && a.torsion == e.torsion;
            if !a.is_trivial() {
                actual.insert(n, a.describe());
            }
            if !e.is_trivial() {
                expected.insert(n, e.describe());
            }
        }
        let names = strings.iter().map(|s| s.iter().map(|&o| stage.shape().name(o).to_string()).collect()).collect();
        out.push(LoopCheck { j, strings: names, actual, expected, holds });
    }
    Ok(out)
}

/// `(j, F^{j,j} acyclic)` for `1 ≤ j < k`.
pub fn staircase_acyclicity(grid: &SeparationGrid) -> Vec<(u32, bool)> {
    (1..grid.k).map(|j| (j, grid.layout.cell((j, j)).is_acyclic())).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::ChainComplex;
    use crate::index_cat::{toda_chain, WeakLattice};
    use crate::linalg::Ring;
    use crate::matching::{pointed_reedy_fibrant_replacement, reedy_fibrant_replacement, Diagram};

    /// `Y(i) = S^0` with `Y(a_i) = c_i`, made Reedy fibrant.
    fn chain_diagram(n: u32, coeffs: &[i64], pointed: bool) -> Diagram {
        let j = Arc::new(WeakLattice::compile(&toda_chain(n)).unwrap());
        let mut y = Diagram::new(j.clone(), Ring::Integers);
        for x in 0..j.num_objects() {
            y.objects.insert(x, Arc::new(ChainComplex::sphere(Ring::Integers, 0)));
        }
        for (a, c) in j.arrows().iter().enumerate().map(|(a, _)| a).zip(coeffs) {
            let s = y.obj(j.arrows()[a].src).clone();
            let t = y.obj(j.arrows()[a].dst).clone();
            y.maps.insert(a, ChainMap::identity(&s).scale(&BigInt::from(*c)).rebase(&s, &t));
        }
        let r = if pointed { pointed_reedy_fibrant_replacement(&y) } else { reedy_fibrant_replacement(&y) };
        r.unwrap().diagram
    }

    fn top(y: &Diagram) -> usize {
        (0..y.shape.num_objects()).max_by_key(|&x| y.shape.degree(x)).unwrap()
    }

    #[test]
    fn k_two_grid_is_the_basic_grid() {
        let y = chain_diagram(3, &[1, 1, 1], false);
        let st = strict_stage(&y, false, top(&y), 2).unwrap();
        let g = build_separation_grid(&st).unwrap();
        g.audit().unwrap();
        assert_eq!(g.layout.cell((1, 2)), &g.basic.f2.obj);
        assert_eq!(g.layout.cell((1, 3)), &g.basic.f3.obj);
        assert!(g.towers.is_empty());
        let rep = separate_total(&st, &RectifyOptions::default()).unwrap();
        assert_eq!(rep.operations.len(), 1);
        assert_eq!(rep.verdict, Verdict::Vanishes);
        assert!(rep.lift.is_some());
    }

    #[test]
    fn strict_length_four_chain_separates() {
        for pointed in [false, true] {
            let coeffs: &[i64] = if pointed { &[0, 0, 0, 0] } else { &[2, 1, 3, 1] };
            let y = chain_diagram(4, coeffs, pointed);
            let st = strict_stage(&y, pointed, top(&y), 3).unwrap();
            let g = build_separation_grid(&st).unwrap();
            g.audit().unwrap();
            assert_eq!(g.towers.len(), 1);
            let rep = separate_total(&st, &RectifyOptions::default()).unwrap();
            assert_eq!(rep.operations.len(), 2);
            assert!(rep.operations.iter().all(|o| o.verdict == Verdict::Vanishes));
            assert!(rep.lift.is_some());
        }
    }

    #[test]
    fn pointed_chain_loop_targets() {
        let y = chain_diagram(4, &[0, 0, 0, 0], true);
        let st = strict_stage(&y, true, top(&y), 3).unwrap();
        let g = build_separation_grid(&st).unwrap();
        assert!(staircase_acyclicity(&g).iter().all(|(_, ok)| *ok));
        let checks = fully_reduced_targets(&g, &st).unwrap();
        assert_eq!(checks.len(), 2);
        for c in &checks {
            assert!(c.holds, "{c:?}");
            assert_eq!(c.strings.len(), 1);
        }
        // Ω Y(1) and Ω² Y(0) with Y = S^0
        assert_eq!(checks[0].expected, BTreeMap::from([(-1, "Z".to_string())]));
        assert_eq!(checks[1].expected, BTreeMap::from([(-2, "Z".to_string())]));
    }
}
