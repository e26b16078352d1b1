//! Acceptance suite: one line per criterion, nonzero exit on any failure.

use std::path::PathBuf;
use std::process::Command;
use std::sync::Arc;
use std::time::{Duration, Instant};

use num_bigint::BigInt;
use rand::Rng;

use hho_core::brackets::{
    choice_spread, massey3, massey_enumerate, toda3_left_enumerate, toda3_right, toda_diagram, toda_long, Dga,
};
use hho_core::chain::{
    cone_and_cylinder, dual_ladder_extend, factor_cof_we, factor_we_fib, homotopy_pullback_lift,
    homotopy_pushout_extend, ladder_lift, pullback, pushout, rectify_along_cofibration, rectify_along_fibration,
    reduced_path, ChainComplex, ChainMap, Complex, LinSys,
};
use hho_core::io::{diagram_file, CategoryInput};
use hho_core::linalg::{ExactMatrix, Ring};
use hho_core::matching::matching_pullback_check;
use hho_core::random::{Sampler, ShapeKind};
use hho_core::rectifier::{rectify, HoDiagram, Outcome, RectifyOptions, Verdict};

const RINGS: [Ring; 3] = [Ring::PrimeField(2), Ring::PrimeField(3), Ring::Integers];

type Check = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn shape_name(s: ShapeKind) -> String {
    s.to_string()
}

/// Pointed and unpointed sampling pairs used by criteria 2 and 3.
fn corpus() -> Vec<(ShapeKind, bool)> {
    vec![
        (ShapeKind::Toda(3), true),
        (ShapeKind::Toda(3), false),
        (ShapeKind::Toda(4), true),
        (ShapeKind::Toda(4), false),
        (ShapeKind::Delta(3), false),
        (ShapeKind::DoubleDiamond, false),
    ]
}

fn massey_nonvanishing() -> Check {
    let t = Instant::now();
    let a = Dga::exterior(Ring::PrimeField(2), &[("a", 1), ("b", 1), ("x", 1)], &[("x", vec![(vec!["a", "b"], 1)])])
        .map_err(|e| e.to_string())?;
    let e = |n: &str| a.element(&[(n, 1)]).unwrap();
    let opts = RectifyOptions { pointed: true, check_oracle: true, ..Default::default() };
    let m = massey3(&a, &e("a"), &e("b"), &e("b"), Some(&opts)).map_err(|e| e.to_string())?;
    let bx = a.element(&[("bx", 1)]).unwrap();
    ensure(a.dim() == 8, || format!("dimension {}", a.dim()))?;
    ensure(m.degree == 2 && a.class_of(&m.representative) == a.class_of(&bx), || "value is not [bx]".into())?;
    ensure(a.class_of(&bx).iter().any(|c| c != &BigInt::from(0)), || "[bx] = 0".into())?;
    ensure(m.value.has_zero_indeterminacy(), || "indeterminacy is not trivial".into())?;
    let set = massey_enumerate(&a, &e("a"), &e("b"), &e("b"), 1 << 16)
        .map_err(|e| e.to_string())?
        .ok_or("too many choices")?;
    ensure(set == m.value.enumerate(1).ok_or("coset too large")?, || "enumeration disagrees".into())?;
    let dt = t.elapsed();
    ensure(dt < Duration::from_secs(1), || format!("took {dt:?}"))?;
    Ok(format!("<[a],[b],[b]> = {{[bx]}}, {} defining systems enumerated, {dt:.2?}", set.len()))
}

/// Criteria 2 and 3: every total stage is checked against the oracle, and the
/// separated operations (with the lift into `P` on full vanishing) against the total.
#[derive(Default)]
struct Sweep {
    instances: usize,
    total: usize,
    obstructed: usize,
    separated: usize,
    lifts: usize,
}

/// Every corpus instance over every ring; `Err` on the first rectifier error,
/// which includes any oracle or separation disagreement.
fn sweep(check_oracle: bool, separate: bool) -> Result<Sweep, String> {
    let mut out = Sweep::default();
    for (shape, pointed) in corpus() {
        let j = shape.lattice();
        for ring in RINGS {
            for seed in 0..12u64 {
                let mut s = Sampler::new(seed * 101 + ring.characteristic(), ring);
                let h = s.ho_diagram(&j, pointed).map_err(|e| format!("{} seed {seed}: {e}", shape_name(shape)))?;
                let opts = RectifyOptions { pointed, check_oracle, separate, ..Default::default() };
                let res = rectify(&h, &opts).map_err(|e| format!("{} {ring:?} seed {seed}: {e}", shape_name(shape)))?;
                out.instances += 1;
                for st in res.stages() {
                    match st.label.as_str() {
                        "total operation" => {
                            out.total += 1;
                            out.obstructed += usize::from(st.verdict == Verdict::Obstructed);
                        }
                        "separated operations" => {
                            out.separated += 1;
                            out.lifts += usize::from(st.verdict == Verdict::Vanishes);
                        }
                        _ => {}
                    }
                }
            }
        }
    }
    for ring in RINGS {
        for h in moore_chains(ring) {
            let opts = RectifyOptions { pointed: true, check_oracle, separate, ..Default::default() };
            let res = rectify(&h, &opts).map_err(|e| format!("Moore chain {ring:?}: {e}"))?;
            out.instances += 1;
            for st in res.stages() {
                match st.label.as_str() {
                    "total operation" => {
                        out.total += 1;
                        out.obstructed += usize::from(st.verdict == Verdict::Obstructed);
                    }
                    "separated operations" => {
                        out.separated += 1;
                        out.lifts += usize::from(st.verdict == Verdict::Vanishes);
                    }
                    _ => {}
                }
            }
        }
    }
    Ok(out)
}

/// `S⁰ −qc→ S⁰ −i→ M(q) −e→ S¹`: random sampling almost never produces an
/// essential bracket, these do over `Z` and for `p | q`.
fn moore_chains(ring: Ring) -> Vec<HoDiagram> {
    let single = |src: &Complex, dst: &Complex, n: i64, x: i64| {
        ChainMap::new(src, dst, [(n, ExactMatrix::from_i64(ring, 1, 1, &[x]))].into()).unwrap()
    };
    let s0: Complex = Arc::new(ChainComplex::sphere(ring, 0));
    let s1: Complex = Arc::new(ChainComplex::sphere(ring, 1));
    let mut out = vec![];
    for q in 2..=4 {
        let m: Complex = Arc::new(ChainComplex::moore(ring, q, 0));
        for c in 1..=2 {
            for e in 1..=2 {
                let maps = [single(&s0, &s0, 0, q * c), single(&s0, &m, 0, 1), single(&m, &s1, 1, e)];
                out.push(toda_diagram(&maps).unwrap());
            }
        }
    }
    out
}

/// The oracle pass is timed on its own; separation runs as a second pass.
fn oracle_and_separation() -> (Check, Check) {
    let t = Instant::now();
    let oracle = sweep(true, false);
    let dt = t.elapsed();
    let c2 = match oracle {
        Err(f) => Err(f),
        Ok(s) if s.instances < 200 => Err(format!("only {} instances", s.instances)),
        Ok(_) if dt > Duration::from_secs(60) => Err(format!("took {dt:?}")),
        Ok(s) => Ok(format!(
            "{} instances, {} total stages ({} obstructed) agree with the oracle, {dt:.1?}",
            s.instances, s.total, s.obstructed
        )),
    };
    let c3 = match sweep(false, true) {
        Err(f) => Err(f),
        Ok(s) if s.separated == 0 => Err("no separated stages".into()),
        Ok(s) => Ok(format!(
            "{} stages with k ≥ 2 agree with the total operation; {} lifts into P validated",
            s.separated, s.lifts
        )),
    };
    (c2, c3)
}

fn perturbation_completeness() -> Check {
    let mut n = 0;
    for (shape, pointed) in corpus() {
        let j = shape.lattice();
        for ring in RINGS {
            for seed in 0..6u64 {
                let mut s = Sampler::new(seed + 7000, ring);
                let y = s.strict_diagram(&j, pointed);
                let h = s.perturb(&y).map_err(|e| e.to_string())?;
                let out = rectify(&h, &RectifyOptions { pointed, check_oracle: true, ..Default::default() })
                    .map_err(|e| format!("{} seed {seed}: {e}", shape_name(shape)))?;
                let Outcome::Rectified(r) = out else {
                    return Err(format!("{} {ring:?} seed {seed}: obstructed", shape_name(shape)));
                };
                ensure(r.stages.iter().all(|s| s.verdict == Verdict::Vanishes), || "a stage obstructed".into())?;
                r.verify_classes(&h)?;
                n += 1;
            }
        }
    }
    ensure(n >= 100, || format!("only {n} perturbations"))?;
    Ok(format!("{n} perturbed strict diagrams rectify to homotopic maps"))
}

fn matching_pullback() -> Check {
    let mut n = 0;
    for (shape, pointed) in corpus() {
        let j = shape.lattice();
        for ring in RINGS {
            for seed in 0..4u64 {
                let y = Sampler::new(seed + 500, ring).strict_diagram(&j, pointed);
                for x in j.objects_by_degree() {
                    for k in 1..j.degree(x) {
                        let iso = matching_pullback_check(&y, x, k, pointed).map_err(|e| e.to_string())?;
                        ensure(iso.is_some(), || {
                            format!("{} ({}, {k}): no isomorphism", shape_name(shape), j.name(x))
                        })?;
                        n += 1;
                    }
                }
            }
        }
    }
    ensure(n >= 50, || format!("only {n} cases"))?;
    Ok(format!("{n} matching objects isomorphic to their pullback grids"))
}

fn fully_reduced() -> Check {
    let (mut n, mut boxed) = (0, 0);
    for len in [3u32, 4] {
        let j = ShapeKind::Toda(len).lattice();
        for ring in RINGS {
            for seed in 0..5u64 {
                let mut s = Sampler::new(seed + 900, ring);
                let y = s.strict_diagram(&j, true);
                let h = s.perturb(&y).map_err(|e| e.to_string())?;
                let out = toda_long(&h, &RectifyOptions { pointed: true, ..Default::default() })
                    .map_err(|e| e.to_string())?;
                ensure(out.loops.len() == len as usize - 2, || {
                    format!("toda_chain({len}): {} checks", out.loops.len())
                })?;
                for l in &out.loops {
                    ensure(l.holds && l.strings.len() == 1, || {
                        format!("toda_chain({len}) seed {seed} j = {}: {:?} vs {:?}", l.j, l.actual, l.expected)
                    })?;
                    n += 1;
                }
                boxed += usize::from(len == 4);
            }
        }
    }
    Ok(format!("{n} staircase targets match shifted homology; {boxed} length-4 chains give ΩY(1) and Ω²Y(0)"))
}

fn indeterminacy() -> Check {
    let j = ShapeKind::Toda(3).lattice();
    let opts = RectifyOptions { pointed: true, check_oracle: true, ..Default::default() };
    let (mut sets, mut spreads) = (0, 0);
    for ring in [Ring::PrimeField(2), Ring::PrimeField(3)] {
        for seed in 0..30u64 {
            let h = Sampler::new(seed + 300, ring).ho_diagram(&j, true).map_err(|e| e.to_string())?;
            let right = toda3_right(&h, &opts).map_err(|e| e.to_string())?;
            let label = |a: &str| h.reps[&j.arrow_by_label(a).unwrap()].clone();
            let observed =
                toda3_left_enumerate(&label("f1"), &label("f2"), &label("f3"), 1 << 12).map_err(|e| e.to_string())?;
            if let (Some(obs), Some(coset)) = (observed, right.union.enumerate(1 << 12)) {
                ensure(right.union.is_closed(&obs) && obs == coset, || {
                    format!("{ring:?} seed {seed}: value set mismatch")
                })?;
                sets += 1;
            }
            if let Some(fixed) = right.fixed.enumerate(1 << 12) {
                ensure(right.fixed.is_closed(&fixed), || format!("{ring:?} seed {seed}: fixed set not closed"))?;
            }
            if let Some(c) =
                choice_spread(&right.report.grid.f2, &right.report.theta, 1 << 12).map_err(|e| e.to_string())?
            {
                ensure(c.bijections_hold && c.image == c.spread, || format!("{ring:?} seed {seed}: spread mismatch"))?;
                spreads += 1;
            }
        }
    }
    ensure(sets > 0 && spreads > 0, || "nothing small enough to enumerate".into())?;
    Ok(format!("{sets} enumerated value sets closed and equal to the coset; {spreads} image/spread comparisons agree"))
}

/// A random chain map, or zero when the solver finds none.
fn random_map(s: &mut Sampler, src: &Complex, dst: &Complex) -> ChainMap {
    let mut sys = LinSys::new(s.ring);
    let v = sys.map_var(src, dst, 0);
    sys.chain_map_condition(&v);
    let sol = sys.solve_with_kernel().expect("zero is a chain map");
    let mut x = sol.particular.clone();
    for k in &sol.kernel {
        let c: i64 = s.rng().gen_range(-1..=1);
        for (o, y) in x.iter_mut().zip(k) {
            *o += y * c;
        }
    }
    let x: Vec<BigInt> = x.into_iter().map(|e| s.ring.reduce(e)).collect();
    sol.map_from(&x, &v)
}

fn toolkit_case(s: &mut Sampler) -> Result<(), String> {
    let e = |e: hho_core::chain::ChainError| e.to_string();
    let (t, y, z, x, w) = (s.complex(), s.complex(), s.complex(), s.complex(), s.complex());

    // rectify along a fibration
    let g = random_map(s, &y, &z);
    let q = factor_we_fib(&g).second;
    let f = random_map(s, &t, &q.src);
    let hh = s.homotopy(&t, &z);
    let psi = q.compose(&f).add(&hh.boundary());
    let (f2, wit) = rectify_along_fibration(&psi, &f, &q, &hh).map_err(e)?;
    ensure(q.compose(&f2) == psi && wit.witnesses(&f2, &f), || "rectify_along_fibration".into())?;

    // homotopy pullback lift
    let i = random_map(s, &x, &z);
    let sq = pullback(&i, &q);
    let w0 = random_map(s, &t, &sq.obj);
    let (p, f0) = (sq.px.compose(&w0), sq.py.compose(&w0));
    let k = s.homotopy(&t, &q.src);
    let f = f0.add(&k.boundary());
    let h = k.post(&q);
    let (g, wit) = homotopy_pullback_lift(&sq, &p, &f, &h).map_err(e)?;
    ensure(sq.px.compose(&g) == p && wit.witnesses(&sq.py.compose(&g), &f), || "homotopy_pullback_lift".into())?;

    // ladder
    let bottom = sq;
    let tv = random_map(s, &w, &x);
    let top = pullback(&tv, &bottom.px);
    let k0 = random_map(s, &t, &top.obj);
    let sigma = top.px.compose(&k0);
    let phi0 = bottom.py.compose(&top.py.compose(&k0));
    let k = s.homotopy(&t, &q.src);
    let phi = phi0.add(&k.boundary());
    let l = ladder_lift(&bottom, &top, &sigma, &phi, &k.post(&q)).map_err(e)?;
    ensure(
        top.px.compose(&l.kappa) == sigma
            && l.phi_to_q_theta.witnesses(&phi, &bottom.py.compose(&l.theta))
            && l.theta_to_phi_kappa.witnesses(&l.theta, &top.py.compose(&l.kappa)),
        || "ladder_lift".into(),
    )?;

    // rectify along a cofibration
    let g = random_map(s, &x, &y);
    let j = factor_cof_we(&g).first;
    let qb = random_map(s, &j.dst, &z);
    let hh = s.homotopy(&x, &z);
    let psi = qb.compose(&j).add(&hh.boundary());
    let (q2, wit) = rectify_along_cofibration(&psi, &qb, &j, &hh).map_err(e)?;
    ensure(q2.compose(&j) == psi && wit.witnesses(&q2, &qb), || "rectify_along_cofibration".into())?;

    // homotopy pushout extension
    let alpha = random_map(s, &x, &w);
    let po = pushout(&alpha, &j).map_err(e)?;
    let g0 = random_map(s, &po.obj, &z);
    let (p, f0) = (g0.compose(&po.jx), g0.compose(&po.jy));
    let k = s.homotopy(&j.dst, &z);
    let f = f0.add(&k.boundary());
    let h = k.pre(&j).neg();
    let (g, wit) = homotopy_pushout_extend(&po, &p, &f, &h).map_err(e)?;
    ensure(g.compose(&po.jx) == p && wit.witnesses(&g.compose(&po.jy), &f), || "homotopy_pushout_extend".into())?;

    // dual ladder
    let tx = random_map(s, &w, &t);
    let top = pushout(&tx, &po.jx).map_err(e)?;
    let k0 = random_map(s, &top.obj, &z);
    let sigma = k0.compose(&top.jx);
    let phi0 = k0.compose(&top.jy).compose(&po.jy);
    let k = s.homotopy(&j.dst, &z);
    let phi = phi0.add(&k.boundary());
    let (kappa, theta, wit) = dual_ladder_extend(&po, &top, &sigma, &phi, &k.pre(&j).neg()).map_err(e)?;
    ensure(
        kappa.compose(&top.jx) == sigma
            && kappa.compose(&top.jy) == theta
            && theta.compose(&po.jx) == sigma.compose(&tx)
            && wit.witnesses(&theta.compose(&po.jy), &phi),
        || "dual_ladder_extend".into(),
    )?;

    // reduced path objects and cones
    ensure(reduced_path(&y).0.is_acyclic() && cone_and_cylinder(&y).cone.is_acyclic(), || {
        "path/cone not acyclic".into()
    })?;
    Ok(())
}

fn toolkit() -> Check {
    let mut n = 0;
    for ring in RINGS {
        let mut s = Sampler::new(4242 + ring.characteristic(), ring);
        for i in 0..200 {
            toolkit_case(&mut s).map_err(|m| format!("{ring:?} case {i}: {m}"))?;
            n += 1;
        }
    }
    Ok(format!("{n} random cases, each through all six constructions and the acyclicity checks"))
}

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

fn determinism() -> Check {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut jobs: Vec<(String, PathBuf)> = vec![
        ("rectify".into(), fixture("perturbed.json")),
        ("rectify".into(), fixture("toda3.json")),
        ("toda".into(), fixture("toda3.json")),
        ("toda".into(), fixture("toda4.json")),
        ("massey".into(), fixture("massey.json")),
    ];
    for seed in 0..4u64 {
        let j = ShapeKind::Toda(3).lattice();
        let h = Sampler::new(seed, Ring::PrimeField(3)).ho_diagram(&j, true).map_err(|e| e.to_string())?;
        let file = diagram_file(Ring::PrimeField(3), CategoryInput::Builtin("toda_chain(3)".into()), &h);
        let path = dir.path().join(format!("job{seed}.json"));
        std::fs::write(&path, serde_json::to_string(&file).unwrap()).map_err(|e| e.to_string())?;
        jobs.push(("rectify".into(), path.clone()));
        jobs.push(("toda".into(), path));
    }
    for (cmd, path) in &jobs {
        let run = || {
            Command::new(env!("CARGO_BIN_EXE_hho"))
                .args([cmd.as_str(), "--separate", "--seed", "11"])
                .arg(path)
                .output()
                .map(|o| o.stdout)
        };
        let (a, b) = (run().map_err(|e| e.to_string())?, run().map_err(|e| e.to_string())?);
        ensure(!a.is_empty() && a == b, || format!("{cmd} {}: reports differ", path.display()))?;
    }
    Ok(format!("{} jobs rerun with byte-identical reports", jobs.len()))
}

fn main() {
    let (c2, c3) = oracle_and_separation();
    let results: Vec<(&str, Check)> = vec![
        ("1 Massey nonvanishing", massey_nonvanishing()),
        ("2 oracle equivalence", c2),
        ("3 separation equivalence", c3),
        ("4 perturbation completeness", perturbation_completeness()),
        ("5 matching-object pullback", matching_pullback()),
        ("6 fully reduced decomposition", fully_reduced()),
        ("7 indeterminacy structure", indeterminacy()),
        ("8 lifting toolkit", toolkit()),
        ("9 determinism", determinism()),
    ];
    let mut failed = 0;
    for (name, r) in &results {
        match r {
            Ok(m) => println!("criterion {name}: PASS ({m})"),
            Err(m) => {
                failed += 1;
                println!("criterion {name}: FAIL ({m})");
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
