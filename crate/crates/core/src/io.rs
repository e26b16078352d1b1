//! Job files: a ring, a category, a diagram of complexes, optionally a DGA.
//!
//! Matrices are row-major integer arrays. `d` at degree `n` is
//! `rank(n−1) × rank(n)`; a map component at `n` is `rank_dst(n) × rank_src(n)`.
//! Missing entries mean zero blocks. Over `F_p` entries are reduced at load.

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::brackets::{BracketError, Cochain, Dga};
use crate::chain::{ChainComplex, ChainMap, Complex};
use crate::index_cat::{delta_truncated, double_diamond, massey_shape, toda_chain, CategorySpec, WeakLattice};
use crate::linalg::{ExactMatrix, Ring};
use crate::rectifier::{HoDiagram, RectifyError};

#[derive(Debug, thiserror::Error)]
pub enum InputError {
    #[error("parse error at line {line}, column {column}: {msg}")]
    Parse { line: usize, column: usize, msg: String },
    #[error("{path}: {msg}")]
    Invalid { path: String, msg: String },
    #[error("category: {0}")]
    Category(String),
}

type Result<T> = std::result::Result<T, InputError>;

fn invalid(path: impl Into<String>, msg: impl std::fmt::Display) -> InputError {
    InputError::Invalid { path: path.into(), msg: msg.to_string() }
}

/// `z` or `fp:<p>`.
pub fn parse_ring(s: &str) -> std::result::Result<Ring, String> {
    match s.trim().to_ascii_lowercase().as_str() {
        "z" => Ok(Ring::Integers),
        t => {
            let p = t.strip_prefix("fp:").ok_or_else(|| format!("unknown ring `{s}`; expected z or fp:<p>"))?;
            let p: u64 = p.parse().map_err(|_| format!("bad characteristic in `{s}`"))?;
            Ring::prime_field(p).map_err(|e| e.to_string())
        }
    }
}

pub fn ring_name(r: Ring) -> String {
    match r {
        Ring::Integers => "z".into(),
        Ring::PrimeField(p) => format!("fp:{p}"),
    }
}

pub type Matrix = Vec<Vec<i64>>;

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComplexSpec {
    pub ranks: BTreeMap<i64, usize>,
    #[serde(default)]
    pub d: BTreeMap<i64, Matrix>,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiagramSpec {
    pub objects: BTreeMap<String, ComplexSpec>,
    /// Keyed by arrow label, then degree.
    #[serde(default)]
    pub maps: BTreeMap<String, BTreeMap<i64, Matrix>>,
}

/// A built-in shape name such as `toda_chain(4)`, or a full description.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CategoryInput {
    Builtin(String),
    Spec(CategorySpec),
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneratorSpec {
    pub name: String,
    pub degree: i64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DgaSpec {
    /// Exterior generators.
    pub generators: Vec<GeneratorSpec>,
    /// `d(generator)` as `[[word], coefficient]` terms.
    #[serde(default)]
    pub d: BTreeMap<String, Vec<(Vec<String>, i64)>>,
    /// Three cocycles, each a map from basis monomial to coefficient.
    #[serde(default)]
    pub massey: Option<[BTreeMap<String, i64>; 3]>,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JobFile {
    #[serde(default)]
    pub ring: Option<String>,
    #[serde(default)]
    pub category: Option<CategoryInput>,
    #[serde(default)]
    pub diagram: Option<DiagramSpec>,
    #[serde(default)]
    pub dga: Option<DgaSpec>,
}

impl JobFile {
    pub fn parse(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| InputError::Parse {
            line: e.line(),
            column: e.column(),
            msg: e.to_string(),
        })
    }

    /// `override_ring` wins over the file; the default is `Z`.
    pub fn ring(&self, override_ring: Option<Ring>) -> Result<Ring> {
        match (override_ring, &self.ring) {
            (Some(r), _) => Ok(r),
            (None, Some(s)) => parse_ring(s).map_err(|m| invalid("ring", m)),
            (None, None) => Ok(Ring::Integers),
        }
    }

    pub fn category_spec(&self) -> Result<CategorySpec> {
        match self.category.as_ref().ok_or_else(|| invalid("category", "missing"))? {
            CategoryInput::Spec(s) => Ok(s.clone()),
            CategoryInput::Builtin(name) => {
                builtin(name).ok_or_else(|| invalid("category", format!("unknown built-in shape `{name}`")))
            }
        }
    }

    pub fn lattice(&self) -> Result<Arc<WeakLattice>> {
        let spec = self.category_spec()?;
        WeakLattice::compile(&spec)
            .map(Arc::new)
            .map_err(|ds| InputError::Category(ds.iter().map(|d| d.to_string()).collect::<Vec<_>>().join("; ")))
    }

    /// The assigned diagram, with coherence witnesses still to be found.
    pub fn ho_diagram(&self, ring: Ring) -> Result<HoDiagram> {
        let j = self.lattice()?;
        let spec = self.diagram.as_ref().ok_or_else(|| invalid("diagram", "missing"))?;
        for name in spec.objects.keys() {
            if j.object(name).is_none() {
                return Err(invalid(format!("diagram.objects.{name}"), "not an object of the category"));
            }
        }
        let mut objects = BTreeMap::new();
        for x in 0..j.num_objects() {
            let name = j.name(x);
            let c = spec.objects.get(name).ok_or_else(|| invalid(format!("diagram.objects.{name}"), "missing"))?;
            objects.insert(x, build_complex(ring, c, &format!("diagram.objects.{name}"))?);
        }
        for label in spec.maps.keys() {
            if j.arrow_by_label(label).is_none() {
                return Err(invalid(format!("diagram.maps.{label}"), "not an arrow of the category"));
            }
        }
        let mut reps = BTreeMap::new();
        for (a, arr) in j.arrows().iter().enumerate() {
            let path = format!("diagram.maps.{}", arr.label);
            let comps = spec.maps.get(&arr.label).ok_or_else(|| invalid(&path, "missing"))?;
            reps.insert(a, build_map(ring, &objects[&arr.src], &objects[&arr.dst], comps, &path)?);
        }
        HoDiagram::new(j, ring, objects, reps).map_err(|e| match e {
            RectifyError::Ends(l) => invalid(format!("diagram.maps.{l}"), "ends do not match"),
            e => invalid("diagram", e),
        })
    }

    pub fn dga(&self, ring: Ring) -> Result<Dga> {
        let spec = self.dga.as_ref().ok_or_else(|| invalid("dga", "missing"))?;
        let gens: Vec<(&str, i64)> = spec.generators.iter().map(|g| (g.name.as_str(), g.degree)).collect();
        let diffs: Vec<(&str, Vec<(Vec<&str>, i64)>)> = spec
            .d
            .iter()
            .map(|(g, terms)| {
                (g.as_str(), terms.iter().map(|(w, c)| (w.iter().map(String::as_str).collect(), *c)).collect())
            })
            .collect();
        Dga::exterior(ring, &gens, &diffs).map_err(|e| invalid("dga", e))
    }

    pub fn massey_triple(&self, a: &Dga) -> Result<[Cochain; 3]> {
        let spec = self.dga.as_ref().ok_or_else(|| invalid("dga", "missing"))?;
        let triple = spec.massey.as_ref().ok_or_else(|| invalid("dga.massey", "missing"))?;
        let mut out = vec![];
        for (i, t) in triple.iter().enumerate() {
            let terms: Vec<(&str, i64)> = t.iter().map(|(k, v)| (k.as_str(), *v)).collect();
            out.push(a.element(&terms).map_err(|e: BracketError| invalid(format!("dga.massey[{i}]"), e))?);
        }
        Ok(out.try_into().expect("three entries"))
    }
}

/// `toda_chain(n)`, `delta_truncated(n)`, `double_diamond`, `massey_shape`.
pub fn builtin(name: &str) -> Option<CategorySpec> {
    let name = name.trim();
    let arg = |prefix: &str| -> Option<u32> { name.strip_prefix(prefix)?.strip_suffix(')')?.trim().parse().ok() };
    match name {
        "double_diamond" => Some(double_diamond()),
        "massey_shape" => Some(massey_shape()),
        _ => {
            if let Some(n) = arg("toda_chain(") {
                (n >= 1).then(|| toda_chain(n))
            } else {
                arg("delta_truncated(").filter(|&n| n >= 1).map(delta_truncated)
            }
        }
    }
}

fn build_matrix(ring: Ring, rows: usize, cols: usize, m: &Matrix, path: &str) -> Result<ExactMatrix> {
    // a zero-column block is written as rows of []
    let ok = m.len() == rows && m.iter().all(|r| r.len() == cols);
    if !ok {
        let got_cols = m.first().map_or(0, |r| r.len());
        return Err(invalid(path, format!("expected a {rows}x{cols} matrix, got {}x{got_cols}", m.len())));
    }
    let flat: Vec<i64> = m.iter().flatten().copied().collect();
    Ok(ExactMatrix::from_i64(ring, rows, cols, &flat))
}

pub fn build_complex(ring: Ring, c: &ComplexSpec, path: &str) -> Result<Complex> {
    let rank = |n: i64| c.ranks.get(&n).copied().unwrap_or(0);
    let mut diffs = BTreeMap::new();
    for (n, m) in &c.d {
        diffs.insert(*n, build_matrix(ring, rank(n - 1), rank(*n), m, &format!("{path}.d.{n}"))?);
    }
    ChainComplex::from_parts(ring, &c.ranks, &diffs).map(Arc::new).map_err(|e| invalid(path, e))
}

pub fn build_map(
    ring: Ring,
    src: &Complex,
    dst: &Complex,
    comps: &BTreeMap<i64, Matrix>,
    path: &str,
) -> Result<ChainMap> {
    let mut out = BTreeMap::new();
    for (n, m) in comps {
        out.insert(*n, build_matrix(ring, dst.rank(*n), src.rank(*n), m, &format!("{path}.{n}"))?);
    }
    ChainMap::new(src, dst, out).map_err(|e| invalid(path, e))
}

pub fn complex_spec(c: &ChainComplex) -> ComplexSpec {
    let ranks: BTreeMap<i64, usize> = c.ranks().into_iter().filter(|(_, r)| *r > 0).collect();
    let d = ranks.keys().filter(|&&n| c.rank(n - 1) > 0).map(|&n| (n, matrix_rows(&c.d(n)))).collect();
    ComplexSpec { ranks, d }
}

pub fn map_spec(f: &ChainMap) -> BTreeMap<i64, Matrix> {
    f.components()
        .iter()
        .filter(|(_, m)| m.rows() * m.cols() > 0 && !m.is_zero())
        .map(|(n, m)| (*n, matrix_rows(m)))
        .collect()
}

fn matrix_rows(m: &ExactMatrix) -> Matrix {
    (0..m.rows())
        .map(|r| (0..m.cols()).map(|c| i64::try_from(m.get(r, c)).expect("entry fits i64")).collect())
        .collect()
}

/// A job file for an assigned diagram, with every map written out.
pub fn diagram_file(ring: Ring, category: CategoryInput, h: &HoDiagram) -> JobFile {
    let j = &h.shape;
    let objects = (0..j.num_objects()).map(|x| (j.name(x).to_string(), complex_spec(&h.objects[&x]))).collect();
    let maps = j.arrows().iter().enumerate().map(|(a, arr)| (arr.label.clone(), map_spec(&h.reps[&a]))).collect();
    JobFile {
        ring: Some(ring_name(ring)),
        category: Some(category),
        diagram: Some(DiagramSpec { objects, maps }),
        dga: None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rings_parse() {
        assert_eq!(parse_ring("z").unwrap(), Ring::Integers);
        assert_eq!(parse_ring("FP:5").unwrap(), Ring::PrimeField(5));
        assert!(parse_ring("fp:4").is_err());
        assert!(parse_ring("q").is_err());
    }

    #[test]
    fn builtins_resolve() {
        assert!(builtin("toda_chain(4)").is_some());
        assert!(builtin("delta_truncated( 2 )").is_some());
        assert!(builtin("toda_chain(0)").is_none());
        assert!(builtin("cube").is_none());
    }

    #[test]
    fn parse_errors_carry_locations() {
        let Err(InputError::Parse { line, .. }) = JobFile::parse("{\n  \"ring\": \"z\",\n  oops\n}") else { panic!() };
        assert_eq!(line, 3);
    }

    #[test]
    fn d_squared_reported_with_degree() {
        let text = r#"{"ring": "z", "category": "toda_chain(1)", "diagram": {"objects": {
            "1": {"ranks": {"0": 1, "1": 1, "2": 1}, "d": {"1": [[1]], "2": [[1]]}},
            "0": {"ranks": {"0": 1}}}, "maps": {"f1": {}}}}"#;
        let err = JobFile::parse(text).unwrap().ho_diagram(Ring::Integers).unwrap_err().to_string();
        assert!(err.contains("diagram.objects.1") && err.contains("degree 2"), "{err}");
    }

    #[test]
    fn shape_errors_name_the_block() {
        let text = r#"{"category": "toda_chain(1)", "diagram": {"objects": {
            "1": {"ranks": {"0": 2}}, "0": {"ranks": {"0": 1}}}, "maps": {"f1": {"0": [[1]]}}}}"#;
        let err = JobFile::parse(text).unwrap().ho_diagram(Ring::Integers).unwrap_err().to_string();
        assert!(err.starts_with("diagram.maps.f1.0: expected a 1x2"), "{err}");
    }

    #[test]
    fn diagram_round_trip() {
        use crate::random::{Sampler, ShapeKind};
        let j = ShapeKind::Toda(3).lattice();
        let h = Sampler::new(5, Ring::PrimeField(3)).ho_diagram(&j, true).unwrap();
        let file = diagram_file(Ring::PrimeField(3), CategoryInput::Builtin("toda_chain(3)".into()), &h);
        let text = serde_json::to_string(&file).unwrap();
        let back = JobFile::parse(&text).unwrap();
        let h2 = back.ho_diagram(back.ring(None).unwrap()).unwrap();
        assert_eq!(h.reps, h2.reps);
        assert_eq!(h.objects, h2.objects);
    }
}
