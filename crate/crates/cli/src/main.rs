//! `hho`: validate diagrams and run rectification, Toda and Massey jobs.
//!
//! Exit codes: 0 success or vanishing, 1 obstructed, 2 invalid input,
//! 3 internal invariant violation.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::{json, Value};

use hho_core::brackets::{massey3, massey_pipeline, toda3_left, toda3_right, toda_long, BracketError};
use hho_core::chain::ChainComplex;
use hho_core::io::{map_spec, parse_ring, ring_name, InputError, JobFile};
use hho_core::linalg::Ring;
use hho_core::rectifier::{rectify, HoDiagram, Outcome, RectifyError, RectifyOptions, StageRecord, Verdict};

#[derive(Parser)]
#[command(
    name = "hho",
    version,
    about = "Rectification and higher homotopy operations for diagrams of chain complexes"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy)]
enum Kind {
    Validate,
    Rectify,
    Toda,
    Massey,
}

#[derive(Subcommand)]
enum Command {
    /// Parse a job file and run the structural checks.
    Validate(Flags),
    /// Rectify the diagram or report the first obstruction.
    Rectify(Flags),
    /// Toda bracket of a chain of maps (`toda_chain(n)`, n ≥ 3).
    Toda(Flags),
    /// Triple Massey product in an exterior DGA.
    Massey(Flags),
}

#[derive(clap::Args, Clone, Debug)]
struct Flags {
    /// `z` or `fp:<p>`; overrides the file.
    #[arg(long, value_parser = parse_ring)]
    ring: Option<Ring>,
    /// Treat ideal morphisms as zero (also implied by a pointed category).
    #[arg(long)]
    pointed: bool,
    /// Run the separated operations at every total stage.
    #[arg(long)]
    separate: bool,
    /// Seed for alternative choices of lifts.
    #[arg(long)]
    seed: Option<u64>,
    /// Write the JSON report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    file: PathBuf,
}

enum Failure {
    Input(String),
    Internal(String),
}

impl From<InputError> for Failure {
    fn from(e: InputError) -> Self {
        Failure::Input(e.to_string())
    }
}

impl From<RectifyError> for Failure {
    fn from(e: RectifyError) -> Self {
        match e {
            RectifyError::Internal(_) => Failure::Internal(e.to_string()),
            e => Failure::Input(e.to_string()),
        }
    }
}

impl From<BracketError> for Failure {
    fn from(e: BracketError) -> Self {
        match e {
            BracketError::Rectify(r) => r.into(),
            BracketError::Mismatch(_) | BracketError::Chain(_) => Failure::Internal(e.to_string()),
            e => Failure::Input(e.to_string()),
        }
    }
}

struct Report {
    json: Value,
    summary: Vec<String>,
    verdict: Verdict,
}

fn stages_json(stages: &[StageRecord]) -> Value {
    stages
        .iter()
        .map(|s| json!({ "object": s.object, "k": s.k, "label": s.label, "verdict": s.verdict, "detail": s.detail }))
        .collect()
}

fn homology_json(c: &ChainComplex) -> Value {
    Value::Object(c.homology_table().into_iter().map(|(n, g)| (n.to_string(), json!(g))).collect())
}

fn coords(v: &[num_bigint::BigInt]) -> String {
    format!("({})", v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(", "))
}

struct Loaded {
    file: JobFile,
    ring: Ring,
    pointed: bool,
}

fn load(flags: &Flags) -> Result<Loaded, Failure> {
    let text =
        std::fs::read_to_string(&flags.file).map_err(|e| Failure::Input(format!("{}: {e}", flags.file.display())))?;
    let file = JobFile::parse(&text)?;
    let ring = file.ring(flags.ring)?;
    let pointed = flags.pointed || (file.category.is_some() && file.category_spec()?.pointed);
    Ok(Loaded { file, ring, pointed })
}

fn options(flags: &Flags, pointed: bool) -> RectifyOptions {
    RectifyOptions { pointed, check_oracle: true, choice_seed: flags.seed, parallel: false, separate: flags.separate }
}

fn diagram(l: &Loaded) -> Result<HoDiagram, Failure> {
    let mut h = l.file.ho_diagram(l.ring)?;
    h.complete(l.pointed)?;
    Ok(h)
}

fn header(kind: &str, l: &Loaded, flags: &Flags) -> Value {
    json!({ "command": kind, "ring": ring_name(l.ring), "pointed": l.pointed, "seed": flags.seed })
}

fn cmd_validate(flags: &Flags) -> Result<Report, Failure> {
    let l = load(flags)?;
    let mut checked = vec![];
    if l.file.category.is_some() {
        let j = l.file.lattice()?;
        checked.push(format!(
            "category: {} objects, {} arrows, max degree {}",
            j.num_objects(),
            j.arrows().len(),
            j.max_degree()
        ));
    }
    if l.file.diagram.is_some() {
        diagram(&l)?;
        checked.push(format!(
            "diagram: complexes, chain maps and relations hold{}",
            if l.pointed { ", ideal nullhomotopic" } else { "" }
        ));
    }
    if l.file.dga.is_some() {
        let a = l.file.dga(l.ring)?;
        checked.push(format!("dga: dimension {}, axioms hold", a.dim()));
        if l.file.dga.as_ref().is_some_and(|d| d.massey.is_some()) {
            l.file.massey_triple(&a)?;
        }
    }
    if checked.is_empty() {
        return Err(Failure::Input("nothing to validate".into()));
    }
    let mut json = header("validate", &l, flags);
    json["status"] = json!("clean");
    json["checked"] = json!(checked);
    Ok(Report { json, summary: vec!["clean".into()], verdict: Verdict::Vanishes })
}

/// A DGA file without a diagram: the stand-in diagram of the Massey product,
/// with the strict part below the top held at the given cocycles.
fn rectify_massey(flags: &Flags, l: &Loaded) -> Result<Report, Failure> {
    let a = l.file.dga(l.ring)?;
    let [al, be, ga] = l.file.massey_triple(&a)?;
    let report = massey_pipeline(&a, &al, &be, &ga, &options(flags, true))?;
    let mut json = header("rectify", l, flags);
    json["pointed"] = json!(true);
    json["category"] = json!("massey_shape");
    json["outcome"] = json!(report.verdict);
    json["report"] = report.to_json();
    let vs = &report.value_set;
    let line = format!(
        "{} at ({},{}): value {} in {}",
        report.verdict,
        report.x_name,
        report.k,
        coords(&vs.defect),
        vs.quotient.describe()
    );
    Ok(Report { json, summary: vec![line], verdict: report.verdict })
}

fn cmd_rectify(flags: &Flags) -> Result<Report, Failure> {
    let l = load(flags)?;
    if l.file.diagram.is_none() && l.file.dga.is_some() {
        return rectify_massey(flags, &l);
    }
    let h = diagram(&l)?;
    let mut json = header("rectify", &l, flags);
    let out = rectify(&h, &options(flags, l.pointed))?;
    json["stages"] = stages_json(out.stages());
    let j = &h.shape;
    match out {
        Outcome::Rectified(r) => {
            r.verify_classes(&h).map_err(Failure::Internal)?;
            json["outcome"] = json!("rectified");
            json["diagram"] = Value::Object(
                j.arrows()
                    .iter()
                    .enumerate()
                    .map(|(a, arr)| (arr.label.clone(), json!(map_spec(&r.diagram.maps[&a]))))
                    .collect(),
            );
            json["objects"] = Value::Object(
                (0..j.num_objects())
                    .map(|x| (j.name(x).to_string(), json!(hho_core::io::complex_spec(&r.diagram.objects[&x]))))
                    .collect(),
            );
            json["equivalence"] = Value::Object(
                r.equivalence.iter().map(|(x, e)| (j.name(*x).to_string(), json!(map_spec(e)))).collect(),
            );
            Ok(Report {
                json,
                summary: vec![format!("rectified ({} stages)", r.stages.len())],
                verdict: Verdict::Vanishes,
            })
        }
        Outcome::Obstructed { report, .. } => {
            json["outcome"] = json!("obstructed");
            json["report"] = report.to_json();
            let line = format!(
                "obstructed at ({},{}): value {} in {}",
                report.x_name,
                report.k,
                coords(&report.value_set.defect),
                report.value_set.quotient.describe()
            );
            Ok(Report { json, summary: vec![line], verdict: Verdict::Obstructed })
        }
    }
}

fn cmd_toda(flags: &Flags) -> Result<Report, Failure> {
    let mut l = load(flags)?;
    l.pointed = true;
    let h = diagram(&l)?;
    let opts = options(flags, true);
    let n = h.shape.max_degree();
    let y0 = h.objects[&h.shape.object("0").ok_or_else(|| Failure::Input("no object `0`".into()))?].clone();
    let mut json = header("toda", &l, flags);
    json["length"] = json!(n);
    json["loop_target_homology"] = homology_json(&y0.shift(-1));
    if n == 3 {
        let right = toda3_right(&h, &opts)?;
        let label = |a: &str| h.reps[&h.shape.arrow_by_label(a).expect("chain arrow")].clone();
        let left = toda3_left(&label("f1"), &label("f2"), &label("f3"))?;
        if !left.value.same_coset(&right.union) {
            return Err(Failure::Internal("left and right brackets differ".into()));
        }
        json["bracket"] = right.to_json();
        json["left"] = left.to_json();
        json["stages"] = stages_json(&right.stages);
        let u = &right.union;
        let summary = vec![
            format!("⟨f1, f2, f3⟩ ⊂ {}: {}", u.ambient.describe(), u.verdict),
            format!("quotient {} ; residue {}", u.quotient.describe(), coords(&u.residue())),
        ];
        Ok(Report { json, summary, verdict: u.verdict })
    } else {
        let long = toda_long(&h, &opts)?;
        json["bracket"] = long.to_json();
        let mut summary = vec![format!("length-{n} bracket: {}", long.verdict())];
        for (i, op) in long.separated.iter().enumerate() {
            summary.push(format!("separated {}: {}", i + 1, op.verdict));
        }
        Ok(Report { json, summary, verdict: long.verdict() })
    }
}

fn cmd_massey(flags: &Flags) -> Result<Report, Failure> {
    let l = load(flags)?;
    let a = l.file.dga(l.ring)?;
    let [al, be, ga] = l.file.massey_triple(&a)?;
    let m = massey3(&a, &al, &be, &ga, Some(&options(flags, true)))?;
    let mut json = header("massey", &l, flags);
    json["product"] = m.to_json(&a);
    let v = &m.value;
    let ind = if v.has_zero_indeterminacy() {
        "trivial indeterminacy".to_string()
    } else {
        format!("quotient {}", v.quotient.describe())
    };
    let summary =
        vec![format!("⟨α, β, γ⟩ ∋ {} in H^{}: {}, {ind}", a.describe(&m.representative), m.degree, v.verdict)];
    Ok(Report { json, summary, verdict: v.verdict })
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter("HHO_LOG")).init();
    let cli = Cli::parse();
    let (kind, flags) = match &cli.command {
        Command::Validate(f) => (Kind::Validate, f),
        Command::Rectify(f) => (Kind::Rectify, f),
        Command::Toda(f) => (Kind::Toda, f),
        Command::Massey(f) => (Kind::Massey, f),
    };
    let result = match kind {
        Kind::Validate => cmd_validate(flags),
        Kind::Rectify => cmd_rectify(flags),
        Kind::Toda => cmd_toda(flags),
        Kind::Massey => cmd_massey(flags),
    };
    match result {
        Ok(r) => {
            let text = serde_json::to_string_pretty(&r.json).expect("reports serialize") + "\n";
            match &flags.out {
                Some(p) => {
                    if let Err(e) = std::fs::write(p, text) {
                        eprintln!("error: {}: {e}", p.display());
                        return ExitCode::from(2);
                    }
                    r.summary.iter().for_each(|s| println!("{s}"));
                }
                None => {
                    print!("{text}");
                    r.summary.iter().for_each(|s| eprintln!("{s}"));
                }
            }
            ExitCode::from(if r.verdict == Verdict::Obstructed { 1 } else { 0 })
        }
        Err(Failure::Input(m)) => {
            eprintln!("invalid input: {m}");
            ExitCode::from(2)
        }
        Err(Failure::Internal(m)) => {
            eprintln!("internal error: {m}");
            ExitCode::from(3)
        }
    }
}
