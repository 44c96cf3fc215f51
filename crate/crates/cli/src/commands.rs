use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;

use gardingkit::cones::{self, SampleSpec, SampleStats, Stratum};
use gardingkit::hygeo::{diagnostics, fmt_f64, shape_from_graph, NuIdentityResidual};
use gardingkit::lemma_lab::{check, LabConfig};
use gardingkit::plateau::{self, NewtonConfig, SolverConfig};
use gardingkit::{GraphField, LemmaId, Verdict};
use serde::{Deserialize, Serialize};

use crate::args::{Output, ReplayArgs, SampleArgs, ShapeArgs, SolveArgs, StratumArg, VerifyArgs};
use crate::exit::{Failure, ANALYTIC, DATA, INCONCLUSIVE, OK, USAGE};
use crate::manifest::{timestamp, write_json, RunManifest};

/// Exit code and output files (relative to the output directory) of a run.
struct Outcome {
    code: u8,
    outputs: Vec<String>,
}

/// Runs `body` in the output directory and records a manifest next to its outputs.
fn recorded<A: Serialize>(
    command: &str,
    args: &A,
    output: &Output,
    seed: Option<u64>,
    body: impl FnOnce(&Path) -> Result<Outcome, Failure>,
) -> Result<u8, Failure> {
    fs::create_dir_all(&output.out_dir)?;
    let started = timestamp(output.reproducible);
    let outcome = body(&output.out_dir)?;
    let manifest = RunManifest {
        command: command.to_string(),
        config: serde_json::to_value(args)?,
        seed,
        version: env!("CARGO_PKG_VERSION").to_string(),
        started,
        finished: timestamp(output.reproducible),
        outputs: outcome.outputs,
        exit_code: outcome.code,
    };
    let path = manifest.write(&output.out_dir)?;
    eprintln!("manifest: {}", path.display());
    Ok(outcome.code)
}

fn lemma_list(a: &VerifyArgs) -> Result<Vec<LemmaId>, Failure> {
    let mut ids: Vec<LemmaId> = if a.all { LemmaId::ALL.to_vec() } else { a.lemma.clone() };
    if a.extra {
        ids.extend(LemmaId::EXTRA);
    }
    let mut seen = Vec::new();
    ids.retain(|id| {
        let fresh = !seen.contains(id);
        seen.push(*id);
        fresh
    });
    if ids.is_empty() {
        return Err(Failure::new(USAGE, "choose lemmas with --all, --lemma or --extra"));
    }
    Ok(ids)
}

pub fn verify(a: &VerifyArgs) -> Result<u8, Failure> {
    let ids = lemma_list(a)?;
    let mut cfg = LabConfig::new(a.n, a.k);
    cfg.a = a.a;
    cfg.b = a.b;
    cfg.seed = a.seed;
    cfg.trials = a.trials;
    cfg.epsilon = a.epsilon;
    cfg.big_n = a.big_n;
    cfg.sigma_range = (a.sigma_lo, a.sigma_hi);
    cfg.search.rounds = a.rounds;
    cfg.search.top = a.top;
    cfg.search.polish_rounds = a.polish_rounds;
    cfg.directions = a.directions;
    cfg.validate()?;
    if let Some(id) = ids.iter().find(|id| a.k < id.min_order()) {
        return Err(Failure::new(USAGE, format!("{id} needs k >= {}", id.min_order())));
    }
    recorded("verify", a, &a.output, Some(a.seed), |dir| {
        let mut outputs = Vec::new();
        let (mut violated, mut inconclusive) = (false, false);
        for id in ids {
            let mut rep = check(id, &cfg)?;
            if a.output.reproducible {
                rep.wall_ms = 0;
            }
            println!(
                "{:<22} {:<12} worst {:>12.4e}  constant {}",
                id.name(),
                format!("{:?}", rep.verdict).to_lowercase(),
                rep.worst_violation,
                rep.empirical_constant.map_or("-".to_string(), |c| format!("{c:.6}"))
            );
            violated |= rep.verdict == Verdict::Violated;
            inconclusive |= rep.verdict == Verdict::Inconclusive;
            let name = format!("{}.json", id.name());
            write_json(&dir.join(&name), &rep)?;
            outputs.push(name);
        }
        let code = if violated {
            ANALYTIC
        } else if inconclusive {
            INCONCLUSIVE
        } else {
            OK
        };
        Ok(Outcome { code, outputs })
    })
}

pub fn solve(a: &SolveArgs) -> Result<u8, Failure> {
    let mut cfg = SolverConfig::new(a.n, a.k, a.sigma, a.radius, a.eps.clone());
    cfg.nodes = a.grid;
    cfg.newton = NewtonConfig {
        tol: a.tol,
        max_iters: a.max_iters,
        damping: a.damping,
    };
    cfg.init = a.init.into();
    cfg.validate()?;
    if !(a.a > 0.0) {
        return Err(Failure::new(USAGE, "A must be positive"));
    }
    recorded("solve", a, &a.output, None, |dir| {
        let run = plateau::solve(&cfg)?;
        let mut outputs = Vec::new();
        for (i, p) in run.profiles.iter().enumerate() {
            let name = format!("profile_{:02}.csv", i + 1);
            let mut w = BufWriter::new(File::create(dir.join(&name))?);
            p.write_csv(&mut w)?;
            w.flush()?;
            outputs.push(name);
            println!(
                "eps {:<8} iters {:>2}  residual {:.2e}  max|kappa| {:.6}  min nu {:.6}",
                p.epsilon,
                p.iters,
                p.max_residual,
                p.max_abs_kappa(),
                p.min_nu()
            );
        }
        if let Some(f) = &run.failure {
            println!("halted at eps {}: {}", f.epsilon, f.reason);
        }
        let summary = plateau::summarize(&cfg, &run, a.a);
        println!("verdict {}", summary.verdict);
        write_json(&dir.join("summary.json"), &summary)?;
        outputs.push("summary.json".into());
        let code = if summary.verdict == "holds" { OK } else { ANALYTIC };
        Ok(Outcome { code, outputs })
    })
}

/// Field-level summary written by `shape`; per-node values go to the CSV.
#[derive(Debug, Serialize, Deserialize)]
struct ShapeReport {
    n: usize,
    k: usize,
    #[serde(rename = "L")]
    l: f64,
    nodes: usize,
    nu_min: f64,
    nu_max: f64,
    max_abs_kappa: f64,
    min_kappa: f64,
    gamma_coverage: f64,
    outside_gamma_k: Vec<usize>,
    #[serde(rename = "max_Q")]
    max_q: Option<f64>,
    #[serde(rename = "max_Q_node")]
    max_q_node: Option<usize>,
    nonpositive_kappa1: Vec<usize>,
    repeated_kappa1: Vec<usize>,
    max_gradient_identity_residual: f64,
    max_imaginary: f64,
    nu_identity: Option<NuIdentityResidual>,
}

pub fn shape(a: &ShapeArgs) -> Result<u8, Failure> {
    let file = File::open(&a.input).map_err(|e| Failure::new(DATA, format!("{}: {e}", a.input.display())))?;
    let field = GraphField::read_csv(file)?;
    let bad = field.domain_violations();
    if !bad.is_empty() {
        return Err(Failure::new(ANALYTIC, format!("u <= 0 at nodes {bad:?}")));
    }
    let shape = shape_from_graph(&field, a.n)?;
    let d = diagnostics(&shape, a.k, a.l)?;
    let indices = |flags: &[bool]| flags.iter().enumerate().filter(|(_, &f)| f).map(|(i, _)| i).collect::<Vec<_>>();
    let report = ShapeReport {
        n: a.n,
        k: a.k,
        l: a.l,
        nodes: shape.nodes.len(),
        nu_min: d.nu_min,
        nu_max: d.nu_max,
        max_abs_kappa: d.max_abs_kappa,
        min_kappa: d.min_kappa,
        gamma_coverage: d.gamma_coverage,
        outside_gamma_k: indices(&d.in_gamma_k.iter().map(|b| !b).collect::<Vec<_>>()),
        max_q: d.max_q,
        max_q_node: d.max_q_node,
        nonpositive_kappa1: d.nonpositive_kappa1.clone(),
        repeated_kappa1: indices(&d.multiplicity),
        max_gradient_identity_residual: d.max_gradient_identity_residual,
        max_imaginary: d.max_imaginary,
        nu_identity: d.nu_identity,
    };
    recorded("shape", a, &a.output, None, |dir| {
        let mut w = BufWriter::new(File::create(dir.join("shape.csv"))?);
        shape.write_csv(&mut w, &d)?;
        w.flush()?;
        write_json(&dir.join("diagnostics.json"), &report)?;
        println!(
            "nodes {}  min nu {:.6}  max|kappa| {:.6}  Gamma_{} coverage {:.4}",
            report.nodes, report.nu_min, report.max_abs_kappa, a.k, report.gamma_coverage
        );
        Ok(Outcome {
            code: OK,
            outputs: vec!["shape.csv".into(), "diagnostics.json".into()],
        })
    })
}

#[derive(Debug, Serialize)]
struct SampleReport<'a> {
    spec: &'a SampleSpec,
    stats: SampleStats,
}

pub fn sample(a: &SampleArgs) -> Result<u8, Failure> {
    let stratum = match a.stratum {
        StratumArg::Interior => Stratum::Interior,
        StratumArg::NearBoundary => Stratum::NearBoundary,
        StratumArg::Gap => Stratum::Gap { l: a.l, m: a.m },
        StratumArg::HugeKappa1 => Stratum::HugeKappa1 {
            big_n: a.big_n,
            spread: a.spread,
        },
    };
    let mut spec = SampleSpec::new(a.n, a.k, a.a, a.b, stratum, a.seed, a.count).with_retry_cap(a.retry_cap);
    if a.negative_tail {
        spec = spec.with_negative_tail();
    }
    spec.validate()?;
    recorded("sample", a, &a.output, Some(a.seed), |dir| {
        let batch = cones::sample(&spec)?;
        let mut w = BufWriter::new(File::create(dir.join("samples.csv"))?);
        let header: Vec<String> = (1..=a.n).map(|i| format!("kappa_{i}")).collect();
        writeln!(w, "{}", header.join(","))?;
        for s in &batch.samples {
            let row: Vec<String> = s.values().iter().map(|v| fmt_f64(*v)).collect();
            writeln!(w, "{}", row.join(","))?;
        }
        w.flush()?;
        write_json(&dir.join("sample_stats.json"), &SampleReport { spec: &spec, stats: batch.stats })?;
        println!(
            "{} samples from {}  acceptance {:.4}",
            batch.stats.accepted,
            spec.stratum.name(),
            batch.stats.acceptance_rate
        );
        Ok(Outcome {
            code: OK,
            outputs: vec!["samples.csv".into(), "sample_stats.json".into()],
        })
    })
}

fn recorded_args<A: for<'de> Deserialize<'de>>(m: &RunManifest) -> Result<A, Failure> {
    serde_json::from_value(m.config.clone())
        .map_err(|e| Failure::new(DATA, format!("manifest config does not fit `{}`: {e}", m.command)))
}

pub fn replay(a: &ReplayArgs) -> Result<u8, Failure> {
    let m = RunManifest::read(&a.manifest)?;
    let dir = |out: &mut Output| {
        if let Some(d) = &a.out_dir {
            out.out_dir = d.clone();
        }
    };
    match m.command.as_str() {
        "verify" => {
            let mut args: VerifyArgs = recorded_args(&m)?;
            dir(&mut args.output);
            verify(&args)
        }
        "solve" => {
            let mut args: SolveArgs = recorded_args(&m)?;
            dir(&mut args.output);
            solve(&args)
        }
        "shape" => {
            let mut args: ShapeArgs = recorded_args(&m)?;
            dir(&mut args.output);
            shape(&args)
        }
        "sample" => {
            let mut args: SampleArgs = recorded_args(&m)?;
            dir(&mut args.output);
            sample(&args)
        }
        other => Err(Failure::new(DATA, format!("unknown command `{other}` in manifest"))),
    }
}
