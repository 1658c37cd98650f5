use std::io::Write;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde_json::json;

use solenoid::fixtures::FIXTURE_NAMES;
use solenoid::measure_cones::{cone_approximation, contraction_csv, contraction_trace};
use solenoid::persist;
use solenoid::ratio;
use solenoid::sequence_lab::audits::AuditKind;
use solenoid::solenoid_scope::{
    binary_refinement, check_partitions, compute_fiber, fiber_partition_system, scan_star_chains,
    trace_partial_leaf, PointSpec,
};
use solenoid_cli::{
    describe, emit_plot_data, run_experiment, write_file, write_report, ExperimentConfig, Source,
    TraceKind,
};

#[derive(Parser)]
#[command(
    name = "solenoid",
    version,
    about = "Split sequences, solenoid probes and ergodicity certificates"
)]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Named fixture: THETA_CYCLE, REPEAT_AB or RANK3_SP.
    #[arg(long, global = true, conflicts_with = "input")]
    fixture: Option<String>,
    /// Sequence file written by `validate --out` or `fixtures --out`.
    #[arg(long, global = true)]
    input: Option<PathBuf>,
    /// Random sequence of this rank (2 or 3), driven by --seed.
    #[arg(long, global = true, conflicts_with_all = ["fixture", "input"])]
    random_rank: Option<usize>,
    /// Only whole-edge splits for --random-rank.
    #[arg(long, global = true)]
    strongly_proper: bool,
    #[arg(long, global = true, default_value_t = 12)]
    depth: usize,
    #[arg(long, global = true, default_value_t = 1e-8)]
    tol: f64,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true, default_value_t = 5)]
    stability_window: usize,
    #[arg(long, global = true, default_value_t = 3)]
    recur_min: usize,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Trace to emit as CSV (contraction, properness, fiber, remainder);
    /// repeatable.
    #[arg(long, global = true)]
    trace: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Build and check the sequence; with --out, save it.
    Validate,
    /// Run hypothesis audits.
    Audit {
        /// Audit names; all of them when omitted.
        #[arg(long = "kind")]
        kinds: Vec<String>,
    },
    /// Weight-cone approximation at level 0 and its contraction trace.
    Cones {
        #[arg(long)]
        prune: bool,
    },
    /// Unique-ergodicity certificate.
    Ergodicity,
    /// Fiber over a point of G_0 and the star-chain census.
    Fiber {
        /// Natural edge label.
        #[arg(long)]
        edge: String,
        /// Position along the edge, as p/q.
        #[arg(long, default_value = "1/3")]
        pos: String,
    },
    /// Trace the leaf through a point of G_0.
    TraceLeaf {
        #[arg(long)]
        edge: String,
        #[arg(long, default_value = "1/3")]
        pos: String,
        #[arg(long, default_value_t = 10)]
        steps: usize,
    },
    /// List fixtures; with --out, save each one extended to --depth.
    Fixtures,
    /// Full experiment: audits, certificate and requested traces.
    Report,
}

impl Common {
    fn source(&self) -> Result<Source> {
        Ok(match (&self.fixture, &self.input, self.random_rank) {
            (Some(name), None, None) => Source::Fixture { name: name.clone() },
            (None, Some(path), None) => Source::File { path: path.clone() },
            (None, None, Some(rank)) => Source::Random {
                rank,
                seed: self.seed.unwrap_or(0),
                strongly_proper: self.strongly_proper,
            },
            (None, None, None) => bail!("one of --fixture, --input or --random-rank is required"),
            _ => bail!("--fixture, --input and --random-rank are exclusive"),
        })
    }

    fn config(&self) -> Result<ExperimentConfig> {
        let mut cfg = ExperimentConfig::new(self.source()?);
        cfg.depth = self.depth;
        cfg.tol = self.tol;
        cfg.seed = self.seed;
        cfg.stability_window = self.stability_window;
        cfg.recur_min = self.recur_min;
        cfg.out = self.out.clone();
        cfg.traces = self
            .trace
            .iter()
            .map(|t| TraceKind::parse(t))
            .collect::<Result<_, _>>()?;
        Ok(cfg)
    }
}

/// A closed pipe on stdout ends output quietly.
fn say(line: &str) {
    let _ = writeln!(std::io::stdout().lock(), "{line}");
}

fn print(v: &serde_json::Value) {
    say(&serde_json::to_string_pretty(v).expect("json"));
}

fn point(seq: &solenoid::sequence_lab::SplitSequence, edge: &str, pos: &str) -> Result<PointSpec> {
    let g = seq.graph(0)?;
    let e = g
        .natural()
        .index_of_label(edge)
        .with_context(|| format!("no natural edge labelled {edge:?}"))?;
    let len = g.natural().edges[e].len.clone();
    let pos = ratio::parse(pos).map_err(anyhow::Error::msg)? * len;
    Ok(PointSpec::on_natural(seq, 0, e, &pos)?)
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    let c = &cli.common;
    if let Command::Fixtures = cli.command {
        for name in FIXTURE_NAMES {
            say(name);
            if let Some(dir) = &c.out {
                let mut seq = solenoid::fixtures::load_fixture(name)?;
                seq.extend_to(c.depth)?;
                write_file(&dir.join(format!("{name}.json")), &persist::to_json(&seq))?;
            }
        }
        return Ok(());
    }
    let mut cfg = c.config()?;
    let load = |cfg: &ExperimentConfig| -> Result<_> {
        let mut seq = cfg.source.load()?;
        seq.extend_to(cfg.depth)?;
        Ok(seq)
    };
    match &cli.command {
        Command::Fixtures => unreachable!(),
        Command::Validate => {
            let seq = load(&cfg)?;
            print(&describe(&seq));
            if let Some(dir) = &c.out {
                write_file(&dir.join("sequence.json"), &persist::to_json(&seq))?;
            }
        }
        Command::Audit { kinds } => {
            cfg.audits = if kinds.is_empty() {
                AuditKind::ALL.to_vec()
            } else {
                kinds
                    .iter()
                    .map(|k| AuditKind::parse(k).with_context(|| format!("unknown audit {k:?}")))
                    .collect::<Result<_>>()?
            };
            let report = run_experiment(&cfg)?;
            print(&json!(report.audits));
        }
        Command::Cones { prune } => {
            let seq = load(&cfg)?;
            let cone = cone_approximation(&seq, 0, c.depth, *prune)?;
            print(&json!(cone));
            let csv = contraction_csv(&contraction_trace(&seq, 0, c.depth)?);
            match &c.out {
                Some(dir) => write_file(&dir.join("contraction.csv"), &csv)?,
                None => print!("{csv}"),
            }
        }
        Command::Ergodicity => {
            cfg.traces.push(TraceKind::Contraction);
            let report = run_experiment(&cfg)?;
            print(&json!(report.certificate));
            if let Some(dir) = &c.out {
                emit_plot_data(&report, TraceKind::Contraction, dir)?;
            }
        }
        Command::Fiber { edge, pos } => {
            let seq = load(&cfg)?;
            let q = point(&seq, edge, pos)?;
            let tree = compute_fiber(&seq, &q, c.depth)?;
            let ps = fiber_partition_system(&tree);
            let checks = check_partitions(&ps.partitions, tree.leaf_count(tree.depth()));
            let (chains, census) = scan_star_chains(&seq, c.depth.max(1))?;
            let g = seq.graph(0)?;
            print(&json!({
                "basepoint": q.to_json(g),
                "leaf_counts": tree.leaf_counts(),
                "partition_sizes": ps.partitions.iter().map(Vec::len).collect::<Vec<_>>(),
                "binary_refinement_steps": binary_refinement(&ps.partitions).len(),
                "partition_checks": checks,
                "star_chains": chains,
                "census": census,
            }));
            if let Some(dir) = &c.out {
                write_file(&dir.join("census.csv"), &census.csv(&chains))?;
            }
        }
        Command::TraceLeaf { edge, pos, steps } => {
            let seq = load(&cfg)?;
            let q = point(&seq, edge, pos)?;
            print(&json!(trace_partial_leaf(&seq, &q, *steps, c.depth)?));
        }
        Command::Report => {
            cfg.audits = AuditKind::ALL.to_vec();
            let report = run_experiment(&cfg)?;
            match &c.out {
                Some(dir) => {
                    for p in write_report(&report, dir)? {
                        say(&p.display().to_string());
                    }
                }
                None => say(&report.body_json()),
            }
        }
    }
    Ok(())
}
