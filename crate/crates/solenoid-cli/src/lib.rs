//! Experiment runner: load or generate a sequence, run audits and the
//! cone pipeline, and collect everything in a report with CSV plot data.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

use solenoid::fixtures::{load_fixture, random_sequence, FixtureError};
use solenoid::graph_core::shapes::{gamma3, theta};
use solenoid::graph_core::Point;
use solenoid::measure_cones::{
    certify_with, contraction_csv, evaluate_transverse_measure, perron_weights, CertifyConfig,
    ConeError, ContractionRow, ErgodicityCertificate,
};
use solenoid::persist::{self, PersistError};
use solenoid::ratio::rat;
use solenoid::sequence_lab::audits::{audit, properness_trace, AuditKind};
use solenoid::sequence_lab::{AuditConfig, AuditReport, SequenceError, SplitSequence};
use solenoid::solenoid_scope::{compute_fiber, is_generic, PointSpec, ScopeError, TurnSpec};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Fixture(#[from] FixtureError),
    #[error(transparent)]
    Persist(#[from] PersistError),
    #[error(transparent)]
    Sequence(#[from] SequenceError),
    #[error(transparent)]
    Scope(#[from] ScopeError),
    #[error(transparent)]
    Cone(#[from] ConeError),
    #[error("report has no {0} trace")]
    MissingTrace(String),
    #[error("unknown trace kind {0:?}; expected contraction, properness, fiber or remainder")]
    UnknownTrace(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Source {
    Fixture {
        name: String,
    },
    File {
        path: PathBuf,
    },
    /// The seeded random policy on the theta graph (rank 2) or `Γ3`
    /// (rank 3).
    Random {
        rank: usize,
        seed: u64,
        strongly_proper: bool,
    },
}

impl Source {
    pub fn load(&self) -> Result<SplitSequence, CliError> {
        match self {
            Source::Fixture { name } => Ok(load_fixture(name)?),
            Source::File { path } => {
                let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
                    path: path.clone(),
                    source,
                })?;
                Ok(persist::from_json(&text)?)
            }
            Source::Random {
                rank,
                seed,
                strongly_proper,
            } => {
                let g = if *rank >= 3 { gamma3() } else { theta() };
                Ok(random_sequence(g, *seed, *strongly_proper)?)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TraceKind {
    Contraction,
    Properness,
    Fiber,
    Remainder,
}

impl TraceKind {
    pub const ALL: [TraceKind; 4] = [
        TraceKind::Contraction,
        TraceKind::Properness,
        TraceKind::Fiber,
        TraceKind::Remainder,
    ];

    pub fn name(self) -> &'static str {
        match self {
            TraceKind::Contraction => "contraction",
            TraceKind::Properness => "properness",
            TraceKind::Fiber => "fiber",
            TraceKind::Remainder => "remainder",
        }
    }

    pub fn parse(s: &str) -> Result<TraceKind, CliError> {
        TraceKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| CliError::UnknownTrace(s.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub source: Source,
    pub audits: Vec<AuditKind>,
    pub traces: Vec<TraceKind>,
    pub depth: usize,
    pub tol: f64,
    pub seed: Option<u64>,
    pub stability_window: usize,
    pub recur_min: usize,
    pub out: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn new(source: Source) -> ExperimentConfig {
        ExperimentConfig {
            source,
            audits: Vec::new(),
            traces: Vec::new(),
            depth: 12,
            tol: 1e-8,
            seed: None,
            stability_window: 5,
            recur_min: 3,
            out: None,
        }
    }

    fn audit_config(&self) -> AuditConfig {
        AuditConfig {
            stability_window: self.stability_window,
            ..AuditConfig::default()
        }
    }
}

/// Everything a run produced. The body (all but `timings`) is a function
/// of the configuration alone.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub version: String,
    pub config: ExperimentConfig,
    pub audits: Vec<AuditReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub certificate: Option<ErgodicityCertificate>,
    /// CSV tables keyed by trace name.
    pub traces: BTreeMap<String, Vec<Vec<String>>>,
    #[serde(skip)]
    pub timings: BTreeMap<String, f64>,
}

impl Report {
    pub fn body_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("serializable report")
    }
}

/// The interior point used for fiber growth: a third of the way along the
/// natural edge with the largest row sum in the first window.
fn fiber_basepoint(seq: &SplitSequence, depth: usize) -> Result<PointSpec, CliError> {
    let g = seq.graph(0)?;
    let w = seq.window(-(depth.min(seq.depth()) as i32), 0)?;
    let sums = w.matrix.row_sums();
    let edge = (0..sums.len())
        .max_by_key(|&i| sums[i].clone())
        .unwrap_or(0);
    let len = g.natural().edges[edge].len.clone();
    // Nudge the position until it avoids the vertex orbits.
    for k in 3..64i64 {
        let q = PointSpec::on_natural(seq, 0, edge, &(len.clone() * rat(k - 1, 3 * k)))?;
        if is_generic(seq, &q, -(depth as i32), 0) {
            return Ok(q);
        }
    }
    Ok(PointSpec::on_natural(seq, 0, edge, &(len * rat(1, 3)))?)
}

fn trace_rows(
    seq: &SplitSequence,
    kind: TraceKind,
    cfg: &ExperimentConfig,
    cert: Option<&ErgodicityCertificate>,
) -> Result<Vec<Vec<String>>, CliError> {
    let depth = cfg.depth;
    let rows = match kind {
        TraceKind::Contraction => {
            let trace: Vec<ContractionRow> = match cert {
                Some(c) => c.trace.clone(),
                None => solenoid::measure_cones::contraction_trace(seq, 0, depth)?,
            };
            csv_rows(&contraction_csv(&trace))
        }
        TraceKind::Properness => {
            let mut rows = vec![vec!["depth".into(), "image_points".into()]];
            for (k, n) in properness_trace(seq, depth).into_iter().enumerate() {
                rows.push(vec![(k + 1).to_string(), n.to_string()]);
            }
            rows
        }
        TraceKind::Fiber => {
            let q = fiber_basepoint(seq, depth)?;
            let (edge, _) = seq
                .graph(0)?
                .natural_coords(&q.point)
                .expect("interior point");
            let t = compute_fiber(seq, &q, depth)?;
            let mut rows = vec![vec!["depth".into(), "leaves".into(), "row_sum".into()]];
            for (d, n) in t.leaf_counts().into_iter().enumerate() {
                let w = seq.window(-(d as i32), 0)?;
                let row_sum = w.matrix.row_sums()[edge].to_string();
                rows.push(vec![d.to_string(), n.to_string(), row_sum]);
            }
            rows
        }
        TraceKind::Remainder => {
            let ws = perron_weights(seq, depth)?;
            let g = seq.graph(0)?;
            let v = *g
                .natural()
                .natural_vertices
                .iter()
                .next_back()
                .expect("natural vertex");
            let star = g.star(v);
            let turn = TurnSpec::Vertex {
                level: 0,
                vertex: v,
                darts: (star[0], star[1]),
            };
            let mut rows = vec![vec![
                "depth".into(),
                "value".into(),
                "remainder_bound".into(),
            ]];
            // Weights exist down to a whole number of periods.
            let reach = (-ws[0].level) as usize;
            for d in 0..=depth.min(reach) {
                let e = evaluate_transverse_measure(seq, &ws, &turn, &Point::Vertex(v), d)?;
                rows.push(vec![
                    d.to_string(),
                    format!("{:e}", e.value),
                    format!("{:e}", e.remainder_bound),
                ]);
            }
            rows
        }
    };
    Ok(rows)
}

fn csv_rows(csv: &str) -> Vec<Vec<String>> {
    csv.lines()
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

/// Load, extend, audit and certify as the configuration asks. Audits run
/// in parallel; output order follows the configuration.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Report, CliError> {
    let mut timings = BTreeMap::new();
    let start = Instant::now();
    let mut seq = cfg.source.load()?;
    seq.extend_to(cfg.depth)?;
    timings.insert("extend".into(), start.elapsed().as_secs_f64());
    let acfg = cfg.audit_config();
    let t = Instant::now();
    let audits: Vec<AuditReport> = cfg
        .audits
        .par_iter()
        .map(|&k| audit(&seq, &[k], cfg.depth, &acfg).remove(0))
        .collect();
    timings.insert("audits".into(), t.elapsed().as_secs_f64());
    let wants_contraction = cfg.traces.contains(&TraceKind::Contraction);
    let certificate = if cfg.audits.is_empty() && !wants_contraction {
        None
    } else {
        let t = Instant::now();
        let c = certify_with(
            &seq,
            cfg.depth,
            &CertifyConfig {
                tol: cfg.tol,
                recur_min: cfg.recur_min,
                audit: acfg,
            },
        )?;
        timings.insert("certificate".into(), t.elapsed().as_secs_f64());
        Some(c)
    };
    let traces = cfg
        .traces
        .iter()
        .map(|&k| {
            Ok((
                k.name().to_string(),
                trace_rows(&seq, k, cfg, certificate.as_ref())?,
            ))
        })
        .collect::<Result<BTreeMap<_, _>, CliError>>()?;
    timings.insert("total".into(), start.elapsed().as_secs_f64());
    Ok(Report {
        version: VERSION.into(),
        config: cfg.clone(),
        audits,
        certificate,
        traces,
        timings,
    })
}

/// The named trace as headered CSV.
pub fn plot_csv(report: &Report, kind: TraceKind) -> Result<String, CliError> {
    let rows = report
        .traces
        .get(kind.name())
        .ok_or_else(|| CliError::MissingTrace(kind.name().into()))?;
    Ok(rows.iter().map(|r| r.join(",") + "\n").collect())
}

/// Write the named trace to `<dir>/<kind>.csv`.
pub fn emit_plot_data(report: &Report, kind: TraceKind, dir: &Path) -> Result<PathBuf, CliError> {
    let csv = plot_csv(report, kind)?;
    let path = dir.join(format!("{}.csv", kind.name()));
    write_file(&path, &csv)?;
    Ok(path)
}

pub fn write_file(path: &Path, text: &str) -> Result<(), CliError> {
    let io = |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    };
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(io)?;
    }
    std::fs::write(path, text).map_err(io)
}

/// Write `report.json`, `timings.json` and every trace's CSV into `dir`.
pub fn write_report(report: &Report, dir: &Path) -> Result<Vec<PathBuf>, CliError> {
    let mut written = vec![dir.join("report.json"), dir.join("timings.json")];
    write_file(&written[0], &report.body_json())?;
    write_file(
        &written[1],
        &serde_json::to_string_pretty(&report.timings).expect("serializable"),
    )?;
    for kind in &report.config.traces {
        written.push(emit_plot_data(report, *kind, dir)?);
    }
    Ok(written)
}

/// Summary of a sequence used by `validate`.
pub fn describe(seq: &SplitSequence) -> Value {
    let levels: Vec<Value> = (0..=seq.depth())
        .map(|k| {
            let level = -(k as i32);
            let g = seq.graph(level).expect("level in prefix");
            let b = g.bounds();
            json!({
                "level": level,
                "natural_vertices": b.natural_vertices,
                "natural_edges": b.natural_edges,
                "bounds_ok": b.ok(),
                "fold": seq.fold(level).ok().map(|f| json!({
                    "spec": f.spec,
                    "matrix": f.matrix,
                    "strongly_proper": f.strongly_proper,
                    "no_backtracking": f.no_backtracking,
                })),
            })
        })
        .collect();
    json!({
        "rank": seq.rank(),
        "depth": seq.depth(),
        "generator": seq.generator(),
        "levels": levels,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trace_names_round_trip() {
        for k in TraceKind::ALL {
            assert_eq!(TraceKind::parse(k.name()).unwrap(), k);
        }
    }

    #[test]
    fn sources_are_tagged_by_kind() {
        let s = Source::Random {
            rank: 2,
            seed: 4,
            strongly_proper: false,
        };
        let j = serde_json::to_value(&s).unwrap();
        assert_eq!(j["kind"], "random");
        assert_eq!(serde_json::from_value::<Source>(j).unwrap(), s);
    }

    #[test]
    fn config_defaults() {
        let c = ExperimentConfig::new(Source::Fixture {
            name: "THETA_CYCLE".into(),
        });
        assert_eq!(
            (c.depth, c.tol, c.stability_window, c.recur_min),
            (12, 1e-8, 5, 3)
        );
        assert_eq!(c.audit_config().stability_window, 5);
    }

    #[test]
    fn csv_rows_split_on_commas() {
        assert_eq!(csv_rows("a,b\n1,\n"), vec![vec!["a", "b"], vec!["1", ""]]);
    }

    #[test]
    fn rank_three_random_sources_start_from_gamma3() {
        let s = Source::Random {
            rank: 3,
            seed: 0,
            strongly_proper: true,
        }
        .load()
        .unwrap();
        assert_eq!(s.rank(), 3);
        assert_eq!(s.edge_count(0), 5);
    }
}
