//! Sequence files: every level's graph and fold, plus the generator so a
//! loaded prefix can be extended.

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fold_machine::{transition_matrix, validate_fold, FoldSpec, GraphMap};
use crate::graph_core::{build_core_graph, DartId, GraphSpec, VertexId};
use crate::sequence_lab::{
    Chart, Generator, Level, LevelFold, SequenceError, SplitSequence, Template,
};

#[derive(Debug, Error)]
pub enum PersistError {
    #[error("malformed sequence file: {0}")]
    Format(#[from] serde_json::Error),
    #[error("sequence file says rank {stated} but level 0 has rank {found}")]
    Rank { stated: usize, found: usize },
    #[error(transparent)]
    Sequence(#[from] SequenceError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldRecord {
    pub spec: FoldSpec,
    pub vertex_map: BTreeMap<VertexId, VertexId>,
    pub dart_map: BTreeMap<DartId, Vec<DartId>>,
    pub no_backtracking: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelRecord {
    pub graph: GraphSpec,
    /// The fold from this level into the one above; absent at level 0.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fold: Option<FoldRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chart: Option<Chart>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub template: Option<Template>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SequenceFile {
    pub rank: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generator: Option<Generator>,
    /// `levels[k]` is `G_{-k}`.
    pub levels: Vec<LevelRecord>,
}

impl SequenceFile {
    pub fn from_sequence(seq: &SplitSequence) -> SequenceFile {
        let levels = seq
            .levels()
            .iter()
            .map(|l| LevelRecord {
                graph: l.graph.to_spec(),
                fold: l.fold.as_ref().map(|f| FoldRecord {
                    spec: f.spec.clone(),
                    vertex_map: f.map.vertex_map.clone(),
                    dart_map: f.map.dart_map.clone(),
                    no_backtracking: f.no_backtracking,
                }),
                chart: l.chart.clone(),
                template: l.template.clone(),
            })
            .collect();
        SequenceFile {
            rank: seq.rank(),
            generator: seq.generator().cloned(),
            levels,
        }
    }

    /// Rebuild and revalidate every level and fold.
    pub fn into_sequence(self) -> Result<SplitSequence, PersistError> {
        let graphs = self
            .levels
            .iter()
            .map(|l| build_core_graph(&l.graph).map(Arc::new))
            .collect::<Result<Vec<_>, _>>()
            .map_err(SequenceError::from)?;
        let mut levels = Vec::with_capacity(graphs.len());
        for (k, rec) in self.levels.into_iter().enumerate() {
            let fold = match rec.fold {
                Some(f) if k > 0 => {
                    let map = GraphMap::new(
                        graphs[k].clone(),
                        graphs[k - 1].clone(),
                        f.vertex_map,
                        f.dart_map,
                    )
                    .map_err(SequenceError::from)?;
                    let report = validate_fold(&map, &f.spec).map_err(SequenceError::from)?;
                    Some(LevelFold {
                        matrix: transition_matrix(&map),
                        spec: f.spec,
                        map,
                        strongly_proper: report.strongly_proper,
                        no_backtracking: f.no_backtracking,
                    })
                }
                Some(_) => {
                    return Err(SequenceError::InvalidSplit("level 0 has no fold".into()).into())
                }
                None => None,
            };
            levels.push(Level {
                graph: graphs[k].clone(),
                fold,
                chart: rec.chart,
                template: rec.template,
            });
        }
        let seq = SplitSequence::from_levels(levels, self.generator)?;
        if seq.rank() != self.rank {
            return Err(PersistError::Rank {
                stated: self.rank,
                found: seq.rank(),
            });
        }
        Ok(seq)
    }
}

pub fn to_json(seq: &SplitSequence) -> String {
    serde_json::to_string_pretty(&SequenceFile::from_sequence(seq)).expect("serializable")
}

pub fn from_json(s: &str) -> Result<SplitSequence, PersistError> {
    serde_json::from_str::<SequenceFile>(s)?.into_sequence()
}
