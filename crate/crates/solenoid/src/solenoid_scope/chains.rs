//! Star chains over natural vertices and the census of pre-singularity
//! candidates.

use serde::{Deserialize, Serialize};

use crate::graph_core::VertexId;
use crate::sequence_lab::audits::{natural_chains, prongs};
use crate::sequence_lab::SplitSequence;

use super::ScopeError;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StarChainRecord {
    pub id: usize,
    /// `vertices[i]` lives at level `bottom + i`; the last one is in `G_0`.
    pub bottom: i32,
    pub vertices: Vec<VertexId>,
    /// `prongs[d]`: germ classes at level 0 of the star at level `-d`.
    pub prongs: Vec<usize>,
    /// The chain stays natural all the way to level 0.
    pub maximal: bool,
}

impl StarChainRecord {
    pub fn deepest_prongs(&self) -> usize {
        *self.prongs.last().unwrap()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SingularityCensus {
    pub depth: usize,
    /// Ids of chains still at least 3-pronged at the bottom.
    pub candidates: Vec<usize>,
    pub bound: usize,
}

impl SingularityCensus {
    pub fn within_bound(&self) -> bool {
        self.candidates.len() <= self.bound
    }

    /// `chain,depth,prongs` rows.
    pub fn csv(&self, records: &[StarChainRecord]) -> String {
        let mut s = String::from("chain,depth,prongs\n");
        for r in records {
            for (d, p) in r.prongs.iter().enumerate() {
                s.push_str(&format!("{},{},{}\n", r.id, d, p));
            }
        }
        s
    }
}

/// Every natural vertex of `G_{-depth}` and its forward orbit, with the
/// prong count of each prefix. A census over `2(n - 1)` is an error.
pub fn scan_star_chains(
    seq: &SplitSequence,
    depth: usize,
) -> Result<(Vec<StarChainRecord>, SingularityCensus), ScopeError> {
    if depth == 0 || depth > seq.depth() {
        return Err(ScopeError::Depth(depth));
    }
    let bottom = -(depth as i32);
    let records: Vec<StarChainRecord> = natural_chains(seq, bottom, 0)
        .into_iter()
        .enumerate()
        .map(|(id, c)| {
            let counts = (0..=depth)
                .map(|d| {
                    let level = -(d as i32);
                    prongs(seq, level, c.at(level), 0).len()
                })
                .collect();
            StarChainRecord {
                id,
                bottom,
                maximal: c.is_natural_throughout(),
                vertices: c.vertices,
                prongs: counts,
            }
        })
        .collect();
    let candidates = records
        .iter()
        .filter(|r| r.maximal && r.deepest_prongs() >= 3)
        .map(|r| r.id)
        .collect();
    let census = SingularityCensus {
        depth,
        candidates,
        bound: 2 * (seq.rank() - 1),
    };
    if !census.within_bound() {
        return Err(ScopeError::CensusBound {
            found: census.candidates.len(),
            bound: census.bound,
        });
    }
    Ok((records, census))
}
