//! Team-composition features: map each player to a play-style index, then
//! encode every match as the concatenation of the two teams' style-count
//! vectors with a win/loss label for team 1.
//!
//! Two style sources exist. Cluster-derived styles are a property of the
//! player (their season statistics mapped to the nearest learned centroid);
//! the official-class baseline is per match (the class of the character the
//! player picked in that match).

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::cluster::{nearest_centroid, Algorithm, ClusterModel};
use crate::error::{Error, Result};
use crate::ingest::{Corpus, MatchRecord, PlayerStatRecord, Winner, OFFICIAL_CLASS_COUNT, TEAM_SIZE};
use crate::preprocess::{normalize_row, ColumnRanges};

/// Where a style assignment came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StyleSource {
    KMeansModel,
    DPMeansModel,
    OfficialClasses,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
enum StyleAssignment {
    /// player_id -> style, fixed across matches.
    PerPlayer(HashMap<String, usize>),
    /// match_id -> (player_id -> style), from per-match character picks.
    PerMatch(HashMap<String, HashMap<String, usize>>),
}

/// A mapping from players to style indices in `[0, k)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StyleMap {
    pub k: usize,
    pub source: StyleSource,
    assignment: StyleAssignment,
}

impl StyleMap {
    /// Style of `player_id` in the context of `match_id` (the match only
    /// matters for the per-match official-class source).
    pub fn style_of(&self, match_id: &str, player_id: &str) -> Option<usize> {
        match &self.assignment {
            StyleAssignment::PerPlayer(map) => map.get(player_id).copied(),
            StyleAssignment::PerMatch(map) => {
                map.get(match_id).and_then(|m| m.get(player_id)).copied()
            }
        }
    }

    /// Per-player styles in the order of `players`, when the source is
    /// player-based.
    pub fn player_styles(&self, players: &[PlayerStatRecord]) -> Option<Vec<usize>> {
        match &self.assignment {
            StyleAssignment::PerPlayer(map) => players
                .iter()
                .map(|p| map.get(p.player_id.as_str()).copied())
                .collect(),
            StyleAssignment::PerMatch(_) => None,
        }
    }
}

/// One encoded match: concatenated per-team style counts and the team-1
/// win/loss label.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CompositionSample {
    /// Length 2k; the first k entries count team 1's styles, the last k
    /// team 2's. Each half sums to the team size.
    pub x: Vec<u32>,
    /// 1 if team 1 won, else 0.
    pub y: u8,
}

impl CompositionSample {
    /// Counts as reals, the form the classifiers consume.
    pub fn features(&self) -> Vec<f64> {
        self.x.iter().map(|&c| c as f64).collect()
    }
}

/// Assigns every player to the nearest centroid of a trained cluster model,
/// normalizing their raw stats with the training ranges first.
pub fn build_style_map(
    model: &ClusterModel,
    ranges: &ColumnRanges,
    players: &[PlayerStatRecord],
) -> Result<StyleMap> {
    if ranges.len() != model.dim() {
        return Err(Error::DimensionMismatch {
            expected: model.dim(),
            got: ranges.len(),
        });
    }
    let mut map = HashMap::with_capacity(players.len());
    for p in players {
        let normalized = normalize_row(&p.stats, ranges)?;
        let view = ndarray::ArrayView1::from(&normalized);
        let (style, _) = nearest_centroid(view, &model.centroids);
        map.insert(p.player_id.clone(), style);
    }
    Ok(StyleMap {
        k: model.k(),
        source: match model.algorithm {
            Algorithm::KMeans => StyleSource::KMeansModel,
            Algorithm::DPMeans => StyleSource::DPMeansModel,
        },
        assignment: StyleAssignment::PerPlayer(map),
    })
}

/// Table mapping character ids onto the six developer-assigned classes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassTable(pub HashMap<String, usize>);

impl ClassTable {
    pub fn class_of(&self, character: &str) -> Option<usize> {
        self.0.get(character).copied()
    }
}

/// Builds the per-match baseline style map from each player's character pick.
///
/// Every character appearing in a match must be present in the class table;
/// unknown characters are collected and reported together.
pub fn official_style_map(matches: &[MatchRecord], table: &ClassTable) -> Result<StyleMap> {
    for (character, &class) in &table.0 {
        if class >= OFFICIAL_CLASS_COUNT {
            return Err(Error::Validation(format!(
                "character `{character}` has class {class}, expected < {OFFICIAL_CLASS_COUNT}"
            )));
        }
    }
    let mut unknown: Vec<String> = Vec::new();
    let mut per_match = HashMap::with_capacity(matches.len());
    for m in matches {
        let choices = m.character_choices.as_ref().ok_or_else(|| {
            Error::Validation(format!(
                "match `{}` carries no character choices; the baseline encoding needs them",
                m.match_id
            ))
        })?;
        let mut styles = HashMap::with_capacity(2 * TEAM_SIZE);
        for player in m.participants() {
            let Some(character) = choices.get(player) else {
                unknown.push(format!("{} (no pick for {player})", m.match_id));
                continue;
            };
            match table.class_of(character) {
                Some(class) => {
                    styles.insert(player.to_string(), class);
                }
                None => {
                    if !unknown.contains(character) {
                        unknown.push(character.clone());
                    }
                }
            }
        }
        per_match.insert(m.match_id.clone(), styles);
    }
    if !unknown.is_empty() {
        unknown.sort();
        return Err(Error::Validation(format!(
            "unmapped characters: {}",
            unknown.join(", ")
        )));
    }
    Ok(StyleMap {
        k: OFFICIAL_CLASS_COUNT,
        source: StyleSource::OfficialClasses,
        assignment: StyleAssignment::PerMatch(per_match),
    })
}

/// Encodes one match as `[team1 counts ; team2 counts]` with `y = 1` iff
/// team 1 won.
pub fn encode_match(m: &MatchRecord, style: &StyleMap, k: usize) -> Result<CompositionSample> {
    if style.k != k {
        return Err(Error::DimensionMismatch {
            expected: k,
            got: style.k,
        });
    }
    let mut x = vec![0u32; 2 * k];
    for (half, team) in [&m.team1, &m.team2].into_iter().enumerate() {
        for player in team {
            let s = style.style_of(&m.match_id, player).ok_or_else(|| {
                Error::Validation(format!(
                    "match `{}`: player `{player}` has no style assignment",
                    m.match_id
                ))
            })?;
            if s >= k {
                return Err(Error::Validation(format!(
                    "match `{}`: player `{player}` has style {s} >= k = {k}",
                    m.match_id
                )));
            }
            x[half * k + s] += 1;
        }
    }
    Ok(CompositionSample {
        x,
        y: u8::from(m.winner == Winner::Team1),
    })
}

/// Encodes every match of a corpus in order; the first failure is reported
/// with its match id.
pub fn encode_corpus(
    corpus: &Corpus,
    style: &StyleMap,
    k: usize,
) -> Result<Vec<CompositionSample>> {
    corpus
        .matches
        .iter()
        .map(|m| {
            encode_match(m, style, k).map_err(|e| match e {
                Error::Validation(msg) => Error::Validation(msg),
                other => Error::Validation(format!("match `{}`: {other}", m.match_id)),
            })
        })
        .collect()
}
