//! On-disk data model: line-delimited player-statistics and match-history
//! records, plus the linked in-memory corpus every other module consumes.
//!
//! Each input file holds one JSON object per line. Player records carry the
//! 21 per-season statistics in the fixed order of [`STAT_NAMES`]; match
//! records carry two five-player rosters and the winner.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Version tag for the stat schema below. Bump when the column set changes.
pub const STAT_SCHEMA_VERSION: u32 = 1;

/// Number of per-player statistics tracked by the pipeline.
pub const STAT_DIM: usize = 21;

/// Players per team in a standard match.
pub const TEAM_SIZE: usize = 5;

/// Number of developer-assigned gameplay classes used by the baseline encoding.
pub const OFFICIAL_CLASS_COUNT: usize = 6;

/// Fixed ordering of the tracked per-season statistics.
///
/// The exact set of columns is a schema constant of this pipeline; clustering
/// only requires that every record uses the same ordering, and any consistent
/// set of season-aggregate performance indicators works. Units vary per
/// column (damage, gold, counts, seconds), which is why downstream code
/// always range-normalizes before clustering.
pub const STAT_NAMES: [&str; STAT_DIM] = [
    "avg_damage_dealt",
    "avg_damage_taken",
    "avg_gold_earned",
    "avg_gold_spent",
    "avg_minions_killed",
    "avg_neutral_monsters_killed",
    "avg_kills",
    "avg_deaths",
    "avg_assists",
    "avg_wards_placed",
    "avg_wards_killed",
    "avg_healing_done",
    "avg_crowd_control_time",
    "avg_time_played",
    "avg_turrets_destroyed",
    "avg_inhibitors_destroyed",
    "max_kill_streak",
    "max_killing_spree",
    "total_double_kills",
    "total_wins",
    "total_games",
];

/// One player's raw per-season statistics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlayerStatRecord {
    pub player_id: String,
    /// Exactly [`STAT_DIM`] finite, nonnegative values ordered per [`STAT_NAMES`].
    pub stats: Vec<f64>,
    /// Optional character-id -> play count map, carried for cluster
    /// interpretation reports only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub character_usage: Option<BTreeMap<String, u32>>,
}

impl PlayerStatRecord {
    /// Checks the per-record invariants (id nonempty, 21 finite nonnegative stats).
    pub fn validate(&self) -> Result<()> {
        if self.player_id.is_empty() {
            return Err(Error::Validation("empty player_id".into()));
        }
        if self.stats.len() != STAT_DIM {
            return Err(Error::Validation(format!(
                "player `{}` has {} stats, expected {}",
                self.player_id,
                self.stats.len(),
                STAT_DIM
            )));
        }
        for (i, &v) in self.stats.iter().enumerate() {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::Validation(format!(
                    "player `{}` stat `{}` is {} (must be finite and >= 0)",
                    self.player_id, STAT_NAMES[i], v
                )));
            }
        }
        Ok(())
    }
}

/// Which of the two rosters won a match.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Winner {
    Team1,
    Team2,
}

/// One match: two five-player rosters and the outcome.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchRecord {
    pub match_id: String,
    pub team1: Vec<String>,
    pub team2: Vec<String>,
    pub winner: Winner,
    /// Optional player-id -> character-id choices for this match; required
    /// only by the official-class baseline encoding.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub character_choices: Option<BTreeMap<String, String>>,
}

impl MatchRecord {
    /// Checks roster sizes and pairwise-distinct participants.
    pub fn validate(&self) -> Result<()> {
        if self.match_id.is_empty() {
            return Err(Error::Validation("empty match_id".into()));
        }
        if self.team1.len() != TEAM_SIZE || self.team2.len() != TEAM_SIZE {
            return Err(Error::Validation(format!(
                "match `{}` has team sizes {} and {}, expected {} and {}",
                self.match_id,
                self.team1.len(),
                self.team2.len(),
                TEAM_SIZE,
                TEAM_SIZE
            )));
        }
        let mut seen = HashSet::with_capacity(2 * TEAM_SIZE);
        for id in self.team1.iter().chain(self.team2.iter()) {
            if !seen.insert(id.as_str()) {
                return Err(Error::Validation(format!(
                    "match `{}` lists player `{}` more than once",
                    self.match_id, id
                )));
            }
        }
        Ok(())
    }

    /// All ten participant ids, team 1 first.
    pub fn participants(&self) -> impl Iterator<Item = &str> {
        self.team1.iter().chain(self.team2.iter()).map(String::as_str)
    }
}

/// A linked set of player records and match records with referential integrity.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Corpus {
    pub players: Vec<PlayerStatRecord>,
    pub matches: Vec<MatchRecord>,
}

impl Corpus {
    /// Index from player_id to position in `players`.
    pub fn player_index(&self) -> HashMap<&str, usize> {
        self.players
            .iter()
            .enumerate()
            .map(|(i, p)| (p.player_id.as_str(), i))
            .collect()
    }
}

/// Parses line-delimited player records, preserving input order.
///
/// Blank lines are skipped. Errors carry the 1-based line number; a record
/// with the wrong number of stats is reported as a schema error naming the
/// offending player, and duplicate ids are rejected.
pub fn parse_player_stats<R: BufRead>(input: R) -> Result<Vec<PlayerStatRecord>> {
    let mut out = Vec::new();
    let mut seen = HashSet::new();
    for (i, line) in input.lines().enumerate() {
        let lineno = i + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let record: PlayerStatRecord =
            serde_json::from_str(&line).map_err(|e| Error::Parse {
                line: lineno,
                msg: e.to_string(),
            })?;
        if record.stats.len() != STAT_DIM {
            return Err(Error::Schema {
                line: lineno,
                record: record.player_id.clone(),
                msg: format!("{} stats, expected {}", record.stats.len(), STAT_DIM),
            });
        }
        record.validate().map_err(|e| match e {
            Error::Validation(msg) => Error::Validation(format!("line {lineno}: {msg}")),
            other => other,
        })?;
        if !seen.insert(record.player_id.clone()) {
            return Err(Error::Validation(format!(
                "line {lineno}: duplicate player_id `{}`",
                record.player_id
            )));
        }
        out.push(record);
    }
    Ok(out)
}

/// Parses line-delimited match records, preserving input order.
pub fn parse_matches<R: BufRead>(input: R) -> Result<Vec<MatchRecord>> {
    let mut out = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let lineno = i + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let record: MatchRecord = serde_json::from_str(&line).map_err(|e| Error::Parse {
            line: lineno,
            msg: e.to_string(),
        })?;
        if record.team1.len() != TEAM_SIZE || record.team2.len() != TEAM_SIZE {
            return Err(Error::Schema {
                line: lineno,
                record: record.match_id.clone(),
                msg: format!(
                    "team sizes {} and {}, expected {}v{}",
                    record.team1.len(),
                    record.team2.len(),
                    TEAM_SIZE,
                    TEAM_SIZE
                ),
            });
        }
        record.validate().map_err(|e| match e {
            Error::Validation(msg) => Error::Validation(format!("line {lineno}: {msg}")),
            other => other,
        })?;
        out.push(record);
    }
    Ok(out)
}

/// Links players and matches into a corpus, checking referential integrity.
///
/// Fails with the full sorted list of unresolved player ids if any match
/// references a player that is missing from `players`.
pub fn link_corpus(players: Vec<PlayerStatRecord>, matches: Vec<MatchRecord>) -> Result<Corpus> {
    let known: HashSet<&str> = players.iter().map(|p| p.player_id.as_str()).collect();
    let mut dangling: Vec<String> = Vec::new();
    let mut reported: HashSet<&str> = HashSet::new();
    for m in &matches {
        for id in m.participants() {
            if !known.contains(id) && reported.insert(id) {
                dangling.push(id.to_string());
            }
        }
    }
    if !dangling.is_empty() {
        dangling.sort();
        return Err(Error::DanglingRefs(dangling));
    }
    Ok(Corpus { players, matches })
}

/// Writes player records in the line-delimited format `parse_player_stats` reads.
pub fn write_player_stats<W: Write>(mut w: W, players: &[PlayerStatRecord]) -> Result<()> {
    for p in players {
        serde_json::to_writer(&mut w, p)?;
        w.write_all(b"\n")?;
    }
    Ok(())
}

/// Writes match records in the line-delimited format `parse_matches` reads.
pub fn write_matches<W: Write>(mut w: W, matches: &[MatchRecord]) -> Result<()> {
    for m in matches {
        serde_json::to_writer(&mut w, m)?;
        w.write_all(b"\n")?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Cursor;

    fn valid_player_line(id: &str) -> String {
        let stats: Vec<f64> = (0..STAT_DIM).map(|i| i as f64).collect();
        serde_json::to_string(&PlayerStatRecord {
            player_id: id.to_string(),
            stats,
            character_usage: None,
        })
        .unwrap()
    }

    fn valid_match(id: &str) -> MatchRecord {
        MatchRecord {
            match_id: id.to_string(),
            team1: (0..5).map(|i| format!("a{i}")).collect(),
            team2: (0..5).map(|i| format!("b{i}")).collect(),
            winner: Winner::Team1,
            character_choices: None,
        }
    }

    #[test]
    fn parses_single_valid_player_line() {
        let line = valid_player_line("p1");
        let out = parse_player_stats(Cursor::new(line)).unwrap();
        assert_eq!(out.len(), 1);
        assert_eq!(out[0].player_id, "p1");
        assert_eq!(out[0].stats.len(), STAT_DIM);
    }

    #[test]
    fn empty_stream_gives_empty_list() {
        let out = parse_player_stats(Cursor::new("")).unwrap();
        assert!(out.is_empty());
    }

    #[test]
    fn wrong_stat_count_is_schema_error_with_line() {
        // Delete one field from a valid fixture.
        let mut rec: PlayerStatRecord =
            serde_json::from_str(&valid_player_line("p1")).unwrap();
        rec.stats.pop();
        let input = format!("{}\n{}", valid_player_line("p0"), serde_json::to_string(&rec).unwrap());
        let err = parse_player_stats(Cursor::new(input)).unwrap_err();
        match err {
            Error::Schema { line, record, .. } => {
                assert_eq!(line, 2);
                assert_eq!(record, "p1");
            }
            other => panic!("expected schema error, got {other:?}"),
        }
    }

    #[test]
    fn malformed_line_carries_line_number() {
        let input = format!("{}\nnot json", valid_player_line("p0"));
        let err = parse_player_stats(Cursor::new(input)).unwrap_err();
        match err {
            Error::Parse { line, .. } => assert_eq!(line, 2),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn negative_and_nan_stats_rejected() {
        let mut rec: PlayerStatRecord =
            serde_json::from_str(&valid_player_line("p1")).unwrap();
        rec.stats[3] = -1.0;
        let err =
            parse_player_stats(Cursor::new(serde_json::to_string(&rec).unwrap())).unwrap_err();
        assert!(matches!(err, Error::Validation(_)));

        // NaN does not survive JSON, so a non-numeric token shows up as a parse error.
        let line = valid_player_line("p1").replace("20.0", "NaN");
        let line = line.replace("\"stats\":[0.0", "\"stats\":[null");
        let err = parse_player_stats(Cursor::new(line)).unwrap_err();
        assert!(matches!(err, Error::Parse { .. }));
    }

    #[test]
    fn duplicate_player_id_rejected() {
        let input = format!("{}\n{}", valid_player_line("p1"), valid_player_line("p1"));
        let err = parse_player_stats(Cursor::new(input)).unwrap_err();
        assert!(matches!(err, Error::Validation(_)));
    }

    #[test]
    fn parses_single_valid_match() {
        let line = serde_json::to_string(&valid_match("m1")).unwrap();
        let out = parse_matches(Cursor::new(line)).unwrap();
        assert_eq!(out.len(), 1);
        assert_eq!(out[0].winner, Winner::Team1);
    }

    #[test]
    fn same_player_on_both_teams_rejected() {
        let mut m = valid_match("m1");
        m.team2[0] = m.team1[0].clone();
        let line = serde_json::to_string(&m).unwrap();
        let err = parse_matches(Cursor::new(line)).unwrap_err();
        assert!(matches!(err, Error::Validation(_)));
    }

    #[test]
    fn short_team_is_schema_error() {
        let mut m = valid_match("m1");
        m.team1.pop();
        let line = serde_json::to_string(&m).unwrap();
        let err = parse_matches(Cursor::new(line)).unwrap_err();
        match err {
            Error::Schema { record, .. } => assert_eq!(record, "m1"),
            other => panic!("expected schema error, got {other:?}"),
        }
    }

    #[test]
    fn link_corpus_checks_references() {
        let players: Vec<PlayerStatRecord> = (0..10)
            .map(|i| {
                let id = if i < 5 { format!("a{i}") } else { format!("b{}", i - 5) };
                serde_json::from_str(&valid_player_line(&id)).unwrap()
            })
            .collect();
        let corpus = link_corpus(players.clone(), vec![valid_match("m1")]).unwrap();
        assert_eq!(corpus.players.len(), 10);

        let mut bad = valid_match("m2");
        bad.team2[4] = "Z".to_string();
        let err = link_corpus(players, vec![bad]).unwrap_err();
        match err {
            Error::DanglingRefs(ids) => assert_eq!(ids, vec!["Z".to_string()]),
            other => panic!("expected dangling refs, got {other:?}"),
        }
    }

    #[test]
    fn winner_serializes_lowercase() {
        let line = serde_json::to_string(&valid_match("m1")).unwrap();
        assert!(line.contains("\"winner\":\"team1\""));
    }

    #[test]
    fn round_trip_preserves_records() {
        let players: Vec<PlayerStatRecord> = (0..20)
            .map(|i| {
                let mut r: PlayerStatRecord =
                    serde_json::from_str(&valid_player_line(&format!("p{i}"))).unwrap();
                if i % 3 == 0 {
                    let mut usage = BTreeMap::new();
                    usage.insert(format!("char{:03}", i % 7), i as u32);
                    r.character_usage = Some(usage);
                }
                r
            })
            .collect();
        let mut buf = Vec::new();
        write_player_stats(&mut buf, &players).unwrap();
        let reparsed = parse_player_stats(Cursor::new(buf)).unwrap();
        assert_eq!(players, reparsed);
    }
}
