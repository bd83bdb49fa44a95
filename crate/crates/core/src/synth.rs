//! Seeded synthetic-corpus generator with planted ground truth.
//!
//! Players are drawn around well-separated archetype means; matches sample
//! ten distinct players and draw the winner from a logistic model over the
//! true per-team archetype counts. Because the generating weights are known,
//! the best achievable prediction accuracy is computable exactly, which is
//! what the verification suite checks the learned models against.

use std::collections::BTreeMap;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::ClassTable;
use crate::ingest::{Corpus, MatchRecord, PlayerStatRecord, Winner, OFFICIAL_CLASS_COUNT, STAT_DIM, TEAM_SIZE};
use crate::preprocess::StatMatrix;

/// Number of distinct characters the generator lets players pick from.
pub const CHARACTER_POOL: usize = 120;

/// Required ratio between archetype-mean separation and within spread.
const MIN_SEPARATION_FACTOR: f64 = 4.0;

/// Specification of a synthetic corpus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub n_archetypes: usize,
    pub stat_dim: usize,
    /// One mean per archetype, entries in [0, 1], pairwise separated by at
    /// least `4 * within_spread`.
    pub archetype_means: Vec<Vec<f64>>,
    /// Per-coordinate standard deviation of the spherical within-archetype
    /// noise.
    pub within_spread: f64,
    pub n_players: usize,
    pub n_matches: usize,
    /// True logistic weights over the concatenated per-team archetype
    /// counts, length `2 * n_archetypes`.
    pub outcome_weights: Vec<f64>,
    pub outcome_intercept: f64,
    pub seed: u64,
}

impl SynthSpec {
    /// Convenience constructor: seeded archetype means in [0.1, 0.9]^21 and
    /// antisymmetric outcome weights where archetype `a` contributes
    /// `scale * (a / (A - 1) - 1/2)` for team 1 and its negation for team 2.
    pub fn balanced(
        n_archetypes: usize,
        n_players: usize,
        n_matches: usize,
        within_spread: f64,
        weight_scale: f64,
        seed: u64,
    ) -> Result<SynthSpec> {
        let archetype_means =
            generate_means(n_archetypes, STAT_DIM, within_spread, seed ^ 0xA5A5_5A5A)?;
        let mut outcome_weights = Vec::with_capacity(2 * n_archetypes);
        for a in 0..n_archetypes {
            let strength = if n_archetypes > 1 {
                weight_scale * (a as f64 / (n_archetypes as f64 - 1.0) - 0.5)
            } else {
                0.0
            };
            outcome_weights.push(strength);
        }
        for a in 0..n_archetypes {
            let w = outcome_weights[a];
            outcome_weights.push(-w);
        }
        let spec = SynthSpec {
            n_archetypes,
            stat_dim: STAT_DIM,
            archetype_means,
            within_spread,
            n_players,
            n_matches,
            outcome_weights,
            outcome_intercept: 0.0,
            seed,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_archetypes == 0 || self.stat_dim == 0 {
            return Err(Error::InvalidInput(
                "need at least one archetype and one stat dimension".into(),
            ));
        }
        if self.archetype_means.len() != self.n_archetypes {
            return Err(Error::DimensionMismatch {
                expected: self.n_archetypes,
                got: self.archetype_means.len(),
            });
        }
        for mean in &self.archetype_means {
            if mean.len() != self.stat_dim {
                return Err(Error::DimensionMismatch {
                    expected: self.stat_dim,
                    got: mean.len(),
                });
            }
            if mean.iter().any(|v| !(0.0..=1.0).contains(v)) {
                return Err(Error::Validation(
                    "archetype means must lie in [0, 1]".into(),
                ));
            }
        }
        if !(self.within_spread >= 0.0) || !self.within_spread.is_finite() {
            return Err(Error::Validation("within_spread must be >= 0".into()));
        }
        let min_sep = MIN_SEPARATION_FACTOR * self.within_spread;
        for i in 0..self.n_archetypes {
            for j in (i + 1)..self.n_archetypes {
                let dist = euclid(&self.archetype_means[i], &self.archetype_means[j]);
                if dist < min_sep {
                    return Err(Error::Validation(format!(
                        "archetypes {i} and {j} are {dist:.4} apart, need >= {min_sep:.4}"
                    )));
                }
            }
        }
        if self.outcome_weights.len() != 2 * self.n_archetypes {
            return Err(Error::DimensionMismatch {
                expected: 2 * self.n_archetypes,
                got: self.outcome_weights.len(),
            });
        }
        if self
            .outcome_weights
            .iter()
            .chain(std::iter::once(&self.outcome_intercept))
            .any(|w| !w.is_finite())
        {
            return Err(Error::Validation("outcome weights must be finite".into()));
        }
        Ok(())
    }
}

fn euclid(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Rejection-samples archetype means in [0.1, 0.9]^d until every pair is at
/// least `4 * spread` apart; errors if the constraint looks unsatisfiable.
pub fn generate_means(a: usize, d: usize, spread: f64, seed: u64) -> Result<Vec<Vec<f64>>> {
    let min_sep = MIN_SEPARATION_FACTOR * spread;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    'attempt: for _ in 0..1000 {
        let mut means: Vec<Vec<f64>> = Vec::with_capacity(a);
        for _ in 0..a {
            let candidate: Vec<f64> = (0..d).map(|_| 0.1 + 0.8 * rng.random::<f64>()).collect();
            if means.iter().any(|m| euclid(m, &candidate) < min_sep) {
                continue 'attempt;
            }
            means.push(candidate);
        }
        return Ok(means);
    }
    Err(Error::Validation(format!(
        "could not place {a} archetype means {min_sep:.3} apart in {d} dimensions"
    )))
}

#[inline]
fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Draws the player population; returns records plus the ground-truth
/// archetype label per player.
pub fn gen_players(spec: &SynthSpec) -> Result<(Vec<PlayerStatRecord>, Vec<usize>)> {
    spec.validate()?;
    if spec.n_players == 0 {
        return Err(Error::InvalidInput("n_players must be >= 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed.wrapping_add(1));
    let mut players = Vec::with_capacity(spec.n_players);
    let mut labels = Vec::with_capacity(spec.n_players);
    let width = spec.n_players.to_string().len().max(4);
    for i in 0..spec.n_players {
        let archetype = rng.random_range(0..spec.n_archetypes);
        let stats: Vec<f64> = spec.archetype_means[archetype]
            .iter()
            .map(|&mu| {
                let noise: f64 = rng.sample(StandardNormal);
                (mu + spec.within_spread * noise).max(0.0)
            })
            .collect();
        players.push(PlayerStatRecord {
            player_id: format!("p{i:0width$}"),
            stats,
            character_usage: None,
        });
        labels.push(archetype);
    }
    Ok((players, labels))
}

/// Draws matches over an existing population; returns records plus the true
/// team-1 win probability used for each one.
///
/// Every match samples ten distinct players (first five form team 1),
/// computes the true archetype-count feature, and draws the winner from
/// `sigmoid(w . x + b)`. Character picks are uniform over the pool and
/// independent of archetypes, so the official-class baseline carries no
/// outcome signal on synthetic data.
pub fn gen_matches(
    spec: &SynthSpec,
    players: &[PlayerStatRecord],
    labels: &[usize],
) -> Result<(Vec<MatchRecord>, Vec<f64>)> {
    spec.validate()?;
    if players.len() < 2 * TEAM_SIZE {
        return Err(Error::InvalidInput(format!(
            "need at least {} players to form a match, got {}",
            2 * TEAM_SIZE,
            players.len()
        )));
    }
    if players.len() != labels.len() {
        return Err(Error::DimensionMismatch {
            expected: players.len(),
            got: labels.len(),
        });
    }
    let a = spec.n_archetypes;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed.wrapping_add(2));
    let mut matches = Vec::with_capacity(spec.n_matches);
    let mut probs = Vec::with_capacity(spec.n_matches);
    let width = spec.n_matches.to_string().len().max(4);
    for mi in 0..spec.n_matches {
        let picked = rand::seq::index::sample(&mut rng, players.len(), 2 * TEAM_SIZE);
        let ids: Vec<&str> = picked
            .iter()
            .map(|i| players[i].player_id.as_str())
            .collect();

        let mut x = vec![0.0f64; 2 * a];
        for (slot, i) in picked.iter().enumerate() {
            let half = usize::from(slot >= TEAM_SIZE);
            x[half * a + labels[i]] += 1.0;
        }
        let z = spec.outcome_intercept
            + x.iter()
                .zip(spec.outcome_weights.iter())
                .map(|(xi, wi)| xi * wi)
                .sum::<f64>();
        let p = sigmoid(z);
        let winner = if rng.random::<f64>() < p {
            Winner::Team1
        } else {
            Winner::Team2
        };

        let character_choices: BTreeMap<String, String> = ids
            .iter()
            .map(|&id| {
                let pick = rng.random_range(0..CHARACTER_POOL);
                (id.to_string(), format!("char{pick:03}"))
            })
            .collect();

        matches.push(MatchRecord {
            match_id: format!("m{mi:0width$}"),
            team1: ids[..TEAM_SIZE].iter().map(|s| s.to_string()).collect(),
            team2: ids[TEAM_SIZE..].iter().map(|s| s.to_string()).collect(),
            winner,
            character_choices: Some(character_choices),
        });
        probs.push(p);
    }
    Ok((matches, probs))
}

/// Best achievable accuracy on the given matches: the mean of
/// `max(p, 1 - p)` over the true win probabilities, recomputed from the
/// ground-truth labels.
pub fn bayes_rate(
    spec: &SynthSpec,
    matches: &[MatchRecord],
    players: &[PlayerStatRecord],
    labels: &[usize],
) -> Result<f64> {
    if matches.is_empty() {
        return Err(Error::InvalidInput("no matches".into()));
    }
    let by_id: std::collections::HashMap<&str, usize> = players
        .iter()
        .enumerate()
        .map(|(i, p)| (p.player_id.as_str(), i))
        .collect();
    let a = spec.n_archetypes;
    let mut total = 0.0;
    for m in matches {
        let mut x = vec![0.0f64; 2 * a];
        for (half, team) in [&m.team1, &m.team2].into_iter().enumerate() {
            for id in team {
                let &i = by_id
                    .get(id.as_str())
                    .ok_or_else(|| Error::DanglingRefs(vec![id.clone()]))?;
                x[half * a + labels[i]] += 1.0;
            }
        }
        let z = spec.outcome_intercept
            + x.iter()
                .zip(spec.outcome_weights.iter())
                .map(|(xi, wi)| xi * wi)
                .sum::<f64>();
        let p = sigmoid(z);
        total += p.max(1.0 - p);
    }
    Ok(total / matches.len() as f64)
}

/// A fully generated corpus with its ground truth.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SynthCorpus {
    pub players: Vec<PlayerStatRecord>,
    pub matches: Vec<MatchRecord>,
    pub archetype_labels: Vec<usize>,
    pub true_probs: Vec<f64>,
    pub bayes_rate: f64,
}

impl SynthCorpus {
    pub fn corpus(&self) -> Corpus {
        Corpus {
            players: self.players.clone(),
            matches: self.matches.clone(),
        }
    }
}

/// Generates players and matches in one call.
pub fn generate(spec: &SynthSpec) -> Result<SynthCorpus> {
    let (players, archetype_labels) = gen_players(spec)?;
    let (matches, true_probs) = gen_matches(spec, &players, &archetype_labels)?;
    let rate = bayes_rate(spec, &matches, &players, &archetype_labels)?;
    Ok(SynthCorpus {
        players,
        matches,
        archetype_labels,
        true_probs,
        bayes_rate: rate,
    })
}

/// The class table used for the synthetic baseline: characters cycle through
/// the six official classes, independent of archetypes.
pub fn default_class_table() -> ClassTable {
    ClassTable(
        (0..CHARACTER_POOL)
            .map(|i| (format!("char{i:03}"), i % OFFICIAL_CLASS_COUNT))
            .collect(),
    )
}

/// Threshold-distance window for DP-means on labeled data, in the units of
/// the matrix passed in (run it on the normalized matrix for the pipeline).
///
/// Returns `(lo, hi)` where `lo` is the largest within-group pairwise
/// distance and `hi` the smallest cross-group pairwise distance. Any lambda
/// strictly inside recovers exactly one cluster per group in the first pass.
pub fn lambda_window(m: &StatMatrix, labels: &[usize]) -> Result<(f64, f64)> {
    if m.n() != labels.len() {
        return Err(Error::DimensionMismatch {
            expected: m.n(),
            got: labels.len(),
        });
    }
    let mut intra: f64 = 0.0;
    let mut cross = f64::INFINITY;
    for i in 0..m.n() {
        for j in (i + 1)..m.n() {
            let d = m
                .row(i)
                .iter()
                .zip(m.row(j).iter())
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
            if labels[i] == labels[j] {
                intra = intra.max(d);
            } else {
                cross = cross.min(d);
            }
        }
    }
    Ok((intra, cross))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::link_corpus;

    fn tiny_spec(spread: f64, scale: f64, seed: u64) -> SynthSpec {
        SynthSpec::balanced(4, 60, 200, spread, scale, seed).unwrap()
    }

    #[test]
    fn zero_spread_players_sit_on_their_means() {
        let spec = tiny_spec(0.0, 1.0, 1);
        let (players, labels) = gen_players(&spec).unwrap();
        for (p, &a) in players.iter().zip(labels.iter()) {
            assert_eq!(p.stats, spec.archetype_means[a]);
        }
    }

    #[test]
    fn single_archetype_gives_all_zero_labels() {
        let spec = SynthSpec::balanced(1, 20, 30, 0.01, 0.0, 3).unwrap();
        let (_, labels) = gen_players(&spec).unwrap();
        assert!(labels.iter().all(|&l| l == 0));
    }

    #[test]
    fn generated_corpus_passes_ingest_validation() {
        let spec = tiny_spec(0.02, 1.0, 5);
        let corpus = generate(&spec).unwrap();
        for p in &corpus.players {
            p.validate().unwrap();
        }
        for m in &corpus.matches {
            m.validate().unwrap();
        }
        link_corpus(corpus.players.clone(), corpus.matches.clone()).unwrap();
    }

    #[test]
    fn generation_is_byte_deterministic() {
        let spec = tiny_spec(0.02, 1.0, 7);
        let a = generate(&spec).unwrap();
        let b = generate(&spec).unwrap();
        let mut buf_a = Vec::new();
        let mut buf_b = Vec::new();
        crate::ingest::write_player_stats(&mut buf_a, &a.players).unwrap();
        crate::ingest::write_player_stats(&mut buf_b, &b.players).unwrap();
        assert_eq!(buf_a, buf_b);
        let mut mbuf_a = Vec::new();
        let mut mbuf_b = Vec::new();
        crate::ingest::write_matches(&mut mbuf_a, &a.matches).unwrap();
        crate::ingest::write_matches(&mut mbuf_b, &b.matches).unwrap();
        assert_eq!(mbuf_a, mbuf_b);
        assert_eq!(a.true_probs, b.true_probs);
    }

    #[test]
    fn zero_weights_make_balanced_outcomes() {
        let spec = SynthSpec::balanced(4, 100, 4000, 0.02, 0.0, 11).unwrap();
        let corpus = generate(&spec).unwrap();
        assert_eq!(corpus.bayes_rate, 0.5);
        let wins = corpus
            .matches
            .iter()
            .filter(|m| m.winner == Winner::Team1)
            .count() as f64;
        let n = corpus.matches.len() as f64;
        let sigma = (0.25 / n).sqrt();
        assert!(
            (wins / n - 0.5).abs() < 3.0 * sigma,
            "win rate {} outside 3 sigma",
            wins / n
        );
    }

    #[test]
    fn extreme_weights_make_outcomes_near_deterministic() {
        let spec = SynthSpec::balanced(4, 100, 500, 0.02, 60.0, 13).unwrap();
        let corpus = generate(&spec).unwrap();
        assert!(corpus.bayes_rate > 0.95, "bayes rate {}", corpus.bayes_rate);
    }

    #[test]
    fn bayes_rate_matches_monte_carlo_resimulation() {
        let spec = SynthSpec::balanced(4, 100, 2000, 0.02, 1.5, 17).unwrap();
        let corpus = generate(&spec).unwrap();

        // Re-simulate winners and score the oracle predictor (bet on the
        // more likely team).
        let mut rng = ChaCha8Rng::seed_from_u64(999);
        let reps = 50;
        let mut correct = 0u64;
        for _ in 0..reps {
            for &p in &corpus.true_probs {
                let team1_wins = rng.random::<f64>() < p;
                let predict_team1 = p >= 0.5;
                correct += u64::from(team1_wins == predict_team1);
            }
        }
        let mc = correct as f64 / (reps * corpus.true_probs.len() as u64) as f64;
        assert!(
            (mc - corpus.bayes_rate).abs() < 0.01,
            "MC {mc} vs exact {}",
            corpus.bayes_rate
        );
    }

    #[test]
    fn too_few_players_for_a_match_is_an_error() {
        let mut spec = tiny_spec(0.01, 1.0, 19);
        spec.n_players = 9;
        let (players, labels) = gen_players(&spec).unwrap();
        assert!(gen_matches(&spec, &players, &labels).is_err());
    }

    #[test]
    fn unsatisfiable_separation_is_an_error() {
        // 50 archetypes that must each be ~1.8 apart cannot fit in [0,1]^2.
        assert!(generate_means(50, 2, 0.45, 0).is_err());
    }

    #[test]
    fn archetype_frequencies_are_roughly_uniform() {
        let spec = SynthSpec::balanced(8, 10_000, 10, 0.01, 0.0, 23).unwrap();
        let (_, labels) = gen_players(&spec).unwrap();
        let mut counts = [0usize; 8];
        for &l in &labels {
            counts[l] += 1;
        }
        // Chi-squared against uniform: 7 degrees of freedom, 99.9th
        // percentile is about 24.3.
        let expected = 10_000.0 / 8.0;
        let chi2: f64 = counts
            .iter()
            .map(|&c| {
                let d = c as f64 - expected;
                d * d / expected
            })
            .sum();
        assert!(chi2 < 24.3, "chi-squared {chi2}");
    }

    #[test]
    fn lambda_window_separates_intra_from_cross() {
        let spec = SynthSpec::balanced(4, 200, 10, 0.01, 0.0, 29).unwrap();
        let (players, labels) = gen_players(&spec).unwrap();
        let raw = crate::preprocess::build_stat_matrix(&players).unwrap();
        let norm = crate::preprocess::min_max_normalize(&raw).unwrap();
        let (lo, hi) = lambda_window(&norm, &labels).unwrap();
        assert!(lo < hi, "window is empty: ({lo}, {hi})");

        // A lambda inside the window recovers exactly one cluster per
        // archetype.
        let lambda = 0.5 * (lo + hi);
        let (model, assignment) =
            crate::cluster::dpmeans_fit(&norm, lambda, 3, 300).unwrap();
        assert_eq!(model.k(), 4);
        assert!(
            (crate::cluster::adjusted_rand_index(&assignment.labels, &labels) - 1.0).abs()
                < 1e-12
        );
    }
}
