//! Expertise-weighted aggregation of returned forms, anonymous per-team
//! overviews, ranking within a discipline and tagging of general comments.

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::model::{ConfidentialText, DisciplineId, DominantCharacter, Indicator, Score, TeamId, ValidatedForm};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ScoringError {
    #[error("NoForms: no returned forms for {0}")]
    NoForms(String),
    #[error("MixedTeams: forms for {0} and {1} passed to a single-team aggregation")]
    MixedTeams(TeamId, TeamId),
    #[error("InvalidCategory: {0:?} is not a recommendation category")]
    InvalidCategory(String),
    #[error("UnknownPolicy: {0:?}")]
    UnknownPolicy(String),
}

/// How a reviewer's self-reported expertise turns into an aggregation weight.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case", tag = "policy")]
pub enum WeightingPolicy {
    /// Every rating counts the same.
    Unweighted,
    /// Weight equals the expertise score.
    #[default]
    Linear,
    /// Weight equals the squared expertise score.
    Squared,
    /// Ratings below `min` expertise are ignored, the rest count equally.
    Threshold { min: u8 },
}

impl WeightingPolicy {
    pub fn weight(self, expertise: Score) -> f64 {
        let e = expertise.get() as f64;
        match self {
            WeightingPolicy::Unweighted => 1.0,
            WeightingPolicy::Linear => e,
            WeightingPolicy::Squared => e * e,
            WeightingPolicy::Threshold { min } => {
                if expertise.get() >= min {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    pub fn name(self) -> String {
        match self {
            WeightingPolicy::Unweighted => "unweighted".into(),
            WeightingPolicy::Linear => "linear".into(),
            WeightingPolicy::Squared => "squared".into(),
            WeightingPolicy::Threshold { min } => format!("threshold:{min}"),
        }
    }

    /// Plain-language explanation of the calculation, used in team reports.
    pub fn describe(self) -> String {
        let weight = match self {
            WeightingPolicy::Unweighted => "All ratings carry the same weight.".to_owned(),
            WeightingPolicy::Linear => {
                "Each rating is weighted by the reviewer's expertise in the research area of the team, \
                 as indicated by the reviewer on the form (1 to 10)."
                    .to_owned()
            }
            WeightingPolicy::Squared => {
                "Each rating is weighted by the square of the reviewer's expertise in the research area \
                 of the team, as indicated by the reviewer on the form (1 to 10)."
                    .to_owned()
            }
            WeightingPolicy::Threshold { min } => format!(
                "Only ratings from reviewers who indicated an expertise of at least {min} (on 1 to 10) \
                 are used; these carry the same weight."
            ),
        };
        format!(
            "{weight} For every aspect, the score shown is the sum of weight times rating divided by the \
             sum of the weights, over the reviewers who rated that aspect. Aspects a reviewer left blank \
             are not counted for that reviewer. The position in the discipline follows from the overall \
             evaluation score; teams with equal scores share the average of their positions. Scores are \
             rounded to two decimals."
        )
    }
}

impl std::str::FromStr for WeightingPolicy {
    type Err = ScoringError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "unweighted" | "uniform" => Ok(WeightingPolicy::Unweighted),
            "linear" => Ok(WeightingPolicy::Linear),
            "squared" => Ok(WeightingPolicy::Squared),
            other => other
                .strip_prefix("threshold:")
                .and_then(|m| m.parse::<u8>().ok())
                .filter(|m| (1..=10).contains(m))
                .map(|min| WeightingPolicy::Threshold { min })
                .ok_or_else(|| ScoringError::UnknownPolicy(other.to_owned())),
        }
    }
}

/// Σ w·s / Σ w over the pairs. `None` when there is no positive weight.
///
/// Pairs are summed in sorted order so the result does not depend on the
/// order the ratings arrive in.
pub fn weighted_mean(scores: &[f64], weights: &[f64]) -> Option<f64> {
    assert_eq!(scores.len(), weights.len(), "scores and weights differ in length");
    let mut pairs: Vec<(f64, f64)> = scores.iter().copied().zip(weights.iter().copied()).collect();
    pairs.sort_by(|a, b| a.partial_cmp(b).expect("finite ratings"));
    let (Some(&(lo, _)), Some(&(hi, _))) = (pairs.first(), pairs.last()) else {
        return None;
    };
    // offsets from the lowest score keep constant sets exact, so ties survive weight scaling
    let (num, den) = pairs.iter().fold((0.0, 0.0), |(n, d), (s, w)| (n + w * (s - lo), d + w));
    (den > 0.0).then(|| (lo + num / den).clamp(lo, hi))
}

/// Two decimals, halves rounded away from zero.
pub fn round2(x: f64) -> f64 {
    (x * 100.0).round() / 100.0
}

pub fn format2(x: f64) -> String {
    format!("{:.2}", round2(x))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndicatorAggregate {
    pub weighted_mean: f64,
    pub n_ratings: usize,
    pub weight_sum: f64,
    pub min: u8,
    pub max: u8,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreSummary {
    pub team_id: TeamId,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub discipline_id: Option<DisciplineId>,
    pub n_forms: usize,
    pub per_indicator: BTreeMap<Indicator, IndicatorAggregate>,
    pub dominant_tally: BTreeMap<DominantCharacter, f64>,
    pub overall_weighted: Option<f64>,
    pub rank_in_discipline: Option<f64>,
}

impl ScoreSummary {
    pub fn mean(&self, indicator: Indicator) -> Option<f64> {
        self.per_indicator.get(&indicator).map(|a| a.weighted_mean)
    }

    /// Dominant-character tally as proportions of the total weight.
    pub fn dominant_proportions(&self) -> BTreeMap<DominantCharacter, f64> {
        let total: f64 = self.dominant_tally.values().sum();
        if total <= 0.0 {
            return BTreeMap::new();
        }
        self.dominant_tally.iter().map(|(c, w)| (*c, w / total)).collect()
    }
}

/// Aggregates the forms returned for one team.
pub fn aggregate_team(forms: &[ValidatedForm], policy: WeightingPolicy) -> Result<ScoreSummary, ScoringError> {
    let first = forms.first().ok_or_else(|| ScoringError::NoForms("team".into()))?;
    let team_id = first.team_id().clone();
    if let Some(other) = forms.iter().find(|f| f.team_id() != &team_id) {
        return Err(ScoringError::MixedTeams(team_id, other.team_id().clone()));
    }

    let mut per_indicator = BTreeMap::new();
    for indicator in Indicator::RATED {
        let mut scores = Vec::new();
        let mut weights = Vec::new();
        for f in forms {
            if let Some(s) = f.score(indicator) {
                scores.push(s.get() as f64);
                weights.push(policy.weight(f.expertise()));
            }
        }
        if scores.is_empty() {
            continue;
        }
        let Some(mean) = weighted_mean(&scores, &weights) else { continue };
        let weight_sum = {
            let mut w = weights.clone();
            w.sort_by(|a, b| a.partial_cmp(b).unwrap());
            w.iter().sum()
        };
        per_indicator.insert(
            indicator,
            IndicatorAggregate {
                weighted_mean: mean,
                n_ratings: scores.len(),
                weight_sum,
                min: scores.iter().fold(10.0f64, |a, b| a.min(*b)) as u8,
                max: scores.iter().fold(1.0f64, |a, b| a.max(*b)) as u8,
            },
        );
    }

    let mut dominant_tally = BTreeMap::new();
    let mut contributions: Vec<(DominantCharacter, f64)> =
        forms.iter().filter_map(|f| f.dominant_character().map(|c| (c, policy.weight(f.expertise())))).collect();
    contributions.sort_by(|a, b| a.partial_cmp(b).unwrap());
    for (c, w) in contributions {
        *dominant_tally.entry(c).or_insert(0.0) += w;
    }

    Ok(ScoreSummary {
        team_id,
        discipline_id: None,
        n_forms: forms.len(),
        overall_weighted: per_indicator.get(&Indicator::Overall).map(|a: &IndicatorAggregate| a.weighted_mean),
        per_indicator,
        dominant_tally,
        rank_in_discipline: None,
    })
}

/// 1-based ranks, highest value first, ties sharing the average position.
pub fn average_ranks_desc(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[b].partial_cmp(&values[a]).expect("finite values"));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = avg;
        }
        i = j + 1;
    }
    ranks
}

/// Ranks the teams of one discipline by overall score.
///
/// Teams without an overall score keep `rank_in_discipline = None` and are
/// listed last, ordered by team id.
pub fn rank_discipline(summaries: &[ScoreSummary]) -> Vec<ScoreSummary> {
    let (mut ranked, mut unranked): (Vec<ScoreSummary>, Vec<ScoreSummary>) =
        summaries.iter().cloned().partition(|s| s.overall_weighted.is_some());
    let values: Vec<f64> = ranked.iter().map(|s| s.overall_weighted.unwrap()).collect();
    for (s, r) in ranked.iter_mut().zip(average_ranks_desc(&values)) {
        s.rank_in_discipline = Some(r);
    }
    ranked.sort_by(|a, b| {
        a.rank_in_discipline.partial_cmp(&b.rank_in_discipline).unwrap().then_with(|| a.team_id.cmp(&b.team_id))
    });
    for s in &mut unranked {
        s.rank_in_discipline = None;
    }
    unranked.sort_by(|a, b| a.team_id.cmp(&b.team_id));
    ranked.extend(unranked);
    ranked
}

/// "rank 2.5 of 10"
pub fn rank_label(rank: f64, of: usize) -> String {
    if rank.fract() == 0.0 {
        format!("rank {} of {of}", rank as i64)
    } else {
        format!("rank {rank:.1} of {of}")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OverviewRow {
    pub anon_label: String,
    pub expertise: u8,
    pub scores: BTreeMap<Indicator, u8>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dominant_character: Option<DominantCharacter>,
    pub comments: BTreeMap<String, ConfidentialText>,
    #[serde(skip)]
    label_index: usize,
}

/// Scores and comments of one team with reviewer identities removed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnonymousOverview {
    pub team_id: TeamId,
    pub rows: Vec<OverviewRow>,
}

fn team_seed(seed: u64, team: &TeamId) -> u64 {
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    h.update(team.as_str().as_bytes());
    let digest = h.finalize();
    u64::from_le_bytes(digest[..8].try_into().unwrap())
}

/// Builds the anonymous overview for one team.
///
/// Reviewer labels come from a shuffle seeded by `(seed, team)`, so the same
/// expert carries unrelated labels on different teams. Rows are ordered by
/// expertise (highest first), then label.
pub fn build_overview(forms: &[ValidatedForm], team: &TeamId, seed: u64) -> AnonymousOverview {
    let mut forms: Vec<&ValidatedForm> = forms.iter().filter(|f| f.team_id() == team).collect();
    // canonical order first, so the shuffle does not depend on input order
    forms.sort_by(|a, b| a.expert_id().cmp(b.expert_id()));
    let mut rng = ChaCha8Rng::seed_from_u64(team_seed(seed, team));
    forms.shuffle(&mut rng);
    let mut rows: Vec<OverviewRow> = forms
        .iter()
        .enumerate()
        .map(|(i, f)| OverviewRow {
            anon_label: format!("Reviewer {}", i + 1),
            expertise: f.expertise().get(),
            scores: f.rated_scores().map(|(ind, s)| (ind, s.get())).collect(),
            dominant_character: f.dominant_character(),
            comments: f.comments().clone(),
            label_index: i + 1,
        })
        .collect();
    rows.sort_by(|a, b| b.expertise.cmp(&a.expertise).then(a.label_index.cmp(&b.label_index)));
    AnonymousOverview { team_id: team.clone(), rows }
}

impl AnonymousOverview {
    pub fn render(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "Anonymous overview for team {}", self.team_id);
        for row in &self.rows {
            let _ = writeln!(out, "\n{} (expertise {})", row.anon_label, row.expertise);
            for (ind, s) in &row.scores {
                let _ = writeln!(out, "  {:<24} {s}", ind.key());
            }
            if let Some(c) = row.dominant_character {
                let _ = writeln!(out, "  {:<24} {}", "dominant_character", c.key());
            }
            for (slot, text) in &row.comments {
                let _ = writeln!(out, "  [{slot}] {}", text.expose());
            }
        }
        out
    }
}

/// Recommendation categories at team level.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TeamCategory {
    TeamFormationHrm,
    ResearchPlanningStrategy,
    PhdStudents,
    Publications,
    Teaching,
    InternalCollaborations,
    InternationalCollaborationsNetworking,
}

/// Recommendation categories at institutional level.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InstitutionalCategory {
    HumanResourcesManagement,
    ResearchPolicy,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "level", content = "category")]
pub enum RecommendationCategory {
    Team(TeamCategory),
    Institutional(InstitutionalCategory),
}

impl TeamCategory {
    pub const ALL: [TeamCategory; 7] = [
        TeamCategory::TeamFormationHrm,
        TeamCategory::ResearchPlanningStrategy,
        TeamCategory::PhdStudents,
        TeamCategory::Publications,
        TeamCategory::Teaching,
        TeamCategory::InternalCollaborations,
        TeamCategory::InternationalCollaborationsNetworking,
    ];

    pub fn label(self) -> &'static str {
        match self {
            TeamCategory::TeamFormationHrm => "team formation & human resources management",
            TeamCategory::ResearchPlanningStrategy => "research planning & strategy",
            TeamCategory::PhdStudents => "PhD students",
            TeamCategory::Publications => "publications",
            TeamCategory::Teaching => "teaching",
            TeamCategory::InternalCollaborations => "internal collaborations",
            TeamCategory::InternationalCollaborationsNetworking => "international collaborations & networking",
        }
    }
}

impl InstitutionalCategory {
    pub const ALL: [InstitutionalCategory; 2] =
        [InstitutionalCategory::HumanResourcesManagement, InstitutionalCategory::ResearchPolicy];

    pub fn label(self) -> &'static str {
        match self {
            InstitutionalCategory::HumanResourcesManagement => "human resources management",
            InstitutionalCategory::ResearchPolicy => "research policy",
        }
    }
}

impl RecommendationCategory {
    pub fn label(self) -> &'static str {
        match self {
            RecommendationCategory::Team(c) => c.label(),
            RecommendationCategory::Institutional(c) => c.label(),
        }
    }
}

fn normalize_category(s: &str) -> String {
    let mut out = String::new();
    for word in s
        .to_lowercase()
        .replace('&', " ")
        .split(|c: char| !c.is_alphanumeric())
        .filter(|w| !w.is_empty() && *w != "and")
    {
        if !out.is_empty() {
            out.push('_');
        }
        out.push_str(word);
    }
    out
}

impl std::str::FromStr for RecommendationCategory {
    type Err = ScoringError;

    /// Accepts the printed label or its snake_case key, case-insensitively.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let norm = normalize_category(s);
        let team = TeamCategory::ALL.iter().map(|c| (RecommendationCategory::Team(*c), c.label()));
        let inst = InstitutionalCategory::ALL.iter().map(|c| (RecommendationCategory::Institutional(*c), c.label()));
        for (cat, label) in team.chain(inst) {
            if normalize_category(label) == norm {
                return Ok(cat);
            }
        }
        match norm.as_str() {
            "team_formation_hrm" => Ok(RecommendationCategory::Team(TeamCategory::TeamFormationHrm)),
            "international_collaborations_networking" => {
                Ok(RecommendationCategory::Team(TeamCategory::InternationalCollaborationsNetworking))
            }
            _ => Err(ScoringError::InvalidCategory(s.to_owned())),
        }
    }
}

impl fmt::Display for RecommendationCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// A general remark as tagged by the coordinator.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaggedComment {
    pub category: String,
    pub text: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GeneralComments {
    pub team_level: Vec<(TeamCategory, String)>,
    pub institutional: Vec<(InstitutionalCategory, String)>,
}

/// Sorts tagged general remarks into the team-level and institutional lists.
pub fn collect_general_comments(tagged: &[TaggedComment]) -> Result<GeneralComments, ScoringError> {
    let mut out = GeneralComments::default();
    for c in tagged {
        match c.category.parse::<RecommendationCategory>()? {
            RecommendationCategory::Team(cat) => out.team_level.push((cat, c.text.clone())),
            RecommendationCategory::Institutional(cat) => out.institutional.push((cat, c.text.clone())),
        }
    }
    out.team_level.sort();
    out.institutional.sort();
    Ok(out)
}

/// One CSV row per team and indicator.
pub fn summaries_csv(summaries: &[ScoreSummary]) -> Result<String, csv::Error> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["team_id", "indicator", "weighted_mean", "n_ratings", "weight_sum", "rank_in_discipline"])?;
    for s in summaries {
        let rank = s.rank_in_discipline.map(|r| r.to_string()).unwrap_or_default();
        for (ind, agg) in &s.per_indicator {
            w.write_record([
                s.team_id.as_str(),
                ind.key(),
                &format2(agg.weighted_mean),
                &agg.n_ratings.to_string(),
                &agg.weight_sum.to_string(),
                &rank,
            ])?;
        }
    }
    let bytes = w.into_inner().map_err(|e| e.into_error())?;
    Ok(String::from_utf8(bytes).expect("utf-8"))
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::model::{EvaluationForm, ExpertId};
    use chrono::DateTime;

    pub(crate) fn form(expert: &str, team: &str, expertise: i64, scores: &[(Indicator, i64)]) -> ValidatedForm {
        let mut map: BTreeMap<Indicator, i64> = scores.iter().copied().collect();
        map.insert(Indicator::ReviewerExpertise, expertise);
        ValidatedForm::try_from(EvaluationForm {
            expert_id: ExpertId::new(expert),
            team_id: TeamId::new(team),
            scores: map,
            dominant_character: None,
            comments: BTreeMap::new(),
            returned_at: DateTime::from_timestamp(0, 0).unwrap(),
        })
        .unwrap()
    }

    #[test]
    fn two_reviewers_weighted() {
        let forms = [form("a", "T", 10, &[(Indicator::Overall, 8)]), form("b", "T", 5, &[(Indicator::Overall, 6)])];
        let s = aggregate_team(&forms, WeightingPolicy::Linear).unwrap();
        // (8*10 + 6*5) / 15 = 110/15
        assert!((s.overall_weighted.unwrap() - 110.0 / 15.0).abs() < 1e-12);
        assert_eq!(format2(s.overall_weighted.unwrap()), "7.33");
        let agg = &s.per_indicator[&Indicator::Overall];
        assert_eq!(agg.n_ratings, 2);
        assert_eq!(agg.weight_sum, 15.0);
    }

    #[test]
    fn equal_expertise_is_plain_mean() {
        let forms = [5, 7, 9].map(|s| form(&format!("e{s}"), "T", 7, &[(Indicator::Overall, s)]));
        let s = aggregate_team(&forms, WeightingPolicy::Linear).unwrap();
        assert_eq!(format2(s.overall_weighted.unwrap()), "7.00");
    }

    #[test]
    fn single_form_identity() {
        let s = aggregate_team(&[form("a", "T", 2, &[(Indicator::Overall, 4)])], WeightingPolicy::Linear).unwrap();
        assert_eq!(s.overall_weighted, Some(4.0));
    }

    #[test]
    fn empty_forms_error() {
        assert!(matches!(aggregate_team(&[], WeightingPolicy::Linear), Err(ScoringError::NoForms(_))));
    }

    #[test]
    fn skipped_indicator_is_absent() {
        let s = aggregate_team(&[form("a", "T", 5, &[(Indicator::Overall, 4)])], WeightingPolicy::Linear).unwrap();
        assert!(!s.per_indicator.contains_key(&Indicator::Innovation));
        assert!(!s.per_indicator.contains_key(&Indicator::ReviewerExpertise));
    }

    #[test]
    fn dominant_tally_is_weighted() {
        let mut a = form("a", "T", 8, &[]).to_form();
        a.dominant_character = Some("applied".into());
        let mut b = form("b", "T", 2, &[]).to_form();
        b.dominant_character = Some("fundamental".into());
        let forms: Vec<ValidatedForm> = [a, b].into_iter().map(|f| f.try_into().unwrap()).collect();
        let s = aggregate_team(&forms, WeightingPolicy::Linear).unwrap();
        assert_eq!(s.dominant_tally[&DominantCharacter::Applied], 8.0);
        let p = s.dominant_proportions();
        assert!((p[&DominantCharacter::Fundamental] - 0.2).abs() < 1e-12);
    }

    fn summary(team: &str, overall: Option<f64>) -> ScoreSummary {
        ScoreSummary {
            team_id: team.into(),
            discipline_id: None,
            n_forms: 1,
            per_indicator: BTreeMap::new(),
            dominant_tally: BTreeMap::new(),
            overall_weighted: overall,
            rank_in_discipline: None,
        }
    }

    /// Rank of v = 1 + #greater + (#equal - 1)/2, by direct counting.
    fn rank_oracle(values: &[f64]) -> Vec<f64> {
        values
            .iter()
            .map(|v| {
                let greater = values.iter().filter(|w| *w > v).count() as f64;
                let equal = values.iter().filter(|w| *w == v).count() as f64;
                1.0 + greater + (equal - 1.0) / 2.0
            })
            .collect()
    }

    #[test]
    fn ranking_with_ties() {
        let values = [8.2, 7.5, 7.5];
        assert_eq!(rank_oracle(&values), vec![1.0, 2.5, 2.5]);
        let ranked = rank_discipline(&[summary("a", Some(8.2)), summary("b", Some(7.5)), summary("c", Some(7.5))]);
        let ranks: Vec<_> = ranked.iter().map(|s| s.rank_in_discipline.unwrap()).collect();
        assert_eq!(ranks, vec![1.0, 2.5, 2.5]);
        assert_eq!(rank_label(2.5, 3), "rank 2.5 of 3");
        assert_eq!(rank_label(1.0, 3), "rank 1 of 3");
    }

    #[test]
    fn ranking_edge_cases() {
        assert_eq!(rank_discipline(&[summary("a", Some(5.0))])[0].rank_in_discipline, Some(1.0));
        let all: Vec<_> = (0..6).map(|i| summary(&format!("t{i}"), Some(7.0))).collect();
        assert!(rank_discipline(&all).iter().all(|s| s.rank_in_discipline == Some(3.5)));
        let mixed = rank_discipline(&[summary("z", None), summary("a", Some(6.0))]);
        assert_eq!(mixed[1].team_id.as_str(), "z");
        assert_eq!(mixed[1].rank_in_discipline, None);
    }

    #[test]
    fn ranks_match_oracle_on_random_values() {
        use rand::Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            let n = rng.random_range(1..15);
            let values: Vec<f64> = (0..n).map(|_| rng.random_range(1..=6) as f64).collect();
            assert_eq!(average_ranks_desc(&values), rank_oracle(&values));
        }
    }

    #[test]
    fn overview_orders_by_expertise() {
        let forms = [
            form("a", "T", 4, &[(Indicator::Overall, 5)]),
            form("b", "T", 9, &[(Indicator::Overall, 6)]),
            form("c", "T", 7, &[(Indicator::Overall, 7)]),
        ];
        let ov = build_overview(&forms, &"T".into(), 42);
        let order: Vec<u8> = ov.rows.iter().map(|r| r.expertise).collect();
        assert_eq!(order, vec![9, 7, 4]);
        assert_eq!(ov, build_overview(&forms, &"T".into(), 42));
        let mut reversed = forms.to_vec();
        reversed.reverse();
        assert_eq!(ov, build_overview(&reversed, &"T".into(), 42));
        let text = ov.render();
        for id in ["a", "b", "c"] {
            assert!(!text.contains(&format!("expert {id}")));
        }
    }

    #[test]
    fn labels_are_redrawn_per_team() {
        // 8 reviewers rating two teams: with independent shuffles the label
        // assignment differs for at least one of a few seeds.
        let mk = |team: &str| -> Vec<ValidatedForm> {
            // the overall score identifies the reviewer
            (0..8).map(|i| form(&format!("e{i}"), team, 5, &[(Indicator::Overall, i + 1)])).collect()
        };
        let labelling = |ov: &AnonymousOverview| -> Vec<(String, u8)> {
            ov.rows.iter().map(|r| (r.anon_label.clone(), r.scores[&Indicator::Overall])).collect()
        };
        let differs = (0..5).any(|seed| {
            let a = build_overview(&mk("T1"), &"T1".into(), seed);
            let b = build_overview(&mk("T2"), &"T2".into(), seed);
            labelling(&a) != labelling(&b)
        });
        assert!(differs);
    }

    #[test]
    fn recommendation_categories() {
        let tagged = vec![
            TaggedComment { category: "publications".into(), text: "publish internationally".into() },
            TaggedComment { category: "research policy".into(), text: "clarify the global mission".into() },
            TaggedComment { category: "PhD students".into(), text: "coaching".into() },
        ];
        let g = collect_general_comments(&tagged).unwrap();
        assert_eq!(g.team_level.len(), 2);
        assert_eq!(g.institutional, vec![(InstitutionalCategory::ResearchPolicy, "clarify the global mission".into())]);
        let bad = [TaggedComment { category: "finance".into(), text: "x".into() }];
        assert_eq!(collect_general_comments(&bad), Err(ScoringError::InvalidCategory("finance".into())));
        assert_eq!(
            "team formation & human resources management".parse::<RecommendationCategory>().unwrap(),
            RecommendationCategory::Team(TeamCategory::TeamFormationHrm)
        );
        assert_eq!(
            "human_resources_management".parse::<RecommendationCategory>().unwrap(),
            RecommendationCategory::Institutional(InstitutionalCategory::HumanResourcesManagement)
        );
    }

    #[test]
    fn rounding_half_away_from_zero() {
        assert_eq!(format2(7.125), "7.13");
        assert_eq!(format2(110.0 / 15.0), "7.33");
        assert_eq!(round2(-0.125), -0.13);
    }

    #[test]
    fn policy_parsing() {
        assert_eq!("linear".parse::<WeightingPolicy>().unwrap(), WeightingPolicy::Linear);
        assert_eq!("threshold:6".parse::<WeightingPolicy>().unwrap(), WeightingPolicy::Threshold { min: 6 });
        assert!("cubic".parse::<WeightingPolicy>().is_err());
    }
}
