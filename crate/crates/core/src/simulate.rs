//! Seeded synthetic evaluations: teams with a latent quality, experts whose
//! rating noise depends on their expertise, optional rater bias.
//!
//! Ratings are `clamp(round(q + offset + bias + e), 1, 10)` with `e` drawn
//! from a zero-mean normal whose standard deviation is set by the noise
//! model. All data is synthetic.

use std::collections::{BTreeMap, BTreeSet};

use chrono::{DateTime, Duration, NaiveDate, Utc};
use rand::distr::weighted::WeightedIndex;
use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Poisson};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::analytics::pearson;
use crate::dossier::{DeltaContent, DraftDelta, Slot};
use crate::model::{
    ActivityPayload, ActivityRecord, BibliometricRecord, CitedPublication, ConfidentialText, Discipline, DisciplineId,
    DominantCharacter, EvaluationForm, Expert, ExpertId, ExpertStatus, Indicator, Member, MemberRole, RecordId, Score,
    Suggester, Team, TeamId, YearWindow, DEFAULT_PUBLICATION_CATEGORIES,
};
use crate::panel::{ConflictLink, LinkKind, LinkTarget, PanelAssignment, Ruling};
use crate::report::{GlobalTexts, TeamSection};
use crate::scoring::{average_ranks_desc, weighted_mean, TaggedComment, WeightingPolicy};
use crate::store::{ProjectSettings, ProjectStore, StoreError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("ConfigError: {0}")]
    ConfigError(String),
}

/// Latent team quality: normal, clamped to the 1..10 scale.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QualityModel {
    pub mean: f64,
    pub sd: f64,
}

/// Distribution of the expertise an expert reports for a team.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpertiseModel {
    /// Relative weight of each expertise level 1..=10.
    pub weights: BTreeMap<u8, f64>,
}

impl ExpertiseModel {
    pub fn uniform(lo: u8, hi: u8) -> Self {
        Self { weights: (lo..=hi).map(|e| (e, 1.0)).collect() }
    }
}

/// Rating noise by expertise: `sigma_at_low` up to `low_expertise`,
/// `sigma_at_high` from `high_expertise` on, linear in between.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    pub low_expertise: u8,
    pub sigma_at_low: f64,
    pub high_expertise: u8,
    pub sigma_at_high: f64,
}

impl NoiseModel {
    pub fn constant(sigma: f64) -> Self {
        Self { low_expertise: 1, sigma_at_low: sigma, high_expertise: 10, sigma_at_high: sigma }
    }

    pub fn sigma(&self, expertise: u8) -> f64 {
        let (lo, hi) = (self.low_expertise as f64, self.high_expertise as f64);
        let e = expertise as f64;
        if e <= lo || hi <= lo {
            self.sigma_at_low
        } else if e >= hi {
            self.sigma_at_high
        } else {
            self.sigma_at_low + (self.sigma_at_high - self.sigma_at_low) * (e - lo) / (hi - lo)
        }
    }
}

/// Each expert is biased with probability `prevalence`; a biased expert adds
/// `offset` to every rating.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BiasModel {
    pub prevalence: f64,
    pub offset: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum Coverage {
    /// Every panel member rates every team of the discipline.
    Full,
    /// Each team is rated by `forms_per_team` distinct panel members.
    Partial { forms_per_team: usize },
}

/// Citation data whose crown indicator follows latent quality.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BibliometricModel {
    pub min_publications: usize,
    pub max_publications: usize,
    /// Correlation between standardized quality and log impact.
    pub correlation: f64,
    /// Standard deviation of log impact across teams.
    pub spread: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub n_disciplines: usize,
    pub n_teams: usize,
    pub n_experts: usize,
    pub quality: QualityModel,
    pub expertise: ExpertiseModel,
    pub noise: NoiseModel,
    /// Standard deviation of team-specific deviations per indicator.
    #[serde(default)]
    pub indicator_spread: f64,
    /// Fixed shift per indicator, applied to every rating.
    #[serde(default)]
    pub indicator_offsets: BTreeMap<Indicator, f64>,
    /// Chance that an expert leaves a rated indicator blank. Overall is never skipped.
    #[serde(default)]
    pub skip_probability: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bias: Option<BiasModel>,
    pub coverage: Coverage,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bibliometrics: Option<BibliometricModel>,
    pub first_year: i32,
    pub last_year: i32,
    pub seed: u64,
}

impl SimConfig {
    /// The documented calibration config: 11 disciplines, 93 teams, 101
    /// experts, six forms per team. Ratings peak at 8 on every numeric
    /// indicator except research approach, which peaks one lower.
    pub fn calibrated(seed: u64) -> Self {
        let mut offsets = BTreeMap::new();
        offsets.insert(Indicator::ResearchApproach, -1.0);
        Self {
            n_disciplines: 11,
            n_teams: 93,
            n_experts: 101,
            quality: QualityModel { mean: 8.0, sd: 0.6 },
            expertise: ExpertiseModel {
                weights: [(5, 0.05), (6, 0.10), (7, 0.20), (8, 0.35), (9, 0.20), (10, 0.10)].into_iter().collect(),
            },
            noise: NoiseModel { low_expertise: 5, sigma_at_low: 1.0, high_expertise: 10, sigma_at_high: 0.5 },
            indicator_spread: 0.3,
            indicator_offsets: offsets,
            skip_probability: 0.02,
            bias: Some(BiasModel { prevalence: 0.05, offset: 1.0 }),
            coverage: Coverage::Partial { forms_per_team: 6 },
            bibliometrics: Some(BibliometricModel {
                min_publications: 10,
                max_publications: 40,
                correlation: 0.6,
                spread: 0.5,
            }),
            first_year: 1995,
            last_year: 2008,
            seed,
        }
    }

    /// Ten teams, ten experts, full coverage, expertise 7..10. With
    /// `decreasing` the noise falls from 2.5 at expertise 7 to 0.5 at 10,
    /// otherwise it is 1.5 throughout.
    pub fn reliability(decreasing: bool, seed: u64) -> Self {
        Self {
            n_disciplines: 1,
            n_teams: 10,
            n_experts: 10,
            quality: QualityModel { mean: 5.5, sd: 1.5 },
            expertise: ExpertiseModel::uniform(7, 10),
            noise: if decreasing {
                NoiseModel { low_expertise: 7, sigma_at_low: 2.5, high_expertise: 10, sigma_at_high: 0.5 }
            } else {
                NoiseModel::constant(1.5)
            },
            indicator_spread: 0.0,
            indicator_offsets: BTreeMap::new(),
            skip_probability: 0.0,
            bias: None,
            coverage: Coverage::Full,
            bibliometrics: None,
            first_year: 2000,
            last_year: 2008,
            seed,
        }
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let err = |m: String| Err(SimError::ConfigError(m));
        if self.n_disciplines == 0 {
            return err("n_disciplines must be at least 1".into());
        }
        if self.n_teams < self.n_disciplines {
            return err(format!("{} teams cannot fill {} disciplines", self.n_teams, self.n_disciplines));
        }
        if self.n_experts < 2 * self.n_disciplines {
            return err(format!("{} experts cannot staff {} panels of at least 2", self.n_experts, self.n_disciplines));
        }
        if !(self.quality.mean.is_finite() && (1.0..=10.0).contains(&self.quality.mean)) {
            return err("quality mean must lie in [1,10]".into());
        }
        if !(self.quality.sd.is_finite() && self.quality.sd >= 0.0) {
            return err("quality sd must be >= 0".into());
        }
        if self.expertise.weights.is_empty()
            || self.expertise.weights.iter().any(|(e, w)| !(1..=10).contains(e) || !(w.is_finite() && *w >= 0.0))
            || self.expertise.weights.values().sum::<f64>() <= 0.0
        {
            return err("expertise weights need levels in 1..=10 and a positive total".into());
        }
        let n = &self.noise;
        if !(n.sigma_at_low.is_finite() && n.sigma_at_high.is_finite() && n.sigma_at_high >= 0.0) {
            return err("noise sigmas must be finite and >= 0".into());
        }
        if n.sigma_at_high > n.sigma_at_low {
            return err("noise must not increase with expertise".into());
        }
        if n.low_expertise > n.high_expertise {
            return err("noise low_expertise exceeds high_expertise".into());
        }
        if !(self.indicator_spread.is_finite() && self.indicator_spread >= 0.0) {
            return err("indicator_spread must be >= 0".into());
        }
        if self.indicator_offsets.values().any(|o| !o.is_finite()) {
            return err("indicator offsets must be finite".into());
        }
        if self.indicator_offsets.keys().any(|i| !i.is_numeric()) {
            return err("indicator offsets apply to numeric indicators only".into());
        }
        if !(0.0..1.0).contains(&self.skip_probability) {
            return err("skip_probability must lie in [0,1)".into());
        }
        if let Some(b) = &self.bias {
            if !(0.0..=1.0).contains(&b.prevalence) || !b.offset.is_finite() {
                return err("bias prevalence must lie in [0,1] and offset be finite".into());
            }
        }
        if let Coverage::Partial { forms_per_team } = self.coverage {
            let smallest_panel = self.n_experts / self.n_disciplines;
            if forms_per_team == 0 || forms_per_team > smallest_panel {
                return err(format!("forms_per_team must lie in 1..={smallest_panel}"));
            }
        }
        if let Some(b) = &self.bibliometrics {
            if b.min_publications == 0 || b.min_publications > b.max_publications {
                return err("bibliometrics need 1 <= min_publications <= max_publications".into());
            }
            if !(-1.0..=1.0).contains(&b.correlation) || !(b.spread.is_finite() && b.spread >= 0.0) {
                return err("bibliometric correlation must lie in [-1,1], spread >= 0".into());
            }
        }
        if self.last_year - self.first_year + 1 < crate::dossier::DEFAULT_WINDOW_YEARS as i32 {
            return err("year range shorter than the evaluation window".into());
        }
        Ok(())
    }

    fn expertise_dist(&self) -> (Vec<u8>, WeightedIndex<f64>) {
        let levels: Vec<u8> = self.expertise.weights.keys().copied().collect();
        let w = WeightedIndex::new(self.expertise.weights.values().copied()).expect("validated weights");
        (levels, w)
    }
}

/// Deterministic sub-seed for a labelled stream.
pub fn sub_seed(seed: u64, label: &str, index: u64) -> u64 {
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    h.update(label.as_bytes());
    h.update(index.to_le_bytes());
    u64::from_le_bytes(h.finalize()[..8].try_into().unwrap())
}

fn clamp_round(x: f64) -> i64 {
    (x.round() as i64).clamp(Score::MIN as i64, Score::MAX as i64)
}

fn normal(mean: f64, sd: f64) -> Normal<f64> {
    Normal::new(mean, sd).expect("finite, non-negative sd")
}

fn draw_quality(q: &QualityModel, rng: &mut ChaCha8Rng) -> f64 {
    normal(q.mean, q.sd).sample(rng).clamp(1.0, 10.0)
}

fn rating(latent: f64, bias: f64, expertise: u8, noise: &NoiseModel, rng: &mut ChaCha8Rng) -> i64 {
    let e = normal(0.0, noise.sigma(expertise)).sample(rng);
    clamp_round(latent + bias + e)
}

const DISCIPLINE_NAMES: [&str; 16] = [
    "Physics",
    "Chemistry",
    "Mathematics",
    "Computer Science",
    "Biology",
    "Medicine",
    "Pharmacy",
    "Engineering",
    "Economics",
    "Law",
    "Psychology",
    "Sociology",
    "History",
    "Linguistics",
    "Philosophy",
    "Earth Sciences",
];

const FIRST_NAMES: [&str; 24] = [
    "Agnes", "Bruno", "Clara", "Dmitri", "Elif", "Folke", "Greta", "Hugo", "Ilse", "Jonas", "Katja", "Lorenzo",
    "Maren", "Nils", "Odile", "Pavel", "Quirin", "Rosa", "Sven", "Tilde", "Ulrich", "Vera", "Wim", "Xenia",
];

const LAST_NAMES: [&str; 24] = [
    "Albrecht",
    "Brandt",
    "Castell",
    "Duval",
    "Eriksen",
    "Ferrante",
    "Gruber",
    "Halvorsen",
    "Ibsen",
    "Jansen",
    "Kowalski",
    "Lindqvist",
    "Moreau",
    "Nyberg",
    "Olsen",
    "Petrov",
    "Quist",
    "Rasmussen",
    "Sandoval",
    "Thorsen",
    "Urbani",
    "Vasquez",
    "Weber",
    "Zeller",
];

const COUNTRIES: [(&str, &str); 12] = [
    ("NL", "Leiden"),
    ("DE", "Heidelberg"),
    ("FR", "Lyon"),
    ("GB", "Edinburgh"),
    ("US", "Madison"),
    ("CH", "Basel"),
    ("SE", "Uppsala"),
    ("IT", "Bologna"),
    ("ES", "Salamanca"),
    ("DK", "Aarhus"),
    ("CA", "Montreal"),
    ("AT", "Graz"),
];

/// A generated project with its hidden truth.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticProject {
    pub settings: ProjectSettings,
    pub disciplines: Vec<Discipline>,
    pub teams: Vec<Team>,
    pub experts: Vec<Expert>,
    pub activities: BTreeMap<TeamId, Vec<ActivityRecord>>,
    pub forms: Vec<EvaluationForm>,
    pub bibliometrics: Vec<BibliometricRecord>,
    pub conflicts: BTreeMap<ExpertId, Vec<ConflictLink>>,
    pub deltas: BTreeMap<TeamId, Vec<DraftDelta>>,
    pub panels: Vec<PanelAssignment>,
    pub general_comments: BTreeMap<DisciplineId, Vec<TaggedComment>>,
    pub team_comments: BTreeMap<TeamId, BTreeMap<TeamSection, String>>,
    pub texts: BTreeMap<DisciplineId, GlobalTexts>,
    /// Latent quality per team.
    pub truth: BTreeMap<TeamId, f64>,
}

impl SyntheticProject {
    pub fn save(&self, store: &ProjectStore) -> Result<(), StoreError> {
        store.save_settings(&self.settings)?;
        for d in &self.disciplines {
            store.save_discipline(d)?;
        }
        for t in &self.teams {
            store.save_team(t)?;
        }
        for e in &self.experts {
            store.save_expert(e)?;
        }
        for (t, a) in &self.activities {
            store.save_activities(t, a)?;
        }
        for f in &self.forms {
            store.save_form(f)?;
        }
        for b in &self.bibliometrics {
            store.save_bibliometrics(b)?;
        }
        for (e, l) in &self.conflicts {
            store.save_conflicts(e, l)?;
        }
        for (t, d) in &self.deltas {
            store.save_deltas(t, d)?;
        }
        for p in &self.panels {
            store.save_panel(p)?;
        }
        for (d, c) in &self.general_comments {
            store.save_general_comments(d, c)?;
        }
        for (t, c) in &self.team_comments {
            store.save_team_comments(t, c)?;
        }
        for (d, t) in &self.texts {
            store.save_texts(d, t)?;
        }
        Ok(())
    }
}

fn split_evenly(total: usize, parts: usize) -> Vec<usize> {
    (0..parts).map(|i| total / parts + usize::from(i < total % parts)).collect()
}

/// Generates a complete synthetic project. Equal configs give equal output.
pub fn generate(config: &SimConfig) -> Result<SyntheticProject, SimError> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(sub_seed(config.seed, "generate", 0));
    let window = YearWindow::ending_at(config.last_year, crate::dossier::DEFAULT_WINDOW_YEARS);
    let (levels, level_dist) = config.expertise_dist();

    let settings = ProjectSettings {
        institution: "Home University".into(),
        home_country: "BE".into(),
        coordinator: "Research Coordination Office".into(),
        first_year: config.first_year,
        last_year: config.last_year,
        seed: config.seed,
        ..ProjectSettings::default()
    };

    let mut names: Vec<String> =
        FIRST_NAMES.iter().flat_map(|f| LAST_NAMES.iter().map(move |l| format!("{f} {l}"))).collect();
    names.shuffle(&mut rng);
    if config.n_experts > names.len() {
        for i in names.len()..config.n_experts {
            names.push(format!("{} {}-{}", FIRST_NAMES[i % 24], LAST_NAMES[(i / 24) % 24], i));
        }
    }

    let mut project = SyntheticProject {
        settings,
        disciplines: Vec::new(),
        teams: Vec::new(),
        experts: Vec::new(),
        activities: BTreeMap::new(),
        forms: Vec::new(),
        bibliometrics: Vec::new(),
        conflicts: BTreeMap::new(),
        deltas: BTreeMap::new(),
        panels: Vec::new(),
        general_comments: BTreeMap::new(),
        team_comments: BTreeMap::new(),
        texts: BTreeMap::new(),
        truth: BTreeMap::new(),
    };

    let team_counts = split_evenly(config.n_teams, config.n_disciplines);
    let expert_counts = split_evenly(config.n_experts, config.n_disciplines);
    let mut team_no = 0;
    let mut expert_no = 0;
    let mut record_no = 0;
    let base_time = NaiveDate::from_ymd_opt(config.last_year + 1, 3, 1)
        .and_then(|d| d.and_hms_opt(9, 0, 0))
        .map(|d| d.and_utc())
        .unwrap_or(DateTime::<Utc>::UNIX_EPOCH);

    for (di, (&nt, &ne)) in team_counts.iter().zip(&expert_counts).enumerate() {
        let name = DISCIPLINE_NAMES.get(di).map(|s| s.to_string()).unwrap_or_else(|| format!("Discipline {}", di + 1));
        let disc = Discipline::new(format!("disc-{:02}", di + 1), name);
        let fields: Vec<String> = (0..3).map(|k| format!("{}-f{}", disc.id, k + 1)).collect();
        let baselines: BTreeMap<String, f64> =
            fields.iter().map(|f| (f.clone(), rng.random_range(2.0..12.0))).collect();

        let mut panel_ids = Vec::new();
        for k in 0..ne {
            expert_no += 1;
            let (country, city) = COUNTRIES[(expert_no - 1) % COUNTRIES.len()];
            let e = Expert {
                id: ExpertId::new(format!("expert-{expert_no:03}")),
                name: names[expert_no - 1].clone(),
                affiliation: format!("University of {city}"),
                country: country.into(),
                domains: vec![fields[k % 3].clone(), fields[(k + 1) % 3].clone()],
                suggested_by: Suggester::Coordinator,
                status: ExpertStatus::Confirmed,
            };
            panel_ids.push(e.id.clone());
            project.experts.push(e);
        }
        let bias: BTreeMap<ExpertId, f64> = panel_ids
            .iter()
            .map(|id| {
                let b = match &config.bias {
                    Some(b) if rng.random_bool(b.prevalence) => b.offset,
                    _ => 0.0,
                };
                (id.clone(), b)
            })
            .collect();

        let mut team_ids = Vec::new();
        let mut leads = BTreeMap::new();
        for _ in 0..nt {
            team_no += 1;
            let tid = TeamId::new(format!("team-{team_no:03}"));
            let q = draw_quality(&config.quality, &mut rng);
            project.truth.insert(tid.clone(), q);
            let character = *DominantCharacter::ALL.choose(&mut rng).unwrap();
            let team_fields = vec![fields[rng.random_range(0..3)].clone()];
            let members: Vec<Member> = (0..rng.random_range(3..8))
                .map(|m| Member {
                    person: format!("Member {team_no:03}-{}", m + 1),
                    role: [MemberRole::Postdoc, MemberRole::Phd, MemberRole::Phd, MemberRole::Other][m % 4],
                    fte: [1.0, 0.5, 0.8, 0.2][rng.random_range(0..4)],
                })
                .collect();
            let team = Team {
                id: tid.clone(),
                discipline_id: disc.id.clone(),
                name: format!("Research team {team_no:03}"),
                leader: format!("Leader {team_no:03}"),
                members: members.clone(),
                fields: team_fields.clone(),
            };

            // activities inside the evaluation window
            let mut records = Vec::new();
            let mut push = |year: i32, payload: ActivityPayload, records: &mut Vec<ActivityRecord>| {
                record_no += 1;
                records.push(ActivityRecord {
                    id: RecordId::new(format!("rec-{record_no:06}")),
                    team_id: tid.clone(),
                    year,
                    payload,
                });
            };
            let year = |rng: &mut ChaCha8Rng| rng.random_range(window.start..=window.end);
            for p in 0..rng.random_range(6..14) {
                let y = year(&mut rng);
                let category = DEFAULT_PUBLICATION_CATEGORIES[rng.random_range(0..4)].to_owned();
                push(
                    y,
                    ActivityPayload::Publication {
                        title: format!("Study {} of team {team_no:03}", p + 1),
                        venue: format!("Journal of {}", disc.name),
                        category,
                        field: team_fields[0].clone(),
                        citation_count: Some(rng.random_range(0..40)),
                        coauthors: vec![],
                    },
                    &mut records,
                );
            }
            for p in 0..2 {
                let y = year(&mut rng);
                let amount = (rng.random_range(50.0..500.0f64) * 1000.0).round();
                push(
                    y,
                    ActivityPayload::Project {
                        title: format!("Project {} of team {team_no:03}", p + 1),
                        funder: "Research Foundation".into(),
                        amount,
                        partners: vec![],
                    },
                    &mut records,
                );
            }
            let y = year(&mut rng);
            push(y, ActivityPayload::OtherAccomplishment { description: "Organised a workshop".into() }, &mut records);
            for m in &members {
                push(
                    window.end,
                    ActivityPayload::Personnel { person: m.person.clone(), role: m.role, fte: m.fte },
                    &mut records,
                );
            }
            let y = year(&mut rng);
            let hours = rng.random_range(30..180) as f64;
            push(
                y,
                ActivityPayload::TeachingLoad { course: format!("Course {team_no:03}"), hours_per_year: hours },
                &mut records,
            );
            let y = year(&mut rng);
            let amount = (rng.random_range(20.0..300.0f64) * 1000.0).round();
            push(y, ActivityPayload::FundingSource { funder: "University research fund".into(), amount }, &mut records);
            let y = year(&mut rng);
            push(
                y,
                ActivityPayload::ExternalActivity { description: "Editorial board membership".into() },
                &mut records,
            );
            let y = year(&mut rng);
            push(
                y,
                ActivityPayload::Collaboration {
                    partner: format!("Partner institute {}", rng.random_range(1..50)),
                    description: "Joint doctoral supervision".into(),
                },
                &mut records,
            );
            let y = year(&mut rng);
            push(y, ActivityPayload::ValorizableResult { description: "Licensed software tool".into() }, &mut records);

            // team contributions making the file complete
            let pubs: Vec<ActivityRecord> = records
                .iter()
                .filter(|r| matches!(r.payload, ActivityPayload::Publication { .. }))
                .take(crate::dossier::MAX_CORE_PUBLICATIONS)
                .cloned()
                .collect();
            let mut deltas = Vec::new();
            for slot in Slot::ALL.into_iter().filter(|s| s.is_descriptive() && !s.is_overview()) {
                deltas.push(DraftDelta {
                    team_id: tid.clone(),
                    slot: slot.code().to_owned(),
                    content: DeltaContent::Text { text: format!("{} of research team {team_no:03}.", slot.title()) },
                    author: tid.clone(),
                });
            }
            deltas.push(DraftDelta {
                team_id: tid.clone(),
                slot: Slot::ACorePublications.code().to_owned(),
                content: DeltaContent::AppendRecords { records: pubs },
                author: tid.clone(),
            });

            // bibliometrics
            if let Some(bm) = &config.bibliometrics {
                let z = if config.quality.sd > 0.0 { (q - config.quality.mean) / config.quality.sd } else { 0.0 };
                let eta: f64 = normal(0.0, 1.0).sample(&mut rng);
                let log_impact = bm.spread * (bm.correlation * z + (1.0 - bm.correlation.powi(2)).sqrt() * eta);
                let impact = log_impact.exp();
                let n = rng.random_range(bm.min_publications..=bm.max_publications);
                let publications = (0..n)
                    .map(|_| {
                        let field = fields[rng.random_range(0..3)].clone();
                        let lambda = baselines[&field] * impact;
                        let c = Poisson::new(lambda).map(|p| p.sample(&mut rng)).unwrap_or(0.0);
                        CitedPublication { field, citation_count: c as u32 }
                    })
                    .collect();
                project.bibliometrics.push(BibliometricRecord {
                    team_id: tid.clone(),
                    publications,
                    field_baselines: baselines.clone(),
                });
            }

            let comments: BTreeMap<TeamSection, String> = TeamSection::ALL
                .iter()
                .map(|s| (*s, format!("Panel view on {} for research team {team_no:03}.", s.heading().to_lowercase())))
                .collect();

            project.team_comments.insert(tid.clone(), comments);
            project.deltas.insert(tid.clone(), deltas);
            project.activities.insert(tid.clone(), records);
            project.teams.push(team);
            team_ids.push((tid, q, character));
        }

        // ratings
        let offsets: BTreeMap<Indicator, f64> = Indicator::NUMERIC
            .iter()
            .filter(|i| **i != Indicator::ReviewerExpertise)
            .map(|i| (*i, config.indicator_offsets.get(i).copied().unwrap_or(0.0)))
            .collect();
        for (tid, q, character) in &team_ids {
            let deviations: BTreeMap<Indicator, f64> = offsets
                .iter()
                .map(|(i, o)| {
                    let d = if *i == Indicator::Overall {
                        0.0
                    } else {
                        normal(0.0, config.indicator_spread).sample(&mut rng)
                    };
                    (*i, o + d)
                })
                .collect();
            let raters: Vec<ExpertId> = match config.coverage {
                Coverage::Full => panel_ids.clone(),
                Coverage::Partial { forms_per_team } => {
                    let mut r: Vec<ExpertId> = panel_ids.choose_multiple(&mut rng, forms_per_team).cloned().collect();
                    r.sort();
                    r
                }
            };
            let mut best: Option<(u8, ExpertId)> = None;
            for x in &raters {
                let expertise = levels[level_dist.sample(&mut rng)];
                let mut scores = BTreeMap::new();
                scores.insert(Indicator::ReviewerExpertise, expertise as i64);
                for (ind, dev) in &deviations {
                    let s = rating(q + dev, bias[x], expertise, &config.noise, &mut rng);
                    let skipped = *ind != Indicator::Overall && rng.random_bool(config.skip_probability);
                    if !skipped {
                        scores.insert(*ind, s);
                    }
                }
                let dominant =
                    if rng.random_bool(0.8) { *character } else { *DominantCharacter::ALL.choose(&mut rng).unwrap() };
                let form_no = project.forms.len() + 1;
                let mut comments = BTreeMap::new();
                comments.insert(
                    "general".to_owned(),
                    ConfidentialText::new(format!("Confidential remark #{form_no:05} on {tid}.")),
                );
                project.forms.push(EvaluationForm {
                    expert_id: x.clone(),
                    team_id: tid.clone(),
                    scores,
                    dominant_character: Some(dominant.key().to_owned()),
                    comments,
                    returned_at: base_time + Duration::minutes(rng.random_range(0..60 * 24 * 30)),
                });
                if best.as_ref().is_none_or(|(e, _)| expertise > *e) {
                    best = Some((expertise, x.clone()));
                }
            }
            if let Some((_, lead)) = best {
                leads.insert(tid.clone(), lead);
            }
        }

        // one cleared co-authorship link per discipline, as a coordinator ruling
        if let (Some(first_expert), Some((first_team, _, _))) = (panel_ids.first(), team_ids.first()) {
            project.conflicts.insert(
                first_expert.clone(),
                vec![ConflictLink {
                    expert_id: first_expert.clone(),
                    target: LinkTarget::Team(first_team.clone()),
                    kind: LinkKind::Copublication,
                    evidence: "joint paper outside the research line of the team".into(),
                    window: YearWindow::new(window.start, window.start),
                    ruling: Ruling::Cleared,
                }],
            );
        }

        let categories = [
            "research planning & strategy",
            "PhD students",
            "international collaborations & networking",
            "research policy",
            "human resources management",
        ];
        project.general_comments.insert(
            disc.id.clone(),
            categories
                .iter()
                .enumerate()
                .map(|(k, c)| TaggedComment {
                    category: (*c).to_owned(),
                    text: format!("General recommendation {} for {}.", k + 1, disc.name),
                })
                .collect(),
        );
        project.texts.insert(
            disc.id.clone(),
            GlobalTexts {
                context: format!("Synthetic evaluation of the discipline {}.", disc.name),
                procedure: "Teams compiled evaluation files; an international panel rated every team on the form."
                    .into(),
                conclusions: "The panel judged the discipline to be in good health overall.".into(),
                further_remarks: "None.".into(),
                concluding_observations: "The coordinator thanks the panel and the teams.".into(),
                cvs: "Available on request from the coordinator.".into(),
                contacts: "Team contact details are kept by the research department.".into(),
            },
        );
        project.panels.push(PanelAssignment {
            discipline_id: disc.id.clone(),
            members: panel_ids,
            lead_experts: leads,
            per_team: BTreeMap::new(),
        });
        project.disciplines.push(disc);
    }
    Ok(project)
}

/// Monte Carlo summary of one weighting policy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyResult {
    pub policy: String,
    pub mse: f64,
    pub mse_se: f64,
    pub rank_corr: f64,
    pub rank_corr_se: f64,
}

/// A policy against the unweighted mean.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Contrast {
    pub policy: String,
    /// MSE(policy) - MSE(unweighted).
    pub delta_mse: f64,
    /// Standard error of the difference from the two per-policy standard errors.
    pub se: f64,
    /// Standard error of the per-replicate differences.
    pub paired_se: f64,
}

impl Contrast {
    /// |delta| exceeds `k` standard errors.
    pub fn distinguishable(&self, k: f64) -> bool {
        self.delta_mse.abs() > k * self.se
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyComparison {
    pub n_replicates: usize,
    pub n_teams: usize,
    pub n_experts: usize,
    pub results: Vec<PolicyResult>,
    pub contrasts: Vec<Contrast>,
}

impl PolicyComparison {
    pub fn result(&self, policy: WeightingPolicy) -> Option<&PolicyResult> {
        self.results.iter().find(|r| r.policy == policy.name())
    }

    pub fn contrast(&self, policy: WeightingPolicy) -> Option<&Contrast> {
        self.contrasts.iter().find(|c| c.policy == policy.name())
    }

    pub fn to_csv(&self) -> Result<String, csv::Error> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["policy", "mse", "mse_se", "rank_corr", "rank_corr_se", "delta_mse", "delta_se", "paired_se"])?;
        for r in &self.results {
            let c = self.contrasts.iter().find(|c| c.policy == r.policy);
            let f = |x: Option<f64>| x.map(|v| format!("{v:.6}")).unwrap_or_default();
            w.write_record([
                r.policy.clone(),
                format!("{:.6}", r.mse),
                format!("{:.6}", r.mse_se),
                format!("{:.6}", r.rank_corr),
                format!("{:.6}", r.rank_corr_se),
                f(c.map(|c| c.delta_mse)),
                f(c.map(|c| c.se)),
                f(c.map(|c| c.paired_se)),
            ])?;
        }
        let bytes = w.into_inner().map_err(|e| e.into_error())?;
        Ok(String::from_utf8(bytes).expect("utf-8"))
    }
}

pub const MIN_REPLICATES: usize = 100;

pub const DEFAULT_POLICIES: [WeightingPolicy; 3] =
    [WeightingPolicy::Unweighted, WeightingPolicy::Linear, WeightingPolicy::Squared];

/// One panel: latent qualities and (team, expertise, rating) triples of the
/// overall indicator, with a rater index.
struct Replicate {
    quality: Vec<f64>,
    /// ratings[t] = [(expert, expertise, rating)]
    ratings: Vec<Vec<(usize, u8, i64)>>,
}

fn simulate_panel(config: &SimConfig, rng: &mut ChaCha8Rng, bias: &[f64]) -> Replicate {
    let (levels, dist) = config.expertise_dist();
    let offset = config.indicator_offsets.get(&Indicator::Overall).copied().unwrap_or(0.0);
    let quality: Vec<f64> = (0..config.n_teams).map(|_| draw_quality(&config.quality, rng)).collect();
    let experts: Vec<usize> = (0..config.n_experts).collect();
    let ratings = quality
        .iter()
        .map(|q| {
            let raters: Vec<usize> = match config.coverage {
                Coverage::Full => experts.clone(),
                Coverage::Partial { forms_per_team } => {
                    let mut r: Vec<usize> = experts.choose_multiple(rng, forms_per_team).copied().collect();
                    r.sort();
                    r
                }
            };
            raters
                .into_iter()
                .map(|x| {
                    let e = levels[dist.sample(rng)];
                    (x, e, rating(q + offset, bias[x], e, &config.noise, rng))
                })
                .collect()
        })
        .collect();
    Replicate { quality, ratings }
}

fn estimate(ratings: &[(usize, u8, i64)], policy: WeightingPolicy) -> f64 {
    let s: Vec<f64> = ratings.iter().map(|r| r.2 as f64).collect();
    let w: Vec<f64> = ratings.iter().map(|r| policy.weight(Score::new(r.1 as i64).expect("on scale"))).collect();
    // a threshold policy can exclude every rater; fall back to equal weights
    weighted_mean(&s, &w).or_else(|| weighted_mean(&s, &vec![1.0; s.len()])).unwrap_or(f64::NAN)
}

fn rank_correlation(est: &[f64], truth: &[f64]) -> f64 {
    pearson(&average_ranks_desc(est), &average_ranks_desc(truth)).unwrap_or(0.0)
}

fn mean_se(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
    (m, (var / n).sqrt())
}

fn replicate_bias(config: &SimConfig, rng: &mut ChaCha8Rng) -> Vec<f64> {
    (0..config.n_experts)
        .map(|_| match &config.bias {
            Some(b) if rng.random_bool(b.prevalence) => b.offset,
            _ => 0.0,
        })
        .collect()
}

/// Compares weighting policies on recovering latent quality from the overall
/// ratings of a single panel.
pub fn reliability_experiment(config: &SimConfig, n_replicates: usize) -> Result<PolicyComparison, SimError> {
    reliability_experiment_with(config, n_replicates, &DEFAULT_POLICIES)
}

pub fn reliability_experiment_with(
    config: &SimConfig,
    n_replicates: usize,
    policies: &[WeightingPolicy],
) -> Result<PolicyComparison, SimError> {
    config.validate()?;
    if n_replicates < MIN_REPLICATES {
        return Err(SimError::ConfigError(format!("need at least {MIN_REPLICATES} replicates")));
    }
    if config.n_teams < 3 {
        return Err(SimError::ConfigError("need at least 3 teams for rank correlations".into()));
    }
    let mut policies: Vec<WeightingPolicy> = policies.to_vec();
    if !policies.contains(&WeightingPolicy::Unweighted) {
        policies.insert(0, WeightingPolicy::Unweighted);
    }
    // per replicate and policy: (mse, rank correlation)
    let per_rep: Vec<Vec<(f64, f64)>> = (0..n_replicates)
        .into_par_iter()
        .map(|r| {
            let mut rng = ChaCha8Rng::seed_from_u64(sub_seed(config.seed, "reliability", r as u64));
            let bias = replicate_bias(config, &mut rng);
            let rep = simulate_panel(config, &mut rng, &bias);
            policies
                .iter()
                .map(|p| {
                    let est: Vec<f64> = rep.ratings.iter().map(|r| estimate(r, *p)).collect();
                    let mse =
                        est.iter().zip(&rep.quality).map(|(e, q)| (e - q).powi(2)).sum::<f64>() / est.len() as f64;
                    (mse, rank_correlation(&est, &rep.quality))
                })
                .collect()
        })
        .collect();

    let column = |k: usize, f: fn(&(f64, f64)) -> f64| -> Vec<f64> { per_rep.iter().map(|row| f(&row[k])).collect() };
    let results: Vec<PolicyResult> = policies
        .iter()
        .enumerate()
        .map(|(k, p)| {
            let (mse, mse_se) = mean_se(&column(k, |x| x.0));
            let (rank_corr, rank_corr_se) = mean_se(&column(k, |x| x.1));
            PolicyResult { policy: p.name(), mse, mse_se, rank_corr, rank_corr_se }
        })
        .collect();
    let base = policies.iter().position(|p| *p == WeightingPolicy::Unweighted).unwrap();
    let base_mse = column(base, |x| x.0);
    let contrasts = policies
        .iter()
        .enumerate()
        .filter(|(k, _)| *k != base)
        .map(|(k, p)| {
            let diffs: Vec<f64> = column(k, |x| x.0).iter().zip(&base_mse).map(|(a, b)| a - b).collect();
            let (delta_mse, paired_se) = mean_se(&diffs);
            let se = (results[k].mse_se.powi(2) + results[base].mse_se.powi(2)).sqrt();
            Contrast { policy: p.name(), delta_mse, se, paired_se }
        })
        .collect();
    Ok(PolicyComparison { n_replicates, n_teams: config.n_teams, n_experts: config.n_experts, results, contrasts })
}

/// Rank error with one biased expert: everyone rating every team versus a
/// single rater per team, the biased expert being the only rater of its
/// share of teams.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BiasComparison {
    pub n_replicates: usize,
    pub bias_offset: f64,
    /// Mean absolute rank displacement per team.
    pub full_rank_error: f64,
    pub full_se: f64,
    pub single_rank_error: f64,
    pub single_se: f64,
    /// single minus full.
    pub delta: f64,
    pub se: f64,
    pub paired_se: f64,
}

fn rank_error(est: &[f64], truth: &[f64]) -> f64 {
    let a = average_ranks_desc(est);
    let b = average_ranks_desc(truth);
    a.iter().zip(&b).map(|(x, y)| (x - y).abs()).sum::<f64>() / a.len() as f64
}

pub fn bias_experiment(config: &SimConfig, bias_offset: f64, n_replicates: usize) -> Result<BiasComparison, SimError> {
    let mut full = config.clone();
    full.coverage = Coverage::Full;
    full.bias = None;
    full.validate()?;
    if n_replicates < MIN_REPLICATES {
        return Err(SimError::ConfigError(format!("need at least {MIN_REPLICATES} replicates")));
    }
    if !bias_offset.is_finite() {
        return Err(SimError::ConfigError("bias offset must be finite".into()));
    }
    let mut bias = vec![0.0; full.n_experts];
    bias[0] = bias_offset;
    let pairs: Vec<(f64, f64)> = (0..n_replicates)
        .into_par_iter()
        .map(|r| {
            let mut rng = ChaCha8Rng::seed_from_u64(sub_seed(config.seed, "bias", r as u64));
            let rep = simulate_panel(&full, &mut rng, &bias);
            let all: Vec<f64> = rep.ratings.iter().map(|r| estimate(r, WeightingPolicy::Linear)).collect();
            let single: Vec<f64> =
                rep.ratings.iter().enumerate().map(|(t, r)| r[t % full.n_experts].2 as f64).collect();
            (rank_error(&all, &rep.quality), rank_error(&single, &rep.quality))
        })
        .collect();
    let f: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let s: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    let d: Vec<f64> = pairs.iter().map(|p| p.1 - p.0).collect();
    let (full_rank_error, full_se) = mean_se(&f);
    let (single_rank_error, single_se) = mean_se(&s);
    let (delta, paired_se) = mean_se(&d);
    Ok(BiasComparison {
        n_replicates,
        bias_offset,
        full_rank_error,
        full_se,
        single_rank_error,
        single_se,
        delta,
        se: (full_se.powi(2) + single_se.powi(2)).sqrt(),
        paired_se,
    })
}

/// Experts and teams whose ids appear in a project, for audits.
pub fn expert_names(project: &SyntheticProject) -> BTreeSet<String> {
    project.experts.iter().flat_map(|e| [e.name.clone(), e.id.to_string()]).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{validate_form, ValidatedForm};

    fn small(seed: u64) -> SimConfig {
        let mut c = SimConfig::reliability(true, seed);
        c.bibliometrics =
            Some(BibliometricModel { min_publications: 5, max_publications: 10, correlation: 0.5, spread: 0.4 });
        c
    }

    #[test]
    fn full_coverage_counts() {
        let p = generate(&small(1)).unwrap();
        assert_eq!(p.forms.len(), 100);
        assert_eq!(p.teams.len(), 10);
        assert_eq!(p.experts.len(), 10);
    }

    #[test]
    fn calibrated_scale() {
        let p = generate(&SimConfig::calibrated(1)).unwrap();
        assert_eq!(p.disciplines.len(), 11);
        assert_eq!(p.teams.len(), 93);
        assert_eq!(p.experts.len(), 101);
        assert_eq!(p.forms.len(), 558);
    }

    #[test]
    fn deterministic() {
        let a = serde_json::to_string(&generate(&small(7)).unwrap()).unwrap();
        let b = serde_json::to_string(&generate(&small(7)).unwrap()).unwrap();
        let c = serde_json::to_string(&generate(&small(8)).unwrap()).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn generated_forms_validate() {
        let p = generate(&SimConfig::calibrated(2)).unwrap();
        for f in &p.forms {
            assert!(validate_form(f).is_empty(), "{f:?}");
            assert!(ValidatedForm::try_from(f.clone()).is_ok());
        }
        for b in &p.bibliometrics {
            assert!(b.validate().is_empty());
        }
    }

    #[test]
    fn noise_model_is_non_increasing() {
        let n = NoiseModel { low_expertise: 7, sigma_at_low: 2.5, high_expertise: 10, sigma_at_high: 0.5 };
        let s: Vec<f64> = (1..=10).map(|e| n.sigma(e)).collect();
        assert!(s.windows(2).all(|w| w[1] <= w[0]));
        assert_eq!(n.sigma(7), 2.5);
        assert_eq!(n.sigma(10), 0.5);
        assert!((n.sigma(8) - (2.5 - 2.0 / 3.0)).abs() < 1e-12);
    }

    #[test]
    fn invalid_configs() {
        let mut c = small(1);
        c.noise = NoiseModel { low_expertise: 1, sigma_at_low: 0.5, high_expertise: 10, sigma_at_high: 1.0 };
        assert!(matches!(generate(&c), Err(SimError::ConfigError(_))));
        let mut c = small(1);
        c.coverage = Coverage::Partial { forms_per_team: 11 };
        assert!(generate(&c).is_err());
        assert!(reliability_experiment(&small(1), 10).is_err());
    }

    #[test]
    fn reliability_is_reproducible() {
        let c = SimConfig::reliability(true, 3);
        let a = reliability_experiment(&c, 120).unwrap();
        let b = reliability_experiment(&c, 120).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.results.len(), 3);
        assert_eq!(a.contrasts.len(), 2);
    }

    #[test]
    fn clamp_round_stays_on_scale() {
        assert_eq!(clamp_round(-3.2), 1);
        assert_eq!(clamp_round(12.0), 10);
        assert_eq!(clamp_round(7.5), 8);
    }
}
