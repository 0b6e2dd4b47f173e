//! Domain types shared by every module: disciplines, teams, experts, activity
//! records, evaluation forms and bibliometric records.

use std::collections::BTreeMap;
use std::fmt;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

macro_rules! id_type {
    ($(#[$meta:meta])* $name:ident) => {
        $(#[$meta])*
        #[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
        #[serde(transparent)]
        pub struct $name(pub String);

        impl $name {
            pub fn new(id: impl Into<String>) -> Self {
                Self(id.into())
            }

            pub fn as_str(&self) -> &str {
                &self.0
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(&self.0)
            }
        }

        impl From<&str> for $name {
            fn from(s: &str) -> Self {
                Self(s.to_owned())
            }
        }

        impl From<String> for $name {
            fn from(s: String) -> Self {
                Self(s)
            }
        }
    };
}

id_type!(
    /// Identifier of a discipline (the grouping of teams evaluated together).
    DisciplineId
);
id_type!(
    /// Identifier of a research team.
    TeamId
);
id_type!(
    /// Identifier of an external expert.
    ExpertId
);
id_type!(
    /// Identifier of a single activity record.
    RecordId
);

/// Inclusive range of calendar years.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct YearWindow {
    pub start: i32,
    pub end: i32,
}

impl YearWindow {
    pub fn new(start: i32, end: i32) -> Self {
        Self { start, end }
    }

    /// Window of `len` years ending at `end`.
    pub fn ending_at(end: i32, len: u32) -> Self {
        Self { start: end - len as i32 + 1, end }
    }

    pub fn contains(&self, year: i32) -> bool {
        self.start <= year && year <= self.end
    }

    pub fn len(&self) -> u32 {
        if self.end < self.start {
            0
        } else {
            (self.end - self.start + 1) as u32
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn overlaps(&self, other: &YearWindow) -> bool {
        self.start <= other.end && other.start <= self.end
    }

    /// Same end year, start moved `years` earlier.
    pub fn extended_back(&self, years: u32) -> Self {
        Self { start: self.start - years as i32, end: self.end }
    }
}

impl fmt::Display for YearWindow {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.start, self.end)
    }
}

impl std::str::FromStr for YearWindow {
    type Err = String;

    /// Parses `y0:y1` (also accepts `y0-y1`).
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (a, b) = s
            .split_once(':')
            .or_else(|| s.split_once('-'))
            .ok_or_else(|| format!("expected <start>:<end>, got {s:?}"))?;
        let start = a.trim().parse().map_err(|_| format!("bad start year {a:?}"))?;
        let end = b.trim().parse().map_err(|_| format!("bad end year {b:?}"))?;
        if end < start {
            return Err(format!("window end {end} precedes start {start}"));
        }
        Ok(Self { start, end })
    }
}

/// Publication categories used when a discipline configures none.
pub const DEFAULT_PUBLICATION_CATEGORIES: [&str; 5] =
    ["international-refereed", "national-refereed", "book/chapter", "proceedings", "other"];

fn default_language() -> String {
    "en".to_owned()
}

fn default_categories() -> Vec<String> {
    DEFAULT_PUBLICATION_CATEGORIES.iter().map(|s| s.to_string()).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Discipline {
    pub id: DisciplineId,
    pub name: String,
    #[serde(default = "default_language")]
    pub language_of_evaluation: String,
    #[serde(default)]
    pub requires_national_experts: bool,
    /// Mandatory whenever `requires_national_experts` is set.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub national_experts_rationale: Option<String>,
    #[serde(default = "default_categories")]
    pub publication_categories: Vec<String>,
    /// Each team gets its own set of experts instead of one shared panel.
    #[serde(default)]
    pub per_team_panels: bool,
}

impl Discipline {
    pub fn new(id: impl Into<String>, name: impl Into<String>) -> Self {
        Self {
            id: DisciplineId::new(id),
            name: name.into(),
            language_of_evaluation: default_language(),
            requires_national_experts: false,
            national_experts_rationale: None,
            publication_categories: default_categories(),
            per_team_panels: false,
        }
    }

    pub fn validate(&self) -> Vec<String> {
        let mut problems = Vec::new();
        if self.name.trim().is_empty() {
            problems.push(format!("discipline {}: empty name", self.id));
        }
        if self.requires_national_experts
            && self.national_experts_rationale.as_deref().is_none_or(|r| r.trim().is_empty())
        {
            problems.push(format!("discipline {}: requires_national_experts without a rationale", self.id));
        }
        problems
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MemberRole {
    Postdoc,
    Phd,
    Other,
}

impl fmt::Display for MemberRole {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MemberRole::Postdoc => "postdoc-level",
            MemberRole::Phd => "PhD",
            MemberRole::Other => "other",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Member {
    pub person: String,
    pub role: MemberRole,
    pub fte: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Team {
    pub id: TeamId,
    pub discipline_id: DisciplineId,
    pub name: String,
    pub leader: String,
    #[serde(default)]
    pub members: Vec<Member>,
    /// Field tags the panel must cover.
    #[serde(default)]
    pub fields: Vec<String>,
}

impl Team {
    pub fn validate(&self) -> Vec<String> {
        self.members
            .iter()
            .filter(|m| !(0.0..=1.0).contains(&m.fte))
            .map(|m| format!("team {}: member {} has FTE {} outside [0,1]", self.id, m.person, m.fte))
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExpertStatus {
    Suggested,
    Rejected,
    Invited,
    Confirmed,
}

impl ExpertStatus {
    /// Legal edges: suggested -> rejected, suggested -> invited, invited -> confirmed.
    pub fn can_transition_to(self, next: ExpertStatus) -> bool {
        use ExpertStatus::*;
        matches!((self, next), (Suggested, Rejected) | (Suggested, Invited) | (Invited, Confirmed))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Suggester {
    Team(TeamId),
    Coordinator,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Expert {
    pub id: ExpertId,
    pub name: String,
    pub affiliation: String,
    /// ISO 3166 alpha-2 code.
    pub country: String,
    #[serde(default)]
    pub domains: Vec<String>,
    pub suggested_by: Suggester,
    pub status: ExpertStatus,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActivityKind {
    Publication,
    Project,
    OtherAccomplishment,
    Personnel,
    TeachingLoad,
    FundingSource,
    ExternalActivity,
    Collaboration,
    ValorizableResult,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ActivityPayload {
    Publication {
        title: String,
        venue: String,
        category: String,
        field: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        citation_count: Option<u32>,
        #[serde(default, skip_serializing_if = "Vec::is_empty")]
        coauthors: Vec<String>,
    },
    Project {
        title: String,
        funder: String,
        amount: f64,
        #[serde(default, skip_serializing_if = "Vec::is_empty")]
        partners: Vec<String>,
    },
    OtherAccomplishment {
        description: String,
    },
    Personnel {
        person: String,
        role: MemberRole,
        fte: f64,
    },
    TeachingLoad {
        course: String,
        hours_per_year: f64,
    },
    FundingSource {
        funder: String,
        amount: f64,
    },
    ExternalActivity {
        description: String,
    },
    Collaboration {
        partner: String,
        description: String,
    },
    ValorizableResult {
        description: String,
    },
}

impl ActivityPayload {
    pub fn kind(&self) -> ActivityKind {
        match self {
            ActivityPayload::Publication { .. } => ActivityKind::Publication,
            ActivityPayload::Project { .. } => ActivityKind::Project,
            ActivityPayload::OtherAccomplishment { .. } => ActivityKind::OtherAccomplishment,
            ActivityPayload::Personnel { .. } => ActivityKind::Personnel,
            ActivityPayload::TeachingLoad { .. } => ActivityKind::TeachingLoad,
            ActivityPayload::FundingSource { .. } => ActivityKind::FundingSource,
            ActivityPayload::ExternalActivity { .. } => ActivityKind::ExternalActivity,
            ActivityPayload::Collaboration { .. } => ActivityKind::Collaboration,
            ActivityPayload::ValorizableResult { .. } => ActivityKind::ValorizableResult,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActivityRecord {
    pub id: RecordId,
    pub team_id: TeamId,
    pub year: i32,
    #[serde(flatten)]
    pub payload: ActivityPayload,
}

impl ActivityRecord {
    pub fn kind(&self) -> ActivityKind {
        self.payload.kind()
    }
}

/// The eleven rated aspects of an evaluation form, in form order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Indicator {
    ScientificMerit,
    ResearchApproach,
    Innovation,
    TeamQuality,
    ProbabilityObjectives,
    Productivity,
    PotentialImpact,
    CommunityUtility,
    DominantCharacter,
    ReviewerExpertise,
    Overall,
}

impl Indicator {
    pub const ALL: [Indicator; 11] = [
        Indicator::ScientificMerit,
        Indicator::ResearchApproach,
        Indicator::Innovation,
        Indicator::TeamQuality,
        Indicator::ProbabilityObjectives,
        Indicator::Productivity,
        Indicator::PotentialImpact,
        Indicator::CommunityUtility,
        Indicator::DominantCharacter,
        Indicator::ReviewerExpertise,
        Indicator::Overall,
    ];

    /// Indicators that describe the team and are aggregated into summaries.
    pub const RATED: [Indicator; 9] = [
        Indicator::ScientificMerit,
        Indicator::ResearchApproach,
        Indicator::Innovation,
        Indicator::TeamQuality,
        Indicator::ProbabilityObjectives,
        Indicator::Productivity,
        Indicator::PotentialImpact,
        Indicator::CommunityUtility,
        Indicator::Overall,
    ];

    /// Every indicator scored on the 1-10 scale (rated ones plus expertise).
    pub const NUMERIC: [Indicator; 10] = [
        Indicator::ScientificMerit,
        Indicator::ResearchApproach,
        Indicator::Innovation,
        Indicator::TeamQuality,
        Indicator::ProbabilityObjectives,
        Indicator::Productivity,
        Indicator::PotentialImpact,
        Indicator::CommunityUtility,
        Indicator::ReviewerExpertise,
        Indicator::Overall,
    ];

    pub fn is_numeric(self) -> bool {
        self != Indicator::DominantCharacter
    }

    pub fn key(self) -> &'static str {
        match self {
            Indicator::ScientificMerit => "scientific_merit",
            Indicator::ResearchApproach => "research_approach",
            Indicator::Innovation => "innovation",
            Indicator::TeamQuality => "team_quality",
            Indicator::ProbabilityObjectives => "probability_objectives",
            Indicator::Productivity => "productivity",
            Indicator::PotentialImpact => "potential_impact",
            Indicator::CommunityUtility => "community_utility",
            Indicator::DominantCharacter => "dominant_character",
            Indicator::ReviewerExpertise => "reviewer_expertise",
            Indicator::Overall => "overall",
        }
    }

    /// Label as printed on the form.
    pub fn label(self) -> &'static str {
        match self {
            Indicator::ScientificMerit => "Scientific merit of the research / uniqueness of the research",
            Indicator::ResearchApproach => "Research approach / plan / focus / coordination",
            Indicator::Innovation => "Innovation",
            Indicator::TeamQuality => "Quality of the research team",
            Indicator::ProbabilityObjectives => "Probability that the research objectives will be achieved",
            Indicator::Productivity => "Research productivity",
            Indicator::PotentialImpact => "Potential impact on further research and on the development of applications",
            Indicator::CommunityUtility => "Potential for transition to or utility for the community",
            Indicator::DominantCharacter => "Dominant character of the research",
            Indicator::ReviewerExpertise => "Reviewer's expertise in the particular research area",
            Indicator::Overall => "Overall research evaluation",
        }
    }
}

impl fmt::Display for Indicator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.key())
    }
}

impl std::str::FromStr for Indicator {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Indicator::ALL.iter().copied().find(|i| i.key() == s).ok_or_else(|| format!("unknown indicator {s:?}"))
    }
}

/// An integer rating on the 1-10 scale.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "i64", into = "i64")]
pub struct Score(u8);

impl Score {
    pub const MIN: u8 = 1;
    pub const MAX: u8 = 10;

    pub fn new(value: i64) -> Option<Score> {
        (Self::MIN as i64..=Self::MAX as i64).contains(&value).then_some(Score(value as u8))
    }

    pub fn get(self) -> u8 {
        self.0
    }

    pub fn band(self) -> Band {
        Band::of(self.0)
    }
}

impl TryFrom<i64> for Score {
    type Error = String;

    fn try_from(value: i64) -> Result<Self, Self::Error> {
        Score::new(value).ok_or_else(|| format!("score {value} outside 1..=10"))
    }
}

impl From<Score> for i64 {
    fn from(s: Score) -> i64 {
        s.0 as i64
    }
}

/// Display band of a score. Storage always keeps the raw integer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Band {
    Low,
    Fair,
    Average,
    Good,
    High,
}

impl Band {
    pub fn of(score: u8) -> Band {
        match score {
            9..=10 => Band::High,
            7..=8 => Band::Good,
            5..=6 => Band::Average,
            3..=4 => Band::Fair,
            _ => Band::Low,
        }
    }

    /// Band of a (possibly fractional) aggregate, using the nearest integer.
    pub fn of_mean(mean: f64) -> Band {
        Band::of(mean.round().clamp(1.0, 10.0) as u8)
    }
}

impl fmt::Display for Band {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Band::Low => "Low",
            Band::Fair => "Fair",
            Band::Average => "Average",
            Band::Good => "Good",
            Band::High => "High",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DominantCharacter {
    Fundamental,
    Applied,
    PolicyOriented,
}

impl DominantCharacter {
    pub const ALL: [DominantCharacter; 3] =
        [DominantCharacter::Fundamental, DominantCharacter::Applied, DominantCharacter::PolicyOriented];

    pub fn key(self) -> &'static str {
        match self {
            DominantCharacter::Fundamental => "fundamental",
            DominantCharacter::Applied => "applied",
            DominantCharacter::PolicyOriented => "policy_oriented",
        }
    }
}

impl std::str::FromStr for DominantCharacter {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let norm = s.trim().to_ascii_lowercase().replace([' ', '-'], "_");
        DominantCharacter::ALL
            .iter()
            .copied()
            .find(|c| c.key() == norm)
            .ok_or_else(|| format!("unknown dominant character {s:?}"))
    }
}

/// Free text from a form. Form comments are always confidential; `Debug`
/// never prints the content.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ConfidentialText(String);

impl ConfidentialText {
    pub fn new(text: impl Into<String>) -> Self {
        Self(text.into())
    }

    pub fn expose(&self) -> &str {
        &self.0
    }
}

impl fmt::Debug for ConfidentialText {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ConfidentialText(<{} bytes>)", self.0.len())
    }
}

/// A form exactly as returned by an expert. Values are kept raw so that
/// validation can report problems instead of failing to parse.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationForm {
    pub expert_id: ExpertId,
    pub team_id: TeamId,
    #[serde(default)]
    pub scores: BTreeMap<Indicator, i64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dominant_character: Option<String>,
    #[serde(default)]
    pub comments: BTreeMap<String, ConfidentialText>,
    pub returned_at: DateTime<Utc>,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum Violation {
    MissingExpertiseWeight,
    OutOfRange { indicator: Indicator, value: i64 },
    InvalidCategory { value: String },
    NumericDominantCharacter { value: i64 },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::MissingExpertiseWeight => {
                write!(f, "MissingExpertiseWeight: scores.reviewer_expertise is required")
            }
            Violation::OutOfRange { indicator, value } => {
                write!(f, "OutOfRange: scores.{indicator} = {value} is outside 1..=10")
            }
            Violation::InvalidCategory { value } => write!(
                f,
                "InvalidCategory: dominant_character {value:?} is not fundamental, applied or policy_oriented"
            ),
            Violation::NumericDominantCharacter { value } => {
                write!(f, "NumericDominantCharacter: scores.dominant_character = {value}; it is categorical")
            }
        }
    }
}

/// Checks every form invariant. An empty result means the form is valid.
pub fn validate_form(form: &EvaluationForm) -> Vec<Violation> {
    let mut out = Vec::new();
    if !form.scores.contains_key(&Indicator::ReviewerExpertise) {
        out.push(Violation::MissingExpertiseWeight);
    }
    for (&indicator, &value) in &form.scores {
        if indicator == Indicator::DominantCharacter {
            out.push(Violation::NumericDominantCharacter { value });
        } else if Score::new(value).is_none() {
            out.push(Violation::OutOfRange { indicator, value });
        }
    }
    if let Some(c) = &form.dominant_character {
        if c.parse::<DominantCharacter>().is_err() {
            out.push(Violation::InvalidCategory { value: c.clone() });
        }
    }
    out
}

/// A form that passed [`validate_form`].
///
/// The expert identity is sealed inside the crate: code outside `evalforge_core`
/// can aggregate, anonymize and render these forms but cannot read who wrote them.
#[derive(Clone, PartialEq)]
pub struct ValidatedForm {
    expert_id: ExpertId,
    team_id: TeamId,
    scores: BTreeMap<Indicator, Score>,
    expertise: Score,
    dominant_character: Option<DominantCharacter>,
    comments: BTreeMap<String, ConfidentialText>,
    returned_at: DateTime<Utc>,
}

impl ValidatedForm {
    pub fn team_id(&self) -> &TeamId {
        &self.team_id
    }

    /// Score on a rated indicator; `None` when skipped. Never returns the
    /// expertise score (see [`ValidatedForm::expertise`]).
    pub fn score(&self, indicator: Indicator) -> Option<Score> {
        if indicator == Indicator::ReviewerExpertise {
            return None;
        }
        self.scores.get(&indicator).copied()
    }

    pub fn rated_scores(&self) -> impl Iterator<Item = (Indicator, Score)> + '_ {
        self.scores.iter().filter(|(i, _)| **i != Indicator::ReviewerExpertise).map(|(i, s)| (*i, *s))
    }

    pub fn expertise(&self) -> Score {
        self.expertise
    }

    pub fn dominant_character(&self) -> Option<DominantCharacter> {
        self.dominant_character
    }

    pub fn comments(&self) -> &BTreeMap<String, ConfidentialText> {
        &self.comments
    }

    pub fn returned_at(&self) -> DateTime<Utc> {
        self.returned_at
    }

    pub(crate) fn expert_id(&self) -> &ExpertId {
        &self.expert_id
    }

    /// Back to the raw storage representation.
    #[cfg(test)]
    pub(crate) fn to_form(&self) -> EvaluationForm {
        EvaluationForm {
            expert_id: self.expert_id.clone(),
            team_id: self.team_id.clone(),
            scores: self.scores.iter().map(|(i, s)| (*i, s.get() as i64)).collect(),
            dominant_character: self.dominant_character.map(|c| c.key().to_owned()),
            comments: self.comments.clone(),
            returned_at: self.returned_at,
        }
    }
}

impl fmt::Debug for ValidatedForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ValidatedForm")
            .field("team_id", &self.team_id)
            .field("scores", &self.scores)
            .field("expertise", &self.expertise)
            .field("dominant_character", &self.dominant_character)
            .field("comments", &self.comments)
            .field("returned_at", &self.returned_at)
            .finish_non_exhaustive()
    }
}

impl TryFrom<EvaluationForm> for ValidatedForm {
    type Error = Vec<Violation>;

    fn try_from(form: EvaluationForm) -> Result<Self, Self::Error> {
        let violations = validate_form(&form);
        if !violations.is_empty() {
            return Err(violations);
        }
        let scores: BTreeMap<Indicator, Score> =
            form.scores.iter().map(|(i, v)| (*i, Score::new(*v).expect("validated"))).collect();
        let expertise = scores[&Indicator::ReviewerExpertise];
        Ok(ValidatedForm {
            expert_id: form.expert_id,
            team_id: form.team_id,
            scores,
            expertise,
            dominant_character: form.dominant_character.as_deref().map(|c| c.parse().expect("validated")),
            comments: form.comments,
            returned_at: form.returned_at,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CitedPublication {
    pub field: String,
    pub citation_count: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BibliometricRecord {
    pub team_id: TeamId,
    pub publications: Vec<CitedPublication>,
    /// Mean citations per paper in each field.
    pub field_baselines: BTreeMap<String, f64>,
}

impl BibliometricRecord {
    pub fn validate(&self) -> Vec<String> {
        let mut problems = Vec::new();
        for p in &self.publications {
            if !self.field_baselines.contains_key(&p.field) {
                problems.push(format!("bibliometrics {}: no baseline for field {}", self.team_id, p.field));
            }
        }
        for (f, b) in &self.field_baselines {
            if !(b.is_finite() && *b > 0.0) {
                problems.push(format!("bibliometrics {}: baseline for {f} must be > 0", self.team_id));
            }
        }
        problems
    }
}
