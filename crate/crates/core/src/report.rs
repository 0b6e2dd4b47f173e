//! Public discipline report and confidential per-team reports.
//!
//! The global renderer only accepts [`GlobalReportInput`], which has no place
//! for per-team summaries, ranks or form comments. Both tracks are also
//! checked after rendering by scanning the text for confidential tokens.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analytics::Histogram;
use crate::dossier::{Document, DOSSIER_HEADINGS};
use crate::model::{Band, DominantCharacter, Indicator, TeamId, ValidatedForm};
use crate::scoring::{format2, rank_label, GeneralComments, ScoreSummary, WeightingPolicy};
use crate::workflow::Phase;

/// Reports may be rendered from this phase on.
pub const REPORT_PHASE: Phase = Phase::P6;

/// Caption carried by the numbers section of every team report.
pub const INDICATION_CAPTION: &str = "Assessment in numbers, indication only";

/// Attribution of every comment in a team report.
pub const PANEL_ATTRIBUTION: &str = "The panel";

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ReportError {
    #[error("PhaseViolation: reports need phase {required}, project is in {current}")]
    PhaseViolation { current: Phase, required: Phase },
    #[error("IntegrityError: {0}")]
    IntegrityError(String),
    #[error("RedactionViolation: {} confidential token(s) found", .0.len())]
    RedactionViolation(Vec<String>),
}

pub const GLOBAL_SECTIONS: [&str; 6] = [
    "I. Context",
    "II. The discipline and its teams",
    "III. Procedure",
    "IV. Conclusions of the experts",
    "V. Further remarks regarding research evaluation",
    "VI. Concluding observations by the coordinator",
];

pub const GLOBAL_ADDENDA: [&str; 5] = [
    "Addendum 1: Content of the evaluation files",
    "Addendum 2: The evaluation form",
    "Addendum 3: Coordinator and experts",
    "Addendum 4: Short CVs of the coordinator and the experts",
    "Addendum 5: Contact information for the teams",
];

/// Comment sections of a team report.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TeamSection {
    Team,
    TopicsInnovation,
    Output,
    Character,
    Planning,
    CoordinationCollaborations,
    GeneralConclusions,
}

impl TeamSection {
    pub const ALL: [TeamSection; 7] = [
        TeamSection::Team,
        TeamSection::TopicsInnovation,
        TeamSection::Output,
        TeamSection::Character,
        TeamSection::Planning,
        TeamSection::CoordinationCollaborations,
        TeamSection::GeneralConclusions,
    ];

    pub fn heading(self) -> &'static str {
        match self {
            TeamSection::Team => "Team",
            TeamSection::TopicsInnovation => "Topics & Innovation",
            TeamSection::Output => "Output",
            TeamSection::Character => "Fundamental / Applied / Policy Oriented Research",
            TeamSection::Planning => "Planning",
            TeamSection::CoordinationCollaborations => "Coordination & Collaborations",
            TeamSection::GeneralConclusions => "General Conclusions",
        }
    }
}

/// Panel composition as it may appear in public: counts only.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PanelCounts {
    pub experts: usize,
    pub foreign_experts: usize,
    pub countries: usize,
}

/// Free texts written by the coordinator for the public report.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GlobalTexts {
    #[serde(default)]
    pub context: String,
    #[serde(default)]
    pub procedure: String,
    #[serde(default)]
    pub conclusions: String,
    #[serde(default)]
    pub further_remarks: String,
    #[serde(default)]
    pub concluding_observations: String,
    /// Opaque pass-through for addendum 4.
    #[serde(default)]
    pub cvs: String,
    /// Opaque pass-through for addendum 5.
    #[serde(default)]
    pub contacts: String,
}

/// Everything the public report may show. Holds discipline-level data only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GlobalReportInput {
    pub discipline_name: String,
    pub team_names: Vec<String>,
    pub coordinator: String,
    pub texts: GlobalTexts,
    pub panel: PanelCounts,
    pub n_forms: usize,
    pub distributions: Vec<Histogram>,
    pub general_comments: GeneralComments,
}

fn require_phase(phase: Phase) -> Result<(), ReportError> {
    if phase < REPORT_PHASE {
        return Err(ReportError::PhaseViolation { current: phase, required: REPORT_PHASE });
    }
    Ok(())
}

fn heading(out: &mut String, title: &str) {
    let _ = writeln!(out, "\n== {title} ==");
}

fn paragraph(out: &mut String, text: &str) {
    let t = text.trim();
    if t.is_empty() {
        let _ = writeln!(out, "(none)");
    } else {
        let _ = writeln!(out, "{t}");
    }
}

fn histogram_line(h: &Histogram) -> String {
    let counts: Vec<String> = h.counts.iter().map(|(s, c)| format!("{s}:{c}")).collect();
    let mode = h.mode().map(|m| m.to_string()).unwrap_or_else(|| "-".into());
    format!("{:<24} n={:<5} mode={:<2} | {}", h.label, h.n, mode, counts.join(" "))
}

/// Renders the public report. Deterministic for equal input.
pub fn render_global(input: &GlobalReportInput, phase: Phase) -> Result<Document, ReportError> {
    require_phase(phase)?;
    let mut out = String::new();
    let _ = writeln!(out, "%% evalforge global report");
    let _ = writeln!(out, "%% discipline: {}", input.discipline_name);

    heading(&mut out, GLOBAL_SECTIONS[0]);
    paragraph(&mut out, &input.texts.context);

    heading(&mut out, GLOBAL_SECTIONS[1]);
    let _ = writeln!(out, "Discipline: {}", input.discipline_name);
    let _ = writeln!(out, "Teams evaluated: {}", input.team_names.len());
    let mut names = input.team_names.clone();
    names.sort();
    for n in names {
        let _ = writeln!(out, "- {n}");
    }

    heading(&mut out, GLOBAL_SECTIONS[2]);
    paragraph(&mut out, &input.texts.procedure);
    let _ = writeln!(
        out,
        "Panel: {} experts from {} countries, {} of them from abroad. Returned forms: {}.",
        input.panel.experts, input.panel.countries, input.panel.foreign_experts, input.n_forms
    );

    heading(&mut out, GLOBAL_SECTIONS[3]);
    paragraph(&mut out, &input.texts.conclusions);
    let _ = writeln!(out, "\nScore distributions over all returned forms (counts per score 1 to 10):");
    for h in &input.distributions {
        let _ = writeln!(out, "{}", histogram_line(h));
    }
    let gc = &input.general_comments;
    if !gc.team_level.is_empty() {
        let _ = writeln!(out, "\nRecommendations at team level:");
        for (cat, text) in &gc.team_level {
            let _ = writeln!(out, "- [{}] {}", cat.label(), text.trim());
        }
    }
    if !gc.institutional.is_empty() {
        let _ = writeln!(out, "\nRecommendations at institutional level:");
        for (cat, text) in &gc.institutional {
            let _ = writeln!(out, "- [{}] {}", cat.label(), text.trim());
        }
    }

    heading(&mut out, GLOBAL_SECTIONS[4]);
    paragraph(&mut out, &input.texts.further_remarks);

    heading(&mut out, GLOBAL_SECTIONS[5]);
    paragraph(&mut out, &input.texts.concluding_observations);

    heading(&mut out, GLOBAL_ADDENDA[0]);
    for h in DOSSIER_HEADINGS {
        let _ = writeln!(out, "{h}");
    }
    heading(&mut out, GLOBAL_ADDENDA[1]);
    for ind in Indicator::ALL {
        let _ = writeln!(out, "- {}", ind.label());
    }
    let _ = writeln!(out, "Scale: 9 to 10 High, 7 to 8 Good, 5 to 6 Average, 3 to 4 Fair, 1 to 2 Low.");
    let _ = writeln!(out, "Dominant character: {}.", DominantCharacter::ALL.map(|c| c.key()).join(", "));
    heading(&mut out, GLOBAL_ADDENDA[2]);
    let _ = writeln!(out, "Coordinator: {}", input.coordinator);
    let _ = writeln!(out, "Experts: {} (listed in the confidential records)", input.panel.experts);
    heading(&mut out, GLOBAL_ADDENDA[3]);
    paragraph(&mut out, &input.texts.cvs);
    heading(&mut out, GLOBAL_ADDENDA[4]);
    paragraph(&mut out, &input.texts.contacts);

    Ok(Document::new(out))
}

/// Data for the confidential reports of one discipline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TeamReportSet {
    pub discipline_name: String,
    pub policy: WeightingPolicy,
    /// Summaries of every team in the discipline, as returned by ranking.
    pub summaries: Vec<ScoreSummary>,
    pub team_names: BTreeMap<TeamId, String>,
    /// Panel comments per team and section.
    pub comments: BTreeMap<TeamId, BTreeMap<TeamSection, String>>,
}

impl TeamReportSet {
    fn ranked_count(&self) -> usize {
        self.summaries.iter().filter(|s| s.rank_in_discipline.is_some()).count()
    }

    /// Lowest and highest overall score in the discipline.
    pub fn score_range(&self) -> Option<(f64, f64)> {
        let v: Vec<f64> = self.summaries.iter().filter_map(|s| s.overall_weighted).collect();
        if v.is_empty() {
            return None;
        }
        Some((v.iter().copied().fold(f64::INFINITY, f64::min), v.iter().copied().fold(f64::NEG_INFINITY, f64::max)))
    }
}

/// Renders the confidential report of one team.
pub fn render_team(set: &TeamReportSet, team: &TeamId, phase: Phase) -> Result<Document, ReportError> {
    require_phase(phase)?;
    let summary = set
        .summaries
        .iter()
        .find(|s| &s.team_id == team)
        .ok_or_else(|| ReportError::IntegrityError(format!("no score summary for team {team}")))?;
    let name = set.team_names.get(team).map(String::as_str).unwrap_or(team.as_str());
    let empty = BTreeMap::new();
    let comments = set.comments.get(team).unwrap_or(&empty);

    let mut out = String::new();
    let _ = writeln!(out, "%% evalforge team report");
    let _ = writeln!(out, "%% team: {team}");
    let _ = writeln!(out, "%% discipline: {}", set.discipline_name);
    let _ = writeln!(out, "\nConfidential report for {name}");

    heading(&mut out, "Comments");
    for section in TeamSection::ALL {
        heading(&mut out, section.heading());
        let _ = writeln!(out, "{PANEL_ATTRIBUTION}:");
        paragraph(&mut out, comments.get(&section).map(String::as_str).unwrap_or(""));
    }

    heading(&mut out, INDICATION_CAPTION);
    let _ = writeln!(out, "These numbers only indicate the position of the team within the discipline.");
    let _ = writeln!(out, "Returned forms: {}", summary.n_forms);
    for ind in Indicator::RATED {
        if let Some(agg) = summary.per_indicator.get(&ind) {
            let _ = writeln!(
                out,
                "{:<60} {:>5}  ({}, {} ratings)",
                ind.label(),
                format2(agg.weighted_mean),
                band_name(Band::of_mean(agg.weighted_mean)),
                agg.n_ratings
            );
        }
    }
    let props = summary.dominant_proportions();
    if !props.is_empty() {
        let parts: Vec<String> =
            props.iter().map(|(c, p)| format!("{} {}%", c.key(), (p * 100.0).round() as i64)).collect();
        let _ = writeln!(out, "Dominant character: {}", parts.join(", "));
    }
    match summary.rank_in_discipline {
        Some(r) => {
            let _ = writeln!(out, "Position: {}", rank_label(r, set.ranked_count()));
        }
        None => {
            let _ = writeln!(out, "Position: not ranked (no overall evaluation score)");
        }
    }
    if let Some((lo, hi)) = set.score_range() {
        let _ = writeln!(out, "Overall evaluation scores in the discipline range from {lo:.1} to {hi:.1}.");
    }

    heading(&mut out, "Explanation of the calculations");
    let _ = writeln!(out, "{}", set.policy.describe());

    Ok(Document::new(out))
}

fn band_name(b: Band) -> &'static str {
    match b {
        Band::Low => "low",
        Band::Fair => "fair",
        Band::Average => "average",
        Band::Good => "good",
        Band::High => "high",
    }
}

/// Confidential strings that must not leak into a given output.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ConfidentialTokens {
    pub tokens: BTreeSet<String>,
}

impl ConfidentialTokens {
    pub fn insert(&mut self, token: impl Into<String>) {
        let t = token.into();
        if !t.trim().is_empty() {
            self.tokens.insert(t);
        }
    }

    /// Tokens of one team: its rank string, formatted weighted scores, and the
    /// comment texts of its forms.
    pub fn of_team(summary: &ScoreSummary, ranked: usize, forms: &[ValidatedForm]) -> Self {
        let mut c = ConfidentialTokens::default();
        if let Some(r) = summary.rank_in_discipline {
            c.insert(rank_label(r, ranked));
        }
        for agg in summary.per_indicator.values() {
            c.insert(format2(agg.weighted_mean));
        }
        for f in forms.iter().filter(|f| f.team_id() == &summary.team_id) {
            for text in f.comments().values() {
                c.insert(text.expose());
            }
        }
        c
    }

    pub fn extend(&mut self, other: &ConfidentialTokens) {
        self.tokens.extend(other.tokens.iter().cloned());
    }

    pub fn without(&self, other: &ConfidentialTokens) -> ConfidentialTokens {
        ConfidentialTokens { tokens: self.tokens.difference(&other.tokens).cloned().collect() }
    }
}

/// Every token found in `text`.
pub fn redaction_hits(text: &str, tokens: &ConfidentialTokens) -> Vec<String> {
    tokens.tokens.iter().filter(|t| text.contains(t.as_str())).cloned().collect()
}

/// Fails with the offending tokens when any of them occurs in `doc`.
pub fn audit(doc: &Document, tokens: &ConfidentialTokens) -> Result<(), ReportError> {
    let hits = redaction_hits(doc.as_str(), tokens);
    if hits.is_empty() {
        Ok(())
    } else {
        Err(ReportError::RedactionViolation(hits))
    }
}
