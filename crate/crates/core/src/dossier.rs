//! Evaluation files: drafting from stored activity records, merging the
//! sections teams supply, and rendering the uniform dossier document.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::{self, Write as _};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::model::{ActivityKind, ActivityPayload, ActivityRecord, MemberRole, RecordId, TeamId, YearWindow};

/// Default length of the evaluation window in years.
pub const DEFAULT_WINDOW_YEARS: u32 = 5;

/// Maximum number of core publications in A.VIII.
pub const MAX_CORE_PUBLICATIONS: usize = 5;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DossierError {
    #[error("UnknownSlot: no dossier section {0:?}")]
    UnknownSlot(String),
    #[error("DeletionForbidden: records {0:?} were drafted from the store and cannot be removed")]
    DeletionForbidden(Vec<RecordId>),
    #[error("CoreLimitExceeded: A.VIII would hold {0} core publications (max 5)")]
    CoreLimitExceeded(usize),
    #[error("CoreNotListed: core publication {0} is not listed under B.I")]
    CoreNotListed(RecordId),
    #[error("SlotKindMismatch: {0}")]
    SlotKindMismatch(String),
    #[error("TeamMismatch: delta for {delta} applied to file of {file}")]
    TeamMismatch { file: TeamId, delta: TeamId },
    #[error("IncompleteDossier: empty sections {0:?}")]
    IncompleteDossier(Vec<Slot>),
    #[error("InvalidWindow: {0}")]
    InvalidWindow(String),
}

/// Non-fatal drafting diagnostics.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DraftWarning {
    EmptyOverviews,
}

/// Dossier sections in their fixed order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Slot {
    #[serde(rename = "Preamble")]
    Preamble,
    #[serde(rename = "A.I")]
    AIntroduction,
    #[serde(rename = "A.II")]
    AResearchTopics,
    #[serde(rename = "A.III")]
    AResults,
    #[serde(rename = "A.IV")]
    AActivities,
    #[serde(rename = "A.V")]
    ASwot,
    #[serde(rename = "A.VI")]
    ARelevance,
    #[serde(rename = "A.VII")]
    AHeadCv,
    #[serde(rename = "A.VIII")]
    ACorePublications,
    #[serde(rename = "B.I")]
    BPublications,
    #[serde(rename = "B.II")]
    BProjects,
    #[serde(rename = "B.III")]
    BOtherAccomplishments,
    #[serde(rename = "C.I")]
    CPersonnelOverview,
    #[serde(rename = "C.II")]
    CPersonnelDetails,
    #[serde(rename = "C.III")]
    CTeachingLoad,
    #[serde(rename = "C.IV")]
    CFunding,
    #[serde(rename = "D")]
    DExternalActivities,
    #[serde(rename = "E")]
    ECollaborations,
    #[serde(rename = "F")]
    FValorizableResults,
}

impl Slot {
    pub const ALL: [Slot; 19] = [
        Slot::Preamble,
        Slot::AIntroduction,
        Slot::AResearchTopics,
        Slot::AResults,
        Slot::AActivities,
        Slot::ASwot,
        Slot::ARelevance,
        Slot::AHeadCv,
        Slot::ACorePublications,
        Slot::BPublications,
        Slot::BProjects,
        Slot::BOtherAccomplishments,
        Slot::CPersonnelOverview,
        Slot::CPersonnelDetails,
        Slot::CTeachingLoad,
        Slot::CFunding,
        Slot::DExternalActivities,
        Slot::ECollaborations,
        Slot::FValorizableResults,
    ];

    pub fn code(self) -> &'static str {
        match self {
            Slot::Preamble => "Preamble",
            Slot::AIntroduction => "A.I",
            Slot::AResearchTopics => "A.II",
            Slot::AResults => "A.III",
            Slot::AActivities => "A.IV",
            Slot::ASwot => "A.V",
            Slot::ARelevance => "A.VI",
            Slot::AHeadCv => "A.VII",
            Slot::ACorePublications => "A.VIII",
            Slot::BPublications => "B.I",
            Slot::BProjects => "B.II",
            Slot::BOtherAccomplishments => "B.III",
            Slot::CPersonnelOverview => "C.I",
            Slot::CPersonnelDetails => "C.II",
            Slot::CTeachingLoad => "C.III",
            Slot::CFunding => "C.IV",
            Slot::DExternalActivities => "D",
            Slot::ECollaborations => "E",
            Slot::FValorizableResults => "F",
        }
    }

    pub fn title(self) -> &'static str {
        match self {
            Slot::Preamble => "Preamble",
            Slot::AIntroduction => "Introduction",
            Slot::AResearchTopics => "Research topics",
            Slot::AResults => "Most important research results",
            Slot::AActivities => "Past, present and future activities (objectives and strategy)",
            Slot::ASwot => "Strengths and weaknesses / threats and opportunities",
            Slot::ARelevance => "Scientific and social relevance of the research",
            Slot::AHeadCv => "Short CV of the head of the team",
            Slot::ACorePublications => "Five core publications",
            Slot::BPublications => "Publications",
            Slot::BProjects => "Research projects",
            Slot::BOtherAccomplishments => {
                "Other scientific accomplishments (awards, promoters of PhD theses, memberships, ...)"
            }
            Slot::CPersonnelOverview => "Personnel \u{2014} Overview",
            Slot::CPersonnelDetails => "Personnel \u{2014} Details",
            Slot::CTeachingLoad => "Teaching load",
            Slot::CFunding => "Most important sources of funding",
            Slot::DExternalActivities => "Overview of external activities which contribute to teaching and/or research",
            Slot::ECollaborations => "Collaborations",
            Slot::FValorizableResults => "Valorizable results",
        }
    }

    /// Slots teams fill with narrative text.
    pub fn is_descriptive(self) -> bool {
        matches!(
            self,
            Slot::Preamble
                | Slot::AIntroduction
                | Slot::AResearchTopics
                | Slot::AResults
                | Slot::AActivities
                | Slot::ASwot
                | Slot::ARelevance
                | Slot::AHeadCv
                | Slot::ACorePublications
                | Slot::DExternalActivities
                | Slot::ECollaborations
                | Slot::FValorizableResults
        )
    }

    /// Slots that list records (drafted from the store, appendable by teams).
    pub fn is_overview(self) -> bool {
        !matches!(
            self,
            Slot::Preamble
                | Slot::AIntroduction
                | Slot::AResearchTopics
                | Slot::AResults
                | Slot::AActivities
                | Slot::ASwot
                | Slot::ARelevance
                | Slot::AHeadCv
        )
    }

    fn accepted_kinds(self) -> &'static [ActivityKind] {
        match self {
            Slot::ACorePublications | Slot::BPublications => &[ActivityKind::Publication],
            Slot::BProjects => &[ActivityKind::Project],
            Slot::BOtherAccomplishments => &[ActivityKind::OtherAccomplishment],
            Slot::CPersonnelOverview | Slot::CPersonnelDetails => &[ActivityKind::Personnel],
            Slot::CTeachingLoad => &[ActivityKind::TeachingLoad],
            Slot::CFunding => &[ActivityKind::FundingSource],
            Slot::DExternalActivities => &[ActivityKind::ExternalActivity],
            Slot::ECollaborations => &[ActivityKind::Collaboration],
            Slot::FValorizableResults => &[ActivityKind::ValorizableResult],
            _ => &[],
        }
    }
}

impl fmt::Display for Slot {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

impl std::str::FromStr for Slot {
    type Err = DossierError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Slot::ALL
            .iter()
            .copied()
            .find(|slot| slot.code().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| DossierError::UnknownSlot(s.to_owned()))
    }
}

/// Headings of a rendered dossier, in order.
pub const DOSSIER_HEADINGS: [&str; 22] = [
    "Preamble",
    "A. Presentation of the team",
    "A.I Introduction",
    "A.II Research topics",
    "A.III Most important research results",
    "A.IV Past, present and future activities (objectives and strategy)",
    "A.V Strengths and weaknesses / threats and opportunities",
    "A.VI Scientific and social relevance of the research",
    "A.VII Short CV of the head of the team",
    "A.VIII Five core publications",
    "B. Overview of the scientific activities",
    "B.I Publications",
    "B.II Research projects",
    "B.III Other scientific accomplishments (awards, promoters of PhD theses, memberships, ...)",
    "C. Financial means and personnel",
    "C.I Personnel \u{2014} Overview",
    "C.II Personnel \u{2014} Details",
    "C.III Teaching load",
    "C.IV Most important sources of funding",
    "D. Overview of external activities which contribute to teaching and/or research",
    "E. Collaborations",
    "F. Valorizable results",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    DraftedFromStore,
    TeamSupplied,
    Empty,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlotContent {
    pub provenance: Provenance,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub text: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub records: Vec<ActivityRecord>,
}

impl SlotContent {
    fn empty() -> Self {
        Self { provenance: Provenance::Empty, text: None, records: Vec::new() }
    }

    fn has_content(&self) -> bool {
        self.text.as_deref().is_some_and(|t| !t.trim().is_empty()) || !self.records.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationFile {
    pub team_id: TeamId,
    pub window: YearWindow,
    /// Digest of the store records the draft was built from.
    pub snapshot_id: String,
    pub sections: BTreeMap<Slot, SlotContent>,
    /// Records that came from the store; these can never be removed.
    pub store_records: BTreeSet<RecordId>,
}

impl EvaluationFile {
    pub fn slot(&self, slot: Slot) -> &SlotContent {
        &self.sections[&slot]
    }

    pub fn empty_slots(&self) -> Vec<Slot> {
        Slot::ALL
            .iter()
            .copied()
            .filter(|s| self.sections.get(s).is_none_or(|c| c.provenance == Provenance::Empty))
            .collect()
    }

    pub fn is_complete(&self) -> bool {
        self.empty_slots().is_empty()
    }

    /// FTE totals per role from C.I (most recent record per person).
    pub fn personnel_overview(&self) -> PersonnelOverview {
        PersonnelOverview::from_records(&self.slot(Slot::CPersonnelOverview).records)
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct PersonnelOverview {
    pub by_role: BTreeMap<MemberRole, f64>,
    pub headcount: usize,
    pub total_fte: f64,
}

impl PersonnelOverview {
    fn from_records(records: &[ActivityRecord]) -> Self {
        let mut latest: BTreeMap<&str, (i32, MemberRole, f64)> = BTreeMap::new();
        for r in records {
            if let ActivityPayload::Personnel { person, role, fte } = &r.payload {
                let entry = latest.entry(person.as_str()).or_insert((r.year, *role, *fte));
                if r.year > entry.0 {
                    *entry = (r.year, *role, *fte);
                }
            }
        }
        let mut out = PersonnelOverview { headcount: latest.len(), ..Default::default() };
        for (_, role, fte) in latest.values() {
            *out.by_role.entry(*role).or_default() += fte;
            out.total_fte += fte;
        }
        out
    }
}

/// Digest identifying the set of records a draft was built from.
pub fn snapshot_id(records: &[&ActivityRecord]) -> String {
    let mut hasher = Sha256::new();
    for r in records {
        hasher.update(serde_json::to_vec(r).expect("records serialize"));
        hasher.update(b"\n");
    }
    hex::encode(&hasher.finalize()[..8])
}

fn slot_for(kind: ActivityKind) -> &'static [Slot] {
    match kind {
        ActivityKind::Publication => &[Slot::BPublications],
        ActivityKind::Project => &[Slot::BProjects],
        ActivityKind::OtherAccomplishment => &[Slot::BOtherAccomplishments],
        ActivityKind::Personnel => &[Slot::CPersonnelOverview, Slot::CPersonnelDetails],
        ActivityKind::TeachingLoad => &[Slot::CTeachingLoad],
        ActivityKind::FundingSource => &[Slot::CFunding],
        ActivityKind::ExternalActivity => &[Slot::DExternalActivities],
        ActivityKind::Collaboration => &[Slot::ECollaborations],
        ActivityKind::ValorizableResult => &[Slot::FValorizableResults],
    }
}

/// Drafts a team's evaluation file from the activity records of the store.
///
/// Overview sections are filled with the team's records inside `window`;
/// narrative sections start empty. A team with no records in the window still
/// gets a file, together with an `EmptyOverviews` warning.
pub fn draft_file(
    team: &TeamId,
    window: YearWindow,
    activities: &[ActivityRecord],
) -> Result<(EvaluationFile, Vec<DraftWarning>), DossierError> {
    if window.is_empty() {
        return Err(DossierError::InvalidWindow(format!("{window}")));
    }
    let mut selected: Vec<&ActivityRecord> =
        activities.iter().filter(|r| &r.team_id == team && window.contains(r.year)).collect();
    selected.sort_by(|a, b| (a.year, &a.id).cmp(&(b.year, &b.id)));

    let mut sections: BTreeMap<Slot, SlotContent> = Slot::ALL.iter().map(|s| (*s, SlotContent::empty())).collect();
    for rec in &selected {
        for slot in slot_for(rec.kind()) {
            let content = sections.get_mut(slot).expect("all slots present");
            content.provenance = Provenance::DraftedFromStore;
            content.records.push((*rec).clone());
        }
    }
    // B.I is grouped by category, then year.
    if let Some(b1) = sections.get_mut(&Slot::BPublications) {
        b1.records.sort_by(|a, b| (category_of(a), a.year, &a.id).cmp(&(category_of(b), b.year, &b.id)));
    }

    let warnings = if selected.is_empty() { vec![DraftWarning::EmptyOverviews] } else { Vec::new() };
    let file = EvaluationFile {
        team_id: team.clone(),
        window,
        snapshot_id: snapshot_id(&selected),
        sections,
        store_records: selected.iter().map(|r| r.id.clone()).collect(),
    };
    Ok((file, warnings))
}

fn category_of(r: &ActivityRecord) -> &str {
    match &r.payload {
        ActivityPayload::Publication { category, .. } => category,
        _ => "",
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "action", rename_all = "snake_case")]
pub enum DeltaContent {
    /// Replaces the narrative text of a descriptive slot.
    Text { text: String },
    /// Adds records to an overview slot (or picks core publications for A.VIII).
    AppendRecords { records: Vec<ActivityRecord> },
    /// Removes team-supplied records. Store-drafted records are protected.
    RemoveRecords { ids: Vec<RecordId> },
}

/// A team's contribution to its own evaluation file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DraftDelta {
    pub team_id: TeamId,
    pub slot: String,
    #[serde(flatten)]
    pub content: DeltaContent,
    pub author: TeamId,
}

/// Applies a team delta to a file. The slot becomes `team-supplied`.
pub fn merge_delta(file: &EvaluationFile, delta: &DraftDelta) -> Result<EvaluationFile, DossierError> {
    if delta.team_id != file.team_id {
        return Err(DossierError::TeamMismatch { file: file.team_id.clone(), delta: delta.team_id.clone() });
    }
    let slot: Slot = delta.slot.parse()?;
    let mut out = file.clone();
    let content = out.sections.get_mut(&slot).expect("all slots present");

    match &delta.content {
        DeltaContent::Text { text } => {
            if !slot.is_descriptive() {
                return Err(DossierError::SlotKindMismatch(format!("{slot} takes records, not text")));
            }
            content.text = Some(text.clone());
        }
        DeltaContent::AppendRecords { records } => {
            if !slot.is_overview() {
                return Err(DossierError::SlotKindMismatch(format!("{slot} takes text, not records")));
            }
            if let Some(bad) = records.iter().find(|r| !slot.accepted_kinds().contains(&r.kind())) {
                return Err(DossierError::SlotKindMismatch(format!(
                    "{slot} does not accept {:?} record {}",
                    bad.kind(),
                    bad.id
                )));
            }
            if slot == Slot::ACorePublications {
                let listed: BTreeSet<&RecordId> =
                    file.slot(Slot::BPublications).records.iter().map(|r| &r.id).collect();
                if let Some(missing) = records.iter().find(|r| !listed.contains(&r.id)) {
                    return Err(DossierError::CoreNotListed(missing.id.clone()));
                }
                let mut ids: BTreeSet<RecordId> = content.records.iter().map(|r| r.id.clone()).collect();
                ids.extend(records.iter().map(|r| r.id.clone()));
                if ids.len() > MAX_CORE_PUBLICATIONS {
                    return Err(DossierError::CoreLimitExceeded(ids.len()));
                }
            }
            for r in records {
                if !content.records.iter().any(|existing| existing.id == r.id) {
                    content.records.push(r.clone());
                }
            }
        }
        DeltaContent::RemoveRecords { ids } => {
            let protected: Vec<RecordId> = ids.iter().filter(|id| file.store_records.contains(id)).cloned().collect();
            if !protected.is_empty() {
                return Err(DossierError::DeletionForbidden(protected));
            }
            content.records.retain(|r| !ids.contains(&r.id));
        }
    }
    content.provenance = if content.has_content() { Provenance::TeamSupplied } else { Provenance::Empty };
    Ok(out)
}

/// A rendered text document with `== heading ==` section markers.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Document {
    text: String,
}

impl Document {
    pub(crate) fn new(text: String) -> Self {
        Self { text }
    }

    pub fn as_str(&self) -> &str {
        &self.text
    }

    pub fn into_string(self) -> String {
        self.text
    }

    pub fn headings(&self) -> Vec<&str> {
        self.text.lines().filter_map(|l| l.strip_prefix("== ").and_then(|l| l.strip_suffix(" =="))).collect()
    }
}

impl fmt::Display for Document {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.text)
    }
}

/// Renders the dossier in the uniform layout. Equal files give byte-identical output.
pub fn render_dossier(file: &EvaluationFile, allow_incomplete: bool) -> Result<Document, DossierError> {
    let empty = file.empty_slots();
    if !empty.is_empty() && !allow_incomplete {
        return Err(DossierError::IncompleteDossier(empty));
    }
    let mut out = String::new();
    let _ = writeln!(out, "%% evalforge dossier");
    let _ = writeln!(out, "%% team: {}", file.team_id);
    let _ = writeln!(out, "%% window: {}", file.window);
    let _ = writeln!(out, "%% snapshot: {}", file.snapshot_id);

    for slot in Slot::ALL {
        match slot {
            Slot::AIntroduction => heading(&mut out, "A. Presentation of the team"),
            Slot::BPublications => heading(&mut out, "B. Overview of the scientific activities"),
            Slot::CPersonnelOverview => heading(&mut out, "C. Financial means and personnel"),
            _ => {}
        }
        let title = match slot {
            Slot::Preamble => "Preamble".to_owned(),
            Slot::DExternalActivities | Slot::ECollaborations | Slot::FValorizableResults => {
                format!("{}. {}", slot.code(), slot.title())
            }
            _ => format!("{} {}", slot.code(), slot.title()),
        };
        heading(&mut out, &title);
        let content = file.slot(slot);
        let _ = writeln!(out, "%% slot: {} provenance: {}", slot.code(), provenance_name(content.provenance));
        if let Some(text) = &content.text {
            let _ = writeln!(out, "{}", text.trim_end());
        }
        match slot {
            Slot::CPersonnelOverview => render_personnel_overview(&mut out, file),
            Slot::CPersonnelDetails => render_personnel_details(&mut out, &content.records),
            Slot::BPublications => render_publications(&mut out, &content.records),
            _ => {
                for r in &content.records {
                    let _ = writeln!(out, "- {}", describe(r));
                }
            }
        }
    }
    Ok(Document::new(out))
}

fn heading(out: &mut String, title: &str) {
    let _ = writeln!(out, "\n== {title} ==");
}

fn provenance_name(p: Provenance) -> &'static str {
    match p {
        Provenance::DraftedFromStore => "drafted-from-store",
        Provenance::TeamSupplied => "team-supplied",
        Provenance::Empty => "empty",
    }
}

fn render_publications(out: &mut String, records: &[ActivityRecord]) {
    let mut current: Option<&str> = None;
    for r in records {
        let cat = category_of(r);
        if current != Some(cat) {
            let n = records.iter().filter(|x| category_of(x) == cat).count();
            let _ = writeln!(out, "[{cat}] ({n})");
            current = Some(cat);
        }
        let _ = writeln!(out, "- {}", describe(r));
    }
}

fn render_personnel_overview(out: &mut String, file: &EvaluationFile) {
    let ov = file.personnel_overview();
    if ov.headcount == 0 {
        return;
    }
    for (role, fte) in &ov.by_role {
        let _ = writeln!(out, "- {role}: {fte:.2} FTE");
    }
    let _ = writeln!(out, "- total: {:.2} FTE ({} persons)", ov.total_fte, ov.headcount);
}

fn render_personnel_details(out: &mut String, records: &[ActivityRecord]) {
    let mut rows: BTreeMap<&str, (MemberRole, f64, BTreeSet<i32>)> = BTreeMap::new();
    for r in records {
        if let ActivityPayload::Personnel { person, role, fte } = &r.payload {
            let row = rows.entry(person.as_str()).or_insert((*role, *fte, BTreeSet::new()));
            if r.year >= row.2.iter().next_back().copied().unwrap_or(i32::MIN) {
                row.0 = *role;
                row.1 = *fte;
            }
            row.2.insert(r.year);
        }
    }
    for (person, (role, fte, years)) in rows {
        let years: Vec<String> = years.iter().map(|y| y.to_string()).collect();
        let _ = writeln!(out, "- {person} | {role} | {fte:.2} FTE | {}", years.join(","));
    }
}

fn describe(r: &ActivityRecord) -> String {
    match &r.payload {
        ActivityPayload::Publication { title, venue, field, .. } => {
            format!("{} ({}). {title}. {venue}. [{field}]", r.id, r.year)
        }
        ActivityPayload::Project { title, funder, amount, .. } => {
            format!("{} ({}). {title}, funded by {funder}, {amount:.0}", r.id, r.year)
        }
        ActivityPayload::OtherAccomplishment { description }
        | ActivityPayload::ExternalActivity { description }
        | ActivityPayload::ValorizableResult { description } => format!("{} ({}). {description}", r.id, r.year),
        ActivityPayload::Personnel { person, role, fte } => format!("{person} ({}) {role} {fte:.2}", r.year),
        ActivityPayload::TeachingLoad { course, hours_per_year } => {
            format!("{} ({}). {course}: {hours_per_year:.0} h/year", r.id, r.year)
        }
        ActivityPayload::FundingSource { funder, amount } => format!("{} ({}). {funder}: {amount:.0}", r.id, r.year),
        ActivityPayload::Collaboration { partner, description } => {
            format!("{} ({}). {partner}: {description}", r.id, r.year)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn publication(id: &str, team: &str, year: i32, category: &str) -> ActivityRecord {
        ActivityRecord {
            id: id.into(),
            team_id: team.into(),
            year,
            payload: ActivityPayload::Publication {
                title: format!("Paper {id}"),
                venue: "Journal".into(),
                category: category.into(),
                field: "f".into(),
                citation_count: None,
                coauthors: vec![],
            },
        }
    }

    fn personnel(id: &str, person: &str, year: i32, fte: f64) -> ActivityRecord {
        ActivityRecord {
            id: id.into(),
            team_id: "T".into(),
            year,
            payload: ActivityPayload::Personnel { person: person.into(), role: MemberRole::Phd, fte },
        }
    }

    fn text_delta(slot: &str, text: &str) -> DraftDelta {
        DraftDelta {
            team_id: "T".into(),
            slot: slot.into(),
            content: DeltaContent::Text { text: text.into() },
            author: "T".into(),
        }
    }

    #[test]
    fn draft_lists_publications_in_window() {
        let cats = ["international-refereed", "proceedings", "other"];
        let mut recs: Vec<_> =
            (0..12).map(|i| publication(&format!("p{i:02}"), "T", 2001 + (i % 5), cats[i as usize % 3])).collect();
        recs.push(publication("old", "T", 1999, "other"));
        recs.push(publication("foreign", "U", 2003, "other"));
        let (file, warnings) = draft_file(&"T".into(), YearWindow::new(2001, 2005), &recs).unwrap();
        assert!(warnings.is_empty());
        let b1 = file.slot(Slot::BPublications);
        assert_eq!(b1.records.len(), 12);
        assert_eq!(b1.provenance, Provenance::DraftedFromStore);
        // grouped by category
        let order: Vec<&str> = b1.records.iter().map(category_of).collect();
        let mut sorted = order.clone();
        sorted.sort();
        assert_eq!(order, sorted);
        assert_eq!(file.slot(Slot::ASwot).provenance, Provenance::Empty);
    }

    #[test]
    fn draft_outside_window_warns() {
        let recs = vec![publication("old", "T", 1990, "other")];
        let (file, warnings) = draft_file(&"T".into(), YearWindow::new(2001, 2005), &recs).unwrap();
        assert!(file.slot(Slot::BPublications).records.is_empty());
        assert_eq!(warnings, vec![DraftWarning::EmptyOverviews]);
    }

    #[test]
    fn personnel_total() {
        let recs = vec![
            personnel("a", "ann", 2004, 1.0),
            personnel("b", "bob", 2004, 0.5),
            personnel("c", "cid", 2005, 1.0),
            personnel("d", "dee", 2005, 1.0),
            personnel("e", "eve", 2003, 0.5),
            // an earlier row for ann is superseded by the later one
            personnel("a0", "ann", 2002, 0.2),
        ];
        let (file, _) = draft_file(&"T".into(), YearWindow::new(2001, 2005), &recs).unwrap();
        let ov = file.personnel_overview();
        assert_eq!(ov.headcount, 5);
        assert!((ov.total_fte - 4.0).abs() < 1e-12);
    }

    #[test]
    fn merge_text_sets_provenance() {
        let (file, _) = draft_file(&"T".into(), YearWindow::new(2001, 2005), &[]).unwrap();
        let merged = merge_delta(&file, &text_delta("A.V", "Strong methods; thin funding.")).unwrap();
        assert_eq!(merged.slot(Slot::ASwot).provenance, Provenance::TeamSupplied);
        assert_eq!(file.slot(Slot::ASwot).provenance, Provenance::Empty);
    }

    #[test]
    fn unknown_slot() {
        let (file, _) = draft_file(&"T".into(), YearWindow::new(2001, 2005), &[]).unwrap();
        assert_eq!(merge_delta(&file, &text_delta("Z", "x")), Err(DossierError::UnknownSlot("Z".into())));
    }

    #[test]
    fn core_publication_limits() {
        let recs: Vec<_> = (0..6).map(|i| publication(&format!("p{i}"), "T", 2003, "other")).collect();
        let (file, _) = draft_file(&"T".into(), YearWindow::new(2001, 2005), &recs).unwrap();
        let pick = |ids: &[usize]| DraftDelta {
            team_id: "T".into(),
            slot: "A.VIII".into(),
            content: DeltaContent::AppendRecords { records: ids.iter().map(|i| recs[*i].clone()).collect() },
            author: "T".into(),
        };
        let five = merge_delta(&file, &pick(&[0, 1, 2, 3, 4])).unwrap();
        assert_eq!(five.slot(Slot::ACorePublications).records.len(), 5);
        assert_eq!(merge_delta(&five, &pick(&[5])), Err(DossierError::CoreLimitExceeded(6)));

        let stranger = publication("x", "T", 2003, "other");
        let d = DraftDelta {
            team_id: "T".into(),
            slot: "A.VIII".into(),
            content: DeltaContent::AppendRecords { records: vec![stranger] },
            author: "T".into(),
        };
        assert_eq!(merge_delta(&file, &d), Err(DossierError::CoreNotListed("x".into())));
    }

    #[test]
    fn store_records_cannot_be_removed() {
        let recs = vec![publication("p1", "T", 2003, "other")];
        let (file, _) = draft_file(&"T".into(), YearWindow::new(2001, 2005), &recs).unwrap();
        let d = DraftDelta {
            team_id: "T".into(),
            slot: "B.I".into(),
            content: DeltaContent::RemoveRecords { ids: vec!["p1".into()] },
            author: "T".into(),
        };
        assert_eq!(merge_delta(&file, &d), Err(DossierError::DeletionForbidden(vec!["p1".into()])));
    }

    #[test]
    fn text_into_overview_slot_is_rejected() {
        let (file, _) = draft_file(&"T".into(), YearWindow::new(2001, 2005), &[]).unwrap();
        assert!(matches!(merge_delta(&file, &text_delta("B.I", "x")), Err(DossierError::SlotKindMismatch(_))));
    }

    #[test]
    fn incomplete_render_lists_empty_slots() {
        let (file, _) = draft_file(&"T".into(), YearWindow::new(2001, 2005), &[]).unwrap();
        match render_dossier(&file, false) {
            Err(DossierError::IncompleteDossier(slots)) => assert_eq!(slots.len(), Slot::ALL.len()),
            other => panic!("{other:?}"),
        }
        let doc = render_dossier(&file, true).unwrap();
        assert_eq!(doc.headings(), DOSSIER_HEADINGS.to_vec());
    }
}
