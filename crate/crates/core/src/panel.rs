//! Panel lifecycle: conflict-of-interest screening, team rejections and the
//! composition checks a panel must pass before it is accepted.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{
    ActivityPayload, ActivityRecord, Discipline, DisciplineId, Expert, ExpertId, ExpertStatus, Team, TeamId, YearWindow,
};

/// Links that predate the evaluation window by up to this many years still count.
pub const LINK_LOOKBACK_YEARS: u32 = 3;

/// Relative tolerance around "one expert per team" before a size warning.
pub const PANEL_SIZE_TOLERANCE: f64 = 0.3;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PanelError {
    #[error("IntegrityError: {0}")]
    Integrity(String),
    #[error("JustificationRequired: a team must state why it rejects expert {0}")]
    JustificationRequired(ExpertId),
    #[error("PhaseViolation: expert {expert} cannot move from {from:?} to {to:?}")]
    PhaseViolation { expert: ExpertId, from: ExpertStatus, to: ExpertStatus },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LinkKind {
    SameInstitution,
    Copublication,
    Coproject,
    Supervision,
    OtherDeclared,
}

impl fmt::Display for LinkKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LinkKind::SameInstitution => "same_institution",
            LinkKind::Copublication => "copublication",
            LinkKind::Coproject => "coproject",
            LinkKind::Supervision => "supervision",
            LinkKind::OtherDeclared => "other_declared",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LinkTarget {
    Team(TeamId),
    Institution(String),
}

impl fmt::Display for LinkTarget {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LinkTarget::Team(t) => write!(f, "team:{t}"),
            LinkTarget::Institution(i) => write!(f, "institution:{i}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Ruling {
    Pending,
    Cleared,
    Disqualified,
}

impl fmt::Display for Ruling {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Ruling::Pending => "pending",
            Ruling::Cleared => "cleared",
            Ruling::Disqualified => "disqualified",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ConflictLink {
    pub expert_id: ExpertId,
    pub target: LinkTarget,
    pub kind: LinkKind,
    pub evidence: String,
    pub window: YearWindow,
    /// Coordinator ruling. Ignored for `same_institution`, which always disqualifies.
    pub ruling: Ruling,
}

impl ConflictLink {
    /// Identity of a link irrespective of evidence text and ruling.
    pub fn key(&self) -> (ExpertId, LinkTarget, LinkKind) {
        (self.expert_id.clone(), self.target.clone(), self.kind)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(tag = "reason", rename_all = "snake_case")]
pub enum DisqualifyReason {
    SameInstitution,
    Ruled { kind: LinkKind, target: LinkTarget },
}

impl fmt::Display for DisqualifyReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DisqualifyReason::SameInstitution => f.write_str("same_institution"),
            DisqualifyReason::Ruled { kind, target } => write!(f, "{kind}->{target}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "result", rename_all = "snake_case")]
pub enum ScreeningResult {
    Clear,
    Flagged { pending: Vec<ConflictLink> },
    Disqualified { reasons: Vec<DisqualifyReason> },
}

impl ScreeningResult {
    /// Clear < Flagged < Disqualified.
    pub fn severity(&self) -> u8 {
        match self {
            ScreeningResult::Clear => 0,
            ScreeningResult::Flagged { .. } => 1,
            ScreeningResult::Disqualified { .. } => 2,
        }
    }

    pub fn is_clear(&self) -> bool {
        matches!(self, ScreeningResult::Clear)
    }
}

/// What screening needs to know about the evaluation.
#[derive(Debug, Clone)]
pub struct ScreeningContext<'a> {
    pub institution: &'a str,
    pub window: YearWindow,
    pub teams: &'a BTreeSet<TeamId>,
}

impl ScreeningContext<'_> {
    pub fn detection_window(&self) -> YearWindow {
        self.window.extended_back(LINK_LOOKBACK_YEARS)
    }
}

/// Screens one expert against the recorded conflict links.
///
/// Same-institution affiliation disqualifies unconditionally. Other links
/// inside the detection window disqualify when ruled so, flag the expert
/// while pending, and drop out only once a coordinator clears them.
pub fn screen_expert(
    expert: &Expert,
    links: &[ConflictLink],
    ctx: &ScreeningContext<'_>,
) -> Result<ScreeningResult, PanelError> {
    if !matches!(expert.status, ExpertStatus::Suggested | ExpertStatus::Invited | ExpertStatus::Confirmed) {
        return Err(PanelError::PhaseViolation {
            expert: expert.id.clone(),
            from: expert.status,
            to: ExpertStatus::Invited,
        });
    }
    let detect = ctx.detection_window();
    let mut reasons = BTreeSet::new();
    let mut pending = BTreeSet::new();

    if same_institution(&expert.affiliation, ctx.institution) {
        reasons.insert(DisqualifyReason::SameInstitution);
    }
    for link in links.iter().filter(|l| l.expert_id == expert.id) {
        if let LinkTarget::Team(t) = &link.target {
            if !ctx.teams.contains(t) {
                return Err(PanelError::Integrity(format!(
                    "conflict link for expert {} references unknown team {t}",
                    expert.id
                )));
            }
        }
        if link.kind == LinkKind::SameInstitution {
            reasons.insert(DisqualifyReason::SameInstitution);
            continue;
        }
        if !link.window.overlaps(&detect) {
            continue;
        }
        match link.ruling {
            Ruling::Disqualified => {
                reasons.insert(DisqualifyReason::Ruled { kind: link.kind, target: link.target.clone() });
            }
            Ruling::Pending => {
                pending.insert(link.clone());
            }
            Ruling::Cleared => {}
        }
    }

    Ok(if !reasons.is_empty() {
        ScreeningResult::Disqualified { reasons: reasons.into_iter().collect() }
    } else if !pending.is_empty() {
        ScreeningResult::Flagged { pending: pending.into_iter().collect() }
    } else {
        ScreeningResult::Clear
    })
}

fn same_institution(a: &str, b: &str) -> bool {
    let norm = |s: &str| s.split_whitespace().collect::<Vec<_>>().join(" ").to_lowercase();
    norm(a) == norm(b)
}

/// Derives pending links from activity records that name the expert as a
/// coauthor or project partner within the detection window.
pub fn detect_links(expert: &Expert, activities: &[ActivityRecord], window: YearWindow) -> Vec<ConflictLink> {
    let detect = window.extended_back(LINK_LOOKBACK_YEARS);
    let name = expert.name.trim().to_lowercase();
    let mut found: BTreeMap<(TeamId, LinkKind), Vec<&ActivityRecord>> = BTreeMap::new();
    for rec in activities.iter().filter(|r| detect.contains(r.year)) {
        let (people, kind) = match &rec.payload {
            ActivityPayload::Publication { coauthors, .. } => (coauthors, LinkKind::Copublication),
            ActivityPayload::Project { partners, .. } => (partners, LinkKind::Coproject),
            _ => continue,
        };
        if people.iter().any(|p| p.trim().to_lowercase() == name) {
            found.entry((rec.team_id.clone(), kind)).or_default().push(rec);
        }
    }
    found
        .into_iter()
        .map(|((team, kind), recs)| {
            let years = recs.iter().map(|r| r.year);
            let window = YearWindow::new(years.clone().min().unwrap(), years.max().unwrap());
            let ids: Vec<_> = recs.iter().map(|r| r.id.as_str()).collect();
            ConflictLink {
                expert_id: expert.id.clone(),
                target: LinkTarget::Team(team),
                kind,
                evidence: format!("records {}", ids.join(", ")),
                window,
                ruling: Ruling::Pending,
            }
        })
        .collect()
}

/// Immutable audit entry written when a team rejects an expert.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RejectionRecord {
    pub expert_id: ExpertId,
    pub team_id: TeamId,
    pub justification: String,
}

/// A team rejects a suggested expert. The justification is mandatory.
pub fn reject_expert(
    expert: &Expert,
    team: &Team,
    justification: &str,
) -> Result<(Expert, RejectionRecord), PanelError> {
    if justification.trim().is_empty() {
        return Err(PanelError::JustificationRequired(expert.id.clone()));
    }
    let updated = transition(expert, ExpertStatus::Rejected)?;
    let record = RejectionRecord {
        expert_id: expert.id.clone(),
        team_id: team.id.clone(),
        justification: justification.to_owned(),
    };
    Ok((updated, record))
}

/// Moves an expert along suggested -> (rejected | invited) -> confirmed.
pub fn transition(expert: &Expert, to: ExpertStatus) -> Result<Expert, PanelError> {
    if !expert.status.can_transition_to(to) {
        return Err(PanelError::PhaseViolation { expert: expert.id.clone(), from: expert.status, to });
    }
    let mut e = expert.clone();
    e.status = to;
    Ok(e)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Severity {
    Error,
    Warning,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FindingKind {
    NotConfirmed,
    HomeInstitution,
    UnresolvedScreening,
    FieldNotCovered,
    PanelSize,
    ForeignMinority,
    SingleCountry,
    IntegrityError,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Finding {
    pub severity: Severity,
    pub kind: FindingKind,
    pub message: String,
}

impl Finding {
    fn error(kind: FindingKind, message: String) -> Self {
        Self { severity: Severity::Error, kind, message }
    }

    fn warning(kind: FindingKind, message: String) -> Self {
        Self { severity: Severity::Warning, kind, message }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PanelReport {
    pub panel: Vec<ExpertId>,
    pub findings: Vec<Finding>,
}

impl PanelReport {
    pub fn errors(&self) -> impl Iterator<Item = &Finding> {
        self.findings.iter().filter(|f| f.severity == Severity::Error)
    }

    pub fn error_count(&self) -> usize {
        self.errors().count()
    }

    pub fn is_accepted(&self) -> bool {
        self.error_count() == 0
    }
}

/// Who sits on the panel of a discipline, and which expert leads each team's session.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PanelAssignment {
    pub discipline_id: DisciplineId,
    pub members: Vec<ExpertId>,
    #[serde(default)]
    pub lead_experts: BTreeMap<TeamId, ExpertId>,
    /// Only used when the discipline runs per-team panels.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub per_team: BTreeMap<TeamId, Vec<ExpertId>>,
}

pub struct PanelInput<'a> {
    pub experts: &'a [Expert],
    pub teams: &'a [Team],
    pub discipline: &'a Discipline,
    pub institution: &'a str,
    pub home_country: &'a str,
    pub screenings: &'a BTreeMap<ExpertId, ScreeningResult>,
    /// Required when `discipline.per_team_panels` is set.
    pub per_team: Option<&'a BTreeMap<TeamId, Vec<ExpertId>>>,
}

/// Inclusive bounds of the acceptable panel size for `teams` teams.
pub fn size_band(teams: usize) -> (usize, usize) {
    let t = teams as f64;
    (
        (t * (1.0 - PANEL_SIZE_TOLERANCE) - 1e-9).ceil() as usize,
        (t * (1.0 + PANEL_SIZE_TOLERANCE) - 1e-9).ceil() as usize,
    )
}

/// Checks a proposed panel against the composition rules. Findings are
/// values; the result does not depend on the order of the inputs.
pub fn validate_panel(input: &PanelInput<'_>) -> PanelReport {
    let mut findings = BTreeSet::new();
    let mut experts: Vec<&Expert> = input.experts.iter().collect();
    experts.sort_by(|a, b| a.id.cmp(&b.id));
    experts.dedup_by(|a, b| a.id == b.id);

    let mut panel = Vec::new();
    for e in &experts {
        let mut excluded = false;
        if e.status != ExpertStatus::Confirmed {
            findings.insert(Finding::error(
                FindingKind::NotConfirmed,
                format!("expert {} has status {:?}", e.id, e.status),
            ));
            excluded = e.status == ExpertStatus::Rejected;
        }
        if same_institution(&e.affiliation, input.institution) {
            findings.insert(Finding::error(
                FindingKind::HomeInstitution,
                format!("expert {} belongs to the evaluated institution", e.id),
            ));
            excluded = true;
        }
        match input.screenings.get(&e.id) {
            Some(ScreeningResult::Clear) => {}
            Some(ScreeningResult::Flagged { pending }) => {
                findings.insert(Finding::error(
                    FindingKind::UnresolvedScreening,
                    format!("expert {} has {} pending conflict link(s)", e.id, pending.len()),
                ));
            }
            Some(ScreeningResult::Disqualified { reasons }) => {
                let r: Vec<_> = reasons.iter().map(|r| r.to_string()).collect();
                findings.insert(Finding::error(
                    FindingKind::UnresolvedScreening,
                    format!("expert {} is disqualified ({})", e.id, r.join(", ")),
                ));
                excluded = true;
            }
            None => {
                findings.insert(Finding::error(
                    FindingKind::UnresolvedScreening,
                    format!("expert {} has not been screened", e.id),
                ));
            }
        }
        if !excluded {
            panel.push(e.id.clone());
        }
    }

    let mut teams: Vec<&Team> = input.teams.iter().collect();
    teams.sort_by(|a, b| a.id.cmp(&b.id));
    teams.dedup_by(|a, b| a.id == b.id);

    if input.discipline.per_team_panels {
        let by_id: BTreeMap<&ExpertId, &Expert> = experts.iter().map(|e| (&e.id, *e)).collect();
        for team in &teams {
            let assigned = input.per_team.and_then(|m| m.get(&team.id));
            let Some(assigned) = assigned else {
                findings.insert(Finding::error(
                    FindingKind::FieldNotCovered,
                    format!("team {} has no assigned experts", team.id),
                ));
                continue;
            };
            let mut members = Vec::new();
            for id in assigned {
                match by_id.get(id) {
                    Some(e) => members.push(*e),
                    None => {
                        findings.insert(Finding::error(
                            FindingKind::IntegrityError,
                            format!("team {} is assigned unknown expert {id}", team.id),
                        ));
                    }
                }
            }
            coverage(&[team], &members, &mut findings);
        }
    } else {
        coverage(&teams, &experts, &mut findings);
        let (lo, hi) = size_band(teams.len());
        if !teams.is_empty() && (experts.len() < lo || experts.len() > hi) {
            findings.insert(Finding::warning(
                FindingKind::PanelSize,
                format!("{} experts for {} teams, expected between {lo} and {hi}", experts.len(), teams.len()),
            ));
        }
    }

    let home = input.home_country.trim().to_ascii_uppercase();
    let foreign = experts.iter().filter(|e| e.country.trim().to_ascii_uppercase() != home).count();
    if !input.discipline.requires_national_experts && !experts.is_empty() && 2 * foreign <= experts.len() {
        findings.insert(Finding::error(
            FindingKind::ForeignMinority,
            format!("only {foreign} of {} experts are foreign", experts.len()),
        ));
    }
    let countries: BTreeSet<String> = experts.iter().map(|e| e.country.trim().to_ascii_uppercase()).collect();
    if countries.len() < 2 {
        findings
            .insert(Finding::warning(FindingKind::SingleCountry, format!("{} country represented", countries.len())));
    }

    PanelReport { panel, findings: findings.into_iter().collect() }
}

fn coverage(teams: &[&Team], experts: &[&Expert], findings: &mut BTreeSet<Finding>) {
    let domains: BTreeSet<&str> = experts.iter().flat_map(|e| e.domains.iter().map(String::as_str)).collect();
    for team in teams {
        for field in &team.fields {
            if !domains.contains(field.as_str()) {
                findings.insert(Finding::error(
                    FindingKind::FieldNotCovered,
                    format!("field {field} of team {} is not covered by any expert", team.id),
                ));
            }
        }
    }
}

/// Screening evidence as a CSV audit table: expert, kind, target, ruling.
pub fn screening_audit_csv(links: &[ConflictLink]) -> Result<String, csv::Error> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["expert", "kind", "target", "ruling", "window", "evidence"])?;
    let mut sorted: Vec<&ConflictLink> = links.iter().collect();
    sorted.sort();
    for l in sorted {
        let ruling = if l.kind == LinkKind::SameInstitution { Ruling::Disqualified } else { l.ruling };
        w.write_record([
            l.expert_id.as_str(),
            &l.kind.to_string(),
            &l.target.to_string(),
            &ruling.to_string(),
            &l.window.to_string(),
            &l.evidence,
        ])?;
    }
    let bytes = w.into_inner().map_err(|e| e.into_error())?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}
