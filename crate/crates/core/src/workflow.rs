//! Phase-gated workflow of one evaluation project, and the multi-year
//! evaluation cycle planner.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use chrono::{Days, Months, NaiveDate};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{DisciplineId, TeamId};

/// Default number of days a team may react after its debriefing.
pub const DEFAULT_REACTION_DAYS: u32 = 14;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum WorkflowError {
    #[error("PhaseViolation: cannot move from {from} to {to}")]
    PhaseViolation { from: Phase, to: Phase },
    #[error("GateUnsatisfied: missing {}", .0.iter().map(|m| m.to_string()).collect::<Vec<_>>().join(", "))]
    GateUnsatisfied(Vec<MissingArtifact>),
    #[error("ReplayMismatch: audit entry {index} does not continue from {expected}")]
    ReplayMismatch { index: usize, expected: Phase },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Phase {
    P0,
    P1,
    P2,
    P3,
    P4,
    P5,
    P6,
    P7,
    P8,
}

impl Phase {
    pub const ALL: [Phase; 9] =
        [Phase::P0, Phase::P1, Phase::P2, Phase::P3, Phase::P4, Phase::P5, Phase::P6, Phase::P7, Phase::P8];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn next(self) -> Option<Phase> {
        Phase::ALL.get(self.index() + 1).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            Phase::P0 => "Start-up",
            Phase::P1 => "Introductory meeting",
            Phase::P2 => "Panel composition",
            Phase::P3 => "Dossier compilation",
            Phase::P4 => "Forms overview",
            Phase::P5 => "Evaluation meeting",
            Phase::P6 => "Reports",
            Phase::P7 => "Debriefing",
            Phase::P8 => "Council report",
        }
    }
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?} {}", self, self.name())
    }
}

impl std::str::FromStr for Phase {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let t = s.trim();
        Phase::ALL
            .iter()
            .copied()
            .find(|p| format!("{p:?}").eq_ignore_ascii_case(t) || p.name().eq_ignore_ascii_case(t))
            .ok_or_else(|| format!("unknown phase {s:?}"))
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TeamFormEvidence {
    pub validated_forms: usize,
    pub lead_expert_returned: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DebriefEvidence {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub debriefed_on: Option<NaiveDate>,
    #[serde(default)]
    pub acknowledged: bool,
}

/// What has been produced so far; every gate is a pure predicate over this.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArtifactRegistry {
    #[serde(default)]
    pub teams: BTreeSet<TeamId>,
    #[serde(default)]
    pub intro_documents_sent: bool,
    /// Number of error findings of the latest panel report, if one exists.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub panel_report_errors: Option<usize>,
    #[serde(default)]
    pub invitations_sent: bool,
    #[serde(default)]
    pub dossiers_complete: BTreeMap<TeamId, bool>,
    #[serde(default)]
    pub forms: BTreeMap<TeamId, TeamFormEvidence>,
    #[serde(default)]
    pub meeting_minutes: bool,
    #[serde(default)]
    pub reports_approved: bool,
    #[serde(default)]
    pub debriefs: BTreeMap<TeamId, DebriefEvidence>,
    #[serde(default = "default_reaction_days")]
    pub reaction_window_days: u32,
}

fn default_reaction_days() -> u32 {
    DEFAULT_REACTION_DAYS
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(tag = "artifact", content = "team", rename_all = "snake_case")]
pub enum MissingArtifact {
    IntroDocuments,
    PanelReport,
    PanelErrors(usize),
    Invitations,
    Dossier(TeamId),
    Forms(TeamId),
    LeadExpertForm(TeamId),
    MeetingMinutes,
    ApprovedReports,
    Debrief(TeamId),
}

impl fmt::Display for MissingArtifact {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MissingArtifact::IntroDocuments => f.write_str("intro_documents"),
            MissingArtifact::PanelReport => f.write_str("panel_report"),
            MissingArtifact::PanelErrors(n) => write!(f, "panel_report({n} errors)"),
            MissingArtifact::Invitations => f.write_str("invitations"),
            MissingArtifact::Dossier(t) => write!(f, "dossier:{t}"),
            MissingArtifact::Forms(t) => write!(f, "forms:{t}"),
            MissingArtifact::LeadExpertForm(t) => write!(f, "lead_expert_form:{t}"),
            MissingArtifact::MeetingMinutes => f.write_str("meeting_minutes"),
            MissingArtifact::ApprovedReports => f.write_str("approved_reports"),
            MissingArtifact::Debrief(t) => write!(f, "debrief:{t}"),
        }
    }
}

/// Gate for entering `to`. Returns everything still missing.
pub fn gate(to: Phase, evidence: &ArtifactRegistry, today: NaiveDate) -> Vec<MissingArtifact> {
    let mut missing = Vec::new();
    match to {
        Phase::P0 => {}
        Phase::P1 => {
            if !evidence.intro_documents_sent {
                missing.push(MissingArtifact::IntroDocuments);
            }
        }
        Phase::P2 => match evidence.panel_report_errors {
            None => missing.push(MissingArtifact::PanelReport),
            Some(0) => {}
            Some(n) => missing.push(MissingArtifact::PanelErrors(n)),
        },
        Phase::P3 => {
            if !evidence.invitations_sent {
                missing.push(MissingArtifact::Invitations);
            }
        }
        Phase::P4 => {
            for t in &evidence.teams {
                if !evidence.dossiers_complete.get(t).copied().unwrap_or(false) {
                    missing.push(MissingArtifact::Dossier(t.clone()));
                }
            }
        }
        Phase::P5 => {
            for t in &evidence.teams {
                let f = evidence.forms.get(t).cloned().unwrap_or_default();
                if f.validated_forms == 0 {
                    missing.push(MissingArtifact::Forms(t.clone()));
                }
                if !f.lead_expert_returned {
                    missing.push(MissingArtifact::LeadExpertForm(t.clone()));
                }
            }
        }
        Phase::P6 => {
            if !evidence.meeting_minutes {
                missing.push(MissingArtifact::MeetingMinutes);
            }
        }
        Phase::P7 => {
            if !evidence.reports_approved {
                missing.push(MissingArtifact::ApprovedReports);
            }
        }
        Phase::P8 => {
            for t in &evidence.teams {
                let d = evidence.debriefs.get(t).cloned().unwrap_or_default();
                let expired = d
                    .debriefed_on
                    .and_then(|day| day.checked_add_days(Days::new(evidence.reaction_window_days as u64)))
                    .is_some_and(|end| today >= end);
                if !(d.acknowledged || expired) {
                    missing.push(MissingArtifact::Debrief(t.clone()));
                }
            }
        }
    }
    missing
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TimingWarning {
    /// The transition happened after the project's deadline.
    PastDeadline,
    /// The project has been running for more than a year.
    OverOneYear,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuditEntry {
    pub from: Phase,
    pub to: Phase,
    pub on: NaiveDate,
    /// Evidence that satisfied the gate, as recorded at transition time.
    pub evidence: ArtifactRegistry,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<TimingWarning>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WorkflowState {
    pub discipline_id: Option<DisciplineId>,
    phase: Phase,
    pub started_at: NaiveDate,
    pub deadline: NaiveDate,
    audit: Vec<AuditEntry>,
}

impl WorkflowState {
    /// New project in P0. The deadline defaults to one year after the start.
    pub fn start(discipline_id: Option<DisciplineId>, started_at: NaiveDate, deadline: Option<NaiveDate>) -> Self {
        Self {
            discipline_id,
            phase: Phase::P0,
            started_at,
            deadline: deadline.unwrap_or_else(|| one_year_after(started_at)),
            audit: Vec::new(),
        }
    }

    pub fn phase(&self) -> Phase {
        self.phase
    }

    pub fn audit_log(&self) -> &[AuditEntry] {
        &self.audit
    }

    /// A deadline more than one year after the start deserves a warning.
    pub fn deadline_exceeds_one_year(&self) -> bool {
        self.deadline > one_year_after(self.started_at)
    }

    /// Moves to `to`, which must be the next phase and whose gate must hold.
    pub fn advance(
        &self,
        to: Phase,
        evidence: &ArtifactRegistry,
        on: NaiveDate,
    ) -> Result<WorkflowState, WorkflowError> {
        if self.phase.next() != Some(to) {
            return Err(WorkflowError::PhaseViolation { from: self.phase, to });
        }
        let missing = gate(to, evidence, on);
        if !missing.is_empty() {
            return Err(WorkflowError::GateUnsatisfied(missing));
        }
        let mut warnings = Vec::new();
        if on > self.deadline {
            warnings.push(TimingWarning::PastDeadline);
        }
        if on > one_year_after(self.started_at) {
            warnings.push(TimingWarning::OverOneYear);
        }
        let mut next = self.clone();
        next.phase = to;
        next.audit.push(AuditEntry { from: self.phase, to, on, evidence: evidence.clone(), warnings });
        Ok(next)
    }

    /// Rebuilds a state by re-applying every logged transition through its gate.
    pub fn replay(
        discipline_id: Option<DisciplineId>,
        started_at: NaiveDate,
        deadline: NaiveDate,
        log: &[AuditEntry],
    ) -> Result<WorkflowState, WorkflowError> {
        let mut state = WorkflowState::start(discipline_id, started_at, Some(deadline));
        for (index, entry) in log.iter().enumerate() {
            if entry.from != state.phase {
                return Err(WorkflowError::ReplayMismatch { index, expected: state.phase });
            }
            state = state.advance(entry.to, &entry.evidence, entry.on)?;
        }
        Ok(state)
    }
}

fn one_year_after(d: NaiveDate) -> NaiveDate {
    d.checked_add_months(Months::new(12)).unwrap_or(d)
}

/// Assignment of disciplines to years of an evaluation cycle.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CyclePlan {
    pub horizon: u32,
    pub capacity: u32,
    pub assignments: BTreeMap<DisciplineId, u32>,
    #[serde(default)]
    pub blackouts: BTreeSet<(DisciplineId, u32)>,
}

impl CyclePlan {
    pub fn year(&self, year: u32) -> Vec<&DisciplineId> {
        self.assignments.iter().filter(|(_, y)| **y == year).map(|(d, _)| d).collect()
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PlanError {
    #[error("Infeasible: disciplines {} cannot all be placed", .conflict.iter().map(|d| d.as_str()).collect::<Vec<_>>().join(", "))]
    Infeasible { conflict: Vec<DisciplineId> },
    #[error("InvalidInput: {0}")]
    InvalidInput(String),
}

/// Default cycle length in years and evaluations per year.
pub const DEFAULT_HORIZON: u32 = 8;
pub const DEFAULT_CAPACITY: u32 = 2;

fn allowed_years(d: &DisciplineId, horizon: u32, blackouts: &BTreeSet<(DisciplineId, u32)>) -> Vec<u32> {
    (0..horizon).filter(|y| !blackouts.contains(&(d.clone(), *y))).collect()
}

/// Whether the disciplines in `subset` fit at all (bipartite b-matching by
/// augmenting paths).
fn fits(subset: &[&DisciplineId], horizon: u32, capacity: u32, blackouts: &BTreeSet<(DisciplineId, u32)>) -> bool {
    let allowed: Vec<Vec<u32>> = subset.iter().map(|d| allowed_years(d, horizon, blackouts)).collect();
    let slots = horizon as usize * capacity as usize;
    let slot_year = |s: usize| (s / capacity as usize) as u32;
    let mut owner: Vec<Option<usize>> = vec![None; slots];

    fn augment(
        d: usize,
        allowed: &[Vec<u32>],
        owner: &mut [Option<usize>],
        seen: &mut [bool],
        slot_year: &dyn Fn(usize) -> u32,
    ) -> bool {
        for s in 0..owner.len() {
            if seen[s] || !allowed[d].contains(&slot_year(s)) {
                continue;
            }
            seen[s] = true;
            if owner[s].is_none() || augment(owner[s].unwrap(), allowed, owner, seen, slot_year) {
                owner[s] = Some(d);
                return true;
            }
        }
        false
    }

    (0..subset.len()).all(|d| {
        let mut seen = vec![false; slots];
        augment(d, &allowed, &mut owner, &mut seen, &slot_year)
    })
}

/// Plans the cycle by backtracking over disciplines (most constrained first,
/// ties in input order) and years (earliest first). When no plan exists the
/// error carries an irreducible conflicting subset.
pub fn plan_cycle(
    disciplines: &[DisciplineId],
    horizon: u32,
    capacity: u32,
    blackouts: &BTreeSet<(DisciplineId, u32)>,
) -> Result<CyclePlan, PlanError> {
    let unique: BTreeSet<&DisciplineId> = disciplines.iter().collect();
    if unique.len() != disciplines.len() {
        return Err(PlanError::InvalidInput("duplicate discipline".into()));
    }
    if horizon == 0 || capacity == 0 {
        if disciplines.is_empty() {
            return Ok(CyclePlan { horizon, capacity, assignments: BTreeMap::new(), blackouts: blackouts.clone() });
        }
        return Err(PlanError::Infeasible { conflict: vec![disciplines[0].clone()] });
    }
    let all: Vec<&DisciplineId> = disciplines.iter().collect();
    if !fits(&all, horizon, capacity, blackouts) {
        return Err(PlanError::Infeasible { conflict: conflict_witness(&all, horizon, capacity, blackouts) });
    }

    let allowed: Vec<Vec<u32>> = disciplines.iter().map(|d| allowed_years(d, horizon, blackouts)).collect();
    let mut order: Vec<usize> = (0..disciplines.len()).collect();
    order.sort_by_key(|&i| (allowed[i].len(), i));
    let mut load = vec![0u32; horizon as usize];
    let mut chosen = vec![0u32; disciplines.len()];

    fn search(
        k: usize,
        order: &[usize],
        allowed: &[Vec<u32>],
        load: &mut [u32],
        chosen: &mut [u32],
        capacity: u32,
    ) -> bool {
        let Some(&d) = order.get(k) else { return true };
        for &y in &allowed[d] {
            if load[y as usize] >= capacity {
                continue;
            }
            load[y as usize] += 1;
            chosen[d] = y;
            if search(k + 1, order, allowed, load, chosen, capacity) {
                return true;
            }
            load[y as usize] -= 1;
        }
        false
    }

    if !search(0, &order, &allowed, &mut load, &mut chosen, capacity) {
        // unreachable when the matching check passed
        return Err(PlanError::Infeasible { conflict: conflict_witness(&all, horizon, capacity, blackouts) });
    }
    Ok(CyclePlan {
        horizon,
        capacity,
        assignments: disciplines.iter().cloned().zip(chosen).collect(),
        blackouts: blackouts.clone(),
    })
}

/// Greedy deletion: drop each discipline whose removal keeps the rest infeasible.
fn conflict_witness(
    all: &[&DisciplineId],
    horizon: u32,
    capacity: u32,
    blackouts: &BTreeSet<(DisciplineId, u32)>,
) -> Vec<DisciplineId> {
    let mut current: Vec<&DisciplineId> = all.to_vec();
    let mut i = 0;
    while i < current.len() {
        let mut trial = current.clone();
        trial.remove(i);
        if !fits(&trial, horizon, capacity, blackouts) {
            current = trial;
        } else {
            i += 1;
        }
    }
    current.into_iter().cloned().collect()
}

/// Independent check of every cycle-plan invariant.
pub fn verify_plan(plan: &CyclePlan, disciplines: &[DisciplineId]) -> Result<(), String> {
    let expected: BTreeSet<&DisciplineId> = disciplines.iter().collect();
    let got: BTreeSet<&DisciplineId> = plan.assignments.keys().collect();
    if expected != got {
        return Err("plan does not assign exactly the given disciplines".into());
    }
    let mut per_year: BTreeMap<u32, u32> = BTreeMap::new();
    for (d, y) in &plan.assignments {
        if *y >= plan.horizon {
            return Err(format!("{d} assigned to year {y} beyond horizon {}", plan.horizon));
        }
        if plan.blackouts.contains(&(d.clone(), *y)) {
            return Err(format!("{d} assigned to blacked-out year {y}"));
        }
        *per_year.entry(*y).or_default() += 1;
    }
    if let Some((y, n)) = per_year.iter().find(|(_, n)| **n > plan.capacity) {
        return Err(format!("year {y} holds {n} disciplines, capacity {}", plan.capacity));
    }
    Ok(())
}

/// A conflict is genuine when its disciplines outnumber the free slots of the
/// years open to them (Hall's condition fails on the subset).
pub fn verify_conflict(
    conflict: &[DisciplineId],
    horizon: u32,
    capacity: u32,
    blackouts: &BTreeSet<(DisciplineId, u32)>,
) -> bool {
    let years: BTreeSet<u32> =
        conflict.iter().flat_map(|d| (0..horizon).filter(move |y| !blackouts.contains(&(d.clone(), *y)))).collect();
    !conflict.is_empty() && conflict.len() > years.len() * capacity as usize
}

#[cfg(test)]
mod tests {
    use super::*;

    fn day(s: &str) -> NaiveDate {
        s.parse().unwrap()
    }

    fn ids(n: usize) -> Vec<DisciplineId> {
        (0..n).map(|i| DisciplineId::new(format!("d{i:02}"))).collect()
    }

    #[test]
    fn phase_labels() {
        assert_eq!(Phase::P0.to_string(), "P0 Start-up");
        assert_eq!(Phase::P8.to_string(), "P8 Council report");
        assert_eq!("p3".parse::<Phase>().unwrap(), Phase::P3);
    }

    #[test]
    fn panel_gate() {
        let start = WorkflowState::start(None, day("2005-01-10"), None);
        let mut ev = ArtifactRegistry { intro_documents_sent: true, ..Default::default() };
        let p1 = start.advance(Phase::P1, &ev, day("2005-02-01")).unwrap();
        assert_eq!(
            p1.advance(Phase::P2, &ev, day("2005-03-01")),
            Err(WorkflowError::GateUnsatisfied(vec![MissingArtifact::PanelReport]))
        );
        ev.panel_report_errors = Some(0);
        let p2 = p1.advance(Phase::P2, &ev, day("2005-03-01")).unwrap();
        assert_eq!(p2.phase(), Phase::P2);
        assert_eq!(p2.audit_log().len(), 2);
    }

    #[test]
    fn incomplete_dossier_blocks() {
        let mut ev = ArtifactRegistry {
            intro_documents_sent: true,
            panel_report_errors: Some(0),
            invitations_sent: true,
            ..Default::default()
        };
        ev.teams.insert("teamX".into());
        ev.teams.insert("teamY".into());
        ev.dossiers_complete.insert("teamY".into(), true);
        let mut s = WorkflowState::start(None, day("2005-01-10"), None);
        for p in [Phase::P1, Phase::P2, Phase::P3] {
            s = s.advance(p, &ev, day("2005-03-01")).unwrap();
        }
        assert_eq!(
            s.advance(Phase::P4, &ev, day("2005-04-01")),
            Err(WorkflowError::GateUnsatisfied(vec![MissingArtifact::Dossier("teamX".into())]))
        );
        assert!(matches!(
            s.advance(Phase::P5, &ev, day("2005-04-01")),
            Err(WorkflowError::PhaseViolation { from: Phase::P3, to: Phase::P5 })
        ));
    }

    #[test]
    fn reaction_window_expiry() {
        let mut ev = ArtifactRegistry { reaction_window_days: 14, ..Default::default() };
        ev.teams.insert("t".into());
        ev.debriefs.insert("t".into(), DebriefEvidence { debriefed_on: Some(day("2005-10-01")), acknowledged: false });
        assert_eq!(gate(Phase::P8, &ev, day("2005-10-14")), vec![MissingArtifact::Debrief("t".into())]);
        assert!(gate(Phase::P8, &ev, day("2005-10-15")).is_empty());
    }

    #[test]
    fn one_year_warning() {
        let s = WorkflowState::start(None, day("2005-01-10"), None);
        let ev = ArtifactRegistry { intro_documents_sent: true, ..Default::default() };
        let late = s.advance(Phase::P1, &ev, day("2006-02-01")).unwrap();
        assert_eq!(late.audit_log()[0].warnings, vec![TimingWarning::PastDeadline, TimingWarning::OverOneYear]);
        let long = WorkflowState::start(None, day("2005-01-10"), Some(day("2006-06-01")));
        assert!(long.deadline_exceeds_one_year());
    }

    #[test]
    fn full_cycle_plan() {
        let d = ids(16);
        let plan = plan_cycle(&d, 8, 2, &BTreeSet::new()).unwrap();
        for y in 0..8 {
            assert_eq!(plan.year(y).len(), 2);
        }
        verify_plan(&plan, &d).unwrap();
    }

    #[test]
    fn pigeonhole_infeasible() {
        let d = ids(3);
        match plan_cycle(&d, 1, 2, &BTreeSet::new()) {
            Err(PlanError::Infeasible { conflict }) => {
                assert_eq!(conflict.len(), 3);
                assert!(verify_conflict(&conflict, 1, 2, &BTreeSet::new()));
            }
            other => panic!("{other:?}"),
        }
    }

    /// Brute force: try every assignment of the instance.
    fn exhaustive_feasible(d: &[DisciplineId], horizon: u32, capacity: u32, b: &BTreeSet<(DisciplineId, u32)>) -> bool {
        let n = d.len() as u32;
        let total = horizon.pow(n);
        (0..total).any(|mut code| {
            let mut load = vec![0; horizon as usize];
            for di in d {
                let y = code % horizon;
                code /= horizon;
                if b.contains(&(di.clone(), y)) {
                    return false;
                }
                load[y as usize] += 1;
            }
            load.iter().all(|l| *l <= capacity)
        })
    }

    #[test]
    fn blackout_infeasible() {
        let d = ids(2);
        let b: BTreeSet<_> = [(d[0].clone(), 0)].into_iter().collect();
        assert!(!exhaustive_feasible(&d, 1, 2, &b));
        match plan_cycle(&d, 1, 2, &b) {
            Err(PlanError::Infeasible { conflict }) => {
                assert_eq!(conflict, vec![d[0].clone()]);
                assert!(verify_conflict(&conflict, 1, 2, &b));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn planner_agrees_with_brute_force() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..300 {
            let n = rng.random_range(1..=5);
            let horizon = rng.random_range(1..=4);
            let capacity = rng.random_range(1..=2);
            let d = ids(n);
            let b: BTreeSet<_> = d
                .iter()
                .flat_map(|x| (0..horizon).map(move |y| (x.clone(), y)))
                .filter(|_| rng.random_bool(0.35))
                .collect();
            let truth = exhaustive_feasible(&d, horizon, capacity, &b);
            match plan_cycle(&d, horizon, capacity, &b) {
                Ok(plan) => {
                    assert!(truth);
                    verify_plan(&plan, &d).unwrap();
                }
                Err(PlanError::Infeasible { conflict }) => {
                    assert!(!truth);
                    assert!(verify_conflict(&conflict, horizon, capacity, &b));
                }
                Err(e) => panic!("{e}"),
            }
        }
    }
}
