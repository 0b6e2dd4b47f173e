//! File-backed project store: one pretty-printed JSON document per entity.
//!
//! ```text
//! project/
//!   config.json
//!   disciplines/<discipline>.json     Discipline
//!   teams/<team>.json                 Team
//!   experts/<expert>.json             Expert
//!   activities/<team>.json            [ActivityRecord]
//!   forms/<team>__<expert>.json       EvaluationForm
//!   bibliometrics/<team>.json         BibliometricRecord
//!   conflicts/<expert>.json           [ConflictLink]
//!   rejections/<expert>.json          [RejectionRecord], append-only
//!   deltas/<team>.json                [DraftDelta]
//!   panels/<discipline>.json          PanelAssignment
//!   comments/general-<disc>.json      [TaggedComment]
//!   comments/team-<team>.json         {section: text}
//!   texts/<discipline>.json           GlobalTexts
//!   state/<key>.json                  WorkflowState
//!   state/<key>.flags.json            ManualFlags
//! ```

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analytics::indicator_distributions;
use crate::dossier::{draft_file, merge_delta, DossierError, DraftDelta, EvaluationFile, DEFAULT_WINDOW_YEARS};
use crate::model::{
    ActivityRecord, BibliometricRecord, Discipline, DisciplineId, EvaluationForm, Expert, ExpertId, Team, TeamId,
    ValidatedForm, YearWindow,
};
use crate::panel::{
    screen_expert, validate_panel, ConflictLink, PanelAssignment, PanelInput, PanelReport, RejectionRecord,
    ScreeningContext, ScreeningResult,
};
use crate::report::{ConfidentialTokens, GlobalReportInput, GlobalTexts, PanelCounts, TeamReportSet, TeamSection};
use crate::scoring::{
    aggregate_team, collect_general_comments, rank_discipline, ScoreSummary, ScoringError, TaggedComment,
    WeightingPolicy,
};
use crate::workflow::{ArtifactRegistry, DebriefEvidence, TeamFormEvidence, WorkflowState, DEFAULT_REACTION_DAYS};

pub const LAYOUT_DIRS: [&str; 13] = [
    "disciplines",
    "teams",
    "experts",
    "activities",
    "forms",
    "bibliometrics",
    "conflicts",
    "rejections",
    "deltas",
    "panels",
    "comments",
    "texts",
    "state",
];

/// Workflow state key used when no discipline is given.
pub const PROJECT_STATE_KEY: &str = "project";

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("StoreCorrupt: {path}: {reason}")]
    StoreCorrupt { path: PathBuf, reason: String },
    #[error("StoreIo: {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("InvalidId: {0:?} cannot be used as a file name")]
    InvalidId(String),
    #[error("NotFound: {0}")]
    NotFound(String),
}

/// Project-wide settings kept in `config.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProjectSettings {
    pub institution: String,
    pub home_country: String,
    #[serde(default)]
    pub coordinator: String,
    /// Activity records must fall in `first_year..=last_year`.
    pub first_year: i32,
    pub last_year: i32,
    #[serde(default = "default_window")]
    pub window_years: u32,
    #[serde(default = "default_reaction")]
    pub reaction_days: u32,
    #[serde(default = "default_policy")]
    pub policy: String,
    #[serde(default)]
    pub seed: u64,
}

fn default_window() -> u32 {
    DEFAULT_WINDOW_YEARS
}

fn default_reaction() -> u32 {
    DEFAULT_REACTION_DAYS
}

fn default_policy() -> String {
    "linear".into()
}

impl Default for ProjectSettings {
    fn default() -> Self {
        Self {
            institution: "Home University".into(),
            home_country: "BE".into(),
            coordinator: String::new(),
            first_year: 1990,
            last_year: 2100,
            window_years: DEFAULT_WINDOW_YEARS,
            reaction_days: DEFAULT_REACTION_DAYS,
            policy: default_policy(),
            seed: 0,
        }
    }
}

impl ProjectSettings {
    /// The evaluation window: the last `window_years` years of the range.
    pub fn window(&self) -> YearWindow {
        YearWindow::ending_at(self.last_year, self.window_years)
    }

    pub fn weighting(&self) -> Result<WeightingPolicy, crate::scoring::ScoringError> {
        self.policy.parse()
    }
}

/// Workflow evidence that is recorded by hand rather than derived.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManualFlags {
    #[serde(default)]
    pub intro_documents_sent: bool,
    #[serde(default)]
    pub invitations_sent: bool,
    #[serde(default)]
    pub meeting_minutes: bool,
    #[serde(default)]
    pub reports_approved: bool,
    #[serde(default)]
    pub debriefs: BTreeMap<TeamId, DebriefEvidence>,
}

#[derive(Debug, Clone)]
pub struct ProjectStore {
    root: PathBuf,
}

fn check_id(id: &str) -> Result<&str, StoreError> {
    let ok = !id.is_empty()
        && !id.starts_with('.')
        && !id.contains("__")
        && id.chars().all(|c| c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.'));
    if ok {
        Ok(id)
    } else {
        Err(StoreError::InvalidId(id.to_owned()))
    }
}

fn path_hint(dir: &str, id: &str) -> PathBuf {
    Path::new(dir).join(format!("{id}.json"))
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> StoreError + '_ {
    move |source| StoreError::Io { path: path.to_owned(), source }
}

impl ProjectStore {
    /// Opens the project at `path`, creating the layout and a default
    /// `config.json` when missing.
    pub fn open(path: impl AsRef<Path>) -> Result<ProjectStore, StoreError> {
        let root = path.as_ref().to_owned();
        for d in LAYOUT_DIRS {
            let p = root.join(d);
            fs::create_dir_all(&p).map_err(io_err(&p))?;
        }
        let store = ProjectStore { root };
        let cfg = store.config_path();
        if !cfg.exists() {
            store.write_json(&cfg, &ProjectSettings::default())?;
        }
        Ok(store)
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn config_path(&self) -> PathBuf {
        self.root.join("config.json")
    }

    fn write_json<T: Serialize + ?Sized>(&self, path: &Path, value: &T) -> Result<(), StoreError> {
        let mut text = serde_json::to_string_pretty(value).expect("store values serialize");
        text.push('\n');
        fs::write(path, text).map_err(io_err(path))
    }

    fn read_json<T: DeserializeOwned>(&self, path: &Path) -> Result<T, StoreError> {
        let text = fs::read_to_string(path)
            .map_err(|e| StoreError::StoreCorrupt { path: path.to_owned(), reason: e.to_string() })?;
        serde_json::from_str(&text)
            .map_err(|e| StoreError::StoreCorrupt { path: path.to_owned(), reason: e.to_string() })
    }

    fn read_opt<T: DeserializeOwned>(&self, path: &Path) -> Result<Option<T>, StoreError> {
        if path.exists() {
            self.read_json(path).map(Some)
        } else {
            Ok(None)
        }
    }

    /// `*.json` files of a directory in name order, optionally by prefix.
    fn files(&self, dir: &str, prefix: &str) -> Result<Vec<PathBuf>, StoreError> {
        let d = self.root.join(dir);
        let mut out = Vec::new();
        for entry in fs::read_dir(&d).map_err(io_err(&d))? {
            let p = entry.map_err(io_err(&d))?.path();
            let name = p.file_name().and_then(|n| n.to_str()).unwrap_or_default();
            if name.ends_with(".json") && !name.ends_with(".flags.json") && name.starts_with(prefix) {
                out.push(p);
            }
        }
        out.sort();
        Ok(out)
    }

    fn load_all<T: DeserializeOwned>(&self, dir: &str, prefix: &str) -> Result<Vec<T>, StoreError> {
        self.files(dir, prefix)?.iter().map(|p| self.read_json(p)).collect()
    }

    fn path(&self, dir: &str, id: &str) -> Result<PathBuf, StoreError> {
        Ok(self.root.join(dir).join(format!("{}.json", check_id(id)?)))
    }

    pub fn settings(&self) -> Result<ProjectSettings, StoreError> {
        self.read_json(&self.config_path())
    }

    pub fn save_settings(&self, s: &ProjectSettings) -> Result<(), StoreError> {
        self.write_json(&self.config_path(), s)
    }

    pub fn save_discipline(&self, d: &Discipline) -> Result<(), StoreError> {
        self.write_json(&self.path("disciplines", d.id.as_str())?, d)
    }

    pub fn disciplines(&self) -> Result<Vec<Discipline>, StoreError> {
        self.load_all("disciplines", "")
    }

    pub fn save_team(&self, t: &Team) -> Result<(), StoreError> {
        self.write_json(&self.path("teams", t.id.as_str())?, t)
    }

    pub fn teams(&self) -> Result<Vec<Team>, StoreError> {
        self.load_all("teams", "")
    }

    pub fn save_expert(&self, e: &Expert) -> Result<(), StoreError> {
        self.write_json(&self.path("experts", e.id.as_str())?, e)
    }

    pub fn experts(&self) -> Result<Vec<Expert>, StoreError> {
        self.load_all("experts", "")
    }

    /// Replaces the activity records of `team`.
    pub fn save_activities(&self, team: &TeamId, records: &[ActivityRecord]) -> Result<(), StoreError> {
        self.write_json(&self.path("activities", team.as_str())?, records)
    }

    pub fn activities(&self) -> Result<Vec<ActivityRecord>, StoreError> {
        Ok(self.load_all::<Vec<ActivityRecord>>("activities", "")?.into_iter().flatten().collect())
    }

    fn form_path(&self, team: &TeamId, expert: &ExpertId) -> Result<PathBuf, StoreError> {
        Ok(self.root.join("forms").join(format!("{}__{}.json", check_id(team.as_str())?, check_id(expert.as_str())?)))
    }

    /// Stores a raw returned form. Invalid forms are refused.
    pub fn save_form(&self, form: &EvaluationForm) -> Result<PathBuf, StoreError> {
        let path = self.form_path(&form.team_id, &form.expert_id)?;
        let violations = crate::model::validate_form(form);
        if !violations.is_empty() {
            let v: Vec<String> = violations.iter().map(|v| v.to_string()).collect();
            return Err(StoreError::StoreCorrupt { path, reason: v.join("; ") });
        }
        self.write_json(&path, form)?;
        Ok(path)
    }

    /// All forms, validated. A file that fails validation is reported as
    /// corrupt with its path.
    pub fn forms(&self) -> Result<Vec<ValidatedForm>, StoreError> {
        let mut out = Vec::new();
        for p in self.files("forms", "")? {
            let raw: EvaluationForm = self.read_json(&p)?;
            let form = ValidatedForm::try_from(raw).map_err(|v| StoreError::StoreCorrupt {
                path: p.clone(),
                reason: v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join("; "),
            })?;
            out.push(form);
        }
        Ok(out)
    }

    pub fn form_count(&self) -> Result<usize, StoreError> {
        Ok(self.files("forms", "")?.len())
    }

    pub fn save_bibliometrics(&self, r: &BibliometricRecord) -> Result<(), StoreError> {
        self.write_json(&self.path("bibliometrics", r.team_id.as_str())?, r)
    }

    pub fn bibliometrics(&self) -> Result<Vec<BibliometricRecord>, StoreError> {
        self.load_all("bibliometrics", "")
    }

    pub fn save_conflicts(&self, expert: &ExpertId, links: &[ConflictLink]) -> Result<(), StoreError> {
        self.write_json(&self.path("conflicts", expert.as_str())?, links)
    }

    pub fn conflicts(&self) -> Result<Vec<ConflictLink>, StoreError> {
        Ok(self.load_all::<Vec<ConflictLink>>("conflicts", "")?.into_iter().flatten().collect())
    }

    /// Appends to the expert's rejection log. Earlier entries are never rewritten.
    pub fn append_rejection(&self, r: &RejectionRecord) -> Result<(), StoreError> {
        let path = self.path("rejections", r.expert_id.as_str())?;
        let mut log: Vec<RejectionRecord> = self.read_opt(&path)?.unwrap_or_default();
        log.push(r.clone());
        self.write_json(&path, &log)
    }

    pub fn rejections(&self) -> Result<Vec<RejectionRecord>, StoreError> {
        Ok(self.load_all::<Vec<RejectionRecord>>("rejections", "")?.into_iter().flatten().collect())
    }

    pub fn save_deltas(&self, team: &TeamId, deltas: &[DraftDelta]) -> Result<(), StoreError> {
        self.write_json(&self.path("deltas", team.as_str())?, deltas)
    }

    pub fn deltas(&self, team: &TeamId) -> Result<Vec<DraftDelta>, StoreError> {
        Ok(self.read_opt(&self.path("deltas", team.as_str())?)?.unwrap_or_default())
    }

    pub fn save_panel(&self, a: &PanelAssignment) -> Result<(), StoreError> {
        self.write_json(&self.path("panels", a.discipline_id.as_str())?, a)
    }

    pub fn panels(&self) -> Result<Vec<PanelAssignment>, StoreError> {
        self.load_all("panels", "")
    }

    pub fn save_general_comments(&self, d: &DisciplineId, c: &[TaggedComment]) -> Result<(), StoreError> {
        self.write_json(&self.path("comments", &format!("general-{}", check_id(d.as_str())?))?, c)
    }

    pub fn general_comments(&self, d: &DisciplineId) -> Result<Vec<TaggedComment>, StoreError> {
        Ok(self.read_opt(&self.path("comments", &format!("general-{}", check_id(d.as_str())?))?)?.unwrap_or_default())
    }

    pub fn save_team_comments(&self, t: &TeamId, c: &BTreeMap<TeamSection, String>) -> Result<(), StoreError> {
        self.write_json(&self.path("comments", &format!("team-{}", check_id(t.as_str())?))?, c)
    }

    pub fn team_comments(&self, t: &TeamId) -> Result<BTreeMap<TeamSection, String>, StoreError> {
        Ok(self.read_opt(&self.path("comments", &format!("team-{}", check_id(t.as_str())?))?)?.unwrap_or_default())
    }

    pub fn save_texts(&self, d: &DisciplineId, t: &GlobalTexts) -> Result<(), StoreError> {
        self.write_json(&self.path("texts", d.as_str())?, t)
    }

    pub fn texts(&self, d: &DisciplineId) -> Result<GlobalTexts, StoreError> {
        Ok(self.read_opt(&self.path("texts", d.as_str())?)?.unwrap_or_default())
    }

    fn state_key(d: Option<&DisciplineId>) -> &str {
        d.map(|d| d.as_str()).unwrap_or(PROJECT_STATE_KEY)
    }

    pub fn save_state(&self, s: &WorkflowState) -> Result<(), StoreError> {
        self.write_json(&self.path("state", Self::state_key(s.discipline_id.as_ref()))?, s)
    }

    pub fn state(&self, d: Option<&DisciplineId>) -> Result<Option<WorkflowState>, StoreError> {
        self.read_opt(&self.path("state", Self::state_key(d))?)
    }

    pub fn save_flags(&self, d: Option<&DisciplineId>, f: &ManualFlags) -> Result<(), StoreError> {
        self.write_json(&self.path("state", &format!("{}.flags", Self::state_key(d)))?, f)
    }

    pub fn flags(&self, d: Option<&DisciplineId>) -> Result<ManualFlags, StoreError> {
        Ok(self.read_opt(&self.path("state", &format!("{}.flags", Self::state_key(d)))?)?.unwrap_or_default())
    }

    /// Loads every entity into an immutable snapshot.
    pub fn snapshot(&self) -> Result<ProjectSnapshot, StoreError> {
        let teams = self.teams()?;
        let mut deltas = BTreeMap::new();
        let mut team_comments = BTreeMap::new();
        for t in &teams {
            deltas.insert(t.id.clone(), self.deltas(&t.id)?);
            team_comments.insert(t.id.clone(), self.team_comments(&t.id)?);
        }
        let disciplines = self.disciplines()?;
        let mut general_comments = BTreeMap::new();
        let mut texts = BTreeMap::new();
        for d in &disciplines {
            general_comments.insert(d.id.clone(), self.general_comments(&d.id)?);
            texts.insert(d.id.clone(), self.texts(&d.id)?);
        }
        Ok(ProjectSnapshot {
            settings: self.settings()?,
            disciplines,
            teams,
            experts: self.experts()?,
            activities: self.activities()?,
            forms: self.forms()?,
            bibliometrics: self.bibliometrics()?,
            conflicts: self.conflicts()?,
            deltas,
            panels: self.panels()?,
            general_comments,
            team_comments,
            texts,
        })
    }
}

/// Everything in a project, loaded at one point in time.
#[derive(Debug, Clone)]
pub struct ProjectSnapshot {
    pub settings: ProjectSettings,
    pub disciplines: Vec<Discipline>,
    pub teams: Vec<Team>,
    pub experts: Vec<Expert>,
    pub activities: Vec<ActivityRecord>,
    pub forms: Vec<ValidatedForm>,
    pub bibliometrics: Vec<BibliometricRecord>,
    pub conflicts: Vec<ConflictLink>,
    pub deltas: BTreeMap<TeamId, Vec<DraftDelta>>,
    pub panels: Vec<PanelAssignment>,
    pub general_comments: BTreeMap<DisciplineId, Vec<TaggedComment>>,
    pub team_comments: BTreeMap<TeamId, BTreeMap<TeamSection, String>>,
    pub texts: BTreeMap<DisciplineId, GlobalTexts>,
}

impl ProjectSnapshot {
    pub fn discipline(&self, id: &DisciplineId) -> Option<&Discipline> {
        self.disciplines.iter().find(|d| &d.id == id)
    }

    pub fn teams_of(&self, d: &DisciplineId) -> Vec<&Team> {
        self.teams.iter().filter(|t| &t.discipline_id == d).collect()
    }

    pub fn team_ids_of(&self, d: &DisciplineId) -> BTreeSet<TeamId> {
        self.teams_of(d).into_iter().map(|t| t.id.clone()).collect()
    }

    pub fn forms_of_team(&self, t: &TeamId) -> Vec<ValidatedForm> {
        self.forms.iter().filter(|f| f.team_id() == t).cloned().collect()
    }

    pub fn forms_of(&self, d: &DisciplineId) -> Vec<ValidatedForm> {
        let teams = self.team_ids_of(d);
        self.forms.iter().filter(|f| teams.contains(f.team_id())).cloned().collect()
    }

    pub fn panel_of(&self, d: &DisciplineId) -> Option<&PanelAssignment> {
        self.panels.iter().find(|p| &p.discipline_id == d)
    }

    /// Every broken reference and out-of-range value, as messages.
    pub fn check_integrity(&self) -> Vec<String> {
        let mut problems = Vec::new();
        let mut seen = BTreeSet::new();
        for d in &self.disciplines {
            if !seen.insert(&d.id) {
                problems.push(format!("duplicate discipline {}", d.id));
            }
            problems.extend(d.validate());
        }
        let discs: BTreeSet<&DisciplineId> = self.disciplines.iter().map(|d| &d.id).collect();
        let teams: BTreeSet<&TeamId> = self.teams.iter().map(|t| &t.id).collect();
        let experts: BTreeSet<&ExpertId> = self.experts.iter().map(|e| &e.id).collect();
        for t in &self.teams {
            if !discs.contains(&t.discipline_id) {
                problems.push(format!("team {} references unknown discipline {}", t.id, t.discipline_id));
            }
            problems.extend(t.validate());
        }
        let s = &self.settings;
        for a in &self.activities {
            if !teams.contains(&a.team_id) {
                problems.push(format!("activity {} references unknown team {}", a.id, a.team_id));
            }
            if a.year < s.first_year || a.year > s.last_year {
                problems
                    .push(format!("activity {} has year {} outside {}..{}", a.id, a.year, s.first_year, s.last_year));
            }
            if let crate::model::ActivityPayload::Publication { category, .. } = &a.payload {
                let disc =
                    self.teams.iter().find(|t| t.id == a.team_id).and_then(|t| self.discipline(&t.discipline_id));
                if let Some(d) = disc {
                    if !d.publication_categories.iter().any(|c| c == category) {
                        problems.push(format!("activity {} has category {category:?} unknown to {}", a.id, d.id));
                    }
                }
            }
        }
        for f in &self.forms {
            if !teams.contains(f.team_id()) {
                problems.push(format!("form for unknown team {}", f.team_id()));
            }
            if !experts.contains(f.expert_id()) {
                problems.push(format!("form for team {} from unknown expert", f.team_id()));
            }
        }
        for b in &self.bibliometrics {
            if !teams.contains(&b.team_id) {
                problems.push(format!("bibliometrics for unknown team {}", b.team_id));
            }
            problems.extend(b.validate());
        }
        for p in &self.panels {
            if !discs.contains(&p.discipline_id) {
                problems.push(format!("panel for unknown discipline {}", p.discipline_id));
            }
            for e in p.members.iter().chain(p.lead_experts.values()).chain(p.per_team.values().flatten()) {
                if !experts.contains(e) {
                    problems.push(format!("panel {} references unknown expert {e}", p.discipline_id));
                }
            }
            for t in p.lead_experts.keys().chain(p.per_team.keys()) {
                if !teams.contains(t) {
                    problems.push(format!("panel {} references unknown team {t}", p.discipline_id));
                }
            }
        }
        for l in &self.conflicts {
            if !experts.contains(&l.expert_id) {
                problems.push(format!("conflict link for unknown expert {}", l.expert_id));
            }
        }
        problems.sort();
        problems.dedup();
        problems
    }

    /// Draft of a team's file with its stored deltas applied in order.
    pub fn evaluation_file(&self, team: &TeamId) -> Result<EvaluationFile, DossierError> {
        let (mut file, _) = draft_file(team, self.settings.window(), &self.activities)?;
        for d in self.deltas.get(team).map(Vec::as_slice).unwrap_or_default() {
            file = merge_delta(&file, d)?;
        }
        Ok(file)
    }

    /// Screening of every panel member of a discipline.
    pub fn screenings(
        &self,
        d: &DisciplineId,
    ) -> Result<BTreeMap<ExpertId, ScreeningResult>, crate::panel::PanelError> {
        let teams = self.team_ids_of(d);
        let ctx =
            ScreeningContext { institution: &self.settings.institution, window: self.settings.window(), teams: &teams };
        let members: BTreeSet<&ExpertId> = self.panel_of(d).map(|p| p.members.iter().collect()).unwrap_or_default();
        let mut out = BTreeMap::new();
        for e in self.experts.iter().filter(|e| members.contains(&e.id)) {
            let links: Vec<ConflictLink> = self.conflicts.iter().filter(|l| l.expert_id == e.id).cloned().collect();
            out.insert(e.id.clone(), screen_expert(e, &links, &ctx)?);
        }
        Ok(out)
    }

    /// Validates the stored panel of a discipline.
    pub fn panel_report(&self, d: &DisciplineId) -> Result<PanelReport, StoreError> {
        let disc = self.discipline(d).ok_or_else(|| StoreError::NotFound(format!("discipline {d}")))?;
        let panel = self.panel_of(d).ok_or_else(|| StoreError::NotFound(format!("panel of {d}")))?;
        let members: BTreeSet<&ExpertId> = panel.members.iter().collect();
        let experts: Vec<Expert> = self.experts.iter().filter(|e| members.contains(&e.id)).cloned().collect();
        let teams: Vec<Team> = self.teams_of(d).into_iter().cloned().collect();
        let screenings = self.screenings(d).map_err(|e| StoreError::NotFound(e.to_string()))?;
        Ok(validate_panel(&PanelInput {
            experts: &experts,
            teams: &teams,
            discipline: disc,
            institution: &self.settings.institution,
            home_country: &self.settings.home_country,
            screenings: &screenings,
            per_team: Some(&panel.per_team),
        }))
    }

    /// Form evidence per team: validated forms returned and whether the
    /// team's lead expert is among the authors.
    pub fn form_evidence(&self, d: &DisciplineId) -> BTreeMap<TeamId, TeamFormEvidence> {
        let leads = self.panel_of(d).map(|p| p.lead_experts.clone()).unwrap_or_default();
        self.team_ids_of(d)
            .into_iter()
            .map(|t| {
                let forms: Vec<&ValidatedForm> = self.forms.iter().filter(|f| f.team_id() == &t).collect();
                let lead_expert_returned =
                    leads.get(&t).is_some_and(|lead| forms.iter().any(|f| f.expert_id() == lead));
                (t, TeamFormEvidence { validated_forms: forms.len(), lead_expert_returned })
            })
            .collect()
    }

    /// Assembles the artifact registry the workflow gates are evaluated on.
    /// Without a discipline, every discipline of the project is included.
    pub fn artifacts(&self, d: Option<&DisciplineId>, flags: &ManualFlags) -> ArtifactRegistry {
        let discs: Vec<DisciplineId> = match d {
            Some(d) => vec![d.clone()],
            None => self.disciplines.iter().map(|d| d.id.clone()).collect(),
        };
        let mut reg = ArtifactRegistry {
            intro_documents_sent: flags.intro_documents_sent,
            invitations_sent: flags.invitations_sent,
            meeting_minutes: flags.meeting_minutes,
            reports_approved: flags.reports_approved,
            debriefs: flags.debriefs.clone(),
            reaction_window_days: self.settings.reaction_days,
            ..Default::default()
        };
        let mut errors = Some(0usize);
        for disc in &discs {
            reg.teams.extend(self.team_ids_of(disc));
            errors = match (errors, self.panel_report(disc)) {
                (Some(n), Ok(r)) => Some(n + r.error_count()),
                _ => None,
            };
            reg.forms.extend(self.form_evidence(disc));
        }
        reg.panel_report_errors = if discs.is_empty() { None } else { errors };
        for t in reg.teams.clone() {
            let complete = self.evaluation_file(&t).map(|f| f.is_complete()).unwrap_or(false);
            reg.dossiers_complete.insert(t, complete);
        }
        reg
    }

    /// Ranked summaries of the teams of a discipline that have forms.
    pub fn summaries(&self, d: &DisciplineId, policy: WeightingPolicy) -> Result<Vec<ScoreSummary>, ScoringError> {
        let mut out = Vec::new();
        for t in self.teams_of(d) {
            let forms = self.forms_of_team(&t.id);
            if forms.is_empty() {
                continue;
            }
            let mut s = aggregate_team(&forms, policy)?;
            s.discipline_id = Some(d.clone());
            out.push(s);
        }
        if out.is_empty() {
            return Err(ScoringError::NoForms(d.to_string()));
        }
        Ok(rank_discipline(&out))
    }

    /// Public report input of a discipline: counts, distributions and
    /// tagged general comments only.
    pub fn global_input(&self, d: &DisciplineId) -> Result<GlobalReportInput, StoreError> {
        let disc = self.discipline(d).ok_or_else(|| StoreError::NotFound(format!("discipline {d}")))?;
        let members: BTreeSet<&ExpertId> = self.panel_of(d).map(|p| p.members.iter().collect()).unwrap_or_default();
        let panel: Vec<&Expert> = self.experts.iter().filter(|e| members.contains(&e.id)).collect();
        let home = self.settings.home_country.trim().to_ascii_uppercase();
        let countries: BTreeSet<String> = panel.iter().map(|e| e.country.trim().to_ascii_uppercase()).collect();
        let forms = self.forms_of(d);
        let tagged = self.general_comments.get(d).cloned().unwrap_or_default();
        let general_comments = collect_general_comments(&tagged).map_err(|e| StoreError::StoreCorrupt {
            path: path_hint("comments", &format!("general-{d}")),
            reason: e.to_string(),
        })?;
        Ok(GlobalReportInput {
            discipline_name: disc.name.clone(),
            team_names: self.teams_of(d).iter().map(|t| t.name.clone()).collect(),
            coordinator: self.settings.coordinator.clone(),
            texts: self.texts.get(d).cloned().unwrap_or_default(),
            panel: PanelCounts {
                experts: panel.len(),
                foreign_experts: panel.iter().filter(|e| e.country.trim().to_ascii_uppercase() != home).count(),
                countries: countries.len(),
            },
            n_forms: forms.len(),
            distributions: indicator_distributions(&forms),
            general_comments,
        })
    }

    /// Confidential report data of a discipline.
    pub fn team_report_set(&self, d: &DisciplineId, policy: WeightingPolicy) -> Result<TeamReportSet, ScoringError> {
        let disc_name = self.discipline(d).map(|x| x.name.clone()).unwrap_or_else(|| d.to_string());
        let teams = self.teams_of(d);
        Ok(TeamReportSet {
            discipline_name: disc_name,
            policy,
            summaries: self.summaries(d, policy)?,
            team_names: teams.iter().map(|t| (t.id.clone(), t.name.clone())).collect(),
            comments: teams
                .iter()
                .filter_map(|t| self.team_comments.get(&t.id).map(|c| (t.id.clone(), c.clone())))
                .collect(),
        })
    }

    /// Confidential tokens of one team: rank, weighted scores, form comments
    /// and panel comments.
    pub fn team_tokens(&self, set: &TeamReportSet, team: &TeamId) -> ConfidentialTokens {
        let ranked = set.summaries.iter().filter(|s| s.rank_in_discipline.is_some()).count();
        let mut tokens = match set.summaries.iter().find(|s| &s.team_id == team) {
            Some(s) => ConfidentialTokens::of_team(s, ranked, &self.forms_of_team(team)),
            None => ConfidentialTokens::default(),
        };
        for text in self.team_comments.get(team).map(|c| c.values().collect::<Vec<_>>()).unwrap_or_default() {
            tokens.insert(text.clone());
        }
        tokens
    }

    /// Every confidential token of a discipline, expert names and ids included.
    pub fn discipline_tokens(&self, set: &TeamReportSet, d: &DisciplineId) -> ConfidentialTokens {
        let mut tokens = ConfidentialTokens::default();
        for t in self.teams_of(d) {
            tokens.extend(&self.team_tokens(set, &t.id));
        }
        let members: BTreeSet<&ExpertId> = self.panel_of(d).map(|p| p.members.iter().collect()).unwrap_or_default();
        for e in self.experts.iter().filter(|e| members.contains(&e.id)) {
            tokens.insert(e.name.clone());
            tokens.insert(e.id.to_string());
        }
        tokens
    }

    /// Start date used for a fresh workflow state.
    pub fn default_start(&self) -> NaiveDate {
        NaiveDate::from_ymd_opt(self.settings.last_year + 1, 1, 1).unwrap_or_default()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{ActivityPayload, ConfidentialText, ExpertStatus, Indicator, MemberRole, RecordId, Suggester};
    use chrono::{DateTime, Utc};
    use proptest::prelude::*;

    fn store() -> (tempfile::TempDir, ProjectStore) {
        let dir = tempfile::tempdir().unwrap();
        let s = ProjectStore::open(dir.path().join("p")).unwrap();
        (dir, s)
    }

    #[test]
    fn empty_project() {
        let (_d, s) = store();
        for d in LAYOUT_DIRS {
            assert!(s.root().join(d).is_dir());
        }
        let snap = s.snapshot().unwrap();
        assert!(snap.teams.is_empty());
        assert!(snap.check_integrity().is_empty());
    }

    #[test]
    fn out_of_scale_form_is_corrupt() {
        let (_d, s) = store();
        let path = s.root().join("forms/t1__e1.json");
        fs::write(
            &path,
            r#"{"expert_id":"e1","team_id":"t1","scores":{"reviewer_expertise":8,"overall":11},
               "comments":{},"returned_at":"2005-03-01T00:00:00Z"}"#,
        )
        .unwrap();
        match s.forms() {
            Err(StoreError::StoreCorrupt { path: p, .. }) => assert_eq!(p, path),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn unreadable_json_names_file() {
        let (_d, s) = store();
        let path = s.root().join("teams/broken.json");
        fs::write(&path, "{ not json").unwrap();
        let err = s.teams().unwrap_err();
        assert!(err.to_string().starts_with("StoreCorrupt"));
        assert!(err.to_string().contains("broken.json"));
    }

    #[test]
    fn rejects_path_like_ids() {
        let (_d, s) = store();
        let t = Team {
            id: "../escape".into(),
            discipline_id: "d".into(),
            name: "x".into(),
            leader: "y".into(),
            members: vec![],
            fields: vec![],
        };
        assert!(matches!(s.save_team(&t), Err(StoreError::InvalidId(_))));
    }

    #[test]
    fn integrity_finds_dangling_references() {
        let (_d, s) = store();
        s.save_team(&Team {
            id: "t1".into(),
            discipline_id: "nowhere".into(),
            name: "T".into(),
            leader: "L".into(),
            members: vec![],
            fields: vec![],
        })
        .unwrap();
        let problems = s.snapshot().unwrap().check_integrity();
        assert_eq!(problems, vec!["team t1 references unknown discipline nowhere".to_owned()]);
    }

    #[test]
    fn rejection_log_appends() {
        let (_d, s) = store();
        let r = RejectionRecord { expert_id: "e1".into(), team_id: "t1".into(), justification: "coauthor".into() };
        s.append_rejection(&r).unwrap();
        s.append_rejection(&RejectionRecord { team_id: "t2".into(), ..r.clone() }).unwrap();
        let log = s.rejections().unwrap();
        assert_eq!(log.len(), 2);
        assert_eq!(log[0], r);
    }

    fn ident() -> impl Strategy<Value = String> {
        "[a-z][a-z0-9-]{0,10}"
    }

    fn text() -> impl Strategy<Value = String> {
        "[ -~]{0,30}"
    }

    fn arb_team() -> impl Strategy<Value = Team> {
        (
            ident(),
            ident(),
            text(),
            text(),
            prop::collection::vec((text(), 0u8..3, 0.0f64..=1.0), 0..4),
            prop::collection::vec(ident(), 0..3),
        )
            .prop_map(|(id, d, name, leader, members, fields)| Team {
                id: id.into(),
                discipline_id: d.into(),
                name,
                leader,
                members: members
                    .into_iter()
                    .map(|(person, r, fte)| Member {
                        person,
                        role: [MemberRole::Postdoc, MemberRole::Phd, MemberRole::Other][r as usize],
                        fte,
                    })
                    .collect(),
                fields,
            })
    }

    use crate::model::Member;

    fn arb_expert() -> impl Strategy<Value = Expert> {
        (ident(), text(), text(), "[A-Z]{2}", prop::collection::vec(ident(), 0..3), prop::option::of(ident()), 0u8..4)
            .prop_map(|(id, name, affiliation, country, domains, by, st)| Expert {
                id: id.into(),
                name,
                affiliation,
                country,
                domains,
                suggested_by: by.map(|t| Suggester::Team(t.into())).unwrap_or(Suggester::Coordinator),
                status: [
                    ExpertStatus::Suggested,
                    ExpertStatus::Rejected,
                    ExpertStatus::Invited,
                    ExpertStatus::Confirmed,
                ][st as usize],
            })
    }

    fn arb_form() -> impl Strategy<Value = EvaluationForm> {
        (
            ident(),
            ident(),
            prop::collection::btree_map(0usize..11, 1i64..=10, 0..11),
            1i64..=10,
            prop::option::of(0usize..3),
            prop::collection::btree_map(ident(), text(), 0..3),
            0i64..2_000_000_000,
        )
            .prop_map(|(e, t, scores, expertise, dom, comments, ts)| {
                let mut scores: BTreeMap<Indicator, i64> = scores
                    .into_iter()
                    .map(|(i, s)| (Indicator::ALL[i], s))
                    .filter(|(i, _)| *i != Indicator::DominantCharacter)
                    .collect();
                scores.insert(Indicator::ReviewerExpertise, expertise);
                EvaluationForm {
                    expert_id: e.into(),
                    team_id: t.into(),
                    scores,
                    dominant_character: dom.map(|i| ["fundamental", "applied", "policy_oriented"][i].to_owned()),
                    comments: comments.into_iter().map(|(k, v)| (k, ConfidentialText::new(v))).collect(),
                    returned_at: DateTime::<Utc>::from_timestamp(ts, 0).unwrap(),
                }
            })
    }

    fn arb_activity() -> impl Strategy<Value = ActivityRecord> {
        (ident(), ident(), 1990i32..2030, text(), 0u8..3, prop::option::of(0u32..500), 0.0f64..1e6).prop_map(
            |(id, team, year, t, k, cites, amount)| ActivityRecord {
                id: RecordId::new(id),
                team_id: team.into(),
                year,
                payload: match k {
                    0 => ActivityPayload::Publication {
                        title: t.clone(),
                        venue: t,
                        category: "proceedings".into(),
                        field: "f".into(),
                        citation_count: cites,
                        coauthors: vec![],
                    },
                    1 => ActivityPayload::Project { title: t, funder: "F".into(), amount, partners: vec![] },
                    _ => ActivityPayload::TeachingLoad { course: t, hours_per_year: amount },
                },
            },
        )
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn team_round_trip(t in arb_team()) {
            let (_d, s) = store();
            s.save_team(&t).unwrap();
            prop_assert_eq!(s.teams().unwrap(), vec![t]);
        }

        #[test]
        fn expert_round_trip(e in arb_expert()) {
            let (_d, s) = store();
            s.save_expert(&e).unwrap();
            prop_assert_eq!(s.experts().unwrap(), vec![e]);
        }

        #[test]
        fn form_round_trip(f in arb_form()) {
            let (_d, s) = store();
            s.save_form(&f).unwrap();
            let back = s.forms().unwrap();
            prop_assert_eq!(back.len(), 1);
            prop_assert_eq!(back[0].to_form(), f);
        }

        #[test]
        fn activity_round_trip(a in prop::collection::vec(arb_activity(), 0..5)) {
            let (_d, s) = store();
            let team = TeamId::new("t");
            s.save_activities(&team, &a).unwrap();
            prop_assert_eq!(s.activities().unwrap(), a);
        }
    }
}
