use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use evalforge_core::analytics::{
    crown, indicator_correlations, indicator_distributions, peer_vs_crown, pooled_distribution, CrownResult,
    FcsmWeighting, Histogram,
};
use evalforge_core::dossier::{draft_file, merge_delta, render_dossier};
use evalforge_core::model::{EvaluationForm, Expert, ExpertStatus, Indicator, YearWindow};
use evalforge_core::panel::{detect_links, reject_expert, screening_audit_csv, ConflictLink, PanelError};
use evalforge_core::report::{audit, render_global, render_team, ConfidentialTokens};
use evalforge_core::scoring::{build_overview, format2, summaries_csv, ScoreSummary, ScoringError};
use evalforge_core::simulate::{generate, reliability_experiment, SimConfig};
use evalforge_core::store::ManualFlags;
use evalforge_core::workflow::{gate, plan_cycle, DebriefEvidence, Phase, WorkflowState};
use evalforge_core::{
    AnalyticsError, DisciplineId, DossierError, DraftDelta, PlanError, ProjectSnapshot, ProjectStore, ReportError,
    SimError, StoreError, TeamId, WeightingPolicy, WorkflowError,
};

use crate::{
    Analysis, AnalyzeArgs, Cli, Command, DossierArgs, DossierCmd, Format, FormsCmd, Global, Mark, PanelCmd, PhaseArgs,
    PhaseCmd, PlanCmd, ReportCmd, ScoreArgs, ScoreCmd, SimArgs, SimulateCmd,
};

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error(transparent)]
    Panel(#[from] PanelError),
    #[error(transparent)]
    Dossier(#[from] DossierError),
    #[error(transparent)]
    Scoring(#[from] ScoringError),
    #[error(transparent)]
    Analytics(#[from] AnalyticsError),
    #[error(transparent)]
    Workflow(#[from] WorkflowError),
    #[error(transparent)]
    Plan(#[from] PlanError),
    #[error(transparent)]
    Report(#[from] ReportError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error("PhaseViolation: experts can no longer be rejected in {0}")]
    RejectionClosed(Phase),
    #[error("InvalidInput: {0}")]
    InvalidInput(String),
    #[error("IoError: {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::InvalidInput(e.to_string())
    }
}

type Result<T> = std::result::Result<T, CliError>;

pub fn dispatch(cli: Cli) -> Result<()> {
    let g = &cli.global;
    match cli.command {
        Command::Panel(c) => panel(g, c),
        Command::Dossier(c) => dossier(g, c),
        Command::Forms(c) => forms(g, c),
        Command::Score(c) => score(g, c),
        Command::Analyze(a) => analyze(g, a),
        Command::Phase(c) => phase(g, c),
        Command::Plan(c) => plan(g, c),
        Command::Report(c) => report(g, c),
        Command::Simulate(c) => simulate(g, c),
    }
}

// ---- plumbing ----

struct Project {
    store: ProjectStore,
    snap: ProjectSnapshot,
    policy: WeightingPolicy,
}

fn open(g: &Global) -> Result<Project> {
    let store = ProjectStore::open(&g.project)?;
    let mut snap = store.snapshot()?;
    if let Some(y) = g.window_years {
        snap.settings.window_years = y;
    }
    if let Some(d) = g.reaction_days {
        snap.settings.reaction_days = d;
    }
    if let Some(p) = &g.policy {
        snap.settings.policy = p.clone();
    }
    let policy = snap.settings.weighting()?;
    Ok(Project { store, snap, policy })
}

fn out_dir(g: &Global) -> Result<PathBuf> {
    let dir = g.out.clone().unwrap_or_else(|| g.project.join("out"));
    fs::create_dir_all(&dir).map_err(|source| CliError::Io { path: dir.clone(), source })?;
    Ok(dir)
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|source| CliError::Io { path: path.to_owned(), source })?;
    eprintln!("wrote {}", path.display());
    Ok(())
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|source| CliError::Io { path: path.to_owned(), source })?;
    serde_json::from_str(&text).map_err(|e| CliError::InvalidInput(format!("{}: {e}", path.display())))
}

fn json<T: Serialize + ?Sized>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable output");
    s.push('\n');
    s
}

fn emit(text: &str) {
    let mut out = std::io::stdout().lock();
    let _ = out.write_all(text.as_bytes());
}

fn csv_text(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for r in rows {
        w.write_record(&r)?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::InvalidInput(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

fn today(on: Option<NaiveDate>) -> NaiveDate {
    on.unwrap_or_else(|| chrono::Local::now().date_naive())
}

fn discipline_of(snap: &ProjectSnapshot, id: &str) -> Result<DisciplineId> {
    let d = DisciplineId::new(id);
    snap.discipline(&d).ok_or_else(|| StoreError::NotFound(format!("discipline {id}")))?;
    Ok(d)
}

fn team_discipline(snap: &ProjectSnapshot, id: &str) -> Result<(TeamId, DisciplineId)> {
    let team =
        snap.teams.iter().find(|t| t.id.as_str() == id).ok_or_else(|| StoreError::NotFound(format!("team {id}")))?;
    Ok((team.id.clone(), team.discipline_id.clone()))
}

// ---- panel ----

#[derive(Deserialize)]
#[serde(untagged)]
enum OneOrMany {
    Many(Vec<Expert>),
    One(Box<Expert>),
}

fn panel(g: &Global, cmd: PanelCmd) -> Result<()> {
    let p = open(g)?;
    let window = p.snap.settings.window();
    match cmd {
        PanelCmd::Suggest { file } => {
            let experts = match read_json::<OneOrMany>(&file)? {
                OneOrMany::Many(v) => v,
                OneOrMany::One(e) => vec![*e],
            };
            let mut found = Vec::new();
            for mut e in experts {
                e.status = ExpertStatus::Suggested;
                p.store.save_expert(&e)?;
                let mut links: Vec<ConflictLink> =
                    p.snap.conflicts.iter().filter(|l| l.expert_id == e.id).cloned().collect();
                let known: BTreeSet<_> = links.iter().map(ConflictLink::key).collect();
                let new: Vec<ConflictLink> = detect_links(&e, &p.snap.activities, window)
                    .into_iter()
                    .filter(|l| !known.contains(&l.key()))
                    .collect();
                links.extend(new.iter().cloned());
                if !links.is_empty() {
                    p.store.save_conflicts(&e.id, &links)?;
                }
                found.extend(new);
            }
            match g.format {
                Some(Format::Json) => emit(&json(&found)),
                _ => emit(&screening_audit_csv(&found)?),
            }
        }
        PanelCmd::Screen { discipline } => {
            let d = discipline_of(&p.snap, &discipline)?;
            let results = p.snap.screenings(&d)?;
            match g.format {
                Some(Format::Json) => emit(&json(&results)),
                _ => {
                    let links: Vec<ConflictLink> =
                        p.snap.conflicts.iter().filter(|l| results.contains_key(&l.expert_id)).cloned().collect();
                    emit(&screening_audit_csv(&links)?);
                    for (e, r) in &results {
                        if !r.is_clear() {
                            eprintln!("{e}: {}", serde_json::to_string(r).unwrap_or_default());
                        }
                    }
                }
            }
        }
        PanelCmd::Reject { expert, team, justification } => {
            let e = p
                .snap
                .experts
                .iter()
                .find(|e| e.id.as_str() == expert)
                .ok_or_else(|| StoreError::NotFound(format!("expert {expert}")))?;
            let t = p
                .snap
                .teams
                .iter()
                .find(|t| t.id.as_str() == team)
                .ok_or_else(|| StoreError::NotFound(format!("team {team}")))?;
            // the panel is fixed once its composition phase is over
            let now = current_phase(&p, &t.discipline_id)?;
            if now > Phase::P2 {
                return Err(CliError::RejectionClosed(now));
            }
            let (updated, record) = reject_expert(e, t, &justification)?;
            p.store.append_rejection(&record)?;
            p.store.save_expert(&updated)?;
            eprintln!("expert {} rejected by team {}", updated.id, t.id);
        }
        PanelCmd::Validate { discipline } => {
            let d = discipline_of(&p.snap, &discipline)?;
            let report = p.snap.panel_report(&d)?;
            match g.format {
                Some(Format::Json) => emit(&json(&report)),
                _ => emit(&csv_text(
                    &["severity", "kind", "message"],
                    report.findings.iter().map(|f| {
                        vec![
                            serde_json::to_value(f.severity).unwrap().as_str().unwrap_or_default().to_owned(),
                            serde_json::to_value(&f.kind).unwrap().as_str().unwrap_or_default().to_owned(),
                            f.message.clone(),
                        ]
                    }),
                )?),
            }
            eprintln!("{} member(s) accepted, {} error finding(s)", report.panel.len(), report.error_count());
        }
    }
    Ok(())
}

// ---- dossier ----

fn dossier_file(p: &Project, args: &DossierArgs) -> Result<evalforge_core::EvaluationFile> {
    let (team, _) = team_discipline(&p.snap, &args.team)?;
    let window = match &args.window {
        Some(w) => w.parse::<YearWindow>().map_err(DossierError::InvalidWindow)?,
        None => p.snap.settings.window(),
    };
    let (mut file, warnings) = draft_file(&team, window, &p.snap.activities)?;
    for w in warnings {
        eprintln!("warning: {w:?}");
    }
    for d in p.snap.deltas.get(&team).map(Vec::as_slice).unwrap_or_default() {
        file = merge_delta(&file, d)?;
    }
    Ok(file)
}

fn dossier(g: &Global, cmd: DossierCmd) -> Result<()> {
    let p = open(g)?;
    match cmd {
        DossierCmd::Draft(args) => {
            let file = dossier_file(&p, &args)?;
            match g.format {
                Some(Format::Csv) => emit(&csv_text(
                    &["slot", "provenance", "records", "has_text"],
                    file.sections.iter().map(|(slot, c)| {
                        vec![
                            slot.code().to_owned(),
                            serde_json::to_value(c.provenance).unwrap().as_str().unwrap_or_default().to_owned(),
                            c.records.len().to_string(),
                            c.text.as_deref().is_some_and(|t| !t.trim().is_empty()).to_string(),
                        ]
                    }),
                )?),
                _ => emit(&json(&file)),
            }
        }
        DossierCmd::Merge { args, from } => {
            let (team, _) = team_discipline(&p.snap, &args.team)?;
            let dir = from.join(team.as_str());
            let mut paths: Vec<PathBuf> = fs::read_dir(&dir)
                .map_err(|source| CliError::Io { path: dir.clone(), source })?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|p| p.extension().is_some_and(|x| x == "json"))
                .collect();
            paths.sort();
            let mut file = dossier_file(&p, &args)?;
            let mut stored = p.store.deltas(&team)?;
            for path in paths {
                let delta: DraftDelta = read_json(&path)?;
                file = merge_delta(&file, &delta)?;
                stored.push(delta);
            }
            p.store.save_deltas(&team, &stored)?;
            let empty: Vec<&str> = file.empty_slots().iter().map(|s| s.code()).collect();
            if empty.is_empty() {
                eprintln!("{team}: evaluation file complete");
            } else {
                eprintln!("{team}: empty sections {}", empty.join(", "));
            }
        }
        DossierCmd::Render { args, allow_incomplete } => {
            let file = dossier_file(&p, &args)?;
            let doc = render_dossier(&file, allow_incomplete)?;
            let path = out_dir(g)?.join(format!("dossier-{}.txt", file.team_id));
            write_file(&path, doc.as_str())?;
        }
    }
    Ok(())
}

// ---- forms ----

fn forms(g: &Global, cmd: FormsCmd) -> Result<()> {
    let p = open(g)?;
    match cmd {
        FormsCmd::Ingest { from } => {
            let mut paths: Vec<PathBuf> = fs::read_dir(&from)
                .map_err(|source| CliError::Io { path: from.clone(), source })?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|p| p.extension().is_some_and(|x| x == "json"))
                .collect();
            paths.sort();
            let teams: BTreeSet<&TeamId> = p.snap.teams.iter().map(|t| &t.id).collect();
            let mut n = 0;
            for path in paths {
                let form: EvaluationForm = read_json(&path)?;
                if !teams.contains(&form.team_id) {
                    return Err(StoreError::NotFound(format!("team {} ({})", form.team_id, path.display())).into());
                }
                p.store.save_form(&form).map_err(|e| match e {
                    StoreError::StoreCorrupt { reason, .. } => StoreError::StoreCorrupt { path: path.clone(), reason },
                    other => other,
                })?;
                n += 1;
            }
            eprintln!("{n} form(s) stored");
        }
        FormsCmd::Check => {
            let mut per_team: BTreeMap<&TeamId, usize> = p.snap.teams.iter().map(|t| (&t.id, 0)).collect();
            for f in &p.snap.forms {
                *per_team.entry(f.team_id()).or_default() += 1;
            }
            match g.format {
                Some(Format::Json) => emit(&json(&per_team)),
                _ => emit(&csv_text(
                    &["team_id", "forms"],
                    per_team.iter().map(|(t, n)| vec![t.to_string(), n.to_string()]),
                )?),
            }
        }
    }
    Ok(())
}

// ---- score ----

fn summaries(p: &Project, discipline: Option<&str>) -> Result<Vec<ScoreSummary>> {
    if p.snap.forms.is_empty() {
        return Err(ScoringError::NoForms(discipline.unwrap_or("the project").to_owned()).into());
    }
    match discipline {
        Some(d) => Ok(p.snap.summaries(&discipline_of(&p.snap, d)?, p.policy)?),
        None => {
            let mut all = Vec::new();
            for d in &p.snap.disciplines {
                match p.snap.summaries(&d.id, p.policy) {
                    Ok(s) => all.extend(s),
                    Err(ScoringError::NoForms(_)) => {}
                    Err(e) => return Err(e.into()),
                }
            }
            if all.is_empty() {
                return Err(ScoringError::NoForms("any discipline".into()).into());
            }
            Ok(all)
        }
    }
}

fn score(g: &Global, cmd: ScoreCmd) -> Result<()> {
    let p = open(g)?;
    match cmd {
        ScoreCmd::Aggregate(ScoreArgs { discipline, .. }) => {
            let s = summaries(&p, discipline.as_deref())?;
            match g.format {
                Some(Format::Json) => emit(&json(&s)),
                _ => emit(&summaries_csv(&s)?),
            }
        }
        ScoreCmd::Rank(ScoreArgs { discipline, .. }) => {
            let s = summaries(&p, discipline.as_deref())?;
            match g.format {
                Some(Format::Json) => {
                    #[derive(Serialize)]
                    struct Row<'a> {
                        discipline_id: Option<&'a DisciplineId>,
                        team_id: &'a TeamId,
                        overall_weighted: Option<f64>,
                        rank: Option<f64>,
                    }
                    let rows: Vec<Row> = s
                        .iter()
                        .map(|x| Row {
                            discipline_id: x.discipline_id.as_ref(),
                            team_id: &x.team_id,
                            overall_weighted: x.overall_weighted,
                            rank: x.rank_in_discipline,
                        })
                        .collect();
                    emit(&json(&rows))
                }
                _ => emit(&csv_text(
                    &["discipline_id", "team_id", "overall_weighted", "rank"],
                    s.iter().map(|x| {
                        vec![
                            x.discipline_id.as_ref().map(|d| d.to_string()).unwrap_or_default(),
                            x.team_id.to_string(),
                            x.overall_weighted.map(format2).unwrap_or_default(),
                            x.rank_in_discipline.map(|r| r.to_string()).unwrap_or_default(),
                        ]
                    }),
                )?),
            }
        }
        ScoreCmd::Overview { team, seed } => {
            let (team, _) = team_discipline(&p.snap, &team)?;
            if p.snap.forms_of_team(&team).is_empty() {
                return Err(ScoringError::NoForms(team.to_string()).into());
            }
            let ov = build_overview(&p.snap.forms, &team, seed.unwrap_or(p.snap.settings.seed));
            match g.format {
                Some(Format::Json) => emit(&json(&ov)),
                Some(Format::Csv) => emit(&csv_text(
                    &["reviewer", "expertise", "indicator", "score"],
                    ov.rows.iter().flat_map(|r| {
                        r.scores.iter().map(|(i, s)| {
                            vec![r.anon_label.clone(), r.expertise.to_string(), i.key().to_owned(), s.to_string()]
                        })
                    }),
                )?),
                None => emit(&ov.render()),
            }
        }
    }
    Ok(())
}

// ---- analyze ----

fn histogram_rows<'a>(group: &'a str, hs: &'a [Histogram]) -> impl Iterator<Item = Vec<String>> + 'a {
    hs.iter().flat_map(move |h| {
        h.counts.iter().map(move |(s, c)| {
            let mut row = Vec::new();
            if !group.is_empty() {
                row.push(group.to_owned());
            }
            row.extend([h.label.clone(), s.to_string(), c.to_string(), format!("{:.6}", h.bins[s])]);
            row
        })
    })
}

fn crowns(p: &Project) -> Vec<CrownResult> {
    let mut out = Vec::new();
    for b in &p.snap.bibliometrics {
        match crown(b, FcsmWeighting::PublicationCount) {
            Ok(c) => out.push(c),
            Err(e) => eprintln!("warning: team {}: {e}", b.team_id),
        }
    }
    out
}

fn analyze(g: &Global, a: AnalyzeArgs) -> Result<()> {
    let p = open(g)?;
    let dir = out_dir(g)?;
    let as_json = g.format == Some(Format::Json);
    let ext = if as_json { "json" } else { "csv" };
    match a.what {
        Analysis::Dist => {
            let per_indicator = indicator_distributions(&p.snap.forms);
            let per_discipline: Vec<Histogram> = p
                .snap
                .disciplines
                .iter()
                .map(|d| pooled_distribution(&p.snap.forms_of(&d.id), d.id.as_str()))
                .collect();
            let (f2, f3) = if as_json {
                (json(&per_indicator), json(&per_discipline))
            } else {
                (
                    csv_text(&["indicator", "score", "count", "share"], histogram_rows("", &per_indicator))?,
                    csv_text(&["discipline_id", "score", "count", "share"], histogram_rows("", &per_discipline))?,
                )
            };
            write_file(&dir.join(format!("fig2_indicator_dist.{ext}")), &f2)?;
            write_file(&dir.join(format!("fig3_discipline_dist.{ext}")), &f3)?;
        }
        Analysis::Corr => {
            let m = indicator_correlations(&summaries(&p, None)?)?;
            let text = if as_json {
                json(&m)
            } else {
                let mut rows = Vec::new();
                for (i, a) in m.labels.iter().enumerate() {
                    for (j, b) in m.labels.iter().enumerate() {
                        rows.push(vec![
                            a.key().to_owned(),
                            b.key().to_owned(),
                            m.r[i][j].map(|r| format!("{r:.6}")).unwrap_or_default(),
                            m.n[i][j].to_string(),
                        ]);
                    }
                }
                csv_text(&["indicator_a", "indicator_b", "r", "n"], rows)?
            };
            write_file(&dir.join(format!("correlations.{ext}")), &text)?;
            if let Some((lo, hi)) = m.off_diagonal_range() {
                eprintln!("off-diagonal r in [{lo:.3}, {hi:.3}]");
            }
        }
        Analysis::Crown => {
            let c = crowns(&p);
            let text = if as_json {
                json(&c)
            } else {
                csv_text(
                    &["team_id", "publications", "cpp", "fcsm", "crown"],
                    c.iter().map(|c| {
                        vec![
                            c.team_id.to_string(),
                            c.p.to_string(),
                            format!("{:.6}", c.cpp),
                            format!("{:.6}", c.fcsm),
                            format!("{:.6}", c.crown),
                        ]
                    }),
                )?
            };
            write_file(&dir.join(format!("crown.{ext}")), &text)?;
        }
        Analysis::Scatter => {
            let indicator: Indicator = a.indicator.parse().map_err(CliError::InvalidInput)?;
            let study = peer_vs_crown(&summaries(&p, None)?, &crowns(&p), indicator)?;
            let text = if as_json {
                json(&study)
            } else {
                csv_text(
                    &["team_id", "discipline_id", "crown", "peer"],
                    study.points.iter().map(|pt| {
                        vec![
                            pt.team_id.to_string(),
                            pt.discipline_id.as_ref().map(|d| d.to_string()).unwrap_or_default(),
                            format!("{:.6}", pt.crown),
                            format!("{:.6}", pt.peer),
                        ]
                    }),
                )?
            };
            write_file(&dir.join(format!("fig4_scatter.{ext}")), &text)?;
            eprintln!(
                "r = {:.3} (t = {:.2}, n = {}), line y = {:.3}x + {:.3}",
                study.r,
                study.t,
                study.points.len(),
                study.slope,
                study.intercept
            );
        }
    }
    Ok(())
}

// ---- phase ----

fn state_of(p: &Project, d: Option<&DisciplineId>, on: NaiveDate) -> Result<WorkflowState> {
    Ok(match p.store.state(d)? {
        Some(s) => s,
        None => WorkflowState::start(d.cloned(), on, None),
    })
}

fn phase_discipline(p: &Project, args: &PhaseArgs) -> Result<Option<DisciplineId>> {
    args.discipline.as_deref().map(|d| discipline_of(&p.snap, d)).transpose()
}

fn append_audit(p: &Project, s: &WorkflowState) -> Result<()> {
    let key = s.discipline_id.as_ref().map(|d| d.as_str()).unwrap_or("project");
    let path = p.store.root().join("state").join(format!("{key}.audit.jsonl"));
    let entry = s.audit_log().last().expect("advanced state has an audit entry");
    let mut f = fs::OpenOptions::new()
        .create(true)
        .append(true)
        .open(&path)
        .map_err(|source| CliError::Io { path: path.clone(), source })?;
    writeln!(f, "{}", serde_json::to_string(entry).expect("serializable"))
        .map_err(|source| CliError::Io { path, source })
}

fn phase(g: &Global, cmd: PhaseCmd) -> Result<()> {
    let p = open(g)?;
    match cmd {
        PhaseCmd::Status(args) => {
            let d = phase_discipline(&p, &args)?;
            let on = today(args.on);
            let state = state_of(&p, d.as_ref(), on)?;
            let next = state.phase().next();
            let flags = p.store.flags(d.as_ref())?;
            let missing: Vec<String> = next
                .map(|n| gate(n, &p.snap.artifacts(d.as_ref(), &flags), on).iter().map(|m| m.to_string()).collect())
                .unwrap_or_default();
            match g.format {
                Some(Format::Json) => {
                    #[derive(Serialize)]
                    struct Status<'a> {
                        phase: Phase,
                        name: &'static str,
                        next: Option<Phase>,
                        missing: &'a [String],
                        state: &'a WorkflowState,
                    }
                    emit(&json(&Status {
                        phase: state.phase(),
                        name: state.phase().name(),
                        next,
                        missing: &missing,
                        state: &state,
                    }))
                }
                Some(Format::Csv) => emit(&csv_text(
                    &["phase", "name", "next", "missing"],
                    [vec![
                        format!("{:?}", state.phase()),
                        state.phase().name().to_owned(),
                        next.map(|n| format!("{n:?}")).unwrap_or_default(),
                        missing.join(";"),
                    ]],
                )?),
                None => {
                    let mut text = format!("{}\n", state.phase());
                    if let Some(n) = next {
                        if missing.is_empty() {
                            text.push_str(&format!("next: {n} (ready)\n"));
                        } else {
                            text.push_str(&format!("next: {n} (missing: {})\n", missing.join(", ")));
                        }
                    }
                    emit(&text);
                }
            }
            if state.deadline_exceeds_one_year() {
                eprintln!("warning: deadline is more than one year after the start");
            }
        }
        PhaseCmd::Start { args, deadline } => {
            let d = phase_discipline(&p, &args)?;
            if let Some(s) = p.store.state(d.as_ref())? {
                return Err(CliError::InvalidInput(format!("workflow already started, now in {}", s.phase())));
            }
            let s = WorkflowState::start(d, today(args.on), deadline);
            p.store.save_state(&s)?;
            if s.deadline_exceeds_one_year() {
                eprintln!("warning: deadline is more than one year after the start");
            }
            emit(&format!("{}\n", s.phase()));
        }
        PhaseCmd::Advance { args, to } => {
            let d = phase_discipline(&p, &args)?;
            let on = today(args.on);
            let state = state_of(&p, d.as_ref(), on)?;
            let to = match to {
                Some(t) => t.parse::<Phase>().map_err(CliError::InvalidInput)?,
                None => state
                    .phase()
                    .next()
                    .ok_or_else(|| CliError::InvalidInput(format!("{} is the last phase", state.phase())))?,
            };
            let flags = p.store.flags(d.as_ref())?;
            let next = state.advance(to, &p.snap.artifacts(d.as_ref(), &flags), on)?;
            p.store.save_state(&next)?;
            append_audit(&p, &next)?;
            for w in &next.audit_log().last().unwrap().warnings {
                eprintln!("warning: {w:?}");
            }
            emit(&format!("{}\n", next.phase()));
        }
        PhaseCmd::Mark { args, artifact, team, acknowledged } => {
            let d = phase_discipline(&p, &args)?;
            let mut flags: ManualFlags = p.store.flags(d.as_ref())?;
            match artifact {
                Mark::IntroDocuments => flags.intro_documents_sent = true,
                Mark::Invitations => flags.invitations_sent = true,
                Mark::Minutes => flags.meeting_minutes = true,
                Mark::ReportsApproved => flags.reports_approved = true,
                Mark::Debrief => {
                    let team = team.ok_or_else(|| CliError::InvalidInput("debrief needs --team".into()))?;
                    let (team, _) = team_discipline(&p.snap, &team)?;
                    flags.debriefs.insert(team, DebriefEvidence { debriefed_on: Some(today(args.on)), acknowledged });
                }
            }
            p.store.save_flags(d.as_ref(), &flags)?;
        }
    }
    Ok(())
}

// ---- plan ----

#[derive(Deserialize)]
struct Blackout {
    discipline: String,
    year: u32,
}

fn plan(g: &Global, cmd: PlanCmd) -> Result<()> {
    let PlanCmd::Cycle { horizon, capacity, blackouts, disciplines } = cmd;
    let ids: Vec<DisciplineId> = match disciplines {
        Some(list) => list.into_iter().map(DisciplineId::from).collect(),
        None => open(g)?.snap.disciplines.iter().map(|d| d.id.clone()).collect(),
    };
    let mut black = BTreeSet::new();
    if let Some(path) = blackouts {
        let mut r = csv::ReaderBuilder::new().trim(csv::Trim::All).from_path(&path)?;
        for row in r.deserialize::<Blackout>() {
            let b = row?;
            black.insert((DisciplineId::from(b.discipline), b.year));
        }
    }
    let plan = plan_cycle(&ids, horizon, capacity, &black)?;
    match g.format {
        Some(Format::Json) => emit(&json(&plan)),
        _ => emit(&csv_text(
            &["discipline_id", "year"],
            plan.assignments.iter().map(|(d, y)| vec![d.to_string(), y.to_string()]),
        )?),
    }
    Ok(())
}

// ---- report ----

fn current_phase(p: &Project, d: &DisciplineId) -> Result<Phase> {
    let state = match p.store.state(Some(d))? {
        Some(s) => Some(s),
        None => p.store.state(None)?,
    };
    Ok(state.map(|s| s.phase()).unwrap_or(Phase::P0))
}

fn report(g: &Global, cmd: ReportCmd) -> Result<()> {
    let p = open(g)?;
    let dir = out_dir(g)?;
    match cmd {
        ReportCmd::Global { discipline } => {
            let d = discipline_of(&p.snap, &discipline)?;
            let doc = render_global(&p.snap.global_input(&d)?, current_phase(&p, &d)?)?;
            let set = p.snap.team_report_set(&d, p.policy)?;
            audit(&doc, &p.snap.discipline_tokens(&set, &d))?;
            write_file(&dir.join(format!("global-{d}.txt")), doc.as_str())?;
        }
        ReportCmd::Team { team } => {
            let (team, d) = team_discipline(&p.snap, &team)?;
            let set = p.snap.team_report_set(&d, p.policy)?;
            let doc = render_team(&set, &team, current_phase(&p, &d)?)?;
            let mut others = ConfidentialTokens::default();
            for t in p.snap.teams_of(&d).into_iter().filter(|t| t.id != team) {
                others.extend(&p.snap.team_tokens(&set, &t.id));
            }
            audit(&doc, &others.without(&p.snap.team_tokens(&set, &team)))?;
            write_file(&dir.join(format!("team-{team}.txt")), doc.as_str())?;
        }
    }
    Ok(())
}

// ---- simulate ----

fn sim_config(args: &SimArgs, preset: impl FnOnce(u64) -> SimConfig) -> Result<SimConfig> {
    let mut cfg = match &args.config {
        Some(path) => read_json::<SimConfig>(path)?,
        None => preset(args.seed.unwrap_or(0)),
    };
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn simulate(g: &Global, cmd: SimulateCmd) -> Result<()> {
    match cmd {
        SimulateCmd::Generate(args) => {
            let cfg = sim_config(&args, SimConfig::calibrated)?;
            let project = generate(&cfg)?;
            let root = g.out.clone().unwrap_or_else(|| g.project.clone());
            let store = ProjectStore::open(&root)?;
            if !store.snapshot()?.teams.is_empty() {
                return Err(CliError::InvalidInput(format!("{} already holds a project", root.display())));
            }
            project.save(&store)?;
            eprintln!(
                "{} disciplines, {} teams, {} experts, {} forms written to {}",
                project.disciplines.len(),
                project.teams.len(),
                project.experts.len(),
                project.forms.len(),
                root.display()
            );
        }
        SimulateCmd::Reliability { args, replicates, constant_noise } => {
            let cfg = sim_config(&args, |seed| SimConfig::reliability(!constant_noise, seed))?;
            let cmp = reliability_experiment(&cfg, replicates)?;
            let text = match g.format {
                Some(Format::Json) => json(&cmp),
                _ => cmp.to_csv()?,
            };
            match &g.out {
                Some(_) => {
                    let ext = if g.format == Some(Format::Json) { "json" } else { "csv" };
                    write_file(&out_dir(g)?.join(format!("policy_comparison.{ext}")), &text)?;
                }
                None => emit(&text),
            }
            for c in &cmp.contrasts {
                eprintln!(
                    "{} vs unweighted: dMSE {:+.5} (SE {:.5}, paired SE {:.5})",
                    c.policy, c.delta_mse, c.se, c.paired_se
                );
            }
        }
    }
    Ok(())
}
