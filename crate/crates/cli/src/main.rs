//! `evalforge`: batch command surface over a project store.
//!
//! Exit codes: 0 success, 1 domain error (reported by its error name on
//! stderr), 2 usage error.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use chrono::NaiveDate;
use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(name = "evalforge", version, about = "Peer-review evaluation of research teams", propagate_version = true)]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,
    #[command(subcommand)]
    pub command: Command,
}

/// Settings shared by every subcommand. Each one resolves as
/// flag > `EVALFORGE_*` environment variable > `config.json` > default.
#[derive(Args, Debug, Clone)]
pub struct Global {
    /// Project store directory.
    #[arg(long, global = true, env = "EVALFORGE_PROJECT", default_value = "project")]
    pub project: PathBuf,
    /// Output format of data-emitting commands.
    #[arg(long, global = true, env = "EVALFORGE_FORMAT", value_enum)]
    pub format: Option<Format>,
    /// Weighting policy: unweighted, linear, squared or threshold:<min>.
    #[arg(long, global = true, env = "EVALFORGE_POLICY")]
    pub policy: Option<String>,
    /// Length of the evaluation window in years.
    #[arg(long, global = true, env = "EVALFORGE_WINDOW_YEARS")]
    pub window_years: Option<u32>,
    /// Days teams get to react to their report before it counts as accepted.
    #[arg(long, global = true, env = "EVALFORGE_REACTION_DAYS")]
    pub reaction_days: Option<u32>,
    /// Directory for written files.
    #[arg(long, global = true, env = "EVALFORGE_OUT")]
    pub out: Option<PathBuf>,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Expert suggestion, conflict screening and panel checks.
    #[command(subcommand)]
    Panel(PanelCmd),
    /// Evaluation files: draft from the store, merge team input, render.
    #[command(subcommand)]
    Dossier(DossierCmd),
    /// Returned evaluation forms.
    #[command(subcommand)]
    Forms(FormsCmd),
    /// Expertise-weighted aggregation, ranking and anonymous overviews.
    #[command(subcommand)]
    Score(ScoreCmd),
    /// Score distributions, correlations and bibliometric comparison.
    Analyze(AnalyzeArgs),
    /// Workflow phase of the project or of one discipline.
    #[command(subcommand)]
    Phase(PhaseCmd),
    /// Multi-year planning.
    #[command(subcommand)]
    Plan(PlanCmd),
    /// Global and per-team reports.
    #[command(subcommand)]
    Report(ReportCmd),
    /// Synthetic projects and Monte Carlo experiments.
    #[command(subcommand)]
    Simulate(SimulateCmd),
}

#[derive(Subcommand, Debug)]
pub enum PanelCmd {
    /// Adds suggested experts from a JSON file and records detected links.
    Suggest {
        /// File holding one expert or an array of experts.
        #[arg(long)]
        file: PathBuf,
    },
    /// Screens the experts of a discipline's panel; prints the audit table.
    Screen {
        #[arg(long)]
        discipline: String,
    },
    /// A team rejects a suggested expert.
    Reject {
        #[arg(long)]
        expert: String,
        #[arg(long)]
        team: String,
        #[arg(long)]
        justification: String,
    },
    /// Checks panel composition rules.
    Validate {
        #[arg(long)]
        discipline: String,
    },
}

#[derive(Subcommand, Debug)]
pub enum DossierCmd {
    /// Drafts a team's evaluation file from the store.
    Draft(DossierArgs),
    /// Merges team deltas from `<from>/<team>/*.json`.
    Merge {
        #[command(flatten)]
        args: DossierArgs,
        /// Directory containing one subdirectory per team.
        #[arg(long)]
        from: PathBuf,
    },
    /// Renders the evaluation file as a document.
    Render {
        #[command(flatten)]
        args: DossierArgs,
        #[arg(long)]
        allow_incomplete: bool,
    },
}

#[derive(Args, Debug)]
pub struct DossierArgs {
    #[arg(long)]
    pub team: String,
    /// Evaluation window as <start>:<end>; defaults to the project window.
    #[arg(long)]
    pub window: Option<String>,
}

#[derive(Subcommand, Debug)]
pub enum FormsCmd {
    /// Validates and stores every `*.json` form in a directory.
    Ingest {
        #[arg(long)]
        from: PathBuf,
    },
    /// Re-validates stored forms and counts them per team.
    Check,
}

#[derive(Subcommand, Debug)]
pub enum ScoreCmd {
    /// Per-team weighted aggregates.
    Aggregate(ScoreArgs),
    /// In-discipline ranking by overall score.
    Rank(ScoreArgs),
    /// Anonymous overview of one team's forms.
    Overview {
        #[arg(long)]
        team: String,
        /// Seed for the reviewer labels; defaults to the project seed.
        #[arg(long)]
        seed: Option<u64>,
    },
}

#[derive(Args, Debug)]
pub struct ScoreArgs {
    /// Restrict to one discipline; all disciplines otherwise.
    #[arg(long)]
    pub discipline: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Args, Debug)]
pub struct AnalyzeArgs {
    #[arg(value_enum)]
    pub what: Analysis,
    /// Indicator paired with the crown indicator by `scatter`.
    #[arg(long, default_value = "team_quality")]
    pub indicator: String,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Analysis {
    Dist,
    Corr,
    Crown,
    Scatter,
}

#[derive(Subcommand, Debug)]
pub enum PhaseCmd {
    /// Prints the current phase and what the next gate still needs.
    Status(PhaseArgs),
    /// Creates the workflow state.
    Start {
        #[command(flatten)]
        args: PhaseArgs,
        /// Final deadline (YYYY-MM-DD).
        #[arg(long)]
        deadline: Option<NaiveDate>,
    },
    /// Moves to the next phase if its gate is satisfied.
    Advance {
        #[command(flatten)]
        args: PhaseArgs,
        /// Target phase, e.g. P3; defaults to the next one.
        #[arg(long)]
        to: Option<String>,
    },
    /// Records evidence that is not derived from the store.
    Mark {
        #[command(flatten)]
        args: PhaseArgs,
        #[arg(value_enum)]
        artifact: Mark,
        /// Team, for debriefs.
        #[arg(long)]
        team: Option<String>,
        /// The team acknowledged its report.
        #[arg(long)]
        acknowledged: bool,
    },
}

#[derive(Args, Debug)]
pub struct PhaseArgs {
    /// Discipline-level workflow; the project-level one otherwise.
    #[arg(long)]
    pub discipline: Option<String>,
    /// Effective date (YYYY-MM-DD); today otherwise.
    #[arg(long)]
    pub on: Option<NaiveDate>,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mark {
    IntroDocuments,
    Invitations,
    Minutes,
    ReportsApproved,
    Debrief,
}

#[derive(Subcommand, Debug)]
pub enum PlanCmd {
    /// Assigns disciplines to years of the evaluation cycle.
    Cycle {
        #[arg(long, default_value_t = 8)]
        horizon: u32,
        #[arg(long, default_value_t = 2)]
        capacity: u32,
        /// CSV with columns discipline,year (0-based) for excluded years.
        #[arg(long)]
        blackouts: Option<PathBuf>,
        /// Comma-separated discipline ids; the store's disciplines otherwise.
        #[arg(long, value_delimiter = ',')]
        disciplines: Option<Vec<String>>,
    },
}

#[derive(Subcommand, Debug)]
pub enum ReportCmd {
    /// The discipline-wide report.
    Global {
        #[arg(long)]
        discipline: String,
    },
    /// The report of one team.
    Team {
        #[arg(long)]
        team: String,
    },
}

#[derive(Subcommand, Debug)]
pub enum SimulateCmd {
    /// Writes a synthetic project store to `--out`.
    Generate(SimArgs),
    /// Compares weighting policies against the latent team quality.
    Reliability {
        #[command(flatten)]
        args: SimArgs,
        #[arg(long, default_value_t = 1000)]
        replicates: usize,
        /// Use expertise-independent noise (only without --config).
        #[arg(long)]
        constant_noise: bool,
    },
}

#[derive(Args, Debug)]
pub struct SimArgs {
    /// Simulation config (JSON); a built-in preset otherwise.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
