//! Discipline-level research evaluation: evaluation files, expert panels with
//! conflict screening, expertise-weighted scoring, analytics, a phase-gated
//! workflow, two-track reporting and a Monte Carlo panel simulator.

pub mod analytics;
pub mod dossier;
pub mod model;
pub mod panel;
pub mod report;
pub mod scoring;
pub mod simulate;
pub mod store;
pub mod workflow;

pub use analytics::{AnalyticsError, CorrelationMatrix, CrownResult, FcsmWeighting, Histogram, ScatterStudy};
pub use dossier::{Document, DossierError, DraftDelta, EvaluationFile, Slot};
pub use model::{
    ActivityRecord, BibliometricRecord, Discipline, DisciplineId, EvaluationForm, Expert, ExpertId, Indicator, Score,
    Team, TeamId, ValidatedForm, Violation, YearWindow,
};
pub use panel::{PanelAssignment, PanelError, PanelReport};
pub use report::ReportError;
pub use scoring::{ScoreSummary, ScoringError, WeightingPolicy};
pub use simulate::{PolicyComparison, SimConfig, SimError};
pub use store::{ProjectSnapshot, ProjectStore, StoreError};
pub use workflow::{ArtifactRegistry, CyclePlan, Phase, PlanError, WorkflowError, WorkflowState};
