//! Prompt-conditioned visual token routing under an exact budget.
//!
//! The pipeline scores every visual token against prompt-derived cues
//! through frozen sparse sensing heads (the odor field), then spends the
//! token budget in three stages: a coarse window search over the field, a
//! lock-on pass that refines the pool while suppressing redundancy, and a
//! rescue pass that recovers relevant but under-covered tokens elsewhere
//! in the grid. Baseline pruners, a planted-evidence harness, and the
//! fixed-fidelity analysis tools share the same data model.

pub mod baselines;
pub mod cues;
pub mod embedding;
pub mod error;
pub mod harness;
pub mod io;
pub mod model;
pub mod rng;
pub mod search;
pub mod sensing;

pub use baselines::PrunerKind;
pub use cues::{
    apply_cue_ablations, build_cues, extract_target_phrase, McOption, PromptSpec, TaskHint,
};
pub use embedding::EmbeddingProvider;
pub use error::{Error, Result};
pub use harness::{
    evaluate, generate_task, run_battery, run_sweeps, sign_test, summarize, token_demand,
    BatteryConfig, MetricReport, MetricRow, RetentionCurve, Scenario, SyntheticTask,
};
pub use model::{Budget, Cue, CueKind, CueSet, HyperParams, PromptKind, SelectionTrace, TokenGrid};
pub use rng::Rng;
pub use search::{normalize, select, StageBudgets};
pub use sensing::{build_bank, head_response, odor_field, single_cue_field, SensingBank};
