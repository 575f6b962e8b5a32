//! Experiment orchestration: configuration, the oracle loop, logs,
//! summaries and replay.

pub mod config;
pub mod learner;
pub mod run;
pub mod runlog;
pub mod stream;

pub use config::{AblationCase, Algorithm, CoachParams, ExperimentConfig, GpcParams, OracleParams};
pub use learner::{Learner, LearnerConfig, Proposal};
pub use run::{
    average_episode_rates, default_ablation, default_grid, learner_config, run_ablation, run_experiment, run_grid,
    run_id, run_seed, run_seeds, RunOptions, SeedOutcome,
};
pub use runlog::{
    read_runlog, read_summary, summarize, walking_mean, write_runlog, write_summary, EpisodeRow, SummaryRow,
};
pub use stream::{
    read_step_stream, replay_session, replay_stream, FeedbackSource, Replay, StepRow, StepStream, StepStreamWriter,
};
