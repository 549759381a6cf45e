//! Configuration, persistence and replay.

pub mod config;
pub mod replay;

pub use config::{
    config_to_string, load_config, parse_config, save_config, ConfigError, FieldError, ObserverConfig, OutputConfig,
    RecordMode, RunConfig, Spawn, CONFIG_FORMAT_VERSION,
};
pub use replay::{
    read_log, record_run, LogRecord, RecordError, ReplayError, ReplayLog, ReplayOutcome, ReplayRecorder,
    REPLAY_FORMAT_VERSION,
};

/// Process exit codes used by the command-line tool.
pub mod exit_code {
    pub const SUCCESS: i32 = 0;
    pub const CONFIG: i32 = 2;
    pub const RUNTIME: i32 = 3;
}
