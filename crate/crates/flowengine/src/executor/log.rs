//! Console logging gated by the control object's settings. Logs are a side
//! channel: nothing here ever reaches the result bytes.

use crate::control::{LogLevel, Settings};

#[derive(Debug, Clone)]
pub struct Logger {
    show: bool,
    level: LogLevel,
}

impl Logger {
    pub fn from_settings(settings: &Settings) -> Self {
        Logger {
            show: settings.log_show,
            level: settings.log_level,
        }
    }

    pub fn silent() -> Self {
        Logger {
            show: false,
            level: LogLevel::Error,
        }
    }

    pub fn enabled(&self, level: LogLevel) -> bool {
        self.show && level <= self.level
    }

    pub fn log(&self, level: LogLevel, stage: &str, fold: usize, engine: &str, message: &str) {
        if self.enabled(level) {
            let tag = match level {
                LogLevel::Error => "ERROR",
                LogLevel::Warn => "WARN",
                LogLevel::Info => "INFO",
                LogLevel::Debug => "DEBUG",
            };
            eprintln!("[{tag}] {stage}/{fold} {engine}: {message}");
        }
    }
}

/// Log one engine-scoped message through `logger`.
pub fn emit_log(
    logger: &Logger,
    level: LogLevel,
    stage: &str,
    fold: usize,
    engine: &str,
    message: &str,
) {
    logger.log(level, stage, fold, engine, message);
}
