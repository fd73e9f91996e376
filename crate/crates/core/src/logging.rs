//! Minimal leveled logging to stderr, controlled by `LEXFORGE_LOG`.

use std::fmt::Display;
use std::sync::OnceLock;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Level {
    Error,
    Warn,
    Info,
    Debug,
}

impl Level {
    fn as_str(self) -> &'static str {
        match self {
            Level::Error => "error",
            Level::Warn => "warn",
            Level::Info => "info",
            Level::Debug => "debug",
        }
    }
}

static THRESHOLD: OnceLock<Level> = OnceLock::new();

fn threshold() -> Level {
    *THRESHOLD.get_or_init(|| match std::env::var("LEXFORGE_LOG").as_deref() {
        Ok("error") => Level::Error,
        Ok("warn") => Level::Warn,
        Ok("debug") => Level::Debug,
        _ => Level::Info,
    })
}

pub fn enabled(level: Level) -> bool {
    level <= threshold()
}

pub fn log(level: Level, msg: impl Display) {
    if enabled(level) {
        eprintln!("[lexforge {}] {msg}", level.as_str());
    }
}

pub fn error(msg: impl Display) {
    log(Level::Error, msg);
}

pub fn warn(msg: impl Display) {
    log(Level::Warn, msg);
}

pub fn info(msg: impl Display) {
    log(Level::Info, msg);
}

pub fn debug(msg: impl Display) {
    log(Level::Debug, msg);
}
