//! Experiment runner behind the `otoc-lab` binary.

pub mod config;
pub mod run;

pub use config::{parse_config, parse_config_with, ConfigError, Experiment, ExperimentConfig, Overrides};
pub use run::{compute, execute, write_csv, Results, RunReport};

/// JSON Schema for [`RunReport`].
pub const REPORT_SCHEMA: &str = include_str!("../../../docs/report.schema.json");
/// JSON Schema for experiment configs.
pub const CONFIG_SCHEMA: &str = include_str!("../../../docs/config.schema.json");

/// Environment variable capping the worker count.
pub const THREADS_VAR: &str = "OTOC_LAB_THREADS";

/// Parses the thread cap. `None` and the empty string leave the default pool.
pub fn parse_thread_cap(value: Option<&str>) -> Result<Option<usize>, String> {
    match value.map(str::trim) {
        None | Some("") => Ok(None),
        Some(s) => match s.parse::<usize>() {
            Ok(0) | Err(_) => Err(format!("{THREADS_VAR} must be a positive integer, got '{s}'")),
            Ok(n) => Ok(Some(n)),
        },
    }
}

/// One line per registered strategy.
pub fn strategy_listing() -> String {
    let mut out = String::new();
    for info in otoc_core::tree::registry() {
        let depth = info.fixed_depth.map_or("any".to_string(), |d| d.to_string());
        let order = if info.time_ordered { "time-ordered" } else { "uses inverse" };
        out.push_str(&format!("{:<22} {:<13} depth={:<4} {}\n", info.name, order, depth, info.description));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn thread_cap() {
        assert_eq!(parse_thread_cap(None), Ok(None));
        assert_eq!(parse_thread_cap(Some(" 3 ")), Ok(Some(3)));
        assert!(parse_thread_cap(Some("0")).is_err());
        assert!(parse_thread_cap(Some("many")).is_err());
    }

    #[test]
    fn listing_names_every_strategy() {
        let text = strategy_listing();
        for name in otoc_core::tree::STRATEGY_NAMES {
            assert!(text.contains(name));
        }
    }
}
