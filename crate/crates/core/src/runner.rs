//! Executes a [`RunConfig`] and writes its report.

use std::path::Path;

use crate::checks::{run_check, Context};
use crate::config::{CheckId, RunConfig};
use crate::error::{Error, Result};
use crate::report::{Environment, Report};

/// Runs the configured checks (or `only`, when given) and writes the report to `out`.
pub fn run(cfg: &RunConfig, only: Option<&[CheckId]>, out: &Path) -> Result<Report> {
    let ctx = Context::from_config(cfg)?;
    let mut ids: Vec<CheckId> = only.map_or_else(|| cfg.checks.clone(), <[CheckId]>::to_vec);
    ids.sort_unstable();
    ids.dedup();
    for id in &ids {
        for s in id.required_symbols() {
            if !ctx.symbols.contains_key(*s) {
                return Err(Error::config(format!("symbols.{s}: required by check '{id}'")));
            }
        }
    }
    let checks = ids.iter().map(|&id| run_check(id, &ctx)).collect();
    let env = Environment {
        version: env!("CARGO_PKG_VERSION"),
        tolerances: cfg.tolerances,
        threads: rayon::current_num_threads(),
        seed: cfg.seed,
    };
    let config = serde_json::to_value(cfg).map_err(|e| Error::config(format!("config: {e}")))?;
    let mut report = Report::new(env, config, checks);
    report.write(out)?;
    Ok(report)
}
