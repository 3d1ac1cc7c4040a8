//! Seeded command drivers for the Werner-state toolkit. Every command frames
//! its data records between a header and a terminal status record; the exit
//! code reflects the status.

pub mod commands;
pub mod config;
pub mod output;

use std::ffi::OsString;
use std::sync::atomic::{AtomicBool, Ordering};
use std::time::{SystemTime, UNIX_EPOCH};

use clap::Parser;
use serde_json::json;

use crate::config::{resolve, Cli, RunConfig};
use crate::output::RecordSink;

pub const EXIT_OK: i32 = 0;
pub const EXIT_VIOLATION: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_INTERRUPTED: i32 = 130;

static INTERRUPTED: AtomicBool = AtomicBool::new(false);

/// Routes Ctrl-C to a flag checked between chunks.
pub fn install_interrupt_handler() {
    let _ = ctrlc::set_handler(|| INTERRUPTED.store(true, Ordering::SeqCst));
}

fn interrupted() -> bool {
    INTERRUPTED.load(Ordering::SeqCst)
}

/// Parses `args` (program name first) and runs the command.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let cfg = match resolve(cli).and_then(|cfg| commands::validate(&cfg).map(|_| cfg)) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_USAGE;
        }
    };
    execute(&cfg)
}

/// Runs a validated config on a pool capped at `cfg.threads` workers.
pub fn execute(cfg: &RunConfig) -> i32 {
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(cfg.threads).build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: cannot start worker pool: {e}");
            return EXIT_USAGE;
        }
    };
    pool.install(|| execute_on_pool(cfg))
}

fn execute_on_pool(cfg: &RunConfig) -> i32 {
    let mut sink = match RecordSink::open(cfg.output.as_deref(), cfg.format, "sample") {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: cannot open output: {e}");
            return EXIT_USAGE;
        }
    };
    let timestamp = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs());
    if let Err(e) = sink.header(cfg, timestamp) {
        eprintln!("error: cannot write output: {e}");
        return EXIT_USAGE;
    }
    let name = cfg.command.name();
    let (status, summary, headline) = match commands::dispatch(cfg, &mut sink, &interrupted) {
        Ok(r) if r.interrupted => ("interrupted", r.summary, r.headline),
        Ok(r) => ("complete", r.summary, r.headline),
        Err(e) => {
            sink.add_violation();
            ("error", json!({ "error": e.to_string() }), format!("failed: {e}"))
        }
    };
    let code = match status {
        "interrupted" => EXIT_INTERRUPTED,
        _ if sink.violations() > 0 => EXIT_VIOLATION,
        _ => EXIT_OK,
    };
    if let Err(e) = sink.status(status, code, summary) {
        eprintln!("error: cannot write status record: {e}");
    }
    eprintln!(
        "werner {name} d={}: {status}, {} records, {} violations; {headline}",
        cfg.d,
        sink.records(),
        sink.violations()
    );
    code
}
