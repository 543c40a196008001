//! The whole verification pipeline on a configuration file (default: the
//! built-in defaults for N = 2, s = 1/2, tau = 1/4), written to a run directory.

use logchoquard::config::{parse_config, RunConfig};
use logchoquard::constants::ProblemParams;
use logchoquard::pipeline::{run_verify_all, write_run_dir};
use std::path::PathBuf;

fn main() -> logchoquard::Result<()> {
    let mut args = std::env::args().skip(1);
    let cfg = match args.next() {
        Some(path) => parse_config(&PathBuf::from(path))?,
        None => RunConfig::with_problem(ProblemParams::new(2, 0.5, 0.25)?),
    };
    let out = PathBuf::from(args.next().unwrap_or_else(|| "run".into()));
    let outcome = run_verify_all(&cfg);
    write_run_dir(&out, &cfg, &outcome)?;
    println!("{}", outcome.report.summary());
    println!("run directory: {}", out.display());
    Ok(())
}
