mod commands;
mod config;
mod error;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use sha2::{Digest, Sha256};

use config::RunConfig;
use error::CliError;

#[derive(Parser)]
#[command(name = "cospectra", version, about = "Co-spectral radii, percolation exponents and walk growth")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a ball or Schreier ball and write it as text.
    GenGraph(Common),
    /// Exact walk distribution (and optional sampled trajectories).
    Walk(Common),
    /// One Bernoulli bond percolation sample.
    Percolate(Common),
    /// Quenched or annealed co-spectral radius.
    Cospectral(Common),
    /// 2-3 method checks on finite relations.
    TwoThree(Common),
    /// Walk counts and their growth rate.
    WalkGrowth(Common),
    /// Scan rho(B_p) over p and bracket p_Ram and p_ca.
    ScanExponents(Common),
}

#[derive(Args)]
struct Common {
    /// Configuration file (`key = value` lines under `[section]` headers).
    #[arg(long)]
    config: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    out: Option<String>,
    /// Worker threads (0 = all cores).
    #[arg(long)]
    workers: Option<usize>,
    /// Fail instead of flagging results affected by truncation.
    #[arg(long)]
    strict: bool,
    /// Validate the configuration and print the plan without computing.
    #[arg(long)]
    dry_run: bool,
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::GenGraph(_) => "gen-graph",
            Command::Walk(_) => "walk",
            Command::Percolate(_) => "percolate",
            Command::Cospectral(_) => "cospectral",
            Command::TwoThree(_) => "two-three",
            Command::WalkGrowth(_) => "walk-growth",
            Command::ScanExponents(_) => "scan-exponents",
        }
    }

    fn common(&self) -> &Common {
        match self {
            Command::GenGraph(c)
            | Command::Walk(c)
            | Command::Percolate(c)
            | Command::Cospectral(c)
            | Command::TwoThree(c)
            | Command::WalkGrowth(c)
            | Command::ScanExponents(c) => c,
        }
    }
}

fn load_config(cmd: &Command) -> Result<RunConfig, CliError> {
    let c = cmd.common();
    let mut cfg = match &c.config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
            RunConfig::parse(&text)?
        }
        None => RunConfig::default(),
    };
    if let Some(sub) = cfg.raw("run", "subcommand") {
        if sub != cmd.name() {
            return Err(CliError::Config {
                line: 0,
                message: format!("config is for `{sub}`, not `{}`", cmd.name()),
            });
        }
    }
    cfg.set("run", "subcommand", cmd.name());
    if let Some(seed) = c.seed {
        cfg.set("run", "seed", seed.to_string());
    }
    if let Some(out) = &c.out {
        cfg.set("run", "out", out.as_str());
    }
    if let Some(w) = c.workers {
        cfg.set("run", "workers", w.to_string());
    }
    if c.strict {
        cfg.set("run", "strict", "true");
    }
    Ok(cfg)
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

fn run(cmd: &Command) -> Result<(), CliError> {
    let cfg = load_config(cmd)?;
    let out_dir: PathBuf = cfg.get_or("run", "out", PathBuf::from("out"))?;
    let dry = cmd.common().dry_run;
    let workers: usize = cfg.get_or("run", "workers", 0)?;
    let out = out_dir;
    let started = Instant::now();
    let exec = || match cmd {
        Command::GenGraph(_) => commands::gen_graph(&cfg, dry),
        Command::Walk(_) => commands::walk(&cfg, dry),
        Command::Percolate(_) => commands::percolate(&cfg, dry),
        Command::Cospectral(_) => commands::cospectral(&cfg, dry),
        Command::TwoThree(_) => commands::two_three(&cfg, dry),
        Command::WalkGrowth(_) => commands::walk_growth(&cfg, dry),
        Command::ScanExponents(_) => commands::scan_exponents(&cfg, dry),
    };
    let (summary, artifacts) = cospectra::with_workers(workers, exec)??;
    if dry {
        let plan = serde_json::json!({ "dry_run": true, "plan": summary, "config": cfg.to_text() });
        println!("{}", serde_json::to_string_pretty(&plan).expect("serialisable"));
        return Ok(());
    }
    fs::create_dir_all(&out).map_err(|e| CliError::io(out.display(), e))?;
    let write = |name: &str, bytes: &[u8]| -> Result<(), CliError> {
        let path = out.join(name);
        fs::write(&path, bytes).map_err(|e| CliError::io(path.display(), e))
    };
    let config_text = cfg.to_text();
    write("config.txt", config_text.as_bytes())?;
    for (name, bytes) in &artifacts {
        write(name, bytes)?;
    }
    let mut manifest = String::new();
    manifest.push_str(&format!("subcommand = {}\n", cmd.name()));
    manifest.push_str(&format!("config_sha256 = {}\n", hex(&Sha256::digest(config_text.as_bytes()))));
    manifest.push_str(&format!("cospectra_version = {}\n", cospectra::VERSION));
    manifest.push_str(&format!("cli_version = {}\n", env!("CARGO_PKG_VERSION")));
    for (name, bytes) in &artifacts {
        manifest.push_str(&format!("artifact {} sha256 = {}\n", name, hex(&Sha256::digest(bytes))));
    }
    manifest.push_str(&format!("runtime_ms = {}\n", started.elapsed().as_millis()));
    write("manifest.txt", manifest.as_bytes())?;
    println!("{}", serde_json::to_string_pretty(&summary).expect("serialisable"));
    Ok(())
}

fn report(err: &CliError, out: Option<&Path>) {
    let payload = err.payload();
    eprintln!("{}", serde_json::to_string(&payload).expect("serialisable"));
    if let Some(dir) = out {
        if fs::create_dir_all(dir).is_ok() {
            let pretty = serde_json::to_string_pretty(&payload).expect("serialisable");
            let _ = fs::write(dir.join("error.json"), format!("{pretty}\n"));
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            report(&e, cli.command.common().out.as_deref().map(Path::new));
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
