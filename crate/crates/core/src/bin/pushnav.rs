use std::net::{IpAddr, SocketAddr};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};

use pushnav::env::{ActionMode, EnvKind, EnvSpec};
use pushnav::harness::{read_log, replay, run_suite, RawConfig};
use pushnav::metrics::aggregate_rows;
use pushnav::policies::PolicyKind;
use pushnav::teleop::{serve, ServeOptions};

#[derive(Parser)]
#[command(name = "pushnav", version, about = "Pushing navigation and manipulation benchmark")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run an evaluation suite and write a CSV report.
    Run(RunArgs),
    /// Re-simulate an episode log and check it reproduces.
    Replay {
        log: PathBuf,
    },
    /// Host an environment for a human operator over a web socket.
    TeleopServe(ServeArgs),
    /// List environments, their defaults and compatible policies.
    ListEnvs,
}

#[derive(Args, Default)]
struct SpecFlags {
    /// maze, ship_ice, box_delivery or area_clearing.
    #[arg(long)]
    env: Option<EnvKind>,
    /// Comma-separated overrides, e.g. `obs=10,layout=s`.
    #[arg(long)]
    variant: Option<String>,
    #[arg(long)]
    action_mode: Option<ActionMode>,
    #[arg(long)]
    bumper: Option<String>,
    #[arg(long)]
    boxes: Option<usize>,
    #[arg(long)]
    obstacles: Option<usize>,
    #[arg(long)]
    ice_concentration: Option<f64>,
    #[arg(long)]
    max_steps: Option<u64>,
    /// Any spec field as `key=value`; repeatable (`--set reward.c_dist=2`).
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

impl SpecFlags {
    fn fields(&self) -> Result<Vec<(String, String)>> {
        let mut out = Vec::new();
        if let Some(m) = self.action_mode {
            out.push(("action_mode".into(), m.as_str().into()));
        }
        if let Some(b) = &self.bumper {
            out.push(("bumper".into(), b.clone()));
        }
        if let Some(n) = self.boxes {
            out.push(("boxes".into(), n.to_string()));
        }
        if let Some(n) = self.obstacles {
            out.push(("obstacles".into(), n.to_string()));
        }
        if let Some(c) = self.ice_concentration {
            out.push(("ice_concentration".into(), c.to_string()));
        }
        if let Some(n) = self.max_steps {
            out.push(("max_steps".into(), n.to_string()));
        }
        for kv in &self.set {
            let (k, v) = kv.split_once('=').with_context(|| format!("--set expects KEY=VALUE, got `{kv}`"))?;
            out.push((k.trim().into(), v.trim().into()));
        }
        Ok(out)
    }
}

#[derive(Args)]
struct RunArgs {
    /// TOML file with the same keys as the flags; flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    spec: SpecFlags,
    #[arg(long)]
    policy: Option<PolicyKind>,
    #[arg(long)]
    episodes: Option<usize>,
    /// Base seed; episode i uses seed + i.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory for report.csv and logs/.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    parallelism: Option<usize>,
}

#[derive(Args)]
struct ServeArgs {
    #[command(flatten)]
    spec: SpecFlags,
    #[arg(long, default_value_t = 8765)]
    port: u16,
    #[arg(long, default_value = "127.0.0.1")]
    bind: IpAddr,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "teleop_logs")]
    log_dir: PathBuf,
}

fn run(args: RunArgs) -> Result<ExitCode> {
    let file = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            RawConfig::from_toml(&text)?
        }
        None => RawConfig::default(),
    };
    let flags = RawConfig {
        env: args.spec.env,
        variant: args.spec.variant.clone(),
        policy: args.policy,
        episodes: args.episodes,
        seed: args.seed,
        out: args.out.clone(),
        parallelism: args.parallelism,
        fields: args.spec.fields()?,
    };
    let cfg = file.merge(flags).build()?;
    eprintln!(
        "running {} episodes of {} [{}] with {} on {} worker(s)",
        cfg.episodes,
        cfg.spec.env,
        cfg.spec.variant_label(),
        cfg.policy,
        cfg.parallelism
    );
    let report = run_suite(&cfg)?;
    for agg in aggregate_rows(&report.rows) {
        let names = ["E_nav", "I_nav", "S_manip", "E_manip", "I_manip"];
        let cols: Vec<String> = names
            .iter()
            .zip(&agg.columns)
            .filter_map(|(n, c)| c.map(|(m, s)| format!("{n} {m:.3} ± {s:.3}")))
            .collect();
        println!("{} {} {} ({} episodes): {}", agg.env, agg.variant, agg.policy, agg.episodes, cols.join(", "));
    }
    for f in &report.failures {
        eprintln!("seed {} failed: {}", f.seed, f.error);
    }
    if let Some(dir) = &cfg.out {
        eprintln!("wrote {}", dir.join("report.csv").display());
    } else {
        print!("{}", report.csv()?);
    }
    Ok(if report.failures.is_empty() { ExitCode::SUCCESS } else { ExitCode::from(2) })
}

fn replay_cmd(path: PathBuf) -> Result<ExitCode> {
    let log = read_log(&path).with_context(|| format!("reading {}", path.display()))?;
    let r = replay(&log)?;
    println!("{}", serde_json::to_string_pretty(&r.log.footer.metrics)?);
    if r.identical {
        println!("replay identical ({} steps)", r.log.steps.len());
        Ok(ExitCode::SUCCESS)
    } else {
        println!("replay differs (footer {})", if r.footer_identical { "identical" } else { "differs" });
        Ok(ExitCode::FAILURE)
    }
}

fn teleop(args: ServeArgs) -> Result<ExitCode> {
    let raw = RawConfig {
        env: Some(args.spec.env.unwrap_or(EnvKind::Maze)),
        variant: args.spec.variant.clone(),
        fields: args.spec.fields()?,
        ..Default::default()
    };
    // policy is irrelevant here; pick one every environment supports
    let raw = RawConfig { policy: Some(PolicyKind::Idle), ..raw };
    let spec = raw.build()?.spec;
    let opts = ServeOptions {
        addr: SocketAddr::new(args.bind, args.port),
        speed: 1.0,
        seed: args.seed,
        log_dir: Some(args.log_dir),
    };
    let server = serve(spec, opts)?;
    eprintln!("serving on ws://{}", server.local_addr());
    server.join();
    Ok(ExitCode::SUCCESS)
}

fn list_envs() -> Result<ExitCode> {
    for kind in EnvKind::ALL {
        let spec = EnvSpec::new(kind);
        let policies: Vec<&str> = PolicyKind::ALL.iter().filter(|p| p.supports(&spec)).map(|p| p.as_str()).collect();
        println!(
            "{:<14} default [{}], action mode {}, max_steps {}; policies: {}",
            kind.as_str(),
            spec.variant_label(),
            spec.action_mode.as_str(),
            spec.max_steps,
            policies.join(", ")
        );
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Cmd::Run(a) => run(a),
        Cmd::Replay { log } => replay_cmd(log),
        Cmd::TeleopServe(a) => teleop(a),
        Cmd::ListEnvs => list_envs(),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
