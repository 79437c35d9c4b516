//! `polylab`: reproducible experiment runner.
//!
//! Exit codes: 0 success, 2 validation error, 3 numerical-diagnostic failure.

mod config;
mod experiments;
mod record;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use polylab::Error;
use serde_json::json;

use config::Config;
use record::{append_record, config_hash, record_path, run_record, sha256_hex, table_path, unix_now};

#[derive(Parser)]
#[command(name = "polylab", version, about = "Experiments on polymers in heavy-tailed environments")]
struct Cli {
    /// Flat `key = value` configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Main CSV output; side tables and the run record are written next to it.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Extra `key=value` setting (repeatable).
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    set: Vec<String>,
    #[command(subcommand)]
    group: Group,
}

/// Flags mirroring config keys; a flag overrides the config file.
#[derive(Args, Default)]
struct Keys {
    #[arg(long)]
    d: Option<String>,
    #[arg(long)]
    alpha: Option<String>,
    #[arg(long)]
    gamma: Option<String>,
    #[arg(long)]
    beta_hat: Option<String>,
    #[arg(long)]
    h: Option<String>,
    #[arg(long)]
    beta: Option<String>,
    #[arg(long)]
    n: Option<String>,
    #[arg(long)]
    n_grid: Option<String>,
    #[arg(long)]
    replicas: Option<String>,
    #[arg(long)]
    ell: Option<String>,
    #[arg(long)]
    m: Option<String>,
    #[arg(long)]
    q: Option<String>,
    #[arg(long)]
    k: Option<String>,
    #[arg(long)]
    eps: Option<String>,
    #[arg(long)]
    r: Option<String>,
    #[arg(long)]
    b: Option<String>,
    #[arg(long)]
    c: Option<String>,
    #[arg(long)]
    kind: Option<String>,
    #[arg(long)]
    points: Option<String>,
    #[arg(long)]
    x: Option<String>,
    #[arg(long)]
    radius: Option<String>,
    #[arg(long)]
    samples: Option<String>,
    #[arg(long)]
    environments: Option<String>,
    #[arg(long)]
    method: Option<String>,
    #[arg(long)]
    moves: Option<String>,
    #[arg(long)]
    condition: Option<String>,
    #[arg(long)]
    condition_ell: Option<String>,
    #[arg(long)]
    level: Option<String>,
    #[arg(long)]
    t_grid: Option<String>,
    #[arg(long)]
    k_grid: Option<String>,
    #[arg(long)]
    beta_grid: Option<String>,
    #[arg(long)]
    scales: Option<String>,
    #[arg(long)]
    form: Option<String>,
    #[arg(long)]
    variant: Option<String>,
    #[arg(long)]
    range_replicas: Option<String>,
    #[arg(long)]
    batches: Option<String>,
    #[arg(long)]
    stability: Option<String>,
    #[arg(long)]
    only: Option<String>,
}

impl Keys {
    fn apply(&self, cfg: &mut Config) {
        let pairs = [
            ("d", &self.d),
            ("alpha", &self.alpha),
            ("gamma", &self.gamma),
            ("beta_hat", &self.beta_hat),
            ("h", &self.h),
            ("beta", &self.beta),
            ("n", &self.n),
            ("n_grid", &self.n_grid),
            ("replicas", &self.replicas),
            ("ell", &self.ell),
            ("m", &self.m),
            ("q", &self.q),
            ("k", &self.k),
            ("eps", &self.eps),
            ("r", &self.r),
            ("b", &self.b),
            ("c", &self.c),
            ("kind", &self.kind),
            ("points", &self.points),
            ("x", &self.x),
            ("radius", &self.radius),
            ("samples", &self.samples),
            ("environments", &self.environments),
            ("method", &self.method),
            ("moves", &self.moves),
            ("condition", &self.condition),
            ("condition_ell", &self.condition_ell),
            ("level", &self.level),
            ("t_grid", &self.t_grid),
            ("k_grid", &self.k_grid),
            ("beta_grid", &self.beta_grid),
            ("scales", &self.scales),
            ("form", &self.form),
            ("variant", &self.variant),
            ("range_replicas", &self.range_replicas),
            ("batches", &self.batches),
            ("stability", &self.stability),
            ("only", &self.only),
        ];
        for (k, v) in pairs {
            if let Some(v) = v {
                cfg.set(k, v.clone());
            }
        }
    }
}

macro_rules! group {
    ($name:ident { $($(#[$m:meta])* $variant:ident),* $(,)? }) => {
        #[derive(Subcommand)]
        enum $name {
            $($(#[$m])* $variant(Keys),)*
        }
        impl $name {
            fn parts(&self) -> (String, &Keys) {
                match self {
                    $($name::$variant(k) => (clap_name(stringify!($variant)), k),)*
                }
            }
        }
    };
}

fn clap_name(camel: &str) -> String {
    let mut s = String::new();
    for (i, ch) in camel.chars().enumerate() {
        if ch.is_uppercase() && i > 0 {
            s.push('-');
        }
        s.push(ch.to_ascii_lowercase());
    }
    s
}

group!(ModelCmd {
    /// Region and wandering exponent.
    Classify
});
group!(EnvCmd {
    /// Top order statistics of a lattice or Poisson field.
    Sample
});
group!(WalkCmd {
    /// Visit-probability profile f on a radius list.
    F,
    /// Lattice Green function at the sites `x`.
    Green,
    /// Expected overlap J_N of two independent ranges.
    Jn,
    /// Ordered-visit probability of `points`.
    Visit
});
group!(EntropyCmd {
    /// Entropy functionals of an ordered point set.
    Eval
});
group!(ElppCmd {
    /// Exact entropy-controlled last passage on one cloud.
    Solve,
    /// Tail table of L against the bound with constant `c`.
    Tail,
    /// Volume of the entropy ball.
    Volume
});
group!(VarprobCmd {
    /// Continuum variational problem on one Poisson field.
    Solve,
    /// Tail table of the truncated discrete problem.
    Tail,
    /// Critical coupling per field.
    Betac,
    /// Coupled samples for the scaling relation.
    Scaling
});
group!(PolymerCmd {
    /// Exact partition function by path enumeration.
    Exact,
    /// Monte Carlo partition function.
    Mc,
    /// Rescaled log-partition statistic of the parameter's region.
    RegionStat,
    /// Fluctuation exponent over an N grid.
    Fluct
});
group!(LimitsCmd {
    /// Green-weighted sum samples.
    Chi,
    /// Compensated Poisson integral samples.
    W
});
group!(VerifyCmd {
    /// Smoke-sized acceptance run.
    Fast,
    /// Acceptance run at full budgets.
    Full
});

#[derive(Subcommand)]
enum Group {
    #[command(subcommand)]
    Model(ModelCmd),
    #[command(subcommand)]
    Env(EnvCmd),
    #[command(subcommand)]
    Walk(WalkCmd),
    #[command(subcommand)]
    Entropy(EntropyCmd),
    #[command(subcommand)]
    Elpp(ElppCmd),
    #[command(subcommand)]
    Varprob(VarprobCmd),
    #[command(subcommand)]
    Polymer(PolymerCmd),
    #[command(subcommand)]
    Limits(LimitsCmd),
    #[command(subcommand)]
    Verify(VerifyCmd),
}

impl Group {
    fn parts(&self) -> (String, &Keys) {
        let (g, (leaf, keys)) = match self {
            Group::Model(c) => ("model", c.parts()),
            Group::Env(c) => ("env", c.parts()),
            Group::Walk(c) => ("walk", c.parts()),
            Group::Entropy(c) => ("entropy", c.parts()),
            Group::Elpp(c) => ("elpp", c.parts()),
            Group::Varprob(c) => ("varprob", c.parts()),
            Group::Polymer(c) => ("polymer", c.parts()),
            Group::Limits(c) => ("limits", c.parts()),
            Group::Verify(c) => ("verify", c.parts()),
        };
        (format!("{g}.{leaf}"), keys)
    }
}

enum Failure {
    Validation(String),
    Diagnostic(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        if e.is_validation() {
            Failure::Validation(e.to_string())
        } else {
            Failure::Diagnostic(e.to_string())
        }
    }
}

fn io_err(e: std::io::Error) -> Failure {
    Failure::Diagnostic(format!("i/o error: {e}"))
}

fn execute(cli: &Cli) -> Result<(), Failure> {
    let (experiment, keys) = cli.group.parts();
    let mut cfg = match &cli.config {
        Some(p) => Config::load(p)?,
        None => Config::default(),
    };
    for kv in &cli.set {
        let (k, v) = kv.split_once('=').ok_or_else(|| Failure::Validation(format!("--set expects KEY=VALUE, got `{kv}`")))?;
        cfg.set(k.trim(), v.trim());
    }
    keys.apply(&mut cfg);
    if let Some(e) = cfg.entries().get("experiment") {
        if *e != experiment {
            return Err(Failure::Validation(format!("config is for experiment `{e}`, not `{experiment}`")));
        }
    }
    let seed = match cli.seed {
        Some(s) => s,
        None => cfg.or("seed", 0u64)?,
    };
    let out = cli.out.clone().or_else(|| cfg.entries().get("out").map(PathBuf::from));
    let hash = config_hash(&experiment, seed, cfg.entries());
    let started = unix_now();
    let outcome = experiments::dispatch(&experiment, &cfg, seed)?;
    let finished = unix_now();

    let mut outputs = Vec::new();
    for (name, table) in &outcome.tables {
        let bytes = table.to_csv().map_err(io_err)?;
        let digest = sha256_hex(&bytes);
        match &out {
            Some(path) => {
                let p = table_path(path, name);
                if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                    std::fs::create_dir_all(dir).map_err(io_err)?;
                }
                std::fs::write(&p, &bytes).map_err(io_err)?;
                outputs.push(json!({ "path": p.display().to_string(), "sha256": digest, "rows": table.rows.len() }));
            }
            None => {
                print!("{}", String::from_utf8_lossy(&bytes));
                outputs.push(json!({ "path": "-", "sha256": digest, "rows": table.rows.len() }));
            }
        }
    }
    let rec = run_record(&experiment, &hash, seed, cfg.entries(), started, finished, outputs, &outcome);
    match &out {
        Some(path) => append_record(&record_path(path), &rec).map_err(io_err)?,
        None => eprintln!("{rec}"),
    }
    match outcome.diagnostic_failure {
        Some(msg) => Err(Failure::Diagnostic(msg)),
        None => Ok(()),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Validation(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Diagnostic(msg)) => {
            eprintln!("diagnostic failure: {msg}");
            ExitCode::from(3)
        }
    }
}
