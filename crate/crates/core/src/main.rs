use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use rayon::prelude::*;

use irsmac::channel::{generate_draw, generate_realization, ChannelRealization, Deployment, ScenarioConfig};
use irsmac::distributed::{direct_link_pentagon, distributed_capacity_region};
use irsmac::error::Error;
use irsmac::export::{
    compare_regions, provenance_line, region_csv, samples_csv, write_json, RunManifest, COMPARISON_TOL, VERSION,
};
use irsmac::geometry::{contains, minkowski_average, RateRegion};
use irsmac::oracle::{oracle_region, GridSpec};
use irsmac::profile::{heuristic_pentagon, inner_bound, twin_dominance_check, InnerBound, ProfileOptions};
use irsmac::sdp::SdpStatus;
use irsmac::sdr::{outer_bound, OuterBound};

const EXIT_FAILURE: u8 = 1;
const EXIT_USAGE: u8 = 2;

/// Accuracy of the sampled inner bound, bps/Hz.
const INNER_RESOLUTION: f64 = 5e-3;

#[derive(Parser)]
#[command(name = "irsmac", version, about = "Capacity regions of a two-user IRS-aided multiple access channel")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compute rate regions for one realization and write CSV/JSON outputs.
    Regions(RegionsArgs),
    /// Check bound orderings and solver certificates over seeded realizations.
    Validate(ValidateArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, ValueEnum)]
enum Method {
    NoIrs,
    Distributed,
    CentralizedInner,
    CentralizedOuter,
    Heuristic,
    Oracle,
}

impl Method {
    fn name(self) -> &'static str {
        match self {
            Method::NoIrs => "no-irs",
            Method::Distributed => "distributed",
            Method::CentralizedInner => "centralized-inner",
            Method::CentralizedOuter => "centralized-outer",
            Method::Heuristic => "heuristic",
            Method::Oracle => "oracle",
        }
    }
}

#[derive(clap::Args)]
struct RegionsArgs {
    /// Scenario TOML file; built-in defaults when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides the seed of the config.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(
        long,
        value_enum,
        value_delimiter = ',',
        default_value = "no-irs,distributed,centralized-inner,centralized-outer,heuristic"
    )]
    methods: Vec<Method>,
    /// Uniformly spaced rate profiles of the centralized inner bound.
    #[arg(long, default_value_t = 100)]
    alpha_samples: usize,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Also write every alternating-optimization trace as JSON.
    #[arg(long)]
    verbose_trace: bool,
    /// Phases per element of the exhaustive oracle.
    #[arg(long, default_value_t = 64)]
    oracle_l0: usize,
    /// Average the regions of this many independent channel draws.
    #[arg(long, default_value_t = 1)]
    draws: u64,
}

#[derive(clap::Args)]
struct ValidateArgs {
    /// Base scenario TOML file; built-in defaults when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Number of seeded realizations per size.
    #[arg(long, default_value_t = 20)]
    seeds: u64,
    /// Total element counts to test.
    #[arg(long, value_delimiter = ',', default_value = "2")]
    sizes: Vec<usize>,
    #[arg(long, default_value_t = 20)]
    alpha_samples: usize,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE } else { 0 });
        }
    };
    match cli.command {
        Command::Regions(args) => cmd_regions(&args),
        Command::Validate(args) => cmd_validate(&args),
    }
}

fn load_config(path: Option<&Path>) -> Result<ScenarioConfig, ExitCode> {
    let cfg = match path {
        Some(p) => ScenarioConfig::load(p).map_err(|e| {
            eprintln!("error: cannot load config {}: {e}", p.display());
            ExitCode::from(EXIT_USAGE)
        })?,
        None => ScenarioConfig::default(),
    };
    cfg.validate().map_err(|e| {
        eprintln!("error: {e}");
        ExitCode::from(EXIT_USAGE)
    })?;
    Ok(cfg)
}

/// Everything one method produces for the realization.
struct MethodOutput {
    region: RateRegion,
    inner: Option<InnerBound>,
    outer: Option<OuterBound>,
}

impl MethodOutput {
    fn region(region: RateRegion) -> Self {
        Self {
            region,
            inner: None,
            outer: None,
        }
    }
}

fn run_method(
    method: Method,
    real: &ChannelRealization,
    cfg: &ScenarioConfig,
    args: &RegionsArgs,
) -> irsmac::Result<MethodOutput> {
    Ok(match method {
        Method::NoIrs => MethodOutput::region(direct_link_pentagon(real, cfg).region()),
        Method::Distributed => MethodOutput::region(distributed_capacity_region(real, cfg)?.region),
        Method::CentralizedInner => {
            let inner = inner_bound(real, cfg, args.alpha_samples, &ProfileOptions::default())?;
            MethodOutput {
                region: inner.region.clone(),
                inner: Some(inner),
                outer: None,
            }
        }
        Method::CentralizedOuter => {
            let outer = outer_bound(real, cfg)?;
            MethodOutput {
                region: outer.region.clone(),
                inner: None,
                outer: Some(outer),
            }
        }
        Method::Heuristic => MethodOutput::region(heuristic_pentagon(real, cfg)?.region()),
        Method::Oracle => MethodOutput::region(oracle_region(
            real,
            cfg,
            &GridSpec::new(args.oracle_l0),
            Deployment::Centralized,
        )?),
    })
}

/// Runs `method` on every draw; regions of several draws are averaged.
fn run_over_draws(
    method: Method,
    draws: &[ChannelRealization],
    cfg: &ScenarioConfig,
    args: &RegionsArgs,
) -> irsmac::Result<MethodOutput> {
    let mut outputs = draws
        .iter()
        .map(|real| run_method(method, real, cfg, args))
        .collect::<irsmac::Result<Vec<_>>>()?;
    if outputs.len() == 1 {
        return Ok(outputs.remove(0));
    }
    let regions: Vec<RateRegion> = outputs.iter().map(|o| o.region.clone()).collect();
    let mut first = outputs.remove(0);
    first.region = minkowski_average(&regions)?;
    Ok(first)
}

fn cmd_regions(args: &RegionsArgs) -> ExitCode {
    let mut cfg = match load_config(args.config.as_deref()) {
        Ok(cfg) => cfg,
        Err(code) => return code,
    };
    if let Some(seed) = args.seed {
        cfg.rng_seed = seed;
    }
    if args.alpha_samples < 2 {
        eprintln!("error: --alpha-samples must be at least 2");
        return ExitCode::from(EXIT_USAGE);
    }
    if args.draws == 0 {
        eprintln!("error: --draws must be at least 1");
        return ExitCode::from(EXIT_USAGE);
    }
    let mut methods = args.methods.clone();
    methods.sort();
    methods.dedup();

    let draws = match (0..args.draws)
        .map(|d| if d == 0 { generate_realization(&cfg) } else { generate_draw(&cfg, d) })
        .collect::<irsmac::Result<Vec<_>>>()
    {
        Ok(d) => d,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_USAGE);
        }
    };

    let results: Vec<(Method, f64, irsmac::Result<MethodOutput>)> = methods
        .par_iter()
        .map(|&m| {
            let start = Instant::now();
            let out = run_over_draws(m, &draws, &cfg, args);
            (m, start.elapsed().as_secs_f64().max(1e-9), out)
        })
        .collect();

    let mut done = Vec::new();
    let mut skipped = BTreeMap::new();
    let mut runtime_s = BTreeMap::new();
    for (m, secs, out) in results {
        match out {
            Ok(o) => {
                runtime_s.insert(m.name().to_string(), secs);
                done.push((m, o));
            }
            Err(e @ (Error::BudgetExceeded { .. } | Error::Domain(_))) if m == Method::Oracle => {
                log::warn!("oracle skipped: {e}");
                skipped.insert(m.name().to_string(), e.to_string());
            }
            Err(e) => {
                eprintln!("error: method {} failed: {e}", m.name());
                return ExitCode::from(EXIT_FAILURE);
            }
        }
    }

    match write_outputs(args, &cfg, &methods, done, runtime_s, skipped) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: writing outputs: {e}");
            ExitCode::from(EXIT_FAILURE)
        }
    }
}

fn write_outputs(
    args: &RegionsArgs,
    cfg: &ScenarioConfig,
    methods: &[Method],
    done: Vec<(Method, MethodOutput)>,
    runtime_s: BTreeMap<String, f64>,
    skipped: BTreeMap<String, String>,
) -> irsmac::Result<()> {
    std::fs::create_dir_all(&args.out)?;
    let mut outputs = Vec::new();
    let mut write_text = |name: String, text: String| -> irsmac::Result<()> {
        let path = args.out.join(name);
        std::fs::write(&path, text)?;
        outputs.push(path);
        Ok(())
    };
    for (m, o) in &done {
        let provenance = provenance_line(&[
            ("method", m.name().to_string()),
            ("seed", cfg.rng_seed.to_string()),
            ("m_total", cfg.m_total.to_string()),
            ("draws", args.draws.to_string()),
        ]);
        write_text(format!("{}.csv", m.name()), region_csv(&o.region, &provenance))?;
        if let Some(inner) = &o.inner {
            write_text(format!("{}_samples.csv", m.name()), samples_csv(inner, &provenance))?;
            if args.verbose_trace {
                let traces: Vec<_> = inner
                    .samples
                    .iter()
                    .flat_map(|s| [&s.trace, &s.rejected])
                    .chain(&inner.refinements)
                    .collect();
                let json = serde_json::json!({ "version": VERSION, "traces": traces });
                write_text(format!("{}_traces.json", m.name()), serde_json::to_string_pretty(&json)? + "\n")?;
            }
        }
        if let Some(outer) = &o.outer {
            let json = serde_json::json!({
                "version": VERSION,
                "r1_cap": outer.r1_cap,
                "r2_cap": outer.r2_cap,
                "r12_cap": outer.r12_cap,
                "p0_upper": outer.p0_upper,
                "sdp": outer.sdp,
            });
            write_text(format!("{}_sdp.json", m.name()), serde_json::to_string_pretty(&json)? + "\n")?;
        }
    }
    let named: Vec<(String, RateRegion)> = done
        .iter()
        .map(|(m, o)| (m.name().to_string(), o.region.clone()))
        .collect();
    let comparison = compare_regions(&named, COMPARISON_TOL)?;
    write_text("comparison.json".into(), serde_json::to_string_pretty(&comparison)? + "\n")?;

    let manifest = RunManifest {
        version: VERSION.to_string(),
        config: cfg.clone(),
        rng_seed: cfg.rng_seed,
        draws: args.draws,
        methods: methods.iter().map(|m| m.name().to_string()).collect(),
        runtime_s,
        skipped,
        outputs,
    };
    write_json(&args.out.join("manifest.json"), &manifest)?;
    for c in &comparison.containment {
        log::info!("{} within {}: {}", c.inner, c.outer, c.contained);
    }
    Ok(())
}

/// Pass/fail tallies per named check.
#[derive(Default)]
struct Tally {
    checks: BTreeMap<&'static str, (u64, u64)>,
    failures: Vec<String>,
}

impl Tally {
    fn record(&mut self, name: &'static str, ok: bool, context: &str) {
        let entry = self.checks.entry(name).or_default();
        entry.1 += 1;
        if ok {
            entry.0 += 1;
        } else {
            self.failures.push(format!("{name} failed ({context})"));
        }
    }

    fn record_result(&mut self, name: &'static str, res: irsmac::Result<bool>, context: &str) {
        match res {
            Ok(ok) => self.record(name, ok, context),
            Err(e) => self.record(name, false, &format!("{context}: {e}")),
        }
    }
}

fn validate_one(cfg: &ScenarioConfig, l: usize, tally: &mut Tally) -> irsmac::Result<()> {
    let ctx = format!("m_total={} seed={}", cfg.m_total, cfg.rng_seed);
    let tol = COMPARISON_TOL;
    let real = generate_realization(cfg)?;
    let no_irs = direct_link_pentagon(&real, cfg).region();
    let dist = distributed_capacity_region(&real, cfg)?.region;
    tally.record_result("no-irs within distributed", contains(&dist, &no_irs, tol), &ctx);

    let outer = outer_bound(&real, cfg)?;
    let sdp = &outer.sdp;
    let certified = sdp.status == SdpStatus::Converged
        && sdp.gap >= -sdp.tolerance
        && sdp.gap <= sdp.tolerance.max(1e-9 * (1.0 + sdp.dual_value.abs()));
    tally.record("sdp certificate", certified, &ctx);

    let inner = inner_bound(&real, cfg, l, &ProfileOptions::default())?;
    tally.record_result("inner within outer", contains(&outer.region, &inner.region, tol), &ctx);
    let heur = heuristic_pentagon(&real, cfg)?.region();
    tally.record_result("heuristic within outer", contains(&outer.region, &heur, tol), &ctx);
    // ray sampling can step over narrow corners of single designs
    tally.record_result(
        "heuristic within inner (5e-3)",
        contains(&inner.region, &heur, INNER_RESOLUTION),
        &ctx,
    );

    let monotone = inner
        .samples
        .iter()
        .flat_map(|s| [&s.trace, &s.rejected])
        .chain(&inner.refinements)
        .all(|t| t.beta_history.windows(2).all(|w| w[1] >= w[0] * (1.0 - 1e-12)));
    tally.record("alternating optimization monotone", monotone, &ctx);

    let plain = ScenarioConfig {
        direct_links_enabled: false,
        twin_channels: true,
        ..cfg.clone()
    };
    let twin = generate_realization(&plain)?;
    tally.record_result(
        "twin dominance without direct links",
        twin_dominance_check(&twin, &plain).map(|d| d.holds),
        &ctx,
    );
    Ok(())
}

fn cmd_validate(args: &ValidateArgs) -> ExitCode {
    let base = match load_config(args.config.as_deref()) {
        Ok(cfg) => cfg,
        Err(code) => return code,
    };
    if args.alpha_samples < 2 {
        eprintln!("error: --alpha-samples must be at least 2");
        return ExitCode::from(EXIT_USAGE);
    }
    let mut tally = Tally::default();
    for &m in &args.sizes {
        for seed in 0..args.seeds {
            let cfg = base.with_elements(m).with_seed(seed);
            if let Err(e) = validate_one(&cfg, args.alpha_samples, &mut tally) {
                tally.record("run", false, &format!("m_total={m} seed={seed}: {e}"));
            }
        }
    }
    for f in &tally.failures {
        eprintln!("{f}");
    }
    for (name, (passed, total)) in &tally.checks {
        println!("{name}: {passed}/{total} passed");
    }
    if tally.failures.is_empty() {
        println!("validate: PASS ({} sizes x {} seeds)", args.sizes.len(), args.seeds);
        ExitCode::SUCCESS
    } else {
        println!("validate: FAIL ({} failed checks)", tally.failures.len());
        ExitCode::from(EXIT_FAILURE)
    }
}
