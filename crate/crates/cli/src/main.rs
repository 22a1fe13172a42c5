mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use dchaos::distfn::{
    estimate_mu, profile, symbolic_profile, window_start, EngineParams, GridSpec, PairStrategy, ProfileParams,
    ThresholdGrid, DEFAULT_SAMPLES,
};
use dchaos::engine::{exact_step_probabilities, monte_carlo, ExactParams};
use dchaos::maps::{builtin_by_name, identify, Builtin, SystemJson};
use dchaos::markov::{check_absorption, decompose, limit_profile, PairChain, ProbeParams};
use dchaos::perturb::{construct_star, verify_star};
use dchaos::symbolic::{witness_x_k, BlockSeq, RuleSet, WitnessParams};
use dchaos::{format_rational, parse_rational, zero_chaos_certificate, Rational, Scalar, SystemConfig};

use manifest::{Output, RunManifest};

#[derive(Parser)]
#[command(name = "dchaos", version, about = "Distributional chaos of two-map random systems on an interval")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Zero-chaos certificate from contraction and Lipschitz constants.
    Certificate(CertificateArgs),
    /// Lower and upper distribution functions of one pair, as CSV.
    Profile(ProfileArgs),
    /// Estimated measure of chaos over a set of pairs, as JSON.
    Mu(MuArgs),
    /// Exact Cesàro limits of the pair chain on a finite invariant set.
    Markov(MarkovArgs),
    /// Chaos-removing perturbation within a given distance.
    Perturb(PerturbArgs),
    /// Witness point of the builtin ternary systems.
    Witness(WitnessArgs),
    /// Step probabilities P(|x_i - y_i| < t), as CSV.
    Simulate(SimulateArgs),
}

#[derive(Args)]
struct SystemArgs {
    /// Builtin system: example1, example2, halving_pair, mixing_pair.
    #[arg(long, conflicts_with = "config", required_unless_present = "config")]
    builtin: Option<String>,
    /// System JSON file with maps `f`, `g` and optionally `p`.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Probability of applying f, as a rational such as 2/3 or 0.3.
    #[arg(long)]
    p: Option<String>,
}

#[derive(Args)]
struct OutArgs {
    /// Output file; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct EngineArgs {
    /// Exact law propagation instead of Monte Carlo.
    #[arg(long)]
    exact: bool,
    #[arg(long, default_value_t = DEFAULT_SAMPLES)]
    samples: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Horizon n_hi (default 20 exact, 1000 Monte Carlo).
    #[arg(long)]
    nmax: Option<usize>,
    /// Trailing fraction of the horizon used for the envelopes.
    #[arg(long, default_value = "1/2")]
    window: String,
    /// Steps skipped before averaging.
    #[arg(long, default_value_t = 0)]
    burn_in: usize,
    /// default, triadic, uniform:N or file:PATH.
    #[arg(long, default_value = "default")]
    tgrid: String,
    /// Atom cap of the exact engine.
    #[arg(long)]
    max_atoms: Option<usize>,
}

#[derive(Args)]
struct CertificateArgs {
    #[command(flatten)]
    system: SystemArgs,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Args)]
struct ProfileArgs {
    #[command(flatten)]
    system: SystemArgs,
    /// Start x: a rational, or a ternary block sequence like `0^3 2^5 0^inf`
    /// (builtin ternary systems, against y = 0).
    #[arg(long, required_unless_present = "witness")]
    x: Option<String>,
    /// Start y (default: left end of the interval).
    #[arg(long)]
    y: Option<String>,
    /// Use the witness point x^(k) against 0 (builtin ternary systems).
    #[arg(long, conflicts_with = "x")]
    witness: Option<u32>,
    #[command(flatten)]
    engine: EngineArgs,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Args)]
struct MuArgs {
    #[command(flatten)]
    system: SystemArgs,
    /// Add witness points x^(1..=K); `k=6` or `6`.
    #[arg(long)]
    witnesses: Option<String>,
    /// Points per side of the pair grid (0 disables it).
    #[arg(long, default_value_t = 16)]
    pair_grid: usize,
    /// Skip the rays (x, lo).
    #[arg(long)]
    no_rays: bool,
    /// Extra pair `x,y` (repeatable).
    #[arg(long = "pair")]
    pairs: Vec<String>,
    #[command(flatten)]
    engine: EngineArgs,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Args)]
struct MarkovArgs {
    #[command(flatten)]
    system: SystemArgs,
    /// Invariant set: rationals separated by whitespace or commas, or a JSON
    /// file with an `A` list. Defaults to the `A` list of the config file.
    #[arg(long)]
    a_file: Option<PathBuf>,
    /// Start pair for an exact limit profile.
    #[arg(long, requires = "y")]
    x: Option<String>,
    #[arg(long, requires = "x")]
    y: Option<String>,
    #[arg(long, default_value = "default")]
    tgrid: String,
    /// Probe horizon used when the covering property fails.
    #[arg(long, default_value_t = 64)]
    probe_n: usize,
    #[arg(long, default_value_t = 4096)]
    samples: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Also write the full chain and decomposition JSON here.
    #[arg(long)]
    dump: Option<PathBuf>,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Args)]
struct PerturbArgs {
    #[command(flatten)]
    system: SystemArgs,
    /// Allowed sup-distance from the original maps.
    #[arg(long)]
    eps: String,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Args)]
struct WitnessArgs {
    /// ex1 or ex2.
    #[arg(long)]
    rules: String,
    #[arg(long)]
    k: u32,
    #[arg(long)]
    p: String,
    /// Fit the two stages to the window [n_lo, NMAX] instead of the default
    /// search.
    #[arg(long)]
    nmax: Option<usize>,
    #[arg(long, default_value = "1/2")]
    window: String,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    system: SystemArgs,
    #[arg(long)]
    x: String,
    #[arg(long)]
    y: String,
    /// Last step recorded.
    #[arg(long, default_value_t = 100)]
    nmax: usize,
    #[arg(long)]
    exact: bool,
    #[arg(long, default_value_t = DEFAULT_SAMPLES)]
    samples: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "default")]
    tgrid: String,
    #[arg(long)]
    max_atoms: Option<usize>,
    #[command(flatten)]
    out: OutArgs,
}

fn rational(flag: &str, s: &str) -> Result<Rational> {
    parse_rational(s).map_err(|e| anyhow!("--{flag}: {e}"))
}

/// Loads the system and, for config files, the raw JSON (which may carry an
/// `A` list).
fn load_system(args: &SystemArgs, m: &mut RunManifest) -> Result<(SystemConfig, Option<serde_json::Value>)> {
    let p = args.p.as_deref().map(|s| rational("p", s)).transpose()?;
    let (config, raw) = match (&args.builtin, &args.config) {
        (Some(name), _) => {
            let p = p.ok_or_else(|| anyhow!("--p is required with --builtin"))?;
            m.builtin = Some(name.clone());
            (builtin_by_name(name, p)?, None)
        }
        (None, Some(path)) => {
            let text = std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
            let raw: serde_json::Value =
                serde_json::from_str(&text).with_context(|| format!("{} is not valid JSON", path.display()))?;
            let json: SystemJson = serde_json::from_value(raw.clone())
                .with_context(|| format!("{} is not a system file", path.display()))?;
            m.config_path = Some(path.display().to_string());
            (json.to_config(p)?, Some(raw))
        }
        (None, None) => bail!("one of --builtin or --config is required"),
    };
    m.p = Some(format_rational(&config.p));
    Ok((config, raw))
}

fn point(flag: &str, s: &str, config: &SystemConfig) -> Result<Rational> {
    let v = rational(flag, s)?;
    if !config.interval.contains(&v) {
        bail!(
            "--{flag} {} lies outside [{}, {}]",
            s,
            format_rational(config.interval.lo()),
            format_rational(config.interval.hi())
        );
    }
    Ok(v)
}

fn grid(spec: &str, config: &SystemConfig, m: &mut RunManifest) -> Result<ThresholdGrid> {
    let spec: GridSpec = spec.parse().map_err(|e| anyhow!("--tgrid: {e}"))?;
    let grid = spec.build(&config.interval).map_err(|e| anyhow!("--tgrid: {e}"))?;
    m.set("tgrid", grid.scheme());
    m.set("tgrid_points", grid.len());
    Ok(grid)
}

fn engine_params(args: &EngineArgs, m: &mut RunManifest) -> Result<ProfileParams> {
    let engine = if args.exact {
        let mut e = EngineParams::exact();
        if let (EngineParams::Exact { max_atoms, .. }, Some(cap)) = (&mut e, args.max_atoms) {
            *max_atoms = cap;
        }
        e
    } else {
        if args.samples == 0 {
            bail!("--samples must be positive");
        }
        EngineParams::monte_carlo(args.samples, args.seed)
    };
    let mut params = ProfileParams::new(engine).with_burn_in(args.burn_in);
    if let Some(n) = args.nmax {
        params = params.with_n_hi(n);
    }
    params = params.with_window(rational("window", &args.window)?);
    let n_lo = window_start(params.n_hi, &params.window_frac).map_err(|e| anyhow!("--window: {e}"))?;
    match &params.engine {
        EngineParams::Exact { max_atoms, .. } => {
            m.set("engine", "exact");
            m.set("max_atoms", max_atoms);
        }
        EngineParams::MonteCarlo { samples, seed } => {
            m.set("engine", "monte_carlo");
            m.set("samples", samples);
            m.seed = Some(*seed);
        }
    }
    m.set("n_lo", n_lo);
    m.set("n_hi", params.n_hi);
    m.set("window", format_rational(&params.window_frac));
    m.set("burn_in", params.burn_in);
    Ok(params)
}

fn rules_of(config: &SystemConfig) -> Result<RuleSet> {
    match identify(config) {
        Some(Builtin::Example1) => Ok(RuleSet::Ex1),
        Some(Builtin::Example2) => Ok(RuleSet::Ex2),
        _ => bail!("symbolic points need the example1 or example2 maps"),
    }
}

fn cmd_certificate(args: CertificateArgs) -> Result<()> {
    let mut m = RunManifest::new("certificate");
    let (config, _) = load_system(&args.system, &mut m)?;
    let out = Output { path: args.out.out };
    out.record(&mut m);
    out.json(&zero_chaos_certificate(&config), &m)
}

fn cmd_profile(args: ProfileArgs) -> Result<()> {
    let mut m = RunManifest::new("profile");
    let (config, _) = load_system(&args.system, &mut m)?;
    let grid = grid(&args.engine.tgrid, &config, &mut m)?;
    let params = engine_params(&args.engine, &mut m)?;
    let symbolic = match (&args.x, args.witness) {
        (_, Some(k)) => {
            let rules = rules_of(&config)?;
            let n_lo = window_start(params.n_hi, &params.window_frac)?;
            let w = witness_x_k(rules, k, &config.p, &WitnessParams::for_window(n_lo, params.n_hi))?;
            m.set("witness", k);
            Some((rules, w.point))
        }
        (Some(x), None) if x.contains('^') => {
            let seq: BlockSeq = x.parse().map_err(|e| anyhow!("--x: {e}"))?;
            Some((rules_of(&config)?, seq))
        }
        _ => None,
    };
    let prof = match symbolic {
        Some((rules, seq)) => {
            if let Some(y) = &args.y {
                if rational("y", y)? != *config.interval.lo() {
                    bail!("a symbolic x is only paired with y = 0");
                }
            }
            m.set("x", &seq);
            m.set("y", "0");
            symbolic_profile(rules, &seq, &config.p, &grid, &params)?
        }
        None => {
            let x = point("x", args.x.as_deref().expect("clap requires x"), &config)?;
            let y = match &args.y {
                Some(y) => point("y", y, &config)?,
                None => config.interval.lo().clone(),
            };
            m.set("x", format_rational(&x));
            m.set("y", format_rational(&y));
            profile(&config, &x, &y, &grid, &params)?
        }
    };
    m.set("gap_area", prof.gap_area(&config.interval));
    let out = Output { path: args.out.out };
    out.record(&mut m);
    let mut buf = Vec::new();
    prof.write_csv(&mut buf)?;
    out.csv(&buf, &m)
}

fn parse_witness_count(s: &str) -> Result<u32> {
    s.strip_prefix("k=")
        .unwrap_or(s)
        .parse()
        .map_err(|_| anyhow!("--witnesses expects `k=K` or `K`, got `{s}`"))
}

fn cmd_mu(args: MuArgs) -> Result<()> {
    let mut m = RunManifest::new("mu");
    let (config, _) = load_system(&args.system, &mut m)?;
    let grid = grid(&args.engine.tgrid, &config, &mut m)?;
    let params = engine_params(&args.engine, &mut m)?;
    let mut strategy = PairStrategy {
        grid_points: args.pair_grid,
        rays: !args.no_rays,
        ..PairStrategy::default()
    };
    for pair in &args.pairs {
        let (x, y) = pair
            .split_once(',')
            .ok_or_else(|| anyhow!("--pair expects `x,y`, got `{pair}`"))?;
        strategy.pairs.push((point("pair", x, &config)?, point("pair", y, &config)?));
    }
    if let Some(w) = &args.witnesses {
        let k = parse_witness_count(w)?;
        rules_of(&config)?;
        strategy = strategy.with_witnesses(k);
        m.set("witnesses", k);
    }
    m.set("pair_grid", strategy.grid_points);
    m.set("rays", strategy.rays);
    m.set("pairs", args.pairs.join(" "));
    let estimate = estimate_mu(&config, &strategy, &grid, &params)?;
    let out = Output { path: args.out.out };
    out.record(&mut m);
    out.json(&estimate, &m)
}

fn parse_set(text: &str) -> Result<Vec<Rational>> {
    if let Ok(serde_json::Value::Object(obj)) = serde_json::from_str::<serde_json::Value>(text) {
        return set_from_json(&serde_json::Value::Object(obj));
    }
    let points = text
        .split(|c: char| c.is_whitespace() || c == ',')
        .filter(|s| !s.is_empty())
        .map(|s| rational("a-file", s))
        .collect::<Result<Vec<_>>>()?;
    if points.is_empty() {
        bail!("--a-file lists no points");
    }
    Ok(points)
}

fn set_from_json(raw: &serde_json::Value) -> Result<Vec<Rational>> {
    let list: Vec<String> = serde_json::from_value(raw.get("A").cloned().ok_or_else(|| anyhow!("no `A` list"))?)
        .context("`A` must be a list of rational strings")?;
    list.iter().map(|s| rational("a-file", s)).collect()
}

#[derive(Serialize)]
struct LimitValue {
    t: String,
    f: String,
}

#[derive(Serialize)]
struct MarkovReport {
    set_size: usize,
    states: usize,
    closed_classes: Vec<Vec<(String, String)>>,
    stationary: Vec<Vec<String>>,
    transient: usize,
    /// Every row of Cesàro limits sums to exactly 1.
    row_sums_exact: bool,
    /// Largest gap area between the limit envelopes over all starts in A x A.
    max_gap_on_a: String,
    absorption: dchaos::markov::AbsorptionReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    limit: Option<Vec<LimitValue>>,
}

fn cmd_markov(args: MarkovArgs) -> Result<()> {
    let mut m = RunManifest::new("markov");
    let (config, raw) = load_system(&args.system, &mut m)?;
    let set = match (&args.a_file, &raw) {
        (Some(path), _) => {
            m.set("a_file", path.display());
            parse_set(&std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?)?
        }
        (None, Some(raw)) => set_from_json(raw).context("the config has no `A` list; pass --a-file")?,
        (None, None) => bail!("--a-file is required with --builtin"),
    };
    let grid = grid(&args.tgrid, &config, &mut m)?;
    let start = match (&args.x, &args.y) {
        (Some(x), Some(y)) => Some((point("x", x, &config)?, point("y", y, &config)?)),
        _ => None,
    };
    let probe = ProbeParams {
        n: args.probe_n,
        samples: args.samples,
        seed: args.seed,
    };
    m.set("probe_n", probe.n);
    m.set("probe_samples", probe.samples);
    m.seed = Some(probe.seed);

    let chain = PairChain::build(&config, &set)?;
    let start = start.map(|(x, y)| chain.state_index(&x, &y)).transpose()?;
    let dec = decompose(&chain.chain)?;
    let absorption = check_absorption(&config, &set, probe)?;
    let one = Rational::from_integer(1.into());
    let row_sums_exact = dec.limit_row_sums().iter().all(|s| *s == one);
    let mut max_gap = Rational::from_integer(0.into());
    for s in 0..chain.len() {
        let gap = limit_profile(&chain, &dec, s, &grid)?.gap_area(&config.interval);
        if gap > max_gap {
            max_gap = gap;
        }
    }
    let limit = start
        .map(|s| -> Result<Vec<LimitValue>> {
            let prof = limit_profile(&chain, &dec, s, &grid)?;
            Ok(grid
                .values()
                .iter()
                .zip(&prof.lower)
                .map(|(t, f)| LimitValue {
                    t: format_rational(t),
                    f: format_rational(f),
                })
                .collect())
        })
        .transpose()?;
    if let Some(path) = &args.dump {
        let dump = serde_json::json!({
            "chain": chain.to_json(),
            "decomposition": dec.to_json(),
        });
        std::fs::write(path, serde_json::to_string(&dump)? + "\n")
            .with_context(|| format!("cannot write {}", path.display()))?;
        m.outputs.push(path.display().to_string());
    }
    let report = MarkovReport {
        set_size: chain.points.len(),
        states: chain.len(),
        closed_classes: dec
            .closed_classes
            .iter()
            .map(|c| {
                c.iter()
                    .map(|&s| {
                        let (a, b) = chain.state(s);
                        (format_rational(a), format_rational(b))
                    })
                    .collect()
            })
            .collect(),
        stationary: dec.stationary.iter().map(|v| v.iter().map(format_rational).collect()).collect(),
        transient: dec.transient.len(),
        row_sums_exact,
        max_gap_on_a: format_rational(&max_gap),
        absorption,
        limit,
    };
    let out = Output { path: args.out.out };
    out.record(&mut m);
    out.json(&report, &m)
}

fn cmd_perturb(args: PerturbArgs) -> Result<()> {
    let mut m = RunManifest::new("perturb");
    let (config, _) = load_system(&args.system, &mut m)?;
    let eps = rational("eps", &args.eps)?;
    if eps <= Rational::from_integer(0.into()) {
        bail!("--eps must be positive");
    }
    m.set("eps", format_rational(&eps));
    let star = construct_star(&config, &eps)?;
    let report = verify_star(&star, &config.f, &config.g)?;
    let mut value = serde_json::to_value(star.to_json())?;
    value["report"] = serde_json::to_value(&report)?;
    let out = Output { path: args.out.out };
    out.record(&mut m);
    out.json(&value, &m)?;
    if let Some((cell, reason)) = report.first_failure(&star) {
        bail!("verification failed on cell {cell}: {reason}");
    }
    Ok(())
}

fn cmd_witness(args: WitnessArgs) -> Result<()> {
    let mut m = RunManifest::new("witness");
    let rules: RuleSet = args.rules.parse().map_err(|e| anyhow!("--rules: {e}"))?;
    let p = rational("p", &args.p)?;
    let half = Rational::new(1.into(), 2.into());
    if p <= half || p >= Rational::from_integer(1.into()) {
        bail!("--p must lie in (1/2, 1) for witness points");
    }
    if args.k == 0 {
        bail!("--k must be at least 1");
    }
    let params = match args.nmax {
        Some(n_hi) => {
            let w = rational("window", &args.window)?;
            let n_lo = window_start(n_hi, &w).map_err(|e| anyhow!("--window: {e}"))?;
            m.set("n_lo", n_lo);
            m.set("n_hi", n_hi);
            WitnessParams::for_window(n_lo, n_hi)
        }
        None => WitnessParams::default(),
    };
    m.builtin = Some(rules.system().name().to_string());
    m.p = Some(format_rational(&p));
    m.set("rules", rules);
    m.set("k", args.k);
    m.set("max_stages", params.max_stages);
    m.set("max_steps", params.max_steps);
    let witness = witness_x_k(rules, args.k, &p, &params)?;
    let out = Output { path: args.out.out };
    out.record(&mut m);
    out.json(&witness, &m)
}

fn cmd_simulate(args: SimulateArgs) -> Result<()> {
    let mut m = RunManifest::new("simulate");
    let (config, _) = load_system(&args.system, &mut m)?;
    let grid = grid(&args.tgrid, &config, &mut m)?;
    let x = point("x", &args.x, &config)?;
    let y = point("y", &args.y, &config)?;
    m.set("x", format_rational(&x));
    m.set("y", format_rational(&y));
    m.set("nmax", args.nmax);
    let steps = if args.exact {
        let mut params = ExactParams::<Rational>::default();
        if let Some(cap) = args.max_atoms {
            params.max_atoms = cap;
        }
        m.set("engine", "exact");
        m.set("max_atoms", params.max_atoms);
        exact_step_probabilities(&config, &x, &y, args.nmax, grid.values(), params)?.to_f64()
    } else {
        if args.samples == 0 {
            bail!("--samples must be positive");
        }
        m.set("engine", "monte_carlo");
        m.set("samples", args.samples);
        m.seed = Some(args.seed);
        monte_carlo(
            &config,
            x.to_f64(),
            y.to_f64(),
            args.nmax,
            args.samples,
            &grid.values_as::<f64>(),
            args.seed,
        )?
    };
    let out = Output { path: args.out.out };
    out.record(&mut m);
    let mut buf = Vec::new();
    steps.write_csv(&mut buf)?;
    out.csv(&buf, &m)
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Certificate(a) => cmd_certificate(a),
        Command::Profile(a) => cmd_profile(a),
        Command::Mu(a) => cmd_mu(a),
        Command::Markov(a) => cmd_markov(a),
        Command::Perturb(a) => cmd_perturb(a),
        Command::Witness(a) => cmd_witness(a),
        Command::Simulate(a) => cmd_simulate(a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let line = format!("{e:#}").replace('\n', " ");
            eprintln!("error: {line}");
            ExitCode::FAILURE
        }
    }
}
