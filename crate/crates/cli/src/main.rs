//! `ustm`: generate, evaluate, search, simulate and benchmark unitary
//! space-time constellations.

mod failure;
mod format;
mod manifest;

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::Rng;

use ustm::channel::{
    frame_rng, simulate_differential, ChannelConfig, Demodulator, ExhaustiveDemodulator, FastDemodulator,
};
use ustm::fastdec::{
    build_tables, default_radius_sqr, exhaustive_decode, fast_decode_with, DecodeOptions, DecodeStats,
};
use ustm::linalg::ComplexMatrix;
use ustm::metrics::{
    db_to_linear, distance_spectrum, diversity_function, diversity_product, diversity_sum, exact_diversity_function,
    Constellation, SnrPoint, SquareConstellation,
};
use ustm::param::complex_gaussian;
use ustm::search::{
    grid_search_geometric, multi_start, simulated_annealing, GridMode, Objective, ObjectiveKind, SaConfig,
    SearchResult,
};
use ustm::structures::{catalog, expand, Expanded, StructureKind, StructureSpec};
use ustm::tol::{apply_override, set_tolerances, Tolerances};
use ustm::ucon;

use failure::Failure;
use format::{num, parse_angle};
use manifest::Manifest;

#[derive(Parser, Debug)]
#[command(name = "ustm", version, about = "Unitary space-time constellation toolkit")]
struct Cli {
    /// Seed for every stochastic step (required by search --anneal,
    /// simulate and decbench).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker thread cap.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Primary output file (UCON or CSV); stdout when absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Manifest path; defaults to `<out>.manifest`, or stderr without --out.
    #[arg(long, global = true)]
    manifest: Option<PathBuf>,
    /// Tolerance override `key=value`, repeatable.
    #[arg(long = "tol", global = true, value_name = "KEY=VALUE")]
    tol: Vec<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write a constellation as UCON.
    Gen(SourceArgs),
    /// DP, DS and diversity-function samples of a constellation.
    Eval(EvalArgs),
    /// DP and DS distance spectra.
    Spectrum(SourceArgs),
    /// Grid or annealing search.
    Search(SearchArgs),
    /// Differential-link block error rate.
    Simulate(SimulateArgs),
    /// Fast decoder against exhaustive ML on identical blocks.
    Decbench(DecbenchArgs),
}

/// Where a constellation comes from: exactly one of the selectors.
#[derive(Args, Debug, Clone)]
struct SourceArgs {
    /// Published constellation name.
    #[arg(long)]
    catalog: Option<String>,
    /// UCON file.
    #[arg(long)]
    input: Option<PathBuf>,
    /// Two-dimensional geometric family `A^k B^k` from --x --y --z.
    #[arg(long)]
    geometric2: bool,
    /// Same as --geometric2.
    #[arg(long = "weak-group")]
    weak_group: bool,
    /// Three-dimensional geometric family from --x --y --z --w.
    #[arg(long)]
    geometric3: bool,
    /// Cyclic family `A^k` with A = diag(e^{i·diag}).
    #[arg(long)]
    cyclic: bool,
    /// Number of elements.
    #[arg(long = "L", alias = "len")]
    len: Option<usize>,
    #[arg(long, value_parser = parse_angle, allow_hyphen_values = true)]
    x: Option<f64>,
    #[arg(long, value_parser = parse_angle, allow_hyphen_values = true)]
    y: Option<f64>,
    #[arg(long, value_parser = parse_angle, allow_hyphen_values = true)]
    z: Option<f64>,
    #[arg(long, value_parser = parse_angle, allow_hyphen_values = true)]
    w: Option<f64>,
    /// Comma-separated diagonal phases for --cyclic.
    #[arg(long, value_delimiter = ',', value_parser = parse_angle, allow_hyphen_values = true)]
    diag: Vec<f64>,
}

#[derive(Args, Debug)]
struct EvalArgs {
    #[command(flatten)]
    source: SourceArgs,
    /// SNR points (dB) for diversity-function samples.
    #[arg(long = "snr-db", value_delimiter = ',', allow_hyphen_values = true)]
    snr_db: Vec<f64>,
    #[arg(long = "n-rx", default_value_t = 1)]
    n_rx: usize,
    /// Also evaluate the exact (integral) diversity function.
    #[arg(long)]
    exact: bool,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq)]
enum Method {
    Grid,
    Anneal,
}

#[derive(Args, Debug)]
struct SearchArgs {
    /// Exhaustive angle grid over the geometric family.
    #[arg(long, conflicts_with = "anneal")]
    grid: bool,
    /// Simulated annealing over structure generators.
    #[arg(long)]
    anneal: bool,
    /// Grid of multiples of 2π/L.
    #[arg(long, conflicts_with = "step")]
    multiples: bool,
    /// Uniform grid step in radians.
    #[arg(long)]
    step: Option<f64>,
    #[arg(long = "L", alias = "len")]
    len: Option<usize>,
    /// dp, ds or divfn.
    #[arg(long, default_value = "dp")]
    objective: String,
    /// SNR (dB) of the divfn objective.
    #[arg(long = "snr-db", allow_hyphen_values = true)]
    snr_db: Option<f64>,
    #[arg(long = "n-rx", default_value_t = 1)]
    n_rx: usize,
    /// Structure kind for annealing.
    #[arg(long)]
    kind: Option<String>,
    /// Transmit antennas M for annealing.
    #[arg(long)]
    m: Option<usize>,
    /// Family sizes: L, or p,q, or T,L for the general form.
    #[arg(long, value_delimiter = ',')]
    sizes: Vec<usize>,
    /// Start annealing from a published constellation.
    #[arg(long = "init-catalog")]
    init_catalog: Option<String>,
    #[arg(long)]
    iters: Option<usize>,
    #[arg(long)]
    t0: Option<f64>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    sigma0: Option<f64>,
    #[arg(long = "sigma-floor")]
    sigma_floor: Option<f64>,
    #[arg(long = "epoch-len")]
    epoch_len: Option<usize>,
    #[arg(long = "stall-epochs")]
    stall_epochs: Option<usize>,
    /// Independent chains, seeds seed..seed+chains−1.
    #[arg(long, default_value_t = 1)]
    chains: usize,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum DecoderArg {
    Ml,
    Fast,
}

#[derive(Args, Debug)]
struct SimulateArgs {
    #[command(flatten)]
    source: SourceArgs,
    #[arg(long = "snr-db", value_delimiter = ',', required = true, allow_hyphen_values = true)]
    snr_db: Vec<f64>,
    #[arg(long = "n-rx", default_value_t = 1)]
    n_rx: usize,
    /// Data blocks per channel realization.
    #[arg(long = "frame-blocks", default_value_t = 100)]
    frame_blocks: usize,
    /// Number of channel realizations.
    #[arg(long, default_value_t = 1000)]
    trials: usize,
    #[arg(long, value_enum, default_value = "ml")]
    decoder: DecoderArg,
}

#[derive(Args, Debug)]
struct DecbenchArgs {
    #[command(flatten)]
    source: SourceArgs,
    #[arg(long = "snr-db", default_value_t = 6.0, allow_hyphen_values = true)]
    snr_db: f64,
    #[arg(long = "n-rx", default_value_t = 2)]
    n_rx: usize,
    #[arg(long, default_value_t = 10_000)]
    blocks: usize,
    /// Blocks per channel realization.
    #[arg(long = "frame-blocks", default_value_t = 100)]
    frame_blocks: usize,
    /// Enable radius mode with the default radius.
    #[arg(long)]
    radius: bool,
}

/// A resolved constellation.
struct Source {
    spec: Option<StructureSpec>,
    elements: Vec<ComplexMatrix>,
}

impl Source {
    fn is_square(&self) -> bool {
        self.elements.first().is_some_and(|e| e.is_square())
    }

    fn square(&self) -> Result<SquareConstellation, Failure> {
        if !self.is_square() {
            return Err(Failure::usage("this command needs a square (differential) constellation"));
        }
        Ok(SquareConstellation::new(self.elements.clone())?)
    }

    /// Frames for evaluation, validated including distinctness.
    fn frames(&self) -> Result<Constellation, Failure> {
        let c = if self.is_square() {
            self.square()?.lift()?
        } else {
            Constellation::new(self.elements.clone())?
        };
        c.validate()?;
        Ok(c)
    }
}

fn elements_of(e: &Expanded) -> Vec<ComplexMatrix> {
    match e {
        Expanded::Square(s) => s.elements().to_vec(),
        Expanded::Frames(c) => c.elements().to_vec(),
    }
}

fn need<T>(v: Option<T>, flag: &str) -> Result<T, Failure> {
    v.ok_or_else(|| Failure::usage(format!("missing {flag}")))
}

fn resolve(src: &SourceArgs, manifest: &mut Manifest) -> Result<Source, Failure> {
    let chosen = [
        src.catalog.is_some(),
        src.input.is_some(),
        src.geometric2 || src.weak_group,
        src.geometric3,
        src.cyclic,
    ]
    .iter()
    .filter(|&&b| b)
    .count();
    if chosen != 1 {
        return Err(Failure::usage(
            "choose exactly one of --catalog, --input, --geometric2/--weak-group, --geometric3, --cyclic",
        ));
    }
    if let Some(name) = &src.catalog {
        let e = catalog(name)?;
        return Ok(Source {
            spec: e.spec,
            elements: e.elements.elements().to_vec(),
        });
    }
    if let Some(path) = &src.input {
        let text = fs::read_to_string(path).map_err(|e| Failure::usage(format!("cannot read {}: {e}", path.display())))?;
        manifest.input(path);
        let u = ucon::read(&text)?;
        return Ok(Source {
            spec: None,
            elements: u.elements,
        });
    }
    let len = need(src.len, "--L")?;
    let spec = if src.cyclic {
        if src.diag.is_empty() {
            return Err(Failure::usage("--cyclic needs --diag"));
        }
        let d: Vec<_> = src.diag.iter().map(|&t| ustm::linalg::C64::from_polar(1.0, t)).collect();
        StructureSpec::Cyclic {
            a: ComplexMatrix::from_diag(&d),
            len,
        }
    } else if src.geometric3 {
        StructureSpec::Geometric3 {
            x: need(src.x, "--x")?,
            y: need(src.y, "--y")?,
            z: need(src.z, "--z")?,
            w: need(src.w, "--w")?,
            len,
        }
    } else {
        StructureSpec::Geometric2 {
            x: need(src.x, "--x")?,
            y: need(src.y, "--y")?,
            z: need(src.z, "--z")?,
            len,
        }
    };
    let expanded = expand(&spec)?;
    Ok(Source {
        elements: elements_of(&expanded),
        spec: Some(spec),
    })
}

/// Writes `text` to `--out` or stdout.
fn emit(out: Option<&Path>, text: &str, manifest: &mut Manifest) -> Result<(), Failure> {
    match out {
        Some(p) => {
            fs::write(p, text).map_err(|e| Failure::usage(format!("cannot write {}: {e}", p.display())))?;
            manifest.output(p);
        }
        None => print!("{text}"),
    }
    Ok(())
}

fn write_side_file(path: PathBuf, text: &str, manifest: &mut Manifest) -> Result<(), Failure> {
    fs::write(&path, text).map_err(|e| Failure::usage(format!("cannot write {}: {e}", path.display())))?;
    manifest.output(&path);
    Ok(())
}

fn with_suffix(p: &Path, suffix: &str) -> PathBuf {
    let mut s = p.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

fn cmd_gen(cli: &Cli, src: &SourceArgs, manifest: &mut Manifest) -> Result<(), Failure> {
    let s = resolve(src, manifest)?;
    let first = &s.elements[0];
    let (t, m, l) = (first.rows(), first.cols(), s.elements.len());
    let text = ucon::write(&s.elements)?;
    emit(cli.out.as_deref(), &text, manifest)?;
    let summary = format!("L={l} T={t} M={m} rate={}", num((l as f64).log2() / t as f64));
    if cli.out.is_some() {
        println!("{summary}");
    } else {
        eprintln!("{summary}");
    }
    if let Some(spec) = &s.spec {
        if let Some((i, j)) = expand(spec)?.duplicate_pair() {
            log::warn!("elements {i} and {j} coincide");
        }
    }
    Ok(())
}

fn cmd_eval(cli: &Cli, args: &EvalArgs, manifest: &mut Manifest) -> Result<(), Failure> {
    let c = resolve(&args.source, manifest)?.frames()?;
    let (dp, (di, dj)) = diversity_product(&c);
    let (ds, (si, sj)) = diversity_sum(&c);
    let mut csv = String::from("metric,value,i,j\n");
    let _ = writeln!(csv, "dp,{},{di},{dj}", num(dp));
    let _ = writeln!(csv, "ds,{},{si},{sj}", num(ds));
    for &db in &args.snr_db {
        let snr = SnrPoint::from_db(db, c.t(), c.m())?;
        let f = diversity_function(&c, args.n_rx, snr)?;
        let _ = writeln!(csv, "chernoff_{db}db,{},,", num(f));
        if args.exact {
            let e = exact_diversity_function(&c, args.n_rx, snr)?;
            let _ = writeln!(csv, "exact_{db}db,{},,", num(e));
        }
    }
    emit(cli.out.as_deref(), &csv, manifest)?;
    eprintln!("L={} T={} M={} DP={} DS={}", c.len(), c.t(), c.m(), num(dp), num(ds));
    Ok(())
}

fn cmd_spectrum(cli: &Cli, src: &SourceArgs, manifest: &mut Manifest) -> Result<(), Failure> {
    let c = resolve(src, manifest)?.frames()?;
    let r = distance_spectrum(&c);
    let mut csv = String::from("kind,distance,multiplicity\n");
    for (kind, rows) in [("dp", &r.spectrum_dp), ("ds", &r.spectrum_ds)] {
        for (d, k) in rows {
            let _ = writeln!(csv, "{kind},{d:.4},{k}");
        }
    }
    emit(cli.out.as_deref(), &csv, manifest)
}

fn objective_of(args: &SearchArgs) -> Result<Objective, Failure> {
    let kind: ObjectiveKind = args.objective.parse().map_err(Failure::Usage)?;
    Ok(match kind {
        ObjectiveKind::MaximizeDp => Objective::maximize_dp(),
        ObjectiveKind::MaximizeDs => Objective::maximize_ds(),
        ObjectiveKind::MinimizeDivfn => {
            let db = need(args.snr_db, "--snr-db for the divfn objective")?;
            Objective::minimize_divfn(db_to_linear(db), args.n_rx)
        }
    })
}

fn describe(spec: &StructureSpec) -> String {
    match *spec {
        StructureSpec::Geometric2 { x, y, z, len } => {
            format!("geometric2 L={len} x={} y={} z={}", num(x), num(y), num(z))
        }
        ref s => format!("{} M={} L={}", s.kind(), s.m(), s.size()),
    }
}

fn cmd_search(cli: &Cli, args: &SearchArgs, manifest: &mut Manifest) -> Result<(), Failure> {
    let method = match (args.grid, args.anneal) {
        (true, false) => Method::Grid,
        (false, true) => Method::Anneal,
        _ => return Err(Failure::usage("choose one of --grid or --anneal")),
    };
    let objective = objective_of(args)?;
    let (result, config): (SearchResult, String) = match method {
        Method::Grid => {
            let l = need(args.len, "--L")?;
            let mode = match (args.multiples, args.step) {
                (true, None) => GridMode::Multiples,
                (false, Some(h)) => GridMode::Step(h),
                _ => return Err(Failure::usage("grid search needs --multiples or --step")),
            };
            let cfg = match mode {
                GridMode::Multiples => "grid=multiples".to_string(),
                GridMode::Step(h) => format!("grid=step {h}"),
            };
            (grid_search_geometric(l, objective, mode)?, cfg)
        }
        Method::Anneal => {
            let seed = need(cli.seed, "--seed")?;
            let kind: StructureKind = need(args.kind.as_deref(), "--kind")?.parse().map_err(Failure::Usage)?;
            let m = need(args.m, "--m")?;
            let d = SaConfig::default();
            let cfg = SaConfig {
                max_iters: args.iters.unwrap_or(d.max_iters),
                epoch_len: args.epoch_len.unwrap_or(d.epoch_len),
                t0: args.t0.unwrap_or(d.t0),
                alpha: args.alpha.unwrap_or(d.alpha),
                sigma0: args.sigma0.unwrap_or(d.sigma0),
                sigma_floor: args.sigma_floor.unwrap_or(d.sigma_floor),
                stall_epochs: args.stall_epochs.unwrap_or(d.stall_epochs),
                seed,
            };
            let init = match &args.init_catalog {
                Some(name) => Some(
                    catalog(name)?
                        .spec
                        .ok_or_else(|| Failure::usage(format!("catalog entry {name} has no generating structure")))?,
                ),
                None => None,
            };
            let r = if args.chains > 1 {
                multi_start(args.chains, m, kind, &args.sizes, objective, &cfg, init)?
            } else {
                simulated_annealing(m, kind, &args.sizes, objective, &cfg, init)?
            };
            (r, format!("{cfg:?} chains={}", args.chains))
        }
    };
    let method_name = match method {
        Method::Grid => "grid",
        Method::Anneal => "anneal",
    };
    if let Some(out) = &cli.out {
        let text = ucon::write(&elements_of(&result.constellation))?;
        emit(Some(out), &text, manifest)?;
        let mut meta = String::new();
        let _ = writeln!(meta, "method={method_name}");
        let _ = writeln!(meta, "objective={}", result.objective);
        let _ = writeln!(meta, "value={}", num(result.value));
        let _ = writeln!(meta, "evaluations={}", result.evaluations);
        let _ = writeln!(meta, "seed={}", cli.seed.map(|s| s.to_string()).unwrap_or_else(|| "none".into()));
        let _ = writeln!(meta, "config={config}");
        let _ = writeln!(meta, "structure={}", describe(&result.spec));
        write_side_file(with_suffix(out, ".meta"), &meta, manifest)?;
    }
    manifest.note("wall_seconds", format!("{:.3}", result.wall_clock.as_secs_f64()));
    println!("method,objective,value,evaluations,structure");
    println!(
        "{method_name},{},{},{},{}",
        result.objective,
        num(result.value),
        result.evaluations,
        describe(&result.spec)
    );
    Ok(())
}

fn cmd_simulate(cli: &Cli, args: &SimulateArgs, manifest: &mut Manifest) -> Result<(), Failure> {
    let seed = need(cli.seed, "--seed")?;
    let s = resolve(&args.source, manifest)?;
    let sq = s.square()?;
    let fast = match args.decoder {
        DecoderArg::Ml => None,
        DecoderArg::Fast => {
            let spec = s
                .spec
                .as_ref()
                .ok_or_else(|| Failure::usage("the fast decoder needs a structured source, not a file"))?;
            Some(FastDemodulator::for_constellation(spec, &sq)?)
        }
    };
    let exhaustive = ExhaustiveDemodulator::new(&sq);
    let demod: &dyn Demodulator = match &fast {
        Some(f) => f,
        None => &exhaustive,
    };
    let mut csv = String::from("snr_db,decoder,blocks,errors,bler,lo,hi,seed\n");
    for &db in &args.snr_db {
        let cfg = ChannelConfig {
            m_tx: sq.m(),
            n_rx: args.n_rx,
            snr_db: db,
            frame_blocks: args.frame_blocks,
            trials: args.trials,
            seed,
        };
        let r = simulate_differential(&sq, &cfg, demod)?;
        let _ = writeln!(
            csv,
            "{},{},{},{},{},{},{},{seed}",
            num(db),
            r.decoder.as_str(),
            r.blocks_total,
            r.block_errors,
            num(r.bler),
            num(r.lo),
            num(r.hi)
        );
        manifest.note(&format!("max_state_defect_{}db", num(db)), format!("{:.3e}", r.max_state_defect));
    }
    emit(cli.out.as_deref(), &csv, manifest)
}

fn cmd_decbench(cli: &Cli, args: &DecbenchArgs, manifest: &mut Manifest) -> Result<(), Failure> {
    let seed = need(cli.seed, "--seed")?;
    if args.blocks == 0 || args.frame_blocks == 0 || args.n_rx == 0 {
        return Err(Failure::usage("--blocks, --frame-blocks and --n-rx must be positive"));
    }
    let s = resolve(&args.source, manifest)?;
    let spec = s
        .spec
        .as_ref()
        .ok_or_else(|| Failure::usage("decbench needs a structured source, not a file"))?;
    let sq = s.square()?;
    let tables = build_tables(spec)?;
    let (m, n) = (sq.m(), args.n_rx);
    let rho = db_to_linear(args.snr_db);
    let amp = rho.sqrt();
    let opts = DecodeOptions {
        radius_sqr: args.radius.then(|| default_radius_sqr(m, n, rho)),
    };

    let mut stats = DecodeStats::default();
    let mut agree = 0usize;
    let (mut fast_time, mut exh_time) = (0.0, 0.0);
    let mut done = 0usize;
    let mut frame = 0u64;
    while done < args.blocks {
        let mut rng = frame_rng(seed, frame);
        frame += 1;
        let h = complex_gaussian(m, n, &mut rng);
        let mut state = ComplexMatrix::identity(m);
        let mut y_prev = &(&state * &h).scale_re(amp) + &complex_gaussian(m, n, &mut rng);
        for _ in 0..args.frame_blocks.min(args.blocks - done) {
            let z = rng.random_range(0..sq.len());
            state = &sq.elements()[z] * &state;
            let y = &(&state * &h).scale_re(amp) + &complex_gaussian(m, n, &mut rng);
            let t = Instant::now();
            let f = fast_decode_with(&tables, &y_prev, &y, opts, &mut stats)?;
            fast_time += t.elapsed().as_secs_f64();
            let t = Instant::now();
            let (e, _) = exhaustive_decode(sq.elements(), &y_prev, &y);
            exh_time += t.elapsed().as_secs_f64();
            agree += (f.index == e) as usize;
            y_prev = y;
            done += 1;
        }
    }
    let b = args.blocks as f64;
    let mut csv = String::from(
        "blocks,agreement,fast_products_per_block,fast_candidates_per_block,fast_pruned_per_block,exhaustive_candidates_per_block\n",
    );
    let _ = writeln!(
        csv,
        "{},{},{},{},{},{}",
        args.blocks,
        num(agree as f64 / b),
        num(stats.matrix_products as f64 / b),
        num(stats.candidates as f64 / b),
        num(stats.pruned as f64 / b),
        sq.len()
    );
    manifest.note("fast_seconds", format!("{fast_time:.3}"));
    manifest.note("exhaustive_seconds", format!("{exh_time:.3}"));
    emit(cli.out.as_deref(), &csv, manifest)
}

fn configure(cli: &Cli) -> Result<(), Failure> {
    if !cli.tol.is_empty() {
        let mut t = Tolerances::default();
        for kv in &cli.tol {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| Failure::usage(format!("--tol expects key=value, got `{kv}`")))?;
            apply_override(&mut t, k.trim(), v.trim()).map_err(Failure::Usage)?;
        }
        set_tolerances(t);
    }
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(Failure::usage("--threads must be positive"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::usage(format!("cannot size the thread pool: {e}")))?;
    }
    Ok(())
}

fn run(cli: &Cli, manifest: &mut Manifest) -> Result<(), Failure> {
    configure(cli)?;
    match &cli.command {
        Command::Gen(a) => cmd_gen(cli, a, manifest),
        Command::Eval(a) => cmd_eval(cli, a, manifest),
        Command::Spectrum(a) => cmd_spectrum(cli, a, manifest),
        Command::Search(a) => cmd_search(cli, a, manifest),
        Command::Simulate(a) => cmd_simulate(cli, a, manifest),
        Command::Decbench(a) => cmd_decbench(cli, a, manifest),
    }
}

fn command_name(c: &Command) -> &'static str {
    match c {
        Command::Gen(_) => "gen",
        Command::Eval(_) => "eval",
        Command::Spectrum(_) => "spectrum",
        Command::Search(_) => "search",
        Command::Simulate(_) => "simulate",
        Command::Decbench(_) => "decbench",
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(2) } else { ExitCode::SUCCESS };
        }
    };
    let mut manifest = Manifest::new(command_name(&cli.command), std::env::args().skip(1).collect(), cli.seed);
    let outcome = run(&cli, &mut manifest);
    let status = match &outcome {
        Ok(()) => "ok".to_string(),
        Err(f) => f.to_string(),
    };
    let text = manifest.render(&status);
    let target = cli.manifest.clone().or_else(|| cli.out.as_ref().map(|o| with_suffix(o, ".manifest")));
    match target {
        Some(p) => {
            if let Err(e) = fs::write(&p, &text) {
                eprintln!("cannot write manifest {}: {e}", p.display());
            }
        }
        None => eprint!("{text}"),
    }
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("{f}");
            f.exit_code()
        }
    }
}
