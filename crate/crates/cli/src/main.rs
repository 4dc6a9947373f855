//! `bosons`: dimensions, ensemble runs and their analyses from the command line.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use boson_core::analysis::{
    atlas_curve, cluster_report, fit_gumbel, ground_components, ground_energies, gumbel_analysis,
    invert_gumbel, ks_statistic, normal_minima, q_analysis, sphere_coordinates,
    spin_probabilities, venn_fractions,
};
use boson_core::combinatorics::{spin_dim, SystemShape};
use boson_core::dboson::{
    dboson_asymptotics, dboson_ground, dboson_levels, quadrant_probability,
    quadrant_probability_numeric, DBosonParams,
};
use boson_core::ensemble::{parse_key_values, read_run, run_ensemble, EnsembleConfig, RealizationSolver, RunFile};
use boson_core::operators::{pair_cluster, triplet_state};
use boson_core::solver::SolverOptions;

#[derive(Parser)]
#[command(name = "bosons", version, about = "Random two-body ensembles of spin-ℓ bosons")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Multiplet counts D(J) for N bosons of spin ℓ.
    Dims {
        #[arg(long)]
        ell: u32,
        #[arg(long)]
        n: u32,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Solve an ensemble of random Hamiltonians and write JSON lines.
    Run(RunArgs),
    /// Ground-state spin probabilities.
    Stats {
        #[command(flatten)]
        input: InputArgs,
        #[arg(long)]
        n: u32,
    },
    /// Gumbel fit of ground energies with fixed spin, and its inversion.
    Gumbel {
        /// Run file; not needed with --calibrate.
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long)]
        ell: Option<u32>,
        #[arg(long)]
        n: Option<u32>,
        #[arg(long, default_value_t = 0)]
        j: u32,
        /// Fit minima of this many standard normals instead of a run.
        #[arg(long)]
        calibrate: Option<usize>,
        #[arg(long, default_value_t = 100_000)]
        trials: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Eigenvalues of the averaged ground-state density Q.
    Qmatrix {
        #[command(flatten)]
        input: InputArgs,
        #[arg(long)]
        n: u32,
        #[arg(long, default_value_t = 0)]
        j: u32,
    },
    /// Cluster removal and addition overlaps between two particle numbers.
    Clusters {
        #[command(flatten)]
        input: InputArgs,
        #[arg(long)]
        n_hi: u32,
        #[arg(long)]
        n_lo: u32,
        #[arg(long, value_enum, default_value_t = ClusterKind::Triplet)]
        cluster: ClusterKind,
        #[arg(long, default_value_t = 0.8)]
        cut: f64,
    },
    /// Joint J = 0 ground-state patterns across particle numbers.
    Venn {
        #[command(flatten)]
        input: InputArgs,
        #[arg(long, value_delimiter = ',', required = true)]
        n_set: Vec<u32>,
    },
    /// J = 0 ground states on the sphere of the leading Q eigenvectors.
    Atlas {
        #[command(flatten)]
        input: InputArgs,
        #[arg(long)]
        n: u32,
        #[arg(long, default_value_t = 360)]
        grid: usize,
    },
    /// Closed-form ℓ = 2 results.
    Dboson(DBosonArgs),
}

#[derive(Args)]
struct InputArgs {
    /// JSON-lines file written by `run`.
    #[arg(long)]
    input: PathBuf,
    /// Expected ℓ; the run is refused if its manifest disagrees.
    #[arg(long)]
    ell: Option<u32>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct RunArgs {
    /// Flat key=value file; flags given here override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    ell: Option<u32>,
    /// Particle numbers, comma separated.
    #[arg(long, value_delimiter = ',')]
    n: Option<Vec<u32>>,
    #[arg(long)]
    realizations: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    start_id: Option<u64>,
    /// Remove the monopole and J² parts of every draw.
    #[arg(long)]
    primed: bool,
    /// Keep J-basis components of clean ground states.
    #[arg(long)]
    store_vectors: bool,
    #[arg(long)]
    dense_threshold: Option<usize>,
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum ClusterKind {
    Pair,
    Triplet,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Levels,
    Ground,
    Asymptotics,
    Quadrant,
}

#[derive(Args)]
struct DBosonArgs {
    #[arg(long, value_enum)]
    mode: Mode,
    #[arg(long, default_value_t = 6)]
    n: u32,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    v0: f64,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    v2: f64,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    v4: f64,
    /// Residue classes N mod 6 for the asymptotic table.
    #[arg(long, value_delimiter = ',', default_value = "0,1,2,3,4,5")]
    residue: Vec<u32>,
    #[arg(long, default_value_t = 1_000_000)]
    samples: u64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Runtime(String),
}

impl From<boson_core::Error> for Failure {
    fn from(e: boson_core::Error) -> Self {
        Failure::Runtime(e.to_string())
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Runtime(e.to_string())
    }
}

type CliResult = Result<String, Failure>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match execute(cli.command) {
        Ok(summary) => {
            eprintln!("{summary}");
            ExitCode::SUCCESS
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn execute(command: Command) -> CliResult {
    match command {
        Command::Dims { ell, n, out } => dims(ell, n, out.as_deref()),
        Command::Run(args) => run(args),
        Command::Stats { input, n } => stats(&input, n),
        Command::Gumbel {
            input,
            ell,
            n,
            j,
            calibrate,
            trials,
            seed,
            out,
        } => match calibrate {
            Some(d) => calibration(d, trials, seed, out.as_deref()),
            None => {
                let (Some(input), Some(n)) = (input, n) else {
                    return Err(Failure::Usage("gumbel needs --input and --n (or --calibrate)".into()));
                };
                gumbel(&InputArgs { input, ell, out }, n, j)
            }
        },
        Command::Qmatrix { input, n, j } => qmatrix(&input, n, j),
        Command::Clusters {
            input,
            n_hi,
            n_lo,
            cluster,
            cut,
        } => clusters(&input, n_hi, n_lo, cluster, cut),
        Command::Venn { input, n_set } => venn(&input, &n_set),
        Command::Atlas { input, n, grid } => atlas(&input, n, grid),
        Command::Dboson(args) => dboson(&args),
    }
}

/// CSV destination: a file or stdout, opened with the manifest comment line.
fn csv_writer(out: Option<&Path>, manifest: serde_json::Value) -> Result<Box<dyn Write>, Failure> {
    let mut w: Box<dyn Write> = match out {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    };
    writeln!(w, "# {manifest}")?;
    Ok(w)
}

fn dims(ell: u32, n: u32, out: Option<&Path>) -> CliResult {
    let shape = SystemShape::new(ell, n)?;
    let mut w = csv_writer(out, json!({"command": "dims", "ell": ell, "n": n}))?;
    writeln!(w, "j,dim")?;
    let mut total: u128 = 0;
    for j in 0..=shape.j_max() {
        let d = spin_dim(shape, j)?;
        total += d;
        writeln!(w, "{j},{d}")?;
    }
    writeln!(w, "total,{total}")?;
    w.flush()?;
    Ok(format!("dims ell={ell} n={n}: D(0)={} total={total}", spin_dim(shape, 0)?))
}

fn run(args: RunArgs) -> CliResult {
    let mut settings = match &args.config {
        Some(path) => parse_key_values(&std::fs::read_to_string(path)?)?,
        None => BTreeMap::new(),
    };
    let mut set = |k: &str, v: Option<String>| {
        if let Some(v) = v {
            for alias in [("n_list", "n"), ("master_seed", "seed")] {
                if alias.0 == k {
                    settings.remove(alias.1);
                }
            }
            settings.insert(k.to_string(), v);
        }
    };
    set("ell", args.ell.map(|x| x.to_string()));
    set(
        "n_list",
        args.n.map(|v| v.iter().map(u32::to_string).collect::<Vec<_>>().join(",")),
    );
    set("realizations", args.realizations.map(|x| x.to_string()));
    set("master_seed", args.seed.map(|x| x.to_string()));
    set("start_id", args.start_id.map(|x| x.to_string()));
    set("primed", args.primed.then(|| "true".into()));
    set("store_vectors", args.store_vectors.then(|| "true".into()));
    set("dense_threshold", args.dense_threshold.map(|x| x.to_string()));
    set("threads", args.threads.map(|x| x.to_string()));

    for keys in [&["ell"][..], &["n_list", "n"], &["realizations"], &["master_seed", "seed"]] {
        if !keys.iter().any(|k| settings.contains_key(*k)) {
            return Err(Failure::Usage(format!(
                "missing setting {} (flag or config file)",
                keys[0]
            )));
        }
    }
    let mut config = EnsembleConfig::new(0, Vec::new(), 1, 0);
    config.apply(&settings).map_err(|e| Failure::Usage(e.to_string()))?;
    config.validate().map_err(|e| Failure::Usage(e.to_string()))?;

    let out_name = args.out.as_ref().map(|p| p.display().to_string());
    let summary = match &args.out {
        Some(p) => run_ensemble(&config, out_name, &mut BufWriter::new(File::create(p)?))?,
        None => run_ensemble(&config, None, &mut BufWriter::new(io::stdout().lock()))?,
    };
    let failures: u64 = summary.failures.values().sum();
    let degenerate: u64 = summary.degenerate.values().sum();
    Ok(format!(
        "run ell={} n={:?}: {} records, {degenerate} degenerate, {failures} failures, hash {}",
        config.ell, config.n_list, summary.records, summary.config_hash
    ))
}

fn load(input: &InputArgs) -> Result<RunFile, Failure> {
    let run = read_run(File::open(&input.input)?)?;
    if let Some(ell) = input.ell {
        if ell != run.ell() {
            return Err(Failure::Usage(format!(
                "run file has ell={} but --ell {ell} was given",
                run.ell()
            )));
        }
    }
    Ok(run)
}

fn input_manifest(command: &str, input: &InputArgs, run: &RunFile) -> serde_json::Value {
    json!({
        "command": command,
        "input": input.input.display().to_string(),
        "ell": run.ell(),
        "config_hash": run.manifest.config_hash,
        "records": run.records.len(),
    })
}

fn stats(input: &InputArgs, n: u32) -> CliResult {
    let run = load(input)?;
    let p = spin_probabilities(&run.records, n)?;
    let mut w = csv_writer(input.out.as_deref(), input_manifest("stats", input, &run))?;
    writeln!(w, "j,count,p,sigma")?;
    for (&j, &count) in &p.counts {
        let (prob, sigma) = p.probability(j);
        writeln!(w, "{j},{count},{prob},{sigma}")?;
    }
    w.flush()?;
    let (p0, s0) = p.probability(0);
    Ok(format!(
        "stats ell={} n={n}: {} clean, {} excluded, P(0)={:.4}±{:.4}",
        run.ell(),
        p.total,
        p.excluded,
        p0,
        s0
    ))
}

fn gumbel(input: &InputArgs, n: u32, j: u32) -> CliResult {
    let run = load(input)?;
    let energies = ground_energies(&run.records, n, j);
    let sigma_max = (n * (n - 1)) as f64 / 2.0;
    let fit = gumbel_analysis(&energies, sigma_max)?;
    let mut w = csv_writer(input.out.as_deref(), input_manifest("gumbel", input, &run))?;
    writeln!(w, "n,j,samples,a,b,d_eff,var_e,sigma_max,ratio,ks")?;
    writeln!(
        w,
        "{n},{j},{},{},{},{},{},{},{},{}",
        fit.samples,
        fit.a,
        fit.b,
        fit.d_eff,
        fit.var_e,
        fit.sigma_max,
        fit.ratio(),
        fit.ks
    )?;
    w.flush()?;
    Ok(format!(
        "gumbel n={n} j={j}: a={:.4} b={:.4} D={:.2} ratio={:.3} ks={:.4}",
        fit.a,
        fit.b,
        fit.d_eff,
        fit.ratio(),
        fit.ks
    ))
}

fn calibration(d: usize, trials: usize, seed: u64, out: Option<&Path>) -> CliResult {
    let minima = normal_minima(d, trials, seed);
    let (a, b) = fit_gumbel(&minima)?;
    let inv = invert_gumbel(a, b, 1.0)?;
    let ks = ks_statistic(&minima, a, b);
    let mut w = csv_writer(
        out,
        json!({"command": "gumbel", "calibrate": d, "trials": trials, "seed": seed}),
    )?;
    writeln!(w, "dimension,trials,a,b,d_eff,var_e,ks")?;
    writeln!(w, "{d},{trials},{a},{b},{},{},{ks}", inv.d_eff, inv.var_e)?;
    w.flush()?;
    Ok(format!(
        "calibration D={d}: recovered D={:.2}, sqrt(var)={:.3}",
        inv.d_eff,
        inv.var_e.sqrt()
    ))
}

fn qmatrix(input: &InputArgs, n: u32, j: u32) -> CliResult {
    let run = load(input)?;
    let comps = ground_components(&run.records, n, j)?;
    let qa = q_analysis(&comps)?;
    let mut w = csv_writer(input.out.as_deref(), input_manifest("qmatrix", input, &run))?;
    writeln!(w, "i,q")?;
    for (i, q) in qa.q.iter().enumerate() {
        writeln!(w, "{},{q}", i + 1)?;
    }
    w.flush()?;
    Ok(format!(
        "qmatrix n={n} j={j}: {} states, q1={:.4}, entropy={:.4}, d_gs={:.3}",
        qa.samples, qa.q[0], qa.entropy, qa.d_gs
    ))
}

fn clusters(input: &InputArgs, n_hi: u32, n_lo: u32, kind: ClusterKind, cut: f64) -> CliResult {
    let run = load(input)?;
    let op = match kind {
        ClusterKind::Pair => pair_cluster(run.ell())?,
        ClusterKind::Triplet => triplet_state(run.ell())?,
    };
    let solver = RealizationSolver::new(&run.manifest.config)?;
    let report = cluster_report(&run.records, &solver, &op, n_hi, n_lo, cut)?;
    let mut w = csv_writer(
        input.out.as_deref(),
        json!({
            "command": "clusters",
            "input": input.input.display().to_string(),
            "config_hash": run.manifest.config_hash,
            "n_hi": n_hi,
            "n_lo": n_lo,
            "cut": cut,
            "number_eigenvalues": report.number_eigenvalues,
        }),
    )?;
    writeln!(w, "id,overlap,removal_norm,addition_norm")?;
    for p in &report.points {
        writeln!(w, "{},{},{},{}", p.id, p.overlap, p.removal_norm, p.addition_norm)?;
    }
    w.flush()?;
    Ok(format!(
        "clusters {n_hi}->{n_lo}: {} points, median relative deviation {}, {:.1}% below cut {cut}",
        report.points.len(),
        report
            .median_relative_deviation()
            .map_or("n/a".to_string(), |d| format!("{d:.4}")),
        100.0 * report.below_cut
    ))
}

fn venn(input: &InputArgs, n_set: &[u32]) -> CliResult {
    let run = load(input)?;
    let report = venn_fractions(&run.records, n_set)?;
    let mut w = csv_writer(input.out.as_deref(), input_manifest("venn", input, &run))?;
    let header: Vec<String> = n_set.iter().map(|n| format!("j0_n{n}")).collect();
    writeln!(w, "{},count,fraction", header.join(","))?;
    for (mask, &count) in report.counts.iter().enumerate() {
        let bits: Vec<&str> = (0..n_set.len())
            .map(|b| if mask >> b & 1 == 1 { "1" } else { "0" })
            .collect();
        writeln!(w, "{},{count},{}", bits.join(","), report.fraction(mask))?;
    }
    w.flush()?;
    let all = (1usize << n_set.len()) - 1;
    Ok(format!(
        "venn {n_set:?}: {} realizations, {} excluded, all J=0 in {:.1}%",
        report.total,
        report.excluded,
        100.0 * report.fraction(all)
    ))
}

fn atlas(input: &InputArgs, n: u32, grid: usize) -> CliResult {
    let run = load(input)?;
    let comps = ground_components(&run.records, n, 0)?;
    let qa = q_analysis(&comps)?;
    let axes: Vec<Vec<f64>> = qa.vectors.iter().take(3).cloned().collect();
    let solver = RealizationSolver::new(&run.manifest.config)?;
    let jb = solver.j_basis(n, 0)?;
    let opts = SolverOptions {
        dense_threshold: run.manifest.config.dense_threshold,
        ..Default::default()
    };
    let curve = atlas_curve(solver.template(n)?, solver.j_squared(n)?, &jb, &axes, grid, &opts)?;
    let mut w = csv_writer(input.out.as_deref(), input_manifest("atlas", input, &run))?;
    writeln!(w, "label,v0,v2,x1,x2,x3,norm")?;
    let coords = |c: &[f64]| {
        (0..3)
            .map(|i| c.get(i).map_or(String::new(), |x| x.to_string()))
            .collect::<Vec<_>>()
            .join(",")
    };
    for p in &curve {
        writeln!(w, "{},{},{},{},{}", p.label, p.v0, p.v2, coords(&p.coords), p.norm)?;
    }
    let mut samples = 0;
    for rec in &run.records {
        let Some(res) = rec.result(n) else { continue };
        if res.clean_spin() != Some(0) {
            continue;
        }
        if let Some(c) = &res.components {
            let x = sphere_coordinates(c, &axes);
            let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
            writeln!(w, "sample:{},,,{},{norm}", rec.id, coords(&x))?;
            samples += 1;
        }
    }
    w.flush()?;
    Ok(format!(
        "atlas n={n}: {} curve points, {samples} ensemble points, q={:?}",
        curve.len(),
        &qa.q[..qa.q.len().min(3)]
    ))
}

fn dboson(args: &DBosonArgs) -> CliResult {
    let params = DBosonParams::new(args.v0, args.v2, args.v4);
    let manifest = json!({
        "command": "dboson",
        "n": args.n,
        "v": [args.v0, args.v2, args.v4],
        "samples": args.samples,
        "seed": args.seed,
    });
    match args.mode {
        Mode::Levels => {
            let mut w = csv_writer(args.out.as_deref(), manifest)?;
            writeln!(w, "nu,f,j,e_rel")?;
            let levels = dboson_levels(args.n, &params);
            for l in &levels {
                writeln!(w, "{},{},{},{}", l.nu, l.f, l.j, l.e_rel)?;
            }
            w.flush()?;
            Ok(format!(
                "dboson levels n={}: {} levels, beta={} gamma={}",
                args.n,
                levels.len(),
                params.beta,
                params.gamma
            ))
        }
        Mode::Ground => {
            let g = dboson_ground(args.n, &params)?;
            let mut w = csv_writer(args.out.as_deref(), manifest)?;
            writeln!(w, "j,nu,e_rel,tie,unusual")?;
            writeln!(w, "{},{},{},{},{}", g.j, g.nu, g.e_rel, g.tie, g.unusual)?;
            w.flush()?;
            Ok(format!("dboson ground n={}: J={} nu={}", args.n, g.j, g.nu))
        }
        Mode::Asymptotics => {
            let mut w = csv_writer(args.out.as_deref(), manifest)?;
            writeln!(w, "residue,n,samples,p0,p2,p_max,p_other")?;
            for &r in &args.residue {
                let a = dboson_asymptotics(r, args.samples, args.seed)?;
                writeln!(w, "{r},{},{},{},{},{},{}", a.n, a.samples, a.p0, a.p2, a.p_max, a.p_other)?;
            }
            w.flush()?;
            Ok(format!("dboson asymptotics: {} residue classes", args.residue.len()))
        }
        Mode::Quadrant => {
            let closed = quadrant_probability();
            let numeric = quadrant_probability_numeric();
            let mut out = io::stdout().lock();
            writeln!(out, "{closed:.4}")?;
            Ok(format!("quadrant probability {closed:.6} (quadrature {numeric:.6})"))
        }
    }
}
