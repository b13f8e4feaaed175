//! Command-line definition and dispatch.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use microset_core::cubes::{
    build_partition, cloud_lower_dim_estimate, partition_to_tree, validate_partition, PointCloud,
};
use microset_core::measures::{
    frostman_lower_check, greedy_packing_sum, packing_upper_bound, tangent_pipeline, Beta, TangentConfig,
};
use microset_core::moran::{
    assouad_from_formula, build_moran, calibrate_rho, check_small_microset, dyadic_assouad_estimate, MoranSpec,
};
use microset_core::pigeonhole::{good_cylinder, reverse_furstenberg, verify_antifrostman};
use microset_core::seqgen::{
    build_sequence, cesaro_profile, lower_cesaro, verify_zero_windows, window_sup_profile, BranchingSeq,
};
use microset_core::DEFAULT_SEED;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};

use crate::error::{CliError, Result};
use crate::experiments::{self, TheoremA, DEFAULT_N_MAX};
use crate::formats::{self, MeasureFile, PartitionFile, SeqFile, TreeFile};
use crate::rational::{parse_ratio, parse_real, ratio_to_f64};
use crate::report::{self, series, Report};

/// Largest number of tree nodes `moran build` will materialize by default.
pub const DEFAULT_NODE_CAP: usize = 1 << 22;
/// Row budget for the Cesàro series; longer profiles are thinned.
pub const CESARO_ROWS: usize = 10_000;

fn real_text(s: &str) -> std::result::Result<String, String> {
    parse_real(s).map(|_| s.to_string()).map_err(|e| e.to_string())
}

fn ratio_text(s: &str) -> std::result::Result<String, String> {
    parse_ratio(s).map(|_| s.to_string()).map_err(|e| e.to_string())
}

fn beta_text(s: &str) -> std::result::Result<String, String> {
    if s == "auto" {
        Ok(s.into())
    } else {
        real_text(s)
    }
}

/// Finite-depth microset constructions with exact verification of their
/// inequalities.
#[derive(Debug, Parser)]
#[command(name = "microset", version)]
pub struct Cli {
    /// Seed for every randomized step.
    #[arg(long, global = true, env = "MICROSET_SEED", default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    /// Worker threads for independent trials.
    #[arg(long, global = true, default_value_t = 1)]
    pub jobs: usize,
    /// Also write the JSON report to this file.
    #[arg(long, global = true)]
    pub report: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Branching sequences.
    #[command(subcommand)]
    Seq(SeqCmd),
    /// Uniformly branching cube trees.
    #[command(subcommand)]
    Moran(MoranCmd),
    /// Assouad dimension: closed form, calibration and empirical estimate.
    #[command(subcommand)]
    Dim(DimCmd),
    /// Generic code trees.
    #[command(subcommand)]
    Tree(TreeCmd),
    /// Point clouds and inner regular partitions.
    #[command(subcommand)]
    Cubes(CubesCmd),
    /// Cylinder search.
    #[command(subcommand)]
    Pigeonhole(PigeonholeCmd),
    /// Packing sums.
    #[command(subcommand)]
    Pack(PackCmd),
    /// Tangent-measure pipeline.
    #[command(subcommand)]
    Tangent(TangentCmd),
    /// End-to-end verification runs.
    #[command(subcommand)]
    Verify(VerifyCmd),
    /// Writes a plot series of a report as CSV.
    Plot(PlotArgs),
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SeqCmd {
    Gen {
        #[arg(long, value_parser = ratio_text)]
        gamma: String,
        #[arg(long)]
        length: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Zero windows for m = 1..=m-max and the Cesàro bound.
    Check {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        m_max: u64,
        /// First index of the running-mean minimum (default: length / 10).
        #[arg(long)]
        n_start: Option<usize>,
        /// Longest window for the window-sup series (default: min(length, 1000)).
        #[arg(long)]
        n_max: Option<usize>,
    },
}

#[derive(Debug, Args, Serialize)]
pub struct MoranParams {
    /// Sequence file.
    #[arg(long)]
    pub seq: PathBuf,
    #[arg(long, default_value_t = 1)]
    pub d: usize,
    #[arg(long, value_parser = real_text)]
    pub rho: String,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum MoranCmd {
    /// Materializes the cube tree.
    Build {
        #[command(flatten)]
        params: MoranParams,
        #[arg(long)]
        depth: usize,
        #[arg(long, default_value_t = DEFAULT_NODE_CAP)]
        node_cap: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Dyadic microset below a cube of a materialized tree.
    Microset {
        #[arg(long)]
        tree: PathBuf,
        #[arg(long, value_delimiter = ',')]
        code: Vec<u32>,
        #[arg(long)]
        depth: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Small-covering check on a microset prefix of the implicit tree.
    CheckSmall {
        #[command(flatten)]
        params: MoranParams,
        #[arg(long)]
        m: u64,
        /// Cube the microset hangs from (default: random at a random level).
        #[arg(long, value_delimiter = ',')]
        code: Option<Vec<u32>>,
        /// Microset depth (default: N_m).
        #[arg(long)]
        depth: Option<usize>,
    },
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum DimCmd {
    AssouadFormula {
        #[command(flatten)]
        params: MoranParams,
        #[arg(long)]
        n_max: usize,
    },
    Calibrate {
        #[arg(long)]
        seq: PathBuf,
        #[arg(long, default_value_t = 1)]
        d: usize,
        #[arg(long, value_parser = real_text)]
        alpha: String,
        #[arg(long)]
        n_max: Option<usize>,
        #[arg(long, value_parser = real_text, default_value = "1e-9")]
        tol: String,
    },
    /// Dyadic Assouad estimate on the implicit tree.
    Estimate {
        #[command(flatten)]
        params: MoranParams,
        #[arg(long)]
        depth: Option<usize>,
        #[arg(long, default_value_t = 50)]
        min_gap: usize,
    },
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum TreeCmd {
    Subtree {
        #[arg(long)]
        tree: PathBuf,
        #[arg(long, value_delimiter = ',')]
        code: Vec<u32>,
        #[arg(long)]
        out: PathBuf,
    },
    Lowerdim {
        #[arg(long)]
        tree: PathBuf,
        #[arg(long, default_value_t = 1)]
        min_gap: usize,
    },
}

#[derive(Debug, Args, Serialize)]
pub struct CloudArgs {
    /// CSV cloud, one point per row.
    #[arg(long)]
    pub cloud: PathBuf,
    /// Resolution of the cloud as a net of the set it samples (default:
    /// the file's `# resolution:` line, else zero).
    #[arg(long, value_parser = real_text)]
    pub resolution: Option<String>,
}

impl CloudArgs {
    fn load(&self) -> Result<PointCloud> {
        let delta = self.resolution.as_deref().map(parse_real).transpose()?;
        formats::read_cloud(&self.cloud, delta)
    }
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CloudKind {
    /// Left endpoints of the generation-`size` Cantor intervals.
    Cantor,
    /// Grid of spacing `1/size` on the unit interval.
    Grid,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CubesCmd {
    /// Writes a sample cloud.
    Cloud {
        #[arg(long, value_enum)]
        kind: CloudKind,
        #[arg(long)]
        size: usize,
        #[arg(long)]
        out: PathBuf,
    },
    Build {
        #[command(flatten)]
        cloud: CloudArgs,
        #[arg(long, value_parser = real_text, default_value = "1/4")]
        rho: String,
        #[arg(long)]
        kmax: usize,
        #[arg(long)]
        out: PathBuf,
    },
    Validate {
        #[arg(long)]
        partition: PathBuf,
    },
    /// Code tree of a partition, labelled by cube indices.
    Tree {
        #[arg(long)]
        partition: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Lower-dimension estimate of the cloud itself.
    Lowerdim {
        #[command(flatten)]
        cloud: CloudArgs,
        #[arg(long, default_value_t = 4)]
        scale_gap: usize,
    },
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum PigeonholeCmd {
    Find {
        #[arg(long)]
        tree: PathBuf,
        #[arg(long, value_parser = real_text)]
        s: String,
        #[arg(long, value_parser = real_text)]
        t: String,
        #[arg(long)]
        ell: usize,
        #[arg(long)]
        k: usize,
    },
    Good {
        #[arg(long)]
        tree: PathBuf,
        #[arg(long, value_parser = real_text)]
        t: String,
        #[arg(long)]
        ell: usize,
        #[arg(long, default_value_t = 1)]
        min_gap: usize,
    },
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum PackCmd {
    /// Greedy packing sum with radius `delta`, optionally against the bound
    /// for a Frostman constant `c`.
    Estimate {
        #[command(flatten)]
        cloud: CloudArgs,
        #[arg(long, value_parser = real_text)]
        s: String,
        #[arg(long, value_parser = real_text)]
        delta: String,
        #[arg(long, value_parser = real_text)]
        c: Option<String>,
    },
    /// Frostman lower bound of a measure at radii `2^-j`, then the greedy
    /// packing sum of its support against `c^-1 2^s`.
    Frostman {
        /// Measure file, a JSON atom list.
        #[arg(long)]
        measure: PathBuf,
        #[arg(long, value_parser = real_text)]
        s: String,
        /// Lower constant (default: the measured one).
        #[arg(long, value_parser = real_text)]
        c: Option<String>,
        #[arg(long, default_value_t = 1)]
        j_min: u32,
        #[arg(long, default_value_t = 6)]
        j_max: u32,
        /// Packing radius (default: `2^-j_max`).
        #[arg(long, value_parser = real_text)]
        delta: Option<String>,
    },
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum TangentCmd {
    Run {
        #[command(flatten)]
        cloud: CloudArgs,
        #[arg(long)]
        ell_max: usize,
        /// `auto` or a fixed exponent.
        #[arg(long, value_parser = beta_text, default_value = "auto")]
        beta: String,
        #[arg(long, value_parser = real_text, default_value = "1/4")]
        rho: String,
        #[arg(long)]
        kmax: Option<usize>,
        #[arg(long, default_value_t = microset_core::measures::SAMPLES_PER_ELL)]
        samples: usize,
    },
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum VerifyCmd {
    TheoremA {
        #[arg(long, value_parser = ratio_text)]
        gamma: String,
        #[arg(long, default_value_t = 1)]
        d: usize,
        #[arg(long, value_parser = real_text)]
        alpha: String,
        #[arg(long)]
        depth: usize,
        #[arg(long)]
        m_max: u64,
        /// Sampled microset prefixes.
        #[arg(long, default_value_t = 20)]
        samples: usize,
        #[arg(long)]
        n_max: Option<usize>,
    },
    TheoremB {
        #[command(flatten)]
        cloud: CloudArgs,
        #[arg(long)]
        ell_max: usize,
        #[arg(long)]
        kmax: Option<usize>,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum PlotKind {
    Cesaro,
    WindowSup,
    Ratio,
    Scatter,
}

impl PlotKind {
    pub fn key(self) -> &'static str {
        match self {
            Self::Cesaro => "cesaro",
            Self::WindowSup => "window-sup",
            Self::Ratio => "ratio",
            Self::Scatter => "scatter",
        }
    }
}

#[derive(Debug, Args, Serialize)]
pub struct PlotArgs {
    #[arg(long)]
    pub report: PathBuf,
    #[arg(long, value_enum)]
    pub kind: PlotKind,
    #[arg(long)]
    pub out: PathBuf,
}

impl Command {
    /// Serialized form: `{group: {sub: args}}`, or `{plot: args}`.
    fn split(&self) -> (Vec<String>, Value) {
        let mut names = Vec::new();
        let mut v = serde_json::to_value(self).unwrap_or(Value::Null);
        let depth = if matches!(self, Command::Plot(_)) { 1 } else { 2 };
        for _ in 0..depth {
            let Value::Object(o) = v else { break };
            let Some((k, inner)) = o.into_iter().next() else {
                return (names, Value::Null);
            };
            names.push(k);
            v = inner;
        }
        (names, v)
    }

    /// `group sub`, e.g. `seq gen`.
    pub fn name(&self) -> String {
        self.split().0.join(" ")
    }

    /// The subcommand's own arguments.
    pub fn args(&self) -> Value {
        self.split().1
    }
}

/// Runs a parsed command line and returns its report; `--report` is written
/// by [`execute`].
pub fn run(cli: &Cli) -> Result<Report> {
    let config = json!({ "args": cli.command.args(), "jobs": cli.jobs });
    let report = Report::new(&cli.command.name(), cli.seed, config);
    let seed = cli.seed;
    match &cli.command {
        Command::Seq(c) => seq(c, report),
        Command::Moran(c) => moran(c, seed, report),
        Command::Dim(c) => dim(c, report),
        Command::Tree(c) => tree(c, report),
        Command::Cubes(c) => cubes(c, seed, report),
        Command::Pigeonhole(c) => pigeonhole(c, report),
        Command::Pack(c) => pack(c, report),
        Command::Tangent(c) => tangent(c, seed, report),
        Command::Verify(c) => verify(c, seed, cli.jobs, report),
        Command::Plot(a) => plot(a, report),
    }
}

/// Runs the command and writes `--report` if requested.
pub fn execute(cli: &Cli) -> Result<Report> {
    let report = run(cli)?;
    if let Some(path) = &cli.report {
        formats::write_json(path, &report)?;
    }
    Ok(report)
}

fn seq(cmd: &SeqCmd, mut report: Report) -> Result<Report> {
    match cmd {
        SeqCmd::Gen { gamma, length, out } => {
            let seq = build_sequence(parse_ratio(gamma)?, *length)?;
            formats::write_data(out, &SeqFile::from_seq(&seq))?;
            report.result = json!({
                "out": out,
                "length": seq.len(),
                "ones": seq.bits().iter().filter(|&&b| b == 1).count(),
                "schedule": seq.schedule(),
                "cesaro_slack": seq.cesaro_slack(),
            });
        }
        SeqCmd::Check {
            input,
            m_max,
            n_start,
            n_max,
        } => {
            let seq = formats::read_seq(input)?;
            let len = seq.len();
            let mut windows = Vec::new();
            for m in 1..=*m_max {
                let check = verify_zero_windows(&seq, m)?;
                report.require(check.holds, || {
                    format!(
                        "m = {m}: window starting at {:?} has no {m} consecutive zeros",
                        check.witness
                    )
                });
                windows.push(json!({ "m": m, "window": check.window, "holds": check.holds, "witness": check.witness }));
            }
            let n_start = n_start.unwrap_or((len / 10).max(1));
            let mean = lower_cesaro(&seq, n_start)?;
            let cesaro = match (seq.gamma(), seq.cesaro_slack()) {
                (Some(g), Some(slack)) => {
                    let bound = 1.0 - ratio_to_f64(g) * std::f64::consts::PI.powi(2) / 6.0 - slack;
                    let mean_f = ratio_to_f64(mean);
                    report.require(mean_f >= bound, || {
                        format!("running mean {mean_f} from n = {n_start} below {bound}")
                    });
                    json!({ "n_start": n_start, "min_mean": report::rational(mean), "bound": bound, "slack": slack })
                }
                _ => json!({ "n_start": n_start, "min_mean": report::rational(mean) }),
            };
            let n_max = n_max.unwrap_or(len.min(DEFAULT_N_MAX));
            let sups = window_sup_profile(&seq, n_max)?;
            report.result = json!({
                "length": len,
                "zero_windows": windows,
                "cesaro": cesaro,
                "series": {
                    "cesaro": series(&["n", "mean"], cesaro_rows(&seq)),
                    "window-sup": series(
                        &["n", "sup_mean"],
                        sups.iter().enumerate().map(|(i, &r)| vec![(i + 1) as f64, ratio_to_f64(r)]).collect(),
                    ),
                },
            });
        }
    }
    Ok(report)
}

/// Running means, every index up to the row budget and evenly thinned
/// beyond it, always ending at the full length.
fn cesaro_rows(seq: &BranchingSeq) -> Vec<Vec<f64>> {
    let profile = cesaro_profile(seq);
    let stride = profile.len().div_ceil(CESARO_ROWS).max(1);
    let last = profile.len().saturating_sub(1);
    profile
        .iter()
        .enumerate()
        .filter(|&(i, _)| i % stride == stride - 1 || i == last)
        .map(|(_, &(n, r))| vec![n as f64, ratio_to_f64(r)])
        .collect()
}

fn moran_spec(p: &MoranParams) -> Result<MoranSpec> {
    Ok(MoranSpec::new(p.d, parse_real(&p.rho)?, formats::read_seq(&p.seq)?)?)
}

fn moran(cmd: &MoranCmd, seed: u64, mut report: Report) -> Result<Report> {
    match cmd {
        MoranCmd::Build {
            params,
            depth,
            node_cap,
            out,
        } => {
            let spec = moran_spec(params)?;
            let tree = build_moran(&spec, *depth, *node_cap)?;
            formats::write_data(out, &TreeFile::from_cube_tree(&tree))?;
            report.result = json!({ "out": out, "level_sizes": tree.tree.level_sizes() });
        }
        MoranCmd::Microset { tree, code, depth, out } => {
            let t = formats::read_json::<TreeFile>(tree)?.to_cube_tree()?;
            let micro = t.microset(code, *depth)?;
            formats::write_data(out, &TreeFile::from_cube_tree(&micro))?;
            report.result = json!({ "out": out, "level_sizes": micro.tree.level_sizes() });
        }
        MoranCmd::CheckSmall { params, m, code, depth } => {
            let spec = moran_spec(params)?;
            let len = spec.seq.len();
            let window = spec
                .seq
                .window_len(*m)
                .ok_or_else(|| CliError::Parameter(format!("the sequence has no window length for m = {m}")))?
                as usize;
            let depth = depth.unwrap_or(window);
            let tree = spec.tree(len)?;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let code = match code {
                Some(c) => c.clone(),
                None => {
                    let top = len.checked_sub(depth).ok_or_else(|| {
                        CliError::Parameter(format!("microset depth {depth} exceeds the sequence length {len}"))
                    })?;
                    let level = rng.gen_range(0..=top);
                    tree.random_code(level, &mut rng)
                }
            };
            let micro = tree.microset_prefix(&code, depth)?;
            let r = check_small_microset(&spec, &micro, *m, rng.gen())?;
            report.require(r.holds, || {
                format!("{} cubes meet the ball, more than {}", r.max_count, r.bound)
            });
            report.result = json!({ "code_level": code.len(), "check": report::covering(&r) });
        }
    }
    Ok(report)
}

fn dim(cmd: &DimCmd, mut report: Report) -> Result<Report> {
    match cmd {
        DimCmd::AssouadFormula { params, n_max } => {
            let seq = formats::read_seq(&params.seq)?;
            let f = assouad_from_formula(&seq, parse_real(&params.rho)?, params.d, *n_max)?;
            report.result = json!({
                "value": f.value,
                "sup_mean": report::rational(f.sup_means[n_max - 1]),
                "series": {
                    "window-sup": series(
                        &["n", "sup_mean"],
                        f.sup_means.iter().enumerate().map(|(i, &r)| vec![(i + 1) as f64, ratio_to_f64(r)]).collect(),
                    ),
                },
            });
        }
        DimCmd::Calibrate {
            seq,
            d,
            alpha,
            n_max,
            tol,
        } => {
            let s = formats::read_seq(seq)?;
            let n_max = n_max.unwrap_or(s.len().min(DEFAULT_N_MAX));
            let alpha = parse_real(alpha)?;
            let rho = calibrate_rho(&s, *d, alpha, n_max, parse_real(tol)?)?;
            let value = assouad_from_formula(&s, rho, *d, n_max)?.value;
            report.result =
                json!({ "rho_0": rho, "n_max": n_max, "formula_at_rho_0": value, "residual": (value - alpha).abs() });
        }
        DimCmd::Estimate { params, depth, min_gap } => {
            let spec = moran_spec(params)?;
            let tree = spec.tree(depth.unwrap_or(spec.seq.len()))?;
            let e = dyadic_assouad_estimate(&tree, *min_gap)?;
            report.result = json!({ "estimate": report::dim_estimate(&e) });
        }
    }
    Ok(report)
}

fn tree(cmd: &TreeCmd, mut report: Report) -> Result<Report> {
    match cmd {
        TreeCmd::Subtree { tree, code, out } => {
            let t = formats::read_tree(tree)?;
            let sub = t.subtree(code)?;
            formats::write_data(out, &TreeFile::from_symbol_tree(&sub))?;
            report.result = json!({ "out": out, "level_sizes": sub.level_sizes() });
        }
        TreeCmd::Lowerdim { tree, min_gap } => {
            let t = formats::read_tree(tree)?;
            let e = t.lower_dim_estimate(*min_gap)?;
            report.result = json!({ "estimate": report::dim_estimate(&e) });
        }
    }
    Ok(report)
}

fn cubes(cmd: &CubesCmd, seed: u64, mut report: Report) -> Result<Report> {
    match cmd {
        CubesCmd::Cloud { kind, size, out } => {
            let cloud = match kind {
                CloudKind::Cantor => PointCloud::cantor(*size)?,
                CloudKind::Grid if *size > 0 => PointCloud::unit_grid(1.0 / *size as f64)?,
                CloudKind::Grid => return Err(CliError::Parameter("grid size must be positive".into())),
            };
            formats::write_cloud(out, &cloud)?;
            report.result = json!({ "out": out, "points": cloud.len(), "resolution": cloud.delta() });
        }
        CubesCmd::Build { cloud, rho, kmax, out } => {
            let c = cloud.load()?;
            let p = build_partition(&c, parse_real(rho)?, *kmax)?;
            let v = validate_partition(&p);
            require_axioms(&mut report, &v);
            formats::write_data(out, &PartitionFile::from_partition(&p))?;
            report.result = json!({
                "out": out,
                "points": c.len(),
                "cubes_per_level": p.levels.iter().map(Vec::len).collect::<Vec<_>>(),
                "validation": report::validation(&v),
            });
        }
        CubesCmd::Validate { partition } => {
            let p = formats::read_partition(partition)?;
            let v = validate_partition(&p);
            require_axioms(&mut report, &v);
            report.result = json!({ "validation": report::validation(&v) });
        }
        CubesCmd::Tree { partition, out } => {
            let p = formats::read_partition(partition)?;
            let t = partition_to_tree(&p)?;
            formats::write_data(out, &TreeFile::from_symbol_tree(&t))?;
            report.result = json!({ "out": out, "level_sizes": t.level_sizes(), "M": t.alphabet() });
        }
        CubesCmd::Lowerdim { cloud, scale_gap } => {
            let e = cloud_lower_dim_estimate(&cloud.load()?, *scale_gap, seed)?;
            report.result = json!({ "estimate": report::cloud_dim(&e) });
        }
    }
    Ok(report)
}

fn require_axioms(report: &mut Report, v: &microset_core::cubes::ValidationReport) {
    for p in &v.properties {
        report.require(p.holds, || format!("partition property {:?} fails", p.name));
    }
}

fn pigeonhole(cmd: &PigeonholeCmd, mut report: Report) -> Result<Report> {
    match cmd {
        PigeonholeCmd::Find { tree, s, t, ell, k } => {
            let tr = formats::read_tree(tree)?;
            let r = reverse_furstenberg(&tr, parse_real(s)?, parse_real(t)?, *ell, *k)?;
            report.require(verify_antifrostman(&tr, &r), || {
                "the cylinder's ratio profile falls below rho^(tj)".into()
            });
            let mut result = report::pigeonhole(&r);
            result["series"] = json!({ "ratio": series(&["j", "min_ratio", "threshold"], report::ratio_rows(&r)) });
            report.result = result;
        }
        PigeonholeCmd::Good { tree, t, ell, min_gap } => {
            let tr = formats::read_tree(tree)?;
            let g = good_cylinder(&tr, parse_real(t)?, *ell, *min_gap)?;
            report.require(verify_antifrostman(&tr, &g.result), || {
                "the cylinder's ratio profile falls below rho^(tj)".into()
            });
            let mut result = report::good_cylinder(&g);
            result["series"] =
                json!({ "ratio": series(&["j", "min_ratio", "threshold"], report::ratio_rows(&g.result)) });
            report.result = result;
        }
    }
    Ok(report)
}

fn pack(cmd: &PackCmd, mut report: Report) -> Result<Report> {
    match cmd {
        PackCmd::Estimate { cloud, s, delta, c } => {
            let s = parse_real(s)?;
            let mut est = greedy_packing_sum(&cloud.load()?, s, parse_real(delta)?)?;
            if let Some(c) = c {
                let bound = packing_upper_bound(parse_real(c)?, s)?;
                est.upper_bound = Some(bound);
                require_packing(&mut report, est.lower_sum, bound);
            }
            report.result = json!({ "estimate": report::packing(&est) });
        }
        PackCmd::Frostman {
            measure,
            s,
            c,
            j_min,
            j_max,
            delta,
        } => {
            if j_min > j_max {
                return Err(CliError::Parameter("j-min exceeds j-max".into()));
            }
            let m = formats::read_json::<MeasureFile>(measure)?.to_measure(measure)?;
            let s = parse_real(s)?;
            let radii: Vec<f64> = (*j_min..=*j_max).map(|j| 0.5f64.powi(j as i32)).collect();
            let support: Vec<f64> = m.atoms().flatten().copied().collect();
            let measured = frostman_lower_check(&m, &support, s, 1.0, &radii).constant;
            let c = c.as_deref().map(parse_real).transpose()?.unwrap_or(measured);
            let check = frostman_lower_check(&m, &support, s, c, &radii);
            report.require(check.holds, || {
                let w = check.worst.as_ref();
                format!(
                    "mass {:?} at radius {:?} is below c r^s",
                    w.map(|w| w.mass),
                    w.map(|w| w.r)
                )
            });
            let delta = delta
                .as_deref()
                .map(parse_real)
                .transpose()?
                .unwrap_or(radii[radii.len() - 1]);
            let cloud = PointCloud::new(m.d(), support, 0.0)?;
            let mut est = greedy_packing_sum(&cloud, s, delta)?;
            let bound = packing_upper_bound(c, s)?;
            est.upper_bound = Some(bound);
            require_packing(&mut report, est.lower_sum, bound);
            report.result = json!({
                "c": c,
                "measured_constant": report::real(measured),
                "frostman_holds": check.holds,
                "worst": check.worst.as_ref().map(|w| json!({ "atom": w.point, "r": w.r, "mass": w.mass, "ratio": w.ratio })),
                "estimate": report::packing(&est),
            });
        }
    }
    Ok(report)
}

fn require_packing(report: &mut Report, sum: f64, bound: f64) {
    report.require(sum <= bound * (1.0 + microset_core::RELATIVE_SLACK), || {
        format!("packing sum {sum} above c^-1 2^s = {bound}")
    });
}

fn tangent(cmd: &TangentCmd, seed: u64, mut report: Report) -> Result<Report> {
    let TangentCmd::Run {
        cloud,
        ell_max,
        beta,
        rho,
        kmax,
        samples,
    } = cmd;
    if *ell_max == 0 {
        return Err(CliError::Parameter("ell-max must be positive".into()));
    }
    let beta = match beta.as_str() {
        "auto" => Beta::Auto,
        b => Beta::Fixed(parse_real(b)?),
    };
    let mut config = TangentConfig::new((1..=*ell_max).collect(), beta);
    config.rho = parse_real(rho)?;
    config.k_max = *kmax;
    config.samples = *samples;
    config.seed = seed;
    let r = tangent_pipeline(&cloud.load()?, &config)?;
    for f in r.failures() {
        report.require(false, || f);
    }
    report.result = report::tangent(&r);
    Ok(report)
}

fn verify(cmd: &VerifyCmd, seed: u64, jobs: usize, report: Report) -> Result<Report> {
    match cmd {
        VerifyCmd::TheoremA {
            gamma,
            d,
            alpha,
            depth,
            m_max,
            samples,
            n_max,
        } => {
            let params = TheoremA {
                gamma: parse_ratio(gamma)?,
                d: *d,
                alpha: parse_real(alpha)?,
                depth: *depth,
                m_max: *m_max,
                samples: *samples,
                n_max: *n_max,
            };
            experiments::run_theorem_a(&params, seed, jobs, report)
        }
        VerifyCmd::TheoremB { cloud, ell_max, kmax } => {
            let mut r = experiments::run_theorem_b(&cloud.load()?, &cloud.cloud, *ell_max, *kmax, seed, report)?;
            experiments::hoist_series(&mut r.result, "tangent");
            Ok(r)
        }
    }
}

fn plot(args: &PlotArgs, mut report: Report) -> Result<Report> {
    let source: Report = formats::read_json(&args.report)?;
    let key = args.kind.key();
    let (columns, rows) = source.series(key).ok_or_else(|| {
        CliError::Parameter(format!(
            "{} has no {key} series (command {:?})",
            args.report.display(),
            source.command
        ))
    })?;
    write_series(&args.out, &columns, &rows)?;
    report.result =
        json!({ "out": args.out, "source_command": source.command, "columns": columns, "rows": rows.len() });
    Ok(report)
}

fn write_series(path: &Path, columns: &[String], rows: &[Vec<f64>]) -> Result<()> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let csv_err = |e: csv::Error| CliError::Csv {
        path: path.into(),
        source: e,
    };
    w.write_record(columns).map_err(csv_err)?;
    for row in rows {
        w.write_record(row.iter().map(|x| format!("{x}"))).map_err(csv_err)?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::format(path, e.to_string()))?;
    formats::write_atomic(path, &bytes)
}
