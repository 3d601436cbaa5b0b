//! Command-line front end.
//!
//! Exit codes: 0 success, 1 I/O, 2 validation, 3 numeric non-convergence.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs::File;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::boundary::{
    boundary_report, hausdorff_check, q_atom_recovery, z_distribution, MomentOutcome, ReportOptions,
};
use crate::dims::{dimension_table, martin_limit, MartinOptions, MartinStatus, TerminalPath};
use crate::error::{Error, Result};
use crate::graph::{make_graph, CustomWeight, FamilySpec};
use crate::io::{self as pio, DimsDocument, PhiDocument};
use crate::measures::{
    check_probability_function, phi_from_family, MeasureFamily, ProbabilityFunction, Provenance,
    Support,
};
use crate::scalar::{Scalar, ScalarMode};
use crate::selfcheck::run_self_check;
use crate::sequence::{parse_sequence_csv, SequenceSpec};
use crate::simulate::{run_job, Scaler, SimulationJob, SimulationResult, Statistic};

/// Output files go here when `--out` is not given.
pub const OUT_DIR_ENV: &str = "PASCAL_BOUNDARY_OUT_DIR";

pub const EXIT_OK: i32 = 0;
pub const EXIT_IO: i32 = 1;
pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_NONCONVERGENCE: i32 = 3;

#[derive(Debug, Clone, PartialEq, Parser)]
#[command(name = "pascal-boundary", version, about = "Boundary theory of weighted Pascal graphs")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    fn ext(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

/// Family or process parameters. Scalars accept `p/q`, integers and
/// decimals; sequences accept `const:c`, `linear:c,d`, `power:β`, `geom:c,q[,d]`.
#[derive(Debug, Clone, Default, PartialEq, Args)]
pub struct FamilyArgs {
    /// Family or process name
    #[arg(long)]
    pub family: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub q: Option<String>,
    /// Scalar `a`, or the sequence `(a_n)` for generalized Stirling families
    #[arg(long, allow_hyphen_values = true)]
    pub a: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub b: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub theta: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub alpha: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub beta: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub gamma: Option<String>,
    #[arg(long)]
    pub m: Option<usize>,
    /// `n,value` or `h,t,value` CSV for the tail-edge weights of a custom graph
    #[arg(long)]
    pub w0_file: Option<PathBuf>,
    /// `n,value` or `h,t,value` CSV for the head-edge weights of a custom graph
    #[arg(long)]
    pub w1_file: Option<PathBuf>,
    /// `n,value` CSV for `(a_n)`
    #[arg(long)]
    pub a_file: Option<PathBuf>,
    /// `h,value` CSV for `(b_h)`
    #[arg(long)]
    pub b_file: Option<PathBuf>,
    /// Reject decimal inputs instead of switching to floating point
    #[arg(long)]
    pub exact: bool,
}

#[derive(Debug, Clone, PartialEq, Args)]
pub struct OutputArgs {
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Output file; `-` for stdout
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Subcommand)]
pub enum Command {
    /// Dimension table `d(h,t)` for `h + t ≤ max-level`
    Dims {
        #[command(flatten)]
        family: FamilyArgs,
        #[arg(long, default_value_t = 10)]
        max_level: usize,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Probability function of a catalog measure, or a Martin limit on a graph
    Phi {
        #[command(flatten)]
        family: FamilyArgs,
        #[arg(long, default_value_t = 10)]
        max_level: usize,
        /// Martin limit along `heads:m`, `tails:m`, `balanced` or `fraction:x`
        #[arg(long)]
        limit_path: Option<String>,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
        #[arg(long, default_value_t = 2000)]
        budget: usize,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Extremal boundary report
    Boundary {
        #[command(flatten)]
        family: FamilyArgs,
        #[arg(long, default_value_t = 12)]
        max_extremes: usize,
        #[arg(long, default_value_t = 10_000)]
        probe: usize,
        /// Emit the law of the tail variable Z instead (needs `--theta`)
        #[arg(long)]
        z: bool,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Monte Carlo simulation
    Simulate {
        /// Job file `{process, params, n, replicates, seed, statistics}`
        #[arg(long, conflicts_with = "process")]
        job: Option<PathBuf>,
        #[arg(long)]
        process: Option<String>,
        #[command(flatten)]
        family: FamilyArgs,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        reps: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// endpoint | scaled | z | blocks
        #[arg(long)]
        stat: Vec<String>,
        /// n | log | pow:α
        #[arg(long)]
        scaler: Option<String>,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Rebuild `φ` from its first column; optionally recover q-Pascal atoms
    MomentCheck {
        #[command(flatten)]
        family: FamilyArgs,
        /// `n,value` CSV with `φ(n,0)`
        #[arg(long)]
        phi_file: PathBuf,
        #[arg(long)]
        max_level: Option<usize>,
        #[arg(long)]
        atoms: bool,
        /// Largest `m` with an atom at `q^m`
        #[arg(long)]
        m_max: Option<usize>,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Run the built-in oracle suites
    SelfCheck,
}

fn push_opt<T: ToString>(args: &mut Vec<String>, flag: &str, v: &Option<T>) {
    if let Some(v) = v {
        args.push(format!("--{flag}"));
        args.push(v.to_string());
    }
}

fn push_path(args: &mut Vec<String>, flag: &str, v: &Option<PathBuf>) {
    push_opt(args, flag, &v.as_ref().map(|p| p.display().to_string()));
}

impl FamilyArgs {
    fn to_args(&self, args: &mut Vec<String>) {
        push_opt(args, "family", &self.family);
        push_opt(args, "q", &self.q);
        push_opt(args, "a", &self.a);
        push_opt(args, "b", &self.b);
        push_opt(args, "theta", &self.theta);
        push_opt(args, "alpha", &self.alpha);
        push_opt(args, "beta", &self.beta);
        push_opt(args, "gamma", &self.gamma);
        push_opt(args, "m", &self.m);
        push_path(args, "w0-file", &self.w0_file);
        push_path(args, "w1-file", &self.w1_file);
        push_path(args, "a-file", &self.a_file);
        push_path(args, "b-file", &self.b_file);
        if self.exact {
            args.push("--exact".into());
        }
    }

    fn params(&self) -> BTreeMap<String, String> {
        let mut p = BTreeMap::new();
        let mut put = |k: &str, v: Option<String>| {
            if let Some(v) = v {
                p.insert(k.to_string(), v);
            }
        };
        put("q", self.q.clone());
        put("a", self.a.clone());
        put("b", self.b.clone());
        put("theta", self.theta.clone());
        put("alpha", self.alpha.clone());
        put("beta", self.beta.clone());
        put("gamma", self.gamma.clone());
        put("m", self.m.map(|m| m.to_string()));
        put("a", self.a_file.as_ref().map(|f| format!("file:{}", f.display())));
        put("b", self.b_file.as_ref().map(|f| format!("file:{}", f.display())));
        p
    }

    fn name(&self) -> Result<&str> {
        self.family
            .as_deref()
            .ok_or_else(|| Error::invalid("--family is required"))
    }

    fn keyed(&self, name: &str) -> String {
        let mut s = name.to_string();
        for (k, v) in self.params() {
            s.push_str(&format!(";{k}={v}"));
        }
        s
    }

    fn check_mode(&self, mode: ScalarMode) -> Result<()> {
        if self.exact && mode == ScalarMode::Float {
            return Err(Error::invalid(
                "--exact given but a parameter is a decimal; write it as p/q",
            ));
        }
        Ok(())
    }

    /// The weighted Pascal graph named by the flags.
    pub fn graph_spec(&self) -> Result<FamilySpec> {
        let name = self.name()?;
        let spec = if name == "custom" {
            let weight = |f: &Option<PathBuf>| -> Result<CustomWeight> {
                match f {
                    Some(path) => CustomWeight::read_file(path),
                    None => Ok(CustomWeight::OfLevel(SequenceSpec::constant(1))),
                }
            };
            FamilySpec::Custom {
                w0: weight(&self.w0_file)?,
                w1: weight(&self.w1_file)?,
            }
        } else {
            self.keyed(name).parse()?
        };
        self.check_mode(spec.mode())?;
        Ok(spec)
    }

    /// The catalog measure named by the flags.
    pub fn measure(&self) -> Result<MeasureFamily> {
        let fam: MeasureFamily = self.keyed(self.name()?).parse()?;
        fam.validate()?;
        self.check_mode(fam.mode())?;
        Ok(fam)
    }
}

impl OutputArgs {
    fn to_args(&self, args: &mut Vec<String>) {
        push_opt(
            args,
            "format",
            &self.format.map(|f| f.ext().to_string()),
        );
        push_path(args, "out", &self.out);
    }
}

impl Cli {
    /// Flags that parse back to this configuration.
    pub fn to_args(&self) -> Vec<String> {
        let mut a = vec!["pascal-boundary".to_string()];
        match &self.command {
            Command::Dims {
                family,
                max_level,
                output,
            } => {
                a.push("dims".into());
                family.to_args(&mut a);
                push_opt(&mut a, "max-level", &Some(max_level));
                output.to_args(&mut a);
            }
            Command::Phi {
                family,
                max_level,
                limit_path,
                tol,
                budget,
                output,
            } => {
                a.push("phi".into());
                family.to_args(&mut a);
                push_opt(&mut a, "max-level", &Some(max_level));
                push_opt(&mut a, "limit-path", limit_path);
                push_opt(&mut a, "tol", &Some(tol));
                push_opt(&mut a, "budget", &Some(budget));
                output.to_args(&mut a);
            }
            Command::Boundary {
                family,
                max_extremes,
                probe,
                z,
                tol,
                output,
            } => {
                a.push("boundary".into());
                family.to_args(&mut a);
                push_opt(&mut a, "max-extremes", &Some(max_extremes));
                push_opt(&mut a, "probe", &Some(probe));
                if *z {
                    a.push("--z".into());
                }
                push_opt(&mut a, "tol", &Some(tol));
                output.to_args(&mut a);
            }
            Command::Simulate {
                job,
                process,
                family,
                n,
                reps,
                seed,
                stat,
                scaler,
                output,
            } => {
                a.push("simulate".into());
                push_path(&mut a, "job", job);
                push_opt(&mut a, "process", process);
                family.to_args(&mut a);
                push_opt(&mut a, "n", n);
                push_opt(&mut a, "reps", reps);
                push_opt(&mut a, "seed", &Some(seed));
                for s in stat {
                    push_opt(&mut a, "stat", &Some(s));
                }
                push_opt(&mut a, "scaler", scaler);
                output.to_args(&mut a);
            }
            Command::MomentCheck {
                family,
                phi_file,
                max_level,
                atoms,
                m_max,
                tol,
                output,
            } => {
                a.push("moment-check".into());
                family.to_args(&mut a);
                push_path(&mut a, "phi-file", &Some(phi_file.clone()));
                push_opt(&mut a, "max-level", max_level);
                if *atoms {
                    a.push("--atoms".into());
                }
                push_opt(&mut a, "m-max", m_max);
                push_opt(&mut a, "tol", &Some(tol));
                output.to_args(&mut a);
            }
            Command::SelfCheck => a.push("self-check".into()),
        }
        a
    }
}

/// Where a command writes its main output.
fn open_output(output: &OutputArgs, stem: &str, format: Format) -> Result<Box<dyn Write>> {
    let path = match &output.out {
        Some(p) if p.as_os_str() == "-" => None,
        Some(p) => Some(p.clone()),
        None => std::env::var_os(OUT_DIR_ENV)
            .filter(|d| !d.is_empty())
            .map(|d| Path::new(&d).join(format!("{stem}.{}", format.ext()))),
    };
    match path {
        Some(p) => {
            if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                std::fs::create_dir_all(dir)?;
            }
            Ok(Box::new(io::BufWriter::new(File::create(p)?)))
        }
        None => Ok(Box::new(io::stdout().lock())),
    }
}

fn write_json<T: Serialize>(w: &mut dyn Write, value: &T) -> Result<()> {
    serde_json::to_writer_pretty(&mut *w, value)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

fn parse_limit_path(s: &str) -> Result<TerminalPath> {
    let bad = || Error::Parse(format!("unknown path `{s}` (heads:m | tails:m | balanced | fraction:x)"));
    if s == "balanced" {
        return Ok(TerminalPath::Balanced);
    }
    let (kind, arg) = s.split_once(':').ok_or_else(bad)?;
    match kind {
        "heads" => Ok(TerminalPath::FixedHeads(arg.parse().map_err(|_| bad())?)),
        "tails" => Ok(TerminalPath::FixedTails(arg.parse().map_err(|_| bad())?)),
        "fraction" => Ok(TerminalPath::Fraction(arg.parse().map_err(|_| bad())?)),
        _ => Err(bad()),
    }
}

fn cmd_dims(family: &FamilyArgs, max_level: usize, output: &OutputArgs) -> Result<i32> {
    let spec = family.graph_spec()?;
    let g = make_graph(&spec, spec.mode())?;
    let table = dimension_table(&g, max_level)?;
    let format = output.format.unwrap_or(Format::Csv);
    let mut w = open_output(output, "dims", format)?;
    match format {
        Format::Csv => pio::write_triangle_csv(&mut w, &table.values, "value")?,
        Format::Json => write_json(&mut w, &DimsDocument::new(&table))?,
    }
    Ok(EXIT_OK)
}

fn cmd_phi(
    family: &FamilyArgs,
    max_level: usize,
    limit_path: Option<&str>,
    tol: f64,
    budget: usize,
    output: &OutputArgs,
) -> Result<i32> {
    let (g, phi, converged) = match limit_path {
        None => {
            let fam = family.measure()?;
            let phi = phi_from_family(&fam, max_level)?;
            (fam.graph(fam.mode())?, phi, true)
        }
        Some(p) => {
            let spec = family.graph_spec()?;
            let g = make_graph(&spec, spec.mode())?;
            let path = parse_limit_path(p)?;
            let opts = MartinOptions {
                query_horizon: max_level,
                tol,
                budget,
                ..MartinOptions::default()
            };
            let res = martin_limit(&g, &path, &opts)?;
            let support = match path {
                TerminalPath::FixedHeads(m) => Support::HeadsAtMost(m),
                TerminalPath::FixedTails(m) => Support::TailsAtMost(m),
                _ => Support::Full,
            };
            let phi = ProbabilityFunction::new(
                &g,
                res.estimates,
                support,
                Provenance::MartinLimit { path: res.path },
            );
            if res.status != MartinStatus::Converged {
                eprintln!(
                    "Martin limit {:?} at terminal level {}",
                    res.status, res.terminal_level
                );
            }
            (g, phi, res.status == MartinStatus::Converged)
        }
    };
    let check = check_probability_function(&g, &phi)?;
    eprintln!(
        "recursion residual {} ; level-sum error {} ; nonnegative {} ; exact zero {}",
        check.max_recursion_residual,
        check.max_level_sum_error,
        check.negativity_witness.is_none(),
        check.is_exact_zero()
    );
    let format = output.format.unwrap_or(Format::Csv);
    let mut w = open_output(output, "phi", format)?;
    match format {
        Format::Csv => pio::write_triangle_csv(&mut w, &phi.values, "phi")?,
        Format::Json => write_json(&mut w, &PhiDocument::new(&phi))?,
    }
    Ok(if converged { EXIT_OK } else { EXIT_NONCONVERGENCE })
}

fn cmd_boundary(
    family: &FamilyArgs,
    opts: &ReportOptions,
    z: bool,
    tol: f64,
    output: &OutputArgs,
) -> Result<i32> {
    let spec = family.graph_spec()?;
    if z {
        let (a, _) = spec
            .stirling_sequences()
            .filter(|(_, b)| b.is_identically_zero())
            .ok_or_else(|| Error::invalid("the Z law needs a generalized Stirling-I family"))?;
        let theta = Scalar::parse(
            family
                .theta
                .as_deref()
                .ok_or_else(|| Error::invalid("--z needs --theta"))?,
        )?
        .to_f64();
        let law = z_distribution(&a, theta, tol)?;
        let format = output.format.unwrap_or(Format::Csv);
        let mut w = open_output(output, "z", format)?;
        match format {
            Format::Csv => pio::write_z_csv(&mut w, &law)?,
            Format::Json => write_json(&mut w, &law)?,
        }
        return Ok(EXIT_OK);
    }
    let report = boundary_report(&spec, opts)?;
    let format = output.format.unwrap_or(Format::Json);
    let mut w = open_output(output, "boundary", format)?;
    match format {
        Format::Json => write_json(&mut w, &report)?,
        Format::Csv => {
            let mut wtr = csv::Writer::from_writer(&mut w);
            wtr.write_record(["kind", "m", "theta", "z", "pi"])?;
            for e in &report.extremes {
                let kind = serde_json::to_value(e.kind)?;
                wtr.write_record([
                    kind.as_str().unwrap_or_default().to_string(),
                    e.m.map(|m| m.to_string()).unwrap_or_default(),
                    e.theta.as_ref().map(|t| t.to_string()).unwrap_or_default(),
                    e.z.map(|z| z.to_string()).unwrap_or_default(),
                    e.pi.to_string(),
                ])?;
            }
            wtr.flush()?;
        }
    }
    eprintln!("classification: {:?}", report.classification);
    Ok(EXIT_OK)
}

#[allow(clippy::too_many_arguments)]
fn build_job(
    process: &str,
    family: &FamilyArgs,
    n: Option<usize>,
    reps: Option<usize>,
    seed: u64,
    stat: &[String],
    scaler: Option<&str>,
) -> Result<SimulationJob> {
    let statistics = if stat.is_empty() {
        vec![Statistic::Endpoint, Statistic::Scaled]
    } else {
        stat.iter().map(|s| s.parse()).collect::<Result<_>>()?
    };
    Ok(SimulationJob {
        process: process.to_string(),
        params: family.params(),
        n: n.ok_or_else(|| Error::invalid("--n is required"))?,
        replicates: reps.ok_or_else(|| Error::invalid("--reps is required"))?,
        seed,
        statistics,
        scaler: scaler.map(str::parse::<Scaler>).transpose()?,
    })
}

fn summarize(res: &SimulationResult) {
    if let Some(s) = &res.scaled {
        eprintln!(
            "H_n/scale: mean {:.6}, sd {:.6} over {} replicates",
            s.mean, s.sd, s.replicates
        );
        if let (Some(m), Some(sd)) = (s.exact_mean_heads, s.exact_sd_heads) {
            eprintln!("E H_n = {m:.6}, sd(H_n) = {sd:.6}; sample mean {:.6}", s.mean_heads);
        }
        if let Some(ks) = s.ks_beta {
            eprintln!("KS distance to the beta limit: {ks:.5}");
        }
    }
    if let Some(c) = &res.comparison {
        eprintln!(
            "endpoint TV {:.5} (threshold {:.5}), chi-square p = {:.4}",
            c.total_variation, c.tv_threshold, c.p_value
        );
    }
    if let Some(z) = &res.z {
        if let Some(tv) = z.total_variation {
            eprintln!("Z: TV to the exact law {tv:.5}");
        }
    }
    if let Some(b) = &res.blocks {
        eprintln!(
            "blocks: mean {:.4} (expected {:.4}), mean largest block {:.2}",
            b.mean_blocks, b.expected_blocks, b.mean_largest_block
        );
    }
}

fn cmd_simulate(job: &SimulationJob, output: &OutputArgs) -> Result<i32> {
    let res = run_job(job)?;
    summarize(&res);
    let format = output.format.unwrap_or(Format::Json);
    let mut w = open_output(output, "simulate", format)?;
    match format {
        Format::Json => write_json(&mut w, &res)?,
        Format::Csv => {
            if let Some(h) = &res.endpoint {
                pio::write_endpoint_csv(&mut w, h)?;
            } else if let Some(s) = &res.scaled {
                pio::write_bins_csv(&mut w, &s.histogram)?;
            } else if let Some(z) = &res.z {
                pio::write_z_histogram_csv(&mut w, &z.empirical)?;
            } else {
                return Err(Error::invalid("no CSV histogram for the requested statistics"));
            }
        }
    }
    Ok(EXIT_OK)
}

#[derive(Serialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
enum MomentReport {
    Array { phi: PhiDocument },
    Witness { h: usize, t: usize, value: Scalar },
}

fn cmd_moment_check(
    family: &FamilyArgs,
    phi_file: &Path,
    max_level: Option<usize>,
    atoms: bool,
    m_max: Option<usize>,
    tol: f64,
    output: &OutputArgs,
) -> Result<i32> {
    let seq = parse_sequence_csv(File::open(phi_file)?)?;
    if seq.is_empty() {
        return Err(Error::invalid("empty moment sequence"));
    }
    let mut family = family.clone();
    if family.family.is_none() && family.q.is_some() {
        family.family = Some("qpascal".into());
    }
    let format = output.format.unwrap_or(Format::Json);
    if atoms {
        let q = Scalar::parse(
            family
                .q
                .as_deref()
                .ok_or_else(|| Error::invalid("--atoms needs --q"))?,
        )?;
        let m_max = m_max.unwrap_or(seq.len().saturating_sub(3));
        let rec = q_atom_recovery(&seq, &q, m_max, tol)?;
        let mut w = open_output(output, "atoms", format)?;
        match format {
            Format::Json => write_json(&mut w, &rec)?,
            Format::Csv => {
                let mut wtr = csv::Writer::from_writer(&mut w);
                wtr.write_record(["atom", "mass"])?;
                for (m, mu) in rec.atoms.iter().enumerate() {
                    wtr.write_record([q.powi(m as i64).to_string(), mu.to_string()])?;
                }
                wtr.write_record(["0".to_string(), rec.zero_atom.to_string()])?;
                wtr.flush()?;
            }
        }
        return Ok(EXIT_OK);
    }
    let spec = family.graph_spec()?;
    let g = make_graph(&spec, spec.mode())?;
    let horizon = max_level.unwrap_or(seq.len() - 1);
    let outcome = hausdorff_check(&g, &seq, horizon, tol)?;
    let mut w = open_output(output, "moment", format)?;
    let (report, code) = match outcome {
        MomentOutcome::Array(phi) => (MomentReport::Array { phi: PhiDocument::new(&phi) }, EXIT_OK),
        MomentOutcome::Witness { at, value } => {
            eprintln!("negative entry {value} at ({}, {})", at.h, at.t);
            (
                MomentReport::Witness {
                    h: at.h,
                    t: at.t,
                    value,
                },
                EXIT_VALIDATION,
            )
        }
    };
    match (format, &report) {
        (Format::Csv, MomentReport::Array { phi }) => {
            pio::write_triangle_csv(&mut w, &phi.values()?, "phi")?
        }
        (Format::Csv, MomentReport::Witness { h, t, value }) => {
            writeln!(w, "h,t,value\n{h},{t},{value}")?;
        }
        (Format::Json, r) => write_json(&mut w, r)?,
    }
    Ok(code)
}

fn cmd_self_check() -> Result<i32> {
    let results = run_self_check();
    let mut all = true;
    for r in &results {
        println!(
            "{} {} ({:.2}s){}",
            if r.passed { "PASS" } else { "FAIL" },
            r.name,
            r.seconds,
            if r.passed { String::new() } else { format!(": {}", r.detail) }
        );
        all &= r.passed;
    }
    Ok(if all { EXIT_OK } else { EXIT_VALIDATION })
}

pub fn execute(cli: &Cli) -> Result<i32> {
    match &cli.command {
        Command::Dims {
            family,
            max_level,
            output,
        } => cmd_dims(family, *max_level, output),
        Command::Phi {
            family,
            max_level,
            limit_path,
            tol,
            budget,
            output,
        } => cmd_phi(family, *max_level, limit_path.as_deref(), *tol, *budget, output),
        Command::Boundary {
            family,
            max_extremes,
            probe,
            z,
            tol,
            output,
        } => cmd_boundary(
            family,
            &ReportOptions {
                max_extremes: *max_extremes,
                probe: *probe,
            },
            *z,
            *tol,
            output,
        ),
        Command::Simulate {
            job,
            process,
            family,
            n,
            reps,
            seed,
            stat,
            scaler,
            output,
        } => {
            let job = match (job, process) {
                (Some(path), _) => serde_json::from_reader(io::BufReader::new(File::open(path)?))?,
                (None, Some(p)) => build_job(p, family, *n, *reps, *seed, stat, scaler.as_deref())?,
                (None, None) => return Err(Error::invalid("simulate needs --job or --process")),
            };
            cmd_simulate(&job, output)
        }
        Command::MomentCheck {
            family,
            phi_file,
            max_level,
            atoms,
            m_max,
            tol,
            output,
        } => cmd_moment_check(family, phi_file, *max_level, *atoms, *m_max, *tol, output),
        Command::SelfCheck => cmd_self_check(),
    }
}

/// Parses arguments, runs the command and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_VALIDATION } else { EXIT_OK };
        }
    };
    match execute(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
