use std::f64::consts::PI;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use lbm_isotropy::conditions::{
    classical_assignment, extracted_conditions, order3_violating_assignment, order4_assignment, proposition_report,
    ParameterAssignment,
};
use lbm_isotropy::expansion::{derive_equivalent_equations, index_label, ExpansionResult, MAX_ORDER};
use lbm_isotropy::scheme::{d2q9_preset, SchemeFile, SchemeSpec};
use lbm_isotropy::simulate::{
    compare_with_tensors, eigenvalue_expansion, measure_anisotropy, AnisotropyOptions, FitOptions, NumericScheme,
    SimConfig,
};
use serde::Deserialize;

/// Exact equivalent equations and isotropy conditions for linear lattice
/// Boltzmann schemes.
#[derive(Parser, Debug)]
#[command(name = "lbiso", version, about)]
struct Cli {
    /// Log progress and per-order timing to stderr.
    #[arg(short, long, global = true)]
    verbose: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Derive the tensors A_1..A_M of the equivalent equations.
    Derive {
        #[command(flatten)]
        run: RunArgs,
        /// Also write the nonconserved tensors B_1..B_M (JSON only).
        #[arg(long)]
        with_b: bool,
    },
    /// Extract isotropy conditions at one order, given each branch of the
    /// lower-order conditions.
    Conditions {
        #[command(flatten)]
        run: RunArgs,
    },
    /// Check sufficiency and necessity of the D2Q9 isotropy conditions.
    Check {
        #[command(flatten)]
        run: RunArgs,
    },
    /// Fit the dispersion relation of an assignment and compare it with the
    /// derived tensors.
    Dispersion {
        #[command(flatten)]
        run: RunArgs,
        /// `|k| dx` at the largest fitted radius.
        #[arg(long, default_value_t = FitOptions::default().kmax_dx)]
        kmax_dx: f64,
    },
    /// Shear-wave decay rate against propagation angle.
    Anisotropy {
        #[command(flatten)]
        run: RunArgs,
        /// Angles in radians, comma separated.
        #[arg(long, value_delimiter = ',', default_values_t = [0.0, PI / 8.0, PI / 4.0, 3.0 * PI / 8.0])]
        angles: Vec<f64>,
        #[arg(long, default_value_t = AnisotropyOptions::default().kmag_dx)]
        kmag_dx: f64,
        #[arg(long, default_value_t = AnisotropyOptions::default().horizon)]
        horizon: u64,
    },
}

#[derive(Args, Debug, Clone)]
struct RunArgs {
    /// Built-in scheme.
    #[arg(long, conflicts_with = "scheme")]
    preset: Option<String>,
    /// Scheme description in JSON.
    #[arg(long)]
    scheme: Option<PathBuf>,
    /// Expansion order.
    #[arg(long)]
    order: Option<usize>,
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Parameter assignment: a JSON file or one of `classical`, `order4`,
    /// `order3-violating`.
    #[arg(long)]
    assignment: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    /// Propagation angle in radians.
    #[arg(long)]
    theta: Option<f64>,
    /// JSON run configuration; its values override the flags.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
enum Format {
    Json,
    Latex,
    Csv,
    Text,
}

/// Run configuration file; every field is optional.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RunConfig {
    preset: Option<String>,
    scheme: Option<PathBuf>,
    order: Option<usize>,
    format: Option<Format>,
    assignment: Option<String>,
    seed: Option<u64>,
    theta: Option<f64>,
}

/// Failure classes and their exit codes.
#[derive(Debug)]
enum Failure {
    Runtime(String),
    Invalid(String),
    Sufficiency,
    Necessity,
    Oracle,
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Runtime(_) => 1,
            Failure::Invalid(_) => 2,
            Failure::Sufficiency => 3,
            Failure::Necessity => 4,
            Failure::Oracle => 5,
        }
    }
}

fn invalid(e: impl std::fmt::Display) -> Failure {
    Failure::Invalid(e.to_string())
}

fn runtime(e: impl std::fmt::Display) -> Failure {
    Failure::Runtime(e.to_string())
}

/// Resolved run settings.
struct Run {
    spec: SchemeSpec,
    preset: bool,
    order: usize,
    format: Option<Format>,
    assignment: Option<String>,
    seed: u64,
    theta: f64,
}

impl Run {
    fn resolve(args: &RunArgs, default_order: usize) -> Result<Run, Failure> {
        let mut args = args.clone();
        if let Some(path) = &args.config {
            let text = std::fs::read_to_string(path).map_err(|e| invalid(format!("{}: {e}", path.display())))?;
            let cfg: RunConfig = serde_json::from_str(&text).map_err(|e| invalid(format!("{}: {e}", path.display())))?;
            if cfg.preset.is_some() || cfg.scheme.is_some() {
                args.preset = cfg.preset;
                args.scheme = cfg.scheme;
            }
            args.order = cfg.order.or(args.order);
            args.format = cfg.format.or(args.format);
            args.assignment = cfg.assignment.or(args.assignment);
            args.seed = cfg.seed.or(args.seed);
            args.theta = cfg.theta.or(args.theta);
        }
        let (spec, preset) = match (&args.preset, &args.scheme) {
            (Some(_), Some(_)) => return Err(invalid("give either --preset or --scheme, not both")),
            (_, Some(path)) => (load_scheme(path)?, false),
            (Some(name), None) => (preset(name)?, true),
            (None, None) => (d2q9_preset(), true),
        };
        let order = args.order.unwrap_or(default_order);
        if order == 0 || order > MAX_ORDER {
            return Err(invalid(format!("order {order} outside 1..={MAX_ORDER}")));
        }
        Ok(Run {
            spec,
            preset,
            order,
            format: args.format,
            assignment: args.assignment,
            seed: args.seed.unwrap_or(7),
            theta: args.theta.unwrap_or(0.3),
        })
    }

    fn format(&self, default: Format, allowed: &[Format]) -> Result<Format, Failure> {
        let f = self.format.unwrap_or(default);
        if allowed.contains(&f) {
            Ok(f)
        } else {
            Err(invalid(format!("format {f:?} is not available for this command")))
        }
    }

    fn require_preset(&self) -> Result<(), Failure> {
        if self.preset {
            Ok(())
        } else {
            Err(invalid("the stated D2Q9 conditions only apply to the d2q9 preset"))
        }
    }

    fn assignment(&self) -> Result<ParameterAssignment, Failure> {
        match self.assignment.as_deref() {
            None | Some("classical") => Ok(classical_assignment()),
            Some("order4") => Ok(order4_assignment()),
            Some("order3-violating") => Ok(order3_violating_assignment()),
            Some(path) => ParameterAssignment::load(Path::new(path)).map_err(invalid),
        }
    }

    fn derive(&self) -> Result<ExpansionResult, Failure> {
        let start = Instant::now();
        let res = derive_equivalent_equations(&self.spec, self.order).map_err(invalid)?;
        log::info!("derived A_1..A_{} in {:.2?}", self.order, start.elapsed());
        Ok(res)
    }
}

fn preset(name: &str) -> Result<SchemeSpec, Failure> {
    match name.to_ascii_lowercase().as_str() {
        "d2q9" => Ok(d2q9_preset()),
        other => Err(invalid(format!("unknown preset {other:?}; available: d2q9"))),
    }
}

fn load_scheme(path: &Path) -> Result<SchemeSpec, Failure> {
    SchemeFile::load(path).and_then(|f| f.build()).map_err(invalid)
}

fn cmd_derive(run: &Run, with_b: bool) -> Result<String, Failure> {
    let format = run.format(Format::Json, &[Format::Json, Format::Latex, Format::Text])?;
    let res = run.derive()?;
    Ok(match format {
        Format::Json => res.to_json(with_b),
        Format::Latex => res.to_latex(),
        _ => {
            let mut out = String::new();
            for t in &res.a {
                for (e, m) in t.entries() {
                    for (i, wi) in res.conserved.iter().enumerate() {
                        for (j, wj) in res.conserved.iter().enumerate() {
                            let v = &m[(i, j)];
                            if !v.is_zero() {
                                out.push_str(&format!("A_{}[{wi}][{wj}][{}] = {v}\n", t.order(), index_label(e)));
                            }
                        }
                    }
                }
            }
            out
        }
    })
}

fn cmd_conditions(run: &Run) -> Result<String, Failure> {
    run.require_preset()?;
    let format = run.format(Format::Text, &[Format::Json, Format::Latex, Format::Text])?;
    let res = run.derive()?;
    let sets = extracted_conditions(&run.spec, &res, run.order, run.seed).map_err(runtime)?;
    Ok(match format {
        Format::Json => serde_json::to_string_pretty(&sets).expect("conditions serialize"),
        Format::Latex => {
            let mut out = String::new();
            for s in &sets {
                out.push_str(&format!("% order {}, given [{}]\n", s.order, s.lower_branch));
                for (k, c) in s.components.iter().enumerate() {
                    let eqs: Vec<String> = c.iter().map(|(n, v)| format!("{} = {v}", latex_name(n))).collect();
                    out.push_str(&format!("% component {}\n\\[ {} \\]\n", k + 1, eqs.join(",\\quad ")));
                }
            }
            out
        }
        _ => {
            let mut out = String::new();
            for s in &sets {
                out.push_str(&format!(
                    "order {} given [{}]: {} extracted conditions, {} solution component(s)\n",
                    s.order,
                    s.lower_branch,
                    s.conditions.conditions.len(),
                    s.components.len()
                ));
                for (k, c) in s.components.iter().enumerate() {
                    out.push_str(&format!("  component {}:\n", k + 1));
                    for (n, v) in c {
                        out.push_str(&format!("    {n} = {v}\n"));
                    }
                }
                for c in &s.conditions.conditions {
                    match &c.name {
                        Some(name) => out.push_str(&format!("  raw: {} ({name})\n", c.equation)),
                        None => out.push_str(&format!("  raw: {}\n", c.equation)),
                    }
                }
            }
            out
        }
    })
}

fn latex_name(name: &str) -> String {
    match name.split_once('_') {
        Some((head, tail)) => format!("{head}_{{{}}}", tail.replace('_', ",")),
        None => name.to_string(),
    }
}

fn cmd_check(run: &Run) -> Result<(String, Option<Failure>), Failure> {
    run.require_preset()?;
    let format = run.format(Format::Text, &[Format::Json, Format::Text])?;
    let res = run.derive()?;
    let seeds = [run.seed, run.seed + 1, run.seed + 2];
    let report = proposition_report(&run.spec, &res, run.order, &seeds).map_err(runtime)?;
    let text = match format {
        Format::Json => report.to_json(),
        _ => report.to_text(),
    };
    let failure = if !report.all_sufficient() {
        Some(Failure::Sufficiency)
    } else if !report.all_necessary() {
        Some(Failure::Necessity)
    } else {
        None
    };
    Ok((text, failure))
}

/// Relative tolerances of the dispersion comparison by order.
const DISPERSION_TOL: [f64; 4] = [1e-6, 1e-6, 1e-4, 1e-4];

fn cmd_dispersion(run: &Run, kmax_dx: f64) -> Result<(String, Option<Failure>), Failure> {
    let format = run.format(Format::Csv, &[Format::Csv, Format::Json, Format::Text])?;
    let assignment = run.assignment()?;
    let num = NumericScheme::new(&run.spec, &assignment, &SimConfig::default()).map_err(invalid)?;
    let bindings = assignment.bindings(&run.spec).map_err(invalid)?;
    // tensors of the specialized scheme; lambda stays symbolic
    let start = Instant::now();
    let specialized = run.spec.specialize(&bindings).map_err(invalid)?;
    let tensors = derive_equivalent_equations(&specialized, run.order).map_err(runtime)?;
    log::info!("derived specialized tensors in {:.2?}", start.elapsed());
    let opts = FitOptions {
        kmax_dx,
        ..Default::default()
    };
    let fit = eigenvalue_expansion(&num, run.theta, &opts, run.order).map_err(runtime)?;
    let cmp = compare_with_tensors(&fit, &tensors, &num, &DISPERSION_TOL[..run.order]).map_err(runtime)?;
    let out = match format {
        Format::Json => serde_json::to_string_pretty(&serde_json::json!({ "fit": fit, "comparison": cmp }))
            .expect("fit serializes"),
        Format::Text => {
            let mut out = format!("theta = {}, kmax dx = {kmax_dx:e}\n", run.theta);
            for n in 1..=run.order {
                out.push_str(&format!("order {n}: worst relative error {:.3e}\n", cmp.worst(n)));
            }
            for f in cmp.failures() {
                out.push_str(&format!("  {f}\n"));
            }
            out
        }
        _ => cmp.to_csv(),
    };
    Ok((out, (!cmp.pass()).then_some(Failure::Oracle)))
}

fn cmd_anisotropy(run: &Run, angles: &[f64], kmag_dx: f64, horizon: u64) -> Result<String, Failure> {
    let format = run.format(Format::Csv, &[Format::Csv, Format::Json, Format::Text])?;
    let num = NumericScheme::new(&run.spec, &run.assignment()?, &SimConfig::default()).map_err(invalid)?;
    let res = measure_anisotropy(&num, angles, &AnisotropyOptions { kmag_dx, horizon }).map_err(runtime)?;
    Ok(match format {
        Format::Json => serde_json::to_string_pretty(&res).expect("result serializes"),
        Format::Text => {
            let mut out = String::new();
            for (a, r) in res.angles.iter().zip(&res.rates) {
                out.push_str(&format!("angle {a:.6}: decay rate {r:.12e}\n"));
            }
            out.push_str(&format!("spread {:.3e}\n", res.spread));
            out
        }
        _ => res.to_csv(),
    })
}

fn execute(cli: &Cli) -> Result<(String, Option<Failure>), Failure> {
    match &cli.command {
        Command::Derive { run, with_b } => Ok((cmd_derive(&Run::resolve(run, MAX_ORDER)?, *with_b)?, None)),
        Command::Conditions { run } => Ok((cmd_conditions(&Run::resolve(run, MAX_ORDER)?)?, None)),
        Command::Check { run } => cmd_check(&Run::resolve(run, MAX_ORDER)?),
        Command::Dispersion { run, kmax_dx } => cmd_dispersion(&Run::resolve(run, MAX_ORDER)?, *kmax_dx),
        Command::Anisotropy {
            run,
            angles,
            kmag_dx,
            horizon,
        } => Ok((cmd_anisotropy(&Run::resolve(run, MAX_ORDER)?, angles, *kmag_dx, *horizon)?, None)),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    env_logger::Builder::new()
        .filter_level(if cli.verbose { log::LevelFilter::Info } else { log::LevelFilter::Warn })
        .parse_default_env()
        .init();
    match execute(&cli) {
        Ok((out, failure)) => {
            let mut stdout = std::io::stdout().lock();
            let tail = if out.ends_with('\n') { "" } else { "\n" };
            // a closed pipe downstream is not an error
            let _ = write!(stdout, "{out}{tail}").and_then(|_| stdout.flush());
            match failure {
                None => ExitCode::SUCCESS,
                Some(f) => {
                    eprintln!("lbiso: {}", describe(&f));
                    ExitCode::from(f.code())
                }
            }
        }
        Err(f) => {
            eprintln!("lbiso: {}", describe(&f));
            ExitCode::from(f.code())
        }
    }
}

fn describe(f: &Failure) -> String {
    match f {
        Failure::Runtime(m) | Failure::Invalid(m) => m.clone(),
        Failure::Sufficiency => "a sufficiency check failed".into(),
        Failure::Necessity => "a necessity probe did not detect its violation".into(),
        Failure::Oracle => "fitted dispersion coefficients disagree with the tensors".into(),
    }
}
