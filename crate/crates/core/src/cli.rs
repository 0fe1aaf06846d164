//! Command-line front end. Exit codes: 0 success, 1 verification failure,
//! 2 usage or input error.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::cadlag::StepFunction;
use crate::diagnostics::{
    compactness_csv, compactness_profile, tightness_report, PathEnsemble, Variant,
};
use crate::error::{validation, Result};
use crate::matching::Objective;
use crate::metric::distance;
use crate::nested::{nested_distance, NestedPath};
use crate::simulate::{make_ensemble, SimConfig};
use crate::verify::{run_all, Corpus};

#[derive(Debug, Parser)]
#[command(
    name = "skorohod",
    version,
    about = "Skorohod J1 geometry on step paths and paths of paths"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum ObjectiveArg {
    J1,
    #[value(name = "j1_0")]
    J10,
}

impl From<ObjectiveArg> for Objective {
    fn from(o: ObjectiveArg) -> Self {
        match o {
            ObjectiveArg::J1 => Objective::UniformDev,
            ObjectiveArg::J10 => Objective::LogSlope,
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum Level {
    Scalar,
    Nested,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, ValueEnum)]
pub enum Modulus {
    #[value(name = "wprime")]
    Wprime,
    #[value(name = "wsecond")]
    Wsecond,
    #[value(name = "wDprime")]
    WDprime,
    #[value(name = "wDsecond")]
    WDsecond,
    #[value(name = "wusecond")]
    Wusecond,
}

impl Modulus {
    fn name(self) -> &'static str {
        match self {
            Modulus::Wprime => "wprime",
            Modulus::Wsecond => "wsecond",
            Modulus::WDprime => "wDprime",
            Modulus::WDsecond => "wDsecond",
            Modulus::Wusecond => "wusecond",
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum VariantArg {
    Wprime,
    Wsecond,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Skorohod distance between two paths, with its optimal time change.
    Dist {
        x_file: PathBuf,
        y_file: PathBuf,
        #[arg(long, value_enum, default_value = "j1")]
        objective: ObjectiveArg,
        #[arg(long, value_enum, default_value = "scalar")]
        level: Level,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Moduli of a nested path (a scalar path is read as a constant one), as CSV.
    Moduli {
        path_file: PathBuf,
        #[arg(long, value_delimiter = ',', required = true)]
        delta_grid: Vec<f64>,
        #[arg(
            long,
            value_enum,
            value_delimiter = ',',
            default_value = "wprime,wsecond,wDprime,wDsecond,wusecond"
        )]
        which: Vec<Modulus>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Suprema of the relative-compactness quantities over a set of paths.
    Compactness {
        /// Nested path or ensemble files.
        #[arg(required = true)]
        files: Vec<PathBuf>,
        #[arg(long, value_delimiter = ',', required = true)]
        delta_grid: Vec<f64>,
        #[arg(long, value_enum, default_value = "wsecond")]
        variant: VariantArg,
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Exceedance frequencies of the tightness conditions.
    Tightness {
        /// Simulation configs; each is simulated before tabulation.
        #[arg(long = "config")]
        configs: Vec<PathBuf>,
        /// Ensemble files written by `simulate`.
        #[arg(long = "ensemble")]
        ensembles: Vec<PathBuf>,
        #[arg(long, value_delimiter = ',', required = true)]
        a_grid: Vec<f64>,
        #[arg(long, value_delimiter = ',', required = true)]
        delta_grid: Vec<f64>,
        #[arg(long, value_delimiter = ',', required = true)]
        epsilon_grid: Vec<f64>,
        #[arg(long, value_delimiter = ',', default_value = "1")]
        t_subset: Vec<f64>,
        /// Overrides the seed of every config.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Simulates an ensemble of partial-sum paths.
    Simulate {
        cfg_file: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Runs the invariant suites over a corpus of JSON fixtures.
    Verify { corpus_dir: PathBuf },
}

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path)
        .map_err(|e| validation(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| validation(format!("{}: {e}", path.display())))
}

fn to_json<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serializable");
    s.push('\n');
    s
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => {
            fs::write(p, text).map_err(|e| validation(format!("cannot write {}: {e}", p.display())))
        }
        None => {
            let mut so = std::io::stdout().lock();
            so.write_all(text.as_bytes())
                .and_then(|_| so.flush())
                .map_err(|e| validation(format!("cannot write to stdout: {e}")))
        }
    }
}

fn read_nested_or_scalar(path: &Path) -> Result<NestedPath> {
    let value: serde_json::Value = read_json(path)?;
    if value.get("t_breakpoints").is_some() {
        serde_json::from_value(value).map_err(|e| validation(format!("{}: {e}", path.display())))
    } else {
        let x: StepFunction = serde_json::from_value(value)
            .map_err(|e| validation(format!("{}: {e}", path.display())))?;
        Ok(NestedPath::constant(x))
    }
}

fn read_paths(path: &Path) -> Result<Vec<NestedPath>> {
    let value: serde_json::Value = read_json(path)?;
    let err = |e: serde_json::Error| validation(format!("{}: {e}", path.display()));
    if value.get("paths").is_some() {
        let e: PathEnsemble = serde_json::from_value(value).map_err(err)?;
        Ok(e.paths().to_vec())
    } else {
        Ok(vec![serde_json::from_value(value).map_err(err)?])
    }
}

fn moduli_csv(x: &NestedPath, deltas: &[f64], which: &[Modulus]) -> Result<String> {
    let mut which = which.to_vec();
    which.sort();
    which.dedup();
    let sup_inner = |f: &dyn Fn(&StepFunction) -> Result<f64>| -> Result<f64> {
        x.segments()
            .iter()
            .try_fold(0.0f64, |m, s| Ok(m.max(f(s)?)))
    };
    let mut w = csv::Writer::from_writer(Vec::new());
    let csv_err = |e: csv::Error| validation(e.to_string());
    w.write_record(["modulus", "delta", "value"])
        .map_err(csv_err)?;
    for m in which {
        for &d in deltas {
            let v = match m {
                Modulus::Wprime => sup_inner(&|s| s.modulus_wprime(d))?,
                Modulus::Wsecond => sup_inner(&|s| s.modulus_wsecond(d))?,
                Modulus::WDprime => x.w_d_prime(d)?,
                Modulus::WDsecond => x.w_d_second(d)?,
                Modulus::Wusecond => x.w_u_second(d)?,
            };
            w.write_record([m.name().to_string(), d.to_string(), v.to_string()])
                .map_err(csv_err)?;
        }
    }
    let bytes = w.into_inner().map_err(|e| validation(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("CSV output is UTF-8"))
}

/// Runs one command. `Ok(false)` signals a verification failure.
pub fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Dist {
            x_file,
            y_file,
            objective,
            level,
            out,
        } => {
            let obj = Objective::from(objective);
            let r = match level {
                Level::Scalar => {
                    let x: StepFunction = read_json(&x_file)?;
                    let y: StepFunction = read_json(&y_file)?;
                    distance(&x, &y, obj)
                }
                Level::Nested => {
                    let x: NestedPath = read_json(&x_file)?;
                    let y: NestedPath = read_json(&y_file)?;
                    nested_distance(&x, &y, obj)
                }
            };
            emit(out.as_deref(), &to_json(&r))?;
        }
        Command::Moduli {
            path_file,
            delta_grid,
            which,
            out,
        } => {
            let x = read_nested_or_scalar(&path_file)?;
            emit(out.as_deref(), &moduli_csv(&x, &delta_grid, &which)?)?;
        }
        Command::Compactness {
            files,
            delta_grid,
            variant,
            format,
            out,
        } => {
            let mut paths = Vec::new();
            for f in &files {
                paths.extend(read_paths(f)?);
            }
            let variant = match variant {
                VariantArg::Wprime => Variant::Wprime,
                VariantArg::Wsecond => Variant::Wsecond,
            };
            let report = compactness_profile(&paths, &delta_grid, variant)?;
            let text = match format {
                Format::Json => to_json(&report),
                Format::Csv => compactness_csv(&report),
            };
            emit(out.as_deref(), &text)?;
        }
        Command::Tightness {
            configs,
            ensembles,
            a_grid,
            delta_grid,
            epsilon_grid,
            t_subset,
            seed,
            format,
            out,
        } => {
            if configs.is_empty() && ensembles.is_empty() {
                return Err(validation(
                    "tightness needs at least one --config or --ensemble",
                ));
            }
            let mut all = Vec::new();
            for c in &configs {
                let mut cfg: SimConfig = read_json(c)?;
                if let Some(s) = seed {
                    cfg.seed = s;
                }
                all.push(make_ensemble(&cfg)?);
            }
            for e in &ensembles {
                all.push(read_json::<PathEnsemble>(e)?);
            }
            let report = tightness_report(&all, &a_grid, &delta_grid, &epsilon_grid, &t_subset)?;
            let text = match format {
                Format::Json => to_json(&report),
                Format::Csv => report.to_csv()?,
            };
            emit(out.as_deref(), &text)?;
        }
        Command::Simulate {
            cfg_file,
            seed,
            out,
        } => {
            let mut cfg: SimConfig = read_json(&cfg_file)?;
            if let Some(s) = seed {
                cfg.seed = s;
            }
            emit(out.as_deref(), &to_json(&make_ensemble(&cfg)?))?;
        }
        Command::Verify { corpus_dir } => {
            let corpus = Corpus::load_dir(&corpus_dir)?;
            let results = run_all(&corpus);
            let mut text = String::new();
            for r in &results {
                let status = if r.ok() { "ok" } else { "FAILED" };
                text.push_str(&format!("{}: {}/{} {status}\n", r.name, r.passed, r.total));
                for f in &r.failures {
                    text.push_str(&format!("  {f}\n"));
                }
            }
            emit(None, &text)?;
            return Ok(results.iter().all(|r| r.ok()));
        }
    }
    Ok(true)
}
