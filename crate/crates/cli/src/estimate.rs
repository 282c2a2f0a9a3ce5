use std::fs::File;
use std::io::{self, Write};
use std::path::Path;

use anyhow::{bail, Context, Result};
use drs_core::dataset::{self, Format};
use drs_core::{
    bootstrap, estimate, BootstrapScheme, EstimateResult, EstimatorOptions, FitConfig, LogFactorial, Method,
    StratumPair,
};
use serde::Serialize;

use crate::{EstimateArgs, Infeasible, LogFactorialArg, Scheme};

#[derive(Debug, Serialize)]
struct Row {
    method: Method,
    stratum_a: String,
    stratum_b: String,
    #[serde(flatten)]
    outcome: Outcome,
}

#[derive(Debug, Serialize)]
#[serde(rename_all = "lowercase")]
enum Outcome {
    Ok(Box<EstimateResult>),
    Error(String),
}

pub fn run(args: &EstimateArgs) -> Result<()> {
    let data = dataset::load(&args.data, args.dependent.as_deref())
        .with_context(|| format!("reading {}", args.data.display()))?;
    if args.dump {
        dataset::dump_csv(&data, io::stdout().lock())?;
        return Ok(());
    }

    let methods = args
        .method
        .iter()
        .map(|m| m.trim().parse::<Method>())
        .collect::<std::result::Result<Vec<_>, _>>()?;
    if args.ratio.is_none() {
        if let Some(m) = methods.iter().find(|m| m.needs_ratio()) {
            bail!("{} requires --ratio", m.cli_name());
        }
    }
    if args.bootstrap == 1 {
        bail!("--bootstrap needs at least 2 resamples");
    }

    let opts = EstimatorOptions {
        ratio: args.ratio,
        fit: FitConfig {
            known_ratio: args.ratio.filter(|_| args.constrain_ratio),
            seed: args.seed,
            log_factorial: match args.log_factorial {
                LogFactorialArg::Exact => LogFactorial::Exact,
                LogFactorialArg::Stirling => LogFactorial::Stirling,
                LogFactorialArg::Stirling1 => LogFactorial::StirlingFirstOrder,
            },
            ..Default::default()
        },
    };
    let scheme = match args.scheme {
        Scheme::Parametric => BootstrapScheme::Parametric,
        Scheme::Nonparametric => BootstrapScheme::Nonparametric,
    };

    let rows: Vec<Row> = methods
        .iter()
        .map(|&method| {
            let result = if args.bootstrap >= 2 {
                bootstrap(&data, method, scheme, args.bootstrap, args.seed, &opts)
            } else {
                estimate(method, &data, &opts)
            };
            let outcome = match result {
                Ok(r) => Outcome::Ok(Box::new(r)),
                Err(e) if e.is_infeasibility() => Outcome::Error(e.to_string()),
                Err(e) => return Err(e),
            };
            Ok(Row {
                method,
                stratum_a: data.label_a.clone(),
                stratum_b: data.label_b.clone(),
                outcome,
            })
        })
        .collect::<drs_core::Result<_>>()?;

    print_table(&data, &rows, &mut io::stdout().lock())?;
    if let Some(path) = &args.out {
        write_report(path, &rows)?;
    }

    let failed: Vec<String> = rows
        .iter()
        .filter_map(|r| match &r.outcome {
            Outcome::Error(msg) => Some(format!("{}: {msg}", r.method.cli_name())),
            Outcome::Ok(_) => None,
        })
        .collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(Infeasible(failed.join("; ")).into())
    }
}

fn cell(r: &EstimateResult, key: &str) -> String {
    let Some(n) = r.reported(key) else {
        return "-".into();
    };
    match r.se.as_ref().and_then(|se| se.get(key)) {
        Some(se) => format!("{n} [{se:.2}]"),
        None => n.to_string(),
    }
}

fn print_table<W: Write>(data: &StratumPair, rows: &[Row], w: &mut W) -> io::Result<()> {
    writeln!(w, "{:<9} {:>16} {:>16} {:>9}", "method", data.label_a, data.label_b, "alpha")?;
    for row in rows {
        match &row.outcome {
            Outcome::Ok(r) => {
                let alpha = r.alpha().map(|a| format!("{a:.3}")).unwrap_or_else(|| "-".into());
                writeln!(w, "{:<9} {:>16} {:>16} {:>9}", row.method.tag(), cell(r, "n_a"), cell(r, "n_b"), alpha)?;
                for note in &r.diagnostics.notes {
                    writeln!(w, "  note: {note}")?;
                }
            }
            Outcome::Error(msg) => writeln!(w, "{:<9} not applicable: {msg}", row.method.tag())?,
        }
    }
    Ok(())
}

const CSV_HEADER: [&str; 12] = [
    "method", "stratum_a", "n_a", "se_a", "ci_a_lo", "ci_a_hi", "stratum_b", "n_b", "se_b", "ci_b_lo", "ci_b_hi",
    "alpha",
];

fn write_report(path: &Path, rows: &[Row]) -> Result<()> {
    let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    match Format::from_path(path) {
        Format::Json => {
            let mut w = io::BufWriter::new(file);
            serde_json::to_writer_pretty(&mut w, rows)?;
            writeln!(w)?;
        }
        Format::Csv => {
            let mut w = csv::Writer::from_writer(file);
            let mut header = CSV_HEADER.to_vec();
            header.push("error");
            w.write_record(&header)?;
            for row in rows {
                let mut rec = vec![String::new(); header.len()];
                rec[0] = row.method.tag().into();
                rec[1] = row.stratum_a.clone();
                rec[6] = row.stratum_b.clone();
                match &row.outcome {
                    Outcome::Ok(r) => {
                        for (key, at) in [("n_a", 2), ("n_b", 7)] {
                            rec[at] = r.reported(key).map(|n| n.to_string()).unwrap_or_default();
                            if let Some(se) = r.se.as_ref().and_then(|s| s.get(key)) {
                                rec[at + 1] = format!("{se:.6}");
                            }
                            if let Some((lo, hi)) = r.ci.as_ref().and_then(|c| c.get(key)) {
                                rec[at + 2] = format!("{lo:.4}");
                                rec[at + 3] = format!("{hi:.4}");
                            }
                        }
                        rec[11] = r.alpha().map(|a| format!("{a:.6}")).unwrap_or_default();
                    }
                    Outcome::Error(msg) => rec[12] = msg.clone(),
                }
                w.write_record(&rec)?;
            }
            w.flush()?;
        }
    }
    Ok(())
}
