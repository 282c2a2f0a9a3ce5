use std::fs::File;
use std::io::{self, Write};
use std::path::Path;

use anyhow::{Context, Result};
use drs_core::dataset::Format;
use drs_core::sim::{SamplingMode, STUDY_CSV_HEADER};
use drs_core::{run_study, DesignPoint, DrsError, EstimatorOptions, Method, ModelKind, PresetReading, StudySummary};
use serde::Deserialize;

use crate::{ModelArg, ModeArg, ReadingArg, SimulateArgs};

const DEFAULT_REPLICATES: usize = 5000;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct Config {
    design: Vec<DesignEntry>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct DesignEntry {
    preset: Option<String>,
    /// Explicit probabilities `[p1_a, p2_a, p1_b, p2_b]` instead of a preset.
    probabilities: Option<[f64; 4]>,
    model: ModelKind,
    na: u64,
    nb: u64,
    alpha: f64,
    seed: u64,
    replicates: Option<usize>,
    estimators: Option<Vec<String>>,
    #[serde(default)]
    reading: Reading,
    #[serde(default)]
    mode: Mode,
}

#[derive(Debug, Default, Clone, Copy, Deserialize)]
#[serde(rename_all = "lowercase")]
enum Reading {
    #[default]
    Direct,
    Marginal,
}

#[derive(Debug, Default, Clone, Copy, Deserialize)]
#[serde(rename_all = "lowercase")]
enum Mode {
    #[default]
    Multinomial,
    Individual,
}

struct Job {
    design: DesignPoint,
    methods: Vec<Method>,
}

fn default_estimators(model: ModelKind) -> Vec<Method> {
    match model {
        ModelKind::I => vec![Method::MmeI, Method::MleI, Method::Lp, Method::Nour, Method::Wolter2],
        ModelKind::II => vec![Method::MleII, Method::Nour],
    }
}

fn parse_methods(names: Option<&[String]>, model: ModelKind) -> Result<Vec<Method>> {
    match names {
        None => Ok(default_estimators(model)),
        Some(names) => Ok(names.iter().map(|n| n.parse()).collect::<std::result::Result<_, DrsError>>()?),
    }
}

fn jobs_from_flags(args: &SimulateArgs) -> Result<Vec<Job>> {
    // clap guarantees these are present without --config.
    let (Some(preset), Some(model), Some(na), Some(nb), Some(alpha), Some(seed)) =
        (&args.preset, args.model, args.na, args.nb, args.alpha, args.seed)
    else {
        anyhow::bail!("--preset, --model, --na, --nb, --alpha and --seed are required without --config");
    };
    let model = match model {
        ModelArg::I => ModelKind::I,
        ModelArg::II => ModelKind::II,
    };
    let reading = match args.reading {
        ReadingArg::Direct => PresetReading::Direct,
        ReadingArg::Marginal => PresetReading::Marginal,
    };
    let replicates = args.replicates.unwrap_or(DEFAULT_REPLICATES);
    let mut design = DesignPoint::from_preset(preset, reading, model, na, nb, alpha, replicates, seed)?;
    design.mode = match args.mode {
        ModeArg::Multinomial => SamplingMode::Multinomial,
        ModeArg::Individual => SamplingMode::Individual,
    };
    let methods = parse_methods(args.estimators.as_deref(), model)?;
    Ok(vec![Job { design, methods }])
}

fn jobs_from_config(path: &Path, args: &SimulateArgs) -> Result<Vec<Job>> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let config: Config = toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    config
        .design
        .into_iter()
        .enumerate()
        .map(|(k, e)| {
            let reading = match e.reading {
                Reading::Direct => PresetReading::Direct,
                Reading::Marginal => PresetReading::Marginal,
            };
            let replicates = args.replicates.or(e.replicates).unwrap_or(DEFAULT_REPLICATES);
            let mut design = match (&e.preset, e.probabilities) {
                (Some(preset), None) => {
                    DesignPoint::from_preset(preset, reading, e.model, e.na, e.nb, e.alpha, replicates, e.seed)
                }
                (None, Some([p1_a, p2_a, p1_b, p2_b])) => {
                    let d = DesignPoint {
                        name: format!("custom{}", k + 1),
                        p1_a,
                        p2_a,
                        p1_b,
                        p2_b,
                        alpha: e.alpha,
                        n_a: e.na,
                        n_b: e.nb,
                        model: e.model,
                        replicates,
                        seed: e.seed,
                        sign: Default::default(),
                        mode: Default::default(),
                    };
                    d.validate().map(|_| d)
                }
                _ => Err(DrsError::Parse("give exactly one of preset and probabilities".into())),
            }
            .with_context(|| format!("design {}", k + 1))?;
            design.mode = match e.mode {
                Mode::Multinomial => SamplingMode::Multinomial,
                Mode::Individual => SamplingMode::Individual,
            };
            let names = e.estimators.as_deref().or(args.estimators.as_deref());
            let methods = parse_methods(names, e.model).with_context(|| format!("design {}", k + 1))?;
            Ok(Job { design, methods })
        })
        .collect()
}

pub fn run(args: &SimulateArgs) -> Result<()> {
    let jobs = match &args.config {
        Some(path) => jobs_from_config(path, args)?,
        None => jobs_from_flags(args)?,
    };
    let summaries = jobs
        .iter()
        .map(|job| run_study(&job.design, &job.methods, &EstimatorOptions::default()))
        .collect::<drs_core::Result<Vec<_>>>()?;

    write_csv(&summaries, io::stdout().lock())?;
    if let Some(path) = &args.out {
        let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
        match Format::from_path(path) {
            Format::Csv => write_csv(&summaries, file)?,
            Format::Json => {
                let mut w = io::BufWriter::new(file);
                serde_json::to_writer_pretty(&mut w, &summaries)?;
                writeln!(w)?;
            }
        }
    }

    summaries.iter().try_for_each(StudySummary::check)?;
    Ok(())
}

fn write_csv<W: Write>(summaries: &[StudySummary], w: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(w);
    w.write_record(STUDY_CSV_HEADER)?;
    for s in summaries {
        for rec in s.csv_records() {
            w.write_record(&rec)?;
        }
    }
    w.flush()?;
    Ok(())
}
