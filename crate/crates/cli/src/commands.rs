use std::io::Write;
use std::path::Path;
use std::time::Instant;

use anyhow::{Context, Result};
use clap::error::ErrorKind;
use clap::CommandFactory;
use dropreg::data::{normalize_columns, scaling_from_rows};
use dropreg::experiments::{
    run_fig1a, run_fisher_compare, run_penalty_trace, run_semisup_trials, run_table3, run_trace_task,
    run_variance_reduction, ExperimentReport, Fig1aConfig, FisherConfig, SemisupTrialConfig, Table3Config,
    TraceConfig, VarianceConfig,
};
use dropreg::model::{evaluate, Model, NoiseSpec};
use dropreg::optim::fit_glm;
use dropreg::semisup::fit_semisup;
use dropreg::simgen::{generate_rare_feature_dataset, LogisticStreamConfig, SimConfig};
use dropreg::{BatchConfig, Dataset, DiscountAlpha, Family, NoiseModel, PenaltyMode, ScalingMode, UnlabeledSet};
use serde::Serialize;

use crate::{Cli, Command, Format, PenaltyArg, ScaleArg, SemisupCheck, SurrogateArg, TrainArgs};

/// Report a flag problem the way clap does (exit code 2).
fn usage(msg: impl std::fmt::Display) -> ! {
    Cli::command().error(ErrorKind::ArgumentConflict, msg).exit()
}

fn require(value: Option<f64>, flag: &str, penalty: &str) -> f64 {
    value.unwrap_or_else(|| usage(format!("--penalty {penalty} requires --{flag}")))
}

fn emit(cli: &Cli, text: &str) -> Result<()> {
    match &cli.out {
        Some(path) => std::fs::write(path, text).with_context(|| format!("writing {}", path.display())),
        None => {
            std::io::stdout().write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

fn emit_report(cli: &Cli, report: &ExperimentReport, started: Instant) -> Result<()> {
    let text = match cli.format {
        Format::Json => report.to_json(),
        Format::Csv => report.to_csv(),
    };
    emit(cli, &text)?;
    for c in &report.checks {
        eprintln!("[{}] {}: {}", if c.passed { "pass" } else { "FAIL" }, c.name, c.detail);
    }
    eprintln!("{} finished in {:.1}s", report.name, started.elapsed().as_secs_f64());
    Ok(())
}

/// Flat key/value summaries printed by `train` and `eval`.
fn emit_summary<T: Serialize>(cli: &Cli, value: &T, to_stdout: bool) -> Result<()> {
    let text = match cli.format {
        Format::Json => {
            let mut s = serde_json::to_string_pretty(value)?;
            s.push('\n');
            s
        }
        Format::Csv => {
            let map = serde_json::to_value(value)?;
            let obj = map.as_object().expect("summary is an object");
            let keys: Vec<&str> = obj.keys().map(String::as_str).collect();
            let vals: Vec<String> = obj
                .values()
                .map(|v| v.as_str().map_or_else(|| v.to_string(), str::to_string))
                .collect();
            format!("{}\n{}\n", keys.join(","), vals.join(","))
        }
    };
    if to_stdout {
        std::io::stdout().write_all(text.as_bytes())?;
        Ok(())
    } else {
        emit(cli, &text)
    }
}

fn read_data(path: &Path) -> Result<Dataset> {
    Dataset::read_file(path).with_context(|| format!("reading {}", path.display()))
}

pub fn run(cli: &Cli) -> Result<()> {
    let started = Instant::now();
    match &cli.command {
        Command::Train(args) => train(cli, args),
        Command::Eval(args) => {
            let model = Model::load(&args.model).with_context(|| format!("loading {}", args.model.display()))?;
            let data = read_data(&args.data)?;
            let mask = args.mask.as_deref().map(read_mask).transpose()?;
            let report = evaluate(&model, &data, mask.as_deref())?;
            emit_summary(cli, &report, false)
        }
        Command::Simulate(args) => {
            let sim = generate_rare_feature_dataset(&SimConfig { n: args.n, seed: cli.seed, ..Default::default() })?;
            let mut buf = Vec::new();
            sim.data.write_to(&mut buf)?;
            emit(cli, std::str::from_utf8(&buf)?)?;
            if let Some(path) = &args.mask_out {
                let text: String = sim.signal_mask.iter().map(|&m| if m { "1\n" } else { "0\n" }).collect();
                std::fs::write(path, text)?;
            }
            Ok(())
        }
        Command::Table3(args) => {
            let config = Table3Config { runs: args.runs, n_test: args.n_test, ..Default::default() };
            emit_report(cli, &run_table3(&config, cli.seed)?, started)
        }
        Command::Trace(args) => {
            let config = TraceConfig { delta: args.delta, mc_samples: args.samples, ..Default::default() };
            let report = match &args.data {
                Some(path) => run_penalty_trace(&read_data(path)?, &config, cli.seed)?,
                None => run_trace_task(&config, cli.seed)?,
            };
            emit_report(cli, &report, started)
        }
        Command::Fisher(args) => {
            let config = FisherConfig {
                stream: LogisticStreamConfig { n: args.n, ..Default::default() },
                passes: args.passes,
                dropout_eta: args.eta,
                ..Default::default()
            };
            emit_report(cli, &run_fisher_compare(&config, cli.seed)?, started)
        }
        Command::Fig1a => emit_report(cli, &run_fig1a(&Fig1aConfig::default(), cli.seed)?, started),
        Command::Semisup(args) => {
            let report = match args.check {
                SemisupCheck::Accuracy => {
                    let mut config = SemisupTrialConfig::default();
                    config.trials = args.trials.unwrap_or(config.trials);
                    run_semisup_trials(&config, cli.seed)?
                }
                SemisupCheck::Variance => {
                    let mut config = VarianceConfig::default();
                    config.trials = args.trials.unwrap_or(config.trials);
                    run_variance_reduction(&config, cli.seed)?
                }
            };
            emit_report(cli, &report, started)
        }
    }
}

fn read_mask(path: &Path) -> Result<Vec<bool>> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(k, l)| match l.trim() {
            "1" => Ok(true),
            "0" => Ok(false),
            other => anyhow::bail!("{}:{}: expected 0 or 1, got {other:?}", path.display(), k + 1),
        })
        .collect()
}

#[derive(Serialize)]
struct TrainSummary {
    penalty: String,
    objective: f64,
    converged: bool,
    iterations: usize,
    gradient_max_norm: f64,
    dim: usize,
    rows: usize,
}

fn noise_for(args: &TrainArgs) -> Option<NoiseModel> {
    let built = match args.penalty {
        PenaltyArg::Dropout => NoiseModel::dropout(require(args.delta, "delta", "dropout")),
        PenaltyArg::Additive => NoiseModel::additive(require(args.sigma2, "sigma2", "additive")),
        PenaltyArg::None | PenaltyArg::L2 => return None,
    };
    Some(built.unwrap_or_else(|e| usage(e)))
}

fn train(cli: &Cli, args: &TrainArgs) -> Result<()> {
    let family: Family = args.family.parse().unwrap_or_else(|e| usage(e));
    let Some(out) = cli.out.clone() else { usage("train needs --out <model.json>") };
    let noise = noise_for(args);
    let config = BatchConfig {
        max_iterations: args.max_iterations,
        gradient_tolerance: args.tolerance,
        ..Default::default()
    };
    config.validate().unwrap_or_else(|e| usage(e));

    let raw = read_data(&args.data)?;
    let mode = match args.scale {
        ScaleArg::None => ScalingMode::None,
        ScaleArg::Unit => ScalingMode::UnitSecondMoment,
    };

    let (penalty_name, fit, scaling) = if let Some(path) = &args.unlabeled {
        let Some(noise) = noise else { usage("--unlabeled needs --penalty dropout or additive") };
        let alpha = DiscountAlpha::new(args.alpha.unwrap_or(0.4)).unwrap_or_else(|e| usage(e));
        let unl = read_data(path)?;
        if unl.dim() != raw.dim() {
            anyhow::bail!("unlabeled data has dimension {} but labeled has {}", unl.dim(), raw.dim());
        }
        let unlabeled = UnlabeledSet::from_dataset(&unl);
        let scaling = scaling_from_rows(raw.rows().iter().chain(unlabeled.rows()), raw.dim(), mode);
        let labeled = scaling.apply(&raw)?;
        let unlabeled = unlabeled.scaled(&scaling);
        let fit = fit_semisup(family, &labeled, &unlabeled, &noise, alpha, &config)?;
        ("semisup-quad".to_string(), fit, scaling)
    } else {
        if args.alpha.is_some() {
            usage("--alpha only applies with --unlabeled");
        }
        let penalty = match (args.penalty, noise) {
            (PenaltyArg::None, _) => PenaltyMode::None,
            (PenaltyArg::L2, _) => PenaltyMode::L2 { lambda: require(args.lambda, "lambda", "l2") },
            (_, Some(noise)) => match args.surrogate {
                SurrogateArg::Quadratic => PenaltyMode::QuadNoising { noise },
                SurrogateArg::Exact => PenaltyMode::ExactNoising { noise },
                SurrogateArg::Mc => PenaltyMode::McNoising { noise, samples: args.mc_samples, seed: cli.seed },
            },
            (_, None) => unreachable!("noise penalties always carry a noise model"),
        };
        penalty.validate().unwrap_or_else(|e| usage(e));
        let (data, scaling) = normalize_columns(&raw, mode)?;
        let fit = fit_glm(family, &data, &penalty, &config)?;
        (penalty.name().to_string(), fit, scaling)
    };

    let model = Model {
        family,
        penalty: penalty_name.clone(),
        noise: noise.map(NoiseSpec::from),
        dim: raw.dim(),
        beta: fit.beta_hat.clone(),
        scaling: scaling.factors,
        vocabulary_path: args.vocabulary.clone(),
    };
    model.save(&out).with_context(|| format!("writing {}", out.display()))?;
    let summary = TrainSummary {
        penalty: penalty_name,
        objective: fit.objective(),
        converged: fit.converged,
        iterations: fit.iterations,
        gradient_max_norm: fit.gradient_max_norm,
        dim: raw.dim(),
        rows: raw.len(),
    };
    emit_summary(cli, &summary, true)
}
