use std::path::PathBuf;

use clap::{Args, ValueEnum};
use fastadj::problems::{alignment_score, bce_objective, perturb};
use fastadj::{
    bce_solve, bce_synthesize_data, conv_full, BceData, BceInit, BceProblem, BceWeights, SolverConfig, StopReason,
};
use serde::Serialize;

use crate::{io, nonnegative_f64, positive_f64, positive_usize, CliError, CommonArgs};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum InitKind {
    /// Truth plus a relative Gaussian perturbation (synthetic data only).
    TruthPerturbed,
    /// Exactly the truth (synthetic data only).
    Truth,
    /// Zero-mean Gaussian entries.
    Random,
}

#[derive(Debug, Clone, Args)]
pub struct BceArgs {
    /// Generate data: channel length, source length, channels, noise sigma, data seed.
    #[arg(long, num_args = 5, value_names = ["K", "N", "CHANNELS", "NOISE", "SEED"], conflicts_with = "observed")]
    pub synthetic: Option<Vec<String>>,
    /// Observed channel as a single-column CSV (repeat once per channel).
    #[arg(long)]
    pub observed: Vec<PathBuf>,
    /// Guessed channel length (defaults to the synthetic K).
    #[arg(long, value_parser = positive_usize)]
    pub k_est: Option<usize>,
    /// Guessed source length (defaults to the synthetic N).
    #[arg(long, value_parser = positive_usize)]
    pub n_est: Option<usize>,
    #[arg(long, default_value_t = 0.1, value_parser = nonnegative_f64)]
    pub lambda_h: f64,
    #[arg(long, default_value_t = 0.01, value_parser = nonnegative_f64)]
    pub lambda_s: f64,
    #[arg(long, default_value_t = 0.01, value_parser = nonnegative_f64)]
    pub lambda_h_tv: f64,
    #[arg(long, default_value_t = 0.1, value_parser = positive_f64)]
    pub delta: f64,
    #[arg(long, default_value_t = 2000, value_parser = positive_usize)]
    pub iters: usize,
    /// Start point (default: truth-perturbed for synthetic data, random otherwise).
    #[arg(long, value_enum)]
    pub init: Option<InitKind>,
    /// Relative size of the truth perturbation.
    #[arg(long, default_value_t = 0.01, value_parser = nonnegative_f64)]
    pub perturb: f64,
    /// Standard deviation of a random start.
    #[arg(long, default_value_t = 1.0, value_parser = positive_f64)]
    pub init_scale: f64,
    /// Probability that a synthetic sample is a spike.
    #[arg(long, default_value_t = 0.2, value_parser = positive_f64)]
    pub sparsity: f64,
    /// Validate lengths and write the summary without solving.
    #[arg(long)]
    pub dry_run: bool,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Clone, Serialize)]
pub struct BceSummary {
    pub schema: u32,
    pub command: &'static str,
    pub channels: usize,
    pub observed_len: usize,
    pub k_est: usize,
    pub n_est: usize,
    pub weights: BceWeights,
    pub seed: u64,
    pub dry_run: bool,
    pub max_iters: usize,
    pub iterations_run: Option<usize>,
    pub stop_reason: Option<StopReason>,
    pub initial_step: Option<f64>,
    pub initial_objective: Option<f64>,
    pub final_objective: Option<f64>,
    pub monotone: Option<bool>,
    /// `‖ĥ_i ∗ ŝ − x_i‖ / ‖x_i‖` per channel.
    pub misfit: Option<Vec<f64>>,
    /// Misfit of the noiseless truth, when known.
    pub noise_floor: Option<Vec<f64>>,
    /// Shift-, scale- and sign-invariant correlation with the true channels.
    pub alignment_h: Option<Vec<f64>>,
    pub alignment_s: Option<f64>,
}

struct Inputs {
    observed: Vec<Vec<f64>>,
    truth: Option<BceData>,
}

fn parse_synthetic(fields: &[String], sparsity: f64) -> Result<BceData, CliError> {
    let usize_at = |i: usize, what: &str| {
        fields[i]
            .parse::<usize>()
            .map_err(|_| CliError::Usage(format!("--synthetic {what} must be an integer, got {:?}", fields[i])))
    };
    let (k, n, c) = (usize_at(0, "K")?, usize_at(1, "N")?, usize_at(2, "CHANNELS")?);
    let noise = nonnegative_f64(&fields[3]).map_err(|e| CliError::Usage(format!("--synthetic NOISE {e}")))?;
    let seed = fields[4]
        .parse::<u64>()
        .map_err(|_| CliError::Usage(format!("--synthetic SEED must be an integer, got {:?}", fields[4])))?;
    if sparsity > 1.0 {
        return Err(CliError::Usage(format!("--sparsity must be at most 1, got {sparsity}")));
    }
    Ok(bce_synthesize_data(k, n, c, sparsity, noise, seed)?)
}

fn load(args: &BceArgs) -> Result<Inputs, CliError> {
    match &args.synthetic {
        Some(fields) => {
            let data = parse_synthetic(fields, args.sparsity)?;
            Ok(Inputs {
                observed: data.x.clone(),
                truth: Some(data),
            })
        }
        None if args.observed.is_empty() => Err(CliError::Usage("give --synthetic or at least one --observed".into())),
        None => {
            let observed = args
                .observed
                .iter()
                .map(|p| io::read_csv_column(p))
                .collect::<Result<Vec<_>, _>>()?;
            if let Some(bad) = observed.iter().position(|x| x.len() != observed[0].len()) {
                return Err(CliError::Input(format!(
                    "{} has {} samples but {} has {}",
                    args.observed[bad].display(),
                    observed[bad].len(),
                    args.observed[0].display(),
                    observed[0].len()
                )));
            }
            Ok(Inputs { observed, truth: None })
        }
    }
}

fn initial_point(args: &BceArgs, truth: Option<&BceData>, k: usize, n: usize) -> Result<BceInit, CliError> {
    let kind = args
        .init
        .unwrap_or(if truth.is_some() { InitKind::TruthPerturbed } else { InitKind::Random });
    if kind == InitKind::Random {
        return Ok(BceInit::Random {
            seed: args.common.seed,
            scale: args.init_scale,
        });
    }
    let data = truth.ok_or_else(|| CliError::Usage("truth-based starts need --synthetic data".into()))?;
    if data.h[0].len() != k || data.s.len() != n {
        return Err(CliError::Usage(format!(
            "truth-based starts need K_est = {} and N_est = {}",
            data.h[0].len(),
            data.s.len()
        )));
    }
    if kind == InitKind::Truth {
        return Ok(BceInit::Given {
            h: data.h.clone(),
            s: data.s.clone(),
        });
    }
    let seed = args.common.seed;
    let h = data
        .h
        .iter()
        .enumerate()
        .map(|(i, hi)| perturb(hi, args.perturb, seed.wrapping_add(1 + i as u64)))
        .collect();
    Ok(BceInit::Given {
        h,
        s: perturb(&data.s, args.perturb, seed),
    })
}

pub fn run(args: &BceArgs) -> Result<(), CliError> {
    let inputs = load(args)?;
    let truth = inputs.truth.as_ref();
    let k_est = args.k_est.or(truth.map(|d| d.h[0].len()));
    let n_est = args.n_est.or(truth.map(|d| d.s.len()));
    let (Some(k_est), Some(n_est)) = (k_est, n_est) else {
        return Err(CliError::Usage("--k-est and --n-est are required with --observed".into()));
    };
    let observed_len = inputs.observed[0].len();
    if k_est + n_est - 1 != observed_len {
        return Err(CliError::Usage(format!(
            "K_est + N_est - 1 = {} does not match the observed length {observed_len}",
            k_est + n_est - 1
        )));
    }
    let weights = BceWeights {
        lambda_h: args.lambda_h,
        lambda_s: args.lambda_s,
        lambda_h_tv: args.lambda_h_tv,
        delta: args.delta,
    };
    let channels = inputs.observed.len();
    let problem = BceProblem::new(inputs.observed, k_est, n_est, weights)?;
    let out = args.common.prepare_out_dir()?;
    let noise_floor = truth.map(|d| d.noise_floor()).transpose()?;

    let mut summary = BceSummary {
        schema: io::SCHEMA,
        command: "bce",
        channels,
        observed_len,
        k_est,
        n_est,
        weights,
        seed: args.common.seed,
        dry_run: args.dry_run,
        max_iters: args.iters,
        iterations_run: None,
        stop_reason: None,
        initial_step: None,
        initial_objective: None,
        final_objective: None,
        monotone: None,
        misfit: None,
        noise_floor,
        alignment_h: None,
        alignment_s: None,
    };
    if args.dry_run {
        io::write_json(&out.join("summary.json"), &summary)?;
        println!("dry run: {channels} channels of length {observed_len}, K_est={k_est}, N_est={n_est}");
        return Ok(());
    }

    let init = initial_point(args, truth, k_est, n_est)?;
    let cfg = SolverConfig {
        max_iters: args.iters,
        rng_seed: args.common.seed,
        record_every: args.common.record_every,
        ..Default::default()
    };
    let report = bce_solve(&problem, init, &cfg)?;
    let trace = &report.solve.objective_trace;

    let mut csv = String::from("iteration,objective\n");
    for (k, f) in trace {
        csv.push_str(&format!("{k},{f:e}\n"));
    }
    io::write(&out.join("trace.csv"), csv)?;
    for (i, hi) in report.h.iter().enumerate() {
        io::write(&out.join(format!("h_{}.csv", i + 1)), io::format_csv_column(hi))?;
        io::write(
            &out.join(format!("hs_{}.csv", i + 1)),
            io::format_csv_column(&conv_full(hi, &report.s)?),
        )?;
    }
    io::write(&out.join("s.csv"), io::format_csv_column(&report.s))?;

    if let Some(d) = truth {
        summary.alignment_h = Some(
            report
                .h
                .iter()
                .zip(&d.h)
                .map(|(e, t)| alignment_score(e, t))
                .collect::<Result<_, _>>()?,
        );
        summary.alignment_s = Some(alignment_score(&report.s, &d.s)?);
    }
    summary.iterations_run = Some(report.solve.iterations_run);
    summary.stop_reason = Some(report.solve.stop_reason);
    summary.initial_step = Some(report.initial_step);
    summary.initial_objective = trace.first().map(|t| t.1);
    summary.final_objective = Some(bce_objective(&problem, &report.h, &report.s)?);
    summary.monotone = Some(trace.windows(2).all(|w| w[1].1 <= w[0].1));
    summary.misfit = Some(report.misfit.clone());
    io::write_json(&out.join("summary.json"), &summary)?;

    println!(
        "{} iterations ({:?}), objective {:e} -> {:e}, misfit {:?}",
        report.solve.iterations_run,
        report.solve.stop_reason,
        summary.initial_objective.unwrap_or(f64::NAN),
        summary.final_objective.unwrap_or(f64::NAN),
        report.misfit
    );
    Ok(())
}
