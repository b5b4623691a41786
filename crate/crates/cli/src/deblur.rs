use std::path::PathBuf;

use clap::Args;
use fastadj::problems::{blurred_observation, DeblurTracePoint};
use fastadj::{
    blur_op, deblur_solve, gaussian_psf, synthetic_chart, AdjointMode, DeblurProblem, Dwt, ExtensionKind, Image,
    Psf, SolverConfig, StopReason, WaveletKind,
};
use serde::Serialize;

use crate::{
    io, nonnegative_f64, parse_adjoint_mode, parse_extension, parse_wavelet, positive_f64, positive_usize, CliError,
    CommonArgs, PgmDepth,
};

#[derive(Debug, Clone, Args)]
pub struct DeblurArgs {
    /// Ground-truth image (binary PGM); it is blurred and noised before solving.
    #[arg(long, conflicts_with = "synthetic_chart")]
    pub input: Option<PathBuf>,
    /// Treat `--input` as the blurred observation: no extra blur, noise or truth metrics.
    #[arg(long, requires = "input")]
    pub input_is_observed: bool,
    /// Use the built-in bar chart of the given height and width as ground truth.
    #[arg(long, num_args = 2, value_names = ["H", "W"])]
    pub synthetic_chart: Option<Vec<usize>>,
    /// Narrowest bar of the synthetic chart, in pixels.
    #[arg(long, default_value_t = 4, value_parser = positive_usize)]
    pub chart_bar_width: usize,
    #[arg(long, default_value = "haar", value_parser = parse_wavelet)]
    pub wavelet: WaveletKind,
    #[arg(long, default_value = "sym", value_parser = parse_extension)]
    pub ext: ExtensionKind,
    #[arg(long, default_value_t = 3, value_parser = positive_usize)]
    pub stages: usize,
    #[arg(long, default_value_t = 2e-5, value_parser = positive_f64)]
    pub lambda: f64,
    #[arg(long, default_value_t = 2500, value_parser = positive_usize)]
    pub iters: usize,
    #[arg(long, default_value = "true", value_parser = parse_adjoint_mode)]
    pub adjoint_mode: AdjointMode,
    /// Side of the Gaussian PSF (odd).
    #[arg(long, default_value_t = 9, value_parser = positive_usize)]
    pub psf_size: usize,
    #[arg(long, default_value_t = 2.0, value_parser = positive_f64)]
    pub psf_sigma: f64,
    /// PSF as a single-column CSV holding a square kernel in row-major order.
    #[arg(long)]
    pub psf_csv: Option<PathBuf>,
    /// Boundary condition of the blur.
    #[arg(long, default_value = "sym", value_parser = parse_extension)]
    pub blur_ext: ExtensionKind,
    /// Standard deviation of the additive Gaussian noise.
    #[arg(long, default_value_t = 1e-3, value_parser = nonnegative_f64)]
    pub noise: f64,
    #[arg(long, value_enum, default_value = "16")]
    pub pgm_bits: PgmDepth,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Clone, Serialize)]
pub struct PsfSummary {
    pub rows: usize,
    pub cols: usize,
    pub sigma: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct DeblurSummary {
    pub schema: u32,
    pub command: &'static str,
    pub rows: usize,
    pub cols: usize,
    pub wavelet: &'static str,
    pub ext: &'static str,
    pub stages: usize,
    pub lambda: f64,
    pub adjoint_mode: AdjointMode,
    pub psf: PsfSummary,
    pub blur_ext: &'static str,
    pub noise: f64,
    pub seed: u64,
    pub max_iters: usize,
    pub iterations_run: usize,
    pub stop_reason: StopReason,
    pub lipschitz: f64,
    pub coefficients: usize,
    #[serde(rename = "final")]
    pub final_point: DeblurTracePoint,
    pub output_min: f64,
    pub output_max: f64,
}

fn load_psf(args: &DeblurArgs) -> Result<Psf, CliError> {
    match &args.psf_csv {
        Some(path) => {
            let values = io::read_csv_column(path)?;
            let side = (values.len() as f64).sqrt().round() as usize;
            if side * side != values.len() || side % 2 == 0 {
                return Err(CliError::Input(format!(
                    "{}: PSF must hold an odd square number of values, got {}",
                    path.display(),
                    values.len()
                )));
            }
            Ok(Psf::from_kernel(Image::new(side, side, values)?)?)
        }
        None => {
            if args.psf_size % 2 == 0 {
                return Err(CliError::Usage(format!("--psf-size must be odd, got {}", args.psf_size)));
            }
            Ok(gaussian_psf(args.psf_size, args.psf_sigma)?)
        }
    }
}

/// Truth (if known) and observation.
fn load_data(args: &DeblurArgs, psf: &Psf) -> Result<(Option<Image>, Image), CliError> {
    let truth = match (&args.input, &args.synthetic_chart) {
        (Some(path), None) => io::read_pgm(path)?,
        (None, Some(hw)) => synthetic_chart(hw[0], hw[1], args.chart_bar_width)?,
        _ => return Err(CliError::Usage("give exactly one of --input or --synthetic-chart".into())),
    };
    if args.input_is_observed {
        return Ok((None, truth));
    }
    let blur = blur_op(psf, truth.rows(), truth.cols(), args.blur_ext)?;
    let observed = blurred_observation(&blur, &truth, args.noise, args.common.seed)?;
    Ok((Some(truth), observed))
}

fn opt(v: Option<f64>) -> String {
    v.map_or(String::new(), |x| format!("{x:e}"))
}

pub fn trace_csv(trace: &[DeblurTracePoint]) -> String {
    let mut s = String::from("iteration,objective,rel_err,ssim,nnz_fraction\n");
    for p in trace {
        s.push_str(&format!(
            "{},{:e},{},{},{:e}\n",
            p.iteration,
            p.objective,
            opt(p.rel_err),
            opt(p.ssim),
            p.nnz_fraction
        ));
    }
    s
}

pub fn run(args: &DeblurArgs) -> Result<(), CliError> {
    let psf = load_psf(args)?;
    let (truth, observed) = load_data(args, &psf)?;
    let out = args.common.prepare_out_dir()?;
    let (rows, cols) = observed.shape();

    let dwt = Dwt::new(args.wavelet, args.stages, args.ext)?;
    let blur = blur_op(&psf, rows, cols, args.blur_ext)?;
    let problem = DeblurProblem::new(blur, dwt, observed.clone(), args.lambda, args.adjoint_mode)?;
    let cfg = SolverConfig {
        max_iters: args.iters,
        rng_seed: args.common.seed,
        record_every: args.common.record_every,
        ..Default::default()
    };
    let report = deblur_solve(&problem, &cfg, truth.as_ref())?;

    let sixteen = args.pgm_bits == PgmDepth::Sixteen;
    let (bytes, output_min, output_max) = io::encode_pgm(&report.estimate, sixteen);
    io::write(&out.join("deblurred.pgm"), bytes)?;
    io::write(&out.join("observed.pgm"), io::encode_pgm(&observed, sixteen).0)?;
    io::write(&out.join("trace.csv"), trace_csv(&report.trace))?;

    let (kr, kc) = psf.kernel().shape();
    let summary = DeblurSummary {
        schema: io::SCHEMA,
        command: "deblur",
        rows,
        cols,
        wavelet: args.wavelet.name(),
        ext: args.ext.name(),
        stages: args.stages,
        lambda: args.lambda,
        adjoint_mode: args.adjoint_mode,
        psf: PsfSummary {
            rows: kr,
            cols: kc,
            sigma: psf.sigma(),
        },
        blur_ext: args.blur_ext.name(),
        noise: if args.input_is_observed { 0.0 } else { args.noise },
        seed: args.common.seed,
        max_iters: args.iters,
        iterations_run: report.solve.iterations_run,
        stop_reason: report.solve.stop_reason,
        lipschitz: report.lipschitz,
        coefficients: problem.coeff_len(),
        final_point: report.final_point().clone(),
        output_min,
        output_max,
    };
    io::write_json(&out.join("summary.json"), &summary)?;

    let f = &summary.final_point;
    println!(
        "{} iterations, objective {:e}, rel_err {}, ssim {}, nnz {:.4}",
        summary.iterations_run,
        f.objective,
        opt(f.rel_err),
        opt(f.ssim),
        f.nnz_fraction
    );
    Ok(())
}
