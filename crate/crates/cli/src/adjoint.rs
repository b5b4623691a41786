use clap::{Args, ValueEnum};
use fastadj::conv::{conv_op_fixed_h, conv_op_fixed_s};
use fastadj::extend::{extend_op, extend_pinv_op};
use fastadj::regularizers::diff_op;
use fastadj::{
    blur_op_with_path, dot_test, gaussian_psf, randn, to_dense, AdjointMode, ConvPath, Dwt, ExtensionKind,
    ExtensionSpec, LinearOperator, WaveletKind,
};
use serde::Serialize;

use crate::{io, parse_adjoint_mode, parse_extension, parse_wavelet, positive_f64, positive_usize, CliError, CommonArgs};

/// Dense comparisons are skipped above this many matrix entries.
const DENSE_LIMIT: usize = 1 << 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OpFamily {
    All,
    Extension,
    Wavelet,
    Wavelet2d,
    Conv,
    Blur,
    Diff,
}

#[derive(Debug, Clone, Args)]
pub struct AdjointCheckArgs {
    #[arg(long, value_enum, default_value = "all")]
    pub op: OpFamily,
    /// Restrict to one wavelet (default: all).
    #[arg(long, value_parser = parse_wavelet)]
    pub wavelet: Option<WaveletKind>,
    /// Restrict to one extension (default: all).
    #[arg(long, value_parser = parse_extension)]
    pub ext: Option<ExtensionKind>,
    /// Restrict to one number of stages (default: 1, 2 and 3).
    #[arg(long, value_parser = positive_usize)]
    pub stages: Option<usize>,
    /// Signal length; images are n x n.
    #[arg(long, default_value_t = 64, value_parser = positive_usize)]
    pub n: usize,
    /// What the wavelet operators use as their adjoint.
    #[arg(long, default_value = "true", value_parser = parse_adjoint_mode)]
    pub adjoint_mode: AdjointMode,
    #[arg(long, default_value_t = 100, value_parser = positive_usize)]
    pub trials: usize,
    #[arg(long, default_value_t = 1e-9, value_parser = positive_f64)]
    pub threshold: f64,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub operator: String,
    pub in_dim: usize,
    pub out_dim: usize,
    pub dot_test: f64,
    /// Max entrywise gap between the adjoint's matrix and the forward transpose.
    pub dense_gap: Option<f64>,
    pub discrepancy: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct AdjointReport {
    pub schema: u32,
    pub command: &'static str,
    pub adjoint_mode: AdjointMode,
    pub threshold: f64,
    pub trials: usize,
    pub seed: u64,
    pub checks: Vec<Check>,
    pub max_discrepancy: f64,
    pub passed: bool,
}

pub fn check(name: String, op: &LinearOperator, trials: usize, seed: u64, threshold: f64) -> Check {
    let dot = dot_test(op, trials, seed);
    let dense_gap = (op.in_dim() * op.out_dim() <= DENSE_LIMIT).then(|| {
        let fwd = to_dense(op);
        let adj = to_dense(&op.adjoint_view());
        adj.max_abs_diff(&fwd.transpose())
    });
    let discrepancy = dense_gap.map_or(dot, |g| g.max(dot));
    Check {
        operator: name,
        in_dim: op.in_dim(),
        out_dim: op.out_dim(),
        dot_test: dot,
        dense_gap,
        discrepancy,
        pass: discrepancy <= threshold,
    }
}

fn operators(args: &AdjointCheckArgs) -> Result<Vec<(String, LinearOperator)>, CliError> {
    let n = args.n;
    let wavelets = args.wavelet.map_or(WaveletKind::ALL.to_vec(), |w| vec![w]);
    let exts = args.ext.map_or(ExtensionKind::ALL.to_vec(), |e| vec![e]);
    let stages: Vec<usize> = args.stages.map_or(vec![1, 2, 3], |j| vec![j]);
    let family = |f: OpFamily| args.op == OpFamily::All || args.op == f;
    let mode = args.adjoint_mode;
    let mut ops = Vec::new();

    if family(OpFamily::Extension) {
        for &e in &exts {
            for pad in [1, 4, 8] {
                let spec = ExtensionSpec::new(e, pad);
                if spec.validate(n).is_err() {
                    continue;
                }
                ops.push((format!("E {} pad={pad} n={n}", e.name()), extend_op(spec, n)?));
                ops.push((format!("E+ {} pad={pad} n={n}", e.name()), extend_pinv_op(spec, n)?));
            }
        }
    }
    for (fam, two_d) in [(OpFamily::Wavelet, false), (OpFamily::Wavelet2d, true)] {
        if !family(fam) {
            continue;
        }
        for &w in &wavelets {
            for &e in &exts {
                for &j in &stages {
                    let dwt = Dwt::new(w, j, e)?;
                    let label = format!("{} {} J={j}", w.name(), e.name());
                    if two_d {
                        if dwt.level_shapes(n, n).is_err() {
                            continue;
                        }
                        ops.push((format!("W2 {label} {n}x{n}"), dwt.synthesis2d_op(n, n, mode)?));
                        ops.push((format!("W2+ {label} {n}x{n}"), dwt.analysis2d_op(n, n)?));
                    } else {
                        if dwt.level_lengths(n).is_err() {
                            continue;
                        }
                        ops.push((format!("W {label} n={n}"), dwt.synthesis_op(n, mode)?));
                        ops.push((format!("W+ {label} n={n}"), dwt.analysis_op(n)?));
                    }
                }
            }
        }
    }
    if family(OpFamily::Conv) {
        let k = (n / 4).max(1);
        ops.push((format!("conv fixed s K={k} N={n}"), conv_op_fixed_s(&randn(n, args.common.seed), k)?));
        ops.push((format!("conv fixed h K={k} N={n}"), conv_op_fixed_h(&randn(k, args.common.seed), n)?));
    }
    if family(OpFamily::Blur) {
        let psf = gaussian_psf(5, 1.2)?;
        for &e in &exts {
            for (path, label) in [(ConvPath::Direct, "direct"), (ConvPath::Fft, "fft")] {
                ops.push((format!("blur 5x5 {} {label} {n}x{n}", e.name()), blur_op_with_path(&psf, n, n, e, path)?));
            }
        }
    }
    if family(OpFamily::Diff) && n >= 2 {
        ops.push((format!("D n={n}"), diff_op(n)?));
    }
    if ops.is_empty() {
        return Err(CliError::Usage(format!(
            "no operator in the requested configuration is valid for n={n}"
        )));
    }
    Ok(ops)
}

pub fn run_checks(args: &AdjointCheckArgs) -> Result<AdjointReport, CliError> {
    let checks: Vec<Check> = operators(args)?
        .into_iter()
        .map(|(name, op)| check(name, &op, args.trials, args.common.seed, args.threshold))
        .collect();
    let max_discrepancy = checks.iter().fold(0.0f64, |m, c| m.max(c.discrepancy));
    let passed = checks.iter().all(|c| c.pass);
    Ok(AdjointReport {
        schema: io::SCHEMA,
        command: "adjoint-check",
        adjoint_mode: args.adjoint_mode,
        threshold: args.threshold,
        trials: args.trials,
        seed: args.common.seed,
        checks,
        max_discrepancy,
        passed,
    })
}

pub fn run(args: &AdjointCheckArgs) -> Result<(), CliError> {
    let out = args.common.prepare_out_dir()?;
    let report = run_checks(args)?;
    io::write_json(&out.join("adjoint_check.json"), &report)?;
    let failed: Vec<&Check> = report.checks.iter().filter(|c| !c.pass).collect();
    println!(
        "{} operators checked, max discrepancy {:e}, {} above {:e}",
        report.checks.len(),
        report.max_discrepancy,
        failed.len(),
        report.threshold
    );
    for c in &failed {
        eprintln!("FAIL {}: {:e}", c.operator, c.discrepancy);
    }
    if report.passed {
        Ok(())
    } else {
        Err(CliError::Verification(format!(
            "{} of {} adjoint checks exceed {:e} (max {:e})",
            failed.len(),
            report.checks.len(),
            report.threshold,
            report.max_discrepancy
        )))
    }
}
