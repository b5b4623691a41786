//! The two end-to-end objectives.
//!
//! * Synthesis-form deblurring, `min_x ½‖RWx − b‖² + λ‖x‖₁`, with gradient
//!   `W*R*(RWx − b)`. In [`AdjointMode::PinvApprox`] the analysis transform
//!   stands in for `W*`.
//! * Multi-channel blind channel estimation,
//!   `Σ_i ‖h_i ∗ s − x_i‖² + λ_tv L_δ(Dh_i)/δ + λ_h‖h_i‖₁ + λ_s‖s‖₁`.
//!   The misfit carries no ½, so its gradients carry a factor 2.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::conv::{conv_full, conv_op_fixed_h, conv_op_fixed_s, xcorr_valid};
use crate::dwt::{AdjointMode, Dwt, Pyramid2d};
use crate::error::{check_len, Error, Result};
use crate::image::Image;
use crate::linop::{compose, dot, norm2, randn, LinearOperator};
use crate::metrics::{nnz_fraction, rel_err, ssim, SsimParams};
use crate::regularizers::{soft_threshold, tv_soft_grad, tv_soft_value, HuberSpec};
use crate::solvers::{fista_observed, opnorm_estimate, prox_grad_multiblock, Composite, MultiBlock, SolveReport, SolverConfig};

fn l1(v: &[f64]) -> f64 {
    v.iter().map(|x| x.abs()).sum()
}

fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

/// Power-iteration steps used for Lipschitz estimates.
const POWER_ITERS: usize = 60;
/// Power iteration under-estimates; the step uses `L = margin · σ̂²`.
const LIPSCHITZ_MARGIN: f64 = 1.01;

pub struct DeblurProblem {
    blur: LinearOperator,
    dwt: Dwt,
    rows: usize,
    cols: usize,
    observed: Image,
    lambda: f64,
    adjoint_mode: AdjointMode,
    model: LinearOperator,
    shapes: Vec<(usize, usize)>,
}

impl DeblurProblem {
    pub fn new(
        blur: LinearOperator,
        dwt: Dwt,
        observed: Image,
        lambda: f64,
        adjoint_mode: AdjointMode,
    ) -> Result<Self> {
        let (rows, cols) = observed.shape();
        check_len("blur input", rows * cols, blur.in_dim())?;
        check_len("blur output", rows * cols, blur.out_dim())?;
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::InvalidParameter(format!("lambda must be positive, got {lambda}")));
        }
        let synth = dwt.synthesis2d_op(rows, cols, adjoint_mode)?;
        let model = compose(&blur, &synth)?;
        let shapes = dwt.level_shapes(rows, cols)?;
        Ok(Self {
            blur,
            dwt,
            rows,
            cols,
            observed,
            lambda,
            adjoint_mode,
            model,
            shapes,
        })
    }

    pub fn dwt(&self) -> &Dwt {
        &self.dwt
    }

    pub fn blur(&self) -> &LinearOperator {
        &self.blur
    }

    pub fn observed(&self) -> &Image {
        &self.observed
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn adjoint_mode(&self) -> AdjointMode {
        self.adjoint_mode
    }

    pub fn level_shapes(&self) -> &[(usize, usize)] {
        &self.shapes
    }

    pub fn coeff_len(&self) -> usize {
        self.model.in_dim()
    }

    /// `RW`, whose adjoint slot holds whatever the adjoint mode prescribes.
    pub fn model(&self) -> &LinearOperator {
        &self.model
    }

    /// `RW` with its true adjoint, whatever the mode.
    pub fn true_model(&self) -> Result<LinearOperator> {
        compose(&self.blur, &self.dwt.synthesis2d_op(self.rows, self.cols, AdjointMode::TrueAdjoint)?)
    }

    /// `‖RW‖²` (with a small safety margin), the step-size constant.
    pub fn lipschitz(&self, seed: u64) -> Result<f64> {
        let s = opnorm_estimate(&self.true_model()?, POWER_ITERS, seed)?;
        Ok(LIPSCHITZ_MARGIN * s * s)
    }

    pub fn image_of(&self, x: &[f64]) -> Result<Image> {
        let p = Pyramid2d::from_flat(x, &self.shapes)?;
        self.dwt.synthesize2d(&p)
    }

    /// `‖(RW)^adj b‖_∞`: the smallest λ for which `x = 0` is optimal (true mode).
    pub fn lambda_max(&self) -> Result<f64> {
        let g = self.model.apply_adjoint(self.observed.as_slice())?;
        Ok(g.iter().fold(0.0f64, |m, v| m.max(v.abs())))
    }

    fn residual(&self, x: &[f64]) -> Vec<f64> {
        sub(&self.model.apply(x).expect("length checked"), self.observed.as_slice())
    }
}

impl Composite for DeblurProblem {
    fn smooth(&self, x: &[f64]) -> f64 {
        let r = self.residual(x);
        0.5 * dot(&r, &r)
    }

    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        self.model.apply_adjoint(&self.residual(x)).expect("length checked")
    }

    fn nonsmooth(&self, x: &[f64]) -> f64 {
        self.lambda * l1(x)
    }

    fn prox(&self, v: &[f64], step: f64) -> Vec<f64> {
        soft_threshold(v, self.lambda * step).expect("nonnegative threshold")
    }
}

/// `W*R*(RWx − b)` (or `W†R*(RWx − b)` in pinv-approx mode).
pub fn deblur_grad(p: &DeblurProblem, x: &Pyramid2d) -> Result<Pyramid2d> {
    let flat = x.to_flat();
    check_len("deblur coefficients", p.coeff_len(), flat.len())?;
    if x.level_shapes != p.shapes {
        return Err(Error::InvalidParameter("pyramid does not match the problem's transform".into()));
    }
    Pyramid2d::from_flat(&p.gradient(&flat), &p.shapes)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DeblurTracePoint {
    pub iteration: usize,
    pub objective: f64,
    pub rel_err: Option<f64>,
    pub ssim: Option<f64>,
    pub nnz_fraction: f64,
}

#[derive(Debug, Clone)]
pub struct DeblurReport {
    pub solve: SolveReport,
    pub trace: Vec<DeblurTracePoint>,
    pub estimate: Image,
    pub coeffs: Pyramid2d,
    pub lipschitz: f64,
}

impl DeblurReport {
    pub fn final_point(&self) -> &DeblurTracePoint {
        self.trace.last().expect("trace always holds the starting point")
    }
}

/// FISTA from `x = 0` with step `1/‖RW‖²` (or `cfg.step`). When `truth` is
/// given, every recorded iterate is scored by relative error and SSIM.
pub fn deblur_solve(p: &DeblurProblem, cfg: &SolverConfig, truth: Option<&Image>) -> Result<DeblurReport> {
    if let Some(t) = truth {
        t.require_shape(p.rows, p.cols)?;
    }
    let lipschitz = match cfg.step {
        Some(s) => 1.0 / s,
        None => p.lipschitz(cfg.rng_seed)?,
    };
    let params = SsimParams::default();
    let can_ssim = p.rows.min(p.cols) >= params.window;
    let mut trace = Vec::new();
    let mut failure = None;
    let mut observer = |iteration: usize, x: &[f64], objective: f64| {
        let point = (|| -> Result<DeblurTracePoint> {
            let (rel, ss) = match truth {
                Some(t) => {
                    let img = p.image_of(x)?;
                    let ss = if can_ssim { Some(ssim(&img, t, &params)?) } else { None };
                    (Some(rel_err(img.as_slice(), t.as_slice())?), ss)
                }
                None => (None, None),
            };
            Ok(DeblurTracePoint {
                iteration,
                objective,
                rel_err: rel,
                ssim: ss,
                nnz_fraction: nnz_fraction(x)?,
            })
        })();
        match point {
            Ok(pt) => trace.push(pt),
            Err(e) => {
                failure.get_or_insert(e);
            }
        }
    };
    let x0 = vec![0.0; p.coeff_len()];
    let solve = fista_observed(p, &x0, lipschitz, cfg, &mut observer)?;
    if let Some(e) = failure {
        return Err(e);
    }
    let coeffs = Pyramid2d::from_flat(&solve.final_point, &p.shapes)?;
    let estimate = p.dwt.synthesize2d(&coeffs)?;
    Ok(DeblurReport {
        solve,
        trace,
        estimate,
        coeffs,
        lipschitz,
    })
}

/// Resolution-chart stand-in on a 0.1 background with 0.9 bars.
///
/// The top half holds vertical bars and the bottom half horizontal bars, each
/// in three groups whose bar widths double from `min_width` (period two bar
/// widths). Deterministic; no randomness involved.
pub fn synthetic_chart(rows: usize, cols: usize, min_width: usize) -> Result<Image> {
    if rows < 8 || cols < 8 || min_width == 0 {
        return Err(Error::InvalidParameter(format!(
            "chart needs at least 8x8 pixels and a positive bar width, got {rows}x{cols}, width {min_width}"
        )));
    }
    let (lo, hi) = (0.1, 0.9);
    let margin = |n: usize| (n / 16).max(1);
    let (mr, mc) = (margin(rows), margin(cols));
    let half = rows / 2;

    // group g spans [start_g, end_g) along the axis the bars repeat over
    let groups = |n: usize, m: usize| -> Vec<(usize, usize, usize)> {
        let inner = n.saturating_sub(2 * m);
        (0..3)
            .map(|g| {
                let start = m + g * inner / 3;
                let end = m + (g + 1) * inner / 3;
                (start + m / 2, end.saturating_sub(m / 2), min_width << g)
            })
            .collect()
    };
    let bar = |pos: usize, (start, end, w): (usize, usize, usize)| -> bool {
        (start..end).contains(&pos) && ((pos - start) / w) % 2 == 0
    };
    let col_groups = groups(cols, mc);
    let row_groups = groups(rows - half, mr);

    Ok(Image::from_fn(rows, cols, |r, c| {
        let on = if r < half {
            (mr..half - mr).contains(&r) && col_groups.iter().any(|g| bar(c, *g))
        } else {
            let rr = r - half;
            (mc..cols - mc).contains(&c) && row_groups.iter().any(|g| bar(rr, *g))
        };
        if on {
            hi
        } else {
            lo
        }
    }))
}

/// `R·truth + σ·n` with seeded standard-normal `n`.
pub fn blurred_observation(blur: &LinearOperator, truth: &Image, noise_sigma: f64, seed: u64) -> Result<Image> {
    let clean = blur.apply(truth.as_slice())?;
    let noise = randn(clean.len(), seed);
    let data = clean.iter().zip(&noise).map(|(c, n)| c + noise_sigma * n).collect();
    Image::new(truth.rows(), truth.cols(), data)
}

/// Penalty weights of the channel-estimation objective.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BceWeights {
    pub lambda_h: f64,
    pub lambda_s: f64,
    pub lambda_h_tv: f64,
    pub delta: f64,
}

impl Default for BceWeights {
    fn default() -> Self {
        Self {
            lambda_h: 0.1,
            lambda_s: 0.01,
            lambda_h_tv: 0.01,
            delta: 0.1,
        }
    }
}

#[derive(Debug, Clone)]
pub struct BceProblem {
    observed: Vec<Vec<f64>>,
    k_est: usize,
    n_est: usize,
    weights: BceWeights,
    huber: HuberSpec,
}

impl BceProblem {
    pub fn new(observed: Vec<Vec<f64>>, k_est: usize, n_est: usize, weights: BceWeights) -> Result<Self> {
        if observed.is_empty() {
            return Err(Error::Empty("observed channels"));
        }
        if k_est < 2 || n_est < 1 {
            return Err(Error::InvalidParameter(format!(
                "need K_est >= 2 and N_est >= 1, got {k_est} and {n_est}"
            )));
        }
        for x in &observed {
            check_len("observed channel (K_est + N_est - 1)", k_est + n_est - 1, x.len())?;
        }
        for (name, v) in [
            ("lambda_h", weights.lambda_h),
            ("lambda_s", weights.lambda_s),
            ("lambda_h_tv", weights.lambda_h_tv),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter(format!("{name} must be nonnegative, got {v}")));
            }
        }
        let huber = HuberSpec::new(weights.delta)?;
        Ok(Self {
            observed,
            k_est,
            n_est,
            weights,
            huber,
        })
    }

    pub fn channels(&self) -> usize {
        self.observed.len()
    }

    pub fn k_est(&self) -> usize {
        self.k_est
    }

    pub fn n_est(&self) -> usize {
        self.n_est
    }

    pub fn weights(&self) -> &BceWeights {
        &self.weights
    }

    pub fn observed(&self) -> &[Vec<f64>] {
        &self.observed
    }

    fn check(&self, h: &[Vec<f64>], s: &[f64]) -> Result<()> {
        check_len("number of channel estimates", self.channels(), h.len())?;
        for hi in h {
            check_len("channel estimate", self.k_est, hi.len())?;
        }
        check_len("source estimate", self.n_est, s.len())
    }

    fn residuals(&self, h: &[Vec<f64>], s: &[f64]) -> Vec<Vec<f64>> {
        h.iter()
            .zip(&self.observed)
            .map(|(hi, xi)| sub(&conv_full(hi, s).expect("nonempty"), xi))
            .collect()
    }

    /// Lipschitz-style scale of the smooth part at `(h, s)`.
    fn curvature(&self, h: &[Vec<f64>], s: &[f64], seed: u64) -> Result<f64> {
        let ss = opnorm_estimate(&conv_op_fixed_s(s, self.k_est)?, 30, seed)?;
        let mut total = ss * ss;
        for hi in h {
            let hh = opnorm_estimate(&conv_op_fixed_h(hi, self.n_est)?, 30, seed)?;
            total += hh * hh;
        }
        Ok(2.0 * total + 4.0 * self.weights.lambda_h_tv / self.weights.delta)
    }
}

/// Smooth part: `Σ_i ‖h_i ∗ s − x_i‖² + λ_tv L_δ(Dh_i)/δ`.
pub fn bce_smooth(p: &BceProblem, h: &[Vec<f64>], s: &[f64]) -> Result<f64> {
    p.check(h, s)?;
    let mut total = 0.0;
    for (hi, r) in h.iter().zip(p.residuals(h, s)) {
        total += dot(&r, &r) + p.weights.lambda_h_tv * tv_soft_value(hi, &p.huber)?;
    }
    Ok(total)
}

/// Full objective including the ℓ1 terms.
pub fn bce_objective(p: &BceProblem, h: &[Vec<f64>], s: &[f64]) -> Result<f64> {
    let smooth = bce_smooth(p, h, s)?;
    let pen: f64 = h.iter().map(|hi| l1(hi)).sum::<f64>() * p.weights.lambda_h + p.weights.lambda_s * l1(s);
    Ok(smooth + pen)
}

/// Gradient of [`bce_smooth`]: `∇h_i = 2 Sᵀr_i + λ_tv ∇TV(h_i)`, `∇s = 2 Σ H_iᵀ r_i`.
pub fn bce_grad(p: &BceProblem, h: &[Vec<f64>], s: &[f64]) -> Result<(Vec<Vec<f64>>, Vec<f64>)> {
    p.check(h, s)?;
    let mut gs = vec![0.0; p.n_est];
    let mut gh = Vec::with_capacity(h.len());
    for (hi, r) in h.iter().zip(p.residuals(h, s)) {
        let tv = tv_soft_grad(hi, &p.huber)?;
        let g: Vec<f64> = xcorr_valid(&r, s)?
            .iter()
            .zip(&tv)
            .map(|(a, b)| 2.0 * a + p.weights.lambda_h_tv * b)
            .collect();
        gh.push(g);
        for (acc, v) in gs.iter_mut().zip(xcorr_valid(&r, hi)?) {
            *acc += 2.0 * v;
        }
    }
    Ok((gh, gs))
}

// Blocks are h_1, …, h_C, s.
impl MultiBlock for BceProblem {
    fn smooth(&self, blocks: &[Vec<f64>]) -> f64 {
        let (s, h) = blocks.split_last().expect("at least one block");
        bce_smooth(self, h, s).expect("block sizes fixed by the solver")
    }

    fn gradient(&self, blocks: &[Vec<f64>]) -> Vec<Vec<f64>> {
        let (s, h) = blocks.split_last().expect("at least one block");
        let (mut gh, gs) = bce_grad(self, h, s).expect("block sizes fixed by the solver");
        gh.push(gs);
        gh
    }

    fn nonsmooth(&self, blocks: &[Vec<f64>]) -> f64 {
        let (s, h) = blocks.split_last().expect("at least one block");
        self.weights.lambda_h * h.iter().map(|hi| l1(hi)).sum::<f64>() + self.weights.lambda_s * l1(s)
    }

    fn prox(&self, block: usize, v: &[f64], step: f64) -> Vec<f64> {
        let lambda = if block == self.channels() {
            self.weights.lambda_s
        } else {
            self.weights.lambda_h
        };
        soft_threshold(v, lambda * step).expect("nonnegative threshold")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum BceInit {
    Given { h: Vec<Vec<f64>>, s: Vec<f64> },
    /// Zero-mean Gaussian entries with the given standard deviation.
    Random { seed: u64, scale: f64 },
}

#[derive(Debug, Clone)]
pub struct BceReport {
    pub solve: SolveReport,
    pub h: Vec<Vec<f64>>,
    pub s: Vec<f64>,
    /// `‖ĥ_i ∗ ŝ − x_i‖ / ‖x_i‖` per channel.
    pub misfit: Vec<f64>,
    pub initial_step: f64,
}

/// Monotone proximal gradient over `(h_1, …, h_C, s)`.
///
/// Without `cfg.step` the first trial step is `1 / curvature` at the
/// starting point; backtracking only ever shrinks it.
pub fn bce_solve(p: &BceProblem, init: BceInit, cfg: &SolverConfig) -> Result<BceReport> {
    let (h0, s0) = match init {
        BceInit::Given { h, s } => (h, s),
        BceInit::Random { seed, scale } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut draw = |n: usize| -> Vec<f64> {
                (0..n)
                    .map(|_| scale * { let g: f64 = StandardNormal.sample(&mut rng); g })
                    .collect()
            };
            let h = (0..p.channels()).map(|_| draw(p.k_est)).collect();
            (h, draw(p.n_est))
        }
    };
    p.check(&h0, &s0)?;
    let step = match cfg.step {
        Some(s) => s,
        None => {
            let c = p.curvature(&h0, &s0, cfg.rng_seed)?;
            if c > 0.0 {
                1.0 / c
            } else {
                1.0
            }
        }
    };
    let mut blocks = h0;
    blocks.push(s0);
    let run = SolverConfig {
        step: Some(step),
        ..cfg.clone()
    };
    let solve = prox_grad_multiblock(p, blocks, &run)?;
    let mut est = solve.blocks();
    let s = est.pop().expect("source block");
    let misfit = est
        .iter()
        .zip(&p.observed)
        .map(|(hi, xi)| channel_misfit(hi, &s, xi))
        .collect::<Result<Vec<_>>>()?;
    Ok(BceReport {
        solve,
        h: est,
        s,
        misfit,
        initial_step: step,
    })
}

/// `‖h ∗ s − x‖ / ‖x‖`.
pub fn channel_misfit(h: &[f64], s: &[f64], x: &[f64]) -> Result<f64> {
    let model = conv_full(h, s)?;
    rel_err(&model, x)
}

/// Synthetic channels and source with their noisy outputs.
#[derive(Debug, Clone, PartialEq)]
pub struct BceData {
    pub h: Vec<Vec<f64>>,
    pub s: Vec<f64>,
    pub x: Vec<Vec<f64>>,
}

impl BceData {
    /// `‖x_i − h_i ∗ s‖ / ‖x_i‖` per channel: the misfit of the truth itself.
    pub fn noise_floor(&self) -> Result<Vec<f64>> {
        self.h
            .iter()
            .zip(&self.x)
            .map(|(hi, xi)| {
                let clean = conv_full(hi, &self.s)?;
                Ok(norm2(&sub(xi, &clean)) / norm2(xi))
            })
            .collect()
    }
}

/// Sparse spike trains (Bernoulli support, Gaussian amplitudes) for each
/// `h_i` (length `k`) and `s` (length `n`), and `x_i = h_i ∗ s + σ·noise`.
/// Every spike train has at least one nonzero.
pub fn bce_synthesize_data(
    k: usize,
    n: usize,
    channels: usize,
    sparsity: f64,
    noise_sigma: f64,
    seed: u64,
) -> Result<BceData> {
    if k < 2 || n < 2 || channels == 0 {
        return Err(Error::InvalidParameter(format!(
            "need K, N >= 2 and at least one channel, got K={k}, N={n}, channels={channels}"
        )));
    }
    if !(sparsity > 0.0 && sparsity <= 1.0) {
        return Err(Error::InvalidParameter(format!("sparsity must be in (0, 1], got {sparsity}")));
    }
    if !(noise_sigma >= 0.0 && noise_sigma.is_finite()) {
        return Err(Error::InvalidParameter(format!("noise sigma must be nonnegative, got {noise_sigma}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut spikes = |len: usize| -> Vec<f64> {
        let mut v: Vec<f64> = (0..len)
            .map(|_| {
                let amp: f64 = StandardNormal.sample(&mut rng);
                if rng.random::<f64>() < sparsity {
                    amp
                } else {
                    0.0
                }
            })
            .collect();
        if v.iter().all(|x| *x == 0.0) {
            let i = rng.random_range(0..len);
            v[i] = StandardNormal.sample(&mut rng);
        }
        v
    };
    let h: Vec<Vec<f64>> = (0..channels).map(|_| spikes(k)).collect();
    let s = spikes(n);
    let mut x = Vec::with_capacity(channels);
    for hi in &h {
        let clean = conv_full(hi, &s)?;
        let noisy = clean
            .into_iter()
            .map(|c| c + noise_sigma * { let g: f64 = StandardNormal.sample(&mut rng); g })
            .collect();
        x.push(noisy);
    }
    Ok(BceData { h, s, x })
}

/// `v + rel · (‖v‖/√n) · g` with seeded standard-normal `g`.
pub fn perturb(v: &[f64], rel: f64, seed: u64) -> Vec<f64> {
    let scale = rel * norm2(v) / (v.len().max(1) as f64).sqrt();
    v.iter().zip(randn(v.len(), seed)).map(|(a, g)| a + scale * g).collect()
}

/// Best normalized cross-correlation magnitude over all shifts; invariant to
/// scale, sign and delay, so it ignores the inherent ambiguities.
pub fn alignment_score(estimate: &[f64], truth: &[f64]) -> Result<f64> {
    let (ne, nt) = (norm2(estimate), norm2(truth));
    if ne == 0.0 || nt == 0.0 {
        return Ok(0.0);
    }
    let rev: Vec<f64> = truth.iter().rev().copied().collect();
    let xc = conv_full(estimate, &rev)?;
    Ok(xc.iter().fold(0.0f64, |m, v| m.max(v.abs())) / (ne * nt))
}
