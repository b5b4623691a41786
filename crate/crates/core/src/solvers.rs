//! First-order solvers: power iteration, FISTA/ISTA for convex composite
//! objectives, and a monotone backtracking proximal gradient method for
//! nonconvex multi-block objectives.

use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linop::{dot, norm2, randn, LinearOperator};

/// `f(x) + g(x)` with smooth `f` and prox-friendly `g`.
pub trait Composite {
    fn smooth(&self, x: &[f64]) -> f64;
    fn gradient(&self, x: &[f64]) -> Vec<f64>;
    fn nonsmooth(&self, x: &[f64]) -> f64;
    /// `prox_{step·g}(v)`.
    fn prox(&self, v: &[f64], step: f64) -> Vec<f64>;

    fn objective(&self, x: &[f64]) -> f64 {
        self.smooth(x) + self.nonsmooth(x)
    }
}

/// `f(x_1, …, x_B) + Σ g_b(x_b)` with a separable nonsmooth part.
pub trait MultiBlock {
    fn smooth(&self, blocks: &[Vec<f64>]) -> f64;
    fn gradient(&self, blocks: &[Vec<f64>]) -> Vec<Vec<f64>>;
    fn nonsmooth(&self, blocks: &[Vec<f64>]) -> f64;
    fn prox(&self, block: usize, v: &[f64], step: f64) -> Vec<f64>;

    fn objective(&self, blocks: &[Vec<f64>]) -> f64 {
        self.smooth(blocks) + self.nonsmooth(blocks)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Backtracking {
    /// Step multiplier on rejection, in (0, 1).
    pub shrink: f64,
    /// Sufficient-decrease constant `c`.
    pub sufficient_decrease: f64,
    pub max_shrinks: usize,
}

impl Default for Backtracking {
    fn default() -> Self {
        Self {
            shrink: 0.5,
            sufficient_decrease: 1e-4,
            max_shrinks: 60,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub max_iters: usize,
    /// Fixed step; `None` lets the solver derive one.
    pub step: Option<f64>,
    pub backtracking: Option<Backtracking>,
    /// Relative objective change over a 10-iteration window; 0 disables.
    pub tol: f64,
    pub rng_seed: u64,
    pub record_every: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            max_iters: 500,
            step: None,
            backtracking: None,
            tol: 0.0,
            rng_seed: 0,
            record_every: 1,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_iters == 0 {
            return Err(Error::InvalidParameter("max_iters must be at least 1".into()));
        }
        if self.record_every == 0 {
            return Err(Error::InvalidParameter("record_every must be at least 1".into()));
        }
        if let Some(s) = self.step {
            if !(s > 0.0 && s.is_finite()) {
                return Err(Error::InvalidParameter(format!("step must be positive, got {s}")));
            }
        }
        if let Some(b) = &self.backtracking {
            if !(b.shrink > 0.0 && b.shrink < 1.0) {
                return Err(Error::InvalidParameter(format!("shrink factor must be in (0,1), got {}", b.shrink)));
            }
            if !(b.sufficient_decrease > 0.0) {
                return Err(Error::InvalidParameter("sufficient-decrease constant must be positive".into()));
            }
        }
        if !(self.tol >= 0.0) {
            return Err(Error::InvalidParameter(format!("tol must be nonnegative, got {}", self.tol)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    MaxIters,
    Converged,
    /// The step left the iterate unchanged.
    Stationary,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    /// `(iteration, objective)`; iteration 0 is the starting point.
    pub objective_trace: Vec<(usize, f64)>,
    /// All blocks concatenated.
    pub final_point: Vec<f64>,
    pub block_sizes: Vec<usize>,
    pub iterations_run: usize,
    pub wall_time: Duration,
    pub stop_reason: StopReason,
    /// Step in use at the end (after any backtracking).
    pub final_step: f64,
}

impl SolveReport {
    pub fn blocks(&self) -> Vec<Vec<f64>> {
        let mut rest = self.final_point.as_slice();
        self.block_sizes
            .iter()
            .map(|&n| {
                let (b, r) = rest.split_at(n);
                rest = r;
                b.to_vec()
            })
            .collect()
    }

    pub fn final_objective(&self) -> f64 {
        self.objective_trace.last().map_or(f64::NAN, |t| t.1)
    }
}

/// Largest singular value of `op` by power iteration on `op* op`.
///
/// Returns the best Rayleigh estimate seen, so it never decreases with
/// `iters` and never exceeds the true value (up to roundoff).
pub fn opnorm_estimate(op: &LinearOperator, iters: usize, seed: u64) -> Result<f64> {
    if iters == 0 {
        return Err(Error::InvalidParameter("power iteration needs at least one step".into()));
    }
    if op.in_dim() == 0 {
        return Ok(0.0);
    }
    let mut v = randn(op.in_dim(), seed);
    let mut best = 0.0f64;
    for _ in 0..iters {
        let nv = norm2(&v);
        if nv == 0.0 {
            break;
        }
        v.iter_mut().for_each(|x| *x /= nv);
        let av = op.apply(&v)?;
        best = best.max(norm2(&av));
        v = op.apply_adjoint(&av)?;
    }
    Ok(best)
}

fn check_finite(v: &[f64], what: &'static str, iteration: usize) -> Result<()> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite { what, iteration })
    }
}

fn check_value(v: f64, what: &'static str, iteration: usize) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::NonFinite { what, iteration })
    }
}

const WINDOW: usize = 10;

/// Objective history used for the windowed stopping rule.
struct History {
    values: Vec<f64>,
}

impl History {
    fn converged(&self, tol: f64) -> bool {
        let n = self.values.len();
        if tol <= 0.0 || n <= WINDOW {
            return false;
        }
        let (old, new) = (self.values[n - 1 - WINDOW], self.values[n - 1]);
        (old - new).abs() <= tol * old.abs().max(f64::MIN_POSITIVE)
    }
}

/// Called at every recorded iteration with `(iteration, x, objective)`.
pub type Observer<'a> = &'a mut dyn FnMut(usize, &[f64], f64);

/// FISTA with constant step `1/lipschitz`, or with Beck–Teboulle
/// backtracking (starting from `lipschitz`) when enabled.
pub fn fista<P: Composite + ?Sized>(
    problem: &P,
    x0: &[f64],
    lipschitz: f64,
    cfg: &SolverConfig,
) -> Result<SolveReport> {
    proximal_gradient(problem, x0, lipschitz, cfg, true, &mut |_, _, _| {})
}

pub fn fista_observed<P: Composite + ?Sized>(
    problem: &P,
    x0: &[f64],
    lipschitz: f64,
    cfg: &SolverConfig,
    observer: Observer,
) -> Result<SolveReport> {
    proximal_gradient(problem, x0, lipschitz, cfg, true, observer)
}

/// Plain proximal gradient (no momentum).
pub fn ista<P: Composite + ?Sized>(
    problem: &P,
    x0: &[f64],
    lipschitz: f64,
    cfg: &SolverConfig,
) -> Result<SolveReport> {
    proximal_gradient(problem, x0, lipschitz, cfg, false, &mut |_, _, _| {})
}

fn proximal_gradient<P: Composite + ?Sized>(
    problem: &P,
    x0: &[f64],
    lipschitz: f64,
    cfg: &SolverConfig,
    momentum: bool,
    observer: Observer,
) -> Result<SolveReport> {
    cfg.validate()?;
    let mut l = match cfg.step {
        Some(s) => 1.0 / s,
        None => lipschitz,
    };
    if !(l > 0.0 && l.is_finite()) {
        if cfg.backtracking.is_none() {
            return Err(Error::InvalidParameter(format!(
                "Lipschitz constant must be positive without backtracking, got {lipschitz}"
            )));
        }
        l = 1.0;
    }
    let start = Instant::now();

    let mut x = x0.to_vec();
    let mut y = x.clone();
    let mut t = 1.0f64;
    let f0 = check_value(problem.objective(&x), "objective", 0)?;
    observer(0, &x, f0);
    let mut trace = vec![(0, f0)];
    let mut history = History { values: vec![f0] };
    let mut stop = StopReason::MaxIters;
    let mut iters = 0;

    for k in 1..=cfg.max_iters {
        iters = k;
        let g = problem.gradient(&y);
        check_finite(&g, "gradient", k)?;
        let step_from = |l: f64| {
            let v: Vec<f64> = y.iter().zip(&g).map(|(a, b)| a - b / l).collect();
            problem.prox(&v, 1.0 / l)
        };
        let mut next = step_from(l);
        if let Some(bt) = &cfg.backtracking {
            let fy = problem.smooth(&y);
            let mut shrinks = 0;
            loop {
                let d: Vec<f64> = next.iter().zip(&y).map(|(a, b)| a - b).collect();
                let model = fy + dot(&g, &d) + 0.5 * l * dot(&d, &d);
                if problem.smooth(&next) <= model {
                    break;
                }
                shrinks += 1;
                if shrinks > bt.max_shrinks {
                    return Err(Error::BacktrackingFailed {
                        iteration: k,
                        shrinks,
                        step: 1.0 / l,
                    });
                }
                l /= bt.shrink;
                next = step_from(l);
            }
        }
        check_finite(&next, "iterate", k)?;

        if momentum {
            let t_next = (1.0 + (1.0 + 4.0 * t * t).sqrt()) / 2.0;
            let beta = (t - 1.0) / t_next;
            y = next.iter().zip(&x).map(|(a, b)| a + beta * (a - b)).collect();
            t = t_next;
        } else {
            y = next.clone();
        }
        x = next;

        let record = k % cfg.record_every == 0 || k == cfg.max_iters;
        if record || cfg.tol > 0.0 {
            let f = check_value(problem.objective(&x), "objective", k)?;
            history.values.push(f);
            if record {
                trace.push((k, f));
                observer(k, &x, f);
            }
            if history.converged(cfg.tol) {
                if !record {
                    trace.push((k, f));
                    observer(k, &x, f);
                }
                stop = StopReason::Converged;
                break;
            }
        }
    }

    Ok(SolveReport {
        objective_trace: trace,
        block_sizes: vec![x.len()],
        final_point: x,
        iterations_run: iters,
        wall_time: start.elapsed(),
        stop_reason: stop,
        final_step: 1.0 / l,
    })
}

/// Joint proximal gradient over all blocks with monotone backtracking.
///
/// A trial point `x⁺ = prox(x − t∇f(x))` is accepted when
/// `F(x⁺) ≤ F(x) − (c/t)‖x⁺ − x‖²`; otherwise `t` shrinks. The step never
/// grows, so with a single block and `t = 1/L` this is exactly ISTA.
pub fn prox_grad_multiblock<P: MultiBlock + ?Sized>(
    problem: &P,
    x0: Vec<Vec<f64>>,
    cfg: &SolverConfig,
) -> Result<SolveReport> {
    prox_grad_multiblock_observed(problem, x0, cfg, &mut |_, _, _| {})
}

pub fn prox_grad_multiblock_observed<P: MultiBlock + ?Sized>(
    problem: &P,
    x0: Vec<Vec<f64>>,
    cfg: &SolverConfig,
    observer: Observer,
) -> Result<SolveReport> {
    cfg.validate()?;
    if x0.is_empty() {
        return Err(Error::Empty("block list"));
    }
    let bt = cfg.backtracking.unwrap_or_default();
    let mut step = cfg.step.unwrap_or(1.0);
    let start = Instant::now();
    let flat = |b: &[Vec<f64>]| b.concat();

    let mut x = x0;
    let mut f = check_value(problem.objective(&x), "objective", 0)?;
    observer(0, &flat(&x), f);
    let mut trace = vec![(0, f)];
    let mut history = History { values: vec![f] };
    let mut stop = StopReason::MaxIters;
    let mut iters = 0;

    'outer: for k in 1..=cfg.max_iters {
        iters = k;
        let g = problem.gradient(&x);
        for gb in &g {
            check_finite(gb, "gradient", k)?;
        }
        let mut shrinks = 0;
        let (next, f_next) = loop {
            let trial: Vec<Vec<f64>> = x
                .iter()
                .zip(&g)
                .enumerate()
                .map(|(b, (xb, gb))| {
                    let v: Vec<f64> = xb.iter().zip(gb).map(|(a, d)| a - step * d).collect();
                    problem.prox(b, &v, step)
                })
                .collect();
            let moved: f64 = trial
                .iter()
                .zip(&x)
                .flat_map(|(a, b)| a.iter().zip(b).map(|(u, v)| (u - v) * (u - v)))
                .sum();
            if moved == 0.0 {
                stop = StopReason::Stationary;
                if trace.last().map(|t| t.0) != Some(k - 1) {
                    trace.push((k - 1, f));
                    observer(k - 1, &flat(&x), f);
                }
                iters = k - 1;
                break 'outer;
            }
            let ft = problem.objective(&trial);
            if ft.is_finite() && ft <= f - bt.sufficient_decrease / step * moved {
                break (trial, ft);
            }
            shrinks += 1;
            if shrinks > bt.max_shrinks {
                return Err(Error::BacktrackingFailed {
                    iteration: k,
                    shrinks,
                    step,
                });
            }
            step *= bt.shrink;
        };
        x = next;
        f = f_next;
        history.values.push(f);

        let record = k % cfg.record_every == 0 || k == cfg.max_iters;
        let done = history.converged(cfg.tol);
        if record || done {
            trace.push((k, f));
            observer(k, &flat(&x), f);
        }
        if done {
            stop = StopReason::Converged;
            break;
        }
    }

    Ok(SolveReport {
        objective_trace: trace,
        block_sizes: x.iter().map(Vec::len).collect(),
        final_point: flat(&x),
        iterations_run: iters,
        wall_time: start.elapsed(),
        stop_reason: stop,
        final_step: step,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linop::DenseMatrix;
    use crate::regularizers::soft_threshold;

    struct Quadratic {
        c: Vec<f64>,
    }

    impl Composite for Quadratic {
        fn smooth(&self, x: &[f64]) -> f64 {
            0.5 * x.iter().zip(&self.c).map(|(a, b)| (a - b).powi(2)).sum::<f64>()
        }
        fn gradient(&self, x: &[f64]) -> Vec<f64> {
            x.iter().zip(&self.c).map(|(a, b)| a - b).collect()
        }
        fn nonsmooth(&self, _: &[f64]) -> f64 {
            0.0
        }
        fn prox(&self, v: &[f64], _: f64) -> Vec<f64> {
            v.to_vec()
        }
    }

    struct Lasso {
        a: DenseMatrix,
        b: Vec<f64>,
        lambda: f64,
    }

    impl Composite for Lasso {
        fn smooth(&self, x: &[f64]) -> f64 {
            let r: Vec<f64> = self.a.matvec(x).iter().zip(&self.b).map(|(u, v)| u - v).collect();
            0.5 * dot(&r, &r)
        }
        fn gradient(&self, x: &[f64]) -> Vec<f64> {
            let r: Vec<f64> = self.a.matvec(x).iter().zip(&self.b).map(|(u, v)| u - v).collect();
            self.a.matvec_transpose(&r)
        }
        fn nonsmooth(&self, x: &[f64]) -> f64 {
            self.lambda * x.iter().map(|v| v.abs()).sum::<f64>()
        }
        fn prox(&self, v: &[f64], step: f64) -> Vec<f64> {
            soft_threshold(v, self.lambda * step).unwrap()
        }
    }

    impl MultiBlock for Lasso {
        fn smooth(&self, b: &[Vec<f64>]) -> f64 {
            Composite::smooth(self, &b[0])
        }
        fn gradient(&self, b: &[Vec<f64>]) -> Vec<Vec<f64>> {
            vec![Composite::gradient(self, &b[0])]
        }
        fn nonsmooth(&self, b: &[Vec<f64>]) -> f64 {
            Composite::nonsmooth(self, &b[0])
        }
        fn prox(&self, _: usize, v: &[f64], step: f64) -> Vec<f64> {
            Composite::prox(self, v, step)
        }
    }

    fn lasso(seed: u64, lambda: f64) -> Lasso {
        Lasso {
            a: DenseMatrix::from_row_major(20, 8, randn(160, seed)).unwrap(),
            b: randn(20, seed + 1),
            lambda,
        }
    }

    fn lipschitz(a: &DenseMatrix) -> f64 {
        opnorm_estimate(&LinearOperator::from_dense(a.clone()), 500, 1).unwrap().powi(2)
    }

    #[test]
    fn power_iteration_examples() {
        let est = opnorm_estimate(&LinearOperator::identity(16), 5, 1).unwrap();
        assert!((est - 1.0).abs() < 1e-12);
        let mut d = DenseMatrix::zeros(5, 5);
        for i in 0..5 {
            d[(i, i)] = (i + 1) as f64;
        }
        let est = opnorm_estimate(&LinearOperator::from_dense(d), 200, 2).unwrap();
        assert!((est - 5.0).abs() < 1e-9);
        let zero = LinearOperator::new(4, 3, |_| vec![0.0; 3], |_| vec![0.0; 4]);
        assert_eq!(opnorm_estimate(&zero, 10, 3).unwrap(), 0.0);
    }

    #[test]
    fn fista_quadratic_converges() {
        let q = Quadratic { c: randn(12, 4) };
        let cfg = SolverConfig {
            max_iters: 200,
            ..Default::default()
        };
        let r = fista(&q, &vec![0.0; 12], 1.0, &cfg).unwrap();
        let err = r.final_point.iter().zip(&q.c).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(err < 1e-8);
        assert_eq!(r.objective_trace.len(), 201);
    }

    #[test]
    fn lasso_with_large_lambda_is_zero() {
        let mut p = lasso(5, 0.0);
        let atb = p.a.matvec_transpose(&p.b);
        p.lambda = atb.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let l = lipschitz(&p.a);
        let r = fista(&p, &randn(8, 6), l, &SolverConfig::default()).unwrap();
        assert!(r.final_point.iter().all(|v| v.abs() < 1e-10));
    }

    #[test]
    fn fista_matches_long_ista() {
        let p = lasso(7, 0.5);
        let l = lipschitz(&p.a);
        let x0 = vec![0.0; 8];
        let fast = fista(&p, &x0, l, &SolverConfig { max_iters: 500, ..Default::default() }).unwrap();
        let slow = ista(&p, &x0, l, &SolverConfig { max_iters: 50_000, record_every: 50_000, ..Default::default() }).unwrap();
        assert!((fast.final_objective() - slow.final_objective()).abs() < 1e-6);
        let f1 = fast.objective_trace[1].1;
        assert!(fast.objective_trace[10..].iter().all(|t| t.1 <= f1));
    }

    #[test]
    fn fista_backtracking_reaches_same_objective() {
        let p = lasso(11, 0.3);
        let l = lipschitz(&p.a);
        let cfg = SolverConfig {
            max_iters: 800,
            backtracking: Some(Backtracking::default()),
            ..Default::default()
        };
        let bt = fista(&p, &vec![0.0; 8], 1e-3, &cfg).unwrap();
        let fixed = fista(&p, &vec![0.0; 8], l, &SolverConfig { max_iters: 800, ..Default::default() }).unwrap();
        assert!((bt.final_objective() - fixed.final_objective()).abs() < 1e-8);
    }

    #[test]
    fn single_block_is_ista() {
        let p = lasso(13, 0.2);
        let l = lipschitz(&p.a);
        let x0 = randn(8, 14);
        let cfg = SolverConfig {
            max_iters: 60,
            step: Some(1.0 / l),
            ..Default::default()
        };
        let mb = prox_grad_multiblock(&p, vec![x0.clone()], &cfg).unwrap();
        let is = ista(&p, &x0, l, &cfg).unwrap();
        assert_eq!(mb.objective_trace.len(), is.objective_trace.len());
        for (a, b) in mb.objective_trace.iter().zip(&is.objective_trace) {
            assert!((a.1 - b.1).abs() < 1e-10);
        }
        let err = mb.final_point.iter().zip(&is.final_point).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(err < 1e-10);
    }

    struct Bilinear;

    impl MultiBlock for Bilinear {
        fn smooth(&self, b: &[Vec<f64>]) -> f64 {
            0.5 * (b[0][0] * b[1][0] - 1.0).powi(2)
        }
        fn gradient(&self, b: &[Vec<f64>]) -> Vec<Vec<f64>> {
            let r = b[0][0] * b[1][0] - 1.0;
            vec![vec![r * b[1][0]], vec![r * b[0][0]]]
        }
        fn nonsmooth(&self, _: &[Vec<f64>]) -> f64 {
            0.0
        }
        fn prox(&self, _: usize, v: &[f64], _: f64) -> Vec<f64> {
            v.to_vec()
        }
    }

    #[test]
    fn bilinear_toy_converges_monotonically() {
        let cfg = SolverConfig {
            max_iters: 2000,
            ..Default::default()
        };
        let r = prox_grad_multiblock(&Bilinear, vec![vec![2.0], vec![2.0]], &cfg).unwrap();
        let b = r.blocks();
        assert!((b[0][0] * b[1][0] - 1.0).abs() < 1e-6);
        assert!(r.objective_trace.windows(2).all(|w| w[1].1 < w[0].1 || w[1].1 == 0.0));
    }

    #[test]
    fn zero_gradient_stops_immediately() {
        let r = prox_grad_multiblock(&Bilinear, vec![vec![1.0], vec![1.0]], &SolverConfig::default()).unwrap();
        assert_eq!(r.stop_reason, StopReason::Stationary);
        assert_eq!(r.final_point, vec![1.0, 1.0]);
        assert_eq!(r.iterations_run, 0);
    }

    #[test]
    fn non_finite_gradient_aborts() {
        let q = Quadratic { c: vec![f64::NAN; 3] };
        assert!(matches!(
            fista(&q, &[0.0; 3], 1.0, &SolverConfig::default()),
            Err(Error::NonFinite { .. })
        ));
    }

    #[test]
    fn tolerance_stops_early() {
        let q = Quadratic { c: randn(5, 9) };
        let cfg = SolverConfig {
            max_iters: 10_000,
            tol: 1e-12,
            ..Default::default()
        };
        let r = fista(&q, &[0.0; 5], 1.0, &cfg).unwrap();
        assert_eq!(r.stop_reason, StopReason::Converged);
        assert!(r.iterations_run < 10_000);
    }
}
