//! The solver engine shared by all variants.

use std::time::Instant;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{
    IterationCheck, PermutationPolicy, SolveResult, SolverConfig, SolverError, Variant,
};
use crate::linalg::{self, Vector};
use crate::metrics::{IterateKind, ReferenceSolution, TraceRecord};
use crate::problems::GmviProblem;

// Absolute slack for the doubling-trick acceptance check: block and full
// operator evaluations take different floating-point paths, so the residual
// is not exactly zero even at a fixed point.
const PF_CHECK_SLACK: f64 = 1e-12;

/// Runs the configured variant from `x0`, tracing against `reference` when
/// one is supplied (gap, distance, and certificate columns need a reference
/// point; without one those fields are NaN).
pub fn solve(
    problem: &dyn GmviProblem,
    config: &SolverConfig,
    x0: &Vector,
    reference: Option<&ReferenceSolution>,
) -> Result<SolveResult, SolverError> {
    validate(problem, config, x0)?;
    match config.variant {
        Variant::Prcm => Engine::new(problem, config, x0, reference).run_randomized(),
        _ => Engine::new(problem, config, x0, reference).run_cyclic(),
    }
}

fn validate(
    problem: &dyn GmviProblem,
    config: &SolverConfig,
    x0: &Vector,
) -> Result<(), SolverError> {
    if config.lipschitz <= 0.0 || !config.lipschitz.is_finite() {
        return Err(SolverError::InvalidConfig(format!(
            "Lipschitz constant must be positive and finite, got {}",
            config.lipschitz
        )));
    }
    if config.max_iterations == 0 {
        return Err(SolverError::InvalidConfig(
            "max_iterations must be at least 1".into(),
        ));
    }
    if config.gamma < 0.0 {
        return Err(SolverError::InvalidConfig("gamma must be >= 0".into()));
    }
    // Theorem-level guarantees need g to actually be gamma-strongly convex.
    if config.gamma > problem.gamma() + 1e-12 {
        return Err(SolverError::InvalidConfig(format!(
            "configured gamma {} exceeds the problem modulus {}",
            config.gamma,
            problem.gamma()
        )));
    }
    if x0.len() != problem.dim() {
        return Err(SolverError::InvalidConfig(format!(
            "x0 has length {} but the problem dimension is {}",
            x0.len(),
            problem.dim()
        )));
    }
    if config.variant == Variant::CoderPf
        && matches!(config.permutation, PermutationPolicy::ShufflePerIteration(_))
    {
        return Err(SolverError::InvalidConfig(
            "the parameter-free variant requires a fixed block order".into(),
        ));
    }
    if problem.g_value(x0) == f64::INFINITY {
        return Err(SolverError::StartOutsideDomain);
    }
    Ok(())
}

struct Engine<'a> {
    problem: &'a dyn GmviProblem,
    config: &'a SolverConfig,
    reference: Option<&'a ReferenceSolution>,
    x0: Vec<f64>,
    x_prev: Vec<f64>,
    f_prev: Vec<f64>,
    p_prev: Vec<f64>,
    dual: Vec<f64>,
    a_prev: f64,
    big_a: f64,
    avg_sum: Vec<f64>,
    // accumulators behind the running certificate:
    // sum_j a_j <F(x_j), x_j>, sum_j a_j F(x_j), sum_j a_j g(x_j)
    sum_a_fx: f64,
    sum_a_f: Vec<f64>,
    sum_a_g: f64,
    passes: u64,
    doubling_count: u64,
    trace: Vec<TraceRecord>,
    checks: Vec<IterationCheck>,
    started: Instant,
}

impl<'a> Engine<'a> {
    fn new(
        problem: &'a dyn GmviProblem,
        config: &'a SolverConfig,
        x0: &Vector,
        reference: Option<&'a ReferenceSolution>,
    ) -> Self {
        let d = problem.dim();
        Self {
            problem,
            config,
            reference,
            x0: x0.as_slice().to_vec(),
            x_prev: x0.as_slice().to_vec(),
            f_prev: vec![0.0; d],
            p_prev: vec![0.0; d],
            dual: vec![0.0; d],
            a_prev: 0.0,
            big_a: 0.0,
            avg_sum: vec![0.0; d],
            sum_a_fx: 0.0,
            sum_a_f: vec![0.0; d],
            sum_a_g: 0.0,
            passes: 0,
            doubling_count: 0,
            trace: Vec::new(),
            checks: Vec::new(),
            started: Instant::now(),
        }
    }

    fn step_size(&self, l: f64) -> f64 {
        (1.0 + self.config.gamma * self.big_a) / (2.0 * l)
    }

    fn order_rng(&self) -> Option<ChaCha8Rng> {
        match self.config.permutation {
            PermutationPolicy::Fixed => None,
            PermutationPolicy::ShuffleOnce(seed) | PermutationPolicy::ShufflePerIteration(seed) => {
                Some(ChaCha8Rng::seed_from_u64(seed))
            }
        }
    }

    fn diverged(x: &[f64], threshold: f64) -> bool {
        x.iter().any(|v| !v.is_finite() || v.abs() > threshold)
    }

    /// One sweep over all blocks in `order`; returns the new iterate.
    /// `p_curr` receives the collected block operator values.
    fn sweep(
        &mut self,
        order: &[usize],
        a: f64,
        big_a_new: f64,
        ratio: f64,
        extrapolate: bool,
        p_curr: &mut [f64],
    ) -> Vec<f64> {
        let partition = self.problem.partition();
        let mut p_blk = vec![0.0; partition.largest_block()];
        let mut z_blk = vec![0.0; partition.largest_block()];
        let mut pass = self.problem.begin_pass(&self.x_prev);
        for &block in order {
            let range = partition.range(block);
            let len = range.len();
            self.problem.block_operator(&pass, block, &mut p_blk[..len]);
            for (k, c) in range.enumerate() {
                let p = p_blk[k];
                p_curr[c] = p;
                let q = if extrapolate {
                    p + ratio * (self.f_prev[c] - self.p_prev[c])
                } else {
                    p
                };
                self.dual[c] += a * q;
                z_blk[k] = self.x0[c] - self.dual[c];
            }
            self.problem.prox_block(block, &mut z_blk[..len], big_a_new);
            self.problem.commit_block(&mut pass, block, &z_blk[..len]);
        }
        pass.into_mixed()
    }

    /// The accepted iterate becomes part of the run: advances the schedule,
    /// the weighted average, and the certificate accumulators.
    fn accept(&mut self, a: f64, big_a_new: f64, x_curr: Vec<f64>, f_curr: Option<&[f64]>) {
        for (s, &xi) in self.avg_sum.iter_mut().zip(&x_curr) {
            *s += a * xi;
        }
        if let Some(f) = f_curr {
            self.sum_a_fx += a * linalg::dot(f, &x_curr);
            for (s, &fi) in self.sum_a_f.iter_mut().zip(f) {
                *s += a * fi;
            }
            self.sum_a_g += a * self.problem.g_value(&x_curr);
        }
        self.x_prev = x_curr;
        self.a_prev = a;
        self.big_a = big_a_new;
    }

    fn record_check(
        &mut self,
        k: usize,
        f_curr: Option<&[f64]>,
        p_curr: &[f64],
        step_distance: f64,
        accepted_l: f64,
        attempts: u32,
    ) {
        if !self.config.collect_diagnostics {
            return;
        }
        let lipschitz_residual = match f_curr {
            Some(f) => {
                let mut acc = 0.0;
                for (fi, pi) in f.iter().zip(p_curr) {
                    let dv = fi - pi;
                    acc += dv * dv;
                }
                acc.sqrt()
            }
            None => f64::NAN,
        };
        let (lemma1_lhs, lemma1_rhs) = match self.reference {
            Some(r) => {
                let u = r.x_star.as_slice();
                let xk = &self.x_prev;
                let diff_dot: f64 = self
                    .dual
                    .iter()
                    .zip(xk.iter().zip(u))
                    .map(|(g, (x, ui))| g * (x - ui))
                    .sum();
                let gk = self.problem.g_value(xk);
                let lhs = diff_dot
                    + self.big_a * (gk - r.g_at_star())
                    + 0.5 * dist_sq(xk, &self.x0);
                let rhs = 0.5 * dist_sq(u, &self.x0)
                    - 0.5 * (1.0 + self.config.gamma * self.big_a) * dist_sq(u, xk);
                (lhs, rhs)
            }
            None => (f64::NAN, f64::NAN),
        };
        self.checks.push(IterationCheck {
            k,
            lipschitz_residual,
            step_distance,
            accepted_l,
            attempts,
            lemma1_lhs,
            lemma1_rhs,
        });
    }

    fn should_trace(&self, k: usize) -> bool {
        k == self.config.max_iterations
            || (self.config.trace_every > 0 && k.is_multiple_of(self.config.trace_every))
    }

    fn push_trace(&mut self, k: usize) {
        let time_s = self.started.elapsed().as_secs_f64();
        let x_avg: Vec<f64> = if self.big_a > 0.0 {
            self.avg_sum.iter().map(|s| s / self.big_a).collect()
        } else {
            self.x0.clone()
        };
        let cert = self.reference.map(|r| {
            let u = r.x_star.as_slice();
            let restricted = self.sum_a_fx - linalg::dot(&self.sum_a_f, u) + self.sum_a_g
                - self.big_a * r.g_at_star();
            let lhs = restricted
                + 0.25 * (1.0 + self.config.gamma * self.big_a) * dist_sq(u, &self.x_prev);
            let rhs = 0.5 * dist_sq(u, &self.x0);
            (lhs, rhs)
        });
        for (kind, x_hat) in [
            (IterateKind::Last, &self.x_prev),
            (IterateKind::Avg, &x_avg),
        ] {
            let (primal_gap, dist, gap_ref) = match self.reference {
                Some(r) => (
                    self.problem.primal_value(x_hat) - r.f_star,
                    dist_sq(x_hat, r.x_star.as_slice()),
                    r.gap_from_star(self.problem, x_hat),
                ),
                None => (f64::NAN, f64::NAN, f64::NAN),
            };
            let (cert_lhs, cert_rhs) = cert.unwrap_or((f64::NAN, f64::NAN));
            self.trace.push(TraceRecord {
                k,
                passes: self.passes,
                time_s,
                primal_gap,
                dist_sq: dist,
                gap_at_ref: gap_ref,
                cert_lhs,
                cert_rhs,
                iterate: kind,
            });
        }
    }

    fn finish(self, iterations: usize) -> SolveResult {
        let x_avg = if self.big_a > 0.0 {
            self.avg_sum.iter().map(|s| s / self.big_a).collect()
        } else {
            self.x0.clone()
        };
        SolveResult {
            x_last: Vector::new(self.x_prev).expect("finite iterate"),
            x_avg: Vector::new(x_avg).expect("finite average"),
            iterations,
            final_a: self.big_a,
            doubling_count: self.doubling_count,
            passes: self.passes,
            trace: self.trace,
            checks: self.checks,
        }
    }

    fn divergence(mut self, iteration: usize) -> SolverError {
        // keep the partial trace; x_prev still holds the last finite iterate
        self.push_trace(iteration);
        SolverError::Divergence {
            iteration,
            partial: Box::new(self.finish(iteration)),
        }
    }

    fn run_cyclic(mut self) -> Result<SolveResult, SolverError> {
        let m = self.problem.partition().num_blocks();
        let d = self.problem.dim();
        let parameter_free = self.config.variant == Variant::CoderPf;
        let extrapolate = matches!(self.config.variant, Variant::Coder | Variant::CoderPf);
        let l_cap = self.config.lipschitz_cap_factor * self.config.lipschitz;

        // Initialization: x_{-1} = x_0, p_0 = F(x_0), g_0 = 0, a_0 = A_0 = 0.
        // Without extrapolation the p_0 cache is never read, so the
        // baseline is not charged for it.
        if extrapolate {
            self.problem.full_operator(&self.x_prev.clone(), &mut self.f_prev);
            self.p_prev.copy_from_slice(&self.f_prev);
            self.passes += 1;
        }

        let mut order: Vec<usize> = (0..m).collect();
        let mut rng = self.order_rng();
        if let (Some(r), PermutationPolicy::ShuffleOnce(_)) =
            (rng.as_mut(), self.config.permutation)
        {
            order.shuffle(r);
        }

        let mut l_current = self.config.lipschitz;
        let mut p_curr = vec![0.0; d];
        let mut f_curr = vec![0.0; d];
        // PCCM never needs F(x_k) for its own updates; evaluate it only for
        // certificates and diagnostics, and do not charge it as a pass.
        let needs_f = extrapolate || self.reference.is_some() || self.config.collect_diagnostics;

        self.push_trace(0);
        for k in 1..=self.config.max_iterations {
            if let (Some(r), PermutationPolicy::ShufflePerIteration(_)) =
                (rng.as_mut(), self.config.permutation)
            {
                order.shuffle(r);
            }

            let dual_snapshot = parameter_free.then(|| self.dual.clone());
            let mut l_k = if parameter_free {
                l_current / 2.0
            } else {
                l_current
            };
            let mut attempts = 0u32;
            let (x_curr, step_distance) = loop {
                attempts += 1;
                if parameter_free {
                    l_k *= 2.0;
                    if l_k > l_cap {
                        return Err(SolverError::LipschitzCapExceeded {
                            iteration: k,
                            cap: l_cap,
                        });
                    }
                    if attempts > 1 {
                        self.dual.copy_from_slice(dual_snapshot.as_ref().unwrap());
                    }
                }
                let a = self.step_size(l_k);
                let big_a_new = self.big_a + a;
                let ratio = self.a_prev / a;
                let x_curr = self.sweep(&order, a, big_a_new, ratio, extrapolate, &mut p_curr);
                self.passes += 1;

                if !parameter_free {
                    if Self::diverged(&x_curr, self.config.divergence_threshold) {
                        return Err(self.divergence(k));
                    }
                    let step = dist(&x_curr, &self.x_prev);
                    break (x_curr, step);
                }

                // Doubling-trick acceptance: ||F(x_k) - p_k|| <= L_k ||x_k - x_{k-1}||.
                // A non-finite trial iterate counts as a failed check: the
                // estimate was too small.
                self.problem.full_operator(&x_curr, &mut f_curr);
                self.passes += 1;
                let finite = !Self::diverged(&x_curr, self.config.divergence_threshold);
                let residual = dist(&f_curr, &p_curr);
                let step = dist(&x_curr, &self.x_prev);
                let slack = PF_CHECK_SLACK * (1.0 + linalg::norm(&f_curr));
                if finite && residual <= l_k * step + slack {
                    break (x_curr, step);
                }
                self.doubling_count += 1;
            };
            l_current = l_k;

            let a = self.step_size(l_k);
            let big_a_new = self.big_a + a;
            let have_f = if needs_f {
                if !parameter_free {
                    self.problem.full_operator(&x_curr, &mut f_curr);
                    if extrapolate {
                        // the cached F(x_k) doubles as next iteration's
                        // extrapolation anchor: algorithm work, one pass
                        self.passes += 1;
                    }
                }
                true
            } else {
                false
            };

            self.accept(a, big_a_new, x_curr, have_f.then_some(f_curr.as_slice()));
            self.record_check(
                k,
                have_f.then_some(f_curr.as_slice()),
                &p_curr,
                step_distance,
                l_k,
                attempts,
            );
            if extrapolate {
                std::mem::swap(&mut self.p_prev, &mut p_curr);
                std::mem::swap(&mut self.f_prev, &mut f_curr);
            }
            if self.should_trace(k) {
                self.push_trace(k);
            }
        }
        let iterations = self.config.max_iterations;
        Ok(self.finish(iterations))
    }

    /// PRCM: per virtual pass, `m` uniformly sampled single-block dual
    /// averaging steps at the current point, with the schedule advanced once
    /// per virtual pass. The paper leaves the randomized baseline's schedule
    /// unspecified; this matches one CODER iteration of schedule progress per
    /// pass of sampled work.
    fn run_randomized(mut self) -> Result<SolveResult, SolverError> {
        let partition = self.problem.partition().clone();
        let m = partition.num_blocks();
        let mut rng = ChaCha8Rng::seed_from_u64(self.config.seed);
        let mut p_blk = vec![0.0; partition.largest_block()];
        let mut z_blk = vec![0.0; partition.largest_block()];
        let mut f_curr = vec![0.0; self.problem.dim()];

        let mut pass = self.problem.begin_pass(&self.x_prev.clone());
        self.passes += 1;
        self.push_trace(0);

        for k in 1..=self.config.max_iterations {
            let a = self.step_size(self.config.lipschitz);
            let big_a_new = self.big_a + a;
            for _ in 0..m {
                let block = rng.random_range(0..m);
                let range = partition.range(block);
                let len = range.len();
                self.problem.block_operator(&pass, block, &mut p_blk[..len]);
                for (i, c) in range.enumerate() {
                    self.dual[c] += a * p_blk[i];
                    z_blk[i] = self.x0[c] - self.dual[c];
                }
                self.problem.prox_block(block, &mut z_blk[..len], big_a_new);
                if Self::diverged(&z_blk[..len], self.config.divergence_threshold) {
                    return Err(self.divergence(k));
                }
                self.problem.commit_block(&mut pass, block, &z_blk[..len]);
            }
            self.passes += 1;

            let x_curr = pass.mixed().to_vec();
            let step_distance = dist(&x_curr, &self.x_prev);
            let have_f = self.reference.is_some() || self.config.collect_diagnostics;
            if have_f {
                // measurement only: certificates want F at the virtual-pass
                // iterate; PRCM itself never consumes it, so no pass charged
                self.problem.full_operator(&x_curr, &mut f_curr);
            }
            self.accept(a, big_a_new, x_curr, have_f.then_some(f_curr.as_slice()));
            self.record_check(k, None, &[], step_distance, self.config.lipschitz, 1);
            if self.should_trace(k) {
                self.push_trace(k);
            }
            // rebuild the maintained residuals periodically so incremental
            // drift cannot accumulate over long runs
            if k.is_multiple_of(100) {
                let current = pass.mixed().to_vec();
                pass = self.problem.begin_pass(&current);
            }
        }
        let iterations = self.config.max_iterations;
        Ok(self.finish(iterations))
    }
}

fn dist_sq(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| {
            let d = x - y;
            d * d
        })
        .sum()
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    dist_sq(a, b).sqrt()
}
