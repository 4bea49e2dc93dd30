//! Signal models for the two relaxometry protocols, sequence timing, and a
//! telegraph-process Monte Carlo oracle for the exponential correlation.
//!
//! The reporter protocol is modelled in the flag-qubit picture: two matched
//! DEER blocks entangle the NV phase with the reporter state before and after
//! the wait τ_r, so the NV coherence is the reporter parity correlator
//! ⟨σ(0)σ(τ_r)⟩ = exp(−τ_r/T1,R) scaled by a visibility that collects every
//! loss during the blocks.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::budget::ReadoutModel;
use crate::error::{Error, Result};
use crate::scene::Protocol;
use crate::spin::SpinSpec;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SequenceSpec {
    /// Half-echo DEER block time τ_NV, s.
    pub tau_nv: f64,
    /// Correlation wait τ_r, s.
    pub tau_r: f64,
    pub n_blocks: u32,
    /// Optical initialization, s.
    pub t_init: f64,
    /// Pulse overheads, s.
    pub t_extra: f64,
    /// Stretch exponent p of the NV echo envelope exp(−(2τ_NV/T2)^p).
    pub echo_exponent: f64,
}

impl SequenceSpec {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("sequence.tau_nv", self.tau_nv),
            ("sequence.tau_r", self.tau_r),
            ("sequence.t_init", self.t_init),
            ("sequence.t_extra", self.t_extra),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::invalid(name, "must be a finite time >= 0"));
            }
        }
        if self.n_blocks < 1 {
            return Err(Error::invalid("sequence.n_blocks", "must be at least 1"));
        }
        if !(self.echo_exponent > 0.0) {
            return Err(Error::invalid("sequence.echo_exponent", "must be positive"));
        }
        Ok(())
    }

    pub fn with_tau_r(&self, tau_r: f64) -> Self {
        SequenceSpec { tau_r, ..self.clone() }
    }

    /// Total time spent in DEER blocks, s.
    pub fn block_time(&self) -> f64 {
        self.n_blocks as f64 * 2.0 * self.tau_nv
    }
}

/// One point of a simulated signal curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SignalPoint {
    pub value: f64,
    pub std_err: f64,
    pub shots: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryConfig {
    pub n_traj: u64,
    pub seed: u64,
    /// Longest interval advanced without a checkpoint, s.
    pub dt_max: f64,
}

impl Default for TrajectoryConfig {
    fn default() -> Self {
        TrajectoryConfig {
            n_traj: 100_000,
            seed: 0x5eed,
            dt_max: 1.0,
        }
    }
}

impl TrajectoryConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_traj < 1 {
            return Err(Error::invalid("oracle.n_traj", "must be at least 1"));
        }
        if !(self.dt_max > 0.0) {
            return Err(Error::invalid("oracle.dt_max", "must be positive"));
        }
        Ok(())
    }
}

/// Contrast of the reporter correlation measurement:
/// sin²(π k_s τ_NV) · exp(−(2τ_NV/T2)^p) · exp(−2τ_NV/T1,R) · exp(−t_blocks/T1,NV).
pub fn visibility(seq: &SequenceSpec, reporter_t1: f64, nv: &SpinSpec, k_s: f64) -> f64 {
    let tau = seq.tau_nv;
    let entangle = (PI * k_s * tau).sin().powi(2);
    let echo = match nv.t2 {
        Some(t2) => (-(2.0 * tau / t2).powf(seq.echo_exponent)).exp(),
        None => 1.0,
    };
    let reporter_loss = (-2.0 * tau / reporter_t1).exp();
    let nv_loss = (-seq.block_time() / nv.t1_intrinsic).exp();
    entangle * echo * reporter_loss * nv_loss
}

/// NV coherence after the reporter correlation sequence with wait `seq.tau_r`.
/// `reporter_t1` is the reporter's total relaxation time, `k_s` in Hz.
pub fn reporter_signal(seq: &SequenceSpec, reporter_t1: f64, nv: &SpinSpec, k_s: f64) -> f64 {
    visibility(seq, reporter_t1, nv, k_s) * (-seq.tau_r / reporter_t1).exp()
}

/// Differential-readout population signal of direct NV relaxometry.
pub fn nv_t1_signal(tau: f64, gamma_total: f64) -> f64 {
    (-gamma_total * tau).exp()
}

/// Length of one repetition of `protocol` with probe time `tau_probe` and a
/// readout lasting `t_read`, s.
pub fn duration_with_readout(protocol: Protocol, seq: &SequenceSpec, t_read: f64, readout_init: f64, tau_probe: f64) -> f64 {
    let core = match protocol {
        Protocol::Reporter => seq.block_time() + tau_probe,
        Protocol::Direct => tau_probe,
    };
    seq.t_init + readout_init + core + t_read + seq.t_extra
}

/// Total duration of one repetition including initialization and readout.
pub fn sequence_duration(protocol: Protocol, seq: &SequenceSpec, readout: &ReadoutModel, tau_probe: f64) -> f64 {
    duration_with_readout(protocol, seq, readout.t_read, readout.t_init, tau_probe)
}

const CHUNK: u64 = 1024;

/// Monte Carlo estimate of ⟨σ(0)σ(τ)⟩ for a symmetric two-state telegraph
/// process flipping at 1/(2·T1) per direction, at every `tau_grid` point.
///
/// Trajectories are grouped in fixed chunks, each driven by its own ChaCha
/// stream derived from `(seed, chunk)`, so results do not depend on how many
/// threads run.
pub fn simulate_trajectories(t1: f64, tau_grid: &[f64], cfg: &TrajectoryConfig) -> Result<Vec<SignalPoint>> {
    cfg.validate()?;
    if !(t1 > 0.0) {
        return Err(Error::invalid("oracle.t1", "must be positive"));
    }
    if tau_grid.iter().any(|t| !(*t >= 0.0)) {
        return Err(Error::invalid("oracle.tau_grid", "times must be >= 0"));
    }
    if tau_grid.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::invalid("oracle.tau_grid", "must be sorted ascending"));
    }
    let flip_rate = 0.5 / t1;
    let n_chunks = cfg.n_traj.div_ceil(CHUNK);
    let per_chunk: Vec<Vec<u64>> = (0..n_chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            rng.set_stream(c);
            let count = CHUNK.min(cfg.n_traj - c * CHUNK);
            let mut same = vec![0u64; tau_grid.len()];
            for _ in 0..count {
                run_trajectory(&mut rng, flip_rate, tau_grid, cfg.dt_max, &mut same);
            }
            same
        })
        .collect();

    let n = cfg.n_traj as f64;
    Ok((0..tau_grid.len())
        .map(|i| {
            let same: u64 = per_chunk.iter().map(|v| v[i]).sum();
            let p = same as f64 / n;
            SignalPoint {
                value: 2.0 * p - 1.0,
                std_err: 2.0 * (p * (1.0 - p) / n).sqrt(),
                shots: cfg.n_traj,
            }
        })
        .collect())
}

fn exp_wait(rng: &mut ChaCha8Rng, rate: f64) -> f64 {
    let u: f64 = rng.random();
    -(1.0 - u).ln() / rate
}

// Exact exponential waiting times. At each checkpoint the pending wait is
// redrawn, which memorylessness makes exact.
fn run_trajectory(rng: &mut ChaCha8Rng, rate: f64, grid: &[f64], dt_max: f64, same: &mut [u64]) {
    let mut t = 0.0;
    let mut parity = false;
    for (slot, &tau) in same.iter_mut().zip(grid) {
        while t < tau {
            let horizon = (t + dt_max).min(tau);
            let next = t + exp_wait(rng, rate);
            if next <= horizon {
                parity = !parity;
                t = next;
            } else {
                t = horizon;
            }
        }
        if !parity {
            *slot += 1;
        }
    }
}
