//! DDPG with base controllers (DDPGwB) on desk-scale kinematic manipulation.
//!
//! The crate bundles everything needed to reproduce the experiments end to
//! end:
//!
//! * [`rng`] — seeded, stream-split random source so every run is bit-for-bit
//!   reproducible.
//! * [`nn`] / [`optim`] — small MLP function approximators with hand-rolled
//!   backprop and Adam.
//! * [`sim`] — the kinematic tabletop environment (stacking, block-in-cup,
//!   cup-in-cup) with sparse 0/1 rewards.
//! * [`control`] — scripted pick-and-place controllers and the grip/move
//!   primitive ensemble.
//! * [`replay`] / [`agent`] — the learning algorithm: mixed exploration,
//!   controller-bootstrapped critic targets, Q-filtered behavior cloning,
//!   and the demonstration-based baseline.
//! * [`config`] / [`metrics`] / [`train`] / [`plot`] — experiment harness:
//!   config parsing, CSV metrics, training/eval loops, SVG learning curves.
//!
//! The `ddpgwb` binary exposes the harness as a CLI (`train`, `eval`,
//! `collect-demos`, `baseline`, `plot`).

// Matrix products go through the system BLAS; the reference keeps the
// linker from dropping the backend.
use blas_src as _;

/// Tune the allocator for the training loop, which frees and
/// reallocates same-sized large buffers every step: keep them on the
/// heap instead of round-tripping each one through `mmap`/`munmap`.
/// Call once at startup.
pub fn tune_runtime() {
    #[cfg(target_os = "linux")]
    unsafe {
        libc::mallopt(libc::M_MMAP_THRESHOLD, 1 << 30);
    }
}

pub mod agent;
pub mod checkpoint;
pub mod config;
pub mod control;
pub mod error;
pub mod metrics;
pub mod nn;
pub mod optim;
pub mod plot;
pub mod replay;
pub mod rng;
pub mod sim;
pub mod train;

pub use error::Error;
