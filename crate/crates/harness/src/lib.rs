//! Experiment orchestration for the cycspec simulator: back-to-back OSNR
//! sweeps, single-node detuning sweeps and multi-pass add/drop cascades.

pub mod config;
pub mod experiments;
pub mod output;

use thiserror::Error;

pub use config::{Config, ExperimentKind, Mode, NodeModeCfg};
pub use experiments::{run, run_back_to_back, run_detuning, run_multipass, Summary};
pub use output::{emit_results, format_g, to_csv};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("config error: {0}")]
    Config(String),
    #[error("simulation failure: {0}")]
    Simulation(#[from] cycspec_core::Error),
    #[error("output error: {0}")]
    Output(String),
}

/// One measured point plus identifiers.
#[derive(Clone, Debug, PartialEq)]
pub struct ResultRow {
    /// `b2b`, `detuning`, `multipass-adddrop` or `multipass-allpass`.
    pub experiment: String,
    pub baud_gbd: f64,
    pub mode: Mode,
    pub osnr_db: f64,
    pub psd_ratio_db: f64,
    pub detuning_ghz: f64,
    pub pass_index: usize,
    pub ber: f64,
    pub q2_db: f64,
    pub seed: u64,
    pub config_hash: String,
    pub bit_errors: u64,
    pub bits_counted: u64,
    /// Receiver failure cause; BER and Q² are NaN when set.
    pub failure: Option<String>,
}

impl ResultRow {
    fn sort_key(&self) -> (&str, f64, Mode, f64, f64, usize, u64) {
        (&self.experiment, self.baud_gbd, self.mode, self.osnr_db, self.detuning_ghz, self.pass_index, self.seed)
    }

    /// Canonical row order: configuration fields first, seed last.
    pub fn canonical_cmp(&self, other: &Self) -> std::cmp::Ordering {
        let (a, b) = (self.sort_key(), other.sort_key());
        a.0.cmp(b.0)
            .then(a.1.total_cmp(&b.1))
            .then(a.2.cmp(&b.2))
            .then(a.3.total_cmp(&b.3))
            .then(a.4.total_cmp(&b.4))
            .then(a.5.cmp(&b.5))
            .then(a.6.cmp(&b.6))
    }
}
