//! TOML experiment configuration. Every key has a default and unknown keys
//! are rejected.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use cycspec_core::channel::{NodeConfig, SpanConfig, WssFilterModel};
use cycspec_core::rxdsp::{EqualizerConfig, RxConfig};
use cycspec_core::txgen::Shaping;

use crate::HarnessError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, PartialOrd, Ord, Hash)]
#[serde(rename_all = "lowercase")]
pub enum ExperimentKind {
    B2b,
    Detuning,
    Multipass,
}

impl ExperimentKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ExperimentKind::B2b => "b2b",
            ExperimentKind::Detuning => "detuning",
            ExperimentKind::Multipass => "multipass",
        }
    }
}

impl std::str::FromStr for ExperimentKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "b2b" => Ok(Self::B2b),
            "detuning" => Ok(Self::Detuning),
            "multipass" => Ok(Self::Multipass),
            _ => Err(format!("unknown experiment '{s}' (b2b|detuning|multipass)")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, PartialOrd, Ord, Hash)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Nyquist,
    Cyclic,
}

impl From<Mode> for Shaping {
    fn from(m: Mode) -> Shaping {
        match m {
            Mode::Nyquist => Shaping::Nyquist,
            Mode::Cyclic => Shaping::Cyclic,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, PartialOrd, Ord, Hash)]
#[serde(rename_all = "lowercase")]
pub enum NodeModeCfg {
    Adddrop,
    Allpass,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentSection {
    pub kind: ExperimentKind,
    pub baud_gbd: Vec<f64>,
    pub modes: Vec<Mode>,
    /// Payload symbols per record (the record is rounded up from this).
    pub n_symbols: usize,
    pub n_seeds: usize,
    pub base_seed: u64,
}

impl Default for ExperimentSection {
    fn default() -> Self {
        Self {
            kind: ExperimentKind::B2b,
            baud_gbd: vec![40.0, 42.5, 45.0, 47.5],
            modes: vec![Mode::Nyquist, Mode::Cyclic],
            n_symbols: 1 << 16,
            n_seeds: 4,
            base_seed: 1,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct B2bSection {
    /// OSNR points relative to the ideal-receiver requirement of each baud.
    pub osnr_offsets_db: Vec<f64>,
    pub include_noiseless: bool,
}

impl Default for B2bSection {
    fn default() -> Self {
        Self { osnr_offsets_db: vec![-1.0, 0.0, 1.0, 2.0], include_noiseless: true }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DetuningSection {
    pub detuning_ghz: Vec<f64>,
    /// OSNR above the ideal requirement at which the sweep runs.
    pub osnr_margin_db: f64,
}

impl Default for DetuningSection {
    fn default() -> Self {
        Self { detuning_ghz: (-5..=5).map(f64::from).collect(), osnr_margin_db: 3.0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MultipassSection {
    pub max_passes: usize,
    pub node_modes: Vec<NodeModeCfg>,
    pub osnr_margin_db: f64,
    /// Per-pass amplifier OSNR; absent means noise is loaded once.
    pub loop_osnr_db: Option<f64>,
}

impl Default for MultipassSection {
    fn default() -> Self {
        Self {
            max_passes: 6,
            node_modes: vec![NodeModeCfg::Adddrop, NodeModeCfg::Allpass],
            osnr_margin_db: 4.0,
            loop_osnr_db: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TxSection {
    pub roll_off: f64,
    pub grid_ghz: f64,
    pub band_center_thz: f64,
    pub sim_rate_gsa: f64,
    pub polmux_decorrelation_symbols: usize,
    pub training_symbols: usize,
    /// Index of the measured channel among ±75/±25 GHz (0..4).
    pub target_channel: usize,
}

impl Default for TxSection {
    fn default() -> Self {
        Self {
            roll_off: 0.01,
            grid_ghz: 50.0,
            band_center_thz: 193.075,
            sim_rate_gsa: 320.0,
            polmux_decorrelation_symbols: 256,
            training_symbols: 4096,
            target_channel: 2,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChannelSection {
    pub span_km: f64,
    pub dispersion_ps_nm_km: f64,
    pub lambda_nm: f64,
    pub wss_bandwidth_ghz: f64,
    pub wss_edge_fwhm_ghz: f64,
    pub express_delay_symbols: f64,
    pub ref_bw_ghz: f64,
}

impl Default for ChannelSection {
    fn default() -> Self {
        Self {
            span_km: 80.0,
            dispersion_ps_nm_km: 17.0,
            lambda_nm: 1552.7,
            wss_bandwidth_ghz: 43.0,
            wss_edge_fwhm_ghz: 6.0,
            express_delay_symbols: 128.0,
            ref_bw_ghz: 12.5,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RxSection {
    pub prefilter_ghz: f64,
    pub n_taps: usize,
    pub mu_lms: f64,
    pub mu_cma: f64,
    pub lms_epochs: usize,
    pub phase_block: usize,
    pub guard_symbols: usize,
    pub zero_redundant_strips: bool,
}

impl Default for RxSection {
    fn default() -> Self {
        let eq = EqualizerConfig::default();
        let rx = RxConfig::default();
        Self {
            prefilter_ghz: rx.prefilter_bw_hz / 1e9,
            n_taps: eq.n_taps,
            mu_lms: eq.mu_lms,
            mu_cma: eq.mu_cma,
            lms_epochs: eq.lms_epochs,
            phase_block: rx.phase_block,
            guard_symbols: rx.guard_symbols,
            zero_redundant_strips: false,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    /// Directory for gnuplot-friendly per-series data blocks.
    pub gnuplot_dir: Option<String>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub experiment: ExperimentSection,
    pub b2b: B2bSection,
    pub detuning: DetuningSection,
    pub multipass: MultipassSection,
    pub tx: TxSection,
    pub channel: ChannelSection,
    pub rx: RxSection,
    pub output: OutputSection,
}

impl Config {
    pub fn from_toml(text: &str) -> Result<Self, HarnessError> {
        let c: Config = toml::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))?;
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| HarnessError::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    /// Reduced profile: 2^14 symbols, one seed, two OSNR points.
    pub fn apply_smoke(&mut self) {
        self.experiment.n_symbols = 1 << 14;
        self.experiment.n_seeds = 1;
        self.b2b.osnr_offsets_db = vec![-0.5, 1.5];
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let bad = |m: &str| Err(HarnessError::Config(m.to_string()));
        let e = &self.experiment;
        if e.baud_gbd.is_empty() || e.modes.is_empty() {
            return bad("baud and mode lists must be nonempty");
        }
        if e.baud_gbd.iter().any(|b| !(*b > 0.0 && *b <= self.tx.grid_ghz)) {
            return bad("every baud must be positive and no larger than the grid");
        }
        if e.n_symbols < 1 << 14 {
            return bad("n_symbols must be at least 16384");
        }
        if e.n_seeds == 0 {
            return bad("n_seeds must be at least 1");
        }
        if self.b2b.osnr_offsets_db.is_empty() || self.detuning.detuning_ghz.is_empty() {
            return bad("OSNR and detuning grids must be nonempty");
        }
        if self.multipass.max_passes == 0 || self.multipass.node_modes.is_empty() {
            return bad("multipass needs at least one pass and one node mode");
        }
        if self.tx.target_channel > 3 {
            return bad("target_channel must be 0..=3");
        }
        if self.rx.n_taps % 2 == 0 {
            return bad("n_taps must be odd");
        }
        if self.tx.training_symbols < 10 * self.rx.n_taps {
            return bad("training_symbols must be at least 10 x n_taps");
        }
        if self.tx.polmux_decorrelation_symbols < self.rx.n_taps {
            return bad("polmux decorrelation must exceed the equalizer memory");
        }
        if self.channel.express_delay_symbols < 0.0 || self.channel.ref_bw_ghz <= 0.0 {
            return bad("express delay must be non-negative and reference bandwidth positive");
        }
        Ok(())
    }

    /// First 16 hex digits of SHA-256 over the canonical TOML form.
    pub fn hash(&self) -> String {
        let text = toml::to_string(self).unwrap_or_default();
        let digest = Sha256::digest(text.as_bytes());
        digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
    }

    pub fn span(&self) -> SpanConfig {
        SpanConfig {
            length_m: self.channel.span_km * 1e3,
            dispersion_ps_nm_km: self.channel.dispersion_ps_nm_km,
            reference_lambda_m: self.channel.lambda_nm * 1e-9,
        }
    }

    pub fn wss(&self) -> WssFilterModel {
        WssFilterModel {
            center_hz: 0.0,
            bandwidth_3db_hz: self.channel.wss_bandwidth_ghz * 1e9,
            edge_fwhm_hz: self.channel.wss_edge_fwhm_ghz * 1e9,
        }
    }

    pub fn node(&self, mode: NodeModeCfg, target_hz: f64, baud_hz: f64) -> NodeConfig {
        let mut n = match mode {
            NodeModeCfg::Allpass => NodeConfig::all_pass(),
            NodeModeCfg::Adddrop => {
                NodeConfig::add_drop(target_hz, self.wss(), self.channel.express_delay_symbols / baud_hz)
            }
        };
        n.grid_hz = self.tx.grid_ghz * 1e9;
        n.band_center_hz = self.tx.band_center_thz * 1e12;
        n
    }

    pub fn rx(&self) -> RxConfig {
        RxConfig {
            prefilter_bw_hz: self.rx.prefilter_ghz * 1e9,
            equalizer: EqualizerConfig {
                n_taps: self.rx.n_taps,
                mu_lms: self.rx.mu_lms,
                mu_cma: self.rx.mu_cma,
                training_symbols: self.tx.training_symbols,
                cma_radius: 1.0,
                lms_epochs: self.rx.lms_epochs,
            },
            phase_block: self.rx.phase_block,
            decorrelation_symbols: self.tx.polmux_decorrelation_symbols,
            guard_symbols: self.rx.guard_symbols,
            zero_redundant_strips: self.rx.zero_redundant_strips,
        }
    }
}
