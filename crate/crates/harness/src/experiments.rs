//! Runners for the three experiment families and their summaries.
//!
//! Each (baud, mode, seed) unit transmits one band; the noise stream is keyed
//! by the seed alone, so both shapings and every OSNR point see the same
//! underlying noise draw.

use std::collections::BTreeMap;

use cycspec_core::channel::{self, NoiseSpec, PassNoise};
use cycspec_core::metrics::{self, HD_FEC_7};
use cycspec_core::rng::{self, tag};
use cycspec_core::rxdsp::{self, RxConfig, RxTarget};
use cycspec_core::txgen::{self, BandConfig, Shaping, TxBand, TxChannelConfig};
use cycspec_core::DualPolWaveform;

use crate::config::{Config, ExperimentKind, Mode, NodeModeCfg};
use crate::{HarnessError, ResultRow};

type Res<T> = Result<T, HarnessError>;

fn ghz(v: f64) -> f64 {
    v * 1e9
}

/// Carrier of channel `i` in a four-channel band, relative to band center.
pub fn carrier_hz(cfg: &Config, i: usize) -> f64 {
    (i as f64 - 1.5) * ghz(cfg.tx.grid_ghz)
}

/// Record length in symbols for a baud under `cfg`.
pub fn record_symbols(cfg: &Config, baud_hz: f64) -> Res<usize> {
    Ok(txgen::record_symbols(
        baud_hz,
        ghz(cfg.tx.grid_ghz),
        ghz(cfg.tx.sim_rate_gsa),
        1e9,
        cfg.experiment.n_symbols + cfg.tx.training_symbols,
    )?)
}

/// Build the four-channel band; only the target carrier is detuned.
pub fn transmit(cfg: &Config, baud_hz: f64, mode: Mode, seed: u64, detuning_hz: f64) -> Res<TxBand> {
    let shaping: Shaping = mode.into();
    let channels = (0..4)
        .map(|i| {
            let mut c = TxChannelConfig::new(baud_hz, shaping, carrier_hz(cfg, i), seed.wrapping_mul(16).wrapping_add(i as u64));
            c.roll_off = cfg.tx.roll_off;
            c.grid_hz = ghz(cfg.tx.grid_ghz);
            if i == cfg.tx.target_channel {
                c.carrier_offset_hz += detuning_hz;
            }
            c
        })
        .collect();
    let band = BandConfig { channels, band_center_thz: cfg.tx.band_center_thz, sim_rate_hz: ghz(cfg.tx.sim_rate_gsa) };
    let n = record_symbols(cfg, baud_hz)?;
    Ok(txgen::generate_band(&band, n, cfg.tx.training_symbols, cfg.tx.polmux_decorrelation_symbols)?)
}

fn noise_spec(cfg: &Config, osnr_db: f64, center_hz: f64) -> NoiseSpec {
    NoiseSpec { osnr_db, ref_bw_hz: ghz(cfg.channel.ref_bw_ghz), slot_center_hz: center_hz, slot_bw_hz: ghz(cfg.tx.grid_ghz) }
}

fn load(cfg: &Config, band: &DualPolWaveform, osnr_db: f64, center_hz: f64, seed: u64) -> Res<DualPolWaveform> {
    let spec = noise_spec(cfg, osnr_db, center_hz);
    Ok(channel::load_noise(band, &spec, &mut rng::stream(seed, tag::NOISE))?)
}

struct Point<'a> {
    experiment: &'a str,
    baud_hz: f64,
    mode: Mode,
    osnr_db: f64,
    detuning_hz: f64,
    pass_index: usize,
    seed: u64,
}

fn measure(cfg: &Config, rx: &RxConfig, band: &DualPolWaveform, tx: &TxBand, target: &RxTarget, p: Point, hash: &str) -> ResultRow {
    let frame = &tx.frames[cfg.tx.target_channel];
    let signal_bw = Shaping::from(p.mode).signal_bw_hz(p.baud_hz, ghz(cfg.tx.grid_ghz));
    let psd_ratio = metrics::psd_ratio_db(p.osnr_db, signal_bw, ghz(cfg.channel.ref_bw_ghz)).unwrap_or(f64::NAN);
    let mut row = ResultRow {
        experiment: p.experiment.to_string(),
        baud_gbd: p.baud_hz / 1e9,
        mode: p.mode,
        osnr_db: p.osnr_db,
        psd_ratio_db: psd_ratio,
        detuning_ghz: p.detuning_hz / 1e9,
        pass_index: p.pass_index,
        ber: f64::NAN,
        q2_db: f64::NAN,
        seed: p.seed,
        config_hash: hash.to_string(),
        bit_errors: 0,
        bits_counted: 0,
        failure: None,
    };
    match rxdsp::receive(band, frame, target, rx) {
        Ok(r) => {
            row.ber = r.ber;
            row.q2_db = metrics::q2_from_counts(r.bit_errors, r.bits_counted);
            row.bit_errors = r.bit_errors;
            row.bits_counted = r.bits_counted;
        }
        Err(e) => row.failure = Some(e.to_string()),
    }
    row
}

fn seeds(cfg: &Config) -> impl Iterator<Item = u64> + '_ {
    (0..cfg.experiment.n_seeds as u64).map(move |i| cfg.experiment.base_seed + i)
}

fn bauds(cfg: &Config) -> Vec<f64> {
    cfg.experiment.baud_gbd.iter().map(|b| ghz(*b)).collect()
}

/// Noise-only sweep around each baud's ideal required OSNR.
pub fn run_back_to_back(cfg: &Config) -> Res<Vec<ResultRow>> {
    let hash = cfg.hash();
    let rx = cfg.rx();
    let target_hz = carrier_hz(cfg, cfg.tx.target_channel);
    let mut rows = Vec::new();
    for baud in bauds(cfg) {
        let theory = metrics::theoretical_required_osnr_db(baud, HD_FEC_7);
        let mut osnrs: Vec<f64> = cfg.b2b.osnr_offsets_db.iter().map(|o| theory + o).collect();
        if cfg.b2b.include_noiseless {
            osnrs.push(f64::INFINITY);
        }
        let target = RxTarget { center_hz: target_hz, baud_hz: baud, span: cfg.span(), n_spans: 0 };
        for &mode in &cfg.experiment.modes {
            for seed in seeds(cfg) {
                let tx = transmit(cfg, baud, mode, seed, 0.0)?;
                for &osnr in &osnrs {
                    let band = load(cfg, &tx.band, osnr, target_hz, seed)?;
                    let p = Point { experiment: "b2b", baud_hz: baud, mode, osnr_db: osnr, detuning_hz: 0.0, pass_index: 0, seed };
                    rows.push(measure(cfg, &rx, &band, &tx, &target, p, &hash));
                }
            }
        }
    }
    rows.sort_by(ResultRow::canonical_cmp);
    Ok(rows)
}

/// One span plus one on-grid add/drop node with the target laser detuned.
pub fn run_detuning(cfg: &Config) -> Res<Vec<ResultRow>> {
    let hash = cfg.hash();
    let rx = cfg.rx();
    let slot_hz = carrier_hz(cfg, cfg.tx.target_channel);
    let span = cfg.span();
    let mut rows = Vec::new();
    for baud in bauds(cfg) {
        let osnr = metrics::theoretical_required_osnr_db(baud, HD_FEC_7) + cfg.detuning.osnr_margin_db;
        let node = cfg.node(NodeModeCfg::Adddrop, slot_hz, baud);
        for &mode in &cfg.experiment.modes {
            for &det_ghz in &cfg.detuning.detuning_ghz {
                let det = ghz(det_ghz);
                let target = RxTarget { center_hz: slot_hz + det, baud_hz: baud, span, n_spans: 1 };
                for seed in seeds(cfg) {
                    let tx = transmit(cfg, baud, mode, seed, det)?;
                    let band = load(cfg, &tx.band, osnr, slot_hz + det, seed)?;
                    let out = channel::run_link(&band, &span, &node, 1, None)?;
                    let p = Point { experiment: "detuning", baud_hz: baud, mode, osnr_db: osnr, detuning_hz: det, pass_index: 1, seed };
                    rows.push(measure(cfg, &rx, &out[0], &tx, &target, p, &hash));
                }
            }
        }
    }
    rows.sort_by(ResultRow::canonical_cmp);
    Ok(rows)
}

/// Recirculating loop of span + node, measuring after every pass.
pub fn run_multipass(cfg: &Config) -> Res<Vec<ResultRow>> {
    let hash = cfg.hash();
    let rx = cfg.rx();
    let slot_hz = carrier_hz(cfg, cfg.tx.target_channel);
    let span = cfg.span();
    let mut rows = Vec::new();
    for baud in bauds(cfg) {
        let osnr = metrics::theoretical_required_osnr_db(baud, HD_FEC_7) + cfg.multipass.osnr_margin_db;
        for &nm in &cfg.multipass.node_modes {
            let node = cfg.node(nm, slot_hz, baud);
            let name = match nm {
                NodeModeCfg::Adddrop => "multipass-adddrop",
                NodeModeCfg::Allpass => "multipass-allpass",
            };
            for &mode in &cfg.experiment.modes {
                for seed in seeds(cfg) {
                    let tx = transmit(cfg, baud, mode, seed, 0.0)?;
                    let band = load(cfg, &tx.band, osnr, slot_hz, seed)?;
                    let pn = cfg.multipass.loop_osnr_db.map(|o| PassNoise { spec: noise_spec(cfg, o, slot_hz), seed });
                    let passes = channel::run_link(&band, &span, &node, cfg.multipass.max_passes, pn.as_ref())?;
                    for (k, b) in passes.iter().enumerate() {
                        let target = RxTarget { center_hz: slot_hz, baud_hz: baud, span, n_spans: k + 1 };
                        let p = Point { experiment: name, baud_hz: baud, mode, osnr_db: osnr, detuning_hz: 0.0, pass_index: k + 1, seed };
                        rows.push(measure(cfg, &rx, b, &tx, &target, p, &hash));
                    }
                }
            }
        }
    }
    rows.sort_by(ResultRow::canonical_cmp);
    Ok(rows)
}

/// Seed-aggregated figure for one configuration point.
#[derive(Clone, Debug, PartialEq)]
pub struct Pooled {
    /// Q² from errors pooled across seeds; failed seeds count as BER 0.5.
    pub q2_db: f64,
    /// Mean of per-seed Q² over successful seeds.
    pub q2_mean: f64,
    pub q2_min: f64,
    pub q2_max: f64,
    pub n_failed: usize,
}

pub fn pool(rows: &[&ResultRow]) -> Pooled {
    let (mut e, mut b) = (0u64, 0u64);
    let mut n_failed = 0;
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut sum, mut n_ok) = (0.0, 0usize);
    for r in rows {
        if r.failure.is_some() {
            n_failed += 1;
            lo = f64::NEG_INFINITY;
            continue;
        }
        e += r.bit_errors;
        b += r.bits_counted;
        lo = lo.min(r.q2_db);
        hi = hi.max(r.q2_db);
        sum += r.q2_db;
        n_ok += 1;
    }
    let q2_mean = if n_ok > 0 { sum / n_ok as f64 } else { f64::NAN };
    let q2 = if n_failed > 0 && b == 0 {
        f64::NEG_INFINITY
    } else if n_failed > 0 {
        // a failed receiver is a lost channel; weight it as coin-flip bits
        let per = b / (rows.len() - n_failed) as u64;
        metrics::q2_from_counts(e + per / 2 * n_failed as u64, b + per * n_failed as u64)
    } else {
        metrics::q2_from_counts(e, b)
    };
    Pooled { q2_db: q2, q2_mean, q2_min: lo, q2_max: hi, n_failed }
}

type Key = (u64, Mode);

fn bkey(baud_gbd: f64, mode: Mode) -> Key {
    ((baud_gbd * 1000.0).round() as u64, mode)
}

/// Required OSNR and PSD ratio per (baud, mode).
#[derive(Clone, Debug, PartialEq)]
pub struct B2bSummary {
    pub baud_gbd: f64,
    pub mode: Mode,
    pub curve: Vec<(f64, Pooled)>,
    pub required_osnr_db: Option<f64>,
    pub required_psd_ratio_db: Option<f64>,
}

pub fn summarize_b2b(cfg: &Config, rows: &[ResultRow]) -> Vec<B2bSummary> {
    let mut groups: BTreeMap<Key, BTreeMap<u64, Vec<&ResultRow>>> = BTreeMap::new();
    for r in rows.iter().filter(|r| r.experiment == "b2b") {
        groups.entry(bkey(r.baud_gbd, r.mode)).or_default().entry(r.osnr_db.to_bits()).or_default().push(r);
    }
    groups
        .into_iter()
        .map(|((b, mode), pts)| {
            let baud_gbd = b as f64 / 1000.0;
            let mut curve: Vec<(f64, Pooled)> = pts.values().map(|v| (v[0].osnr_db, pool(v))).collect();
            curve.sort_by(|a, b| a.0.total_cmp(&b.0));
            let finite: Vec<(f64, f64)> = curve.iter().filter(|p| p.0.is_finite()).map(|p| (p.0, p.1.q2_db)).collect();
            let req = metrics::required_osnr(&finite, HD_FEC_7).ok();
            let bw = Shaping::from(mode).signal_bw_hz(ghz(baud_gbd), ghz(cfg.tx.grid_ghz));
            let psd = req.and_then(|o| metrics::psd_ratio_db(o, bw, ghz(cfg.channel.ref_bw_ghz)).ok());
            B2bSummary { baud_gbd, mode, curve, required_osnr_db: req, required_psd_ratio_db: psd }
        })
        .collect()
}

/// Pooled Q² per detuning and penalty relative to zero detuning.
#[derive(Clone, Debug, PartialEq)]
pub struct DetuningSummary {
    pub baud_gbd: f64,
    pub mode: Mode,
    pub points: Vec<(f64, Pooled)>,
}

impl DetuningSummary {
    pub fn q2_at(&self, det_ghz: f64) -> Option<f64> {
        self.points.iter().find(|p| (p.0 - det_ghz).abs() < 1e-9).map(|p| p.1.q2_db)
    }

    pub fn penalty_db(&self, det_ghz: f64) -> Option<f64> {
        Some(self.q2_at(0.0)? - self.q2_at(det_ghz)?)
    }
}

pub fn summarize_detuning(rows: &[ResultRow]) -> Vec<DetuningSummary> {
    let mut groups: BTreeMap<Key, BTreeMap<i64, Vec<&ResultRow>>> = BTreeMap::new();
    for r in rows.iter().filter(|r| r.experiment == "detuning") {
        let d = (r.detuning_ghz * 1000.0).round() as i64;
        groups.entry(bkey(r.baud_gbd, r.mode)).or_default().entry(d).or_default().push(r);
    }
    groups
        .into_iter()
        .map(|((b, mode), pts)| DetuningSummary {
            baud_gbd: b as f64 / 1000.0,
            mode,
            points: pts.into_iter().map(|(d, v)| (d as f64 / 1000.0, pool(&v))).collect(),
        })
        .collect()
}

/// Per-pass pooled Q² and nodes reached for one node mode.
#[derive(Clone, Debug, PartialEq)]
pub struct MultipassSummary {
    pub experiment: String,
    pub baud_gbd: f64,
    pub mode: Mode,
    pub per_pass: Vec<Pooled>,
    pub nodes_reached: usize,
}

pub fn summarize_multipass(rows: &[ResultRow]) -> Vec<MultipassSummary> {
    let mut groups: BTreeMap<(String, Key), BTreeMap<usize, Vec<&ResultRow>>> = BTreeMap::new();
    for r in rows.iter().filter(|r| r.experiment.starts_with("multipass")) {
        groups
            .entry((r.experiment.clone(), bkey(r.baud_gbd, r.mode)))
            .or_default()
            .entry(r.pass_index)
            .or_default()
            .push(r);
    }
    groups
        .into_iter()
        .map(|((experiment, (b, mode)), passes)| {
            let per_pass: Vec<Pooled> = passes.values().map(|v| pool(v)).collect();
            let q: Vec<f64> = per_pass.iter().map(|p| p.q2_db).collect();
            MultipassSummary { experiment, baud_gbd: b as f64 / 1000.0, mode, nodes_reached: metrics::nodes_reached(&q, HD_FEC_7), per_pass }
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub enum Summary {
    B2b(Vec<B2bSummary>),
    Detuning(Vec<DetuningSummary>),
    Multipass(Vec<MultipassSummary>),
}

impl Summary {
    /// Plain-text table for the terminal.
    pub fn render(&self) -> String {
        let mut s = String::new();
        let f = |v: f64| format!("{v:>8.2}");
        match self {
            Summary::B2b(v) => {
                s.push_str("baud_gbd mode      req_osnr_db req_psd_ratio_db\n");
                for r in v {
                    let o = r.required_osnr_db.map(f).unwrap_or_else(|| "     n/a".into());
                    let p = r.required_psd_ratio_db.map(f).unwrap_or_else(|| "     n/a".into());
                    s.push_str(&format!("{:>8} {:<9} {o}    {p}\n", r.baud_gbd, format!("{:?}", r.mode).to_lowercase()));
                }
            }
            Summary::Detuning(v) => {
                s.push_str("baud_gbd mode      detuning_ghz q2_db (min..max)\n");
                for r in v {
                    for (d, p) in &r.points {
                        s.push_str(&format!(
                            "{:>8} {:<9} {:>12} {} ({:.2}..{:.2})\n",
                            r.baud_gbd,
                            format!("{:?}", r.mode).to_lowercase(),
                            d,
                            f(p.q2_db),
                            p.q2_min,
                            p.q2_max
                        ));
                    }
                }
            }
            Summary::Multipass(v) => {
                s.push_str("experiment         baud_gbd mode      nodes q2_db per pass\n");
                for r in v {
                    let q: Vec<String> = r.per_pass.iter().map(|p| format!("{:.2}", p.q2_db)).collect();
                    s.push_str(&format!(
                        "{:<18} {:>8} {:<9} {:>5} {}\n",
                        r.experiment,
                        r.baud_gbd,
                        format!("{:?}", r.mode).to_lowercase(),
                        r.nodes_reached,
                        q.join(" ")
                    ));
                }
            }
        }
        s
    }
}

/// Run one experiment family and summarize it.
pub fn run(cfg: &Config, kind: ExperimentKind) -> Res<(Vec<ResultRow>, Summary)> {
    Ok(match kind {
        ExperimentKind::B2b => {
            let rows = run_back_to_back(cfg)?;
            let s = Summary::B2b(summarize_b2b(cfg, &rows));
            (rows, s)
        }
        ExperimentKind::Detuning => {
            let rows = run_detuning(cfg)?;
            let s = Summary::Detuning(summarize_detuning(&rows));
            (rows, s)
        }
        ExperimentKind::Multipass => {
            let rows = run_multipass(cfg)?;
            let s = Summary::Multipass(summarize_multipass(&rows));
            (rows, s)
        }
    })
}
