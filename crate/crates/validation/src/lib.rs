//! Acceptance checks. Each check runs the relevant simulations, compares the
//! measured figures against fixed tolerances and returns a [`Verdict`].
//!
//! The simulation-backed checks use the default harness configuration
//! (2^16 payload symbols, four seeds) unless noted.

use std::sync::OnceLock;

use cycspec::config::{Config, Mode, NodeModeCfg};
use cycspec::experiments::{self, B2bSummary, MultipassSummary};
use cycspec::{emit_results, run_back_to_back, ExperimentKind};
use cycspec_core::channel::{self, NoiseSpec, SpanConfig};
use cycspec_core::metrics;
use cycspec_core::rxdsp;
use cycspec_core::txgen::{self, BandConfig, Shaping, TxChannelConfig};
use cycspec_core::{dsp, rng, ComplexWaveform, C64};
use rand_distr::{Distribution, StandardNormal};
use statrs::function::erf::erfc_inv;

pub const BAUDS_GBD: [f64; 4] = [40.0, 42.5, 45.0, 47.5];

/// Outcome of one acceptance criterion.
#[derive(Clone, Debug)]
pub struct Verdict {
    pub id: u32,
    pub name: &'static str,
    pub pass: bool,
    pub detail: String,
}

impl Verdict {
    pub fn line(&self) -> String {
        format!(
            "criterion {} [{}] {}: {}",
            self.id,
            if self.pass { "PASS" } else { "FAIL" },
            self.name,
            self.detail
        )
    }
}

/// Collects sub-checks so one verdict can report all of them.
struct Checks {
    pass: bool,
    parts: Vec<String>,
}

impl Checks {
    fn new() -> Self {
        Self { pass: true, parts: Vec::new() }
    }

    fn check(&mut self, ok: bool, what: String) {
        self.pass &= ok;
        self.parts.push(format!("{}{}", if ok { "" } else { "!! " }, what));
    }

    fn verdict(self, id: u32, name: &'static str) -> Verdict {
        Verdict { id, name, pass: self.pass, detail: self.parts.join("; ") }
    }
}

fn rms_rel(a: &[C64], b: &[C64]) -> f64 {
    let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y).norm_sqr()).sum();
    let den: f64 = b.iter().map(|y| y.norm_sqr()).sum();
    (num / den).sqrt()
}

fn shaped(baud: f64, shaping: Shaping, fs: f64, n: usize, seed: u64) -> (txgen::SymbolFrame, ComplexWaveform) {
    let frame = txgen::generate_frame(seed, n - 4096, 4096).expect("frame");
    let cfg = TxChannelConfig::new(baud, shaping, 0.0, seed);
    let w = txgen::shape_channel(&frame, &cfg, fs).expect("shape");
    (frame, w)
}

/// Analytic oracles: Q² anchor, dispersion round trip, overlap-add versus
/// full-record compensation, OSNR loading and AWGN counting.
pub fn criterion_1() -> Verdict {
    let mut c = Checks::new();
    let q = metrics::ber_to_q2_db(3.7e-3).expect("q2");
    c.check((q - 8.56).abs() <= 0.02, format!("Q2(3.7e-3) = {q:.4} dB (8.56 +/- 0.02)"));

    let (_, w) = shaped(40e9, Shaping::Nyquist, 80e9, 1 << 16, 1);
    let b = txgen::emulate_polmux(&w, 256, 40e9).expect("polmux");
    let span = SpanConfig::default();
    let disp = channel::apply_span(&b, &span).expect("span");
    let back = rxdsp::compensate_dispersion(&disp, &span, 1).expect("cd");
    let rt = rms_rel(&back.x.samples, &b.x.samples).max(rms_rel(&back.y.samples, &b.y.samples));
    c.check(rt <= 1e-6, format!("CD round trip {rt:.2e} RMS (<= 1e-6)"));

    let mut worst: f64 = 0.0;
    for spans in [1, 4] {
        let full = rxdsp::compensate_dispersion_full(&disp, &span, spans).expect("full");
        let ola = rxdsp::compensate_dispersion(&disp, &span, spans).expect("ola");
        worst = worst.max(rms_rel(&ola.x.samples, &full.x.samples));
    }
    c.check(worst <= 1e-6, format!("OLA vs full {worst:.2e} RMS (<= 1e-6)"));

    let cfg = BandConfig::four_channel(40e9, Shaping::Nyquist, 2);
    let n = txgen::record_symbols(40e9, 50e9, 320e9, 1e9, 1 << 15).expect("n");
    let band = txgen::generate_band(&cfg, n, 4096, 256).expect("band").band;
    let mut osnr_err: f64 = 0.0;
    for target in [12.0, 20.0] {
        let spec = NoiseSpec { osnr_db: target, ref_bw_hz: 12.5e9, slot_center_hz: 25e9, slot_bw_hz: 50e9 };
        let noisy = channel::load_noise(&band, &spec, &mut rng::stream(2, rng::tag::NOISE)).expect("noise");
        let got = channel::measure_osnr_db(&band, &noisy, &spec, 100e6).expect("measure");
        osnr_err = osnr_err.max((got - target).abs());
    }
    c.check(osnr_err <= 0.1, format!("OSNR loading error {osnr_err:.3} dB (<= 0.1)"));

    let ber = awgn_ber(3.7e-3);
    let rel = ber / 3.7e-3 - 1.0;
    c.check(rel.abs() <= 0.10, format!("AWGN BER {ber:.3e} vs 3.7e-3 ({:+.1}%, within 10%)", 100.0 * rel));
    c.verdict(1, "oracle suite")
}

fn awgn_ber(target: f64) -> f64 {
    let d = 256;
    let es_n0 = 2.0 * erfc_inv(2.0 * target).powi(2);
    let f = txgen::generate_frame(21, 1 << 19, 4096).expect("frame");
    let t = f.symbols();
    let n = t.len();
    let s = (0.5 / es_n0).sqrt();
    let mut r = rng::stream(21, rng::tag::NOISE);
    let mut noisy = |v: C64| {
        let a: f64 = StandardNormal.sample(&mut r);
        let b: f64 = StandardNormal.sample(&mut r);
        v + C64::new(a * s, b * s)
    };
    let sx: Vec<C64> = t.iter().map(|v| noisy(*v)).collect();
    let sy: Vec<C64> = (0..n).map(|k| noisy(t[(k + n - d) % n])).collect();
    let (e, b) = rxdsp::count_errors(&sx, &sy, &f, d, 1024).expect("count");
    e as f64 / b as f64
}

fn width_3db(w: &ComplexWaveform) -> f64 {
    let psd = dsp::estimate_psd(w, 100e6).expect("psd");
    let center: Vec<f64> = psd.iter().filter(|p| p.0.abs() < 5e9).map(|p| p.1).collect();
    let peak = center.iter().sum::<f64>() / center.len() as f64;
    let above: Vec<f64> = psd.iter().filter(|p| p.1 >= peak / 2.0).map(|p| p.0).collect();
    above[above.len() - 1] - above[0]
}

/// Spectral copies in the cyclic strip and occupied bandwidths.
pub fn criterion_2() -> Verdict {
    let mut c = Checks::new();
    let fs = 320e9;
    let (_, w) = shaped(40e9, Shaping::Cyclic, fs, 1 << 15, 3);
    let n = w.len();
    let s = w.spectrum();
    let df = fs / n as f64;
    let lag = (40e9 / df).round() as usize;
    let mut sum = 0.0;
    let mut cnt = 0;
    for (k, v) in s.iter().enumerate().take(n / 2) {
        let f = k as f64 * df;
        if (20.2e9..=24.75e9).contains(&f) {
            sum += v.norm() / s[(k + n - lag) % n].norm();
            cnt += 1;
        }
    }
    let ratio = 20.0 * (sum / cnt as f64).log10();
    c.check(ratio.abs() <= 0.5, format!("40G cyclic |X(f)|/|X(f-40G)| = {ratio:+.3} dB (+/- 0.5)"));
    for b in BAUDS_GBD {
        let n = txgen::record_symbols(b * 1e9, 50e9, fs, 1e9, 1 << 15).expect("record length");
        let (_, ny) = shaped(b * 1e9, Shaping::Nyquist, fs, n, 4);
        let wn = width_3db(&ny) / 1e9;
        c.check((wn / b - 1.0).abs() <= 0.02, format!("{b}G nyquist {wn:.2} GHz"));
        let (_, cy) = shaped(b * 1e9, Shaping::Cyclic, fs, n, 5);
        let wc = width_3db(&cy) / 1e9;
        c.check((wc / 50.0 - 1.0).abs() <= 0.02, format!("{b}G cyclic {wc:.2} GHz"));
    }
    c.verdict(2, "spectral construction")
}

fn b2b_summary() -> &'static Vec<B2bSummary> {
    static CELL: OnceLock<Vec<B2bSummary>> = OnceLock::new();
    CELL.get_or_init(|| {
        let cfg = Config::default();
        let rows = run_back_to_back(&cfg).expect("b2b run");
        experiments::summarize_b2b(&cfg, &rows)
    })
}

fn b2b_pair(s: &[B2bSummary], baud: f64) -> (&B2bSummary, &B2bSummary) {
    let get = |m: Mode| s.iter().find(|r| r.baud_gbd == baud && r.mode == m).expect("summary row");
    (get(Mode::Nyquist), get(Mode::Cyclic))
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.2}")).unwrap_or_else(|| "n/a".into())
}

/// Required OSNR agrees between shapings and grows with baud.
pub fn criterion_3() -> Verdict {
    let s = b2b_summary();
    let mut c = Checks::new();
    let mut prev = [f64::NEG_INFINITY; 2];
    for b in BAUDS_GBD {
        let (ny, cy) = b2b_pair(s, b);
        let (on, oc) = (ny.required_osnr_db, cy.required_osnr_db);
        let ok = matches!((on, oc), (Some(x), Some(y)) if (x - y).abs() <= 0.5);
        c.check(ok, format!("{b}G req OSNR ny {} cy {} dB", fmt_opt(on), fmt_opt(oc)));
        for (i, o) in [on, oc].into_iter().enumerate() {
            let v = o.unwrap_or(f64::NAN);
            if !(v > prev[i]) {
                c.check(false, format!("{b}G {} not above previous baud", ["nyquist", "cyclic"][i]));
            }
            prev[i] = v;
        }
    }
    c.verdict(3, "back-to-back OSNR equivalence")
}

/// Required PSD-ratio advantage of cyclic equals 10·log10(50/BR).
pub fn criterion_4() -> Verdict {
    let s = b2b_summary();
    let mut c = Checks::new();
    for b in BAUDS_GBD {
        let (ny, cy) = b2b_pair(s, b);
        let want = 10.0 * (50.0 / b).log10();
        match (ny.required_psd_ratio_db, cy.required_psd_ratio_db) {
            (Some(x), Some(y)) => {
                let adv = x - y;
                c.check((adv - want).abs() <= 0.3, format!("{b}G advantage {adv:.2} dB (want {want:.2} +/- 0.3)"));
            }
            _ => c.check(false, format!("{b}G required PSD ratio not bracketed")),
        }
    }
    c.verdict(4, "diversity gain")
}

/// Detuning penalty at 40 Gbd and ordering of the 5 GHz advantage.
pub fn criterion_5() -> Verdict {
    let mut cfg = Config::default();
    cfg.detuning.detuning_ghz = vec![0.0, 5.0];
    let (_, summary) = experiments::run(&cfg, ExperimentKind::Detuning).expect("detuning run");
    let experiments::Summary::Detuning(s) = summary else { unreachable!() };
    let get = |b: f64, m: Mode| s.iter().find(|r| r.baud_gbd == b && r.mode == m).expect("row");
    let mut c = Checks::new();
    let pn = get(40.0, Mode::Nyquist).penalty_db(5.0).unwrap_or(f64::NAN);
    let pc = get(40.0, Mode::Cyclic).penalty_db(5.0).unwrap_or(f64::NAN);
    c.check(pn >= 2.5, format!("40G nyquist penalty {pn:.2} dB (>= 2.5)"));
    c.check(pc <= 1.0, format!("40G cyclic penalty {pc:.2} dB (<= 1)"));
    let adv: Vec<f64> = BAUDS_GBD
        .iter()
        .map(|b| {
            let q = |m| get(*b, m).q2_at(5.0).unwrap_or(f64::NAN);
            q(Mode::Cyclic) - q(Mode::Nyquist)
        })
        .collect();
    let monotone = adv.windows(2).all(|w| w[1] <= w[0]);
    let txt: Vec<String> = adv.iter().map(|a| format!("{a:.2}")).collect();
    c.check(monotone, format!("5G advantage by baud [{}] dB non-increasing", txt.join(", ")));
    c.verdict(5, "detuning robustness")
}

fn multipass(mode: NodeModeCfg) -> Vec<MultipassSummary> {
    let mut cfg = Config::default();
    cfg.multipass.node_modes = vec![mode];
    let (_, summary) = experiments::run(&cfg, ExperimentKind::Multipass).expect("multipass run");
    let experiments::Summary::Multipass(s) = summary else { unreachable!() };
    s
}

/// Extra node and Q² advantage with add/drop nodes; parity with all-pass.
///
/// The advantage is read at the first pass where Nyquist falls below the
/// FEC threshold (or the last pass if it never does).
pub fn criterion_6() -> Verdict {
    let mut c = Checks::new();
    let ad = multipass(NodeModeCfg::Adddrop);
    let get = |s: &[MultipassSummary], b: f64, m: Mode| {
        s.iter().find(|r| r.baud_gbd == b && r.mode == m).cloned().expect("row")
    };
    for b in BAUDS_GBD {
        let (ny, cy) = (get(&ad, b, Mode::Nyquist), get(&ad, b, Mode::Cyclic));
        c.check(
            cy.nodes_reached > ny.nodes_reached,
            format!("{b}G nodes ny {} cy {}", ny.nodes_reached, cy.nodes_reached),
        );
        let k = ny.nodes_reached.min(ny.per_pass.len() - 1);
        let adv = cy.per_pass[k].q2_db - ny.per_pass[k].q2_db;
        c.check((0.5..=3.0).contains(&adv), format!("{b}G advantage at pass {} {adv:.2} dB", k + 1));
    }
    let ap = multipass(NodeModeCfg::Allpass);
    for b in BAUDS_GBD {
        let (ny, cy) = (get(&ap, b, Mode::Nyquist), get(&ap, b, Mode::Cyclic));
        let worst = ny
            .per_pass
            .iter()
            .zip(&cy.per_pass)
            .map(|(x, y)| (x.q2_db - y.q2_db).abs())
            .fold(0.0, f64::max);
        c.check(worst <= 0.5, format!("{b}G all-pass max |dQ2| {worst:.2} dB"));
    }
    c.verdict(6, "multi-pass cascade")
}

/// Zeroing the redundant strips costs Q² at every baud.
pub fn criterion_7() -> Verdict {
    let mut c = Checks::new();
    let mut cfg = Config::default();
    cfg.experiment.modes = vec![Mode::Cyclic];
    cfg.b2b.osnr_offsets_db = vec![1.0];
    cfg.b2b.include_noiseless = false;
    let q = |cfg: &Config| -> Vec<f64> {
        let rows = run_back_to_back(cfg).expect("ablation run");
        BAUDS_GBD
            .iter()
            .map(|b| {
                let r: Vec<_> = rows.iter().filter(|r| r.baud_gbd == *b).collect();
                experiments::pool(&r).q2_db
            })
            .collect()
    };
    let keep = q(&cfg);
    cfg.rx.zero_redundant_strips = true;
    let strip = q(&cfg);
    for (i, b) in BAUDS_GBD.iter().enumerate() {
        let d = keep[i] - strip[i];
        c.check(d > 0.0, format!("{b}G loss {d:.2} dB"));
    }
    c.verdict(7, "redundancy ablation")
}

/// Two consecutive runs of one config write byte-identical CSV files.
pub fn criterion_8() -> Verdict {
    let dir = std::env::temp_dir().join(format!("cycspec-acceptance-{}", std::process::id()));
    std::fs::create_dir_all(&dir).expect("temp dir");
    let mut cfg = Config::default();
    cfg.apply_smoke();
    cfg.experiment.n_seeds = 2;
    let mut files = Vec::new();
    for (i, kind) in [ExperimentKind::B2b, ExperimentKind::B2b].into_iter().enumerate() {
        let (rows, _) = experiments::run(&cfg, kind).expect("run");
        let p = dir.join(format!("run{i}.csv"));
        emit_results(&rows, &p).expect("emit");
        files.push(std::fs::read(&p).expect("read"));
    }
    let _ = std::fs::remove_dir_all(&dir);
    let same = files[0] == files[1];
    let mut c = Checks::new();
    c.check(same, format!("two runs, {} bytes each, identical: {same}", files[0].len()));
    c.verdict(8, "determinism")
}
