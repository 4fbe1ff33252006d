mod common;

use std::f64::consts::PI;

use common::{db, rms_rel, tone, white};
use cycspec_core::dsp::{self, FrequencyResponse};
use cycspec_core::txgen::Shaping;
use cycspec_core::{ComplexWaveform, C64};
use proptest::prelude::*;

/// Closed-form RRC magnitude written out independently of the library.
fn rrc_oracle(f: f64, beta: f64, b: f64) -> f64 {
    let f1 = (1.0 - beta) * b / 2.0;
    let f2 = (1.0 + beta) * b / 2.0;
    let a = f.abs();
    if a <= f1 {
        1.0
    } else if a >= f2 {
        0.0
    } else {
        // raised cosine is cos² of a quarter-period ramp; take the root
        (PI / 2.0 * (a - f1) / (f2 - f1)).cos()
    }
}

#[test]
fn rrc_brick_wall_limit() {
    let h = dsp::design_rrc(0.0, 40e9).unwrap();
    assert_eq!(h.gain(19.99e9).norm(), 1.0);
    assert_eq!(h.gain(20.01e9).norm(), 0.0);
}

#[test]
fn rrc_one_percent_edges() {
    let h = dsp::design_rrc(0.01, 40e9).unwrap();
    for f in [0.0, 10e9, 19.8e9, -19.8e9] {
        assert!((h.gain(f).norm() - 1.0).abs() < 1e-12);
    }
    for f in [20.2e9, -20.2e9, 25e9] {
        assert!(h.gain(f).norm() < 1e-12);
    }
    for i in 0..=40 {
        let f = 19.8e9 + i as f64 * 0.01e9;
        assert!((h.gain(f).norm() - rrc_oracle(f, 0.01, 40e9)).abs() < 1e-9, "{f}");
    }
}

#[test]
fn filter_identity_and_zero() {
    let w = white(4096, 80e9, 1);
    let id = dsp::apply_filter(&w, &FrequencyResponse::flat(C64::new(1.0, 0.0)));
    assert!(rms_rel(&id.samples, &w.samples) <= 1e-12);
    let z = dsp::apply_filter(&w, &FrequencyResponse::flat(C64::new(0.0, 0.0)));
    assert!(z.samples.iter().all(|v| v.norm() == 0.0));
}

#[test]
fn rectangle_suppresses_out_of_band_noise() {
    let fs = 160e9;
    let w = white(1 << 16, fs, 2);
    let y = dsp::apply_filter(&w, &FrequencyResponse::brick_wall(40e9));
    let psd = dsp::estimate_psd(&y, 100e6).unwrap();
    let inband: f64 = psd.iter().filter(|p| p.0.abs() < 15e9).map(|p| p.1).sum::<f64>()
        / psd.iter().filter(|p| p.0.abs() < 15e9).count() as f64;
    // leave a few Hann-window bins for the edge transition
    let worst = psd.iter().filter(|p| p.0.abs() > 21e9).map(|p| p.1).fold(0.0, f64::max);
    assert!(db(inband / worst) >= 60.0, "{}", db(inband / worst));
}

#[test]
fn resample_same_rate_is_passthrough() {
    let w = white(1000, 80e9, 3);
    assert_eq!(dsp::resample(&w, 80e9).unwrap(), w);
}

#[test]
fn resample_round_trip() {
    let w = dsp::apply_filter(&white(8192, 80e9, 4), &FrequencyResponse::brick_wall(70e9));
    let up = dsp::resample(&w, 160e9).unwrap();
    let back = dsp::resample(&up, 80e9).unwrap();
    assert!(rms_rel(&back.samples, &w.samples) <= 1e-6);
}

fn peak(w: &ComplexWaveform) -> (f64, f64) {
    let n = w.len();
    let s = w.spectrum();
    let (k, v) = s
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.norm().total_cmp(&b.1.norm()))
        .unwrap();
    (dsp::bin_freq(k, n, w.sample_rate_hz), v.norm() / n as f64)
}

#[test]
fn resample_tone_80_to_100() {
    let w = tone(8000, 80e9, 10e9, 0.7);
    let r = dsp::resample(&w, 100e9).unwrap();
    let (f0, a0) = peak(&w);
    let (f1, a1) = peak(&r);
    assert_eq!(f0, 10e9);
    assert!((f1 - 10e9).abs() < 1e-3);
    assert!((20.0 * (a1 / a0).log10()).abs() <= 0.01);
}

#[test]
fn delay_basics() {
    let w = white(1024, 80e9, 5);
    assert!(rms_rel(&dsp::delay(&w, 0.0).unwrap().samples, &w.samples) <= 1e-12);
    let k = 17;
    let d = dsp::delay(&w, k as f64 / 80e9).unwrap();
    for i in 0..w.len() {
        assert_eq!(d.samples[(i + k) % w.len()], w.samples[i]);
    }
    let half = 0.5 / 80e9;
    let twice = dsp::delay(&dsp::delay(&w, half).unwrap(), half).unwrap();
    let one = dsp::delay(&w, 1.0 / 80e9).unwrap();
    assert!(rms_rel(&twice.samples, &one.samples) <= 1e-9);
    assert!(dsp::delay(&w, w.duration_s()).is_err());
}

#[test]
fn psd_integrates_white_noise_and_tone() {
    let w = white(1 << 16, 80e9, 6);
    let p = w.mean_power();
    let psd = dsp::estimate_psd(&w, 200e6).unwrap();
    let total = dsp::integrate_psd(&psd, -40e9, 40e9);
    assert!((total / p - 1.0).abs() < 0.01);

    let t = tone(1 << 16, 80e9, 7.5e9, 0.3);
    let psd = dsp::estimate_psd(&t, 100e6).unwrap();
    let around = dsp::integrate_psd(&psd, 7.0e9, 8.0e9);
    assert!((around / 0.09 - 1.0).abs() < 0.01);
}

#[test]
fn psd_of_rrc_signal_matches_design() {
    let (_, w) = common::channel(40e9, Shaping::Nyquist, 160e9, 1 << 16, 7);
    // coarse resolution averages more segments over the flat top
    let coarse = dsp::estimate_psd(&w, 400e6).unwrap();
    let flat: Vec<&(f64, f64)> = coarse.iter().filter(|p| p.0.abs() < 18e9).collect();
    let mean = flat.iter().map(|p| p.1).sum::<f64>() / flat.len() as f64;
    let h = dsp::design_rrc(0.01, 40e9).unwrap();
    for p in &flat {
        let want = h.gain(p.0).norm_sqr();
        assert!(db(p.1 / mean / want).abs() < 0.5, "{} {}", p.0, db(p.1 / mean));
    }
    let psd = dsp::estimate_psd(&w, 50e6).unwrap();
    let mean = psd.iter().filter(|p| p.0.abs() < 18e9).map(|p| p.1).sum::<f64>()
        / psd.iter().filter(|p| p.0.abs() < 18e9).count() as f64;
    let beyond = psd.iter().filter(|p| p.0.abs() >= 20.2e9 + 0.3e9).map(|p| p.1).fold(0.0, f64::max);
    assert!(db(beyond / mean) <= -60.0, "{}", db(beyond / mean));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn parseval_for_unit_modulus_filters(seed in 0u64..1000, a in -1e-18f64..1e-18, b in -1e-9f64..1e-9) {
        let w = white(2048, 80e9, seed);
        let h = FrequencyResponse::new(0.0, move |f| C64::from_polar(1.0, a * f * f + b * f));
        let y = dsp::apply_filter(&w, &h);
        prop_assert!((y.energy() / w.energy() - 1.0).abs() <= 1e-9);
    }

    #[test]
    fn resample_keeps_tone_frequency(k in 1usize..800, up in prop::bool::ANY) {
        let n = 4000;
        let fs = 80e9;
        let f = k as f64 * fs / n as f64 * if k % 2 == 0 { 1.0 } else { -1.0 };
        let w = tone(n, fs, f, 1.0);
        let r = dsp::resample(&w, if up { 100e9 } else { 60e9 }).unwrap();
        let bin = r.sample_rate_hz / r.len() as f64;
        prop_assert!((peak(&r).0 - f).abs() <= bin);
    }

    #[test]
    fn delay_preserves_energy_and_composes(seed in 0u64..1000, d1 in -50.0f64..50.0, d2 in -50.0f64..50.0) {
        let fs = 80e9;
        let w = white(1024, fs, seed);
        let a = dsp::delay(&w, d1 / fs).unwrap();
        prop_assert!((a.energy() / w.energy() - 1.0).abs() <= 1e-12);
        let ab = dsp::delay(&a, d2 / fs).unwrap();
        let direct = dsp::delay(&w, (d1 + d2) / fs).unwrap();
        prop_assert!(rms_rel(&ab.samples, &direct.samples) <= 1e-9);
    }

    #[test]
    fn rrc_half_power_at_half_bandwidth(beta in 0.0f64..=1.0, b in 1e9f64..100e9) {
        let h = dsp::design_rrc(beta, b).unwrap();
        prop_assert!((h.gain(b / 2.0).norm_sqr() - 0.5).abs() < 1e-9);
        prop_assert!((h.gain(-b / 2.0).norm_sqr() - 0.5).abs() < 1e-9);
    }
}
