#![allow(dead_code)]

use cycspec_core::rng;
use cycspec_core::txgen::{self, Shaping, TxChannelConfig};
use cycspec_core::{ComplexWaveform, C64};
use rand_distr::{Distribution, StandardNormal};

/// Unit-power circular white Gaussian record.
pub fn white(n: usize, fs: f64, seed: u64) -> ComplexWaveform {
    let mut r = rng::stream(seed, 99);
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let samples = (0..n)
        .map(|_| {
            let re: f64 = StandardNormal.sample(&mut r);
            let im: f64 = StandardNormal.sample(&mut r);
            C64::new(re * s, im * s)
        })
        .collect();
    ComplexWaveform::new(samples, fs).unwrap()
}

pub fn tone(n: usize, fs: f64, f: f64, amp: f64) -> ComplexWaveform {
    let samples = (0..n)
        .map(|i| C64::from_polar(amp, 2.0 * std::f64::consts::PI * f * i as f64 / fs))
        .collect();
    ComplexWaveform::new(samples, fs).unwrap()
}

/// RMS of `a - b` relative to the RMS of `b`.
pub fn rms_rel(a: &[C64], b: &[C64]) -> f64 {
    assert_eq!(a.len(), b.len());
    let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y).norm_sqr()).sum();
    let den: f64 = b.iter().map(|y| y.norm_sqr()).sum();
    (num / den).sqrt()
}

/// One channel shaped at `fs`, with `n` symbols in total.
pub fn channel(baud: f64, shaping: Shaping, fs: f64, n: usize, seed: u64) -> (txgen::SymbolFrame, ComplexWaveform) {
    let frame = txgen::generate_frame(seed, n - 4096, 4096).unwrap();
    let cfg = TxChannelConfig::new(baud, shaping, 0.0, seed);
    let w = txgen::shape_channel(&frame, &cfg, fs).unwrap();
    (frame, w)
}

pub fn db(x: f64) -> f64 {
    10.0 * x.log10()
}
