//! Transmitter: QPSK frames, zero-interleaved RZ shaping into Nyquist or
//! cyclic spectra, WDM multiplexing and polarization-multiplexing emulation.

use std::f64::consts::FRAC_1_SQRT_2;

use rand::Rng;

use crate::dsp::{self, ComplexWaveform, DualPolWaveform, C64};
use crate::error::{Error, Result};
use crate::rng::{self, tag};

/// Spectral shaping of one channel.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Shaping {
    /// RRC at the baud rate.
    Nyquist,
    /// RRC over the full grid slot, filled with cyclic copies.
    Cyclic,
}

impl Shaping {
    pub fn as_str(self) -> &'static str {
        match self {
            Shaping::Nyquist => "nyquist",
            Shaping::Cyclic => "cyclic",
        }
    }

    /// Occupied bandwidth used for the PSD-ratio axis.
    pub fn signal_bw_hz(self, baud_hz: f64, grid_hz: f64) -> f64 {
        match self {
            Shaping::Nyquist => baud_hz,
            Shaping::Cyclic => grid_hz,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TxChannelConfig {
    pub baud_hz: f64,
    pub shaping: Shaping,
    pub roll_off: f64,
    pub grid_hz: f64,
    /// Carrier relative to the band center, detuning included.
    pub carrier_offset_hz: f64,
    pub seed: u64,
}

impl TxChannelConfig {
    pub fn new(baud_hz: f64, shaping: Shaping, carrier_offset_hz: f64, seed: u64) -> Self {
        Self { baud_hz, shaping, roll_off: 0.01, grid_hz: 50e9, carrier_offset_hz, seed }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.baud_hz.is_finite() && self.baud_hz > 0.0) {
            return Err(Error::param(format!("invalid baud rate {}", self.baud_hz)));
        }
        if !(0.0..=1.0).contains(&self.roll_off) {
            return Err(Error::param(format!("roll-off {} outside [0, 1]", self.roll_off)));
        }
        if self.baud_hz > self.grid_hz {
            return Err(Error::param(format!(
                "baud {} exceeds grid {}",
                self.baud_hz, self.grid_hz
            )));
        }
        Ok(())
    }

    /// Guard band fraction (grid − baud)/grid.
    pub fn excess_bandwidth(&self) -> f64 {
        (self.grid_hz - self.baud_hz) / self.grid_hz
    }
}

/// Training followed by payload; `bits` holds two bits per payload symbol.
#[derive(Clone, Debug, PartialEq)]
pub struct SymbolFrame {
    pub training: Vec<C64>,
    pub payload: Vec<C64>,
    pub bits: Vec<u8>,
}

impl SymbolFrame {
    pub fn len(&self) -> usize {
        self.training.len() + self.payload.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn symbols(&self) -> Vec<C64> {
        self.training.iter().chain(&self.payload).copied().collect()
    }
}

/// Gray map: 00→(1+j), 01→(−1+j), 11→(−1−j), 10→(1−j), all over √2.
/// `b0` selects the imaginary sign, `b1` the real sign.
pub fn gray_map(b0: u8, b1: u8) -> C64 {
    let re = if b1 == 0 { 1.0 } else { -1.0 };
    let im = if b0 == 0 { 1.0 } else { -1.0 };
    C64::new(re, im) * FRAC_1_SQRT_2
}

/// Hard decision back to the two Gray bits.
pub fn gray_demap(s: C64) -> (u8, u8) {
    ((s.im < 0.0) as u8, (s.re < 0.0) as u8)
}

fn random_symbols(rng: &mut impl Rng, n: usize, bits: Option<&mut Vec<u8>>) -> Vec<C64> {
    let mut out = Vec::with_capacity(n);
    let mut sink = Vec::new();
    let bits = bits.unwrap_or(&mut sink);
    for _ in 0..n {
        let b0 = rng.random::<bool>() as u8;
        let b1 = rng.random::<bool>() as u8;
        bits.push(b0);
        bits.push(b1);
        out.push(gray_map(b0, b1));
    }
    out
}

/// Pseudorandom Gray-mapped QPSK frame; training comes from its own stream.
pub fn generate_frame(seed: u64, n_payload: usize, n_training: usize) -> Result<SymbolFrame> {
    if n_payload == 0 || n_training == 0 {
        return Err(Error::param("frame lengths must be at least 1"));
    }
    let mut bits = Vec::with_capacity(2 * n_payload);
    let payload = random_symbols(&mut rng::stream(seed, tag::PAYLOAD), n_payload, Some(&mut bits));
    let training = random_symbols(&mut rng::stream(seed, tag::TRAINING), n_training, None);
    Ok(SymbolFrame { training, payload, bits })
}

fn lcm(a: u64, b: u64) -> u64 {
    let (mut x, mut y) = (a, b);
    while y != 0 {
        (x, y) = (y, x % y);
    }
    a / x * b
}

/// Smallest record length (symbols) of at least `min_symbols` for which every
/// rate conversion in the chain is integral and carriers at multiples of
/// `freq_step_hz` fall on DFT bins. The free factor is kept 5-smooth.
pub fn record_symbols(
    baud_hz: f64,
    grid_hz: f64,
    sim_rate_hz: f64,
    freq_step_hz: f64,
    min_symbols: usize,
) -> Result<usize> {
    let mut base = 1u64;
    for r in [grid_hz / baud_hz, sim_rate_hz / baud_hz, freq_step_hz / baud_hz] {
        let (_, q) = dsp::rational_ratio(r)
            .ok_or_else(|| Error::param(format!("ratio {r} not rational for baud {baud_hz}")))?;
        base = lcm(base, q);
    }
    let need = (min_symbols as u64).div_ceil(base);
    let k = (need..).find(|k| {
        let mut v = *k;
        for p in [2, 3, 5] {
            while v % p == 0 {
                v /= p;
            }
        }
        v == 1
    });
    Ok((k.unwrap_or(need) * base) as usize)
}

/// Zero-interleave, shape, resample to `sim_rate_hz` and normalize.
pub fn shape_channel(frame: &SymbolFrame, cfg: &TxChannelConfig, sim_rate_hz: f64) -> Result<ComplexWaveform> {
    cfg.validate()?;
    let mut rz = Vec::with_capacity(2 * frame.len());
    for s in frame.training.iter().chain(&frame.payload) {
        rz.push(*s);
        rz.push(C64::new(0.0, 0.0));
    }
    let w = ComplexWaveform::new(rz, 2.0 * cfg.baud_hz)?;
    let shaped = match cfg.shaping {
        Shaping::Nyquist => dsp::apply_filter(&w, &dsp::design_rrc(cfg.roll_off, cfg.baud_hz)?),
        Shaping::Cyclic => {
            let up = dsp::resample(&w, 2.0 * cfg.grid_hz)?;
            dsp::apply_filter(&up, &dsp::design_rrc(cfg.roll_off, cfg.grid_hz)?)
        }
    };
    let mut out = dsp::resample(&shaped, sim_rate_hz)?;
    out.normalize_power();
    Ok(out)
}

#[derive(Clone, Debug, PartialEq)]
pub struct BandConfig {
    pub channels: Vec<TxChannelConfig>,
    pub band_center_thz: f64,
    pub sim_rate_hz: f64,
}

impl BandConfig {
    /// Four channels at ±25 and ±75 GHz with identical baud and shaping.
    pub fn four_channel(baud_hz: f64, shaping: Shaping, seed: u64) -> Self {
        let channels = [-75e9, -25e9, 25e9, 75e9]
            .iter()
            .enumerate()
            .map(|(i, f)| TxChannelConfig::new(baud_hz, shaping, *f, seed.wrapping_mul(16).wrapping_add(i as u64)))
            .collect();
        Self { channels, band_center_thz: 193.075, sim_rate_hz: 320e9 }
    }
}

/// Shift each channel to its carrier and sum.
pub fn multiplex_band(waveforms: &[ComplexWaveform], cfg: &BandConfig) -> Result<ComplexWaveform> {
    if waveforms.is_empty() || waveforms.len() != cfg.channels.len() {
        return Err(Error::param("need one waveform per configured channel"));
    }
    let fs = waveforms[0].sample_rate_hz;
    let n = waveforms[0].len();
    if waveforms.iter().any(|w| w.sample_rate_hz != fs || w.len() != n) {
        return Err(Error::param("channel waveforms must share rate and length"));
    }
    let mut distinct: Vec<f64> = cfg.channels.iter().map(|c| c.carrier_offset_hz).collect();
    distinct.sort_by(f64::total_cmp);
    if distinct.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::param("channel carriers must be distinct"));
    }
    let span = cfg
        .channels
        .iter()
        .map(|c| c.carrier_offset_hz.abs() + c.grid_hz / 2.0)
        .fold(0.0, f64::max);
    if fs < 2.0 * span {
        return Err(Error::param(format!(
            "sample rate {fs} Hz cannot hold a band reaching ±{span} Hz"
        )));
    }
    let mut acc = vec![C64::new(0.0, 0.0); n];
    for (w, c) in waveforms.iter().zip(&cfg.channels) {
        let s = dsp::freq_shift(w, c.carrier_offset_hz);
        acc.iter_mut().zip(&s.samples).for_each(|(a, b)| *a += b);
    }
    ComplexWaveform::new(acc, fs)
}

/// Polarization-multiplexing emulation without the decorrelation check.
pub fn emulate_polmux_unchecked(w: &ComplexWaveform, decorrelation_symbols: usize, baud_hz: f64) -> Result<DualPolWaveform> {
    let mut x = w.clone();
    let mut y = dsp::delay(w, decorrelation_symbols as f64 / baud_hz)?;
    x.scale(FRAC_1_SQRT_2);
    y.scale(FRAC_1_SQRT_2);
    DualPolWaveform::new(x, y)
}

/// Equalizer memory in symbols the polarization delay must exceed.
pub const MIN_DECORRELATION_SYMBOLS: usize = 81;

/// y = x delayed by `decorrelation_symbols`, both scaled by 1/√2.
pub fn emulate_polmux(w: &ComplexWaveform, decorrelation_symbols: usize, baud_hz: f64) -> Result<DualPolWaveform> {
    if decorrelation_symbols < MIN_DECORRELATION_SYMBOLS {
        return Err(Error::param(format!(
            "polarization decorrelation of {decorrelation_symbols} symbols is within the equalizer memory"
        )));
    }
    emulate_polmux_unchecked(w, decorrelation_symbols, baud_hz)
}

/// Frame, band and metadata for one transmitted WDM band.
#[derive(Clone, Debug)]
pub struct TxBand {
    pub band: DualPolWaveform,
    /// Frame carried by each channel, in configuration order.
    pub frames: Vec<SymbolFrame>,
}

/// Build frames for every channel, shape, multiplex and pol-mux the band.
pub fn generate_band(cfg: &BandConfig, n_symbols: usize, n_training: usize, decorrelation_symbols: usize) -> Result<TxBand> {
    if n_symbols <= n_training {
        return Err(Error::param("record must be longer than the training block"));
    }
    let mut frames = Vec::with_capacity(cfg.channels.len());
    let mut waves = Vec::with_capacity(cfg.channels.len());
    for c in &cfg.channels {
        let f = generate_frame(c.seed, n_symbols - n_training, n_training)?;
        waves.push(shape_channel(&f, c, cfg.sim_rate_hz)?);
        frames.push(f);
    }
    let band = multiplex_band(&waves, cfg)?;
    let baud = cfg.channels[0].baud_hz;
    let band = emulate_polmux(&band, decorrelation_symbols, baud)?;
    Ok(TxBand { band, frames })
}
