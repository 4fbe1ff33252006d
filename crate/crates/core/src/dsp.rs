//! Sample-domain primitives: waveform containers, FFT filtering, rational
//! resampling, fractional delay and Welch PSD estimation.
//!
//! Every operation treats a record as one period of a periodic signal, so
//! filtering is circular convolution over the whole record.

use std::cell::RefCell;
use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

pub type C64 = Complex64;

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

fn plan(n: usize, inverse: bool) -> Arc<dyn Fft<f64>> {
    PLANNER.with(|p| {
        let mut p = p.borrow_mut();
        if inverse {
            p.plan_fft_inverse(n)
        } else {
            p.plan_fft_forward(n)
        }
    })
}

/// In-place forward DFT, unnormalized.
pub fn fft(buf: &mut [C64]) {
    if !buf.is_empty() {
        plan(buf.len(), false).process(buf);
    }
}

/// In-place inverse DFT including the 1/n factor.
pub fn ifft(buf: &mut [C64]) {
    if buf.is_empty() {
        return;
    }
    plan(buf.len(), true).process(buf);
    let s = 1.0 / buf.len() as f64;
    buf.iter_mut().for_each(|v| *v *= s);
}

/// Signed frequency of DFT bin `k` for an `n`-point transform at rate `fs`.
/// The Nyquist bin of an even transform maps to `-fs/2`.
pub fn bin_freq(k: usize, n: usize, fs: f64) -> f64 {
    let ki = if 2 * k >= n { k as f64 - n as f64 } else { k as f64 };
    ki * fs / n as f64
}

/// Uniformly sampled complex baseband field for one polarization.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexWaveform {
    pub samples: Vec<C64>,
    pub sample_rate_hz: f64,
}

impl ComplexWaveform {
    pub fn new(samples: Vec<C64>, sample_rate_hz: f64) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::param("waveform must hold at least one sample"));
        }
        if !(sample_rate_hz.is_finite() && sample_rate_hz > 0.0) {
            return Err(Error::param(format!("invalid sample rate {sample_rate_hz}")));
        }
        if samples.iter().any(|s| !(s.re.is_finite() && s.im.is_finite())) {
            return Err(Error::param("waveform contains non-finite samples"));
        }
        Ok(Self { samples, sample_rate_hz })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn energy(&self) -> f64 {
        self.samples.iter().map(|s| s.norm_sqr()).sum()
    }

    pub fn mean_power(&self) -> f64 {
        self.energy() / self.len() as f64
    }

    pub fn duration_s(&self) -> f64 {
        self.len() as f64 / self.sample_rate_hz
    }

    pub fn scale(&mut self, g: f64) {
        self.samples.iter_mut().for_each(|s| *s *= g);
    }

    /// Scale to unit mean power. A zero record is left untouched.
    pub fn normalize_power(&mut self) {
        let p = self.mean_power();
        if p > 0.0 {
            self.scale(1.0 / p.sqrt());
        }
    }

    pub fn spectrum(&self) -> Vec<C64> {
        let mut s = self.samples.clone();
        fft(&mut s);
        s
    }
}

/// X/Y polarization pair on a shared sample clock.
#[derive(Clone, Debug, PartialEq)]
pub struct DualPolWaveform {
    pub x: ComplexWaveform,
    pub y: ComplexWaveform,
}

impl DualPolWaveform {
    pub fn new(x: ComplexWaveform, y: ComplexWaveform) -> Result<Self> {
        if x.sample_rate_hz != y.sample_rate_hz || x.len() != y.len() {
            return Err(Error::param("polarizations must share rate and length"));
        }
        Ok(Self { x, y })
    }

    pub fn sample_rate_hz(&self) -> f64 {
        self.x.sample_rate_hz
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    /// Summed mean power of both polarizations.
    pub fn mean_power(&self) -> f64 {
        self.x.mean_power() + self.y.mean_power()
    }

    pub fn map<F>(&self, mut f: F) -> Result<Self>
    where
        F: FnMut(&ComplexWaveform) -> Result<ComplexWaveform>,
    {
        Self::new(f(&self.x)?, f(&self.y)?)
    }
}

type Evaluator = Arc<dyn Fn(f64) -> C64 + Send + Sync>;

/// Complex gain as a function of baseband frequency. The evaluator is
/// called with `f - center_offset_hz`.
#[derive(Clone)]
pub struct FrequencyResponse {
    pub center_offset_hz: f64,
    evaluator: Evaluator,
}

impl fmt::Debug for FrequencyResponse {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FrequencyResponse")
            .field("center_offset_hz", &self.center_offset_hz)
            .finish_non_exhaustive()
    }
}

impl FrequencyResponse {
    pub fn new<F>(center_offset_hz: f64, evaluator: F) -> Self
    where
        F: Fn(f64) -> C64 + Send + Sync + 'static,
    {
        Self { center_offset_hz, evaluator: Arc::new(evaluator) }
    }

    pub fn flat(gain: C64) -> Self {
        Self::new(0.0, move |_| gain)
    }

    /// Ideal rectangle of two-sided width `bw_hz`, edges inclusive.
    pub fn brick_wall(bw_hz: f64) -> Self {
        Self::new(0.0, move |f| {
            if f.abs() <= bw_hz / 2.0 {
                C64::new(1.0, 0.0)
            } else {
                C64::new(0.0, 0.0)
            }
        })
    }

    pub fn gain(&self, f_hz: f64) -> C64 {
        (self.evaluator)(f_hz - self.center_offset_hz)
    }

    /// Same response moved by `df_hz`.
    pub fn shifted(&self, df_hz: f64) -> Self {
        Self { center_offset_hz: self.center_offset_hz + df_hz, evaluator: self.evaluator.clone() }
    }

    /// Pointwise product, i.e. the cascade of two filters.
    pub fn cascade(&self, other: &Self) -> Self {
        let (a, b) = (self.clone(), other.clone());
        Self::new(0.0, move |f| a.gain(f) * b.gain(f))
    }

    pub fn powi(&self, n: i32) -> Self {
        let a = self.clone();
        Self::new(0.0, move |f| a.gain(f).powi(n))
    }
}

/// Root-raised-cosine amplitude response with two-sided bandwidth `B` and
/// roll-off `beta`; zero phase.
pub fn design_rrc(roll_off: f64, bandwidth_hz: f64) -> Result<FrequencyResponse> {
    if !(roll_off.is_finite() && (0.0..=1.0).contains(&roll_off)) {
        return Err(Error::param(format!("roll-off {roll_off} outside [0, 1]")));
    }
    if !(bandwidth_hz.is_finite() && bandwidth_hz > 0.0) {
        return Err(Error::param(format!("invalid RRC bandwidth {bandwidth_hz}")));
    }
    Ok(FrequencyResponse::new(0.0, move |f| C64::new(rrc_amplitude(f, roll_off, bandwidth_hz), 0.0)))
}

fn rrc_amplitude(f: f64, beta: f64, b: f64) -> f64 {
    let a = f.abs();
    let lo = b * (1.0 - beta) / 2.0;
    let hi = b * (1.0 + beta) / 2.0;
    if beta == 0.0 && a == lo {
        // half-power point of the brick-wall limit
        std::f64::consts::FRAC_1_SQRT_2
    } else if a <= lo {
        1.0
    } else if a >= hi {
        0.0
    } else {
        (0.5 * (1.0 + (PI / (b * beta) * (a - lo)).cos())).sqrt()
    }
}

/// Multiply the record's spectrum by `h` sampled on the DFT bins.
pub fn apply_filter(w: &ComplexWaveform, h: &FrequencyResponse) -> ComplexWaveform {
    let n = w.len();
    let fs = w.sample_rate_hz;
    let mut s = w.spectrum();
    for (k, v) in s.iter_mut().enumerate() {
        *v *= h.gain(bin_freq(k, n, fs));
    }
    ifft(&mut s);
    ComplexWaveform { samples: s, sample_rate_hz: fs }
}

/// Largest denominator accepted when expressing a rate ratio as p/q.
pub const MAX_RATIO_DENOMINATOR: u64 = 10_000;

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Reduced p/q with q ≤ `MAX_RATIO_DENOMINATOR` matching `r` to 1e-12.
pub fn rational_ratio(r: f64) -> Option<(u64, u64)> {
    if !(r.is_finite() && r > 0.0) {
        return None;
    }
    (1..=MAX_RATIO_DENOMINATOR).find_map(|q| {
        let p = (r * q as f64).round();
        if p >= 1.0 && ((p / q as f64) - r).abs() <= 1e-12 * r {
            let p = p as u64;
            let g = gcd(p, q);
            Some((p / g, q / g))
        } else {
            None
        }
    })
}

/// Band-limited rate conversion by zero-padding or truncating the spectrum.
///
/// Upsampling splits an even-length Nyquist bin evenly between the two new
/// bins; downsampling folds them back, so up-then-down is exact.
pub fn resample(w: &ComplexWaveform, new_rate_hz: f64) -> Result<ComplexWaveform> {
    if !(new_rate_hz.is_finite() && new_rate_hz > 0.0) {
        return Err(Error::param(format!("invalid target rate {new_rate_hz}")));
    }
    if new_rate_hz == w.sample_rate_hz {
        return Ok(w.clone());
    }
    let (p, q) = rational_ratio(new_rate_hz / w.sample_rate_hz).ok_or_else(|| {
        Error::param(format!(
            "rate ratio {new_rate_hz}/{} has no rational form with denominator <= {MAX_RATIO_DENOMINATOR}",
            w.sample_rate_hz
        ))
    })?;
    let n = w.len();
    if (n as u64 * p) % q != 0 {
        return Err(Error::param(format!(
            "record length {n} times ratio {p}/{q} is not an integer"
        )));
    }
    let m = (n as u64 * p / q) as usize;
    let x = w.spectrum();
    let mut y = vec![C64::new(0.0, 0.0); m];
    let scale = m as f64 / n as f64;
    if m > n {
        let half = n / 2;
        for k in 0..n {
            let v = x[k] * scale;
            if n % 2 == 0 && k == half {
                y[half] += v * 0.5;
                y[m - half] += v * 0.5;
            } else if 2 * k < n {
                y[k] = v;
            } else {
                y[m - (n - k)] = v;
            }
        }
    } else {
        let half = m / 2;
        for (k, slot) in y.iter_mut().enumerate() {
            if m % 2 == 0 && k == half {
                *slot = (x[half] + x[n - half]) * scale;
            } else if 2 * k < m {
                *slot = x[k] * scale;
            } else {
                *slot = x[n - (m - k)] * scale;
            }
        }
    }
    ifft(&mut y);
    Ok(ComplexWaveform { samples: y, sample_rate_hz: new_rate_hz })
}

/// Circular delay by `delay_s`. Whole-sample delays rotate the record; other
/// values apply a linear phase in the frequency domain.
pub fn delay(w: &ComplexWaveform, delay_s: f64) -> Result<ComplexWaveform> {
    if !delay_s.is_finite() || delay_s.abs() >= w.duration_s() {
        return Err(Error::param(format!(
            "delay {delay_s} s not shorter than record duration {} s",
            w.duration_s()
        )));
    }
    let n = w.len();
    let d = delay_s * w.sample_rate_hz;
    if (d - d.round()).abs() < 1e-9 {
        let k = (d.round() as i64).rem_euclid(n as i64) as usize;
        let mut s = w.samples.clone();
        s.rotate_right(k);
        return Ok(ComplexWaveform { samples: s, sample_rate_hz: w.sample_rate_hz });
    }
    let mut s = w.spectrum();
    for (k, v) in s.iter_mut().enumerate() {
        let kk = if 2 * k >= n { k as f64 - n as f64 } else { k as f64 };
        *v *= C64::from_polar(1.0, -2.0 * PI * kk * d / n as f64);
    }
    ifft(&mut s);
    Ok(ComplexWaveform { samples: s, sample_rate_hz: w.sample_rate_hz })
}

/// Multiply by exp(j2πf t). Shifts that are a whole number of DFT bins are
/// done by rotating the spectrum, which keeps the record exactly periodic.
pub fn freq_shift(w: &ComplexWaveform, shift_hz: f64) -> ComplexWaveform {
    let n = w.len();
    let fs = w.sample_rate_hz;
    let bins = shift_hz * n as f64 / fs;
    if shift_hz == 0.0 {
        return w.clone();
    }
    if (bins - bins.round()).abs() < 1e-6 {
        let k = (bins.round() as i64).rem_euclid(n as i64) as usize;
        let mut s = w.spectrum();
        s.rotate_right(k);
        ifft(&mut s);
        return ComplexWaveform { samples: s, sample_rate_hz: fs };
    }
    let step = shift_hz / fs;
    let samples = w
        .samples
        .iter()
        .enumerate()
        .map(|(i, v)| v * C64::from_polar(1.0, 2.0 * PI * (step * i as f64).fract()))
        .collect();
    ComplexWaveform { samples, sample_rate_hz: fs }
}

/// Welch PSD with a periodic Hann window and 75% overlap over the circular
/// record. Returns (frequency, density in power/Hz) in ascending frequency.
///
/// The segment length is `round(fs / rbw)`; summing density × bin width
/// recovers the record's mean power.
pub fn estimate_psd(w: &ComplexWaveform, rbw_hz: f64) -> Result<Vec<(f64, f64)>> {
    let n = w.len();
    let fs = w.sample_rate_hz;
    if !(rbw_hz.is_finite() && rbw_hz > 0.0) || rbw_hz < fs / n as f64 * (1.0 - 1e-9) {
        return Err(Error::param(format!(
            "resolution {rbw_hz} Hz finer than record allows ({} Hz)",
            fs / n as f64
        )));
    }
    let seg = ((fs / rbw_hz).round() as usize).clamp(4, n);
    let win: Vec<f64> = (0..seg).map(|i| 0.5 - 0.5 * (2.0 * PI * i as f64 / seg as f64).cos()).collect();
    let wsum: f64 = win.iter().map(|v| v * v).sum();
    let hop = (seg / 4).max(1);
    let nseg = n.div_ceil(hop);
    let mut acc = vec![0.0; seg];
    let mut buf = vec![C64::new(0.0, 0.0); seg];
    for s in 0..nseg {
        let start = s * hop;
        for (i, b) in buf.iter_mut().enumerate() {
            *b = w.samples[(start + i) % n] * win[i];
        }
        fft(&mut buf);
        for (a, b) in acc.iter_mut().zip(&buf) {
            *a += b.norm_sqr();
        }
    }
    let norm = 1.0 / (nseg as f64 * fs * wsum);
    let mut out: Vec<(f64, f64)> = acc
        .iter()
        .enumerate()
        .map(|(k, a)| (bin_freq(k, seg, fs), a * norm))
        .collect();
    out.sort_by(|a, b| a.0.total_cmp(&b.0));
    Ok(out)
}

/// Integrate a PSD over `[lo, hi]` Hz.
pub fn integrate_psd(psd: &[(f64, f64)], lo: f64, hi: f64) -> f64 {
    let df = if psd.len() > 1 { psd[1].0 - psd[0].0 } else { 0.0 };
    psd.iter().filter(|(f, _)| *f >= lo && *f <= hi).map(|(_, p)| p * df).sum()
}

/// Power of `w` in `[lo, hi]` Hz computed exactly from its DFT.
pub fn band_power(w: &ComplexWaveform, lo: f64, hi: f64) -> f64 {
    let n = w.len();
    let s = w.spectrum();
    let n2 = (n as f64).powi(2);
    s.iter()
        .enumerate()
        .filter(|(k, _)| {
            let f = bin_freq(*k, n, w.sample_rate_hz);
            f >= lo && f <= hi
        })
        .map(|(_, v)| v.norm_sqr() / n2)
        .sum()
}
