//! Coherent receiver: channel selection, dispersion compensation, CFO
//! removal, training synchronization, LMS→CMA 2×2 equalization, pilot-aided
//! phase recovery and bit-error counting.

use std::f64::consts::{FRAC_PI_2, PI};

use crate::channel::{dispersion_response, SpanConfig};
use crate::dsp::{self, bin_freq, ComplexWaveform, DualPolWaveform, FrequencyResponse, C64};
use crate::error::{Error, Result};
use crate::txgen::{gray_demap, gray_map, SymbolFrame};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EqualizerConfig {
    pub n_taps: usize,
    pub mu_lms: f64,
    pub mu_cma: f64,
    pub training_symbols: usize,
    pub cma_radius: f64,
    /// Passes of LMS over the training block.
    pub lms_epochs: usize,
}

impl Default for EqualizerConfig {
    fn default() -> Self {
        Self { n_taps: 81, mu_lms: 1e-3, mu_cma: 1e-4, training_symbols: 4096, cma_radius: 1.0, lms_epochs: 4 }
    }
}

impl EqualizerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_taps % 2 == 0 {
            return Err(Error::param("equalizer tap count must be odd"));
        }
        if !(self.mu_lms > 0.0 && self.mu_cma > 0.0 && self.cma_radius > 0.0) {
            return Err(Error::param("equalizer step sizes and radius must be positive"));
        }
        if self.training_symbols < 10 * self.n_taps {
            return Err(Error::param(format!(
                "training of {} symbols is shorter than 10 x {} taps",
                self.training_symbols, self.n_taps
            )));
        }
        if self.lms_epochs == 0 {
            return Err(Error::param("at least one LMS epoch is required"));
        }
        Ok(())
    }
}

/// Outcome of receiving one channel.
#[derive(Clone, Debug, PartialEq)]
pub struct RxResult {
    pub symbols_x: Vec<C64>,
    pub symbols_y: Vec<C64>,
    pub cfo_hz: f64,
    pub sync_lag: usize,
    pub ber: f64,
    pub bit_errors: u64,
    pub bits_counted: u64,
}

/// Shift the channel to baseband, apply a flat-top prefilter and resample to
/// two samples per symbol.
pub fn select_channel(band: &DualPolWaveform, channel_center_hz: f64, prefilter_bw_hz: f64, baud_hz: f64) -> Result<DualPolWaveform> {
    let fs = band.sample_rate_hz();
    if channel_center_hz.abs() >= fs / 2.0 {
        return Err(Error::param(format!(
            "channel center {channel_center_hz} Hz outside the simulated band ±{} Hz",
            fs / 2.0
        )));
    }
    if !(prefilter_bw_hz > 0.0) {
        return Err(Error::param("prefilter bandwidth must be positive"));
    }
    let pre = FrequencyResponse::brick_wall(prefilter_bw_hz);
    band.map(|w| {
        let bb = dsp::freq_shift(w, -channel_center_hz);
        dsp::resample(&dsp::apply_filter(&bb, &pre), 2.0 * baud_hz)
    })
}

/// Remove everything outside ±bw/2, used to strip cyclic copies.
pub fn zero_outside(w: &DualPolWaveform, bw_hz: f64) -> Result<DualPolWaveform> {
    let h = FrequencyResponse::brick_wall(bw_hz);
    w.map(|p| Ok(dsp::apply_filter(p, &h)))
}

/// Fourth-power CFO estimate over ±baud/8 with parabolic peak refinement.
pub fn estimate_cfo(w: &DualPolWaveform, baud_hz: f64) -> Result<f64> {
    let n = w.len();
    let fs = w.sample_rate_hz();
    let pow4 = |p: &ComplexWaveform| {
        let mut s: Vec<C64> = p.samples.iter().map(|v| v.powi(4)).collect();
        dsp::fft(&mut s);
        s
    };
    let (sx, sy) = (pow4(&w.x), pow4(&w.y));
    let psd: Vec<f64> = sx.iter().zip(&sy).map(|(a, b)| a.norm_sqr() + b.norm_sqr()).collect();
    let limit = 4.0 * baud_hz / 8.0;
    let bins: Vec<usize> = (0..n).filter(|k| bin_freq(*k, n, fs).abs() <= limit).collect();
    let mean = bins.iter().map(|k| psd[*k]).sum::<f64>() / bins.len() as f64;
    let &kp = bins
        .iter()
        .max_by(|a, b| psd[**a].total_cmp(&psd[**b]))
        .ok_or_else(|| Error::param("empty CFO search range"))?;
    let ratio_db = 10.0 * (psd[kp] / mean).log10();
    if !(ratio_db >= 6.0) {
        return Err(Error::CfoEstimation(ratio_db));
    }
    let (a, b, c) = (psd[(kp + n - 1) % n].sqrt(), psd[kp].sqrt(), psd[(kp + 1) % n].sqrt());
    let den = a - 2.0 * b + c;
    let delta = if den.abs() > 0.0 { 0.5 * (a - c) / den } else { 0.0 };
    Ok((bin_freq(kp, n, fs) + delta * fs / n as f64) / 4.0)
}

/// Multiply both polarizations by exp(−j2π·f·t).
pub fn derotate(w: &DualPolWaveform, cfo_hz: f64) -> DualPolWaveform {
    if cfo_hz == 0.0 {
        return w.clone();
    }
    let step = cfo_hz / w.sample_rate_hz();
    let rot = |p: &ComplexWaveform| ComplexWaveform {
        samples: p
            .samples
            .iter()
            .enumerate()
            .map(|(i, v)| v * C64::from_polar(1.0, -2.0 * PI * (step * i as f64).fract()))
            .collect(),
        sample_rate_hz: p.sample_rate_hz,
    };
    DualPolWaveform { x: rot(&w.x), y: rot(&w.y) }
}

/// Fraction of ±fs/2 over which the compensator is exact.
pub const CD_TAPER_PASSBAND: f64 = 0.8;

fn cd_taper(f: f64, fs: f64) -> f64 {
    let edge = CD_TAPER_PASSBAND * fs / 2.0;
    let a = f.abs();
    if a <= edge {
        1.0
    } else if a >= fs / 2.0 {
        0.0
    } else {
        0.5 * (1.0 + (PI * (a - edge) / (fs / 2.0 - edge)).cos())
    }
}

/// Inverse dispersion response with the band-edge taper used by the
/// compensator.
pub fn cd_compensation_response(span: &SpanConfig, n_spans: usize, fs: f64) -> FrequencyResponse {
    let h = dispersion_response(span, n_spans, true);
    FrequencyResponse::new(0.0, move |f| h.gain(f) * cd_taper(f, fs))
}

/// Dispersion memory in samples: group-delay spread across the sampled band.
pub fn dispersion_memory_samples(span: &SpanConfig, n_spans: usize, fs: f64) -> usize {
    (span.beta_s2() * n_spans as f64 * fs * fs).ceil() as usize
}

/// Tapered FIR for the compensator, indexed from `-half` to `+half`.
pub fn cd_fir(span: &SpanConfig, n_spans: usize, fs: f64) -> Vec<C64> {
    let mem = dispersion_memory_samples(span, n_spans, fs);
    let nd = (8 * (mem + 256)).next_power_of_two();
    let h = cd_compensation_response(span, n_spans, fs);
    let mut taps: Vec<C64> = (0..nd).map(|k| h.gain(bin_freq(k, nd, fs))).collect();
    dsp::ifft(&mut taps);
    let total: f64 = taps.iter().map(|v| v.norm_sqr()).sum();
    let mut kept = taps[0].norm_sqr();
    let mut half = 0;
    while half < nd / 2 - 1 && total - kept > 1e-14 * total {
        half += 1;
        kept += taps[half].norm_sqr() + taps[nd - half].norm_sqr();
    }
    (0..=2 * half).map(|i| taps[(i + nd - half) % nd]).collect()
}

/// Full-record compensation with the same tapered response.
pub fn compensate_dispersion_full(w: &DualPolWaveform, span: &SpanConfig, n_spans: usize) -> Result<DualPolWaveform> {
    if n_spans == 0 || span.length_m == 0.0 {
        return Ok(w.clone());
    }
    let h = cd_compensation_response(span, n_spans, w.sample_rate_hz());
    w.map(|p| Ok(dsp::apply_filter(p, &h)))
}

/// Overlap-add compensation with the default block (4× the FIR length).
pub fn compensate_dispersion(w: &DualPolWaveform, span: &SpanConfig, n_spans: usize) -> Result<DualPolWaveform> {
    if n_spans == 0 || span.length_m == 0.0 {
        return Ok(w.clone());
    }
    let fir_len = cd_fir(span, n_spans, w.sample_rate_hz()).len();
    compensate_dispersion_block(w, span, n_spans, (4 * fir_len).next_power_of_two())
}

/// Overlap-add compensation over circular blocks of `block_len` samples.
pub fn compensate_dispersion_block(
    w: &DualPolWaveform,
    span: &SpanConfig,
    n_spans: usize,
    block_len: usize,
) -> Result<DualPolWaveform> {
    if n_spans == 0 || span.length_m == 0.0 {
        return Ok(w.clone());
    }
    let fs = w.sample_rate_hz();
    let fir = cd_fir(span, n_spans, fs);
    let half = fir.len() / 2;
    if block_len < fir.len() {
        return Err(Error::param(format!(
            "OLA block of {block_len} samples is shorter than the {}-sample dispersion memory",
            fir.len()
        )));
    }
    let nfft = (block_len + fir.len() - 1).next_power_of_two();
    let mut hf = vec![C64::new(0.0, 0.0); nfft];
    hf[..fir.len()].copy_from_slice(&fir);
    dsp::fft(&mut hf);
    let ola = |p: &ComplexWaveform| {
        let n = p.len();
        let mut out = vec![C64::new(0.0, 0.0); n];
        let mut buf = vec![C64::new(0.0, 0.0); nfft];
        let mut start = 0;
        while start < n {
            let len = block_len.min(n - start);
            buf.iter_mut().for_each(|v| *v = C64::new(0.0, 0.0));
            buf[..len].copy_from_slice(&p.samples[start..start + len]);
            dsp::fft(&mut buf);
            buf.iter_mut().zip(&hf).for_each(|(a, b)| *a *= b);
            dsp::ifft(&mut buf);
            for (i, v) in buf[..len + fir.len() - 1].iter().enumerate() {
                let idx = (start + i + n * (half / n + 1) - half) % n;
                out[idx] += v;
            }
            start += len;
        }
        ComplexWaveform { samples: out, sample_rate_hz: p.sample_rate_hz }
    };
    Ok(DualPolWaveform { x: ola(&w.x), y: ola(&w.y) })
}

/// Synchronization result; lags are circular.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SyncResult {
    pub lag_symbols: usize,
    /// Sample phase (0 or 1) of the two-sample-per-symbol input.
    pub phase: usize,
    pub lag_samples: usize,
    pub ratio_db: f64,
}

fn circular_xcorr(rx: &[C64], tf: &[C64]) -> Vec<f64> {
    let mut r = rx.to_vec();
    dsp::fft(&mut r);
    r.iter_mut().zip(tf).for_each(|(a, b)| *a *= b.conj());
    dsp::ifft(&mut r);
    r.iter().map(|v| v.norm_sqr()).collect()
}

/// Locate the X-tributary training block at two samples per symbol.
///
/// The Y tributary repeats the frame `decorrelation_symbols` later, so the
/// metric adds the correlation at `l + D`; the X lag is then the unique
/// maximum and its Y echoes are excluded from the second-peak search.
pub fn synchronize(w: &DualPolWaveform, training: &[C64], decorrelation_symbols: usize) -> Result<SyncResult> {
    let n = w.len() / 2;
    if training.len() > n {
        return Err(Error::param("training longer than record"));
    }
    let d = decorrelation_symbols % n;
    let mut tf = vec![C64::new(0.0, 0.0); n];
    tf[..training.len()].copy_from_slice(training);
    dsp::fft(&mut tf);
    let mut best: Option<(usize, usize, f64, Vec<f64>)> = None;
    for phase in 0..2 {
        let dec = |p: &ComplexWaveform| -> Vec<C64> { (0..n).map(|k| p.samples[2 * k + phase]).collect() };
        let cx = circular_xcorr(&dec(&w.x), &tf);
        let cy = circular_xcorr(&dec(&w.y), &tf);
        let m: Vec<f64> = (0..n).map(|l| cx[l] + cy[l] + cx[(l + d) % n] + cy[(l + d) % n]).collect();
        let (l, v) = m.iter().enumerate().fold((0, f64::MIN), |acc, (i, v)| if *v > acc.1 { (i, *v) } else { acc });
        if best.as_ref().is_none_or(|b| v > b.2) {
            best = Some((phase, l, v, m));
        }
    }
    let (phase, lag, peak, m) = best.ok_or_else(|| Error::param("empty record"))?;
    let near = |l: usize, c: usize| {
        let dd = (l + n - c) % n;
        dd <= 2 || dd >= n - 2
    };
    let second = m
        .iter()
        .enumerate()
        .filter(|(l, _)| !(near(*l, lag) || near(*l, (lag + d) % n) || near(*l, (lag + n - d) % n)))
        .map(|(_, v)| *v)
        .fold(0.0, f64::max);
    let ratio_db = 10.0 * (peak / second.max(f64::MIN_POSITIVE)).log10();
    if ratio_db < 3.0 {
        return Err(Error::Sync(ratio_db));
    }
    Ok(SyncResult { lag_symbols: lag, phase, lag_samples: 2 * lag + phase, ratio_db })
}

/// Rotate both polarizations left by `lag_samples`.
pub fn align(w: &DualPolWaveform, lag_samples: usize) -> DualPolWaveform {
    let rot = |p: &ComplexWaveform| {
        let mut s = p.samples.clone();
        let n = s.len();
        s.rotate_left(lag_samples % n);
        ComplexWaveform { samples: s, sample_rate_hz: p.sample_rate_hz }
    };
    DualPolWaveform { x: rot(&w.x), y: rot(&w.y) }
}

struct Butterfly {
    taps: usize,
    /// Row r holds [w_rx | w_ry] for output r.
    w: [Vec<C64>; 2],
}

impl Butterfly {
    fn new(taps: usize) -> Self {
        let c = taps / 2;
        let mut wx = vec![C64::new(0.0, 0.0); 2 * taps];
        let mut wy = vec![C64::new(0.0, 0.0); 2 * taps];
        wx[c] = C64::new(1.0, 0.0);
        wy[taps + c] = C64::new(1.0, 0.0);
        Self { taps, w: [wx, wy] }
    }

    #[inline]
    fn output(&self, r: usize, ux: &[C64], uy: &[C64]) -> C64 {
        let w = &self.w[r];
        let mut acc = C64::new(0.0, 0.0);
        for i in 0..self.taps {
            acc += w[i] * ux[i] + w[self.taps + i] * uy[i];
        }
        acc
    }

    #[inline]
    fn update(&mut self, r: usize, g: C64, ux: &[C64], uy: &[C64]) {
        let t = self.taps;
        let w = &mut self.w[r];
        for i in 0..t {
            w[i] += g * ux[i].conj();
            w[t + i] += g * uy[i].conj();
        }
    }
}

/// Wrap-padded copy so every tap window is a contiguous slice.
fn wrap_pad(p: &ComplexWaveform, taps: usize) -> Vec<C64> {
    let n = p.len();
    let c = taps / 2;
    let g = p.mean_power().sqrt().max(f64::MIN_POSITIVE);
    (0..n + taps).map(|j| p.samples[(j + n - c) % n] / g).collect()
}

/// 2×2 half-symbol-spaced butterfly: data-aided LMS on the training blocks,
/// then CMA over the whole record; the second CMA pass is the output.
///
/// Input must be aligned so the X training starts at sample 0. Output X
/// trains on symbols `[0, n_train)`, output Y on `[D, D + n_train)`.
pub fn equalize(
    w: &DualPolWaveform,
    cfg: &EqualizerConfig,
    training: &[C64],
    decorrelation_symbols: usize,
) -> Result<(Vec<C64>, Vec<C64>)> {
    cfg.validate()?;
    let n = w.len() / 2;
    let nt = cfg.training_symbols.min(training.len());
    if nt + decorrelation_symbols > n {
        return Err(Error::param("record too short for training"));
    }
    let t = cfg.n_taps;
    let xe = wrap_pad(&w.x, t);
    let ye = wrap_pad(&w.y, t);
    let win = |k: usize| (&xe[2 * k..2 * k + t], &ye[2 * k..2 * k + t]);
    let mut bf = Butterfly::new(t);

    for _ in 0..cfg.lms_epochs {
        for j in 0..nt {
            for (r, k) in [(0, j), (1, (j + decorrelation_symbols) % n)] {
                let (ux, uy) = win(k);
                let e = training[j] - bf.output(r, ux, uy);
                bf.update(r, e * cfg.mu_lms, ux, uy);
            }
        }
    }

    let r2 = cfg.cma_radius * cfg.cma_radius;
    let mut out = [vec![C64::new(0.0, 0.0); n], vec![C64::new(0.0, 0.0); n]];
    for pass in 0..2 {
        for k in 0..n {
            let (ux, uy) = win(k);
            for (r, o) in out.iter_mut().enumerate() {
                let y = bf.output(r, ux, uy);
                let e = r2 - y.norm_sqr();
                bf.update(r, y * (e * cfg.mu_cma), ux, uy);
                if pass == 1 {
                    o[k] = y;
                }
            }
        }
    }
    let [sx, sy] = out;
    let cross = sx.iter().zip(&sy).map(|(a, b)| a * b.conj()).sum::<C64>().norm();
    let px: f64 = sx.iter().map(|v| v.norm_sqr()).sum();
    let py: f64 = sy.iter().map(|v| v.norm_sqr()).sum();
    let rho = cross / (px * py).sqrt().max(f64::MIN_POSITIVE);
    if rho > 0.9 {
        return Err(Error::EqualizerCollapse(rho));
    }
    Ok((sx, sy))
}

fn qpsk_decide(v: C64) -> C64 {
    let (b0, b1) = gray_demap(v);
    gray_map(b0, b1)
}

fn wrap_near(phi: f64, reference: f64) -> f64 {
    phi - 2.0 * PI * ((phi - reference) / (2.0 * PI)).round()
}

/// Block-wise ML phase estimate, seeded by the pilots at `pilot_start` and
/// propagated circularly with decision-directed blocks; the phase is
/// interpolated linearly between block centers before derotation.
pub fn estimate_phase(symbols: &[C64], pilots: &[C64], pilot_start: usize, block_len: usize) -> Result<Vec<C64>> {
    let n = symbols.len();
    if n == 0 || block_len == 0 {
        return Err(Error::param("phase estimation needs symbols and a positive block"));
    }
    let nb = n.div_ceil(block_len);
    let b0 = (pilot_start % n) / block_len;
    let pilot_at = |k: usize| {
        let i = (k + n - pilot_start % n) % n;
        (i < pilots.len()).then(|| pilots[i])
    };
    // unwrapped phase and center in a coordinate starting at block b0
    let mut phis = Vec::with_capacity(nb);
    let mut centers = Vec::with_capacity(nb);
    let mut prev = 0.0;
    for i in 0..nb {
        let b = (b0 + i) % nb;
        let (lo, hi) = (b * block_len, ((b + 1) * block_len).min(n));
        let rot = C64::from_polar(1.0, -prev);
        let acc: C64 = (lo..hi)
            .map(|k| {
                let r = symbols[k];
                let a = pilot_at(k).unwrap_or_else(|| qpsk_decide(r * rot));
                r * a.conj()
            })
            .sum();
        let phi = if acc.norm() > 0.0 { wrap_near(acc.arg(), prev) } else { prev };
        phis.push(phi);
        let u0 = (lo + n - b0 * block_len) % n;
        centers.push(u0 as f64 + (hi - lo) as f64 / 2.0 - 0.5);
        prev = phi;
    }
    let (c_first, c_last) = (centers[0], centers[nb - 1]);
    let (p_first, p_last) = (phis[0], phis[nb - 1]);
    let mut out = Vec::with_capacity(n);
    for (k, r) in symbols.iter().enumerate() {
        let u = ((k + n - b0 * block_len) % n) as f64;
        let phi = if nb == 1 {
            p_first
        } else if u < c_first {
            let (cl, pl) = (c_last - n as f64, p_last);
            let pf = wrap_near(p_first, pl);
            pl + (pf - pl) * (u - cl) / (c_first - cl)
        } else if u > c_last {
            let pf = wrap_near(p_first, p_last);
            p_last + (pf - p_last) * (u - c_last) / (c_first + n as f64 - c_last)
        } else {
            let i = centers.partition_point(|c| *c <= u).min(nb - 1).max(1);
            let (c0, c1) = (centers[i - 1], centers[i]);
            phis[i - 1] + (phis[i] - phis[i - 1]) * (u - c0) / (c1 - c0)
        };
        out.push(r * C64::from_polar(1.0, -phi));
    }
    Ok(out)
}

/// Tributary offset and quarter-turn rotation that best match the training.
fn resolve(symbols: &[C64], frame: &SymbolFrame, offsets: [usize; 2]) -> (usize, usize, f64) {
    let n = symbols.len();
    offsets
        .iter()
        .map(|&o| {
            let c: C64 = frame
                .training
                .iter()
                .enumerate()
                .map(|(j, t)| symbols[(o + j) % n] * t.conj())
                .sum();
            let rot = ((c.arg() / FRAC_PI_2).round() as i64).rem_euclid(4) as usize;
            (o, rot, c.norm())
        })
        .fold((0, 0, f64::MIN), |a, b| if b.2 > a.2 { b } else { a })
}

/// Count payload bit errors on both outputs over record positions
/// `[guard, n - guard)`, after resolving tributary and rotation ambiguity.
pub fn count_errors(
    symbols_x: &[C64],
    symbols_y: &[C64],
    frame: &SymbolFrame,
    decorrelation_symbols: usize,
    guard_symbols: usize,
) -> Result<(u64, u64)> {
    let n = frame.len();
    if symbols_x.len() != n || symbols_y.len() != n {
        return Err(Error::Counting(format!(
            "expected {n} symbols per output, got {} and {}",
            symbols_x.len(),
            symbols_y.len()
        )));
    }
    if 2 * guard_symbols >= n {
        return Err(Error::Counting("guard leaves nothing to count".into()));
    }
    let offsets = [0, decorrelation_symbols % n];
    let rx = resolve(symbols_x, frame, offsets);
    let ry = resolve(symbols_y, frame, offsets);
    if rx.0 == ry.0 {
        return Err(Error::Counting("both outputs resolve to the same tributary".into()));
    }
    let ntr = frame.training.len();
    let (mut errors, mut bits) = (0u64, 0u64);
    for (s, (o, rot, _)) in [(symbols_x, rx), (symbols_y, ry)] {
        let undo = C64::from_polar(1.0, -(rot as f64) * FRAC_PI_2);
        for k in guard_symbols..n - guard_symbols {
            let i = (k + n - o) % n;
            if i < ntr {
                continue;
            }
            let p = i - ntr;
            let (b0, b1) = gray_demap(s[k] * undo);
            errors += (b0 != frame.bits[2 * p]) as u64 + (b1 != frame.bits[2 * p + 1]) as u64;
            bits += 2;
        }
    }
    if bits == 0 {
        return Err(Error::Counting("no payload symbols inside the counting window".into()));
    }
    Ok((errors, bits))
}

/// Receiver settings.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RxConfig {
    pub prefilter_bw_hz: f64,
    pub equalizer: EqualizerConfig,
    pub phase_block: usize,
    pub decorrelation_symbols: usize,
    pub guard_symbols: usize,
    /// Strip the cyclic copies outside ±baud/2 before equalization.
    pub zero_redundant_strips: bool,
}

impl Default for RxConfig {
    fn default() -> Self {
        Self {
            prefilter_bw_hz: 60e9,
            equalizer: EqualizerConfig::default(),
            phase_block: 64,
            decorrelation_symbols: 256,
            guard_symbols: 1024,
            zero_redundant_strips: false,
        }
    }
}

/// Where the wanted channel sits and what dispersion it accumulated.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RxTarget {
    pub center_hz: f64,
    pub baud_hz: f64,
    pub span: SpanConfig,
    pub n_spans: usize,
}

/// Full receive chain for one channel of a band.
pub fn receive(band: &DualPolWaveform, frame: &SymbolFrame, target: &RxTarget, cfg: &RxConfig) -> Result<RxResult> {
    let mut w = select_channel(band, target.center_hz, cfg.prefilter_bw_hz, target.baud_hz)?;
    if cfg.zero_redundant_strips {
        w = zero_outside(&w, target.baud_hz)?;
    }
    let w = compensate_dispersion(&w, &target.span, target.n_spans)?;
    let cfo = estimate_cfo(&w, target.baud_hz)?;
    let w = derotate(&w, cfo);
    let d = cfg.decorrelation_symbols;
    let sync = synchronize(&w, &frame.training, d)?;
    let w = align(&w, sync.lag_samples);
    let (sx, sy) = equalize(&w, &cfg.equalizer, &frame.training, d)?;
    let sx = estimate_phase(&sx, &frame.training, 0, cfg.phase_block)?;
    let sy = estimate_phase(&sy, &frame.training, d, cfg.phase_block)?;
    let (bit_errors, bits_counted) = count_errors(&sx, &sy, frame, d, cfg.guard_symbols)?;
    Ok(RxResult {
        symbols_x: sx,
        symbols_y: sy,
        cfo_hz: cfo,
        sync_lag: sync.lag_symbols,
        ber: bit_errors as f64 / bits_counted as f64,
        bit_errors,
        bits_counted,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::txgen::generate_frame;

    #[test]
    fn equalizer_config_checks() {
        assert!(EqualizerConfig::default().validate().is_ok());
        assert!(EqualizerConfig { n_taps: 80, ..Default::default() }.validate().is_err());
        assert!(EqualizerConfig { training_symbols: 500, ..Default::default() }.validate().is_err());
        assert!(EqualizerConfig { mu_cma: 0.0, ..Default::default() }.validate().is_err());
    }

    #[test]
    fn phase_constant_rotation() {
        let f = generate_frame(3, 4000, 512).unwrap();
        let rot = C64::from_polar(1.0, PI / 7.0);
        let s: Vec<C64> = f.symbols().iter().map(|v| v * rot).collect();
        let out = estimate_phase(&s, &f.training, 0, 64).unwrap();
        for (o, t) in out.iter().zip(f.symbols()) {
            assert!((o * t.conj()).arg().abs() < 0.01);
        }
    }

    #[test]
    fn counting_perfect_and_single_flip() {
        let d = 256;
        let f = generate_frame(5, 20000, 1024).unwrap();
        let sx = f.symbols();
        let mut sy = sx.clone();
        sy.rotate_right(d);
        let (e, b) = count_errors(&sx, &sy, &f, d, 0).unwrap();
        assert_eq!(e, 0);
        assert_eq!(b, 2 * 2 * 20000);
        let mut sx2 = sx.clone();
        sx2[5000] = sx2[5000].conj();
        let (e, _) = count_errors(&sx2, &sy, &f, d, 0).unwrap();
        assert_eq!(e, 1);
        assert!(count_errors(&sx, &sx, &f, d, 0).is_err());
    }
}
