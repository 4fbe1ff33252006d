//! Link model: ASE loading, SSMF dispersion, WSS add/drop node and the
//! recirculating loop.
//!
//! Frequencies are relative to the band center unless stated otherwise.

use std::f64::consts::PI;

use rand_distr::{Distribution, Normal};
use statrs::function::erf::erf;

use crate::dsp::{self, ComplexWaveform, DualPolWaveform, FrequencyResponse, C64};
use crate::error::{Error, Result};
use crate::rng::{self, SimRng};

const C_LIGHT: f64 = 299_792_458.0;
const FWHM_PER_SIGMA: f64 = 2.354_820_045_030_949;

/// Flat-top WSS passband: a rectangle convolved with a Gaussian edge.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WssFilterModel {
    pub center_hz: f64,
    pub bandwidth_3db_hz: f64,
    /// FWHM of the Gaussian that smooths the rectangle edges.
    pub edge_fwhm_hz: f64,
}

impl Default for WssFilterModel {
    fn default() -> Self {
        Self { center_hz: 25e9, bandwidth_3db_hz: 43e9, edge_fwhm_hz: 6e9 }
    }
}

impl WssFilterModel {
    pub fn sigma_hz(&self) -> f64 {
        self.edge_fwhm_hz / FWHM_PER_SIGMA
    }

    fn raw(f: f64, half: f64, sigma: f64) -> f64 {
        let k = sigma * std::f64::consts::SQRT_2;
        0.5 * (erf((half - f) / k) + erf((half + f) / k))
    }

    /// Rectangle half-width giving |H|² = 0.5 at ±bandwidth_3db/2.
    pub fn rect_half_width_hz(&self) -> f64 {
        let s = self.sigma_hz();
        let edge = self.bandwidth_3db_hz / 2.0;
        let (mut lo, mut hi) = (0.0, 4.0 * edge + 10.0 * s);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if Self::raw(edge, mid, s).powi(2) < 0.5 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.bandwidth_3db_hz > 0.0 && self.edge_fwhm_hz > 0.0) {
            return Err(Error::param("WSS bandwidth and edge width must be positive"));
        }
        Ok(())
    }
}

/// Drop-port amplitude response centered on `m.center_hz`.
pub fn wss_response(m: &WssFilterModel) -> FrequencyResponse {
    let half = m.rect_half_width_hz();
    let s = m.sigma_hz();
    FrequencyResponse::new(m.center_hz, move |f| C64::new(WssFilterModel::raw(f, half, s), 0.0))
}

/// Express-port notch, power-complementary to the drop port.
pub fn express_response(m: &WssFilterModel) -> FrequencyResponse {
    let d = wss_response(m);
    FrequencyResponse::new(0.0, move |f| C64::new((1.0 - d.gain(f).norm_sqr()).max(0.0).sqrt(), 0.0))
}

/// -3 dB width of `n` cascaded drop filters, by bisection on |H|^(2n).
pub fn cascade_bandwidth_hz(m: &WssFilterModel, n: u32) -> f64 {
    let h = wss_response(&WssFilterModel { center_hz: 0.0, ..*m });
    let (mut lo, mut hi) = (0.0, m.bandwidth_3db_hz);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if h.gain(mid).norm_sqr().powi(n as i32) > 0.5 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo + hi
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum NodeMode {
    AllPass,
    /// Drop and re-add the slot centered at `target_hz`.
    AddDrop { target_hz: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NodeConfig {
    pub mode: NodeMode,
    /// Edge shape and width of the drop filter; its center follows the target.
    pub drop_filter: WssFilterModel,
    pub express_delay_s: f64,
    pub grid_hz: f64,
    /// Absolute frequency of the band center, used for the on-grid check.
    pub band_center_hz: f64,
}

impl NodeConfig {
    pub fn all_pass() -> Self {
        Self {
            mode: NodeMode::AllPass,
            drop_filter: WssFilterModel::default(),
            express_delay_s: 0.0,
            grid_hz: 50e9,
            band_center_hz: 193.075e12,
        }
    }

    pub fn add_drop(target_hz: f64, drop_filter: WssFilterModel, express_delay_s: f64) -> Self {
        Self {
            mode: NodeMode::AddDrop { target_hz },
            drop_filter: WssFilterModel { center_hz: target_hz, ..drop_filter },
            express_delay_s,
            grid_hz: 50e9,
            band_center_hz: 193.075e12,
        }
    }

    /// Combined node transfer for a channel at `f` (drop + delayed express).
    pub fn transfer(&self) -> Result<FrequencyResponse> {
        match self.mode {
            NodeMode::AllPass => Ok(FrequencyResponse::flat(C64::new(1.0, 0.0))),
            NodeMode::AddDrop { target_hz } => {
                let slot = (self.band_center_hz + target_hz) / self.grid_hz;
                if (slot - slot.round()).abs() > 1e-6 {
                    return Err(Error::param(format!(
                        "add/drop target {target_hz} Hz is off the {} Hz grid",
                        self.grid_hz
                    )));
                }
                self.drop_filter.validate()?;
                let m = WssFilterModel { center_hz: target_hz, ..self.drop_filter };
                let (hd, he) = (wss_response(&m), express_response(&m));
                let tau = self.express_delay_s;
                Ok(FrequencyResponse::new(0.0, move |f| {
                    hd.gain(f) + he.gain(f) * C64::from_polar(1.0, -2.0 * PI * f * tau)
                }))
            }
        }
    }
}

/// Drop path plus express path delayed by `express_delay_s`, with the
/// coupler loss removed so an express channel keeps unit gain.
pub fn apply_node(band: &DualPolWaveform, node: &NodeConfig) -> Result<DualPolWaveform> {
    if node.mode == NodeMode::AllPass {
        return Ok(band.clone());
    }
    if node.express_delay_s.abs() >= band.x.duration_s() {
        return Err(Error::param("express delay exceeds record duration"));
    }
    let h = node.transfer()?;
    band.map(|w| Ok(dsp::apply_filter(w, &h)))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpanConfig {
    pub length_m: f64,
    pub dispersion_ps_nm_km: f64,
    pub reference_lambda_m: f64,
}

impl Default for SpanConfig {
    fn default() -> Self {
        Self { length_m: 80e3, dispersion_ps_nm_km: 17.0, reference_lambda_m: 1552.7e-9 }
    }
}

impl SpanConfig {
    /// D·L·λ²/c in s², the coefficient of the quadratic phase.
    pub fn beta_s2(&self) -> f64 {
        self.dispersion_ps_nm_km * 1e-6 * self.length_m * self.reference_lambda_m.powi(2) / C_LIGHT
    }

    /// Group-delay spread over a bandwidth.
    pub fn delay_spread_s(&self, bw_hz: f64) -> f64 {
        self.beta_s2() * bw_hz
    }

    pub fn validate(&self) -> Result<()> {
        let ok = [self.length_m, self.dispersion_ps_nm_km, self.reference_lambda_m]
            .iter()
            .all(|v| v.is_finite() && *v >= 0.0);
        if !ok || self.reference_lambda_m == 0.0 {
            return Err(Error::param("span parameters must be finite and non-negative"));
        }
        Ok(())
    }
}

/// exp(−jπ·β·f²) for `n_spans` spans. Sign flips with `inverse`.
pub fn dispersion_response(span: &SpanConfig, n_spans: usize, inverse: bool) -> FrequencyResponse {
    let b = span.beta_s2() * n_spans as f64 * if inverse { -1.0 } else { 1.0 };
    FrequencyResponse::new(0.0, move |f| C64::from_polar(1.0, -PI * b * f * f))
}

/// Quadratic-phase all-pass fiber response; attenuation is omitted.
pub fn apply_span(band: &DualPolWaveform, span: &SpanConfig) -> Result<DualPolWaveform> {
    span.validate()?;
    if span.length_m == 0.0 {
        return Ok(band.clone());
    }
    let h = dispersion_response(span, 1, false);
    band.map(|w| Ok(dsp::apply_filter(w, &h)))
}

/// Total (both polarizations) power inside a slot.
pub fn slot_power(band: &DualPolWaveform, center_hz: f64, width_hz: f64) -> f64 {
    let (lo, hi) = (center_hz - width_hz / 2.0, center_hz + width_hz / 2.0);
    dsp::band_power(&band.x, lo, hi) + dsp::band_power(&band.y, lo, hi)
}

/// Noise-loading target: the slot whose power defines OSNR.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NoiseSpec {
    pub osnr_db: f64,
    pub ref_bw_hz: f64,
    pub slot_center_hz: f64,
    pub slot_bw_hz: f64,
}

/// Add white circular Gaussian noise to both polarizations so that slot
/// power over noise power in `ref_bw_hz` (both pols) equals the target.
/// An infinite OSNR returns the input unchanged.
pub fn load_noise(band: &DualPolWaveform, spec: &NoiseSpec, rng: &mut SimRng) -> Result<DualPolWaveform> {
    if spec.osnr_db == f64::INFINITY {
        return Ok(band.clone());
    }
    if !spec.osnr_db.is_finite() {
        return Err(Error::param(format!("invalid OSNR {}", spec.osnr_db)));
    }
    let p = slot_power(band, spec.slot_center_hz, spec.slot_bw_hz);
    if !(p > 0.0) {
        return Err(Error::param("no signal power in the reference slot"));
    }
    let n0 = p / (10f64.powf(spec.osnr_db / 10.0) * spec.ref_bw_hz);
    let var = n0 / 2.0 * band.sample_rate_hz();
    let g = Normal::new(0.0, (var / 2.0).sqrt()).map_err(|e| Error::param(e.to_string()))?;
    let mut add = |w: &ComplexWaveform| {
        let s = w.samples.iter().map(|v| v + C64::new(g.sample(rng), g.sample(rng))).collect();
        ComplexWaveform::new(s, w.sample_rate_hz)
    };
    let x = add(&band.x)?;
    let y = add(&band.y)?;
    DualPolWaveform::new(x, y)
}

/// OSNR of `noisy` relative to `clean`, measured from Welch PSDs.
pub fn measure_osnr_db(clean: &DualPolWaveform, noisy: &DualPolWaveform, spec: &NoiseSpec, rbw_hz: f64) -> Result<f64> {
    let diff = |a: &ComplexWaveform, b: &ComplexWaveform| {
        let s = a.samples.iter().zip(&b.samples).map(|(p, q)| p - q).collect();
        ComplexWaveform::new(s, a.sample_rate_hz)
    };
    let nx = dsp::estimate_psd(&diff(&noisy.x, &clean.x)?, rbw_hz)?;
    let ny = dsp::estimate_psd(&diff(&noisy.y, &clean.y)?, rbw_hz)?;
    let n0 = nx.iter().zip(&ny).map(|(a, b)| a.1 + b.1).sum::<f64>() / nx.len() as f64;
    let (lo, hi) = (spec.slot_center_hz - spec.slot_bw_hz / 2.0, spec.slot_center_hz + spec.slot_bw_hz / 2.0);
    let sx = dsp::estimate_psd(&clean.x, rbw_hz)?;
    let sy = dsp::estimate_psd(&clean.y, rbw_hz)?;
    let p = dsp::integrate_psd(&sx, lo, hi) + dsp::integrate_psd(&sy, lo, hi);
    Ok(10.0 * (p / (n0 * spec.ref_bw_hz)).log10())
}

/// Optional per-pass amplifier noise for the loop.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PassNoise {
    pub spec: NoiseSpec,
    pub seed: u64,
}

/// Stream tag base for per-pass loop noise.
pub const LOOP_NOISE_TAG: u64 = 1 << 20;

/// Span then node, `n_passes` times; returns the band after every pass.
pub fn run_link(
    band: &DualPolWaveform,
    span: &SpanConfig,
    node: &NodeConfig,
    n_passes: usize,
    pass_noise: Option<&PassNoise>,
) -> Result<Vec<DualPolWaveform>> {
    if n_passes == 0 {
        return Err(Error::param("n_passes must be at least 1"));
    }
    span.validate()?;
    // one combined transfer per pass keeps the cost at a single FFT pair
    let h = dispersion_response(span, 1, false).cascade(&node.transfer()?);
    if node.express_delay_s.abs() >= band.x.duration_s() {
        return Err(Error::param("express delay exceeds record duration"));
    }
    let mut out = Vec::with_capacity(n_passes);
    let mut cur = band.clone();
    for k in 0..n_passes {
        cur = if span.length_m == 0.0 && node.mode == NodeMode::AllPass {
            cur
        } else {
            cur.map(|w| Ok(dsp::apply_filter(w, &h)))?
        };
        if let Some(pn) = pass_noise {
            let mut r = rng::stream(pn.seed, LOOP_NOISE_TAG + k as u64);
            cur = load_noise(&cur, &pn.spec, &mut r)?;
        }
        out.push(cur.clone());
    }
    Ok(out)
}

/// Bulk group delay a channel at `offset_hz` picks up from the quadratic
/// phase referenced to the band center.
pub fn channel_group_delay_s(span: &SpanConfig, n_spans: usize, offset_hz: f64) -> f64 {
    span.beta_s2() * n_spans as f64 * offset_hz
}


#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wss_half_power_and_center() {
        let m = WssFilterModel { center_hz: 0.0, bandwidth_3db_hz: 50e9, edge_fwhm_hz: 7e9 };
        let h = wss_response(&m);
        assert!((h.gain(0.0).re - 1.0).abs() < 1e-3);
        assert!((h.gain(25e9).norm_sqr() - 0.5).abs() < 0.01);
        assert!((h.gain(-25e9).norm_sqr() - 0.5).abs() < 0.01);
        assert!(h.gain(200e9).norm() < 1e-12);
    }

    #[test]
    fn cascade_narrows() {
        let m = WssFilterModel { center_hz: 0.0, bandwidth_3db_hz: 50e9, edge_fwhm_hz: 7e9 };
        let b1 = cascade_bandwidth_hz(&m, 1);
        let b4 = cascade_bandwidth_hz(&m, 4);
        assert!((b1 - 50e9).abs() < 1e6);
        assert!(b4 < b1);
    }

    #[test]
    fn dispersion_spread() {
        let s = SpanConfig::default();
        let spread = s.delay_spread_s(50e9);
        assert!((spread - 547e-12).abs() < 2e-12, "{spread}");
        assert!((spread * 40e9 - 22.0).abs() < 0.5);
    }

    #[test]
    fn off_grid_target_rejected() {
        let n = NodeConfig::add_drop(10e9, WssFilterModel::default(), 1e-9);
        assert!(n.transfer().is_err());
        let n = NodeConfig::add_drop(25e9, WssFilterModel::default(), 1e-9);
        assert!(n.transfer().is_ok());
    }
}
