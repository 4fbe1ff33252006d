//! Q², OSNR and spectral-density-ratio bookkeeping.

use statrs::function::erf::{erfc, erfc_inv};

use crate::error::{Error, Result};
use crate::txgen::Shaping;

/// Hard-decision FEC threshold used for required-OSNR and nodes-reached.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FecThreshold {
    pub q2_db: f64,
    pub name: &'static str,
}

/// 7% overhead HD-FEC.
pub const HD_FEC_7: FecThreshold = FecThreshold { q2_db: 8.56, name: "7% HD-FEC" };

/// Standard OSNR reference bandwidth (0.1 nm).
pub const REF_BW_HZ: f64 = 12.5e9;

/// One measured point.
#[derive(Clone, Debug, PartialEq)]
pub struct QualityReport {
    pub baud_hz: f64,
    pub shaping: Shaping,
    pub osnr_db: f64,
    pub psd_ratio_db: f64,
    pub detuning_hz: f64,
    pub pass_index: usize,
    pub ber: f64,
    pub q2_db: f64,
    pub seed: u64,
}

/// Q²(dB) = 20 log10(√2 erfc⁻¹(2 BER)).
pub fn ber_to_q2_db(ber: f64) -> Result<f64> {
    if !(ber > 0.0 && ber < 0.5) {
        return Err(Error::Domain(format!("BER {ber} outside (0, 0.5)")));
    }
    let q = std::f64::consts::SQRT_2 * erfc_inv(2.0 * ber);
    Ok(20.0 * q.log10())
}

/// Inverse of [`ber_to_q2_db`].
pub fn q2_db_to_ber(q2_db: f64) -> f64 {
    let q = 10f64.powf(q2_db / 20.0);
    0.5 * erfc(q / std::f64::consts::SQRT_2)
}

/// Q² for a measured count; zero errors map to +inf.
pub fn q2_from_counts(errors: u64, bits: u64) -> f64 {
    if errors == 0 {
        return f64::INFINITY;
    }
    let ber = errors as f64 / bits as f64;
    ber_to_q2_db(ber.min(0.5 - 1e-12)).unwrap_or(f64::NEG_INFINITY)
}

/// Theoretical Gray-coded QPSK BER at a given Es/N0 (linear).
pub fn qpsk_ber(es_n0: f64) -> f64 {
    0.5 * erfc((es_n0 / 2.0).sqrt())
}

/// Signal-to-ASE spectral density ratio from OSNR.
pub fn psd_ratio_db(osnr_db: f64, signal_bw_hz: f64, ref_bw_hz: f64) -> Result<f64> {
    if !(signal_bw_hz > 0.0 && ref_bw_hz > 0.0) {
        return Err(Error::param("bandwidths must be positive"));
    }
    if signal_bw_hz == ref_bw_hz {
        return Ok(osnr_db);
    }
    Ok(osnr_db - 10.0 * (signal_bw_hz / ref_bw_hz).log10())
}

/// OSNR at which an ideal coherent QPSK receiver sits exactly on the
/// threshold: Es/N0 = Q², OSNR = Es/N0 · BR / B_ref.
pub fn theoretical_required_osnr_db(baud_hz: f64, threshold: FecThreshold) -> f64 {
    threshold.q2_db + 10.0 * (baud_hz / REF_BW_HZ).log10()
}

/// Linear interpolation of OSNR at the threshold crossing.
///
/// Points are sorted by OSNR; the first adjacent pair with finite Q²
/// straddling the threshold is used.
pub fn required_osnr(curve: &[(f64, f64)], threshold: FecThreshold) -> Result<f64> {
    let mut pts: Vec<(f64, f64)> = curve.to_vec();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    let t = threshold.q2_db;
    if let Some(p) = pts.iter().find(|p| p.1 == t) {
        return Ok(p.0);
    }
    for w in pts.windows(2) {
        let ((o1, q1), (o2, q2)) = (w[0], w[1]);
        let straddle = (q1 - t) * (q2 - t) < 0.0;
        if straddle && q1.is_finite() && q2.is_finite() {
            return Ok(o1 + (t - q1) * (o2 - o1) / (q2 - q1));
        }
        if straddle && q2.is_infinite() && q1.is_finite() {
            return Err(Error::OutOfRange(format!(
                "crossing between {o1} and {o2} dB has an error-free endpoint"
            )));
        }
    }
    Err(Error::OutOfRange(format!("curve does not straddle Q² = {t} dB")))
}

/// Number of leading passes whose Q² stays at or above the threshold.
pub fn nodes_reached(per_pass_q2: &[f64], threshold: FecThreshold) -> usize {
    per_pass_q2.iter().take_while(|q| **q >= threshold.q2_db).count()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn q2_anchor_points() {
        assert!((ber_to_q2_db(3.7e-3).unwrap() - 8.56).abs() < 0.02);
        assert!((ber_to_q2_db(1e-3).unwrap() - 9.8).abs() < 0.05);
        assert!(ber_to_q2_db(0.5).is_err());
        assert!(ber_to_q2_db(0.0).is_err());
        assert!(ber_to_q2_db(0.5 - 1e-9).unwrap() < -60.0);
    }

    #[test]
    fn psd_ratio_examples() {
        assert_eq!(psd_ratio_db(17.3, 12.5e9, 12.5e9).unwrap(), 17.3);
        assert!((psd_ratio_db(20.0, 40e9, 12.5e9).unwrap() - 14.95).abs() < 0.01);
        let d = psd_ratio_db(20.0, 40e9, REF_BW_HZ).unwrap() - psd_ratio_db(20.0, 50e9, REF_BW_HZ).unwrap();
        assert!((d - 0.97).abs() < 0.005);
    }

    #[test]
    fn required_osnr_examples() {
        let r = required_osnr(&[(14.0, 8.0), (16.0, 9.0)], HD_FEC_7).unwrap();
        assert!((r - 15.12).abs() < 1e-9);
        assert!(required_osnr(&[(14.0, 9.0), (16.0, 10.0)], HD_FEC_7).is_err());
        assert_eq!(required_osnr(&[(14.0, 8.0), (15.0, 8.56), (16.0, 9.0)], HD_FEC_7).unwrap(), 15.0);
    }

    #[test]
    fn nodes_examples() {
        assert_eq!(nodes_reached(&[10.0, 9.1, 8.6, 8.1], HD_FEC_7), 3);
        assert_eq!(nodes_reached(&[10.0; 5], HD_FEC_7), 5);
        assert_eq!(nodes_reached(&[8.0, 9.0], HD_FEC_7), 0);
    }

    #[test]
    fn theory_threshold() {
        // Es/N0 of 8.56 dB gives BER 3.7e-3 for Gray QPSK
        let ber = qpsk_ber(10f64.powf(0.856));
        assert!((ber - 3.7e-3).abs() < 0.1e-3, "{ber}");
        assert!((theoretical_required_osnr_db(40e9, HD_FEC_7) - 13.61).abs() < 0.01);
    }
}
