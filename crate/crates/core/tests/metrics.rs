use cycspec_core::metrics::{self, HD_FEC_7};
use cycspec_core::txgen::Shaping;
use proptest::prelude::*;

/// erfc by composite Simpson integration of 2/√π·exp(−t²) over [x, x+12].
fn erfc_oracle(x: f64) -> f64 {
    let n = 20_000;
    let h = 12.0 / n as f64;
    let g = |t: f64| (-t * t).exp();
    let mut s = g(x) + g(x + 12.0);
    for i in 1..n {
        s += g(x + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    s * h / 3.0 * 2.0 / std::f64::consts::PI.sqrt()
}

/// Q² in dB from BER by bisection on BER = erfc(Q/√2)/2.
fn q2_oracle(ber: f64) -> f64 {
    let (mut lo, mut hi) = (0.0, 10.0);
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if 0.5 * erfc_oracle(mid / 2f64.sqrt()) > ber {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    20.0 * (0.5 * (lo + hi)).log10()
}

#[test]
fn fec_threshold_anchor() {
    let q = metrics::ber_to_q2_db(3.7e-3).unwrap();
    assert!((q - 8.56).abs() <= 0.02, "{q}");
    assert!((q - q2_oracle(3.7e-3)).abs() < 1e-6);
    assert_eq!(HD_FEC_7.q2_db, 8.56);
}

#[test]
fn q2_at_1e_3() {
    let q = metrics::ber_to_q2_db(1e-3).unwrap();
    assert!((q - 9.8).abs() <= 0.05);
    assert!((q - q2_oracle(1e-3)).abs() < 1e-6);
}

#[test]
fn half_ber_is_a_domain_error() {
    assert!(metrics::ber_to_q2_db(0.5).is_err());
    assert!(metrics::ber_to_q2_db(0.0).is_err());
    assert!(metrics::ber_to_q2_db(0.5 - 1e-9).unwrap() < -40.0);
}

#[test]
fn psd_ratio_oracles() {
    assert_eq!(metrics::psd_ratio_db(17.3, 40e9, 40e9).unwrap(), 17.3);
    let r = metrics::psd_ratio_db(20.0, 40e9, 12.5e9).unwrap();
    assert!((r - 14.95).abs() < 0.005);
    let ny = metrics::psd_ratio_db(15.0, Shaping::Nyquist.signal_bw_hz(40e9, 50e9), 12.5e9).unwrap();
    let cy = metrics::psd_ratio_db(15.0, Shaping::Cyclic.signal_bw_hz(40e9, 50e9), 12.5e9).unwrap();
    assert!((ny - cy - 10.0 * (50.0f64 / 40.0).log10()).abs() < 1e-12);
    assert!((ny - cy - 0.97).abs() < 0.005);
}

#[test]
fn required_osnr_interpolation() {
    let r = metrics::required_osnr(&[(14.0, 8.0), (16.0, 9.0)], HD_FEC_7).unwrap();
    assert!((r - 15.12).abs() < 1e-9);
    assert!(metrics::required_osnr(&[(14.0, 9.0), (16.0, 10.0)], HD_FEC_7).is_err());
    assert_eq!(metrics::required_osnr(&[(14.0, 8.0), (15.0, 8.56), (16.0, 9.0)], HD_FEC_7).unwrap(), 15.0);
}

#[test]
fn nodes_reached_examples() {
    assert_eq!(metrics::nodes_reached(&[10.0, 9.1, 8.6, 8.1], HD_FEC_7), 3);
    assert_eq!(metrics::nodes_reached(&[10.0; 5], HD_FEC_7), 5);
    assert_eq!(metrics::nodes_reached(&[8.0, 9.0, 10.0], HD_FEC_7), 0);
}

#[test]
fn theoretical_required_osnr() {
    // ideal dual-pol QPSK: OSNR = SNR·Rs/Bref, with SNR = Q² at threshold
    let o = metrics::theoretical_required_osnr_db(40e9, HD_FEC_7);
    assert!((o - (8.56 + 10.0 * (40.0f64 / 12.5).log10())).abs() < 1e-12);
}

proptest! {
    #[test]
    fn ber_q2_round_trip(ber in 1e-6f64..0.49) {
        let q = metrics::ber_to_q2_db(ber).unwrap();
        prop_assert!((metrics::q2_db_to_ber(q) / ber - 1.0).abs() <= 1e-6);
    }

    #[test]
    fn q2_strictly_decreasing(a in 1e-6f64..0.49, b in 1e-6f64..0.49) {
        prop_assume!(a < b * (1.0 - 1e-9));
        prop_assert!(metrics::ber_to_q2_db(a).unwrap() > metrics::ber_to_q2_db(b).unwrap());
    }

    #[test]
    fn psd_ratio_identity(osnr in -10.0f64..40.0, bw in 1e9f64..100e9) {
        prop_assert_eq!(metrics::psd_ratio_db(osnr, bw, bw).unwrap(), osnr);
    }

    #[test]
    fn nodes_monotone_under_decrease(q in prop::collection::vec(5.0f64..15.0, 1..10), d in prop::collection::vec(0.0f64..3.0, 10)) {
        let lower: Vec<f64> = q.iter().zip(&d).map(|(a, b)| a - b).collect();
        prop_assert!(metrics::nodes_reached(&lower, HD_FEC_7) <= metrics::nodes_reached(&q, HD_FEC_7));
    }
}
