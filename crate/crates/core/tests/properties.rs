use lonestar::channel::complex_gaussian;
use lonestar::io::{read_codebook_csv, read_matrix_csv, write_codebook_csv, write_matrix_csv};
use lonestar::metrics::{inr_rx, sinr, snr_rx, snr_tx, spectral_efficiency, LinkBudget};
use lonestar::{CMatrix, CVector, C64};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn matrix(rows: usize, cols: usize, seed: u64) -> CMatrix {
    complex_gaussian(rows, cols, 1.0, &mut ChaCha8Rng::seed_from_u64(seed))
}

fn budget() -> LinkBudget {
    LinkBudget::from_targets(10.0, 5.0, 80.0, f64::NEG_INFINITY, 4, 4)
}

proptest! {
    #[test]
    fn codebook_csv_roundtrip(rows in 1usize..6, cols in 1usize..6, seed in any::<u64>()) {
        let m = matrix(rows, cols, seed);
        let mut buf = Vec::new();
        write_codebook_csv(&mut buf, &m).unwrap();
        prop_assert_eq!(read_codebook_csv(buf.as_slice()).unwrap(), m.clone());
        let mut buf = Vec::new();
        write_matrix_csv(&mut buf, &m).unwrap();
        prop_assert_eq!(read_matrix_csv(buf.as_slice()).unwrap(), m);
    }

    #[test]
    fn sinr_never_exceeds_snr(snr in 0.0f64..1e6, inr in 0.0f64..1e6) {
        let s = sinr(snr, inr);
        prop_assert!(s <= snr);
        prop_assert!(spectral_efficiency(s) <= spectral_efficiency(snr));
    }

    #[test]
    fn phase_and_scale_invariances(seed in any::<u64>(), phi in -3.0f64..3.0, c in 0.1f64..10.0) {
        let b = budget();
        let h = matrix(4, 4, seed);
        let f: CVector = matrix(4, 1, seed ^ 1).column(0).into_owned();
        let w: CVector = matrix(4, 1, seed ^ 2).column(0).into_owned();
        let rot = C64::from_polar(1.0, phi);
        let base = inr_rx(&b, &h, &f, &w).unwrap();
        let rotated = inr_rx(&b, &h, &(&f * rot), &(&w * rot.conj())).unwrap();
        prop_assert!((rotated - base).abs() <= 1e-9 * base);
        let scaled = inr_rx(&b, &(&h * C64::new(c, 0.0)), &f, &w).unwrap();
        prop_assert!((scaled - c * c * base).abs() <= 1e-9 * scaled);
        let ht: CVector = matrix(4, 1, seed ^ 3).column(0).into_owned();
        let s0 = snr_tx(&b, &ht, &f).unwrap();
        prop_assert!((snr_tx(&b, &ht, &(&f * rot)).unwrap() - s0).abs() <= 1e-9 * s0);
        let r0 = snr_rx(&b, &ht, &w).unwrap();
        prop_assert!((snr_rx(&b, &ht, &(&w * rot)).unwrap() - r0).abs() <= 1e-9 * r0);
    }
}
