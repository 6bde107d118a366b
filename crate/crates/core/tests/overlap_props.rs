use proptest::prelude::*;

use spectra_core::measure::AffineIfs;
use spectra_core::overlap::{non_spectrality_certificate, overlap_measure_mc, IntersectionKind, OverlapVerdict};

fn cantor_like() -> impl Strategy<Value = AffineIfs> {
    prop_oneof![
        (0.2..0.45f64).prop_map(|l| AffineIfs::bernoulli_maps(l).unwrap()),
        Just(AffineIfs::one_dimensional(1.0 / 3.0, &[0.0, 2.0], None).unwrap()),
        Just(AffineIfs::one_dimensional(0.25, &[0.0, 1.0, 8.0, 9.0], None).unwrap()),
        Just(AffineIfs::one_dimensional(0.4, &[0.0, 1.0, 1.5], None).unwrap()),
    ]
}

fn any_line_ifs() -> impl Strategy<Value = AffineIfs> {
    prop_oneof![
        cantor_like(),
        (0.5..0.95f64).prop_map(|l| AffineIfs::bernoulli_maps(l).unwrap())
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn disjoint_pieces_short_circuit(ifs in cantor_like(), seed in 0u64..1000) {
        let report = non_spectrality_certificate(&ifs, 4000, seed, None).unwrap();
        for (pair, est) in report.geometry.pairs.iter().zip(&report.pairs) {
            if pair.kind == IntersectionKind::Empty {
                prop_assert!(est.short_circuit);
                prop_assert_eq!(est.estimate, 0.0);
            }
        }
        if report.geometry.all_disjoint() {
            prop_assert_eq!(report.verdict, OverlapVerdict::NoGeometricOverlap);
        }
    }

    #[test]
    fn estimates_shrink_with_depth(ifs in cantor_like(), seed in 0u64..1000, d in 1u32..8) {
        let a = overlap_measure_mc(&ifs, 0, 1, 3000, seed, d).unwrap();
        let b = overlap_measure_mc(&ifs, 0, 1, 3000, seed, d + 1).unwrap();
        prop_assert!(b.estimate <= a.estimate);
    }

    #[test]
    fn piece_masses_cover_the_attractor(ifs in any_line_ifs(), seed in 0u64..1000) {
        let r = non_spectrality_certificate(&ifs, 4000, seed, None).unwrap();
        let total: f64 = r.masses.iter().map(|m| m.estimate).sum();
        let slack: f64 = r.masses.iter().map(|m| m.slack).sum();
        let overlaps: f64 = r.pairs.iter().map(|p| p.estimate).sum();
        prop_assert!(total >= 1.0 - slack - 1e-12);
        prop_assert!(total <= 1.0 + overlaps + slack + 1e-12);
        for p in &r.pairs {
            prop_assert!((0.0..=1.0).contains(&p.estimate));
            prop_assert!((p.ci - 3.0 / 4000f64.sqrt()).abs() < 1e-15);
        }
    }

    #[test]
    fn reports_replay_byte_for_byte(ifs in any_line_ifs(), seed in 0u64..1000) {
        let a = serde_json::to_vec(&non_spectrality_certificate(&ifs, 3000, seed, Some(8)).unwrap()).unwrap();
        let b = serde_json::to_vec(&non_spectrality_certificate(&ifs, 3000, seed, Some(8)).unwrap()).unwrap();
        prop_assert_eq!(a, b);
    }
}

#[test]
fn overlapping_bernoulli_is_certified_for_every_ratio_above_half() {
    for lambda in [0.52, 0.6, 0.7, 0.8, 0.95] {
        let ifs = AffineIfs::bernoulli_maps(lambda).unwrap();
        let r = non_spectrality_certificate(&ifs, 50_000, 11, None).unwrap();
        assert!(r.certifies_non_spectral(), "λ={lambda}: {:?}", r.pairs);
        assert!(r.statement.contains("not spectral"));
    }
}
