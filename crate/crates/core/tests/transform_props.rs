use proptest::prelude::*;

use spectra_core::measure::{chaos_game_sample, AffineIfs, AtomicMeasure, IntervalUnion, MeasureModel};
use spectra_core::numeric::exp_2pi_i;
use spectra_core::Complex64;

fn atomic() -> impl Strategy<Value = MeasureModel> {
    (1usize..3, 1usize..6).prop_flat_map(|(dim, n)| {
        (
            prop::collection::vec(prop::collection::vec(-5.0..5.0f64, dim), n),
            prop::collection::vec(0.1..1.0f64, n),
        )
            .prop_filter_map("normalizable", |(points, raw)| {
                let total: f64 = raw.iter().sum();
                let mut w: Vec<f64> = raw.iter().map(|x| x / total).collect();
                let head: f64 = w[..w.len() - 1].iter().sum();
                *w.last_mut().unwrap() = 1.0 - head;
                AtomicMeasure::new(points, w).ok().map(MeasureModel::from)
            })
    })
}

fn intervals() -> impl Strategy<Value = MeasureModel> {
    (-3.0..0.0f64, prop::collection::vec((0.1..1.5f64, 0.05..1.0f64), 1..4)).prop_map(|(start, parts)| {
        let mut x = start;
        let mut iv = Vec::new();
        for (len, gap) in parts {
            iv.push((x, x + len));
            x += len + gap;
        }
        IntervalUnion::new(iv).unwrap().into()
    })
}

fn self_affine() -> impl Strategy<Value = MeasureModel> {
    prop_oneof![
        (0.15..0.9f64).prop_map(|l| AffineIfs::bernoulli(l).unwrap().into()),
        (2u32..6, prop::collection::btree_set(-6i32..7, 2..5)).prop_map(|(r, digits)| {
            let d: Vec<f64> = digits.into_iter().map(f64::from).collect();
            AffineIfs::one_dimensional(1.0 / f64::from(r), &d, None).unwrap().into()
        }),
        (-1.0..1.0f64).prop_map(|s| {
            let r = [vec![2.0, s], vec![0.0, 3.0]];
            let d = [vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0]];
            AffineIfs::equal_weights(&r, &d).unwrap().into()
        }),
    ]
}

fn any_measure() -> impl Strategy<Value = MeasureModel> {
    prop_oneof![atomic(), intervals(), self_affine()]
}

fn with_frequency() -> impl Strategy<Value = (MeasureModel, Vec<f64>)> {
    any_measure().prop_flat_map(|m| {
        let dim = m.dim();
        (Just(m), prop::collection::vec(-20.0..20.0f64, dim))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn bounded_by_one((m, t) in with_frequency()) {
        let z = m.mu_hat(&t, 1e-10).unwrap();
        prop_assert!(z.value.norm() <= 1.0 + z.err);
    }

    #[test]
    fn origin_is_exact(m in any_measure()) {
        let z = m.mu_hat(&vec![0.0; m.dim()], 1e-10).unwrap();
        prop_assert_eq!(z.value, Complex64::new(1.0, 0.0));
        prop_assert_eq!(z.err, 0.0);
    }

    #[test]
    fn conjugate_symmetry((m, t) in with_frequency()) {
        let neg: Vec<f64> = t.iter().map(|x| -x).collect();
        let a = m.mu_hat(&t, 1e-10).unwrap();
        let b = m.mu_hat(&neg, 1e-10).unwrap();
        prop_assert!((b.value - a.value.conj()).norm() <= a.err + b.err);
    }

    #[test]
    fn truncation_honesty((m, t) in with_frequency(), coarse in prop::sample::select(vec![1e-4, 1e-7, 1e-10])) {
        let a = m.mu_hat(&t, coarse).unwrap();
        let b = m.mu_hat(&t, coarse / 100.0).unwrap();
        prop_assert!(a.err <= coarse + 1e-12);
        prop_assert!((a.value - b.value).norm() <= a.err + b.err);
    }

    #[test]
    fn refinement_equation(m in self_affine(), raw in prop::collection::vec(-20.0..20.0f64, 2)) {
        let MeasureModel::SelfAffine(ifs) = &m else { unreachable!() };
        let t: Vec<f64> = raw[..ifs.dim()].to_vec();
        // μ̂(t) = m_p(S⁻¹t) μ̂(S⁻¹t)
        let inner = ifs.s_inv().apply(&t);
        let outer = m.mu_hat(&t, 1e-10).unwrap();
        let z = m.mu_hat(&inner, 1e-10).unwrap();
        let mask = ifs.mask_hat(&inner);
        let phase: f64 = ifs.digits().iter()
            .map(|b| b.iter().zip(&inner).map(|(x, y)| (x * y).abs()).sum::<f64>())
            .fold(0.0, f64::max);
        let rounding = f64::EPSILON * (8.0 + std::f64::consts::TAU * t.len() as f64 * phase);
        prop_assert!((outer.value - mask * z.value).norm() <= outer.err + mask.norm() * z.err + rounding);
    }
}

#[test]
fn empirical_characteristic_function() {
    let m = 100_000;
    for (ifs, seed) in [
        (AffineIfs::bernoulli_maps(0.6).unwrap(), 1),
        (
            AffineIfs::one_dimensional(0.25, &[0.0, 1.0, 8.0, 9.0], None).unwrap(),
            2,
        ),
        (
            AffineIfs::one_dimensional(0.5, &[0.0, 1.0], Some(&[0.3, 0.7])).unwrap(),
            3,
        ),
    ] {
        let samples = chaos_game_sample(&ifs, m, seed).unwrap();
        let model = MeasureModel::from(ifs);
        for t in [0.1, 0.45, 1.3, 2.7] {
            let empirical: Complex64 = samples.mean(|x| exp_2pi_i(t * x[0]));
            let exact = model.mu_hat(&[t], 1e-12).unwrap();
            assert!((empirical - exact.value).norm() <= 5.0 / (m as f64).sqrt(), "t={t}");
        }
    }
}
