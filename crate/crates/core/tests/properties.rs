use fastadj::conv::{conv_full_fft, conv_op_fixed_h, conv_op_fixed_s};
use fastadj::extend::{extend, extend_adjoint, extend_pinv, extend_pinv_adjoint, extend_op, extend_pinv_op};
use fastadj::regularizers::{diff_op, soft_threshold};
use fastadj::*;
use proptest::prelude::*;

fn wavelet() -> impl Strategy<Value = WaveletKind> {
    prop::sample::select(WaveletKind::ALL.to_vec())
}

fn extension() -> impl Strategy<Value = ExtensionKind> {
    prop::sample::select(ExtensionKind::ALL.to_vec())
}

fn signal(n: usize, seed: u64) -> Vec<f64> {
    randn(n, seed)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn extension_roundtrip(kind in extension(), n in 1usize..40, pad in 0usize..12, seed in any::<u64>()) {
        let spec = ExtensionSpec::new(kind, pad);
        prop_assume!(spec.validate(n).is_ok());
        let y = signal(n, seed);
        let back = extend_pinv(&extend(&y, &spec).unwrap(), &spec, n).unwrap();
        for (a, b) in back.iter().zip(&y) {
            prop_assert!((a - b).abs() <= 1e-12);
        }
    }

    #[test]
    fn extension_adjoints(kind in extension(), n in 1usize..40, pad in 0usize..12, seed in any::<u64>()) {
        let spec = ExtensionSpec::new(kind, pad);
        prop_assume!(spec.validate(n).is_ok());
        prop_assert!(dot_test(&extend_op(spec, n).unwrap(), 5, seed) <= 1e-12);
        prop_assert!(dot_test(&extend_pinv_op(spec, n).unwrap(), 5, seed) <= 1e-12);
        // slice-level functions agree with the operator view
        let z = signal(spec.extended_len(n), seed ^ 1);
        let op = extend_op(spec, n).unwrap();
        prop_assert_eq!(extend_adjoint(&z, &spec, n).unwrap(), op.apply_adjoint(&z).unwrap());
        let y = signal(n, seed ^ 2);
        let pinv = extend_pinv_op(spec, n).unwrap();
        prop_assert_eq!(extend_pinv_adjoint(&y, &spec).unwrap(), pinv.apply_adjoint(&y).unwrap());
    }

    #[test]
    fn dwt_perfect_reconstruction(w in wavelet(), e in extension(), levels in 1usize..4, n in 16usize..100, seed in any::<u64>()) {
        let dwt = Dwt::new(w, levels, e).unwrap();
        prop_assume!(dwt.level_lengths(n).is_ok());
        let y = signal(n, seed);
        let back = dwt.synthesize(&dwt.analyze(&y).unwrap()).unwrap();
        prop_assert!(rel_err(&back, &y).unwrap() <= 1e-9);
    }

    #[test]
    fn dwt_true_adjoint(w in wavelet(), e in extension(), levels in 1usize..4, n in 16usize..70, seed in any::<u64>()) {
        let dwt = Dwt::new(w, levels, e).unwrap();
        prop_assume!(dwt.level_lengths(n).is_ok());
        prop_assert!(dot_test(&dwt.synthesis_op(n, AdjointMode::TrueAdjoint).unwrap(), 5, seed) <= 1e-10);
        prop_assert!(dot_test(&dwt.analysis_op(n).unwrap(), 5, seed) <= 1e-10);
    }

    #[test]
    fn dwt2d_roundtrip(w in wavelet(), e in extension(), rows in 16usize..40, cols in 16usize..40, seed in any::<u64>()) {
        let dwt = Dwt::new(w, 2, e).unwrap();
        prop_assume!(dwt.level_shapes(rows, cols).is_ok());
        let img = Image::new(rows, cols, signal(rows * cols, seed)).unwrap();
        let back = dwt.synthesize2d(&dwt.analyze2d(&img).unwrap()).unwrap();
        prop_assert!(rel_err(back.as_slice(), img.as_slice()).unwrap() <= 1e-9);
    }

    #[test]
    fn conv_commutes_and_paths_agree(k in 1usize..30, n in 1usize..60, seed in any::<u64>()) {
        let h = signal(k, seed);
        let s = signal(n, seed ^ 7);
        let a = conv_full(&h, &s).unwrap();
        let b = conv_full(&s, &h).unwrap();
        let c = conv_full_fft(&h, &s).unwrap();
        prop_assert_eq!(a.len(), k + n - 1);
        prop_assert!(rel_err(&b, &a).unwrap() <= 1e-13);
        prop_assert!(rel_err(&c, &a).unwrap() <= 1e-12);
    }

    #[test]
    fn conv_operators_are_adjoint(k in 1usize..20, n in 1usize..40, seed in any::<u64>()) {
        let h = signal(k, seed);
        let s = signal(n, seed ^ 3);
        prop_assert!(dot_test(&conv_op_fixed_s(&s, k).unwrap(), 5, seed) <= 1e-12);
        prop_assert!(dot_test(&conv_op_fixed_h(&h, n).unwrap(), 5, seed) <= 1e-12);
        prop_assert_eq!(xcorr_valid(&conv_full(&h, &s).unwrap(), &s).unwrap().len(), k);
    }

    #[test]
    fn blur_adjoint(side in prop::sample::select(vec![1usize, 3, 5, 7]), sigma in 0.3f64..3.0, e in extension(), rows in 8usize..24, cols in 8usize..24, seed in any::<u64>()) {
        let psf = gaussian_psf(side, sigma).unwrap();
        let r = blur_op(&psf, rows, cols, e).unwrap();
        prop_assert!(dot_test(&r, 3, seed) <= 1e-12);
    }

    #[test]
    fn soft_threshold_shrinks_and_is_nonexpansive(n in 1usize..50, tau in 0.0f64..2.0, seed in any::<u64>()) {
        let u = signal(n, seed);
        let v = signal(n, seed ^ 5);
        let pu = soft_threshold(&u, tau).unwrap();
        let pv = soft_threshold(&v, tau).unwrap();
        for (a, b) in pu.iter().zip(&u) {
            prop_assert!(a.abs() <= b.abs());
            prop_assert!(*a == 0.0 || a.signum() == b.signum());
        }
        let d_in: f64 = u.iter().zip(&v).map(|(a, b)| (a - b).powi(2)).sum();
        let d_out: f64 = pu.iter().zip(&pv).map(|(a, b)| (a - b).powi(2)).sum();
        prop_assert!(d_out <= d_in + 1e-15);
    }

    #[test]
    fn rel_err_is_homogeneous(n in 1usize..40, alpha in 0.01f64..10.0, seed in any::<u64>()) {
        let r = signal(n, seed);
        prop_assume!(r.iter().any(|v| *v != 0.0));
        let e = signal(n, seed ^ 9);
        let est = |a: f64| -> Vec<f64> { r.iter().zip(&e).map(|(x, y)| x + a * y).collect() };
        let one = rel_err(&est(1.0), &r).unwrap();
        let scaled = rel_err(&est(alpha), &r).unwrap();
        prop_assert!((scaled - alpha * one).abs() <= 1e-12 * (1.0 + alpha * one));
    }

    #[test]
    fn ssim_is_symmetric(seed in any::<u64>()) {
        let a = Image::new(16, 16, signal(256, seed)).unwrap();
        let b = Image::new(16, 16, signal(256, seed ^ 1)).unwrap();
        let p = SsimParams::default();
        prop_assert_eq!(ssim(&a, &b, &p).unwrap(), ssim(&b, &a, &p).unwrap());
        prop_assert!(ssim(&a, &b, &p).unwrap() <= 1.0);
    }

    #[test]
    fn difference_operator_adjoint(n in 2usize..60, seed in any::<u64>()) {
        prop_assert!(dot_test(&diff_op(n).unwrap(), 5, seed) <= 1e-13);
    }
}
