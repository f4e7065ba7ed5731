use laconv_core::metrics::{ergas, psnr, q2n, qnr_suite, sam, scc, ssim, MetricConfig};
use laconv_core::rng::{seeded, uniform_tensor};
use laconv_core::Tensor4;
use proptest::prelude::*;

fn image(seed: u64, bands: usize, side: usize) -> Tensor4 {
    uniform_tensor([1, bands, side, side], 0.05, 1.0, &mut seeded(seed))
}

fn cfg(block: usize) -> MetricConfig {
    MetricConfig {
        q2n_block: block,
        ssim_window: 7,
        ..MetricConfig::default()
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn identical_inputs_score_ideal(seed in any::<u64>(), bands in 1usize..10, side in prop::sample::select(vec![8usize, 12, 16, 24])) {
        let x = image(seed, bands, side);
        let c = cfg(8);
        prop_assert_eq!(sam(&x, &x).unwrap(), 0.0);
        prop_assert_eq!(ergas(&x, &x, 4).unwrap(), 0.0);
        prop_assert!((scc(&x, &x).unwrap() - 1.0).abs() < 1e-12);
        prop_assert!((q2n(&x, &x, &c).unwrap() - 1.0).abs() < 1e-12);
        prop_assert!((ssim(&x, &x, &c).unwrap() - 1.0).abs() < 1e-12);
        prop_assert_eq!(psnr(&x, &x, &c).unwrap(), c.psnr_cap);
    }

    #[test]
    fn scores_stay_in_range(seed in any::<u64>(), bands in 1usize..9) {
        let (x, y) = (image(seed, bands, 16), image(seed ^ 0x5555, bands, 16));
        let c = cfg(8);
        let s = sam(&x, &y).unwrap();
        prop_assert!((0.0..=180.0).contains(&s));
        prop_assert!(ergas(&x, &y, 4).unwrap() >= 0.0);
        prop_assert!((-1.0..=1.0).contains(&scc(&x, &y).unwrap()));
        prop_assert!((0.0..=1.0 + 1e-12).contains(&q2n(&x, &y, &c).unwrap()));
        prop_assert!(ssim(&x, &y, &c).unwrap() <= 1.0 + 1e-12);
        let pan = image(seed ^ 0xaaaa, 1, 16);
        let lr = image(seed ^ 0x1234, bands, 4);
        let q = qnr_suite(&x, &lr, &pan, &c).unwrap();
        prop_assert!((0.0..=1.0).contains(&q.qnr));
        prop_assert!((0.0..=1.0).contains(&q.d_lambda) && (0.0..=1.0).contains(&q.d_s));
    }

    #[test]
    fn symmetric_metrics(seed in any::<u64>(), bands in 1usize..6) {
        let (x, y) = (image(seed, bands, 16), image(seed.wrapping_add(1), bands, 16));
        prop_assert_eq!(sam(&x, &y).unwrap(), sam(&y, &x).unwrap());
        prop_assert_eq!(scc(&x, &y).unwrap(), scc(&y, &x).unwrap());
        let c = cfg(8);
        prop_assert!((q2n(&x, &y, &c).unwrap() - q2n(&y, &x, &c).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn larger_error_scores_worse(seed in any::<u64>(), bands in 1usize..6) {
        let x = image(seed, bands, 16);
        let d = uniform_tensor([1, bands, 16, 16], -0.05, 0.05, &mut seeded(seed ^ 7));
        let c = cfg(8);
        let mut last_psnr = f64::INFINITY;
        let mut last_ergas = 0.0;
        for t in [0.25, 0.5, 1.0, 2.0] {
            let y = x.zip_map(&d, |a, b| a + t * b).unwrap();
            let (p, e) = (psnr(&y, &x, &c).unwrap(), ergas(&y, &x, 4).unwrap());
            prop_assert!(p < last_psnr && e > last_ergas);
            last_psnr = p;
            last_ergas = e;
        }
    }
}

#[test]
fn band_gain_changes_sam_global_gain_does_not() {
    let x = image(3, 4, 16);
    let mut y = x.clone();
    y.plane_mut(0, 2).iter_mut().for_each(|v| *v *= 1.5);
    assert!(sam(&y, &x).unwrap() > 0.1);
    // a global gain leaves every spectral angle unchanged
    let g = x.scale(1.5);
    assert!(sam(&g, &x).unwrap() < 1e-6);
    assert!(ergas(&g, &x, 4).unwrap() > 0.0);
}

#[test]
fn more_noise_lowers_q2n_and_ssim_on_average() {
    let x = image(21, 4, 32);
    let c = cfg(16);
    let sigmas = [0.01, 0.03, 0.1, 0.3];
    let mut q = [0.0; 4];
    let mut s = [0.0; 4];
    for trial in 0..10 {
        let mut rng = seeded(100 + trial);
        for (k, sigma) in sigmas.iter().enumerate() {
            let noise = uniform_tensor([1, 4, 32, 32], -1.0, 1.0, &mut rng);
            // uniform on [-a, a] has variance a²/3
            let y = x.zip_map(&noise, |a, b| a + sigma * 3f64.sqrt() * b).unwrap();
            q[k] += q2n(&y, &x, &c).unwrap() / 10.0;
            s[k] += ssim(&y, &x, &c).unwrap() / 10.0;
        }
    }
    assert!(q.windows(2).all(|w| w[0] > w[1]), "{q:?}");
    assert!(s.windows(2).all(|w| w[0] > w[1]), "{s:?}");
}
