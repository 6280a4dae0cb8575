use deepdenoise_core::math::Matrix;
use deepdenoise_core::models::GrbmParams;
use deepdenoise_core::pipeline::*;
use deepdenoise_core::rng::stream_rng;
use proptest::prelude::*;
use rand::Rng;

fn random_image(w: usize, h: usize, seed: u64) -> ImageBuffer {
    let mut rng = stream_rng(seed, 1);
    ImageBuffer::from_fn(w, h, |_, _| rng.random::<f64>())
}

fn arb_image() -> impl Strategy<Value = ImageBuffer> {
    (3usize..24, 3usize..24, any::<u64>()).prop_map(|(w, h, s)| random_image(w, h, s))
}

proptest! {
    #[test]
    fn extract_then_reconstruct_is_identity(img in arb_image(), p in 1usize..9, stride in 1usize..9) {
        let p = p.min(img.width()).min(img.height());
        let stride = stride.min(p);
        let ps = extract_patches(&img, p, stride).unwrap();
        prop_assert!(coverage_counts(&ps, img.width(), img.height()).iter().all(|&d| d >= 1));
        let back = reconstruct_image(&ps, img.width(), img.height()).unwrap();
        for (a, b) in back.pixels().iter().zip(img.pixels()) {
            prop_assert!((a - b).abs() <= 1e-12);
        }
    }

    #[test]
    fn normalization_round_trips(img in arb_image(), p in 1usize..4) {
        let ps = extract_patches(&img, p.min(img.width()).min(img.height()), 1).unwrap();
        for stats in [NormStats::per_image(&ps.patches).unwrap(), NormStats::per_pixel(&ps.patches).unwrap()] {
            prop_assume!(!stats.floored);
            let back = denormalize(&normalize_patches(&ps, &stats).unwrap(), &stats).unwrap();
            for (a, b) in back.patches.as_slice().iter().zip(ps.patches.as_slice()) {
                prop_assert!((a - b).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn wiener_stays_in_unit_interval(img in arb_image()) {
        let out = wiener_prefilter(&img).unwrap();
        prop_assert!(out.pixels().iter().all(|x| (0.0..=1.0).contains(x)));
    }

    #[test]
    fn zero_level_noise_is_identity(img in arb_image(), seed in any::<u64>()) {
        for kind in [NoiseKind::WhiteGaussian, NoiseKind::SaltPepper] {
            let spec = NoiseSpec::new(kind, 0.0).unwrap();
            prop_assert_eq!(&inject_noise(&img, spec, &mut stream_rng(seed, 0)), &img);
        }
    }
}

/// Direct evaluation of the adaptive Wiener estimator for one image.
fn wiener_reference(img: &ImageBuffer) -> Vec<f64> {
    let (w, h) = (img.width() as i64, img.height() as i64);
    let at = |r: i64, c: i64| img.get(r.clamp(0, h - 1) as usize, c.clamp(0, w - 1) as usize);
    let mut stats = Vec::new();
    for r in 0..h {
        for c in 0..w {
            let vals: Vec<f64> = (-1..=1).flat_map(|dr| (-1..=1).map(move |dc| (dr, dc))).map(|(dr, dc)| at(r + dr, c + dc)).collect();
            let m = vals.iter().sum::<f64>() / 9.0;
            let s2 = vals.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / 9.0;
            stats.push((m, s2));
        }
    }
    let nu = stats.iter().map(|s| s.1).sum::<f64>() / stats.len() as f64;
    img.pixels()
        .iter()
        .zip(&stats)
        .map(|(&x, &(m, s2))| {
            let gain = if s2.max(nu) == 0.0 { 0.0 } else { (s2 - nu).max(0.0) / s2.max(nu) };
            (m + gain * (x - m)).clamp(0.0, 1.0)
        })
        .collect()
}

#[test]
fn wiener_matches_direct_evaluation_and_attenuates_a_spike() {
    let mut img = ImageBuffer::constant(5, 5, 0.2);
    img.set(2, 2, 0.9);
    let out = wiener_prefilter(&img).unwrap();
    for (a, b) in out.pixels().iter().zip(wiener_reference(&img)) {
        assert!((a - b).abs() < 1e-12);
    }
    let m = (8.0 * 0.2 + 0.9) / 9.0;
    let y = out.get(2, 2);
    assert!(y < 0.9 && y > m, "spike {y}, local mean {m}");

    let noisy = random_image(17, 13, 4);
    for (a, b) in wiener_prefilter(&noisy).unwrap().pixels().iter().zip(wiener_reference(&noisy)) {
        assert!((a - b).abs() < 1e-12);
    }
}

#[test]
fn wiener_rejects_tiny_images() {
    assert!(wiener_prefilter(&ImageBuffer::constant(2, 9, 0.5)).is_err());
}

#[test]
fn salt_and_pepper_at_full_level_is_binary() {
    let img = random_image(30, 30, 2);
    let spec = NoiseSpec::new(NoiseKind::SaltPepper, 1.0).unwrap();
    let out = inject_noise(&img, spec, &mut stream_rng(3, 3));
    assert!(out.pixels().iter().all(|&x| x == 0.0 || x == 1.0));
    let white = out.pixels().iter().filter(|&&x| x == 1.0).count() as f64 / 900.0;
    assert!((white - 0.5).abs() < 0.1);
}

#[test]
fn gaussian_noise_variance_and_psnr() {
    let img = ImageBuffer::constant(1000, 1000, 0.5);
    let spec = NoiseSpec::new(NoiseKind::WhiteGaussian, 0.2).unwrap();
    let raw = inject_noise_raw(&img, spec, &mut stream_rng(6, 0));
    let n = raw.pixels().len() as f64;
    let m = raw.pixels().iter().sum::<f64>() / n;
    let var = raw.pixels().iter().map(|x| (x - m) * (x - m)).sum::<f64>() / n;
    assert!((0.0392..=0.0408).contains(&var), "variance {var}");
    let noisy = inject_noise(&img, spec, &mut stream_rng(6, 0));
    let db = psnr(&img, &noisy).unwrap();
    assert!((db - 13.98).abs() <= 0.3, "psnr {db}");
}

#[test]
fn psnr_falls_with_noise_level() {
    let img = random_image(64, 64, 9);
    let mut wins = 0;
    for seed in 0..20 {
        let mut prev = f64::INFINITY;
        let mut ok = true;
        for level in [0.05, 0.1, 0.2, 0.4] {
            let spec = NoiseSpec::new(NoiseKind::WhiteGaussian, level).unwrap();
            let db = psnr(&img, &inject_noise(&img, spec, &mut stream_rng(seed, 0))).unwrap();
            ok &= db <= prev;
            prev = db;
        }
        wins += ok as usize;
    }
    assert_eq!(wins, 20);
}

#[test]
fn psnr_constructed_cases() {
    let a = ImageBuffer::constant(10, 10, 0.5);
    let b = ImageBuffer::constant(10, 10, 0.6);
    assert!((psnr(&a, &b).unwrap() - 20.0).abs() < 1e-9);
    assert_eq!(psnr(&a, &a).unwrap(), f64::INFINITY);
    assert!(psnr(&a, &ImageBuffer::constant(9, 10, 0.5)).is_err());
    assert_eq!(psnr_from_mse(0.01), 20.0);
}

#[test]
fn grayscale_is_channel_mean() {
    let r = ImageBuffer::from_fn(2, 1, |_, c| [1.0, 0.3][c]);
    let g = ImageBuffer::from_fn(2, 1, |_, c| [1.0, 0.6][c]);
    let b = ImageBuffer::from_fn(2, 1, |_, c| [1.0, 0.9][c]);
    let out = to_grayscale(&r, &g, &b).unwrap();
    assert_eq!(out.get(0, 0), 1.0);
    assert!((out.get(0, 1) - 0.6).abs() < 1e-15);
    let gray = random_image(5, 4, 1);
    assert_eq!(to_grayscale(&gray, &gray, &gray).unwrap().pixels().len(), 20);
    for (a, b) in to_grayscale(&gray, &gray, &gray).unwrap().pixels().iter().zip(gray.pixels()) {
        assert!((a - b).abs() < 1e-15);
    }
    assert!(to_grayscale(&gray, &gray, &random_image(4, 4, 1)).is_err());
}

#[test]
fn zero_model_returns_the_prefiltered_mean() {
    let noisy = random_image(20, 16, 5);
    let model = GrbmParams::zeros(16, 8);
    let out = denoise_image(&noisy, &model, 4, 1).unwrap();
    let filtered = wiener_prefilter(&noisy).unwrap();
    let ps = extract_patches(&filtered, 4, 1).unwrap();
    let m = ps.patches.as_slice().iter().sum::<f64>() / ps.patches.as_slice().len() as f64;
    assert!(out.pixels().iter().all(|x| (x - m).abs() < 1e-12));
    assert_eq!(out, denoise_image(&noisy, &model, 4, 1).unwrap());
}

#[test]
fn mismatched_model_is_a_contract_error() {
    let noisy = random_image(20, 16, 5);
    assert!(matches!(
        denoise_image(&noisy, &GrbmParams::zeros(9, 2), 4, 1),
        Err(deepdenoise_core::Error::Contract(_))
    ));
}

#[test]
fn pipeline_stages_compose() {
    let noisy = random_image(12, 12, 8);
    let model = GrbmParams::random(9, 4, 0.3, &mut stream_rng(1, 1));
    let prepared = prepare_image(&noisy, 3, 2).unwrap();
    let mapped: Matrix = map_patches(&prepared, &model).unwrap();
    assert_eq!(assemble_image(&prepared, mapped).unwrap(), denoise_image(&noisy, &model, 3, 2).unwrap());
}
