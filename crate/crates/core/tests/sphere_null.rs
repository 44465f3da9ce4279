use canary_audit::rng::{substream, Purpose};
use canary_audit::sphere::{fill_unit_sphere, gaussian_null_approximation, sample_unit_sphere};
use canary_audit::{CosineNull, NullCosineDistribution};
use proptest::prelude::*;
use statrs::distribution::{Beta, ContinuousCDF, Normal};

/// Variance of the first coordinate of uniform sphere points, with its
/// standard error.
fn sampled_variance(d: usize, n: usize, seed: u64) -> (f64, f64) {
    let mut rng = substream(seed, Purpose::Auxiliary, d as u64, 0);
    let mut x = vec![0.0f64; d];
    let (mut s, mut ss) = (0.0, 0.0);
    for _ in 0..n {
        fill_unit_sphere(&mut rng, &mut x);
        let t2 = x[0] * x[0];
        s += t2;
        ss += t2 * t2;
    }
    let mean = s / n as f64;
    let var = ss / n as f64 - mean * mean;
    (mean, (var / n as f64).sqrt())
}

#[test]
fn sampled_cosine_variance_is_one_over_d() {
    for d in [100, 10_000] {
        let (v, se) = sampled_variance(d, 100_000, 7);
        let want = 1.0 / d as f64;
        assert!((v - want).abs() <= 3.0 * se, "d {d}: {v} vs {want} ± {se}");
        assert_eq!(NullCosineDistribution::new(d).unwrap().variance::<f64>(), want);
    }
}

#[test]
fn sampled_points_are_unit() {
    let mut rng = substream(1, Purpose::Auxiliary, 0, 0);
    for d in [2, 3, 50, 4096] {
        let u = sample_unit_sphere::<f64, _>(d, &mut rng).unwrap();
        let n: f64 = u.coords().iter().map(|v| v * v).sum();
        assert!((n - 1.0).abs() < 1e-12);
    }
}

fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        s += f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    s * h / 3.0
}

#[test]
fn pdf_integrates_to_one() {
    for d in [3, 5, 10, 100, 1000, 10_000] {
        let law = NullCosineDistribution::new(d).unwrap();
        let total = simpson(|t| law.pdf(t).unwrap(), -1.0, 1.0, 400_000);
        assert!((total - 1.0).abs() < 1e-8, "d {d}: {total}");
    }
    // Uniform on [−1, 1] at d = 3.
    assert!((NullCosineDistribution::new(3).unwrap().pdf(0.7f64).unwrap() - 0.5).abs() < 1e-12);
}

#[test]
fn cdf_matches_beta_oracle() {
    for d in [2, 3, 7, 100, 2500] {
        let law = NullCosineDistribution::new(d).unwrap();
        let a = (d as f64 - 1.0) / 2.0;
        let beta = Beta::new(a, a).unwrap();
        for i in 0..=200 {
            let t = -1.0 + i as f64 / 100.0;
            let want = beta.cdf((1.0 + t) / 2.0);
            let got = law.cdf(t).unwrap();
            assert!((got - want).abs() < 1e-10, "d {d}, t {t}: {got} vs {want}");
        }
    }
}

#[test]
fn gaussian_approximation_is_close_from_d_1000() {
    let n = Normal::standard();
    for d in [1000, 10_000, 100_000, 1_000_000] {
        let law = NullCosineDistribution::new(d).unwrap();
        let scale = 1.0 / (d as f64).sqrt();
        let mut gap: f64 = 0.0;
        for i in -8000..=8000 {
            let t = i as f64 * 8.0 * scale / 8000.0;
            gap = gap.max((law.cdf(t).unwrap() - n.cdf(t * (d as f64).sqrt())).abs());
        }
        assert!(gap <= 1e-3, "d {d}: {gap}");
    }
    assert_eq!(CosineNull::default_for(999).unwrap(), CosineNull::Exact { dim: 999 });
    assert_eq!(CosineNull::default_for(1000).unwrap(), CosineNull::Gaussian { dim: 1000 });
    let g = gaussian_null_approximation::<f64>(10_000).unwrap();
    assert_eq!((g.mean, g.std), (0.0, 0.01));
}

#[test]
fn rejects_out_of_domain() {
    assert!(NullCosineDistribution::new(1).is_err());
    let law = NullCosineDistribution::new(10).unwrap();
    assert!(law.cdf(1.5).is_err());
    assert!(law.pdf(f64::NAN).is_err());
    assert!(law.quantile(-0.1).is_err());
    assert_eq!(CosineNull::exact(10).unwrap().sf(2.0), 0.0);
    assert_eq!(CosineNull::gaussian(10).unwrap().sf(-2.0), 1.0);
}

proptest! {
    #[test]
    fn quantile_inverts_cdf(d in 2usize..20_000, p in 0.001..0.999f64) {
        let law = NullCosineDistribution::new(d).unwrap();
        let t = law.quantile(p).unwrap();
        prop_assert!((law.cdf(t).unwrap() - p).abs() < 1e-9);
    }

    #[test]
    fn symmetric_about_zero(d in 2usize..5000, t in -1.0..1.0f64) {
        let law = NullCosineDistribution::new(d).unwrap();
        prop_assert!((law.cdf(t).unwrap() + law.cdf(-t).unwrap() - 1.0).abs() < 1e-12);
        prop_assert!((law.sf(t).unwrap() - law.cdf(-t).unwrap()).abs() == 0.0);
    }
}
