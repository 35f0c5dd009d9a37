//! Test statistics for the sampling experiments: normal CDF, Anderson-Darling,
//! chi-squared and Kolmogorov-Smirnov tail probabilities, and the radial
//! goodness-of-fit test against exact finite-n densities.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::model::RadialModel;
use crate::numeric::KahanSum;
use crate::special::{reg_lower_gamma, reg_upper_gamma};

/// Standard normal CDF through the regularized incomplete gamma
/// (`erf(x) = P(1/2, x^2)`).
pub fn normal_cdf(z: f64) -> f64 {
    let half = reg_lower_gamma(0.5, z * z / 2.0).unwrap_or(1.0);
    if z >= 0.0 {
        0.5 * (1.0 + half)
    } else {
        0.5 * (1.0 - half)
    }
}

/// Anderson-Darling `A^2` statistic against the standard normal for an
/// ascending sample of standardized values.
pub fn anderson_darling_normal(sorted_z: &[f64]) -> f64 {
    let t = sorted_z.len();
    let tf = t as f64;
    let mut acc = KahanSum::new();
    for i in 0..t {
        let lo = normal_cdf(sorted_z[i]).max(1e-300);
        let hi = (1.0 - normal_cdf(sorted_z[t - 1 - i])).max(1e-300);
        acc.add((2.0 * i as f64 + 1.0) * (lo.ln() + hi.ln()));
    }
    -tf - acc.value() / tf
}

/// Survival function of the chi-squared distribution with `df` degrees of
/// freedom.
pub fn chi_squared_sf(x: f64, df: usize) -> Result<f64> {
    reg_upper_gamma(df as f64 / 2.0, x / 2.0)
}

/// Asymptotic Kolmogorov-Smirnov tail probability for statistic `d` from `n`
/// samples (Stephens' finite-n adjustment).
pub fn kolmogorov_sf(d: f64, n: usize) -> f64 {
    let sqrt_n = (n as f64).sqrt();
    let lambda = (sqrt_n + 0.12 + 0.11 / sqrt_n) * d;
    let mut sum = 0.0;
    for m in 1..=100 {
        let term = 2.0 * (-1f64).powi(m + 1) * (-2.0 * (m as f64) * (m as f64) * lambda * lambda).exp();
        sum += term;
        if term.abs() < 1e-16 {
            break;
        }
    }
    sum.clamp(0.0, 1.0)
}

/// Radial CDF of the unrescaled ensemble: fraction of the `n` particles
/// expected inside `|zeta| <= r`,
/// `F(r) = (1/n) sum_j P((j+1+c)/k, n tau0 r^{2k})`.
pub fn radial_cdf(model: &RadialModel, r: f64) -> Result<f64> {
    let kf = model.k() as f64;
    let t = model.n() as f64 * model.tau0() * r.powi(2 * model.k() as i32);
    let mut acc = KahanSum::new();
    for j in 0..model.n() {
        acc.add(reg_lower_gamma((j as f64 + 1.0 + model.c()) / kf, t)?);
    }
    Ok(acc.value() / model.n() as f64)
}

/// Chi-squared p-value of pooled sample points against the exact radial law,
/// using equal-probability radial bins.
pub fn radial_chi_squared_p(points: &[Complex64], model: &RadialModel, bins: usize) -> Result<f64> {
    if bins < 2 || points.len() < 10 * bins {
        return Err(Error::InvalidParameter(format!(
            "chi-squared needs >= 2 bins and >= 10 points per bin (got {} points, {bins} bins)",
            points.len()
        )));
    }
    // bin edges by bisection on the monotone radial CDF
    let mut edges = Vec::with_capacity(bins + 1);
    edges.push(0.0);
    let rmax = 3.0 * model.droplet_radius() + 1.0;
    for i in 1..bins {
        let target = i as f64 / bins as f64;
        let (mut lo, mut hi) = (0.0, rmax);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if radial_cdf(model, mid)? < target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        edges.push(0.5 * (lo + hi));
    }
    edges.push(f64::INFINITY);

    let mut observed = vec![0usize; bins];
    for z in points {
        let r = z.norm();
        let idx = edges.partition_point(|&e| e <= r).saturating_sub(1).min(bins - 1);
        observed[idx] += 1;
    }
    let expected = points.len() as f64 / bins as f64;
    let chi2: f64 = observed
        .iter()
        .map(|&o| {
            let d = o as f64 - expected;
            d * d / expected
        })
        .sum();
    chi_squared_sf(chi2, bins - 1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};

    #[test]
    fn normal_cdf_reference_values() {
        assert_relative_eq!(normal_cdf(0.0), 0.5, max_relative = 1e-14);
        assert_relative_eq!(normal_cdf(1.0), 0.8413447460685429, max_relative = 1e-12);
        assert_relative_eq!(normal_cdf(-2.0), 0.022750131948179212, max_relative = 1e-11);
        assert!(normal_cdf(-40.0) >= 0.0);
    }

    #[test]
    fn chi_squared_sf_reference() {
        // Q(x = df) ~ 0.44 for df = 10; exact value frozen from the
        // regularized gamma
        let p = chi_squared_sf(10.0, 10).unwrap();
        assert_relative_eq!(p, 0.44049328506521273, max_relative = 1e-10);
    }

    #[test]
    fn kolmogorov_tail_levels() {
        // lambda = 1.36 is the classical 5% point
        let n = 10_000usize;
        let d = 1.36 / (n as f64).sqrt();
        let p = kolmogorov_sf(d, n);
        assert!((p - 0.05).abs() < 0.005, "p = {p}");
    }

    #[test]
    fn anderson_darling_detects_uniform_not_normal() {
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(5);
        let mut normal: Vec<f64> = (0..4000)
            .map(|_| {
                // Box-Muller from uniforms keeps the test free of rand_distr
                let u1: f64 = rng.gen::<f64>().max(1e-12);
                let u2: f64 = rng.gen();
                (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
            })
            .collect();
        normal.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let a_norm = anderson_darling_normal(&normal);
        assert!(a_norm < 3.857, "A^2 = {a_norm} for genuinely normal data");

        let mut uniform: Vec<f64> = (0..4000).map(|_| rng.gen::<f64>() * 4.0 - 2.0).collect();
        uniform.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let a_unif = anderson_darling_normal(&uniform);
        assert!(a_unif > 10.0, "A^2 = {a_unif} should reject uniform data");
    }

    #[test]
    fn radial_cdf_monotone_normalized() {
        let model = RadialModel::standard(1, 1.0, 16).unwrap();
        let mut prev = 0.0;
        for i in 1..=30 {
            let r = i as f64 * 0.1;
            let f = radial_cdf(&model, r).unwrap();
            assert!(f >= prev);
            prev = f;
        }
        assert!((prev - 1.0).abs() < 1e-12);
    }
}
