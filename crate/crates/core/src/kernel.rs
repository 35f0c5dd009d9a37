//! Exact finite-n and limiting correlation kernels and 1-point densities for
//! radial insertion models.
//!
//! All series are summed in log space: the per-term log magnitude is
//! `2j log|z| - log ||z^j||^2`, combined by log-sum-exp, so particle counts up
//! to 10^4 and beyond never touch the f64 overflow boundary.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{FieldSample, MomentTable, RadialModel};
use crate::numeric::{log_sum_unimodal, KahanSum};
use crate::quad::GaussLegendre;
use crate::special::{self, MLParams};

/// Rescaled finite-n 1-point density
/// `R_n(z) = sum_{j<n} |z|^{2j} / ||z^j||^2 * e^{-V0(z)}`.
///
/// At the origin the density is `0` for `c > 0`, finite for `c = 0`, and the
/// distinguished value `+inf` for `c < 0` (the inserted charge is attractive
/// and the density genuinely diverges there).
pub fn finite_n_density(table: &MomentTable, z: Complex64) -> f64 {
    let model = table.model();
    let s = z.norm_sqr();
    if s == 0.0 {
        return density_at_origin(model);
    }
    let log_s = s.ln();
    let n = model.n();
    let (log_sum, _) = log_sum_unimodal(0, n - 1, |j| j as f64 * log_s - table.log_norm(j));
    (log_sum - model.v0(z)).exp()
}

fn density_at_origin(model: &RadialModel) -> f64 {
    if model.c() > 0.0 {
        0.0
    } else if model.c() == 0.0 {
        (-model.log_norm(0)).exp()
    } else {
        f64::INFINITY
    }
}

/// Unrescaled 1-point density `bold R_n(zeta) = r_n^{-2} R_n(r_n^{-1} zeta)`.
pub fn unrescaled_density(table: &MomentTable, zeta: Complex64) -> f64 {
    let r_n = table.model().microscopic_scale();
    finite_n_density(table, zeta / r_n) / (r_n * r_n)
}

/// Limiting Bergman kernel of the Fock-Sobolev space `L^2_a(mu0)`.
///
/// For `tau0 = 1` this is `k E_{1/k,(1+c)/k}(z conj(w))`; general `tau0`
/// enters through the isometry `f(z) -> tau0^{-(1+c)/2k} f(tau0^{-1/2k} z)`,
/// so only the `tau0 = 1` series exists:
/// `L0(z, w) = tau0^{(1+c)/k} L0^{tau=1}(tau0^{1/2k} z, tau0^{1/2k} w)`.
pub fn limiting_kernel(model: &RadialModel, z: Complex64, w: Complex64) -> Result<Complex64> {
    let kf = model.k() as f64;
    let p = MLParams::new(1.0 / kf, (1.0 + model.c()) / kf)?;
    let scale = model.tau0().powf(1.0 / kf);
    let e = special::mittag_leffler(p, scale * z * w.conj())?;
    Ok(kf * model.tau0().powf((1.0 + model.c()) / kf) * e)
}

/// Limiting 1-point density `R(z) = L0(z, z) e^{-V0(z)}`, evaluated entirely
/// in log space. Strictly positive away from the origin; the origin value
/// follows the same convention as [`finite_n_density`].
pub fn limiting_density(model: &RadialModel, z: Complex64) -> f64 {
    limiting_density_with_terms(model, z).0
}

/// As [`limiting_density`], also reporting the truncation index of the
/// Mittag-Leffler series (for output metadata).
pub fn limiting_density_with_terms(model: &RadialModel, z: Complex64) -> (f64, usize) {
    let s = z.norm_sqr();
    if s == 0.0 {
        return (density_at_origin(model), 0);
    }
    let kf = model.k() as f64;
    let scale = model.tau0().powf(1.0 / kf);
    let (log_e, terms) =
        special::log_ml_positive_with_terms(1.0 / kf, (1.0 + model.c()) / kf, scale * s);
    let log_r = kf.ln() + (1.0 + model.c()) / kf * model.tau0().ln() + log_e - model.v0(z);
    (log_r.exp(), terms)
}

/// Resolution of the polar product quadrature used by the mass-one check.
#[derive(Debug, Clone, Copy)]
pub struct PolarQuadSpec {
    pub radial: usize,
    pub angular: usize,
}

impl Default for PolarQuadSpec {
    fn default() -> Self {
        Self { radial: 400, angular: 256 }
    }
}

/// Result of the mass-one quadrature at a point.
#[derive(Debug, Clone, Copy)]
pub struct MassOneReport {
    /// `int |L0(z,w)|^2 dmu0(w) - L0(z,z)`.
    pub defect: f64,
    /// Defect divided by `L0(z,z)`; zero for a reproducing kernel.
    pub normalized_defect: f64,
    /// Difference against a half-resolution evaluation.
    pub quad_error_estimate: f64,
}

/// Mass-one defect `int |L0(z,w)|^2 dmu0(w) - L0(z,z)` by a radial x angular
/// product rule. For the reproducing kernel this vanishes identically (the
/// coefficient identity `sum_j a_j^2 |z|^{2j} ||z^j||^2 = sum_j a_j |z|^{2j}`
/// term by term), so the returned defect measures pure quadrature error.
pub fn mass_one_defect(model: &RadialModel, z: Complex64, spec: &PolarQuadSpec) -> Result<MassOneReport> {
    if spec.radial < 8 || spec.angular < 8 {
        return Err(Error::InvalidParameter("mass-one quadrature needs >= 8 nodes per axis".into()));
    }
    let diag = limiting_kernel(model, z, z)?.re;
    let full = mass_one_integral(model, z, spec.radial, spec.angular)?;
    let half = mass_one_integral(model, z, spec.radial / 2, spec.angular / 2)?;
    let defect = full - diag;
    let err = (full - half).abs();
    if err > 1e-4 * diag.abs().max(1e-300) {
        return Err(Error::Quadrature(format!(
            "mass-one quadrature not converged at z = {z}: refinement delta {err:.3e} vs diagonal {diag:.3e}"
        )));
    }
    Ok(MassOneReport {
        defect,
        normalized_defect: defect / diag,
        quad_error_estimate: err,
    })
}

fn mass_one_integral(model: &RadialModel, z: Complex64, radial: usize, angular: usize) -> Result<f64> {
    let k = model.k();
    let kf = k as f64;
    let tau0 = model.tau0();
    let c = model.c();
    // integrand log-magnitude ~ 2 tau0 |z|^k r^k - tau0 r^{2k}; peaked at
    // r^k = |z|^k with decay width sqrt(66/tau0) in r^k
    let zk = z.norm().powi(k as i32);
    let rmax = ((zk + (66.0 / tau0).sqrt()) * 1.1).powf(1.0 / kf) + 0.5;
    let coeffs = kernel_coefficients(model, tau0.powf(1.0 / kf) * z.norm() * rmax);
    let gl = GaussLegendre::new(radial);
    let scale = tau0.powf(1.0 / kf);

    let mut acc = KahanSum::new();
    for (r, wr) in gl.mapped(0.0, rmax) {
        // angular average of |L0(z, r e^{i t})|^2 by periodic trapezoid
        // weight e^{-V0(w)} dA = r^{2c} e^{-tau0 r^{2k}} 2r dr; fold into the
        // squared kernel magnitude in log space to stay clear of overflow
        let log_weight = 2.0 * c * r.ln() - tau0 * r.powi(2 * k as i32);
        let mut ang = KahanSum::new();
        for m in 0..angular {
            let theta = 2.0 * std::f64::consts::PI * m as f64 / angular as f64;
            let w = Complex64::from_polar(r, theta);
            let mag = horner(&coeffs, scale * z * w.conj()).norm();
            if mag > 0.0 {
                ang.add((2.0 * mag.ln() + log_weight).exp());
            }
        }
        acc.add(wr * ang.value() / angular as f64 * 2.0 * r);
    }
    let pref = model.tau0().powf(2.0 * (1.0 + c) / kf) * kf * kf;
    Ok(pref * acc.value())
}

/// Taylor coefficients of `L0^{tau=1}` up to the horizon needed at argument
/// modulus `u_max`; the first omitted term is below 1e-16 of the peak.
pub(crate) fn kernel_coefficients(model: &RadialModel, u_max: f64) -> Vec<f64> {
    let kf = model.k() as f64;
    let b = (1.0 + model.c()) / kf;
    let peak = ((u_max.max(1.0).powf(kf) - b) * kf).max(0.0) as usize;
    let j_max = 2 * peak + 120;
    (0..=j_max)
        .map(|j| (-special::ln_gamma(j as f64 / kf + b)).exp())
        .collect()
}

pub(crate) fn horner(coeffs: &[f64], u: Complex64) -> Complex64 {
    let mut p = Complex64::new(0.0, 0.0);
    for &a in coeffs.iter().rev() {
        p = p * u + a;
    }
    p
}

/// Ratio `bold R_n(zeta) / (n Lap Q(zeta))` at a regular bulk point.
///
/// The regular-bulk cushion is `delta_n = r_n log n / max(k, 10)`; both the
/// distance to the insertion and the distance to the droplet boundary must
/// exceed it. (The bare `r_n log n` margin is already wider than the droplet
/// at desk-scale `n` for `k >= 2`; the `max(k, 10)` divisor is the constant
/// the asymptotic analysis actually runs on.)
pub fn bulk_asymptotic_ratio(model: &RadialModel, zeta: Complex64) -> Result<f64> {
    let r_n = model.microscopic_scale();
    let margin = r_n * (model.n() as f64).ln() / (model.k() as f64).max(10.0);
    let rho = zeta.norm();
    let droplet = model.droplet_radius();
    if rho <= margin {
        return Err(Error::Precondition(format!(
            "regular-bulk inner distance failed: |zeta| = {rho:.6} <= delta_n = {margin:.6}"
        )));
    }
    if droplet - rho <= margin {
        return Err(Error::Precondition(format!(
            "regular-bulk boundary distance failed: dist(zeta, dS) = {:.6} <= delta_n = {margin:.6}",
            droplet - rho
        )));
    }
    let table = MomentTable::build(model, model.n())?;
    let dens = unrescaled_density(&table, zeta);
    Ok(dens / (model.n() as f64 * model.laplacian_q0(zeta)))
}

/// Evaluate the rescaled finite-n density on a set of points (parallel over
/// points, deterministic ordering).
pub fn finite_n_field(table: &MomentTable, points: &[Complex64], label: &str) -> Result<FieldSample> {
    let values: Vec<f64> = points.par_iter().map(|&z| finite_n_density(table, z)).collect();
    let mut fs = FieldSample::new(points.to_vec(), values, label, *table.model())?;
    fs.insert_metadata("series", format!("finite-n partial sum, n = {}", table.model().n()));
    Ok(fs)
}

/// Evaluate the limiting density on a set of points; records the largest
/// series truncation index in the metadata.
pub fn limiting_field(model: &RadialModel, points: &[Complex64], label: &str) -> Result<FieldSample> {
    let evals: Vec<(f64, usize)> = points
        .par_iter()
        .map(|&z| limiting_density_with_terms(model, z))
        .collect();
    let max_terms = evals.iter().map(|&(_, t)| t).max().unwrap_or(0);
    let values = evals.into_iter().map(|(v, _)| v).collect();
    let mut fs = FieldSample::new(points.to_vec(), values, label, *model)?;
    fs.insert_metadata("series_truncation_j", max_terms.to_string());
    Ok(fs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn table(k: u32, c: f64, n: usize) -> MomentTable {
        let m = RadialModel::standard(k, c, n).unwrap();
        MomentTable::build(&m, n).unwrap()
    }

    #[test]
    fn ginibre_bulk_density_is_one() {
        let t = table(1, 0.0, 400);
        let v = finite_n_density(&t, Complex64::new(0.5, 0.0));
        assert_relative_eq!(v, 1.0, max_relative = 1e-6);
    }

    #[test]
    fn conical_density_closed_form() {
        // k = 1, c = 1: R(z) = 1 - e^{-|z|^2}; n = 400 has fully converged at
        // |z| = 1
        let t = table(1, 1.0, 400);
        let v = finite_n_density(&t, Complex64::new(1.0, 0.0));
        assert_relative_eq!(v, 0.6321205588285577, max_relative = 1e-9);
        assert!((v - limiting_density(t.model(), Complex64::new(1.0, 0.0))).abs() < 1e-12);
    }

    #[test]
    fn density_vanishes_like_power_at_origin() {
        // k = 2, c = 0.5, n = 1: R(z) = O(|z|^{2c}) = O(|z|) near 0
        let t = table(2, 0.5, 1);
        let v1 = finite_n_density(&t, Complex64::new(1e-4, 0.0));
        let v2 = finite_n_density(&t, Complex64::new(2e-4, 0.0));
        assert!(v1 > 0.0);
        assert_relative_eq!(v2 / v1, 2.0, max_relative = 1e-6);
        assert_eq!(finite_n_density(&t, Complex64::new(0.0, 0.0)), 0.0);
    }

    #[test]
    fn density_origin_conventions() {
        let attract = table(2, -0.5, 4);
        assert_eq!(finite_n_density(&attract, Complex64::new(0.0, 0.0)), f64::INFINITY);
        let neutral = table(1, 0.0, 4);
        assert_relative_eq!(finite_n_density(&neutral, Complex64::new(0.0, 0.0)), 1.0, max_relative = 1e-14);
    }

    #[test]
    fn monotone_in_n_and_convergent() {
        let model = RadialModel::standard(2, 0.5, 200).unwrap();
        let z = Complex64::new(0.9, -0.3);
        let limit = limiting_density(&model, z);
        let mut prev = 0.0;
        for n in [10usize, 50, 200] {
            let t = MomentTable::build(&model.with_n(n), n).unwrap();
            let v = finite_n_density(&t, z);
            assert!(v >= prev, "partial sums of positive terms must grow");
            prev = v;
        }
        assert_relative_eq!(prev, limit, max_relative = 1e-8);
    }

    #[test]
    fn limiting_kernel_closed_forms() {
        // Ginibre: L0(z, w) = e^{z conj(w)}
        let m = RadialModel::standard(1, 0.0, 10).unwrap();
        let v = limiting_kernel(&m, Complex64::new(1.0, 0.0), Complex64::new(1.0, 0.0)).unwrap();
        assert_relative_eq!(v.re, std::f64::consts::E, max_relative = 1e-13);
        // k = 1, c = 1: L0(1,1) = E_{1,2}(1) = e - 1
        let m = RadialModel::standard(1, 1.0, 10).unwrap();
        let v = limiting_kernel(&m, Complex64::new(1.0, 0.0), Complex64::new(1.0, 0.0)).unwrap();
        assert_relative_eq!(v.re, 1.7182818284590452, max_relative = 1e-13);
        // k = 2, c = 0: L0(0,0) = 2/Gamma(1/2) = 2/sqrt(pi)
        let m = RadialModel::standard(2, 0.0, 10).unwrap();
        let v = limiting_kernel(&m, Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0)).unwrap();
        assert_relative_eq!(v.re, std::f64::consts::FRAC_2_SQRT_PI, max_relative = 1e-13);
    }

    #[test]
    fn limiting_kernel_tau0_scaling_matches_norms() {
        // L0(0,0) = 1/||1||^2 must hold for general tau0; guards the
        // parameter-scaling route against the moment-table (quadrature-backed)
        // normalization
        for &(k, c, tau0) in &[(1u32, 0.0, 2.0), (2, 0.5, 0.7), (3, -0.3, 1.9)] {
            let m = RadialModel::new(k, c, tau0, 4, 1.0).unwrap();
            let t = MomentTable::build(&m, 8).unwrap();
            let l00 = limiting_kernel(&m, Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0))
                .unwrap()
                .re;
            assert_relative_eq!(l00, t.coefficient(0), max_relative = 1e-12);
        }
    }

    #[test]
    fn limiting_kernel_hermitian() {
        let m = RadialModel::standard(2, 0.5, 10).unwrap();
        let z = Complex64::new(0.8, 0.5);
        let w = Complex64::new(-0.3, 1.1);
        let a = limiting_kernel(&m, z, w).unwrap();
        let b = limiting_kernel(&m, w, z).unwrap();
        assert_relative_eq!(a.re, b.conj().re, max_relative = 1e-12);
        assert_relative_eq!(a.im, b.conj().im, max_relative = 1e-12);
        assert!(limiting_kernel(&m, z, z).unwrap().re > 0.0);
    }

    #[test]
    fn limiting_kernel_positive_semidefinite_on_five_points() {
        // smallest eigenvalue of the 5x5 kernel Gram matrix >= -1e-10, via
        // unnormalized inverse-power-free Gershgorin-safe Jacobi sweep
        let m = RadialModel::standard(2, 0.5, 10).unwrap();
        let pts = [
            Complex64::new(0.3, 0.4),
            Complex64::new(-0.8, 0.0),
            Complex64::new(1.2, -0.5),
            Complex64::new(0.0, 0.1),
            Complex64::new(1.6, 0.2),
        ];
        let mut g = [[Complex64::new(0.0, 0.0); 5]; 5];
        for i in 0..5 {
            for j in 0..5 {
                g[i][j] = limiting_kernel(&m, pts[i], pts[j]).unwrap();
            }
        }
        // power iteration on the Hermitian matrix (s I - G): its top
        // eigenvalue is s - min_eig(G)
        let s: f64 = (0..5)
            .map(|i| (0..5).map(|j| g[i][j].norm()).sum::<f64>())
            .fold(0.0, f64::max);
        let mut v = [Complex64::new(1.0, 0.0); 5];
        let mut lam = 0.0;
        for _ in 0..500 {
            let mut w = [Complex64::new(0.0, 0.0); 5];
            for i in 0..5 {
                for j in 0..5 {
                    let mij = if i == j { Complex64::new(s, 0.0) - g[i][j] } else { -g[i][j] };
                    w[i] += mij * v[j];
                }
            }
            let norm = w.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
            lam = norm;
            for i in 0..5 {
                v[i] = w[i] / norm;
            }
        }
        let min_eig = s - lam;
        assert!(min_eig >= -1e-10, "min eigenvalue {min_eig}");
    }

    #[test]
    fn coefficient_identity_sums_to_m() {
        // sum_{j<m} a_j ||z^j||^2 = m after the log-space round trip
        for (k, c) in [(1u32, 0.0), (1, 1.0), (2, 0.5), (3, -0.5)] {
            let m = RadialModel::standard(k, c, 50).unwrap();
            let t = MomentTable::build(&m, 50).unwrap();
            let mut acc = 0.0;
            for mm in 1..=50usize {
                acc += t.coefficient(mm - 1) * t.log_norm(mm - 1).exp();
                assert_relative_eq!(acc, mm as f64, max_relative = 1e-12);
            }
        }
    }

    #[test]
    fn tail_ratio_to_leading_term() {
        // |R - Lap Q0| ~ leading tail term at |z|^{2k} = 9
        for (k, c) in [(1u32, 1.0), (2, 0.5)] {
            let m = RadialModel::standard(k, c, 10).unwrap();
            let x = 9f64.powf(1.0 / (2.0 * k as f64));
            let z = Complex64::new(x, 0.0);
            let diff = limiting_density(&m, z) - m.laplacian_q0(z);
            let (lead, _) = special::ml_tail_asymptotic(k, c, x, 1);
            let ratio = diff / lead;
            assert!((0.5..=1.5).contains(&ratio), "k={k} c={c} ratio={ratio}");
        }
    }

    #[test]
    fn vanishing_rate_at_origin() {
        // R(z)/|z|^{2c} -> k tau0^{(1+c)/k} / Gamma((1+c)/k) as z -> 0
        for &(k, c, tau0) in &[(2u32, -0.5, 1.0), (2, 0.5, 1.0), (1, 1.0, 2.0)] {
            let m = RadialModel::new(k, c, tau0, 10, 1.0).unwrap();
            let z = Complex64::new(1e-4, 0.0);
            let v = limiting_density(&m, z) / z.norm().powf(2.0 * c);
            let kf = k as f64;
            let expect = kf * tau0.powf((1.0 + c) / kf)
                / special::gamma((1.0 + c) / kf);
            assert_relative_eq!(v, expect, max_relative = 1e-6);
            assert!(v.is_finite() && v > 0.0);
        }
    }

    #[test]
    fn limiting_density_k3_reference_value() {
        // k = 3, c = -0.5, z = 0.9: 6.52419550874962263 at 30 digits
        let m = RadialModel::standard(3, -0.5, 10).unwrap();
        let r = limiting_density(&m, Complex64::new(0.9, 0.0));
        assert_relative_eq!(r, 6.5241955087496226, max_relative = 1e-13);
    }

    #[test]
    fn attractive_charge_diverges_at_origin() {
        let m = RadialModel::standard(2, -0.5, 10).unwrap();
        let v = limiting_density(&m, Complex64::new(1e-6, 0.0));
        assert!(v > 1e3, "density should blow up like |z|^{{-1}}, got {v}");
        assert_eq!(limiting_density(&m, Complex64::new(0.0, 0.0)), f64::INFINITY);
    }

    #[test]
    fn mass_one_defect_small_across_models() {
        let spec = PolarQuadSpec::default();
        for (k, c, z) in [
            (1u32, 0.0, Complex64::new(1.0, 0.0)),
            (1, 1.0, Complex64::new(0.7, 0.0)),
            (2, 0.5, Complex64::new(1.2, 0.0)),
        ] {
            let m = RadialModel::standard(k, c, 10).unwrap();
            let rep = mass_one_defect(&m, z, &spec).unwrap();
            assert!(
                rep.normalized_defect.abs() < 1e-6,
                "k={k} c={c}: defect {:.3e}",
                rep.normalized_defect
            );
        }
    }

    #[test]
    fn bulk_ratio_ginibre() {
        let m = RadialModel::standard(1, 0.0, 500).unwrap();
        let r = bulk_asymptotic_ratio(&m, Complex64::new(0.5, 0.0)).unwrap();
        assert_relative_eq!(r, 1.0, max_relative = 1e-4);
    }

    #[test]
    fn bulk_ratio_names_failed_inequality() {
        let m = RadialModel::standard(1, 0.0, 500).unwrap();
        let err = bulk_asymptotic_ratio(&m, Complex64::new(1e-3, 0.0)).unwrap_err();
        assert!(err.to_string().contains("inner distance"));
        let err = bulk_asymptotic_ratio(&m, Complex64::new(0.999, 0.0)).unwrap_err();
        assert!(err.to_string().contains("boundary distance"));
    }

    #[test]
    fn fields_are_deterministic_and_labelled() {
        let m = RadialModel::standard(1, 1.0, 50).unwrap();
        let t = MomentTable::build(&m, 50).unwrap();
        let pts: Vec<Complex64> = (0..40)
            .map(|i| Complex64::new(0.05 * i as f64, 0.01 * i as f64))
            .collect();
        let a = finite_n_field(&t, &pts, "density").unwrap();
        let b = finite_n_field(&t, &pts, "density").unwrap();
        assert_eq!(a.values, b.values);
        assert!(limiting_field(&m, &pts, "limit")
            .unwrap()
            .metadata
            .contains_key("series_truncation_j"));
    }
}
