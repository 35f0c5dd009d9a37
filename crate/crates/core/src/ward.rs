//! Berezin kernel, Cauchy transforms and Ward-equation residuals.
//!
//! The limiting 1-point function satisfies, away from the insertion,
//!
//! ```text
//! dbar C = R - Lap V0 - Lap log R,      C(z) = int B(z,w)/(z-w) dA(w),
//! ```
//!
//! with `B(z,w) = |L0(z,w)|^2 e^{-V0(w)} / L0(z,z)` the Berezin kernel. Two
//! independent evaluations of `C` are provided: direct polar quadrature
//! centered at `z`, and the semi-analytic radial decomposition `C = S1 - S2`
//! with
//!
//! ```text
//! S1(z) = z^{-1} sum_j P((j+c+1)/k, tau0 |z|^{2k}),
//! S2(z) = (z L0(z,z))^{-1} sum_m m a_m |z|^{2m},
//! ```
//!
//! where `P` is the regularized lower incomplete gamma and `a_m = 1/||z^m||^2`.
//! `S2` is the single-sum specialization of the general double-sum transform
//! to rotationally symmetric kernels (`a_{jk} = a_j delta_{jk}`); it equals
//! `d/dz log L0(z,z)` once the coefficient identities hold, which is what the
//! residual diagnostics exercise.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::kernel::{self, PolarQuadSpec};
use crate::model::RadialModel;
use crate::numeric::{log_sum_unimodal, KahanSum, LogSumExp};
use crate::quad::GaussLegendre;
use crate::special;

/// Berezin kernel `B(z,w) = |L0(z,w)|^2 e^{-V0(w)} / L0(z,z)`.
///
/// Requires `R(z) > 0`, i.e. `z != 0` or `c <= 0`.
pub fn berezin(model: &RadialModel, z: Complex64, w: Complex64) -> Result<f64> {
    if z.norm_sqr() == 0.0 && model.c() > 0.0 {
        return Err(Error::Precondition(
            "Berezin kernel undefined where the density vanishes (z = 0, c > 0)".into(),
        ));
    }
    let num = kernel::limiting_kernel(model, z, w)?.norm_sqr();
    let diag = kernel::limiting_kernel(model, z, z)?.re;
    Ok(num * (-model.v0(w)).exp() / diag)
}

/// Quadrature-based total mass `int B(z, w) dA(w)`; equals one for the
/// reproducing kernel up to quadrature error.
pub fn berezin_mass(model: &RadialModel, z: Complex64, spec: &PolarQuadSpec) -> Result<f64> {
    let rep = kernel::mass_one_defect(model, z, spec)?;
    Ok(1.0 + rep.normalized_defect)
}

/// Resolution of the polar quadrature for the Cauchy transform.
#[derive(Debug, Clone, Copy)]
pub struct CauchyQuadSpec {
    pub radial: usize,
    pub angular: usize,
}

impl Default for CauchyQuadSpec {
    fn default() -> Self {
        Self { radial: 280, angular: 512 }
    }
}

/// Cauchy transform `C(z) = int B(z,w)/(z-w) dA(w)` by polar quadrature
/// centered at `z` (the polar Jacobian cancels the integrable singularity).
/// Returns the value and a refinement-based error estimate.
///
/// For attractive charges (`c < 0`) the `|w|^{2c}` spike at the insertion sits
/// away from the grid center and is only resolved to the cell scale; the
/// radial route has no such limitation.
pub fn cauchy_transform_quad(
    model: &RadialModel,
    z: Complex64,
    spec: &CauchyQuadSpec,
) -> Result<(Complex64, f64)> {
    if z.norm_sqr() == 0.0 && model.c() > 0.0 {
        return Err(Error::Precondition("Cauchy transform requires R(z) > 0".into()));
    }
    let full = cauchy_quad_raw(model, z, spec.radial, spec.angular)?;
    let half = cauchy_quad_raw(model, z, spec.radial / 2, spec.angular / 2)?;
    let err = (full - half).norm();
    if err > 1e-3 * (1.0 + full.norm()) {
        return Err(Error::Quadrature(format!(
            "Cauchy transform quadrature not converged at z = {z}: refinement delta {err:.3e}"
        )));
    }
    Ok((full, err))
}

fn cauchy_quad_raw(
    model: &RadialModel,
    z: Complex64,
    radial: usize,
    angular: usize,
) -> Result<Complex64> {
    let k = model.k();
    let kf = k as f64;
    let tau0 = model.tau0();
    let c = model.c();
    // weight support: |w|^k beyond |z|^k + sqrt(66/tau0) is negligible
    let zk = z.norm().powi(k as i32);
    let wmax = ((zk + (66.0 / tau0).sqrt()) * 1.1).powf(1.0 / kf) + 0.5;
    let rho_max = z.norm() + wmax;
    let scale = tau0.powf(1.0 / kf);
    let coeffs = kernel::kernel_coefficients(model, scale * z.norm() * rho_max);
    let diag = kernel::limiting_kernel(model, z, z)?.re;
    let pref = model.tau0().powf(2.0 * (1.0 + c) / kf) * kf * kf / diag;

    let gl = GaussLegendre::new(radial);
    let mut acc_re = KahanSum::new();
    let mut acc_im = KahanSum::new();
    // radial panels split at rho = |z| so the |w|^{2c} kink at w = 0 sits on
    // a panel boundary
    let panels = [(0.0, z.norm().min(rho_max)), (z.norm().min(rho_max), rho_max)];
    for m in 0..angular {
        let phi = 2.0 * std::f64::consts::PI * m as f64 / angular as f64;
        let dir = Complex64::from_polar(1.0, phi);
        let phase = Complex64::from_polar(1.0, -phi);
        let mut ray = KahanSum::new();
        for &(a, b) in &panels {
            if b - a < 1e-14 {
                continue;
            }
            for (rho, wr) in gl.mapped(a, b) {
                let w = z + rho * dir;
                let l = kernel::horner(&coeffs, scale * z * w.conj());
                let log_weight = c * w.norm_sqr().ln() - tau0 * w.norm_sqr().powi(k as i32);
                // |L0|^2 alone can overflow before the weight cancels it;
                // combine the exponents in log space (norm() is hypot-safe)
                let mag = l.norm();
                if mag > 0.0 {
                    ray.add(wr * (2.0 * mag.ln() + log_weight).exp());
                }
            }
        }
        // 1/(z - w) = -e^{-i phi}/rho against the polar Jacobian rho drho dphi
        let v = -pref * ray.value() * phase;
        acc_re.add(v.re);
        acc_im.add(v.im);
    }
    // dA = dxdy/pi = (rho drho dphi)/pi: the angular mean carries a factor 2
    Ok(2.0 * Complex64::new(acc_re.value(), acc_im.value()) / angular as f64)
}

/// Cauchy transform by the semi-analytic radial decomposition `S1 - S2`.
pub fn cauchy_transform_radial(model: &RadialModel, z: Complex64) -> Result<Complex64> {
    if z.norm_sqr() == 0.0 {
        return Err(Error::Precondition("radial Cauchy transform requires z != 0".into()));
    }
    Ok(cauchy_s1(model, z)? - cauchy_s2(model, z))
}

/// `S1(z) = z^{-1} sum_j P((j+c+1)/k, tau0 |z|^{2k})`; the dbar-derivative of
/// this sum is exactly the limiting density.
pub(crate) fn cauchy_s1(model: &RadialModel, z: Complex64) -> Result<Complex64> {
    let kf = model.k() as f64;
    let s = model.tau0() * z.norm_sqr().powi(model.k() as i32);
    let mut sum = KahanSum::new();
    let mut j = 0usize;
    loop {
        let shape = (j as f64 + model.c() + 1.0) / kf;
        let p = special::reg_lower_gamma(shape, s)?;
        sum.add(p);
        // P decays super-exponentially once the shape passes the argument
        if shape > s && p < 1e-17 * sum.value().max(1e-300) {
            break;
        }
        j += 1;
        if j > 2_000_000 {
            return Err(Error::SeriesDivergence { max_terms: j, context: "cauchy_s1" });
        }
    }
    Ok(sum.value() / z)
}

/// `S2(z) = (z L0(z,z))^{-1} sum_m m a_m |z|^{2m}` (reduced single-sum form of
/// the radial specialization; equals `d log L0(z,z)` for the reproducing
/// coefficients).
fn cauchy_s2(model: &RadialModel, z: Complex64) -> Complex64 {
    let s = z.norm_sqr();
    let log_s = s.ln();
    let peak_guess = {
        let kf = model.k() as f64;
        (kf * (model.tau0() * s.powi(model.k() as i32)).max(1.0)) as usize
    };
    let hi = 2 * peak_guess + 600;
    // numerator sum_m m a_m s^m (from m = 1), denominator L0(z,z)
    let (log_num, _) = log_sum_unimodal(1, hi, |m| {
        (m as f64).ln() + m as f64 * log_s - model.log_norm(m)
    });
    let mut den = LogSumExp::new();
    for m in 0..=hi {
        den.push(m as f64 * log_s - model.log_norm(m));
    }
    (log_num - den.value()).exp() / z
}

/// Component values entering the Ward residual at a point.
#[derive(Debug, Clone, Copy)]
pub struct WardComponents {
    /// Finite-difference `dbar C` (complex; the limit is real).
    pub dbar_c: Complex64,
    /// Limiting density `R(z)`.
    pub density: f64,
    /// `Lap V0(z) = k^2 tau0 |z|^{2k-2}` (analytic; the `-2c log|z|` term
    /// contributes only a point mass at the excluded origin).
    pub laplacian_v0: f64,
    /// Finite-difference `Lap log R(z)`.
    pub laplacian_log_density: f64,
}

/// Ward-equation residual report at a point.
#[derive(Debug, Clone, Copy)]
pub struct WardResidualReport {
    pub point: Complex64,
    /// `|dbar C - R + Lap V0 + Lap log R|`.
    pub residual: f64,
    /// The requested base step (before scaling by `max(|z|, 0.1)`).
    pub fd_step: f64,
    /// Richardson disagreement between the `h` and `h/2` evaluations plus the
    /// quadrature floor of the transform itself.
    pub quad_error_estimate: f64,
    pub components: WardComponents,
}

/// Evaluate the Ward residual `|dbar C - R + Lap V0 + Lap log R|` at `z`
/// with a second-order stencil of step `fd_step * max(|z|, 0.1)`.
///
/// `dbar C` uses central differences of the radial transform; `Lap log R`
/// uses the 5-point Laplacian. The pair `(h, h/2)` provides the error
/// estimate; a step too large for the asymptotic regime is rejected.
pub fn ward_residual(model: &RadialModel, z: Complex64, fd_step: f64) -> Result<WardResidualReport> {
    if z.norm_sqr() == 0.0 {
        return Err(Error::Precondition("Ward residual requires z != 0".into()));
    }
    if !(fd_step > 0.0) {
        return Err(Error::InvalidParameter("fd_step must be positive".into()));
    }
    let h = fd_step * z.norm().max(0.1);
    if h > 0.25 * z.norm() {
        return Err(Error::StepTooLarge { h, disagreement: f64::NAN });
    }
    let (res_h, comp_h) = residual_at(model, z, h)?;
    let (res_h2, _) = residual_at(model, z, 0.5 * h)?;
    let disagreement = (res_h - res_h2).abs();
    // second-order stencils: the h/2 residual must not blow up relative to h
    if res_h2 > 4.0 * res_h + 1e-9 {
        return Err(Error::StepTooLarge { h, disagreement });
    }
    Ok(WardResidualReport {
        point: z,
        residual: res_h,
        fd_step,
        quad_error_estimate: disagreement / 3.0 + 1e-12 * (1.0 + comp_h.density),
        components: comp_h,
    })
}

fn residual_at(model: &RadialModel, z: Complex64, h: f64) -> Result<(f64, WardComponents)> {
    let c_at = |p: Complex64| cauchy_transform_radial(model, p);
    let cp = c_at(z + h)?;
    let cm = c_at(z - h)?;
    let cip = c_at(z + Complex64::new(0.0, h))?;
    let cim = c_at(z - Complex64::new(0.0, h))?;
    // dbar = (d/dx + i d/dy) / 2
    let dbar_c = ((cp - cm) + Complex64::new(0.0, 1.0) * (cip - cim)) / (4.0 * h);

    let log_r = |p: Complex64| kernel::limiting_density(model, p).ln();
    let lap_log_r = (log_r(z + h) + log_r(z - h) + log_r(z + Complex64::new(0.0, h))
        + log_r(z - Complex64::new(0.0, h))
        - 4.0 * log_r(z))
        / (4.0 * h * h);

    let density = kernel::limiting_density(model, z);
    let laplacian_v0 = model.laplacian_q0(z);
    let residual = (dbar_c - density + laplacian_v0 + lap_log_r).norm();
    Ok((
        residual,
        WardComponents { dbar_c, density, laplacian_v0, laplacian_log_density: lap_log_r },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn berezin_ginibre_closed_form() {
        // k = 1, c = 0: B(z, w) = e^{-|z-w|^2}
        let m = RadialModel::standard(1, 0.0, 10).unwrap();
        let z = Complex64::new(0.4, -0.2);
        let w = Complex64::new(-0.3, 0.6);
        let b = berezin(&m, z, w).unwrap();
        assert_relative_eq!(b, (-(z - w).norm_sqr()).exp(), max_relative = 1e-12);
        assert_relative_eq!(
            berezin(&m, Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0)).unwrap(),
            1.0,
            max_relative = 1e-13
        );
    }

    #[test]
    fn berezin_diagonal_is_density() {
        // B(z, z) = R(z) through the same code path
        for (k, c) in [(1u32, 1.0), (2, 0.5), (2, -0.5)] {
            let m = RadialModel::standard(k, c, 10).unwrap();
            let z = Complex64::new(0.9, 0.4);
            let b = berezin(&m, z, z).unwrap();
            let r = kernel::limiting_density(&m, z);
            assert_relative_eq!(b, r, max_relative = 1e-12);
        }
    }

    #[test]
    fn berezin_bounded_by_density_at_w() {
        let m = RadialModel::standard(2, 0.5, 10).unwrap();
        let z = Complex64::new(0.8, 0.1);
        for i in 0..40 {
            let w = Complex64::from_polar(0.1 + 0.05 * i as f64, 0.37 * i as f64);
            let b = berezin(&m, z, w).unwrap();
            let r = kernel::limiting_density(&m, w);
            assert!(b <= r * (1.0 + 1e-10), "B(z,w) = {b} exceeds R(w) = {r}");
        }
    }

    #[test]
    fn berezin_rejects_zero_of_density() {
        let m = RadialModel::standard(1, 1.0, 10).unwrap();
        assert!(berezin(&m, Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)).is_err());
    }

    #[test]
    fn berezin_mass_is_one() {
        // full (k, c) in {1,2} x {-0.5, 0, 1} grid at |z| in {0.5, 1, 2}
        let spec = PolarQuadSpec::default();
        for k in [1u32, 2] {
            for c in [-0.5, 0.0, 1.0] {
                let m = RadialModel::standard(k, c, 10).unwrap();
                for &x in &[0.5, 1.0, 2.0] {
                    let mass = berezin_mass(&m, Complex64::new(x, 0.0), &spec).unwrap();
                    assert!((mass - 1.0).abs() < 1e-6, "k={k} c={c} x={x}: mass {mass}");
                }
            }
        }
    }

    #[test]
    fn cauchy_ginibre_vanishes() {
        // substituting u = z - w shows C = int e^{-|u|^2}/u dA(u) = 0 by
        // rotational antisymmetry
        let m = RadialModel::standard(1, 0.0, 10).unwrap();
        let spec = CauchyQuadSpec::default();
        for &z in &[Complex64::new(1.0, 0.0), Complex64::new(-0.4, 0.8)] {
            let (cq, _) = cauchy_transform_quad(&m, z, &spec).unwrap();
            assert!(cq.norm() < 1e-8, "C({z}) = {cq}");
            let cr = cauchy_transform_radial(&m, z).unwrap();
            assert!(cr.norm() < 1e-8, "radial C({z}) = {cr}");
        }
    }

    #[test]
    fn cauchy_radial_reference_value() {
        // k = 1, c = 1, z = 1: S1 = sum_{m>=2} P(m, 1) = e^{-1},
        // S2 = 1/(e - 1); frozen closed form
        let m = RadialModel::standard(1, 1.0, 10).unwrap();
        let c = cauchy_transform_radial(&m, Complex64::new(1.0, 0.0)).unwrap();
        assert_relative_eq!(c.re, -0.21409726569788410, max_relative = 1e-10);
        assert!(c.im.abs() < 1e-14);
    }

    #[test]
    fn cauchy_radial_combined_singularity_value() {
        // k = 2, c = 0.5, z = 1.5: -0.334309026538394287 at 30 digits
        let m = RadialModel::standard(2, 0.5, 10).unwrap();
        let c = cauchy_transform_radial(&m, Complex64::new(1.5, 0.0)).unwrap();
        assert_relative_eq!(c.re, -0.33430902653839429, max_relative = 1e-12);
    }

    #[test]
    fn cauchy_routes_agree() {
        // two independent derivations of C on a 20-point annulus sample
        let spec = CauchyQuadSpec::default();
        for (k, c) in [(1u32, 1.0), (2, 0.5)] {
            let m = RadialModel::standard(k, c, 10).unwrap();
            for i in 0..10 {
                let r = 0.3 + (2.5 - 0.3) * i as f64 / 9.0;
                let z = Complex64::from_polar(r, 2.3999632297286533 * i as f64);
                let (cq, err) = cauchy_transform_quad(&m, z, &spec).unwrap();
                let cr = cauchy_transform_radial(&m, z).unwrap();
                assert!(
                    (cq - cr).norm() < 1e-6,
                    "k={k} c={c} z={z}: quad {cq} vs radial {cr} (quad err {err:.2e})"
                );
            }
        }
    }

    #[test]
    fn cauchy_imaginary_part_vanishes_on_real_axis() {
        let m = RadialModel::standard(2, 0.5, 10).unwrap();
        let spec = CauchyQuadSpec::default();
        let (cq, _) = cauchy_transform_quad(&m, Complex64::new(1.2, 0.0), &spec).unwrap();
        assert!(cq.im.abs() < 1e-8);
    }

    #[test]
    fn cauchy_rotational_covariance() {
        // C(e^{i t} z) = e^{-i t} C(z) for radial models
        let m = RadialModel::standard(2, 0.5, 10).unwrap();
        let z = Complex64::new(1.1, 0.0);
        let base = cauchy_transform_radial(&m, z).unwrap();
        for &t in &[0.3, 1.2, 2.9] {
            let rot = Complex64::from_polar(1.0, t);
            let c = cauchy_transform_radial(&m, rot * z).unwrap();
            assert!((c - base / rot).norm() < 1e-8);
        }
    }

    #[test]
    fn s1_dbar_derivative_is_density() {
        // dbar S1 = R by construction; finite differences confirm to 2e-6
        let m = RadialModel::standard(1, 1.0, 10).unwrap();
        let z = Complex64::new(1.0, 0.0);
        let h = 1e-4;
        let s1 = |p: Complex64| cauchy_s1(&m, p).unwrap();
        let dbar = ((s1(z + h) - s1(z - h))
            + Complex64::new(0.0, 1.0)
                * (s1(z + Complex64::new(0.0, h)) - s1(z - Complex64::new(0.0, h))))
            / (4.0 * h);
        let r = kernel::limiting_density(&m, z);
        assert!((dbar - r).norm() < 2e-6, "dbar S1 = {dbar}, R = {r}");
    }

    #[test]
    fn ward_residual_ginibre_identically_zero() {
        // R = 1, C = 0, Lap V0 = 1: every term cancels
        let m = RadialModel::standard(1, 0.0, 10).unwrap();
        let rep = ward_residual(&m, Complex64::new(1.0, 0.0), 1e-3).unwrap();
        assert!(rep.residual < 1e-5, "residual {}", rep.residual);
    }

    #[test]
    fn ward_residual_small_for_insertion_models() {
        for (k, c, z, tol) in [
            (1u32, 1.0, Complex64::new(1.0, 0.0), 1e-4),
            (2, 0.5, Complex64::new(0.8, 0.0), 1e-3),
        ] {
            let m = RadialModel::standard(k, c, 10).unwrap();
            let rep = ward_residual(&m, z, 1e-3).unwrap();
            assert!(rep.residual < tol, "k={k} c={c}: residual {}", rep.residual);
        }
    }

    #[test]
    fn ward_residual_second_order_in_step() {
        let m = RadialModel::standard(1, 1.0, 10).unwrap();
        let z = Complex64::new(0.9, 0.3);
        let mut prev = f64::INFINITY;
        for &h in &[1e-2, 5e-3, 2.5e-3] {
            let rep = ward_residual(&m, z, h).unwrap();
            assert!(
                rep.residual <= 0.35 * prev + 1e-9,
                "residual {} at h={h} vs previous {prev}",
                rep.residual
            );
            prev = rep.residual;
        }
    }

    #[test]
    fn ward_residual_rejects_bad_steps() {
        let m = RadialModel::standard(1, 1.0, 10).unwrap();
        assert!(ward_residual(&m, Complex64::new(1.0, 0.0), 0.5).is_err());
        assert!(ward_residual(&m, Complex64::new(0.0, 0.0), 1e-3).is_err());
    }
}
