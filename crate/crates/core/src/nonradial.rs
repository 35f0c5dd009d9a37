//! Reproducing kernels for an integer point charge inserted away from the
//! origin, over the Ginibre base potential `n |zeta|^2`.
//!
//! The weight `|zeta - a|^{2c} e^{-n|zeta|^2}` (pure-log normalization)
//! expands into polynomial times Gaussian, so every monomial Gram entry is a
//! closed-form Gaussian moment. The Green normalization replaces the
//! insertion term by the droplet Green's function `-log|(zeta-a)/(1-conj(a)
//! zeta)|` inside the unit disk (extended by zero outside), and the Gram
//! entries pick up a numerical radial-angular quadrature inside the disk plus
//! a closed-form Gaussian tail outside.
//!
//! Orthonormalization is Cholesky on the diagonally-rescaled Gram matrix with
//! double-double accumulation, which keeps degree ~200 monomial bases usable.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::numeric::{DoubleDouble, KahanSum};
use crate::quad::GaussLegendre;
use crate::special::{self, ln_gamma};

/// Maximum particle count before the monomial Gram matrix is declared out of
/// range for the double-double Cholesky path.
pub const MAX_NONRADIAL_N: usize = 200;

/// Integer-charge insertion at `a` in the bulk of the Ginibre unit disk.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NonRadialModel {
    n: usize,
    charge: u32,
    insertion: Complex64,
}

impl NonRadialModel {
    pub fn new(n: usize, charge: u32, insertion: Complex64) -> Result<Self> {
        if n == 0 || n > MAX_NONRADIAL_N {
            return Err(Error::InvalidParameter(format!(
                "non-radial kernel supports 1 <= n <= {MAX_NONRADIAL_N}, got {n}"
            )));
        }
        if charge > 3 {
            return Err(Error::InvalidParameter(format!(
                "integer charge must lie in 0..=3, got {charge}"
            )));
        }
        if !(insertion.norm() < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "insertion point must lie in the bulk of the unit disk, got |a| = {}",
                insertion.norm()
            )));
        }
        Ok(Self { n, charge, insertion })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn charge(&self) -> u32 {
        self.charge
    }

    pub fn insertion(&self) -> Complex64 {
        self.insertion
    }
}

/// Choice of insertion normalization.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Normalization {
    /// `V_n = |zeta|^2 - (2c/n) log|zeta - a|`.
    PureLog,
    /// `V_n = |zeta|^2 + (2c/n) G(zeta)` with `G` the unit-disk Green's
    /// function with pole at `a`, extended by zero outside the disk.
    Green,
}

/// Weighted reproducing kernel of `Pol(n)` under the insertion weight.
pub struct NonRadialKernel {
    model: NonRadialModel,
    normalization: Normalization,
    /// Lower-triangular Cholesky factor of the rescaled Gram matrix,
    /// row-major packed.
    chol: Vec<Complex64>,
    /// Diagonal rescaling `d_i = 1/sqrt(G_ii)`.
    scale: Vec<f64>,
    dim: usize,
}

impl NonRadialKernel {
    pub fn build(model: &NonRadialModel, normalization: Normalization) -> Result<Self> {
        let dim = model.n;
        let gram = match normalization {
            Normalization::PureLog => gram_pure_log(model),
            Normalization::Green => gram_green(model)?,
        };
        let (chol, scale) = scaled_cholesky(&gram, dim)?;
        Ok(Self { model: *model, normalization, chol, scale, dim })
    }

    pub fn model(&self) -> &NonRadialModel {
        &self.model
    }

    pub fn normalization(&self) -> Normalization {
        self.normalization
    }

    /// Insertion weight `e^{-n(V_n - |zeta|^2)}`, i.e. the non-Gaussian factor.
    pub fn weight(&self, zeta: Complex64) -> f64 {
        let c = self.model.charge as i32;
        let a = self.model.insertion;
        match self.normalization {
            Normalization::PureLog => (zeta - a).norm_sqr().powi(c),
            Normalization::Green => {
                if zeta.norm_sqr() >= 1.0 {
                    1.0
                } else {
                    let blaschke = (zeta - a) / (Complex64::new(1.0, 0.0) - a.conj() * zeta);
                    blaschke.norm_sqr().powi(c)
                }
            }
        }
    }

    /// Orthonormal-polynomial vector `y(zeta) = L^{-1} D v(zeta)` by forward
    /// substitution.
    fn ortho_values(&self, zeta: Complex64) -> Vec<Complex64> {
        let dim = self.dim;
        let mut v = Vec::with_capacity(dim);
        let mut p = Complex64::new(1.0, 0.0);
        for i in 0..dim {
            v.push(p * self.scale[i]);
            p *= zeta;
        }
        let mut y = vec![Complex64::new(0.0, 0.0); dim];
        for i in 0..dim {
            let mut acc = v[i];
            for (l, yj) in self.chol[i * dim..i * dim + i].iter().zip(&y) {
                acc -= l * yj;
            }
            y[i] = acc / self.chol[i * dim + i].re;
        }
        y
    }

    /// Weighted correlation kernel `K_n(zeta, eta)`; Hermitian, and its
    /// diagonal is the 1-point density.
    pub fn kernel(&self, zeta: Complex64, eta: Complex64) -> Complex64 {
        let yz = self.ortho_values(zeta);
        let ye = self.ortho_values(eta);
        let mut re = KahanSum::new();
        let mut im = KahanSum::new();
        for m in 0..self.dim {
            let t = yz[m] * ye[m].conj();
            re.add(t.re);
            im.add(t.im);
        }
        let n = self.model.n as f64;
        let wz = self.weight(zeta) * (-n * zeta.norm_sqr()).exp();
        let we = self.weight(eta) * (-n * eta.norm_sqr()).exp();
        Complex64::new(re.value(), im.value()) * (wz * we).sqrt()
    }

    /// Unrescaled 1-point density `bold R~_n(zeta)`.
    pub fn density(&self, zeta: Complex64) -> f64 {
        let y = self.ortho_values(zeta);
        let mut acc = KahanSum::new();
        for v in &y {
            acc.add(v.norm_sqr());
        }
        let n = self.model.n as f64;
        acc.value() * self.weight(zeta) * (-n * zeta.norm_sqr()).exp()
    }

    /// Total mass `int density dA` by polar quadrature; `n` up to quadrature
    /// error for a correctly orthonormalized kernel. The radial rule splits
    /// at the droplet boundary where the Green weight has a derivative kink.
    pub fn total_mass(&self, radial: usize, angular: usize) -> f64 {
        let rmax = 1.0 + 12.0 / (self.model.n as f64).sqrt();
        let gl = GaussLegendre::new(radial);
        let mut acc = KahanSum::new();
        for &(lo, hi) in &[(0.0, 1.0), (1.0, rmax)] {
            for (r, wr) in gl.mapped(lo, hi) {
                let mut ang = KahanSum::new();
                for m in 0..angular {
                    let theta = 2.0 * std::f64::consts::PI * m as f64 / angular as f64;
                    ang.add(self.density(Complex64::from_polar(r, theta)));
                }
                acc.add(wr * ang.value() / angular as f64 * 2.0 * r);
            }
        }
        acc.value()
    }
}

/// Pure-log Gram entries from closed-form Gaussian moments:
/// `G_ij = sum_{p,q} binom(c,p) binom(c,q) (-a)^{c-p} conj((-a)^{c-q})
///         delta_{i+p, j+q} (i+p)! / n^{i+p+1}`.
fn gram_pure_log(model: &NonRadialModel) -> Vec<Complex64> {
    let dim = model.n;
    let c = model.charge as usize;
    let a = model.insertion;
    let n = model.n as f64;
    let minus_a = -a;
    let bin: Vec<f64> = (0..=c).map(|p| binomial(c, p)).collect();
    let mut gram = vec![Complex64::new(0.0, 0.0); dim * dim];
    for i in 0..dim {
        for j in 0..dim {
            let mut acc = Complex64::new(0.0, 0.0);
            for p in 0..=c {
                for q in 0..=c {
                    if i + p != j + q {
                        continue;
                    }
                    let coeff = bin[p] * bin[q];
                    let factor = minus_a.powu((c - p) as u32) * minus_a.conj().powu((c - q) as u32);
                    let r = i + p;
                    let moment = (ln_gamma(r as f64 + 1.0) - (r as f64 + 1.0) * n.ln()).exp();
                    acc += coeff * factor * moment;
                }
            }
            gram[i * dim + j] = acc;
        }
    }
    gram
}

/// Green-normalization Gram entries: quadrature of the Blaschke-modulus
/// weight inside the unit disk plus the closed-form Gaussian tail outside.
fn gram_green(model: &NonRadialModel) -> Result<Vec<Complex64>> {
    let dim = model.n;
    let c = model.charge as i32;
    let a = model.insertion;
    let n = model.n as f64;
    const RADIAL: usize = 320;
    let angular = (8 * dim).next_power_of_two().max(256);

    let gl = GaussLegendre::new(RADIAL);
    let mut gram = vec![Complex64::new(0.0, 0.0); dim * dim];
    // angular transform of the weight at each radial node:
    // f_m(r) = (1/2pi) int W(r e^{i t}) e^{-i m t} dt, m = -(dim-1)..=(dim-1)
    let mut nodes: Vec<(f64, f64, Vec<Complex64>)> = Vec::with_capacity(RADIAL);
    for (r, wr) in gl.mapped(0.0, 1.0) {
        let samples: Vec<f64> = (0..angular)
            .map(|t| {
                let theta = 2.0 * std::f64::consts::PI * t as f64 / angular as f64;
                let zeta = Complex64::from_polar(r, theta);
                let blaschke = (zeta - a) / (Complex64::new(1.0, 0.0) - a.conj() * zeta);
                blaschke.norm_sqr().powi(c)
            })
            .collect();
        let mut modes = Vec::with_capacity(2 * dim - 1);
        for m in -(dim as i64 - 1)..=(dim as i64 - 1) {
            let mut acc = Complex64::new(0.0, 0.0);
            for (t, &s) in samples.iter().enumerate() {
                let theta = 2.0 * std::f64::consts::PI * t as f64 / angular as f64;
                acc += s * Complex64::from_polar(1.0, -m as f64 * theta);
            }
            modes.push(acc / angular as f64);
        }
        nodes.push((r, wr, modes));
    }
    for i in 0..dim {
        for j in 0..dim {
            let m_idx = (i as i64 - j as i64 + dim as i64 - 1) as usize;
            let mut acc_re = KahanSum::new();
            let mut acc_im = KahanSum::new();
            for (r, wr, modes) in &nodes {
                let radial_w = (((i + j) as f64) * r.ln() - n * r * r).exp() * 2.0 * r;
                let v = modes[m_idx] * (wr * radial_w);
                acc_re.add(v.re);
                acc_im.add(v.im);
            }
            let mut g = Complex64::new(acc_re.value(), acc_im.value());
            if i == j {
                // Gaussian tail over |zeta| > 1: int_1^inf s^i e^{-n s} ds
                let tail = special::upper_incomplete_gamma(i as f64 + 1.0, n)?
                    * (-(i as f64 + 1.0) * n.ln()).exp();
                g += tail;
            }
            gram[i * dim + j] = g;
        }
    }
    Ok(gram)
}

fn binomial(n: usize, k: usize) -> f64 {
    (ln_gamma(n as f64 + 1.0) - ln_gamma(k as f64 + 1.0) - ln_gamma((n - k) as f64 + 1.0))
        .exp()
        .round()
}

/// Cholesky factorization of the Hermitian Gram matrix after symmetric
/// diagonal rescaling, with double-double accumulation of the inner products.
fn scaled_cholesky(gram: &[Complex64], dim: usize) -> Result<(Vec<Complex64>, Vec<f64>)> {
    let mut scale = vec![0f64; dim];
    for i in 0..dim {
        let d = gram[i * dim + i].re;
        if !(d > 0.0) || !d.is_finite() {
            return Err(Error::SingularGram { cond: f64::INFINITY });
        }
        scale[i] = 1.0 / d.sqrt();
    }
    let mut l = vec![Complex64::new(0.0, 0.0); dim * dim];
    let mut min_pivot = f64::INFINITY;
    for i in 0..dim {
        for j in 0..=i {
            let gij = gram[i * dim + j] * (scale[i] * scale[j]);
            let mut acc_re = DoubleDouble::new();
            let mut acc_im = DoubleDouble::new();
            acc_re.add(gij.re);
            acc_im.add(gij.im);
            for p in 0..j {
                // subtract L[i][p] * conj(L[j][p])
                let x = l[i * dim + p];
                let y = l[j * dim + p];
                acc_re.add_prod(-x.re, y.re);
                acc_re.add_prod(-x.im, y.im);
                acc_im.add_prod(-x.im, y.re);
                acc_im.add_prod(x.re, y.im);
            }
            if i == j {
                let pivot = acc_re.value();
                if !(pivot > 0.0) {
                    return Err(Error::SingularGram {
                        cond: 1.0 / pivot.abs().max(f64::MIN_POSITIVE),
                    });
                }
                min_pivot = min_pivot.min(pivot);
                l[i * dim + i] = Complex64::new(pivot.sqrt(), 0.0);
            } else {
                let v = Complex64::new(acc_re.value(), acc_im.value());
                l[i * dim + j] = v / l[j * dim + j].re;
            }
        }
    }
    if min_pivot < 1e-13 {
        return Err(Error::SingularGram { cond: 1.0 / min_pivot });
    }
    Ok((l, scale))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel as radial_kernel;
    use crate::model::{MomentTable, RadialModel};
    use approx::assert_relative_eq;

    #[test]
    fn model_validation() {
        assert!(NonRadialModel::new(40, 4, Complex64::new(0.0, 0.0)).is_err());
        assert!(NonRadialModel::new(40, 1, Complex64::new(1.2, 0.0)).is_err());
        assert!(NonRadialModel::new(0, 1, Complex64::new(0.0, 0.0)).is_err());
        assert!(NonRadialModel::new(300, 1, Complex64::new(0.0, 0.0)).is_err());
        assert!(NonRadialModel::new(40, 1, Complex64::new(0.3, 0.0)).is_ok());
    }

    #[test]
    fn ginibre_special_case_density() {
        // c = 0: radial Ginibre; density at the origin is exactly n, and
        // stays within 1e-6 of n well inside the disk
        let m = NonRadialModel::new(40, 0, Complex64::new(0.3, 0.0)).unwrap();
        let k = NonRadialKernel::build(&m, Normalization::PureLog).unwrap();
        assert_relative_eq!(k.density(Complex64::new(0.0, 0.0)), 40.0, max_relative = 1e-12);
        assert_relative_eq!(k.density(Complex64::new(0.25, -0.1)), 40.0, max_relative = 1e-6);
    }

    #[test]
    fn central_charge_matches_radial_path() {
        // c = 1, a = 0: bold R~_n(zeta) = n R_n(sqrt(n) zeta) with the radial
        // k = 1, c = 1 code as oracle
        let nm = NonRadialModel::new(40, 1, Complex64::new(0.0, 0.0)).unwrap();
        let nk = NonRadialKernel::build(&nm, Normalization::PureLog).unwrap();
        let rm = RadialModel::standard(1, 1.0, 40).unwrap();
        let table = MomentTable::build(&rm, 40).unwrap();
        for &zeta in &[
            Complex64::new(0.2, 0.0),
            Complex64::new(0.5, 0.3),
            Complex64::new(0.0, 0.8),
        ] {
            let lhs = nk.density(zeta);
            let rhs = radial_kernel::unrescaled_density(&table, zeta);
            assert_relative_eq!(lhs, rhs, max_relative = 1e-8);
        }
    }

    #[test]
    fn kernel_is_hermitian() {
        let m = NonRadialModel::new(30, 1, Complex64::new(0.3, 0.0)).unwrap();
        let k = NonRadialKernel::build(&m, Normalization::PureLog).unwrap();
        let z = Complex64::new(0.4, 0.2);
        let w = Complex64::new(-0.1, 0.6);
        let kzw = k.kernel(z, w);
        let kwz = k.kernel(w, z);
        assert_relative_eq!(kzw.re, kwz.re, max_relative = 1e-10);
        assert_relative_eq!(kzw.im, -kwz.im, max_relative = 1e-10);
        assert_relative_eq!(k.kernel(z, z).re, k.density(z), max_relative = 1e-12);
    }

    #[test]
    fn density_integrates_to_n() {
        for (c, norm) in [
            (1u32, Normalization::PureLog),
            (1, Normalization::Green),
            (2, Normalization::PureLog),
        ] {
            let m = NonRadialModel::new(40, c, Complex64::new(0.3, 0.0)).unwrap();
            let k = NonRadialKernel::build(&m, norm).unwrap();
            let mass = k.total_mass(400, 256);
            assert_relative_eq!(mass, 40.0, max_relative = 1e-6);
        }
    }

    #[test]
    fn larger_n_still_well_conditioned() {
        let m = NonRadialModel::new(120, 1, Complex64::new(0.3, 0.0)).unwrap();
        let k = NonRadialKernel::build(&m, Normalization::PureLog).unwrap();
        let mass = k.total_mass(600, 512);
        assert_relative_eq!(mass, 120.0, max_relative = 1e-6);
    }

    #[test]
    fn green_weight_continuous_at_boundary() {
        let m = NonRadialModel::new(40, 1, Complex64::new(0.3, 0.0)).unwrap();
        let k = NonRadialKernel::build(&m, Normalization::Green).unwrap();
        let inside = k.weight(Complex64::from_polar(1.0 - 1e-9, 0.7));
        let outside = k.weight(Complex64::from_polar(1.0 + 1e-9, 0.7));
        assert_relative_eq!(inside, outside, max_relative = 1e-6);
    }
}
