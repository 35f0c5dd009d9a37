//! Ensemble parameters and derived evaluators.
//!
//! [`RadialModel`] is the single source of truth for the microscopic potential
//! `V0(z) = tau0 |z|^{2k} - 2c log|z|`, the reference measure
//! `d mu0 = e^{-V0} dA` (with `dA = dxdy/pi`), and the induced scales: the
//! microscopic scale `r_n = n^{-1/2k}` and the droplet radius of the
//! unrescaled potential.

use std::collections::BTreeMap;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quad::adaptive_simpson;
use crate::special::ln_gamma;

/// Radial insertion model: potential `tau0 |z|^{2k}` with a point charge of
/// strength `c` at the origin, `n` particles, inverse temperature `beta`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadialModel {
    k: u32,
    c: f64,
    tau0: f64,
    n: usize,
    beta: f64,
}

impl RadialModel {
    pub fn new(k: u32, c: f64, tau0: f64, n: usize, beta: f64) -> Result<Self> {
        if k < 1 {
            return Err(Error::InvalidParameter(format!(
                "vanishing degree k must be a positive integer, got {k}"
            )));
        }
        if !(c > -1.0) || !c.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "charge c must satisfy c > -1 (integrability of |z|^{{2c}} e^{{-V0}}), got {c}"
            )));
        }
        if !(tau0 > 0.0) || !tau0.is_finite() {
            return Err(Error::InvalidParameter(format!("tau0 must be positive, got {tau0}")));
        }
        if n == 0 {
            return Err(Error::InvalidParameter("particle count n must be positive".into()));
        }
        if !(beta > 0.0) || !beta.is_finite() {
            return Err(Error::InvalidParameter(format!("beta must be positive, got {beta}")));
        }
        Ok(Self { k, c, tau0, n, beta })
    }

    /// `tau0 = 1`, `beta = 1` convenience constructor.
    pub fn standard(k: u32, c: f64, n: usize) -> Result<Self> {
        Self::new(k, c, 1.0, n, 1.0)
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn tau0(&self) -> f64 {
        self.tau0
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn with_n(&self, n: usize) -> Self {
        Self { n, ..*self }
    }

    pub fn with_charge(&self, c: f64) -> Result<Self> {
        Self::new(self.k, c, self.tau0, self.n, self.beta)
    }

    /// `Q0(z) = tau0 |z|^{2k}`.
    pub fn q0(&self, z: Complex64) -> f64 {
        self.tau0 * z.norm_sqr().powi(self.k as i32)
    }

    /// Microscopic potential `V0(z) = Q0(z) - 2c log|z|`; `+inf` at the origin
    /// when `c > 0` is the natural continuous extension (the density vanishes
    /// there), `-inf` when `c < 0`.
    pub fn v0(&self, z: Complex64) -> f64 {
        if self.c == 0.0 {
            return self.q0(z);
        }
        self.q0(z) - self.c * z.norm_sqr().ln()
    }

    /// `Lap Q0(z) = k^2 tau0 |z|^{2k-2}` (Laplacian convention `d d-bar`).
    pub fn laplacian_q0(&self, z: Complex64) -> f64 {
        let kf = self.k as f64;
        kf * kf * self.tau0 * z.norm_sqr().powi(self.k as i32 - 1)
    }

    /// Microscopic scale `r_n = n^{-1/2k}`.
    pub fn microscopic_scale(&self) -> f64 {
        (self.n as f64).powf(-1.0 / (2.0 * self.k as f64))
    }

    /// Droplet radius of the unrescaled potential `tau0 |zeta|^{2k}`:
    /// the equilibrium mass `int_S Lap Q dA = k tau0 R^{2k}` reaches one at
    /// `R = (k tau0)^{-1/2k}`.
    pub fn droplet_radius(&self) -> f64 {
        (self.k as f64 * self.tau0).powf(-1.0 / (2.0 * self.k as f64))
    }

    /// Log of the squared monomial norm `||z^j||^2_{L^2(mu0)}
    /// = Gamma((j+c+1)/k) / (k tau0^{(j+c+1)/k})`.
    pub fn log_norm(&self, j: usize) -> f64 {
        let kf = self.k as f64;
        let a = (j as f64 + self.c + 1.0) / kf;
        ln_gamma(a) - kf.ln() - a * self.tau0.ln()
    }
}

/// Table of log-space orthogonal-polynomial norms for a radial model. Entry
/// `j` is `log ||z^j||^2_{L^2(mu0)}`; the kernel coefficients are
/// `a_j = exp(-log_norms[j])`.
///
/// Immutable after construction and freely shareable across threads.
#[derive(Debug, Clone)]
pub struct MomentTable {
    model: RadialModel,
    log_norms: Vec<f64>,
}

impl MomentTable {
    /// Build a table with entries `j = 0..=j_max`; requires `j_max >= model.n`
    /// so every finite-n sum through the table is fully covered.
    pub fn build(model: &RadialModel, j_max: usize) -> Result<Self> {
        if j_max < model.n() {
            return Err(Error::Precondition(format!(
                "moment table horizon J = {j_max} must be at least n = {}",
                model.n()
            )));
        }
        let log_norms = (0..=j_max).map(|j| model.log_norm(j)).collect();
        Ok(Self { model: *model, log_norms })
    }

    pub fn model(&self) -> &RadialModel {
        &self.model
    }

    pub fn len(&self) -> usize {
        self.log_norms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.log_norms.is_empty()
    }

    pub fn log_norm(&self, j: usize) -> f64 {
        self.log_norms[j]
    }

    pub fn log_norms(&self) -> &[f64] {
        &self.log_norms
    }

    /// Kernel coefficient `a_j = 1 / ||z^j||^2`.
    pub fn coefficient(&self, j: usize) -> f64 {
        (-self.log_norms[j]).exp()
    }

    /// Quadrature check for a single entry: `||z^j||^2 = int_0^inf t^{j+c}
    /// e^{-tau0 t^k} dt`, evaluated adaptively. Used by tests and the kernel
    /// inspection CLI; small `j` only (the integrand peak grows like `j^j`).
    pub fn norm_by_quadrature(&self, j: usize) -> Result<f64> {
        let model = self.model;
        let c = model.c();
        let kf = model.k() as f64;
        let tau0 = model.tau0();
        let jf = j as f64;
        // integrand peak and decay cutoff in t
        let peak_t = ((jf + c).max(0.5) / (kf * tau0)).powf(1.0 / kf);
        let hi = peak_t * 2.0 + (80.0 / tau0).powf(1.0 / kf) + 5.0;
        // substitute t = u^p with p large enough that the transformed
        // exponent p(j+c+1) - 1 is >= 1; removes the endpoint singularity
        // for charges in (-1, 0)
        let p = (2.0 / (1.0 + c)).ceil().max(2.0);
        let f = move |u: f64| -> f64 {
            if u == 0.0 {
                return 0.0;
            }
            p * ((p * (jf + c + 1.0) - 1.0) * u.ln() - tau0 * u.powf(p * kf)).exp()
        };
        let (v, _) = adaptive_simpson(&f, 0.0, hi.powf(1.0 / p), 1e-12, 1e-300)?;
        Ok(v)
    }
}

/// A grid of evaluation points with per-point real values and provenance
/// metadata. Ordering follows the declared grid, row-major.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FieldSample {
    pub points: Vec<Complex64>,
    pub values: Vec<f64>,
    pub label: String,
    pub model: RadialModel,
    pub metadata: BTreeMap<String, String>,
}

impl FieldSample {
    pub fn new(
        points: Vec<Complex64>,
        values: Vec<f64>,
        label: impl Into<String>,
        model: RadialModel,
    ) -> Result<Self> {
        if points.len() != values.len() {
            return Err(Error::InvalidParameter(format!(
                "field sample length mismatch: {} points vs {} values",
                points.len(),
                values.len()
            )));
        }
        if points.iter().any(|p| !p.re.is_finite() || !p.im.is_finite()) {
            return Err(Error::NonFinite("field sample point"));
        }
        Ok(Self {
            points,
            values,
            label: label.into(),
            model,
            metadata: BTreeMap::new(),
        })
    }

    pub fn insert_metadata(&mut self, key: impl Into<String>, value: impl Into<String>) {
        self.metadata.insert(key.into(), value.into());
    }
}
