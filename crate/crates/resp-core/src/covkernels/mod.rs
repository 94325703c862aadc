//! Great-circle distances and Matérn covariance construction.
//!
//! All covariances in the model come from the stationary Matérn family
//!
//! ```text
//! κ(u, v; θ) = σ² / (2^{ν-1} Γ(ν)) · (d/ρ)^ν · K_ν(d/ρ),   d = gc(u, v)
//! ```
//!
//! evaluated on great-circle distance in kilometers (spherical Earth,
//! radius 6371 km). The local field adds a nugget on the diagonal; the
//! remote (teleconnection) kernel is evaluated as given, with no local
//! factor — the separable structure keeps the two scales apart.

mod bessel;

pub use bessel::bessel_k;

use crate::kronlinalg::Mat;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Spherical Earth radius in kilometers.
pub const EARTH_RADIUS_KM: f64 = 6371.0;

#[derive(Debug, Error)]
pub enum KernelError {
    #[error("invalid location: lon {lon}, lat {lat} (need lon in [-180, 180), lat in [-90, 90], finite)")]
    BadLocation { lon: f64, lat: f64 },
    #[error("invalid Matérn parameter {name} = {value}; must be finite and > 0")]
    BadParam { name: &'static str, value: f64 },
    #[error("nugget variance {value} must be finite and >= 0")]
    BadNugget { value: f64 },
    #[error("knots {i} and {j} coincide: the knot Gram matrix would be singular")]
    DuplicateKnots { i: usize, j: usize },
    #[error("{k} knots exceed the {n_r} remote locations; predictive-process rank must not grow")]
    KnotCount { k: usize, n_r: usize },
}

/// A point on the globe, longitude in `[-180, 180)` and latitude in `[-90, 90]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Location {
    pub lon: f64,
    pub lat: f64,
}

impl Location {
    pub fn new(lon: f64, lat: f64) -> Result<Self, KernelError> {
        let ok = lon.is_finite()
            && lat.is_finite()
            && (-180.0..180.0).contains(&lon)
            && (-90.0..=90.0).contains(&lat);
        if ok {
            Ok(Location { lon, lat })
        } else {
            Err(KernelError::BadLocation { lon, lat })
        }
    }
}

/// Matérn parameters: marginal variance `σ²`, range `ρ` (km), smoothness `ν`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MaternParams {
    pub sigma2: f64,
    pub rho: f64,
    pub nu: f64,
}

impl MaternParams {
    pub fn new(sigma2: f64, rho: f64, nu: f64) -> Result<Self, KernelError> {
        let p = MaternParams { sigma2, rho, nu };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), KernelError> {
        for (name, value) in [("sigma2", self.sigma2), ("rho", self.rho), ("nu", self.nu)] {
            if !(value.is_finite() && value > 0.0) {
                return Err(KernelError::BadParam { name, value });
            }
        }
        Ok(())
    }
}

/// Local-field covariance: a Matérn kernel plus an iid nugget on the diagonal.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct LocalCovParams {
    pub matern: MaternParams,
    pub nugget_sigma2: f64,
}

impl LocalCovParams {
    pub fn new(matern: MaternParams, nugget_sigma2: f64) -> Result<Self, KernelError> {
        matern.validate()?;
        if !(nugget_sigma2.is_finite() && nugget_sigma2 >= 0.0) {
            return Err(KernelError::BadNugget { value: nugget_sigma2 });
        }
        Ok(LocalCovParams { matern, nugget_sigma2 })
    }
}

/// Great-circle distance in kilometers (haversine; exact symmetry, zero iff
/// the coordinates coincide).
pub fn great_circle_km(u: Location, v: Location) -> f64 {
    let phi1 = u.lat.to_radians();
    let phi2 = v.lat.to_radians();
    let dphi = (v.lat - u.lat).to_radians();
    let dlam = (v.lon - u.lon).to_radians();
    let s1 = (dphi / 2.0).sin();
    let s2 = (dlam / 2.0).sin();
    let a = s1 * s1 + phi1.cos() * phi2.cos() * s2 * s2;
    2.0 * EARTH_RADIUS_KM * a.sqrt().min(1.0).asin()
}

/// Matérn covariance at distance `d` km. `d = 0` returns `σ²` exactly; values
/// whose Bessel factor underflows `f64` flush to 0.
pub fn matern(d: f64, p: &MaternParams) -> f64 {
    debug_assert!(d >= 0.0, "distance must be nonnegative");
    if d == 0.0 {
        return p.sigma2;
    }
    let x = d / p.rho;
    // Prefactor in log space: Γ(ν) overflows long before the product does.
    let ln_pref = p.sigma2.ln()
        - (p.nu - 1.0) * std::f64::consts::LN_2
        - statrs::function::gamma::ln_gamma(p.nu);
    let val = ln_pref.exp() * x.powf(p.nu) * bessel_k(p.nu, x);
    if val.is_nan() {
        // 0·∞ at the extremes of the argument range: take the analytic limit.
        return if x < 1.0 { p.sigma2 } else { 0.0 };
    }
    val
}

/// Pairwise great-circle distances (symmetric, zero diagonal).
pub fn distance_matrix(locs: &[Location]) -> Mat {
    let n = locs.len();
    let mut d = Mat::zeros(n, n);
    for i in 0..n {
        for j in (i + 1)..n {
            let v = great_circle_km(locs[i], locs[j]);
            d[(i, j)] = v;
            d[(j, i)] = v;
        }
    }
    d
}

/// Rectangular great-circle distances between two location sets.
pub fn cross_distance_matrix(rows: &[Location], cols: &[Location]) -> Mat {
    Mat::from_fn(rows.len(), cols.len(), |i, j| great_circle_km(rows[i], cols[j]))
}

/// Elementwise Matérn evaluation over a distance matrix.
pub fn matern_matrix(dist: &Mat, p: &MaternParams) -> Mat {
    Mat::from_fn(dist.rows(), dist.cols(), |i, j| matern(dist[(i, j)], p))
}

/// Local covariance `Σ_ij = κ(s_i, s_j; θ_w) + σ²_ε · 1(i = j)`.
///
/// With a zero nugget, coincident locations make `Σ` singular; that case is
/// reported as a warning (the factorization-time jitter may still rescue it).
pub fn build_local_cov(locs: &[Location], p: &LocalCovParams) -> Mat {
    let dist = distance_matrix(locs);
    if p.nugget_sigma2 == 0.0 {
        'outer: for i in 0..locs.len() {
            for j in (i + 1)..locs.len() {
                if dist[(i, j)] == 0.0 {
                    log::warn!(
                        "duplicate locations {i} and {j} with zero nugget: local covariance is singular"
                    );
                    break 'outer;
                }
            }
        }
    }
    let mut sigma = matern_matrix(&dist, &p.matern);
    sigma.add_diag(p.nugget_sigma2);
    sigma
}

/// Remote kernel matrices for the predictive process: the knot Gram matrix
/// `R*` (k × k) and the cross-covariance `c*` (n_r × k), both from the remote
/// Matérn kernel `θ_α` alone.
pub fn build_remote_matrices(
    remote_locs: &[Location],
    knots: &[Location],
    p: &MaternParams,
) -> Result<(Mat, Mat), KernelError> {
    p.validate()?;
    let k = knots.len();
    let n_r = remote_locs.len();
    if k > n_r {
        return Err(KernelError::KnotCount { k, n_r });
    }
    for i in 0..k {
        for j in (i + 1)..k {
            if great_circle_km(knots[i], knots[j]) == 0.0 {
                return Err(KernelError::DuplicateKnots { i, j });
            }
        }
    }
    let rstar = matern_matrix(&distance_matrix(knots), p);
    let cstar = matern_matrix(&cross_distance_matrix(remote_locs, knots), p);
    Ok((rstar, cstar))
}
