//! Predictive-process rank reduction and EOF reparameterization.
//!
//! The teleconnection surface is anchored at `k` knots: the kriging map
//! `h*(r) = R*⁻¹ c*(r)` interpolates knot coefficients to any remote cell,
//! and dually compresses the remote field into induced covariates
//! `z*_t = R*⁻¹ c*ᵀ z_t`. For interpretation (and better-identified
//! summaries), knot coefficients can be re-expressed against the field's
//! leading EOF patterns via `T = Wᵀ c* R*⁻¹`.

use crate::covkernels::{
    cross_distance_matrix, distance_matrix, great_circle_km, matern_matrix, KernelError, Location,
    MaternParams,
};
use crate::kronlinalg::{factor_spd, svd, LinalgError, Mat};
use crate::resplike::GridSeries;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum RankError {
    #[error("shape error: {0}")]
    Shape(String),
    #[error("remote series is not time-centered: max |per-location mean| = {max_abs_mean:.3e}; standardize first")]
    NotCentered { max_abs_mean: f64 },
    #[error("requested {requested} EOFs but the series supports rank {achievable}")]
    RankExceeded { requested: usize, achievable: usize },
    #[error("degenerate bounding box: lon [{lon_min}, {lon_max}], lat [{lat_min}, {lat_max}]")]
    DegenerateBBox { lon_min: f64, lon_max: f64, lat_min: f64, lat_max: f64 },
    #[error("knot grid is empty after masking")]
    EmptyKnotGrid,
    #[error("target knot count must be positive")]
    BadKnotCount,
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// Longitude/latitude bounding box for knot placement.
#[derive(Clone, Copy, Debug, serde::Serialize, serde::Deserialize)]
pub struct BBox {
    pub lon_min: f64,
    pub lon_max: f64,
    pub lat_min: f64,
    pub lat_max: f64,
}

impl BBox {
    fn validate(&self) -> Result<(), RankError> {
        let ok = self.lon_min.is_finite()
            && self.lon_max.is_finite()
            && self.lat_min.is_finite()
            && self.lat_max.is_finite()
            && self.lon_min < self.lon_max
            && self.lat_min < self.lat_max;
        if ok {
            Ok(())
        } else {
            Err(RankError::DegenerateBBox {
                lon_min: self.lon_min,
                lon_max: self.lon_max,
                lat_min: self.lat_min,
                lat_max: self.lat_max,
            })
        }
    }
}

/// Knot set with its Gram matrix `R*` (k × k), cross-covariance `c*`
/// (n_r × k), and induced covariates `Z*` (k × n_t) — everything the
/// likelihood needs from the remote side.
#[derive(Clone, Debug)]
pub struct ReducedRankBasis {
    pub knots: Vec<Location>,
    pub rstar: Mat,
    pub cstar: Mat,
    pub zstar: Mat,
}

impl ReducedRankBasis {
    pub fn k(&self) -> usize {
        self.knots.len()
    }

    pub fn n_t(&self) -> usize {
        self.zstar.cols()
    }

    /// Build `R*`, `c*` from the remote kernel and induce covariates from the
    /// remote series in one step.
    pub fn build(
        remote: &GridSeries,
        knots: &[Location],
        p: &MaternParams,
    ) -> Result<Self, RankError> {
        let (rstar, cstar) =
            crate::covkernels::build_remote_matrices(remote.locations(), knots, p)?;
        let zstar = induce_covariates(remote, &rstar, &cstar)?;
        Ok(ReducedRankBasis { knots: knots.to_vec(), rstar, cstar, zstar })
    }
}

/// Rebuilds [`ReducedRankBasis`] for varying `(σ²_α, ρ_α)` with the distance
/// matrices computed once — the sampler calls this every time a remote
/// kernel parameter moves.
#[derive(Clone, Debug)]
pub struct BasisBuilder {
    remote: GridSeries,
    knots: Vec<Location>,
    nu_alpha: f64,
    dist_knots: Mat,
    dist_cross: Mat,
}

impl BasisBuilder {
    pub fn new(
        remote: GridSeries,
        knots: Vec<Location>,
        nu_alpha: f64,
    ) -> Result<Self, RankError> {
        if knots.is_empty() {
            return Err(RankError::BadKnotCount);
        }
        if knots.len() > remote.n_locations() {
            return Err(KernelError::KnotCount { k: knots.len(), n_r: remote.n_locations() }.into());
        }
        for i in 0..knots.len() {
            for j in (i + 1)..knots.len() {
                if great_circle_km(knots[i], knots[j]) == 0.0 {
                    return Err(KernelError::DuplicateKnots { i, j }.into());
                }
            }
        }
        let dist_knots = distance_matrix(&knots);
        let dist_cross = cross_distance_matrix(remote.locations(), &knots);
        Ok(BasisBuilder { remote, knots, nu_alpha, dist_knots, dist_cross })
    }

    pub fn build(&self, sigma2_alpha: f64, rho_alpha: f64) -> Result<ReducedRankBasis, RankError> {
        let p = MaternParams::new(sigma2_alpha, rho_alpha, self.nu_alpha)?;
        let rstar = matern_matrix(&self.dist_knots, &p);
        let cstar = matern_matrix(&self.dist_cross, &p);
        let zstar = induce_covariates(&self.remote, &rstar, &cstar)?;
        Ok(ReducedRankBasis {
            knots: self.knots.clone(),
            rstar,
            cstar,
            zstar,
        })
    }

    pub fn knots(&self) -> &[Location] {
        &self.knots
    }

    pub fn remote(&self) -> &GridSeries {
        &self.remote
    }

    pub fn nu_alpha(&self) -> f64 {
        self.nu_alpha
    }
}

/// Deterministic equal-spacing knot grid of at most `target_k` cell centers
/// inside `bbox`, filtered by `mask`. Grid shape follows the box's aspect
/// ratio so cells are approximately square in lon/lat.
pub fn place_knot_grid(
    bbox: BBox,
    target_k: usize,
    mask: impl Fn(Location) -> bool,
) -> Result<Vec<Location>, RankError> {
    bbox.validate()?;
    if target_k == 0 {
        return Err(RankError::BadKnotCount);
    }
    let ext_lon = bbox.lon_max - bbox.lon_min;
    let ext_lat = bbox.lat_max - bbox.lat_min;
    let mut ny = ((target_k as f64 * ext_lat / ext_lon).sqrt().round() as usize).max(1);
    let mut nx = (target_k / ny).max(1);
    // Rounding can overshoot; shrink the denser axis until the budget holds.
    while nx * ny > target_k {
        if ny > 1 {
            ny -= 1;
        } else {
            nx -= 1;
        }
        nx = nx.max(1);
        if nx == 1 && ny == 1 {
            break;
        }
    }
    let mut knots = Vec::with_capacity(nx * ny);
    for j in 0..ny {
        let lat = bbox.lat_min + (j as f64 + 0.5) * ext_lat / ny as f64;
        for i in 0..nx {
            let lon = bbox.lon_min + (i as f64 + 0.5) * ext_lon / nx as f64;
            let loc = Location::new(lon, lat)?;
            if mask(loc) {
                knots.push(loc);
            }
        }
    }
    if knots.is_empty() {
        return Err(RankError::EmptyKnotGrid);
    }
    Ok(knots)
}

/// Induced covariates `Z* = R*⁻¹ c*ᵀ Z` (k × n_t): the remote field kriged
/// onto the knots, one column per time.
pub fn induce_covariates(z: &GridSeries, rstar: &Mat, cstar: &Mat) -> Result<Mat, RankError> {
    if cstar.rows() != z.n_locations() || cstar.cols() != rstar.rows() {
        return Err(RankError::Shape(format!(
            "c* is {}x{} against {} remote locations and {} knots",
            cstar.rows(),
            cstar.cols(),
            z.n_locations(),
            rstar.rows()
        )));
    }
    let ctz = cstar.tr_matmul(z.values()); // k × n_t
    Ok(factor_spd(rstar)?.solve(&ctz))
}

/// Leading empirical orthogonal functions of a (time-centered) series.
#[derive(Clone, Debug)]
pub struct EofBasis {
    /// Orthonormal spatial patterns `W` (n_r × K), sign-fixed so each
    /// column's largest-magnitude entry is nonnegative.
    pub patterns: Mat,
    /// Raw projections `A = Wᵀ Z` (K × n_t), in the units of `Z`; no
    /// variance normalization is applied.
    pub scores: Mat,
    /// Fraction of total variance per retained pattern, `s_l² / Σ s_i²`.
    pub explained: Vec<f64>,
}

/// Compute the leading `count` EOFs of the remote series by (thin) SVD.
///
/// The series must already be centered per location (the constructor of the
/// standardized dataset guarantees this); off-center input is an error, not
/// something to fix silently.
pub fn compute_eofs(z: &GridSeries, count: usize) -> Result<EofBasis, RankError> {
    let zm = z.values();
    let (n_r, n_t) = (zm.rows(), zm.cols());
    if count == 0 || count > n_r.min(n_t) {
        return Err(RankError::RankExceeded { requested: count, achievable: n_r.min(n_t) });
    }
    // Centering check, scaled to the data's magnitude.
    let rms = (zm.as_slice().iter().map(|v| v * v).sum::<f64>() / (n_r * n_t) as f64).sqrt();
    let tol = 1e-6 * rms.max(1.0);
    let mut max_abs_mean = 0.0f64;
    for i in 0..n_r {
        let mean = zm.row(i).iter().sum::<f64>() / n_t as f64;
        max_abs_mean = max_abs_mean.max(mean.abs());
    }
    if max_abs_mean > tol {
        return Err(RankError::NotCentered { max_abs_mean });
    }

    let dec = svd(zm);
    let smax = dec.s.first().copied().unwrap_or(0.0);
    let rank = dec.s.iter().filter(|&&s| s > smax * 1e-12).count();
    if count > rank {
        return Err(RankError::RankExceeded { requested: count, achievable: rank });
    }

    let mut patterns = Mat::zeros(n_r, count);
    for l in 0..count {
        // Sign convention: the entry of largest magnitude is nonnegative.
        let mut best = 0usize;
        for i in 1..n_r {
            if dec.u[(i, l)].abs() > dec.u[(best, l)].abs() {
                best = i;
            }
        }
        let flip = if dec.u[(best, l)] < 0.0 { -1.0 } else { 1.0 };
        for i in 0..n_r {
            patterns[(i, l)] = flip * dec.u[(i, l)];
        }
    }
    let scores = patterns.tr_matmul(zm);
    let total: f64 = dec.s.iter().map(|s| s * s).sum();
    let explained = dec.s[..count].iter().map(|s| s * s / total).collect();
    Ok(EofBasis { patterns, scores, explained })
}

/// Linear map `T = Wᵀ c* R*⁻¹` (K × k) taking knot-space coefficients to
/// EOF-space coefficients.
#[derive(Clone, Debug)]
pub struct ReparamMap {
    pub t: Mat,
}

impl ReparamMap {
    pub fn n_eofs(&self) -> usize {
        self.t.rows()
    }

    pub fn n_knots(&self) -> usize {
        self.t.cols()
    }
}

/// Build the knot→EOF reparameterization `T = Wᵀ c* R*⁻¹`.
pub fn reparam_map(w: &Mat, rstar: &Mat, cstar: &Mat) -> Result<ReparamMap, RankError> {
    if w.rows() != cstar.rows() {
        return Err(RankError::Shape(format!(
            "patterns cover {} remote locations, c* covers {}",
            w.rows(),
            cstar.rows()
        )));
    }
    if cstar.cols() != rstar.rows() {
        return Err(RankError::Shape(format!(
            "c* has {} knot columns, R* is {}x{}",
            cstar.cols(),
            rstar.rows(),
            rstar.cols()
        )));
    }
    let wc = w.tr_matmul(cstar); // K × k
    let t = factor_spd(rstar)?.solve(&wc.transpose()).transpose();
    Ok(ReparamMap { t })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::covkernels::build_remote_matrices;
    use approx::assert_relative_eq;

    fn loc(lon: f64, lat: f64) -> Location {
        Location::new(lon, lat).unwrap()
    }

    #[test]
    fn knot_grid_two_by_two() {
        let bbox = BBox { lon_min: 0.0, lon_max: 10.0, lat_min: 0.0, lat_max: 10.0 };
        let knots = place_knot_grid(bbox, 4, |_| true).unwrap();
        let got: Vec<(f64, f64)> = knots.iter().map(|l| (l.lon, l.lat)).collect();
        assert_eq!(got, vec![(2.5, 2.5), (7.5, 2.5), (2.5, 7.5), (7.5, 7.5)]);
    }

    #[test]
    fn knot_grid_single_centroid() {
        let bbox = BBox { lon_min: 0.0, lon_max: 10.0, lat_min: 0.0, lat_max: 10.0 };
        let knots = place_knot_grid(bbox, 1, |_| true).unwrap();
        assert_eq!(knots.len(), 1);
        assert_relative_eq!(knots[0].lon, 5.0);
        assert_relative_eq!(knots[0].lat, 5.0);
    }

    #[test]
    fn knot_grid_mask_filters() {
        let bbox = BBox { lon_min: 0.0, lon_max: 10.0, lat_min: 0.0, lat_max: 10.0 };
        let knots = place_knot_grid(bbox, 4, |l| l.lat <= 5.0).unwrap();
        let got: Vec<(f64, f64)> = knots.iter().map(|l| (l.lon, l.lat)).collect();
        assert_eq!(got, vec![(2.5, 2.5), (7.5, 2.5)]);
    }

    #[test]
    fn knot_grid_never_exceeds_budget() {
        for target in 1..=30usize {
            let bbox = BBox { lon_min: -20.0, lon_max: 25.0, lat_min: 5.0, lat_max: 20.0 };
            let knots = place_knot_grid(bbox, target, |_| true).unwrap();
            assert!(knots.len() <= target, "target {target} produced {}", knots.len());
        }
    }

    #[test]
    fn knot_grid_rejects_empty_mask_and_bad_bbox() {
        let bbox = BBox { lon_min: 0.0, lon_max: 10.0, lat_min: 0.0, lat_max: 10.0 };
        assert!(matches!(place_knot_grid(bbox, 4, |_| false), Err(RankError::EmptyKnotGrid)));
        let degenerate = BBox { lon_min: 3.0, lon_max: 3.0, lat_min: 0.0, lat_max: 1.0 };
        assert!(matches!(
            place_knot_grid(degenerate, 4, |_| true),
            Err(RankError::DegenerateBBox { .. })
        ));
    }

    #[test]
    fn induced_covariate_halves_at_half_covariance() {
        // One remote cell, one knot, κ(knot, cell) = σ²_α/2 ⇒ z* = z/2.
        let p = MaternParams::new(2.0, 500.0, 0.5).unwrap();
        // Solve for the distance where the ν=1/2 kernel halves: d = ρ ln 2.
        let d_half = 500.0 * std::f64::consts::LN_2;
        let deg = d_half / 111.194926644558737; // degrees along the equator
        let remote = GridSeries::new(
            vec![loc(0.0, 0.0)],
            Mat::from_rows(&[&[3.0, -1.0, 0.5]]),
        )
        .unwrap();
        let knots = [loc(deg, 0.0)];
        let (rstar, cstar) = build_remote_matrices(remote.locations(), &knots, &p).unwrap();
        let zstar = induce_covariates(&remote, &rstar, &cstar).unwrap();
        for (t, want) in [1.5, -0.5, 0.25].iter().enumerate() {
            assert_relative_eq!(zstar[(0, t)], want, max_relative = 1e-10);
        }
    }

    #[test]
    fn induced_covariates_identity_collapse() {
        // Knots = remote grid ⇒ Z* = Z.
        let locs = vec![loc(140.0, -5.0), loc(160.0, 2.0), loc(175.0, 8.0)];
        let vals = Mat::from_rows(&[&[1.0, -0.5], &[0.3, 0.9], &[-1.2, 0.4]]);
        let remote = GridSeries::new(locs.clone(), vals.clone()).unwrap();
        let p = MaternParams::new(1.5, 900.0, 0.5).unwrap();
        let basis = ReducedRankBasis::build(&remote, &locs, &p).unwrap();
        for i in 0..3 {
            for t in 0..2 {
                assert_relative_eq!(basis.zstar[(i, t)], vals[(i, t)], epsilon = 1e-10);
            }
        }
    }

    /// Centered rank-2 test series built from orthonormal patterns with a
    /// 4:1 variance split.
    fn two_pattern_series() -> GridSeries {
        let n_r = 4;
        let locs: Vec<Location> = (0..n_r).map(|i| loc(100.0 + 5.0 * i as f64, 0.0)).collect();
        let psi1 = [0.5, 0.5, 0.5, 0.5];
        let psi2 = [0.5, -0.5, 0.5, -0.5];
        // Time-centered scores with empirical second moments 4 and 1.
        let a1 = [2.0, -2.0, 2.0, -2.0];
        let a2 = [1.0, 1.0, -1.0, -1.0];
        let vals = Mat::from_fn(n_r, 4, |i, t| psi1[i] * a1[t] + psi2[i] * a2[t]);
        GridSeries::new(locs, vals).unwrap()
    }

    #[test]
    fn eofs_recover_variance_split() {
        let z = two_pattern_series();
        let basis = compute_eofs(&z, 2).unwrap();
        assert_relative_eq!(basis.explained[0], 0.8, max_relative = 1e-10);
        assert_relative_eq!(basis.explained[1], 0.2, max_relative = 1e-10);
        // Patterns recover ±ψ; the sign convention resolves the ambiguity
        // to a nonnegative leading-magnitude entry.
        for l in 0..2 {
            let mut best = 0;
            for i in 1..4 {
                if basis.patterns[(i, l)].abs() > basis.patterns[(best, l)].abs() {
                    best = i;
                }
            }
            assert!(basis.patterns[(best, l)] >= 0.0);
        }
        // Orthonormal patterns.
        let gram = basis.patterns.tr_matmul(&basis.patterns);
        for i in 0..2 {
            for j in 0..2 {
                let want = if i == j { 1.0 } else { 0.0 };
                assert_relative_eq!(gram[(i, j)], want, epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn eofs_full_rank_reconstructs() {
        let z = two_pattern_series();
        let basis = compute_eofs(&z, 2).unwrap(); // rank is exactly 2
        let back = basis.patterns.matmul(&basis.scores);
        for i in 0..4 {
            for t in 0..4 {
                assert_relative_eq!(back[(i, t)], z.values()[(i, t)], epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn eofs_rank_excess_names_achievable() {
        let z = two_pattern_series(); // rank 2 < min(4, 4)
        match compute_eofs(&z, 3) {
            Err(RankError::RankExceeded { requested: 3, achievable: 2 }) => {}
            other => panic!("expected RankExceeded naming rank 2, got {other:?}"),
        }
    }

    #[test]
    fn eofs_reject_uncentered() {
        let locs = vec![loc(0.0, 0.0), loc(5.0, 0.0)];
        let vals = Mat::from_rows(&[&[1.0, 1.0, 1.0], &[0.5, -0.5, 0.0]]);
        let z = GridSeries::new(locs, vals).unwrap();
        assert!(matches!(compute_eofs(&z, 1), Err(RankError::NotCentered { .. })));
    }

    #[test]
    fn reparam_identity_when_knots_are_grid() {
        // knots = remote grid and W = I ⇒ T = c* R*⁻¹ = I.
        let locs = vec![loc(140.0, -5.0), loc(160.0, 2.0), loc(175.0, 8.0)];
        let p = MaternParams::new(1.3, 800.0, 0.5).unwrap();
        let (rstar, cstar) = build_remote_matrices(&locs, &locs, &p).unwrap();
        let map = reparam_map(&Mat::identity(3), &rstar, &cstar).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let want = if i == j { 1.0 } else { 0.0 };
                assert_relative_eq!(map.t[(i, j)], want, epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn reparam_constant_column_averages_kriging_weights() {
        // W a single constant column 1/√n_r ⇒ T = (1/√n_r) · 1ᵀ c* R*⁻¹,
        // the column-summed kriging weights scaled by 1/√n_r.
        let remote = vec![loc(140.0, -5.0), loc(150.0, 0.0), loc(160.0, 6.0)];
        let knots = vec![loc(145.0, -2.0), loc(156.0, 3.0)];
        let p = MaternParams::new(2.0, 700.0, 0.5).unwrap();
        let (rstar, cstar) = build_remote_matrices(&remote, &knots, &p).unwrap();
        let w = Mat::from_fn(3, 1, |_, _| 1.0 / (3.0f64).sqrt());
        let map = reparam_map(&w, &rstar, &cstar).unwrap();
        // Explicit reference: kriging weights H = R*⁻¹ c*ᵀ (k × n_r).
        let h = factor_spd(&rstar).unwrap().solve(&cstar.transpose());
        for j in 0..2 {
            let want: f64 = (0..3).map(|i| h[(j, i)]).sum::<f64>() / (3.0f64).sqrt();
            assert_relative_eq!(map.t[(0, j)], want, max_relative = 1e-12);
        }
    }

    #[test]
    fn basis_change_consistency_at_full_rank() {
        // With K = rank(Z): Σ_l a_l(t) (T α*)_l = z*_tᵀ α* for any α*.
        let z = two_pattern_series();
        let knots = vec![loc(101.0, 1.0), loc(111.0, -1.0), loc(106.0, 0.5)];
        let p = MaternParams::new(1.0, 600.0, 0.5).unwrap();
        let basis = ReducedRankBasis::build(&z, &knots, &p).unwrap();
        let eofs = compute_eofs(&z, 2).unwrap();
        let map = reparam_map(&eofs.patterns, &basis.rstar, &basis.cstar).unwrap();
        let alpha = [0.7, -1.1, 0.4];
        let t_alpha = map.t.matvec(&alpha);
        for t in 0..4 {
            let lhs: f64 = (0..2).map(|l| eofs.scores[(l, t)] * t_alpha[l]).sum();
            let rhs: f64 = (0..3).map(|j| basis.zstar[(j, t)] * alpha[j]).sum();
            assert_relative_eq!(lhs, rhs, epsilon = 1e-10);
        }
    }

    #[test]
    fn basis_builder_matches_direct_build() {
        let locs = vec![loc(140.0, -5.0), loc(160.0, 2.0), loc(175.0, 8.0)];
        let vals = Mat::from_rows(&[&[1.0, -0.5], &[0.3, 0.9], &[-1.2, 0.4]]);
        let remote = GridSeries::new(locs, vals).unwrap();
        let knots = vec![loc(150.0, 0.0), loc(170.0, 5.0)];
        let builder = BasisBuilder::new(remote.clone(), knots.clone(), 0.5).unwrap();
        let via_builder = builder.build(1.7, 850.0).unwrap();
        let direct = ReducedRankBasis::build(
            &remote,
            &knots,
            &MaternParams::new(1.7, 850.0, 0.5).unwrap(),
        )
        .unwrap();
        for i in 0..2 {
            for j in 0..2 {
                assert_relative_eq!(via_builder.rstar[(i, j)], direct.rstar[(i, j)], epsilon = 1e-14);
                assert_relative_eq!(via_builder.zstar[(i, j)], direct.zstar[(i, j)], epsilon = 1e-14);
            }
        }
    }
}
