//! Composition sampling of the teleconnection coefficients, streaming
//! normal-approximation summaries, EOF-space transformation, and
//! posterior prediction at new timepoints.
//!
//! The coefficient posterior given one parameter draw is Gaussian with
//! Kronecker-factored covariance `Σ ⊗ M`, `M = (R*⁻¹ + Z*Z*ᵀ)⁻¹`, so a
//! draw costs two small factorizations and one structured apply. The
//! composition estimate streams those draws through per-worker
//! [`StreamingMoments`] accumulators: no buffer of all `G` coefficient
//! vectors is ever held (peak = one live draw per worker, which the
//! [`draw_probe`] counters make checkable).

mod moments;

pub use moments::StreamingMoments;

use std::fs::File;
use std::io::{BufWriter, Read as IoRead, Write as IoWrite};
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use thiserror::Error;

use crate::covkernels::{build_local_cov, KernelError};
use crate::gibbs::Chain;
use crate::kronlinalg::{
    factor_spd, kron_apply, kron_vec_right, BlockedMatrix, CholeskyFactor, LinalgError, Mat,
};
use crate::reducedrank::{BasisBuilder, RankError, ReducedRankBasis, ReparamMap};
use crate::resplike::{Dataset, ModelError, ModelState};

/// Two-sided 95% standard-normal quantile used for significance flags.
pub const Z_95: f64 = 1.959963984540054;

#[derive(Debug, Error)]
pub enum PosteriorError {
    #[error("shape error: {0}")]
    Shape(String),
    #[error("requested {requested} composition draws, chain has {available}")]
    Draws { requested: usize, available: usize },
    #[error("need at least two draws for a covariance estimate")]
    TooFewDraws,
    #[error("non-finite value in {0}")]
    NonFinite(String),
    #[error("bad covariance file {path}: {reason}")]
    BadCovFile { path: PathBuf, reason: String },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Rank(#[from] RankError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

/// Allocation accounting for live coefficient-draw buffers.
///
/// [`compose_alpha`] and [`predict`] register every `α̃*` buffer they hold
/// for the span between sampling and folding it into an accumulator. The
/// peak therefore bounds the working set: it must never scale with the
/// number of composition draws `G`, only with the worker count. Counters
/// are process-global, so tests that read them must not run concurrently
/// with other composition calls.
pub mod draw_probe {
    use std::sync::atomic::{AtomicU64, Ordering};

    static LIVE: AtomicU64 = AtomicU64::new(0);
    static PEAK: AtomicU64 = AtomicU64::new(0);

    /// RAII registration of one live draw buffer of `bytes` bytes.
    pub(super) struct DrawGuard {
        bytes: u64,
    }

    impl DrawGuard {
        pub(super) fn acquire(bytes: u64) -> Self {
            let live = LIVE.fetch_add(bytes, Ordering::SeqCst) + bytes;
            PEAK.fetch_max(live, Ordering::SeqCst);
            DrawGuard { bytes }
        }
    }

    impl Drop for DrawGuard {
        fn drop(&mut self) {
            LIVE.fetch_sub(self.bytes, Ordering::SeqCst);
        }
    }

    /// Zero both counters (call before the composition under test).
    pub fn reset() {
        LIVE.store(0, Ordering::SeqCst);
        PEAK.store(0, Ordering::SeqCst);
    }

    /// High-water mark of concurrently live draw-buffer bytes since reset.
    pub fn peak_bytes() -> u64 {
        PEAK.load(Ordering::SeqCst)
    }

    /// Currently live draw-buffer bytes (zero once a composition returns).
    pub fn live_bytes() -> u64 {
        LIVE.load(Ordering::SeqCst)
    }
}

/// The Gaussian full conditional of the stacked teleconnection
/// coefficients `α̃*` given data and one parameter draw, held in
/// Kronecker-factored form: covariance `Σ ⊗ M` with
/// `M = (R*⁻¹ + Z*Z*ᵀ)⁻¹`. Layout is location-major: coefficient
/// `(location i, knot l)` sits at index `i·k + l`.
#[derive(Clone, Debug)]
pub struct AlphaConditional {
    /// Posterior mean, length `n_s · k`.
    pub mean: Vec<f64>,
    /// Local covariance factor `Σ` (`n_s × n_s`).
    pub sigma: Mat,
    /// Knot-space covariance factor `M` (`k × k`).
    pub m: Mat,
    sigma_chol: CholeskyFactor,
    m_chol: CholeskyFactor,
}

impl AlphaConditional {
    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    /// Cholesky factor of `Σ`, shared with the predictive noise draw.
    pub fn sigma_chol(&self) -> &CholeskyFactor {
        &self.sigma_chol
    }

    /// One exact draw: `mean + (chol(Σ) ⊗ chol(M)) · z` with `z` standard
    /// normal, applied in blocked form. Consumes `n_s · k` normals.
    pub fn sample(&self, rng: &mut impl Rng) -> Vec<f64> {
        let k = self.m_chol.dim();
        let z: Vec<f64> = (0..self.mean.len()).map(|_| rng.sample(StandardNormal)).collect();
        let blocked =
            BlockedMatrix::from_slice(&z, k).expect("draw length is n_s·k by construction");
        let dev = kron_apply(self.sigma_chol.lower(), self.m_chol.lower(), &blocked)
            .expect("factor shapes fixed at construction");
        self.mean.iter().zip(dev.as_slice()).map(|(m, d)| m + d).collect()
    }
}

/// Full conditional of `α̃*` given `data` and the parameter draw `state`,
/// with `basis` built at that draw's `(σ²_α, ρ_α)`.
///
/// Uses the Woodbury form `M = R* − (R*Z*)(I + Z*ᵀR*Z*)⁻¹(R*Z*)ᵀ` (only an
/// `n_t × n_t` factorization) and the mean identity
/// `Σ_t (Y_t − X_tβ) ⊗ (M z*_t)` — the local covariance cancels from the
/// mean, so no `Σ` solve is needed.
pub fn alpha_conditional(
    data: &Dataset,
    state: &ModelState,
    basis: &ReducedRankBasis,
) -> Result<AlphaConditional, PosteriorError> {
    state.validate_positive()?;
    if state.beta.len() != data.p() {
        return Err(PosteriorError::Shape(format!(
            "beta has {} coefficients, design has {}",
            state.beta.len(),
            data.p()
        )));
    }
    if basis.n_t() != data.n_t() {
        return Err(PosteriorError::Shape(format!(
            "basis covers {} times, data has {}",
            basis.n_t(),
            data.n_t()
        )));
    }
    let n_s = data.n_s();
    let n_t = data.n_t();
    let k = basis.k();

    // M = R* − (R*Z*)(I + Z*ᵀR*Z*)⁻¹(R*Z*)ᵀ
    let rz = basis.rstar.matmul(&basis.zstar); // k × n_t
    let mut ctilde = basis.zstar.tr_matmul(&rz); // n_t × n_t
    ctilde.add_diag(1.0);
    let ctilde_chol = factor_spd(&ctilde)?;
    let sol = ctilde_chol.solve(&rz.transpose()); // n_t × k
    let mut m = basis.rstar.clone();
    m.add_scaled(-1.0, &rz.matmul(&sol));
    // Guard the factorization against solve round-off asymmetry.
    let mut m_sym = m.transpose();
    m_sym.add_scaled(1.0, &m);
    let m = m_sym.scale(0.5);
    let m_chol = factor_spd(&m)?;

    let sigma = build_local_cov(data.response.locations(), &state.local_cov_params());
    let sigma_chol = factor_spd(&sigma)?;

    // mean = Σ_t E_t ⊗ (M z*_t), location-major blocks of k.
    let e = data.residual_matrix(&state.beta);
    let mz = m.matmul(&basis.zstar); // k × n_t
    let unit = Mat::from_rows(&[&[1.0]]);
    let mut mean = vec![0.0; n_s * k];
    for t in 0..n_t {
        let e_t = Mat::col_vec(e.col(t).as_slice());
        let term = kron_vec_right(&e_t, &mz.col(t), &unit)?;
        for (dst, src) in mean.iter_mut().zip(term.as_slice()) {
            *dst += src;
        }
    }

    Ok(AlphaConditional { mean, sigma, m, sigma_chol, m_chol })
}

/// Normal approximation to the composition-sampled posterior of the
/// stacked coefficients (knot space after [`compose_alpha`], EOF space
/// after [`transform_to_eof`]). Index layout matches
/// [`AlphaConditional`]: location-major blocks, one coefficient id per
/// in-block position.
#[derive(Clone, Debug)]
pub struct AlphaPosterior {
    /// Posterior mean `μ̂`, length `location_ids.len() · knot_ids.len()`.
    pub mean: Vec<f64>,
    /// Posterior covariance `Σ̂` (sample covariance, `G − 1` denominator).
    pub cov: Mat,
    /// Per-block coefficient labels (`knot_*` or `eof_*`).
    pub knot_ids: Vec<String>,
    /// One label per response location; defaults to the location index.
    pub location_ids: Vec<String>,
    /// Number of composition draws behind the estimate.
    pub n_draws: u64,
}

impl AlphaPosterior {
    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    /// Posterior sd of coefficient `idx` (clamped at zero).
    pub fn sd(&self, idx: usize) -> f64 {
        self.cov[(idx, idx)].max(0.0).sqrt()
    }

    /// Whether the central 95% interval of coefficient `idx` excludes zero.
    pub fn significant(&self, idx: usize) -> bool {
        self.mean[idx].abs() > Z_95 * self.sd(idx)
    }
}

/// Uniform-stride selection of `g` indices from `0..len`.
fn stride_select(len: usize, g: usize) -> Vec<usize> {
    (0..g).map(|j| j * len / g).collect()
}

/// Split `0..g` into at most `workers` contiguous, near-equal ranges.
fn chunk_ranges(g: usize, workers: usize) -> Vec<std::ops::Range<usize>> {
    let w = workers.min(g).max(1);
    (0..w).map(|c| (c * g / w)..((c + 1) * g / w)).filter(|r| !r.is_empty()).collect()
}

/// Cache key for basis factors: `(ρ_α, σ²_α)` rounded to 12 significant
/// digits, so bitwise-repeated chain states (the common case after a
/// rejected Metropolis step) share one factorization.
fn basis_key(state: &ModelState) -> (String, String) {
    (format!("{:.11e}", state.rho_alpha), format!("{:.11e}", state.sigma2_alpha))
}

struct BasisCache<'a> {
    builder: &'a BasisBuilder,
    entry: Option<((String, String), ReducedRankBasis)>,
}

impl<'a> BasisCache<'a> {
    fn new(builder: &'a BasisBuilder) -> Self {
        BasisCache { builder, entry: None }
    }

    fn get(&mut self, state: &ModelState) -> Result<&ReducedRankBasis, PosteriorError> {
        let key = basis_key(state);
        let stale = match &self.entry {
            Some((held, _)) => *held != key,
            None => true,
        };
        if stale {
            let basis = self.builder.build(state.sigma2_alpha, state.rho_alpha)?;
            self.entry = Some((key, basis));
        }
        Ok(&self.entry.as_ref().unwrap().1)
    }
}

fn check_remote_match(data: &Dataset, builder: &BasisBuilder) -> Result<(), PosteriorError> {
    if builder.remote().n_locations() != data.n_r()
        || builder.remote().n_times() != data.n_t()
    {
        return Err(PosteriorError::Shape(format!(
            "basis builder remote field is {}×{}, dataset remote field is {}×{}",
            builder.remote().n_locations(),
            builder.remote().n_times(),
            data.n_r(),
            data.n_t()
        )));
    }
    Ok(())
}

/// Composition sampling: for `g` parameter draws taken by uniform stride
/// over the chain, rebuild the basis, draw `α̃*` from its full
/// conditional, and stream the draws into a normal approximation.
///
/// Draws are split into at most `workers` contiguous chunks, each folding
/// into a private [`StreamingMoments`]; partials merge once at the end in
/// index order. The RNG substream of draw `j` is derived from
/// `(seed, j)`, so the worker count never changes the result. At no point
/// are more than `workers` coefficient vectors live at once.
pub fn compose_alpha(
    chain: &Chain,
    data: &Dataset,
    builder: &BasisBuilder,
    g: usize,
    workers: usize,
    seed: u64,
) -> Result<AlphaPosterior, PosteriorError> {
    if g < 2 {
        return Err(PosteriorError::TooFewDraws);
    }
    if g > chain.len() {
        return Err(PosteriorError::Draws { requested: g, available: chain.len() });
    }
    if workers == 0 {
        return Err(PosteriorError::Shape("workers must be at least 1".into()));
    }
    check_remote_match(data, builder)?;
    let n_s = data.n_s();
    let k = builder.knots().len();
    let dim = n_s * k;
    let selected = stride_select(chain.len(), g);

    let partials: Result<Vec<StreamingMoments>, PosteriorError> = chunk_ranges(g, workers)
        .into_par_iter()
        .map(|range| {
            let mut acc = StreamingMoments::new(dim);
            let mut cache = BasisCache::new(builder);
            for j in range {
                let state = &chain.states[selected[j]];
                let basis = cache.get(state)?;
                let cond = alpha_conditional(data, state, basis)?;
                let mut rng = ChaCha20Rng::seed_from_u64(seed);
                rng.set_stream(j as u64);
                let _live = draw_probe::DrawGuard::acquire(8 * dim as u64);
                let alpha = cond.sample(&mut rng);
                acc.update(&alpha);
            }
            Ok(acc)
        })
        .collect();

    let mut partials = partials?.into_iter();
    let mut acc = partials.next().expect("at least one chunk");
    for part in partials {
        acc.merge(part)?;
    }
    let cov = acc.covariance().ok_or(PosteriorError::TooFewDraws)?;
    Ok(AlphaPosterior {
        mean: acc.mean().to_vec(),
        cov,
        knot_ids: (0..k).map(|l| format!("knot_{l}")).collect(),
        location_ids: (0..n_s).map(|i| i.to_string()).collect(),
        n_draws: acc.count(),
    })
}

/// Push a knot-space posterior through the EOF reparameterization:
/// `mean ↦ (I⊗T)·mean`, `cov ↦ (I⊗T)·cov·(I⊗T)ᵀ`, applied blockwise so
/// the identity factor is never materialized.
pub fn transform_to_eof(
    post: &AlphaPosterior,
    map: &ReparamMap,
) -> Result<AlphaPosterior, PosteriorError> {
    let k = map.n_knots();
    let n_eof = map.n_eofs();
    let n_s = post.location_ids.len();
    if post.knot_ids.len() != k {
        return Err(PosteriorError::Shape(format!(
            "map expects {} coefficients per location, posterior has {}",
            k,
            post.knot_ids.len()
        )));
    }
    if post.mean.len() != n_s * k || post.cov.rows() != n_s * k || post.cov.cols() != n_s * k {
        return Err(PosteriorError::Shape(format!(
            "posterior dimensions {}/{}×{} do not match {} locations × {} knots",
            post.mean.len(),
            post.cov.rows(),
            post.cov.cols(),
            n_s,
            k
        )));
    }
    let eye = Mat::identity(n_s);
    let mean =
        kron_apply(&eye, &map.t, &BlockedMatrix::from_slice(&post.mean, k)?)?.into_vec();
    // (I⊗T)·cov, all columns at once …
    let left = kron_apply(&eye, &map.t, &BlockedMatrix::new(post.cov.clone(), k)?)?;
    // … then right-multiply by (I⊗T)ᵀ via a second left application.
    let cov_t = kron_apply(&eye, &map.t, &BlockedMatrix::new(left.transpose(), k)?)?;
    let mut cov = cov_t.transpose();
    let cov_tr = cov.transpose();
    cov.add_scaled(1.0, &cov_tr);
    let cov = cov.scale(0.5);
    Ok(AlphaPosterior {
        mean,
        cov,
        knot_ids: (0..n_eof).map(|j| format!("eof_{j}")).collect(),
        location_ids: post.location_ids.clone(),
        n_draws: post.n_draws,
    })
}

/// Posterior predictive sample for one new timepoint.
#[derive(Clone, Debug)]
pub struct Predictive {
    /// Response draws, `n_s × G` (column `g` is draw `g`).
    pub draws: Mat,
    /// Per-location predictive mean.
    pub mean: Vec<f64>,
    /// Per-location predictive sd (zero when `G = 1`).
    pub sd: Vec<f64>,
}

/// Posterior predictive at a new timepoint with local design `x_t0`
/// (`n_s × p`) and remote covariate snapshot `z_t0` (length `n_r`).
///
/// For each of `g` stride-selected parameter draws: sample `α̃*` from its
/// full conditional given the training data, induce
/// `z*_{t0} = R*⁻¹ c*ᵀ z_{t0}`, then draw
/// `Y_{t0} ~ N(X_{t0}β + (I⊗z*_{t0}ᵀ)α̃*, Σ)`. Per draw, the RNG substream
/// is `(seed, draw index)` and consumes the `α̃*` normals first, then the
/// `n_s` noise normals; workers therefore never change the result.
pub fn predict(
    chain: &Chain,
    data: &Dataset,
    builder: &BasisBuilder,
    x_t0: &Mat,
    z_t0: &[f64],
    g: usize,
    workers: usize,
    seed: u64,
) -> Result<Predictive, PosteriorError> {
    if g == 0 {
        return Err(PosteriorError::Shape("need at least one predictive draw".into()));
    }
    if g > chain.len() {
        return Err(PosteriorError::Draws { requested: g, available: chain.len() });
    }
    if workers == 0 {
        return Err(PosteriorError::Shape("workers must be at least 1".into()));
    }
    check_remote_match(data, builder)?;
    let n_s = data.n_s();
    let k = builder.knots().len();
    if x_t0.rows() != n_s || x_t0.cols() != data.p() {
        return Err(PosteriorError::Shape(format!(
            "new-time design is {}×{}, expected {}×{}",
            x_t0.rows(),
            x_t0.cols(),
            n_s,
            data.p()
        )));
    }
    if let Some((r, c)) = x_t0.first_non_finite() {
        return Err(PosteriorError::NonFinite(format!("new-time design entry ({r}, {c})")));
    }
    if z_t0.len() != data.n_r() {
        return Err(PosteriorError::Shape(format!(
            "remote snapshot has {} values, field has {} locations",
            z_t0.len(),
            data.n_r()
        )));
    }
    if z_t0.iter().any(|v| !v.is_finite()) {
        return Err(PosteriorError::NonFinite("remote snapshot".into()));
    }
    let selected = stride_select(chain.len(), g);

    type ChunkOut = (std::ops::Range<usize>, Vec<Vec<f64>>, StreamingMoments);
    let chunks: Result<Vec<ChunkOut>, PosteriorError> = chunk_ranges(g, workers)
        .into_par_iter()
        .map(|range| {
            let mut cache = BasisCache::new(builder);
            let mut rstar_chol: Option<CholeskyFactor> = None;
            let mut held_key: Option<(String, String)> = None;
            let mut acc = StreamingMoments::new(n_s);
            let mut ys: Vec<Vec<f64>> = Vec::with_capacity(range.len());
            for j in range.clone() {
                let state = &chain.states[selected[j]];
                let key = basis_key(state);
                let basis = cache.get(state)?;
                if held_key.as_ref() != Some(&key) {
                    rstar_chol = Some(factor_spd(&basis.rstar)?);
                    held_key = Some(key);
                }
                let rchol = rstar_chol.as_ref().expect("factor built above");
                // z*_{t0} = R*⁻¹ c*ᵀ z_{t0}
                let ctz: Vec<f64> = (0..k)
                    .map(|l| (0..z_t0.len()).map(|i| basis.cstar[(i, l)] * z_t0[i]).sum())
                    .collect();
                let zstar0 = rchol.solve_vec(&ctz);
                let cond = alpha_conditional(data, state, basis)?;
                let mut rng = ChaCha20Rng::seed_from_u64(seed);
                rng.set_stream(j as u64);
                let y = {
                    let _live = draw_probe::DrawGuard::acquire(8 * (n_s * k) as u64);
                    let alpha = cond.sample(&mut rng);
                    let xb = x_t0.matvec(&state.beta);
                    let noise: Vec<f64> =
                        (0..n_s).map(|_| rng.sample(StandardNormal)).collect();
                    let eps = cond.sigma_chol().lower().matvec(&noise);
                    (0..n_s)
                        .map(|i| {
                            let tele: f64 = (0..k)
                                .map(|l| zstar0[l] * alpha[i * k + l])
                                .sum();
                            xb[i] + tele + eps[i]
                        })
                        .collect::<Vec<f64>>()
                };
                acc.update(&y);
                ys.push(y);
            }
            Ok((range, ys, acc))
        })
        .collect();

    let chunks = chunks?;
    let mut draws = Mat::zeros(n_s, g);
    let mut acc: Option<StreamingMoments> = None;
    for (range, ys, part) in chunks {
        for (offset, y) in ys.iter().enumerate() {
            draws.set_col(range.start + offset, y);
        }
        match acc.as_mut() {
            Some(front) => front.merge(part)?,
            None => acc = Some(part),
        }
    }
    let acc = acc.expect("at least one chunk");
    let mean = acc.mean().to_vec();
    let sd = match acc.covariance() {
        Some(cov) => (0..n_s).map(|i| cov[(i, i)].max(0.0).sqrt()).collect(),
        None => vec![0.0; n_s],
    };
    Ok(Predictive { draws, mean, sd })
}

/// Write the per-coefficient summary CSV:
/// `location_id,knot_or_eof_id,mean,sd,sig_flag`, rows location-major in
/// posterior index order. Floats print in shortest round-trip form.
pub fn write_means_csv(path: &Path, post: &AlphaPosterior) -> Result<(), PosteriorError> {
    let n_s = post.location_ids.len();
    let k = post.knot_ids.len();
    if post.mean.len() != n_s * k {
        return Err(PosteriorError::Shape(format!(
            "posterior has {} coefficients, labels imply {}",
            post.mean.len(),
            n_s * k
        )));
    }
    let mut out = BufWriter::new(File::create(path)?);
    writeln!(out, "location_id,knot_or_eof_id,mean,sd,sig_flag")?;
    for i in 0..n_s {
        for l in 0..k {
            let idx = i * k + l;
            writeln!(
                out,
                "{},{},{},{},{}",
                post.location_ids[i],
                post.knot_ids[l],
                post.mean[idx],
                post.sd(idx),
                post.significant(idx)
            )?;
        }
    }
    out.flush()?;
    Ok(())
}

const COV_MAGIC: &[u8; 8] = b"RESPCOV1";

/// Write a square matrix in the flat binary covariance format: 16-byte
/// header (magic `RESPCOV1`, `u32` dimension, `u32` reserved, both
/// little-endian) followed by row-major little-endian `f64` entries.
pub fn write_cov_binary(path: &Path, cov: &Mat) -> Result<(), PosteriorError> {
    if cov.rows() != cov.cols() {
        return Err(PosteriorError::Shape(format!(
            "covariance must be square, got {}×{}",
            cov.rows(),
            cov.cols()
        )));
    }
    let mut out = BufWriter::new(File::create(path)?);
    out.write_all(COV_MAGIC)?;
    out.write_all(&(cov.rows() as u32).to_le_bytes())?;
    out.write_all(&0u32.to_le_bytes())?;
    for v in cov.as_slice() {
        out.write_all(&v.to_le_bytes())?;
    }
    out.flush()?;
    Ok(())
}

/// Read a matrix written by [`write_cov_binary`], validating magic,
/// dimension, and exact payload length.
pub fn read_cov_binary(path: &Path) -> Result<Mat, PosteriorError> {
    let bad = |reason: String| PosteriorError::BadCovFile { path: path.to_path_buf(), reason };
    let mut bytes = Vec::new();
    File::open(path)?.read_to_end(&mut bytes)?;
    if bytes.len() < 16 {
        return Err(bad(format!("file is {} bytes, header needs 16", bytes.len())));
    }
    if &bytes[..8] != COV_MAGIC {
        return Err(bad("magic mismatch".into()));
    }
    let dim = u32::from_le_bytes(bytes[8..12].try_into().expect("4 bytes")) as usize;
    let expected = 16 + dim * dim * 8;
    if bytes.len() != expected {
        return Err(bad(format!(
            "dimension {dim} implies {expected} bytes, file has {}",
            bytes.len()
        )));
    }
    let mut cov = Mat::zeros(dim, dim);
    for i in 0..dim {
        for j in 0..dim {
            let at = 16 + (i * dim + j) * 8;
            cov[(i, j)] = f64::from_le_bytes(bytes[at..at + 8].try_into().expect("8 bytes"));
        }
    }
    Ok(cov)
}
