//! Gaussian-state linear algebra in shot-noise units.
//!
//! Covariance matrices are stored densely in mode order `(x1, p1, ..., xn, pn)`
//! with the vacuum normalized to the identity. Every state handled by the
//! key-rate engine has at most four modes, so nothing here tries to be clever
//! about size.

use std::fmt;

use nalgebra::{DMatrix, Matrix2};

use crate::error::{check_finite, Error, Result};

/// Relative tolerance for the symmetry check on construction.
pub const SYMMETRY_TOLERANCE: f64 = 1e-12;

/// Symplectic eigenvalues may dip this far below one before a state is
/// declared unphysical. Values inside the band are clamped to exactly one.
pub const PHYSICALITY_TOLERANCE: f64 = 1e-9;

/// Smallest quadrature variance a homodyne measurement may condition on.
pub const MIN_MEASURED_VARIANCE: f64 = 1e-12;

/// Quadrature selected by a homodyne detector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Quadrature {
    X,
    P,
}

impl Quadrature {
    fn offset(self) -> usize {
        match self {
            Quadrature::X => 0,
            Quadrature::P => 1,
        }
    }
}

/// Transmittance and input-referred excess noise of an entangling-cloner
/// channel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelParams {
    transmittance: f64,
    excess_noise: f64,
}

impl ChannelParams {
    pub fn new(transmittance: f64, excess_noise: f64) -> Result<Self> {
        check_finite("transmittance", transmittance)?;
        check_finite("excess_noise", excess_noise)?;
        if !(transmittance > 0.0 && transmittance <= 1.0) {
            return Err(Error::InvalidParameter {
                name: "transmittance",
                value: transmittance,
                reason: "must lie in (0, 1]",
            });
        }
        if excess_noise < 0.0 {
            return Err(Error::InvalidParameter {
                name: "excess_noise",
                value: excess_noise,
                reason: "must be non-negative",
            });
        }
        Ok(Self {
            transmittance,
            excess_noise,
        })
    }

    /// Lossless, noiseless channel.
    pub fn identity() -> Self {
        Self {
            transmittance: 1.0,
            excess_noise: 0.0,
        }
    }

    pub fn transmittance(&self) -> f64 {
        self.transmittance
    }

    pub fn excess_noise(&self) -> f64 {
        self.excess_noise
    }

    /// Output variance of a thermal input of variance `v`: `T(v - 1 + eps) + 1`.
    pub fn output_variance(&self, v: f64) -> f64 {
        self.transmittance * (v - 1.0 + self.excess_noise) + 1.0
    }
}

/// The block-diagonal symplectic form with blocks `[[0, 1], [-1, 0]]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SymplecticForm {
    n_modes: usize,
}

impl SymplecticForm {
    pub fn new(n_modes: usize) -> Self {
        Self { n_modes }
    }

    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    pub fn matrix(&self) -> DMatrix<f64> {
        let dim = 2 * self.n_modes;
        let mut omega = DMatrix::zeros(dim, dim);
        for k in 0..self.n_modes {
            omega[(2 * k, 2 * k + 1)] = 1.0;
            omega[(2 * k + 1, 2 * k)] = -1.0;
        }
        omega
    }
}

/// Real symmetric `2n x 2n` matrix of quadrature second moments.
#[derive(Clone, PartialEq)]
pub struct CovarianceMatrix {
    m: DMatrix<f64>,
}

impl fmt::Debug for CovarianceMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "CovarianceMatrix{}", self.m)
    }
}

impl CovarianceMatrix {
    /// Wraps a matrix after checking shape and symmetry. The stored matrix is
    /// symmetrized so later round-off cannot accumulate asymmetry.
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        let (rows, cols) = m.shape();
        if rows != cols || rows == 0 || rows % 2 != 0 {
            return Err(Error::Shape { rows, cols });
        }
        if m.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "covariance entry",
                value: f64::NAN,
                reason: "must be finite",
            });
        }
        let scale = m.amax().max(1.0);
        let deviation = (&m - m.transpose()).amax();
        if deviation > SYMMETRY_TOLERANCE * scale {
            return Err(Error::NotSymmetric { deviation });
        }
        Ok(Self::from_symmetric(m))
    }

    fn from_symmetric(m: DMatrix<f64>) -> Self {
        let sym = (&m + m.transpose()) * 0.5;
        Self { m: sym }
    }

    pub fn vacuum(n_modes: usize) -> Self {
        Self {
            m: DMatrix::identity(2 * n_modes, 2 * n_modes),
        }
    }

    /// Single-mode thermal state with quadrature variance `v >= 1`.
    pub fn thermal(v: f64) -> Result<Self> {
        check_finite("variance", v)?;
        if v < 1.0 {
            return Err(Error::InvalidParameter {
                name: "variance",
                value: v,
                reason: "thermal variance must be at least one (shot noise)",
            });
        }
        Ok(Self {
            m: DMatrix::identity(2, 2) * v,
        })
    }

    /// Two-mode normal form `[[a I, c Z], [c Z, b I]]` with `Z = diag(1, -1)`.
    pub fn normal_form(a: f64, b: f64, c: f64) -> Self {
        let mut m = DMatrix::zeros(4, 4);
        m[(0, 0)] = a;
        m[(1, 1)] = a;
        m[(2, 2)] = b;
        m[(3, 3)] = b;
        m[(0, 2)] = c;
        m[(2, 0)] = c;
        m[(1, 3)] = -c;
        m[(3, 1)] = -c;
        Self { m }
    }

    pub fn n_modes(&self) -> usize {
        self.m.nrows() / 2
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.m
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.m
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.m[(row, col)]
    }

    /// The `2 x 2` block coupling modes `i` and `j`.
    pub fn block(&self, i: usize, j: usize) -> Result<Matrix2<f64>> {
        self.check_mode(i)?;
        self.check_mode(j)?;
        Ok(self.m.fixed_view::<2, 2>(2 * i, 2 * j).into_owned())
    }

    /// Reduced state on the listed modes, in the given order.
    pub fn reduced(&self, modes: &[usize]) -> Result<Self> {
        for &mode in modes {
            self.check_mode(mode)?;
        }
        let idx: Vec<usize> = modes.iter().flat_map(|&k| [2 * k, 2 * k + 1]).collect();
        let m = DMatrix::from_fn(idx.len(), idx.len(), |r, c| self.m[(idx[r], idx[c])]);
        Ok(Self { m })
    }

    /// Tensor product with an uncorrelated state, appended after this one.
    pub fn direct_sum(&self, other: &Self) -> Self {
        let (n, k) = (self.m.nrows(), other.m.nrows());
        let mut m = DMatrix::zeros(n + k, n + k);
        m.view_mut((0, 0), (n, n)).copy_from(&self.m);
        m.view_mut((n, n), (k, k)).copy_from(&other.m);
        Self { m }
    }

    /// Symplectic congruence `S gamma S^T`.
    pub fn congruence(&self, s: &DMatrix<f64>) -> Result<Self> {
        if s.ncols() != self.m.nrows() || s.nrows() % 2 != 0 || s.nrows() == 0 {
            return Err(Error::Shape {
                rows: s.nrows(),
                cols: s.ncols(),
            });
        }
        Ok(Self::from_symmetric(s * &self.m * s.transpose()))
    }

    pub fn symplectic_eigenvalues(&self) -> Result<Vec<f64>> {
        symplectic_eigenvalues(self)
    }

    /// Every symplectic eigenvalue at least `1 - 1e-9`.
    pub fn is_physical(&self) -> bool {
        self.min_symplectic_eigenvalue()
            .map(|v| v >= 1.0 - PHYSICALITY_TOLERANCE)
            .unwrap_or(false)
    }

    pub fn min_symplectic_eigenvalue(&self) -> Result<f64> {
        let nu = symplectic_eigenvalues(self)?;
        Ok(nu.last().copied().unwrap_or(f64::NAN))
    }

    pub fn entropy(&self) -> Result<f64> {
        von_neumann_entropy(self)
    }

    fn check_mode(&self, mode: usize) -> Result<()> {
        if mode < self.n_modes() {
            Ok(())
        } else {
            Err(Error::ModeIndex {
                mode,
                n_modes: self.n_modes(),
            })
        }
    }
}

/// Two-mode squeezed vacuum with quadrature variance `v`.
pub fn tmsv_covariance(v: f64) -> Result<CovarianceMatrix> {
    check_finite("variance", v)?;
    if v < 1.0 {
        return Err(Error::InvalidParameter {
            name: "variance",
            value: v,
            reason: "two-mode squeezed vacuum needs V >= 1",
        });
    }
    Ok(CovarianceMatrix::normal_form(v, v, (v * v - 1.0).sqrt()))
}

/// Sends `mode` through an entangling-cloner channel.
///
/// The diagonal block maps to `T(block - I) + T eps I + I`; correlations with
/// every other mode pick up a factor `sqrt(T)`.
pub fn entangling_cloner_channel(
    cov: &CovarianceMatrix,
    mode: usize,
    channel: ChannelParams,
) -> Result<CovarianceMatrix> {
    cov.check_mode(mode)?;
    let t = channel.transmittance();
    let root_t = t.sqrt();
    let added = 1.0 - t + t * channel.excess_noise();
    let mut m = cov.m.clone();
    for q in [2 * mode, 2 * mode + 1] {
        for k in 0..m.nrows() {
            m[(q, k)] *= root_t;
            m[(k, q)] *= root_t;
        }
        m[(q, q)] += added;
    }
    Ok(CovarianceMatrix::from_symmetric(m))
}

/// Symplectic matrix of a beamsplitter of transmittance `tau` acting on modes
/// `i` and `j` of an `n_modes` system:
/// `x_i -> sqrt(tau) x_i + sqrt(1-tau) x_j`, `x_j -> -sqrt(1-tau) x_i + sqrt(tau) x_j`,
/// and likewise for `p`.
pub fn beamsplitter_matrix(n_modes: usize, i: usize, j: usize, tau: f64) -> Result<DMatrix<f64>> {
    check_finite("beamsplitter transmittance", tau)?;
    for mode in [i, j] {
        if mode >= n_modes {
            return Err(Error::ModeIndex { mode, n_modes });
        }
    }
    if i == j {
        return Err(Error::InvalidParameter {
            name: "beamsplitter modes",
            value: i as f64,
            reason: "the two input modes must differ",
        });
    }
    if !(0.0..=1.0).contains(&tau) {
        return Err(Error::InvalidParameter {
            name: "beamsplitter transmittance",
            value: tau,
            reason: "must lie in [0, 1]",
        });
    }
    let (t, r) = (tau.sqrt(), (1.0 - tau).sqrt());
    let mut s = DMatrix::identity(2 * n_modes, 2 * n_modes);
    for q in 0..2 {
        let (a, b) = (2 * i + q, 2 * j + q);
        s[(a, a)] = t;
        s[(a, b)] = r;
        s[(b, a)] = -r;
        s[(b, b)] = t;
    }
    Ok(s)
}

pub fn beamsplitter(cov: &CovarianceMatrix, i: usize, j: usize, tau: f64) -> Result<CovarianceMatrix> {
    let s = beamsplitter_matrix(cov.n_modes(), i, j, tau)?;
    cov.congruence(&s)
}

fn split_indices(cov: &CovarianceMatrix, measured: &[usize]) -> Vec<usize> {
    (0..cov.m.nrows()).filter(|q| !measured.contains(q)).collect()
}

/// Remaining modes after homodyne detection of `quadrature` on `mode`.
///
/// Conditional covariance `gamma_rest - sigma sigma^T / v`, where `v` is the
/// measured variance. It does not depend on the outcome.
pub fn homodyne_condition(
    cov: &CovarianceMatrix,
    mode: usize,
    quadrature: Quadrature,
) -> Result<CovarianceMatrix> {
    cov.check_mode(mode)?;
    if cov.n_modes() < 2 {
        return Err(Error::Shape { rows: 2, cols: 2 });
    }
    let q = 2 * mode + quadrature.offset();
    let v = cov.m[(q, q)];
    if v < MIN_MEASURED_VARIANCE {
        return Err(Error::DegenerateMeasurement { variance: v });
    }
    let rest = split_indices(cov, &[2 * mode, 2 * mode + 1]);
    let out = DMatrix::from_fn(rest.len(), rest.len(), |r, c| {
        let (a, b) = (rest[r], rest[c]);
        cov.m[(a, b)] - cov.m[(a, q)] * cov.m[(b, q)] / v
    });
    Ok(CovarianceMatrix::from_symmetric(out))
}

/// Remaining modes after heterodyne detection of `mode`:
/// `gamma_rest - sigma (gamma_mode + I)^-1 sigma^T`.
pub fn heterodyne_condition(cov: &CovarianceMatrix, mode: usize) -> Result<CovarianceMatrix> {
    cov.check_mode(mode)?;
    if cov.n_modes() < 2 {
        return Err(Error::Shape { rows: 2, cols: 2 });
    }
    let measured = [2 * mode, 2 * mode + 1];
    let rest = split_indices(cov, &measured);
    let inner = cov.block(mode, mode)? + Matrix2::identity();
    let inv = inner
        .try_inverse()
        .ok_or(Error::Singular("heterodyne measurement block"))?;
    let sigma = DMatrix::from_fn(rest.len(), 2, |r, c| cov.m[(rest[r], measured[c])]);
    let inv = DMatrix::from_fn(2, 2, |r, c| inv[(r, c)]);
    let base = DMatrix::from_fn(rest.len(), rest.len(), |r, c| cov.m[(rest[r], rest[c])]);
    let out = base - &sigma * inv * sigma.transpose();
    Ok(CovarianceMatrix::from_symmetric(out))
}

/// Symplectic eigenvalues in descending order.
///
/// They are the moduli of the eigenvalues of `i Omega gamma`, which come in
/// `+-nu` pairs; each pair contributes one value. Values within `1e-9` below
/// one are clamped to one.
pub fn symplectic_eigenvalues(cov: &CovarianceMatrix) -> Result<Vec<f64>> {
    let scale = cov.m.amax().max(1.0);
    let deviation = (&cov.m - cov.m.transpose()).amax();
    if deviation > SYMMETRY_TOLERANCE * scale {
        return Err(Error::NotSymmetric { deviation });
    }
    let n = cov.n_modes();
    let omega = SymplecticForm::new(n).matrix();
    let product = omega * &cov.m;
    let mut moduli: Vec<f64> = product
        .complex_eigenvalues()
        .iter()
        .map(|z| z.norm())
        .collect();
    moduli.sort_by(|a, b| b.total_cmp(a));
    Ok(moduli
        .chunks(2)
        .map(|pair| {
            let nu = 0.5 * (pair[0] + pair[1]);
            if (1.0 - PHYSICALITY_TOLERANCE..1.0).contains(&nu) {
                1.0
            } else {
                nu
            }
        })
        .collect())
}

/// `G(x) = (x + 1) log2(x + 1) - x log2(x)`, with `G(0) = 0`.
pub fn g_function(x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    (x + 1.0) * (x + 1.0).log2() - x * x.log2()
}

/// Von Neumann entropy in bits, `sum_i G((nu_i - 1) / 2)`.
pub fn von_neumann_entropy(cov: &CovarianceMatrix) -> Result<f64> {
    let nu = symplectic_eigenvalues(cov)?;
    if let Some(&min) = nu.last() {
        if min < 1.0 - PHYSICALITY_TOLERANCE {
            return Err(Error::Unphysical { min_eigenvalue: min });
        }
    }
    Ok(nu.iter().map(|&v| g_function((v.max(1.0) - 1.0) / 2.0)).sum())
}
