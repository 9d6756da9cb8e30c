//! Market views `(P, Q, Omega)` and their reduction to canonical form.
//!
//! A view portfolio is a row of `P`; rows summing to 0 are relative views
//! ("x outperforms y by q"), rows summing to 1 are absolute views ("x
//! outperforms the market by q"). The canonical form used by the allocation
//! code has `P = I`, a per-asset return vector and a diagonal confidence
//! vector in which `+inf` marks an asset without a view.

use nalgebra::{DMatrix, DVector, SymmetricEigen, SVD};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Relative singular-value cutoff for numerical rank.
pub const RANK_TOL: f64 = 1e-10;
const ROW_SUM_TOL: f64 = 1e-9;

#[derive(Debug, Error, PartialEq)]
pub enum ViewError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("confidence matrix is not symmetric")]
    NotSymmetric,
    #[error("confidence matrix is not positive semidefinite (min eigenvalue {0})")]
    NotPositiveSemidefinite(f64),
    #[error("views are not independent: rank(P) = {rank} < k = {k}")]
    DependentViews { rank: usize, k: usize },
    #[error("views are self-contradictory")]
    Incompatible,
    #[error("absolute-view system is singular: {0}")]
    SingularSystem(String),
    #[error("row {0} of P is neither a relative nor an absolute view")]
    NotAView(usize),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ViewKind {
    Relative,
    Absolute,
}

/// A set of `k` views on `n` assets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ViewSetJson", into = "ViewSetJson")]
pub struct ViewSet {
    p: DMatrix<f64>,
    q: DVector<f64>,
    omega: DMatrix<f64>,
}

impl ViewSet {
    /// Checks shapes and that `omega` is symmetric positive semidefinite.
    /// Row sums are not enforced here because rotated views (see
    /// [`diagonalize_confidence`]) are legitimate but mix row kinds.
    pub fn new(p: DMatrix<f64>, q: DVector<f64>, omega: DMatrix<f64>) -> Result<Self, ViewError> {
        let (k, n) = p.shape();
        if k == 0 || n == 0 {
            return Err(ViewError::DimensionMismatch("need k >= 1 and n >= 1".into()));
        }
        if q.len() != k || omega.shape() != (k, k) {
            return Err(ViewError::DimensionMismatch(format!(
                "P is {k}x{n}, Q has {} entries, Omega is {}x{}",
                q.len(),
                omega.nrows(),
                omega.ncols()
            )));
        }
        if p.iter().chain(q.iter()).chain(omega.iter()).any(|v| !v.is_finite()) {
            return Err(ViewError::InvalidArgument("non-finite entry".into()));
        }
        let scale = omega.amax().max(f64::MIN_POSITIVE);
        if (&omega - omega.transpose()).amax() > 1e-12 * scale {
            return Err(ViewError::NotSymmetric);
        }
        let min_eig = SymmetricEigen::new(omega.clone()).eigenvalues.min();
        if min_eig < -1e-10 * scale {
            return Err(ViewError::NotPositiveSemidefinite(min_eig));
        }
        Ok(Self { p, q, omega })
    }

    /// Like [`ViewSet::new`], additionally requiring every row of `P` to be a
    /// relative or an absolute view.
    pub fn new_strict(p: DMatrix<f64>, q: DVector<f64>, omega: DMatrix<f64>) -> Result<Self, ViewError> {
        let v = Self::new(p, q, omega)?;
        for r in 0..v.k() {
            if v.row_kind(r).is_none() {
                return Err(ViewError::NotAView(r));
            }
        }
        Ok(v)
    }

    pub fn p(&self) -> &DMatrix<f64> {
        &self.p
    }

    pub fn q(&self) -> &DVector<f64> {
        &self.q
    }

    pub fn omega(&self) -> &DMatrix<f64> {
        &self.omega
    }

    pub fn k(&self) -> usize {
        self.p.nrows()
    }

    pub fn n(&self) -> usize {
        self.p.ncols()
    }

    pub fn row_kind(&self, r: usize) -> Option<ViewKind> {
        let s = self.p.row(r).sum();
        if s.abs() < ROW_SUM_TOL {
            Some(ViewKind::Relative)
        } else if (s - 1.0).abs() < ROW_SUM_TOL {
            Some(ViewKind::Absolute)
        } else {
            None
        }
    }

    fn omega_is_diagonal(&self) -> bool {
        let scale = self.omega.amax();
        let k = self.k();
        (0..k).all(|i| (0..k).all(|j| i == j || self.omega[(i, j)].abs() <= 1e-12 * scale))
    }

    /// Asset index for each row when every row is a one-hot absolute view.
    fn one_hot_assets(&self) -> Option<Vec<usize>> {
        let mut assets = Vec::with_capacity(self.k());
        for r in 0..self.k() {
            let row = self.p.row(r);
            let mut hit = None;
            for (c, v) in row.iter().enumerate() {
                if *v == 1.0 && hit.is_none() {
                    hit = Some(c);
                } else if *v != 0.0 {
                    return None;
                }
            }
            assets.push(hit?);
        }
        Some(assets)
    }
}

#[derive(Serialize, Deserialize)]
struct ViewSetJson {
    #[serde(rename = "P")]
    p: Vec<Vec<f64>>,
    #[serde(rename = "Q")]
    q: Vec<f64>,
    #[serde(rename = "Omega")]
    omega: Vec<Vec<f64>>,
}

fn matrix_from_rows(rows: &[Vec<f64>]) -> Result<DMatrix<f64>, ViewError> {
    let r = rows.len();
    let c = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|row| row.len() != c) {
        return Err(ViewError::DimensionMismatch("ragged matrix".into()));
    }
    Ok(DMatrix::from_fn(r, c, |i, j| rows[i][j]))
}

fn matrix_to_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

impl TryFrom<ViewSetJson> for ViewSet {
    type Error = ViewError;
    fn try_from(j: ViewSetJson) -> Result<Self, Self::Error> {
        ViewSet::new(
            matrix_from_rows(&j.p)?,
            DVector::from_vec(j.q),
            matrix_from_rows(&j.omega)?,
        )
    }
}

impl From<ViewSet> for ViewSetJson {
    fn from(v: ViewSet) -> Self {
        Self {
            p: matrix_to_rows(&v.p),
            q: v.q.iter().copied().collect(),
            omega: matrix_to_rows(&v.omega),
        }
    }
}

/// Views in canonical form: one absolute view per asset, diagonal
/// confidence. `omega[i] = +inf` means "no view on asset i"; the matching
/// `q[i]` is kept at 0 and never used.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "CanonicalJson", into = "CanonicalJson")]
pub struct CanonicalViews {
    q: DVector<f64>,
    omega: DVector<f64>,
}

impl CanonicalViews {
    pub fn new(q: DVector<f64>, omega: DVector<f64>) -> Result<Self, ViewError> {
        if q.len() != omega.len() || q.is_empty() {
            return Err(ViewError::DimensionMismatch(format!(
                "Q has {} entries, omega has {}",
                q.len(),
                omega.len()
            )));
        }
        if omega.iter().any(|w| !(*w >= 0.0)) {
            return Err(ViewError::InvalidArgument(
                "confidence entries must be >= 0 (or +inf)".into(),
            ));
        }
        let mut q = q;
        for i in 0..q.len() {
            if omega[i].is_infinite() {
                q[i] = 0.0;
            } else if !q[i].is_finite() {
                return Err(ViewError::InvalidArgument(format!("Q[{i}] is not finite")));
            }
        }
        Ok(Self { q, omega })
    }

    /// No information on any asset.
    pub fn no_views(n: usize) -> Self {
        Self {
            q: DVector::zeros(n),
            omega: DVector::from_element(n, f64::INFINITY),
        }
    }

    pub fn q(&self) -> &DVector<f64> {
        &self.q
    }

    pub fn omega(&self) -> &DVector<f64> {
        &self.omega
    }

    pub fn n(&self) -> usize {
        self.q.len()
    }

    pub fn has_view(&self, i: usize) -> bool {
        self.omega[i].is_finite()
    }

    /// The equivalent general view set (one one-hot row per held view), or
    /// `None` when there are no views at all.
    pub fn to_view_set(&self) -> Option<ViewSet> {
        let active: Vec<usize> = (0..self.n()).filter(|&i| self.has_view(i)).collect();
        if active.is_empty() {
            return None;
        }
        let p = DMatrix::from_fn(active.len(), self.n(), |r, c| if active[r] == c { 1.0 } else { 0.0 });
        let q = DVector::from_iterator(active.len(), active.iter().map(|&i| self.q[i]));
        let omega = DMatrix::from_diagonal(&DVector::from_iterator(
            active.len(),
            active.iter().map(|&i| self.omega[i]),
        ));
        ViewSet::new(p, q, omega).ok()
    }
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum OmegaEntry {
    Value(f64),
    Sentinel(String),
}

#[derive(Serialize, Deserialize)]
struct CanonicalJson {
    #[serde(rename = "Q")]
    q: Vec<f64>,
    omega_diag: Vec<OmegaEntry>,
}

impl TryFrom<CanonicalJson> for CanonicalViews {
    type Error = ViewError;
    fn try_from(j: CanonicalJson) -> Result<Self, Self::Error> {
        let omega = j
            .omega_diag
            .into_iter()
            .map(|e| match e {
                OmegaEntry::Value(v) => Ok(v),
                OmegaEntry::Sentinel(s) if s == "inf" => Ok(f64::INFINITY),
                OmegaEntry::Sentinel(s) => Err(ViewError::InvalidArgument(format!(
                    "unknown omega sentinel `{s}`"
                ))),
            })
            .collect::<Result<Vec<_>, _>>()?;
        CanonicalViews::new(DVector::from_vec(j.q), DVector::from_vec(omega))
    }
}

impl From<CanonicalViews> for CanonicalJson {
    fn from(v: CanonicalViews) -> Self {
        Self {
            q: v.q.iter().copied().collect(),
            omega_diag: v
                .omega
                .iter()
                .map(|w| {
                    if w.is_infinite() {
                        OmegaEntry::Sentinel("inf".into())
                    } else {
                        OmegaEntry::Value(*w)
                    }
                })
                .collect(),
        }
    }
}

/// Outcome of [`check_compatibility`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompatibilityReport {
    pub compatible: bool,
    pub rank_p: usize,
    pub independent: bool,
    /// Coefficients `c` with `c'P ~ 0` and `c'Q != 0`, scaled so the largest
    /// magnitude is 1 and `c'Q > 0`. Present only for incompatible sets.
    pub witness: Option<DVector<f64>>,
}

fn numerical_rank(singular_values: &DVector<f64>, tol: f64) -> usize {
    let max = singular_values.max();
    if max <= 0.0 {
        return 0;
    }
    singular_values.iter().filter(|s| **s > tol * max).count()
}

/// Rank of `P` and of `[P | Q]`, with a contradiction witness drawn from the
/// left null space of `P` when the two ranks differ.
pub fn check_compatibility(views: &ViewSet, tol: f64) -> Result<CompatibilityReport, ViewError> {
    if !(tol > 0.0 && tol.is_finite()) {
        return Err(ViewError::InvalidArgument(format!("tolerance must be > 0, got {tol}")));
    }
    let (k, n) = (views.k(), views.n());
    // Pad to at least k columns so U is square and spans the left null space.
    let cols = n.max(k);
    let mut padded = DMatrix::zeros(k, cols);
    padded.view_mut((0, 0), (k, n)).copy_from(views.p());
    let svd = SVD::new(padded, true, false);
    let rank_p = numerical_rank(&svd.singular_values, tol);

    let mut aug = DMatrix::zeros(k, n + 1);
    aug.view_mut((0, 0), (k, n)).copy_from(views.p());
    aug.set_column(n, views.q());
    let rank_aug = numerical_rank(&SVD::new(aug, false, false).singular_values, tol);

    let compatible = rank_aug == rank_p;
    let witness = if compatible {
        None
    } else {
        let u = svd.u.as_ref().expect("requested U");
        let smax = svd.singular_values.max();
        let mut c = DVector::zeros(k);
        for (j, s) in svd.singular_values.iter().enumerate() {
            if *s <= tol * smax {
                let uj = u.column(j);
                c += uj * uj.dot(views.q());
            }
        }
        let scale = c.amax();
        if scale > 0.0 {
            c /= scale;
        }
        if c.dot(views.q()) < 0.0 {
            c = -c;
        }
        Some(c)
    };
    Ok(CompatibilityReport {
        compatible,
        rank_p,
        independent: rank_p == k,
        witness,
    })
}

/// Orthonormal eigen-decomposition of a symmetric matrix: eigenvalues in
/// descending order, each eigenvector with its first nonzero component
/// positive.
pub fn eigenbasis(m: &DMatrix<f64>) -> (DVector<f64>, DMatrix<f64>) {
    let eig = SymmetricEigen::new(m.clone());
    let k = m.nrows();
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let values = DVector::from_iterator(k, order.iter().map(|&j| eig.eigenvalues[j]));
    let mut vectors = DMatrix::zeros(k, k);
    for (dst, &src) in order.iter().enumerate() {
        let mut v = eig.eigenvectors.column(src).into_owned();
        let lead = v.iter().find(|x| x.abs() > 1e-12).copied().unwrap_or(1.0);
        if lead < 0.0 {
            v = -v;
        }
        vectors.set_column(dst, &v);
    }
    (values, vectors)
}

/// Rotates the views into the eigenbasis of `Omega`, giving an equivalent set
/// `(V'P, V'Q, Lambda)` with diagonal confidence. Already-diagonal input is
/// returned as is.
pub fn diagonalize_confidence(views: &ViewSet) -> Result<ViewSet, ViewError> {
    if views.omega_is_diagonal() {
        return Ok(views.clone());
    }
    let (values, v) = eigenbasis(views.omega());
    let vt = v.transpose();
    let lambda = values.map(|x| x.max(0.0));
    ViewSet::new(&vt * views.p(), &vt * views.q(), DMatrix::from_diagonal(&lambda))
}

fn check_cap_weights(w: &DVector<f64>, n: usize) -> Result<(), ViewError> {
    if w.len() != n {
        return Err(ViewError::DimensionMismatch(format!(
            "capital weights have {} entries, expected {n}",
            w.len()
        )));
    }
    if w.iter().any(|x| !(*x >= 0.0)) || (w.sum() - 1.0).abs() > 1e-9 {
        return Err(ViewError::InvalidArgument(
            "capital weights must be non-negative and sum to 1".into(),
        ));
    }
    Ok(())
}

/// Per-asset solution of a view set: the mentioned assets, their implied
/// returns, and the linear map from view returns to implied returns.
struct AbsoluteSolution {
    assets: Vec<usize>,
    returns: DVector<f64>,
    gain: DMatrix<f64>,
}

/// Solves for per-asset returns on the assets the views mention.
///
/// The view equations `P_S q = Q` are used as they stand. When they leave one
/// degree of freedom (typically a set of purely relative views), the
/// capital-weighted return of the mentioned assets is anchored at zero, i.e.
/// that basket is taken to match the market. Anything less determined is a
/// singular system.
fn solve_absolute(views: &ViewSet, w: &DVector<f64>) -> Result<AbsoluteSolution, ViewError> {
    let (k, n) = (views.k(), views.n());
    let scale = views.p().amax();
    let assets: Vec<usize> = (0..n)
        .filter(|&c| views.p().column(c).iter().any(|v| v.abs() > 1e-12 * scale))
        .collect();
    let m = assets.len();
    if k > m {
        return Err(ViewError::DependentViews { rank: m, k });
    }
    let mut a = DMatrix::zeros(m, m);
    for r in 0..k {
        for (j, &c) in assets.iter().enumerate() {
            a[(r, j)] = views.p()[(r, c)];
        }
    }
    if k + 1 < m {
        return Err(ViewError::SingularSystem(format!(
            "{k} views leave {} of {m} mentioned assets undetermined",
            m - k
        )));
    }
    if k < m {
        let basket: f64 = assets.iter().map(|&c| w[c]).sum();
        if basket <= 0.0 {
            return Err(ViewError::SingularSystem(
                "mentioned assets carry no capital weight".into(),
            ));
        }
        for (j, &c) in assets.iter().enumerate() {
            a[(k, j)] = w[c] / basket;
        }
    }
    let svd = SVD::new(a.clone(), false, false);
    if numerical_rank(&svd.singular_values, RANK_TOL) < m {
        return Err(ViewError::SingularSystem(
            "view equations and capital anchor are linearly dependent".into(),
        ));
    }
    let inv = a
        .lu()
        .try_inverse()
        .ok_or_else(|| ViewError::SingularSystem("LU factorization failed".into()))?;
    let gain = inv.columns(0, k).into_owned();
    let returns = &gain * views.q();
    Ok(AbsoluteSolution {
        assets,
        returns,
        gain,
    })
}

/// Re-expresses independent relative/absolute views as one absolute view
/// per mentioned asset. The implied returns satisfy every original view
/// equation; the confidence matrix is carried through the same linear map.
pub fn to_absolute(views: &ViewSet, w: &DVector<f64>) -> Result<ViewSet, ViewError> {
    check_cap_weights(w, views.n())?;
    for r in 0..views.k() {
        if views.row_kind(r).is_none() {
            return Err(ViewError::NotAView(r));
        }
    }
    if views.one_hot_assets().is_some() {
        return Ok(views.clone());
    }
    let report = check_compatibility(views, RANK_TOL)?;
    if !report.independent {
        return Err(ViewError::DependentViews {
            rank: report.rank_p,
            k: views.k(),
        });
    }
    let sol = solve_absolute(views, w)?;
    let n = views.n();
    let p = DMatrix::from_fn(sol.assets.len(), n, |r, c| if sol.assets[r] == c { 1.0 } else { 0.0 });
    let mut omega = &sol.gain * views.omega() * sol.gain.transpose();
    let t = omega.transpose();
    omega = (omega + t) * 0.5;
    ViewSet::new(p, sol.returns, omega)
}

/// Canonical form (identity `P`, diagonal confidence, `+inf` padding for
/// assets without a view).
///
/// The confidence of each implied per-asset view is the corresponding
/// diagonal entry of the transported covariance. When that covariance is
/// diagonal, which includes every set that is a linear re-expression of
/// independent per-asset views, the canonical form yields exactly the same
/// Black-Litterman posterior as the input.
pub fn canonicalize(views: &ViewSet, w: &DVector<f64>) -> Result<CanonicalViews, ViewError> {
    check_cap_weights(w, views.n())?;
    let n = views.n();
    if let Some(assets) = views.one_hot_assets() {
        let mut seen = vec![false; n];
        if views.omega_is_diagonal() && assets.iter().all(|&a| !std::mem::replace(&mut seen[a], true)) {
            let mut q = DVector::zeros(n);
            let mut omega = DVector::from_element(n, f64::INFINITY);
            for (r, &a) in assets.iter().enumerate() {
                q[a] = views.q()[r];
                omega[a] = views.omega()[(r, r)];
            }
            return CanonicalViews::new(q, omega);
        }
    }
    let report = check_compatibility(views, RANK_TOL)?;
    if !report.independent {
        return Err(ViewError::DependentViews {
            rank: report.rank_p,
            k: views.k(),
        });
    }
    let rotated = diagonalize_confidence(views)?;
    let sol = solve_absolute(&rotated, w)?;
    let transported = &sol.gain * rotated.omega() * sol.gain.transpose();
    let mut q = DVector::zeros(n);
    let mut omega = DVector::from_element(n, f64::INFINITY);
    for (j, &a) in sol.assets.iter().enumerate() {
        q[a] = sol.returns[j];
        omega[a] = transported[(j, j)].max(0.0);
    }
    CanonicalViews::new(q, omega)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::allocation::{bl_posterior, bl_posterior_general, equilibrium_returns, BlPosterior, Equilibrium, RiskModel};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn mat(r: usize, c: usize, v: &[f64]) -> DMatrix<f64> {
        DMatrix::from_row_slice(r, c, v)
    }

    fn vec(v: &[f64]) -> DVector<f64> {
        DVector::from_column_slice(v)
    }

    fn random_spd(rng: &mut impl Rng, n: usize, scale: f64) -> DMatrix<f64> {
        let a = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
        (&a * a.transpose() + DMatrix::identity(n, n) * 0.1) * scale
    }

    /// Conjugate-Gaussian posterior in precision form, written independently
    /// of the library's gain-form implementation.
    fn precision_oracle(eq: &Equilibrium, risk: &RiskModel, v: &ViewSet) -> BlPosterior {
        let ts_inv = (&risk.sigma * risk.tau).try_inverse().unwrap();
        let om_inv = v.omega().clone().try_inverse().unwrap();
        let prec = &ts_inv + v.p().transpose() * &om_inv * v.p();
        let m = prec.try_inverse().unwrap();
        let mean = &m * (&ts_inv * &eq.pi + v.p().transpose() * &om_inv * v.q());
        BlPosterior {
            mean,
            cov: &risk.sigma + m,
        }
    }

    fn setup(rng: &mut impl Rng, n: usize) -> (RiskModel, Equilibrium) {
        let risk = RiskModel::new(random_spd(rng, n, 0.01), 0.25, 0.05).unwrap();
        let raw = DVector::from_fn(n, |_, _| rng.gen_range(0.1..1.0));
        let eq = equilibrium_returns(&risk, &(&raw / raw.sum())).unwrap();
        (risk, eq)
    }

    fn close(a: &BlPosterior, b: &BlPosterior, tol: f64) -> bool {
        (&a.mean - &b.mean).amax() < tol && (&a.cov - &b.cov).amax() < tol
    }

    #[test]
    fn chained_relative_views_are_compatible_but_dependent() {
        let p = mat(3, 3, &[1., -1., 0., 0., 1., -1., 1., 0., -1.]);
        let v = ViewSet::new_strict(p, vec(&[0.03, 0.05, 0.08]), DMatrix::identity(3, 3)).unwrap();
        let r = check_compatibility(&v, RANK_TOL).unwrap();
        assert!(r.compatible);
        assert!(!r.independent);
        assert_eq!(r.rank_p, 2);
        assert!(r.witness.is_none());
    }

    #[test]
    fn reversed_third_view_is_contradictory() {
        let p = mat(3, 3, &[1., -1., 0., 0., 1., -1., -1., 0., 1.]);
        let v = ViewSet::new_strict(p.clone(), vec(&[0.03, 0.05, 0.08]), DMatrix::identity(3, 3)).unwrap();
        let r = check_compatibility(&v, RANK_TOL).unwrap();
        assert!(!r.compatible);
        let c = r.witness.unwrap();
        assert!((&c - vec(&[1.0, 1.0, 1.0])).amax() < 1e-12);
        assert!((c.transpose() * p).amax() < 1e-12);
        assert!(c.dot(v.q()) > 0.0);
    }

    #[test]
    fn full_rank_views_are_always_compatible() {
        for seed in 0..1000u64 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let n = rng.gen_range(1..=6);
            let k = rng.gen_range(1..=n);
            let p = DMatrix::from_fn(k, n, |_, _| rng.gen_range(-1.0..1.0));
            let q = DVector::from_fn(k, |_, _| rng.gen_range(-0.1..0.1));
            let v = ViewSet::new(p, q, DMatrix::identity(k, k)).unwrap();
            let r = check_compatibility(&v, RANK_TOL).unwrap();
            assert!(r.independent && r.compatible, "seed {seed}");
        }
    }

    #[test]
    fn compatibility_rejects_bad_tolerance() {
        let v = ViewSet::new(mat(1, 2, &[1., -1.]), vec(&[0.01]), mat(1, 1, &[1.0])).unwrap();
        assert!(check_compatibility(&v, 0.0).is_err());
    }

    #[test]
    fn asymmetric_omega_is_rejected() {
        let err = ViewSet::new(DMatrix::identity(2, 2), vec(&[0.0, 0.0]), mat(2, 2, &[1., 0.5, 0.2, 1.])).unwrap_err();
        assert_eq!(err, ViewError::NotSymmetric);
        assert!(matches!(
            ViewSet::new(DMatrix::identity(2, 2), vec(&[0.0, 0.0]), mat(2, 2, &[1., 2., 2., 1.])),
            Err(ViewError::NotPositiveSemidefinite(_))
        ));
    }

    #[test]
    fn diagonal_confidence_is_left_alone() {
        let v = ViewSet::new(mat(2, 3, &[1., -1., 0., 0., 0., 1.]), vec(&[0.01, 0.02]), mat(2, 2, &[0.3, 0., 0., 0.1])).unwrap();
        assert_eq!(diagonalize_confidence(&v).unwrap(), v);
    }

    #[test]
    fn two_by_two_eigenbasis() {
        let (vals, vecs) = eigenbasis(&mat(2, 2, &[2., 1., 1., 2.]));
        assert!((vals - vec(&[3.0, 1.0])).amax() < 1e-12);
        let s = 1.0 / 2f64.sqrt();
        assert!((vecs.column(0) - vec(&[s, s])).amax() < 1e-12);
        assert!((vecs.column(1) - vec(&[s, -s])).amax() < 1e-12);

        let v = ViewSet::new(DMatrix::identity(2, 2), vec(&[0.01, 0.03]), mat(2, 2, &[2., 1., 1., 2.])).unwrap();
        let d = diagonalize_confidence(&v).unwrap();
        assert!((d.omega() - mat(2, 2, &[3., 0., 0., 1.])).amax() < 1e-12);
        assert!((d.q() - vec(&[0.04 * s, -0.02 * s])).amax() < 1e-12);
    }

    #[test]
    fn diagonalization_preserves_posterior() {
        for seed in 0..50u64 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let (risk, eq) = setup(&mut rng, 3);
            let p = DMatrix::from_fn(3, 3, |_, _| rng.gen_range(-1.0..1.0));
            let q = DVector::from_fn(3, |_, _| rng.gen_range(-0.02..0.02));
            let v = ViewSet::new(p, q, random_spd(&mut rng, 3, 0.001)).unwrap();
            let d = diagonalize_confidence(&v).unwrap();
            let a = bl_posterior_general(&eq, &risk, &v).unwrap();
            let b = bl_posterior_general(&eq, &risk, &d).unwrap();
            assert!(close(&a, &b, 1e-10), "seed {seed}");
            assert!(close(&a, &precision_oracle(&eq, &risk, &v), 1e-10));
        }
    }

    #[test]
    fn absolute_views_pass_through() {
        let v = ViewSet::new(mat(2, 3, &[0., 1., 0., 1., 0., 0.]), vec(&[0.01, 0.02]), DMatrix::identity(2, 2)).unwrap();
        assert_eq!(to_absolute(&v, &vec(&[0.2, 0.3, 0.5])).unwrap(), v);
    }

    #[test]
    fn relative_plus_combined_absolute_on_two_assets() {
        let w = vec(&[0.5, 0.5]);
        let v = ViewSet::new_strict(mat(2, 2, &[1., -1., 0.5, 0.5]), vec(&[0.04, 0.01]), mat(2, 2, &[1e-4, 0., 0., 2e-4])).unwrap();
        let abs = to_absolute(&v, &w).unwrap();
        assert_eq!(abs.p(), &DMatrix::<f64>::identity(2, 2));
        // Cramer's rule on [[1, -1], [0.5, 0.5]] q = [0.04, 0.01].
        let det = 1.0 * 0.5 - (-1.0) * 0.5;
        let qx = (0.04 * 0.5 - (-1.0) * 0.01) / det;
        let qy = (1.0 * 0.01 - 0.5 * 0.04) / det;
        assert!((abs.q()[0] - qx).abs() < 1e-12 && (abs.q()[1] - qy).abs() < 1e-12);
        assert!((abs.q()[0] - abs.q()[1] - 0.04).abs() < 1e-10);
        assert!((abs.q().dot(&w) - 0.01).abs() < 1e-12);
    }

    #[test]
    fn square_mixed_views_become_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let n = 4;
        let mut p = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
        for r in 0..n {
            let s = p.row(r).sum();
            let target = if r % 2 == 0 { 0.0 } else { 1.0 };
            p[(r, n - 1)] += target - s;
        }
        let v = ViewSet::new_strict(p, DVector::from_element(n, 0.01), DMatrix::identity(n, n) * 1e-4).unwrap();
        let abs = to_absolute(&v, &DVector::from_element(n, 0.25)).unwrap();
        assert_eq!(abs.p(), &DMatrix::<f64>::identity(n, n));
        assert!((v.p() * abs.q() - v.q()).amax() < 1e-10);
    }

    #[test]
    fn underdetermined_and_dependent_sets_fail() {
        let w = DVector::from_element(4, 0.25);
        let one_rel = ViewSet::new_strict(mat(1, 4, &[1., -1., 0.5, -0.5]), vec(&[0.01]), mat(1, 1, &[1.0])).unwrap();
        assert!(matches!(to_absolute(&one_rel, &w), Err(ViewError::SingularSystem(_))));
        let dep = ViewSet::new_strict(mat(2, 2, &[1., -1., 2., -2.]), vec(&[0.01, 0.02]), DMatrix::identity(2, 2)).unwrap();
        assert!(matches!(to_absolute(&dep, &vec(&[0.5, 0.5])), Err(ViewError::DependentViews { .. })));
    }

    #[test]
    fn canonical_input_is_unchanged() {
        let c = CanonicalViews::new(vec(&[0.01, 0.0, -0.02]), vec(&[1e-4, f64::INFINITY, 3e-4])).unwrap();
        let back = canonicalize(&c.to_view_set().unwrap(), &vec(&[0.2, 0.3, 0.5])).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn single_absolute_view_pads_with_no_information() {
        let v = ViewSet::new(mat(1, 3, &[1., 0., 0.]), vec(&[0.03]), mat(1, 1, &[2e-4])).unwrap();
        let c = canonicalize(&v, &vec(&[0.2, 0.3, 0.5])).unwrap();
        assert_eq!(c.q()[0], 0.03);
        assert_eq!(c.omega()[0], 2e-4);
        assert!(c.omega()[1].is_infinite() && c.omega()[2].is_infinite());
    }

    #[test]
    fn mixed_views_keep_the_posterior() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let (risk, eq) = setup(&mut rng, 3);
        // Relative view on assets 0-1 and an absolute view on asset 1; the
        // confidence is the image of independent per-asset uncertainty.
        let p = mat(2, 3, &[1., -1., 0., 0., 1., 0.]);
        let ps = mat(2, 2, &[1., -1., 0., 1.]);
        let omega_c = DMatrix::from_diagonal(&vec(&[3e-4, 1e-4]));
        let omega = &ps * omega_c * ps.transpose();
        let v = ViewSet::new_strict(p, vec(&[0.02, 0.01]), omega).unwrap();
        let w = eq.w_cap.clone();
        let c = canonicalize(&v, &w).unwrap();
        assert!(c.omega()[2].is_infinite());
        assert!((c.omega()[0] - 3e-4).abs() < 1e-12 && (c.omega()[1] - 1e-4).abs() < 1e-12);
        let a = bl_posterior_general(&eq, &risk, &v).unwrap();
        let b = bl_posterior(&eq, &risk, &c).unwrap();
        assert!(close(&a, &b, 1e-8));
    }

    #[test]
    fn json_shapes() {
        let v = ViewSet::new(mat(1, 2, &[1., -1.]), vec(&[0.01]), mat(1, 1, &[0.5])).unwrap();
        let s = serde_json::to_string(&v).unwrap();
        assert_eq!(s, r#"{"P":[[1.0,-1.0]],"Q":[0.01],"Omega":[[0.5]]}"#);
        assert_eq!(serde_json::from_str::<ViewSet>(&s).unwrap(), v);

        let c = CanonicalViews::new(vec(&[0.01, 0.0]), vec(&[1e-4, f64::INFINITY])).unwrap();
        let s = serde_json::to_string(&c).unwrap();
        assert_eq!(s, r#"{"Q":[0.01,0.0],"omega_diag":[0.0001,"inf"]}"#);
        assert_eq!(serde_json::from_str::<CanonicalViews>(&s).unwrap(), c);
        assert!(serde_json::from_str::<CanonicalViews>(r#"{"Q":[0.0],"omega_diag":["nan"]}"#).is_err());
    }
}
