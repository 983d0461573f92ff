"""Relevant information loss of dimensionality-reducing PCA, linear-Gaussian case.

Model: ``X = S + N`` with independent signal and noise, covariances
``C_S`` (positive semidefinite) and ``C_N`` (positive definite).  PCA keeps
the ``M`` leading eigen-coordinates of ``C_X = C_S + C_N``.

All quantities are in nats.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from importlib import resources
from itertools import combinations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from ._validation import check_positive_int, check_symmetric
from .exceptions import ConvergenceError, NumericalError, SingularCovarianceError, ValidationError

SYMMETRY_TOL = 1e-12
MIN_DET = 1e-300
RANK_RTOL = 1e-8
MAX_SUBSET_DIM = 20


def jacobi_eigh(a, tol: float = 1e-12, max_sweeps: int = 100):
    """Eigen-decomposition of a symmetric matrix by cyclic Jacobi rotations.

    Sweeps over all off-diagonal pairs until the off-diagonal Frobenius
    norm drops below ``tol`` (relative to the Frobenius norm of ``a`` when
    that exceeds one).  Returns ``(eigenvalues, eigenvectors)`` unsorted,
    eigenvectors in columns.
    """
    a = check_symmetric(a, tol=1e-10).copy()
    n = a.shape[0]
    v = np.eye(n)
    threshold = tol * max(1.0, float(np.linalg.norm(a)))
    for _ in range(max_sweeps):
        off = float(np.linalg.norm(a - np.diag(np.diag(a))))
        if off < threshold:
            return np.diag(a).copy(), v
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if apq == 0.0:
                    continue
                theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                t = math.copysign(1.0, theta) / (abs(theta) + math.hypot(theta, 1.0))
                c = 1.0 / math.hypot(t, 1.0)
                s = t * c
                ap = a[:, p].copy()
                aq = a[:, q].copy()
                a[:, p] = c * ap - s * aq
                a[:, q] = s * ap + c * aq
                rp = a[p, :].copy()
                rq = a[q, :].copy()
                a[p, :] = c * rp - s * rq
                a[q, :] = s * rp + c * rq
                a[p, q] = a[q, p] = 0.0
                vp = v[:, p].copy()
                v[:, p] = c * vp - s * v[:, q]
                v[:, q] = s * vp + c * v[:, q]
    raise ConvergenceError(f"Jacobi iteration did not converge in {max_sweeps} sweeps")


def sorted_eigh(a, tie_tol: float = 1e-10):
    """Eigenpairs sorted by descending eigenvalue, with deterministic ties and signs.

    Eigenvalues within ``tie_tol`` (scaled by the largest magnitude) are
    ordered by the coordinate index of each eigenvector's largest entry.
    Each eigenvector is flipped so that its largest-magnitude entry is
    positive.
    """
    vals, vecs = jacobi_eigh(a)
    mags = np.abs(vecs)
    # first coordinate whose magnitude is (numerically) maximal
    dominant = np.argmax(mags >= mags.max(axis=0) - 1e-12, axis=0)
    signs = np.sign(vecs[dominant, np.arange(vecs.shape[1])])
    vecs = vecs * np.where(signs == 0, 1.0, signs)
    scale = max(1.0, float(np.max(np.abs(vals))))
    order = list(np.argsort(-vals, kind="stable"))
    out, i = [], 0
    while i < len(order):
        j = i + 1
        while j < len(order) and vals[order[i]] - vals[order[j]] <= tie_tol * scale:
            j += 1
        out.extend(sorted(order[i:j], key=lambda k: dominant[k]))
        i = j
    out = np.asarray(out)
    return vals[out], vecs[:, out]


@dataclass(frozen=True, eq=False)
class LinearGaussianModel:
    """Signal and noise covariances of ``X = S + N``."""

    signal_cov: np.ndarray
    noise_cov: np.ndarray

    def __post_init__(self):
        cs = check_symmetric(self.signal_cov, "signal_cov", SYMMETRY_TOL)
        cn = check_symmetric(self.noise_cov, "noise_cov", SYMMETRY_TOL)
        if cs.shape != cn.shape:
            raise ValidationError(f"covariance shapes differ: {cs.shape} vs {cn.shape}")
        if np.min(np.linalg.eigvalsh(cn)) <= 1e-12:
            raise ValidationError("noise_cov must be positive definite")
        if np.min(np.linalg.eigvalsh(cs)) < -1e-10:
            raise ValidationError("signal_cov must be positive semidefinite")
        for m in (cs, cn):
            m.setflags(write=False)
        object.__setattr__(self, "signal_cov", cs)
        object.__setattr__(self, "noise_cov", cn)

    @property
    def dim(self) -> int:
        return self.signal_cov.shape[0]

    @property
    def obs_cov(self) -> np.ndarray:
        return self.signal_cov + self.noise_cov

    def signal_rank(self) -> int:
        vals = np.linalg.eigvalsh(self.signal_cov)
        top = float(np.max(vals))
        if top <= 0:
            return 0
        return int(np.sum(vals > RANK_RTOL * top))

    def rotated(self, q) -> "LinearGaussianModel":
        """The model of ``Q X`` for an orthogonal ``Q``."""
        q = np.asarray(q, dtype=float)
        return LinearGaussianModel(q @ self.signal_cov @ q.T, q @ self.noise_cov @ q.T)

    def to_dict(self) -> dict:
        return {"signal_cov": self.signal_cov.tolist(), "noise_cov": self.noise_cov.tolist()}

    @classmethod
    def from_dict(cls, doc: dict) -> "LinearGaussianModel":
        import jsonschema

        schema = json.loads(
            resources.files("infoloss").joinpath("schemas/gaussian_model.schema.json").read_text()
        )
        try:
            jsonschema.validate(doc, schema)
        except jsonschema.ValidationError as exc:
            raise ValidationError(f"invalid model document: {exc.message}") from None
        return cls(np.asarray(doc["signal_cov"], float), np.asarray(doc["noise_cov"], float))


@dataclass(frozen=True, eq=False)
class PcaDecomposition:
    rotation: np.ndarray
    eigenvalues: np.ndarray
    n_components: int

    def project(self, x) -> np.ndarray:
        """Rows of ``x`` mapped to their ``M`` leading PCA coordinates."""
        return np.asarray(x, dtype=float) @ self.rotation[:, : self.n_components]


def _check_m(m, n) -> int:
    m = check_positive_int(m, "M")
    if not m < n:
        raise ValidationError(f"M must satisfy 1 <= M < N={n}, got {m}")
    return m


def pca_decompose(obs_cov, n_components: int) -> PcaDecomposition:
    c = check_symmetric(obs_cov, "obs_cov", SYMMETRY_TOL)
    m = _check_m(n_components, c.shape[0])
    vals, vecs = sorted_eigh(c)
    return PcaDecomposition(vecs, vals, m)


def _logdet(a, what: str) -> float:
    sign, ld = np.linalg.slogdet(a)
    if sign <= 0 or ld < math.log(MIN_DET):
        raise SingularCovarianceError(f"{what} is singular (log det {ld:.3g}, sign {sign:g})")
    return float(ld)


def schur_complement(cov, keep) -> np.ndarray:
    """Covariance of the remaining coordinates conditioned on those in ``keep``."""
    cov = np.asarray(cov, dtype=float)
    keep = np.asarray(keep, dtype=int)
    rest = np.setdiff1d(np.arange(cov.shape[0]), keep)
    if keep.size == 0:
        return cov[np.ix_(rest, rest)]
    kk = cov[np.ix_(keep, keep)]
    rk = cov[np.ix_(rest, keep)]
    _logdet(kk, "kept covariance block")
    return cov[np.ix_(rest, rest)] - rk @ np.linalg.solve(kk, rk.T)


def gaussian_conditional_entropy(cov, keep) -> float:
    """``h(rest | kept)`` in nats for a zero-mean Gaussian with covariance ``cov``."""
    sc = schur_complement(cov, keep)
    k = sc.shape[0]
    if k == 0:
        return 0.0
    return 0.5 * (k * math.log(2 * math.pi * math.e) + _logdet(sc, "conditional covariance"))


def _schur_form(model: LinearGaussianModel, pca: PcaDecomposition) -> float:
    w = pca.rotation
    kept = np.arange(pca.n_components)
    cy = w.T @ model.obs_cov @ w
    cn = w.T @ model.noise_cov @ w
    return gaussian_conditional_entropy(cy, kept) - gaussian_conditional_entropy(cn, kept)


def _mutual_information_form(model: LinearGaussianModel, keep_basis: np.ndarray) -> float:
    """``I(S;X) - I(S;B^T X)`` for a basis ``B`` with orthonormal columns."""
    i_full = 0.5 * (_logdet(model.obs_cov, "C_X") - _logdet(model.noise_cov, "C_N"))
    cx = keep_basis.T @ model.obs_cov @ keep_basis
    cn = keep_basis.T @ model.noise_cov @ keep_basis
    i_kept = 0.5 * (_logdet(cx, "kept block of C_X") - _logdet(cn, "kept block of C_N"))
    return i_full - i_kept


def gaussian_relevant_loss(model: LinearGaussianModel, n_components: int, check: bool = True) -> float:
    """Relevant loss of PCA to ``M`` components when everything is Gaussian.

    Computed as ``h(Y_c | Y_M) - h(N_c | N_M)`` in the PCA coordinates via
    Schur complements.  With ``check`` the value is compared against
    ``I(S;X) - I(S;Y_M)`` from log-determinants.
    """
    pca = pca_decompose(model.obs_cov, _check_m(n_components, model.dim))
    loss = _schur_form(model, pca)
    if check:
        other = _mutual_information_form(model, pca.rotation[:, : pca.n_components])
        if abs(loss - other) > 1e-8 * max(1.0, abs(loss)):
            raise NumericalError(f"loss formulations disagree: {loss!r} vs {other!r}")
    return loss


def gaussian_relevant_loss_mi(model: LinearGaussianModel, n_components: int) -> float:
    """Same loss as :func:`gaussian_relevant_loss`, via ``I(S;X) - I(S;Y_M)``."""
    pca = pca_decompose(model.obs_cov, _check_m(n_components, model.dim))
    return _mutual_information_form(model, pca.rotation[:, : pca.n_components])


def is_spherical(noise_cov, tol: float = 1e-10):
    """Return ``mu`` if ``noise_cov == mu * I`` within ``tol``, else None."""
    cn = np.asarray(noise_cov, dtype=float)
    mu = float(np.mean(np.diag(cn)))
    if np.max(np.abs(cn - mu * np.eye(cn.shape[0]))) <= tol:
        return mu
    return None


def iid_gaussian_bound(model: LinearGaussianModel, n_components: int) -> float:
    """``1/2 sum_{i>M} ln(lambda_i / mu)`` for spherical noise ``mu I``."""
    m = _check_m(n_components, model.dim)
    mu = is_spherical(model.noise_cov)
    if mu is None:
        raise ValidationError("noise covariance is not a scaled identity")
    lam = pca_decompose(model.obs_cov, m).eigenvalues
    val = 0.5 * float(np.sum(np.log(lam[m:] / mu)))
    return 0.0 if -1e-12 < val < 0 else val


def eigen_bound(model: LinearGaussianModel, n_components: int) -> float:
    """``1/2 sum_{i>M} ln(mu_1 / mu_i)`` over descending noise eigenvalues.

    Valid when the signal covariance has rank at most ``M``.
    """
    m = _check_m(n_components, model.dim)
    if model.signal_rank() > m:
        raise ValidationError(f"signal covariance rank {model.signal_rank()} exceeds M={m}")
    mu, _ = sorted_eigh(model.noise_cov)
    if mu[-1] <= 0:
        raise SingularCovarianceError("noise covariance is singular")
    return 0.5 * float(np.sum(np.log(mu[0] / mu[m:])))


def best_coordinate_subset(model: LinearGaussianModel, n_components: int):
    """Exhaustive search for the ``M`` input coordinates losing the least.

    Returns ``(subset, loss)`` with 0-based coordinate indices; ties go to
    the lexicographically smallest subset.
    """
    n = model.dim
    m = _check_m(n_components, n)
    if n > MAX_SUBSET_DIM:
        raise ValidationError(f"exhaustive search limited to N <= {MAX_SUBSET_DIM}, got {n}")
    eye = np.eye(n)
    best, best_loss = None, math.inf
    for subset in combinations(range(n), m):
        loss = _mutual_information_form(model, eye[:, list(subset)])
        if loss < best_loss - 1e-12:
            best, best_loss = subset, loss
    return best, best_loss


def noise_block_eigenvalues(model: LinearGaussianModel, n_components: int) -> np.ndarray:
    """Descending eigenvalues of the kept ``M x M`` block of ``W^T C_N W``."""
    pca = pca_decompose(model.obs_cov, _check_m(n_components, model.dim))
    w = pca.rotation
    block = (w.T @ model.noise_cov @ w)[: pca.n_components, : pca.n_components]
    return np.sort(np.linalg.eigvalsh(block))[::-1]


def interlacing_holds(model: LinearGaussianModel, n_components: int, tol: float = 1e-9) -> bool:
    """Check ``mu_{i+N-M} <= mu~_i <= mu_i`` for the kept noise block."""
    n, m = model.dim, n_components
    mu = np.sort(np.linalg.eigvalsh(model.noise_cov))[::-1]
    mt = noise_block_eigenvalues(model, m)
    return bool(np.all(mu[n - m :] <= mt + tol) and np.all(mt <= mu[:m] + tol))


def weyl_holds(model: LinearGaussianModel, tol: float = 1e-9) -> bool:
    """Check ``lambda_i <= nu_i + mu_1`` for all ``i``."""
    lam = np.sort(np.linalg.eigvalsh(model.obs_cov))[::-1]
    nu = np.sort(np.linalg.eigvalsh(model.signal_cov))[::-1]
    mu1 = float(np.max(np.linalg.eigvalsh(model.noise_cov)))
    return bool(np.all(lam <= nu + mu1 + tol))


class RelevantPCA(TransformerMixin, BaseEstimator):
    """PCA dimensionality reduction that also reports the relevant loss.

    ``fit`` estimates the observation covariance from samples; when the
    noise covariance is known, the implied signal covariance
    ``C_X - C_N`` is used to evaluate the Gaussian relevant loss and the
    eigenvalue bounds.

    Parameters
    ----------
    n_components : int
        Number of leading principal coordinates kept (``M``).
    noise_cov : array-like of shape (N, N), optional
        Known noise covariance.
    """

    def __init__(self, n_components=1, noise_cov=None):
        self.n_components = n_components
        self.noise_cov = noise_cov

    def fit(self, X, y=None):
        X = check_array(X, ensure_min_samples=2, ensure_min_features=2)
        self.n_features_in_ = X.shape[1]
        m = _check_m(self.n_components, X.shape[1])
        self.mean_ = X.mean(axis=0)
        xc = X - self.mean_
        cov = xc.T @ xc / (X.shape[0] - 1)
        pca = pca_decompose(0.5 * (cov + cov.T), m)
        self.components_ = pca.rotation[:, :m].T
        self.rotation_ = pca.rotation
        self.explained_variance_ = pca.eigenvalues[:m]
        self.eigenvalues_ = pca.eigenvalues
        self.relevant_loss_ = None
        self.eigen_bound_ = None
        if self.noise_cov is not None:
            cn = check_symmetric(self.noise_cov, "noise_cov")
            cs = cov - cn
            vals, vecs = np.linalg.eigh(0.5 * (cs + cs.T))
            cs = (vecs * np.clip(vals, 0.0, None)) @ vecs.T
            self.model_ = LinearGaussianModel(0.5 * (cs + cs.T), cn)
            self.relevant_loss_ = gaussian_relevant_loss(self.model_, m, check=False)
            if self.model_.signal_rank() <= m:
                self.eigen_bound_ = eigen_bound(self.model_, m)
        return self

    def transform(self, X):
        check_is_fitted(self, "components_")
        X = check_array(X)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(f"expected {self.n_features_in_} features, got {X.shape[1]}")
        return (X - self.mean_) @ self.components_.T
