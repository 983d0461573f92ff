"""Sample-based estimators: kNN entropy, conditional divergence J, partition refinement.

Differential entropies are in nats; partition-based losses are in bits,
matching ``info_core``.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.spatial import cKDTree
from scipy.special import digamma, gammaln
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_array, check_is_fitted

from ._validation import check_positive_int, check_prob_vector
from .exceptions import ValidationError
from .info_core import DeterministicMap, JointDistribution, loss_report, push_map
from .pca_gauss import LinearGaussianModel, gaussian_conditional_entropy, pca_decompose

DEFAULT_K = 4
MAX_DUPLICATE_FRACTION = 0.5
JITTER_REL = 1e-12
BOOTSTRAP_REPLICATES = 20
BOOTSTRAP_SEED_STRIDE = 7919
MIN_J_POINTS = 1000
MIN_RESOLUTION = 2
SOURCE_FAMILIES = ("gaussian", "uniform", "laplace", "gaussian-mixture")


@dataclass(frozen=True)
class SampleSet:
    """Points in R^dim, one per row, with the seed that generated them."""

    points: np.ndarray
    seed: int | None = None
    dim: int = field(init=False)

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim == 1:
            pts = pts[:, None]
        if pts.ndim != 2 or pts.shape[0] == 0 or pts.shape[1] == 0:
            raise ValidationError(f"points must be a non-empty (n, dim) array, got shape {pts.shape}")
        if not np.all(np.isfinite(pts)):
            raise ValidationError("points contain non-finite values")
        pts = pts.copy()
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "dim", pts.shape[1])

    def __len__(self):
        return self.points.shape[0]

    def columns(self, idx) -> "SampleSet":
        return SampleSet(self.points[:, list(idx)], self.seed)

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow([f"x{i}" for i in range(self.dim)])
            for row in self.points:
                writer.writerow([repr(float(v)) for v in row])

    @classmethod
    def from_csv(cls, path, seed: int | None = None) -> "SampleSet":
        return cls(np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2), seed)


@dataclass(frozen=True)
class SourceSpec:
    """A sampling law for a random vector, optionally followed by a linear mix.

    Parameters per family (each broadcast over the latent dimension):

    - ``gaussian``: ``mean`` (default 0), ``cov`` or ``variance`` (default 1)
    - ``uniform``: ``low``, ``high`` (default the unit-variance interval)
    - ``laplace``: ``loc`` (default 0), ``scale`` (default 1/sqrt(2))
    - ``gaussian-mixture``: ``weights``, ``means`` (one row per component),
      ``variance`` (isotropic within-component variance)

    ``mixing`` is an optional (dim, latent_dim) matrix applied to every draw.
    """

    family: str
    latent_dim: int = 1
    params: dict = field(default_factory=dict)
    mixing: np.ndarray | None = None

    def __post_init__(self):
        if self.family not in SOURCE_FAMILIES:
            raise ValidationError(f"family must be one of {SOURCE_FAMILIES}, got {self.family!r}")
        check_positive_int(self.latent_dim, "latent_dim")
        if self.mixing is not None:
            a = np.asarray(self.mixing, dtype=float)
            if a.ndim != 2 or a.shape[1] != self.latent_dim or not np.all(np.isfinite(a)):
                raise ValidationError(f"mixing must be finite with shape (dim, {self.latent_dim})")
            object.__setattr__(self, "mixing", a)
        self._latent_moments()  # validates parameters

    @property
    def dim(self) -> int:
        return self.latent_dim if self.mixing is None else self.mixing.shape[0]

    def _vec(self, key, default):
        v = np.broadcast_to(np.asarray(self.params.get(key, default), dtype=float), (self.latent_dim,))
        if not np.all(np.isfinite(v)):
            raise ValidationError(f"{key} must be finite")
        return v.copy()

    def _latent_moments(self):
        d, p = self.latent_dim, self.params
        if self.family == "gaussian":
            mean = self._vec("mean", 0.0)
            if "cov" in p:
                cov = np.asarray(p["cov"], dtype=float)
                if cov.shape != (d, d) or not np.allclose(cov, cov.T) or np.linalg.eigvalsh(cov)[0] < 0:
                    raise ValidationError("cov must be a symmetric positive semidefinite (d, d) matrix")
            else:
                var = self._vec("variance", 1.0)
                if np.any(var <= 0):
                    raise ValidationError("variance must be positive")
                cov = np.diag(var)
            return mean, cov
        if self.family == "uniform":
            half = math.sqrt(3.0)
            low, high = self._vec("low", -half), self._vec("high", half)
            if np.any(high <= low):
                raise ValidationError("uniform needs high > low")
            return 0.5 * (low + high), np.diag((high - low) ** 2 / 12.0)
        if self.family == "laplace":
            scale = self._vec("scale", 1.0 / math.sqrt(2.0))
            if np.any(scale <= 0):
                raise ValidationError("laplace scale must be positive")
            return self._vec("loc", 0.0), np.diag(2.0 * scale**2)
        # gaussian-mixture
        if "weights" not in p or "means" not in p:
            raise ValidationError("gaussian-mixture needs weights and means")
        w = check_prob_vector(p["weights"], "mixture weights", atol=1e-9)
        mu = np.asarray(p["means"], dtype=float)
        if mu.shape != (w.size, d):
            raise ValidationError(f"means must have shape ({w.size}, {d})")
        var = float(p.get("variance", 1.0))
        if not var > 0:
            raise ValidationError("mixture variance must be positive")
        mean = w @ mu
        centred = mu - mean
        return mean, var * np.eye(d) + (centred.T * w) @ centred

    @property
    def mean(self) -> np.ndarray:
        m, _ = self._latent_moments()
        return m if self.mixing is None else self.mixing @ m

    @property
    def covariance(self) -> np.ndarray:
        _, c = self._latent_moments()
        return c if self.mixing is None else self.mixing @ c @ self.mixing.T

    def sample(self, n: int, seed: int) -> SampleSet:
        n = check_positive_int(n, "n")
        rng = np.random.default_rng(seed)
        d, p = self.latent_dim, self.params
        mean, cov = self._latent_moments()
        if self.family == "gaussian":
            z = rng.multivariate_normal(mean, cov, size=n, method="eigh")
        elif self.family == "uniform":
            z = rng.uniform(self._vec("low", -math.sqrt(3.0)), self._vec("high", math.sqrt(3.0)), size=(n, d))
        elif self.family == "laplace":
            z = rng.laplace(self._vec("loc", 0.0), self._vec("scale", 1.0 / math.sqrt(2.0)), size=(n, d))
        else:
            w = np.asarray(p["weights"], dtype=float)
            comp = rng.choice(w.size, size=n, p=w / w.sum())
            mu = np.asarray(p["means"], dtype=float)
            z = mu[comp] + math.sqrt(float(p.get("variance", 1.0))) * rng.standard_normal((n, d))
        if self.mixing is not None:
            z = z @ self.mixing.T
        return SampleSet(z, seed)


def _as_points(samples) -> np.ndarray:
    if isinstance(samples, SampleSet):
        return samples.points
    return SampleSet(samples).points


def _dejitter(x: np.ndarray, seed: int | None) -> np.ndarray:
    """Perturb exact duplicate rows by a relative jitter; refuse heavy duplication."""
    _, first, counts = np.unique(x, axis=0, return_index=True, return_counts=True)
    n_dup = x.shape[0] - first.size
    if n_dup == 0:
        return x
    if n_dup > MAX_DUPLICATE_FRACTION * x.shape[0]:
        raise ValidationError(f"{n_dup} of {x.shape[0]} points are duplicates; sample is degenerate")
    dup = np.ones(x.shape[0], dtype=bool)
    dup[first] = False
    scale = JITTER_REL * max(float(np.max(np.abs(x))), 1.0)
    rng = np.random.default_rng(0 if seed is None else seed)
    x = x.copy()
    x[dup] += scale * rng.uniform(-1.0, 1.0, size=(int(dup.sum()), x.shape[1]))
    return x


def log_unit_ball_volume(d: int) -> float:
    return 0.5 * d * math.log(math.pi) - float(gammaln(0.5 * d + 1.0))


def knn_entropy(samples, k: int = DEFAULT_K) -> float:
    """Kozachenko-Leonenko differential entropy estimate in nats.

    ``h = psi(n) - psi(k) + ln V_d + (d/n) sum_i ln eps_i`` where ``eps_i``
    is the Euclidean distance from point ``i`` to its k-th nearest neighbour
    and ``V_d`` the volume of the unit d-ball.
    """
    k = check_positive_int(k, "k")
    seed = samples.seed if isinstance(samples, SampleSet) else None
    x = _as_points(samples)
    n, d = x.shape
    if n <= k + 1:
        raise ValidationError(f"need more than k + 1 = {k + 1} points, got {n}")
    if n < 2 * (d + 1):
        raise ValidationError(f"need at least 2(dim + 1) = {2 * (d + 1)} points, got {n}")
    x = _dejitter(x, seed)
    dist, _ = cKDTree(x).query(x, k=k + 1)
    eps = dist[:, k]
    return float(digamma(n) - digamma(k) + log_unit_ball_volume(d) + d * np.mean(np.log(eps)))


def conditional_divergence_J(samples, x_dims: int, k: int = DEFAULT_K) -> float:
    """Estimate J(X|Y) = h_G(X|Y) - h(X|Y) in nats.

    The first ``x_dims`` columns form X and the remaining columns Y (Y may be
    empty, giving the unconditional J(X)).  The Gaussian term uses the
    moment-matched covariance; h(X|Y) = h(X,Y) - h(Y) uses kNN estimates.
    """
    seed = samples.seed if isinstance(samples, SampleSet) else None
    z = _as_points(samples)
    n, d = z.shape
    if n < MIN_J_POINTS:
        raise ValidationError(f"conditional divergence needs at least {MIN_J_POINTS} points, got {n}")
    x_dims = check_positive_int(x_dims, "x_dims")
    if x_dims > d:
        raise ValidationError(f"x_dims={x_dims} exceeds sample dimension {d}")
    cov = np.atleast_2d(np.cov(z, rowvar=False))
    y_idx = list(range(x_dims, d))
    h_gauss = gaussian_conditional_entropy(cov, y_idx)
    h_joint = knn_entropy(SampleSet(z, seed), k)
    h_y = knn_entropy(SampleSet(z[:, y_idx], seed), k) if y_idx else 0.0
    return h_gauss - (h_joint - h_y)


class KnnEntropy(BaseEstimator):
    """Estimator wrapper around :func:`knn_entropy`.

    After ``fit(X)``, ``entropy_`` holds the estimate in nats.  ``x_dims``
    switches to the conditional divergence: when set, ``divergence_`` holds
    J of the first ``x_dims`` columns given the rest.
    """

    def __init__(self, k=DEFAULT_K, x_dims=None):
        self.k = k
        self.x_dims = x_dims

    def fit(self, X, y=None):
        X = check_array(X, ensure_min_samples=2)
        self.n_features_in_ = X.shape[1]
        self.entropy_ = knn_entropy(X, self.k)
        if self.x_dims is not None:
            self.divergence_ = conditional_divergence_J(X, self.x_dims, self.k)
        return self

    def score(self, X, y=None):
        check_is_fitted(self, "entropy_")
        return self.entropy_


@dataclass(frozen=True)
class HypothesisCheck:
    J_noise: float
    J_output: float
    margin: float
    stderr: float
    satisfied: bool
    conclusive: bool


def _divergence_pair(y: np.ndarray, nt: np.ndarray, n_components: int, seed, k: int):
    # columns are sorted by decreasing eigenvalue: the discarded block comes last
    order = list(range(n_components, y.shape[1])) + list(range(n_components))
    c = y.shape[1] - n_components
    j_noise = conditional_divergence_J(SampleSet(nt[:, order], seed), c, k)
    j_output = conditional_divergence_J(SampleSet(y[:, order], seed), c, k)
    return j_noise, j_output


def thm1_hypothesis_check(
    model: LinearGaussianModel,
    source: SourceSpec,
    n_components: int,
    n: int,
    seed: int,
    noise: SourceSpec | None = None,
    k: int = DEFAULT_K,
) -> HypothesisCheck:
    """Test J(N_c | N_M) <= J(Y_c | Y_M) on samples of the PCA-rotated model.

    ``source`` draws the signal, ``noise`` the noise (Gaussian with the
    model's noise covariance when omitted); both must reproduce the model's
    covariances.  The standard error of the margin J_output - J_noise comes
    from 20 half-size subsamples drawn without replacement, whose spread
    matches the full-sample spread for a half split.  ``satisfied`` means
    the margin is not below minus twice that error; ``conclusive`` means
    its magnitude exceeds twice the error.
    """
    if n < MIN_J_POINTS:
        raise ValidationError(f"n must be at least {MIN_J_POINTS}")
    noise = noise or SourceSpec("gaussian", model.dim, {"cov": model.noise_cov})
    for spec, target, what in ((source, model.signal_cov, "signal"), (noise, model.noise_cov, "noise")):
        if spec.dim != model.dim:
            raise ValidationError(f"{what} source dimension {spec.dim} does not match model dimension {model.dim}")
        if not np.allclose(spec.covariance, target, rtol=1e-8, atol=1e-10):
            raise ValidationError(f"{what} source covariance does not match the model")
    pca = pca_decompose(model.obs_cov, n_components)
    s = source.sample(n, seed).points
    nz = noise.sample(n, seed + 1).points
    y = (s + nz) @ pca.rotation
    nt = nz @ pca.rotation
    j_noise, j_output = _divergence_pair(y, nt, n_components, seed, k)
    margin = j_output - j_noise

    half = n // 2
    reps = []
    for r in range(BOOTSTRAP_REPLICATES):
        rep_seed = seed + BOOTSTRAP_SEED_STRIDE * (r + 1)
        idx = np.sort(np.random.default_rng(rep_seed).choice(n, size=half, replace=False))
        jn, jo = _divergence_pair(y[idx], nt[idx], n_components, rep_seed, k)
        reps.append(jo - jn)
    stderr = float(np.std(reps))
    return HypothesisCheck(
        J_noise=j_noise,
        J_output=j_output,
        margin=margin,
        stderr=stderr,
        satisfied=bool(margin >= -2.0 * stderr),
        conclusive=bool(abs(margin) > 2.0 * stderr),
    )


def quantile_labels(mass: np.ndarray, k: int) -> np.ndarray:
    """Assign each atom of a 1-D mass vector to one of ``k`` equal-mass cells.

    An atom goes to the cell containing the midpoint of its cumulative mass,
    so cells are contiguous and atoms are never split.
    """
    cdf = np.cumsum(mass)
    mid = cdf - 0.5 * mass
    return np.minimum((mid * k).astype(np.int64), k - 1)


def refined_partition_loss(joint_sx: JointDistribution, g: DeterministicMap, resolutions: Sequence[int]) -> list:
    """Relevant loss I(S';X) - I(S';Y) for successively finer partitions S' of S.

    The partition at step ``i`` is the common refinement of the equal-mass
    partitions at ``resolutions[:i + 1]``, so every step refines the last
    and the sequence is non-decreasing by the data processing inequality.
    Values in bits.
    """
    if len(resolutions) == 0:
        raise ValidationError("resolutions must be non-empty")
    res = [check_positive_int(r, "resolution") for r in resolutions]
    if any(r < MIN_RESOLUTION for r in res):
        raise ValidationError(f"every resolution must be at least {MIN_RESOLUTION}")
    if any(b <= a for a, b in zip(res, res[1:])):
        raise ValidationError("resolutions must be strictly increasing")
    if joint_sx.n_variables != 2:
        raise ValidationError("joint_sx must be a distribution over (S, X)")
    ps = joint_sx.marginal(0).mass
    out = []
    combined = np.zeros(ps.size, dtype=np.int64)
    for r in res:
        combined = combined * r + quantile_labels(ps, r)
        _, cell = np.unique(combined, return_inverse=True)
        combined = cell.ravel()
        coarse = push_map(joint_sx, 0, DeterministicMap(combined), name=joint_sx.variable_names[0])
        out.append(loss_report(coarse, g).relevant_loss)
    return out


__all__ = [
    "SampleSet",
    "SourceSpec",
    "HypothesisCheck",
    "KnnEntropy",
    "knn_entropy",
    "conditional_divergence_J",
    "thm1_hypothesis_check",
    "quantile_labels",
    "refined_partition_loss",
    "log_unit_ball_volume",
]
