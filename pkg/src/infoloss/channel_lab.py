"""Binary-input additive-noise channel followed by a quantizer or pointwise map.

``X = S + N`` with ``S`` drawn from a finite set of signal values and ``N``
either uniform on ``[-a, a]`` or zero-mean Gaussian.  Quantities are in bits.

Exact results (closed forms for uniform noise, quadrature for Gaussian) sit
next to :func:`grid_loss_report`, which discretises ``(S, N)`` and evaluates
the relevant, irrelevant and noise-relative losses of an arbitrary map with
the discrete machinery of :mod:`infoloss.info_core`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate, special

from ._validation import check_prob_vector
from .info_core import (
    DeterministicMap,
    JointDistribution,
    binary_entropy,
    cmi_from_atoms,
    entropy_from_atoms,
    mutual_information,
)
from .exceptions import ValidationError

NOISE_FAMILIES = ("uniform", "gaussian")
MAP_TAGS = ("sign", "magnitude", "quantizer")
RELEVANCE = ("S", "N", "X-given-S", "X-given-N", "total")

GAUSSIAN_TRUNCATION = 8.0
CONVERGENCE_TOL = 1e-3


@dataclass(frozen=True)
class AdditiveChannel:
    """Finite-alphabet signal plus independent additive noise.

    ``noise_param`` is the half-width ``a`` for uniform noise and the
    variance for Gaussian noise.  Use :meth:`uniform` / :meth:`gaussian`.
    """

    noise_family: str
    noise_param: float
    signal_values: tuple = (-1.0, 1.0)
    priors: tuple = (0.5, 0.5)

    def __post_init__(self):
        if self.noise_family not in NOISE_FAMILIES:
            raise ValidationError(
                f"unsupported noise family {self.noise_family!r}; use one of {NOISE_FAMILIES}"
            )
        param = float(self.noise_param)
        if not math.isfinite(param):
            raise ValidationError("noise parameter must be finite")
        if self.noise_family == "uniform" and not param > 1.0:
            raise ValidationError(f"uniform noise needs a > 1, got {param!r}")
        if self.noise_family == "gaussian" and not param > 0.0:
            raise ValidationError(f"Gaussian noise variance must be positive, got {param!r}")
        values = tuple(float(v) for v in self.signal_values)
        priors = tuple(check_prob_vector(self.priors, "priors").tolist())
        if len(values) != len(priors):
            raise ValidationError("signal_values and priors differ in length")
        if len(set(values)) != len(values):
            raise ValidationError("signal values must be distinct")
        object.__setattr__(self, "noise_param", param)
        object.__setattr__(self, "signal_values", values)
        object.__setattr__(self, "priors", priors)

    @classmethod
    def uniform(cls, a, signal_values=(-1.0, 1.0), priors=(0.5, 0.5)):
        return cls("uniform", a, tuple(signal_values), tuple(priors))

    @classmethod
    def gaussian(cls, variance, signal_values=(-1.0, 1.0), priors=(0.5, 0.5)):
        return cls("gaussian", variance, tuple(signal_values), tuple(priors))

    @property
    def noise_support(self) -> tuple:
        """Interval carrying (effectively) all of the noise mass."""
        if self.noise_family == "uniform":
            return (-self.noise_param, self.noise_param)
        half = GAUSSIAN_TRUNCATION * math.sqrt(self.noise_param)
        return (-half, half)

    @property
    def support_bounds(self) -> tuple:
        lo, hi = self.noise_support
        return (min(self.signal_values) + lo, max(self.signal_values) + hi)

    def noise_pdf(self, n):
        n = np.asarray(n, dtype=float)
        if self.noise_family == "uniform":
            a = self.noise_param
            return np.where(np.abs(n) <= a, 1.0 / (2 * a), 0.0)
        var = self.noise_param
        return np.exp(-0.5 * n * n / var) / math.sqrt(2 * math.pi * var)

    def noise_cdf(self, n):
        n = np.asarray(n, dtype=float)
        if self.noise_family == "uniform":
            a = self.noise_param
            return np.clip((n + a) / (2 * a), 0.0, 1.0)
        return special.ndtr(n / math.sqrt(self.noise_param))

    def x_pdf(self, x):
        x = np.asarray(x, dtype=float)
        return sum(p * self.noise_pdf(x - s) for s, p in zip(self.signal_values, self.priors))

    def noise_entropy(self) -> float:
        """Differential entropy ``h(N) = h(X|S)`` in bits."""
        if self.noise_family == "uniform":
            return math.log2(2 * self.noise_param)
        return 0.5 * math.log2(2 * math.pi * math.e * self.noise_param)


@dataclass(frozen=True)
class Quantizer:
    """Threshold quantizer; ``x`` maps to the number of thresholds ``<= x``.

    A value exactly on a threshold therefore goes to the upper cell.  An
    empty threshold list gives a constant output.
    """

    thresholds: tuple = field(default_factory=tuple)

    def __post_init__(self):
        thr = tuple(float(t) for t in self.thresholds)
        if not all(math.isfinite(t) for t in thr):
            raise ValidationError("thresholds must be finite")
        if any(b <= a for a, b in zip(thr, thr[1:])):
            raise ValidationError(f"thresholds must be strictly increasing: {thr}")
        object.__setattr__(self, "thresholds", thr)

    @property
    def n_cells(self) -> int:
        return len(self.thresholds) + 1

    def __call__(self, x):
        return np.searchsorted(np.asarray(self.thresholds), np.asarray(x, dtype=float), side="right")

    def refine(self, threshold: float) -> "Quantizer":
        return Quantizer(tuple(sorted(set(self.thresholds) | {float(threshold)})))


def _input_entropy_uniform(ch: AdditiveChannel) -> float:
    # density of X is piecewise constant between the breakpoints s +- a
    a = ch.noise_param
    s = np.asarray(ch.signal_values)
    p = np.asarray(ch.priors)
    knots = np.unique(np.concatenate([s - a, s + a]))
    mids = 0.5 * (knots[:-1] + knots[1:])
    widths = np.diff(knots)
    dens = np.array([p[np.abs(m - s) < a].sum() for m in mids]) / (2 * a)
    nz = dens > 0
    return float(-np.sum(widths[nz] * dens[nz] * np.log2(dens[nz])))


def _input_entropy_quad(ch: AdditiveChannel) -> float:
    lo, hi = ch.support_bounds

    def integrand(x):
        f = float(ch.x_pdf(x))
        return -f * math.log2(f) if f > 0 else 0.0

    val, _ = integrate.quad(
        integrand, lo, hi, points=sorted(ch.signal_values), limit=500, epsabs=1e-13, epsrel=1e-12
    )
    return val


def input_mutual_information(ch: AdditiveChannel) -> float:
    """``I(X;S) = h(X) - h(N)`` in bits."""
    if ch.noise_family == "uniform":
        hx = _input_entropy_uniform(ch)
    else:
        hx = _input_entropy_quad(ch)
    return max(hx - ch.noise_entropy(), 0.0)


def quantizer_transition_matrix(ch: AdditiveChannel, q: Quantizer) -> np.ndarray:
    """Row-stochastic ``P(Y = j | S = s_i)``, rows in signal order."""
    s = np.asarray(ch.signal_values)[:, None]
    edges = np.concatenate([[-np.inf], q.thresholds, [np.inf]])[None, :]
    cdf = ch.noise_cdf(edges - s)
    return np.diff(cdf, axis=1)


def output_mutual_information(ch: AdditiveChannel, q: Quantizer) -> float:
    joint = np.asarray(ch.priors)[:, None] * quantizer_transition_matrix(ch, q)
    return mutual_information(JointDistribution.from_weights(("S", "Y"), joint))


def quantizer_relevant_loss(ch: AdditiveChannel, q: Quantizer) -> float:
    """``L_S(X -> Q(X)) = I(X;S) - I(Y;S)`` in bits."""
    return input_mutual_information(ch) - output_mutual_information(ch, q)


@dataclass(frozen=True)
class UniformClosedForms:
    input_mi: float
    sign_loss: float
    bec_erasure: float
    magnitude_relevant: float
    magnitude_irrelevant: float
    magnitude_total: float


def uniform_closed_forms(a: float) -> UniformClosedForms:
    """Closed-form losses for antipodal equiprobable input and uniform noise."""
    a = float(a)
    if not a > 1.0:
        raise ValidationError(f"closed forms need a > 1, got {a!r}")
    return UniformClosedForms(
        input_mi=1.0 / a,
        sign_loss=binary_entropy((a - 1) / (2 * a)) - (a - 1) / a,
        bec_erasure=(a - 1) / a,
        magnitude_relevant=1.0 / a,
        magnitude_irrelevant=(a - 1) / a,
        magnitude_total=1.0,
    )


# ---------------------------------------------------------------------------
# Grid estimates
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class GridEstimate:
    """A grid loss estimate and its value at twice the resolution.

    ``converged`` is False when doubling the resolution moved the estimate
    by ``CONVERGENCE_TOL`` bits or more, which is how infinite losses show
    up on a grid.
    """

    estimate: float
    refined_estimate: float
    resolution: int
    converged: bool

    @property
    def growth(self) -> float:
        return self.refined_estimate - self.estimate


def _map_labels(tag: str, x: np.ndarray, step: float, quantizer: Quantizer | None) -> np.ndarray:
    if tag == "sign":
        return (x >= 0).astype(np.int64)
    if tag == "quantizer":
        return quantizer(x).astype(np.int64)
    # magnitude: pool cell midpoints with equal |x| (on a half-step lattice)
    return np.rint(np.abs(x) / (0.5 * step)).astype(np.int64)


def grid_atoms(ch: AdditiveChannel, resolution: int):
    """Discretise ``(S, N)`` into weighted atoms.

    The noise support is split into ``resolution`` equal cells with
    midpoint mass assignment; ``X = s + n_mid`` is binned on a grid with the
    same step anchored at the lower end of the support of ``X``.

    Returns ``(weights, s_label, n_label, x_label, x_mid, step)`` where the
    per-atom arrays share one order (signal-major, then noise cell) and
    ``x_mid`` holds the midpoint of every X cell.
    """
    lo, hi = ch.noise_support
    step = (hi - lo) / resolution
    n_mid = lo + step * (np.arange(resolution) + 0.5)
    pn = ch.noise_pdf(n_mid) * step
    pn = pn / pn.sum()
    s = np.asarray(ch.signal_values)
    order = np.argsort(s)
    s_min = s.min()
    x_lo = s_min + lo
    n_x = int(math.ceil((s.max() - s_min) / step - 1e-9)) + resolution
    weights, s_lab, n_lab, x_lab = [], [], [], []
    for k in order:
        weights.append(ch.priors[k] * pn)
        s_lab.append(np.full(resolution, k, dtype=np.int64))
        n_lab.append(np.arange(resolution, dtype=np.int64))
        xi = np.floor((s[k] - s_min) / step + np.arange(resolution) + 0.5).astype(np.int64)
        x_lab.append(np.minimum(xi, n_x - 1))
    x_mid = x_lo + step * (np.arange(n_x) + 0.5)
    return (
        np.concatenate(weights),
        np.concatenate(s_lab),
        np.concatenate(n_lab),
        np.concatenate(x_lab),
        x_mid,
        step,
    )


def _grid_value(ch, tag, resolution, relevance, quantizer) -> float:
    w, s_lab, n_lab, x_lab, x_mid, step = grid_atoms(ch, resolution)
    y_of_x = _map_labels(tag, x_mid, step, quantizer)
    y_lab = y_of_x[x_lab]
    if relevance == "S":
        return cmi_from_atoms(w, x_lab, s_lab, y_lab)
    if relevance == "N":
        return cmi_from_atoms(w, x_lab, n_lab, y_lab)
    if relevance == "X-given-S":
        return entropy_from_atoms(w, x_lab, y_lab, s_lab) - entropy_from_atoms(w, y_lab, s_lab)
    if relevance == "X-given-N":
        return entropy_from_atoms(w, x_lab, y_lab, n_lab) - entropy_from_atoms(w, y_lab, n_lab)
    return entropy_from_atoms(w, x_lab, y_lab) - entropy_from_atoms(w, y_lab)


def grid_loss_report(
    ch: AdditiveChannel,
    map_tag: str,
    resolution: int,
    relevance: str = "S",
    quantizer: Quantizer | None = None,
) -> GridEstimate:
    """Grid estimate of a loss of ``Y = map(X)``.

    ``relevance`` selects the loss: ``"S"`` gives ``I(X;S|Y)``, ``"N"``
    gives ``I(X;N|Y)``, ``"X-given-S"`` gives ``H(X|Y,S)``,
    ``"X-given-N"`` gives ``H(X|Y,N)``, and ``"total"`` gives ``H(X|Y)``.
    The map is applied to the X-cell midpoints.
    """
    if map_tag not in MAP_TAGS:
        raise ValidationError(f"unsupported map {map_tag!r}; use one of {MAP_TAGS}")
    if relevance not in RELEVANCE:
        raise ValidationError(f"unsupported relevance {relevance!r}; use one of {RELEVANCE}")
    if isinstance(resolution, bool) or int(resolution) != resolution or resolution < 16:
        raise ValidationError(f"resolution must be an integer >= 16, got {resolution!r}")
    if map_tag == "quantizer" and quantizer is None:
        raise ValidationError("map 'quantizer' needs a Quantizer")
    resolution = int(resolution)
    coarse = _grid_value(ch, map_tag, resolution, relevance, quantizer)
    fine = _grid_value(ch, map_tag, 2 * resolution, relevance, quantizer)
    return GridEstimate(coarse, fine, resolution, abs(fine - coarse) < CONVERGENCE_TOL)


def discretize(ch: AdditiveChannel, resolution: int):
    """Gridded joint of ``(S, X)`` plus the X-cell midpoints.

    S keeps its natural order of signal values (ascending).
    """
    w, s_lab, _, x_lab, x_mid, _ = grid_atoms(ch, resolution)
    mass = np.zeros((len(ch.signal_values), x_mid.size))
    np.add.at(mass, (s_lab, x_lab), w)
    order = np.argsort(ch.signal_values)
    return JointDistribution.from_weights(("S", "X"), mass[order]), x_mid


def pointwise_map(tag: str, x_mid: np.ndarray, quantizer: Quantizer | None = None) -> DeterministicMap:
    """The map ``tag`` restricted to a grid of X-cell midpoints."""
    if tag not in MAP_TAGS:
        raise ValidationError(f"unsupported map {tag!r}; use one of {MAP_TAGS}")
    step = float(x_mid[1] - x_mid[0]) if x_mid.size > 1 else 1.0
    labels = _map_labels(tag, np.asarray(x_mid), step, quantizer)
    _, dense = np.unique(labels, return_inverse=True)
    return DeterministicMap(dense.ravel())
