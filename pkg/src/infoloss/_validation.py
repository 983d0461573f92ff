"""Small input-validation helpers shared by the modules."""

from __future__ import annotations

import numpy as np

from .exceptions import ValidationError


def check_probability(p: float, name: str = "p") -> float:
    p = float(p)
    if not (0.0 <= p <= 1.0):
        raise ValidationError(f"{name} must lie in [0, 1], got {p!r}")
    return p


def check_prob_vector(p, name: str = "probabilities", atol: float = 1e-12) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    if p.ndim != 1 or p.size == 0:
        raise ValidationError(f"{name} must be a non-empty 1-D array")
    if np.any(p < 0) or not np.all(np.isfinite(p)):
        raise ValidationError(f"{name} must be finite and non-negative")
    if abs(p.sum() - 1.0) > atol:
        raise ValidationError(f"{name} must sum to 1 (got {p.sum()!r})")
    return p


def check_square(a, name: str = "matrix") -> np.ndarray:
    a = np.asarray(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] == 0:
        raise ValidationError(f"{name} must be a non-empty square matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValidationError(f"{name} contains non-finite entries")
    return a


def check_symmetric(a, name: str = "matrix", tol: float = 1e-12) -> np.ndarray:
    """Return ``a`` as a float array after checking symmetry.

    The tolerance is relative to the largest absolute entry so that
    covariances in arbitrary units are handled alike.
    """
    a = check_square(a, name)
    scale = max(1.0, float(np.max(np.abs(a))))
    if np.max(np.abs(a - a.T)) > tol * scale:
        raise ValidationError(f"{name} is not symmetric")
    return 0.5 * (a + a.T)


def check_positive_int(n, name: str) -> int:
    if isinstance(n, bool) or int(n) != n or int(n) < 1:
        raise ValidationError(f"{name} must be a positive integer, got {n!r}")
    return int(n)
