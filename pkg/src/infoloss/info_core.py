"""Exact information measures on finite discrete distributions.

Everything here works in bits.  A deterministic system ``Y = g(X)`` is
described by a :class:`DeterministicMap`; its losses relative to a variable
``S`` are collected in a :class:`LossReport`:

* total loss       ``H(X|Y)``
* relevant loss    ``I(X;S|Y)``
* irrelevant loss  ``H(X|Y,S)``

The last two add up to the first.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from importlib import resources
from typing import Sequence

import numpy as np

from ._validation import check_probability
from .exceptions import NumericalError, ValidationError

LN2 = math.log(2.0)

#: tolerance on the total mass of a distribution
MASS_ATOL = 1e-12
#: tolerance for identities among exactly computed quantities
IDENTITY_ATOL = 1e-9


def bits_to_nats(x):
    return np.asarray(x) * LN2 if np.ndim(x) else float(x) * LN2


def nats_to_bits(x):
    return np.asarray(x) / LN2 if np.ndim(x) else float(x) / LN2


def _plogp_sum(p: np.ndarray) -> float:
    """Return ``-sum p log2 p`` over the non-zero entries of ``p``."""
    p = np.asarray(p, dtype=float).ravel()
    p = p[p > 0]
    return float(-np.sum(p * np.log2(p)))


# ---------------------------------------------------------------------------
# Domain types
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class JointDistribution:
    """Probability tensor over named discrete variables.

    Axis ``i`` of ``mass`` holds the outcomes of ``variable_names[i]``.
    The stored array is a read-only copy.
    """

    variable_names: tuple
    mass: np.ndarray

    def __post_init__(self):
        names = tuple(str(n) for n in self.variable_names)
        mass = np.array(self.mass, dtype=float, copy=True)
        if mass.ndim != len(names):
            raise ValidationError(
                f"mass has {mass.ndim} axes but {len(names)} variable names were given"
            )
        if len(set(names)) != len(names):
            raise ValidationError(f"variable names must be distinct: {names}")
        if mass.ndim == 0 or any(s < 1 for s in mass.shape):
            raise ValidationError("every alphabet must have at least one symbol")
        if not np.all(np.isfinite(mass)) or np.any(mass < 0):
            raise ValidationError("mass entries must be finite and non-negative")
        if abs(mass.sum() - 1.0) > MASS_ATOL:
            raise ValidationError(f"mass must sum to 1 within {MASS_ATOL}, got {mass.sum()!r}")
        mass.setflags(write=False)
        object.__setattr__(self, "variable_names", names)
        object.__setattr__(self, "mass", mass)

    @classmethod
    def from_weights(cls, variable_names: Sequence[str], weights) -> "JointDistribution":
        """Build a distribution from unnormalised non-negative weights."""
        w = np.asarray(weights, dtype=float)
        total = w.sum()
        if not np.isfinite(total) or total <= 0:
            raise ValidationError("weights must have a positive finite sum")
        return cls(tuple(variable_names), w / total)

    @property
    def alphabet_sizes(self) -> tuple:
        return self.mass.shape

    @property
    def n_variables(self) -> int:
        return self.mass.ndim

    def axis(self, variable) -> int:
        """Resolve a variable given by name or by position."""
        if isinstance(variable, (int, np.integer)) and not isinstance(variable, bool):
            idx = int(variable)
            if not 0 <= idx < self.n_variables:
                raise ValidationError(f"variable index {idx} out of range")
            return idx
        try:
            return self.variable_names.index(str(variable))
        except ValueError:
            raise ValidationError(
                f"unknown variable {variable!r}; have {self.variable_names}"
            ) from None

    def marginal(self, *variables) -> "JointDistribution":
        """Marginal over the given variables, in the order given."""
        axes = [self.axis(v) for v in variables]
        if len(set(axes)) != len(axes):
            raise ValidationError("repeated variable in marginal()")
        drop = tuple(i for i in range(self.n_variables) if i not in axes)
        m = self.mass.sum(axis=drop) if drop else self.mass
        kept = [i for i in range(self.n_variables) if i in axes]
        m = np.transpose(m, [kept.index(a) for a in axes])
        return JointDistribution(tuple(self.variable_names[a] for a in axes), m)

    def joint_entropy(self, *variables) -> float:
        """``H`` of the listed variables (all variables if none given), in bits."""
        if not variables:
            return _plogp_sum(self.mass)
        axes = {self.axis(v) for v in variables}
        drop = tuple(i for i in range(self.n_variables) if i not in axes)
        return _plogp_sum(self.mass.sum(axis=drop) if drop else self.mass)

    # -- serialization -----------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "variables": [
                {"name": n, "size": int(s)} for n, s in zip(self.variable_names, self.alphabet_sizes)
            ],
            "mass": [float(v) for v in self.mass.ravel(order="C")],
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "JointDistribution":
        import jsonschema

        try:
            jsonschema.validate(doc, _joint_schema())
        except jsonschema.ValidationError as exc:
            raise ValidationError(f"invalid joint distribution document: {exc.message}") from None
        names = [v["name"] for v in doc["variables"]]
        sizes = [v["size"] for v in doc["variables"]]
        flat = np.asarray(doc["mass"], dtype=float)
        if flat.size != int(np.prod(sizes)):
            raise ValidationError(
                f"mass has {flat.size} entries, expected {int(np.prod(sizes))} for sizes {sizes}"
            )
        return cls(tuple(names), flat.reshape(sizes))

    def to_json(self, indent: int | None = 2) -> str:
        return json.dumps(self.to_dict(), indent=indent)

    @classmethod
    def from_json(cls, text: str) -> "JointDistribution":
        return cls.from_dict(json.loads(text))

    def __repr__(self):
        return f"JointDistribution(variables={self.variable_names}, sizes={self.alphabet_sizes})"


def _joint_schema() -> dict:
    text = resources.files("infoloss").joinpath("schemas/joint_distribution.schema.json").read_text()
    return json.loads(text)


@dataclass(frozen=True, eq=False)
class DeterministicMap:
    """A total function ``{0..n-1} -> {0..m-1}`` stored as its image array."""

    image: np.ndarray
    codomain_size: int | None = None

    def __post_init__(self):
        img = np.array(self.image, copy=True)
        if img.ndim != 1 or img.size == 0:
            raise ValidationError("image must be a non-empty 1-D array")
        if not np.issubdtype(img.dtype, np.integer):
            if not np.all(np.equal(np.mod(img, 1), 0)):
                raise ValidationError("image entries must be integers")
        img = img.astype(np.int64)
        if np.any(img < 0):
            raise ValidationError("image entries must be non-negative")
        m = int(img.max()) + 1 if self.codomain_size is None else int(self.codomain_size)
        if np.any(img >= m):
            raise ValidationError(f"image entry exceeds codomain size {m}")
        img.setflags(write=False)
        object.__setattr__(self, "image", img)
        object.__setattr__(self, "codomain_size", m)

    @classmethod
    def identity(cls, n: int) -> "DeterministicMap":
        return cls(np.arange(n))

    @classmethod
    def constant(cls, n: int) -> "DeterministicMap":
        return cls(np.zeros(n, dtype=np.int64))

    @property
    def domain_size(self) -> int:
        return int(self.image.size)

    def __call__(self, x):
        return self.image[x]

    def then(self, h: "DeterministicMap") -> "DeterministicMap":
        """The composition ``h o self`` (apply ``self`` first)."""
        if h.domain_size != self.codomain_size:
            raise ValidationError(
                f"cannot compose: codomain {self.codomain_size} != domain {h.domain_size}"
            )
        return DeterministicMap(h.image[self.image], h.codomain_size)

    def is_injective(self) -> bool:
        return np.unique(self.image).size == self.image.size

    def __repr__(self):
        return f"DeterministicMap({self.image.tolist()}, codomain_size={self.codomain_size})"


@dataclass(frozen=True)
class LossReport:
    """Total, relevant and irrelevant information loss in bits."""

    total_loss: float
    relevant_loss: float
    irrelevant_loss: float

    def __post_init__(self):
        for name in ("total_loss", "relevant_loss", "irrelevant_loss"):
            if getattr(self, name) < -1e-12:
                raise ValidationError(f"{name} is negative: {getattr(self, name)!r}")
        gap = self.total_loss - self.relevant_loss - self.irrelevant_loss
        if abs(gap) > IDENTITY_ATOL:
            raise ValidationError(f"total != relevant + irrelevant (gap {gap:.3e})")


# ---------------------------------------------------------------------------
# Measures
# ---------------------------------------------------------------------------


def entropy(dist: JointDistribution) -> float:
    """Shannon entropy of a single-variable distribution, in bits."""
    if dist.n_variables != 1:
        raise ValidationError(f"entropy() needs one variable, got {dist.n_variables}")
    return _plogp_sum(dist.mass)


def binary_entropy(p: float) -> float:
    p = check_probability(p)
    return _plogp_sum(np.array([p, 1.0 - p]))


def mutual_information(joint: JointDistribution) -> float:
    """``I(A;B)`` for a two-variable distribution, in bits."""
    if joint.n_variables != 2:
        raise ValidationError(f"mutual_information() needs two variables, got {joint.n_variables}")
    p = joint.mass
    pa = p.sum(axis=1, keepdims=True)
    pb = p.sum(axis=0, keepdims=True)
    nz = p > 0
    val = float(np.sum(p[nz] * np.log2(p[nz] / (pa * pb)[nz])))
    return max(val, 0.0)


def conditional_mutual_information(joint: JointDistribution, a=0, b=1, given=2) -> float:
    """``I(A;B|C)`` in bits for a three-variable distribution.

    Evaluated as ``sum p(a,b,c) log p(a,b,c) p(c) / (p(a,c) p(b,c))``.
    """
    if joint.n_variables != 3:
        raise ValidationError(
            f"conditional_mutual_information() needs three variables, got {joint.n_variables}"
        )
    axes = [joint.axis(a), joint.axis(b), joint.axis(given)]
    if sorted(axes) != [0, 1, 2]:
        raise ValidationError("a, b and given must name three distinct variables")
    p = np.transpose(joint.mass, axes)
    pc = p.sum(axis=(0, 1), keepdims=True)
    pac = p.sum(axis=1, keepdims=True)
    pbc = p.sum(axis=0, keepdims=True)
    nz = p > 0
    ratio = (p * pc)[nz] / (pac * pbc)[nz]
    val = float(np.sum(p[nz] * np.log2(ratio)))
    return max(val, 0.0)


def push_map(joint: JointDistribution, variable, g: DeterministicMap, name: str | None = None) -> JointDistribution:
    """Replace ``variable`` by ``g(variable)``, summing mass over preimages."""
    ax = joint.axis(variable)
    if g.domain_size != joint.alphabet_sizes[ax]:
        raise ValidationError(
            f"map domain {g.domain_size} != alphabet size {joint.alphabet_sizes[ax]} "
            f"of {joint.variable_names[ax]!r}"
        )
    moved = np.moveaxis(joint.mass, ax, 0)
    out = np.zeros((g.codomain_size,) + moved.shape[1:])
    np.add.at(out, g.image, moved)
    out = np.moveaxis(out, 0, ax)
    names = list(joint.variable_names)
    if name is not None:
        names[ax] = name
    return JointDistribution(tuple(names), out)


def attach_output(joint_sx: JointDistribution, g: DeterministicMap, name: str = "Y") -> JointDistribution:
    """Extend a (S, X) distribution to (S, X, Y) with ``Y = g(X)``."""
    if joint_sx.n_variables != 2:
        raise ValidationError("expected a two-variable (S, X) distribution")
    n_x = joint_sx.alphabet_sizes[1]
    if g.domain_size != n_x:
        raise ValidationError(f"map domain {g.domain_size} != X alphabet size {n_x}")
    onehot = np.zeros((n_x, g.codomain_size))
    onehot[np.arange(n_x), g.image] = 1.0
    p = joint_sx.mass[:, :, None] * onehot[None, :, :]
    return JointDistribution(joint_sx.variable_names + (name,), p)


def loss_report(joint_sx: JointDistribution, g: DeterministicMap) -> LossReport:
    """Loss decomposition for ``Y = g(X)`` relative to ``S``.

    ``joint_sx`` is ordered (S, X).  The irrelevant part is computed both as
    ``total - relevant`` and directly as ``H(X|Y,S)``; a mismatch beyond
    ``IDENTITY_ATOL`` raises.
    """
    sxy = attach_output(joint_sx, g, name="__Y__")
    h_y = sxy.joint_entropy(2)
    h_xy = sxy.joint_entropy(1, 2)
    total = h_xy - h_y
    relevant = conditional_mutual_information(sxy, a=1, b=0, given=2)
    irrelevant_direct = sxy.joint_entropy() - sxy.joint_entropy(0, 2)
    irrelevant = total - relevant
    if abs(irrelevant - irrelevant_direct) > IDENTITY_ATOL:
        raise NumericalError(
            f"loss split inconsistent: {irrelevant!r} vs H(X|Y,S)={irrelevant_direct!r}"
        )
    return LossReport(_clip_zero(total), _clip_zero(relevant), _clip_zero(irrelevant))


def _clip_zero(v: float) -> float:
    # rounding can leave -1e-16 where the exact value is 0
    return 0.0 if -1e-12 < v < 0 else v


# ---------------------------------------------------------------------------
# Weighted-atom path for very large, sparse joints
# ---------------------------------------------------------------------------


def _group_entropy(weights: np.ndarray, *labels: np.ndarray) -> float:
    if not labels:
        return 0.0
    keys = np.stack([np.asarray(l, dtype=np.int64) for l in labels], axis=1)
    _, inv = np.unique(keys, axis=0, return_inverse=True)
    sums = np.bincount(inv.ravel(), weights=weights)
    return _plogp_sum(sums)


def cmi_from_atoms(weights, a, b, given=None) -> float:
    """``I(A;B|C)`` in bits from a list of weighted atoms.

    Each atom ``i`` carries mass ``weights[i]`` and integer labels
    ``a[i]``, ``b[i]``, ``given[i]``.  Atoms sharing labels are pooled, so
    this equals :func:`conditional_mutual_information` on the induced dense
    tensor without ever materialising it.  ``given=None`` gives ``I(A;B)``.
    """
    w = np.asarray(weights, dtype=float)
    if np.any(w < 0) or abs(w.sum() - 1.0) > 1e-9:
        raise ValidationError("atom weights must be non-negative and sum to 1")
    c = () if given is None else (given,)
    val = (
        _group_entropy(w, a, *c)
        + _group_entropy(w, b, *c)
        - _group_entropy(w, a, b, *c)
        - _group_entropy(w, *c)
    )
    return max(val, 0.0)


def entropy_from_atoms(weights, *labels) -> float:
    """Joint entropy in bits of the labelled atoms."""
    return _group_entropy(np.asarray(weights, dtype=float), *labels)
