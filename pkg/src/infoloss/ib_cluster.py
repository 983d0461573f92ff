"""Discrete signal enhancement by hard clustering of the input alphabet.

A clustering is a deterministic map ``Y = g(X)``.  Enhancement trades the
relevant loss ``L_S = I(X;S|Y)`` against the irrelevant loss
``L_{X|S} = H(X|Y,S)``; both in bits.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import xlogy
from sklearn.base import BaseEstimator, ClusterMixin
from sklearn.utils.validation import check_array

from .exceptions import ValidationError
from .info_core import LN2, DeterministicMap, JointDistribution, loss_report

TIE_TOL = 1e-12


@dataclass(frozen=True)
class ClusteringState:
    """Hard assignment of each input symbol to a cluster id ``0..K-1``."""

    labels: DeterministicMap

    def __post_init__(self):
        if not isinstance(self.labels, DeterministicMap):
            object.__setattr__(self, "labels", DeterministicMap(self.labels))
        used = np.unique(self.labels.image)
        if used.size != self.labels.codomain_size:
            raise ValidationError("cluster labels must use every id in 0..num_clusters-1")

    @property
    def input_size(self) -> int:
        return self.labels.domain_size

    @property
    def num_clusters(self) -> int:
        return self.labels.codomain_size

    @classmethod
    def identity(cls, n: int) -> "ClusteringState":
        return cls(DeterministicMap.identity(n))

    @classmethod
    def single(cls, n: int) -> "ClusteringState":
        return cls(DeterministicMap.constant(n))


@dataclass(frozen=True)
class ObjectiveParams:
    beta: float = 1.0
    gamma: float = 0.0
    alpha: float = 1.0
    budget: float = math.inf

    def __post_init__(self):
        for name in ("beta", "gamma", "alpha"):
            v = getattr(self, name)
            if not math.isfinite(v):
                raise ValidationError(f"{name} must be finite")
        if self.beta < 0 or self.gamma < 0:
            raise ValidationError("beta and gamma must be non-negative")
        if self.alpha <= 0:
            raise ValidationError("alpha must be positive")
        if math.isnan(self.budget) or self.budget < 0:
            raise ValidationError("budget must be non-negative")


@dataclass(frozen=True)
class EnhancementObjectives:
    ib: float
    ibsi: float
    delta_p: float
    relevant_loss: float
    irrelevant_loss: float


def enhancement_objectives(
    joint_sx: JointDistribution, clustering: ClusteringState, params: ObjectiveParams
) -> EnhancementObjectives:
    """Scalarized enhancement objectives of a clustering.

    ``ib`` and ``ibsi`` are to be minimized, ``delta_p`` maximized.
    """
    if joint_sx.n_variables != 2:
        raise ValidationError("joint_sx must be a distribution over (S, X)")
    if clustering.input_size != joint_sx.alphabet_sizes[1]:
        raise ValidationError(
            f"clustering covers {clustering.input_size} symbols, X has {joint_sx.alphabet_sizes[1]}"
        )
    rep = loss_report(joint_sx, clustering.labels)
    ls, lxs = rep.relevant_loss, rep.irrelevant_loss
    b = params.beta
    return EnhancementObjectives(
        ib=(b - 1) * ls - lxs,
        ibsi=(b - 1) * ls - (b * params.gamma + 1) * lxs,
        delta_p=lxs - params.alpha * ls,
        relevant_loss=ls,
        irrelevant_loss=lxs,
    )


def merge_cost(pi: np.ndarray, pj: np.ndarray) -> float:
    """Increase of ``H(S|Y)`` in bits when clusters with joint columns ``pi``, ``pj`` merge.

    Equals ``(w_i + w_j)`` times the weighted Jensen-Shannon divergence of the
    two conditionals ``p(s|i)`` and ``p(s|j)``.
    """
    wi, wj = pi.sum(), pj.sum()
    pm = pi + pj
    nats = (
        np.sum(xlogy(pi, pi)) - xlogy(wi, wi)
        + np.sum(xlogy(pj, pj)) - xlogy(wj, wj)
        - np.sum(xlogy(pm, pm)) + xlogy(wi + wj, wi + wj)
    )
    return max(float(nats) / LN2, 0.0)


@dataclass(frozen=True)
class MergeStep:
    pair: tuple
    increment: float
    cumulative: float


def _best_pair(cols: list):
    best, best_cost = None, math.inf
    for i in range(len(cols) - 1):
        for j in range(i + 1, len(cols)):
            c = merge_cost(cols[i], cols[j])
            if c < best_cost - TIE_TOL:
                best, best_cost = (i, j), c
    return best, best_cost


def agglomerative_enhance(joint_sx: JointDistribution, budget: float):
    """Greedy pairwise merging under a relevant-loss budget.

    Starts from ``Y = X`` and repeatedly merges the pair of clusters with the
    smallest relevant-loss increment (ties go to the lexicographically
    smallest pair of cluster ids), provided the cumulative loss after the
    merge stays within ``budget``.  Cluster ids are ordered by their
    smallest member.  Returns the final :class:`ClusteringState` and the
    list of committed :class:`MergeStep`.
    """
    if joint_sx.n_variables != 2:
        raise ValidationError("joint_sx must be a distribution over (S, X)")
    budget = float(budget)
    if math.isnan(budget) or budget < 0:
        raise ValidationError("budget must be non-negative")
    p = joint_sx.mass
    cols = [p[:, x].copy() for x in range(p.shape[1])]
    members = [[x] for x in range(p.shape[1])]
    cumulative = 0.0
    trace = []
    while len(cols) > 1:
        (i, j), cost = _best_pair(cols)
        if cumulative + cost > budget + TIE_TOL:
            break
        cumulative += cost
        cols[i] = cols[i] + cols.pop(j)
        members[i] = members[i] + members.pop(j)
        trace.append(MergeStep((i, j), cost, cumulative))
    labels = np.empty(p.shape[1], dtype=np.int64)
    for cid, group in enumerate(members):
        labels[group] = cid
    return ClusteringState(DeterministicMap(labels, len(members))), trace


class AgglomerativeEnhancer(ClusterMixin, BaseEstimator):
    """Clusterer over input symbols driven by relevant information loss.

    ``fit`` takes an array of shape ``(n_symbols, n_relevant)`` whose row
    ``x`` holds the joint masses ``p(x, s)``; the rows are the samples
    being clustered.  Unnormalized non-negative weights are accepted.

    Attributes set by ``fit``: ``labels_``, ``n_clusters_``, ``trace_``,
    ``relevant_loss_``, ``irrelevant_loss_``.
    """

    def __init__(self, budget=math.inf):
        self.budget = budget

    def fit(self, X, y=None):
        X = check_array(X, ensure_min_samples=1)
        if np.any(X < 0):
            raise ValidationError("joint masses must be non-negative")
        joint = JointDistribution.from_weights(("S", "X"), X.T)
        state, trace = agglomerative_enhance(joint, self.budget)
        rep = loss_report(joint, state.labels)
        self.n_features_in_ = X.shape[1]
        self.labels_ = state.labels.image.copy()
        self.n_clusters_ = state.num_clusters
        self.trace_ = trace
        self.relevant_loss_ = rep.relevant_loss
        self.irrelevant_loss_ = rep.irrelevant_loss
        return self


__all__ = [
    "ClusteringState",
    "ObjectiveParams",
    "EnhancementObjectives",
    "MergeStep",
    "enhancement_objectives",
    "merge_cost",
    "agglomerative_enhance",
    "AgglomerativeEnhancer",
]
