"""Randomized invariant sweep used by the ``selftest`` CLI mode.

Each check returns the largest violation seen over its instances; a check
passes when that stays within the stated tolerance.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .info_core import (
    DeterministicMap,
    JointDistribution,
    attach_output,
    loss_report,
    mutual_information,
    push_map,
)
from .pca_gauss import LinearGaussianModel, gaussian_relevant_loss, interlacing_holds, weyl_holds
from .ib_cluster import agglomerative_enhance

TOL = 1e-9


@dataclass(frozen=True)
class CheckResult:
    name: str
    instances: int
    max_violation: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return self.max_violation <= self.tolerance


def _joint(rng, sizes):
    return JointDistribution(("S", "X"), rng.dirichlet(np.ones(int(np.prod(sizes)))).reshape(sizes))


def _map(rng, n):
    _, img = np.unique(rng.integers(0, n, size=n), return_inverse=True)
    return DeterministicMap(img.ravel())


def _discrete_checks(rng, n):
    worst = {k: 0.0 for k in ("nonnegative", "bounded", "split", "cascade", "markov")}
    for _ in range(n):
        ns, nx = rng.integers(2, 6, size=2)
        joint = _joint(rng, (ns, nx))
        g = _map(rng, nx)
        rep = loss_report(joint, g)
        worst["nonnegative"] = max(worst["nonnegative"], -rep.relevant_loss)
        worst["bounded"] = max(worst["bounded"], rep.relevant_loss - mutual_information(joint),
                               rep.relevant_loss - rep.total_loss)
        sxy = attach_output(joint, g)
        direct = sxy.joint_entropy() - sxy.joint_entropy("S", "Y")
        worst["split"] = max(worst["split"], abs(rep.irrelevant_loss - direct))
        h = _map(rng, g.codomain_size)
        whole = loss_report(joint, g.then(h)).relevant_loss
        parts = rep.relevant_loss + loss_report(push_map(joint, "X", g, name="Y"), h).relevant_loss
        worst["cascade"] = max(worst["cascade"], abs(whole - parts))
        f = _map(rng, int(ns))
        worst["markov"] = max(worst["markov"], loss_report(push_map(joint, "S", f), g).relevant_loss - rep.relevant_loss)
    return [CheckResult(f"discrete_{k}", n, v, TOL) for k, v in worst.items()]


def _gaussian_checks(rng, n):
    cor3 = interlace = 0.0
    for _ in range(n):
        dim = int(rng.integers(2, 9))
        m = int(rng.integers(1, dim))
        b = rng.normal(size=(dim, int(rng.integers(0, m + 1))))
        model = LinearGaussianModel(b @ b.T, float(rng.uniform(0.2, 3.0)) * np.eye(dim))
        cor3 = max(cor3, abs(gaussian_relevant_loss(model, m)))
        a = rng.normal(size=(dim, dim))
        full = LinearGaussianModel(b @ b.T + np.eye(dim), a @ a.T + 0.1 * np.eye(dim))
        ok = interlacing_holds(full, m) and weyl_holds(full)
        interlace = max(interlace, 0.0 if ok else 1.0)
    return [CheckResult("gaussian_cor3_zero_loss", n, cor3, 1e-8),
            CheckResult("gaussian_interlacing_weyl", n, interlace, 0.0)]


def _cluster_checks(rng, n):
    worst = 0.0
    for _ in range(n):
        joint = _joint(rng, tuple(rng.integers(2, 7, size=2)))
        budget = float(rng.uniform(0, 1))
        state, trace = agglomerative_enhance(joint, budget)
        worst = max(worst, loss_report(joint, state.labels).relevant_loss - budget)
        cums = [s.cumulative for s in trace]
        worst = max(worst, max((a - b for a, b in zip(cums, cums[1:])), default=0.0))
    return [CheckResult("cluster_budget_and_monotone_trace", n, worst, TOL)]


def run_selftest(seed: int = 0, instances: int = 200) -> list:
    rng = np.random.default_rng(seed)
    return _discrete_checks(rng, instances) + _gaussian_checks(rng, instances // 2) + _cluster_checks(rng, instances // 4)
