"""Invariants of relevant information loss on random discrete instances.

Instances are drawn from a Dirichlet(1, ..., 1) over the joint tensor with
alphabet sizes in {2, ..., 5}; hypothesis only chooses the seed.
"""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import brute_cmi, random_joint, random_map
from infoloss.info_core import (
    DeterministicMap,
    JointDistribution,
    attach_output,
    conditional_mutual_information,
    loss_report,
    mutual_information,
    push_map,
)

TOL = 1e-9
seeds = st.integers(0, 2**32 - 1)


def instance(seed):
    rng = np.random.default_rng(seed)
    ns, nx = rng.integers(2, 6, size=2)
    return rng, random_joint(rng, (ns, nx)), random_map(rng, nx)


def markov_chain(rng, nv, nw, nx):
    pv = rng.dirichlet(np.ones(nv))
    pw_v = rng.dirichlet(np.ones(nw), size=nv)
    px_w = rng.dirichlet(np.ones(nx), size=nw)
    p = pv[:, None, None] * pw_v[:, :, None] * px_w[None, :, :]
    return JointDistribution.from_weights(("V", "W", "X"), p)


@settings(max_examples=200, deadline=None)
@given(seeds)
def test_relevant_loss_nonnegative(seed):
    _, joint, g = instance(seed)
    assert loss_report(joint, g).relevant_loss >= -1e-12


@settings(max_examples=200, deadline=None)
@given(seeds)
def test_bounded_by_input_information(seed):
    _, joint, g = instance(seed)
    rep = loss_report(joint, g)
    assert rep.relevant_loss <= mutual_information(joint) + TOL
    assert mutual_information(joint) <= joint.joint_entropy("S") + TOL


@settings(max_examples=200, deadline=None)
@given(seeds)
def test_relevant_not_above_total(seed):
    _, joint, g = instance(seed)
    rep = loss_report(joint, g)
    assert rep.relevant_loss <= rep.total_loss + TOL


@settings(max_examples=200, deadline=None)
@given(seeds)
def test_output_as_relevant_variable_loses_nothing(seed):
    rng, joint, g = instance(seed)
    px = joint.marginal("X").mass
    p = np.zeros((g.codomain_size, px.size))
    p[g.image, np.arange(px.size)] = px
    rep = loss_report(JointDistribution(("Y", "X"), p), g)
    assert rep.relevant_loss == pytest.approx(0.0, abs=TOL)


@settings(max_examples=200, deadline=None)
@given(seeds)
def test_relevant_variable_function_of_input(seed):
    rng = np.random.default_rng(seed)
    nx = int(rng.integers(2, 6))
    f = random_map(rng, nx)
    px = rng.dirichlet(np.ones(nx))
    p = np.zeros((f.codomain_size, nx))
    p[f.image, np.arange(nx)] = px
    joint = JointDistribution(("S", "X"), p)
    g = random_map(rng, nx)
    rep = loss_report(joint, g)
    sy = push_map(joint, "X", g, name="Y")
    h_s_given_y = sy.joint_entropy() - sy.joint_entropy("Y")
    assert rep.relevant_loss == pytest.approx(h_s_given_y, abs=TOL)


@settings(max_examples=200, deadline=None)
@given(seeds)
def test_input_function_of_relevant_variable_gives_equality(seed):
    rng = np.random.default_rng(seed)
    ns = int(rng.integers(2, 6))
    f = random_map(rng, ns)
    ps = rng.dirichlet(np.ones(ns))
    p = np.zeros((ns, f.codomain_size))
    p[np.arange(ns), f.image] = ps
    joint = JointDistribution(("S", "X"), p)
    rep = loss_report(joint, random_map(rng, f.codomain_size))
    assert rep.relevant_loss == pytest.approx(rep.total_loss, abs=TOL)


@settings(max_examples=200, deadline=None)
@given(seeds)
def test_markov_chain_dpi(seed):
    rng = np.random.default_rng(seed)
    nv, nw, nx = rng.integers(2, 6, size=3)
    chain = markov_chain(rng, nv, nw, nx)
    g = random_map(rng, nx)
    loss_w = loss_report(chain.marginal("W", "X"), g).relevant_loss
    loss_v = loss_report(chain.marginal("V", "X"), g).relevant_loss
    assert loss_w >= loss_v - TOL


@settings(max_examples=200, deadline=None)
@given(seeds)
def test_function_of_relevant_variable_loses_less(seed):
    rng, joint, g = instance(seed)
    f = random_map(rng, joint.alphabet_sizes[0])
    coarse = push_map(joint, "S", f)
    assert loss_report(joint, g).relevant_loss >= loss_report(coarse, g).relevant_loss - TOL


@settings(max_examples=200, deadline=None)
@given(seeds)
def test_split_identity_against_direct_conditional_entropy(seed):
    _, joint, g = instance(seed)
    rep = loss_report(joint, g)
    sxy = attach_output(joint, g)
    h_x_given_ys = sxy.joint_entropy() - sxy.joint_entropy("S", "Y")
    assert rep.irrelevant_loss == pytest.approx(h_x_given_ys, abs=TOL)
    assert rep.total_loss == pytest.approx(rep.relevant_loss + h_x_given_ys, abs=TOL)


@settings(max_examples=200, deadline=None)
@given(seeds)
def test_cascade_additivity(seed):
    rng, joint, g = instance(seed)
    h = random_map(rng, g.codomain_size)
    whole = loss_report(joint, g.then(h)).relevant_loss
    first = loss_report(joint, g).relevant_loss
    second = loss_report(push_map(joint, "X", g, name="Y"), h).relevant_loss
    assert whole == pytest.approx(first + second, abs=TOL)


@settings(max_examples=200, deadline=None)
@given(seeds)
def test_chain_rule_over_two_relevant_variables(seed):
    rng = np.random.default_rng(seed)
    n1, n2, nx = rng.integers(2, 5, size=3)
    p = random_joint(rng, (n1, n2, nx), names=("S1", "S2", "X"))
    g = random_map(rng, nx)
    both = JointDistribution(("S", "X"), p.mass.reshape(n1 * n2, nx))
    total = loss_report(both, g).relevant_loss
    first = loss_report(p.marginal("S1", "X"), g).relevant_loss
    # L_{S2|S1} = I(X; S2 | Y, S1) = I(X; S1 S2 | Y) - I(X; S1 | Y)
    assert total >= first - TOL
    onehot = np.zeros((nx, g.codomain_size))
    onehot[np.arange(nx), g.image] = 1
    full = p.mass[..., None] * onehot  # S1, S2, X, Y
    cond = 0.0
    for s1 in range(n1):
        w = full[s1].sum()
        if w > 0:
            sl = JointDistribution(("S2", "X", "Y"), full[s1] / w)
            cond += w * conditional_mutual_information(sl, "X", "S2", "Y")
    assert total == pytest.approx(first + cond, abs=TOL)


@settings(max_examples=100, deadline=None)
@given(seeds)
def test_cmi_matches_brute_force(seed):
    rng = np.random.default_rng(seed)
    joint = random_joint(rng, tuple(rng.integers(1, 6, size=3)), names=("A", "B", "C"))
    assert conditional_mutual_information(joint) == pytest.approx(
        brute_cmi(joint.mass.tolist()), abs=1e-12
    )
