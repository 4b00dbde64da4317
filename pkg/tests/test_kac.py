import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from qkac.asymptotics import relevant_subspace
from qkac.channel import basis_state
from qkac.constructions import (
    ClassicalChain,
    from_classical_chain,
    monitored_site_channel,
    random_pure_state,
    random_stochastic,
    random_unital_channel,
)
from qkac.kac import (
    CONFIRMED,
    HYPOTHESIS_NOT_MET,
    KacConfig,
    classical_cross_check,
    proportionality_check,
    reachability,
    verify_kac,
)
from qkac.monitor import rho_cond_sum
from tests.helpers import amplitude_damping, bit_flip, geometric_site, identity_channel, rotation_channel
from tests.oracles import taboo_return_time

E0, E1 = basis_state(2, 0), basis_state(2, 1)
W_GOLDEN = np.array([[1 / 2, 1 / 3], [1 / 2, 2 / 3]])


def test_verify_examples():
    coupling, psi = geometric_site()
    for ch, p, t in ((identity_channel(), E0, 1), (rotation_channel(1.0), E0, 2), (bit_flip(), E0, 2),
                     (monitored_site_channel(coupling, psi), psi, 2)):
        rep = verify_kac(ch, p, scenario_id="x")
        assert rep.verdict == CONFIRMED
        assert abs(rep.measured_time - t) <= 1e-8
        assert abs(rep.predicted_time - t) <= 1e-8
        assert rep.certificate.recurrent
        d = rep.as_dict()
        assert d["verdict"] == CONFIRMED and d["scenario_id"] == "x"


def test_verify_amplitude_damping():
    rep = verify_kac(amplitude_damping(), E1)
    assert rep.verdict == HYPOTHESIS_NOT_MET
    assert math.isinf(rep.measured_time) and math.isinf(rep.predicted_time)
    assert abs(rep.lam) <= 1e-12
    assert not rep.certificate.recurrent and not rep.certificate.psi_in_R


def test_verify_with_monte_carlo():
    rep = verify_kac(bit_flip(), E0, KacConfig(monte_carlo=True, samples=20000, seed=4))
    assert abs(rep.monte_carlo.mean - 2) <= 4 * rep.monte_carlo.std_error
    assert rep.as_dict()["monte_carlo_time"]["n_samples"] == 20000


def test_proportionality_examples():
    chi = np.eye(2) / 2
    assert proportionality_check(np.eye(2), chi, E0) == pytest.approx(0)
    assert proportionality_check(np.diag([1, 2]), chi, E0) == pytest.approx(1)
    with pytest.raises(ValueError):
        proportionality_check(np.eye(2), np.diag([0, 1]), E0)


def test_reachability():
    w = np.array([[1, 0.5, 0], [0, 0.5, 0], [0, 0, 1]])
    r = reachability(w)
    assert r[1, 0] and not r[0, 1] and not r[0, 2] and r[2, 2]


def test_classical_examples():
    res = classical_cross_check(ClassicalChain(W_GOLDEN), 0)
    assert np.allclose(res.pi, [0.4, 0.6])
    assert res.classical_kac_time == pytest.approx(2.5)
    cycle = np.roll(np.eye(3), 1, axis=0)
    assert classical_cross_check(ClassicalChain(cycle), 1).classical_kac_time == pytest.approx(3)
    # state 1 leaks into the absorbing state 0
    w = np.array([[1, 0.5], [0, 0.5]])
    assert math.isinf(classical_cross_check(ClassicalChain(w), 1).classical_kac_time)
    assert classical_cross_check(ClassicalChain(w), 0).classical_kac_time == pytest.approx(1)


def test_classical_golden_quantum():
    rep = verify_kac(from_classical_chain(ClassicalChain(W_GOLDEN)), E0)
    assert rep.verdict == CONFIRMED
    assert abs(rep.measured_time - 2.5) <= 1e-10
    assert abs(rep.lam - 0.4) <= 1e-10
    assert abs(taboo_return_time(W_GOLDEN, 0) - 2.5) <= 1e-12


@given(st.integers(1, 6), st.integers(0, 2**31 - 1))
def test_classical_matches_taboo_oracle(n, seed):
    rng = np.random.default_rng(seed)
    w = random_stochastic(n, rng, sparsity=0.5)
    start = int(rng.integers(n))
    res = classical_cross_check(ClassicalChain(w), start)
    if math.isinf(res.classical_kac_time):
        # transient start: some walks never come back, so the taboo survival levels off above zero
        v = w[:, start].copy()
        v[start] = 0.0
        for _ in range(5000):
            v = w @ v
            v[start] = 0.0
        assert v.sum() > 1e-9
    else:
        ref = taboo_return_time(w, start, tol=1e-14)
        assert abs(res.classical_kac_time - ref) <= 1e-6 * ref


@given(st.integers(1, 6), st.integers(0, 2**31 - 1))
def test_classical_matches_quantum(n, seed):
    rng = np.random.default_rng(seed)
    w = random_stochastic(n, rng)  # dense, hence irreducible
    start = int(rng.integers(n))
    res = classical_cross_check(ClassicalChain(w), start)
    ch = from_classical_chain(ClassicalChain(w))
    t = rho_cond_sum(ch, basis_state(n, start), "linear_solve").expected_time
    assert abs(t - res.classical_kac_time) <= 1e-6


@given(st.integers(1, 5), st.integers(0, 2**31 - 1))
def test_unital_integer_times(d, seed):
    rng = np.random.default_rng(seed)
    ch = random_unital_channel(d, int(rng.integers(1, min(3, d * d) + 1)), seed)
    psi = random_pure_state(d, rng)
    rep = verify_kac(ch, psi)
    # the return time is the dimension of the explored space even when psi is not an eigenvector of chi
    dim_rel = relevant_subspace(ch, psi).shape[1]
    assert abs(rep.measured_time - dim_rel) <= 1e-6
    if rep.hypothesis.holds:
        assert rep.verdict == CONFIRMED
        assert abs(rep.predicted_time * rep.lam - 1) <= 1e-12
