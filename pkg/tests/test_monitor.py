import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from qkac.asymptotics import steady_state
from qkac.channel import QuantumChannel, basis_state, projector
from qkac.constructions import monitored_site_channel, random_channel, random_pure_state, random_site_coupling
from qkac.kac import conditional_decay, one_step_identity_residual
from qkac.monitor import (
    chi_M,
    project_out,
    return_time_cross_check,
    rho_cond_sum,
    sample_return_time,
    survival_curve,
)
from qkac.numerics import NonConvergenceError
from tests.helpers import amplitude_damping, bit_flip, geometric_site, identity_channel, rotation_channel
from tests.oracles import conditional_orbit_traces

E0, E1 = basis_state(2, 0), basis_state(2, 1)


def test_project_out_examples():
    rho = np.array([[0.5, 0.5], [0.5, 0.5]])
    assert np.allclose(project_out(rho, E0), np.diag([0, 0.5]))
    assert np.allclose(project_out(projector(E0), E0), 0)
    plus = np.array([1, 1]) / np.sqrt(2)
    assert np.allclose(project_out(rho, plus), 0)
    with pytest.raises(ValueError):
        project_out(np.eye(3), E0)


def test_survival_identity():
    s = survival_curve(identity_channel(), E0, 5)
    assert np.array_equal(s.survival, [1, 0, 0, 0, 0, 0])
    assert s.return_distribution[0] == 1
    assert s.partial_expected_time == 1


def test_survival_rotation():
    theta = 1.0
    s = survival_curve(rotation_channel(theta), E0, 10)
    # the monitored orbit is |1><1| scaled by sin^2 then cos^2 each further step
    expected = [1.0] + [np.sin(theta) ** 2 * np.cos(theta) ** (2 * (t - 1)) for t in range(1, 11)]
    assert np.allclose(s.survival, expected, atol=1e-14)


def test_survival_geometric():
    coupling, psi = geometric_site()
    s = survival_curve(monitored_site_channel(coupling, psi), psi, 30)
    assert np.max(np.abs(s.survival - 2.0 ** -np.arange(31))) <= 1e-12
    assert np.isclose(s.decay_rate, 0.5)
    assert abs(s.partial_expected_time + 31 * 2.0**-30 - 2) <= 1e-9


def test_survival_csv():
    text = survival_curve(bit_flip(), E0, 3).to_csv()
    lines = text.splitlines()
    assert lines[0] == "t,survival,first_return_prob"
    assert lines[1] == "0,1.0,0.0"
    assert len(lines) == 5
    t, s, q = lines[2].split(",")
    assert t == "1" and np.isclose(float(s), 0.3) and np.isclose(float(q), 0.7)


@given(st.integers(2, 5), st.integers(0, 2**31 - 1))
def test_survival_matches_oracle_and_is_monotone(d, seed):
    ch = random_channel(d, 1 + seed % (d * d), seed)
    psi = random_pure_state(d, np.random.default_rng(seed))
    s = survival_curve(ch, psi, 40)
    assert np.allclose(s.survival, conditional_orbit_traces(ch.kraus, psi, 40), atol=1e-12)
    assert np.all(np.diff(s.survival) <= 1e-12)
    assert np.all(s.return_distribution >= -1e-12)
    assert s.survival[0] == pytest.approx(1.0)


def test_return_time_examples():
    coupling, psi = geometric_site()
    cases = [
        (identity_channel(), E0, 1.0),
        (rotation_channel(1.0), E0, 2.0),
        (bit_flip(), E0, 2.0),
        (monitored_site_channel(coupling, psi), psi, 2.0),
    ]
    for ch, p, expected in cases:
        for method in ("series", "linear_solve"):
            r = rho_cond_sum(ch, p, method)
            assert abs(r.expected_time - expected) <= 1e-8, (method, expected)
            assert np.isclose(np.trace(r.rho_cond).real, r.expected_time)


def test_return_time_divergent():
    for method in ("series", "linear_solve"):
        r = rho_cond_sum(amplitude_damping(), E1, method)
        assert r.diverged and math.isinf(r.expected_time) and not r.finite


def test_return_time_unknown_method():
    with pytest.raises(ValueError):
        rho_cond_sum(identity_channel(), E0, "magic")


def test_return_time_is_sum_of_survival():
    ch = random_channel(3, 2, 8)
    psi = basis_state(3, 0)
    s = conditional_orbit_traces(ch.kraus, psi, 4000)
    r = rho_cond_sum(ch, psi, "series")
    assert abs(r.expected_time - s.sum()) <= 1e-8


@given(st.integers(2, 5), st.integers(0, 2**31 - 1))
def test_series_and_solve_agree(d, seed):
    coupling, psi = random_site_coupling(d, seed)
    cc = return_time_cross_check(monitored_site_channel(coupling, psi), psi)
    assert cc.time_difference <= 1e-6
    assert cc.rho_difference <= 1e-6
    assert cc.expected_time >= 1 - 1e-12


@given(st.integers(2, 5), st.integers(0, 2**31 - 1))
def test_one_step_identity_and_decay(d, seed):
    coupling, psi = random_site_coupling(d, seed)
    ch = monitored_site_channel(coupling, psi)
    chi = steady_state(ch, psi).chi
    assert one_step_identity_residual(ch, psi, chi) <= 1e-7
    assert conditional_decay(ch, psi, chi) <= 1e-7


def test_chi_M_examples():
    assert np.allclose(chi_M(identity_channel(), E0), 0, atol=1e-12)
    # amplitude damping: the orbit sits on |0><0| forever after one step
    assert np.allclose(chi_M(amplitude_damping(), E1), np.diag([1, 0]), atol=1e-9)
    with pytest.raises(NonConvergenceError):
        chi_M(amplitude_damping(), E1, horizon=4)


@given(st.integers(2, 4), st.integers(0, 2**31 - 1))
def test_chi_M_has_no_psi_weight(d, seed):
    ch = random_channel(d, 1 + seed % (d * d), seed)
    psi = random_pure_state(d, np.random.default_rng(seed))
    try:
        cm = chi_M(ch, psi, tol=1e-9)
    except NonConvergenceError:
        return
    assert abs(np.vdot(psi, cm @ psi)) <= 1e-10


def test_monte_carlo_examples():
    r = sample_return_time(identity_channel(), E0, 1000, seed=1)
    assert r.mean == 1 and r.std_error == 0 and r.histogram == {1: 1000}
    r = sample_return_time(bit_flip(), E0, 20000, seed=2)
    assert abs(r.mean - 2) <= 4 * r.std_error
    assert r.censored_count == 0
    assert sum(r.histogram.values()) == 20000


def test_monte_carlo_censoring():
    r = sample_return_time(amplitude_damping(), E1, 100, seed=0, t_cap=50)
    assert r.censored_count == 100
    assert r.mean == 50 and r.histogram == {}


def test_monte_carlo_deterministic_and_job_independent():
    coupling, psi = geometric_site()
    ch = monitored_site_channel(coupling, psi)
    a = sample_return_time(ch, psi, 20000, seed=5)
    b = sample_return_time(ch, psi, 20000, seed=5, jobs=3)
    assert a.histogram == b.histogram and a.mean == b.mean
    assert a.histogram_csv().splitlines()[0] == "t,count"
    with pytest.raises(ValueError):
        sample_return_time(ch, psi, 0, seed=0)


def test_monte_carlo_geometric_distribution():
    coupling, psi = geometric_site()
    r = sample_return_time(monitored_site_channel(coupling, psi), psi, 50000, seed=3)
    n = r.n_samples
    for t in (1, 2, 3):
        p = 2.0**-t
        assert abs(r.histogram[t] / n - p) <= 5 * math.sqrt(p * (1 - p) / n)
