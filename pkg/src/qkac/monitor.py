"""Stroboscopically monitored dynamics.

After every application of the channel a two-outcome measurement asks
whether the system is back in ``|psi>``. The "no" branch is the projection
``M[rho] = P rho P`` with ``P = I - |psi><psi|``; iterating ``M o S`` from
``|psi><psi|`` gives sub-normalized states whose traces are survival
probabilities. Their sum ``rho_cond`` has trace equal to the expected
first-return time.
"""
from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Literal

import numpy as np

from .channel import QuantumChannel, projector
from .numerics import (
    DEFAULT_TOL,
    NonConvergenceError,
    cesaro_average,
    dagger,
    hermitize,
    spectral_radius,
    unvec,
    vec,
)

SERIES_CHUNK = 512
DIVERGENCE_TRACE = 1e6
DIVERGENCE_RATIO = 1 - 1e-12
MAX_SERIES_TERMS = 50_000_000
MC_LANE_SIZE = 8192


def project_out(rho: np.ndarray, psi: np.ndarray) -> np.ndarray:
    rho = np.asarray(rho)
    if rho.shape != (psi.size, psi.size):
        raise ValueError(f"state shape {rho.shape} does not match psi of length {psi.size}")
    p = np.eye(psi.size) - projector(psi)
    return p @ rho @ p


def monitored_superoperator(channel: QuantumChannel, psi: np.ndarray) -> np.ndarray:
    """Matrix of ``rho -> M[S[rho]]`` in the column-stacked basis."""
    p = np.eye(psi.size) - projector(psi)
    return np.kron(np.conj(p), p) @ channel.superop


def trace_functional(dim: int) -> np.ndarray:
    return vec(np.eye(dim, dtype=complex))


# -- survival -----------------------------------------------------------------

@dataclass
class SurvivalCurve:
    psi: np.ndarray
    survival: np.ndarray
    return_distribution: np.ndarray
    partial_expected_time: float
    tail_bound: float
    decay_rate: float

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["t", "survival", "first_return_prob"])
        for t, s in enumerate(self.survival):
            q = self.return_distribution[t - 1] if t >= 1 else 0.0
            writer.writerow([t, repr(float(s)), repr(float(q))])
        return buf.getvalue()


def restricted_monitored_superoperator(channel: QuantumChannel, psi: np.ndarray, basis: np.ndarray) -> np.ndarray:
    """``M o S`` compressed to operators ``B Y B^dag`` on the span of ``basis`` columns."""
    g = monitored_superoperator(channel, psi)
    lift = np.kron(np.conj(basis), basis)
    return dagger(lift) @ g @ lift


def survival_curve(channel: QuantumChannel, psi: np.ndarray, horizon: int) -> SurvivalCurve:
    if horizon < 1:
        raise ValueError("horizon must be >= 1")
    g = monitored_superoperator(channel, psi)
    w = trace_functional(psi.size)
    x = vec(projector(psi))
    s = np.empty(horizon + 1)
    for t in range(horizon + 1):
        s[t] = float(np.real(w @ x))
        x = g @ x
    q = s[:-1] - s[1:]
    partial = float(np.sum(np.arange(1, horizon + 1) * q))

    from .asymptotics import relevant_subspace
    basis = relevant_subspace(channel, psi)
    rate = spectral_radius(restricted_monitored_superoperator(channel, psi, basis))
    tail = s[-1] * rate / (1 - rate) if rate < 1 else math.inf
    return SurvivalCurve(psi, s, q, partial, float(tail), rate)


# -- rho_cond -----------------------------------------------------------------

@dataclass
class ReturnTimeResult:
    expected_time: float
    method: str
    rho_cond: np.ndarray | None
    truncation_error_estimate: float
    n_terms: int = 0
    diverged: bool = False
    diagnostics: dict = field(default_factory=dict)

    @property
    def finite(self) -> bool:
        return math.isfinite(self.expected_time)


def _series(channel: QuantumChannel, psi: np.ndarray, tol: float, max_terms: int) -> ReturnTimeResult:
    d = psi.size
    n = d * d
    g = monitored_superoperator(channel, psi)
    w = trace_functional(d)

    # chunk operators: traces of G^j x, sum_j G^j x, and G^K x for j < K
    powers_w = np.empty((SERIES_CHUNK, n), dtype=complex)
    chunk_sum = np.zeros((n, n), dtype=complex)
    p = np.eye(n, dtype=complex)
    for j in range(SERIES_CHUNK):
        powers_w[j] = w @ p
        chunk_sum += p
        p = g @ p
    jump = p

    x = vec(projector(psi))
    acc = np.zeros(n, dtype=complex)
    total = 0.0
    slow_run = 0
    prev = None
    n_terms = 0
    while n_terms < max_terms:
        traces = np.real(powers_w @ x)
        acc += chunk_sum @ x
        n_terms += SERIES_CHUNK
        total += float(traces.sum())
        for tr in traces:
            if prev is not None and prev > 0 and tr > DIVERGENCE_RATIO * prev:
                slow_run += 1
            else:
                slow_run = 0
            prev = tr
        if slow_run >= 10 * n and total > DIVERGENCE_TRACE:
            return ReturnTimeResult(math.inf, "series", None, math.inf, n_terms, True,
                                    {"accumulated_trace": total})
        if traces[-1] < tol:
            ratio = traces[-1] / traces[-2] if traces[-2] > 0 else 0.0
            ratio = min(max(ratio, 0.0), 1 - 1e-15)
            tail = traces[-1] * ratio / (1 - ratio)
            rho = hermitize(unvec(acc))
            return ReturnTimeResult(float(np.real(np.trace(rho))), "series", rho, float(tail), n_terms)
        x = jump @ x
    raise NonConvergenceError(f"rho_cond series neither converged nor diverged in {max_terms} terms")


def _linear_solve(channel: QuantumChannel, psi: np.ndarray, tol: float) -> ReturnTimeResult:
    from .asymptotics import relevant_subspace

    basis = relevant_subspace(channel, psi)
    k = basis.shape[1]
    g = restricted_monitored_superoperator(channel, psi, basis)
    rate = spectral_radius(g)
    if rate >= 1 - 1e-9:
        return ReturnTimeResult(math.inf, "linear_solve", None, math.inf, 0, True,
                                {"spectral_radius": rate, "relevant_dim": k})
    psi_r = dagger(basis) @ psi
    y = np.linalg.solve(np.eye(k * k) - g, vec(projector(psi_r)))
    rho = hermitize(basis @ unvec(y) @ dagger(basis))
    resid = np.linalg.norm((np.eye(k * k) - g) @ y - vec(projector(psi_r)))
    return ReturnTimeResult(float(np.real(np.trace(rho))), "linear_solve", rho, float(resid), 0, False,
                            {"spectral_radius": rate, "relevant_dim": k})


def rho_cond_sum(channel: QuantumChannel, psi: np.ndarray,
                 method: Literal["series", "linear_solve"] = "series",
                 tol: float = DEFAULT_TOL, max_terms: int = MAX_SERIES_TERMS) -> ReturnTimeResult:
    """Sum of the conditional states ``sum_t (M S)^t [|psi><psi|]``.

    ``series`` accumulates terms until a term's trace drops below ``tol``,
    adding a geometric tail estimate; a sum whose terms stop decaying and
    whose trace passes 1e6 is declared divergent. ``linear_solve`` solves
    ``(I - M S) rho = |psi><psi|`` on operators supported by the relevant
    subspace, reporting divergence when that restriction has spectral
    radius 1.
    """
    if method == "series":
        return _series(channel, psi, tol, max_terms)
    if method == "linear_solve":
        return _linear_solve(channel, psi, tol)
    raise ValueError(f"unknown method {method!r}")


def expected_return_time(result: ReturnTimeResult) -> float:
    return result.expected_time


@dataclass
class CrossCheck:
    series: ReturnTimeResult
    solve: ReturnTimeResult
    time_difference: float
    rho_difference: float

    @property
    def expected_time(self) -> float:
        return self.solve.expected_time if self.solve.finite else self.series.expected_time


def return_time_cross_check(channel: QuantumChannel, psi: np.ndarray, tol: float = DEFAULT_TOL) -> CrossCheck:
    a = rho_cond_sum(channel, psi, "series", tol)
    b = rho_cond_sum(channel, psi, "linear_solve", tol)
    if a.finite and b.finite:
        dt = abs(a.expected_time - b.expected_time)
        dr = float(np.linalg.norm(a.rho_cond - b.rho_cond))
    elif not a.finite and not b.finite:
        dt = dr = 0.0
    else:
        dt = dr = math.inf
    return CrossCheck(a, b, dt, dr)


def chi_M(channel: QuantumChannel, psi: np.ndarray, horizon: int = 2**40, tol: float = DEFAULT_TOL) -> np.ndarray:
    """Cesaro average of the monitored orbit, ``(1/T) sum_{t<T} (M S)^t [|psi><psi|]``.

    Raises ``NonConvergenceError`` if the averages at ``T/2`` and ``T``
    differ by more than ``tol``.
    """
    g = monitored_superoperator(channel, psi)
    x0 = vec(projector(psi))
    avg = cesaro_average(g, x0, horizon)
    if horizon >= 2:
        half = cesaro_average(g, x0, horizon // 2)
        diff = float(np.linalg.norm(avg - half))
        if diff > tol:
            raise NonConvergenceError(f"chi_M not converged at horizon {horizon}: change {diff:.3e}")
    return hermitize(unvec(avg))


# -- Monte Carlo --------------------------------------------------------------

@dataclass
class SampleResult:
    mean: float
    std_error: float
    histogram: dict[int, int]
    censored_count: int
    n_samples: int

    def histogram_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["t", "count"])
        for t in sorted(self.histogram):
            writer.writerow([t, self.histogram[t]])
        return buf.getvalue()


def _sample_lane(s_t: np.ndarray, w_psi: np.ndarray, w_tr: np.ndarray, m_sup: np.ndarray,
                 x0: np.ndarray, n: int, rng: np.random.Generator, t_cap: int) -> np.ndarray:
    times = np.full(n, t_cap, dtype=np.int64)
    active = np.arange(n)
    x = np.tile(x0, (n, 1))
    for t in range(1, t_cap + 1):
        x = x @ s_t
        p_ret = np.clip(np.real(x @ w_psi), 0.0, 1.0)
        hit = rng.random(active.size) < p_ret
        times[active[hit]] = t
        keep = ~hit
        active = active[keep]
        if active.size == 0:
            break
        x = x[keep] @ m_sup
        x /= np.real(x @ w_tr)[:, None]
    else:
        times[active] = -1  # censored marker
    return times


def sample_return_time(channel: QuantumChannel, psi: np.ndarray, n_samples: int, seed: int,
                       t_cap: int = 10_000, jobs: int = 1) -> SampleResult:
    """Monte Carlo first-return times using the exact per-step return probability.

    Each trajectory carries its normalized conditional state. Trajectories
    are split into fixed lanes seeded by ``(seed, lane)``, so the result is
    independent of ``jobs``. Censored trajectories count as ``t_cap`` in the
    mean, which is then a lower bound.
    """
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    d = psi.size
    s_t = channel.superop.T.copy()
    p = np.eye(d) - projector(psi)
    m_sup = np.kron(np.conj(p), p).T.copy()
    w_psi = vec(np.outer(np.conj(psi), psi))
    w_tr = trace_functional(d)
    x0 = vec(projector(psi))

    sizes = [MC_LANE_SIZE] * (n_samples // MC_LANE_SIZE)
    if n_samples % MC_LANE_SIZE:
        sizes.append(n_samples % MC_LANE_SIZE)

    def lane(i):
        rng = np.random.default_rng([seed, i])
        return _sample_lane(s_t, w_psi, w_tr, m_sup, x0, sizes[i], rng, t_cap)

    if jobs > 1:
        with ThreadPoolExecutor(jobs) as pool:
            parts = list(pool.map(lane, range(len(sizes))))
    else:
        parts = [lane(i) for i in range(len(sizes))]
    times = np.concatenate(parts)
    censored = times < 0
    values = np.where(censored, t_cap, times).astype(float)
    counts = np.bincount(times[~censored]) if np.any(~censored) else np.zeros(0, dtype=int)
    hist = {int(t): int(c) for t, c in enumerate(counts) if c}
    std = float(values.std(ddof=1)) if n_samples > 1 else 0.0
    return SampleResult(
        mean=float(values.mean()),
        std_error=std / math.sqrt(n_samples),
        histogram=hist,
        censored_count=int(censored.sum()),
        n_samples=n_samples,
    )
