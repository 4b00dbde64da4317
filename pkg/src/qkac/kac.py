"""Checks the return-time formula ``T = 1 / <psi|chi|psi>`` on a given channel.

:func:`verify_kac` compares the time predicted from the steady state
against the one measured from the monitored dynamics. It also checks that
``rho_cond`` is proportional to ``chi`` and attaches the recurrence
certificate. :func:`classical_cross_check` is the classical Markov-chain
counterpart, computed without any quantum machinery.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .asymptotics import (
    KacHypothesis,
    RecurrenceCertificate,
    SteadyStateAnalysis,
    kac_hypothesis,
    recurrence_certificate,
    steady_state,
)
from .channel import QuantumChannel, projector
from .constructions import ClassicalChain
from .monitor import (
    CrossCheck,
    SampleResult,
    monitored_superoperator,
    project_out,
    return_time_cross_check,
    sample_return_time,
)
from .numerics import DEFAULT_TOL, NonConvergenceError, unvec, vec

CONFIRMED = "confirmed"
HYPOTHESIS_NOT_MET = "hypothesis_not_met"
INCONCLUSIVE = "inconclusive"


@dataclass
class KacConfig:
    tol: float = DEFAULT_TOL
    hypothesis_tol: float = 1e-8
    time_rtol: float = 1e-5
    proportionality_tol: float = 1e-5
    method_agreement: float = 1e-6
    horizon: int = 2**40
    monte_carlo: bool = False
    samples: int = 100_000
    seed: int = 0
    t_cap: int = 10_000
    jobs: int = 1


@dataclass
class KacReport:
    scenario_id: str
    hypothesis: KacHypothesis
    lam: float
    predicted_time: float
    measured_time: float
    series_time: float
    solve_time: float
    method_discrepancy: float
    proportionality_residual: float
    certificate: RecurrenceCertificate | None
    verdict: str
    monte_carlo: SampleResult | None = None
    steady: SteadyStateAnalysis | None = None
    rho_cond: np.ndarray | None = None
    diagnostics: list[str] = field(default_factory=list)

    def as_dict(self) -> dict[str, Any]:
        mc = None
        if self.monte_carlo is not None:
            mc = {
                "mean": self.monte_carlo.mean,
                "std_error": self.monte_carlo.std_error,
                "censored_count": self.monte_carlo.censored_count,
                "n_samples": self.monte_carlo.n_samples,
            }
        return {
            "scenario_id": self.scenario_id,
            "hypothesis": {"holds": self.hypothesis.holds, "lambda": self.hypothesis.lam},
            "lambda": self.lam,
            "predicted_time": self.predicted_time,
            "measured_time": self.measured_time,
            "series_time": self.series_time,
            "solve_time": self.solve_time,
            "method_discrepancy": self.method_discrepancy,
            "monte_carlo_time": mc,
            "proportionality_residual": self.proportionality_residual,
            "psi_eigen_residual": self.steady.psi_eigen_residual if self.steady else None,
            "fixed_point_residual": self.steady.fixed_point_residual if self.steady else None,
            "certificate": self.certificate.as_dict() if self.certificate else None,
            "verdict": self.verdict,
            "diagnostics": list(self.diagnostics),
        }


def proportionality_check(rho_cond: np.ndarray, chi: np.ndarray, psi: np.ndarray) -> float:
    """``||rho_cond - chi / <psi|chi|psi>||_F``."""
    lam = float(np.real(np.vdot(psi, chi @ psi)))
    if lam <= 0:
        raise ValueError("weight of psi in the steady state is zero")
    return float(np.linalg.norm(rho_cond - chi / lam))


def one_step_identity_residual(channel: QuantumChannel, psi: np.ndarray, chi: np.ndarray) -> float:
    """``||M S[|psi><psi|] - (chi_perp - M S[chi_perp]) / lambda||_F`` with ``chi_perp = M[chi]``.

    Zero whenever ``psi`` is an eigenvector of ``chi``.
    """
    lam = float(np.real(np.vdot(psi, chi @ psi)))
    g = monitored_superoperator(channel, psi)
    chi_perp = project_out(chi, psi)
    lhs = unvec(g @ vec(projector(psi)))
    rhs = (chi_perp - unvec(g @ vec(chi_perp))) / lam
    return float(np.linalg.norm(lhs - rhs))


def conditional_decay(channel: QuantumChannel, psi: np.ndarray, chi: np.ndarray, t: int = 2**20) -> float:
    """``||(M S)^t [M[chi]]||_F``, which must vanish for large ``t`` when recurrence holds."""
    g = monitored_superoperator(channel, psi)
    x = np.linalg.matrix_power(g, t) @ vec(project_out(chi, psi))
    return float(np.linalg.norm(x))


def verify_kac(channel: QuantumChannel, psi: np.ndarray, config: KacConfig | None = None,
               scenario_id: str = "") -> KacReport:
    cfg = config or KacConfig()
    notes: list[str] = []
    steady = steady_state(channel, psi, "spectral", tol=cfg.tol)
    hyp = kac_hypothesis(steady, cfg.hypothesis_tol)
    predicted = 1.0 / steady.lam if steady.lam > cfg.hypothesis_tol else math.inf

    cross: CrossCheck | None = None
    try:
        cross = return_time_cross_check(channel, psi, cfg.tol)
    except NonConvergenceError as exc:
        notes.append(str(exc))

    if cross is None:
        measured = series_t = solve_t = math.nan
        discrepancy = math.inf
        rho_cond = None
    else:
        measured = cross.expected_time
        series_t = cross.series.expected_time
        solve_t = cross.solve.expected_time
        discrepancy = max(cross.time_difference, cross.rho_difference)
        rho_cond = cross.solve.rho_cond if cross.solve.finite else cross.series.rho_cond
        if discrepancy > cfg.method_agreement:
            notes.append(f"series and linear-solve disagree by {discrepancy:.3e}")

    if rho_cond is not None and steady.lam > cfg.hypothesis_tol:
        prop = proportionality_check(rho_cond, steady.chi, psi)
    else:
        prop = math.inf if hyp.holds else math.nan

    cert = None
    try:
        cert = recurrence_certificate(channel, psi, cfg.horizon, cfg.tol)
        if not cert.conclusive:
            notes.append("recurrence indicators disagree at the horizon")
    except RuntimeError as exc:
        notes.append(f"recurrence certificate failed: {exc}")

    mc = None
    if cfg.monte_carlo:
        mc = sample_return_time(channel, psi, cfg.samples, cfg.seed, cfg.t_cap, cfg.jobs)

    if not hyp.holds:
        verdict = HYPOTHESIS_NOT_MET
    elif (
        cross is not None
        and math.isfinite(measured)
        and discrepancy <= cfg.method_agreement
        and abs(predicted - measured) <= cfg.time_rtol * predicted
        and prop <= cfg.proportionality_tol
    ):
        verdict = CONFIRMED
    else:
        verdict = INCONCLUSIVE
    return KacReport(
        scenario_id=scenario_id,
        hypothesis=hyp,
        lam=steady.lam,
        predicted_time=predicted,
        measured_time=measured,
        series_time=series_t,
        solve_time=solve_t,
        method_discrepancy=discrepancy,
        proportionality_residual=prop,
        certificate=cert,
        verdict=verdict,
        monte_carlo=mc,
        steady=steady,
        rho_cond=rho_cond,
        diagnostics=notes,
    )


# -- classical ----------------------------------------------------------------

@dataclass
class ClassicalKac:
    pi: np.ndarray
    classical_kac_time: float
    recurrent_class: np.ndarray


def reachability(w: np.ndarray) -> np.ndarray:
    """``reach[i, j]`` is true when state ``j`` can be reached from ``i`` in zero or more steps."""
    n = w.shape[0]
    reach = (w.T > 0) | np.eye(n, dtype=bool)
    for k in range(n):  # Warshall closure
        reach = reach | (reach[:, [k]] & reach[[k], :])
    return reach


def classical_cross_check(chain: ClassicalChain, start_index: int) -> ClassicalKac:
    """Stationary distribution of the class containing ``start_index`` and ``1 / pi[start]``.

    A transient start state (some reachable state cannot lead back) gets an
    infinite return time and an all-zero ``pi``.
    """
    w = chain.transition
    n = chain.n_states
    reach = reachability(w)
    forward = np.flatnonzero(reach[start_index])
    if not np.all(reach[forward, start_index]):
        return ClassicalKac(np.zeros(n), math.inf, forward)
    cls = forward
    sub = w[np.ix_(cls, cls)]
    k = cls.size
    a = sub - np.eye(k)
    a[-1, :] = 1.0
    b = np.zeros(k)
    b[-1] = 1.0
    pi_c = np.linalg.solve(a, b)
    pi = np.zeros(n)
    pi[cls] = pi_c
    return ClassicalKac(pi, float(1.0 / pi[start_index]), cls)
