"""Long-time structure of an iterated channel.

Cesaro steady state seeded by ``|psi><psi|``, the eigen-test of ``psi``
against it, the relevant subspace explored by the orbit, the decaying
subspace and the ``chi_M`` recurrence certificate.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal

import numpy as np

from .channel import QuantumChannel, apply, canonical_kraus, projector
from .monitor import chi_M, monitored_superoperator, trace_functional
from .numerics import (
    DEFAULT_TOL,
    NonConvergenceError,
    dagger,
    doubling_cesaro,
    doubling_cesaro_unitary,
    eig_hermitian,
    fixed_point_projector,
    hermitize,
    orthonormalize_span,
    support,
    unvec,
    vec,
)

SUPPORT_REL_TOL = 1e-9
ORBIT_FLOOR = 1e-14


@dataclass
class SteadyStateAnalysis:
    chi: np.ndarray
    method: str
    fixed_point_residual: float
    psi_eigen_residual: float
    lam: float
    spectrum: np.ndarray
    horizon: int | None = None


def cesaro_steady_state(channel: QuantumChannel, rho0: np.ndarray,
                        method: Literal["spectral", "iterative"] = "spectral",
                        tol: float = DEFAULT_TOL, max_steps: int = 2**40) -> tuple[np.ndarray, int | None]:
    x0 = vec(rho0)
    horizon = None
    if method == "spectral":
        x = fixed_point_projector(channel.superop) @ x0
    elif method == "iterative":
        ops = canonical_kraus(channel.kraus)
        if len(ops) == 1:  # unitary channel, up to a phase on the Kraus operator
            x, horizon, _ = doubling_cesaro_unitary(ops[0], rho0, tol, max_steps)
        else:
            x, horizon, _ = doubling_cesaro(channel.superop, x0, tol, max_steps,
                                            conserved=vec(np.eye(channel.dim)))
    else:
        raise ValueError(f"unknown steady-state method {method!r}")
    chi = hermitize(unvec(x))
    return chi / np.real(np.trace(chi)), horizon


def steady_state(channel: QuantumChannel, psi: np.ndarray,
                 method: Literal["spectral", "iterative"] = "spectral",
                 max_steps: int = 2**40, tol: float = DEFAULT_TOL) -> SteadyStateAnalysis:
    """Cesaro limit ``chi = lim (1/T) sum_{t<T} S^t[|psi><psi|]`` and the eigen-test of ``psi``.

    ``spectral`` applies the eigenvalue-1 spectral projector of the
    superoperator; ``iterative`` runs the time average over doubling
    horizons until successive averages differ by less than ``tol``.
    """
    chi, horizon = cesaro_steady_state(channel, projector(psi), method, tol, max_steps)
    lam = float(np.real(np.vdot(psi, chi @ psi)))
    spectrum, _ = eig_hermitian(chi, tol=1e-8)
    return SteadyStateAnalysis(
        chi=chi,
        method=method,
        fixed_point_residual=float(np.linalg.norm(apply(channel, chi) - chi)),
        psi_eigen_residual=float(np.linalg.norm(chi @ psi - lam * psi)),
        lam=lam,
        spectrum=spectrum,
        horizon=horizon,
    )


@dataclass(frozen=True)
class KacHypothesis:
    holds: bool
    lam: float


def kac_hypothesis(analysis: SteadyStateAnalysis, tol: float = 1e-8) -> KacHypothesis:
    """``psi`` must be an eigenvector of ``chi`` with a nonzero eigenvalue."""
    holds = analysis.psi_eigen_residual <= tol and analysis.lam > tol
    return KacHypothesis(bool(holds), analysis.lam)


def relevant_subspace(channel: QuantumChannel, psi: np.ndarray, tol: float = DEFAULT_TOL,
                      extra_steps: int = 0) -> np.ndarray:
    """Orthonormal columns spanning the supports of ``(M S)^n [|psi><psi|]``, ``n < d``.

    The accumulated span cannot grow after ``d - 1`` steps; ``extra_steps``
    continues the orbit further, which tests use to confirm this.
    """
    d = psi.size
    g = monitored_superoperator(channel, psi)
    x = vec(projector(psi))
    vectors = []
    for _ in range(d + extra_steps):
        rho = hermitize(unvec(x))
        # weights are relative to Tr|psi><psi| = 1; anything below ORBIT_FLOOR is round-off from the projection
        vectors.extend(support(rho, SUPPORT_REL_TOL, ORBIT_FLOOR).T)
        x = g @ x
    basis = orthonormalize_span(vectors, tol=1e-7)
    return np.array(basis).T if basis else np.zeros((d, 0), dtype=complex)


@dataclass
class SubspaceReport:
    decaying_projector: np.ndarray
    recurrent_basis: np.ndarray
    relevant_basis: np.ndarray | None = None
    psi_in_R: bool | None = None
    chi_M_trace: float | None = None
    t_large: int = 0
    max_decaying_overlap: float = 0.0

    @property
    def decaying_dim(self) -> int:
        return int(round(np.real(np.trace(self.decaying_projector))))


class SubspaceVerificationError(RuntimeError):
    pass


def decaying_subspace(channel: QuantumChannel, tol: float = DEFAULT_TOL, n_probes: int = 4,
                      seed: int = 0) -> SubspaceReport:
    """Projector onto the decaying subspace ``D``.

    ``R`` is the support of the steady state seeded by the maximally mixed
    state and ``D`` its complement. The defining property is then checked:
    ``<phi|S^t[rho]|phi>`` must be negligible for basis vectors ``phi`` of
    ``D``, random ``rho``, and ``t`` past the slowest transient.
    """
    d = channel.dim
    chi_max, _ = cesaro_steady_state(channel, np.eye(d) / d)
    r = support(chi_max, SUPPORT_REL_TOL)
    p_r = r @ dagger(r)
    p_d = hermitize(np.eye(d) - p_r)

    ev = np.abs(np.linalg.eigvals(channel.superop))
    transient = ev[ev < 1 - 1e-8]
    slowest = float(transient.max()) if transient.size else 0.0
    if slowest > 0:
        t_large = int(min(2**30, max(64, 2 * math.ceil(math.log(tol * 1e-2) / math.log(slowest)))))
    else:
        t_large = 64
    s_t = np.linalg.matrix_power(channel.superop, t_large)

    rng = np.random.default_rng(seed)
    w, v = np.linalg.eigh(p_d)
    d_vecs = v[:, w > 0.5]
    worst = 0.0
    for i in range(n_probes):
        if i == 0:
            rho = np.eye(d) / d
        else:
            a = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
            rho = a @ dagger(a)
            rho /= np.trace(rho).real
        evolved = unvec(s_t @ vec(rho))
        for phi in d_vecs.T:
            worst = max(worst, float(np.real(np.vdot(phi, evolved @ phi))))
    if worst > 10 * tol:
        raise SubspaceVerificationError(
            f"decaying-subspace check failed: overlap {worst:.3e} at t = {t_large}"
        )
    return SubspaceReport(p_d, r, t_large=t_large, max_decaying_overlap=worst)


@dataclass
class RecurrenceCertificate:
    recurrent: bool
    conclusive: bool
    chi_M_trace: float
    final_survival: float
    psi_in_R: bool
    decaying_overlap: float
    horizon: int

    def as_dict(self) -> dict:
        return {
            "recurrent": self.recurrent,
            "conclusive": self.conclusive,
            "chi_M_trace": self.chi_M_trace,
            "final_survival": self.final_survival,
            "psi_in_R": self.psi_in_R,
            "decaying_overlap": self.decaying_overlap,
            "horizon": self.horizon,
        }


def recurrence_certificate(channel: QuantumChannel, psi: np.ndarray, horizon: int = 2**40,
                           tol: float = DEFAULT_TOL) -> RecurrenceCertificate:
    """Recurrence via the vanishing of ``chi_M`` and of the survival at ``horizon``.

    Also reports whether ``psi`` lies in the recurrent complement ``R`` of
    the decaying subspace. ``conclusive`` is false when the two recurrence
    indicators disagree.
    """
    try:
        cm = chi_M(channel, psi, horizon, tol)
    except NonConvergenceError:
        cm = None
    cm_trace = float(np.real(np.trace(cm))) if cm is not None else math.nan

    g = monitored_superoperator(channel, psi)
    x = np.linalg.matrix_power(g, horizon) @ vec(projector(psi))
    final = float(np.real(trace_functional(psi.size) @ x))

    by_chi = cm is not None and cm_trace <= tol
    by_survival = final <= tol
    sub = decaying_subspace(channel, tol)
    overlap = float(np.linalg.norm(sub.decaying_projector @ psi))
    return RecurrenceCertificate(
        recurrent=by_chi and by_survival,
        conclusive=by_chi == by_survival,
        chi_M_trace=cm_trace,
        final_survival=final,
        psi_in_R=overlap <= max(tol, 1e-8),
        decaying_overlap=overlap,
        horizon=horizon,
    )
