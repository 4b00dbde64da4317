"""Builders for the channel families used throughout the package.

* unitary channels,
* classical-quantum channels reproducing a column-stochastic Markov chain on
  the diagonal,
* the monitored-site channel ``S = D_out o T_perp o D_in`` where the initial
  state only talks to the rest of the system through incoherent transfer,
* the ancilla extension that turns a hitting time into a return time,
* seeded random channels for property tests.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .channel import ChannelValidationError, QuantumChannel, basis_state, canonical_kraus, compose, projector
from .numerics import DEFAULT_TOL, dagger, null_space, psd_sqrt, random_complex


@dataclass(frozen=True)
class ClassicalChain:
    """Column-stochastic transition matrix, ``W[m, n] = P(n -> m)``."""

    transition: np.ndarray
    tol: float = 1e-10

    def __post_init__(self):
        w = np.array(self.transition, dtype=float)
        if w.ndim != 2 or w.shape[0] != w.shape[1]:
            raise ChannelValidationError(f"transition matrix must be square, got shape {w.shape}")
        if np.any(w < -self.tol):
            raise ChannelValidationError("transition matrix has negative entries")
        colsum = w.sum(axis=0)
        if np.max(np.abs(colsum - 1.0)) > self.tol:
            raise ChannelValidationError(f"transition matrix columns must sum to 1, got {colsum}")
        w.setflags(write=False)
        object.__setattr__(self, "transition", w)

    @property
    def n_states(self) -> int:
        return self.transition.shape[0]


@dataclass(frozen=True)
class SiteCoupling:
    """Incoherent coupling of the monitored state to the rest of the system.

    ``in_rates`` are pairs ``(p, phi)``: population of the monitored state
    is moved to ``phi`` with probability ``p``. ``out_rates`` are pairs
    ``(q, alpha)``: population found in ``alpha`` is moved back with
    probability ``q``. ``inner_kraus`` are the operators ``K`` of
    ``T_perp[rho] = |psi><psi| rho |psi><psi| + sum K rho K^dag``; they must
    map the orthogonal complement of ``psi`` into itself and annihilate
    ``psi``.
    """

    in_rates: tuple[tuple[float, np.ndarray], ...]
    out_rates: tuple[tuple[float, np.ndarray], ...]
    inner_kraus: tuple[np.ndarray, ...] = field(default_factory=tuple)


# -- unitary / classical ------------------------------------------------------

def from_unitary(u: np.ndarray, tol: float = DEFAULT_TOL) -> QuantumChannel:
    u = np.asarray(u, dtype=complex)
    if u.ndim != 2 or u.shape[0] != u.shape[1]:
        raise ChannelValidationError(f"unitary must be square, got shape {u.shape}")
    res = np.linalg.norm(dagger(u) @ u - np.eye(u.shape[0]))
    if res > tol:
        raise ChannelValidationError(f"matrix is not unitary: ||U^dag U - I||_F = {res:.3e}")
    return QuantumChannel([u])


def rotation(theta: float) -> np.ndarray:
    """Real qubit rotation ``[[cos, -sin], [sin, cos]]``."""
    c, s = np.cos(theta), np.sin(theta)
    return np.array([[c, -s], [s, c]], dtype=complex)


def from_classical_chain(chain: ClassicalChain, generators: Sequence[np.ndarray] | None = None,
                         basis: np.ndarray | None = None, tol: float = 1e-9) -> QuantumChannel:
    """Classical-quantum channel ``rho -> sum_n <phi_n|rho|phi_n> sigma_n``.

    ``basis`` holds the orthonormal ``phi_n`` as columns (computational basis
    by default). Without ``generators`` the diagonal choice
    ``sigma_n = sum_m W[m, n] |phi_m><phi_m|`` is used, giving Kraus operators
    ``sqrt(W[m, n]) |phi_m><phi_n|``.
    """
    w = chain.transition
    n = chain.n_states
    phi = np.eye(n, dtype=complex) if basis is None else np.asarray(basis, dtype=complex)
    if phi.shape != (n, n) or np.linalg.norm(dagger(phi) @ phi - np.eye(n)) > tol:
        raise ChannelValidationError("basis must be an orthonormal n x n matrix")

    ops = []
    if generators is None:
        for col in range(n):
            for row in range(n):
                if w[row, col] > 0:
                    ops.append(np.sqrt(w[row, col]) * np.outer(phi[:, row], np.conj(phi[:, col])))
    else:
        if len(generators) != n:
            raise ChannelValidationError(f"need {n} generators, got {len(generators)}")
        for col, sigma in enumerate(generators):
            sigma = np.asarray(sigma, dtype=complex)
            if abs(np.trace(sigma) - 1.0) > tol:
                raise ChannelValidationError(f"generator {col} does not have unit trace")
            diag = np.real(np.einsum("im,ij,jm->m", np.conj(phi), sigma, phi))
            if np.max(np.abs(diag - w[:, col])) > tol:
                raise ChannelValidationError(f"generator {col} diagonal does not match column {col} of W")
            vals, vecs = np.linalg.eigh(0.5 * (sigma + dagger(sigma)))
            if vals.min() < -tol:
                raise ChannelValidationError(f"generator {col} is not positive semidefinite")
            for lam, v in zip(vals, vecs.T):
                if lam > tol:
                    ops.append(np.sqrt(lam) * np.outer(v, np.conj(phi[:, col])))
    if len(ops) > n * n:
        ops = canonical_kraus(ops)
    return QuantumChannel(ops)


# -- monitored site -----------------------------------------------------------

def complement_basis(psi: np.ndarray) -> np.ndarray:
    """Orthonormal columns spanning the orthogonal complement of ``psi``.

    For a computational basis vector ``e_k`` the remaining basis vectors are
    returned in order, so inner channels given in that basis embed as expected.
    """
    nz = np.flatnonzero(np.abs(psi) > 1e-12)
    if nz.size == 1 and abs(abs(psi[nz[0]]) - 1) < 1e-12:
        return np.delete(np.eye(psi.size, dtype=complex), nz[0], axis=1)
    return null_space(np.conj(psi)[None, :], psi.size - 1)


def embed_inner(inner: QuantumChannel, psi: np.ndarray, perp_basis: np.ndarray | None = None) -> list[np.ndarray]:
    """Lift a channel acting on the ``(d-1)``-dim complement of ``psi`` to operators ``K`` on the full space."""
    b = complement_basis(psi) if perp_basis is None else perp_basis
    if b.shape != (psi.size, inner.dim):
        raise ChannelValidationError(
            f"inner channel dimension {inner.dim} does not match complement dimension {psi.size - 1}"
        )
    return [b @ k @ dagger(b) for k in inner.kraus]


def _check_coupling(coupling: SiteCoupling, psi: np.ndarray, tol: float) -> None:
    d = psi.size
    for label, rates in (("in", coupling.in_rates), ("out", coupling.out_rates)):
        if any(r <= 0 for r, _ in rates):
            raise ChannelValidationError(f"{label} rates must be positive")
        if sum(r for r, _ in rates) > 1 + tol:
            raise ChannelValidationError(f"{label} rates sum to more than 1")
        for _, v in rates:
            v = np.asarray(v)
            if v.shape != (d,):
                raise ChannelValidationError(f"{label} state has shape {v.shape}, expected ({d},)")
            if abs(np.linalg.norm(v) - 1) > 1e-9:
                raise ChannelValidationError(f"{label} state is not normalized")
            if abs(np.vdot(psi, v)) > tol:
                raise ChannelValidationError(f"{label} state is not orthogonal to psi")
    for k in coupling.inner_kraus:
        k = np.asarray(k)
        if k.shape != (d, d):
            raise ChannelValidationError(f"inner Kraus operator has shape {k.shape}, expected ({d}, {d})")
        if np.linalg.norm(k @ psi) > tol or np.linalg.norm(np.conj(psi) @ k) > tol:
            raise ChannelValidationError("inner Kraus operators must act only on the complement of psi")


def transfer_in(psi: np.ndarray, rates: Sequence[tuple[float, np.ndarray]]) -> QuantumChannel:
    """``D_in``: jumps ``sqrt(p)|phi><psi|`` plus the no-jump ``sqrt(I - sum(p)|psi><psi|)``."""
    d = psi.size
    p_psi = projector(psi)
    ops = [np.sqrt(p) * np.outer(phi, np.conj(psi)) for p, phi in rates]
    ops.append(psd_sqrt(np.eye(d) - sum(p for p, _ in rates) * p_psi, tol=1e-8))
    return QuantumChannel(ops)


def transfer_out(psi: np.ndarray, rates: Sequence[tuple[float, np.ndarray]]) -> QuantumChannel:
    """``D_out``: jumps ``sqrt(q)|psi><alpha|`` plus the no-jump ``sqrt(I - sum q|alpha><alpha|)``."""
    d = psi.size
    ops = [np.sqrt(q) * np.outer(psi, np.conj(a)) for q, a in rates]
    rest = np.eye(d, dtype=complex) - sum((q * projector(a) for q, a in rates), np.zeros((d, d), dtype=complex))
    ops.append(psd_sqrt(rest, tol=1e-8))
    return QuantumChannel(ops)


def monitored_site_channel(coupling: SiteCoupling, psi: np.ndarray, tol: float = 1e-9) -> QuantumChannel:
    psi = np.asarray(psi, dtype=complex)
    _check_coupling(coupling, psi, tol)
    rates_in = [(float(p), np.asarray(v, dtype=complex)) for p, v in coupling.in_rates]
    rates_out = [(float(q), np.asarray(v, dtype=complex)) for q, v in coupling.out_rates]
    inner = QuantumChannel([projector(psi), *coupling.inner_kraus]).checked(tol)
    s = compose(transfer_in(psi, rates_in), inner, transfer_out(psi, rates_out))
    return s.checked(tol)


def hitting_time_channel(inner: QuantumChannel, source: np.ndarray, target: np.ndarray,
                         tol: float = 1e-9) -> tuple[QuantumChannel, np.ndarray]:
    """Extend by an ancilla at index 0 so the ancilla return time is the source-to-target hitting time.

    The ancilla feeds ``source`` with certainty, ``inner`` runs on the
    original space, and population in ``target`` is extracted back to the
    ancilla with certainty.
    """
    inner.checked(tol)
    d = inner.dim
    source = np.asarray(source, dtype=complex)
    target = np.asarray(target, dtype=complex)
    for name, v in (("source", source), ("target", target)):
        if v.shape != (d,) or abs(np.linalg.norm(v) - 1) > 1e-9:
            raise ChannelValidationError(f"{name} must be a unit vector of length {d}")
    embed = np.zeros((d + 1, d), dtype=complex)
    embed[1:, :] = np.eye(d)
    ancilla = basis_state(d + 1, 0)
    coupling = SiteCoupling(
        in_rates=((1.0, embed @ source),),
        out_rates=((1.0, embed @ target),),
        inner_kraus=tuple(embed_inner(inner, ancilla, perp_basis=embed)),
    )
    return monitored_site_channel(coupling, ancilla, tol), ancilla


# -- random -------------------------------------------------------------------

def random_channel(dim: int, kraus_rank: int, seed: int) -> QuantumChannel:
    """Kraus blocks of the isometry from a QR of a Gaussian ``(r d) x d`` matrix."""
    if not 1 <= kraus_rank <= dim * dim:
        raise ValueError(f"Kraus rank must lie in [1, {dim * dim}], got {kraus_rank}")
    rng = np.random.default_rng(seed)
    q, r = np.linalg.qr(random_complex(rng, (kraus_rank * dim, dim)))
    q = q * (np.diag(r) / np.abs(np.diag(r)))  # fix column phases
    return QuantumChannel([q[i * dim:(i + 1) * dim, :] for i in range(kraus_rank)])


def random_unitary(dim: int, rng: np.random.Generator) -> np.ndarray:
    q, r = np.linalg.qr(random_complex(rng, (dim, dim)))
    return q * (np.diag(r) / np.abs(np.diag(r)))


def random_unital_channel(dim: int, n_unitaries: int, seed: int) -> QuantumChannel:
    """Random mixture of unitaries, a unital channel."""
    rng = np.random.default_rng(seed)
    p = rng.dirichlet(np.ones(n_unitaries))
    return QuantumChannel([np.sqrt(pi) * random_unitary(dim, rng) for pi in p])


def random_pure_state(dim: int, rng: np.random.Generator) -> np.ndarray:
    v = random_complex(rng, (dim,))
    return v / np.linalg.norm(v)


def random_stochastic(n: int, rng: np.random.Generator, sparsity: float = 0.0) -> np.ndarray:
    w = rng.random((n, n))
    if sparsity:
        w[rng.random((n, n)) < sparsity] = 0.0
        for col in range(n):
            if w[:, col].sum() == 0:
                w[rng.integers(n), col] = 1.0
    return w / w.sum(axis=0)


def random_site_coupling(dim: int, seed: int) -> tuple[SiteCoupling, np.ndarray]:
    """Random coupling of a random pure state to its complement, for property tests."""
    if dim < 2:
        raise ValueError("monitored-site channels need dim >= 2")
    rng = np.random.default_rng(seed)
    psi = random_pure_state(dim, rng)
    perp = complement_basis(psi)

    def perp_state():
        v = perp @ random_complex(rng, (dim - 1,))
        return v / np.linalg.norm(v)

    def rates(k):
        r = rng.uniform(0.2, 1.0, size=k)
        return r / r.sum() * rng.uniform(0.3, 1.0)

    n_in = int(rng.integers(1, dim))
    n_out = int(rng.integers(1, dim))
    inner = random_channel(dim - 1, int(rng.integers(1, (dim - 1) ** 2 + 1)), int(rng.integers(2**31)))
    coupling = SiteCoupling(
        in_rates=tuple((float(p), perp_state()) for p in rates(n_in)),
        out_rates=tuple((float(q), perp_state()) for q in rates(n_out)),
        inner_kraus=tuple(embed_inner(inner, psi, perp)),
    )
    return coupling, psi
