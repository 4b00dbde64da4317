"""Dense complex linear algebra shared by the rest of the package.

All operator vectorization uses column stacking: entry ``(i, j)`` of a
``d x d`` matrix lands at index ``j * d + i``. With this convention the
superoperator of ``rho -> A rho B^dagger`` is ``kron(conj(B), A)``.
"""
from __future__ import annotations

import warnings
from typing import Iterable, Sequence

import numpy as np

DEFAULT_TOL = 1e-10


class NonConvergenceError(RuntimeError):
    """Raised when an iterative limit is not reached within its budget."""


def vec(m: np.ndarray) -> np.ndarray:
    m = np.asarray(m)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"vec expects a square matrix, got shape {m.shape}")
    return m.reshape(-1, order="F").copy()


def unvec(v: np.ndarray) -> np.ndarray:
    v = np.asarray(v)
    if v.ndim != 1:
        raise ValueError(f"unvec expects a 1-d vector, got shape {v.shape}")
    d = int(round(np.sqrt(v.size)))
    if d * d != v.size:
        raise ValueError(f"length {v.size} is not a perfect square")
    return v.reshape((d, d), order="F").copy()


def dagger(m: np.ndarray) -> np.ndarray:
    return np.conj(np.swapaxes(m, -1, -2))


def hermitize(m: np.ndarray) -> np.ndarray:
    return 0.5 * (m + dagger(m))


def eig_hermitian(m: np.ndarray, tol: float = DEFAULT_TOL) -> tuple[np.ndarray, np.ndarray]:
    """Eigendecomposition of a Hermitian matrix.

    Returns eigenvalues sorted in descending order and the matching
    orthonormal eigenvectors as columns. Raises ``ValueError`` if ``m``
    deviates from Hermitian by more than ``tol`` in Frobenius norm.
    """
    m = np.asarray(m, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"eig_hermitian expects a square matrix, got shape {m.shape}")
    asym = np.linalg.norm(m - dagger(m))
    if asym > tol:
        raise ValueError(f"matrix is not Hermitian: ||m - m^dag||_F = {asym:.3e} > {tol:.1e}")
    w, v = np.linalg.eigh(hermitize(m))
    order = np.argsort(w)[::-1]
    return w[order], v[:, order]


def orthonormalize_span(vectors: Iterable[np.ndarray], tol: float = DEFAULT_TOL) -> list[np.ndarray]:
    """Orthonormal basis for the span of ``vectors``.

    Modified Gram-Schmidt with one re-orthogonalization pass. Vectors whose
    residual norm after projection falls below ``tol`` are dropped, so an
    all-zero input gives an empty basis.
    """
    basis: list[np.ndarray] = []
    for v in vectors:
        r = np.array(v, dtype=complex).ravel()
        for _ in range(2):
            for b in basis:
                r = r - np.vdot(b, r) * b
        nrm = np.linalg.norm(r)
        if nrm >= tol:
            basis.append(r / nrm)
    return basis


def psd_sqrt(m: np.ndarray, tol: float = DEFAULT_TOL) -> np.ndarray:
    """Square root of a positive semidefinite matrix, clamping tiny negative eigenvalues."""
    w, v = eig_hermitian(m, tol)
    w = np.clip(w, 0.0, None)
    return (v * np.sqrt(w)) @ dagger(v)


def support(m: np.ndarray, rel_tol: float = 1e-9, abs_tol: float = 0.0) -> np.ndarray:
    """Columns spanning the eigenvectors of a PSD matrix with eigenvalue above ``max(rel_tol * trace, abs_tol)``."""
    tr = float(np.real(np.trace(m)))
    w, v = eig_hermitian(m, tol=max(1e-8, 1e-8 * abs(tr)))
    if tr <= 0:
        return v[:, :0]
    return v[:, w > max(rel_tol * tr, abs_tol)]


def null_space(a: np.ndarray, k: int) -> np.ndarray:
    """The ``k`` right-singular vectors of ``a`` with the smallest singular values."""
    if k == 0:
        return np.zeros((a.shape[1], 0), dtype=complex)
    _, _, vh = np.linalg.svd(a)
    return dagger(vh[-k:, :])


def spectral_radius(m: np.ndarray) -> float:
    if m.size == 0:
        return 0.0
    return float(np.max(np.abs(np.linalg.eigvals(m))))


def fixed_point_projector(superop: np.ndarray, atol: float = 1e-8) -> np.ndarray:
    """Spectral projector onto the eigenvalue-1 eigenspace of a power-bounded map.

    For a trace-preserving positive map eigenvalue 1 is semisimple, so the
    projector is ``R (L^dag R)^{-1} L^dag`` with ``R``/``L`` the right/left
    null spaces of ``superop - I``. Its action equals the Cesaro time average.
    Emits a warning if another eigenvalue sits within ``atol`` of the cluster.
    """
    n = superop.shape[0]
    ev = np.linalg.eigvals(superop)
    dist = np.abs(ev - 1.0)
    k = int(np.sum(dist < atol))
    others = dist[dist >= atol]
    if others.size and others.min() < 10 * atol:
        warnings.warn(
            f"eigenvalue-1 cluster poorly separated: nearest other eigenvalue at distance {others.min():.2e}",
            RuntimeWarning,
            stacklevel=2,
        )
    a = superop - np.eye(n)
    right = null_space(a, k)
    left = null_space(dagger(a), k)
    return right @ np.linalg.solve(dagger(left) @ right, dagger(left))


def cesaro_average(superop: np.ndarray, x0: np.ndarray, horizon: int) -> np.ndarray:
    """``(1/T) sum_{t<T} G^t x0`` for ``T = horizon``, by binary doubling.

    Uses ``O(log T)`` matrix products so horizons far beyond what stepping
    could reach (2**40 and more) stay cheap.
    """
    if horizon < 1:
        raise ValueError("horizon must be >= 1")
    n = superop.shape[0]
    power = np.eye(n, dtype=complex)  # G^m
    acc = np.zeros((n, n), dtype=complex)  # sum_{t<m} G^t
    for bit in bin(horizon)[2:]:
        acc = acc + power @ acc
        power = power @ power
        if bit == "1":
            acc = acc + power
            power = superop @ power
    return (acc @ x0) / horizon


def doubling_cesaro(superop: np.ndarray, x0: np.ndarray, tol: float, max_horizon: int,
                    conserved: np.ndarray | None = None, min_horizon: int = 16) -> tuple[np.ndarray, int, float]:
    """Cesaro average over doubling horizons until ``||avg_T - avg_2T|| < tol``.

    Squaring amplifies round-off on the eigenvalue-1 modes roughly like
    ``T * eps``. If ``conserved`` (a left fixed vector, e.g. the trace
    functional of a trace-preserving map) is given, every power is corrected
    to preserve it exactly, which removes that drift for maps with a unique
    fixed point. Returns ``(avg, horizon, last_difference)``; raises
    ``NonConvergenceError`` once ``max_horizon`` would be exceeded.
    """
    n = superop.shape[0]
    if conserved is not None:
        c = np.asarray(conserved, dtype=complex)
        c_norm = np.vdot(c, c).real

        def fix(m, target):
            return m + np.outer(np.conj(c), target - c @ m) / c_norm
    acc = np.zeros((n, n), dtype=complex)
    power = np.eye(n, dtype=complex)
    for _ in range(min_horizon):
        acc = acc + power
        power = superop @ power
    horizon = min_horizon
    prev = acc @ x0 / horizon
    while True:
        acc = acc + power @ acc
        power = power @ power
        horizon *= 2
        if conserved is not None:
            power = fix(power, c)
            acc = fix(acc, horizon * c)
        avg = acc @ x0 / horizon
        diff = float(np.linalg.norm(avg - prev))
        if diff < tol:
            return avg, horizon, diff
        if horizon * 2 > max_horizon:
            raise NonConvergenceError(
                f"Cesaro average not converged at horizon {horizon}: last change {diff:.3e} >= {tol:.1e}"
            )
        prev = avg


def polar_unitary(m: np.ndarray) -> np.ndarray:
    """Closest unitary to ``m`` (the polar factor)."""
    w, _, vh = np.linalg.svd(m)
    return w @ vh


def doubling_cesaro_unitary(u: np.ndarray, rho0: np.ndarray, tol: float, max_horizon: int,
                            min_horizon: int = 16) -> tuple[np.ndarray, int, float]:
    """:func:`doubling_cesaro` for the unitary channel ``rho -> U rho U^dag``, on ``d x d`` matrices.

    Each squared power of ``U`` is projected back onto the unitaries, so the
    fixed points of the map (the commutant of ``U``) stay exactly fixed
    instead of drifting like ``T * eps`` as they do under superoperator
    squaring. Returns ``(avg, horizon, last_difference)``.
    """
    u = np.asarray(u, dtype=complex)
    acc = np.zeros_like(u)
    x = np.asarray(rho0, dtype=complex)
    for _ in range(min_horizon):
        acc = acc + x
        x = u @ x @ dagger(u)
    power = polar_unitary(np.linalg.matrix_power(u, min_horizon))
    horizon = min_horizon
    prev = acc / horizon
    while True:
        acc = acc + power @ acc @ dagger(power)
        power = polar_unitary(power @ power)
        horizon *= 2
        avg = acc / horizon
        diff = float(np.linalg.norm(avg - prev))
        if diff < tol:
            return vec(avg), horizon, diff
        if horizon * 2 > max_horizon:
            raise NonConvergenceError(
                f"Cesaro average not converged at horizon {horizon}: last change {diff:.3e} >= {tol:.1e}"
            )
        prev = avg


def random_complex(rng: np.random.Generator, shape: Sequence[int]) -> np.ndarray:
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2)
