"""Quantum channels in Kraus form, CPTP validation and the JSON channel format."""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Any, Sequence

import numpy as np

from .numerics import DEFAULT_TOL, dagger, eig_hermitian, vec


class ChannelValidationError(ValueError):
    """A channel or state violates one of its invariants."""


@dataclass(frozen=True)
class ValidationReport:
    trace_preserving: bool
    completely_positive: bool
    tp_residual: float
    choi_min_eigenvalue: float

    @property
    def valid(self) -> bool:
        return self.trace_preserving and self.completely_positive

    def as_dict(self) -> dict[str, Any]:
        return {
            "trace_preserving": self.trace_preserving,
            "completely_positive": self.completely_positive,
            "tp_residual": self.tp_residual,
            "choi_min_eigenvalue": self.choi_min_eigenvalue,
            "valid": self.valid,
        }


@dataclass(frozen=True, eq=False)
class QuantumChannel:
    """Channel ``rho -> sum_k A_k rho A_k^dag`` stored by its Kraus operators.

    Instances are immutable; the superoperator matrix is built on first use
    and cached. Construction only checks shapes and the rank bound, call
    :func:`validate_cptp` (or :meth:`checked`) for the CPTP conditions.
    """

    kraus: tuple[np.ndarray, ...]

    def __init__(self, kraus: Sequence[np.ndarray]):
        ops = [np.array(k, dtype=complex) for k in kraus]
        if not ops:
            raise ChannelValidationError("a channel needs at least one Kraus operator")
        d = ops[0].shape[0] if ops[0].ndim == 2 else -1
        for k in ops:
            if k.ndim != 2 or k.shape != (d, d):
                raise ChannelValidationError(
                    f"Kraus operators must all be square {d}x{d}, got shape {k.shape}"
                )
            if not np.all(np.isfinite(k)):
                raise ChannelValidationError("Kraus operators contain non-finite entries")
            k.setflags(write=False)
        if len(ops) > d * d:
            raise ChannelValidationError(f"Kraus rank {len(ops)} exceeds d^2 = {d * d}")
        object.__setattr__(self, "kraus", tuple(ops))

    @property
    def dim(self) -> int:
        return self.kraus[0].shape[0]

    @property
    def rank(self) -> int:
        return len(self.kraus)

    @cached_property
    def superop(self) -> np.ndarray:
        s = sum(np.kron(np.conj(k), k) for k in self.kraus)
        s.setflags(write=False)
        return s

    def __call__(self, rho: np.ndarray) -> np.ndarray:
        return apply(self, rho)

    def checked(self, tol: float = DEFAULT_TOL) -> "QuantumChannel":
        report = validate_cptp(self, tol)
        if not report.trace_preserving:
            raise ChannelValidationError(
                f"channel is not trace preserving: ||sum A^dag A - I||_F = {report.tp_residual:.3e}"
            )
        if not report.completely_positive:
            raise ChannelValidationError(
                f"channel is not completely positive: Choi eigenvalue {report.choi_min_eigenvalue:.3e}"
            )
        return self


def validate_cptp(channel: QuantumChannel, tol: float = DEFAULT_TOL) -> ValidationReport:
    d = channel.dim
    gram = sum(dagger(k) @ k for k in channel.kraus)
    tp_res = float(np.linalg.norm(gram - np.eye(d)))
    choi = sum(np.outer(vec(k), np.conj(vec(k))) for k in channel.kraus)
    w, _ = eig_hermitian(choi, tol=max(tol, 1e-12 * np.linalg.norm(choi)))
    return ValidationReport(
        trace_preserving=tp_res <= tol,
        completely_positive=bool(w[-1] >= -tol),
        tp_residual=tp_res,
        choi_min_eigenvalue=float(w[-1]),
    )


def apply(channel: QuantumChannel, rho: np.ndarray) -> np.ndarray:
    rho = np.asarray(rho)
    if rho.shape != (channel.dim, channel.dim):
        raise ValueError(f"state shape {rho.shape} does not match channel dimension {channel.dim}")
    return sum(k @ rho @ dagger(k) for k in channel.kraus)


def superoperator(channel: QuantumChannel) -> np.ndarray:
    return channel.superop


def compose(*channels: QuantumChannel, drop: float = 1e-14) -> QuantumChannel:
    """Channel applying ``channels[0]`` first, then ``channels[1]``, and so on.

    Kraus products with Frobenius norm below ``drop`` are discarded. If the
    product set still exceeds ``d^2`` operators it is replaced by the
    canonical Kraus set of the Choi matrix.
    """
    ops = [np.eye(channels[0].dim, dtype=complex)]
    for ch in channels:
        ops = [k @ a for k in ch.kraus for a in ops]
        ops = [a for a in ops if np.linalg.norm(a) >= drop]
    d = channels[0].dim
    if len(ops) > d * d:
        ops = canonical_kraus(ops)
    return QuantumChannel(ops)


def canonical_kraus(ops: Sequence[np.ndarray], rel_tol: float = 1e-14) -> list[np.ndarray]:
    """Orthogonal Kraus set from the eigendecomposition of the Choi matrix."""
    d = ops[0].shape[0]
    choi = sum(np.outer(vec(k), np.conj(vec(k))) for k in ops)
    w, v = np.linalg.eigh(choi)
    keep = w > rel_tol * max(w.max(), 1.0)
    return [np.sqrt(wi) * v[:, i].reshape((d, d), order="F") for i, wi in zip(np.flatnonzero(keep), w[keep])]


# -- states -----------------------------------------------------------------

def pure_state(amplitudes: Sequence[complex], tol: float = 1e-9) -> np.ndarray:
    psi = np.array(amplitudes, dtype=complex).ravel()
    nrm = np.linalg.norm(psi)
    if abs(nrm - 1.0) > tol:
        raise ChannelValidationError(f"pure state must have unit norm, got {nrm:.12g}")
    return psi


def basis_state(dim: int, index: int) -> np.ndarray:
    psi = np.zeros(dim, dtype=complex)
    psi[index] = 1.0
    return psi


def projector(psi: np.ndarray) -> np.ndarray:
    return np.outer(psi, np.conj(psi))


def check_density(rho: np.ndarray, normalized: bool = True, tol: float = DEFAULT_TOL) -> None:
    """Raise ``ChannelValidationError`` unless ``rho`` is a (conditional) density operator."""
    w, _ = eig_hermitian(rho, tol=max(tol, tol * np.linalg.norm(rho)))
    if w[-1] < -tol:
        raise ChannelValidationError(f"density operator has negative eigenvalue {w[-1]:.3e}")
    tr = float(np.real(np.trace(rho)))
    if normalized and abs(tr - 1.0) > tol:
        raise ChannelValidationError(f"normalized density operator has trace {tr!r}")
    if not normalized and not (-tol <= tr <= 1.0 + tol):
        raise ChannelValidationError(f"conditional density operator has trace {tr!r} outside [0, 1]")


# -- JSON -------------------------------------------------------------------

def parse_complex(x: Any) -> complex:
    """A JSON number or an ``[re, im]`` pair."""
    if isinstance(x, bool):
        raise TypeError(f"expected a number, got {x!r}")
    if isinstance(x, (int, float)):
        return complex(x)
    if isinstance(x, list) and len(x) == 2 and all(isinstance(y, (int, float)) and not isinstance(y, bool) for y in x):
        return complex(x[0], x[1])
    raise TypeError(f"expected a number or an [re, im] pair, got {x!r}")


def parse_vector(obj: Any) -> np.ndarray:
    if not isinstance(obj, list) or not obj:
        raise TypeError(f"expected a non-empty list of complex entries, got {obj!r}")
    return np.array([parse_complex(x) for x in obj], dtype=complex)


def parse_matrix(obj: Any) -> np.ndarray:
    if not isinstance(obj, list) or not obj:
        raise TypeError(f"expected a non-empty list of rows, got {obj!r}")
    rows = [parse_vector(r) for r in obj]
    if len({len(r) for r in rows}) != 1:
        raise TypeError("matrix rows have unequal lengths")
    return np.array(rows)


def parse_real_matrix(obj: Any) -> np.ndarray:
    m = np.array(obj, dtype=float)
    if m.ndim != 2:
        raise TypeError(f"expected a real matrix, got array of shape {m.shape}")
    return m


def complex_to_json(a: np.ndarray) -> Any:
    a = np.asarray(a)
    if a.ndim == 0:
        return [float(a.real), float(a.imag)]
    return [complex_to_json(x) for x in a]


def channel_from_json(obj: dict[str, Any]) -> QuantumChannel:
    """Build a channel from ``{"dim": d, "kraus": [...]}`` with ``[re, im]`` entries."""
    d = int(obj["dim"])
    ops = []
    for k in obj["kraus"]:
        ops.append(parse_matrix(k))
    for k in ops:
        if k.shape != (d, d):
            raise ChannelValidationError(f"Kraus operator has shape {k.shape}, declared dim is {d}")
    return QuantumChannel(ops)


def channel_to_json(channel: QuantumChannel) -> dict[str, Any]:
    return {"dim": channel.dim, "kraus": [complex_to_json(k) for k in channel.kraus]}
