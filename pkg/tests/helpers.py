"""Channel factories shared by the test modules."""
import numpy as np

from qkac.channel import QuantumChannel
from qkac.constructions import ClassicalChain, SiteCoupling, embed_inner, from_classical_chain, from_unitary, rotation

ACCEPTANCE_LINES: list[str] = []

X = np.array([[0, 1], [1, 0]], dtype=complex)
I2 = np.eye(2, dtype=complex)


def identity_channel(d=2):
    return QuantumChannel([np.eye(d)])


def amplitude_damping():
    return QuantumChannel([np.array([[1, 0], [0, 0]]), np.array([[0, 1], [0, 0]])])


def bit_flip(p=0.3):
    return QuantumChannel([np.sqrt(1 - p) * I2, np.sqrt(p) * X])


def rotation_channel(theta):
    return from_unitary(rotation(theta))


def half_chain():
    return from_classical_chain(ClassicalChain(np.full((2, 2), 0.5)))


def geometric_site(p_in=1.0):
    """3 levels: monitored e0, feed into e1, extract from e2, inner 1/2-stay/1/2-move."""
    e = np.eye(3, dtype=complex)
    psi = e[0]
    coupling = SiteCoupling(((p_in, e[1]),), ((1.0, e[2]),), tuple(embed_inner(half_chain(), psi)))
    return coupling, psi
