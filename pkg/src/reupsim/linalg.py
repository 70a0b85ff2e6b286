"""Dense complex linear algebra kernel: Kronecker products, partial traces,
Hermitian eigendecompositions and Hermitian-generated unitaries.

Everything works on plain complex128 ndarrays.  Matrices are small (the
simulator never exceeds a handful of qubits) so dense routines are fine.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
import scipy.linalg

HERMITIAN_ATOL = 1e-12
UNITARY_ATOL = 1e-10

# single-qubit Pauli basis, indexed 0..3 = I, X, Y, Z
PAULIS = (
    np.eye(2, dtype=complex),
    np.array([[0, 1], [1, 0]], dtype=complex),
    np.array([[0, -1j], [1j, 0]], dtype=complex),
    np.array([[1, 0], [0, -1]], dtype=complex),
)


def kron(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Kronecker product with the first argument on the most significant axis."""
    return np.kron(np.asarray(a), np.asarray(b))


def kron_all(factors) -> np.ndarray:
    """Left-associated Kronecker product of a sequence of matrices."""
    out = np.asarray(factors[0])
    for f in factors[1:]:
        out = np.kron(out, f)
    return out


def partial_trace(m: np.ndarray, dim_a: int, dim_b: int, keep: str = "A") -> np.ndarray:
    """Trace out one tensor factor of a (dim_a*dim_b) square matrix.

    Args:
        m: square matrix on the product space A (x) B, A first.
        dim_a, dim_b: factor dimensions.
        keep: "A" returns tr_B(m), "B" returns tr_A(m).
    """
    m = np.asarray(m)
    d = dim_a * dim_b
    if m.shape != (d, d):
        raise ValueError(f"expected shape {(d, d)}, got {m.shape}")
    t = m.reshape(dim_a, dim_b, dim_a, dim_b)
    if keep == "A":
        return np.einsum("abcb->ac", t)
    if keep == "B":
        return np.einsum("abad->bd", t)
    raise ValueError(f"keep must be 'A' or 'B', got {keep!r}")


def is_hermitian(m: np.ndarray, atol: float = HERMITIAN_ATOL) -> bool:
    m = np.asarray(m)
    return bool(np.max(np.abs(m - m.conj().T)) <= atol)


def hermitian_eig(h: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Eigendecomposition of a Hermitian matrix.

    Returns (vals, vecs) with eigenvalues sorted in descending order and
    vecs[:, k] the unit eigenvector for vals[k].  Rejects non-Hermitian input.
    """
    h = np.asarray(h, dtype=complex)
    if not is_hermitian(h):
        raise ValueError("matrix is not Hermitian within 1e-12")
    vals, vecs = np.linalg.eigh(h)
    return vals[::-1].copy(), vecs[:, ::-1].copy()


def _int_log2(d: int) -> int:
    n = int(d).bit_length() - 1
    if d <= 0 or (1 << n) != d:
        raise ValueError(f"dimension {d} is not a power of two")
    return n


def pauli_word_matrix(letters) -> np.ndarray:
    """Tensor product of single-qubit Paulis given per-qubit letters in 0..3."""
    letters = tuple(int(c) for c in letters)
    if not letters:
        raise ValueError("empty Pauli word")
    if any(c not in (0, 1, 2, 3) for c in letters):
        raise ValueError(f"letters must be in 0..3, got {letters}")
    return kron_all([PAULIS[c] for c in letters])


@lru_cache(maxsize=8)
def pauli_word_basis(n_qubits: int) -> np.ndarray:
    """All 4**n n-qubit Pauli words as an array of shape (4**n, 2**n, 2**n).

    Index alpha is the base-4 encoding of the letters, first qubit most
    significant; alpha = 0 is the identity.
    """
    if n_qubits < 1:
        raise ValueError("need at least one qubit")
    basis = PAULIS
    words = np.array(basis, dtype=complex)
    for _ in range(n_qubits - 1):
        words = np.einsum("aij,bkl->abikjl", words, np.array(basis)).reshape(
            -1, words.shape[1] * 2, words.shape[1] * 2
        )
    return words


def index_to_letters(alpha: int, n_qubits: int) -> tuple[int, ...]:
    """Base-4 digits of alpha, most significant digit = first qubit."""
    if not 0 <= alpha < 4**n_qubits:
        raise ValueError(f"index {alpha} out of range for {n_qubits} qubits")
    letters = []
    for _ in range(n_qubits):
        letters.append(alpha % 4)
        alpha //= 4
    return tuple(reversed(letters))


def letters_to_index(letters) -> int:
    alpha = 0
    for c in letters:
        alpha = 4 * alpha + int(c)
    return alpha


@dataclass
class HermitianGenerator:
    """Hermitian operator on n qubits expanded in the Pauli-word basis.

    coeffs[alpha - 1] is the real coefficient of the word with base-4 index
    alpha; the identity component is fixed to zero (it only contributes a
    global phase under exponentiation).
    """

    n_qubits: int
    coeffs: np.ndarray = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        m = 4**self.n_qubits - 1
        if self.coeffs is None:
            self.coeffs = np.zeros(m)
        self.coeffs = np.asarray(self.coeffs, dtype=float)
        if self.coeffs.shape != (m,):
            raise ValueError(f"expected {m} coefficients, got {self.coeffs.shape}")

    @property
    def dim(self) -> int:
        return 2**self.n_qubits

    def matrix(self) -> np.ndarray:
        words = pauli_word_basis(self.n_qubits)
        return np.einsum("a,aij->ij", self.coeffs, words[1:])

    @classmethod
    def from_matrix(cls, h: np.ndarray) -> "HermitianGenerator":
        """Project a Hermitian matrix onto the traceless Pauli-word basis."""
        h = np.asarray(h, dtype=complex)
        if not is_hermitian(h):
            raise ValueError("matrix is not Hermitian within 1e-12")
        n = _int_log2(h.shape[0])
        words = pauli_word_basis(n)
        coeffs = np.einsum("aij,ji->a", words[1:], h).real / h.shape[0]
        return cls(n, coeffs)


def exp_i_hermitian(h) -> np.ndarray:
    """exp(i*H) for a Hermitian matrix or HermitianGenerator, via eig.

    exp(iH) = sum_k exp(i vals_k) |v_k><v_k|; the result is unitary to 1e-10.
    """
    if isinstance(h, HermitianGenerator):
        h = h.matrix()
    h = np.asarray(h, dtype=complex)
    if not is_hermitian(h):
        raise ValueError("generator is not Hermitian within 1e-12")
    vals, vecs = np.linalg.eigh(h)
    return (vecs * np.exp(1j * vals)) @ vecs.conj().T


def unitary_to_generator(u: np.ndarray) -> HermitianGenerator:
    """Hermitian H with exp(iH) equal to u up to global phase.

    Takes the principal matrix logarithm through the eigendecomposition and
    removes the trace, so the result conjugates identically to u.
    """
    u = np.asarray(u, dtype=complex)
    d = u.shape[0]
    if np.max(np.abs(u @ u.conj().T - np.eye(d))) > UNITARY_ATOL:
        raise ValueError("input is not unitary within 1e-10")
    # unitary matrices are normal, so the Schur form is an orthonormal
    # diagonalization; much tighter than a general eig here
    t, z = scipy.linalg.schur(u, output="complex")
    phases = np.angle(np.diagonal(t))
    h = (z * phases) @ z.conj().T
    h = (h + h.conj().T) / 2
    h = h - (np.trace(h).real / d) * np.eye(d)
    return HermitianGenerator.from_matrix(h)


def haar_unitary(dim: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-distributed unitary via QR of a Ginibre matrix with phase fix."""
    z = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    q, r = np.linalg.qr(z)
    return q * (np.diagonal(r) / np.abs(np.diagonal(r)))
