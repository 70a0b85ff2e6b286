import numpy as np
import pytest

from reupsim.linalg import (
    PAULIS,
    HermitianGenerator,
    exp_i_hermitian,
    haar_unitary,
    hermitian_eig,
    index_to_letters,
    kron,
    letters_to_index,
    partial_trace,
    pauli_word_basis,
    pauli_word_matrix,
    unitary_to_generator,
)

RNG = np.random.default_rng(11)


def random_hermitian(d, rng):
    m = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    return (m + m.conj().T) / 2


def random_density(d, rng):
    m = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    m = m @ m.conj().T
    return m / np.trace(m)


def test_kron_matches_block_structure():
    a = np.array([[1, 2], [3, 4]], dtype=complex)
    b = np.array([[0, 1j], [-1j, 0]])
    k = kron(a, b)
    assert k.shape == (4, 4)
    assert np.allclose(k[:2, :2], 1 * b)
    assert np.allclose(k[:2, 2:], 2 * b)
    assert np.allclose(k[2:, :2], 3 * b)


def test_kron_associative():
    rng = np.random.default_rng(0)
    a, b, c = (rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2)) for _ in range(3))
    assert np.allclose(kron(kron(a, b), c), kron(a, kron(b, c)), atol=1e-12)


def test_partial_trace_of_product_state():
    rng = np.random.default_rng(1)
    a = random_density(2, rng)
    b = random_density(4, rng)
    m = kron(a, b)
    assert np.max(np.abs(partial_trace(m, 2, 4, keep="A") - a)) < 1e-12
    assert np.max(np.abs(partial_trace(m, 2, 4, keep="B") - b)) < 1e-12


def test_partial_trace_preserves_trace_and_is_linear():
    rng = np.random.default_rng(2)
    for _ in range(5):
        m = rng.normal(size=(8, 8)) + 1j * rng.normal(size=(8, 8))
        n = rng.normal(size=(8, 8)) + 1j * rng.normal(size=(8, 8))
        for keep in ("A", "B"):
            ta = partial_trace(m, 2, 4, keep=keep)
            assert abs(np.trace(ta) - np.trace(m)) < 1e-12
            combo = partial_trace(2.5 * m - 1j * n, 2, 4, keep=keep)
            assert np.max(np.abs(combo - (2.5 * ta - 1j * partial_trace(n, 2, 4, keep=keep)))) < 1e-12


def test_partial_trace_rejects_bad_shape():
    with pytest.raises(ValueError):
        partial_trace(np.eye(6), 2, 4)
    with pytest.raises(ValueError):
        partial_trace(np.eye(8), 2, 4, keep="C")


def test_hermitian_eig_descending_and_reconstructs():
    h = random_hermitian(8, np.random.default_rng(3))
    vals, vecs = hermitian_eig(h)
    assert np.all(np.diff(vals) <= 1e-12)
    assert np.max(np.abs(vecs @ vecs.conj().T - np.eye(8))) < 1e-10
    assert np.max(np.abs((vecs * vals) @ vecs.conj().T - h)) < 1e-10
    assert abs(vals.sum() - np.trace(h).real) < 1e-10


def test_hermitian_eig_rejects_non_hermitian():
    m = np.array([[0.0, 1.0], [0.0, 0.0]])
    with pytest.raises(ValueError):
        hermitian_eig(m)


def test_exp_i_hermitian_known_values():
    # H = 0 -> identity
    assert np.max(np.abs(exp_i_hermitian(np.zeros((4, 4))) - np.eye(4))) < 1e-12
    # H = (pi/2) X -> exp(i pi X / 2) = i X
    u = exp_i_hermitian((np.pi / 2) * PAULIS[1])
    assert np.max(np.abs(u - 1j * PAULIS[1])) < 1e-12
    # z-rotation convention: exp(-i theta Z / 2)
    theta = 0.7
    u = exp_i_hermitian(-(theta / 2) * PAULIS[3])
    assert np.max(np.abs(u - np.diag([np.exp(-0.5j * theta), np.exp(0.5j * theta)]))) < 1e-12


def test_exp_i_hermitian_unitary_and_inverse():
    rng = np.random.default_rng(4)
    for _ in range(5):
        h = random_hermitian(8, rng)
        u = exp_i_hermitian(h)
        assert np.max(np.abs(u @ u.conj().T - np.eye(8))) < 1e-10
        assert np.max(np.abs(exp_i_hermitian(-h) @ u - np.eye(8))) < 1e-10


def test_pauli_word_indexing_roundtrip():
    for alpha in range(16):
        letters = index_to_letters(alpha, 2)
        assert letters_to_index(letters) == alpha
    # first qubit is the most significant base-4 digit
    assert index_to_letters(4, 2) == (1, 0)
    assert index_to_letters(3, 2) == (0, 3)


def test_pauli_word_basis_matches_explicit_kron():
    words = pauli_word_basis(2)
    assert words.shape == (16, 4, 4)
    for alpha in range(16):
        a, b = index_to_letters(alpha, 2)
        assert np.array_equal(words[alpha], np.kron(PAULIS[a], PAULIS[b]))
    assert np.allclose(pauli_word_matrix((1, 3)), np.kron(PAULIS[1], PAULIS[3]))


def test_hermitian_generator_matrix_and_projection():
    gen = HermitianGenerator(1, [0.0, 0.0, np.pi / 2])
    assert np.max(np.abs(gen.matrix() - (np.pi / 2) * PAULIS[3])) < 1e-12
    h = random_hermitian(8, np.random.default_rng(5))
    h -= np.trace(h) / 8 * np.eye(8)
    back = HermitianGenerator.from_matrix(h)
    assert back.n_qubits == 3
    assert np.max(np.abs(back.matrix() - h)) < 1e-10


def test_hermitian_generator_rejects_bad_length():
    with pytest.raises(ValueError):
        HermitianGenerator(2, np.zeros(7))


def test_unitary_to_generator_conjugates_identically():
    rng = np.random.default_rng(6)
    for d in (2, 4, 8):
        u = haar_unitary(d, rng)
        v = exp_i_hermitian(unitary_to_generator(u))
        # equal up to global phase: conjugation action must match exactly
        m = random_hermitian(d, rng)
        assert np.max(np.abs(u @ m @ u.conj().T - v @ m @ v.conj().T)) < 1e-9


def test_haar_unitary_is_unitary():
    u = haar_unitary(4, np.random.default_rng(7))
    assert np.max(np.abs(u @ u.conj().T - np.eye(4))) < 1e-10
