"""Reset-and-entangle layers acting on a single signal qubit.

Each layer rotates the signal about z, couples it unitarily to a fresh copy
of an n-qubit input state and traces the copy out.  The signal qubit is
always the first tensor factor.  The induced map on the signal Bloch vector
is affine; `layer_affine_map` extracts it exactly and `layer_transfer_tensor`
gives the same data resolved over the Pauli coefficients of the input, which
is what the trainer batches over.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .linalg import (
    PAULIS,
    HermitianGenerator,
    exp_i_hermitian,
    kron,
    partial_trace,
    pauli_word_basis,
    pauli_word_matrix,
)
from .states import DensityMatrix, PauliWord, bloch_vector, pauli_coeffs

COUPLING_VARIANTS = ("CNOT_BtoA", "CU_ij", "CU_alpha", "General")

UNITARY_ATOL = 1e-10


@dataclass
class CouplingSpec:
    """Which unitary couples the signal qubit to the uploaded state.

    CNOT_BtoA: CNOT controlled by a single environment qubit, target signal.
    CU_ij: applies signal Pauli sigma_i on the -1 eigenspace of environment
        Pauli sigma_j (single environment qubit, i and j in 1..3).
    CU_alpha: applies signal X on the -1 eigenspace of the environment Pauli
        word W_alpha (any non-identity word).
    General: exp(i H) for an arbitrary Hermitian generator on signal plus
        environment.
    """

    variant: str
    i: int = 0
    j: int = 0
    word: PauliWord = None
    generator: HermitianGenerator = None

    def __post_init__(self):
        if self.variant not in COUPLING_VARIANTS:
            raise ValueError(f"unknown coupling variant {self.variant!r}")
        if self.variant == "CU_ij":
            if self.i not in (1, 2, 3) or self.j not in (1, 2, 3):
                raise ValueError(f"CU_ij needs i, j in 1..3, got ({self.i}, {self.j})")
        if self.variant == "CU_alpha":
            if self.word is None or self.word.is_identity:
                raise ValueError("CU_alpha needs a non-identity Pauli word")
        if self.variant == "General":
            if self.generator is None or self.generator.n_qubits < 2:
                raise ValueError("General needs a generator on signal plus environment")

    @classmethod
    def cnot(cls) -> "CouplingSpec":
        return cls("CNOT_BtoA")

    @classmethod
    def cu_ij(cls, i: int, j: int) -> "CouplingSpec":
        return cls("CU_ij", i=i, j=j)

    @classmethod
    def cu_alpha(cls, word: PauliWord) -> "CouplingSpec":
        return cls("CU_alpha", word=word)

    @classmethod
    def general(cls, generator: HermitianGenerator) -> "CouplingSpec":
        return cls("General", generator=generator)

    @property
    def n_env(self) -> int:
        """Number of environment qubits the coupling acts on."""
        if self.variant in ("CNOT_BtoA", "CU_ij"):
            return 1
        if self.variant == "CU_alpha":
            return self.word.n_qubits
        return self.generator.n_qubits - 1


@dataclass
class LayerSpec:
    """One layer: z-rotation of the signal by theta, then the coupling."""

    theta: float
    coupling: CouplingSpec


@dataclass
class ReuploadModel:
    """Layer stack with linear Bloch readout f = w . r + b.

    initial_signal selects the signal start state: "plus" is |+><+| (Bloch
    (1,0,0)), "zero" is |0><0| (Bloch (0,0,1)).
    """

    n_qubits: int
    layers: list
    readout_w: np.ndarray
    readout_b: float
    initial_signal: str = "plus"

    def __post_init__(self):
        if len(self.layers) < 1:
            raise ValueError("model needs at least one layer")
        self.readout_w = np.asarray(self.readout_w, dtype=float)
        if self.readout_w.shape != (3,):
            raise ValueError("readout_w must be a 3-vector")
        self.readout_b = float(self.readout_b)
        if self.initial_signal not in ("plus", "zero"):
            raise ValueError(f"initial_signal must be 'plus' or 'zero', got {self.initial_signal!r}")
        for layer in self.layers:
            if layer.coupling.n_env != self.n_qubits:
                raise ValueError("coupling size does not match n_qubits")


@dataclass
class AffineBlochMap:
    """Affine action r -> m @ r + d of a layer on the signal Bloch vector."""

    m: np.ndarray
    d: np.ndarray

    def __post_init__(self):
        self.m = np.asarray(self.m, dtype=float)
        self.d = np.asarray(self.d, dtype=float)
        if self.m.shape != (3, 3) or self.d.shape != (3,):
            raise ValueError("affine map needs a 3x3 matrix and a 3-vector")

    def apply(self, r) -> np.ndarray:
        return self.m @ np.asarray(r, dtype=float) + self.d


def build_coupling(coupling: CouplingSpec, n_qubits: int) -> np.ndarray:
    """Dense coupling unitary on signal (x) environment, signal first."""
    if coupling.n_env != n_qubits:
        raise ValueError(f"coupling acts on {coupling.n_env} environment qubits, not {n_qubits}")
    d = 2**n_qubits
    if coupling.variant == "General":
        return exp_i_hermitian(coupling.generator)
    if coupling.variant == "CNOT_BtoA":
        w = PAULIS[3]
        sig = PAULIS[1]
    elif coupling.variant == "CU_ij":
        w = PAULIS[coupling.j]
        sig = PAULIS[coupling.i]
    else:
        w = pauli_word_matrix(coupling.word.letters)
        sig = PAULIS[1]
    eye = np.eye(d)
    return kron(PAULIS[0], (eye + w) / 2) + kron(sig, (eye - w) / 2)


def _rz(theta: float) -> np.ndarray:
    return np.array(
        [[np.exp(-0.5j * theta), 0.0], [0.0, np.exp(0.5j * theta)]], dtype=complex
    )


def rz_bloch(theta: float) -> np.ndarray:
    """Bloch rotation of the signal z-rotation: x -> (cos, sin, 0)."""
    c, s = np.cos(theta), np.sin(theta)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def layer_unitary(layer: LayerSpec, n_qubits: int) -> np.ndarray:
    """Full layer unitary: coupling after the signal z-rotation."""
    c = build_coupling(layer.coupling, n_qubits)
    return c @ kron(_rz(layer.theta), np.eye(2**n_qubits))


def _signal_start(which: str) -> np.ndarray:
    if which == "plus":
        return np.full((2, 2), 0.5, dtype=complex)
    return np.array([[1.0, 0.0], [0.0, 0.0]], dtype=complex)


def apply_layer(tau: DensityMatrix, rho: DensityMatrix, layer: LayerSpec) -> DensityMatrix:
    """Send the signal state tau through one layer fed with input rho."""
    if tau.n_qubits != 1:
        raise ValueError("signal must be a single qubit")
    u = layer_unitary(layer, rho.n_qubits)
    joint = u @ kron(tau.matrix, rho.matrix) @ u.conj().T
    out = partial_trace(joint, 2, rho.dim, keep="A")
    return DensityMatrix(out, 1)


def layer_transfer_tensor(layer: LayerSpec, n_qubits: int) -> np.ndarray:
    """Layer action resolved over Pauli components, shape (3, 4, 4**n).

    t[i, j, alpha] = tr[(sigma_i (x) I) U (sigma_j (x) W_alpha) U^dag] / 2d.
    The output Bloch vector is t contracted with (1, r) and (1, lam), where
    lam are the Pauli coefficients of the uploaded state.
    """
    d = 2**n_qubits
    u = layer_unitary(layer, n_qubits)
    sig = np.array(PAULIS)
    env = pauli_word_basis(n_qubits)
    ops = np.einsum("jab,kcd->jkacbd", sig, env).reshape(4 * 4**n_qubits, 2 * d, 2 * d)
    conj = np.matmul(np.matmul(u, ops), u.conj().T)
    red = np.einsum("mabcb->mac", conj.reshape(-1, 2, d, 2, d))
    t = np.einsum("iac,mca->mi", sig[1:], red).real.reshape(4, 4**n_qubits, 3)
    return np.transpose(t, (2, 0, 1)) / (2 * d)


def layer_affine_map(layer: LayerSpec, rho: DensityMatrix) -> AffineBlochMap:
    """Exact affine Bloch action of a layer for a fixed uploaded state."""
    t = layer_transfer_tensor(layer, rho.n_qubits)
    lam_ext = np.concatenate(([1.0], pauli_coeffs(rho).lam))
    v = np.einsum("ija,a->ij", t, lam_ext)
    return AffineBlochMap(v[:, 1:], v[:, 0])


def run_model(model: ReuploadModel, rho: DensityMatrix):
    """Run the full layer stack on input rho.

    Returns (r_final, f): the signal Bloch vector after the last layer and
    the readout value f = w . r_final + b.
    """
    if rho.n_qubits != model.n_qubits:
        raise ValueError(f"model expects {model.n_qubits}-qubit inputs")
    tau = DensityMatrix(_signal_start(model.initial_signal), 1)
    for layer in model.layers:
        tau = apply_layer(tau, rho, layer)
    r = bloch_vector(tau)
    return r, float(model.readout_w @ r + model.readout_b)


def expectation(tau: DensityMatrix, w, b: float, shots: int = 0, rng=None) -> float:
    """Readout w . r + b from the signal state, exactly or shot-sampled.

    With shots > 0 each Bloch component is estimated from shots // 3
    single-shot Pauli measurements.
    """
    r = bloch_vector(tau)
    w = np.asarray(w, dtype=float)
    if shots:
        if shots < 3:
            raise ValueError("need at least 3 shots, one per measured axis")
        if rng is None:
            raise ValueError("shot sampling needs an rng")
        m = shots // 3
        p = np.clip((1.0 + r) / 2.0, 0.0, 1.0)
        r = 2.0 * rng.binomial(m, p) / m - 1.0
    return float(w @ r + b)


def hadamard_test(rho: DensityMatrix, u: np.ndarray, imag: bool = False,
                  shots: int = 0, rng=None) -> float:
    """Ancilla interference estimate of Re tr(rho u), or Im with imag=True.

    The ancilla is the first factor: H, controlled-u, an S^dag phase for the
    imaginary part, H again, then <Z> on the ancilla.
    """
    u = np.asarray(u, dtype=complex)
    d = rho.dim
    if u.shape != (d, d):
        raise ValueError(f"unitary shape {u.shape} does not match state dimension {d}")
    if np.max(np.abs(u @ u.conj().T - np.eye(d))) > UNITARY_ATOL:
        raise ValueError("operator is not unitary within 1e-10")
    h = np.array([[1.0, 1.0], [1.0, -1.0]]) / np.sqrt(2.0)
    eye = np.eye(d)
    cu = np.zeros((2 * d, 2 * d), dtype=complex)
    cu[:d, :d] = eye
    cu[d:, d:] = u
    phase = kron(np.diag([1.0, -1j]), eye) if imag else np.eye(2 * d)
    full = kron(h, eye) @ phase @ cu @ kron(h, eye)
    joint = np.zeros((2 * d, 2 * d), dtype=complex)
    joint[:d, :d] = rho.matrix
    out = full @ joint @ full.conj().T
    val = float(np.trace(kron(PAULIS[3], eye) @ out).real)
    if shots:
        if rng is None:
            raise ValueError("shot sampling needs an rng")
        p = min(max((1.0 + val) / 2.0, 0.0), 1.0)
        val = 2.0 * rng.binomial(shots, p) / shots - 1.0
    return val


# ---------------------------------------------------------------------------
# JSON serialization


def _coupling_to_dict(c: CouplingSpec) -> dict:
    if c.variant == "CNOT_BtoA":
        return {"variant": "CNOT_BtoA"}
    if c.variant == "CU_ij":
        return {"variant": "CU_ij", "i": c.i, "j": c.j}
    if c.variant == "CU_alpha":
        return {"variant": "CU_alpha", "word": list(c.word.letters)}
    return {
        "variant": "General",
        "n_qubits": c.generator.n_qubits,
        "coeffs": [float(x) for x in c.generator.coeffs],
    }


def _coupling_from_dict(d: dict) -> CouplingSpec:
    variant = d["variant"]
    if variant == "CNOT_BtoA":
        return CouplingSpec.cnot()
    if variant == "CU_ij":
        return CouplingSpec.cu_ij(int(d["i"]), int(d["j"]))
    if variant == "CU_alpha":
        return CouplingSpec.cu_alpha(PauliWord(tuple(d["word"])))
    return CouplingSpec.general(
        HermitianGenerator(int(d["n_qubits"]), np.array(d["coeffs"], dtype=float))
    )


def model_to_json(model: ReuploadModel) -> str:
    """Serialize a model; floats round-trip bit-exactly through repr."""
    rec = {
        "n": model.n_qubits,
        "layers": [
            {"theta": float(l.theta), "coupling": _coupling_to_dict(l.coupling)}
            for l in model.layers
        ],
        "w": [float(x) for x in model.readout_w],
        "b": float(model.readout_b),
        "initial_signal": model.initial_signal,
    }
    return json.dumps(rec)


def model_from_json(text: str) -> ReuploadModel:
    rec = json.loads(text)
    layers = [
        LayerSpec(float(l["theta"]), _coupling_from_dict(l["coupling"]))
        for l in rec["layers"]
    ]
    return ReuploadModel(
        n_qubits=int(rec["n"]),
        layers=layers,
        readout_w=np.array(rec["w"], dtype=float),
        readout_b=float(rec["b"]),
        initial_signal=rec["initial_signal"],
    )
