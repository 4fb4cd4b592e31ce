"""Density-matrix quantum reservoir.

States are ``(2**n, 2**n)`` complex arrays with qubit 0 as the most
significant bit of the basis index. Every single-qubit operation is expressed
as a local superoperator ``S[i, j, k, l]`` acting as
``rho'[.. i .., .. j ..] = sum_kl S[i, j, k, l] rho[.. k .., .. l ..]`` on that
qubit's row and column indices, which keeps the cost at ``O(4**n)`` per gate.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, ParameterError

MAX_QUBITS = 10

_I2 = np.eye(2, dtype=complex)
_Z2 = np.diag([1.0, -1.0]).astype(complex)
_P0 = np.diag([1.0, 0.0]).astype(complex)
_P1 = np.diag([0.0, 1.0]).astype(complex)


@dataclass(frozen=True)
class QuantumConfig:
    n_qubits: int = 5
    n_layers: int = 10
    coupling_J: float = 0.6
    field_h: float = 1.0
    layer_dt: float = 1.0  # microseconds
    t1_us: float = 50.0
    t2_us: float = 35.0
    meas_strength: float = 0.5
    seed: int = 42
    input_masks: bool = False

    def validate(self) -> "QuantumConfig":
        if not 1 <= self.n_qubits <= MAX_QUBITS:
            raise ConfigurationError(f"n_qubits must be in [1, {MAX_QUBITS}], got {self.n_qubits}")
        if self.n_layers < 1:
            raise ConfigurationError("n_layers must be >= 1")
        if not (self.t1_us > 0 and self.t2_us > 0):
            raise ConfigurationError("t1_us and t2_us must be positive")
        if self.t2_us > 2 * self.t1_us:
            raise ConfigurationError(f"t2_us={self.t2_us} exceeds 2*t1_us={2 * self.t1_us} (unphysical)")
        if not 0 <= self.meas_strength <= 1:
            raise ConfigurationError("meas_strength must lie in [0, 1]")
        if self.layer_dt < 0:
            raise ConfigurationError("layer_dt must be >= 0")
        return self

    def qubit_angles(self, theta: float) -> np.ndarray:
        """Per-qubit encoding angles; uniform unless ``input_masks`` is set."""
        if not self.input_masks:
            return np.full(self.n_qubits, float(theta))
        mask = np.random.default_rng(self.seed).uniform(0.5, 1.5, self.n_qubits)
        return theta * mask


@dataclass
class QuantumFeatures:
    z_expect: np.ndarray
    zz_expect: np.ndarray

    def as_vector(self) -> np.ndarray:
        return np.concatenate([self.z_expect, self.zz_expect])

    def __len__(self) -> int:
        return len(self.z_expect) + len(self.zz_expect)


def n_qubits_of(rho: np.ndarray) -> int:
    d = rho.shape[-1]
    n = d.bit_length() - 1
    if d != 1 << n or rho.shape[-2] != d:
        raise ParameterError(f"density matrix shape {rho.shape} is not 2^n x 2^n")
    return n


def ground_state(n_qubits: int) -> np.ndarray:
    d = 1 << n_qubits
    rho = np.zeros((d, d), dtype=complex)
    rho[0, 0] = 1.0
    return rho


def pure_state(psi) -> np.ndarray:
    psi = np.asarray(psi, dtype=complex)
    psi = psi / np.linalg.norm(psi)
    return np.outer(psi, psi.conj())


def check_density(rho: np.ndarray, herm_tol=1e-12, trace_tol=1e-10, eig_tol=1e-9) -> None:
    """Raise ``ParameterError`` unless ``rho`` is a valid density matrix."""
    herm = np.max(np.abs(rho - rho.conj().T))
    if herm > herm_tol:
        raise ParameterError(f"density matrix not Hermitian (deviation {herm:.3e})")
    tr = abs(np.trace(rho) - 1.0)
    if tr > trace_tol:
        raise ParameterError(f"density matrix trace deviates from 1 by {tr:.3e}")
    lam = np.linalg.eigvalsh(0.5 * (rho + rho.conj().T))[0]
    if lam < -eig_tol:
        raise ParameterError(f"density matrix has negative eigenvalue {lam:.3e}")


# -- local superoperators -------------------------------------------------

def unitary_superop(u: np.ndarray) -> np.ndarray:
    return np.einsum("ik,jl->ijkl", u, u.conj())


def kraus_superop(kraus) -> np.ndarray:
    return sum(np.einsum("ik,jl->ijkl", k, k.conj()) for k in kraus)


def compose_superops(*ops: np.ndarray) -> np.ndarray:
    """Superoperator of applying ``ops[0]`` first, then ``ops[1]``, ..."""
    out = np.einsum("ik,jl->ijkl", _I2, _I2)
    for s in ops:
        out = np.einsum("ijab,abkl->ijkl", s, out)
    return out


def apply_local(rho: np.ndarray, qubit: int, superop: np.ndarray) -> np.ndarray:
    """Apply a single-qubit superoperator; ``rho`` may carry leading batch axes."""
    n = n_qubits_of(rho)
    batch = rho.shape[:-2]
    hi, lo = 1 << qubit, 1 << (n - qubit - 1)
    r = rho.reshape(*batch, hi, 2, lo, hi, 2, lo)
    nb = len(batch)
    # Bring this qubit's row and column axes to the front, contract, restore.
    moved = np.moveaxis(r, (nb + 1, nb + 4), (0, 1))
    out = np.tensordot(superop, moved, axes=([2, 3], [0, 1]))
    return np.moveaxis(out, (0, 1), (nb + 1, nb + 4)).reshape(rho.shape)


def ry(theta: float) -> np.ndarray:
    c, s = math.cos(theta / 2), math.sin(theta / 2)
    return np.array([[c, -s], [s, c]], dtype=complex)


def rx(theta: float) -> np.ndarray:
    c, s = math.cos(theta / 2), math.sin(theta / 2)
    return np.array([[c, -1j * s], [-1j * s, c]], dtype=complex)


def decoherence_probs(dt_us: float, t1_us: float, t2_us: float) -> tuple[float, float]:
    """Amplitude-damping and pure-dephasing probabilities over ``dt_us``."""
    if t2_us > 2 * t1_us:
        raise ConfigurationError(f"t2_us={t2_us} exceeds 2*t1_us={2 * t1_us} (unphysical)")
    if dt_us < 0:
        raise ParameterError("dt_us must be >= 0")
    if math.isinf(dt_us):
        return 1.0, (1.0 if t2_us < 2 * t1_us else 0.0)
    p1 = -math.expm1(-dt_us / t1_us)
    pphi = -math.expm1(-dt_us * (1.0 / t2_us - 1.0 / (2.0 * t1_us)))
    return p1, pphi


def decoherence_kraus(dt_us: float, t1_us: float, t2_us: float) -> tuple[list, list]:
    """Kraus sets for amplitude damping and pure dephasing over ``dt_us``.

    Dephasing uses the phase-flip form so that, composed with amplitude
    damping, coherences decay exactly as ``exp(-dt/T2)``.
    """
    p1, pphi = decoherence_probs(dt_us, t1_us, t2_us)
    damp = [
        np.array([[1.0, 0.0], [0.0, math.sqrt(1.0 - p1)]], dtype=complex),
        np.array([[0.0, math.sqrt(p1)], [0.0, 0.0]], dtype=complex),
    ]
    dephase = [math.sqrt(1.0 - pphi / 2.0) * _I2, math.sqrt(pphi / 2.0) * _Z2]
    return damp, dephase


def decoherence_superop(dt_us: float, t1_us: float, t2_us: float) -> np.ndarray:
    damp, _ = decoherence_kraus(dt_us, t1_us, t2_us)
    _, pphi = decoherence_probs(dt_us, t1_us, t2_us)
    # The phase-flip channel keeps populations and scales coherences by
    # 1 - p_phi; writing it directly avoids sqrt round-off in the Kraus sum.
    phase = np.zeros((2, 2, 2, 2), dtype=complex)
    for i in range(2):
        for j in range(2):
            phase[i, j, i, j] = 1.0 if i == j else 1.0 - pphi
    return compose_superops(kraus_superop(damp), phase)


def weak_measure_superop(g: float) -> np.ndarray:
    full = kraus_superop([_P0, _P1])
    return (1.0 - g) * np.einsum("ik,jl->ijkl", _I2, _I2) + g * full


def zz_phases(n: int, coupling: float) -> np.ndarray:
    """Elementwise factor implementing conjugation by prod exp(-i J Z_q Z_q+1 / 2)."""
    d = 1 << n
    idx = np.arange(d)
    bits = (idx[:, None] >> (n - 1 - np.arange(n))[None, :]) & 1
    z = 1 - 2 * bits
    energy = np.sum(z[:, :-1] * z[:, 1:], axis=1) if n > 1 else np.zeros(d)
    phase = np.exp(-0.5j * coupling * energy)
    return np.outer(phase, phase.conj())


def _z_signs(n: int) -> np.ndarray:
    idx = np.arange(1 << n)
    bits = (idx[:, None] >> (n - 1 - np.arange(n))[None, :]) & 1
    return (1 - 2 * bits).astype(float)


# -- reservoir operations --------------------------------------------------

def encode_input(rho: np.ndarray, theta: float, config: QuantumConfig) -> np.ndarray:
    """Rotate every qubit about Y by ``theta``."""
    if not math.isfinite(theta):
        raise ParameterError("encoding angle must be finite")
    n = n_qubits_of(rho)
    angles = config.qubit_angles(theta) if config.n_qubits == n else np.full(n, float(theta))
    for q in range(n):
        rho = apply_local(rho, q, unitary_superop(ry(angles[q])))
    return rho


def apply_layer(rho: np.ndarray, config: QuantumConfig) -> np.ndarray:
    """One reservoir layer: ZZ couplings on the open chain, then X rotations."""
    n = n_qubits_of(rho)
    rho = rho * zz_phases(n, config.coupling_J)
    sx = unitary_superop(rx(config.field_h))
    for q in range(n):
        rho = apply_local(rho, q, sx)
    return rho


def layer_unitary(n: int, coupling: float, field: float) -> np.ndarray:
    """Dense layer unitary; used for checks, not for evolution."""
    d = 1 << n
    zz = np.exp(-0.5j * coupling * np.sum(_z_signs(n)[:, :-1] * _z_signs(n)[:, 1:], axis=1)) if n > 1 else np.ones(d)
    x = np.array([[1.0]], dtype=complex)
    for _ in range(n):
        x = np.kron(x, rx(field))
    return x @ np.diag(zz)


def apply_decoherence(rho: np.ndarray, dt_us: float, config: QuantumConfig) -> np.ndarray:
    """Per-qubit amplitude damping and pure dephasing over ``dt_us``."""
    s = decoherence_superop(dt_us, config.t1_us, config.t2_us)
    for q in range(n_qubits_of(rho)):
        rho = apply_local(rho, q, s)
    return rho


def measure_features(rho: np.ndarray) -> QuantumFeatures:
    """Exact single-qubit Z and nearest-neighbour ZZ expectations."""
    n = n_qubits_of(rho)
    p = np.real(np.diagonal(rho, axis1=-2, axis2=-1))
    z = _z_signs(n)
    z_exp = p @ z
    zz_exp = p @ (z[:, :-1] * z[:, 1:]) if n > 1 else np.zeros(0)
    return QuantumFeatures(np.clip(z_exp, -1.0, 1.0), np.clip(zz_exp, -1.0, 1.0))


def weak_measure(rho: np.ndarray, config: QuantumConfig) -> tuple[QuantumFeatures, np.ndarray]:
    """Read out expectations, then apply partial computational-basis dephasing.

    Each qubit in turn undergoes ``rho -> (1-g) rho + g (P0 rho P0 + P1 rho P1)``,
    so a coherence between basis states differing in ``k`` bits is scaled by
    ``(1-g)**k``.
    """
    feats = measure_features(rho)
    g = config.meas_strength
    if not 0 <= g <= 1:
        raise ConfigurationError("meas_strength must lie in [0, 1]")
    if g == 0:
        return feats, rho
    n = n_qubits_of(rho)
    z = _z_signs(n)
    hamming = (n - z @ z.T) / 2.0
    return feats, rho * (1.0 - g) ** hamming


def q_step(rho: np.ndarray, x_norm: float, config: QuantumConfig) -> tuple[np.ndarray, QuantumFeatures]:
    """Encode one input, evolve ``n_layers`` noisy layers, weakly measure."""
    rho = encode_input(rho, x_norm, config)
    for _ in range(config.n_layers):
        rho = apply_layer(rho, config)
        rho = apply_decoherence(rho, config.layer_dt, config)
    feats, rho = weak_measure(rho, config)
    return rho, feats


_PAULIS = np.array([_I2, [[0, 1], [1, 0]], [[0, -1j], [1j, 0]], _Z2], dtype=complex)

# Largest register evolved in the Pauli-transfer representation; above this
# the dense transfer matrix (16**n entries) is too large to hold.
PAULI_MAX_QUBITS = 5


def pauli_strings(n: int) -> np.ndarray:
    """All ``4**n`` Pauli strings, index digit ``q`` (base 4, MSB first) for qubit ``q``."""
    stack = _PAULIS
    for _ in range(n - 1):
        k, d = stack.shape[0], stack.shape[1]
        stack = np.einsum("aij,bkl->abikjl", stack, _PAULIS).reshape(k * 4, d * 2, d * 2)
    return stack


def pauli_transfer_1q(u: np.ndarray) -> np.ndarray:
    """Real 4x4 matrix ``R[q, p] = Tr(s_q U s_p U^dag) / 2``."""
    conj = np.einsum("ij,pjk,lk->pil", u, _PAULIS, u.conj())
    return np.real(np.einsum("qji,pij->qp", _PAULIS, conj)) / 2.0


@functools.lru_cache(maxsize=16)
def _step_operators(config: QuantumConfig):
    dec = decoherence_superop(config.layer_dt, config.t1_us, config.t2_us)
    sx = unitary_superop(rx(config.field_h))
    return (
        zz_phases(config.n_qubits, config.coupling_J),
        compose_superops(sx, dec),
        compose_superops(sx, dec, weak_measure_superop(config.meas_strength)),
    )


def _evolve(rho, config, zz, layer_local, last_local):
    """Layers, decoherence and back-action (no encoding); batch axes allowed."""
    last = config.n_layers - 1
    for layer in range(config.n_layers):
        rho = rho * zz
        local = last_local if layer == last else layer_local
        for q in range(config.n_qubits):
            rho = apply_local(rho, q, local)
    return rho


@functools.lru_cache(maxsize=8)
def _pauli_transfer(config: QuantumConfig) -> np.ndarray:
    n = config.n_qubits
    d = 1 << n
    paulis = pauli_strings(n)
    evolved = _evolve(paulis / d, config, *_step_operators(config)).reshape(d * d, d * d)
    # r'_q = Tr(P_q E(P_p / d)) r_p; P_q^T flattened row-wise gives the trace pairing.
    flat_t = paulis.transpose(0, 2, 1).reshape(d * d, d * d)
    transfer = np.ascontiguousarray(np.real(flat_t @ evolved.T))
    transfer.flags.writeable = False
    return transfer


class QuantumReservoir:
    """Stateful reservoir equivalent to repeated :func:`q_step`.

    For registers up to ``PAULI_MAX_QUBITS`` the state is carried as its real
    Pauli coefficient vector ``r_p = Tr(P_p rho)`` and everything after the
    input rotation is one precomputed real transfer matrix. Larger registers
    use fused per-qubit superoperators on the density matrix.
    """

    def __init__(self, config: QuantumConfig, rho: np.ndarray | None = None, backend: str = "auto"):
        self.config = config.validate()
        n = config.n_qubits
        self.n = n
        if backend == "auto":
            backend = "pauli" if n <= PAULI_MAX_QUBITS else "local"
        if backend not in ("pauli", "local"):
            raise ParameterError(f"unknown backend {backend!r}")
        self.backend = backend
        self._zz, self._layer_local, self._last_local = _step_operators(config)
        rho = ground_state(n) if rho is None else np.array(rho, dtype=complex)
        if backend == "pauli":
            self._paulis = pauli_strings(n)
            self._transfer = _pauli_transfer(config)
            self._z_idx = [3 * 4 ** (n - 1 - q) for q in range(n)]
            self._zz_idx = [3 * 4 ** (n - 1 - q) + 3 * 4 ** (n - 2 - q) for q in range(n - 1)]
            self._feat_idx = np.array(self._z_idx + self._zz_idx, dtype=int)
            self.rho = rho
        else:
            self._rho = rho
            self._zsig = _z_signs(n)
            self._zzsig = self._zsig[:, :-1] * self._zsig[:, 1:]

    @property
    def rho(self) -> np.ndarray:
        if self.backend == "pauli":
            return np.einsum("p,pij->ij", self._r, self._paulis) / (1 << self.n)
        return self._rho

    @rho.setter
    def rho(self, value: np.ndarray) -> None:
        value = np.array(value, dtype=complex)
        if self.backend == "pauli":
            self._r = np.real(np.einsum("pji,ij->p", self._paulis, value))
        else:
            self._rho = value

    @property
    def n_features(self) -> int:
        return 2 * self.n - 1

    def _evolve(self, rho: np.ndarray) -> np.ndarray:
        return _evolve(rho, self.config, self._zz, self._layer_local, self._last_local)

    def step(self, x_norm: float) -> np.ndarray:
        """Advance one input and return the feature vector ``[Z..., ZZ...]``."""
        angles = self.config.qubit_angles(x_norm)
        if self.backend == "pauli":
            r = self._r
            uniform = not self.config.input_masks
            rot = pauli_transfer_1q(ry(angles[0])) if uniform else None
            for q in range(self.n):
                m = rot if uniform else pauli_transfer_1q(ry(angles[q]))
                # Rotating the leading axis to the back visits every qubit once.
                r = (m @ r.reshape(4, -1)).T.reshape(-1)
            r = self._transfer @ r
            self._r = r
            feats = r[self._feat_idx]
        else:
            rho = self._rho
            for q in range(self.n):
                rho = apply_local(rho, q, unitary_superop(ry(angles[q])))
            # Back-action leaves the diagonal intact, so the readout order is immaterial.
            rho = self._evolve(rho)
            self._rho = rho
            p = np.real(np.diagonal(rho))
            feats = np.concatenate([p @ self._zsig, p @ self._zzsig])
        return np.clip(feats, -1.0, 1.0)

    def run(self, inputs) -> np.ndarray:
        out = np.empty((len(inputs), self.n_features))
        for t, x in enumerate(inputs):
            out[t] = self.step(float(x))
        return out
