import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.linalg import expm

from conftest import random_density
from hpqrc.errors import ConfigurationError
from hpqrc.quantum import (
    QuantumConfig,
    QuantumReservoir,
    apply_decoherence,
    apply_layer,
    apply_local,
    check_density,
    decoherence_kraus,
    encode_input,
    ground_state,
    kraus_superop,
    layer_unitary,
    measure_features,
    pauli_transfer_1q,
    pure_state,
    q_step,
    ry,
    unitary_superop,
    weak_measure,
    weak_measure_superop,
)

X = np.array([[0, 1], [1, 0]], dtype=complex)
Z = np.diag([1.0, -1.0]).astype(complex)
I2 = np.eye(2, dtype=complex)
PLUS = np.array([1, 1]) / math.sqrt(2)


def cfg(**kw):
    return QuantumConfig(**kw)


def expect(rho, op):
    return float(np.real(np.trace(rho @ op)))


def embed(op, qubit, n):
    out = np.array([[1.0]], dtype=complex)
    for q in range(n):
        out = np.kron(out, op if q == qubit else I2)
    return out


# -- encoding --------------------------------------------------------------

def test_encode_zero_angle_is_identity(rng):
    rho = random_density(rng, 3)
    assert np.allclose(encode_input(rho, 0.0, cfg(n_qubits=3)), rho, atol=1e-15)


def test_encode_pi_flips_single_qubit():
    out = encode_input(ground_state(1), math.pi, cfg(n_qubits=1))
    assert abs(expect(out, Z) + 1.0) < 1e-12
    assert abs(out[1, 1] - 1.0) < 1e-12


def test_encode_half_pi_zero_expectation():
    out = encode_input(ground_state(1), math.pi / 2, cfg(n_qubits=1))
    assert abs(expect(out, Z)) < 1e-12


def test_encode_preserves_trace(rng):
    rho = random_density(rng, 4)
    out = encode_input(rho, 1.234, cfg(n_qubits=4))
    assert abs(np.trace(out) - 1.0) < 1e-12


def test_encode_matches_dense_kron(rng):
    rho = random_density(rng, 3)
    u = np.kron(np.kron(ry(0.7), ry(0.7)), ry(0.7))
    assert np.allclose(encode_input(rho, 0.7, cfg(n_qubits=3)), u @ rho @ u.conj().T, atol=1e-13)


# -- layer -----------------------------------------------------------------

def test_layer_identity_when_couplings_zero(rng):
    rho = random_density(rng, 3)
    out = apply_layer(rho, cfg(n_qubits=3, coupling_J=0.0, field_h=0.0))
    assert np.allclose(out, rho, atol=1e-15)


def test_layer_zz_pi_flips_x_on_plus_plus():
    rho = pure_state(np.kron(PLUS, PLUS))
    x1 = embed(X, 0, 2)
    assert abs(expect(rho, x1) - 1.0) < 1e-12
    out = apply_layer(rho, cfg(n_qubits=2, coupling_J=math.pi, field_h=0.0))
    # Oracle: exponentiate the 4x4 generator directly.
    u = expm(-0.5j * math.pi * np.kron(Z, Z))
    ref = u @ rho @ u.conj().T
    assert np.allclose(out, ref, atol=1e-12)
    assert abs(expect(out, x1) + 1.0) < 1e-12


@given(st.floats(-4, 4), st.floats(-4, 4), st.integers(1, 4))
def test_layer_unitary_matches_generators(J, h, n):
    zz = sum(embed(Z, q, n) @ embed(Z, q + 1, n) for q in range(n - 1)) if n > 1 else np.zeros((2, 2))
    xs = sum(embed(X, q, n) for q in range(n))
    ref = expm(-0.5j * h * xs) @ expm(-0.5j * J * zz)
    u = layer_unitary(n, J, h)
    assert np.allclose(u, ref, atol=1e-11)
    assert np.max(np.abs(u.conj().T @ u - np.eye(1 << n))) < 1e-12


@given(st.floats(-4, 4), st.floats(-4, 4))
def test_layer_preserves_spectrum(J, h):
    rho = random_density(np.random.default_rng(7), 3)
    out = apply_layer(rho, cfg(n_qubits=3, coupling_J=J, field_h=h))
    assert np.allclose(np.linalg.eigvalsh(out), np.linalg.eigvalsh(rho), atol=1e-10)
    u = layer_unitary(3, J, h)
    assert np.allclose(out, u @ rho @ u.conj().T, atol=1e-12)


# -- decoherence -----------------------------------------------------------

def test_decoherence_zero_duration(rng):
    rho = random_density(rng, 2)
    assert np.allclose(apply_decoherence(rho, 0.0, cfg(n_qubits=2)), rho, atol=1e-15)


def test_decoherence_full_relaxation():
    one = np.diag([0.0, 1.0]).astype(complex)
    out = apply_decoherence(one, math.inf, cfg(n_qubits=1))
    assert np.array_equal(out, np.diag([1.0, 0.0]).astype(complex))


def test_t1_decay_point():
    one = np.diag([0.0, 1.0]).astype(complex)
    out = apply_decoherence(one, 10.0, cfg(n_qubits=1, t1_us=50.0))
    assert abs(out[1, 1].real - math.exp(-0.2)) < 1e-12


def test_coherence_decays_at_t2():
    rho = pure_state(PLUS)
    out = apply_decoherence(rho, 7.0, cfg(n_qubits=1, t1_us=50.0, t2_us=35.0))
    assert abs(abs(out[0, 1]) - 0.5 * math.exp(-7.0 / 35.0)) < 1e-12


def test_unphysical_t2_rejected():
    with pytest.raises(ConfigurationError):
        decoherence_kraus(1.0, 10.0, 25.0)
    with pytest.raises(ConfigurationError):
        cfg(t1_us=10.0, t2_us=25.0).validate()


def test_kraus_completeness_random_durations(rng):
    for dt in rng.exponential(30.0, 100):
        for ks in decoherence_kraus(float(dt), 50.0, 35.0):
            s = sum(k.conj().T @ k for k in ks)
            assert np.max(np.abs(s - I2)) < 1e-12


# -- weak measurement ------------------------------------------------------

def test_weak_measure_eigenstate_unchanged():
    for g in (0.0, 0.3, 1.0):
        f, out = weak_measure(ground_state(1), cfg(n_qubits=1, meas_strength=g))
        assert f.z_expect[0] == 1.0
        assert np.allclose(out, ground_state(1), atol=0)


def test_weak_measure_g0_leaves_state(rng):
    rho = random_density(rng, 3)
    f, out = weak_measure(rho, cfg(n_qubits=3, meas_strength=0.0))
    assert np.array_equal(out, rho)
    assert len(f) == 5


def test_full_measurement_dephases_plus():
    f, out = weak_measure(pure_state(PLUS), cfg(n_qubits=1, meas_strength=1.0))
    assert abs(f.z_expect[0]) < 1e-12
    assert abs(out[0, 1]) < 1e-12 and abs(out[1, 0]) < 1e-12


@given(st.floats(0, 1))
def test_weak_measure_matches_sequential_blend(g):
    rho = random_density(np.random.default_rng(3), 3)
    _, out = weak_measure(rho, cfg(n_qubits=3, meas_strength=g))
    ref = rho
    p0, p1 = np.diag([1.0, 0.0]), np.diag([0.0, 1.0])
    for q in range(3):
        P0, P1 = embed(p0, q, 3), embed(p1, q, 3)
        ref = (1 - g) * ref + g * (P0 @ ref @ P0 + P1 @ ref @ P1)
    assert np.allclose(out, ref, atol=1e-14)


@given(st.floats(0, 1), st.floats(0, 1))
def test_features_invariant_to_strength(g1, g2):
    rho = random_density(np.random.default_rng(5), 3)
    f1, _ = weak_measure(rho, cfg(n_qubits=3, meas_strength=g1))
    f2, _ = weak_measure(rho, cfg(n_qubits=3, meas_strength=g2))
    assert np.array_equal(f1.as_vector(), f2.as_vector())


def test_features_match_trace_formula(rng):
    rho = random_density(rng, 4)
    f = measure_features(rho)
    for q in range(4):
        assert abs(f.z_expect[q] - expect(rho, embed(Z, q, 4))) < 1e-12
    for q in range(3):
        assert abs(f.zz_expect[q] - expect(rho, embed(Z, q, 4) @ embed(Z, q + 1, 4))) < 1e-12


def test_full_dephasing_idempotent(rng):
    c = cfg(n_qubits=2, meas_strength=1.0)
    rho = random_density(rng, 2)
    _, once = weak_measure(rho, c)
    f2, twice = weak_measure(once, c)
    assert np.allclose(once, twice, atol=1e-15)
    assert np.allclose(f2.as_vector(), measure_features(rho).as_vector(), atol=1e-14)


# -- full step -------------------------------------------------------------

def test_q_step_identity_pipeline(rng):
    c = cfg(n_qubits=3, coupling_J=0.0, field_h=0.0, layer_dt=0.0, meas_strength=0.0)
    rho = random_density(rng, 3)
    out, f = q_step(rho, 0.0, c)
    assert np.allclose(out, rho, atol=1e-15)
    assert np.allclose(f.as_vector(), measure_features(rho).as_vector(), atol=1e-15)


def test_q_step_default_shape_and_range(rng):
    rho = ground_state(5)
    for x in rng.uniform(0, math.pi, 5):
        rho, f = q_step(rho, float(x), cfg())
        v = f.as_vector()
        assert v.shape == (9,) and np.all(np.abs(v) <= 1.0)


def test_q_step_single_qubit_oracle():
    c = cfg(n_qubits=1, n_layers=1, field_h=0.0, layer_dt=0.0, meas_strength=0.0)
    _, f = q_step(ground_state(1), math.pi / 2, c)
    # Hand evolution: Ry(pi/2)|0> = (|0> + |1>)/sqrt(2), so <Z> = 1/2 - 1/2.
    assert abs(f.z_expect[0]) < 1e-12


def test_random_op_sequences_keep_density_valid():
    rng = np.random.default_rng(11)
    for _ in range(100):
        n = int(rng.integers(1, 5))
        rho = random_density(rng, n, rank=int(rng.integers(1, (1 << n) + 1)))
        c = cfg(n_qubits=n, coupling_J=float(rng.normal()), field_h=float(rng.normal()),
                meas_strength=float(rng.random()), t2_us=float(rng.uniform(1, 100)))
        for op in rng.integers(0, 4, 6):
            if op == 0:
                rho = encode_input(rho, float(rng.uniform(0, math.pi)), c)
            elif op == 1:
                rho = apply_layer(rho, c)
            elif op == 2:
                rho = apply_decoherence(rho, float(rng.exponential(5.0)), c)
            else:
                rho = weak_measure(rho, c)[1]
        check_density(rho)


def test_apply_local_matches_dense_superoperator(rng):
    rho = random_density(rng, 3)
    u = ry(0.4) @ X
    for q in range(3):
        U = embed(u, q, 3)
        assert np.allclose(apply_local(rho, q, unitary_superop(u)), U @ rho @ U.conj().T, atol=1e-14)


def test_apply_local_batched(rng):
    batch = np.stack([random_density(rng, 2) for _ in range(4)])
    s = kraus_superop(decoherence_kraus(3.0, 50.0, 35.0)[0])
    out = apply_local(batch, 1, s)
    for b in range(4):
        assert np.allclose(out[b], apply_local(batch[b], 1, s), atol=1e-15)


def test_weak_measure_superop_limits():
    rho = pure_state(PLUS)
    assert np.allclose(apply_local(rho, 0, weak_measure_superop(0.0)), rho)
    assert np.allclose(apply_local(rho, 0, weak_measure_superop(1.0)), np.diag([0.5, 0.5]))


# -- reservoir backends ----------------------------------------------------

@pytest.mark.parametrize("n,backend", [(1, "pauli"), (3, "pauli"), (3, "local"), (5, "pauli"), (6, "local")])
def test_reservoir_matches_reference_step(n, backend):
    c = cfg(n_qubits=n, coupling_J=0.9, field_h=0.7, meas_strength=0.4)
    res = QuantumReservoir(c, backend=backend)
    rho = ground_state(n)
    xs = np.random.default_rng(2).uniform(0, math.pi, 8)
    for x in xs:
        rho, f = q_step(rho, float(x), c)
        v = res.step(float(x))
        assert np.max(np.abs(v - f.as_vector())) < 1e-12
    assert np.max(np.abs(res.rho - rho)) < 1e-12


def test_reservoir_input_masks():
    c = cfg(n_qubits=3, input_masks=True, seed=9)
    angles = c.qubit_angles(1.0)
    assert not np.allclose(angles, angles[0])
    res_p = QuantumReservoir(c, backend="pauli")
    res_l = QuantumReservoir(c, backend="local")
    for x in (0.3, 1.1, 2.0):
        assert np.allclose(res_p.step(x), res_l.step(x), atol=1e-12)


def test_pauli_transfer_of_rotation():
    m = pauli_transfer_1q(ry(0.8))
    # Ry rotates the X-Z plane and leaves I and Y untouched.
    assert np.allclose(m[[0, 2]][:, [0, 2]], np.eye(2), atol=1e-15)
    assert np.allclose(m[[1, 3]][:, [1, 3]], [[math.cos(0.8), math.sin(0.8)], [-math.sin(0.8), math.cos(0.8)]], atol=1e-15)


def test_fading_memory():
    c = cfg()
    psi = np.zeros(32, dtype=complex)
    psi[-1] = 1.0
    a, b = QuantumReservoir(c), QuantumReservoir(c, rho=pure_state(psi))
    for x in np.random.default_rng(1).uniform(0, math.pi, 200):
        fa, fb = a.step(float(x)), b.step(float(x))
    assert np.linalg.norm(fa - fb) < 1e-3


def test_config_validation():
    for bad in ({"n_qubits": 0}, {"n_qubits": 11}, {"n_layers": 0}, {"meas_strength": 1.5}, {"layer_dt": -1.0}):
        with pytest.raises(ConfigurationError):
            cfg(**bad).validate()


def test_reservoir_deterministic():
    a = QuantumReservoir(cfg()).run(np.linspace(0, 3, 30))
    b = QuantumReservoir(cfg()).run(np.linspace(0, 3, 30))
    assert a.tobytes() == b.tobytes()
