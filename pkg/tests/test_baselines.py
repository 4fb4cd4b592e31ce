import cmath
import math
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hpqrc.baselines import (
    ESN_CHAOS,
    ESN_DATASET,
    EsnConfig,
    ar_one_step,
    esn_init,
    esn_run,
    fit_ar_aic,
    quantum_only_config,
    quantum_only_run,
    spectral_radius,
)
from hpqrc.data import SupervisedSet
from hpqrc.errors import ConfigurationError, DegenerateError, SizingError
from hpqrc.pipeline import HybridConfig, run_pipeline
from hpqrc.quantum import QuantumConfig


# ESN

def power_iteration_radius(w, iters=3000):
    """Spectral radius from ||W^k v||^(1/k); independent of the eigvals path."""
    v = np.random.default_rng(0).normal(size=w.shape[0])
    log_growth = 0.0
    for _ in range(iters):
        v = w @ v
        n = np.linalg.norm(v)
        log_growth += math.log(n)
        v /= n
    return math.exp(log_growth / iters)


def test_presets():
    assert ESN_CHAOS.n_nodes == 500 and ESN_DATASET.n_nodes == 1000
    assert ESN_CHAOS.spectral_radius == 0.95


@pytest.mark.parametrize("seed", range(20))
def test_spectral_radius_is_rescaled(seed):
    esn = esn_init(EsnConfig(n_nodes=200, seed=seed))
    assert abs(spectral_radius(esn.w) - 0.95) <= 1e-6


def test_power_iteration_agrees_roughly():
    esn = esn_init(EsnConfig(n_nodes=200, seed=3))
    # Complex leading pairs make plain power iteration oscillate; it still bounds the growth rate.
    assert power_iteration_radius(esn.w) == pytest.approx(0.95, rel=0.02)


def test_same_seed_same_weights():
    a, b = esn_init(EsnConfig(n_nodes=100, seed=9)), esn_init(EsnConfig(n_nodes=100, seed=9))
    np.testing.assert_array_equal(a.w, b.w)
    np.testing.assert_array_equal(a.w_in, b.w_in)
    assert not np.array_equal(a.w, esn_init(EsnConfig(n_nodes=100, seed=10)).w)


def test_two_by_two_hand_rescaling():
    cfg = EsnConfig(n_nodes=2, density=1.0, seed=5)
    rng = np.random.default_rng(5)
    raw = rng.uniform(-1, 1, (2, 2))
    rng.random((2, 2))  # sparsity draw, all kept at density 1
    (a, b), (c, d) = raw
    tr, det = a + d, a * d - b * c
    disc = cmath.sqrt(tr * tr / 4 - det)
    rho = max(abs(tr / 2 + disc), abs(tr / 2 - disc))
    np.testing.assert_allclose(esn_init(cfg).w, raw * 0.95 / rho, rtol=0, atol=1e-15)


def test_zero_matrix_is_rejected():
    with pytest.raises(ConfigurationError, match="density"):
        esn_init(EsnConfig(n_nodes=1, density=1e-9, seed=0))


def test_config_validation():
    for bad in (dict(n_nodes=0), dict(spectral_radius=0), dict(leak_rate=0), dict(leak_rate=1.5), dict(density=0)):
        with pytest.raises(ConfigurationError):
            replace(EsnConfig(), **bad).validate()


def test_zero_input_keeps_zero_state():
    rows, _ = esn_run(np.zeros(50), EsnConfig(n_nodes=50))
    np.testing.assert_array_equal(rows, 0.0)


@settings(max_examples=20)
@given(seed=st.integers(0, 10_000), scale=st.floats(0.1, 100))
def test_states_stay_inside_open_unit_box(seed, scale):
    u = np.random.default_rng(seed).normal(0, scale, 200)
    rows, _ = esn_run(u, EsnConfig(n_nodes=60, seed=seed, leak_rate=0.9, input_scale=2.0))
    assert np.all(np.abs(rows) <= 1.0)
    assert np.all(np.linalg.norm(rows, axis=1) <= math.sqrt(60))


def test_echo_state_property():
    cfg = EsnConfig()
    u = np.random.default_rng(0).random(500)
    a, b = esn_init(cfg), esn_init(cfg)
    b.state = np.random.default_rng(1).uniform(-1, 1, cfg.n_nodes)
    for x in u:
        a.step(x)
        b.step(x)
    assert np.linalg.norm(a.state - b.state) < 1e-6


def test_esn_run_washout_and_reuse():
    cfg = EsnConfig(n_nodes=30, density=0.5)
    u = np.linspace(0, 1, 40)
    full, _ = esn_run(u, cfg)
    cut, esn = esn_run(u, cfg, washout=10)
    np.testing.assert_array_equal(cut, full[10:])
    more, _ = esn_run([0.5], cfg, esn=esn)
    ref, _ = esn_run(np.append(u, 0.5), cfg)
    np.testing.assert_array_equal(more[0], ref[-1])


# quantum-only

def test_quantum_only_dimension():
    rows, _ = quantum_only_run(np.linspace(0, 1, 3))
    assert rows.shape == (3, 15)
    with pytest.raises(ConfigurationError):
        quantum_only_config(n_qubits=11)


def _identity_config(n):
    return QuantumConfig(n_qubits=n, coupling_J=0.0, field_h=0.0, meas_strength=0.0, layer_dt=0.0)


def test_quantum_only_zero_input_identity_pipeline():
    rows, _ = quantum_only_run(np.zeros(4), n_qubits=8, config=_identity_config(8))
    np.testing.assert_allclose(rows, 1.0, atol=1e-12)


def test_quantum_only_single_qubit_oracle():
    # Only the input rotations act, so successive Ry angles add: <Z> = cos(pi * cumulative input).
    x = np.array([0.1, 0.25, 0.4])
    rows, _ = quantum_only_run(x, n_qubits=1, config=_identity_config(1))
    np.testing.assert_allclose(rows[:, 0], np.cos(np.pi * np.cumsum(x)), atol=1e-12)


@pytest.mark.parametrize("n_qubits", [5, 8])
def test_quantum_only_equals_ablated_hybrid_block(n_qubits):
    x = np.random.default_rng(2).random(12)
    q = QuantumConfig(n_qubits=n_qubits)
    hcfg = HybridConfig(quantum=q, bridge_precision="double")
    hcfg = replace(hcfg, photonic=replace(hcfg.photonic, input_gain=0.0))
    rows, _ = run_pipeline(SupervisedSet(x, x), hcfg)
    only, _ = quantum_only_run(x, n_qubits=n_qubits, config=q)
    np.testing.assert_allclose(rows[:, : 2 * n_qubits - 1], only, rtol=0, atol=1e-12)


# AR with AIC

def aic_oracle(series, p_max):
    """Per-order AIC via QR least squares on the common sample x[p_max:]."""
    x = np.asarray(series, dtype=float)
    y = x[p_max:]
    n = len(y)
    out = {}
    for p in range(p_max + 1):
        A = np.ones((n, p + 1))
        for k in range(1, p + 1):
            A[:, k] = x[p_max - k: len(x) - k]
        Q, R = np.linalg.qr(A)
        beta = np.linalg.solve(R, Q.T @ y)
        rss = float(np.sum((y - A @ beta) ** 2))
        out[p] = n * math.log(rss / n) + 2 * (p + 1)
    return out


def test_aic_matches_independent_transcription():
    rng = np.random.default_rng(4)
    x = np.zeros(400)
    for t in range(2, 400):
        x[t] = 0.5 * x[t - 1] - 0.3 * x[t - 2] + rng.normal()
    m = fit_ar_aic(x, p_max=6)
    oracle = aic_oracle(x, 6)
    for p, a in oracle.items():
        assert m.aic_by_order[p] == pytest.approx(a, rel=1e-10, abs=1e-9)
    assert m.order_p == min(oracle, key=lambda p: (oracle[p], p))


def test_exact_ar1_recovered():
    rng = np.random.default_rng(0)
    x = np.empty(40)
    x[0] = 1.0
    for t in range(1, 40):
        x[t] = 0.7 * x[t - 1] + 1e-13 * rng.normal()
    m = fit_ar_aic(x, p_max=1)
    assert m.order_p == 1
    assert m.coeffs[0] == pytest.approx(0.7, abs=1e-6)
    assert m.predict_next(x) == pytest.approx(0.7 * x[-1] + m.intercept)


def test_white_noise_selects_order_zero_at_least_90_percent():
    hits = 0
    for seed in range(50):
        x = np.random.default_rng(seed).normal(size=500)
        m = fit_ar_aic(x, p_max=10)
        hits += m.order_p == 0
    assert hits / 50 >= 0.9, f"p=0 chosen for {hits}/50 white-noise seeds"


def test_white_noise_selection_agrees_with_oracle_and_theory():
    hits = 0
    for seed in range(50):
        x = np.random.default_rng(seed).normal(size=500)
        oracle = aic_oracle(x, 1)
        m = fit_ar_aic(x, p_max=1)
        assert m.order_p == min(oracle, key=lambda p: (oracle[p], p))
        hits += m.order_p == 0
    # Adding one spurious lag wins when its likelihood-ratio statistic (about chi2 with 1 dof) exceeds 2.
    p0 = math.erf(1.0)  # P(chi2_1 < 2)
    assert abs(hits / 50 - p0) <= 3 * math.sqrt(p0 * (1 - p0) / 50)


def test_ar_errors():
    with pytest.raises(DegenerateError):
        fit_ar_aic(np.full(50, 3.0))
    with pytest.raises(SizingError):
        fit_ar_aic(np.arange(15.0), p_max=10)


def test_differenced_model_and_one_step():
    rng = np.random.default_rng(1)
    walk = np.cumsum(rng.normal(size=300))
    m = fit_ar_aic(walk, p_max=3, difference=True)
    assert m.differenced
    preds = ar_one_step(m, walk[:200], walk[200:])
    assert preds.shape == (100,)
    # Each prediction is the last observed value plus the modelled increment.
    hist = list(walk[:201])
    assert preds[0] == pytest.approx(m.predict_next(hist))
