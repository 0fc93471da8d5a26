"""Decision kernel: backend parity, a brute-force oracle, and tie handling."""

import numpy as np
import pytest

from scansim import _kernels
from scansim._kernels import _decision_np


def _random_inputs(rng, n_k, n, n_s):
    return (
        rng.normal(0.0, 2.0, n),                      # log_w
        np.full(n, 1.0 / n),                          # probs
        rng.uniform(0.0, 1.0, (n_k, n)),              # d2
        rng.uniform(-0.5, 0.5, (n_k, n)),             # mu0
        rng.uniform(0.5, 1.5, (n_k, n)),              # dmu
        rng.uniform(0.1, 4.0, (n_k, n)),              # sigma
        rng.standard_normal((n_s, n)),                # z
    )


def _brute_force(log_w, probs, d2, mu0, dmu, sigma, z):
    n_k, n = d2.shape
    out = np.zeros(n_k)
    for k in range(n_k):
        acc = 0.0
        for s in range(z.shape[0]):
            b = log_w + d2[k] * (mu0[k] + sigma[k] * z[s])
            for i in range(n):
                a = b[i] + d2[k, i] * dmu[k, i]
                rest = max(
                    (b[j] for j in range(n) if j != i), default=-np.inf
                )
                if a > rest:
                    acc += probs[i]
        out[k] = acc / z.shape[0]
    return out


@pytest.fixture
def keep_backend():
    prev = _kernels.get_backend()
    yield
    _kernels.set_backend(prev)


def test_numpy_backend_matches_brute_force():
    rng = np.random.default_rng(42)
    args = _random_inputs(rng, n_k=5, n=5, n_s=7)
    got = _decision_np.decision_objectives(*args)
    assert np.allclose(got, _brute_force(*args), rtol=1e-12, atol=1e-12)


def test_compiled_backend_matches_numpy_exactly():
    if "compiled" not in _kernels.available_backends():
        pytest.skip("compiled kernel not built")
    from scansim._kernels import _decision_cy

    rng = np.random.default_rng(9)
    for n_k, n, n_s in ((3, 3, 4), (8, 8, 16), (20, 20, 33), (1, 1, 5)):
        args = _random_inputs(rng, n_k, n, n_s)
        a = _decision_np.decision_objectives(*args)
        b = _decision_cy.decision_objectives(*args)
        assert np.array_equal(a, b), f"backends disagree at {(n_k, n, n_s)}"


def test_dispatch_honors_set_backend(keep_backend):
    rng = np.random.default_rng(3)
    args = _random_inputs(rng, 4, 4, 6)
    for name in _kernels.available_backends():
        _kernels.set_backend(name)
        assert _kernels.get_backend() == name
        got = _kernels.decision_objectives(*args)
        assert np.allclose(got, _brute_force(*args), rtol=1e-12, atol=1e-12)


def test_set_backend_rejects_unknown_names():
    with pytest.raises(ValueError, match="not available"):
        _kernels.set_backend("cuda")


def test_exact_ties_count_as_failures():
    # zero visibility squared makes every hypothesis score identical
    n = 4
    args = (
        np.zeros(n),
        np.full(n, 0.25),
        np.zeros((n, n)),
        np.zeros((n, n)),
        np.ones((n, n)),
        np.ones((n, n)),
        np.random.default_rng(0).standard_normal((8, n)),
    )
    for name in _kernels.available_backends():
        backend = _kernels._BACKENDS[name]
        assert np.array_equal(backend(*args), np.zeros(n))


def test_single_cell_grid_is_always_identified():
    args = (
        np.array([0.0]),
        np.array([1.0]),
        np.ones((1, 1)),
        np.full((1, 1), -0.5),
        np.ones((1, 1)),
        np.ones((1, 1)),
        np.random.default_rng(1).standard_normal((6, 1)),
    )
    for name in _kernels.available_backends():
        backend = _kernels._BACKENDS[name]
        assert np.array_equal(backend(*args), np.ones(1))


def test_zero_sample_row_evaluates_the_mean_field():
    rng = np.random.default_rng(5)
    log_w, probs, d2, mu0, dmu, sigma, _ = _random_inputs(rng, 4, 4, 1)
    z = np.zeros((1, 4))
    got = _kernels.decision_objectives(log_w, probs, d2, mu0, dmu, sigma, z)

    want = np.zeros(4)
    for k in range(4):
        b = log_w + d2[k] * mu0[k]
        for i in range(4):
            a = b[i] + d2[k, i] * dmu[k, i]
            rest = max(b[j] for j in range(4) if j != i)
            if a > rest:
                want[k] += probs[i]
    assert np.allclose(got, want, rtol=1e-12, atol=1e-12)


def test_shape_mismatch_raises():
    rng = np.random.default_rng(2)
    log_w, probs, d2, mu0, dmu, sigma, z = _random_inputs(rng, 4, 4, 6)
    bad_log_w = np.zeros(5)
    for name in _kernels.available_backends():
        backend = _kernels._BACKENDS[name]
        with pytest.raises(ValueError):
            backend(bad_log_w, probs, d2, mu0, dmu, sigma, z)
