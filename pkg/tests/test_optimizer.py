import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from irsradar.optimizer import (
    DesignProblem,
    algorithm1,
    build_E,
    design_waveform,
    diagonal_load,
    lambda_max,
    lift,
    lifted_pmli_step,
    phase_side_update,
    pmli_step,
    random_phases,
    waveform_matrix,
    waveform_update,
)
from irsradar.scene import SceneConfig
from irsradar.signal_model import make_noise_model

from conftest import crandn, random_hpd, random_problem


def align(x, ref):
    ph = np.vdot(x, ref)
    return x * ph / abs(ph)


@pytest.mark.parametrize("n", [1, 5, 40, 300])
def test_lambda_max_power_matches_dense(rng, n):
    M = random_hpd(rng, n) - 3 * np.eye(n)
    ref = np.linalg.eigvalsh(M)[-1]
    assert lambda_max(M, "power", tol=1e-13, max_iter=20000) == pytest.approx(ref, rel=1e-6)
    assert lambda_max(M) == pytest.approx(ref, rel=1e-6)
    with pytest.raises(ValueError):
        lambda_max(np.eye(300), "lanczos")


def test_lambda_max_negative_definite():
    M = -np.diag([1.0, 2.0, 3.0])
    assert lambda_max(M, "power", tol=1e-14, max_iter=5000) == pytest.approx(-1.0, rel=1e-6)
    assert lambda_max(np.zeros((300, 300)), "power") == 0.0


def test_delta_forms_agree(rng):
    for _ in range(10):
        p = random_problem(rng)
        a = crandn(rng, 3)
        a /= np.linalg.norm(a)
        v = random_phases(rng, p.n)
        forms = p.delta_forms(a, v)
        ref = forms["trace"]
        for k, val in forms.items():
            assert val == pytest.approx(ref, rel=1e-10), k


def test_E_is_symmetric_biquadratic(rng):
    p = random_problem(rng, L=2, M=2, Nm=3, N=8)
    a = np.full(2, 1 / np.sqrt(2))
    W = p.W(a)
    u, w = random_phases(rng, p.n), random_phases(rng, p.n)
    Eu, Ew = build_E(u, W, p.channel.S), build_E(w, W, p.channel.S)
    np.testing.assert_allclose(Eu, Eu.conj().T)
    g_uw = np.vdot(u, Ew @ u).real
    g_wu = np.vdot(w, Eu @ w).real
    assert g_uw == pytest.approx(g_wu, rel=1e-10)


def test_diagonal_load_is_psd_and_flips_order(rng):
    E = random_hpd(rng, 6)
    Et, lam = diagonal_load(E)
    assert np.linalg.eigvalsh(Et)[0] > -1e-10
    assert lam == pytest.approx(np.linalg.eigvalsh(E)[-1])
    u, w = random_phases(rng, 6), random_phases(rng, 6)
    # on the torus ||u||^2 = n, so the two quadratic forms are reflections of each other
    assert np.vdot(u, Et @ u).real + np.vdot(u, E @ u).real == pytest.approx(6 * lam)
    assert np.vdot(w, Et @ w).real + np.vdot(w, E @ w).real == pytest.approx(6 * lam)


@given(st.integers(0, 2**32 - 1), st.floats(0.0, 5.0))
@settings(max_examples=40, deadline=None)
def test_lift_encodes_coupling_penalty(seed, eta):
    rng = np.random.default_rng(seed)
    n = 5
    Et, _ = diagonal_load(random_hpd(rng, n))
    v, u = random_phases(rng, n), random_phases(rng, n)
    lifted = lift(Et, v, eta)
    s = np.append(u, 1.0)
    lhs = np.vdot(s, lifted.E_cal @ s).real
    rhs = np.vdot(u, Et @ u).real + eta * np.linalg.norm(u - v) ** 2
    assert lhs == pytest.approx(rhs, rel=1e-9, abs=1e-9)
    assert np.linalg.eigvalsh(lifted.E_hat)[0] > -1e-9


def test_lift_rejects_negative_eta():
    with pytest.raises(ValueError):
        lift(np.eye(2), np.ones(2), -1.0)


def random_lifted(rng, n):
    Et, _ = diagonal_load(random_hpd(rng, n))
    return lift(Et, random_phases(rng, n), rng.uniform(0.1, 3.0))


def test_pmli_monotone_on_random_lifted_matrices(rng):
    for _ in range(20):
        n = int(rng.integers(2, 12))
        lifted = random_lifted(rng, n)
        v = random_phases(rng, n)
        obj = [lifted.objective(v)]
        for _ in range(100):
            v = lifted_pmli_step(lifted, v)
            obj.append(lifted.objective(v))
        assert np.all(np.diff(obj) >= -1e-9 * max(1.0, abs(obj[-1])))
        np.testing.assert_allclose(np.abs(v), 1.0)


def test_pmli_keeps_phase_where_gradient_vanishes():
    G = np.diag([1.0, 0.0])
    s = np.array([1.0, np.exp(0.7j)])
    np.testing.assert_allclose(pmli_step(G, s), s)


def exhaustive_best(lifted, n, grid):
    best = -np.inf
    for combo in itertools.product(grid, repeat=n):
        best = max(best, lifted.objective(np.array(combo)))
    return best


def test_pmli_close_to_exhaustive_on_small_instances(rng):
    grid = np.exp(2j * np.pi * np.arange(8) / 8)
    ok = 0
    for _ in range(20):
        lifted = random_lifted(rng, 3)
        v = random_phases(rng, 3)
        for _ in range(100):
            v = lifted_pmli_step(lifted, v)
        ok += lifted.objective(v) >= 0.9 * exhaustive_best(lifted, 3, grid)
    assert ok >= 18


def test_waveform_power_method_against_eigh(rng):
    p = random_problem(rng, L=4, M=2, Nm=3, N=10)
    X = p.X(random_phases(rng, p.n))
    M = waveform_matrix(X, p.P, p.sigma)
    w, V = np.linalg.eigh(M)
    a = design_waveform(X, p.P, p.sigma, max_iter=20000, tol=1e-14)
    np.testing.assert_allclose(align(a, V[:, -1]), V[:, -1], atol=1e-6)
    assert np.vdot(a, M @ a).real == pytest.approx(w[-1], rel=1e-10)


def test_waveform_update_restarts_from_null_space():
    X = np.array([[1.0, 0.0], [0.0, 0.0]], dtype=complex)
    P = np.eye(2, dtype=complex)
    a = waveform_update(X, P, np.eye(2), np.array([0.0, 1.0 + 0j]), np.random.default_rng(0))
    assert np.linalg.norm(a) == pytest.approx(1.0)
    with pytest.raises(ValueError):
        waveform_update(np.zeros((2, 2)), P, np.eye(2), np.array([1.0, 0.0 + 0j]))


def test_phase_side_update_is_monotone(rng):
    p = random_problem(rng, L=2, M=1, Nm=4, N=8)
    W = p.W(np.full(2, 1 / np.sqrt(2)))
    v1, v2 = random_phases(rng, p.n), random_phases(rng, p.n)
    for _ in range(20):
        v1, before, after = phase_side_update(p, W, v1, v2, 1.0)
        assert after >= before - 1e-9 * abs(before)


@pytest.mark.parametrize("seed", range(5))
def test_algorithm1_improves_random_problems(seed):
    rng = np.random.default_rng(seed)
    p = random_problem(rng, L=2, M=2, Nm=3, N=10)
    st_ = algorithm1(p, gamma1=5, gamma2=10, seed=seed)
    assert st_.delta >= st_.initial_delta
    assert st_.delta == pytest.approx(p.delta(st_.a, st_.v), rel=1e-10)
    for before, after in st_.inner_trace:
        assert after >= before - 1e-9 * abs(before)
    assert np.linalg.norm(st_.a) == pytest.approx(1.0)
    np.testing.assert_allclose(np.abs(st_.v), 1.0)


def test_algorithm1_on_reference_scene():
    scene = SceneConfig.default()
    p = DesignProblem.from_scene(scene, make_noise_model(4, 1.0, 0.5))
    st_ = algorithm1(p, seed=3)
    assert st_.delta > 10 * st_.initial_delta
    deltas = [d for _, d in st_.trace]
    assert len(deltas) <= 11


def test_algorithm1_is_deterministic():
    p = random_problem(np.random.default_rng(9), L=2, M=1, Nm=3, N=6)
    a = algorithm1(p, gamma1=3, gamma2=5, seed=4)
    b = algorithm1(p, gamma1=3, gamma2=5, seed=4)
    np.testing.assert_array_equal(a.v, b.v)
    np.testing.assert_array_equal(a.a, b.a)
    with pytest.raises(ValueError):
        algorithm1(p, gamma1=0)
