import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from riscap.channel import (ChannelSample, CovarianceSet, PhaseProfile, ScenarioConfig,
                            assemble_total_channel, complex_gaussian, draw_sample,
                            phase_profile_to_matrices, sample_kronecker, wrap_phase)
from riscap.errors import DomainError

from conftest import random_psd, ris_config, white_config


def _kron_draws(R, T, scale, n, seed=0):
    rng = np.random.default_rng(seed)
    return np.stack([sample_kronecker(R, T, scale, rng) for _ in range(n)])


def test_white_kronecker_variance():
    Nt = 4
    G = _kron_draws(np.eye(3), np.eye(4), 1 / Nt, 25000)
    # covariance of the vectorised matrix, 12 x 12
    v = G.reshape(len(G), -1)
    C = v.T @ v.conj() / len(v)
    assert np.allclose(np.diag(C).real, 1 / Nt, rtol=0.03)
    assert np.max(np.abs(C - np.eye(12) / Nt)) < 0.03 / Nt * 2


def test_kronecker_cross_moment(rng):
    R = random_psd(rng, 3, trace=3)
    T = random_psd(rng, 2, trace=2, real=True)
    scale = 1 / 2
    n = 100000
    G = _kron_draws(R, T, scale, n, seed=3)
    prod = G[:, 0, 0] * G[:, 1, 0].conj()
    est = prod.mean()
    se = np.sqrt(np.var(prod.real) / n + np.var(prod.imag) / n)
    target = scale * R[0, 1] * T[0, 0]
    assert abs(est - target) < 5 * se


def test_kronecker_column_covariance_is_transposed(rng):
    # for complex T the column covariance is T^T (documented convention)
    T = random_psd(rng, 2, trace=2)
    n = 100000
    G = _kron_draws(np.eye(1), T, 1.0, n, seed=4)
    prod = G[:, 0, 0] * G[:, 0, 1].conj()
    se = np.sqrt(np.var(prod.real) / n + np.var(prod.imag) / n)
    assert abs(prod.mean() - T[1, 0]) < 5 * se


def test_kronecker_zero_scale_and_errors():
    rng = np.random.default_rng(0)
    assert np.all(sample_kronecker(np.eye(2), np.eye(3), 0.0, rng) == 0)
    with pytest.raises(DomainError):
        sample_kronecker(np.diag([1.0, -1.0]), np.eye(2), 1.0, rng)


def test_complex_gaussian_unit_variance():
    z = complex_gaussian(np.random.default_rng(1), (200000,))
    assert np.mean(np.abs(z) ** 2) == pytest.approx(1.0, rel=0.01)
    assert abs(np.mean(z ** 2)) < 0.01


def test_phase_matrices():
    zero = phase_profile_to_matrices(PhaseProfile.zeros(2, 4))
    assert all(np.array_equal(P, np.eye(4)) for P in zero)
    pi = PhaseProfile(np.full((1, 3), np.pi)).matrices()[0]
    assert np.allclose(pi, -np.eye(3), atol=1e-15)
    P = PhaseProfile.random(3, 16, seed=5)
    for M in P.matrices():
        assert np.allclose(M.conj().T @ M, np.eye(16), atol=1e-12)
        assert np.all(np.abs(np.diag(M)) == pytest.approx(1.0, abs=1e-15))


@given(st.lists(st.floats(-1e3, 1e3), min_size=1, max_size=20))
def test_wrap_phase_range(theta):
    w = wrap_phase(theta)
    assert np.all(w >= -np.pi) and np.all(w < np.pi)
    assert np.allclose(np.exp(1j * w), np.exp(1j * np.array(theta)), atol=1e-9)


def test_covariance_trace_checks():
    with pytest.raises(DomainError):
        CovarianceSet(2 * np.eye(2), np.eye(3))
    with pytest.raises(DomainError):
        CovarianceSet(np.eye(2), np.eye(3), [np.eye(2)], [np.eye(3)], [np.eye(4)],
                      [0.5 * np.eye(4)])
    with pytest.raises(DomainError):
        ScenarioConfig(rho=1.0, gamma=[], covariances=CovarianceSet(np.eye(2), np.eye(2)),
                       Q=np.diag([2.0, 1.0]))
    cfg = white_config(8, 4, 1.0)
    assert cfg.beta_r == 0.5 and np.array_equal(cfg.Q, np.eye(8))


def test_total_channel_without_ris_is_direct():
    cfg = white_config(3, 2, 1.0)
    s = draw_sample(cfg, 0)
    G = assemble_total_channel(s, PhaseProfile.zeros(0, 0), cfg)
    assert np.array_equal(G, s.G_d)


def test_zero_gain_no_direct_gives_zero():
    cfg = ris_config(4, 2, 3, 20.0)
    cfg.gamma[:] = 0.0
    G = assemble_total_channel(draw_sample(cfg, 0), PhaseProfile.random(1, 9, 0), cfg)
    assert np.all(G == 0)


def test_scalar_hand_computation():
    cov = CovarianceSet(np.eye(1), np.eye(1), [np.eye(1)], [np.eye(1)], [np.eye(1)],
                        [np.eye(1)])
    cfg = ScenarioConfig(rho=1.0, gamma=[4.0], covariances=cov, direct_link=True)
    s = ChannelSample(np.array([[1 + 1j]]), [np.array([[2.0]])], [np.array([[0.5j]])])
    theta = 0.7
    G = assemble_total_channel(s, PhaseProfile(np.array([[theta]])), cfg)
    expected = (1 + 1j) + 2.0 * 2.0 * np.exp(1j * theta) * 0.5j
    assert G[0, 0] == pytest.approx(expected, abs=1e-15)


def test_dimension_mismatch():
    cfg = ris_config(4, 2, 3, 20.0)
    s = draw_sample(cfg, 0)
    with pytest.raises(DomainError):
        assemble_total_channel(s, PhaseProfile.zeros(1, 4), cfg)
    with pytest.raises(DomainError):
        assemble_total_channel(s, PhaseProfile.zeros(2, 9), cfg)


def test_sample_determinism_per_index():
    cfg = ris_config(4, 2, 3, 20.0, seed=99)
    a = draw_sample(cfg, 17)
    for i in range(5):
        draw_sample(cfg, i)
    b = draw_sample(cfg, 17)
    assert np.array_equal(a.G_d, b.G_d)
    assert all(np.array_equal(x, y) for x, y in zip(a.G_r + a.G_t, b.G_r + b.G_t))
    c = draw_sample(cfg, 18)
    assert not np.array_equal(a.G_t[0], c.G_t[0])


def test_ris_hop_moments_match_covariances():
    # E[G_t G_t^H] = (Nt / Nt) S_t and E[G_r^H G_r] = (Nr / Nt) S_r
    cfg = ris_config(4, 2, 3, 20.0, seed=1)
    n = 20000
    At = np.zeros((9, 9), complex)
    Ar = np.zeros((9, 9), complex)
    for i in range(n):
        s = draw_sample(cfg, i)
        At += s.G_t[0] @ s.G_t[0].conj().T
        Ar += s.G_r[0].conj().T @ s.G_r[0]
    S_t = cfg.covariances.S_t[0]
    S_r = cfg.covariances.S_r[0]
    assert np.max(np.abs(At / n - S_t)) < 0.03
    assert np.max(np.abs(Ar / n - 0.5 * S_r)) < 0.03
