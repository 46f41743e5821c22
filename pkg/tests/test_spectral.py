import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import random_hermitian, random_unitary, sampler
from wannierlab.errors import GapError, ProjectionError
from wannierlab.model import build_bloch, check_cs, ssh
from wannierlab.spectral import (SpectralWindow, expm_herm, inv_sqrt_psd, lower_bands,
                                 opnorm, polar_unitary, principal_log,
                                 sampler_from_function, spectral_projection, sz_nagy,
                                 zak_to_periodic)


def test_ssh_min_gap_matches_brute_force():
    P = sampler("ssh", v=1.0, w=2.0, grid=256)
    k = np.linspace(-0.5, 0.5, 200001)
    oracle = 2 * np.min(np.abs(1 + 2 * np.exp(2j * np.pi * k)))
    assert P.rank == 1
    np.testing.assert_allclose(P.min_gap, oracle, atol=1e-9)
    np.testing.assert_allclose(P.min_gap, 2.0, atol=1e-12)


def test_full_window_is_identity():
    h = build_bloch(ssh())
    P = spectral_projection(h, SpectralWindow(bands=[0, 1]), 32)
    np.testing.assert_allclose(P.values, np.broadcast_to(np.eye(2), P.values.shape), atol=1e-14)


def test_window_through_eigenvalue_errors():
    # the chain band 2 cos(2 pi k) crosses energy 0 at k = 1/4
    h = build_bloch(ssh(1.0, 1.0))
    with pytest.raises(GapError) as err:
        spectral_projection(h, lower_bands(1), 32)
    assert err.value.node is not None


def test_varying_count_errors():
    from wannierlab.model import chain
    h = build_bloch(chain())
    with pytest.raises(GapError, match="varying"):
        spectral_projection(h, SpectralWindow(interval=(-3, 0)), 32)


def test_projection_invariants_and_cs_transfer(qwz):
    res = qwz.residuals()
    assert res["idempotency"] <= 1e-10
    assert res["hermiticity"] <= 1e-10
    assert res["trace"] <= 1e-8
    assert qwz.cs_residual() <= 1e-8


def test_exact_derivative_matches_difference(qwz):
    k = np.array([0.13, -0.27])
    e = 1e-5
    for axis in (0, 1):
        dk = np.zeros(2)
        dk[axis] = e
        fd = (qwz(k + dk) - qwz(k - dk)) / (2 * e)
        np.testing.assert_allclose(qwz.derivative(k, axis), fd, atol=1e-7)


def test_sz_nagy_identity():
    p = np.diag([1.0, 0.0, 1.0])
    np.testing.assert_allclose(sz_nagy(p, p), np.eye(3), atol=1e-15)


def test_sz_nagy_rotated_line():
    p = np.diag([1.0, 0.0])
    c, s = np.cos(0.3), np.sin(0.3)
    r = np.array([[c, -s], [s, c]])
    q = r @ p @ r.T
    u = sz_nagy(p, q)
    np.testing.assert_allclose(u.conj().T @ u, np.eye(2), atol=1e-12)
    np.testing.assert_allclose(p @ u, u @ q, atol=1e-12)


def test_sz_nagy_too_far():
    with pytest.raises(ProjectionError, match="too far"):
        sz_nagy(np.diag([1.0, 0.0]), np.diag([0.0, 1.0]))


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2 ** 31), st.integers(2, 6), st.floats(0.0, 0.4))
def test_sz_nagy_intertwines(seed, n, eps):
    rng = np.random.default_rng(seed)
    v = random_unitary(rng, n)
    r = rng.integers(1, n)
    p = v[:, :r] @ v[:, :r].conj().T
    w = expm_herm(random_hermitian(rng, n), eps / n)
    q = w @ p @ w.conj().T
    if opnorm(p - q) >= 0.99:
        return
    u = sz_nagy(p, q)
    assert opnorm(p @ u - u @ q) <= 1e-10
    assert opnorm(u.conj().T @ u - np.eye(n)) <= 1e-10


def test_inv_sqrt_psd_examples():
    np.testing.assert_allclose(inv_sqrt_psd(np.eye(3)), np.eye(3), atol=1e-15)
    np.testing.assert_allclose(inv_sqrt_psd(np.diag([4.0, 1.0])), np.diag([0.5, 1.0]), atol=1e-15)
    with pytest.raises(ProjectionError):
        inv_sqrt_psd(np.diag([1.0, -0.1]))


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2 ** 31), st.integers(1, 6))
def test_inv_sqrt_psd_property(seed, n):
    rng = np.random.default_rng(seed)
    z = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    a = z @ z.conj().T + 0.1 * np.eye(n)
    b = inv_sqrt_psd(a)
    np.testing.assert_allclose(b, b.conj().T, atol=1e-12)
    np.testing.assert_allclose(b @ a @ b, np.eye(n), atol=1e-10)


def test_principal_log_branch():
    np.testing.assert_allclose(principal_log(-np.eye(2)), np.pi * np.eye(2), atol=1e-14)


def test_polar_unitary_of_unitary(rng):
    u = random_unitary(rng, 4)
    np.testing.assert_allclose(polar_unitary(u), u, atol=1e-13)


def _rank1(k):
    v = np.stack([np.ones_like(k[..., 0]), np.zeros_like(k[..., 0])], axis=-1)
    return v[..., :, None] * v[..., None, :]


def test_zak_identity_taus_unchanged():
    pi = sampler_from_function(_rank1, 1, 2, 1, 16)
    P = zak_to_periodic(pi, [np.eye(2)])
    np.testing.assert_allclose(P.values, pi.values, atol=1e-15)


def test_zak_scalar_trivial():
    pi = sampler_from_function(lambda k: np.ones(k.shape[:-1] + (1, 1)), 1, 1, 1, 16)
    P = zak_to_periodic(pi, [np.array([[np.exp(0.7j)]])])
    np.testing.assert_allclose(P.values, 1.0, atol=1e-15)


def test_zak_covariant_family_round_trip():
    tau = np.diag([1.0, np.exp(1j * np.pi)])
    m = np.diag([0.0, np.pi])
    p0 = 0.5 * np.array([[1, 1], [1, 1]], dtype=complex)

    def u(k):
        phases = np.exp(1j * k[..., 0, None] * np.diag(m))
        return phases[..., :, None] * np.eye(2)

    def pi(k):
        uk = u(k)
        return uk @ p0 @ np.conj(np.swapaxes(uk, -1, -2))

    s = sampler_from_function(pi, 1, 2, 1, 32)
    k = np.array([[0.3]])
    np.testing.assert_allclose(s(k + 1)[0], tau @ s(k)[0] @ tau.conj().T, atol=1e-12)
    P = zak_to_periodic(s, [tau])
    vals = P.values
    np.testing.assert_allclose(vals[0], vals[-1], atol=1e-10)
    np.testing.assert_allclose(vals, np.broadcast_to(p0, vals.shape), atol=1e-10)


def test_zak_noncommuting_taus():
    pi = sampler_from_function(lambda k: np.broadcast_to(np.eye(2), k.shape[:-1] + (2, 2)),
                               2, 2, 2, 16)
    sx = np.array([[0, 1], [1, 0]], dtype=complex)
    sz = np.diag([1.0, -1.0]).astype(complex)
    with pytest.raises(ProjectionError, match="commute"):
        zak_to_periodic(pi, [sx, sz])
