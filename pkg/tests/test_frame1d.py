import numpy as np
import pytest

from conftest import random_unitary, sampler
from wannierlab.diagnostics import wannier_center_oracle
from wannierlab.errors import FrameError
from wannierlab.frame1d import frame_1d, real_seed
from wannierlab.spectral import sampler_from_function
from wannierlab.wannier import wannier_transform


def test_real_seed_examples():
    np.testing.assert_allclose(real_seed(np.diag([1.0, 0.0])), [[1.0], [0.0]])
    p = np.full((2, 2), 0.5)
    q = real_seed(p)
    np.testing.assert_allclose(q @ q.T, p, atol=1e-14)
    assert q[0, 0] > 0
    with pytest.raises(FrameError):
        real_seed(np.array([[0.5, 0.5j], [-0.5j, 0.5]]))


def test_identity_projection_gives_constant_frame():
    def fn(k):
        return np.broadcast_to(np.eye(2), np.shape(k)[:-1] + (2, 2)).astype(complex)

    def dfn(k, axis=0):
        return np.zeros(np.shape(k)[:-1] + (2, 2), dtype=complex)

    P = sampler_from_function(fn, 2, 2, 1, 32, derivative=dfn)
    xi = frame_1d(P)
    np.testing.assert_allclose(xi.values, np.broadcast_to(np.eye(2), (33, 2, 2)), atol=1e-14)


def test_ssh_frame(ssh12):
    xi = frame_1d(ssh12)
    res = xi.check(ssh12)
    assert xi.cs_flag
    assert max(res.values()) <= 1e-6
    w = wannier_transform(xi, 20)
    center = w.centers()[0, 0] % 1.0
    assert min(abs(center - wannier_center_oracle(ssh12)), 1 - abs(center - wannier_center_oracle(ssh12))) < 1e-6
    assert w.max_imag() < 1e-8


def test_antiperiodic_line_bundle():
    # v(k) = cos(pi k) e1 + sin(pi k) e2 returns to -v after one period
    def fn(k):
        t = np.pi * k[..., 0]
        v = np.stack([np.cos(t), np.sin(t)], axis=-1)
        return (v[..., :, None] * v[..., None, :]).astype(complex)

    def dfn(k, axis=0):
        t = np.pi * k[..., 0]
        v = np.stack([np.cos(t), np.sin(t)], axis=-1)
        dv = np.pi * np.stack([-np.sin(t), np.cos(t)], axis=-1)
        return (dv[..., :, None] * v[..., None, :] + v[..., :, None] * dv[..., None, :]).astype(complex)

    P = sampler_from_function(fn, 1, 2, 1, 64, derivative=dfn)
    xi = frame_1d(P)
    res = xi.residuals(P)
    assert res["orthonormality"] < 1e-12
    assert res["range"] < 1e-6
    assert res["periodicity"] < 1e-6
    # parallel transport of v is v itself, so the frame is v(k) times a phase
    k = (np.arange(65) - 32) / 64
    overlap = np.abs(np.cos(np.pi * k) * xi.values[:, 0, 0] + np.sin(np.pi * k) * xi.values[:, 1, 0])
    np.testing.assert_allclose(overlap, 1.0, atol=1e-6)


def test_gauge_covariance_in_seed(qwz, rng):
    base = np.zeros(2)
    xi = frame_1d(qwz, axis=1, base=base)
    seed = xi.values[xi.n[0] // 2]
    w = random_unitary(rng, 2)
    rotated = frame_1d(qwz, axis=1, base=base, seed=seed @ w)
    np.testing.assert_allclose(rotated.values, xi.values @ w, atol=1e-8)
    assert not rotated.cs_flag


def test_seed_outside_range(ssh12, rng):
    with pytest.raises(FrameError, match="not in Ran"):
        frame_1d(ssh12, seed=rng.standard_normal(2))


def test_needs_base_for_2d(qwz):
    with pytest.raises(FrameError):
        frame_1d(qwz)


@pytest.mark.parametrize("v,w", [(2.0, 1.0), (1.0, 3.0)])
def test_ssh_phases_both_sides(v, w):
    P = sampler("ssh", v=v, w=w, grid=128)
    xi = frame_1d(P)
    assert max(xi.check(P).values()) <= 1e-6
