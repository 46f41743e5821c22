import numpy as np
import pytest

from conftest import sampler
from wannierlab.errors import CSGateError
from wannierlab.frame2d import frame_2d, matching_matrix
from wannierlab.frame1d import frame_1d
from wannierlab.spectral import sampler_from_function


@pytest.fixture(scope="module")
def qwz_frame(qwz):
    return frame_2d(qwz)


def test_qwz_frame_residuals(qwz, qwz_frame):
    res = qwz_frame.check(qwz)
    assert set(res) == {"orthonormality", "range", "periodicity", "cs"}
    assert max(res.values()) <= 1e-5
    assert qwz_frame.notes["boundary_residual"] <= 1e-8


def test_matching_matrix_cs_prime(qwz, qwz_frame):
    beta = qwz_frame.notes["beta"]
    assert beta.cs_prime_residual() <= 1e-10
    assert beta.notes["unitarity_before_polar"] <= 1e-6


def test_matching_matrix_relation(qwz):
    column = frame_1d(qwz, axis=1, base=np.zeros(2))
    beta, psi = matching_matrix(qwz, column)
    np.testing.assert_allclose(psi[-1], psi[0] @ beta.values, atol=1e-6)


def test_constant_projection():
    p = np.diag([1.0, 1.0, 0.0]).astype(complex)

    def fn(k):
        return np.broadcast_to(p, np.shape(k)[:-1] + (3, 3)).copy()

    def dfn(k, axis=0):
        return np.zeros(np.shape(k)[:-1] + (3, 3), dtype=complex)

    P = sampler_from_function(fn, 2, 3, 2, (16, 16), derivative=dfn)
    xi = frame_2d(P)
    assert max(xi.check(P).values()) <= 1e-12
    np.testing.assert_allclose(xi.values, np.broadcast_to(xi.values[8, 8], xi.values.shape), atol=1e-12)


def test_cs_gate_haldane():
    P = sampler("haldane-topological", grid=32)
    with pytest.raises(CSGateError) as err:
        frame_2d(P)
    exc = err.value
    assert exc.stage == "cs-check"
    assert exc.details["chern"]["chern"] in (-1, 1)
