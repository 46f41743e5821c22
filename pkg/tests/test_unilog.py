import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from wannierlab.errors import (BranchAmbiguityError, DegeneracyError, SymmetryError,
                               WindingError)
from wannierlab.grid import symmetric_grid
from wannierlab.spectral import expm_herm, opnorm
from wannierlab.unilog import (HermitianFamily, UnitaryFamily, circle_gap, cut_args,
                               lift_phase, log_analytic_endpoints, log_cayley,
                               log_noncrossing, regularize, rotation_family, straighten,
                               winding)

K = symmetric_grid(64)


def diag_family(n, phases):
    """diag(exp(i f_j(k))) for callables f_j."""
    return UnitaryFamily.from_function(lambda k: np.diag([np.exp(1j * f(k)) for f in phases]), n)


def noncrossing_fixture(n=64):
    return diag_family(n, [lambda k: 0.3 + 0.1 * np.cos(2 * np.pi * k),
                           lambda k: 2.0 + 0.1 * np.cos(2 * np.pi * k)])


def contracts(h, beta):
    return h.exp_residual(beta), h.periodicity_residual(), h.cs_residual()


# winding and scalar lifts ---------------------------------------------------

def test_winding_examples():
    assert winding(np.exp(2j * np.pi * K)) == 1
    assert winding(np.full(K.shape, 0.3 - 2j)) == 0
    assert winding(np.exp(-4j * np.pi * K)) == -2


def test_winding_zero_crossing():
    with pytest.raises(WindingError, match="vanishes"):
        winding(np.cos(2 * np.pi * K) + 0j)


def test_lift_phase_examples():
    np.testing.assert_array_equal(lift_phase(np.ones(65)), 0)
    phi = lift_phase(np.exp(1j * np.sin(2 * np.pi * K) ** 2))
    np.testing.assert_allclose(phi, np.sin(2 * np.pi * K) ** 2, atol=1e-14)
    with pytest.raises(SymmetryError):
        lift_phase(np.exp(2j * np.pi * K))


def test_lift_phase_contract():
    f = 0.3 * np.cos(2 * np.pi * K) + 2.5 * np.cos(4 * np.pi * K)
    b = np.exp(1j * f)
    phi = lift_phase(b)
    np.testing.assert_allclose(np.exp(1j * phi) * b[32], b, atol=1e-12)
    np.testing.assert_array_equal(phi, phi[::-1])
    assert phi[32] == 0
    h = HermitianFamily((phi + np.angle(b[32]))[:, None, None])
    assert max(contracts(h, UnitaryFamily(b))) < 1e-8


# non-crossing logarithm ------------------------------------------------------

def test_noncrossing_constant():
    beta = diag_family(32, [lambda k: 0.5, lambda k: -1.1])
    h = log_noncrossing(beta)
    np.testing.assert_allclose(h.values, np.broadcast_to(np.diag([0.5, -1.1]), h.values.shape),
                               atol=1e-14)


def test_noncrossing_diag_fixture():
    beta = noncrossing_fixture()
    h = log_noncrossing(beta)
    expected = np.array([np.diag([0.3 + 0.1 * np.cos(2 * np.pi * k),
                                  2.0 + 0.1 * np.cos(2 * np.pi * k)]) for k in K])
    np.testing.assert_allclose(h.values, expected, atol=1e-10)
    assert max(contracts(h, beta)) < 1e-8


def test_noncrossing_rotation_family_degenerate():
    with pytest.raises(DegeneracyError) as err:
        log_noncrossing(rotation_family(64))
    assert err.value.node == 0.0
    assert set(err.value.details["nodes"]) == {0.0, -0.5, 0.5}


# circle gap and Cayley --------------------------------------------------------

def test_circle_gap_examples():
    ident = UnitaryFamily(np.broadcast_to(np.eye(2), (33, 2, 2)))
    assert circle_gap(ident) == pytest.approx(np.pi)
    assert circle_gap(rotation_family(64)) is None
    flip = UnitaryFamily(np.broadcast_to(np.diag([1.0, -1.0]), (33, 2, 2)))
    assert circle_gap(flip) == pytest.approx(np.pi / 2)


def test_cayley_identity():
    ident = UnitaryFamily(np.broadcast_to(np.eye(3), (17, 3, 3)))
    np.testing.assert_allclose(log_cayley(ident, np.pi).values, 0, atol=1e-15)


def test_cayley_matches_lift_phase():
    f = 0.5 * np.cos(2 * np.pi * K)
    beta = UnitaryFamily(np.exp(1j * f))
    h = log_cayley(beta, np.pi)
    phi = lift_phase(beta) + np.angle(beta.values[32, 0, 0])
    np.testing.assert_allclose(h.values[:, 0, 0].real, phi, atol=1e-10)
    assert max(contracts(h, beta)) < 1e-8


def test_cayley_rejects_eigenvalue_on_cut():
    beta = UnitaryFamily(np.broadcast_to(np.diag([1.0, np.exp(0.4j)]), (17, 2, 2)))
    with pytest.raises(DegeneracyError):
        log_cayley(beta, 0.4)


# regularization ----------------------------------------------------------------

def test_regularize_smooth_family_small_change():
    beta = noncrossing_fixture(128)
    out = regularize(beta, s=0.0, nu=1e-3)
    assert out.notes["sup_distance"] <= 1e-3


def test_regularize_rotation_family():
    out = regularize(rotation_family(128), s=0.1, nu=0.01)
    assert min(out.notes["endpoint_gaps"]) >= 0.05
    assert out.cs_prime_residual() <= 1e-10


def test_regularize_identity_spreads_endpoints():
    s = 0.1
    out = regularize(UnitaryFamily(np.broadcast_to(np.eye(3), (65, 3, 3))), s=s, nu=0.0)
    for node in (32, 64):
        args = np.sort(np.angle(np.linalg.eigvals(out.values[node])))
        np.testing.assert_allclose(args, s * np.arange(3), atol=1e-12)


def test_regularize_requires_cs_prime(rng):
    z = rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))
    h = 0.5 * (z + z.conj().T)
    beta = UnitaryFamily([expm_herm(h * np.sin(2 * np.pi * k), -1.0) for k in K])
    with pytest.raises(SymmetryError):
        regularize(beta)


# analytic endpoints ---------------------------------------------------------------

def test_analytic_endpoints_matches_noncrossing():
    beta = noncrossing_fixture()
    np.testing.assert_allclose(log_analytic_endpoints(beta).values,
                               log_noncrossing(beta).values, atol=1e-10)


def test_analytic_endpoints_on_regularized_rotation():
    reg = regularize(rotation_family(128), 0.1, 0.01)
    h = log_analytic_endpoints(reg)
    assert max(contracts(h, reg)) < 1e-8


def test_analytic_endpoints_degenerate_endpoint():
    with pytest.raises(DegeneracyError):
        log_analytic_endpoints(rotation_family(64))


def test_branch_ambiguity_on_coarse_grid():
    # a sharp avoided crossing that 16 intervals cannot resolve
    def beta(k):
        c = np.cos(2 * np.pi * k)
        h = np.array([[1.0 + c, 1e-3], [1e-3, 1.0 - c]])
        return expm_herm(h, -1.0)
    fam = UnitaryFamily.from_function(beta, 16)
    try:
        log_analytic_endpoints(fam)
    except BranchAmbiguityError as exc:
        assert exc.stage == "unilog"
    else:
        # when matching is unambiguous the contract must still hold
        h = log_analytic_endpoints(fam)
        assert h.exp_residual(fam) < 1e-8


def test_cut_args_places_cut_in_widest_gap():
    lam = np.exp(1j * np.array([np.pi - 0.01, -np.pi + 0.01, 0.2]))
    a = cut_args(lam)
    # the cluster at -1 stays together instead of straddling the cut
    assert abs(a[0] - a[1]) < 0.1


# straightening ------------------------------------------------------------------

def test_straighten_identity():
    fam = UnitaryFamily(np.broadcast_to(np.eye(2), (33, 2, 2)))
    u = straighten(fam)
    for x in (-0.5, 0.1, 0.5):
        np.testing.assert_allclose(u(x), np.broadcast_to(np.eye(2), (33, 2, 2)), atol=1e-12)


def test_straighten_rotation_family():
    beta = rotation_family(128)
    u = straighten(beta)
    assert u.boundary_residual(beta) < 1e-8
    assert u.cs_residual() < 1e-8
    assert u.periodicity_residual() < 1e-12


def cs_family(seed, n_size, grid=64):
    """beta = exp(i h) with h(k) = S0 + S1 cos 2pi k + i A sin 2pi k (transpose symmetric)."""
    rng = np.random.default_rng(seed)
    s0 = rng.standard_normal((n_size, n_size))
    s1 = rng.standard_normal((n_size, n_size))
    a = rng.standard_normal((n_size, n_size))
    s0, s1, a = s0 + s0.T, 0.5 * (s1 + s1.T), 0.5 * (a - a.T)

    def beta(k):
        h = s0 + s1 * np.cos(2 * np.pi * k) + 1j * a * np.sin(2 * np.pi * k)
        return expm_herm(h, -1.0)
    return UnitaryFamily.from_function(beta, grid)


@settings(max_examples=12, deadline=None)
@given(st.integers(0, 2 ** 31), st.integers(1, 3))
def test_straighten_contract_random(seed, n_size):
    beta = cs_family(seed, n_size, grid=128)
    assert beta.cs_prime
    try:
        u = straighten(beta)
    except (DegeneracyError, BranchAmbiguityError):
        return  # resolvable only on a finer grid; the error is the contract
    assert u.boundary_residual(beta) < 1e-8
    assert u.cs_residual() < 1e-8


def test_straighten_known_logarithm():
    beta = cs_family(7, 2)
    u = straighten(beta)
    assert u.boundary_residual(beta) < 1e-8
    eye = np.eye(2)
    assert opnorm(np.conj(u(0.3)) - u(-0.3)[::-1]).max() < 1e-8
    assert np.allclose(u(0.0), eye)


def test_unitary_family_validation():
    bad = np.broadcast_to(np.diag([1.0, 2.0]), (9, 2, 2))
    with pytest.raises(Exception, match="not unitary"):
        UnitaryFamily(bad)
    vals = np.array([np.diag([np.exp(1j * k), 1.0]) for k in symmetric_grid(8)])
    with pytest.raises(Exception, match="not periodic"):
        UnitaryFamily(vals)
