"""Spectral projections of Bloch Hamiltonians and small matrix functions:
inverse square roots, polar factors, principal logarithms and the
Sz.-Nagy intertwiner."""

import numpy as np
import scipy.linalg as sla

from .errors import GapError, ProjectionError
from .grid import symmetric_grid
from .model import CSFlag, _grid_sizes, grid_points
from .tolerances import DEFAULT


def dagger(a):
    return np.conj(np.swapaxes(a, -1, -2))


def hermitize(a):
    return 0.5 * (a + dagger(a))


def opnorm(a):
    """Spectral norm, batched over leading axes."""
    a = np.asarray(a)
    if a.size == 0:
        return np.zeros(a.shape[:-2])
    return np.linalg.norm(a, ord=2, axis=(-2, -1))


def principal_arg(z):
    """Argument in the half-open interval (-pi, pi]; -1 maps to +pi."""
    a = np.angle(z)
    return np.where(a <= -np.pi + 1e-14, a + 2 * np.pi, a)


def inv_sqrt_psd(a, tol=DEFAULT):
    """A^{-1/2} for Hermitian positive definite A (stacks allowed)."""
    a = hermitize(np.asarray(a, dtype=complex))
    lam, v = np.linalg.eigh(a)
    if np.any(lam <= tol.pd):
        raise ProjectionError(f"matrix is not positive definite (min eigenvalue {lam.min():.3e})",
                              details={"min_eigenvalue": float(lam.min())})
    return (v * lam[..., None, :] ** -0.5) @ dagger(v)


def polar_unitary(a):
    """Unitary polar factor (A A^dagger)^{-1/2} A, via the SVD."""
    w, _, vh = np.linalg.svd(a)
    return w @ vh


def expm_herm(h, t=1.0):
    """exp(-i t H) for Hermitian H (stacks allowed)."""
    lam, v = np.linalg.eigh(hermitize(h))
    return (v * np.exp(-1j * t * lam)[..., None, :]) @ dagger(v)


def unitary_eig(u):
    """Eigenvalues and an orthonormal eigenbasis of a normal matrix.

    Uses the complex Schur form, whose triangular factor is diagonal for
    normal input, so the basis stays orthonormal through degeneracies.
    """
    t, z = sla.schur(np.asarray(u, dtype=complex), output="complex")
    return np.diag(t).copy(), z


def principal_log(u):
    """Hermitian M with exp(iM) = U and spectrum in (-pi, pi]."""
    u = np.asarray(u, dtype=complex)
    if u.shape[-1] == 0:
        return np.zeros_like(u)
    lam, z = unitary_eig(u)
    return hermitize((z * principal_arg(lam)) @ dagger(z))


def sz_nagy(p, q, tol=DEFAULT):
    """Unitary U with P U = U Q built from two nearby projections."""
    p = np.asarray(p, dtype=complex)
    q = np.asarray(q, dtype=complex)
    dist = opnorm(p - q)
    if np.any(dist >= 1 - 1e-12):
        raise ProjectionError(f"projections too far apart (||P - Q|| = {np.max(dist):.6f})",
                              details={"distance": float(np.max(dist))})
    eye = np.eye(p.shape[-1])
    d = q - p
    return (p @ q + (eye - p) @ (eye - q)) @ inv_sqrt_psd(eye - d @ d, tol)


class SpectralWindow:
    """Band selection: explicit 0-based band indices or an energy interval."""

    def __init__(self, bands=None, interval=None):
        if (bands is None) == (interval is None):
            raise ValueError("give exactly one of bands= or interval=")
        self.bands = None if bands is None else tuple(sorted(int(b) for b in bands))
        self.interval = None if interval is None else (float(interval[0]), float(interval[1]))
        self.min_gap = None

    def mask(self, evals):
        evals = np.asarray(evals)
        if self.bands is not None:
            m = np.zeros(evals.shape, dtype=bool)
            m[..., list(self.bands)] = True
            return m
        lo, hi = self.interval
        return (evals >= lo) & (evals <= hi)

    def __repr__(self):
        if self.bands is not None:
            return f"SpectralWindow(bands={self.bands})"
        return f"SpectralWindow(interval={self.interval})"


def lower_bands(n):
    return SpectralWindow(bands=range(n))


class ProjectionSampler:
    """A family k -> P(k) of rank-N orthogonal projections on a symmetric grid.

    Parameters
    ----------
    evaluate : callable
        Maps k of shape (..., d) to P(k) of shape (..., D, D).
    rank, size, dimension : int
        N, D and d.
    n : int or tuple
        Grid intervals per axis.
    derivative : callable, optional
        ``derivative(k, axis)`` returning dP/dk_axis exactly.
    """

    def __init__(self, evaluate, rank, size, dimension, n, derivative=None,
                 cs_flag=CSFlag.UNKNOWN, min_gap=None, hamiltonian=None):
        self.evaluate = evaluate
        self.rank = int(rank)
        self.size = int(size)
        self.dimension = int(dimension)
        self.n = _grid_sizes(n, dimension)
        self.derivative = derivative
        self.cs_flag = cs_flag
        self.min_gap = min_gap
        self.hamiltonian = hamiltonian
        self._values = None

    def __call__(self, k):
        k = np.asarray(k, dtype=float)
        if self.dimension == 1 and (k.ndim == 0 or k.shape[-1] != 1):
            k = k[..., None]
        return self.evaluate(k)

    @property
    def axes(self):
        return tuple(symmetric_grid(m) for m in self.n)

    @property
    def values(self):
        """P at every grid node, shape (n1+1[, n2+1], D, D)."""
        if self._values is None:
            self._values = self(grid_points(self.n, self.dimension))
        return self._values

    def with_grid(self, n):
        return ProjectionSampler(self.evaluate, self.rank, self.size, self.dimension, n,
                                 derivative=self.derivative, cs_flag=self.cs_flag,
                                 min_gap=self.min_gap, hamiltonian=self.hamiltonian)

    def residuals(self):
        """Idempotency, self-adjointness and trace deviations over the grid."""
        p = self.values
        tr = np.trace(p, axis1=-2, axis2=-1).real
        return {
            "idempotency": float(np.max(np.abs(p @ p - p))),
            "hermiticity": float(np.max(np.abs(p - dagger(p)))),
            "trace": float(np.max(np.abs(tr - self.rank))),
        }

    def cs_residual(self):
        p = self.values
        mirrored = p[tuple(slice(None, None, -1) for _ in range(self.dimension))]
        return float(np.max(np.abs(np.swapaxes(p, -1, -2) - mirrored)))


def _selected_gap(evals, mask):
    """Distance between the selected and unselected eigenvalues per node."""
    sel = np.where(mask, evals, np.nan)
    other = np.where(mask, np.nan, evals)
    diff = np.abs(sel[..., :, None] - other[..., None, :])
    with np.errstate(invalid="ignore"):
        g = np.nanmin(np.where(np.isnan(diff), np.inf, diff), axis=(-2, -1))
    return g


def spectral_projection(h, window, n, tol=DEFAULT):
    """Projection onto the eigenvectors of h(k) selected by ``window``.

    The grid gap (smallest distance between selected and unselected
    eigenvalues) is recorded in ``window.min_gap`` and ``sampler.min_gap``.
    """
    d, D = h.dimension, h.size
    ns = _grid_sizes(n, d)
    pts = grid_points(ns, d)
    evals = np.linalg.eigvalsh(h(pts))
    mask = window.mask(evals)
    counts = mask.sum(axis=-1)
    rank = int(counts.flat[0])
    if np.any(counts != rank):
        bad = np.argwhere(counts != rank)[0]
        raise GapError("the window selects a varying number of bands",
                       node=pts[tuple(bad)], details={"counts": sorted(set(counts.ravel().tolist()))})
    if rank == 0:
        raise GapError("the window selects no bands")
    gaps = _selected_gap(evals, mask)
    min_gap = float(np.min(gaps))
    if min_gap < tol.gap:
        bad = np.unravel_index(np.argmin(gaps), gaps.shape)
        raise GapError(f"spectral gap closes (min gap {min_gap:.3e})", node=pts[bad],
                       details={"min_gap": min_gap})
    window.min_gap = min_gap

    def evaluate(k):
        e, v = np.linalg.eigh(h(k))
        m = window.mask(e)
        vs = v * m[..., None, :]
        return vs @ dagger(vs)

    def derivative(k, axis=0):
        e, v = np.linalg.eigh(h(k))
        m = window.mask(e).astype(float)
        x = dagger(v) @ h.derivative(k, axis) @ v
        de = e[..., None, :] - e[..., :, None]
        dm = m[..., None, :] - m[..., :, None]
        with np.errstate(divide="ignore", invalid="ignore"):
            f = np.where(dm != 0, dm / de, 0.0)
        return v @ (x * f) @ dagger(v)

    return ProjectionSampler(evaluate, rank, D, d, ns, derivative=derivative,
                             cs_flag=h.cs_flag, min_gap=min_gap, hamiltonian=h)


def sampler_from_function(fn, rank, size, dimension, n, derivative=None,
                          cs_flag=CSFlag.UNKNOWN):
    """Wrap an arbitrary projection-valued function as a sampler."""
    return ProjectionSampler(fn, rank, size, dimension, n, derivative=derivative,
                             cs_flag=cs_flag)


def zak_to_periodic(pi, taus, tol=DEFAULT):
    """Turn a covariant family into a periodic one.

    ``pi`` is a sampler with Pi(k + e_j) = tau_j Pi(k) tau_j^*.  With
    tau_j = exp(i M_j) (principal logarithm) and u_k = exp(i sum_j k_j M_j),
    the returned sampler is P(k) = u_k^{-1} Pi(k) u_k, which is periodic.
    """
    taus = [np.asarray(t, dtype=complex) for t in taus]
    if len(taus) != pi.dimension:
        raise ProjectionError(f"need {pi.dimension} translation unitaries, got {len(taus)}")
    for i in range(len(taus)):
        for j in range(i + 1, len(taus)):
            c = opnorm(taus[i] @ taus[j] - taus[j] @ taus[i])
            if c > tol.comm:
                raise ProjectionError(f"translation unitaries {i} and {j} do not commute ({c:.3e})")
    gens = [principal_log(t) for t in taus]
    eigs = [np.linalg.eigh(g) for g in gens]

    def u(k):
        out = None
        for j, (lam, v) in enumerate(eigs):
            f = (v * np.exp(1j * k[..., j, None] * lam)[..., None, :]) @ dagger(v)
            out = f if out is None else out @ f
        return out

    def evaluate(k):
        uk = u(k)
        return dagger(uk) @ pi(k) @ uk

    return ProjectionSampler(evaluate, pi.rank, pi.size, pi.dimension, pi.n,
                             cs_flag=CSFlag.UNKNOWN)
