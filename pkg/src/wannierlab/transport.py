"""Kato parallel transport along axis-aligned grid lines.

The propagator solves i dA/dx = K(x) A with K(x) = i[P'(x), P(x)], so that
P(x) A(x, y) = A(x, y) P(y).  Three integrators are available:

``"magnus4"`` (default)
    fourth-order Magnus step with K sampled at the two Gauss points.  P' is
    the exact derivative when the sampler provides one, else a five-point
    central difference on a sub-grid stencil.
``"midpoint"``
    exp(-i dx K(midpoint)) with P' from the central difference of the two
    adjacent grid nodes (second order).
``"compose"``
    chained Sz.-Nagy unitaries between adjacent grid nodes; intertwines
    exactly and serves as an independent oracle.

Every step is re-unitarized by the polar factor.
"""

import numpy as np

from .errors import TransportError
from .spectral import (dagger, expm_herm, hermitize, opnorm, polar_unitary,
                       principal_log, sz_nagy)
from .tolerances import DEFAULT

METHODS = ("magnus4", "midpoint", "compose")
_GAUSS = (0.5 - np.sqrt(3) / 6, 0.5 + np.sqrt(3) / 6)


def _points(P, x, axis, base):
    """Grid points base + x e_axis, shape (B, d)."""
    base = np.zeros((1, P.dimension)) if base is None else np.atleast_2d(base).astype(float)
    pts = base.copy()
    pts[:, axis] = pts[:, axis] + x
    return pts


def kato_kernel(P, x, step, axis=0, base=None, order=2):
    """K(x) = i[P'(x), P(x)] with P' from central differences of width ``step``.

    ``order=2`` uses P(x +- step/2); ``order=4`` the five-point stencil with
    half-width step/2.  Returns shape (B, D, D) for B base points.
    """
    h = 0.5 * step
    p = P(_points(P, x, axis, base))
    if order == 2:
        dp = (P(_points(P, x + h, axis, base)) - P(_points(P, x - h, axis, base))) / step
    elif order == 4:
        f = [P(_points(P, x + s * h, axis, base)) for s in (-2, -1, 1, 2)]
        dp = (f[0] - 8 * f[1] + 8 * f[2] - f[3]) / (12 * h)
    else:
        raise ValueError("order must be 2 or 4")
    return hermitize(1j * (dp @ p - p @ dp))


def kato_kernel_exact(P, x, axis=0, base=None):
    """K(x) from the sampler's exact derivative (needs ``P.derivative``)."""
    pts = _points(P, x, axis, base)
    p, dp = P(pts), P.derivative(pts, axis)
    return hermitize(1j * (dp @ p - p @ dp))


def _step(P, xa, xb, method, axis, base, tol):
    dx = xb - xa
    if method == "compose":
        return sz_nagy(P(_points(P, xb, axis, base)), P(_points(P, xa, axis, base)), tol)
    if method == "midpoint":
        k = kato_kernel(P, 0.5 * (xa + xb), abs(dx), axis, base, order=2)
        return expm_herm(k, dx)
    if method == "magnus4":
        if P.derivative is not None:
            k1, k2 = (kato_kernel_exact(P, xa + c * dx, axis, base) for c in _GAUSS)
        else:
            k1, k2 = (kato_kernel(P, xa + c * dx, abs(dx) / 4, axis, base, order=4) for c in _GAUSS)
        gen = 0.5 * dx * (k1 + k2) - 1j * (np.sqrt(3) / 12) * dx * dx * (k2 @ k1 - k1 @ k2)
        return expm_herm(hermitize(gen))
    raise ValueError(f"unknown transport method {method!r}; use one of {METHODS}")


def transport_path(P, xs, axis=0, base=None, method="magnus4", tol=DEFAULT):
    """Cumulative propagators A(xs[m], xs[0]) along the ordered nodes ``xs``.

    Returns an array of shape (B, len(xs), D, D), batched over base points.
    """
    xs = np.asarray(xs, dtype=float)
    B = 1 if base is None else np.atleast_2d(base).shape[0]
    out = np.empty((B, len(xs), P.size, P.size), dtype=complex)
    a = np.broadcast_to(np.eye(P.size, dtype=complex), (B, P.size, P.size)).copy()
    out[:, 0] = a
    for m in range(1, len(xs)):
        a = polar_unitary(_step(P, xs[m - 1], xs[m], method, axis, base, tol) @ a)
        out[:, m] = a
    return out


class Propagator:
    """A(stop, start) on one grid line, with its intertwining residual."""

    def __init__(self, start, stop, matrix, method, residual):
        self.start = start
        self.stop = stop
        self.matrix = matrix
        self.method = method
        self.residual = residual

    @property
    def U(self):
        return self.matrix

    def __repr__(self):
        return (f"Propagator({self.start} -> {self.stop}, method={self.method}, "
                f"residual={self.residual:.2e})")


def intertwining_residual(P, a, start, stop, axis=0, base=None):
    p0 = P(_points(P, start, axis, base))
    p1 = P(_points(P, stop, axis, base))
    return float(np.max(opnorm(p1 @ a - a @ p0)))


def propagate(P, start, stop, axis=0, base=None, method="magnus4", tol=DEFAULT):
    """Propagator from grid parameter ``start`` to ``stop`` along ``axis``.

    Both end points must be nodes of the sampler's grid (any real numbers
    on the lattice (1/n) Z are accepted, so full loops like 0 -> 1 work).
    """
    n = P.n[axis]
    i0, i1 = start * n, stop * n
    if abs(i0 - round(i0)) > 1e-9 or abs(i1 - round(i1)) > 1e-9:
        raise TransportError(f"end points {start}, {stop} are not grid nodes (n = {n})")
    i0, i1 = int(round(i0)), int(round(i1))
    step = 1 if i1 >= i0 else -1
    xs = np.arange(i0, i1 + step, step) / n
    a = transport_path(P, xs, axis, base, method, tol)[:, -1]
    res = intertwining_residual(P, a, start, stop, axis, base)
    if base is None or np.atleast_2d(base).shape[0] == 1:
        a = a[0]
    return Propagator(start, stop, a, method, res)


def holonomy_log(a_loop, p0, tol=DEFAULT):
    """Hermitian M with exp(iM) = A_loop, spectrum in (-pi, pi], [M, P0] = 0.

    A_loop is first block-diagonalized in the Ran P0 / Ran (1 - P0) split,
    each block is re-unitarized and its principal logarithm taken.
    """
    a_loop = np.asarray(a_loop, dtype=complex)
    p0 = hermitize(np.asarray(p0, dtype=complex))
    comm = float(opnorm(p0 @ a_loop - a_loop @ p0))
    if comm > tol.transport:
        raise TransportError(f"holonomy does not preserve fiber (||[P0, A]|| = {comm:.3e})",
                             details={"commutator": comm})
    lam, v = np.linalg.eigh(p0)
    inside = lam > 0.5
    m = np.zeros_like(a_loop)
    for sel in (inside, ~inside):
        b = v[:, sel]
        if b.shape[1]:
            block = polar_unitary(dagger(b) @ a_loop @ b)
            m += b @ principal_log(block) @ dagger(b)
    return hermitize(m)
