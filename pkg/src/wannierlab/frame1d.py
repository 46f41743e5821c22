"""Periodic (and, for real-hopping models, conjugation symmetric) Bloch
frames in one dimension, built from Kato transport and the holonomy
logarithm."""

import numpy as np
import scipy.linalg as sla

from .errors import FrameError
from .model import CSFlag
from .spectral import dagger, opnorm
from .tolerances import DEFAULT
from .transport import _points, holonomy_log, transport_path


class BlochFrame:
    """Orthonormal frame Xi(k) of Ran P(k) on a symmetric grid.

    ``values`` has shape grid + (D, N), one axis per reciprocal direction.
    """

    def __init__(self, values, dimension, cs_flag=False, notes=None):
        self.values = np.asarray(values, dtype=complex)
        self.dimension = int(dimension)
        self.cs_flag = bool(cs_flag)
        self.notes = dict(notes or {})
        self.n = tuple(m - 1 for m in self.values.shape[:self.dimension])

    @property
    def size(self):
        return self.values.shape[-2]

    @property
    def rank(self):
        return self.values.shape[-1]

    def projections(self):
        return self.values @ dagger(self.values)

    def residuals(self, P=None):
        """Orthonormality, range, periodicity and CS deviations (max over nodes).

        Norms are spectral norms per node.  Range needs the sampler ``P``.
        """
        xi = self.values
        eye = np.eye(self.rank)
        out = {"orthonormality": float(np.max(opnorm(dagger(xi) @ xi - eye)))}
        if P is not None:
            p = P.values
            out["range"] = float(np.max(opnorm(p @ xi - xi)))
        per = 0.0
        for ax in range(self.dimension):
            a = np.take(xi, 0, axis=ax)
            b = np.take(xi, -1, axis=ax)
            per = max(per, float(np.max(opnorm(a - b))))
        out["periodicity"] = per
        mirrored = xi[tuple(slice(None, None, -1) for _ in range(self.dimension))]
        out["cs"] = float(np.max(opnorm(np.conj(xi) - mirrored)))
        return out

    def check(self, P=None, tol=DEFAULT, limit=None):
        limit = (tol.frame if self.dimension == 1 else tol.frame2) if limit is None else limit
        res = self.residuals(P)
        if not self.cs_flag:
            res.pop("cs")
        bad = {k: v for k, v in res.items() if v > limit}
        if bad:
            raise FrameError(f"frame invariants violated: {bad}", details=res)
        return res


def real_seed(p0, tol=DEFAULT):
    """Real orthonormal basis of Ran P0 for a real projection P0."""
    p0 = np.asarray(p0)
    imag = float(np.max(np.abs(p0.imag))) if np.iscomplexobj(p0) else 0.0
    if imag > tol.cs:
        raise FrameError(f"P(0) is not real (max |Im| = {imag:.2e})", stage="frame",
                         node=0.0, details={"imag": imag})
    re = np.real(p0)
    rank = int(round(np.trace(re)))
    q, _, _ = sla.qr(re, pivoting=True)
    q = q[:, :rank]
    # re-orthonormalize inside the range and fix signs deterministically
    q = re @ q
    q, _ = np.linalg.qr(q)
    idx = np.argmax(np.abs(q), axis=0)
    q = q * np.sign(q[idx, np.arange(rank)])
    if np.max(np.abs(re @ q - q)) > 1e-8:
        raise FrameError("real seed does not span Ran P(0)", stage="frame", node=0.0)
    return q


def _default_seed(p0, cs, tol):
    if cs:
        return real_seed(p0, tol)
    lam, v = np.linalg.eigh(p0)
    return v[:, lam > 0.5]


def frame_1d(P, seed=None, method="magnus4", axis=0, base=None, tol=DEFAULT):
    """Periodic frame Xi(k) = A(k, 0) exp(-i k M) seed along one axis.

    A(k, 0) is the Kato propagator from k = 0 and M the holonomy logarithm of
    the full-period loop A(1, 0) = A(-1/2, 0)^* A(1/2, 0).  ``base`` fixes the
    other coordinates when P is a slice of a higher-dimensional sampler.
    """
    if base is None and P.dimension != 1:
        raise FrameError("frame_1d needs a one-dimensional sampler or a base point")
    n = P.n[axis]
    z = n // 2
    ks = np.arange(-z, z + 1) / n
    p0 = P(_points(P, 0.0, axis, base))[0]
    cs = P.cs_flag == CSFlag.HOLDS or (P.cs_flag == CSFlag.UNKNOWN and P.cs_residual() <= tol.cs)
    if seed is None:
        seed = _default_seed(p0, cs, tol)
    seed = np.asarray(seed)
    if seed.ndim == 1:
        seed = seed[:, None]
    miss = float(opnorm(p0 @ seed - seed))
    if miss > tol.frame:
        raise FrameError(f"seed is not in Ran P(0) (residual {miss:.2e})", node=0.0,
                         details={"residual": miss})
    fwd = transport_path(P, ks[z:], axis, base, method, tol)[0]
    bwd = transport_path(P, ks[z::-1], axis, base, method, tol)[0]
    a = np.concatenate([bwd[::-1], fwd[1:]])
    loop = dagger(a[0]) @ a[-1]
    m = holonomy_log(loop, p0, tol)
    lam, v = np.linalg.eigh(m)
    u = a @ (v * np.exp(-1j * ks[:, None, None] * lam[None, None, :])) @ dagger(v)
    xi = u @ seed
    real = not np.iscomplexobj(seed) or np.max(np.abs(np.imag(seed))) <= tol.cs
    notes = {"pipeline": "frame_1d", "method": method, "holonomy": m,
             "holonomy_eigenvalues": np.linalg.eigvalsh(dagger(seed) @ m @ seed)}
    return BlochFrame(xi, 1, cs_flag=cs and real, notes=notes)
