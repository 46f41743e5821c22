"""Doubly periodic, conjugation-symmetric Bloch frames in two dimensions.

Pipeline: a periodic column frame along k2 at k1 = 0, Kato transport of
that column along k1 from 0 outward, the matching matrix between the two
ends of the k1 interval, and a straightening rotation that closes it.
"""

import numpy as np

from .diagnostics import chern_number_report
from .errors import CSGateError, FrameError
from .frame1d import BlochFrame, frame_1d
from .model import CSFlag
from .spectral import dagger, opnorm, polar_unitary
from .tolerances import DEFAULT
from .transport import transport_path
from .unilog import StraighteningField, UnitaryFamily, straighten


def _column_bases(n2):
    k2 = (np.arange(n2 + 1) - n2 // 2) / n2
    return np.stack([np.zeros_like(k2), k2], axis=1)


def transported_frames(P, column, method="magnus4", tol=DEFAULT):
    """Psi(k1, k2) = A_{k2}(k1, 0) Xi(0, k2) on the full grid, shape (n1+1, n2+1, D, N)."""
    n1, n2 = P.n
    z = n1 // 2
    k1 = (np.arange(n1 + 1) - z) / n1
    bases = _column_bases(n2)
    fwd = transport_path(P, k1[z:], 0, bases, method, tol)
    bwd = transport_path(P, k1[z::-1], 0, bases, method, tol)
    a = np.concatenate([bwd[:, ::-1], fwd[:, 1:]], axis=1)
    psi = a @ column.values[:, None]
    return np.swapaxes(psi, 0, 1)


def matching_matrix(P, column=None, psi=None, method="magnus4", tol=DEFAULT):
    """beta(k2) = Psi(-1/2, k2)^* Psi(1/2, k2), so Psi(1/2) = Psi(-1/2) beta.

    Returned as a UnitaryFamily (polar re-unitarized) together with Psi.
    """
    if psi is None:
        psi = transported_frames(P, column, method, tol)
    raw = dagger(psi[0]) @ psi[-1]
    unit = float(np.max(opnorm(dagger(raw) @ raw - np.eye(raw.shape[-1]))))
    if unit > tol.frame:
        raise FrameError(f"matching matrix is not unitary (residual {unit:.2e})",
                         stage="matching", details={"unitarity": unit})
    beta = polar_unitary(raw)
    beta[-1] = beta[0]
    fam = UnitaryFamily(beta, tol=tol)
    fam.notes["unitarity_before_polar"] = unit
    return fam, psi


def cs_gate(P, tol=DEFAULT):
    """Refuse samplers without conjugation symmetry, attaching a Chern report."""
    if P.cs_flag == CSFlag.HOLDS:
        return
    if P.cs_flag == CSFlag.UNKNOWN and P.cs_residual() <= tol.cs:
        P.cs_flag = CSFlag.HOLDS
        return
    try:
        rep = chern_number_report(P)
        chern = {"chern": rep.chern, "raw": rep.raw, "residual": rep.residual,
                 "reliable": rep.reliable}
    except Exception as exc:  # the report is diagnostic only
        chern = {"error": str(exc)}
    res = getattr(P.hamiltonian, "cs_residual", None)
    node = getattr(P.hamiltonian, "cs_node", None)
    raise CSGateError("conjugation symmetry does not hold; a doubly periodic symmetric frame "
                      "is not constructed", stage="cs-check", node=node,
                      details={"cs_flag": P.cs_flag.value, "cs_residual": res, "chern": chern})


def frame_2d(P, method="magnus4", tol=DEFAULT, **straighten_kw):
    """Doubly periodic, conjugation-symmetric frame of a 2D sampler."""
    if P.dimension != 2:
        raise FrameError("frame_2d needs a two-dimensional sampler")
    cs_gate(P, tol)
    n1, n2 = P.n
    column = frame_1d(P, axis=1, base=np.zeros(2), method=method, tol=tol)
    beta, psi = matching_matrix(P, column, method=method, tol=tol)
    beta.require_cs_prime(tol, stage="matching")
    field = straighten(beta, tol=tol, **straighten_kw)
    k1 = (np.arange(n1 + 1) - n1 // 2) / n1
    xi = np.empty_like(psi)
    for i, x in enumerate(k1):
        xi[i] = psi[i] @ field(x)
    notes = {"pipeline": "frame_2d", "method": method, "beta": beta, "field": field,
             "straighten": field.notes, "boundary_residual": field.boundary_residual(beta)}
    return BlochFrame(xi, 2, cs_flag=True, notes=notes)
