"""Gauge-free topological oracles: Wilson-loop Berry phases and the lattice
(plaquette) Chern number.  Both work from local eigenframes only and never
touch the frames built elsewhere in the package."""

from dataclasses import dataclass, field

import numpy as np

from .errors import WannierLabError
from .grid import symmetric_grid
from .spectral import dagger, principal_arg

#: smallest singular value tolerated in a link overlap V(k)^* V(k')
OVERLAP_MIN = 1e-3


def _local_frames(p):
    """Orthonormal basis of Ran P at each node (eigenvectors with eigenvalue ~1)."""
    lam, v = np.linalg.eigh(p)
    rank = int(round(np.trace(p[(0,) * (p.ndim - 2)]).real))
    return v[..., -rank:]


def _link(va, vb, where=None):
    ov = dagger(va) @ vb
    sv = np.linalg.svd(ov, compute_uv=False)
    if np.min(sv) < OVERLAP_MIN:
        raise WannierLabError("overlap matrix is (nearly) singular; refine the grid",
                              stage="diagnostics", node=where,
                              details={"min_singular_value": float(np.min(sv))})
    d = np.linalg.det(ov)
    return d / np.abs(d)


def _links(va, vb, k1, k2):
    """Batched normalized link determinants on a 2D array of frames."""
    ov = dagger(va) @ vb
    sv = np.linalg.svd(ov, compute_uv=False).min(axis=-1)
    if np.min(sv) < OVERLAP_MIN:
        i, j = np.unravel_index(np.argmin(sv), sv.shape)
        raise WannierLabError("overlap matrix is (nearly) singular; refine the grid",
                              stage="diagnostics", node=(float(k1[i]), float(k2[j])),
                              details={"min_singular_value": float(np.min(sv))})
    d = np.linalg.det(ov)
    return d / np.abs(d)


def _as_values(P):
    return P.values if hasattr(P, "values") else np.asarray(P)


def berry_phase(P):
    """Total Berry phase -arg det prod_i V(k_i)^* V(k_{i+1}) in (-pi, pi].

    ``P`` is a one-dimensional sampler or an array of projections on the
    n + 1 nodes of a symmetric grid; the loop is closed on the identified
    boundary nodes with the same local frame.
    """
    p = _as_values(P)
    v = _local_frames(p[:-1])
    n = len(v)
    k = symmetric_grid(n)
    prod = 1.0 + 0j
    for i in range(n):
        prod *= _link(v[i], v[(i + 1) % n], k[i])
    return float(principal_arg(np.conj(prod)))


def wannier_center_oracle(P):
    """Sum of Wannier centres (cell units) mod 1 implied by the Berry phase."""
    return float(np.mod(-berry_phase(P) / (2 * np.pi), 1.0))


@dataclass
class ChernResult:
    chern: int
    raw: float
    residual: float
    max_flux: float

    @property
    def reliable(self):
        return self.residual <= 0.1 and self.max_flux < 0.9 * np.pi


def chern_number_report(P):
    """Plaquette Chern number with its raw sum and largest plaquette flux."""
    p = _as_values(P)
    if p.ndim != 4:
        raise WannierLabError("chern_number needs a two-dimensional sampler", stage="diagnostics")
    n1, n2 = p.shape[0] - 1, p.shape[1] - 1
    if min(n1, n2) < 16:
        raise WannierLabError("chern_number needs a grid of at least 16 x 16", stage="diagnostics")
    v = _local_frames(p[:-1, :-1])
    k1, k2 = symmetric_grid(n1), symmetric_grid(n2)
    u1 = _links(v, np.roll(v, -1, axis=0), k1, k2)
    u2 = _links(v, np.roll(v, -1, axis=1), k1, k2)
    plaq = u1 * np.roll(u2, -1, axis=0) * np.conj(np.roll(u1, -1, axis=1)) * np.conj(u2)
    flux = np.angle(plaq)
    raw = float(np.sum(flux) / (2 * np.pi))
    c = int(np.round(raw))
    return ChernResult(c, raw, abs(raw - c), float(np.max(np.abs(flux))))


def chern_number(P):
    """Integer Chern number of a 2D projection family; errors if unreliable."""
    rep = chern_number_report(P)
    if not rep.reliable:
        raise WannierLabError(f"Chern number unreliable (raw {rep.raw:.3f}, max plaquette "
                              f"flux {rep.max_flux:.3f}); refine the grid", stage="diagnostics",
                              details=rep.__dict__)
    return rep.chern


@dataclass
class TopologyReport:
    chern: int = None
    chern_residual: float = None
    reliable: bool = True
    berry_phases: list = field(default_factory=list)
    det_winding: int = None
    notes: dict = field(default_factory=dict)

    def to_dict(self):
        return {"chern": self.chern, "chern_residual": self.chern_residual,
                "reliable": self.reliable, "berry_phases": list(self.berry_phases),
                "det_winding": self.det_winding, **({"notes": self.notes} if self.notes else {})}


def slice_values(P, axis, index):
    """Projections along ``axis`` at fixed node ``index`` of the other axis."""
    p = _as_values(P)
    return p[:, index] if axis == 0 else p[index]


def diagnose(P, beta=None):
    """TopologyReport for a 1D or 2D sampler (Berry phases of k1-loops per k2)."""
    p = _as_values(P)
    rep = TopologyReport()
    if p.ndim == 3:
        rep.berry_phases = [berry_phase(p)]
        return rep
    cr = chern_number_report(p)
    rep.chern, rep.chern_residual, rep.reliable = cr.chern, cr.residual, cr.reliable
    rep.notes["max_plaquette_flux"] = cr.max_flux
    rep.berry_phases = [berry_phase(slice_values(p, 0, j)) for j in range(p.shape[1])]
    if beta is not None:
        from .unilog import winding
        rep.det_winding = winding(np.linalg.det(beta.values))
    return rep
