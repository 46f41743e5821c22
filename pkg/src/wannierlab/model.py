"""Tight-binding models and their Bloch Hamiltonians.

A hopping ``(source, target, cell, t)`` is the matrix element
``<target, cell | H | source, 0> = t``.  The Bloch Hamiltonian is

    h(k)[target, source] = sum_cell exp(2 pi i k.cell) <target, cell | H | source, 0>

with k in fractional (reduced) coordinates, so h(k + e_j) = h(k).
"""

import enum
import json
from dataclasses import dataclass

import numpy as np

from .errors import ModelError
from .grid import symmetric_grid
from .tolerances import DEFAULT


class CSFlag(enum.Enum):
    HOLDS = "holds"
    FAILS = "fails"
    UNKNOWN = "unknown"


@dataclass(frozen=True)
class Hopping:
    source: int
    target: int
    cell: tuple
    amplitude: complex


class TightBindingModel:
    """Lattice geometry plus a Hermitian-closed list of hoppings.

    Parameters
    ----------
    dimension : int
        1 or 2.
    sites : array_like, shape (D, d)
        Fractional positions of the basis sites.
    hoppings : iterable
        ``(source, target, cell, amplitude)`` tuples or :class:`Hopping`.
        Conjugate partners may be omitted; they are added automatically.
        An explicit partner that is not the conjugate raises ModelError.
    lattice : array_like, shape (d, d), optional
        Rows are the lattice vectors (default: identity).  Only used to
        turn fractional positions into Cartesian ones.
    """

    def __init__(self, dimension, sites, hoppings=(), lattice=None, name=None,
                 tol=DEFAULT):
        if dimension not in (1, 2):
            raise ModelError(f"dimension must be 1 or 2, got {dimension}")
        sites = np.asarray(sites, dtype=float).reshape(-1, dimension)
        if len(sites) < 1:
            raise ModelError("a model needs at least one basis site")
        self.dimension = int(dimension)
        self.sites = sites
        self.lattice = (np.eye(dimension) if lattice is None
                        else np.asarray(lattice, dtype=float).reshape(dimension, dimension))
        self.name = name
        self.hoppings = self._close(hoppings, tol.herm)

    @property
    def num_sites(self):
        return len(self.sites)

    @property
    def decay_radius(self):
        if not self.hoppings:
            return 0.0
        return max(float(np.linalg.norm(h.cell)) for h in self.hoppings)

    def _close(self, hoppings, tol):
        D, d = self.num_sites, self.dimension
        table = {}
        for raw in hoppings:
            h = raw if isinstance(raw, Hopping) else Hopping(*raw)
            cell = tuple(int(c) for c in np.atleast_1d(h.cell))
            if len(cell) != d:
                raise ModelError(f"hopping {h} has a cell offset of the wrong length")
            if not (0 <= h.source < D and 0 <= h.target < D):
                raise ModelError(f"hopping {h} refers to a missing site")
            key = (int(h.source), int(h.target), cell)
            if key in table:
                raise ModelError(f"duplicate hopping {key}")
            table[key] = complex(h.amplitude)
        closed = dict(table)
        for (i, j, cell), t in table.items():
            partner = (j, i, tuple(-c for c in cell))
            if partner == (i, j, cell):
                if abs(t.imag) > tol:
                    raise ModelError(f"on-site term {(i, j, cell)} = {t} is not real",
                                     details={"entry": [i, j, list(cell)]})
                closed[partner] = complex(t.real)
            elif partner in table:
                if abs(table[partner] - t.conjugate()) > tol:
                    raise ModelError(
                        f"hopping {(i, j, cell)} = {t} conflicts with its explicit "
                        f"conjugate {partner} = {table[partner]}",
                        details={"entry": [i, j, list(cell)]})
            else:
                closed[partner] = t.conjugate()
        return [Hopping(i, j, cell, t) for (i, j, cell), t in sorted(closed.items())]

    def blocks(self):
        """Cell offsets (m, d) and matrices (m, D, D) with T[cell][target, source]."""
        D, d = self.num_sites, self.dimension
        cells = sorted({h.cell for h in self.hoppings})
        index = {c: n for n, c in enumerate(cells)}
        mats = np.zeros((len(cells), D, D), dtype=complex)
        for h in self.hoppings:
            mats[index[h.cell], h.target, h.source] += h.amplitude
        return np.array(cells, dtype=float).reshape(-1, d), mats

    def positions(self, cells):
        """Cartesian positions of every site in the given cells, shape (..., D, d)."""
        cells = np.asarray(cells, dtype=float)
        frac = cells[..., None, :] + self.sites
        return frac @ self.lattice

    # serialization -----------------------------------------------------

    def to_dict(self):
        # only one member of each conjugate pair is written
        seen, out = set(), []
        for h in self.hoppings:
            partner = (h.target, h.source, tuple(-c for c in h.cell))
            if partner in seen:
                continue
            seen.add((h.source, h.target, h.cell))
            out.append({"from": h.source, "to": h.target, "cell": list(h.cell),
                        "re": h.amplitude.real, "im": h.amplitude.imag})
        doc = {"dimension": self.dimension, "sites": self.sites.tolist(), "hoppings": out}
        if not np.array_equal(self.lattice, np.eye(self.dimension)):
            doc["lattice"] = self.lattice.tolist()
        return doc

    @classmethod
    def from_dict(cls, doc, tol=DEFAULT):
        try:
            hops = [(e["from"], e["to"], e["cell"], complex(e.get("re", 0.0), e.get("im", 0.0)))
                    for e in doc.get("hoppings", [])]
            return cls(doc["dimension"], doc["sites"], hops, lattice=doc.get("lattice"),
                       name=doc.get("name"), tol=tol)
        except KeyError as exc:
            raise ModelError(f"model document lacks field {exc}") from None


def load_model(path, tol=DEFAULT):
    with open(path) as fh:
        return TightBindingModel.from_dict(json.load(fh), tol=tol)


class BlochHamiltonian:
    """Evaluator k -> h(k) built from a finite hopping list.

    ``cs_flag`` is UNKNOWN until :func:`check_cs` has been run.
    """

    def __init__(self, model):
        self.model = model
        self.dimension = model.dimension
        self.size = model.num_sites
        self.cells, self.mats = model.blocks()
        self.cs_flag = CSFlag.UNKNOWN
        self.cs_residual = None
        self.cs_node = None

    def _phases(self, k):
        k = np.asarray(k, dtype=float)
        if self.dimension == 1 and (k.ndim == 0 or k.shape[-1] != 1):
            k = k[..., None]
        arg = k @ self.cells.T
        # reduce mod 1 first so that h(-1/2) and h(1/2) are bitwise equal
        return np.exp(2j * np.pi * (arg - np.floor(arg))), k

    def __call__(self, k):
        """h(k) for k of shape (..., d) (or (...) when d = 1)."""
        e, k = self._phases(k)
        return np.einsum("...m,mij->...ij", e, self.mats)

    def derivative(self, k, axis=0):
        """dh/dk_axis, exact (no finite differences)."""
        e, k = self._phases(k)
        weights = 2j * np.pi * self.cells[:, axis]
        return np.einsum("...m,mij->...ij", e * weights, self.mats)


def build_bloch(model):
    return BlochHamiltonian(model)


def grid_points(n, dimension):
    """All nodes of a symmetric grid, shape (n1+1[, n2+1], d)."""
    ns = _grid_sizes(n, dimension)
    axes = [symmetric_grid(m) for m in ns]
    return np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)


def _grid_sizes(n, dimension):
    ns = (n,) * dimension if np.ndim(n) == 0 else tuple(n)
    if len(ns) != dimension:
        raise ValueError(f"need {dimension} grid sizes, got {ns}")
    return tuple(int(m) for m in ns)


def hermiticity_residual(h, n):
    hk = h(grid_points(n, h.dimension))
    return float(np.max(np.abs(hk - np.conj(np.swapaxes(hk, -1, -2))), initial=0.0))


def check_cs(h, n, tol=DEFAULT):
    """Test transpose(h(k)) == h(-k) on the symmetric grid; sets ``h.cs_flag``."""
    pts = grid_points(n, h.dimension)
    hk = h(pts)
    mirrored = hk[tuple(slice(None, None, -1) for _ in range(h.dimension))]
    dev = np.max(np.abs(np.swapaxes(hk, -1, -2) - mirrored), axis=(-1, -2), initial=0.0)
    res = float(np.max(dev))
    worst = np.unravel_index(np.argmax(dev), dev.shape)
    h.cs_residual = res
    h.cs_node = tuple(float(x) for x in pts[worst])
    h.cs_flag = CSFlag.HOLDS if res <= tol.cs else CSFlag.FAILS
    return h.cs_flag


# presets -----------------------------------------------------------------

def chain(t=1.0):
    """Monatomic chain, h(k) = 2 t cos(2 pi k)."""
    return TightBindingModel(1, [[0.0]], [(0, 0, (1,), t)], name="chain")


def ssh(v=1.0, w=2.0):
    """SSH chain with h(k) = [[0, v + w e^{-2 pi i k}], [v + w e^{2 pi i k}, 0]]."""
    return TightBindingModel(1, [[0.0], [0.5]],
                             [(0, 1, (0,), v), (0, 1, (1,), w)], name="ssh")


def rice_mele(v=1.0, w=2.0, delta=0.5):
    hops = [(0, 1, (0,), v), (0, 1, (1,), w), (0, 0, (0,), delta), (1, 1, (0,), -delta)]
    return TightBindingModel(1, [[0.0], [0.5]], hops, name="rice-mele")


def ssh_stack(v=1.0, w=0.25, ty=0.1):
    """SSH chains along x stacked along y on a square lattice (real hoppings).

    Sites A = (0, 0), B = (1/2, 0); the lower band is separated from the upper
    one when |v - w| > 2|ty|.
    """
    hops = [(0, 1, (0, 0), v), (1, 0, (1, 0), w),
            (0, 0, (0, 1), ty), (1, 1, (0, 1), ty)]
    return TightBindingModel(2, [[0.0, 0.0], [0.5, 0.0]], hops, name="ssh-stack")


def _realify(t):
    """Real 2n x 2n matrix [[Re t, -Im t], [Im t, Re t]]."""
    t = np.asarray(t, dtype=complex)
    return np.block([[t.real, -t.imag], [t.imag, t.real]])


def qwz_pair(m=-1.0, mix=0.3):
    """Real D = 4 model whose lower two bands form a composite band.

    It is the realification of the two-band Qi-Wu-Zhang model (Chern +-1)
    with a sublattice-like term ``mix * diag(1, 1, -1, -1)`` coupling the
    two time-reversed copies.  All hoppings are real, so the Bloch
    Hamiltonian is conjugation symmetric, while the two lower bands carry
    opposite Berry curvature and their Wilson loop spectrum winds.
    """
    sx = np.array([[0, 1], [1, 0]], dtype=complex)
    sy = np.array([[0, -1j], [1j, 0]])
    sz = np.diag([1.0 + 0j, -1.0])
    onsite = _realify(m * sz) + mix * np.diag([1.0, 1.0, -1.0, -1.0])
    tx = _realify(0.5 * sz - 0.5j * sx)
    ty = _realify(0.5 * sz - 0.5j * sy)
    hops = []
    for a in range(4):
        for b in range(a, 4):
            if onsite[b, a] != 0:
                hops.append((a, b, (0, 0), onsite[b, a]))
    for cell, t in (((1, 0), tx), ((0, 1), ty)):
        for a in range(4):
            for b in range(4):
                if t[b, a] != 0:
                    hops.append((a, b, cell, t[b, a]))
    sites = [[0.0, 0.0]] * 4
    return TightBindingModel(2, sites, hops, name="qwz-pair")


def haldane(t1=1.0, t2=0.15, phi=np.pi / 2, mass=0.0):
    """Haldane model on the honeycomb lattice (sites A, B)."""
    lattice = [[1.0, 0.0], [0.5, np.sqrt(3) / 2]]
    hops = [(0, 1, c, t1) for c in ((0, 0), (-1, 0), (0, -1))]
    hops += [(0, 0, (0, 0), mass), (1, 1, (0, 0), -mass)]
    for c in ((1, 0), (-1, 1), (0, -1)):
        hops.append((0, 0, c, t2 * np.exp(1j * phi)))
        hops.append((1, 1, c, t2 * np.exp(-1j * phi)))
    return TightBindingModel(2, [[1 / 3, 1 / 3], [2 / 3, 2 / 3]], hops,
                             lattice=lattice, name="haldane")


PRESETS = {
    "chain": chain,
    "ssh": ssh,
    "rice-mele": rice_mele,
    "ssh-stack": ssh_stack,
    "qwz-pair": qwz_pair,
    "haldane": haldane,
    "haldane-topological": lambda **kw: haldane(**{"mass": 0.0, **kw}),
    "haldane-trivial": lambda **kw: haldane(**{"mass": 1.5, **kw}),
}


def preset(name, **params):
    try:
        factory = PRESETS[name]
    except KeyError:
        raise ModelError(f"unknown preset {name!r}; available: {sorted(PRESETS)}") from None
    model = factory(**params)
    model.name = name
    return model
