"""Text serialization: frame files, Wannier and basis CSVs, JSON reports.

Floats are written with 17 significant digits so that files round-trip
bit for bit and repeated runs produce identical bytes.
"""

import csv
import json
from pathlib import Path

import numpy as np

FLOAT = "{:.16e}"


def _fmt(x):
    if isinstance(x, (float, np.floating)):
        return FLOAT.format(float(x))
    return str(int(x)) if isinstance(x, (int, np.integer)) else str(x)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        return x if np.isfinite(x) else str(x)
    if isinstance(obj, complex):
        return {"re": obj.real, "im": obj.imag}
    if obj is None or isinstance(obj, (str, int)):
        return obj
    if hasattr(obj, "to_dict"):
        return _jsonable(obj.to_dict())
    return str(obj)


def write_json(path, doc):
    text = json.dumps(_jsonable(doc), indent=2, sort_keys=True)
    Path(path).write_text(text + "\n")


def read_json(path):
    return json.loads(Path(path).read_text())


def write_rows(path, header, rows):
    with open(path, "w", newline="") as fh:
        out = csv.writer(fh, lineterminator="\n")
        out.writerow(header)
        for row in rows:
            out.writerow([_fmt(x) for x in row])


def write_frame(path, frame):
    """Header row (d, D, N, nodes per axis) then one (re, im) row per entry.

    Entries follow the row-major order of ``frame.values`` (grid..., D, N).
    """
    v = frame.values
    d = frame.dimension
    head = [d, v.shape[-2], v.shape[-1], *v.shape[:d]]
    flat = v.reshape(-1)
    with open(path, "w", newline="") as fh:
        fh.write(",".join(str(int(x)) for x in head) + "\n")
        for z in flat:
            fh.write(f"{FLOAT.format(z.real)},{FLOAT.format(z.imag)}\n")


def read_frame(path):
    """Inverse of :func:`write_frame`; returns a BlochFrame."""
    from .frame1d import BlochFrame

    with open(path) as fh:
        head = [int(x) for x in fh.readline().split(",")]
        d, D, N, nodes = head[0], head[1], head[2], head[3:]
        data = np.loadtxt(fh, delimiter=",", ndmin=2)
    values = (data[:, 0] + 1j * data[:, 1]).reshape(*nodes, D, N)
    return BlochFrame(values, d)


def write_wannier(path, wset):
    d = wset.dimension
    header = ["j"] + [f"gamma{a + 1}" for a in range(d)] + ["site", "re", "im"]
    write_rows(path, header, wset.rows())


def write_basis(path, basis, cells=None):
    """Columns (j, gamma1, gamma2, site-x, site-y, re, im) of a LocalizedBasis.

    ``cells`` restricts the output to the given list of cells (default all).
    """
    patch = basis.patch
    chosen = patch.cells if cells is None else np.atleast_2d(cells)

    def rows():
        for gamma in chosen:
            for j in range(basis.rank):
                col = basis.column(j, gamma)
                for s in range(patch.num_sites):
                    x = patch.positions[s]
                    yield (j, int(gamma[0]), int(gamma[1]), float(x[0]), float(x[1]),
                           float(col[s].real), float(col[s].imag))

    write_rows(path, ["j", "gamma1", "gamma2", "site_x", "site_y", "re", "im"], rows())


def write_branches(path, family):
    """Eigenphase branches (k, j, arg lambda_j) of a unitary family, sorted per node."""
    n = family.values.shape[0] - 1
    k = (np.arange(n + 1) - n // 2) / n
    args = np.sort(np.angle(np.linalg.eigvals(family.values)), axis=-1)

    def rows():
        for i in range(n + 1):
            for j, a in enumerate(args[i]):
                yield (float(k[i]), j, float(a))

    write_rows(path, ["k", "j", "arg"], rows())
