"""Wannier functions from Bloch frames, decay fits and the analytic lift of
continuous frames.

With a frame Xi(k) sampled on the symmetric grid, the Wannier function of
column j in cell gamma is the trapezoid quadrature

    w_j(y, gamma) = (1/n^d) sum_k exp(-2 pi i k . gamma) Xi(k)[y, j],

summing over one copy of each periodic node.  Centres and cells are in the
cell-index convention (site offsets inside a cell are not added).
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import WannierError
from .frame1d import BlochFrame
from .spectral import dagger, inv_sqrt_psd, opnorm
from .tolerances import DEFAULT


def _box_ranges(box, d):
    box = np.broadcast_to(np.atleast_1d(np.asarray(box, dtype=int)), (d,))
    return [np.arange(-r, r + 1) for r in box]


@dataclass
class WannierSet:
    """Amplitudes w_j(y + gamma), stored with shape box + (D, N)."""

    amplitudes: np.ndarray
    cells: list
    sites: np.ndarray = None
    grid: tuple = ()

    @property
    def dimension(self):
        return len(self.cells)

    @property
    def rank(self):
        return self.amplitudes.shape[-1]

    def norms(self):
        """Parseval sums per j over the box."""
        d = self.dimension
        return np.sum(np.abs(self.amplitudes) ** 2, axis=tuple(range(d + 1)))

    def gram(self):
        d = self.dimension
        w = self.amplitudes.reshape(-1, self.rank)
        return dagger(w) @ w

    def shell_norms(self, j):
        """l2 norm of w_j per cell, shape box."""
        return np.sqrt(np.sum(np.abs(self.amplitudes[..., j]) ** 2, axis=-1))

    def centers(self):
        """Centre of mass (cell units) per j, shape (N, d)."""
        d = self.dimension
        out = np.zeros((self.rank, d))
        grids = np.meshgrid(*self.cells, indexing="ij")
        for j in range(self.rank):
            weight = self.shell_norms(j) ** 2
            out[j] = [np.sum(weight * g) / np.sum(weight) for g in grids]
        return out

    def boundary_amplitude(self):
        """Largest |w| on the outer faces of the box relative to the peak."""
        d = self.dimension
        mag = np.max(np.abs(self.amplitudes), axis=(-1, -2))
        edge = 0.0
        for ax in range(d):
            edge = max(edge, float(np.max(np.take(mag, 0, axis=ax))),
                       float(np.max(np.take(mag, -1, axis=ax))))
        return edge / float(np.max(mag))

    def max_imag(self):
        return float(np.max(np.abs(self.amplitudes.imag)))

    def rows(self):
        """(j, gamma..., site, re, im) records in a fixed order."""
        d = self.dimension
        shape = self.amplitudes.shape[:d]
        for j in range(self.rank):
            for idx in np.ndindex(*shape):
                gamma = [int(self.cells[a][idx[a]]) for a in range(d)]
                for y in range(self.amplitudes.shape[d]):
                    z = self.amplitudes[idx + (y, j)]
                    yield (j, *gamma, y, z.real, z.imag)


def wannier_transform(frame, box):
    """Discrete Fourier quadrature of a periodic frame on the cells of ``box``.

    ``box`` is the radius R (scalar or one per axis); cells -R..R are
    produced.  R must not exceed n/2 on any axis (aliasing).
    """
    d = frame.dimension
    ranges = _box_ranges(box, d)
    for ax, r in enumerate(ranges):
        if r[-1] > frame.n[ax] // 2:
            raise WannierError(f"box radius {r[-1]} exceeds half the grid ({frame.n[ax] // 2}) "
                               f"along axis {ax}; the transform would alias")
    xi = frame.values[tuple(slice(0, m) for m in frame.n)]
    amp = xi
    for ax in range(d):
        n = frame.n[ax]
        k = (np.arange(n) - n // 2) / n
        phase = np.exp(-2j * np.pi * np.outer(ranges[ax], k)) / n
        amp = np.moveaxis(np.tensordot(phase, amp, axes=([1], [ax])), 0, ax)
    return WannierSet(amp, ranges, grid=tuple(frame.n))


def inverse_transform(wset, n):
    """Frame values sum_gamma exp(2 pi i k . gamma) w(gamma) on the grid of size n."""
    d = wset.dimension
    ns = np.broadcast_to(np.atleast_1d(n), (d,))
    out = wset.amplitudes
    for ax in range(d):
        k = (np.arange(ns[ax] + 1) - ns[ax] // 2) / ns[ax]
        phase = np.exp(2j * np.pi * np.outer(k, wset.cells[ax]))
        out = np.moveaxis(np.tensordot(phase, out, axes=([1], [ax])), 0, ax)
    return BlochFrame(out, d)


@dataclass
class DecayReport:
    """Per-band fit log ||w_j(. + gamma)|| ~ log C - alpha |gamma| over shells."""

    alpha: np.ndarray
    log_c: np.ndarray
    residual: np.ndarray
    boundary_amplitude: float
    shells: list = field(default_factory=list)

    @property
    def localized(self):
        return bool(np.all(self.alpha > 0))

    def exponential(self, threshold=0.1):
        return bool(self.localized and np.all(self.residual < threshold))

    def to_dict(self):
        return {"alpha": self.alpha.tolist(), "log_C": self.log_c.tolist(),
                "C": np.exp(self.log_c).tolist(), "fit_residual": self.residual.tolist(),
                "boundary_amplitude": self.boundary_amplitude,
                "exponentially_localized": self.localized}


def shell_profile(wset, j, floor=None):
    """(radii, norms) of the l2 norm of w_j per shell.

    In 1D the shells are |gamma|; in 2D the annuli round(|gamma|).  Only
    shells lying entirely inside the box are used (radius at most the
    smallest box half-width); outer annuli are truncated by the box corners
    and carry periodic images of the tail.  Shells whose norm is below
    ``floor`` (default 10 machine epsilons) are dropped.
    """
    floor = 10 * np.finfo(float).eps if floor is None else floor
    grids = np.meshgrid(*wset.cells, indexing="ij")
    r = np.sqrt(sum(g.astype(float) ** 2 for g in grids))
    if wset.dimension > 1:
        r = np.round(r)
    reach = min(min(-c[0], c[-1]) for c in wset.cells)
    sq = wset.shell_norms(j) ** 2
    radii = np.unique(r)
    radii = radii[radii <= reach] if reach > 0 else radii
    norms = np.array([np.sqrt(np.sum(sq[r == x])) for x in radii])
    keep = norms > floor
    return radii[keep], norms[keep]


def decay_fit(wset, floor=None):
    """Least-squares exponential fit per band.

    The residual is 1 - R^2 of the linear fit of the log shell norm against
    the shell radius (0 for an exact exponential).
    """
    alpha, logc, res, shells = [], [], [], []
    for j in range(wset.rank):
        x, y = shell_profile(wset, j, floor)
        if len(x) < 4:
            raise WannierError(f"band {j}: only {len(x)} shells above the noise floor; "
                               "need at least 4 to fit a decay rate")
        ly = np.log(y)
        a = np.vstack([x, np.ones_like(x)]).T
        coef, *_ = np.linalg.lstsq(a, ly, rcond=None)
        err = ly - a @ coef
        ss = np.sum((ly - ly.mean()) ** 2)
        alpha.append(-coef[0])
        logc.append(coef[1])
        res.append(float(np.sum(err ** 2) / ss) if ss > 0 else 0.0)
        shells.append({"radius": x.tolist(), "norm": y.tolist()})
    return DecayReport(np.array(alpha), np.array(logc), np.array(res),
                       wset.boundary_amplitude(), shells)


# analytic lift ------------------------------------------------------------

def _poisson_smooth(values, dimension, delta):
    """Circular convolution with the periodized Poisson kernel per axis."""
    ns = [m - 1 for m in values.shape[:dimension]]
    core = values[tuple(slice(0, m) for m in ns)]
    f = core
    for ax, n in enumerate(ns):
        m = np.fft.fftfreq(n) * n
        shape = [1] * f.ndim
        shape[ax] = n
        f = np.fft.ifft(np.fft.fft(f, axis=ax) * np.exp(-2 * np.pi * delta * np.abs(m)).reshape(shape),
                        axis=ax)
    out = np.empty(values.shape, dtype=complex)
    out[tuple(slice(0, m) for m in ns)] = f
    for ax, n in enumerate(ns):
        src = [slice(None)] * dimension
        dst = [slice(None)] * dimension
        src[ax], dst[ax] = 0, n
        out[tuple(dst)] = out[tuple(src)]
    return out


def fourier_coefficients(frame):
    """Norms of the frame's discrete Fourier coefficients per harmonic |m|."""
    w = wannier_transform(frame, [m // 2 for m in frame.n])
    grids = np.meshgrid(*w.cells, indexing="ij")
    r = np.max(np.abs(np.array(grids)), axis=0)
    mag = np.sqrt(np.sum(np.abs(w.amplitudes) ** 2, axis=(-1, -2)))
    return np.array([np.max(mag[r == m]) for m in range(int(r.max()) + 1)])


def fourier_decay_ratio(frame, floor=1e-13):
    """Fitted r in |c_m| ~ C r^|m| over harmonics above ``floor``."""
    c = fourier_coefficients(frame)
    m = np.flatnonzero(c > floor * c.max())
    if len(m) < 2:
        return 0.0
    slope = np.polyfit(m, np.log(c[m]), 1)[0]
    return float(np.exp(slope))


def smooth_lift(frame, P, delta=None, max_halvings=8, tol=DEFAULT):
    """Analytic frame close to a continuous one: mollify, project, re-orthonormalize.

    With ``delta=None`` the kernel width starts at 0.1 and is halved until
    the Gram matrix of the projected mollified frame is within 1/2 of the
    identity.  An explicit ``delta`` is tried once.
    """
    d = frame.dimension
    p = P.values
    eye = np.eye(frame.rank)
    trial = [delta] if delta is not None else [0.1 / 2 ** i for i in range(max_halvings + 1)]
    for dl in trial:
        phi = p @ _poisson_smooth(frame.values, d, dl)
        gram = dagger(phi) @ phi
        dev = float(np.max(opnorm(gram - eye)))
        if dev <= 0.5:
            out = phi @ inv_sqrt_psd(gram, tol)
            notes = dict(frame.notes, pipeline="smooth_lift", delta=dl, gram_deviation=dev,
                         sup_distance=float(np.max(opnorm(out - frame.values))))
            return BlochFrame(out, d, cs_flag=frame.cs_flag, notes=notes)
    raise WannierError(f"delta too large: Gram matrix deviates by {dev:.3f} > 1/2",
                       details={"delta": dl, "gram_deviation": dev})
