"""Weak magnetic fields on a finite lattice patch.

The zero-field Wannier basis w_{j,gamma} is dressed with Peierls phases,
orthonormalized with the inverse square root of its Gram matrix and
finally rotated into the range of the perturbed spectral projection by the
Sz.-Nagy intertwiner restricted to the dressed subspace:

    Xi = P_b Psi (Psi^* P_b Psi)^{-1/2},   ||Pi_b - P_b|| = sqrt(1 - lambda_min(Psi^* P_b Psi)).

P_b is applied through a Chebyshev expansion of the sign function, so the
patch Hamiltonian is never diagonalized densely.
"""

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from numpy.polynomial import chebyshev as C

from .errors import GapError, MagneticError
from .model import build_bloch, check_cs, grid_points
from .spectral import dagger, hermitize, lower_bands, spectral_projection, sz_nagy
from .tolerances import DEFAULT


@dataclass(frozen=True)
class MagneticConfig:
    """Coupling b and field profile.

    ``field=None`` is the constant unit field; otherwise a callable B(x) for
    points x of shape (..., 2), normalized so that its C^1 norm is at most 1.
    """

    b: float = 0.0
    field: object = None
    b_max: float = 0.05
    quadrature: int = 32

    def __post_init__(self):
        if abs(self.b) > self.b_max:
            raise MagneticError(f"|b| = {abs(self.b)} exceeds b_max = {self.b_max}",
                                details={"b": self.b, "b_max": self.b_max})

    @property
    def constant(self):
        return self.field is None

    def with_b(self, b):
        return MagneticConfig(b, self.field, self.b_max, self.quadrature)


def peierls_phase(x, xp, cfg=None):
    """phi(x, x') for the transverse gauge, antisymmetric in (x, x').

    Constant field: (1/2)(x'_1 x_2 - x_1 x'_2).  Variable field:
    (x'_1 x_2 - x'_2 x_1) * int_0^1 int_0^1 t B(t(x' + s(x - x'))) ds dt by
    tensor Gauss-Legendre quadrature, then antisymmetrized.
    """
    x = np.asarray(x, dtype=float)
    xp = np.asarray(xp, dtype=float)
    cross = xp[..., 0] * x[..., 1] - xp[..., 1] * x[..., 0]
    if cfg is None or cfg.constant:
        return 0.5 * cross

    nodes, wts = np.polynomial.legendre.leggauss(cfg.quadrature)
    t = 0.5 * (nodes + 1)
    w = 0.5 * wts

    def weight(a, c):
        # int_0^1 int_0^1 t B(t (c + s (a - c))) ds dt
        seg = c[..., None, :] + t[:, None] * (a - c)[..., None, :]   # (..., s, 2)
        pts = t[:, None, None] * seg[..., None, :, :]                # (..., t, s, 2)
        vals = np.asarray(cfg.field(pts), dtype=float)
        return np.einsum("...ts,t,s->...", vals, w * t, w)

    # phi(x', x) = -cross * weight(x', x); antisymmetrize phi(x, x') - phi(x', x)
    return 0.5 * cross * (weight(x, xp) + weight(xp, x))


# lattice patch --------------------------------------------------------------

class LatticePatch:
    """L x L cells centred on the origin (cells -L/2 .. L/2 - 1), open boundaries.

    Site index s = cell_index * D + orbital.  Cells are ordered with the
    first coordinate slowest.
    """

    def __init__(self, model, size=40):
        if model.dimension != 2:
            raise MagneticError("magnetic patches need a two-dimensional model")
        self.model = model
        self.size = int(size)
        half = self.size // 2
        rng = np.arange(-half, self.size - half)
        g1, g2 = np.meshgrid(rng, rng, indexing="ij")
        self.cells = np.stack([g1.ravel(), g2.ravel()], axis=1)
        self.lo, self.hi = -half, self.size - half - 1
        D = model.num_sites
        self.D = D
        self.num_cells = len(self.cells)
        self.num_sites = self.num_cells * D
        self.positions = model.positions(self.cells).reshape(-1, 2)
        self.cell_positions = self.cells.astype(float) @ model.lattice
        offsets, mats = model.blocks()
        rows, cols, vals = [], [], []
        for off, mat in zip(offsets.astype(int), mats):
            tgt = self.index_of(self.cells + off)
            ok = tgt >= 0
            src_c = np.flatnonzero(ok)
            tgt_c = tgt[ok]
            for t_orb, s_orb in zip(*np.nonzero(mat)):
                rows.append(tgt_c * D + t_orb)
                cols.append(src_c * D + s_orb)
                vals.append(np.full(len(src_c), mat[t_orb, s_orb]))
        self.rows = np.concatenate(rows)
        self.cols = np.concatenate(cols)
        self.vals = np.concatenate(vals)

    def index_of(self, cells):
        """Cell index of integer cell coordinates, -1 outside the patch."""
        cells = np.asarray(cells)
        inside = np.all((cells >= self.lo) & (cells <= self.hi), axis=-1)
        idx = (cells[..., 0] - self.lo) * self.size + (cells[..., 1] - self.lo)
        return np.where(inside, idx, -1)

    def hamiltonian(self, cfg=None):
        """Sparse H_b with hoppings t(x, x') exp(i b phi(x, x'))."""
        vals = self.vals
        if cfg is not None and cfg.b != 0:
            phi = peierls_phase(self.positions[self.rows], self.positions[self.cols], cfg)
            vals = vals * np.exp(1j * cfg.b * phi)
        elif np.all(np.isreal(vals)):
            vals = vals.real
        return sp.csr_matrix((vals, (self.rows, self.cols)),
                             shape=(self.num_sites, self.num_sites))

    def interior(self, margin):
        """Boolean mask of cells at least ``margin`` cells away from the boundary."""
        m = int(margin)
        return np.all((self.cells >= self.lo + m) & (self.cells <= self.hi - m), axis=1)

    def shift_index(self, gamma):
        """For each site x the index of site x - gamma (or -1 if outside)."""
        cell_idx = self.index_of(self.cells - np.asarray(gamma))
        orb = np.arange(self.D)
        out = np.where(cell_idx[:, None] >= 0, cell_idx[:, None] * self.D + orb, -1)
        return out.ravel()


def peierls_hamiltonian(patch, cfg=None):
    """Patch Hamiltonian with Peierls-substituted hoppings."""
    return patch.hamiltonian(cfg)


# spectral projection on the patch ------------------------------------------

class ChebyshevProjector:
    """X -> P X for the spectral projection of sparse H onto (-inf, mu).

    P = (1 - sign(H - mu))/2 with sign(A) = A g(A^2), g(y) = y^{-1/2}
    expanded in Chebyshev polynomials on [a^2, r^2], where a is a lower
    bound for |spec(H) - mu| and r an upper bound for ||H - mu||.
    """

    def __init__(self, H, mu, a, r, tol=1e-12, max_degree=256):
        if a <= 0:
            raise GapError("no spectral gap around the Fermi level", stage="magnetic")
        self.H = H.tocsr()
        self.mu = float(mu)
        self.a, self.r = float(a), float(r)
        lo, hi = self.a ** 2, self.r ** 2
        self._c0, self._c1 = 0.5 * (hi + lo), 0.5 * (hi - lo)
        coef = C.chebinterpolate(lambda t: (self._c0 + self._c1 * t) ** -0.5, max_degree)
        # coefficients decay geometrically down to a roundoff floor near 1e-15;
        # cut where a run of them drops below tol / (10 r)
        small = np.abs(coef) * self.r < 0.1 * tol
        run = np.convolve(small, np.ones(4), mode="valid") == 4
        if not run.any():
            raise GapError("Chebyshev expansion does not converge at this gap",
                           stage="magnetic", details={"half_gap": self.a, "radius": self.r})
        self.coef = coef[:max(int(np.argmax(run)), 2)]
        self.degree = len(self.coef) - 1

    def _shifted(self, x):
        return self.H @ x - self.mu * x

    def __call__(self, x):
        x = np.ascontiguousarray(x)
        n = self.H.shape[0]
        a = self.H - self.mu * sp.identity(n, format="csr")
        q = ((a @ a - self._c0 * sp.identity(n, format="csr")) / self._c1).tocsr()
        dtype = np.result_type(x, q.dtype)
        t_prev = x.astype(dtype)
        t_cur = q @ t_prev
        acc = self.coef[0] * t_prev + self.coef[1] * t_cur
        for c in self.coef[2:]:
            # t_{k+1} = 2 Q t_k - t_{k-1}, reusing the t_{k-1} buffer
            t_prev *= -1
            t_prev += 2 * (q @ t_cur)
            t_prev, t_cur = t_cur, t_prev
            acc += c * t_cur
        return 0.5 * (x - a @ acc)


def _fermi_window(H, mu, k=6):
    """Eigenvalues of H closest to mu (shift-invert Lanczos)."""
    H = H.tocsc()
    k = min(k, H.shape[0] - 2)
    vals = spla.eigsh(H, k=k, sigma=mu, which="LM", return_eigenvectors=False)
    return np.sort(vals.real)


def patch_projector(H, mu, tol=DEFAULT, ref=None):
    """ChebyshevProjector for H with gap data.

    ``ref`` is (H_0, a_0) of the zero-field patch: the certified half gap
    a_0 - ||H - H_0||_row is reported alongside the computed one.
    """
    near = _fermi_window(H, mu)
    below, above = near[near < mu], near[near > mu]
    if len(below) == 0 or len(above) == 0:
        raise GapError("could not bracket the Fermi level", stage="magnetic")
    mu = 0.5 * (below.max() + above.min())
    a = 0.5 * (above.min() - below.max())
    if a < tol.gap:
        raise GapError(f"spectral gap closes on the patch (half gap {a:.3e})", stage="magnetic")
    # spectral radius of H - mu: Lanczos edges with a 1% margin, capped by the row-sum bound
    rowsum = float(np.max(abs(H).sum(axis=1))) + abs(mu)
    edges = [spla.eigsh(H, k=1, which=w, return_eigenvectors=False, tol=1e-8)[0].real
             for w in ("SA", "LA")]
    r = min(rowsum, 1.01 * max(abs(edges[0] - mu), abs(edges[1] - mu)))
    info = {"mu": float(mu), "half_gap": float(a), "radius": r}
    if ref is not None:
        h0, a0 = ref
        info["certified_half_gap"] = float(a0 - np.max(abs(H - h0).sum(axis=1)))
    proj = ChebyshevProjector(H, mu, 0.98 * a, r)
    info["degree"] = proj.degree
    return proj, info


# localized bases -------------------------------------------------------------

@dataclass
class LocalizedBasis:
    """Columns w_{j,gamma} on the patch, column index = cell_index * N + j."""

    vectors: np.ndarray
    patch: LatticePatch
    rank: int
    notes: dict = field(default_factory=dict)

    def column(self, j, gamma):
        c = int(self.patch.index_of(np.asarray(gamma)))
        if c < 0:
            raise MagneticError(f"cell {gamma} is outside the patch")
        return self.vectors[:, c * self.rank + j]

    def orthonormality_residual(self):
        g = dagger(self.vectors) @ self.vectors
        return float(np.max(np.abs(g - np.eye(g.shape[0]))))

    def localization(self, alpha):
        """M in sup_{j,gamma} sum_x |w(x)|^2 exp(2 alpha |x - gamma|)."""
        pos = self.patch.positions
        cen = np.repeat(self.patch.cell_positions, self.rank, axis=0)
        dist = np.linalg.norm(pos[:, None, :] - cen[None, :, :], axis=-1)
        return float(np.max(np.sum(np.abs(self.vectors) ** 2 * np.exp(2 * alpha * dist), axis=0)))

    def decay_rate(self, j=0, gamma=(0, 0), floor=1e-13):
        """Fitted exponential rate of |w_{j,gamma}| per shell of cell distance."""
        w = self.column(j, gamma)
        cells = self.patch.cells - np.asarray(gamma)
        r = np.round(np.linalg.norm(cells, axis=1))
        norms = np.sqrt(np.sum(np.abs(w.reshape(-1, self.patch.D)) ** 2, axis=1))
        radii = np.unique(r)
        shell = np.array([np.sqrt(np.sum(norms[r == x] ** 2)) for x in radii])
        keep = shell > floor * shell.max()
        slope = np.polyfit(radii[keep], np.log(shell[keep]), 1)[0]
        return float(-slope)


def bulk_wannier(model, bands=1, grid=32, tol=DEFAULT):
    """Real, exponentially localized bulk Wannier functions of the lower bands.

    Returns the WannierSet, the sampler and a Fermi level in the bulk gap.
    """
    from .frame2d import frame_2d
    from .wannier import wannier_transform

    if not 0 < bands < model.num_sites:
        raise MagneticError(f"need 0 < bands < {model.num_sites}, got {bands}")
    h = build_bloch(model)
    check_cs(h, grid, tol)
    P = spectral_projection(h, lower_bands(bands), grid, tol)
    frame = frame_2d(P, tol=tol)
    w = wannier_transform(frame, np.array(P.n) // 2)
    ev = np.linalg.eigvalsh(h(grid_points(P.n, 2))).reshape(-1, model.num_sites)
    mu = 0.5 * (ev[:, bands - 1].max() + ev[:, bands].min())
    return w, P, float(mu)


def zero_field_basis(patch, bulk, mu=0.0, tol=DEFAULT):
    """Zero-field orthonormal basis of Ran P_0(patch) from translated bulk functions.

    Each bulk function is translated to every cell, projected with P_0 of
    the patch and the set is Loewdin-orthonormalized (real arithmetic when
    the data are real).
    """
    amp = bulk.amplitudes            # (R1, R2, D, N)
    N = amp.shape[-1]
    r1, r2 = bulk.cells
    real = np.max(np.abs(amp.imag)) <= tol.w
    dtype = float if real else complex
    W = np.zeros((patch.num_sites, patch.num_cells * N), dtype=dtype)
    off = np.stack(np.meshgrid(r1, r2, indexing="ij"), axis=-1).reshape(-1, 2)
    flat = amp.reshape(-1, patch.D, N)
    if real:
        flat = flat.real
    for c, gamma in enumerate(patch.cells):
        tgt = patch.index_of(off + gamma)
        ok = tgt >= 0
        for j in range(N):
            rows = (tgt[ok][:, None] * patch.D + np.arange(patch.D)).ravel()
            W[rows, c * N + j] = flat[ok, :, j].ravel()
    H0 = patch.hamiltonian()
    proj, info = patch_projector(H0, mu, tol)
    PW = proj(W)
    gram = hermitize(dagger(PW) @ PW)
    lam, v = sla.eigh(gram, driver="evr")
    if lam.min() <= tol.pd:
        raise MagneticError("translated Wannier functions do not span Ran P_0 on the patch")
    basis = PW @ ((v * lam ** -0.5) @ dagger(v))
    # completeness: P_0 r must lie in the span of the basis for probe vectors r
    rng = np.random.default_rng(0)
    probe = rng.standard_normal((patch.num_sites, 4))
    pr = proj(probe)
    miss = float(np.linalg.norm(pr - basis @ (dagger(basis) @ pr)) / np.linalg.norm(probe))
    if miss > 1e-8:
        raise MagneticError(f"zero-field basis does not exhaust Ran P_0 (probe residual {miss:.2e})")
    info.update({"completeness": miss, "gram_min": float(lam.min())})
    out = LocalizedBasis(basis, patch, N, notes=info)
    out.notes["alpha"] = out.decay_rate()
    out.notes["H0"] = H0
    return out


# Gram matrix and orthonormalization -----------------------------------------

def dressing(patch, cfg, rank=1):
    """exp(i b phi(x, gamma)) for every site x and basis column (gamma, j)."""
    if cfg.b == 0:
        return np.ones((patch.num_sites, patch.num_cells * rank))
    phi = peierls_phase(patch.positions[:, None, :], patch.cell_positions[None, :, :], cfg)
    return np.repeat(np.exp(1j * cfg.b * phi), rank, axis=1)


def dressed(w, cfg):
    return dressing(w.patch, cfg, w.rank) * w.vectors


def gram_matrix(w, cfg):
    """M_b[(gamma, j), (gamma', j')] = <e^{ib phi(., gamma)} w_{j,gamma}, e^{ib phi(., gamma')} w_{j',gamma'}>."""
    W = dressed(w, cfg)
    return hermitize(dagger(W) @ W), W


def inv_sqrt_series(m, tol=1e-15, max_terms=500):
    """(I + X)^{-1/2} by the binomial series in X = M - I (needs ||X|| < 1)."""
    x = m - np.eye(m.shape[0])
    nx = np.linalg.norm(x, 2)
    if nx >= 1:
        raise MagneticError(f"power series needs ||M - I|| < 1, got {nx:.3f}")
    out = np.eye(m.shape[0], dtype=m.dtype)
    term = np.eye(m.shape[0], dtype=m.dtype)
    coef = 1.0
    for n in range(1, max_terms):
        coef *= (-0.5 - (n - 1)) / n
        term = term @ x
        out = out + coef * term
        if abs(coef) * nx ** n < tol:
            break
    return out


def inv_sqrt_eig(m):
    lam, v = sla.eigh(m, driver="evr")
    return (v * lam ** -0.5) @ dagger(v), lam


def ortho_magnetic_basis(w, cfg):
    """Psi_b = W_b M_b^{-1/2}; errors if min spec M_b < 1/2."""
    m, W = gram_matrix(w, cfg)
    inv, lam = inv_sqrt_eig(m)
    if lam.min() < 0.5:
        raise MagneticError(f"b too large: min eigenvalue of the Gram matrix is {lam.min():.4f} < 1/2",
                            details={"min_eigenvalue": float(lam.min()), "b": cfg.b})
    psi = LocalizedBasis(W @ inv, w.patch, w.rank,
                         notes={"gram_min_eigenvalue": float(lam.min()), "b": cfg.b,
                                "dressed": W})
    return psi, m, inv


def magnetic_transfer(H, psi, mu=0.0, tol=DEFAULT, ref=None):
    """Xi = P_b Psi (Psi^* P_b Psi)^{-1/2} and ||Pi_b - P_b||.

    This equals U_b Psi for the Sz.-Nagy intertwiner U_b of (P_b, Pi_b)
    restricted to Ran Pi_b, so the full unitary is never formed.  ``mu`` is
    a point in the gap; ``ref`` = (H_0, half_gap_0) adds a certified gap.
    """
    proj, info = patch_projector(H, mu, tol, ref=ref)
    ppsi = proj(psi.vectors)
    g = hermitize(dagger(psi.vectors) @ ppsi)
    lam, v = sla.eigh(g, driver="evr")
    if lam.min() <= 0:
        raise MagneticError("||Pi_b - P_b|| >= 1: the dressed basis misses Ran P_b")
    dist = float(np.sqrt(max(0.0, 1.0 - lam.min())))
    if dist >= 1 - 1e-12:
        raise MagneticError(f"||Pi_b - P_b|| = {dist:.6f} is not below 1")
    xi = ppsi @ ((v * lam ** -0.5) @ dagger(v))
    info["projection_distance"] = dist
    out = LocalizedBasis(xi, psi.patch, psi.rank, notes=info)
    rng = np.random.default_rng(1)
    probe = rng.standard_normal((xi.shape[0], 4))
    pr = proj(probe)
    out.notes["completeness"] = float(np.linalg.norm(pr - xi @ (dagger(xi) @ pr))
                                      / np.linalg.norm(probe))
    out.notes["range"] = float(np.linalg.norm(proj(xi[:, :8]) - xi[:, :8], 2))
    return out


def dense_transfer(H, psi, rank):
    """Reference route: dense eigendecomposition of H and the full Sz.-Nagy unitary."""
    Hd = H.toarray() if sp.issparse(H) else np.asarray(H)
    lam, v = np.linalg.eigh(Hd)
    pb = v[:, :rank] @ dagger(v[:, :rank])
    pi = psi @ dagger(psi)
    u = sz_nagy(pb, pi)
    return u @ psi, float(np.linalg.norm(pb - pi, 2))


# the full pipeline ------------------------------------------------------------

@dataclass
class MagneticResult:
    cfg: MagneticConfig
    w: LocalizedBasis
    psi: LocalizedBasis
    xi: LocalizedBasis
    gram_min: float
    projection_distance: float
    closeness: float
    psi_closeness: float
    info: dict

    def to_dict(self):
        return {"b": self.cfg.b, "gram_min_eigenvalue": self.gram_min,
                "projection_distance": self.projection_distance,
                "closeness": self.closeness, "psi_closeness": self.psi_closeness,
                **{k: v for k, v in self.info.items() if np.isscalar(v)}}


def interior_margin(alpha, tol):
    """Cells needed for exp(-alpha * margin) to fall below tol."""
    return int(np.ceil(np.log(1.0 / tol) / alpha))


def run_field(w, cfg, margin=None, tol=DEFAULT):
    """Dress, orthonormalize and transfer the zero-field basis at coupling cfg.b."""
    patch = w.patch
    if margin is None:
        margin = interior_margin(w.notes["alpha"], tol.mag_trunc)
    psi, m, _ = ortho_magnetic_basis(w, cfg)
    H = patch.hamiltonian(cfg)
    H0 = w.notes["H0"]
    xi = magnetic_transfer(H, psi, w.notes["mu"], tol, ref=(H0, w.notes["half_gap"]))
    info = dict(xi.notes)
    W = psi.notes["dressed"]
    cols = np.flatnonzero(np.repeat(patch.interior(margin), w.rank))
    if len(cols) == 0:
        raise MagneticError("patch too small: no interior cells for the given margin")
    close = float(np.max(np.linalg.norm(xi.vectors[:, cols] - W[:, cols], axis=0)))
    pclose = float(np.max(np.linalg.norm(psi.vectors[:, cols] - W[:, cols], axis=0)))
    info["margin"] = margin
    info["interior_cells"] = int(len(cols) // w.rank)
    return MagneticResult(cfg, w, psi, xi, psi.notes["gram_min_eigenvalue"],
                          xi.notes["projection_distance"], close, pclose, info)


def covariance_checks(res_plus, res_minus, margin=None, tol=DEFAULT):
    """Magnetic-translation covariance and conjugation residuals on interior cells.

    Covariance: Xi_{j,gamma,b}(x) = exp(i b phi(x, gamma)) Xi_{j,0,b}(x - gamma).
    Conjugation: conj(Xi_{j,0,b}) = Xi_{j,0,-b}.
    """
    cfg = res_plus.cfg
    if not cfg.constant:
        raise MagneticError("covariance identities are only claimed for a constant field")
    if res_minus.cfg.b != -cfg.b:
        raise MagneticError("conjugation check needs results at b and -b")
    patch = res_plus.xi.patch
    N = res_plus.xi.rank
    if margin is None:
        margin = res_plus.info["margin"]
    interior = np.flatnonzero(patch.interior(margin))
    xi = res_plus.xi.vectors
    c0 = int(patch.index_of(np.zeros(2, dtype=int)))
    cov = 0.0
    for c in interior:
        gamma = patch.cells[c]
        src = patch.shift_index(gamma)
        ok = src >= 0
        phase = np.exp(1j * cfg.b * peierls_phase(patch.positions, patch.cell_positions[c], cfg))
        for j in range(N):
            ref = np.zeros(patch.num_sites, dtype=complex)
            ref[ok] = phase[ok] * xi[src[ok], c0 * N + j]
            cov = max(cov, float(np.linalg.norm(xi[:, c * N + j] - ref)))
    conj = 0.0
    for j in range(N):
        conj = max(conj, float(np.linalg.norm(np.conj(xi[:, c0 * N + j])
                                              - res_minus.xi.vectors[:, c0 * N + j])))
    return {"covariance": cov, "conjugation": conj, "margin": int(margin),
            "interior_cells": int(len(interior)),
            "covariance_pass": cov < tol.mag_trunc, "conjugation_pass": conj < tol.mag_trunc}


def gauge_structure_residual(inv, patch, cfg, rank=1, margin=0):
    """Spread of M^{-1/2}[(g, j), (g', j')] exp(-i b phi(g, g')) over pairs with equal g - g'.

    Only interior pairs are compared; returns the largest deviation from the
    value at the pair (g, g') with g' = 0.
    """
    cells = patch.cells
    inner = np.flatnonzero(patch.interior(margin))
    c0 = int(patch.index_of(np.zeros(2, dtype=int)))
    pos = patch.cell_positions
    worst = 0.0
    for c in inner:
        for cp in inner[::7]:
            d = cells[c] - cells[cp]
            ref_c = patch.index_of(d)
            if ref_c < 0:
                continue
            ph = np.exp(-1j * cfg.b * peierls_phase(pos[c], pos[cp], cfg))
            ref_ph = np.exp(-1j * cfg.b * peierls_phase(pos[ref_c], pos[c0], cfg))
            a = inv[c * rank:(c + 1) * rank, cp * rank:(cp + 1) * rank] * ph
            b = inv[ref_c * rank:(ref_c + 1) * rank, c0 * rank:(c0 + 1) * rank] * ref_ph
            worst = max(worst, float(np.max(np.abs(a - b))))
    return worst


def fit_slope(bs, values):
    """Slope of log(values) against log(|b|)."""
    return float(np.polyfit(np.log(np.abs(bs)), np.log(values), 1)[0])


def sweep(w, bs, tol=DEFAULT, cfg=None, margin=None):
    """Run the pipeline for each b and fit log-log slopes of the O(b) quantities."""
    cfg = cfg or MagneticConfig()
    results = [run_field(w, cfg.with_b(b), margin=margin, tol=tol) for b in bs]
    dist = [r.projection_distance for r in results]
    close = [r.closeness for r in results]
    report = {
        "b": list(map(float, bs)),
        "projection_distance": dist,
        "closeness": close,
        "psi_closeness": [r.psi_closeness for r in results],
        "gram_min_eigenvalue": [r.gram_min for r in results],
        "slope_projection_distance": fit_slope(bs, dist),
        "slope_closeness": fit_slope(bs, close),
        "runs": [r.to_dict() for r in results],
    }
    return report, results
