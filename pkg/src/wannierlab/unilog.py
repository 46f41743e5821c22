"""Logarithms of periodic unitary families beta(k) on a symmetric grid.

All families live on the nodes k_i = (i - n/2)/n, i = 0..n (see
:mod:`wannierlab.grid`).  Under the symmetry transpose(beta(k)) = beta(-k)
the returned logarithms satisfy transpose(h(k)) = h(-k); this is enforced by
building the k >= 0 half and mirroring it.
"""

import itertools

import numpy as np
from scipy.optimize import linear_sum_assignment

from .errors import (BranchAmbiguityError, DegeneracyError, StraightenError,
                     SymmetryError, WindingError, WannierLabError)
from .grid import symmetric_grid
from .spectral import (dagger, expm_herm, hermitize, opnorm, polar_unitary,
                       principal_arg, unitary_eig)
from .tolerances import DEFAULT


def _tr(a):
    return np.swapaxes(a, -1, -2)


def arc_distance(a, b):
    """Distance on the unit circle between angles a and b."""
    d = np.mod(np.asarray(a) - np.asarray(b) + np.pi, 2 * np.pi) - np.pi
    return np.abs(d)


def cut_args(evals):
    """Arguments with the branch cut in the middle of the widest spectral gap.

    The values lie in a window (c - 2 pi, c] with c the gap centre, shifted
    by a multiple of 2 pi so that their mean is in [-pi, pi].  Eigenvalue
    clusters are never split by the cut.
    """
    a = principal_arg(evals)
    if len(a) == 1:
        return a
    srt = np.sort(a)
    gaps = np.diff(np.concatenate([srt, [srt[0] + 2 * np.pi]]))
    i = int(np.argmax(gaps))
    c = srt[i] + 0.5 * gaps[i]
    out = c - np.mod(c - a, 2 * np.pi)
    return out - 2 * np.pi * np.round(np.mean(out) / (2 * np.pi))


def _min_circle_gap(evals):
    """Smallest arc distance between distinct eigenvalues (inf for N = 1)."""
    args = np.sort(principal_arg(evals))
    if len(args) < 2:
        return np.inf
    gaps = np.diff(np.concatenate([args, [args[0] + 2 * np.pi]]))
    return float(np.min(gaps))


class UnitaryFamily:
    """Unitary N x N matrices beta(k) on the n + 1 nodes of a symmetric grid.

    The boundary nodes are identified: after validation the value at
    k = +1/2 is replaced by the (equal within 1e-10) value at k = -1/2.
    """

    def __init__(self, values, cs_prime=None, notes=None, tol=DEFAULT):
        values = np.array(values, dtype=complex)
        if values.ndim == 1:
            values = values[:, None, None]
        self.n = values.shape[0] - 1
        self.k = symmetric_grid(self.n)
        eye = np.eye(values.shape[-1])
        unit = float(np.max(np.abs(dagger(values) @ values - eye)))
        if unit > 1e-10:
            raise WannierLabError(f"family is not unitary (residual {unit:.2e})", stage="unilog")
        gap = float(np.max(np.abs(values[0] - values[-1])))
        if gap > 1e-10:
            raise WannierLabError(f"family is not periodic (residual {gap:.2e})", stage="unilog")
        values[-1] = values[0]
        self.values = values
        self.notes = dict(notes or {})
        res = self.cs_prime_residual()
        self.cs_prime = (res <= tol.cs) if cs_prime is None else bool(cs_prime)

    @classmethod
    def from_function(cls, fn, n, **kw):
        return cls(np.array([fn(k) for k in symmetric_grid(n)]), **kw)

    @property
    def size(self):
        return self.values.shape[-1]

    def __len__(self):
        return len(self.values)

    def __getitem__(self, i):
        return self.values[i]

    def cs_prime_residual(self):
        return float(np.max(np.abs(_tr(self.values) - self.values[::-1])))

    def require_cs_prime(self, tol=DEFAULT, stage="unilog"):
        res = self.cs_prime_residual()
        if res > tol.cs:
            i = int(np.argmax(np.max(np.abs(_tr(self.values) - self.values[::-1]), axis=(1, 2))))
            raise SymmetryError(f"family violates transpose(beta(k)) = beta(-k) (residual {res:.2e})",
                                stage=stage, node=self.k[i], details={"residual": res})


class HermitianFamily:
    """Hermitian N x N matrices h(k) on the nodes of a symmetric grid."""

    def __init__(self, values, notes=None):
        self.values = hermitize(np.asarray(values, dtype=complex))
        self.n = self.values.shape[0] - 1
        self.k = symmetric_grid(self.n)
        self.notes = dict(notes or {})

    def exp(self, t=1.0):
        """exp(i t h(k)) at every node."""
        return expm_herm(self.values, -t)

    def exp_residual(self, beta):
        b = beta.values if isinstance(beta, UnitaryFamily) else np.asarray(beta)
        return float(np.max(opnorm(self.exp() - b)))

    def cs_residual(self):
        return float(np.max(np.abs(_tr(self.values) - self.values[::-1])))

    def periodicity_residual(self):
        return float(np.max(np.abs(self.values[0] - self.values[-1])))


def _mirror_fill(values):
    """Fill nodes k < 0 from k > 0 by transposition and symmetrize the
    self-mirrored nodes k = 0 and k = +-1/2 (which are identified)."""
    v = np.array(values)
    n = v.shape[0] - 1
    z = n // 2
    for i in range(z + 1, n):
        v[n - i] = _tr(v[i])
    v[z] = 0.5 * (v[z] + _tr(v[z]))
    end = 0.5 * (v[n] + _tr(v[n]))
    v[0] = end
    v[n] = end
    return v


def _cs_symmetrize(values):
    """Average each node with the transpose of its mirror image."""
    v = np.asarray(values)
    return _mirror_fill(0.5 * (v + _tr(v[::-1])))


# winding and scalar phases ------------------------------------------------

def winding(f, tol=DEFAULT):
    """Winding number of a nonvanishing periodic scalar family on the grid."""
    f = np.asarray(f.values if isinstance(f, UnitaryFamily) else f, dtype=complex).reshape(len(f), -1)
    if f.shape[1] != 1:
        raise ValueError("winding needs a scalar family")
    f = f[:, 0]
    k = symmetric_grid(len(f) - 1)
    small = np.abs(f)
    if np.min(small) <= tol.pd:
        i = int(np.argmin(small))
        raise WindingError("family vanishes on the grid", node=k[i])
    inc = np.angle(f[1:] / f[:-1])
    if np.max(np.abs(inc)) > np.pi / 2:
        i = int(np.argmax(np.abs(inc)))
        raise WindingError("grid too coarse to follow the phase", node=k[i],
                           details={"max_increment": float(np.max(np.abs(inc)))})
    total = np.sum(inc) / (2 * np.pi)
    w = int(np.round(total))
    if abs(total - w) > 0.1:
        raise WindingError(f"winding is not close to an integer ({total:.3f})")
    return w


def lift_phase(beta, tol=DEFAULT):
    """Continuous even periodic phase phi with beta(k) = beta(0) exp(i phi(k)), phi(0) = 0."""
    b = np.asarray(beta.values if isinstance(beta, UnitaryFamily) else beta, dtype=complex)
    b = b.reshape(len(b), -1)
    if b.shape[1] != 1:
        raise ValueError("lift_phase needs a scalar family")
    b = b[:, 0]
    n = len(b) - 1
    k = symmetric_grid(n)
    if np.max(np.abs(np.abs(b) - 1)) > 1e-10:
        raise WindingError("family is not unimodular", stage="unilog")
    odd = np.abs(b - b[::-1])
    if np.max(odd) > tol.cs:
        i = int(np.argmax(odd))
        raise SymmetryError(f"family is not even (residual {np.max(odd):.2e})", stage="unilog",
                            node=k[i])
    w = winding(b, tol)
    if w != 0:
        raise WindingError(f"family has winding {w}", details={"winding": w})
    z = n // 2
    phi = np.zeros(n + 1)
    inc = np.angle(b[1:] / b[:-1])
    phi[z + 1:] = np.cumsum(inc[z:])
    phi[:z] = -np.cumsum(inc[:z][::-1])[::-1]
    return 0.5 * (phi + phi[::-1])


def log_scalar(beta, tol=DEFAULT):
    """1 x 1 logarithm arg beta(0) + lift_phase(beta)."""
    b = np.asarray(beta.values if isinstance(beta, UnitaryFamily) else beta).reshape(-1)
    phi = lift_phase(b, tol) + principal_arg(b[len(b) // 2])
    return HermitianFamily(phi[:, None, None].astype(complex), notes={"branches": phi[:, None]})


# branch tracking ----------------------------------------------------------

def _spectral_data(values):
    lam = np.empty(values.shape[:2], dtype=complex)
    vec = np.empty(values.shape, dtype=complex)
    for i, b in enumerate(values):
        lam[i], vec[i] = unitary_eig(b)
    return lam, vec


def _second_best(score, best_cols):
    """Best assignment score once any one edge of the optimum is forbidden."""
    rows = np.arange(score.shape[0])
    if len(rows) < 2:
        return -np.inf
    if len(rows) <= 6:
        perms = itertools.permutations(range(len(rows)))
        vals = sorted((score[rows, list(p)].sum() for p in perms), reverse=True)
        return vals[1]
    out = -np.inf
    for r, c in zip(rows, best_cols):
        s = score.copy()
        s[r, c] = -1e9
        rr, cc = linear_sum_assignment(-s)
        out = max(out, s[rr, cc].sum())
    return out


def _log_from_branches(lam_half, proj_half, n):
    """h = sum_j (arg lambda_j(0) + phi_j) P_j from data on nodes n/2 .. n."""
    z = n // 2
    N = lam_half.shape[1]
    lam = np.empty((n + 1, N), dtype=complex)
    lam[z:] = lam_half
    lam[:z] = lam_half[::-1][:-1]
    start = cut_args(lam[z])
    phases = np.empty((n + 1, N))
    for j in range(N):
        b = lam[:, j] / np.abs(lam[:, j])
        phases[:, j] = lift_phase(b) + start[j]
    proj = np.zeros((n + 1,) + proj_half.shape[1:], dtype=complex)
    proj[z:] = proj_half
    h = np.einsum("kj,kjab->kab", phases, proj)
    return _mirror_fill(hermitize(h)), phases


def log_noncrossing(beta, tol=DEFAULT):
    """Logarithm of a family whose spectrum is nondegenerate at every node.

    Branches are followed by eigenvalue continuity from k = 0 to k = 1/2
    and mirrored to k < 0 with lambda_j(-k) = lambda_j(k),
    P_j(-k) = transpose(P_j(k)).
    """
    beta.require_cs_prime(tol)
    n, z = beta.n, beta.n // 2
    lam, vec = _spectral_data(beta.values)
    gaps = np.array([_min_circle_gap(l) for l in lam])
    bad = np.flatnonzero(gaps < tol.degen)
    if len(bad):
        order = bad[np.argsort(np.abs(beta.k[bad]), kind="stable")]
        raise DegeneracyError(f"degenerate eigenvalues at k = {beta.k[order[0]]:g}",
                              node=beta.k[order[0]],
                              details={"nodes": [float(beta.k[i]) for i in order],
                                       "min_gap": float(gaps[order[0]])})
    N = beta.size
    first = np.argsort(cut_args(lam[z]), kind="stable")
    cur_lam, cur_vec = lam[z][first], vec[z][:, first]
    lam_half = [cur_lam]
    proj_half = [np.einsum("aj,bj->jab", cur_vec, cur_vec.conj())]
    for i in range(z + 1, n + 1):
        cost = arc_distance(principal_arg(cur_lam)[:, None], principal_arg(lam[i])[None, :])
        _, cols = linear_sum_assignment(cost)
        cur_lam, cur_vec = lam[i][cols], vec[i][:, cols]
        lam_half.append(cur_lam)
        proj_half.append(np.einsum("aj,bj->jab", cur_vec, cur_vec.conj()))
    h, phases = _log_from_branches(np.array(lam_half), np.array(proj_half), n)
    return HermitianFamily(h, notes={"branches": phases, "method": "noncrossing"})


def log_analytic_endpoints(beta, tol=DEFAULT):
    """Logarithm of a (numerically) analytic family nondegenerate at 0 and 1/2.

    Branches start at k = 0 ordered by principal argument and are continued
    through interior crossings by overlap-maximal matching of eigenvectors
    between adjacent nodes.
    """
    beta.require_cs_prime(tol)
    n, z = beta.n, beta.n // 2
    lam, vec = _spectral_data(beta.values)
    for i in (z, n):
        g = _min_circle_gap(lam[i])
        if g < tol.degen:
            raise DegeneracyError(f"degenerate eigenvalues at endpoint k = {beta.k[i]:g}",
                                  node=beta.k[i], details={"min_gap": g})
    first = np.argsort(cut_args(lam[z]), kind="stable")
    cur_lam, cur_vec = lam[z][first], vec[z][:, first]
    lam_half = [cur_lam]
    proj_half = [np.einsum("aj,bj->jab", cur_vec, cur_vec.conj())]
    for i in range(z + 1, n + 1):
        score = np.abs(dagger(cur_vec) @ vec[i]) ** 2
        rows, cols = linear_sum_assignment(-score)
        best = score[rows, cols].sum()
        second = _second_best(score, cols)
        if best - second < tol.match:
            raise BranchAmbiguityError(
                f"ambiguous branch matching at k = {beta.k[i]:g} "
                f"(score separation {best - second:.3f}); refine the grid",
                node=beta.k[i], details={"separation": float(best - second)})
        cur_lam, cur_vec = lam[i][cols], vec[i][:, cols]
        lam_half.append(cur_lam)
        proj_half.append(np.einsum("aj,bj->jab", cur_vec, cur_vec.conj()))
    h, phases = _log_from_branches(np.array(lam_half), np.array(proj_half), n)
    return HermitianFamily(h, notes={"branches": phases, "method": "analytic-endpoints"})


# Cayley logarithm ---------------------------------------------------------

def circle_gap(beta, bins=None, tol=DEFAULT):
    """Centre of the widest arc free of eigenvalues over the whole grid.

    The arc is shrunk by ``tol.degen`` at both ends and must stay at least
    2 pi / bins wide (``bins`` defaults to the number of grid intervals);
    otherwise None is returned.  Ties go to the centre with positive angle.
    """
    bins = beta.n if bins is None else int(bins)
    lam, _ = _spectral_data(beta.values[:-1])
    args = np.sort(principal_arg(lam.ravel()))
    ext = np.concatenate([args, [args[0] + 2 * np.pi]])
    widths = np.diff(ext) - 2 * tol.degen
    centres = principal_arg(np.exp(1j * (ext[:-1] + 0.5 * np.diff(ext))))
    best = np.max(widths)
    if best < 2 * np.pi / bins:
        return None
    ties = np.flatnonzero(widths >= best - 1e-12)
    pos = [i for i in ties if centres[i] > 0]
    return float(centres[pos[0] if pos else ties[0]])


def log_cayley(beta, phi0, tol=DEFAULT):
    """Logarithm with the branch cut along the ray through exp(i phi0).

    gamma = exp(i(pi - phi0)) beta, s = i(1 - gamma)(1 + gamma)^{-1} and
    h = (phi0 - pi) + 2 arctan(s).
    """
    N = beta.size
    eye = np.eye(N)
    gamma = np.exp(1j * (np.pi - phi0)) * beta.values
    sv = np.linalg.svd(eye + gamma, compute_uv=False)[:, -1]
    if np.min(sv) < tol.degen:
        i = int(np.argmin(sv))
        raise DegeneracyError(f"exp(i phi0) is (close to) an eigenvalue at k = {beta.k[i]:g}",
                              node=beta.k[i], details={"distance": float(sv[i])})
    s = hermitize(1j * np.linalg.solve(eye + gamma, eye - gamma))
    sig, v = np.linalg.eigh(s)
    h = (phi0 - np.pi) * eye + (v * (2 * np.arctan(sig))[:, None, :]) @ dagger(v)
    if beta.cs_prime:
        h = _cs_symmetrize(h)
    else:
        h[-1] = h[0]
    return HermitianFamily(h, notes={"method": "cayley", "phi0": float(phi0)})


# regularization -----------------------------------------------------------

def _tent(x, s):
    return np.clip(1 - np.abs(x) / (0.5 * s), 0.0, None)


def _clusters(evals, width):
    """Group eigenvalue indices whose neighbours on the circle are closer than width."""
    args = principal_arg(evals)
    order = np.argsort(args, kind="stable")
    a = args[order]
    N = len(a)
    if N == 1:
        return [list(order)]
    gaps = np.diff(np.concatenate([a, [a[0] + 2 * np.pi]]))
    cuts = np.flatnonzero(gaps >= width)
    if len(cuts) == 0:
        return [list(order)]
    groups = []
    start = (cuts[0] + 1) % N
    cur = []
    for step in range(N):
        idx = (start + step) % N
        cur.append(int(order[idx]))
        if idx in cuts:
            groups.append(cur)
            cur = []
    return groups


def _real_cluster_basis(b0, vec, members, tol):
    """Real orthonormal eigenbasis of a symmetric unitary inside one cluster."""
    v = vec[:, members]
    proj = v @ dagger(v)
    if np.max(np.abs(proj.imag)) > max(1e-8, 1e3 * tol.cs):
        raise SymmetryError("cluster projection is not real (transpose symmetry violated)",
                            stage="regularize")
    lam, q = np.linalg.eigh(proj.real)
    q = q[:, lam > 0.5]
    c = q.T @ b0 @ q
    _, r = np.linalg.eigh(c.real + 0.6180339887498949 * c.imag)
    basis = q @ r
    centre = np.exp(1j * np.angle(np.sum(np.diag(basis.T @ b0 @ basis))))
    dev = principal_arg(np.diag(basis.T @ b0 @ basis) / centre)
    return basis[:, np.argsort(dev, kind="stable")], centre


def regularize(beta, s=0.1, nu=0.01, tol=DEFAULT):
    """Analytic surrogate of beta with split spectrum at k = 0 and k = 1/2.

    Step 1 spreads each eigenvalue cluster at k* in {0, 1/2} (clusters are
    eigenvalues closer than max(s, tol.degen) on the circle) by the generator
    s * g_s(k - k*) * sum_l (l - 1) P_l, added to the local logarithm, with
    g_s the tent of half-width s/2.  Step 2 convolves with the periodized
    Poisson kernel of width nu (Fourier multiplier exp(-2 pi nu |m|)) and
    takes the unitary polar factor.
    """
    beta.require_cs_prime(tol, stage="regularize")
    n, z = beta.n, beta.n // 2
    k = beta.k
    out = beta.values.copy()
    N = beta.size
    if s > 0:
        for kstar, node in ((0.0, z), (0.5, n)):
            b0 = beta.values[node]
            lam0, vec0 = unitary_eig(b0)
            groups = _clusters(lam0, max(s, tol.degen))
            if all(len(g) == 1 for g in groups):
                continue
            gen = np.zeros((N, N))
            centres = []
            for g in groups:
                basis, centre = _real_cluster_basis(b0, vec0, g, tol)
                centres.append(centre)
                gen += basis @ np.diag(np.arange(len(g), dtype=float)) @ basis.T
            centres = np.array(centres)
            sizes = np.array([len(g) for g in groups])
            dist = k - kstar
            dist = dist - np.round(dist)
            for i in np.flatnonzero(np.abs(dist) < 0.5 * s):
                lam, vec = unitary_eig(beta.values[i])
                owner = np.argmin(arc_distance(principal_arg(lam)[:, None],
                                               principal_arg(centres)[None, :]), axis=1)
                if np.any(np.bincount(owner, minlength=len(groups)) != sizes):
                    raise DegeneracyError("eigenvalue clusters do not persist inside the bump; "
                                          "reduce s", stage="regularize", node=k[i])
                c = centres[owner]
                phase = principal_arg(c) + principal_arg(lam / c)
                hloc = (vec * phase) @ dagger(vec)
                out[i] = expm_herm(hloc + s * _tent(dist[i], s) * gen, -1.0)
        out = _mirror_fill_unitary(out)
    if nu > 0:
        m = np.fft.fftfreq(n) * n
        mult = np.exp(-2 * np.pi * nu * np.abs(m))
        mu = np.fft.ifft(np.fft.fft(out[:n], axis=0) * mult[:, None, None], axis=0)
        out = np.empty_like(out)
        out[:n] = polar_unitary(mu)
        out[n] = out[0]
    sup = float(np.max(opnorm(out - beta.values)))
    result = UnitaryFamily(out, cs_prime=True, tol=tol)
    gaps = [_min_circle_gap(unitary_eig(result.values[i])[0]) for i in (z, n)]
    result.notes.update({"s": s, "nu": nu, "sup_distance": sup,
                         "endpoint_gaps": [float(g) for g in gaps]})
    return result


def _mirror_fill_unitary(values):
    """Mirror k > 0 onto k < 0 by transposition (keeps unitarity exactly)."""
    v = np.array(values)
    n = v.shape[0] - 1
    for i in range(n // 2 + 1, n):
        v[n - i] = _tr(v[i])
    v[0] = v[n]
    return v


# straightening ------------------------------------------------------------

class StraighteningField:
    """u(x, k) = exp(-i x h1(k)) exp(-i x h2(k)) on x in [-1/2, 1/2]."""

    def __init__(self, h1, h2, notes=None):
        self.h1, self.h2 = h1, h2
        self.n = h1.n
        self.k = h1.k
        self._e1 = np.linalg.eigh(h1.values)
        self._e2 = np.linalg.eigh(h2.values)
        self.notes = dict(notes or {})

    @staticmethod
    def _expo(eig, x):
        lam, v = eig
        return (v * np.exp(-1j * x * lam)[..., None, :]) @ dagger(v)

    def __call__(self, x):
        """u(x, k) at every node, shape (n + 1, N, N)."""
        return self._expo(self._e1, x) @ self._expo(self._e2, x)

    def boundary_residual(self, beta):
        b = beta.values if isinstance(beta, UnitaryFamily) else beta
        eye = np.eye(b.shape[-1])
        return float(np.max(opnorm(dagger(self(-0.5)) @ b @ self(0.5) - eye)))

    def cs_residual(self, xs=None):
        xs = np.linspace(-0.5, 0.5, 11) if xs is None else xs
        return float(max(np.max(np.abs(np.conj(self(x)) - self(-x)[::-1])) for x in xs))

    def periodicity_residual(self, xs=None):
        xs = np.linspace(-0.5, 0.5, 11) if xs is None else xs
        return float(max(np.max(np.abs(self(x)[0] - self(x)[-1])) for x in xs))


def straighten(beta, s=0.1, nu=0.01, max_iter=8, tol=DEFAULT):
    """Two-step straightening of a transpose-symmetric periodic unitary family.

    h1 is the logarithm of a regularized copy of beta; (s, nu) are halved
    until beta1 = exp(-i h1/2) beta exp(-i h1/2) is within 1/2 of the
    identity, whose Cayley logarithm (cut at -1) gives h2.
    """
    beta.require_cs_prime(tol, stage="straighten")
    attempts = []
    h1 = None
    for _ in range(max_iter):
        try:
            reg = regularize(beta, s, nu, tol)
            cand = log_analytic_endpoints(reg, tol)
        except (DegeneracyError, BranchAmbiguityError) as exc:
            attempts.append({"s": s, "nu": nu, "failure": str(exc)})
            s, nu = s / 2, nu / 2
            continue
        half = expm_herm(cand.values, 0.5)
        tilde = half @ beta.values @ half
        dev = float(np.max(opnorm(tilde - np.eye(beta.size))))
        attempts.append({"s": s, "nu": nu, "deviation": dev})
        if dev <= 0.5:
            h1 = cand
            break
        s, nu = s / 2, nu / 2
    if h1 is None:
        raise StraightenError("could not bring the family within 1/2 of the identity",
                              details={"attempts": attempts})
    tilde_family = UnitaryFamily(tilde, cs_prime=True, tol=tol)
    h2 = log_cayley(tilde_family, np.pi, tol)
    return StraighteningField(h1, h2, notes={"s": s, "nu": nu, "attempts": attempts,
                                             "deviation": dev})


def rotation_family(n):
    """cos(2 pi k) Id + i sin(2 pi k) sigma_2: transpose symmetric and periodic,
    degenerate at k = 0 and k = 1/2, with spectrum sweeping the whole circle.
    It has no continuous periodic symmetric logarithm."""
    def beta(k):
        c, s = np.cos(2 * np.pi * k), np.sin(2 * np.pi * k)
        return np.array([[c, s], [-s, c]], dtype=complex)
    return UnitaryFamily.from_function(beta, n)
