"""Two bands of a real-hopping model in two dimensions.

The lower pair of bands of qwz-pair has bands with opposite curvature, so
neither band alone admits a periodic frame while the pair does.  The
matching matrix between the k1 = -1/2 and k1 = 1/2 ends winds; the
straightening field removes it.  Haldane's model, which breaks the
symmetry, is refused with a Chern-number report.

Run:  python3 demos/composite_2d.py
"""

import numpy as np

from wannierlab.diagnostics import chern_number_report, diagnose
from wannierlab.errors import CSGateError
from wannierlab.frame2d import frame_2d
from wannierlab.model import build_bloch, check_cs, preset
from wannierlab.spectral import lower_bands, spectral_projection
from wannierlab.wannier import decay_fit, wannier_transform


def sampler(name, bands, grid):
    h = build_bloch(preset(name))
    check_cs(h, grid)
    return spectral_projection(h, lower_bands(bands), grid)


P = sampler("qwz-pair", 2, (64, 128))
frame = frame_2d(P)
print("frame residuals:", {k: f"{v:.1e}" for k, v in frame.check(P).items()})

beta = frame.notes["beta"]
topo = diagnose(P, beta)
print(f"Chern number {topo.chern}, winding of det beta {topo.det_winding}")
# the pair's total Berry phase vanishes on every line; the individual
# eigenphases of beta do not
print(f"largest total Berry phase over k2 lines: {np.max(np.abs(topo.berry_phases)):.1e}")
n2 = P.n[1]
for i in range(0, n2 + 1, n2 // 4):
    args = np.sort(np.angle(np.linalg.eigvals(beta.values[i])))
    print(f"  k2 = {(i - n2 // 2) / n2:+.2f}: eigenphases of beta {np.round(args, 3)}")
print("straightening notes:", {k: v for k, v in frame.notes["straighten"].items()
                               if np.isscalar(v)})

w = wannier_transform(frame, np.array(P.n) // 2)
rep = decay_fit(w)
print(f"alpha per band {np.round(rep.alpha, 4)}, fit residuals {np.round(rep.residual, 4)}")
print(f"max imaginary part {w.max_imag():.1e}")

H = sampler("haldane-topological", 1, 64)
try:
    frame_2d(H)
except CSGateError as exc:
    print("Haldane refused at", exc.stage, "with Chern", exc.details["chern"]["chern"])
print("direct Chern report:", chern_number_report(H))
