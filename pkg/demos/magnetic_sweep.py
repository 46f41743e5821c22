"""Weak constant magnetic field on stacked SSH chains.

The zero-field Wannier basis is dressed with Peierls phases, made
orthonormal with the inverse square root of its Gram matrix and carried
into the spectral subspace of the magnetic Hamiltonian.  Both the
subspace distance and the change in each basis vector grow linearly in b.

Uses a 24 x 24 patch so that it finishes in well under a minute; the acceptance
suite runs the same sweep on 40 x 40.

Run:  python3 demos/magnetic_sweep.py
"""

from wannierlab import magnetic as mg
from wannierlab.model import preset

model = preset("ssh-stack")
bulk, _, mu = mg.bulk_wannier(model, bands=1, grid=32)
patch = mg.LatticePatch(model, 24)
w = mg.zero_field_basis(patch, bulk, mu)
print(f"patch of {patch.num_cells} cells; zero-field decay rate {w.notes['alpha']:.3f}, "
      f"Chebyshev degree {w.notes['degree']}")

margin = 6
report, results = mg.sweep(w, [1e-3, 2e-3, 4e-3, 8e-3], margin=margin)
print(f"{'b':>8} {'||Pi-P||':>10} {'closeness':>10} {'min eig M':>10}")
for b, d, c, g in zip(report["b"], report["projection_distance"], report["closeness"],
                      report["gram_min_eigenvalue"]):
    print(f"{b:8.0e} {d:10.3e} {c:10.3e} {g:10.6f}")
print(f"log-log slopes: {report['slope_projection_distance']:.3f} (distance), "
      f"{report['slope_closeness']:.3f} (closeness)")

plus = mg.run_field(w, mg.MagneticConfig(5e-3), margin=margin)
minus = mg.run_field(w, mg.MagneticConfig(-5e-3), margin=margin)
checks = mg.covariance_checks(plus, minus)
print(f"magnetic translation covariance {checks['covariance']:.1e}, "
      f"conjugation {checks['conjugation']:.1e}")
