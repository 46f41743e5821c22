"""Why the naive logarithm fails and straightening does not.

beta(k) is the rotation by 2 pi k.  Its eigenvalues exp(+-2 pi i k) meet at
k = 0 and k = 1/2, so following eigenvalue branches breaks there.  The
two-step construction (regularize the endpoints, then take analytic
logarithms) still produces a symmetric, periodic straightening field.

Run:  python3 demos/rotation_family.py
"""

from wannierlab.errors import DegeneracyError
from wannierlab.unilog import circle_gap, regularize, rotation_family, straighten

beta = rotation_family(128)
print("CS' residual of the family:", f"{beta.cs_prime_residual():.1e}")
print("gap in the spectrum around the circle:", circle_gap(beta))

try:
    from wannierlab.unilog import log_noncrossing
    log_noncrossing(beta)
except DegeneracyError as exc:
    print("non-crossing logarithm refused:", exc.message)
    print("  degenerate nodes:", exc.details["nodes"])

for s, nu in ((0.1, 0.01), (0.05, 0.005), (0.025, 0.0025)):
    reg = regularize(beta, s, nu)
    print(f"regularize s={s:<6} nu={nu:<7} sup change {reg.notes['sup_distance']:.4f}  "
          f"endpoint gaps {min(reg.notes['endpoint_gaps']):.4f}")

u = straighten(beta)
print(f"straightening: u(1/2) = beta residual {u.boundary_residual(beta):.1e}, "
      f"symmetry residual {u.cs_residual():.1e}")
