"""Numerical tolerances shared by all stages.

Every routine takes a ``tol`` argument defaulting to :data:`DEFAULT`.  Use
:func:`override` to build a modified set, e.g. from ``--tol name=value``
command line pairs.
"""

from dataclasses import dataclass, fields, replace


@dataclass(frozen=True)
class Tolerances:
    herm: float = 1e-10       # Hermiticity of h(k)
    cs: float = 1e-10         # conjugation symmetry residuals
    gap: float = 1e-6         # smallest accepted spectral gap
    proj: float = 1e-10       # idempotency / self-adjointness of P(k)
    pd: float = 1e-12         # positive-definiteness floor
    comm: float = 1e-10       # commuting unitaries in zak_to_periodic
    transport: float = 1e-6   # intertwining of propagators
    frame: float = 1e-6       # d=1 frame invariants
    frame2: float = 1e-5      # d=2 frame invariants
    degen: float = 1e-6       # eigenvalue cluster threshold on the circle
    match: float = 0.2        # branch assignment score separation
    log: float = 1e-8         # exp(ih) versus beta
    straight: float = 1e-8    # boundary contract of the straightening field
    w: float = 1e-6           # Wannier orthonormality / Parseval
    mag: float = 1e-8         # exact algebraic identities, magnetic stage
    mag_trunc: float = 1e-6   # truncation-affected magnetic identities

    def as_dict(self):
        return {f.name: getattr(self, f.name) for f in fields(self)}


DEFAULT = Tolerances()


def override(base=DEFAULT, **values):
    """Return ``base`` with some entries replaced; unknown names raise."""
    known = {f.name for f in fields(Tolerances)}
    for name, value in values.items():
        if name not in known:
            raise ValueError(f"unknown tolerance {name!r}; known: {sorted(known)}")
        if not value > 0:
            raise ValueError(f"tolerance {name} must be positive, got {value}")
    return replace(base, **{k: float(v) for k, v in values.items()})
