"""Exception types.  Every error knows the pipeline stage and, when it
applies, the grid node where it was triggered, so the command line front
end can emit a machine-readable report."""


class WannierLabError(Exception):
    stage = "unknown"

    def __init__(self, message, *, stage=None, node=None, details=None):
        super().__init__(message)
        self.message = message
        if stage is not None:
            self.stage = stage
        self.node = node
        self.details = dict(details or {})

    def to_dict(self):
        node = self.node
        if node is not None:
            node = [float(x) for x in (node if hasattr(node, "__len__") else [node])]
        return {
            "error": type(self).__name__,
            "stage": self.stage,
            "message": self.message,
            "node": node,
            "details": self.details,
        }


class ModelError(WannierLabError):
    stage = "model"


class GapError(WannierLabError):
    stage = "spectral-projection"


class ProjectionError(WannierLabError):
    stage = "spectral"


class TransportError(WannierLabError):
    stage = "transport"


class FrameError(WannierLabError):
    stage = "frame"


class WindingError(WannierLabError):
    stage = "unilog"


class DegeneracyError(WannierLabError):
    stage = "unilog"


class BranchAmbiguityError(WannierLabError):
    stage = "unilog"


class SymmetryError(WannierLabError):
    stage = "cs-check"


class CSGateError(SymmetryError):
    """Raised by the d=2 construction when conjugation symmetry fails.

    ``details["chern"]`` carries the lattice Chern number report."""


class StraightenError(WannierLabError):
    stage = "straighten"


class WannierError(WannierLabError):
    stage = "wannier"


class MagneticError(WannierLabError):
    stage = "magnetic"
