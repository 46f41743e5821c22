"""Batch command line front end.

    wannierlab wannier1d --preset ssh --v 1 --w 2 --band lower --grid 256 --out run1
    wannierlab wannier2d --preset qwz-pair --grid 64,128 --bands 0,1 --out run2
    wannierlab magnetic  --preset ssh-stack --b 1e-3,2e-3,4e-3,8e-3 --out run3
    wannierlab diagnose  --preset haldane-topological --out run4

Unrecognized ``--name value`` pairs with numeric values are passed to the
preset constructor (``--v 1 --w 2``).  Failures write ``error.json`` with
the stage and grid node and exit with status 2.
"""

import argparse
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import io
from .errors import WannierLabError
from .model import build_bloch, check_cs, load_model, preset
from .spectral import SpectralWindow, spectral_projection
from .tolerances import DEFAULT, override

COMMANDS = ("wannier1d", "wannier2d", "magnetic", "diagnose")
DEFAULT_GRID = {"wannier1d": 256, "wannier2d": 64, "magnetic": 32, "diagnose": 32}


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    command: str
    model: str = None
    preset: str = None
    params: dict = field(default_factory=dict)
    grid: tuple = None
    bands: str = "lower"
    tol: dict = field(default_factory=dict)
    out: str = "."
    b: tuple = ()
    box: int = None
    patch: int = 40
    method: str = "magnus4"

    def validate(self):
        if self.command not in COMMANDS:
            raise ConfigError(f"unknown command {self.command!r}")
        if (self.model is None) == (self.preset is None):
            raise ConfigError("give exactly one of --model and --preset")
        if self.grid is None:
            self.grid = (DEFAULT_GRID[self.command],)
        for n in self.grid:
            if n < 16 or n & (n - 1):
                raise ConfigError(f"grid sizes must be powers of two >= 16, got {n}")
        try:
            self.tolerances = override(DEFAULT, **self.tol)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        if self.command == "magnetic" and not self.b:
            raise ConfigError("magnetic needs --b with at least one value")
        if self.box is not None and self.box < 1:
            raise ConfigError("--box must be a positive integer")
        return self

    def to_dict(self):
        return {"command": self.command, "model": self.model, "preset": self.preset,
                "params": self.params, "grid": list(self.grid), "bands": self.bands,
                "out": self.out, "b": list(self.b), "box": self.box, "patch": self.patch,
                "method": self.method}


def _grid(text):
    return tuple(int(x) for x in text.split(","))


def _floats(text):
    return tuple(float(x) for x in text.split(","))


def _tol(text):
    name, _, value = text.partition("=")
    if not value:
        raise argparse.ArgumentTypeError(f"expected name=value, got {text!r}")
    return name.strip(), float(value)


def parser():
    p = argparse.ArgumentParser(prog="wannierlab", description=__doc__.splitlines()[0],
                                allow_abbrev=False)
    sub = p.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        s = sub.add_parser(name, allow_abbrev=False)
        src = s.add_mutually_exclusive_group(required=True)
        src.add_argument("--model", help="model JSON file")
        src.add_argument("--preset", help="built-in model name")
        s.add_argument("--grid", type=_grid, help="intervals per axis, n or n1,n2")
        s.add_argument("--bands", "--band", dest="bands", default="lower",
                       help="'lower', comma separated 0-based indices, or lo:hi energies")
        s.add_argument("--tol", type=_tol, action="append", default=[], metavar="NAME=VALUE")
        s.add_argument("--out", default=".")
        s.add_argument("--box", type=int, help="Wannier box radius in cells")
        s.add_argument("--method", default="magnus4", choices=["magnus4", "midpoint", "compose"])
        if name == "magnetic":
            s.add_argument("--b", type=_floats, required=True, help="comma separated couplings")
            s.add_argument("--patch", type=int, default=40)
            s.add_argument("--margin", type=int,
                           help="interior margin in cells (default from the decay rate)")
            s.add_argument("--covariance", type=float,
                           help="also check covariance and conjugation at +-this b")
    return p


def _extra_params(rest):
    params, i = {}, 0
    while i < len(rest):
        key = rest[i]
        if not key.startswith("--") or i + 1 >= len(rest):
            raise ConfigError(f"unrecognized arguments: {' '.join(rest[i:])}")
        try:
            params[key[2:].replace("-", "_")] = float(rest[i + 1])
        except ValueError:
            raise ConfigError(f"model parameter {key} needs a number, got {rest[i + 1]!r}") from None
        i += 2
    return params


def parse_config(argv):
    args, rest = parser().parse_known_args(argv)
    cfg = RunConfig(command=args.command, model=args.model, preset=args.preset,
                    params=_extra_params(rest), grid=args.grid, bands=args.bands,
                    tol=dict(args.tol), out=args.out, box=args.box, method=args.method)
    if args.command == "magnetic":
        cfg.b, cfg.patch = args.b, args.patch
        cfg.covariance, cfg.margin = args.covariance, args.margin
    return cfg.validate()


def _window(text, D):
    if text == "lower":
        return SpectralWindow(bands=range(max(1, D // 2)))
    if ":" in text:
        lo, hi = text.split(":")
        return SpectralWindow(interval=(float(lo), float(hi)))
    return SpectralWindow(bands=[int(x) for x in text.split(",")])


def _model(cfg):
    if cfg.preset is not None:
        return preset(cfg.preset, **cfg.params)
    return load_model(cfg.model, tol=cfg.tolerances)


def _sampler(cfg, model):
    tol = cfg.tolerances
    h = build_bloch(model)
    grid = cfg.grid if len(cfg.grid) == model.dimension else cfg.grid * model.dimension
    check_cs(h, grid, tol)
    return spectral_projection(h, _window(cfg.bands, model.num_sites), grid, tol)


def _report_base(cfg, model):
    conf = cfg.to_dict()
    conf.pop("out")  # reports must not depend on where they are written
    return {"config": conf, "model": model.name,
            "tolerances": cfg.tolerances.as_dict()}


def run_wannier(cfg, out):
    from .diagnostics import wannier_center_oracle
    from .frame1d import frame_1d
    from .frame2d import frame_2d
    from .wannier import decay_fit, wannier_transform

    model = _model(cfg)
    d = model.dimension
    if (cfg.command == "wannier1d") != (d == 1):
        raise WannierLabError(f"{cfg.command} needs a {1 if cfg.command == 'wannier1d' else 2}D model",
                              stage="model")
    P = _sampler(cfg, model)
    tol = cfg.tolerances
    frame = (frame_1d(P, method=cfg.method, tol=tol) if d == 1
             else frame_2d(P, method=cfg.method, tol=tol))
    residuals = frame.check(P, tol)
    box = cfg.box if cfg.box is not None else min(P.n) // 2
    wset = wannier_transform(frame, box)
    decay = decay_fit(wset)
    report = _report_base(cfg, model)
    report.update(decay.to_dict())
    report.update({"frame_residuals": residuals, "rank": frame.rank, "grid": list(P.n),
                   "centers": wset.centers(), "max_imag": wset.max_imag(),
                   "parseval": wset.norms()})
    if d == 1:
        report["center_oracle"] = wannier_center_oracle(P)
    else:
        report["straighten"] = frame.notes["straighten"]
        report["boundary_residual"] = frame.notes["boundary_residual"]
        io.write_branches(out / "branches.csv", frame.notes["beta"])
    io.write_frame(out / "frame.csv", frame)
    io.write_wannier(out / "wannier.csv", wset)
    io.write_json(out / "decay.json", report)
    return report


def run_diagnose(cfg, out):
    from .diagnostics import diagnose

    model = _model(cfg)
    P = _sampler(cfg, model)
    rep = diagnose(P)
    report = _report_base(cfg, model)
    report.update(rep.to_dict())
    report["grid"] = list(P.n)
    io.write_json(out / "topology.json", report)
    return report


def run_magnetic(cfg, out):
    from . import magnetic as mg

    model = _model(cfg)
    tol = cfg.tolerances
    window = _window(cfg.bands, model.num_sites)
    if window.bands is None or window.bands != tuple(range(len(window.bands))):
        raise WannierLabError("magnetic runs need the lowest bands (--bands lower or 0,..,N-1)",
                              stage="magnetic")
    bulk, P, mu = mg.bulk_wannier(model, len(window.bands), cfg.grid[0], tol)
    patch = mg.LatticePatch(model, cfg.patch)
    w = mg.zero_field_basis(patch, bulk, mu, tol)
    margin = getattr(cfg, "margin", None)
    report, results = mg.sweep(w, cfg.b, tol=tol, margin=margin)
    base = _report_base(cfg, model)
    base.update(report)
    base["zero_field"] = {k: v for k, v in w.notes.items() if np.isscalar(v)}
    origin = np.zeros((1, 2), dtype=int)
    io.write_basis(out / "basis_b0.csv", w, origin)
    for r in results:
        io.write_basis(out / f"basis_b{r.cfg.b:+.3e}.csv", r.xi, origin)
    if getattr(cfg, "covariance", None):
        b = cfg.covariance
        plus = mg.run_field(w, mg.MagneticConfig(b), margin=margin, tol=tol)
        minus = mg.run_field(w, mg.MagneticConfig(-b), margin=margin, tol=tol)
        base["covariance"] = mg.covariance_checks(plus, minus, tol=tol)
    io.write_json(out / "sweep.json", base)
    return base


RUNNERS = {"wannier1d": run_wannier, "wannier2d": run_wannier,
           "magnetic": run_magnetic, "diagnose": run_diagnose}


def _limit_threads():
    n = os.environ.get("WANNIERLAB_THREADS")
    if not n:
        return None
    from threadpoolctl import threadpool_limits
    return threadpool_limits(limits=int(n))


def run(cfg):
    """Execute a validated RunConfig; returns the process exit status."""
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    limiter = _limit_threads()
    try:
        RUNNERS[cfg.command](cfg, out)
    except WannierLabError as exc:
        doc = exc.to_dict()
        doc["config"] = cfg.to_dict()
        io.write_json(out / "error.json", doc)
        print(f"error [{exc.stage}]: {exc.message}", file=sys.stderr)
        return 2
    finally:
        if limiter is not None:
            limiter.restore_original_limits()
    return 0


def main(argv=None):
    try:
        cfg = parse_config(sys.argv[1:] if argv is None else argv)
    except ConfigError as exc:
        print(f"wannierlab: {exc}", file=sys.stderr)
        return 64
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())
