"""``schwz`` command line.

Exit codes: 0 success, 1 usage or I/O error, 2 numeric failure, 3 domain
error (pole, non-escaping input, singular level). Failures print one line
``error: <Kind>: <message>`` to stderr.
"""

from __future__ import annotations

import argparse
import json
import re
import sys

import numpy as np

from . import equivalence as eq
from .errors import SchwzError
from .escape import DEFAULT_MAX_ITER, DEFAULT_TOL, Region, green_eval, green_grid, schwarzian_limit
from .export import export_table, render_green_ppm
from .levels import annulus_invariants, flux, level_components
from .metric import QDSampler, convergence_table, cylinder_circumference, l_half_distance, trace_trajectory
from .poly import format_complex, parse_complex, parse_poly
from .schwarzian import (
    laurent_coeff_pole2,
    nonlinearity_iterate_normalized,
    nonlinearity_value,
    schwarzian_iterate_normalized,
    schwarzian_value,
)


class UsageError(SchwzError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _region(text):
    try:
        vals = [float(v) for v in text.split(",")]
    except ValueError:
        raise UsageError(f"bad --region {text!r}") from None
    if len(vals) != 4:
        raise UsageError("--region needs xmin,xmax,ymin,ymax")
    return vals


def _res(text):
    try:
        vals = [int(v) for v in text.split(",")]
    except ValueError:
        raise UsageError(f"bad --res {text!r}") from None
    if len(vals) == 1:
        vals *= 2
    if len(vals) != 2:
        raise UsageError("--res needs nx[,ny]")
    return vals


def _n_range(text):
    if ":" in text:
        lo, hi = text.split(":")
        return list(range(int(lo), int(hi) + 1))
    return [int(v) for v in text.split(",")]


def _pair(c):
    c = complex(c)
    return f"{c.real!r},{c.imag!r}"


def build_parser():
    p = _Parser(prog="schwz", description="Schwarzian derivatives of polynomial iterates.")
    sub = p.add_subparsers(dest="verb", required=True, parser_class=_Parser)

    def verb(name, *opts, **kw):
        sp = sub.add_parser(name, **kw)
        common = {
            "poly": lambda: sp.add_argument("--poly", required=True, help="descending coefficients, e.g. 1,0,-6"),
            "z": lambda: sp.add_argument("--z", required=True),
            "n": lambda: sp.add_argument("--n", type=int),
            "level": lambda: sp.add_argument("--level", type=float, required=True),
            "region": lambda: sp.add_argument("--region", required=True),
            "res": lambda: sp.add_argument("--res", default="512"),
            "tol": lambda: sp.add_argument("--tol", type=float),
            "max_iter": lambda: sp.add_argument("--max-iter", type=int, default=DEFAULT_MAX_ITER),
            "out": lambda: sp.add_argument("--out"),
            "format": lambda: sp.add_argument("--format", choices=("csv", "json", "ppm"), default="csv"),
            "threads": lambda: sp.add_argument("--threads", type=int, default=1),
        }
        for o in opts:
            common[o]()
        return sp

    verb("schwarzian", "poly", "z", "n")
    verb("nonlinearity", "poly", "z", "n")
    g = verb("green", "poly", "tol", "max_iter", "out", "format", "threads", "res")
    g.add_argument("--z")
    g.add_argument("--region")
    verb("limit", "poly", "z", "tol", "max_iter")
    c = verb("converge", "poly", "region", "res", "out", "format")
    c.add_argument("--n", default="4:12")
    la = verb("laurent", "poly", "z")
    la.add_argument("--radius", type=float)
    verb("level", "poly", "level", "region", "res", "out", "format", "threads")
    verb("annuli", "poly", "level", "region", "res", "out", "format", "threads")
    verb("flux", "poly", "level", "region", "res", "threads")
    cy = verb("cylinder")
    cy.add_argument("--k", type=int, required=True)
    cy.add_argument("--d", type=int, default=2)
    cy.add_argument("--n", type=int, default=0)
    lh = verb("lhalf", "poly", "region", "res")
    lh.add_argument("--n", type=int, required=True)
    e = verb("equiv", "tol")
    e.add_argument("--poly", action="append", required=True)
    ei = verb("equiv-iter", "tol")
    ei.add_argument("--poly", action="append", required=True)
    ei.add_argument("--n", type=int, default=2)
    r = verb("render", "poly", "region", "res", "out", "threads")
    r.add_argument("--format", choices=("ppm",), default="ppm")
    r.add_argument("--bands", type=int, default=8)
    r.add_argument("--levels", default="")
    t = verb("trajectory", "poly", "z")
    t.add_argument("--n", type=int, help="use the iterate differential instead of the limit")
    t.add_argument("--step", type=float, default=0.01)
    t.add_argument("--steps", type=int, default=100)
    return p


def _validate(a):
    """Parse every option up front so nothing runs on bad input."""
    v = {}
    if isinstance(getattr(a, "poly", None), list):
        if len(a.poly) != 2:
            raise UsageError("equivalence needs exactly two --poly options")
        v["polys"] = [parse_poly(s) for s in a.poly]
    elif getattr(a, "poly", None) is not None:
        v["f"] = parse_poly(a.poly)
        if a.verb not in ("schwarzian", "nonlinearity") and v["f"].degree < 2:
            raise UsageError("polynomial degree must be >= 2")
    if getattr(a, "z", None) is not None:
        v["z"] = parse_complex(a.z)
    if getattr(a, "region", None) is not None:
        nx, ny = _res(a.res)
        try:
            v["region"] = Region(*_region(a.region), nx, ny)
        except ValueError as exc:
            raise UsageError(str(exc)) from None
    if a.verb == "converge":
        v["n_values"] = _n_range(a.n)
    if a.verb == "render":
        if a.bands < 1:
            raise UsageError("--bands must be >= 1")
        if not a.out:
            raise UsageError("render needs --out")
        v["levels"] = [float(s) for s in a.levels.split(",") if s.strip()]
    if getattr(a, "threads", 1) < 1:
        raise UsageError("--threads must be >= 1")
    if a.verb in ("green",) and v.get("z") is None and v.get("region") is None:
        raise UsageError("green needs --z or --region")
    if getattr(a, "format", None) == "ppm" and a.verb != "render":
        raise UsageError("ppm output is only available for render")
    return v


def _emit(text, out):
    if out:
        with open(out, "w", encoding="ascii", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _run(a, v):
    f = v.get("f")
    tol = a.tol if getattr(a, "tol", None) is not None else DEFAULT_TOL
    if a.verb == "schwarzian":
        val = schwarzian_value(f, v["z"]) if a.n is None else schwarzian_iterate_normalized(f, a.n, v["z"]).value
        print(_pair(val))
    elif a.verb == "nonlinearity":
        val = nonlinearity_value(f, v["z"]) if a.n is None else nonlinearity_iterate_normalized(f, a.n, v["z"])
        print(_pair(val))
    elif a.verb == "green":
        if v.get("region") is not None:
            grid = green_grid(f, v["region"], tol, a.max_iter, workers=a.threads)
            _emit(export_table(grid, a.format), a.out)
        else:
            ge = green_eval(f, v["z"], tol, a.max_iter)
            print(f"{ge.green!r},{_pair(ge.dgreen)},{int(ge.escaped)}")
    elif a.verb == "limit":
        print(_pair(schwarzian_limit(f, v["z"], require_escape=True, tol=tol, max_iter=a.max_iter)))
    elif a.verb == "converge":
        rows = convergence_table(f, v["region"], v["n_values"])
        _emit(export_table(rows, a.format), a.out)
    elif a.verb == "laurent":
        print(_pair(laurent_coeff_pole2(f, v["z"], a.radius)))
    elif a.verb == "level":
        comps = level_components(f, a.level, v["region"], workers=a.threads)
        _emit(export_table(comps, a.format), a.out)
    elif a.verb == "annuli":
        recs = annulus_invariants(f, a.level, v["region"], workers=a.threads)
        _emit(export_table(recs, a.format), a.out)
    elif a.verb == "flux":
        print(repr(flux(f, a.level, v["region"], workers=a.threads)))
    elif a.verb == "cylinder":
        print(repr(cylinder_circumference(a.k, a.d, a.n)))
    elif a.verb == "lhalf":
        res = l_half_distance(f, a.n, v["region"])
        print(f"{res.value!r},{res.excluded_area!r}")
    elif a.verb in ("equiv", "equiv-iter"):
        f, g = v["polys"]
        t = a.tol if a.tol is not None else 1e-6
        res = eq.schwarzian_equivalent(f, g, t) if a.verb == "equiv" else eq.iterate_equivalent(f, g, a.n, t)
        out = {"equivalent": res.equivalent, "residual": res.residual if np.isfinite(res.residual) else None}
        if res.witness is not None:
            out["witness"] = {"a": format_complex(res.witness.a), "b": format_complex(res.witness.b)}
        print(json.dumps(out))
    elif a.verb == "render":
        render_green_ppm(f, v["region"], a.bands, a.out, v["levels"], workers=a.threads)
    elif a.verb == "trajectory":
        Q = QDSampler.limit(f) if a.n is None else QDSampler.iterate(f, a.n)
        for z in trace_trajectory(Q, v["z"], a.step, a.steps).vertices:
            print(_pair(z))


_NEGATIVE = re.compile(r"-[\d.]")


def _join_negative_values(argv):
    # argparse reads "-1,0,6" as an option; glue such values to their flag
    out = []
    for tok in argv:
        if out and out[-1].startswith("--") and "=" not in out[-1] and _NEGATIVE.match(tok):
            out[-1] = f"{out[-1]}={tok}"
        else:
            out.append(tok)
    return out


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        a = build_parser().parse_args(_join_negative_values(argv))
        v = _validate(a)
        _run(a, v)
    except SchwzError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return exc.exit_code
    except (OSError, ValueError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    return 0


def run_cli(argv) -> int:
    return main(list(argv))


if __name__ == "__main__":
    sys.exit(main())
