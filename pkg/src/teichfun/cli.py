"""Command-line interface.

Exit codes: 0 success, 2 certificate failure (Markov, expansion, ordering, codes),
3 input error.  Failures print a JSON error object on stdout.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .bowen_series import build_standard_system, conjugated_system
from .errors import CertificateError, InputError, TeichfunError
from .fuchsian import conjugate_rep, twist_deform
from .mobius import DiskMobius
from .qs_bounds import sd_harness, zeta, zeta_closed_form, zeta_closed_form_printed
from .scaling import d_max_estimate, scaling_estimate, scaling_table
from .store import content_hash, dumps, load_system, save_system
from .symbolic import WordGraph, cylinder_lengths
from .thermo import (
    birkhoff_variance, check_zero_pressure, gibbs, mean, potential_from_scaling,
    pressure_metric, variance,
)

EXIT_OK, EXIT_CERT, EXIT_INPUT = 0, 2, 3
EXTENDED_WORD_LIMIT = 10_000


@dataclass
class RunConfig:
    genus: int = 2
    precision: int | None = None      # None for binary64, else mpmath bits
    depth: int = 4
    tol: float = 1e-13
    seed: int = 0
    cache: str | None = None
    out: str | None = None
    fmt: str = "json"
    twists: list = field(default_factory=list)      # [(curve, t), ...]
    conjugators: list = field(default_factory=list)  # [DiskMobius, ...]

    def __post_init__(self):
        if self.genus < 2:
            raise InputError("genus must be >= 2")
        if self.depth < 1:
            raise InputError("depth must be >= 1")
        if not self.tol > 0:
            raise InputError("tolerance must be > 0")
        if self.fmt not in ("json", "csv"):
            raise InputError(f"unknown format {self.fmt!r}")


def parse_precision(text: str) -> int | None:
    if text == "double":
        return None
    if text.startswith("extended:"):
        try:
            bits = int(text.split(":", 1)[1])
        except ValueError:
            bits = 0
        if bits >= 53:
            return bits
    raise InputError(f"precision must be 'double' or 'extended:<bits>' with bits >= 53, got {text!r}")


def parse_twist(text: str) -> tuple[str, float]:
    curve, _, t = text.partition(":")
    try:
        return curve, float(t)
    except ValueError:
        raise InputError(f"twist must look like a1:0.4, got {text!r}") from None


def parse_conjugator(text: str) -> DiskMobius:
    try:
        ar, ai, br, bi = (float(x) for x in text.split(","))
    except ValueError:
        raise InputError(f"conjugator must be 're(a),im(a),re(b),im(b)', got {text!r}") from None
    return DiskMobius(complex(ar, ai), complex(br, bi))


def parse_floats(text: str) -> list[float]:
    """Comma list, or start:stop:count for an evenly spaced grid."""
    try:
        if ":" in text:
            a, b, n = text.split(":")
            return [float(x) for x in np.linspace(float(a), float(b), int(n))]
        return [float(x) for x in text.split(",") if x]
    except ValueError:
        raise InputError(f"cannot parse number list {text!r}") from None


def parse_word(text: str) -> tuple:
    try:
        return tuple(int(x) for x in text.split("."))
    except ValueError:
        raise InputError(f"dual words are dot-separated interval indices, got {text!r}") from None


def fmt_word(word) -> str:
    return ".".join(str(int(x)) for x in word)


def fmt_float(x: float) -> str:
    return format(float(x), ".17g")


# ---------------------------------------------------------------- systems

def standard_system(cfg: RunConfig):
    """Standard Markov system, read from / written to the cache when one is given."""
    if cfg.cache:
        from .fuchsian import build_standard_group
        rep, _ = build_standard_group(cfg.genus)
        expected = content_hash(rep)
        if Path(cfg.cache).exists():
            return load_system(cfg.cache, expected)
        system = build_standard_system(cfg.genus)
        save_system(system, cfg.cache)
        return system
    return build_standard_system(cfg.genus)


def deformed_system(base, twists, conjugators):
    rep, system = base.rep, base
    for curve, t in twists:
        rep, _ = twist_deform(rep, curve, t)
    for m in conjugators:
        rep, _ = conjugate_rep(rep, m)
    if rep is base.rep:
        return base
    from .fuchsian import Marking
    return conjugated_system(system, Marking(base.rep, rep))


def twisted(base, curve: str, t: float):
    return conjugated_system(base, twist_deform(base.rep, curve, t)[1])


# ---------------------------------------------------------------- commands

def cmd_build_group(cfg: RunConfig, args) -> dict:
    base = standard_system(cfg)
    system = deformed_system(base, cfg.twists, cfg.conjugators)
    doc = {"group": system.rep.to_dict(), "markov": system.summary(),
           "content_hash": content_hash(system.rep)}
    if cfg.out:
        save_system(system, cfg.out)
        doc["cache"] = cfg.out
        cfg.out = None          # the cache file is the artifact; the summary goes to stdout
    return doc


def cmd_show_partition(cfg: RunConfig, args) -> dict:
    system = deformed_system(standard_system(cfg), cfg.twists, cfg.conjugators)
    codes = system.codes
    rows = []
    for i in range(system.k):
        iv = system.interval(i)
        rows.append({
            "index": i, "start": iv.start, "end": iv.end, "length": iv.length,
            "branch": system.branch_label(i), "side": int(system.side[i]),
            "image": [int(system.image_lo[i]), int(system.image_hi[i])],
            "provenance": [list(p) for p in system.provenance[i]] if system.provenance else [],
            "code": codes[i].to_dict(),
        })
    return {"summary": system.summary(), "Jv": [list(j) for j in system.Jv], "intervals": rows}


def cmd_scaling(cfg: RunConfig, args) -> dict:
    system = deformed_system(standard_system(cfg), cfg.twists, cfg.conjugators)
    if args.words:
        words = [parse_word(w) for w in args.words.split(",")]
        samples = [scaling_estimate(system, w, len(w) - 1, cfg.precision) for w in words]
        rows = [(fmt_word(s.dual_word), s.value, s.error_bound) for s in samples]
    else:
        if cfg.precision is not None:
            raise InputError("extended precision needs an explicit --words list")
        table = scaling_table(system, cfg.depth)
        words = table.graph.words(cfg.depth)
        rows = [(fmt_word(w), s, e) for w, s, e in zip(words, table.S, table.error)]
    return {"depth": cfg.depth, "columns": ["dual_word", "value", "error_bound"], "rows": rows}


def _dmax_doc(X, Y, cfg):
    return d_max_estimate(X, Y, cfg.depth, seed=cfg.seed).to_dict()


def cmd_compare(cfg: RunConfig, args) -> dict:
    base = standard_system(cfg)
    X = load_system(args.rep_a) if args.rep_a else base
    if args.rep_b:
        Y = load_system(args.rep_b)
    else:
        Y = deformed_system(X, cfg.twists, cfg.conjugators)
    return {"depth": cfg.depth, "d_max": _dmax_doc(X, Y, cfg)}


def cmd_twist_path(cfg: RunConfig, args) -> dict:
    base = standard_system(cfg)
    rows = []
    for t in parse_floats(args.t):
        est = _dmax_doc(base, twisted(base, args.curve, t), cfg)
        rows.append(dict(t=t, **est))
    uppers = [r["upper"] for r in rows]
    return {"curve": args.curve, "depth": cfg.depth, "path": rows,
            "uppers_strictly_decreasing": all(a > b for a, b in zip(uppers, uppers[1:]))}


def _thermo_doc(system, cfg, h):
    graph = WordGraph(system.A, cfg.depth)
    lens = cylinder_lengths(system, graph, cfg.depth)
    phi = potential_from_scaling(system, cfg.depth, graph, lens)
    g = gibbs(phi, cfg.tol)
    var_a = variance(phi, g, "pressure", h=h)
    var_b, se = birkhoff_variance(phi + (-mean(phi, g)), g, seed=cfg.seed)
    return g, var_a, var_b, se


def cmd_pressure(cfg: RunConfig, args) -> dict:
    system = deformed_system(standard_system(cfg), cfg.twists, cfg.conjugators)
    rep = check_zero_pressure(system, cfg.depth)
    _, var_a, var_b, se = _thermo_doc(system, cfg, args.h)
    return {"depth": cfg.depth, "pressure": rep.dual_pressure, "residual": rep.residual,
            "variance_a": var_a, "variance_b": var_b, "pmetric": None,
            "diagnostics": {"h": args.h, "delta": None, "mean_residual": None,
                            "birkhoff_stderr": se,
                            "geometric_pressure": rep.geometric_pressure,
                            "geometric_bracket": list(rep.geometric_bracket)}}


def cmd_pmetric(cfg: RunConfig, args) -> dict:
    base = standard_system(cfg)

    def at(delta):
        path = (twisted(base, args.curve, -delta), base, twisted(base, args.curve, delta))
        return pressure_metric(path, cfg.depth, delta)

    full, half = at(args.delta), at(args.delta / 2)
    rep = check_zero_pressure(base, cfg.depth)
    _, var_a, var_b, se = _thermo_doc(base, cfg, args.h)
    return {"depth": cfg.depth, "pressure": rep.dual_pressure, "residual": rep.residual,
            "variance_a": var_a, "variance_b": var_b, "pmetric": full.value,
            "diagnostics": {"h": args.h, "delta": args.delta, "mean_residual": full.mean_residual,
                            "curve": args.curve, "pmetric_half_step": half.value,
                            "halving_rel_change": abs(full.value - half.value) / abs(full.value)
                            if full.value else 0.0,
                            "tangent_variance": full.variance, "denominator": full.denominator,
                            "birkhoff_stderr": se}}


def cmd_qsbounds(cfg: RunConfig, args) -> dict:
    rows = []
    for M in parse_floats(args.M):
        row = {"M": M, "zeta": zeta(M), "zeta_closed_form": zeta_closed_form(M),
               "zeta_closed_form_printed": zeta_closed_form_printed(M)}
        if args.samples > 0:
            rep = sd_harness(M, args.sample_depth, args.samples, cfg.seed, args.mode)
            row.update(max_deviation=rep.max_deviation, violations=rep.violations,
                       deviation_ratio=rep.ratio)
        rows.append(row)
    return {"rows": rows}


COMMANDS = {
    "build-group": cmd_build_group,
    "show-partition": cmd_show_partition,
    "scaling": cmd_scaling,
    "compare": cmd_compare,
    "twist-path": cmd_twist_path,
    "pressure": cmd_pressure,
    "pmetric": cmd_pmetric,
    "qsbounds": cmd_qsbounds,
}


# ---------------------------------------------------------------- output

def to_csv(doc: dict) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    if "columns" in doc:
        w.writerow(doc["columns"])
        for r in doc["rows"]:
            w.writerow([r[0]] + [fmt_float(x) for x in r[1:]])
        return buf.getvalue()
    rows = doc.get("rows") or doc.get("path")
    if rows is None:
        raise InputError("this command has no tabular output; use --format json")
    keys = [k for k in rows[0] if not isinstance(rows[0][k], (list, dict))]
    w.writerow(keys)
    for r in rows:
        w.writerow([fmt_float(r[k]) if isinstance(r[k], float) else r[k] for k in keys])
    return buf.getvalue()


def render(doc: dict, fmt: str) -> str:
    if fmt == "csv":
        return to_csv(doc)
    if "columns" in doc:
        doc = dict(doc, rows=[{"dual_word": r[0], "value": r[1], "error_bound": r[2]}
                              for r in doc["rows"]])
    return dumps(_finite(doc))


def _finite(x):
    """JSON has no inf/nan; write them as strings."""
    if isinstance(x, float) and not math.isfinite(x):
        return str(x)
    if isinstance(x, dict):
        return {k: _finite(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_finite(v) for v in x]
    return x


# ---------------------------------------------------------------- parser

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise InputError(message)


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--genus", type=int, default=2)
    common.add_argument("--depth", type=int, default=4)
    common.add_argument("--precision", default="double", help="double or extended:<bits>")
    common.add_argument("--tol", type=float, default=1e-13, help="power-iteration tolerance")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--cache", help="cache file for the standard system (created if missing)")
    common.add_argument("--out", help="write the result here instead of stdout")
    common.add_argument("--format", dest="fmt", default="json", choices=["json", "csv"])
    common.add_argument("--twist", action="append", default=[], metavar="CURVE:T",
                        help="apply a twist, e.g. a1:0.4 (repeatable)")
    common.add_argument("--conjugate", action="append", default=[], metavar="AR,AI,BR,BI",
                        help="conjugate by the disk Mobius map with these coefficients")

    p = _Parser(prog="teichfun", description="Scaling-function coordinates for surface groups.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)
    sub.add_parser("build-group", parents=[common], help="build a group and its Markov system")
    sub.add_parser("show-partition", parents=[common], help="partition points, branches, codes")
    s = sub.add_parser("scaling", parents=[common], help="pre-scaling values with error bounds")
    s.add_argument("--words", help="comma list of dot-separated dual words (default: all at --depth)")
    s = sub.add_parser("compare", parents=[common], help="d_max between two systems")
    s.add_argument("--rep-a", help="cache file of the first system (default: standard)")
    s.add_argument("--rep-b", help="cache file of the second system (default: first, deformed)")
    s = sub.add_parser("twist-path", parents=[common], help="d_max along a twist path")
    s.add_argument("--curve", default="a1")
    s.add_argument("--t", default="0.4,0.2,0.1,0.05")
    s = sub.add_parser("pressure", parents=[common], help="pressure and variance of log S")
    s.add_argument("--h", type=float, default=1e-3)
    s = sub.add_parser("pmetric", parents=[common], help="pressure metric along a twist path")
    s.add_argument("--curve", default="a1")
    s.add_argument("--delta", type=float, default=1e-2)
    s.add_argument("--h", type=float, default=1e-3)
    s = sub.add_parser("qsbounds", parents=[common], help="zeta(M) table and sampling harness")
    s.add_argument("--M", default="1,1.1,1.5,2,3,4")
    s.add_argument("--samples", type=int, default=0)
    s.add_argument("--sample-depth", type=int, default=12)
    s.add_argument("--mode", default="uniform", choices=["uniform", "extremal"])
    return p


def config_from_args(args) -> RunConfig:
    return RunConfig(genus=args.genus, precision=parse_precision(args.precision), depth=args.depth,
                     tol=args.tol, seed=args.seed, cache=args.cache, out=args.out, fmt=args.fmt,
                     twists=[parse_twist(t) for t in args.twist],
                     conjugators=[parse_conjugator(c) for c in args.conjugate])


def error_doc(exc: TeichfunError) -> dict:
    code = EXIT_CERT if isinstance(exc, CertificateError) else EXIT_INPUT
    return {"error": type(exc).__name__, "message": str(exc), "exit_code": code}


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        cfg = config_from_args(args)
        doc = COMMANDS[args.command](cfg, args)
        text = render(doc, cfg.fmt)
    except TeichfunError as e:
        doc = error_doc(e)
        sys.stdout.write(dumps(doc))
        return doc["exit_code"]
    if cfg.out:
        Path(cfg.out).write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
