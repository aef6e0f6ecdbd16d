"""Command-line front end.

Subcommands: ``star``, ``mtable``, ``verify`` and ``model validate``.  Results
go to stdout as JSON (rationals as ``"p/q"`` strings) or CSV; diagnostics go
to stderr.  Exit status is 0 when every requested check passes, 1 when a
check fails and 2 on configuration errors.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path

from gmpy2 import mpq

from . import geometry
from .expr import ExprError, chart_symbols, evaluate_constant, lower, lower_with, parse, to_source
from .fedosov import (FedosovContext, StarSeries, verify_axioms, verify_context, verify_flatness,
                      verify_lift, verify_order, verify_wick_type)
from .jets import JetError, Scalar
from .report import Report

__all__ = ["RunConfig", "ConfigError", "build_model", "load_model_file", "run", "main", "parse_args",
           "series_to_json", "series_from_json", "scalar_to_json", "scalar_from_json"]

EXIT_OK, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    command: str
    model: str | None = None
    model_file: str | None = None
    kind: str | None = None
    order: int = 2
    at: list[str] | None = None
    exprs: list[str] = field(default_factory=list)
    fmt: str = "json"
    verbose: bool = False


# -- serialization ------------------------------------------------------------------------


def _rat(q: mpq) -> str:
    return f"{q.numerator}/{q.denominator}"


def scalar_to_json(s: Scalar) -> dict:
    return {"re": _rat(s.re), "im": _rat(s.im)}


def scalar_from_json(d: dict) -> Scalar:
    return Scalar(mpq(d["re"]), mpq(d["im"]))


def series_to_json(series: StarSeries, meta: dict) -> dict:
    out = dict(meta)
    out["coeffs"] = [{"h": h, **scalar_to_json(c)} for h, c in enumerate(series.coeffs)]
    out["mValues"] = [{"r": r, **scalar_to_json(m)} for r, m in enumerate(series.m_values)]
    return out


def series_from_json(d: dict) -> StarSeries:
    coeffs = sorted(d["coeffs"], key=lambda e: e["h"])
    return StarSeries([scalar_from_json(e) for e in coeffs])


# -- models -------------------------------------------------------------------------------


def _base_point(values: list[str] | None) -> list[Scalar] | None:
    if values is None:
        return None
    try:
        return [evaluate_constant(v) for v in values]
    except ExprError as exc:
        raise ConfigError(f"bad base point coordinate: {exc}") from exc


def build_model(spec: str, at: list[str] | None = None, order: int = 8,
                connection: str = "kaehler") -> geometry.ChartModel:
    """``flat-symplectic:n``, ``flat-kaehler:n``, ``fubini-study:n[:scale]``, ``poincare-disc[:scale]``."""
    name, *params = spec.split(":")
    base = _base_point(at)
    try:
        if name == "flat-symplectic":
            n = int(params[0]) if params else 1
            return geometry.flat_symplectic(n, base, order)
        if name == "flat-kaehler":
            n = int(params[0]) if params else 1
            return geometry.flat_kaehler(n, base, order)
        if name == "fubini-study":
            n = int(params[0]) if params else 1
            scale = evaluate_constant(params[1]) if len(params) > 1 else 1
            return geometry.fubini_study(n, base, scale, order, connection)
        if name == "poincare-disc":
            scale = evaluate_constant(params[0]) if params else 1
            return geometry.poincare_disc(base, scale, order, connection=connection)
    except (ValueError, IndexError, JetError) as exc:
        raise ConfigError(f"bad model {spec!r}: {exc}") from exc
    raise ConfigError(f"unknown model {spec!r}")


def _read_mapping(path: str) -> dict:
    text = Path(path).read_text()
    if path.endswith((".yaml", ".yml")):
        import yaml
        data = yaml.safe_load(text)
    else:
        data = json.loads(text)
    if not isinstance(data, dict):
        raise ConfigError("model file must hold a mapping")
    return data


def load_model_file(path: str, at: list[str] | None = None, order: int = 8) -> geometry.ChartModel:
    """Model from JSON/YAML.

    Either ``{"builtin": "fubini-study:1", ...}`` or
    ``{"kind": "kaehler"|"symplectic", "n": n, "basePoint": [...], "kahlerPotential": expr}``
    or ``... "omegaMatrix": [[expr, ...], ...]`` (``omega_{k lbar}`` on Kaehler charts,
    ``omega_ij`` on symplectic ones).
    """
    try:
        data = _read_mapping(path)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read model file {path}: {exc}") from exc
    base_src = at if at is not None else [str(v) for v in data.get("basePoint", [])] or None
    connection = data.get("connection", "kaehler")
    if "builtin" in data:
        return build_model(str(data["builtin"]), base_src, order, connection)
    kind = data.get("kind")
    try:
        n = int(data["n"])
    except (KeyError, ValueError) as exc:
        raise ConfigError("model file needs an integer 'n'") from exc
    name = str(data.get("name", f"user-{kind}:{n}"))
    base = _base_point(base_src)
    try:
        if kind == "kaehler":
            syms = chart_symbols(n, "complex")
            if "kahlerPotential" in data:
                pot = parse(str(data["kahlerPotential"]), syms)

                def potential(z, zb, o):
                    coords = {f"z{k + 1}": z[k] for k in range(n)}
                    coords.update({f"zb{k + 1}": zb[k] for k in range(n)})
                    return lower_with(pot, coords, 2 * n, o)

                model = geometry.kaehler_from_potential(n, potential, base, order, name, connection)
            elif "omegaMatrix" in data:
                rows = [[parse(str(x), syms) for x in row] for row in data["omegaMatrix"]]
                if len(rows) != n or any(len(r) != n for r in rows):
                    raise ConfigError(f"omegaMatrix must be {n}x{n} on a Kaehler chart")

                def metric(z, zb, o):
                    coords = {f"z{k + 1}": z[k] for k in range(n)}
                    coords.update({f"zb{k + 1}": zb[k] for k in range(n)})
                    return [[lower_with(e, coords, 2 * n, o) for e in row] for row in rows]

                model = geometry.kaehler_from_matrix(name, n, base, order, metric, connection)
            else:
                raise ConfigError("Kaehler model needs kahlerPotential or omegaMatrix")
        elif kind == "symplectic":
            syms = chart_symbols(n, "real")
            rows = [[parse(str(x), syms) for x in row] for row in data.get("omegaMatrix", [])]
            if len(rows) != 2 * n or any(len(r) != 2 * n for r in rows):
                raise ConfigError(f"omegaMatrix must be {2 * n}x{2 * n} on a symplectic chart")

            def omega_fn(x, o):
                coords = {f"x{k + 1}": x[k] for k in range(2 * n)}
                return [[lower_with(e, coords, 2 * n, o) for e in row] for row in rows]

            model = geometry.symplectic_from_matrix(n, omega_fn, base, order, name)
        else:
            raise ConfigError(f"unknown model kind {kind!r}")
    except (ExprError, JetError) as exc:
        raise ConfigError(f"bad model file {path}: {exc}") from exc
    return model


def _model(cfg: RunConfig, order: int = 8) -> geometry.ChartModel:
    if cfg.model_file:
        return load_model_file(cfg.model_file, cfg.at, order)
    if not cfg.model:
        raise ConfigError("give --model or --model-file")
    return build_model(cfg.model, cfg.at, order)


# -- commands -----------------------------------------------------------------------------


DEFAULTS = {
    "complex": {"f": "z1*zb1 + z1 + zb1", "g": "i*(z1 - zb1) + 1/(2 + z1*zb1)",
                "h": "z1^2*zb1 + zb1^2*z1", "holo": "z1^2 + z1", "antiholo": "zb1^2 + zb1"},
    "real": {"f": "x1*x2 + x1", "g": "x2^2*x1 + x2", "h": "x1^2*x2 + 1/(2 + x1)"},
}


def _context(cfg: RunConfig, kind: str) -> FedosovContext:
    if cfg.order < 0:
        raise ConfigError("order must be nonnegative")
    model = _model(cfg, 2 * cfg.order + 4)
    if kind == "wick" and not model.is_kaehler:
        raise ConfigError(f"the Wick kind needs a Kaehler (complex-frame) model, not {model.name}")
    try:
        report = geometry.validate(model)
    except JetError as exc:
        raise ConfigError(f"model {model.name} cannot be validated: {exc}") from exc
    if not report.passed:
        raise ConfigError(f"model {model.name} fails validation: "
                          + "; ".join(c.name for c in report.failures()))
    try:
        return FedosovContext(model, kind, cfg.order)
    except JetError as exc:
        raise ConfigError(str(exc)) from exc


def _lower(ctx: FedosovContext, src: str):
    model = ctx.model
    e = parse(src, chart_symbols(model.n, model.frame))
    return e, lower(e, model, ctx.J)


def _meta(ctx: FedosovContext, **extra) -> dict:
    out = {"model": ctx.model.name, "kind": ctx.kind, "order": ctx.N,
           "basePoint": [scalar_to_json(x) for x in ctx.model.base_point]}
    out.update(extra)
    return out


def _cmd_star(cfg: RunConfig, out) -> int:
    if len(cfg.exprs) != 2:
        raise ConfigError("star needs two expressions f and g")
    ctx = _context(cfg, cfg.kind or "weyl")
    (ef, f), (eg, g) = (_lower(ctx, s) for s in cfg.exprs)
    series = ctx.star(f, g)
    if cfg.fmt == "csv":
        w = csv.writer(out, lineterminator="\n")
        w.writerow(["h", "re", "im", "m_re", "m_im"])
        for h, (c, m) in enumerate(zip(series.coeffs, series.m_values)):
            w.writerow([h, _rat(c.re), _rat(c.im), _rat(m.re), _rat(m.im)])
    elif cfg.fmt == "text":
        out.write(f"# {ctx.model.name} {ctx.kind} N={ctx.N}: {to_source(ef)} * {to_source(eg)}\n")
        for h, (c, m) in enumerate(zip(series.coeffs, series.m_values)):
            out.write(f"hbar^{h}  {c}    M_{h} = {m}\n")
    else:
        doc = series_to_json(series, _meta(ctx, f=to_source(ef), g=to_source(eg)))
        out.write(json.dumps(doc, indent=2) + "\n")
    return EXIT_OK


def _cmd_mtable(cfg: RunConfig, out) -> int:
    if len(cfg.exprs) != 2:
        raise ConfigError("mtable needs two expressions f and g")
    ctx = _context(cfg, cfg.kind or "weyl")
    (ef, f), (eg, g) = (_lower(ctx, s) for s in cfg.exprs)
    ms = ctx.star(f, g).m_values
    if cfg.fmt == "csv":
        w = csv.writer(out, lineterminator="\n")
        w.writerow(["r", "re", "im"])
        for r, m in enumerate(ms):
            w.writerow([r, _rat(m.re), _rat(m.im)])
    elif cfg.fmt == "text":
        for r, m in enumerate(ms):
            out.write(f"M_{r} = {m}\n")
    else:
        doc = _meta(ctx, f=to_source(ef), g=to_source(eg))
        doc["mValues"] = [{"r": r, **scalar_to_json(m)} for r, m in enumerate(ms)]
        out.write(json.dumps(doc, indent=2) + "\n")
    return EXIT_OK


def _verify_kind(cfg: RunConfig, kind: str, log) -> list[Report]:
    ctx = _context(cfg, kind)
    frame = "complex" if ctx.model.is_kaehler else "real"
    exprs = dict(DEFAULTS[frame])
    for key, src in zip(("f", "g", "h"), cfg.exprs):
        exprs[key] = src
    f, g, h = (_lower(ctx, exprs[k])[1] for k in ("f", "g", "h"))
    reports = [verify_context(ctx)]
    log(f"{ctx.model.name} {kind}: flatness")
    reports.append(verify_flatness(ctx, [ctx.function(f), ctx.tau(g)]))
    reports.append(verify_lift(ctx, f))
    log(f"{ctx.model.name} {kind}: axioms")
    reports.append(verify_axioms(ctx, f, g, h))
    log(f"{ctx.model.name} {kind}: order")
    reports.append(verify_order(ctx, f, g, min(ctx.N, 2)))
    if kind == "wick":
        log(f"{ctx.model.name} {kind}: wick type")
        holo, anti = (_lower(ctx, exprs[k])[1] for k in ("holo", "antiholo"))
        reports.append(verify_wick_type(ctx, h, holo, anti))
    return reports


def _emit_reports(reports: list[Report], cfg: RunConfig, out) -> int:
    passed = all(r.passed for r in reports)
    if cfg.fmt == "csv":
        w = csv.writer(out, lineterminator="\n")
        w.writerow(["report", "check", "passed", "defect_re", "defect_im", "detail"])
        for r in reports:
            for c in r.checks:
                w.writerow([r.title, c.name, int(c.passed), _rat(c.defect.re), _rat(c.defect.im), c.detail])
    elif cfg.fmt == "text":
        color = _use_color(out)
        for r in reports:
            out.write(f"# {r.title}\n")
            for c in r.checks:
                line = c.line()
                if color:
                    line = ("\x1b[32m" if c.passed else "\x1b[31m") + line[:4] + "\x1b[0m" + line[4:]
                out.write(line + "\n")
    else:
        out.write(json.dumps({"passed": passed, "reports": [r.to_dict() for r in reports]}, indent=2) + "\n")
    return EXIT_OK if passed else EXIT_FAIL


def _use_color(out) -> bool:
    return "NO_COLOR" not in os.environ and hasattr(out, "isatty") and out.isatty()


def _cmd_verify(cfg: RunConfig, out, log) -> int:
    if cfg.kind:
        kinds = [cfg.kind]
    else:
        probe = _model(cfg, 2)
        kinds = ["weyl", "wick"] if probe.is_kaehler else ["weyl"]
    reports = []
    for kind in kinds:
        reports.extend(_verify_kind(cfg, kind, log))
    return _emit_reports(reports, cfg, out)


def _cmd_validate(cfg: RunConfig, out) -> int:
    model = _model(cfg, max(cfg.order, 2))
    try:
        report = geometry.validate(model)
    except JetError as exc:
        raise ConfigError(f"model {model.name} cannot be validated: {exc}") from exc
    return _emit_reports([report], cfg, out)


def run(cfg: RunConfig, out=None, err=None) -> int:
    """Execute one command; returns the exit status."""
    out = out or sys.stdout
    err = err or sys.stderr

    def log(msg: str):
        if cfg.verbose:
            err.write(msg + "\n")

    try:
        if cfg.kind not in (None, "weyl", "wick"):
            raise ConfigError(f"unknown kind {cfg.kind!r}")
        if cfg.command == "star":
            return _cmd_star(cfg, out)
        if cfg.command == "mtable":
            return _cmd_mtable(cfg, out)
        if cfg.command == "verify":
            return _cmd_verify(cfg, out, log)
        if cfg.command == "validate":
            return _cmd_validate(cfg, out)
        raise ConfigError(f"unknown command {cfg.command!r}")
    except (ConfigError, ExprError, JetError) as exc:
        err.write(f"error: {exc}\n")
        return EXIT_CONFIG


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="fedstar", description="Exact Fedosov star products on chart models.")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, with_kind=True):
        src = sp.add_mutually_exclusive_group()
        src.add_argument("--model", help="flat-symplectic:n, flat-kaehler:n, fubini-study:n[:scale], "
                                         "poincare-disc[:scale]")
        src.add_argument("--model-file", help="JSON or YAML model description")
        if with_kind:
            sp.add_argument("--kind", choices=["weyl", "wick"])
        sp.add_argument("--order", type=int, default=2, help="hbar order N")
        sp.add_argument("--at", help="comma-separated base point (n complex or 2n frame values)")
        sp.add_argument("--format", dest="fmt", choices=["json", "csv", "text"], default="json")
        sp.add_argument("-v", "--verbose", action="store_true")

    for name, help_ in (("star", "coefficients of f * g at the base point"),
                        ("mtable", "values M_r(f, g) at the base point")):
        sp = sub.add_parser(name, help=help_)
        common(sp)
        sp.add_argument("exprs", nargs=2, metavar="EXPR")
    sp = sub.add_parser("verify", help="run the invariant suite")
    common(sp)
    sp.add_argument("exprs", nargs="*", metavar="EXPR", help="optional f, g, h")
    mp = sub.add_parser("model", help="model utilities")
    msub = mp.add_subparsers(dest="action", required=True)
    vp = msub.add_parser("validate", help="exact geometry checks")
    common(vp, with_kind=False)
    return p


def parse_args(argv: list[str] | None = None) -> RunConfig:
    args = _parser().parse_args(argv)
    command = "validate" if args.command == "model" else args.command
    return RunConfig(command=command, model=args.model, model_file=args.model_file,
                     kind=getattr(args, "kind", None), order=args.order,
                     at=args.at.split(",") if args.at else None,
                     exprs=list(getattr(args, "exprs", []) or []), fmt=args.fmt, verbose=args.verbose)


def main(argv: list[str] | None = None) -> int:
    return run(parse_args(argv))


if __name__ == "__main__":
    sys.exit(main())
