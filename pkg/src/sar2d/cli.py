"""Command-line interface.

Subcommands::

    sar2d classify --alpha A --beta B --gamma C [--tol T]
    sar2d simulate --config cfg.json --out field.csv
    sar2d estimate --field field.csv [--noise noise.csv]
    sar2d asymptotics --config cfg.json
    sar2d mc --config cfg.json --report report.json --raw raw.csv

Exit codes: 0 success, 1 domain or input error, 2 failed Monte Carlo
comparison. ``SAR2D_WORKERS`` sets the Monte Carlo thread count.
"""
from __future__ import annotations

import argparse
import json
import re
import sys
from dataclasses import dataclass, field
from typing import Optional, Tuple

from .asymptotics import limit_law
from .errors import ParseError, Sar2dError
from .estimator import accumulate, accumulate_with_noise, c_stat, lse
from .montecarlo import MCConfig, Tolerances, run_experiment
from .params import Params, classify
from .simulate import NoiseSpec, draw_noise, read_field_csv, read_noise_csv, simulate_recursion

COMMANDS = ("classify", "simulate", "estimate", "asymptotics", "mc")

_KEYS = {
    "classify": {"command", "params", "tol"},
    "simulate": {"command", "params", "size", "noise", "out", "noise_out"},
    "estimate": {"command", "field", "noise_file"},
    "asymptotics": {"command", "params", "tol", "rho_tol", "out"},
    "mc": {"command", "params", "sizes", "replicates", "noise", "base_seed", "rho_tol",
           "tolerances", "raw_only", "report", "raw"},
}
_TOL_KEYS = {"rel", "entry_floor", "zero_abs", "ks_p", "slope"}


@dataclass(frozen=True)
class CliConfig:
    command: str
    params: Optional[Params] = None
    size: Optional[Tuple[int, int]] = None
    sizes: Tuple[Tuple[int, int], ...] = ()
    noise: NoiseSpec = NoiseSpec()
    replicates: int = 0
    base_seed: int = 0
    tol: float = 1e-12
    rho_tol: float = 1e-6
    tolerances: Tolerances = Tolerances()
    raw_only: bool = False
    outputs: dict = field(default_factory=dict)


def _line_of(text, key):
    m = re.search(r'"%s"\s*:' % re.escape(key), text)
    return text.count("\n", 0, m.start()) + 1 if m else None


def _require(obj, key, kind, text, parent=None):
    if key not in obj:
        raise ParseError("missing required key", key=_qual(parent, key))
    return _typed(obj[key], key, kind, text, parent)


def _qual(parent, key):
    return f"{parent}.{key}" if parent else key


def _typed(value, key, kind, text, parent=None):
    ok = {
        "int": isinstance(value, int) and not isinstance(value, bool),
        "num": isinstance(value, (int, float)) and not isinstance(value, bool),
        "str": isinstance(value, str),
        "bool": isinstance(value, bool),
        "obj": isinstance(value, dict),
        "list": isinstance(value, list),
    }[kind]
    if not ok:
        raise ParseError(f"expected {kind}", key=_qual(parent, key), line=_line_of(text, key))
    return value


def _check_keys(obj, allowed, text, parent=None):
    for key in obj:
        if key not in allowed:
            raise ParseError("unknown key", key=_qual(parent, key), line=_line_of(text, key))


def _params(obj, text):
    p = _require(obj, "params", "obj", text)
    _check_keys(p, {"alpha", "beta", "gamma"}, text, "params")
    vals = [_require(p, k, "num", text, "params") for k in ("alpha", "beta", "gamma")]
    return Params(*vals)


def _pair(value, key, text):
    if (not isinstance(value, list) or len(value) != 2
            or not all(isinstance(v, int) and not isinstance(v, bool) and v >= 1 for v in value)):
        raise ParseError("expected [n, m] with positive integers", key=key,
                         line=_line_of(text, key))
    return int(value[0]), int(value[1])


def _noise(obj, text):
    if "noise" not in obj:
        return NoiseSpec()
    nz = _typed(obj["noise"], "noise", "obj", text)
    _check_keys(nz, {"kind", "seed"}, text, "noise")
    kind = _typed(nz.get("kind", "Gaussian"), "kind", "str", text, "noise")
    seed = _typed(nz.get("seed", 0), "seed", "int", text, "noise")
    try:
        return NoiseSpec(kind, seed)
    except Sar2dError as exc:
        raise ParseError(str(exc), key="noise", line=_line_of(text, "noise"))


def parse_config(text, command: Optional[str] = None) -> CliConfig:
    """Validate a JSON configuration.

    Parameters
    ----------
    text : bytes or str
        UTF-8 JSON document.
    command : str, optional
        Subcommand the config is used with; must agree with a ``command``
        key when both are present.

    Raises
    ------
    ParseError
        On malformed JSON, unknown or missing keys and invalid values.
    """
    if isinstance(text, bytes):
        try:
            text = text.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise ParseError(f"config is not valid UTF-8: {exc}")
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc.msg}", line=exc.lineno)
    if not isinstance(obj, dict):
        raise ParseError("config must be a JSON object", line=1)
    cmd = obj.get("command", command)
    if cmd not in COMMANDS:
        raise ParseError(f"command must be one of {', '.join(COMMANDS)}", key="command",
                         line=_line_of(text, "command"))
    if command is not None and cmd != command:
        raise ParseError(f"config is for '{cmd}', not '{command}'", key="command",
                         line=_line_of(text, "command"))
    _check_keys(obj, _KEYS[cmd], text)
    kw = {"command": cmd, "outputs": {}}
    try:
        if cmd != "estimate":
            kw["params"] = _params(obj, text)
        if "tol" in obj:
            kw["tol"] = float(_typed(obj["tol"], "tol", "num", text))
            if kw["tol"] < 0:
                raise ParseError("tol must be non-negative", key="tol",
                                 line=_line_of(text, "tol"))
        if "rho_tol" in obj:
            kw["rho_tol"] = float(_typed(obj["rho_tol"], "rho_tol", "num", text))
            if not kw["rho_tol"] > 0:
                raise ParseError("rho_tol must be positive", key="rho_tol",
                                 line=_line_of(text, "rho_tol"))
        for key in ("out", "noise_out", "report", "raw", "field", "noise_file"):
            if key in obj:
                kw["outputs"][key] = _typed(obj[key], key, "str", text)
        if cmd == "simulate":
            kw["size"] = _pair(_require(obj, "size", "list", text), "size", text)
            kw["noise"] = _noise(obj, text)
        if cmd == "mc":
            sizes = _require(obj, "sizes", "list", text)
            if not sizes:
                raise ParseError("sizes must be non-empty", key="sizes",
                                 line=_line_of(text, "sizes"))
            kw["sizes"] = tuple(_pair(s, "sizes", text) for s in sizes)
            reps = _require(obj, "replicates", "int", text)
            if reps < 2:
                raise ParseError("replicates must be at least 2", key="replicates",
                                 line=_line_of(text, "replicates"))
            kw["replicates"] = reps
            kw["noise"] = _noise(obj, text)
            kw["base_seed"] = _typed(obj.get("base_seed", 0), "base_seed", "int", text)
            if not 0 <= kw["base_seed"] < 2 ** 64:
                raise ParseError("base_seed must be a 64-bit unsigned integer",
                                 key="base_seed", line=_line_of(text, "base_seed"))
            kw["raw_only"] = _typed(obj.get("raw_only", False), "raw_only", "bool", text)
            if "tolerances" in obj:
                t = _typed(obj["tolerances"], "tolerances", "obj", text)
                _check_keys(t, _TOL_KEYS, text, "tolerances")
                tk = {}
                for k in ("rel", "entry_floor", "ks_p", "zero_abs"):
                    if k in t and t[k] is not None:
                        tk[k] = float(_typed(t[k], k, "num", text, "tolerances"))
                if "slope" in t and t["slope"] is not None:
                    s = _typed(t["slope"], "slope", "list", text, "tolerances")
                    if len(s) != 2 or not all(isinstance(v, (int, float)) for v in s):
                        raise ParseError("slope must be [low, high]", key="tolerances.slope",
                                         line=_line_of(text, "slope"))
                    tk["slope"] = (float(s[0]), float(s[1]))
                kw["tolerances"] = Tolerances(**tk)
            ratios = {m / n for n, m in kw["sizes"]}
            if max(ratios) - min(ratios) > 1e-12 * max(ratios):
                raise ParseError("all sizes must share one aspect ratio", key="sizes",
                                 line=_line_of(text, "sizes"))
    except ParseError:
        raise
    except Sar2dError as exc:
        raise ParseError(str(exc))
    return CliConfig(**kw)


def _write(path, text):
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)


def dispatch(cfg: CliConfig) -> int:
    """Execute a validated configuration and return the exit code."""
    try:
        return _dispatch(cfg)
    except (Sar2dError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def _dispatch(cfg: CliConfig) -> int:
    out = cfg.outputs
    if cfg.command == "classify":
        print(classify(cfg.params, cfg.tol).tag.value)
        return 0
    if cfg.command == "simulate":
        eps = draw_noise(cfg.noise, *cfg.size)
        fld = simulate_recursion(cfg.params, eps)
        _write(out.get("out"), fld.to_csv())
        if "noise_out" in out:
            _write(out["noise_out"], eps.to_csv())
        return 0
    if cfg.command == "estimate":
        fld = read_field_csv(out["field"])
        if "noise_file" in out:
            acc = accumulate_with_noise(fld, read_noise_csv(out["noise_file"]))
        else:
            acc = accumulate(fld)
        est = lse(acc)
        doc = json.loads(est.to_json(acc.n, acc.m))
        if acc.A is not None:
            doc["c_stat"] = [float(v) for v in c_stat(acc)]
        print(json.dumps(doc, sort_keys=True))
        return 0
    if cfg.command == "asymptotics":
        law = limit_law(cfg.params, cfg.rho_tol)
        if not law.supported:
            print(f"unsupported region {law.region.tag.value}: {law.note}")
            return 1
        _write(out.get("out"), json.dumps(law.to_dict(cfg.params), indent=2, sort_keys=True) + "\n")
        return 0
    # mc
    mc = MCConfig(cfg.params, cfg.sizes, cfg.replicates, cfg.noise, cfg.rho_tol,
                  cfg.base_seed, cfg.tolerances, cfg.raw_only)
    report = run_experiment(mc, keep_raw="raw" in out)
    if "report" in out:
        _write(out["report"], report.to_json(cfg.params) + "\n")
    if "raw" in out:
        _write(out["raw"], report.raw_csv())
    if not report.law.supported:
        return 0
    return 0 if report.passed else 2


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="sar2d", description=__doc__.split("\n")[0])
    sub = ap.add_subparsers(dest="command", required=True, metavar="{" + ",".join(COMMANDS) + "}")
    c = sub.add_parser("classify", help="locate (alpha, beta, gamma) in the stability tetrahedron")
    c.add_argument("--alpha", type=float, required=True)
    c.add_argument("--beta", type=float, required=True)
    c.add_argument("--gamma", type=float, required=True)
    c.add_argument("--tol", type=float, default=1e-12)
    s = sub.add_parser("simulate", help="simulate one field and write it as CSV")
    s.add_argument("--config", required=True)
    s.add_argument("--out", help="field CSV path (default: stdout)")
    e = sub.add_parser("estimate", help="least-squares fit of a field CSV")
    e.add_argument("--field", required=True)
    e.add_argument("--noise", help="innovations CSV (k,l,eps) for the C statistic")
    a = sub.add_parser("asymptotics", help="limit law of the scaled estimator as JSON")
    a.add_argument("--config", required=True)
    a.add_argument("--out", help="JSON path (default: stdout)")
    m = sub.add_parser("mc", help="Monte Carlo check against the limit law")
    m.add_argument("--config", required=True)
    m.add_argument("--report")
    m.add_argument("--raw")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "classify":
            cfg = CliConfig("classify", params=Params(args.alpha, args.beta, args.gamma),
                            tol=args.tol)
        elif args.command == "estimate":
            outputs = {"field": args.field}
            if args.noise:
                outputs["noise_file"] = args.noise
            cfg = CliConfig("estimate", outputs=outputs)
        else:
            with open(args.config, "rb") as fh:
                cfg = parse_config(fh.read(), args.command)
            for key in ("out", "report", "raw"):
                val = getattr(args, key, None)
                if val:
                    cfg.outputs[key] = val
    except (Sar2dError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return dispatch(cfg)


if __name__ == "__main__":
    sys.exit(main())
