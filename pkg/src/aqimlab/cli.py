"""Command-line front end.

    aqimlab list
    aqimlab experiment exp-lemma-third --d1 2 --d2 2 --seed 42
    aqimlab bound --id r --d1 2 --d2 2
    aqimlab bound --id thm2 --alpha 0.5 --d12 256
    aqimlab merit --dims 2,2 --dc 2 --merit lambda_avg --k 1
    aqimlab thresholds --kind mask --case 1 --alpha 1e-4 --l 8:24

Exit status: 0 on success, 2 if any record has verdict bound_violated, 1 on
errors.  Output goes to --output, else to $AQIMLAB_OUTPUT_DIR/<name>.<fmt> when
that variable is set, else to standard output.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from typing import Sequence

import numpy as np

from . import __version__
from . import closedform as cf
from .experiments import REGISTRY, VIOLATED, ExperimentRecord, list_experiments, resolve_params, run_experiment
from .haar import RngStream, random_isometry
from .linalg import PartitionSpec
from .merit import (
    MERITS,
    StateEnsemble,
    canonical_merit,
    inaccuracy,
    subspace_merit_estimate,
    variation,
)

OUTPUT_DIR_ENV = "AQIMLAB_OUTPUT_DIR"

CSV_FIXED_HEAD = ["name"]
CSV_FIXED_TAIL = ["seed", "samples", "empirical", "se", "analytic", "verdict", "wall_time_ms", "extra"]


class CliError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


# ---------------------------------------------------------------- serialization


def _cell(v) -> str:
    if isinstance(v, str):
        return v
    return json.dumps(v, sort_keys=True, allow_nan=True)


def emit(records: Sequence[ExperimentRecord | dict], fmt: str = "csv", config: dict | None = None) -> str:
    """Serialize records as CSV or JSON.

    CSV columns: name, param.<key> (sorted union of keys), seed, samples,
    empirical, se, analytic, verdict, wall_time_ms, extra (JSON).  With a
    config, CSV gets a leading '# config: {...}' line and JSON becomes
    {"config": ..., "records": [...]}; without one JSON is a bare array.
    """
    if not records:
        raise ValueError("nothing to emit: empty record list")
    rows = [r.to_dict() if isinstance(r, ExperimentRecord) else dict(r) for r in records]
    if fmt == "json":
        payload = rows if config is None else {"config": config, "records": rows}
        return json.dumps(payload, sort_keys=True, indent=1, allow_nan=True) + "\n"
    if fmt != "csv":
        raise ValueError(f"unknown format {fmt!r}")
    keys = sorted({k for r in rows for k in r["params"]})
    buf = io.StringIO()
    if config is not None:
        buf.write("# config: " + json.dumps(config, sort_keys=True) + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_FIXED_HEAD + [f"param.{k}" for k in keys] + CSV_FIXED_TAIL)
    for r in rows:
        params = [_cell(r["params"][k]) if k in r["params"] else "" for k in keys]
        tail = [_cell(r[c]) for c in CSV_FIXED_TAIL]
        w.writerow([r["name"]] + params + tail)
    return buf.getvalue()


def parse_emitted(text: str, fmt: str = "csv") -> tuple[dict | None, list[dict]]:
    """Inverse of emit: returns (config, record dicts)."""
    if fmt == "json":
        data = json.loads(text)
        if isinstance(data, dict):
            return data.get("config"), data["records"]
        return None, data
    lines = text.splitlines()
    config = None
    if lines and lines[0].startswith("# config: "):
        config = json.loads(lines[0][len("# config: "):])
        lines = lines[1:]
    reader = csv.reader(lines)
    header = next(reader)
    out = []
    for row in reader:
        rec = {"params": {}}
        for col, val in zip(header, row):
            if col.startswith("param."):
                if val != "":
                    rec["params"][col[6:]] = _uncell(val)
            elif col in ("name", "verdict"):
                rec[col] = val
            else:
                rec[col] = _uncell(val)
        out.append(rec)
    return config, out


def _uncell(s: str):
    try:
        return json.loads(s)
    except json.JSONDecodeError:
        return s


def _write(text: str, output: str | None, default_name: str, fmt: str):
    path = output
    if path is None and os.environ.get(OUTPUT_DIR_ENV):
        path = os.path.join(os.environ[OUTPUT_DIR_ENV], f"{default_name}.{fmt}")
    if path is None:
        sys.stdout.write(text)
        sys.stdout.flush()
        return
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "w", newline="") as fh:
        fh.write(text)


# ---------------------------------------------------------------- generic --key value parsing


def _parse_extra(tokens: list[str]) -> dict:
    out = {}
    i = 0
    while i < len(tokens):
        tok = tokens[i]
        if not tok.startswith("--") or len(tok) < 3:
            raise CliError(f"unexpected argument {tok!r}")
        key = tok[2:]
        if "=" in key:
            key, val = key.split("=", 1)
            i += 1
        else:
            if i + 1 >= len(tokens) or (tokens[i + 1].startswith("--") and not _is_number(tokens[i + 1])):
                raise CliError(f"option --{key} needs a value")
            val = tokens[i + 1]
            i += 2
        out[key.replace("-", "_")] = val
    return out


def _is_number(s: str) -> bool:
    try:
        float(s)
        return True
    except ValueError:
        return False


def _num(s):
    if isinstance(s, (int, float)):
        return s
    try:
        f = float(s)
    except ValueError:
        raise CliError(f"expected a number, got {s!r}") from None
    if f.is_integer() and not any(c in s for c in ".eE"):
        return int(f)
    return f


def _common(p: argparse.ArgumentParser):
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--output", default=None)
    p.add_argument("--format", choices=("csv", "json"), default="csv")


# ---------------------------------------------------------------- commands


def cmd_list(args, extra) -> int:
    if extra:
        raise CliError(f"unexpected arguments {extra}")
    items = list_experiments()
    if args.format == "json":
        text = json.dumps(items, sort_keys=True, indent=1) + "\n"
    else:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["name", "summary", "params"])
        for it in items:
            w.writerow([it["name"], it["summary"],
                        " ".join(f"{k}={_cell(v['default'])}" for k, v in it["params"].items())])
        text = buf.getvalue()
    _write(text, args.output, "list", args.format)
    return 0


def cmd_experiment(args, extra) -> int:
    params = _parse_extra(extra)
    schema = REGISTRY[args.name].schema if args.name in REGISTRY else None
    if schema is None:
        raise CliError(f"unknown experiment {args.name!r}; try 'list'")
    if args.samples is not None:
        if "samples" not in schema:
            raise CliError(f"{args.name} has no 'samples' parameter; set {sorted(k for k in schema if k in ('outer', 'inner', 'full_samples'))} instead")
        params["samples"] = args.samples
    effective = resolve_params(args.name, params)
    records = run_experiment(args.name, effective, seed=args.seed, workers=args.workers, timing=args.timing)
    config = {"command": "experiment", "name": args.name, "params": effective, "seed": args.seed,
              "workers": args.workers, "format": args.format, "version": __version__}
    _write(emit(records, args.format, config), args.output, args.name, args.format)
    return 2 if any(r.verdict == VIOLATED for r in records) else 0


def _bound_table():
    t = {
        "r": (lambda p: cf.bound_value("r", d1=p["d1"], d2=p["d2"]), ("d1", "d2")),
        "s": (lambda p: cf.bound_value("s", d_C=p["d_C"], d1=p["d1"], d2=p["d2"]), ("d_C", "d1", "d2")),
        "t": (lambda p: cf.bound_value("t", d_C=p["d_C"], d1=p["d1"], d2=p["d2"]), ("d_C", "d1", "d2")),
        "rmt_factor": (lambda p: cf.rmt_factor(p["d_C"], p["d1"], p["d2"]), ("d_C", "d1", "d2")),
        "u": (lambda p: cf.bound_value("u", d=p["d"], k=p["k"], m=p["m"], d_C=p["d_C"]), ("d", "k", "m", "d_C")),
        "t_multi": (lambda p: cf.bound_value("t_multi", d=p["d"], k=p["k"], m=p["m"], d_C=p["d_C"]),
                    ("d", "k", "m", "d_C")),
        "ratio_factor": (lambda p: cf.ratio_factor(p["d_C"], p["d12"]), ("d_C", "d12")),
        "w": (lambda p: cf.lower_bound_w(p["d_C"], p["d12"]), ("d_C", "d12")),
        "pochhammer": (lambda p: cf.pochhammer(p["x"], p["y"]), ("x", "y")),
        "gbinom": (lambda p: cf.gbinom(p["x"], p["y"]), ("x", "y")),
        "binary_entropy": (lambda p: cf.binary_entropy(p["p"]), ("p",)),
    }
    for ident in ("hs2_state_vs_mixed", "hs2_state_vs_projector", "hs2_projector_vs_mixed"):
        need = ("d1", "d2") if ident == "hs2_state_vs_mixed" else ("d1", "d2", "d_C")
        t[ident] = (lambda p, ident=ident: cf.expectation_identity(ident, p["d1"], p["d2"], p.get("d_C")), need)
    for ident in ("lb_identity_B1", "lb_identity_B2", "lb_pair_B2_simple", "v1", "v2"):
        need = ("d1", "d2", "d_C") if ident in ("v1", "v2") else ("d1", "d2")
        t[ident] = (lambda p, ident=ident: cf.avg_distance_bounds(ident, p["d1"], p["d2"], p.get("d_C")), need)
    dc_need = {"bipartite_mixed": ("alpha", "d12"), "bipartite_projector": ("alpha", "d12"),
               "multipartite_identity": ("alpha", "d", "m"), "random_code": ("alpha", "d", "m", "k")}
    for ident, need in dc_need.items():
        t[ident] = (lambda p, ident=ident, need=need: cf.dc_max(ident, p["alpha"], **{k: p[k] for k in need[1:]}),
                    need)
    return t


def cmd_bound(args, extra) -> int:
    params = {k: _num(v) for k, v in _parse_extra(extra).items()}
    ident = args.id
    if ident in cf.TAIL_PARAMS:
        need = ("alpha",) + cf.TAIL_PARAMS[ident]
        _require(ident, params, need)
        kw = {k: params[k] for k in cf.TAIL_PARAMS[ident]}
        ln_raw = cf.tail_bound(ident, params["alpha"], clamp=False, **kw)
        ln_p = min(0.0, ln_raw)
        result = {"id": ident, "params": params, "ln_rhs": ln_raw, "ln_p": ln_p, "p": math.exp(ln_p),
                  "log_space": True}
        text = (json.dumps(result, sort_keys=True) + "\n" if args.format == "json"
                else f"ln_p={ln_p:.6g} p={math.exp(ln_p):.6g} ln_rhs={ln_raw:.6g}\n")
    else:
        table = _bound_table()
        if ident not in table:
            raise CliError(f"unknown bound id {ident!r}; known: {sorted(table) + sorted(cf.TAIL_PARAMS)}")
        fn, need = table[ident]
        _require(ident, params, need)
        try:
            value = fn(params)
        except (ValueError, ArithmeticError) as exc:
            raise CliError(f"{ident}: {exc}") from None
        result = {"id": ident, "params": params, "value": value, "log_space": False}
        text = json.dumps(result, sort_keys=True) + "\n" if args.format == "json" else f"{value:.6g}\n"
    _write(text, args.output, f"bound-{ident}", args.format)
    return 0


def _require(ident, params, need):
    missing = [k for k in need if k not in params]
    if missing:
        raise CliError(f"{ident} needs {', '.join('--' + k for k in missing)}")
    unknown = sorted(set(params) - set(need))
    if unknown:
        raise CliError(f"{ident} does not take {', '.join('--' + k for k in unknown)}")


def _load_states(path: str) -> np.ndarray:
    if path.endswith(".npy"):
        arr = np.load(path)
    else:
        with open(path) as fh:
            data = json.load(fh)
        if isinstance(data, dict):
            data = data["states"]
        if not data:
            raise CliError(f"{path} holds no states")
        if not isinstance(data[0], list) or (len(data[0]) == 2 and not isinstance(data[0][0], list)
                                             and _is_pair_vector(data)):
            data = [data]
        arr = [[_to_complex(x) for x in row] for row in data]
    return np.atleast_2d(np.asarray(arr, dtype=complex))


def _is_pair_vector(data) -> bool:
    # a single state written as [[re, im], [re, im], ...]
    return all(isinstance(x, list) and len(x) == 2 and not isinstance(x[0], list) for x in data) and \
        all(not isinstance(y, list) for x in data for y in x)


def _to_complex(x):
    if isinstance(x, (list, tuple)) and len(x) == 2:
        return complex(x[0], x[1])
    if isinstance(x, str):
        return complex(x.replace(" ", ""))
    return complex(x)


def cmd_merit(args, extra) -> int:
    if extra:
        raise CliError(f"unexpected arguments {extra}")
    dims = tuple(int(x) for x in args.dims.split(","))
    part = PartitionSpec(dims)
    name = canonical_merit(args.merit)
    family, mode, reference = MERITS[name]
    if (args.k is None) == (args.keep is None):
        raise CliError("give exactly one of --k (order) or --keep (party list)")
    sel = int(args.k) if args.k is not None else tuple(int(x) for x in args.keep.split(","))
    if args.states:
        vecs = _load_states(args.states)
        ens = StateEnsemble.from_vectors(vecs, part, normalize=args.normalize)
        rep = variation(ens, sel, mode) if family == "variation" else inaccuracy(ens, sel, mode, reference)
        source = {"states": args.states}
    else:
        if args.dc is None:
            raise CliError("give --states FILE or --dc for a random code space")
        stream = RngStream(args.seed)
        v = random_isometry(part, args.dc, stream.child(0))
        rep = subspace_merit_estimate(v, sel, name, args.samples, stream.child(1), args.workers)
        source = {"random_isometry": {"d_C": args.dc, "seed": args.seed}}
    result = {"merit": name, "selector": sel if isinstance(sel, int) else list(sel), "dims": list(dims),
              "value": rep.value, "std_error": rep.std_error, "kind": rep.kind, "samples": rep.samples, **source}
    if args.format == "json":
        text = json.dumps(result, sort_keys=True) + "\n"
    else:
        text = f"merit,value,std_error,kind,samples\n{name},{rep.value!r},{rep.std_error!r},{rep.kind},{rep.samples}\n"
    _write(text, args.output, f"merit-{name}", args.format)
    return 0


def _l_values(spec: str) -> list[float]:
    if ":" in spec:
        parts = [float(x) for x in spec.split(":")]
        lo, hi = parts[0], parts[1]
        step = parts[2] if len(parts) > 2 else 1.0
        n = int(math.floor((hi - lo) / step + 1e-9)) + 1
        return [lo + i * step for i in range(n)]
    return [float(x) for x in spec.split(",")]


def cmd_thresholds(args, extra) -> int:
    p = {k: _num(v) for k, v in _parse_extra(extra).items()}
    ls = _l_values(args.l)
    rows = []
    if args.kind == "mask":
        case = int(args.case)
        for l in ls:
            _, m_star = cf.mask_threshold(case, p.get("d", 2), l=l, alpha=p.get("alpha"), zeta=p.get("zeta"))
            rows.append({"l": l, "m_star": m_star})
    else:
        for l in ls:
            res = cf.aqecc_threshold(args.case, p.get("d", 2), l, p.get("gamma", 0.1),
                                     eta0=p.get("eta0"), a=p.get("a"))
            rows.append({"l": l, "m_star": res.m_star, "code_rate": res.code_rate, "coefficient": res.coefficient})
    if len(rows) >= 2:
        slope, icpt = cf.fit_slope([r["l"] for r in rows], [r["m_star"] for r in rows])
    else:
        slope = icpt = None
    if args.format == "json":
        text = json.dumps({"kind": args.kind, "case": args.case, "params": p, "rows": rows,
                           "slope": slope, "intercept": icpt}, sort_keys=True) + "\n"
    else:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        cols = list(rows[0])
        w.writerow(cols)
        for r in rows:
            w.writerow([_cell(r[c]) for c in cols])
        if slope is not None:
            buf.write(f"# slope: {slope!r} intercept: {icpt!r}\n")
        text = buf.getvalue()
    _write(text, args.output, f"thresholds-{args.kind}-{args.case}", args.format)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="aqimlab", description="Random approximate quantum information masking numerics",
                     allow_abbrev=False)
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True

    p = sub.add_parser("list", allow_abbrev=False, help="list registered experiments")
    _common(p)

    p = sub.add_parser("experiment", allow_abbrev=False, help="run a named experiment; extra --key value pairs set its parameters")
    p.add_argument("name")
    p.add_argument("--samples", type=int, default=None)
    p.add_argument("--timing", action="store_true", help="record wall-clock time (breaks byte-identical replay)")
    _common(p)

    p = sub.add_parser("bound", allow_abbrev=False, help="evaluate a closed form; extra --key value pairs are its parameters")
    p.add_argument("--id", required=True)
    _common(p)

    p = sub.add_parser("merit", allow_abbrev=False, help="estimate a figure of merit")
    p.add_argument("--dims", required=True, help="comma-separated local dimensions")
    p.add_argument("--merit", default="lambda_avg", help=f"one of {sorted(MERITS)}")
    p.add_argument("--k", default=None, help="order k (max over all k-party subsets)")
    p.add_argument("--keep", default=None, help="comma-separated 1-based parties")
    p.add_argument("--states", default=None, help="JSON or .npy file with one state per row")
    p.add_argument("--normalize", action="store_true")
    p.add_argument("--dc", type=int, default=None, help="code dimension of a random isometry")
    p.add_argument("--samples", type=int, default=2000)
    _common(p)

    p = sub.add_parser("thresholds", allow_abbrev=False, help="threshold scans m*(l)")
    p.add_argument("--kind", choices=("mask", "aqecc"), required=True)
    p.add_argument("--case", required=True, help="1|2|3 for mask, fixed_eta|decaying_eta for aqecc")
    p.add_argument("--l", required=True, help="value, comma list, or lo:hi[:step]")
    _common(p)
    return parser


COMMANDS = {"list": cmd_list, "experiment": cmd_experiment, "bound": cmd_bound,
            "merit": cmd_merit, "thresholds": cmd_thresholds}


def run(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args, extra = parser.parse_known_args(argv)
    except SystemExit as exc:
        return int(exc.code) if isinstance(exc.code, int) else 1
    if args.command not in ("experiment", "bound", "thresholds", "list", "merit"):
        parser.error(f"unknown command {args.command}")
    if getattr(args, "workers", 1) < 1:
        print("aqimlab: error: --workers must be >= 1", file=sys.stderr)
        return 1
    try:
        return COMMANDS[args.command](args, extra)
    except (CliError, ValueError, KeyError, TypeError, ArithmeticError, NotImplementedError,
            cf.ThresholdNotFound, OSError) as exc:
        msg = exc.args[0] if isinstance(exc, KeyError) and exc.args else exc
        print(f"aqimlab {args.command}: error: {msg}", file=sys.stderr)
        return 1


def main(argv: Sequence[str] | None = None) -> int:
    return run(argv)


if __name__ == "__main__":
    raise SystemExit(main())
