"""Command-line front end.

Exit codes: 0 success, 1 a deadlock-freedom property is violated, 2 bad input
(parse errors, unresolved configs, out-of-range arguments), 3 analysis errors
(for example the state-space cap was exceeded).
"""

from __future__ import annotations

import argparse
import csv
import fnmatch
import hashlib
import io
import json
import logging
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from . import __version__
from .composer import DEFAULT_STATE_CAP, SparseDtmc, compose, dump_json, from_json, to_dot
from .dsl import format_config, load_model, parse_config, parse_properties
from .engine import Query, default_threads, eval_query
from .errors import AnalysisError, ModelError, ParseError
from .model import Network, ScenarioConfig, bind_constants
from .prism import to_prism
from .simulator import estimate_points
from .uvc import classify_config, risk_reduction_and_sil, scenario_table
from .uvc.case import AWARENESS_LEVELS, ODS_PROFILES

log = logging.getLogger("tickmc")

EXIT_OK, EXIT_DEADLOCK, EXIT_INPUT, EXIT_ANALYSIS = 0, 1, 2, 3


class UsageError(Exception):
    pass


# ---------------------------------------------------------------------------
# Input loading
# ---------------------------------------------------------------------------


class Inputs:
    """Files read by one command, remembered for the run manifest."""

    def __init__(self):
        self.files: list[tuple[str, str]] = []

    def read(self, path: Path) -> str:
        try:
            data = path.read_bytes()
        except OSError as exc:
            raise UsageError(f"cannot read {path}: {exc.strerror}") from None
        self.files.append((str(path), hashlib.sha256(data).hexdigest()))
        try:
            return data.decode("utf-8")
        except UnicodeDecodeError:
            raise UsageError(f"{path} is not valid UTF-8") from None


def _load_model(inputs: Inputs, path: Path) -> Network | SparseDtmc:
    text = inputs.read(path)
    if path.suffix == ".json":
        try:
            return from_json(json.loads(text))
        except (ValueError, KeyError, TypeError) as exc:
            raise UsageError(f"{path}: not a state-space dump ({exc})") from None
    return load_model(text, str(path))


def _config_files(args, props_path: Path | None, imports=()) -> list[Path]:
    if args.config_file:
        return [Path(p) for p in args.config_file]
    found = []
    if props_path is not None:
        for imp in imports:
            candidate = props_path.parent / f"{imp.split('::')[0]}.pcfg"
            if candidate.exists() and candidate not in found:
                found.append(candidate)
    model = Path(args.model)
    fallback = model.with_suffix(".pcfg")
    if not found and fallback.exists():
        found.append(fallback)
    return found


def _load_configs(inputs: Inputs, paths: list[Path]) -> dict[str, ScenarioConfig]:
    configs: dict[str, ScenarioConfig] = {}
    for path in paths:
        for cfg in parse_config(inputs.read(path), str(path)):
            configs.setdefault(cfg.name, cfg)
    return configs


def _resolve(configs: dict[str, ScenarioConfig], name: str | None) -> ScenarioConfig:
    if name is None:
        raise UsageError("no configuration given (use --config)")
    try:
        return configs[name]
    except KeyError:
        known = ", ".join(sorted(configs)) or "none loaded"
        raise UsageError(f"configuration '{name}' not found (known: {known})") from None


def _build(model, cfg: ScenarioConfig | None, state_cap: int) -> SparseDtmc:
    if isinstance(model, SparseDtmc):
        return model
    return compose(bind_constants(model, cfg), state_cap=state_cap)


def _parse_t_range(text: str) -> list[int]:
    try:
        lo, hi = text.split("..")
        lo, hi = int(lo), int(hi)
    except ValueError:
        raise UsageError(f"--t-range expects A..B, got {text!r}") from None
    if lo > hi or lo < 0:
        raise UsageError(f"empty or negative tick range {text!r}")
    return list(range(lo, hi + 1))


def _tick_values(args, horizon: int, default: list[int]) -> list[int]:
    if getattr(args, "t", None) is not None:
        ts = [args.t]
    elif getattr(args, "t_range", None):
        ts = _parse_t_range(args.t_range)
    else:
        ts = default
    bad = [t for t in ts if not 0 <= t <= horizon]
    if bad:
        raise UsageError(f"tick {bad[0]} is outside the horizon 0..{horizon}")
    return ts


def _load_props(inputs: Inputs, args):
    if not args.props:
        raise UsageError("--props is required")
    path = Path(args.props)
    return path, parse_properties(inputs.read(path), str(path))


def _select_query(props, name: str | None, kind: str | None = "probability") -> Query:
    if name:
        try:
            return props.query(name)
        except KeyError:
            raise UsageError(f"property '{name}' not found") from None
    for q in props.queries:
        if kind is None or q.kind == kind:
            return q
    raise UsageError(f"no {kind} property in the property file")


# ---------------------------------------------------------------------------
# Output
# ---------------------------------------------------------------------------


def _manifest(command: str, inputs: Inputs, config=None, seed=None) -> dict:
    return {
        "command": command,
        "inputs": [{"path": p, "sha256": h} for p, h in inputs.files],
        "config": config,
        "seed": seed,
        "toolVersion": __version__,
        "timestamp": time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime()),
    }


def _emit(args, payload: str, manifest: dict) -> None:
    if args.out:
        out = Path(args.out)
        out.write_text(payload, encoding="utf-8")
        Path(str(out) + ".manifest.json").write_text(json.dumps(manifest, indent=2) + "\n",
                                                     encoding="utf-8")
    else:
        sys.stdout.write(payload)
        sys.stdout.flush()
        sys.stderr.write("manifest: " + json.dumps(manifest, sort_keys=True) + "\n")


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------


def cmd_check(args) -> int:
    inputs = Inputs()
    model = _load_model(inputs, Path(args.model))
    props_path, props = _load_props(inputs, args)
    configs = {}
    if not isinstance(model, SparseDtmc):
        configs = _load_configs(inputs, _config_files(args, props_path, props.imports))
    if args.property:
        queries = [_select_query(props, args.property)]
    else:
        queries = list(props.queries)

    chains: dict[str | None, SparseDtmc] = {}
    results = []
    violated = False
    for q in queries:
        cfg_name = args.config or q.config
        if cfg_name not in chains:
            cfg = None if isinstance(model, SparseDtmc) else _resolve(configs, cfg_name)
            chains[cfg_name] = _build(model, cfg, args.state_cap)
        dtmc = chains[cfg_name]
        ts = None
        if q.kind == "probability" and q.tick_mode is not None:
            if args.mode:
                q = q.with_mode(args.mode)
            default = [q.tick_value] if q.tick_value is not None else \
                list(range(0, dtmc.horizon + 1))
            ts = _tick_values(args, dtmc.horizon, default)
        result = eval_query(dtmc, q, ts)
        doc = result.to_json()
        doc["config"] = cfg_name
        if q.kind == "probability" and q.tick_mode is not None:
            doc["mode"] = q.tick_mode
        results.append(doc)
        if result.deadlock_free is False:
            violated = True
    payload = json.dumps({"results": results}, indent=2) + "\n"
    _emit(args, payload, _manifest("check", inputs, args.config))
    return EXIT_DEADLOCK if violated else EXIT_OK


def _fmt(x: float) -> str:
    return repr(float(x))


def cmd_sweep(args) -> int:
    inputs = Inputs()
    model = _load_model(inputs, Path(args.model))
    if isinstance(model, SparseDtmc):
        raise UsageError("sweep needs a model file, not a state-space dump")
    props_path, props = _load_props(inputs, args)
    configs = _load_configs(inputs, _config_files(args, props_path, props.imports))
    q = _select_query(props, args.property)
    if q.kind != "probability":
        raise UsageError(f"property '{q.id}' is not a probability query")
    mode = args.mode or q.tick_mode or "exact"
    q = q.with_mode(mode)

    patterns = [p.strip() for p in args.configs.split(",") if p.strip()]
    selected = [c for name, c in sorted(configs.items())
                if any(fnmatch.fnmatchcase(name, p) for p in patterns)]
    if not selected:
        raise UsageError(f"no configuration matches {args.configs!r}")

    plans = []
    for cfg in selected:
        concrete = bind_constants(model, cfg)
        horizon = concrete.horizon
        ts = _tick_values(args, horizon, list(range(1, horizon + 1)))
        plans.append((cfg, concrete, ts))

    def run(plan):
        cfg, concrete, ts = plan
        dtmc = compose(concrete, state_cap=args.state_cap)
        return cfg, eval_query(dtmc, q, ts, threads=1)

    threads = default_threads()
    if threads > 1 and len(plans) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            outcomes = list(pool.map(run, plans))
    else:
        outcomes = [run(p) for p in plans]

    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["scenario", "awareness", "ods", "t", "probability", "mode"])
    rows = []
    for cfg, result in outcomes:
        level, profile = classify_config(cfg)
        for t, p in result.points:
            rows.append((cfg.name, level or "", profile or "", t, p))
    rows.sort(key=lambda r: (r[0], r[3]))
    for name, level, profile, t, p in rows:
        writer.writerow([name, level, profile, t, _fmt(p), mode])

    if args.rrf_baseline:
        buf.write("\n")
        _write_rrf(buf, args.rrf_baseline, outcomes)

    _emit(args, buf.getvalue(), _manifest("sweep", inputs, args.configs))
    return EXIT_OK


def _write_rrf(buf, baseline: str, outcomes) -> None:
    """Second CSV block: risk reduction of each scenario against a baseline."""
    info = {}
    for cfg, result in outcomes:
        level, profile = classify_config(cfg)
        t, p = result.points[-1]
        info[cfg.name] = (level, profile, t, p)
    pairs = []
    if baseline in info:
        pairs = [(baseline, other) for other in sorted(info) if other != baseline]
    elif baseline in {p.name for p in ODS_PROFILES}:
        for base, (level, profile, _, _) in sorted(info.items()):
            if profile == baseline and level is not None:
                pairs += [(base, other) for other, (lv, pr, _, _) in sorted(info.items())
                          if lv == level and pr not in (None, baseline)]
    elif baseline in {lv.name for lv in AWARENESS_LEVELS}:
        for base, (level, profile, _, _) in sorted(info.items()):
            if level == baseline and profile is not None:
                pairs += [(base, other) for other, (lv, pr, _, _) in sorted(info.items())
                          if pr == profile and lv not in (None, baseline)]
    else:
        raise UsageError(f"--rrf-baseline {baseline!r} names no scenario, ODS profile "
                         "or awareness level")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["baseline", "mitigated", "t", "p_baseline", "p_mitigated", "rrf", "sil"])
    for base, other in pairs:
        _, _, t, pb = info[base]
        _, _, _, pm = info[other]
        if pb <= 0:
            writer.writerow([base, other, t, _fmt(pb), _fmt(pm), "", "none"])
            continue
        red = risk_reduction_and_sil(pb, pm)
        writer.writerow([base, other, t, _fmt(pb), _fmt(pm), _fmt(red.rrf), red.band])


def cmd_simulate(args) -> int:
    inputs = Inputs()
    model = _load_model(inputs, Path(args.model))
    if isinstance(model, SparseDtmc):
        raise UsageError("simulate needs a model file, not a state-space dump")
    if args.samples < 1:
        raise UsageError("--samples must be at least 1")
    props_path, props = _load_props(inputs, args)
    configs = _load_configs(inputs, _config_files(args, props_path, props.imports))
    q = _select_query(props, args.property, kind=None if args.property else "probability")
    if q.kind != "probability":
        raise UsageError(f"property '{q.id}' is a deadlock assertion; it cannot be sampled")
    if args.mode and q.tick_mode is not None:
        q = q.with_mode(args.mode)
    cfg = _resolve(configs, args.config or q.config)
    concrete = bind_constants(model, cfg)
    ts = None
    if q.tick_mode is not None:
        default = [q.tick_value] if q.tick_value is not None else [concrete.horizon]
        ts = _tick_values(args, concrete.horizon, default)
    estimates = estimate_points(concrete, q, ts, args.samples, args.seed)
    docs = [e.to_json() for e in estimates]
    payload = json.dumps(docs[0] if len(docs) == 1 else docs, indent=2) + "\n"
    _emit(args, payload, _manifest("simulate", inputs, cfg.name, args.seed))
    return EXIT_OK


def cmd_export(args) -> int:
    inputs = Inputs()
    model = _load_model(inputs, Path(args.model))
    cfg = None
    if not isinstance(model, SparseDtmc):
        props_path = Path(args.props) if args.props else None
        imports = ()
        if props_path is not None:
            imports = parse_properties(inputs.read(props_path), str(props_path)).imports
        configs = _load_configs(inputs, _config_files(args, props_path, imports))
        cfg = _resolve(configs, args.config)
    dtmc = _build(model, cfg, args.state_cap)
    if args.format == "dot":
        payload = to_dot(dtmc)
    elif args.format == "json":
        payload = dump_json(dtmc)
    else:
        payload = to_prism(dtmc)
    _emit(args, payload, _manifest("export", inputs, cfg.name if cfg else None))
    return EXIT_OK


def cmd_scenarios(args) -> int:
    horizon = args.horizon
    payload = "\n".join(format_config(c) for c in scenario_table(horizon))
    inputs = Inputs()
    _emit(args, payload, _manifest("scenarios", inputs))
    return EXIT_OK


# ---------------------------------------------------------------------------
# Entry point
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="tickmc", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"tickmc {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, props=True):
        p.add_argument("model", help="model file (.psm) or state-space dump (.json)")
        if props:
            p.add_argument("--props", help="property file (.pprop)")
        p.add_argument("--config-file", action="append",
                       help="config file (.pcfg); repeatable. Default: the property file's "
                            "imports, then <model>.pcfg")
        p.add_argument("--out", help="write the result here instead of stdout")
        p.add_argument("--state-cap", type=int, default=DEFAULT_STATE_CAP)

    def ticks(p):
        g = p.add_mutually_exclusive_group()
        g.add_argument("--t", type=int)
        g.add_argument("--t-range", help="inclusive tick range A..B")
        p.add_argument("--mode", choices=("exact", "cumulative"))

    p = sub.add_parser("check", help="evaluate every property of a property file")
    common(p)
    ticks(p)
    p.add_argument("--config", help="override the configuration named by the properties")
    p.add_argument("--property", help="evaluate only this property")
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("sweep", help="probability versus t for several configurations (CSV)")
    common(p)
    ticks(p)
    p.add_argument("--configs", default="*",
                   help="comma-separated configuration names or glob patterns")
    p.add_argument("--property", help="probability property to sweep (default: first)")
    p.add_argument("--rrf-baseline",
                   help="scenario, ODS profile or awareness level used as the RRF baseline")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("simulate", help="Monte Carlo estimate of a probability property")
    common(p)
    ticks(p)
    p.add_argument("--config")
    p.add_argument("--property")
    p.add_argument("--samples", type=int, default=100_000)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("export", help="write the composed chain as DOT, JSON or PRISM")
    common(p)
    p.add_argument("--config")
    p.add_argument("--format", choices=("dot", "json", "prism"), default="dot")
    p.set_defaults(func=cmd_export)

    p = sub.add_parser("scenarios", help="print the nine bundled awareness x ODS configs")
    p.add_argument("--horizon", type=int, default=30)
    p.add_argument("--out")
    p.set_defaults(func=cmd_scenarios)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ParseError as exc:
        for d in exc.diagnostics:
            print(d, file=sys.stderr)
        return EXIT_INPUT
    except (UsageError, ModelError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except AnalysisError as exc:
        print(f"analysis error: {exc}", file=sys.stderr)
        return EXIT_ANALYSIS


if __name__ == "__main__":
    sys.exit(main())
