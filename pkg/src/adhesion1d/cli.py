"""Command line entry point.

    adhesion1d run CONFIG.toml [--output DIR]
    adhesion1d preset NAME [--output DIR]
    adhesion1d preset --list
    adhesion1d suite {invariants,convergence,oracle,figures,all} [--json FILE]
    adhesion1d sweep SWEEP.toml [--workers N]

Output goes under $ADHESION1D_OUTPUT (default ./adhesion1d-output) unless
--output is given. Exit codes: 0 ok, 1 experiment or check failure, 2 bad
configuration.
"""

from __future__ import annotations

import argparse
import copy
import itertools
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from .config import ConfigError, load_config_dict, parse_config, read_toml

log = logging.getLogger("adhesion1d")

EXIT_OK, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2
OUTPUT_ENV = "ADHESION1D_OUTPUT"


def output_root() -> Path:
    return Path(os.environ.get(OUTPUT_ENV, "adhesion1d-output"))


def _resolve(cfg, explicit: str | None) -> Path:
    if explicit:
        return Path(explicit)
    if cfg.output:
        p = Path(cfg.output)
        return p if p.is_absolute() else output_root() / p
    return output_root() / cfg.name


def _execute(cfg, outdir) -> int:
    from .experiment import run_experiment

    try:
        bundle = run_experiment(cfg, outdir)
    except Exception as exc:
        log.error("%s failed: %s: %s", cfg.name, type(exc).__name__, exc)
        return EXIT_FAIL
    log.info("%s: wrote %d files to %s", cfg.name, len(bundle.files), bundle.directory)
    return EXIT_OK


def cmd_run(args) -> int:
    try:
        cfg = parse_config(args.config)
    except ConfigError as exc:
        log.error("config error: %s", exc)
        return EXIT_CONFIG
    return _execute(cfg, _resolve(cfg, args.output))


def cmd_preset(args) -> int:
    from .presets import PRESETS

    if args.list or not args.name:
        for name, cfg in PRESETS.items():
            print(f"{name:30s} {cfg.spec.kind.value:13s} K={cfg.spec.K:g} w={cfg.spec.w.value} w_hat={cfg.spec.w_hat.value} init={cfg.initial.kind}")
        return EXIT_OK
    if args.name not in PRESETS:
        log.error("unknown preset %r", args.name)
        return EXIT_CONFIG
    cfg = PRESETS[args.name]
    return _execute(cfg, _resolve(cfg, args.output))


def cmd_suite(args) -> int:
    from .validation import SUITES, report_json, run_suite

    names = list(SUITES) if args.name == "all" else [args.name]
    reports = [run_suite(n, echo=print) for n in names]
    if args.json:
        Path(args.json).write_text(report_json(reports[0] if len(reports) == 1 else {"suites": reports}) + "\n")
    return EXIT_OK if all(r["passed"] for r in reports) else EXIT_FAIL


def _set_path(data: dict, dotted: str, value):
    keys = dotted.split(".")
    node = data
    for k in keys[:-1]:
        node = node.setdefault(k, {})
    node[keys[-1]] = value


def expand_sweep(data: dict, base_name: str):
    """Cartesian product over the ``[sweep]`` table (dotted key -> list of values)."""
    data = copy.deepcopy(data)
    sweep = data.pop("sweep", None)
    if not sweep:
        raise ConfigError("sweep file needs a non-empty [sweep] table", "sweep")
    keys = sorted(sweep)
    for k in keys:
        if not isinstance(sweep[k], list) or not sweep[k]:
            raise ConfigError("must be a non-empty list", f"sweep.{k}")
    name = data.get("name", base_name)
    configs = []
    for combo in itertools.product(*(sweep[k] for k in keys)):
        item = copy.deepcopy(data)
        label = "_".join(f"{k.split('.')[-1]}{v}" for k, v in zip(keys, combo))
        for k, v in zip(keys, combo):
            _set_path(item, k, v)
        item["name"] = f"{name}_{label}"
        item.pop("output", None)
        configs.append(load_config_dict(item, base_name))
    return configs


def _sweep_worker(job):
    cfg, outdir = job
    return cfg.name, _execute(cfg, outdir)


def cmd_sweep(args) -> int:
    try:
        data = read_toml(args.config)
        configs = expand_sweep(data, Path(args.config).stem)
    except ConfigError as exc:
        log.error("config error: %s", exc)
        return EXIT_CONFIG
    root = Path(args.output) if args.output else output_root() / data.get("name", Path(args.config).stem)
    jobs = [(cfg, root / cfg.name) for cfg in configs]
    if args.workers <= 1:
        results = [_sweep_worker(j) for j in jobs]
    else:
        with ProcessPoolExecutor(max_workers=args.workers) as pool:
            results = list(pool.map(_sweep_worker, jobs))
    failed = [name for name, code in results if code != EXIT_OK]
    for name in failed:
        log.error("sweep member %s failed", name)
    return EXIT_FAIL if failed else EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="adhesion1d", description="Nonlocal cell-adhesion simulations (PDE, master equation, particles).")
    p.add_argument("-q", "--quiet", action="store_true", help="only report errors")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="verb", required=True)

    r = sub.add_parser("run", help="run one experiment from a TOML config")
    r.add_argument("config")
    r.add_argument("--output", "-o")

    pr = sub.add_parser("preset", help="run a named figure preset")
    pr.add_argument("name", nargs="?")
    pr.add_argument("--list", action="store_true")
    pr.add_argument("--output", "-o")

    s = sub.add_parser("suite", help="run a validation suite")
    s.add_argument("name", choices=["invariants", "convergence", "oracle", "figures", "all"])
    s.add_argument("--json", help="write the machine-readable report here")

    sw = sub.add_parser("sweep", help="run a parameter sweep in a worker pool")
    sw.add_argument("config")
    sw.add_argument("--workers", "-j", type=int, default=os.cpu_count() or 1)
    sw.add_argument("--output", "-o")

    for sp in (r, pr, s, sw):
        sp.add_argument("-q", "--quiet", action="store_true", default=argparse.SUPPRESS)
        sp.add_argument("-v", "--verbose", action="store_true", default=argparse.SUPPRESS)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    level = logging.ERROR if args.quiet else logging.DEBUG if args.verbose else logging.INFO
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    handlers = {"run": cmd_run, "preset": cmd_preset, "suite": cmd_suite, "sweep": cmd_sweep}
    return handlers[args.verb](args)


if __name__ == "__main__":
    sys.exit(main())
