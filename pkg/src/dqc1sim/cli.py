"""Command-line experiment runner.

    dqc1sim <experiment> [--config FILE] [--n 8] [--m 4,8] [--order 60]
            [--samples 500] [--seed-start 0] [--seed-count 20]
            [--gate-set clifford_t] [--out results/]

Config files are TOML (``key = value``); command-line flags override them.
Exit codes: 0 success, 2 configuration error, 3 budget-exceeded skips in
strict mode.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from pathlib import Path

from . import experiments as ex
from .pauli import dumps as dump_pauli

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

log = logging.getLogger("dqc1sim")

EXIT_OK, EXIT_CONFIG, EXIT_BUDGET = 0, 2, 3


def _int_list(text: str) -> list[int]:
    return [int(v) for v in text.split(",") if v]


def _str_list(text: str) -> list[str]:
    return [v for v in text.split(",") if v]


def _float_list(text: str) -> list[float]:
    return [float(v) for v in text.split(",") if v]


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="dqc1sim", description=__doc__.split("\n\n")[0])
    p.add_argument("experiment", choices=ex.EXPERIMENTS)
    p.add_argument("--config", type=Path, help="TOML file of key = value settings")
    p.add_argument("--n", type=_int_list, help="qubit count(s), comma separated")
    p.add_argument("--m", type=_int_list, help="padding layer count(s)")
    p.add_argument("--order", type=_int_list, help="BCH truncation order(s)")
    p.add_argument("--samples", type=int)
    p.add_argument("--seed-start", type=int)
    p.add_argument("--seed-count", type=int)
    p.add_argument("--gate-set", type=_str_list, help="clifford_t and/or toffoli_h")
    p.add_argument("--counts", type=_int_list, help="n_ccz,n_cz,n_z of the diagonal block")
    p.add_argument("--mode", choices=("series", "exact_single_pauli"))
    p.add_argument("--alpha", type=_float_list)
    p.add_argument("--circuit", help="circuit file to use instead of generated circuits")
    p.add_argument("--workers", type=int)
    p.add_argument("--dump", action="store_true", default=None,
                   help="write circuits and Hamiltonians next to the results")
    p.add_argument("--strict", action="store_true", default=None,
                   help="exit 3 when any run is skipped for exceeding a budget")
    p.add_argument("--out", dest="output_dir")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def load_config(args: argparse.Namespace) -> ex.ExperimentConfig:
    values: dict = {}
    if args.config:
        try:
            with open(args.config, "rb") as fh:
                values.update(tomllib.load(fh))
        except (OSError, tomllib.TOMLDecodeError) as exc:
            raise ex.ConfigError(f"cannot read config {args.config}: {exc}") from None
        values.pop("experiment", None)
    for key in ("n", "m", "order", "samples", "seed_start", "seed_count", "gate_set", "counts",
                "mode", "alpha", "circuit", "workers", "dump", "strict", "output_dir"):
        value = getattr(args, key)
        if value is not None:
            values[key] = value
    return ex.ExperimentConfig.build(args.experiment, values)


def write_csv(path: Path, rows: list[dict], cfg: ex.ExperimentConfig) -> None:
    """RFC-4180 CSV preceded by one ``#`` metadata line."""
    columns: list[str] = []
    for r in rows:
        columns += [k for k in r if k not in columns]
    seeds = cfg.seeds
    with open(path, "w", newline="") as fh:
        fh.write(f"# dqc1sim {cfg.experiment} config_sha256={cfg.digest()} "
                 f"seeds={seeds.start}..{seeds.stop - 1}\r\n")
        writer = csv.DictWriter(fh, fieldnames=columns, lineterminator="\r\n")
        writer.writeheader()
        for r in rows:
            writer.writerow({k: ("" if r.get(k) is None else r.get(k)) for k in columns})


def write_json(path: Path, payload: dict) -> None:
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _dump_artifacts(out: Path, artifacts) -> None:
    target = out / "artifacts"
    target.mkdir(exist_ok=True)
    for circuit, h2 in artifacts:
        stem = h2.provenance.get("circuit") or "circuit"
        (target / f"{stem}.circuit").write_text(circuit.dumps())
        (target / f"{stem}.h2.pauli").write_text(dump_pauli(h2.h))
        write_json(target / f"{stem}.h2.json", h2.sidecar())


def run(cfg: ex.ExperimentConfig) -> int:
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    name = cfg.experiment
    status = EXIT_OK
    if name == "haar_scatter":
        write_csv(out / "haar_scatter.csv", ex.run_haar_scatter(cfg), cfg)
    elif name == "layered_scatter":
        for m, rows in ex.run_layered_scatter(cfg).items():
            write_csv(out / f"layered_scatter_m{m}.csv", rows, cfg)
            log.info("m=%d mean squared deviation %.3g", m, ex.scatter_deviation(rows))
    elif name == "bch_convergence":
        write_csv(out / "bch_convergence.csv", ex.run_bch_convergence(cfg), cfg)
    elif name == "trace_benchmark":
        rows, summary, artifacts = ex.run_trace_benchmark(cfg, keep_artifacts=cfg.dump)
        write_csv(out / "trace_benchmark.csv", rows, cfg)
        write_json(out / "trace_benchmark.json", summary)
        if cfg.dump:
            _dump_artifacts(out, artifacts)
        log.info("within 3 stderr: %s", summary["fraction_within_3se"])
        if summary["skipped"] and cfg.strict:
            status = EXIT_BUDGET
    elif name == "term_scaling":
        write_csv(out / "term_scaling.csv", ex.run_term_scaling(cfg), cfg)
    elif name == "verify":
        report = ex.run_verify(cfg)
        write_json(out / "verify.json", report)
        log.info("all checks pass: %s", report["all_pass"])
    return status


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        cfg = load_config(args)
    except ex.ConfigError as exc:
        print(f"dqc1sim: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())
