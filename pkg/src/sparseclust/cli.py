"""Command-line driver: ``gen``, ``run``, ``eval`` and ``sweep``."""

from __future__ import annotations

import argparse
import itertools
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, replace
from pathlib import Path

import numpy as np

from . import io
from .clustering import cluster_agreement
from .datasets import GENERATORS, Dataset, gen_disj_graph
from .errors import ConfigError, SparseClustError
from .graph import ncut
from .netsim import LEDGER_COLUMNS, PARTITION_STRATEGIES, partition_edges
from .protocols import (
    DEFAULT_BOARD_SAMPLE_C,
    DEFAULT_CHAIN_ROUNDS,
    DEFAULT_EPS,
    DEFAULT_MSG_SAMPLE_C,
    RESULT_COLUMNS,
    run_baseline,
    run_blackboard,
    run_msgpassing,
)
from .sparsify import DEFAULT_OVERSAMPLE_C

PROTOCOLS = ("baseline", "msgpassing", "blackboard")
CONFIG_COLUMNS = ("dataset", "n", "m", "k", "partition", "eps", "sample_c", "chain_rounds", "data_seed")
RUN_COLUMNS = CONFIG_COLUMNS + LEDGER_COLUMNS + RESULT_COLUMNS
DEFAULT_K = {"twomoons": 2, "gauss": 4, "planted": 4}
DEFAULT_N = {"twomoons": 1400, "gauss": 1000, "planted": 200}


@dataclass(frozen=True)
class RunConfig:
    dataset: str = "planted"
    n: int | None = None
    k: int | None = None
    s: int = 15
    protocol: str = "msgpassing"
    eps: float = DEFAULT_EPS
    alpha: float | None = None
    oversample_c: float = DEFAULT_OVERSAMPLE_C
    sample_c: float | None = None  # None picks the protocol's default budget
    chain_rounds: int = DEFAULT_CHAIN_ROUNDS
    partition: str = "random"
    seed: int = 0
    data_seed: int = 0

    def resolved(self) -> "RunConfig":
        n = self.n if self.n is not None else DEFAULT_N.get(self.dataset)
        k = self.k if self.k is not None else DEFAULT_K.get(self.dataset)
        c = self.sample_c
        if c is None and self.alpha is None:
            c = {"msgpassing": DEFAULT_MSG_SAMPLE_C, "blackboard": DEFAULT_BOARD_SAMPLE_C}.get(self.protocol)
        return replace(self, n=n, k=k, sample_c=c)

    def validate(self) -> "RunConfig":
        cfg = self.resolved()
        if cfg.dataset not in GENERATORS:
            raise ConfigError(f"unknown dataset {cfg.dataset!r}; choose from {sorted(GENERATORS)}")
        if cfg.protocol not in PROTOCOLS:
            raise ConfigError(f"unknown protocol {cfg.protocol!r}")
        if cfg.partition not in PARTITION_STRATEGIES:
            raise ConfigError(f"unknown partition strategy {cfg.partition!r}")
        if cfg.s < 1:
            raise ConfigError("--s must be at least 1")
        if cfg.n is None or cfg.n < 2:
            raise ConfigError("--n must be at least 2")
        if cfg.k is None or not 1 <= cfg.k <= cfg.n:
            raise ConfigError("--k must lie in [1, n]")
        if not 0 < cfg.eps <= 1 / 3 + 1e-12:
            raise ConfigError("--eps must lie in (0, 1/3]")
        if cfg.chain_rounds < 1:
            raise ConfigError("--chain-rounds must be at least 1")
        if cfg.sample_c is not None and cfg.sample_c <= 0:
            raise ConfigError("--sample-c must be positive")
        if cfg.alpha is not None and cfg.alpha <= 0:
            raise ConfigError("--alpha must be positive")
        return cfg

    def params(self) -> dict:
        return {k: v for k, v in asdict(self).items()}


def make_dataset(cfg: RunConfig) -> Dataset:
    gen = GENERATORS[cfg.dataset]
    if cfg.dataset == "twomoons":
        return gen(n=cfg.n, seed=cfg.data_seed)
    return gen(n=cfg.n, k=cfg.k, seed=cfg.data_seed)


def execute(cfg: RunConfig, data: Dataset | None = None):
    """Run one configuration; returns ``(row, result)``."""
    cfg = cfg.validate()
    data = data if data is not None else make_dataset(cfg)
    g = data.graph
    shards = partition_edges(g, cfg.s, cfg.partition, seed=[cfg.seed, 7])
    if cfg.protocol == "baseline":
        res = run_baseline(shards, cfg.k, seed=cfg.seed)
    elif cfg.protocol == "msgpassing":
        res = run_msgpassing(shards, cfg.k, eps=cfg.eps, seed=cfg.seed, sample_c=cfg.sample_c,
                             alpha=cfg.alpha, oversample_c=cfg.oversample_c)
    else:
        res = run_blackboard(shards, cfg.k, eps=cfg.eps, chain_rounds=cfg.chain_rounds, alpha=cfg.alpha,
                             seed=cfg.seed, sample_c=cfg.sample_c, oversample_c=cfg.oversample_c)
    row = {
        "dataset": cfg.dataset, "n": g.n, "m": g.m, "k": cfg.k, "partition": cfg.partition,
        "eps": cfg.eps, "sample_c": cfg.sample_c, "chain_rounds": cfg.chain_rounds if cfg.protocol == "blackboard" else None,
        "data_seed": cfg.data_seed,
    }
    row.update(res.row(cfg.seed, truth=data.truth, graph=g))
    return row, res


# ---------------------------------------------------------------------------
# subcommands


def cmd_gen(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    if args.dataset == "disj":
        inst = gen_disj_graph(args.s, args.n or 64, args.regime, args.data_seed)
        io.save_graph(out / "graph.txt", inst.graph)
        np.savetxt(out / "matrix.txt", inst.X, fmt="%d")
        io.save_manifest(out / "manifest.txt", {"dataset": "disj", "s": args.s, "n": inst.n,
                                                 "regime": args.regime, "data_seed": args.data_seed})
        return 0
    cfg = RunConfig(dataset=args.dataset, n=args.n, k=args.k, data_seed=args.data_seed).validate()
    data = make_dataset(cfg)
    io.save_graph(out / "graph.txt", data.graph)
    io.save_partition(out / "truth.csv", data.truth)
    if data.points is not None:
        io.save_points(out / "points.csv", data.points)
    io.save_manifest(out / "manifest.txt", data.params)
    print(f"wrote {args.dataset}: n={data.graph.n} m={data.graph.m} to {out}")
    return 0


def _config_from_args(args, **over) -> RunConfig:
    fields = dict(dataset=args.dataset, n=args.n, k=args.k, s=args.s, protocol=args.protocol, eps=args.eps,
                  alpha=args.alpha, oversample_c=args.oversample_c, sample_c=args.sample_c,
                  chain_rounds=args.chain_rounds, partition=args.partition, seed=args.seed,
                  data_seed=args.data_seed)
    fields.update(over)
    return RunConfig(**fields)


def cmd_run(args) -> int:
    cfg = _config_from_args(args).validate()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    row, res = execute(cfg)
    io.write_rows(out / "results.csv", [row], RUN_COLUMNS)
    io.save_partition(out / "partition.csv", res.labels)
    io.save_manifest(out / "manifest.txt", cfg.params())
    io.write_rows(out / "ledger.csv", [res.ledger.row(cfg.protocol, cfg.seed)], LEDGER_COLUMNS)
    print(",".join(RUN_COLUMNS))
    print(",".join(io.format_cell(row[c]) for c in RUN_COLUMNS))
    return 0


def evaluate(graph_path, partition_path, truth_path=None) -> dict:
    g = io.load_graph(graph_path)
    labels = io.load_partition(partition_path, g.n)
    row = {"n": g.n, "m": g.m, "k": len(np.unique(labels)), "ncut": ncut(g, labels)}
    if truth_path:
        truth = io.load_partition(truth_path, g.n)
        row["agreement"] = cluster_agreement(g, labels, truth).max_ratio
    return row


def cmd_eval(args) -> int:
    row = evaluate(args.graph, args.partition, args.truth)
    cols = list(row)
    print(",".join(cols))
    print(",".join(io.format_cell(row[c]) for c in cols))
    return 0


def _sweep_cell(cfg: RunConfig, cell_dir: str):
    row, res = execute(cfg)
    Path(cell_dir).mkdir(parents=True, exist_ok=True)
    io.write_rows(Path(cell_dir) / "row.csv", [row], RUN_COLUMNS)
    io.save_partition(Path(cell_dir) / "partition.csv", res.labels)
    # the manifest goes last: its presence marks the cell complete
    io.save_manifest(Path(cell_dir) / "manifest.txt", cfg.params())
    return row


def sweep_configs(base: RunConfig, protocols, ss, cs, rounds, seeds):
    for protocol, s, c, r, seed in itertools.product(protocols, ss, cs or [None], rounds or [base.chain_rounds], seeds):
        yield replace(base, protocol=protocol, s=s, sample_c=c, chain_rounds=r, seed=seed).validate()


def worker_cap() -> int:
    raw = os.environ.get("SPARSECLUST_WORKERS", "1")
    try:
        cap = int(raw)
    except ValueError:
        raise ConfigError(f"SPARSECLUST_WORKERS must be an integer, got {raw!r}") from None
    if cap < 1:
        raise ConfigError("SPARSECLUST_WORKERS must be at least 1")
    return cap


def run_sweep(base: RunConfig, protocols, ss, cs, rounds, seeds, out) -> list[dict]:
    out = Path(out)
    cells = out / "cells"
    cells.mkdir(parents=True, exist_ok=True)
    configs = list(dict.fromkeys(sweep_configs(base, protocols, ss, cs, rounds, seeds)))
    todo = []
    for cfg in configs:
        d = cells / io.manifest_hash(cfg.params())
        if not (d / "manifest.txt").exists():
            todo.append((cfg, str(d)))
    cap = worker_cap()
    if cap == 1 or len(todo) <= 1:
        for cfg, d in todo:
            _sweep_cell(cfg, d)
    else:
        with ProcessPoolExecutor(max_workers=min(cap, len(todo))) as pool:
            for fut in [pool.submit(_sweep_cell, cfg, d) for cfg, d in todo]:
                fut.result()
    rows = []
    for cfg in configs:
        rows.extend(io.read_rows(cells / io.manifest_hash(cfg.params()) / "row.csv"))
    io.write_rows(out / "sweep.csv", rows, RUN_COLUMNS)
    return rows


def cmd_sweep(args) -> int:
    base = _config_from_args(args, protocol=args.protocols[0], s=args.s_values[0])
    rows = run_sweep(base, args.protocols, args.s_values, args.sample_c_values, args.chain_rounds_values,
                     args.seeds, args.out)
    print(f"{len(rows)} rows written to {Path(args.out) / 'sweep.csv'}")
    return 0


# ---------------------------------------------------------------------------
# argument parsing


def _add_run_flags(p, sweep=False):
    p.add_argument("--dataset", default="planted", choices=sorted(GENERATORS))
    p.add_argument("--n", type=int, default=None)
    p.add_argument("--k", type=int, default=None)
    p.add_argument("--eps", type=float, default=DEFAULT_EPS)
    p.add_argument("--alpha", type=float, default=None, help="fixed oversampling rate")
    p.add_argument("--oversample-c", type=float, default=DEFAULT_OVERSAMPLE_C)
    p.add_argument("--partition", default="random", choices=PARTITION_STRATEGIES)
    p.add_argument("--data-seed", type=int, default=0)
    p.add_argument("--out", required=True)
    if sweep:
        p.add_argument("--protocol", dest="protocols", nargs="+", default=list(PROTOCOLS), choices=PROTOCOLS)
        p.add_argument("--s", dest="s_values", nargs="+", type=int, default=[15])
        p.add_argument("--sample-c", dest="sample_c_values", nargs="+", type=float, default=None)
        p.add_argument("--chain-rounds", dest="chain_rounds_values", nargs="+", type=int, default=None)
        p.add_argument("--seed", dest="seeds", nargs="+", type=int, default=[0])
        p.set_defaults(sample_c=None, chain_rounds=DEFAULT_CHAIN_ROUNDS, seed=0, s=15, protocol="baseline")
    else:
        p.add_argument("--protocol", default="msgpassing", choices=PROTOCOLS)
        p.add_argument("--s", type=int, default=15)
        p.add_argument("--sample-c", type=float, default=None, help="per-site budget of c*n expected edges")
        p.add_argument("--chain-rounds", type=int, default=DEFAULT_CHAIN_ROUNDS)
        p.add_argument("--seed", type=int, default=0)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sparseclust", description="Distributed spectral clustering simulator")
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="generate a dataset")
    g.add_argument("--dataset", required=True, choices=sorted(GENERATORS) + ["disj"])
    g.add_argument("--n", type=int, default=None)
    g.add_argument("--k", type=int, default=None)
    g.add_argument("--s", type=int, default=16, help="site count for the disj fixture")
    g.add_argument("--regime", default="disjoint", choices=["disjoint", "intersecting"])
    g.add_argument("--data-seed", "--seed", dest="data_seed", type=int, default=0)
    g.add_argument("--out", required=True)
    g.set_defaults(func=cmd_gen)

    r = sub.add_parser("run", help="run one protocol on one dataset")
    _add_run_flags(r)
    r.set_defaults(func=cmd_run)

    e = sub.add_parser("eval", help="score a partition file")
    e.add_argument("--graph", required=True)
    e.add_argument("--partition", required=True)
    e.add_argument("--truth", default=None)
    e.set_defaults(func=cmd_eval)

    w = sub.add_parser("sweep", help="run the cross product of protocols, s, c, chain rounds and seeds")
    _add_run_flags(w, sweep=True)
    w.set_defaults(func=cmd_sweep)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (SparseClustError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
