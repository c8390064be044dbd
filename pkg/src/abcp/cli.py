"""Command-line front end.

Every subcommand writes JSON (one document, or JSON lines for paths) to
stdout or ``--output``. Runs are reproducible: the generator of each
command is derived from ``(--seed, command name)``; ``--seed`` defaults to
the ``ABCP_SEED`` environment variable, then to a fixed constant.

Exit status: 0 on success, 2 for an invalid configuration, 3 when a
``check`` suite fails.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import dataclass, fields
from importlib import resources

from ._random import default_seed, derive_rng
from .ab_kernel import (
    CTChainConfig, StateSpaceTooLarge, ab_chain, ab_matrix, cp_ab_kernel, ct_simulate,
    poisson_simulate)
from .analysis import SUITES, property_report, stationary
from .combinatorics import FragmentationTree, enumerate_partitions, enumerate_trees
from .cp_kernel import cp_matrix
from .mass_frag import DEFAULT_DEPTH, MassFragmentation, mass_chain, mass_ct_simulate
from .paintbox import load_nu, nu_from_dict
from .weighted_trees import RATE_CHOICES, WeightedTree, from_newick, to_newick, weighted_chain

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_SUITE = 3


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    command: str
    n: int | None = None
    k: int = 2
    nu: str = "uniform-half.json"
    seed: int | None = None
    steps: int | None = None
    horizon: float | None = None
    lam: float = 1.0
    theta: float = 1.0
    depth: int = DEFAULT_DEPTH
    output: str | None = None
    format: str = "json"
    level: str = "tree"
    object: str = "trees"
    suite: str | None = None
    init: str | None = None
    rate_from: str = "previous"
    rule: str = "coupled"

    def validate(self) -> None:
        if self.command not in _NEEDS_N_OPTIONAL and (self.n is None or self.n < 1):
            raise ConfigError("--n must be a positive integer")
        if self.k < 1:
            raise ConfigError("--k must be >= 1")
        if self.seed is not None and not 0 <= self.seed < 2**64:
            raise ConfigError("--seed must be an unsigned 64-bit integer")
        if self.command in _TIMED:
            if self.steps is not None:
                raise ConfigError("%s takes --horizon, not --steps" % self.command)
            if self.horizon is None or not self.horizon > 0:
                raise ConfigError("--horizon must be positive")
            if not self.lam > 0:
                raise ConfigError("--lambda must be positive")
        if self.command in ("chain", "weighted-chain"):
            if self.horizon is not None:
                raise ConfigError("%s takes --steps, not --horizon" % self.command)
            if self.steps is None or self.steps < 0:
                raise ConfigError("--steps must be a non-negative integer")
        if self.command == "mass-chain":
            if (self.steps is None) == (self.horizon is None):
                raise ConfigError("mass-chain needs exactly one of --steps and --horizon")
            if self.depth < 1:
                raise ConfigError("--depth must be >= 1")
        if self.command == "weighted-chain" and not self.theta > 0:
            raise ConfigError("--theta must be positive")


_TIMED = ("ct-chain", "poisson-chain")
_NEEDS_N_OPTIONAL = ("mass-chain",)


def _resolve_nu(arg: str):
    if os.path.exists(arg):
        return load_nu(arg)
    name = os.path.basename(arg)
    res = resources.files("abcp") / "configs" / name
    if res.is_file():
        return nu_from_dict(json.loads(res.read_text()))
    raise ConfigError("no mixing-measure file %r (bundled: %s)"
                      % (arg, ", ".join(sorted(bundled_configs()))))


def bundled_configs() -> list:
    return [p.name for p in (resources.files("abcp") / "configs").iterdir()
            if p.name.endswith(".json")]


def caterpillar(n: int) -> FragmentationTree:
    """``[n] > [n-1] > ... > [2]`` plus the singletons."""
    vs = [tuple(range(1, m + 1)) for m in range(2, n + 1)] + [(x,) for x in range(1, n + 1)]
    return FragmentationTree(vs)


def _read_tree(text: str, n: int) -> FragmentationTree:
    if text.startswith("@"):
        with open(text[1:]) as fh:
            text = fh.read()
    text = text.strip()
    if text.startswith("("):
        T = from_newick(text).tree
    else:
        T = FragmentationTree(json.loads(text))
    if T.ground != tuple(range(1, n + 1)):
        raise ConfigError("initial tree must live on 1..%d" % n)
    return T


def _tree_record(T: FragmentationTree) -> list:
    return T.to_list()


class _Out:
    def __init__(self, path):
        self.fh = open(path, "w") if path else sys.stdout

    def line(self, obj) -> None:
        self.fh.write(json.dumps(obj) + "\n")

    def text(self, s: str) -> None:
        self.fh.write(s + "\n")

    def close(self) -> None:
        if self.fh is not sys.stdout:
            self.fh.close()
        else:
            self.fh.flush()


def _build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="abcp", description=__doc__.split("\n")[0])
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, nu=True, seed=False):
        p.add_argument("--config", help="JSON file of option defaults")
        p.add_argument("--n", type=int)
        p.add_argument("--k", type=int, default=2)
        if nu:
            p.add_argument("--nu", default="uniform-half.json",
                           help="mixing-measure JSON file or bundled config name")
        if seed:
            p.add_argument("--seed", type=int)
            p.add_argument("--init", help="initial tree: JSON vertex list, Newick, or @file")
        p.add_argument("--output", "-o")

    p = sub.add_parser("enumerate", help="list partitions or trees")
    common(p, nu=False)
    p.add_argument("--object", choices=("partitions", "trees"), default="trees")

    p = sub.add_parser("kernel", help="exact transition matrix")
    common(p)
    p.add_argument("--level", choices=("partition", "tree"), default="tree")

    p = sub.add_parser("stationary", help="stationary law of the exact matrix")
    common(p)
    p.add_argument("--level", choices=("partition", "tree"), default="tree")

    p = sub.add_parser("chain", help="discrete-time tree chain")
    common(p, seed=True)
    p.add_argument("--steps", type=int)

    for name, hlp in (("ct-chain", "continuous-time chain, exact holding times"),
                      ("poisson-chain", "continuous-time chain, Poisson construction")):
        p = sub.add_parser(name, help=hlp)
        common(p, seed=True)
        p.add_argument("--lambda", dest="lam", type=float, default=1.0)
        p.add_argument("--horizon", type=float)

    p = sub.add_parser("mass-chain", help="mass fragmentation chain")
    common(p, seed=True)
    p.add_argument("--depth", type=int, default=DEFAULT_DEPTH)
    p.add_argument("--steps", type=int)
    p.add_argument("--lambda", dest="lam", type=float, default=1.0)
    p.add_argument("--horizon", type=float)
    p.add_argument("--rule", choices=("coupled", "root"), default="coupled")

    p = sub.add_parser("weighted-chain", help="tree chain with edge lengths")
    common(p, seed=True)
    p.add_argument("--steps", type=int)
    p.add_argument("--theta", type=float, default=1.0)
    p.add_argument("--format", choices=("json", "newick"), default="json")
    p.add_argument("--rate-from", dest="rate_from", choices=RATE_CHOICES, default="previous")

    p = sub.add_parser("check", help="run a property suite; exit 3 on failure")
    common(p)
    p.add_argument("--suite", choices=SUITES, required=True)
    p.add_argument("--format", choices=("json", "text"), default="json")
    return ap


def parse_config(argv=None) -> RunConfig:
    ap = _build_parser()
    ns = ap.parse_args(argv)
    given = vars(ns)
    cfg_file = given.pop("config", None)
    values = {}
    if cfg_file:
        with open(cfg_file) as fh:
            values = json.load(fh)
        if not isinstance(values, dict):
            raise ConfigError("--config must hold a JSON object")
        if "lambda" in values:
            values["lam"] = values.pop("lambda")
        # explicit flags beat the file; argparse defaults do not
        defaults = vars(ap.parse_args([given["command"]] + (
            ["--suite", given["suite"]] if given.get("suite") else [])))
        for key, val in given.items():
            if key not in values or val != defaults.get(key):
                values[key] = val
    else:
        values = given
    names = {f.name for f in fields(RunConfig)}
    unknown = set(values) - names
    if unknown:
        raise ConfigError("unknown config keys: %s" % ", ".join(sorted(unknown)))
    cfg = RunConfig(**values)
    cfg.validate()
    return cfg


def run(cfg: RunConfig) -> int:
    seed = default_seed() if cfg.seed is None else cfg.seed
    rng = derive_rng(seed, cfg.command)
    out = _Out(cfg.output)
    try:
        return _dispatch(cfg, rng, out)
    finally:
        out.close()


def _dispatch(cfg: RunConfig, rng, out: _Out) -> int:
    c = cfg.command
    if c == "enumerate":
        objs = (enumerate_partitions(cfg.n, cfg.k) if cfg.object == "partitions"
                else enumerate_trees(cfg.n, cfg.k))
        out.line([o.to_list() for o in objs])
        return EXIT_OK

    nu = _resolve_nu(cfg.nu)
    if c in ("kernel", "stationary"):
        M = cp_matrix(cfg.n, cfg.k, nu) if cfg.level == "partition" else \
            ab_matrix(cfg.n, cp_ab_kernel(nu, cfg.k))
        if c == "kernel":
            out.line(M.to_dict())
        else:
            rho = stationary(M)
            out.line({"states": [s.to_list() for s in M.states],
                      "probabilities": [float(x) for x in rho]})
        return EXIT_OK

    if c == "check":
        rep = property_report(cfg.suite, cfg.n, cfg.k, nu)
        if cfg.format == "text":
            out.text(rep.to_text())
        else:
            out.line(rep.to_dict())
        return EXIT_OK if rep.passed else EXIT_SUITE

    if c == "mass-chain":
        m0 = MassFragmentation.trivial()
        if cfg.init:
            text = open(cfg.init[1:]).read() if cfg.init.startswith("@") else cfg.init
            m0 = MassFragmentation.from_nested(json.loads(text))
        if cfg.steps is not None:
            for i, m in enumerate(mass_chain(m0, nu, cfg.k, cfg.steps, rng, cfg.depth, cfg.rule)):
                out.line({"step": i, "mass": m.to_nested()})
        else:
            for t, m in mass_ct_simulate(m0, nu, cfg.k, cfg.lam, cfg.horizon, rng,
                                         cfg.depth, cfg.rule):
                out.line({"time": t, "mass": m.to_nested()})
        return EXIT_OK

    T0 = _read_tree(cfg.init, cfg.n) if cfg.init else caterpillar(cfg.n)
    if T0.degree > cfg.k:
        raise ConfigError("initial tree has a vertex with more than k=%d children" % cfg.k)
    if c == "chain":
        for i, T in enumerate(ab_chain(T0, cp_ab_kernel(nu, cfg.k), cfg.steps, rng)):
            out.line({"step": i, "tree": _tree_record(T)})
    elif c == "ct-chain":
        path = ct_simulate(T0, cp_ab_kernel(nu, cfg.k), CTChainConfig(cfg.lam, cfg.horizon), rng)
        for t, T in path:
            out.line({"time": t, "tree": _tree_record(T)})
    elif c == "poisson-chain":
        for t, T in poisson_simulate(T0, nu, cfg.k, cfg.lam, cfg.horizon, rng):
            out.line({"time": t, "tree": _tree_record(T)})
    elif c == "weighted-chain":
        path = weighted_chain(WeightedTree.zero(T0), nu, cfg.k, cfg.theta, cfg.steps, rng,
                              cfg.rate_from)
        for i, W in enumerate(path):
            if cfg.format == "newick":
                out.text(to_newick(W))
            else:
                out.line({"step": i, "tree": W.to_dict()})
    return EXIT_OK


def main(argv=None) -> int:
    try:
        cfg = parse_config(argv)
        return run(cfg)
    except (ConfigError, StateSpaceTooLarge, ValueError, OSError) as e:
        print("abcp: error: %s" % e, file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
