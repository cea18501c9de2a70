"""Command-line entry point: ``nplink {simulate,index,predict,evaluate,compare}``.

Settings resolve as command-line flag, then ``--config`` JSON file, then the
built-in default.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from .evaluation import METHOD_TITLES, METHODS, EvalTask, evaluate
from .features import DEFAULT_LAMBDA
from .graph import DEFAULT_LAG, DEFAULT_R_MAX, EdgeListError, GraphSequence, dump_edge_list, load_edge_list
from .kernel import DEFAULT_BANDWIDTH, DEFAULT_TOP_K, KernelConfig, NonParametricPredictor
from .lsh import IndexFormatError, LshIndex, LshParams
from .simgen import SimConfig, generate

_SIM = SimConfig()
_LSH = LshParams()
DEFAULTS = {
    "n": _SIM.n, "t": None, "phi": _SIM.phi, "seasons": _SIM.seasons, "features": _SIM.features,
    "features_per_node": _SIM.features_per_node, "eps": _SIM.eps, "seed": 0, "seeds": 1,
    "lag": DEFAULT_LAG, "r_max": DEFAULT_R_MAX, "b": DEFAULT_BANDWIDTH, "topk": DEFAULT_TOP_K,
    "lam": DEFAULT_LAMBDA, "lsh": False, "k_bits": _LSH.k, "tables": _LSH.tables, "b1": _LSH.b1,
    "b2": _LSH.b2, "candidate_factor": _LSH.candidate_factor, "method": ",".join(METHODS),
    "undirected": False, "index": None,
}


class CliError(Exception):
    pass


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", type=Path, help="JSON file of default settings")
    p.add_argument("--seed", type=int)


def _add_input(p: argparse.ArgumentParser, required: bool = True) -> None:
    p.add_argument("--input", type=Path, required=required, help="edge list 't src dst'")
    p.add_argument("--undirected", action="store_const", const=True, help="insert both directions")


def _add_kernel(p: argparse.ArgumentParser) -> None:
    p.add_argument("--lag", type=int)
    p.add_argument("--r-max", dest="r_max", type=int)
    p.add_argument("--b", type=float, help="kernel bandwidth in (0, 1)")
    p.add_argument("--topk", type=int)
    p.add_argument("--lam", type=float, help="cell smoothing decay in (0, 1)")
    p.add_argument("--lsh", action=argparse.BooleanOptionalAction, default=None)
    p.add_argument("--k-bits", dest="k_bits", type=int)
    p.add_argument("--tables", type=int)
    p.add_argument("--b1", type=int)
    p.add_argument("--b2", type=int)
    p.add_argument("--candidate-factor", dest="candidate_factor", type=int)


def _add_sim(p: argparse.ArgumentParser) -> None:
    p.add_argument("--n", type=int)
    p.add_argument("--t", type=int, help="number of timesteps")
    p.add_argument("--phi", type=float)
    p.add_argument("--seasons", type=int)
    p.add_argument("--features", type=int)
    p.add_argument("--features-per-node", dest="features_per_node", type=int)
    p.add_argument("--eps", type=float)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="nplink", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="write a synthetic seasonal graph sequence")
    _add_common(p)
    _add_sim(p)
    p.add_argument("--out", type=Path, help="output edge list (stdout if omitted)")

    p = sub.add_parser("index", help="build and save an LSH index of training datacubes")
    _add_common(p)
    _add_input(p)
    _add_kernel(p)
    p.add_argument("--t", type=int, help="observed prefix length (default: all)")
    p.add_argument("--out", type=Path, required=True)

    p = sub.add_parser("predict", help="probability of i -> j at the step after the observed prefix")
    _add_common(p)
    _add_input(p)
    _add_kernel(p)
    p.add_argument("--t", type=int, help="observed prefix length (default: all)")
    p.add_argument("--i", type=int, required=True, help="source node id as written in the input")
    p.add_argument("--j", type=int, required=True, help="target node id as written in the input")
    p.add_argument("--index", type=Path, help="saved index to use instead of building one")

    p = sub.add_parser("evaluate", help="mean per-node AUC of each method on one test snapshot")
    _add_common(p)
    _add_input(p)
    _add_kernel(p)
    p.add_argument("--t", type=int, help="test timestep (default: last)")
    p.add_argument("--method", help="comma-separated subset of " + ",".join(METHODS))
    p.add_argument("--out", type=Path, help="text report; per-node CSV goes next to it")

    p = sub.add_parser("compare", help="all methods on simulated or given sequences, as a table")
    _add_common(p)
    _add_sim(p)
    _add_kernel(p)
    p.add_argument("--input", type=Path, nargs="*", default=None, help="edge lists (simulate if omitted)")
    p.add_argument("--undirected", action="store_const", const=True)
    p.add_argument("--seeds", type=int, help="simulation seeds averaged per row")
    p.add_argument("--method", help="comma-separated subset of " + ",".join(METHODS))
    return parser


def resolve(args: argparse.Namespace) -> dict:
    """Merge flags over the config file over :data:`DEFAULTS`."""
    settings = dict(DEFAULTS)
    if getattr(args, "config", None) is not None:
        try:
            loaded = json.loads(args.config.read_text())
        except OSError as exc:
            raise CliError(f"cannot read config {args.config}: {exc}") from None
        except json.JSONDecodeError as exc:
            raise CliError(f"invalid config {args.config}: {exc}") from None
        if not isinstance(loaded, dict):
            raise CliError(f"invalid config {args.config}: expected a JSON object")
        unknown = set(loaded) - set(DEFAULTS)
        if unknown:
            raise CliError(f"invalid config {args.config}: unknown keys {sorted(unknown)}")
        settings.update(loaded)
    for key, value in vars(args).items():
        if key in DEFAULTS and value is not None:
            settings[key] = value
    return settings


def kernel_config(s: dict) -> KernelConfig:
    lsh = LshParams(k=s["k_bits"], tables=s["tables"], b1=s["b1"], b2=s["b2"], seed=s["seed"],
                    candidate_factor=s["candidate_factor"])
    return KernelConfig(b=s["b"], top_k=s["topk"], lam=s["lam"], use_lsh=bool(s["lsh"]),
                        lag=s["lag"], r_max=s["r_max"], lsh=lsh)


def sim_config(s: dict, seed: int | None = None) -> SimConfig:
    return SimConfig(n=s["n"], T=s["t"] or 10, phi=s["phi"], seasons=s["seasons"], features=s["features"],
                     features_per_node=s["features_per_node"], eps=s["eps"],
                     seed=s["seed"] if seed is None else seed)


def _methods(s: dict) -> list[str]:
    return [m.strip() for m in str(s["method"]).split(",") if m.strip()]


def _load(path: Path, undirected: bool) -> GraphSequence:
    try:
        with open(path, "rb") as fh:
            return load_edge_list(fh, directed=not undirected)
    except OSError as exc:
        raise CliError(f"cannot read {path}: {exc.strerror}") from None


def _node(seq: GraphSequence, label: int) -> int:
    if seq.labels is None:
        return label
    pos = int(np.searchsorted(seq.labels, label))
    if pos == len(seq.labels) or seq.labels[pos] != label:
        raise CliError(f"node {label} does not occur in the input")
    return pos


def cmd_simulate(s: dict, args, out) -> None:
    seq = generate(sim_config(s))
    if args.out is None:
        dump_edge_list(seq, out)
    else:
        with open(args.out, "w") as fh:
            dump_edge_list(seq, fh)


def cmd_index(s: dict, args, out) -> None:
    seq = _load(args.input, s["undirected"])
    cfg = kernel_config({**s, "lsh": True})
    model = NonParametricPredictor(seq, s["t"], cfg)
    with open(args.out, "wb") as fh:
        model.index.save(fh)
    out.write(f"indexed {len(model.index)} datacubes, {len(model.index.vocab)} cells -> {args.out}\n")


def cmd_predict(s: dict, args, out) -> None:
    seq = _load(args.input, s["undirected"])
    i, j = _node(seq, args.i), _node(seq, args.j)
    if i == j:
        raise CliError("--i and --j must differ")
    cfg = kernel_config(s)
    if s["index"] is None:
        model = NonParametricPredictor(seq, s["t"], cfg)
    else:
        # the index stores references only; rebuild the training cubes it points at
        model = NonParametricPredictor(seq, s["t"], replace(cfg, use_lsh=False))
        with open(s["index"], "rb") as fh:
            model.index = LshIndex.load(fh, model.sources, expect=cfg.lsh)
    out.write(f"{model.predict(i, j):.6f}\n")


def cmd_evaluate(s: dict, args, out) -> None:
    seq = _load(args.input, s["undirected"])
    task = EvalTask(seq, T=s["t"], methods=_methods(s), kernel=kernel_config(s), seed=s["seed"])
    report = evaluate(task)
    text = report.to_text()
    out.write(text)
    if args.out is not None:
        args.out.write_text(text)
        with open(args.out.with_suffix(".csv"), "w") as fh:
            report.write_csv(fh)


def compare_table(rows: list[tuple[str, dict[str, float]]], methods: list[str]) -> str:
    width = max([len(name) for name, _ in rows] + [8])
    lines = [" " * width + "".join(f"{METHOD_TITLES[m]:>8}" for m in methods)]
    for name, means in rows:
        lines.append(f"{name:<{width}}" + "".join(f"{means[m]:>8.3f}" for m in methods))
    return "\n".join(lines) + "\n"


def cmd_compare(s: dict, args, out) -> None:
    methods = _methods(s)
    cfg = kernel_config(s)
    rows = []
    if args.input:
        for path in args.input:
            task = EvalTask(_load(path, s["undirected"]), methods=methods, kernel=cfg, seed=s["seed"])
            rows.append((path.name, evaluate(task).mean_auc))
    else:
        sim = sim_config(s)
        acc = {m: [] for m in methods}
        for k in range(s["seeds"]):
            seq = generate(sim_config(s, seed=sim.seed + k))
            for m, v in evaluate(EvalTask(seq, methods=methods, kernel=cfg, seed=sim.seed + k)).mean_auc.items():
                acc[m].append(v)
        kind = "Stationary" if sim.seasons == 1 else "Seasonal"
        rows.append((f"{kind} (T={sim.T}, phi={sim.phi:g})", {m: float(np.mean(v)) for m, v in acc.items()}))
    out.write(compare_table(rows, methods))


COMMANDS = {"simulate": cmd_simulate, "index": cmd_index, "predict": cmd_predict,
            "evaluate": cmd_evaluate, "compare": cmd_compare}


def main(argv: list[str] | None = None, out=None) -> int:
    out = out or sys.stdout
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        settings = resolve(args)
        unknown = set(_methods(settings)) - set(METHODS)
        if unknown:
            raise CliError(f"unknown methods {sorted(unknown)}; choose from {','.join(METHODS)}")
        COMMANDS[args.command](settings, args, out)
    except (CliError, EdgeListError, IndexFormatError, ValueError, IndexError) as exc:
        print(f"nplink {args.command}: error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
