"""Command line interface.

Subcommands: ``generate``, ``divergence``, ``threshold``, ``recover``,
``experiment``, ``replicate-figure``.  Exit codes: 0 on success, 1 on
runtime failure, 2 on usage errors.
"""

import argparse
import json
import math
import os
import sys

import numpy as np

from . import harness
from ._rng import derive_seed
from .divergence import FiniteDistribution
from .markov import ThresholdConvention, chain_from_stationary, t_star
from .metrics import accuracy
from .recovery import (
    CategoricalKernel,
    MarkovKernel,
    OnlineLikelihood,
    OnlineLikelihoodLearned,
    enemy_paths,
    mle_brute_force,
    persistent_components,
    refine_recover,
    transition_rate_clustering,
)
from .sbm import (
    read_labels,
    read_snapshots,
    sample_labelling,
    balanced_labelling,
    sample_markov_snapshots,
    write_labels,
    write_snapshots,
)
from .spectral import SpectralConfig, binarize, spectral_cluster


def _add_chain_args(p, required=False):
    p.add_argument("--mu1", type=float, required=required, help="intra stationary density")
    p.add_argument("--nu1", type=float, required=required, help="inter stationary density")
    p.add_argument("--p11", type=float, required=required, help="intra persistence")
    p.add_argument("--q11", type=float, required=required, help="inter persistence")
    p.add_argument(
        "--units",
        choices=("absolute", "logn", "inv_n"),
        default="logn",
        help="how mu1/nu1 scale with N (default: multiples of log N / N)",
    )


def _chains(args, n):
    scale = {"logn": math.log(n) / n, "inv_n": 1.0 / n, "absolute": 1.0}[args.units]
    intra = chain_from_stationary(args.mu1 * scale, args.p11)
    inter = chain_from_stationary(args.nu1 * scale, args.q11)
    return intra, inter


def build_parser():
    parser = argparse.ArgumentParser(
        prog="tsbm",
        description="Temporal stochastic block models: generation, divergence "
        "calculus, recovery algorithms, and experiment harness.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="sample a Markov block model to a snapshot file")
    g.add_argument("--n", type=int, required=True)
    g.add_argument("--k", type=int, required=True)
    g.add_argument("--t", type=int, required=True)
    _add_chain_args(g, required=True)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--balanced", action="store_true", help="equal block sizes")
    g.add_argument("--out", required=True, help="snapshot file path")
    g.add_argument("--labels-out", help="labels sidecar path (default: OUT.labels)")

    d = sub.add_parser("divergence", help="divergence and threshold report")
    d.add_argument("--n", type=int, default=500)
    d.add_argument("--k", type=int, default=2)
    d.add_argument("--t", type=int, required=True, help="snapshot horizon")
    _add_chain_args(d, required=True)
    d.add_argument("--t-max", type=int, default=10**6)
    d.add_argument("--json", dest="json_out", help="also write the report as JSON")

    th = sub.add_parser("threshold", help="T* for one configuration or a grid")
    th.add_argument("--n", type=int, default=500)
    th.add_argument("--k", type=int, default=2)
    th.add_argument("--mu1", type=float, required=True)
    th.add_argument("--nu1", type=float, required=True)
    th.add_argument("--p11", type=float)
    th.add_argument("--q11", type=float)
    th.add_argument("--grid-min", type=float, default=0.05)
    th.add_argument("--grid-max", type=float, default=0.95)
    th.add_argument("--grid-steps", type=int, default=19)
    th.add_argument("--convention", choices=("exact", "itilde"), default="exact")
    th.add_argument("--t-max", type=int, default=10**6)
    th.add_argument("--out", help="CSV output path (default: stdout)")

    r = sub.add_parser("recover", help="run a recovery algorithm on a snapshot file")
    r.add_argument("--input", required=True)
    r.add_argument("--algorithm", required=True, choices=harness.ALGORITHMS)
    r.add_argument("--k", type=int, default=2)
    _add_chain_args(r)
    r.add_argument("--f", help="comma-separated intra symbol probabilities")
    r.add_argument("--g", help="comma-separated inter symbol probabilities")
    r.add_argument("--init", choices=("spectral", "random"), default="spectral")
    r.add_argument("--seed", type=int, default=0)
    r.add_argument("--truth", help="labels sidecar with ground truth")
    r.add_argument("--out", help="write the estimated labels here")

    e = sub.add_parser("experiment", help="run seeded trials and emit CSV")
    e.add_argument("--config", help="experiment config file")
    e.add_argument("--n", type=int)
    e.add_argument("--k", type=int)
    e.add_argument("--t", type=int)
    _add_chain_args(e)
    e.add_argument("--algorithm", choices=harness.ALGORITHMS)
    e.add_argument("--init", choices=("spectral", "random", "truth"))
    e.add_argument("--balanced", action="store_true", default=None)
    e.add_argument("--trials", type=int)
    e.add_argument("--seed", type=int)
    e.add_argument("--jobs", type=int, default=1)
    e.add_argument("--deterministic", action="store_true")
    e.add_argument("--out", help="CSV output path (default: stdout)")

    f = sub.add_parser("replicate-figure", help="emit the CSV bundle behind a figure")
    f.add_argument("--figure", type=int, required=True, choices=(2, 3, 4, 5, 6, 7))
    f.add_argument("--out", required=True, help="output directory")
    f.add_argument("--trials", type=int, help="override per-experiment trial count")
    f.add_argument("--seed", type=int, default=0)
    f.add_argument("--jobs", type=int, default=1)
    f.add_argument("--deterministic", action="store_true")

    return parser


def _cmd_generate(args):
    scale = {"logn": math.log(args.n) / args.n, "inv_n": 1.0 / args.n, "absolute": 1.0}[
        args.units
    ]
    intra = chain_from_stationary(args.mu1 * scale, args.p11)
    inter = chain_from_stationary(args.nu1 * scale, args.q11)
    if args.balanced:
        labels = balanced_labelling(args.n, args.k)
    else:
        labels = sample_labelling(args.n, args.k, seed=derive_seed(args.seed, 1))
    array = sample_markov_snapshots(labels, intra, inter, args.t, seed=derive_seed(args.seed, 2))
    write_snapshots(args.out, array, labels=None)
    write_labels(args.labels_out or args.out + ".labels", labels)
    print(f"wrote {args.out} (N={args.n}, T={args.t})")
    return 0


def _cmd_divergence(args):
    intra, inter = _chains(args, args.n)
    report = harness.divergence_report(intra, inter, args.n, args.k, args.t, args.t_max)
    sys.stdout.write(report.to_text())
    if args.json_out:
        with open(args.json_out, "w") as fh:
            json.dump(report.to_dict(), fh, indent=2, default=str)
    return 0


def _cmd_threshold(args):
    conv = ThresholdConvention(args.convention)
    rho = math.log(args.n) / args.n
    if args.p11 is not None and args.q11 is not None:
        intra = chain_from_stationary(args.mu1 * rho, args.p11)
        inter = chain_from_stationary(args.nu1 * rho, args.q11)
        ts = t_star(intra, inter, args.n, args.k, conv, args.t_max)
        print("inf" if ts is None else ts)
        return 0
    values = np.linspace(args.grid_min, args.grid_max, args.grid_steps)
    grid = harness.threshold_grid(
        args.n, args.k, args.mu1, args.nu1, values, values, conv, args.t_max
    )
    lines = ["p11,q11,log10_tstar"]
    for i, p11 in enumerate(values):
        for j, q11 in enumerate(values):
            cell = grid[i, j]
            lines.append(f"{p11:.4f},{q11:.4f},{'inf' if math.isinf(cell) else f'{cell:.4f}'}")
    text = "\n".join(lines) + "\n"
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0


def _parse_dist(text):
    return FiniteDistribution([float(x) for x in text.split(",")])


def _cmd_recover(parser, args):
    array = read_snapshots(args.input)
    needs_markov = args.algorithm in ("online", "rates", "mle", "refine", "refine-loo")
    has_markov = None not in (args.mu1, args.nu1, args.p11, args.q11)
    has_categorical = args.f is not None and args.g is not None
    if needs_markov and not (has_markov or has_categorical):
        parser.error(
            f"algorithm {args.algorithm!r} needs interaction parameters "
            "(--mu1/--nu1/--p11/--q11 or --f/--g)"
        )
    intra = inter = None
    if has_markov:
        intra, inter = _chains(args, array.N)
    spec_cfg = SpectralConfig(K=args.k, seed=derive_seed(args.seed, 4))

    if args.algorithm in ("refine", "refine-loo", "mle"):
        if has_categorical:
            kf, kg = CategoricalKernel(_parse_dist(args.f)), CategoricalKernel(_parse_dist(args.g))
        else:
            kf, kg = MarkovKernel(intra), MarkovKernel(inter)
        if args.algorithm == "mle":
            labels = mle_brute_force(array, args.k, kf, kg)
        else:
            mode = "fast" if args.algorithm == "refine" else "loo"
            labels = refine_recover(array, kf, kg, args.k, spec_cfg, mode=mode)
    elif args.algorithm in ("online", "online-learn"):
        if args.init == "spectral":
            init = spectral_cluster(binarize(array.data[0]), spec_cfg)
        else:
            from ._rng import counter_uniform

            u = counter_uniform(derive_seed(args.seed, 3), 0, np.arange(array.N))
            init = np.minimum((u * args.k).astype(np.int64), args.k - 1)
        if args.algorithm == "online":
            state = OnlineLikelihood(array.data[0], init, intra, inter, args.k)
        else:
            state = OnlineLikelihoodLearned(array.data[0], init, args.k)
        labels = state.run(array)
    elif args.algorithm == "rates":
        labels, k_hat = transition_rate_clustering(array, intra.transition, inter.transition)
        print(f"estimated blocks: {k_hat}")
    elif args.algorithm == "friends":
        labels, k_hat = persistent_components(array)
        print(f"estimated blocks: {k_hat}")
    elif args.algorithm == "enemies":
        labels, k_hat = enemy_paths(array)
        print(f"estimated blocks: {k_hat}")
    elif args.algorithm == "spectral":
        labels = spectral_cluster(binarize(array), spec_cfg)
    else:
        parser.error(f"algorithm {args.algorithm!r} is only available via the harness")

    truth = None
    if args.truth:
        truth = read_labels(args.truth)
    elif array.labels is not None:
        truth = array.labels
    if truth is not None:
        print(f"accuracy {accuracy(truth, labels):.4f}")
    if args.out:
        write_labels(args.out, labels)
    return 0


def _cmd_experiment(args):
    values = {}
    if args.config:
        with open(args.config) as fh:
            parsed = harness.parse_config_text(fh.read())
        for section in parsed.values():
            values.update(section)
    for key in ("n", "k", "t", "mu1", "nu1", "p11", "q11", "algorithm", "init",
                "trials", "seed", "balanced"):
        cli_value = getattr(args, key, None)
        if cli_value is not None:
            values[key] = cli_value
    if args.units != "logn" or "units" not in values:
        values["units"] = args.units
    config = harness.config_from_dict(values)
    records = harness.run_experiment(config, jobs=args.jobs)
    text = harness.records_to_csv(records, config, deterministic=args.deterministic)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0


def _cmd_replicate_figure(args):
    os.makedirs(args.out, exist_ok=True)
    kind, payload = harness.figure_bundle(args.figure, trials=args.trials, seed=args.seed)
    if kind == "threshold-grid":
        values = np.linspace(0.05, 0.95, 19)
        for name, mult in payload:
            grid = harness.threshold_grid(500, 2, mult, 1.5, values, values)
            path = os.path.join(args.out, name + ".csv")
            with open(path, "w") as fh:
                fh.write("p11,q11,log10_tstar\n")
                for i, p11 in enumerate(values):
                    for j, q11 in enumerate(values):
                        cell = grid[i, j]
                        cell_s = "inf" if math.isinf(cell) else f"{cell:.4f}"
                        fh.write(f"{p11:.4f},{q11:.4f},{cell_s}\n")
            print(f"wrote {path}")
        return 0
    for config in payload:
        records = harness.run_experiment(config, jobs=args.jobs)
        path = os.path.join(args.out, config.name + ".csv")
        with open(path, "w") as fh:
            fh.write(
                harness.records_to_csv(records, config, deterministic=args.deterministic)
            )
        print(f"wrote {path}")
    return 0


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "generate":
            return _cmd_generate(args)
        if args.command == "divergence":
            return _cmd_divergence(args)
        if args.command == "threshold":
            return _cmd_threshold(args)
        if args.command == "recover":
            return _cmd_recover(parser, args)
        if args.command == "experiment":
            return _cmd_experiment(args)
        if args.command == "replicate-figure":
            return _cmd_replicate_figure(args)
        parser.error(f"unknown command {args.command!r}")
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
