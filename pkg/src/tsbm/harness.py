"""Experiment harness: named trial configurations, seeded parallel trial
execution, divergence/threshold reports, CSV emission, and the built-in
configurations behind ``replicate-figure``.

Every trial derives its own seed from the master seed and trial index, so
parallel and serial execution produce identical aggregates.
"""

import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, asdict, replace

import numpy as np

from ._rng import derive_seed, counter_uniform
from .divergence import BoundInputs, lower_bound_error_rate, upper_bound_error_rate
from .markov import (
    BinaryMarkovChain,
    ThresholdConvention,
    chain_from_stationary,
    h11_sq,
    i_tilde_long,
    i_tilde_short,
    markov_hellinger_sq,
    markov_j_quantity,
    markov_renyi_exact,
    sparse_renyi_approx,
    t_star,
)
from .metrics import accuracy, ham_star
from .recovery import (
    MarkovKernel,
    OnlineLikelihood,
    OnlineLikelihoodLearned,
    enemy_paths,
    mle_brute_force,
    persistent_components,
    refine_recover,
    transition_rate_clustering,
)
from .sbm import balanced_labelling, sample_labelling, sample_markov_snapshots
from .spectral import SpectralConfig, binarize, spectral_cluster

__all__ = [
    "ExperimentConfig",
    "TrialRecord",
    "DivergenceReport",
    "divergence_report",
    "run_trial",
    "run_experiment",
    "records_to_csv",
    "threshold_grid",
    "figure_bundle",
    "parse_config_text",
    "ONLINE_ALGORITHMS",
    "ALGORITHMS",
]

ONLINE_ALGORITHMS = ("online", "online-learn")
ALGORITHMS = ONLINE_ALGORITHMS + (
    "refine",
    "refine-loo",
    "spectral",
    "spectral-union",
    "spectral-aggregate",
    "spectral-squared",
    "rates",
    "friends",
    "enemies",
    "mle",
)

_UNITS = ("absolute", "logn", "inv_n")


@dataclass(frozen=True)
class ExperimentConfig:
    """One experiment: a Markov block model plus an algorithm selection.

    ``mu1``/``nu1`` are interpreted according to ``units``: raw
    probabilities (``absolute``), multiples of ``log(N)/N`` (``logn``), or
    multiples of ``1/N`` (``inv_n``).
    """

    n: int = 500
    k: int = 2
    t: int = 10
    mu1: float = 2.5
    nu1: float = 1.5
    p11: float = 0.7
    q11: float = 0.3
    units: str = "logn"
    algorithm: str = "online"
    init: str = "random"  # spectral | random | truth
    trials: int = 20
    seed: int = 0
    balanced: bool = False
    # online sweeps score against labels frozen at sweep entry by default;
    # in-place sweeps escape the mirror-flip cycles that synchronous updates
    # can enter when one interaction law is deterministic
    synchronous: bool = True
    name: str = ""

    def __post_init__(self):
        if self.trials < 1:
            raise ValueError("need at least one trial")
        if self.units not in _UNITS:
            raise ValueError(f"units must be one of {_UNITS}")
        if self.algorithm not in ALGORITHMS:
            raise ValueError(f"unknown algorithm {self.algorithm!r}")
        if self.init not in ("spectral", "random", "truth"):
            raise ValueError(f"unknown init {self.init!r}")
        # validate densities and chain feasibility before any trial runs
        self.chains()

    def density_scale(self):
        if self.units == "logn":
            return math.log(self.n) / self.n
        if self.units == "inv_n":
            return 1.0 / self.n
        return 1.0

    def chains(self):
        scale = self.density_scale()
        intra = chain_from_stationary(self.mu1 * scale, self.p11)
        inter = chain_from_stationary(self.nu1 * scale, self.q11)
        return intra, inter


@dataclass
class TrialRecord:
    """Per-trial outcome; ``accuracies``/``ham_stars`` have one entry per
    snapshot for online algorithms and a single entry otherwise."""

    trial: int
    seed: int
    algorithm: str
    accuracies: list
    ham_stars: list
    seconds: float
    params: dict = field(default_factory=dict)

    @property
    def final_accuracy(self):
        return self.accuracies[-1]

    @property
    def final_ham_star(self):
        return self.ham_stars[-1]


def _aggregate_matrix(data):
    return data.sum(axis=0).astype(np.float64)


def _squared_adjacency_matrix(data):
    out = np.zeros(data.shape[1:], dtype=np.float64)
    for t in range(data.shape[0]):
        a = data[t].astype(np.float64)
        out += a @ a - np.diag(a.sum(axis=1))
    return out


def run_trial(config, trial):
    """Run one seeded trial of an experiment; returns a TrialRecord."""
    trial_seed = derive_seed(config.seed, trial)
    intra, inter = config.chains()
    if config.balanced:
        truth = balanced_labelling(config.n, config.k)
    else:
        truth = sample_labelling(config.n, config.k, seed=derive_seed(trial_seed, 1))
    array = sample_markov_snapshots(truth, intra, inter, config.t, seed=derive_seed(trial_seed, 2))
    spec_cfg = SpectralConfig(K=config.k, seed=derive_seed(trial_seed, 4))

    t0 = time.perf_counter()
    accuracies, ham_stars = [], []

    def push(labels):
        d, _ = ham_star(labels, truth)
        ham_stars.append(int(d))
        accuracies.append(1.0 - d / config.n)

    alg = config.algorithm
    if alg in ONLINE_ALGORITHMS:
        if config.init == "spectral":
            init = spectral_cluster(binarize(array.data[0]), spec_cfg)
        elif config.init == "truth":
            init = truth.copy()
        else:
            u = counter_uniform(derive_seed(trial_seed, 3), 0, np.arange(config.n))
            init = np.minimum((u * config.k).astype(np.int64), config.k - 1)
        if alg == "online":
            state = OnlineLikelihood(
                array.data[0], init, intra, inter, config.k,
                synchronous=config.synchronous,
            )
        else:
            state = OnlineLikelihoodLearned(
                array.data[0], init, config.k, synchronous=config.synchronous
            )
        state.run(array, record=lambda t, labels: push(labels))
    elif alg in ("refine", "refine-loo"):
        kf, kg = MarkovKernel(intra), MarkovKernel(inter)
        mode = "fast" if alg == "refine" else "loo"
        push(refine_recover(array, kf, kg, config.k, spec_cfg, mode=mode))
    elif alg == "spectral":
        push(spectral_cluster(binarize(array), spec_cfg))
    elif alg == "spectral-union":
        push(spectral_cluster(binarize(array), spec_cfg))
    elif alg == "spectral-aggregate":
        push(spectral_cluster(_aggregate_matrix(array.data), spec_cfg))
    elif alg == "spectral-squared":
        push(spectral_cluster(_squared_adjacency_matrix(array.data), spec_cfg))
    elif alg == "rates":
        labels, _ = transition_rate_clustering(array, intra.transition, inter.transition)
        push(labels)
    elif alg == "friends":
        push(persistent_components(array)[0])
    elif alg == "enemies":
        push(enemy_paths(array)[0])
    elif alg == "mle":
        kf, kg = MarkovKernel(intra), MarkovKernel(inter)
        push(mle_brute_force(array, config.k, kf, kg))
    seconds = time.perf_counter() - t0
    return TrialRecord(
        trial=trial,
        seed=trial_seed,
        algorithm=alg,
        accuracies=accuracies,
        ham_stars=ham_stars,
        seconds=seconds,
        params=asdict(config),
    )


def _trial_job(args):
    config, trial = args
    return run_trial(config, trial)


def run_experiment(config, jobs=1):
    """All trials of an experiment, optionally on a process pool.  Results
    are ordered by trial index regardless of scheduling."""
    tasks = [(config, trial) for trial in range(config.trials)]
    if jobs <= 1:
        records = [run_trial(config, trial) for _, trial in tasks]
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            records = list(pool.map(_trial_job, tasks))
    return sorted(records, key=lambda r: r.trial)


def summarize(records):
    """Mean accuracy and standard error of the mean per snapshot index."""
    acc = np.array([r.accuracies for r in records], dtype=np.float64)
    mean = acc.mean(axis=0)
    sem = acc.std(axis=0, ddof=1) / math.sqrt(acc.shape[0]) if acc.shape[0] > 1 else 0 * mean
    return mean, sem


def records_to_csv(records, config=None, deterministic=False, extra_header=()):
    """Long-format CSV: ``trial,t,algorithm,accuracy,ham_star,seconds``.

    The header echoes the configuration as comment lines, sufficient to
    rerun the experiment.  ``deterministic`` suppresses the timestamp line
    and zeroes the wall-time column so identical configs yield
    byte-identical output.
    """
    lines = []
    if not deterministic:
        lines.append(f"# generated {time.strftime('%Y-%m-%dT%H:%M:%S')}")
    if config is not None:
        for key, value in sorted(asdict(config).items()):
            lines.append(f"# {key} = {value}")
    for item in extra_header:
        lines.append(f"# {item}")
    lines.append("trial,t,algorithm,accuracy,ham_star,seconds")
    for rec in sorted(records, key=lambda r: r.trial):
        n_steps = len(rec.accuracies)
        seconds = 0.0 if deterministic else rec.seconds
        for idx, (acc, hs) in enumerate(zip(rec.accuracies, rec.ham_stars)):
            t = idx + 1 if n_steps > 1 else rec.params.get("t", n_steps)
            lines.append(
                f"{rec.trial},{t},{rec.algorithm},{acc:.6f},{hs},{seconds:.4f}"
            )
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# Divergence / threshold reports
# ---------------------------------------------------------------------------


@dataclass
class DivergenceReport:
    """Divergence and threshold quantities for one parameter set."""

    n: int
    k: int
    t: int
    exact: float
    hellinger_sq: float
    approx: float
    approx_radius: float
    approx_in_regime: bool
    rho: float
    j_quantity: float
    beta_half: float
    i_tilde_short: float
    i_tilde_long: float
    t_star_exact: object
    t_star_itilde: object
    lower_bound_quadratic: float
    lower_bound_linear: float
    upper_bound: float

    def to_dict(self):
        return asdict(self)

    def to_text(self):
        rows = [
            ("nodes N", self.n),
            ("blocks K", self.k),
            ("snapshots T", self.t),
            ("exact divergence (order 1/2)", f"{self.exact:.10g}"),
            ("exact squared Hellinger", f"{self.hellinger_sq:.10g}"),
            ("sparse approximation", f"{self.approx:.10g}"),
            ("approximation radius", f"{self.approx_radius:.4g}"),
            ("sparse regime (rho T <= 0.01)", self.approx_in_regime),
            ("rho", f"{self.rho:.6g}"),
            ("log-ratio second moment J", f"{self.j_quantity:.10g}"),
            ("beta ratio (r = 1/2)", f"{self.beta_half:.6g}"),
            ("threshold constant (short horizon)", f"{self.i_tilde_short:.10g}"),
            ("threshold constant (long horizon)", f"{self.i_tilde_long:.10g}"),
            ("T* (exact convention)", self.t_star_exact),
            ("T* (itilde convention)", self.t_star_itilde),
            ("lower bound (quadratic I21)", f"{self.lower_bound_quadratic:.6g}"),
            ("lower bound (linear I21)", f"{self.lower_bound_linear:.6g}"),
            ("upper bound", f"{self.upper_bound:.6g}"),
        ]
        width = max(len(name) for name, _ in rows)
        return "\n".join(f"{name.ljust(width)}  {value}" for name, value in rows) + "\n"


def divergence_report(intra, inter, n, k, t, t_max=10**6):
    """Assemble the full divergence/threshold report for one chain pair."""
    exact = markov_renyi_exact(0.5, intra, inter, t)
    hel = markov_hellinger_sq(intra, inter, t)
    approx = sparse_renyi_approx(0.5, intra, inter, t)
    j = markov_j_quantity(intra, inter, t)
    # the order-1/2 divergence is already symmetric in its arguments
    d_high = 0.5 * (
        markov_renyi_exact(1.5, intra, inter, t) + markov_renyi_exact(1.5, inter, intra, t)
    )
    beta_half = d_high / exact if exact > 0 else math.inf
    rho = math.log(n) / n
    gamma = 1.0 - math.sqrt(intra.p11 * inter.p11)
    h2 = h11_sq(intra.p11, inter.p11)
    its = i_tilde_short(
        intra.mu1 / rho,
        inter.mu1 / rho,
        intra.p01 / rho,
        inter.p01 / rho,
        h2,
        gamma if gamma > 0 else 1e-300,
        t,
    )
    itl = i_tilde_long(intra.p01 / rho, inter.p01 / rho, h2)
    inputs = BoundInputs(N=n, K=k, I=exact, J=j, eps=0.01, zeta=0.01)
    return DivergenceReport(
        n=n,
        k=k,
        t=t,
        exact=exact,
        hellinger_sq=hel,
        approx=approx.value,
        approx_radius=approx.error_radius,
        approx_in_regime=approx.in_regime,
        rho=approx.rho,
        j_quantity=j,
        beta_half=beta_half,
        i_tilde_short=its,
        i_tilde_long=itl,
        t_star_exact=t_star(intra, inter, n, k, ThresholdConvention.EXACT, t_max),
        t_star_itilde=t_star(intra, inter, n, k, ThresholdConvention.I_TILDE, t_max),
        lower_bound_quadratic=lower_bound_error_rate(inputs, "quadratic"),
        lower_bound_linear=lower_bound_error_rate(inputs, "linear"),
        upper_bound=upper_bound_error_rate(inputs),
    )


def threshold_grid(n, k, mu1_mult, nu1_mult, p11_values, q11_values,
                   convention=ThresholdConvention.EXACT, t_max=10**6):
    """log10(T*) over a grid of persistence parameters; cells where the
    search cap is reached (or the chain pair is infeasible) come out inf."""
    rho = math.log(n) / n
    out = np.full((len(p11_values), len(q11_values)), math.inf)
    for i, p11 in enumerate(p11_values):
        for jdx, q11 in enumerate(q11_values):
            try:
                intra = chain_from_stationary(mu1_mult * rho, p11)
                inter = chain_from_stationary(nu1_mult * rho, q11)
            except ValueError:
                continue
            ts = t_star(intra, inter, n, k, convention, t_max)
            if ts is not None:
                out[i, jdx] = math.log10(ts)
    return out


# ---------------------------------------------------------------------------
# Built-in figure configurations
# ---------------------------------------------------------------------------


def figure_bundle(figure, trials=None, seed=0):
    """Named experiment set reproducing one of the built-in figures.

    Returns ``(kind, payload)`` where ``kind`` is ``"grid"`` for threshold
    maps (payload: list of (name, header, csv-text callables)) or
    ``"experiments"`` (payload: list of ExperimentConfig).
    """
    if figure == 2:
        return "threshold-grid", [
            ("fig2_mu%.2f" % mult, mult) for mult in (1.51, 2.5, 4.0)
        ]
    if figure == 3:
        configs = []
        grid = [round(x, 2) for x in np.linspace(0.1, 0.9, 9)]
        for mult in (1.51, 2.5, 4.0):
            for p11 in grid:
                for q11 in grid:
                    configs.append(
                        ExperimentConfig(
                            n=500, k=2, t=10, mu1=mult, nu1=1.5, p11=p11, q11=q11,
                            units="logn", algorithm="online", init="random",
                            trials=trials or 5, seed=seed,
                            name=f"fig3_mu{mult}_p{p11}_q{q11}",
                        )
                    )
        return "experiments", configs
    if figure == 4:
        configs = []
        for mult in (1.5, 2.5, 4.0):
            for init in ("spectral", "random"):
                configs.append(
                    ExperimentConfig(
                        n=500, k=2, t=30, mu1=mult, nu1=1.5, p11=0.7, q11=0.3,
                        units="logn", algorithm="online", init=init,
                        trials=trials or 50, seed=seed, balanced=True,
                        name=f"fig4_mu{mult}_{init}",
                    )
                )
        return "experiments", configs
    if figure == 5:
        return "experiments", [
            ExperimentConfig(
                n=500, k=2, t=100, mu1=2.5, nu1=1.5, p11=0.6, q11=0.3,
                units="inv_n", algorithm="online", init="random",
                trials=trials or 50, seed=seed, name="fig5_a",
            ),
            ExperimentConfig(
                n=100, k=2, t=1000, mu1=0.15, nu1=0.1, p11=0.4, q11=0.3,
                units="inv_n", algorithm="online", init="random",
                trials=trials or 50, seed=seed, name="fig5_b",
            ),
        ]
    if figure == 6:
        configs = []
        for nu1 in (0.03, 0.035, 0.04):
            for alg in ("online", "online-learn"):
                configs.append(
                    ExperimentConfig(
                        n=1000, k=2, t=30, mu1=0.05, nu1=nu1, p11=0.6, q11=0.3,
                        units="absolute", algorithm=alg, init="spectral",
                        trials=trials or 20, seed=seed,
                        name=f"fig6_nu{nu1}_{alg}",
                    )
                )
        return "experiments", configs
    if figure == 7:
        methods = (
            "online",
            "spectral-union",
            "spectral-aggregate",
            "spectral-squared",
            "friends",
            "enemies",
        )
        configs = []
        for q11 in (0.3, 0.5, 0.7, 0.9):
            for alg in methods:
                configs.append(
                    ExperimentConfig(
                        n=500, k=2, t=30, mu1=0.05, nu1=0.04, p11=1.0, q11=q11,
                        units="absolute", algorithm=alg,
                        init="spectral" if alg == "online" else "random",
                        synchronous=alg != "online",
                        trials=trials or 20, seed=seed,
                        name=f"fig7a_q{q11}_{alg}",
                    )
                )
        for p11 in (0.5, 0.7, 0.9, 0.99, 1.0):
            for alg in methods:
                configs.append(
                    ExperimentConfig(
                        n=500, k=2, t=30, mu1=0.05, nu1=0.04, p11=p11, q11=0.04,
                        units="absolute", algorithm=alg,
                        init="spectral" if alg == "online" else "random",
                        synchronous=alg != "online",
                        trials=trials or 20, seed=seed,
                        name=f"fig7b_p{p11}_{alg}",
                    )
                )
        return "experiments", configs
    raise ValueError(f"unknown figure {figure!r} (supported: 2..7)")


# ---------------------------------------------------------------------------
# Config file parsing: [section] headers and key = value lines
# ---------------------------------------------------------------------------


def _coerce(text):
    lowered = text.lower()
    if lowered in ("true", "false"):
        return lowered == "true"
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        pass
    return text.strip("\"'")


def parse_config_text(text):
    """Parse a nested key-value experiment file into a dict of dicts.

    Keys outside any section land in the "" section.  Values are coerced to
    bool/int/float where possible.
    """
    out = {"": {}}
    section = ""
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            section = line[1:-1].strip()
            out.setdefault(section, {})
            continue
        if "=" not in line:
            raise ValueError(f"line {lineno}: expected key = value, got {raw!r}")
        key, _, value = line.partition("=")
        out[section][key.strip()] = _coerce(value.strip())
    return out


def config_from_dict(values):
    """Build an ExperimentConfig from a flat dict of overrides."""
    allowed = set(ExperimentConfig.__dataclass_fields__)
    unknown = set(values) - allowed
    if unknown:
        raise ValueError(f"unknown config keys: {sorted(unknown)}")
    return ExperimentConfig(**values)
