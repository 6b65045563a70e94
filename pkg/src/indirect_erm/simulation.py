"""End-to-end Monte-Carlo experiments over growing sample sizes.

A plan fixes a scenario, a hypothesis class, a backend, and a rate
configuration; each trial draws a contaminated sample, fits the smoothed
empirical risk minimizer with the tuned smoothing parameter, and scores
the exact excess risk by quadrature. Means per sample size feed a weighted
log-log slope fit that is compared to the theoretical exponent.
"""

from __future__ import annotations

import csv
import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .diagnostics import fit_rate_slope, hard_loss_exponent, rate_exponent
from .erm import (
    DeconvolutionBackend,
    RateConfig,
    SvdBackend,
    minimize,
    select_bandwidth,
    select_cutoff,
)
from .errors import ConfigurationError, SimulationError
from .hypotheses import HypothesisClass, LossSpec, Scenario, threshold_grid, true_risk
from .kernels import NoiseModel
from .noisy_risk import NoisySample, build_lattice
from .operators import SpectralOperator, apply_operator, contaminate, sample_density

__all__ = [
    "ExperimentPlan",
    "RateReport",
    "generate_sample",
    "run_trial",
    "run_rate_experiment",
    "trial_seed_sequence",
]


def generate_sample(scenario: Scenario, n: int, rng) -> NoisySample:
    """Draw a contaminated labeled sample of size n from the scenario.

    Labels follow the priors. With additive noise, inputs are drawn from
    the conditional densities and contaminated; with a spectral operator,
    observations are drawn directly from the operator image densities.
    """
    if isinstance(rng, (int, np.integer)):
        rng = np.random.default_rng(rng)
    grid = scenario.domain
    y = (rng.random(n) < scenario.priors[1]).astype(int)
    z = np.empty(n)
    contamination = scenario.contamination
    for label in scenario.labels:
        mask = y == label
        count = int(mask.sum())
        if count == 0:
            continue
        if isinstance(contamination, SpectralOperator):
            coeffs = scenario.cosine_coefficients(label, contamination.k_max)
            from .operators import CoefficientVector

            image = apply_operator(CoefficientVector(coeffs), contamination, grid)
            z[mask] = sample_density(image, grid, count, rng)
        else:
            x = sample_density(scenario.density_values(label), grid, count, rng)
            z[mask] = contaminate(x, contamination, rng)
    return NoisySample(z=z, y=y)


@dataclass(frozen=True)
class ExperimentPlan:
    """Definition of one rate experiment."""

    scenario: Scenario
    rate_config: RateConfig
    n_grid: tuple[int, ...]
    replications: int
    base_seed: int = 0
    backend: str = "deconvolution"
    n_thresholds: int = 101
    loss: LossSpec = field(default_factory=LossSpec)
    base_kernel: str = "sinc"
    pad_factor: float = 4.0
    window: tuple[float, float] | None = None
    strategy: str = "plugin"
    theory_mode: str = "hard_loss"

    def __post_init__(self):
        ns = tuple(int(n) for n in self.n_grid)
        object.__setattr__(self, "n_grid", ns)
        if len(ns) < 2 or any(b <= a for a, b in zip(ns, ns[1:])):
            raise ConfigurationError("n_grid must be strictly increasing with >= 2 values")
        if self.replications < 1:
            raise ConfigurationError("need at least one replication")
        if self.backend not in ("deconvolution", "svd", "restricted"):
            raise ConfigurationError(f"unknown backend {self.backend!r}")
        if self.backend == "restricted" and self.window is None:
            raise ConfigurationError("restricted backend needs a window")

    def hypothesis_class(self) -> HypothesisClass:
        return threshold_grid(self.n_thresholds, self.scenario.domain)

    def theory_exponent(self) -> float:
        if self.theory_mode == "hard_loss":
            return hard_loss_exponent(self.scenario.alpha, self.rate_config.gamma,
                                      self.rate_config.dim, self.rate_config.beta_bar)
        return rate_exponent(self.rate_config, self.theory_mode)


def trial_seed_sequence(base_seed: int, n: int, replicate: int) -> np.random.SeedSequence:
    """Deterministic per-trial seed; extending the n-grid keeps old trials."""
    return np.random.SeedSequence(entropy=base_seed, spawn_key=(n, replicate))


@dataclass(frozen=True)
class _PlanContext:
    """Shared per-plan state: class, oracle, per-n smoothing artifacts."""

    hclass: HypothesisClass
    risks: np.ndarray
    star_index: int


def _plan_context(plan: ExperimentPlan) -> _PlanContext:
    hclass = plan.hypothesis_class()
    window = plan.window if plan.backend == "restricted" else None
    risks = np.array([true_risk(c, plan.scenario, plan.loss, window=window)
                      for c in hclass])
    star = int(np.argmin(risks))
    return _PlanContext(hclass=hclass, risks=risks, star_index=star)


def _backend_for(plan: ExperimentPlan, n: int,
                 lattice_cache: dict) -> DeconvolutionBackend | SvdBackend:
    if plan.backend == "svd":
        op = plan.scenario.contamination
        if not isinstance(op, SpectralOperator):
            raise ConfigurationError("svd backend needs a spectral-operator scenario")
        cutoff = min(select_cutoff(plan.rate_config, n), op.k_max)
        return SvdBackend(operator=op, cutoff=cutoff, grid=plan.scenario.domain,
                          loss=plan.loss)
    noise = plan.scenario.contamination
    if not isinstance(noise, NoiseModel):
        raise ConfigurationError("kernel backends need an additive-noise scenario")
    bw = select_bandwidth(plan.rate_config, n)
    key = (n, bw)
    if key not in lattice_cache:
        lattice_cache[key] = build_lattice(plan.scenario.domain, noise, bw,
                                           base_kind=plan.base_kernel,
                                           pad_factor=plan.pad_factor)
    window = plan.window if plan.backend == "restricted" else None
    return DeconvolutionBackend(lattice=lattice_cache[key], loss=plan.loss,
                                window=window)


def run_trial(plan: ExperimentPlan, n: int, seed, _context=None, _backend=None) -> float:
    """One replication: sample, fit, exact excess risk (nonnegative)."""
    ctx = _context or _plan_context(plan)
    backend = _backend or _backend_for(plan, n, {})
    rng = np.random.default_rng(seed)
    sample = generate_sample(plan.scenario, n, rng)
    fit = minimize(ctx.hclass, sample, backend, strategy=plan.strategy)
    return float(ctx.risks[fit.index] - ctx.risks[ctx.star_index])


@dataclass
class RateReport:
    """Per-n excess-risk summaries plus the fitted log-log slope."""

    rows: list                      # (n, mean, se, count)
    slope: float
    slope_half_width: float
    theory_exponent: float

    def to_json(self) -> dict:
        return {
            "rows": [[int(n), m, s, int(c)] for n, m, s, c in self.rows],
            "slope": self.slope,
            "slope_half_width": self.slope_half_width,
            "theory_exponent": self.theory_exponent,
        }

    def summary_json(self) -> dict:
        return {
            "slope": self.slope,
            "slope_half_width": self.slope_half_width,
            "theory_exponent": self.theory_exponent,
            "theory_slope": -self.theory_exponent,
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True)

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["n", "mean_excess", "standard_error", "replications"])
            for n, m, s, c in self.rows:
                writer.writerow([int(n), repr(float(m)), repr(float(s)), int(c)])


def _run_block(args):
    """Worker entry: all replications for one n (kept picklable)."""
    plan, n, reps = args
    ctx = _plan_context(plan)
    backend = _backend_for(plan, n, {})
    out = np.empty(reps)
    for rep in range(reps):
        seed = trial_seed_sequence(plan.base_seed, n, rep)
        out[rep] = run_trial(plan, n, seed, _context=ctx, _backend=backend)
    return n, out


def _iter_blocks(plan: ExperimentPlan, threads: int):
    """Yield (n, excess array) per sample size, in n order."""
    if threads > 1:
        args = [(plan, n, plan.replications) for n in plan.n_grid]
        with ProcessPoolExecutor(max_workers=threads) as pool:
            yield from pool.map(_run_block, args)
        return
    ctx = _plan_context(plan)
    cache: dict = {}
    for n in plan.n_grid:
        backend = _backend_for(plan, n, cache)
        excesses = np.empty(plan.replications)
        for rep in range(plan.replications):
            seed = trial_seed_sequence(plan.base_seed, n, rep)
            excesses[rep] = run_trial(plan, n, seed, _context=ctx, _backend=backend)
        yield n, excesses


def run_rate_experiment(plan: ExperimentPlan, threads: int = 1,
                        progress=None) -> RateReport:
    """All trials of the plan; deterministic for a fixed plan and base seed.

    Trial seeds derive from (base seed, n, replicate), so results do not
    depend on scheduling and extending the n-grid preserves earlier points.
    ``progress``, when given, is called with each completed (n, mean, se,
    count) row in n order, so partial results can be persisted incrementally.
    A failed trial aborts the experiment with the completed rows attached.
    """
    rows = []
    try:
        for n, excesses in _iter_blocks(plan, threads):
            mean = float(excesses.mean())
            se = float(excesses.std(ddof=1) / np.sqrt(len(excesses))) \
                if len(excesses) > 1 else 0.0
            rows.append((n, mean, se, len(excesses)))
            if progress is not None:
                progress(rows[-1])
    except Exception as exc:  # partial-results contract
        if isinstance(exc, SimulationError):
            raise
        raise SimulationError(f"rate experiment aborted: {exc}", partial_rows=rows) from exc
    slope, half = fit_rate_slope([(n, m, s) for n, m, s, _ in rows])
    return RateReport(rows=rows, slope=slope, slope_half_width=half,
                      theory_exponent=plan.theory_exponent())
