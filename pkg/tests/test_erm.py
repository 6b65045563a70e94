import numpy as np
import pytest

from indirect_erm import (
    ConfigurationError,
    DeconvolutionBackend,
    HypothesisClass,
    RateConfig,
    SpectralOperator,
    SvdBackend,
    ThresholdClassifier,
    build_lattice,
    dirac_noise,
    laplace_noise,
    make_margin_scenario,
    minimize,
    select_bandwidth,
    select_cutoff,
    threshold_grid,
)
from indirect_erm.hypotheses import snap_to_cell_midpoint
from indirect_erm.noisy_risk import ModifiedLossTable, empirical_risk, modified_loss_deconv
from indirect_erm.simulation import generate_sample

from oracles import naive_minimize_index


# ---------------------------------------------------------------------------
# smoothing-parameter rules
# ---------------------------------------------------------------------------

def cfg(**kw):
    base = dict(kappa=2.0, rho=0.5, gamma=1.0, beta_bar=1.0, dim=1,
                bias_variant="general")
    base.update(kw)
    return RateConfig(**base)


def test_bandwidth_at_n_one():
    assert select_bandwidth(cfg(), 1) == (1.0,)


def test_bandwidth_reference_value():
    # exponent 3/13 at kappa=2, rho=1/2, gamma=1, beta_bar=1
    lam = select_bandwidth(cfg(), 1024)[0]
    assert abs(lam - 1024.0 ** (-3.0 / 13.0)) < 1e-12
    assert abs(lam - 0.201983) < 1e-5


def test_bandwidth_direct_case_exponent():
    # beta_bar = 0 reduces to the direct-case exponent 3/7
    lam = select_bandwidth(cfg(beta_bar=0.0), 128)[0]
    assert abs(lam - 128.0 ** (-3.0 / 7.0)) < 1e-12


def test_bandwidth_monotone_in_n():
    values = [select_bandwidth(cfg(), n)[0] for n in (2, 8, 64, 512, 4096)]
    assert all(b <= a for a, b in zip(values, values[1:]))


def test_bandwidth_squared_loss_variant_matches_margin_display():
    # with the sharper bias regime the tuned bandwidth reproduces the
    # hard-loss excess-risk exponent
    from indirect_erm.diagnostics import hard_loss_exponent

    c = cfg(bias_variant="squared_loss", gamma=2.0, beta_bar=2.0)
    lam = select_bandwidth(c, 1000)[0]
    e = -np.log(lam) / np.log(1000.0)
    bias_rate = e * c.kappa * c.gamma / (c.kappa - 1.0)
    assert abs(bias_rate - hard_loss_exponent(1.0, 2.0, 1, 2.0)) < 1e-12


def test_cutoff_rules():
    assert select_cutoff(cfg(), 1) == 1
    assert select_cutoff(cfg(), 1024) == 5  # 1024^(3/13) = 4.95 -> 5
    values = [select_cutoff(cfg(), n) for n in (2, 16, 256, 4096, 65536)]
    assert all(b >= a for a, b in zip(values, values[1:]))


def test_rate_config_validation():
    with pytest.raises(ConfigurationError):
        RateConfig(kappa=1.0, rho=0.5, gamma=1.0)
    with pytest.raises(ConfigurationError):
        RateConfig(kappa=2.0, rho=1.0, gamma=1.0)
    with pytest.raises(ConfigurationError):
        RateConfig(kappa=2.0, rho=0.5, gamma=1.0, bias_variant="cubic")


# ---------------------------------------------------------------------------
# exhaustive minimization
# ---------------------------------------------------------------------------

def test_minimize_singleton(grid, hard_loss):
    sc = make_margin_scenario(1, laplace_noise(2.0), grid=grid)
    lattice = build_lattice(grid, laplace_noise(2.0), 0.2)
    lone = HypothesisClass((ThresholdClassifier(snap_to_cell_midpoint(0.4, grid)),))
    sample = generate_sample(sc, 50, np.random.default_rng(0))
    backend = DeconvolutionBackend(lattice=lattice, loss=hard_loss)
    fit = minimize(lone, sample, backend)
    assert fit.index == 0
    table = modified_loss_deconv(lone[0], hard_loss, lattice)
    assert abs(fit.empirical_risk - empirical_risk(table, sample)) < 1e-12


def test_strategies_agree(grid, hard_loss):
    sc = make_margin_scenario(1, laplace_noise(2.0), grid=grid)
    lattice = build_lattice(grid, laplace_noise(2.0), 0.25)
    hclass = threshold_grid(21, grid)
    backend = DeconvolutionBackend(lattice=lattice, loss=hard_loss)
    rng = np.random.default_rng(5)
    for _ in range(5):
        sample = generate_sample(sc, 120, rng)
        a = minimize(hclass, sample, backend, strategy="tables")
        b = minimize(hclass, sample, backend, strategy="plugin")
        assert a.index == b.index
        assert abs(a.empirical_risk - b.empirical_risk) < 1e-12


def test_tables_minimize_matches_naive_oracle(grid, hard_loss):
    # two-path equivalence on random small instances (exact index match)
    sc = make_margin_scenario(1, laplace_noise(2.0), grid=grid)
    lattice = build_lattice(grid, laplace_noise(2.0), 0.2)
    backend = DeconvolutionBackend(lattice=lattice, loss=hard_loss)
    rng = np.random.default_rng(9)
    for _ in range(5):
        sample = generate_sample(sc, 50, rng)
        ts = np.sort(rng.choice(np.arange(1, 100), size=11, replace=False)) / 100.0
        hclass = HypothesisClass(tuple(
            ThresholdClassifier(snap_to_cell_midpoint(t, grid)) for t in ts))
        fit = minimize(hclass, sample, backend, strategy="tables")
        assert fit.index == naive_minimize_index(hclass, hard_loss, lattice, sample)


def test_argmin_invariant_under_constant_shift(grid, hard_loss):
    sc = make_margin_scenario(1, laplace_noise(2.0), grid=grid)
    lattice = build_lattice(grid, laplace_noise(2.0), 0.2)
    hclass = threshold_grid(11, grid)
    sample = generate_sample(sc, 80, np.random.default_rng(3))
    risks, shifted = [], []
    for clf in hclass:
        table = modified_loss_deconv(clf, hard_loss, lattice)
        risks.append(empirical_risk(table, sample))
        bumped = ModifiedLossTable(
            z_nodes=table.z_nodes,
            values={k: v + 0.37 for k, v in table.values.items()},
            backend=table.backend, smoothing=table.smoothing)
        shifted.append(empirical_risk(bumped, sample))
    assert int(np.argmin(risks)) == int(np.argmin(shifted))


def test_minimize_svd_backend(grid, hard_loss):
    op = SpectralOperator(decay=1.0, k_max=64)
    sc = make_margin_scenario(1, op, grid=grid)
    hclass = threshold_grid(21, grid)
    sample = generate_sample(sc, 400, np.random.default_rng(12))
    backend = SvdBackend(operator=op, cutoff=8, grid=grid, loss=hard_loss)
    fit = minimize(hclass, sample, backend)
    assert fit.backend == "svd"
    assert 0 <= fit.index < len(hclass)
    assert abs(fit.classifier.threshold - 0.5) < 0.25


def test_dirac_consistency_many_replications(grid, hard_loss):
    # near-threshold recovery in at least 90% of seeded replications
    sc = make_margin_scenario(1, dirac_noise(), grid=grid)
    h = grid.spacing[0]
    lattice = build_lattice(grid, dirac_noise(), 8.0 * h)
    hclass = threshold_grid(101, grid)
    backend = DeconvolutionBackend(lattice=lattice, loss=hard_loss)
    hits = 0
    for rep in range(100):
        sample = generate_sample(sc, 4096, np.random.default_rng(1000 + rep))
        fit = minimize(hclass, sample, backend, strategy="plugin")
        hits += abs(fit.classifier.threshold - 0.5) <= 0.1
    assert hits >= 90


def test_oracle_empirical_risk_converges(grid, hard_loss):
    # at the oracle threshold the empirical risk approaches 1/4 like 1/sqrt(n)
    sc = make_margin_scenario(1, dirac_noise(), grid=grid)
    h = grid.spacing[0]
    lattice = build_lattice(grid, dirac_noise(), 4.0 * h)
    star = ThresholdClassifier(snap_to_cell_midpoint(0.5, grid))
    table = modified_loss_deconv(star, hard_loss, lattice)
    rng = np.random.default_rng(6)
    for n in (256, 4096):
        values = [empirical_risk(table, generate_sample(sc, n, rng))
                  for _ in range(60)]
        se = np.std(values, ddof=1) / np.sqrt(len(values))
        assert abs(np.mean(values) - 0.25) < 3.0 * se + 0.01


def test_fit_result_serialization(grid, hard_loss):
    sc = make_margin_scenario(1, laplace_noise(2.0), grid=grid)
    lattice = build_lattice(grid, laplace_noise(2.0), 0.3)
    hclass = threshold_grid(5, grid)
    sample = generate_sample(sc, 30, np.random.default_rng(0))
    fit = minimize(hclass, sample, DeconvolutionBackend(lattice=lattice, loss=hard_loss))
    doc = fit.to_json()
    assert doc["classifier"]["kind"] == "threshold"
    assert doc["backend"] == "deconvolution"
    assert isinstance(fit.dumps(), str)
