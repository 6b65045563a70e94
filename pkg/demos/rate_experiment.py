"""Reduced Monte-Carlo rate experiment: excess risk versus sample size.

A scaled-down version of the shipped presets (fewer replications) that
fits the log-log slope of the mean excess risk and compares it with the
theoretical exponent, for clean and for noise-contaminated inputs.
"""

import numpy as np

from indirect_erm import Grid, RateConfig, dirac_noise, laplace_noise, make_margin_scenario
from indirect_erm.simulation import ExperimentPlan, run_rate_experiment


def build_plan(noise, beta_bar, grid, replications=40):
    scenario = make_margin_scenario(1, noise, family="smooth", gamma=2.0,
                                    sharpness=1.3, grid=grid)
    cfg = RateConfig(kappa=2.0, rho=0.5, gamma=2.0, beta_bar=beta_bar,
                     bias_variant="squared_loss")
    return ExperimentPlan(
        scenario=scenario, rate_config=cfg,
        n_grid=(256, 512, 1024, 2048, 4096, 8192, 16384),
        replications=replications, base_seed=11,
        base_kernel="order_m_flat_top",
        theory_mode="hard_loss" if beta_bar > 0 else "direct",
    )


def main():
    grid = Grid(points_per_dim=1024)
    for name, noise, beta_bar in (("clean inputs (dirac)", dirac_noise(), 0.0),
                                  ("Laplace-contaminated", laplace_noise(2.0), 2.0)):
        plan = build_plan(noise, beta_bar, grid)
        report = run_rate_experiment(plan)
        print(f"== {name} ==")
        for n, mean, se, reps in report.rows:
            print(f"  n={n:6d}: mean excess {mean:.5f} +- {se:.5f} ({reps} reps)")
        print(f"  fitted slope {report.slope:+.3f} "
              f"(theory {-report.theory_exponent:+.3f})\n")


if __name__ == "__main__":
    main()
