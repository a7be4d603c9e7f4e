#!/usr/bin/env python3
"""Monte Carlo validation of the closed-form operating points.

Simulates both receivers trial by trial (fresh fading draw each time),
thresholds at the analytic minimum-error settings, and compares the empirical
Wilson intervals against the closed-form values.
"""

import math

from speckleqi import (
    McConfig,
    Receiver,
    SystemParams,
    ci_bayes,
    estimate_bayes_error,
    estimate_operating_point,
    sfg_bayes,
)


def show(label, estimate, target):
    flag = "ok " if estimate.covers(target) else "MISS"
    print(f"   {label:8s} empirical={estimate.value:.6g} "
          f"CI=[{estimate.ci_low:.6g}, {estimate.ci_high:.6g}] "
          f"analytic={target:.6g}  [{flag}]")


def main():
    config = McConfig(trials=100_000, seed=31415)
    for n_s, m in ((1e-4, 10 ** 8.5), (1e-2, 10 ** 6.5)):
        params = SystemParams(M=m, N_S=n_s, N_B=20.0, kappa_bar=0.01, epsilon=0.01)
        print(f"\nN_S = {n_s:g}, M = {m:.4g}, {config.trials} trials per hypothesis")
        sfg = sfg_bayes(params)
        p_f, p_d = estimate_operating_point(Receiver.SFG, params, sfg.threshold, config)
        print(f"  SFG receiver at count threshold n_t = {sfg.threshold}:")
        show("P_F", p_f, sfg.p_false_alarm)
        show("P_D", p_d, sfg.p_detect)
        show("Pr(e)", estimate_bayes_error(Receiver.SFG, params, config), sfg.p_error)
        ci = ci_bayes(params)
        threshold = -math.log(ci.threshold)
        p_f, p_d = estimate_operating_point(Receiver.CI, params, threshold, config)
        print(f"  CI receiver at envelope threshold {threshold:.4f}:")
        show("P_F", p_f, ci.p_false_alarm)
        show("P_D", p_d, ci.p_detect)
        show("Pr(e)", estimate_bayes_error(Receiver.CI, params, config), ci.p_error)


if __name__ == "__main__":
    main()
