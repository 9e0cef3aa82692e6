"""Print the time-varying gain schedules of the bundled scenario.

Usage: python3 demos/gain_schedule.py [--points 8]
"""

import argparse

import numpy as np

from ftconsensus.scenario import load_scenario
from ftconsensus.time_scaling import kappa_hat


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--points", type=int, default=8, help="samples per window")
    args = parser.parse_args()

    na = load_scenario("reference_nonautonomous").nonauto_params
    print(f"velocity window ends {na.T_velocity:.6f}, observer {na.T_o:.6f}, controller bound {na.T_hat:.6f}")
    for label, s in (("rho1", na.rho1), ("rho2", na.rho2), ("rho3", na.rho3)):
        print(f"\n{label}: window [{s.t0:.4f}, {s.window_end:.4f}), eta = {s.eta:.6f}, sup = {s.window_supremum():.6f}")
        for t in np.linspace(s.t0, s.window_end, args.points, endpoint=False):
            print(f"  t = {t:8.5f}  gain = {kappa_hat(t, s):.6f}")


if __name__ == "__main__":
    main()
