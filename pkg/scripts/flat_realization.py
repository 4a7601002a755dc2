"""Compare the flat benchmark on Lorentzian hardware with an ideal flat RIS.

Prints the average power and delay of the optimized scheme and both flat
variants at one V, all on the same random streams.
"""

import argparse

from rismec.controller import ControllerConfig, Scheme, SchemeOptions
from rismec.model import SystemConfig
from rismec.sim import ScenarioSpec, run_scenario


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--horizon", type=int, default=5000)
    parser.add_argument("--v", type=float, default=100.0)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()
    ctrl = ControllerConfig(v=args.v, outage_constraint=False)
    cases = [
        ("optimized", Scheme.OPTIMIZED, SchemeOptions()),
        ("flat on lorentzian", Scheme.FLAT, SchemeOptions()),
        ("ideal flat", Scheme.FLAT, SchemeOptions(flat_realization="ideal")),
        ("direct", Scheme.DIRECT, SchemeOptions()),
    ]
    print(f"{'case':<20}{'power [mW]':>12}{'delay [ms]':>12}")
    for name, scheme, opts in cases:
        spec = ScenarioSpec(SystemConfig(), ctrl, scheme, horizon=args.horizon,
                            seed=args.seed, options=opts)
        s = run_scenario(spec)
        print(f"{name:<20}{s.avg_power * 1e3:>12.3f}{s.avg_delay * 1e3:>12.2f}")


if __name__ == "__main__":
    main()
