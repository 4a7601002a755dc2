"""Running average of the total power over time, outage constraint on."""

import sys

from _common import run_preset

if __name__ == "__main__":
    sys.exit(run_preset("power-trace", __doc__, "results/power_trace"))
