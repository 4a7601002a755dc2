"""Delay survivor function at the largest V with the outage constraint on."""

import sys

from _common import run_preset

if __name__ == "__main__":
    sys.exit(run_preset("survivor-outage", __doc__, "results/survivor_outage"))
