"""Delay survivor function at the largest V, average-delay constraint only."""

import sys

from _common import run_preset

if __name__ == "__main__":
    sys.exit(run_preset("survivor", __doc__, "results/survivor"))
