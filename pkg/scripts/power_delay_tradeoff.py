"""Average power versus average delay for all schemes over the V sweep."""

import sys

from _common import run_preset

if __name__ == "__main__":
    sys.exit(run_preset("tradeoff", __doc__, "results/tradeoff"))
