"""Correlation length times lambda for lambda in {0.05, 0.1}.

Runs at desk scale (200 sites, m=100) unless ``--paper-scale`` is given.
Extra arguments are passed to ``hypchain reproduce fig3``, e.g.
``--jobs 2``, ``--lambdas 0.1 0.2`` or ``-o somewhere``.
"""

import sys

from hypchain.cli import main

if __name__ == "__main__":
    args = sys.argv[1:]
    if "-o" not in args and "--output" not in args:
        args += ["-o", "results/fig3"]
    sys.exit(main(["reproduce", "fig3", *args]))
