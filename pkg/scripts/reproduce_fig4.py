"""Center entanglement entropy over the lambda grid {0, 0.25, 0.5, 1, 2}.

Runs at desk scale (200 sites, m=100) unless ``--paper-scale`` is given.
Extra arguments are passed to ``hypchain reproduce fig4``, e.g.
``--jobs 2``, ``--lambdas 0.1 0.2`` or ``-o somewhere``.
"""

import sys

from hypchain.cli import main

if __name__ == "__main__":
    args = sys.argv[1:]
    if "-o" not in args and "--output" not in args:
        args += ["-o", "results/fig4"]
    sys.exit(main(["reproduce", "fig4", *args]))
