"""``python -m viewpoint_sim`` behaves like the ``viewpoint-sim`` console script."""

import sys

from .cli import main

if __name__ == "__main__":
    main(sys.argv[1:])
