"""Allow ``python -m trapsim`` as an alias for the ``trapsim`` script."""

import sys

from .cli import main

if __name__ == "__main__":
    sys.exit(main())
