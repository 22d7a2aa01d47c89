"""main.py - Wave-function reduction laboratory.

Main entry point for the reduction laboratory. Runs one subcommand
(reduce, fp, rate, epr, factorize or selfcheck) and exits with its
status code.
"""

__author__ = "Abiola Raji"
__version__ = "2.0"
__date__ = "2026-10-17"

import sys
from src import main

if __name__ == "__main__":
    sys.exit(main())
