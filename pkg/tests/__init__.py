"""tests package - Unit tests for the reduction laboratory.

Test suite covering the channel-probability engine, the Fokker-Planck
solver, material rates, EPR experiments, factorization, configuration,
file exports and the command-line driver.
"""

__author__ = "Abiola Raji"
__version__ = "2.0"
__date__ = "2026-10-17"
