"""Deterministic digital twin of a small tank-network water testbed.

Subpackages: :mod:`hydro` (fluid properties and pipe flow), :mod:`quality`
(constituent transport and kinetics), :mod:`network` (scenarios, templates
and validation), :mod:`engine` (time stepping and CSV output) and
:mod:`datagen` (sensor datasets with labeled attacks).
"""

__version__ = "0.1.0"
