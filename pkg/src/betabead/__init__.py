"""Beta-ensemble bead processes: Stieltjes level-set chains, samplers and checks."""

__version__ = "0.1.0"
