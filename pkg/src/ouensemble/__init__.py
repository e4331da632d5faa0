"""Heterogeneous Ornstein-Uhlenbeck ensembles and their equivalent single processes."""
__version__ = "0.1.0"
