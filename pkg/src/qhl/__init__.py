"""Quasihyperbolic geometry of Euclidean domains: solvers and empirical verifiers."""

__version__ = "0.1.0"
