"""Exact formal-germ toolkit: truncated series, Lie series of unfolding
generators, homological equations, transport operators and Hilbert-matrix
diagnostics."""

__version__ = "0.1.0"
