"""Exact-diagonalization dynamics of small fermion lattices under a
nonlinear master equation with thermalization and disentanglement."""

__version__ = "0.1.0"
