"""Exact neural-network representations of convex piecewise quadratic functions.

Modules: :mod:`pwqnet.pwq` (1D functions), :mod:`pwqnet.lifting` (compensating
lifts), :mod:`pwqnet.qp` (active-set QP), :mod:`pwqnet.nn` (network builders),
:mod:`pwqnet.verify` (certificates and sampling checks), :mod:`pwqnet.cli`.
"""
__version__ = "0.1.0"
