"""Numerical auditor for the Cheeger-Gromoll metric on a tangent bundle.

Every published closed form (connection, lift derivatives, Lie derivatives,
curvature) is registered as a claim and compared against brute-force oracles
built from dual-number differentiation of the metric alone.
"""

__version__ = "0.1.0"
