"""
Processors package for the consensus lab.

This package contains graph and mixing-matrix construction, the zero-order
gradient estimators, the objective suites, step-size schedules, metrics,
the iteration kernels and the verification checks.
"""
