"""
Models package for the consensus lab.

This package contains data structures for communication graphs, mixing
matrices, objective suites, swarm states, schedules, traces and reports.
"""
