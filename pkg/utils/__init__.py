"""
Utilities package for the consensus lab.

This package contains logging configuration, config-file parsing,
float formatting and the exception hierarchy.
"""
