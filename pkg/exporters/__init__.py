"""
Exporters package for the consensus lab.

This package contains modules for writing run traces and sweep summaries
to CSV, run manifests to key-value text and verification reports to JSON.
"""
