"""
Manifest Exporter Module

This module writes run manifests: flat key-value text holding every resolved
parameter, the seed, the graph edges and the suite parameters, enough to
replay a run exactly.
"""

import logging
from typing import Mapping

from utils.config_parser import render_key_value_text

logger = logging.getLogger(__name__)


class ManifestExporter:
    """Class to export run manifests."""

    def export(self, entries: Mapping[str, str], output_path: str) -> bool:
        """Export manifest entries as ``key = value`` lines.

        Args:
            entries: Ordered manifest entries (already rendered as strings)
            output_path: Path to save the manifest

        Returns:
            Boolean indicating success
        """
        try:
            with open(output_path, 'w', encoding='utf-8', newline='\n') as manifest_file:
                manifest_file.write(render_key_value_text(entries))

            logger.info(f"Exported manifest with {len(entries)} keys to: {output_path}")
            return True

        except Exception as e:
            logger.error(f"Error exporting manifest: {str(e)}")
            return False
