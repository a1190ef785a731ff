"""
JSON Exporter Module

This module exports verification reports to JSON.
"""

import json
import logging
from typing import Sequence

from models.trace import VerificationReport

logger = logging.getLogger(__name__)


class JSONExporter:
    """Class to export verification reports to JSON format."""

    def export(self, reports: Sequence[VerificationReport], output_path: str) -> bool:
        """Export reports as a JSON list.

        Args:
            reports: Verification reports
            output_path: Path to save the JSON file

        Returns:
            Boolean indicating success
        """
        try:
            data = [report.to_dict() for report in reports]
            with open(output_path, 'w', encoding='utf-8') as json_file:
                json.dump(data, json_file, ensure_ascii=False, indent=2)

            logger.info(f"Exported {len(data)} reports to JSON: {output_path}")
            return True

        except Exception as e:
            logger.error(f"Error exporting to JSON: {str(e)}")
            return False
