"""
CSV Exporter Module

This module writes run traces and sweep summaries to CSV. Floats are rendered
as the shortest decimal string that round-trips, so re-running a seed gives
byte-identical files.
"""

import csv
import logging
from typing import Dict, List, Optional, Sequence

import numpy as np

from models.trace import METRIC_COLUMNS, TRACE_COLUMNS, Trace
from utils.number_format import format_float, parse_float

logger = logging.getLogger(__name__)

SUMMARY_STATISTICS = ('mean', 'min', 'max')


def _cell(value) -> str:
    if value is None:
        return ''
    if isinstance(value, (int, np.integer)) and not isinstance(value, bool):
        return str(int(value))
    return format_float(value)


class CSVExporter:
    """Class to export traces to CSV format."""

    def export(self, trace: Trace, output_path: str) -> bool:
        """Export a trace with columns t,m,f_bar,grad_norm_sq,consensus_err,track_err,eta_t,u_t.

        Args:
            trace: Trace to write
            output_path: Path to save the CSV file

        Returns:
            Boolean indicating success
        """
        try:
            if not trace.rows:
                logger.warning("No rows to export to CSV")
                return False

            rows = [[_cell(getattr(row, column)) for column in TRACE_COLUMNS] for row in trace.rows]
            self._write(output_path, list(TRACE_COLUMNS), rows)

            logger.info(f"Exported {len(rows)} trace rows to CSV: {output_path}")
            return True

        except Exception as e:
            logger.error(f"Error exporting trace to CSV: {str(e)}")
            return False

    def export_summary(self, traces: Sequence[Trace], output_path: str) -> bool:
        """Export per-t mean and min/max envelope of every metric across traces.

        Rows are aligned by iteration and cut to the shortest trace. Metrics
        absent from every trace (track_err for alg1) stay empty.

        Args:
            traces: Member traces of a sweep
            output_path: Path to save the CSV file

        Returns:
            Boolean indicating success
        """
        try:
            if not traces:
                logger.warning("No traces to summarize")
                return False

            length = min(len(trace) for trace in traces)
            header = ['t', 'm'] + [f"{metric}_{stat}" for metric in METRIC_COLUMNS
                                   for stat in SUMMARY_STATISTICS]
            columns: Dict[str, np.ndarray] = {
                metric: np.stack([trace.column(metric)[:length] for trace in traces])
                for metric in METRIC_COLUMNS
            }

            rows = []
            for k in range(length):
                reference = traces[0].rows[k]
                row = [_cell(reference.t), _cell(reference.m)]
                for metric in METRIC_COLUMNS:
                    values = columns[metric][:, k]
                    if np.all(np.isnan(values)):
                        row.extend([''] * len(SUMMARY_STATISTICS))
                    else:
                        row.extend([format_float(np.nanmean(values)),
                                    format_float(np.nanmin(values)),
                                    format_float(np.nanmax(values))])
                rows.append(row)

            self._write(output_path, header, rows)
            logger.info(f"Exported summary of {len(traces)} traces ({length} rows) to CSV: {output_path}")
            return True

        except Exception as e:
            logger.error(f"Error exporting summary to CSV: {str(e)}")
            return False

    def _write(self, output_path: str, header: List[str], rows: List[List[str]]) -> None:
        with open(output_path, 'w', newline='', encoding='utf-8') as csv_file:
            writer = csv.writer(csv_file, lineterminator='\n')
            writer.writerow(header)
            writer.writerows(rows)


def read_trace_csv(path: str) -> List[Dict[str, Optional[float]]]:
    """Parse a trace CSV back into rows of numbers (empty cells become None)."""
    with open(path, 'r', newline='', encoding='utf-8') as csv_file:
        reader = csv.DictReader(csv_file)
        rows = []
        for raw in reader:
            row: Dict[str, Optional[float]] = {}
            for column in TRACE_COLUMNS:
                if column in ('t', 'm'):
                    row[column] = int(raw[column])
                else:
                    row[column] = parse_float(raw[column])
            rows.append(row)
    return rows


def write_trace_rows(rows: List[Dict[str, Optional[float]]], path: str) -> None:
    """Re-emit rows parsed by read_trace_csv in the same format."""
    with open(path, 'w', newline='', encoding='utf-8') as csv_file:
        writer = csv.writer(csv_file, lineterminator='\n')
        writer.writerow(TRACE_COLUMNS)
        for row in rows:
            writer.writerow([_cell(row[column]) for column in TRACE_COLUMNS])
