import csv
import json
import logging
import math
import os
from typing import Any, Dict, Iterator, List, Optional


def jsonable(value: Any) -> Any:
    """JSON-safe copy: numpy values become Python ones, non-finite floats become strings."""
    if isinstance(value, dict):
        return {str(k): jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [jsonable(v) for v in value]
    if hasattr(value, 'tolist'):
        return jsonable(value.tolist())
    if isinstance(value, float) and not math.isfinite(value):
        return repr(value)
    return value


class MonitorStream:
    """
    Append-only monitor output of a run: one JSON record per monitor
    cadence in ``monitors.jsonl`` and a flat CSV projection in
    ``monitors.csv`` for plotting.
    """

    def __init__(self, out_dir: str, jsonl_name: str = 'monitors.jsonl', csv_name: str = 'monitors.csv'):
        """
        :param out_dir: Run output directory
        :param jsonl_name: File name of the record stream
        :param csv_name: File name of the scalar projection
        """
        self.out_dir = out_dir
        self.logger = logging.getLogger(__name__)
        os.makedirs(out_dir, exist_ok=True)
        self.jsonl_path = os.path.join(out_dir, jsonl_name)
        self.csv_path = os.path.join(out_dir, csv_name)
        self._columns: Optional[List[str]] = None
        self._rows: List[Dict[str, Any]] = []
        open(self.jsonl_path, 'w').close()

    def append(self, record: Dict[str, Any], scalars: Optional[Dict[str, float]] = None):
        """
        Append one record and its scalar projection.

        :param record: Full monitor record
        :param scalars: Flat scalar columns for the CSV; skipped when None
        """
        with open(self.jsonl_path, 'a') as stream:
            stream.write(json.dumps(jsonable(record)) + '\n')
        if scalars is not None:
            self._append_row(scalars)

    def _append_row(self, scalars: Dict[str, float]):
        if self._columns is None:
            self._columns = list(scalars)
        else:
            # new monitors extend the header; earlier rows leave the column empty
            grown = [name for name in scalars if name not in self._columns]
            if grown:
                self._columns.extend(grown)
        self._rows.append(dict(scalars))
        self._write_csv()

    def _write_csv(self):
        with open(self.csv_path, 'w', newline='') as table:
            writer = csv.DictWriter(table, fieldnames=self._columns, restval='')
            writer.writeheader()
            for row in self._rows:
                writer.writerow({k: jsonable(v) for k, v in row.items()})

    def records(self) -> Iterator[Dict[str, Any]]:
        """Iterate over the records written so far."""
        if not os.path.exists(self.jsonl_path):
            return
        with open(self.jsonl_path, 'r') as stream:
            for line in stream:
                line = line.strip()
                if line:
                    yield json.loads(line)

    def summary(self) -> Dict[str, Any]:
        """Count, time span and the extreme values of every scalar column."""
        if not self._rows:
            return {'records': 0}
        summary: Dict[str, Any] = {
            'records': len(self._rows),
            't_first': self._rows[0].get('t'),
            't_last': self._rows[-1].get('t'),
            'max': {},
        }
        for name in self._columns or []:
            values = [row[name] for row in self._rows if isinstance(row.get(name), (int, float))]
            finite = [v for v in values if math.isfinite(v)]
            if finite:
                summary['max'][name] = max(finite)
        return summary


def read_monitor_csv(path: str) -> List[Dict[str, float]]:
    """Read a CSV projection back as float columns (empty cells become NaN)."""
    with open(path, 'r', newline='') as table:
        rows = []
        for row in csv.DictReader(table):
            rows.append({k: float(v) if v not in ('', None) else math.nan for k, v in row.items()})
        return rows
