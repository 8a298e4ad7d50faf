"""CSV tables (RFC 4180, LF endings, 17 significant digits) and ``key = value`` sidecars."""
import csv
from dataclasses import dataclass, field
import math
import os
import platform

import numpy as np

from .. import KERNEL_BACKEND, __version__


def format_value(v):
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return format(v, ".17g")
    return str(v)


def write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n", quoting=csv.QUOTE_MINIMAL)
        writer.writerow(header)
        for row in rows:
            if len(row) != len(header):
                raise ValueError(f"row has {len(row)} fields, header has {len(header)}")
            writer.writerow([format_value(v) for v in row])


def read_csv(path):
    """``(header, rows)`` with every field left as a string."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    return rows[0], rows[1:]


def _meta_value(v):
    # shortest round-trip text; the 17-digit form is kept for the tables
    if isinstance(v, (float, np.floating)) and math.isfinite(v):
        return repr(float(v))
    return format_value(v)


def write_meta(path, meta):
    with open(path, "w") as fh:
        for key in sorted(meta):
            value = meta[key]
            if isinstance(value, (list, tuple)):
                value = ",".join(_meta_value(v) for v in value)
            else:
                value = _meta_value(value)
            fh.write(f"{key} = {value}\n")


def read_meta(path):
    out = {}
    with open(path) as fh:
        for line in fh:
            if "=" in line:
                k, v = line.split("=", 1)
                out[k.strip()] = v.strip()
    return out


@dataclass
class StudyOutput:
    """Tables written by one study; sidecars are written by :meth:`finalize` once counts are known."""

    out_dir: str
    meta: dict = field(default_factory=dict)
    tables: list = field(default_factory=list)
    flagged: dict = field(default_factory=dict)
    failed: bool = False
    report: str = ""
    _table_meta: dict = field(default_factory=dict, repr=False)

    def add_table(self, name, header, rows, flagged=(), extra_meta=None):
        path = os.path.join(self.out_dir, name)
        write_csv(path, header, rows)
        self.tables.append(path)
        self.flagged[name] = sorted(set(int(i) for i in flagged))
        meta = dict(extra_meta or {})
        meta["rows"] = len(rows)
        meta["columns"] = list(header)
        meta["flagged_rows"] = self.flagged[name]
        meta["flagged_count"] = len(self.flagged[name])
        self._table_meta[path] = meta
        return path

    def finalize(self, counter=None, wall_time=0.0):
        common = dict(self.meta)
        if counter is not None:
            common.update(counter_meta(counter, wall_time))
        for path in self.tables:
            write_meta(path + ".meta", {**common, **self._table_meta[path]})
        return self


def base_meta(config, seeds, command):
    return {
        "command": command,
        "config_hash": config.hash(),
        "version": __version__,
        "kernel_backend": KERNEL_BACKEND,
        "python": platform.python_version(),
        "numpy": np.__version__,
        **seeds,
    }


def counter_meta(counter, wall_time):
    meta = {f"solves.{k}": v for k, v in sorted(counter.counts.items())}
    meta.update({f"cg_iterations.{k}": v for k, v in sorted(counter.cg_iterations.items())})
    meta["solves_total"] = counter.total
    meta["wall_time_s"] = round(wall_time, 3)
    return meta
