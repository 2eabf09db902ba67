# Copyright (c) 2024-2026 resilkit developers.
# Full license can be found in the top level "LICENSE" file.
"""Columnar result tables.
"""

import io
import csv
import numbers
from collections import OrderedDict

import numpy as np


def format_value(v, digits=12):
    """Render one table cell for CSV output.

    Floats are written with ``digits`` significant digits, integers and
    strings as is, booleans as ``true``/``false`` and missing values as an
    empty cell.

    """
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (numbers.Integral, np.integer)):
        return str(int(v))
    if isinstance(v, (numbers.Real, np.floating)):
        v = float(v)
        if np.isnan(v):
            return "nan"
        return "{:.{}g}".format(v, digits)
    return str(v)


class ResultSet(object):
    """One result table: named columns over a list of row tuples.

    Experiments fill a table row by row with :meth:`append`, and the report
    layer turns it into CSV or JSON records.  Access follows the key type::

      >>> rs = ResultSet(['metric', 'value'], [('L', 0.75), ('M', 1.0)])
      >>> rs
      ResultSet<[metric,value], 2 rows>
      >>> rs['value']
      array([0.75, 1.  ])
      >>> rs[0]
      OrderedDict([('metric', 'L'), ('value', 0.75)])

    A slice gives a new table over the same columns.

    Args:
        keys (list): Column names.
        src (iterable): Optional initial rows, each a sequence with one
            entry per column.

    """

    def __init__(self, keys, src=None):
        self.keys = list(keys)
        self.rows = list()
        for row in (src or []):
            row = tuple(row)
            if len(row) != len(self.keys):
                raise ValueError("row {} does not match columns {}".format(
                    row, self.keys))
            self.rows.append(row)

    def copy(self):
        return ResultSet(self.keys, self.rows)

    def column(self, name):
        """Values of one column as a numpy array."""
        try:
            idx = self.keys.index(name)
        except ValueError:
            raise KeyError("no column '{}' in {}".format(name, self.keys))
        return np.array([r[idx] for r in self.rows])

    def asarray(self):
        """Structured numpy array with one field per column."""
        if len(self.rows) == 0:
            return np.zeros(0, dtype=[(k, np.float64) for k in self.keys])
        cols = [self.column(k) for k in self.keys]
        out = np.empty(len(self.rows),
                       dtype=[(k, c.dtype) for k, c in zip(self.keys, cols)])
        for k, c in zip(self.keys, cols):
            out[k] = c
        return out

    def distinct(self):
        """Copy without repeated rows, in sorted order."""
        return ResultSet(self.keys, sorted(set(self.rows)))

    def to_records(self):
        """List of plain dicts, one per row, for JSON output.

        Numpy scalars become python scalars and non-finite floats become
        None.

        """
        out = list()
        for r in self.rows:
            rec = OrderedDict()
            for k, v in zip(self.keys, r):
                if isinstance(v, np.generic):
                    v = v.item()
                if isinstance(v, float) and not np.isfinite(v):
                    v = None
                rec[k] = v
            out.append(rec)
        return out

    def to_csv(self, digits=12):
        """Return the table as CSV text with a header row."""
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(self.keys)
        for r in self.rows:
            writer.writerow([format_value(v, digits) for v in r])
        return buf.getvalue()

    def append(self, row):
        """Add one row given as a mapping that covers every column."""
        missing = [k for k in self.keys if k not in row]
        if len(missing) > 0:
            raise ValueError("row lacks columns {}".format(missing))
        self.rows.append(tuple(row[k] for k in self.keys))

    def extend(self, other):
        """Add the rows of another table with the same columns."""
        if not isinstance(other, ResultSet):
            raise TypeError("can only extend with another ResultSet")
        if other.keys != self.keys:
            raise ValueError("columns differ: {} vs {}".format(
                self.keys, other.keys))
        self.rows.extend(other.rows)

    def merge(self, other):
        """Append the columns of ``other`` in place, row by row."""
        if len(other) != len(self):
            raise ValueError("cannot merge {} rows into {}".format(
                len(other), len(self)))
        dup = set(self.keys) & set(other.keys)
        if len(dup) > 0:
            raise ValueError("columns already present: {}".format(
                sorted(dup)))
        self.rows = [a + b for a, b in zip(self.rows, other.rows)]
        self.keys = self.keys + other.keys

    def __repr__(self):
        return "ResultSet<[{}], {} rows>".format(",".join(self.keys),
                                                 len(self.rows))

    def __len__(self):
        return len(self.rows)

    def __iter__(self):
        for i in range(len(self.rows)):
            yield self[i]

    def __eq__(self, other):
        if not isinstance(other, ResultSet):
            return NotImplemented
        return self.keys == other.keys and self.rows == other.rows

    def __getitem__(self, item):
        if isinstance(item, str):
            return self.column(item)
        if isinstance(item, (int, np.integer)):
            return OrderedDict(zip(self.keys, self.rows[item]))
        return ResultSet(self.keys, self.rows[item])
