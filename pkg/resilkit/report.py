# Copyright (c) 2024-2026 resilkit developers.
# Full license can be found in the top level "LICENSE" file.
"""Run reports and their on-disk form.

A :class:`RunReport` collects everything one experiment produced: the
resolved configuration, named result tables, scalar values and optional
extra files (edge lists, plots).  :func:`emit_report` writes it as one
JSON document plus one CSV per table.  Every file is first written to a
temporary name in the target directory and only renamed into place once
all of them were written, so a failure never leaves partial reports.

"""

import os
import json
import numbers
import logging
import tempfile
from collections import OrderedDict

import numpy as np

from .core.resultset import ResultSet
from .core.errors import DomainError

logger = logging.getLogger(__name__)

#: Output formats understood by :func:`emit_report`.
FORMATS = ("json", "csv")


def _jsonable(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, ResultSet):
        return obj.to_records()
    if isinstance(obj, (set, frozenset)):
        return sorted(str(v) for v in obj)
    return str(obj)


def _nonfinite_token(v):
    if isinstance(v, (bool, np.bool_)):
        return None
    if isinstance(v, (float, np.floating)) and not np.isfinite(v):
        if np.isnan(v):
            return "nan"
        return "inf" if v > 0 else "-inf"
    return None


def _finite(obj, path, flags):
    """Copy of a nested value with non-finite floats replaced by None.

    The replaced entries are recorded in ``flags`` under their dotted path.

    """
    if isinstance(obj, ResultSet):
        obj = [OrderedDict(zip(obj.keys, r)) for r in obj.rows]
    elif isinstance(obj, np.ndarray):
        obj = obj.tolist()
    tok = _nonfinite_token(obj)
    if tok is not None:
        flags[path] = tok
        return None
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, dict):
        return OrderedDict(
            (k, _finite(v, "{}.{}".format(path, k), flags))
            for k, v in obj.items())
    if isinstance(obj, (list, tuple)):
        return [_finite(v, "{}[{}]".format(path, i), flags)
                for i, v in enumerate(obj)]
    return obj


def _is_scalar(v):
    return v is None or isinstance(v, (numbers.Number, np.generic, str,
                                       bool))


class RunReport(object):
    """Result of one experiment run.

    Args:
        kind (str): Experiment kind.
        config (dict): Resolved configuration (defaults filled in).
        seed (int): Master seed, None for deterministic kinds.
        version (str): Toolkit version.

    Attributes:
        tables (OrderedDict): Name to ResultSet.
        values (OrderedDict): Name to scalar or small nested value.
        files (OrderedDict): File name to a writer ``writer(path)``.
        started (str): UTC start time, ISO format.
        wall_clock (float): Run time in seconds.

    """

    def __init__(self, kind, config, seed=None, version=None):
        self.kind = kind
        self.config = config
        self.seed = seed
        self.version = version
        self.tables = OrderedDict()
        self.values = OrderedDict()
        self.files = OrderedDict()
        self.started = None
        self.wall_clock = None

    def add_table(self, name, table):
        if name in self.tables:
            raise DomainError("duplicate report table {!r}".format(name))
        self.tables[name] = table

    def header(self):
        return OrderedDict([
            ("kind", self.kind), ("version", self.version),
            ("seed", self.seed), ("started", self.started),
            ("wall_clock", self.wall_clock),
        ])

    def values_table(self):
        """Scalar values as a table (nested values skipped).

        Non-finite floats get an empty value cell and their token ("inf",
        "-inf" or "nan") in the ``nonfinite`` column.

        """
        rs = ResultSet(["name", "value", "nonfinite"])
        for k, v in self.values.items():
            if _is_scalar(v):
                tok = _nonfinite_token(v)
                rs.rows.append((k, None if tok else v, tok))
        return rs

    def to_dict(self):
        """Plain nested form of the report, strictly valid as JSON.

        Infinities and NaNs are written as None and listed in
        ``nonfinite``, which maps their dotted path (for example
        ``values.threshold``) to "inf", "-inf" or "nan".

        """
        flags = OrderedDict()
        out = OrderedDict()
        out["header"] = _finite(self.header(), "header", flags)
        out["config"] = _finite(self.config, "config", flags)
        out["values"] = _finite(self.values, "values", flags)
        out["tables"] = OrderedDict(
            (k, _finite(t, "tables.{}".format(k), flags))
            for k, t in self.tables.items())
        out["nonfinite"] = flags
        return out

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2, allow_nan=False,
                          default=_jsonable) + "\n"

    def table_csv(self, name, digits=12):
        return self.tables[name].to_csv(digits=digits)

    def __repr__(self):
        return "RunReport<{}, {} tables, seed={}>".format(
            self.kind, len(self.tables), self.seed)


def _stage_text(outdir, text):
    fd, tmp = tempfile.mkstemp(dir=outdir, prefix=".resilkit-", suffix=".tmp")
    with os.fdopen(fd, "w") as f:
        f.write(text)
    return tmp


def _stage_writer(outdir, writer):
    fd, tmp = tempfile.mkstemp(dir=outdir, prefix=".resilkit-", suffix=".tmp")
    os.close(fd)
    try:
        writer(tmp)
    except BaseException:
        os.remove(tmp)
        raise
    return tmp


def emit_report(report, outdir, formats=FORMATS, prefix=None):
    """Write a report to a directory.

    Files are ``<prefix>_report.json``, ``<prefix>_values.csv`` and
    ``<prefix>_<table>.csv`` for every table, plus ``<prefix>_<name>``
    for every extra file.  The prefix defaults to the experiment kind.
    Decimal values carry 12 significant digits.

    Args:
        report (RunReport): The report.
        outdir (str): Target directory, created if needed.
        formats (list): Subset of ("json", "csv").
        prefix (str, optional): File name prefix.

    Returns:
        (list): The written paths.

    Raises:
        OSError: If the directory cannot be written.  Nothing is renamed
            into place in that case.

    """
    formats = list(formats)
    for fmt in formats:
        if fmt not in FORMATS:
            raise DomainError("unknown report format {!r}; expected one of "
                              "{}".format(fmt, list(FORMATS)))
    os.makedirs(outdir, exist_ok=True)
    if not os.access(outdir, os.W_OK):
        raise PermissionError("output directory {} is not writable".format(
            outdir))
    prefix = report.kind if prefix is None else prefix

    staged = OrderedDict()
    try:
        if "json" in formats:
            path = os.path.join(outdir, "{}_report.json".format(prefix))
            staged[path] = _stage_text(outdir, report.to_json())
        if "csv" in formats:
            vals = report.values_table()
            if len(vals) > 0:
                path = os.path.join(outdir, "{}_values.csv".format(prefix))
                staged[path] = _stage_text(outdir, vals.to_csv())
            for name, table in report.tables.items():
                path = os.path.join(outdir, "{}_{}.csv".format(prefix, name))
                staged[path] = _stage_text(outdir, table.to_csv())
        for name, writer in report.files.items():
            path = os.path.join(outdir, "{}_{}".format(prefix, name))
            staged[path] = _stage_writer(outdir, writer)
    except BaseException:
        for tmp in staged.values():
            if os.path.exists(tmp):
                os.remove(tmp)
        raise
    for path, tmp in staged.items():
        os.replace(tmp, path)
        logger.debug("wrote {}".format(path))
    logger.info("wrote {} files to {}".format(len(staged), outdir))
    return list(staged)
