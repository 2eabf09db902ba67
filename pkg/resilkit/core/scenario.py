# Copyright (c) 2024-2026 resilkit developers.
# Full license can be found in the top level "LICENSE" file.
"""Scenario file format.

A scenario file describes exactly one experiment.  It is JSON by default
and may also be YAML or TOML; any of them may be gzip-compressed.  The
top level holds the experiment ``kind``, a ``version`` tag, the master
``seed``, an optional ``output`` block and the kind-specific blocks listed
in :data:`DEFAULTS`.

"""

import copy
import gzip
import json
import os
from collections import OrderedDict

import toml
import yaml

from .errors import ValidationError

#: Scenario format version written by :meth:`ScenarioFile.dump`.
FORMAT_VERSION = "1"

#: Experiment kinds in the order they are documented.
KINDS = ("rollout", "metrics", "fallback", "mtd", "mpc", "game", "pra",
         "strategic", "riskgraph", "net")

_common = OrderedDict([
    ("version", FORMAT_VERSION),
    ("kind", None),
    ("seed", None),
    ("output", OrderedDict([("dir", None), ("formats", ["json", "csv"]),
                            ("plots", False)])),
])

_metrics_config = OrderedDict([
    ("delta", 0.8), ("q_sla", None), ("q_avail", None), ("q_min", None),
    ("l_max", None), ("weights", None), ("cost", None), ("alpha", 0.95),
    ("stabilization", 3),
])

#: Default value of every key, per experiment kind.  None marks a key
#: that is optional or must be given (see ``REQUIRED``).
DEFAULTS = OrderedDict([
    ("rollout", OrderedDict([
        ("model", None), ("defender", None),
        ("attack", None), ("natural", None), ("x0", 0.0), ("q0", None),
        ("T", None), ("metrics", None),
    ])),
    ("metrics", OrderedDict([
        ("trajectory", None), ("config", _metrics_config), ("events", None),
        ("window", None), ("slices", None), ("disrupted", 0),
        ("latency", None), ("allocated", None), ("optimal", None),
        ("normalized", None),
    ])),
    ("fallback", OrderedDict([
        ("spec", None), ("states", None), ("oracle", False),
        ("oracle_step", 1e-3),
    ])),
    ("mtd", OrderedDict([
        ("configs", None), ("f0", None), ("risk", None), ("eps", 1.0),
        ("alpha", 0.0), ("features", None), ("duals", None),
        ("surface", None), ("transition", None), ("psi", None), ("H", 1),
    ])),
    ("mpc", OrderedDict([
        ("model", None), ("cost", None),
        ("actions", None), ("H", 2), ("T", None), ("x0", 0.0), ("q0", None),
        ("attack", None), ("natural", None), ("n_samples", 1),
        ("objective", "expectation"), ("alpha", 0.0), ("metrics", None),
    ])),
    ("game", OrderedDict([
        ("game", None), ("tol", 1e-9), ("max_iter", 10000),
        ("worst_case", True), ("defender_policy", None),
        ("q_learning", None),
    ])),
    ("pra", OrderedDict([
        ("model", None), ("twin", None), ("defender", None),
        ("scenarios", None), ("T", None),
        ("window", None), ("q_min", 0.0), ("N", 100), ("alpha", 0.95),
        ("fidelity", None),
    ])),
    ("strategic", OrderedDict([
        ("game", None), ("model", None), ("embedding", None),
        ("scenarios", None), ("T", None), ("window", None), ("q_min", 0.0),
        ("N", 100), ("alpha", 0.95), ("mode", "both"),
        ("defender_cost", None), ("attacker_cost", None),
        ("attacker_weight", 1.0), ("tol", 1e-9), ("max_iter", 10000),
    ])),
    ("riskgraph", OrderedDict([
        ("system", None), ("tree", None), ("risk", None),
        ("propagate_dependencies", False), ("top_k", None),
        ("exact", True),
    ])),
    ("net", OrderedDict([
        ("rgg", None), ("degree", True), ("percolation", None),
        ("site", None), ("sis", None), ("spectral", None),
        ("edgelist", False),
    ])),
])

#: Keys without a usable default, per kind.
REQUIRED = OrderedDict([
    ("rollout", ("model", "T")),
    ("metrics", ("trajectory",)),
    ("fallback", ("spec", "states")),
    ("mtd", ("configs", "risk")),
    ("mpc", ("model", "actions", "T")),
    ("game", ("game",)),
    ("pra", ("model", "scenarios", "T")),
    ("strategic", ("game", "model", "embedding", "scenarios", "T")),
    ("riskgraph", ("tree", "risk")),
    ("net", ("rgg",)),
])

#: Kinds that always draw random numbers.
STOCHASTIC_KINDS = ("pra", "strategic", "net")


def _format_of(path):
    base = path[:-3] if path.endswith(".gz") else path
    ext = os.path.splitext(base)[1].lower()
    if ext in (".yaml", ".yml"):
        return "yaml"
    if ext == ".toml":
        return "toml"
    return "json"


def _parse(text, fmt, path):
    """Parse text, turning syntax errors into a ValidationError."""
    try:
        if fmt == "yaml":
            return yaml.safe_load(text)
        if fmt == "toml":
            return toml.loads(text)
        return json.loads(text, object_pairs_hook=OrderedDict)
    except json.JSONDecodeError as e:
        msg = "parse error at line {} column {}: {}".format(
            e.lineno, e.colno, e.msg)
    except yaml.YAMLError as e:
        mark = getattr(e, "problem_mark", None)
        if mark is not None:
            msg = "parse error at line {} column {}: {}".format(
                mark.line + 1, mark.column + 1, getattr(e, "problem", e))
        else:
            msg = "parse error: {}".format(e)
    except toml.TomlDecodeError as e:
        msg = "parse error at line {} column {}: {}".format(
            getattr(e, "lineno", "?"), getattr(e, "colno", "?"),
            getattr(e, "msg", e))
    raise ValidationError([msg], path=path)


def _merge(defaults, data):
    out = OrderedDict()
    for k, v in defaults.items():
        if k in data and isinstance(v, dict) and isinstance(data[k], dict):
            out[k] = _merge(v, data[k])
        elif k in data:
            out[k] = copy.deepcopy(data[k])
        else:
            out[k] = copy.deepcopy(v)
    for k, v in data.items():
        if k not in out:
            out[k] = copy.deepcopy(v)
    return out


class ScenarioFile(object):
    """Dictionary-backed scenario description.

    Args:
        path (str, optional): If given, the file is loaded on construction.
        data (dict, optional): Initial content.

    """

    def __init__(self, path=None, data=None):
        self.path = path
        self.data = OrderedDict() if data is None else OrderedDict(data)
        if path is not None:
            self.load(path)

    def load(self, path):
        """Read a scenario file, plain or gzip-compressed.

        Raises:
            ValidationError: If the content cannot be parsed or is not a
                mapping.

        """
        fmt = _format_of(path)
        try:
            with gzip.open(path, "rb") as f:
                text = f.read().decode()
        except OSError:
            with open(path, "r") as f:
                text = f.read()
        data = _parse(text, fmt, path)
        if not isinstance(data, dict):
            raise ValidationError(["top level of a scenario file must be a "
                                   "mapping"], path=path)
        self.path = path
        self.data = OrderedDict(data)

    def dump(self, path, overwrite=False, compress=False):
        """Write the scenario in the format implied by the file name."""
        if os.path.exists(path):
            if overwrite:
                os.remove(path)
            else:
                raise RuntimeError("Dump path {} already exists.  Use "
                                   "overwrite option".format(path))
        fmt = _format_of(path)
        if fmt == "yaml":
            dstr = yaml.safe_dump(json.loads(json.dumps(self.data)),
                                  sort_keys=False)
        elif fmt == "toml":
            dstr = toml.dumps(json.loads(json.dumps(self.data)))
        else:
            dstr = json.dumps(self.data, indent=2) + "\n"
        if compress:
            with gzip.open(path, "wb") as f:
                f.write(dstr.encode())
        else:
            with open(path, "w") as f:
                f.write(dstr)

    @property
    def kind(self):
        return self.data.get("kind")

    @property
    def seed(self):
        return self.data.get("seed")

    def __getitem__(self, key):
        return self.data[key]

    def get(self, key, default=None):
        return self.data.get(key, default)

    def problems(self):
        """Structural problems: kind, keys, required blocks and seed."""
        errs = list()
        kind = self.kind
        if kind not in KINDS:
            errs.append("kind: unknown experiment kind {!r}; valid kinds are "
                        "{}".format(kind, ", ".join(KINDS)))
            return errs
        allowed = set(_common) | set(DEFAULTS[kind])
        for k in self.data:
            if k not in allowed:
                errs.append("{}: unknown key for kind {}".format(k, kind))
        for k in REQUIRED[kind]:
            if self.data.get(k) is None:
                errs.append("{}: required for kind {}".format(k, kind))
        seed = self.data.get("seed")
        if seed is not None and (isinstance(seed, bool) or
                                 not isinstance(seed, int) or seed < 0):
            errs.append("seed: must be a nonnegative integer, got "
                        "{!r}".format(seed))
        out = self.data.get("output")
        if out is not None:
            if not isinstance(out, dict):
                errs.append("output: must be a mapping")
            else:
                for fmt in out.get("formats", []) or []:
                    if fmt not in ("json", "csv"):
                        errs.append("output.formats: unknown format "
                                    "{!r}".format(fmt))
        return errs

    def resolved(self):
        """Copy of the data with every default filled in."""
        if self.kind not in KINDS:
            raise ValidationError(self.problems(), path=self.path)
        defaults = _merge(_common, DEFAULTS[self.kind])
        return _merge(defaults, self.data)

    def __repr__(self):
        return "ScenarioFile<{}, {}>".format(self.kind, self.path)


def schema():
    """Defaults table as a nested dictionary (for ``resilkit schema``)."""
    out = OrderedDict()
    out["common"] = copy.deepcopy(_common)
    for kind in KINDS:
        block = copy.deepcopy(DEFAULTS[kind])
        out[kind] = OrderedDict(required=list(REQUIRED[kind]),
                                stochastic=kind in STOCHASTIC_KINDS,
                                defaults=block)
    return out
