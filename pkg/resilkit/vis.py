# Copyright (c) 2024-2026 resilkit developers.
# Full license can be found in the top level "LICENSE" file.
"""Plots of run report tables.

Every plot function takes a ResultSet and an output path and writes one
PDF.  :func:`plot_report` registers a plot writer for every table of a
report that has a plot, so plots are staged and renamed together with the
other report files.

"""

import logging
import warnings
import functools

import numpy as np

logger = logging.getLogger(__name__)

threshold_styles = {
    "delta_threshold": ("tab:orange", "--"),
    "q_sla": ("tab:red", ":"),
    "q_avail": ("tab:purple", "-."),
    "q_min": ("tab:gray", "--"),
}


def set_matplotlib_pdf_backend():
    """Set the matplotlib backend to PDF."""
    import matplotlib

    matplotlib.use("pdf")
    import matplotlib.pyplot as plt

    return plt


def _pyplot():
    try:
        plt = set_matplotlib_pdf_backend()
    except Exception:
        warnings.warn("Couldn't set the PDF matplotlib backend, proceeding "
                      "with the default matplotlib backend")
        import matplotlib.pyplot as plt
    return plt


def plot_timeseries(table, outfile, title=None):
    """Performance Q(t) with its threshold lines.

    Args:
        table (ResultSet): Columns t, Q, q_max, delta_threshold and any of
            q_sla, q_avail, q_min.
        outfile (str): Output PDF path.
        title (str, optional): Plot title.

    """
    plt = _pyplot()
    fig = plt.figure(figsize=(8, 4))
    ax = fig.add_subplot(1, 1, 1)
    t = table["t"]
    ax.step(t, table["Q"], where="post", color="tab:blue", label="Q")
    ax.axhline(table["q_max"][0], color="black", linewidth=0.8,
               label="Q_max")
    for key, (color, style) in threshold_styles.items():
        if key in table.keys:
            ax.axhline(table[key][0], color=color, linestyle=style,
                       label=key)
    ax.set_xlabel("t")
    ax.set_ylabel("performance")
    ax.legend(loc="lower right", fontsize="small")
    if title is not None:
        ax.set_title(title)
    fig.savefig(outfile, format="pdf")
    plt.close(fig)


def plot_percolation(table, outfile, threshold=None, xlabel="parameter"):
    """Mean giant component fraction against the scanned parameter."""
    plt = _pyplot()
    fig = plt.figure(figsize=(6, 4))
    ax = fig.add_subplot(1, 1, 1)
    ax.errorbar(table["param"], table["mean_fraction"],
                yerr=table["stderr"], marker="o", capsize=3)
    if threshold is not None and np.isfinite(threshold):
        ax.axvline(threshold, color="tab:red", linestyle="--",
                   label="threshold")
        ax.legend(loc="lower right")
    ax.set_xlabel(xlabel)
    ax.set_ylabel("largest component fraction")
    ax.set_ylim(-0.02, 1.02)
    fig.savefig(outfile, format="pdf")
    plt.close(fig)


def plot_sis(table, outfile):
    plt = _pyplot()
    fig = plt.figure(figsize=(6, 4))
    ax = fig.add_subplot(1, 1, 1)
    ax.plot(table["t"], table["I"])
    ax.set_xlabel("step")
    ax.set_ylabel("infected fraction")
    fig.savefig(outfile, format="pdf")
    plt.close(fig)


def plot_mtd(table, outfile):
    """Configuration probabilities per planning stage, stacked."""
    plt = _pyplot()
    stages = sorted(set(int(s) for s in table["stage"]))
    configs = list()
    for c in table["config"]:
        if c not in configs:
            configs.append(c)
    probs = np.zeros((len(configs), len(stages)))
    for row in table.rows:
        probs[configs.index(row[1]), stages.index(int(row[0]))] = row[2]
    fig = plt.figure(figsize=(6, 4))
    ax = fig.add_subplot(1, 1, 1)
    bottom = np.zeros(len(stages))
    for c, p in zip(configs, probs):
        ax.bar(stages, p, bottom=bottom, label=str(c))
        bottom += p
    ax.set_xlabel("stage")
    ax.set_ylabel("probability")
    ax.legend(loc="upper right", fontsize="small")
    fig.savefig(outfile, format="pdf")
    plt.close(fig)


def plot_report(report):
    """Register plot writers for the plottable tables of a report.

    Returns:
        (list): Names of the registered plot files.

    """
    v = report.values
    param = "parameter"
    if report.config is not None and isinstance(
            report.config.get("percolation"), dict):
        param = report.config["percolation"].get("param", "rad")
    plots = [
        ("timeseries", "timeseries.pdf",
         functools.partial(plot_timeseries, title=report.kind)),
        ("percolation", "percolation.pdf",
         functools.partial(plot_percolation,
                           threshold=v.get("percolation_threshold"),
                           xlabel=param)),
        ("site_percolation", "site_percolation.pdf",
         functools.partial(plot_percolation,
                           threshold=v.get("site_threshold"),
                           xlabel="occupation probability")),
        ("sis", "sis.pdf", plot_sis),
        ("distributions", "distributions.pdf", plot_mtd),
    ]
    names = list()
    for table, fname, func in plots:
        if table not in report.tables or len(report.tables[table]) == 0:
            continue
        report.files[fname] = functools.partial(func, report.tables[table])
        names.append(fname)
    if len(names) == 0:
        logger.debug("no plottable tables in {} report".format(report.kind))
    return names
