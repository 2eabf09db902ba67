# Copyright (c) 2024-2026 resilkit developers.
# Full license can be found in the top level "LICENSE" file.
"""Cyber-resilience engineering toolkit for next-generation networks.

This package simulates hybrid network dynamics under adversarial and
natural disturbances and evaluates how well a network absorbs, survives
and recovers from them.

Contents:

    * core:  Hybrid dynamics, random streams, scenario files, result tables.
    * metrics:  Resilience, service and cost metrics computed on trajectories.
    * controllers:  Fallback switching, moving target defense, receding horizon.
    * games:  Zero-sum stochastic games, slice migration, Q-learning.
    * pra:  Digital twin, Monte Carlo risk assessment and CVaR.
    * riskgraph:  Attack trees, minimal cut sets and importance measures.
    * nettheory:  Random geometric graphs, percolation and SIS epidemics.
    * scripts:  Commandline entry points.

"""

from ._version import get_versions
__version__ = get_versions()['version']
del get_versions


import logging
logger = logging.getLogger(__name__)
_log_fmt = '%(levelname)s: %(name)s: %(message)s'
_ch = logging.StreamHandler()
_ch.setLevel(logging.DEBUG)
_ch.setFormatter(logging.Formatter(_log_fmt))
logger.addHandler(_ch)
