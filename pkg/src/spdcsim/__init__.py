"""Broadband degenerate SPDC in dispersion-engineered PPLN waveguides.

Modules: ``dispersion``, ``qpm``, ``biphoton``, ``multiplex``, ``counting``,
``franson``, ``scenario``, ``report`` and the ``cli`` front end.
"""
from . import biphoton, counting, dispersion, franson, multiplex, qpm
from .biphoton import SourceParams
from .scenario import Scenario, load_scenario, parse_scenario

__version__ = "0.1.0"
