"""Coincidence (QST) and stimulated-emission (SET) tomography of photon pairs.

Configs go in as dicts, records travel as CSV text in the command-line tool's
schema, and results come back as dicts.
"""

import json

from . import _stimtomo
from ._stimtomo import (
    ConfigError,
    DataError,
    DegenerateError,
    InvalidStateError,
    NumericalError,
    StimtomoError,
)

__all__ = [
    "ConfigError",
    "DataError",
    "DegenerateError",
    "InvalidStateError",
    "NumericalError",
    "StimtomoError",
    "simulate_qst",
    "simulate_set",
    "reconstruct_qst",
    "reconstruct_set",
    "state",
    "metrics",
    "fidelity",
    "run_experiment",
    "run_acceptance",
]


def _dump(obj):
    return "" if obj is None else json.dumps(obj)


def simulate_qst(source, acquisition=None):
    """Coincidence-count records (CSV) for the angle-averaged state."""
    return _stimtomo.simulate_qst(_dump(source), _dump(acquisition))


def simulate_set(source, theta_mrad=0.0, acquisition=None, distortion=None, pdl=None):
    """(stimulated records CSV, seed tomography CSV) at one seed angle."""
    return _stimtomo.simulate_set(
        _dump(source), theta_mrad, _dump(acquisition), _dump(distortion), _dump(pdl)
    )


def reconstruct_qst(records, fit=None):
    return json.loads(_stimtomo.reconstruct_qst(records, _dump(fit)))


def reconstruct_set(records, seed_tomography, fit=None):
    return json.loads(_stimtomo.reconstruct_set(records, seed_tomography, _dump(fit)))


def state(source, theta_mrad=0.0, averaged=False):
    """True state at one angle, or the angle-averaged one, with its metrics."""
    return json.loads(_stimtomo.state(_dump(source), theta_mrad, averaged))


def metrics(rho):
    return json.loads(_stimtomo.metrics(json.dumps(rho)))


def fidelity(rho, sigma):
    return _stimtomo.fidelity(json.dumps(rho), json.dumps(sigma))


def run_experiment(spec):
    return json.loads(_stimtomo.run_experiment(json.dumps(spec)))


def run_acceptance(seed=42, threads=0):
    return json.loads(_stimtomo.run_acceptance(seed, threads))
