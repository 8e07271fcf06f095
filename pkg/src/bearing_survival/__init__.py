"""Failure-event annotation and censored survival modeling for ball bearings.

The package follows the processing chain end to end: raw vibration archives
are framed and demodulated (``signal``), summarized by twelve time-domain
indicators (``features``), annotated with failure events from the divergence
of spectral distributions (``events``), expanded into censored survival
records (``dataset``), modeled (``models``), scored (``metrics``) and
benchmarked (``experiment``); ``simulate`` provides synthetic ground truth
and ``cli`` wires everything behind the ``bearing-survival`` command.
"""

from . import dataset, events, experiment, features, metrics, models, signal, simulate

__version__ = "0.1.0"

__all__ = [
    "dataset",
    "events",
    "experiment",
    "features",
    "metrics",
    "models",
    "signal",
    "simulate",
    "__version__",
]
