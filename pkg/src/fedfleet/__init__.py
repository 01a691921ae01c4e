"""Federated energy-consumption modeling for simulated EV fleets.

The package is organized in layers:

- ``battery``: equivalent-circuit cell model plus a road-load surrogate that
  turns a drive cycle into per-second battery power and energy.
- ``pipeline``: windowed feature extraction, standardization, chronological
  splits.
- ``nn``: small from-scratch ANN / GRU / LSTM regressors with analytic
  gradients and Adam.
- ``federated``: parameter-vector aggregation and the client update rules
  (FedSGD, FedAvg, FedProx, FedPer, FedRep).
- ``topology``: multi-round experiment drivers (centralized server or
  decentralized peer groups) plus local-only baselines.
- ``config`` / ``cli``: declarative experiment configs and the command line.
"""

__version__ = "0.1.0"

from .seeding import derive_seed, make_rng

__all__ = ["derive_seed", "make_rng", "__version__"]
