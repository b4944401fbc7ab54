"""Vehicular-edge AoI simulator: federated SAC power control with GNN aggregation."""

from ._vecaoi import (
    Config,
    Store,
    TrainResult,
    TestResult,
    compute_rates,
    initial_store,
    path_loss_db,
    rayleigh_correlation,
    sweep,
    test,
    train,
)

SCHEMES = ("fgnn", "gfsac", "lfsac", "gdbr")

__all__ = [
    "Config",
    "Store",
    "TrainResult",
    "TestResult",
    "SCHEMES",
    "compute_rates",
    "initial_store",
    "path_loss_db",
    "rayleigh_correlation",
    "sweep",
    "test",
    "train",
]
