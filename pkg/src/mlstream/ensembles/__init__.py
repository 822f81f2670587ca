"""Multi-label stream ensembles and model checkpoints."""
from __future__ import annotations

import pickle
from pathlib import Path

from .adwin import Adwin
from .bagging import AdwinBag, OzaBag
from .goowe import GooweML
from .weights import (SingularSystemError, accumulate, gaussian_elimination, solve_weights,
                      weighted_vote)

CHECKPOINT_FORMAT = "mlstream-checkpoint"
CHECKPOINT_VERSION = 1

__all__ = [
    "Adwin", "AdwinBag", "GooweML", "OzaBag", "SingularSystemError", "accumulate",
    "gaussian_elimination", "load_checkpoint", "save_checkpoint", "solve_weights", "weighted_vote",
]


def save_checkpoint(model, path) -> None:
    """Pickle ``model`` inside a versioned envelope so a run can resume later."""
    envelope = {"format": CHECKPOINT_FORMAT, "version": CHECKPOINT_VERSION,
                "type": type(model).__name__, "model": model}
    with open(path, "wb") as fh:
        pickle.dump(envelope, fh, protocol=pickle.HIGHEST_PROTOCOL)


def load_checkpoint(path):
    """Inverse of :func:`save_checkpoint`; rejects foreign or newer files."""
    with open(Path(path), "rb") as fh:
        envelope = pickle.load(fh)
    if not isinstance(envelope, dict) or envelope.get("format") != CHECKPOINT_FORMAT:
        raise ValueError(f"{path} is not a model checkpoint")
    if envelope["version"] > CHECKPOINT_VERSION:
        raise ValueError(f"checkpoint version {envelope['version']} is newer than supported "
                         f"({CHECKPOINT_VERSION})")
    return envelope["model"]
