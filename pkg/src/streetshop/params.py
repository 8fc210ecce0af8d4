"""Moving module parameters between torch state dicts and numpy arrays."""

from __future__ import annotations

import numpy as np
import torch

from .errors import CheckpointFormatError


def state_to_numpy(module: torch.nn.Module) -> dict:
    return {k: v.detach().cpu().numpy().copy() for k, v in module.state_dict().items()}


def load_state(module: torch.nn.Module, state: dict) -> None:
    """Load a numpy state dict, validating names and shapes against the module."""
    tensors = {}
    for key, ref in module.state_dict().items():
        if key not in state:
            raise CheckpointFormatError(
                f"checkpoint is missing tensor {key!r} for {type(module).__name__}"
            )
        arr = np.asarray(state[key])
        if tuple(arr.shape) != tuple(ref.shape):
            raise CheckpointFormatError(
                f"checkpoint tensor {key!r} has shape {tuple(arr.shape)}, expected {tuple(ref.shape)}"
            )
        tensors[key] = torch.as_tensor(arr, dtype=ref.dtype)
    module.load_state_dict(tensors)
