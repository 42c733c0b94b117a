"""Model registry: small reference architectures plus checkpoint loading.

Weights are seeded-random unless a state-dict checkpoint is supplied, so
exports are reproducible offline.
"""
import torch
from torch import nn


def _tiny2():
    # 2-layer test model: one conv, one linear
    return nn.Sequential(nn.Conv2d(8, 16, 3), nn.Flatten(), nn.Linear(72, 10))


def _lenet5():
    return nn.Sequential(
        nn.Conv2d(1, 6, 5),
        nn.Tanh(),
        nn.AvgPool2d(2),
        nn.Conv2d(6, 16, 5),
        nn.Tanh(),
        nn.AvgPool2d(2),
        nn.Flatten(),
        nn.Linear(400, 120),
        nn.Tanh(),
        nn.Linear(120, 84),
        nn.Tanh(),
        nn.Linear(84, 10),
    )


def _mlp():
    return nn.Sequential(nn.Linear(784, 128), nn.ReLU(), nn.Linear(128, 10))


REGISTRY = {"tiny2": _tiny2, "lenet5": _lenet5, "mlp": _mlp}


def build_model(name, seed=0, checkpoint=None):
    """Instantiate a registry model, optionally loading a state dict."""
    if name not in REGISTRY:
        raise KeyError(f"unknown model {name!r}; choose from {sorted(REGISTRY)}")
    torch.manual_seed(seed)
    model = REGISTRY[name]()
    if checkpoint is not None:
        model.load_state_dict(torch.load(checkpoint, weights_only=True))
    model.eval()
    return model
