"""Built-in example problems, stored as plain configuration dictionaries."""

from __future__ import annotations

import copy

from .errors import UnknownGallery

_I2 = [[1, 0], [0, 1]]
_Z2 = [[0, 0], [0, 0]]
_I4 = [[1 if i == j else 0 for j in range(4)] for i in range(4)]
_Z4 = [[0] * 4 for _ in range(4)]
# sigma_x on the two components at each endpoint
_MIX = [[0, 1, 0, 0], [1, 0, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]]

GALLERY: dict[str, dict] = {
    "neumann-to-robin": {
        "name": "neumann-to-robin",
        "interval": [0.0, 1.0],
        "n": 1,
        "grid_points": 200,
        "potential": None,
        "family": {"type": "robin", "theta": [_Z2, _I2]},
        "t0": 0.0,
        "window": [-0.5, 0.5],
        "target": {"kind": "value", "value": 0.0},
        "oracle": {"dt_ladder": [1e-2, 5e-3, 2.5e-3], "t_grid": {"center": 0.0, "halfwidth": 0.05, "points": 11}},
    },
    "dirichlet-double-split": {
        "name": "dirichlet-double-split",
        "interval": [0.0, 3.141592653589793],
        "n": 2,
        "grid_points": 60,
        "potential": None,
        "family": {"type": "general", "x": [_I4], "y": [_Z4, _MIX]},
        "t0": 0.0,
        "window": [-0.02, 0.02],
        "target": {"kind": "value", "value": 1.0},
        "oracle": {"dt_ladder": [1e-3, 5e-4, 2.5e-4], "t_grid": {"center": 0.0, "halfwidth": 0.01, "points": 11}},
    },
    "robin-matrix-potential": {
        "name": "robin-matrix-potential",
        "interval": [0.0, 1.0],
        "n": 2,
        "grid_points": 100,
        # V(x) = [[1 + x, 0.5 x], [0.5 x, -2 x^2]]
        "potential": {"kind": "polynomial", "value": [[[1, 1, 0], [0, 0.5, 0]], [[0, 0.5, 0], [0, 0, -2]]]},
        "family": {
            "type": "robin",
            "theta": [
                [[0.5, 0, 0.2, 0], [0, 1.0, 0, 0], [0.2, 0, -0.3, 0], [0, 0, 0, 0.2]],
                [[1, "0.2+0.1j", 0, 0.1], ["0.2-0.1j", 0.5, 0.3, 0], [0, 0.3, -1, 0.2], [0.1, 0, 0.2, 0.4]],
            ],
        },
        "t0": 0.0,
        "window": [-0.5, 0.5],
        "target": {"kind": "index", "index": 2},
        "oracle": {"dt_ladder": [1e-2, 5e-3, 2.5e-3], "t_grid": {"center": 0.0, "halfwidth": 0.05, "points": 11}},
    },
    "additive-ramp": {
        "name": "additive-ramp",
        "interval": [0.0, 1.0],
        "n": 2,
        "grid_points": 100,
        "potential": {"kind": "constant", "value": [[0.5, 0.2], [0.2, -0.3]]},
        "family": {"type": "robin", "theta": [[[1.0, 0, 0, 0], [0, 0.5, 0, 0], [0, 0, 2.0, 0], [0, 0, 0, -0.3]]]},
        # V(t) = t diag(x, 1 - x)
        "additive": [None, {"kind": "polynomial", "value": [[[0, 1], [0, 0]], [[0, 0], [1, -1]]]}],
        "t0": 0.0,
        "window": [-0.5, 0.5],
        "target": {"kind": "index", "index": 1},
        "oracle": {"dt_ladder": [1e-2, 5e-3, 2.5e-3], "t_grid": {"center": 0.0, "halfwidth": 0.05, "points": 11}},
    },
}


def gallery_names() -> list[str]:
    return sorted(GALLERY)


def gallery_config(name: str) -> dict:
    """A fresh copy of the named configuration dictionary."""
    if name not in GALLERY:
        raise UnknownGallery(f"unknown gallery problem {name!r}; choose from {gallery_names()}")
    return copy.deepcopy(GALLERY[name])
