"""Built-in experiment configurations for the rate checks.

Each entry is a plain JSON-compatible dict accepted by
:meth:`aolreg.harness.ExperimentConfig.from_json`; ``configs/`` in the
repository holds the same dicts as files for the command line.
"""

from __future__ import annotations

import copy

POLY2 = {"kind": "poly", "p": 2}
N_RATE = [256, 512, 1024, 2048, 4096, 8192]

CONFIGS = {
    # 16 constants, eta outside their span; ERM runs on the two-member family
    # whose risk gap shrinks like 1/sqrt(n)
    "finite": {
        "world": {"kind": "finite", "M": 16, "k": 32, "seed": 0},
        "estimators": [
            {"kind": "aol", "epsilon": "vc"},
            {"kind": "skeleton", "epsilon": "vc"},
            {"kind": "erm", "world": {"kind": "two-point", "kappa": 0.1}},
        ],
        "n_grid": N_RATE,
        "replications": 200,
        "base_seed": 20240601,
        "regime": "finite",
    },
    "hypercube-risk": {
        "world": {"kind": "hypercube-risk", "p": 2},
        "estimators": [
            {"kind": "aol", "epsilon": POLY2},
            {"kind": "skeleton", "epsilon": POLY2},
            {"kind": "erm", "epsilon": POLY2},
        ],
        "n_grid": N_RATE,
        "replications": 100,
        "base_seed": 20240602,
        "regime": "poly",
        "p": 2,
    },
    "vc": {
        "world": {"kind": "vc", "d": 3, "family": "shifted"},
        "estimators": [
            {"kind": "aol", "epsilon": "vc", "target": -1.0},
            {"kind": "skeleton", "epsilon": "vc"},
            {"kind": "erm"},
        ],
        "n_grid": N_RATE,
        "replications": 100,
        "base_seed": 20240603,
        "regime": "parametric",
    },
    "hypercube-regret": {
        "world": {"kind": "hypercube-regret", "p": 2},
        "estimators": [
            {"kind": "aol", "epsilon": POLY2, "target": -1.0},
            {"kind": "aol", "label": "aol-ew", "epsilon": POLY2, "aggregator": "exp-weights", "target": -1.0},
            {"kind": "skeleton", "epsilon": POLY2, "target": -1.0},
            {"kind": "erm", "epsilon": POLY2, "target": -1.0},
        ],
        "n_grid": [16, 32, 64, 128, 256, 512],
        "replications": 200,
        "base_seed": 20240604,
    },
    "sparse-convex": {
        "world": {"kind": "dictionary", "M": 20, "k": 64, "s": 2, "seed": 0},
        "estimators": [{"kind": "sparse-convex"}],
        "n_grid": [512, 2048, 8192],
        "replications": 50,
        "base_seed": 20240605,
    },
}

# small enough to run twice inside the self-test
MINI_FINITE = dict(copy.deepcopy(CONFIGS["finite"]), n_grid=[256, 512, 1024, 2048], replications=25,
                   record_timing=False)


def get_config(name: str, **overrides) -> dict:
    if name not in CONFIGS:
        raise KeyError(f"unknown experiment {name!r}; known: {sorted(CONFIGS)}")
    cfg = copy.deepcopy(CONFIGS[name])
    cfg.update(overrides)
    return cfg
