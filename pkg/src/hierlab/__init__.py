"""hierlab: a desk-scale laboratory for pulling apart why hierarchy helps RL.

The package provides 2-D point-mass analogs of classic hierarchical-RL
benchmark tasks, flat and two-level agents built on a small numpy autodiff
core, hierarchy-inspired exploration methods, a shadow-agent training
protocol, and a seeded experiment harness that writes CSV learning curves
and SVG plots.
"""

from . import agents_flat, agents_hrl, approx, envs, explore, harness, replay, shadow
from .harness import ExperimentConfig, evaluate, load_config, run_experiment, sweep
from .rngs import substream

__version__ = "0.1.0"

__all__ = [
    "agents_flat", "agents_hrl", "approx", "envs", "explore", "harness", "replay",
    "shadow", "ExperimentConfig", "evaluate", "load_config", "run_experiment",
    "sweep", "substream", "__version__",
]
