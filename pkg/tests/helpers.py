"""Shared generators for randomized oracle cross-checks."""

import math

import numpy as np

from dpp_lab import ActionVector, EventOutcome, ProblemSpec
from dpp_lab.oracle import grid_points_budget

# event/action shapes whose joint 1/200 grid stays exhaustively enumerable
_SHAPES = (
    (4,),
    (3,),
    (2,),
    (3, 2),
    (2, 2),
    (2, 2, 2),
)
GRID_BUDGET = 1 << 24


def random_small_instance(rng: np.random.Generator, L: int | None = None) -> ProblemSpec:
    """A feasible random instance with at most 3 events, at most 4 actions,
    and at most 2 constraints.  Action 0 of every event points every
    constraint downward, so a strictly slack stationary policy exists."""
    L = int(rng.integers(1, 3)) if L is None else L
    shape = _SHAPES[rng.integers(0, len(_SHAPES))]
    weights = rng.integers(1, 20, size=len(shape)).astype(np.float64)
    # probabilities as exact dyadic-ish ratios of small ints summed via fsum
    probs = weights / math.fsum(weights.tolist())
    probs[-1] = 1.0 - math.fsum(probs[:-1].tolist())
    events = []
    for eid, (n_actions, p) in enumerate(zip(shape, probs)):
        actions = []
        for k in range(n_actions):
            z0 = float(np.round(rng.uniform(0.0, 1.0), 3))
            if k == 0:
                z = rng.uniform(-1.0, -0.2, size=L)
            else:
                z = rng.uniform(-1.0, 1.0, size=L)
            z = tuple(float(np.round(v, 3)) for v in z)
            actions.append(ActionVector(z0, z))
        events.append(EventOutcome(id=eid, probability=float(p), actions=tuple(actions)))
    spec = ProblemSpec(events=tuple(events), L=L, z_max=1.0,
                       B=math.sqrt(float(L)), V=1.0)
    assert grid_points_budget(spec, 200) <= GRID_BUDGET
    return spec
