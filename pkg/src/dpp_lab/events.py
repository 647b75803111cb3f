"""Seeded i.i.d. event sampling and ready-made problem builders.

Sampling is counter based: the draw for slot t is a pure function of
(seed, t), so any slot of any path can be regenerated in isolation and
batches can be split across workers without coordination.  The generator is
the splitmix64 output function evaluated at counter t, which is bit-exact
across platforms.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .core import ActionVector, EventOutcome, ProblemSpec

_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15
_STREAM_SALT = 0x6A09E667F3BCC909  # domain separation for derived stream seeds


def mix64(x: int) -> int:
    """splitmix64 finalizer."""
    x &= _MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _MASK64
    return x ^ (x >> 31)


def u64_at(seed: int, n: int) -> int:
    """The n-th 64-bit output of the stream keyed by ``seed``."""
    return mix64((seed + n * _GOLDEN) & _MASK64)


def uniform_at(seed: int, n: int) -> float:
    """Uniform double in [0, 1), pure in (seed, n)."""
    return (u64_at(seed, n) >> 11) * 2.0 ** -53


def derive_seed(master: int, stream_index: int) -> int:
    """Seed for an independent substream (one per Monte Carlo path)."""
    return u64_at(mix64(master ^ _STREAM_SALT), stream_index)


def _mix64_block(x: np.ndarray) -> np.ndarray:
    with np.errstate(over="ignore"):
        x = x ^ (x >> np.uint64(30))
        x = x * np.uint64(0xBF58476D1CE4E5B9)
        x = x ^ (x >> np.uint64(27))
        x = x * np.uint64(0x94D049BB133111EB)
        return x ^ (x >> np.uint64(31))


def u64_block(seed: int, start: int, count: int) -> np.ndarray:
    """Outputs ``start .. start+count-1`` of the stream, vectorized; matches
    :func:`u64_at` bit for bit."""
    idx = np.arange(start, start + count, dtype=np.uint64)
    with np.errstate(over="ignore"):
        state = np.uint64(seed & _MASK64) + idx * np.uint64(_GOLDEN)
    return _mix64_block(state)


def uniform_block(seed: int, start: int, count: int) -> np.ndarray:
    return (u64_block(seed, start, count) >> np.uint64(11)) * 2.0 ** -53


def u64_across(seeds: np.ndarray, n: int) -> np.ndarray:
    """Output n of many streams at once (one per path in a lockstep batch)."""
    with np.errstate(over="ignore"):
        state = seeds + np.uint64((n * _GOLDEN) & _MASK64)
    return _mix64_block(state)


def uniform_across(seeds: np.ndarray, n: int) -> np.ndarray:
    return (u64_across(seeds, n) >> np.uint64(11)) * 2.0 ** -53


@dataclass
class EventStream:
    """Replayable event source for one path.

    ``sample(t)`` is a pure function of (seed, t); the cursor only serves
    sequential consumption via :meth:`next_id`.
    """

    spec_digest: str
    seed: int
    cursor: int = 1
    _cum: np.ndarray = field(default=None, repr=False)  # type: ignore[assignment]

    def sample(self, t: int) -> int:
        if t < 1:
            raise ValueError("slot index starts at 1")
        u = uniform_at(self.seed, t)
        return int(min(np.searchsorted(self._cum, u, side="right"), len(self._cum) - 1))

    def next_id(self) -> int:
        out = self.sample(self.cursor)
        self.cursor += 1
        return out


def event_stream(spec: ProblemSpec, seed: int) -> EventStream:
    return EventStream(spec_digest=spec.digest, seed=seed,
                       _cum=cumulative_probabilities(spec))


def sample(stream: EventStream, t: int) -> int:
    return stream.sample(t)


def cumulative_probabilities(spec: ProblemSpec) -> np.ndarray:
    return np.cumsum(np.asarray([e.probability for e in spec.events], dtype=np.float64))


def sample_block(spec: ProblemSpec, seed: int, T: int) -> np.ndarray:
    """Event ids for slots 1..T in one vectorized call."""
    cum = cumulative_probabilities(spec)
    u = uniform_block(seed, 1, T)
    ids = np.searchsorted(cum, u, side="right")
    return np.minimum(ids, len(cum) - 1).astype(np.int64)


# ---------------------------------------------------------------------------
# builders
# ---------------------------------------------------------------------------

_SERVICE_OPTIONS = ((1, 1, 0), (1, 0, 1), (0, 1, 1))
_SERVICE_COSTS = (1.0, 1.0, 2.0)


def build_server_scheduling_spec(arrival_means=(0.5, 0.7, 0.4), V: float = 10.0) -> ProblemSpec:
    """The 3-queue / 2-server benchmark.

    Eight event outcomes enumerate the Bernoulli arrival triples (first queue
    is the most significant bit) with product probabilities.  Each event
    offers the three two-server service patterns; serving pattern k costs
    ``_SERVICE_COSTS[k]`` units and the constraint increments are
    arrivals minus service.
    """
    means = tuple(float(m) for m in arrival_means)
    if len(means) != 3 or any(not 0.0 < m < 1.0 for m in means):
        raise ValueError("arrival means must be three values strictly inside (0, 1)")
    events = []
    for eid, bits in enumerate(itertools.product((1, 0), repeat=3)):
        # id 0 is a=(1,1,1), id 7 is a=(0,0,0): id = 4*(1-a1)+2*(1-a2)+(1-a3)
        p = 1.0
        for a, m in zip(bits, means):
            p *= m if a == 1 else 1.0 - m
        actions = tuple(
            ActionVector(cost, tuple(float(a - b) for a, b in zip(bits, srv)))
            for cost, srv in zip(_SERVICE_COSTS, _SERVICE_OPTIONS)
        )
        events.append(EventOutcome(id=eid, probability=p, actions=actions))
    return ProblemSpec(events=tuple(events), L=3, z_max=2.0, B=math.sqrt(3.0), V=float(V))


def build_single_queue_spec(arrival_mean: float = 0.5, V: float = 10.0,
                            serve_cost: float = 1.0) -> ProblemSpec:
    """One queue, one server that can be rested.

    Two events (arrival / no arrival); two actions per event: idle at zero
    cost, or serve one packet at ``serve_cost``.  The single constraint is
    arrivals minus service.
    """
    m = float(arrival_mean)
    if not 0.0 < m < 1.0:
        raise ValueError("arrival mean must lie strictly inside (0, 1)")
    if serve_cost <= 0.0:
        raise ValueError("serve cost must be positive")
    events = []
    for eid, a in enumerate((1, 0)):
        p = m if a == 1 else 1.0 - m
        actions = (
            ActionVector(0.0, (float(a),)),               # idle
            ActionVector(float(serve_cost), (float(a - 1),)),  # serve
        )
        events.append(EventOutcome(id=eid, probability=p, actions=actions))
    return ProblemSpec(events=tuple(events), L=1, z_max=float(serve_cost), B=1.0, V=float(V))


BUILTIN_SPECS = {
    "server-scheduling-3x2": build_server_scheduling_spec,
    "single-queue-serve-idle": build_single_queue_spec,
}


def builtin_spec(name: str, V: float) -> ProblemSpec:
    try:
        builder = BUILTIN_SPECS[name]
    except KeyError:
        raise ValueError(f"unknown builtin problem {name!r}; "
                         f"choices: {sorted(BUILTIN_SPECS)}") from None
    return builder(V=V)
