"""The per-slot decision rule and the single-path simulation loop.

The controller sees only the realized event and the current queue vector,
never the event probabilities; ground-truth quantities that need the
distribution live in :mod:`dpp_lab.oracle`.

Float evaluation order is pinned: an action's score is ``V*z0`` followed by
``+= q[l]*z[l]`` for l ascending.  The vectorized batch engine replays the
same order so the two engines agree bit for bit.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import (ActionVector, EventOutcome, PathTrace, ProblemSpec,
                   SlotRecord, TieBreak, VirtualQueueState, norm_sq)
from .events import sample_block

CHAOS_MODES = ("skip-minimization", "worst-action")


def action_score(q, action: ActionVector, V: float) -> float:
    """The quantity minimized each slot: V*z0 plus the queue-weighted sum of
    constraint increments."""
    acc = V * action.z0
    for l, zl in enumerate(action.z):
        acc += q[l] * zl
    return acc


def select_action(q, event: EventOutcome, V: float,
                  tie_break: TieBreak = TieBreak.LOWEST_INDEX) -> tuple[int, float]:
    """Index and score of the minimizing action; exact score ties go to the
    lowest index."""
    if tie_break is not TieBreak.LOWEST_INDEX:
        raise ValueError(f"unsupported tie break {tie_break!r}")
    best_k = 0
    best = action_score(q, event.actions[0], V)
    for k in range(1, len(event.actions)):
        v = action_score(q, event.actions[k], V)
        if v < best:
            best, best_k = v, k
    return best_k, best


def _chaos_pick(mode: str, scores: list[float]) -> int:
    if mode == "skip-minimization":
        return 0
    if mode == "worst-action":
        best_k, best = 0, scores[0]
        for k, v in enumerate(scores):
            if v > best:
                best, best_k = v, k
        return best_k
    raise ValueError(f"unknown chaos mode {mode!r}; choices: {CHAOS_MODES}")


@dataclass
class DppState:
    """Mutable per-path state: the virtual queues plus the owning spec."""

    queues: VirtualQueueState
    spec: ProblemSpec

    def __post_init__(self) -> None:
        if self.queues.q.shape != (self.spec.L,):
            raise ValueError("queue dimension does not match spec")


def new_state(spec: ProblemSpec) -> DppState:
    return DppState(VirtualQueueState(np.zeros(spec.L)), spec)


def step(state: DppState, event_id: int, t: int | None = None) -> SlotRecord:
    """Resolve one slot: pick the minimizing action, update the queues,
    advance the state, and return the full record."""
    spec = state.spec
    if not 0 <= event_id < len(spec.events):
        raise ValueError(f"unknown event id {event_id}")
    if t is None:
        t = state.queues.t
    event = spec.events[event_id]
    q = state.queues.q.tolist()
    k, _ = select_action(q, event, spec.V, spec.tie_break)
    action = event.actions[k]
    q_after = [max(qc + zc, 0.0) for qc, zc in zip(q, action.z)]
    d = 0.5 * (norm_sq(q_after) - norm_sq(q))
    state.queues.q = np.asarray(q_after)
    state.queues.t = t + 1
    return SlotRecord(t=t, event_id=event_id, action_index=k, action=action,
                      q_before=tuple(q), q_after=tuple(q_after), drift=d)


def run_path(spec: ProblemSpec, seed: int, T: int, chaos: str | None = None) -> PathTrace:
    """Simulate one path of length T from empty queues.

    Deterministic in (spec, seed, T): event draws are pure functions of
    (seed, t) and the decision rule is deterministic.  ``chaos`` switches in a
    deliberately broken decision rule for negative-control testing.
    """
    if T < 1:
        raise ValueError("T must be at least 1")
    L, V = spec.L, spec.V
    ids = sample_block(spec, seed, T)
    id_list = ids.tolist()
    # per event: ([V*z0 ...], [z tuples ...]) with V folded in once
    tables = []
    for e in spec.events:
        tables.append(([V * a.z0 for a in e.actions],
                       [a.z for a in e.actions],
                       [a.z0 for a in e.actions]))
    q = [0.0] * L
    nb2 = 0.0  # running ||Q[t]||^2
    rng_l = range(L)
    a_idx: list[int] = []
    z0_col: list[float] = []
    z_cols: list[list[float]] = [[] for _ in rng_l]
    q_cols: list[list[float]] = [[0.0] for _ in rng_l]
    drifts: list[float] = []
    for t in range(T):
        vz0s, zs, z0s = tables[id_list[t]]
        if chaos is None:
            best_k = 0
            best = vz0s[0]
            zrow = zs[0]
            for l in rng_l:
                best += q[l] * zrow[l]
            for k in range(1, len(vz0s)):
                v = vz0s[k]
                zrow = zs[k]
                for l in rng_l:
                    v += q[l] * zrow[l]
                if v < best:
                    best, best_k = v, k
        else:
            scores = []
            for k in range(len(vz0s)):
                v = vz0s[k]
                zrow = zs[k]
                for l in rng_l:
                    v += q[l] * zrow[l]
                scores.append(v)
            best_k = _chaos_pick(chaos, scores)
        zrow = zs[best_k]
        na2 = 0.0
        for l in rng_l:
            nq = q[l] + zrow[l]
            if nq < 0.0:
                nq = 0.0
            q[l] = nq
            na2 += nq * nq
            q_cols[l].append(nq)
            z_cols[l].append(zrow[l])
        drifts.append(0.5 * (na2 - nb2))
        nb2 = na2
        a_idx.append(best_k)
        z0_col.append(z0s[best_k])
    q_arr = np.empty((T + 1, L), dtype=np.float64)
    for l in rng_l:
        q_arr[:, l] = q_cols[l]
    z_arr = np.empty((T, L), dtype=np.float64)
    for l in rng_l:
        z_arr[:, l] = z_cols[l]
    return PathTrace(
        spec_digest=spec.digest,
        seed=seed,
        event_ids=ids,
        action_indices=np.asarray(a_idx, dtype=np.int64),
        z0=np.asarray(z0_col, dtype=np.float64),
        z=z_arr,
        q=q_arr,
        drift=np.asarray(drifts, dtype=np.float64),
    )


def verify_minimality(spec: ProblemSpec, trace: PathTrace) -> list[str]:
    """Re-scan every visited action set: no action may score strictly below
    the one recorded.  Comparison is exact (tolerance zero) because the scan
    reproduces the engine's float expressions."""
    problems: list[str] = []
    V = spec.V
    qb = trace.q_before
    for i in range(trace.T):
        event = spec.events[int(trace.event_ids[i])]
        q = qb[i].tolist()
        chosen = int(trace.action_indices[i])
        chosen_score = action_score(q, event.actions[chosen], V)
        for k, a in enumerate(event.actions):
            if action_score(q, a, V) < chosen_score:
                problems.append(
                    f"slot {i + 1}: action {k} scores below recorded action {chosen}")
                break
        if len(problems) >= 5:
            break
    return problems
