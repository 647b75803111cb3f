"""Domain types and the exact queue/drift dynamics shared by the rest of the package.

Everything here is 64-bit floating point.  Per-slot law assertions use an
absolute tolerance of 1e-9 unless a caller overrides it; the queue update and
the drift definition themselves are checked exactly (they are identities, not
inequalities).
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass
from enum import Enum
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

LAW_TOL = 1e-9
PROB_TOL = 1e-12


class TieBreak(Enum):
    """How the per-slot minimization breaks exact ties between actions."""

    LOWEST_INDEX = "lowest-index"


@dataclass(frozen=True)
class ActionVector:
    """One feasible decision: a per-slot cost ``z0`` and the vector ``z`` of
    per-slot increments fed to the virtual queues (length L)."""

    z0: float
    z: tuple[float, ...]

    @property
    def dim(self) -> int:
        return 1 + len(self.z)


@dataclass(frozen=True)
class EventOutcome:
    """One point of the finite event support, with its probability and the
    finite, nonempty action set available when it occurs."""

    id: int
    probability: float
    actions: tuple[ActionVector, ...]

    def __post_init__(self) -> None:
        if not self.actions:
            raise ValueError(f"event {self.id}: action set must be nonempty")
        if not self.probability > 0.0:
            raise ValueError(f"event {self.id}: probability must be positive")


@dataclass(frozen=True)
class ProblemSpec:
    """A complete problem instance: finite i.i.d. event distribution, per-event
    finite action sets, the bounds ``z_max`` (on \\|z0\\|) and ``B`` (on the
    euclidean norm of z), and the trade-off weight ``V``.

    Construction validates every action against the declared bounds; all
    downstream constants rely on ``z_max`` and ``B`` being true bounds.
    """

    events: tuple[EventOutcome, ...]
    L: int
    z_max: float
    B: float
    V: float
    tie_break: TieBreak = TieBreak.LOWEST_INDEX

    def __post_init__(self) -> None:
        if self.L < 1:
            raise ValueError("L must be a positive integer")
        if not (self.z_max > 0 and self.B > 0 and self.V > 0):
            raise ValueError("z_max, B and V must all be positive")
        if not self.events:
            raise ValueError("event support must be nonempty")
        total = math.fsum(e.probability for e in self.events)
        if abs(total - 1.0) > PROB_TOL:
            raise ValueError(f"event probabilities sum to {total!r}, not 1")
        for e in self.events:
            for k, a in enumerate(e.actions):
                if a.dim != self.L + 1:
                    raise ValueError(
                        f"event {e.id} action {k}: dimension {a.dim} != L+1 = {self.L + 1}"
                    )
                if abs(a.z0) > self.z_max + PROB_TOL:
                    raise ValueError(
                        f"event {e.id} action {k}: |z0|={abs(a.z0)!r} exceeds z_max={self.z_max!r}"
                    )
                if math.sqrt(math.fsum(v * v for v in a.z)) > self.B + PROB_TOL:
                    raise ValueError(
                        f"event {e.id} action {k}: ||z|| exceeds B={self.B!r}"
                    )

    @cached_property
    def digest(self) -> str:
        """Content hash; identical specs hash identically, bit for bit."""
        h = hashlib.sha256()
        h.update(f"L={self.L};z_max={self.z_max!r};B={self.B!r};V={self.V!r};"
                 f"tie={self.tie_break.value};".encode())
        for e in self.events:
            h.update(f"e{e.id}:p={e.probability!r};".encode())
            for a in e.actions:
                h.update(f"a={a.z0!r},{','.join(repr(v) for v in a.z)};".encode())
        return h.hexdigest()

    @cached_property
    def max_actions(self) -> int:
        return max(len(e.actions) for e in self.events)

    def with_v(self, V: float) -> "ProblemSpec":
        """Same instance under a different trade-off weight."""
        return ProblemSpec(self.events, self.L, self.z_max, self.B, V, self.tie_break)


@dataclass
class VirtualQueueState:
    """The L nonnegative virtual queues and the current slot index (1-based).
    Queues start at zero on slot 1."""

    q: np.ndarray
    t: int = 1

    def __post_init__(self) -> None:
        self.q = np.asarray(self.q, dtype=np.float64)
        if self.t < 1:
            raise ValueError("slot index starts at 1")
        if np.any(self.q < 0.0):
            raise ValueError("virtual queues must be nonnegative")


@dataclass(frozen=True)
class SlotRecord:
    """Everything that happened on one slot: the observed event, the chosen
    action, the queue vector before and after, and the quadratic drift."""

    t: int
    event_id: int
    action_index: int
    action: ActionVector
    q_before: tuple[float, ...]
    q_after: tuple[float, ...]
    drift: float


@dataclass(frozen=True)
class PathTrace:
    """A full sample path, stored columnwise.

    ``q`` has T+1 rows: row t-1 is the queue vector at the start of slot t,
    row T is the final post-update vector.  Views of individual slots are
    materialized on demand through :meth:`record`.
    """

    spec_digest: str
    seed: int
    event_ids: np.ndarray     # (T,) int64
    action_indices: np.ndarray  # (T,) int64
    z0: np.ndarray            # (T,) float64
    z: np.ndarray             # (T, L) float64
    q: np.ndarray             # (T+1, L) float64
    drift: np.ndarray         # (T,) float64

    @property
    def T(self) -> int:
        return int(self.event_ids.shape[0])

    @property
    def L(self) -> int:
        return int(self.q.shape[1])

    @property
    def q_before(self) -> np.ndarray:
        return self.q[:-1]

    @property
    def q_after(self) -> np.ndarray:
        return self.q[1:]

    def record(self, t: int) -> SlotRecord:
        """The slot record for 1-based slot t."""
        if not 1 <= t <= self.T:
            raise ValueError(f"slot {t} outside 1..{self.T}")
        i = t - 1
        return SlotRecord(
            t=t,
            event_id=int(self.event_ids[i]),
            action_index=int(self.action_indices[i]),
            action=ActionVector(float(self.z0[i]), tuple(float(v) for v in self.z[i])),
            q_before=tuple(float(v) for v in self.q[i]),
            q_after=tuple(float(v) for v in self.q[i + 1]),
            drift=float(self.drift[i]),
        )

    def records(self) -> list[SlotRecord]:
        return [self.record(t) for t in range(1, self.T + 1)]


# ---------------------------------------------------------------------------
# scalar helpers with a pinned summation order
#
# The scalar path engine and the vectorized batch engine must agree bit for
# bit, so every float reduction below runs left to right over the constraint
# index.  Do not replace these with np.dot / np.sum.
# ---------------------------------------------------------------------------

def norm_sq(v: Sequence[float]) -> float:
    acc = 0.0
    for x in v:
        acc += x * x
    return acc


def weighted_sum(q: Sequence[float], z: Sequence[float]) -> float:
    acc = 0.0
    for a, b in zip(q, z):
        acc += a * b
    return acc


def queue_update(q: Sequence[float], z: Sequence[float]) -> np.ndarray:
    """One virtual-queue step: componentwise max{q + z, 0}."""
    qa = np.asarray(q, dtype=np.float64)
    za = np.asarray(z, dtype=np.float64)
    if qa.shape != za.shape:
        raise ValueError(f"dimension mismatch: {qa.shape} vs {za.shape}")
    if np.any(qa < 0.0):
        raise ValueError("queue vector must be nonnegative")
    return np.maximum(qa + za, 0.0)


def drift(q_before: Sequence[float], q_after: Sequence[float]) -> float:
    """Half the change of the squared euclidean queue norm across one slot."""
    qb = np.asarray(q_before, dtype=np.float64)
    qa = np.asarray(q_after, dtype=np.float64)
    if qb.shape != qa.shape:
        raise ValueError(f"dimension mismatch: {qb.shape} vs {qa.shape}")
    return 0.5 * (norm_sq(qa.tolist()) - norm_sq(qb.tolist()))


def drift_upper_bound_check(record: SlotRecord, B: float, tol: float = LAW_TOL) -> bool:
    """Per-slot assertion that the drift never exceeds B^2/2 plus the
    queue-weighted increment sum."""
    rhs = B * B / 2.0 + weighted_sum(record.q_before, record.action.z)
    return record.drift <= rhs + tol


def time_average(trace: PathTrace, which: str, index: int | None = None) -> float:
    """Prefix average over the whole trace.

    ``which`` is one of ``"objective"`` (mean of z0), ``"constraint"`` (mean of
    z_index, 1-based), or ``"queue_sum"`` (mean over slots of the sum of the
    queue vector at the start of each slot).
    """
    T = trace.T
    if T < 1:
        raise ValueError("empty trace")
    if which == "objective":
        return float(np.sum(trace.z0) / T)
    if which == "constraint":
        if index is None or not 1 <= index <= trace.L:
            raise ValueError(f"constraint index must be in 1..{trace.L}")
        return float(np.sum(trace.z[:, index - 1]) / T)
    if which == "queue_sum":
        return float(np.sum(trace.q_before) / T)
    raise ValueError(f"unknown time average {which!r}")


def verify_trace_dynamics(trace: PathTrace, B: float, tol: float = LAW_TOL) -> list[str]:
    """Check the deterministic per-slot laws on a stored trace.

    Returns a list of human-readable violation strings, empty when the trace
    is internally consistent: exact queue update, queue nonnegativity, exact
    drift values, the drift upper bound, and the step bound
    ``| ||Q[t+1]|| - ||Q[t]|| | <= B``.
    """
    problems: list[str] = []
    qb, qa, z = trace.q_before, trace.q_after, trace.z
    # max{u,0} == (u + |u|)/2 exactly in IEEE arithmetic; this recomputation
    # is independent of how the trace was produced.
    u = qb + z
    expect = (u + np.abs(u)) / 2.0
    bad = np.nonzero(~np.all(qa == expect, axis=1))[0]
    for i in bad[:5]:
        problems.append(f"slot {i + 1}: queue update not exact")
    if np.any(qa < 0.0):
        problems.append("negative queue component")
    nb = np.sqrt(np.einsum("ij,ij->i", qb, qb))
    na = np.sqrt(np.einsum("ij,ij->i", qa, qa))
    step = np.abs(na - nb)
    bad = np.nonzero(step > B + tol)[0]
    for i in bad[:5]:
        problems.append(f"slot {i + 1}: queue norm step {step[i]!r} exceeds B")
    dr = 0.5 * (na * na - nb * nb)
    bad = np.nonzero(np.abs(dr - trace.drift) > tol)[0]
    for i in bad[:5]:
        problems.append(f"slot {i + 1}: stored drift differs from recomputed value")
    rhs = B * B / 2.0 + np.einsum("ij,ij->i", qb, z)
    bad = np.nonzero(trace.drift > rhs + tol)[0]
    for i in bad[:5]:
        problems.append(f"slot {i + 1}: drift exceeds quadratic upper bound")
    return problems


# ---------------------------------------------------------------------------
# CSV serialization
# ---------------------------------------------------------------------------

def trace_csv_header(L: int) -> str:
    zcols = ",".join(f"z_{l}" for l in range(1, L + 1))
    qcols = ",".join(f"q_{l}" for l in range(1, L + 1))
    return f"t,event_id,action_index,z0,{zcols},{qcols},drift"


def write_trace_csv(trace: PathTrace, path: str) -> None:
    """One row per slot; queue columns hold the vector at the start of the
    slot.  Floats use shortest round-trip decimals."""
    L = trace.L
    ev = trace.event_ids.tolist()
    ai = trace.action_indices.tolist()
    z0 = trace.z0.tolist()
    z = trace.z.tolist()
    qb = trace.q_before.tolist()
    dr = trace.drift.tolist()
    with open(path, "w", encoding="utf-8") as f:
        f.write(trace_csv_header(L) + "\n")
        out: list[str] = []
        for i in range(trace.T):
            row = [str(i + 1), str(ev[i]), str(ai[i]), repr(z0[i])]
            row.extend(repr(v) for v in z[i])
            row.extend(repr(v) for v in qb[i])
            row.append(repr(dr[i]))
            out.append(",".join(row))
            if len(out) >= 65536:
                f.write("\n".join(out) + "\n")
                out.clear()
        if out:
            f.write("\n".join(out) + "\n")


def read_trace_csv(path: str, spec_digest: str = "", seed: int = 0) -> PathTrace:
    """Rebuild a trace from its CSV form.  The final post-update queue vector
    is reconstructed through the exact queue update."""
    with open(path, "r", encoding="utf-8") as f:
        header = f.readline().strip()
        ncol = len(header.split(","))
        L = (ncol - 5) // 2
        if trace_csv_header(L) != header:
            raise ValueError(f"unrecognized trace header {header!r}")
        raw = np.loadtxt(f, delimiter=",", dtype=np.float64, ndmin=2)
    T = raw.shape[0]
    z = raw[:, 4:4 + L]
    qb = raw[:, 4 + L:4 + 2 * L]
    q = np.empty((T + 1, L), dtype=np.float64)
    q[:T] = qb
    q[T] = queue_update(qb[T - 1], z[T - 1])
    return PathTrace(
        spec_digest=spec_digest,
        seed=seed,
        event_ids=raw[:, 1].astype(np.int64),
        action_indices=raw[:, 2].astype(np.int64),
        z0=raw[:, 3].copy(),
        z=z.copy(),
        q=q,
        drift=raw[:, -1].copy(),
    )


def build_trace_from_z(spec_digest: str, z0: Iterable[float], z_rows: Iterable[Sequence[float]],
                       seed: int = 0) -> PathTrace:
    """Assemble a dynamics-consistent trace directly from an increment
    sequence.  Used by tests and tooling; event and action columns are
    filled with zeros."""
    z_arr = np.asarray(list(z_rows), dtype=np.float64)
    z0_arr = np.asarray(list(z0), dtype=np.float64)
    if z_arr.ndim == 1:
        z_arr = z_arr.reshape(0, 1)
    T, L = z_arr.shape
    q = np.zeros((T + 1, L), dtype=np.float64)
    dr = np.zeros(T, dtype=np.float64)
    for i in range(T):
        q[i + 1] = np.maximum(q[i] + z_arr[i], 0.0)
        dr[i] = 0.5 * (norm_sq(q[i + 1].tolist()) - norm_sq(q[i].tolist()))
    return PathTrace(spec_digest, seed, np.zeros(T, dtype=np.int64),
                     np.zeros(T, dtype=np.int64), z0_arr, z_arr, q, dr)
