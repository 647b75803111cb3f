"""Closed-form constants, tail bounds, convergence times, and the derived
per-path processes used by the verification harness.

All logarithms are natural: the exponential-moment machinery behind the
queue tail bound is base e, and every constant here must stay consistent
with it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, asdict

import numpy as np

from .core import LAW_TOL, PathTrace
from .oracle import SlacknessError


class ConsistencyError(Exception):
    """A computed constant left its valid range; upstream inputs are bad."""


@dataclass(frozen=True)
class BoundConstants:
    """Every closed-form constant the tail and convergence bounds need.

    C0:  queue-norm threshold multiplier; above C0*V the queue norm drifts
         down by at least xi/2 per slot in expectation.
    r:   exponent of the queue-norm moment generating bound.
    rho: per-slot contraction factor of that bound, in (0, 1).
    D:   ceiling of E[exp(r * ||Q[t]||)], uniform over t.
    c1:  truncation level for the stopped process.
    c2:  one-step difference bound of the stopped process.
    C:   multiplier of the multi-constraint deviation bound.
    C2:  multiplier of the single-constraint deviation bound.
    """

    C0: float
    r: float
    rho: float
    D: float
    c1: float
    c2: float
    C: float
    C2: float
    xi: float
    B: float
    z_max: float
    V: float

    def to_json_dict(self) -> dict:
        return asdict(self)


def compute_constants(spec_or_params, xi: float, c1: float) -> BoundConstants:
    """Evaluate every constant from (z_max, B, V) and the slackness margin xi.

    ``spec_or_params`` is either a ProblemSpec or a (z_max, B, V) triple.
    Fails closed: any formula leaving its valid range raises instead of
    returning nonsense.
    """
    if hasattr(spec_or_params, "z_max"):
        z_max, B, V = spec_or_params.z_max, spec_or_params.B, spec_or_params.V
    else:
        z_max, B, V = spec_or_params
    if not 0.0 < xi <= B:
        raise SlacknessError(f"xi must lie in (0, B]; got {xi!r} with B={B!r}")
    if not c1 > 0.0:
        raise ValueError("truncation level c1 must be positive")
    C0 = (4.0 * z_max + B * B / V - xi * xi / (4.0 * V)) / xi
    if not C0 > 0.0:
        raise ConsistencyError(f"C0={C0!r} must be positive")
    r = 3.0 * xi / (6.0 * B * B + B * xi)
    if not r > 0.0:
        raise ConsistencyError(f"r={r!r} must be positive")
    rho = 1.0 - r * xi / 4.0
    if not 0.0 < rho < 1.0:
        raise ConsistencyError(f"rho={rho!r} left (0, 1)")
    log_D = (math.log(4.0 * math.exp(r * B) + r * xi - 4.0)
             + r * C0 * V - math.log(r * xi))
    if log_D > 700.0:  # e^700 is near the float64 ceiling; fail closed
        raise ConsistencyError(
            f"moment ceiling exp({log_D:.1f}) exceeds float64 range; "
            "every tail bound would be vacuous at these parameters")
    D = math.exp(log_D)
    if not D >= 1.0:
        raise ConsistencyError(f"D={D!r} must be at least 1")
    c2 = 2.0 * V * z_max + B * c1
    C2 = 2.0 * z_max + C0 * B
    C = 2.0 * math.sqrt(2.0) * (
        2.0 * z_max
        + B / (r * V)
        + (B / (r * V)) * math.log((8.0 * math.exp(r * B) + 2.0 * r * xi - 8.0) / (r * xi))
        + B * C0
    )
    return BoundConstants(C0=C0, r=r, rho=rho, D=D, c1=c1, c2=c2, C=C, C2=C2,
                          xi=xi, B=B, z_max=z_max, V=V)


def default_truncation_level(spec_or_params, xi: float, T: int, delta: float) -> float:
    """The truncation level that splits the failure budget evenly between the
    concentration term and the queue excursion term: (1/r) * ln(2 D T / delta)."""
    probe = compute_constants(spec_or_params, xi, 1.0)
    return math.log(2.0 * probe.D * T / delta) / probe.r


def constants_for_horizon(spec_or_params, xi: float, T: int, delta: float) -> BoundConstants:
    """Constants with c1 at its default calibration for horizon T and budget delta."""
    c1 = default_truncation_level(spec_or_params, xi, T, delta)
    return compute_constants(spec_or_params, xi, c1)


# ---------------------------------------------------------------------------
# derived per-path processes
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DerivedProcesses:
    """Per-path processes materialized from a trace.

    x[t] accumulates V*(z0 - z_opt) plus the queue-weighted increments; it is
    a supermartingale under a correct controller.  tau is the first slot (if
    any, within 1..T) whose starting queue norm exceeds c1; y freezes x at
    tau-1.  For single-constraint traces, g replaces the queue weight by its
    value clipped at C0*V, and visit_slots lists every slot t in 1..T+1 whose
    queue value sits inside [0, C0*V] (consecutive slots both count).
    """

    x: np.ndarray                 # (T+1,)
    tau: int | None
    y: np.ndarray                 # (T+1,)
    g: np.ndarray | None          # (T+1,) when L == 1
    visit_slots: np.ndarray | None

    @property
    def x_increments(self) -> np.ndarray:
        return np.diff(self.x)

    @property
    def y_increments(self) -> np.ndarray:
        return np.diff(self.y)

    @property
    def g_increments(self) -> np.ndarray | None:
        return None if self.g is None else np.diff(self.g)


def build_processes(trace: PathTrace, z_opt: float, constants: BoundConstants) -> DerivedProcesses:
    T, L = trace.T, trace.L
    V = constants.V
    qb = trace.q_before
    dx = V * (trace.z0 - z_opt) + np.einsum("ij,ij->i", qb, trace.z)
    x = np.concatenate(([0.0], np.cumsum(dx)))
    qnorm = np.sqrt(np.einsum("ij,ij->i", qb, qb))
    exceed = np.nonzero(qnorm > constants.c1)[0]
    tau = int(exceed[0]) + 1 if exceed.size else None
    if tau is None:
        y = x.copy()
    else:
        y = x.copy()
        y[tau:] = x[tau - 1]
    g = None
    visits = None
    if L == 1:
        cap = constants.C0 * V
        q1 = trace.q[:, 0]
        dg = V * (trace.z0 - z_opt) + np.minimum(q1[:-1], cap) * trace.z[:, 0]
        g = np.concatenate(([0.0], np.cumsum(dg)))
        visits = np.nonzero(q1 <= cap)[0] + 1  # slot numbers 1..T+1
    return DerivedProcesses(x=x, tau=tau, y=y, g=g, visit_slots=visits)


# ---------------------------------------------------------------------------
# bounds and convergence times
# ---------------------------------------------------------------------------

def azuma_bound(T: int, c2: float, lam: float) -> float:
    """Tail bound exp(-lam^2 / (2 T c2^2)) for a zero-start supermartingale
    with one-step differences bounded by c2, clamped to [0, 1]."""
    if T < 1:
        raise ValueError("T must be at least 1")
    if c2 <= 0.0 or lam <= 0.0:
        raise ValueError("c2 and lambda must be positive")
    return min(1.0, math.exp(-lam * lam / (2.0 * T * c2 * c2)))


def queue_tail_bound(constants: BoundConstants, c1: float) -> float:
    """Per-slot bound on Pr(||Q[t]|| > c1), clamped to [0, 1]."""
    if c1 <= 0.0:
        raise ValueError("c1 must be positive")
    return min(1.0, constants.D * math.exp(-constants.r * c1))


def queue_tail_vacuity_crossover(constants: BoundConstants) -> float:
    """The c1 below which the queue tail bound says nothing (bound >= 1)."""
    return math.log(constants.D) / constants.r


def xtail_bound(constants: BoundConstants, T: int, lam: float) -> float:
    """Deviation bound for the cumulative process at horizon T: the stopped
    process tail plus T times the per-slot queue excursion probability."""
    per_slot = constants.D * math.exp(-constants.r * constants.c1)
    return min(1.0, azuma_bound(T, constants.c2, lam) + T * per_slot)


def calibrated_deviation_level(constants: BoundConstants, T: int, delta: float) -> float:
    """The deviation level at which the stopped-process term equals delta/2."""
    return math.sqrt(2.0 * T * math.log(2.0 / delta)) * constants.c2


def g_tail_bound(constants: BoundConstants, T: int, delta: float) -> float:
    """Threshold lambda = 2 C2 V sqrt(T) ln(1/delta); the claim under test is
    Pr(G[T] >= lambda) <= delta."""
    if T < 1:
        raise ValueError("T must be at least 1")
    if not 0.0 < delta < 1.0:
        raise ValueError("delta must lie in (0, 1)")
    return 2.0 * constants.C2 * constants.V * math.sqrt(T) * math.log(1.0 / delta)


def convergence_time_multi(epsilon: float, delta: float) -> int:
    """Horizon after which the multi-constraint guarantees kick in:
    ceil((1/eps^2) * max{ln^2(1/eps) ln(2/delta), ln^3(2/delta)})."""
    if epsilon <= 0.0:
        raise ValueError("epsilon must be positive")
    if not 0.0 < delta < 1.0:
        raise ValueError("delta must lie in (0, 1)")
    le = math.log(1.0 / epsilon)
    ld = math.log(2.0 / delta)
    return math.ceil(max(le * le * ld, ld ** 3) / (epsilon * epsilon))


def convergence_time_single(epsilon: float, delta: float,
                            constants: BoundConstants) -> int:
    """Single-constraint horizon ceil((1/eps^2) ln^2(1/delta)).  Only valid
    for epsilon <= C0/B, which is the regime where the deterministic
    truncation argument applies."""
    if not 0.0 < delta < 1.0:
        raise ValueError("delta must lie in (0, 1)")
    limit = constants.C0 / constants.B
    if not 0.0 < epsilon <= limit:
        raise ValueError(f"epsilon must lie in (0, {limit!r}]; got {epsilon!r}")
    ld = math.log(1.0 / delta)
    return math.ceil(ld * ld / (epsilon * epsilon))


def deviation_over_horizon(constants: BoundConstants, T: int, delta: float) -> float:
    """The multi-constraint per-slot deviation level
    C * max{ln T * ln^(1/2)(2/delta), ln^(3/2)(2/delta)} / sqrt(T)."""
    ld = math.log(2.0 / delta)
    num = max(math.log(T) * math.sqrt(ld), ld ** 1.5)
    return constants.C * num / math.sqrt(T)


def chained_deviation_check(constants: BoundConstants, epsilon: float, delta: float,
                            rel_tol: float = 1e-9) -> tuple[float, float, bool]:
    """Substituting the multi-constraint horizon into the deviation level must
    come out at most 6*C*epsilon.  Returns (lhs, rhs, ok)."""
    T = convergence_time_multi(epsilon, delta)
    lhs = deviation_over_horizon(constants, T, delta)
    rhs = 6.0 * constants.C * epsilon
    return lhs, rhs, lhs <= rhs * (1.0 + rel_tol)


# ---------------------------------------------------------------------------
# single-constraint telescoping checks
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TelescopingReport:
    nJ: int
    lhs_gap: float
    bound: float
    avg_truncated_sum: float
    avg_lower_bound: float
    passed: bool


def check_telescoping(trace: PathTrace, constants: BoundConstants,
                      tol: float = LAW_TOL) -> TelescopingReport:
    """Evaluate the two truncated-sum inequalities on a single-constraint path.

    nJ is the last slot in 1..T+1 whose queue value lies in [0, C0*V].  The
    partial truncated sum up to nJ-1 must stay within (5/2) B^2 (nJ - 1) of
    half the squared queue value at nJ, and the full-horizon truncated sum
    average must stay above -(5/2) B^2.
    """
    if trace.L != 1:
        raise ValueError("telescoping checks need a single-constraint trace")
    cap = constants.C0 * constants.V
    if constants.V < constants.B / constants.C0:
        raise ValueError("requires V >= B/C0")
    q1 = trace.q[:, 0]
    z1 = trace.z[:, 0]
    T = trace.T
    terms = np.minimum(q1[:-1], cap) * z1
    visits = np.nonzero(q1 <= cap)[0]  # indices into q1; slot number is index+1
    nJ = int(visits[-1]) + 1 if visits.size else 1
    partial = float(np.sum(terms[:nJ - 1]))
    lhs_gap = abs(partial - 0.5 * float(q1[nJ - 1]) ** 2)
    bound = 2.5 * constants.B ** 2 * (nJ - 1)
    avg = float(np.sum(terms)) / T
    lower = -2.5 * constants.B ** 2
    passed = (lhs_gap <= bound + tol) and (avg >= lower - tol)
    return TelescopingReport(nJ=nJ, lhs_gap=lhs_gap, bound=bound,
                             avg_truncated_sum=avg, avg_lower_bound=lower, passed=passed)


def verify_difference_bounds(proc: DerivedProcesses, constants: BoundConstants,
                             tol: float = LAW_TOL) -> list[str]:
    """Per-path difference-bound laws: |dY| <= c2 always, and when the
    truncated process exists, |dG| <= 2 V z_max + C0 V B."""
    problems: list[str] = []
    dy = np.abs(proc.y_increments)
    bad = np.nonzero(dy > constants.c2 + tol)[0]
    for i in bad[:5]:
        problems.append(f"slot {i + 1}: |dY|={dy[i]!r} exceeds c2={constants.c2!r}")
    dg = proc.g_increments
    if dg is not None:
        cap = 2.0 * constants.V * constants.z_max + constants.C0 * constants.V * constants.B
        bad = np.nonzero(np.abs(dg) > cap + tol)[0]
        for i in bad[:5]:
            problems.append(f"slot {i + 1}: |dG| exceeds {cap!r}")
    return problems


def verify_stopping_consistency(proc: DerivedProcesses, trace: PathTrace,
                                constants: BoundConstants) -> list[str]:
    """If x and y part ways by the horizon, some visited queue norm must have
    exceeded c1; otherwise the two processes are identical."""
    problems: list[str] = []
    qb = trace.q_before
    qnorm = np.sqrt(np.einsum("ij,ij->i", qb, qb))
    if proc.x[-1] != proc.y[-1] and not np.any(qnorm > constants.c1):
        problems.append("x and y diverge although no queue norm exceeded c1")
    return problems
