"""Orbit iteration and asymptotic diagnostics.

Builds trajectories x, Tx, T^2 x, ... and measures them: the escape rate
tau = lim ||T^n x||/n, step norms ||T^{n+1}x - T^n x||, convergence in
direction of T^n x / ||T^n x||, Cesaro averages of affine orbits against the
mean-ergodic projection, and monotonicity h(Tx) <= h(x) of functionals along
a map.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .functionals import Functional, evaluate
from .maps import DEFAULT_SUPPORT_WINDOW, MapSpec, SupportWindowError
from .spaces import (
    SeqVector,
    Space,
    from_array,
    norm,
    scale,
    sub,
    to_array,
)

__all__ = [
    "Trajectory",
    "iterate",
    "EscapeReport",
    "escape_rate",
    "StepNormReport",
    "step_norm_check",
    "CosmicReport",
    "cosmic_diagnose",
    "MeanErgodicReport",
    "mean_ergodic",
    "MonotoneReport",
    "monotone_functional_check",
    "step_monotone_defect",
    "log_checkpoints",
]

NULL_SPACE_TOL = 1e-10


@dataclass
class Trajectory:
    """Orbit x, Tx, ..., T^n x with cached norms and step norms.

    step_norms[k] = ||points[k+1] - points[k]||; for a nonexpansive map the
    step norms are nonincreasing (up to rounding).
    """

    points: list[SeqVector]
    norms: list[float]
    step_norms: list[float]
    space: Space

    def __len__(self) -> int:
        return len(self.points)

    @property
    def iterations(self) -> int:
        return len(self.points) - 1

    def to_csv(self, coords: tuple[int, ...] = ()) -> str:
        """CSV with columns n, norm, step_norm and optional coordinate columns."""
        header = "n,norm,step_norm" + "".join(f",x_{s}" for s in coords)
        lines = [header]
        for k, (p, nk) in enumerate(zip(self.points, self.norms)):
            step = "" if k == 0 else repr(self.step_norms[k - 1])
            cols = "".join(f",{p[s]!r}" for s in coords)
            lines.append(f"{k},{nk!r},{step}{cols}")
        return "\n".join(lines) + "\n"


def iterate(m: MapSpec, x0: SeqVector, n: int,
            support_window: int = DEFAULT_SUPPORT_WINDOW) -> Trajectory:
    """Apply the map n times from x0, recording norms and step norms."""
    if n < 1:
        raise ValueError("need at least one iteration")
    space = m.space
    space.require(x0)
    points = [x0]
    norms = [norm(x0, space)]
    steps: list[float] = []
    x = x0
    for k in range(1, n + 1):
        y = m.apply(x)
        if y.max_abs_index > support_window:
            raise SupportWindowError(
                f"iterate reached index {y.max_abs_index} outside the "
                f"+-{support_window} window",
                iteration=k,
            )
        steps.append(norm(sub(y, x), space))
        norms.append(norm(y, space))
        points.append(y)
        x = y
    return Trajectory(points, norms, steps, space)


def log_checkpoints(n: int, smallest: int = 8) -> list[int]:
    """Halving checkpoints n, n/2, n/4, ... down to ``smallest``, ascending."""
    ks = []
    k = n
    while k >= smallest:
        ks.append(k)
        if k == 1:
            break
        k //= 2
    if not ks:
        ks = [n]
    return sorted(set(ks))


@dataclass
class EscapeReport:
    """Escape-rate estimates ||T^n x||/n at halving checkpoints.

    tau_final is the estimate at the last index; the sequence converged when
    the last three checkpoint estimates agree within the tolerance
    (relatively when tau exceeds 0.01, absolutely otherwise).
    """

    estimates: list[tuple[int, float]]
    tau_final: float
    converged: bool


def escape_rate(traj: Trajectory, tol: float = 1e-3) -> EscapeReport:
    n = traj.iterations
    if len(traj) < 16:
        raise ValueError("escape rate needs a trajectory of length at least 16")
    ks = log_checkpoints(n)
    estimates = [(k, traj.norms[k] / k) for k in ks]
    tau_final = traj.norms[n] / n
    last = [v for _, v in estimates[-3:]]
    spread = max(last) - min(last)
    if tau_final > 0.01:
        converged = spread <= tol * tau_final
    else:
        converged = spread <= tol
    return EscapeReport(estimates, tau_final, converged)


@dataclass
class StepNormReport:
    final_step_norm: float
    tau: float
    defect: float
    passed: bool


def step_norm_check(traj: Trajectory, tau: float, threshold: float = 1e-2) -> StepNormReport:
    """Defect |last step norm - tau|.

    Firmly nonexpansive maps drive the step norms to tau; isometries keep
    them constant at ||Tx - x|| instead, so a positive defect on an isometry
    is expected rather than an error.
    """
    if len(traj) < 16:
        raise ValueError("step-norm check needs a trajectory of length at least 16")
    final = traj.step_norms[-1]
    defect = abs(final - tau)
    return StepNormReport(final, tau, defect, defect < threshold)


def step_monotone_defect(traj: Trajectory) -> float:
    """Largest increase between consecutive step norms (0 when nonincreasing)."""
    worst = 0.0
    for a, b in zip(traj.step_norms, traj.step_norms[1:]):
        if b - a > worst:
            worst = b - a
    return worst


@dataclass
class CosmicReport:
    """Direction diagnostics for T^n x / ||T^n x||.

    Verdicts: STRONG (doubling-lag Cauchy defect vanishes),
    WEAK_ONLY_CANDIDATE (tracked coordinates settle at a nonzero limit while
    the defect does not vanish), NONE (no direction limit: either the tracked
    coordinatewise limit is identically 0 while the directions keep unit
    mass, or coordinates fail to settle), UNDEFINED_BOUNDED_ORBIT (the orbit
    never leaves a bounded set, so directions are not meaningful).
    """

    verdict: str
    strong_cauchy_defect: float | None
    defects: list[tuple[int, float]] = field(default_factory=list)
    directions: list[tuple[int, SeqVector]] = field(default_factory=list)
    coordinate_limits: dict[int, float] = field(default_factory=dict)
    coordinate_converged: dict[int, bool] = field(default_factory=dict)
    note: str = ""


def cosmic_diagnose(
    traj: Trajectory,
    *,
    strong_tol: float = 1e-3,
    coord_window: tuple[int, ...] | None = None,
    coord_tol: float = 1e-2,
    zero_tol: float = 1e-6,
    bounded_factor: float = 10.0,
) -> CosmicReport:
    n = traj.iterations
    space = traj.space
    bound = bounded_factor * (traj.norms[0] + 1.0)
    if max(traj.norms) < bound:
        return CosmicReport(
            "UNDEFINED_BOUNDED_ORBIT",
            None,
            note=f"norms stay below {bound:g}; directions of a bounded orbit carry no limit",
        )

    # Doubling lags: compare the direction at k with the one at 2k.  The
    # coordinate shift has vanishing consecutive differences but unit
    # doubling-lag differences, which is exactly what this must expose.
    bases = [k for k in log_checkpoints(n // 2) if 2 * k <= n]
    pairs = []
    for k in bases:
        if traj.norms[k] > 0.0 and traj.norms[2 * k] > 0.0:
            pairs.append((k, 2 * k))
    direction_cache: dict[int, SeqVector] = {}

    def direction(k: int) -> SeqVector:
        if k not in direction_cache:
            direction_cache[k] = scale(1.0 / traj.norms[k], traj.points[k])
        return direction_cache[k]

    defects = []
    defect = 0.0
    for k, k2 in pairs:
        d = norm(sub(direction(k2), direction(k)), space)
        defects.append((k, d))
        if d > defect:
            defect = d

    directions = sorted((k, v) for k, v in direction_cache.items())

    if coord_window is None:
        dim = space.dim if space.kind == "euclidean" else 32
        coord_window = tuple(range(1, dim + 1))

    limits: dict[int, float] = {}
    settled: dict[int, bool] = {}
    if pairs:
        k_lo, k_hi = pairs[-1]
        d_lo, d_hi = direction(k_lo), direction(k_hi)
        for s in coord_window:
            a, b = d_lo[s], d_hi[s]
            settled[s] = abs(b - a) <= coord_tol
            limits[s] = 2.0 * b - a  # Richardson step kills the O(1/n) term

    if not pairs:
        return CosmicReport("NONE", None, note="no usable checkpoints (norms vanish)")

    if defect < strong_tol:
        return CosmicReport("STRONG", defect, defects, directions, limits, settled)

    if settled and all(settled.values()):
        peak = max(abs(v) for v in limits.values())
        if peak <= zero_tol:
            note = "tracked coordinates vanish while directions keep unit mass"
            if space.kind == "l1_seq":
                note += ("; by the Schur property of l1, a weak direction limit "
                         "would force a strong one, so none exists")
            return CosmicReport("NONE", defect, defects, directions, limits, settled, note)
        return CosmicReport(
            "WEAK_ONLY_CANDIDATE", defect, defects, directions, limits, settled,
            "coordinates settle at a nonzero profile but the direction defect persists",
        )

    return CosmicReport(
        "NONE", defect, defects, directions, limits, settled,
        "some tracked coordinates never settle",
    )


@dataclass
class MeanErgodicReport:
    """Cesaro average of U^k v against the projection onto fixed vectors.

    cesaro_defect is the distance between (1/n) T^n 0 and the accumulated
    average (1/n) sum U^k v; the two agree algebraically, so anything beyond
    rounding signals an implementation fault.
    """

    average: SeqVector
    projection: SeqVector
    gap: float
    cesaro_defect: float


def mean_ergodic(operator: np.ndarray, v: SeqVector, n: int) -> MeanErgodicReport:
    a = np.asarray(operator, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError("mean ergodic averaging needs a square matrix")
    d = a.shape[0]
    varr = to_array(v, d)
    if n < 1:
        raise ValueError("need at least one term")

    x = np.zeros(d)          # T^k 0 under x -> Ux + v
    acc = np.zeros(d)        # sum of U^k v
    w = varr.copy()          # U^k v
    for _ in range(n):
        x = a @ x + varr
        acc += w
        w = a @ w
    average = acc / n
    cesaro_defect = float(np.linalg.norm(x / n - average))

    _, sv, vt = np.linalg.svd(np.eye(d) - a)
    null = vt[sv < NULL_SPACE_TOL]  # orthonormal rows spanning ker(I - U)
    projection = null.T @ (null @ varr) if null.size else np.zeros(d)
    gap = float(np.linalg.norm(average - projection))
    return MeanErgodicReport(from_array(average), from_array(projection), gap, cesaro_defect)


@dataclass
class MonotoneReport:
    worst: float
    passed: bool
    target: float


def monotone_functional_check(
    m: MapSpec,
    h: Functional,
    samples,
    *,
    tau: float | None = None,
    tol: float = 1e-9,
) -> MonotoneReport:
    """Worst violation of h(Tx) <= h(x) over samples.

    With ``tau`` given, checks the strengthened decay h(Tx) <= h(x) - tau
    instead.
    """
    worst = -math.inf
    for x in samples:
        gap = evaluate(h, m.apply(x)) - evaluate(h, x)
        if gap > worst:
            worst = gap
    if worst == -math.inf:
        raise ValueError("need at least one sample point")
    target = 0.0 if tau is None else -tau
    return MonotoneReport(worst, worst <= target + tol, target)
