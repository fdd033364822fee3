"""Metric functionals on the model spaces.

Covers the full catalog of metric functionals on real Hilbert spaces (norm,
ball, ray and linear forms) and on l1 over the integers (per-coordinate
sign/center terms), the canonical embedding of points as functionals
h_y = ||. - y|| - ||y||, linear minorants g <= h of norm at most one, an
empirical nonexpansiveness audit, and numerical fitting of orbit limits
against the catalogs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np
from scipy.optimize import least_squares

from .spaces import (
    SeqVector,
    Space,
    basis,
    inner,
    l2_norm,
    norm,
    scale,
    sub,
    zero,
)

__all__ = [
    "CoordSpec",
    "eps",
    "center",
    "PointFunctional",
    "HilbertFunctional",
    "L1Functional",
    "LinearFunctional",
    "evaluate",
    "point_functional",
    "linear_minorant",
    "lipschitz_audit",
    "AuditReport",
    "axis_probes",
    "fit_limit",
    "LimitFit",
    "functional_to_json",
    "functional_from_json",
]

_UNIT_TOL = 1e-9
_DUAL_TOL = 1e-12


@dataclass(frozen=True)
class CoordSpec:
    """Behaviour of one l1 coordinate: a fixed sign or a center.

    kind "eps":    term value  eps * t          (eps in {-1, +1})
    kind "center": term value  |t - z| - |z|
    Both vanish at t = 0, so coordinates outside a point's support never
    contribute.
    """

    kind: str
    value: float

    def __post_init__(self):
        if self.kind == "eps":
            if self.value not in (-1.0, 1.0):
                raise ValueError("eps coordinate must carry sign -1 or +1")
        elif self.kind != "center":
            raise ValueError(f"unknown coordinate kind {self.kind!r}")

    def term(self, t: float) -> float:
        if self.kind == "eps":
            return self.value * t
        z = self.value
        return abs(t - z) - abs(z)


def eps(sign: float) -> CoordSpec:
    return CoordSpec("eps", float(sign))


def center(z: float) -> CoordSpec:
    return CoordSpec("center", float(z))


@dataclass(frozen=True)
class PointFunctional:
    """h(x) = ||x - anchor|| - ||anchor||: the functional induced by a point.

    Vanishes at the base point 0 exactly, and at its own anchor takes the
    value -||anchor||.
    """

    anchor: SeqVector
    space: Space

    def value(self, x: SeqVector) -> float:
        return norm(sub(x, self.anchor), self.space) - norm(self.anchor, self.space)


def point_functional(y: SeqVector, space: Space) -> PointFunctional:
    """Embed a point as a functional; the embedding is injective."""
    space.require(y)
    return PointFunctional(y, space)


class HilbertFunctional:
    """One of the four metric-functional forms on a real Hilbert space.

    form "norm":   h(x) = ||x||
    form "ball":   h(x) = sqrt(||x||^2 - 2 (x, r v) + r^2) - r,  0 < r, ||v|| < 1
    form "ray":    h(x) = ||x - r v|| - r,                       0 < r, ||v|| = 1
    form "linear": h(x) = -(x, v),                               ||v|| <= 1

    Ray directions are accepted when within 1e-9 of unit length and stored
    renormalized, so h(0) = 0 holds to rounding.
    """

    __slots__ = ("form", "r", "v")

    def __init__(self, form: str, r: float | None = None, v: SeqVector | None = None):
        if form == "norm":
            if r is not None or v is not None:
                raise ValueError("norm form takes no parameters")
        elif form in ("ball", "ray"):
            if r is None or not (0.0 < r < math.inf):
                raise ValueError(f"{form} form needs r in (0, inf)")
            if v is None:
                raise ValueError(f"{form} form needs a direction v")
            nv = l2_norm(v)
            if form == "ball" and nv >= 1.0:
                raise ValueError("ball form needs ||v|| < 1")
            if form == "ray":
                if abs(nv - 1.0) > _UNIT_TOL:
                    raise ValueError("ray form needs ||v|| = 1 (within 1e-9)")
                v = scale(1.0 / nv, v)
        elif form == "linear":
            if v is None or r is not None:
                raise ValueError("linear form takes only a vector v")
            if l2_norm(v) > 1.0 + _DUAL_TOL:
                raise ValueError("linear form needs ||v|| <= 1")
        else:
            raise ValueError(f"unknown Hilbert functional form {form!r}")
        self.form = form
        self.r = None if r is None else float(r)
        self.v = v

    def value(self, x: SeqVector) -> float:
        if self.form == "norm":
            return l2_norm(x)
        if self.form == "ball":
            sq = l2_norm(x) ** 2 - 2.0 * self.r * inner(x, self.v) + self.r**2
            return math.sqrt(max(sq, 0.0)) - self.r
        if self.form == "ray":
            return l2_norm(sub(x, scale(self.r, self.v))) - self.r
        return -inner(x, self.v)

    def __repr__(self) -> str:
        if self.form == "norm":
            return "HilbertFunctional('norm')"
        if self.form == "linear":
            return f"HilbertFunctional('linear', v={self.v!r})"
        return f"HilbertFunctional({self.form!r}, r={self.r!r}, v={self.v!r})"

    def __eq__(self, other) -> bool:
        if not isinstance(other, HilbertFunctional):
            return NotImplemented
        return (self.form, self.r, self.v) == (other.form, other.r, other.v)

    __hash__ = None


@dataclass(frozen=True)
class L1Functional:
    """Catalog functional on l1: per-coordinate sign or center terms.

    value(x) = sum over s in supp(x) of the coordinate term at x_s, where the
    coordinate behaviour comes from ``overrides`` or else from ``default``.
    Only finitely many overrides are stored; the default is restricted to
    eps(+-1) or center(0), both of which contribute nothing at unprobed
    coordinates, so every value on a finite-support point is a finite sum and
    h(0) = 0 exactly.
    """

    overrides: Mapping[int, CoordSpec]
    default: CoordSpec = field(default_factory=lambda: center(0.0))

    def __post_init__(self):
        object.__setattr__(self, "overrides", dict(self.overrides))
        d = self.default
        if d.kind == "center" and d.value != 0.0:
            raise ValueError("default coordinate must be eps(+-1) or center(0)")

    def spec_at(self, s: int) -> CoordSpec:
        return self.overrides.get(s, self.default)

    def value(self, x: SeqVector) -> float:
        over = self.overrides
        default = self.default
        return math.fsum(
            (over[s] if s in over else default).term(c) for s, c in x.items()
        )


@dataclass(frozen=True)
class LinearFunctional:
    """Continuous linear functional f(x) = sum_s c_s x_s with a dual-norm bound.

    dual_norm "inf": every |coefficient| <= 1 (pairs with l1 points);
    dual_norm "l2":  sum of squared coefficients <= 1 (pairs with Hilbert
    points) and the off-support default must be zero.  The ``default``
    coefficient applies to indices outside ``coeffs``; it is what makes the
    minorant of an all-signs l1 functional exact off its stored window.
    """

    coeffs: Mapping[int, float]
    dual_norm: str = "inf"
    default: float = 0.0

    def __post_init__(self):
        object.__setattr__(
            self, "coeffs", {int(s): float(c) for s, c in dict(self.coeffs).items()}
        )
        object.__setattr__(self, "default", float(self.default))
        vals = list(self.coeffs.values())
        if self.dual_norm == "inf":
            bound = max((abs(c) for c in vals), default=0.0)
            if max(bound, abs(self.default)) > 1.0 + _DUAL_TOL:
                raise ValueError("inf dual norm exceeds 1")
        elif self.dual_norm == "l2":
            if self.default != 0.0:
                raise ValueError("l2-bounded functionals cannot carry a default")
            if math.fsum(c * c for c in vals) > 1.0 + _DUAL_TOL:
                raise ValueError("l2 dual norm exceeds 1")
        else:
            raise ValueError(f"unknown dual norm {self.dual_norm!r}")

    def coeff(self, s: int) -> float:
        return self.coeffs.get(s, self.default)

    def value(self, x: SeqVector) -> float:
        cs = self.coeffs
        default = self.default
        return math.fsum((cs[s] if s in cs else default) * c for s, c in x.items())

    def negate(self) -> "LinearFunctional":
        return LinearFunctional(
            {s: -c for s, c in self.coeffs.items()}, self.dual_norm, -self.default
        )

    def to_json_dict(self) -> dict:
        return {
            "coeffs": {str(s): self.coeffs[s] for s in sorted(self.coeffs)},
            "dual_norm": self.dual_norm,
            "default": self.default,
        }


Functional = PointFunctional | HilbertFunctional | L1Functional | LinearFunctional


def evaluate(h: Functional, x: SeqVector) -> float:
    """Value of any functional type at a finite-support point."""
    return h.value(x)


def linear_minorant(h: L1Functional) -> LinearFunctional:
    """Linear g with g <= h everywhere and sup-norm at most 1.

    Coordinatewise: sign coordinates are already linear and are kept; a
    center coordinate z contributes |t - z| - |z| >= -sign(z) t (the
    subgradient inequality of |. - z| at 0), so its coefficient is -sign(z).
    """
    coeffs = {}
    for s, spec in h.overrides.items():
        if spec.kind == "eps":
            coeffs[s] = spec.value
        else:
            z = spec.value
            coeffs[s] = 0.0 if z == 0.0 else -math.copysign(1.0, z)
    default = h.default.value if h.default.kind == "eps" else 0.0
    return LinearFunctional(coeffs, "inf", default)


@dataclass(frozen=True)
class AuditReport:
    max_ratio: float
    origin_value: float
    pair_count: int


def lipschitz_audit(
    h: Functional, samples: Sequence[tuple[SeqVector, SeqVector]], space: Space
) -> AuditReport:
    """Empirical Lipschitz check: max |h(x)-h(y)| / ||x-y|| over sample pairs.

    Every functional in the catalogs is nonexpansive with h(0) = 0; the audit
    reports the worst observed ratio and the value at the origin so callers
    can assert both.
    """
    worst = 0.0
    used = 0
    for x, y in samples:
        d = norm(sub(x, y), space)
        if d == 0.0:
            continue
        ratio = abs(h.value(x) - h.value(y)) / d
        if ratio > worst:
            worst = ratio
        used += 1
    return AuditReport(worst, h.value(zero()), used)


def axis_probes(
    indices: Sequence[int], amplitudes: Sequence[float] = (1.0, 2.0)
) -> list[SeqVector]:
    """Probes +-t*e_s for each index s and amplitude t."""
    out = []
    for s in indices:
        for t in amplitudes:
            out.append(basis(s, t))
            out.append(basis(s, -t))
    return out


# ---------------------------------------------------------------------------
# Limit fitting
# ---------------------------------------------------------------------------

_TIE_FACTOR = 1.1          # residuals within 10% of each other are a tie
_R_COLLAPSE = 1e-8         # r below this (times scale): form degenerates to norm
_R_ESCAPE = 1e8            # r above this (times scale): ray degenerates to linear
_BALL_BOUNDARY = 0.999     # fitted ||v|| beyond this: ball degenerates to ray


@dataclass
class LimitFit:
    """Outcome of fitting the tail of an orbit against a functional catalog.

    ``converged`` reflects the pointwise oscillation of h_{x_n}(p) over the
    last quarter of the orbit at the supplied probes.  For l1 orbits the
    functional is assembled coordinatewise; for Hilbert orbits the four
    catalog forms are least-squares fitted and near-ties (within 10% residual)
    are reported rather than silently resolved.
    """

    functional: Functional | None
    converged: bool
    max_oscillation: float
    form: str | None = None
    residual: float | None = None
    near_ties: list[tuple[str, float]] = field(default_factory=list)
    coord_specs: dict[int, CoordSpec] | None = None
    unresolved_coords: list[int] = field(default_factory=list)
    phantom_mass: float = 0.0


def fit_limit(
    orbit: Sequence[SeqVector],
    space: Space,
    probes: Sequence[SeqVector],
    tol: float = 1e-6,
    *,
    classify_coords: Sequence[int] | None = None,
) -> LimitFit:
    """Fit the pointwise limit of h_{x_n} along an orbit.

    The convergence verdict comes from the last-quarter oscillation of the
    probe values.  On l1, each coordinate (from the probe supports, or from
    ``classify_coords`` when given) is classified as center(z) when its tail
    settles at z and as a sign coordinate when it drifts away monotonically.
    On Hilbert spaces the probe targets are the tail means and the best
    catalog form is returned with its residual.
    """
    if not orbit:
        raise ValueError("orbit must be nonempty")
    tail = list(orbit[-max(1, len(orbit) // 4):])
    last = orbit[-1]

    # h_y(p) only needs the coordinates in supp(p): on l1 the off-support
    # terms of ||p - y|| and ||y|| cancel, and on l2 the expansion
    # ||p - y||^2 = ||y||^2 - 2 (p, y) + ||p||^2 reuses one norm per point
    # (its cancellation error ~ eps ||y||^2 / ||p - y|| stays far below the
    # fit tolerances for probes that are not essentially equal to y).
    tail_norms = [norm(y, space) for y in tail]
    targets = []
    max_osc = 0.0
    for p in probes:
        space.require(p)
        if space.kind == "l1_seq":
            vals = [
                math.fsum(abs(c - y[s]) - abs(y[s]) for s, c in p.items())
                for y in tail
            ]
        else:
            np2 = l2_norm(p) ** 2
            vals = [
                math.sqrt(max(ny * ny - 2.0 * inner(p, y) + np2, 0.0)) - ny
                for y, ny in zip(tail, tail_norms)
            ]
        osc = max(vals) - min(vals)
        if osc > max_osc:
            max_osc = osc
        targets.append(math.fsum(vals) / len(vals))
    converged = max_osc < tol

    if space.kind == "l1_seq":
        if classify_coords is None:
            coords = sorted({s for p in probes for s in p.support})
        else:
            coords = sorted(set(classify_coords))
        specs, unresolved = _classify_l1(tail, coords, tol)
        functional = L1Functional(specs, center(0.0))
        return LimitFit(
            functional,
            converged and not unresolved,
            max_osc,
            form="l1",
            coord_specs=specs,
            unresolved_coords=unresolved,
        )

    return _fit_hilbert(space, probes, targets, last, converged, max_osc)


def _classify_l1(
    tail: Sequence[SeqVector], coords: Sequence[int], tol: float
) -> tuple[dict[int, CoordSpec], list[int]]:
    specs: dict[int, CoordSpec] = {}
    unresolved: list[int] = []
    for s in coords:
        vals = [y[s] for y in tail]
        osc = max(vals) - min(vals)
        drift = vals[-1] - vals[0]
        if osc < tol:
            specs[s] = center(vals[-1])
        elif drift > tol:
            specs[s] = eps(-1.0)  # coordinate escapes to +inf
        elif drift < -tol:
            specs[s] = eps(+1.0)  # coordinate escapes to -inf
        elif abs(vals[-1]) > 2.0:
            # sign-fixed wandering beyond the probe band looks linear there
            specs[s] = eps(-math.copysign(1.0, vals[-1]))
        else:
            specs[s] = center(vals[-1])
            unresolved.append(s)
    return specs, unresolved


def _ball_constrained_lstsq(A: np.ndarray, b: np.ndarray) -> np.ndarray:
    """argmin ||A v - b|| subject to ||v|| <= 1 (ridge bisection on the bound)."""
    v, *_ = np.linalg.lstsq(A, b, rcond=None)
    if np.linalg.norm(v) <= 1.0:
        return v
    gram = A.T @ A
    rhs = A.T @ b
    lo, hi = 0.0, 1.0
    eye = np.eye(A.shape[1])
    while np.linalg.norm(np.linalg.solve(gram + hi * eye, rhs)) > 1.0:
        hi *= 4.0
        if hi > 1e16:
            break
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        if np.linalg.norm(np.linalg.solve(gram + mid * eye, rhs)) > 1.0:
            lo = mid
        else:
            hi = mid
    v = np.linalg.solve(gram + hi * eye, rhs)
    n = np.linalg.norm(v)
    return v / n if n > 1.0 else v


def _fit_hilbert(
    space: Space,
    probes: Sequence[SeqVector],
    targets: Sequence[float],
    last: SeqVector,
    converged: bool,
    max_osc: float,
) -> LimitFit:
    # On a sequence space only the probe coordinates of a direction are
    # observable; everything else influences the ray/ball values through the
    # direction's total mass alone, so it is folded into one phantom axis and
    # reported as phantom_mass instead of being pinned to arbitrary unprobed
    # indices.  On euclidean spaces the orbit's own support is kept: the
    # space is small and concrete, and it sharpens the optimizer's start.
    phantom = space.kind == "l2_seq"
    if phantom:
        window = sorted({s for p in probes for s in p.support})
    else:
        window = sorted({s for p in probes for s in p.support} | set(last.support))
    if not window:
        return LimitFit(HilbertFunctional("norm"), converged, max_osc, form="norm", residual=0.0)
    if len(window) > 512:
        raise ValueError("fit window too large (over 512 coordinates)")
    dim = len(window) + (1 if phantom else 0)
    pos = {s: i for i, s in enumerate(window)}

    P = np.zeros((len(probes), dim))
    for i, p in enumerate(probes):
        for s, c in p.items():
            P[i, pos[s]] = c
    t = np.asarray(targets, dtype=float)
    x_last = np.zeros(dim)
    off_mass = 0.0
    for s, c in last.items():
        if s in pos:
            x_last[pos[s]] = c
        else:
            off_mass += c * c
    if phantom and off_mass > 0.0:
        x_last[-1] = math.sqrt(off_mass)

    pnorms = np.linalg.norm(P, axis=1)
    scale_ref = max(1.0, float(np.max(pnorms)) if len(pnorms) else 1.0,
                    float(np.max(np.abs(t))) if len(t) else 1.0)

    def rms(res: np.ndarray) -> float:
        return float(np.sqrt(np.mean(res**2))) if res.size else 0.0

    candidates: dict[str, tuple[float, dict]] = {}

    def offer(form: str, residual: float, params: dict) -> None:
        if form not in candidates or residual < candidates[form][0]:
            candidates[form] = (residual, params)

    offer("norm", rms(pnorms - t), {})

    v_lin = _ball_constrained_lstsq(P, -t)
    offer("linear", rms(P @ v_lin + t), {"v": v_lin})

    r0 = float(np.linalg.norm(x_last))
    u0 = x_last / r0 if r0 > 1e-12 else _fallback_direction(v_lin, dim)
    if r0 <= 1e-12:
        r0 = scale_ref

    def ray_res(params: np.ndarray) -> np.ndarray:
        r = math.exp(params[0])
        w = params[1:]
        nw = np.linalg.norm(w)
        u = w / nw if nw > 1e-12 else _fallback_direction(v_lin, dim)
        return np.linalg.norm(P - r * u, axis=1) - r - t

    sol = least_squares(ray_res, np.concatenate(([math.log(r0)], u0)), method="trf")
    r_ray = math.exp(sol.x[0])
    w = sol.x[1:]
    nw = np.linalg.norm(w)
    u_ray = w / nw if nw > 1e-12 else _fallback_direction(v_lin, dim)
    res_ray = rms(ray_res(sol.x))
    if r_ray < _R_COLLAPSE * scale_ref:
        offer("norm", res_ray, {})
    elif r_ray > _R_ESCAPE * scale_ref:
        offer("linear", res_ray, {"v": u_ray})
    else:
        offer("ray", res_ray, {"r": r_ray, "v": u_ray})

    def ball_res(params: np.ndarray) -> np.ndarray:
        r = math.exp(params[0])
        w = params[1:]
        v = w / math.sqrt(1.0 + float(w @ w))  # smooth chart onto the open unit ball
        sq = pnorms**2 - 2.0 * r * (P @ v) + r * r
        return np.sqrt(np.maximum(sq, 0.0)) - r - t

    w0 = 0.9 * u_ray / math.sqrt(1.0 - 0.81)
    sol_b = least_squares(ball_res, np.concatenate(([math.log(max(r_ray, 1e-9))], w0)),
                          method="trf")
    r_ball = math.exp(sol_b.x[0])
    wb = sol_b.x[1:]
    v_ball = wb / math.sqrt(1.0 + float(wb @ wb))
    res_ball = rms(ball_res(sol_b.x))
    nv = float(np.linalg.norm(v_ball))
    if r_ball < _R_COLLAPSE * scale_ref:
        offer("norm", res_ball, {})
    elif nv > _BALL_BOUNDARY:
        offer("ray", res_ball, {"r": r_ball, "v": v_ball / nv})
    else:
        offer("ball", res_ball, {"r": r_ball, "v": v_ball})

    floor = 1e-12 * scale_ref
    best_form = min(candidates, key=lambda f: candidates[f][0])
    best_res, best_params = candidates[best_form]
    ties = [
        (f, res)
        for f, (res, _) in sorted(candidates.items())
        if f != best_form and max(res, floor) <= _TIE_FACTOR * max(best_res, floor)
    ]

    phantom_mass = 0.0

    def as_vector(arr: np.ndarray) -> SeqVector:
        nonlocal phantom_mass
        entries = {window[i]: float(arr[i]) for i in range(len(window))}
        if phantom and abs(arr[-1]) > 1e-9:
            phantom_mass = abs(float(arr[-1]))
            entries[window[-1] + 1] = float(arr[-1])  # spare index off the window
        return SeqVector(entries)

    if best_form == "norm":
        functional: Functional = HilbertFunctional("norm")
    elif best_form == "linear":
        v = best_params["v"]
        nv = float(np.linalg.norm(v))
        if nv > 1.0:
            v = v / nv
        functional = HilbertFunctional("linear", v=as_vector(v))
    elif best_form == "ray":
        v = best_params["v"]
        functional = HilbertFunctional("ray", r=best_params["r"],
                                       v=as_vector(v / np.linalg.norm(v)))
    else:
        functional = HilbertFunctional("ball", r=best_params["r"],
                                       v=as_vector(best_params["v"]))

    return LimitFit(
        functional,
        converged,
        max_osc,
        form=best_form,
        residual=best_res,
        near_ties=ties,
        phantom_mass=phantom_mass,
    )


def _fallback_direction(v_lin: np.ndarray, dim: int) -> np.ndarray:
    n = np.linalg.norm(v_lin)
    if n > 1e-12:
        return v_lin / n
    e = np.zeros(dim)
    e[0] = 1.0
    return e


# ---------------------------------------------------------------------------
# Serialization: tagged union over the catalog forms
# ---------------------------------------------------------------------------


def _coordspec_to_json(spec: CoordSpec) -> dict:
    if spec.kind == "eps":
        return {"eps": int(spec.value)}
    return {"z": spec.value}


def _coordspec_from_json(data: Mapping) -> CoordSpec:
    if "eps" in data:
        return eps(data["eps"])
    return center(data["z"])


def functional_to_json(h: Functional) -> dict:
    if isinstance(h, PointFunctional):
        return {
            "form": "internal",
            "anchor": h.anchor.to_json_dict(),
            "space": h.space.to_json_dict(),
        }
    if isinstance(h, HilbertFunctional):
        out: dict = {"form": h.form}
        if h.r is not None:
            out["r"] = h.r
        if h.v is not None:
            out["v"] = h.v.to_json_dict()
        return out
    if isinstance(h, L1Functional):
        return {
            "form": "l1",
            "overrides": {
                str(s): _coordspec_to_json(h.overrides[s]) for s in sorted(h.overrides)
            },
            "default": _coordspec_to_json(h.default),
        }
    raise TypeError(f"cannot serialize {type(h).__name__} as a metric functional")


def functional_from_json(data: Mapping) -> Functional:
    form = data["form"]
    if form == "internal":
        return PointFunctional(
            SeqVector.from_json_dict(data["anchor"]), Space.from_json_dict(data["space"])
        )
    if form in ("norm", "ball", "ray", "linear"):
        v = SeqVector.from_json_dict(data["v"]) if "v" in data else None
        return HilbertFunctional(form, r=data.get("r"), v=v)
    if form == "l1":
        overrides = {
            int(s): _coordspec_from_json(spec) for s, spec in data["overrides"].items()
        }
        return L1Functional(overrides, _coordspec_from_json(data["default"]))
    raise ValueError(f"unknown functional form {form!r}")
