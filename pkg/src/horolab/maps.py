"""The nonexpansive-map zoo and its empirical property checkers.

Affine maps x -> Ux + v (dense or structured linear part), the coordinate
shift that prepends 1 on l1, an Edelstein-type isometry built from plane
rotations by 2*pi/n!, an averaging combinator that manufactures firmly
nonexpansive maps, and a registry for externally supplied plug-in rules.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Mapping

import numpy as np

from .spaces import (
    L1_SEQ,
    L2_SEQ,
    SeqVector,
    Space,
    SpaceMismatchError,
    add,
    euclidean,
    from_array,
    inner,
    norm,
    scale,
    sub,
    to_array,
    zero,
)

__all__ = [
    "DenseOperator",
    "ShiftOperator",
    "RotationOperator",
    "DiagonalOperator",
    "AffineMap",
    "ShiftMap",
    "EdelsteinIsometry",
    "AveragedMap",
    "PluginMap",
    "register_plugin",
    "get_plugin",
    "unregister_plugin",
    "check_nonexpansive",
    "check_firm",
    "ExpansionReport",
    "FirmnessReport",
    "SupportWindowError",
    "operator_norm_estimate",
    "map_to_json",
    "map_from_json",
    "DEFAULT_T_GRID",
    "DEFAULT_SUPPORT_WINDOW",
]

DEFAULT_T_GRID = (0.0, 0.25, 0.5, 0.75, 1.0, 1.5, 2.0, 4.0)
DEFAULT_SUPPORT_WINDOW = 10**6
_NORM_SLACK = 1e-9
_NORM_REJECT = 1e-6


class SupportWindowError(RuntimeError):
    """An output coefficient landed outside the configured index window."""

    def __init__(self, message: str, iteration: int | None = None):
        super().__init__(message)
        self.iteration = iteration


def operator_norm_estimate(matrix: np.ndarray, iters: int = 200, tol: float = 1e-9) -> float:
    """Largest singular value by power iteration on A^T A.

    Deterministic seeded start; stops early once the estimate settles to
    within ``tol``.
    """
    a = np.asarray(matrix, dtype=float)
    d = a.shape[1]
    rng = np.random.default_rng(12345)
    z = rng.standard_normal(d)
    z /= np.linalg.norm(z)
    est = 0.0
    for _ in range(iters):
        w = a @ z
        est_new = float(np.linalg.norm(w))
        z = a.T @ w
        nz = np.linalg.norm(z)
        if nz == 0.0:
            return 0.0
        z /= nz
        if abs(est_new - est) <= tol * max(1.0, est_new):
            return est_new
        est = est_new
    return est


class DenseOperator:
    """Linear operator on EUCLIDEAN(d) given by a dense d x d matrix.

    The operator norm is estimated at construction by power iteration;
    matrices whose estimate exceeds 1 + 1e-6 are rejected unless
    ``verify=False`` (useful only for feeding the empirical checkers a
    known-bad map).
    """

    def __init__(self, matrix, verify: bool = True):
        m = np.asarray(matrix, dtype=float)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError("dense operator needs a square matrix")
        if not np.all(np.isfinite(m)):
            raise ValueError("dense operator entries must be finite")
        self.matrix = m
        self.norm_estimate = operator_norm_estimate(m)
        if verify and self.norm_estimate > 1.0 + _NORM_REJECT:
            raise ValueError(
                f"operator norm estimate {self.norm_estimate:.6g} exceeds 1"
            )

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def apply(self, x: SeqVector) -> SeqVector:
        return from_array(self.matrix @ to_array(x, self.dim))

    def to_json_dict(self) -> dict:
        return {"type": "dense", "matrix": [[float(c) for c in row] for row in self.matrix]}


@dataclass(frozen=True)
class ShiftOperator:
    """Moves every coefficient from index s to s + offset (an isometry)."""

    offset: int

    def apply(self, x: SeqVector) -> SeqVector:
        return SeqVector({s + self.offset: c for s, c in x.items()})

    def to_json_dict(self) -> dict:
        return {"type": "shift", "offset": self.offset}


@dataclass(frozen=True)
class RotationOperator:
    """Rotations by fixed angles in disjoint coordinate planes (l2 isometry)."""

    planes: tuple[tuple[int, int, float], ...]

    def __post_init__(self):
        seen: set[int] = set()
        for i, j, _ in self.planes:
            if i == j or i in seen or j in seen:
                raise ValueError("rotation planes must use pairwise distinct indices")
            seen.update((i, j))

    def apply(self, x: SeqVector) -> SeqVector:
        out = dict(x.items())
        for i, j, theta in self.planes:
            a = out.pop(i, 0.0)
            b = out.pop(j, 0.0)
            c, s = math.cos(theta), math.sin(theta)
            out[i] = c * a - s * b
            out[j] = s * a + c * b
        return SeqVector(out)

    def to_json_dict(self) -> dict:
        return {
            "type": "rotations",
            "planes": [{"i": i, "j": j, "angle": th} for i, j, th in self.planes],
        }


@dataclass(frozen=True)
class DiagonalOperator:
    """Coordinatewise multipliers; unlisted indices use ``default``.

    All multipliers must have magnitude at most 1, which makes the operator
    norm exactly max|multiplier|.
    """

    entries: Mapping[int, float]
    default: float = 0.0

    def __post_init__(self):
        object.__setattr__(
            self, "entries", {int(s): float(c) for s, c in dict(self.entries).items()}
        )
        worst = max((abs(c) for c in self.entries.values()), default=0.0)
        if max(worst, abs(self.default)) > 1.0 + _NORM_SLACK:
            raise ValueError("diagonal multipliers must have magnitude at most 1")

    def apply(self, x: SeqVector) -> SeqVector:
        e = self.entries
        d = self.default
        return SeqVector({s: (e[s] if s in e else d) * c for s, c in x.items()})

    def to_json_dict(self) -> dict:
        return {
            "type": "diagonal",
            "entries": {str(s): self.entries[s] for s in sorted(self.entries)},
            "default": self.default,
        }


Operator = DenseOperator | ShiftOperator | RotationOperator | DiagonalOperator


class AffineMap:
    """x -> op(x) + translation, nonexpansive whenever ||op|| <= 1."""

    def __init__(self, operator: Operator, translation: SeqVector | None = None,
                 space: Space | None = None):
        self.operator = operator
        self.translation = translation if translation is not None else zero()
        if isinstance(operator, DenseOperator):
            inferred = euclidean(operator.dim)
            if space is not None and space != inferred:
                raise ValueError("dense operator dimension disagrees with space")
            space = inferred
        elif space is None:
            raise ValueError("structured operators need an explicit space")
        if isinstance(operator, RotationOperator) and not space.is_hilbert:
            # plane rotations have l1 operator norm up to sqrt(2)
            raise ValueError("rotation operators are nonexpansive only in the l2 norm")
        if any(not math.isfinite(c) for _, c in self.translation.items()):
            raise ValueError("translation coefficients must be finite")
        self.space = space
        self.space.require(self.translation)

    def apply(self, x: SeqVector) -> SeqVector:
        self.space.require(x)
        return add(self.operator.apply(x), self.translation)

    def dense_matrix(self) -> np.ndarray:
        """Dense form of the linear part (euclidean spaces only)."""
        if isinstance(self.operator, DenseOperator):
            return self.operator.matrix
        if self.space.kind != "euclidean":
            raise ValueError("cannot densify an operator on a sequence space")
        d = self.space.dim
        cols = []
        for s in range(1, d + 1):
            img = self.operator.apply(SeqVector({s: 1.0}))
            self.space.require(img)
            cols.append(to_array(img, d))
        return np.column_stack(cols)


class ShiftMap:
    """(x_1, x_2, ...) -> (1, x_1, x_2, ...) on l1 of the positive indices.

    Support moves from s to s+1 and coefficient 1 is inserted at index 1; the
    map is an affine isometry of its domain onto its image and has no fixed
    point.
    """

    space = L1_SEQ

    def apply(self, x: SeqVector) -> SeqVector:
        if not x.is_zero() and x.min_index < 1:
            raise SpaceMismatchError("shift map domain is supported on indices >= 1")
        out = {s + 1: c for s, c in x.items()}
        out[1] = 1.0
        # shifting a canonical vector and inserting 1.0 stays canonical
        hi = 1 if x.is_zero() else x.max_index + 1
        return SeqVector._from_canonical(out, 1, hi)


class EdelsteinIsometry:
    """Product of plane rotations by 2*pi/n! about (1, 0), n = 1..plane_count.

    Plane n lives in the coordinate pair (2n-1, 2n) of the truncated l2
    space.  Orbits of 0 are unbounded in the full construction yet return
    near the origin at factorial times; the truncation keeps each plane's
    closed-form behaviour exactly.
    """

    space = L2_SEQ

    def __init__(self, plane_count: int):
        if plane_count < 1:
            raise ValueError("need at least one plane")
        self.plane_count = plane_count
        self._trig = [
            (math.cos(2.0 * math.pi / math.factorial(n)),
             math.sin(2.0 * math.pi / math.factorial(n)))
            for n in range(1, plane_count + 1)
        ]

    def apply(self, x: SeqVector) -> SeqVector:
        out = dict(x.items())
        for n, (c, s) in enumerate(self._trig, start=1):
            i, j = 2 * n - 1, 2 * n
            a = out.pop(i, 0.0) - 1.0  # rotate about the in-plane center (1, 0)
            b = out.pop(j, 0.0)
            out[i] = c * a - s * b + 1.0
            out[j] = s * a + c * b
        return SeqVector(out)


class AveragedMap:
    """x -> (1-w) x + w inner(x); with w = 1/2 on a Hilbert space this turns
    any nonexpansive inner map into a firmly nonexpansive one."""

    def __init__(self, inner_map, weight: float = 0.5):
        if not 0.0 < weight < 1.0:
            raise ValueError("averaging weight must lie in (0, 1)")
        self.inner = inner_map
        self.weight = float(weight)
        self.space = inner_map.space

    def apply(self, x: SeqVector) -> SeqVector:
        w = self.weight
        return add(scale(1.0 - w, x), scale(w, self.inner.apply(x)))


class PluginMap:
    """Externally supplied point-to-point rule with a declared space.

    Outputs are canonicalized and must stay inside the support window;
    violations raise rather than silently truncate, since orbits feeding the
    escape-rate estimator would be corrupted by dropped coefficients.
    """

    def __init__(self, name: str, rule: Callable[[SeqVector], SeqVector],
                 space: Space, support_window: int = DEFAULT_SUPPORT_WINDOW):
        self.name = name
        self.rule = rule
        self.space = space
        self.support_window = support_window

    def apply(self, x: SeqVector) -> SeqVector:
        y = self.rule(x)
        if not isinstance(y, SeqVector):
            y = SeqVector(y)
        if y.max_abs_index > self.support_window:
            raise SupportWindowError(
                f"plugin {self.name!r} produced index {y.max_abs_index} outside "
                f"the +-{self.support_window} window"
            )
        return y


MapSpec = AffineMap | ShiftMap | EdelsteinIsometry | AveragedMap | PluginMap

_PLUGINS: dict[str, PluginMap] = {}


def register_plugin(name: str, rule: Callable[[SeqVector], SeqVector], space: Space,
                    support_window: int = DEFAULT_SUPPORT_WINDOW) -> PluginMap:
    plugin = PluginMap(name, rule, space, support_window)
    _PLUGINS[name] = plugin
    return plugin


def get_plugin(name: str) -> PluginMap:
    if name not in _PLUGINS:
        raise KeyError(f"no plugin map registered under {name!r}")
    return _PLUGINS[name]


def unregister_plugin(name: str) -> None:
    _PLUGINS.pop(name, None)


@dataclass(frozen=True)
class ExpansionReport:
    max_ratio: float
    passed: bool
    pair_count: int


def check_nonexpansive(m: MapSpec, samples, space: Space,
                       tol: float = _NORM_SLACK) -> ExpansionReport:
    """Worst ||Tx - Ty|| / ||x - y|| over sample pairs; passes iff <= 1 + tol."""
    worst = 0.0
    used = 0
    for x, y in samples:
        denom = norm(sub(x, y), space)
        if denom == 0.0:
            continue
        ratio = norm(sub(m.apply(x), m.apply(y)), space) / denom
        if ratio > worst:
            worst = ratio
        used += 1
    if used == 0:
        raise ValueError("need at least one sample pair with x != y")
    return ExpansionReport(worst, worst <= 1.0 + tol, used)


@dataclass(frozen=True)
class FirmnessReport:
    worst_margin: float
    passed: bool
    witness: tuple[SeqVector, SeqVector, float] | None


def check_firm(m: MapSpec, samples, space: Space,
               t_grid=DEFAULT_T_GRID, tol: float = _NORM_SLACK) -> FirmnessReport:
    """Firm nonexpansiveness margin over sample pairs and a t-grid.

    For each pair the margin at t is ||(1-t)(Tx-Ty) + t(x-y)|| - ||Tx-Ty||;
    firm maps keep it nonnegative for every t >= 0.  Returns the worst margin
    and the pair/t where it occurred.
    """
    if not t_grid:
        raise ValueError("t_grid must be nonempty")
    hilbert = space.is_hilbert
    worst = math.inf
    witness = None
    for x, y in samples:
        a = sub(m.apply(x), m.apply(y))  # Tx - Ty
        b = sub(x, y)
        if hilbert:
            # ||(1-t)a + t b||^2 is quadratic in t; three reductions serve
            # the whole grid
            na2 = math.fsum(c * c for _, c in a.items())
            nb2 = math.fsum(c * c for _, c in b.items())
            ab = inner(a, b)
            na = math.sqrt(na2)
            for t in t_grid:
                u = 1.0 - t
                sq = u * u * na2 + 2.0 * u * t * ab + t * t * nb2
                margin = math.sqrt(max(sq, 0.0)) - na
                if margin < worst:
                    worst = margin
                    witness = (x, y, t)
        else:
            na = norm(a, space)
            keys = set(a) | set(b)
            for t in t_grid:
                u = 1.0 - t
                combo = math.fsum(abs(u * a[s] + t * b[s]) for s in keys)
                margin = combo - na
                if margin < worst:
                    worst = margin
                    witness = (x, y, t)
    if witness is None:
        raise ValueError("need at least one sample pair")
    return FirmnessReport(worst, worst >= -tol, witness)


# ---------------------------------------------------------------------------
# Serialization: tagged union keyed by "kind"
# ---------------------------------------------------------------------------


def _operator_to_json(op: Operator) -> dict:
    return op.to_json_dict()


def _operator_from_json(data: Mapping) -> Operator:
    kind = data["type"]
    if kind == "dense":
        return DenseOperator(data["matrix"])
    if kind == "shift":
        return ShiftOperator(int(data["offset"]))
    if kind == "rotations":
        planes = tuple(
            (int(p["i"]), int(p["j"]), float(p["angle"])) for p in data["planes"]
        )
        return RotationOperator(planes)
    if kind == "diagonal":
        return DiagonalOperator(
            {int(s): float(c) for s, c in data["entries"].items()},
            float(data.get("default", 0.0)),
        )
    raise ValueError(f"unknown operator type {kind!r}")


def map_to_json(m: MapSpec) -> dict:
    if isinstance(m, AffineMap):
        return {
            "kind": "affine",
            "operator": _operator_to_json(m.operator),
            "translation": m.translation.to_json_dict(),
        }
    if isinstance(m, ShiftMap):
        return {"kind": "shift"}
    if isinstance(m, EdelsteinIsometry):
        return {"kind": "edelstein", "planes": m.plane_count}
    if isinstance(m, AveragedMap):
        return {"kind": "averaged", "weight": m.weight, "inner": map_to_json(m.inner)}
    if isinstance(m, PluginMap):
        return {"kind": "plugin", "name": m.name}
    raise TypeError(f"cannot serialize map of type {type(m).__name__}")


def map_from_json(data: Mapping, space: Space) -> MapSpec:
    kind = data["kind"]
    if kind == "affine":
        op = _operator_from_json(data["operator"])
        translation = SeqVector.from_json_dict(data.get("translation", {}))
        return AffineMap(op, translation, space)
    if kind == "shift":
        if space != L1_SEQ:
            raise ValueError("shift map lives on l1_seq")
        return ShiftMap()
    if kind == "edelstein":
        if space != L2_SEQ:
            raise ValueError("edelstein isometry lives on l2_seq")
        return EdelsteinIsometry(int(data["planes"]))
    if kind == "averaged":
        inner_map = map_from_json(data["inner"], space)
        return AveragedMap(inner_map, float(data.get("weight", 0.5)))
    if kind == "plugin":
        plugin = get_plugin(str(data["name"]))
        if plugin.space != space:
            raise ValueError(
                f"plugin {plugin.name!r} declares {plugin.space.kind}, config says {space.kind}"
            )
        return plugin
    raise ValueError(f"unknown map kind {kind!r}")
