import math

import numpy as np
import pytest

from horolab.maps import (
    AffineMap,
    AveragedMap,
    DenseOperator,
    DiagonalOperator,
    EdelsteinIsometry,
    RotationOperator,
    ShiftMap,
    ShiftOperator,
    SupportWindowError,
    check_firm,
    check_nonexpansive,
    get_plugin,
    map_from_json,
    map_to_json,
    operator_norm_estimate,
    register_plugin,
    unregister_plugin,
)
from horolab.sampling import sample_pairs
from horolab.spaces import (
    L1_SEQ,
    L2_SEQ,
    SeqVector,
    SpaceMismatchError,
    basis,
    euclidean,
    norm,
    zero,
)

ROT90 = [[0.0, -1.0], [1.0, 0.0]]


def edelstein_norm_oracle(k: int, planes: int) -> float:
    # plane n of the orbit of 0 sits at distance 2|sin(pi k / n!)| from 0
    return math.sqrt(
        sum(4.0 * math.sin(math.pi * k / math.factorial(n)) ** 2 for n in range(1, planes + 1))
    )


def test_shift_map_prepends_one():
    m = ShiftMap()
    assert m.apply(zero()) == basis(1)
    assert m.apply(SeqVector({1: 5.0, 2: -1.0})) == SeqVector({1: 1.0, 2: 5.0, 3: -1.0})


def test_shift_map_rejects_nonpositive_support():
    with pytest.raises(SpaceMismatchError):
        ShiftMap().apply(basis(0))


def test_shift_orbit_closed_form_exact():
    m = ShiftMap()
    x = zero()
    checkpoints = {1, 10, 100, 1000, 10000}
    for n in range(1, 10001):
        x = m.apply(x)
        if n in checkpoints:
            assert dict(x.items()) == {s: 1.0 for s in range(1, n + 1)}


def test_identity_affine_map():
    m = AffineMap(DenseOperator(np.eye(3)))
    x = SeqVector({1: 1.0, 3: -2.0})
    assert m.apply(x) == x


def test_dense_operator_rejects_expansive_matrix():
    with pytest.raises(ValueError):
        DenseOperator([[2.0]])


def test_dense_operator_rejects_nonfinite_entries():
    with pytest.raises(ValueError):
        DenseOperator([[float("nan"), 0.0], [0.0, 0.5]])
    with pytest.raises(ValueError):
        DenseOperator([[0.0, 1.0]])  # not square


def test_rotation_operator_is_confined_to_hilbert_spaces():
    # a quarter turn sends e1 to e2 isometrically in l2 but doubles nothing
    # in l1 only by luck of the axes; at 45 degrees the l1 ratio is sqrt(2)
    rot = RotationOperator(((1, 2, math.pi / 4),))
    with pytest.raises(ValueError):
        AffineMap(rot, zero(), L1_SEQ)
    m = AffineMap(rot, zero(), L2_SEQ)  # fine on a Hilbert tag
    out = m.apply(basis(1))
    assert norm(out, L2_SEQ) == pytest.approx(1.0, abs=1e-12)


def test_checker_flags_expansive_map_built_unverified():
    m = AffineMap(DenseOperator([[2.0]], verify=False))
    rep = check_nonexpansive(m, [(basis(1), zero())], euclidean(1))
    assert rep.max_ratio == pytest.approx(2.0, abs=1e-12)
    assert not rep.passed


def test_operator_norm_estimate_on_known_matrices():
    assert operator_norm_estimate(np.eye(4)) == pytest.approx(1.0, abs=1e-9)
    assert operator_norm_estimate(np.diag([0.3, 0.9])) == pytest.approx(0.9, abs=1e-9)
    assert operator_norm_estimate(np.array(ROT90)) == pytest.approx(1.0, abs=1e-9)


def test_structured_operators():
    assert ShiftOperator(2).apply(SeqVector({1: 1.0, 5: 2.0})) == SeqVector({3: 1.0, 7: 2.0})
    rot = RotationOperator(((1, 2, math.pi / 2),))
    out = rot.apply(basis(1))
    assert out[1] == pytest.approx(0.0, abs=1e-15) and out[2] == pytest.approx(1.0)
    diag = DiagonalOperator({1: 0.5}, default=1.0)
    assert diag.apply(SeqVector({1: 2.0, 9: 3.0})) == SeqVector({1: 1.0, 9: 3.0})
    with pytest.raises(ValueError):
        DiagonalOperator({1: 1.5})
    with pytest.raises(ValueError):
        RotationOperator(((1, 2, 0.1), (2, 3, 0.2)))  # shared index


def test_averaged_of_reflection_is_constant_map(rng):
    reflect = AffineMap(DenseOperator(-np.eye(2)))
    m = AveragedMap(reflect, 0.5)
    pairs = sample_pairs(rng, (1, 2), 100)
    for x, _ in pairs:
        assert m.apply(x) == zero()


def test_edelstein_first_application_plane_norms():
    m = EdelsteinIsometry(3)
    y = m.apply(zero())
    # plane norms 2 sin(pi k / n!) at k = 1: plane 1 -> 0, plane 2 -> 2, plane 3 -> 1
    plane = lambda n: math.hypot(y[2 * n - 1], y[2 * n])
    assert plane(1) == pytest.approx(0.0, abs=1e-12)
    assert plane(2) == pytest.approx(2.0, abs=1e-12)
    assert plane(3) == pytest.approx(1.0, abs=1e-12)


def test_edelstein_iterates_match_closed_form():
    m = EdelsteinIsometry(6)
    x = zero()
    for k in range(1, 721):
        x = m.apply(x)
        assert norm(x, L2_SEQ) == pytest.approx(edelstein_norm_oracle(k, 6), abs=1e-9)


def test_firm_check_rejects_rotation_at_witness():
    rot = AffineMap(DenseOperator(ROT90))
    rep = check_firm(rot, [(basis(1), zero())], euclidean(2), t_grid=(0.5,))
    # ||0.5 (Tx - Ty) + 0.5 (x - y)|| = sqrt(1/2) while ||Tx - Ty|| = 1
    assert rep.worst_margin == pytest.approx(math.sqrt(0.5) - 1.0, abs=1e-12)
    assert not rep.passed
    assert rep.witness[2] == 0.5


def test_firm_check_passes_identity(rng):
    ident = AffineMap(DenseOperator(np.eye(2)))
    rep = check_firm(ident, sample_pairs(rng, (1, 2), 50), euclidean(2))
    assert rep.passed
    assert rep.worst_margin == pytest.approx(0.0, abs=1e-12)


def test_half_average_of_rotation_is_firm(rng):
    rot = AffineMap(DenseOperator(ROT90), basis(1))
    m = AveragedMap(rot, 0.5)
    rep = check_firm(m, sample_pairs(rng, (1, 2), 2000), euclidean(2))
    assert rep.passed


def test_half_average_is_firm_whenever_inner_is_nonexpansive(rng):
    pairs = sample_pairs(rng, (1, 2, 3), 500)
    space = euclidean(3)
    theta = 0.9
    plane_rot = np.eye(3)
    plane_rot[:2, :2] = [
        [math.cos(theta), -math.sin(theta)],
        [math.sin(theta), math.cos(theta)],
    ]
    inners = [
        AffineMap(DenseOperator(np.diag([1.0, -0.4, 0.8])), basis(2)),
        AffineMap(DenseOperator(plane_rot), basis(1)),
        AveragedMap(AffineMap(DenseOperator(np.diag([-1.0, 1.0, 0.5]))), 0.5),
    ]
    for inner in inners:
        assert check_nonexpansive(inner, pairs, space).passed
        rep = check_firm(AveragedMap(inner, 0.5), pairs, space)
        assert rep.passed, rep.worst_margin


@pytest.mark.parametrize(
    "make,space,window",
    [
        (lambda: ShiftMap(), L1_SEQ, tuple(range(1, 17))),
        (lambda: EdelsteinIsometry(4), L2_SEQ, tuple(range(1, 17))),
        (lambda: AffineMap(DenseOperator(ROT90), basis(1)), euclidean(2), (1, 2)),
        (
            lambda: AveragedMap(AffineMap(DenseOperator(ROT90), basis(2)), 0.5),
            euclidean(2),
            (1, 2),
        ),
        (
            lambda: AffineMap(DiagonalOperator({1: -0.5}, 0.9), basis(3), L1_SEQ),
            L1_SEQ,
            tuple(range(1, 17)),
        ),
    ],
)
def test_zoo_maps_are_nonexpansive(make, space, window, rng):
    rep = check_nonexpansive(make(), sample_pairs(rng, window, 10000), space)
    assert rep.passed, rep.max_ratio


def test_edelstein_is_an_isometry(rng):
    rep = check_nonexpansive(
        EdelsteinIsometry(6), sample_pairs(rng, tuple(range(1, 13)), 1000), L2_SEQ
    )
    assert rep.max_ratio == pytest.approx(1.0, abs=1e-9)


def test_plugin_registry_and_window():
    try:
        register_plugin("double-index", lambda x: SeqVector({2 * s: c for s, c in x.items()}),
                        L1_SEQ, support_window=100)
        m = get_plugin("double-index")
        assert m.apply(basis(3)) == basis(6)
        with pytest.raises(SupportWindowError):
            m.apply(basis(80))
    finally:
        unregister_plugin("double-index")
    with pytest.raises(KeyError):
        get_plugin("double-index")


def test_map_json_round_trip(rng):
    maps = [
        AffineMap(DenseOperator(ROT90), basis(1)),
        AffineMap(DiagonalOperator({2: 0.5}, 1.0), basis(1), L1_SEQ),
        AffineMap(ShiftOperator(1), zero(), L1_SEQ),
        AffineMap(RotationOperator(((1, 2, 0.7),)), zero(), L2_SEQ),
        ShiftMap(),
        EdelsteinIsometry(3),
        AveragedMap(ShiftMap(), 0.25),
    ]
    for m in maps:
        data = map_to_json(m)
        back = map_from_json(data, m.space)
        for x, _ in sample_pairs(rng, tuple(range(1, 3)), 5):
            assert back.apply(x) == m.apply(x)


def test_plugin_json_requires_registration():
    with pytest.raises(KeyError):
        map_from_json({"kind": "plugin", "name": "nope"}, L1_SEQ)
