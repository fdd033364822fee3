import math

import numpy as np
import pytest

from horolab.dynamics import (
    Trajectory,
    cosmic_diagnose,
    escape_rate,
    iterate,
    log_checkpoints,
    mean_ergodic,
    monotone_functional_check,
    step_monotone_defect,
    step_norm_check,
)
from horolab.functionals import HilbertFunctional, L1Functional, center
from horolab.maps import (
    AffineMap,
    AveragedMap,
    DenseOperator,
    EdelsteinIsometry,
    ShiftMap,
    SupportWindowError,
    check_nonexpansive,
)
from horolab.sampling import sample_pairs, sample_vectors
from horolab.spaces import (
    L1_SEQ,
    L2_SEQ,
    SeqVector,
    basis,
    euclidean,
    l1_norm,
    norm,
    zero,
)

ROT90 = [[0.0, -1.0], [1.0, 0.0]]


def rotation_translation():
    return AffineMap(DenseOperator(ROT90), basis(1))


# ---------------------------------------------------------------------------
# iterate
# ---------------------------------------------------------------------------


def test_iterate_shift_map():
    traj = iterate(ShiftMap(), zero(), 5)
    assert traj.points[5] == SeqVector({s: 1.0 for s in range(1, 6)})
    assert traj.norms == [0.0, 1.0, 2.0, 3.0, 4.0, 5.0]
    assert traj.step_norms == [1.0] * 5


def test_iterate_identity_is_constant():
    ident = AffineMap(DenseOperator(np.eye(2)))
    traj = iterate(ident, basis(1), 3)
    assert traj.points == [basis(1)] * 4
    assert traj.step_norms == [0.0, 0.0, 0.0]


def test_iterate_rotation_translation_has_period_four():
    traj = iterate(rotation_translation(), zero(), 4)
    expected = [
        zero(),
        SeqVector({1: 1.0}),
        SeqVector({1: 1.0, 2: 1.0}),
        SeqVector({2: 1.0}),
        zero(),
    ]
    assert traj.points == expected


def test_iterate_rejects_inadmissible_start():
    from horolab.spaces import SpaceMismatchError

    ident = AffineMap(DenseOperator(np.eye(2)))
    with pytest.raises(SpaceMismatchError):
        iterate(ident, basis(5), 16)


def test_iterate_respects_support_window():
    with pytest.raises(SupportWindowError) as err:
        iterate(ShiftMap(), zero(), 50, support_window=10)
    assert err.value.iteration == 11  # first iterate whose support leaves 1..10


def test_trajectory_norms_match_points():
    traj = iterate(ShiftMap(), zero(), 64)
    for p, n in zip(traj.points, traj.norms):
        assert n == pytest.approx(norm(p, L1_SEQ), abs=1e-12)


def test_trajectory_csv_layout():
    traj = iterate(ShiftMap(), zero(), 16)
    text = traj.to_csv(coords=(1, 2))
    lines = text.strip().split("\n")
    assert lines[0] == "n,norm,step_norm,x_1,x_2"
    assert lines[1].startswith("0,0.0,,")
    assert lines[2] == "1,1.0,1.0,1.0,0.0"


# ---------------------------------------------------------------------------
# escape rate
# ---------------------------------------------------------------------------


def test_escape_rate_shift_is_one_exactly():
    traj = iterate(ShiftMap(), zero(), 1000)
    rep = escape_rate(traj)
    assert rep.tau_final == 1.0
    assert rep.converged
    assert all(v == 1.0 for _, v in rep.estimates)


def test_escape_rate_translation():
    # T x = x + v with ||v|| = 2: T^n 0 = n v exactly
    m = AffineMap(DenseOperator(np.eye(2)), SeqVector({1: 2.0}))
    traj = iterate(m, zero(), 256)
    rep = escape_rate(traj)
    assert rep.tau_final == pytest.approx(2.0, abs=1e-12)
    assert rep.converged


def test_escape_rate_identity_decays_and_converges():
    ident = AffineMap(DenseOperator(np.eye(2)))
    traj = iterate(ident, basis(1), 4096)
    rep = escape_rate(traj)
    assert rep.tau_final == pytest.approx(0.0, abs=1e-3)
    assert rep.converged


def test_escape_rate_needs_sixteen_points():
    traj = iterate(ShiftMap(), zero(), 8)
    with pytest.raises(ValueError):
        escape_rate(traj)


def test_tau_independent_of_start_point():
    m = ShiftMap()
    n = 512
    t1 = iterate(m, zero(), n)
    x0 = SeqVector({1: 0.5, 2: -0.25})
    t2 = iterate(m, x0, n)
    tau1 = escape_rate(t1).tau_final
    tau2 = escape_rate(t2).tau_final
    assert abs(tau1 - tau2) <= 2.0 * l1_norm(x0) / n + 1e-9


def test_tau_matches_stored_norms():
    traj = iterate(ShiftMap(), zero(), 128)
    rep = escape_rate(traj)
    assert abs(rep.tau_final - traj.norms[-1] / traj.iterations) <= 1e-9


def test_log_checkpoints_shape():
    ks = log_checkpoints(1000)
    assert ks[-1] == 1000 and ks == sorted(ks) and len(ks) >= 3


# ---------------------------------------------------------------------------
# step norms
# ---------------------------------------------------------------------------


def test_step_norms_nonincreasing_for_zoo(rng):
    window = tuple(range(1, 9))
    for m, space in [
        (ShiftMap(), L1_SEQ),
        (EdelsteinIsometry(3), L2_SEQ),
        (AveragedMap(rotation_translation(), 0.5), euclidean(2)),
    ]:
        assert check_nonexpansive(m, sample_pairs(rng, window if space != euclidean(2) else (1, 2), 200), space).passed
        x0 = sample_vectors(rng, window if space != euclidean(2) else (1, 2), 1)[0]
        traj = iterate(m, x0, 64)
        assert step_monotone_defect(traj) <= 1e-9


def test_step_norm_check_identity():
    ident = AffineMap(DenseOperator(np.eye(2)))
    traj = iterate(ident, basis(1), 32)
    rep = step_norm_check(traj, tau=0.0)
    assert rep.defect == 0.0 and rep.passed


def test_step_norm_check_shift_matches_tau_without_firmness():
    traj = iterate(ShiftMap(), zero(), 1000)
    rep = step_norm_check(traj, tau=1.0)
    assert rep.defect == pytest.approx(0.0, abs=1e-12)


def test_step_norm_check_rotation_defect_is_sqrt_two():
    # pure rotation from (1, 0): tau = 0 but every step has norm sqrt(2)
    rot = AffineMap(DenseOperator(ROT90))
    traj = iterate(rot, basis(1), 1000)
    rep = step_norm_check(traj, tau=0.0)
    assert rep.defect == pytest.approx(math.sqrt(2.0), abs=1e-9)
    assert not rep.passed


# ---------------------------------------------------------------------------
# cosmic directions
# ---------------------------------------------------------------------------


def test_cosmic_shift_has_no_limit_points():
    traj = iterate(ShiftMap(), zero(), 1000)
    rep = cosmic_diagnose(traj)
    assert rep.verdict == "NONE"
    assert rep.strong_cauchy_defect == pytest.approx(1.0, abs=1e-9)
    assert max(abs(v) for v in rep.coordinate_limits.values()) <= 1e-6
    for _, d in rep.directions:
        assert l1_norm(d) == pytest.approx(1.0, abs=1e-9)
    assert "Schur" in rep.note


def test_cosmic_translation_is_strong():
    m = AffineMap(DenseOperator(np.eye(2)), SeqVector({1: 1.2, 2: -0.9}))
    traj = iterate(m, zero(), 256)
    rep = cosmic_diagnose(traj)
    assert rep.verdict == "STRONG"
    assert rep.strong_cauchy_defect == pytest.approx(0.0, abs=1e-12)


def test_cosmic_bounded_orbit_is_undefined():
    traj = iterate(rotation_translation(), zero(), 64)
    rep = cosmic_diagnose(traj)
    assert rep.verdict == "UNDEFINED_BOUNDED_ORBIT"


def test_cosmic_weak_only_candidate_from_drifting_mass():
    # mass escaping through ever-higher coordinates outside the tracked
    # window: every tracked coordinate settles at a nonzero limit while the
    # doubling-lag defect stays bounded away from 0
    points, norms = [], []
    for n in range(257):
        vec = SeqVector({1: float(n), 50 + (n % 5): n / 2.0})
        points.append(vec)
        norms.append(norm(vec, L2_SEQ))
    traj = Trajectory(points, norms, [0.0] * 256, L2_SEQ)
    rep = cosmic_diagnose(traj, coord_window=tuple(range(1, 33)))
    assert rep.verdict == "WEAK_ONLY_CANDIDATE"
    assert rep.coordinate_limits[1] == pytest.approx(1 / math.sqrt(1.25), abs=1e-2)


def test_cosmic_unsettled_coordinates_mean_none():
    points, norms = [], []
    for n in range(257):
        sign = 1.0 if n < 192 else -1.0  # coordinate 2 flips between snapshots
        vec = SeqVector({1: float(n), 2: sign * n / 2.0})
        points.append(vec)
        norms.append(norm(vec, L2_SEQ))
    traj = Trajectory(points, norms, [0.0] * 256, L2_SEQ)
    rep = cosmic_diagnose(traj)
    assert rep.verdict == "NONE"
    assert "settle" in rep.note


# ---------------------------------------------------------------------------
# mean ergodic averages
# ---------------------------------------------------------------------------


def test_mean_ergodic_identity():
    v = SeqVector({1: 0.4, 2: -1.1})
    rep = mean_ergodic(np.eye(2), v, 400)
    assert rep.projection == v
    assert rep.gap <= 1e-12
    assert rep.cesaro_defect <= 1e-12


def test_mean_ergodic_rotation_has_zero_projection():
    rep = mean_ergodic(np.array(ROT90), basis(1), 400)
    assert rep.projection == zero()
    assert rep.gap <= 2.0 * 1.0 / 400  # Cesaro bound 2 ||v|| / n
    assert rep.cesaro_defect <= 1e-12


def test_mean_ergodic_contracting_coordinate():
    rep = mean_ergodic(np.diag([1.0, 0.5]), SeqVector({1: 2.0, 2: 1.0}), 1000)
    assert rep.projection == SeqVector({1: 2.0})
    # geometric series in the contracting coordinate: gap <= 2/n
    assert rep.gap <= 2.0e-3
    assert rep.cesaro_defect <= 1e-12


def test_escape_rate_dominates_projection_norm():
    for mat, v in [
        (np.diag([1.0, 0.3, 0.3]), SeqVector({1: 2.0, 2: 1.0})),
        (np.eye(2), SeqVector({1: 1.5})),
        (np.array(ROT90), basis(1)),
    ]:
        m = AffineMap(DenseOperator(mat), v)
        traj = iterate(m, zero(), 1000)
        tau = escape_rate(traj).tau_final
        proj = mean_ergodic(mat, v, 1000).projection
        assert tau >= norm(proj, euclidean(mat.shape[0])) - 1e-3


# ---------------------------------------------------------------------------
# monotone functionals
# ---------------------------------------------------------------------------


def test_monotone_shift_decays_by_exactly_tau(rng):
    h = L1Functional({s: center(1.0) for s in range(1, 34)})
    samples = sample_vectors(rng, tuple(range(1, 33)), 500)
    rep = monotone_functional_check(ShiftMap(), h, samples, tau=1.0)
    assert rep.passed
    assert rep.worst == pytest.approx(-1.0, abs=1e-12)


def test_monotone_identity_is_flat(rng):
    ident = AffineMap(DenseOperator(np.eye(2)))
    h = HilbertFunctional("norm")
    rep = monotone_functional_check(ident, h, sample_vectors(rng, (1, 2), 100))
    assert rep.worst == 0.0 and rep.passed


def test_monotone_translation_with_linear_functional(rng):
    m = AffineMap(DenseOperator(np.zeros((2, 2))), basis(1))
    m_ident = AffineMap(DenseOperator(np.eye(2)), basis(1))
    h = HilbertFunctional("linear", v=basis(1))  # h(x) = -(x, e1)
    for mm in (m_ident,):
        rep = monotone_functional_check(mm, h, sample_vectors(rng, (1, 2), 100))
        assert rep.worst == pytest.approx(-1.0, abs=1e-12)
