"""Equilibrium location, classification, and the two stability theories."""

import math

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from nsfd import (
    ASYMPTOTICALLY_STABLE,
    MARGINAL,
    UNSTABLE,
    FamilyMismatch,
    NotStableError,
    SplitSystem,
    State,
    classify_point,
    continuous_eigs,
    critical_step_E3,
    discrete_eigs,
    ensfd,
    exponential_weight,
    field_jacobian,
    find_equilibria,
    jury_check,
    make_rosenzweig_macarthur,
    model1,
    model2,
    nsfd_map_jacobian,
    nsfd_step,
    stability_report,
    vector_field,
)

SQRT47_OVER_20 = math.sqrt(47.0) / 20.0


def test_classify_point_families():
    assert classify_point(0.0, 0.0) == "O"
    assert classify_point(3.0, 0.0) == "E1"
    assert classify_point(0.0, 0.25) == "E2"
    assert classify_point(0.25, 0.46875) == "E3"
    # coordinates below the axis threshold count as zero
    assert classify_point(5e-10, 3.0) == "E2"
    assert classify_point(1.0, 5e-10) == "E1"


def test_model1_equilibria():
    eqs = find_equilibria(model1())
    assert [(p.x, p.y, p.family) for p in eqs] == [(0.0, 0.0, "O"), (1.0, 0.0, "E1")]
    assert eqs.degenerate == ()


def test_model2_equilibria():
    eqs = find_equilibria(model2())
    assert len(eqs) == 3
    assert [p.family for p in eqs] == ["O", "E3", "E1"]
    p3 = eqs[1]
    assert p3.x == pytest.approx(0.25, abs=1e-12)
    assert p3.y == pytest.approx(0.46875, abs=1e-12)


def test_reported_equilibria_null_the_vector_field():
    for system in (model1(), model2()):
        for p in find_equilibria(system):
            vx, vy = vector_field(system, p.state)
            assert abs(vx) < 1e-12 and abs(vy) < 1e-12, (p, vx, vy)


def test_degenerate_axis_family_is_flagged_not_enumerated():
    # f_plus = f_minus everywhere on the x axis, so the whole axis is
    # equilibria.  The finder must flag the family instead of returning
    # grid-dependent points.
    system = SplitSystem(
        lambda x, y: 1.0,
        lambda x, y: 1.0 + y,
        lambda x, y: 0.5,
        lambda x, y: 1.0,
        name="degenerate_e1",
    )
    eqs = find_equilibria(system)
    assert "E1" in eqs.degenerate
    assert [p.family for p in eqs] == ["O"]


def test_continuous_eigs_model1():
    m1 = model1()
    eqs = find_equilibria(m1)
    origin = continuous_eigs(m1, eqs[0])
    assert origin.lambda1 == pytest.approx(1.0, abs=1e-12)
    assert origin.lambda2 == pytest.approx(-6.0, abs=1e-12)
    assert origin.verdict == UNSTABLE
    prey = continuous_eigs(m1, eqs[1])
    assert prey.lambda1 == pytest.approx(-1.0, abs=1e-12)
    assert prey.lambda2 == pytest.approx(-16.0 / 3.0, abs=1e-12)
    assert prey.verdict == ASYMPTOTICALLY_STABLE


def test_continuous_eigs_model2():
    m2 = model2()
    eqs = find_equilibria(m2)
    origin = continuous_eigs(m2, eqs[0])
    assert (origin.lambda1, origin.lambda2) == (pytest.approx(1.0), pytest.approx(-0.2))
    prey = continuous_eigs(m2, eqs[2])
    assert (prey.lambda1, prey.lambda2) == (pytest.approx(-1.0), pytest.approx(0.3))
    assert prey.verdict == UNSTABLE
    coex = continuous_eigs(m2, eqs[1])
    assert coex.lambda1 == pytest.approx(complex(-0.05, -SQRT47_OVER_20), abs=1e-9)
    assert coex.lambda2 == pytest.approx(complex(-0.05, +SQRT47_OVER_20), abs=1e-9)
    assert coex.verdict == ASYMPTOTICALLY_STABLE
    assert coex.T == pytest.approx(-0.1, abs=1e-12)
    assert coex.D == pytest.approx(0.12, abs=1e-12)


def test_continuous_eigs_agree_with_dense_eigensolver():
    # the closed forms must match numpy on the full Jacobian
    for system in (model1(), model2()):
        for p in find_equilibria(system):
            res = continuous_eigs(system, p)
            ref = sorted(np.linalg.eigvals(field_jacobian(system, p.state)),
                         key=lambda z: (z.real, z.imag))
            got = sorted([complex(res.lambda1), complex(res.lambda2)],
                         key=lambda z: (z.real, z.imag))
            for g, r in zip(got, ref):
                assert abs(g - r) < 1e-9


@given(alpha=st.floats(-3.0, 3.0), beta=st.floats(-3.0, 3.0))
@settings(max_examples=300, deadline=None)
def test_jury_conditions_match_root_moduli(alpha, beta):
    # z^2 + alpha z + beta is Schur stable iff all three conditions hold.
    # Near-boundary draws are discarded: the two sides legitimately
    # disagree inside floating-point slack.
    margin = min(abs(1 + alpha + beta), abs(1 - alpha + beta), abs(1 - beta))
    assume(margin > 1e-6)
    roots = np.roots([1.0, alpha, beta])
    stable = bool(np.all(np.abs(roots) < 1.0))
    assert all(jury_check(alpha, beta)) == stable


def test_discrete_eigs_model1_frozen_values():
    m1 = model1()
    eqs = find_equilibria(m1)
    origin = discrete_eigs(m1, eqs[0], 0.1)
    assert origin.gamma1 == pytest.approx(1.1, rel=1e-14)
    assert origin.gamma2 == pytest.approx(0.625, rel=1e-14)
    assert origin.verdict == UNSTABLE
    prey = discrete_eigs(m1, eqs[1], 0.1)
    assert prey.gamma1 == pytest.approx(0.9090909090909091, rel=1e-13)
    assert prey.gamma2 == pytest.approx(0.6666666666666666, rel=1e-13)
    assert prey.jury == (True, True, True)
    assert prey.verdict == ASYMPTOTICALLY_STABLE


def test_discrete_multipliers_are_map_jacobian_eigenvalues():
    # the family formulas must agree with the spectrum of the actual
    # update-map Jacobian at the same point
    for system in (model1(), model2()):
        for p in find_equilibria(system):
            for h in (0.1, 0.5, 2.0):
                d = discrete_eigs(system, p, h)
                jac = nsfd_map_jacobian(system, p.state, h)
                ref = sorted(np.linalg.eigvals(jac), key=lambda z: (z.real, z.imag))
                got = sorted([complex(d.gamma1), complex(d.gamma2)],
                             key=lambda z: (z.real, z.imag))
                for g, r in zip(got, ref):
                    assert abs(g - r) < 1e-8, (system.name, p, h)


def test_map_jacobian_matches_finite_differences():
    m2 = model2()
    s = State(0.7, 0.9)
    h = 0.5
    jac = nsfd_map_jacobian(m2, s, h)
    eps = 1e-6

    def map_xy(x, y):
        nxt = nsfd_step(m2, State(x, y), h)
        return np.array([nxt.x, nxt.y])

    fd = np.column_stack([
        (map_xy(s.x + eps, s.y) - map_xy(s.x - eps, s.y)) / (2 * eps),
        (map_xy(s.x, s.y + eps) - map_xy(s.x, s.y - eps)) / (2 * eps),
    ])
    assert np.allclose(jac, fd, rtol=1e-6, atol=1e-9)


def test_map_jacobian_consistent_with_flow_linearisation():
    # (J(h) - I)/h converges to the vector-field Jacobian
    m1 = model1()
    s = State(0.7, 0.9)
    a = field_jacobian(m1, s)
    h = 1e-7
    approx = (nsfd_map_jacobian(m1, s, h) - np.eye(2)) / h
    assert np.allclose(approx, a, rtol=0, atol=1e-5)


def test_weighted_map_jacobian_is_substitution():
    m2 = model2()
    s = State(0.4, 0.8)
    w = exponential_weight(2.0)
    jw = nsfd_map_jacobian(m2, s, 0.5, weight=w)
    jp = nsfd_map_jacobian(m2, s, w.phi(0.5))
    assert np.allclose(jw, jp, rtol=1e-15, atol=0)


def test_trace_det_identity_at_coexistence_point():
    # 1 - T + D of the map equals e^2 det(A) / ((1+e f+)(1+e g+)); this is
    # what makes the discrete stability boundary land exactly where the
    # quadratic says it does.
    m2 = model2()
    p3 = find_equilibria(m2)[1]
    cont = continuous_eigs(m2, p3)
    fp, _, gp, _ = m2.components(p3.x, p3.y)
    for h in (0.1, 0.5, 1.0, 2.0):
        jac = nsfd_map_jacobian(m2, p3.state, h)
        t_phi = float(np.trace(jac))
        d_phi = float(np.linalg.det(jac))
        lhs = 1.0 - t_phi + d_phi
        rhs = h * h * cont.D / ((1.0 + h * fp) * (1.0 + h * gp))
        assert abs(lhs - rhs) <= 1e-10 * abs(rhs)


def test_critical_step_frozen_value():
    m2 = model2()
    p3 = find_equilibria(m2)[1]
    crit = critical_step_E3(m2, p3)
    assert crit.bound == pytest.approx(1.0, abs=1e-9)
    assert crit.binding_condition == "c"
    assert math.isinf(crit.bound_a)
    assert crit.bound_c == pytest.approx(1.0, abs=1e-9)


def test_critical_step_is_sharp():
    m2 = model2()
    p3 = find_equilibria(m2)[1]
    below = discrete_eigs(m2, p3, 0.99)
    at = discrete_eigs(m2, p3, 1.0)
    above = discrete_eigs(m2, p3, 1.01)
    assert below.verdict == ASYMPTOTICALLY_STABLE
    assert max(abs(below.gamma1), abs(below.gamma2)) < 1.0
    assert at.verdict == MARGINAL
    assert above.verdict == UNSTABLE
    assert max(abs(above.gamma1), abs(above.gamma2)) > 1.0


def test_critical_step_requires_interior_family():
    m1 = model1()
    prey = find_equilibria(m1)[1]
    with pytest.raises(FamilyMismatch):
        critical_step_E3(m1, prey)


def test_critical_step_requires_continuous_stability():
    # small half-saturation pushes the coexistence point into the unstable
    # range, where no step bound is defined; the search box is sized to the
    # scale the dynamics actually live at
    system = make_rosenzweig_macarthur(2.0, 1.0, 0.2, 1.0 / 3.0, x_max=2.0)
    eqs = find_equilibria(system)
    coex = [p for p in eqs if p.family == "E3"]
    assert len(coex) == 1
    assert continuous_eigs(system, coex[0]).verdict == UNSTABLE
    with pytest.raises(NotStableError):
        critical_step_E3(system, coex[0])


def test_synthetic_boundary_points_are_found(stable_e1_system, stable_e2_system,
                                             sink_origin_system):
    e1 = find_equilibria(stable_e1_system)
    assert [(p.x, p.y, p.family) for p in e1] == [(0.0, 0.0, "O"), (1.0, 0.0, "E1")]
    e2 = find_equilibria(stable_e2_system)
    assert [(p.x, p.y, p.family) for p in e2] == [(0.0, 0.0, "O"), (0.0, 1.0, "E2")]
    o = find_equilibria(sink_origin_system)
    assert [(p.x, p.y, p.family) for p in o] == [(0.0, 0.0, "O")]
    assert continuous_eigs(stable_e1_system, e1[1]).verdict == ASYMPTOTICALLY_STABLE
    assert continuous_eigs(stable_e2_system, e2[1]).verdict == ASYMPTOTICALLY_STABLE
    assert continuous_eigs(sink_origin_system, o[0]).verdict == ASYMPTOTICALLY_STABLE


def test_boundary_multipliers_have_closed_forms(stable_e1_system):
    # E1 at (1, 0): gamma1 = 1 - e/(1+e), gamma2 = (1 + e/2)/(1 + e)
    p = find_equilibria(stable_e1_system)[1]
    for h in (0.01, 1.0, 50.0):
        d = discrete_eigs(stable_e1_system, p, h)
        assert d.gamma1 == pytest.approx(1.0 - h / (1.0 + h), rel=1e-9)
        assert d.gamma2 == pytest.approx((1.0 + 0.5 * h) / (1.0 + h), rel=1e-9)
        assert d.verdict == ASYMPTOTICALLY_STABLE


def test_stability_report_payload():
    m2 = model2()
    p3 = find_equilibria(m2)[1]
    rep = stability_report(m2, p3, hs=(0.5, 2.0))
    assert rep["family"] == "E3"
    assert rep["continuous"]["verdict"] == ASYMPTOTICALLY_STABLE
    assert rep["continuous"]["lambda1"] == {
        "re": pytest.approx(-0.05), "im": pytest.approx(-SQRT47_OVER_20)}
    assert [d["h"] for d in rep["discrete"]] == [0.5, 2.0]
    assert rep["discrete"][0]["verdict"] == ASYMPTOTICALLY_STABLE
    assert rep["discrete"][1]["verdict"] == UNSTABLE
    assert rep["critical_step"]["bound"] == pytest.approx(1.0, abs=1e-9)
    assert rep["critical_step"]["bound_a"] == "unbounded"
    assert rep["critical_step"]["binding_condition"] == "c"


def test_stability_report_skips_critical_step_off_family():
    m1 = model1()
    prey = find_equilibria(m1)[1]
    rep = stability_report(m1, prey, hs=(0.1,))
    assert rep["critical_step"] is None
    assert rep["discrete"][0]["verdict"] == ASYMPTOTICALLY_STABLE


def test_weighted_discrete_eigs_use_the_effective_step():
    m2 = model2()
    p3 = find_equilibria(m2)[1]
    w = exponential_weight(2.0)
    dw = discrete_eigs(m2, p3, 4.0, weight=w)
    dp = discrete_eigs(m2, p3, w.phi(4.0))
    assert dw.gamma1 == pytest.approx(dp.gamma1, rel=1e-14)
    assert dw.gamma2 == pytest.approx(dp.gamma2, rel=1e-14)
    # phi caps at 1/lambda = 0.5 < 1 = critical step, so the weighted
    # scheme keeps the coexistence point stable at any h
    for h in (1.0, 10.0, 1e3):
        assert discrete_eigs(m2, p3, h, weight=w).verdict == ASYMPTOTICALLY_STABLE
