import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from chemofluid.errors import InsufficientDataError, NumericError, UnsupportedRegimeError
from chemofluid.functionals import (
    LyapunovSample,
    check_dissipation,
    energy_monotonicity_violations,
    energy_weights,
    lyapunov,
    norm,
    quadratic_sandwich_violations,
    relative_entropy_density,
)
from chemofluid.grid import DomainSpec, VectorField
from chemofluid.model import ModelParams, Regime, classify_regime, equilibrium
from chemofluid.solver import State, equilibrium_state


def _state(dom, n1, n2, c=0.0, t=0.0):
    full = lambda v: np.broadcast_to(np.asarray(v, dtype=float), dom.shape).copy()
    return State(t, full(n1), full(n2), full(c), VectorField.zeros(dom), np.zeros(dom.shape), dom)


def test_norm_trivial_cases():
    dom = DomainSpec(1.0, 1.0, 8, 8)
    f = np.full(dom.shape, 0.3)
    for kind in ("L1", "L2sq", "Linf"):
        assert norm(f, dom, kind, 0.3) == 0.0
        assert norm(np.ones(dom.shape), dom, kind) == pytest.approx(1.0, abs=1e-15)
    with pytest.raises(ValueError):
        norm(f, dom, "H1")


def test_norm_matches_direct_summation():
    dom = DomainSpec(1.0, 2.0, 4, 4)
    f = np.random.default_rng(0).standard_normal((4, 4))
    h = 0.25 * 0.5
    l1 = l2 = linf = 0.0
    for i in range(4):
        for j in range(4):
            d = f[i, j] - 0.1
            l1 += abs(d) * h
            l2 += d * d * h
            linf = max(linf, abs(d))
    assert norm(f, dom, "L1", 0.1) == pytest.approx(l1, rel=1e-14)
    assert norm(f, dom, "L2sq", 0.1) == pytest.approx(l2, rel=1e-14)
    assert norm(f, dom, "Linf", 0.1) == linf


def test_vector_norms():
    dom = DomainSpec(1.0, 1.0, 4, 4)
    vel = VectorField.zeros(dom)
    vel.u[1:-1, :] = 2.0
    assert norm(vel, dom, "L2sq") == pytest.approx(3 * 4 * 4.0 / 16)
    assert norm(vel, dom, "Linf") == pytest.approx(2.0)  # interior cells average two faces of 2
    with pytest.raises(ValueError):
        norm(vel, dom, "L1", shift=1.0)


@pytest.mark.parametrize("a1,a2", [(0.5, 0.5), (0.25, 0.5), (1.2, 0.5), (0.5, 1.2)])
def test_energy_vanishes_at_equilibrium(a1, a2):
    p = ModelParams(a1, a2)
    dom = DomainSpec(1.0, 1.0, 8, 8)
    s = lyapunov(equilibrium_state(p, dom), p, classify_regime(a1, a2))
    assert abs(s.E) < 1e-15 and abs(s.F) < 1e-15
    assert all(v < 1e-15 for v in s.norms.values())


def test_case_one_signal_only_energy():
    p = ModelParams(0.25, 0.5, chi1=0.6, chi2=0.3, mu1=1.5, mu2=0.8)
    eq = equilibrium(p)
    dom = DomainSpec(2.0, 1.0, 8, 4)
    c0 = 0.4
    s = lyapunov(_state(dom, eq.n1_star, eq.n2_star, c0), p, Regime.COEXISTENCE)
    k = 0.25 * 1.5 / (0.5 * 0.8)
    expected = 0.5 * (eq.n1_star * 0.36 / 4 + k * eq.n2_star * 0.09 / 4 + 1) * c0**2 * 2.0
    assert s.E == pytest.approx(expected, rel=1e-14)
    assert s.F < 1e-28


def test_case_two_hand_example():
    p = ModelParams(1.2, 0.5)
    dom = DomainSpec(1.0, 1.0, 8, 8)
    s = lyapunov(_state(dom, 0.1, 1.0, 0.0), p, Regime.EXCLUSION_II)
    assert s.E == pytest.approx(0.1, rel=1e-14)
    assert s.F == pytest.approx(0.01, rel=1e-14)


def test_case_three_mirrors_case_two():
    p = ModelParams(1.2, 0.5, chi1=0.3, chi2=0.7, mu1=1.4, mu2=0.6)
    q = p.swapped()
    dom = DomainSpec(1.0, 1.0, 8, 8)
    rng = np.random.default_rng(3)
    n1, n2, c = rng.uniform(0.01, 0.3, dom.shape), rng.uniform(0.6, 1.4, dom.shape), rng.uniform(0, 1, dom.shape)
    s2 = lyapunov(_state(dom, n1, n2, c), p, Regime.EXCLUSION_II)
    s3 = lyapunov(_state(dom, n2, n1, c), q, Regime.EXCLUSION_III)
    # the third energy is the swapped second one scaled by a1 mu1 / mu2 of the swapped system
    scale = q.a1 * q.mu1 / q.mu2
    assert s3.E == pytest.approx(scale * s2.E, rel=1e-12)
    assert s3.F == pytest.approx(s2.F, rel=1e-12)


def test_energy_scales_with_area():
    p = ModelParams(0.5, 0.5)
    e = [lyapunov(_state(DomainSpec(L, 1.0, 8, 8), 0.5, 0.9, 0.2), p, Regime.COEXISTENCE).E
         for L in (1.0, 3.0)]
    assert e[1] == pytest.approx(3 * e[0], rel=1e-13)


def test_weights_and_unsupported():
    w = energy_weights(ModelParams(0.5, 0.5), Regime.COEXISTENCE)
    assert w == pytest.approx((1.0, 1.0, 0.5 * (2 / 3 * 0.25 / 4 * 2 + 1)))
    with pytest.raises(UnsupportedRegimeError):
        energy_weights(ModelParams(0.5, 0.5), Regime.UNSUPPORTED)


def test_log_floor_counts_and_nonfinite():
    p = ModelParams(0.5, 0.5)
    dom = DomainSpec(1.0, 1.0, 4, 4)
    st = _state(dom, 0.5, 0.5)
    st.n1[0, 0] = 0.0
    s = lyapunov(st, p, Regime.COEXISTENCE)
    assert s.log_floor_hits == 1 and math.isfinite(s.E)
    st.c[1, 1] = np.inf
    with pytest.raises(NumericError, match="'c'"):
        lyapunov(st, p, Regime.COEXISTENCE)


@given(st.floats(1e-12, 50.0), st.floats(0.05, 2.0))
def test_relative_entropy_accuracy(n, n_star):
    got, hits = relative_entropy_density(np.array([n]), n_star, 1e-14)
    ref = n - n_star - n_star * math.log(n / n_star)
    assert hits == 0 and got[0] >= 0
    assert abs(got[0] - ref) <= 1e-12 * max(1.0, abs(ref)) + 1e-15
    r = n / n_star - 1
    if abs(r) < 1e-3:
        assert got[0] == pytest.approx(n_star * r * r / 2, rel=2e-3)


@settings(max_examples=40, deadline=None)
@given(a=st.floats(0.05, 0.95), b=st.floats(0.05, 0.95),
       p1=arrays(np.float64, (4, 4), elements=st.floats(-0.5, 0.5)),
       p2=arrays(np.float64, (4, 4), elements=st.floats(-0.5, 0.5)),
       c=arrays(np.float64, (4, 4), elements=st.floats(0, 2)))
def test_sandwich_and_signs_inside_bracket(a, b, p1, p2, c):
    params = ModelParams(a, b)
    eq = equilibrium(params)
    dom = DomainSpec(1.0, 1.0, 4, 4)
    st_ = _state(dom, eq.n1_star * (1 + p1), eq.n2_star * (1 + p2), c)
    s = lyapunov(st_, params, Regime.COEXISTENCE, eq)
    assert s.E >= 0 and s.F >= 0
    assert quadratic_sandwich_violations([s], params, eq) == 0


def _samples(t, E, F):
    return [LyapunovSample(float(ti), float(ei), float(fi), {}) for ti, ei, fi in zip(t, E, F)]


def test_check_dissipation_examples():
    t = np.linspace(0, 5, 101)
    rep = check_dissipation(_samples(t, 0 * t, 0 * t), 1.0)
    assert rep.passed and rep.worst_residual == 0.0

    rep = check_dissipation(_samples(t, np.exp(-2 * t), np.exp(-2 * t)), 1.0)
    assert rep.passed and rep.violations == 0

    rep = check_dissipation(_samples(t, np.exp(-t), 2 * np.exp(-t)), 1.0)
    assert not rep.passed
    assert rep.first_violation_time == pytest.approx(t[1])
    assert rep.violations == rep.checked == 99


def test_check_dissipation_respects_t0_and_errors():
    t = np.linspace(0, 5, 51)
    E = np.where(t < 1, np.exp(t), np.exp(2 - t))
    rep = check_dissipation(_samples(t, E, 0 * t), 0.0, t0=1.2)
    assert rep.passed
    assert not check_dissipation(_samples(t, E, 0 * t), 0.0).passed
    with pytest.raises(InsufficientDataError):
        check_dissipation(_samples(t[:2], E[:2], E[:2]), 1.0)
    with pytest.raises(ValueError):
        check_dissipation(_samples(t[::-1], E, E), 1.0)


def test_monotonicity_counter():
    t = np.arange(6.0)
    E = np.array([5, 4, 4.5, 3, 2, 2 * (1 + 1e-10)])
    assert energy_monotonicity_violations(_samples(t, E, E)) == 1
    assert energy_monotonicity_violations(_samples(t, E, E), t0=3) == 0


def test_sandwich_detects_violation():
    p = ModelParams(0.5, 0.5)
    eq = equilibrium(p)
    norms = {"n1_linf": 0.1, "n2_linf": 0.1, "n1_l2sq": 0.01, "n2_l2sq": 0.01, "c_l2sq": 0.0}
    assert quadratic_sandwich_violations([LyapunovSample(0.0, 1.0, 0.02, norms)], p, eq) == 1
    outside = dict(norms, n1_linf=0.5)
    assert quadratic_sandwich_violations([LyapunovSample(0.0, 1.0, 0.02, outside)], p, eq) == 0
