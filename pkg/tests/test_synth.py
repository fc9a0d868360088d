import numpy as np
import pytest
from hypothesis import given, strategies as st

from sigstruct import (BinaryStructure, StateSpace, SynthOptions, absorb, channel, design_link,
                       eigenvalues, export_controller, interconnect, minimal_realization,
                       place_poles, run_procedure, structure_of, unstable_cancellation)
from sigstruct.analysis import transfer_pattern
from sigstruct.cli import load_model, load_structure
from sigstruct.corpus import random_stabilizable_plant
from sigstruct.exceptions import (AlreadyDesignedError, BadIndexError, NotStabilizedError,
                                  UncontrollableError)
from sigstruct.statespace import frequency_response
from sigstruct.synth import (INCONCLUSIVE, NOT_STABILIZABLE, STABILIZED, Aggregate,
                             butterworth_poles, crhp_count, default_link_order)

import corpora
from conftest import model_path

UNSTABLE_INTEGRATOR = StateSpace([[1.0]], [[1.0]], [[1.0]])     # 1/(s - 1)


def coeffs(f):
    return f.num.coeffs / f.den.coeffs[-1], f.den.coeffs / f.den.coeffs[-1]


def test_design_link_default_targets():
    link, order = design_link(UNSTABLE_INTEGRATOR)
    num, den = coeffs(link.compensator)
    # radius 2 puts the loop pole at -2, the observer at -6: -21 / (s + 9)
    np.testing.assert_allclose(num, [-21.0], atol=1e-9)
    np.testing.assert_allclose(den, [9.0, 1.0], atol=1e-9)
    assert order == 1


def test_design_link_custom_radius():
    opts = SynthOptions(pole_radius=1.0, observer_ratio=2.0)
    link, _ = design_link(UNSTABLE_INTEGRATOR, opts)
    num, den = coeffs(link.compensator)
    np.testing.assert_allclose(num, [-6.0], atol=1e-9)
    np.testing.assert_allclose(den, [4.0, 1.0], atol=1e-9)
    loop = interconnect(UNSTABLE_INTEGRATOR, [('P', 0, 0, link.realization)])
    np.testing.assert_allclose(np.sort(eigenvalues(loop.A).real), [-2.0, -1.0], atol=1e-9)


def test_place_poles_double_integrator():
    A = np.array([[0.0, 1.0], [0.0, 0.0]])
    b = np.array([0.0, 1.0])
    F = place_poles(A, b, [-1.0, -1.0])
    np.testing.assert_allclose(np.ravel(F), [1.0, 2.0], atol=1e-12)


def test_place_poles_uncontrollable():
    with pytest.raises(UncontrollableError):
        place_poles(np.diag([1.0, 2.0]), np.array([1.0, 0.0]), [-1.0, -2.0])


@given(st.integers(1, 8), st.floats(0.5, 10.0))
def test_butterworth_poles(n, r):
    p = butterworth_poles(n, r)
    np.testing.assert_allclose(np.abs(p), r, rtol=1e-12)
    assert np.all(p.real < 0)
    np.testing.assert_allclose(np.sort_complex(p), np.sort_complex(np.conj(p)), atol=1e-9)


def test_channel_rules(crossed):
    agg = Aggregate.start(crossed)
    ch = channel(agg, ('P', 0, 0))
    assert (ch.ninputs, ch.noutputs) == (1, 1)
    np.testing.assert_allclose(frequency_response(ch, 2j), frequency_response(crossed, 2j)[:1, :1])
    with pytest.raises(BadIndexError):
        channel(agg, ('Q', 0, 0))
    with pytest.raises(BadIndexError):
        channel(agg, ('P', 2, 0))
    link, _ = design_link(ch, link=('P', 0, 0))
    agg = absorb(agg, link)
    with pytest.raises(AlreadyDesignedError):
        channel(agg, ('P', 0, 0))


def test_crossed_mode_dichotomy(crossed, diag2, diag2_cross):
    neg = run_procedure(crossed, diag2)
    assert neg.verdict == NOT_STABILIZABLE
    assert neg.unstable_counts() == [3, 2, 1]
    [mode] = neg.certificate.fixed_unstable_modes
    assert mode.eigenvalue == pytest.approx(3.0)
    with pytest.raises(NotStabilizedError):
        export_controller(neg)
    pos = run_procedure(crossed, diag2_cross)
    assert pos.verdict == STABILIZED
    counts = pos.unstable_counts()
    assert counts[-1] == 0 and all(a >= b for a, b in zip(counts, counts[1:]))
    assert np.max(eigenvalues(pos.closed_loop.A).real) < -1e-6


def test_export_controller_closes_the_same_loop(crossed, diag2_cross):
    report = run_procedure(crossed, diag2_cross)
    dsf, K = export_controller(report)
    s = 0.3 + 0.8j
    np.testing.assert_allclose(K(s), dsf.transfer_at(s), rtol=1e-7, atol=1e-10)
    # plant with u = K y + v: A_cl = [[A + B Dk C, B Ck], [Bk C, Ak]]
    A, B, C = crossed.A, crossed.B, crossed.C
    Acl = np.block([[A + B @ K.D @ C, B @ K.C], [K.B @ C, K.A]])
    want = np.sort_complex(eigenvalues(report.closed_loop.A))
    np.testing.assert_allclose(np.sort_complex(eigenvalues(Acl)), want, atol=1e-6)


def test_zero_policy_for_stable_channels():
    plant = StateSpace(np.diag([-1.0, 2.0]), np.eye(2), np.eye(2))
    report = run_procedure(plant, BinaryStructure.diagonal(2),
                           SynthOptions(stable_links='zero'))
    assert report.verdict == STABILIZED
    assert report.links[0].is_zero() and not report.links[1].is_zero()


def test_link_order_and_custom_order(diag2_cross):
    assert default_link_order(diag2_cross) == [('P', 0, 0), ('P', 0, 1), ('P', 1, 1)]
    with pytest.raises(ValueError):
        run_procedure(StateSpace(np.eye(2), np.eye(2), np.eye(2)), diag2_cross,
                      SynthOptions(order=(('P', 0, 0),)))


def test_crhp_count_includes_axis():
    sys = StateSpace(np.diag([0.0, -1.0, 2.0]), np.zeros((3, 1)), np.zeros((1, 3)))
    assert crhp_count(sys) == 2


@pytest.mark.slow
def test_unrestricted_corpus_never_claims_fixed_modes():
    # without the pole-zero gap filter some runs are numerically hard,
    # but a stabilizable plant must never be reported NotStabilizable
    rng = np.random.default_rng(7)
    verdicts = []
    for _ in range(20):
        n, m = int(rng.integers(1, 7)), int(rng.integers(1, 4))
        plant = random_stabilizable_plant(rng, n, m)
        report = run_procedure(plant, BinaryStructure.cyclic(m))
        verdicts.append(report.verdict)
        if report.verdict == STABILIZED:
            assert np.max(eigenvalues(report.closed_loop.A).real) < 0
    assert NOT_STABILIZABLE not in verdicts
    assert verdicts.count(INCONCLUSIVE) <= len(verdicts) // 2


def _replay(plant, report):
    """Yield (link, channel it saw) by re-absorbing the report's links in order."""
    agg = Aggregate.start(plant)
    for lk in report.links:
        yield lk, channel(agg, lk.key)
        agg = absorb(agg, lk)


def test_links_are_proper_compliant_and_cancel_nothing_unstable():
    for plant, report in corpora.cyclic_runs()[:20]:
        for lk, ch in _replay(plant, report):
            if lk.is_zero():
                continue
            assert lk.compensator.num.degree < lk.compensator.den.degree
            bad, where = unstable_cancellation(minimal_realization(lk.realization),
                                               minimal_realization(ch))
            assert not bad, (lk.key, where)
        dsf, _ = export_controller(report)
        assert structure_of(dsf) <= report.structure


def test_ring_export_has_full_transfer_pattern():
    plant, _, _ = load_model(model_path('ring_plant.json'))
    ring = load_structure(model_path('ring3.json'))
    report = run_procedure(plant, ring)
    assert report.verdict == STABILIZED
    dsf, K = export_controller(report)
    bs = structure_of(dsf)
    assert np.array_equal(bs.Qbin, ring.Qbin) and np.array_equal(bs.Pbin, ring.Pbin)
    assert transfer_pattern(K).all()
