import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.signal import tf2ss

from sigstruct import (BinaryStructure, StateSpace, existence_check, effective_tf_pattern,
                       fixed_mode_probe, qi_boolean, qi_sampled, run_procedure,
                       unstable_cancellation)
from sigstruct.analysis import residual_transfer, transfer_pattern
from sigstruct.cli import load_model
from sigstruct.corpus import random_plant, random_structure
from sigstruct.exceptions import DimensionMismatchError
from sigstruct.synth import STABILIZED

from conftest import model_path

# mode 3 is driven by u1 and seen at y2; y1 reads the stable state driven by u2
RELAY = StateSpace(np.diag([3.0, -1.0]), np.eye(2), [[0.0, 1.0], [1.0, 0.0]])


def test_crossed_mode_fixed_under_diagonal(crossed, diag2):
    v = existence_check(crossed, diag2)
    assert not v.exists
    [mode] = v.fixed_unstable_modes
    assert mode.eigenvalue == pytest.approx(3.0)
    assert mode.controllable_from == [True, False]
    assert mode.observable_at == [False, True]


def test_crossed_mode_movable_with_cross_link(crossed, diag2_cross):
    v = existence_check(crossed, diag2_cross)
    assert v.exists and not v.fixed_unstable_modes
    links = {round(lam.real): ls for lam, ls in v.witnesses.items()}
    assert (0, 1) in links[3]


def test_relay_chain_moves_mode_that_no_single_link_sees(diag2):
    assert not existence_check(RELAY, diag2, method='link').exists
    v = existence_check(RELAY, diag2)
    assert v.exists and v.chains
    probe = fixed_mode_probe(RELAY, effective_tf_pattern(diag2))
    assert not any(probe.values())
    assert run_procedure(RELAY, diag2).verdict == STABILIZED


def test_residual_transfer_excludes_the_mode():
    G0 = residual_transfer(RELAY, 3.0)
    # only the stable channel u2 -> y1, 1/(s + 1) at s = 3
    np.testing.assert_allclose(G0, [[0.0, 0.25], [0.0, 0.0]], atol=1e-12)


def test_existence_checks_dimensions(crossed):
    with pytest.raises(DimensionMismatchError):
        existence_check(crossed, BinaryStructure.diagonal(3))
    with pytest.raises(ValueError):
        existence_check(crossed, BinaryStructure.diagonal(2), method='other')


@given(st.integers(0, 2**31 - 1))
def test_existence_agrees_with_probe(seed):
    rng = np.random.default_rng(seed)
    m = int(rng.integers(1, 4))
    plant = random_plant(rng, int(rng.integers(1, 5)), m, m, density=0.5)
    bs = random_structure(rng, m, m)
    fixed = [m_.eigenvalue for m_ in existence_check(plant, bs).fixed_unstable_modes]
    probe = fixed_mode_probe(plant, effective_tf_pattern(bs), seed=seed)
    for lam, is_fixed in probe.items():
        assert is_fixed == any(abs(lam - f) < 1e-6 * (1 + abs(f)) for f in fixed)


def siso(poles, zeros=()):
    """Realization of prod(s - z) / prod(s - p)."""
    return StateSpace(*tf2ss(np.poly(zeros) if zeros else [1.0], np.poly(poles)))


def test_unstable_cancellation_detected():
    bad, where = unstable_cancellation(siso([1.0]), siso([-2.0], [1.0]))
    assert bad
    np.testing.assert_allclose(where, [1.0], atol=1e-8)


def test_stable_cancellation_allowed():
    bad, _ = unstable_cancellation(siso([-1.0]), siso([-2.0], [-1.0]))
    assert not bad
    bad, _ = unstable_cancellation(siso([1.0]), siso([-2.0], [-3.0]))
    assert not bad


def test_qi_boolean_patterns():
    lower = np.tril(np.ones((3, 3), bool))
    assert qi_boolean(lower, lower)
    ring = np.array([[0, 0, 1], [1, 0, 0], [0, 1, 0]], bool)
    assert not qi_boolean(np.eye(3, dtype=bool) | ring, np.ones((3, 3), bool))
    with pytest.raises(DimensionMismatchError):
        qi_boolean(np.ones((2, 3)), np.ones((2, 3)))


def test_qi_sampled_ring_vs_ring():
    plant, _, _ = load_model(model_path('ring_plant.json'))
    ring = BinaryStructure(np.roll(np.eye(3, dtype=bool), 1, axis=0), np.eye(3, dtype=bool))
    ok, cex = qi_sampled(ring, plant, seed=0)
    assert not ok and cex is not None and cex.residual > 1e-8


def test_qi_sampled_true_cases():
    rng = np.random.default_rng(0)
    diag_plant = StateSpace(np.diag([-1.0, -2.0]), np.eye(2), np.eye(2))
    assert qi_sampled(BinaryStructure.diagonal(2), diag_plant)[0]
    for seed in range(3):
        plant = random_plant(rng, 3, 2, 2)
        assert qi_sampled(BinaryStructure.full(2, 2), plant, seed=seed)[0]


def test_transfer_pattern_of_diagonal_plant():
    plant = StateSpace(np.diag([-1.0, -2.0]), np.eye(2), np.eye(2))
    assert transfer_pattern(plant).tolist() == [[True, False], [False, True]]
