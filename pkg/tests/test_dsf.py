import time

import numpy as np
import pytest
from hypothesis import given, strategies as st

from sigstruct.corpus import random_plant
from sigstruct.dsf import (ADJUGATE_MAX, BinaryStructure, Dsf, compute_dsf, default_freqs,
                           dsf_membership, edge_list, effective_tf_pattern, reconstruct_g,
                           random_structured_dsf, structure_of)
from sigstruct.exceptions import DegenerateSamplesError
from sigstruct.polyrat import Polynomial, RationalFunction
from sigstruct.statespace import PartitionedStateSpace, StateSpace, frequency_response

RING = BinaryStructure([[0, 0, 1], [1, 0, 0], [0, 1, 0]], np.eye(3, dtype=bool))


def rf(num, den):
    return RationalFunction(Polynomial(num), Polynomial(den))


def test_three_state_golden(three_state):
    t0 = time.perf_counter()
    dsf, inter = compute_dsf(three_state)
    elapsed = time.perf_counter() - t0
    want = {
        ('Q', 0, 1): rf([9], [-1, -3, 1]),
        ('Q', 1, 0): rf([3], [-5, -4, 1]),          # (s + 1)(s - 5)
        ('P', 0, 0): rf([-2, 1], [-1, -3, 1]),
        ('P', 1, 1): rf([-2, 1], [-5, -4, 1]),
    }
    for (kind, i, j), f in want.items():
        got = (dsf.Q if kind == 'Q' else dsf.P)[i][j]
        assert got.allclose(f, rtol=1e-8), (kind, i, j, str(got))
    assert dsf.P[0][1].is_zero() and dsf.P[1][0].is_zero()
    assert all(dsf.Q[i][i].is_zero() for i in range(2))
    assert len(inter.W) == 2
    assert elapsed < 1.0


def test_partial_fraction_form_of_p22(three_state):
    dsf, _ = compute_dsf(three_state)
    split = rf([1], [2, 2]) + rf([1], [-10, 2])    # 1/(2(s+1)) + 1/(2(s-5))
    assert dsf.P[1][1].allclose(split, rtol=1e-9)


def test_structure_and_edges(three_state):
    dsf, _ = compute_dsf(three_state)
    bs = structure_of(dsf)
    assert bs.Qbin.astype(int).tolist() == [[0, 1], [1, 0]]
    assert bs.Pbin.astype(int).tolist() == [[1, 0], [0, 1]]
    assert set(edge_list(bs)) == {('y2', 'y1', 'Q'), ('y1', 'y2', 'Q'),
                                  ('u1', 'y1', 'P'), ('u2', 'y2', 'P')}


@given(st.integers(0, 2**31 - 1), st.integers(1, 3), st.integers(0, 3), st.integers(1, 3))
def test_reconstruction_identity(seed, q, h, m):
    rng = np.random.default_rng(seed)
    A = rng.normal(size=(q + h, q + h))
    B = rng.normal(size=(q + h, m))
    psys = PartitionedStateSpace(A[:q, :q], A[:q, q:], A[q:, :q], A[q:, q:], B[:q], B[q:])
    dsf, _ = compute_dsf(psys)
    G = reconstruct_g(dsf)
    sys = psys.to_statespace()
    for w in (0.3, 1.7, 6.0):
        s = 1j * w
        ref = frequency_response(sys, s)
        scale = max(1.0, np.max(np.abs(ref)))
        assert np.max(np.abs(dsf.transfer_at(s) - ref)) < 1e-7 * scale
        closed = np.array([[f(s) for f in row] for row in G])
        assert np.max(np.abs(closed - ref)) < 1e-6 * scale


def test_ring_controller_transfer_matrix():
    # each entry of (I - Q)^{-1} P shares the loop denominator 1 - q13 q21 q32
    q13, q21, q32 = rf([2], [1, 1]), rf([-1], [3, 1]), rf([0.5], [2, 1])
    p = [rf([1], [4, 1]), rf([3], [1, 1]), rf([-2], [5, 1])]
    Q = [[RationalFunction.zero()] * 3 for _ in range(3)]
    Q[0][2], Q[1][0], Q[2][1] = q13, q21, q32
    P = [[RationalFunction.zero()] * 3 for _ in range(3)]
    for i in range(3):
        P[i][i] = p[i]
    K = reconstruct_g(Dsf(Q, P))
    s = 0.2 + 1.3j
    loop = 1 - q13(s) * q21(s) * q32(s)
    want = np.array([
        [p[0](s), p[1](s) * q13(s) * q32(s), p[2](s) * q13(s)],
        [p[0](s) * q21(s), p[1](s), p[2](s) * q13(s) * q21(s)],
        [p[0](s) * q21(s) * q32(s), p[1](s) * q32(s), p[2](s)],
    ]) / loop
    got = np.array([[f(s) for f in row] for row in K])
    np.testing.assert_allclose(got, want, rtol=1e-7)
    assert effective_tf_pattern(RING).all()


def test_adjugate_refused_beyond_cap():
    n = ADJUGATE_MAX + 1
    dsf = random_structured_dsf(BinaryStructure.diagonal(n), np.random.default_rng(0))
    with pytest.raises(NotImplementedError):
        reconstruct_g(dsf)


def test_membership():
    rng = np.random.default_rng(3)
    freqs = default_freqs()
    ring_dsf = random_structured_dsf(RING, rng)
    samples = [(s, ring_dsf.transfer_at(s)) for s in freqs]
    assert dsf_membership(samples, RING)
    assert not dsf_membership(samples, BinaryStructure.diagonal(3))
    with pytest.raises(DegenerateSamplesError):
        dsf_membership(samples[:2], RING)


def test_binary_structure_rules():
    with pytest.raises(ValueError):
        BinaryStructure(np.eye(2), np.eye(2))
    assert BinaryStructure.diagonal(2) <= BinaryStructure.full(2, 2)
    assert BinaryStructure.cyclic(3).Qbin.sum() == 3


def test_dsf_of_general_output_is_refused():
    plant = random_plant(np.random.default_rng(0), 3, 1, 1)
    with pytest.raises(Exception):
        compute_dsf(StateSpace(plant.A, plant.B, [[1.0, 1.0, 0.0]]))
