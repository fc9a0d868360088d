"""
Random plants and structures for property tests and demos.

Plants are drawn in modal coordinates so the controllability of each
mode from each input, and its observability at each output, can be
switched off deliberately; a random well-conditioned similarity then
hides the modal form.
"""
import numpy as np

from .dsf import BinaryStructure
from .statespace import StateSpace, eigenvalues, minimal_realization, transmission_zeros

__all__ = ['random_modes', 'random_plant', 'random_structure',
           'random_stabilizable_plant', 'pole_zero_gap', 'stabilizable_corpus']


def random_modes(rng, n, n_unstable, re_range=(0.2, 3.0), im_range=(0.5, 3.0),
                 p_complex=0.4, min_gap=0.1):
    """Distinct eigenvalues, conjugate-closed, ``n_unstable`` of them with Re > 0.

    Eigenvalues are kept at least ``min_gap`` apart. Returns a list of
    blocks: ``(lam,)`` for real modes and ``(lam, conj)`` for complex
    pairs.
    """
    blocks, taken, k, nu = [], [], 0, 0
    while k < n:
        unstable = nu < n_unstable
        sign = 1.0 if unstable else -1.0
        re = sign * rng.uniform(*re_range)
        pair = n - k >= 2 and rng.random() < p_complex and (not unstable or n_unstable - nu >= 2)
        lam = complex(re, rng.uniform(*im_range) if pair else 0.0)
        if any(abs(lam - t) < min_gap or abs(lam.conjugate() - t) < min_gap for t in taken):
            continue
        taken += [lam, lam.conjugate()]
        if pair:
            blocks.append((lam, lam.conjugate()))
            k += 2
            nu += 2 if unstable else 0
        else:
            blocks.append((lam,))
            k += 1
            nu += 1 if unstable else 0
    return blocks


def random_plant(rng, n, m, p, n_unstable=None, density=1.0, visible=False,
                 similarity=True):
    """Random strictly proper plant with per-mode input/output incidence.

    Parameters
    ----------
    rng : numpy.random.Generator
    n, m, p : int
        States, inputs, outputs.
    n_unstable : int, optional
        Number of eigenvalues with positive real part (default random).
    density : float
        Probability that a given mode is reachable from a given input
        (and, independently, visible at a given output).
    visible : bool
        Force every unstable mode to be controllable from at least one
        input and observable at at least one output.
    similarity : bool
        Apply a random similarity to hide the modal form.
    """
    if n_unstable is None:
        n_unstable = int(rng.integers(0, n + 1))
    blocks = random_modes(rng, n, n_unstable)
    A = np.zeros((n, n))
    B = np.zeros((n, m))
    C = np.zeros((p, n))
    k = 0
    for blk in blocks:
        sz = len(blk)
        lam = blk[0]
        if sz == 1:
            A[k, k] = lam.real
        else:
            A[k:k + 2, k:k + 2] = [[lam.real, lam.imag], [-lam.imag, lam.real]]
        bmask = rng.random(m) < density
        cmask = rng.random(p) < density
        if visible and lam.real > 0:
            if not bmask.any():
                bmask[rng.integers(m)] = True
            if not cmask.any():
                cmask[rng.integers(p)] = True
        B[k:k + sz, :] = rng.normal(size=(sz, m)) * bmask
        C[:, k:k + sz] = rng.normal(size=(p, sz)) * cmask[:, None]
        k += sz
    if similarity:
        T = rng.normal(size=(n, n))
        U, _, Vt = np.linalg.svd(T)
        T = U @ np.diag(rng.uniform(0.5, 2.0, n)) @ Vt
        Ti = np.linalg.inv(T)
        A, B, C = T @ A @ Ti, T @ B, C @ Ti
    return StateSpace(A, B, C)


def random_stabilizable_plant(rng, n, m, density=0.5):
    """Square plant whose unstable modes are all controllable and observable."""
    return random_plant(rng, n, m, m, n_unstable=int(rng.integers(1, n + 1)),
                        density=density, visible=True)


def random_structure(rng, m, p, q_density=0.3, p_density=0.4):
    """Random controller structure for a plant with m inputs and p outputs."""
    Q = rng.random((m, m)) < q_density
    np.fill_diagonal(Q, False)
    P = rng.random((m, p)) < p_density
    return BinaryStructure(Q, P)


def pole_zero_gap(plant):
    """Smallest distance between an unstable pole and a CRHP zero of a diagonal channel.

    Distances are relative, ``|z - p| / (1 + |p|)``, over the minimal
    part of every ``g_ii``. ``inf`` when no channel has both.
    """
    g = np.inf
    for i in range(min(plant.ninputs, plant.noutputs)):
        mr = minimal_realization(plant.subsystem([i], [i]))
        if mr.n == 0:
            continue
        z = transmission_zeros(mr)
        z = z[z.real >= 0]
        if not z.size:
            continue
        for p in eigenvalues(mr.A):
            if p.real >= 0:
                g = min(g, float(np.min(np.abs(z - p))) / (1 + abs(p)))
    return g


def stabilizable_corpus(rng, count, max_states=6, max_inputs=3, max_unstable=3,
                        min_gap=0.1, density=0.5):
    """Square plants whose unstable modes are all controllable and observable.

    Draws ``n`` in ``1..max_states``, ``m`` in ``1..max_inputs`` and up to
    ``max_unstable`` unstable eigenvalues. Plants whose diagonal channels
    nearly cancel an unstable pole with a CRHP zero (relative gap below
    ``min_gap``) are redrawn: stabilizing those takes arbitrarily high
    gain and says more about conditioning than about structure.

    Yields
    ------
    StateSpace
    """
    k = 0
    while k < count:
        n = int(rng.integers(1, max_states + 1))
        m = int(rng.integers(1, max_inputs + 1))
        nu = int(rng.integers(1, min(n, max_unstable) + 1))
        plant = random_plant(rng, n, m, m, n_unstable=nu, density=density, visible=True)
        if min_gap > 0 and pole_zero_gap(plant) < min_gap:
            continue
        k += 1
        yield plant
