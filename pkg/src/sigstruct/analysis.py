"""
Structural decision procedures: existence of a structured stabilizing
controller, unstable pole-zero cancellation, and quadratic invariance.
"""
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import schur, solve_sylvester

from .dsf import (default_freqs, dsf_membership, effective_tf_pattern,
                  evaluate_matrix, random_structured_dsf)
from .exceptions import DimensionMismatchError
from .statespace import (CLUSTER_TOL, TOL_RANK, TOL_STAB, StateSpace, cascade,
                         cluster_eigenvalues, eigenvalues, frequency_response,
                         pbh_classify, pbh_joint,
                         transmission_zeros)

__all__ = ['ExistenceVerdict', 'existence_check', 'unstable_cancellation',
           'qi_boolean', 'qi_sampled', 'fixed_mode_probe', 'transfer_pattern',
           'residual_transfer']


@dataclass
class ExistenceVerdict:
    """Outcome of the structured existence test.

    ``witnesses`` maps each movable unstable eigenvalue to the links
    ``(i, j)`` (write plant input ``u_i``, read plant output ``y_j``) of
    the effective pattern through which it can be moved. A direct
    witness is a single link from which the mode is both controllable
    and observable; when none exists the entry lists the links of the
    shortest chain and ``chains`` records the full route.
    """
    exists: bool
    fixed_unstable_modes: list
    witnesses: dict
    modes: list = field(default_factory=list)
    Kbin: np.ndarray = None
    chains: dict = field(default_factory=dict)
    method: str = 'path'

    def as_dict(self):
        return {
            'exists': bool(self.exists),
            'method': self.method,
            'fixed_unstable_modes': [m.as_dict() for m in self.fixed_unstable_modes],
            'witnesses': [
                {'eigenvalue': {'re': float(lam.real), 'im': float(lam.imag)},
                 'links': [[int(i), int(j)] for i, j in links],
                 'direct': lam not in self.chains}
                for lam, links in self.witnesses.items()],
            'effective_pattern': None if self.Kbin is None
            else self.Kbin.astype(int).tolist(),
        }


def residual_transfer(plant, lam, cluster_tol=CLUSTER_TOL):
    """Transfer matrix of the plant with the ``lam`` modes removed, at ``s = lam``.

    The eigenvalues within ``cluster_tol * (1 + |lam|)`` of ``lam`` are
    split off by an ordered Schur form and a Sylvester decoupling; the
    complementary subsystem is evaluated at ``lam``.
    """
    A = np.asarray(plant.A, dtype=complex)
    n = A.shape[0]
    near = lambda x: abs(x - lam) <= cluster_tol * (1 + abs(lam))
    T, Z, k = schur(A, output='complex', sort=near)
    D = np.asarray(plant.D, dtype=complex)
    if k == n:
        return D
    T11, T12, T22 = T[:k, :k], T[:k, k:], T[k:, k:]
    X = solve_sylvester(T11, -T22, -T12) if k else np.zeros((0, n - k))
    Bt = Z.conj().T @ plant.B
    Ct = plant.C @ Z
    C2 = Ct[:, :k] @ X + Ct[:, k:]
    B2 = Bt[k:]
    return C2 @ np.linalg.solve(lam * np.eye(n - k) - T22, B2) + D


def _chain(Kbin, G0, sources, targets, edge_tol):
    """Shortest alternating chain y -> u (controller) -> y (plant) -> ... -> u.

    Starts at an output in ``sources`` and ends at an input in
    ``targets``. Returns the list of controller links ``(i, j)`` or None.
    """
    m, p = Kbin.shape
    scale = max(float(np.max(np.abs(G0))) if G0.size else 0.0, 1e-300)
    plant_edge = np.abs(G0) > edge_tol * scale
    prev = {j: None for j in sources}
    frontier = list(sources)
    while frontier:
        nxt = []
        for j in frontier:
            for i in range(m):
                if not Kbin[i, j]:
                    continue
                if i in targets:
                    route = [(i, j)]
                    while prev[j] is not None:
                        i0, j0 = prev[j]
                        route.append((i0, j0))
                        j = j0
                    return route[::-1]
                for k in range(p):
                    if plant_edge[k, i] and k not in prev:
                        prev[k] = (i, j)
                        nxt.append(k)
        frontier = nxt
    return None


def existence_check(plant, bs, tol_rank=TOL_RANK, tol_stab=TOL_STAB, method='path',
                    edge_tol=1e-9):
    """Decide whether a controller with signal structure ``bs`` can stabilize.

    The test runs on the effective transfer pattern ``Kbin`` of ``bs``.
    With ``method='link'`` an unstable mode counts as movable only if it
    is controllable from some input ``u_i`` and observable at some output
    ``y_j`` with ``Kbin[i, j]`` set. The default ``method='path'`` also
    accepts chains ``y_j -> u_a -> y_b -> ... -> u_i`` that alternate
    controller links with nonzero entries of the plant transfer matrix
    (mode removed, evaluated at the mode); such modes can be moved by a
    structured controller even though no single link sees them. The two
    agree whenever a direct witness exists.

    Parameters
    ----------
    plant : StateSpace
    bs : BinaryStructure
        Controller structure: ``bs.nodes`` equals the number of plant
        inputs and ``bs.ninputs`` the number of plant outputs.
    method : {'path', 'link'}
    edge_tol : float
        Relative threshold for a plant transfer entry to count as nonzero.

    Returns
    -------
    ExistenceVerdict
    """
    if bs.nodes != plant.ninputs or bs.ninputs != plant.noutputs:
        raise DimensionMismatchError(
            f"structure is {bs.nodes}x{bs.ninputs} but plant has "
            f"{plant.ninputs} inputs and {plant.noutputs} outputs")
    if method not in ('path', 'link'):
        raise ValueError(f"unknown method {method!r}")
    Kbin = effective_tf_pattern(bs)
    modes = pbh_classify(plant, tol_rank, tol_stab)
    fixed, witnesses, chains = [], {}, {}
    for mode in modes:
        if not mode.unstable:
            continue
        ctrb = set(np.flatnonzero(mode.controllable_from).tolist())
        obsv = np.flatnonzero(mode.observable_at).tolist()
        links = [(i, j) for i in sorted(ctrb) for j in obsv if Kbin[i, j]]
        if links:
            witnesses[mode.eigenvalue] = links
            continue
        route = None
        if method == 'path' and ctrb and obsv:
            G0 = residual_transfer(plant, mode.eigenvalue)
            route = _chain(Kbin, G0, obsv, ctrb, edge_tol)
        if route:
            witnesses[mode.eigenvalue] = route
            chains[mode.eigenvalue] = route
        else:
            fixed.append(mode)
    return ExistenceVerdict(not fixed, fixed, witnesses, modes, Kbin, chains, method)


def _near(x, pts, tol):
    return pts.size > 0 and np.min(np.abs(pts - x)) <= tol * (1 + abs(x))


def unstable_cancellation(first, second, tol_rank=TOL_RANK, tol_stab=TOL_STAB,
                          tol=1e-6):
    """Detect an unstable pole-zero cancellation in ``second * first``.

    A closed-right-half-plane mode of the series connection is lost when
    it is uncontrollable from the input or unobservable at the output.
    For SISO factors this happens exactly when a CRHP eigenvalue of
    either realization is also a zero (transmission or decoupling) of
    either realization, within ``tol * (1 + |p|)``; that condition is
    checked directly because it is insensitive to the gain scaling of
    the factors. Multivariable cascades are PBH-tested eigenvalue by
    eigenvalue against all inputs and all outputs jointly. Stable
    cancellations are permitted.

    Returns
    -------
    (bool, ndarray)
        Whether an unstable cancellation occurred, and the offending
        eigenvalues.
    """
    if first.noutputs != second.ninputs:
        raise DimensionMismatchError("cascade: output/input sizes differ")
    bad = []
    if first.ninputs == first.noutputs == second.noutputs == 1:
        # zeros of a non-minimal SISO realization include its decoupling
        # zeros, so every lost mode shows up as a pole-zero coincidence
        zeros = np.concatenate([transmission_zeros(first), transmission_zeros(second)])
        poles = np.concatenate([eigenvalues(first.A) if first.n else [],
                                eigenvalues(second.A) if second.n else []])
        bad = [lam for lam, _ in cluster_eigenvalues(np.asarray(poles, dtype=complex))
               if lam.real >= -tol_stab and _near(lam, zeros, tol)]
    else:
        sys = cascade(first, second)
        for lam, mult in cluster_eigenvalues(eigenvalues(sys.A)):
            if lam.real < -tol_stab:
                continue
            ctrb, obsv = pbh_joint(sys, lam, tol_rank, mult)
            if not (ctrb and obsv):
                bad.append(lam)
    return bool(bad), np.array(bad, dtype=complex)


def qi_boolean(Kbin, Gbin):
    """Sparsity quadratic invariance: ``bin(K G K) <= bin(K)``."""
    K = np.asarray(Kbin, dtype=bool)
    G = np.asarray(Gbin, dtype=bool)
    if K.shape[1] != G.shape[0] or G.shape[1] != K.shape[0]:
        raise DimensionMismatchError(
            f"K is {K.shape}, G is {G.shape}; need K: m x p and G: p x m")
    KGK = (K.astype(int) @ G.astype(int) @ K.astype(int)) > 0
    return bool(np.all(KGK <= K))


def _plant_samples(plant_G, freqs):
    if isinstance(plant_G, StateSpace):
        return [frequency_response(plant_G, s) for s in freqs]
    if callable(plant_G):
        return [np.asarray(plant_G(s), dtype=complex) for s in freqs]
    return [evaluate_matrix(plant_G, s) for s in freqs]


def transfer_pattern(plant_G, freqs=None, tol=1e-9):
    """Boolean sparsity of a transfer matrix from frequency samples."""
    freqs = default_freqs() if freqs is None else freqs
    samples = _plant_samples(plant_G, freqs)
    scale = max(max(np.max(np.abs(G)) for G in samples), 1e-300)
    return np.any([np.abs(G) > tol * scale for G in samples], axis=0)


@dataclass
class QICounterexample:
    trial: int
    frequency: complex
    residual: float
    K: np.ndarray

    def as_dict(self):
        return {
            'trial': self.trial,
            'frequency': {'re': float(self.frequency.real), 'im': float(self.frequency.imag)},
            'residual': float(self.residual),
            'K': {'re': self.K.real.tolist(), 'im': self.K.imag.tolist()},
        }


def qi_sampled(bs, plant_G, n_trials=10, freqs=None, tol=1e-8, seed=0):
    """Sampled quadratic-invariance test for a signal-structure constraint.

    Each trial draws a random controller with structure ``bs``, forms
    ``Z = K G K`` at the sample frequencies and asks whether ``Z`` is
    again realizable with structure ``bs``. One-sided: ``True`` means no
    violation was found.

    Parameters
    ----------
    bs : BinaryStructure
    plant_G : StateSpace, callable or nested list of RationalFunction
    n_trials : int
    freqs : array_like of complex, optional
    tol : float
        Relative membership residual.
    seed : int
        Required for reproducibility; trials use ``default_rng(seed)``.

    Returns
    -------
    (bool, QICounterexample or None)
    """
    if n_trials < 1:
        raise ValueError("n_trials must be at least 1")
    freqs = default_freqs() if freqs is None else np.asarray(freqs, dtype=complex)
    Gs = _plant_samples(plant_G, freqs)
    rng = np.random.default_rng(seed)
    for trial in range(n_trials):
        ctrl = random_structured_dsf(bs, rng)
        Ks = [ctrl.transfer_at(s) for s in freqs]
        Zs = [K @ G @ K for K, G in zip(Ks, Gs)]
        ok, info = dsf_membership(list(zip(freqs, Zs)), bs, tol, return_details=True)
        if not ok:
            s = info['frequency']
            k = int(np.argmin(np.abs(freqs - s)))
            return False, QICounterexample(trial, complex(s), info['residual'], Ks[k])
    return True, None


def fixed_mode_probe(plant, Kbin, n_gains=200, seed=0, gain_scale=1.0,
                     tol_stab=TOL_STAB, move_tol=1e-4):
    """Brute-force fixed-mode probe with random static gains.

    For each unstable plant eigenvalue, checks whether it survives as an
    eigenvalue of ``A + B K C`` for every sampled ``K`` confined to
    ``Kbin``. Gain magnitudes are drawn log-uniformly over three decades
    around ``gain_scale`` so that weakly coupled modes still move
    measurably. A mode is reported fixed when it never moves by more
    than ``move_tol * (1 + |lambda|)``.

    Returns
    -------
    dict
        eigenvalue -> bool (True means fixed).
    """
    rng = np.random.default_rng(seed)
    Kbin = np.asarray(Kbin, dtype=bool)
    modes = [lam for lam, _ in cluster_eigenvalues(eigenvalues(plant.A))
             if lam.real >= -tol_stab]
    moved = {lam: False for lam in modes}
    if not modes:
        return {}
    for _ in range(n_gains):
        scale = gain_scale * 10.0 ** rng.uniform(-1.0, 2.0)
        K = np.where(Kbin, rng.normal(scale=scale, size=Kbin.shape), 0.0)
        ev = eigenvalues(plant.A + plant.B @ K @ plant.C)
        for lam in modes:
            if not moved[lam] and np.min(np.abs(ev - lam)) > move_tol * (1 + abs(lam)):
                moved[lam] = True
        if all(moved.values()):
            break
    return {lam: not mv for lam, mv in moved.items()}
