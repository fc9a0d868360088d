"""
Continuous-time LTI state-space models and the linear algebra around them:
spectra, PBH mode classification, staircase minimal realization, SISO
transfer extraction, link interconnection and fixed-step simulation.
"""
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import block_diag, eig, matrix_balance, solve_continuous_lyapunov, svdvals

from .exceptions import (BadIndexError, DimensionMismatchError, IllPosedLoopError,
                         NonFiniteError, NonSquareError)
from .polyrat import Polynomial, RationalFunction, reduce

__all__ = ['StateSpace', 'PartitionedStateSpace', 'ModeReport', 'eigenvalues',
           'cluster_eigenvalues', 'pbh_classify', 'minimal_realization',
           'controllable_part', 'siso_tf', 'charpoly_adjugate', 'interconnect',
           'simulate', 'is_stable', 'certified_stable', 'lyapunov_certificate', 'spectral_abscissa', 'cascade',
           'frequency_response', 'transmission_zeros', 'TOL_RANK', 'TOL_STAB', 'CLUSTER_TOL']

TOL_RANK = 1e-7
TOL_STAB = 1e-8
CLUSTER_TOL = 1e-6


@dataclass(frozen=True)
class StateSpace:
    """Realization ``x' = A x + B u``, ``y = C x + D u``.

    ``n = 0`` is allowed and encodes the static gain ``D``. Matrices are
    stored as read-only float arrays.
    """
    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    D: np.ndarray = None

    def __post_init__(self):
        A = np.array(self.A, dtype=float)
        if A.ndim != 2 or A.shape[0] != A.shape[1]:
            if A.size == 0:
                A = np.zeros((0, 0))
            elif A.ndim == 0 or A.size == 1:
                A = A.reshape(1, 1)
            else:
                raise NonSquareError(f"A must be square, got shape {A.shape}")
        n = A.shape[0]
        B = np.array(self.B, dtype=float)
        C = np.array(self.C, dtype=float)
        if B.ndim < 2:
            B = B.reshape(n, -1) if n else B.reshape(0, max(B.size, 0))
        if C.ndim < 2:
            C = C.reshape(-1, n) if n else C.reshape(max(C.size, 0), 0)
        m, p = B.shape[1], C.shape[0]
        D = np.zeros((p, m)) if self.D is None else np.array(self.D, dtype=float)
        if D.ndim < 2:
            D = D.reshape(p, m)
        if B.shape[0] != n:
            raise DimensionMismatchError(f"B has {B.shape[0]} rows, A is {n}x{n}")
        if C.shape[1] != n:
            raise DimensionMismatchError(f"C has {C.shape[1]} columns, A is {n}x{n}")
        if D.shape != (p, m):
            raise DimensionMismatchError(f"D must be {p}x{m}, got {D.shape}")
        for name, M in zip('ABCD', (A, B, C, D)):
            if not np.all(np.isfinite(M)):
                raise NonFiniteError(f"{name} has non-finite entries")
            M.setflags(write=False)
            object.__setattr__(self, name, M)

    @property
    def n(self):
        return self.A.shape[0]

    @property
    def ninputs(self):
        return self.B.shape[1]

    @property
    def noutputs(self):
        return self.C.shape[0]

    def subsystem(self, out_rows, in_cols):
        out_rows = np.atleast_1d(out_rows)
        in_cols = np.atleast_1d(in_cols)
        return StateSpace(self.A, self.B[:, in_cols], self.C[out_rows, :],
                          self.D[np.ix_(out_rows, in_cols)])

    def __call__(self, s):
        """Frequency response ``C (sI - A)^{-1} B + D`` at one complex point."""
        return frequency_response(self, s)

    @classmethod
    def static(cls, D):
        D = np.atleast_2d(np.asarray(D, dtype=float))
        return cls(np.zeros((0, 0)), np.zeros((0, D.shape[1])),
                   np.zeros((D.shape[0], 0)), D)


@dataclass(frozen=True)
class PartitionedStateSpace:
    """Realization split into measured (manifest) and hidden states.

    The output is the manifest block itself, ``y = [I 0] [y; x]``.
    """
    A11: np.ndarray
    A12: np.ndarray
    A21: np.ndarray
    A22: np.ndarray
    B1: np.ndarray
    B2: np.ndarray

    def __post_init__(self):
        A11 = np.atleast_2d(np.array(self.A11, dtype=float))
        B1 = np.atleast_2d(np.array(self.B1, dtype=float))
        q = A11.shape[0]
        m = B1.shape[1]
        A22 = np.array(self.A22, dtype=float)
        h = A22.shape[0] if A22.ndim == 2 else int(np.sqrt(A22.size))
        A22 = A22.reshape(h, h)
        A12 = np.array(self.A12, dtype=float).reshape(q, h)
        A21 = np.array(self.A21, dtype=float).reshape(h, q)
        B2 = np.array(self.B2, dtype=float).reshape(h, m)
        if A11.shape != (q, q):
            raise NonSquareError("A11 must be square")
        if B1.shape[0] != q:
            raise DimensionMismatchError("B1 rows must match A11")
        for name, M in zip(('A11', 'A12', 'A21', 'A22', 'B1', 'B2'),
                           (A11, A12, A21, A22, B1, B2)):
            M.setflags(write=False)
            object.__setattr__(self, name, M)

    @property
    def q(self):
        return self.A11.shape[0]

    @property
    def h(self):
        return self.A22.shape[0]

    @property
    def m(self):
        return self.B1.shape[1]

    def to_statespace(self):
        A = np.block([[self.A11, self.A12], [self.A21, self.A22]])
        B = np.vstack([self.B1, self.B2])
        C = np.hstack([np.eye(self.q), np.zeros((self.q, self.h))])
        return StateSpace(A, B, C)

    @classmethod
    def from_statespace(cls, sys):
        """Partition a realization whose ``C`` selects distinct states.

        States are permuted so the measured ones come first, in output
        order. Raises ``DimensionMismatchError`` for any other ``C`` or a
        nonzero ``D``.
        """
        C = sys.C
        if np.any(sys.D != 0):
            raise DimensionMismatchError("partitioned form requires D = 0")
        rows_ok = np.all((C == 0) | (C == 1), axis=1) & (np.sum(C == 1, axis=1) == 1)
        if not np.all(rows_ok):
            raise DimensionMismatchError("C must be a row-selection matrix")
        measured = [int(np.flatnonzero(row)[0]) for row in C]
        if len(set(measured)) != len(measured):
            raise DimensionMismatchError("C selects the same state twice")
        hidden = [k for k in range(sys.n) if k not in measured]
        perm = measured + hidden
        A = sys.A[np.ix_(perm, perm)]
        B = sys.B[perm, :]
        q = len(measured)
        return cls(A[:q, :q], A[:q, q:], A[q:, :q], A[q:, q:], B[:q], B[q:])


@dataclass
class ModeReport:
    """PBH facts for one eigenvalue cluster."""
    eigenvalue: complex
    multiplicity: int
    controllable_from: list
    observable_at: list
    unstable: bool
    warnings: list = field(default_factory=list)

    def as_dict(self):
        return {
            'eigenvalue': {'re': float(self.eigenvalue.real),
                           'im': float(self.eigenvalue.imag)},
            'multiplicity': int(self.multiplicity),
            'controllable_from': [bool(b) for b in self.controllable_from],
            'observable_at': [bool(b) for b in self.observable_at],
            'unstable': bool(self.unstable),
        }


def eigenvalues(M):
    """Full spectrum of a square real matrix, with multiplicity."""
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise NonSquareError(f"eigenvalues need a square matrix, got {M.shape}")
    if M.shape[0] == 0:
        return np.zeros(0, dtype=complex)
    ev = np.linalg.eigvals(M).astype(complex)
    # exact conjugate symmetry for real input
    ev[np.abs(ev.imag) <= 1e-14 * (1 + np.abs(ev.real))] = ev[
        np.abs(ev.imag) <= 1e-14 * (1 + np.abs(ev.real))].real
    return ev


def cluster_eigenvalues(ev, tol=CLUSTER_TOL):
    """Group eigenvalues closer than ``tol * (1 + |lambda|)`` (single linkage).

    Returns a list of ``(centre, multiplicity)`` sorted by real part then
    imaginary part.
    """
    ev = list(np.asarray(ev, dtype=complex))
    clusters = []
    for lam in ev:
        for cl in clusters:
            if any(abs(lam - mu) < tol * (1 + abs(mu)) for mu in cl):
                cl.append(lam)
                break
        else:
            clusters.append([lam])
    out = []
    for cl in clusters:
        c = complex(np.mean(cl))
        if abs(c.imag) < tol * (1 + abs(c)):
            c = complex(c.real, 0.0)
        out.append((c, len(cl)))
    out.sort(key=lambda t: (round(t[0].real, 9), round(t[0].imag, 9)))
    return out


def _null_vectors(lam, A, mult):
    """Left and right (approximate) null bases of ``lam I - A``.

    The dimension is the number of singular values below
    ``CLUSTER_TOL * max(1, ||A||)``, clipped to ``[1, mult]``.
    """
    n = A.shape[0]
    U, sv, Vh = np.linalg.svd(lam * np.eye(n) - A)
    g = int(np.sum(sv <= CLUSTER_TOL * max(1.0, np.linalg.norm(A, 2))))
    g = min(max(g, 1), mult)
    return U[:, n - g:], Vh[n - g:, :].conj().T


def _spans(M, g, tol_rank):
    """Whether the g x k matrix of normalised projections has rank g."""
    if M.size == 0:
        return False
    sv = svdvals(M)
    return int(np.sum(sv > tol_rank)) >= g


def _unit_cols(M):
    nrm = np.linalg.norm(M, axis=0)
    out = np.zeros_like(M, dtype=float)
    ok = nrm > 0
    out[:, ok] = M[:, ok] / nrm[ok]
    return out


def _mode_tests(sys, lam, mult, tol_rank):
    """PBH tests for one eigenvalue cluster, in eigenvector form.

    ``rank [lam I - A, B_S] = n`` exactly when the left null vectors of
    ``lam I - A`` are not all annihilated by ``B_S``; columns of ``B`` and
    rows of ``C`` are normalised so the threshold does not depend on
    input/output scaling.
    """
    W, V = _null_vectors(lam, sys.A, mult)
    g = W.shape[1]
    Bn = _unit_cols(sys.B)
    Cn = _unit_cols(sys.C.T).T
    WB = W.conj().T @ Bn
    CV = Cn @ V
    ctrb = [_spans(WB[:, [j]], g, tol_rank) for j in range(sys.ninputs)]
    obsv = [_spans(CV[[i], :].T, g, tol_rank) for i in range(sys.noutputs)]
    return ctrb, obsv, _spans(WB, g, tol_rank), _spans(CV.T, g, tol_rank)


def pbh_classify(sys, tol_rank=TOL_RANK, tol_stab=TOL_STAB, cluster_tol=CLUSTER_TOL):
    """Per-mode controllability (each input column) and observability
    (each output row) by the Popov-Belevitch-Hautus tests.

    Parameters
    ----------
    sys : StateSpace
    tol_rank : float
        A normalised projection ``|w^H b| / ||b||`` (or ``|c v| / ||c||``)
        below this counts as zero.
    tol_stab : float
        A mode with ``Re >= -tol_stab`` is reported unstable.

    Returns
    -------
    list of ModeReport
        One entry per eigenvalue cluster.
    """
    reports = []
    for lam, mult in cluster_eigenvalues(eigenvalues(sys.A), cluster_tol):
        ctrb, obsv, _, _ = _mode_tests(sys, lam, mult, tol_rank)
        rep = ModeReport(lam, mult, ctrb, obsv, bool(lam.real >= -tol_stab))
        if mult > 1:
            rep.warnings.append(f"eigenvalue {lam:.6g} has multiplicity {mult}; "
                                "per-column PBH treats it as one mode")
        reports.append(rep)
    return reports


def pbh_joint(sys, lam, tol_rank=TOL_RANK, mult=1):
    """(controllable from all inputs jointly, observable from all outputs jointly)."""
    _, _, c, o = _mode_tests(sys, lam, mult, tol_rank)
    return c, o


def _scale(A, B):
    return max(1.0, np.linalg.norm(A, 2) if A.size else 0.0,
               np.linalg.norm(B, 2) if B.size else 0.0)


def _controllable_basis(A, B, tol_rank):
    """Orthonormal basis of the controllable subspace by a staircase sweep."""
    n = A.shape[0]
    if n == 0 or B.size == 0:
        return np.zeros((n, 0))
    thresh = tol_rank * _scale(A, B)
    basis = np.zeros((n, 0))
    block = B
    while basis.shape[1] < n:
        if basis.shape[1]:
            block = block - basis @ (basis.T @ block)
            # second projection pass for orthogonality
            block = block - basis @ (basis.T @ block)
        if block.size == 0:
            break
        U, sv, _ = np.linalg.svd(block, full_matrices=False)
        r = int(np.sum(sv > thresh))
        if r == 0:
            break
        new = U[:, :r]
        basis = np.hstack([basis, new])
        block = A @ new
    return basis


def controllable_part(sys, tol_rank=TOL_RANK):
    """Restriction of ``sys`` to its controllable subspace (orthogonal basis)."""
    V = _controllable_basis(sys.A, sys.B, tol_rank)
    return StateSpace(V.T @ sys.A @ V, V.T @ sys.B, sys.C @ V, sys.D)


def _test_points(sys):
    rad = 1.0 + (np.max(np.abs(eigenvalues(sys.A))) if sys.n else 0.0)
    return rad * np.array([0.6 + 0.8j, -0.3 + 1.7j, 1.1 + 0.45j])


def _same_response(a, b, points, rtol):
    for s in points:
        ga, gb = frequency_response(a, s), frequency_response(b, s)
        if np.max(np.abs(ga - gb)) > rtol * max(1.0, np.max(np.abs(ga))):
            return False
    return True


def _staircase_minimal(sys, tol_rank):
    c = controllable_part(sys, tol_rank)
    W = _controllable_basis(c.A.T, c.C.T, tol_rank)
    return StateSpace(W.T @ c.A @ W, W.T @ c.B, c.C @ W, sys.D)


def minimal_realization(sys, tol_rank=TOL_RANK, check=True):
    """Controllable-and-observable part of ``sys``.

    Two orthogonal staircase passes: the controllable subspace is
    extracted first, then the observable subspace of the result (via the
    dual system). With ``check`` the reduced transfer matrix is compared
    with the original at a few test frequencies; a reduction that alters
    it (rank decisions fooled by badly scaled, highly non-normal
    realizations) is retried with tighter tolerances, and as a last
    resort the realization is returned unreduced.
    """
    red = _staircase_minimal(sys, tol_rank)
    if not check or red.n == sys.n:
        return red
    pts = _test_points(sys)
    tol = tol_rank
    while True:
        if _same_response(sys, red, pts, 1e-9):
            return red
        tol *= 1e-3
        if tol < 1e-14:
            return sys
        red = _staircase_minimal(sys, tol)


def charpoly_adjugate(A):
    """Faddeev-LeVerrier recursion.

    Returns ``(chi, N)`` with ``chi`` the ascending coefficients of
    ``det(sI - A)`` and ``N[k]`` the matrix coefficient of ``s**k`` in
    ``adj(sI - A)``.
    """
    A = np.asarray(A, dtype=float)
    n = A.shape[0]
    if n == 0:
        return np.array([1.0]), np.zeros((0, 0, 0))
    c = np.zeros(n + 1)
    c[n] = 1.0
    M = np.zeros_like(A)
    Ms = []
    I = np.eye(n)
    for k in range(1, n + 1):
        M = A @ M + c[n - k + 1] * I
        Ms.append(M)
        c[n - k] = -np.trace(A @ M) / k
    # Ms[k-1] multiplies s^(n-k)
    N = np.array([Ms[n - 1 - j] for j in range(n)])
    return c, N


def transmission_zeros(sys):
    """Finite zeros of a square system from its Rosenbrock pencil.

    The generalized eigenvalues of ``([[A, B], [C, D]], [[I, 0], [0, 0]])``
    are computed; infinite ones (and numerically huge ones) are dropped.
    Apply to a minimal realization: uncontrollable or unobservable modes
    show up as zeros.
    """
    if sys.ninputs != sys.noutputs:
        raise NonSquareError("transmission zeros need a square system")
    n, m = sys.n, sys.ninputs
    if n == 0:
        return np.zeros(0, dtype=complex)
    M = np.block([[sys.A, sys.B], [sys.C, sys.D]])
    N = block_diag(np.eye(n), np.zeros((m, m)))
    alpha, beta = eig(M, N, right=False, homogeneous_eigvals=True)
    big = 1e8 * max(1.0, np.linalg.norm(M, 2))
    ok = np.abs(beta) * big > np.abs(alpha)
    return np.sort_complex(alpha[ok] / beta[ok])


def _zpk_tf(sys):
    d = float(sys.D[0, 0])
    if sys.n == 0:
        return RationalFunction(Polynomial([d]))
    poles = eigenvalues(sys.A)
    zeros = transmission_zeros(sys)
    rad = 1.0 + max(np.max(np.abs(poles)), np.max(np.abs(zeros), initial=0.0))
    s0 = rad * complex(0.6, 0.8)
    g = frequency_response(sys, s0)[0, 0]
    gain = g * np.prod(s0 - poles) / np.prod(s0 - zeros)
    return RationalFunction.from_zpk(zeros, poles, float(gain.real))


def siso_tf(sys, out_row=0, in_col=0, tol_rank=TOL_RANK):
    """Rational function ``c_i (sI - A)^{-1} b_j + d_ij`` of one channel.

    Built in zero-pole-gain form, which stays accurate for high-gain
    realizations where characteristic-polynomial coefficients do not.
    The minimal realization is used when it reproduces the channel;
    otherwise the full realization is converted and common pole-zero
    pairs are cancelled.
    """
    if not (0 <= out_row < sys.noutputs and 0 <= in_col < sys.ninputs):
        raise BadIndexError(f"channel ({out_row}, {in_col}) out of range")
    sub = sys.subsystem([out_row], [in_col])
    rf = _zpk_tf(minimal_realization(sub, tol_rank))
    pts = _test_points(sub)
    ref = np.array([frequency_response(sub, s)[0, 0] for s in pts])
    got = np.array([rf(s) for s in pts])
    if np.max(np.abs(got - ref)) <= 1e-6 * max(1.0, np.max(np.abs(ref))):
        return rf
    return reduce(_zpk_tf(sub))


def frequency_response(sys, s):
    """``C (sI - A)^{-1} B + D`` at a single complex frequency."""
    if sys.n == 0:
        return sys.D.astype(complex)
    X = np.linalg.solve(s * np.eye(sys.n) - sys.A, sys.B.astype(complex))
    return sys.C @ X + sys.D


def cascade(first, second):
    """Series connection: the output of ``first`` drives ``second``."""
    if first.noutputs != second.ninputs:
        raise DimensionMismatchError("cascade: output/input sizes differ")
    n1, n2 = first.n, second.n
    A = np.block([[first.A, np.zeros((n1, n2))],
                  [second.B @ first.C, second.A]])
    B = np.vstack([first.B, second.B @ first.D])
    C = np.hstack([second.D @ first.C, second.C])
    D = second.D @ first.D
    return StateSpace(A, B, C, D)


def interconnect(plant, links):
    """Close strictly proper SISO links around a plant.

    Node equations ``u = Q_cur u + P_cur y + v`` (positive feedback): a
    ``'P'`` link ``(kind, i, j, sys)`` adds ``sys`` applied to ``y_j`` into
    ``u_i``; a ``'Q'`` link adds ``sys`` applied to ``u_j`` into ``u_i``.

    Returns
    -------
    StateSpace
        States ``[plant; link_1; ...]``, inputs ``v`` (one per plant
        input), outputs ``[u; y]``.
    """
    m, p = plant.ninputs, plant.noutputs
    links = list(links)
    for kind, i, j, ls in links:
        if kind not in ('P', 'Q'):
            raise ValueError(f"link kind must be 'P' or 'Q', got {kind!r}")
        if ls.ninputs != 1 or ls.noutputs != 1:
            raise DimensionMismatchError("links must be SISO")
        if ls.D[0, 0] != 0:
            raise IllPosedLoopError("links must be strictly proper (D = 0)")
        jmax = p if kind == 'P' else m
        if not (0 <= i < m and 0 <= j < jmax):
            raise BadIndexError(f"{kind}-link ({i}, {j}) out of range")
    sizes = [plant.n] + [ls.n for *_, ls in links]
    N = sum(sizes)
    offs = np.cumsum([0] + sizes)
    # u = v + Cu X
    Cu = np.zeros((m, N))
    for k, (kind, i, j, ls) in enumerate(links):
        Cu[i, offs[k + 1]:offs[k + 2]] += ls.C[0]
    Cy = np.zeros((p, N))
    Cy[:, :plant.n] = plant.C
    Cy += plant.D @ Cu
    Du = np.eye(m)
    Dy = plant.D.copy()
    Acl = block_diag(plant.A, *[ls.A for *_, ls in links]) if links else plant.A.copy()
    Acl = np.asarray(Acl, dtype=float).reshape(N, N)
    Bcl = np.zeros((N, m))
    Acl[:plant.n, :] += plant.B @ Cu
    Bcl[:plant.n, :] = plant.B
    for k, (kind, i, j, ls) in enumerate(links):
        rows = slice(offs[k + 1], offs[k + 2])
        Crow, Drow = (Cy[j], Dy[j]) if kind == 'P' else (Cu[j], Du[j])
        Acl[rows, :] += np.outer(ls.B[:, 0], Crow)
        Bcl[rows, :] += np.outer(ls.B[:, 0], Drow)
    return StateSpace(Acl, Bcl, np.vstack([Cu, Cy]), np.vstack([Du, Dy]))


def spectral_abscissa(A):
    ev = eigenvalues(A)
    return float(np.max(ev.real)) if ev.size else -np.inf


def is_stable(sys, tol_stab=TOL_STAB):
    """``(stable, unstable_eigenvalues)``; stable iff every Re < -tol_stab."""
    A = sys.A if isinstance(sys, StateSpace) else np.asarray(sys, dtype=float)
    ev = eigenvalues(A)
    bad = ev[ev.real >= -tol_stab]
    return bool(bad.size == 0), np.sort_complex(bad)


def certified_stable(sys, tol_stab=TOL_STAB):
    """Stability backed by a Lyapunov certificate.

    Solves ``M^T X + X M = -I`` for ``M = A + tol_stab I`` and accepts
    when the symmetric part of ``X`` is positive definite and the
    recomputed residual ``R = M^T X + X M + I``, plus a bound on the
    rounding committed while forming it, has norm below one half; then
    ``M^T X + X M`` is negative definite. A diagonally balanced copy of
    ``M`` is tried when the plain one fails. Highly non-normal closed
    loops can look stable to ``eig`` while no certificate can be
    computed in double precision; repeated or clustered stable
    eigenvalues do not hurt.

    Returns
    -------
    (bool, float)
        Whether the certificate holds, and the bounded residual (``inf``
        when ``X`` is not positive definite or not finite).
    """
    ok, res, _ = lyapunov_certificate(sys, tol_stab)
    return ok, res


def _certificate(M):
    n = M.shape[0]
    with warnings.catch_warnings():
        # near-singular cases are caught by the residual bound below
        warnings.simplefilter('ignore', RuntimeWarning)
        X = solve_continuous_lyapunov(M.T, -np.eye(n))
    X = (X + X.T) / 2
    if not np.all(np.isfinite(X)) or np.linalg.eigvalsh(X)[0] <= 0:
        return np.inf, None
    res = float(np.linalg.norm(M.T @ X + X @ M + np.eye(n), 2))
    rounding = 4 * n * np.finfo(float).eps * np.linalg.norm(M, 2) * np.linalg.norm(X, 2)
    return res + rounding, X


def lyapunov_certificate(sys, tol_stab=TOL_STAB):
    """``(ok, residual, X)`` behind ``certified_stable``; ``X`` is None on failure.

    ``X`` is returned in the original coordinates and satisfies
    ``M^T X + X M < 0``.
    """
    A = sys.A if isinstance(sys, StateSpace) else np.asarray(sys, dtype=float)
    n = A.shape[0]
    if n == 0:
        return True, 0.0, np.zeros((0, 0))
    if not is_stable(A, tol_stab)[0]:
        return False, np.inf, None
    M = A + tol_stab * np.eye(n)
    res, X = _certificate(M)
    if res >= 0.5:
        Mb, (scale, _) = matrix_balance(M, permute=False, separate=True)
        res_b, Xb = _certificate(Mb)
        if res_b < res:
            res = res_b
            # Mb = D^-1 M D, so X = D^-1 Xb D^-1 certifies M
            X = Xb / np.outer(scale, scale)
    return bool(res < 0.5), res, (X if res < 0.5 else None)


def default_step(A):
    rho = np.max(np.abs(eigenvalues(A))) if np.size(A) else 0.0
    return min(1e-3, 0.1 / rho) if rho > 0 else 1e-3


def simulate(sys, x0, horizon, step=None, n_samples=None):
    """Zero-input response by classical fixed-step RK4.

    For ``x' = A x`` one RK4 step is the matrix
    ``I + hA + (hA)^2/2 + (hA)^3/6 + (hA)^4/24``; sampled states are
    produced by applying its powers, which is the same trajectory as
    stepping one at a time.

    Parameters
    ----------
    sys : StateSpace or ndarray
        System (only ``A`` is used) or the ``A`` matrix.
    x0 : array_like
    horizon : float
    step : float, optional
        Defaults to ``min(1e-3, 0.1 / spectral_radius)``.
    n_samples : int, optional
        Number of returned samples after ``x0`` (default: every step, up
        to 1000 samples).

    Returns
    -------
    t : ndarray
    X : ndarray, shape (len(t), n)
    """
    A = sys.A if isinstance(sys, StateSpace) else np.asarray(sys, dtype=float)
    x0 = np.asarray(x0, dtype=float).ravel()
    if step is None:
        step = default_step(A)
    if step <= 0 or horizon < step:
        raise ValueError("need step > 0 and horizon >= step")
    nsteps = int(round(horizon / step))
    step = horizon / nsteps
    hA = step * A
    I = np.eye(A.shape[0])
    Phi = I + hA @ (I + hA @ (I / 2 + hA @ (I / 6 + hA / 24)))
    if n_samples is None:
        n_samples = min(nsteps, 1000)
    idx = np.unique(np.round(np.linspace(0, nsteps, n_samples + 1)).astype(int))
    X = np.empty((len(idx), len(x0)))
    X[0] = x0
    x = x0
    for k in range(1, len(idx)):
        with np.errstate(over='ignore', invalid='ignore'):
            x = np.linalg.matrix_power(Phi, int(idx[k] - idx[k - 1])) @ x
        if not np.all(np.isfinite(x)):
            raise NonFiniteError(f"trajectory overflowed near t={idx[k] * step:g}")
        X[k] = x
    return idx * step, X
