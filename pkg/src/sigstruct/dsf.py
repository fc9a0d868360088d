"""
Dynamical structure functions.

For a realization whose measured states ``y`` come first,

    sY = W Y + V U,    W = A11 + A12 (sI - A22)^{-1} A21,
                       V = B1  + A12 (sI - A22)^{-1} B2,

and with ``Dg = diag(W)`` the pair

    Q = (sI - Dg)^{-1} (W - Dg),    P = (sI - Dg)^{-1} V

satisfies ``Y = Q Y + P U`` with ``Q`` hollow. ``(Q, P)`` is the signal
structure; the transfer matrix is ``G = (I - Q)^{-1} P``.
"""
from dataclasses import dataclass
import numpy as np

from .exceptions import (DegenerateSamplesError, DimensionMismatchError,
                         SingularStructureError)
from .polyrat import Polynomial, RationalFunction, reduce, REDUCE_TOL
from .statespace import PartitionedStateSpace, StateSpace, charpoly_adjugate

__all__ = ['Dsf', 'DsfIntermediates', 'BinaryStructure', 'compute_dsf',
           'reconstruct_g', 'evaluate_matrix', 'structure_of',
           'effective_tf_pattern', 'dsf_membership', 'default_freqs',
           'random_structured_dsf', 'edge_list', 'ADJUGATE_MAX']

ADJUGATE_MAX = 6


def _zeros(rows, cols):
    return [[RationalFunction.zero() for _ in range(cols)] for _ in range(rows)]


def evaluate_matrix(M, s):
    """Evaluate a nested list of rational functions at complex ``s``."""
    return np.array([[f(s) for f in row] for row in M], dtype=complex).reshape(
        len(M), len(M[0]) if M else 0)


@dataclass(frozen=True)
class BinaryStructure:
    """Boolean sparsity ``(Qbin, Pbin)`` of a signal structure.

    ``Qbin[i, j]`` means node ``j`` feeds node ``i``; ``Pbin[i, j]`` means
    measured signal ``j`` feeds node ``i``. ``Qbin`` is hollow.
    """
    Qbin: np.ndarray
    Pbin: np.ndarray

    def __post_init__(self):
        Q = np.array(self.Qbin, dtype=bool)
        P = np.array(self.Pbin, dtype=bool)
        if Q.ndim != 2 or Q.shape[0] != Q.shape[1]:
            raise DimensionMismatchError("Qbin must be square")
        if P.ndim != 2 or P.shape[0] != Q.shape[0]:
            raise DimensionMismatchError("Pbin must have as many rows as Qbin")
        if np.any(np.diag(Q)):
            raise ValueError("Qbin must be hollow (zero diagonal)")
        Q.setflags(write=False)
        P.setflags(write=False)
        object.__setattr__(self, 'Qbin', Q)
        object.__setattr__(self, 'Pbin', P)

    @property
    def nodes(self):
        return self.Qbin.shape[0]

    @property
    def ninputs(self):
        return self.Pbin.shape[1]

    @classmethod
    def diagonal(cls, n):
        return cls(np.zeros((n, n), bool), np.eye(n, dtype=bool))

    @classmethod
    def cyclic(cls, n):
        """Ring ``u_i <- u_{i+1}`` (indices mod n) with diagonal ``Pbin``."""
        Q = np.zeros((n, n), bool)
        if n > 1:
            for i in range(n):
                Q[i, (i + 1) % n] = True
        return cls(Q, np.eye(n, dtype=bool))

    @classmethod
    def full(cls, nodes, ninputs):
        return cls(np.zeros((nodes, nodes), bool), np.ones((nodes, ninputs), bool))

    def __le__(self, other):
        return bool(np.all(self.Qbin <= other.Qbin) and np.all(self.Pbin <= other.Pbin))

    def __eq__(self, other):
        if not isinstance(other, BinaryStructure):
            return NotImplemented
        return (np.array_equal(self.Qbin, other.Qbin)
                and np.array_equal(self.Pbin, other.Pbin))

    def __hash__(self):
        return hash((self.Qbin.tobytes(), self.Pbin.tobytes()))


@dataclass(frozen=True)
class Dsf:
    """``Q`` (q x q, hollow) and ``P`` (q x m) as nested lists of rationals."""
    Q: list
    P: list

    def __post_init__(self):
        q = len(self.Q)
        if any(len(row) != q for row in self.Q):
            raise DimensionMismatchError("Q must be square")
        if len(self.P) != q:
            raise DimensionMismatchError("P must have as many rows as Q")
        m = len(self.P[0]) if q else 0
        if any(len(row) != m for row in self.P):
            raise DimensionMismatchError("P rows have unequal lengths")
        for i in range(q):
            if not self.Q[i][i].is_zero():
                raise ValueError("Q must be hollow")

    @property
    def q(self):
        return len(self.Q)

    @property
    def m(self):
        return len(self.P[0]) if self.P else 0

    def __call__(self, s):
        return evaluate_matrix(self.Q, s), evaluate_matrix(self.P, s)

    def transfer_at(self, s):
        """``(I - Q(s))^{-1} P(s)`` by a numeric solve."""
        Qs, Ps = self(s)
        return np.linalg.solve(np.eye(self.q) - Qs, Ps)


@dataclass(frozen=True)
class DsfIntermediates:
    W: list
    V: list
    Ddiag: list


def compute_dsf(psys, tol=REDUCE_TOL):
    """Dynamical structure function of a partitioned realization.

    Every entry is formed as one quotient over the common row
    denominator ``s*chi - (A11_ii*chi + n_ii)``, where ``chi`` is the
    characteristic polynomial of ``A22`` and ``n_ii`` the corresponding
    adjugate numerator, and is then reduced.

    Parameters
    ----------
    psys : PartitionedStateSpace or StateSpace
        A ``StateSpace`` must have a row-selection ``C``.

    Returns
    -------
    (Dsf, DsfIntermediates)
    """
    if isinstance(psys, StateSpace):
        psys = PartitionedStateSpace.from_statespace(psys)
    q, m, h = psys.q, psys.m, psys.h
    chi_c, N = charpoly_adjugate(psys.A22)
    chi = Polynomial(chi_c)

    def resolvent_entry(left, right):
        # left (sI - A22)^{-1} right, as numerator over chi
        if h == 0:
            return Polynomial()
        return Polynomial([left @ Nk @ right for Nk in N])

    Wnum = [[chi.scale(psys.A11[i, j]) + resolvent_entry(psys.A12[i], psys.A21[:, j])
             for j in range(q)] for i in range(q)]
    Vnum = [[chi.scale(psys.B1[i, k]) + resolvent_entry(psys.A12[i], psys.B2[:, k])
             for k in range(m)] for i in range(q)]
    W = [[reduce(RationalFunction(Wnum[i][j], chi), tol) for j in range(q)] for i in range(q)]
    V = [[reduce(RationalFunction(Vnum[i][k], chi), tol) for k in range(m)] for i in range(q)]
    Ddiag = [W[i][i] for i in range(q)]
    s = Polynomial.s()
    Q = _zeros(q, q)
    P = _zeros(q, m)
    for i in range(q):
        den = s * chi - Wnum[i][i]
        for j in range(q):
            if j != i:
                Q[i][j] = reduce(RationalFunction(Wnum[i][j], den), tol)
        for k in range(m):
            P[i][k] = reduce(RationalFunction(Vnum[i][k], den), tol)
    return Dsf(Q, P), DsfIntermediates(W, V, Ddiag)


def _poly_det(M):
    """Determinant of a small square polynomial matrix by cofactor expansion."""
    n = len(M)
    if n == 0:
        return Polynomial([1.0])
    if n == 1:
        return M[0][0]
    total = Polynomial()
    for j in range(n):
        if M[0][j].is_zero():
            continue
        minor = [row[:j] + row[j + 1:] for row in M[1:]]
        term = M[0][j] * _poly_det(minor)
        total = total + (term if j % 2 == 0 else -term)
    return total


def _row_denominator(row):
    """Product of the distinct denominators appearing in ``row``."""
    dens = []
    for f in row:
        if f.is_zero() or f.den.degree == 0:
            continue
        if not any(d.degree == f.den.degree and d.allclose(f.den, 1e-12) for d in dens):
            dens.append(f.den)
    out = Polynomial([1.0])
    for d in dens:
        out = out * d
    return out


def reconstruct_g(dsf, tol=REDUCE_TOL):
    """Transfer matrix ``(I - Q)^{-1} P`` as rational functions.

    Each row of ``[Q P]`` is brought over one polynomial denominator
    ``delta_i``, turning ``I - Q`` into the polynomial matrix
    ``M = diag(delta) - Nq``; then ``G = adj(M) Np / det(M)`` with a
    single reduction per entry. Refused for more than ``ADJUGATE_MAX``
    nodes (use :meth:`Dsf.transfer_at` there).
    """
    q, m = dsf.q, dsf.m
    if q > ADJUGATE_MAX:
        raise NotImplementedError(
            f"closed-form inverse refused for q={q} > {ADJUGATE_MAX}; "
            "evaluate with Dsf.transfer_at instead")
    Mpoly, Npoly = [], []
    for i in range(q):
        delta = _row_denominator(list(dsf.Q[i]) + list(dsf.P[i]))
        Mrow = []
        for j in range(q):
            f = dsf.Q[i][j]
            nq = Polynomial() if f.is_zero() else (f.num * delta.divmod(f.den)[0])
            Mrow.append((delta if i == j else Polynomial()) - nq)
        Mpoly.append(Mrow)
        Npoly.append([Polynomial() if f.is_zero() else f.num * delta.divmod(f.den)[0]
                      for f in dsf.P[i]])
    det = _poly_det(Mpoly)
    if det.is_zero() or np.max(np.abs(det.coeffs)) < 1e-300:
        raise SingularStructureError("det(I - Q) vanishes identically")
    # adj(M)[j][i] = (-1)^(i+j) det(M without row i, col j)
    adj = [[None] * q for _ in range(q)]
    for i in range(q):
        for j in range(q):
            minor = [row[:j] + row[j + 1:] for k, row in enumerate(Mpoly) if k != i]
            c = _poly_det(minor)
            adj[j][i] = c if (i + j) % 2 == 0 else -c
    G = _zeros(q, m)
    for i in range(q):
        for k in range(m):
            num = Polynomial()
            for j in range(q):
                if not Npoly[j][k].is_zero() and not adj[i][j].is_zero():
                    num = num + adj[i][j] * Npoly[j][k]
            G[i][k] = reduce(RationalFunction(num, det), tol)
    return G


def structure_of(dsf, tol=1e-9):
    """Boolean pattern of the nonzero entries of a DSF.

    An entry counts as zero when every numerator coefficient is at most
    ``tol`` times the largest denominator coefficient.
    """
    def nz(f):
        if f.is_zero():
            return False
        scale = max(1.0, float(np.max(np.abs(f.den.coeffs))))
        return bool(np.max(np.abs(f.num.coeffs)) > tol * scale)

    Qb = np.array([[nz(f) for f in row] for row in dsf.Q], dtype=bool).reshape(dsf.q, dsf.q)
    Pb = np.array([[nz(f) for f in row] for row in dsf.P], dtype=bool).reshape(dsf.q, dsf.m)
    np.fill_diagonal(Qb, False)
    return BinaryStructure(Qb, Pb)


def reach(Qbin):
    """Reflexive-transitive closure of the directed graph ``Qbin``."""
    R = np.eye(len(Qbin), dtype=bool) | np.asarray(Qbin, bool)
    while True:
        R2 = R | ((R.astype(int) @ R.astype(int)) > 0)
        if np.array_equal(R2, R):
            return R
        R = R2


def effective_tf_pattern(bs):
    """Sparsity of ``K = (I - Q)^{-1} P`` implied by a signal structure."""
    return (reach(bs.Qbin).astype(int) @ bs.Pbin.astype(int)) > 0


def default_freqs(n=8, lo=1e-2, hi=1e2, shift=1e-3):
    """Log-spaced imaginary-axis points nudged right by ``shift``."""
    return shift + 1j * np.logspace(np.log10(lo), np.log10(hi), n)


def _membership_residual(K, bs):
    """Worst relative residual of ``(I - Q) K = P`` off the ``Pbin`` support
    at one frequency, with ``Q`` solved for by least squares row by row."""
    K = np.asarray(K, dtype=complex)
    scale = max(np.linalg.norm(K), 1e-300)
    worst = 0.0
    for a in range(bs.nodes):
        cons = np.flatnonzero(~bs.Pbin[a])
        if cons.size == 0:
            continue
        free = np.flatnonzero(bs.Qbin[a])
        target = K[a, cons]
        if free.size:
            coef = K[np.ix_(free, cons)].T
            qa, *_ = np.linalg.lstsq(coef, target, rcond=None)
            resid = target - coef @ qa
        else:
            resid = target
        worst = max(worst, float(np.linalg.norm(resid)) / scale)
    return worst


def dsf_membership(K_samples, bs, tol=1e-8, return_details=False):
    """Whether sampled transfer matrices are realizable with structure ``bs``.

    ``K`` belongs to the structured set iff at every frequency some ``Q``
    with pattern ``Qbin`` and ``P`` with pattern ``Pbin`` satisfy
    ``(I - Q) K = P``. Entries of ``(I - Q) K`` outside ``Pbin`` must
    vanish; that is a linear least-squares problem in the free entries
    of each row of ``Q``.

    Parameters
    ----------
    K_samples : list of (complex, ndarray)
    bs : BinaryStructure
    tol : float
        Relative residual threshold.
    return_details : bool
        Also return ``(frequency, residual)`` of the worst sample.
    """
    K_samples = list(K_samples)
    if len(K_samples) < 3:
        raise DegenerateSamplesError("membership test needs at least 3 frequencies")
    mats = [np.asarray(K, dtype=complex) for _, K in K_samples]
    for K in mats:
        if K.shape != (bs.nodes, bs.ninputs):
            raise DimensionMismatchError(f"sample shape {K.shape} does not match structure")
        if not np.all(np.isfinite(K)):
            raise DegenerateSamplesError("non-finite sample (frequency at a pole?)")
    if all(np.linalg.norm(K) < 1e-300 for K in mats):
        raise DegenerateSamplesError("all samples vanish; the test would be vacuous")
    worst = (None, 0.0)
    for (s, _), K in zip(K_samples, mats):
        r = _membership_residual(K, bs)
        if r > worst[1]:
            worst = (s, r)
    member = worst[1] < tol
    if return_details:
        return member, {'frequency': worst[0], 'residual': worst[1]}
    return member


def random_structured_dsf(bs, rng, a_range=(0.5, 5.0), c_range=(-2.0, 2.0)):
    """DSF with pattern ``bs`` and random first-order stable entries ``c/(s+a)``."""
    def entry():
        a = rng.uniform(*a_range)
        c = 0.0
        while abs(c) < 1e-3:
            c = rng.uniform(*c_range)
        return RationalFunction(Polynomial([c]), Polynomial([a, 1.0]))

    q, m = bs.nodes, bs.ninputs
    Q = _zeros(q, q)
    P = _zeros(q, m)
    for i in range(q):
        for j in range(q):
            if bs.Qbin[i, j]:
                Q[i][j] = entry()
        for k in range(m):
            if bs.Pbin[i, k]:
                P[i][k] = entry()
    return Dsf(Q, P)


def edge_list(bs, input_names=None, node_names=None):
    """Signal-structure graph as ``(source, target, kind)`` edges.

    Names default to the plant convention: nodes ``y1..yq`` (measured
    signals) and inputs ``u1..um``. Pass ``node_names=['u1', ...]`` and
    ``input_names=['y1', ...]`` for a controller structure.
    """
    q, m = bs.nodes, bs.ninputs
    nodes = node_names or [f'y{i + 1}' for i in range(q)]
    ins = input_names or [f'u{j + 1}' for j in range(m)]
    edges = []
    for i in range(q):
        for j in range(q):
            if bs.Qbin[i, j]:
                edges.append((nodes[j], nodes[i], 'Q'))
        for j in range(m):
            if bs.Pbin[i, j]:
                edges.append((ins[j], nodes[i], 'P'))
    return edges
