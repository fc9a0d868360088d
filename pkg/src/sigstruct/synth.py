"""
Sequential link-by-link design of a controller with a prescribed signal
structure.

The controller is wired by the node equations ``u = Q u + P y + v``
(positive feedback). Links are designed one at a time against the SISO
channel they see in the current partially closed loop: a P-link
``(i, j)`` sees injection ``v_i`` to plant output ``y_j``; a Q-link
``(i, j)`` sees ``v_i`` to controller node ``u_j``. Each nonzero link is
an observer-based compensator for the minimal part of its channel, so it
moves exactly the modes it can both reach and see and leaves the rest
untouched. If instability remains at the end, the link-level existence
test supplies a fixed-mode certificate.
"""
from dataclasses import dataclass, field, asdict
import logging

import numpy as np
from scipy.linalg import schur, solve_continuous_lyapunov, solve_sylvester
from scipy.signal import place_poles as _scipy_place_poles

from .analysis import existence_check, unstable_cancellation
from .dsf import BinaryStructure, Dsf, _zeros
from .exceptions import (AlreadyDesignedError, BadIndexError, DimensionMismatchError,
                         MonotonicityViolationError, NotStabilizedError,
                         RetryExhaustedError, UncontrollableError)
from .polyrat import Polynomial, RationalFunction
from .statespace import (TOL_RANK, TOL_STAB, StateSpace, _controllable_basis,
                         certified_stable, eigenvalues, spectral_abscissa,
                         frequency_response, interconnect, is_stable, minimal_realization,
                         siso_tf, transmission_zeros)

log = logging.getLogger(__name__)

__all__ = ['SynthOptions', 'SisoLink', 'Aggregate', 'StepRecord', 'SynthesisReport',
           'channel', 'place_poles', 'butterworth_poles', 'design_link', 'absorb',
           'run_procedure', 'export_controller', 'crhp_count', 'default_link_order']

STABILIZED = 'Stabilized'
NOT_STABILIZABLE = 'NotStabilizable'
INCONCLUSIVE = 'Inconclusive'


@dataclass(frozen=True)
class SynthOptions:
    """Tolerances and pole policy for a synthesis run.

    ``pole_radius=None`` selects ``max(2, 1.5 * spectral radius)`` of the
    unstable part of the channel. The observer arc sits at
    ``observer_ratio`` times the controller radius. When no design is
    admissible the radius is multiplied by ``radius_growth``, at most
    ``max_retries`` times. ``pole_policy`` is ``'auto'`` (arc and mirror
    targets, least transient energy wins), ``'arc'`` or ``'mirror'``.

    ``stable_links`` picks the link for a channel that is already stable
    or empty: ``'connect'`` (default) places a small first-order link
    ``eps / (s + a)`` that keeps the loop stable but passes signals on to
    later links; ``'zero'`` leaves the link out entirely.
    """
    tol_rank: float = TOL_RANK
    tol_stab: float = TOL_STAB
    pole_radius: float = None
    observer_ratio: float = 3.0
    radius_growth: float = 1.13
    max_retries: int = 25
    collision_tol: float = 1e-6
    state_cap: int = 400
    order: tuple = None
    seed: int = 0
    stable_links: str = 'connect'
    pole_policy: str = 'auto'

    def as_dict(self):
        d = asdict(self)
        d['order'] = None if self.order is None else [list(x) for x in self.order]
        return d


@dataclass(frozen=True)
class SisoLink:
    """One designed controller link.

    ``kind`` is ``'P'`` (reads plant output ``y_read``) or ``'Q'`` (reads
    controller node ``u_read``); either way it writes node ``u_write``.
    """
    kind: str
    write: int
    read: int
    compensator: RationalFunction
    realization: StateSpace
    note: str = ''

    @property
    def key(self):
        return (self.kind, self.write, self.read)

    def is_zero(self):
        return self.realization.n == 0 or self.compensator.is_zero()


@dataclass(frozen=True)
class Aggregate:
    """Plant plus the links designed so far, closed through the node equations.

    ``closed_loop`` has inputs ``v`` (one per plant input) and outputs
    ``[u; y]``.
    """
    plant: StateSpace
    links: tuple
    closed_loop: StateSpace

    @classmethod
    def start(cls, plant):
        return cls(plant, (), interconnect(plant, []))

    def designed(self):
        return {lk.key for lk in self.links}


@dataclass
class StepRecord:
    kind: str
    write: int
    read: int
    channel_order: int
    unstable_count: int
    compensator: RationalFunction

    def as_dict(self):
        return {'link': [self.kind, self.write, self.read],
                'channel_order': self.channel_order,
                'unstable_count': self.unstable_count,
                'compensator': {'num': self.compensator.num.coeffs.tolist(),
                                'den': self.compensator.den.coeffs.tolist()}}

    def log_line(self):
        return (f"link {self.kind}[{self.write + 1},{self.read + 1}] "
                f"channel_order={self.channel_order} unstable={self.unstable_count}")


@dataclass
class SynthesisReport:
    verdict: str
    aggregate: Aggregate
    structure: BinaryStructure
    per_step: list
    initial_unstable: int
    certificate: object = None
    options: SynthOptions = field(default_factory=SynthOptions)
    diagnostics: list = field(default_factory=list)

    @property
    def closed_loop(self):
        return self.aggregate.closed_loop

    @property
    def links(self):
        return self.aggregate.links

    @property
    def controller(self):
        if self.verdict != STABILIZED:
            return None
        return export_controller(self)

    def unstable_counts(self):
        return [self.initial_unstable] + [st.unstable_count for st in self.per_step]


def crhp_count(sys, tol_stab=TOL_STAB):
    """Number of closed-right-half-plane eigenvalues (with multiplicity)."""
    return int(np.sum(eigenvalues(sys.A).real >= -tol_stab))


def _check_link_index(plant, kind, i, j):
    m, p = plant.ninputs, plant.noutputs
    if kind not in ('P', 'Q'):
        raise BadIndexError(f"link kind must be 'P' or 'Q', got {kind!r}")
    jmax = p if kind == 'P' else m
    if not (0 <= i < m and 0 <= j < jmax) or (kind == 'Q' and i == j):
        raise BadIndexError(f"invalid {kind}-link ({i}, {j})")


def channel(agg, link):
    """SISO system seen by an undesigned link of the aggregate."""
    kind, i, j = link
    _check_link_index(agg.plant, kind, i, j)
    if (kind, i, j) in agg.designed():
        raise AlreadyDesignedError(f"{kind}-link ({i}, {j}) already designed")
    m = agg.plant.ninputs
    out = m + j if kind == 'P' else j
    return agg.closed_loop.subsystem(out, i)


def butterworth_poles(n, radius):
    """``n`` conjugate-symmetric points on the left half circle of ``radius``."""
    k = np.arange(n)
    theta = np.pi / 2 + (2 * k + 1) * np.pi / (2 * n)
    p = radius * np.exp(1j * theta)
    out = np.empty(n, dtype=complex)
    for idx in range(n):
        mirror = n - 1 - idx
        if idx == mirror:
            out[idx] = -radius
        elif idx < mirror:
            out[idx] = p[idx]
            out[mirror] = np.conj(p[idx])
    return out


def _spectra_match(got, want, rtol):
    got = list(np.asarray(got, complex))
    for w in np.asarray(want, complex):
        k = int(np.argmin([abs(g - w) for g in got]))
        if abs(got[k] - w) > rtol * max(1.0, abs(w)):
            return False
        got.pop(k)
    return True


def place_poles(A, b, desired, tol_rank=TOL_RANK, rtol=1e-6):
    """State-feedback row ``F`` with ``eig(A - b F) = desired`` (Ackermann).

    ``F = e_n^T Ctrb^{-1} phi(A)`` where ``phi`` is the desired
    characteristic polynomial. If the result misses the targets by more
    than ``rtol`` (ill-conditioned Krylov matrix), the gain is recomputed
    with ``scipy.signal.place_poles``.

    Raises
    ------
    UncontrollableError
        If ``(A, b)`` is not controllable.
    """
    A = np.atleast_2d(np.asarray(A, dtype=float))
    b = np.asarray(b, dtype=float).reshape(-1, 1)
    n = A.shape[0]
    desired = np.asarray(desired, dtype=complex).ravel()
    if len(desired) != n:
        raise DimensionMismatchError(f"need {n} target poles, got {len(desired)}")
    if not np.allclose(np.sort_complex(desired), np.sort_complex(desired.conj())):
        raise ValueError("target poles must be closed under conjugation")
    if n == 0:
        return np.zeros((1, 0))
    K = np.empty((n, n))
    col = b[:, 0]
    for k in range(n):
        K[:, k] = col
        col = A @ col
    if _controllable_basis(A, b, tol_rank).shape[1] < n:
        raise UncontrollableError("(A, b) is not controllable")
    phi = Polynomial.from_roots(desired).coeffs
    phiA = np.zeros_like(A)
    for c in phi[::-1]:
        phiA = phiA @ A + c * np.eye(n)
    en = np.zeros(n)
    en[-1] = 1.0
    F = np.linalg.solve(K.T, en) @ phiA
    F = F.reshape(1, n)
    if not _spectra_match(eigenvalues(A - b @ F), desired, rtol):
        try:
            res = _scipy_place_poles(A, b, desired)
        except ValueError as e:
            raise UncontrollableError(f"(A, b) is numerically uncontrollable: {e}") from None
        F = np.asarray(res.gain_matrix).reshape(1, n)
    return F


def _zero_link(kind, i, j, note):
    z = StateSpace(np.zeros((0, 0)), np.zeros((0, 1)), np.zeros((1, 0)), np.zeros((1, 1)))
    return SisoLink(kind, i, j, RationalFunction.zero(), z, note)


def _peak_gain(sys, radius):
    w = np.concatenate([[0.0], np.logspace(-3, 3, 241) * radius])
    return max(abs(frequency_response(sys, 1j * x)[0, 0]) for x in w)


def _connect_link(mr, opts, link, note):
    """Small stable link ``eps / (s + a)`` that changes no unstable count.

    Used across stable or empty channels, and as the fallback when no
    stabilizing design is admissible. The gain starts at a loop gain of
    one half and is halved until the loop has no more closed-right-half-
    plane eigenvalues than the channel itself; the pole avoids the
    channel's poles and zeros.
    """
    kind, i, j = link
    rho = float(np.max(np.abs(eigenvalues(mr.A)))) if mr.n else 0.0
    # stagger poles across links so aggregate eigenvalues stay distinct
    a = (opts.pole_radius or max(1.0, rho)) * (1.0 + 0.173 * ((3 * i + 7 * j + (kind == 'Q')) % 11))
    crit = eigenvalues(mr.A) if mr.n else np.zeros(0)
    if mr.n:
        crit = np.concatenate([crit, transmission_zeros(mr)])
    while crit.size and np.min(np.abs(crit + a)) < opts.collision_tol * (1 + a):
        a *= opts.radius_growth
    peak = _peak_gain(mr, a) if mr.n else 0.0
    eps = a * min(1.0, 0.5 / peak) if peak > 0 else a
    base = crhp_count(mr, opts.tol_stab) if mr.n else 0
    for _ in range(opts.max_retries + 1):
        comp = StateSpace([[-a]], [[1.0]], [[eps]], [[0.0]])
        if mr.n == 0:
            break
        loop = interconnect(StateSpace(mr.A, mr.B, mr.C, mr.D), [('P', 0, 0, comp)])
        if crhp_count(loop, opts.tol_stab) <= base:
            break
        eps *= 0.5
    else:
        raise RetryExhaustedError(f"{kind}-link ({i}, {j}): no stable connecting gain")
    return SisoLink(kind, i, j, siso_tf(comp), comp, note)


def _unstable_first(sys, tol_stab):
    """Block-diagonal coordinates with the unstable modes leading.

    Returns ``(A, b, c, d, k)`` where ``A[:k, :k]`` carries the closed
    right-half-plane eigenvalues and ``A[k:, k:]`` the rest, with zero
    coupling between the blocks.
    """
    T, Z, k = schur(sys.A, output='real', sort=lambda x: np.real(x) >= -tol_stab)
    b = Z.T @ sys.B
    c = sys.C @ Z
    if 0 < k < sys.n:
        X = solve_sylvester(T[:k, :k], -T[k:, k:], -T[:k, k:])
        T = T.copy()
        T[:k, k:] = 0.0
        b = np.vstack([b[:k] - X @ b[k:], b[k:]])
        c = np.hstack([c[:, :k], c[:, :k] @ X + c[:, k:]])
    return T, b, c, sys.D[0, 0], k


def _block_diagonalize(A, k, lower=False):
    """Transform ``T`` with ``inv(T) A T`` block diagonal at split ``k``.

    ``A`` must be block upper (or, with ``lower``, block lower) triangular.
    """
    n = A.shape[0]
    T = np.eye(n)
    if 0 < k < n:
        if lower:
            T[k:, :k] = solve_sylvester(A[k:, k:], -A[:k, :k], -A[k:, :k])
        else:
            T[:k, k:] = solve_sylvester(A[:k, :k], -A[k:, k:], -A[:k, k:])
    return T


def _clear_targets(lams, shift, avoid, rel=0.1):
    """``lams - shift``, each pushed further left until it clears ``avoid``.

    ``lams`` is conjugate closed; so is the result.
    """
    taken = list(avoid)
    out = []
    for lam in lams:
        if lam.imag < 0:
            continue
        t = lam - shift
        while taken and np.min(np.abs(np.asarray(taken) - t)) < rel * (1 + abs(t)):
            t -= 0.25 * shift
        pair = [t, np.conj(t)] if lam.imag > 0 else [complex(t.real, 0.0)]
        out += pair
        taken += pair
    return np.array(out)


def _observer_gain(A, c, k, obs, shift, tol_rank, avoid=()):
    """Output injection placing ``obs`` on the leading block.

    With ``shift > 0`` the slow stable eigenvalues (real part above
    ``-2 shift``, or within three times the slowest) are also moved
    ``shift`` to the left, so that the compensator's copy of a
    slow channel pole does not sit on top of the pole itself. The slow
    block is placed first; that leaves ``A - L c`` block lower
    triangular, which is decoupled again before the leading block is
    placed. Shifted targets are kept clear of ``avoid`` and of each other.
    """
    n = A.shape[0]
    L = np.zeros((n, 1))
    if shift > 0 and k < n:
        As, cs = A[k:, k:], c[:, k:]
        slow = max(2 * shift, 3 * float(np.min(np.abs(eigenvalues(As).real))))
        Ts, Z, ks = schur(As, output='real', sort=lambda x: np.real(x) > -slow)
        if ks:
            W = Z @ _block_diagonalize(Ts, ks)
            cw = cs @ W
            avoid = np.concatenate([np.asarray(avoid, complex), obs,
                                    eigenvalues(Ts[ks:, ks:])])
            target = _clear_targets(eigenvalues(Ts[:ks, :ks]), shift, avoid)
            Lw = np.zeros((n - k, 1))
            Lw[:ks] = place_poles(Ts[:ks, :ks].T, cw[:, :ks].T, target, tol_rank).T
            L[k:] = W @ Lw
    A1 = A - L @ c
    T1 = _block_diagonalize(A1, k, lower=True)
    c1 = c @ T1
    Lu = place_poles(A1[:k, :k].T, c1[:, :k].T, obs, tol_rank).T
    return L + T1[:, :k] @ Lu


def _observer_compensator(A, b, c, d, k, ctrl, obs, tol_rank, full=True, shift=0.0,
                          avoid=()):
    """Observer-based compensator moving only the leading ``k`` modes.

    With ``full`` the observer also models the trailing stable block, and
    the loop poles are the targets plus the stable poles twice; a
    positive ``shift`` moves the observer copies of the slow ones left
    (see ``_observer_gain``). Otherwise only the leading block is
    observed and the compensator has order ``k``.
    """
    n = A.shape[0] if full else k
    A, b, c = A[:n, :n], b[:n], c[:, :n]
    F = np.zeros((1, n))
    F[:, :k] = place_poles(A[:k, :k], b[:k], ctrl, tol_rank)
    L = _observer_gain(A, c, k, obs, shift if full else 0.0, tol_rank,
                       np.concatenate([ctrl, eigenvalues(A[k:, k:]),
                                       np.asarray(avoid, dtype=complex)]))
    # generically minimal; a norm-scaled rank test could drop real states
    # when the gains are large, so it is kept as built
    return StateSpace(A - b @ F - L @ (c - d * F), L, -F, np.zeros((1, 1)))


def _tail_energy(A):
    """``trace(X)`` for ``exp((A + sigma I) t)``, sigma half the decay rate.

    Integrates ``||exp(A t)||_F^2 exp(2 sigma t)``, which punishes large
    transients and slowly decaying tails (near-repeated slow poles)
    relative to the loop's own decay rate.
    """
    sigma = 0.5 * abs(spectral_abscissa(A))
    M = A + sigma * np.eye(A.shape[0])
    X = solve_continuous_lyapunov(M.T, -np.eye(A.shape[0]))
    t = float(np.trace(X))
    return t if np.isfinite(t) and t > 0 else np.inf


def _candidates(up, k, r, opts, avoid=()):
    """Target pole sets ``(name, controller, observer)`` for one attempt.

    Each set is scaled up in small steps until it stays clear of
    ``avoid`` (the channel's stable poles): two links designed with the
    same default radius would otherwise stack identical, strongly
    coupled loop poles.
    """
    avoid = np.asarray(avoid, dtype=complex)

    def clear(name, ctrl, obs):
        for _ in range(40):
            pts = np.concatenate([ctrl, obs])
            if not avoid.size or all(np.min(np.abs(avoid - t)) >= 0.1 * (1 + abs(t))
                                     for t in pts):
                break
            ctrl, obs = 1.07 * ctrl, 1.07 * obs
        return name, ctrl, obs

    arc = clear('arc', butterworth_poles(k, r), butterworth_poles(k, opts.observer_ratio * r))
    policy = opts.pole_policy
    if policy == 'auto' and opts.pole_radius is not None:
        policy = 'arc'
    if policy == 'arc':
        return [arc]
    scale = r / max(2.0, 1.5 * float(np.max(np.abs(up))))
    mirror = (-(np.abs(up.real) + 0.1 * (1 + np.abs(up))) + 1j * up.imag) * scale
    mir = clear('mirror', mirror, 1.5 * mirror)
    return [mir] if policy == 'mirror' else [arc, mir]


def design_link(chan, options=None, link=('P', 0, 0), avoid=None):
    """Stabilizing, cancellation-free compensator for one SISO channel.

    The compensator is observer based. State feedback and observer gains
    act on the unstable modes only. Two target sets are available: a
    Butterworth arc (radius ``r``, observer radius ``observer_ratio * r``)
    and the mirror images of the unstable poles pushed left by a margin,
    which needs far less gain. Each is tried with an observer of the
    whole minimal channel (order ``n_m``; loop poles are the targets plus
    the stable channel poles twice) and with an observer of the unstable
    block alone. Among admissible designs (no collision, no unstable
    cancellation, certified stable loop) the one with the least loop
    transient energy, measured at half the loop's decay rate, wins. ``pole_policy='arc'`` (implied by
    an explicit ``pole_radius``) or ``'mirror'`` restricts the targets.
    Targets are kept clear of ``avoid`` (default: the channel's stable
    poles; ``run_procedure`` passes the whole current loop spectrum).
    Each retry scales the targets by ``radius_growth``. Already stable or
    empty channels get a small connecting link (or the zero link, per
    ``options.stable_links``).

    Returns
    -------
    (SisoLink, int)
        The designed link and the order of the channel's minimal part.
    """
    opts = options or SynthOptions()
    kind, i, j = link
    mr = minimal_realization(chan, opts.tol_rank)
    n = mr.n
    if n == 0 or is_stable(mr, opts.tol_stab)[0]:
        note = 'empty channel' if n == 0 else 'stable channel'
        if opts.stable_links == 'zero':
            return _zero_link(kind, i, j, note), n
        return _connect_link(mr, opts, link, note), n
    A, b, c, d, k = _unstable_first(mr, opts.tol_stab)
    up = eigenvalues(A[:k, :k])
    r = opts.pole_radius or max(2.0, 1.5 * float(np.max(np.abs(up))))
    crit = np.concatenate([eigenvalues(A), transmission_zeros(mr)])
    stab = eigenvalues(A[k:, k:])
    if avoid is not None:
        avoid = np.asarray(avoid, dtype=complex)
        stab = np.concatenate([stab, avoid[avoid.real < -opts.tol_stab]])
    plant = StateSpace(mr.A, mr.B, mr.C, mr.D)
    last_reason = ''
    for attempt in range(opts.max_retries + 1):
        admissible = []
        for policy, ctrl, obs in _candidates(up, k, r, opts, stab):
            for variant in (('full', 'shifted', 'reduced') if k < n else ('full',)):
                full = variant != 'reduced'
                shift = 0.5 * r if variant == 'shifted' else 0.0
                try:
                    comp = _observer_compensator(A, b, c, d, k, ctrl, obs, opts.tol_rank,
                                                 full, shift, stab)
                except UncontrollableError:
                    last_reason = 'slow block not observable'
                    continue
                kpoles = eigenvalues(comp.A)
                kpoles = kpoles[kpoles.real >= -opts.tol_stab]
                collide = any(np.min(np.abs(crit - p)) < opts.collision_tol * (1 + abs(p))
                              for p in kpoles) if crit.size and kpoles.size else False
                cancel = unstable_cancellation(comp, mr, opts.tol_rank, opts.tol_stab)[0]
                loop = interconnect(plant, [('P', 0, 0, comp)])
                ok = certified_stable(loop, opts.tol_stab)[0]
                if not (collide or cancel) and ok:
                    name = policy + ('' if variant == 'full' else ' ' + variant)
                    admissible.append((_tail_energy(loop.A), name, comp))
                    continue
                last_reason = ('collision' if collide else 'cancellation' if cancel
                               else 'loop not stable')
                log.debug("link %s%s retry %d (%s): %s", kind, (i, j), attempt,
                          policy, last_reason)
        if admissible:
            _, name, comp = min(admissible, key=lambda x: x[0])
            note = name + (' unstable compensator' if not is_stable(comp, 0.0)[0] else '')
            return SisoLink(kind, i, j, siso_tf(comp), comp, note), n
        r *= opts.radius_growth
    raise RetryExhaustedError(
        f"{kind}-link ({i}, {j}): no admissible design after {opts.max_retries} "
        f"retries ({last_reason})")


def absorb(agg, link, tol_stab=TOL_STAB):
    """Close a designed link into the aggregate.

    Raises ``MonotonicityViolationError`` if the number of unstable
    closed-loop eigenvalues grows.
    """
    before = crhp_count(agg.closed_loop, tol_stab)
    links = agg.links + (link,)
    wiring = [(lk.kind, lk.write, lk.read, lk.realization) for lk in links]
    new = Aggregate(agg.plant, links, interconnect(agg.plant, wiring))
    after = crhp_count(new.closed_loop, tol_stab)
    if after > before:
        raise MonotonicityViolationError(
            f"{link.kind}-link ({link.write}, {link.read}) raised the unstable "
            f"count from {before} to {after}")
    return new


def default_link_order(bs):
    """All P-links then all Q-links, row-major within each group."""
    P = [('P', i, j) for i in range(bs.nodes) for j in range(bs.ninputs) if bs.Pbin[i, j]]
    Q = [('Q', i, j) for i in range(bs.nodes) for j in range(bs.nodes) if bs.Qbin[i, j]]
    return P + Q


def run_procedure(plant, bs, options=None):
    """Design every link of ``bs`` in turn and report the outcome.

    Returns
    -------
    SynthesisReport
        ``Stabilized`` when the final loop is stable; ``NotStabilizable``
        with a fixed-mode certificate otherwise; ``Inconclusive`` only on
        numerical failure (retry exhaustion, monotonicity violation, state
        cap, or instability without a certificate).
    """
    opts = options or SynthOptions()
    if bs.nodes != plant.ninputs or bs.ninputs != plant.noutputs:
        raise DimensionMismatchError(
            f"structure is {bs.nodes}x{bs.ninputs} but plant has "
            f"{plant.ninputs} inputs and {plant.noutputs} outputs")
    order = default_link_order(bs)
    if opts.order is not None:
        wanted = [tuple(x) for x in opts.order]
        if sorted(wanted) != sorted(order):
            raise ValueError("order must be a permutation of the structure's links")
        order = wanted
    agg = Aggregate.start(plant)
    initial = crhp_count(agg.closed_loop, opts.tol_stab)
    steps, diagnostics = [], []
    report = SynthesisReport(INCONCLUSIVE, agg, bs, steps, initial, None, opts, diagnostics)
    for link in order:
        try:
            ch = channel(agg, link)
            try:
                designed, n_ch = design_link(ch, opts, link,
                                             eigenvalues(agg.closed_loop.A))
            except (RetryExhaustedError, UncontrollableError) as e:
                # leave the modes to later links; keep the signal path open
                mr = minimal_realization(ch, opts.tol_rank)
                designed, n_ch = _connect_link(mr, opts, link, 'design failed'), mr.n
                diagnostics.append(f"{e}; connecting link placed instead")
            try:
                agg = absorb(agg, designed, opts.tol_stab)
            except MonotonicityViolationError as e:
                if not designed.note.startswith(('empty', 'stable', 'design failed')):
                    raise
                # a connecting link that destabilizes hidden dynamics is left out
                designed = _zero_link(*link, 'left out')
                agg = absorb(agg, designed, opts.tol_stab)
                diagnostics.append(f"{e}; link left out")
        except (RetryExhaustedError, MonotonicityViolationError, UncontrollableError) as e:
            diagnostics.append(str(e))
            report.aggregate = agg
            return report
        if agg.closed_loop.n > opts.state_cap:
            diagnostics.append(f"aggregate order {agg.closed_loop.n} exceeds cap "
                               f"{opts.state_cap}")
            report.aggregate = agg
            return report
        st = StepRecord(link[0], link[1], link[2], n_ch,
                        crhp_count(agg.closed_loop, opts.tol_stab), designed.compensator)
        steps.append(st)
        log.info(st.log_line())
    report.aggregate = agg
    stable, bad = is_stable(agg.closed_loop, opts.tol_stab)
    if stable:
        certified, worst = certified_stable(agg.closed_loop, opts.tol_stab)
        if certified:
            report.verdict = STABILIZED
        else:
            diagnostics.append("closed loop is stable only to working precision: "
                               f"Lyapunov certificate residual {worst:.3g}")
        return report
    cert = existence_check(plant, bs, opts.tol_rank, opts.tol_stab)
    report.certificate = cert
    if cert.fixed_unstable_modes:
        report.verdict = NOT_STABILIZABLE
    else:
        diagnostics.append("closed loop unstable but no fixed mode certified; "
                           f"remaining unstable eigenvalues {np.round(bad, 6).tolist()}")
    return report


def export_controller(report):
    """Controller DSF and state-space realization of a stabilized run.

    The realization maps plant outputs ``y`` to plant inputs ``u`` with
    ``u = K y`` (positive feedback) and ``K = (I - Q)^{-1} P``.
    """
    if report.verdict != STABILIZED:
        raise NotStabilizedError(f"run ended {report.verdict}; nothing to export")
    plant = report.aggregate.plant
    m, p = plant.ninputs, plant.noutputs
    links = [lk for lk in report.aggregate.links if not lk.is_zero()]
    Q = _zeros(m, m)
    P = _zeros(m, p)
    for lk in links:
        (P if lk.kind == 'P' else Q)[lk.write][lk.read] = lk.compensator
    sizes = [lk.realization.n for lk in links]
    N = sum(sizes)
    offs = np.cumsum([0] + sizes)
    Cu = np.zeros((m, N))
    for k, lk in enumerate(links):
        Cu[lk.write, offs[k]:offs[k + 1]] += lk.realization.C[0]
    A = np.zeros((N, N))
    B = np.zeros((N, p))
    for k, lk in enumerate(links):
        rows = slice(offs[k], offs[k + 1])
        A[rows, rows] += lk.realization.A
        bk = lk.realization.B[:, 0]
        if lk.kind == 'P':
            B[rows, lk.read] += bk
        else:
            A[rows, :] += np.outer(bk, Cu[lk.read])
    return Dsf(Q, P), StateSpace(A, B, Cu, np.zeros((m, p)))
