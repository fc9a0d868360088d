"""
Real-coefficient polynomials and rational functions in the Laplace variable.

Coefficients are stored in ascending order: ``coeffs[k]`` multiplies
``s**k``. The zero polynomial has an empty coefficient array. Rational
functions keep a monic denominator; arithmetic results are passed through
:func:`reduce`, which cancels numerator/denominator roots that coincide
within a relative tolerance.
"""
import numpy as np

from .exceptions import (DegreeOverflowError, InversionOfZeroError,
                         PoleEvaluationError, ZeroPolynomialError)

__all__ = ['Polynomial', 'RationalFunction', 'poly_roots', 'reduce',
           'rf_arith', 'MAX_DEGREE', 'REDUCE_TOL']

MAX_DEGREE = 64
REDUCE_TOL = 1e-6

# a coefficient is rounding noise when it is this small relative to the
# terms that were summed to produce it
_CANCEL_RTOL = 16 * np.finfo(float).eps


def _check_degree(coeffs, max_degree):
    if len(coeffs) - 1 > max_degree:
        raise DegreeOverflowError(
            f"polynomial degree {len(coeffs) - 1} exceeds cap {max_degree}")


class Polynomial:
    """Polynomial with real coefficients in ascending-degree order.

    Parameters
    ----------
    coeffs : array_like
        ``coeffs[k]`` is the coefficient of ``s**k``. Trailing (highest
        degree) exact zeros are stripped.
    """

    __slots__ = ('_c',)

    def __init__(self, coeffs=()):
        c = np.array(coeffs, dtype=float).ravel()
        if not np.all(np.isfinite(c)):
            raise ValueError("polynomial coefficients must be finite")
        nz = np.flatnonzero(c)
        c = c[:nz[-1] + 1] if nz.size else c[:0]
        c.setflags(write=False)
        self._c = c

    @property
    def coeffs(self):
        return self._c

    @property
    def degree(self):
        """Degree; -1 for the zero polynomial."""
        return len(self._c) - 1

    def is_zero(self):
        return len(self._c) == 0

    @property
    def leading(self):
        return self._c[-1] if len(self._c) else 0.0

    @classmethod
    def from_roots(cls, roots, gain=1.0):
        """Real polynomial ``gain * prod(s - r)``; imaginary residue dropped."""
        roots = np.asarray(roots, dtype=complex).ravel()
        c = np.array([1.0 + 0j])
        for r in roots:
            c = np.concatenate(([0.0], c)) - r * np.concatenate((c, [0.0]))
        return cls(gain * c.real)

    @classmethod
    def constant(cls, value):
        return cls([value])

    @classmethod
    def s(cls):
        return cls([0.0, 1.0])

    def __call__(self, s):
        """Horner evaluation; accepts scalars or arrays of complex points."""
        s = np.asarray(s)
        out = np.zeros_like(s, dtype=np.result_type(s, float))
        for c in self._c[::-1]:
            out = out * s + c
        return out if out.ndim else out[()]

    def __neg__(self):
        return Polynomial(-self._c)

    def __add__(self, other):
        other = _as_poly(other)
        a, b = self._c, other._c
        n = max(len(a), len(b))
        aa = np.zeros(n)
        bb = np.zeros(n)
        aa[:len(a)] = a
        bb[:len(b)] = b
        out = aa + bb
        out[np.abs(out) <= _CANCEL_RTOL * (np.abs(aa) + np.abs(bb))] = 0.0
        return Polynomial(out)

    __radd__ = __add__

    def __sub__(self, other):
        return self + (-_as_poly(other))

    def __rsub__(self, other):
        return _as_poly(other) - self

    def __mul__(self, other):
        other = _as_poly(other)
        if self.is_zero() or other.is_zero():
            return Polynomial()
        out = np.convolve(self._c, other._c)
        _check_degree(out, MAX_DEGREE)
        return Polynomial(out)

    __rmul__ = __mul__

    def scale(self, factor):
        return Polynomial(self._c * factor)

    def monic(self):
        if self.is_zero():
            raise ZeroPolynomialError("zero polynomial has no monic form")
        return Polynomial(self._c / self._c[-1])

    def divmod(self, divisor):
        """Quotient and remainder of polynomial long division."""
        divisor = _as_poly(divisor)
        if divisor.is_zero():
            raise ZeroPolynomialError("division by the zero polynomial")
        if self.degree < divisor.degree:
            return Polynomial(), self
        q, r = np.polydiv(self._c[::-1], divisor._c[::-1])
        return Polynomial(q[::-1]), Polynomial(np.atleast_1d(r)[::-1])

    def roots(self):
        return poly_roots(self)

    def trim(self, rtol):
        """Drop leading coefficients smaller than ``rtol * max|coeff|``."""
        if self.is_zero():
            return self
        c = self._c.copy()
        thresh = rtol * np.max(np.abs(c))
        k = len(c)
        while k and abs(c[k - 1]) <= thresh:
            k -= 1
        return Polynomial(c[:k])

    def allclose(self, other, rtol=1e-9, atol=0.0):
        other = _as_poly(other)
        n = max(len(self._c), len(other._c))
        a = np.zeros(n)
        b = np.zeros(n)
        a[:len(self._c)] = self._c
        b[:len(other._c)] = other._c
        scale = max(np.max(np.abs(a), initial=0.0), np.max(np.abs(b), initial=0.0))
        return bool(np.all(np.abs(a - b) <= atol + rtol * scale))

    def __eq__(self, other):
        if not isinstance(other, (Polynomial, int, float)):
            return NotImplemented
        other = _as_poly(other)
        return np.array_equal(self._c, other._c)

    def __hash__(self):
        return hash(self._c.tobytes())

    def __repr__(self):
        return f"Polynomial({self._c.tolist()})"

    def __str__(self):
        return _poly_str(self._c)


def _as_poly(x):
    if isinstance(x, Polynomial):
        return x
    if np.isscalar(x):
        return Polynomial([x])
    raise TypeError(f"cannot interpret {type(x).__name__} as a polynomial")


def _fmt(c):
    return f"{c:.6g}"


def _poly_str(c):
    if len(c) == 0:
        return "0"
    terms = []
    for k in range(len(c) - 1, -1, -1):
        ck = c[k]
        if ck == 0 and len(c) > 1:
            continue
        if k == 0:
            body = _fmt(abs(ck))
        else:
            mag = '' if abs(ck) == 1 else _fmt(abs(ck)) + ' '
            body = mag + ('s' if k == 1 else f's^{k}')
        sign = '-' if ck < 0 else '+'
        terms.append((sign, body))
    first_sign, first = terms[0]
    out = ('-' if first_sign == '-' else '') + first
    for sign, body in terms[1:]:
        out += f' {sign} {body}'
    return out


def poly_roots(p):
    """Roots of a nonzero polynomial, with multiplicity.

    Computed as eigenvalues of the companion matrix of the monic
    normalisation. Roots at the origin are split off exactly first.
    """
    p = _as_poly(p)
    if p.is_zero():
        raise ZeroPolynomialError("the zero polynomial has no finite root set")
    c = p.coeffs
    nzero = int(np.flatnonzero(c)[0])
    c = c[nzero:]
    n = len(c) - 1
    if n == 0:
        return np.zeros(nzero, dtype=complex)
    comp = np.zeros((n, n))
    comp[1:, :-1] = np.eye(n - 1)
    comp[:, -1] = -c[:-1] / c[-1]
    r = np.linalg.eigvals(comp).astype(complex)
    return np.concatenate((np.zeros(nzero, dtype=complex), r))


def _match_roots(zs, ps, tol):
    """Greedy nearest-pair matching; returns index pairs (i_zero, i_pole)."""
    if len(zs) == 0 or len(ps) == 0:
        return []
    d = np.abs(zs[:, None] - ps[None, :])
    thresh = tol * (1.0 + np.abs(ps))[None, :]
    cand = np.argwhere(d < thresh)
    if cand.size == 0:
        return []
    order = np.argsort(d[cand[:, 0], cand[:, 1]], kind='stable')
    used_z, used_p, pairs = set(), set(), []
    for i, j in cand[order]:
        if i in used_z or j in used_p:
            continue
        used_z.add(i)
        used_p.add(j)
        pairs.append((int(i), int(j)))
    return pairs


class RationalFunction:
    """Quotient ``num(s) / den(s)`` of real polynomials, denominator monic.

    The constructor only normalises (monic denominator, zero numerator
    mapped to ``0/1``); it does not cancel common factors. Use
    :func:`reduce` or the arithmetic operators, which reduce their results.
    """

    __slots__ = ('num', 'den')

    def __init__(self, num, den=1.0):
        num = _as_poly(num) if not isinstance(num, (list, tuple, np.ndarray)) else Polynomial(num)
        den = _as_poly(den) if not isinstance(den, (list, tuple, np.ndarray)) else Polynomial(den)
        if den.is_zero():
            raise InversionOfZeroError("rational function with zero denominator")
        if num.is_zero():
            den = Polynomial([1.0])
        else:
            lead = den.leading
            num = num.scale(1.0 / lead)
            den = den.scale(1.0 / lead)
        self.num = num
        self.den = den

    @classmethod
    def zero(cls):
        return cls(Polynomial(), Polynomial([1.0]))

    @classmethod
    def one(cls):
        return cls(Polynomial([1.0]), Polynomial([1.0]))

    @classmethod
    def from_zpk(cls, zeros, poles, gain=1.0):
        return cls(Polynomial.from_roots(zeros, gain), Polynomial.from_roots(poles))

    def is_zero(self):
        return self.num.is_zero()

    @property
    def relative_degree(self):
        if self.is_zero():
            return np.inf
        return self.den.degree - self.num.degree

    def is_strictly_proper(self):
        return self.relative_degree > 0

    def is_proper(self):
        return self.relative_degree >= 0

    def properness(self):
        """One of ``'strictly proper'``, ``'proper'``, ``'improper'``."""
        rd = self.relative_degree
        if rd > 0:
            return 'strictly proper'
        return 'proper' if rd == 0 else 'improper'

    def poles(self):
        return poly_roots(self.den) if self.den.degree > 0 else np.zeros(0, complex)

    def zeros(self):
        if self.is_zero() or self.num.degree == 0:
            return np.zeros(0, complex)
        return poly_roots(self.num)

    def __call__(self, s):
        d = self.den(s)
        if np.any(np.abs(d) < 1e-300):
            raise PoleEvaluationError(f"evaluation at a pole of {self}")
        return self.num(s) / d

    def reduce(self, tol=REDUCE_TOL):
        return reduce(self, tol)

    def __neg__(self):
        return RationalFunction(-self.num, self.den)

    def __add__(self, other):
        return rf_arith(self, _as_rf(other), 'add')

    __radd__ = __add__

    def __sub__(self, other):
        return rf_arith(self, rf_arith(_as_rf(other), None, 'neg'), 'add')

    def __rsub__(self, other):
        return _as_rf(other) - self

    def __mul__(self, other):
        return rf_arith(self, _as_rf(other), 'mul')

    __rmul__ = __mul__

    def inv(self):
        return rf_arith(self, None, 'inv')

    def __truediv__(self, other):
        return self * _as_rf(other).inv()

    def __rtruediv__(self, other):
        return _as_rf(other) * self.inv()

    def allclose(self, other, rtol=1e-9):
        """Coefficient-wise comparison after both are normalised."""
        other = _as_rf(other)
        return self.num.allclose(other.num, rtol) and self.den.allclose(other.den, rtol)

    def __repr__(self):
        return f"RationalFunction({self.num.coeffs.tolist()}, {self.den.coeffs.tolist()})"

    def __str__(self):
        if self.is_zero():
            return "0"
        if self.den.degree == 0:
            return f"({self.num})"
        return f"({self.num})/({self.den})"


def _as_rf(x):
    if isinstance(x, RationalFunction):
        return x
    if isinstance(x, Polynomial):
        return RationalFunction(x)
    if np.isscalar(x):
        return RationalFunction(Polynomial([x]))
    raise TypeError(f"cannot interpret {type(x).__name__} as a rational function")


def rf_arith(a, b, op, tol=REDUCE_TOL):
    """Apply ``op`` in {'add', 'mul', 'inv', 'neg'} and reduce the result.

    ``b`` is ignored for the unary operations.
    """
    a = _as_rf(a)
    if op == 'neg':
        return RationalFunction(-a.num, a.den)
    if op == 'inv':
        if a.is_zero():
            raise InversionOfZeroError("inverse of the zero rational function")
        return reduce(RationalFunction(a.den, a.num), tol)
    b = _as_rf(b)
    if op == 'add':
        if a.is_zero():
            return b
        if b.is_zero():
            return a
        if a.den == b.den:
            return reduce(RationalFunction(a.num + b.num, a.den), tol)
        return reduce(RationalFunction(a.num * b.den + b.num * a.den,
                                       a.den * b.den), tol)
    if op == 'mul':
        if a.is_zero() or b.is_zero():
            return RationalFunction.zero()
        return reduce(RationalFunction(a.num * b.num, a.den * b.den), tol)
    raise ValueError(f"unknown operation {op!r}")


def reduce(r, tol=REDUCE_TOL):
    """Cancel numerator/denominator roots closer than ``tol * (1 + |root|)``.

    The cancelled factor is divided out of both polynomials. Idempotent:
    a reduced function has no matched pair left and is returned unchanged.
    """
    r = _as_rf(r)
    if r.is_zero():
        return RationalFunction.zero()
    num, den = r.num, r.den
    if num.degree < 1 or den.degree < 1:
        return RationalFunction(num, den)
    zs, ps = poly_roots(num), poly_roots(den)
    pairs = _match_roots(zs, ps, tol)
    if not pairs:
        return RationalFunction(num, den)
    zi = [i for i, _ in pairs]
    pj = [j for _, j in pairs]
    common = Polynomial.from_roots(0.5 * (zs[zi] + ps[pj]))
    qn, rn = num.divmod(common)
    qd, rd = den.divmod(common)
    bad_n = np.linalg.norm(rn.coeffs) > 1e-6 * np.linalg.norm(num.coeffs)
    bad_d = np.linalg.norm(rd.coeffs) > 1e-6 * np.linalg.norm(den.coeffs)
    if bad_n or bad_d:
        # long division unreliable for this factor; rebuild from survivors
        keep_z = np.delete(zs, zi)
        keep_p = np.delete(ps, pj)
        qn = Polynomial.from_roots(keep_z, num.leading)
        qd = Polynomial.from_roots(keep_p, den.leading)
    return RationalFunction(qn, qd)
