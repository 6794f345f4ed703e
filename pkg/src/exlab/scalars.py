"""Exact scalars and univariate rational functions.

Two scalar fields are used throughout the package:

* Rational: python ``fractions.Fraction``, always stored reduced.
* BigFloat: ``mpmath`` reals at a working precision of at least 30
  decimal digits (default 50), controlled by :func:`precision`.

Model parameters that conceptually carry half-integer powers (t^(1/2)
and friends) are passed around as independent rational inputs, so no
square root ever enters an exact code path.
"""

from __future__ import annotations

import os
from contextlib import contextmanager
from fractions import Fraction
from typing import Iterable, Sequence, Union

import mpmath
from mpmath import mp

from exlab.errors import PoleAtPoint

Rational = Fraction
Scalar = Union[Fraction, mpmath.mpf, int]

DEFAULT_DIGITS = 50
MIN_DIGITS = 30


def env_digits() -> int | None:
    """Working digits requested through EXLAB_PRECISION, if any."""
    raw = os.environ.get("EXLAB_PRECISION")
    if raw is None:
        return None
    digits = int(raw)
    if digits < MIN_DIGITS:
        raise ValueError(
            "EXLAB_PRECISION=%d below the minimum of %d digits" % (digits, MIN_DIGITS)
        )
    return digits


@contextmanager
def precision(digits: int | None = None):
    """Context manager pinning the BigFloat working precision.

    Explicit argument wins, then EXLAB_PRECISION, then the default of 50.
    """
    if digits is None:
        digits = env_digits() or DEFAULT_DIGITS
    if digits < MIN_DIGITS:
        raise ValueError("BigFloat precision below %d digits" % MIN_DIGITS)
    old = mp.dps
    mp.dps = digits
    try:
        yield mp
    finally:
        mp.dps = old


def to_mpf(x) -> mpmath.mpf:
    """Convert a Scalar to mpf at the current working precision."""
    if isinstance(x, Fraction):
        return mp.mpf(x.numerator) / x.denominator
    return mp.mpf(x)


def is_exact(x) -> bool:
    return isinstance(x, (Fraction, int))


# ----------------------------------------------------------------------------
# dense univariate polynomials over Fraction, ascending coefficients
# ----------------------------------------------------------------------------

def poly_trim(c: Sequence[Fraction]) -> tuple:
    c = list(c)
    while c and c[-1] == 0:
        c.pop()
    return tuple(c)


def poly_add(a, b):
    n = max(len(a), len(b))
    out = []
    for i in range(n):
        x = a[i] if i < len(a) else 0
        y = b[i] if i < len(b) else 0
        out.append(x + y)
    return poly_trim(out)


def poly_neg(a):
    return tuple(-x for x in a)


def poly_mul(a, b):
    if not a or not b:
        return ()
    out = [Fraction(0)] * (len(a) + len(b) - 1)
    for i, x in enumerate(a):
        if x == 0:
            continue
        for j, y in enumerate(b):
            out[i + j] += x * y
    return poly_trim(out)


def poly_scale(a, s):
    if s == 0:
        return ()
    return tuple(x * s for x in a)


def poly_eval(a, z):
    out = 0
    for c in reversed(a):
        out = out * z + c
    return out


def poly_derivative(a):
    return poly_trim([i * a[i] for i in range(1, len(a))])


def _poly_content(a: Iterable[Fraction]) -> Fraction:
    """Positive rational content gcd(numerators)/lcm(denominators)."""
    from math import gcd, lcm

    num = 0
    den = 1
    for c in a:
        f = Fraction(c)
        num = gcd(num, abs(f.numerator))
        den = lcm(den, f.denominator)
    if num == 0:
        return Fraction(1)
    return Fraction(num, den)


class RationalFunction:
    """Univariate rational function with Fraction coefficients.

    Stored as numerator/denominator polynomial tuples (ascending powers),
    jointly reduced by content with a positive leading denominator
    coefficient. No polynomial gcd is taken; equality compares by cross
    multiplication, which is exact regardless.
    """

    __slots__ = ("num", "den")

    def __init__(self, num, den=(Fraction(1),)):
        num = poly_trim([Fraction(c) for c in num])
        den = poly_trim([Fraction(c) for c in den])
        if not den:
            raise ZeroDivisionError("zero denominator polynomial")
        if not num:
            self.num = ()
            self.den = (Fraction(1),)
            return
        scale = _poly_content(list(num) + list(den))
        if den[-1] < 0:
            scale = -scale
        self.num = tuple(c / scale for c in num)
        self.den = tuple(c / scale for c in den)

    # -- constructors ------------------------------------------------------

    @classmethod
    def const(cls, c) -> "RationalFunction":
        return cls((Fraction(c),))

    @classmethod
    def x(cls) -> "RationalFunction":
        """The identity function z -> z."""
        return cls((Fraction(0), Fraction(1)))

    @classmethod
    def from_roots(cls, roots, lead=1) -> "RationalFunction":
        p = (Fraction(lead),)
        for r in roots:
            p = poly_mul(p, (-Fraction(r), Fraction(1)))
        return cls(p)

    # -- predicates --------------------------------------------------------

    def is_zero(self) -> bool:
        return not self.num

    def is_const(self) -> bool:
        return len(self.num) <= 1 and len(self.den) == 1

    def const_value(self) -> Fraction:
        if not self.is_const():
            raise ValueError("not a constant")
        if not self.num:
            return Fraction(0)
        return self.num[0] / self.den[0]

    # -- arithmetic --------------------------------------------------------

    def _coerce(self, other):
        if isinstance(other, RationalFunction):
            return other
        if isinstance(other, (int, Fraction)):
            return RationalFunction.const(other)
        return NotImplemented

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        num = poly_add(poly_mul(self.num, other.den), poly_mul(other.num, self.den))
        return RationalFunction(num, poly_mul(self.den, other.den))

    __radd__ = __add__

    def __neg__(self):
        return RationalFunction(poly_neg(self.num), self.den)

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return RationalFunction(
            poly_mul(self.num, other.num), poly_mul(self.den, other.den)
        )

    __rmul__ = __mul__

    def __truediv__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        if other.is_zero():
            raise ZeroDivisionError("division by zero rational function")
        return RationalFunction(
            poly_mul(self.num, other.den), poly_mul(self.den, other.num)
        )

    def __rtruediv__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return other / self

    def __pow__(self, n: int):
        if n < 0:
            return (RationalFunction.const(1) / self) ** (-n)
        out = RationalFunction.const(1)
        base = self
        while n:
            if n & 1:
                out = out * base
            base = base * base
            n >>= 1
        return out

    def __eq__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return poly_mul(self.num, other.den) == poly_mul(other.num, self.den)

    # __eq__ compares by cross multiplication, so structurally different
    # (num, den) pairs can be equal; no consistent cheap hash exists.
    __hash__ = None

    def __repr__(self):
        return "RationalFunction(num=%r, den=%r)" % (self.num, self.den)

    # -- calculus ----------------------------------------------------------

    def eval(self, z0):
        """Exact evaluation; raises PoleAtPoint on a denominator zero."""
        d = poly_eval(self.den, z0)
        if d == 0:
            raise PoleAtPoint("denominator vanishes at %r" % (z0,))
        return poly_eval(self.num, z0) / d

    def __call__(self, z0):
        return self.eval(z0)

    def derivative(self) -> "RationalFunction":
        """Quotient-rule derivative, exact."""
        num = poly_add(
            poly_mul(poly_derivative(self.num), self.den),
            poly_neg(poly_mul(self.num, poly_derivative(self.den))),
        )
        return RationalFunction(num, poly_mul(self.den, self.den))

    def subs_scaled(self, a: Fraction, invert: bool = False) -> "RationalFunction":
        """z -> a*z, or z -> a/z when invert is set (exact)."""
        a = Fraction(a)
        if not invert:
            num = tuple(c * a**i for i, c in enumerate(self.num))
            den = tuple(c * a**i for i, c in enumerate(self.den))
            return RationalFunction(num, den)
        # z -> a/z: clear the largest power
        n = max(len(self.num), len(self.den)) - 1
        num = [Fraction(0)] * (n + 1)
        den = [Fraction(0)] * (n + 1)
        for i, c in enumerate(self.num):
            num[n - i] += c * a**i
        for i, c in enumerate(self.den):
            den[n - i] += c * a**i
        return RationalFunction(num, den)

    def subs_affine(self, a: Fraction, c: Fraction) -> "RationalFunction":
        """z -> a*z + c (exact); used by the additive-convention checks."""
        lin = (Fraction(c), Fraction(a))

        def compose(p):
            out = ()
            for coeff in reversed(p):
                out = poly_add(poly_mul(out, lin), (coeff,))
            return out

        return RationalFunction(compose(self.num), compose(self.den))


def rf_derivative_at(f: RationalFunction, z0) -> Fraction:
    """Exact derivative value of f at z0 by the quotient rule.

    Raises PoleAtPoint when z0 is a zero of the stored denominator.
    """
    d = poly_eval(f.den, z0)
    if d == 0:
        raise PoleAtPoint("derivative requested at a pole: %r" % (z0,))
    n = poly_eval(f.num, z0)
    dn = poly_eval(poly_derivative(f.num), z0)
    dd = poly_eval(poly_derivative(f.den), z0)
    return (dn * d - n * dd) / (d * d)


# ----------------------------------------------------------------------------
# matrices over a scalar-like ring (lists of lists); tiny helpers shared by
# the catalog and integrability checks
# ----------------------------------------------------------------------------

def mat_map(f, A):
    return [[f(x) for x in row] for row in A]


def mat_add(A, B):
    return [[A[i][j] + B[i][j] for j in range(len(A[0]))] for i in range(len(A))]


def mat_sub(A, B):
    return [[A[i][j] - B[i][j] for j in range(len(A[0]))] for i in range(len(A))]


def mat_mul(A, B):
    n, k, m = len(A), len(B), len(B[0])
    out = [[None] * m for _ in range(n)]
    for i in range(n):
        for j in range(m):
            acc = A[i][0] * B[0][j]
            for l in range(1, k):
                acc = acc + A[i][l] * B[l][j]
            out[i][j] = acc
    return out
def mat_scale(A, s):
    return [[s * x for x in row] for row in A]


def mat_kron(A, B):
    na, ma = len(A), len(A[0])
    nb, mb = len(B), len(B[0])
    out = [[None] * (ma * mb) for _ in range(na * nb)]
    for i in range(na):
        for j in range(ma):
            for k in range(nb):
                for l in range(mb):
                    out[i * nb + k][j * mb + l] = A[i][j] * B[k][l]
    return out


def mat_eye(n, one=Fraction(1), zero=Fraction(0)):
    return [[one if i == j else zero for j in range(n)] for i in range(n)]


def mat_equal_zero(A) -> bool:
    for row in A:
        for x in row:
            if isinstance(x, RationalFunction):
                if not x.is_zero():
                    return False
            elif x != 0:
                return False
    return True
