"""Sparse multivariate Laurent polynomials.

Terms are stored as a dict mapping integer exponent tuples to nonzero
coefficients (Fraction for exact work, mpf for BigFloat work). The
basic substitutions are the signed-permutation generators acting on the
variables: neighbour swaps, z_1 -> s/z_1 and z_L -> 1/z_L.
"""

from __future__ import annotations

from fractions import Fraction

from mpmath import mpf

from exlab.errors import NonPolynomialResult


def _is_zero_coeff(c) -> bool:
    return c == 0


class LaurentPoly:
    __slots__ = ("nvars", "terms")

    def __init__(self, nvars: int, terms=None):
        self.nvars = nvars
        clean = {}
        if terms:
            for e, c in terms.items():
                if len(e) != nvars:
                    raise ValueError("exponent tuple of wrong length")
                if not _is_zero_coeff(c):
                    key = tuple(int(x) for x in e)
                    if key in clean:
                        c = clean[key] + c
                        if _is_zero_coeff(c):
                            del clean[key]
                            continue
                    clean[key] = c
        self.terms = clean

    # -- constructors ------------------------------------------------------

    @classmethod
    def zero(cls, nvars):
        return cls(nvars, {})

    @classmethod
    def const(cls, nvars, c):
        return cls(nvars, {(0,) * nvars: c})

    @classmethod
    def var(cls, nvars, i, power=1, coeff=Fraction(1)):
        """coeff * z_i^power with 0-based variable index i."""
        e = [0] * nvars
        e[i] = power
        return cls(nvars, {tuple(e): coeff})

    @classmethod
    def monomial(cls, exponents, coeff=Fraction(1)):
        return cls(len(exponents), {tuple(exponents): coeff})

    # -- predicates and views ----------------------------------------------

    def is_zero(self) -> bool:
        return not self.terms

    def degree_range(self, i):
        """(min, max) exponent of variable i, or (0, 0) for the zero poly."""
        if not self.terms:
            return (0, 0)
        exps = [e[i] for e in self.terms]
        return (min(exps), max(exps))

    def max_abs(self):
        if not self.terms:
            return 0
        return max(abs(c) for c in self.terms.values())

    def __len__(self):
        return len(self.terms)

    def __repr__(self):
        if not self.terms:
            return "LaurentPoly(0)"
        bits = []
        for e in sorted(self.terms):
            bits.append("%s*z^%s" % (self.terms[e], list(e)))
        return "LaurentPoly(" + " + ".join(bits) + ")"

    # -- arithmetic --------------------------------------------------------

    def _coerce(self, other):
        if isinstance(other, LaurentPoly):
            return other
        if isinstance(other, (int, Fraction, float, mpf)):
            return LaurentPoly.const(self.nvars, other)
        return NotImplemented

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        out = dict(self.terms)
        for e, c in other.terms.items():
            if e in out:
                s = out[e] + c
                if _is_zero_coeff(s):
                    del out[e]
                else:
                    out[e] = s
            else:
                out[e] = c
        return LaurentPoly(self.nvars, out)

    __radd__ = __add__

    def __neg__(self):
        return LaurentPoly(self.nvars, {e: -c for e, c in self.terms.items()})

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, (int, Fraction, float, mpf)):
            if _is_zero_coeff(other):
                return LaurentPoly.zero(self.nvars)
            return LaurentPoly(
                self.nvars, {e: c * other for e, c in self.terms.items()}
            )
        if not isinstance(other, LaurentPoly):
            return NotImplemented
        out = {}
        for e1, c1 in self.terms.items():
            for e2, c2 in other.terms.items():
                e = tuple(a + b for a, b in zip(e1, e2))
                c = c1 * c2
                if e in out:
                    s = out[e] + c
                    if _is_zero_coeff(s):
                        del out[e]
                    else:
                        out[e] = s
                elif not _is_zero_coeff(c):
                    out[e] = c
        return LaurentPoly(self.nvars, out)

    __rmul__ = __mul__

    def __eq__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return self.terms == other.terms

    def __hash__(self):
        return hash(frozenset(self.terms.items()))

    # -- substitutions -----------------------------------------------------

    def swap(self, i, j):
        """Exchange variables i and j (0-based)."""
        out = {}
        for e, c in self.terms.items():
            l = list(e)
            l[i], l[j] = l[j], l[i]
            out[tuple(l)] = c
        return LaurentPoly(self.nvars, out)

    def invert_var(self, i):
        """z_i -> 1/z_i."""
        out = {}
        for e, c in self.terms.items():
            l = list(e)
            l[i] = -l[i]
            out[tuple(l)] = c
        return LaurentPoly(self.nvars, out)

    def scale_var(self, i, a):
        """z_i -> a*z_i (a a nonzero scalar)."""
        out = {}
        for e, c in self.terms.items():
            out[e] = c * a ** e[i] if e[i] >= 0 else c * (1 / a) ** (-e[i])
        return LaurentPoly(self.nvars, out)

    def subs_var(self, i, value):
        """Substitute a scalar for z_i, returning a poly in the same ring
        (variable i no longer appears)."""
        out = {}
        for e, c in self.terms.items():
            n = e[i]
            f = value**n if n >= 0 else (1 / value) ** (-n)
            l = list(e)
            l[i] = 0
            key = tuple(l)
            out[key] = out.get(key, 0) + c * f
        return LaurentPoly(self.nvars, out)

    def eval(self, point):
        """Full evaluation at a point (sequence of nonzero scalars)."""
        total = 0
        for e, c in self.terms.items():
            v = c
            for i, n in enumerate(e):
                if n == 0:
                    continue
                v = v * point[i] ** n if n > 0 else v / point[i] ** (-n)
            total = total + v
        return total

    # -- exact division ----------------------------------------------------

    def _collect(self, i):
        """Group terms by the power of variable i; coefficients keep a zero
        in slot i."""
        groups = {}
        for e, c in self.terms.items():
            n = e[i]
            l = list(e)
            l[i] = 0
            groups.setdefault(n, {})[tuple(l)] = c
        return {
            n: LaurentPoly(self.nvars, terms) for n, terms in groups.items()
        }

    def div_linear(self, i, b, tol=None):
        """Exact division by (z_i - b) where b has no z_i dependence.

        b may be a scalar or a LaurentPoly independent of variable i.
        Raises NonPolynomialResult if the remainder is nonzero (beyond
        tol for float coefficients).
        """
        if self.is_zero():
            return self
        if not isinstance(b, LaurentPoly):
            b = LaurentPoly.const(self.nvars, b)
        if b.degree_range(i) != (0, 0):
            raise ValueError("divisor shift depends on the divided variable")
        groups = self._collect(i)
        nmin = min(groups)
        nmax = max(groups)
        zero = LaurentPoly.zero(self.nvars)
        c = {n: groups.get(n, zero) for n in range(nmin, nmax + 1)}
        quot = {}
        carry = zero
        for n in range(nmax, nmin, -1):
            q = c[n] + carry
            quot[n - 1] = q
            carry = q * b
        rem = c[nmin] + carry
        self._require_small(rem, tol)
        out = LaurentPoly.zero(self.nvars)
        for n, poly in quot.items():
            out = out + poly * LaurentPoly.var(self.nvars, i, n)
        return out

    def div_quad_minus_const(self, i, c0, tol=None):
        """Exact division by (z_i^2 - c0) with scalar c0."""
        if self.is_zero():
            return self
        groups = self._collect(i)
        nmin = min(groups)
        nmax = max(groups)
        zero = LaurentPoly.zero(self.nvars)
        c = {n: groups.get(n, zero) for n in range(nmin, nmax + 1)}
        quot = {}
        for n in range(nmax, nmin + 1, -1):
            q = c[n]
            quot[n - 2] = q
            c[n - 2] = c.get(n - 2, zero) + q * c0
        # the two lowest rows were never used as division leads; they are
        # the remainder
        self._require_small(c.get(nmin, zero), tol)
        if nmin + 1 <= nmax:
            self._require_small(c.get(nmin + 1, zero), tol)
        out = LaurentPoly.zero(self.nvars)
        for n, poly in quot.items():
            out = out + poly * LaurentPoly.var(self.nvars, i, n)
        return out

    def _require_small(self, rem, tol):
        if rem.is_zero():
            return
        worst = rem.max_abs()
        if tol is None:
            raise NonPolynomialResult(
                "exact division left a remainder of size %s" % worst
            )
        scale = self.max_abs()
        if worst > tol * max(1, scale):
            raise NonPolynomialResult(
                "division remainder %s exceeds tolerance %s" % (worst, tol)
            )

    def map_coeffs(self, f):
        return LaurentPoly(self.nvars, {e: f(c) for e, c in self.terms.items()})


def laurent_apply_si(P: LaurentPoly, i: int, mode: str | None = None, s=None):
    """Apply a signed-permutation generator to the variables of P.

    Operator index i is 1-based to match the generator names: i in
    1..L-1 swaps z_i and z_{i+1} (mode "swap"), i=0 sends z_1 -> s/z_1
    (mode "s0", needs s), i=L sends z_L -> 1/z_L (mode "sL"). When mode
    is omitted it is inferred from i.
    """
    L = P.nvars
    if mode is None:
        mode = "s0" if i == 0 else ("sL" if i == L else "swap")
    if mode == "swap":
        if not 1 <= i <= L - 1:
            raise ValueError("swap index out of range")
        return P.swap(i - 1, i)
    if mode == "s0":
        if s is None:
            raise ValueError("mode s0 requires the parameter s")
        # substitute z_1 -> s/z_1: scale first, then invert
        return P.scale_var(0, s).invert_var(0)
    if mode == "sL":
        return P.invert_var(L - 1)
    raise ValueError("unknown mode %r" % mode)
