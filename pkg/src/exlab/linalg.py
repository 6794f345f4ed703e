"""Exact and arbitrary-precision linear algebra kernels.

Three layers:

* exact rational kernels of sparse/dense matrices (fraction-free Bareiss
  for small systems, Markowitz-pivoted sparse elimination over gmpy2
  rationals for larger ones),
* exact integer characteristic polynomials through multi-modular
  Hessenberg reduction with a Hadamard-bound certified CRT lift,
* dense BigFloat spectra (mpmath) and shifted power iteration for the
  extremal eigenvalue of sparse generators.
"""

from __future__ import annotations

from fractions import Fraction
from math import gcd, isqrt, lcm

import gmpy2
import mpmath
from gmpy2 import mpq
from mpmath import mp

from exlab.errors import DegenerateKernel, NoConvergence

# ----------------------------------------------------------------------------
# dense fraction-free elimination (Bareiss)
# ----------------------------------------------------------------------------

def _clear_denominators(rows):
    """Scale each row to integers (row scaling preserves the kernel)."""
    out = []
    for row in rows:
        mult = 1
        for x in row:
            mult = lcm(mult, Fraction(x).denominator)
        out.append([int(Fraction(x) * mult) for x in row])
    return out


def bareiss_kernel(rows, n):
    """Kernel of an n-column rational matrix via fraction-free elimination.

    Returns (rank, basis) where basis is a list of Fraction vectors.
    """
    a = _clear_denominators(rows)
    m = len(a)
    piv_cols = []
    prev = 1
    r = 0
    for c in range(n):
        piv = None
        for i in range(r, m):
            if a[i][c] != 0:
                piv = i
                break
        if piv is None:
            continue
        a[r], a[piv] = a[piv], a[r]
        for i in range(r + 1, m):
            for j in range(c + 1, n):
                num = a[r][c] * a[i][j] - a[i][c] * a[r][j]
                q, rem = divmod(num, prev)
                assert rem == 0, "fraction-free invariant broken"
                a[i][j] = q
            a[i][c] = 0
        prev = a[r][c]
        piv_cols.append(c)
        r += 1
        if r == m:
            break
    rank = r
    free_cols = [c for c in range(n) if c not in piv_cols]
    basis = []
    for fc in free_cols:
        x = [Fraction(0)] * n
        x[fc] = Fraction(1)
        for k in range(rank - 1, -1, -1):
            c = piv_cols[k]
            s = Fraction(0)
            for j in range(c + 1, n):
                if a[k][j] != 0 and x[j] != 0:
                    s += Fraction(a[k][j]) * x[j]
            x[c] = -s / a[k][c]
        basis.append(x)
    return rank, basis


# ----------------------------------------------------------------------------
# sparse exact elimination (min-count pivoting, gmpy2 rationals)
# ----------------------------------------------------------------------------

def sparse_kernel_vector(entries, n):
    """One-dimensional kernel of a sparse n x n rational matrix.

    entries maps (row, col) -> value. Raises DegenerateKernel unless the
    kernel has dimension exactly 1. Returns an unnormalized Fraction
    vector.
    """
    rows = [dict() for _ in range(n)]
    for (i, j), v in entries.items():
        if v == 0:
            continue
        f = Fraction(v)
        rows[i][j] = mpq(f.numerator, f.denominator)
    col_rows = [set() for _ in range(n)]
    for i in range(n):
        for j in rows[i]:
            col_rows[j].add(i)
    row_active = [True] * n
    col_active = [True] * n
    piv_seq = []

    for _step in range(n):
        # cheapest active column, then its shortest active row
        best_col, best_count = -1, None
        for j in range(n):
            if not col_active[j]:
                continue
            cnt = len(col_rows[j])
            if cnt == 0:
                continue
            if best_count is None or cnt < best_count:
                best_col, best_count = j, cnt
                if cnt == 1:
                    break
        if best_count is None:
            break
        pc = best_col
        pr = min(col_rows[pc], key=lambda i: len(rows[i]))
        pivval = rows[pr][pc]
        # eliminate pc from the other active rows
        for i in list(col_rows[pc]):
            if i == pr:
                continue
            ri = rows[i]
            f = ri[pc] / pivval
            for j, v in rows[pr].items():
                if j == pc:
                    continue
                if j in ri:
                    nv = ri[j] - f * v
                    if nv == 0:
                        del ri[j]
                        col_rows[j].discard(i)
                    else:
                        ri[j] = nv
                else:
                    ri[j] = -f * v
                    col_rows[j].add(i)
            del ri[pc]
            col_rows[pc].discard(i)
        # retire pivot row and column
        row_active[pr] = False
        col_active[pc] = False
        for j in rows[pr]:
            col_rows[j].discard(pr)
        col_rows[pc] = set()
        piv_seq.append((pr, pc))

    rank = len(piv_seq)
    if n - rank != 1:
        raise DegenerateKernel(
            "kernel dimension %d (rank %d of %d)" % (n - rank, rank, n)
        )
    free = next(j for j in range(n) if col_active[j])
    x = [mpq(0)] * n
    x[free] = mpq(1)
    for pr, pc in reversed(piv_seq):
        s = mpq(0)
        for j, v in rows[pr].items():
            if j != pc:
                s += v * x[j]
        x[pc] = -s / rows[pr][pc]
    return [Fraction(int(v.numerator), int(v.denominator)) for v in x]


# ----------------------------------------------------------------------------
# multi-modular sparse kernel (mod-p elimination, CRT, rational lift)
# ----------------------------------------------------------------------------

def _kernel_mod_p(int_rows, n, p, reserve=None):
    """Kernel vector of an integer matrix modulo p, scaled to 1 at the free
    column. Pivoting never touches column `reserve`, so later primes are
    forced onto the free column the first prime picked. Returns
    (rank, free_col, residues); residues is None when the rank mod p is
    not n - 1."""
    rows = []
    for src in int_rows:
        rd = {}
        for j, v in src.items():
            m = v % p
            if m:
                rd[j] = m
        rows.append(rd)
    col_rows = [set() for _ in range(n)]
    for i in range(n):
        for j in rows[i]:
            col_rows[j].add(i)
    col_active = [True] * n
    if reserve is not None:
        col_active[reserve] = False
    piv_seq = []
    for _step in range(n):
        best_col, best_count = -1, None
        for j in range(n):
            if not col_active[j]:
                continue
            cnt = len(col_rows[j])
            if cnt == 0:
                continue
            if best_count is None or cnt < best_count:
                best_col, best_count = j, cnt
                if cnt == 1:
                    break
        if best_count is None:
            break
        pc = best_col
        pr = min(col_rows[pc], key=lambda i: len(rows[i]))
        inv = pow(rows[pr][pc], -1, p)
        for i in list(col_rows[pc]):
            if i == pr:
                continue
            ri = rows[i]
            f = (ri[pc] * inv) % p
            for j, v in rows[pr].items():
                if j == pc:
                    continue
                if j in ri:
                    nv = (ri[j] - f * v) % p
                    if nv == 0:
                        del ri[j]
                        col_rows[j].discard(i)
                    else:
                        ri[j] = nv
                else:
                    ri[j] = (-f * v) % p
                    col_rows[j].add(i)
            del ri[pc]
            col_rows[pc].discard(i)
        col_active[pc] = False
        for j in rows[pr]:
            col_rows[j].discard(pr)
        col_rows[pc] = set()
        piv_seq.append((pr, pc))
    rank = len(piv_seq)
    if rank != n - 1:
        return rank, None, None
    if reserve is not None:
        # rank n-1 among the n-1 allowed columns: the reserve stayed free
        free = reserve
    else:
        free = next(j for j in range(n) if col_active[j])
    x = [0] * n
    x[free] = 1
    for pr, pc in reversed(piv_seq):
        s = 0
        for j, v in rows[pr].items():
            if j != pc:
                s += v * x[j]
        x[pc] = (-s * pow(rows[pr][pc], -1, p)) % p
    return rank, free, x


def modular_kernel_vector(entries, n):
    """One-dimensional kernel of a sparse n x n rational matrix by
    elimination modulo word-sized primes, CRT, and rational reconstruction.

    Same contract as sparse_kernel_vector. The elimination works on
    residues, so fill-in never drags long rationals around; the lifted
    vector is only returned after the exact sparse residual check passes,
    so an unlucky prime can cost time but never correctness.
    """
    frac_rows = [dict() for _ in range(n)]
    for (i, j), v in entries.items():
        f = Fraction(v)
        if f != 0:
            frac_rows[i][j] = f
    int_rows = []
    for src in frac_rows:
        mult = 1
        for v in src.values():
            mult = lcm(mult, v.denominator)
        int_rows.append({j: int(v * mult) for j, v in src.items()})

    prime = 1 << 29
    free = None
    modulus = 1
    resid = None
    deficient = 0
    best_rank = 0
    for _ in range(64):
        prime = int(gmpy2.next_prime(prime))
        rank, fcol, x = _kernel_mod_p(int_rows, n, prime, reserve=free)
        if x is None and free is not None:
            # the reserved column may be the casualty of an unlucky first
            # prime; retry this prime with free pivoting before counting it
            rank2, fcol2, x2 = _kernel_mod_p(int_rows, n, prime)
            if x2 is not None:
                free, modulus, resid = fcol2, 1, None
                rank, fcol, x = rank2, fcol2, x2
        if x is None:
            best_rank = max(best_rank, rank)
            if rank == n:
                raise DegenerateKernel("kernel dimension 0 (rank %d of %d)" % (n, n))
            deficient += 1
            if deficient >= 3:
                raise DegenerateKernel(
                    "kernel dimension %d (rank %d of %d)"
                    % (n - best_rank, best_rank, n)
                )
            continue
        if free is None:
            free = fcol
        if resid is None:
            resid, modulus = x, prime
            continue
        inv = pow(modulus % prime, -1, prime)
        resid = [
            r + modulus * (((xp - r) * inv) % prime) for r, xp in zip(resid, x)
        ]
        modulus *= prime
        cand = _reconstruct_vector(resid, modulus)
        if cand is not None and _certify_kernel(frac_rows, cand):
            return cand
    raise NoConvergence(
        "rational reconstruction of the kernel did not stabilize "
        "within 64 primes (n=%d)" % n
    )


def _reconstruct_vector(resid, modulus):
    bound = isqrt(modulus // 2)
    out = []
    for r in resid:
        r %= modulus
        if r == 0:
            out.append(Fraction(0))
            continue
        a, b = modulus, r
        x0, x1 = 0, 1
        while b > bound:
            q = a // b
            a, b = b, a - q * b
            x0, x1 = x1, x0 - q * x1
        num, den = b, x1
        if den < 0:
            num, den = -num, -den
        if den == 0 or den > bound or gcd(den, modulus) != 1:
            return None
        out.append(Fraction(num, den))
    return out


def _certify_kernel(frac_rows, x):
    for row in frac_rows:
        s = Fraction(0)
        for j, v in row.items():
            xv = x[j]
            if xv:
                s += v * xv
        if s != 0:
            return False
    return True


# ----------------------------------------------------------------------------
# exact characteristic polynomial (multi-modular Hessenberg + CRT)
# ----------------------------------------------------------------------------

def _primes_above(start, count):
    out = []
    p = start
    while len(out) < count:
        p = int(gmpy2.next_prime(p))
        out.append(p)
    return out


def _charpoly_mod(A, n, p):
    """Characteristic polynomial of integer matrix A modulo prime p.

    Hessenberg reduction by similarity transforms, then the classic
    recurrence along the last column. Coefficients returned ascending.
    p must stay below 2^31 so int64 products cannot overflow.
    """
    import numpy as np

    H = np.array([[A[i][j] % p for j in range(n)] for i in range(n)], dtype=np.int64)
    for k in range(1, n - 1):
        col = H[k:, k - 1]
        nz = np.nonzero(col)[0]
        if nz.size == 0:
            continue
        piv = k + int(nz[0])
        if piv != k:
            H[[k, piv], :] = H[[piv, k], :]
            H[:, [k, piv]] = H[:, [piv, k]]
        inv = pow(int(H[k, k - 1]), p - 2, p)
        for i in range(k + 1, n):
            f = (int(H[i, k - 1]) * inv) % p
            if f == 0:
                continue
            H[i, k - 1 :] = (H[i, k - 1 :] - f * H[k, k - 1 :]) % p
            H[:, k] = (H[:, k] + f * H[:, i]) % p
    # p_k(x) = charpoly of the leading k x k block
    polys = [np.array([1], dtype=np.int64)]
    for k in range(1, n + 1):
        diag = int(H[k - 1, k - 1])
        prev = polys[k - 1]
        cur = np.zeros(k + 1, dtype=np.int64)
        cur[1:] += prev
        cur[:-1] = (cur[:-1] - diag * prev) % p
        cur %= p
        sub = 1
        for j in range(k - 1, 0, -1):
            sub = (sub * int(H[j, j - 1])) % p
            coeff = (int(H[j - 1, k - 1]) * sub) % p
            if coeff:
                pj = polys[j - 1]
                cur[: pj.size] = (cur[: pj.size] - coeff * pj) % p
        polys.append(cur)
    return [int(c) % p for c in polys[n]]


def charpoly_exact(A):
    """Exact characteristic polynomial det(xI - A) of an integer matrix.

    Returns ascending integer coefficients. Deterministic: the number of
    CRT primes is chosen from a Hadamard-type bound on the coefficients.
    """
    n = len(A)
    if n == 0:
        return [1]
    norm = max(1, max(isqrt(sum(int(x) * int(x) for x in row)) + 1 for row in A))
    # |c_k| <= binom(n, k) * norm^k <= 2^n * norm^n
    bound_bits = n + n * max(1, norm).bit_length() + 4
    primes = _primes_above(1 << 30, bound_bits // 29 + 1)
    residues = [_charpoly_mod(A, n, p) for p in primes]
    # CRT lift, symmetric range
    coeffs = []
    M = 1
    for p in primes:
        M *= p
    for k in range(n + 1):
        x = 0
        for p, res in zip(primes, residues):
            Mi = M // p
            inv = pow(Mi % p, p - 2, p)
            x = (x + res[k] * Mi * inv) % M
        if x > M // 2:
            x -= M
        coeffs.append(x)
    return coeffs


def poly_divides_int(d, f):
    """Does integer polynomial d divide f exactly (over Q)?

    Both ascending coefficient lists of Fractions or ints. Returns
    (True, quotient) or (False, None).
    """
    d = [Fraction(x) for x in d]
    f = [Fraction(x) for x in f]
    while d and d[-1] == 0:
        d.pop()
    while f and f[-1] == 0:
        f.pop()
    if not d:
        raise ZeroDivisionError
    if not f:
        return True, [Fraction(0)]
    if len(f) < len(d):
        return False, None
    quot = [Fraction(0)] * (len(f) - len(d) + 1)
    rem = f[:]
    for k in range(len(quot) - 1, -1, -1):
        c = rem[k + len(d) - 1] / d[-1]
        quot[k] = c
        if c != 0:
            for i, dc in enumerate(d):
                rem[k + i] -= c * dc
    if any(c != 0 for c in rem):
        return False, None
    return True, quot


# ----------------------------------------------------------------------------
# BigFloat spectra
# ----------------------------------------------------------------------------

def dense_spectrum(entries_or_rows, n):
    """All eigenvalues (mpc list) of a matrix at the current precision.

    Accepts either a dict (i, j) -> value or dense rows. Meant for
    n <= 256; larger systems should go through the sparse/polynomial
    routes.
    """
    if n > 256:
        raise ValueError("dense spectra are capped at dimension 256")
    A = mp.zeros(n)
    if isinstance(entries_or_rows, dict):
        items = entries_or_rows.items()
        for (i, j), v in items:
            A[i, j] = _to_mp(v)
    else:
        for i, row in enumerate(entries_or_rows):
            for j, v in enumerate(row):
                if v != 0:
                    A[i, j] = _to_mp(v)
    return mpmath.eig(A, left=False, right=False)


def _to_mp(v):
    if isinstance(v, Fraction):
        return mp.mpf(v.numerator) / v.denominator
    return mp.mpf(v)


def power_extremal(entries, n, digits, max_iter=None, v0=None):
    """Largest-real-part eigenvalue of a Markov generator by shifted
    power iteration.

    entries: dict (i, j) -> value (exact or float). Returns (lam, vec)
    with residual ||Mv - lam v||_inf <= 10^-(digits-10) * scale, else
    raises NoConvergence.
    """
    with mp.workdps(max(mp.dps, digits + 10)):
        return _power_extremal(entries, n, digits, max_iter, v0)


def _power_extremal(entries, n, digits, max_iter, v0):
    rows = [[] for _ in range(n)]
    diag_max = mp.mpf(0)
    for (i, j), v in entries.items():
        x = _to_mp(v)
        rows[i].append((j, x))
        if i == j:
            diag_max = max(diag_max, abs(x))
    shift = diag_max + 1
    target = mp.mpf(10) ** (-(digits - 10))
    if max_iter is None:
        max_iter = 200 * digits + 20 * n
    v = [mp.mpf(1) / n] * n if v0 is None else [_to_mp(x) for x in v0]
    lam = mp.mpf(0)
    for it in range(max_iter):
        w = [mp.mpf(0)] * n
        for i, row in enumerate(rows):
            acc = shift * v[i]
            for j, x in row:
                acc += x * v[j]
            w[i] = acc
        norm = max(abs(x) for x in w)
        w = [x / norm for x in w]
        # Rayleigh-style estimate using the largest component
        imax = max(range(n), key=lambda i: abs(w[i]))
        num = shift * w[imax]
        for j, x in rows[imax]:
            num += x * w[j]
        lam_new = num / w[imax] - shift
        if it % 4 == 3 or abs(lam_new - lam) < target:
            res = mp.mpf(0)
            scale = max(abs(x) for x in w)
            for i, row in enumerate(rows):
                acc = -lam_new * w[i]
                for j, x in row:
                    acc += x * w[j]
                res = max(res, abs(acc))
            if res <= target * max(1, scale):
                return lam_new, w
        lam = lam_new
        v = w
    raise NoConvergence(
        "power iteration: residual target 1e-%d not reached in %d steps"
        % (digits - 10, max_iter)
    )
