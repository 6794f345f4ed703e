"""Lattice assembly: configurations, local-operator embedding, Markov
generators, exact steady states and extremal eigenvalues.

Configurations tau = (tau_1, ..., tau_L) with tau_i in {0..N} are
indexed mixed-radix with site 1 as the most significant digit, which
makes embedding a local operator at site i the Kronecker sandwich
1^(i-1) (x) op (x) 1^(L-i-k+1).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product as iproduct

from exlab.errors import DegenerateKernel, ModelLacksBoundary
from exlab.linalg import (
    bareiss_kernel,
    modular_kernel_vector,
    power_extremal,
    sparse_kernel_vector,
)

# ----------------------------------------------------------------------------
# configurations
# ----------------------------------------------------------------------------

def config_index(tau, nstates: int) -> int:
    idx = 0
    for t in tau:
        idx = idx * nstates + t
    return idx


def index_config(idx: int, L: int, nstates: int) -> tuple:
    out = [0] * L
    for i in range(L - 1, -1, -1):
        idx, out[i] = divmod(idx, nstates)
    return tuple(out)


def all_configs(L: int, nstates: int):
    return iproduct(range(nstates), repeat=L)


def sector_indices(L: int, nstates: int, npart: int) -> list:
    """Indices of configurations with a given total particle number
    (species weighted by their label counting as 1 each, i.e. number of
    nonzero sites)."""
    out = []
    for idx in range(nstates**L):
        tau = index_config(idx, L, nstates)
        if sum(1 for t in tau if t != 0) == npart:
            out.append(idx)
    return out


# ----------------------------------------------------------------------------
# sparse operators
# ----------------------------------------------------------------------------

@dataclass
class SparseOperator:
    """Sparse square matrix with exact or float scalar entries."""

    dim: int
    entries: dict = field(default_factory=dict)

    def add_at(self, i: int, j: int, v):
        if v == 0:
            return
        key = (i, j)
        cur = self.entries.get(key)
        if cur is None:
            self.entries[key] = v
        else:
            s = cur + v
            if s == 0:
                del self.entries[key]
            else:
                self.entries[key] = s

    def __add__(self, other: "SparseOperator") -> "SparseOperator":
        if self.dim != other.dim:
            raise ValueError("dimension mismatch")
        out = SparseOperator(self.dim, dict(self.entries))
        for (i, j), v in other.entries.items():
            out.add_at(i, j, v)
        return out

    def scale(self, s) -> "SparseOperator":
        return SparseOperator(
            self.dim, {k: s * v for k, v in self.entries.items()}
        )

    def matvec(self, v):
        out = [0] * self.dim
        for (i, j), x in self.entries.items():
            out[i] = out[i] + x * v[j]
        return out

    def column_sums(self):
        sums = [0] * self.dim
        for (_i, j), x in self.entries.items():
            sums[j] = sums[j] + x
        return sums

    def to_dense(self):
        rows = [[Fraction(0)] * self.dim for _ in range(self.dim)]
        for (i, j), v in self.entries.items():
            rows[i][j] = v
        return rows

    def transpose(self) -> "SparseOperator":
        return SparseOperator(
            self.dim, {(j, i): v for (i, j), v in self.entries.items()}
        )

    def restrict(self, indices) -> "SparseOperator":
        pos = {g: k for k, g in enumerate(indices)}
        out = SparseOperator(len(indices))
        for (i, j), v in self.entries.items():
            if i in pos and j in pos:
                out.add_at(pos[i], pos[j], v)
        return out


def embed_local(op, site: int, L: int, nstates: int) -> SparseOperator:
    """Embed a k-site local operator starting at 1-based site into the
    L-site space. op is a dense (nstates^k) square matrix."""
    d = len(op)
    k = 0
    size = 1
    while size < d:
        size *= nstates
        k += 1
    if size != d:
        raise ValueError("operator dimension is not a power of the local dimension")
    if not 1 <= site <= L - k + 1:
        raise ValueError("site out of range")
    left = nstates ** (site - 1)
    right = nstates ** (L - site - k + 1)
    out = SparseOperator(nstates**L)
    for r in range(d):
        for c in range(d):
            v = op[r][c]
            if v == 0:
                continue
            for a in range(left):
                base_r = (a * d + r) * right
                base_c = (a * d + c) * right
                for b in range(right):
                    out.add_at(base_r + b, base_c + b, v)
    return out


def _deformed_boundary(B, xi, inverse=False):
    """Scale off-diagonal boundary entries by xi^(row-col), counting the
    particles exchanged with the reservoir."""
    n = len(B)
    out = [[B[i][j] for j in range(n)] for i in range(n)]
    for i in range(n):
        for j in range(n):
            if i == j or out[i][j] == 0:
                continue
            w = (i - j) if not inverse else (j - i)
            out[i][j] = out[i][j] * xi**w if w >= 0 else out[i][j] * (1 / xi) ** (-w)
    return out


def _deformed_bond(m, xi, nstates):
    """Scale bond entries by xi^(net rightward transport across the cut),
    w = ((n'_{i+1} - n_{i+1}) - (n'_i - n_i)) / 2 in units of particles."""
    d = len(m)
    out = [[m[r][c] for c in range(d)] for r in range(d)]
    for r in range(d):
        for c in range(d):
            if r == c or out[r][c] == 0:
                continue
            r1, r2 = divmod(r, nstates)
            c1, c2 = divmod(c, nstates)
            n = lambda t: 1 if t != 0 else 0
            w2 = ((n(r2) - n(c2)) - (n(r1) - n(c1)))
            if w2 % 2 != 0:
                continue  # no net transport interpretation; leave as is
            w = w2 // 2
            if w:
                out[r][c] = out[r][c] * xi**w if w > 0 else out[r][c] * (1 / xi) ** (-w)
    return out


def assemble_markov(model, L: int, geometry: str = "open", deformation=None) -> SparseOperator:
    """Continuous-time Markov generator of a model on L sites.

    geometry "open": B at site 1, bond operators on (i, i+1), Bbar at
    site L. geometry "periodic": bond operators on all L bonds with
    wrap-around. deformation is None or a tuple ("left", xi),
    ("right", xi) or ("bond", i, xi); at xi=1 the deformation is the
    identity and columns sum to zero exactly.
    """
    nstates = model.nstates
    m = model.m
    if geometry == "open":
        if model.B is None or model.Bbar is None:
            raise ModelLacksBoundary(model.name)
        B, Bbar = model.B, model.Bbar
        bonds = {i: m for i in range(1, L)}
        if deformation is not None:
            kind = deformation[0]
            if kind == "left":
                B = _deformed_boundary(B, deformation[1])
            elif kind == "right":
                Bbar = _deformed_boundary(Bbar, deformation[1])
            elif kind == "bond":
                _, i, xi = deformation
                bonds[i] = _deformed_bond(m, xi, nstates)
            else:
                raise ValueError("unknown deformation %r" % (deformation,))
        M = embed_local(B, 1, L, nstates)
        M = M + embed_local(Bbar, L, L, nstates)
        for i in range(1, L):
            M = M + embed_local(bonds[i], i, L, nstates)
        return M
    if geometry == "periodic":
        bonds = {i: m for i in range(1, L)}
        wrap = m
        if deformation is not None:
            if deformation[0] != "bond":
                raise ValueError("periodic geometry only takes bond deformations")
            _, i, xi = deformation
            if i == L:
                wrap = _deformed_bond(m, xi, nstates)
            else:
                bonds[i] = _deformed_bond(m, xi, nstates)
        M = SparseOperator(nstates**L)
        for i in range(1, L):
            M = M + embed_local(bonds[i], i, L, nstates)
        # wrap-around bond (L, 1): permute site L next to site 1
        d = nstates
        for r1 in range(d):
            for r2 in range(d):
                for c1 in range(d):
                    for c2 in range(d):
                        v = wrap[r1 * d + r2][c1 * d + c2]
                        if v == 0:
                            continue
                        mid = nstates ** (L - 2)
                        for b in range(mid):
                            # site L digit is least significant, site 1 most
                            row = (r2 * d**(L - 1)) + b * d + r1
                            col = (c2 * d**(L - 1)) + b * d + c1
                            M.add_at(row, col, v)
        return M
    raise ValueError("unknown geometry %r" % geometry)


def null_space_steady(M: SparseOperator, method: str = "auto"):
    """Exact stationary vector of a generator: the 1-dimensional kernel,
    normalized to total weight 1. Raises DegenerateKernel otherwise."""
    n = M.dim
    if method == "auto":
        method = "bareiss" if n <= 200 else "modular"
    if method == "bareiss":
        rank, basis = bareiss_kernel(M.to_dense(), n)
        if n - rank != 1:
            raise DegenerateKernel(
                "kernel dimension %d (rank %d of %d)" % (n - rank, rank, n)
            )
        vec = basis[0]
    elif method == "sparse":
        vec = sparse_kernel_vector(M.entries, n)
    elif method == "modular":
        vec = modular_kernel_vector(M.entries, n)
    else:
        raise ValueError("unknown method %r" % method)
    total = sum(vec)
    if total == 0:
        raise DegenerateKernel("kernel vector has zero total weight")
    return [x / total for x in vec]


def extremal_eigenvalue(M: SparseOperator, digits: int = 50, max_iter=None, v0=None):
    """Eigenvalue of M with the largest real part (BigFloat), certified by
    the residual ||Mv - lam v|| <= 10^-(digits-10)."""
    if M.dim > 3**10:
        raise ValueError("operator too large for the iterative path")
    return power_extremal(M.entries, M.dim, digits, max_iter=max_iter, v0=v0)
