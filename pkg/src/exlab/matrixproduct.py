"""Matrix-product stationary states for the open chains in the catalog.

Every model here admits a stationary measure of the form

    P(tau) = <<W| X_{tau_1} X_{tau_2} ... X_{tau_L} |V>> / Z_L

with generators X_t taken from a quadratic algebra and boundary vectors
that absorb them one letter at a time.  The module provides

  * exact weight engines per model (`mp_weight`), each one built on the
    reduction scheme natural to its algebra: normal ordering for the
    two-generator chains, a ratio formula for the bidirectional model,
    a ladder recursion for the multi-species chain, word rewriting for
    the two-species chain, and boundary recursions plus rational
    reconstruction for the partially asymmetric chain;
  * the assembled stationary vector (`mp_steady_vector`), which the test
    suite pins against the null space of the Markov generator;
  * truncated ladder representations (`fock_rep`) with certified error
    bounds, used both as a cross-check and as the fallback engine;
  * the combinatorial pushing sum (`pushing_oracle`), an independent
    oracle for the totally asymmetric weights;
  * closed normalizations (`closed_Z`) where they exist;
  * structural checks (`check_zf_gz`, `check_telescopic`) that reduce
    the exchange, boundary-reflection and divergence identities to
    exactly zero inside the algebra.

All arithmetic is exact rational; weights are reported in units where
<<W|V>> = 1 for each model's own normalization (see the per-engine
docstrings for the two cases where only ratios are meaningful).
"""

import itertools
import logging
from dataclasses import dataclass
from fractions import Fraction
from math import factorial

from .errors import (
    ConvergenceDomainViolation,
    ExlabError,
    InvalidLabels,
    NonTerminatingRewrite,
    PoleAtSample,
    TruncationInsufficient,
    UnknownModel,
)
from .lattice import all_configs, assemble_markov, null_space_steady
from .linalg import bareiss_kernel
from .models import ResidualReport, braid, catalog, rf_mat_eval

log = logging.getLogger("exlab.matrixproduct")

F = Fraction


def _check_config(model, config):
    config = tuple(int(t) for t in config)
    for t in config:
        if not 0 <= t < model.nstates:
            raise InvalidLabels(
                "site label %d outside 0..%d" % (t, model.nstates - 1))
    return config


def _pw(x, n):
    """x**n with the 0**0 = 1 convention (degenerate couplings)."""
    return F(1) if n == 0 else x ** n


# ----------------------------------------------------------------------------
# pushing oracle (totally asymmetric chain)
# ----------------------------------------------------------------------------

def pushing_oracle(config, a, b):
    """Weight of a configuration by the pushing construction.

    Each target configuration contributes a^m_in b^m_out, where m_out
    particles leave through the right edge and m_in holes are filled
    from the left edge, minimized over the number of exits subject to
    the no-crossing constraint: the i-th surviving particle may only
    move rightwards into the i-th remaining slot.  Summing over all
    targets reproduces the stationary weight of `config` for the
    totally asymmetric chain with a = (1-alpha)/alpha, b = (1-beta)/beta.
    """
    config = tuple(int(t) for t in config)
    a, b = F(a), F(b)
    L = len(config)
    positions = [i for i, t in enumerate(config) if t]
    n = len(positions)
    total = F(0)
    for target in all_configs(L, 2):
        slots = [i for i, t in enumerate(target) if t]
        npr = len(slots)
        for m_out in range(max(0, n - npr), n + 1):
            m_in = npr - n + m_out
            survivors = positions[:n - m_out]
            landing = slots[m_in:]
            if all(s >= p for p, s in zip(survivors, landing)):
                total += _pw(a, m_in) * _pw(b, m_out)
                break
    return total


# ----------------------------------------------------------------------------
# two-generator chains: normal ordering of E/D words
# ----------------------------------------------------------------------------

def _normal_order_de(word, c_ed, c_e, c_d):
    """Reduce a 0/1 word (0 = E, 1 = D) with D E = c_ed E D + c_e E + c_d D.

    Returns {(i, j): coeff} over the normal basis E^i D^j.
    """
    pending = {tuple(word): F(1)}
    normal = {}
    while pending:
        w, coeff = pending.popitem()
        if coeff == 0:
            continue
        for i in range(len(w) - 1):
            if w[i] == 1 and w[i + 1] == 0:
                head, tail = w[:i], w[i + 2:]
                for c, rep in ((c_ed, (0, 1)), (c_e, (0,)), (c_d, (1,))):
                    if c:
                        key = head + rep + tail
                        pending[key] = pending.get(key, F(0)) + coeff * c
                break
        else:
            ij = (w.count(0), w.count(1))
            normal[ij] = normal.get(ij, F(0)) + coeff
    return normal


def _tasep_value(model, config):
    alpha = model.params["alpha"]
    beta = model.params["beta"]
    x, y = 1 / alpha, 1 / beta
    normal = _normal_order_de(config, F(0), F(1), F(1))
    return sum(c * x ** i * y ** j for (i, j), c in normal.items())


def _tasep_Z(L, alpha, beta):
    """Sum of all weights of the totally asymmetric chain, closed form.

    Z_L = sum_p  p (2L-1-p)! / (L! (L-p)!) * h_p(1/alpha, 1/beta)
    with h_p the complete homogeneous sum of degree p in two variables.
    """
    x, y = 1 / F(alpha), 1 / F(beta)
    total = F(0)
    for p in range(1, L + 1):
        ballot = F(p * factorial(2 * L - 1 - p), factorial(L) * factorial(L - p))
        h = sum(x ** q * y ** (p - q) for q in range(p + 1))
        total += ballot * h
    return total if L else F(1)


# ----------------------------------------------------------------------------
# multi-species symmetric chain: ladder recursion over C^n |V>>
# ----------------------------------------------------------------------------

def _mssep_value(alphas, betas, a, b, word):
    """<<W| X_{t_1} ... X_{t_L} |V>> for the multi-species symmetric chain.

    Letters are pushed onto |V>> right to left using
        X_t C^n |V>> = beta_t C^{n+1} |V>> + (b+n) lambda_t C^n |V>>
    with lambda_t = alpha_t - beta_t, then closed with
        <<W| C^n |V>> = (a+b)(a+b+1)...(a+b+n-1).
    """
    lams = [F(x) - F(y) for x, y in zip(alphas, betas)]
    coeffs = {0: F(1)}
    for t in reversed(word):
        nxt = {}
        bt, lt = F(betas[t]), lams[t]
        for n, c in coeffs.items():
            nxt[n + 1] = nxt.get(n + 1, F(0)) + c * bt
            if lt:
                nxt[n] = nxt.get(n, F(0)) + c * (b + n) * lt
        coeffs = nxt
    total = F(0)
    for n, c in coeffs.items():
        z = F(1)
        for k in range(n):
            z *= a + b + k
        total += c * z
    return total


def _mssep_weight(model, config):
    p = model.params
    return _mssep_value(p["alphas"], p["betas"], F(p["a"]), F(p["b"]), config)


def _mssep_Z(model, L):
    a, b = F(model.params["a"]), F(model.params["b"])
    z = F(1)
    for k in range(L):
        z *= a + b + k
    return z


def _ssep_split(model):
    """Boundary data of the symmetric chain as a two-species ladder pack."""
    p = model.params
    al, be, ga, de = p["alpha"], p["beta"], p["gamma"], p["delta"]
    s, r = al + ga, be + de
    alphas = (ga / s, al / s)
    betas = (be / r, de / r)
    lam1 = al / s - de / r            # = (alpha beta - gamma delta) / (s r)
    return alphas, betas, 1 / s, 1 / r, lam1


def _ssep_value(model, config):
    """Symmetric-chain weight.

    On the resonance manifold alpha beta = gamma delta the stationary
    state is a product measure and the generators degenerate; there the
    value is reported in the ladder normalization directly (ratios and
    the steady vector are unaffected).
    """
    alphas, betas, a, b, lam1 = _ssep_split(model)
    value = _mssep_value(alphas, betas, a, b, config)
    if lam1 == 0:
        return value
    return value / lam1 ** len(config)


def _ssep_Z(model, L):
    alphas, betas, a, b, lam1 = _ssep_split(model)
    z = F(1)
    for k in range(L):
        z *= a + b + k
    if lam1 == 0:
        return z
    return z / lam1 ** L


# ----------------------------------------------------------------------------
# bidirectional chain: signed three-letter expansion and ratio formula
# ----------------------------------------------------------------------------

def _dissep_data(model):
    p = model.params
    lam = p["lam"]
    al, be, ga, de = p["alpha"], p["beta"], p["gamma"], p["delta"]
    phi = (1 - lam) / (1 + lam)
    aa = (2 * lam - al - ga) / (2 * lam + al + ga)
    cc = (ga - al) / (2 * lam + al + ga)
    bb = (2 * lam - de - be) / (2 * lam + de + be)
    dd = (be - de) / (2 * lam + de + be)
    return phi, aa, bb, cc, dd


def _dissep_bracket(phi, aa, bb, cc, dd, p, q, r):
    """<<W| G1^p G2^q G3^r |V>> under <<W| G2^n |V>> = 1."""
    num = F(1)
    for l in range(p):
        num *= cc * _pw(phi, p - 1 - l) + aa * dd * _pw(phi, q + r + l)
    for m in range(r):
        num *= dd * _pw(phi, r - 1 - m) + bb * cc * _pw(phi, q + p + m)
    den = F(1)
    for k in range(q, p + q + r):
        den *= 1 - aa * bb * _pw(phi, 2 * k)
    if den == 0:
        raise ExlabError("ordered-bracket denominator hit a resonance; "
                         "move the boundary rates off the singular manifold")
    return num / den


def _dissep_masks(model, L):
    """Aggregate the 3^L expansion monomials by their sign mask.

    E = G1+G2+G3 and D = G2-G1-G3, so each site contributes one of the
    three letters with a minus sign iff the site is occupied and the
    letter is not G2.  Reordering a letter string into G1^p G2^q G3^r
    costs phi per (G2,G1) and per (G3,G2) inversion.  The weight of a
    configuration is then a signed sum over masks (mask bit = letter
    is not G2), which is a single sign transform of the mask totals.
    """
    phi, aa, bb, cc, dd = _dissep_data(model)
    cache = {}
    agg = [F(0)] * (1 << L)
    for gs in itertools.product((1, 2, 3), repeat=L):
        inv = 0
        for i in range(L):
            gi = gs[i]
            if gi == 2:
                inv += sum(1 for j in range(i + 1, L) if gs[j] == 1)
            elif gi == 3:
                inv += sum(1 for j in range(i + 1, L) if gs[j] == 2)
        key = (gs.count(1), gs.count(2), gs.count(3))
        if key not in cache:
            cache[key] = _dissep_bracket(phi, aa, bb, cc, dd, *key)
        mask = 0
        for g in gs:
            mask = (mask << 1) | (g != 2)
        agg[mask] += _pw(phi, inv) * cache[key]
    return agg


def _sign_transform(agg):
    """out[t] = sum_m agg[m] * (-1)^popcount(m & t), in place."""
    n = len(agg)
    h = 1
    while h < n:
        for i in range(0, n, 2 * h):
            for j in range(i, i + h):
                x, y = agg[j], agg[j + h]
                agg[j] = x + y
                agg[j + h] = x - y
        h *= 2
    return agg


def _dissep_weights(model, L):
    return _sign_transform(_dissep_masks(model, L))


def _dissep_value(model, config):
    L = len(config)
    agg = _dissep_masks(model, L)
    t = 0
    for s in config:
        t = (t << 1) | s
    total = F(0)
    for m, c in enumerate(agg):
        if c:
            total += -c if bin(m & t).count("1") % 2 else c
    return total


# ----------------------------------------------------------------------------
# two-species chain: word rewriting with cycle resolution
# ----------------------------------------------------------------------------

# Generator numbering G1..G9; products that push right-moving letters
# (1,2,3,6) through left-moving ones (4,5,7,8,9).
_TT_ZERO = {(3, 4), (3, 5), (6, 7), (4, 7), (5, 7)}

_TT_BULK = {
    (1, 4): ((F(1), (5,)),),
    (2, 4): ((F(1), (6,)),),
    (6, 4): ((F(1), (4, 6)),),
    (1, 5): ((F(1), (5, 1)), (F(1), (6,)), (F(-1), (4, 2))),
    (2, 5): ((F(1), (1, 6)),),
    (6, 5): ((F(1), (5, 6)),),
    (1, 7): ((F(1), (8,)),),
    (2, 7): ((F(1), (9,)),),
    (3, 7): ((F(1), ()),),
    (1, 8): ((F(1), (8, 1)), (F(1), (9,)), (F(-1), (7, 2))),
    (2, 8): ((F(1), (1, 9)),),
    (3, 8): ((F(1), (1,)),),
    (6, 8): ((F(1), (4,)),),
    (5, 8): ((F(1), (4, 9)),),
    (1, 9): ((F(1), (9, 1)), (F(1), ()), (F(-1), (7, 3))),
    (2, 9): ((F(1), (9, 2)), (F(1), (1,)), (F(-1), (8, 3))),
    (3, 9): ((F(1), (2,)),),
    (6, 9): ((F(1), (5,)),),
    (5, 9): ((F(1), (9, 5)), (F(1), (4,)), (F(-1), (8, 6))),
}

# site letter -> generator content (identity contributions as empty words)
_TT_LETTERS = {
    0: ((F(1), ()), (F(1), (9,)), (F(1), (8,)), (F(1), (7,))),
    1: ((F(1), (6,)), (F(1), (5,)), (F(1), (4,))),
    2: ((F(1), ()), (F(1), (3,)), (F(1), (2,)), (F(1), (1,))),
}

_TT_REWRITE_CAP = 200_000


def _tt_left_actions(a):
    return {
        4: ((a, ()),),
        7: (),
        8: ((F(1), ()),),
        5: ((a, (1,)), (-a, (3,))),
        9: ((F(1), (1,)), (a, ()), (F(-1), (3,)), (F(-1), (6,))),
    }


def _tt_right_actions(b, variant):
    if variant == "M1":
        return {
            3: (),
            2: ((F(1), ()),),
            6: ((b, ()),),
            5: ((b, (9,)), (-b, (7,))),
            1: ((b, ()), (F(1), (9,)), (F(-1), (4,)), (F(-1), (7,))),
        }
    return {
        3: ((b, ()),),
        5: ((b, (4,)),),
        6: (),
        2: ((1 - b * b, ()), (b, (1,))),
        1: ((b, ()), (F(1), (9,)), (F(-1), (4,)), (F(-1), (7,))),
    }


def _tt_routes(word, lact, ract):
    """All one-step expansions of a word: the leftmost bulk exchange,
    absorption of the leading letter into <<W|, and absorption of the
    trailing letter into |V>>, whichever apply.  A vanishing product
    short-circuits to the single route 'zero'.  Every nonempty word
    admits at least one route."""
    routes = []
    for i in range(len(word) - 1):
        pair = (word[i], word[i + 1])
        if pair in _TT_ZERO:
            return ((),)
        rule = _TT_BULK.get(pair)
        if rule is not None:
            head, tail = word[:i], word[i + 2:]
            routes.append(tuple((c, head + rep + tail) for c, rep in rule))
            break
    la = lact.get(word[0])
    if la is not None:
        rest = word[1:]
        routes.append(tuple((c, rep + rest) for c, rep in la))
    ra = ract.get(word[-1])
    if ra is not None:
        body = word[:-1]
        routes.append(tuple((c, body + rep) for c, rep in ra))
    return tuple(routes)


def _sccs(graph):
    """Strongly connected components, emitted successors-first."""
    index, low = {}, {}
    on = set()
    stack, order = [], []
    counter = itertools.count()
    for start in list(graph):
        if start in index:
            continue
        index[start] = low[start] = next(counter)
        stack.append(start)
        on.add(start)
        call = [(start, iter(graph[start]))]
        while call:
            v, edges = call[-1]
            pushed = False
            for w in edges:
                if w not in graph:
                    continue
                if w not in index:
                    index[w] = low[w] = next(counter)
                    stack.append(w)
                    on.add(w)
                    call.append((w, iter(graph[w])))
                    pushed = True
                    break
                if w in on and index[w] < low[v]:
                    low[v] = index[w]
            if pushed:
                continue
            call.pop()
            if call and low[v] < low[call[-1][0]]:
                low[call[-1][0]] = low[v]
            if low[v] == index[v]:
                comp = []
                while True:
                    w = stack.pop()
                    on.discard(w)
                    comp.append(w)
                    if w == v:
                        break
                order.append(comp)
    return order


class _NeedsSeeds(Exception):
    """Internal: a cyclic component stayed underdetermined; explore more
    generator words before giving up."""


def _solve_overdet(rows, k):
    """Row-reduce a stack of rational rows [A | b] over k unknowns.

    Returns the unique solution when the stack has full column rank,
    None when underdetermined.  An inconsistent stack means the rewrite
    tables themselves are broken, so that raises outright."""
    pivots = {}
    for row in rows:
        row = row[:]
        for col, prow in pivots.items():
            if row[col]:
                f = row[col]
                row = [x - f * y for x, y in zip(row, prow)]
        lead = next((c for c in range(k) if row[c]), None)
        if lead is None:
            if row[k]:
                raise NonTerminatingRewrite(
                    "rewriting routes are mutually inconsistent")
            continue
        inv = row[lead]
        row = [x / inv for x in row]
        for col, prow in list(pivots.items()):
            if prow[lead]:
                f = prow[lead]
                pivots[col] = [x - f * y for x, y in zip(prow, row)]
        pivots[lead] = row
    if len(pivots) < k:
        return None
    return [pivots[c][k] for c in range(k)]


class _TwoSpeciesEngine:
    """Exact scalar brackets for the two-species chain by rewriting.

    No route grows a word, so the reachable set is finite.  Boundary
    absorption couples families of words into cycles (the index-raising
    letters regenerate each other) whose naive equations are tautologies,
    so each cyclic family is solved as a joint linear system using every
    applicable route of its members, topped up when needed with
    route-difference identities from outside words (two expansions of
    one word must agree).  Short generator words are explored eagerly so
    those identities are on hand.
    """

    def __init__(self, a, b, variant):
        self.lact = _tt_left_actions(a)
        self.ract = _tt_right_actions(b, variant)
        self.routes = {}
        self.val = {(): F(1)}
        self.seeded = 0

    def _explore(self, seeds, budget):
        todo = [w for w in seeds if w and w not in self.routes]
        while todo:
            w = todo.pop()
            if w in self.routes:
                continue
            if len(self.routes) >= budget:
                raise NonTerminatingRewrite(
                    "rewriting budget %d exhausted at word %s" % (budget, (w,)))
            out = _tt_routes(w, self.lact, self.ract)
            self.routes[w] = out
            for route in out:
                todo.extend(t for _, t in route if t and t not in self.routes)

    def _seed(self, level, budget):
        while self.seeded < level:
            self.seeded += 1
            self._explore(
                itertools.product(range(1, 10), repeat=self.seeded), budget)

    def _system_rows(self, words):
        """One equation per route of each listed word, with already
        valued targets folded into the right-hand side."""
        pos = {w: i for i, w in enumerate(words)}
        k = len(words)
        rows = []
        for w in words:
            for route in self.routes[w]:
                row = [F(0)] * (k + 1)
                row[pos[w]] = F(1)
                for c, t in route:
                    j = pos.get(t)
                    if j is None:
                        row[k] += c * self.val[t]
                    else:
                        row[j] -= c
                rows.append(row)
        return rows

    def _solve_pending(self):
        pending = [w for w in self.routes if w not in self.val]
        if not pending:
            return
        graph = {w: [t for route in self.routes[w] for _, t in route]
                 for w in pending}
        stuck = set()
        for comp in _sccs(graph):
            if any(t in stuck for w in comp for t in graph[w]):
                stuck.update(comp)
                continue
            if len(comp) == 1 and comp[0] not in graph[comp[0]]:
                w = comp[0]
                vals = {sum((c * self.val[t] for c, t in route), F(0))
                        for route in self.routes[w]}
                if len(vals) != 1:
                    raise NonTerminatingRewrite(
                        "rewriting routes disagree at word %s" % (w,))
                self.val[w] = vals.pop()
                continue
            sol = _solve_overdet(self._system_rows(comp), len(comp))
            if sol is None:
                stuck.update(comp)
                continue
            for w, x in zip(comp, sol):
                self.val[w] = x
        if not stuck:
            return
        # Words downstream of a singular family carry extra routes whose
        # mutual consistency pins the family down, so solve them jointly.
        joint = sorted(stuck, key=lambda w: (len(w), w))
        sol = _solve_overdet(self._system_rows(joint), len(joint))
        if sol is None:
            raise _NeedsSeeds(len(joint))
        for w, x in zip(joint, sol):
            self.val[w] = x

    def bracket(self, combo, cap=None):
        budget = _TT_REWRITE_CAP if cap is None else cap
        words = [w for w in combo if w]
        longest = max((len(w) for w in words), default=0)
        self._seed(1, budget)
        self._explore(words, budget)
        while True:
            try:
                self._solve_pending()
                return sum((c * self.val[w] for w, c in combo.items()), F(0))
            except _NeedsSeeds as stuck:
                nxt = self.seeded + 1
                if nxt > min(4, max(2, longest)):
                    raise NonTerminatingRewrite(
                        "cyclic word system of size %d stayed underdetermined"
                        % stuck.args[0])
                self._seed(nxt, budget)


_TT_ENGINES = {}


def _tt_engine(model):
    p = model.params
    key = (p["a"], p["b"], p["variant"])
    if key not in _TT_ENGINES:
        _TT_ENGINES[key] = _TwoSpeciesEngine(*key)
    return _TT_ENGINES[key]


def _tt_expand(config):
    combo = {(): F(1)}
    for t in config:
        nxt = {}
        for w, c in combo.items():
            for lc, lw in _TT_LETTERS[t]:
                key = w + lw
                nxt[key] = nxt.get(key, F(0)) + c * lc
        combo = nxt
    return combo


def two_tasep_value(model, config, step_cap=None):
    """Two-species weight by exact word rewriting.

    A `step_cap` limits the number of distinct words the rewriting is
    allowed to visit; exceeding it raises NonTerminatingRewrite.  With
    an explicit cap the engine runs cold (no shared cache), so the
    budget is meaningful."""
    config = _check_config(model, config)
    combo = _tt_expand(config)
    if step_cap is not None:
        p = model.params
        engine = _TwoSpeciesEngine(p["a"], p["b"], p["variant"])
        return engine.bracket(combo, cap=step_cap)
    return _tt_engine(model).bracket(combo)


# truncated four-ladder representation -------------------------------------

# Monomials (coefficient flag, op_1, op_2, op_3, op_4) with ops drawn from
# "" (identity), "e" (raise), "d" (lower), "A" (vacuum projector); the
# coefficient flag marks a factor of the left fugacity a.
_TT_G_MONOS = {
    1: ((0, "", "", "d", "e"), (0, "e", "d", "A", ""), (0, "", "d", "e", ""),
        (0, "", "", "", "d")),
    2: ((0, "", "", "d", ""), (0, "", "d", "", "e"), (0, "", "d", "e", "d"),
        (0, "e", "d", "A", "d")),
    3: ((0, "", "d", "", ""),),
    4: ((1, "d", "A", "e", ""), (1, "", "A", "A", "")),
    5: ((1, "d", "A", "", "e"), (1, "d", "A", "e", "d"), (1, "", "A", "A", "d")),
    6: ((1, "d", "A", "", ""),),
    7: ((1, "A", "A", "e", ""), (0, "", "e", "", "")),
    8: ((1, "A", "A", "", "e"), (0, "", "e", "d", "e"), (1, "A", "A", "e", "d"),
        (0, "", "e", "", "d"), (0, "e", "", "A", ""), (0, "", "", "e", "")),
    9: ((1, "A", "A", "", ""), (0, "", "e", "d", ""), (0, "", "", "", "e"),
        (0, "e", "", "A", "d"), (0, "", "", "e", "d")),
}

_TT_X_WORDS = {0: ((F(1), ()), (F(1), (9,)), (F(1), (8,)), (F(1), (7,))),
               1: ((F(1), (6,)), (F(1), (5,)), (F(1), (4,))),
               2: ((F(1), ()), (F(1), (3,)), (F(1), (2,)), (F(1), (1,)))}


def _tt_apply_gen(state, gen, a, T, caps=None):
    """Apply one generator to a ket dict {(n1,n2,n3,n4): amp}."""
    out = {}
    for key, amp in state.items():
        for flag, c1, c2, c3, c4 in _TT_G_MONOS[gen]:
            n = list(key)
            ok = True
            for idx, op in enumerate((c1, c2, c3, c4)):
                if op == "e":
                    n[idx] += 1
                    if n[idx] >= T:
                        ok = False
                        break
                elif op == "d":
                    n[idx] -= 1
                    if n[idx] < 0:
                        ok = False
                        break
                elif op == "A":
                    if n[idx] != 0:
                        ok = False
                        break
            if not ok:
                continue
            if caps is not None and (n[1] > caps or n[2] > caps or n[3] > caps):
                continue
            nk = tuple(n)
            add = amp * a if flag else amp
            out[nk] = out.get(nk, F(0)) + add
    return {k: v for k, v in out.items() if v}


def _tt_apply_site(state, letter, a, T, caps=None):
    total = {}
    for coeff, word in _TT_X_WORDS[letter]:
        part = state
        for gen in reversed(word):
            part = _tt_apply_gen(part, gen, a, T, caps)
        for k, v in part.items():
            total[k] = total.get(k, F(0)) + coeff * v
    return {k: v for k, v in total.items() if v}


def _tt_right_state(model, T):
    """|V>> as a truncated ket dict, plus whether the truncation is exact."""
    a, b = model.params["a"], model.params["b"]
    variant = model.params["variant"]
    state = {}
    if variant == "M2":
        for n2 in range(T):
            for n3 in range(T):
                for n4 in range(T):
                    amp = _pw(b, n2) * _pw(b, n4)
                    if amp:
                        state[(0, n2, n3, n4)] = amp
        return state, True
    if b == 0:
        for n3 in range(T):
            state[(0, 0, n3, 0)] = F(1)
        return state, True
    r = b / a
    for n1 in range(T):
        for n3 in range(T):
            for n4 in range(T):
                amp = _pw(r, n1) * _pw(b, n4)
                if amp:
                    state[(n1, 0, n3, n4)] = amp
    return state, False


def _tt_rep_raw(model, config, T):
    """<<W| X_word |V>> in the four-ladder representation, truncated at T.

    States whose copies 2..4 exceed the number of remaining letters can
    no longer reach the vacuum-projecting left vector and are pruned.
    """
    a = model.params["a"]
    L = len(config)
    state, exact = _tt_right_state(model, T)
    rem = L
    state = {k: v for k, v in state.items()
             if k[1] <= rem and k[2] <= rem and k[3] <= rem}
    for letter in reversed(config):
        rem -= 1
        state = _tt_apply_site(state, letter, a, T, caps=rem)
    num = sum((v for (n1, n2, n3, n4), v in state.items()
               if n2 == 0 and n3 == 0 and n4 == 0), F(0))
    return num, exact


def _tt_rep_value_exact(model, config, T=None):
    L = len(config)
    T = T if T is not None else L + 2
    num, exact = _tt_rep_raw(model, config, T)
    if not exact:
        raise ExlabError("representation is only exact for the second "
                         "boundary variant or a vanishing right fugacity")
    return num


def _tt_rep_vector(model, L):
    """Stationary weights from the representation, sharing suffixes."""
    a = model.params["a"]
    T = L + 2
    state0, exact = _tt_right_state(model, T)
    if not exact:
        raise ExlabError("inexact representation for the vector route")
    state0 = {k: v for k, v in state0.items()
              if k[1] <= L and k[2] <= L and k[3] <= L}
    out = [F(0)] * 3 ** L
    def descend(state, pos, idx):
        if pos == 0:
            out[idx] = sum((v for (n1, n2, n3, n4), v in state.items()
                            if n2 == 0 and n3 == 0 and n4 == 0), F(0))
            return
        # letters are fed to |V>> right to left, so the letter chosen
        # with pos sites left is the site with the lighter digit weight
        stride = 3 ** (L - pos)
        for letter in (0, 1, 2):
            nxt = _tt_apply_site(state, letter, a, T, caps=pos - 1)
            descend(nxt, pos - 1, idx + letter * stride)
    descend(state0, L, 0)
    return out


def _tt_rep_reconstruct(model, config):
    """Fallback weight with a geometric tail estimate and double-cutoff
    reconstruction; only reached when rewriting gives up."""
    a, b = model.params["a"], model.params["b"]
    r = abs(b / a)
    if r >= 1:
        raise ConvergenceDomainViolation(
            "right fugacity ratio %s >= 1: truncated pairing diverges" % (r,))
    L = len(config)
    last = None
    for T in (L + 12, L + 28, L + 44):
        num, _ = _tt_rep_raw(model, config, T)
        den, _ = _tt_rep_raw(model, (), T)
        val = num / den
        rec = val.limit_denominator(10 ** 12)
        if last is not None and rec == last:
            return rec
        last = rec
    raise TruncationInsufficient(
        "reconstruction did not stabilize for %s" % (config,))


def _two_tasep_weight(model, config):
    try:
        return two_tasep_value(model, config)
    except NonTerminatingRewrite as exc:
        log.warning("rewriting gave up (%s); falling back to the "
                    "representation for %s", exc, config)
        if model.params["variant"] == "M2" or model.params["b"] == 0:
            return _tt_rep_value_exact(model, config)
        return _tt_rep_reconstruct(model, config)


def _two_tasep_Z(model, L):
    al, be = model.params["alpha"], model.params["beta"]
    if model.params["variant"] == "M2":
        return _tasep_Z(L, al, be) * _tasep_Z(L, F(1), be)
    return _tasep_Z(L, al, F(1)) * _tasep_Z(L, F(1), be)


# ----------------------------------------------------------------------------
# partially asymmetric chain: boundary ladder recursions
# ----------------------------------------------------------------------------

def _asep_ladder(model, T):
    """Left and right pairing sequences w_k, v_k up to k < T.

    Both satisfy three-term recursions with rational coefficients; the
    right one is generated in the rescaled form v~_k = (t;t)_k v_k."""
    p = model.params
    pp, qq = p["p"], p["q"]
    al, ga = p["alpha"], p["gamma"]
    be, de = p["beta"], p["delta"]
    if ga == 0 or de == 0:
        raise ExlabError("the ladder route needs gamma > 0 and delta > 0; "
                         "totally asymmetric boundaries have their own engine")
    t = pp / qq
    c0 = (ga - al + pp - qq) / ga
    t0 = al / ga
    cL = (de - be + pp - qq) / de
    tL = be / de
    w = [F(1), -c0]
    vt = [F(1), -cL]
    for k in range(1, T):
        w.append(-c0 * w[k] + t0 * (1 - t ** k) * w[k - 1])
        vt.append(-cL * vt[k] + tL * (1 - t ** k) * vt[k - 1])
    poch = F(1)
    v = [F(1)]
    for k in range(1, T + 1):
        poch *= 1 - t ** k
        v.append(vt[k] / poch)
    return w[:T], v[:T]


def _asep_apply(word, v, t, T):
    """M_word v on the truncated ladder; word letters 0 -> 1+raise with
    weights (1-t^k), 1 -> 1+lower."""
    x = list(v)
    for letter in reversed(word):
        y = [F(0)] * T
        for k in range(T):
            y[k] = x[k]
            if letter == 0:
                if k + 1 < T:
                    y[k] += (1 - t ** (k + 1)) * x[k + 1]
            else:
                if k - 1 >= 0:
                    y[k] += x[k - 1]
        x = y
    return x


def _series_tail(terms):
    """Certified tail bound of sum(terms) continued geometrically.

    Returns (partial_sum, bound).  Raises ConvergenceDomainViolation if
    the observed late-term ratios do not contract."""
    partial = sum(terms, F(0))
    tail = [x for x in terms[-12:] if x != 0]
    if len(tail) < 2:
        return partial, F(0)
    ratios = [abs(tail[i + 1] / tail[i]) for i in range(len(tail) - 1)]
    r = max(ratios)
    if r >= 1:
        try:
            shown = "%.4g" % float(r)
        except OverflowError:
            shown = "~2^%d" % (r.numerator.bit_length()
                               - r.denominator.bit_length())
        raise ConvergenceDomainViolation(
            "series terms are not contracting (ratio %s)" % shown)
    return partial, abs(tail[-1]) * r / (1 - r)


def _asep_series(model, config, T):
    """Partial numerator/denominator of the weight with tail bounds."""
    p = model.params
    t = p["p"] / p["q"]
    w, v = _asep_ladder(model, T)
    L = len(config)
    den, den_bound = _series_tail([w[k] * v[k] for k in range(T)])
    y = _asep_apply(config, v, t, T)
    keep = T - L if L else T
    num, num_bound = _series_tail([w[k] * y[k] for k in range(keep)])
    if den == 0:
        raise TruncationInsufficient("pairing truncated to zero")
    value = num / den
    err = (num_bound + abs(value) * den_bound) / abs(den)
    return value, err


def _asep_reflected(model):
    p = model.params
    return catalog("asep", p=p["q"], q=p["p"], alpha=p["delta"],
                   gamma=p["beta"], beta=p["gamma"], delta=p["alpha"])


def _asep_weight(model, config):
    """Weight for the partially asymmetric chain.

    For p > q the chain is evaluated through its spatial reflection, so
    the returned values carry the reflected normalization; ratios, and
    everything assembled from them, are unaffected."""
    p = model.params
    if p["p"] > p["q"]:
        return _asep_weight(_asep_reflected(model), tuple(reversed(config)))
    last = None
    for T, cap in ((48, 10 ** 12), (72, 10 ** 24), (104, 10 ** 40)):
        value, err = _asep_series(model, config, T)
        rec = value.limit_denominator(cap)
        # agreement across growing caps rules out a rounded impostor
        if rec == last and abs(rec - value) <= err + F(1, cap):
            return rec
        last = rec
    raise TruncationInsufficient(
        "weight reconstruction did not stabilize for %s" % (config,))


def _asep_vector(model, L):
    p = model.params
    if p["p"] > p["q"]:
        refl = _asep_reflected(model)
        vec = _asep_vector(refl, L)
        out = [F(0)] * (1 << L)
        for idx, cfg in enumerate(all_configs(L, 2)):
            ridx = 0
            for s in reversed(cfg):
                ridx = (ridx << 1) | s
            out[idx] = vec[ridx]
        return out
    M = assemble_markov(model, L)
    try:
        for T, cap in ((48, 10 ** 12), (80, 10 ** 24), (128, 10 ** 40),
                       (192, 10 ** 64)):
            weights = [_asep_series(model, cfg, T)[0].limit_denominator(cap)
                       for cfg in all_configs(L, 2)]
            if all(x == 0 for x in weights):
                continue
            if all(x == 0 for x in M.matvec(weights)):
                total = sum(weights)
                return [x / total for x in weights]
        raise TruncationInsufficient(
            "no truncation up to 192 produced an exact null vector at L=%d"
            % L)
    except ConvergenceDomainViolation as exc:
        # The ladder pairing only converges for weakly driven boundary
        # rates; outside that region the state comes from the kernel of
        # the generator instead.
        log.warning("ladder series diverges (%s); solving the kernel "
                    "directly for L=%d", exc, L)
        return null_space_steady(M)


# ----------------------------------------------------------------------------
# truncated representations with certified bounds
# ----------------------------------------------------------------------------

class FockRep:
    """A truncated ladder representation of one model's algebra.

    `contract(config)` returns (value, bound): the weight evaluated in
    the truncation together with a certified bound on the truncation
    error (zero when the pairing is finitely supported and the value is
    exact).  The boundary vectors are exposed through `left_coeffs` and
    `right_coeffs` (first ladder copy for the two-species chain)."""

    def __init__(self, model_name, dim, left_coeffs, right_coeffs, contract):
        self.model = model_name
        self.dim = dim
        self.left_coeffs = tuple(left_coeffs)
        self.right_coeffs = tuple(right_coeffs)
        self._contract = contract

    def contract(self, config):
        return self._contract(tuple(int(t) for t in config))

    def __repr__(self):
        return "FockRep(%s, dim=%d)" % (self.model, self.dim)


def _tasep_rep(model, dim):
    al, be = model.params["alpha"], model.params["beta"]
    a, b = 1 / al - 1, 1 / be - 1
    w = [_pw(a, k) for k in range(dim)]
    v = [_pw(b, k) for k in range(dim)]

    def contract(config):
        L = len(config)
        x = list(v)
        for letter in reversed(config):
            y = [F(0)] * dim
            for k in range(dim):
                y[k] = x[k]
                if letter == 1 and k + 1 < dim:
                    y[k] += x[k + 1]          # lowering part of the D letter
                if letter == 0 and k - 1 >= 0:
                    y[k] += x[k - 1]          # raising part of the E letter
            x = y
        if b == 0:
            if dim < L + 2:
                raise TruncationInsufficient(
                    "need dim >= L+2 for the finitely supported pairing")
            return sum((w[k] * x[k] for k in range(dim)), F(0)), F(0)
        if a * b >= 1:
            raise ConvergenceDomainViolation(
                "pairing ratio ab = %s >= 1" % (a * b,))
        keep = dim - L if L else dim
        num, num_bound = _series_tail([w[k] * x[k] for k in range(keep)])
        den = (1 - _pw(a * b, dim)) / (1 - a * b)
        den_tail = _pw(a * b, dim) / (1 - a * b)
        value = num / den
        bound = 2 * (num_bound + abs(value) * den_tail) / den
        return value, bound

    return FockRep("tasep", dim, w, v, contract)


def _asep_rep(model, dim):
    w, v = _asep_ladder(model, dim)

    def contract(config):
        value, err = _asep_series(model, config, dim)
        return value, 2 * err

    return FockRep("asep", dim, w, v, contract)


def _two_tasep_rep(model, dim):
    a, b = model.params["a"], model.params["b"]
    variant = model.params["variant"]
    exact = variant == "M2" or b == 0
    left = [F(1)] * dim
    if variant == "M2" or b == 0:
        right = [F(1)] + [F(0)] * (dim - 1)
    else:
        right = [_pw(b / a, k) for k in range(dim)]

    def contract(config):
        L = len(config)
        if exact:
            if dim < L + 2:
                raise TruncationInsufficient("need dim >= L+2, got %d" % dim)
            return _tt_rep_value_exact(model, config, T=dim), F(0)
        r = abs(b / a)
        if r >= 1:
            raise ConvergenceDomainViolation(
                "right fugacity ratio %s >= 1" % (r,))
        num1, _ = _tt_rep_raw(model, config, dim)
        num2, _ = _tt_rep_raw(model, config, dim + 4)
        den = 1 / (1 - b / a)
        v1, v2 = num1 / den, num2 / den
        diff = abs(v2 - v1)
        return v2, 2 * (diff + diff * r / (1 - r))

    return FockRep("2-tasep", dim, left, right, contract)


def fock_rep(model, dim):
    """Truncated representation for the models that have a ladder one."""
    if dim < 2:
        raise ExlabError("truncation dimension must be at least 2")
    if model.name == "tasep":
        return _tasep_rep(model, dim)
    if model.name == "asep":
        return _asep_rep(model, dim)
    if model.name == "2-tasep":
        return _two_tasep_rep(model, dim)
    raise UnknownModel(
        "no truncated representation wired for %r" % (model.name,))


# ----------------------------------------------------------------------------
# public weight / vector / normalization dispatch
# ----------------------------------------------------------------------------

def mp_weight(model, config):
    """Stationary weight of one configuration, exact.

    Units: <<W|V>> = 1 in each model's own normalization.  Two caveats
    are documented on the engines: the symmetric chain on its resonance
    manifold and the reflected asymmetric chain return weights whose
    overall scale is conventional (ratios are always meaningful)."""
    config = _check_config(model, config)
    name = model.name
    if name == "tasep":
        return _tasep_value(model, config)
    if name == "ssep":
        return _ssep_value(model, config)
    if name == "asep":
        return _asep_weight(model, config)
    if name == "dissep":
        return _dissep_value(model, config)
    if name == "2-tasep":
        return _two_tasep_weight(model, config)
    if name == "multi-ssep":
        return _mssep_weight(model, config)
    raise UnknownModel("no matrix-product engine for %r" % (name,))


def mp_steady_vector(model, L):
    """The full stationary distribution at size L as a list indexed by
    configuration index, normalized to total weight 1."""
    if model.name == "asep":
        return _asep_vector(model, L)
    if model.name == "2-tasep":
        p = model.params
        if p["variant"] == "M2" or p["b"] == 0:
            weights = _tt_rep_vector(model, L)
        else:
            weights = [mp_weight(model, c) for c in all_configs(L, 3)]
    elif model.name == "dissep":
        weights = _dissep_weights(model, L)
    else:
        weights = [mp_weight(model, c) for c in all_configs(L, model.nstates)]
    total = sum(weights)
    if total == 0:
        raise ExlabError("weights sum to zero; degenerate parameters")
    return [x / total for x in weights]


def closed_Z(model, L):
    """Closed-form normalization sum, where one is known."""
    if L < 0:
        raise ExlabError("negative system size")
    name = model.name
    if name == "tasep":
        return _tasep_Z(L, model.params["alpha"], model.params["beta"])
    if name == "ssep":
        return _ssep_Z(model, L)
    if name == "dissep":
        return F(2) ** L
    if name == "2-tasep":
        return _two_tasep_Z(model, L)
    if name == "multi-ssep":
        return _mssep_Z(model, L)
    if name == "asep":
        raise ExlabError("no product closed form is wired for the "
                         "partially asymmetric normalization; sum mp_weight")
    raise UnknownModel("no matrix-product engine for %r" % (name,))


# ----------------------------------------------------------------------------
# declarative algebra data
# ----------------------------------------------------------------------------

@dataclass(frozen=True)
class MPAlgebra:
    """Declarative record of one model's stationary algebra.

    rules: ((pattern, ((coeff, replacement), ...)), ...) rewriting the
    pattern (a tuple of generator names) into combinations of words.
    left_rules / right_rules: combinations annihilated by the boundary
    vectors, as ((coeff, word), ...) tuples."""
    model: str
    generators: tuple
    rules: tuple
    left_rules: tuple
    right_rules: tuple
    normalization: str
    measure: str


def _de_algebra(model, c_ed, c_e, c_d, left, right):
    rules = ((("D", "E"),
              tuple((c, w) for c, w in
                    ((c_ed, ("E", "D")), (c_e, ("E",)), (c_d, ("D",))) if c)),)
    return MPAlgebra(
        model=model.name,
        generators=("E", "D"),
        rules=rules,
        left_rules=(left,),
        right_rules=(right,),
        normalization="<<W|V>> = 1",
        measure="P(tau) = <<W| prod_i (D if tau_i else E) |V>> / Z_L",
    )


def mp_algebra(model):
    """The stationary algebra behind `mp_weight`, as data."""
    name = model.name
    p = model.params
    if name == "tasep":
        al, be = p["alpha"], p["beta"]
        return _de_algebra(model, F(0), F(1), F(1),
                           ((F(1), ("E",)), (-1 / al, ())),
                           ((F(1), ("D",)), (-1 / be, ())))
    if name == "asep":
        pp, qq = p["p"], p["q"]
        al, be, ga, de = p["alpha"], p["beta"], p["gamma"], p["delta"]
        return _de_algebra(model, qq / pp, (pp - qq) / pp, (pp - qq) / pp,
                           ((al, ("E",)), (-ga, ("D",)), (-(pp - qq), ())),
                           ((be, ("D",)), (-de, ("E",)), (-(pp - qq), ())))
    if name == "ssep":
        al, be, ga, de = p["alpha"], p["beta"], p["gamma"], p["delta"]
        return _de_algebra(model, F(1), F(1), F(1),
                           ((al, ("E",)), (-ga, ("D",)), (-F(1), ())),
                           ((be, ("D",)), (-de, ("E",)), (-F(1), ())))
    if name == "dissep":
        phi, aa, bb, cc, dd = _dissep_data(model)
        rules = (
            (("G2", "G1"), ((phi, ("G1", "G2")),)),
            (("G3", "G2"), ((phi, ("G2", "G3")),)),
            (("G3", "G1"), ((F(1), ("G1", "G3")),)),
        )
        return MPAlgebra(
            model=name,
            generators=("G1", "G2", "G3"),
            rules=rules,
            left_rules=(((F(1), ("G1",)), (-cc, ("G2",)), (-aa, ("G3",))),),
            right_rules=(((F(1), ("G3",)), (-dd, ("G2",)), (-bb, ("G1",))),),
            normalization="<<W| G2^n |V>> = 1",
            measure="E = G1+G2+G3, D = G2-G1-G3; "
                    "P(tau) = <<W| prod (D or E) |V>> / 2^L",
        )
    if name == "2-tasep":
        gens = tuple("G%d" % i for i in range(1, 10))
        def nm(word):
            return tuple("G%d" % g for g in word)
        rules = [(nm(pat), ()) for pat in sorted(_TT_ZERO)]
        for pat, rep in sorted(_TT_BULK.items()):
            rules.append((nm(pat), tuple((c, nm(w)) for c, w in rep)))
        a, b = p["a"], p["b"]
        lact = _tt_left_actions(a)
        ract = _tt_right_actions(b, p["variant"])
        left_rules = tuple(
            tuple([(F(1), nm((g,)))] + [(-c, nm(w)) for c, w in combo])
            for g, combo in sorted(lact.items()))
        right_rules = tuple(
            tuple([(F(1), nm((g,)))] + [(-c, nm(w)) for c, w in combo])
            for g, combo in sorted(ract.items()))
        return MPAlgebra(
            model=name,
            generators=gens,
            rules=tuple(rules),
            left_rules=left_rules,
            right_rules=right_rules,
            normalization="<<W|V>> = 1",
            measure="X0 = 1+G9+G8+G7, X1 = G6+G5+G4, X2 = 1+G3+G2+G1; "
                    "P(tau) = <<W| prod X_{tau_i} |V>> / Z_L",
        )
    if name == "multi-ssep":
        N = p["N"]
        alphas, betas = p["alphas"], p["betas"]
        a, b = F(p["a"]), F(p["b"])
        lams = [F(x) - F(y) for x, y in zip(alphas, betas)]
        gens = tuple("X%d" % t for t in range(N + 1))
        rules = []
        for tau in range(N + 1):
            for sig in range(tau):
                rules.append(((gens[tau], gens[sig]),
                              ((F(1), (gens[sig], gens[tau])),
                               (lams[tau], (gens[sig],)),
                               (-lams[sig], (gens[tau],)))))
        left_rules = tuple(
            tuple([(-F(1), (gens[tau],)), (-a * lams[tau], ())]
                  + [(F(alphas[tau]), (g,)) for g in gens])
            for tau in range(N + 1))
        right_rules = tuple(
            tuple([(-F(1), (gens[tau],)), (b * lams[tau], ())]
                  + [(F(betas[tau]), (g,)) for g in gens])
            for tau in range(N + 1))
        return MPAlgebra(
            model=name,
            generators=gens,
            rules=tuple(rules),
            left_rules=left_rules,
            right_rules=right_rules,
            normalization="<<W| C^n |V>> = (a+b)_n with C = sum_t X_t, "
                          "<<W|V>> = 1",
            measure="P(tau) = <<W| prod X_{tau_i} |V>> / (a+b)_L",
        )
    raise UnknownModel("no matrix-product algebra for %r" % (name,))


# ----------------------------------------------------------------------------
# structural checks: exchange, boundary reflection, divergence form
# ----------------------------------------------------------------------------

def _dmul(u, v):
    out = {}
    for wu, cu in u.items():
        for wv, cv in v.items():
            key = wu + wv
            out[key] = out.get(key, F(0)) + cu * cv
    return out


def _dadd(u, v, sign=F(1)):
    out = dict(u)
    for w, c in v.items():
        out[w] = out.get(w, F(0)) + sign * c
    return {w: c for w, c in out.items() if c}


def _dscale(u, s):
    return {w: c * s for w, c in u.items() if c * s}


def _canon(combo, pair_rule):
    """Normal form of a word combination under a local pair rewriting."""
    pending = dict(combo)
    out = {}
    while pending:
        w, c = pending.popitem()
        if c == 0:
            continue
        for i in range(len(w) - 1):
            rep = pair_rule(w[i], w[i + 1])
            if rep is not None:
                head, tail = w[:i], w[i + 2:]
                for rc, rw in rep:
                    key = head + rw + tail
                    pending[key] = pending.get(key, F(0)) + c * rc
                break
        else:
            out[w] = out.get(w, F(0)) + c
    return {w: c for w, c in out.items() if c}


def _max_coeff(combo):
    return max((abs(c) for c in combo.values()), default=F(0))


def _de_pair_rule(c_ed, c_e, c_d):
    def rule(x, y):
        if x == "D" and y == "E":
            out = []
            if c_ed:
                out.append((c_ed, ("E", "D")))
            if c_e:
                out.append((c_e, ("E",)))
            if c_d:
                out.append((c_d, ("D",)))
            return out
        return None
    return rule


def _dissep_pair_rule(phi):
    order = {"G1": 1, "G2": 2, "G3": 3}
    def rule(x, y):
        if order[x] <= order[y]:
            return None
        if (x, y) == ("G2", "G1"):
            return [(phi, ("G1", "G2"))]
        if (x, y) == ("G3", "G2"):
            return [(phi, ("G2", "G3"))]
        return [(F(1), (y, x))]
    return rule


def _mssep_pair_rule(lams):
    def rule(x, y):
        tx, ty = int(x[1:]), int(y[1:])
        if tx <= ty:
            return None
        return [(F(1), (y, x)), (lams[tx], (y,)), (-lams[ty], (x,))]
    return rule


def _model_reduction(model):
    """(A-vector builder, pair rule) per model; None for the rep route."""
    name = model.name
    p = model.params
    if name in ("tasep", "asep", "ssep"):
        if name == "tasep":
            cs = (F(0), F(1), F(1))
        elif name == "asep":
            pp, qq = p["p"], p["q"]
            cs = (qq / pp, (pp - qq) / pp, (pp - qq) / pp)
        else:
            cs = (F(1), F(1), F(1))
        return _de_pair_rule(*cs)
    if name == "dissep":
        phi = _dissep_data(model)[0]
        return _dissep_pair_rule(phi)
    if name == "multi-ssep":
        alphas, betas = p["alphas"], p["betas"]
        lams = [F(x) - F(y) for x, y in zip(alphas, betas)]
        return _mssep_pair_rule(lams)
    return None


def _A_of_z(model, z):
    """Spectral-parameter dressing of the generators, one dict per state."""
    name = model.name
    z = F(z)
    if name in ("tasep", "asep"):
        return [{(): z - 1, ("E",): F(1)},
                {(): 1 / z - 1, ("D",): F(1)}]
    if name == "ssep":
        return [{(): -z, ("E",): F(1)}, {(): z, ("D",): F(1)}]
    if name == "dissep":
        return [{("G1",): z, ("G2",): F(1), ("G3",): 1 / z},
                {("G1",): -z, ("G2",): F(1), ("G3",): -1 / z}]
    if name == "2-tasep":
        return [{(): z * z, (9,): z, (8,): F(1), (7,): 1 / z},
                {(6,): z, (5,): F(1), (4,): 1 / z},
                {(3,): z, (2,): F(1), (1,): 1 / z, (): 1 / z ** 2}]
    if name == "multi-ssep":
        alphas, betas = model.params["alphas"], model.params["betas"]
        lams = [F(x) - F(y) for x, y in zip(alphas, betas)]
        return [{(): z * lams[t], ("X%d" % t,): F(1)}
                for t in range(len(lams))]
    raise UnknownModel("no spectral dressing for %r" % (name,))


def _X_dicts(model):
    name = model.name
    if name in ("tasep", "asep", "ssep"):
        return [{("E",): F(1)}, {("D",): F(1)}]
    if name == "dissep":
        return [{("G1",): F(1), ("G2",): F(1), ("G3",): F(1)},
                {("G1",): F(-1), ("G2",): F(1), ("G3",): F(-1)}]
    if name == "2-tasep":
        return [{(): F(1), (9,): F(1), (8,): F(1), (7,): F(1)},
                {(6,): F(1), (5,): F(1), (4,): F(1)},
                {(): F(1), (3,): F(1), (2,): F(1), (1,): F(1)}]
    if name == "multi-ssep":
        n = model.nstates
        return [{("X%d" % t,): F(1)} for t in range(n)]
    raise UnknownModel("no generator vector for %r" % (name,))


def _Xbar_dicts(model):
    """theta times the derivative of the dressing at the regular point."""
    name = model.name
    if name == "tasep":
        return [{(): F(-1)}, {(): F(1)}]
    if name == "asep":
        th = model.params["q"] - model.params["p"]
        return [{(): th}, {(): -th}]
    if name == "ssep":
        return [{(): F(-1)}, {(): F(1)}]
    if name == "dissep":
        lam = model.params["lam"]
        return [{("G1",): 2 * lam, ("G3",): -2 * lam},
                {("G1",): -2 * lam, ("G3",): 2 * lam}]
    if name == "2-tasep":
        return [{(): F(-2), (9,): F(-1), (7,): F(1)},
                {(6,): F(-1), (4,): F(1)},
                {(3,): F(-1), (1,): F(1), (): F(2)}]
    if name == "multi-ssep":
        alphas, betas = model.params["alphas"], model.params["betas"]
        return [{(): F(x) - F(y)} for x, y in zip(alphas, betas)]
    raise UnknownModel("no derivative vector for %r" % (name,))


def _boundary_vectors(model):
    """Left/right annihilator combos as coefficient vectors over
    (1, generators...)."""
    alg = mp_algebra(model)
    gens = list(alg.generators)
    def to_vec(rule):
        vec = [F(0)] * (1 + len(gens))
        for c, w in rule:
            if w == ():
                vec[0] += c
            else:
                vec[1 + gens.index(w[0])] += c
        return tuple(vec)
    left = [to_vec(r) for r in alg.left_rules]
    right = [to_vec(r) for r in alg.right_rules]
    return gens, left, right


def _affine_vec(combo, gens, name_of):
    vec = [F(0)] * (1 + len(gens))
    for w, c in combo.items():
        if w == ():
            vec[0] += c
        elif len(w) == 1:
            vec[1 + gens.index(name_of(w[0]))] += c
        else:
            raise ExlabError("boundary component is not affine: %r" % (w,))
    return tuple(vec)


def _in_span(rows, target, ncols):
    base = [tuple(r) for r in rows]
    r1 = bareiss_kernel(base, ncols)[0] if base else 0
    r2 = bareiss_kernel(base + [tuple(target)], ncols)[0]
    return r1 == r2


def _tt_name_to_int(w):
    return int(w[1:]) if isinstance(w, str) else w


def _tt_combo_residual(model, combo, T=6):
    """Max amplitude of a generator combination applied to interior kets
    of the truncated four-ladder representation (exact on the interior)."""
    a = model.params["a"]
    worst = F(0)
    interior = T - 3
    for key in itertools.product(range(interior + 1), repeat=4):
        out = {}
        for w, c in combo.items():
            part = {key: F(1)}
            for g in reversed(w):
                part = _tt_apply_gen(part, _tt_name_to_int(g), a, T)
            for k, v in part.items():
                out[k] = out.get(k, F(0)) + c * v
        m = max((abs(v) for v in out.values()), default=F(0))
        if m > worst:
            worst = m
    return worst


def _component_residual(model, combo, pair_rule):
    if pair_rule is not None:
        return _max_coeff(_canon(combo, pair_rule))
    return _tt_combo_residual(model, combo)


_ZF_SAMPLES_MULT = ((F(2), F(3)), (F(3), F(5)), (F(1, 2), F(5)))
_ZF_SAMPLES_ADD = ((F(3), F(2)), (F(5), F(2)), (F(2), F(7)))
_GZ_SAMPLES = (F(2), F(3), F(5), F(1, 2), F(7))


def _zf_report(model):
    mult = model.convention == "multiplicative"
    pair_rule = _model_reduction(model)
    n = model.nstates
    samples, residuals = [], []
    for z1, z2 in (_ZF_SAMPLES_MULT if mult else _ZF_SAMPLES_ADD):
        arg = z1 / z2 if mult else z1 - z2
        try:
            Rc = braid(rf_mat_eval(model.R, arg))
        except PoleAtSample:
            continue
        A1, A2 = _A_of_z(model, z1), _A_of_z(model, z2)
        left = [_dmul(A1[i], A2[j]) for i in range(n) for j in range(n)]
        right = [_dmul(A2[i], A1[j]) for i in range(n) for j in range(n)]
        worst = F(0)
        for row in range(n * n):
            comp = {}
            for col in range(n * n):
                c = Rc[row][col]
                if c:
                    comp = _dadd(comp, _dscale(left[col], c))
            comp = _dadd(comp, right[row], sign=F(-1))
            r = _component_residual(model, comp, pair_rule)
            if r > worst:
                worst = r
        samples.append((z1, z2))
        residuals.append(worst)
    if not samples:
        raise PoleAtSample("all exchange-check samples hit poles")
    return ResidualReport("zf[%s]" % model.name, samples, residuals)


def _gz_report(model, side):
    mult = model.convention == "multiplicative"
    K = model.K if side == "left" else model.Kbar
    gens, left_vecs, right_vecs = _boundary_vectors(model)
    span = left_vecs if side == "left" else right_vecs
    name_of = (lambda g: "G%d" % g) if model.name == "2-tasep" else (lambda g: g)
    n = model.nstates
    samples, residuals = [], []
    for z in _GZ_SAMPLES:
        try:
            Km = rf_mat_eval(K, z)
        except PoleAtSample:
            continue
        zbar = 1 / z if mult else -z
        Abar = _A_of_z(model, zbar)
        A = _A_of_z(model, z)
        worst = F(0)
        for i in range(n):
            comp = {}
            for j in range(n):
                if Km[i][j]:
                    comp = _dadd(comp, _dscale(Abar[j], Km[i][j]))
            comp = _dadd(comp, A[i], sign=F(-1))
            if comp:
                vec = _affine_vec(comp, gens, name_of)
                ok = _in_span(span, vec, 1 + len(gens))
                r = F(0) if ok else F(1)
            else:
                r = F(0)
            if r > worst:
                worst = r
        samples.append(z)
        residuals.append(worst)
        if len(samples) >= 3:
            break
    if not samples:
        raise PoleAtSample("all reflection-check samples hit poles")
    return ResidualReport("gz-%s[%s]" % (side, model.name), samples, residuals)


def check_zf_gz(model):
    """Exchange relation for the dressed generators and the boundary
    reflection conditions, reduced exactly inside the algebra.

    Returns one report for the exchange identity and one per boundary
    (the right one is skipped when the catalog carries no right
    reflection matrix)."""
    reports = [_zf_report(model)]
    reports.append(_gz_report(model, "left"))
    if model.Kbar is not None:
        reports.append(_gz_report(model, "right"))
    return reports


def check_telescopic(model):
    """Divergence form of the stationary identity.

    Bulk: m (X (x) X) = X (x) Xbar - Xbar (x) X reduced to zero in the
    algebra.  Boundaries: B X - Xbar and Bbar X + Xbar must lie in the
    span of the combinations annihilated by <<W| and |V>>."""
    pair_rule = _model_reduction(model)
    X = _X_dicts(model)
    Xb = _Xbar_dicts(model)
    n = model.nstates
    gens, left_vecs, right_vecs = _boundary_vectors(model)
    name_of = (lambda g: "G%d" % g) if model.name == "2-tasep" else (lambda g: g)
    samples, residuals = [], []
    for i in range(n):
        for j in range(n):
            row = i * n + j
            comp = {}
            for k in range(n):
                for l in range(n):
                    c = model.m[row][k * n + l]
                    if c:
                        comp = _dadd(comp, _dscale(_dmul(X[k], X[l]), c))
            comp = _dadd(comp, _dmul(X[i], Xb[j]), sign=F(-1))
            comp = _dadd(comp, _dmul(Xb[i], X[j]))
            samples.append("bulk[%d,%d]" % (i, j))
            residuals.append(_component_residual(model, comp, pair_rule))
    for i in range(n):
        comp = {}
        for j in range(n):
            if model.B[i][j]:
                comp = _dadd(comp, _dscale(X[j], model.B[i][j]))
        comp = _dadd(comp, Xb[i], sign=F(-1))
        if comp:
            vec = _affine_vec(comp, gens, name_of)
            ok = _in_span(left_vecs, vec, 1 + len(gens))
        else:
            ok = True
        samples.append("left[%d]" % i)
        residuals.append(F(0) if ok else F(1))
    for i in range(n):
        comp = {}
        for j in range(n):
            if model.Bbar[i][j]:
                comp = _dadd(comp, _dscale(X[j], model.Bbar[i][j]))
        comp = _dadd(comp, Xb[i])
        if comp:
            vec = _affine_vec(comp, gens, name_of)
            ok = _in_span(right_vecs, vec, 1 + len(gens))
        else:
            ok = True
        samples.append("right[%d]" % i)
        residuals.append(F(0) if ok else F(1))
    return ResidualReport("telescopic[%s]" % model.name, samples, residuals)
