"""Matrix-product engine oracles.

Frozen values, all cross-checked independently before being written down
here (combinatorial pushing sums done by hand, small-system null-space
vectors from the assembled generators, closed-form word evaluations):

  * open TASEP, <<W|EDEDD|V>> = (1/(alpha beta^2)) (1/alpha + 1/beta)
  * open TASEP weight of 110: 3 at alpha=beta=1, 3+3b+b^2+a in general
  * pushing sums: 110 -> 3+3b+b^2+a, 1010 -> 5+4b+b^2+4a+a^2+ab,
    the empty lattice -> (1+a)^L, the full lattice -> (1+b)^L
  * TASEP Z_3 = 14 at alpha=beta=1, steady vector (1,1,2,1)/5 at L=2
  * two-species TASEP at alpha=1/2, beta=1 (variants coincide): the L=3
    weight table w(000)=35, w(001)=10, w(110)=10, w(111)=1, w(122)=9,
    w(222)=14, w(220)=55, Z_3 = 490 = 7 * 5 * 14, Z_2 = 50 = 5 * 2 * 5,
    and the two closed word formulas they come from
  * bidirectional two-rate model (lambda = 1/2): L=3 weights against the
    null space, Z_L = 2^L under the middle-generator normalization
  * multi-species SEP: Z_L = (a+b)(a+b+1)...(a+b+L-1), equal to 6 for
    a=b=1, L=2; frozen Z_3 = 210 for the a=3, b=2 rate pack

The master check of the module is mp_steady_vector == null_space_steady,
exact rational equality, run at the sizes the engines are rated for.
"""

import itertools
from fractions import Fraction
from math import comb

import pytest
from hypothesis import given, settings, strategies as st

from exlab import models as mod
from exlab.errors import (
    ConvergenceDomainViolation,
    ExlabError,
    NonTerminatingRewrite,
)
from exlab.lattice import all_configs, assemble_markov, config_index, null_space_steady
from exlab.matrixproduct import (
    FockRep,
    MPAlgebra,
    check_telescopic,
    check_zf_gz,
    closed_Z,
    fock_rep,
    mp_algebra,
    mp_steady_vector,
    mp_weight,
    pushing_oracle,
)

F = Fraction


def tasep(alpha=F(1, 2), beta=F(1, 3)):
    return mod.catalog("tasep", alpha=alpha, beta=beta)


def ssep(alpha=F(1, 2), beta=F(1, 3), gamma=F(1, 5), delta=F(1, 7)):
    return mod.catalog("ssep", alpha=alpha, beta=beta, gamma=gamma, delta=delta)


def asep(p=F(2), q=F(1, 3), alpha=F(2), beta=F(2), gamma=F(1, 5),
         delta=F(1, 10)):
    # default rates keep the boundary ladder series inside its
    # contraction domain once the chain is reflected (p > q)
    return mod.catalog("asep", p=p, q=q, alpha=alpha, beta=beta,
                       gamma=gamma, delta=delta)


def dissep(lam=F(1, 3)):
    return mod.catalog("dissep", lam=lam, alpha=F(1, 3), beta=F(1, 4),
                       gamma=F(1, 5), delta=F(1, 6))


def two_tasep(alpha=F(1, 3), beta=F(1, 2), variant="M1"):
    return mod.catalog("2-tasep", alpha=alpha, beta=beta, variant=variant)


def mssep2():
    return mod.catalog("multi-ssep", N=2, alphas=[F(1, 2), F(1, 3), F(1, 6)],
                       betas=[F(1, 4), F(1, 4), F(1, 2)], a=3, b=2)


def steady_from_generator(model, L):
    return null_space_steady(assemble_markov(model, L))


def assert_master(model, L):
    """mp_steady_vector must equal the null-space vector exactly."""
    got = mp_steady_vector(model, L)
    want = steady_from_generator(model, L)
    assert got == want


CATALAN = [1, 1, 2, 5, 14, 42, 132]


class TestPushing:
    def test_empty_lattice(self):
        a, b = F(2, 3), F(1, 5)
        for L in range(1, 7):
            assert pushing_oracle((0,) * L, a, b) == (1 + a) ** L

    def test_full_lattice(self):
        a, b = F(2, 3), F(1, 5)
        for L in range(1, 7):
            assert pushing_oracle((1,) * L, a, b) == (1 + b) ** L

    def test_110_frozen(self):
        assert pushing_oracle((1, 1, 0), F(0), F(0)) == 3
        for a, b in [(F(1), F(0)), (F(1, 2), F(1, 3)), (F(3), F(2))]:
            assert pushing_oracle((1, 1, 0), a, b) == 3 + 3 * b + b * b + a

    def test_1010_frozen(self):
        for a, b in [(F(0), F(0)), (F(1, 2), F(1, 3)), (F(2), F(5))]:
            want = 5 + 4 * b + b * b + 4 * a + a * a + a * b
            assert pushing_oracle((1, 0, 1, 0), a, b) == want

    def test_matches_tasep_weights_up_to_L8(self):
        model = tasep(F(1, 2), F(1, 3))  # a = 1, b = 2
        a, b = model.params["a"], model.params["b"]
        for L in (3, 5, 8):
            for config in all_configs(L, 2):
                assert pushing_oracle(config, a, b) == mp_weight(model, config)

    @settings(max_examples=40, deadline=None)
    @given(st.lists(st.integers(0, 1), min_size=1, max_size=6),
           st.fractions(min_value=0, max_value=4, max_denominator=6),
           st.fractions(min_value=0, max_value=4, max_denominator=6))
    def test_matches_tasep_weights_random(self, config, a, b):
        model = mod.catalog("tasep", a=a, b=b)
        assert pushing_oracle(tuple(config), a, b) == mp_weight(model, tuple(config))


class TestTasepEngine:
    def test_ededd_frozen(self):
        for alpha, beta in [(F(1, 2), F(1, 3)), (F(3, 5), F(2, 7))]:
            model = tasep(alpha, beta)
            want = (1 / (alpha * beta ** 2)) * (1 / alpha + 1 / beta)
            assert mp_weight(model, (0, 1, 0, 1, 1)) == want

    def test_weight_110(self):
        assert mp_weight(tasep(1, 1), (1, 1, 0)) == 3
        model = tasep(F(1, 2), F(1, 3))
        a, b = model.params["a"], model.params["b"]
        assert mp_weight(model, (1, 1, 0)) == 3 + 3 * b + b * b + a

    def test_closed_Z_14(self):
        assert closed_Z(tasep(1, 1), 3) == 14

    def test_closed_Z_is_weight_sum(self):
        model = tasep(F(2, 5), F(3, 7))
        for L in range(1, 7):
            total = sum(mp_weight(model, c) for c in all_configs(L, 2))
            assert closed_Z(model, L) == total

    def test_steady_L2(self):
        assert mp_steady_vector(tasep(1, 1), 2) == [F(1, 5), F(1, 5), F(2, 5), F(1, 5)]

    def test_current_is_Z_ratio(self):
        # injection current alpha * P(first site empty), against Z_{L-1}/Z_L
        model = tasep(F(1, 2), F(1, 3))
        alpha = model.params["alpha"]
        for L in range(2, 7):
            steady = steady_from_generator(model, L)
            jin = alpha * sum(steady[config_index(c, 2)]
                              for c in all_configs(L, 2) if c[0] == 0)
            assert jin == closed_Z(model, L - 1) / closed_Z(model, L)


class TestMasterOracle:
    """Engine weights against null_space_steady, exact equality."""

    def test_tasep_L8(self):
        assert_master(tasep(F(1, 2), F(1, 3)), 8)

    def test_ssep_L6(self):
        assert_master(ssep(), 6)

    def test_ssep_equilibrium_L4(self):
        # alpha beta = gamma delta: the product-measure manifold
        assert_master(ssep(F(1, 2), F(1, 3), F(1, 4), F(2, 3)), 4)

    def test_asep_L4_L5_reflected(self):
        # p/q = 6 > 1, evaluated through the reflected chain
        model = asep()
        assert_master(model, 4)
        assert_master(model, 5)

    def test_asep_L5_direct(self):
        # weak injection, strong extraction: the ladder series contracts
        assert_master(asep(p=F(1, 4), q=1, alpha=F(1, 20), beta=F(1, 20),
                           gamma=F(9, 10), delta=F(9, 10)), 5)

    def test_asep_strongly_driven_kernel_fallback(self):
        # forward-driven rates push the ladder pairing outside its
        # contraction domain: single weights refuse, the vector falls
        # back to the generator kernel and stays exact
        model = asep(p=F(1, 4), q=1, alpha=F(1, 2), beta=F(1, 3),
                     gamma=F(1, 5), delta=F(1, 7))
        with pytest.raises(ConvergenceDomainViolation):
            mp_weight(model, (1, 0))
        assert_master(model, 3)

    def test_dissep_L3_L7(self):
        model = dissep()
        assert_master(model, 3)
        assert_master(model, 7)

    def test_dissep_halflambda_L3(self):
        assert_master(mod.catalog("dissep", lam=F(1, 2), alpha=F(1, 3),
                                  beta=F(1, 4), gamma=F(1, 5), delta=F(1, 6)), 3)

    def test_two_tasep_M2_L6(self):
        assert_master(two_tasep(variant="M2"), 6)

    def test_two_tasep_M1_open_outlet_L6(self):
        assert_master(two_tasep(beta=1, variant="M1"), 6)

    def test_two_tasep_M1_generic_L3(self):
        assert_master(two_tasep(variant="M1"), 3)

    def test_mssep_N2_L2_L5(self):
        model = mssep2()
        assert_master(model, 2)
        assert_master(model, 5)

    def test_mssep_N3_L5(self):
        model = mod.catalog("multi-ssep", N=3,
                            alphas=[F(1, 2), F(1, 4), F(1, 8), F(1, 8)],
                            betas=[F(1, 4), F(1, 4), F(1, 4), F(1, 4)],
                            a=2, b=3)
        assert_master(model, 5)

    def test_mssep_equilibrium_is_product_measure(self):
        rates = [F(1, 2), F(1, 3), F(1, 6)]
        model = mod.catalog("multi-ssep", N=2, alphas=rates, betas=rates,
                            a=2, b=5)
        steady = mp_steady_vector(model, 3)
        for config in all_configs(3, 3):
            want = F(1)
            for t in config:
                want *= rates[t]
            assert steady[config_index(config, 3)] == want


class TestClosedZ:
    def test_mssep_gamma_ratio(self):
        model = mod.catalog("multi-ssep", N=1, alphas=[F(1, 2), F(1, 2)],
                            betas=[F(1, 3), F(2, 3)], a=1, b=1)
        assert closed_Z(model, 2) == 6      # (a+b)(a+b+1)
        assert closed_Z(mssep2(), 3) == 210  # 5 * 6 * 7

    def test_mssep_equals_weight_sum(self):
        model = mssep2()
        for L in (1, 2, 3):
            total = sum(mp_weight(model, c) for c in all_configs(L, 3))
            assert closed_Z(model, L) == total

    def test_dissep_power_of_two(self):
        model = dissep()
        for L in (1, 2, 3, 5):
            assert closed_Z(model, L) == 2 ** L
            total = sum(mp_weight(model, c) for c in all_configs(L, 2))
            assert total == closed_Z(model, L)

    def test_two_tasep_special_point(self):
        for variant in ("M1", "M2"):
            model = two_tasep(alpha=F(1, 2), beta=1, variant=variant)
            assert closed_Z(model, 2) == 50
            assert closed_Z(model, 3) == 490
            for L in (1, 2, 3, 4):
                want = (2 * L + 1) * CATALAN[L] * CATALAN[L + 1]
                assert closed_Z(model, L) == want

    def test_two_tasep_generic_weight_sum(self):
        for model in (two_tasep(variant="M2"), two_tasep(beta=1, variant="M1")):
            for L in (1, 2, 3, 4):
                total = sum(mp_weight(model, c) for c in all_configs(L, 3))
                assert closed_Z(model, L) == total

    def test_ssep_weight_sum(self):
        for model in (ssep(), ssep(F(1, 2), F(1, 3), F(1, 4), F(2, 3))):
            for L in (1, 2, 3, 4):
                total = sum(mp_weight(model, c) for c in all_configs(L, 2))
                assert closed_Z(model, L) == total

    def test_asep_has_no_closed_form(self):
        with pytest.raises(ExlabError):
            closed_Z(asep(), 3)


class TestTwoTasepSpecialPoint:
    """alpha = 1/2, beta = 1: both variants coincide and words close."""

    @pytest.fixture(params=["M1", "M2"])
    def model(self, request):
        return two_tasep(alpha=F(1, 2), beta=1, variant=request.param)

    def test_frozen_weight_table(self, model):
        table = {
            (0, 0, 0): 35, (0, 0, 1): 10, (1, 1, 0): 10, (1, 1, 1): 1,
            (1, 2, 2): 9, (2, 2, 2): 14, (2, 2, 0): 55,
            (1, 1, 2): 4, (2, 1, 2): 4, (0, 1, 1): 3, (0, 2, 1): 3,
        }
        for config, value in table.items():
            assert mp_weight(model, config) == value

    def test_hole_power_words(self, model):
        # <<W| X0^p (anything in X1, X2) |V>> = ((2p+1)/(p+1)) C(2p, p)
        for p in range(1, 5):
            want = F(2 * p + 1, p + 1) * comb(2 * p, p)
            assert mp_weight(model, (0,) * p) == want
        assert mp_weight(model, (0, 0, 1)) == 10
        assert mp_weight(model, (0, 0, 2, 1)) == F(5, 3) * comb(4, 2)

    def test_fast_species_words(self, model):
        # word in X1, X2 ending with X1 then X2^p:
        # ((k+2)/(p+k+2)) C(2p+k+1, p)
        assert mp_weight(model, (2, 1, 2, 2)) == F(4, 6) * comb(7, 2)
        assert mp_weight(model, (1, 2, 2)) == F(3, 5) * comb(6, 2)
        assert mp_weight(model, (1, 1, 1)) == 1

    def test_weight_sum_is_catalan_Z(self, model):
        for L in (1, 2, 3):
            total = sum(mp_weight(model, c) for c in all_configs(L, 3))
            assert total == (2 * L + 1) * CATALAN[L] * CATALAN[L + 1]


class TestZfGz:
    @pytest.mark.parametrize("factory", [
        lambda: tasep(), lambda: ssep(), lambda: asep(), lambda: dissep(),
        lambda: mssep2(), lambda: two_tasep(variant="M1"),
        lambda: two_tasep(variant="M2"),
    ])
    def test_all_residuals_vanish(self, factory):
        for report in check_zf_gz(factory()):
            assert report.ok, "%s: %s" % (report.label, report.residuals)


class TestTelescopic:
    @pytest.mark.parametrize("factory", [
        lambda: tasep(), lambda: ssep(), lambda: asep(), lambda: dissep(),
        lambda: mssep2(), lambda: two_tasep(variant="M1"),
        lambda: two_tasep(variant="M2"),
    ])
    def test_reduces_to_zero(self, factory):
        report = check_telescopic(factory())
        assert report.ok, report.residuals


class TestFockReps:
    def test_tasep_finite_side_is_exact(self):
        model = tasep(F(1, 2), 1)           # b = 0: right vector has finite support
        rep = fock_rep(model, 6)
        for config in all_configs(4, 2):
            value, bound = rep.contract(config)
            assert bound == 0
            assert value == mp_weight(model, config)

    def test_tasep_generic_within_bound(self):
        model = tasep(F(2, 3), F(3, 4))     # a = 1/2, b = 1/3, ab < 1
        rep = fock_rep(model, 40)
        for config in [(1, 0), (1, 1, 0), (0, 1, 0, 1)]:
            value, bound = rep.contract(config)
            assert bound > 0
            assert abs(value - mp_weight(model, config)) <= bound

    def test_two_tasep_rep_matches_rewriting(self):
        model = two_tasep(variant="M2")
        rep = fock_rep(model, 6)
        for config in all_configs(3, 3):
            value, bound = rep.contract(config)
            assert bound == 0
            assert value == mp_weight(model, config)

    def test_asep_divergent_domain_raises(self):
        rep = fock_rep(asep(), 30)          # t = 6: series certification fails
        with pytest.raises(ConvergenceDomainViolation):
            rep.contract((1, 0))


class TestSignedExpansion:
    """Three-state reading of the TASEP weights.

    Expanding every D as 1 + d and every E as 1 + e and reducing each
    {e, d} word with de -> 1, left absorption e -> a, right absorption
    d -> b must re-sum to the TASEP weight.
    """

    @staticmethod
    def word_value(word, a, b):
        stack = []
        for letter in word:
            if letter == "e" and stack and stack[-1] == "d":
                stack.pop()
            else:
                stack.append(letter)
        value = F(1)
        for letter in stack:
            value *= a if letter == "e" else b
        return value

    def test_resums_to_weights(self):
        model = tasep(F(1, 2), F(1, 3))
        a, b = model.params["a"], model.params["b"]
        for L in range(1, 6):
            for config in all_configs(L, 2):
                total = F(0)
                for choice in itertools.product((0, 1), repeat=L):
                    word = [("d" if t else "e") for t, keep in zip(config, choice)
                            if keep]
                    total += self.word_value(word, a, b)
                assert total == mp_weight(model, config)


class TestAlgebraData:
    def test_tasep_algebra(self):
        alg = mp_algebra(tasep())
        assert isinstance(alg, MPAlgebra)
        assert alg.generators == ("E", "D")
        assert alg.rules
        assert "1" in alg.normalization    # <<W|V>> = 1 units
        assert alg.measure

    def test_two_tasep_algebra(self):
        alg = mp_algebra(two_tasep())
        assert len(alg.generators) == 9
        patterns = {rule[0] for rule in alg.rules}
        assert ("G3", "G4") in patterns     # a zero rule
        assert ("G1", "G4") in patterns     # an index-raising product

    def test_rewrite_step_cap(self):
        from exlab.matrixproduct import two_tasep_value
        model = two_tasep(variant="M2")
        with pytest.raises(NonTerminatingRewrite):
            two_tasep_value(model, (0, 1, 2), step_cap=3)

    def test_fock_rep_type(self):
        rep = fock_rep(tasep(F(1, 2), 1), 8)
        assert isinstance(rep, FockRep)
        assert rep.dim == 8
        assert rep.left_coeffs[0] == 1 and rep.right_coeffs[0] == 1
