"""Model catalog: every integrability witness checked exactly.

The sample packs below are frozen rational points chosen to dodge the
poles of every catalog R/K matrix (e.g. the asep instance used here has
p/q = 6, so no ratio or product of samples may equal 6).
"""

from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from exlab import models as mod
from exlab.errors import (
    InvalidLabels,
    InvalidRates,
    NotHecke,
    PoleAtSample,
    UnknownModel,
)
from exlab.scalars import (
    RationalFunction,
    mat_add,
    mat_mul,
    mat_scale,
    mat_sub,
    rf_derivative_at,
)

F = Fraction
RF = RationalFunction

MULT_TRIPLES = [
    (F(2), F(3), F(5)),
    (F(1, 2), F(3), F(7)),
    (F(2, 3), F(5, 7), F(11, 3)),
    (F(4), F(9, 2), F(5, 3)),
    (F(7, 5), F(13, 4), F(3, 2)),
]
MULT_PAIRS = [
    (F(5), F(7)),
    (F(1, 2), F(5)),
    (F(2, 3), F(5, 7)),
    (F(4), F(9, 2)),
    (F(7, 5), F(13, 4)),
]
ADD_TRIPLES = [
    (F(2), F(7), F(1, 2)),
    (F(1, 3), F(4), F(9)),
    (F(5), F(1, 5), F(12)),
    (F(3, 2), F(8), F(21, 2)),
    (F(6), F(10), F(23)),
]
ADD_PAIRS = [
    (F(12), F(7)),
    (F(1, 3), F(4)),
    (F(5), F(1, 5)),
    (F(3, 2), F(8)),
    (F(6), F(10)),
]


def _builders():
    fam_l = dict(alpha=F(3, 2), gamma=F(1, 2), labels=[0, 0, 2, 2])
    fam_r = dict(alpha=F(4, 3), gamma=F(2, 3), labels=[1, 1, 2, 2])
    return {
        "asep": lambda: mod.catalog(
            "asep", p=F(2), q=F(1, 3), alpha=F(1, 2), beta=F(1, 3),
            gamma=F(1, 5), delta=F(1, 7)),
        "tasep": lambda: mod.catalog("tasep", alpha=F(1, 2), beta=F(1, 3)),
        "ssep": lambda: mod.catalog(
            "ssep", alpha=F(1, 2), beta=F(1, 3), gamma=F(1, 5), delta=F(1, 7)),
        "dissep": lambda: mod.catalog(
            "dissep", lam=F(1, 3), alpha=F(1, 2), beta=F(1, 3),
            gamma=F(1, 5), delta=F(1, 7)),
        "2-tasep-m1": lambda: mod.catalog(
            "2-tasep", alpha=F(1, 2), beta=F(1, 3), variant="M1"),
        "2-tasep-m2": lambda: mod.catalog(
            "2-tasep", alpha=F(1, 2), beta=F(1, 3), variant="M2"),
        "multi-ssep": lambda: mod.catalog(
            "multi-ssep", N=2, alphas=[F(1, 2), F(1, 3), F(1, 6)],
            betas=[F(1, 4), F(1, 4), F(1, 2)], a=F(3), b=F(2)),
        "masep": lambda: mod.catalog(
            "masep", N=2, p=F(2), q=F(1, 3),
            left_family=fam_l, right_family=fam_r),
    }


BUILDERS = _builders()
MODEL_IDS = sorted(BUILDERS)


def _spec(name):
    return BUILDERS[name]()


def _triples(spec):
    return MULT_TRIPLES if spec.convention == "multiplicative" else ADD_TRIPLES


def _pairs(spec):
    return MULT_PAIRS if spec.convention == "multiplicative" else ADD_PAIRS


class TestCatalog:
    @pytest.mark.parametrize("name", MODEL_IDS)
    def test_all_link_checks_pass(self, name):
        report = mod.check_links(_spec(name))
        assert report.ok, report.failures()

    def test_theta_values(self):
        assert _spec("asep").theta == F(1, 3) - 2
        assert _spec("tasep").theta == -1
        assert _spec("ssep").theta == 1
        assert _spec("dissep").theta == F(2, 3)  # 2 lambda
        assert _spec("masep").theta == F(1, 3) - 2

    def test_unknown_name(self):
        with pytest.raises(UnknownModel):
            mod.catalog("zrp")

    def test_float_rate_rejected(self):
        with pytest.raises(InvalidRates):
            mod.catalog("tasep", alpha=0.5, beta=F(1, 3))

    def test_negative_rate_rejected(self):
        with pytest.raises(InvalidRates):
            mod.catalog("ssep", alpha=F(-1, 2), beta=1, gamma=1, delta=1)

    def test_asep_equal_rates_rejected(self):
        with pytest.raises(InvalidRates):
            mod.catalog("asep", p=1, q=1, alpha=1, beta=1, gamma=0, delta=0)

    def test_tasep_maximal_injection_corner(self):
        # alpha=1 means a=0, so K00 collapses to z^2
        spec = mod.catalog("tasep", alpha=1, beta=F(1, 3))
        z = RF.x()
        assert spec.K[0][0] == z * z

    def test_tasep_accepts_a_b_form(self):
        s1 = mod.catalog("tasep", alpha=F(1, 2), beta=F(1, 4))
        s2 = mod.catalog("tasep", a=1, b=3)
        assert s1.K == s2.K and s1.Kbar == s2.Kbar

    def test_masep_n1_is_asep(self):
        one = mod.catalog("masep", N=1, p=F(2), q=F(1, 3))
        two = _spec("asep")
        assert one.m == two.m
        assert one.R == two.R
        assert one.theta == two.theta

    def test_mssep_single_species_is_ssep(self):
        # the two-state single-family instance matches ssep under
        # alpha0 = gamma/(alpha+gamma), a = 1/(alpha+gamma) and the
        # mirrored right-hand map
        al, ga, be, de = F(1, 2), F(1, 5), F(1, 3), F(1, 7)
        ssep = mod.catalog("ssep", alpha=al, beta=be, gamma=ga, delta=de)
        mssep = mod.catalog(
            "multi-ssep", N=1,
            alphas=[ga / (al + ga), al / (al + ga)],
            betas=[be / (be + de), de / (be + de)],
            a=1 / (al + ga), b=1 / (be + de))
        assert mssep.B == ssep.B
        assert mssep.Bbar == ssep.Bbar
        assert mssep.m == ssep.m

    def test_mssep_family_rates_must_sum_to_one(self):
        with pytest.raises(InvalidRates):
            mod.catalog("multi-ssep", N=1, alphas=[F(1, 2), F(1, 3)],
                        betas=[F(1, 2), F(1, 2)], a=1, b=1)

    def test_model_from_json_strings(self):
        doc = {"name": "asep",
               "params": {"p": 2, "q": "1/3", "alpha": "1/2",
                          "beta": "1/3", "gamma": "1/5", "delta": "1/7"}}
        spec = mod.model_from_json(doc)
        assert spec.theta == F(1, 3) - 2
        assert spec == _spec("asep")

    def test_model_from_json_needs_name(self):
        with pytest.raises(UnknownModel):
            mod.model_from_json({"params": {}})

    @pytest.mark.parametrize("name", MODEL_IDS)
    def test_braid_is_p_times_r(self, name):
        spec = _spec(name)
        n = spec.nstates
        P = mod.perm_matrix(n)
        prod = mat_mul([[RF.const(x) for x in row] for row in P], spec.R)
        assert mod.braid(spec.R) == tuple(tuple(row) for row in prod)


class TestDerivativeLinks:
    """Independent recomputation of the generator/R-matrix links; the
    catalog-wide version lives in check_links, this pins two instances
    by hand."""

    def test_tasep_bulk(self):
        spec = _spec("tasep")
        rc = mod.braid(spec.R)
        got = [[spec.theta * rf_derivative_at(rc[i][j], 1) for j in range(4)]
               for i in range(4)]
        assert [list(r) for r in spec.m] == got

    def test_ssep_left_boundary(self):
        spec = _spec("ssep")
        half = spec.theta / 2
        got = [[half * rf_derivative_at(spec.K[i][j], 0) for j in range(2)]
               for i in range(2)]
        assert [list(r) for r in spec.B] == got


class TestYangBaxter:
    @pytest.mark.parametrize("name", MODEL_IDS)
    def test_exact_zero(self, name):
        spec = _spec(name)
        report = mod.check_ybe(spec.R, _triples(spec), spec.convention)
        assert report.ok
        assert report.max_residual == 0

    @pytest.mark.parametrize("name", ["asep", "dissep", "multi-ssep"])
    def test_symbolic_in_first_variable(self, name):
        spec = _spec(name)
        pairs = [(z2, z3) for (_, z2, z3) in _triples(spec)]
        assert mod.check_ybe_symbolic(spec.R, pairs, spec.convention)

    def test_perturbed_entry_detected(self):
        spec = _spec("asep")
        bad = [list(row) for row in spec.R]
        bad[1][1] = bad[1][1] + RF.const(F(1, 100))
        report = mod.check_ybe(tuple(tuple(r) for r in bad), MULT_TRIPLES,
                               "multiplicative")
        assert not report.ok
        assert report.max_residual > 0

    def test_pole_sample_raises(self):
        spec = _spec("asep")  # R has a pole at z = p/q = 6
        with pytest.raises(PoleAtSample):
            mod.check_ybe(spec.R, [(F(6), F(1), F(2))] + MULT_TRIPLES[:4],
                          "multiplicative")

    def test_too_few_samples(self):
        spec = _spec("asep")
        with pytest.raises(ValueError):
            mod.check_ybe(spec.R, MULT_TRIPLES[:4], "multiplicative")


class TestReflection:
    @pytest.mark.parametrize("name", MODEL_IDS)
    def test_left_exact_zero(self, name):
        spec = _spec(name)
        if spec.K is None:
            pytest.skip("model has no left K")
        report = mod.check_reflection(spec.R, spec.K, "left", _pairs(spec),
                                      spec.convention)
        assert report.ok, report.max_residual

    @pytest.mark.parametrize("name", MODEL_IDS)
    def test_right_exact_zero(self, name):
        spec = _spec(name)
        if spec.Kbar is None:
            pytest.skip("model has no right K")
        report = mod.check_reflection(spec.R, spec.Kbar, "right", _pairs(spec),
                                      spec.convention)
        assert report.ok, report.max_residual

    @pytest.mark.parametrize("name", ["asep", "ssep"])
    def test_symbolic_left(self, name):
        spec = _spec(name)
        z2s = [z2 for (_, z2) in _pairs(spec)]
        assert mod.check_reflection_symbolic(spec.R, spec.K, "left", z2s,
                                             spec.convention)

    @pytest.mark.parametrize("name", ["asep", "ssep"])
    def test_symbolic_right(self, name):
        spec = _spec(name)
        z2s = [z2 for (_, z2) in _pairs(spec)]
        assert mod.check_reflection_symbolic(spec.R, spec.Kbar, "right", z2s,
                                             spec.convention)

    def test_perturbed_k_detected(self):
        spec = _spec("asep")
        bad = [list(row) for row in spec.K]
        bad[0][0] = bad[0][0] + RF.const(F(1, 100))
        report = mod.check_reflection(spec.R, tuple(tuple(r) for r in bad),
                                      "left", MULT_PAIRS, "multiplicative")
        assert not report.ok

    def test_bad_side_rejected(self):
        spec = _spec("asep")
        with pytest.raises(ValueError):
            mod.check_reflection(spec.R, spec.K, "middle", MULT_PAIRS,
                                 "multiplicative")


class TestHeckeBaxterisation:
    """p=4, q=1 and alpha=4, gamma=1 keep sqrt(pq) and sqrt(alpha*gamma)
    rational, so the generator normalisations stay exact."""

    def _asep41(self):
        return mod.catalog("asep", p=4, q=1, alpha=4, beta=F(1, 3),
                           gamma=1, delta=F(1, 7))

    def test_bulk_reproduces_asep(self):
        spec = self._asep41()
        S = tuple(tuple((spec.m[i][j] + (1 if i == j else 0)) * F(1, 2)
                        for j in range(4)) for i in range(4))
        assert mod.hecke_baxterise(S, F(2)) == mod.braid(spec.R)

    def test_bulk_reproduces_masep(self):
        spec = mod.catalog("masep", N=2, p=4, q=1)
        n = 9
        S = tuple(tuple((spec.m[i][j] + (1 if i == j else 0)) * F(1, 2)
                        for j in range(n)) for i in range(n))
        assert mod.hecke_baxterise(S, F(2)) == mod.braid(spec.R)

    def test_boundary_reproduces_asep_k(self):
        spec = self._asep41()
        W = tuple(tuple((spec.B[i][j] + (1 if i == j else 0)) * F(1, 2)
                        for j in range(2)) for i in range(2))
        u0_diff = F(1 - 4 + 4 - 1, 2)  # (q - p + alpha - gamma)/sqrt(alpha*gamma)
        assert mod.hecke_baxterise_boundary(W, F(2), u0_diff) == spec.K

    def test_generator_eigenvalues_are_checked(self):
        eye = tuple(tuple(F(1 if i == j else 0) for j in range(4))
                    for i in range(4))
        with pytest.raises(NotHecke):
            mod.hecke_baxterise(eye, F(2))
        # the identity does satisfy the relation at t = 1
        mod.hecke_baxterise(eye, F(1))

    def test_wrong_t_half_rejected(self):
        spec = self._asep41()
        S = tuple(tuple((spec.m[i][j] + (1 if i == j else 0)) * F(1, 2)
                        for j in range(4)) for i in range(4))
        with pytest.raises(NotHecke):
            mod.hecke_baxterise(S, F(3))


class TestMasepBoundary:
    P, Q = F(2), F(1, 3)

    def test_tilde_rates_frozen(self):
        # s = 2, s + q - p = 1/3
        at, gt = mod.masep_tilde_rates(F(3, 2), F(1, 2), self.P, self.Q)
        assert (at, gt) == (F(1, 4), F(1, 12))

    def test_tilde_rates_guard(self):
        with pytest.raises(InvalidRates):
            mod.masep_tilde_rates(F(1, 2), F(1, 5), self.P, self.Q)

    def test_n1_matrix_frozen(self):
        fam = mod.BoundaryFamily(alpha=F(3, 2), gamma=F(1, 2),
                                 s1=0, s2=0, f2=1, f1=1)
        B, K = mod.masep_boundary(fam, 1, self.P, self.Q)
        assert B == ((F(-3, 2), F(1, 12)), (F(3, 2), F(-1, 12)))

    def test_family_counts(self):
        assert mod.masep_family_count(1) == 1
        assert mod.masep_family_count(2) == 4
        assert mod.masep_family_count(3) == 10  # C(N+2, 3)

    def test_families_enumeration_n2(self):
        fams = mod.masep_families(2, F(3, 2), F(1, 2))
        seen = {(f.s1, f.s2, f.f2, f.f1, f.variant) for f in fams}
        assert seen == {
            (0, 0, 1, 1, "full"),
            (0, 0, 2, 2, "full"),
            (0, 0, 2, 2, "intermediate-empty"),
            (1, 1, 2, 2, "full"),
        }

    def test_invalid_labels(self):
        with pytest.raises(InvalidLabels):
            mod.BoundaryFamily(alpha=1, gamma=1, s1=0, s2=1, f2=2, f1=2)
        with pytest.raises(InvalidLabels):
            mod.BoundaryFamily(alpha=1, gamma=1, s1=1, s2=0, f2=2, f1=3)

    @pytest.mark.parametrize("labels,variant", [
        ((0, 0, 2, 2), "full"),
        ((0, 0, 2, 2), "intermediate-empty"),
        ((0, 0, 1, 1), "full"),
        ((1, 1, 2, 2), "full"),
    ])
    def test_b0_split_quadratic_algebra(self, labels, variant):
        al, ga = F(3, 2), F(1, 2)
        fam = mod.BoundaryFamily(alpha=al, gamma=ga, s1=labels[0],
                                 s2=labels[1], f2=labels[2], f1=labels[3],
                                 variant=variant)
        B, _ = mod.masep_boundary(fam, 2, self.P, self.Q)
        b0, bp, bm = mod.masep_b0_split(B, fam, 2, self.P, self.Q)
        at, gt = mod.masep_tilde_rates(al, ga, self.P, self.Q)

        def zero(X):
            return all(x == 0 for row in X for x in row)

        assert zero(mat_sub(mat_add(mat_add(b0, bp), bm), B))
        assert zero(mat_sub(
            mat_mul(b0, b0),
            mat_add(mat_add(mat_scale(b0, -(al + gt)), mat_scale(bp, at)),
                    mat_scale(bm, ga))))
        assert zero(mat_sub(mat_mul(bp, bp), mat_scale(bp, -ga)))
        assert zero(mat_sub(mat_mul(bm, bm), mat_scale(bm, -at)))
        assert zero(mat_sub(mat_mul(b0, bp), mat_scale(bp, -al)))
        assert zero(mat_sub(mat_mul(bp, b0), mat_scale(bp, -al)))
        assert zero(mat_sub(mat_mul(b0, bm), mat_scale(bm, -gt)))
        assert zero(mat_sub(mat_mul(bm, b0), mat_scale(bm, -gt)))
        assert zero(mat_mul(bp, bm))
        assert zero(mat_mul(bm, bp))

    @pytest.mark.parametrize("labels,variant", [
        ((0, 0, 1, 1), "full"),
        ((0, 0, 2, 2), "full"),
        ((0, 0, 2, 2), "intermediate-empty"),
        ((1, 1, 2, 2), "full"),
    ])
    def test_every_n2_family_solves_reflection(self, labels, variant):
        fam = mod.BoundaryFamily(alpha=F(3, 2), gamma=F(1, 2), s1=labels[0],
                                 s2=labels[1], f2=labels[2], f1=labels[3],
                                 variant=variant)
        spec = mod.catalog("masep", N=2, p=self.P, q=self.Q)
        _, K = mod.masep_boundary(fam, 2, self.P, self.Q)
        report = mod.check_reflection(spec.R, K, "left", MULT_PAIRS,
                                      "multiplicative")
        assert report.ok

    def test_right_boundary_is_reflected(self):
        fam = mod.BoundaryFamily(alpha=F(4, 3), gamma=F(2, 3),
                                 s1=1, s2=1, f2=2, f1=2)
        Bbar, Kbar = mod.masep_right_boundary(fam, 2, self.P, self.Q)
        # reversal of the left matrix for the mirrored labels (0,0,1,1)
        refl = mod.BoundaryFamily(alpha=F(4, 3), gamma=F(2, 3),
                                  s1=0, s2=0, f2=1, f1=1)
        B, _ = mod.masep_boundary(refl, 2, self.P, self.Q)
        n = 3
        assert Bbar == tuple(
            tuple(B[n - 1 - i][n - 1 - j] for j in range(n))
            for i in range(n))
        spec = mod.catalog("masep", N=2, p=self.P, q=self.Q)
        report = mod.check_reflection(spec.R, Kbar, "right", MULT_PAIRS,
                                      "multiplicative")
        assert report.ok


# random-rate sweeps: the link checks are the integrability contract, so
# they must hold on any admissible rate tuple, not just the frozen ones
small_rates = st.fractions(min_value=F(1, 6), max_value=4, max_denominator=6)


class TestRandomRates:
    @settings(max_examples=15, deadline=None)
    @given(small_rates, small_rates, small_rates, small_rates,
           small_rates, small_rates)
    def test_asep_links(self, p, q, al, be, ga, de):
        if p == q:
            q = q + F(1, 7)
        spec = mod.catalog("asep", p=p, q=q, alpha=al, beta=be,
                           gamma=ga, delta=de)
        assert mod.check_links(spec).ok

    @settings(max_examples=15, deadline=None)
    @given(small_rates, small_rates, small_rates, small_rates)
    def test_ssep_links(self, al, be, ga, de):
        spec = mod.catalog("ssep", alpha=al, beta=be, gamma=ga, delta=de)
        assert mod.check_links(spec).ok

    @settings(max_examples=10, deadline=None)
    @given(small_rates, small_rates)
    def test_dissep_reflection(self, lam, al):
        spec = mod.catalog("dissep", lam=lam, alpha=al, beta=F(1, 3),
                           gamma=F(1, 5), delta=F(1, 7))
        assert mod.check_links(spec).ok
