import math
from fractions import Fraction

import pytest

from padiclie import (
    PAdicContext,
    bch_coefficients,
    bch_eval,
    build_family,
    family_params,
    metabelian_coefficients,
    truncation_degree,
)
from padiclie.bch import (
    _envelope_denominator,
    lie_word_to_assoc,
    metabelian_projection_of_series,
)
from padiclie.errors import (
    CertificateViolationError,
    NotPowerfulError,
    TruncationError,
)


def assoc_mul(f, g, cap):
    out = {}
    for w1, c1 in f.items():
        for w2, c2 in g.items():
            if len(w1) + len(w2) > cap:
                continue
            w = w1 + w2
            out[w] = out.get(w, Fraction(0)) + c1 * c2
    return {w: c for w, c in out.items() if c != 0}


def assoc_log_exp_oracle(D):
    """Independent expansion of log(exp X exp Y), truncated at degree D."""
    fact = [math.factorial(i) for i in range(D + 1)]
    ex = {"X" * a: Fraction(1, fact[a]) for a in range(D + 1)}
    ey = {"Y" * b: Fraction(1, fact[b]) for b in range(D + 1)}
    prod = assoc_mul(ex, ey, D)
    z = {w: c for w, c in prod.items() if w}
    out = {}
    power = {"": Fraction(1)}
    for j in range(1, D + 1):
        power = assoc_mul(power, z, D)
        for w, c in power.items():
            out[w] = out.get(w, Fraction(0)) + Fraction((-1) ** (j + 1), j) * c
    return {w: c for w, c in out.items() if c != 0}


def terms_as_assoc(series, degree):
    acc = {}
    for t in series.terms:
        if t.degree != degree:
            continue
        for w, c in lie_word_to_assoc(t.word).items():
            acc[w] = acc.get(w, Fraction(0)) + t.coeff * c
    return {w: c for w, c in acc.items() if c != 0}


class TestCoefficients:
    def test_degree_one_is_x_plus_y(self):
        series = bch_coefficients(5)
        deg1 = series.terms_of_degree(1)
        assert {(t.word, t.coeff) for t in deg1} == {("X", 1), ("Y", 1)}

    def test_degree_two(self):
        series = bch_coefficients(4)
        deg2 = series.terms_of_degree(2)
        assert [(t.word, t.coeff) for t in deg2] == [("XY", Fraction(1, 2))]

    def test_degree_three_against_classical(self):
        # expected: (1/12)[X,[X,Y]] + (1/12)[Y,[Y,X]]
        expected = {}
        for word, coeff in [("XYX", Fraction(-1, 12)), ("XYY", Fraction(1, 12))]:
            # [X,[X,Y]] = -[[X,Y],X], [Y,[Y,X]] = [[X,Y],Y]
            for w, c in lie_word_to_assoc(word).items():
                expected[w] = expected.get(w, Fraction(0)) + coeff * c
        got = terms_as_assoc(bch_coefficients(3), 3)
        assert got == {w: c for w, c in expected.items() if c != 0}

    @pytest.mark.parametrize("degree", range(1, 7))
    def test_each_degree_matches_associative_oracle(self, degree):
        oracle = assoc_log_exp_oracle(6)
        oracle_deg = {w: c for w, c in oracle.items() if len(w) == degree}
        assert terms_as_assoc(bch_coefficients(6), degree) == oracle_deg

    def test_terms_grouped_by_degree(self):
        series = bch_coefficients(6)
        degrees = [t.degree for t in series.terms]
        assert degrees == sorted(degrees)

    def test_cap_enforced(self):
        with pytest.raises(TruncationError):
            bch_coefficients(40)

    def test_json_dump(self, tmp_path):
        series = bch_coefficients(4)
        path = tmp_path / "series.json"
        series.save(path)
        assert path.read_text().startswith("{")


class TestMetabelianTable:
    @pytest.mark.parametrize("D", [4, 6, 8, 10])
    def test_matches_series_projection(self, D):
        proj = metabelian_projection_of_series(bch_coefficients(D))
        assert proj == metabelian_coefficients(D).table

    def test_leading_entries(self):
        table = metabelian_coefficients(4).table
        assert table[(0, 0)] == Fraction(1, 2)
        assert table[(1, 0)] == Fraction(-1, 12)
        assert table[(0, 1)] == Fraction(1, 12)

    def test_reaches_high_degree(self):
        table = metabelian_coefficients(30)
        assert any(a + b + 2 == 30 for (a, b) in table.table)


class TestTruncationDegree:
    def test_p5_example(self, ctx5):
        D, cert = truncation_degree(ctx5, 2)
        assert D <= 14
        # every discarded degree satisfies the bound
        for m in range(D + 1, D + 40):
            assert m * 2 - _envelope_denominator(5, m) >= 24

    def test_p3_needs_more(self, ctx3, ctx5):
        D3, _ = truncation_degree(ctx3, 2)
        D5, _ = truncation_degree(ctx5, 2)
        assert D3 > D5

    def test_precision_one_gives_abelian(self):
        ctx = PAdicContext(5, 1)
        D, _ = truncation_degree(ctx, 2)
        assert D == 1

    def test_rejects_small_v0_at_p2(self, ctx2):
        with pytest.raises(TruncationError):
            truncation_degree(ctx2, 1)

    def test_certificate_contents(self, ctx5):
        D, cert = truncation_degree(ctx5, 2)
        assert cert.p == 5 and cert.v0 == 2 and cert.D == D
        ms = [m for (m, _, _) in cert.bound_table]
        assert ms == list(range(2, D + 3))
        for m, actual in cert.actual_denominators:
            assert actual <= cert.envelope_denominator(m)

    def test_denominator_check_fails_loudly(self, ctx5):
        _, cert = truncation_degree(ctx5, 2)
        with pytest.raises(CertificateViolationError):
            cert.check_denominators(lambda p, m: 100)


def scaled_family(ctx, k, d):
    return build_family(family_params(k, d, ctx)).scale(2)


def hand_bch_degree3(L, u, v):
    # independent low-degree evaluation: u + v + 1/2 [u,v]
    # + 1/12 [[u,v],v] - 1/12 [[u,v],u]
    ctx = L.context
    w = L.bracket(u, v)
    half = ctx.from_fraction(Fraction(1, 2))
    twelfth = ctx.from_fraction(Fraction(1, 12))
    out = u + v + w.scale(half)
    out = out + L.bracket(w, v).scale(twelfth)
    out = out + L.bracket(w, u).scale(-twelfth)
    return out


class TestEval:
    def test_right_identity(self, ctx5, rng):
        L = scaled_family(ctx5, 4, ctx5.random_unit(rng))
        u = L.vector([ctx5.random_integer(rng) for _ in range(4)])
        assert bch_eval(L, u, L.zero_vector(), 10).agrees(u)
        assert bch_eval(L, L.zero_vector(), u, 10).agrees(u)

    def test_abelian_is_addition(self, ctx5, rng):
        from padiclie import LieAlgebraZp

        L = LieAlgebraZp.abelian(ctx5, 3)
        u = L.vector([ctx5.random_integer(rng) for _ in range(3)])
        v = L.vector([ctx5.random_integer(rng) for _ in range(3)])
        assert bch_eval(L, u, v, 8).agrees(u + v)

    def test_low_degree_hand_evaluation(self, ctx5):
        # product of the scaled e2 and x lines: leading correction is
        # (d p^4 / 2) on the e3 slot in ambient terms
        d = 7
        L = scaled_family(ctx5, 3, d)
        u = L.basis_vector(1)  # scaled e2
        v = L.basis_vector(0)  # scaled x
        D, _ = truncation_degree(ctx5, 2)
        got = bch_eval(L, u, v, D)
        approx = hand_bch_degree3(L, u, v)
        # degree >= 4 corrections have valuation >= 3*2 - 1 = 5 in chart coords
        assert got.agrees(approx, digits=5)
        half_d_p2 = ctx5.from_fraction(Fraction(d, 2)).mul_p_power(2)
        assert got.coords[2].agrees(half_d_p2, digits=4)

    def test_exact_inverse(self, ctx5, rng):
        L = scaled_family(ctx5, 5, ctx5.random_unit(rng))
        u = L.vector([ctx5.random_integer(rng) for _ in range(5)])
        res = bch_eval(L, u, -u, 12)
        assert all(c.is_zero for c in res.coords)

    @pytest.mark.parametrize("k", [3, 4, 5, 6])
    def test_associativity(self, ctx3, rng, k):
        L = scaled_family(ctx3, k, ctx3.random_unit(rng))
        D, _ = truncation_degree(ctx3, 2, target=ctx3.N + 2)
        for _ in range(5):
            a, b, c = (
                L.vector([ctx3.random_integer(rng) for _ in range(k)])
                for _ in range(3)
            )
            left = bch_eval(L, bch_eval(L, a, b, D), c, D)
            right = bch_eval(L, a, bch_eval(L, b, c, D), D)
            assert left.agrees(right)

    @pytest.mark.parametrize("D", [4, 6, 8])
    def test_general_equals_metabelian(self, ctx5, rng, D):
        L = scaled_family(ctx5, 4, ctx5.random_unit(rng))
        for _ in range(5):
            u = L.vector([ctx5.random_integer(rng) for _ in range(4)])
            v = L.vector([ctx5.random_integer(rng) for _ in range(4)])
            general = bch_eval(L, u, v, D, method="general")
            fast = bch_eval(L, u, v, D, method="metabelian")
            assert general.agrees(fast)

    def test_general_equals_metabelian_at_full_degree(self, ctx5, rng):
        L = scaled_family(ctx5, 3, ctx5.random_unit(rng))
        D, cert = truncation_degree(ctx5, 2, target=ctx5.N + 2)
        u = L.vector([ctx5.random_integer(rng) for _ in range(3)])
        v = L.vector([ctx5.random_integer(rng) for _ in range(3)])
        general = bch_eval(L, u, v, D, certificate=cert, method="general")
        fast = bch_eval(L, u, v, D, certificate=cert, method="metabelian")
        assert general.agrees(fast)

    def test_degree_monotone_precision(self, ctx5, rng):
        L = scaled_family(ctx5, 4, ctx5.random_unit(rng))
        u = L.vector([ctx5.random_integer(rng) for _ in range(4)])
        v = L.vector([ctx5.random_integer(rng) for _ in range(4)])
        for D in range(2, 8):
            lo = bch_eval(L, u, v, D)
            hi = bch_eval(L, u, v, D + 1)
            bound = (D + 1) * 2 - _envelope_denominator(5, D + 1) - 2
            assert lo.agrees(hi, digits=min(bound, ctx5.N))

    def test_requires_powerful(self, ctx5, rng):
        L = build_family(family_params(4, 3, ctx5))  # unscaled: not powerful
        u = L.vector([1, 0, 0, 0])
        with pytest.raises(NotPowerfulError):
            bch_eval(L, u, u, 6)

    def test_metabelian_method_guarded(self, ctx5):
        from padiclie import LieAlgebraZp

        # the rank-3 nilpotent algebra [a,b]=c is metabelian, so build a
        # non-metabelian one is hard at small rank; instead check the flag
        L = LieAlgebraZp.abelian(ctx5, 2)
        assert L.is_metabelian()
