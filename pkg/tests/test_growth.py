import itertools

import pytest

from padiclie import PAdicContext, UniformGroup
from padiclie.errors import BudgetExceededError
from padiclie.group import frattini_rank, is_powerful_group, lower_p_series
from padiclie.growth import (
    build_quotient,
    count_subgroups,
    naive_subgroup_counts,
    whole_group,
    zeta_coefficients,
)


@pytest.fixture(scope="module")
def G33():
    return UniformGroup.family(3, 2, PAdicContext(3, 24))


@pytest.fixture(scope="module")
def G43():
    return UniformGroup.family(4, 2, PAdicContext(3, 24))


@pytest.fixture(scope="module")
def G32():
    return UniformGroup.family(3, 1, PAdicContext(2, 24))


class TestQuotientBasics:
    def test_level_zero_trivial(self, G33):
        Q = build_quotient(G33, 0)
        assert Q.order == 1
        assert list(Q.all_elements()) == [0]

    def test_level_one_elementary_abelian(self, G33):
        Q = build_quotient(G33, 1)
        assert Q.order == 27
        for x in Q.all_elements():
            assert Q.power_element(x, 3) == 0
        assert Q.is_abelian()

    def test_level_two_abelian_by_commutator_scan(self, G33):
        # commutator coordinates have valuation >= 2, so the level-2 law
        # is plain addition; scan every generator commutator exhaustively
        Q = build_quotient(G33, 2)
        gens = Q.generator_elements()
        for a in gens:
            for b in Q.all_elements():
                if Q.commutator_element(a, b) != 0:
                    pytest.fail("level-2 quotient is not abelian")

    def test_level_three_nonabelian(self, G33):
        Q = build_quotient(G33, 3)
        gens = Q.generator_elements()
        assert any(
            Q.commutator_element(a, b) != 0 for a in gens for b in gens
        )

    def test_budget_guard(self, G33):
        with pytest.raises(BudgetExceededError):
            build_quotient(G33, 20)

    def test_law_matches_group_on_lifts(self, G33, rng):
        Q = build_quotient(G33, 3)
        for _ in range(30):
            x = rng.randrange(Q.order)
            y = rng.randrange(Q.order)
            gx = G33.element(list(Q.decode(x)))
            gy = G33.element(list(Q.decode(y)))
            gz = G33.mul(gx, gy)
            assert Q.decode(Q.mul(x, y)) == tuple(c.lift(3) for c in gz.data)

    def test_group_axioms_exhaustive_small(self, G33):
        Q = build_quotient(G33, 1)
        elements = list(Q.all_elements())
        for x, y, z in itertools.product(elements[:27], repeat=3):
            assert Q.mul(Q.mul(x, y), z) == Q.mul(x, Q.mul(y, z))
        for x in elements:
            assert Q.mul(x, Q.inv_element(x)) == 0
            assert Q.mul(x, 0) == x

    def test_group_axioms_sampled(self, G33, rng):
        Q = build_quotient(G33, 3)
        for _ in range(200):
            x, y, z = (rng.randrange(Q.order) for _ in range(3))
            assert Q.mul(Q.mul(x, y), z) == Q.mul(x, Q.mul(y, z))
            assert Q.mul(x, Q.inv_element(x)) == 0

    def test_group_axioms_exhaustive_order_16(self, ctx2):
        # every quotient of order <= p^4 gets the exhaustive treatment
        G = UniformGroup.family(4, 1, ctx2)
        Q = build_quotient(G, 1)
        assert Q.order == 16
        elements = list(Q.all_elements())
        for x, y, z in itertools.product(elements, repeat=3):
            assert Q.mul(Q.mul(x, y), z) == Q.mul(x, Q.mul(y, z))
        for x in elements:
            assert Q.mul(x, Q.inv_element(x)) == 0


class TestLowerPSeries:
    def test_level_two(self, G33):
        rows = lower_p_series(build_quotient(G33, 2))
        assert [r.index for r in rows] == [27, 27]
        assert all(r.equals_power_chart for r in rows)

    def test_level_three(self, G33):
        rows = lower_p_series(build_quotient(G33, 3))
        assert [r.index for r in rows] == [27, 27, 27]
        assert all(r.equals_power_chart for r in rows)

    def test_commutators_inside_second_term(self, G33):
        Q = build_quotient(G33, 2)
        rows = lower_p_series(Q)
        assert rows[0].equals_power_chart
        p2 = Q.power_chart_image(1)
        gens = Q.generator_elements()
        for a in gens:
            for b in gens:
                assert Q.commutator_element(a, b) in p2


class TestPowerfulAndFrattini:
    def test_family_quotients_powerful(self, G33, G43):
        assert is_powerful_group(build_quotient(G33, 2))
        assert is_powerful_group(build_quotient(G43, 2))

    def test_elementary_abelian_powerful(self, G33):
        assert is_powerful_group(build_quotient(G33, 1))

    def test_frattini_rank(self, G33, G43):
        assert frattini_rank(build_quotient(G33, 2)) == 3
        assert frattini_rank(build_quotient(G43, 2)) == 4

    def test_frattini_rank_matches_enumeration(self, G33):
        # brute-force oracle: |Q| / |G^p [G,G]| = p^rank
        Q = build_quotient(G33, 2)
        seed = {Q.power_element(x, Q.p) for x in Q.all_elements()}
        gens = Q.generator_elements()
        for a in gens:
            for b in gens:
                seed.add(Q.commutator_element(a, b))
        phi = Q.closure(seed, conjugators=gens)
        assert Q.order // len(phi) == Q.p ** frattini_rank(Q)

    def test_needs_level_two(self, G33):
        with pytest.raises(ValueError):
            frattini_rank(build_quotient(G33, 1))


class TestCounting:
    def test_a_p_values(self, G33, G43, G32):
        for G, expected in [(G33, 13), (G43, 40), (G32, 7)]:
            Q = build_quotient(G, 2)
            counts, normals = count_subgroups(Q, 1)
            assert counts == [1, expected]
            assert normals == [1, expected]  # index p is always normal

    def test_normal_counts_bounded(self, G33):
        Q = build_quotient(G33, 2)
        counts, normals = count_subgroups(Q, 2)
        assert all(n <= c for n, c in zip(normals, counts))

    def test_count_normal_subgroups_helper(self, G33):
        from padiclie.growth import count_normal_subgroups

        Q = build_quotient(G33, 1)
        assert count_normal_subgroups(Q, 1) == [1, 13]

    @pytest.mark.parametrize("level", [1, 2])
    def test_layered_equals_naive_p3(self, G33, level):
        Q = build_quotient(G33, level)
        assert count_subgroups(Q, 2) == naive_subgroup_counts(Q, 2)

    @pytest.mark.parametrize("level", [1, 2, 3])
    def test_layered_equals_naive_p2(self, G32, level):
        Q = build_quotient(G32, level)
        assert count_subgroups(Q, 2) == naive_subgroup_counts(Q, 2)

    def test_layered_equals_naive_p3_rank4(self, G43):
        Q = build_quotient(G43, 1)
        assert count_subgroups(Q, 2) == naive_subgroup_counts(Q, 2)

    def test_naive_guard(self, G33):
        with pytest.raises(BudgetExceededError):
            naive_subgroup_counts(build_quotient(G33, 3), 1)

    def test_whole_group_helper(self, G33):
        Q = build_quotient(G33, 1)
        assert whole_group(Q).order == 27


class TestZetaCoefficients:
    def test_trivial_index(self, G33):
        table = zeta_coefficients(G33, 1)
        assert table.rows[0].count == 1
        assert table.rows[0].normal_count == 1

    def test_a_p_stabilizes(self, G33, G43, G32):
        for G, expected in [(G33, 13), (G43, 40), (G32, 7)]:
            table = zeta_coefficients(G, 1)
            row = table.rows[1]
            assert row.stabilized
            assert row.count == expected
            assert row.normal_count == expected
            p, m = G.context.p, G.rank
            assert expected == (p ** m - 1) // (p - 1)

    def test_csv_output(self, G33, tmp_path):
        table = zeta_coefficients(G33, 1)
        path = tmp_path / "growth.csv"
        table.to_csv(path)
        lines = path.read_text().strip().split("\n")
        assert lines[0] == "p,m,d_digest,i,a_p_i,a_normal_p_i,level,stabilized"
        assert len(lines) == 3

    def test_budget_marks_provisional(self, G33):
        table = zeta_coefficients(G33, 1, budget=30)
        assert not table.rows[1].stabilized

    def test_isospectral_probe_deep_agreement(self, ctx3):
        # parameters agreeing mod p^4 give literally identical quotients
        # at the tested levels, so the tables must match entrywise
        Ga = UniformGroup.family(3, 1, ctx3)
        Gb = UniformGroup.family(3, ctx3.from_int(1 + 3 ** 4), ctx3)
        ta = zeta_coefficients(Ga, 2)
        tb = zeta_coefficients(Gb, 2)
        assert ta.entries() == tb.entries()
        for level in (2, 3):
            qa = build_quotient(Ga, level)
            qb = build_quotient(Gb, level)
            assert count_subgroups(qa, 2) == count_subgroups(qb, 2)

    def test_small_index_blind_to_parameter(self, ctx3):
        # observation: a_p and a_{p^2} do not see d at all
        ta = zeta_coefficients(UniformGroup.family(3, 1, ctx3), 2)
        tb = zeta_coefficients(UniformGroup.family(3, 2, ctx3), 2)
        assert ta.entries() == tb.entries()
