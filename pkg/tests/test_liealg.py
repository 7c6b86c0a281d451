import json

import pytest

from padiclie import LieAlgebraZp, build_family, family_params, is_powerful_algebra
from padiclie.errors import StructureError


def family(ctx, k, d):
    return build_family(family_params(k, d, ctx))


def e(L, i):
    # basis vector of e_i in the family ordering (x, e_2, ..., e_k)
    return L.basis_vector(i - 1)


class TestBracket:
    def test_abelian_pair(self, ctx5):
        L = family(ctx5, 4, 7)
        assert L.bracket(e(L, 2), e(L, 3)).is_zero_at_precision()

    def test_weighted_pair(self, ctx5):
        L = family(ctx5, 4, 7)
        w = L.bracket(e(L, 2), L.basis_vector(0))
        expected = e(L, 4).scale(ctx5.from_int(7))
        assert w.agrees(expected)

    def test_alternating(self, ctx5, rng):
        L = family(ctx5, 5, 3)
        for _ in range(20):
            v = L.vector([ctx5.random_integer(rng) for _ in range(5)])
            assert L.bracket(v, v).is_zero_at_precision()

    def test_bilinearity(self, ctx5, rng):
        L = family(ctx5, 4, 2)
        for _ in range(20):
            u, v, w = (
                L.vector([ctx5.random_integer(rng) for _ in range(4)])
                for _ in range(3)
            )
            c = ctx5.random_integer(rng)
            lhs = L.bracket(u.scale(c) + v, w)
            rhs = L.bracket(u, w).scale(c) + L.bracket(v, w)
            assert lhs.agrees(rhs)


def dense_jacobi_scan(L):
    # brute-force oracle: scan every ordered triple with dense brackets
    for i in range(L.rank):
        for j in range(L.rank):
            for h in range(L.rank):
                bi, bj, bh = (L.basis_vector(t) for t in (i, j, h))
                total = L.bracket(L.bracket(bi, bj), bh)
                total = total + L.bracket(L.bracket(bj, bh), bi)
                total = total + L.bracket(L.bracket(bh, bi), bj)
                if not total.is_zero_at_precision():
                    return (i, j, h)
    return None


class TestJacobi:
    @pytest.mark.parametrize("k", range(3, 9))
    def test_family_passes(self, ctx5, rng, k):
        L = family(ctx5, k, ctx5.random_unit(rng))
        assert L.jacobi_check().ok
        assert dense_jacobi_scan(L) is None

    def test_abelian_passes(self, ctx5):
        assert LieAlgebraZp.abelian(ctx5, 4).jacobi_check().ok

    def test_antisymmetry_tamper_rejected(self, ctx5):
        d = ctx5.from_int(7)
        table = {
            (1, 0): [0, 0, 0, d + ctx5.one],   # claims [e2, x] = (d+1) e4
            (0, 1): [0, 0, 0, d],              # while [x, e2] = d e4
        }
        with pytest.raises(StructureError):
            LieAlgebraZp.from_full_table(ctx5, ["x", "e2", "e3", "e4"], table)

    def test_structure_tamper_passes_jacobi_but_breaks_family(self, ctx5):
        # dropping the e3 -> e3 entry keeps a valid Lie algebra but the
        # derived span loses a generator, so the invariant pipeline rejects it
        from padiclie import commensurability_invariant
        from padiclie.errors import InvariantPreconditionError

        d = ctx5.from_int(7)
        tampered = LieAlgebraZp(
            ctx5,
            ["x", "e2", "e3", "e4"],
            {(0, 1): [0, 0, 0, -d], (0, 3): [0, -1, 0, 0]},
        )
        assert tampered.jacobi_check().ok
        assert tampered.derived_subalgebra().rank == 2
        with pytest.raises(InvariantPreconditionError):
            commensurability_invariant(tampered, tampered.basis_vector(0))

    def test_violation_pinpointed(self, ctx5):
        # [b0, b1] = b2, [b0, b2] = b0 fails Jacobi on the only triple
        bad = LieAlgebraZp(
            ctx5,
            ["a", "b", "c"],
            {(0, 1): [0, 0, 1], (0, 2): [1, 0, 0]},
            validate=False,
        )
        report = bad.jacobi_check()
        assert not report.ok
        assert report.triple == (0, 1, 2)
        with pytest.raises(StructureError):
            LieAlgebraZp(ctx5, ["a", "b", "c"], {(0, 1): [0, 0, 1], (0, 2): [1, 0, 0]})


class TestDerivedSubalgebra:
    def test_family_saturated(self, ctx5, rng):
        L = family(ctx5, 4, ctx5.random_unit(rng))
        derived = L.derived_subalgebra()
        assert derived.rank == 3
        assert derived.saturated
        assert sorted(derived.pivot_columns) == [1, 2, 3]

    def test_abelian_empty(self, ctx5):
        assert LieAlgebraZp.abelian(ctx5, 3).derived_subalgebra().rank == 0

    def test_scaled_not_saturated(self, ctx5):
        L2 = family(ctx5, 4, 7).scale(2)
        derived = L2.derived_subalgebra()
        assert derived.rank == 3
        assert not derived.saturated
        assert derived.pivot_valuations == [2, 2, 2]
        # index inside the coordinate ideal: p^(2+2+2); the scaled basis
        # itself sits at index p^(2*3) in the unscaled ideal: p^12 total
        total = sum(derived.pivot_valuations) + 2 * derived.rank
        assert total == 12

    def test_scaled_bracket_oracle(self, ctx5, rng):
        # [p^2 L, p^2 L] = p^4 [L, L]: scaled structure constants are p^2 times
        L = family(ctx5, 4, ctx5.random_unit(rng))
        L2 = L.scale(2)
        for (i, j) in L.nonzero_bracket_pairs():
            base = L.structure_constant(i, j)
            scaled = L2.structure_constant(i, j)
            for a, b in zip(scaled.coords, base.coords):
                assert a.agrees(b.mul_p_power(2))

    @pytest.mark.parametrize("k", range(3, 13))
    def test_rank_k_minus_one(self, ctx5, rng, k):
        L = family(ctx5, k, ctx5.random_unit(rng))
        assert L.derived_subalgebra().rank == k - 1


class TestAdjoint:
    def test_rank3_matrix(self, ctx5):
        L = family(ctx5, 3, 7)
        A = L.adjoint_matrix(L.basis_vector(0), [e(L, 2), e(L, 3)])
        assert A[0, 0].is_zero and A[0, 1].agrees(ctx5.from_int(7))
        assert A[1, 0].agrees(ctx5.one) and A[1, 1].agrees(ctx5.one)

    def test_rank4_matrix(self, ctx5):
        L = family(ctx5, 4, 7)
        A = L.adjoint_matrix(L.basis_vector(0), [e(L, 2), e(L, 3), e(L, 4)])
        expected = [[0, 0, 7], [0, 1, 0], [1, 0, 0]]
        for i in range(3):
            for j in range(3):
                assert A[i, j].agrees(ctx5.from_int(expected[i][j]))

    def test_shifted_complement_scales(self, ctx5, rng):
        L = family(ctx5, 5, ctx5.random_unit(rng))
        ideal = [e(L, i) for i in range(2, 6)]
        A = L.adjoint_matrix(L.basis_vector(0), ideal)
        for _ in range(100):
            u = ctx5.random_unit(rng)
            coords = [u] + [ctx5.random_integer(rng) for _ in range(4)]
            y = L.vector(coords)  # y = u x + e with e in the ideal
            Ay = L.adjoint_matrix(y, ideal)
            assert Ay.agrees(A * u)

    def test_non_invariant_rejected(self, ctx5):
        from padiclie.errors import NonInvariantSubspaceError

        L = family(ctx5, 4, 3)
        with pytest.raises(NonInvariantSubspaceError):
            L.adjoint_matrix(L.basis_vector(0), [e(L, 2)])


class TestPowerfulScale:
    def test_family_not_powerful(self, ctx5, rng):
        assert not is_powerful_algebra(family(ctx5, 4, ctx5.random_unit(rng)))

    def test_scaled_powerful(self, ctx5, rng):
        assert is_powerful_algebra(family(ctx5, 4, ctx5.random_unit(rng)).scale(2))

    def test_abelian_powerful(self, ctx5):
        assert is_powerful_algebra(LieAlgebraZp.abelian(ctx5, 3))

    def test_p2_needs_two_digits(self, ctx2):
        L = family(ctx2, 3, 1)
        assert not is_powerful_algebra(L.scale(1))
        assert is_powerful_algebra(L.scale(2))

    def test_scale_zero_is_identity(self, ctx5):
        L = family(ctx5, 4, 7)
        L0 = L.scale(0)
        for (i, j) in L.nonzero_bracket_pairs():
            assert L0.structure_constant(i, j).agrees(L.structure_constant(i, j))

    def test_scale_composes(self, ctx5):
        L = family(ctx5, 4, 7)
        once_twice = L.scale(1).scale(1)
        straight = L.scale(2)
        for (i, j) in L.nonzero_bracket_pairs():
            assert once_twice.structure_constant(i, j).agrees(
                straight.structure_constant(i, j)
            )

    def test_scaled_entry(self, ctx5):
        L2 = family(ctx5, 4, 7).scale(2)
        w = L2.bracket(e(L2, 2), L2.basis_vector(0))
        assert w.coords[3].agrees(ctx5.from_int(7).mul_p_power(2))


class TestSerialization:
    def test_roundtrip(self, ctx5, tmp_path):
        L = family(ctx5, 5, 12)
        path = tmp_path / "algebra.json"
        L.save(path)
        back = LieAlgebraZp.load(path)
        assert back.rank == L.rank
        assert back.context == L.context
        for (i, j) in L.nonzero_bracket_pairs():
            assert back.structure_constant(i, j).agrees(L.structure_constant(i, j))

    def test_loader_validates(self, ctx5, tmp_path):
        data = family(ctx5, 4, 7).to_json_dict()
        data["brackets"][0]["coords"] = ["1"] * 3  # wrong length
        path = tmp_path / "bad.json"
        path.write_text(json.dumps(data))
        with pytest.raises(Exception):
            LieAlgebraZp.load(path)

    def test_integer_coords_accepted(self, ctx5, tmp_path):
        data = {
            "p": 5,
            "precision": 24,
            "rank": 3,
            "basis": ["x", "e2", "e3"],
            "brackets": [{"i": 0, "j": 1, "coords": [0, 0, -7]}],
        }
        path = tmp_path / "alg.json"
        path.write_text(json.dumps(data))
        L = LieAlgebraZp.load(path)
        assert L.bracket(e(L, 2), L.basis_vector(0)).coords[2].agrees(
            ctx5.from_int(7)
        )

    def test_metabelian_flag(self, ctx5):
        assert family(ctx5, 4, 7).is_metabelian()
