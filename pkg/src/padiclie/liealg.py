"""Z_p-Lie algebras presented by structure constants.

An algebra of rank k stores brackets of basis pairs ``[b_i, b_j]`` for
i < j only; antisymmetry is synthesized, so the representation cannot
encode an antisymmetry violation.  The Jacobi identity is verified on
demand (exactly, at working precision).  Bracket tables are kept sparse
because the algebras of interest have very few nonzero basis brackets.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

from .errors import (
    ContextMismatchError,
    DimensionMismatchError,
    NonInvariantSubspaceError,
    StructureError,
)
from .padic import PAdicContext, PAdicMatrix, echelonize, solve_in_span


class LieVector:
    """A coordinate vector over the basis of a fixed algebra."""

    __slots__ = ("algebra", "coords")

    def __init__(self, algebra: "LieAlgebraZp", coords):
        coords = tuple(algebra.context.scalar(c) for c in coords)
        if len(coords) != algebra.rank:
            raise DimensionMismatchError(
                f"expected {algebra.rank} coordinates, got {len(coords)}"
            )
        self.algebra = algebra
        self.coords = coords

    def __add__(self, other: "LieVector") -> "LieVector":
        self._check(other)
        return LieVector(self.algebra, [a + b for a, b in zip(self.coords, other.coords)])

    def __sub__(self, other: "LieVector") -> "LieVector":
        self._check(other)
        return LieVector(self.algebra, [a - b for a, b in zip(self.coords, other.coords)])

    def __neg__(self) -> "LieVector":
        return LieVector(self.algebra, [-a for a in self.coords])

    def scale(self, c) -> "LieVector":
        c = self.algebra.context.scalar(c)
        return LieVector(self.algebra, [c * a for a in self.coords])

    def valuation(self):
        """Minimum coordinate valuation (inf for the zero vector)."""
        return min(c.valuation for c in self.coords)

    def is_zero_at_precision(self) -> bool:
        return self.valuation() >= self.algebra.context.N

    def agrees(self, other: "LieVector", digits: int | None = None) -> bool:
        self._check(other)
        return all(a.agrees(b, digits) for a, b in zip(self.coords, other.coords))

    def _check(self, other):
        if self.algebra is other.algebra:
            return
        if (
            self.algebra.rank != other.algebra.rank
            or not self.algebra.context.compatible(other.algebra.context)
        ):
            raise ContextMismatchError("vectors belong to incompatible algebras")

    def __repr__(self):
        names = self.algebra.basis_names
        parts = [
            f"({c!r})*{n}" for c, n in zip(self.coords, names) if not c.is_zero
        ]
        return " + ".join(parts) if parts else "0"


@dataclass
class JacobiReport:
    """Outcome of a Jacobi scan; ``triple`` pinpoints the first violation."""

    ok: bool
    triple: tuple[int, int, int] | None = None
    defect: tuple | None = None

    def __bool__(self):
        return self.ok


@dataclass
class DerivedSubalgebra:
    """Echelonized generating set of [L, L] with saturation data."""

    basis: list
    saturated: bool
    pivot_columns: list
    pivot_valuations: list

    @property
    def rank(self) -> int:
        return len(self.basis)


class LieAlgebraZp:
    """Rank-k Lie algebra over Z_p given by sparse structure constants."""

    def __init__(self, context: PAdicContext, basis_names, brackets, validate: bool = True):
        """``brackets`` maps (i, j) with i < j to a coordinate iterable."""
        self.context = context
        self.basis_names = tuple(basis_names)
        self.rank = len(self.basis_names)
        table = {}
        for (i, j), coords in brackets.items():
            if not (0 <= i < j < self.rank):
                raise StructureError(f"bad bracket index pair ({i}, {j})")
            vec = tuple(context.scalar(c) for c in coords)
            if len(vec) != self.rank:
                raise DimensionMismatchError("bracket coordinate length mismatch")
            pairs = tuple((l, c) for l, c in enumerate(vec) if not c.is_zero)
            if pairs:
                table[(i, j)] = pairs
        self._table = table
        self._metabelian: bool | None = None
        if validate:
            report = self.jacobi_check()
            if not report.ok:
                raise StructureError(f"Jacobi identity fails at triple {report.triple}")

    # -- constructors ----------------------------------------------------

    @classmethod
    def from_full_table(cls, context, basis_names, table, validate=True):
        """Build from a table that may list both orientations of a pair.

        Raises :class:`StructureError` if the two orientations are not
        antisymmetric or a diagonal bracket [b_i, b_i] is nonzero.
        """
        rank = len(basis_names)
        reduced = {}
        for (i, j), coords in table.items():
            vec = [context.scalar(c) for c in coords]
            if i == j:
                if any(not c.is_zero for c in vec):
                    raise StructureError(f"[b_{i}, b_{i}] must vanish")
                continue
            key = (i, j) if i < j else (j, i)
            signed = vec if i < j else [-c for c in vec]
            if key in reduced:
                if not all(a.agrees(b) for a, b in zip(reduced[key], signed)):
                    raise StructureError(
                        f"antisymmetry violated between ({i},{j}) and ({j},{i})"
                    )
            else:
                reduced[key] = signed
        return cls(context, basis_names, reduced, validate=validate)

    @classmethod
    def abelian(cls, context, rank):
        return cls(context, [f"b{i}" for i in range(rank)], {})

    # -- core operations ---------------------------------------------------

    def vector(self, coords) -> LieVector:
        return LieVector(self, coords)

    def zero_vector(self) -> LieVector:
        return LieVector(self, [0] * self.rank)

    def basis_vector(self, i: int) -> LieVector:
        return LieVector(self, [1 if t == i else 0 for t in range(self.rank)])

    def structure_constant(self, i: int, j: int) -> LieVector:
        """The vector [b_i, b_j] (any orientation)."""
        if i == j:
            return self.zero_vector()
        key = (i, j) if i < j else (j, i)
        coords = [self.context.zero] * self.rank
        for l, c in self._table.get(key, ()):
            coords[l] = c if i < j else -c
        return LieVector(self, coords)

    def bracket(self, u: LieVector, v: LieVector) -> LieVector:
        """Bilinear extension of the structure-constant table."""
        if u.algebra is not self or v.algebra is not self:
            raise ContextMismatchError("vectors belong to a different algebra")
        ctx = self.context
        acc = [ctx.zero] * self.rank
        uc, vc = u.coords, v.coords
        for (i, j), pairs in self._table.items():
            coeff = uc[i] * vc[j] - uc[j] * vc[i]
            if coeff.is_zero:
                continue
            for l, c in pairs:
                acc[l] = acc[l] + coeff * c
        return LieVector(self, acc)

    def _sparse_pair(self, i, j):
        """[b_i, b_j] as sparse (slot, scalar) pairs, any orientation."""
        if i == j:
            return ()
        key = (i, j) if i < j else (j, i)
        pairs = self._table.get(key, ())
        if i < j:
            return pairs
        return tuple((l, -c) for l, c in pairs)

    def _sparse_bracket_with_basis(self, vec_pairs, h):
        """[(sparse vector), b_h] staying sparse."""
        acc: dict = {}
        for l, c in vec_pairs:
            for t, s in self._sparse_pair(l, h):
                cur = acc.get(t)
                acc[t] = c * s if cur is None else cur + c * s
        return acc

    def jacobi_check(self) -> JacobiReport:
        """Scan basis triples i < j < h for the Jacobi identity.

        Triples meeting no stored bracket pair vanish term by term and
        are skipped; the remaining sums are evaluated through the sparse
        table, exactly at working precision.
        """
        N = self.context.N
        candidates = set()
        for (i, j) in self._table:
            for h in range(self.rank):
                if h != i and h != j:
                    candidates.add(tuple(sorted((i, j, h))))
        for (i, j, h) in sorted(candidates):
            acc: dict = {}
            for (a, b, c) in ((i, j, h), (j, h, i), (h, i, j)):
                for t, s in self._sparse_bracket_with_basis(
                    self._sparse_pair(a, b), c
                ).items():
                    cur = acc.get(t)
                    acc[t] = s if cur is None else cur + s
            if any(s.valuation < N for s in acc.values()):
                defect = [self.context.zero] * self.rank
                for t, s in acc.items():
                    defect[t] = s
                return JacobiReport(False, (i, j, h), tuple(defect))
        return JacobiReport(True)

    def derived_subalgebra(self) -> DerivedSubalgebra:
        """Echelon basis of the span of all basis brackets over Z_p."""
        vectors = []
        for (i, j) in sorted(self._table):
            vectors.append(self.structure_constant(i, j).coords)
        ech = echelonize(vectors, self.context)
        basis = [LieVector(self, row) for row in ech.rows]
        return DerivedSubalgebra(
            basis=basis,
            saturated=ech.saturated,
            pivot_columns=[c for (c, _) in ech.pivots],
            pivot_valuations=ech.pivot_valuations(),
        )

    def adjoint_matrix(self, y: LieVector, ideal_basis) -> PAdicMatrix:
        """Matrix of v -> [v, y] on the span of ``ideal_basis``.

        Row i holds the coordinates of [ideal_basis[i], y] expressed in
        ``ideal_basis``; raises if the span is not ad_y-invariant.
        """
        ech = echelonize([b.coords for b in ideal_basis], self.context, transform=True)
        if ech.rank != len(ideal_basis):
            raise NonInvariantSubspaceError("ideal basis is not independent at precision")
        rows = []
        for b in ideal_basis:
            w = self.bracket(b, y)
            ech_coeffs = solve_in_span(ech, w.coords, allow_qp=True)
            if ech_coeffs is None:
                raise NonInvariantSubspaceError(
                    "bracket leaves the span of the given basis"
                )
            coeffs = [self.context.zero] * len(ideal_basis)
            for c, trow in zip(ech_coeffs, ech.transform):
                for s in range(len(ideal_basis)):
                    coeffs[s] = coeffs[s] + c * trow[s]
            rows.append(coeffs)
        return PAdicMatrix(self.context, rows)

    def is_powerful(self) -> bool:
        """All structure constants in pL (4L when p = 2)."""
        need = 2 if self.context.p == 2 else 1
        for pairs in self._table.values():
            for _, c in pairs:
                if c.valuation < need:
                    return False
        return True

    def is_metabelian(self) -> bool:
        """True when the derived subalgebra is abelian (at precision)."""
        if self._metabelian is None:
            derived = self.derived_subalgebra().basis
            self._metabelian = all(
                self.bracket(a, b).is_zero_at_precision()
                for t, a in enumerate(derived)
                for b in derived[t + 1:]
            )
        return self._metabelian

    def scale(self, n: int) -> "LieAlgebraZp":
        """The algebra p^n L in the rescaled basis {p^n b_i}.

        Structure constants get multiplied by p^n.
        """
        if n < 0:
            raise ValueError("n must be nonnegative")
        brackets = {}
        for key, pairs in self._table.items():
            coords = [self.context.zero] * self.rank
            for l, c in pairs:
                coords[l] = c.mul_p_power(n)
            brackets[key] = coords
        return LieAlgebraZp(self.context, self.basis_names, brackets, validate=False)

    def min_structure_valuation(self):
        """Smallest structure-constant valuation (inf if abelian)."""
        vals = [c.valuation for pairs in self._table.values() for (_, c) in pairs]
        return min(vals) if vals else float("inf")

    def nonzero_bracket_pairs(self):
        return sorted(self._table)

    def sparse_table(self):
        return self._table

    # -- serialization ----------------------------------------------------

    def to_json_dict(self) -> dict:
        brackets = []
        for (i, j) in sorted(self._table):
            vec = self.structure_constant(i, j)
            brackets.append({
                "i": i,
                "j": j,
                "coords": [c.digits_str() for c in vec.coords],
            })
        return {
            "p": self.context.p,
            "precision": self.context.N,
            "rank": self.rank,
            "basis": list(self.basis_names),
            "brackets": brackets,
        }

    def save(self, path):
        with open(path, "w") as fh:
            json.dump(self.to_json_dict(), fh, indent=1)
            fh.write("\n")

    @classmethod
    def from_json_dict(cls, data: dict) -> "LieAlgebraZp":
        """Load and validate an algebra file (antisymmetry + Jacobi)."""
        try:
            ctx = PAdicContext(int(data["p"]), int(data["precision"]))
            names = list(data["basis"])
            if len(names) != int(data["rank"]):
                raise StructureError("rank does not match basis length")
            table = {}
            for rec in data["brackets"]:
                i, j = int(rec["i"]), int(rec["j"])
                coords = [
                    ctx.from_digits(c) if isinstance(c, str) else ctx.from_int(int(c))
                    for c in rec["coords"]
                ]
                table[(i, j)] = coords
        except (KeyError, TypeError, ValueError) as exc:
            raise StructureError(f"malformed algebra file: {exc}") from exc
        return cls.from_full_table(ctx, names, table, validate=True)

    @classmethod
    def load(cls, path) -> "LieAlgebraZp":
        with open(path) as fh:
            return cls.from_json_dict(json.load(fh))

    def __repr__(self):
        return (
            f"LieAlgebraZp(p={self.context.p}, N={self.context.N}, "
            f"rank={self.rank}, brackets={len(self._table)})"
        )


def is_powerful_algebra(L: LieAlgebraZp) -> bool:
    return L.is_powerful()
