"""Uniform pro-p groups carried by powerful Z_p-Lie algebras.

The group lives on the underlying set of a powerful (metabelian,
corank-1) algebra; elements are handled in two charts:

* the exponential chart ("bch"): coordinates are the Lie coordinates
  and multiplication is the truncated Campbell-Hausdorff series;
* the split chart: ``(a, t)`` stands for exp(a-part) * exp(t * x) with
  a supported on the abelian ideal, and multiplication only needs the
  matrix exponential of the scaled adjoint -- an independently checkable
  backend.

Multiplication in the exponential chart is compiled to pure integer
arithmetic modulo p^(N + headroom) (exactness analysis in the module it
mirrors); powers and roots act by scalar multiplication on the chart,
which is the one-parameter subgroup law and is cross-validated against
repeated multiplication in the tests.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

from . import bch as bch_mod
from .errors import (
    BackendDisagreementError,
    CertificateViolationError,
    ChartError,
    IntegralityError,
    NotPowerfulError,
    PrecisionExhaustedError,
    RootError,
)
from .families import build_family, family_params
from .liealg import LieAlgebraZp, LieVector
from .padic import PAdicContext, PAdicMatrix, _vp, mat_exp


class CompiledMetabelianLaw:
    """Integer-residue evaluator of the metabelian product law.

    Works modulo p^(digits + H) where H absorbs the p-part of the
    coefficient denominators; cells whose certified valuation floor
    reaches ``digits`` are dropped up front.
    """

    __slots__ = (
        "p", "digits", "headroom", "modulus", "out_modulus", "rank",
        "sc", "cells", "max_depth", "floors",
    )

    def __init__(self, algebra: LieAlgebraZp, table, digits: int):
        ctx = algebra.context
        p = ctx.p
        s = int(min(algebra.min_structure_valuation(), digits))
        alive = []
        headroom = 0
        floors: dict = {}
        for (a, b), coeff in sorted(table.table.items()):
            m = a + b + 2
            v = _vp(coeff.denominator, p) if coeff.denominator % p == 0 else 0
            floor = (m - 1) * s - v
            if floor >= digits:
                continue
            headroom = max(headroom, v)
            floors[m] = max(0, min(floors.get(m, floor), floor))
            alive.append((a, b, coeff, v))
        self.p = p
        self.digits = digits
        self.headroom = headroom
        self.modulus = p ** (digits + headroom)
        self.out_modulus = p ** digits
        self.rank = algebra.rank
        self.floors = floors
        sc = []
        for (i, j), pairs in algebra.sparse_table().items():
            row = tuple((l, c.lift(digits + headroom)) for (l, c) in pairs)
            sc.append((i, j, row))
        self.sc = tuple(sc)
        cells = []
        for a, b, coeff, v in alive:
            den_unit = coeff.denominator // p ** v
            c_int = coeff.numerator * pow(den_unit, -1, self.modulus) % self.modulus
            cells.append((a, b, c_int, v))
        cells.sort(key=lambda cell: (cell[0] + cell[1], cell[0]))
        self.cells = tuple(cells)
        self.max_depth = max((a + b for a, b, _, _ in cells), default=-1)

    def _bracket(self, u, v):
        P = self.modulus
        acc = [0] * self.rank
        for i, j, row in self.sc:
            coeff = (u[i] * v[j] - u[j] * v[i]) % P
            if coeff == 0:
                continue
            for l, c in row:
                acc[l] = (acc[l] + coeff * c) % P
        return acc

    def mul(self, u, v, check: bool = True):
        """Product of coordinate tuples, correct mod p^digits."""
        P = self.modulus
        p = self.p
        out = [(a + b) % P for a, b in zip(u, v)]
        if self.max_depth >= 0:
            grid = {(0, 0): self._bracket(u, v)}
            per_degree: dict = {}
            for a in range(self.max_depth + 1):
                for b in range(self.max_depth + 1 - a):
                    if (a, b) == (0, 0):
                        continue
                    parent = grid.get((a - 1, b)) if a else grid.get((a, b - 1))
                    if parent is None:
                        continue
                    w = self._bracket(parent, u if a else v)
                    if any(w):
                        grid[(a, b)] = w  # zero cells prune their subtree
            for a, b, c_int, v_den in self.cells:
                w = grid.get((a, b))
                if w is None:
                    continue
                m = a + b + 2
                acc = per_degree.get(m)
                if acc is None:
                    acc = per_degree[m] = [0] * self.rank
                for l in range(self.rank):
                    t = w[l] * c_int % P
                    if v_den:
                        t //= p ** v_den
                    acc[l] = (acc[l] + t) % P
            for m, acc in sorted(per_degree.items()):
                if check:
                    floor = min(self.floors.get(m, 0), self.digits)
                    for c in acc:
                        c %= P
                        if c and _vp(c, p) < floor:
                            raise CertificateViolationError(
                                f"degree-{m} contribution below certified floor {floor}"
                            )
                for l in range(self.rank):
                    out[l] = (out[l] + acc[l]) % P
        return tuple(c % self.out_modulus for c in out)


@dataclass(frozen=True)
class GroupElement:
    """A group point in one of the two charts.

    ``data`` is a tuple of coordinates for the bch chart, and a pair
    (ideal coordinates, line coordinate) for the split chart.
    """

    group: "UniformGroup"
    chart: str  # "bch" | "split"
    data: tuple

    def coords(self):
        if self.chart != "bch":
            raise ChartError("not a bch-chart element")
        return self.data

    def vector(self) -> LieVector:
        return LieVector(self.group.algebra, self.coords())


class UniformGroup:
    """Group structure on a powerful metabelian Z_p-Lie algebra."""

    def __init__(self, algebra: LieAlgebraZp, params=None):
        ctx = algebra.context
        if not algebra.is_powerful():
            hint = " (scale the algebra or raise the precision)" if ctx.p == 2 else ""
            raise NotPowerfulError(
                "group construction needs a powerful algebra" + hint
            )
        self.algebra = algebra
        self.context = ctx
        self.rank = algebra.rank
        self.params = params
        s = algebra.min_structure_valuation()
        self.scale_shift = int(min(s, ctx.N)) if s != math.inf else 2
        # certificate in the ambient frame: elements of p^s L have
        # coordinate valuation >= s over the unscaled basis, and chart
        # coordinates sit s digits lower, hence the raised target.
        self.D, self.certificate = bch_mod.truncation_degree(
            ctx, self.scale_shift, target=ctx.N + self.scale_shift
        )
        self._metabelian = algebra.is_metabelian()
        if self._metabelian:
            self._table = bch_mod.metabelian_coefficients(self.D)
            self.certificate.check_denominators(self._table.denominator_valuation)
            self._law = CompiledMetabelianLaw(algebra, self._table, ctx.N)
        else:
            if self.D > bch_mod.GENERAL_SERIES_DEGREE_CAP:
                raise NotPowerfulError(
                    "non-metabelian algebra needs the general series beyond its cap"
                )
            self._table = None
            self._law = None
        self._setup_split_chart()

    # -- construction helpers --------------------------------------------

    @classmethod
    def family(cls, m: int, d, context: PAdicContext, scale_exponent: int = 2) -> "UniformGroup":
        """The uniform group on p^scale_exponent * L_m(d)."""
        params = family_params(m, d, context)
        algebra = build_family(params).scale(scale_exponent)
        return cls(algebra, params=params)

    def _setup_split_chart(self):
        self.split_available = False
        self.split_reason = "algebra is not metabelian"
        self._adjoint = None
        self._orientation = 0
        if not self._metabelian:
            return
        derived = self.algebra.derived_subalgebra()
        cols = set(derived.pivot_columns)
        if derived.rank != self.rank - 1 or cols != set(range(1, self.rank)):
            self.split_reason = "derived span is not the coordinate ideal"
            return
        rows = []
        for i in range(1, self.rank):
            w = self.algebra.bracket(self.algebra.basis_vector(i), self.algebra.basis_vector(0))
            if not w.coords[0].is_zero:
                self.split_reason = "adjoint image leaves the ideal"
                return
            rows.append(list(w.coords[1:]))
        A = PAdicMatrix(self.context, rows)
        if A.min_valuation() < 2:
            self.split_reason = "adjoint valuations too small for mat_exp"
            return
        self._adjoint = A
        self._orientation = self._pin_orientation()
        self.split_available = True

    def _pin_orientation(self) -> int:
        """Fix the conjugation direction by matching the bch backend once."""
        ctx = self.context
        k = self.rank
        row = next(
            i for i in range(k - 1)
            if any(not e.is_zero for e in self._adjoint.entries[i])
        )
        a = tuple(ctx.one if i == 0 else ctx.zero for i in range(k - 1))
        b = tuple(ctx.one if i == row else ctx.zero for i in range(k - 1))
        t = ctx.one
        g = self._split_to_bch(a, t)
        h = self._split_to_bch(b, t)
        z = self._mul_bch_coords(g, h)
        target, _ = self._bch_to_split(z)
        for sigma in (-1, 1):
            c = self._split_law(a, t, b, sigma)
            if all(x.agrees(y) for x, y in zip(c, target)):
                return sigma
        raise BackendDisagreementError(
            "split chart cannot be aligned with the bch backend"
        )

    # -- elements -----------------------------------------------------------

    def element(self, coords) -> GroupElement:
        coords = tuple(self.context.scalar(c) for c in coords)
        if len(coords) != self.rank:
            raise IntegralityError(f"need {self.rank} coordinates")
        if any(c.valuation < 0 for c in coords):
            raise IntegralityError("group chart coordinates must lie in Z_p")
        return GroupElement(self, "bch", coords)

    def split_element(self, a, t) -> GroupElement:
        if not self.split_available:
            raise ChartError(f"split chart unavailable: {self.split_reason}")
        a = tuple(self.context.scalar(c) for c in a)
        if len(a) != self.rank - 1:
            raise IntegralityError(f"need {self.rank - 1} ideal coordinates")
        t = self.context.scalar(t)
        if any(c.valuation < 0 for c in a) or t.valuation < 0:
            raise IntegralityError("group chart coordinates must lie in Z_p")
        return GroupElement(self, "split", (a, t))

    @property
    def identity(self) -> GroupElement:
        return self.element([0] * self.rank)

    def generators(self):
        """The scaled basis as a topological generating set."""
        return [
            self.element([1 if t == i else 0 for t in range(self.rank)])
            for i in range(self.rank)
        ]

    def random_element(self, rng) -> GroupElement:
        return self.element(
            [self.context.random_integer(rng) for _ in range(self.rank)]
        )

    # -- the two multiplication backends -------------------------------------

    def _mul_bch_coords(self, u, v):
        # the compiled law is exact mod p^N, which is enough whenever some
        # coordinate is a unit; inputs with a positive valuation floor go
        # through the scalar path, whose relative-precision model keeps
        # the extra absolute digits that powers and roots rely on
        floor = min((c.val for c in u + v if c.unit), default=1)
        if self._law is not None and floor == 0:
            digits = self._law.digits + self._law.headroom
            ui = tuple(c.lift(digits) for c in u)
            vi = tuple(c.lift(digits) for c in v)
            res = self._law.mul(ui, vi)
            return tuple(self.context.from_int(r) for r in res)
        vec = bch_mod.bch_eval(
            self.algebra,
            LieVector(self.algebra, u),
            LieVector(self.algebra, v),
            self.D,
            certificate=self.certificate,
        )
        return vec.coords

    def _split_law(self, a, t, b, sigma=None):
        sigma = self._orientation if sigma is None else sigma
        factor = t if sigma > 0 else -t
        E = mat_exp(self._adjoint * factor)
        moved = E.row_vector_mul(list(b))
        return tuple(x + y for x, y in zip(a, moved))

    def _split_to_bch(self, a, t):
        coords = (self.context.zero,) + tuple(a)
        line = tuple(
            t if i == 0 else self.context.zero for i in range(self.rank)
        )
        return self._mul_bch_coords(coords, line)

    def _bch_to_split(self, coords):
        t = coords[0]
        minus_line = tuple(
            -t if i == 0 else self.context.zero for i in range(self.rank)
        )
        c = self._mul_bch_coords(coords, minus_line)
        if not c[0].is_zero and c[0].valuation < self.context.N:
            raise ChartError("line coordinate failed to cancel in chart conversion")
        return tuple(c[1:]), t

    def chart_convert(self, g: GroupElement, chart: str) -> GroupElement:
        if g.chart == chart:
            return g
        if chart == "split":
            if not self.split_available:
                raise ChartError(f"split chart unavailable: {self.split_reason}")
            a, t = self._bch_to_split(g.data)
            return GroupElement(self, "split", (a, t))
        if chart == "bch":
            a, t = g.data
            return GroupElement(self, "bch", self._split_to_bch(a, t))
        raise ChartError(f"unknown chart {chart!r}")

    def mul(self, g: GroupElement, h: GroupElement, backend: str = "bch") -> GroupElement:
        """Product of g and h; the result uses g's chart.

        ``backend="both"`` runs the two laws and raises
        :class:`BackendDisagreementError` if they differ mod p^N.
        """
        if g.group is not self or h.group is not self:
            raise IntegralityError("elements belong to a different group")
        if backend == "both":
            z1 = self.mul(g, h, backend="bch")
            z2 = self.mul(g, h, backend="split")
            a1, t1 = self._as_split(z1)
            a2, t2 = self._as_split(z2)
            if not (t1.agrees(t2) and all(x.agrees(y) for x, y in zip(a1, a2))):
                raise BackendDisagreementError(
                    "bch and split products differ beyond certified precision"
                )
            return z1
        if backend == "bch":
            u = self._as_bch(g)
            v = self._as_bch(h)
            out = self._mul_bch_coords(u, v)
            result = GroupElement(self, "bch", out)
        elif backend == "split":
            if not self.split_available:
                raise ChartError(f"split chart unavailable: {self.split_reason}")
            a, t = self._as_split(g)
            b, s = self._as_split(h)
            c = self._split_law(a, t, b)
            result = GroupElement(self, "split", (c, t + s))
        else:
            raise ValueError(f"unknown backend {backend!r}")
        return self.chart_convert(result, g.chart)

    def _as_bch(self, g):
        return g.data if g.chart == "bch" else self._split_to_bch(*g.data)

    def _as_split(self, g):
        return g.data if g.chart == "split" else self._bch_to_split(g.data)

    def inv(self, g: GroupElement) -> GroupElement:
        """Inverse: coordinate negation in the exponential chart."""
        if g.chart == "bch":
            return GroupElement(self, "bch", tuple(-c for c in g.data))
        a, t = g.data
        E = mat_exp(self._adjoint * (t if self._orientation < 0 else -t))
        moved = E.row_vector_mul([-c for c in a])
        return GroupElement(self, "split", (tuple(moved), -t))

    def commutator(self, g: GroupElement, h: GroupElement, backend: str = "bch") -> GroupElement:
        """g^-1 h^-1 g h."""
        left = self.mul(self.inv(g), self.inv(h), backend)
        right = self.mul(g, h, backend)
        return self.mul(left, right, backend)

    def power(self, g: GroupElement, z) -> GroupElement:
        """g^z for z in Z_p: scalar action on the exponential chart."""
        z = self.context.scalar(z)
        coords = self._as_bch(g)
        out = GroupElement(self, "bch", tuple(z * c for c in coords))
        return self.chart_convert(out, g.chart)

    def root(self, g: GroupElement, n: int) -> GroupElement:
        """The unique p^n-th root of an element of G^(p^n)."""
        coords = self._as_bch(g)
        if any(c.valuation < n for c in coords):
            raise RootError(f"element is not a p^{n}-th power")
        out = tuple(c.divide_by_p_power(n) for c in coords)
        return self.chart_convert(GroupElement(self, "bch", out), g.chart)

    # -- intrinsic Lie operations ------------------------------------------

    def _check_intrinsic_n(self, n: int):
        if n < 1 or n > self.context.N - 4:
            raise PrecisionExhaustedError(
                f"need 1 <= n <= N - 4 = {self.context.N - 4}"
            )

    def intrinsic_sum(self, g: GroupElement, h: GroupElement, n: int) -> LieVector:
        """Finite-n approximant of (g^(p^n) h^(p^n))^(p^-n)."""
        self._check_intrinsic_n(n)
        pn = self.context.from_valuation_unit(n, 1)
        z = self.mul(self.power(g, pn), self.power(h, pn))
        return self.root(z, n).vector()

    def intrinsic_bracket(self, g: GroupElement, h: GroupElement, n: int) -> LieVector:
        """Finite-n approximant of [g^(p^n), h^(p^n)]^(p^-2n)."""
        self._check_intrinsic_n(n)
        pn = self.context.from_valuation_unit(n, 1)
        c = self.commutator(self.power(g, pn), self.power(h, pn))
        return self.root(c, 2 * n).vector()

    def ambient_valuation(self, vec_or_coords):
        """Coordinate valuation shifted to the unscaled (ambient) frame."""
        coords = getattr(vec_or_coords, "coords", vec_or_coords)
        return min(c.valuation for c in coords) + self.scale_shift

    # -- serialization -------------------------------------------------------

    def descriptor(self) -> dict:
        cert = self.certificate
        return {
            "algebra": self.algebra.to_json_dict(),
            "backend": {
                "degree": self.D,
                "valuation_floor": cert.v0,
                "target_precision": cert.N,
                "split_orientation": self._orientation if self.split_available else None,
            },
            "certificate": {
                "bound_table": [list(r) for r in cert.bound_table],
                "actual_denominators": [list(r) for r in cert.actual_denominators],
            },
        }

    def save_descriptor(self, path):
        with open(path, "w") as fh:
            json.dump(self.descriptor(), fh, indent=1)
            fh.write("\n")

    def element_to_digits(self, g: GroupElement):
        return [c.digits_str() for c in self._as_bch(g)]

    def element_from_digits(self, digits) -> GroupElement:
        return self.element([self.context.from_digits(d) for d in digits])

    def __repr__(self):
        return (
            f"UniformGroup(p={self.context.p}, rank={self.rank}, D={self.D}, "
            f"split={'on' if self.split_available else 'off'})"
        )


# ---------------------------------------------------------------------------
# finite-quotient diagnostics (duck-typed over the quotient objects)
# ---------------------------------------------------------------------------


@dataclass
class LowerSeriesRow:
    i: int
    order: int
    index: int
    equals_power_chart: bool


def lower_p_series(Gq, i_max: int | None = None):
    """Indices of P_1 >= P_2 >= ... inside a finite quotient.

    P_(i+1) is generated by p-th powers and commutators [P_i, G]; each
    row also records whether P_(i+1) coincides with the image of the
    p^i-divisible chart sublattice.
    """
    rows = []
    current = frozenset(Gq.all_elements())
    gens = Gq.generator_elements()
    i = 1
    while len(current) > 1 and (i_max is None or i <= i_max):
        seed = {Gq.power_element(x, Gq.p) for x in current}
        for x in current:
            for g in gens:
                seed.add(Gq.commutator_element(x, g))
        nxt = Gq.closure(seed, conjugators=gens)
        rows.append(
            LowerSeriesRow(
                i=i,
                order=len(current),
                index=len(current) // len(nxt),
                equals_power_chart=(nxt == Gq.power_chart_image(i)),
            )
        )
        current = nxt
        i += 1
    return rows


def is_powerful_group(Gq) -> bool:
    """[G, G] <= G^p (G^4 for p = 2), checked inside the quotient."""
    exponent = 4 if Gq.p == 2 else Gq.p
    powers = {Gq.power_element(x, exponent) for x in Gq.all_elements()}
    subgroup = Gq.closure(powers)
    gens = Gq.generator_elements()
    return all(
        Gq.commutator_element(a, b) in subgroup for a in gens for b in gens
    )


def frattini_rank(Gq) -> int:
    """log_p |G : G^p [G, G]| via the elementary-abelian top quotient.

    G/G^p is elementary abelian for these powerful quotients, so the
    Frattini quotient is its quotient by the mod-p span of the generator
    commutators.
    """
    if Gq.level < 2:
        raise ValueError("need a quotient of level >= 2")
    p = Gq.p
    gens = Gq.generator_elements()
    vectors = []
    for a in gens:
        for b in gens:
            c = Gq.commutator_element(a, b)
            vec = [x % p for x in Gq.decode(c)]
            if any(vec):
                vectors.append(vec)
    rank = _fp_rank(vectors, p)
    return Gq.m - rank


def _fp_rank(vectors, p: int) -> int:
    work = [list(v) for v in vectors]
    if not work:
        return 0
    ncols = len(work[0])
    r = 0
    for col in range(ncols):
        piv = next((i for i in range(r, len(work)) if work[i][col] % p), None)
        if piv is None:
            continue
        work[r], work[piv] = work[piv], work[r]
        inv = pow(work[r][col], -1, p)
        for i in range(len(work)):
            if i != r and work[i][col] % p:
                f = work[i][col] * inv % p
                for j in range(ncols):
                    work[i][j] = (work[i][j] - f * work[r][j]) % p
        r += 1
    return r
