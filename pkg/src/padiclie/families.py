"""The one-parameter families of metabelian Z_p-Lie algebras.

For a unit d and rank k >= 3 the algebra has basis (x, e_2, ..., e_k);
the e-span is an abelian ideal and the bracket with x permutes the e's,
with a single d-weighted entry.  The normalized adjoint data

    (tr A(y))^(1-k) * det A(y)

computed for any complement generator y of the derived ideal recovers
(-1)^floor((k-1)/2) * d, which separates non-isomorphic members of the
family and certifies non-commensurability of the associated groups.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import FamilyParameterError, InvariantPreconditionError
from .liealg import LieAlgebraZp, LieVector
from .padic import PAdicContext, PAdicMatrix, PAdicScalar, echelonize, mat_det_trace


@dataclass(frozen=True)
class FamilyParams:
    """Validated parameters (k, d) for one family member."""

    k: int
    d: PAdicScalar
    context: PAdicContext

    def __post_init__(self):
        if self.k < 3:
            raise FamilyParameterError(f"rank k must be >= 3 (got {self.k})")
        d = self.context.scalar(self.d)
        if d.valuation != 0:
            raise FamilyParameterError("parameter d must be a unit of Z_p")
        object.__setattr__(self, "d", d)

    @property
    def sign_exponent(self) -> int:
        return ((self.k - 1) // 2) % 2


@dataclass
class InvariantValue:
    """The normalized invariant together with the recovered parameter."""

    value: PAdicScalar
    sign_exponent: int
    recovered_d: PAdicScalar


@dataclass
class DistinguishResult:
    verdict: str  # "separated" | "indistinguishable_at_precision"
    left: InvariantValue
    right: InvariantValue
    agreement_valuation: float

    @property
    def separated(self) -> bool:
        return self.verdict == "separated"


def family_params(k: int, d, context: PAdicContext) -> FamilyParams:
    return FamilyParams(k, context.scalar(d), context)


def build_family(params: FamilyParams) -> LieAlgebraZp:
    """Construct the rank-k family member with parameter d.

    Basis order is (x, e_2, ..., e_k); the stored pair (0, j) holds
    [x, e_j] = -[e_j, x].
    """
    k, d, ctx = params.k, params.d, params.context
    names = ["x"] + [f"e{i}" for i in range(2, k + 1)]

    def e_slot(i):  # basis index of e_i
        return i - 1

    def unit_vec(slot, coeff):
        coords = [ctx.zero] * k
        coords[slot] = coeff
        return coords

    brackets = {}
    one = ctx.one
    if k % 2 == 1:  # k = 2n + 1
        n = (k - 1) // 2
        images = {2: unit_vec(e_slot(2 * n + 1), d)}
        for i in range(3, 2 * n + 1):
            images[i] = unit_vec(e_slot(2 * n - i + 3), one)
        last = [ctx.zero] * k
        last[e_slot(2)] = one
        last[e_slot(2 * n + 1)] = one
        images[2 * n + 1] = last
    else:  # k = 2n + 2
        n = (k - 2) // 2
        images = {2: unit_vec(e_slot(2 * n + 2), d)}
        for i in range(3, 2 * n + 3):
            images[i] = unit_vec(e_slot(2 * n - i + 4), one)
    for i, image in images.items():
        brackets[(0, e_slot(i))] = [-c for c in image]  # stored as [x, e_i]
    return LieAlgebraZp(ctx, names, brackets, validate=False)


def family_adjoint(params: FamilyParams) -> PAdicMatrix:
    """Matrix of ad x restricted to the e-span, rows = images of e_i."""
    L = build_family(params)
    ideal = [L.basis_vector(i) for i in range(1, params.k)]
    return L.adjoint_matrix(L.basis_vector(0), ideal)


def _saturated_hull(L: LieAlgebraZp):
    """Saturation of the derived span: echelon rows with pivots divided out."""
    derived = L.derived_subalgebra()
    hull = []
    for vec, pval in zip(derived.basis, derived.pivot_valuations):
        if pval:
            hull.append(LieVector(L, [c.divide_by_p_power(pval) for c in vec.coords]))
        else:
            hull.append(vec)
    return derived, hull


def commensurability_invariant(L: LieAlgebraZp, y: LieVector | None = None) -> InvariantValue:
    """Normalized determinant of ad y on the derived ideal.

    Requires the derived subalgebra to have corank 1; ``y`` defaults to a
    basis vector generating the complement line.  Works with the
    saturation of the derived span, so p-power-scaled algebras and
    complements with nonzero valuation are accepted (the quantity is
    homogeneous of degree 0 in y).  Raises when the trace of A(y)
    vanishes at working precision.
    """
    ctx = L.context
    derived, hull = _saturated_hull(L)
    k = L.rank
    if derived.rank != k - 1:
        raise InvariantPreconditionError(
            f"derived subalgebra has rank {derived.rank}, need corank 1"
        )
    if y is None:
        ech = echelonize([v.coords for v in hull], ctx)
        free = ech.free_columns()
        if len(free) != 1:
            raise InvariantPreconditionError("no unique complement column")
        y = L.basis_vector(free[0])
    A = L.adjoint_matrix(y, hull)
    det, tr = mat_det_trace(A)
    if tr.is_zero:
        raise InvariantPreconditionError(
            "trace of the adjoint vanishes at working precision"
        )
    value = det * tr.inverse() ** (k - 1)
    sign = ((k - 1) // 2) % 2
    recovered = value if sign == 0 else -value
    return InvariantValue(value=value, sign_exponent=sign, recovered_d=recovered)


def distinguish(k: int, d, l, context: PAdicContext) -> DistinguishResult:
    """Decide whether the members with parameters d and l are separated.

    "separated" certifies that the two algebras are non-isomorphic (and
    the associated groups non-commensurable); otherwise the parameters
    agree mod p^N and no conclusion is drawn at this precision.
    """
    left = commensurability_invariant(build_family(family_params(k, d, context)))
    right = commensurability_invariant(build_family(family_params(k, l, context)))
    diff = left.recovered_d - right.recovered_d
    agree_val = diff.valuation
    if agree_val >= context.N:
        verdict = "indistinguishable_at_precision"
    else:
        verdict = "separated"
    return DistinguishResult(verdict, left, right, agree_val)
