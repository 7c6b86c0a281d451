"""Exact arithmetic in Z_p and Q_p at fixed working precision.

The scalar model is capped-relative: a nonzero element is stored as
``p^v * u`` with an integer valuation ``v`` and a unit residue ``u``
modulo ``p^N``, so every scalar is known exactly modulo ``p^(v+N)``.
Sums renormalize after cancellation; anything whose valuation falls N
or more digits below the smaller operand collapses to the canonical
zero.  Equality of mathematical values is therefore expressed through
:meth:`PAdicScalar.agrees` ("agree mod p^M") rather than ``==``, which
compares stored representations.

Dense matrices over these scalars come with an exact determinant
(fraction-free elimination on integer lifts), the matrix exponential
for entry valuation >= 2, and a p-adic row echelon form used for span
and membership computations elsewhere in the package.
"""

from __future__ import annotations

import math
from fractions import Fraction

from .errors import (
    ContextMismatchError,
    ConvergenceError,
    IntegralityError,
    NonSquareMatrixError,
    UndefinedInverseError,
)

INF = math.inf


def _is_prime(n: int) -> bool:
    """Deterministic Miller-Rabin (exact for n < 3.3e24)."""
    if n < 2:
        return False
    for q in (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37):
        if n % q == 0:
            return n == q
    d, s = n - 1, 0
    while d % 2 == 0:
        d //= 2
        s += 1
    for a in (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37):
        x = pow(a, d, n)
        if x in (1, n - 1):
            continue
        for _ in range(s - 1):
            x = x * x % n
            if x == n - 1:
                break
        else:
            return False
    return True


def _vp(n: int, p: int) -> int:
    """p-adic valuation of a nonzero integer."""
    v = 0
    while n % p == 0:
        n //= p
        v += 1
    return v


def vp_factorial(k: int, p: int) -> int:
    """v_p(k!) by Legendre's formula."""
    v, q = 0, p
    while q <= k:
        v += k // q
        q *= p
    return v


class PAdicContext:
    """A prime p together with a working precision of N significant digits."""

    __slots__ = ("p", "N", "modulus", "_zero", "_one")

    def __init__(self, p: int, N: int = 24):
        if not _is_prime(p):
            raise ValueError(f"p = {p} is not prime")
        if N < 1:
            raise ValueError("precision N must be >= 1")
        self.p = p
        self.N = N
        self.modulus = p ** N
        self._zero = PAdicScalar(self, 0, 0)
        self._one = PAdicScalar(self, 0, 1)

    # -- constructors -------------------------------------------------

    @property
    def zero(self) -> "PAdicScalar":
        return self._zero

    @property
    def one(self) -> "PAdicScalar":
        return self._one

    def from_int(self, n: int) -> "PAdicScalar":
        if n == 0:
            return self._zero
        v = _vp(n, self.p)
        u = (n // self.p ** v) % self.modulus
        return PAdicScalar(self, v, u)

    def from_fraction(self, q: Fraction) -> "PAdicScalar":
        if q == 0:
            return self._zero
        num, den = q.numerator, q.denominator
        vn = _vp(num, self.p)
        vd = _vp(den, self.p)
        un = (num // self.p ** vn) % self.modulus
        ud = (den // self.p ** vd) % self.modulus
        u = un * pow(ud, -1, self.modulus) % self.modulus
        return PAdicScalar(self, vn - vd, u)

    def from_valuation_unit(self, v: int, u: int) -> "PAdicScalar":
        u %= self.modulus
        if u == 0:
            raise ValueError("unit part must be nonzero")
        if u % self.p == 0:
            raise ValueError("unit part must be coprime to p")
        return PAdicScalar(self, v, u)

    def from_digits(self, text: str) -> "PAdicScalar":
        """Parse a little-endian digit string ``d0.d1.d2...`` as a Z_p element."""
        digits = [int(part) for part in text.split(".")]
        if any(d < 0 or d >= self.p for d in digits):
            raise ValueError(f"digits must lie in [0, {self.p})")
        return self.from_int(sum(d * self.p ** i for i, d in enumerate(digits)))

    def scalar(self, x) -> "PAdicScalar":
        """Coerce an int, Fraction, digit string, or scalar into this context."""
        if isinstance(x, PAdicScalar):
            if x.ctx is not self and (x.ctx.p, x.ctx.N) != (self.p, self.N):
                raise ContextMismatchError("scalar belongs to a different context")
            return x
        if isinstance(x, int):
            return self.from_int(x)
        if isinstance(x, Fraction):
            return self.from_fraction(x)
        if isinstance(x, str):
            return self.from_digits(x)
        raise TypeError(f"cannot coerce {type(x).__name__} to a p-adic scalar")

    def random_unit(self, rng) -> "PAdicScalar":
        """A uniformly random element of Z_p^* at this precision."""
        while True:
            u = rng.randrange(self.modulus)
            if u % self.p != 0:
                return PAdicScalar(self, 0, u)

    def random_integer(self, rng, min_valuation: int = 0) -> "PAdicScalar":
        """A random element of p^min_valuation * Z_p (zero included)."""
        n = rng.randrange(self.modulus) * self.p ** min_valuation
        return self.from_int(n)

    # -- bookkeeping ---------------------------------------------------

    def compatible(self, other: "PAdicContext") -> bool:
        return self is other or (self.p, self.N) == (other.p, other.N)

    def __eq__(self, other):
        return isinstance(other, PAdicContext) and (self.p, self.N) == (other.p, other.N)

    def __hash__(self):
        return hash((self.p, self.N))

    def __repr__(self):
        return f"PAdicContext(p={self.p}, N={self.N})"


class PAdicScalar:
    """An element of Q_p known to N significant digits.

    Zero is canonical: it is the unique scalar with ``unit == 0``; its
    valuation reads as +infinity.
    """

    __slots__ = ("ctx", "val", "unit")

    def __init__(self, ctx: PAdicContext, val: int, unit: int):
        self.ctx = ctx
        self.val = val
        self.unit = unit

    # -- predicates ----------------------------------------------------

    @property
    def is_zero(self) -> bool:
        return self.unit == 0

    @property
    def is_unit(self) -> bool:
        return self.unit != 0 and self.val == 0

    @property
    def valuation(self):
        """v_p of the scalar; +inf for zero."""
        return INF if self.unit == 0 else self.val

    # -- arithmetic ----------------------------------------------------

    def _check(self, other: "PAdicScalar"):
        if not isinstance(other, PAdicScalar):
            raise TypeError(f"expected PAdicScalar, got {type(other).__name__}")
        if self.ctx is not other.ctx and not self.ctx.compatible(other.ctx):
            raise ContextMismatchError("operands live in different contexts")

    def __add__(self, other: "PAdicScalar") -> "PAdicScalar":
        self._check(other)
        if self.unit == 0:
            return other
        if other.unit == 0:
            return self
        ctx = self.ctx
        p, N = ctx.p, ctx.N
        if self.val <= other.val:
            lo, hi = self, other
        else:
            lo, hi = other, self
        shift = hi.val - lo.val
        if shift >= N:
            return lo
        s = lo.unit + hi.unit * p ** shift
        if s == 0:
            return ctx._zero
        c = _vp(s, p)
        if c >= N:
            # below the absolute precision of the sum: indistinguishable from 0
            return ctx._zero
        u = (s // p ** c) % ctx.modulus
        return PAdicScalar(ctx, lo.val + c, u)

    def __neg__(self) -> "PAdicScalar":
        if self.unit == 0:
            return self
        return PAdicScalar(self.ctx, self.val, self.ctx.modulus - self.unit)

    def __sub__(self, other: "PAdicScalar") -> "PAdicScalar":
        return self + (-other)

    def __mul__(self, other: "PAdicScalar") -> "PAdicScalar":
        self._check(other)
        if self.unit == 0 or other.unit == 0:
            return self.ctx._zero
        ctx = self.ctx
        return PAdicScalar(ctx, self.val + other.val, self.unit * other.unit % ctx.modulus)

    def __pow__(self, e: int) -> "PAdicScalar":
        if e < 0:
            return self.inverse() ** (-e)
        result = self.ctx._one
        base = self
        while e:
            if e & 1:
                result = result * base
            base = base * base
            e >>= 1
        return result

    def inverse(self) -> "PAdicScalar":
        """The multiplicative inverse in Q_p (valuation negates)."""
        if self.unit == 0:
            raise UndefinedInverseError("zero has no inverse")
        ctx = self.ctx
        return PAdicScalar(ctx, -self.val, pow(self.unit, -1, ctx.modulus))

    def divide_by_p_power(self, n: int, integral: bool = False) -> "PAdicScalar":
        """Divide by p^n.  With ``integral`` the result must stay in Z_p."""
        if n < 0:
            raise ValueError("n must be nonnegative")
        if self.unit == 0:
            return self
        if integral and self.val < n:
            raise IntegralityError(
                f"valuation {self.val} < {n}: quotient leaves Z_p"
            )
        return PAdicScalar(self.ctx, self.val - n, self.unit)

    def mul_p_power(self, n: int) -> "PAdicScalar":
        if self.unit == 0:
            return self
        return PAdicScalar(self.ctx, self.val + n, self.unit)

    # -- comparison and export ------------------------------------------

    def agrees(self, other: "PAdicScalar", digits: int | None = None) -> bool:
        """True when self == other mod p^digits (default: full precision)."""
        self._check(other)
        digits = self.ctx.N if digits is None else digits
        return (self - other).valuation >= digits

    def lift(self, digits: int | None = None) -> int:
        """Integer representative of a Z_p element, reduced mod p^digits."""
        if self.unit == 0:
            return 0
        if self.val < 0:
            raise IntegralityError("negative valuation: no integer lift")
        ctx = self.ctx
        digits = ctx.N if digits is None else digits
        return self.unit * ctx.p ** self.val % ctx.p ** digits

    def digits_str(self, count: int | None = None) -> str:
        """Little-endian digit string ``d0.d1...`` of a Z_p element."""
        ctx = self.ctx
        count = ctx.N if count is None else count
        n = self.lift(count)
        out = []
        for _ in range(count):
            n, r = divmod(n, ctx.p)
            out.append(str(r))
        return ".".join(out)

    def __eq__(self, other):
        if not isinstance(other, PAdicScalar):
            return NotImplemented
        if self.unit == 0 or other.unit == 0:
            return self.unit == other.unit
        return (self.val, self.unit) == (other.val, other.unit)

    def __hash__(self):
        return hash((self.ctx.p, self.ctx.N, self.val, self.unit))

    def __repr__(self):
        p = self.ctx.p
        if self.unit == 0:
            return f"O({p}^{self.ctx.N})"
        if self.val == 0:
            return f"{self.unit} + O({p}^{self.ctx.N})"
        return f"{p}^{self.val}*{self.unit} + O({p}^{self.val + self.ctx.N})"


class PAdicMatrix:
    """A dense rectangular matrix of p-adic scalars sharing one context."""

    __slots__ = ("ctx", "rows", "cols", "entries")

    def __init__(self, ctx: PAdicContext, entries):
        self.ctx = ctx
        self.entries = [[ctx.scalar(e) for e in row] for row in entries]
        self.rows = len(self.entries)
        self.cols = len(self.entries[0]) if self.entries else 0
        if any(len(row) != self.cols for row in self.entries):
            raise ValueError("ragged rows")

    @classmethod
    def identity(cls, ctx: PAdicContext, n: int) -> "PAdicMatrix":
        return cls(ctx, [[1 if i == j else 0 for j in range(n)] for i in range(n)])

    @classmethod
    def zero(cls, ctx: PAdicContext, rows: int, cols: int) -> "PAdicMatrix":
        return cls(ctx, [[0] * cols for _ in range(rows)])

    def __getitem__(self, ij):
        i, j = ij
        return self.entries[i][j]

    def __add__(self, other: "PAdicMatrix") -> "PAdicMatrix":
        if (self.rows, self.cols) != (other.rows, other.cols):
            raise ValueError("shape mismatch")
        return PAdicMatrix(self.ctx, [
            [self.entries[i][j] + other.entries[i][j] for j in range(self.cols)]
            for i in range(self.rows)
        ])

    def __mul__(self, other):
        if isinstance(other, PAdicScalar):
            return PAdicMatrix(self.ctx, [
                [e * other for e in row] for row in self.entries
            ])
        if isinstance(other, PAdicMatrix):
            if self.cols != other.rows:
                raise ValueError("shape mismatch")
            zero = self.ctx.zero
            out = []
            for i in range(self.rows):
                row = []
                for j in range(other.cols):
                    acc = zero
                    for t in range(self.cols):
                        acc = acc + self.entries[i][t] * other.entries[t][j]
                    row.append(acc)
                out.append(row)
            return PAdicMatrix(self.ctx, out)
        return NotImplemented

    def row_vector_mul(self, vec):
        """Row vector times matrix: returns list of scalars of length cols."""
        if len(vec) != self.rows:
            raise ValueError("length mismatch")
        zero = self.ctx.zero
        out = []
        for j in range(self.cols):
            acc = zero
            for i in range(self.rows):
                acc = acc + vec[i] * self.entries[i][j]
            out.append(acc)
        return out

    def trace(self) -> PAdicScalar:
        if self.rows != self.cols:
            raise NonSquareMatrixError("trace of a non-square matrix")
        acc = self.ctx.zero
        for i in range(self.rows):
            acc = acc + self.entries[i][i]
        return acc

    def min_valuation(self):
        """Smallest entry valuation (inf for the zero matrix)."""
        return min((e.valuation for row in self.entries for e in row), default=INF)

    def agrees(self, other: "PAdicMatrix", digits: int | None = None) -> bool:
        if (self.rows, self.cols) != (other.rows, other.cols):
            return False
        return all(
            self.entries[i][j].agrees(other.entries[i][j], digits)
            for i in range(self.rows)
            for j in range(self.cols)
        )

    def __repr__(self):
        body = "; ".join(
            ", ".join(repr(e) for e in row) for row in self.entries
        )
        return f"PAdicMatrix({self.rows}x{self.cols}: {body})"


def mat_det_trace(M: PAdicMatrix):
    """Exact determinant and trace of a square p-adic matrix.

    The determinant is computed by fraction-free (Bareiss) elimination on
    exact integer lifts, so no division by non-units ever happens; a
    common p-power of Q_p entries is factored out first.  The result is
    correct mod p^N whenever all entries have valuation >= 0 (and mod
    p^(N + n*m0) in general, m0 the minimal valuation).
    """
    if M.rows != M.cols:
        raise NonSquareMatrixError("determinant of a non-square matrix")
    ctx = M.ctx
    n = M.rows
    tr = M.trace()
    if n == 0:
        return ctx.one, tr
    m0 = min(0, math.floor(min((e.val for row in M.entries for e in row if e.unit), default=0)))
    p = ctx.p
    a = [
        [0 if e.unit == 0 else e.unit * p ** (e.val - m0) for e in row]
        for row in M.entries
    ]
    sign = 1
    prev = 1
    for k in range(n - 1):
        if a[k][k] == 0:
            for r in range(k + 1, n):
                if a[r][k] != 0:
                    a[k], a[r] = a[r], a[k]
                    sign = -sign
                    break
            else:
                return ctx.zero, tr
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                a[i][j] = (a[i][j] * a[k][k] - a[i][k] * a[k][j]) // prev
            a[i][k] = 0
        prev = a[k][k]
    det = ctx.from_int(sign * a[n - 1][n - 1]).mul_p_power(n * m0)
    return det, tr


def mat_exp(M: PAdicMatrix) -> PAdicMatrix:
    """Sum of M^k/k!, truncated once the bound 2k - v_p(k!) reaches N.

    Requires every entry of M to have valuation >= 2, which makes the
    term valuations diverge for every prime (including p = 2).
    """
    if M.rows != M.cols:
        raise NonSquareMatrixError("exponential of a non-square matrix")
    ctx = M.ctx
    if M.min_valuation() < 2:
        raise ConvergenceError("mat_exp requires entry valuations >= 2")
    N = ctx.N
    total = PAdicMatrix.identity(ctx, M.rows)
    term = PAdicMatrix.identity(ctx, M.rows)
    k = 1
    while 2 * k - vp_factorial(k, ctx.p) < N:
        term = (term * M) * ctx.from_int(k).inverse()
        total = total + term
        k += 1
    return total


class Echelon:
    """Row echelon form over Z_p with pivot bookkeeping.

    Pivot entries are pure p-powers (rows get normalized by the unit part
    of their pivot); pivots are chosen globally by minimal valuation, so
    all elimination multipliers stay in Z_p.
    """

    __slots__ = ("ctx", "rows", "pivots", "transform", "ncols")

    def __init__(self, ctx, rows, pivots, transform, ncols):
        self.ctx = ctx
        self.rows = rows
        self.pivots = pivots  # list of (col, valuation), in row order
        self.transform = transform
        self.ncols = ncols

    @property
    def rank(self) -> int:
        return len(self.rows)

    @property
    def saturated(self) -> bool:
        """True when the span is a direct summand (all pivots are units)."""
        return all(v == 0 for (_, v) in self.pivots)

    def pivot_valuations(self):
        return [v for (_, v) in self.pivots]

    def free_columns(self):
        taken = {c for (c, _) in self.pivots}
        return [j for j in range(self.ncols) if j not in taken]


def echelonize(vectors, ctx: PAdicContext, transform: bool = False) -> Echelon:
    """Echelonize a list of coordinate vectors over Z_p.

    Entries with valuation >= N count as zero.  When ``transform`` is
    set, the result records each echelon row as a Z_p-combination of the
    input vectors.
    """
    work = [list(v) for v in vectors]
    ncols = len(work[0]) if work else 0
    if any(len(r) != ncols for r in work):
        raise ValueError("ragged input")
    n = len(work)
    trans = None
    if transform:
        trans = [
            [ctx.one if i == j else ctx.zero for j in range(n)]
            for i in range(n)
        ]
    remaining = list(range(n))
    used_cols: set[int] = set()
    order: list[int] = []
    pivots: list[tuple[int, int]] = []
    while remaining:
        best = None
        for i in remaining:
            for j in range(ncols):
                if j in used_cols:
                    continue
                e = work[i][j]
                v = e.valuation
                if v >= ctx.N:
                    continue
                if best is None or v < best[0] or (v == best[0] and (j, i) < (best[2], best[1])):
                    best = (v, i, j)
        if best is None:
            break
        v, pi, pj = best
        inv_unit = ctx.from_valuation_unit(0, work[pi][pj].unit).inverse()
        work[pi] = [e * inv_unit for e in work[pi]]
        if transform:
            trans[pi] = [e * inv_unit for e in trans[pi]]
        pivot = work[pi][pj]
        remaining.remove(pi)
        for i in remaining:
            e = work[i][pj]
            if e.valuation >= ctx.N:
                continue
            factor = PAdicScalar(ctx, e.val - v, e.unit)
            work[i] = [a - factor * b for a, b in zip(work[i], work[pi])]
            if transform:
                trans[i] = [a - factor * b for a, b in zip(trans[i], trans[pi])]
        order.append(pi)
        pivots.append((pj, v))
        used_cols.add(pj)
    rows = [work[i] for i in order]
    tr = [trans[i] for i in order] if transform else None
    return Echelon(ctx, rows, pivots, tr, ncols)


def solve_in_span(ech: Echelon, vector, allow_qp: bool = False):
    """Coefficients of ``vector`` over the echelon rows, or None.

    Returns a coefficient list (one per echelon row) such that the
    Z_p-combination of the rows equals the vector mod p^N.  Without
    ``allow_qp`` the coefficients must stay in Z_p.
    """
    ctx = ech.ctx
    residual = list(vector)
    coeffs = []
    for row, (col, pval) in zip(ech.rows, ech.pivots):
        e = residual[col]
        if e.valuation >= ctx.N:
            coeffs.append(ctx.zero)
            continue
        if e.val < pval and not allow_qp:
            return None
        c = PAdicScalar(ctx, e.val - pval, e.unit)
        residual = [a - c * b for a, b in zip(residual, row)]
        coeffs.append(c)
    if any(e.valuation < ctx.N for e in residual):
        return None
    return coeffs
