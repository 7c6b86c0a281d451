"""Truncated Campbell-Hausdorff evaluation on powerful Z_p-Lie algebras.

Two coefficient engines back the evaluation:

* the general series, built once per degree bound D by expanding
  log(exp X * exp Y) in the free associative algebra on {X, Y} with
  exact rationals and collecting each homogeneous piece into left-normed
  Lie words through the Dynkin idempotent (a word ``w`` stands for the
  bracket [[..[w_0, w_1], w_2], ..]);

* a closed table for metabelian algebras.  On the derived ideal the two
  adjoint operators commute, so every degree-(a+b+2) contribution
  collapses onto [X, Y] ad_X^a ad_Y^b.  The coefficients C_(a,b) are
  produced by the classical Bernoulli-number recursion for dz/dt run
  inside a concrete truncated model (polynomials in two commuting
  shifts), which stays cheap far beyond the degrees the word expansion
  can reach.  Both engines are cross-checked against each other in the
  test suite wherever the general path is buildable.

Truncation soundness is certified: for elements whose coordinates have
valuation >= v0 and integral structure constants, a degree-m term is
divisible by p^(m*v0 - m_denominators), and the certificate records the
conservative denominator envelope floor((m-1)/(p-1)) + floor(log_p m)
together with the denominators actually present in the tables.
"""

from __future__ import annotations

import functools
import json
import math
from dataclasses import dataclass
from fractions import Fraction

from .errors import (
    CertificateViolationError,
    IntegralityError,
    NotPowerfulError,
    TruncationError,
)
from .liealg import LieAlgebraZp, LieVector
from .padic import PAdicContext, _vp

GENERAL_SERIES_DEGREE_CAP = 16  # word count doubles per degree


# ---------------------------------------------------------------------------
# general series: free associative expansion + Dynkin collection
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BchTerm:
    degree: int
    coeff: Fraction
    word: str  # left-normed bracketing over the alphabet "XY"


@dataclass(frozen=True)
class BchSeries:
    max_degree: int
    terms: tuple

    def terms_of_degree(self, m: int):
        return [t for t in self.terms if t.degree == m]

    def denominator_valuation(self, p: int, degree: int) -> int:
        """Largest v_p among coefficient denominators at one degree."""
        vals = [
            _vp(t.coeff.denominator, p)
            for t in self.terms
            if t.degree == degree and t.coeff.denominator % p == 0
        ]
        return max(vals, default=0)

    def to_json_dict(self) -> dict:
        return {
            "max_degree": self.max_degree,
            "terms": [
                {
                    "degree": t.degree,
                    "numerator": t.coeff.numerator,
                    "denominator": t.coeff.denominator,
                    "word": t.word,
                }
                for t in self.terms
            ],
        }

    def save(self, path):
        with open(path, "w") as fh:
            json.dump(self.to_json_dict(), fh, indent=1)
            fh.write("\n")


def _assoc_mul(f: dict, g: dict, cap: int) -> dict:
    out: dict = {}
    for w1, c1 in f.items():
        room = cap - len(w1)
        if room < 0:
            continue
        for w2, c2 in g.items():
            if len(w2) > room:
                continue
            w = w1 + w2
            c = out.get(w)
            out[w] = c1 * c2 if c is None else c + c1 * c2
    return {w: c for w, c in out.items() if c != 0}


def _assoc_log_exp_xy(D: int) -> dict:
    """Coefficients of log(exp X exp Y) in the algebra truncated at D."""
    fact = [1] * (D + 1)
    for i in range(1, D + 1):
        fact[i] = fact[i - 1] * i
    z = {}
    for a in range(D + 1):
        for b in range(D + 1 - a):
            if a == b == 0:
                continue
            z["X" * a + "Y" * b] = Fraction(1, fact[a] * fact[b])
    h: dict = {}
    power = dict(z)
    sign = 1
    for j in range(1, D + 1):
        coeff = Fraction(sign, j)
        for w, c in power.items():
            prev = h.get(w)
            h[w] = coeff * c if prev is None else prev + coeff * c
        sign = -sign
        if j < D:
            power = _assoc_mul(power, z, D)
    return {w: c for w, c in h.items() if c != 0}


@functools.lru_cache(maxsize=None)
def bch_coefficients(D: int) -> BchSeries:
    """All series terms through degree D as rational left-normed Lie words.

    Words whose two leading letters coincide bracket to zero identically
    and are omitted.  Degree-1 terms are exactly X + Y.
    """
    if D < 1:
        raise ValueError("degree bound must be >= 1")
    if D > GENERAL_SERIES_DEGREE_CAP:
        raise TruncationError(
            f"general series beyond degree {GENERAL_SERIES_DEGREE_CAP} is not "
            "built; use the metabelian table"
        )
    h = _assoc_log_exp_xy(D)
    collected: dict = {}
    for w, c in h.items():
        if len(w) == 1:
            collected[w] = collected.get(w, Fraction(0)) + c
            continue
        if w[0] == w[1]:
            continue  # [[X,X],...] and [[Y,Y],...] vanish identically
        coeff = c / len(w)
        if w[0] == "Y":  # [[Y,X],w'] = -[[X,Y],w']
            w = "XY" + w[2:]
            coeff = -coeff
        collected[w] = collected.get(w, Fraction(0)) + coeff
    terms = tuple(
        BchTerm(len(w), collected[w], w)
        for w in sorted(collected, key=lambda w: (len(w), w))
        if collected[w] != 0
    )
    return BchSeries(D, terms)


def lie_word_to_assoc(word: str) -> dict:
    """Expand a left-normed bracket word inside the free associative algebra."""
    out = {word[0]: Fraction(1)}
    for letter in word[1:]:
        nxt: dict = {}
        for w, c in out.items():
            for ww, cc in ((w + letter, c), (letter + w, -c)):
                prev = nxt.get(ww)
                nxt[ww] = cc if prev is None else prev + cc
        out = {w: c for w, c in nxt.items() if c != 0}
    return out


# ---------------------------------------------------------------------------
# metabelian table
# ---------------------------------------------------------------------------
#
# Model: the Lie algebra Q<X, Y> (+) Q[u, v]_{<= cap} with I = Q[u, v]
# an abelian ideal, [P, X] = u P, [P, Y] = v P, [X, Y] = 1.  It is
# metabelian and generated by X, Y, and the monomial u^a v^b is the
# image of [X, Y] ad_X^a ad_Y^b, so the coefficients of the image of the
# Campbell-Hausdorff element can be read off uniquely.


def _mb_zero():
    return (Fraction(0), Fraction(0), {})


def _mb_add(e1, e2):
    a1, b1, p1 = e1
    a2, b2, p2 = e2
    poly = dict(p1)
    for key, c in p2.items():
        prev = poly.get(key)
        s = c if prev is None else prev + c
        if s:
            poly[key] = s
        elif prev is not None:
            del poly[key]
    return (a1 + a2, b1 + b2, poly)


def _mb_scale(e, c: Fraction):
    a, b, p = e
    if c == 0:
        return _mb_zero()
    return (a * c, b * c, {k: t * c for k, t in p.items()})


def _mb_bracket(e1, e2, cap: int):
    a1, b1, p1 = e1
    a2, b2, p2 = e2
    poly: dict = {}

    def bump(key, c):
        if c == 0 or key[0] + key[1] > cap:
            return
        prev = poly.get(key)
        s = c if prev is None else prev + c
        if s:
            poly[key] = s
        elif prev is not None:
            del poly[key]

    bump((0, 0), a1 * b2 - b1 * a2)
    for (a, b), t in p1.items():
        bump((a + 1, b), t * a2)
        bump((a, b + 1), t * b2)
    for (a, b), t in p2.items():
        bump((a + 1, b), -t * a1)
        bump((a, b + 1), -t * b1)
    return (Fraction(0), Fraction(0), poly)


@functools.lru_cache(maxsize=None)
def _bernoulli(n: int) -> Fraction:
    """Bernoulli numbers with B_1 = -1/2."""
    if n == 0:
        return Fraction(1)
    acc = Fraction(0)
    for j in range(n):
        acc += Fraction(math.comb(n + 1, j)) * _bernoulli(j)
    return -acc / (n + 1)


@dataclass(frozen=True, eq=False)
class MetabelianBch:
    """Coefficients C_(a,b) of [X, Y] ad_X^a ad_Y^b, a + b + 2 <= max_degree."""

    max_degree: int
    table: dict

    def denominator_valuation(self, p: int, degree: int) -> int:
        vals = [
            _vp(c.denominator, p)
            for (a, b), c in self.table.items()
            if a + b + 2 == degree and c.denominator % p == 0
        ]
        return max(vals, default=0)


@functools.lru_cache(maxsize=None)
def metabelian_coefficients(D: int) -> MetabelianBch:
    """Closed metabelian table through degree D via the dz/dt recursion.

    (m+1) z_{m+1} = sum_n (B_n/n!) ad_{z_1}^{n-1} [z_{m-n+1}, X + (-1)^n Y];
    in the metabelian model every other composition of the recursion
    vanishes because a second degree->=2 factor meets the abelian ideal.
    """
    if D < 1:
        raise ValueError("degree bound must be >= 1")
    cap = max(D - 2, 0)
    x = (Fraction(1), Fraction(0), {})
    y = (Fraction(0), Fraction(1), {})
    z = {1: (Fraction(1), Fraction(1), {})}
    fact = [1] * (D + 1)
    for i in range(1, D + 1):
        fact[i] = fact[i - 1] * i
    for m in range(1, D):
        acc = _mb_zero()
        for n in range(1, m + 1):
            j = m - n + 1
            g = _mb_add(x, _mb_scale(y, Fraction((-1) ** n)))
            t = _mb_bracket(z[j], g, cap)
            for _ in range(n - 1):
                t = _mb_bracket(z[1], t, cap)
            acc = _mb_add(acc, _mb_scale(t, _bernoulli(n) / fact[n]))
        alpha, beta, poly = _mb_scale(acc, Fraction(1, m + 1))
        if alpha != 0 or beta != 0:
            raise AssertionError("recursion produced a linear part above degree 1")
        z[m + 1] = (alpha, beta, poly)
    table: dict = {}
    for m in range(2, D + 1):
        for key, c in z[m][2].items():
            if key[0] + key[1] + 2 == m and c != 0:
                table[key] = c
    return MetabelianBch(D, table)


def metabelian_projection_of_series(series: BchSeries) -> dict:
    """Image of the general series in the metabelian model (for cross-checks)."""
    cap = max(series.max_degree - 2, 0)
    gens = {"X": (Fraction(1), Fraction(0), {}), "Y": (Fraction(0), Fraction(1), {})}
    total = _mb_zero()
    for t in series.terms:
        e = gens[t.word[0]]
        for letter in t.word[1:]:
            e = _mb_bracket(e, gens[letter], cap)
        total = _mb_add(total, _mb_scale(e, t.coeff))
    return total[2]


# ---------------------------------------------------------------------------
# truncation certificates
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TruncationCertificate:
    """Records why discarding degrees above D is sound at precision N.

    ``bound_table`` rows are (degree m, envelope denominator valuation,
    m*v0 - envelope); every degree above D satisfies bound >= N.
    ``actual_denominators`` lists the denominator valuations present in
    the metabelian table through D + 2 as a spot check on the envelope.
    """

    p: int
    N: int
    v0: int
    D: int
    bound_table: tuple
    actual_denominators: tuple

    def envelope_denominator(self, m: int) -> int:
        return _envelope_denominator(self.p, m)

    def check_denominators(self, denominator_valuation) -> None:
        """Fail loudly if a coefficient source beats the envelope."""
        for m in range(2, self.D + 1):
            actual = denominator_valuation(self.p, m)
            if actual > self.envelope_denominator(m):
                raise CertificateViolationError(
                    f"denominator valuation {actual} at degree {m} exceeds the "
                    f"certified envelope {self.envelope_denominator(m)}"
                )


def _envelope_denominator(p: int, m: int) -> int:
    return (m - 1) // (p - 1) + int(math.floor(math.log(m) / math.log(p)))


def truncation_degree(context: PAdicContext, v0: int, target: int | None = None):
    """Smallest sound truncation degree and its certificate.

    ``v0`` is the valuation floor of the element coordinates entering
    the series (the structure constants are assumed integral); a
    degree-m term is then divisible by p^(m*v0 - denominators).  The
    conservative envelope floor((m-1)/(p-1)) + floor(log_p m) bounds the
    denominators.  ``target`` defaults to the context precision.
    """
    p = context.p
    target = context.N if target is None else target
    if p == 2:
        if v0 < 2:
            raise TruncationError("p = 2 requires coordinate valuations >= 2")
    elif v0 < 1:
        raise TruncationError("powerful convergence requires valuations >= 1")
    slope = v0 - 1.0 / (p - 1)
    # real-valued envelope f(m) = m*v0 - (m-1)/(p-1) - log_p(m) increases
    # once m exceeds m_c; past that point a single f(m) >= target ends the scan
    m_c = max(2, math.ceil(1.0 / (slope * math.log(p))) + 1)
    last_fail = 1
    m = 2
    while True:
        bound = m * v0 - _envelope_denominator(p, m)
        if bound < target:
            last_fail = m
        f_real = m * v0 - (m - 1) / (p - 1) - math.log(m) / math.log(p)
        if m >= m_c and f_real >= target:
            break
        m += 1
        if m > 100000:
            raise TruncationError("no sound truncation degree below 100000")
    D = max(last_fail, 1)
    rows = tuple(
        (mm, _envelope_denominator(p, mm), mm * v0 - _envelope_denominator(p, mm))
        for mm in range(2, D + 3)
    )
    table = metabelian_coefficients(D + 2)
    actual = tuple(
        (mm, table.denominator_valuation(p, mm)) for mm in range(2, D + 3)
    )
    cert = TruncationCertificate(p, target, v0, D, rows, actual)
    for mm, act in actual:
        if act > cert.envelope_denominator(mm):
            raise CertificateViolationError(
                f"metabelian denominator at degree {mm} exceeds the envelope"
            )
    return D, cert


# ---------------------------------------------------------------------------
# evaluation
# ---------------------------------------------------------------------------


def _coerce_integral(name, vec: LieVector):
    if vec.valuation() < 0:
        raise IntegralityError(f"{name} must have coordinates in Z_p")


def _check_degree_floors(L, per_degree, s, denom_of_degree):
    """Every evaluated degree must respect its certified valuation floor."""
    N = L.context.N
    for m, vec in per_degree.items():
        floor = max(0, (m - 1) * s - denom_of_degree(m))
        if vec.valuation() < min(floor, N):
            raise CertificateViolationError(
                f"degree-{m} contribution has valuation {vec.valuation()} "
                f"below the certified floor {floor}"
            )


def bch_eval(
    L: LieAlgebraZp,
    u: LieVector,
    v: LieVector,
    D: int,
    certificate: TruncationCertificate | None = None,
    method: str = "auto",
) -> LieVector:
    """Campbell-Hausdorff product of u and v through degree D.

    Rational coefficients are mapped into Q_p (unit denominators by
    inversion mod p^N, p-powers by valuation shifts); powerfulness of L
    keeps every per-degree contribution in Z_p, which is asserted and
    raised as :class:`CertificateViolationError` on failure since it can
    only indicate an implementation bug.
    """
    if not L.is_powerful():
        raise NotPowerfulError("bch_eval requires a powerful algebra")
    _coerce_integral("u", u)
    _coerce_integral("v", v)
    if method == "auto":
        method = "metabelian" if L.is_metabelian() else "general"
    s = L.min_structure_valuation()
    if s == math.inf:
        s = L.context.N  # abelian: only the linear terms survive
    s = int(min(s, L.context.N))

    if method == "metabelian":
        if not L.is_metabelian():
            raise ValueError("metabelian evaluation on a non-metabelian algebra")
        table = metabelian_coefficients(D)
        if certificate is not None:
            certificate.check_denominators(table.denominator_valuation)
        per_degree = _eval_metabelian(L, u, v, D, table)
        denom = lambda m: table.denominator_valuation(L.context.p, m)
    elif method == "general":
        series = bch_coefficients(D)
        if certificate is not None:
            certificate.check_denominators(series.denominator_valuation)
        per_degree = _eval_general(L, u, v, series)
        denom = lambda m: series.denominator_valuation(L.context.p, m)
    else:
        raise ValueError(f"unknown method {method!r}")

    _check_degree_floors(L, per_degree, s, denom)
    total = u + v
    for m in sorted(per_degree):
        total = total + per_degree[m]
    return total


def _valuation_floor(ctx, u, v):
    # inputs of valuation >= f carry absolute precision f + N; keep terms
    # down there so results stay usable at that resolution
    return int(min(max(0, u.valuation()), max(0, v.valuation()), ctx.N))


def _eval_metabelian(L, u, v, D, table: MetabelianBch) -> dict:
    ctx = L.context
    cutoff = ctx.N + _valuation_floor(ctx, u, v) + max(
        (_vp(c.denominator, ctx.p) for c in table.table.values() if c.denominator % ctx.p == 0),
        default=0,
    )
    cap = D - 2
    if cap < 0:
        return {}
    w0 = L.bracket(u, v)
    grid = {(0, 0): w0}
    per_degree: dict = {}
    for a in range(cap + 1):
        for b in range(cap + 1 - a):
            if (a, b) == (0, 0):
                w = w0
            else:
                parent = grid.get((a - 1, b)) if a else grid.get((a, b - 1))
                if parent is None:
                    continue
                w = L.bracket(parent, u if a else v)
            if w.valuation() >= cutoff:
                continue  # descendants only gain valuation
            grid[(a, b)] = w
            coeff = table.table.get((a, b))
            if coeff is None:
                continue
            m = a + b + 2
            contrib = w.scale(ctx.from_fraction(coeff))
            prev = per_degree.get(m)
            per_degree[m] = contrib if prev is None else prev + contrib
    return per_degree


def _eval_general(L, u, v, series: BchSeries) -> dict:
    ctx = L.context
    cutoff = ctx.N + _valuation_floor(ctx, u, v) + max(
        (
            _vp(t.coeff.denominator, ctx.p)
            for t in series.terms
            if t.coeff.denominator % ctx.p == 0
        ),
        default=0,
    )
    leaves = {"X": u, "Y": v}
    memo: dict = {"X": u, "Y": v}

    def word_value(word: str):
        got = memo.get(word)
        if got is not None or word in memo:
            return got
        prefix = word_value(word[:-1])
        if prefix is None:
            memo[word] = None
            return None
        w = L.bracket(prefix, leaves[word[-1]])
        if w.valuation() >= cutoff:
            w = None  # extensions only gain valuation
        memo[word] = w
        return w

    per_degree: dict = {}
    for t in series.terms:
        if t.degree < 2:
            continue
        w = word_value(t.word)
        if w is None:
            continue
        contrib = w.scale(ctx.from_fraction(t.coeff))
        prev = per_degree.get(t.degree)
        per_degree[t.degree] = contrib if prev is None else prev + contrib
    return per_degree
