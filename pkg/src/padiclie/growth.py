"""Finite quotients G/G^(p^j) and exact subgroup counting.

A quotient keeps its elements as encoded coordinate vectors over Z/p^j
and multiplies through the metabelian law compiled to integer residues
(lazy evaluation, no stored table).  Subgroups of index p^i are
enumerated layer by layer: every subgroup of index p^(t+1) is maximal
in one of index p^t, and maximal subgroups are the preimages of
hyperplanes of the elementary-abelian quotient H / H^p[H,H].  A naive
join-closure enumerator over the full subgroup lattice doubles as an
independent oracle for small quotients.

Dirichlet coefficients a_(p^i) of the ambient group are reported once
two consecutive quotient levels yield the same count ("stabilized");
counts that hit the element budget first stay marked provisional.
"""

from __future__ import annotations

import csv
import hashlib
import itertools
from dataclasses import dataclass

from .errors import BudgetExceededError, NotPowerfulError
from .group import CompiledMetabelianLaw, UniformGroup

DEFAULT_BUDGET = 10 ** 6


class FiniteQuotient:
    """G/G^(p^j) on encoded coordinate vectors over Z/p^j.

    Elements are the integers 0 .. p^(jm) - 1, encoding coordinate
    tuples base p^j.  The group law is exact: compiled cells whose
    certified valuation floor reaches j are identically zero mod p^j.
    """

    def __init__(self, group: UniformGroup, level: int, budget: int = DEFAULT_BUDGET):
        if level < 0:
            raise ValueError("level must be >= 0")
        p = group.context.p
        m = group.rank
        order = p ** (level * m)
        if order > budget:
            raise BudgetExceededError(
                f"quotient order p^{level * m} exceeds the budget {budget}"
            )
        if group._table is None:
            raise NotPowerfulError("quotient law needs the metabelian table")
        self.group = group
        self.p = p
        self.m = m
        self.level = level
        self.q = p ** level
        self.order = order
        self.identity = 0
        self._powers = [self.q ** i for i in range(m + 1)]
        self._law = (
            CompiledMetabelianLaw(group.algebra, group._table, level)
            if level > 0
            else None
        )

    # -- encoding ---------------------------------------------------------

    def encode(self, coords) -> int:
        q = self.q
        out = 0
        for i in reversed(range(self.m)):
            out = out * q + (coords[i] % q)
        return out

    def decode(self, x: int):
        q = self.q
        out = []
        for _ in range(self.m):
            x, r = divmod(x, q)
            out.append(r)
        return tuple(out)

    def all_elements(self):
        return range(self.order)

    def generator_elements(self):
        return [self.encode([1 if t == i else 0 for t in range(self.m)]) for i in range(self.m)]

    # -- group operations ---------------------------------------------------

    def mul(self, x: int, y: int) -> int:
        if self.level == 0:
            return 0
        return self.encode(self._law.mul(self.decode(x), self.decode(y)))

    def inv_element(self, x: int) -> int:
        return self.encode([-c for c in self.decode(x)])

    def power_element(self, x: int, e: int) -> int:
        # one-parameter subgroups are coordinate lines: x^e = e * x
        return self.encode([e * c for c in self.decode(x)])

    def commutator_element(self, x: int, y: int) -> int:
        return self.mul(
            self.mul(self.inv_element(x), self.inv_element(y)), self.mul(x, y)
        )

    def conj_element(self, x: int, g: int) -> int:
        return self.mul(self.mul(self.inv_element(g), x), g)

    def power_chart_image(self, i: int) -> frozenset:
        """The set of p^i-divisible chart vectors (= image of x -> x^(p^i))."""
        if i >= self.level:
            return frozenset((0,))
        step = self.p ** i
        return frozenset(
            self.encode(vec)
            for vec in itertools.product(range(0, self.q, step), repeat=self.m)
        )

    def is_abelian(self) -> bool:
        gens = self.generator_elements()
        return all(
            self.commutator_element(a, b) == 0 for a in gens for b in gens
        )

    # -- subgroup machinery ---------------------------------------------------

    def _subgroup_bfs(self, gens):
        sym = []
        for g in gens:
            sym.append(g)
            sym.append(self.inv_element(g))
        elements = {0}
        frontier = [0]
        while frontier:
            x = frontier.pop()
            for h in sym:
                y = self.mul(x, h)
                if y not in elements:
                    elements.add(y)
                    frontier.append(y)
        return elements

    def closure(self, seed, conjugators=(), return_gens: bool = False):
        """Subgroup generated by ``seed``; with conjugators, its normal
        closure under conjugation by those elements.

        Only seed elements that actually enlarge the subgroup are kept as
        generators, so the BFS generator set stays logarithmic in the
        subgroup order even for huge seeds.
        """
        kept: list = []
        elements = {0}
        pending = sorted({s for s in seed if s != 0})
        while True:
            for g in pending:
                if g not in elements:
                    kept.append(g)
                    elements = self._subgroup_bfs(kept)
            if not conjugators:
                break
            missing = {
                z
                for g in kept
                for c in conjugators
                for z in (self.conj_element(g, c),)
                if z not in elements
            }
            if not missing:
                break
            pending = sorted(missing)
        result = frozenset(elements)
        return (result, tuple(kept)) if return_gens else result

    def __repr__(self):
        return f"FiniteQuotient(p={self.p}, m={self.m}, level={self.level}, order={self.order})"


@dataclass(frozen=True)
class Subgroup:
    elements: frozenset
    gens: tuple

    @property
    def order(self) -> int:
        return len(self.elements)


def whole_group(Q: FiniteQuotient) -> Subgroup:
    return Subgroup(frozenset(Q.all_elements()), tuple(Q.generator_elements()))


def frattini_subgroup(Q: FiniteQuotient, H: Subgroup) -> Subgroup:
    """H^p [H, H] as a subgroup of the quotient."""
    seed = {Q.power_element(g, Q.p) for g in H.gens}
    for a in H.gens:
        for b in H.gens:
            seed.add(Q.commutator_element(a, b))
    elements, gens = Q.closure(seed, conjugators=H.gens, return_gens=True)
    return Subgroup(elements, gens)


def _elementary_quotient(Q: FiniteQuotient, H: Subgroup, phi: Subgroup):
    """Basis of H/phi plus the F_p-coordinates of every element of H."""
    p = Q.p
    basis = []
    span = set(phi.elements)
    for x in sorted(H.elements):
        if x in span:
            continue
        basis.append(x)
        extended = set(span)
        cur = 0
        for _ in range(1, p):
            cur = Q.mul(cur, x)
            extended.update(Q.mul(cur, s) for s in span)
        span = extended
        if len(span) == len(H.elements):
            break
    coords = {}
    for exps in itertools.product(range(p), repeat=len(basis)):
        rep = 0
        for b, e in zip(basis, exps):
            rep = Q.mul(rep, Q.power_element(b, e))
        for s in phi.elements:
            coords[Q.mul(rep, s)] = exps
    return basis, coords


def maximal_subgroups(Q: FiniteQuotient, H: Subgroup):
    """All index-p subgroups of H (preimages of hyperplanes mod Frattini)."""
    p = Q.p
    phi = frattini_subgroup(Q, H)
    basis, coords = _elementary_quotient(Q, H, phi)
    r = len(basis)
    out = []
    for normal in _normalized_vectors(r, p):
        elems = frozenset(
            x for x, e in coords.items()
            if sum(n * c for n, c in zip(normal, e)) % p == 0
        )
        kernel_gens = []
        pivot = next(i for i in range(r) if normal[i] % p)
        inv = pow(normal[pivot], -1, p)
        for i in range(r):
            if i == pivot:
                continue
            # basis_i * basis_pivot^(-normal_i / normal_pivot) lies in the kernel
            e = (-normal[i] * inv) % p
            kernel_gens.append(Q.mul(basis[i], Q.power_element(basis[pivot], e)))
        out.append(Subgroup(elems, tuple(kernel_gens) + phi.gens))
    return out


def _normalized_vectors(r: int, p: int):
    """Nonzero vectors of F_p^r with leading nonzero entry 1."""
    for lead in range(r):
        for tail in itertools.product(range(p), repeat=r - lead - 1):
            yield (0,) * lead + (1,) + tail


def is_normal(Q: FiniteQuotient, H: Subgroup) -> bool:
    return all(
        Q.conj_element(g, c) in H.elements
        for g in H.gens
        for c in Q.generator_elements()
    )


def count_subgroups(Q: FiniteQuotient, i_max: int):
    """Exact subgroup counts per index p^i for i <= i_max (layered walk).

    Returns (counts, normal_counts), lists indexed by i.
    """
    counts = [1]
    normal_counts = [1]
    current = {whole_group(Q).elements: whole_group(Q)}
    for _ in range(1, i_max + 1):
        nxt: dict = {}
        for H in current.values():
            if H.order == 1:
                continue
            for M in maximal_subgroups(Q, H):
                nxt.setdefault(M.elements, M)
        current = nxt
        counts.append(len(current))
        normal_counts.append(sum(1 for H in current.values() if is_normal(Q, H)))
    return counts, normal_counts


def count_normal_subgroups(Q: FiniteQuotient, i_max: int):
    return count_subgroups(Q, i_max)[1]


def _join_with_element(Q: FiniteQuotient, S: Subgroup, g: int) -> Subgroup:
    """The subgroup generated by S and one extra element, by coset BFS."""
    gens = list(S.gens) + [g]
    sym = []
    for h in gens:
        sym.append(h)
        sym.append(Q.inv_element(h))
    elements = set(S.elements)
    frontier = [0]
    while frontier:
        r = frontier.pop()
        for h in sym:
            y = Q.mul(r, h)
            if y not in elements:
                frontier.append(y)
                for s in S.elements:
                    elements.add(Q.mul(s, y))
    return Subgroup(frozenset(elements), tuple(gens))


def naive_subgroup_counts(Q: FiniteQuotient, i_max: int, guard: int = 3 ** 6):
    """Independent oracle: the full subgroup lattice by one-generator joins.

    Every subgroup arises by repeatedly adjoining a single element, so a
    breadth-first walk that joins each known subgroup with one
    representative per coset enumerates the whole lattice.  Only meant
    for small quotients (|Q| <= guard).
    """
    if Q.order > guard:
        raise BudgetExceededError(f"naive enumeration capped at order {guard}")
    trivial = Subgroup(frozenset((0,)), ())
    lattice: dict = {trivial.elements: trivial}
    queue = [trivial]
    while queue:
        S = queue.pop()
        seen = set(S.elements)
        for x in Q.all_elements():
            if x in seen:
                continue
            T = _join_with_element(Q, S, x)
            if T.elements not in lattice:
                lattice[T.elements] = T
                queue.append(T)
            for s in S.elements:
                seen.add(Q.mul(s, x))
    counts = [0] * (i_max + 1)
    normal_counts = [0] * (i_max + 1)
    for sub in lattice.values():
        index = Q.order // sub.order
        i = 0
        while index > 1:
            index //= Q.p
            i += 1
        if i <= i_max:
            counts[i] += 1
            if is_normal(Q, sub):
                normal_counts[i] += 1
    return counts, normal_counts


# ---------------------------------------------------------------------------
# growth tables
# ---------------------------------------------------------------------------


@dataclass
class GrowthRow:
    i: int
    index: int
    count: int
    normal_count: int
    level: int
    stabilized: bool


@dataclass
class GrowthTable:
    p: int
    m: int
    d_digest: str
    rows: list

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(
                ["p", "m", "d_digest", "i", "a_p_i", "a_normal_p_i", "level", "stabilized"]
            )
            for r in self.rows:
                writer.writerow(
                    [self.p, self.m, self.d_digest, r.i, r.count, r.normal_count,
                     r.level, "yes" if r.stabilized else "provisional"]
                )

    def entries(self):
        return [(r.i, r.count, r.normal_count) for r in self.rows]


def parameter_digest(group: UniformGroup) -> str:
    if group.params is None:
        return "custom"
    return hashlib.sha1(group.params.d.digits_str().encode()).hexdigest()[:10]


def build_quotient(G: UniformGroup, j: int, budget: int = DEFAULT_BUDGET) -> FiniteQuotient:
    return FiniteQuotient(G, j, budget=budget)


def zeta_coefficients(
    G: UniformGroup,
    i_max: int,
    budget: int = DEFAULT_BUDGET,
    max_level: int | None = None,
) -> GrowthTable:
    """Stabilized subgroup counts a_(p^i) for i <= i_max.

    For each index the counts are computed on quotients of increasing
    level until two consecutive levels agree; a count still changing when
    the budget cuts enumeration off is reported as a provisional lower
    bound.
    """
    p, m = G.context.p, G.rank
    quotients: dict = {}
    counted: dict = {}

    def counts_at(j):
        if j not in counted:
            if p ** (j * m) > budget:
                raise BudgetExceededError("level beyond budget")
            if j not in quotients:
                quotients[j] = build_quotient(G, j, budget=budget)
            counted[j] = count_subgroups(quotients[j], i_max)
        return counted[j]

    rows = [GrowthRow(0, 1, 1, 1, 0, True)]
    for i in range(1, i_max + 1):
        j = max(i, 1)
        stabilized = False
        computed = None  # (count, normal, level)
        while True:
            if max_level is not None and j + 1 > max_level:
                break
            try:
                cur = counts_at(j)
                computed = (cur[0][i], cur[1][i], j)
                nxt = counts_at(j + 1)
            except BudgetExceededError:
                break
            computed = (nxt[0][i], nxt[1][i], j + 1)
            if cur[0][i] == nxt[0][i] and cur[1][i] == nxt[1][i]:
                stabilized = True
                break
            j += 1
        if computed is None:
            raise BudgetExceededError(
                f"no quotient level affordable for index p^{i} within {budget}"
            )
        count, normal, level_used = computed
        rows.append(GrowthRow(i, p ** i, count, normal, level_used, stabilized))
    return GrowthTable(p, m, parameter_digest(G), rows)
