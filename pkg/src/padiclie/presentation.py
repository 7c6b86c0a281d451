"""Finite presentations of the uniform groups.

Generators are the scaled basis elements in chart order, displayed as
y, z_2, ..., z_m.  For each pair i < j the relator

    [g_i, g_j] * g_1^(a_1) ... g_m^(a_m)

is trivial, so the exponent vector a(i, j) collects the coordinates of
the second kind of the *inverse* of the group commutator; the rendered
text shows the equivalent equations [g_i, g_j] = g_1^(-a_1) ... which
hold verbatim in the group.  Exponents live in pZ_p (4Z_2 for p = 2);
for these groups they actually lie in p^2 Z_p.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

from .errors import ChartError, StructureError
from .group import GroupElement, UniformGroup
from .padic import PAdicContext


def generator_names(m: int):
    return ["y"] + [f"z{i}" for i in range(2, m + 1)]


def coords_second_kind(group: UniformGroup, g: GroupElement):
    """The unique lambda with x_1^(l_1) ... x_m^(l_m) = g mod p^N.

    Solved digit by digit: reduce mod p, divide the residual out, repeat;
    the final reconstruction is re-checked and a failure raises (the map
    is bijective for these groups, so failure means a bug).
    """
    ctx = group.context
    p, N = ctx.p, ctx.N
    m = group.rank
    gens = group.generators()
    lam = [0] * m

    def ordered_product(exponents):
        acc = group.power(gens[0], ctx.from_int(exponents[0]))
        for i in range(1, m):
            acc = group.mul(acc, group.power(gens[i], ctx.from_int(exponents[i])))
        return acc

    residual = g
    for t in range(N):
        coords = group._as_bch(residual)
        if all(c.valuation >= N for c in coords):
            break
        digits = [c.divide_by_p_power(t, integral=True).lift(1) for c in coords]
        for i in range(m):
            lam[i] += digits[i] * p ** t
        residual = group.mul(group.inv(ordered_product(lam)), g)
    reconstructed = ordered_product(lam)
    if not all(
        a.agrees(b) for a, b in zip(group._as_bch(reconstructed), group._as_bch(g))
    ):
        raise ChartError("ordered-product reconstruction failed")
    return tuple(ctx.from_int(v) for v in lam)


def commutator_exponents(group: UniformGroup, i: int, j: int):
    """Exponent vector a(i, j) of the relator for the pair i < j (0-based)."""
    if not 0 <= i < j < group.rank:
        raise ValueError("need generator indices i < j")
    gens = group.generators()
    word = group.inv(group.commutator(gens[i], gens[j]))
    return coords_second_kind(group, word)


@dataclass
class Relator:
    i: int  # 0-based generator indices, i < j
    j: int
    exponents: tuple


@dataclass
class Presentation:
    generators: list
    relators: list
    p: int
    precision: int

    def __post_init__(self):
        m = len(self.generators)
        if len(self.relators) != m * (m - 1) // 2:
            raise StructureError("expected one relator per generator pair")
        need = 2 if self.p == 2 else 1
        for rel in self.relators:
            for e in rel.exponents:
                if e.valuation < need:
                    raise StructureError(
                        f"relator exponent valuation {e.valuation} below {need}"
                    )

    def to_json_dict(self) -> dict:
        return {
            "p": self.p,
            "precision": self.precision,
            "generators": list(self.generators),
            "relators": [
                {
                    "i": rel.i + 1,
                    "j": rel.j + 1,
                    "word_exponents": [e.digits_str() for e in rel.exponents],
                }
                for rel in self.relators
            ],
        }


def emit_presentation(m: int, d, context: PAdicContext, group: UniformGroup | None = None):
    """Presentation of the rank-m group with parameter d, plus rendered text."""
    if group is None:
        group = UniformGroup.family(m, d, context)
    names = generator_names(group.rank)
    relators = []
    for i in range(group.rank):
        for j in range(i + 1, group.rank):
            relators.append(Relator(i, j, commutator_exponents(group, i, j)))
    pres = Presentation(names, relators, context.p, context.N)
    return pres, render_text(pres)


def render_text(pres: Presentation) -> str:
    """Deterministic text: one equation [g_i, g_j] = prod g^(-a) per line."""
    lines = [
        f"# presentation mod {pres.p}^{pres.precision}",
        f"# generators: {', '.join(pres.generators)}",
        "# relators [g_i, g_j] * g_1^(a_1) ... g_m^(a_m) = 1, shown as equations",
    ]
    for rel in pres.relators:
        lhs = f"[{pres.generators[rel.i]}, {pres.generators[rel.j]}]"
        parts = []
        for name, e in zip(pres.generators, rel.exponents):
            neg = -e
            if neg.is_zero:
                continue
            parts.append(f"{name}^({neg.digits_str()})")
        rhs = " ".join(parts) if parts else "1"
        lines.append(f"{lhs} = {rhs}")
    return "\n".join(lines) + "\n"


def save_presentation(pres: Presentation, text_path, json_path=None):
    with open(text_path, "w") as fh:
        fh.write(render_text(pres))
    if json_path is not None:
        with open(json_path, "w") as fh:
            json.dump(pres.to_json_dict(), fh, indent=1)
            fh.write("\n")


@dataclass
class ClosedFormComparisonRow:
    pair: tuple
    agreement_valuation: float
    description: str


def compare_with_closed_form(d, context: PAdicContext, group: UniformGroup | None = None):
    """Leading-order check of the rank-4 relators against their closed form.

    The closed-form equations are [z2, y] = z4^(d p^2), [z3, y] = z3^(p^2),
    [z4, y] = z2^(p^2) and trivial commutators among the z's; each row
    reports the valuation at which the computed exponent vector agrees
    with that leading term (so >= 3 means agreement mod p^3).
    """
    if group is None:
        group = UniformGroup.family(4, d, context)
    if group.rank != 4:
        raise ValueError("the closed-form comparison needs rank 4")
    ctx = context
    p2 = ctx.from_valuation_unit(2, 1)
    d_scalar = group.params.d if group.params is not None else ctx.scalar(d)
    zero = [ctx.zero] * 4
    # expected a(i, j) = coordinates of the inverse commutator [g_j, g_i]
    expected = {
        (0, 1): (zero[0], zero[1], zero[2], d_scalar * p2),  # [z2,y] = z4^(dp^2)
        (0, 2): (zero[0], zero[1], p2, zero[3]),             # [z3,y] = z3^(p^2)
        (0, 3): (zero[0], p2, zero[2], zero[3]),             # [z4,y] = z2^(p^2)
        (1, 2): tuple(zero),
        (1, 3): tuple(zero),
        (2, 3): tuple(zero),
    }
    names = generator_names(4)
    rows = []
    for (i, j), exp_vec in sorted(expected.items()):
        a = commutator_exponents(group, i, j)
        val = min((x - y).valuation for x, y in zip(a, exp_vec))
        desc = "trivial" if all(e.is_zero for e in exp_vec) else "p^2-power relation"
        rows.append(
            ClosedFormComparisonRow(
                pair=(names[i], names[j]),
                agreement_valuation=val,
                description=desc,
            )
        )
    return rows
