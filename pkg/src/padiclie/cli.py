"""Command-line interface: construct, invariant, distinguish, verify, present, growth.

Exit codes: 0 success, 1 usage error, 2 mathematical precondition
violation, 3 verification-suite failure, 4 enumeration budget exceeded.
All randomized suites take an explicit --seed (default 42) and print
identical reports for identical seeds.
"""

from __future__ import annotations

import argparse
import json
import random
import sys

from . import growth as growth_mod
from . import presentation as pres_mod
from .errors import BudgetExceededError, PadicLieError
from .families import build_family, commensurability_invariant, distinguish, family_params
from .group import UniformGroup, lower_p_series
from .padic import PAdicContext

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_PRECONDITION = 2
EXIT_SUITE = 3
EXIT_BUDGET = 4


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        sys.exit(EXIT_USAGE)


def _parse_padic(ctx: PAdicContext, text: str):
    """Decimal integer or little-endian digit string d0.d1.d2..."""
    if "." in text:
        return ctx.from_digits(text)
    return ctx.from_int(int(text))


def _context(args) -> PAdicContext:
    return PAdicContext(args.p, args.prec)


def _rank(args) -> int:
    k = getattr(args, "k", None)
    m = getattr(args, "m", None)
    if k is None and m is None:
        raise PadicLieError("one of --k/--m is required")
    if k is not None and m is not None and k != m:
        raise PadicLieError("--k and --m disagree")
    return k if k is not None else m


def _add_common(sub, need_d=True):
    sub.add_argument("--p", type=int, required=True, help="prime")
    sub.add_argument("--prec", type=int, default=24, help="working precision (digits)")
    sub.add_argument("--k", type=int, help="family rank (alias of --m)")
    sub.add_argument("--m", type=int, help="family rank (alias of --k)")
    if need_d:
        sub.add_argument("--d", type=str, required=True,
                         help="unit parameter (integer or digit string d0.d1...)")


# -- subcommands --------------------------------------------------------------


def cmd_construct(args) -> int:
    ctx = _context(args)
    params = family_params(_rank(args), _parse_padic(ctx, args.d), ctx)
    algebra = build_family(params)
    if args.scaled:
        algebra = algebra.scale(2)
    report = algebra.jacobi_check()
    print(f"family rank={params.k} p={ctx.p} precision={ctx.N} scaled={'p^2' if args.scaled else 'no'}")
    print(f"jacobi={'pass' if report.ok else f'fail at {report.triple}'}")
    print(f"powerful={'true' if algebra.is_powerful() else 'false'}")
    if args.out:
        algebra.save(args.out)
        print(f"wrote {args.out}")
    else:
        print(json.dumps(algebra.to_json_dict(), indent=1))
    return EXIT_OK if report.ok else EXIT_PRECONDITION


def cmd_invariant(args) -> int:
    ctx = _context(args)
    params = family_params(_rank(args), _parse_padic(ctx, args.d), ctx)
    inv = commensurability_invariant(build_family(params))
    print(f"k={params.k} p={ctx.p} N={ctx.N}")
    print(f"sign_exponent={inv.sign_exponent}")
    print(f"value={inv.value.digits_str()}")
    print(f"recovered_d={inv.recovered_d.digits_str()}")
    return EXIT_OK


def cmd_distinguish(args) -> int:
    ctx = _context(args)
    k = _rank(args)
    d = _parse_padic(ctx, args.d)
    l = _parse_padic(ctx, args.l)
    res = distinguish(k, d, l, ctx)
    if res.separated:
        print("SEPARATED")
    else:
        print(f"INDISTINGUISHABLE@p^{ctx.N}")
    print(f"recovered_d_left={res.left.recovered_d.digits_str()}")
    print(f"recovered_d_right={res.right.recovered_d.digits_str()}")
    val = res.agreement_valuation
    print(f"agreement_valuation={'>=N' if val >= ctx.N else int(val)}")
    return EXIT_OK


def cmd_present(args) -> int:
    ctx = _context(args)
    m = _rank(args)
    d = _parse_padic(ctx, args.d)
    group = UniformGroup.family(m, d, ctx)
    pres, text = pres_mod.emit_presentation(m, d, ctx, group=group)
    if args.out:
        pres_mod.save_presentation(pres, args.out, args.out + ".json")
        print(f"wrote {args.out} and {args.out}.json")
    else:
        sys.stdout.write(text)
    print(f"relators={len(pres.relators)}")
    if args.compare_remark:
        if m != 4:
            raise PadicLieError("--compare-remark needs rank 4")
        for row in pres_mod.compare_with_closed_form(d, ctx, group=group):
            val = row.agreement_valuation
            shown = f">={ctx.N}" if val >= ctx.N else str(int(val))
            print(f"pair [{row.pair[0]}, {row.pair[1]}]: agreement_valuation={shown} ({row.description})")
    return EXIT_OK


def cmd_growth(args) -> int:
    ctx = _context(args)
    m = _rank(args)
    d = _parse_padic(ctx, args.d)
    group = UniformGroup.family(m, d, ctx)
    table = growth_mod.zeta_coefficients(
        group, args.max_index, budget=args.budget, max_level=args.levels
    )
    print(f"p={table.p} m={table.m} d_digest={table.d_digest}")
    for r in table.rows:
        flag = "stabilized" if r.stabilized else "provisional"
        print(f"index p^{r.i}: a={r.count} a_normal={r.normal_count} level={r.level} {flag}")
    if args.out:
        table.to_csv(args.out)
        print(f"wrote {args.out}")
    return EXIT_OK


# -- verification suites -------------------------------------------------------


def _suite_jacobi(args, ctx, rng):
    for k in range(3, 9):
        d = ctx.random_unit(rng)
        algebra = build_family(family_params(k, d, ctx))
        if not algebra.jacobi_check().ok:
            return False, f"jacobi fails for rank {k}"
    return True, "ranks 3..8 pass"

def _suite_backend_agreement(args, ctx, rng):
    group = UniformGroup.family(args.m or 4, _d_or_random(args, ctx, rng), ctx)
    for _ in range(args.samples):
        g = group.random_element(rng)
        h = group.random_element(rng)
        group.mul(g, h, backend="both")  # raises on disagreement
    return True, f"{args.samples} pairs agree"

def _suite_group_axioms(args, ctx, rng):
    group = UniformGroup.family(args.m or 4, _d_or_random(args, ctx, rng), ctx)
    for _ in range(args.samples):
        g, h, k = (group.random_element(rng) for _ in range(3))
        lhs = group.mul(group.mul(g, h), k)
        rhs = group.mul(g, group.mul(h, k))
        if not all(a.agrees(b) for a, b in zip(lhs.data, rhs.data)):
            return False, "associativity fails"
        gi = group.mul(g, group.inv(g))
        if not all(c.valuation >= ctx.N for c in gi.data):
            return False, "inverse fails"
    return True, f"{args.samples} triples pass"

def _suite_uniformity(args, ctx, rng):
    group = UniformGroup.family(args.m or 3, _d_or_random(args, ctx, rng), ctx)
    m = group.rank
    for level in range(2, (args.levels or 2) + 1):
        Q = growth_mod.build_quotient(group, level)
        rows = lower_p_series(Q)
        if not all(r.index == ctx.p ** m for r in rows):
            return False, f"index differs from p^{m} at level {level}"
        if not all(r.equals_power_chart for r in rows):
            return False, "series disagrees with the power-chart image"
    return True, f"indices all p^{m}"

def _suite_intrinsic_limits(args, ctx, rng):
    group = UniformGroup.family(args.m or 4, _d_or_random(args, ctx, rng), ctx)
    for n in range(1, 5):
        for _ in range(max(args.samples // 10, 3)):
            g = group.random_element(rng)
            h = group.random_element(rng)
            sum_dev = group.intrinsic_sum(g, h, n) - (g.vector() + h.vector())
            br_dev = group.intrinsic_bracket(g, h, n) - group.algebra.bracket(
                g.vector(), h.vector()
            )
            if group.ambient_valuation(sum_dev) < n + 3:
                return False, f"sum approximant too far at n={n}"
            if group.ambient_valuation(br_dev) < n + 3:
                return False, f"bracket approximant too far at n={n}"
    return True, "valuation gaps >= n+3"

def _suite_presentation_roundtrip(args, ctx, rng):
    m = args.m or 4
    group = UniformGroup.family(m, _d_or_random(args, ctx, rng), ctx)
    pres, _ = pres_mod.emit_presentation(m, None, ctx, group=group)
    gens = group.generators()
    for rel in pres.relators:
        word = group.commutator(gens[rel.i], gens[rel.j])
        for g, e in zip(gens, rel.exponents):
            word = group.mul(word, group.power(g, e))
        if not all(c.valuation >= ctx.N for c in group._as_bch(word)):
            return False, f"relator ({rel.i}, {rel.j}) does not vanish"
    expected = m * (m - 1) // 2
    if len(pres.relators) != expected:
        return False, f"expected {expected} relators"
    return True, f"{len(pres.relators)} relators vanish"


SUITES = {
    "jacobi": _suite_jacobi,
    "backend-agreement": _suite_backend_agreement,
    "group-axioms": _suite_group_axioms,
    "uniformity": _suite_uniformity,
    "intrinsic-limits": _suite_intrinsic_limits,
    "presentation-roundtrip": _suite_presentation_roundtrip,
}


def _d_or_random(args, ctx, rng):
    if getattr(args, "d", None):
        return _parse_padic(ctx, args.d)
    return ctx.random_unit(rng)


def cmd_verify(args) -> int:
    ctx = _context(args)
    names = list(SUITES) if args.suite == "all" else [args.suite]
    failures = 0
    for name in names:
        rng = random.Random(args.seed)
        ok, detail = SUITES[name](args, ctx, rng)
        print(f"SUITE {name}: {'PASS' if ok else 'FAIL'} ({detail})")
        if not ok:
            failures += 1
    return EXIT_SUITE if failures else EXIT_OK


# -- entry point ---------------------------------------------------------------


def build_parser() -> _Parser:
    parser = _Parser(prog="padiclie", description=__doc__)
    subs = parser.add_subparsers(dest="command", required=True)

    sp = subs.add_parser("construct", help="build a family algebra file")
    _add_common(sp)
    sp.add_argument("--scaled", action="store_true", help="scale by p^2 (powerful)")
    sp.add_argument("--out", type=str, help="algebra JSON output path")
    sp.set_defaults(func=cmd_construct)

    sp = subs.add_parser("invariant", help="normalized adjoint invariant")
    _add_common(sp)
    sp.set_defaults(func=cmd_invariant)

    sp = subs.add_parser("distinguish", help="separate two parameters")
    _add_common(sp)
    sp.add_argument("--l", type=str, required=True, help="second unit parameter")
    sp.set_defaults(func=cmd_distinguish)

    sp = subs.add_parser("present", help="emit the finite presentation")
    _add_common(sp)
    sp.add_argument("--compare-remark", action="store_true",
                    help="compare the rank-4 relators with their closed form")
    sp.add_argument("--out", type=str, help="presentation text output path")
    sp.set_defaults(func=cmd_present)

    sp = subs.add_parser("growth", help="subgroup-growth coefficients")
    _add_common(sp)
    sp.add_argument("--max-index", type=int, default=2, help="largest index exponent")
    sp.add_argument("--levels", type=int, default=None, help="cap on quotient level")
    sp.add_argument("--budget", type=int, default=growth_mod.DEFAULT_BUDGET,
                    help="element budget for quotients")
    sp.add_argument("--out", type=str, help="CSV output path")
    sp.set_defaults(func=cmd_growth)

    sp = subs.add_parser("verify", help="run a named verification suite")
    sp.add_argument("--suite", type=str, default="all",
                    choices=sorted(SUITES) + ["all"])
    sp.add_argument("--p", type=int, default=5)
    sp.add_argument("--prec", type=int, default=24)
    sp.add_argument("--k", type=int, help="family rank (alias of --m)")
    sp.add_argument("--m", type=int, help="family rank (alias of --k)")
    sp.add_argument("--d", type=str, help="unit parameter (random if omitted)")
    sp.add_argument("--levels", type=int, default=2)
    sp.add_argument("--samples", type=int, default=25)
    sp.add_argument("--seed", type=int, default=42)
    sp.set_defaults(func=cmd_verify)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except BudgetExceededError as exc:
        print(f"budget exceeded: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except (PadicLieError, ValueError) as exc:
        print(f"precondition violated: {exc}", file=sys.stderr)
        return EXIT_PRECONDITION


if __name__ == "__main__":
    sys.exit(main())
