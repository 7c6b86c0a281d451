"""Exact p-adic Lie algebras, uniform pro-p groups, and subgroup growth.

Builds one-parameter families of metabelian Z_p-Lie algebras, computes
the normalized adjoint invariant that separates them, equips their
p^2-scaled versions with the Campbell-Hausdorff group law (two
independent backends), emits finite presentations, and counts subgroups
of finite quotients -- everything in exact arithmetic at a configurable
number of p-adic digits.
"""

from .padic import (
    PAdicContext,
    PAdicMatrix,
    PAdicScalar,
    echelonize,
    mat_det_trace,
    mat_exp,
    solve_in_span,
)
from .liealg import DerivedSubalgebra, JacobiReport, LieAlgebraZp, LieVector, is_powerful_algebra
from .families import (
    DistinguishResult,
    FamilyParams,
    InvariantValue,
    build_family,
    commensurability_invariant,
    distinguish,
    family_adjoint,
    family_params,
)
from .bch import (
    BchSeries,
    BchTerm,
    MetabelianBch,
    TruncationCertificate,
    bch_coefficients,
    bch_eval,
    metabelian_coefficients,
    truncation_degree,
)
from .group import (
    GroupElement,
    UniformGroup,
    frattini_rank,
    is_powerful_group,
    lower_p_series,
)

__version__ = "0.1.0"
