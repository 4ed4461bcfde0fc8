"""Ridge-direction analysis: which flat directions impose constraints.

A redundant model's likelihood is flat along each nullspace direction
only in its sufficient-statistic part; the zero cells still contribute
``-sum mu_i`` terms that vary along the ridge.  Setting the directional
derivative of the log-likelihood to zero along a direction ``alpha``
gives ``sum_i (A_0 alpha)_i · mu_i = 0`` over the zero cells.  Whether
that equation admits finite solutions is decided exactly by the sign
pattern of ``A_0 alpha``:

* all zero — the identity holds vacuously (no information);
* mixed signs — a genuine constraint on the parameters holds at any
  finite maximum;
* semidefinite nonzero — the likelihood increases forever along the
  ridge and some parameters diverge to minus infinity.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from . import ratlinalg
from .model import DesignMatrix, Table
from .redundancy import DerivativeStructure

__all__ = [
    "DirectionVerdict",
    "EsotericConstraint",
    "score_form",
    "derive_constraint",
    "augmented_identifiability",
]


@dataclass(frozen=True)
class DirectionVerdict:
    """Classification of one flat direction by its zero-cell coefficients.

    ``coeffs[k]`` is the inner product of the design row of
    ``zero_cells[k]`` with ``alpha``.
    """

    alpha: tuple[int, ...]
    zero_cells: tuple[int, ...]
    coeffs: tuple[int, ...]
    kind: str  # "vacuous" | "constraint" | "divergent"


def _classify(coeffs: Sequence[int]) -> str:
    has_pos = any(c > 0 for c in coeffs)
    has_neg = any(c < 0 for c in coeffs)
    if not has_pos and not has_neg:
        return "vacuous"
    if has_pos and has_neg:
        return "constraint"
    return "divergent"


def score_form(
    alpha: Sequence[int], design: DesignMatrix, table: Table
) -> DirectionVerdict:
    """Evaluate the directional score along ``alpha`` and classify it.

    The score form reduces exactly to ``-sum_{i in L_0} (A_0 alpha)_i
    mu_i`` because ``alpha`` annihilates the positive-cell block; that
    is verified and violations raise :class:`ValueError`.
    """
    alpha = tuple(alpha)
    if len(alpha) != design.p:
        raise ValueError(f"direction of length {len(alpha)} for p = {design.p}")
    for i in table.positive_cells:
        if sum(a * x for a, x in zip(alpha, design.row(i))) != 0:
            raise ValueError(
                "direction is not in the nullspace of the positive-cell design block"
            )
    zero_cells = table.zero_cells
    coeffs = tuple(
        sum(a * x for a, x in zip(alpha, design.row(i))) for i in zero_cells
    )
    return DirectionVerdict(alpha, zero_cells, coeffs, _classify(coeffs))


@dataclass(frozen=True)
class EsotericConstraint:
    """A hidden constraint imposed by maximising a ridge-bearing likelihood.

    ``terms`` lists ``(c_i, cell_i)`` meaning ``sum c_i · mu_cell_i = 0``
    (each ``mu = exp(A_(i) θ)``), with at least one coefficient of each
    sign.  When the sum has exactly two cells with opposite equal
    coefficients the constraint is linear in the parameters:
    ``linear_form . θ = 0`` with ``linear_form = A_(i) - A_(j)`` for the
    positive-coefficient cell ``i``.
    """

    terms: tuple[tuple[int, int], ...]  # (coefficient, 1-based cell rank)
    linear_form: tuple[int, ...] | None
    source_alpha: tuple[int, ...]

    def exp_display(self, design: DesignMatrix, table: Table) -> str:
        from .redundancy import _coef_prefix

        parts = []
        for coef, cell in self.terms:
            parts.append(
                _coef_prefix(Fraction(coef), not parts) + f"μ({table.cell_label(cell)})"
            )
        return "".join(parts) + " = 0"

    def linear_display(self, design: DesignMatrix) -> str | None:
        from .redundancy import render_combination

        if self.linear_form is None:
            return None
        body = render_combination(
            self.linear_form, design.terms, omit_subscripts=design.all_binary
        )
        return f"{body} = 0"


def derive_constraint(verdict: DirectionVerdict, design: DesignMatrix) -> EsotericConstraint | None:
    """Derive the constraint encoded by a mixed-sign direction.

    The exponential-sum form always exists for a mixed-sign verdict; the
    linear simplification is attempted only for the two-cell
    equal-magnitude case.  If the two cells share an identical design
    row the constraint degenerates to ``0 = 0`` and ``None`` is returned
    (the direction is effectively vacuous).  Raises for verdicts that do
    not encode a constraint.
    """
    if verdict.kind != "constraint":
        raise ValueError(f"direction of kind {verdict.kind!r} encodes no constraint")
    # Signs flip once: the directional score is -sum (A_0 alpha)_i mu_i.
    terms = tuple(
        (-c, cell) for c, cell in zip(verdict.coeffs, verdict.zero_cells) if c != 0
    )
    linear = None
    if len(terms) == 2 and terms[0][0] == -terms[1][0]:
        (c_a, cell_a), (_, cell_b) = terms
        pos, neg = (cell_a, cell_b) if c_a > 0 else (cell_b, cell_a)
        g = tuple(x - y for x, y in zip(design.row(pos), design.row(neg)))
        if all(x == 0 for x in g):
            return None
        linear = g
    return EsotericConstraint(terms, linear, verdict.alpha)


def augmented_identifiability(
    constraints: Sequence[EsotericConstraint], ds: DerivativeStructure
) -> tuple[bool, int]:
    """Rank of the positive-cell block augmented by linear constraints.

    Appends every available ``linear_form`` as an extra row and
    recomputes the exact rank; returns ``(all parameters estimable,
    new rank)``.  Constraint rows already inside the row space leave the
    rank unchanged.
    """
    rows = ds.positive_rows()
    extra = [c.linear_form for c in constraints if c.linear_form is not None]
    if not extra:
        return ds.rank == ds.design.p, ds.rank
    new_rank = ratlinalg.exact_rank(list(rows) + list(extra))
    return new_rank == ds.design.p, new_rank
