"""Parameter-redundancy analysis for sparse tables.

Each sampling zero knocks one column out of the likelihood's derivative
structure, leaving only the design rows at positive cells to carry
information.  The analysis therefore splits the design by the observed
zero pattern, takes the exact rank and nullspace of the positive-cell
block, and from the nullspace derives which parameters, parameter
combinations and cell means remain estimable.  Everything here is exact;
no tolerance enters any verdict.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from . import ratlinalg
from .model import DesignMatrix, ModelTerm, Table, TableError

__all__ = [
    "DerivativeStructure",
    "LinearCombination",
    "ReducedModel",
    "analyze_redundancy",
    "directly_estimable",
    "estimable_combinations",
    "estimable_cells",
    "reduce_model",
]


@dataclass(frozen=True)
class DerivativeStructure:
    """Rank/nullspace decomposition of the design split by the zero pattern.

    ``alpha_basis`` spans the flat directions of the likelihood: each
    vector satisfies ``A_plus . alpha = 0`` exactly, in canonical
    (primitive-integer, positive-leading) form.
    """

    design: DesignMatrix
    table: Table
    positive_cells: tuple[int, ...]
    zero_cells: tuple[int, ...]
    rank: int
    alpha_basis: tuple[tuple[int, ...], ...]

    @property
    def deficiency(self) -> int:
        return self.design.p - self.rank

    @property
    def redundant(self) -> bool:
        return self.deficiency > 0

    def positive_rows(self) -> list[tuple[int, ...]]:
        return [self.design.row(i) for i in self.positive_cells]

    def zero_rows(self) -> list[tuple[int, ...]]:
        return [self.design.row(i) for i in self.zero_cells]


def analyze_redundancy(design: DesignMatrix, table: Table) -> DerivativeStructure:
    """Split the design by the zero pattern and extract rank and nullspace.

    The model is parameter redundant iff the returned deficiency is
    positive.  Raises :class:`TableError` for an all-zero table, which
    carries no likelihood information at all.
    """
    if design.n != table.n_cells or design.levels != table.levels:
        raise TableError(
            f"table shape {table.levels} does not match design over {design.levels}"
        )
    positive = table.positive_cells
    if not positive:
        raise TableError("all cell counts are zero: nothing can be estimated")
    a_plus = [design.row(i) for i in positive]
    rank = ratlinalg.exact_rank(a_plus)
    basis = () if rank == design.p else ratlinalg.nullspace(a_plus)
    return DerivativeStructure(
        design=design,
        table=table,
        positive_cells=positive,
        zero_cells=table.zero_cells,
        rank=rank,
        alpha_basis=basis,
    )


def directly_estimable(ds: DerivativeStructure) -> tuple[ModelTerm, ...]:
    """Terms whose coordinate vanishes in every flat direction.

    These parameters keep unique ML estimates even in a redundant model.
    With deficiency zero every term qualifies.
    """
    terms = ds.design.terms
    if not ds.alpha_basis:
        return terms
    return tuple(
        t for s, t in enumerate(terms) if all(a[s] == 0 for a in ds.alpha_basis)
    )


def _coef_prefix(coef: Fraction, first: bool) -> str:
    sign = "-" if coef < 0 else "+"
    mag = abs(coef)
    body = "" if mag == 1 else f"{mag}·"
    if first:
        return body if coef > 0 else f"-{body}"
    return f" {sign} {body}"


def render_combination(coefficients, terms, omit_subscripts: bool = False) -> str:
    """Render a coefficient vector over model terms, e.g. ``-θ + θ^{XY}_{21}``."""
    parts = []
    for coef, term in zip(coefficients, terms):
        if coef == 0:
            continue
        parts.append(_coef_prefix(Fraction(coef), not parts) + term.label(omit_subscripts))
    return parts and "".join(parts) or "0"


@dataclass(frozen=True)
class LinearCombination:
    """An estimable linear function of the parameters.

    The coefficient vector lies in the row space of the positive-cell
    design block, i.e. it is orthogonal to every flat direction.
    """

    coefficients: tuple[Fraction, ...]
    display: str


def estimable_combinations(ds: DerivativeStructure) -> tuple[LinearCombination, ...]:
    """The canonical basis of estimable parameter combinations.

    Row-reducing the flat directions marks one "eliminated" pivot
    parameter per direction; every non-pivot parameter then yields the
    combination ``θ_s - sum_r R[r][s] · θ_pivot(r)``, which is exactly
    orthogonal to the whole nullspace.  With deficiency one and the
    intercept eliminated this reproduces presentations like
    ``-θ + θ^{XY}_{21}``.  With deficiency zero the parameters themselves
    are returned.
    """
    terms = ds.design.terms
    p = ds.design.p
    omit = ds.design.all_binary
    if not ds.alpha_basis:
        return tuple(
            LinearCombination(
                tuple(Fraction(int(i == s)) for i in range(p)),
                terms[s].label(omit_subscripts=omit),
            )
            for s in range(p)
        )
    reduced, pivots = ratlinalg.rref(ds.alpha_basis)
    pivot_set = set(pivots)
    combos = []
    for s in range(p):
        if s in pivot_set:
            continue
        coef = [Fraction(0)] * p
        coef[s] = Fraction(1)
        for r, c in enumerate(pivots):
            coef[c] = -reduced.entries[r][s]
        combos.append(LinearCombination(tuple(coef), render_combination(coef, terms, omit)))
    return tuple(combos)


def estimable_cells(ds: DerivativeStructure) -> tuple[int, ...]:
    """Cells whose mean is an estimable function of the parameters.

    A cell qualifies iff its design row is orthogonal to every flat
    direction (equivalently, lies in the row space of the positive-cell
    block).  Always a superset of the positive cells.
    """
    if not ds.alpha_basis:
        return tuple(range(1, ds.design.n + 1))
    out = []
    for i in range(1, ds.design.n + 1):
        row = ds.design.row(i)
        if all(sum(r * a for r, a in zip(row, alpha)) == 0 for alpha in ds.alpha_basis):
            out.append(i)
    return tuple(out)


@dataclass(frozen=True)
class ReducedModel:
    """The identifiable model on the estimable cells.

    ``design_rows[k]`` holds the unique coordinates of the design row of
    ``estimable_cells[k]`` in the basis of estimable combinations, so
    the reduced model reproduces every estimable log cell mean
    identically as a polynomial in the original parameters.
    """

    estimable_cells: tuple[int, ...]
    design_rows: tuple[tuple[Fraction, ...], ...]
    combinations: tuple[LinearCombination, ...]
    rank: int

    @property
    def df(self) -> int:
        """Degrees of freedom: estimable cell means minus estimable combinations."""
        return len(self.estimable_cells) - self.rank


def reduce_model(
    ds: DerivativeStructure,
    combos: tuple[LinearCombination, ...] | None = None,
    cells: tuple[int, ...] | None = None,
) -> ReducedModel:
    """Construct the reduced full-rank model over the estimable cells."""
    if combos is None:
        combos = estimable_combinations(ds)
    if cells is None:
        cells = estimable_cells(ds)
    design = ds.design
    if not ds.alpha_basis:
        rows = tuple(tuple(Fraction(x) for x in design.row(i)) for i in cells)
        return ReducedModel(cells, rows, combos, ds.rank)
    # Coordinates of each estimable design row in the combination basis:
    # solve K^T x = A_(i)^T where K stacks the combination coefficients.
    k_t = [[c.coefficients[s] for c in combos] for s in range(design.p)]
    targets = [[Fraction(design.row(i)[s]) for i in cells] for s in range(design.p)]
    try:
        solutions = ratlinalg.solve_columns(k_t, targets)
    except ratlinalg.LinAlgError as exc:  # pragma: no cover - would be a bug
        raise AssertionError(
            f"estimable cell has no coordinates in the combination basis: {exc}"
        ) from exc
    return ReducedModel(cells, tuple(solutions), combos, ds.rank)
