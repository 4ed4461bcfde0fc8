"""Existence of the MLE and extended-MLE reduction via facial sets.

The MLE of the cell means exists iff the observed sufficient marginals
lie in the relative interior of the marginal cone.  Working with the
zero pattern directly, non-existence is witnessed by a vector ``zeta``
with ``A_+ zeta = 0`` and ``A_0 zeta`` non-negative and nonzero; the
co-facial set collects the zero cells whose coordinate can be made
strictly positive by some witness, maximised over all of them.  Cells in
the co-facial set have extended-MLE mean zero and are dropped; the
design restricted to the facial set is reduced to full column rank and
fitted as usual.

The maximal-cardinality search runs as an iterated exact LP in nullspace
coordinates: parametrising ``zeta = N beta`` makes the equality block
vanish identically, and collapsing duplicate zero-cell coefficient rows
keeps the tableau tiny.  Each round either certifies at least one new
strictly-positive cell or proves that no remaining cell can move, so at
most ``|L_0|`` rounds occur; witnesses accumulate by summation, which
preserves certified positivity on the cone.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from . import ratlinalg
from .model import DesignMatrix, ModelTerm, Table
from .ratlinalg import LpProblem, solve_lp
from .redundancy import DerivativeStructure, analyze_redundancy

__all__ = [
    "EmleReport",
    "mle_exists",
    "facial_set",
    "reduce_design_facial",
    "haberman_delta_check",
]


@dataclass(frozen=True)
class EmleReport:
    """Outcome of the MLE-existence analysis.

    ``facial_cells`` and ``co_facial_cells`` partition the table;
    ``co_facial_cells`` is always a subset of the zero cells, and is
    empty exactly when the MLE exists.  ``zeta`` is a primitive integer
    witness satisfying ``A_(i) . zeta = 0`` on the facial set and
    ``> 0`` on the co-facial set (``None`` when the MLE exists).
    ``reduced_rows``/``kept_terms`` give the full-column-rank design
    over the facial cells.
    """

    mle_exists: bool
    facial_cells: tuple[int, ...]
    co_facial_cells: tuple[int, ...]
    zeta: tuple[int, ...] | None
    reduced_rows: tuple[tuple[int, ...], ...]
    kept_terms: tuple[ModelTerm, ...]
    kept_columns: tuple[int, ...]
    p_f: int

    @property
    def df(self) -> int:
        """Estimable cell means minus estimable model parameters."""
        return len(self.facial_cells) - self.p_f


def _facial_split(ds: DerivativeStructure) -> tuple[tuple[int, ...], tuple[Fraction, ...] | None]:
    """Return (co-facial cells, accumulated rational witness in design space)."""
    design = ds.design
    zero_cells = ds.zero_cells
    basis = ds.alpha_basis
    if not zero_cells or not basis:
        return (), None
    d = len(basis)

    # Zero-cell rows in nullspace coordinates; identical rows collapse.
    groups: dict[tuple[int, ...], list[int]] = {}
    for cell in zero_cells:
        row = design.row(cell)
        v = tuple(sum(r * a for r, a in zip(row, alpha)) for alpha in basis)
        if any(v):
            groups.setdefault(v, []).append(cell)

    if not groups:
        return (), None

    keys = sorted(groups)
    certified: set[tuple[int, ...]] = set()
    beta_acc = [Fraction(0)] * d

    while len(certified) < len(keys):
        open_keys = [k for k in keys if k not in certified]
        # Variables: beta+ (d), beta- (d), s_g per open group.
        nvars = 2 * d + len(open_keys)
        rows, senses, rhs = [], [], []
        for k in keys:
            coef = list(k) + [-x for x in k] + [0] * len(open_keys)
            if k in certified:
                rows.append(coef)  # keep certified coordinates non-negative
                senses.append(">=")
                rhs.append(0)
        for g, k in enumerate(open_keys):
            coef = list(k) + [-x for x in k] + [0] * len(open_keys)
            coef[2 * d + g] = -1
            rows.append(coef)
            senses.append(">=")
            rhs.append(0)
            cap = [0] * nvars
            cap[2 * d + g] = 1
            rows.append(cap)
            senses.append("<=")
            rhs.append(1)
        objective = [0] * (2 * d) + [1] * len(open_keys)
        sol = solve_lp(LpProblem.build(objective, rows, senses, rhs, maximize=True))
        assert sol.status == "optimal", sol.status
        if sol.objective == 0:
            break
        beta = [sol.x[j] - sol.x[d + j] for j in range(d)]
        newly = [
            k for k in open_keys if sum(v * b for v, b in zip(k, beta)) > 0
        ]
        assert newly, "positive objective must certify at least one group"
        certified.update(newly)
        beta_acc = [a + b for a, b in zip(beta_acc, beta)]

    if not certified:
        return (), None
    co_facial = sorted(c for k in certified for c in groups[k])
    zeta = [
        sum(b * Fraction(alpha[s]) for b, alpha in zip(beta_acc, basis))
        for s in range(design.p)
    ]
    return tuple(co_facial), tuple(zeta)


def _canonical_witness(zeta: tuple[Fraction, ...]) -> tuple[int, ...]:
    """Scale a rational witness to primitive integers, preserving sign."""
    from math import gcd, lcm

    denom = lcm(*(z.denominator for z in zeta)) if zeta else 1
    ints = [int(z * denom) for z in zeta]
    g = 0
    for x in ints:
        g = gcd(g, abs(x))
    if g > 1:
        ints = [x // g for x in ints]
    return tuple(ints)


def facial_set(design: DesignMatrix, table: Table) -> EmleReport:
    """Compute the facial/co-facial split and the reduced design.

    With no zero cells, or a full-rank positive block, the facial set is
    the whole table and the MLE exists.
    """
    ds = analyze_redundancy(design, table)
    co_facial, zeta_frac = _facial_split(ds)
    co_set = set(co_facial)
    facial = tuple(i for i in range(1, design.n + 1) if i not in co_set)
    zeta = None
    if co_facial:
        zeta = _canonical_witness(zeta_frac)
        for i in facial:
            assert sum(z * x for z, x in zip(zeta, design.row(i))) == 0
        for i in co_facial:
            assert sum(z * x for z, x in zip(zeta, design.row(i))) > 0
    rows, kept = reduce_design_facial(design, facial)
    return EmleReport(
        mle_exists=not co_facial,
        facial_cells=facial,
        co_facial_cells=tuple(co_facial),
        zeta=zeta,
        reduced_rows=rows,
        kept_terms=tuple(design.terms[j] for j in kept),
        kept_columns=kept,
        p_f=len(kept),
    )


def mle_exists(design: DesignMatrix, table: Table) -> bool:
    """Whether the MLE of the cell means exists.

    Shortcut: a full-rank positive-cell block settles it immediately;
    otherwise the facial-set search decides.
    """
    ds = analyze_redundancy(design, table)
    if ds.rank == design.p:
        return True
    co_facial, _ = _facial_split(ds)
    return not co_facial


def reduce_design_facial(
    design: DesignMatrix, facial_cells: tuple[int, ...]
) -> tuple[tuple[tuple[int, ...], ...], tuple[int, ...]]:
    """Restrict the design to the facial cells and drop dependent columns.

    Keeps the leftmost maximal independent column subset (the RREF pivot
    columns of the restricted block), so the result has full column
    rank.  Returns ``(rows, kept column indices)``.
    """
    if not facial_cells:
        raise ValueError("facial set must be nonempty")
    block = [design.row(i) for i in facial_cells]
    _, pivots = ratlinalg.rref(block)
    rows = tuple(tuple(r[j] for j in pivots) for r in block)
    return rows, tuple(pivots)


def haberman_delta_check(
    design: DesignMatrix, table: Table, delta
) -> bool:
    """Verify a proposed existence witness ``delta`` exactly.

    ``delta`` certifies MLE existence when it is orthogonal to every
    design column and ``y_i + delta_i > 0`` for every cell.  This is a
    verification utility, not a search.
    """
    delta = [Fraction(x) for x in delta]
    if len(delta) != design.n:
        raise ValueError(f"delta of length {len(delta)} for {design.n} cells")
    for s in range(design.p):
        if sum(d * design.rows[i][s] for i, d in enumerate(delta)) != 0:
            return False
    return all(y + d > 0 for y, d in zip(table.counts, delta))
