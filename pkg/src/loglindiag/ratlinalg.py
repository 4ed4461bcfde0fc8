"""Exact integer/rational matrix kernel and simplex solver.

Every identifiability decision in this package reduces to a rank, a
nullspace, or a cone-feasibility question, and all of them are answered
here in exact arithmetic.  Floating point never enters a decision path:
a tolerance-based rank would mislabel the nearly-deficient matrices that
sparse tables routinely produce.

Elimination is fraction-free (Bareiss/Montante): rows are scaled to
integers once, then every update ``(piv*a - f*b) / prev`` divides
exactly, so the hot loops run on machine integers with polynomially
bounded growth.  Pivots are chosen by largest absolute value for
determinism.  The simplex solver keeps a dense ``Fraction`` tableau and
uses Bland's rule, trading speed for guaranteed termination on the
degenerate cone problems the facial-set search produces.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import gcd
from typing import Sequence

__all__ = [
    "LinAlgError",
    "RationalMatrix",
    "exact_rank",
    "rref",
    "nullspace",
    "solve_columns",
    "LpProblem",
    "LpSolution",
    "solve_lp",
]

Rows = Sequence[Sequence[object]]


class LinAlgError(ValueError):
    """Raised on malformed matrices or linear programs."""


@dataclass(frozen=True)
class RationalMatrix:
    """A dense matrix of exact rationals."""

    entries: tuple[tuple[Fraction, ...], ...]

    def __post_init__(self):
        if not self.entries or not self.entries[0]:
            raise LinAlgError("matrix dimensions must be positive")
        width = len(self.entries[0])
        if any(len(r) != width for r in self.entries):
            raise LinAlgError("ragged rows in matrix")

    @classmethod
    def from_rows(cls, rows: Rows) -> "RationalMatrix":
        return cls(tuple(tuple(Fraction(x) for x in row) for row in rows))

    @property
    def n_rows(self) -> int:
        return len(self.entries)

    @property
    def n_cols(self) -> int:
        return len(self.entries[0])


def _as_rows(m: RationalMatrix | Rows) -> list[list[Fraction]]:
    if isinstance(m, RationalMatrix):
        return [list(r) for r in m.entries]
    return [[Fraction(x) for x in row] for row in m]


def _int_rows(m: RationalMatrix | Rows) -> tuple[list[list[int]], int]:
    """Scale each row by its denominators' lcm; returns (rows, ncols).

    Row scaling by positive factors preserves rank, row space and
    nullspace, which is all the callers below rely on.
    """
    rows = _as_rows(m)
    if not rows:
        raise LinAlgError("matrix has no rows")
    ncols = len(rows[0])
    if ncols == 0 or any(len(r) != ncols for r in rows):
        raise LinAlgError("ragged or empty rows in matrix")
    out = []
    for row in rows:
        scale = 1
        for x in row:
            scale = scale * x.denominator // gcd(scale, x.denominator)
        out.append([int(x * scale) for x in row])
    return out, ncols


def _eliminate(rows: list[list[int]], ncols: int, jordan: bool) -> tuple[list[int], list[list[int]], int]:
    """Fraction-free elimination in place.

    Returns ``(pivot_columns, rows, last_pivot)``.  With ``jordan`` the
    result is a scaled reduced row-echelon form: each pivot row ``r`` has
    ``rows[r][pivot_columns[r]] == last_pivot`` and zeros in the other
    pivot columns, so dividing by ``last_pivot`` yields the RREF.
    """
    nrows = len(rows)
    pivots: list[int] = []
    prev = 1
    r = 0
    for c in range(ncols):
        if r == nrows:
            break
        best, best_abs = -1, 0
        for i in range(r, nrows):
            a = abs(rows[i][c])
            if a > best_abs:
                best, best_abs = i, a
        if best < 0:
            continue
        if best != r:
            rows[r], rows[best] = rows[best], rows[r]
        piv = rows[r][c]
        pivot_row = rows[r]
        targets = range(nrows) if jordan else range(r + 1, nrows)
        for i in targets:
            if i == r:
                continue
            f = rows[i][c]
            row_i = rows[i]
            if f == 0:
                # The Bareiss minor identity needs the rescale even for
                # rows untouched by this pivot, or later divisions break.
                if piv != prev:
                    rows[i] = [piv * x // prev for x in row_i]
                continue
            rows[i] = [(piv * x - f * y) // prev for x, y in zip(row_i, pivot_row)]
        prev = piv
        pivots.append(c)
        r += 1
    return pivots, rows, prev


def exact_rank(m: RationalMatrix | Rows) -> int:
    """Exact rank via fraction-free elimination with magnitude pivoting."""
    rows, ncols = _int_rows(m)
    pivots, _, _ = _eliminate(rows, ncols, jordan=False)
    return len(pivots)


def rref(m: RationalMatrix | Rows) -> tuple[RationalMatrix, tuple[int, ...]]:
    """Reduced row-echelon form over exact rationals.

    Returns the RREF (same shape as the input, zero rows at the bottom)
    and the pivot columns as 0-based indices in increasing order.
    """
    rows, ncols = _int_rows(m)
    nrows = len(rows)
    pivots, mat, last = _eliminate(rows, ncols, jordan=True)
    reduced = []
    for r in range(len(pivots)):
        reduced.append(tuple(Fraction(x, last) for x in mat[r]))
    zero = (Fraction(0),) * ncols
    reduced.extend([zero] * (nrows - len(pivots)))
    return RationalMatrix(tuple(reduced)), tuple(pivots)


def _primitive(vec: list[int]) -> tuple[int, ...]:
    """Scale an integer vector to primitive form with positive leading entry."""
    g = 0
    for x in vec:
        g = gcd(g, abs(x))
    if g > 1:
        vec = [x // g for x in vec]
    for x in vec:
        if x != 0:
            if x < 0:
                vec = [-v for v in vec]
            break
    return tuple(vec)


def nullspace(m: RationalMatrix | Rows) -> tuple[tuple[int, ...], ...]:
    """Canonical basis of the right nullspace, as primitive integer vectors.

    The basis comes from RREF back-substitution, one vector per free
    column in increasing column order; each vector is scaled to integer
    entries with gcd one and a positive first nonzero entry.  Empty when
    the matrix has full column rank.
    """
    rows, ncols = _int_rows(m)
    pivots, mat, last = _eliminate(rows, ncols, jordan=True)
    pivot_set = set(pivots)
    basis = []
    for f in range(ncols):
        if f in pivot_set:
            continue
        vec = [0] * ncols
        vec[f] = last
        for r, c in enumerate(pivots):
            vec[c] = -mat[r][f]
        basis.append(_primitive(vec))
    return tuple(basis)


def solve_columns(a: RationalMatrix | Rows, b: RationalMatrix | Rows) -> list[tuple[Fraction, ...]]:
    """Solve ``A x = b`` exactly for each column of ``B``.

    Requires ``A`` to have full column rank and every column of ``B`` to
    lie in the column space of ``A``; raises :class:`LinAlgError`
    otherwise.  Returns one solution vector per column of ``B``.
    """
    a_rows = _as_rows(a)
    b_rows = _as_rows(b)
    if len(a_rows) != len(b_rows):
        raise LinAlgError("A and B must have the same number of rows")
    na = len(a_rows[0])
    nb = len(b_rows[0])
    aug = [list(ra) + list(rb) for ra, rb in zip(a_rows, b_rows)]
    rows, _ = _int_rows(aug)
    nrows = len(rows)

    # Restrict pivoting to the A block, then check the leftover rows.
    pivots: list[int] = []
    prev = 1
    r = 0
    for c in range(na):
        if r == nrows:
            break
        best, best_abs = -1, 0
        for i in range(r, nrows):
            v = abs(rows[i][c])
            if v > best_abs:
                best, best_abs = i, v
        if best < 0:
            continue
        if best != r:
            rows[r], rows[best] = rows[best], rows[r]
        piv = rows[r][c]
        pivot_row = rows[r]
        for i in range(nrows):
            if i == r:
                continue
            f = rows[i][c]
            if f == 0:
                if piv != prev:
                    rows[i] = [piv * x // prev for x in rows[i]]
                continue
            rows[i] = [(piv * x - f * y) // prev for x, y in zip(rows[i], pivot_row)]
        prev = piv
        pivots.append(c)
        r += 1

    if len(pivots) != na:
        raise LinAlgError(f"matrix has column rank {len(pivots)} < {na}")
    for i in range(len(pivots), nrows):
        if any(rows[i][na + j] != 0 for j in range(nb)):
            raise LinAlgError("inconsistent system: right-hand side outside column space")

    solutions = []
    for j in range(nb):
        x = [Fraction(0)] * na
        for r, c in enumerate(pivots):
            x[c] = Fraction(rows[r][na + j], prev)
        solutions.append(tuple(x))
    return solutions


# ---------------------------------------------------------------------------
# Exact linear programming


@dataclass(frozen=True)
class LpProblem:
    """``max (or min) c.x  s.t.  rows x {<=,>=,==} rhs, x >= 0``, all rational."""

    objective: tuple[Fraction, ...]
    rows: tuple[tuple[Fraction, ...], ...]
    senses: tuple[str, ...]
    rhs: tuple[Fraction, ...]
    maximize: bool = True

    @classmethod
    def build(cls, objective, rows, senses, rhs, maximize=True) -> "LpProblem":
        return cls(
            tuple(Fraction(x) for x in objective),
            tuple(tuple(Fraction(x) for x in row) for row in rows),
            tuple(senses),
            tuple(Fraction(x) for x in rhs),
            maximize,
        )


@dataclass(frozen=True)
class LpSolution:
    status: str  # "optimal" | "infeasible" | "unbounded"
    x: tuple[Fraction, ...] | None
    objective: Fraction | None


def _pivot(tableau: list[list[Fraction]], basis: list[int], row: int, col: int) -> None:
    piv = tableau[row][col]
    tableau[row] = [v / piv for v in tableau[row]]
    pivot_row = tableau[row]
    for i, tr in enumerate(tableau):
        if i == row:
            continue
        f = tr[col]
        if f != 0:
            tableau[i] = [a - f * b for a, b in zip(tr, pivot_row)]
    basis[row] = col


def _simplex(tableau: list[list[Fraction]], basis: list[int], cost: list[Fraction],
             allowed: int) -> tuple[str, list[Fraction]]:
    """Minimize ``cost . x`` on the tableau with Bland's rule.

    ``allowed`` caps the columns that may enter the basis (artificial
    columns are excluded in phase two).  Returns the final reduced-cost
    row alongside the status.
    """
    m = len(tableau)
    # Reduced costs: c_j - c_B . B^-1 A_j, maintained by elimination.
    z = list(cost)
    rhs_z = Fraction(0)
    for i in range(m):
        f = z[basis[i]]
        if f != 0:
            row = tableau[i]
            z = [a - f * b for a, b in zip(z, row[:-1])]
            rhs_z -= f * row[-1]
    while True:
        enter = -1
        for j in range(allowed):
            if z[j] < 0:
                enter = j
                break
        if enter < 0:
            return "optimal", z
        leave = -1
        best = None
        for i in range(m):
            a = tableau[i][enter]
            if a > 0:
                ratio = tableau[i][-1] / a
                if best is None or ratio < best or (ratio == best and basis[i] < basis[leave]):
                    best = ratio
                    leave = i
        if leave < 0:
            return "unbounded", z
        _pivot(tableau, basis, leave, enter)
        f = z[enter]
        if f != 0:
            row = tableau[leave]
            z = [a - f * b for a, b in zip(z, row[:-1])]
            rhs_z -= f * row[-1]


def solve_lp(problem: LpProblem) -> LpSolution:
    """Exact two-phase simplex with Bland's anti-cycling rule.

    The status is exactly one of ``optimal``, ``infeasible`` or
    ``unbounded``; when optimal, the primal vector satisfies every
    constraint exactly.
    """
    n = len(problem.objective)
    m = len(problem.rows)
    if len(problem.senses) != m or len(problem.rhs) != m:
        raise LinAlgError("constraint rows, senses and rhs lengths differ")
    for row in problem.rows:
        if len(row) != n:
            raise LinAlgError(f"constraint row of length {len(row)} for {n} variables")
    for s in problem.senses:
        if s not in ("<=", ">=", "=="):
            raise LinAlgError(f"unknown constraint sense {s!r}")

    # Normalize to b >= 0, then append slack/surplus and artificial columns.
    norm = []
    for row, sense, b in zip(problem.rows, problem.senses, problem.rhs):
        row = [Fraction(x) for x in row]
        b = Fraction(b)
        if b < 0:
            row = [-x for x in row]
            b = -b
            sense = {"<=": ">=", ">=": "<=", "==": "=="}[sense]
        norm.append((row, sense, b))

    n_slack = sum(1 for _, s, _ in norm if s != "==")
    artificials = []
    tableau: list[list[Fraction]] = []
    basis: list[int] = []
    slack_at = 0
    total = n + n_slack  # artificial columns appended after this
    for i, (row, sense, b) in enumerate(norm):
        full = row + [Fraction(0)] * n_slack
        if sense == "<=":
            full[n + slack_at] = Fraction(1)
            basis_col = n + slack_at
            slack_at += 1
        elif sense == ">=":
            full[n + slack_at] = Fraction(-1)
            slack_at += 1
            basis_col = -1  # needs an artificial
        else:
            basis_col = -1
        if basis_col < 0:
            artificials.append(i)
        tableau.append(full + [b])
        basis.append(basis_col)

    n_art = len(artificials)
    for k, i in enumerate(artificials):
        for r in range(m):
            tableau[r].insert(total + k, Fraction(1 if r == i else 0))
        basis[i] = total + k
    # move rhs back to last position (insert shifted it only when needed)
    width = total + n_art + 1

    if n_art:
        cost1 = [Fraction(0)] * (width - 1)
        for k in range(n_art):
            cost1[total + k] = Fraction(1)
        status, _ = _simplex(tableau, basis, cost1, allowed=width - 1)
        assert status == "optimal"  # phase one is always bounded below by 0
        infeas = Fraction(0)
        for i in range(m):
            if basis[i] >= total:
                infeas += tableau[i][-1]
        if infeas > 0:
            return LpSolution("infeasible", None, None)
        # Drive remaining artificials (basic at zero) out of the basis.
        drop_rows = []
        for i in range(m):
            if basis[i] >= total:
                for j in range(total):
                    if tableau[i][j] != 0:
                        _pivot(tableau, basis, i, j)
                        break
                else:
                    drop_rows.append(i)
        for i in reversed(drop_rows):
            del tableau[i]
            del basis[i]
        m = len(tableau)

    sign = Fraction(-1) if problem.maximize else Fraction(1)
    cost2 = [sign * c for c in problem.objective] + [Fraction(0)] * (width - 1 - n)
    status, _ = _simplex(tableau, basis, cost2, allowed=total)
    if status == "unbounded":
        return LpSolution("unbounded", None, None)

    x = [Fraction(0)] * n
    for i in range(m):
        if basis[i] < n:
            x[basis[i]] = tableau[i][-1]
    obj = sum(c * v for c, v in zip(problem.objective, x))
    return LpSolution("optimal", tuple(x), obj)
