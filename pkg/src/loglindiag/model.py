"""Contingency tables and log-linear model design matrices.

A table over categorical variables ``V_1, ..., V_m`` with ``l_j`` levels
each has ``n = prod(l_j)`` cells.  Cells are addressed either by their
digit vector ``(i_1, ..., i_m)`` with ``0 <= i_j <= l_j - 1`` or by a
1-based linear rank in which the *first* variable varies fastest (mixed
radix, least significant digit first).

Models are sets of variable subsets.  A hierarchical formula such as
``(XY,XZ,YZ)`` is expanded downward-closed (every subset of a generator
is included, intercept first); an explicit bracket list such as
``[X, Y, XY]`` is taken as given, with the intercept prepended.  The
design matrix uses 0/1 dummy coding under corner-point constraints:
every parameter touching a variable's lowest level is dropped, so the
full matrix always has full column rank (this is verified exactly at
construction time).
"""

from __future__ import annotations

import csv
import io
import itertools
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

__all__ = [
    "ModelError",
    "FormulaError",
    "TableError",
    "VariableSpec",
    "Table",
    "ModelTerm",
    "ModelSpec",
    "DesignMatrix",
    "cell_rank",
    "cell_digits",
    "parse_model_formula",
    "enumerate_terms",
    "build_design_matrix",
    "table_from_csv",
    "table_from_json",
    "table_to_json_dict",
]


class ModelError(ValueError):
    """Base class for model and table construction errors."""


class FormulaError(ModelError):
    """Raised when a model formula cannot be parsed."""


class TableError(ModelError):
    """Raised when table data are malformed."""


@dataclass(frozen=True)
class VariableSpec:
    """One categorical variable: a short name and its number of levels."""

    name: str
    levels: int

    def __post_init__(self):
        if not self.name or any(c in self.name for c in " ,*:()[]"):
            raise ModelError(f"invalid variable name {self.name!r}")
        if self.levels < 2:
            raise ModelError(
                f"variable {self.name!r} needs at least 2 levels, got {self.levels}"
            )


def _check_unique_names(variables: Sequence[VariableSpec]) -> None:
    names = [v.name for v in variables]
    if len(set(names)) != len(names):
        raise ModelError(f"duplicate variable names in {names}")


def cell_rank(digits: Sequence[int], levels: Sequence[int]) -> int:
    """Map a cell digit vector to its 1-based linear rank.

    The first digit varies fastest: ``rank = 1 + i_1 + i_2*l_1 +
    i_3*l_1*l_2 + ...``.  For uniform levels this is the usual base-``l``
    ordering of cells.
    """
    if len(digits) != len(levels):
        raise ModelError(
            f"digit vector of length {len(digits)} does not match {len(levels)} variables"
        )
    rank = 0
    radix = 1
    for j, (d, l) in enumerate(zip(digits, levels)):
        if not 0 <= d < l:
            raise ModelError(f"digit {d} out of range [0, {l - 1}] at position {j}")
        rank += d * radix
        radix *= l
    return rank + 1


def cell_digits(rank: int, levels: Sequence[int]) -> tuple[int, ...]:
    """Inverse of :func:`cell_rank`: 1-based rank back to the digit vector."""
    n = 1
    for l in levels:
        n *= l
    if not 1 <= rank <= n:
        raise ModelError(f"cell rank {rank} out of range [1, {n}]")
    rem = rank - 1
    digits = []
    for l in levels:
        digits.append(rem % l)
        rem //= l
    return tuple(digits)


@dataclass(frozen=True)
class Table:
    """Observed Poisson cell counts in linear-rank order.

    ``counts[i]`` is the count of the cell with rank ``i + 1``.  Counts
    must be non-negative integers; real-valued tables are rejected.
    """

    variables: tuple[VariableSpec, ...]
    counts: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "variables", tuple(self.variables))
        _check_unique_names(self.variables)
        counts = tuple(self.counts)
        n = self.n_cells
        if len(counts) != n:
            raise TableError(f"expected {n} counts, got {len(counts)}")
        for c in counts:
            if not isinstance(c, int) or isinstance(c, bool) or c < 0:
                raise TableError(f"cell counts must be non-negative integers, got {c!r}")
        object.__setattr__(self, "counts", counts)

    @property
    def levels(self) -> tuple[int, ...]:
        return tuple(v.levels for v in self.variables)

    @property
    def n_cells(self) -> int:
        n = 1
        for v in self.variables:
            n *= v.levels
        return n

    @property
    def total(self) -> int:
        return sum(self.counts)

    @property
    def zero_cells(self) -> tuple[int, ...]:
        """1-based ranks of cells with observed count zero."""
        return tuple(i + 1 for i, c in enumerate(self.counts) if c == 0)

    @property
    def positive_cells(self) -> tuple[int, ...]:
        """1-based ranks of cells with a positive observed count."""
        return tuple(i + 1 for i, c in enumerate(self.counts) if c > 0)

    def digits_of(self, rank: int) -> tuple[int, ...]:
        return cell_digits(rank, self.levels)

    def cell_label(self, rank: int) -> str:
        digs = self.digits_of(rank)
        sep = "," if any(l > 10 for l in self.levels) else ""
        return sep.join(str(d) for d in digs)


@dataclass(frozen=True)
class ModelTerm:
    """One model parameter: a variable subset plus one nonzero level each.

    The empty subset is the intercept and carries no levels.  Corner-point
    constraints forbid level 0 anywhere in a term.
    """

    variables: tuple[str, ...]
    levels: tuple[int, ...]

    def __post_init__(self):
        if len(self.variables) != len(self.levels):
            raise ModelError("term variables and levels must align")
        if any(l < 1 for l in self.levels):
            raise ModelError("corner-point terms use nonzero levels only")

    @property
    def order(self) -> int:
        return len(self.variables)

    def label(self, omit_subscripts: bool = False) -> str:
        """Render like ``θ``, ``θ^X_1`` or ``θ^{XY}_{21}``."""
        if not self.variables:
            return "θ"
        joiner = "" if all(len(v) == 1 for v in self.variables) else ":"
        sup = joiner.join(self.variables)
        out = f"θ^{sup}" if len(sup) == 1 else f"θ^{{{sup}}}"
        if omit_subscripts:
            return out
        sub_joiner = "" if all(l <= 9 for l in self.levels) else ","
        sub = sub_joiner.join(str(l) for l in self.levels)
        return f"{out}_{sub}" if len(sub) == 1 else f"{out}_{{{sub}}}"


@dataclass(frozen=True)
class ModelSpec:
    """An ordered collection of variable subsets defining a model.

    ``subsets`` is the final enumeration order, each subset a tuple of
    variable names in table order (the empty tuple is the intercept).
    ``generators`` records the hierarchical generating sets when the
    model came from a hierarchical formula, else ``None``.
    """

    subsets: tuple[tuple[str, ...], ...]
    formula: str = ""
    generators: tuple[tuple[str, ...], ...] | None = None

    def __post_init__(self):
        if not self.subsets:
            raise ModelError("a model needs at least one term subset")
        if len(set(self.subsets)) != len(self.subsets):
            raise ModelError("duplicate subsets in model specification")

    @property
    def has_intercept(self) -> bool:
        return () in self.subsets


def _subset_token(token: str, by_name: dict[str, VariableSpec]) -> tuple[str, ...]:
    """Resolve one generator/term token into a table-ordered name tuple."""
    token = token.strip()
    if token in ("1", "0", "∅"):
        return ()
    if "*" in token or ":" in token:
        parts = [p.strip() for p in token.replace(":", "*").split("*")]
    elif token in by_name:
        parts = [token]
    elif all(c in by_name for c in token):
        parts = list(token)
    else:
        raise FormulaError(f"unknown variable in term {token!r}")
    for p in parts:
        if p not in by_name:
            raise FormulaError(f"unknown variable {p!r} in term {token!r}")
    if len(set(parts)) != len(parts):
        raise FormulaError(f"variable repeated within term {token!r}")
    order = {v.name: j for j, v in enumerate(by_name.values())}
    return tuple(sorted(parts, key=order.__getitem__))


def _counter_subsets(subset: tuple[str, ...]) -> list[tuple[str, ...]]:
    """All subsets of ``subset`` in counter order (first variable fastest)."""
    k = len(subset)
    out = []
    for mask in range(1 << k):
        out.append(tuple(subset[j] for j in range(k) if mask >> j & 1))
    return out


def parse_model_formula(
    text: str,
    variables: Sequence[VariableSpec],
    include_intercept: bool = True,
) -> ModelSpec:
    """Parse a model formula string.

    Accepted forms:

    * ``(XY,XZ,YZ)`` — hierarchical generators, expanded downward-closed;
      the surrounding parentheses are optional.  Multi-character variable
      names use ``*`` or ``:`` within a generator (``A*B``).
    * ``[X, Y, XY]`` — explicit term list, taken as-is with the intercept
      prepended (unless ``include_intercept`` is false).
    * ``saturated`` — all subsets of all variables.
    * ``main`` — main effects only; ``main+2way`` adds every pairwise
      interaction.

    Hierarchical enumeration order is intercept, main effects, then
    interactions grouped by order, following first appearance while
    scanning the generators left to right.
    """
    _check_unique_names(variables)
    by_name = {v.name: v for v in variables}
    text = text.strip()
    if not text:
        raise FormulaError("empty model formula")

    lowered = text.lower()
    explicit = None
    if lowered == "saturated":
        generators = [tuple(v.name for v in variables)]
    elif lowered in ("main", "main-effects"):
        generators = [(v.name,) for v in variables]
    elif lowered in ("main+2way", "main + 2way"):
        if len(variables) < 2:
            generators = [(v.name,) for v in variables]
        else:
            generators = [
                (a.name, b.name) for a, b in itertools.combinations(variables, 2)
            ]
    elif text.startswith("["):
        if not text.endswith("]"):
            raise FormulaError(f"unbalanced brackets in formula {text!r}")
        explicit = [t for t in text[1:-1].split(",") if t.strip()]
        if not explicit:
            raise FormulaError("empty model formula")
        generators = None
    else:
        inner = text
        if inner.startswith("("):
            if not inner.endswith(")"):
                raise FormulaError(f"unbalanced parentheses in formula {text!r}")
            inner = inner[1:-1]
        tokens = [t for t in inner.split(",") if t.strip()]
        if not tokens:
            raise FormulaError("empty model formula")
        generators = [_subset_token(t, by_name) for t in tokens]
        if len(set(generators)) != len(generators):
            raise FormulaError(f"duplicate generator in formula {text!r}")

    if explicit is not None:
        subsets: list[tuple[str, ...]] = [()] if include_intercept else []
        for t in explicit:
            s = _subset_token(t, by_name)
            if s in subsets:
                raise FormulaError(f"duplicate term {t.strip()!r} in formula {text!r}")
            subsets.append(s)
        return ModelSpec(tuple(subsets), formula=text, generators=None)

    seen: list[tuple[str, ...]] = []
    for g in generators:
        for s in _counter_subsets(g):
            if s not in seen:
                seen.append(s)
    seen.sort(key=len)  # stable: keeps first-appearance order within each size
    if not include_intercept:
        seen = [s for s in seen if s]
    return ModelSpec(tuple(seen), formula=text, generators=tuple(generators))


def enumerate_terms(
    model: ModelSpec, variables: Sequence[VariableSpec]
) -> tuple[ModelTerm, ...]:
    """Expand a model into its ordered parameter list.

    For each subset ``e`` there is one term per combination of nonzero
    levels of the variables in ``e``, nested with the first variable
    fastest, giving ``p = sum_e prod_{j in e} (l_j - 1)`` terms in total.
    """
    by_name = {v.name: v for v in variables}
    terms = []
    for subset in model.subsets:
        for name in subset:
            if name not in by_name:
                raise ModelError(f"model references unknown variable {name!r}")
        if not subset:
            terms.append(ModelTerm((), ()))
            continue
        level_ranges = [range(1, by_name[name].levels) for name in subset]
        # itertools.product varies the last factor fastest; we want the first.
        for combo in itertools.product(*reversed(level_ranges)):
            terms.append(ModelTerm(tuple(subset), tuple(reversed(combo))))
    return tuple(terms)


@dataclass(frozen=True)
class DesignMatrix:
    """The 0/1 design matrix of a model over a table shape.

    Row ``i`` (0-based; cell rank ``i + 1``) holds the indicator of which
    terms are active at that cell.  Entry ``(i, s)`` is 1 iff every
    variable of term ``s`` sits exactly at the term's level in cell
    ``i + 1``.  The matrix is guaranteed full column rank.
    """

    variables: tuple[VariableSpec, ...]
    model: ModelSpec
    terms: tuple[ModelTerm, ...]
    rows: tuple[tuple[int, ...], ...]

    @property
    def n(self) -> int:
        return len(self.rows)

    @property
    def p(self) -> int:
        return len(self.terms)

    @property
    def levels(self) -> tuple[int, ...]:
        return tuple(v.levels for v in self.variables)

    @property
    def all_binary(self) -> bool:
        return all(v.levels == 2 for v in self.variables)

    def row(self, rank: int) -> tuple[int, ...]:
        """Design row for the cell with 1-based rank ``rank``."""
        return self.rows[rank - 1]

    def term_labels(self) -> tuple[str, ...]:
        omit = self.all_binary
        return tuple(t.label(omit_subscripts=omit) for t in self.terms)


def build_design_matrix(
    model: ModelSpec | str,
    variables: Sequence[VariableSpec],
) -> DesignMatrix:
    """Build the design matrix and verify, exactly, that it is full rank.

    Corner-point coding should always yield full column rank; a failure
    here signals an over-parametrised ``ModelSpec`` and raises
    :class:`ModelError`.
    """
    from . import ratlinalg

    if isinstance(model, str):
        model = parse_model_formula(model, variables)
    variables = tuple(variables)
    _check_unique_names(variables)
    terms = enumerate_terms(model, variables)
    levels = tuple(v.levels for v in variables)
    pos = {v.name: j for j, v in enumerate(variables)}
    n = 1
    for l in levels:
        n *= l

    rows = []
    for rank in range(1, n + 1):
        digits = cell_digits(rank, levels)
        row = tuple(
            int(all(digits[pos[v]] == lv for v, lv in zip(t.variables, t.levels)))
            for t in terms
        )
        rows.append(row)
    design = DesignMatrix(variables, model, terms, tuple(rows))

    rank = ratlinalg.exact_rank(design.rows)
    if rank != design.p:
        raise ModelError(
            f"design matrix is rank deficient (rank {rank} < p = {design.p}); "
            "the model specification is over-parametrised"
        )
    return design


# ---------------------------------------------------------------------------
# Table input/output


def table_from_csv(
    source: str | Path | io.TextIOBase,
    levels: Sequence[int] | None = None,
) -> Table:
    """Read a table from long-format CSV with header ``V1,...,Vm,count``.

    Each row gives the digit vector of one cell and its count; cells not
    listed are implicitly zero.  Level counts are inferred as one plus
    the largest digit seen per column unless ``levels`` is given.
    """
    if isinstance(source, (str, Path)):
        with open(source, newline="") as fh:
            return table_from_csv(fh, levels=levels)

    reader = csv.reader(source)
    try:
        header = next(reader)
    except StopIteration:
        raise TableError("empty CSV input") from None
    header = [h.strip() for h in header]
    if len(header) < 2 or header[-1].lower() != "count":
        raise TableError("CSV header must be variable names followed by 'count'")
    names = header[:-1]

    entries: dict[tuple[int, ...], int] = {}
    for lineno, row in enumerate(reader, start=2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != len(header):
            raise TableError(f"line {lineno}: expected {len(header)} fields, got {len(row)}")
        try:
            digits = tuple(int(c) for c in row[:-1])
            count = int(row[-1])
        except ValueError as exc:
            raise TableError(f"line {lineno}: {exc}") from None
        if any(d < 0 for d in digits):
            raise TableError(f"line {lineno}: negative level index")
        if count < 0:
            raise TableError(f"line {lineno}: negative count")
        if digits in entries:
            raise TableError(f"line {lineno}: duplicate cell {digits}")
        entries[digits] = count

    if not entries:
        raise TableError("CSV listed no cells")
    if levels is None:
        inferred = [max(d[j] for d in entries) + 1 for j in range(len(names))]
        levels = [max(l, 2) for l in inferred]
    if len(levels) != len(names):
        raise TableError(f"{len(levels)} level counts for {len(names)} variables")
    variables = tuple(VariableSpec(nm, l) for nm, l in zip(names, levels))

    counts = [0] * Table(variables, (0,) * _prod(levels)).n_cells
    for digits, count in entries.items():
        counts[cell_rank(digits, levels) - 1] = count
    return Table(variables, tuple(counts))


def _prod(xs: Iterable[int]) -> int:
    out = 1
    for x in xs:
        out *= x
    return out


def table_from_json(source: str | Path | io.TextIOBase | dict) -> Table:
    """Read a table from dense JSON: ``{"variables": [{"name", "levels"}], "counts": [...]}``."""
    if isinstance(source, (str, Path)):
        with open(source) as fh:
            data = json.load(fh)
    elif isinstance(source, dict):
        data = source
    else:
        data = json.load(source)
    try:
        variables = tuple(
            VariableSpec(str(v["name"]), int(v["levels"])) for v in data["variables"]
        )
        counts = tuple(int(c) for c in data["counts"])
    except (KeyError, TypeError, ValueError) as exc:
        raise TableError(f"malformed table JSON: {exc}") from None
    return Table(variables, counts)


def table_to_json_dict(table: Table) -> dict:
    return {
        "variables": [{"name": v.name, "levels": v.levels} for v in table.variables],
        "counts": list(table.counts),
    }
