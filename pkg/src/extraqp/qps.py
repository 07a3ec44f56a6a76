"""QPS/MPS reading and writing.

Supports the sections NAME, ROWS, COLUMNS, RHS, RANGES, BOUNDS and
QUADOBJ/QMATRIX in free field format; output is fixed format.  Row senses
are mapped onto the normalized orientation c_I(x) = a x + b >= 0 /
c_E(x) = 0, so L rows are negated, G rows kept and RANGES rows expand into
pairs of inequalities.  Integer markers and integer bound types are
rejected.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .model import RawQp


class QpsParseError(Exception):
    """Malformed or unsupported QPS input, with the offending line number."""

    def __init__(self, message: str, line: int | None = None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


@dataclass
class QpsRecord:
    fields: list[str]
    line: int


@dataclass
class QpsDocument:
    """Section-structured view of a QPS file with source line provenance."""

    name: str = ""
    rows: list[QpsRecord] = field(default_factory=list)
    columns: list[QpsRecord] = field(default_factory=list)
    rhs: list[QpsRecord] = field(default_factory=list)
    ranges: list[QpsRecord] = field(default_factory=list)
    bounds: list[QpsRecord] = field(default_factory=list)
    quadobj: list[QpsRecord] = field(default_factory=list)
    quad_is_full_matrix: bool = False


_SECTIONS = {"ROWS", "COLUMNS", "RHS", "RANGES", "BOUNDS", "QUADOBJ",
             "QMATRIX", "ENDATA"}
_INT_BOUND_TYPES = {"BV", "LI", "UI"}


def parse_qps_document(text: str) -> QpsDocument:
    doc = QpsDocument()
    section = None
    in_integer_block = False
    for lineno, raw_line in enumerate(text.splitlines(), start=1):
        line = raw_line.rstrip()
        if not line or line.lstrip().startswith("*"):
            continue
        tokens = line.split()
        head = tokens[0].upper()
        if not raw_line[:1].isspace():
            # section header line
            if head == "NAME":
                doc.name = tokens[1] if len(tokens) > 1 else ""
                section = "NAME"
                continue
            if head == "ENDATA":
                return doc
            if head in _SECTIONS:
                section = head
                if head == "QMATRIX":
                    doc.quad_is_full_matrix = True
                continue
            raise QpsParseError(f"unsupported section {tokens[0]!r}", lineno)

        if "'MARKER'" in tokens:
            if "'INTORG'" in tokens:
                raise QpsParseError("integer markers are not supported", lineno)
            in_integer_block = False
            continue
        record = QpsRecord(fields=tokens, line=lineno)
        if section == "ROWS":
            doc.rows.append(record)
        elif section == "COLUMNS":
            doc.columns.append(record)
        elif section == "RHS":
            doc.rhs.append(record)
        elif section == "RANGES":
            doc.ranges.append(record)
        elif section == "BOUNDS":
            doc.bounds.append(record)
        elif section in ("QUADOBJ", "QMATRIX"):
            doc.quadobj.append(record)
        else:
            raise QpsParseError("data record before any section", lineno)
    raise QpsParseError("missing ENDATA")


def _number(token: str, lineno: int) -> float:
    try:
        return float(token.replace("D", "E").replace("d", "e"))
    except ValueError:
        raise QpsParseError(f"expected a number, got {token!r}", lineno) from None


def parse_qps(text: str) -> RawQp:
    """Parse a QPS document into a RawQp in the >= 0 orientation."""
    doc = parse_qps_document(text)

    obj_row = None
    row_sense: dict[str, str] = {}
    row_order: list[str] = []
    for rec in doc.rows:
        if len(rec.fields) != 2:
            raise QpsParseError("ROWS record needs sense and name", rec.line)
        sense, name = rec.fields[0].upper(), rec.fields[1]
        if sense == "N":
            if obj_row is None:
                obj_row = name
            continue
        if sense not in ("L", "G", "E"):
            raise QpsParseError(f"unknown row sense {sense!r}", rec.line)
        row_sense[name] = sense
        row_order.append(name)
    if obj_row is None:
        raise QpsParseError("no objective (N) row declared")

    col_order: list[str] = []
    col_index: dict[str, int] = {}
    lin_cost: dict[int, float] = {}
    entries: dict[tuple[str, int], float] = {}
    for rec in doc.columns:
        f = rec.fields
        if len(f) < 3 or len(f) % 2 == 0:
            raise QpsParseError("COLUMNS record needs name plus row/value pairs",
                                rec.line)
        col = f[0]
        if col not in col_index:
            col_index[col] = len(col_order)
            col_order.append(col)
        j = col_index[col]
        for row_name, value in zip(f[1::2], f[2::2]):
            v = _number(value, rec.line)
            if row_name == obj_row:
                lin_cost[j] = lin_cost.get(j, 0.0) + v
            elif row_name in row_sense:
                entries[(row_name, j)] = entries.get((row_name, j), 0.0) + v
            else:
                raise QpsParseError(f"undeclared row {row_name!r}", rec.line)

    n = len(col_order)
    rhs: dict[str, float] = {}
    offset = 0.0
    for rec in doc.rhs:
        f = rec.fields
        if len(f) < 3 or len(f) % 2 == 0:
            raise QpsParseError("RHS record needs set name plus row/value pairs",
                                rec.line)
        for row_name, value in zip(f[1::2], f[2::2]):
            v = _number(value, rec.line)
            if row_name == obj_row:
                offset = -v
            elif row_name in row_sense:
                rhs[row_name] = v
            else:
                raise QpsParseError(f"undeclared row {row_name!r}", rec.line)

    ranges: dict[str, float] = {}
    for rec in doc.ranges:
        f = rec.fields
        if len(f) < 3 or len(f) % 2 == 0:
            raise QpsParseError("RANGES record needs set name plus row/value pairs",
                                rec.line)
        for row_name, value in zip(f[1::2], f[2::2]):
            if row_name not in row_sense:
                raise QpsParseError(f"undeclared row {row_name!r}", rec.line)
            ranges[row_name] = _number(value, rec.line)

    lower = np.zeros(n)
    upper = np.full(n, np.inf)
    for rec in doc.bounds:
        f = rec.fields
        btype = f[0].upper()
        if btype in _INT_BOUND_TYPES:
            raise QpsParseError(f"integer bound type {btype!r} not supported",
                                rec.line)
        if btype in ("FR", "MI", "PL"):
            if len(f) < 3:
                raise QpsParseError("bound record needs set and column", rec.line)
            col = f[2]
        else:
            if len(f) < 4:
                raise QpsParseError("bound record needs set, column and value",
                                    rec.line)
            col = f[2]
        if col not in col_index:
            raise QpsParseError(f"undeclared column {col!r}", rec.line)
        j = col_index[col]
        if btype == "LO":
            lower[j] = _number(f[3], rec.line)
        elif btype == "UP":
            upper[j] = _number(f[3], rec.line)
        elif btype == "FX":
            lower[j] = upper[j] = _number(f[3], rec.line)
        elif btype == "FR":
            lower[j], upper[j] = -np.inf, np.inf
        elif btype == "MI":
            lower[j] = -np.inf
        elif btype == "PL":
            upper[j] = np.inf
        else:
            raise QpsParseError(f"unknown bound type {btype!r}", rec.line)

    hessian = np.zeros((n, n))
    for rec in doc.quadobj:
        f = rec.fields
        if len(f) < 3:
            raise QpsParseError("quadratic record needs two columns and a value",
                                rec.line)
        for c1, c2, value in ((f[0], f[1], f[2]),):
            if c1 not in col_index or c2 not in col_index:
                raise QpsParseError("quadratic entry references undeclared column",
                                    rec.line)
            i, j = col_index[c1], col_index[c2]
            v = _number(value, rec.line)
            if doc.quad_is_full_matrix:
                hessian[i, j] = v
            else:
                hessian[i, j] = v
                hessian[j, i] = v

    # assemble constraint blocks in declaration order
    ineq_rows: list[np.ndarray] = []
    ineq_rhs: list[float] = []
    eq_rows: list[np.ndarray] = []
    eq_rhs: list[float] = []

    def ge_row(coeffs: np.ndarray, bound: float) -> None:
        # coeffs' x >= bound  ->  coeffs' x - bound >= 0
        ineq_rows.append(coeffs)
        ineq_rhs.append(-bound)

    def le_row(coeffs: np.ndarray, bound: float) -> None:
        ge_row(-coeffs, -bound)

    for name in row_order:
        coeffs = np.zeros(n)
        for (row_name, j), v in entries.items():
            if row_name == name:
                coeffs[j] = v
        b = rhs.get(name, 0.0)
        sense = row_sense[name]
        r = ranges.get(name)
        if r is None:
            if sense == "G":
                ge_row(coeffs, b)
            elif sense == "L":
                le_row(coeffs, b)
            else:
                eq_rows.append(coeffs)
                eq_rhs.append(-b)
        else:
            if sense == "L":
                lo, hi = b - abs(r), b
            elif sense == "G":
                lo, hi = b, b + abs(r)
            else:
                lo, hi = (b, b + r) if r >= 0 else (b + r, b)
            ge_row(coeffs, lo)
            le_row(coeffs, hi)

    a_ineq = np.array(ineq_rows) if ineq_rows else np.zeros((0, n))
    b_ineq = np.array(ineq_rhs) if ineq_rhs else np.zeros(0)
    a_eq = np.array(eq_rows) if eq_rows else np.zeros((0, n))
    b_eq = np.array(eq_rhs) if eq_rhs else np.zeros(0)
    lin = np.zeros(n)
    for j, v in lin_cost.items():
        lin[j] = v

    return RawQp(hessian=hessian, linear_cost=lin, a_ineq=a_ineq, b_ineq=b_ineq,
                 a_eq=a_eq, b_eq=b_eq, lower=lower, upper=upper,
                 name=doc.name, offset=offset)


def _fmt(value: float) -> str:
    return f"{value:.12g}"


def write_qps(raw: RawQp, name: str | None = None) -> str:
    """Emit a fixed-format QPS document that parse_qps inverts.

    Inequalities are written as G rows and equalities as E rows; the bounds
    section is omitted entirely when every variable carries the default
    0 <= x bounds.
    """
    n = raw.n
    cols = [f"X{j + 1}" for j in range(n)]
    lines = [f"NAME          {name or raw.name or 'EXTRAQP'}"]
    lines.append("ROWS")
    lines.append(" N  OBJ")
    for i in range(raw.a_ineq.shape[0]):
        lines.append(f" G  C{i + 1}")
    for i in range(raw.a_eq.shape[0]):
        lines.append(f" E  E{i + 1}")

    lines.append("COLUMNS")
    for j in range(n):
        pairs = []
        if raw.linear_cost[j] != 0.0:
            pairs.append(("OBJ", raw.linear_cost[j]))
        for i in range(raw.a_ineq.shape[0]):
            if raw.a_ineq[i, j] != 0.0:
                pairs.append((f"C{i + 1}", raw.a_ineq[i, j]))
        for i in range(raw.a_eq.shape[0]):
            if raw.a_eq[i, j] != 0.0:
                pairs.append((f"E{i + 1}", raw.a_eq[i, j]))
        if not pairs:
            pairs.append(("OBJ", 0.0))
        for row, value in pairs:
            lines.append(f"    {cols[j]:<10}{row:<10}{_fmt(value)}")

    lines.append("RHS")
    if raw.offset != 0.0:
        lines.append(f"    RHS       OBJ       {_fmt(-raw.offset)}")
    for i in range(raw.a_ineq.shape[0]):
        if raw.b_ineq[i] != 0.0:
            lines.append(f"    RHS       C{i + 1:<9}{_fmt(-raw.b_ineq[i])}")
    for i in range(raw.a_eq.shape[0]):
        if raw.b_eq[i] != 0.0:
            lines.append(f"    RHS       E{i + 1:<9}{_fmt(-raw.b_eq[i])}")

    default = (np.all(raw.lower == 0.0)
               and np.all(np.isposinf(raw.upper)))
    if not default:
        lines.append("BOUNDS")
        for j in range(n):
            lo, up = raw.lower[j], raw.upper[j]
            if np.isfinite(lo) and lo == up:
                lines.append(f" FX BND       {cols[j]:<10}{_fmt(lo)}")
                continue
            if np.isneginf(lo) and np.isposinf(up):
                lines.append(f" FR BND       {cols[j]}")
                continue
            if np.isneginf(lo):
                lines.append(f" MI BND       {cols[j]}")
            elif lo != 0.0:
                lines.append(f" LO BND       {cols[j]:<10}{_fmt(lo)}")
            if np.isfinite(up):
                lines.append(f" UP BND       {cols[j]:<10}{_fmt(up)}")

    if np.any(raw.hessian != 0.0):
        lines.append("QUADOBJ")
        for i in range(n):
            for j in range(i, n):
                if raw.hessian[j, i] != 0.0:
                    lines.append(f"    {cols[i]:<10}{cols[j]:<10}{_fmt(raw.hessian[j, i])}")

    lines.append("ENDATA")
    return "\n".join(lines) + "\n"


def load_qps(path) -> RawQp:
    with open(path, "r", encoding="ascii", errors="replace") as handle:
        return parse_qps(handle.read())
