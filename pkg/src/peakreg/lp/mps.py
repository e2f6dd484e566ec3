"""Fixed-format MPS dump of a ``LinearProgram`` for cross-checking with external solvers.

Layout (field columns 2-3, 5-12, 15-22, 25-36, 40-47, 50-61):

    NAME          <name>
    ROWS
     N  COST
     L  R0000001       (E for =, G for >=)
    COLUMNS
        X0000001  COST      1.0           R0000001  2.0
    RHS
        RHS       COST      -3.0          R0000001  4.0
    BOUNDS
     LO BND       X0000001  -1.0
     UP BND       X0000001  5.0
     FR BND       X0000002
     MI BND       X0000003
     FX BND       X0000004  2.0
    ENDATA

Row and column names are synthetic (``R``/``X`` plus a 7-digit index) so
they always fit the 8-character fields. Numbers carry as many significant
digits as fit the 12-character field (7 to 12), so a dump is a faithful but
rounded copy. The objective
constant is stored as the negated RHS of the cost row, the usual convention.
Variables without a BOUNDS entry default to [0, +inf).
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .model import EQ, GE, LE, Affine, LinearProgram

_SENSE_CODE = {LE: "L", EQ: "E", GE: "G"}
_CODE_SENSE = {v: k for k, v in _SENSE_CODE.items()}


def _num(x: float) -> str:
    """Most significant digits that fit the 12-character field."""
    for digits in range(12, 0, -1):
        s = f"{x:.{digits}g}"
        if len(s) <= 12:
            return s
    raise ValueError(f"{x!r} does not fit a 12-character MPS field")


def _line(f1: str = "", f2: str = "", f3: str = "", f4: str = "", f5: str = "", f6: str = "") -> str:
    out = f" {f1:<2} {f2:<8}  {f3:<8}  {f4:<12}"
    if f5:
        out += f"   {f5:<8}  {f6:<12}"
    return out.rstrip()


def _row(i: int) -> str:
    return f"R{i + 1:07d}"


def _col(j: int) -> str:
    return f"X{j + 1:07d}"


def to_mps(lp: LinearProgram, name: str = "PEAKREG") -> str:
    c, A, senses, b, lo, hi = lp.matrices()
    if lp.n_rows >= 10**7 or lp.n_vars >= 10**7:
        raise ValueError("model too large for 8-character names")
    lines = [f"NAME          {name[:8]}", "ROWS", " N  COST"]
    lines += [_line(_SENSE_CODE[s], _row(i)) for i, s in enumerate(senses)]
    lines.append("COLUMNS")
    At = A.tocsc()
    for j in range(lp.n_vars):
        entries = []
        if c[j] != 0:
            entries.append(("COST", c[j]))
        lo_p, hi_p = At.indptr[j], At.indptr[j + 1]
        entries += [(_row(int(i)), v) for i, v in zip(At.indices[lo_p:hi_p], At.data[lo_p:hi_p]) if v != 0]
        if not entries:
            entries.append(("COST", 0.0))
        for k in range(0, len(entries), 2):
            pair = entries[k:k + 2]
            extra = (pair[1][0], _num(pair[1][1])) if len(pair) == 2 else ("", "")
            lines.append(_line("", _col(j), pair[0][0], _num(pair[0][1]), *extra))
    lines.append("RHS")
    rhs = []
    if lp.objective_constant != 0:
        rhs.append(("COST", -lp.objective_constant))
    rhs += [(_row(i), v) for i, v in enumerate(b) if v != 0]
    for k in range(0, len(rhs), 2):
        pair = rhs[k:k + 2]
        extra = (pair[1][0], _num(pair[1][1])) if len(pair) == 2 else ("", "")
        lines.append(_line("", "RHS", pair[0][0], _num(pair[0][1]), *extra))
    lines.append("BOUNDS")
    for j in range(lp.n_vars):
        l, u, col = lo[j], hi[j], _col(j)
        if l == u:
            lines.append(_line("FX", "BND", col, _num(l)))
            continue
        if np.isneginf(l) and np.isposinf(u):
            lines.append(_line("FR", "BND", col))
            continue
        if np.isneginf(l):
            lines.append(_line("MI", "BND", col))
        elif l != 0:
            lines.append(_line("LO", "BND", col, _num(l)))
        if not np.isposinf(u):
            lines.append(_line("UP", "BND", col, _num(u)))
    lines.append("ENDATA")
    return "\n".join(lines) + "\n"


def write_mps(lp: LinearProgram, path: str | Path, name: str = "PEAKREG") -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(to_mps(lp, name), encoding="utf-8")


def _fields(line: str) -> list[str]:
    # fixed columns: 2-3, 5-12, 15-22, 25-36, 40-47, 50-61 (1-based)
    spans = ((1, 3), (4, 12), (14, 22), (24, 36), (39, 47), (49, 61))
    return [line[a:b].strip() for a, b in spans]


def from_mps(text: str) -> LinearProgram:
    """Parse the subset of fixed-format MPS that ``to_mps`` writes."""
    section = None
    row_sense: dict[str, str] = {}
    row_order: list[str] = []
    cols: dict[str, int] = {}
    cost: dict[int, float] = {}
    entries: list[tuple[str, int, float]] = []
    rhs: dict[str, float] = {}
    bounds: dict[int, list[float]] = {}
    obj_row = None
    for raw in text.splitlines():
        if not raw.strip() or raw.startswith("*"):
            continue
        if not raw.startswith(" "):
            section = raw.split()[0]
            if section == "ENDATA":
                break
            continue
        f = _fields(raw)
        if section == "ROWS":
            code, rname = f[0], f[1]
            if code == "N":
                obj_row = rname
            else:
                row_sense[rname] = _CODE_SENSE[code]
                row_order.append(rname)
        elif section == "COLUMNS":
            j = cols.setdefault(f[1], len(cols))
            for rname, val in ((f[2], f[3]), (f[4], f[5])):
                if not rname:
                    continue
                if rname == obj_row:
                    cost[j] = cost.get(j, 0.0) + float(val)
                else:
                    entries.append((rname, j, float(val)))
        elif section == "RHS":
            for rname, val in ((f[2], f[3]), (f[4], f[5])):
                if rname:
                    rhs[rname] = float(val)
        elif section == "BOUNDS":
            j = cols[f[2]]
            lb, ub = bounds.setdefault(j, [0.0, np.inf])
            kind = f[0]
            if kind == "LO":
                lb = float(f[3])
            elif kind == "UP":
                ub = float(f[3])
            elif kind == "FX":
                lb = ub = float(f[3])
            elif kind == "FR":
                lb, ub = -np.inf, np.inf
            elif kind == "MI":
                lb = -np.inf
            else:
                raise ValueError(f"unsupported bound type {kind!r}")
            bounds[j] = [lb, ub]
        else:
            raise ValueError(f"unexpected data in section {section!r}")
    n = len(cols)
    lp = LinearProgram(objective_constant=-rhs.get(obj_row, 0.0) if obj_row else 0.0)
    for j in range(n):
        lb, ub = bounds.get(j, [0.0, np.inf])
        lp.add_variable(cost.get(j, 0.0), lb, ub, name=f"x{j}")
    index = {r: i for i, r in enumerate(row_order)}
    by_row: list[list[tuple[int, float]]] = [[] for _ in row_order]
    for rname, j, v in entries:
        by_row[index[rname]].append((j, v))
    for i, rname in enumerate(row_order):
        idx = [j for j, _ in by_row[i]]
        val = [v for _, v in by_row[i]]
        lp.add_constraints(Affine(np.zeros(len(idx), dtype=np.int64), idx, val, [0.0]),
                           row_sense[rname], rhs.get(rname, 0.0))
    return lp


def read_mps(path: str | Path) -> LinearProgram:
    return from_mps(Path(path).read_text(encoding="utf-8"))
