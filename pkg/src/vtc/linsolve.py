"""Exact sparse linear solving over the rationals.

Small deterministic Gaussian elimination used by the divergence-inversion
and homotopy machinery.  Rows and columns are keyed by arbitrary sortable
hashables; free variables are pinned to zero so identical systems always
produce identical solutions.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Hashable, Iterable, Optional

Row = dict[Hashable, Fraction]


def solve_linear(equations: Iterable[tuple[Row, Fraction]]) -> Optional[dict[Hashable, Fraction]]:
    """Solve a sparse rational linear system.

    ``equations`` is an iterable of (coefficients, rhs) pairs.  Returns an
    assignment for every column that appears (free columns get 0), or None
    when the system is inconsistent.
    """
    pivots: dict[Hashable, tuple[Row, Fraction]] = {}
    columns: set = set()
    for coeffs, rhs in equations:
        row = {c: v for c, v in coeffs.items() if v}
        columns.update(row)
        for col in sorted(row):
            if col not in row or col not in pivots:
                continue
            factor = row.pop(col)
            pcoeffs, prhs = pivots[col]
            for c, v in pcoeffs.items():
                if c == col:
                    continue
                nv = row.get(c, Fraction(0)) - factor * v
                if nv:
                    row[c] = nv
                else:
                    row.pop(c, None)
            rhs = rhs - factor * prhs
        if not row:
            if rhs:
                return None
            continue
        pcol = min(row)
        lead = row[pcol]
        if lead != 1:
            row = {c: v / lead for c, v in row.items()}
            rhs = rhs / lead
        for other_col, (ocoeffs, orhs) in list(pivots.items()):
            f = ocoeffs.get(pcol)
            if not f:
                continue
            for c, v in row.items():
                if c == pcol:
                    continue
                nv = ocoeffs.get(c, Fraction(0)) - f * v
                if nv:
                    ocoeffs[c] = nv
                else:
                    ocoeffs.pop(c, None)
            ocoeffs.pop(pcol, None)
            pivots[other_col] = (ocoeffs, orhs - f * rhs)
        pivots[pcol] = (row, rhs)
    solution = {col: Fraction(0) for col in columns}
    for col, (_, rhs) in pivots.items():
        solution[col] = rhs
    return solution
