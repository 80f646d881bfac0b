# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#    http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.
"""
Integer homology of the cell complex through Smith normal form.

Boundary matrices are large and very sparse with ±1 entries, so unit
pivots are eliminated first on a dict-of-rows representation (Python ints,
no overflow). What is left has no unit entry and is reduced densely with
extended-gcd row and column operations.
"""
from dataclasses import dataclass, field
from math import comb, gcd
from typing import Dict, List, TextIO, Tuple

import pandas as pd
from ovos_utils.log import LOG
from scipy import sparse

from kuramoto_workshop.cells.sentences import ChainComplex
from kuramoto_workshop.exceptions import BoundaryError

SparseRows = Dict[int, Dict[int, int]]


def xgcd(a: int, b: int) -> Tuple[int, int, int]:
    """ x, y, g with x*a + y*b == g == gcd(a, b) >= 0 """
    x, next_x = 1, 0
    y, next_y = 0, 1
    g, next_g = a, b
    while next_g:
        q = g // next_g
        x, next_x = next_x, x - q * next_x
        y, next_y = next_y, y - q * next_y
        g, next_g = next_g, g - q * next_g
    if g < 0:
        x, y, g = -x, -y, -g
    return x, y, g


def _to_rows(matrix) -> SparseRows:
    coo = sparse.coo_matrix(matrix)
    rows: SparseRows = {}
    for i, j, v in zip(coo.row.tolist(), coo.col.tolist(), coo.data.tolist()):
        if v:
            rows.setdefault(i, {})[j] = rows.get(i, {}).get(j, 0) + int(v)
    return rows


def _eliminate_units(rows: SparseRows) -> int:
    """
    Pivot on ±1 entries until none is left; each pivot removes one row and
    one column and contributes an elementary divisor 1. Rows are modified
    in place, the number of pivots is returned.
    """
    columns: Dict[int, set] = {}
    for i, row in rows.items():
        for j in row:
            columns.setdefault(j, set()).add(i)

    pivots = 0
    progress = True
    while progress:
        progress = False
        for j in sorted(columns, key=lambda c: len(columns[c])):
            if j not in columns:
                continue
            candidates = [i for i in columns[j] if abs(rows[i][j]) == 1]
            if not candidates:
                continue
            pivot_row = min(candidates, key=lambda i: len(rows[i]))
            pivot = rows[pivot_row]
            unit = pivot[j]
            for i in list(columns[j]):
                if i == pivot_row:
                    continue
                target = rows[i]
                factor = target[j] * unit
                for col, value in pivot.items():
                    updated = target.get(col, 0) - factor * value
                    if updated:
                        if col not in target:
                            columns[col].add(i)
                        target[col] = updated
                    elif col in target:
                        del target[col]
                        columns[col].discard(i)
                if not target:
                    del rows[i]
            for col in pivot:
                columns[col].discard(pivot_row)
                if not columns[col]:
                    del columns[col]
            columns.pop(j, None)
            del rows[pivot_row]
            pivots += 1
            progress = True
    return pivots


def _dense_diagonal(rows: SparseRows) -> List[int]:
    """ diagonalize the remaining block with extended-gcd row/column moves """
    row_ids = sorted(rows)
    col_ids = sorted({j for row in rows.values() for j in row})
    a = [[rows[i].get(j, 0) for j in col_ids] for i in row_ids]
    n_rows, n_cols = len(row_ids), len(col_ids)

    def improve_rows(i1, i2, j):
        x_, y_ = a[i1][j], a[i2][j]
        if y_ == 0:
            return
        x, y, g = xgcd(x_, y_)
        p, q = -y_ // g, x_ // g
        r1, r2 = a[i1], a[i2]
        for jj in range(n_cols):
            u, v = r1[jj], r2[jj]
            r1[jj], r2[jj] = x * u + y * v, p * u + q * v

    def improve_cols(j1, j2, i):
        x_, y_ = a[i][j1], a[i][j2]
        if y_ == 0:
            return
        x, y, g = xgcd(x_, y_)
        p, q = -y_ // g, x_ // g
        for row in a:
            u, v = row[j1], row[j2]
            row[j1], row[j2] = x * u + y * v, p * u + q * v

    diagonal = []
    for k in range(min(n_rows, n_cols)):
        # bring a non-zero entry to (k, k)
        nonzero = [(i, j) for i in range(k, n_rows) for j in range(k, n_cols) if a[i][j]]
        if not nonzero:
            break
        i, j = min(nonzero, key=lambda ij: abs(a[ij[0]][ij[1]]))
        a[k], a[i] = a[i], a[k]
        for row in a:
            row[k], row[j] = row[j], row[k]
        while True:
            for i in range(k + 1, n_rows):
                improve_rows(k, i, k)
            if all(a[k][j] == 0 for j in range(k + 1, n_cols)):
                break
            for j in range(k + 1, n_cols):
                improve_cols(k, j, k)
            if all(a[i][k] == 0 for i in range(k + 1, n_rows)):
                break
        diagonal.append(abs(a[k][k]))
    return [d for d in diagonal if d]


def _divisibility_chain(values: List[int]) -> List[int]:
    """ turn a diagonal into invariant factors d_1 | d_2 | ... """
    values = sorted(values)
    for i in range(len(values)):
        for j in range(i + 1, len(values)):
            a, b = values[i], values[j]
            g = gcd(a, b)
            values[i], values[j] = g, a * b // g
    return values


def elementary_divisors(matrix) -> List[int]:
    """
    Invariant factors of an integer matrix (scipy sparse or dense);
    their count is the rank.
    """
    rows = _to_rows(matrix)
    units = _eliminate_units(rows)
    rest = _dense_diagonal(rows) if rows else []
    if rest:
        LOG.debug(f"{units} unit pivots, dense remainder gave {rest}")
    return [1] * units + [d for d in _divisibility_chain(rest)]


@dataclass
class BettiTable:
    m: int
    betti: List[int]
    torsion: Dict[int, List[int]] = field(default_factory=dict)
    ranks: Dict[int, int] = field(default_factory=dict)

    @property
    def euler_characteristic(self) -> int:
        return sum((-1) ** k * b for k, b in enumerate(self.betti))

    @property
    def has_torsion(self) -> bool:
        return any(self.torsion.values())

    def matches_formula(self) -> bool:
        return self.betti == [betti_formula(self.m, k) for k in range(len(self.betti))]

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({
            "k": list(range(len(self.betti))),
            "betti": self.betti,
            "formula": [betti_formula(self.m, k) for k in range(len(self.betti))],
            "torsion": [" ".join(map(str, self.torsion.get(k, [])))
                        for k in range(len(self.betti))]})

    def to_csv(self, stream: TextIO):
        self.to_frame().to_csv(stream, index=False)


def homology_snf(complex_: ChainComplex, check: bool = True) -> BettiTable:
    """
    β_k = #k-cells - rank ∂_k - rank ∂_{k+1}; torsion of H_k is read off
    the non-unit invariant factors of ∂_{k+1}.
    """
    if check and not complex_.boundary_squares_zero():
        raise BoundaryError(f"∂∂ != 0 for m={complex_.m}")
    counts = complex_.counts()
    top = complex_.top_dimension
    ranks, torsion = {0: 0, top + 1: 0}, {}
    for k in range(1, top + 1):
        divisors = elementary_divisors(complex_.boundary_matrices[k])
        ranks[k] = len(divisors)
        torsion[k - 1] = [d for d in divisors if d > 1]
        LOG.debug(f"rank ∂_{k} = {ranks[k]}")
    torsion.setdefault(top, [])
    betti = [counts[k] - ranks[k] - ranks[k + 1] for k in range(top + 1)]
    table = BettiTable(complex_.m, betti, torsion, ranks)
    if table.has_torsion:
        LOG.warning(f"m={complex_.m}: torsion found {table.torsion}")
    LOG.info(f"m={complex_.m}: betti numbers {betti}")
    return table


def betti_formula(m: int, k: int) -> int:
    """ closed form of β_k(𝒱^max), d = ⌊(m-1)/2⌋ """
    if k < 0:
        raise ValueError(f"k must be >= 0, got {k}")
    d = (m - 1) // 2
    if k >= m - 2:
        return 0
    if m - d - 1 <= k <= m - 3:
        return comb(m - 1, k + 2)
    if k == m - d - 2:
        return comb(m - 1, k) + comb(m - 1, k + 2)
    return comb(m - 1, k)
