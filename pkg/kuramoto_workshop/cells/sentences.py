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
Combinatorial cells of 𝒱^max.

In the chart θ_1 = 0 a point of 𝒱^max is described by the cyclic order of
its angles. A sentence lists the groups of equal angles (words) in
increasing angle, starting with the word of symbol 0 (the oscillator pinned
at 0); symbols 1, 2, ... print as a, b, .... Each valid sentence labels a
closed cell of dimension (#words - 3), except that a two-word sentence of
two halves is a 0-cell.
"""
import json
from collections import OrderedDict, deque
from dataclasses import dataclass
from itertools import permutations
from typing import Dict, Iterator, List, Optional, Sequence, Tuple

import numpy as np
from ovos_utils.log import LOG
from scipy import sparse

from kuramoto_workshop.exceptions import BoundaryError

_LETTERS = "abcdefghijklmnopqrstuvwxyz"


def symbol_name(symbol: int) -> str:
    return "0" if symbol == 0 else _LETTERS[symbol - 1]


def symbol_value(name: str) -> int:
    return 0 if name == "0" else _LETTERS.index(name) + 1


def _canonical(words: Sequence[Sequence[int]]) -> Tuple[Tuple[int, ...], ...]:
    words = [tuple(sorted(w)) for w in words]
    for pos, word in enumerate(words):
        if 0 in word:
            return tuple(words[pos:] + words[:pos])
    raise ValueError("a sentence must contain symbol 0")


@dataclass(frozen=True)
class Sentence:
    """
    0-anchored ordered set partition of the symbols 0..m-1.
    Words are sorted on construction and rotated so the 0-word leads.
    """
    words: Tuple[Tuple[int, ...], ...]

    def __post_init__(self):
        if any(len(w) == 0 for w in self.words):
            raise ValueError("sentences cannot contain empty words")
        words = _canonical(self.words)
        symbols = sorted(s for w in words for s in w)
        if symbols != list(range(len(symbols))):
            raise ValueError(f"symbols must be 0..{len(symbols) - 1} "
                             f"each used once, got {symbols}")
        if len(symbols) > len(_LETTERS) + 1:
            raise ValueError(f"at most {len(_LETTERS) + 1} symbols are supported")
        object.__setattr__(self, "words", words)

    @classmethod
    def parse(cls, label: str) -> "Sentence":
        """ '0a-bc', '⟨0-a-b-c⟩' """
        label = label.strip().strip("⟨⟩<>")
        return cls(tuple(tuple(symbol_value(ch) for ch in word)
                         for word in label.split("-")))

    @property
    def m(self) -> int:
        return sum(len(w) for w in self.words)

    @property
    def sizes(self) -> List[int]:
        return [len(w) for w in self.words]

    @property
    def dimension(self) -> int:
        if len(self.words) == 2:
            return 0
        return len(self.words) - 3

    @property
    def is_valid(self) -> bool:
        m = self.m
        if len(self.words) == 2:
            return all(2 * size == m for size in self.sizes)
        return len(self.words) >= 3 and all(2 * size < m for size in self.sizes)

    @property
    def label(self) -> str:
        return "-".join("".join(symbol_name(s) for s in w) for w in self.words)

    def word_of(self, symbol: int) -> int:
        for pos, word in enumerate(self.words):
            if symbol in word:
                return pos
        raise KeyError(symbol)

    def __str__(self):
        return f"⟨{self.label}⟩"

    def __lt__(self, other: "Sentence"):
        return self.words < other.words


def _merge(sentence: Sentence, k: int) -> Sentence:
    # remove separator k (1-based); separator w joins the last word to the 0-word
    words = list(sentence.words)
    w = len(words)
    if k < w:
        merged = words[k - 1] + words[k]
        words = words[:k - 1] + [merged] + words[k + 1:]
    else:
        merged = words[-1] + words[0]
        words = [merged] + words[1:-1]
    if 2 * len(merged) == sentence.m:
        rest = tuple(s for word in words if word is not merged for s in word)
        words = [merged, rest]
    return Sentence(tuple(words))


def border(sentence: Sentence) -> "OrderedDict[Sentence, int]":
    """
    Signed faces of a cell. Removing the k-th of the w cyclic separators
    counts with sign (-1)^{k-1}; a merged word longer than m/2 is dropped,
    one of exactly m/2 collapses the sentence to two halves. Faces of the
    wrong dimension are dropped and repeated faces keep their first sign.
    """
    if not sentence.is_valid:
        raise ValueError(f"{sentence} is not a valid sentence")
    if sentence.dimension < 1:
        raise ValueError(f"{sentence} is a 0-cell and has no border")
    faces = OrderedDict()
    m = sentence.m
    for k in range(1, len(sentence.words) + 1):
        words = sentence.words
        merged_size = len(words[k - 1]) + len(words[k % len(words)])
        if 2 * merged_size > m:
            continue
        face = _merge(sentence, k)
        if face.dimension != sentence.dimension - 1 or not face.is_valid:
            continue
        if face not in faces:
            faces[face] = -1 if k % 2 == 0 else 1
    return faces


def _set_partitions(items: List[int], largest: int) -> Iterator[List[List[int]]]:
    if not items:
        yield []
        return
    first, rest = items[0], items[1:]
    for partition in _set_partitions(rest, largest):
        for i, block in enumerate(partition):
            if len(block) < largest:
                yield partition[:i] + [[first] + block] + partition[i + 1:]
        yield [[first]] + partition


def enumerate_sentences(m: int) -> List[Sentence]:
    """ every valid canonical sentence on m symbols, sorted """
    if m < 3:
        raise ValueError(f"the cell complex needs m >= 3, got {m}")
    found = set()
    for partition in _set_partitions(list(range(m)), m // 2):
        zero = next(b for b in partition if 0 in b)
        others = [b for b in partition if b is not zero]
        if len(partition) == 2:
            candidate = Sentence((tuple(zero), tuple(others[0])))
            if candidate.is_valid:
                found.add(candidate)
            continue
        if any(2 * len(b) >= m for b in partition):
            continue
        for order in permutations(others):
            found.add(Sentence((tuple(zero),) + tuple(tuple(b) for b in order)))
    return sorted(found)


@dataclass
class ChainComplex:
    """
    Cells grouped by dimension and the integer boundary matrices
    ∂_k: C_k -> C_{k-1} (rows: (k-1)-cells, columns: k-cells).
    """
    m: int
    cells_by_dim: Dict[int, List[Sentence]]
    boundary_matrices: Dict[int, sparse.csr_matrix]

    @property
    def top_dimension(self) -> int:
        return max(self.cells_by_dim)

    def counts(self) -> List[int]:
        return [len(self.cells_by_dim.get(k, [])) for k in range(self.top_dimension + 1)]

    def index(self, sentence: Sentence) -> int:
        return self.cells_by_dim[sentence.dimension].index(sentence)

    def boundary_squares_zero(self) -> bool:
        for k in range(2, self.top_dimension + 1):
            product = self.boundary_matrices[k - 1] @ self.boundary_matrices[k]
            product.eliminate_zeros()
            if product.nnz:
                LOG.error(f"∂_{k - 1}∂_{k} has {product.nnz} non-zero entries")
                return False
        return True

    def cofaces(self, k: int) -> Dict[Sentence, List[Tuple[Sentence, int]]]:
        """ for every (k-1)-cell, the k-cells whose border holds it, with the sign """
        matrix = self.boundary_matrices[k].tocsr()
        faces, cells = self.cells_by_dim[k - 1], self.cells_by_dim[k]
        return {face: [(cells[col], int(sign)) for col, sign in
                       zip(matrix.indices[matrix.indptr[row]:matrix.indptr[row + 1]],
                           matrix.data[matrix.indptr[row]:matrix.indptr[row + 1]])]
                for row, face in enumerate(faces)}

    def top_orientation(self) -> Optional[np.ndarray]:
        """
        Signs ε_c = ±1 on the top cells such that each codimension 1 cell
        gets opposite induced signs from its two top cells, which makes
        Σ ε_c c a cycle. None when some codimension 1 cell does not have
        exactly two cofaces or no consistent choice exists.
        """
        top = self.top_dimension
        if top < 1:
            return None
        cells = self.cells_by_dim[top]
        position = {cell: i for i, cell in enumerate(cells)}
        neighbours: Dict[int, List[Tuple[int, int]]] = {i: [] for i in range(len(cells))}
        for face, incident in self.cofaces(top).items():
            if len(incident) != 2:
                LOG.debug(f"{face} lies in {len(incident)} top cells")
                return None
            (a, sa), (b, sb) = incident
            # ε_b s_b = -ε_a s_a
            relation = -sa * sb
            neighbours[position[a]].append((position[b], relation))
            neighbours[position[b]].append((position[a], relation))
        signs = np.zeros(len(cells), dtype=np.int64)
        signs[0] = 1
        queue = deque([0])
        while queue:
            i = queue.popleft()
            for j, relation in neighbours[i]:
                if signs[j] == 0:
                    signs[j] = relation * signs[i]
                    queue.append(j)
                elif signs[j] != relation * signs[i]:
                    return None
        if not np.all(signs):
            return None
        return signs

    def to_dict(self) -> dict:
        cells = []
        for k in range(self.top_dimension + 1):
            for cell in self.cells_by_dim.get(k, []):
                entry = {"label": cell.label, "dimension": k}
                if k > 0:
                    entry["border"] = [[face.label, sign]
                                       for face, sign in border(cell).items()]
                cells.append(entry)
        return {"m": self.m, "counts": self.counts(),
                "euler_characteristic": euler_characteristic(self),
                "cells": cells}

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_dict(), ensure_ascii=False, **kwargs)


def enumerate_cells(m: int) -> ChainComplex:
    """ the cell complex of 𝒱^max for m oscillators """
    sentences = enumerate_sentences(m)
    cells_by_dim: Dict[int, List[Sentence]] = {}
    for sentence in sentences:
        cells_by_dim.setdefault(sentence.dimension, []).append(sentence)
    positions = {k: {cell: i for i, cell in enumerate(cells)}
                 for k, cells in cells_by_dim.items()}
    matrices = {}
    for k in sorted(cells_by_dim):
        if k == 0:
            continue
        rows, cols, data = [], [], []
        for col, cell in enumerate(cells_by_dim[k]):
            for face, sign in border(cell).items():
                row = positions[k - 1].get(face)
                if row is None:
                    raise BoundaryError(f"face {face} of {cell} is not a cell")
                rows.append(row)
                cols.append(col)
                data.append(sign)
        shape = (len(cells_by_dim[k - 1]), len(cells_by_dim[k]))
        matrices[k] = sparse.csr_matrix((np.array(data, dtype=np.int64),
                                         (rows, cols)), shape=shape)
    LOG.info(f"m={m}: cell counts by dimension "
             f"{[len(cells_by_dim[k]) for k in sorted(cells_by_dim)]}")
    return ChainComplex(m, cells_by_dim, matrices)


def euler_characteristic(complex_: ChainComplex) -> int:
    return int(sum((-1) ** k * n for k, n in enumerate(complex_.counts())))
