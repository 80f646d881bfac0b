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
Critical diagonals of the Kuramoto potential.

Every critical diagonal below the maximum has an exemplar with angles in
{0, π}: π at the positions of a subset I with |I| < m/2, 0 elsewhere. Its
index is |I| and its potential 2|I|(m - |I|). For even m the half/half
configurations |I| = m/2 are the isolated singular points of 𝒱^max.

Subsets are zero-based position sets throughout the package.
"""
import enum
from dataclasses import dataclass, field
from itertools import combinations
from math import ceil, comb
from typing import FrozenSet, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np
from ovos_utils.log import LOG

from kuramoto_workshop.model import FloatArray, PhasePoint, PointLike, \
    diagonal_rotate, hessian
from kuramoto_workshop.quotient import QuotientPoint, project, quotient_distance

EigenPair = Tuple[float, FloatArray]


class EquilibriumKind(str, enum.Enum):
    SINK = "sink"
    SADDLE = "saddle"
    SINGULAR_MAX = "singular-max"


class Regime(str, enum.Enum):
    """ potential regimes of the flow """
    LOW = "low"  # 0 <= V <= L, all saddles live here
    MID = "mid"  # L < V < m²/2 - ε, orbits run straight through
    HIGH = "high"  # V >= m²/2 - ε, retracts onto 𝒱^max


@dataclass(frozen=True, eq=False)
class EquilibriumRecord:
    subset: FrozenSet[int]
    m: int
    index: int
    potential: float
    eigenpairs: List[EigenPair] = field(repr=False)
    kind: EquilibriumKind = EquilibriumKind.SADDLE

    @property
    def d(self) -> int:
        return len(self.subset)

    @property
    def z(self) -> int:
        return self.m - len(self.subset)

    @property
    def exemplar(self) -> PhasePoint:
        return exemplar(self.subset, self.m)

    @property
    def quotient_point(self) -> QuotientPoint:
        return project(self.exemplar)

    @property
    def eigenvalues(self) -> List[float]:
        return [value for value, _ in self.eigenpairs]

    def unstable_vectors(self) -> List[FloatArray]:
        return [vec for value, vec in self.eigenpairs if value > 0]

    def stable_vectors(self) -> List[FloatArray]:
        return [vec for value, vec in self.eigenpairs if value < 0]

    @property
    def label(self) -> str:
        """ one-based subset label, '{}' for the sink """
        return "{" + ",".join(str(i + 1) for i in sorted(self.subset)) + "}"

    def to_dict(self) -> dict:
        return {"subset": [i + 1 for i in sorted(self.subset)],
                "kind": self.kind.value,
                "index": self.index,
                "potential": self.potential,
                "eigenvalues": [round(v, 12) for v in self.eigenvalues]}


def exemplar(subset: Iterable[int], m: int) -> PhasePoint:
    """ π at the positions in subset, 0 elsewhere """
    angles = np.zeros(m)
    for i in subset:
        if not 0 <= i < m:
            raise ValueError(f"position {i} out of range for m={m}")
        angles[i] = np.pi
    return PhasePoint(angles)


def saddle_potential(u: int, m: int) -> float:
    """
    V-value 2u(m-u) of an index u critical diagonal, 0 <= u < m/2
    """
    if u < 0 or 2 * u >= m:
        raise ValueError(f"index {u} out of range for m={m}, need 0 <= u < m/2")
    return float(2 * u * (m - u))


def low_regime_bound(m: int) -> float:
    """ second largest critical value L = 2u(m-u), u = ⌈(m-1)/2⌉ """
    u = ceil((m - 1) / 2)
    if 2 * u >= m:
        u -= 1
    return saddle_potential(u, m)


def potential_regime(v: float, m: int, epsilon: Optional[float] = None) -> Regime:
    epsilon = 0.01 * m ** 2 / 2 if epsilon is None else epsilon
    if v <= low_regime_bound(m):
        return Regime.LOW
    if v >= m ** 2 / 2 - epsilon:
        return Regime.HIGH
    return Regime.MID


def fixed_point_count(m: int) -> int:
    """ number of critical diagonals below the maximum """
    if m % 2:
        return 2 ** (m - 1)
    return 2 ** (m - 1) - comb(m, m // 2) // 2


def singular_point_count(m: int) -> int:
    """ isolated singularities of 𝒱^max, zero for odd m """
    return 0 if m % 2 else comb(m, m // 2) // 2


def _difference_family(size: int, offset: int, m: int) -> List[FloatArray]:
    # (1,-1,0..), (1,1,-2,0..), ... supported on [offset, offset+size)
    vectors = []
    for k in range(1, size):
        v = np.zeros(m)
        v[offset:offset + k] = 1.0
        v[offset + k] = -float(k)
        vectors.append(v)
    return vectors


def _eigenpairs(d: int, z: int) -> List[EigenPair]:
    m = d + z
    pairs = [(0.0, np.ones(m))]
    if d > 0:
        dz = np.concatenate([np.full(d, float(z)), np.full(z, -float(d))])
        pairs.append((float(m), dz))
    pairs += [(float(z - d), v) for v in _difference_family(d, 0, m)]
    pairs += [(float(d - z), v) for v in _difference_family(z, d, m)]
    return pairs


def analytic_eigenpairs(d: int, z: int) -> List[EigenPair]:
    """
    Eigenstructure of H at Θ* = (π, ..., π, 0, ..., 0) with d angles at π.

    Args:
        d: number of angles at π
        z: number of angles at 0, d < z
    Returns:
        m pairs: 𝟏 ↦ 0, the dz-vector (z,..,z,-d,..,-d) ↦ m, d-1 difference
        vectors on the π block ↦ z-d, z-1 difference vectors on the 0 block
        ↦ d-z. For d = 0 the dz-vector vanishes and is left out.
    """
    if d < 0 or z <= d:
        raise ValueError(f"invalid split d={d}, z={z}: need 0 <= d < z")
    return _eigenpairs(d, z)


def _permuted_pairs(subset: FrozenSet[int], m: int,
                    pairs: List[EigenPair]) -> List[EigenPair]:
    order = sorted(subset) + sorted(set(range(m)) - subset)
    result = []
    for value, vec in pairs:
        placed = np.empty(m)
        placed[order] = vec
        result.append((value, placed))
    return result


def equilibrium(subset: Iterable[int], m: int) -> EquilibriumRecord:
    """ record of the critical diagonal through the exemplar of subset """
    subset = frozenset(subset)
    d = len(subset)
    if 2 * d > m:
        raise ValueError(f"|I|={d} exceeds m/2; use the complement")
    if 2 * d == m:
        kind = EquilibriumKind.SINGULAR_MAX
        value = m ** 2 / 2
    else:
        kind = EquilibriumKind.SINK if d == 0 else EquilibriumKind.SADDLE
        value = saddle_potential(d, m)
    pairs = _permuted_pairs(subset, m, _eigenpairs(d, m - d))
    return EquilibriumRecord(subset, m, d, value, pairs, kind)


def enumerate_equilibria(m: int, include_singular: bool = True) -> List[EquilibriumRecord]:
    """
    All critical diagonals of the quotient flow, ordered by index.
    For even m the ½·C(m, m/2) singular points of 𝒱^max are appended,
    each represented by the half subset that leaves position m-1 at 0.
    """
    if m < 2:
        raise ValueError(f"m must be >= 2, got {m}")
    records = []
    for u in range((m + 1) // 2):
        for subset in combinations(range(m), u):
            records.append(equilibrium(subset, m))
    if include_singular and m % 2 == 0:
        for subset in combinations(range(m - 1), m // 2):
            records.append(equilibrium(subset, m))
    LOG.debug(f"m={m}: {len(records)} critical diagonals")
    return records


def singular_half_pi(record: EquilibriumRecord) -> PhasePoint:
    """ the same diagonal written with angles ±π/2 """
    return diagonal_rotate(record.exemplar, -np.pi / 2)


def nearest_equilibrium(qp: Union[QuotientPoint, PointLike],
                        records: Sequence[EquilibriumRecord]
                        ) -> Tuple[EquilibriumRecord, float]:
    """ closest record in the quotient, with its distance """
    if not isinstance(qp, QuotientPoint):
        qp = project(qp)
    best, best_distance = None, np.inf
    for record in records:
        distance = quotient_distance(qp, record.quotient_point)
        if distance < best_distance:
            best, best_distance = record, distance
    return best, best_distance


def eigen_residual(record: EquilibriumRecord) -> float:
    """ max ‖Hv - λv‖ over the stored pairs """
    h = hessian(record.exemplar)
    return max(float(np.linalg.norm(h @ vec - value * vec))
               for value, vec in record.eigenpairs)
