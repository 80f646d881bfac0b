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
The quotient Q = 𝕋^m / D of diagonals.

Points of Q are written in cube-face coordinates, the chart θ_m = 0:
[Θ] ↦ (θ_1 - θ_m, ..., θ_{m-1} - θ_m). The Euclidean structure of 𝕋^m
induces the metric g = I - uuᵀ/m on this chart, so the quotient gradient
is g⁻¹ = I + uuᵀ applied to the partial derivatives of V_Q.
"""
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from kuramoto_workshop.model import (DEFAULT_ANGLE_TOL, FloatArray, PhasePoint,
                                     PointLike, as_angles, wrap_angles,
                                     wrap_to_pi)


@dataclass(frozen=True, eq=False)
class QuotientPoint:
    """ [Θ] in cube-face coordinates, m-1 angles in [0, 2π) """
    coords: FloatArray

    def __post_init__(self):
        arr = np.array(self.coords, dtype=np.float64).ravel()
        if arr.size < 1:
            raise ValueError("a quotient point needs at least one coordinate")
        arr = wrap_angles(arr)
        arr.setflags(write=False)
        object.__setattr__(self, "coords", arr)

    @property
    def m(self) -> int:
        return int(self.coords.size) + 1

    def isclose(self, other: "QuotientPoint",
                tol: float = DEFAULT_ANGLE_TOL) -> bool:
        return quotient_distance(self, other) <= tol

    def __repr__(self):
        return f"QuotientPoint({np.array2string(self.coords, precision=6)})"


def _coords(qp) -> FloatArray:
    if isinstance(qp, QuotientPoint):
        return qp.coords
    return np.asarray(qp, dtype=np.float64).ravel()


@dataclass(frozen=True)
class QuotientMetric:
    """ Metric of Q in cube-face coordinates (dimension m-1) """
    dimension: int

    @property
    def m(self) -> int:
        return self.dimension + 1

    @cached_property
    def matrix(self) -> FloatArray:
        u = np.ones(self.dimension)
        return np.eye(self.dimension) - np.outer(u, u) / self.m

    @cached_property
    def inverse(self) -> FloatArray:
        u = np.ones(self.dimension)
        return np.eye(self.dimension) + np.outer(u, u)

    def frame(self) -> FloatArray:
        """
        Columns f_j = e_j - 𝟏/m, the counterdiagonal images of the chart
        basis vectors, so that g_ij = <f_i, f_j>.
        """
        m = self.m
        return np.eye(m)[:, :self.dimension] - 1.0 / m

    def raise_index(self, covector) -> FloatArray:
        return self.inverse @ np.asarray(covector, dtype=np.float64)

    def norm(self, vector) -> float:
        v = np.asarray(vector, dtype=np.float64)
        return float(np.sqrt(v @ self.matrix @ v))


def project(p: PointLike) -> QuotientPoint:
    """ q: Θ ↦ [Θ], coords_i = θ_i - θ_m """
    theta = as_angles(p)
    return QuotientPoint(theta[:-1] - theta[-1])


def lift(qp) -> PhasePoint:
    """ the representative with θ_m = 0 """
    return PhasePoint(np.append(_coords(qp), 0.0))


def counterdiagonal_embed(qp) -> PhasePoint:
    """
    The representative on A = {Σθ_j = 0}:
    (θ_1 - θ̄, ..., θ_{m-1} - θ̄, -θ̄) with θ̄ = Σθ_i / m.
    """
    coords = _coords(qp)
    mean = coords.sum() / (coords.size + 1)
    return PhasePoint(np.append(coords, 0.0) - mean)


def counterdiagonal_coordinates(qp) -> FloatArray:
    """ unwrapped counterdiagonal representative, sums to exactly zero """
    coords = _coords(qp)
    full = np.append(coords, 0.0)
    return full - full.mean()


def pushforward(vector) -> FloatArray:
    """ dq of an ambient tangent vector: v_i - v_m """
    v = np.asarray(vector, dtype=np.float64)
    return v[:-1] - v[-1]


def quotient_distance(qp1, qp2) -> float:
    return float(np.linalg.norm(wrap_to_pi(_coords(qp1) - _coords(qp2))))


def quotient_potential(qp) -> float:
    """
    V_Q = ½ Σ_{k,l<m} (1 - cos(θ_k - θ_l)) + Σ_{k<m} (1 - cos θ_k),
    which equals V on any lift.
    """
    theta = _coords(qp)
    diff = theta[None, :] - theta[:, None]
    return 0.5 * float(np.sum(1.0 - np.cos(diff))) + float(np.sum(1.0 - np.cos(theta)))


def quotient_gradient(qp) -> FloatArray:
    """ partial derivatives ∂V_Q/∂θ_j = -Σ_k sin(θ_k - θ_j) + sin θ_j """
    theta = _coords(qp)
    diff = theta[None, :] - theta[:, None]
    return -np.sin(diff).sum(axis=1) + np.sin(theta)


def quotient_field(qp) -> FloatArray:
    """
    -g⁻¹ ∂V_Q in closed form:
    Σ_{k<m} sin(θ_k - θ_i) - sin θ_i - Σ_{k<m} sin θ_k.
    """
    theta = _coords(qp)
    diff = theta[None, :] - theta[:, None]
    sines = np.sin(theta)
    return np.sin(diff).sum(axis=1) - sines - sines.sum()


def quotient_jacobian(qp) -> FloatArray:
    """ derivative of quotient_field in cube-face coordinates """
    theta = _coords(qp)
    cosines = np.cos(theta[None, :] - theta[:, None])
    jac = cosines - np.diag(cosines.sum(axis=1))
    jac -= np.diag(np.cos(theta))
    jac -= np.cos(theta)[None, :]
    return jac
