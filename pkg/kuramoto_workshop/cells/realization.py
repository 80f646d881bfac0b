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
Numeric points of 𝒱^max: membership, the normal frame (Cos, Sin) and a
point in the interior of the cell of a sentence.
"""
from dataclasses import dataclass
from typing import Optional

import numpy as np
from ovos_utils.log import LOG

from kuramoto_workshop.cells.sentences import Sentence
from kuramoto_workshop.exceptions import RealizationError
from kuramoto_workshop.model import TWO_PI, FloatArray, PhasePoint, \
    PointLike, as_angles, centroid

ORDER_MARGIN = 1e-6


def vmax_membership(p: PointLike, tol: float = 1e-9) -> bool:
    """ |Z(p)| < tol, i.e. V(p) = m²/2 """
    if tol <= 0:
        raise ValueError(f"tol must be positive, got {tol}")
    return centroid(p).r < tol


@dataclass
class NormalFrame:
    cos: FloatArray
    sin: FloatArray
    gram: FloatArray
    independent: bool

    @property
    def determinant(self) -> float:
        return float(np.linalg.det(self.gram))

    def orthonormal(self) -> FloatArray:
        """ m×2 orthonormal basis (N₁, N₂) of the normal plane """
        q, _ = np.linalg.qr(np.column_stack([self.cos, self.sin]))
        # keep N₁ pointing along Cos
        signs = np.sign(np.diag(q.T @ np.column_stack([self.cos, self.sin])))
        signs[signs == 0] = 1.0
        return q * signs


def normal_frame(p: PointLike, tol: float = 1e-9,
                 membership_tol: float = 1e-8) -> NormalFrame:
    """
    Gradients of Re Z and Im Z span the normal plane of 𝒱^max wherever
    they are independent; both are orthogonal to the diagonal 𝟏.
    """
    theta = as_angles(p)
    if not vmax_membership(theta, membership_tol):
        raise ValueError(f"{PhasePoint(theta)} is not on the maximum set")
    cos, sin = np.cos(theta), np.sin(theta)
    frame = np.column_stack([cos, sin])
    gram = frame.T @ frame
    independent = bool(np.linalg.det(gram) > tol)
    if not independent:
        LOG.debug(f"normal frame degenerate at {PhasePoint(theta)}")
    return NormalFrame(cos, sin, gram, independent)


def _seed(sentence: Sentence) -> FloatArray:
    # symbols at 2πj/m in word order, each word at the mean of its slots
    m, position, angles = sentence.m, 0, []
    for word in sentence.words:
        slots = position + np.arange(len(word))
        angles.append(TWO_PI * slots.mean() / m)
        position += len(word)
    angles = np.array(angles)
    return angles - angles[0]


def _centroid_residual(phi: FloatArray, sizes: FloatArray) -> FloatArray:
    return np.array([sizes @ np.cos(phi), sizes @ np.sin(phi)])


def _newton(phi: FloatArray, sizes: FloatArray, tol: float,
            max_iter: int) -> Optional[FloatArray]:
    # Gauss-Newton with minimum-norm steps on the free word angles (phi[0] = 0)
    phi = phi.copy()
    for _ in range(max_iter):
        residual = _centroid_residual(phi, sizes)
        if np.linalg.norm(residual) < tol:
            return phi
        jac = np.vstack([-sizes * np.sin(phi), sizes * np.cos(phi)])[:, 1:]
        step, *_ = np.linalg.lstsq(jac, -residual, rcond=None)
        phi[1:] += step
    return None


def _ordered(phi: FloatArray) -> bool:
    wrapped = np.mod(phi, TWO_PI)
    wrapped[0] = 0.0
    return bool(np.all(np.diff(np.append(wrapped, TWO_PI)) > ORDER_MARGIN))


def realize_cell(sentence: Sentence, m: Optional[int] = None,
                 rng: Optional[np.random.Generator] = None,
                 retries: int = 8, tol: float = 1e-12,
                 max_iter: int = 100) -> PhasePoint:
    """
    A point in the open cell of a sentence: θ_1 = 0, equal angles inside
    each word, word angles strictly increasing in sentence order, centroid
    zero. Newton starts from equally spaced symbols and is retried from
    perturbed seeds when it leaves the cell.

    @param sentence: a valid sentence
    @param m: number of oscillators, checked against the sentence when given
    @param rng: source of the seed perturbations
    @return: the realized point
    """
    if m is not None and m != sentence.m:
        raise ValueError(f"{sentence} has {sentence.m} symbols, expected {m}")
    if not sentence.is_valid:
        raise ValueError(f"{sentence} is not a valid sentence")
    sizes = np.array(sentence.sizes, dtype=np.float64)
    if len(sizes) == 2:
        # two halves: the only configuration is 0 and π
        phi = np.array([0.0, np.pi])
    else:
        rng = rng or np.random.Generator(np.random.PCG64(0))
        seed = _seed(sentence)
        phi = None
        for attempt in range(retries + 1):
            start = seed.copy()
            if attempt:
                start[1:] += rng.normal(scale=0.2 / len(sizes), size=len(sizes) - 1)
            candidate = _newton(start, sizes, tol, max_iter)
            if candidate is not None and _ordered(candidate):
                phi = candidate
                break
            LOG.warning(f"realizing {sentence}: attempt {attempt} left the cell")
        if phi is None:
            raise RealizationError(f"no point found in the cell {sentence} "
                                   f"after {retries + 1} attempts")
    theta = np.empty(sentence.m)
    for pos, word in enumerate(sentence.words):
        theta[list(word)] = phi[pos]
    point = PhasePoint(theta)
    LOG.debug(f"{sentence} realized at {point}")
    return point
