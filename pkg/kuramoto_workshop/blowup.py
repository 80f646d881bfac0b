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
Tangent directions of 𝒱^max at its singular points (m = 2d even).

At the canonical singularity (-π/2, ..., -π/2, π/2, ..., π/2) a curve of
𝒱^max leaves along u = (a, b) with Σa = Σb = 0 and Σa² = Σb², so the unit
directions form S^{d-2} × S^{d-2}. Sorted ascending, each half lies in the
cone spanned by the columns of tangent_cone_matrix(d).
"""
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np
from ovos_utils.log import LOG
from scipy.optimize import nnls

from kuramoto_workshop.exceptions import RealizationError
from kuramoto_workshop.model import FloatArray, PhasePoint


def canonical_singularity(m: int) -> PhasePoint:
    if m < 4 or m % 2:
        raise ValueError(f"singular points need an even m >= 4, got {m}")
    d = m // 2
    return PhasePoint(np.concatenate([np.full(d, -np.pi / 2), np.full(d, np.pi / 2)]))


def tangent_cone_matrix(d: int) -> FloatArray:
    """
    d×(d-1) matrix whose column j holds -(d-j) in the first j rows and j
    below: the rays of the ascending chamber of {Σa = 0}.
    """
    if d < 2:
        raise ValueError(f"d must be >= 2, got {d}")
    matrix = np.empty((d, d - 1))
    for j in range(1, d):
        matrix[:j, j - 1] = -(d - j)
        matrix[j:, j - 1] = j
    return matrix


def _project_to_vmax(theta: FloatArray, tol: float, max_iter: int) -> Optional[FloatArray]:
    # minimum-norm Gauss-Newton on (Re Z, Im Z) = 0
    theta = theta.copy()
    for _ in range(max_iter):
        residual = np.array([np.cos(theta).sum(), np.sin(theta).sum()])
        if np.linalg.norm(residual) < tol:
            return theta
        jac = np.vstack([-np.sin(theta), np.cos(theta)])
        step, *_ = np.linalg.lstsq(jac, -residual, rcond=None)
        theta += step
    return None


def estimate_tangent(direction: FloatArray, m: int, t0: float = 1e-2,
                     levels: int = 3, tol: float = 1e-14,
                     max_iter: int = 200) -> FloatArray:
    """
    Unit tangent at the canonical singularity of the curve
    t ↦ (nearest point of 𝒱^max to p + t·direction), from secants at
    t0·2^-j combined by Richardson extrapolation. The curve is odd in t
    (𝒱^max is symmetric about p), so the secants expand in even powers.
    """
    if levels < 2:
        raise ValueError(f"Richardson extrapolation needs levels >= 2, got {levels}")
    p = canonical_singularity(m).angles
    direction = np.asarray(direction, dtype=np.float64)
    direction = direction - direction.mean()
    direction /= np.linalg.norm(direction)
    secants = []
    for j in range(levels):
        t = t0 * 2.0 ** -j
        point = _project_to_vmax(p + t * direction, tol, max_iter)
        if point is None:
            raise RealizationError(f"could not project onto the maximum set at t={t:.3g}")
        secant = point - p
        secants.append(secant / t)
    # Richardson table, column k cancels the t^{2k} term
    table = secants
    for k in range(1, levels):
        factor = 4.0 ** k
        table = [(factor * fine - coarse) / (factor - 1.0)
                 for coarse, fine in zip(table[:-1], table[1:])]
    extrapolated = table[-1]
    norm = np.linalg.norm(extrapolated)
    if norm < 1e-8:
        raise RealizationError("curve collapsed onto the singular point, "
                               "tangent undefined")
    return extrapolated / norm


@dataclass
class BlowupReport:
    m: int
    tangents: FloatArray
    half_sums: FloatArray  # |Σa|, |Σb| per tangent
    square_gaps: FloatArray  # |Σa² - ½|, |Σb² - ½|
    cone_residuals: List[float] = field(default_factory=list)

    def ok(self, tol: float = 1e-6) -> bool:
        return bool(np.all(self.half_sums < tol) and np.all(self.square_gaps < tol)
                    and all(r < tol for r in self.cone_residuals))

    def to_dict(self) -> dict:
        return {"m": self.m, "n": len(self.tangents),
                "max_half_sum": float(self.half_sums.max()),
                "max_square_gap": float(self.square_gaps.max()),
                "max_cone_residual": max(self.cone_residuals, default=0.0),
                "tangents": self.tangents.tolist()}


def _cone_residual(half: FloatArray, matrix: FloatArray) -> float:
    norm = np.linalg.norm(half)
    if norm == 0:
        return 0.0
    _, residual = nnls(matrix, np.sort(half) / norm)
    return float(residual)


def blowup_check(m: int, n: int = 20, rng: Optional[np.random.Generator] = None,
                 t0: float = 1e-2, levels: int = 3) -> BlowupReport:
    """
    Tangents of n random curves of 𝒱^max through the canonical singularity,
    with the half sums, the balance of the squared halves and, for d >= 3,
    the residual of each sorted half against the tangent cone.
    """
    if m < 4 or m % 2:
        raise ValueError(f"blowup needs an even m >= 4, got {m}")
    rng = rng or np.random.Generator(np.random.PCG64(0))
    d = m // 2
    matrix = tangent_cone_matrix(d)
    tangents, sums, gaps, cones = [], [], [], []
    for _ in range(n):
        tangent = estimate_tangent(rng.normal(size=m), m, t0, levels)
        a, b = tangent[:d], tangent[d:]
        tangents.append(tangent)
        sums.append([abs(a.sum()), abs(b.sum())])
        gaps.append([abs(a @ a - 0.5), abs(b @ b - 0.5)])
        if d >= 3:
            cones.append(max(_cone_residual(a, matrix), _cone_residual(b, matrix)))
    report = BlowupReport(m, np.array(tangents), np.array(sums), np.array(gaps), cones)
    LOG.info(f"blowup m={m}: max |Σa| {report.half_sums.max():.2e}, "
             f"max |Σa² - ½| {report.square_gaps.max():.2e}")
    return report
