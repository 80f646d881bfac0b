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
Imprints of saddles on 𝒱^max.

The imprint of a saddle p_I is the closure of the α-limits of its stable
manifold minus the saddle. It is the section of 𝒱^max by the subtorus where
the angles in I coincide: a sphere when |I| = ⌊(m-1)/2⌋ and m is odd, a
pinched sphere for the same |I| and m even, all of 𝒱^max when |I| = 1.
"""
import enum
from dataclasses import dataclass
from itertools import combinations
from math import comb
from typing import Iterable, List, Optional, Sequence

import numpy as np
import pandas as pd
from ovos_utils.log import LOG
from scipy.integrate import solve_ivp
from scipy.linalg import orth

from kuramoto_workshop.cells.realization import normal_frame, vmax_membership
from kuramoto_workshop.equilibria import EquilibriumKind, EquilibriumRecord, \
    enumerate_equilibria, equilibrium, exemplar, saddle_potential
from kuramoto_workshop.exceptions import DegenerateFrameError, \
    IntegrationError, RealizationError
from kuramoto_workshop.flow.auxiliary import alpha_limit_retraction
from kuramoto_workshop.flow.integrator import Direction, IntegrationOptions, \
    TerminalKind, integrate
from kuramoto_workshop.model import TWO_PI, FloatArray, PhasePoint, \
    PointLike, as_angles, gap_to_maximum, potential, torus_distance, \
    vector_field, wrap_to_pi
from kuramoto_workshop.quotient import QuotientPoint, lift, project


class ImprintKind(str, enum.Enum):
    SPHERE = "sphere"
    PINCHED_SPHERE = "pinched-sphere"
    ALL = "all-of-vmax"
    SECTION = "template-section"


@dataclass(frozen=True)
class ImprintSpec:
    """ the imprint of the saddle p_I, I zero-based with 1 <= |I| < m/2 """
    subset: frozenset
    m: int

    def __post_init__(self):
        subset = frozenset(int(i) for i in self.subset)
        if not subset:
            raise ValueError("the sink has no imprint, I must be non-empty")
        if 2 * len(subset) >= self.m:
            raise ValueError(f"|I|={len(subset)} must be below m/2={self.m / 2}")
        if min(subset) < 0 or max(subset) >= self.m:
            raise ValueError(f"I={sorted(subset)} out of range for m={self.m}")
        object.__setattr__(self, "subset", subset)

    @classmethod
    def from_labels(cls, labels: Iterable[int], m: int) -> "ImprintSpec":
        """ one-based positions, as written on the command line """
        return cls(frozenset(i - 1 for i in labels), m)

    @property
    def d(self) -> int:
        return (self.m - 1) // 2

    @property
    def record(self) -> EquilibriumRecord:
        return equilibrium(self.subset, self.m)

    @property
    def expected_kind(self) -> ImprintKind:
        if len(self.subset) == self.d:
            return ImprintKind.PINCHED_SPHERE if self.m % 2 == 0 \
                else ImprintKind.SPHERE
        if len(self.subset) == 1:
            return ImprintKind.ALL
        return ImprintKind.SECTION

    @property
    def expected_dimension(self) -> int:
        return self.m - len(self.subset) - 2

    @property
    def pinch_count(self) -> int:
        if self.m % 2:
            return 0
        return comb(self.m - len(self.subset), self.m // 2 - len(self.subset))


def imprint_membership(spec: ImprintSpec, p: PointLike, tol: float = 1e-8) -> bool:
    """ angles in I coincide modulo 2π and the point lies on 𝒱^max """
    theta = as_angles(lift(p) if isinstance(p, QuotientPoint) else p)
    if theta.size != spec.m:
        raise ValueError(f"point has m={theta.size}, imprint is for m={spec.m}")
    block = theta[sorted(spec.subset)]
    if np.max(np.abs(wrap_to_pi(block - block[0]))) >= tol:
        return False
    return vmax_membership(theta, tol)


def _section_point(spec: ImprintSpec, free: FloatArray, tol: float,
                   max_iter: int) -> Optional[FloatArray]:
    # unknowns: the common angle of I, then the angles outside I
    counts = np.concatenate([[len(spec.subset)],
                             np.ones(spec.m - len(spec.subset))])
    x = free.copy()
    for _ in range(max_iter):
        residual = np.array([counts @ np.cos(x), counts @ np.sin(x)])
        if np.linalg.norm(residual) < tol:
            return x
        jac = np.vstack([-counts * np.sin(x), counts * np.cos(x)])
        step, *_ = np.linalg.lstsq(jac, -residual, rcond=None)
        x += step
    return None


def imprint_sample(spec: ImprintSpec, n: int,
                   rng: Optional[np.random.Generator] = None,
                   retries: int = 10, tol: float = 1e-13,
                   max_iter: int = 100) -> List[PhasePoint]:
    """
    n points of Q^{[m]∖I} ∩ 𝒱^max from random seeds, each written with
    θ_m = 0.
    """
    if n < 1:
        raise ValueError(f"n must be positive, got {n}")
    rng = rng or np.random.Generator(np.random.PCG64(0))
    inside = sorted(spec.subset)
    outside = [i for i in range(spec.m) if i not in spec.subset]
    samples = []
    for index in range(n):
        for attempt in range(retries):
            seed = rng.uniform(0.0, TWO_PI, len(outside) + 1)
            x = _section_point(spec, seed, tol, max_iter)
            if x is not None:
                break
            LOG.warning(f"imprint sample {index}: Newton failed, retry {attempt + 1}")
        else:
            raise RealizationError(f"could not place sample {index} on the "
                                   f"imprint of {spec.record.label}")
        theta = np.empty(spec.m)
        theta[inside] = x[0]
        theta[outside] = x[1:]
        samples.append(PhasePoint(theta - theta[-1]))
    return samples


def pinch_points(spec: ImprintSpec) -> List[PhasePoint]:
    """
    Singular points of 𝒱^max on the imprint: the half/half diagonals
    whose π half contains I. Empty for odd m.
    """
    if spec.m % 2:
        return []
    half = spec.m // 2
    rest = [i for i in range(spec.m) if i not in spec.subset]
    points = [exemplar(spec.subset | set(extra), spec.m)
              for extra in combinations(rest, half - len(spec.subset))]
    LOG.debug(f"{len(points)} pinch points on the imprint of {spec.record.label}")
    return points


def alpha_limit(start: PointLike, epsilon: Optional[float] = None,
                opts: Optional[IntegrationOptions] = None,
                t_span: float = 200.0) -> Optional[PhasePoint]:
    """
    Limit on 𝒱^max of the backward orbit of start: the Kuramoto flow is run
    backward into the band V >= m²/2 - epsilon, the auxiliary field W
    finishes the approach. None when the band is not reached within t_span.
    """
    theta = as_angles(lift(start) if isinstance(start, QuotientPoint) else start)
    m = theta.size
    epsilon = 0.01 * m ** 2 / 2 if epsilon is None else epsilon
    opts = opts or IntegrationOptions(rtol=1e-10, atol=1e-12)
    if gap_to_maximum(theta) > epsilon:
        trace = integrate(PhasePoint(theta), t_span, Direction.BACKWARD, opts=opts,
                          monitor=lambda t, y: gap_to_maximum(y) <= epsilon)
        if trace.terminal != TerminalKind.STOPPED:
            return None
        theta = trace.final_state
    limit, _ = alpha_limit_retraction(PhasePoint(theta), epsilon, opts)
    return limit


def imprint_alpha_limits(spec: ImprintSpec, n: int,
                         rng: Optional[np.random.Generator] = None,
                         delta: float = 1e-3, epsilon: Optional[float] = None,
                         opts: Optional[IntegrationOptions] = None,
                         t_span: float = 200.0) -> List[PhasePoint]:
    """
    α-limits of points on the local stable manifold of p_I: each start is
    p_I displaced by delta along a random stable direction, flowed backward
    up to V = m²/2 - epsilon and retracted onto 𝒱^max with the auxiliary
    field. Starts whose backward orbit never reaches the level are skipped.
    """
    rng = rng or np.random.Generator(np.random.PCG64(0))
    record = spec.record
    basis = orth(np.column_stack(record.stable_vectors()))
    limits = []
    for index in range(n):
        coefficients = rng.normal(size=basis.shape[1])
        direction = basis @ coefficients
        start = PhasePoint(record.exemplar.angles
                           + delta * direction / np.linalg.norm(direction))
        limit = alpha_limit(start, epsilon, opts, t_span)
        if limit is None:
            LOG.warning(f"sample {index} did not reach the high-potential band")
            continue
        limits.append(limit)
    LOG.info(f"{len(limits)}/{n} α-limits on the imprint of {record.label}")
    return limits


def _counterdiagonal_distance(p: PointLike, q: PointLike) -> float:
    # distance of the nearest counterdiagonal representatives
    delta = wrap_to_pi(project(p).coords - project(q).coords)
    full = np.append(delta, 0.0)
    return float(np.linalg.norm(full - full.mean()))


def _crossing(start: FloatArray, level: float, opts: IntegrationOptions,
              t_max: float):
    def reached(t, y):
        return potential(y) - level
    reached.terminal = True
    reached.direction = -1

    solution = solve_ivp(lambda t, y: vector_field(y), (0.0, t_max), start,
                         method=opts.method, rtol=opts.rtol, atol=opts.atol,
                         events=reached)
    if solution.status == -1:
        raise IntegrationError(f"integration failed: {solution.message}")
    if not solution.t_events[0].size:
        return np.nan, None
    return float(solution.t_events[0][0]), solution.y_events[0][0]


def normal_circle_experiment(base: PointLike, radius: float = 0.01, n: int = 360,
                             crossing_level: Optional[float] = None,
                             opts: Optional[IntegrationOptions] = None,
                             t_max: float = 400.0,
                             backward: bool = True) -> pd.DataFrame:
    """
    Follow a small circle normal to 𝒱^max around base. Each circle point is
    integrated forward to the level V = crossing_level, where its
    counterdiagonal distance to every index 1 saddle is recorded, and
    retracted backward onto 𝒱^max with the auxiliary field.

    @param base: point of 𝒱^max with independent normal frame
    @param radius: circle radius
    @param n: number of points, equally spaced in the circle angle φ
    @param crossing_level: level of the forward crossing, default 2(m-1),
        the potential of the index 1 saddles
    @return: one row per φ
    """
    theta = np.array(as_angles(base), dtype=np.float64)
    m = theta.size
    if radius <= 0 or n < 1:
        raise ValueError(f"need radius > 0 and n >= 1, got {radius}, {n}")
    frame = normal_frame(theta)
    if not frame.independent:
        raise DegenerateFrameError(f"Cos and Sin are dependent at {PhasePoint(theta)}, "
                                   f"the base is a singular point of the maximum set")
    level = saddle_potential(1, m) if crossing_level is None else crossing_level
    if not 0 < level < m ** 2 / 2:
        raise ValueError(f"crossing level {level} outside (0, m²/2)")
    opts = opts or IntegrationOptions(rtol=1e-10, atol=1e-12)
    normals = frame.orthonormal()
    saddles = [r for r in enumerate_equilibria(m, include_singular=False)
               if r.kind == EquilibriumKind.SADDLE and r.index == 1]

    rows = []
    for phi in TWO_PI * np.arange(n) / n:
        start = theta + radius * (np.cos(phi) * normals[:, 0]
                                  + np.sin(phi) * normals[:, 1])
        row = {"phi": phi}
        t_cross, state = _crossing(start, level, opts, t_max)
        row["t_cross"] = t_cross
        if state is None:
            LOG.warning(f"φ={phi:.4f}: no crossing of V={level} before t={t_max}")
            for i in range(m):
                row[f"theta{i + 1}"] = np.nan
            for saddle in saddles:
                row[f"dist_{saddle.label}"] = np.nan
            row["nearest"] = ""
        else:
            for i, value in enumerate(PhasePoint(state).angles):
                row[f"theta{i + 1}"] = value
            distances = {saddle.label: _counterdiagonal_distance(state, saddle.exemplar)
                         for saddle in saddles}
            for label, value in distances.items():
                row[f"dist_{label}"] = value
            row["nearest"] = min(distances, key=distances.get)
        if backward:
            limit, _ = alpha_limit_retraction(PhasePoint(start), opts=opts)
            row["alpha_distance"] = torus_distance(limit, theta)
        rows.append(row)
    table = pd.DataFrame(rows)
    table.attrs.update({"m": m, "radius": radius, "crossing_level": level,
                        "base": theta.tolist()})
    LOG.info(f"normal circle of radius {radius} around {PhasePoint(theta)}: "
             f"{int(table['t_cross'].notna().sum())}/{n} crossings")
    return table


def saddle_circle(spec: ImprintSpec, delta: float = 1e-3, n: int = 64) -> List[PhasePoint]:
    """
    Circle of radius delta around p_I in its stable space, for templates
    with exactly three positions outside I. Written so that the transverse
    coordinates of winding_number run once counterclockwise.
    """
    outside = [i for i in range(spec.m) if i not in spec.subset]
    if len(outside) != 3:
        raise ValueError(f"the stable space of {spec.record.label} is not a plane")
    a, b, c = outside
    base = spec.record.exemplar.angles
    points = []
    for phi in TWO_PI * np.arange(n) / n:
        x = delta * np.array([np.cos(phi), np.sin(phi)])
        # zero-sum on the 0-block, so the displacement is a stable direction
        shift = np.zeros(spec.m)
        shift[a] = -x.sum() / 3.0
        shift[b] = shift[a] + x[0]
        shift[c] = shift[a] + x[1]
        points.append(PhasePoint(base + shift))
    return points


def winding_number(curve: Sequence, template: Iterable[int],
                   tol: float = 1e-9) -> int:
    """
    Winding of a closed curve of Q around the subtorus where the angles of
    the three positions in template coincide.

    The transverse coordinates x = (θ_b - θ_a, θ_c - θ_a) are lifted to the
    plane and the winding forms around every lattice point (2πi, 2πj) near
    the lifted curve are summed.
    """
    positions = sorted(set(int(k) for k in template))
    if len(positions) != 3:
        raise ValueError(f"template needs three positions, got {positions}")
    points = np.array([as_angles(lift(p) if isinstance(p, QuotientPoint) else p)
                       for p in curve])
    if len(points) < 3:
        raise ValueError("a closed curve needs at least three points")
    if max(positions) >= points.shape[1] or min(positions) < 0:
        raise ValueError(f"template {positions} out of range for m={points.shape[1]}")
    a, b, c = positions
    x = np.column_stack([points[:, b] - points[:, a], points[:, c] - points[:, a]])
    x = np.vstack([x, x[:1]])
    lifted = np.unwrap(x, axis=0)

    low = np.floor((lifted.min(axis=0) - TWO_PI) / TWO_PI).astype(int)
    high = np.ceil((lifted.max(axis=0) + TWO_PI) / TWO_PI).astype(int)
    total = 0.0
    for i in range(low[0], high[0] + 1):
        for j in range(low[1], high[1] + 1):
            relative = lifted - TWO_PI * np.array([i, j])
            if np.min(np.linalg.norm(relative, axis=1)) < tol:
                raise ValueError("the curve passes through the template, "
                                 "winding is undefined")
            swept = np.unwrap(np.arctan2(relative[:, 1], relative[:, 0]))
            total += swept[-1] - swept[0]
    winding = total / TWO_PI
    if abs(winding - round(winding)) > 1e-3:
        LOG.warning(f"winding sum {winding:.6f} is not close to an integer, "
                    f"the curve may be too coarse or not closed in Q")
    return int(round(winding))
