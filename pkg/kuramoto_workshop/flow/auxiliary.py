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
The auxiliary field W = (w/‖∇V‖²) ∇V, w = m²/2 - V.

W has the orbits of the reversed Kuramoto flow, reparameterized so that the
potential gap decays exactly, w(t) = w(0) e^{-t}. Its limits retract the
high-potential region onto 𝒱^max.
"""
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
from ovos_utils.log import LOG
from scipy.optimize import brentq

from kuramoto_workshop.exceptions import SingularApproachError
from kuramoto_workshop.flow.integrator import IntegrationOptions, OrbitTrace, \
    TerminalKind, integrate
from kuramoto_workshop.model import FloatArray, PhasePoint, as_angles, \
    gap_to_maximum, hessian, potential, vector_field, wrap_to_pi
from kuramoto_workshop.quotient import QuotientPoint, counterdiagonal_embed


def ratio(theta) -> float:
    """ Y(Θ) = w(Θ) / ‖∇V(Θ)‖² """
    theta = as_angles(theta)
    grad = vector_field(theta)
    return gap_to_maximum(theta) / float(grad @ grad)


def auxiliary_field(theta) -> FloatArray:
    theta = as_angles(theta)
    grad = -vector_field(theta)
    norm2 = float(grad @ grad)
    if norm2 == 0.0:
        return np.zeros_like(theta)
    return gap_to_maximum(theta) / norm2 * grad


def ratio_closed_form(theta) -> float:
    """
    Y = 1 / (2 Σ_j sin²(θ_j - ψ)) with ψ the centroid phase, since
    w = |S|²/2 and ∂V/∂θ_j = |S| sin(θ_j - ψ) for S = Σ e^{iθ_k}.
    """
    theta = as_angles(theta)
    psi = np.angle(np.exp(1j * theta).sum())
    return float(1.0 / (2.0 * np.sum(np.sin(theta - psi) ** 2)))


def ratio_floor(m: int) -> float:
    """ Y >= 1/(2m) everywhere off the critical set """
    return 1.0 / (2.0 * m)


def ratio_bound(m: int, epsilon: float) -> float:
    """
    1 / (2(m + √(2ε))), the repelling rest point of the comparison
    equation ż = -z + 2(m + √(2ε)) z². It sits below ratio_floor(m), so
    it never caps Y; see ratio_comparison for the bound that holds.
    """
    return 1.0 / (2.0 * (m + np.sqrt(2.0 * epsilon)))


def ratio_comparison(y0: float, w0: float, m: int, t) -> FloatArray:
    """
    Upper bound z(t) for Y along a W-orbit starting at Y = y0, w = w0.

    ẏ = -y + 2y²⟨u, Hu⟩ with u the unit gradient, and ⟨u, Hu⟩ <= m + √(2w)
    <= m + √(2w0) as w decays, so y <= z with
    z(t) = 1 / (a + (1/y0 - a) e^t), a = 2(m + √(2w0)).
    Since y0 >= 1/(2m) > 1/a, z blows up at t* = ln(a / (a - 1/y0));
    the bound is +inf from there on.
    """
    a = 2.0 * (m + np.sqrt(2.0 * w0))
    t = np.asarray(t, dtype=np.float64)
    denominator = a + (1.0 / y0 - a) * np.exp(t)
    with np.errstate(divide="ignore"):
        return np.where(denominator > 0, 1.0 / denominator, np.inf)


def lipschitz_constant(m: int, epsilon: float, ratio_sup: float) -> float:
    """
    Lipschitz constant e^{2√2 y^T} of the α-limit restricted to the level
    V = m²/2 - ε, with y^T = max(ratio_sup, 1/(2(m + √(2ε)))).
    ratio_sup has to bound Y along the flowed curve, not only on the
    level: Y can rise above its starting value (RetractionDiagnostics.ratios).
    """
    y_top = max(ratio_sup, ratio_bound(m, epsilon))
    return float(np.exp(2.0 * np.sqrt(2.0) * y_top))


def hessian_bound_violation(theta) -> float:
    """
    How far the quadratic form of H = -Hess V leaves
    [-√(2w), m + √(2w)] over unit vectors; <= 0 when the bound holds.
    """
    theta = as_angles(theta)
    values = np.linalg.eigvalsh(hessian(theta))
    slack = np.sqrt(2.0 * gap_to_maximum(theta))
    return float(max(-slack - values[0], values[-1] - (theta.size + slack)))


@dataclass
class RetractionDiagnostics:
    times: FloatArray
    gaps: FloatArray  # w(t)
    ratios: FloatArray  # Y(t)
    hessian_violation: float
    trace: OrbitTrace

    def decay_error(self) -> float:
        """ worst relative deviation of w(t) from w(0) e^{-t} """
        expected = self.gaps[0] * np.exp(-self.times)
        return float(np.max(np.abs(self.gaps - expected) / expected))

    def comparison_bounds(self) -> FloatArray:
        """ ratio_comparison evaluated at every sample time """
        m = self.trace.states.shape[1]
        return ratio_comparison(self.ratios[0], self.gaps[0], m,
                                self.times - self.times[0])


def _ambient(start) -> FloatArray:
    if isinstance(start, QuotientPoint):
        return np.array(counterdiagonal_embed(start).angles)
    return np.array(as_angles(start))


def alpha_limit_retraction(start: Union[QuotientPoint, PhasePoint],
                           epsilon: Optional[float] = None,
                           opts: Optional[IntegrationOptions] = None,
                           gap_floor: float = 1e-14, ratio_cap: float = 1e6
                           ) -> Tuple[PhasePoint, RetractionDiagnostics]:
    """
    Follow W from a high-potential start to its limit on 𝒱^max.

    @param start: point with V >= m²/2 - epsilon
    @param epsilon: width of the high-potential band, default 1% of m²/2
    @param gap_floor: stop once w drops below this value
    @param ratio_cap: Y above this means the orbit is running into 𝒱^sing
    @return: the limit point and the w / Y history
    """
    theta = _ambient(start)
    m = theta.size
    epsilon = 0.01 * m ** 2 / 2 if epsilon is None else epsilon
    w0 = gap_to_maximum(theta)
    if w0 > epsilon:
        raise ValueError(f"start has V = {m ** 2 / 2 - w0:.6g}, below the "
                         f"high-potential threshold {m ** 2 / 2 - epsilon:.6g}")
    opts = opts or IntegrationOptions(rtol=1e-10, atol=1e-12)

    if w0 <= gap_floor:
        trace = OrbitTrace(np.zeros(1), theta[None, :], np.array([potential(theta)]),
                           np.array([abs(np.exp(1j * theta).mean())]),
                           TerminalKind.CONVERGED)
        return PhasePoint(theta), RetractionDiagnostics(
            np.zeros(1), np.array([w0]), np.array([np.nan]), 0.0, trace)

    def diverging(t, y):
        return ratio(y) > ratio_cap

    trace = integrate(theta, float(np.log(w0 / gap_floor)), opts=opts,
                      field_fn=auxiliary_field, potential_fn=potential,
                      monitor=diverging)
    gaps = np.array([gap_to_maximum(y) for y in trace.states])
    ratios = np.array([ratio(y) for y in trace.states])
    violation = max(hessian_bound_violation(y) for y in trace.states)
    diagnostics = RetractionDiagnostics(trace.times, gaps, ratios, violation, trace)
    if trace.terminal == TerminalKind.STOPPED:
        LOG.error(f"Y exceeded {ratio_cap} at t={trace.times[-1]:.4g}")
        raise SingularApproachError("auxiliary field diverged near a singular "
                                    "point of the maximum set", trace)
    limit = PhasePoint(trace.final_state)
    trace.terminal = TerminalKind.CONVERGED
    trace.limit = limit
    LOG.debug(f"retracted onto the maximum set, w: {w0:.3g} -> {gaps[-1]:.3g}")
    return limit, diagnostics


def flow_auxiliary(points: Sequence, t: float,
                   opts: Optional[IntegrationOptions] = None) -> List[PhasePoint]:
    """ time-t map of W applied to each point """
    opts = opts or IntegrationOptions(rtol=1e-10, atol=1e-12)
    return [PhasePoint(integrate(_ambient(p), t, opts=opts,
                                 field_fn=auxiliary_field).final_state)
            for p in points]


def curve_length(points: Sequence, closed: bool = True) -> float:
    """ polygonal length on the torus, shortest representative per segment """
    theta = np.array([_ambient(p) for p in points])
    if closed:
        theta = np.vstack([theta, theta[:1]])
    return float(np.sum(np.linalg.norm(wrap_to_pi(np.diff(theta, axis=0)), axis=1)))


def level_set_point(base, direction, gap: float, reach: float = 1.0) -> PhasePoint:
    """
    The point base + t·direction, t > 0, with w = m²/2 - V equal to gap.
    base is expected on 𝒱^max and direction to leave it transversally.
    """
    theta = _ambient(base)
    direction = np.asarray(direction, dtype=np.float64)
    direction = direction / np.linalg.norm(direction)

    def offset(t):
        return gap_to_maximum(theta + t * direction) - gap

    upper = 1e-3
    while offset(upper) < 0:
        upper *= 2
        if upper > reach:
            raise ValueError(f"w never reaches {gap} along this direction")
    return PhasePoint(theta + brentq(offset, 0.0, upper, xtol=1e-15) * direction)
