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
Adaptive integration of the Kuramoto flow φ_t on 𝕋^m and of the quotient
flow ψ_t on Q, limit-point detection and orbit export.
"""
import enum
import json
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, List, Optional, TextIO, Tuple, Union

import numpy as np
import pandas as pd
from ovos_utils.log import LOG
from scipy.integrate import DOP853, RK23, RK45
from scipy.optimize import root

from kuramoto_workshop.equilibria import EquilibriumRecord, \
    enumerate_equilibria, nearest_equilibrium
from kuramoto_workshop.exceptions import ConvergenceError, IntegrationError
from kuramoto_workshop.model import FloatArray, ModelParams, PhasePoint, \
    TWO_PI, field_jacobian, gap_to_maximum, potential, vector_field
from kuramoto_workshop.quotient import QuotientPoint, lift, project, \
    quotient_field, quotient_potential

SOLVERS = {"RK45": RK45, "DOP853": DOP853, "RK23": RK23}

Start = Union[PhasePoint, QuotientPoint, FloatArray]
Limit = Union[EquilibriumRecord, PhasePoint, QuotientPoint, None]


class Direction(str, enum.Enum):
    FORWARD = "forward"
    BACKWARD = "backward"


class TerminalKind(str, enum.Enum):
    CONVERGED = "converged"
    STOPPED = "stopped"  # a monitor ended the run, e.g. a level crossing
    MAX_TIME = "max-time"
    STEP_FAILURE = "step-failure"


@dataclass
class IntegrationOptions:
    rtol: float = 1e-8
    atol: float = 1e-10
    method: str = "RK45"
    max_steps: int = 200_000
    max_step: float = np.inf
    # limit detection
    field_tol: float = 1e-8
    snap_radius: float = 1e-4
    detection_windows: int = 2

    def __post_init__(self):
        if self.method not in SOLVERS:
            raise ValueError(f"unknown integrator {self.method!r}, "
                             f"expected one of {sorted(SOLVERS)}")
        if self.rtol <= 0 or self.atol <= 0:
            raise ValueError("integration tolerances must be positive")


@dataclass
class OrbitTrace:
    """
    Time-sampled orbit. One sample per accepted integrator step; backward
    runs carry negative times. `potentials` is V and `order_parameters`
    is r = |Z| at every sample.
    """
    times: FloatArray
    states: FloatArray
    potentials: FloatArray
    order_parameters: FloatArray
    terminal: TerminalKind
    space: str = "ambient"
    limit: Limit = None
    metadata: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.times)

    @property
    def final_state(self) -> FloatArray:
        return self.states[-1]

    def final_point(self) -> Union[PhasePoint, QuotientPoint]:
        if self.space == "quotient":
            return QuotientPoint(self.final_state)
        return PhasePoint(self.final_state)

    def reversed(self) -> "OrbitTrace":
        """ the same orbit read in forward time """
        times = self.times[::-1] - self.times[-1]
        return OrbitTrace(times, self.states[::-1], self.potentials[::-1],
                          self.order_parameters[::-1], self.terminal,
                          self.space, self.limit, dict(self.metadata))

    def to_frame(self) -> pd.DataFrame:
        columns = {"t": self.times}
        for i in range(self.states.shape[1]):
            columns[f"x{i + 1}"] = self.states[:, i]
        columns["V"] = self.potentials
        columns["r"] = self.order_parameters
        return pd.DataFrame(columns)

    def to_csv(self, stream: TextIO, header: Optional[dict] = None):
        """
        Write t, state components, V and r; an optional header dict is
        written first as a '#'-prefixed JSON line.
        """
        if header is not None:
            stream.write("# " + json.dumps(header, sort_keys=True) + "\n")
        self.to_frame().to_csv(stream, index=False, float_format="%.12g")


def _as_state(start: Start) -> Tuple[FloatArray, str]:
    if isinstance(start, PhasePoint):
        return np.array(start.angles), "ambient"
    if isinstance(start, QuotientPoint):
        return np.array(start.coords), "quotient"
    return np.asarray(start, dtype=np.float64).ravel().copy(), "custom"


def _rhs(space: str, params: Optional[ModelParams],
         custom: Optional[Callable]) -> Callable:
    if custom is not None:
        return custom
    if params is not None and params.is_standard:
        params = None
    if space == "ambient":
        return lambda y: vector_field(y, params)
    if params is None:
        return quotient_field

    def generalized_quotient_field(y):
        k = vector_field(np.append(y, 0.0), params)
        return k[:-1] - k[-1]

    return generalized_quotient_field


def _diagnostics(space: str, potential_fn: Optional[Callable]) -> Callable:
    def ambient(y):
        return potential(y), abs(np.exp(1j * y).mean())

    def quotient(y):
        full = np.append(y, 0.0)
        return quotient_potential(y), abs(np.exp(1j * full).mean())

    def custom(y):
        v = potential_fn(y) if potential_fn else np.nan
        return v, abs(np.exp(1j * y).mean())

    return {"ambient": ambient, "quotient": quotient}.get(space, custom)


def integrate(start: Start, t_span: float,
              direction: Union[Direction, str] = Direction.FORWARD,
              params: Optional[ModelParams] = None,
              opts: Optional[IntegrationOptions] = None,
              field_fn: Optional[Callable] = None,
              potential_fn: Optional[Callable] = None,
              monitor: Optional[Callable[[float, FloatArray], bool]] = None,
              strict: bool = True) -> OrbitTrace:
    """
    Integrate the ambient field (PhasePoint start), the quotient field
    (QuotientPoint start) or a custom field (array start plus field_fn).

    @param start: initial state
    @param t_span: positive duration
    @param direction: forward or backward in time
    @param params: generalized model parameters, None for the standard model
    @param opts: tolerances, method and step budget
    @param field_fn: custom right hand side, state -> derivative
    @param potential_fn: custom potential recorded in the V column
    @param monitor: called after each accepted step with (t, state); the run
        stops when it returns True
    @param strict: raise IntegrationError when the step controller fails
    @return: OrbitTrace with every accepted step
    """
    if t_span <= 0:
        raise ValueError(f"t_span must be positive, got {t_span}")
    opts = opts or IntegrationOptions()
    direction = Direction(direction)
    y0, space = _as_state(start)
    if space == "custom" and field_fn is None:
        raise ValueError("array start requires field_fn")
    if params is not None and space != "custom":
        expected = y0.size if space == "ambient" else y0.size + 1
        if params.m != expected:
            raise ValueError(f"start has m={expected} but parameters "
                             f"were built for m={params.m}")
    rhs = _rhs(space, params, field_fn)
    sign = 1.0 if direction == Direction.FORWARD else -1.0
    diagnose = _diagnostics(space, potential_fn)

    solver = SOLVERS[opts.method](lambda t, y: sign * rhs(y), 0.0, y0, t_span,
                                  rtol=opts.rtol, atol=opts.atol,
                                  max_step=opts.max_step)
    times, states, values, radii = [0.0], [y0.copy()], [], []
    v0, r0 = diagnose(y0)
    values.append(v0)
    radii.append(r0)
    terminal = TerminalKind.MAX_TIME
    steps = 0
    while solver.status == "running":
        message = solver.step()
        if solver.status == "failed":
            LOG.error(f"integration failed at t={solver.t:.6g}: {message}")
            terminal = TerminalKind.STEP_FAILURE
            break
        y = solver.y.copy()
        v, r = diagnose(y)
        times.append(sign * solver.t)
        states.append(y)
        values.append(v)
        radii.append(r)
        if monitor is not None and monitor(solver.t, y):
            terminal = TerminalKind.STOPPED
            break
        steps += 1
        if steps >= opts.max_steps:
            LOG.warning(f"step budget of {opts.max_steps} exhausted "
                        f"at t={solver.t:.6g}")
            break

    trace = OrbitTrace(np.asarray(times), np.vstack(states), np.asarray(values),
                       np.asarray(radii), terminal, space,
                       metadata={"direction": direction.value,
                                 "method": opts.method, "steps": steps})
    if terminal == TerminalKind.STEP_FAILURE and strict:
        raise IntegrationError(f"step size controller failed after {steps} steps",
                               trace)
    return trace


def perfect_morse_potential(theta) -> float:
    """ M(Θ) = Σ (1 - cos θ_k) """
    return float(np.sum(1.0 - np.cos(np.asarray(theta, dtype=np.float64))))


def perfect_morse_field(theta) -> FloatArray:
    """ -∇M, a product of circle source/sink flows """
    return -np.sin(np.asarray(theta, dtype=np.float64))


@lru_cache(maxsize=16)
def _records(m: int) -> Tuple[EquilibriumRecord, ...]:
    return tuple(enumerate_equilibria(m))


def random_quotient_point(m: int, rng: np.random.Generator) -> QuotientPoint:
    return QuotientPoint(rng.uniform(0.0, TWO_PI, m - 1))


def converge(start: Union[QuotientPoint, PhasePoint],
             params: Optional[ModelParams] = None,
             opts: Optional[IntegrationOptions] = None,
             t_span: float = 500.0) -> OrbitTrace:
    """
    Integrate the quotient flow forward until it settles; trace.limit holds
    the matched EquilibriumRecord (standard model), the start itself when it
    already lies on 𝒱^max, or the final QuotientPoint for perturbed models.
    Raises ConvergenceError when t_span elapses first.
    """
    opts = opts or IntegrationOptions()
    if isinstance(start, PhasePoint):
        start = project(start)
    m = start.m
    standard = params is None or params.is_standard
    rhs = _rhs("quotient", params, None)

    if np.linalg.norm(rhs(start.coords)) < opts.field_tol and \
            gap_to_maximum(lift(start)) < opts.field_tol:
        LOG.debug("start lies on the maximum set, nothing to integrate")
        v = quotient_potential(start.coords)
        return OrbitTrace(np.zeros(1), start.coords[None, :].copy(),
                          np.array([v]), np.array([0.0]),
                          TerminalKind.CONVERGED, "quotient", lift(start))

    records = _records(m) if standard else ()
    state = {"hits": 0, "limit": None}

    def settled(t, y):
        if np.linalg.norm(rhs(y)) >= opts.field_tol:
            state["hits"] = 0
            return False
        if standard:
            record, distance = nearest_equilibrium(QuotientPoint(y), records)
            if distance >= opts.snap_radius:
                state["hits"] = 0
                return False
            state["limit"] = record
        else:
            state["limit"] = QuotientPoint(y)
        state["hits"] += 1
        return state["hits"] >= opts.detection_windows

    trace = integrate(start, t_span, Direction.FORWARD, params, opts,
                      monitor=settled)
    if trace.terminal != TerminalKind.STOPPED:
        raise ConvergenceError(f"no limit point within t={t_span}", trace)
    trace.terminal = TerminalKind.CONVERGED
    trace.limit = state["limit"]
    LOG.debug(f"converged to {getattr(trace.limit, 'label', trace.limit)} "
              f"at t={trace.times[-1]:.3f}")
    return trace


def omega_limit(start: Union[QuotientPoint, PhasePoint],
                params: Optional[ModelParams] = None,
                opts: Optional[IntegrationOptions] = None,
                t_span: float = 500.0) -> Limit:
    return converge(start, params, opts, t_span).limit


@dataclass
class PersistenceReport:
    """ fixed points of a perturbed model continued from the standard ones """
    expected: int
    located: int
    index_matches: int
    shifts: List[float]
    failures: List[str]

    @property
    def ok(self) -> bool:
        return self.located == self.expected == self.index_matches


def persistence_check(params: ModelParams, max_shift: float = 0.1,
                      tol: float = 1e-12) -> PersistenceReport:
    """
    Newton continuation of every hyperbolic critical diagonal into the
    generalized model, solved in the frame rotating with the mean natural
    frequency. A zero counts when it lies within max_shift of its
    unperturbed exemplar and has the same number of unstable directions.
    """
    centered = params.centered()
    m = params.m

    def residual(x):
        k = vector_field(np.append(x, 0.0), centered)
        return k[:-1] - k[-1]

    def jacobian(x):
        jac = field_jacobian(np.append(x, 0.0), centered)
        return jac[:-1, :-1] - jac[-1, :-1][None, :]

    expected = [r for r in _records(m) if r.kind.value != "singular-max"]
    located, matches, shifts, failures, found = 0, 0, [], [], []
    for record in expected:
        x0 = np.array(record.quotient_point.coords)
        solution = root(residual, x0, jac=jacobian, method="hybr", tol=tol)
        shift = float(np.linalg.norm(solution.x - x0))
        if not solution.success or shift > max_shift:
            LOG.warning(f"{record.label} did not persist: {solution.message}")
            failures.append(record.label)
            continue
        if any(np.linalg.norm(solution.x - other) < 1e-8 for other in found):
            failures.append(record.label)
            continue
        found.append(solution.x)
        located += 1
        shifts.append(shift)
        unstable = int(np.sum(np.linalg.eigvals(jacobian(solution.x)).real > 0))
        if unstable == record.index:
            matches += 1
        else:
            LOG.warning(f"{record.label}: index {record.index} became {unstable}")
    LOG.info(f"persistence: {located}/{len(expected)} located, "
             f"{matches} with matching index")
    return PersistenceReport(len(expected), located, matches, shifts, failures)
