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
Dynamics on invariant subtori of Q: skew subtori of a partition, saddle
connections inside templates Q^I, and the homotopy F_s joining the Perfect
Morse field F_0 on 𝕋^d to the reduced Kuramoto field F_1.
"""
from dataclasses import dataclass, field
from itertools import product
from typing import Dict, FrozenSet, Iterable, List, Optional, Sequence

import numpy as np
from ovos_utils.log import LOG
from scipy.linalg import eig, orth, subspace_angles
from scipy.optimize import root

from kuramoto_workshop.equilibria import EquilibriumRecord, equilibrium
from kuramoto_workshop.exceptions import ConvergenceError
from kuramoto_workshop.flow.integrator import Direction, IntegrationOptions, \
    OrbitTrace, TerminalKind, integrate, perfect_morse_field, \
    perfect_morse_potential
from kuramoto_workshop.model import FloatArray, ModelParams, PhasePoint, \
    TWO_PI, vector_field, wrap_to_pi
from kuramoto_workshop.quotient import project, quotient_distance


@dataclass(frozen=True)
class Partition:
    """ ordered partition (I_1, ..., I_r) of the zero-based positions [m] """
    blocks: tuple

    def __post_init__(self):
        blocks = tuple(frozenset(b) for b in self.blocks)
        if len(blocks) < 2:
            raise ValueError("a partition needs at least two blocks")
        if any(len(b) == 0 for b in blocks):
            raise ValueError("partition blocks must be non-empty")
        members = [i for b in blocks for i in b]
        if len(members) != len(set(members)):
            raise ValueError("partition blocks must be disjoint")
        if sorted(members) != list(range(len(members))):
            raise ValueError(f"partition blocks must cover 0..{len(members) - 1}")
        object.__setattr__(self, "blocks", blocks)

    @classmethod
    def from_sizes(cls, sizes: Sequence[int]) -> "Partition":
        """ consecutive blocks, e.g. (1, 1, 5) -> {0}, {1}, {2..6} """
        blocks, start = [], 0
        for size in sizes:
            blocks.append(range(start, start + size))
            start += size
        return cls(tuple(blocks))

    @property
    def m(self) -> int:
        return sum(len(b) for b in self.blocks)

    @property
    def sizes(self) -> List[int]:
        return [len(b) for b in self.blocks]

    @property
    def representatives(self) -> List[int]:
        return [min(b) for b in self.blocks]


@dataclass(frozen=True, eq=False)
class ReducedField:
    """
    Induced flow on block representatives α_k = θ_{i_k}:
    α̇_k = ω_k + Σ_l w_kl sin(α_l - α_k), w_kl = Σ_{j ∈ I_l} a_{i_k j}.
    The quotient form pins the last block at angle 0.
    """
    partition: Partition
    weights: FloatArray
    omega: FloatArray

    @property
    def r(self) -> int:
        return len(self.partition.blocks)

    def __call__(self, alpha) -> FloatArray:
        alpha = np.asarray(alpha, dtype=np.float64)
        sines = np.sin(alpha[None, :] - alpha[:, None])
        return self.omega + (self.weights * sines).sum(axis=1)

    def jacobian(self, alpha) -> FloatArray:
        alpha = np.asarray(alpha, dtype=np.float64)
        cosines = self.weights * np.cos(alpha[None, :] - alpha[:, None])
        np.fill_diagonal(cosines, 0.0)
        return cosines - np.diag(cosines.sum(axis=1))

    def quotient(self, beta) -> FloatArray:
        full = self(np.append(beta, 0.0))
        return full[:-1] - full[-1]

    def quotient_jacobian(self, beta) -> FloatArray:
        jac = self.jacobian(np.append(beta, 0.0))
        return jac[:-1, :-1] - jac[-1, :-1][None, :]

    def expand(self, alpha) -> PhasePoint:
        """ the point of the skew subtorus with block angles alpha """
        theta = np.empty(self.partition.m)
        for angle, block in zip(np.asarray(alpha, dtype=np.float64),
                                self.partition.blocks):
            theta[list(block)] = angle
        return PhasePoint(theta)

    def restrict(self, p) -> FloatArray:
        theta = p.angles if isinstance(p, PhasePoint) else np.asarray(p)
        return theta[self.partition.representatives]


def skew_reduce(partition: Partition,
                params: Optional[ModelParams] = None) -> ReducedField:
    """
    Restrict the flow to the skew subtorus of partition. Perturbed
    parameters are accepted when every member of a block sees the same
    frequency and the same total coupling to each block, otherwise the
    subtorus is not invariant and ValueError is raised.
    """
    m = partition.m
    params = params or ModelParams.standard(m)
    if params.m != m:
        raise ValueError(f"partition covers m={m}, parameters have m={params.m}")
    blocks = [sorted(b) for b in partition.blocks]
    r = len(blocks)
    weights = np.empty((r, r))
    omega = np.empty(r)
    for k, block in enumerate(blocks):
        sums = np.array([[params.coupling[i, blocks[l]].sum() for l in range(r)]
                         for i in block])
        freqs = params.omega[block]
        if not (np.allclose(sums, sums[0], rtol=0, atol=1e-14) and
                np.allclose(freqs, freqs[0], rtol=0, atol=1e-14)):
            raise ValueError(f"block {k} is not invariant under these parameters")
        weights[k] = sums[0]
        omega[k] = freqs[0]
    return ReducedField(partition, weights, omega)


@dataclass
class HeteroclinicResult:
    source: EquilibriumRecord
    target: EquilibriumRecord
    branches: List[OrbitTrace]
    confinement: float  # worst spread of angles that must stay equal

    @property
    def found(self) -> bool:
        return len(self.branches) == 2


def _saddle_exit_vector(subset_i: FrozenSet[int], subset_j: FrozenSet[int],
                        m: int) -> FloatArray:
    # zero-sum vector on the 0-block of p_J, tangent to Q^I and
    # transverse to Q^J: eigenvalue |J| - (m - |J|) < 0 at p_J
    (k,) = subset_i - subset_j
    v = np.zeros(m)
    v[k] = m - len(subset_i)
    v[[i for i in range(m) if i not in subset_i]] = -1.0
    return v / np.linalg.norm(v)


def _spread(states: FloatArray, positions: Iterable[int]) -> float:
    positions = list(positions)
    if len(positions) < 2:
        return 0.0
    block = states[:, positions]
    return float(np.max(np.abs(wrap_to_pi(block - block[:, :1]))))


def find_heteroclinic(subset_i: Iterable[int], subset_j: Iterable[int], m: int,
                      opts: Optional[IntegrationOptions] = None,
                      delta: float = 1e-5, t_span: float = 400.0
                      ) -> HeteroclinicResult:
    """
    Both saddle connections from p_I to p_J inside the template Q^I.

    The connections are one-dimensional, so they are traced from their
    end: p_J is displaced by ±delta along its stable direction that leaves
    Q^J inside Q^I, the flow is run backward until it settles on p_I, and
    each backward orbit is returned read in forward time.
    """
    subset_i, subset_j = frozenset(subset_i), frozenset(subset_j)
    if not subset_j < subset_i or len(subset_i) != len(subset_j) + 1:
        raise ValueError(f"need J ⊂ I with |I| = |J| + 1, got I={sorted(subset_i)}, "
                         f"J={sorted(subset_j)}")
    if 2 * len(subset_i) >= m:
        raise ValueError(f"|I|={len(subset_i)} must be below m/2={m / 2}")
    opts = opts or IntegrationOptions()
    source, target = equilibrium(subset_i, m), equilibrium(subset_j, m)
    goal = source.quotient_point
    direction = _saddle_exit_vector(subset_i, subset_j, m)
    off_template = [i for i in range(m) if i not in subset_i]

    branches, confinement = [], 0.0
    for sign in (1.0, -1.0):
        start = PhasePoint(target.exemplar.angles + sign * delta * direction)
        hits = {"n": 0}

        def arrived(t, y, hits=hits):
            if np.linalg.norm(vector_field(y)) < opts.field_tol and \
                    quotient_distance(project(y), goal) < opts.snap_radius:
                hits["n"] += 1
            else:
                hits["n"] = 0
            return hits["n"] >= opts.detection_windows

        trace = integrate(start, t_span, Direction.BACKWARD, opts=opts,
                          monitor=arrived)
        if trace.terminal != TerminalKind.STOPPED:
            raise ConvergenceError(f"branch {sign:+.0f} from {target.label} "
                                   f"never reached {source.label}", trace)
        connection = trace.reversed()
        connection.terminal = TerminalKind.CONVERGED
        connection.limit = target
        connection.metadata.update({"alpha_limit": source.label,
                                    "omega_limit": target.label,
                                    "branch": int(sign)})
        confinement = max(confinement, _spread(trace.states, off_template),
                          _spread(trace.states, subset_j))
        branches.append(connection)
        LOG.debug(f"saddle connection {source.label} -> {target.label} "
                  f"branch {sign:+.0f}: {len(trace)} samples")
    return HeteroclinicResult(source, target, branches, confinement)


@dataclass(frozen=True)
class HomotopyField:
    """
    F_s = (1-s) F_0 + s F_1 on 𝕋^d where F_0 = -∇M is the Perfect Morse
    field and F_1 the Kuramoto field on the template Q^{[d]} of m oscillators.
    """
    d: int
    m: int
    s: float

    def __post_init__(self):
        if not 0.0 <= self.s <= 1.0:
            raise ValueError(f"s must lie in [0, 1], got {self.s}")
        if self.d < 1 or 2 * self.d >= self.m:
            raise ValueError(f"need 1 <= d < m/2, got d={self.d}, m={self.m}")

    def f0(self, theta) -> FloatArray:
        return perfect_morse_field(theta)

    def f1(self, theta) -> FloatArray:
        theta = np.asarray(theta, dtype=np.float64)
        sines = np.sin(theta)
        coupling = np.sin(theta[None, :] - theta[:, None]).sum(axis=1)
        return coupling - (self.m - self.d) * sines - sines.sum()

    def __call__(self, theta) -> FloatArray:
        return (1.0 - self.s) * self.f0(theta) + self.s * self.f1(theta)

    def jacobian(self, theta) -> FloatArray:
        theta = np.asarray(theta, dtype=np.float64)
        cos = np.cos(theta)
        pair = np.cos(theta[None, :] - theta[:, None])
        np.fill_diagonal(pair, 0.0)
        df1 = pair - cos[None, :]
        np.fill_diagonal(df1, -pair.sum(axis=1) - (self.m - self.d + 1) * cos)
        return self.s * df1 - (1.0 - self.s) * np.diag(cos)

    @staticmethod
    def pair_potential(theta) -> float:
        """ W(Θ) = ½ Σ_{l,k<=d} (1 - cos(θ_l - θ_k)) """
        theta = np.asarray(theta, dtype=np.float64)
        return 0.5 * float(np.sum(1.0 - np.cos(theta[None, :] - theta[:, None])))

    def lyapunov(self, theta) -> float:
        """ Λ = W + (m - d + (1-s)/s) M, defined for s > 0 """
        if self.s <= 0:
            raise ValueError("Λ is only defined for s > 0")
        weight = self.m - self.d + (1.0 - self.s) / self.s
        return self.pair_potential(theta) + weight * perfect_morse_potential(theta)

    def corner(self, k: int) -> FloatArray:
        """ p_{[k]}: first k coordinates at π, the rest at 0 """
        point = np.zeros(self.d)
        point[:k] = np.pi
        return point

    def corners(self) -> List[FloatArray]:
        return [np.array(c) for c in product((0.0, np.pi), repeat=self.d)]


@dataclass
class HomotopyReport:
    s: float
    zeros: List[FloatArray]
    spurious_zeros: List[FloatArray]
    failed_seeds: int
    lyapunov_violations: Optional[int]
    eigenspace_gaps: Dict[int, float] = field(default_factory=dict)
    eigenspace_dims: Dict[int, int] = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return (not self.spurious_zeros and not self.lyapunov_violations and
                all(self.eigenspace_dims[k] == k for k in self.eigenspace_dims))


def _seeds(d: int, grid: int, rng: np.random.Generator) -> List[FloatArray]:
    if d <= 2:
        axis = (np.arange(grid) + 0.5) * TWO_PI / grid
        return [np.array(c) for c in product(axis, repeat=d)]
    return list(rng.uniform(0.0, TWO_PI, (grid ** 2, d)))


def unstable_subspace(jacobian: FloatArray) -> FloatArray:
    """ orthonormal basis of the span of eigenvectors with Re λ > 0 """
    values, vectors = eig(jacobian)
    picked = vectors[:, values.real > 0]
    if picked.shape[1] == 0:
        return np.zeros((jacobian.shape[0], 0))
    return orth(np.hstack([picked.real, picked.imag]))


def homotopy_analysis(h: HomotopyField, grid: int = 20, orbits: int = 50,
                      rng: Optional[np.random.Generator] = None,
                      opts: Optional[IntegrationOptions] = None,
                      zero_tol: float = 1e-8, t_span: float = 10.0
                      ) -> HomotopyReport:
    """
    Numerical evidence that F_s is equivalent to the Perfect Morse flow:
    zeros from a grid of Newton seeds, monotonicity of Λ along sampled
    orbits and the unstable eigenspaces at the corners p_{[k]}.
    """
    rng = rng or np.random.Generator(np.random.PCG64(0))
    opts = opts or IntegrationOptions()

    zeros, spurious, failed = [], [], 0
    for seed in _seeds(h.d, grid, rng):
        solution = root(h, seed, jac=h.jacobian, method="hybr", tol=1e-13)
        if not solution.success or np.linalg.norm(h(solution.x)) > zero_tol:
            failed += 1
            continue
        point = np.mod(solution.x, TWO_PI)
        point[point > TWO_PI - zero_tol] = 0.0
        if any(np.linalg.norm(wrap_to_pi(point - z)) < 1e-6 for z in zeros + spurious):
            continue
        offset = np.minimum(np.abs(point), np.abs(point - np.pi))
        (zeros if np.all(offset < zero_tol) else spurious).append(point)
    if failed:
        LOG.warning(f"s={h.s}: {failed} Newton seeds did not converge")
    if spurious:
        LOG.warning(f"s={h.s}: zeros away from {{0, π}}^d: {spurious}")

    violations = None
    if h.s > 0:
        violations = 0
        for _ in range(orbits):
            start = rng.uniform(0.0, TWO_PI, h.d)
            trace = integrate(start, t_span, opts=opts, field_fn=h,
                              potential_fn=h.lyapunov)
            steps = np.diff(trace.potentials)
            scale = 1e-12 * max(1.0, abs(trace.potentials[0]))
            violations += int(np.sum(steps > scale))

    # at s = 1 the unstable space of p_{[k]} is spanned by e_1..e_k
    gaps, dims = {}, {}
    for k in range(1, h.d + 1):
        basis = unstable_subspace(h.jacobian(h.corner(k)))
        dims[k] = basis.shape[1]
        axes = np.eye(h.d)[:, :k]
        gaps[k] = float(np.max(subspace_angles(basis, axes))) \
            if basis.shape[1] == k else np.inf
    LOG.info(f"homotopy s={h.s}: {len(zeros)} zeros, {len(spurious)} spurious, "
             f"Λ violations={violations}")
    return HomotopyReport(h.s, zeros, spurious, failed, violations, gaps, dims)
