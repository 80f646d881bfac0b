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
Potential, vector field, centroid and Hessian of the all-to-all Kuramoto
model on the m-torus.

The standard model is the gradient flow of

    V(Θ) = ½ Σ_{l,k} (1 - cos(θ_l - θ_k))

with K = -∇V, K_j = Σ_k sin(θ_k - θ_j). The generalized model adds natural
frequencies ω and a coupling matrix a, K_j = ω_j + Σ_k a_jk sin(θ_k - θ_j).
"""
from dataclasses import dataclass
from typing import Iterable, Optional, Tuple, Union

import numpy as np
from numpy.typing import NDArray

TWO_PI = 2.0 * np.pi
DEFAULT_ANGLE_TOL = 1e-9

FloatArray = NDArray[np.float64]


def wrap_angles(angles) -> FloatArray:
    """Map angles to [0, 2π)."""
    wrapped = np.mod(np.asarray(angles, dtype=np.float64), TWO_PI)
    # np.mod can round a tiny negative input up to exactly 2π
    return np.where(wrapped >= TWO_PI, 0.0, wrapped)


def wrap_to_pi(angles) -> FloatArray:
    """Map angles to [-π, π)."""
    return np.mod(np.asarray(angles, dtype=np.float64) + np.pi, TWO_PI) - np.pi


@dataclass(frozen=True, eq=False)
class PhasePoint:
    """
    A point Θ = (θ_1, ..., θ_m) of the m-torus.
    Angles are stored normalized to [0, 2π) in a read-only array.
    """
    angles: FloatArray

    def __post_init__(self):
        arr = np.array(self.angles, dtype=np.float64).ravel()
        if arr.size < 2:
            raise ValueError(f"a phase point needs m >= 2 angles, got {arr.size}")
        if not np.all(np.isfinite(arr)):
            raise ValueError("phase angles must be finite")
        arr = wrap_angles(arr)
        arr.setflags(write=False)
        object.__setattr__(self, "angles", arr)

    @property
    def m(self) -> int:
        return int(self.angles.size)

    @classmethod
    def synchronized(cls, m: int, angle: float = 0.0) -> "PhasePoint":
        """ a point of the main diagonal D """
        return cls(np.full(m, angle))

    @classmethod
    def roots_of_unity(cls, m: int) -> "PhasePoint":
        """ (0, 2π/m, ..., 2π(m-1)/m), the canonical point of 𝒱^max """
        return cls(TWO_PI * np.arange(m) / m)

    def isclose(self, other: "PhasePoint",
                tol: float = DEFAULT_ANGLE_TOL) -> bool:
        """ angle-wise equality modulo 2π """
        return torus_distance(self, other) <= tol

    def __iter__(self):
        return iter(self.angles.tolist())

    def __len__(self):
        return self.m

    def __repr__(self):
        return f"PhasePoint({np.array2string(self.angles, precision=6)})"


PointLike = Union[PhasePoint, Iterable[float], FloatArray]


def as_angles(p: PointLike) -> FloatArray:
    """ raw (not wrapped) angle array for a PhasePoint or any array-like """
    if isinstance(p, PhasePoint):
        return p.angles
    return np.asarray(p, dtype=np.float64).ravel()


@dataclass(frozen=True, eq=False)
class ModelParams:
    """
    Parameters of θ̇_j = ω_j + Σ_k a_jk sin(θ_k - θ_j).
    Defaults (ω = 0, a = 1) give the standard Kuramoto gradient flow.
    """
    m: int
    omega: Optional[FloatArray] = None
    coupling: Optional[FloatArray] = None

    def __post_init__(self):
        if int(self.m) < 2:
            raise ValueError(f"m must be >= 2, got {self.m}")
        omega = np.zeros(self.m) if self.omega is None else \
            np.array(self.omega, dtype=np.float64).ravel()
        coupling = np.ones((self.m, self.m)) if self.coupling is None else \
            np.array(self.coupling, dtype=np.float64)
        if omega.shape != (self.m,):
            raise ValueError(f"omega has {omega.size} entries, expected {self.m}")
        if coupling.shape != (self.m, self.m):
            raise ValueError(f"coupling has shape {coupling.shape}, "
                             f"expected ({self.m}, {self.m})")
        omega.setflags(write=False)
        coupling.setflags(write=False)
        object.__setattr__(self, "m", int(self.m))
        object.__setattr__(self, "omega", omega)
        object.__setattr__(self, "coupling", coupling)

    @classmethod
    def standard(cls, m: int) -> "ModelParams":
        return cls(m)

    @property
    def is_standard(self) -> bool:
        return bool(np.all(self.omega == 0.0) and np.all(self.coupling == 1.0))

    @property
    def is_symmetric(self) -> bool:
        return bool(np.allclose(self.coupling, self.coupling.T, atol=0.0))

    def centered(self) -> "ModelParams":
        """
        Parameters in the frame rotating with the mean natural frequency.
        For symmetric coupling Σ_j K_j = Σ_j ω_j, so subtracting the mean
        leaves a field orthogonal to the diagonal.
        """
        return ModelParams(self.m, self.omega - self.omega.mean(), self.coupling)

    def perturbed(self, rng: np.random.Generator, omega_scale: float = 0.01,
                  coupling_scale: float = 0.01) -> "ModelParams":
        """
        Draw |ω_i| <= omega_scale and a symmetric coupling with
        |a_ij - 1| <= coupling_scale around these parameters.
        """
        omega = self.omega + rng.uniform(-omega_scale, omega_scale, self.m)
        jitter = rng.uniform(-coupling_scale, coupling_scale, (self.m, self.m))
        jitter = np.triu(jitter) + np.triu(jitter, 1).T
        return ModelParams(self.m, omega, self.coupling + jitter)

    def to_dict(self) -> dict:
        return {"m": self.m, "omega": self.omega.tolist(),
                "coupling": self.coupling.tolist()}


@dataclass(frozen=True)
class Centroid:
    """ Z = (1/m) Σ e^{iθ_k}, the phase order parameter """
    value: complex

    @property
    def r(self) -> float:
        return float(abs(self.value))

    @property
    def phase(self) -> float:
        return float(np.angle(self.value))


def _differences(theta: FloatArray) -> FloatArray:
    # diff[j, k] = θ_k - θ_j
    return theta[None, :] - theta[:, None]


def _check_params(theta: FloatArray, params: ModelParams):
    if params.m != theta.size:
        raise ValueError(f"phase point has m={theta.size} but parameters "
                         f"were built for m={params.m}")


def potential(p: PointLike) -> float:
    """
    Kuramoto potential V(Θ) = ½ Σ_{l,k} (1 - cos(θ_l - θ_k)), in [0, m²/2].
    """
    theta = as_angles(p)
    return 0.5 * float(np.sum(1.0 - np.cos(_differences(theta))))


def gap_to_maximum(p: PointLike) -> float:
    """
    w(Θ) = m²/2 - V(Θ) = ½ |Σ e^{iθ_k}|², evaluated without the
    cancellation of subtracting V from m²/2.
    """
    theta = as_angles(p)
    total = np.exp(1j * theta).sum()
    return 0.5 * float(total.real ** 2 + total.imag ** 2)


def vector_field(p: PointLike, params: Optional[ModelParams] = None) -> FloatArray:
    """
    K_j = ω_j + Σ_k a_jk sin(θ_k - θ_j); the standard field K = -∇V when
    params is None or has default values.
    """
    theta = as_angles(p)
    sines = np.sin(_differences(theta))
    if params is None:
        return sines.sum(axis=1)
    _check_params(theta, params)
    return params.omega + (params.coupling * sines).sum(axis=1)


def field_jacobian(p: PointLike, params: Optional[ModelParams] = None) -> FloatArray:
    """ derivative DK of the (generalized) field """
    theta = as_angles(p)
    cosines = np.cos(_differences(theta))
    if params is not None:
        _check_params(theta, params)
        cosines = params.coupling * cosines
    jac = cosines.copy()
    np.fill_diagonal(jac, 0.0)
    jac -= np.diag(jac.sum(axis=1))
    return jac


def gradient(p: PointLike) -> FloatArray:
    """ Euclidean gradient ∇V = -K of the standard model """
    return -vector_field(p)


def centroid(p: PointLike) -> Centroid:
    theta = as_angles(p)
    return Centroid(complex(np.exp(1j * theta).mean()))


def order_parameter(p: PointLike) -> Tuple[float, float]:
    """ (r, ψ) with Z = r e^{iψ} """
    z = centroid(p)
    return z.r, z.phase


def hessian(p: PointLike) -> FloatArray:
    """
    Hessian of -V:  H_ij = cos(θ_i - θ_j) - δ_ij Σ_k cos(θ_k - θ_i).
    Symmetric with zero row sums, H·𝟏 = 0 everywhere.
    """
    theta = as_angles(p)
    cosines = np.cos(_differences(theta))
    return cosines - np.diag(cosines.sum(axis=1))


def hessian_cos_sin(p: PointLike) -> FloatArray:
    """
    Rank-two form of the same Hessian,
    H = Cos Cosᵀ + Sin Sinᵀ - S diag(Sin) - C diag(Cos)
    with C = Σ cos θ_k and S = Σ sin θ_k.
    """
    theta = as_angles(p)
    cos, sin = np.cos(theta), np.sin(theta)
    return (np.outer(cos, cos) + np.outer(sin, sin)
            - sin.sum() * np.diag(sin) - cos.sum() * np.diag(cos))


def is_antipodal(p: PointLike, tol: float = DEFAULT_ANGLE_TOL) -> bool:
    """ True when every θ_j - θ_k is within tol of a multiple of π """
    if tol <= 0:
        raise ValueError(f"tol must be positive, got {tol}")
    theta = as_angles(p)
    residue = np.mod(_differences(theta), np.pi)
    return bool(np.all(np.minimum(residue, np.pi - residue) <= tol))


def diagonal_rotate(p: PointLike, alpha: float) -> PhasePoint:
    """ the diagonal action T_α: Θ ↦ Θ + α𝟏 """
    return PhasePoint(as_angles(p) + alpha)


def torus_distance(p: PointLike, q: PointLike) -> float:
    """ Euclidean length of the shortest representative of p - q """
    return float(np.linalg.norm(wrap_to_pi(as_angles(p) - as_angles(q))))
