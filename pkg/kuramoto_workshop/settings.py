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
Experiment configuration, persisted as a human-readable JSON key-value file.
"""
import os
from dataclasses import asdict, dataclass, field, fields
from os.path import dirname, isdir, isfile
from typing import List, Optional

import numpy as np
from json_database import JsonStorage
from ovos_utils.log import LOG

from kuramoto_workshop.exceptions import InvalidConfiguration

SCHEMA_VERSION = 1
OUTPUT_FORMATS = ("csv", "json")


@dataclass
class ExperimentConfig:
    m: int = 5
    seed: int = 0
    rtol: float = 1e-8
    atol: float = 1e-10
    method: str = "RK45"
    t_span: float = 500.0
    radius: float = 0.01
    n: Optional[int] = None
    crossing_level: Optional[float] = None
    epsilon: Optional[float] = None
    s_grid: List[float] = field(default_factory=lambda: [0.1, 0.25, 0.5, 0.75, 0.9])
    omega: Optional[List[float]] = None
    coupling_jitter: float = 0.0
    output: Optional[str] = None
    output_format: str = "csv"

    def __post_init__(self):
        if not isinstance(self.m, int) or self.m < 2:
            raise InvalidConfiguration(f"m must be ≥ 2, got {self.m}")
        if not 0 <= self.seed < 2 ** 64:
            raise InvalidConfiguration(f"seed must be a 64-bit unsigned integer, got {self.seed}")
        if self.output_format not in OUTPUT_FORMATS:
            raise InvalidConfiguration(f"output format must be one of {OUTPUT_FORMATS}, "
                                       f"got {self.output_format!r}")
        if self.rtol <= 0 or self.atol <= 0:
            raise InvalidConfiguration("integration tolerances must be positive")
        if self.omega is not None and len(self.omega) != self.m:
            raise InvalidConfiguration(f"omega has {len(self.omega)} entries, "
                                       f"expected m={self.m}")
        if self.coupling_jitter < 0:
            raise InvalidConfiguration("coupling jitter must be non-negative")
        if self.n is not None and self.n < 1:
            raise InvalidConfiguration(f"n must be positive, got {self.n}")
        if not self.s_grid or any(not 0.0 <= s <= 1.0 for s in self.s_grid):
            raise InvalidConfiguration(f"s_grid values must lie in [0, 1], got {self.s_grid}")

    def count(self, default: int) -> int:
        """ n, or the command's own default when the config leaves it unset """
        return default if self.n is None else self.n

    def rng(self) -> np.random.Generator:
        """ the seed determines every randomized run """
        return np.random.Generator(np.random.PCG64(self.seed))

    def to_dict(self) -> dict:
        data = asdict(self)
        data["schema_version"] = SCHEMA_VERSION
        return data

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known - {"schema_version"}
        if unknown:
            LOG.warning(f"ignoring unknown config keys: {sorted(unknown)}")
        version = data.get("schema_version", SCHEMA_VERSION)
        if version != SCHEMA_VERSION:
            raise InvalidConfiguration(f"unsupported schema version {version}")
        return cls(**{k: v for k, v in data.items() if k in known})

    def save(self, path: str) -> str:
        folder = dirname(path)
        if folder and not isdir(folder):
            os.makedirs(folder)
        storage = JsonStorage(path, disable_lock=True)
        storage.clear()
        storage.update(self.to_dict())
        storage.store()
        LOG.debug(f"config written to {path}")
        return path

    @classmethod
    def load(cls, path: str) -> "ExperimentConfig":
        if not isfile(path):
            raise InvalidConfiguration(f"config file {path} does not exist")
        storage = JsonStorage(path, disable_lock=True)
        if not storage:
            raise InvalidConfiguration(f"no configuration found at {path}")
        return cls.from_dict(dict(storage))

    def updated(self, **overrides) -> "ExperimentConfig":
        """ copy with the given non-None values replaced """
        data = asdict(self)
        data.update({k: v for k, v in overrides.items() if v is not None})
        return ExperimentConfig(**data)
