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
from typing import Optional


class KuramotoWorkshopError(Exception):
    """ base class for every failure the command line reports """
    exit_code = 1


class InvalidConfiguration(KuramotoWorkshopError, ValueError):
    """ experiment parameters rejected before any computation starts """
    exit_code = 2


class IntegrationError(KuramotoWorkshopError, RuntimeError):
    """ the step-size controller could not meet the requested tolerance """
    exit_code = 3

    def __init__(self, message: str, trace: Optional[object] = None):
        super().__init__(message)
        self.trace = trace


class ConvergenceError(IntegrationError):
    """ max integration time reached without settling on a limit point """


class SingularApproachError(IntegrationError):
    """ w/|grad V|^2 diverged, the orbit is running into a singular point """


class RealizationError(KuramotoWorkshopError, RuntimeError):
    """ Newton iteration failed to place a point on the requested set """
    exit_code = 3


class BoundaryError(KuramotoWorkshopError, ArithmeticError):
    """ the border operator does not square to zero """
    exit_code = 4


class DegenerateFrameError(KuramotoWorkshopError, ValueError):
    """ Cos and Sin are (numerically) dependent, no normal plane exists """
    exit_code = 5
