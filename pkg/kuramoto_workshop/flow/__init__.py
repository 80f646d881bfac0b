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
from kuramoto_workshop.flow.integrator import Direction, IntegrationOptions, \
    OrbitTrace, PersistenceReport, TerminalKind, converge, integrate, \
    omega_limit, perfect_morse_field, perfect_morse_potential, \
    persistence_check, random_quotient_point
from kuramoto_workshop.flow.auxiliary import RetractionDiagnostics, \
    alpha_limit_retraction, auxiliary_field, curve_length, flow_auxiliary, \
    hessian_bound_violation, level_set_point, lipschitz_constant, ratio, \
    ratio_closed_form, ratio_comparison, ratio_floor, \
    ratio_bound
from kuramoto_workshop.flow.templates import HeteroclinicResult, \
    HomotopyField, HomotopyReport, Partition, ReducedField, find_heteroclinic, \
    homotopy_analysis, skew_reduce, unstable_subspace
