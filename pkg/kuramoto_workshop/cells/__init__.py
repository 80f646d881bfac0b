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
from kuramoto_workshop.cells.sentences import ChainComplex, Sentence, border, \
    enumerate_cells, enumerate_sentences, euler_characteristic
from kuramoto_workshop.cells.homology import BettiTable, betti_formula, \
    elementary_divisors, homology_snf, xgcd
from kuramoto_workshop.cells.realization import NormalFrame, normal_frame, \
    realize_cell, vmax_membership
