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

import os
from os.path import isdir, join
from typing import TextIO

from ovos_config.locations import get_xdg_data_save_path
from ovos_utils.log import LOG

APP_FOLDER = "kuramoto_workshop"


class ResultsFileSystem:
    def __init__(self, command: str, root: str = None):
        """
        Results directory of one command.
        @param command: name of the command writing results, e.g. 'cells'
        @param root: base directory, defaults to the XDG data location
        """
        self.path = self.__init_path(command, root)

    @staticmethod
    def __init_path(command: str, root: str = None) -> str:
        """
        Create the results directory on demand.
        @param command: directory basename
        @param root: optional explicit base directory
        @return: validated existing path
        """
        if not isinstance(command, str) or len(command) == 0:
            raise ValueError("command must be a non empty string")
        base = root or get_xdg_data_save_path(APP_FOLDER)
        path = join(base, "results", command)
        if not isdir(path):
            LOG.debug(f"creating results directory {path}")
            os.makedirs(path)
        return path

    def open(self, filename: str, mode: str) -> TextIO:
        """
        Open a file in this results directory.
        @param filename: name relative to the results directory
        @param mode: mode to open the file with (i.e. `r`, `w`)
        @return: TextIO for the file
        """
        # newline="" keeps CSV output byte-identical across platforms
        return open(join(self.path, filename), mode, encoding="utf-8", newline="")

    def exists(self, filename: str) -> bool:
        return os.path.exists(join(self.path, filename))

    def file_path(self, filename: str) -> str:
        return join(self.path, filename)
