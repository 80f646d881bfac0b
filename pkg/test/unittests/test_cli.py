import json
import os
import shutil
import unittest
from os import environ
from os.path import dirname, exists, isdir, join

from kuramoto_workshop.cli import build_parser, main
from kuramoto_workshop.settings import ExperimentConfig


def _header(path: str) -> dict:
    with open(path, encoding="utf-8") as f:
        line = f.readline()
    assert line.startswith("# ")
    return json.loads(line[2:])


class TestCli(unittest.TestCase):
    test_data_path = join(dirname(__file__), "xdg_data")
    output_path = join(dirname(__file__), "cli_output")

    @classmethod
    def setUpClass(cls) -> None:
        environ['XDG_DATA_HOME'] = cls.test_data_path

    @classmethod
    def tearDownClass(cls) -> None:
        data_path = environ.pop('XDG_DATA_HOME')
        for path in (data_path, cls.output_path):
            if isdir(path):
                shutil.rmtree(path)

    def _out(self, name: str) -> str:
        if not isdir(self.output_path):
            os.makedirs(self.output_path)
        return join(self.output_path, name)

    def test_parser(self):
        args = build_parser().parse_args(["simulate", "--m", "5", "--start-equilibrium", "1,2"])
        self.assertEqual(args.command, "simulate")
        self.assertEqual(args.start_equilibrium, [1, 2])
        with self.assertRaises(SystemExit):
            build_parser().parse_args(["simulate", "--m", "5", "--start", "a,b"])

    def test_invalid_configuration(self):
        self.assertEqual(main(["equilibria", "--m", "1"]), 2)
        self.assertEqual(main(["equilibria"]), 2)
        self.assertEqual(main(["cells", "--m", "10"]), 2)
        self.assertEqual(main(["blowup", "--m", "5"]), 2)
        self.assertEqual(main(["equilibria", "--m", "5",
                               "--config", self._out("missing.json")]), 2)

    def test_degenerate_frame(self):
        self.assertEqual(main(["imprint", "--m", "4", "--base", "singular", "--n", "4",
                               "--output", self._out("singular.csv")]), 5)

    def test_equilibria_csv(self):
        path = self._out("equilibria.csv")
        self.assertEqual(main(["equilibria", "--m", "5", "--output", path]), 0)
        header = _header(path)
        self.assertEqual(header["command"], "equilibria")
        self.assertEqual(header["config"]["m"], 5)
        self.assertEqual(header["summary"]["fixed_points"], 16)
        with open(path, encoding="utf-8") as f:
            lines = f.read().splitlines()
        self.assertTrue(lines[1].startswith("subset,kind,index"))
        self.assertEqual(len(lines) - 2, header["summary"]["rows"])

    def test_equilibria_json(self):
        path = self._out("equilibria.json")
        self.assertEqual(main(["equilibria", "--m", "4", "--format", "json",
                               "--output", path]), 0)
        with open(path, encoding="utf-8") as f:
            data = json.load(f)
        self.assertEqual(data["summary"]["fixed_points"], 5)
        self.assertEqual(data["summary"]["singular_points"], 3)
        self.assertEqual(len(data["rows"]), data["summary"]["rows"])

    def test_deterministic(self):
        a, b = self._out("sim_a.csv"), self._out("sim_b.csv")
        for path in (a, b):
            self.assertEqual(main(["simulate", "--m", "4", "--seed", "7",
                                   "--output", path]), 0)
        with open(a, "rb") as fa, open(b, "rb") as fb:
            self.assertEqual(fa.read(), fb.read())

    def test_cells(self):
        path = self._out("cells.csv")
        complex_path = self._out("complex.json")
        self.assertEqual(main(["cells", "--m", "5", "--output", path,
                               "--export-complex", complex_path]), 0)
        summary = _header(path)["summary"]
        self.assertEqual(summary["counts"], [30, 60, 24])
        self.assertEqual(summary["euler_characteristic"], -6)
        self.assertTrue(summary["boundary_squares_zero"])
        self.assertEqual(summary["betti_snf"], [1, 8, 1])
        self.assertTrue(summary["match"])
        self.assertTrue(exists(complex_path))

    def test_imprint_winding(self):
        path = self._out("winding.json")
        self.assertEqual(main(["imprint", "--m", "5", "--winding", "--format", "json",
                               "--output", path]), 0)
        with open(path, encoding="utf-8") as f:
            summary = json.load(f)["summary"]
        self.assertEqual(summary["winding"], 1)
        self.assertEqual(summary["template"], [3, 4, 5])
        self.assertEqual(summary["saddle"], "{1,2}")

    def test_imprint_sample(self):
        path = self._out("sample.csv")
        self.assertEqual(main(["imprint", "--m", "5", "--sample", "--I", "1,2",
                               "--n", "10", "--output", path]), 0)
        header = _header(path)
        self.assertEqual(header["summary"]["kind"], "sphere")
        with open(path, encoding="utf-8") as f:
            rows = f.read().splitlines()[2:]
        self.assertEqual(len(rows), 10)
        self.assertTrue(all(row.endswith("True") for row in rows))
        self.assertEqual(main(["imprint", "--m", "5", "--sample",
                               "--output", path]), 2)

    def test_blowup(self):
        path = self._out("blowup.csv")
        self.assertEqual(main(["blowup", "--m", "4", "--n", "3", "--output", path]), 0)
        summary = _header(path)["summary"]
        self.assertEqual(summary["n"], 3)
        self.assertTrue(summary["ok"])

    def test_blowup_reads_config_n(self):
        config_path = self._out("blowup_config.json")
        ExperimentConfig(m=4, n=3).save(config_path)
        path = self._out("blowup_config.csv")
        self.assertEqual(main(["blowup", "--config", config_path, "--output", path]), 0)
        self.assertEqual(_header(path)["summary"]["n"], 3)
        self.assertEqual(main(["blowup", "--config", config_path, "--n", "2",
                               "--output", path]), 0)
        self.assertEqual(_header(path)["summary"]["n"], 2)

    def test_homotopy(self):
        path = self._out("homotopy.csv")
        self.assertEqual(main(["homotopy", "--m", "5", "--s", "0.1,0.9", "--grid", "8",
                               "--orbits", "3", "--output", path]), 0)
        header = _header(path)
        self.assertEqual(header["config"]["s_grid"], [0.1, 0.9])
        self.assertEqual(header["summary"]["expected_zeros"], 4)
        self.assertTrue(header["summary"]["ok"])
        with open(path, encoding="utf-8") as f:
            lines = f.read().splitlines()
        self.assertTrue(lines[1].startswith("s,zeros,spurious_zeros,failed_seeds,"
                                            "lyapunov_violations"))
        self.assertEqual(len(lines) - 2, 2)

    def test_homotopy_uses_config_grid(self):
        config_path = self._out("homotopy_config.json")
        ExperimentConfig(m=5, s_grid=[0.5]).save(config_path)
        path = self._out("homotopy_rows.json")
        self.assertEqual(main(["homotopy", "--config", config_path, "--grid", "8",
                               "--orbits", "2", "--format", "json", "--output", path]), 0)
        with open(path, encoding="utf-8") as f:
            data = json.load(f)
        self.assertEqual([row["s"] for row in data["rows"]], [0.5])
        self.assertEqual(data["rows"][0]["zeros"], 4)
        self.assertEqual(main(["homotopy", "--m", "5", "--d", "3"]), 2)
        self.assertEqual(main(["homotopy", "--m", "5", "--s", "1.5"]), 2)

    def test_simulate_heteroclinic(self):
        path = self._out("heteroclinic.csv")
        self.assertEqual(main(["simulate", "--m", "5", "--start-equilibrium", "1,2",
                               "--target", "1", "--output", path]), 0)
        summary = _header(path)["summary"]
        self.assertEqual(summary["alpha_limit"], "{1,2}")
        self.assertEqual(summary["limit"], "{1}")
        self.assertLess(summary["confinement"], 1e-8)

    def test_config_round_trip(self):
        config_path = self._out("config.json")
        first, second = self._out("first.csv"), self._out("second.csv")
        self.assertEqual(main(["equilibria", "--m", "6", "--seed", "3",
                               "--save-config", config_path, "--output", first]), 0)
        self.assertTrue(exists(config_path))
        self.assertEqual(main(["equilibria", "--config", config_path,
                               "--output", second]), 0)
        self.assertEqual(_header(second)["config"]["m"], 6)
        self.assertEqual(_header(second)["config"]["seed"], 3)

    def test_default_output(self):
        self.assertEqual(main(["equilibria", "--m", "3"]), 0)
        expected = join(self.test_data_path, "kuramoto_workshop", "results",
                        "equilibria", "equilibria_m3_seed0.csv")
        self.assertTrue(exists(expected))
