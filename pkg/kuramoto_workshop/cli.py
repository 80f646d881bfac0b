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
kuramoto-workshop command line.

USAGE: kuramoto-workshop {equilibria,simulate,cells,imprint,blowup,homotopy} --m M [options]

Every run writes one CSV or JSON file. CSV files start with a '#' line
holding the resolved configuration as JSON; JSON files carry it under
"config". Identical configuration and seed give byte-identical files.
"""
import argparse
import io
import json
import sys
from collections import Counter
from typing import List, Optional

import numpy as np
import pandas as pd
from ovos_utils.log import LOG

from kuramoto_workshop.blowup import blowup_check
from kuramoto_workshop.cells import betti_formula, enumerate_cells, \
    euler_characteristic, homology_snf
from kuramoto_workshop.equilibria import EquilibriumRecord, \
    enumerate_equilibria, equilibrium, fixed_point_count, singular_point_count
from kuramoto_workshop.exceptions import InvalidConfiguration, \
    KuramotoWorkshopError
from kuramoto_workshop.filesystem import ResultsFileSystem
from kuramoto_workshop.flow import HomotopyField, IntegrationOptions, OrbitTrace, \
    converge, find_heteroclinic, homotopy_analysis, random_quotient_point
from kuramoto_workshop.imprints import ImprintSpec, alpha_limit, \
    imprint_membership, imprint_sample, normal_circle_experiment, \
    saddle_circle, winding_number
from kuramoto_workshop.model import ModelParams, PhasePoint
from kuramoto_workshop.settings import SCHEMA_VERSION, ExperimentConfig
from kuramoto_workshop.version import VERSION_STR

CELLS_MAX_M = 9
CIRCLE_POINTS = 360
BLOWUP_DIRECTIONS = 20


def _numbers(text: str, cast=float) -> List:
    try:
        return [cast(x) for x in text.split(",") if x.strip()]
    except ValueError as e:
        raise argparse.ArgumentTypeError(f"expected comma separated numbers, got {text!r}") from e


def _integers(text: str) -> List[int]:
    return _numbers(text, int)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--m", type=int, help="number of oscillators")
    common.add_argument("--seed", type=int, help="PCG64 seed of every random draw")
    common.add_argument("--config", help="load parameters from this JSON file")
    common.add_argument("--save-config", help="write the resolved parameters here")
    common.add_argument("--output", help="output file, default under the XDG data dir")
    common.add_argument("--format", dest="output_format", choices=("csv", "json"))
    common.add_argument("--rtol", type=float)
    common.add_argument("--atol", type=float)
    common.add_argument("--method", choices=("RK45", "DOP853", "RK23"))
    common.add_argument("--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="kuramoto-workshop",
                                     description="Experiments on the all-to-all "
                                                 "Kuramoto gradient flow")
    parser.add_argument("--version", action="version", version=VERSION_STR)
    commands = parser.add_subparsers(dest="command", required=True)

    eq = commands.add_parser("equilibria", parents=[common],
                             help="table of all critical diagonals")
    eq.add_argument("--no-singular", action="store_true",
                    help="leave out the singular points of the maximum set")

    sim = commands.add_parser("simulate", parents=[common],
                              help="integrate one orbit of the quotient flow")
    start = sim.add_mutually_exclusive_group()
    start.add_argument("--start", type=_numbers, help="initial angles θ_1..θ_m")
    start.add_argument("--start-equilibrium", type=_integers,
                       help="one-based subset I of the saddle to start from")
    sim.add_argument("--offset-unstable", type=float, default=1e-5,
                     help="displacement along the slowest unstable direction")
    sim.add_argument("--target", type=_integers,
                     help="one-based subset J ⊂ I: trace the saddle connection p_I -> p_J")
    sim.add_argument("--t-span", type=float)
    sim.add_argument("--omega", type=_numbers, help="natural frequencies ω_1..ω_m")
    sim.add_argument("--coupling-jitter", type=float,
                     help="draw a symmetric coupling with |a_ij - 1| <= jitter")

    cells = commands.add_parser("cells", parents=[common],
                                help="cell complex and homology of the maximum set")
    cells.add_argument("--export-complex", help="also write the complex as JSON here")

    imp = commands.add_parser("imprint", parents=[common],
                              help="normal circles, imprint samples and winding numbers")
    imp.add_argument("--base", default="roots-of-unity",
                     help="roots-of-unity, singular, or comma separated angles")
    imp.add_argument("--radius", type=float)
    imp.add_argument("--n", type=int)
    imp.add_argument("--crossing-level", type=float)
    imp.add_argument("--winding", action="store_true",
                     help="winding number of a saddle circle around a template")
    imp.add_argument("--I", dest="subset", type=_integers,
                     help="one-based template positions (--winding) or saddle subset (--sample)")
    imp.add_argument("--follow", action="store_true",
                     help="with --winding, also wind the α-limit curve on the maximum set")
    imp.add_argument("--sample", action="store_true",
                     help="sample the imprint of the saddle p_I")

    blow = commands.add_parser("blowup", parents=[common],
                               help="tangent directions at a singular point (even m)")
    blow.add_argument("--n", type=int)

    hom = commands.add_parser("homotopy", parents=[common],
                              help="zeros, Lyapunov function and corner eigenspaces "
                                   "of the homotopy F_s on a template")
    hom.add_argument("--d", type=int, default=2, help="template dimension, d < m/2")
    hom.add_argument("--s", dest="s_grid", type=_numbers,
                     help="comma separated homotopy parameters in [0, 1]")
    hom.add_argument("--grid", type=int, default=20,
                     help="Newton seeds per axis (d <= 2) or grid² random seeds")
    hom.add_argument("--orbits", type=int, default=50,
                     help="orbits sampled per s for the Lyapunov check")
    return parser


def resolve_config(args: argparse.Namespace) -> ExperimentConfig:
    """ file values first, then every flag that was given """
    config = ExperimentConfig.load(args.config) if args.config else ExperimentConfig()
    overrides = {key: getattr(args, key, None) for key in
                 ("m", "seed", "rtol", "atol", "method", "output", "output_format",
                  "radius", "n", "crossing_level", "omega", "coupling_jitter",
                  "s_grid")}
    overrides["t_span"] = getattr(args, "t_span", None)
    if args.m is None and not args.config:
        raise InvalidConfiguration("--m is required")
    config = config.updated(**overrides)
    if args.save_config:
        config.save(args.save_config)
    return config


def _options(config: ExperimentConfig) -> IntegrationOptions:
    return IntegrationOptions(rtol=config.rtol, atol=config.atol, method=config.method)


def _header(config: ExperimentConfig, command: str, summary: dict) -> dict:
    return {"schema_version": SCHEMA_VERSION, "command": command,
            "config": config.to_dict(), "summary": summary}


def _write(config: ExperimentConfig, command: str, summary: dict,
           table: Optional[pd.DataFrame] = None,
           trace: Optional[OrbitTrace] = None) -> str:
    """ serialize and write; JSON output ignores the table layout """
    header = _header(config, command, summary)
    if config.output_format == "json":
        if table is not None:
            header["rows"] = json.loads(table.to_json(orient="records", double_precision=12))
        if trace is not None:
            header["rows"] = json.loads(trace.to_frame().to_json(orient="records",
                                                                 double_precision=12))
        text = json.dumps(header, sort_keys=True, indent=2, ensure_ascii=False) + "\n"
    else:
        stream = io.StringIO()
        if trace is not None:
            trace.to_csv(stream, header)
        else:
            stream.write("# " + json.dumps(header, sort_keys=True, ensure_ascii=False) + "\n")
            if table is not None:
                table.to_csv(stream, index=False, float_format="%.12g")
        text = stream.getvalue()

    if config.output:
        path = config.output
        with open(path, "w", encoding="utf-8", newline="") as f:
            f.write(text)
    else:
        fs = ResultsFileSystem(command)
        filename = f"{command}_m{config.m}_seed{config.seed}.{config.output_format}"
        with fs.open(filename, "w") as f:
            f.write(text)
        path = fs.file_path(filename)
    LOG.info(f"results written to {path}")
    return path


def cmd_equilibria(config: ExperimentConfig, args: argparse.Namespace) -> str:
    records = enumerate_equilibria(config.m, include_singular=not args.no_singular)
    table = pd.DataFrame([{"subset": record.label,
                           "kind": record.kind.value,
                           "index": record.index,
                           "potential": record.potential,
                           "eigenvalues": " ".join(f"{v:g}" for v in sorted(record.eigenvalues))}
                          for record in records])
    by_index = Counter(r.index for r in records if r.kind.value != "singular-max")
    summary = {"fixed_points": fixed_point_count(config.m),
               "singular_points": singular_point_count(config.m),
               "rows": len(records),
               "by_index": {str(k): v for k, v in sorted(by_index.items())}}
    return _write(config, "equilibria", summary, table=table)


def _params(config: ExperimentConfig) -> Optional[ModelParams]:
    params = ModelParams(config.m, config.omega)
    if config.coupling_jitter:
        params = params.perturbed(config.rng(), omega_scale=0.0,
                                  coupling_scale=config.coupling_jitter)
    return None if params.is_standard else params


def _terminal_kind(limit) -> str:
    if isinstance(limit, EquilibriumRecord):
        return limit.kind.value
    if isinstance(limit, PhasePoint):
        return "maximum-set"
    return "locked"


def cmd_simulate(config: ExperimentConfig, args: argparse.Namespace) -> str:
    opts = _options(config)
    params = _params(config)
    m = config.m
    summary = {}
    if args.start_equilibrium and args.target:
        subset_i = frozenset(i - 1 for i in args.start_equilibrium)
        subset_j = frozenset(i - 1 for i in args.target)
        result = find_heteroclinic(subset_i, subset_j, m, opts, delta=args.offset_unstable,
                                   t_span=config.t_span)
        trace = result.branches[0]
        summary.update({"terminal": result.target.kind.value,
                        "alpha_limit": result.source.label,
                        "limit": result.target.label,
                        "confinement": result.confinement})
    else:
        if args.start is not None:
            if len(args.start) != m:
                raise InvalidConfiguration(f"--start has {len(args.start)} angles, expected {m}")
            start = PhasePoint(args.start)
        elif args.start_equilibrium:
            record = equilibrium(frozenset(i - 1 for i in args.start_equilibrium), m)
            unstable = sorted((value, i) for i, (value, _) in enumerate(record.eigenpairs)
                              if value > 0)
            if not unstable:
                raise InvalidConfiguration(f"{record.label} has no unstable direction")
            vector = record.eigenpairs[unstable[0][1]][1]
            start = PhasePoint(record.exemplar.angles
                               + args.offset_unstable * vector / np.linalg.norm(vector))
            summary["alpha_limit"] = record.label
        else:
            start = random_quotient_point(m, config.rng())
        trace = converge(start, params, opts, t_span=config.t_span)
        limit = trace.limit
        summary.update({"terminal": _terminal_kind(limit),
                        "limit": getattr(limit, "label", None) or repr(limit)})
    summary.update({"steps": len(trace) - 1,
                    "final_potential": float(trace.potentials[-1]),
                    "final_order_parameter": float(trace.order_parameters[-1])})
    LOG.info(f"simulation ended: {summary['terminal']} {summary['limit']}")
    return _write(config, "simulate", summary, trace=trace)


def cmd_cells(config: ExperimentConfig, args: argparse.Namespace) -> str:
    if not 3 <= config.m <= CELLS_MAX_M:
        raise InvalidConfiguration(f"cells enumerates 3 <= m <= {CELLS_MAX_M}, "
                                   f"got m={config.m}")
    complex_ = enumerate_cells(config.m)
    squares_zero = complex_.boundary_squares_zero()
    table = homology_snf(complex_, check=True)
    formula = [betti_formula(config.m, k) for k in range(len(table.betti))]
    summary = {"counts": complex_.counts(),
               "euler_characteristic": euler_characteristic(complex_),
               "boundary_squares_zero": squares_zero,
               "betti_snf": table.betti,
               "betti_formula": formula,
               "match": table.betti == formula,
               "torsion": {str(k): v for k, v in table.torsion.items() if v}}
    if args.export_complex:
        with open(args.export_complex, "w", encoding="utf-8") as f:
            f.write(complex_.to_json(sort_keys=True, indent=2))
    return _write(config, "cells", summary, table=table.to_frame())


def _base_point(text: str, m: int) -> PhasePoint:
    if text == "roots-of-unity":
        return PhasePoint.roots_of_unity(m)
    if text == "singular":
        if m % 2:
            raise InvalidConfiguration(f"the maximum set is smooth for odd m={m}")
        return equilibrium(range(m // 2), m).exemplar
    angles = _numbers(text)
    if len(angles) != m:
        raise InvalidConfiguration(f"--base has {len(angles)} angles, expected {m}")
    return PhasePoint(angles)


def cmd_imprint(config: ExperimentConfig, args: argparse.Namespace) -> str:
    m = config.m
    if args.winding:
        # the template is the set of positions outside I
        template = [i - 1 for i in (args.subset or range(m - 2, m + 1))]
        spec = ImprintSpec(frozenset(range(m)) - frozenset(template), m)
        circle = saddle_circle(spec, delta=config.radius,
                               n=max(config.count(CIRCLE_POINTS), 16))
        summary = {"template": [i + 1 for i in sorted(template)],
                   "saddle": spec.record.label,
                   "winding": winding_number(circle, template)}
        if args.follow:
            limits = [alpha_limit(p, config.epsilon, _options(config)) for p in circle]
            if any(p is None for p in limits):
                raise InvalidConfiguration("some α-limits were not reached, "
                                           "increase --radius or t_span")
            summary["winding_alpha_limits"] = winding_number(limits, template)
        return _write(config, "imprint", summary)
    if args.sample:
        if not args.subset:
            raise InvalidConfiguration("--sample needs --I")
        spec = ImprintSpec.from_labels(args.subset, m)
        points = imprint_sample(spec, config.count(CIRCLE_POINTS), config.rng())
        table = pd.DataFrame([dict({f"theta{i + 1}": v for i, v in enumerate(p.angles)},
                                   member=imprint_membership(spec, p)) for p in points])
        summary = {"saddle": spec.record.label, "kind": spec.expected_kind.value,
                   "dimension": spec.expected_dimension, "pinch_points": spec.pinch_count}
        return _write(config, "imprint", summary, table=table)

    base = _base_point(args.base, m)
    try:
        table = normal_circle_experiment(base, config.radius, config.count(CIRCLE_POINTS),
                                         config.crossing_level, _options(config))
    except KuramotoWorkshopError:
        raise
    except ValueError as e:
        raise InvalidConfiguration(str(e)) from e
    summary = {"base": base.angles.tolist(),
               "crossing_level": table.attrs["crossing_level"],
               "crossings": int(table["t_cross"].notna().sum())}
    if "alpha_distance" in table:
        summary["max_alpha_distance"] = float(table["alpha_distance"].max())
    return _write(config, "imprint", summary, table=table)


def cmd_blowup(config: ExperimentConfig, args: argparse.Namespace) -> str:
    if config.m < 4 or config.m % 2:
        raise InvalidConfiguration(f"blowup needs an even m >= 4, got {config.m}")
    report = blowup_check(config.m, config.count(BLOWUP_DIRECTIONS), config.rng())
    summary = report.to_dict()
    tangents = pd.DataFrame(summary.pop("tangents"),
                            columns=[f"u{i + 1}" for i in range(config.m)])
    summary["ok"] = report.ok()
    return _write(config, "blowup", summary, table=tangents)


def cmd_homotopy(config: ExperimentConfig, args: argparse.Namespace) -> str:
    if args.d < 1 or 2 * args.d >= config.m:
        raise InvalidConfiguration(f"homotopy needs 1 <= d < m/2, got d={args.d}, m={config.m}")
    if args.grid < 1 or args.orbits < 0:
        raise InvalidConfiguration("--grid must be positive and --orbits non-negative")
    rng = config.rng()
    rows = []
    for s in config.s_grid:
        report = homotopy_analysis(HomotopyField(args.d, config.m, s), grid=args.grid,
                                   orbits=args.orbits, rng=rng, opts=_options(config))
        row = {"s": s, "zeros": len(report.zeros),
               "spurious_zeros": len(report.spurious_zeros),
               "failed_seeds": report.failed_seeds,
               "lyapunov_violations": report.lyapunov_violations}
        for k in sorted(report.eigenspace_dims):
            row[f"unstable_dim_{k}"] = report.eigenspace_dims[k]
            row[f"unstable_gap_{k}"] = report.eigenspace_gaps[k]
        row["ok"] = report.ok and len(report.zeros) == 2 ** args.d
        rows.append(row)
    table = pd.DataFrame(rows)
    summary = {"d": args.d, "grid": args.grid, "orbits": args.orbits,
               "expected_zeros": 2 ** args.d, "ok": bool(table["ok"].all())}
    if not summary["ok"]:
        LOG.warning(f"homotopy check failed for s in "
                    f"{table.loc[~table['ok'], 's'].tolist()}")
    return _write(config, "homotopy", summary, table=table)


COMMANDS = {"equilibria": cmd_equilibria, "simulate": cmd_simulate,
            "cells": cmd_cells, "imprint": cmd_imprint, "blowup": cmd_blowup,
            "homotopy": cmd_homotopy}


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    LOG.set_level("DEBUG" if args.verbose else "INFO")
    try:
        config = resolve_config(args)
        COMMANDS[args.command](config, args)
    except KuramotoWorkshopError as e:
        LOG.error(f"{type(e).__name__}: {e}")
        print(f"error: {e}", file=sys.stderr)
        return e.exit_code
    except ValueError as e:
        LOG.error(str(e))
        print(f"error: {e}", file=sys.stderr)
        return 2
    return 0


def _launch_script():
    """
    Console script entrypoint
    USAGE: kuramoto-workshop {command} --m M [options]
    """
    raise SystemExit(main())
