#
# This file is part of qcdlab.
#
# This program is free software: you can redistribute it and/or modify
# it under the terms of the GNU General Public License as published by
# the Free Software Foundation, either version 3 of the License, or
# (at your option) any later version.
#
# This program is distributed in the hope that it will be useful,
# but WITHOUT ANY WARRANTY; without even the implied warranty of
# MERCHANTABILITY or FITNESS FOR A PARTICULAR PURPOSE.  See the
# GNU General Public License for more details.
#
# You should have received a copy of the GNU General Public License
# along with this program.  If not, see <https://www.gnu.org/licenses/>.
#
"""Command-line entry point ``qcdlab``.

Every subcommand writes one report: JSON or CSV rows. ``coeff`` and
``constants`` default to plain text, the bare value and the fixed table. Exit status
is 0 whenever the computation finished, whatever its verdict; 2 for usage
errors and inputs outside an operation's domain; 3 when a solver did not
converge or a Monte-Carlo estimate ran out of budget.
"""

__all__ = ("RunConfig", "CommandOutput", "buildParser", "run", "main")

import argparse
import dataclasses
import json
import logging
import os
import sys

import numpy

from .config import Config, Field, FieldValidationError
from .choiceField import ChoiceField
from .configField import ConfigField
from .coefficients import (CoefficientConfig, CurvatureParams, cdCoefficient, maxDiameter, qcdFromMcp,
                           sigma, tau, tauPower)
from .densities import (DEFAULT_MODEL_GRID, DEFAULT_SEED, ClassifyConfig, ConditionSpec, GridDensity,
                        classify, randomQcdDensity)
from .envelope import EnvelopeConfig, cdUpperEnvelope
from .transport1d import (AbsolutelyContinuousMeasure1D, TransportConfig, displacementInterpolation,
                          interpolationWeights, verifyInterpolation)
from .spectral import (SpectralConfig, SpectralProblem, estimateLambdaLs, lambdaPClosedForm, solveLambdaP,
                       theoremGap)
from .spaceConstants import SPACES, TABLE_SPACES, formatConstantsTable, functionalConstants, spaceConstants
from .heisenberg import (H1Config, ccDistance, distance, distortionBetaEstimate, juilletShrinkage,
                         quasiBmEstimate)
from .localization2d import (LocalizationConfig, annulusInstance, extractRays, halfSquareInstance,
                             loadInstance, needleDisintegration, solveL1Ot, verifyNeedles)
from .reporting import dumpReport, provenance, toJsonable
from .errors import ConvergenceError, DomainError, VolumeBudgetError

_log = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_SOLVER = 3


class RunConfig(Config):
    """Configuration of one ``qcdlab`` invocation.

    An override file given with ``--config`` is applied before the command
    line, e.g. ``config.spectral.grid = 2048``.
    """

    seed = Field("Seed of every stochastic computation.", int, default=DEFAULT_SEED)
    format = ChoiceField("Report format.", str,
                         allowed={"json": "JSON document", "csv": "CSV rows",
                                  "table": "plain text (coeff and constants only)"},
                         default="json", optional=False)
    output = Field("Report path; standard output when unset.", str, default=None, optional=True)
    coefficients = ConfigField("Distortion coefficient settings.", CoefficientConfig)
    classify = ConfigField("Grid classification settings.", ClassifyConfig)
    envelope = ConfigField("Upper envelope settings.", EnvelopeConfig)
    transport = ConfigField("One-dimensional transport settings.", TransportConfig)
    spectral = ConfigField("Spectral solver settings.", SpectralConfig)
    h1 = ConfigField("Heisenberg group settings.", H1Config)
    localization = ConfigField("Localization settings.", LocalizationConfig)

    def applySeed(self, seed):
        self.seed = seed
        for section in (self.classify, self.spectral, self.h1):
            section.seed = seed


@dataclasses.dataclass
class CommandOutput:
    """What a subcommand produced: the report, its CSV rows, and for
    table output the rendered text.
    """

    result: object
    section: Config = None
    rows: list = None
    text: str = None


def _floats(text, count=None):
    try:
        values = tuple(float(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError("expected comma-separated numbers, got %r" % text)
    if count is not None and len(values) != count:
        raise argparse.ArgumentTypeError("expected %d numbers, got %r" % (count, text))
    return values


def _point(text):
    return _floats(text, 3)


def _pieces(text, minParts, maxParts):
    pieces = []
    for chunk in text.split(","):
        parts = chunk.split(":")
        if not minParts <= len(parts) <= maxParts:
            raise argparse.ArgumentTypeError("malformed interval %r" % chunk)
        try:
            pieces.append(tuple(float(p) for p in parts))
        except ValueError:
            raise argparse.ArgumentTypeError("malformed interval %r" % chunk)
    return pieces


def _intervals(text):
    if ":" not in text:
        lo, hi = _floats(text, 2)
        return [(lo, hi)]
    return _pieces(text, 2, 2)


def _blocks(text):
    if text.endswith(".json"):
        return text
    return [piece if len(piece) == 3 else piece + (1.0,) for piece in _pieces(text, 2, 3)]


def _readBlocks(value, name):
    """Blocks given inline, or a JSON file ``{"blocks": [[lo, hi[, weight]], ...]}``.

    As inline, a missing weight is 1.
    """
    if not isinstance(value, str):
        return value
    with open(value) as f:
        try:
            blocks = json.load(f)["blocks"]
        except (ValueError, KeyError, TypeError) as err:
            raise DomainError("%s: expected {\"blocks\": [[lo, hi, weight], ...]}: %s" % (value, err))
    if not isinstance(blocks, list):
        raise DomainError("%s.blocks: expected a list" % name)
    result = []
    for i, block in enumerate(blocks):
        try:
            block = tuple(float(v) for v in block)
        except (TypeError, ValueError):
            block = ()
        if len(block) not in (2, 3):
            raise DomainError("%s.blocks[%d]: expected [lo, hi] or [lo, hi, weight]" % (name, i))
        result.append(block if len(block) == 3 else block + (1.0,))
    return result


def _gridShape(text):
    try:
        width, height = (int(v) for v in text.lower().split("x"))
    except ValueError:
        raise argparse.ArgumentTypeError("expected WxH, got %r" % text)
    return width, height


def _loadDensity(path, grid):
    return GridDensity.load(path, modelGrid=grid or DEFAULT_MODEL_GRID)


def _curveRows(x, **columns):
    return [dict(x=float(xi), **{k: float(v[i]) for k, v in columns.items()}) for i, xi in enumerate(x)]


def _coeff(args, run):
    params = CurvatureParams(K=args.K, N=args.N)
    threshold = run.coefficients.taylorThreshold
    if args.kind == "sigma":
        value = sigma(args.t, args.theta, params, threshold)
    elif args.kind == "tau":
        value = tau(args.t, args.theta, params, threshold)
    elif args.kind == "tau-power":
        value = tauPower(args.t, args.theta, params)
    elif args.kind == "cd-coefficient":
        value = cdCoefficient(args.t, args.theta, params, args.Q)
    elif args.kind == "dmax":
        value = maxDiameter(params)
    else:
        if args.n is None:
            raise DomainError("--kind qcd-from-mcp needs --n")
        value = qcdFromMcp(args.N, args.n)
    result = {"kind": args.kind, "value": value, "K": args.K, "N": args.N, "t": args.t,
              "theta": args.theta}
    return CommandOutput(result, run.coefficients, rows=[result], text="%r\n" % float(value))


def _classify(args, run):
    spec = ConditionSpec(kind=args.kind, K=args.K, N=args.N, Q=args.Q, n=args.n)
    if args.random:
        rng = numpy.random.default_rng(run.seed)
        h = randomQcdDensity(rng, args.Q, args.N, M=args.grid or DEFAULT_MODEL_GRID)
    elif args.density is None:
        raise DomainError("classify needs --density or --random")
    else:
        h = _loadDensity(args.density, args.grid)
    report = classify(h, spec, run.classify)
    return CommandOutput(report, run.classify, rows=[toJsonable(report)])


def _envelope(args, run):
    h = _loadDensity(args.density, args.grid)
    if args.grid:
        run.envelope.grid = args.grid
    result = cdUpperEnvelope(h, CurvatureParams(K=args.K, N=args.N), run.envelope)
    x = result.envelope.grid
    return CommandOutput(result, run.envelope,
                         rows=_curveRows(x, h=h(x), envelope=result.envelope.values))


def _interp(args, run):
    params = CurvatureParams(K=args.K, N=args.N)
    reference = _loadDensity(args.reference, args.grid)
    refinement = run.transport.refinement
    mu0 = AbsolutelyContinuousMeasure1D(reference, blocks=_readBlocks(args.mu0, "mu0"), refinement=refinement)
    mu1 = AbsolutelyContinuousMeasure1D(reference, blocks=_readBlocks(args.mu1, "mu1"), refinement=refinement)
    sigma0, sigma1 = interpolationWeights(args.check, params, args.Q)
    report = verifyInterpolation(mu0, mu1, sigma0, sigma1, args.N, config=run.transport)
    result = {"verification": report}
    rows = [toJsonable(report)]
    if args.t is not None:
        path = displacementInterpolation(mu0, mu1, args.t, run.transport)
        result["path"] = path
        rows = _curveRows(path.sourceSamples, map=path.mapSamples, jacobian=path.jacobianSamples)
    return CommandOutput(result, run.transport, rows=rows)


def _lambda(args, run):
    if args.method:
        run.spectral.method = args.method
    h = _loadDensity(args.density, args.grid or run.spectral.grid)
    problem = SpectralProblem(h, p=args.p, omega=args.omega)
    result = solveLambdaP(problem, run.spectral)
    lo, hi = problem.hull
    report = dict(result.toDict(), closed_form=lambdaPClosedForm(args.p, hi - lo), p=args.p)
    if args.Q is not None:
        report["theorem_gap"] = theoremGap(h, args.Q, args.K, args.N, args.p, run.spectral, run.classify)
    return CommandOutput(report, run.spectral, rows=_curveRows(result.grid, u=result.eigenfunction))


def _ls(args, run):
    h = _loadDensity(args.density, args.grid or run.spectral.grid)
    result = estimateLambdaLs(SpectralProblem(h, p="ls", omega=args.omega), run.spectral)
    return CommandOutput(result, run.spectral, rows=_curveRows(result.grid, f=result.eigenfunction))


def _constants(args, run):
    rows = [spaceConstants(space, d=args.d, n=args.n, c=args.c) for space in (args.space or TABLE_SPACES)]
    plain = [dict(row.toDict(), **functionalConstants(row, args.D, args.p)) for row in rows]
    return CommandOutput({"D": args.D, "rows": plain}, rows=plain, text=formatConstantsTable(rows, args.D))


def _h1Dist(args, run):
    if args.method == "newton":
        value = ccDistance(args.target, run.h1)
    else:
        value = distance((0.0, 0.0, 0.0), args.target, run.h1)
    result = {"target": list(args.target), "distance": value, "method": args.method,
              "geometry": run.h1.geometry}
    return CommandOutput(result, run.h1, rows=[result])


def _h1Bm(args, run):
    report = quasiBmEstimate(args.centerA, args.radiusA, args.centerB, args.radiusB, args.t, args.samples,
                             run.h1)
    return CommandOutput(report, run.h1, rows=[toJsonable(report)])


def _h1Shrink(args, run):
    reports = [juilletShrinkage(radius, args.height, args.t, args.samples, run.h1) for radius in args.radius]
    rows = [toJsonable(report) for report in reports]
    return CommandOutput({"reports": reports}, run.h1, rows=rows)


def _h1Beta(args, run):
    report = distortionBetaEstimate(args.x, args.y, args.t, args.r, args.samples, run.h1)
    return CommandOutput(report, run.h1, rows=[toJsonable(report)])


def _writeRayCsv(directory, decomposition):
    os.makedirs(directory, exist_ok=True)
    for index, needle in enumerate(decomposition.needles):
        rows = _curveRows(needle.grid, h=needle.values, g=needle.gValues)
        with open(os.path.join(directory, "ray_%03d.csv" % index), "w", newline="") as f:
            dumpReport(rows, f, "csv")


def _localize(args, run):
    width, height = args.grid if args.grid else (None, None)
    if args.g is not None:
        instance = loadInstance(args.g, width, height)
    elif args.instance == "annulus":
        instance = annulusInstance(width or 64, height or 64)
    else:
        instance = halfSquareInstance(width or 64, height or 64)
    config = run.localization
    if args.tube is not None:
        config.tubeWidth = args.tube
    solution = solveL1Ot(instance, config)
    rays = extractRays(solution, config)
    decomposition = needleDisintegration(instance, solution, rays, config)
    report = verifyNeedles(decomposition, args.n, config, run.classify)
    if args.ray_csv:
        _writeRayCsv(args.ray_csv, decomposition)
    summary = decomposition.toDict()
    del summary["needles"]
    rows = [dict(record, length=needle.ray.length, flow=needle.ray.flow)
            for record, needle in zip(toJsonable(report.records), decomposition.needles)]
    return CommandOutput({"decomposition": summary, "verification": report}, config, rows=rows)


def _commonOptions(default):
    """Global options, accepted before or after the subcommand.
    """
    parser = argparse.ArgumentParser(add_help=False)
    parser.add_argument("--seed", type=int, default=default, help="random seed (default %d)" % DEFAULT_SEED)
    parser.add_argument("--format", choices=("json", "csv", "table"), default=default,
                        help="report format")
    parser.add_argument("--output", default=default, help="report path (default standard output)")
    parser.add_argument("--config", default=default, help="Python override file for the run config")
    parser.add_argument("--log-level", dest="logLevel", default=default,
                        choices=("DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"),
                        help="log level on standard error (default WARNING)")
    return parser


def _addCurvature(parser, K=0.0, N=None):
    parser.add_argument("--K", type=float, default=K, help="curvature lower bound")
    parser.add_argument("--N", type=float, default=N, required=N is None, help="dimension upper bound")


def buildParser():
    """Return the `argparse.ArgumentParser` of ``qcdlab``.
    """
    parser = argparse.ArgumentParser(prog="qcdlab", parents=[_commonOptions(None)],
                                     description="Numerical experiments on quasi curvature-dimension "
                                                 "conditions.")
    common = _commonOptions(argparse.SUPPRESS)
    commands = parser.add_subparsers(dest="command", metavar="COMMAND")
    commands.required = True

    p = commands.add_parser("coeff", parents=[common], help="distortion coefficients")
    p.add_argument("--kind", required=True,
                   choices=("sigma", "tau", "tau-power", "cd-coefficient", "dmax", "qcd-from-mcp"))
    _addCurvature(p)
    p.add_argument("--t", type=float, default=0.5)
    p.add_argument("--theta", type=float, default=1.0)
    p.add_argument("--Q", type=float, default=1.0)
    p.add_argument("--n", type=float, default=None)
    p.set_defaults(handler=_coeff)

    p = commands.add_parser("classify", parents=[common], help="check a density against a condition")
    p.add_argument("--density", help="density JSON file")
    p.add_argument("--random", action="store_true", help="classify a seeded random QCD(Q,0,N) density")
    p.add_argument("--kind", default="cd", choices=("cd", "mcp", "qcd", "cgtd"))
    _addCurvature(p)
    p.add_argument("--Q", type=float, default=1.0)
    p.add_argument("--n", type=float, default=None)
    p.add_argument("--grid", type=int, default=None, help="samples of model densities")
    p.set_defaults(handler=_classify)

    p = commands.add_parser("envelope", parents=[common], help="CD(K,N) upper envelope and its order Q")
    p.add_argument("--density", required=True)
    _addCurvature(p)
    p.add_argument("--grid", type=int, default=None)
    p.set_defaults(handler=_envelope)

    p = commands.add_parser("interp", parents=[common], help="verify the interpolation inequality")
    p.add_argument("--reference", required=True, help="reference density JSON file")
    p.add_argument("--mu0", type=_blocks, required=True, help="blocks lo:hi[:weight],...")
    p.add_argument("--mu1", type=_blocks, required=True, help="blocks lo:hi[:weight],...")
    p.add_argument("--check", default="cd", choices=("cd", "qcd", "mcp"),
                   help="condition whose interpolation weights are checked")
    _addCurvature(p)
    p.add_argument("--Q", type=float, default=1.0)
    p.add_argument("--t", type=float, default=None, help="also report the interpolant at this time")
    p.add_argument("--grid", type=int, default=None)
    p.set_defaults(handler=_interp)

    p = commands.add_parser("lambda", parents=[common], help="p-spectral gap")
    p.add_argument("--density", required=True)
    p.add_argument("--p", type=float, default=2.0)
    p.add_argument("--omega", type=_intervals, default=None, help="intervals a:b,...")
    p.add_argument("--method", choices=("auto", "fd-eig", "shooting"), default=None)
    p.add_argument("--grid", type=int, default=None)
    p.add_argument("--Q", type=float, default=None, help="compare with the QCD(Q,K,N) lower bound")
    _addCurvature(p, N=2.0)
    p.set_defaults(handler=_lambda)

    p = commands.add_parser("ls", parents=[common], help="log-Sobolev constant")
    p.add_argument("--density", required=True)
    p.add_argument("--omega", type=_intervals, default=None)
    p.add_argument("--grid", type=int, default=None)
    p.set_defaults(handler=_ls)

    p = commands.add_parser("constants", parents=[common], help="constants of sub-Riemannian spaces")
    p.add_argument("--space", action="append", choices=tuple(SPACES), default=None)
    p.add_argument("--D", type=float, default=1.0, help="diameter")
    p.add_argument("--p", type=float, default=2.0)
    p.add_argument("--d", type=int, default=1)
    p.add_argument("--n", type=int, default=None, help="dimension of a corank-1 Carnot group")
    p.add_argument("--c", type=int, default=1, help="corank of an H-type foliation")
    p.set_defaults(handler=_constants)

    h1 = commands.add_parser("h1", help="Heisenberg group experiments")
    h1Commands = h1.add_subparsers(dest="h1Command", metavar="H1COMMAND")
    h1Commands.required = True
    h1Common = argparse.ArgumentParser(add_help=False, parents=[common])
    h1Common.add_argument("--euclidean", action="store_true", help="use flat R^3 instead")

    p = h1Commands.add_parser("dist", parents=[h1Common], help="distance from the identity")
    p.add_argument("--target", type=_point, required=True, help="x,y,t")
    p.add_argument("--method", choices=("newton", "bisection"), default="newton")
    p.set_defaults(handler=_h1Dist)

    p = h1Commands.add_parser("bm", parents=[h1Common], help="Brunn-Minkowski experiment on two balls")
    p.add_argument("--centerA", type=_point, required=True)
    p.add_argument("--radiusA", type=float, required=True)
    p.add_argument("--centerB", type=_point, required=True)
    p.add_argument("--radiusB", type=float, required=True)
    p.add_argument("--t", type=float, default=0.5)
    p.add_argument("--samples", type=int, default=100000)
    p.set_defaults(handler=_h1Bm)

    p = h1Commands.add_parser("shrink", parents=[h1Common], help="shrinking midpoint sets")
    p.add_argument("--radius", type=float, nargs="+", required=True)
    p.add_argument("--height", type=float, default=1.0)
    p.add_argument("--t", type=float, default=0.5)
    p.add_argument("--samples", type=int, default=100000)
    p.set_defaults(handler=_h1Shrink)

    p = h1Commands.add_parser("beta", parents=[h1Common], help="volume distortion estimate")
    p.add_argument("--x", type=_point, required=True)
    p.add_argument("--y", type=_point, required=True)
    p.add_argument("--t", type=float, required=True)
    p.add_argument("--r", type=float, default=0.05)
    p.add_argument("--samples", type=int, default=20000)
    p.set_defaults(handler=_h1Beta)

    p = commands.add_parser("localize", parents=[common], help="needle decomposition on a planar grid")
    p.add_argument("--grid", type=_gridShape, default=None, help="WxH")
    p.add_argument("--g", default=None, help="CSV of g values, first row at the bottom")
    p.add_argument("--instance", choices=("half-square", "annulus"), default="half-square")
    p.add_argument("--tube", type=float, default=None)
    p.add_argument("--n", type=float, default=2.0, help="ambient dimension of the needle check")
    p.add_argument("--ray-csv", dest="ray_csv", default=None, help="directory for per-ray CSV densities")
    p.set_defaults(handler=_localize)
    return parser


def _configure(args):
    run = RunConfig()
    if args.config is not None:
        try:
            run.load(args.config)
        except (AttributeError, KeyError, SyntaxError, NameError) as err:
            raise DomainError("%s: %s" % (args.config, err))
    if args.seed is not None:
        run.applySeed(args.seed)
    else:
        run.applySeed(run.seed)
    if args.format is not None:
        run.format = args.format
    elif args.command in ("coeff", "constants"):
        run.format = "table"
    if args.output is not None:
        run.output = args.output
    if getattr(args, "euclidean", False):
        run.h1.geometry = "euclidean"
    run.validate()
    return run


def _write(output, run, command, stream):
    if run.format == "table":
        if output.text is None:
            raise DomainError("--format table is only available for coeff and constants")
        stream.write(output.text)
    elif run.format == "csv":
        if output.rows is None:
            raise DomainError("%s has no CSV form" % command)
        dumpReport(output.rows, stream, "csv")
    else:
        report = {"command": command, "result": output.result,
                  "provenance": provenance(output.section, seed=run.seed)}
        dumpReport(report, stream, "json")


def run(argv=None, stdout=None):
    """Run ``qcdlab`` with the given arguments.

    Parameters
    ----------
    argv : `list` of `str`, optional
        Arguments without the program name; default ``sys.argv[1:]``.
    stdout : file-like, optional
        Stream for the report when ``--output`` is not given.

    Returns
    -------
    status : `int`
        0 on success, 2 for usage and domain errors, 3 for solver failures.
    """
    parser = buildParser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exit:
        return EXIT_OK if exit.code in (None, 0) else EXIT_USAGE
    logging.basicConfig(level=getattr(logging, args.logLevel or "WARNING"), stream=sys.stderr,
                        format="%(levelname)s %(name)s: %(message)s")
    command = args.command if args.command != "h1" else "h1 %s" % args.h1Command
    try:
        config = _configure(args)
        output = args.handler(args, config)
        if config.output is not None:
            with open(config.output, "w", newline="") as stream:
                _write(output, config, command, stream)
        else:
            _write(output, config, command, stdout if stdout is not None else sys.stdout)
    except (DomainError, FieldValidationError, OSError) as err:
        sys.stderr.write("qcdlab %s: error: %s\n" % (command, err))
        return EXIT_USAGE
    except (ConvergenceError, VolumeBudgetError) as err:
        sys.stderr.write("qcdlab %s: solver failure: %s\n" % (command, err))
        return EXIT_SOLVER
    return EXIT_OK


def main():
    sys.exit(run())
