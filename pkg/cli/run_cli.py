"""
Command-line run driver.

The pipeline is: ingest constraint data → build the initial state → check
compatibility → evolve with monitors at the configured cadence → write the
monitor stream, checkpoints and a final report. Exit codes are 0 on
success, 1 on a fatal monitor, a failed strict compatibility check or any
unexpected failure inside the numerics, and 2 on usage, configuration or
I/O errors.
"""
import argparse
import json
import logging
import os
from dataclasses import dataclass, field, fields, replace
from typing import Any, Dict, List, Optional, Sequence

import numpy as np
from dotenv import load_dotenv
from rich.console import Console
from rich.logging import RichHandler
from rich.table import Table

from config.run_config import MODES, RunConfig, RunConfigBuilder, StepConfig
from core.config_manager import ConfigurationError
from core.error_handler import ErrorHandler, NonfiniteState, SimulationError
from core.structured_logger import StructuredLogger
from diagnostics.identities import identity_audit
from diagnostics.refinement import ConvergenceTable, convergence_table, diverging_quantities, refinement_levels
from diagnostics.report import REPORT_SCHEMA_VERSION, MonitorReport, MonitorSuite
from evolution.checkpoint import save_checkpoint
from evolution.state import EvolutionState
from evolution.stepper import Stepper
from grid.domain import DomainGrid
from initial_data.compatibility import check_compatibility
from initial_data.io import load_constraint_data
from initial_data.pipeline import build_initial_state
from initial_data.presets import preset_data
from metrics.monitor_stream import MonitorStream, jsonable
from migrations.schema_versioner import SchemaVersioner

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FATAL = 1
EXIT_USAGE = 2

MONITOR_SCHEMA = 'monitor_record'
CHECKPOINT_SUFFIX = '.hpfc'

USAGE_ERRORS = (ConfigurationError, OSError)

# compatibility checks on vanishing quantities, judged across refinement levels
VANISHING_PREFIXES = ('fluid_', 'geometry_')


def is_usage_error(exc: Exception, stage: str) -> bool:
    """
    Usage errors (exit 2) are configuration, argument and I/O problems:
    non-fatal solver errors, configuration and OS errors, and value errors
    raised while the constraint data are read. Anything else that escapes
    the numerics is fatal (exit 1).
    """
    if isinstance(exc, SimulationError):
        return not exc.fatal_monitor
    if isinstance(exc, USAGE_ERRORS):
        return True
    return stage == 'ingest' and isinstance(exc, (ValueError, KeyError))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog='hardphase',
        description='Evolve the free-boundary hard-phase fluid in a Lagrangian frame formulation.'
    )
    parser.add_argument('--config', metavar='PATH', help='YAML or JSON run configuration')
    parser.add_argument('--mode', choices=MODES)
    parser.add_argument('--preset', metavar='NAME', help='static, pressure-ball, compatible-ball, spherical-ball or gauge-check')
    parser.add_argument('--input', metavar='PATH', help='constraint data container or table')
    parser.add_argument('--steps', type=int, metavar='N')
    parser.add_argument('--dt', type=float, metavar='X')
    parser.add_argument('--nr', type=int, metavar='N', help='nodes per unit length')
    parser.add_argument('--ntheta', type=int, metavar='N', help='> 0 activates the second axis')
    parser.add_argument('--nphi', type=int, metavar='N', help='> 0 activates the third axis')
    parser.add_argument('--order', type=int, metavar='P', help='stencil accuracy order')
    parser.add_argument('--picard', type=int, metavar='M', help='Picard sweeps per step')
    parser.add_argument('--monitor-every', type=int, metavar='N', dest='monitor_every')
    parser.add_argument('--out', metavar='DIR')
    parser.add_argument('--seed', type=int, metavar='N')
    parser.add_argument('--resolutions', type=int, metavar='K', help='refinement levels, nr doubling')
    parser.add_argument('--strict', action='store_true', help='abort when a compatibility check fails')
    return parser


def cli_overrides(args: argparse.Namespace) -> Dict[str, Any]:
    """Translate parsed flags into a nested override layer."""
    overrides: Dict[str, Any] = {}

    def put(section: Optional[str], key: str, value: Any):
        if value is None:
            return
        target = overrides if section is None else overrides.setdefault(section, {})
        target[key] = value

    put(None, 'mode', args.mode)
    put(None, 'preset', args.preset)
    put(None, 'input', args.input)
    put(None, 'seed', args.seed)
    put('step', 'steps', args.steps)
    put('step', 'dt', args.dt)
    put('step', 'picard_iters', args.picard)
    put('step', 'monitor_every', args.monitor_every)
    put('grid', 'nr', args.nr)
    put('grid', 'order', args.order)
    if args.nphi:
        put('grid', 'dim', 3)
    elif args.ntheta:
        put('grid', 'dim', 2)
    put('output', 'dir', args.out)
    put('diagnostics', 'resolutions', args.resolutions)
    if args.strict:
        put('diagnostics', 'strict_compatibility', True)
    return overrides


@dataclass
class LevelOutcome:
    """
    Result of one resolution level.

    :ivar exit_code: 0, 1 or 2
    :ivar report: final report of the level
    :ivar last: last monitor report, if any was taken
    """
    exit_code: int
    report: Dict[str, Any]
    last: Optional[MonitorReport] = None
    errors: List[str] = field(default_factory=list)


class RunDriver:
    """
    Drives one configured run, at one or several resolutions.

    :param cfg: resolved run configuration
    :param console: rich console for the summary tables
    :param run_log: structured stage log
    :param error_handler: error logging of the run
    """

    def __init__(
        self,
        cfg: RunConfig,
        console: Optional[Console] = None,
        run_log: Optional[StructuredLogger] = None,
        error_handler: Optional[ErrorHandler] = None
    ):
        self.cfg = cfg
        self.console = console or Console()
        self.run_log = run_log
        self.error_handler = error_handler

    def _event(self, name: str, data: Optional[Dict[str, Any]] = None):
        if self.run_log is not None:
            self.run_log.track_event(name, data, category='run')

    def _metric(self, name: str, value: float, tags: Optional[Dict[str, str]] = None):
        if self.run_log is not None:
            self.run_log.track_metric(name, value, tags=tags)

    def _handle(self, exc: Exception, stage: str) -> int:
        usage = is_usage_error(exc, stage)
        if self.error_handler is not None:
            handled = self.error_handler.handle_error(exc, context={'stage': stage}, fatal=not usage)
        else:
            logger.error(f"{type(exc).__name__} during {stage}: {exc}", exc_info=not usage)
            handled = exc
        self._event('abort', {
            'stage': stage, 'error': type(exc).__name__, 'handled_as': type(handled).__name__, 'message': str(exc),
        })
        return EXIT_USAGE if usage else EXIT_FATAL

    def build_grid(self, nr: int) -> DomainGrid:
        g = self.cfg.grid
        return DomainGrid.build(
            nr=nr, dim=g.dim, r_far=g.r_far, band_width=g.band_width,
            order=g.order, allow_straddle_fallback=g.allow_straddle_fallback,
        )

    def ingest(self, grid: DomainGrid):
        if self.cfg.input:
            return load_constraint_data(self.cfg.input, grid)
        return preset_data(self.cfg.preset, grid)

    def register_schema(self, out_dir: str):
        versioner = SchemaVersioner('schema_versions.json', directory=out_dir)
        names = [f.name for f in fields(MonitorReport)]
        versioner.register_schema(MONITOR_SCHEMA, REPORT_SCHEMA_VERSION, names)

    def simulate(self, nr: int, step_cfg: StepConfig, out_dir: str, refinement: bool = False) -> LevelOutcome:
        """
        Run the pipeline at one resolution and write its artifacts to
        ``out_dir``.

        :param refinement: level of a refinement study; compatibility is
            strict except for the vanishing quantities, which
            :meth:`refine` judges across levels
        """
        cfg = self.cfg
        tol = step_cfg.tolerances
        os.makedirs(out_dir, exist_ok=True)
        self.register_schema(out_dir)
        report: Dict[str, Any] = {
            'schema_version': REPORT_SCHEMA_VERSION,
            'mode': cfg.mode,
            'preset': cfg.preset,
            'input': cfg.input,
            'seed': cfg.seed,
            'nr': nr,
            'dt': step_cfg.dt,
            'steps_requested': step_cfg.steps,
            'steps_taken': 0,
            'picard_exhausted_steps': 0,
        }
        outcome = LevelOutcome(exit_code=EXIT_OK, report=report)
        stage = 'ingest'
        state = None
        suite = None
        stream = None
        try:
            grid = self.build_grid(nr)
            report['nodes'] = grid.n_nodes
            cd = self.ingest(grid)
            self._event('ingest', {'nr': nr, 'nodes': grid.n_nodes, 'source': cfg.input or cfg.preset})

            stage = 'build'
            initial = build_initial_state(
                cd, grid, mode=cfg.mode, floor=tol.det_floor, gram_floor=tol.gram_floor,
                constraint_tol=tol.constraint_tol,
            )
            self._event('build', {'constraint_residuals': initial.metadata.get('constraint_residuals', {})})

            stage = 'compatibility'
            compatibility = check_compatibility(initial, grid, tol)
            report['compatibility'] = compatibility.to_dict()
            self._event('compatibility', {'passed': compatibility.passed, 'failures': compatibility.failures})
            failures = compatibility.failures
            if refinement:
                failures = [name for name in failures if not name.startswith(VANISHING_PREFIXES)]
            if failures and (refinement or cfg.diagnostics.strict_compatibility):
                logger.error(f"Strict compatibility failed: {', '.join(failures)}")
                outcome.exit_code = EXIT_FATAL
                outcome.errors.append('compatibility')
                return outcome

            stage = 'identities'
            report['identities'] = identity_audit(grid)
            self._event('identities', report['identities'])

            stage = 'evolve'
            state = EvolutionState.from_initial(initial, grid)
            stepper = Stepper(grid, step_cfg, state)
            suite = MonitorSuite(stepper.rhs, cfg.diagnostics, tol.c0)
            stream = MonitorStream(out_dir)
            outcome.last = self._monitor(suite, stream, state, 0, stepper.cfl(state))

            for n in range(1, step_cfg.steps + 1):
                state = stepper.step(state)
                report['steps_taken'] = n
                if stepper.last_report.picard_exhausted:
                    report['picard_exhausted_steps'] += 1
                    self._event('picard_exhausted', {'step': n, 't': state.t, 'distances': stepper.last_report.picard_distances})
                if n % step_cfg.monitor_every == 0 or n == step_cfg.steps:
                    outcome.last = self._monitor(suite, stream, state, n, stepper.last_report.cfl)
                if step_cfg.checkpoint_every and n % step_cfg.checkpoint_every == 0:
                    save_checkpoint(os.path.join(out_dir, 'checkpoints', f'step_{n:06d}{CHECKPOINT_SUFFIX}'), state, grid)
                    self._event('checkpoint', {'step': n, 't': state.t})
            self._event('evolve', {'steps': report['steps_taken'], 't': state.t})
        except Exception as exc:
            outcome.exit_code = self._handle(exc, stage)
            outcome.errors.append(stage)
            report['error'] = {'stage': stage, 'type': type(exc).__name__, 'message': str(exc)}
            if isinstance(exc, SimulationError):
                report['error']['context'] = jsonable(exc.context)
        finally:
            if state is not None:
                report['t_final'] = state.t
            if suite is not None:
                report['energy_totals'] = suite.energy.totals()
                report['balances'] = {name: tracker.summary() for name, tracker in suite.balances.items()}
            if outcome.last is not None:
                report['last_monitor'] = outcome.last.scalars()
                report['flags'] = sorted({flag for r in suite.reports for flag in r.flags})
            if stream is not None:
                report['monitor_summary'] = stream.summary()
            report['exit_code'] = outcome.exit_code
        return outcome

    def _monitor(self, suite: MonitorSuite, stream: MonitorStream, state: EvolutionState, step: int, cfl: float) -> MonitorReport:
        report = suite.evaluate(state, step=step, cfl=cfl)
        stream.append(report.to_record(), report.scalars())
        self._metric('E0', report.energies[0]['instantaneous'], tags={'step': str(step)})
        self._metric('cfl', report.cfl, tags={'step': str(step)})
        nonfinite = [flag for flag in report.flags if flag.startswith('nonfinite')]
        if nonfinite:
            raise NonfiniteState("Monitor values are not finite", context={'t': state.t, 'flags': nonfinite})
        return report

    def compatibility_levels(self, nrs: Sequence[int]) -> ConvergenceTable:
        """Initial vanishing quantities at every refinement level, before any evolution."""
        tol = self.cfg.tolerances
        spacings: List[float] = []
        errors: Dict[str, List[float]] = {}
        for nr in nrs:
            grid = self.build_grid(nr)
            initial = build_initial_state(
                self.ingest(grid), grid, mode=self.cfg.mode, floor=tol.det_floor,
                gram_floor=tol.gram_floor, constraint_tol=tol.constraint_tol,
            )
            spacings.append(1.0 / nr)
            for name, check in check_compatibility(initial, grid, tol).checks.items():
                if name.startswith(VANISHING_PREFIXES):
                    errors.setdefault(name, []).append(check.value)
        complete = {name: errs for name, errs in errors.items() if len(errs) == len(spacings)}
        return convergence_table(spacings, complete)

    def refine(self, levels: int) -> Dict[str, Any]:
        """
        Repeat the run with nr doubling and dt halving to the same final
        time, and tabulate the observed orders of the vanishing quantities
        and of the identity audit at the final monitor.

        Refinement is always strict: the initial vanishing quantities must
        either pass the compatibility tolerance or converge with resolution
        (:func:`diverging_quantities`), and every other compatibility check
        must pass at every level. Otherwise the run ends with exit code 1
        before or at the failing level.
        """
        base = self.cfg.step
        nrs = refinement_levels(self.cfg.grid.nr, levels)
        result: Dict[str, Any] = {'levels': []}
        try:
            initial_table = self.compatibility_levels(nrs)
        except Exception as exc:
            result['exit_code'] = self._handle(exc, 'compatibility')
            result['error'] = {'stage': 'compatibility', 'type': type(exc).__name__, 'message': str(exc)}
            return result
        result['initial_convergence'] = initial_table.to_dict()
        diverging = diverging_quantities(initial_table, self.cfg.tolerances.compatibility_tol)
        self._event('compatibility_levels', {'nr': nrs, 'diverging': diverging})
        if diverging:
            logger.error(f"Initial data are not compatible: {', '.join(diverging)} do not converge with resolution")
            result['exit_code'] = EXIT_FATAL
            result['error'] = {'stage': 'compatibility', 'type': 'IncompatibleData', 'diverging': diverging}
            return result

        spacings: List[float] = []
        errors: Dict[str, List[float]] = {}
        outcomes: List[LevelOutcome] = []
        for k, nr in enumerate(nrs):
            scale = 2 ** k
            step_cfg = replace(
                base, dt=base.dt / scale, steps=base.steps * scale, monitor_every=base.monitor_every * scale,
                checkpoint_every=base.checkpoint_every * scale,
            )
            self._event('refinement_level', {'level': k, 'nr': nr, 'dt': step_cfg.dt})
            outcome = self.simulate(nr, step_cfg, os.path.join(self.cfg.output_dir, f'level_{k}'), refinement=True)
            outcomes.append(outcome)
            if outcome.exit_code != EXIT_OK or outcome.last is None:
                break
            spacings.append(1.0 / nr)
            for name, value in outcome.last.scalars().items():
                if name.startswith(VANISHING_PREFIXES):
                    errors.setdefault(name, []).append(value)
            for name, value in outcome.report.get('identities', {}).items():
                errors.setdefault(f'identity_{name}', []).append(value)

        result['levels'] = [o.report for o in outcomes]
        result['exit_code'] = max(o.exit_code for o in outcomes)
        complete = {name: errs for name, errs in errors.items() if len(errs) == len(spacings)}
        if len(spacings) >= 2:
            table = convergence_table(spacings, complete)
            result['convergence'] = table.to_dict()
            result['convergence_rows'] = table.rows()
            self._print_convergence(table)
        return result

    def run(self) -> int:
        cfg = self.cfg
        np.random.seed(cfg.seed)
        os.makedirs(cfg.output_dir, exist_ok=True)
        self._event('start', {'mode': cfg.mode, 'preset': cfg.preset, 'resolutions': cfg.diagnostics.resolutions})

        if cfg.diagnostics.resolutions > 1:
            final = self.refine(cfg.diagnostics.resolutions)
            exit_code = final['exit_code']
        else:
            outcome = self.simulate(cfg.grid.nr, cfg.step, cfg.output_dir)
            final = outcome.report
            exit_code = outcome.exit_code
            if outcome.last is not None:
                self._print_monitors(outcome.last)

        final['config'] = cfg.to_dict()
        if self.run_log is not None:
            final['session_id'] = self.run_log.get_session_id()
        path = os.path.join(cfg.output_dir, 'report.json')
        with open(path, 'w') as handle:
            json.dump(jsonable(final), handle, indent=2)
        self._event('finish', {'exit_code': exit_code, 'report': path})
        style = 'green' if exit_code == EXIT_OK else 'red'
        self.console.print(f"[bold {style}]Run finished with exit code {exit_code}[/bold {style}]; report at {path}")
        return exit_code

    def _print_monitors(self, report: MonitorReport):
        table = Table(title=f"Monitors at t = {report.t:.6g}")
        table.add_column('quantity')
        table.add_column('value', justify='right')
        for name, value in report.scalars().items():
            table.add_row(name, f'{value:.6e}' if isinstance(value, float) else str(value))
        self.console.print(table)

    def _print_convergence(self, conv: ConvergenceTable):
        table = Table(title='Observed convergence orders')
        table.add_column('quantity')
        for h in conv.spacings:
            table.add_column(f'h={h:.4g}', justify='right')
        table.add_column('min order', justify='right')
        for name, errs in conv.errors.items():
            table.add_row(name, *[f'{e:.3e}' for e in errs], f'{conv.min_order(name):.2f}')
        self.console.print(table)


def main(argv: Optional[Sequence[str]] = None, console: Optional[Console] = None) -> int:
    """
    Entry point of ``hardphase``.

    :param argv: argument list, ``sys.argv[1:]`` if None
    :param console: console for the output, a new one if None
    :return: process exit code
    """
    load_dotenv()
    console = console or Console()
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code in (0, None) else EXIT_USAGE

    try:
        cfg = RunConfigBuilder().build(config_file=args.config, cli_overrides=cli_overrides(args))
    except (ConfigurationError, OSError, ValueError) as exc:
        console.print(f"[bold red]Configuration error:[/bold red] {exc}")
        return EXIT_USAGE

    level = getattr(logging, cfg.log_level.upper(), logging.INFO)
    log_dir = os.path.join(cfg.output_dir, 'logs')
    error_handler = ErrorHandler(log_dir=log_dir, log_level=level, console=False)
    rich_handler = RichHandler(console=console, level=level, show_path=False)
    logging.getLogger().addHandler(rich_handler)
    run_log = StructuredLogger(log_dir=log_dir, log_level=level)
    driver = RunDriver(cfg, console, run_log, error_handler)
    try:
        return driver.run()
    except Exception as exc:
        return driver._handle(exc, 'report')
    finally:
        run_log.close()
        logging.getLogger().removeHandler(rich_handler)
        error_handler.close()
