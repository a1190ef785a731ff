#!/usr/bin/env python3
"""
Experiment Runner

This module orchestrates experiments: it resolves a validated configuration
into a graph, mixing matrix, objective suite, schedule and initial iterates,
runs a kernel, exports the trace and manifest, replays manifests, runs seed
sweeps and drives the verification harness.
"""

import logging
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from exporters.csv_exporter import CSVExporter
from exporters.json_exporter import JSONExporter
from exporters.manifest_exporter import ManifestExporter
from models.network import Graph, MixingMatrix
from models.objective_suite import ObjectiveSuite
from models.rng_stream import PURPOSE_GRAPH, PURPOSE_SUITE, PURPOSE_VERIFY, RngStream
from models.run_config import KNOWN_KEYS, RunConfig
from models.swarm import Schedule
from models.trace import Trace, VerificationReport
from processors.algorithms import default_initial_points, run
from processors.network import (build_complete, build_geometric_sphere, build_path, build_ring,
                                graph_from_edges, mixing_matrix)
from processors.objectives import (make_benchmark_instance, make_quadratic_suite, suite_from_parameters)
from processors.schedules import build_schedule, schedule_parameters
from processors import verification
from utils.config_parser import parse_key_value_file
from utils.exceptions import ConfigError, DivergenceError, ExportError
from utils.number_format import format_float, format_float_list, parse_float_list

logger = logging.getLogger(__name__)

OUTPUT_DIR_ENV = 'ZOLAB_OUTPUT_DIR'
DEFAULT_OUTPUT_DIR = 'results/'
TRACE_FILENAME = 'trace.csv'
MANIFEST_FILENAME = 'manifest.txt'
SUMMARY_FILENAME = 'summary.csv'
VERIFY_SELECTORS = ('lemma1', 'bias', 'contraction', 'theorem3', 'theorem4', 'hybrid')
RESAMPLING_NOTE = 'graph,suite,x0 resampled per seed'


def default_output_dir() -> str:
    """Output directory from the environment, falling back to results/."""
    return os.environ.get(OUTPUT_DIR_ENV, DEFAULT_OUTPUT_DIR)


@dataclass
class RunSetup:
    """Everything a run needs, resolved from a config or a manifest."""

    config: RunConfig
    graph: Graph
    w: MixingMatrix
    suite: ObjectiveSuite
    schedule: Schedule
    x0: np.ndarray

    def manifest(self) -> Dict[str, str]:
        """Flat manifest entries: config keys, then graph, weights, suite, schedule and x0."""
        entries = self.config.to_entries()
        entries['instance.resampling'] = RESAMPLING_NOTE
        entries['graph.n'] = str(self.graph.n)
        entries['graph.edges'] = ';'.join(f"{i}-{j}" for i, j in self.graph.sorted_edges())
        entries['mixing.scheme'] = self.w.scheme
        entries['mixing.rho'] = format_float(self.w.rho)
        entries['suite.kind'] = self.suite.kind
        for name, values in self.suite.parameters().items():
            entries[f"suite.{name}"] = format_float_list(values)
        for name, value in self.suite.constants().items():
            if value is not None:
                entries[f"constant.{name}"] = format_float(value)
        entries['schedule.kind'] = self.schedule.kind
        for name, value in schedule_parameters(self.schedule).items():
            entries[f"schedule.{name}"] = format_float(value)
        entries['init.x0'] = format_float_list(self.x0)
        return entries


@dataclass
class SweepResult:
    """Outcome of a seed sweep, keyed by member index."""

    seeds: List[int]
    traces: Dict[int, Trace] = field(default_factory=dict)
    failures: Dict[int, str] = field(default_factory=dict)
    summary_path: Optional[str] = None

    @property
    def ok(self) -> bool:
        return not self.failures


def _build_graph(config: RunConfig) -> Graph:
    if config.graph == 'ring':
        return build_ring(config.n)
    if config.graph == 'path':
        return build_path(config.n)
    if config.graph == 'complete':
        return build_complete(config.n)
    rng = RngStream.for_purpose(config.seed, PURPOSE_GRAPH).generator()
    return build_geometric_sphere(config.n, config.max_angle, rng)


def _build_suite(config: RunConfig) -> ObjectiveSuite:
    rng = RngStream.for_purpose(config.seed, PURPOSE_SUITE).generator()
    if config.suite == 'benchmark':
        return make_benchmark_instance(config.d, config.n, rng, L=config.L, G=config.G)
    return make_quadratic_suite(config.d, config.n, rng.standard_normal((config.n, config.d)))


def resolve_schedule(config: RunConfig, suite: ObjectiveSuite, w: MixingMatrix) -> Schedule:
    """Fill in the constants a schedule kind needs; suite constants take precedence."""
    L = suite.L if suite.L is not None else config.L
    G = suite.G if suite.G is not None else config.G
    mu = suite.mu if suite.mu is not None else config.mu

    params = dict(config.schedule_params)
    kind = config.schedule
    if kind == 'manual':
        params.setdefault('eta_power', 0.0)
        params.setdefault('u_power', 0.0)
    elif kind == 'theorem1':
        params.update(L=L, G=G, d=config.d)
    elif kind == 'theorem2':
        params.update(mu=mu, L=L, d=config.d, rho=w.rho)
    elif kind == 'theorem3':
        params.update(L=L, rho=w.rho)
    else:
        params.update(mu=mu, L=L, rho=w.rho)
    return build_schedule(kind, params)


def _sweep_member(config: RunConfig, member_dir: str) -> Tuple[Optional[Trace], Optional[str]]:
    """Run one sweep member in its own process; failures come back as text."""
    runner = ExperimentRunner()
    try:
        trace, _ = runner.run_and_export(config, member_dir)
        return trace, None
    except DivergenceError as e:
        return None, str(e)
    except Exception as e:
        logger.error(f"Sweep member seed={config.seed} failed: {str(e)}", exc_info=True)
        return None, f"{type(e).__name__}: {e}"


class ExperimentRunner:
    """Main class to run, export, replay, sweep and verify experiments."""

    def __init__(self):
        """Initialize ExperimentRunner with its exporters."""
        self.csv_exporter = CSVExporter()
        self.json_exporter = JSONExporter()
        self.manifest_exporter = ManifestExporter()

    def prepare(self, config: RunConfig) -> RunSetup:
        """Resolve graph, weights, suite, schedule and initial iterates from the seed.

        Every random ingredient is redrawn per seed, each from its own stream.
        """
        graph = _build_graph(config)
        w = mixing_matrix(graph, config.weights, config.seed)
        suite = _build_suite(config)
        schedule = resolve_schedule(config, suite, w)
        x0 = default_initial_points(config.n, config.d, config.seed, config.init_std)
        logger.info(f"Prepared {config.kernel} run: {graph}, rho={w.rho:.6f}, {suite}, {schedule}")
        return RunSetup(config=config, graph=graph, w=w, suite=suite, schedule=schedule, x0=x0)

    def execute(self, setup: RunSetup, check_invariants: bool = False) -> Trace:
        config = setup.config
        return run(config.kernel, setup.suite, setup.w, setup.schedule, config.T, config.seed,
                   x0=setup.x0, check_invariants=check_invariants, log_every=config.log_every)

    def run_experiment(self, config: RunConfig,
                       check_invariants: bool = False) -> Tuple[Trace, Dict[str, str]]:
        """Run one configuration.

        Returns:
            The trace and the manifest entries that replay it
        """
        setup = self.prepare(config)
        return self.execute(setup, check_invariants), setup.manifest()

    def export_results(self, trace: Trace, manifest: Dict[str, str], output_dir: str) -> Dict[str, str]:
        """Write trace.csv and manifest.txt into output_dir.

        Returns:
            Dictionary mapping output kind to file path

        Raises:
            ExportError: if either file could not be written
        """
        try:
            os.makedirs(output_dir, exist_ok=True)
        except OSError as e:
            raise ExportError(f"cannot create output directory {output_dir}: {e}") from e

        output_files = {
            'trace': os.path.join(output_dir, TRACE_FILENAME),
            'manifest': os.path.join(output_dir, MANIFEST_FILENAME),
        }
        if not self.csv_exporter.export(trace, output_files['trace']):
            raise ExportError(f"failed to write {output_files['trace']}")
        if not self.manifest_exporter.export(manifest, output_files['manifest']):
            raise ExportError(f"failed to write {output_files['manifest']}")
        return output_files

    def run_and_export(self, config: RunConfig, output_dir: str) -> Tuple[Trace, Dict[str, str]]:
        """Run a configuration and write its outputs.

        On divergence the partial trace and the manifest are still written
        before the error propagates.
        """
        setup = self.prepare(config)
        return self._execute_and_export(setup, setup.manifest(), output_dir)

    def _execute_and_export(self, setup: RunSetup, manifest: Dict[str, str],
                            output_dir: str) -> Tuple[Trace, Dict[str, str]]:
        try:
            trace = self.execute(setup)
        except DivergenceError as e:
            if e.partial_trace:
                self.export_results(e.partial_trace, manifest, output_dir)
                logger.warning(f"Partial trace ({len(e.partial_trace)} rows) written to {output_dir}")
            else:
                logger.warning("Run diverged before its first trace row; nothing written")
            raise
        return trace, self.export_results(trace, manifest, output_dir)

    def load_manifest(self, manifest_path: str) -> Tuple[RunSetup, Dict[str, str]]:
        """Rebuild a run exactly from its manifest (no random draws).

        Raises:
            ConfigError: listing manifest keys that are missing or malformed
        """
        raw = parse_key_value_file(manifest_path)
        config = RunConfig.from_mapping({k: v for k, v in raw.items() if k in KNOWN_KEYS})

        required = ('graph.n', 'graph.edges', 'mixing.scheme', 'suite.kind', 'schedule.kind', 'init.x0')
        missing = [key for key in required if key not in raw]
        if missing:
            raise ConfigError(missing, [f"{key}: missing from manifest" for key in missing])

        try:
            edges = [tuple(int(v) for v in item.split('-')) for item in raw['graph.edges'].split(';') if item]
            graph = graph_from_edges(int(raw['graph.n']), edges)
            suite_params = {key[len('suite.'):]: parse_float_list(value) for key, value in raw.items()
                            if key.startswith('suite.') and key != 'suite.kind'}
            suite = suite_from_parameters(raw['suite.kind'], suite_params, config.d, config.n,
                                          L=config.L, G=config.G)
            schedule_params = {key[len('schedule.'):]: float(value) for key, value in raw.items()
                               if key.startswith('schedule.') and key != 'schedule.kind'}
            x0 = parse_float_list(raw['init.x0']).reshape(config.n, config.d)
        except (KeyError, ValueError) as e:
            raise ConfigError(['manifest'], [f"malformed manifest {manifest_path}: {e}"]) from e

        w = mixing_matrix(graph, raw['mixing.scheme'], config.seed)
        if 'mixing.rho' in raw and format_float(w.rho) != raw['mixing.rho']:
            logger.warning(f"Replayed rho {format_float(w.rho)} differs from manifest {raw['mixing.rho']}")
        schedule = build_schedule(raw['schedule.kind'], schedule_params)

        setup = RunSetup(config=config, graph=graph, w=w, suite=suite, schedule=schedule, x0=x0)
        return setup, raw

    def replay(self, manifest_path: str, output_dir: str) -> Tuple[Trace, Dict[str, str]]:
        """Re-run a manifest; the trace matches the original byte for byte."""
        setup, raw = self.load_manifest(manifest_path)
        logger.info(f"Replaying {manifest_path} into {output_dir}")
        return self._execute_and_export(setup, raw, output_dir)

    def sweep(self, config: RunConfig, seeds: Sequence[int], output_dir: str,
              workers: int = 1) -> SweepResult:
        """Run one member per seed and write per-member outputs plus summary.csv.

        Member failures are recorded and the sweep continues.

        Args:
            config: Base configuration; its seed is replaced per member
            seeds: One or more seeds (duplicates give identical members)
            output_dir: Directory receiving one subdirectory per member
            workers: Process count; 1 runs in this process

        Returns:
            SweepResult
        """
        if not seeds:
            raise ConfigError(['seeds'], ['seeds: at least one seed is required'])

        result = SweepResult(seeds=list(seeds))
        members = [(k, config.with_seed(seed), os.path.join(output_dir, f"{k:03d}_seed_{seed}"))
                   for k, seed in enumerate(seeds)]
        logger.info(f"Sweeping {len(members)} seeds with {workers} worker(s) into {output_dir}")

        if workers > 1:
            with ProcessPoolExecutor(max_workers=workers) as pool:
                futures = {k: pool.submit(_sweep_member, member_config, member_dir)
                           for k, member_config, member_dir in members}
                outcomes = {k: future.result() for k, future in futures.items()}
        else:
            outcomes = {k: _sweep_member(member_config, member_dir)
                        for k, member_config, member_dir in members}

        for k, (trace, error) in sorted(outcomes.items()):
            if error is None:
                result.traces[k] = trace
            else:
                result.failures[k] = error
                logger.warning(f"Sweep member {k} (seed {seeds[k]}) failed: {error}")

        if result.traces:
            summary_path = os.path.join(output_dir, SUMMARY_FILENAME)
            ordered = [result.traces[k] for k in sorted(result.traces)]
            if not self.csv_exporter.export_summary(ordered, summary_path):
                raise ExportError(f"failed to write {summary_path}")
            result.summary_path = summary_path

        logger.info(f"Sweep finished: {len(result.traces)} succeeded, {len(result.failures)} failed")
        return result

    def run_verification(self, which: str, samples: int = 100_000,
                         seed: int = 0) -> List[VerificationReport]:
        """Run one verification group, or every group for 'all'.

        Raises:
            ConfigError: for an unknown selector
        """
        groups = VERIFY_SELECTORS if which == 'all' else (which,)
        unknown = [name for name in groups if name not in VERIFY_SELECTORS]
        if unknown:
            raise ConfigError(['which'], [f"which: unknown selector '{which}', expected one of "
                                          f"{', '.join(VERIFY_SELECTORS + ('all',))}"])

        reports: List[VerificationReport] = []
        for name in groups:
            logger.info(f"Running verification group '{name}'")
            reports.extend(getattr(self, f"_verify_{name}")(samples, seed))
        return reports

    def export_reports(self, reports: Sequence[VerificationReport], output_path: str) -> str:
        if not self.json_exporter.export(reports, output_path):
            raise ExportError(f"failed to write {output_path}")
        return output_path

    @staticmethod
    def _rng(seed: int, check: int) -> np.random.Generator:
        return RngStream(seed=seed, agent=check, purpose=PURPOSE_VERIFY).generator()

    def _verify_lemma1(self, samples: int, seed: int) -> List[VerificationReport]:
        e1 = np.zeros(16)
        e1[0] = 1.0
        return [
            verification.verify_lemma1(16, e1, samples, self._rng(seed, 0)),
            verification.verify_lemma1(1, np.array([1.0]), samples, self._rng(seed, 1)),
            verification.verify_sphere_moments(3, samples, self._rng(seed, 2)),
        ]

    def _verify_bias(self, samples: int, seed: int) -> List[VerificationReport]:
        A = np.diag([1.0, 2.0, 3.0, 4.0])
        b = np.array([1.0, -1.0, 0.5, 2.0])
        x_quad = np.array([0.3, -0.2, 1.0, 0.5])
        x_cos = self._rng(seed, 10).standard_normal(8)

        def cos_sum(x):
            return float(np.sum(np.cos(x)))

        return [
            verification.verify_estimator_bias(lambda x: float(0.5 * x @ A @ x + b @ x),
                                               lambda x: A @ x + b, x_quad, (1.0, 0.1, 0.01),
                                               L=4.0, name='quadratic'),
            verification.verify_estimator_bias(lambda x: float(x[0] ** 3), lambda x: 3.0 * x ** 2,
                                               np.array([1.0]), (0.1, 0.05), L=12.0, name='cubic'),
            verification.verify_estimator_bias(cos_sum, lambda x: -np.sin(x), x_cos, (1.0, 0.1, 0.01),
                                               L=1.0, name='cos-sum'),
            verification.verify_smoothed_gradient_mc(np.array([1.0, -2.0, 0.5]), samples,
                                                     self._rng(seed, 11)),
            verification.verify_second_moment_ceiling(cos_sum, -np.sin(x_cos), x_cos, u=0.1, L=1.0,
                                                      samples=samples, rng=self._rng(seed, 12)),
        ]

    def _verify_contraction(self, samples: int, seed: int) -> List[VerificationReport]:
        graphs = [build_ring(4), build_path(3),
                  build_geometric_sphere(50, math.pi / 4, self._rng(seed, 20))]
        reports = []
        for k, graph in enumerate(graphs):
            for scheme in ('metropolis', 'lazy-metropolis'):
                w = mixing_matrix(graph, scheme, seed)
                reports.append(verification.verify_contraction(w, self._rng(seed, 21 + k)))
                if scheme == 'lazy-metropolis':
                    reports.append(verification.verify_rho_ceiling(w))
        return reports

    def _verify_theorem3(self, samples: int, seed: int) -> List[VerificationReport]:
        config = RunConfig.from_mapping({
            'kernel': 'alg2', 'suite': 'quadratic', 'd': 8, 'n': 10, 'T': 5000, 'seed': seed,
            'graph': 'ring', 'schedule': 'theorem3', 'u0': 0.1, 'u_power': 1.0,
        })
        setup = self.prepare(config)
        trace = self.execute(setup)
        return verification.evaluate_theorem3_bound(trace, setup.suite, setup.w, setup.schedule)

    def _verify_theorem4(self, samples: int, seed: int) -> List[VerificationReport]:
        config = RunConfig.from_mapping({
            'kernel': 'alg2', 'suite': 'quadratic', 'd': 4, 'n': 8, 'T': 3000, 'seed': seed,
            'graph': 'ring', 'schedule': 'theorem4', 'alpha': 1.0, 'u1': 1.0,
        })
        setup = self.prepare(config)
        trace = self.execute(setup)
        points = self._rng(seed, 30).standard_normal((20, config.d)) * 3.0
        return [
            verification.evaluate_theorem4_rate(trace, setup.schedule.params['lambda'], setup.suite.f_star),
            verification.verify_gradient_upper_bound(setup.suite, points),
        ]

    def _verify_hybrid(self, samples: int, seed: int) -> List[VerificationReport]:
        base = {'suite': 'benchmark', 'd': 16, 'n': 20, 'T': 3000, 'seed': seed, 'graph': 'geometric',
                'schedule': 'manual', 'eta_power': 0.0, 'u0': 4.0, 'u_power': 0.75}
        alg2_setup = self.prepare(RunConfig.from_mapping(dict(base, kernel='alg2', eta0=0.02)))
        hybrid_setup = self.prepare(RunConfig.from_mapping(dict(base, kernel='hybrid', eta0=2e-4)))
        alg2_trace = self.execute(alg2_setup)
        hybrid_trace = self.execute(hybrid_setup)
        return [verification.verify_hybrid_nonvanishing(alg2_trace, hybrid_trace, d=16)]
