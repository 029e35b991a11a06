"""
Use cases run one experiment each and hand their tables and reports to the artifact writer.
"""

from __future__ import annotations

import contextlib
import dataclasses
import enum
import logging
import math
import os
from collections.abc import Callable, Iterator, Mapping
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any

import numpy as np

import quarticlab
from quarticlab.application import freud, kernels, orthopoly, painleve2, psi_cp, semiclassics
from quarticlab.application.config import settings
from quarticlab.application.ports.artifacts import AbstractArtifactWriter
from quarticlab.domain import model
from quarticlab.domain.valueobjects import (
    CheckResult,
    ModelParams,
    RecurrenceData,
    TrajectoryMethod,
)
from quarticlab.exceptions import ConfigValidationError, QuarticLabException

logger = logging.getLogger(__name__)


class Command(enum.Enum):
    FREUD = "freud"
    HM = "hm"
    PHI = "phi"
    KERNEL = "kernel"
    COMPARE = "compare"
    DENSITY = "density"
    SELFTEST = "selftest"


class OutputFormat(enum.Enum):
    CSV = "csv"
    JSON = "json"


@dataclass(frozen=True)
class ExperimentConfig:
    """
    Everything one run depends on. Runs with equal configs write identical files.
    """

    command: Command
    t: float = -1.0
    g: float = 1.0
    N: int = 400
    n_max: int = 200
    N_list: tuple[int, ...] = (100, 200, 400, 800)
    k_range: tuple[int, ...] = (-2, -1, 0, 1, 2)
    method: TrajectoryMethod = TrajectoryMethod.VARIATIONAL
    y: float = 0.0
    y_min: float = -12.0
    y_max: float = 8.0
    mesh: int = 2000
    n_parity: int = 0
    Z_far: float = 12.0
    regime: kernels.ScalingRegime = kernels.ScalingRegime.BULK
    center: float | None = None
    points: int = 50
    tol: float = 1e-12
    d1: float = 0.25
    d2: float = 0.05
    output: str = "quarticlab-output"
    format: OutputFormat = OutputFormat.CSV
    threads: int = 1
    perturb_R: float = 0.0
    reduced_nodes: bool = False

    @classmethod
    def from_mapping(cls, command: str, values: Mapping[str, Any]) -> ExperimentConfig:
        """
        Build a config from option names to raw values, as read from flags or a config file.

        Raises:
            ConfigValidationError, for unknown options or values of the wrong kind.
        """
        fields = {item.name: item for item in dataclasses.fields(cls)}
        unknown = sorted(set(values) - set(fields))
        if unknown:
            raise ConfigValidationError(f"Unknown options: {', '.join(unknown)}.")
        try:
            kwargs: dict[str, Any] = {"command": Command(command)}
            for name, value in values.items():
                if value is not None:
                    kwargs[name] = _CONVERTERS.get(name, _identity)(value)
            config = cls(**kwargs)
        except (TypeError, ValueError) as error:
            raise ConfigValidationError(str(error)) from error
        config.validate()
        return config

    def validate(self) -> None:
        """
        Raises:
            ConfigValidationError, if any setting is out of range.
        """
        problems = []
        if not self.g > 0:
            problems.append(f"g must be positive, got {self.g}")
        if self.N < 1 or self.n_max < 1 or self.mesh < 2 or self.points < 2:
            problems.append("N, n_max, mesh and points must be positive counts")
        for name in ("tol", "d1", "d2", "Z_far"):
            if not getattr(self, name) > 0:
                problems.append(f"{name} must be strictly positive")
        if not self.N_list:
            problems.append("N_list must not be empty")
        elif any(b <= a for a, b in zip(self.N_list, self.N_list[1:])):
            problems.append(f"N_list must be increasing, got {list(self.N_list)}")
        if not self.y_min < self.y_max:
            problems.append(f"y_min must be below y_max, got {self.y_min} >= {self.y_max}")
        if not 0 <= self.n_parity <= 3:
            problems.append(f"n_parity must be in 0..3, got {self.n_parity}")
        if self.threads < 1:
            problems.append("threads must be at least 1")
        if problems:
            raise ConfigValidationError("; ".join(problems) + ".")

    @property
    def params(self) -> ModelParams:
        return ModelParams(t=self.t, g=self.g, N=self.N)

    def header(self) -> dict[str, Any]:
        """
        The config echo written ahead of every artifact.
        """
        echo: dict[str, Any] = {"quarticlab_version": quarticlab.__version__}
        for item in dataclasses.fields(self):
            value = getattr(self, item.name)
            echo[item.name] = value.value if isinstance(value, enum.Enum) else value
        return echo

    def path(self, stem: str, format: OutputFormat) -> str:
        return os.path.join(self.output, f"{self.command.value}-{stem}.{format.value}")


def _identity(value: Any) -> Any:
    return value


def _int_tuple(value: Any) -> tuple[int, ...]:
    if isinstance(value, str):
        value = value.replace(",", " ").split()
    return tuple(int(item) for item in value)


_CONVERTERS: dict[str, Callable[[Any], Any]] = {
    "t": float,
    "g": float,
    "N": int,
    "n_max": int,
    "N_list": _int_tuple,
    "k_range": _int_tuple,
    "method": TrajectoryMethod,
    "y": float,
    "y_min": float,
    "y_max": float,
    "mesh": int,
    "n_parity": int,
    "Z_far": float,
    "regime": kernels.ScalingRegime,
    "center": float,
    "points": int,
    "tol": float,
    "d1": float,
    "d2": float,
    "output": str,
    "format": OutputFormat,
    "threads": int,
    "perturb_R": float,
    "reduced_nodes": bool,
}


@dataclass
class RunSummary:
    """
    What a run wrote, and for the self test the outcome of each check.
    """

    paths: list[str] = field(default_factory=list)
    checks: list[CheckResult] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(check.passed for check in self.checks)


def run(config: ExperimentConfig) -> RunSummary:
    """
    Run the experiment the config names and write its artifacts.

    Raises:
        QuarticLabException, if any stage fails; nothing is written for the failed stage.
    """
    config.validate()
    writer: AbstractArtifactWriter = settings.ARTIFACT_WRITER
    runner = _RUNNERS[config.command]
    summary = RunSummary()
    with _region_fractions(config.d1, config.d2), settings.TIMER as timer:
        artifacts = runner(config, summary)
    header = config.header()
    for stem, (columns, rows, payload) in artifacts.items():
        if config.format is OutputFormat.CSV and columns:
            path = config.path(stem, OutputFormat.CSV)
            writer.write_table(path, header, columns, rows)
        else:
            path = config.path(stem, OutputFormat.JSON)
            writer.write_report(path, header, payload or _records(columns, rows))
        summary.paths.append(path)
    logger.info(
        f"{config.command.value} wrote {len(summary.paths)} artifact(s) to {config.output} "
        f"({timer.duration_in_s:.2f}s)."
    )
    return summary


@contextlib.contextmanager
def _region_fractions(d1: float, d2: float) -> Iterator[None]:
    """
    Use the run's region sizes for the duration of the block, then restore the previous ones.
    """
    previous = settings.copy()
    settings.configure(D1_FRACTION=d1, D2_FRACTION=d2)
    try:
        yield
    finally:
        settings.configure(D1_FRACTION=previous.D1_FRACTION, D2_FRACTION=previous.D2_FRACTION)


# An artifact is (columns, rows, payload); reports without a table leave columns empty.
Artifacts = dict[str, tuple[list[str], list[list[Any]], Any]]


def _records(columns: list[str], rows: list[list[Any]]) -> list[dict[str, Any]]:
    return [dict(zip(columns, row)) for row in rows]


def _run_freud(config: ExperimentConfig, summary: RunSummary) -> Artifacts:
    params = config.params
    if config.method is TrajectoryMethod.FORWARD:
        trajectory = freud.forward_recursion(params, config.n_max)
    elif config.method is TrajectoryMethod.QUADRATURE_ORACLE:
        trajectory = freud.quadrature_oracle_trajectory(params, config.n_max)
    else:
        trajectory = freud.variational_solve(params, config.n_max, tol=config.tol)
    residuals = freud.string_residuals(trajectory)
    rows = [
        [n, trajectory.R[n], n / params.N, residuals[n]] for n in range(trajectory.n_max + 1)
    ]
    payload = {
        "method": trajectory.method.value,
        "converged": trajectory.converged,
        "residual": trajectory.residual,
        "iterations": trajectory.iterations,
        "blowup_index": trajectory.blowup_index,
        "rows": _records(["n", "R", "lambda", "residual"], rows),
    }
    return {"trajectory": (["n", "R", "lambda", "residual"], rows, payload)}


def _run_hm(config: ExperimentConfig, summary: RunSummary) -> Artifacts:
    hm = painleve2.solve_hastings_mcleod(config.y_min, config.y_max, config.mesh, config.tol)
    columns = ["y", "u", "up", "v", "D", "q"]
    rows = [list(row) for row in zip(hm.y, hm.u, hm.up, hm.v, hm.D, hm.q)]
    payload = {
        "residual": hm.residual,
        "boundary_error": hm.boundary_error,
        "iterations": hm.iterations,
        "u(0)": float(hm.u_at(0.0)),
        "rows": _records(columns, rows),
    }
    return {"grid": (columns, rows, payload)}


def _run_phi(config: ExperimentConfig, summary: RunSummary) -> Artifacts:
    hm = painleve2.solve_hastings_mcleod()
    phi = psi_cp.solve_phi(hm, config.y, config.n_parity, Z_far=config.Z_far)
    columns = ["z", "phi1", "phi2"]
    rows = [list(row) for row in zip(phi.z_grid, phi.phi1, phi.phi2)]
    payload = {
        "y": phi.y,
        "n_parity": phi.n_parity,
        "mismatch": phi.mismatch,
        "flagged": phi.flagged,
        "parity_defect": psi_cp.parity_defect(phi),
        "rows": _records(columns, rows),
    }
    return {"solution": (columns, rows, payload)}


def _run_kernel(config: ExperimentConfig, summary: RunSummary) -> Artifacts:
    report = kernels.scaling_limit_check(
        config.regime, config.g, config.N, config.y, center=config.center
    )
    payload = {
        "regime": report.regime.value,
        "t": report.params.t,
        "N": report.params.N,
        "y": report.y,
        "center": report.center,
        "scale": report.scale,
        "sup_error": report.sup_error,
    }
    return {"report": ([], [], payload)}


def _run_compare(config: ExperimentConfig, summary: RunSummary) -> Artifacts:
    hm = painleve2.solve_hastings_mcleod()
    regions = tuple(semiclassics.Region)
    base = ModelParams(t=config.t, g=config.g, N=config.N_list[0])

    def compare(N: int) -> list[semiclassics.ComparisonRow]:
        return semiclassics.compare_at(base.with_N(N), config.k_range, regions, hm, config.points)

    # map keeps the N order, so the output does not depend on thread scheduling.
    with ThreadPoolExecutor(max_workers=config.threads) as executor:
        rows = [row for chunk in executor.map(compare, config.N_list) for row in chunk]
    table = semiclassics.assemble_table(rows, regions)
    columns = ["N", "region", "n", "sup_error", "fitted_rate"]
    records = [
        [row.N, row.region.value, row.n, row.sup_error, table.rates[row.region]]
        for row in table.rows
    ]
    payload = {
        "rows": _records(columns, records),
        "rates": {region.value: rate for region, rate in table.rates.items()},
    }
    return {"errors": (columns, records, payload)}


def _run_density(config: ExperimentConfig, summary: RunSummary) -> Artifacts:
    params = config.params
    edge = model.equilibrium_density(params).a
    z = np.linspace(-1.2 * edge, 1.2 * edge, config.points)
    from_kernel = kernels.density_from_kernel(params, config.N, z)
    limit = model.density(params, z)
    columns = ["z", "kernel_density", "equilibrium_density"]
    rows = [list(row) for row in zip(z, from_kernel, limit)]
    return {"profile": (columns, rows, {"rows": _records(columns, rows)})}


def _run_selftest(config: ExperimentConfig, summary: RunSummary) -> Artifacts:
    summary.checks.extend(selftest(config.perturb_R, config.reduced_nodes))
    columns = ["name", "observed", "bound", "passed"]
    rows = [[c.name, c.observed, c.bound, int(c.passed)] for c in summary.checks]
    return {"checks": (columns, rows, {"passed": summary.passed, "rows": _records(columns, rows)})}


_RUNNERS: dict[Command, Callable[[ExperimentConfig, RunSummary], Artifacts]] = {
    Command.FREUD: _run_freud,
    Command.HM: _run_hm,
    Command.PHI: _run_phi,
    Command.KERNEL: _run_kernel,
    Command.COMPARE: _run_compare,
    Command.DENSITY: _run_density,
    Command.SELFTEST: _run_selftest,
}


# Self test
# ---------


_SELFTEST_PARAMS = ModelParams(t=-1.0, g=1.0, N=40)
_SELFTEST_N_MAX = 30


def selftest(perturb_R: float = 0.0, reduced_nodes: bool = False) -> list[CheckResult]:
    """
    The fast invariant suite.

    Args:
        perturb_R:     shift every recurrence coefficient by this amount before the Lax check.
        reduced_nodes: compute the recurrence on a deliberately coarse rule.
    """
    checks: list[CheckResult] = []
    state: dict[str, Any] = {}

    def recurrence() -> RecurrenceData:
        if "recurrence" not in state:
            state["recurrence"] = orthopoly.stieltjes_recurrence(
                _SELFTEST_PARAMS, _SELFTEST_N_MAX, reduced_nodes=reduced_nodes
            )
        return state["recurrence"]

    def hm() -> painleve2.HMGrid:
        if "hm" not in state:
            state["hm"] = painleve2.solve_hastings_mcleod()
        return state["hm"]

    def phi() -> psi_cp.PhiSolution:
        if "phi" not in state:
            state["phi"] = psi_cp.solve_phi(hm(), 0.0, 0)
        return state["phi"]

    def orthonormality() -> float:
        evaluator = orthopoly.PsiEvaluator.from_recurrence(recurrence())
        return orthopoly.orthonormality_defect(evaluator, _SELFTEST_N_MAX)

    def lax() -> float:
        data = recurrence()
        if perturb_R:
            data = orthopoly.perturbed(data, perturb_R)
        z_grid = np.linspace(-1.5, 1.5, 10) + 0.3j
        compatibility, _ = orthopoly.lax_residuals(data, _SELFTEST_N_MAX // 2, z_grid)
        return compatibility

    def string_equation() -> float:
        trajectory = freud.variational_solve(_SELFTEST_PARAMS, _SELFTEST_N_MAX)
        oracle = recurrence().R[: _SELFTEST_N_MAX + 1]
        return float(np.max(np.abs(trajectory.R - oracle)))

    def trace() -> float:
        data = recurrence()
        assert data.rule is not None
        evaluator = orthopoly.PsiEvaluator.from_recurrence(data)
        N_level = _SELFTEST_N_MAX
        nodes = data.rule.nodes
        diagonal = orthopoly.cd_kernel(evaluator, N_level, nodes, nodes)
        return abs(float(np.sum(data.rule.weights * diagonal)) - N_level) / N_level

    def painleve_residual() -> float:
        return hm().residual

    def phi_parity() -> float:
        return psi_cp.parity_defect(phi())

    def phi_mismatch() -> float:
        return phi().mismatch

    def kernel_symmetry() -> float:
        u = np.linspace(-3, 2, 7)
        points = (u[:, None], u[None, :])
        airy_values = kernels.airy_kernel(*points)
        critical_values = psi_cp.critical_kernel(phi(), *points)
        return float(
            max(
                np.max(np.abs(airy_values - airy_values.T)),
                np.max(np.abs(critical_values - critical_values.T)),
            )
        )

    def airy_diagonal() -> float:
        u = np.linspace(-3, 2, 6)
        delta = 1e-4
        confluent = kernels.airy_kernel(u, u)
        nearby = kernels.airy_kernel(u - delta / 2, u + delta / 2)
        return float(np.max(np.abs(nearby - confluent) / np.abs(confluent)))

    suite: list[tuple[str, Callable[[], float], float]] = [
        ("orthonormality", orthonormality, settings.ORTHOGONALITY_TOL),
        ("lax compatibility", lax, 1e-6 * _SELFTEST_PARAMS.N),
        ("string equation vs quadrature", string_equation, 1e-8),
        ("christoffel-darboux trace", trace, 1e-8),
        ("painleve residual", painleve_residual, 1e-10),
        ("phi parity", phi_parity, 1e-3),
        ("phi matching at zero", phi_mismatch, 1e-3),
        ("kernel symmetry", kernel_symmetry, 1e-10),
        ("airy diagonal limit", airy_diagonal, 1e-6),
    ]
    for name, check, bound in suite:
        try:
            observed = check()
        except QuarticLabException as error:
            logger.warning(f"Self test check {name!r} raised {error!r}.")
            observed = math.inf
        result = CheckResult(name=name, observed=observed, bound=bound)
        logger.info(str(result))
        checks.append(result)
    return checks
