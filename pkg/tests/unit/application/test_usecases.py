import pytest  # type: ignore

import quarticlab
from quarticlab.application import usecases
from quarticlab.application.config import settings
from quarticlab.domain.valueobjects import TrajectoryMethod
from quarticlab.exceptions import ConfigValidationError
from tests.adaptors.artifacts import FakeArtifactWriter
from tests.config import override_settings


def freud_config(**overrides) -> usecases.ExperimentConfig:
    values = {"method": "forward", "N": 40, "n_max": 10, "output": "out", **overrides}
    return usecases.ExperimentConfig.from_mapping("freud", values)


class TestExperimentConfig:
    def test_defaults(self):
        config = usecases.ExperimentConfig.from_mapping("compare", {})

        assert config.command is usecases.Command.COMPARE
        assert config.N_list == (100, 200, 400, 800)
        assert config.format is usecases.OutputFormat.CSV
        assert config.threads == 1

    def test_converts_raw_values(self):
        config = usecases.ExperimentConfig.from_mapping(
            "compare",
            {"t": "-1.5", "N_list": "50, 100", "k_range": [-1, 0, 1], "format": "json"},
        )

        assert config.t == -1.5
        assert config.N_list == (50, 100)
        assert config.k_range == (-1, 0, 1)
        assert config.format is usecases.OutputFormat.JSON

    def test_method(self):
        assert freud_config().method is TrajectoryMethod.FORWARD

    def test_unknown_options(self):
        with pytest.raises(ConfigValidationError, match="Unknown options: colour, size."):
            usecases.ExperimentConfig.from_mapping("freud", {"size": 1, "colour": "red"})

    @pytest.mark.parametrize(
        "command, values",
        (
            ("nonsense", {}),
            ("freud", {"N": "many"}),
            ("freud", {"method": "guess"}),
            ("kernel", {"regime": "middle"}),
        ),
    )
    def test_unparseable_values(self, command, values):
        with pytest.raises(ConfigValidationError):
            usecases.ExperimentConfig.from_mapping(command, values)

    @pytest.mark.parametrize(
        "values, message",
        (
            ({"g": 0}, "g must be positive, got 0.0"),
            ({"N_list": [200, 100]}, r"N_list must be increasing, got \[200, 100\]"),
            ({"y_min": 3, "y_max": 1}, "y_min must be below y_max, got 3.0 >= 1.0"),
            ({"n_parity": 4}, "n_parity must be in 0..3, got 4"),
            ({"tol": 0}, "tol must be strictly positive"),
            ({"threads": 0}, "threads must be at least 1"),
        ),
    )
    def test_out_of_range_values(self, values, message):
        with pytest.raises(ConfigValidationError, match=message):
            usecases.ExperimentConfig.from_mapping("hm", values)

    def test_header_echoes_every_setting_and_the_version(self):
        header = freud_config().header()

        assert header["quarticlab_version"] == quarticlab.__version__
        assert header["command"] == "freud"
        assert header["method"] == "forward"
        assert header["n_max"] == 10
        assert "threads" in header

    def test_path(self):
        config = freud_config()

        assert config.path("trajectory", usecases.OutputFormat.JSON) == (
            "out/freud-trajectory.json"
        )


class TestRun:
    def test_writes_a_table(self):
        writer = FakeArtifactWriter()

        with override_settings(ARTIFACT_WRITER=writer):
            summary = usecases.run(freud_config())

        assert summary.paths == ["out/freud-trajectory.csv"]
        assert summary.passed
        lines = writer.tables["out/freud-trajectory.csv"]
        assert lines[0] == f"# quarticlab_version: {quarticlab.__version__}"
        assert "n,R,lambda,residual" in lines
        # Header, column names, then n = 0..10.
        assert len(lines) == len(freud_config().header()) + 1 + 11

    def test_repeated_runs_are_identical(self):
        first, second = FakeArtifactWriter(), FakeArtifactWriter()

        with override_settings(ARTIFACT_WRITER=first):
            usecases.run(freud_config())
        with override_settings(ARTIFACT_WRITER=second):
            usecases.run(freud_config())

        assert first.tables == second.tables

    def test_json_format_writes_a_report(self):
        writer = FakeArtifactWriter()

        with override_settings(ARTIFACT_WRITER=writer):
            usecases.run(freud_config(format="json"))

        report = writer.reports["out/freud-trajectory.json"]
        assert report["header"]["format"] == "json"
        assert report["payload"]["method"] == "forward"
        assert len(report["payload"]["rows"]) == 11

    def test_report_without_a_table_is_json_in_either_format(self):
        writer = FakeArtifactWriter()
        config = usecases.ExperimentConfig.from_mapping(
            "kernel", {"regime": "bulk", "N": 60, "output": "out"}
        )

        with override_settings(ARTIFACT_WRITER=writer):
            summary = usecases.run(config)

        assert summary.paths == ["out/kernel-report.json"]
        payload = writer.reports["out/kernel-report.json"]["payload"]
        assert payload["regime"] == "bulk"
        assert payload["t"] == -2.0

    def test_region_sizes_apply_during_the_run_only(self, monkeypatch):
        seen = {}

        def runner(config, summary):
            seen["fractions"] = (settings.D1_FRACTION, settings.D2_FRACTION)
            return {}

        monkeypatch.setitem(usecases._RUNNERS, usecases.Command.FREUD, runner)
        with override_settings(
            ARTIFACT_WRITER=FakeArtifactWriter(), D1_FRACTION=0.25, D2_FRACTION=0.05
        ):
            usecases.run(freud_config(d1=0.2, d2=0.01))

            assert seen["fractions"] == (0.2, 0.01)
            assert (settings.D1_FRACTION, settings.D2_FRACTION) == (0.25, 0.05)

    def test_region_sizes_are_restored_when_the_run_fails(self, monkeypatch):
        def runner(config, summary):
            raise ConfigValidationError("Stopped.")

        monkeypatch.setitem(usecases._RUNNERS, usecases.Command.FREUD, runner)
        with override_settings(ARTIFACT_WRITER=FakeArtifactWriter(), D1_FRACTION=0.25):
            with pytest.raises(ConfigValidationError, match="Stopped."):
                usecases.run(freud_config(d1=0.2))

            assert settings.D1_FRACTION == 0.25


@pytest.fixture(scope="module")
def selftest_checks():
    return usecases.selftest()


class TestSelftest:
    def test_passes(self, selftest_checks):
        failed = [str(check) for check in selftest_checks if not check.passed]

        assert failed == []
        assert len(selftest_checks) == 9

    def test_perturbed_recurrence_fails_the_lax_check(self):
        checks = {check.name: check for check in usecases.selftest(perturb_R=1e-3)}

        assert not checks["lax compatibility"].passed
        assert checks["orthonormality"].passed

    def test_reduced_nodes_fail_orthonormality(self):
        checks = {check.name: check for check in usecases.selftest(reduced_nodes=True)}

        assert not checks["orthonormality"].passed

    def test_run_reports_the_outcome(self):
        writer = FakeArtifactWriter()
        config = usecases.ExperimentConfig.from_mapping(
            "selftest", {"output": "out", "perturb_R": 1e-3}
        )

        with override_settings(ARTIFACT_WRITER=writer):
            summary = usecases.run(config)

        assert not summary.passed
        assert summary.paths == ["out/selftest-checks.csv"]
        assert "name,observed,bound,passed" in writer.tables["out/selftest-checks.csv"]
