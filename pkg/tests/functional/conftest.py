import pytest  # type: ignore

from quarticlab.adaptors.artifacts import FileSystemArtifactWriter
from quarticlab.adaptors.configfile import YamlConfigFileReader
from quarticlab.adaptors.timing import SystemClockTimer
from quarticlab.application.config import settings


@pytest.fixture(scope="module", autouse=True)
def configure_real_adaptors():
    # Unit test modules swap in fakes; put back what the installed package wires up.
    settings.configure(
        TIMER=SystemClockTimer(),
        ARTIFACT_WRITER=FileSystemArtifactWriter(),
        CONFIG_FILE_READER=YamlConfigFileReader(),
    )
