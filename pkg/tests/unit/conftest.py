import pytest  # type: ignore

from quarticlab.application.config import settings
from tests.adaptors.artifacts import FakeArtifactWriter
from tests.adaptors.configfile import FakeConfigFileReader
from tests.adaptors.timing import FakeTimer


@pytest.fixture(scope="module", autouse=True)
def configure_unit_tests():
    settings.configure(
        TIMER=FakeTimer(),
        ARTIFACT_WRITER=FakeArtifactWriter(),
        CONFIG_FILE_READER=FakeConfigFileReader(),
    )
