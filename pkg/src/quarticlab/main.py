from .adaptors.artifacts import FileSystemArtifactWriter
from .adaptors.configfile import YamlConfigFileReader
from .adaptors.timing import SystemClockTimer
from .application.config import settings
from .application.usecases import run, selftest

__all__ = ["run", "selftest"]

settings.configure(
    TIMER=SystemClockTimer(),
    ARTIFACT_WRITER=FileSystemArtifactWriter(),
    CONFIG_FILE_READER=YamlConfigFileReader(),
)
