import abc
from typing import Any


class AbstractConfigFileReader(abc.ABC):
    """
    Reads an experiment config file into a flat mapping of option names to values.
    """

    @abc.abstractmethod
    def read(self, path: str) -> dict[str, Any]:
        """
        Return the key/value pairs stored in the file.

        Keys use the command-line option spelling with underscores, e.g. 'n_max'.
        """
        raise NotImplementedError
