from __future__ import annotations

import abc
from collections.abc import Mapping, Sequence
from typing import Any


class AbstractArtifactWriter(abc.ABC):
    """
    Abstraction around writing experiment artifacts (tables and reports) to disk.
    """

    @abc.abstractmethod
    def write_table(
        self,
        path: str,
        header: Mapping[str, Any],
        columns: Sequence[str],
        rows: Sequence[Sequence[float]],
    ) -> None:
        """
        Write a table of reals.

        Args:
            path: Destination of the table.
            header: Config echo, written ahead of the column names as key/value lines.
            columns: Column names.
            rows: One sequence of values per row, in column order.
        """
        raise NotImplementedError

    @abc.abstractmethod
    def write_report(self, path: str, header: Mapping[str, Any], payload: Any) -> None:
        """
        Write a structured report, with the config echo stored under the "header" key.
        """
        raise NotImplementedError
