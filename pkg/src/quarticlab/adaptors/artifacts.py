import csv
import json
import os
from collections.abc import Mapping, Sequence
from typing import Any

import numpy as np

from quarticlab.application.ports.artifacts import AbstractArtifactWriter


def format_real(value: Any) -> str:
    """
    Format a real with 17 significant digits, independent of locale. Labels pass through.
    """
    if isinstance(value, str):
        return value
    if isinstance(value, (int, np.integer)) and not isinstance(value, bool):
        return str(int(value))
    return f"{float(value):.17g}"


def _to_builtin(value: Any) -> Any:
    if isinstance(value, Mapping):
        return {str(key): _to_builtin(item) for key, item in value.items()}
    if isinstance(value, (list, tuple)):
        return [_to_builtin(item) for item in value]
    if isinstance(value, np.ndarray):
        return _to_builtin(value.tolist())
    if isinstance(value, np.generic):
        return value.item()
    return value


class FileSystemArtifactWriter(AbstractArtifactWriter):
    def write_table(
        self,
        path: str,
        header: Mapping[str, Any],
        columns: Sequence[str],
        rows: Sequence[Sequence[float]],
    ) -> None:
        self._ensure_directory(path)
        with open(path, "w", newline="") as file:
            for key, value in header.items():
                file.write(f"# {key}: {_to_builtin(value)}\n")
            writer = csv.writer(file, lineterminator="\n")
            writer.writerow(columns)
            for row in rows:
                writer.writerow([format_real(value) for value in row])

    def write_report(self, path: str, header: Mapping[str, Any], payload: Any) -> None:
        self._ensure_directory(path)
        document = {"header": _to_builtin(header), "payload": _to_builtin(payload)}
        with open(path, "w") as file:
            print(json.dumps(document, indent=2, sort_keys=True), file=file)

    def _ensure_directory(self, path: str) -> None:
        dirname = os.path.dirname(path)
        if dirname and not os.path.exists(dirname):
            os.makedirs(dirname)
