from __future__ import annotations

from typing import Any


class Settings:
    """
    Process-wide registry of ports and numerical defaults.

    Read a setting as an attribute (settings.TIMER); change it with configure().
    """

    def __init__(self) -> None:
        self._config: dict[str, Any] = {}

    def configure(self, **config_dict: Any) -> None:
        self._config.update(config_dict)

    def __getattr__(self, name: str) -> Any:
        if name.startswith("_"):
            raise AttributeError(name)
        try:
            return self._config[name]
        except KeyError:
            raise AttributeError(f"No setting named {name}; configure it first.") from None

    def copy(self) -> Settings:
        new_instance = self.__class__()
        new_instance.configure(**self._config)
        return new_instance


settings = Settings()

# Numerical defaults. Ports (TIMER, ARTIFACT_WRITER, CONFIG_FILE_READER) are wired in main.py.
settings.configure(
    QUADRATURE_TOL=1e-13,
    ORTHOGONALITY_TOL=1e-8,
    EXTENDED_PRECISION_GRAM=False,
    GL_NODES_PER_PANEL=20,
    VARIATIONAL_PADDING=40,
    MAX_NEWTON_ITERATIONS=200,
    HM_RICHARDSON=False,
    PHI_HIGHER_ORDER_INIT=True,
    CRITICAL_REGION_S_MAX=1.5,
    D1_FRACTION=0.25,
    D2_FRACTION=0.05,
)
