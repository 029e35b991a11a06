from typing import Any

import yaml

from quarticlab.application.ports.configfile import AbstractConfigFileReader
from quarticlab.exceptions import ConfigValidationError


class YamlConfigFileReader(AbstractConfigFileReader):
    def read(self, path: str) -> dict[str, Any]:
        try:
            with open(path) as file:
                contents = yaml.safe_load(file)
        except OSError as error:
            raise ConfigValidationError(f"Could not read config file {path}: {error}.") from error
        except yaml.YAMLError as error:
            raise ConfigValidationError(f"Config file {path} is not valid YAML.") from error
        if contents is None:
            return {}
        if not isinstance(contents, dict):
            raise ConfigValidationError(f"Config file {path} must hold a mapping of options.")
        return {str(key).replace("-", "_"): value for key, value in contents.items()}
