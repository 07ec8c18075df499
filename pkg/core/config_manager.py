import json
import os
from typing import Any, Dict, Optional

import dotenv
import yaml


class ConfigurationError(Exception):
    """Exception raised for configuration-related errors."""
    pass


class ConfigManager:
    """
    Loads run configuration files and environment overrides.
    """
    def __init__(
        self,
        config_dir: Optional[str] = None,
        env_file: Optional[str] = '.env'
    ):
        """
        Initialize ConfigManager with configuration sources.

        :param config_dir: Directory containing configuration files;
            defaults to the packaged ``config`` directory
        :param env_file: Path to .env file for environment variables
        """
        if config_dir is None:
            config_dir = os.path.join(os.path.dirname(os.path.dirname(os.path.abspath(__file__))), 'config')
        self._config_dir = config_dir
        self._env_file = env_file

        if self._env_file and os.path.exists(self._env_file):
            dotenv.load_dotenv(self._env_file)

    @property
    def config_dir(self) -> str:
        return self._config_dir

    def load_config(self, config_name: str, config_type: str = 'yaml') -> Dict[str, Any]:
        """
        Load a configuration file from the config directory.

        :param config_name: Name of the configuration file (without extension),
            may contain a subdirectory such as ``presets/static``
        :param config_type: Type of configuration file (yaml or json)
        :return: Parsed configuration dictionary
        """
        file_path = os.path.join(self._config_dir, f"{config_name}.{config_type}")
        return self.load_file(file_path)

    def load_file(self, file_path: str) -> Dict[str, Any]:
        """
        Load a YAML or JSON file from an explicit path.

        :param file_path: Path with a .yaml, .yml or .json suffix
        :return: Parsed configuration dictionary
        """
        if not os.path.exists(file_path):
            raise ConfigurationError(f"Configuration file not found: {file_path}")

        suffix = os.path.splitext(file_path)[1].lower()
        try:
            with open(file_path, 'r') as f:
                if suffix in ('.yaml', '.yml'):
                    data = yaml.safe_load(f)
                elif suffix == '.json':
                    data = json.load(f)
                else:
                    raise ConfigurationError(f"Unsupported configuration type: {suffix}")
        except (yaml.YAMLError, json.JSONDecodeError) as e:
            raise ConfigurationError(f"Error parsing configuration file: {e}")

        if data is None:
            return {}
        if not isinstance(data, dict):
            raise ConfigurationError(f"Configuration file {file_path} must hold a mapping")
        return data

    def get_env(self, env_name: str, default: Optional[str] = None) -> Optional[str]:
        """
        Retrieve an environment variable.

        :param env_name: Name of the environment variable
        :param default: Default value if environment variable is not set
        :return: Value of the environment variable
        """
        return os.environ.get(env_name, default)

    def env_overrides(self, prefix: str = 'HARDPHASE_') -> Dict[str, Any]:
        """
        Collect ``PREFIX_SECTION__KEY=value`` variables into a nested dict.

        Values are parsed as YAML scalars so numbers and booleans keep
        their type.

        :param prefix: Variable prefix
        :return: Nested override dictionary
        """
        overrides: Dict[str, Any] = {}
        for name, raw in os.environ.items():
            if not name.startswith(prefix):
                continue
            path = [part.lower() for part in name[len(prefix):].split('__') if part]
            if not path:
                continue
            try:
                value = yaml.safe_load(raw)
            except yaml.YAMLError:
                value = raw
            node = overrides
            for part in path[:-1]:
                node = node.setdefault(part, {})
            node[path[-1]] = value
        return overrides

    def validate_config(self, config: Dict[str, Any], schema: Dict[str, Any], path: str = '') -> bool:
        """
        Validate configuration against a nested schema of expected types.

        :param config: Configuration dictionary to validate
        :param schema: Mapping of key to type, tuple of types, or sub-schema
        :param path: Dotted prefix used in error messages
        :return: True when valid
        """
        for key, expected in schema.items():
            dotted = f"{path}{key}"
            if key not in config:
                raise ConfigurationError(f"Missing required configuration key: {dotted}")
            value = config[key]
            if isinstance(expected, dict):
                if not isinstance(value, dict):
                    raise ConfigurationError(f"Configuration key {dotted} must be a mapping")
                self.validate_config(value, expected, path=f"{dotted}.")
                continue
            if isinstance(value, bool) and bool not in (expected if isinstance(expected, tuple) else (expected,)):
                raise ConfigurationError(f"Invalid type for {dotted}: got bool")
            if not isinstance(value, expected):
                raise ConfigurationError(
                    f"Invalid type for {dotted}: expected {expected}, got {type(value).__name__}"
                )
        return True
