from typing import Dict, List, Optional
import json
import logging
import os

logger = logging.getLogger(__name__)


class SchemaVersioner:
    """
    Tracks the field lists of the output schemas (monitor records,
    containers). A schema may only grow: a new version must keep every
    field of the previous one in the same order.
    """

    def __init__(self, version_file: str = 'schema_versions.json', directory: str = 'migrations'):
        self.version_file = os.path.join(directory, version_file)
        self.versions = self._load_versions()

    def _load_versions(self) -> Dict[str, Dict[str, List[str]]]:
        """Load registered schemas from file."""
        if os.path.exists(self.version_file):
            with open(self.version_file, 'r') as f:
                return json.load(f)
        return {}

    def _save_versions(self):
        """Save registered schemas to file."""
        directory = os.path.dirname(self.version_file)
        if directory:
            os.makedirs(directory, exist_ok=True)
        with open(self.version_file, 'w') as f:
            json.dump(self.versions, f, indent=2)

    def register_schema(self, schema_name: str, version: int, fields: List[str]):
        """
        Register a schema version with its ordered fields.

        :param schema_name: Name of the schema
        :param version: Version number
        :param fields: Ordered field names
        :raises ValueError: the fields drop or reorder fields of the latest version
        """
        history = self.versions.setdefault(schema_name, {})
        latest = self.latest_version(schema_name)
        if latest is not None:
            previous = history[str(latest)]
            if version < latest:
                raise ValueError(f"Schema {schema_name} is already at version {latest}")
            if not self.is_append_only(previous, fields):
                raise ValueError(f"Schema {schema_name} v{version} does not extend v{latest}")
            if version == latest and previous != list(fields):
                raise ValueError(f"Schema {schema_name} v{version} is registered with other fields")
        history[str(version)] = list(fields)
        self._save_versions()
        logger.debug(f"Registered {schema_name} v{version} with {len(fields)} fields")

    def latest_version(self, schema_name: str) -> Optional[int]:
        history = self.versions.get(schema_name)
        if not history:
            return None
        return max(int(v) for v in history)

    def get_schema_fields(self, schema_name: str, version: Optional[int] = None) -> Optional[List[str]]:
        """
        Fields of a schema version, the latest if none is given.

        :return: Ordered fields or None if not found
        """
        if version is None:
            version = self.latest_version(schema_name)
        if version is None:
            return None
        return self.versions.get(schema_name, {}).get(str(version))

    @staticmethod
    def is_append_only(old_fields: List[str], new_fields: List[str]) -> bool:
        """True when ``new_fields`` starts with ``old_fields``."""
        return list(new_fields[:len(old_fields)]) == list(old_fields)

    def is_compatible(self, schema_name: str, fields: List[str]) -> bool:
        """
        Check whether a record with ``fields`` can be read by consumers of
        the latest registered version.
        """
        latest = self.get_schema_fields(schema_name)
        if latest is None:
            return False
        return self.is_append_only(latest, fields)
