"""Service configuration.

Loaded from a JSON file (path given on the command line or via the
``MIRAGE_CONFIG`` environment variable); CLI flags override file values.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from pathlib import Path

from .backends import BackendConfig
from .errors import ConfigError

CONFIG_ENV_VAR = "MIRAGE_CONFIG"


@dataclass
class ServiceConfig:
    store_dir: str = ""
    blob_dir: str = ""
    host: str = "127.0.0.1"
    port: int = 8000
    default_k: int = 5
    cors_origins: list[str] = field(default_factory=list)
    backend: BackendConfig = field(default_factory=BackendConfig)

    def __post_init__(self):
        if not 1 <= self.port <= 65535:
            raise ConfigError(f"port must be in [1, 65535], got {self.port}")
        if self.default_k < 1:
            raise ConfigError(f"default_k must be >= 1, got {self.default_k}")

    @classmethod
    def from_dict(cls, data: dict) -> "ServiceConfig":
        backend_data = data.get("backend", {})
        if not isinstance(backend_data, dict):
            raise ConfigError("'backend' must be an object")
        known = {f for f in BackendConfig.__dataclass_fields__}
        unknown = set(backend_data) - known
        if unknown:
            raise ConfigError(f"unknown backend settings: {sorted(unknown)}")
        backend = BackendConfig(**backend_data)
        return cls(
            store_dir=data.get("store_dir", ""),
            blob_dir=data.get("blob_dir", ""),
            host=data.get("host", "127.0.0.1"),
            port=int(data.get("port", 8000)),
            default_k=int(data.get("default_k", 5)),
            cors_origins=list(data.get("cors_origins", [])),
            backend=backend,
        )

    @classmethod
    def from_file(cls, path: str | Path) -> "ServiceConfig":
        try:
            with open(path, "r", encoding="utf-8") as fh:
                data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigError(f"{path}: top level must be an object")
        return cls.from_dict(data)

    @classmethod
    def from_env(cls) -> "ServiceConfig":
        path = os.environ.get(CONFIG_ENV_VAR)
        if not path:
            raise ConfigError(
                f"no config file given and {CONFIG_ENV_VAR} is not set"
            )
        return cls.from_file(path)

    def validate_paths(self, store_required: bool = True) -> None:
        """Check that configured paths exist (a store may be absent only
        when the service is about to ingest one)."""
        if store_required:
            store = Path(self.store_dir)
            if not self.store_dir or not store.is_dir():
                raise ConfigError(f"store_dir does not exist: {self.store_dir!r}")
