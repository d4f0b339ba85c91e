"""Layered configuration: CLI flag > environment > config file > default.

Config files are TOML or JSON with one section per subsystem, e.g.

    [service]
    alert_threshold = 0.5

    [clinical.sirs]
    hr_high_bpm = 90

Environment overrides use the SEPSERVE_ prefix: SEPSERVE_SERVICE_ALERT_THRESHOLD.
"""

from __future__ import annotations

import json
import os
from pathlib import Path
from typing import Any, Callable, Mapping, Optional, Union

from sepserve.records.tables import ClinicalConfig

ENV_PREFIX = "SEPSERVE_"


def load_config_file(path: Union[str, Path]) -> dict:
    path = Path(path)
    raw = path.read_bytes()
    if path.suffix.lower() == ".json":
        return json.loads(raw)
    try:
        import tomllib  # Python >= 3.11
    except ModuleNotFoundError:
        import tomli as tomllib
    return tomllib.loads(raw.decode("utf-8"))


def _cast_bool(value: str) -> bool:
    return value.strip().lower() in ("1", "true", "yes", "on")


class ConfigStack:
    """Resolves one setting through the documented precedence chain."""

    def __init__(
        self,
        file_config: Optional[dict] = None,
        env: Optional[Mapping[str, str]] = None,
    ):
        self.file_config = file_config or {}
        self.env = env if env is not None else os.environ

    def get(
        self,
        section: str,
        key: str,
        default: Any = None,
        cast: Optional[Callable[[str], Any]] = None,
    ) -> Any:
        env_key = f"{ENV_PREFIX}{section}_{key}".upper()
        if env_key in self.env:
            raw = self.env[env_key]
            if cast is bool:
                return _cast_bool(raw)
            return cast(raw) if cast else raw
        section_cfg = self.file_config.get(section, {})
        if key in section_cfg:
            return section_cfg[key]
        return default

    def resolve(
        self,
        flag_value: Any,
        section: str,
        key: str,
        default: Any = None,
        cast: Optional[Callable[[str], Any]] = None,
    ) -> Any:
        if flag_value is not None:
            return flag_value
        return self.get(section, key, default, cast)

    def clinical(self) -> ClinicalConfig:
        return ClinicalConfig.from_dict(self.file_config.get("clinical", {}))
