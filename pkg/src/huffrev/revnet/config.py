"""Network configuration file: addresses, hex keys and freshness window.

Example::

    {
      "ttp": {"address": "127.0.0.1:7400", "key": "00ff...", "tree": "ttp.tree"},
      "rsus": [{"name": "rsu-1", "address": "127.0.0.1:7401", "key": "11ee..."}],
      "window": 1,
      "max_statement_age": 60
    }

Relative ``tree`` paths are resolved against the config file's directory.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from ..errors import HuffrevError
from ..proof import DuplexMac
from .transport import parse_address


class ConfigError(HuffrevError, ValueError):
    pass


@dataclass(frozen=True)
class NodeConfig:
    name: str
    address: str
    key: bytes
    tree: Optional[Path] = None

    @property
    def mac(self) -> DuplexMac:
        return DuplexMac(self.key)


@dataclass(frozen=True)
class NetworkConfig:
    ttp: NodeConfig
    rsus: tuple[NodeConfig, ...] = field(default_factory=tuple)
    window: int = 1
    max_statement_age: int = 60

    def rsu(self, name: str) -> NodeConfig:
        for r in self.rsus:
            if r.name == name:
                return r
        raise ConfigError(f"no rsu named {name!r} in config")

    def rsu_by_address(self, address: str) -> Optional[NodeConfig]:
        return next((r for r in self.rsus if r.address == address), None)


def _node(doc: dict, default_name: str, base: Path) -> NodeConfig:
    try:
        name = str(doc.get("name", default_name))
        address = str(doc["address"])
        parse_address(address)
        key = bytes.fromhex(doc["key"])
        if not 1 <= len(key) <= 255:
            raise ValueError("key must be 1..255 bytes")
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"node {default_name}: {exc}") from exc
    tree = doc.get("tree")
    return NodeConfig(name, address, key, (base / tree) if tree else None)


def parse_config(doc: dict, base: Path = Path(".")) -> NetworkConfig:
    if not isinstance(doc, dict) or "ttp" not in doc:
        raise ConfigError("config needs a 'ttp' section")
    ttp = _node(doc["ttp"], "ttp", base)
    rsus = tuple(_node(r, f"rsu-{i}", base) for i, r in enumerate(doc.get("rsus", [])))
    if len({r.name for r in rsus}) != len(rsus):
        raise ConfigError("rsu names must be unique")
    try:
        window = int(doc.get("window", 1))
        age = int(doc.get("max_statement_age", 60))
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc
    if window < 0 or age < 0:
        raise ConfigError("window and max_statement_age must be non-negative")
    return NetworkConfig(ttp, rsus, window, age)


def load_config(path) -> NetworkConfig:
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    return parse_config(doc, path.parent)
