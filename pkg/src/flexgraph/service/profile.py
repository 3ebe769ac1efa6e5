"""Deployment profiles: pick a store, an engine, and a catalog, and the
stack composes itself accordingly."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Union

from ..errors import ConfigError

STORE_KINDS = ("immutable", "mvcc", "archive")
ENGINE_KINDS = ("batch", "oltp")


@dataclass
class Profile:
    store_kind: str = "immutable"
    csv_spec: Optional[str] = None
    archive_dir: Optional[str] = None
    engine: str = "batch"
    shards: int = 1
    catalog_k: int = 3
    catalog_path: Optional[str] = None
    build_catalog: bool = True
    port: int = 7687
    allow_updates: Optional[bool] = None
    base_dir: Path = field(default_factory=Path)

    def __post_init__(self):
        if self.store_kind not in STORE_KINDS:
            raise ConfigError(f"unknown store kind {self.store_kind!r}")
        if self.engine not in ENGINE_KINDS:
            raise ConfigError(f"unknown engine kind {self.engine!r}")
        if self.shards < 1:
            raise ConfigError("shards must be >= 1")
        if (self.csv_spec is None) == (self.archive_dir is None):
            raise ConfigError("store.source needs exactly one of "
                              "csv_spec | archive_dir")
        if self.allow_updates is None:
            self.allow_updates = self.store_kind == "mvcc"
        elif self.allow_updates and self.store_kind != "mvcc":
            raise ConfigError("updates require the mvcc store "
                              f"(store is {self.store_kind!r})")

    @staticmethod
    def from_json(doc: dict, base_dir: Union[str, Path] = ".") -> "Profile":
        store = doc.get("store", {})
        source = store.get("source", {})
        engine = doc.get("engine", {})
        catalog = doc.get("catalog", {})
        server = doc.get("server", {})
        return Profile(
            store_kind=store.get("kind", "immutable"),
            csv_spec=source.get("csv_spec"),
            archive_dir=source.get("archive_dir"),
            engine=engine.get("kind", "batch"),
            shards=int(engine.get("shards", 1)),
            catalog_k=int(catalog.get("k", 3)),
            catalog_path=catalog.get("path"),
            build_catalog=bool(catalog.get("build", True)),
            port=int(server.get("port", 7687)),
            allow_updates=server.get("allow_updates"),
            base_dir=Path(base_dir),
        )


def load_profile(path: Union[str, Path]) -> Profile:
    p = Path(path)
    try:
        doc = json.loads(p.read_text())
    except FileNotFoundError:
        raise ConfigError(f"profile not found: {p}") from None
    except json.JSONDecodeError as e:
        raise ConfigError(f"bad profile JSON: {e}") from None
    return Profile.from_json(doc, p.parent)
