"""Wiring: one place that assembles stores, executor, and gate.

Every surface (CLI, HTTP service, tests) builds an Engine and reaches the
executor only through ``engine.gate.dispatch``.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from pathlib import Path

from schemagate.adapters import AdapterRegistry, builtin_adapters
from schemagate.datasets import DatasetStore
from schemagate.errors import StorageError
from schemagate.executor import Executor
from schemagate.gate import Gate
from schemagate.ids import Clock, IdSource
from schemagate.planner import Planner
from schemagate.registry import ENV_REGISTRY_DIR, Registry
from schemagate.runs import ENV_RUN_DIR, RunStore


@dataclass
class EngineConfig:
    registry_dir: str | None = None
    run_dir: str | None = None
    seed: int | None = 0
    auto_approve: bool = False
    max_workers: int = 4

    def resolved_registry_dir(self) -> Path:
        value = self.registry_dir or os.environ.get(ENV_REGISTRY_DIR)
        if not value:
            raise StorageError(f"no registry directory configured ({ENV_REGISTRY_DIR} unset)")
        return Path(value)

    def resolved_run_dir(self) -> Path:
        value = self.run_dir or os.environ.get(ENV_RUN_DIR)
        if not value:
            raise StorageError(f"no run directory configured ({ENV_RUN_DIR} unset)")
        return Path(value)


class Engine:
    """The assembled system behind every surface."""

    def __init__(
        self,
        config: EngineConfig,
        planner: Planner | None = None,
        clock: Clock | None = None,
        ids: IdSource | None = None,
        adapters: AdapterRegistry | None = None,
    ):
        self.config = config
        self.clock = clock or Clock()
        self.ids = ids or IdSource()
        self.registry = Registry(config.resolved_registry_dir(), clock=self.clock)
        self.datasets = DatasetStore(config.resolved_registry_dir(), ids=self.ids)
        self.run_store = RunStore(config.resolved_run_dir())
        self.adapters = adapters or builtin_adapters(self.datasets, seed=config.seed or 0)
        self.executor = Executor(
            self.run_store,
            self.adapters,
            self.registry,
            clock=self.clock,
            ids=self.ids,
            seed=config.seed,
            max_workers=config.max_workers,
        )
        self.gate = Gate(
            registry=self.registry,
            datasets=self.datasets,
            executor=self.executor,
            planner=planner,
            clock=self.clock,
            ids=self.ids,
            auto_approve=config.auto_approve,
        )

    def integrity_scan(self) -> list[str]:
        return self.registry.verify_integrity()

    def shutdown(self) -> None:
        self.executor.shutdown()
