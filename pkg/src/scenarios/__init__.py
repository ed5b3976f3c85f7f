import importlib
import logging
from typing import Callable

from errors import ScenarioError

logger = logging.getLogger("caving.scenarios")

EXTENSIONS = ("scenarios.caving", "scenarios.compression")


class ScenarioRegistry:
    """Maps a scenario kind to the builder of its loading program."""

    def __init__(self):
        self._builders: dict[str, Callable] = {}

    def register(self, kind: str, builder: Callable) -> None:
        if kind in self._builders:
            raise ScenarioError(f"scenario kind {kind!r} registered twice")
        self._builders[kind] = builder

    def load_extension(self, name: str) -> None:
        module = importlib.import_module(name)
        setup = getattr(module, "setup", None)
        if setup is None:
            raise ScenarioError(f"extension {name!r} has no setup function")
        setup(self)

    @property
    def kinds(self) -> tuple[str, ...]:
        return tuple(sorted(self._builders))

    def build(self, scenario):
        try:
            builder = self._builders[scenario.scenario.kind]
        except KeyError:
            raise ScenarioError(
                f"unknown scenario kind {scenario.scenario.kind!r} (accepted: {', '.join(self.kinds)})"
            ) from None
        return builder(scenario)


def default_registry() -> ScenarioRegistry:
    registry = ScenarioRegistry()
    for name in EXTENSIONS:
        logger.debug(f"📦 Loading {name}...")
        registry.load_extension(name)
        logger.debug(f"✅ Loaded {name}.")
    return registry
