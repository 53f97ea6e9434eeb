"""Shared plumbing for the gesture management commands."""

from __future__ import annotations

import json
import logging
from argparse import ArgumentParser
from dataclasses import dataclass
from pathlib import Path
from typing import Any

from django.conf import settings
from django.core.management.base import BaseCommand, CommandError

from .backends import (
    BackendCapabilities,
    ChatBackend,
    RecordingBackend,
    RemoteEndpointBackend,
    ScriptedBackend,
)
from .ethogram import Ethogram, load_ethogram
from .exceptions import SargesError
from .intent_chain import ChainConfig, IntentChain
from .prompts import CharacterProfile

logger = logging.getLogger(__name__)

BACKENDS = ("remote", "scripted")
FORMATS = ("human", "structured")

EXIT_DOMAIN_ERROR = 1
EXIT_USAGE_ERROR = 2


@dataclass(frozen=True)
class CliConfig:
    """Resolved options of one command invocation.

    Flags override settings, settings override the built-in defaults.
    """

    ethogram_path: Path
    backend: str = "scripted"
    endpoint: str = ""
    transcripts_dir: Path | None = None
    record_dir: Path | None = None
    chain: ChainConfig = ChainConfig()
    parallelism: int = 1
    output_format: str = "human"

    def __post_init__(self) -> None:
        if self.backend not in BACKENDS:
            raise CommandError(
                f"unknown backend {self.backend!r}; choose one of {', '.join(BACKENDS)}",
                returncode=EXIT_USAGE_ERROR,
            )
        if self.parallelism < 1:
            raise CommandError("--parallel must be at least 1", returncode=EXIT_USAGE_ERROR)

    @property
    def structured(self) -> bool:
        return self.output_format == "structured"

    @classmethod
    def from_options(cls, options: dict[str, Any]) -> CliConfig:
        def pick(name: str, default: Any) -> Any:
            value = options.get(name)
            return default if value is None else value

        try:
            chain = ChainConfig.from_settings(
                max_reflection_rounds=options.get("reflect"),
                max_labels_per_sentence=options.get("max_per_sentence"),
                backend_timeout=options.get("timeout"),
            )
        except ValueError as exc:
            raise CommandError(str(exc), returncode=EXIT_USAGE_ERROR) from exc

        record_dir = options.get("record")
        return cls(
            ethogram_path=Path(pick("ethogram", settings.SARGES_ETHOGRAM_PATH)),
            backend=pick("backend", settings.SARGES_BACKEND),
            endpoint=pick("endpoint", settings.SARGES_ENDPOINT),
            transcripts_dir=Path(pick("transcripts", settings.SARGES_TRANSCRIPTS_DIR)),
            record_dir=Path(record_dir) if record_dir else None,
            chain=chain,
            parallelism=pick("parallel", settings.SARGES_PARALLEL),
            output_format=pick("output_format", "human"),
        )


def build_backend(config: CliConfig) -> ChatBackend:
    capabilities = BackendCapabilities.from_settings()
    backend: ChatBackend
    if config.backend == "remote":
        if not settings.SARGES_API_KEY:
            raise CommandError(
                "the remote backend needs SARGES_API_KEY", returncode=EXIT_USAGE_ERROR
            )
        backend = RemoteEndpointBackend(config.endpoint, settings.SARGES_API_KEY, capabilities)
    else:
        if config.transcripts_dir is None or not config.transcripts_dir.is_dir():
            raise CommandError(
                f"transcript directory {config.transcripts_dir} does not exist",
                returncode=EXIT_USAGE_ERROR,
            )
        backend = ScriptedBackend(config.transcripts_dir, capabilities)
    if config.record_dir is not None:
        backend = RecordingBackend(backend, config.record_dir)
    return backend


def build_chain(config: CliConfig, ethogram: Ethogram) -> IntentChain:
    return IntentChain(
        ethogram,
        build_backend(config),
        CharacterProfile.from_settings(),
        config.chain,
    )


def dumps(data: Any) -> str:
    return json.dumps(data, ensure_ascii=False, sort_keys=True)


class GestureCommand(BaseCommand):
    """Base for the toolkit commands.

    Maps domain errors to exit status 1 and I/O errors to exit status 2.
    Subclasses implement ``run`` and may set ``uses_backend``.
    """

    requires_system_checks: list[str] = []
    uses_backend = False

    def add_arguments(self, parser: ArgumentParser) -> None:
        parser.add_argument("--ethogram", type=Path, help="Ethogram document (default: SARGES_ETHOGRAM_PATH).")
        parser.add_argument(
            "--format",
            dest="output_format",
            choices=FORMATS,
            default="human",
            help="Human-readable tables or one JSON document per line.",
        )
        if self.uses_backend:
            parser.add_argument("--backend", choices=BACKENDS, help="Chat backend kind.")
            parser.add_argument("--endpoint", help="Chat-completion URL for the remote backend.")
            parser.add_argument("--transcripts", type=Path, help="Transcript directory for the scripted backend.")
            parser.add_argument("--record", type=Path, help="Also write every exchange as a transcript here.")
            parser.add_argument("--reflect", type=int, help="Maximum self-reflection rounds (0 disables).")
            parser.add_argument("--max-per-sentence", type=int, help="Gesture limit per sentence.")
            parser.add_argument("--parallel", type=int, help="Concurrent chain runs.")
            parser.add_argument("--timeout", type=float, help="Backend timeout in seconds.")
        self.add_command_arguments(parser)

    def add_command_arguments(self, parser: ArgumentParser) -> None:
        pass

    def load_ethogram(self, config: CliConfig) -> Ethogram:
        return load_ethogram(config.ethogram_path)

    def emit(self, line: str) -> None:
        self.stdout.write(line)

    def handle(self, *args: Any, **options: Any) -> None:
        config = CliConfig.from_options(options)
        try:
            self.run(config, **options)
        except CommandError:
            raise
        except SargesError as exc:
            raise CommandError(str(exc), returncode=EXIT_DOMAIN_ERROR) from exc
        except OSError as exc:
            raise CommandError(str(exc), returncode=EXIT_USAGE_ERROR) from exc

    def run(self, config: CliConfig, **options: Any) -> None:
        raise NotImplementedError
