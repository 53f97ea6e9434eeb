from pathlib import Path

from django.core.management.base import CommandError

from gestures.cli import EXIT_DOMAIN_ERROR, GestureCommand, dumps
from gestures.ethogram import Severity, diagnose_document


class Command(GestureCommand):
    help = "Validate an ethogram document and print every diagnostic."

    def add_command_arguments(self, parser):
        parser.add_argument("path", nargs="?", type=Path, help="Document to check (default: --ethogram).")

    def run(self, config, **options):
        path = options.get("path") or config.ethogram_path
        diagnostics = diagnose_document(Path(path).read_text(encoding="utf-8"))
        errors = [d for d in diagnostics if d.severity is Severity.ERROR]

        if config.structured:
            self.emit(
                dumps(
                    {
                        "path": str(path),
                        "valid": not errors,
                        "diagnostics": [d.to_dict() for d in diagnostics],
                    }
                )
            )
        else:
            for diagnostic in diagnostics:
                self.emit(str(diagnostic))
            if not errors:
                self.emit(self.style.SUCCESS(f"{path}: ok"))

        if errors:
            raise CommandError(f"{path}: {len(errors)} error(s)", returncode=EXIT_DOMAIN_ERROR)
