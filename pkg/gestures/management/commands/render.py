from pathlib import Path

from gestures.annotation import render_inline
from gestures.cli import GestureCommand, dumps
from gestures.sidecar import read_sidecar


class Command(GestureCommand):
    help = "Convert a sidecar file back to inline-annotated text."

    def add_command_arguments(self, parser):
        parser.add_argument("path", type=Path, help="Sidecar file.")
        parser.add_argument("--output", type=Path, help="Write the annotated lines here.")

    def run(self, config, **options):
        lines = [render_inline(record.annotated) for record in read_sidecar(options["path"])]
        if options.get("output") is not None:
            Path(options["output"]).write_text("".join(f"{line}\n" for line in lines), encoding="utf-8")
        for line in lines:
            self.emit(dumps({"output": line}) if config.structured else line)
