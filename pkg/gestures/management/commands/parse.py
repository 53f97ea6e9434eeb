from pathlib import Path

from gestures.annotation import parse_inline
from gestures.cli import GestureCommand, dumps
from gestures.exceptions import AnnotationError, MalformedRecord
from gestures.sidecar import to_record, write_sidecar


class Command(GestureCommand):
    help = "Convert inline-annotated text, one unit per line, to the sidecar format."

    def add_command_arguments(self, parser):
        parser.add_argument("path", type=Path, help="UTF-8 file of annotated lines.")
        parser.add_argument("--output", type=Path, help="Write the sidecar file here.")

    def run(self, config, **options):
        annotated = []
        with Path(options["path"]).open(encoding="utf-8") as handle:
            for line_number, line in enumerate(handle, start=1):
                line = line.rstrip("\r\n")
                if not line.strip():
                    continue
                try:
                    annotated.append(parse_inline(line))
                except AnnotationError as exc:
                    raise MalformedRecord(str(exc), line_number) from exc

        if options.get("output") is not None:
            write_sidecar(options["output"], annotated)

        for item in annotated:
            if config.structured:
                self.emit(dumps(to_record(item)))
                continue
            self.emit(item.clean_text)
            for label in item.labels:
                self.emit(
                    f"  {label.gesture_id:<6} @{label.start_char}+{label.duration_chars} "
                    f"{item.label_text(label)!r} {label.description}".rstrip()
                )
