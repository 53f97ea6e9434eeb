import json
from pathlib import Path

from gestures.cli import GestureCommand, dumps
from gestures.evaluation import compare_reports, format_delta, report_from_dict, report_to_dict
from gestures.exceptions import MalformedReport


def _load(path):
    try:
        return report_from_dict(json.loads(Path(path).read_text(encoding="utf-8")))
    except json.JSONDecodeError as exc:
        raise MalformedReport(f"{path}: invalid JSON: {exc.msg}") from exc


class Command(GestureCommand):
    help = "Compare two stored evaluation reports side by side."

    def add_command_arguments(self, parser):
        parser.add_argument("a", type=Path, help="Baseline report.")
        parser.add_argument("b", type=Path, help="Report compared against the baseline.")

    def run(self, config, **options):
        a = _load(options["a"])
        b = _load(options["b"])
        table = compare_reports(a, b)
        if config.structured:
            self.emit(
                dumps(
                    {
                        "a": report_to_dict(a),
                        "b": report_to_dict(b),
                        "partial_overlap_delta": format_delta(
                            b.partial_overlap_exact - a.partial_overlap_exact
                        ),
                    }
                )
            )
        else:
            self.emit(table)
