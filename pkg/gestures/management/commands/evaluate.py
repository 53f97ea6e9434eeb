import json
from pathlib import Path

from gestures.backends import BackendCapabilities
from gestures.cli import GestureCommand, dumps
from gestures.evaluation import evaluate, format_report, load_eval_cases, report_to_dict
from gestures.exceptions import ZeroGold


class Command(GestureCommand):
    help = "Score predicted labels against gold labels with the Partial Overlap metric."

    def add_command_arguments(self, parser):
        parser.add_argument("gold", type=Path, help="Gold sidecar file.")
        parser.add_argument("predicted", type=Path, help="Predicted sidecar file, same case order.")
        parser.add_argument("--report", type=Path, help="Write the structured report here.")
        parser.add_argument("--price-in", help="Price per prompt token, e.g. 3/100000.")
        parser.add_argument("--price-out", help="Price per completion token.")

    def run(self, config, **options):
        ethogram = self.load_ethogram(config)
        inputs = load_eval_cases(options["gold"], options["predicted"])
        capabilities = BackendCapabilities.from_settings(
            input_price=options.get("price_in"),
            output_price=options.get("price_out"),
        )
        report = evaluate(inputs.cases, ethogram, inputs.timings, inputs.usage, capabilities)
        if not report.gold_total:
            raise ZeroGold()

        document = report_to_dict(report)
        if options.get("report") is not None:
            Path(options["report"]).write_text(
                json.dumps(document, ensure_ascii=False, indent=2) + "\n", encoding="utf-8"
            )
        self.emit(dumps(document) if config.structured else format_report(report))
