import logging
from pathlib import Path

from django.core.management.base import CommandError

from gestures.annotation import AnnotatedText
from gestures.cli import EXIT_DOMAIN_ERROR, EXIT_USAGE_ERROR, GestureCommand, build_chain, dumps
from gestures.dataset import ingest_corpus
from gestures.evaluation import format_fraction
from gestures.exceptions import ChainError
from gestures.intent_chain import TokenUsage
from gestures.sidecar import CaseUsage, SidecarRecord, label_to_dict, write_sidecar

logger = logging.getLogger(__name__)


class Command(GestureCommand):
    help = "Label text with gestures through the intent chain."

    uses_backend = True

    def add_command_arguments(self, parser):
        parser.add_argument("text", nargs="?", help="Text to label.")
        parser.add_argument("--file", type=Path, help="UTF-8 file; every sentence is labeled separately.")
        parser.add_argument("--output", type=Path, help="Also write the annotated lines here.")
        parser.add_argument("--sidecar", type=Path, help="Write labels and usage as a sidecar file.")

    def run(self, config, **options):
        if options.get("file") is not None:
            units = ingest_corpus(options["file"])
            if not units:
                raise CommandError(f"{options['file']} holds no text to label", returncode=EXIT_DOMAIN_ERROR)
        elif options.get("text") is not None:
            units = [options["text"]]
        else:
            raise CommandError("give a text or --file", returncode=EXIT_USAGE_ERROR)

        chain = build_chain(config, self.load_ethogram(config))
        outcomes = chain.run_batch(units, config.parallelism)

        lines = []
        records = []
        usage = TokenUsage()
        failures = 0
        for unit, outcome in zip(units, outcomes, strict=True):
            if isinstance(outcome, ChainError):
                failures += 1
                self.stderr.write(f"failed: {unit[:60]!r}: {outcome}")
                lines.append(unit)
                records.append(SidecarRecord(AnnotatedText(unit.strip())))
                if config.structured:
                    self.emit(dumps({"input": unit, "error": str(outcome)}))
                continue

            usage = usage + outcome.usage
            lines.append(outcome.output)
            records.append(
                SidecarRecord(
                    outcome.result,
                    CaseUsage(
                        latency_seconds=outcome.usage.total_seconds,
                        prompt_tokens=outcome.usage.prompt_tokens,
                        completion_tokens=outcome.usage.completion_tokens,
                    ),
                )
            )
            if config.structured:
                self.emit(
                    dumps(
                        {
                            "input": outcome.text,
                            "output": outcome.output,
                            "labels": [label_to_dict(label) for label in outcome.result.labels],
                            "reports": [report.to_dict() for report in outcome.reports],
                            "usage": outcome.usage.to_dict(),
                        }
                    )
                )

        if not config.structured:
            for line in lines:
                self.emit(line)
        if options.get("output") is not None:
            Path(options["output"]).write_text("".join(f"{line}\n" for line in lines), encoding="utf-8")
        if options.get("sidecar") is not None:
            write_sidecar(options["sidecar"], records)

        logger.info(
            "%d request(s), %d prompt and %d completion tokens, cost %s %s",
            usage.request_count,
            usage.prompt_tokens,
            usage.completion_tokens,
            format_fraction(usage.cost(chain.backend.capabilities)),
            chain.backend.capabilities.currency,
        )
        if failures:
            raise CommandError(f"{failures} of {len(units)} unit(s) failed", returncode=EXIT_DOMAIN_ERROR)
