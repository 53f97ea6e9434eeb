from pathlib import Path

from gestures.cli import GestureCommand, build_chain, dumps
from gestures.dataset import DatasetBuilder, dataset_stats, format_stats, ingest_corpus, write_dataset


class Command(GestureCommand):
    help = "Label a corpus sentence by sentence and write the training dataset."

    uses_backend = True

    def add_command_arguments(self, parser):
        parser.add_argument("corpus", type=Path, help="UTF-8 corpus file.")
        parser.add_argument("--output", type=Path, required=True, help="Dataset file to write.")

    def run(self, config, **options):
        ethogram = self.load_ethogram(config)
        units = ingest_corpus(options["corpus"])
        build = DatasetBuilder(build_chain(config, ethogram), config.parallelism).build(units)
        write_dataset(options["output"], build.records)

        for skip in build.skipped:
            self.stderr.write(self.style.WARNING(f"skipped unit {skip.index}: {skip.error}"))

        stats = dataset_stats(build.records, ethogram)
        if config.structured:
            summary = stats.to_dict()
            summary["skipped"] = [skip.index for skip in build.skipped]
            self.emit(dumps(summary))
        else:
            self.emit(format_stats(stats))
            self.emit(f"skipped: {len(build.skipped)}")
