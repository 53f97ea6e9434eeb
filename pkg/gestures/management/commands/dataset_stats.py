from pathlib import Path

from gestures.cli import GestureCommand, dumps
from gestures.dataset import dataset_stats, format_stats, read_dataset


class Command(GestureCommand):
    help = "Summarize a dataset file."

    def add_command_arguments(self, parser):
        parser.add_argument("path", type=Path, help="Dataset file.")

    def run(self, config, **options):
        stats = dataset_stats(read_dataset(options["path"]), self.load_ethogram(config))
        self.emit(dumps(stats.to_dict()) if config.structured else format_stats(stats))
