from django.core.management.base import CommandError

from gestures.cli import EXIT_USAGE_ERROR, GestureCommand, dumps
from gestures.ethogram import search_by_keyword
from gestures.serializers import EMOTION_CHOICES


class Command(GestureCommand):
    help = "Look up ethogram entries by id, keyword, intent category or emotion."

    def add_command_arguments(self, parser):
        group = parser.add_mutually_exclusive_group()
        group.add_argument("--id", dest="gesture_id", help="Canonical (A-15) or flat (15) id.")
        group.add_argument("--keyword", help="Trigger word or phrase.")
        group.add_argument("--category", help="Intent category code, A to D.")
        group.add_argument("--emotion", choices=EMOTION_CHOICES, help="Emotion category.")

    def run(self, config, **options):
        ethogram = self.load_ethogram(config)
        if options.get("gesture_id"):
            entries = [ethogram.lookup(options["gesture_id"])]
        elif options.get("keyword") is not None:
            entries = search_by_keyword(ethogram, options["keyword"])
        elif options.get("category"):
            entries = ethogram.by_category(options["category"])
        elif options.get("emotion"):
            entries = ethogram.by_emotion(options["emotion"])
        else:
            raise CommandError(
                "give one of --id, --keyword, --category or --emotion", returncode=EXIT_USAGE_ERROR
            )

        for entry in entries:
            if config.structured:
                self.emit(dumps(entry.to_document()))
            else:
                self.emit(
                    f"{entry.id} ({entry.flat_id}) {entry.name} "
                    f"[{entry.emotion_category}] {entry.sub_intent}"
                )
