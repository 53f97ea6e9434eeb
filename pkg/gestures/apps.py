from django.apps import AppConfig


class GesturesConfig(AppConfig):
    name = "gestures"
    verbose_name = "Co-speech gesture labeling"
