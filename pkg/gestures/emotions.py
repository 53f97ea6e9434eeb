from enum import StrEnum


class EmotionCategory(StrEnum):
    """Emotion clusters used when scoring labels; ``special`` covers gestures
    with a meaning of their own (bunny ears, thumbs down)."""

    JOY = "joy"
    ANGER = "anger"
    SORROW = "sorrow"
    FEAR = "fear"
    SPECIAL = "special"
