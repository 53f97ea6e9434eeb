"""Prompt staging for the intent chain."""

from __future__ import annotations

from dataclasses import dataclass

from django.conf import settings

from .backends import ChatMessage
from .ethogram import Ethogram, guideline_digest
from .exceptions import EmptyText

Prompt = tuple[ChatMessage, ...]

CHECK_NAMES = ("context_match", "keyword_match", "emotion_consistency")


@dataclass(frozen=True)
class CharacterProfile:
    """The virtual agent whose speech is being labeled."""

    name: str
    persona_description: str
    speaking_style: str = ""

    def __post_init__(self) -> None:
        if not self.persona_description.strip():
            raise ValueError("a character profile needs a persona description")

    @classmethod
    def from_settings(cls) -> CharacterProfile:
        return cls(
            name=settings.SARGES_PROFILE_NAME,
            persona_description=settings.SARGES_PROFILE_PERSONA,
            speaking_style=settings.SARGES_PROFILE_STYLE,
        )


def _profile_message(profile: CharacterProfile) -> ChatMessage:
    lines = [
        f"You are annotating the speech of {profile.name or 'a virtual agent'}.",
        f"Character profile: {profile.persona_description}",
    ]
    if profile.speaking_style:
        lines.append(f"Speaking style: {profile.speaking_style}")
    lines.append("Choose gestures this character would believably make while speaking.")
    return ChatMessage("system", "\n".join(lines))


def build_cot_prompt(text: str, profile: CharacterProfile, e: Ethogram) -> Prompt:
    """Stage the chain-of-thought labeling request.

    The user message walks through theme and intent, keywords, the gesture
    guidelines and the output format, then gives the text.
    """
    if not text.strip():
        raise EmptyText("cannot label an empty text")
    guidelines = "\n".join(guideline_digest(e))
    body = f"""Let's work through this step by step.

Step 1: Clarify the theme of the conversation and the speaker's primary intent.

Step 2: Based on that intent, extract the keywords of the text that a speaker would emphasize with a gesture.

Step 3: Considering the character's personality, select suitable gestures for those keywords from the gesture guidelines below. Each line reads: id | name | guideline | keywords.

{guidelines}

Step 4: Output the text with each selected gesture inserted directly before its keyword, written as (id: <gesture id>, description: <gesture name>). Use no more than two gestures in a single sentence. Do not change any other character of the text. Reply with the annotated text only.

Text:
{text}"""
    return (_profile_message(profile), ChatMessage("user", body))


def build_keyword_prompt(text: str, profile: CharacterProfile) -> Prompt:
    """Ask for the keywords a gesture should accompany, as exact substrings."""
    if not text.strip():
        raise EmptyText("cannot extract keywords from an empty text")
    body = f"""Identify the theme and the speaker's primary intent, then list the keywords of the text below that a gesture should accompany.

Copy every keyword exactly as it appears in the text. Reply with one keyword per line and nothing else.

Text:
{text}"""
    return (_profile_message(profile), ChatMessage("user", body))


def build_reflection_prompt(
    text: str,
    annotated: str,
    profile: CharacterProfile,
    e: Ethogram,
    findings: list[str],
    max_labels_per_sentence: int,
    round_number: int = 1,
    max_rounds: int = 1,
) -> Prompt:
    """Ask the model to review its own annotation against the reflection rules.

    Each round number yields its own request digest.
    """
    guidelines = "\n".join(guideline_digest(e))
    issues = "\n".join(f"- {finding}" for finding in findings) if findings else "- none found"
    checks = "\n".join(f"{name}: pass|fail - <reason>" for name in CHECK_NAMES)
    body = f"""Reflection round {round_number} of {max_rounds}. Review the gesture annotation below and revise it where the rules are not met.

Semantic relevance:
(i) context_match: do the gestures suit the speaker's identity, the theme and the setting, e.g. open gestures in positive contexts and composed postures in serious discussions?
(ii) keyword_match: does each gesture semantically match the keyword it precedes?
(iii) emotion_consistency: do the gestures fit the emotional tone, e.g. faster movements for exciting or joyful topics?

Action relevance:
(i) positional consistency: each gesture must sit directly before its keyword.
(ii) moderation: gestures must not be too frequent, no more than {max_labels_per_sentence} in a single sentence.

Automatic checks of the current annotation:
{issues}

Gesture guidelines (id | name | guideline | keywords):
{guidelines}

Original text:
{text}

Current annotation:
{annotated}

Reply with one verdict line per semantic check, in this form:
{checks}
then a line containing REVISED:, then the revised annotated text. Do not change any other character of the text."""
    return (_profile_message(profile), ChatMessage("user", body))


def retry_messages(prompt: Prompt, previous_reply: str, attempt: int) -> Prompt:
    """Follow-up turn after a reply that could not be parsed."""
    notice = (
        f"Attempt {attempt}: your previous reply could not be read as the annotated text. "
        "Reply again with the original text and the inserted gesture markers only, "
        "formatted as (id: <gesture id>, description: <gesture name>)."
    )
    return (*prompt, ChatMessage("assistant", previous_reply), ChatMessage("user", notice))
