import threading
from collections.abc import Callable
from pathlib import Path

import pytest
from django.conf import settings

from gestures.backends import BackendCapabilities, ChatBackend, ChatRequest, ChatResponse, RecordingBackend
from gestures.ethogram import load_ethogram, loads_ethogram
from gestures.intent_chain import ChainConfig, IntentChain
from gestures.prompts import CharacterProfile

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"

WELCOME_INPUT = "Hello, it's great to have you here today. You are truly amazing!"
WELCOME_OUTPUT = (
    "Hello, it's great (id: A-97, description: spreading arms wide) to have you here today. "
    "You are truly (id: A-6, description: clapping) amazing!"
)

SMALL_ETHOGRAM = """{
  "entries": [
    {"id": "A-1", "name": "Stretch Shoulders", "sub_intent": "Display Appearance",
     "description": "Roll the shoulders back.", "guideline": "Relaxed moments.",
     "keywords": ["relaxed"], "emotion": "joy"},
    {"id": "A-6", "name": "Clap Hands", "sub_intent": "Display Emotion",
     "description": "Clap the palms together.", "guideline": "Praise and good news.",
     "keywords": ["amazing", "Well  Done"], "emotion": "joy"},
    {"id": "A-4", "name": "Bunny Ears", "sub_intent": "Display Special Meaning",
     "description": "Two fingers behind the head.", "guideline": "Playful moments.",
     "keywords": ["bunny"], "emotion": "special"},
    {"id": "C-7", "name": "Wag Index Finger", "sub_intent": "Emphasizing Tone",
     "description": "Wag a raised finger.", "guideline": "Warnings.",
     "keywords": ["don't"], "emotion": "anger"},
    {"id": "D-2", "name": "Cover Eyes with Hands", "sub_intent": "Soothe Fear",
     "description": "Hands over the eyes.", "guideline": "Scary stories.",
     "keywords": ["scary", "amazing"], "emotion": "fear"},
    {"id": "D-9", "name": "Pat Own Shoulder", "sub_intent": "Soothe Sadness",
     "description": "Pat one shoulder.", "guideline": "Hard times.",
     "keywords": ["comfort"], "emotion": "sorrow"}
  ]
}
"""


def prompt_text(request: ChatRequest) -> str:
    """The text under labeling, as it appears at the end of a labeling or keyword prompt."""
    return request.messages[1].content.rsplit("Text:\n", 1)[-1]


Reply = str | list[str] | Callable[[ChatRequest], str]


class StageBackend(ChatBackend):
    """Answers by request stage.

    A list of replies is consumed in order and its last reply repeats. Retry
    stages (``label-retry1``) fall back to their base stage.
    """

    def __init__(
        self,
        replies: dict[str, Reply],
        prompt_tokens: int = 100,
        completion_tokens: int = 20,
        latency: float = 0.25,
    ) -> None:
        super().__init__(BackendCapabilities.from_settings())
        self.replies = {key: list(value) if isinstance(value, list) else value for key, value in replies.items()}
        self.prompt_tokens = prompt_tokens
        self.completion_tokens = completion_tokens
        self.latency = latency
        self.requests: list[ChatRequest] = []
        self._lock = threading.Lock()

    def send(self, request, timeout=None):
        with self._lock:
            self.requests.append(request)
            key = request.stage if request.stage in self.replies else request.stage.split("-retry")[0]
            source = self.replies[key]
            if callable(source):
                content = source(request)
            elif isinstance(source, list):
                content = source.pop(0) if len(source) > 1 else source[0]
            else:
                content = source
        return ChatResponse(content, self.prompt_tokens, self.completion_tokens, self.latency)


@pytest.fixture
def small_ethogram():
    return loads_ethogram(SMALL_ETHOGRAM)


@pytest.fixture(scope="session")
def ethogram():
    return load_ethogram(settings.SARGES_ETHOGRAM_PATH)


@pytest.fixture
def profile():
    return CharacterProfile("Ava", "A cheerful virtual host.", "upbeat")


@pytest.fixture
def record_transcripts(tmp_path, ethogram):
    """Run texts through a stub backend configured from settings and keep the transcripts.

    Returns the transcript directory, ready for a ``ScriptedBackend``.
    """
    directory = tmp_path / "transcripts"

    def record(texts, replies, config=None, **backend_options):
        stub = StageBackend(replies, **backend_options)
        chain = IntentChain(
            ethogram,
            RecordingBackend(stub, directory),
            CharacterProfile.from_settings(),
            config or ChainConfig.from_settings(),
        )
        for text in texts:
            chain.run(text)
        return directory

    return record
