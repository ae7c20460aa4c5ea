"""Shared fixtures: the bundled demonstrator corpus, parsed once per run."""

from __future__ import annotations

from pathlib import Path

import pytest

from maintrain import Lesson, PlantModel, parse_lesson, parse_model

CORPUS = Path(__file__).resolve().parent.parent / "corpus"


@pytest.fixture(scope="session")
def corpus_dir() -> Path:
    return CORPUS


@pytest.fixture(scope="session")
def model_text() -> str:
    return (CORPUS / "xppu.plant").read_text()


@pytest.fixture(scope="session")
def model(model_text: str) -> PlantModel:
    return parse_model(model_text, file="xppu.plant")


@pytest.fixture(scope="session")
def lesson_text() -> str:
    return (CORPUS / "replace_pickalpha.lesson").read_text()


@pytest.fixture(scope="session")
def lesson(lesson_text: str, model: PlantModel) -> Lesson:
    return parse_lesson(lesson_text, model, file="replace_pickalpha.lesson")


@pytest.fixture(scope="session")
def load_lesson(model: PlantModel):
    """Parse one of the corpus lesson files against the corpus model."""

    def loader(name: str) -> Lesson:
        return parse_lesson((CORPUS / name).read_text(), model, file=name)

    return loader
