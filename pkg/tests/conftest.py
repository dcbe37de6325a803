from __future__ import annotations

from pathlib import Path
from typing import List

import pytest

from qumin.interp import Interpreter

ROOT = Path(__file__).resolve().parent.parent
PROGRAMS = ROOT / "programs"
LISTINGS = Path(__file__).resolve().parent / "data" / "listings"


class Captured:
    """Output sink that records everything an interpreter prints."""

    def __init__(self) -> None:
        self.chunks: List[str] = []

    def __call__(self, text: str) -> None:
        self.chunks.append(text)

    @property
    def text(self) -> str:
        return "".join(self.chunks)

    def clear(self) -> None:
        self.chunks.clear()


def make_interp(seed=0, **kw):
    out = Captured()
    interp = Interpreter(seed=seed, out=out, search_path=[PROGRAMS], **kw)
    return interp, out


@pytest.fixture
def interp():
    return make_interp()[0]


@pytest.fixture
def session():
    return make_interp()
