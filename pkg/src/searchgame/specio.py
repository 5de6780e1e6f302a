"""Reading and writing game-spec documents (JSON).

A document looks like::

    {
      "states": ["1", "2"],
      "matrices": [[[1, 0], [0, 1]]],
      "repeat": "hold_last",
      "initial": [0.3, 0.7]
    }

``states`` and ``repeat`` are optional.
"""

from __future__ import annotations

import json
from pathlib import Path

from .core import GameSpec, spec_to_document, validate_spec
from .errors import SpecParseError
from .presets import bundled


def loads(text: str) -> GameSpec:
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SpecParseError(exc.msg, exc.lineno, exc.colno) from None
    return validate_spec(raw)


def dumps(spec: GameSpec) -> str:
    # repr-precision floats, so a round trip is bitwise
    return json.dumps(spec_to_document(spec), indent=2) + "\n"


def load(path) -> GameSpec:
    return loads(Path(path).read_text())


def dump(spec: GameSpec, path) -> None:
    Path(path).write_text(dumps(spec))


def resolve(ref: str) -> GameSpec:
    """Load ``ref`` as a file path, falling back to a bundled example name."""
    p = Path(ref)
    if p.is_file():
        return load(p)
    spec = bundled(ref)
    if spec is not None:
        return spec
    raise FileNotFoundError(f"no spec file or bundled example named {ref!r}")
