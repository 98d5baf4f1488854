"""Extension point for adapting external corpus releases to the toolkit schema.

The toolkit consumes the minimal corpus JSON documented in `corpus`. Raw
dataset releases (MultiWOZ-style archives, schema-guided dumps) vary too
much to parse directly; write a converter that emits the toolkit schema and
register it here.

A converter is a callable `bytes -> bytes` (raw release file in, corpus
JSON out). Example::

    from ictrack import converters

    def my_format(raw: bytes) -> bytes:
        ...
    converters.register("my-format", my_format)
"""

from __future__ import annotations

from typing import Callable

Converter = Callable[[bytes], bytes]

_REGISTRY: dict[str, Converter] = {}


def register(name: str, converter: Converter) -> None:
    if name in _REGISTRY:
        raise ValueError(f"converter {name!r} is already registered")
    _REGISTRY[name] = converter


def get(name: str) -> Converter:
    try:
        return _REGISTRY[name]
    except KeyError:
        raise KeyError(
            f"no converter named {name!r}; known: {sorted(_REGISTRY) or 'none'}"
        ) from None


def available() -> list[str]:
    return sorted(_REGISTRY)
