"""Partial boolean functions given by explicit truth tables.

Bitstrings are big-endian text: the leftmost character is bit 1.
"""
from __future__ import annotations

import itertools
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Iterable

from .errors import CompositionError, ParseError, ValidationError

DEFAULT_COMPOSE_CAP = 12


@dataclass(frozen=True)
class BooleanFunction:
    """f : D -> {0,1} with D a subset of {0,1}^n, in file order."""

    n: int
    domain: tuple[str, ...]
    values: tuple[int, ...]
    name: str = ""

    def __post_init__(self):
        if not isinstance(self.n, int) or self.n < 1:
            raise ValidationError(f"n must be a positive integer, got {self.n!r}")
        if len(self.domain) != len(self.values):
            raise ValidationError("domain and values differ in length")
        if not self.domain:
            raise ValidationError("empty domain")
        seen = set()
        for x, v in zip(self.domain, self.values):
            if len(x) != self.n or set(x) - {"0", "1"}:
                raise ValidationError(f"{x!r} is not a bitstring of length {self.n}")
            if x in seen:
                raise ValidationError(f"duplicate domain element {x!r}")
            if v not in (0, 1):
                raise ValidationError(f"value {v!r} at {x!r} is not 0 or 1")
            seen.add(x)
        object.__setattr__(self, "_table", dict(zip(self.domain, self.values)))

    def __call__(self, x: str) -> int:
        try:
            return self._table[x]
        except KeyError:
            raise ValidationError(f"{x!r} is not in the domain") from None

    def __contains__(self, x) -> bool:
        return x in self._table

    def __len__(self) -> int:
        return len(self.domain)

    @property
    def F0(self) -> list[str]:
        return partition(self)[0]

    @property
    def F1(self) -> list[str]:
        return partition(self)[1]

    @property
    def is_total(self) -> bool:
        return len(self.domain) == 2**self.n

    @property
    def is_constant(self) -> bool:
        return len(set(self.values)) < 2

    def index(self, x: str) -> int:
        return self.domain.index(x)

    def to_dict(self) -> dict:
        return {"n": self.n, "entries": [{"x": x, "f": v} for x, v in zip(self.domain, self.values)]}

    @classmethod
    def from_dict(cls, data, name: str = "") -> "BooleanFunction":
        try:
            n = data["n"]
            entries = data["entries"]
            domain = tuple(e["x"] for e in entries)
            values = tuple(e["f"] for e in entries)
        except (KeyError, TypeError) as exc:
            raise ParseError(f"malformed truth table: {exc!r}") from None
        if not all(isinstance(x, str) for x in domain):
            raise ParseError("every entry needs a string 'x'")
        if isinstance(n, bool) or any(isinstance(v, bool) for v in values):
            raise ValidationError("booleans are not accepted where integers are expected")
        return cls(n, domain, values, name)

    @classmethod
    def from_callable(cls, n: int, fn: Callable[[tuple[int, ...]], int], name: str = "") -> "BooleanFunction":
        domain = tuple(all_bitstrings(n))
        return cls(n, domain, tuple(int(fn(tuple(int(c) for c in x))) for x in domain), name)


def all_bitstrings(n: int) -> Iterable[str]:
    for bits in itertools.product("01", repeat=n):
        yield "".join(bits)


def partition(f: BooleanFunction) -> tuple[list[str], list[str]]:
    F0 = [x for x, v in zip(f.domain, f.values) if v == 0]
    F1 = [x for x, v in zip(f.domain, f.values) if v == 1]
    return F0, F1


def load(path) -> BooleanFunction:
    path = Path(path)
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: {exc}") from None
    return BooleanFunction.from_dict(data, name=path.stem)


def save(f: BooleanFunction, path) -> None:
    Path(path).write_text(json.dumps(f.to_dict(), indent=1) + "\n", encoding="utf-8")


def compose(f: BooleanFunction, g: BooleanFunction, cap: int = DEFAULT_COMPOSE_CAP) -> BooleanFunction:
    """Block composition: g is applied to each m-bit block, f to the results."""
    if not (f.is_total and g.is_total):
        raise CompositionError("composition needs total functions")
    n, m = f.n, g.n
    if n * m > cap:
        raise CompositionError(f"n*m = {n * m} exceeds the cap of {cap}")

    def value(x):
        inner = "".join(str(g(x[i * m:(i + 1) * m])) for i in range(n))
        return f(inner)

    domain = tuple(all_bitstrings(n * m))
    name = f"{f.name}o{g.name}" if f.name and g.name else ""
    return BooleanFunction(n * m, domain, tuple(value(x) for x in domain), name)


# Standard families used by the examples and the acceptance suite.

def ident() -> BooleanFunction:
    return BooleanFunction(1, ("0", "1"), (0, 1), "IDENT_1")


def or_n(n: int) -> BooleanFunction:
    return BooleanFunction.from_callable(n, lambda b: int(any(b)), f"OR_{n}")


def and_n(n: int) -> BooleanFunction:
    return BooleanFunction.from_callable(n, lambda b: int(all(b)), f"AND_{n}")


def parity_n(n: int) -> BooleanFunction:
    return BooleanFunction.from_callable(n, lambda b: sum(b) % 2, f"PARITY_{n}")


def maj3() -> BooleanFunction:
    return BooleanFunction.from_callable(3, lambda b: int(sum(b) >= 2), "MAJ_3")


def constant(n: int, value: int) -> BooleanFunction:
    return BooleanFunction.from_callable(n, lambda b: value, f"CONST{value}_{n}")


NAMED = {
    "IDENT_1": ident,
    "OR_2": lambda: or_n(2),
    "OR_3": lambda: or_n(3),
    "OR_4": lambda: or_n(4),
    "AND_2": lambda: and_n(2),
    "AND_3": lambda: and_n(3),
    "PARITY_2": lambda: parity_n(2),
    "PARITY_3": lambda: parity_n(3),
    "PARITY_4": lambda: parity_n(4),
    "MAJ_3": maj3,
}
