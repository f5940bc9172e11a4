"""Text persistence for trained selectors ("SEL 1 <kind>")."""

from __future__ import annotations

import dataclasses
from pathlib import Path

import numpy as np

from .models import SELECTOR_CLASSES, Selector, normalize_kind
from .perceptron import MLP

_MAGIC = "SEL 1"


def _emit(name: str, value, out: list[str]) -> None:
    if value is None:
        out.append(f"none {name}")
    elif isinstance(value, MLP):
        for f in dataclasses.fields(value):
            _emit(f"{name}.{f.name}", getattr(value, f.name), out)
    elif isinstance(value, np.ndarray):
        shape = "x".join(str(s) for s in value.shape) or "scalar"
        out.append(f"array {name} {shape}")
        out.append(" ".join(repr(float(v)) for v in value.ravel()))
    elif isinstance(value, (int, np.integer)):
        out.append(f"int {name} {int(value)}")
    elif name == "layout":
        out.append("layout " + " ".join(f"{n}:{b}" for n, b in value))
    else:
        raise TypeError(f"cannot persist field {name} of type {type(value).__name__}")


def format_selector(model: Selector) -> str:
    out = [f"{_MAGIC} {model.kind}"]
    for f in dataclasses.fields(model):
        _emit(f.name, getattr(model, f.name), out)
    return "\n".join(out) + "\n"


def save_selector(model: Selector, path) -> None:
    Path(path).write_text(format_selector(model))


def parse_selector(text: str) -> Selector:
    lines = text.splitlines()
    head = lines[0].split() if lines else []
    if len(head) != 3 or " ".join(head[:2]) != _MAGIC:
        raise ValueError(f"malformed selector header, expected '{_MAGIC} <kind>'")
    cls = SELECTOR_CLASSES[normalize_kind(head[2])]
    values: dict[str, object] = {}
    i = 1
    while i < len(lines):
        toks = lines[i].split()
        i += 1
        if not toks:
            continue
        tag, name = toks[0], toks[1]
        if tag == "none":
            values[name] = None
        elif tag == "int":
            values[name] = int(toks[2])
        elif tag == "layout":
            values["layout"] = tuple((n, int(b)) for n, b in (t.rsplit(":", 1) for t in toks[1:]))
        elif tag == "array":
            shape = () if toks[2] == "scalar" else tuple(int(s) for s in toks[2].split("x"))
            data = np.array([float(t) for t in lines[i].split()], dtype=np.float64)
            i += 1
            values[name] = data.reshape(shape)
        else:
            raise ValueError(f"line {i}: unknown record {tag!r}")
    kwargs = {}
    for f in dataclasses.fields(cls):
        if f.name in values:
            kwargs[f.name] = values[f.name]
            continue
        prefix = f.name + "."
        sub = {k[len(prefix):]: v for k, v in values.items() if k.startswith(prefix)}
        if sub:
            kwargs[f.name] = MLP(**sub)
        else:
            raise ValueError(f"missing field {f.name!r} for {cls.kind} selector")
    return cls(**kwargs)


def load_selector(path) -> Selector:
    return parse_selector(Path(path).read_text())
