"""Parser/formatter for the ``name(key=value,...)`` text forms.

Values are floats, ints, lists of floats (``[1.0,0.5]``) or nested text
forms (only as the last argument, e.g. ``law=exponential(gamma=1.0)``).
Floats are written with ``repr`` so parsing round-trips bit-exactly.
"""
import re

_HEAD = re.compile(r"^\s*([A-Za-z_][A-Za-z0-9_]*)\s*\((.*)\)\s*$", re.S)


def fmt_value(value):
    if isinstance(value, str):
        return value
    if isinstance(value, (list, tuple)):
        return "[" + ",".join(fmt_value(v) for v in value) + "]"
    if isinstance(value, bool):
        raise TypeError("booleans are not part of the text form")
    if isinstance(value, int):
        return str(value)
    return repr(float(value))


def format_form(name, items):
    """Format ``name(k1=v1,k2=v2)`` from an iterable of (key, value) pairs."""
    return f"{name}(" + ",".join(f"{k}={fmt_value(v)}" for k, v in items) + ")"


def _split_top(body):
    parts, depth, start = [], 0, 0
    for i, ch in enumerate(body):
        if ch in "([":
            depth += 1
        elif ch in ")]":
            depth -= 1
            if depth < 0:
                raise ValueError(f"unbalanced brackets in {body!r}")
        elif ch == "," and depth == 0:
            parts.append(body[start:i])
            start = i + 1
    if depth != 0:
        raise ValueError(f"unbalanced brackets in {body!r}")
    parts.append(body[start:])
    return [p.strip() for p in parts if p.strip()]


def _parse_scalar(text):
    text = text.strip()
    if text.startswith("["):
        if not text.endswith("]"):
            raise ValueError(f"malformed list {text!r}")
        inner = text[1:-1].strip()
        return [float(v) for v in inner.split(",")] if inner else []
    if _HEAD.match(text):
        return text
    if re.fullmatch(r"[+-]?\d+", text):
        return int(text)
    return float(text)


def parse_form(text):
    """Parse ``name(k=v,...)`` into ``(name, dict)``.

    Nested forms are returned as their raw text so the caller can hand them
    to the right parser.
    """
    m = _HEAD.match(text)
    if m is None:
        raise ValueError(f"not a text form: {text!r}")
    name, body = m.group(1), m.group(2)
    out = {}
    for part in _split_top(body):
        if "=" not in part:
            raise ValueError(f"expected key=value, got {part!r}")
        key, _, raw = part.partition("=")
        key = key.strip()
        if key in out:
            raise ValueError(f"duplicate key {key!r}")
        out[key] = _parse_scalar(raw)
    return name, out
