from typing import Iterator, Sequence, TypeVar

import numpy as np

T = TypeVar("T")


def chunked(items: Sequence[T], size: int) -> Iterator[Sequence[T]]:
    for i in range(0, len(items), size):
        yield items[i : i + size]


def fmt_num(x: float | None) -> str:
    """17 significant digits, empty string for undefined values."""
    if x is None or not np.isfinite(x):
        return ""
    return f"{x:.17g}"


def to_jsonable(value):
    """Convert numpy containers and scalars to plain python for json.dumps"""
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, dict):
        return {k: to_jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_jsonable(v) for v in value]
    return value


def uniform_steps(t_end: float, h: float) -> int:
    """Number of steps of size h covering [0, t_end], i.e. ceil(t_end/h)."""
    return int(np.ceil(t_end / h - 1e-9))
