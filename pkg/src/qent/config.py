"""Numerical tolerances and size limits shared by every module.

Defaults live in :class:`Settings`.  Overrides are scoped with
:func:`override`, which uses a context variable so concurrent callers never
see each other's settings::

    with override(tol_herm=1e-8):
        ...
"""

from __future__ import annotations

import contextlib
import contextvars
import dataclasses
from collections.abc import Iterator


@dataclasses.dataclass(frozen=True)
class Settings:
    tol_norm: float = 1e-12
    tol_herm: float = 1e-10
    tol_psd: float = 1e-10
    tol_trace: float = 1e-10
    degeneracy_gap: float = 1e-9
    max_dim: int = 64
    max_graph_nodes: int = 64


_current: contextvars.ContextVar[Settings] = contextvars.ContextVar("qent_settings", default=Settings())


def get() -> Settings:
    return _current.get()


@contextlib.contextmanager
def override(**changes) -> Iterator[Settings]:
    """Temporarily replace fields of the active :class:`Settings`."""
    new = dataclasses.replace(_current.get(), **changes)
    token = _current.set(new)
    try:
        yield new
    finally:
        _current.reset(token)
