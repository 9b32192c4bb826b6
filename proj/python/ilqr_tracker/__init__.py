"""Python bindings for the trajectory tracking toolkit."""

from . import _core

__all__ = ["_core"]
