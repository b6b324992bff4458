"""Gaussian-manifold geometry, the PGM normal distribution and its KL machinery."""

from ._gmvae import *  # noqa: F401,F403
from ._gmvae import __doc__ as _core_doc

__all__ = [name for name in dir() if not name.startswith("_")]
__doc__ = _core_doc
