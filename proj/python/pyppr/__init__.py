"""Python access to the ppr core: FPU systems, symplectic integrators,
parareal with Procrustes correction, H0 samplers and ResNet surrogates."""

from ._core import *  # noqa: F401,F403
from ._core import __version__  # noqa: F401
