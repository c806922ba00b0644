"""Exponential polynomials on Z^d and the modified difference operators acting on them."""
from . import diffops as _diffops
from . import exppoly as _exppoly
from . import lattice as _lattice
from . import montel as _montel
from . import oracle as _oracle
from . import recover as _recover
from . import scalar as _scalar
from . import subspace as _subspace
from .diffops import *  # noqa: F401,F403
from .exppoly import *  # noqa: F401,F403
from .lattice import *  # noqa: F401,F403
from .montel import *  # noqa: F401,F403
from .oracle import *  # noqa: F401,F403
from .recover import *  # noqa: F401,F403
from .scalar import *  # noqa: F401,F403
from .subspace import *  # noqa: F401,F403

__version__ = "0.1.0"

__all__ = [
    name
    for mod in (_scalar, _exppoly, _diffops, _lattice, _montel, _subspace, _recover, _oracle)
    for name in mod.__all__
]
