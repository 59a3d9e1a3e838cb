"""Numerical toolkit for Hardy-type spaces of the Ornstein-Uhlenbeck operator.

Modules
-------
gauss_geometry       Gauss-measure balls, admissibility, doubling, boundary shells.
ou_spectral          Hermite expansions, spectral multipliers, the Mehler kernel.
impow_kernel         Kernel of the imaginary powers ``(rI + L)^{iu}``.
singular_estimators  Hormander constants, kernel mass at infinity, atom images.
hardy_atoms          Atoms, BMO oscillations, atomic-norm bounds.
tree_analysis        Radial kernels on homogeneous trees.
experiments          Batch experiments behind the ``gausshardy`` command.
"""

__version__ = "0.1.0"

from .errors import InvalidInputError, PreconditionError  # noqa: E402
from .quadrature import ConvergenceError  # noqa: E402

__all__ = ["__version__", "InvalidInputError", "PreconditionError", "ConvergenceError"]
