"""Open-book structures of polynomial maps on level-set manifolds.

Exact polynomial algebra for the normal-frame identities, numerical solvers
for critical loci and Milnor sets, and Euler characteristics of links and
fibers by critical-point counting.
"""

from __future__ import annotations

__version__ = "0.1.0"

from .polyring import ParseError, PolyMap, Polynomial, PolynomialError, parse_polynomial  # noqa: E402

__all__ = ["ParseError", "PolyMap", "Polynomial", "PolynomialError", "parse_polynomial", "__version__"]
