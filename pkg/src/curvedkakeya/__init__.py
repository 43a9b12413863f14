"""Contact-order analysis of curved Kakeya phase functions.

Subpackages by concern: ``jets`` (truncated power series), ``phases``
(non-degeneracy checks and the Hessian along the solution curve),
``counting`` (row counts with brute-force oracles), ``contact`` (the contact
matrix and contact order), ``exponents`` (exact exponent formulas), ``wolff``
(determinant-bound certificates), ``tubes`` (tube-family simulation),
``metric`` (the R^3 metric-jet condition), ``cli`` (command-line front end).
"""

__version__ = "0.1.0"
