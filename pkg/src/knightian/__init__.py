"""Knightian uncertainty lab.

Subpackages:

- ``freestate``: convex sets of quantum density matrices / classical
  probability vectors, extremal event intervals, separating witnesses, and a
  cloning feasibility check.
- ``toyvm``: a total, prefix-free bit-emitting toy machine ("toyvm-1").
- ``prior``: the length-weighted program mixture as a sequential predictor,
  with regret accounting, diagonalization, and a truncated halting sum.
- ``complexity``: shortest-program description complexity, set-listing
  complexity and sophistication, by exhaustive search over the toy machine.
- ``arena``: sequential prediction games against finite-state subjects with
  probabilistic and Knightian (freebit) branches.
- ``gadgets``: CHSH game values, anthropic room puzzles, predictor-payoff
  expectations, and the micro/macro causal-graph validator.
"""

from .errors import KnightianError

__version__ = "0.1.0"

__all__ = ["KnightianError", "__version__"]
