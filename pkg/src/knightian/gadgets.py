"""Small quantitative set pieces: nonlocal games, anthropic rooms, a
predictor's two boxes, and the micro/macro causal-arrow discipline.

Everything classical here is exact rational arithmetic; only the quantum
measurement angles use floats.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from . import freestate
from .errors import KnightianError
from .freestate import DensityMatrix, Effect, PureState


# -- CHSH --------------------------------------------------------------------------


@dataclass(frozen=True)
class ClassicalChshResult:
    value: Fraction
    witness: tuple[tuple[int, int], tuple[int, int]]  # Alice's and Bob's tables
    table: tuple[dict, ...]  # all 16 deterministic strategies with values


def chsh_classical_optimum() -> ClassicalChshResult:
    """Exhaustive search over deterministic strategy pairs.

    Randomized strategies are convex mixtures of these sixteen, so the
    deterministic optimum is the optimum outright.  Winning means
    a XOR b = x AND y for uniformly random input bits x, y.
    """
    rows = []
    best: tuple[Fraction, tuple] | None = None
    for a0, a1, b0, b1 in itertools.product((0, 1), repeat=4):
        wins = 0
        for x, y in itertools.product((0, 1), repeat=2):
            a = a0 if x == 0 else a1
            b = b0 if y == 0 else b1
            if (a + b) % 2 == (x & y):
                wins += 1
        value = Fraction(wins, 4)
        strategy = ((a0, a1), (b0, b1))
        rows.append({"alice": (a0, a1), "bob": (b0, b1), "value": value})
        if best is None or value > best[0]:
            best = (value, strategy)
    assert best is not None
    return ClassicalChshResult(best[0], best[1], tuple(rows))


def _bell_pair() -> DensityMatrix:
    amps = np.array([1, 0, 0, 1], dtype=complex) / np.sqrt(2)
    return PureState(4, amps).projector()


def _about_axis(theta: float, outcome: int) -> np.ndarray:
    """Rank-1 projector for measuring along angle theta in the X-Z plane."""
    v = np.array([math.cos(theta), math.sin(theta)], dtype=complex)
    if outcome == 1:
        v = np.array([-math.sin(theta), math.cos(theta)], dtype=complex)
    return np.outer(v, v.conj())


def chsh_quantum_value(
    alice_angles: tuple[float, float], bob_angles: tuple[float, float]
) -> float:
    """Win probability for measurement-angle strategies on the Bell pair.

    Angles live in the X-Z plane, which suffices for the optimum.  The
    probability for each (x, y) is an effect expectation on the shared
    two-qubit state.
    """
    rho = _bell_pair()
    total = 0.0
    for x, y in itertools.product((0, 1), repeat=2):
        win = 0.0
        for a, b in itertools.product((0, 1), repeat=2):
            if (a + b) % 2 != (x & y):
                continue
            proj = np.kron(_about_axis(alice_angles[x], a), _about_axis(bob_angles[y], b))
            win += freestate.expectation(rho, Effect(4, proj))
        total += win
    return total / 4


CHSH_OPTIMAL_ALICE = (0.0, math.pi / 4)
CHSH_OPTIMAL_BOB = (math.pi / 8, -math.pi / 8)


# -- anthropic rooms ----------------------------------------------------------------


class NoMatchingRoom(KnightianError):
    pass


@dataclass(frozen=True)
class RoomPuzzle:
    prior_heads: Fraction
    copies_if_heads: int
    copies_if_tails: int
    heads_colors: tuple[str, ...]
    tails_colors: tuple[str, ...]
    observed_color: str
    counting_rule: str = "copy-weighted"

    def __post_init__(self):
        if len(self.heads_colors) != self.copies_if_heads:
            raise ValueError("heads branch room count mismatch")
        if len(self.tails_colors) != self.copies_if_tails:
            raise ValueError("tails branch room count mismatch")
        if self.copies_if_heads < 1 or self.copies_if_tails < 1:
            raise ValueError("each branch needs at least one copy")
        if not (0 <= self.prior_heads <= 1):
            raise ValueError("prior must be a probability")
        if self.counting_rule not in ("copy-weighted", "branch-weighted"):
            raise ValueError(f"unknown counting rule {self.counting_rule!r}")
        if (
            self.observed_color not in self.heads_colors
            and self.observed_color not in self.tails_colors
        ):
            raise NoMatchingRoom(
                f"color {self.observed_color!r} appears in neither branch"
            )


@dataclass(frozen=True)
class RoomPosterior:
    copy_weighted: Fraction
    branch_weighted: Fraction
    primary: Fraction  # per the puzzle's counting_rule


def bostrom_posterior(puzzle: RoomPuzzle) -> RoomPosterior:
    """Posterior of heads given the observed room color, both counting rules.

    copy-weighted: you are a uniformly random copy within the branch, so the
    branch likelihood is the fraction of its rooms in the observed color.
    branch-weighted: waking in *some* matching room is all that counts, so
    the likelihood is the bare indicator that the color occurs.  The two
    rules answer the puzzles differently; both are reported.
    """

    def posterior(lik_heads: Fraction, lik_tails: Fraction) -> Fraction:
        num = puzzle.prior_heads * lik_heads
        den = num + (1 - puzzle.prior_heads) * lik_tails
        if den == 0:
            raise NoMatchingRoom("observation impossible under both branches")
        return num / den

    copy = posterior(
        Fraction(puzzle.heads_colors.count(puzzle.observed_color), puzzle.copies_if_heads),
        Fraction(puzzle.tails_colors.count(puzzle.observed_color), puzzle.copies_if_tails),
    )
    branch = posterior(
        Fraction(1 if puzzle.observed_color in puzzle.heads_colors else 0),
        Fraction(1 if puzzle.observed_color in puzzle.tails_colors else 0),
    )
    primary = copy if puzzle.counting_rule == "copy-weighted" else branch
    return RoomPosterior(copy, branch, primary)


def bostrom_variant_one() -> RoomPuzzle:
    """Fair coin; heads: a thousand white rooms, tails: one white room."""
    return RoomPuzzle(
        Fraction(1, 2), 1000, 1, ("white",) * 1000, ("white",), "white"
    )


def bostrom_variant_two() -> RoomPuzzle:
    """Fair coin; heads: 999 blue rooms and one white, tails: one white room."""
    return RoomPuzzle(
        Fraction(1, 2), 1000, 1, ("blue",) * 999 + ("white",), ("white",), "white"
    )


# -- the predictor's boxes -----------------------------------------------------------


def newcomb_expected(
    policy: str,
    accuracy: Fraction,
    box_one: int = 1_000_000,
    box_two: int = 1_000,
) -> Fraction:
    """Expected takings against a predictor of the given accuracy.

    The opaque box is filled exactly when the predictor foresaw one-boxing.
    """
    accuracy = Fraction(accuracy)
    if not (0 <= accuracy <= 1):
        raise ValueError("accuracy must be a probability")
    if policy == "one-box":
        return accuracy * box_one
    if policy == "two-box":
        return (1 - accuracy) * box_one + box_two
    raise ValueError(f"policy must be 'one-box' or 'two-box', got {policy!r}")


def newcomb_crossover(box_one: int = 1_000_000, box_two: int = 1_000) -> Fraction:
    """Predictor accuracy at which one-boxing starts to pay."""
    return Fraction(box_one + box_two, 2 * box_one)


# -- causal-arrow discipline ----------------------------------------------------------


class MalformedGraph(KnightianError):
    pass


@dataclass(frozen=True)
class CausalNode:
    id: str
    kind: str  # "micro" | "macro"
    time: int

    def __post_init__(self):
        if self.kind not in ("micro", "macro"):
            raise MalformedGraph(f"node kind must be micro or macro, got {self.kind!r}")


@dataclass(frozen=True)
class CausalGraph:
    nodes: tuple[CausalNode, ...]
    edges: tuple[tuple[str, str], ...]  # (cause id, effect id)

    def __post_init__(self):
        ids = [n.id for n in self.nodes]
        if len(set(ids)) != len(ids):
            raise MalformedGraph("duplicate node ids")
        known = set(ids)
        for c, e in self.edges:
            if c not in known or e not in known:
                raise MalformedGraph(f"edge ({c!r}, {e!r}) touches unknown node")

    def node(self, node_id: str) -> CausalNode:
        return next(n for n in self.nodes if n.id == node_id)


@dataclass(frozen=True)
class Violation:
    rule: str  # "R1" | "R2" | "R3"
    subject: tuple
    message: str


def causal_validate(
    graph: CausalGraph, check_disjoint_macro: bool = True
) -> list[Violation]:
    """All rule violations; an empty list means the graph is admissible.

    R1: a non-forward arrow (cause not strictly earlier than effect) may
        point only at a micro node.  Simultaneous arrows count as
        non-forward: causation "forward in time" means strictly forward,
        and without that reading two same-instant nodes could validate a
        cycle.
    R2: a micro node receiving a non-forward arrow is a dead end — it may
        have no other incident edge of any kind (no double duty).
    R3 (conservative reading, can be switched off): a micro node may have at
        most one outgoing edge to the macro layer, since two macro effects
        would amount to two independent amplifications of one unmeasured
        fact.
    """
    violations = []
    nodes = {n.id: n for n in graph.nodes}
    backward_into = {
        e for c, e in graph.edges if nodes[c].time >= nodes[e].time
    }
    for c, e in graph.edges:
        if nodes[c].time >= nodes[e].time and nodes[e].kind != "micro":
            violations.append(
                Violation(
                    "R1",
                    (c, e),
                    "non-forward arrow points at a macro node",
                )
            )
    for node_id in backward_into:
        if nodes[node_id].kind != "micro":
            continue  # already an R1 violation
        incident = [
            (c, e)
            for c, e in graph.edges
            if (c == node_id or e == node_id)
            and not (e == node_id and nodes[c].time >= nodes[e].time)
        ]
        if incident:
            violations.append(
                Violation(
                    "R2",
                    (node_id,),
                    "micro node caused from its future also touches other edges",
                )
            )
    if check_disjoint_macro:
        for n in graph.nodes:
            if n.kind != "micro":
                continue
            macro_out = [
                (c, e) for c, e in graph.edges if c == n.id and nodes[e].kind == "macro"
            ]
            if len(macro_out) > 1:
                violations.append(
                    Violation(
                        "R3",
                        (n.id,),
                        "micro node feeds two macro nodes over disjoint pathways",
                    )
                )
    return violations


def acyclicity_check(graph: CausalGraph) -> bool:
    """True iff the graph has no directed cycle (iterative DFS)."""
    adjacency: dict[str, list[str]] = {n.id: [] for n in graph.nodes}
    for c, e in graph.edges:
        adjacency[c].append(e)
    color = {n.id: 0 for n in graph.nodes}  # 0 fresh, 1 active, 2 done
    for start in adjacency:
        if color[start] != 0:
            continue
        stack = [(start, iter(adjacency[start]))]
        color[start] = 1
        while stack:
            node, it = stack[-1]
            advanced = False
            for nxt in it:
                if color[nxt] == 1:
                    return False
                if color[nxt] == 0:
                    color[nxt] = 1
                    stack.append((nxt, iter(adjacency[nxt])))
                    advanced = True
                    break
            if not advanced:
                color[node] = 2
                stack.pop()
    return True


def graph_from_payload(payload: dict) -> CausalGraph:
    try:
        nodes = tuple(
            CausalNode(str(n["id"]), n["kind"], int(n["time"])) for n in payload["nodes"]
        )
        edges = tuple((str(c), str(e)) for c, e in payload["edges"])
    except (KeyError, TypeError) as exc:
        raise MalformedGraph(f"bad graph payload: {exc}") from exc
    return CausalGraph(nodes, edges)
