"""Desk-scale description complexity over the toy machine.

K(x) is the length of the shortest deterministic program (no RAND in its
instruction stream) that halts with output exactly x, searched exhaustively
over all programs up to a stated length bound.  The bound and step budget
are part of every result: these are time-bounded, machine-relative numbers,
never quotable without their regime.

Set-listing convention ("fixed in docs"): a program *lists* a set of
equal-length strings by emitting

    [3-bit width field, w-1] [k * w element bits, all k pieces distinct]

with w in 1..8.  An empty element block denotes the complete set {0,1}^w —
the canonical maximal-entropy set, kept cheap on purpose so that the cost of
naming "all w-bit strings" scales with w and not with 2**w.

Sophistication: soph_c(x) is the least K(S) over listable sets S containing
x with K(S) + log2|S| <= K(x) + c.  The inequality is evaluated in exact
integer arithmetic as 2**K(S) * |S| <= 2**(K(x) + c).
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

from . import toyvm
from .errors import KnightianError
from .toyvm import MachineConfig, Program

LISTING_WIDTH_FIELD = 3
LISTING_MAX_WIDTH = 8

#: Largest observed K({x}) - K(x) over the frozen measurement singletons;
#: see measure_listing_overhead.  Whenever c >= this constant the singleton
#: {x} qualifies for the sophistication search, so soph_c(x) <= K(x) + it.
LISTING_OVERHEAD = 6

#: The singletons the overhead constant was measured on.
OVERHEAD_MEASUREMENT_SET = ("1", "0", "01", "000000", "011010")


class UnparseableConvention(KnightianError):
    """Bits do not follow the set-listing output convention."""


@dataclass(frozen=True)
class ComplexityResult:
    value: int
    witness_program: Program
    search_bound: int
    step_budget: int


@dataclass(frozen=True)
class NotFound:
    search_bound: int
    step_budget: int


@dataclass(frozen=True)
class SetListing:
    """A nonempty set of equal-length bitstrings, canonically sorted."""

    elements: tuple[str, ...]

    def __post_init__(self):
        if not self.elements:
            raise ValueError("listing must be nonempty")
        canon = tuple(sorted(set(self.elements)))
        if canon != self.elements:
            object.__setattr__(self, "elements", canon)
        width = len(self.elements[0])
        if any(len(e) != width for e in self.elements):
            raise ValueError("listing elements must share one length")
        for e in self.elements:
            if not all(c in "01" for c in e):
                raise ValueError(f"not a bitstring: {e!r}")

    @property
    def width(self) -> int:
        return len(self.elements[0])

    def __len__(self) -> int:
        return len(self.elements)

    def __contains__(self, x: str) -> bool:
        return x in self.elements


def parse_listing(bits: str) -> SetListing:
    """Decode an output under the set-listing convention."""
    if len(bits) < LISTING_WIDTH_FIELD:
        raise UnparseableConvention("shorter than the width field")
    width = int(bits[:LISTING_WIDTH_FIELD], 2) + 1
    rest = bits[LISTING_WIDTH_FIELD:]
    if not rest:
        if width > LISTING_MAX_WIDTH:
            raise UnparseableConvention(f"width {width} beyond {LISTING_MAX_WIDTH}")
        cube = ["".join(b) for b in _all_strings(width)]
        return SetListing(tuple(cube))
    if len(rest) % width != 0:
        raise UnparseableConvention("element block not a multiple of the width")
    pieces = [rest[i : i + width] for i in range(0, len(rest), width)]
    if len(set(pieces)) != len(pieces):
        raise UnparseableConvention("duplicate elements in listing")
    return SetListing(tuple(pieces))


def render_listing(listing: SetListing) -> str:
    """Canonical explicit output for a set (sorted elements; no cube form)."""
    if listing.width > LISTING_MAX_WIDTH:
        raise ValueError(f"width {listing.width} beyond {LISTING_MAX_WIDTH}")
    return format(listing.width - 1, f"0{LISTING_WIDTH_FIELD}b") + "".join(
        listing.elements
    )


def _all_strings(n: int):
    import itertools

    return itertools.product("01", repeat=n)


@lru_cache(maxsize=8)
def _deterministic_outputs(bound: int, cfg: MachineConfig) -> dict[str, Program]:
    """Map each reachable output to its shortest deterministic halting program.

    Enumeration order is length-then-lex, so the first writer wins the tie
    and the map is deterministic.
    """
    table: dict[str, Program] = {}
    stream = "0" * cfg.rand_budget
    for p in toyvm.enumerate_programs(bound):
        if toyvm.contains_rand(p):
            continue
        r = toyvm.run(p, cfg, stream)
        if r.halted and r.output not in table:
            table[r.output] = p
    return table


def kolmogorov(
    x: str, bound: int, cfg: MachineConfig | None = None
) -> ComplexityResult | NotFound:
    """Shortest deterministic program halting with output exactly x."""
    cfg = cfg or MachineConfig()
    witness = _deterministic_outputs(bound, cfg).get(x)
    if witness is None:
        return NotFound(bound, cfg.step_budget)
    return ComplexityResult(len(witness), witness, bound, cfg.step_budget)


@lru_cache(maxsize=8)
def _listable_sets(
    bound: int, cfg: MachineConfig
) -> dict[tuple[str, ...], Program]:
    """Every parseable set reachable at the bound, with its shortest lister."""
    table: dict[tuple[str, ...], Program] = {}
    for output, program in _deterministic_outputs(bound, cfg).items():
        try:
            listing = parse_listing(output)
        except UnparseableConvention:
            continue
        table.setdefault(listing.elements, program)
    return table


def set_complexity(
    s: SetListing, bound: int, cfg: MachineConfig | None = None
) -> ComplexityResult | NotFound:
    """Shortest deterministic program whose parsed output equals s as a set."""
    cfg = cfg or MachineConfig()
    witness = _listable_sets(bound, cfg).get(s.elements)
    if witness is None:
        return NotFound(bound, cfg.step_budget)
    return ComplexityResult(len(witness), witness, bound, cfg.step_budget)


@dataclass(frozen=True)
class SophisticationResult:
    value: int
    witness_set: SetListing
    witness_program: Program
    k_of_x: int
    search_bound: int
    step_budget: int


def sophistication(
    x: str, c: int, bound: int, cfg: MachineConfig | None = None
) -> SophisticationResult | NotFound:
    """Least K(S) over listable S containing x with K(S) + log2|S| <= K(x) + c."""
    cfg = cfg or MachineConfig()
    kx = kolmogorov(x, bound, cfg)
    if isinstance(kx, NotFound):
        return kx
    budget = 2 ** (kx.value + c)
    best: tuple[int, tuple[str, ...], Program] | None = None
    for elements, program in sorted(_listable_sets(bound, cfg).items()):
        if x not in elements:
            continue
        k_s = len(program)
        if (2**k_s) * len(elements) > budget:
            continue
        if best is None or k_s < best[0]:
            best = (k_s, elements, program)
    if best is None:
        return NotFound(bound, cfg.step_budget)
    return SophisticationResult(
        best[0], SetListing(best[1]), best[2], kx.value, bound, cfg.step_budget
    )


def measure_listing_overhead(
    bound: int = 20, cfg: MachineConfig | None = None
) -> dict[str, int]:
    """K({x}) - K(x) on the frozen measurement singletons.

    The pinned LISTING_OVERHEAD constant is the maximum of these.
    """
    cfg = cfg or MachineConfig()
    diffs = {}
    for x in OVERHEAD_MEASUREMENT_SET:
        kx = kolmogorov(x, bound, cfg)
        ks = set_complexity(SetListing((x,)), bound, cfg)
        if isinstance(kx, NotFound) or isinstance(ks, NotFound):
            raise KnightianError(f"measurement singleton {x!r} out of range")
        diffs[x] = ks.value - kx.value
    return diffs


def tabulate(
    lengths: list[int],
    cs: list[int],
    bound: int,
    cfg: MachineConfig | None = None,
) -> list[dict]:
    """Rows of x, K(x), and soph_c(x) for each requested c, for all x."""
    cfg = cfg or MachineConfig()
    rows = []
    for n in lengths:
        for tup in _all_strings(n):
            x = "".join(tup)
            kx = kolmogorov(x, bound, cfg)
            row: dict = {"x": x, "k": None if isinstance(kx, NotFound) else kx.value}
            for c in cs:
                s = sophistication(x, c, bound, cfg)
                row[f"soph_{c}"] = None if isinstance(s, NotFound) else s.value
            rows.append(row)
    return rows
