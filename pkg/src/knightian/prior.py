"""Sequential prediction with the length-weighted program mixture.

The predictor enumerates every toy-machine program up to a length bound L
and mixes their output distributions with weights 2**-len(P) / C, where C is
the Kraft normalizer over the enumerated class.  Prediction is Bayesian
conditioning: the estimate for the next bit is the joint-probability ratio
Pr[history + "1"] / Pr[history] under the mixture.

Everything here is exact dyadic-rational arithmetic (fractions.Fraction):
the toy machine only ever produces probabilities 2**-k, so log-domain floats
would buy nothing and cost exactness.  All reported quantities are relative
to the enumerated class ("toyvm-1, L=...") and claims should be quoted with
that regime attached.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from fractions import Fraction

from . import toyvm
from .errors import KnightianError
from .toyvm import MachineConfig, Program


class ZeroMassHistory(KnightianError):
    """The history left the (bounded) support of the truncated mixture."""

    def __init__(self, history: str, step: int | None = None):
        at = "" if step is None else f" at step {step}"
        super().__init__(f"history {history!r} has zero mixture mass{at}")
        self.history = history
        self.step = step


class UnsupportedSequence(KnightianError):
    """The designated hypothesis assigns the sequence zero probability."""


@dataclass(frozen=True)
class Hypothesis:
    program: Program
    prior: Fraction
    posterior: Fraction


@dataclass(frozen=True)
class Mixture:
    hypotheses: tuple[Hypothesis, ...]
    normalizer: Fraction  # C = sum of 2**-len(P) over the class
    history: str
    cfg: MachineConfig
    bound: int  # enumeration bound L, quoted in all reports


def build_mixture(bound: int, cfg: MachineConfig | None = None) -> Mixture:
    """Mixture over all programs of length <= bound, fresh (empty history)."""
    cfg = cfg or MachineConfig()
    programs = toyvm.enumerate_programs(bound)
    normalizer = toyvm.kraft_sum(programs)
    hyps = tuple(
        Hypothesis(p, Fraction(1, 2 ** len(p)) / normalizer, Fraction(1, 2 ** len(p)) / normalizer)
        for p in programs
    )
    return Mixture(hyps, normalizer, "", cfg, bound)


def mixture_snapshot(mixture: Mixture) -> list[dict]:
    """Reproducibility record: every hypothesis with its prior and posterior."""
    return [
        {
            "program": h.program.code,
            "prior": str(h.prior),
            "posterior": str(h.posterior),
        }
        for h in mixture.hypotheses
    ]


def joint_probability(mixture: Mixture, prefix: str) -> Fraction:
    """Pr under the mixture that the output starts with the given bits.

    Hypotheses that cannot emit len(prefix) bits within budget abstain and
    contribute nothing, to either this prefix or any extension of it.
    """
    total = Fraction(0)
    for h in mixture.hypotheses:
        total += h.prior * toyvm.prefix_probability(h.program, prefix, mixture.cfg)
    return total


def predict_next(mixture: Mixture) -> Fraction:
    """Probability the next bit is 1: Pr[history + "1"] / Pr[history].

    Both sides of the ratio run over hypotheses that describe the next bit;
    a hypothesis that cannot emit len(history) + 1 bits within budget
    abstains and is excluded from numerator and denominator alike.  (The
    exclusion is what keeps Pr[next=0] + Pr[next=1] = 1 in the truncated
    mixture, whose hypotheses, unlike ideal ones, may fall silent.)
    """
    p1 = joint_probability(mixture, mixture.history + "1")
    p0 = joint_probability(mixture, mixture.history + "0")
    if p0 + p1 == 0:
        raise ZeroMassHistory(mixture.history)
    return p1 / (p0 + p1)


def update(mixture: Mixture, bit: str) -> Mixture:
    """Condition on one observed bit; zero-mass hypotheses stay at weight 0."""
    if bit not in ("0", "1"):
        raise ValueError(f"bit must be '0' or '1', got {bit!r}")
    history = mixture.history + bit
    raw = [
        h.prior * toyvm.prefix_probability(h.program, history, mixture.cfg)
        for h in mixture.hypotheses
    ]
    total = sum(raw, Fraction(0))
    if total > 0:
        posts = [w / total for w in raw]
    else:
        posts = raw  # dead mixture: all-zero posteriors, predictions will raise
    hyps = tuple(
        replace(h, posterior=w) for h, w in zip(mixture.hypotheses, posts)
    )
    return Mixture(hyps, mixture.normalizer, history, mixture.cfg, mixture.bound)


@dataclass(frozen=True)
class RegretReport:
    """Per-step comparison of the mixture against one designated hypothesis.

    ratio_product telescopes to Pr_mixture[seq] / Pr_hypothesis[seq], which
    is always at least the hypothesis's raw weight 2**-len(Q).  mistakes[e]
    counts steps where the mixture's conditional undercuts the hypothesis's
    by more than the factor (1 - e).
    """

    q: Program
    sequence: str
    per_step_mixture: tuple[Fraction, ...]  # mixture conditional per bit
    per_step_hypothesis: tuple[Fraction, ...]  # hypothesis conditional per bit
    per_step_ratios: tuple[Fraction, ...]
    ratio_product: Fraction
    mistakes: dict[Fraction, int]
    max_step_ratio: Fraction
    nonmistake_log2_excess: dict[Fraction, float]


def regret_report(
    q: Program,
    sequence: str,
    mixture: Mixture,
    eps_list: list[Fraction],
) -> RegretReport:
    if not any(h.program.code == q.code for h in mixture.hypotheses):
        raise ValueError("designated hypothesis is not in the mixture")
    if toyvm.prefix_probability(q, sequence, mixture.cfg) == 0:
        raise UnsupportedSequence(
            f"hypothesis assigns zero probability to {sequence!r}"
        )
    ratios: list[Fraction] = []
    p_us: list[Fraction] = []
    p_qs: list[Fraction] = []
    for n in range(1, len(sequence) + 1):
        head, full = sequence[: n - 1], sequence[:n]
        p_u = joint_probability(mixture, full) / joint_probability(mixture, head)
        p_q = toyvm.prefix_probability(q, full, mixture.cfg) / toyvm.prefix_probability(
            q, head, mixture.cfg
        )
        p_us.append(p_u)
        p_qs.append(p_q)
        ratios.append(p_u / p_q)
    product = Fraction(1)
    for r in ratios:
        product *= r
    mistakes = {}
    excess = {}
    for eps in eps_list:
        eps = Fraction(eps)
        mistakes[eps] = sum(1 for r in ratios if r < 1 - eps)
        # realized slack from steps where the mixture beat the hypothesis;
        # it bounds how many mistakes the product inequality permits
        excess[eps] = sum(
            math.log2(float(r)) for r in ratios if r >= 1 - eps and r > 1
        )
    return RegretReport(
        q=q,
        sequence=sequence,
        per_step_mixture=tuple(p_us),
        per_step_hypothesis=tuple(p_qs),
        per_step_ratios=tuple(ratios),
        ratio_product=product,
        mistakes=mistakes,
        max_step_ratio=max(ratios) if ratios else Fraction(1),
        nonmistake_log2_excess=excess,
    )


@dataclass(frozen=True)
class DiagonalStep:
    bit: str
    conditional: Fraction  # mixture probability of the realized bit
    cumulative: Fraction  # mixture probability of the whole realized prefix


def diagonal_sequence(mixture: Mixture, n: int) -> tuple[str, list[DiagonalStep]]:
    """Adversarial bits: pick whichever next bit the mixture finds less likely.

    Each realized bit gets conditional probability <= 1/2, so the mixture's
    probability on the prefix decays at least as fast as 2**-n.  Raises
    ZeroMassHistory (with the failing step) if the walk exhausts the bounded
    support of the truncated mixture.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    history = ""
    steps: list[DiagonalStep] = []
    for i in range(1, n + 1):
        denom = joint_probability(mixture, history)
        if denom == 0:
            raise ZeroMassHistory(history, step=i)
        p1 = joint_probability(mixture, history + "1")
        p0 = joint_probability(mixture, history + "0")
        if p0 == 0 and p1 == 0:
            raise ZeroMassHistory(history, step=i)
        bit = "0" if p1 > p0 else "1"
        chosen = p0 if bit == "0" else p1
        history += bit
        steps.append(DiagonalStep(bit, chosen / denom, chosen))
    return history, steps


def omega_truncated(bound: int, cfg: MachineConfig | None = None) -> Fraction:
    """Sum of 2**-len(P) over enumerated programs that surely halt in budget.

    "Surely" is per-branch, but control flow never depends on random bits,
    so one run decides it.  Monotone nondecreasing in both the bound and the
    step budget.  The empty program halts immediately by convention, so the
    value at bound 1 is exactly 1/2.
    """
    cfg = cfg or MachineConfig()
    total = Fraction(0)
    for p in toyvm.enumerate_programs(bound):
        if toyvm.sure_halts(p, cfg):
            total += Fraction(1, 2 ** len(p))
    return total
