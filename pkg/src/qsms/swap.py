"""Entanglement swapping of one cat state with n Bell states.

Two engines produce the same :class:`SwapOutcome`:

* :func:`swap_dense` runs the state vector.  Bell pairs are attached and
  measured one at a time, so the register never exceeds n + 3 qudits.
* :func:`swap_labels` draws the branch (k_i, l_i) uniformly and applies the
  label update rules

      v~   = v + sum_i k_i        r~_i = r_i - k_i
      u~_i = w_i + l_i            w~_i = u - l_i         (all mod d)

Qudit naming inside a swap: the cat state occupies ``s0 .. sn`` and Bell
pair i occupies ``(h_i, t_i)``.  Party i measures the ordered pair
``(h_i, s_i)`` in the Bell basis; the holder of ``s0, t_1 .. t_n`` measures
those in the cat basis.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from typing import Hashable, Sequence

import numpy as np
from scipy import stats

from .errors import EngineIdentityError
from .register import (
    MeasurementOutcome,
    QuditRegister,
    guard_amplitudes,
    measure_bell,
    measure_cat,
    permute,
    tensor_attach,
)
from .states import BellLabel, CatLabel, identify_cat, make_bell, make_cat


@dataclass(frozen=True)
class SwapInstance:
    dim: int
    cat: CatLabel
    bells: tuple[BellLabel, ...]

    def __post_init__(self):
        object.__setattr__(self, "bells", tuple(BellLabel(*b) for b in self.bells))
        if len(self.bells) < 1:
            raise ValueError("swapping needs at least one Bell state")
        if len(self.cat.u) != len(self.bells) or not self.cat.is_uniform:
            raise ValueError("cat label must carry one uniform shift per Bell state")
        self.cat.validate(self.dim)
        for b in self.bells:
            b.validate(self.dim)

    @property
    def n(self) -> int:
        return len(self.bells)

    @property
    def u(self) -> int:
        return self.cat.u[0]

    @classmethod
    def random(cls, dim: int, n: int, rng: np.random.Generator) -> "SwapInstance":
        v, u = (int(x) for x in rng.integers(0, dim, size=2))
        bells = [BellLabel(*map(int, rng.integers(0, dim, size=2))) for _ in range(n)]
        return cls(dim, CatLabel.uniform(v, u, n), tuple(bells))


@dataclass(frozen=True)
class SwapOutcome:
    bell_results: tuple[BellLabel, ...]
    tp_result: CatLabel
    k: tuple[int, ...]
    l: tuple[int, ...]


def apply_branch(inst: SwapInstance, k: Sequence[int], l: Sequence[int]) -> SwapOutcome:
    d, u = inst.dim, inst.u
    k = tuple(int(x) % d for x in k)
    l = tuple(int(x) % d for x in l)
    bells = tuple(BellLabel((b.r - ki) % d, (u - li) % d) for b, ki, li in zip(inst.bells, k, l))
    tp = CatLabel((inst.cat.v + sum(k)) % d, tuple((b.w + li) % d for b, li in zip(inst.bells, l)))
    return SwapOutcome(bells, tp, k, l)


def implied_branch(inst: SwapInstance, bell_results: Sequence[BellLabel]) -> tuple[tuple, tuple]:
    """Recover (k, l) from the parties' outcomes: k_i = r_i - r~_i, l_i = u - w~_i."""
    d = inst.dim
    k = tuple((b.r - o.r) % d for b, o in zip(inst.bells, bell_results))
    l = tuple((inst.u - o.w) % d for o in bell_results)
    return k, l


def closure_violations(inst: SwapInstance, out: SwapOutcome) -> list[str]:
    """Exact integer check of the four update rules; empty list means closed."""
    d, u = inst.dim, inst.u
    bad = []
    for i, (b, o, ki, li) in enumerate(zip(inst.bells, out.bell_results, out.k, out.l)):
        if (o.r + ki) % d != b.r:
            bad.append(f"party {i + 1}: r~ + k != r")
        if (o.w + li) % d != u:
            bad.append(f"party {i + 1}: w~ + l != u")
        if (out.tp_result.u[i] - li) % d != b.w:
            bad.append(f"party {i + 1}: u~ - l != w")
    if (out.tp_result.v - sum(out.k)) % d != inst.cat.v:
        bad.append("v~ - sum(k) != v")
    return bad


def summation_value(inst: SwapInstance, out: SwapOutcome) -> int:
    """v~ + sum u~ + sum (r~ + w~) - v - n u, which must equal sum (r_i + w_i)."""
    d = inst.dim
    total = out.tp_result.v + sum(out.tp_result.u)
    total += sum(b.r + b.w for b in out.bell_results)
    return (total - inst.cat.v - inst.n * inst.u) % d


# ----------------------------------------------------------------------------
# dense engine
# ----------------------------------------------------------------------------

@dataclass
class DenseSwapResult:
    bell_outcomes: list[MeasurementOutcome]
    tp_outcome: MeasurementOutcome
    remainder: QuditRegister


def bell_stage(
    cat_reg: QuditRegister,
    s_ids: Sequence[Hashable],
    bells: Sequence[tuple[QuditRegister, Hashable, Hashable]],
    rng: np.random.Generator,
    postselect: Sequence[tuple[int, int]] | None = None,
) -> tuple[list[MeasurementOutcome], QuditRegister]:
    """Attach each Bell pair in turn and Bell-measure ``(h_i, s_i)``."""
    if len(s_ids) != len(bells):
        raise ValueError("need exactly one Bell pair per non-leading cat qudit")
    reg = cat_reg
    outcomes = []
    for i, ((pair, h, _t), s) in enumerate(zip(bells, s_ids)):
        reg = tensor_attach(reg, pair)
        forced = None if postselect is None else postselect[i]
        out, reg = measure_bell(reg, h, s, rng, postselect=forced)
        outcomes.append(out)
    return outcomes, reg


def swap_registers(
    cat_reg: QuditRegister,
    cat_ids: Sequence[Hashable],
    bells: Sequence[tuple[QuditRegister, Hashable, Hashable]],
    rng: np.random.Generator,
    postselect: Sequence[tuple[int, int]] | None = None,
) -> DenseSwapResult:
    """Sequential swap on live registers.

    ``cat_ids`` are ``(s0, s1, .., sn)``; each entry of ``bells`` is
    ``(register, h_id, t_id)``.  Registers may carry extra qudits (for
    instance an eavesdropper's ancilla); those stay in the remainder.
    """
    s0, *s_rest = cat_ids
    outcomes, reg = bell_stage(cat_reg, s_rest, bells, rng, postselect)
    tp_ids = (s0,) + tuple(t for _, _, t in bells)
    tp_out, remainder = measure_cat(reg, tp_ids, rng)
    return DenseSwapResult(outcomes, tp_out, remainder)


def _instance_registers(inst: SwapInstance):
    n = inst.n
    cat_ids = tuple(f"s{i}" for i in range(n + 1))
    cat_reg = make_cat(inst.dim, inst.cat, ids=cat_ids)
    bells = [
        (make_bell(inst.dim, b, ids=(f"h{i + 1}", f"t{i + 1}")), f"h{i + 1}", f"t{i + 1}")
        for i, b in enumerate(inst.bells)
    ]
    return cat_reg, cat_ids, bells


def swap_dense(
    inst: SwapInstance,
    rng: np.random.Generator,
    postselect: Sequence[tuple[int, int]] | None = None,
    verify_collapse: bool = True,
) -> SwapOutcome:
    """State-vector swap; ``postselect`` forces the parties' Bell outcomes."""
    guard_amplitudes(inst.dim, inst.n + 3)
    cat_reg, cat_ids, bells = _instance_registers(inst)
    s0, *s_rest = cat_ids
    outcomes, reg = bell_stage(cat_reg, s_rest, bells, rng, postselect)
    results = [BellLabel(*o.values) for o in outcomes]

    k, l = implied_branch(inst, results)
    predicted = apply_branch(inst, k, l)
    tp_ids = (s0,) + tuple(t for _, _, t in bells)
    if verify_collapse:
        label = identify_cat(permute(reg, tp_ids))
        if label != predicted.tp_result:
            raise EngineIdentityError(
                f"collapsed register is {label}, expected {predicted.tp_result}"
            )
    tp_out, _ = measure_cat(reg, tp_ids, rng)
    outcome = SwapOutcome(tuple(results), CatLabel.from_values(tp_out.values), k, l)
    bad = closure_violations(inst, outcome)
    if bad or outcome.tp_result != predicted.tp_result:
        raise EngineIdentityError(f"swap identities violated for {inst}: {bad}")
    return outcome


# ----------------------------------------------------------------------------
# label engine
# ----------------------------------------------------------------------------

def swap_labels(
    inst: SwapInstance,
    rng: np.random.Generator,
    branch: tuple[Sequence[int], Sequence[int]] | None = None,
) -> SwapOutcome:
    """Classical swap: uniform (k_i, l_i) unless ``branch=(k, l)`` is forced."""
    if branch is None:
        draws = rng.integers(0, inst.dim, size=(inst.n, 2))
        k, l = draws[:, 0], draws[:, 1]
    else:
        k, l = branch
    return apply_branch(inst, k, l)


# ----------------------------------------------------------------------------
# cross validation
# ----------------------------------------------------------------------------

P_MIN = 1e-3


@dataclass
class ChiSquareResult:
    name: str
    statistic: float
    dof: int
    p_value: float

    @property
    def passed(self) -> bool:
        return self.p_value > P_MIN


@dataclass
class CrossValidationReport:
    dim: int
    n: int
    trials: int
    closure_failures: int = 0
    first_failure: str | None = None
    tests: list[ChiSquareResult] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return self.closure_failures == 0 and all(t.passed for t in self.tests)

    def to_text(self) -> str:
        lines = [
            f"cross-validation d={self.dim} n={self.n} trials={self.trials}",
            f"  closure failures: {self.closure_failures}",
        ]
        for t in self.tests:
            verdict = "ok" if t.passed else "FAIL"
            lines.append(
                f"  {t.name:<34} chi2={t.statistic:10.3f} dof={t.dof:4d} "
                f"p={t.p_value:.4f}  {verdict}"
            )
        if self.first_failure:
            lines.append(f"  first failure: {self.first_failure}")
        lines.append(f"  result: {'PASS' if self.passed else 'FAIL'}")
        return "\n".join(lines)


def _uniformity(name: str, keys: list, n_cells: int) -> ChiSquareResult:
    counts = Counter(keys)
    observed = np.zeros(n_cells)
    for key, c in counts.items():
        observed[key] = c
    stat, p = stats.chisquare(observed)
    return ChiSquareResult(name, float(stat), n_cells - 1, float(p))


def _homogeneity(name: str, a: list, b: list, n_cells: int) -> ChiSquareResult:
    table = np.zeros((2, n_cells))
    for row, keys in enumerate((a, b)):
        for key in keys:
            table[row, key] += 1
    table = table[:, table.sum(axis=0) > 0]
    stat, p, dof, _ = stats.chi2_contingency(table, correction=False)
    return ChiSquareResult(name, float(stat), int(dof), float(p))


def cross_validate(dim: int, n: int, trials: int, rng: np.random.Generator) -> CrossValidationReport:
    """Run both engines on ``trials`` random instances and compare them.

    When d^(2n) cells leave at least five expected counts per cell the joint
    branch (k_1, l_1, ..., k_n, l_n) is tested; otherwise each party's
    (k_i, l_i) marginal is tested separately.
    """
    guard_amplitudes(dim, n + 3)
    report = CrossValidationReport(dim, n, trials)
    dense_branches, label_branches, dense_bells = [], [], []
    for trial in range(trials):
        inst = SwapInstance.random(dim, n, rng)
        for engine, sink in ((swap_dense, dense_branches), (swap_labels, label_branches)):
            try:
                out = engine(inst, rng)
                bad = closure_violations(inst, out)
                if summation_value(inst, out) != sum(b.r + b.w for b in inst.bells) % dim:
                    bad.append("summation identity")
            except EngineIdentityError as exc:
                out, bad = None, [str(exc)]
            if bad:
                report.closure_failures += 1
                if report.first_failure is None:
                    report.first_failure = f"trial {trial} {engine.__name__} {inst}: {bad}"
                continue
            sink.append(out)
            if engine is swap_dense:
                dense_bells.append(out.bell_results)

    def pair_key(k, l):
        return int(k) * dim + int(l)

    cells = dim ** (2 * n)
    if cells * 5 <= trials:
        def joint(out):
            key = 0
            for ki, li in zip(out.k, out.l):
                key = key * dim * dim + pair_key(ki, li)
            return key

        a = [joint(o) for o in dense_branches]
        b = [joint(o) for o in label_branches]
        report.tests.append(_uniformity("dense joint (k,l) uniform", a, cells))
        report.tests.append(_homogeneity("dense vs label joint (k,l)", a, b, cells))
    else:
        for i in range(n):
            a = [pair_key(o.k[i], o.l[i]) for o in dense_branches]
            b = [pair_key(o.k[i], o.l[i]) for o in label_branches]
            report.tests.append(_uniformity(f"dense (k{i + 1},l{i + 1}) uniform", a, dim * dim))
            report.tests.append(_homogeneity(f"dense vs label (k{i + 1},l{i + 1})", a, b, dim * dim))
    for i in range(n):
        keys = [pair_key(bells[i].r, bells[i].w) for bells in dense_bells]
        report.tests.append(_uniformity(f"dense party {i + 1} (r~,w~) uniform", keys, dim * dim))
    return report
