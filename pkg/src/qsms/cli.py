"""``qsms`` command-line front end.

    qsms run --n 3 --d 7 --data "1,3;3,6;2,5" --skip-detections --seed 42
    qsms attack --kind intercept-resend --target T --d 2 --sigma 16 --trials 10000
    qsms validate --d 3 --n 2 --trials 10000
    qsms paper-example

Exit codes: 0 success, 1 usage or configuration error, 2 protocol abort,
3 failed check (paper-example mismatch or validate failure).  The default
seed comes from ``QSMS_SEED``.
"""

from __future__ import annotations

import argparse
import os
import re
import sys
from pathlib import Path
from typing import Sequence

import numpy as np

from . import adversary, protocol, states, swap
from .errors import MemoryGuardError, NotUnitaryError, QSMSError
from .states import CatLabel

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_ABORT = 2
EXIT_CHECK_FAILED = 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on bad flags; 2 is reserved for protocol aborts here
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _default_seed() -> int:
    raw = os.environ.get("QSMS_SEED", "0")
    try:
        return int(raw)
    except ValueError:
        raise UsageError(f"QSMS_SEED must be an integer, got {raw!r}") from None


def parse_datasets(text: str) -> list[list[int]]:
    """``"1,3;3,6;2,5"`` or a file path holding one party per line (commas or spaces)."""
    path = Path(text)
    if path.is_file():
        lines = [ln.strip() for ln in path.read_text().splitlines()]
        text = ";".join(ln for ln in lines if ln and not ln.startswith("#"))
    try:
        rows = [[int(x) for x in re.split(r"[,\s]+", part.strip())]
                for part in text.split(";") if part.strip()]
    except ValueError:
        raise UsageError(f"cannot parse datasets {text!r}") from None
    if not rows:
        raise UsageError("empty dataset")
    if len({len(r) for r in rows}) != 1:
        raise UsageError("every party needs the same number of values")
    return rows


def _write(path: str | None, text: str) -> None:
    if path:
        Path(path).write_text(text)


def _table(header: Sequence[str], rows: Sequence[Sequence]) -> str:
    cells = [list(map(str, header))] + [[str(c) for c in r] for r in rows]
    widths = [max(len(r[i]) for r in cells) for i in range(len(header))]
    # numbers right-aligned, trailing note column left-aligned
    lines = ["  ".join([c.rjust(w) for c, w in zip(r[:-1], widths)] + [r[-1]]).rstrip()
             for r in cells]
    lines.insert(1, "  ".join("-" * w for w in widths))
    return "\n".join(lines)


# ----------------------------------------------------------------------------
# run
# ----------------------------------------------------------------------------

def cmd_run(args) -> int:
    datasets = parse_datasets(args.data)
    n = args.n if args.n is not None else len(datasets)
    delta, sigma = (0, 0) if args.skip_detections else (args.delta, args.sigma)
    cfg = protocol.ProtocolConfig(
        n=n, m=len(datasets[0]), d=args.d, delta=delta, sigma=sigma,
        error_threshold=args.threshold, seed=args.seed, exact_sum=args.exact_sum,
    )
    tr = protocol.run_protocol(cfg, datasets)
    _write(args.out, tr.to_jsonl())
    if args.verbose:
        for rec in tr.records:
            print(rec)
    for rep in (tr.detection1, tr.detection2):
        if rep is not None:
            s = rep.summary()
            print(f"{s['kind']}: checked={s['checked']} failures={s['failures']} "
                  f"error_rate={s['error_rate']:.4f} verdict={s['verdict']}")
    if tr.aborted:
        print(f"aborted: {tr.abort_reason}")
        return EXIT_ABORT
    print(_table(["round", "sum"], [(j + 1, s) for j, s in enumerate(tr.sums)]))
    return EXIT_OK


# ----------------------------------------------------------------------------
# paper-example
# ----------------------------------------------------------------------------

EXAMPLE_DATA = [[1, 3], [3, 6], [2, 5]]
EXAMPLE_D = 7
EXAMPLE_CATS = [CatLabel.uniform(4, 1, 3), CatLabel.uniform(3, 2, 3),
                CatLabel.uniform(2, 5, 3), CatLabel.uniform(6, 3, 3)]
EXAMPLE_R = [[1, 2], [1, 4], [0, 3]]
# published (k, l) per (party, round); l for party 1 round 1 is printed as 1
EXAMPLE_K = [[1, 1], [0, 3], [0, 1]]
EXAMPLE_L_PUBLISHED = [[1, 0], [1, 1], [0, 0]]
TYPO_CELL = (0, 0)  # (party index, round index) of the inconsistent l entry
# published Bell labels after swapping and announcements, per (party, round)
EXAMPLE_BELL_AFTER = [[(0, 1), (1, 2)], [(1, 0), (1, 1)], [(0, 1), (2, 2)]]
EXAMPLE_Q = [[1, 3], [1, 2], [1, 4]]
EXAMPLE_CAT_AFTER = [(5, 0, 3, 2), (1, 1, 3, 2)]
EXAMPLE_SUMS = [6, 0]


def paper_example(typo_fix: bool = True) -> tuple[list[list], list[list], bool]:
    """Replay the three-party worked example; return (table1, table2, all_match)."""
    l_used = [row[:] for row in EXAMPLE_L_PUBLISHED]
    if typo_fix:
        i, j = TYPO_CELL
        l_used[i][j] = 0
    n, m = len(EXAMPLE_DATA), len(EXAMPLE_DATA[0])
    branches = [([EXAMPLE_K[i][j] for i in range(n)], [l_used[i][j] for i in range(n)])
                for j in range(m)]
    cfg = protocol.ProtocolConfig(n=n, m=m, d=EXAMPLE_D, delta=0, sigma=0, seed=0)
    tr = protocol.run_protocol(cfg, EXAMPLE_DATA, cat_labels=EXAMPLE_CATS,
                               r_values=EXAMPLE_R, branches=branches)

    enc = {(r["party"], r["round"]): r for r in tr.events("encode")}
    bell = {(int(r["holder"][1:]), r["round"]): tuple(r["label"])
            for r in tr.events("measure") if r["kind"] == "bell"}
    cat = {r["round"]: tuple(r["label"]) for r in tr.events("measure") if r["kind"] == "cat"}
    q = {(int(r["holder"][1:]), r["round"]): r["q"] for r in tr.events("announce")}

    ok = True
    table1 = []
    for i in range(n):
        for j in range(m):
            e = enc[(i + 1, j)]
            got_bell, got_q = bell[(i + 1, j)], q[(i + 1, j)]
            match = got_bell == EXAMPLE_BELL_AFTER[i][j] and got_q == EXAMPLE_Q[i][j]
            ok &= match
            note = "match" if match else "MISMATCH"
            if (i, j) == TYPO_CELL and typo_fix:
                note += f" (l printed as {EXAMPLE_L_PUBLISHED[i][j]}, typo; 0 used)"
            table1.append([i + 1, j + 1, e["x"], e["r"], e["w"], f"({e['r']},{e['w']})",
                           EXAMPLE_K[i][j], l_used[i][j], _fmt(got_bell),
                           _fmt(EXAMPLE_BELL_AFTER[i][j]), got_q, EXAMPLE_Q[i][j], note])
    table2 = []
    for j in range(m):
        got = cat[j]
        match = got == EXAMPLE_CAT_AFTER[j] and tr.sums[j] == EXAMPLE_SUMS[j]
        ok &= match
        table2.append([j + 1, _fmt(EXAMPLE_CATS[j].values), *got, _fmt(got),
                       _fmt(EXAMPLE_CAT_AFTER[j]), tr.sums[j], EXAMPLE_SUMS[j],
                       "match" if match else "MISMATCH"])
    return table1, table2, ok


def _fmt(values) -> str:
    return "(" + ",".join(map(str, values)) + ")"


def cmd_paper_example(args) -> int:
    table1, table2, ok = paper_example(typo_fix=not args.no_typo_fix)
    print("Parties: Bell states, swap branch (k, l), announced q")
    print(_table(["i", "j", "x", "r", "w", "Phi", "k", "l", "Phi'", "pub", "q", "pub", ""],
                 table1))
    print()
    print("TP: cat states and sums")
    print(_table(["j", "Psi", "v~", "u~1", "u~2", "u~3", "Psi'", "pub", "sum", "pub", ""],
                 table2))
    print()
    print("all derived columns match" if ok else "derived columns differ from the published values")
    return EXIT_OK if ok else EXIT_CHECK_FAILED


# ----------------------------------------------------------------------------
# attack
# ----------------------------------------------------------------------------

def load_unitary(spec: str, d: int) -> adversary.AttackUnitary:
    if spec == "identity":
        return adversary.AttackUnitary.identity(d)
    if spec == "cnot":
        return adversary.AttackUnitary.cnot(d)
    path = Path(spec)
    if not path.is_file():
        raise UsageError(f"unitary must be 'identity', 'cnot' or a .npy file, got {spec!r}")
    try:
        mat = np.load(path, allow_pickle=False)
    except ValueError as exc:
        raise UsageError(f"cannot read unitary from {spec}: {exc}") from None
    if mat.ndim != 2 or mat.shape[0] % d:
        raise UsageError(f"unitary in {spec} has shape {mat.shape}, not (d*a, d*a)")
    return adversary.AttackUnitary(d, mat.shape[0] // d, mat)


def _target(raw: str) -> str:
    return raw + "1" if raw.upper() in ("S", "T") else raw


def cmd_attack(args) -> int:
    if args.kind == "tp-ledger":
        return _cmd_ledger(args)
    target = _target(args.target)
    samples = args.sigma if target[0].upper() == "T" else args.delta
    if args.kind == "intercept-resend":
        rep = adversary.intercept_resend(
            target, args.basis, n=args.n, d=args.d, samples=samples,
            trials=args.trials, seed=args.seed, variant=args.variant,
        )
        oracle = 1 - (1 - 0.5 * (1 - 1 / args.d)) ** samples
    else:
        U = load_unitary(args.unitary, args.d)
        rep = adversary.entangle_ancilla(U, target, n=args.n, samples=samples,
                                         trials=args.trials, seed=args.seed)
        oracle = None
    _write(args.out, rep.to_jsonl())
    rate = rep.detection2_error_rate if target[0].upper() == "T" else rep.detection1_error_rate
    print(f"attack={rep.kind} target={rep.target} d={args.d} n={args.n} "
          f"samples={samples} trials={rep.trials}")
    print(f"per-sample error rate: {rate:.6f}")
    print(f"detection probability: {rep.detection_probability:.6f}")
    if oracle is not None:
        print(f"oracle detection probability (random basis checks): {oracle:.6f}")
    for basis, r in sorted(rep.basis_error_rates.items()):
        print(f"  {basis} error rate: {r:.6f}")
    for key, value in sorted(rep.information.items()):
        print(f"  {key}: {value}")
    return EXIT_OK


def _cmd_ledger(args) -> int:
    n = args.n
    datasets = parse_datasets(args.data) if args.data else [[i % args.d] for i in range(1, n + 1)]
    if len(datasets) != n:
        raise UsageError(f"--data has {len(datasets)} parties but --n is {n}")
    rep = adversary.announcement_uniformity(datasets, args.d, args.trials, seed=args.seed)
    _write(args.out, rep.to_jsonl())
    print(f"attack=tp-ledger n={n} d={args.d} runs={args.trials} inputs={datasets}")
    print(f"q joint uniformity chi2 p-value: {rep.joint_p_value:.6f}")
    for i, p in enumerate(rep.party_p_values, 1):
        print(f"  q_{i} uniformity p-value: {p:.6f}")
    if args.d**n <= 729:
        ledgers = adversary.exhaustive_ledger(n, args.d, seed=args.seed)
        uniform = sum(led.uniform_over_consistent for _, led in ledgers)
        print(f"TP posterior uniform over sum-consistent inputs: {uniform}/{len(ledgers)} inputs")
    return EXIT_OK


# ----------------------------------------------------------------------------
# validate
# ----------------------------------------------------------------------------

def cmd_validate(args) -> int:
    rng = np.random.default_rng(args.seed)
    trials = args.trials if args.trials is not None else (10_000 if args.d <= 3 else 1_000)
    report = swap.cross_validate(args.d, args.n, trials, rng)
    print(report.to_text())
    rows = states.measurement_suite(args.d, args.n, min(trials, 1_000), rng)
    table = [[r.d, r.n, _fmt(r.label.values), r.basis, r.trials, r.failures,
              "perturbed" if r.perturbed else "honest", "pass" if r.passed else "FAIL"]
             for r in rows]
    print()
    print(_table(["d", "n", "label", "basis", "trials", "failures", "state", ""], table))
    ok = report.passed and all(r.passed for r in rows)
    print()
    print("validate: PASS" if ok else "validate: FAIL")
    return EXIT_OK if ok else EXIT_CHECK_FAILED


# ----------------------------------------------------------------------------
# entry point
# ----------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="qsms", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p, n_default):
        p.add_argument("--n", type=int, default=n_default, help="number of parties")
        p.add_argument("--d", type=int, default=2, help="qudit dimension")
        p.add_argument("--seed", type=int, default=None, help="RNG seed (default $QSMS_SEED or 0)")
        p.add_argument("--out", default=None, help="write the JSONL record here")
        p.add_argument("-v", "--verbose", action="store_true")

    p = sub.add_parser("run", help="simulate the summation protocol")
    common(p, None)
    p.add_argument("--data", required=True, help='"1,3;3,6;2,5" or a file, one party per line')
    p.add_argument("--delta", type=int, default=2, help="Detection-1 samples per party")
    p.add_argument("--sigma", type=int, default=2, help="Detection-2 samples per party")
    p.add_argument("--threshold", type=float, default=0.0, help="abort above this error rate")
    p.add_argument("--skip-detections", action="store_true")
    p.add_argument("--exact-sum", action="store_true", help="require d > n * max input")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("attack", help="run an attack experiment")
    common(p, 2)
    p.add_argument("--kind", required=True,
                   choices=["intercept-resend", "entangle-ancilla", "tp-ledger"])
    p.add_argument("--target", default="T1", help="S<i> or T<i>; bare S/T means party 1")
    p.add_argument("--basis", default="B1", choices=["B1", "B2", "random"])
    p.add_argument("--variant", default="measure-resend",
                   choices=["measure-resend", "fake-particle"])
    p.add_argument("--unitary", default="cnot", help="identity, cnot, or a .npy matrix")
    p.add_argument("--delta", type=int, default=16)
    p.add_argument("--sigma", type=int, default=16)
    p.add_argument("--trials", type=int, default=1000)
    p.add_argument("--data", default=None, help="fixed inputs for tp-ledger")
    p.set_defaults(func=cmd_attack)

    p = sub.add_parser("validate", help="cross-validate the engines and sample (c1)/(c2)")
    common(p, 2)
    p.add_argument("--trials", type=int, default=None)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("paper-example", help="replay the three-party worked example")
    p.add_argument("--no-typo-fix", action="store_true",
                   help="use the l entry exactly as published")
    p.set_defaults(func=cmd_paper_example)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if getattr(args, "seed", 0) is None:
            args.seed = _default_seed()
        return args.func(args)
    except (UsageError, QSMSError, NotUnitaryError, MemoryGuardError, ValueError) as exc:
        print(f"qsms: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
