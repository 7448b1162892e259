"""Command-line front end.

Subcommands: validate-ops, analyze, trace, sample, reduce, end-to-end,
amplify.  All pass/fail decisions are made on exact rationals; decimal
renderings are labeled approximate and never compared.  Exit codes: 0 for
success/consistency, 1 for a property violation (completeness failure,
closed-form mismatch, oracle/protocol disagreement), 2 for usage, parse,
and prover-protocol errors.

Structured output (--format structured) is line oriented: every line is
space-separated key=value tokens, parseable without lookahead.

External provers are separate processes speaking a line protocol on stdio:
the verifier writes "PASS <k> EVENT <i> REQUEST" and expects "SELECT" or
"SKIP" in reply; while sampling, the verifier also broadcasts
"OUTCOME <label>" after every quantum step, so the prover sees everything
the verifier sees.  A response timeout is a protocol error.
"""

from __future__ import annotations

import argparse
import queue
import random
import shlex
import subprocess
import sys
import threading
from dataclasses import dataclass
from fractions import Fraction

from . import analysis, machine, protocol, reduction
from .errors import ConsistencyError, GuardError, ProtocolError, QamError
from .exact import (
    OperationElement,
    OutcomeLabel,
    Superoperator,
    check_completeness,
    scale_mat,
    squared_norm,
)
from .machine import INITIALIZED, OutcomeAction
from .protocol import SELECT, SKIP, Instance

HUMAN = "human"
STRUCTURED = "structured"

_LABEL_NAMES = {
    OutcomeLabel.MOVE_RIGHT: "MOVE_RIGHT",
    OutcomeLabel.RESTART: "RESTART",
    OutcomeLabel.ACCEPT: "ACCEPT",
    OutcomeLabel.REJECT: "REJECT",
    INITIALIZED: "INITIALIZED",
}


class CliError(Exception):
    """Usage or parse problem; maps to exit code 2."""


def fmt_q(x: Fraction) -> str:
    return f"{x.numerator}/{x.denominator}"


def fmt_approx(x: Fraction) -> str:
    return repr(float(x))


def fmt_selection(selection) -> str:
    return ",".join(SELECT if keep else SKIP for keep in selection)


def parse_instance_text(text: str) -> Instance:
    tokens = text.split()
    if len(tokens) < 2:
        raise CliError('instance must be "S a1 [a2 ...]" (decimal integers)')
    for pos, tok in enumerate(tokens, start=1):
        if not tok.isdigit():
            raise CliError(f"instance token {pos} ({tok!r}) is not a decimal integer")
    return Instance(int(tokens[0]), tuple(int(t) for t in tokens[1:]))


def parse_witness_text(text: str, n: int | None = None) -> tuple[bool, ...]:
    tokens = text.split(",")
    out = []
    for pos, tok in enumerate(tokens, start=1):
        word = tok.strip().lower()
        if word == SELECT:
            out.append(True)
        elif word == SKIP:
            out.append(False)
        else:
            raise CliError(f"witness token {pos} ({tok!r}) must be 'select' or 'skip'")
    if n is not None and len(out) != n:
        raise CliError(f"witness has {len(out)} entries but the instance has {n} values")
    return tuple(out)


class ExternalProver:
    """A prover subprocess on the stdio line protocol."""

    def __init__(self, command: str, timeout: float = 10.0):
        self.timeout = timeout
        try:
            self.proc = subprocess.Popen(
                shlex.split(command),
                stdin=subprocess.PIPE,
                stdout=subprocess.PIPE,
                text=True,
                bufsize=1,
            )
        except OSError as exc:
            raise CliError(f"cannot start prover {command!r}: {exc}") from exc
        self._lines: queue.Queue = queue.Queue()
        threading.Thread(target=self._pump, daemon=True).start()

    def _pump(self):
        assert self.proc.stdout is not None
        for line in self.proc.stdout:
            self._lines.put(line)
        self._lines.put(None)

    def _send(self, line: str):
        assert self.proc.stdin is not None
        try:
            self.proc.stdin.write(line + "\n")
            self.proc.stdin.flush()
        except (BrokenPipeError, ValueError) as exc:
            raise ProtocolError("prover closed its input") from exc

    def request(self, pass_index: int, event_index: int) -> str:
        self._send(f"PASS {pass_index} EVENT {event_index} REQUEST")
        try:
            line = self._lines.get(timeout=self.timeout)
        except queue.Empty:
            raise ProtocolError(
                f"prover response timeout ({self.timeout}s) at pass {pass_index} event {event_index}"
            ) from None
        if line is None:
            raise ProtocolError("prover terminated mid-protocol")
        word = line.strip().upper()
        if word == "SELECT":
            return SELECT
        if word == "SKIP":
            return SKIP
        raise ProtocolError(f"unknown prover response {line.strip()!r}")

    def broadcast(self, outcome):
        self._send(f"OUTCOME {_LABEL_NAMES.get(outcome, str(outcome))}")

    def close(self):
        for stream in (self.proc.stdin, self.proc.stdout):
            try:
                if stream:
                    stream.close()
            except OSError:
                pass
        self.proc.terminate()
        try:
            self.proc.wait(timeout=2)
        except subprocess.TimeoutExpired:  # pragma: no cover - unruly prover
            self.proc.kill()


@dataclass
class RunConfig:
    """One resolved CLI invocation: exactly one witness source."""

    command: str
    fmt: str
    instance: Instance | None = None
    tape: str | None = None
    witness: tuple[bool, ...] | None = None
    use_oracle: bool = False
    prover: ExternalProver | None = None
    seed: int = 0
    passes: int = 0
    rounds: int = 0

    def witness_sources(self) -> int:
        return sum((self.witness is not None, self.use_oracle, self.prover is not None))


def _say(lines, human_text, pairs, fmt):
    if fmt == HUMAN:
        lines.append(human_text)
    else:
        lines.append(" ".join(f"{k}={v}" for k, v in pairs))


# --- validate-ops ----------------------------------------------------------

def cmd_validate_ops(fmt: str, corrupt: str | None = None) -> int:
    ops = list(protocol.PROTOCOL_OPERATORS)
    if corrupt is not None:
        names = [op.name for op in ops]
        if corrupt not in names:
            raise CliError(f"unknown operator {corrupt!r}; choose from {', '.join(names)}")
        idx = names.index(corrupt)
        broken = Superoperator(
            ops[idx].name,
            tuple(
                OperationElement(scale_mat(Fraction(1, 2), el.matrix), el.label)
                for el in ops[idx].elements
            ),
        )
        ops[idx] = broken
    all_ok = True
    out = []
    for op in ops:
        ok = check_completeness(op)
        all_ok &= ok
        _say(
            out,
            f"operator {op.name}: {'complete' if ok else 'INCOMPLETE'}",
            [("operator", op.name), ("complete", str(ok).lower())],
            fmt,
        )
    print("\n".join(out))
    return 0 if all_ok else 1


# --- analyze ---------------------------------------------------------------

def _resolve_selection(cfg: RunConfig, inst: Instance):
    """Pick the selection to analyze/sample and describe its source.

    Oracle source: the found witness for members, otherwise the fixed
    selection the adversary would pick (maximal acceptance, i.e. minimal
    |S - T|).  Prover source: responses gathered for pass 0.
    """
    if cfg.witness is not None:
        if len(cfg.witness) != inst.n:
            raise CliError(f"witness has {len(cfg.witness)} entries but the instance has {inst.n} values")
        return cfg.witness, "inline"
    if cfg.use_oracle:
        member, witness = analysis.subset_sum_oracle(inst)
        if member:
            return witness, "oracle"
        best = None
        from itertools import product as _product

        for bits in _product((False, True), repeat=inst.n):
            gap = abs(inst.target - protocol.selected_sum(inst, bits))
            if best is None or gap < best[1]:
                best = (bits, gap)
        return best[0], "oracle-adversarial"
    assert cfg.prover is not None
    responses = [cfg.prover.request(0, i) for i in range(inst.n)]
    return tuple(r == SELECT for r in responses), "prover"


def _analysis_lines(inst: Instance, selection, source: str, fmt: str, out: list):
    tape = protocol.encode_instance(inst)
    per_pass = analysis.pass_probs(inst, selection)
    verdict = machine.run_protocol_exact(per_pass)
    passes, reads = analysis.expected_runtime(inst, selection)
    _say(
        out,
        f"instance: target={inst.target} values={','.join(map(str, inst.values))}",
        [("target", inst.target), ("values", ",".join(map(str, inst.values)))],
        fmt,
    )
    _say(out, f"tape: {tape} (|w|={len(tape)})", [("tape", tape), ("w_len", len(tape))], fmt)
    _say(
        out,
        f"witness source: {source}, selection: {fmt_selection(selection)}",
        [("witness_source", source), ("selection", fmt_selection(selection))],
        fmt,
    )
    for key, val in (
        ("p_accept", per_pass.p_accept),
        ("p_reject", per_pass.p_reject),
        ("p_restart", per_pass.p_restart),
        ("residual", per_pass.residual),
        ("overall_accept", verdict.overall_accept),
        ("overall_reject", verdict.overall_reject),
        ("expected_passes", passes),
        ("expected_symbol_reads_bound", reads),
    ):
        _say(
            out,
            f"{key}: {fmt_q(val)} (approx {fmt_approx(val)})",
            [(key, fmt_q(val)), (key + "_approx", fmt_approx(val))],
            fmt,
        )


def cmd_analyze(cfg: RunConfig) -> int:
    inst = cfg.instance
    selection, source = _resolve_selection(cfg, inst)
    out: list[str] = []
    _analysis_lines(inst, selection, source, cfg.fmt, out)
    if cfg.use_oracle:
        report = analysis.worst_case_soundness(inst)
        out.extend(analysis.render_soundness_report(report, structured=cfg.fmt == STRUCTURED))
    print("\n".join(out))
    return 0


# --- trace -----------------------------------------------------------------

def cmd_trace(cfg: RunConfig) -> int:
    tape = cfg.tape
    out: list[str] = []
    if not protocol.validate_form(tape):
        _say(
            out,
            f"input {tape!r} fails the form check ([01]+#)([01]+#)+; deterministic reject",
            [("form_valid", "false"), ("verdict", "reject")],
            cfg.fmt,
        )
        print("\n".join(out))
        return 0
    inst = protocol.decode_tape(tape)
    if cfg.witness is None:
        raise CliError("trace needs --witness (a comma list of select/skip)")
    if len(cfg.witness) != inst.n:
        raise CliError(f"witness has {len(cfg.witness)} entries but the tape has {inst.n} values")
    steps = protocol.trace_survivor(tape, cfg.witness)
    for i, step in enumerate(steps, start=1):
        restarted = 1 - squared_norm(step.state)
        state_txt = ",".join(fmt_q(c) for c in step.state)
        _say(
            out,
            f"step {i}: symbol={step.symbol} operator={step.operator} "
            f"state=({state_txt}) restarted={fmt_q(restarted)}",
            [
                ("step", i),
                ("symbol", step.symbol),
                ("operator", step.operator),
                ("state", state_txt),
                ("restart_mass", fmt_q(restarted)),
            ],
            cfg.fmt,
        )
    closed = protocol.closed_form_state(tape, cfg.witness)
    match = steps[-1].state == closed
    closed_txt = ",".join(fmt_q(c) for c in closed)
    _say(
        out,
        f"closed form: ({closed_txt})",
        [("closed_form", closed_txt)],
        cfg.fmt,
    )
    _say(
        out,
        "result: MATCH" if match else "result: MISMATCH",
        [("match", str(match).lower())],
        cfg.fmt,
    )
    print("\n".join(out))
    return 0 if match else 1


# --- sample ----------------------------------------------------------------

def _three_sigma_flag(count: int, n: int, p: Fraction) -> bool:
    """Exact |count - np| <= 3 sigma check: (count - np)^2 <= 9 np(1-p)."""
    return (count - n * p) ** 2 <= 9 * n * p * (1 - p)


def cmd_sample(cfg: RunConfig) -> int:
    if cfg.passes < 1:
        raise CliError("--passes must be at least 1")
    tape = cfg.tape
    out: list[str] = []
    if not protocol.validate_form(tape):
        _say(
            out,
            f"input {tape!r} fails the form check ([01]+#)([01]+#)+; deterministic reject",
            [("form_valid", "false"), ("verdict", "reject")],
            cfg.fmt,
        )
        print("\n".join(out))
        return 0
    inst = protocol.decode_tape(tape)
    selection, source = _resolve_selection(cfg, inst)
    spec = protocol.build_spec()
    full_tape = protocol.with_endmarkers(tape)
    cap = protocol.default_step_cap(full_tape)
    rng = random.Random(cfg.seed)
    responses = protocol.responses_from_selection(selection)
    counts = {OutcomeAction.ACCEPT: 0, OutcomeAction.REJECT: 0, OutcomeAction.RESTART: 0}
    for k in range(cfg.passes):
        if cfg.prover is not None:
            ask = lambda i, _hist, _k=k: cfg.prover.request(_k, i)
            _hist, terminal = machine.sample_pass(
                spec, full_tape, ask, rng, step_cap=cap, on_outcome=cfg.prover.broadcast
            )
        else:
            _hist, terminal = machine.sample_pass(spec, full_tape, responses, rng, step_cap=cap)
        counts[terminal] += 1
    exact = analysis.pass_probs(inst, selection)
    _say(
        out,
        f"tape: {tape}, witness source: {source} ({fmt_selection(selection)}), "
        f"passes: {cfg.passes}, seed: {cfg.seed}",
        [
            ("tape", tape),
            ("witness_source", source),
            ("selection", fmt_selection(selection)),
            ("passes", cfg.passes),
            ("seed", cfg.seed),
        ],
        cfg.fmt,
    )
    for name, action, p in (
        ("accept", OutcomeAction.ACCEPT, exact.p_accept),
        ("reject", OutcomeAction.REJECT, exact.p_reject),
        ("restart", OutcomeAction.RESTART, exact.p_restart),
    ):
        c = counts[action]
        freq = Fraction(c, cfg.passes)
        ok = _three_sigma_flag(c, cfg.passes, p)
        _say(
            out,
            f"{name}: count={c} freq={fmt_q(freq)} (approx {fmt_approx(freq)}) "
            f"exact={fmt_q(p)} (approx {fmt_approx(p)}) within_3sigma={str(ok).lower()}",
            [
                (name + "_count", c),
                (name + "_freq", fmt_q(freq)),
                (name + "_freq_approx", fmt_approx(freq)),
                (name + "_exact", fmt_q(p)),
                (name + "_exact_approx", fmt_approx(p)),
                (name + "_within_3sigma", str(ok).lower()),
            ],
            cfg.fmt,
        )
    print("\n".join(out))
    return 0


# --- reduce / end-to-end ----------------------------------------------------

def _load_cnf(path: str) -> reduction.CNF:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise CliError(f"cannot read {path!r}: {exc}") from exc
    try:
        return reduction.parse_dimacs(text)
    except ValueError as exc:
        raise CliError(f"{path}: {exc}") from exc


def cmd_reduce(cfg: RunConfig, path: str) -> int:
    cnf = _load_cnf(path)
    out_lines: list[str] = []
    red = reduction.reduce_3sat(cnf)
    inst = red.instance
    _say(
        out_lines,
        f"cnf: {cnf.num_vars} variables, {len(cnf.clauses)} clauses",
        [("num_vars", cnf.num_vars), ("num_clauses", len(cnf.clauses))],
        cfg.fmt,
    )
    _say(
        out_lines,
        f"instance: target={inst.target} values={','.join(map(str, inst.values))}",
        [("target", inst.target), ("values", ",".join(map(str, inst.values)))],
        cfg.fmt,
    )
    _say(
        out_lines,
        f"tape: {protocol.encode_instance(inst)}",
        [("tape", protocol.encode_instance(inst))],
        cfg.fmt,
    )
    for i, (value, role) in enumerate(zip(inst.values, red.provenance), start=1):
        _say(
            out_lines,
            f"  value {i}: {value} ({role})",
            [("value_index", i), ("value", value), ("role", str(role))],
            cfg.fmt,
        )
    print("\n".join(out_lines))
    return 0


def cmd_end_to_end(cfg: RunConfig, path: str) -> int:
    cnf = _load_cnf(path)
    out: list[str] = []
    red = reduction.reduce_3sat(cnf)
    inst = red.instance
    _say(
        out,
        f"cnf: {cnf.num_vars} variables, {len(cnf.clauses)} clauses",
        [("num_vars", cnf.num_vars), ("num_clauses", len(cnf.clauses))],
        cfg.fmt,
    )
    _say(
        out,
        f"reduction: target={inst.target}, {inst.n} values",
        [("target", inst.target), ("n", inst.n)],
        cfg.fmt,
    )
    assignment = reduction.brute_sat(cnf)
    if assignment is not None:
        witness = reduction.map_witness(cnf, assignment)
        verdict = analysis.overall_verdict(inst, witness)
        agree = verdict.overall_accept == 1
        _say(
            out,
            f"classical: SAT, assignment={','.join('1' if b else '0' for b in assignment)}",
            [("classical", "sat"), ("assignment", ",".join("1" if b else "0" for b in assignment))],
            cfg.fmt,
        )
        _say(
            out,
            f"protocol: accepts with probability {fmt_q(verdict.overall_accept)} "
            f"using witness {fmt_selection(witness)}",
            [
                ("protocol_accept", fmt_q(verdict.overall_accept)),
                ("witness", fmt_selection(witness)),
            ],
            cfg.fmt,
        )
    else:
        report = analysis.worst_case_soundness(inst)
        protocol_member = any(row.p_reject == 0 for row in report.rows)
        agree = not protocol_member and report.worst_fixed_rejection >= Fraction(9, 10)
        _say(out, "classical: UNSAT", [("classical", "unsat")], cfg.fmt)
        _say(
            out,
            f"protocol: worst-case rejection {fmt_q(report.worst_fixed_rejection)} "
            f"(approx {fmt_approx(report.worst_fixed_rejection)}), bound 9/10",
            [
                ("worst_fixed_rejection", fmt_q(report.worst_fixed_rejection)),
                ("worst_fixed_rejection_approx", fmt_approx(report.worst_fixed_rejection)),
            ],
            cfg.fmt,
        )
    _say(
        out,
        f"agreement: {'OK' if agree else 'VIOLATED'}",
        [("agreement", str(agree).lower())],
        cfg.fmt,
    )
    print("\n".join(out))
    return 0 if agree else 1


# --- amplify -----------------------------------------------------------------

def cmd_amplify(cfg: RunConfig, error_text: str, target_text: str | None) -> int:
    try:
        base = Fraction(error_text)
    except (ValueError, ZeroDivisionError):
        raise CliError(f"bad error value {error_text!r}; use num/den") from None
    out: list[str] = []
    if target_text is not None:
        try:
            target = Fraction(target_text)
        except (ValueError, ZeroDivisionError):
            raise CliError(f"bad target value {target_text!r}; use num/den") from None
        k = analysis.rounds_needed(base, target)
        _say(
            out,
            f"rounds needed to push error {fmt_q(base)} to <= {fmt_q(target)}: {k}",
            [("base_error", fmt_q(base)), ("target", fmt_q(target)), ("rounds_needed", k)],
            cfg.fmt,
        )
    else:
        if cfg.rounds < 1:
            raise CliError("--rounds must be at least 1 (or give --target)")
        err = analysis.amplify(base, cfg.rounds)
        _say(
            out,
            f"error after {cfg.rounds} sequential rounds: {fmt_q(err)} (approx {fmt_approx(err)})",
            [
                ("base_error", fmt_q(base)),
                ("rounds", cfg.rounds),
                ("error", fmt_q(err)),
                ("error_approx", fmt_approx(err)),
            ],
            cfg.fmt,
        )
    print("\n".join(out))
    return 0


# --- wiring -------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qamsim",
        description="Exact simulator and analyzer for the quantum-register SUBSET-SUM verification protocol.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, witness=False, tape=False, instance=False):
        p.add_argument("--format", choices=[HUMAN, STRUCTURED], default=HUMAN)
        if witness:
            p.add_argument("--witness", help="comma list of select/skip")
            p.add_argument("--oracle", action="store_true", help="take the witness from the classical brute-force oracle")
            p.add_argument("--prover-cmd", help="external prover command (stdio line protocol)")
            p.add_argument("--prover-timeout", type=float, default=10.0, help="seconds to wait for a prover response")
        if tape:
            p.add_argument("--tape", required=True, help="instance tape over {0,1,#}, endmarkers implicit")
        if instance:
            p.add_argument("--instance", required=True, help='inline instance "S a1 [a2 ...]"')

    p = sub.add_parser("validate-ops", help="check the completeness relation for all eight protocol operators")
    add_common(p)
    p.add_argument("--corrupt", help="test mode: corrupt the named operator and expect failure")

    p = sub.add_parser("analyze", help="exact pass probabilities, verdict, and soundness for an instance")
    add_common(p, witness=True, instance=True)

    p = sub.add_parser("trace", help="step the surviving branch across a tape and compare to the closed form")
    add_common(p, tape=True)
    p.add_argument("--witness", help="comma list of select/skip")

    p = sub.add_parser("sample", help="Monte-Carlo passes cross-checked against exact probabilities")
    add_common(p, witness=True, tape=True)
    p.add_argument("--passes", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("reduce", help="reduce a DIMACS CNF to a SUBSET-SUM instance")
    add_common(p)
    p.add_argument("--cnf", required=True, help="path to a DIMACS CNF file")

    p = sub.add_parser("end-to-end", help="reduce a CNF, solve classically, and verify protocol agreement")
    add_common(p)
    p.add_argument("--cnf", required=True, help="path to a DIMACS CNF file")

    p = sub.add_parser("amplify", help="sequential error amplification arithmetic")
    add_common(p)
    p.add_argument("--error", default="1/10", help="per-run error bound (default 1/10)")
    p.add_argument("--rounds", type=int, default=0)
    p.add_argument("--target", help="compute rounds needed to reach this error instead")

    return parser


def _config_from_args(args) -> RunConfig:
    cfg = RunConfig(command=args.command, fmt=args.format)
    if getattr(args, "witness", None) is not None:
        cfg.witness = parse_witness_text(args.witness)
    if getattr(args, "oracle", False):
        cfg.use_oracle = True
    if getattr(args, "prover_cmd", None):
        cfg.prover = ExternalProver(args.prover_cmd, timeout=getattr(args, "prover_timeout", 10.0))
    if getattr(args, "instance", None) is not None:
        cfg.instance = parse_instance_text(args.instance)
    if getattr(args, "tape", None) is not None:
        cfg.tape = args.tape
    cfg.seed = getattr(args, "seed", 0)
    cfg.passes = getattr(args, "passes", 0)
    cfg.rounds = getattr(args, "rounds", 0)
    return cfg


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    cfg = None
    try:
        cfg = _config_from_args(args)
        if args.command in ("analyze", "sample"):
            if cfg.witness_sources() != 1:
                raise CliError("give exactly one witness source: --witness, --oracle, or --prover-cmd")
        if args.command == "validate-ops":
            return cmd_validate_ops(cfg.fmt, args.corrupt)
        if args.command == "analyze":
            return cmd_analyze(cfg)
        if args.command == "trace":
            return cmd_trace(cfg)
        if args.command == "sample":
            return cmd_sample(cfg)
        if args.command == "reduce":
            return cmd_reduce(cfg, args.cnf)
        if args.command == "end-to-end":
            return cmd_end_to_end(cfg, args.cnf)
        if args.command == "amplify":
            return cmd_amplify(cfg, args.error, args.target)
        raise CliError(f"unknown command {args.command!r}")  # pragma: no cover
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ProtocolError as exc:
        print(f"protocol error: {exc}", file=sys.stderr)
        return 2
    except GuardError as exc:
        print(f"refused: {exc}", file=sys.stderr)
        return 2
    except ConsistencyError as exc:
        print(f"consistency violation: {exc}", file=sys.stderr)
        return 1
    except (ValueError, QamError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    finally:
        if cfg is not None and cfg.prover is not None:
            cfg.prover.close()


def entry_point():  # pragma: no cover - thin wrapper
    sys.exit(main())


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
