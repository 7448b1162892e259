"""Command-line interface: output contracts, exit codes, prover protocol."""

from qamsim.cli import main

SAT_CNF = "c simple\np cnf 1 1\n1 0\n"
UNSAT_CNF = "p cnf 1 2\n1 0\n-1 0\n"


def run(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def kv_lines(out):
    return [dict(tok.split("=", 1) for tok in line.split()) for line in out.splitlines()]


class TestValidateOps:
    def test_all_pass(self, capsys):
        code, out, _ = run(capsys, "validate-ops", "--format", "structured")
        assert code == 0
        rows = kv_lines(out)
        assert len(rows) == 8
        assert all(r["complete"] == "true" for r in rows)
        names = [r["operator"] for r in rows]
        assert names == [
            "encode_target_0",
            "encode_target_1",
            "target_boundary",
            "encode_value_0",
            "encode_value_1",
            "subtract_selected",
            "discard_skipped",
            "decide",
        ]

    def test_corrupted_operator_fails(self, capsys):
        code, out, _ = run(
            capsys, "validate-ops", "--format", "structured", "--corrupt", "encode_target_0"
        )
        assert code == 1
        rows = kv_lines(out)
        bad = [r for r in rows if r["complete"] == "false"]
        assert [r["operator"] for r in bad] == ["encode_target_0"]

    def test_unknown_corrupt_name(self, capsys):
        code, _, err = run(capsys, "validate-ops", "--corrupt", "nope")
        assert code == 2
        assert "nope" in err


class TestAnalyze:
    def test_member_with_oracle(self, capsys):
        code, out, _ = run(
            capsys, "analyze", "--instance", "1 1", "--oracle", "--format", "structured"
        )
        assert code == 0
        text = dict(tok.split("=", 1) for line in out.splitlines() for tok in line.split())
        assert text["overall_accept"] == "1/1"
        assert text["oracle_membership"] == "true"

    def test_nonmember_with_oracle(self, capsys):
        code, out, _ = run(
            capsys, "analyze", "--instance", "2 1", "--oracle", "--format", "structured"
        )
        assert code == 0
        assert "worst_fixed_rejection=9/10" in out
        assert "adaptive_bound_holds=true" in out
        assert "oracle_membership=false" in out

    def test_inline_skip_selection(self, capsys):
        code, out, _ = run(
            capsys, "analyze", "--instance", "2 1", "--witness", "skip", "--format", "structured"
        )
        assert code == 0
        assert "overall_reject=36/37" in out

    def test_parse_error_names_token(self, capsys):
        code, _, err = run(capsys, "analyze", "--instance", "2 x", "--oracle")
        assert code == 2
        assert "token 2" in err and "'x'" in err

    def test_requires_one_witness_source(self, capsys):
        code, _, err = run(capsys, "analyze", "--instance", "2 1")
        assert code == 2
        assert "witness source" in err
        code, _, err = run(
            capsys, "analyze", "--instance", "2 1", "--oracle", "--witness", "skip"
        )
        assert code == 2

    def test_decimals_are_labeled(self, capsys):
        code, out, _ = run(capsys, "analyze", "--instance", "2 1", "--witness", "skip")
        assert code == 0
        for line in out.splitlines():
            if "." in line.split(":")[-1] and "/" not in line.split(":")[-1].split()[0]:
                assert "approx" in line


class TestTrace:
    def test_member_match(self, capsys):
        code, out, _ = run(capsys, "trace", "--tape", "1#1#", "--witness", "select")
        assert code == 0
        assert "result: MATCH" in out
        assert "state=(1/81,0/1,0/1)" in out

    def test_skip_trace(self, capsys):
        code, out, _ = run(
            capsys, "trace", "--tape", "10#1#", "--witness", "skip", "--format", "structured"
        )
        assert code == 0
        assert "closed_form=1/243,2/243,0/1" in out
        assert "match=true" in out

    def test_form_invalid_is_deterministic_reject(self, capsys):
        code, out, _ = run(capsys, "trace", "--tape", "1#1", "--format", "structured")
        assert code == 0
        assert "form_valid=false" in out
        assert "verdict=reject" in out

    def test_restart_mass_column(self, capsys):
        code, out, _ = run(
            capsys, "trace", "--tape", "1#1#", "--witness", "select", "--format", "structured"
        )
        rows = kv_lines(out)
        assert rows[0]["restart_mass"] == "7/9"
        assert rows[3]["restart_mass"] == "6560/6561"


class TestSample:
    def test_deterministic_reports(self, capsys):
        args = (
            "sample", "--tape", "1#1#", "--witness", "select",
            "--passes", "5000", "--seed", "11", "--format", "structured",
        )
        code1, out1, _ = run(capsys, *args)
        code2, out2, _ = run(capsys, *args)
        assert code1 == code2 == 0
        assert out1 == out2

    def test_frequencies_within_three_sigma(self, capsys):
        code, out, _ = run(
            capsys, "sample", "--tape", "10#1#", "--witness", "skip",
            "--passes", "20000", "--seed", "3", "--format", "structured",
        )
        assert code == 0
        row = dict(tok.split("=", 1) for line in out.splitlines() for tok in line.split())
        assert row["accept_within_3sigma"] == "true"
        assert row["reject_within_3sigma"] == "true"
        assert row["restart_within_3sigma"] == "true"
        assert row["reject_exact"] == "4/59049"

    def test_zero_passes_refused(self, capsys):
        code, _, err = run(
            capsys, "sample", "--tape", "1#1#", "--witness", "select", "--passes", "0"
        )
        assert code == 2
        assert "passes" in err

    def test_invalid_tape_rejected_deterministically(self, capsys):
        code, out, _ = run(
            capsys, "sample", "--tape", "1#1", "--witness", "select",
            "--passes", "10", "--format", "structured",
        )
        assert code == 0
        assert "form_valid=false" in out


class TestReduceAndEndToEnd:
    def test_reduce_output(self, capsys, tmp_path):
        path = tmp_path / "f.cnf"
        path.write_text(SAT_CNF)
        code, out, _ = run(capsys, "reduce", "--cnf", str(path), "--format", "structured")
        assert code == 0
        assert "target=13" in out
        assert "values=11,10,1,1" in out
        assert "role=x1=true" in out

    def test_end_to_end_sat(self, capsys, tmp_path):
        path = tmp_path / "f.cnf"
        path.write_text(SAT_CNF)
        code, out, _ = run(capsys, "end-to-end", "--cnf", str(path), "--format", "structured")
        assert code == 0
        assert "classical=sat" in out
        assert "protocol_accept=1/1" in out
        assert "agreement=true" in out

    def test_end_to_end_unsat(self, capsys, tmp_path):
        path = tmp_path / "f.cnf"
        path.write_text(UNSAT_CNF)
        code, out, _ = run(capsys, "end-to-end", "--cnf", str(path), "--format", "structured")
        assert code == 0
        assert "classical=unsat" in out
        assert "worst_fixed_rejection=9/10" in out
        assert "agreement=true" in out

    def test_malformed_dimacs(self, capsys, tmp_path):
        path = tmp_path / "bad.cnf"
        path.write_text("p cnf nope\n")
        code, _, err = run(capsys, "end-to-end", "--cnf", str(path))
        assert code == 2
        assert "bad.cnf" in err

    def test_missing_file(self, capsys):
        code, _, err = run(capsys, "reduce", "--cnf", "/nonexistent.cnf")
        assert code == 2


class TestAmplify:
    def test_rounds(self, capsys):
        code, out, _ = run(capsys, "amplify", "--rounds", "6", "--format", "structured")
        assert code == 0
        assert "error=1/1000000" in out

    def test_target(self, capsys):
        code, out, _ = run(
            capsys, "amplify", "--target", "1/1000000", "--format", "structured"
        )
        assert code == 0
        assert "rounds_needed=6" in out

    def test_bad_error_refused(self, capsys):
        code, _, err = run(capsys, "amplify", "--error", "2/3", "--rounds", "2")
        assert code == 2


class TestExternalProver:
    def test_analyze_with_prover(self, capsys, prover_script):
        cmd, _log = prover_script(replies=("SELECT",))
        code, out, _ = run(
            capsys, "analyze", "--instance", "1 1", "--prover-cmd", cmd,
            "--format", "structured",
        )
        assert code == 0
        assert "witness_source=prover" in out
        assert "overall_accept=1/1" in out

    def test_sample_with_prover_broadcasts_outcomes(self, capsys, prover_script):
        cmd, log = prover_script(replies=("SELECT",))
        code, out, _ = run(
            capsys, "sample", "--tape", "1#1#", "--prover-cmd", cmd,
            "--passes", "600", "--seed", "4", "--format", "structured",
        )
        assert code == 0
        lines = log.read_text().splitlines()
        requests = [l for l in lines if l.endswith("REQUEST")]
        outcomes = [l for l in lines if l.startswith("OUTCOME")]
        # reference gathering makes at least one request; sampling makes more
        assert requests and requests[0] == "PASS 0 EVENT 0 REQUEST"
        assert outcomes and all(
            l.split()[1] in {"INITIALIZED", "MOVE_RIGHT", "RESTART", "ACCEPT", "REJECT"}
            for l in outcomes
        )

    def test_prover_timeout_is_protocol_error(self, capsys, prover_script):
        cmd, _log = prover_script(replies=("SELECT",), delay=5.0)
        code, _, err = run(
            capsys, "analyze", "--instance", "1 1", "--prover-cmd", cmd,
            "--prover-timeout", "0.3",
        )
        assert code == 2
        assert "timeout" in err

    def test_garbage_response_is_protocol_error(self, capsys, prover_script):
        cmd, _log = prover_script(replies=("MAYBE",))
        code, _, err = run(
            capsys, "analyze", "--instance", "1 1", "--prover-cmd", cmd,
        )
        assert code == 2
        assert "unknown prover response" in err
