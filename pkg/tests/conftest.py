import sys
import textwrap

import pytest


@pytest.fixture(scope="session")
def protocol_spec():
    from qamsim.protocol import build_spec

    return build_spec()


@pytest.fixture
def prover_script(tmp_path):
    """Write a prover program for the stdio line protocol and return the
    command to run it.  `replies` cycles over communication events; every
    received line is appended to the returned log path."""

    def make(replies=("SELECT",), delay=0.0):
        log = tmp_path / "prover_log.txt"
        script = tmp_path / "prover.py"
        script.write_text(
            textwrap.dedent(
                f"""
                import sys, time
                replies = {list(replies)!r}
                i = 0
                log = open({str(log)!r}, "a")
                for line in sys.stdin:
                    log.write(line)
                    log.flush()
                    if line.strip().endswith("REQUEST"):
                        time.sleep({delay})
                        print(replies[i % len(replies)], flush=True)
                        i += 1
                """
            )
        )
        return f"{sys.executable} {script}", log

    return make
