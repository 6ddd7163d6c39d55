import socket
import subprocess
import sys

import pytest

from knot import cli
from knot.group import format_params, load_params, validate_params

from .conftest import EXAMPLE_GROUP, EXAMPLE_SECRETS


@pytest.fixture
def params_file(tmp_path):
    path = tmp_path / "params.txt"
    path.write_text(format_params(EXAMPLE_GROUP))
    return path


@pytest.fixture
def secrets_file(tmp_path):
    path = tmp_path / "secrets.bin"
    cli.write_records(path, EXAMPLE_SECRETS)
    return path


def _free_port():
    with socket.socket() as s:
        s.bind(("127.0.0.1", 0))
        return s.getsockname()[1]


def test_params_five_bits(tmp_path):
    out = tmp_path / "p.txt"
    assert cli.main(["params", "--bits", "5", "--out", str(out)]) == 0
    group, xs = load_params(out)
    assert group.p == 23 and xs is None
    assert validate_params(group)


def test_params_rejects_four_bits(tmp_path):
    with pytest.raises(SystemExit) as err:
        cli.main(["params", "--bits", "4", "--out", str(tmp_path / "p.txt")])
    assert err.value.code == cli.EXIT_USAGE


def test_records_round_trip(tmp_path):
    path = tmp_path / "r.bin"
    records = [b"a", b"\x00\x01\n", b"x" * 300]
    cli.write_records(path, records)
    assert cli.read_records(path) == records
    cli.write_records(path, [b"one", b"two"], text=True)
    assert path.read_bytes() == b"one\ntwo\n"
    assert cli.read_records(path, text=True) == [b"one", b"two"]


def test_local_recovers_exactly_the_chosen(params_file, secrets_file, tmp_path, capsys):
    out = tmp_path / "out.bin"
    code = cli.main(["local", "--params", str(params_file), "--secrets", str(secrets_file),
                     "--choices", "3,5", "--k", "2", "--seed", "7", "--out", str(out)])
    assert code == 0
    assert cli.read_records(out) == [EXAMPLE_SECRETS[2], EXAMPLE_SECRETS[4]]
    stdout = capsys.readouterr().out
    assert "verified commitments at indices: 3,5" in stdout
    assert "sender_exps=7 receiver_exps=4 elements=11" in stdout
    # recovered secrets stay off the terminal
    assert EXAMPLE_SECRETS[2].decode() not in stdout


def test_local_same_message_exit_code(params_file, tmp_path):
    same = tmp_path / "same.txt"
    same.write_text("x\nx\nx\n")
    code = cli.main(["local", "--params", str(params_file), "--secrets", str(same), "--text",
                     "--choices", "2", "--k", "1"])
    assert code == cli.EXIT_SAME_MESSAGE


def test_zero_choice_is_usage_error(params_file, secrets_file):
    with pytest.raises(SystemExit) as err:
        cli.main(["local", "--params", str(params_file), "--secrets", str(secrets_file),
                  "--choices", "0", "--k", "1"])
    assert err.value.code == cli.EXIT_USAGE


def test_choice_beyond_n_is_usage_error(params_file, secrets_file):
    code = cli.main(["local", "--params", str(params_file), "--secrets", str(secrets_file),
                     "--choices", "9", "--k", "1"])
    assert code == cli.EXIT_USAGE


def test_choice_count_must_match_k(params_file, secrets_file):
    with pytest.raises(SystemExit) as err:
        cli.main(["local", "--params", str(params_file), "--secrets", str(secrets_file),
                  "--choices", "1,2", "--k", "1"])
    assert err.value.code == cli.EXIT_USAGE


def test_invalid_params_file(tmp_path, secrets_file):
    bad = tmp_path / "bad.txt"
    bad.write_text("p=23\nq=11\ng=2\n")
    code = cli.main(["local", "--params", str(bad), "--secrets", str(secrets_file),
                     "--choices", "1", "--k", "1"])
    assert code == cli.EXIT_PARAMS


def test_networked_seed_requires_insecure_flag(params_file, secrets_file):
    with pytest.raises(SystemExit) as err:
        cli.main(["send", "--params", str(params_file), "--secrets", str(secrets_file), "--k", "1",
                  "--listen", "127.0.0.1:1", "--seed", "3"])
    assert err.value.code == cli.EXIT_USAGE


def test_recv_connection_refused(params_file):
    code = cli.main(["recv", "--params", str(params_file), "--choices", "1", "--k", "1",
                     "--connect", f"127.0.0.1:{_free_port()}"])
    assert code == cli.EXIT_CONNECT


def test_demo_output(capsys):
    assert cli.main(["demo"]) == 0
    first = capsys.readouterr().out
    assert "M_A = 5^(4 + 15) mod 23 = 7" in first
    assert "K_A = [9, 6, 4, 18, 12]" in first
    assert "K_B = (M_j^N_A2)^(N_B3/N_B2) mod 23 = [4, 12]" in first
    assert cli.main(["demo"]) == 0
    assert capsys.readouterr().out == first


def test_demo_values_match_reference():
    _, got = cli.demo_trace()
    assert got == cli.DEMO_EXPECTED


def test_costs_command(capsys):
    assert cli.main(["costs", "--n", "5", "--k", "2"]) == 0
    out = capsys.readouterr().out
    assert "direct mode=k-of-n n=5 k=2 sender_exps=7 receiver_exps=4 elements=11" in out
    assert "naive mode=naive-k-fold n=5 k=2 sender_exps=12 receiver_exps=4 elements=18" in out
    assert cli.main(["costs", "--n", "100", "--k", "10"]) == 0
    out = capsys.readouterr().out
    assert "elements=122" in out and "elements=1040" in out


def test_costs_k1_rows_identical(capsys):
    assert cli.main(["costs", "--n", "5", "--k", "1"]) == 0
    lines = capsys.readouterr().out.splitlines()
    direct = next(line for line in lines if line.startswith("direct "))
    naive = next(line for line in lines if line.startswith("naive "))
    assert direct.split(" ", 1)[1] == naive.split(" ", 1)[1]


def test_costs_bad_sizes():
    with pytest.raises(SystemExit) as err:
        cli.main(["costs", "--n", "2", "--k", "3"])
    assert err.value.code == cli.EXIT_USAGE


def test_exit_code_mapping_is_total():
    from knot.errors import (ChoiceError, OTError, ParameterError, PeerAbort, ProtocolError,
                             SameMessageError, StateError, VerificationError)
    from knot.transport import TransportClosed
    from knot.wire import DecodeError, DecodeErrorCode
    cases = {
        SameMessageError([1, 2]): cli.EXIT_SAME_MESSAGE,
        VerificationError(3): cli.EXIT_VERIFY,
        ChoiceError("x"): cli.EXIT_USAGE,
        ParameterError("x"): cli.EXIT_PARAMS,
        StateError("x"): cli.EXIT_STATE,
        DecodeError(DecodeErrorCode.TRUNCATED): cli.EXIT_PROTOCOL,
        PeerAbort(1, "x"): cli.EXIT_PROTOCOL,
        ProtocolError("x"): cli.EXIT_PROTOCOL,
        TransportClosed("x"): cli.EXIT_CONNECT,
        ConnectionRefusedError(): cli.EXIT_CONNECT,
        FileNotFoundError(): cli.EXIT_IO,
        OTError("x"): cli.EXIT_FAILURE,
    }
    for exc, code in cases.items():
        assert cli.exit_code_for(exc) == code, exc


def test_send_and_recv_as_separate_processes(params_file, secrets_file, tmp_path):
    port = _free_port()
    out = tmp_path / "got.bin"
    sender = subprocess.Popen(
        [sys.executable, "-m", "knot", "send", "--params", str(params_file), "--secrets", str(secrets_file),
         "--k", "2", "--listen", f"127.0.0.1:{port}"],
        stdout=subprocess.PIPE, stderr=subprocess.PIPE, text=True)
    try:
        assert "listening" in sender.stdout.readline()
        recv = subprocess.run(
            [sys.executable, "-m", "knot", "recv", "--params", str(params_file), "--choices", "5,3",
             "--k", "2", "--connect", f"127.0.0.1:{port}", "--out", str(out)],
            capture_output=True, text=True, timeout=60)
        assert recv.returncode == 0, recv.stderr
        assert "verified commitments at indices: 3,5" in recv.stdout
        assert "elements=11" in recv.stdout
        s_out, s_err = sender.communicate(timeout=30)
        assert sender.returncode == 0, s_err
        assert "sender_exps=7" in s_out
    finally:
        sender.kill()
    assert cli.read_records(out) == [EXAMPLE_SECRETS[2], EXAMPLE_SECRETS[4]]


def test_recv_rejects_k_mismatch_over_tcp(params_file, secrets_file):
    port = _free_port()
    sender = subprocess.Popen(
        [sys.executable, "-m", "knot", "send", "--params", str(params_file), "--secrets", str(secrets_file),
         "--k", "2", "--listen", f"127.0.0.1:{port}"],
        stdout=subprocess.PIPE, stderr=subprocess.PIPE, text=True)
    try:
        assert "listening" in sender.stdout.readline()
        recv = subprocess.run(
            [sys.executable, "-m", "knot", "recv", "--params", str(params_file), "--choices", "1",
             "--k", "1", "--connect", f"127.0.0.1:{port}"],
            capture_output=True, text=True, timeout=60)
        assert recv.returncode == cli.EXIT_PARAMS
        sender.communicate(timeout=30)
        assert sender.returncode == cli.EXIT_PROTOCOL
    finally:
        sender.kill()
