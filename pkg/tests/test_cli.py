import json
import subprocess
import sys

import pytest

from qcmflow.cli import main
from qcmflow.metadata import ChannelSpec, EcSpec, QcmRecord, format_record
from qcmflow.scenario import fig8_golden
from qcmflow.wire import Direction, QcmMultipart, encode_multipart, hexdump


def run_cli(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_run_fig8_legacy_matches_golden(capsys, tmp_path):
    out_path = tmp_path / "trace.txt"
    code, out, _ = run_cli(capsys, "run", "--scenario", "fig8", "--mode", "legacy-fig8", "--out", str(out_path))
    assert code == 0
    assert out == fig8_golden() == out_path.read_text()


def test_run_empty_topology(capsys, tmp_path):
    path = tmp_path / "empty.json"
    path.write_text(json.dumps({"t_end": 15, "devices": []}))
    code, out, _ = run_cli(capsys, "run", "--scenario", str(path))
    assert code == 0 and out == "15.0\n"


def test_run_missing_file(capsys, tmp_path):
    missing = tmp_path / "nope.json"
    code, _, err = run_cli(capsys, "run", "--scenario", str(missing))
    assert code == 2 and str(missing) in err


def test_run_invalid_scenario(capsys, tmp_path):
    path = tmp_path / "bad.json"
    path.write_text(json.dumps({"t_end": 1, "devices": [{"id": 1, "model": "toaster"}]}))
    code, _, err = run_cli(capsys, "run", "--scenario", str(path))
    assert code == 1 and "toaster" in err


def test_decode_empty_request(capsys, tmp_path):
    path = tmp_path / "req.hex"
    path.write_text(hexdump(encode_multipart(QcmMultipart(Direction.REQUEST, 9))) + "\n")
    code, out, _ = run_cli(capsys, "decode", "--in", str(path))
    assert code == 0
    assert out.splitlines() == ["# message 0", "DIRECTION: REQUEST", "XID: 9", "FLAGS: 0x0000", "RECORDS: 0"]


def test_decode_inline(capsys):
    code, out, _ = run_cli(capsys, "decode", "--hex", "05 12 00 10 00 00 00 01 00 11 00 00 00 00 00 00")
    assert code == 0 and "XID: 1" in out


def test_decode_truncated_reports_offset(capsys):
    raw = encode_multipart(QcmMultipart(Direction.REPLY, 2, records=[QcmRecord()]))
    code, _, err = run_cli(capsys, "decode", "--hex", hexdump(raw[:50]))
    assert code == 1 and "offset 0" in err


def test_decode_bad_multipart_type(capsys):
    code, _, err = run_cli(capsys, "decode", "--hex", "05 12 00 10 00 00 00 01 00 0d 00 00 00 00 00 00")
    assert code == 1 and "offset 8" in err


RECORD = QcmRecord(
    qchannel=7,
    qchannel_spec=ChannelSpec(1550000, 120, 1000000),
    qcom=3,
    qcom_spec=bytes(range(16)),
    qec=2,
    qec_spec=EcSpec(7, 1, 3, 4),
)


def test_encode_then_decode_round_trip(capsys, tmp_path):
    spec = tmp_path / "rec.txt"
    spec_text = "\n".join(format_record(RECORD)) + "\n"
    spec.write_text(spec_text)
    code, hex_out, _ = run_cli(capsys, "encode", "--spec", str(spec), "--direction", "reply", "--xid", "4")
    assert code == 0
    assert len(bytes.fromhex(hex_out.replace("\n", " ").replace(" ", ""))) == 72
    hex_path = tmp_path / "rec.hex"
    hex_path.write_text(hex_out)
    code, out, _ = run_cli(capsys, "decode", "--in", str(hex_path))
    assert code == 0
    lines = out.splitlines()
    assert lines[:5] == ["# message 0", "DIRECTION: REPLY", "XID: 4", "FLAGS: 0x0000", "RECORDS: 1"]
    record_lines = lines[lines.index("# record 0") + 1:]
    assert "\n".join(record_lines) + "\n" == spec_text


def test_encode_invalid_record(capsys, tmp_path):
    spec = tmp_path / "rec.txt"
    spec.write_text("QCOM: NONE\nQCOM_SPEC: " + "01" * 16 + "\n")
    code, _, err = run_cli(capsys, "encode", "--spec", str(spec), "--direction", "reply", "--xid", "1")
    assert code == 1 and "qcom_spec" in err


def test_diff_trace(capsys, tmp_path):
    a = tmp_path / "a"
    b = tmp_path / "b"
    a.write_text("x\ny\nz\n")
    b.write_text("x\ny\nz\n")
    assert run_cli(capsys, "diff-trace", str(a), str(b))[0] == 0
    b.write_text("x\nY\nz\n")
    code, out, _ = run_cli(capsys, "diff-trace", str(a), str(b))
    assert code == 1 and "line 2" in out and "actual: y" in out and "golden: Y" in out


def test_diff_trace_unreadable(capsys, tmp_path):
    code, _, _ = run_cli(capsys, "diff-trace", str(tmp_path / "a"), str(tmp_path / "b"))
    assert code == 2


def test_usage_error_exit_code(capsys):
    with pytest.raises(SystemExit) as info:
        main(["run"])
    assert info.value.code == 2


def test_module_entry_point_fig8_against_golden(tmp_path):
    out = tmp_path / "fig8.trace"
    golden = tmp_path / "golden.trace"
    golden.write_text(fig8_golden())
    subprocess.run(
        [sys.executable, "-m", "qcmflow", "run", "--scenario", "fig8", "--mode", "legacy-fig8", "--out", str(out)],
        check=True, capture_output=True,
    )
    res = subprocess.run([sys.executable, "-m", "qcmflow", "diff-trace", str(out), str(golden)])
    assert res.returncode == 0


def test_run_simulation_error_is_domain_error(capsys, monkeypatch):
    from qcmflow import cli
    from qcmflow.errors import SchedulingError

    def boom(self):
        raise SchedulingError("bad schedule")

    monkeypatch.setattr(cli.Simulation, "run", boom)
    code, _, err = run_cli(capsys, "run", "--scenario", "fig8")
    assert code == 1 and "bad schedule" in err
