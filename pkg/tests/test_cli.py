"""CLI subcommands: outputs, figures, and exit codes."""

import json

import pytest

from ifscert.cli import main


def _files(out, *names):
    missing = [n for n in names if not (out / n).exists()]
    assert not missing, f"missing outputs: {missing}"


def test_pigeonhole_command(tmp_path):
    out = tmp_path / "ph"
    rc = main(["pigeonhole", "--r", "0.7", "--m-override", "3",
               "--w0", "0", "0", "0", "0", "--k-max", "500",
               "--out", str(out)])
    assert rc == 0
    _files(out, "pigeonhole.json", "direction.csv", "congruence.png")
    body = json.loads((out / "pigeonhole.json").read_text())
    assert body["body"]["congruence"]["passed"] is True


def test_pigeonhole_bad_input_exit_2(tmp_path):
    rc = main(["pigeonhole", "--eta", "-1", "--out", str(tmp_path / "x")])
    assert rc == 2


def test_correction_check_command(tmp_path):
    out = tmp_path / "cc"
    rc = main(["correction-check", "--samples", "500", "--out", str(out)])
    assert rc == 0
    _files(out, "correction.json", "correction.csv", "correction.png")


def test_synth_validate_certify_pipeline(tmp_path):
    synth_out = tmp_path / "synth"
    rc = main(["synth", "--seed", "777", "--out", str(synth_out)])
    assert rc == 0
    _files(synth_out, "instance.json", "synth.json")
    inst_path = str(synth_out / "instance.json")

    val_out = tmp_path / "validate"
    rc = main(["validate", "--instance", inst_path, "--out", str(val_out)])
    assert rc == 0
    _files(val_out, "validation.json", "validation.csv", "validation.png")

    cert_out = tmp_path / "certify"
    rc = main(["certify", "--instance", inst_path, "--out", str(cert_out)])
    assert rc == 0
    _files(cert_out, "certificate.json", "certificate.csv",
           "certificate.png", "certify.json")
    body = json.loads((cert_out / "certify.json").read_text())
    assert body["body"]["passed"] and body["body"]["verified"]


def test_certify_missing_instance_exit_2(tmp_path):
    rc = main(["certify", "--instance", str(tmp_path / "none.json"),
               "--out", str(tmp_path / "o")])
    assert rc == 2


def test_sweep_command(tmp_path):
    out = tmp_path / "sweep"
    rc = main(["sweep", "--seed", "777", "--count", "2", "--out", str(out)])
    _files(out, "sweep.csv", "sweep.json", "sweep.png")
    body = json.loads((out / "sweep.json").read_text())
    assert body["body"]["total"] == 2
    assert rc in (0, 1)
    assert (rc == 0) == (body["body"]["passed"] == 2)


def test_unknown_command_rejected():
    with pytest.raises(SystemExit):
        main(["no-such-command"])
