import json

import pytest

from eim import formats
from eim.cli import main
from eim.codebook import Codebook


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def last_json(out):
    return json.loads(out.strip().splitlines()[-1])


def test_design_modulation1(tmp_path, capsys):
    code, out, _ = run(capsys, "design", "--preset", "modulation1", "--out", str(tmp_path))
    s = last_json(out)
    assert code == 0
    assert (s["N_star"], s["L"]) == (1, 2)
    assert s["bitrate_bps"] == pytest.approx(28169.014, abs=1e-3)
    assert Codebook.from_text((tmp_path / "codebook.txt").read_text()).payload_bits == 2


def test_design_modulation2_with_m_sweep(tmp_path, capsys):
    code, out, _ = run(capsys, "design", "--preset", "modulation2", "--sweep-m", "2:8",
                       "--out", str(tmp_path))
    s = last_json(out)
    assert (s["N_star"], s["L"]) == (7, 18)
    assert abs(s["bitrate_bps"] - 8400) <= 100
    assert s["best_M"] in (5, 6)
    assert (tmp_path / "sweep_m.csv").read_text().count("\n") == 8


def test_design_minimal_config(tmp_path, capsys):
    cfg = tmp_path / "c.txt"
    cfg.write_text("# smallest ladder\ntr_us = 10\ntd_us = 5\nm = 2\n")
    code, out, _ = run(capsys, "design", "--config", str(cfg), "--out", str(tmp_path))
    assert code == 0 and last_json(out)["L"] == 1


def test_unknown_key_rejected(tmp_path, capsys):
    cfg = tmp_path / "c.txt"
    cfg.write_text("tr_us = 10\ntd_us = 5\nm = 2\ndistance_m = 10\n")
    code, _, err = run(capsys, "design", "--config", str(cfg), "--out", str(tmp_path))
    assert code != 0
    assert len(err.strip().splitlines()) == 1 and err.startswith("error: ValueError:")


def test_missing_ladder_rejected(tmp_path, capsys):
    code, _, err = run(capsys, "design", "--out", str(tmp_path))
    assert code == 2 and "tr_us" in err


def test_modulate_empty_and_two_bits(tmp_path, capsys):
    empty = tmp_path / "empty.txt"
    empty.write_text("")
    run(capsys, "modulate", "--preset", "modulation1", "--bits", str(empty), "--out", str(tmp_path))
    assert (tmp_path / "schedule.csv").read_text() == "t_us,direction\n0.000,R\n16.000,F\n"
    two = tmp_path / "two.txt"
    two.write_text("0111")
    run(capsys, "modulate", "--preset", "modulation1", "--bits", str(two), "--out", str(tmp_path))
    sched = formats.parse_schedule((tmp_path / "schedule.csv").read_text())
    assert sched.rising_times.tolist() == [0, 58_000, 168_000]


def test_modulate_pads_with_warning(tmp_path, capsys, caplog):
    bits = tmp_path / "b.txt"
    bits.write_text("011")
    code, _, _ = run(capsys, "modulate", "--preset", "modulation1", "--bits", str(bits),
                     "--out", str(tmp_path))
    assert code == 0 and "zero-padding 1 bits" in caplog.text


def test_pipeline_through_files(tmp_path, capsys):
    bits = tmp_path / "b.txt"
    payload = "0110110001" * 20
    bits.write_text(payload)
    common = ["--preset", "modulation1", "--out", str(tmp_path), "--set", "jitter_sigma_us=1.3"]
    assert main(["modulate", "--bits", str(bits), *common]) == 0
    assert main(["simulate", "--schedule", str(tmp_path / "schedule.csv"), *common]) == 0
    assert main(["demodulate", "--events", str(tmp_path / "events.csv"), *common]) == 0
    capsys.readouterr()
    expected = formats.bits_to_hex(formats.parse_bits(payload))
    assert (tmp_path / "decoded.hex").read_text().strip() == expected
    diag = json.loads((tmp_path / "diagnostics.json").read_text())
    assert set(diag) >= {"peaks_detected", "symbols_decoded", "erasures", "nearest_match_corrections"}


def test_run_noiseless(tmp_path, capsys):
    code, out, _ = run(capsys, "run", "--preset", "modulation1", "--out", str(tmp_path),
                       "--set", "deterministic_counts=true", "--set", "jitter_sigma_us=0",
                       "--set", "burst_decay_us=0", "--set", "refractory_us=0",
                       "--set", "lowpass_tau_us=0", "--set", "noise_rate=0",
                       "--set", "n_symbols=5000")
    s = last_json(out)
    assert code == 0 and s["ser"] == 0 and s["feasible"] is True


def test_run_is_reproducible(tmp_path, capsys):
    args = ["run", "--preset", "modulation1", "--set", "n_symbols=3000", "--set", "jitter_sigma_us=9",
            "--seed", "5", "--out", str(tmp_path)]
    main(args)
    first = (tmp_path / "report.json").read_bytes()
    main(args)
    capsys.readouterr()
    assert (tmp_path / "report.json").read_bytes() == first


def test_sweep_rows(tmp_path, capsys):
    code, out, _ = run(capsys, "sweep", "jitter_sigma", "--preset", "modulation1", "--values", "1,2,3",
                       "--set", "n_symbols=2000", "--out", str(tmp_path))
    lines = (tmp_path / "sweep_jitter_sigma.csv").read_text().splitlines()
    assert code == 0 and len(lines) == 4
    assert lines[0] == "param,value,ser,ber,symbols,errors"
    assert last_json(out)["max_feasible_jitter_sigma_us"] == 3.0


def test_sweep_frequency(tmp_path, capsys):
    code, _, _ = run(capsys, "sweep", "frequency", "--preset", "modulation1", "--values", "1000,20000",
                     "--cycles", "100", "--out", str(tmp_path))
    assert code == 0
    assert (tmp_path / "sweep_frequency.csv").read_text().startswith("param,value,pos_per_edge")


def test_calibrate(tmp_path, capsys):
    code, out, _ = run(capsys, "calibrate", "--preset", "modulation1", "--set", "cal_trials=500",
                       "--out", str(tmp_path))
    s = last_json(out)
    assert code == 0
    assert s["T_d_ns"] > s["T_upper_ns"] - s["T_lower_ns"]
    hist = (tmp_path / "histogram.csv").read_text().splitlines()
    assert hist[0] == "t_d_us,count"
    assert sum(int(l.split(",")[1]) for l in hist[1:]) == s["samples"]


def test_help_lists_config_keys(capsys):
    with pytest.raises(SystemExit):
        main(["run", "--help"])
    out = capsys.readouterr().out
    assert "jitter_sigma_us = 2.0" in out and "--preset" in out
