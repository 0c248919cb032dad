import json

import numpy as np
import pytest

from ratecorr import cli

CL10 = {"kind": "cartesian", "factors": [{"cycle": 10}, {"path": 2}]}


def run_cli(tmp_path, subcommand, cfg, name="out.csv", extra=()):
    cfg_path = tmp_path / "cfg.json"
    cfg_path.write_text(json.dumps(cfg))
    out = tmp_path / name
    code = cli.run([subcommand, "--config", str(cfg_path), "--out", str(out), *extra])
    assert code == 0
    return out


def test_spectrum_csv(tmp_path):
    out = run_cli(tmp_path, "spectrum",
                  {"topology": {"kind": "circulant", "n": 8, "offsets": [1, 2]},
                   "lam": 1.0})
    lines = out.read_text().splitlines()
    assert lines[0].startswith("# ratecorr-config: ")
    assert lines[1] == "k,re,im"
    assert len(lines) == 2 + 8
    first = lines[2].split(",")
    assert float(first[1]) == pytest.approx(1.0)   # row-sum eigenvalue = lam


def test_simulate_deterministic_and_replayable(tmp_path):
    cfg = {"topology": CL10, "params": "table1",
           "noise": {"bundle": "table1", "s1": 0.01, "s2": 0.1, "s3": 0.1},
           "trials": 100, "t_max": 1.0}
    a = run_cli(tmp_path, "simulate", cfg, "a.csv", extra=("--seed", "5"))
    b = run_cli(tmp_path, "simulate", cfg, "b.csv", extra=("--seed", "5"))
    assert a.read_bytes() == b.read_bytes()
    (replayed,) = cli.replay(str(a), str(tmp_path / "c.csv"))
    assert a.read_bytes() == open(replayed, "rb").read()


def test_compare_emits_four_files(tmp_path):
    cfg = {"topology": CL10, "params": "table1",
           "noise": {"bundle": "table1", "s1": 0.01, "s2": 0.1, "s3": 0.1},
           "trials": 60, "t_max": 1.0}
    out = run_cli(tmp_path, "compare", cfg, "fig")
    del out
    for name in ("potential", "var", "cov", "corr"):
        path = tmp_path / f"fig_{name}.csv"
        assert path.exists()
        header, columns = path.read_text().splitlines()[:2]
        assert columns == "t,exact,order1,analytic"
        assert json.loads(header[len(cli.HEADER_PREFIX):])["quantity"] == name


def test_sync_run_per_size_curves(tmp_path):
    cfg = {"params": "table2", "noise": {"s1": 0.1}, "sizes": [5, 10],
           "trials": 60, "t_max": 2.0}
    out = run_cli(tmp_path, "sync-run", cfg)
    rows = [line.split(",") for line in out.read_text().splitlines()[2:]]
    sizes = sorted({int(r[0]) for r in rows})
    assert sizes == [5, 10]


def test_radius_csv(tmp_path):
    out = run_cli(tmp_path, "radius",
                  {"x0_values": [0.0], "lam_values": [1.0], "n_max": 128})
    row = out.read_text().splitlines()[2].split(",")
    assert float(row[2]) == pytest.approx(np.pi, rel=0.01)
    assert float(row[3]) == 1.0


def test_unknown_noise_keys_rejected(tmp_path):
    from ratecorr.errors import ConfigError
    cfg_path = tmp_path / "cfg.json"
    cfg_path.write_text(json.dumps({"topology": CL10, "noise": {"bogus": 1},
                                    "trials": 5, "t_max": 1.0}))
    with pytest.raises(ConfigError, match="bogus"):
        cli.run(["simulate", "--config", str(cfg_path), "--out",
                 str(tmp_path / "x.csv")])


def test_main_exit_codes(tmp_path, monkeypatch, capsys):
    import sys
    cfg_path = tmp_path / "cfg.json"
    # config error: unknown topology kind
    cfg_path.write_text(json.dumps({"topology": {"kind": "moebius", "n": 3}}))
    monkeypatch.setattr(sys, "argv",
                        ["ratecorr", "spectrum", "--config", str(cfg_path),
                         "--out", str(tmp_path / "x.csv")])
    with pytest.raises(SystemExit) as exc:
        cli.main()
    assert exc.value.code == 2
    # numerical error: no sync solution for weak coupling
    cfg_path.write_text(json.dumps({"free": "i_base", "tau": 1.0, "lam": 1.0}))
    monkeypatch.setattr(sys, "argv",
                        ["ratecorr", "sync-solve", "--config", str(cfg_path),
                         "--out", str(tmp_path / "y.csv")])
    with pytest.raises(SystemExit) as exc:
        cli.main()
    assert exc.value.code == 3


def test_branch_flag_required_for_bistable(tmp_path):
    cfg = {"topology": {"kind": "complete", "n": 4},
           "params": {"sigmoid": {"slope": 10.0, "v_t": 0.5}},
           "noise": {"s1": 0.1}, "trials": 5, "t_max": 1.0}
    cfg_path = tmp_path / "cfg.json"
    cfg_path.write_text(json.dumps(cfg))
    from ratecorr.errors import ConfigError
    with pytest.raises(ConfigError):
        cli.run(["simulate", "--config", str(cfg_path), "--out",
                 str(tmp_path / "x.csv")])
    code = cli.run(["simulate", "--config", str(cfg_path), "--out",
                    str(tmp_path / "x.csv"), "--branch", "0"])
    assert code == 0


def test_chaos_scan_with_mc_column(tmp_path):
    cfg = {"n": 10, "nu_max": 5, "noise": {"s1": 0.1, "s2": 0.1, "s3": 0.1},
           "mc_check": [1], "trials": 400, "t": 1.0}
    out = run_cli(tmp_path, "chaos-scan", cfg)
    rows = [line.split(",") for line in out.read_text().splitlines()[2:]]
    assert len(rows) == 5
    assert rows[0][3] != ""    # MC spot check present for nu = 1
    assert rows[1][3] == ""    # absent elsewhere
    corr_values = [float(r[2]) for r in rows]
    assert corr_values == sorted(corr_values, reverse=True)
