import json
import math
import os
import subprocess
import sys

import pytest

from bergman_lab import DomainSpec, MomentTable, QuadratureSpec, WeightSpec
from bergman_lab.cli import build_parser, grid_points, run
from bergman_lab.report import (
    CacheError, ConfigError, ExperimentReport, cache_key, format_cell, load_cache, parse_config, save_cache,
)


class TestReport:
    def make(self):
        r = ExperimentReport("moment", {"domain": "ball", "quad_rel_tol": 1e-10}, ["x", "v"])
        r.add_row(1.0, 0.1)
        r.add_row(2.0, -1 / 3)
        r.summary["sup"] = math.pi
        return r

    def test_csv_round_trips_floats(self):
        text = self.make().to_csv()
        lines = text.splitlines()
        assert lines[0] == "x,v"
        assert float(lines[2].split(",")[1]) == -1 / 3

    def test_json_round_trip(self):
        r = self.make()
        back = ExperimentReport.from_json(r.to_json())
        assert back == r
        assert back.to_json() == r.to_json()

    def test_row_width_checked(self):
        with pytest.raises(ValueError):
            self.make().add_row(1.0)

    @pytest.mark.parametrize("v,text", [(True, "true"), (3, "3"), (math.inf, "inf"), (0.5, "5.0000000000000000e-01")])
    def test_format_cell(self, v, text):
        assert format_cell(v) == text

    def test_timestamp_is_reproducible(self, monkeypatch):
        monkeypatch.delenv("SOURCE_DATE_EPOCH", raising=False)
        assert self.make().timestamp == "1970-01-01T00:00:00Z"
        monkeypatch.setenv("SOURCE_DATE_EPOCH", "86400")
        assert self.make().timestamp == "1970-01-02T00:00:00Z"

    def test_unknown_format(self):
        with pytest.raises(ValueError):
            self.make().render("xml")


class TestConfig:
    def test_parse(self):
        cfg = parse_config("# comment\ndomain = ellipsoid\nellipsoid_exponents = 2,1\nquad_rel_tol = 1e-9\n")
        assert cfg == {"domain": "ellipsoid", "ellipsoid_exponents": "2,1", "quad_rel_tol": 1e-9}

    @pytest.mark.parametrize("text", ["domain ball", "colour = red", "dimension = two"])
    def test_rejects(self, text):
        with pytest.raises(ConfigError):
            parse_config(text)


class TestCache:
    def filled(self, **quad):
        t = MomentTable(DomainSpec.ball(), WeightSpec.exponential(), QuadratureSpec(**quad))
        for s in [(0.0, 0.0), (2.0, 4.0), (10.0, 0.0), (3.5, 1.25)]:
            t.moment(s)
        t.log_phi(123.0)
        return t

    def test_bit_identical_round_trip(self, tmp_path):
        src = self.filled()
        path = tmp_path / "m.json"
        save_cache(src, path)
        dst = MomentTable(DomainSpec.ball())
        assert load_cache(dst, path) == len(src.cache)
        assert dst.cache == src.cache
        assert dst.radial == src.radial
        assert dst.radial_err == src.radial_err

    def test_fingerprint_mismatch(self, tmp_path):
        path = tmp_path / "m.json"
        save_cache(self.filled(), path)
        with pytest.raises(CacheError, match="quad_rel_tol"):
            load_cache(MomentTable(DomainSpec.ball(), quad=QuadratureSpec(rel_tol=1e-9)), path)
        with pytest.raises(CacheError):
            load_cache(MomentTable(DomainSpec.ellipsoid(2, 1)), path)

    def test_corrupt_file(self, tmp_path):
        path = tmp_path / "m.json"
        path.write_text('{"format": "bergman-lab-moment-cache", "version": 1, "moments": [[')
        with pytest.raises(CacheError):
            load_cache(MomentTable(DomainSpec.ball()), path)
        path.write_text(json.dumps({"format": "other"}))
        with pytest.raises(CacheError):
            load_cache(MomentTable(DomainSpec.ball()), path)

    def test_key_depends_on_setup(self):
        assert cache_key(MomentTable(DomainSpec.ball())) == cache_key(MomentTable(DomainSpec.ball()))
        assert cache_key(MomentTable(DomainSpec.ball())) != cache_key(MomentTable(DomainSpec.ball(3)))


def cli(args, capsys):
    code = run(args)
    out = capsys.readouterr()
    return code, out.out, out.err


class TestCli:
    def test_grid_points(self):
        assert grid_points(0, 100, 11)[3] == 30.0
        pts = grid_points(1e2, 1e4, 3)
        assert pts[1] == pytest.approx(1e3)
        with pytest.raises(ValueError):
            grid_points(5, 1, 3)

    def test_moment_csv(self, capsys):
        code, out, err = cli(["moment", "--x-grid", "0:10:3"], capsys)
        assert code == 0
        rows = out.strip().splitlines()
        assert rows[0] == "x,log_phi,rel_err_est" and len(rows) == 4
        assert "moment:" in err

    def test_json_embeds_effective_config(self, capsys):
        code, out, _ = cli(["moment", "--x-grid", "0:10:3", "--out", "json"], capsys)
        doc = json.loads(out)
        assert code == 0
        assert doc["config"]["domain"] == "ball" and doc["config"]["quad_rel_tol"] == 1e-10
        assert doc["config"]["x_grid"] == [0.0, 10.0, 3]

    def test_output_file(self, tmp_path, capsys):
        target = tmp_path / "r.csv"
        code, out, _ = cli(["kappa-fit", "--x-grid", "1e2:1e5:25", "--output", str(target)], capsys)
        assert code == 0
        assert out.startswith("kappa-fit: a = 2.00")
        assert target.read_text().startswith("x,log_I\n")

    def test_l2_blowup_is_contractive(self, capsys):
        code, out, _ = cli(["blowup", "--p", "2", "--k", "8", "--m-max", "1000", "--out", "json"], capsys)
        assert code == 0
        assert json.loads(out)["summary"]["max_ratio"] <= 1.0

    def test_slice_check(self, capsys):
        code, out, _ = cli(["slice-check", "--z", "0.3,0.2", "--w1", "0.4", "--degree", "60"], capsys)
        assert code == 0
        assert json.loads(out)["summary"]["rel_err"] <= 1e-6

    def test_project(self, capsys):
        code, out, _ = cli(["project", "--domain", "disc", "--weight", "none", "--monomial", "2:1"], capsys)
        assert code == 0
        assert json.loads(out)["summary"]["coefficient"] == pytest.approx(2 / 3, rel=1e-12)

    def test_kernel(self, capsys):
        code, out, _ = cli(["kernel", "--at", "0,0,0,0"], capsys)
        assert code == 0
        assert json.loads(out)["summary"]["value_re"] == pytest.approx(2.6111325, rel=1e-7)

    def test_sobolev_key_columns(self, capsys):
        code, out, _ = cli(["sobolev", "--check", "key", "--max-degree", "5", "--beta-max", "1"], capsys)
        assert code == 0
        assert out.splitlines()[0] == "alpha1,alpha2,beta1,beta2,ratio,sqrt_expr,binom_part"

    def test_config_file_and_override(self, tmp_path, capsys):
        cfg = tmp_path / "lab.cfg"
        cfg.write_text("domain = ellipsoid\nellipsoid_exponents = 2,1\n")
        code, out, _ = cli(["moment", "--config", str(cfg), "--x-grid", "0:4:2", "--out", "json"], capsys)
        assert code == 0 and json.loads(out)["config"]["domain"] == "ellipsoid"
        code, out, _ = cli(["moment", "--config", str(cfg), "--domain", "ball", "--x-grid", "0:4:2", "--out", "json"],
                           capsys)
        assert json.loads(out)["config"]["domain"] == "ball"

    @pytest.mark.parametrize("args", [["moment", "--bogus"], ["frobnicate"], ["blowup"]])
    def test_usage_errors(self, args, capsys):
        with pytest.raises(SystemExit) as info:
            run(args)
        assert info.value.code == 1
        capsys.readouterr()

    @pytest.mark.parametrize("args", [
        ["moment", "--quad-rel-tol", "0"],
        ["blowup", "--p", "2.5"],
        ["kernel", "--at", "0.6,0.8,0,0"],
        ["kappa-fit", "--x-grid", "1e2:1e3:30"],
        ["sobolev", "--check", "key", "--domain", "disc"],
        ["moment", "--config", "/nonexistent/lab.cfg"],
    ])
    def test_validation_errors(self, args, capsys):
        code, _, err = cli(args, capsys)
        assert code == 2
        assert err.startswith("bergman-lab:")

    def test_non_convergence(self, capsys):
        code, _, err = cli(["moment", "--domain", "ellipsoid", "--ellipsoid-exponents", "2,1", "--exponents", "3,4",
                            "--quad-max-depth", "10", "--quad-rel-tol", "1e-15"], capsys)
        assert code == 3
        assert "non-convergence" in err

    def test_cache_directory(self, tmp_path, monkeypatch, capsys):
        monkeypatch.setenv("BERGMAN_CACHE_DIR", str(tmp_path))
        code, first, _ = cli(["moment", "--x-grid", "0:50:6"], capsys)
        files = list(tmp_path.glob("moments-*.json"))
        assert code == 0 and len(files) == 1
        code, second, _ = cli(["moment", "--x-grid", "0:50:6"], capsys)
        assert second == first
        files[0].write_text("garbage")
        code, _, err = cli(["moment", "--x-grid", "0:50:6"], capsys)
        assert code == 2 and "cache" in err

    def test_parser_lists_all_commands(self):
        sub = next(a for a in build_parser()._actions if a.dest == "command")
        assert set(sub.choices) == {"moment", "kernel", "project", "blowup", "sobolev", "kappa-fit", "slice-check"}


DETERMINISM_RUNS = [
    ["moment", "--x-grid", "0:100:11"],
    ["kernel", "--at", "0.1,0.2j,0.3,-0.1"],
    ["project", "--monomial", "3,2:1,1"],
    ["blowup", "--p", "1.5", "--m-max", "1000"],
    ["sobolev", "--check", "adjoint", "--max-degree", "6"],
    ["kappa-fit", "--x-grid", "1e2:1e5:24"],
    ["slice-check", "--z", "0.3,0.2", "--w1", "0.4", "--degree", "30", "--disc-method", "reduction"],
]


@pytest.mark.parametrize("args", DETERMINISM_RUNS, ids=lambda a: a[0])
def test_separate_processes_agree_byte_for_byte(args, tmp_path):
    env = {k: v for k, v in os.environ.items() if k not in ("BERGMAN_CACHE_DIR", "SOURCE_DATE_EPOCH")}
    outs = []
    for i in range(2):
        target = tmp_path / f"run{i}"
        subprocess.run([sys.executable, "-m", "bergman_lab", *args, "--out", "json", "--output", str(target)],
                       check=True, env=env, capture_output=True)
        outs.append(target.read_bytes())
    assert outs[0] == outs[1]
