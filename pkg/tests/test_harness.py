import json

import numpy as np
import pytest
from click.testing import CliRunner

from burgulence.errors import PlanError
from burgulence.harness import checks
from burgulence.harness.cli import main
from burgulence.harness.ensembles import EnsembleCache, _chunk, default_workers, run_members
from burgulence.harness.plan import NoisePlan, build_plan, load_plan, parse_override
from burgulence.harness.runner import MANIFEST, run_experiment
from burgulence.noise import DEFAULT_NOISE
from burgulence.dynamics import SimConfig
from burgulence.spectral import SpectralField

# a fast simulate plan: 8 members, 32 modes, t in [0, 4]
TINY = ["n_modes=32", "dt=1e-3", "t_end=4.0", "R=8", "save_every=10", "window_start=1.0", "sigma=2.0"]


class TestPlan:
    def test_minimal_defaults(self, tmp_path):
        f = tmp_path / "p.yaml"
        f.write_text("kind: simulate\nnu: 0.05\nseed: 3\n")
        p = load_plan(f)
        assert (p.n_modes, p.dt, p.R) == (256, 2e-4, 50)
        assert p.seed == 3 and p.nus == [0.05]
        spec = p.noise_spec()
        assert np.array_equal(spec.pos, DEFAULT_NOISE.pos) and np.array_equal(spec.neg, DEFAULT_NOISE.neg)

    def test_nu_out_of_range(self, tmp_path):
        f = tmp_path / "p.yaml"
        f.write_text("kind: simulate\nnu: 1.5\n")
        with pytest.raises(PlanError, match=r"nu out of \(0,1\]"):
            load_plan(f)

    def test_scaling_schedule(self):
        p = build_plan({"kind": "scaling"})
        sched = p.schedule()
        assert p.nus == [0.1, 0.05, 0.02, 0.01]
        assert len(sched) == 4 * p.R == 120
        assert {s["nu"] for s in sched} == set(p.nus)
        assert p.t_end == 15.0 and p.dt_for(0.01) == 1e-4 and p.dt_for(0.1) == 2e-4

    def test_parse_error_has_line(self, tmp_path):
        f = tmp_path / "p.yaml"
        f.write_text("kind: simulate\nnu: [0.1\nseed: 1\n")
        with pytest.raises(PlanError, match="line"):
            load_plan(f)

    def test_unknown_field_named(self):
        with pytest.raises(PlanError, match="bogus"):
            build_plan({"kind": "simulate", "bogus": 1})

    def test_window_beyond_t_end(self):
        with pytest.raises(PlanError, match="exceeds t_end"):
            build_plan({"kind": "simulate", "t_end": 5, "window_start": 4, "sigma": 2})

    def test_overrides(self):
        assert parse_override("noise.cutoff=8") == ("noise.cutoff", 8)
        p = build_plan({"kind": "simulate"}, ["noise.cutoff=8", "R=3", "nu=0.1"])
        assert p.noise == NoisePlan(cutoff=8) and p.R == 3 and p.nu == 0.1
        with pytest.raises(PlanError):
            parse_override("R3")

    def test_explicit_pairs(self):
        p = build_plan({"kind": "simulate", "noise": {"pairs": {1: 1.0, -1: 1.0}}})
        assert p.noise_spec().pairs() == [(1, 1.0), (-1, 1.0)]


class TestScheduling:
    def test_chunks_cover(self):
        parts = _chunk(list(range(10)), 3)
        assert [len(p) for p in parts] == [4, 3, 3]
        assert sum(parts, []) == list(range(10))

    def test_worker_count_irrelevant(self):
        cfg = SimConfig(nu=0.1, n_modes=16, dt=1e-3, t_end=0.2, save_every=10, snapshot_every=100)
        u0 = SpectralField.zeros(16)
        one = run_members(u0, cfg, DEFAULT_NOISE, 5, range(5), workers=1)
        two = run_members(u0, cfg, DEFAULT_NOISE, 5, range(5), workers=2)
        for a, b in zip(one, two):
            assert a.member_index == b.member_index
            np.testing.assert_array_equal(a.snapshots, b.snapshots)

    def test_env_default(self, monkeypatch):
        monkeypatch.setenv("BURGULENCE_WORKERS", "3")
        assert default_workers() == 3
        monkeypatch.delenv("BURGULENCE_WORKERS")
        assert default_workers() == 1

    def test_cache_reuses(self):
        cfg = SimConfig(nu=0.1, n_modes=16, dt=1e-3, t_end=0.1, save_every=10)
        ens = EnsembleCache()
        a = ens.get(SpectralField.zeros(16), cfg, DEFAULT_NOISE, 0, range(2))
        b = ens.get(SpectralField.zeros(16), cfg, DEFAULT_NOISE, 0, range(2))
        assert a is b


class TestRunner:
    def test_simulate_writes_manifest(self, tmp_path):
        plan = build_plan({"kind": "simulate"}, TINY)
        out = run_experiment(plan, tmp_path / "a")
        man = json.loads((tmp_path / "a" / MANIFEST).read_text())
        listed = {f["path"] for f in man["files"]}
        on_disk = {str(p.relative_to(tmp_path / "a")) for p in (tmp_path / "a").rglob("*")
                   if p.is_file() and p.name != MANIFEST}
        assert listed == on_disk
        assert "energy_ledger.csv" in listed and any(p.startswith("members/") for p in listed)
        assert man["acceptance"][0]["criterion"] == 5
        assert out.exit_code in (0, 1) and man["degraded"] is False
        assert len(man["schedule"]) == 8

    def test_byte_identical_rerun(self, tmp_path):
        plan = build_plan({"kind": "simulate"}, TINY)
        run_experiment(plan, tmp_path / "a")
        run_experiment(plan, tmp_path / "b", workers=2)
        for f in (tmp_path / "a").rglob("*.csv"):
            assert f.read_bytes() == (tmp_path / "b" / f.relative_to(tmp_path / "a")).read_bytes()

    def test_degraded_member_recorded(self, tmp_path):
        # CFL guard trips for every member: the run completes and is marked degraded
        plan = build_plan({"kind": "simulate"}, TINY + ["dt=0.02", "noise.b0=400"])
        out = run_experiment(plan, tmp_path / "d")
        assert out.manifest["degraded"] and out.exit_code == 1
        assert "error" in out.manifest["acceptance"][0]["measured"]
        f = out.manifest["failures"][0]
        assert {"member", "seed", "failure"} <= set(f)


class TestCli:
    def test_plan_error_exit_2(self, tmp_path):
        f = tmp_path / "p.yaml"
        f.write_text("nu: 1.5\n")
        res = CliRunner().invoke(main, ["simulate", "--plan", str(f), "--out", str(tmp_path / "o")])
        assert res.exit_code == 2
        assert "nu out of (0,1]" in res.output

    def test_kind_mismatch_exit_2(self, tmp_path):
        f = tmp_path / "p.yaml"
        f.write_text("kind: mixing\n")
        assert CliRunner().invoke(main, ["simulate", "--plan", str(f)]).exit_code == 2

    def test_simulate_runs(self, tmp_path):
        args = ["simulate", "--out", str(tmp_path / "o"), "--seed", "4", "--workers", "1"]
        for o in TINY:
            args += ["--override", o]
        res = CliRunner().invoke(main, args)
        assert res.exit_code in (0, 1), res.output
        assert "[ 5] energy balance" in res.output
        man = json.loads((tmp_path / "o" / MANIFEST).read_text())
        assert man["plan"]["seed"] == 4
        assert res.exit_code == (0 if man["passed"] else 1)

    def test_validate_subset(self):
        plan = build_plan({"kind": "validate"})
        for check in (checks.heat_oracle, checks.cole_hopf_oracle):
            res = check(plan)
            assert res.passed, res.line()
