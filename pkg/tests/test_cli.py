import json
import math
import pathlib

import pytest

from cluster_gas import cli
from cluster_gas.config import ConfigError, load_config

FIXTURES = pathlib.Path(__file__).parent / "fixtures"


def write_config(path, lines):
    path.write_text("\n".join(lines) + "\n")
    return str(path)


def base_lines(out_dir):
    return [
        "potential.kind = hat_well",
        "dim = 1",
        "radius = 1.1",
        "beta = 1.0",
        "seed = 42",
        f"output_dir = {out_dir}",
    ]


class TestConfig:
    def test_parse_values(self, tmp_path):
        cfg = load_config(
            write_config(
                tmp_path / "c.cfg",
                ["a = 1", "b.c = 2.5", "d = [1, 2, 3]", "e = text", 'f = "quoted"', "seed = 1", "flag = true"],
            )
        )
        assert cfg.get("a") == 1
        assert cfg.get("b.c") == 2.5
        assert cfg.get("d") == [1, 2, 3]
        assert cfg.get("e") == "text"
        assert cfg.get("f") == "quoted"
        assert cfg.get("flag") is True

    def test_seed_required(self, tmp_path):
        with pytest.raises(ConfigError):
            load_config(write_config(tmp_path / "c.cfg", ["a = 1"]))

    def test_rho_nu_exclusive(self, tmp_path):
        with pytest.raises(ConfigError):
            load_config(write_config(tmp_path / "c.cfg", ["seed = 1", "rho = 0.1", "nu = 2.0"]))

    def test_override(self, tmp_path):
        cfg = load_config(write_config(tmp_path / "c.cfg", ["seed = 1", "x = 1"]), overrides=["x=7"])
        assert cfg.get("x") == 7

    def test_radius_must_exceed_range(self, tmp_path):
        cfg = load_config(
            write_config(tmp_path / "c.cfg", ["seed = 1", "potential.kind = hat_well", "radius = 0.8"])
        )
        with pytest.raises(ConfigError):
            cfg.build_potential()

    def test_count_validation(self, tmp_path):
        with pytest.raises(ConfigError):
            load_config(write_config(tmp_path / "c.cfg", ["seed = 1", "partfun.samples = 0"]))


class TestCLI:
    def test_unknown_command_usage_exit(self, capsys):
        assert cli.main(["frobnicate", "x.cfg"]) == cli.EXIT_USAGE

    def test_missing_config_path(self):
        assert cli.main(["ideal-solve"]) == cli.EXIT_USAGE

    def test_config_error_exit(self, tmp_path):
        cfg = write_config(tmp_path / "c.cfg", ["a = 1"])  # no seed
        assert cli.main(["ideal-solve", cfg]) == cli.EXIT_CONFIG

    def test_potential_check(self, tmp_path):
        out = tmp_path / "out"
        cfg = write_config(tmp_path / "c.cfg", base_lines(out))
        assert cli.main(["potential-check", cfg]) == 0
        report = json.loads((out / "potential_report.json").read_text())
        assert report["all_pass"] is True
        manifest = json.loads((out / "manifest.json").read_text())
        assert manifest["command"] == "potential-check"
        assert manifest["seed"] == 42
        assert "potential_report.json" in manifest["outputs"]

    def test_ideal_solve_toy(self, tmp_path):
        out = tmp_path / "out"
        table = tmp_path / "toy.csv"
        table.write_text(
            "k,f_k,stderr_k\n1,0,0\n2,-0.5,0\n# f_inf=-2 f_inf_residual=0 beta=1 R=None tail=none\n"
        )
        cfg = write_config(
            tmp_path / "c.cfg",
            base_lines(out) + [f"ideal.table_path = {table}", "rho = 0.1"],
        )
        assert cli.main(["ideal-solve", cfg]) == 0
        sol = json.loads((out / "solution.json").read_text())
        oracle_mu = math.log((-1.0 + math.sqrt(1.0 + 0.8 * math.e)) / (4.0 * math.e))
        assert abs(sol["mu_ideal"] - oracle_mu) <= 1e-9
        assert not sol["saturated"]

    def test_ideal_solve_resample_envelope(self, tmp_path):
        out = tmp_path / "out"
        table = tmp_path / "toy.csv"
        table.write_text(
            "k,f_k,stderr_k\n1,0,0\n2,-0.5,0.01\n# f_inf=-2 f_inf_residual=0 beta=1 R=None tail=none\n"
        )
        cfg = write_config(
            tmp_path / "c.cfg",
            base_lines(out) + [f"ideal.table_path = {table}", "rho = 0.1", "ideal.resample = true"],
        )
        assert cli.main(["ideal-solve", cfg]) == 0
        env = json.loads((out / "solution_envelope.json").read_text())
        assert env["mu_lo"] < env["mu_hi"]

    def test_numerical_failure_exit(self, tmp_path):
        # ambiguous phase: rho inside the MC saturation window
        out = tmp_path / "out"
        table = tmp_path / "toy.csv"
        table.write_text(
            "k,f_k,stderr_k\n1,0,0.05\n2,-0.5,0.05\n# f_inf=-3 f_inf_residual=0 beta=1 R=None tail=none\n"
        )
        rho_mid = math.exp(-3.0) + 2.0 * math.exp(-5.0)
        cfg = write_config(
            tmp_path / "c.cfg",
            base_lines(out) + [f"ideal.table_path = {table}", f"rho = {rho_mid}"],
        )
        assert cli.main(["ideal-solve", cfg]) == cli.EXIT_NUMERICAL

    def test_compare_identical_inputs(self, tmp_path):
        out = tmp_path / "out"
        table = tmp_path / "toy.csv"
        table.write_text(
            "k,f_k,stderr_k\n1,0,0\n2,-0.5,0\n# f_inf=-2 f_inf_residual=0 beta=1 R=None tail=none\n"
        )
        cfg1 = write_config(
            tmp_path / "c1.cfg", base_lines(out) + [f"ideal.table_path = {table}", "rho = 0.1"]
        )
        assert cli.main(["ideal-solve", cfg1]) == 0
        sol = json.loads((out / "solution.json").read_text())
        emp = tmp_path / "emp.csv"
        lines = ["# rho=0.1 volume=1000 R=1.1", "k,rho_k"]
        for row in sol["minimiser"]:
            lines.append(f"{row['k']},{row['rho_k']}")
        emp.write_text("\n".join(lines) + "\n")
        cfg2 = write_config(
            tmp_path / "c2.cfg",
            base_lines(out) + [f"compare.empirical = {emp}", f"compare.ideal = {out/'solution.json'}"],
        )
        assert cli.main(["compare", cfg2]) == 0
        metrics = json.loads((out / "compare.json").read_text())
        assert abs(metrics["tv"]) <= 1e-12
        assert abs(metrics["mass_ratio_dev"]) <= 1e-9
        assert abs(metrics["half_relative_entropy"]) <= 1e-12

    def test_partfun_and_determinism(self, tmp_path):
        out1, out2 = tmp_path / "o1", tmp_path / "o2"
        lines = [
            "potential.kind = hat_well",
            "dim = 1",
            "radius = 1.1",
            "beta = 1.0",
            "seed = 7",
            "partfun.k_max = 3",
            "partfun.samples = 4000",
        ]
        cfg1 = write_config(tmp_path / "c1.cfg", lines + [f"output_dir = {out1}"])
        cfg2 = write_config(tmp_path / "c2.cfg", lines + [f"output_dir = {out2}"])
        assert cli.main(["partfun", cfg1]) == 0
        assert cli.main(["partfun", cfg2]) == 0
        assert (out1 / "table.csv").read_bytes() == (out2 / "table.csv").read_bytes()
        # round trip through the loader
        from cluster_gas.partfun import ClusterFreeEnergyTable

        table = ClusterFreeEnergyTable.load_csv(out1 / "table.csv")
        assert table.f[1] == 0.0 and table.k_max == 3

    def test_groundstate_run(self, tmp_path):
        out = tmp_path / "out"
        cfg = write_config(
            tmp_path / "c.cfg",
            [
                "potential.kind = ts_lennard_jones",
                "dim = 1",
                "radius = 3.0",
                "beta = 1.0",
                "seed = 3",
                "groundstate.k_max = 4",
                "groundstate.restarts = 4",
                "groundstate.iterations = 150",
                f"output_dir = {out}",
            ],
        )
        assert cli.main(["groundstate", cfg]) == 0
        from cluster_gas.groundstate import GroundStateTable

        table = GroundStateTable.load_csv(out / "groundstate.csv")
        assert table.energies[2] == pytest.approx(-0.983683108864, abs=1e-8)
        assert (out / "gs_k3.xyz").exists()
        fit = json.loads((out / "groundstate.json").read_text())
        assert fit["e_bulk"] is not None

    def test_saha_sweep_run(self, tmp_path):
        out = tmp_path / "out"
        gs_csv = tmp_path / "gs.csv"
        lines = ["# e_bulk=-1 nu_star=1 dim=1", "k,E_k,min_dist,max_dist"]
        for k in range(1, 11):
            lines.append(f"{k},{-(k-1)},nan,nan")
        gs_csv.write_text("\n".join(lines) + "\n")
        cfg = write_config(
            tmp_path / "c.cfg",
            [
                "seed = 5",
                "nu = 2.0",
                "saha.betas = [4.0, 8.0, 16.0]",
                "saha.source = synthetic_exact",
                f"saha.gs_path = {gs_csv}",
                f"output_dir = {out}",
            ],
        )
        assert cli.main(["ideal-sweep-saha", cfg]) == 0
        from cluster_gas.saha import load_sweep_csv

        rows = load_sweep_csv(out / "saha_sweep.csv")
        devs = [r["dev_mu"] for r in rows]
        assert devs[0] > devs[1] > devs[2]

    def test_sim_canonical_run(self, tmp_path):
        out = tmp_path / "out"
        cfg = write_config(
            tmp_path / "c.cfg",
            [
                "potential.kind = free_gas",
                "dim = 1",
                "radius = 1.0",
                "beta = 1.0",
                "seed = 11",
                "rho = 0.2",
                "sampler.n = 2",
                "sampler.sweeps = 4000",
                "sampler.burn_in = 400",
                f"output_dir = {out}",
            ],
        )
        assert cli.main(["sim-canonical", cfg]) == 0
        diag = json.loads((out / "sim_diagnostics.json").read_text())
        assert diag["seed"] == 11 and diag["steps"] == 8000
        from cluster_gas.clustering import ClusterSizeDistribution

        dist = ClusterSizeDistribution.load_csv(out / "empirical.csv")
        assert dist.density == pytest.approx(0.2)

    def test_sim_partition_run(self, tmp_path):
        out = tmp_path / "out"
        cfg = write_config(
            tmp_path / "c.cfg",
            [
                "seed = 13",
                "beta = 1.0",
                "sampler.n = 4",
                "sampler.volume = 10.0",
                "sampler.steps = 20000",
                f"sampler.table_path = {FIXTURES / 'hat_beta1_table.csv'}",
                f"output_dir = {out}",
            ],
        )
        assert cli.main(["sim-partition", cfg]) == 0
        text = (out / "partition_means.csv").read_text()
        assert text.startswith("k,mean_Nk,stderr")
        from cluster_gas.sampler import load_partition_means

        means, errs = load_partition_means(out / "partition_means.csv")
        assert len(means) == 4 and all(errs >= 0)
        assert sum((k + 1) * m for k, m in enumerate(means)) == pytest.approx(4.0, abs=1e-9)

    def test_workers_env_fallback(self, tmp_path, monkeypatch):
        monkeypatch.setenv("CLUSTER_GAS_WORKERS", "0")
        assert cli.main(["partfun", "nonexistent.cfg"]) == cli.EXIT_CONFIG
