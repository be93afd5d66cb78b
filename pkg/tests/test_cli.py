import json

import numpy as np
import pytest

from pimlap.cli import main

WENDLAND_CFG = """
kernel.family = wendland41
"""

NEGATIVE_LOBE_CFG = """
kernel.family = poly
kernel.coeffs = 1.0, -3.0
"""

MALFORMED_CFG = """
kernel.family wendland41
"""

SWEEP_CFG = """
kernel.family = wendland41
manifold.shape = interval
density.form = uniform
sweep.n_values = 200, 300
sweep.t_values = 0.08, 0.05
sweep.seeds = 1, 2
sweep.count = 3
"""

ACCEPT_CFG = """
kernel.family = wendland41
manifold.shape = interval
density.form = uniform
sweep.n_values = 2000
sweep.t_values = 0.01
sweep.seeds = 42
sweep.count = 2
sweep.discrepancy = false
acceptance.eig_rel_err_max = 0.10
acceptance.eig_indices = 1
"""

SPHERE_BAD_CFG = """
kernel.family = wendland41
manifold.shape = sphere
density.form = cosine
density.a = 0.5
sweep.n_values = 100
sweep.t_values = 0.05
sweep.seeds = 1
"""

POISSON_CFG = """
kernel.family = wendland41
manifold.shape = interval
density.form = uniform
sample.n = 500
sample.seed = 3
assemble.t = 0.02
poisson.f = {fname}
poisson.m = 1
"""


def write(tmp_path, text, name="cfg.txt"):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


class TestValidateKernel:
    def test_wendland_passes(self, tmp_path, capsys):
        code = main(["validate-kernel", "--config", write(tmp_path, WENDLAND_CFG)])
        out = capsys.readouterr().out
        assert code == 0
        assert "clause (a): pass" in out

    def test_negative_lobe_names_clause_b(self, tmp_path, capsys):
        code = main(["validate-kernel", "--config", write(tmp_path, NEGATIVE_LOBE_CFG)])
        out = capsys.readouterr().out
        assert code == 1
        assert "clause (b): FAIL" in out

    def test_malformed_config(self, tmp_path, capsys):
        code = main(["validate-kernel", "--config", write(tmp_path, MALFORMED_CFG)])
        err = capsys.readouterr().err
        assert code == 2
        assert "kernel.family" in err

    def test_missing_file(self, tmp_path, capsys):
        code = main(["validate-kernel", "--config", str(tmp_path / "nope.txt")])
        assert code == 2


class TestSweep:
    def test_single_cell_report_structure(self, tmp_path):
        cfg = write(
            tmp_path,
            SWEEP_CFG.replace("200, 300", "200").replace("0.08, 0.05", "0.05"),
        )
        out = tmp_path / "out"
        code = main(["sweep", "--config", cfg, "--out", str(out)])
        assert code == 0
        lines = (out / "report.csv").read_text().splitlines()
        assert lines[0] == (
            "n,t,seed,eig_index,lambda_discrete,lambda_reference,"
            "abs_error,subspace_angle,coercivity,discrepancy,wall_ms"
        )
        assert len(lines) == 1 + 2 * 3  # two seeds, three indices
        summary = json.loads((out / "summary.json").read_text())
        assert summary["config"]["sweep.count"] == 3
        assert all(
            f["flag"] == "insufficient-points"
            for f in summary["fits_vs_t"].values()
        )

    def test_acceptance_block_passes_on_standard_cell(self, tmp_path, capsys):
        out = tmp_path / "out"
        code = main(
            ["sweep", "--config", write(tmp_path, ACCEPT_CFG), "--out", str(out)]
        )
        assert code == 0
        assert "acceptance: pass" in capsys.readouterr().out

    def test_acceptance_block_failure_exit_code(self, tmp_path):
        cfg_text = ACCEPT_CFG.replace("2000", "300").replace("0.10", "0.0001")
        out = tmp_path / "out"
        code = main(
            ["sweep", "--config", write(tmp_path, cfg_text), "--out", str(out)]
        )
        assert code == 1

    def test_nonuniform_sphere_rejected_before_compute(self, tmp_path, capsys):
        code = main(
            [
                "sweep",
                "--config",
                write(tmp_path, SPHERE_BAD_CFG),
                "--out",
                str(tmp_path / "o"),
            ]
        )
        assert code == 2
        assert "unsupported" in capsys.readouterr().err

    def test_byte_identical_reruns(self, tmp_path):
        cfg = write(tmp_path, SWEEP_CFG)
        outs = []
        for name in ("a", "b"):
            out = tmp_path / name
            assert main(["sweep", "--config", cfg, "--out", str(out)]) == 0
            outs.append(out)

        def strip_wall(path):
            lines = path.read_text().splitlines()
            return [",".join(line.split(",")[:-1]) for line in lines]

        assert strip_wall(outs[0] / "report.csv") == strip_wall(outs[1] / "report.csv")

    def test_seed_override_changes_rows(self, tmp_path):
        cfg = write(tmp_path, SWEEP_CFG)
        a = tmp_path / "a"
        b = tmp_path / "b"
        main(["sweep", "--config", cfg, "--out", str(a)])
        main(["sweep", "--config", cfg, "--out", str(b), "--seed", "99"])
        ra = (a / "report.csv").read_text()
        rb = (b / "report.csv").read_text()
        assert ra != rb
        assert ",99," in rb

    def test_svg_output(self, tmp_path):
        cfg = write(tmp_path, SWEEP_CFG)
        out = tmp_path / "out"
        code = main(
            [
                "sweep", "--config", cfg, "--out", str(out),
                "--format", "csv", "--format", "svg",
            ]
        )
        assert code == 0
        svg = (out / "error_vs_t.svg").read_text()
        assert svg.lstrip().startswith("<?xml")
        assert not (out / "summary.json").exists()  # json not requested


class TestConfigKeys:
    def test_dense_threshold_controls_storage(self, tmp_path):
        from pimlap.config import RunConfig

        cfg = RunConfig.load(
            write(tmp_path, POISSON_CFG.format(fname="zero") + "assemble.dense_threshold = 400\n")
        )
        assert cfg.storage_for(400) == "dense"
        assert cfg.storage_for(401) == "sparse"
        assert RunConfig({}).storage_for(100) is None

    def test_t_auto_heuristic(self, tmp_path):
        from pimlap import t_auto
        from pimlap.config import RunConfig

        cfg = RunConfig({"assemble.t_auto": True, "assemble.t_scale": 0.5})
        assert cfg.bandwidth(1000, 1) == t_auto(1000, 1, 0.5)


class TestPoisson:
    def test_zero_rhs(self, tmp_path):
        cfg = write(tmp_path, POISSON_CFG.format(fname="zero"))
        out = tmp_path / "out"
        code = main(["poisson", "--config", cfg, "--out", str(out)])
        assert code == 0
        rows = (out / "poisson.csv").read_text().splitlines()
        assert rows[0] == "i,x1,f,u"
        u = np.array([float(r.split(",")[-1]) for r in rows[1:]])
        assert np.all(u == 0.0)

    def test_cosine_rhs_meets_residual_gate(self, tmp_path):
        cfg = write(tmp_path, POISSON_CFG.format(fname="cosine"))
        out = tmp_path / "out"
        code = main(["poisson", "--config", cfg, "--out", str(out)])
        assert code == 0
        summary = json.loads((out / "poisson_summary.json").read_text())
        assert summary["passed"]
        assert summary["residual"] < 1e-8

    def test_deterministic_csv(self, tmp_path):
        cfg = write(tmp_path, POISSON_CFG.format(fname="cosine"))
        a, b = tmp_path / "a", tmp_path / "b"
        main(["poisson", "--config", cfg, "--out", str(a)])
        main(["poisson", "--config", cfg, "--out", str(b)])
        assert (a / "poisson.csv").read_bytes() == (b / "poisson.csv").read_bytes()

    def test_cosine_solution_matches_analytic_at_scale(self, tmp_path):
        # u solves -u'' = cos(pi x) with Neumann data: u = cos(pi x)/pi^2
        cfg_text = POISSON_CFG.format(fname="cosine").replace(
            "sample.n = 500", "sample.n = 2000"
        ).replace("assemble.t = 0.02", "assemble.t = 0.01")
        out = tmp_path / "out"
        code = main(["poisson", "--config", write(tmp_path, cfg_text), "--out", str(out)])
        assert code == 0
        rows = (out / "poisson.csv").read_text().splitlines()[1:]
        data = np.array([[float(v) for v in r.split(",")] for r in rows])
        x, u = data[:, 1], data[:, 3]
        exact = np.cos(np.pi * x) / np.pi**2
        exact -= exact.mean()
        u = u - u.mean()
        assert np.linalg.norm(u - exact) < 0.10 * np.linalg.norm(exact)
