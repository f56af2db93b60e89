"""Secondary acceptance: render all four plot kinds from real harness
outputs (small-scale runs of the primary experiments) without error."""

import pytest

netlasso = pytest.importorskip(
    "netlasso", reason="primary package needed to produce harness outputs")

from netlasso.harness import cli as netlasso_cli  # noqa: E402
from netlasso.harness import experiments, io  # noqa: E402
from netlasso.harness.spec import ExperimentSpec  # noqa: E402

from netlasso_plots.cli import main as plot_main  # noqa: E402


@pytest.fixture(scope="module")
def harness_outputs(tmp_path_factory):
    root = tmp_path_factory.mktemp("bundle")
    base = ["--N", "40", "--d", "12", "--s", "2", "--m", "4",
            "--sigma", "0.4", "--seed", "5", "--rel-tol", "1e-9"]

    conv = root / "conv"
    rc = netlasso_cli.main(["convergence", "--gammas", "1e-2,1e-3,1e-4",
                            "--iters", "3000", "--out", str(conv)] + base)
    assert rc == 0

    lam = root / "lam"
    rc = netlasso_cli.main(["sweep", "--axis", "lambda",
                            "--grid", "0.05,0.1,0.2", "--reps", "2",
                            "--iters", "1500", "--out", str(lam)] + base)
    assert rc == 0

    # d-axis (critical gamma vs dimension) at toy scale
    dsweep = root / "dsweep"
    spec = ExperimentSpec(N=40, d=24, s=2, m=4, sigma=0.4, seed=5,
                          topology="complete", weights="lazy_metropolis",
                          iters=4000, rel_tol=1e-9, reps=2, band=0.2,
                          axis="d", grid=[24, 48], ratio=0.2,
                          gamma_grid_hi=1e-1, gamma_grid_lo=1e-3,
                          out=str(dsweep))
    cols, rows, meta = experiments.run_sweep(spec)
    dsweep.mkdir(parents=True, exist_ok=True)
    io.write_sweep_csv(cols, rows, dsweep / "sweep.csv")

    # m-axis (rounds to band vs network size) at toy scale
    msweep = root / "msweep"
    spec = ExperimentSpec(N=40, d=12, s=2, m=4, sigma=0.4, seed=5,
                          topology="complete", weights="lazy_metropolis",
                          iters=4000, rel_tol=1e-9, reps=2, band=0.2,
                          axis="m", grid=[2, 4], gamma_grid_hi=1e-1,
                          gamma_grid_lo=1e-3, out=str(msweep))
    cols, rows, meta = experiments.run_sweep(spec)
    msweep.mkdir(parents=True, exist_ok=True)
    io.write_sweep_csv(cols, rows, msweep / "sweep.csv")
    return root


def test_criterion_10_all_four_kinds(harness_outputs, tmp_path):
    root = harness_outputs
    traces = sorted(str(p) for p in (root / "conv").glob("trace_*.csv"))
    assert len(traces) == 3
    jobs = [
        (["convergence", "--in"] + traces, "convergence.png"),
        (["lambda-sweep", "--in", str(root / "lam" / "sweep.csv")],
         "lambda_sweep.png"),
        (["gamma-scaling", "--in", str(root / "dsweep" / "sweep.csv")],
         "gamma_scaling.png"),
        (["m-scaling", "--in", str(root / "msweep" / "sweep.csv")],
         "m_scaling.png"),
    ]
    for argv, name in jobs:
        out = tmp_path / name
        rc = plot_main(argv + ["--out", str(out)])
        assert rc == 0, name
        assert out.exists() and out.stat().st_size > 0
    print("criterion 10: PASS - all four plot kinds rendered from harness "
          "outputs")
