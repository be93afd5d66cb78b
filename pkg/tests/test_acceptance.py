"""Acceptance suite: one test per criterion, each printing a verdict line.

Run with ``pytest tests/test_acceptance.py -v -s`` to see the verdicts as
they complete.  Criteria 1 and 3 are implemented exactly as stated and are
expected to fail for eigenvalue indices >= 2: the integral-operator limit
itself carries a bandwidth bias of +12%..+39% for those modes at t = 0.01
(see notes in the repository README), which no sampling realization can
cancel.  Criterion 9 is reported but non-gating by design.
"""
import numpy as np
import pytest

from pimlap import (
    DensitySpec,
    ManifoldModel,
    SweepGrid,
    assemble,
    coercivity_constant,
    discrepancy,
    eig_error_table,
    extend_eigvec,
    fd_oracle_1d,
    reference_spectrum,
    sample,
    solve_eig,
    solve_poisson,
    subspace_angle,
    wendland41,
)
from pimlap.geometry import PointCloud

INTERVAL = ManifoldModel.interval(0.0, 1.0)
CIRCLE = ManifoldModel.circle(1.0)
SPHERE = ManifoldModel.sphere(1.0)
UNIFORM = DensitySpec("uniform")
KERNEL = wendland41()


def verdict(num, ok, name, detail):
    print(f"\nACCEPTANCE {num} [{'PASS' if ok else 'FAIL'}] {name}: {detail}", flush=True)
    return ok


@pytest.fixture(scope="module")
def interval_2000_system():
    cloud = sample(INTERVAL, UNIFORM, 2000, seed=42)
    return assemble(cloud, KERNEL, 0.01)


def test_criterion_1_interval_eigenvalue_convergence(interval_2000_system):
    """Interval(0,1), uniform, wendland41, n=2000, t=0.01, seed=42:
    eigenvalues 1..5 within 10% of (m pi)^2."""
    eig = solve_eig(interval_2000_system, 6)
    ref = np.array([(m * np.pi) ** 2 for m in range(6)])
    rel = np.abs(eig.eigenvalues[1:6] - ref[1:6]) / ref[1:6]
    ok = bool(np.all(rel <= 0.10))
    detail = "rel errors " + ", ".join(f"{e:.3f}" for e in rel)
    verdict(1, ok, "interval eigenvalue convergence", detail)
    assert ok, detail


def test_criterion_2_circle_multiplicity():
    """Circle(1), uniform, n=2000, t=0.01: lambda_1, lambda_2 within 10% of 1
    and the pair's principal angle against span{cos, sin} < 0.26 rad."""
    cloud = sample(CIRCLE, UNIFORM, 2000, seed=42)
    system = assemble(cloud, KERNEL, 0.01)
    eig = solve_eig(system, 3)
    ref = reference_spectrum(CIRCLE, UNIFORM, 3)
    e1 = abs(eig.eigenvalues[1] - 1.0)
    e2 = abs(eig.eigenvalues[2] - 1.0)
    ang = subspace_angle(system, eig, [1, 2], ref)
    ok = e1 <= 0.10 and e2 <= 0.10 and ang < 0.26
    detail = f"|l1-1|={e1:.3f} |l2-1|={e2:.3f} angle={ang:.3f} rad"
    verdict(2, ok, "circle multiplicity handling", detail)
    assert ok, detail


def test_criterion_3_weighted_operator():
    """Interval, cosine-perturbed a=0.5, n=3000, t=0.01, 3 seeds averaged:
    lambda_1..3 within 10% of the m=4001 finite-difference oracle."""
    density = DensitySpec("cosine", a=0.5)
    ref = fd_oracle_1d(density, 4001, INTERVAL, 4).eigenvalues
    errs = np.zeros(3)
    for seed in (1, 2, 3):
        cloud = sample(INTERVAL, density, 3000, seed=seed)
        eig = solve_eig(assemble(cloud, KERNEL, 0.01), 4)
        errs += np.abs(eig.eigenvalues[1:4] - ref[1:4])
    rel = errs / 3.0 / ref[1:4]
    ok = bool(np.all(rel <= 0.10))
    detail = "rel errors " + ", ".join(f"{e:.3f}" for e in rel)
    verdict(3, ok, "weighted operator vs fd oracle", detail)
    assert ok, detail


def test_criterion_4_joint_refinement_monotonicity():
    """Seed-averaged |lambda_1 - pi^2| nonincreasing along the ladder
    (1000, 0.08) -> (2000, 0.04) -> (4000, 0.02), 5 seeds."""
    grid = SweepGrid(
        manifold=INTERVAL,
        density=UNIFORM,
        kernel=KERNEL,
        n_values=(1000, 2000, 4000),
        t_values=(0.08, 0.04, 0.02),
        seeds=(1, 2, 3, 4, 5),
        mode="zip",
    )
    report = eig_error_table(
        grid, 2, options={"discrepancy": False, "coercivity": False}
    )
    assert all(r.status == "ok" for r in report.records)
    errs = [report.mean_abs_error(n, t, 1) for (n, t) in grid.cells()]
    ok = errs[0] >= errs[1] >= errs[2]
    detail = "seed-mean errors " + " -> ".join(f"{e:.3f}" for e in errs)
    verdict(4, ok, "joint refinement monotonicity", detail)
    assert ok, detail


def test_criterion_5_discrepancy_scaling():
    """Median over 20 seeds of discrepancy(n=1000)/discrepancy(n=4000) at
    t=0.02 lies in [1.4, 2.8] (the n^{-1/2} envelope predicts 2)."""
    ratios = []
    for seed in range(1, 21):
        small = sample(INTERVAL, UNIFORM, 1000, seed=seed)
        large = sample(INTERVAL, UNIFORM, 4000, seed=10_000 + seed)
        d_small = discrepancy(small, KERNEL, 0.02, INTERVAL, UNIFORM)
        d_large = discrepancy(large, KERNEL, 0.02, INTERVAL, UNIFORM)
        ratios.append(d_small / d_large)
    med = float(np.median(ratios))
    ok = 1.4 <= med <= 2.8
    detail = f"median ratio {med:.3f} over 20 seeds"
    verdict(5, ok, "discrepancy n^(-1/2) scaling", detail)
    assert ok, detail


def test_criterion_6_coercivity_positivity(interval_2000_system):
    """Coercivity constant positive on connected acceptance systems and
    stable (max/min <= 2) over 5 seeds at (n=500, t=0.02)."""
    vals = []
    for seed in range(1, 6):
        cloud = sample(INTERVAL, UNIFORM, 500, seed=seed)
        system = assemble(cloud, KERNEL, 0.02)
        assert not system.disconnected
        vals.append(coercivity_constant(system))
    big = coercivity_constant(interval_2000_system)
    ratio = max(vals) / min(vals)
    ok = min(vals) > 0 and big > 0 and ratio <= 2.0
    detail = f"values {np.round(vals, 4).tolist()}, max/min {ratio:.3f}"
    verdict(6, ok, "coercivity positivity and stability", detail)
    assert ok, detail


def test_criterion_7_algebraic_identity_suite():
    """Exact identities: L1=0; kernel-scaling and permutation invariance at
    1e-10; I_lambda restriction at 1e-10; zero Poisson solution; B-ortho."""
    cloud = sample(INTERVAL, UNIFORM, 600, seed=9)
    system = assemble(cloud, KERNEL, 0.01)
    eig = solve_eig(system, 4)
    checks = {}

    ones = np.ones(system.n)
    checks["L@1 exact"] = float(np.max(np.abs(system.L_matvec(ones)))) == 0.0

    scaled = solve_eig(assemble(cloud, KERNEL.scaled(3.0), 0.01), 4)
    rel = np.max(
        np.abs(scaled.eigenvalues[1:] - eig.eigenvalues[1:])
        / np.abs(eig.eigenvalues[1:])
    )
    checks["kernel scaling <= 1e-10"] = rel <= 1e-10

    perm = np.random.default_rng(0).permutation(system.n)
    shuffled = PointCloud(
        points=cloud.points[perm].copy(),
        density_at_points=cloud.density_at_points[perm].copy(),
        manifold=cloud.manifold,
        seed=cloud.seed,
    )
    other = solve_eig(assemble(shuffled, KERNEL, 0.01), 4)
    relp = np.max(
        np.abs(other.eigenvalues[1:] - eig.eigenvalues[1:])
        / np.abs(eig.eigenvalues[1:])
    )
    checks["permutation <= 1e-10"] = relp <= 1e-10

    dev = 0.0
    for k in (1, 2, 3):
        vals = extend_eigvec(
            system, eig.eigenvectors[:, k], eig.eigenvalues[k], cloud.points
        )
        dev = max(dev, float(np.max(np.abs(vals - eig.eigenvectors[:, k]))))
    checks["I_lambda restriction <= 1e-10"] = dev <= 1e-10

    sol = solve_poisson(system, np.zeros(system.n))
    checks["f=0 -> u=0"] = bool(np.all(sol.u == 0.0))

    U = eig.eigenvectors
    gram = U.T @ np.column_stack([system.B_matvec(U[:, j]) for j in range(4)])
    checks["B-orthonormality <= 1e-8"] = (
        float(np.max(np.abs(gram - np.eye(4)))) <= 1e-8
    )

    ok = all(checks.values())
    detail = "; ".join(f"{k}: {'ok' if v else 'BROKEN'}" for k, v in checks.items())
    verdict(7, ok, "algebraic identity suite", detail)
    assert ok, detail


def test_criterion_8_poisson_analytic(interval_2000_system):
    """f = cos(pi x) on the uniform interval, n=2000, t=0.01: mean-removed
    sample-norm error vs cos(pi x)/pi^2 below 10%."""
    system = interval_2000_system
    x = system.cloud.points[:, 0]
    f = np.cos(np.pi * x)
    sol = solve_poisson(system, f)
    exact = np.cos(np.pi * x) / np.pi**2
    exact = exact - exact.mean()
    u = sol.u - sol.u.mean()
    rel = float(np.linalg.norm(u - exact) / np.linalg.norm(exact))
    ok = rel < 0.10 and sol.residual < 1e-8
    detail = f"relative L2 error {rel:.4f}, solver residual {sol.residual:.2e}"
    verdict(8, ok, "Poisson analytic check", detail)
    assert ok, detail


def test_criterion_9_sphere_stretch_reported():
    """Sphere(1), uniform, n=8000, t=0.02: first nonzero triple vs 2 with
    multiplicity 3 by gap grouping.  Reported, non-gating."""
    cloud = sample(SPHERE, UNIFORM, 8000, seed=42)
    system = assemble(cloud, KERNEL, 0.02)
    eig = solve_eig(system, 5)
    lam = eig.eigenvalues
    rel = np.abs(lam[1:4] - 2.0) / 2.0
    multiplicity = int(np.sum(np.abs(lam[1:] - 2.0) <= 0.2 * 2.0))
    ok = bool(np.all(rel <= 0.20) and multiplicity == 3)
    detail = (
        f"triple {np.round(lam[1:4], 3).tolist()} rel "
        + ", ".join(f"{e:.3f}" for e in rel)
        + f"; observed multiplicity {multiplicity}; next {lam[4]:.3f}"
    )
    verdict(9, ok, "sphere stretch (non-gating)", detail)
    # reported only: the suite asserts the computation completed
    assert np.all(np.isfinite(lam))
    assert len(lam) == 5
