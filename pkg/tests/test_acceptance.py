"""Acceptance gate: every release criterion at its stated tolerance.

Each test prints one pass/fail line (run pytest with -s or read the captured
output).  Tolerances here are contractual; do not loosen them.
"""

import math
import time

import numpy as np
import pytest

from plastiproj import tensor_core as tc
from plastiproj import verify
from plastiproj import harness_cli as cli
from plastiproj.linalg import SparseSym, cg_solve
from plastiproj.scenarios import growing_yield_0d_spec, radial_0d_spec, unit_square_spec
from plastiproj.stepper import _Engine, discrete_norms, energy_report, run
from plastiproj.harness_cli import convergence_errors

SQ2 = math.sqrt(2.0)

_s2_cache: dict = {}


def s2_run(n_steps: int, scheme: str = "projection"):
    key = (n_steps, scheme)
    if key not in _s2_cache:
        _s2_cache[key] = run(unit_square_spec(n_steps=n_steps), scheme)
    return _s2_cache[key]


def report(num: int, ok: bool, detail: str) -> None:
    print(f"criterion {num:2d}: {'PASS' if ok else 'FAIL'} ({detail})")
    assert ok, detail


def test_01_projection_property_suite():
    t0 = time.perf_counter()
    results = []
    for d in (2, 3):
        results += verify.proj_prop_suite(d, 10_000, seed=0)
    elapsed = time.perf_counter() - t0
    worst = max(r.max_violation for r in results)
    ok = all(r.passed for r in results) and elapsed < 2.0
    report(1, ok, f"10^4 samples per d, worst violation {worst:.2e}, {elapsed:.2f}s")


def test_02_projection_beats_brute_force_oracle():
    t0 = time.perf_counter()
    results = verify.oracle_suite(n_cases=100, n_samples=100_000, seed=2)
    elapsed = time.perf_counter() - t0
    worst = results[0].max_violation
    ok = worst <= 1e-12 and elapsed < 30.0
    report(2, ok, f"100 cases x 10^5 samples, worst margin {worst:.2e}, {elapsed:.1f}s")


def test_03_chart_property_suite():
    results = []
    for d in (2, 3):
        results += verify.chart_suite(d, 10_000, seed=1)
    worst = max(r.max_violation for r in results)
    ok = all(r.passed for r in results)
    report(3, ok, f"isometry/orthogonality/roundtrip/membership, worst {worst:.2e}")


def test_04_stress_update_variational_inequality():
    results = verify.vi_suite(n_setups=1_000, n_witnesses=100, seed=3)
    worst = results[0].max_violation
    ok = worst <= 1e-10
    report(4, ok, f"10^3 setups x 10^2 witnesses, worst violation {worst:.2e}")


# -- 0d closed forms ----------------------------------------------------------------


def _oracle_amplitudes(n_steps: int, total: float, g_at):
    """Independent scalar catch-up recursion at a fine step.

    The tensor problem is radial: sigma = a * diag(1,-1), so one scalar
    amplitude a_n = min(a_{n-1} + dt, g(t_n)/sqrt(2)) carries the whole state.
    """
    dt = total / n_steps
    amps = np.empty(n_steps + 1)
    amps[0] = 0.0
    cur = 0.0
    for k in range(1, n_steps + 1):
        bound = g_at(k * dt) / SQ2
        cur = cur + dt
        if cur > bound:
            cur = bound
        amps[k] = cur
    return amps


def _bar_error_on_dense_grid(coarse_amps, n_coarse, total, closed_form, n_dense):
    """Max tensor-norm error of the right-constant interpolant on a dense grid."""
    j = np.arange(n_dense + 1)
    t = j * (total / n_dense)
    idx = np.minimum(np.maximum(np.ceil(j * n_coarse / n_dense).astype(int), 1), n_coarse)
    return SQ2 * np.abs(coarse_amps[idx] - closed_form(t)).max()


def test_05_0d_radial_closed_forms():
    t0 = time.perf_counter()
    n_fine = 1_000_000
    cases = {
        "constant yield": (
            radial_0d_spec, 2.0, lambda t: 1.0,
            lambda t: np.minimum(t, 1.0 / SQ2),
        ),
        "growing yield": (
            growing_yield_0d_spec, 4.0, lambda t: 1.0 + t,
            lambda t: np.where(t <= 1.0 / (SQ2 - 1.0), t, (1.0 + t) / SQ2),
        ),
    }
    details = []
    ok = True
    for label, (make_spec, total, g_at, closed) in cases.items():
        oracle = _oracle_amplitudes(n_fine, total, g_at)
        t_fine = np.arange(n_fine + 1) * (total / n_fine)
        oracle_err = SQ2 * np.abs(oracle - closed(t_fine)).max()
        ok = ok and oracle_err <= 1e-5  # fine-step oracle reproduces the closed form

        errs = {}
        for n in (2000, 4000):
            traj = run(make_spec(n_steps=n, total_time=total))
            amps = traj.sigma_series()[:, 0, 0]
            # scheme nodes against the independent oracle at shared times
            stride = n_fine // n
            node_gap = np.abs(amps - oracle[::stride]).max()
            ok = ok and node_gap <= 5e-3
            errs[n] = _bar_error_on_dense_grid(amps, n, total, closed, n_fine)
        ratio = errs[2000] / errs[4000]
        ok = ok and errs[2000] <= 5e-3 and ratio >= 1.8
        details.append(f"{label}: err {errs[2000]:.2e}, doubling ratio {ratio:.2f}")
    elapsed = time.perf_counter() - t0
    ok = ok and elapsed < 10.0
    report(5, ok, "; ".join(details) + f", {elapsed:.1f}s")


# -- fem scenario criteria ------------------------------------------------------------


def test_06_per_step_yield_feasibility():
    t0 = time.perf_counter()
    traj = s2_run(200)
    eng = _Engine(traj.spec)
    worst = math.inf
    for st in traj.states:
        slack = tc.yield_slack_arr(st.sigma, eng.p_at(st.t), eng.g_at(st.t))
        worst = min(worst, float(slack.min()))
    elapsed = time.perf_counter() - t0
    ok = worst >= -1e-10 and elapsed < 30.0
    report(6, ok, f"200 steps x {traj.mesh.n_elements} elements, min slack {worst:.2e}, {elapsed:.1f}s")


def test_07_unconditional_stability():
    t0 = time.perf_counter()
    spec = unit_square_spec()
    steps = [max(1, round(spec.T / dt)) for dt in
             (spec.T, spec.T / 2, spec.T / 10, spec.T / 100, spec.T / 1000)]
    reports = {}
    ok = True
    for n in steps:
        traj = run(spec.with_steps(n), "projection")
        rep = discrete_norms(traj)
        en = energy_report(traj)
        ok = ok and all(math.isfinite(v) for v in rep.as_dict().values())
        ok = ok and en.ok
        reports[n] = rep
    finest = reports[max(steps)]
    for n in steps:
        ok = ok and reports[n].linf_H_vbar <= 10.0 * finest.linf_H_vbar
        ok = ok and reports[n].linf_H_sigma <= 10.0 * finest.linf_H_sigma
    elapsed = time.perf_counter() - t0
    ok = ok and elapsed < 120.0
    worst_ratio = max(reports[n].linf_H_vbar / finest.linf_H_vbar for n in steps)
    report(7, ok, f"dt down to T/1000, worst coarse/fine velocity ratio "
                  f"{worst_ratio:.2f}, energy inequality holds, {elapsed:.1f}s")


def test_08_gap_rates():
    spec = unit_square_spec()
    dts, g_sig, g_v = [], [], []
    for n in (40, 80, 160, 320, 640):
        traj = s2_run(n)
        rep = discrete_norms(traj)
        dt = spec.T / n
        dts.append(dt)
        # L2(H) norms of the interpolant gaps: sqrt(dt * summed squares)
        g_sig.append(math.sqrt(dt * rep.gap_sigma))
        g_v.append(math.sqrt(dt * rep.gap_v))
    slope_sig = np.polyfit(np.log(dts), np.log(g_sig), 1)[0]
    slope_v = np.polyfit(np.log(dts), np.log(g_v), 1)[0]
    ok = slope_sig >= 0.45 and slope_v >= 0.45
    report(8, ok, f"log-log slopes: stress gap {slope_sig:.2f}, velocity gap {slope_v:.2f}")


def test_09_self_convergence():
    t0 = time.perf_counter()
    ref = s2_run(2560)
    errs = {n: convergence_errors(ref, s2_run(n)) for n in (80, 160, 320)}
    ok = True
    details = []
    for key in ("err_sigma_LinfH", "err_v_LinfH", "err_v_L2V"):
        seq = [errs[n][key] for n in (80, 160, 320)]
        ok = ok and seq[0] > seq[1] > seq[2] > 0.0
        ok = ok and seq[2] <= 0.5 * seq[0]
        details.append(f"{key} {seq[0]:.2e}->{seq[2]:.2e}")
    elapsed = time.perf_counter() - t0
    ok = ok and elapsed < 180.0
    report(9, ok, ", ".join(details) + f", {elapsed:.1f}s")


def test_10_scheme_agreement():
    spec = unit_square_spec()
    diffs = []
    for n in (40, 80, 160):
        proj = s2_run(n, "projection")
        impl = s2_run(n, "implicit")
        assert all(st.fp_converged for st in impl.states)
        assert max(st.fp_iters for st in impl.states) <= 200
        space = proj.space
        diffs.append(max(
            space.stress_l2(a.sigma - b.sigma)
            for a, b in zip(proj.states, impl.states)
        ))
    ok = diffs[0] > diffs[1] > diffs[2]
    report(10, ok, "projection-implicit LinfH distance "
                   + " -> ".join(f"{d:.2e}" for d in diffs))


def test_11_cg_matches_direct_solve():
    rng = np.random.default_rng(0)
    m = rng.standard_normal((50, 50))
    a_dense = m @ m.T + 50.0 * np.eye(50)
    b = rng.standard_normal(50)
    res = cg_solve(SparseSym.from_dense(a_dense), b, tol=1e-13)
    want = np.linalg.solve(a_dense, b)
    err_rand = np.abs(res.x - want).max() / np.abs(want).max()

    spec = unit_square_spec(mesh_n=8)
    eng = _Engine(spec)
    a_step = eng.a_proj
    rhs = np.where(eng.mask, 0.0, rng.standard_normal(eng.mesh.n_dofs))
    res2 = cg_solve(a_step, rhs, tol=1e-13)
    want2 = np.linalg.solve(a_step.to_dense(), rhs)
    err_step = np.abs(res2.x - want2).max() / np.abs(want2).max()

    ok = res.converged and res2.converged and err_rand <= 1e-8 and err_step <= 1e-8
    report(11, ok, f"random SPD 50x50 err {err_rand:.2e}, "
                   f"8x8-mesh step matrix err {err_step:.2e}")


def test_12_byte_identical_outputs(tmp_path):
    fem_cfg = cli.parse_config("configs/unit_square.json")
    fem_cfg.vtk_stride = 100
    cli.cmd_run(fem_cfg, tmp_path / "run_a")
    cli.cmd_run(cli.parse_config("configs/unit_square.json"), tmp_path / "run_b")
    same_csv = ((tmp_path / "run_a" / "norms.csv").read_bytes()
                == (tmp_path / "run_b" / "norms.csv").read_bytes())
    same_vtk = ((tmp_path / "run_a" / "snapshot_000100.vtk").read_bytes()
                == (tmp_path / "run_b" / "snapshot_000100.vtk").read_bytes())

    cfg0 = cli.parse_config("configs/radial_0d.json")
    cfg0.verify_params = {"n_samples": 500, "n_oracle_cases": 5,
                          "oracle_samples": 5000, "n_vi_setups": 20,
                          "n_vi_witnesses": 20}
    cli.cmd_verify(cfg0, tmp_path / "ver_a")
    cfg1 = cli.parse_config("configs/radial_0d.json")
    cfg1.verify_params = dict(cfg0.verify_params)
    cli.cmd_verify(cfg1, tmp_path / "ver_b")
    same_verify = ((tmp_path / "ver_a" / "verify.csv").read_bytes()
                   == (tmp_path / "ver_b" / "verify.csv").read_bytes())

    ok = same_csv and same_vtk and same_verify
    report(12, ok, "norms.csv, snapshot vtk and verify.csv byte-identical across reruns")
