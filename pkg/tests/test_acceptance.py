"""Acceptance criteria 1-10, each at its stated tolerance.

Every test records a PASS/FAIL line that is printed in the terminal summary
(and echoed to stdout, visible with ``-s``).
"""
import contextlib
import json
import math
import time

import numpy as np
import pytest

from krflab import cli, optimize
from krflab.curvature import (
    constant_curvature_tensor,
    gg_tensor,
    random_kahler_array,
    traceless_spectrum,
    traces,
)
from krflab.envelopes import holsec_mu, logistic_mu, positivity_crossing_time, solve_envelope_ode
from krflab.flow import FlowConfig, run_flow
from krflab.quadform import direct_contraction, trace_inequality_check, lemma_fuzz, saturation_probe, second_variation_form
from krflab.reaction import (
    box_reaction,
    integrate_reaction,
    pinched_tensor,
    s_reaction_bound_check,
    tight_pinched_instance,
)

from conftest import ACCEPTANCE
from test_reaction import _symbolic_box, _symbolic_kahler

TOL = 1e-3


@contextlib.contextmanager
def criterion(num, title):
    detail = {}
    try:
        yield detail
    except BaseException:
        ACCEPTANCE[num] = (False, title, _fmt(detail))
        print(f"criterion {num}: FAIL {_fmt(detail)}")
        raise
    ACCEPTANCE[num] = (True, title, _fmt(detail))
    print(f"criterion {num}: PASS {_fmt(detail)}")


def _fmt(d):
    return ", ".join(f"{k}={v:.3g}" if isinstance(v, float) else f"{k}={v}" for k, v in d.items())


def _perturbed(mode, seed, amp, cadence, extremizers=True):
    cfg = FlowConfig(
        n=2,
        N=128,
        t_end=3.0,
        cadence=cadence,
        init={"kind": "perturbed", "amplitude": amp, "mode": mode, "seed": seed},
        extremizers=extremizers,
    )
    return run_flow(cfg)


# (mode, seed, amplitude) of the bump perturbation; chosen by scanning the
# family for initial data in each criterion's window
SCALAR_RUNS = [(1, 0, 0.0225), (1, 1, 0.02), (1, 2, 0.02), (1, 3, 0.015), (2, 1, 0.0075), (2, 3, 0.0075)]
PINCHED_RUNS = [(1, 1, 0.0121), (1, 2, 0.0121), (1, 3, 0.0087), (2, 2, 0.0054)]


@pytest.fixture(scope="module")
def pinched_runs():
    return {p: _perturbed(*p, cadence=0.25) for p in PINCHED_RUNS}


def test_c01_fs_fixed_point():
    with criterion(1, "FS fixed point") as d:
        d["box_max"] = max(
            float(np.abs(box_reaction(constant_curvature_tensor(n, 2 / (n + 1)))).max()) for n in (2, 3, 4)
        )
        assert d["box_max"] <= 1e-12
        start = time.perf_counter()
        rec = run_flow(FlowConfig(n=2, N=128, t_end=5.0, cadence=0.5))
        d["runtime_s"] = time.perf_counter() - start
        drift = 0.0
        for name in ("scalar_min", "scalar_max", "ricci_min", "holsec_min", "orthbis_min", "mu_star"):
            col = rec.column(name)
            drift = max(drift, float(np.abs(col - col[0]).max()))
        d["bound_drift"] = drift
        assert drift <= 1e-5
        assert d["runtime_s"] < 120


def test_c02_scalar_envelope():
    with criterion(2, "scalar envelope") as d:
        worst_lo, worst_hi = -np.inf, -np.inf
        for p in SCALAR_RUNS:
            rec = _perturbed(*p, cadence=0.1, extremizers=False)
            t = rec.column("t")
            s_min, s_max = rec.column("scalar_min"), rec.column("scalar_max")
            assert -1.0 <= s_min[0] <= -0.1, p
            lower = min(s_min[0], 0.0) * np.exp(-t)
            upper = rec.h_max[0] * np.exp(t) + 2
            worst_lo = max(worst_lo, float(np.max(lower - s_min)))
            worst_hi = max(worst_hi, float(np.max(s_max - upper)))
        d["runs"] = len(SCALAR_RUNS)
        d["max_lower_excess"] = worst_lo
        d["max_upper_excess"] = worst_hi
        assert worst_lo <= TOL and worst_hi <= TOL


def _ricci_reaction_starts(count, seed):
    """Tensors with Ricci >= 0 (some close to 0) and positive orthogonal bisectional curvature."""
    rng = np.random.default_rng(seed)
    keep = []
    while len(keep) < count:
        cand = []
        for _ in range(200):
            R = random_kahler_array(2, rng) + rng.uniform(0, 1) * gg_tensor(2)
            lo = np.linalg.eigvalsh(traces(R)[0])[0]
            if lo >= 0:
                # (g*g) has Ricci 3 g in dimension 2: push Ricci toward its boundary
                cand.append(R - lo * rng.random() / 3 * gg_tensor(2))
        ob = optimize.minimize_orthbis(np.stack(cand), restarts=16).values
        keep += [R for R, o in zip(cand, ob) if o > 0]
    return keep[:count]


def test_c03_ricci_envelope(pinched_runs):
    with criterion(3, "Ricci envelope") as d:
        used, worst = 0, -np.inf
        for p, rec in pinched_runs.items():
            r = rec.column("ricci_min")
            if not (-0.5 <= r[0] <= -0.05 and rec.column("orthbis_min").min() > 0):
                continue
            mu0 = -r[0]
            C = mu0 / (mu0 + 1)
            t = rec.column("t")
            worst = max(worst, float(np.max(-C / (np.exp(t) - C) - r)))
            used += 1
        d["flow_runs"] = used
        d["max_excess"] = worst
        assert used >= 3 and worst <= TOL
        starts = _ricci_reaction_starts(200, 5)
        low = min(integrate_reaction(R, (0.0, 2.0)).ricci_min().min() for R in starts)
        d["reaction_runs"] = len(starts)
        d["reaction_ricci_min"] = float(low)
        assert low >= -1e-8


def test_c04_holsec_envelope(pinched_runs):
    with criterion(4, "holomorphic sectional envelope") as d:
        t = np.linspace(0, 10, 201)
        err = 0.0
        for mu0 in (-1.0, -0.5, -0.1):
            sol = solve_envelope_ode("HolSecLower", {"mu0": mu0}, (0, 10), tol=1e-12, t_eval=t)
            closed = 1 / (2 + (1 / mu0 - 2) * np.exp(t))
            err = max(err, float(np.abs(sol(t) - closed).max()))
        d["closed_vs_rk"] = err
        assert err <= 1e-8
        used, worst, worst_literal = 0, -np.inf, -np.inf
        for p, rec in pinched_runs.items():
            hs = rec.column("holsec_min")
            if not (hs[0] < 0 and rec.column("orthbis_min").min() > 0):
                continue
            tt = rec.column("t")
            worst = max(worst, float(np.max(rec.column("env_holsec") - hs)))
            # envelope seeded directly with holsec_min(0), reported for comparison
            worst_literal = max(worst_literal, float(np.max(holsec_mu(hs[0], tt) - hs)))
            used += 1
        d["flow_runs"] = used
        d["max_excess"] = worst
        d["max_excess_mu0=holsec(0)"] = worst_literal
        assert used >= 3 and worst <= TOL


def test_c05_logistic_pinching():
    with criterion(5, "logistic pinching") as d:
        t = np.linspace(0, 180, 4001)
        v = logistic_mu(0.1, 1.0, 2, t)
        d["min_increment"] = float(np.diff(v[t < 30]).min())
        d["gap_at_180"] = float(abs(v[-1] - 1 / 3))
        assert np.all(np.diff(v[t < 30]) > 0) and np.all(np.diff(v) >= 0)
        assert d["gap_at_180"] <= 1e-6
        d["crossing"] = positivity_crossing_time(-0.5, 1.0, 3)
        assert d["crossing"] == pytest.approx(1.0, abs=1e-15)


@pytest.mark.xfail(
    strict=True,
    reason="the trace inequality is false for general nonnegative block forms; counterexample |x1 + y2|^2",
)
def test_c06_lemma_fuzz():
    with criterion(6, "block trace inequality fuzz") as d:
        start = time.perf_counter()
        total, violations = 0, 0
        for n in (2, 3, 4):
            s = lemma_fuzz(n, 10_000, 0)
            total += s.samples
            violations += s.violations
        d["runtime_s"] = time.perf_counter() - start
        _, sat = saturation_probe(3)
        d["saturation_slack"] = sat.slack
        d["samples"] = total
        d["violations"] = violations
        assert 0 <= sat.slack <= 1e-6
        assert d["runtime_s"] < 60
        assert violations == 0


def test_c06b_lemma_on_second_variation_forms():
    # not a numbered criterion: the setting the inequality is actually used in
    for n in (2, 3, 4):
        assert lemma_fuzz(n, 1000, 0, sampler="second-variation").violations == 0
    assert 0 <= saturation_probe(3)[1].slack <= 1e-6


def _two_positive(n, count, seed):
    rng = np.random.default_rng(seed)
    keep = []
    while len(keep) < count:
        R = random_kahler_array(n, rng) + rng.uniform(-0.2, 0.8) * gg_tensor(n)
        ev, ok = traceless_spectrum(R)
        if ok:
            # (g*g) acts as the identity on trace-free forms: move toward the cone's edge
            keep.append(R - 0.5 * (ev[0] + ev[1]) * rng.random() ** 0.25 * gg_tensor(n))
    return np.stack(keep)


def test_c07_implication_fuzz():
    with criterion(7, "two-positive implies orthbis > 0") as d:
        bad, lowest = 0, np.inf
        for n in (2, 3):
            ts = _two_positive(n, 10_000, n)
            assert all(traceless_spectrum(T)[1] for T in ts)
            res = optimize.minimize_orthbis(ts, restarts=16)
            assert res.converged.all()
            bad += int(np.sum(res.values <= -1e-9))
            lowest = min(lowest, float(res.values.min()))
        d["samples"] = 20_000
        d["counterexamples"] = bad
        d["lowest_orthbis"] = lowest
        assert bad == 0


def test_c08_trace_identities():
    with criterion(8, "trace identities") as d:
        # one-time symbolic confirmation at n = 2
        R = _symbolic_kahler(2)
        box, ric = _symbolic_box(R, 2)
        import sympy as sp

        rng2 = range(2)
        scal = sum(ric[(i, i)] for i in rng2)
        norm2 = sum(ric[(i, j)] * ric[(j, i)] for i in rng2 for j in rng2)
        tb = sum(box[(i, i, k, k)] for i in rng2 for k in rng2)
        assert sp.expand(tb + 2 * (norm2 - scal) - (norm2 - scal)) == 0
        d["symbolic_n2"] = "ok"
        rng = np.random.default_rng(8)
        worst = 0.0
        for k in range(1000):
            n = 2 + k % 3
            T = random_kahler_array(n, rng) + rng.uniform(-1, 2) * gg_tensor(n)
            B = box_reaction(T)
            ric, scal = traces(T)
            norm2 = float(np.vdot(ric, ric).real)
            worst = max(worst, abs(float(np.einsum("iikk->", B).real) + 2 * (norm2 - scal) - (norm2 - scal)))
            rr = np.einsum("ijkl,lk->ij", T, ric)
            worst = max(worst, float(np.abs(np.einsum("ijkk->ij", B) - (ric - rr) - (rr - ric @ ric)).max()))
        d["numeric_max_err"] = worst
        assert worst <= 1e-10


def test_c09_second_variation_inequality():
    with criterion(9, "null-direction trace inequality") as d:
        rng = np.random.default_rng(9)
        worst = 0.0
        for seed in range(100):
            mu = float(rng.uniform(-0.3, 0.3))
            R, e1 = tight_pinched_instance(2, mu, seed)
            S = pinched_tensor(R, mu)
            chk = trace_inequality_check(second_variation_form(S, e1, restarts=16), tol=1e-9)
            lhs, rhs = direct_contraction(S, e1)
            worst = max(worst, abs(chk.lhs - lhs), abs(chk.rhs - rhs))
            assert chk.holds and lhs >= rhs - 1e-9
        d["instances"] = 100
        d["max_mismatch"] = worst
        assert worst <= 1e-9
        fs = s_reaction_bound_check(constant_curvature_tensor(2, 2 / 3), 1 / 3, 0.0)
        d["fs_degenerate"] = fs.degenerate
        assert fs.degenerate


def _run_all(inputs, out):
    import shutil

    shutil.rmtree(out, ignore_errors=True)
    inputs.mkdir(exist_ok=True)
    fs = inputs / "fs.json"
    fs.write_text(json.dumps({"n": 2, "N": 32, "t_end": 0.3, "cadence": 0.1, "init": {"kind": "perturbed", "amplitude": 0.01, "mode": 1, "seed": 3}}))
    from krflab.curvature import sample_kahler_tensor, tensor_to_json

    tj = inputs / "R.json"
    tj.write_text(json.dumps(tensor_to_json(sample_kahler_tensor(2, 4))))
    cmds = {
        "flow": ["flow", "--config", str(fs), "--fields"],
        "reaction": ["reaction", "--tensor", str(tj), "--t-end", "1", "--samples", "5", "--snapshots"],
        "envelope": ["envelope", "--family", "logistic", "--mu0", "0.1", "--nu", "1", "--n", "2", "--t-end", "5"],
        "lemma": ["lemma", "--n", "3", "--samples", "300"],
    }
    files = {}
    for name, args in cmds.items():
        d = out / name
        assert cli.dispatch(["--out", str(d), "--seed", "11", *args]) == 0
        for p in sorted(d.iterdir()):
            if p.name == "manifest.json":
                m = json.loads(p.read_text())
                m.pop("wall_clock_s")
                files[f"{name}/{p.name}"] = json.dumps(m, sort_keys=True).encode()
            else:
                files[f"{name}/{p.name}"] = p.read_bytes()
    return files


def test_c10_determinism(tmp_path):
    with criterion(10, "determinism") as d:
        a = _run_all(tmp_path / "in", tmp_path / "out")
        b = _run_all(tmp_path / "in", tmp_path / "out")
        d["files"] = len(a)
        assert a.keys() == b.keys()
        diff = [k for k in a if a[k] != b[k]]
        d["differing"] = len(diff)
        assert not diff, diff
