"""Acceptance criteria, one test each, at the stated tolerances.

Each test prints a PASS/FAIL line (also collected into the terminal summary).
"""
import itertools
import math
import time

import numpy as np

from conftest import ACCEPTANCE_LINES
from hwselftest.bell_op import (bell_coefficients, build_bell, folding_check, g_unitarity,
                                gamma_nu, sopo_residual)
from hwselftest.cli import build_parser, cmd_sweep, make_config, selftest_rows, _row_flags
from hwselftest.errors import InvalidNu
from hwselftest.hw_algebra import PhaseIndex, char_closed_form, char_table, rotated_bell_state
from hwselftest.lhv import lhv_bound
from hwselftest.nuspec import CubicNu, default_nu
from hwselftest.selftest import extract
from hwselftest.strategy import ideal_strategy


def report(num, ok, detail):
    line = f"criterion {num}: {'PASS' if ok else 'FAIL'} - {detail}"
    print(line)
    ACCEPTANCE_LINES.append(line)
    assert ok, line


def test_01_tsirelson_values():
    t0 = time.perf_counter()
    errs = {}
    for d in (3, 5, 7, 11):
        nu = default_nu(d)
        psi = rotated_bell_state(nu)
        errs[d] = abs(np.vdot(psi, build_bell(d, nu).B_d @ psi) - d * (d - 1))
    dt = time.perf_counter() - t0
    ok = max(errs.values()) <= 1e-9 and dt < 5
    report(1, ok, f"max |<B_d> - d(d-1)| = {max(errs.values()):.2e} over d=3,5,7,11 in {dt:.2f}s")


def test_02_full_operator_value():
    errs = {}
    for d in (5, 7):
        nu = default_nu(d)
        psi = rotated_bell_state(nu)
        errs[d] = abs(np.vdot(psi, build_bell(d, nu).B_full @ psi) - d * d)
    report(2, max(errs.values()) <= 1e-9, f"max |<B_full> - d^2| = {max(errs.values()):.2e} for d=5,7")


def test_03_sopo_residuals():
    t0 = time.perf_counter()
    worst = 0.0
    for d in (3, 5, 7, 11):
        worst = max(worst, *sopo_residual(d, default_nu(d)))
    dt = time.perf_counter() - t0
    report(3, worst <= 1e-9 and dt < 30,
           f"max SOPO residual (C and D families, d=3,5,7,11) = {worst:.2e} in {dt:.2f}s")


def test_04_g_unitarity_and_folding():
    u = max(g_unitarity(default_nu(d)) for d in (5, 7))
    f = max(folding_check(d, default_nu(d)) for d in (5, 7))
    report(4, u <= 1e-9 and f <= 1e-9, f"G_n unitarity {u:.2e}, folding (exhaustive) {f:.2e} for d=5,7")


def test_05_closed_form_characteristic_function():
    worst = 0.0
    count = 0
    for d in (5, 7):
        nu = default_nu(d)
        chi = char_table(rotated_bell_state(nu), d)
        for idx in itertools.product(range(d), repeat=4):
            cf = char_closed_form(nu, PhaseIndex.of(d, idx[0], idx[1]), PhaseIndex.of(d, idx[2], idx[3]))
            worst = max(worst, abs(cf - chi[idx]))
            count += 1
    report(5, worst <= 1e-9 and count == 5 ** 4 + 7 ** 4,
           f"closed form vs direct trace on {count} index pairs: max error {worst:.2e}")


def test_06_lhv_bounds():
    c3 = lhv_bound(3, default_nu(3), "exhaustive")
    c5 = lhv_bound(5, default_nu(5), "best_response_exhaustive")
    t0 = time.perf_counter()
    c7 = lhv_bound(7, default_nu(7), "best_response_exhaustive")
    dt = time.perf_counter() - t0
    ok = (c3.best_value < 5.640 and c3.gap >= 0.36 and c5.best_value < 20 and c5.gap > 0
          and c7.best_value < 42 and c7.gap > 0 and dt < 600)
    report(6, ok, f"LHV d=3 {c3.best_value:.10f} (gap {c3.gap:.6f}), d=5 {c5.best_value:.6f}, "
                  f"d=7 {c7.best_value:.6f} ({dt:.1f}s)")


def test_07_ideal_extraction():
    worst = 0.0
    for d in (3, 5, 7):
        nu = default_nu(d)
        r = extract(ideal_strategy(d, nu), nu)
        worst = max(worst, r.state_distance, r.max_op_distance)
    report(7, worst <= 1e-9, f"max state/operator distance at eps=0 for d=3,5,7: {worst:.2e}")


def test_08_robustness_suite():
    t0 = time.perf_counter()
    rows = in_regime = 0
    failures = []
    worst_ratio = 0.0
    for d in (3, 5):
        cfg = make_config(build_parser().parse_args(
            ["selftest", "--d", str(d), "--seeds", "0-19", "--magnitudes", "1e-4,1e-3,1e-2"]))
        for prov, res, iso, q in selftest_rows(cfg):
            rows += 1
            if not iso.in_regime:
                continue
            in_regime += 1
            worst_ratio = max(worst_ratio, iso.ratio)
            flags = _row_flags(res, iso, q)
            bad = [k for k, v in flags.items() if not v]
            if bad or not iso.state_distance <= iso.delta_bound:
                failures.append((d, prov["seed"], prov["magnitude"], bad))
    dt = time.perf_counter() - t0
    report(8, not failures and dt < 300 and in_regime > 0,
           f"{in_regime}/{rows} rows in regime, {len(failures)} flag violations, "
           f"max distance/delta {worst_ratio:.3g}, {dt:.1f}s")


def test_09_gamma():
    # gamma(nu) is the supremum of ||P_{n,j}|| over unitary families; it is attained
    # by scalar unitaries B_k = exp(-i arg K[n,j,k] / n), checked here by operator norms
    worst = 0.0
    for d in (5, 7):
        nu = default_nu(d)
        K = bell_coefficients(nu).table
        best = 0.0
        for n in range(1, d):
            for j in range(d):
                ops = [np.array([[np.exp(-1j * np.angle(K[n, j, k]) / n)]]) for k in range(d)]
                P = sum(K[n, j, k] * np.linalg.matrix_power(ops[k], n) for k in range(d))
                best = max(best, np.linalg.norm(P, 2))
        worst = max(worst, abs(best - math.sqrt(d)), abs(gamma_nu(nu) - math.sqrt(d)))
    report(9, worst <= 1e-9, f"max ||P_nj|| - sqrt(d) for d=5,7: {worst:.2e}")


def test_10_negative_control():
    rejected = False
    try:
        CubicNu(5, (0, 1, 3))
    except InvalidNu:
        rejected = True
    forced = CubicNu(5, (0, 1, 3), allow_degenerate=True)
    mags = np.abs(bell_coefficients(forced).table[1:])
    hits = bool(np.all((mags < 1e-12) | (np.abs(mags - 1) < 1e-12)))
    flat = bool(np.any(np.abs(mags - 1 / math.sqrt(5)) > 1e-6))
    report(10, rejected and hits and flat,
           f"degree-2 nu rejected={rejected}; forced |g| values {sorted(set(float(x) for x in np.round(mags.ravel(), 12)))}")


def test_11_sweep_determinism(tmp_path, capsys):
    texts = []
    for i in range(2):
        out = tmp_path / f"sweep{i}.csv"
        cfg = make_config(build_parser().parse_args(
            ["sweep", "--d", "5", "--seeds", "0-4", "--magnitudes", "1e-4,1e-3,1e-2", "--out", str(out)]))
        cmd_sweep(cfg)
        texts.append(out.read_bytes())
    report(11, texts[0] == texts[1] and len(texts[0]) > 0,
           f"two sweep runs byte-identical ({len(texts[0])} bytes)")
