"""Acceptance criteria 1-11.

Each test records one PASS/FAIL line (shown in the terminal summary) and
asserts the criterion at its stated tolerance. The scenario criteria share
cached runs at full size (10^5 Monte Carlo trials, 10^4 fitting samples).
"""

import itertools
import math
from pathlib import Path

import mpmath as mp
import numpy as np
import pytest

from frisim import beamphase, harness, qlearn, secrecy, specfun
from frisim.channel import LinkBudget, RngStream, draw_channels, psd_factor
from frisim.geometry import CorrelationKernel, SurfaceGeometry, build_grid, correlation_matrix
from frisim.secrecy import GammaParams, SecrecyParams

CONFIGS = Path(__file__).resolve().parent.parent / "configs"
RESULTS: dict[int, tuple[bool, str]] = {}
UNIT = LinkBudget(1.0, 1.0, 1.0, 1.0)
Z = 2.0

mp.mp.dps = 40


def record(n: int, ok: bool, detail: str) -> None:
    RESULTS[n] = (bool(ok), detail)
    print(f"criterion {n}: {'PASS' if ok else 'FAIL'}  {detail}")
    assert ok, f"criterion {n}: {detail}"


def measurable(*series, trials):
    """Sweep points where some estimate reaches ``10 / trials``."""
    return np.maximum.reduce([np.asarray(s) for s in series]) >= 10.0 / trials


# ---------------------------------------------------------------- scenario runs


@pytest.fixture(scope="module")
def fig2b():
    cfg = harness.load_config(CONFIGS / "fig2b.cfg")
    return {l: harness.run_scenario(harness.replace(cfg, n_antennas=l)) for l in (2, 6)}


@pytest.fixture(scope="module")
def fig2c():
    return harness.run_scenario(harness.load_config(CONFIGS / "fig2c.cfg"))


@pytest.fixture(scope="module")
def fig3():
    base = harness.parse_text((CONFIGS / "fig3.cfg").read_text())
    return {d: harness.run_scenario(harness.with_override(base, "geometry.d_h", d)) for d in ("lambda/2", "lambda/3", "lambda/5")}


# ---------------------------------------------------------------- criteria


@pytest.mark.slow
class TestAcceptance:
    def test_c01_special_functions(self):
        rng = np.random.default_rng(101)
        n = 1000
        worst = {}
        xs = np.concatenate([rng.uniform(0, 12, n // 2), rng.uniform(12, 150, n // 2)])
        worst["J0 abs"] = max(abs(specfun.bessel_j0(x) - float(mp.besselj(0, x))) for x in xs)
        xs = rng.uniform(0.01, 300, n)
        worst["psi abs"] = max(abs(specfun.digamma(x) - float(mp.digamma(x))) for x in xs)
        worst["lnGamma abs"] = max(abs(specfun.ln_gamma(x) - float(mp.loggamma(x))) / max(1, abs(float(mp.loggamma(x)))) for x in xs)
        ks = rng.uniform(0.05, 80, n)
        xs = ks * rng.uniform(0, 3, n)
        rel = 0.0
        for k, x in zip(ks, xs):
            ref = float(mp.gammainc(k, 0, x, regularized=True))
            if ref > 1e-280:
                rel = max(rel, abs(specfun.lower_incomplete_gamma_regularized(k, x) - ref) / ref)
        worst["P(k,x) rel"] = rel
        ks = rng.uniform(0.5, 60, n)
        zs = -np.exp(rng.uniform(math.log(1e-4), math.log(1e6), n))
        rel = 0.0
        for k, z in zip(ks, zs):
            ref = float(mp.hyp2f1(k + 1, k, k + 1, z))
            if ref > 1e-280:  # skip references below double range
                rel = max(rel, abs(specfun.gauss_2f1(k + 1, k, k + 1, z) / ref - 1))
        worst["2F1 rel"] = rel
        tol = {"J0 abs": 1e-10, "psi abs": 1e-10, "lnGamma abs": 1e-10, "P(k,x) rel": 1e-8, "2F1 rel": 1e-8}
        ok = all(worst[k] <= tol[k] for k in tol)
        record(1, ok, ", ".join(f"{k} {v:.1e}" for k, v in worst.items()) + f" over {n} points each")

    def test_c02_exponential_identity(self):
        worst = 0.0
        for rho in (0.01, 1.0, 100.0):
            for rs in (0.0, 1.0, 3.0):
                x = 2.0**rs * rho
                closed = secrecy.sop_closed_form(1.0, SecrecyParams(rs, rho))
                brute = secrecy.sop_numeric(GammaParams(1.0, 1.0), GammaParams(1.0, rho), rs)
                worst = max(worst, abs(closed - x / (1 + x)), abs(brute - x / (1 + x)))
        record(2, worst <= 1e-9, f"max abs error {worst:.1e} (closed form and quadrature vs 2^Rs rho/(1+2^Rs rho))")

    def test_c03_closed_vs_quadrature(self):
        worst = 0.0
        for kb, rho, rs in itertools.product((0.5, 1.0, 2.0, 5.0), (0.01, 1.0, 100.0), (0.0, 1.0, 3.0)):
            closed = secrecy.sop_closed_form(kb, SecrecyParams(rs, rho))
            num = secrecy.sop_numeric(GammaParams(kb, 1.0), GammaParams(1.0, rho), rs)
            worst = max(worst, abs(closed - num) / num)
        record(3, worst <= 1e-6, f"max rel gap {worst:.1e} over 36 grid points")

    def test_c04_fit_recovery(self):
        rng = np.random.default_rng(104)
        errs = []
        for m in (0.5, 1.0, 2.0, 5.0, 10.0):
            h = np.sqrt(rng.gamma(m, 2.0 / m, 100_000))
            fit = secrecy.fit_mle(h)
            errs.append(max(abs(fit.m / m - 1), abs(fit.omega / 2.0 - 1)))
        mom = []
        for k in (0.5, 1.0, 4.0, 10.0):
            g = secrecy.fit_mom(rng.gamma(k, 0.3, 100_000))
            mom.append(abs(g.k / k - 1))
        ok = max(errs) <= 0.05 and max(mom) <= 0.08
        record(4, ok, f"MLE worst rel error {max(errs):.3f} (<=0.05), MoM worst {max(mom):.3f} (<=0.08)")

    def test_c05_alternating_optimization(self):
        rng = np.random.default_rng(105)
        bad = 0
        for _ in range(1000):
            st = beamphase.optimize(draw_channels(np.eye(16), UNIT, 4, rng))
            tr = np.asarray(st.snr_trace)
            bad += not (np.diff(tr) >= -1e-12 * tr[:-1]).all()
        worst = 0.0
        for m in (1, 4, 16, 64):
            for _ in range(25):
                ch = draw_channels(np.eye(m), UNIT, 1, rng)
                st = beamphase.optimize(ch)
                coh = (np.abs(ch.h2b) * np.abs(ch.g[:, 0])).sum() ** 2
                worst = max(worst, abs(st.snr_trace[-1] / coh - 1))
        record(5, bad == 0 and worst <= 1e-9, f"{bad}/1000 non-monotone traces; L=1 identity rel error {worst:.1e}")

    def test_c06_qlearning_sanity(self):
        geo = SurfaceGeometry(0.5, 0.375, 6, 4, 0.04, 0.04, 0.125, 3, 1)  # M=3, N/M=8
        grid = build_grid(geo)
        factor = psd_factor(correlation_matrix(grid.points, CorrelationKernel("paper_literal", 0.125)))
        w0 = np.ones(2) / np.sqrt(2)
        ratios, spo = [], []
        for seed in range(50):
            gen = np.random.default_rng(seed)
            ch = draw_channels(factor, UNIT, 2, gen)
            amp = np.abs(ch.h2b) * np.abs(ch.g @ w0)
            reward = qlearn.SumPowerReward(amp[grid.members][..., None])
            opt = max(reward(p) for p in itertools.product(range(8), repeat=3))
            q, _ = qlearn.train(grid, reward, qlearn.LearnParams(), RngStream(seed, 1))
            ratios.append(reward(grid.local[list(qlearn.extract_greedy(q, grid).positions)]) / opt)
            # random-phase reward, reported only
            psi = np.exp(2j * np.pi * gen.random(geo.m))
            v = ch.h2b.conj()[:, None] * ch.g
            rr = qlearn.SumPowerReward(np.stack([psi[m] * v[grid.members[m]] for m in range(geo.m)]))
            opt_r = max(rr(p) for p in itertools.product(range(8), repeat=3))
            q, _ = qlearn.train(grid, rr, qlearn.LearnParams(), RngStream(seed, 2))
            spo.append(rr(grid.local[list(qlearn.extract_greedy(q, grid).positions)]) / opt_r)
        frac = float(np.mean(np.array(ratios) >= 0.9))
        frac_spo = float(np.mean(np.array(spo) >= 0.9))
        record(6, frac >= 0.9, f"{frac:.0%} of 50 seeds reach 90% of optimum (phase-aligned reward); "
                               f"random-phase reward {frac_spo:.0%} (informational)")

    def test_c07_fig2b(self, fig2b):
        trials = fig2b[2].trials
        lines, ok = [], True
        for l, res in fig2b.items():
            grid = np.array(res.grid())
            f, fs = res.series("fris_spo", "sop_mc"), res.series("fris_spo", "sop_mc_stderr")
            c, cs = res.series("ris_conventional_random_ps", "sop_mc"), res.series("ris_conventional_random_ps", "sop_mc_stderr")
            sel = (grid >= 10) & measurable(f, c, trials=trials)
            margin = (c - f) >= Z * np.hypot(fs, cs)
            ok &= bool(margin[sel].all())
            lines.append(f"L={l}: margin >= 2se at {int(margin[sel].sum())}/{int(sel.sum())} measurable points >= 10 dB")
        dec = []
        for arch in ("fris_spo", "ris_conventional_random_ps"):
            a, b = fig2b[2].series(arch, "sop_mc"), fig2b[6].series(arch, "sop_mc")
            sel = measurable(a, b, trials=trials)
            dec.append(bool((b[sel] <= a[sel]).all()) and bool((b[sel] < a[sel]).any()))
        ok &= all(dec)
        lines.append(f"L 2->6 lowers SOP: fris_spo {dec[0]}, conventional {dec[1]}")
        record(7, ok, "; ".join(lines))

    def test_c08_fig2c(self, fig2c):
        trials = fig2c.trials
        grid = np.array(fig2c.grid())
        f, fs = fig2c.series("fris_spo_bf_ps", "sop_mc"), fig2c.series("fris_spo_bf_ps", "sop_mc_stderr")
        k, ks = fig2c.series("ris_compact_bf_ps", "sop_mc"), fig2c.series("ris_compact_bf_ps", "sop_mc_stderr")
        c, cs = fig2c.series("ris_conventional_bf_ps", "sop_mc"), fig2c.series("ris_conventional_bf_ps", "sop_mc_stderr")
        mid = (grid >= 0) & measurable(f, k, trials=trials)
        beats = (k - f) >= Z * np.hypot(fs, ks)
        sel = measurable(f, c, trials=trials)
        tie = np.abs(f - c) <= Z * np.hypot(fs, cs)
        ok_a = bool(beats[mid].all())
        ok_b = tie[sel].sum() >= 0.5 * sel.sum()
        gap = np.max(np.abs(f - c)[sel])
        record(8, ok_a and ok_b,
               f"FRIS vs compact: 2se margin at {int(beats[mid].sum())}/{int(mid.sum())} points >= 0 dB; "
               f"FRIS vs conventional within 2se at {int(tie[sel].sum())}/{int(sel.sum())} points (max gap {gap:.4f})")

    def test_c09_fig3(self, fig3):
        trials = fig3["lambda/2"].trials
        s = {d: fig3[d].series("fris_spo_bf_ps", "sop_mc") for d in fig3}
        e = {d: fig3[d].series("fris_spo_bf_ps", "sop_mc_stderr") for d in fig3}
        sel = measurable(*s.values(), trials=trials)
        ordered = ((s["lambda/5"] - s["lambda/3"]) >= Z * np.hypot(e["lambda/5"], e["lambda/3"])) & (
            (s["lambda/3"] - s["lambda/2"]) >= Z * np.hypot(e["lambda/3"], e["lambda/2"])
        )
        frac = ordered[sel].mean()
        record(9, frac >= 0.8, f"lambda/5 >= lambda/3 >= lambda/2 with 2se margins at {int(ordered[sel].sum())}/{int(sel.sum())} "
                               f"measurable points ({frac:.0%}, need 80%)")

    def test_c10_analytic_vs_mc(self, fig2b, fig2c, fig3):
        runs = [(f"fig2b L={l}", r) for l, r in fig2b.items()] + [("fig2c", fig2c)] + [(f"fig3 {d}", r) for d, r in fig3.items()]
        total = bad = 0
        worst = (0.0, "")
        for name, res in runs:
            for row in res.rows:
                if row.sop_mc < 10.0 / res.trials:
                    continue
                total += 1
                d = abs(math.log10(max(row.sop_numeric, 1e-300)) - math.log10(row.sop_mc))
                if d > 0.3:
                    bad += 1
                if d > worst[0]:
                    worst = (d, f"{name} {row.architecture} @ {row.gamma_bar_b_db:g} dB")
        record(10, bad == 0, f"{bad}/{total} points exceed 0.3 decades; worst {worst[0]:.2f} ({worst[1]})")

    def test_c11_determinism_and_independence(self, tiny_config_path):
        cfg = harness.load_config(tiny_config_path)
        same = harness.run_scenario(cfg).to_csv() == harness.run_scenario(cfg).to_csv()
        arch = harness.Architecture.FRIS_SPO
        pooled_a, pooled_b, est_a, est_b = [], [], [], []
        threshold = 2.0**cfg.rate_rs
        gb, ge = harness.db_to_linear(10.0), harness.db_to_linear(cfg.gamma_bar_e_db)
        for seed in range(30):
            a = harness.simulate_architecture(cfg, arch, 2000, RngStream(seed, 0))
            b = harness.simulate_architecture(cfg, arch, 2000, RngStream(seed, 1))
            oa = (1 + gb * a.mag_b**2) < threshold * (1 + ge * a.mag_e**2)
            ob = (1 + gb * b.mag_b**2) < threshold * (1 + ge * b.mag_e**2)
            pooled_a.append(oa)
            pooled_b.append(ob)
            est_a.append(oa.mean())
            est_b.append(ob.mean())
        corr = float(np.corrcoef(np.concatenate(pooled_a), np.concatenate(pooled_b))[0, 1])
        corr30 = float(np.corrcoef(est_a, est_b)[0, 1])
        record(11, same and abs(corr) < 0.05,
               f"byte-identical CSV on rerun: {same}; paired outage correlation across stream ids {corr:+.4f} "
               f"(60000 pairs over 30 seeds); 30-estimate correlation {corr30:+.3f} (informational)")


@pytest.fixture
def tiny_config_path(tiny_config):
    return tiny_config
