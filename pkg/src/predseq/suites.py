"""Acceptance suites: each returns a SuiteResult with a verdict and the numbers behind it."""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .bandit import ArmLossOracle, Scrible, ScribleMAB, mab_small_loss_bound, mean_and_se
from .fpl import (
    PerturbedLeader, SignPerturbation, bruteforce_minmax, gap_event, l1_closed_form,
    minmax_objective, simplex_closed_form, calibrate_perturbation,
)
from .geometry import l2_geometry, simplex_geometry
from .harness.channels import DelayedMean, delayed_hint
from .harness.experiment import run_experiment

MIXED_PREDICTORS = ("last", "mean", "ewma:0.9", "phase:4", "ar:0.6,0.3")


@dataclass
class SuiteResult:
    name: str
    passed: bool
    detail: dict = field(default_factory=dict)
    seconds: float = 0.0

    def line(self) -> str:
        verdict = "PASS" if self.passed else "FAIL"
        bits = ", ".join(f"{k}={_short(v)}" for k, v in self.detail.items())
        return f"[{verdict}] {self.name} ({self.seconds:.1f}s) {bits}"


def _short(v):
    if isinstance(v, float):
        return f"{v:.4g}"
    return str(v)


def _mixed_runs(algo, geometry, dim=10, horizon=2000, runs=100, sigma="const:0.2", eta="auto",
                seed=0, **extra):
    """runs replicas split evenly over MIXED_PREDICTORS, one batched experiment per predictor."""
    per = runs // len(MIXED_PREDICTORS)
    results = []
    for k, pred in enumerate(MIXED_PREDICTORS):
        cfg = dict(algo=algo, geometry=geometry, dim=dim, horizon=horizon, predictor=pred,
                   sequence=f"noisy:{pred}", sigma=sigma, eta=eta, seed=seed + k,
                   replicas=per, keep_trace=False, **extra)
        results.append(run_experiment(cfg))
    return results


def _per_run(results, key):
    lhs = np.concatenate([r.checks[key].lhs for r in results])
    rhs = np.concatenate([r.checks[key].rhs for r in results])
    return lhs, rhs


def suite_omd_bound(seed=0) -> SuiteResult:
    start = time.perf_counter()
    results = _mixed_runs("omd", "simplex", seed=seed)
    elapsed = time.perf_counter() - start
    lhs, rhs = _per_run(results, "omd_bound")
    ok = bool(np.all(lhs <= rhs))
    return SuiteResult("omd_bound", ok and elapsed < 10.0,
                       {"runs": len(lhs), "violations": int(np.sum(lhs > rhs)),
                        "min_margin": float(np.min(rhs - lhs)), "runtime_s": elapsed})


def suite_oftrl_bound(seed=0) -> SuiteResult:
    results = _mixed_runs("oftrl", "l2", seed=seed)
    lhs, rhs = _per_run(results, "oftrl_bound")
    flagged = np.concatenate([r.ledger.flagged() for r in results])
    clean = ~flagged
    violations = int(np.sum((lhs > rhs) & clean))
    share = float(flagged.mean())
    return SuiteResult("oftrl_bound", violations == 0 and share < 0.05,
                       {"runs": len(lhs), "flagged_runs": int(flagged.sum()), "flagged_share": share,
                        "violations": violations,
                        "min_margin": float(np.min((rhs - lhs)[clean])) if clean.any() else 0.0})


def suite_ew_local_bound(seed=0) -> SuiteResult:
    results = _mixed_runs("ew-local", "simplex", seed=seed)
    lhs, rhs = _per_run(results, "ew_local_bound")
    return SuiteResult("ew_local_bound", bool(np.all(lhs <= rhs)),
                       {"runs": len(lhs), "violations": int(np.sum(lhs > rhs)),
                        "min_margin": float(np.min(rhs - lhs))})


def suite_oracle_hints(seed=0, horizons=(1000, 100_000)) -> SuiteResult:
    detail, ok = {}, True
    for geometry in ("simplex", "l2"):
        for T in horizons:
            r = run_experiment(dict(algo="omd", geometry=geometry, dim=5, horizon=T, predictor="oracle",
                                    sequence="noisy:last", sigma="const:0.3", eta="0.5", seed=seed,
                                    keep_trace=False))
            cap = r.geom.rmax_sq / 0.5 + 1e-9
            regret = float(r.regret[0])
            ok &= regret <= cap
            detail[f"{geometry}_T{T}_regret"] = regret
        detail[f"{geometry}_cap"] = cap
    return SuiteResult("oracle_hints", bool(ok), detail)


def estimator_outcomes(learner: Scrible, x):
    """Every (axis, sign) estimate at the learner's current centre, in barrier coordinates."""
    out = []
    for axis in range(learner.n):
        for sign in (-1, 1):
            draws = (axis, sign)
            f = learner.act(draws)
            learner._pending = None
            loss = float(np.dot(f, x))
            out.append(learner.estimate_for(draws, loss)[0])
    return np.array(out)


def suite_estimator(seed=0, dims=(2, 3, 5)) -> SuiteResult:
    rng = np.random.default_rng(seed)
    worst_mean, worst_exact = 0.0, 0.0
    for d in dims:
        for geom in (l2_geometry(d, "logbarrier"), simplex_geometry(d, "logbarrier")):
            for _ in range(5):
                x = geom.outcome_set.project(rng.uniform(-1, 1, d))
                M = geom.outcome_set.project(rng.uniform(-1, 1, d))
                learner = Scrible(geom, 0.3, rng=rng, first_hint=rng.uniform(-1, 1, d))
                learner.hint = M[None, :]
                target = learner._native_dual(x[None, :])[0]
                est = estimator_outcomes(learner, x)
                worst_mean = max(worst_mean, float(np.abs(est.mean(axis=0) - target).max()))
                learner.hint = x[None, :]
                est = estimator_outcomes(learner, x)
                worst_exact = max(worst_exact, float(np.abs(est - target).max()))
    ok = worst_mean <= 1e-12 and worst_exact <= 1e-12
    return SuiteResult("estimator", ok, {"max_mean_error": worst_mean, "max_exact_hint_error": worst_exact})


def suite_bandit_bound(seed=0, replicas=500, horizon=1000, dim=5) -> SuiteResult:
    start = time.perf_counter()
    r = run_experiment(dict(algo="scrible-hint", geometry="l2", dim=dim, horizon=horizon, predictor="last",
                            sequence="noisy:last", sigma="const:0.2", seed=seed, replicas=replicas,
                            keep_trace=False))
    elapsed = time.perf_counter() - start
    check = r.checks["bandit_bound"]
    s = check.summary()
    return SuiteResult("bandit_bound", check.passed() and elapsed < 120.0,
                       {"mean_lhs": s["lhs_mean"], "se": s["lhs_se"], "mean_rhs": s["rhs_mean"],
                        "runtime_s": elapsed})


def suite_small_loss(seed=0, arms=5, horizon=5000, replicas=300) -> SuiteResult:
    rng = np.random.default_rng(seed)
    s = 1.0
    eta = 1.0 / (8 * s * arms**2)
    learner = ScribleMAB(arms, s, eta, batch=(replicas,), rng=rng)
    total = np.zeros(replicas)
    for _ in range(horizon):
        losses = rng.uniform(0.0, s, size=(replicas, arms))
        losses[:, 0] = 0.0
        arm, loss = learner.play_round(ArmLossOracle(losses))
        total += loss
    mean, se = mean_and_se(total)
    bound = mab_small_loss_bound(arms, s, eta, horizon, 0.0)
    return SuiteResult("small_loss", mean <= bound + 3 * se,
                       {"mean_loss": mean, "se": se, "bound": bound})


def suite_learned_hints(seed=0, replicas=200, horizon=1000) -> SuiteResult:
    r = run_experiment(dict(algo="omd-learnM", geometry="l2", dim=5, horizon=horizon,
                            models="last,mean,zero,flip", sequence="noisy:mean", sigma="const:0.3",
                            seed=seed, replicas=replicas, keep_trace=False))
    check = r.checks["learned_hints"]
    errors = np.asarray(r.info["model_error"])
    weights = np.asarray(r.info["weights"])
    ordered = np.sort(errors, axis=1)
    gap = ordered[:, 1] - errors[:, 1]
    clear = (errors.argmin(axis=1) == 1) & (gap > 20)
    weight_ok = bool(np.all(weights[clear, 1] > 0.9))
    s = check.summary()
    return SuiteResult("learned_hints", check.passed() and weight_ok and bool(clear.any()),
                       {"mean_regret": s["lhs_mean"], "mean_bound": s["rhs_mean"],
                        "clear_runs": int(clear.sum()),
                        "min_weight": float(weights[clear, 1].min()) if clear.any() else float("nan")})


def _dyadic(rng, size, scale=4, spread=8):
    return np.array([Fraction(int(v), scale) for v in rng.integers(-spread, spread + 1, size)], dtype=object)


def suite_fpl_oracle(seed=0, instances=1000, dim=3) -> SuiteResult:
    rng = np.random.default_rng(seed)
    mismatches, events, worst_gap = 0, 0, Fraction(0)
    for _ in range(instances):
        R = _dyadic(rng, dim, 4, 24)
        M = _dyadic(rng, dim, 4, 4)
        sigma = Fraction(int(rng.integers(1, 5)), 4)
        f = l1_closed_form(R, M, sigma)
        best_f, best_v = bruteforce_minmax(R, M, sigma)
        value = minmax_objective(f, R, M, sigma)
        if bool(gap_event(R, sigma)):
            events += 1
            mismatches += value != best_v
        else:
            worst_gap = max(worst_gap, value - best_v)
    ok = mismatches == 0 and worst_gap <= 4
    return SuiteResult("fpl_oracle", ok, {"instances": instances, "gap_events": events,
                                          "mismatches": mismatches, "max_gap": str(worst_gap)})


def suite_shift_invariance(seed=0, dim=4, horizon=200, shifts=(-10.0, -1e6)) -> SuiteResult:
    values = np.array([-1.0, -0.5, 0.0, 0.5, 1.0])
    rng = np.random.default_rng(seed)
    xs = rng.choice(values, size=(horizon, dim))
    hints = rng.choice(values, size=(horizon, dim))
    sigmas = np.full(horizon, 0.25)
    differing = 0
    for B in shifts:
        a = PerturbedLeader("simplex", dim, sigmas, constant=4, rng=np.random.default_rng(seed + 1))
        b = PerturbedLeader("simplex", dim, sigmas, constant=4, rng=np.random.default_rng(seed + 1))
        b.total = b.total + B
        for t in range(horizon):
            fa = a.decide(hints[t])
            fb = b.decide(hints[t])
            differing += int(not np.array_equal(fa, fb))
            a.observe(xs[t])
            b.observe(xs[t])
        R = _dyadic(rng, dim, 4, 24)
        M = _dyadic(rng, dim, 4, 4)
        shifted = R + Fraction(int(B))
        differing += int(not np.array_equal(simplex_closed_form(R, M, Fraction(1, 4)),
                                            simplex_closed_form(shifted, M, Fraction(1, 4))))
    return SuiteResult("shift_invariance", differing == 0, {"differing_decisions": differing})


def suite_doubling(seed=0) -> SuiteResult:
    results = _mixed_runs("omd", "simplex", eta="doubling", seed=seed)
    lhs, rhs = _per_run(results, "doubling")
    interior = np.concatenate([r.checks["doubling_interior"].lhs for r in results])
    phases = np.concatenate([r.info["phases"] for r in results])
    ok = bool(np.all(lhs <= rhs)) and not interior.any()
    return SuiteResult("doubling", ok, {"runs": len(lhs), "violations": int(np.sum(lhs > rhs)),
                                        "interior_breaks": int(interior.sum()),
                                        "min_margin": float(np.min(rhs - lhs)),
                                        "max_phases": int(phases.max())})


def _iid_regret(spread, horizon, replicas, seed):
    r = run_experiment(dict(algo="omd", geometry="l2", dim=3, horizon=horizon, predictor="mean",
                            sequence=f"iid:0.3:{spread}", sigma=f"const:{spread}", seed=seed,
                            replicas=replicas, keep_trace=False))
    return r.regret


def suite_iid(seed=0, horizon=20000, replicas=50, spreads=(0.1, 0.2, 0.4)) -> SuiteResult:
    means = [float(np.mean(_iid_regret(s, horizon, replicas, seed + k))) for k, s in enumerate(spreads)]
    ratios = [b / a for a, b in zip(means, means[1:])]
    grid = [horizon // 16, horizon // 8, horizon // 4, horizon // 2, horizon]
    flat = [max(float(np.mean(_iid_regret(0.0, T, 4, seed))), 1e-12) for T in grid]
    slope = float(np.polyfit(np.log(grid), np.log(flat), 1)[0])
    ok = all(1.6 <= q <= 2.5 for q in ratios) and slope < 0.2
    detail = {f"regret_sigma{s}": m for s, m in zip(spreads, means)}
    detail.update({f"ratio{k}": q for k, q in enumerate(ratios)})
    detail["zero_noise_slope"] = slope
    return SuiteResult("iid", ok, detail)


def suite_delayed(seed=0, lags=(1, 3, 10), horizon=400, replicas=4) -> SuiteResult:
    margin, mismatch = np.inf, 0.0
    for k in lags:
        r = run_experiment(dict(algo="scrible-hint", geometry="l2", dim=4, horizon=horizon,
                                channel=f"delayed:{k}", sequence="random", seed=seed + k,
                                replicas=replicas, keep_trace=False))
        gap, bound = r.ledger.column("delay_gap"), r.ledger.column("delay_bound")
        live = ~np.isnan(bound)
        margin = min(margin, float(np.min(bound[live] - gap[live])))
        # standalone predictor against the direct formula
        rng = np.random.default_rng(seed)
        xs = rng.uniform(-1, 1, size=(60, 3))
        pred = DelayedMean(k).reset(3)
        for t in range(1, 61):
            mismatch = max(mismatch, float(np.abs(pred.hint() - delayed_hint(xs, t, k)).max()))
            pred.absorb(xs[t - 1])
    ok = margin >= -1e-12 and mismatch <= 1e-12
    return SuiteResult("delayed", ok, {"min_margin": margin, "predictor_mismatch": mismatch})


def suite_calibration(seed=0, dims=(2, 3, 4)) -> SuiteResult:
    detail, ok = {}, True
    for d in dims:
        rep = calibrate_perturbation(SignPerturbation(), d, rng=np.random.default_rng(seed))
        detail[f"C_d{d}"] = rep.constant
        ok &= rep.constant <= 6
    return SuiteResult("calibration", bool(ok), detail)


SUITES = {
    "omd_bound": suite_omd_bound,
    "oftrl_bound": suite_oftrl_bound,
    "ew_local_bound": suite_ew_local_bound,
    "oracle": suite_oracle_hints,
    "estimator": suite_estimator,
    "bandit_bound": suite_bandit_bound,
    "small_loss": suite_small_loss,
    "learned_hints": suite_learned_hints,
    "fpl": suite_fpl_oracle,
    "shift": suite_shift_invariance,
    "doubling": suite_doubling,
    "iid": suite_iid,
    "delayed": suite_delayed,
    "calibration": suite_calibration,
}


def run_suite(name: str, seed: int = 0) -> SuiteResult:
    start = time.perf_counter()
    result = SUITES[name](seed=seed)
    result.seconds = time.perf_counter() - start
    return result


def run_all(names=None, seed: int = 0):
    for name in names or SUITES:
        yield run_suite(name, seed)
