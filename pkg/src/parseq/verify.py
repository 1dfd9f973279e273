"""Self-check suites behind ``parseq verify``.

Each suite returns ``(passed, detail)``; sizes are fixed and small so the
whole run takes a few seconds.
"""
from __future__ import annotations

import numpy as np

from . import chordcheck, fixedpoint as fp, lds, pscan
from .models import (
    counter_chain,
    gru_dynamics,
    langevin_dynamics,
    random_gru,
    random_langevin,
    random_orthogonal_lds,
    random_word,
    s5_dynamics,
)
from .seeding import rng

ALL_SCHEMES = (fp.NEWTON, fp.QUASI_NEWTON, fp.PICARD, fp.JACOBI, fp.scale_elk(0.3), fp.CLIP_ELK)


def random_matrix(g, kind, D):
    if kind == "identity":
        return lds.TransitionMatrix.identity(D)
    if kind == "zero":
        return lds.TransitionMatrix.zero(D)
    if kind == "scaled":
        return lds.TransitionMatrix.scaled(g.uniform(-1, 1), D)
    if kind == "diagonal":
        return lds.TransitionMatrix.diagonal(g.uniform(-1, 1, D))
    if kind == "permutation":
        return lds.TransitionMatrix.permutation(g.permutation(D))
    return lds.TransitionMatrix.dense(g.uniform(-1, 1, (D, D)) / np.sqrt(D))


def random_elements(g, kind, T, D, integer=False):
    kinds = [kind] * T if kind != "mixed" else list(g.choice(lds.KINDS, size=T))
    out = []
    for k in kinds:
        b = g.integers(-3, 4, D).astype(float) if integer else g.uniform(-1, 1, D)
        out.append(lds.AffineElement(random_matrix(g, k, D), b))
    return out


def bundled_dynamics(name, g, T, D):
    if name == "s5":
        p = random_word(g, T, D)
        return s5_dynamics(p), p.x0
    if name == "gru":
        return gru_dynamics(random_gru(g, D, T)), g.standard_normal(D)
    if name == "langevin":
        spec = random_langevin(g, D, T)
        return langevin_dynamics(spec), spec.x0
    if name == "custom-lds":
        return random_orthogonal_lds(g, D, T), g.standard_normal(D)
    return counter_chain(T, D), np.zeros(D)


def rel_err(a, b):
    return float(np.max(np.abs(a - b)) / max(1.0, np.max(np.abs(b))))


def suite_scan():
    g = rng("verify", "scan")
    worst = 0.0
    for n in (1, 2, 3, 5, 8, 13, 31, 64):
        ints = list(g.integers(-9, 10, n))
        add = pscan.ScanOperator(lambda a, b: a + b, 0)
        if pscan.inclusive_scan(ints, add) != pscan.sequential_scan(ints, add):
            return False, f"integer prefix sums differ at n={n}"
        for kind in lds.KINDS + ("mixed",):
            exact = kind == "permutation"
            elems = random_elements(g, kind, n, 3, integer=exact)
            x0 = g.integers(-3, 4, 3).astype(float) if exact else g.uniform(-1, 1, 3)
            par = lds.evaluate_lds_parallel(x0, elems).states
            seq = lds.evaluate_lds_sequential(x0, elems).states
            if exact and not np.array_equal(par, seq):
                return False, f"permutation scan not exact at n={n}"
            worst = max(worst, rel_err(par, seq))
    return worst <= 1e-10, f"max relative error {worst:.2e}"


def suite_chord():
    worst_step, worst_nil = 0.0, 0.0
    for name in ("s5", "gru", "langevin"):
        for T in (2, 4, 8):
            for D in (1, 2, 3):
                g = rng("verify", "chord", name, T, D)
                f, x0 = bundled_dynamics(name, g, T, D)
                star = f.rollout(x0)
                guess = star + g.standard_normal(star.shape)
                for scheme in ALL_SCHEMES:
                    sys = chordcheck.build_block_system(f, guess, x0, scheme)
                    F, _ = fp.residual_and_merit(x0, guess, f)
                    chord = chordcheck.parallel_chord_step(sys, guess.reshape(-1), F.reshape(-1))
                    stack = fp.linearize_stack(scheme, f, guess, x0)
                    step = lds.evaluate_stack_parallel(x0, stack).reshape(-1)
                    worst_step = max(worst_step, rel_err(chord, step))
                    at_star = chordcheck.build_block_system(f, star, x0, scheme)
                    worst_nil = max(worst_nil, chordcheck.nilpotency_defect(at_star))
    ok = worst_step <= 1e-9 and worst_nil <= 1e-8
    return ok, f"chord/LDS gap {worst_step:.2e}, max ||M^T||_F {worst_nil:.2e} (6 schemes x 3 dynamics)"


def suite_prefix():
    worst = 0.0
    for name in ("s5", "gru", "custom-lds"):
        g = rng("verify", "prefix", name)
        f, x0 = bundled_dynamics(name, g, 12, 3)
        star = f.rollout(x0)
        for scheme in ALL_SCHEMES:
            for i in (1, 3, 6):
                cfg = fp.SolverConfig(tolerance=0.0, max_iterations=i)
                rep = fp.solve(f, x0, cfg, scheme)
                worst = max(worst, rel_err(rep.trajectory.states[:i], star[:i]))
    return worst <= 1e-6, f"max prefix relative error {worst:.2e}"


def suite_convergence():
    fails = []
    for name in ("s5", "gru", "langevin", "custom-lds", "counter"):
        for T in (1, 2, 5, 16):
            g = rng("verify", "conv", name, T)
            f, x0 = bundled_dynamics(name, g, T, 5 if name == "s5" else 3)
            for scheme in ALL_SCHEMES:
                rep = fp.solve(f, x0, fp.SolverConfig(), scheme)
                if not rep.converged or rep.iterations > T:
                    fails.append(f"{name}/{scheme.name}/T={T}")
    return not fails, "all within T" if not fails else "failed: " + ", ".join(fails)


SUITES = {
    "scan-vs-sequential": suite_scan,
    "chord-correspondence": suite_chord,
    "prefix-exactness": suite_prefix,
    "finite-convergence": suite_convergence,
}


def run_suites(names=None):
    results = []
    for name, fn in SUITES.items():
        if names and name not in names:
            continue
        try:
            ok, detail = fn()
        except Exception as exc:  # a crash is a failed suite, not a crashed report
            ok, detail = False, f"{type(exc).__name__}: {exc}"
        results.append((name, ok, detail))
    return results
