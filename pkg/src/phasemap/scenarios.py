"""Verification scenarios driven by the command-line runner.

Each scenario takes a validated config dict and returns a list of checks
``{"name", "value", "tolerance", "pass"}`` plus optional CSV trajectories.
Numerical failures become failing checks instead of exceptions.
"""

from __future__ import annotations

import dataclasses

import numpy as np

from . import calabi, conformal_embed as ce, flat_mapping as fm, riccati as rc
from .errors import ConfigError, PhasemapError
from .phase_space import Reparameterization, symplectic_matrix
from .polynomials import MAX_DEGREE, MatrixPolynomial
from .rng import SplitMix64
from .transport import Trajectory, integrate_transport, transport_residual


class Checks:
    def __init__(self, tolerances):
        self.tolerances = tolerances
        self.items = []

    def tol(self, key):
        return self.tolerances[key]

    def add(self, name, value, tol_key, mode="le"):
        tol = self.tol(tol_key)
        value = float(value)
        ok = value <= tol if mode == "le" else value >= tol
        self.items.append({"name": name, "value": value, "tolerance": tol,
                           "comparison": "<=" if mode == "le" else ">=", "pass": bool(ok)})

    def add_range(self, name, value, lo_key, hi_key):
        lo, hi = self.tol(lo_key), self.tol(hi_key)
        value = float(value)
        self.items.append({"name": name, "value": value, "tolerance": [lo, hi],
                           "comparison": "in", "pass": bool(lo <= value <= hi)})

    def add_flag(self, name, ok, detail):
        self.items.append({"name": name, "value": detail, "tolerance": None,
                           "comparison": "==", "pass": bool(ok)})

    def guard(self, name, fn):
        """Run ``fn``; a library error becomes a failing check named ``name``."""
        try:
            fn()
        except ConfigError:
            raise
        except (PhasemapError, FloatingPointError, np.linalg.LinAlgError) as exc:
            self.items.append({"name": name, "value": f"error: {exc}", "tolerance": None,
                               "comparison": "error", "pass": False})


def _matrix(value, shape, key):
    arr = np.asarray(value, dtype=float)
    if arr.shape != tuple(shape):
        raise ConfigError(f"parameters.{key}: expected shape {tuple(shape)}, got {arr.shape}")
    return arr


def _poly(value, shape, key):
    arr = np.asarray(value, dtype=float)
    if arr.ndim == 2:
        arr = arr[None]
    if arr.ndim != 3 or arr.shape[1:] != tuple(shape):
        raise ConfigError(f"parameters.{key}: expected coefficient list of {tuple(shape)} matrices")
    if arr.shape[0] - 1 > MAX_DEGREE:
        raise ConfigError(f"parameters.{key}: degree {arr.shape[0] - 1} exceeds {MAX_DEGREE}")
    return MatrixPolynomial(arr)


def _signature(value, size, key):
    arr = np.asarray(value, dtype=float)
    if arr.shape != (size,) or not np.all(np.abs(arr) == 1.0):
        raise ConfigError(f"parameters.{key}: expected {size} entries of +1/-1")
    return arr


def _rep(params):
    amp = params.get("wobble_amplitude", 0.5)
    omega = params.get("wobble_omega", 30.0)
    return Reparameterization.wobble(float(amp), float(omega)) if amp else Reparameterization.identity()


# flat-map-verify -----------------------------------------------------------

FLAT_DEFAULTS = {"closed_form": 1e-10, "integration": 1e-8, "ratio_low": 8.0, "ratio_high": 32.0,
                 "transport_residual": 1e-8, "hamiltonian_equality": 1e-12, "perturbation_flag": 1e-6,
                 "oracle": 1e-6}
FLAT_PARAMS = {"draws", "source_signature", "target_signature", "t3", "wobble_amplitude",
               "wobble_omega", "vielbein_scale"}


def flat_map_verify(cfg, checks: Checks, csv_out: dict):
    n, steps, p = cfg["n"], cfg["steps"], cfg["parameters"]
    m = n + 2
    rng = SplitMix64(cfg["seed"])
    y_sig = _signature(p.get("source_signature", [1.0] * (m - 1) + [-1.0]), m, "source_signature")
    z_sig = _signature(p.get("target_signature", [1.0] * (m - 3) + [-1.0, 1.0, -1.0]), m,
                       "target_signature")
    y4, z4 = np.diag(y_sig), np.diag(z_sig)
    rep = _rep(p)
    draws = int(p.get("draws", 20))
    t3s = [_matrix(p["t3"], (m, m), "t3")] if "t3" in p else [rng.symmetric((m, m)) for _ in range(draws)]
    grid = np.linspace(0.0, 1.0, 101)

    def closed_forms():
        worst = max(fm.closed_form_residual(fm.ClosedFormT(t3, y4, z4, rep), grid) for t3 in t3s)
        checks.add("closed_form_residual", worst, "closed_form")
    checks.guard("closed_form_residual", closed_forms)

    def integration():
        cf = fm.ClosedFormT(t3s[0], y4, z4, rep)
        j = symplectic_matrix(m)
        zmat, ybar = fm.flat_coefficients(y4, z4, 1.0)
        t0 = fm.closed_form_T(cf, 0.0).assemble()
        ref = fm.closed_form_T(cf, 1.0).assemble()
        errs = []
        traj = None
        for k in (steps // 2, steps, 2 * steps):
            tr = integrate_transport(t0, j, zmat, j, ybar, 0.0, 1.0, k, ybar_weight=rep.dt_dtau)
            errs.append(float(np.max(np.abs(tr.final - ref))))
            if k == steps:
                traj = tr
        checks.add("integration_error_at_1", errs[1], "integration")
        checks.add_range("refinement_ratio", errs[0] / max(errs[1], 1e-300), "ratio_low", "ratio_high")
        csv_out["flat_map_T"] = traj.to_csv()
        # the analytic closed form on a grid twice as fine, through the same residual operator
        fine = np.linspace(0.0, 1.0, 2 * steps + 1)
        samples = np.array([fm.closed_form_T(cf, t).assemble() for t in fine])
        res = transport_residual(Trajectory(fine, samples), j, zmat, j,
                                 lambda tau: ybar * rep.dt_dtau(tau))
        checks.add("closed_form_transport_residual", res, "transport_residual")
    checks.guard("integration", integration)

    def hamiltonians():
        v = ce.vielbein_catalog("identity", n, y_sig[:n])
        u = rng.symmetric(n)
        pc = rng.symmetric(n)
        p_curved, p_flat, p_big = ce.consistent_momenta(v, u, 0.0, pc, extra=rng.symmetric())
        vals = ce.three_hamiltonians(v.metric(u), 0.0, y_sig[:n], p_curved, p_flat, p_big)
        rep_eq = ce.three_hamiltonians_equal(vals)
        checks.add("hamiltonian_pairwise_difference", rep_eq.max_difference, "hamiltonian_equality")
        bumped = dict(vals, H=vals["H"] + checks.tol("perturbation_flag"))
        flagged = not ce.three_hamiltonians_equal(bumped).passed
        checks.add_flag("hamiltonian_perturbation_flagged", flagged, "flagged" if flagged else "missed")
    checks.guard("hamiltonians", hamiltonians)

    def oracle():
        scale = float(p.get("vielbein_scale", 0.3))
        cf = fm.ClosedFormT(t3s[0], y4, z4, Reparameterization.identity())
        e = np.eye(n) + scale * rng.symmetric((n, n))
        einv = np.linalg.inv(e)
        g = e.T @ np.diag(y_sig[:n]) @ e
        sc = fm.OracleScenario(cf, lambda t: 0.3 * t + 0.1 * np.sin(t), lambda t: einv, g,
                               rng.symmetric(m), rng.symmetric(m))
        gaps, passing = fm.resolve_momentum_variant(sc, np.linspace(0.1, 1.0, 10), checks.tol("oracle"))
        for variant, gap in sorted(gaps.items()):
            checks.items.append({"name": f"momentum_oracle_gap_{variant}", "value": gap,
                                 "tolerance": checks.tol("oracle"), "comparison": "info",
                                 "pass": True})
        detail = passing[0] if len(passing) == 1 else ("none" if not passing else "both")
        checks.add_flag("momentum_variant_resolved", len(passing) == 1, detail)
    checks.guard("momentum_oracle", oracle)


# riccati-family --------------------------------------------------------------

RICCATI_DEFAULTS = {"t_mismatch": 1e-10, "compatibility": 1e-8, "riccati": 1e-8, "fault_detect": 1e-4,
                    "fault_size": 1e-3}
RICCATI_MATRICES = ("s3", "s4", "r1", "r3", "v1", "v2", "u1", "u2")
RICCATI_POLYS = ("f", "g", "l", "m", "a2fun", "a3fun", "a4fun")
RICCATI_PARAMS = ({"draws", "degree", "variants", "integral", "zero", "lower_limit", "upper_limit",
                   "fblocks", "gblocks", "variant", "source_signature", "target_signature"}
                  | set(RICCATI_MATRICES) | set(RICCATI_POLYS))


def _explicit_params(p, n):
    fields = {}
    for key in RICCATI_MATRICES:
        if key in p:
            fields[key] = _matrix(p[key], (n, n), key)
    for key in RICCATI_POLYS:
        if key in p:
            fields[key] = _poly(p[key], (n, n), key)
    for key in ("fblocks", "gblocks"):
        if key in p:
            fields[key] = _poly(p[key], (2 * n, 2 * n), key)
    for key in ("s3", "r1"):
        fields.setdefault(key, np.eye(n))
    for key in ("s4", "r3"):
        fields.setdefault(key, np.zeros((n, n)))
    return rc.RiccatiFamilyParams(lower_limit=float(p.get("lower_limit", 0.0)),
                                  upper_limit=float(p.get("upper_limit", 1.0)),
                                  integral=p.get("integral", "definite"), **fields)


def riccati_family(cfg, checks: Checks, csv_out: dict):
    n, p = cfg["n"], cfg["parameters"]
    rng = SplitMix64(cfg["seed"])
    y4 = np.diag(_signature(p.get("source_signature", [1.0] * (n - 1) + [-1.0]), n, "source_signature"))
    z4 = np.diag(_signature(p.get("target_signature", [1.0] * (n - 3) + [-1.0, 1.0, -1.0])
                            if n >= 3 else [1.0] * n, n, "target_signature"))
    tol = {k: checks.tol(k) for k in ("t_mismatch", "compatibility", "riccati")}
    grid = np.linspace(0.0, 1.0, 101)
    explicit = bool(p.get("zero")) or any(k in p for k in RICCATI_MATRICES + RICCATI_POLYS)
    variants = p.get("variants", ["first", "second"])
    if explicit:
        variants = [p.get("variant", "first")]
    draws = 1 if explicit else int(p.get("draws", 20))
    degree = int(p.get("degree", 3))
    integral = p.get("integral", "definite")

    for variant in variants:
        def run_variant(variant=variant):
            worst = {"mismatch": 0.0, "compat": 0.0, "riccati": 0.0}
            gated = refused = 0
            all_pass = True
            first = None
            for _ in range(draws):
                params = (_explicit_params(p, n) if explicit
                          else rc.random_params(rng, n, degree, variant, integral))
                member = rc.build_family(params, variant, y4, z4)
                first = first or (params, member)
                rep = rc.verify_member(member, None, grid, tol)
                worst["mismatch"] = max(worst["mismatch"], rep.max_T_mismatch)
                worst["compat"] = max(worst["compat"], rep.compat_residual)
                if rep.riccati_residual is None:
                    refused += 1
                else:
                    gated += 1
                    worst["riccati"] = max(worst["riccati"], rep.riccati_residual)
                all_pass = all_pass and rep.passed
            checks.add(f"{variant}_max_T_mismatch", worst["mismatch"], "t_mismatch")
            checks.add(f"{variant}_max_compatibility_residual", worst["compat"], "compatibility")
            checks.add(f"{variant}_max_riccati_residual_gated", worst["riccati"], "riccati")
            checks.add_flag(f"{variant}_riccati_gate", True, f"evaluated={gated} refused={refused}")
            params, member = first
            size = checks.tol("fault_size")
            key = "v1" if variant == "first" else "u1"
            base = getattr(params, key)
            base = np.zeros((n, n)) if base is None else np.asarray(base)
            bad = rc.build_family(dataclasses.replace(params, **{key: base + size}), variant, y4, z4)
            fault = rc.verify_member(bad, member.closed_form, grid, tol)
            checks.add(f"{variant}_fault_detection_mismatch", fault.max_T_mismatch, "fault_detect", mode="ge")
        checks.guard(f"{variant}_family", run_variant)

    def nonsingular():
        # A0^-1 - tau K stays diagonally dominant on [0, 1]
        a0 = np.linalg.inv(3.0 * np.eye(n) + rng.symmetric((n, n)) / n)
        kmat = rng.symmetric((n, n)) / n
        amat = rc.inverse_linear_solution(a0, kmat)
        fine = np.linspace(0.0, 1.0, 1001)
        eye, zero = np.eye(n), np.zeros((n, n))
        res = rc.riccati_residual(rc.sample(amat, fine), eye, eye, zero, zero, -kmat, zero)
        checks.add("riccati_residual_nonsingular_solution", res, "riccati")
    checks.guard("riccati_residual_nonsingular_solution", nonsingular)


# reduction-check ---------------------------------------------------------------

REDUCTION_DEFAULTS = {"reduction": 1e-9}
REDUCTION_PARAMS = {"degree"}


def reduction_check(cfg, checks: Checks, csv_out: dict):
    n, steps, p = cfg["n"], cfg["steps"], cfg["parameters"]
    rng = SplitMix64(cfg["seed"])
    d = 2 * n
    degree = int(p.get("degree", 2))

    def run():
        ybar, z, a = (rng.symmetric((d, d)) for _ in range(3))
        s0 = rng.symmetric((d, d)) + 2.0 * np.eye(d)
        r0 = rng.symmetric((d, d)) + 2.0 * np.eye(d)
        f = MatrixPolynomial(rng.symmetric((degree + 1, d, d)))
        g = MatrixPolynomial(rng.symmetric((degree + 1, d, d)))
        rep = rc.reduction_check(ybar, z, a, s0, r0, f, g, 0.0, 1.0, steps, checks.tol("reduction"))
        checks.add("S_full_vs_reduced", rep.s_difference, "reduction")
        checks.add("R_full_vs_reduced", rep.r_difference, "reduction")
    checks.guard("reduction", run)


# embed-check ---------------------------------------------------------------------

EMBED_DEFAULTS = {"null_invariant": 1e-10, "chain": 1e-5, "chain_ratio_low": 2.5, "chain_ratio_high": 6.0,
                  "flat_form": 1e-6, "curvature_form": 1e-6, "hamiltonian_equality": 1e-12,
                  "round_trip": 1e-12, "flat_frame_sigma": 0.0}
EMBED_PARAMS = {"points", "signature", "curve_step", "k", "eps", "kexp"}


def _catalog(n, sig, p):
    return [ce.vielbein_catalog("identity", n, sig),
            ce.vielbein_catalog("diagonal_poly", n, sig, eps=float(p.get("eps", 0.1))),
            ce.vielbein_catalog("diagonal_poly", n, sig, eps=float(p.get("eps", 0.1)), all_axes=True),
            ce.vielbein_catalog("exp_conformal", n, sig, k=float(p.get("kexp", 0.2)))]


def embed_check(cfg, checks: Checks, csv_out: dict):
    n, p = cfg["n"], cfg["parameters"]
    rng = SplitMix64(cfg["seed"])
    sig = _signature(p.get("signature", [1.0] * (n - 1) + [-1.0]), n, "signature")
    frames = _catalog(n, sig, p)
    points = int(p.get("points", 1000))
    step = float(p.get("curve_step", 1e-3))

    def null_and_round_trip():
        worst = trip = 0.0
        for i in range(points):
            v = frames[i % len(frames)]
            u = 0.5 * rng.symmetric(n)
            s = rng.symmetric()
            y = ce.embed(v, u, s)
            worst = max(worst, abs(ce.null_invariant(y, sig)) / max(1.0, float(y @ y)))
            trip = max(trip, float(np.max(np.abs(ce.zbar_inverse(v, u, ce.zbar(v, u)) - u))))
        checks.add("null_invariant_scaled", worst, "null_invariant")
        checks.add("zbar_round_trip", trip, "round_trip")
    checks.guard("null_invariant", null_and_round_trip)

    def chain():
        worst = 0.0
        ratio_lo, ratio_hi = np.inf, 0.0
        flat_worst = 0.0
        for v in frames[1:]:
            coarse = ce.line_element_chain(v, ce.curve_catalog("arc", n, step=step))
            fine = ce.line_element_chain(v, ce.curve_catalog("arc", n, step=step / 2))
            worst = max(worst, coarse.max_rel_err_flatform, coarse.max_rel_err_embedding)
            for a, b in ((coarse.max_rel_err_flatform, fine.max_rel_err_flatform),
                         (coarse.max_rel_err_embedding, fine.max_rel_err_embedding)):
                ratio = a / max(b, 1e-300)
                ratio_lo, ratio_hi = min(ratio_lo, ratio), max(ratio_hi, ratio)
            flat_worst = max(flat_worst, ce.sigma_along(v, ce.curve_catalog("arc", n, step=step)).flat_form_rel_err)
        checks.add("line_element_chain_rel_err", worst, "chain")
        checks.add_range("chain_refinement_ratio_min", ratio_lo, "chain_ratio_low", "chain_ratio_high")
        checks.add_range("chain_refinement_ratio_max", ratio_hi, "chain_ratio_low", "chain_ratio_high")
        checks.add("conformal_flat_form_rel_err", flat_worst, "flat_form")
        sigma0 = ce.sigma_along(frames[0], ce.curve_catalog("arc", n, step=step)).sigma
        checks.add("constant_frame_sigma", float(np.max(np.abs(sigma0))), "flat_frame_sigma")
    checks.guard("line_element_chain", chain)

    def curvature_form():
        rep = ce.conformal_curvature_check(frames[1], ce.curve_catalog("arc", n, step=step),
                                           float(p.get("k", 0.5)), checks.tol("curvature_form"))
        checks.add("curvature_form_scaled_rel_err", rep.max_rel_err_scaled, "curvature_form")
        checks.items.append({"name": "curvature_form_literal_rel_err", "value": float(rep.max_rel_err_literal),
                             "tolerance": checks.tol("curvature_form"), "comparison": "info", "pass": True})
    checks.guard("curvature_form", curvature_form)

    def hamiltonians():
        worst = 0.0
        for v in frames:
            u = 0.5 * rng.symmetric(n)
            s = 0.0 if v is frames[0] else rng.symmetric()
            mom = ce.consistent_momenta(v, u, s, rng.symmetric(n), extra=rng.symmetric())
            vals = ce.three_hamiltonians(v.metric(u), s, sig, *mom)
            worst = max(worst, ce.three_hamiltonians_equal(vals).max_difference)
        checks.add("three_hamiltonians_max_difference", worst, "hamiltonian_equality")
    checks.guard("three_hamiltonians", hamiltonians)


# calabi-curvature ------------------------------------------------------------------

CALABI_DEFAULTS = {"hessian_identity": 1e-8, "flat_curvature": 1e-6, "curvature_identity": 1e-4,
                   "lagrangian_hamiltonian": 1e-12}
CALABI_PARAMS = {"potentials", "points", "powers", "cases", "eps", "radius"}
CONVEX_CATALOG = ["quadratic", "quartic", "coupled_quartic", "coupled_cubic", "exp_coupled"]


def calabi_curvature(cfg, checks: Checks, csv_out: dict):
    n, p = cfg["n"], cfg["parameters"]
    rng = SplitMix64(cfg["seed"])
    names = p.get("potentials", CONVEX_CATALOG)
    unknown = set(names) - set(CONVEX_CATALOG)
    if unknown:
        raise ConfigError(f"parameters.potentials: unknown entries {sorted(unknown)}")
    points = int(p.get("points", 50))
    powers = [int(k) for k in p.get("powers", [1])]
    radius = float(p.get("radius", 0.5))
    eps = float(p.get("eps", 0.1))
    quad = calabi.potential_catalog("quadratic", n)

    def flat():
        hess = curv = 0.0
        g = calabi.hessian_metric(quad, 1)
        for _ in range(10):
            x = radius * rng.symmetric(n)
            hess = max(hess, float(np.max(np.abs(g(x) - np.eye(n)))))
            curv = max(curv, float(np.max(np.abs(calabi.riemann(g, x)[0]))))
        checks.add("quadratic_hessian_minus_identity", hess, "hessian_identity")
        checks.add("flat_metric_curvature", curv, "flat_curvature")
    checks.guard("flat_metric", flat)

    def identity():
        worst = 0.0
        for i in range(points):
            name = names[i % len(names)]
            if name not in ("quadratic", "quartic") and n < 2:
                continue
            u = calabi.potential_catalog(name, n, eps=eps)
            x = radius * rng.symmetric(n)
            if name == "quartic":
                x = x + np.sign(x) * 0.2  # keep the quartic Hessian away from singular axes
            for k in powers:
                rep = calabi.hessian_curvature_check(u, x, k, checks.tol("curvature_identity"))
                worst = max(worst, rep.max_difference)
        checks.add("hessian_curvature_identity", worst, "curvature_identity")
    checks.guard("curvature_identity", identity)

    def lag_ham():
        worst = 0.0
        for _ in range(int(p.get("cases", 100))):
            a = rng.symmetric((n, n))
            g = a.T @ a + n * np.eye(n)
            lag, ham, diff = calabi.calabi_lagrangian_hamiltonian(g, None, rng.symmetric(n))
            worst = max(worst, abs(diff) / max(1.0, abs(lag)))
        checks.add("lagrangian_minus_hamiltonian", worst, "lagrangian_hamiltonian")
    checks.guard("lagrangian_hamiltonian", lag_ham)


SCENARIOS = {
    "flat-map-verify": (flat_map_verify, FLAT_DEFAULTS, FLAT_PARAMS, {"n": 4, "steps": 1000}),
    "riccati-family": (riccati_family, RICCATI_DEFAULTS, RICCATI_PARAMS, {"n": 6, "steps": 1000}),
    "embed-check": (embed_check, EMBED_DEFAULTS, EMBED_PARAMS, {"n": 4, "steps": 1000}),
    "calabi-curvature": (calabi_curvature, CALABI_DEFAULTS, CALABI_PARAMS, {"n": 2, "steps": 1000}),
    "reduction-check": (reduction_check, REDUCTION_DEFAULTS, REDUCTION_PARAMS, {"n": 3, "steps": 1000}),
}
