"""Empirical verification of eigenfunction envelope, spacing and tail laws.

Each scan samples the reduced radial functions v_{n,l} = r R_{n,l} over a
window tied to the classical turning points, regresses the measured local
maxima against the claimed power law on log-log axes, and reports fitted
exponents and constants.  Unspecified constants of the underlying
estimates live in the CONFIG table below; scans report fitted constants
rather than asserting any particular value.

Windows are capped at half the outer turning point by default: the last
half is the Airy transition region where the oscillatory envelope picks
up an extra (1 - r/r*)^(-1/4) factor, which the near-edge scans (A.32)
measure separately.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field

import numpy as np

from . import clusters as cl
from . import radial_operator as ro
from . import specfun

__all__ = ["ScanReport", "CONFIG", "TOLERANCES", "envelope_scan", "zero_spacing_scan",
           "tail_decay_check", "edge_regime_scan"]

CONFIG = {
    "eps_window": 0.2,       # oscillatory window: (1+eps) r_* .. cap * r*
    "window_cap": 0.5,
    "r_floor": 8.0,          # ignore the innermost few oscillations
    "edge_eps": 0.3,         # near-edge windows extend eps*L inward
    "airy_margin": 1.5,      # stay C * r^(2/3) away from a turning point
    "C_s": 2.0,              # tail sampling unit b = C_s * r*^(2/3)
    "rel_inner": 2.0,        # relativistic window: rel_inner*(l+1)^2 .. rel_cap*n^2
    "rel_cap": 2.0,
    "C0_edge": 3,            # fewer nodes than this routes to the near-circular law
    "eps_prime": 0.3,        # admissible l: l <= (1 - eps_prime) n
    "constant_spread": 4.0,  # max/min fitted-constant ratio treated as "stable"
    "floor_rel": 1e-9,       # eigenvector tail precision floor (relative)
    "scan_points": 4000,     # samples per closed-form window sweep
}

# (claimed exponent is computed per sample where it depends on sigma)
TOLERANCES = {
    "A.26": {"n": 0.1, "r": 0.05},
    "A.32": {"edge": 0.12, "n": 0.12},
    "A.33": {"edge": 0.35},
    "A.34": {"n": 0.1},
    "A.44": {"n": 0.1},
    "B.27": {"n": 0.15, "r": 0.15},
}

_CLAIMS = tuple(TOLERANCES)


@dataclass
class ScanReport:
    """Outcome of one empirical scan: samples, fits, and a pass verdict."""

    claim_id: str
    samples: list
    fitted_exponent: dict
    fitted_constant: float
    passed: bool
    details: dict = field(default_factory=dict)

    def to_json(self) -> str:
        def clean(x):
            if isinstance(x, (np.floating, np.integer)):
                return float(x)
            if isinstance(x, np.ndarray):
                return [float(v) for v in x]
            if isinstance(x, dict):
                return {k: clean(v) for k, v in x.items()}
            if isinstance(x, (list, tuple)):
                return [clean(v) for v in x]
            if isinstance(x, (bool, np.bool_)):
                return bool(x)
            return x

        return json.dumps(
            {
                "claim_id": self.claim_id,
                "fitted_exponent": clean(self.fitted_exponent),
                "fitted_constant": clean(self.fitted_constant),
                "pass": bool(self.passed),
                "details": clean(self.details),
                "samples": clean(self.samples),
            },
            sort_keys=True,
        )

    def samples_csv(self, path):
        keys = sorted({k for s in self.samples for k in s})
        with open(path, "w", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=keys)
            writer.writeheader()
            for s in self.samples:
                writer.writerow({k: s.get(k, "") for k in keys})


def _ols(x, y) -> tuple[float, float]:
    slope, intercept = np.polyfit(np.asarray(x, float), np.asarray(y, float), 1)
    return float(slope), float(intercept)


def _resolve_l(l_rule, n: int) -> int:
    l = l_rule(n) if callable(l_rule) else int(l_rule)
    if not 0 <= l <= n - 1:
        raise ValueError(f"l rule produced invalid l={l} for n={n}")
    return l


def _abs_reduced(n, l, beta, lo, hi, n_pts=None):
    """|v_{n,l}| sampled on [lo, hi]; closed form for beta=0, grid otherwise."""
    if n_pts is None:
        n_pts = CONFIG["scan_points"]
    if beta == 0.0:
        s = np.linspace(math.sqrt(max(lo, 1e-9)), math.sqrt(hi), n_pts)
        r = s * s
        return r, np.abs(specfun.reduced_radial(specfun.QuantumNumbers(n, l), r))
    grid = ro.default_grid_for(n, span=max(6.0, 1.2 * hi / n**2))
    pair = cl.solve_cached(grid, l, beta, None, n - l)[n - l - 1]
    mask = (grid.points >= lo) & (grid.points <= hi)
    return grid.points[mask], np.abs(pair.vector)[mask]


def _local_maxima(r, av):
    if len(av) < 3:
        return np.array([]), np.array([])
    mid = av[1:-1]
    keep = (mid >= av[:-2]) & (mid >= av[2:]) & (mid > 0)
    idx = np.nonzero(keep)[0] + 1
    return r[idx], av[idx]


def _window(claim, n, l, beta):
    tp = specfun.turning_points(specfun.QuantumNumbers(n, l))
    if claim in ("A.26", "A.44"):
        lo = max(CONFIG["r_floor"], (1.0 + CONFIG["eps_window"]) * tp.r_star)
        hi = (2.0 if claim == "A.44" else CONFIG["window_cap"]) * tp.r_star_upper
    elif claim == "B.27":
        lo = max(CONFIG["r_floor"], CONFIG["rel_inner"] * (l + 1) ** 2)
        hi = CONFIG["rel_cap"] * n**2
    else:
        raise ValueError(claim)
    if lo >= hi:
        raise ValueError(f"empty window for (n, l)=({n}, {l})")
    return lo, hi, tp


def _bulk_scan(claim, n_list, l_rule, beta, tol):
    """Shared machinery of the r^(1/4) n^(-3/2) envelope claims."""
    samples = []
    anchor_pts = []
    for n in n_list:
        l = _resolve_l(l_rule, n)
        if l > (1.0 - CONFIG["eps_prime"]) * n:
            raise ValueError(f"l={l} violates the l <= (1-eps') n hypothesis at n={n}")
        lo, hi, tp = _window(claim, n, l, beta)
        cap = CONFIG["window_cap"] * tp.r_star_upper if claim == "A.44" else hi
        r, av = _abs_reduced(n, l, beta, lo, hi)
        rm, vm = _local_maxima(r, av)
        if len(rm) == 0:
            continue
        fit_mask = rm <= cap
        anchor = math.sqrt(lo * min(hi, cap))
        k = int(np.argmin(np.abs(np.log(rm) - math.log(anchor))))
        anchor_pts.append((n, rm[k], vm[k]))
        for rr, vv in zip(rm[fit_mask], vm[fit_mask]):
            samples.append(
                {"claim": claim, "n": n, "l": l, "beta": beta, "r": float(rr),
                 "measured": float(vv), "reference": float(rr**0.25 * n**-1.5)}
            )
        if claim == "A.44":
            # sup over the full window, Airy bulge included, reported only
            sup_ratio = float(np.max(av / (r**0.25 * n**-1.5)))
            samples[-1]["sup_ratio_full_window"] = sup_ratio
    if len(anchor_pts) < 4:
        raise ValueError(f"{claim}: only {len(anchor_pts)} usable n values, need >= 4")
    narr = np.array([p[0] for p in anchor_pts], float)
    n_exp, n_icpt = _ols(np.log(narr), [math.log(v / r**0.25) for _, r, v in anchor_pts])
    big_n = max(n_list)
    pts = [(s["r"], s["measured"]) for s in samples if s["n"] == big_n]
    r_exp, _ = _ols([math.log(p[0]) for p in pts], [math.log(p[1]) for p in pts])
    consts = np.array([s["measured"] / s["reference"] for s in samples])
    fitted_exponent = {"n": n_exp, "r": r_exp, "claimed_n": -1.5, "claimed_r": 0.25}
    passed = abs(n_exp + 1.5) <= tol["n"]
    if "r" in tol:
        passed = passed and abs(r_exp - 0.25) <= tol["r"]
    return ScanReport(
        claim_id=claim,
        samples=samples,
        fitted_exponent=fitted_exponent,
        fitted_constant=float(np.median(consts)),
        passed=passed,
        details={
            "constant_spread": float(np.max(consts) / np.min(consts)),
            "anchor_constant": math.exp(n_icpt),
            "n_values": [int(n) for n in narr],
        },
    )


def _upper_edge_scan(n_list, l_rule, beta, tol):
    """Near the outer turning point: |v| against (r* - r) and n (claim A.32)."""
    samples = []
    fixed_frac = 0.15
    anchor_pts = []
    for n in n_list:
        l = _resolve_l(l_rule, n)
        tp = specfun.turning_points(specfun.QuantumNumbers(n, l))
        rs = tp.r_star_upper
        sigma = l * (l + 1) / rs
        lo = (1.0 - CONFIG["edge_eps"]) * rs
        hi = rs - CONFIG["airy_margin"] * rs ** (2.0 / 3.0)
        if hi <= lo:
            continue
        r, av = _abs_reduced(n, l, beta, lo, rs, n_pts=6000)
        rm, vm = _local_maxima(r, av)
        keep = rm <= hi
        rm, vm = rm[keep], vm[keep]
        for rr, vv in zip(rm, vm):
            dist = rs - rr
            samples.append(
                {"claim": "A.32", "n": n, "l": l, "dist": float(dist), "sigma": sigma,
                 "measured": float(vv),
                 "reference": float(dist ** (-0.25 - sigma / 2) * n ** (-0.5 + sigma))}
            )
        if len(rm):
            k = int(np.argmin(np.abs((rs - rm) - fixed_frac * rs)))
            anchor_pts.append((n, rs - rm[k], vm[k], sigma))
    if len(anchor_pts) < 4:
        raise ValueError(f"A.32: only {len(anchor_pts)} usable n values, need >= 4")
    # pooled edge fit: remove the claimed n factor, regress on the distance
    xs = [math.log(s["dist"]) for s in samples]
    ys = [math.log(s["measured"] * s["n"] ** (0.5 - s["sigma"])) for s in samples]
    edge_exp, _ = _ols(xs, ys)
    claimed_edge = float(np.mean([-0.25 - s["sigma"] / 2 for s in samples]))
    # n fit at fixed normalized distance, claimed -1/2 + sigma
    xn = [math.log(p[0]) for p in anchor_pts]
    yn = [math.log(v * d ** (0.25 + sg / 2)) for _, d, v, sg in anchor_pts]
    n_exp, _ = _ols(xn, yn)
    claimed_n = float(np.mean([-0.5 + p[3] for p in anchor_pts]))
    consts = np.array([s["measured"] / s["reference"] for s in samples])
    passed = abs(edge_exp - claimed_edge) <= tol["edge"] and abs(n_exp - claimed_n) <= tol["n"]
    return ScanReport(
        claim_id="A.32",
        samples=samples,
        fitted_exponent={"edge": edge_exp, "claimed_edge": claimed_edge,
                         "n": n_exp, "claimed_n": claimed_n},
        fitted_constant=float(np.median(consts)),
        passed=passed,
        details={"constant_spread": float(np.max(consts) / np.min(consts))},
    )


def _first_antinode(n, l, beta):
    """Location (distance past r_*) and height of the innermost envelope peak."""
    tp = specfun.turning_points(specfun.QuantumNumbers(n, l))
    rl = tp.r_star
    r, av = _abs_reduced(n, l, beta, rl, min(2.5 * rl, 0.9 * tp.r_star_upper), n_pts=4000)
    rm, vm = _local_maxima(r, av)
    if len(rm) == 0:
        return None
    return float(rm[0] - rl), float(vm[0]), rl, l * (l + 1) / rl


def _lower_edge_scan(n_list, l_rule, beta, tol):
    """Near the inner turning point (claim A.33).

    At desk scale only the innermost Airy antinode is observable (higher
    ones need l(l+1) in the thousands), so the scan measures its location
    and height.  The claimed envelope puts the antinode a fixed multiple
    of r_*^(2/3) past r_* with height per (r-r_*)^(-3/4+sigma'/2)
    n^(-3/2) l^(2-sigma'); the competing inner-spot reading carries
    l^(1-2 sigma'/3) instead.  Both fitted l-exponents are reported, only
    the n-scaling at the antinode is asserted.
    """
    samples = []
    for n in n_list:
        l = _resolve_l(l_rule, n)
        if l < 1:
            raise ValueError("the inner-edge claim needs l >= 1")
        got = _first_antinode(n, l, beta)
        if got is None:
            continue
        dist, height, rl, sigma_p = got
        # claimed height at the antinode, using the envelope form
        ref = dist ** (-0.75 + sigma_p / 2) * n**-1.5 * l ** (2 - sigma_p)
        samples.append(
            {"claim": "A.33", "n": n, "l": l, "dist": dist, "r_star": rl,
             "sigma_p": sigma_p, "loc_units": dist / rl ** (2.0 / 3.0),
             "measured": height, "reference": float(ref)}
        )
    if len(samples) < 4:
        raise ValueError("A.33: need >= 4 usable n values")
    # n scaling of the antinode height; claimed slope from the envelope form
    n_exp, _ = _ols([math.log(s["n"]) for s in samples],
                    [math.log(s["measured"]) for s in samples])
    claimed_n, _ = _ols([math.log(s["n"]) for s in samples],
                        [math.log(s["reference"]) for s in samples])
    # competing l-exponent fits at fixed n (largest in range), reported only
    big_n = max(s["n"] for s in samples)
    l_fit = None
    readings = {}
    ls = [l for l in range(2, big_n - 2) if l <= (1 - CONFIG["eps_prime"]) * big_n]
    pts = []
    for l in ls:
        got = _first_antinode(big_n, l, beta)
        if got is not None:
            pts.append((l, got[1], got[3]))
    if len(pts) >= 3:
        l_fit, _ = _ols([math.log(p[0]) for p in pts], [math.log(p[1]) for p in pts])
        readings = {
            "l_exponent_fitted": l_fit,
            "l_exponent_envelope_reading": float(
                np.mean([(1 - p[2] / 3) for p in pts])
            ),
            "l_exponent_spot_reading": float(
                np.mean([(1 - 2 * p[2] / 3) for p in pts])
            ),
        }
    consts = np.array([s["measured"] / s["reference"] for s in samples])
    locs = [s["loc_units"] for s in samples]
    passed = abs(n_exp - claimed_n) <= tol["edge"] and min(locs) >= 1.0 and max(locs) <= 8.0
    return ScanReport(
        claim_id="A.33",
        samples=samples,
        fitted_exponent={"n": n_exp, "claimed_n": claimed_n},
        fitted_constant=float(np.median(consts)),
        passed=passed,
        details={
            "constant_spread": float(np.max(consts) / np.min(consts)),
            "antinode_location_range": [float(min(locs)), float(max(locs))],
            **readings,
            "note": "the two l-exponent readings disagree; both reported, neither asserted",
        },
    )


def _point_abs(n, l, beta, r):
    if beta == 0.0:
        return abs(specfun.reduced_radial(specfun.QuantumNumbers(n, l), float(r)))
    grid = ro.default_grid_for(n, span=max(6.0, 1.5 * r / n**2))
    pair = cl.solve_cached(grid, l, beta, None, n - l)[n - l - 1]
    return abs(float(np.interp(r, grid.points, pair.vector)))


def _spot_scan(n_list, l_rule, beta, tol):
    """|v| exactly at the outer turning point, claimed n^(-5/6 - sigma/3)."""
    samples = []
    for n in n_list:
        l = _resolve_l(l_rule, n)
        tp = specfun.turning_points(specfun.QuantumNumbers(n, l))
        sigma = l * (l + 1) / tp.r_star_upper
        vv = _point_abs(n, l, beta, tp.r_star_upper)
        samples.append({"claim": "A.34", "n": n, "l": l, "sigma": sigma,
                        "measured": float(vv),
                        "reference": float(n ** (-5.0 / 6.0 - sigma / 3.0))})
    if len(samples) < 4:
        raise ValueError("A.34: need >= 4 n values")
    n_exp, icpt = _ols([math.log(s["n"]) for s in samples],
                       [math.log(s["measured"]) for s in samples])
    claimed = float(np.mean([-5.0 / 6.0 - s["sigma"] / 3.0 for s in samples]))
    consts = np.array([s["measured"] / s["reference"] for s in samples])
    return ScanReport(
        claim_id="A.34",
        samples=samples,
        fitted_exponent={"n": n_exp, "claimed_n": claimed},
        fitted_constant=float(np.median(consts)),
        passed=abs(n_exp - claimed) <= tol["n"],
        details={"constant_spread": float(np.max(consts) / np.min(consts))},
    )


def envelope_scan(claim: str, n_range, l_rule=0, beta: float = 0.0) -> ScanReport:
    """Fit the claimed envelope law over a scan of principal numbers.

    ``claim`` selects the window and reference: "A.26" (oscillatory bulk),
    "A.32" (outer edge), "A.33" (inner edge), "A.34" (turning-point spot
    values), "A.44" (global bulk window), "B.27" (relativistic bulk,
    requires beta > 0).  ``l_rule`` is a fixed l or a callable n -> l.
    """
    if claim not in _CLAIMS:
        raise ValueError(f"unknown claim {claim!r}; expected one of {_CLAIMS}")
    n_list = sorted(set(int(n) for n in n_range))
    if len(n_list) < 4:
        raise ValueError(f"{claim}: need at least 4 n values, got {len(n_list)}")
    tol = TOLERANCES[claim]
    if claim == "B.27" and beta <= 0:
        raise ValueError("B.27 is the relativistic claim; pass beta > 0")
    if claim in ("A.26", "A.44", "B.27"):
        return _bulk_scan(claim, n_list, l_rule, beta, tol)
    if claim == "A.32":
        return _upper_edge_scan(n_list, l_rule, beta, tol)
    if claim == "A.33":
        return _lower_edge_scan(n_list, l_rule, beta, tol)
    return _spot_scan(n_list, l_rule, beta, tol)


def zero_spacing_scan(n_range, l_rule=0) -> ScanReport:
    """Consecutive-zero spacings against the local wavelength and edge laws."""
    samples = []
    mid_ratios = []
    edge_ratios = []
    gap_ratios = []
    for n in sorted(set(int(x) for x in n_range)):
        l = _resolve_l(l_rule, n)
        if n - l < 3:
            continue
        qn = specfun.QuantumNumbers(n, l)
        zs = specfun.zeros(qn)
        tp = specfun.turning_points(qn)
        rs = tp.r_star_upper
        lam = -1.0 / (4.0 * n**2)
        for k, rk in enumerate(zs):
            rec = {"n": n, "l": l, "k": k + 1, "r_k": float(rk)}
            dist = rs - rk
            # distance-to-edge law, valid outside the Airy sliver
            if dist <= 0.4 * rs and dist >= n ** (4.0 / 3.0):
                gr = dist / (rs ** (2.0 / 3.0) * (n - l - (k + 1)) ** (2.0 / 3.0))
                rec["gap_ratio"] = float(gr)
                gap_ratios.append(gr)
            if l >= 1 and 0 < rk - tp.r_star <= 1.0 * tp.r_star and rk - tp.r_star >= l ** (4.0 / 3.0):
                rec["inner_gap_ratio"] = float(
                    (rk - tp.r_star) / (tp.r_star ** (2.0 / 3.0) * (k + 1) ** (2.0 / 3.0))
                )
            if k + 1 < len(zs):
                rk1 = zs[k + 1]
                sk = rk1 - rk
                rec["s_k"] = float(sk)
                w = 1.0 / rk - l * (l + 1) / rk**2 + lam
                if (1.2 * tp.r_star) <= rk and rk1 <= 0.8 * rs and w > 0:
                    ratio = sk / (math.pi / math.sqrt(w))
                    rec["mid_ratio"] = float(ratio)
                    rec["sqrt_r_ratio"] = float(sk / (math.pi * math.sqrt(rk)))
                    mid_ratios.append(ratio)
                rmid = 0.5 * (rk + rk1)
                if rs - rmid <= 0.4 * rs and rs - rmid > 0:
                    er = sk * math.sqrt(rs - rmid) / rs
                    rec["edge_ratio"] = float(er)
                    edge_ratios.append(er)
            samples.append(rec)
    if not mid_ratios:
        raise ValueError("zero-spacing scan found no mid-range spacings")
    passed = (
        min(mid_ratios) >= 0.5
        and max(mid_ratios) <= 2.0
        and (not gap_ratios or (min(gap_ratios) >= 1.0 / 3.0 and max(gap_ratios) <= 3.0))
    )
    return ScanReport(
        claim_id="A.12",
        samples=samples,
        fitted_exponent={},
        fitted_constant=float(np.median(mid_ratios)),
        passed=passed,
        details={
            "mid_ratio_range": [float(min(mid_ratios)), float(max(mid_ratios))],
            "edge_ratio_range": [float(min(edge_ratios)), float(max(edge_ratios))]
            if edge_ratios
            else None,
            "gap_ratio_range": [float(min(gap_ratios)), float(max(gap_ratios))]
            if gap_ratios
            else None,
        },
    )


def tail_decay_check(n: int, l: int, beta: float = 0.0, side: str = "beyond_r_star_upper") -> ScanReport:
    """Super-polynomial falloff of |v| past a turning point.

    Beyond the outer turning point: samples at r* + m b, b = C_s r*^(2/3),
    m in {2, 4, 8}; each doubling of the distance must shrink |v| by at
    least 2^4.  Below the inner turning point the sample distances cannot
    fit inside (0, r_*) for desk-scale l, so the samples halve r instead
    (r_*/2, r_*/4, r_*/8), where the r^(l+1) vanishing gives the same
    16-fold shrink for l >= 3.  Grid eigenvector samples under the
    precision floor are excluded from the fit and flagged.
    """
    qn = specfun.QuantumNumbers(n, l)
    tp = specfun.turning_points(qn)
    if side == "beyond_r_star_upper":
        b = CONFIG["C_s"] * tp.r_star_upper ** (2.0 / 3.0)
        rs = [tp.r_star_upper + m * b for m in (2.0, 4.0, 8.0)]
        dists = [r - tp.r_star_upper for r in rs]
    elif side == "below_r_star":
        if l < 3:
            raise ValueError("the below-r_* check needs l >= 3 (r^(l+1) floor)")
        rs = [tp.r_star / 2.0, tp.r_star / 4.0, tp.r_star / 8.0]
        dists = [tp.r_star - r for r in rs]
    else:
        raise ValueError(f"unknown side {side!r}")
    vals = np.array([_point_abs(n, l, beta, r) for r in rs])
    floor = CONFIG["floor_rel"] * _bulk_peak(n, l, beta)
    usable = vals > floor
    samples = [
        {"n": n, "l": l, "side": side, "r": float(r), "dist": float(d),
         "measured": float(v), "below_floor": bool(not u)}
        for r, d, v, u in zip(rs, dists, vals, usable)
    ]
    ratios = []
    for a, bidx in ((0, 1), (1, 2)):
        if usable[a] and usable[bidx]:
            ratios.append(vals[bidx] / vals[a])
    if ratios:
        passed = max(ratios) <= 2.0**-4
    else:
        # everything already under the floor: decay confirmed to precision
        passed = True
    fitted = None
    if np.sum(usable) >= 2:
        fitted, _ = _ols(np.log(np.asarray(dists)[usable]), np.log(vals[usable]))
    return ScanReport(
        claim_id="A.36" if side == "beyond_r_star_upper" else "A.37",
        samples=samples,
        fitted_exponent={"dist": fitted},
        fitted_constant=float(vals[0]) if usable[0] else 0.0,
        passed=passed,
        details={"ratios": [float(x) for x in ratios], "floor": float(floor),
                 "floor_limited": bool(not np.all(usable))},
    )


def _bulk_peak(n, l, beta):
    lo = max(1e-6, specfun.turning_points(specfun.QuantumNumbers(n, l)).r_star)
    hi = specfun.turning_points(specfun.QuantumNumbers(n, l)).r_star_upper
    _, av = _abs_reduced(n, l, beta, lo * 0.5 + 1e-6, hi, n_pts=2000)
    return float(np.max(av))


def edge_regime_scan(n_range, n_minus_l: int | None = None) -> ScanReport:
    """Envelope of nearly circular states, window width L = r* - r_*.

    Requires C0 <= n - l <= eps n; with fewer nodes than C0 the state is
    in the near-circular regime and the scan dispatches to the tail law
    instead (recorded in the details).
    """
    samples = []
    l_ratio = []
    mid_consts = []
    upper_consts = []
    lower_consts = []
    dispatched = []
    for n in sorted(set(int(x) for x in n_range)):
        d = n_minus_l if n_minus_l is not None else max(CONFIG["C0_edge"], round(0.1 * n))
        if d < CONFIG["C0_edge"]:
            dispatched.append(n)
            continue
        l = n - d
        qn = specfun.QuantumNumbers(n, l)
        tp = specfun.turning_points(qn)
        L = tp.r_star_upper - tp.r_star
        sigma = l * (l + 1) / tp.r_star_upper
        sigma_p = l * (l + 1) / tp.r_star
        l_ref = 4.0 * n**1.5 * math.sqrt(2.0 * (n - l))
        l_ratio.append(L / l_ref)
        eps = CONFIG["edge_eps"]
        r, av = _abs_reduced(n, l, 0.0, tp.r_star + eps * L, tp.r_star_upper - eps * L, n_pts=4000)
        if len(av):
            mid_consts.append(float(np.max(av)) * math.sqrt(L))
        vu = _point_abs(n, l, 0.0, tp.r_star_upper)
        upper_consts.append(
            vu / (L ** (-1.0 / 3.0 + 2.0 * sigma / 3.0) * tp.r_star_upper ** (-0.25 - sigma / 2.0))
        )
        vl = _point_abs(n, l, 0.0, tp.r_star)
        lower_consts.append(
            vl / (L ** (0.5 - 2.0 * sigma_p / 3.0) * tp.r_star ** (-0.75 + sigma_p))
        )
        samples.append(
            {"n": n, "l": l, "L": float(L), "L_ref": float(l_ref),
             "mid_max": float(np.max(av)) if len(av) else None,
             "v_at_outer": float(vu), "v_at_inner": float(vl)}
        )
    if dispatched and not samples:
        sub = tail_decay_check(max(dispatched), max(dispatched) - 1)
        sub.details["dispatch"] = "near-circular (n - l below C0), tail law applied"
        return sub
    if len(samples) < 4:
        raise ValueError("edge-regime scan needs >= 4 usable n values")

    def spread(arr):
        arr = np.asarray(arr)
        return float(np.max(arr) / np.min(arr))

    ok = (
        min(l_ratio) >= 0.8
        and max(l_ratio) <= 1.25
        and spread(mid_consts) <= CONFIG["constant_spread"]
        and spread(upper_consts) <= CONFIG["constant_spread"]
        and spread(lower_consts) <= CONFIG["constant_spread"]
    )
    return ScanReport(
        claim_id="A.40",
        samples=samples,
        fitted_exponent={},
        fitted_constant=float(np.median(mid_consts)),
        passed=ok,
        details={
            "L_ratio_range": [float(min(l_ratio)), float(max(l_ratio))],
            "mid_constant_spread": spread(mid_consts),
            "outer_constant_spread": spread(upper_consts),
            "inner_constant_spread": spread(lower_consts),
            "dispatched_to_tail": dispatched,
        },
    )
