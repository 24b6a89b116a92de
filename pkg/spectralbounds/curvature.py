"""Curvature of metric graphs oriented by spheres, and the bounds it yields.

Edges leaving a vertex towards a larger sphere are outgoing (E+), the others incoming (E-):

    K(v)      = (#E+ - #E-) / #E+ * min over E+ of 1/|e|     (-inf when E+ is empty)
    K_comb(v) = (#E+ - #E-) / #E+                            (-inf when E+ is empty)
    K_d(v)    = (#E+ - #E-) / m(v)

Frontier vertices have incomplete stars; their entries are NaN and they never enter an infimum.
"""

import csv
import io
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from spectralbounds.checks import (ALPHA, ALPHA_ESS, APPLICABLE, HEURISTIC, INAPPLICABLE, LAMBDA0, LAMBDA0_ESS,
                                   Bound)
from spectralbounds.graph import LengthExtremes, MetricGraph, per_sphere_min, vertex_weights
from spectralbounds.numerics import TOLERANCE, decay_exponent, tail_fit

CONVERGING = "converging"
DIVERGING = "diverging"
VANISHING = "vanishing"

GROWTH_EXPONENT = 0.5

ESSENTIAL_NOTE = "inf over spheres >= k as liminf surrogate"


@dataclass(frozen=True)
class CurvatureProfile:
    K: np.ndarray
    K_comb: np.ndarray
    K_d: np.ndarray
    K_inf: float
    K_comb_inf: float
    K_d_inf: float
    K_ess_seq: Dict[int, float] = field(default_factory=dict)
    K_comb_ess_seq: Dict[int, float] = field(default_factory=dict)
    K_d_ess_seq: Dict[int, float] = field(default_factory=dict)
    sphere: np.ndarray = field(default=None, repr=False)


def _infimum(values: np.ndarray) -> float:
    values = values[~np.isnan(values)]
    return float(values.min()) if len(values) else float("nan")


def curvature_profile(g: MetricGraph) -> CurvatureProfile:
    n = g.num_vertices
    outgoing = np.bincount(g.source, minlength=n).astype(float)
    incoming = np.bincount(g.target, minlength=n).astype(float)
    # Edges inside a sphere count as incoming at both ends.
    level = g.sphere[g.source] == g.sphere[g.target]
    outgoing -= np.bincount(g.source, weights=level, minlength=n)
    incoming += np.bincount(g.source, weights=level, minlength=n)
    longest = np.zeros(n)
    forward = ~level
    np.maximum.at(longest, g.source[forward], g.length[forward])

    balance = outgoing - incoming
    with np.errstate(divide="ignore", invalid="ignore"):
        K_comb = np.where(outgoing > 0, balance / outgoing, -np.inf)
        K = np.where(outgoing > 0, K_comb / longest, -np.inf)
    K_d = balance / vertex_weights(g)

    for values in (K, K_comb, K_d):
        values[g.frontier] = np.nan

    sequences = []
    for values in (K, K_comb, K_d):
        sequences.append({k: _infimum(values[g.sphere >= k]) for k in range(g.depth)
                          if np.any(~g.frontier & (g.sphere >= k))})
    return CurvatureProfile(K, K_comb, K_d, _infimum(K), _infimum(K_comb), _infimum(K_d), *sequences,
                            sphere=np.asarray(g.sphere))


def antitree_curvature_closed_form(sizes: Sequence[int], lengths: Sequence[float], n: int) -> float:
    """K on sphere n of an antitree with sphere sizes s_n and lengths l_n between S_n and S_(n+1)."""
    previous = sizes[n - 1] if n >= 1 else 0
    return (1.0 - previous / sizes[n + 1]) / lengths[n]


#
# Bounds
#

def _floor(value: float) -> float:
    return value * value / 4.0


def curvature_alpha_bounds(p: CurvatureProfile, extremes: LengthExtremes,
                           exclusion_radius: Optional[int] = None) -> List[Bound]:
    """Lower bounds for alpha and alpha_ess from positive curvature, with the lambda0 floors alpha^2/4.

    A bound whose positivity hypothesis fails is returned with applicability "inapplicable".
    Essential entries are heuristic and use the essential sequences at ``exclusion_radius`` (default:
    the largest k they hold), the same k as the essential longest edge.
    """
    ell_upper = extremes.ell_star_upper
    candidates = [
        ("alpha_from_K", p.K_inf, p.K_inf, "curvature K bounds alpha from below"),
        ("alpha_from_K_comb", p.K_comb_inf, p.K_comb_inf / ell_upper,
         "combinatorial curvature over the longest edge bounds alpha from below"),
        ("alpha_from_K_d", p.K_d_inf, 2.0 / (1.0 / p.K_d_inf + ell_upper) if p.K_d_inf > 0 else np.nan,
         "discrete curvature: 2/alpha <= 1/K_d + longest edge"),
    ]
    bounds = []
    for name, hypothesis, value, source in candidates:
        applicable = bool(hypothesis > 0)
        bounds.append(Bound(name, float(value) if applicable else None, source,
                            APPLICABLE if applicable else INAPPLICABLE, ALPHA))
        bounds.append(Bound(f"lambda0_{name}", _floor(value) if applicable else None,
                            f"Cheeger estimate lambda0 >= alpha^2/4; {source}",
                            APPLICABLE if applicable else INAPPLICABLE, LAMBDA0))

    if p.K_ess_seq:
        k = max(k for k in p.K_ess_seq if exclusion_radius is None or k <= exclusion_radius)
        ell_ess = extremes.ell_ess_upper_seq.get(k, extremes.ell_ess_upper)
        essential = [
            ("alpha_ess_from_K", p.K_ess_seq[k], p.K_ess_seq[k], "curvature at infinity bounds alpha_ess"),
            ("alpha_ess_from_K_comb", p.K_comb_ess_seq[k], p.K_comb_ess_seq[k] / ell_ess,
             "combinatorial curvature at infinity over the essential longest edge"),
        ]
        for name, hypothesis, value, source in essential:
            applicable = bool(hypothesis > 0)
            note = f"{source} ({ESSENTIAL_NOTE}, k={k})"
            bounds.append(Bound(name, float(value) if applicable else None, note,
                                HEURISTIC if applicable else INAPPLICABLE, ALPHA_ESS))
            bounds.append(Bound(f"lambda0_ess_{name[len('alpha_ess_'):]}", _floor(value) if applicable else None,
                                f"lambda0_ess >= alpha_ess^2/4; {note}", HEURISTIC if applicable else INAPPLICABLE,
                                LAMBDA0_ESS))
    return bounds


@dataclass(frozen=True)
class CurvatureLimits:
    """Per-sphere minima of K, K_comb and K_d, and their behaviour at infinity.

    ``labels[name]`` is one of converging, diverging (to +inf) or vanishing; ``limits[name]`` the
    extrapolated value (+inf when diverging, 0 when vanishing).
    """
    sphere_minima: Dict[str, List[float]]
    labels: Dict[str, str]
    limits: Dict[str, float]
    exponents: Dict[str, float]


def _classify(values: np.ndarray) -> Tuple[str, float, float]:
    spheres = np.arange(len(values), dtype=float)
    keep = np.isfinite(values) & (spheres > 0)
    xs, ys = spheres[keep], values[keep]
    if len(xs) == 0:
        return CONVERGING, float("nan"), float("nan")
    exponent = decay_exponent(xs, ys)
    if not np.isnan(exponent) and exponent < -GROWTH_EXPONENT:
        return DIVERGING, float("inf"), exponent
    if not np.isnan(exponent) and exponent > GROWTH_EXPONENT:
        return VANISHING, 0.0, exponent
    a, _ = tail_fit(xs, ys)
    if abs(a) <= TOLERANCE:
        return VANISHING, 0.0, exponent
    return CONVERGING, a, exponent


def essential_curvature_limits(p: CurvatureProfile) -> CurvatureLimits:
    """Extrapolate the per-sphere minima of each curvature by a power-law test and an a + b/n fit.

    Sphere 0 is left out of the fits; frontier spheres carry no values.
    """
    depth = int(p.sphere.max())
    minima, labels, limits, exponents = {}, {}, {}, {}
    for name, values in (("K", p.K), ("K_comb", p.K_comb), ("K_d", p.K_d)):
        interior = ~np.isnan(values)
        per_sphere = per_sphere_min(values[interior], p.sphere[interior], depth)
        minima[name] = per_sphere.tolist()
        labels[name], limits[name], exponents[name] = _classify(per_sphere)
    return CurvatureLimits(minima, labels, limits, exponents)


def curvature_csv(p: CurvatureProfile) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(["vertex", "sphere", "K", "K_comb", "K_d"])
    for v in range(len(p.K)):
        writer.writerow([v, int(p.sphere[v]), repr(float(p.K[v])), repr(float(p.K_comb[v])), repr(float(p.K_d[v]))])
    return buffer.getvalue()
