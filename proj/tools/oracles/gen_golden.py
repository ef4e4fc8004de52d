#!/usr/bin/env python3
"""Generate golden reference values for the unit tests.

Everything here is computed symbolically (sympy) or at high precision
(mpmath), independently of the C++ implementation:

  * L2_mu normalizers of the 3/2 half-space profile for n = 2, 3,
  * L2_mu norms of the raw even eigenfunctions h_{2m},
  * closed-form Hermite normalizers for a sample of multi-indices,
  * Gaussian half-space masses and second moments used by quadrature tests,
  * the drift Hermite relation H_k'' - 2x H_k' = -2k H_k (the eigenvalue
    bookkeeping of the whole Hermite layer rests on it),
  * Weiss energies of pure eigenfunctions relative to their mass norm.

Output: tests/golden/normalizers.json and tests/golden/eigenrelation.json,
written with sorted keys so reruns are byte-stable.
"""

import json
import pathlib

import sympy as sp
import mpmath

DIGITS = 30
mpmath.mp.dps = DIGITS + 10
ROOT = pathlib.Path(__file__).resolve().parents[2]
OUT = ROOT / "tests" / "golden"

y1, y2, y3, x = sp.symbols("y1 y2 y3 x", real=True)


def num(expr) -> str:
    return mpmath.nstr(mpmath.mpf(str(sp.N(expr, DIGITS + 5))), DIGITS)


# ---- half-space Gaussian integration -----------------------------------------


def half_space_integral(expr, n: int):
    """Integral of expr * e^{-|y|^2} over the half space {y_n > 0}."""
    if n == 2:
        inner = sp.integrate(expr * sp.exp(-(y1**2) - y2**2), (y2, 0, sp.oo))
        return sp.integrate(inner, (y1, -sp.oo, sp.oo))
    inner = sp.integrate(expr * sp.exp(-(y1**2) - y2**2 - y3**2), (y3, 0, sp.oo))
    inner = sp.integrate(inner, (y2, -sp.oo, sp.oo))
    return sp.integrate(inner, (y1, -sp.oo, sp.oo))


def coords(n: int):
    return (y1, y2) if n == 2 else (y1, y2, y3)


# ---- 3/2 profile normalizer ---------------------------------------------------
# |Re((y'.e) + i y_n)^{3/2}|^2 = r^3 cos^2(3 theta / 2) in the (s, y_n)
# half plane; tangential directions orthogonal to e integrate to sqrt(pi).

r, th = sp.symbols("r th", positive=True)
halfplane = sp.integrate(
    sp.integrate(r**3 * sp.cos(sp.Rational(3, 2) * th) ** 2 * sp.exp(-(r**2)) * r,
                 (r, 0, sp.oo)),
    (th, 0, sp.pi),
)
profile_norm2 = {2: sp.simplify(halfplane), 3: sp.simplify(sp.sqrt(sp.pi) * halfplane)}
profile_normalizer = {n: 1 / sp.sqrt(profile_norm2[n]) for n in (2, 3)}


# ---- raw h_{2m} ---------------------------------------------------------------


def h2m_raw(m: int, n: int):
    yn = y2 if n == 2 else y3
    tangential = (y1,) if n == 2 else (y1, y2)
    poly = sp.Integer(0)
    for yj in tangential:
        poly += 2 ** (2 * m) * sp.re(sp.expand((yj + sp.I * yn) ** (2 * m)))
    corr = sp.Integer(0)
    for l in range(m + 1):
        corr += (
            sp.Integer(-1) ** l
            / (sp.factorial(m - l) * sp.factorial(2 * l))
            * (2 * yn) ** (2 * l)
        )
    poly += sp.factorial(m) * corr
    return sp.expand(poly)


h2m_norms = {}
for m in (1, 2):
    for n in (2, 3):
        nrm2 = half_space_integral(h2m_raw(m, n) ** 2, n)
        h2m_norms[f"m{m}_n{n}"] = num(sp.sqrt(sp.simplify(nrm2)))


# ---- Hermite layer ------------------------------------------------------------


def hermite(k: int, var):
    return sp.hermite(k, var)


def p_alpha(alpha, n: int):
    cs = coords(n)
    prod = sp.Integer(1)
    for k, var in zip(alpha, cs):
        prod *= hermite(k, var)
    norm2 = half_space_integral(prod**2, n)
    return prod / sp.sqrt(norm2), sp.simplify(norm2)


SAMPLE_ALPHAS = {
    2: [(0, 0), (2, 0), (0, 2), (1, 0), (4, 0), (2, 2), (0, 4)],
    3: [(0, 0, 0), (2, 0, 0), (0, 0, 2), (1, 1, 0), (2, 2, 0), (0, 0, 4)],
}

hermite_normalizers = []
for n, alphas in SAMPLE_ALPHAS.items():
    for alpha in alphas:
        _, norm2 = p_alpha(alpha, n)
        hermite_normalizers.append(
            {"alpha": list(alpha) + [0] * (3 - len(alpha)), "n": n,
             "value": num(1 / sp.sqrt(norm2))}
        )

# drift Hermite relation, the backbone of all eigenvalue bookkeeping
ode_checks = []
for k in range(0, 9):
    H = hermite(k, x)
    residual = sp.simplify(sp.diff(H, x, 2) - 2 * x * sp.diff(H, x) + 2 * k * H)
    ode_checks.append({"k": k, "residual_zero": residual == 0})

# Weiss energy of a pure eigenfunction against its mass norm:
# (1/4) int |grad p|^2 dmu - (kappa/2) int p^2 dmu with kappa = 2m.
weiss_checks = []
for n, alphas in SAMPLE_ALPHAS.items():
    cs = coords(n)
    for alpha in alphas:
        if sum(alpha) % 2 == 1 or (alpha[-1] % 2) == 1:
            continue
        for m in (1, 2):
            p, _ = p_alpha(alpha, n)
            grad2 = sum(sp.diff(p, var) ** 2 for var in cs)
            W = sp.Rational(1, 4) * half_space_integral(grad2, n) - sp.Rational(
                m, 1
            ) * half_space_integral(p**2, n)
            W = sp.nsimplify(sp.simplify(W), rational=True)
            expected = sp.Rational(sum(alpha) - 2 * m, 2)
            weiss_checks.append(
                {
                    "alpha": list(alpha) + [0] * (3 - len(alpha)),
                    "n": n,
                    "m": m,
                    "w_over_norm2": str(W),
                    "matches_half_degree_shift": bool(sp.simplify(W - expected) == 0),
                }
            )

# ---- quadrature references ----------------------------------------------------

gauss_half_mass = {str(n): num(half_space_integral(sp.Integer(1), n)) for n in (2, 3)}
yn_moment = {
    "2": num(sp.sqrt(half_space_integral(y2**2, 2))),
    "3": num(sp.sqrt(half_space_integral(y3**2, 3))),
}

# ---- emit ----------------------------------------------------------------------

OUT.mkdir(parents=True, exist_ok=True)

normalizers = {
    "digits": DIGITS,
    "generator": "tools/oracles/gen_golden.py",
    "profile32_normalizer": {str(n): num(profile_normalizer[n]) for n in (2, 3)},
    "profile32_norm2_closed_form": {
        "2": str(profile_norm2[2]),
        "3": str(profile_norm2[3]),
    },
    "h2m_raw_l2mu": h2m_norms,
    "hermite_normalizer": hermite_normalizers,
    "gaussian_half_mass": gauss_half_mass,
    "yn_squared_moment_sqrt": yn_moment,
}

eigenrelation = {
    "generator": "tools/oracles/gen_golden.py",
    "ode": "H'' - 2 x H' = -2 k H",
    "drift_hermite": ode_checks,
    "weiss_eigen": weiss_checks,
}

for name, payload in (("normalizers.json", normalizers),
                      ("eigenrelation.json", eigenrelation)):
    path = OUT / name
    with open(path, "w", encoding="utf-8") as f:
        json.dump(payload, f, indent=2, sort_keys=True)
        f.write("\n")
    print(f"wrote {path}")

print("profile32 normalizer n=2:", normalizers["profile32_normalizer"]["2"])
print("profile32 normalizer n=3:", normalizers["profile32_normalizer"]["3"])
print("h2m raw norms:", json.dumps(h2m_norms, sort_keys=True))
