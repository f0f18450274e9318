"""
Special functions behind the fitted distributions: log-gamma, regularized
incomplete gamma, error function, normal and gamma quantiles and the
Kolmogorov survival function.

All functions broadcast over numpy arrays and return a float for scalar input.
Incomplete gamma follows the classic series / continued-fraction split at
x = a + 1 (Numerical Recipes, ch. 6), with the continued fraction evaluated by
the modified Lentz method.
"""
import math

import numpy as np

from errors import InputError

EPS = 1e-15
FPMIN = 1e-300
MAX_ITERATIONS = 10_000

_LANCZOS_G = 7.0
_LANCZOS_COEFFICIENTS = (
    0.99999999999980993,
    676.5203681218851,
    -1259.1392167224028,
    771.32342877765313,
    -176.61502916214059,
    12.507343278686905,
    -0.13857109526572012,
    9.9843695780195716e-6,
    1.5056327351493116e-7,
)
_HALF_LOG_2PI = 0.5 * math.log(2.0 * math.pi)


def _flatten(*values):
    """Broadcast the inputs together and return (shape, writable 1-D float copies)."""
    arrays = [np.asarray(v, dtype=float) for v in values]
    shape = np.broadcast_shapes(*(a.shape for a in arrays))
    return shape, [np.broadcast_to(a, shape).reshape(-1).copy() for a in arrays]


def _finish(out: np.ndarray, shape):
    out = out.reshape(shape)
    return float(out) if out.ndim == 0 else out


def _ln_gamma_lanczos(x: np.ndarray) -> np.ndarray:
    z = x - 1.0
    series = np.full_like(z, _LANCZOS_COEFFICIENTS[0])
    for i, coefficient in enumerate(_LANCZOS_COEFFICIENTS[1:], start=1):
        series += coefficient / (z + i)
    t = z + _LANCZOS_G + 0.5
    return _HALF_LOG_2PI + (z + 0.5) * np.log(t) - t + np.log(series)


def _ln_gamma(x: np.ndarray) -> np.ndarray:
    out = np.empty_like(x)
    low = x < 0.5
    out[~low] = _ln_gamma_lanczos(x[~low])
    if np.any(low):
        xl = x[low]
        with np.errstate(divide="ignore"):
            out[low] = np.log(np.pi / np.abs(np.sin(np.pi * xl))) - _ln_gamma_lanczos(1.0 - xl)
    return out


def ln_gamma(x):
    """ln|Gamma(x)|, Lanczos approximation with the reflection formula below 1/2."""
    shape, (x,) = _flatten(x)
    return _finish(_ln_gamma(x), shape)


def _log_prefactor(a: np.ndarray, x: np.ndarray) -> np.ndarray:
    return a * np.log(x) - x - _ln_gamma(a)


def _lower_series(a: np.ndarray, x: np.ndarray) -> np.ndarray:
    """P(a, x) by its power series, valid for x < a + 1."""
    ap = a.copy()
    term = 1.0 / a
    total = term.copy()
    for _ in range(MAX_ITERATIONS):
        ap += 1.0
        term *= x / ap
        total += term
        if np.all(np.abs(term) < np.abs(total) * EPS):
            break
    else:
        raise ArithmeticError("Incomplete gamma series did not converge")
    return total * np.exp(_log_prefactor(a, x))


def _upper_continued_fraction(a: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Q(a, x) by its continued fraction, valid for x >= a + 1."""
    b = x + 1.0 - a
    c = np.full_like(x, 1.0 / FPMIN)
    d = 1.0 / b
    h = d.copy()
    for i in range(1, MAX_ITERATIONS + 1):
        an = -i * (i - a)
        b = b + 2.0
        d = an * d + b
        d = np.where(np.abs(d) < FPMIN, FPMIN, d)
        c = b + an / c
        c = np.where(np.abs(c) < FPMIN, FPMIN, c)
        d = 1.0 / d
        delta = d * c
        h = h * delta
        if np.all(np.abs(delta - 1.0) < EPS):
            break
    else:
        raise ArithmeticError("Incomplete gamma continued fraction did not converge")
    return np.exp(_log_prefactor(a, x)) * h


def _gamma_pq(a: np.ndarray, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    if np.any(a <= 0):
        raise InputError("Incomplete gamma needs a positive shape parameter")
    p = np.zeros(a.shape)
    q = np.ones(a.shape)

    nan = np.isnan(x) | np.isnan(a)
    p[nan] = np.nan
    q[nan] = np.nan
    inf = np.isposinf(x)
    p[inf] = 1.0
    q[inf] = 0.0

    interior = (x > 0) & np.isfinite(x) & ~nan
    series = interior & (x < a + 1.0)
    fraction = interior & ~series
    if np.any(series):
        p[series] = _lower_series(a[series], x[series])
        q[series] = 1.0 - p[series]
    if np.any(fraction):
        q[fraction] = _upper_continued_fraction(a[fraction], x[fraction])
        p[fraction] = 1.0 - q[fraction]
    return p, q


def gamma_pq(a, x) -> tuple[np.ndarray, np.ndarray]:
    """
    Both regularized incomplete gammas (P, Q), each computed where it is accurate
    and the other taken as its complement.

    x <= 0 gives (0, 1) and x = inf gives (1, 0). NaN propagates.

    Raises:
        InputError: a <= 0
    """
    shape, (a, x) = _flatten(a, x)
    p, q = _gamma_pq(a, x)
    return p.reshape(shape), q.reshape(shape)


def gamma_p(a, x):
    """Regularized lower incomplete gamma P(a, x)."""
    p, _ = gamma_pq(a, x)
    return _finish(p, p.shape)


def gamma_q(a, x):
    """Regularized upper incomplete gamma Q(a, x) = 1 - P(a, x)."""
    _, q = gamma_pq(a, x)
    return _finish(q, q.shape)


def erf(x):
    shape, (x,) = _flatten(x)
    p, _ = _gamma_pq(np.full_like(x, 0.5), x * x)
    return _finish(np.sign(x) * p, shape)


def erfc(x):
    shape, (x,) = _flatten(x)
    p, q = _gamma_pq(np.full_like(x, 0.5), x * x)
    return _finish(np.where(x >= 0, q, 1.0 + p), shape)


def _normal_cdf(z: np.ndarray) -> np.ndarray:
    w = -z / math.sqrt(2.0)
    p, q = _gamma_pq(np.full_like(w, 0.5), w * w)
    return 0.5 * np.where(w >= 0, q, 1.0 + p)


def normal_cdf(z):
    """Standard normal CDF, Phi(z) = erfc(-z / sqrt 2) / 2."""
    shape, (z,) = _flatten(z)
    return _finish(_normal_cdf(z), shape)


def normal_pdf(z):
    shape, (z,) = _flatten(z)
    return _finish(np.exp(-0.5 * z * z - _HALF_LOG_2PI), shape)


# Acklam's rational approximation to the normal quantile
_A = (-3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02,
      1.383577518672690e+02, -3.066479806614716e+01, 2.506628277459239e+00)
_B = (-5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
      6.680131188771972e+01, -1.328068155288572e+01)
_C = (-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
      -2.549732539343734e+00, 4.374664141464968e+00, 2.938163982698783e+00)
_D = (7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
      3.754408661907416e+00)
_P_LOW = 0.02425


def _lower_half_quantile(p: np.ndarray) -> np.ndarray:
    """Phi^-1(p) for 0 < p <= 1/2, one Halley step after the rational start."""
    x = np.empty_like(p)
    tail = p < _P_LOW
    if np.any(tail):
        q = np.sqrt(-2.0 * np.log(p[tail]))
        x[tail] = ((((((_C[0] * q + _C[1]) * q + _C[2]) * q + _C[3]) * q + _C[4]) * q + _C[5])
                   / ((((_D[0] * q + _D[1]) * q + _D[2]) * q + _D[3]) * q + 1.0))
    central = ~tail
    if np.any(central):
        q = p[central] - 0.5
        r = q * q
        x[central] = ((((((_A[0] * r + _A[1]) * r + _A[2]) * r + _A[3]) * r + _A[4]) * r + _A[5]) * q
                      / (((((_B[0] * r + _B[1]) * r + _B[2]) * r + _B[3]) * r + _B[4]) * r + 1.0))

    error = _normal_cdf(x) - p
    with np.errstate(over="ignore", invalid="ignore"):
        u = error * math.sqrt(2.0 * math.pi) * np.exp(0.5 * x * x)
        refined = x - u / (1.0 + 0.5 * x * u)
    return np.where(np.isfinite(refined), refined, x)


def _normal_quantile(u: np.ndarray) -> np.ndarray:
    if np.any(np.isnan(u) | (u < 0) | (u > 1)):
        raise InputError("Quantile levels must lie in [0, 1]")
    upper = u > 0.5
    # 1 - u is exact for u in [1/2, 1]
    p = np.where(upper, 1.0 - u, u)
    out = np.full(u.shape, -np.inf)
    inside = p > 0
    if np.any(inside):
        out[inside] = _lower_half_quantile(p[inside])
    return np.where(upper, -out, out)


def normal_quantile(u):
    """
    Inverse standard normal CDF; u = 0 and u = 1 map to -inf and +inf.

    Raises:
        InputError: u outside [0, 1] or NaN
    """
    shape, (u,) = _flatten(u)
    return _finish(_normal_quantile(u), shape)


def _gamma_log_pdf(a: np.ndarray, x: np.ndarray) -> np.ndarray:
    out = np.full(a.shape, -np.inf)
    positive = x > 0
    xp, ap = x[positive], a[positive]
    out[positive] = (ap - 1.0) * np.log(xp) - xp - _ln_gamma(ap)
    return out


def gamma_log_pdf(a, x):
    """ln of the unit-scale gamma density; -inf for x <= 0."""
    shape, (a, x) = _flatten(a, x)
    return _finish(_gamma_log_pdf(a, x), shape)


def gamma_quantile(a, u, max_iterations: int = 200):
    """
    Inverse of P(a, .) for the unit-scale gamma.

    Starts from the Wilson-Hilferty approximation and refines with Newton steps
    kept inside a shrinking bracket; a step that leaves the bracket falls back to
    bisection. Upper-tail levels are solved against Q so tail quantiles keep their
    accuracy.
    """
    shape, (a, u) = _flatten(a, u)
    if np.any(a <= 0):
        raise InputError("Gamma quantile needs a positive shape parameter")
    if np.any(np.isnan(u) | (u < 0) | (u > 1)):
        raise InputError("Quantile levels must lie in [0, 1]")

    out = np.where(u >= 1.0, np.inf, 0.0)
    solve = (u > 0) & (u < 1)
    if not np.any(solve):
        return _finish(out, shape)
    a_s, u_s = a[solve], u[solve]
    upper = u_s > 0.5
    target = np.where(upper, 1.0 - u_s, u_s)

    z = _normal_quantile(u_s)
    c = 1.0 / (9.0 * a_s)
    x = a_s * (1.0 - c + z * np.sqrt(c)) ** 3
    small = np.exp((np.log(u_s) + _ln_gamma(a_s + 1.0)) / a_s)
    x = np.where((x <= 0) | (a_s < 1.0), small, x)

    lo = np.zeros_like(x)
    hi = np.maximum(x, a_s) * 2.0 + 1.0
    for _ in range(MAX_ITERATIONS):
        short = _gamma_pq(a_s, hi)[0] < u_s
        if not np.any(short):
            break
        hi = np.where(short, hi * 2.0, hi)
    x = np.clip(x, lo, hi)

    for _ in range(max_iterations):
        p, q = _gamma_pq(a_s, x)
        # increasing in x on both branches
        f = np.where(upper, target - q, p - target)
        lo = np.where(f < 0, x, lo)
        hi = np.where(f > 0, x, hi)
        density = np.exp(_gamma_log_pdf(a_s, x))
        with np.errstate(divide="ignore", invalid="ignore"):
            newton = x - f / density
        inside = np.isfinite(newton) & (newton > lo) & (newton < hi)
        x_new = np.where(inside, newton, 0.5 * (lo + hi))
        x_new = np.where(f == 0, x, x_new)
        done = np.abs(x_new - x) <= 4 * np.finfo(float).eps * np.abs(x_new)
        x = x_new
        if np.all(done):
            break

    out[solve] = x
    return _finish(out, shape)


def kolmogorov_sf(lam):
    """
    Survival function of the Kolmogorov distribution,
    Q(lam) = 2 sum_{j>=1} (-1)^(j-1) exp(-2 j^2 lam^2).

    The alternating series converges slowly for small lam, so below 1.18 the
    equivalent theta-function form 1 - sqrt(2 pi)/lam sum exp(-(2j-1)^2 pi^2 / (8 lam^2))
    is used.
    """
    shape, (lam,) = _flatten(lam)
    out = np.ones(lam.shape)
    positive = lam > 0
    small = positive & (lam < 1.18)
    large = positive & ~small

    if np.any(small):
        ls = lam[small]
        j = np.arange(1, 21)[:, None]
        terms = np.exp(-((2 * j - 1) ** 2) * np.pi ** 2 / (8.0 * ls * ls))
        out[small] = 1.0 - math.sqrt(2.0 * math.pi) / ls * terms.sum(axis=0)
    if np.any(large):
        ll = lam[large]
        j = np.arange(1, 101)[:, None]
        signs = np.where(j % 2 == 1, 1.0, -1.0)
        out[large] = 2.0 * (signs * np.exp(-2.0 * j * j * ll * ll)).sum(axis=0)
    return _finish(np.clip(out, 0.0, 1.0), shape)
