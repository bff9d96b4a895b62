"""Exact angular algebra: Wigner 3j symbols, Gaunt integrals, Legendre
polynomials, Gauss-Legendre rules and complex spherical harmonics.

All angular-momentum quantities here are exact up to floating-point
roundoff; the Gaunt table is precomputed eagerly and shared read-only.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

# log n! for n = 0..150, enough for j ~ 35 (we only need j <= 2*l_max + 2)
_LOG_FACT = np.array([math.lgamma(n + 1) for n in range(151)])


def _check_j_m(j, m, name):
    if j != int(j) or m != int(m):
        raise ValueError(f"{name}: quantum numbers must be integers, got j={j}, m={m}")
    if j < 0:
        raise ValueError(f"{name}: negative angular momentum j={j}")
    if abs(m) > j:
        raise ValueError(f"{name}: |m|={abs(m)} exceeds j={j}")


def wigner3j(j1: int, j2: int, j3: int, m1: int, m2: int, m3: int) -> float:
    """Wigner 3j coefficient via the Racah single-sum formula.

    Uses prefactored log-factorials; stable well beyond the j ~ 10 range
    needed here.  Returns exactly 0.0 when m1+m2+m3 != 0 or the triangle
    rule fails; raises on invalid (j, m) arguments.
    """
    _check_j_m(j1, m1, "wigner3j")
    _check_j_m(j2, m2, "wigner3j")
    _check_j_m(j3, m3, "wigner3j")
    if m1 + m2 + m3 != 0:
        return 0.0
    if j3 < abs(j1 - j2) or j3 > j1 + j2:
        return 0.0

    # triangle coefficient and m-dependent prefactor, in log scale
    log_delta = (
        _LOG_FACT[j1 + j2 - j3]
        + _LOG_FACT[j1 - j2 + j3]
        + _LOG_FACT[-j1 + j2 + j3]
        - _LOG_FACT[j1 + j2 + j3 + 1]
    )
    log_pref = (
        _LOG_FACT[j1 + m1] + _LOG_FACT[j1 - m1]
        + _LOG_FACT[j2 + m2] + _LOG_FACT[j2 - m2]
        + _LOG_FACT[j3 + m3] + _LOG_FACT[j3 - m3]
    )

    t_min = max(0, j2 - j3 - m1, j1 - j3 + m2)
    t_max = min(j1 + j2 - j3, j1 - m1, j2 + m2)
    total = 0.0
    for t in range(t_min, t_max + 1):
        log_term = (
            _LOG_FACT[t]
            + _LOG_FACT[j3 - j2 + t + m1]
            + _LOG_FACT[j3 - j1 + t - m2]
            + _LOG_FACT[j1 + j2 - j3 - t]
            + _LOG_FACT[j1 - t - m1]
            + _LOG_FACT[j2 - t + m2]
        )
        term = math.exp(0.5 * (log_delta + log_pref) - log_term)
        total += -term if t & 1 else term
    phase = -1.0 if (j1 - j2 - m3) & 1 else 1.0
    return phase * total


def gaunt(l: int, m: int, lam: int, mu: int, lp: int, mp: int) -> float:
    """Gaunt integral over conj(Y_l^m) * Y_lam^mu * Y_lp^mp.

    The bra harmonic is conjugated; the value is
    sqrt((2l+1)(2lam+1)(2lp+1)/4pi) * 3j(l,lam,lp;0,0,0)
    * 3j(l,lam,lp;-m,mu,mp) * (-1)^m, zero under selection-rule violation.
    """
    _check_j_m(l, m, "gaunt")
    _check_j_m(lam, mu, "gaunt")
    _check_j_m(lp, mp, "gaunt")
    if mu != m - mp:
        return 0.0
    if (l + lam + lp) & 1:
        return 0.0
    if lp < abs(l - lam) or lp > l + lam:
        return 0.0
    pref = math.sqrt((2 * l + 1) * (2 * lam + 1) * (2 * lp + 1) / (4.0 * math.pi))
    phase = -1.0 if m & 1 else 1.0
    return (
        phase
        * pref
        * wigner3j(l, lam, lp, 0, 0, 0)
        * wigner3j(l, lam, lp, -m, mu, mp)
    )


def legendre_p(lam: int, x):
    """Legendre polynomial P_lam(x) on [-1, 1] by upward recurrence.

    Accepts a scalar or ndarray argument.
    """
    if lam < 0 or lam != int(lam):
        raise ValueError(f"legendre_p: invalid degree {lam}")
    x = np.asarray(x, dtype=float)
    if np.any(np.abs(x) > 1.0 + 1e-14):
        raise ValueError("legendre_p: argument outside [-1, 1]")
    p_prev = np.ones_like(x)
    if lam == 0:
        return p_prev if p_prev.ndim else float(p_prev)
    p = x.copy()
    for n in range(1, lam):
        p, p_prev = ((2 * n + 1) * x * p - n * p_prev) / (n + 1), p
    return p if p.ndim else float(p)


def legendre_p_stack(lam_max: int, x) -> np.ndarray:
    """All P_0..P_lam_max at x, stacked along the first axis."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    out = np.empty((lam_max + 1,) + x.shape)
    out[0] = 1.0
    if lam_max >= 1:
        out[1] = x
    for n in range(1, lam_max):
        out[n + 1] = ((2 * n + 1) * x * out[n] - n * out[n - 1]) / (n + 1)
    return out


def gauss_legendre(n: int) -> tuple[np.ndarray, np.ndarray]:
    """n-point Gauss-Legendre rule on [-1, 1] (exact to degree 2n-1)."""
    if n < 1:
        raise ValueError("gauss_legendre: need n >= 1")
    return np.polynomial.legendre.leggauss(n)


def gauss_lobatto_points(n: int) -> np.ndarray:
    """n Gauss-Lobatto points on [-1, 1] (endpoints included, n >= 2)."""
    if n < 2:
        raise ValueError("gauss_lobatto_points: need n >= 2")
    if n == 2:
        return np.array([-1.0, 1.0])
    interior = np.polynomial.legendre.Legendre.basis(n - 1).deriv().roots()
    return np.concatenate(([-1.0], np.sort(interior.real), [1.0]))


# ---------------------------------------------------------------------------
# spherical harmonics (complex, Condon-Shortley phase)
# ---------------------------------------------------------------------------

def _norm_assoc_legendre(l_max: int, x: np.ndarray) -> np.ndarray:
    """Fully normalized associated Legendre values N_l^m P_l^m(x) for
    0 <= m <= l <= l_max, such that Y_l^m = out[l, m] * exp(i m phi).

    Shape (l_max+1, l_max+1) + x.shape; entries with m > l are zero.
    """
    x = np.asarray(x, dtype=float)
    s = np.sqrt(np.clip(1.0 - x * x, 0.0, None))
    out = np.zeros((l_max + 1, l_max + 1) + x.shape)
    out[0, 0] = 1.0 / math.sqrt(4.0 * math.pi)
    for m in range(1, l_max + 1):
        # Condon-Shortley: each step brings a factor -sqrt((2m+1)/(2m)) sin(theta)
        out[m, m] = -math.sqrt((2 * m + 1) / (2.0 * m)) * s * out[m - 1, m - 1]
    for m in range(0, l_max):
        out[m + 1, m] = math.sqrt(2 * m + 3.0) * x * out[m, m]
    for m in range(0, l_max + 1):
        for l in range(m + 2, l_max + 1):
            a = math.sqrt((4.0 * l * l - 1.0) / (l * l - m * m))
            b = math.sqrt(((l - 1.0) ** 2 - m * m) / (4.0 * (l - 1.0) ** 2 - 1.0))
            out[l, m] = a * (x * out[l - 1, m] - b * out[l - 2, m])
    return out


def sph_harm_lm(l: int, m: int, theta, phi):
    """Complex spherical harmonic Y_l^m(theta, phi), vectorized."""
    _check_j_m(l, m, "sph_harm_lm")
    theta = np.asarray(theta, dtype=float)
    phi = np.asarray(phi, dtype=float)
    plm = _norm_assoc_legendre(l, np.cos(theta))[l, abs(m)]
    val = plm * np.exp(1j * abs(m) * phi)
    if m < 0:
        val = np.conj(val) * (-1.0 if m & 1 else 1.0)
    return val if val.ndim else complex(val)


def sph_harm_stack(l_max: int, theta, phi) -> np.ndarray:
    """Y_l^m for every channel (l, m) with l <= l_max, channel-ordered.

    Returns a complex array of shape (n_channels,) + broadcast shape, with
    channels in the same lexicographic (l, m) order used by the assembly.
    """
    theta = np.asarray(theta, dtype=float)
    phi = np.asarray(phi, dtype=float)
    plm = _norm_assoc_legendre(l_max, np.cos(theta))
    expi = np.stack([np.exp(1j * m * phi) for m in range(l_max + 1)])
    out = np.empty((count_channels(l_max),) + theta.shape, dtype=complex)
    for idx, ch in enumerate(channels(l_max)):
        am = abs(ch.m)
        val = plm[ch.l, am] * expi[am]
        if ch.m < 0:
            val = np.conj(val) * (-1.0 if am & 1 else 1.0)
        out[idx] = val
    return out


# ---------------------------------------------------------------------------
# channels and the Gaunt table
# ---------------------------------------------------------------------------

@dataclass(frozen=True, order=True)
class AngularChannel:
    """One (l, m) partial-wave channel."""

    l: int
    m: int

    def __post_init__(self):
        _check_j_m(self.l, self.m, "AngularChannel")


def channels(l_max: int) -> list[AngularChannel]:
    """All (l, m) channels with l <= l_max, lexicographic, m from -l to l."""
    return [AngularChannel(l, m) for l in range(l_max + 1) for m in range(-l, l + 1)]


def count_channels(l_max: int) -> int:
    return (l_max + 1) ** 2


@dataclass(frozen=True)
class GauntTable:
    """Dense table of all selection-rule-allowed Gaunt coefficients with
    l, l' <= l_max and lambda <= 2*l_max.

    Keys are (l, m, lam, mu, lp, mp); entries violating the selection
    rules are omitted (lookup returns 0.0).
    """

    l_max: int
    lambda_max: int
    coefficients: dict = field(repr=False)

    def get(self, l, m, lam, mu, lp, mp) -> float:
        return self.coefficients.get((l, m, lam, mu, lp, mp), 0.0)

    def __len__(self):
        return len(self.coefficients)

    def coupling_matrix(self, lam: int, mu_weights: dict) -> np.ndarray:
        """Channel-coupling matrix C[i, j] = sum_mu w_mu G(li,mi; lam,mu; lj,mj)."""
        chs = channels(self.l_max)
        n = len(chs)
        out = np.zeros((n, n), dtype=complex)
        for i, a in enumerate(chs):
            for j, b in enumerate(chs):
                mu = a.m - b.m
                w = mu_weights.get(mu)
                if w is None:
                    continue
                g = self.get(a.l, a.m, lam, mu, b.l, b.m)
                if g != 0.0:
                    out[i, j] = w * g
        if np.allclose(out.imag, 0.0):
            return out.real.copy()
        return out


def build_gaunt_table(l_max: int) -> GauntTable:
    """Precompute every allowed Gaunt coefficient for the given basis size."""
    if l_max < 0:
        raise ValueError("build_gaunt_table: l_max must be >= 0")
    lam_max = 2 * l_max
    coeffs = {}
    for l in range(l_max + 1):
        for lp in range(l_max + 1):
            for lam in range(abs(l - lp), min(l + lp, lam_max) + 1):
                if (l + lam + lp) & 1:
                    continue
                for m in range(-l, l + 1):
                    for mp in range(-lp, lp + 1):
                        mu = m - mp
                        if abs(mu) > lam:
                            continue
                        coeffs[(l, m, lam, mu, lp, mp)] = gaunt(l, m, lam, mu, lp, mp)
    return GauntTable(l_max=l_max, lambda_max=lam_max, coefficients=coeffs)
