"""Independently coded second evaluations used by the dual-implementation
tests.

Everything here is written flat from the closed-form displays, takes raw
numbers (norms, measures, Poincare values) rather than package types, and
runs on its own gamma algorithm (argument-shifted Stirling series), so a slip
in the production composition cannot cancel against the same slip here.
"""

import math

# Bernoulli numbers B_2, B_4, ..., B_18 for the Stirling tail
_BERN = (1.0 / 6, -1.0 / 30, 1.0 / 42, -1.0 / 30, 5.0 / 66,
         -691.0 / 2730, 7.0 / 6, -3617.0 / 510, 43867.0 / 798)


def stirling_gamma(x):
    """Gamma via upshifted Stirling series; independent of math.gamma."""
    shift = 0
    y = x
    while y < 12.0:
        y += 1.0
        shift += 1
    s = (y - 0.5) * math.log(y) - y + 0.5 * math.log(2.0 * math.pi)
    ypow = y
    for k, b in enumerate(_BERN, start=1):
        s += b / ((2 * k) * (2 * k - 1) * ypow)
        ypow *= y * y
    g = math.exp(s)
    for j in range(shift):
        g /= (x + j)
    return g


def stirling_lgamma(x):
    shift = 0
    y = x
    while y < 12.0:
        y += 1.0
        shift += 1
    s = (y - 0.5) * math.log(y) - y + 0.5 * math.log(2.0 * math.pi)
    ypow = y
    for k, b in enumerate(_BERN, start=1):
        s += b / ((2 * k) * (2 * k - 1) * ypow)
        ypow *= y * y
    for j in range(shift):
        s -= math.log(x + j)
    return s


def o_sobolev_best(q, n):
    return (math.pi ** -0.5 * n ** (-1.0 / q)
            * ((q - 1.0) / (n - q)) ** (1.0 - 1.0 / q)
            * (stirling_gamma(1.0 + n / 2.0) * stirling_gamma(float(n))
               / (stirling_gamma(n / q) * stirling_gamma(1.0 + n - n / q))) ** (1.0 / n))


def o_trace_best(q, n):
    return (math.pi ** ((1.0 - q) / 2.0)
            * ((q - 1.0) / (n - q)) ** (q - 1.0)
            * math.exp((stirling_lgamma(q * (n - 1.0) / (2.0 * (q - 1.0)))
                        - stirling_lgamma((n - 1.0) / (2.0 * (q - 1.0))))
                       * (q - 1.0) / (n - 1.0)))


def o_sobolev_limit(n):
    return math.pi ** -0.5 / n * stirling_gamma(1.0 + n / 2.0) ** (1.0 / n)


def o_combined(q, ell, n, P, gam):
    """(S_{q,ell}, K_{q,ell}) from raw inputs; q = 1 uses the limit constants."""
    if q == 1.0:
        s, k = o_sobolev_limit(n), 1.0
    else:
        s, k = o_sobolev_best(q, n), o_trace_best(q, n)
    factor = max(1.0 + P * 2.0 ** ((n - 1.0) * (1.0 - 1.0 / q)),
                 P * gam ** (1.0 / q - 1.0 / ell))
    return s * factor, k * factor


def o_tail_partial(chi, terms=64):
    return math.fsum(m * chi ** (-m) for m in range(terms))


# ---------------------------------------------------------------------------
# energy family
# ---------------------------------------------------------------------------


def o_energy_coeffs(n, ell, t, s, vol, P, gam):
    """Coefficient pairs (cF_f, cF_g), (cH_f, cH_g) of the source maps."""
    if n > 2:
        S, K = o_combined(2.0, ell, n, P, gam)
        return (S, K), (S, K)
    Kg = o_combined(2.0 * s / (2.0 * s - 1.0), ell, n, P, gam)[1]
    if t < 2.0:
        Sf = o_combined(2.0 * t / (3.0 * t - 2.0), ell, n, P, gam)[0]
        cH = (Sf, Kg)
        cF = (Sf * vol ** (1.0 - 1.0 / t), Kg * vol ** ((s - 1.0) / (2.0 * s)))
        return cF, cH
    S1 = o_combined(1.0, ell, n, P, gam)[0]
    cH = (S1 * vol ** (0.5 - 1.0 / t), Kg)
    cF = (S1 * vol ** (1.0 - 1.0 / t), Kg * vol ** ((s - 1.0) / (2.0 * s)))
    return cF, cH


def o_energy_A(n, ell, a, b, vol, P, gam, fvec2, f_t, t, g_s, s, h_dual):
    cF, cH = o_energy_coeffs(n, ell, t, s, vol, P, gam)
    lp = ell / (ell - 1.0)
    return (1.0 / (2.0 * a) * (fvec2 + cF[0] * f_t + cF[1] * g_s) ** 2
            + (ell - 1.0) / (ell * b ** (1.0 / (ell - 1.0)))
            * (h_dual + cH[0] * f_t + cH[1] * g_s) ** lp)


def o_energy_A_ls(n, ell, a, b, vol, P, gam, fvec2, f_t, t, g_s, s, h_s):
    cF, cH = o_energy_coeffs(n, ell, t, s, vol, P, gam)
    lp = ell / (ell - 1.0)
    gh = g_s + h_s
    return (1.0 / (2.0 * a) * (fvec2 + cF[0] * f_t + cF[1] * gh) ** 2
            + (ell - 1.0) / (ell * b ** (1.0 / (ell - 1.0)))
            * (cH[0] * f_t + cH[1] * gh) ** lp)


def o_corollary_norms(n, ell, a, b, vol, P, gam, a_script, p, s):
    lp = ell / (ell - 1.0)
    grad = math.sqrt(2.0 * a_script / a)
    tr = (lp * a_script / b) ** (1.0 / ell)
    qS = 2.0 * p * n / (2.0 * p + n * (p - 2.0))
    qK = 2.0 * s * n / (2.0 * s + (n - 1.0) * (s - 1.0))
    Si = o_combined(qS, ell, n, P, gam)[0]
    Ki = o_combined(qK, ell, n, P, gam)[1]
    return (Si * (vol ** (1.0 / n - 1.0 / p) * grad + tr),
            Ki * (vol ** ((s - n + 1.0) / (2.0 * n * s)) * grad + tr))


# ---------------------------------------------------------------------------
# level-set family
# ---------------------------------------------------------------------------


def o_C_npr(n, p, r, P, gam, f_norm, g_norm):
    pp = p / (p - 1.0)
    rp = r / (r - 1.0)
    S, K = o_combined(pp, rp, n, P, gam)
    return S * f_norm + K * g_norm


def o_kappa(n, q, delta, vol, bdry):
    Q = 2.0 * (n - 1.0) / (n - 2.0 - 2.0 * (n - 1.0) * delta)
    return (2.0 ** ((n - 2.0) / (n - 2.0 - 2.0 * (n - 1.0) * delta))
            * (Q / (Q - q)) ** (1.0 / q)
            * (vol ** (1.0 / q - 1.0 / Q) + bdry ** (1.0 / q - 1.0 / Q))), Q


def o_B_script(n, p, r, a, b, vol, gam, P, fvec_p, h_r, c_npr):
    delta = min(0.5 - 1.0 / p, 0.5 - 1.0 / r)
    S, K = o_combined(2.0, 2.0, n, P, gam)
    lead = vol ** ((n - 2.0) / (2.0 * (n - 1.0) * n)) * S + K
    rt = 1.0 / math.sqrt(a * b)
    return lead * ((1.0 / a + rt) * (fvec_p + c_npr) * vol ** (0.5 - 1.0 / p - delta)
                   + (1.0 / b + rt) * (h_r + c_npr) * gam ** (0.5 - 1.0 / r - delta))


def o_lq_total(n, p, r, q, a, b, vol, gam, bdry, P, fvec_p, h_r, c_npr, excess):
    delta = min(0.5 - 1.0 / p, 0.5 - 1.0 / r)
    kq, Q = o_kappa(n, q, delta, vol, bdry)
    bs = o_B_script(n, p, r, a, b, vol, gam, P, fvec_p, h_r, c_npr)
    return kq * (bs + 2.0 * excess ** ((n - 2.0) / (2.0 * (n - 1.0)) - delta))


def o_Z_script(n, p, r, a, b, vol, gam, P, fvec_p, h_r, c_npr, alpha=None):
    gamma = min(0.5 - 1.0 / p, (0.5 - 1.0 / r) * (n - 1.0) / n)
    rt = 1.0 / math.sqrt(a * b)
    if n > 2:
        S, K = o_combined(2.0, 2.0, n, P, gam)
        return (S + K) * ((1.0 / a + rt) * (fvec_p + c_npr)
                          * vol ** (0.5 - 1.0 / p - gamma)
                          + (1.0 / b + rt) * (h_r + c_npr)
                          * gam ** (0.5 - 1.0 / r - gamma * n / (n - 1.0)))
    S, K = o_combined(1.0, 1.0, n, P, gam)
    va = vol ** (1.0 / (2.0 * alpha))
    return (S + K) * ((va / a + rt) * (fvec_p + c_npr) * vol ** (0.5 - 1.0 / p - gamma)
                      + (1.0 / b + va * rt) * (h_r + c_npr)
                      * gam ** (0.5 - 1.0 / r - 2.0 * gamma))


def o_degiorgi_bound(n, p, r, a, b, vol, gam, bdry, P, fvec_p, h_r, c_npr, alpha=None):
    gamma = min(0.5 - 1.0 / p, (0.5 - 1.0 / r) * (n - 1.0) / n)
    z = o_Z_script(n, p, r, a, b, vol, gam, P, fvec_p, h_r, c_npr, alpha)
    meas = vol + bdry
    if n > 2:
        e = gamma - 0.5 + 1.0 / n
        return 1.0 + 2.0 ** (gamma / e) * meas ** e * z
    ag = alpha * gamma
    return 1.0 + 2.0 ** ((ag + 0.5) / (ag - 0.5)) * meas ** (gamma - 1.0 / (2.0 * alpha)) * z


def o_Z_homog(n, p, P, gam, alpha=None):
    if n > 2:
        S, K = o_combined(2.0, 2.0, n, P, gam)
        return (S + K) * 2.0 ** (n * (p - 2.0) / (2.0 * (p - n)))
    S, K = o_combined(1.0, 1.0, n, P, gam)
    return (S + K) * 2.0 ** (((alpha + 1.0) / 2.0 - 1.0 / p)
                             / ((alpha - 1.0) / 2.0 - 1.0 / p))


# ---------------------------------------------------------------------------
# Moser family
# ---------------------------------------------------------------------------


def o_E_script(a, b, fvec_p, f_half):
    return math.sqrt((fvec_p ** 2 / a + 2.0 * f_half) / min(a, b))


def o_E_n(n, p, chi, vol, gam, P):
    if n > 2:
        return o_combined(2.0, 2.0, n, P, gam)[0] ** (chi / (chi - 1.0))
    m = 2.0 * p * chi / (p * (chi + 1.0) - 2.0)
    S = o_combined(m, m, n, P, gam)[0]
    return (S ** (chi / (chi - 1.0))
            * max(vol, gam) ** ((p - 2.0) / (2.0 * p * (chi - 1.0))))


def o_moser_bound(n, p, chi, a, b, vol, gam, P, fvec_p, f_half, u_norm):
    e = o_E_script(a, b, fvec_p, f_half)
    tail = chi / (chi - 1.0) ** 2
    return (o_E_n(n, p, chi, vol, gam, P) * chi ** tail
            * (math.sqrt(2.0) * e) ** (chi / (chi - 1.0)) * u_norm)


def o_G_script(a, b, g_s, h_s):
    return math.sqrt((g_s + h_s) / min(a, b))


def o_G_n(n, s, chi, vol, gam, P):
    if n > 2:
        return o_combined(2.0, 2.0, n, P, gam)[1] ** (chi / (chi - 1.0))
    m = 4.0 * s * chi / (2.0 * s * chi + s - 1.0)
    K = o_combined(m, m, n, P, gam)[1]
    return (K ** (chi / (chi - 1.0))
            * max(vol, gam) ** ((s - 1.0) / (4.0 * s * (chi - 1.0))))


def o_boundary_bound(n, s, chi, a, b, vol, gam, P, g_s, h_s, u_trace):
    g = o_G_script(a, b, g_s, h_s)
    tail = chi / (chi - 1.0) ** 2
    return (o_G_n(n, s, chi, vol, gam, P) * chi ** tail
            * (math.sqrt(2.0) * g) ** (chi / (chi - 1.0)) * u_trace)


def o_C_infinity(n, p, chi, ell, a, b, vol, gam, P):
    tail = chi / (chi - 1.0) ** 2
    lp = ell / (ell - 1.0)
    qS = 2.0 * p * n / (2.0 * p + n * (p - 2.0))
    Si = o_combined(qS, ell, n, P, gam)[0]
    return (o_E_n(n, p, chi, vol, gam, P) * chi ** tail
            * (2.0 / (a * min(a, b))) ** (chi / (2.0 * (chi - 1.0)))
            * Si * (vol ** (1.0 / n - 2.0 / p + 0.5) / a
                    + (lp * vol ** (1.0 - 1.0 / p) / (2.0 * a * b)) ** (1.0 / ell)))


# ---------------------------------------------------------------------------
# linear Robin-Neumann
# ---------------------------------------------------------------------------


def o_L_n(n, t, ell, vol, P, gam):
    if n > 2:
        return 2.0 * o_combined(2.0, ell, n, P, gam)[0]
    if t < 2.0:
        return (vol ** (1.0 - 1.0 / t) + 1.0) \
            * o_combined(2.0 * t / (3.0 * t - 2.0), ell, n, P, gam)[0]
    return (vol ** 0.5 + 1.0) * vol ** (0.5 - 1.0 / t) \
        * o_combined(1.0, ell, n, P, gam)[0]


def o_M_n(n, s, ell, vol, P, gam):
    if n > 2:
        return 2.0 * o_combined(2.0, ell, n, P, gam)[1]
    return (vol ** ((s - 1.0) / (2.0 * s)) + 1.0) \
        * o_combined(2.0 * s / (2.0 * s - 1.0), ell, n, P, gam)[1]


def o_Xi1(n, p, chi, ell, vol, gam, P):
    tail = chi / (chi - 1.0) ** 2
    qS = 2.0 * p * n / (2.0 * p + n * (p - 2.0))
    Si = o_combined(qS, ell, n, P, gam)[0]
    return (o_E_n(n, p, chi, vol, gam, P) * chi ** tail
            * math.sqrt(2.0) ** (chi / (chi - 1.0))
            * Si * (vol ** ((p - n) / (n * p)) + 1.0))


def o_Xi2(n, s, chi, ell, vol, gam, P):
    tail = chi / (chi - 1.0) ** 2
    qK = 2.0 * s * n / (2.0 * s + (n - 1.0) * (s - 1.0))
    Ki = o_combined(qK, ell, n, P, gam)[1]
    return (o_G_n(n, s, chi, vol, gam, P) * chi ** tail
            * math.sqrt(2.0) ** (chi / (chi - 1.0))
            * Ki * (vol ** ((s - n + 1.0) / (2.0 * n * s)) + 1.0))


def o_linear_rn(n, p, s, t, chi1, chi2, a, b_star, vol, gam, P,
                fvec_p, fvec_2, f_half, f_t, g_s, h_s):
    mn = min(a, b_star)
    ell = 2.0
    t1 = (o_Xi1(n, p, chi1, ell, vol, gam, P)
          * ((fvec_p ** 2 / a + 2.0 * f_half) / mn) ** (chi1 / (2.0 * (chi1 - 1.0)))
          * (fvec_2 + o_L_n(n, t, ell, vol, P, gam) * f_t) / mn)
    gh = g_s + h_s
    t2 = (o_Xi2(n, s, chi2, ell, vol, gam, P)
          * (gh / mn) ** (chi2 / (2.0 * (chi2 - 1.0)))
          * o_M_n(n, s, ell, vol, P, gam) * gh / mn)
    return t1 + t2


# ---------------------------------------------------------------------------
# L^1 data, Green, duality
# ---------------------------------------------------------------------------


def o_l1_bounds(ell, b_low, b_high, gam, c_inf, f1, g1, h1):
    sig = f1 + g1 + h1
    grad = c_inf * (gam * (1.0 + b_high) + sig + (1.0 + b_high) * sig / b_low)
    trace = (gam + sig / b_low) ** (1.0 / (ell - 1.0))
    return grad, trace


def o_green_bounds(ell, b_low, b_high, gam, c_inf):
    return (c_inf * (1.0 + (1.0 + b_high) * (gam + 1.0 / b_low)),
            (gam + 1.0 / b_low) ** (1.0 / (ell - 1.0)))


def o_M_script_q(n, q, vol, bdry, P, gam):
    S22, K22 = o_combined(2.0, 2.0, n, P, gam)
    K11 = o_combined(1.0, 1.0, n, P, gam)[1]
    return (vol ** ((n - 2.0) / (2.0 * (n - 1.0) * n)) * S22 + K22
            + 2.0 * vol ** (1.0 / q - 0.5)
            * (S22 * (vol ** (0.5 + 1.0 / n) + bdry ** (0.5 + 1.0 / n))
               + K11 * (vol ** 0.5 + bdry ** 0.5)))


def o_duality_bound(n, t, s, q, a, vol, bdry, P, gam, f_t, g_s, h_s):
    qp = q / (q - 1.0)
    delta = 0.5 - 1.0 / qp
    kt, _ = o_kappa(n, t / (t - 1.0), delta, vol, bdry)
    ks, _ = o_kappa(n, s / (s - 1.0), delta, vol, bdry)
    mq = o_M_script_q(n, q, vol, bdry, P, gam)
    return mq * (1.0 / a + 1.0 / math.sqrt(a)) * (kt * f_t + ks * (g_s + h_s))
