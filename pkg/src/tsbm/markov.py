"""Binary Markov interaction chains: path-law divergences (exact transfer
matrix, brute-force enumeration, sparse closed forms), threshold constants,
snapshot thresholds T*, and on-period path combinatorics.
"""

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy.special import logsumexp

__all__ = [
    "BinaryMarkovChain",
    "chain_from_stationary",
    "markov_renyi_exact",
    "markov_renyi_brute",
    "markov_j_quantity",
    "markov_hellinger_sq",
    "SparseApprox",
    "sparse_renyi_approx",
    "high_order_bound",
    "h11_sq",
    "i_tilde_short",
    "i_tilde_long",
    "ThresholdConvention",
    "t_star",
    "PathStats",
    "path_stats",
    "count_paths",
]


@dataclass(frozen=True)
class BinaryMarkovChain:
    """A chain on {0, 1}: initial law ``(1-mu1, mu1)`` and transition
    probabilities into state 1 from state 0 (``p01``) and state 1 (``p11``)."""

    mu1: float
    p01: float
    p11: float

    def __post_init__(self):
        for name in ("mu1", "p01", "p11"):
            x = getattr(self, name)
            if not 0.0 <= x <= 1.0:
                raise ValueError(f"{name}={x!r} outside [0, 1]")

    @property
    def mu(self):
        return np.array([1.0 - self.mu1, self.mu1])

    @property
    def transition(self):
        return np.array([[1.0 - self.p01, self.p01], [1.0 - self.p11, self.p11]])

    def path_log_prob(self, paths):
        """Log probability of each row of a (m, T) 0/1 array; -inf allowed."""
        x = np.asarray(paths, dtype=np.int64)
        if x.ndim == 1:
            x = x[None, :]
        with np.errstate(divide="ignore"):
            log_mu = np.log(self.mu)
            log_p = np.log(self.transition).ravel()  # index 2*a + b
        out = log_mu[x[:, 0]]
        for t in range(1, x.shape[1]):
            out = out + log_p[2 * x[:, t - 1] + x[:, t]]
        return out

    def sample(self, n, T, uniform_source):
        """Draw ``n`` paths of length ``T``; ``uniform_source(t)`` must yield
        a length-``n`` vector of uniforms for each step ``t``."""
        out = np.empty((T, n), dtype=np.uint8)
        cur = (uniform_source(0) < self.mu1).astype(np.uint8)
        out[0] = cur
        for t in range(1, T):
            u = uniform_source(t)
            thresh = np.where(cur == 1, self.p11, self.p01)
            cur = (u < thresh).astype(np.uint8)
            out[t] = cur
        return out


def chain_from_stationary(pi1, p11):
    """Chain started from its stationary law ``(1-pi1, pi1)`` with the given
    persistence ``p11``; infeasible pairs (implied p01 > 1) are rejected."""
    if not 0 < pi1 < 1:
        raise ValueError("stationary probability must lie strictly in (0, 1)")
    p01 = pi1 * (1.0 - p11) / (1.0 - pi1)
    if p01 > 1.0 + 1e-15:
        raise ValueError(f"no stationary chain: implied p01={p01:.6g} > 1")
    return BinaryMarkovChain(mu1=pi1, p01=min(p01, 1.0), p11=p11)


# ---------------------------------------------------------------------------
# Exact path-law divergences via the transfer matrix
# ---------------------------------------------------------------------------


def _geometric_weights(alpha, chain_f, chain_g):
    """Initial weights ``r_b`` and transfer matrix ``R_ab`` of elementwise
    weighted geometric means.  For ``alpha > 1`` an entry with positive
    numerator over a zero denominator is flagged as infinite."""
    mu, nu = chain_f.mu, chain_g.mu
    P, Q = chain_f.transition, chain_g.transition
    with np.errstate(divide="ignore", invalid="ignore"):
        r = np.where(mu > 0, mu**alpha * nu ** (1.0 - alpha), 0.0)
        R = np.where(P > 0, P**alpha * Q ** (1.0 - alpha), 0.0)
    r_inf = (mu > 0) & (nu == 0) if alpha > 1 else np.zeros(2, dtype=bool)
    R_inf = (P > 0) & (Q == 0) if alpha > 1 else np.zeros((2, 2), dtype=bool)
    r = np.where(r_inf, 0.0, r)
    R = np.where(R_inf, 0.0, R)
    return r, R, r_inf, R_inf


def _log_hellinger_sum(alpha, chain_f, chain_g, T):
    """log of ``Z = sum over paths of f^alpha g^(1-alpha)``; returns
    (-inf on empty support, +inf when an infinite term has positive mass).
    """
    r, R, r_inf, R_inf = _geometric_weights(alpha, chain_f, chain_g)
    z = r.copy()
    fin = r > 0          # a finite positive path ends here
    inf_flag = r_inf.copy()  # a path with an infinite factor ends here
    log_scale = 0.0
    for _ in range(T - 1):
        fin_next = np.array(
            [(fin & (R[:, b] > 0)).any() for b in range(2)]
        )
        inf_next = np.array(
            [
                ((inf_flag & ((R[:, b] > 0) | R_inf[:, b])) | (fin & R_inf[:, b])).any()
                for b in range(2)
            ]
        )
        z = z @ R
        fin, inf_flag = fin_next, inf_next
        s = z.sum()
        if s > 0:
            log_scale += math.log(s)
            z = z / s
        if not fin.any() and not inf_flag.any():
            return -math.inf
    if inf_flag.any():
        return math.inf
    total = z.sum()
    if total == 0.0:
        return -math.inf
    return log_scale + math.log(total)


def _log_hellinger_sum_pow(alpha, chain_f, chain_g, T):
    """Same as :func:`_log_hellinger_sum` but via matrix power-by-squaring;
    O(log T), used by the threshold search for large horizons.  Only valid
    when no infinite entries arise (always true for alpha < 1)."""
    r, R, r_inf, R_inf = _geometric_weights(alpha, chain_f, chain_g)
    if r_inf.any() or R_inf.any():
        return _log_hellinger_sum(alpha, chain_f, chain_g, T)
    log_scale = 0.0
    acc = np.eye(2)
    acc_scale = 0.0
    base = R.copy()
    base_scale = 0.0
    m = T - 1
    while m > 0:
        if m & 1:
            acc = acc @ base
            acc_scale += base_scale
            s = acc.max()
            if s == 0.0:
                return -math.inf
            acc_scale += math.log(s)
            acc /= s
        m >>= 1
        if m:
            base = base @ base
            base_scale *= 2
            s = base.max()
            if s == 0.0:
                base_scale = -math.inf
            else:
                base_scale += math.log(s)
                base /= s
    z = r @ acc
    total = z.sum()
    if total == 0.0 or acc_scale == -math.inf:
        return -math.inf
    return log_scale + acc_scale + math.log(total)


def markov_renyi_exact(alpha, chain_f, chain_g, T):
    """Renyi divergence of order ``alpha`` between the length-``T`` path laws
    of two binary chains, via the linear transfer-matrix recursion (O(T))."""
    if alpha <= 0 or alpha == 1:
        raise ValueError("order must be positive and different from 1")
    if T < 1:
        raise ValueError("need at least one snapshot")
    log_z = _log_hellinger_sum(alpha, chain_f, chain_g, T)
    if log_z == -math.inf:
        return math.inf  # orthogonal supports
    if log_z == math.inf:
        return math.inf  # only reachable for alpha > 1
    return max(log_z / (alpha - 1.0), 0.0)


def markov_renyi_brute(alpha, chain_f, chain_g, T):
    """Literal sum over all 2^T paths; test oracle, T capped at 20."""
    if T > 20:
        raise ValueError("brute-force enumeration capped at T = 20")
    if T < 1:
        raise ValueError("need at least one snapshot")
    if alpha <= 0 or alpha == 1:
        raise ValueError("order must be positive and different from 1")
    codes = np.arange(2**T, dtype=np.int64)
    paths = (codes[:, None] >> np.arange(T)[None, :]) & 1
    lf = chain_f.path_log_prob(paths)
    lg = chain_g.path_log_prob(paths)
    keep = lf > -math.inf  # zero-probability paths contribute nothing
    lf, lg = lf[keep], lg[keep]
    if lf.size == 0:
        return math.inf
    if alpha > 1 and np.any(np.isinf(lg)):
        return math.inf
    with np.errstate(invalid="ignore"):
        log_terms = alpha * lf + (1.0 - alpha) * lg
    finite = log_terms > -math.inf
    if not finite.any():
        return math.inf
    log_z = logsumexp(log_terms[finite])
    return max(log_z / (alpha - 1.0), 0.0)


def markov_hellinger_sq(chain_f, chain_g, T):
    """Squared Hellinger distance between path laws: ``1 - Z_{1/2}``."""
    log_z = _log_hellinger_sum(0.5, chain_f, chain_g, T)
    return 1.0 - math.exp(log_z) if log_z != -math.inf else 1.0


def markov_j_quantity(chain_f, chain_g, T):
    """Second moment of the path log-likelihood ratio under the normalised
    geometric-mean path weights, computed by an O(T) moment recursion.

    The log ratio is additive over steps, so weighted moments propagate
    through the same transfer matrix as the Hellinger sum.
    """
    r, R, *_ = _geometric_weights(0.5, chain_f, chain_g)
    mu, nu = chain_f.mu, chain_g.mu
    P, Q = chain_f.transition, chain_g.transition
    with np.errstate(divide="ignore", invalid="ignore"):
        l_init = np.where(r > 0, np.log(mu) - np.log(nu), 0.0)
        l_step = np.where(R > 0, np.log(P) - np.log(Q), 0.0)
    a = r.copy()                 # sum of weights per end state
    b = r * l_init               # weighted first moment of the log ratio
    c = r * l_init**2            # weighted second moment
    for _ in range(T - 1):
        a_next = a @ R
        b_next = b @ R + a @ (R * l_step)
        c_next = c @ R + 2.0 * (b @ (R * l_step)) + a @ (R * l_step**2)
        a, b, c = a_next, b_next, c_next
        s = a.sum()
        if s == 0.0:
            raise ValueError("orthogonal path laws: weights vanished")
        a, b, c = a / s, b / s, c / s
    return float(c.sum() / a.sum())


# ---------------------------------------------------------------------------
# Sparse-regime closed forms
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SparseApprox:
    """Sparse-regime divergence approximation with its guaranteed radius."""

    value: float
    error_radius: float
    rho: float
    in_regime: bool  # rho * T <= 0.01, where the radius guarantee holds


def sparse_renyi_approx(alpha, chain_f, chain_g, T):
    """Closed-form approximation of the order-``alpha`` path divergence for
    sparse chains (all on-probabilities at most rho, rho * T small).

    The guaranteed radius is ``46 (rho T)^2 / (1 - alpha)``; outside the
    validity regime the value is still computed and flagged.
    """
    if not 0 < alpha < 1:
        raise ValueError("sparse closed form covers orders in (0, 1)")
    if T < 1:
        raise ValueError("need at least one snapshot")
    mu1, nu1 = chain_f.mu1, chain_g.mu1
    p01, q01 = chain_f.p01, chain_g.p01
    p11, q11 = chain_f.p11, chain_g.p11
    rho = max(mu1, nu1, p01, q01)

    r1 = mu1**alpha * nu1 ** (1.0 - alpha)
    r1_hat = alpha * mu1 + (1.0 - alpha) * nu1
    R01 = p01**alpha * q01 ** (1.0 - alpha)
    R01_hat = alpha * p01 + (1.0 - alpha) * q01
    R11 = p11**alpha * q11 ** (1.0 - alpha)
    R10 = (1.0 - p11) ** alpha * (1.0 - q11) ** (1.0 - alpha)

    if R11 < 1.0:
        w = R10 / (1.0 - R11)
        geo = (1.0 - R11 ** (T - 1)) / (1.0 - R11)  # sum_{t=2}^{T} R11^(t-2)
        j_sum = (T - 1) * (R01_hat - R01) + (1.0 - w) * (
            (T - 1) * R01 + (r1 * (1.0 - R11) - R01) * geo
        )
    else:
        j_sum = (T - 1) * (R01_hat - R01)

    value = (r1_hat - r1 + j_sum) / (1.0 - alpha)
    radius = 46.0 * (rho * T) ** 2 / (1.0 - alpha)
    return SparseApprox(value=value, error_radius=radius, rho=rho, in_regime=rho * T <= 0.01)


def high_order_bound(alpha, chain_f, chain_g, T, M, rho):
    """Upper bound on the order-``alpha`` (> 1) path divergence for sparse
    dominated chains: ``(2a+1)/(a-1) * C rho T exp(5 C rho T)`` with
    ``C = M^(2a) / (1 - Lambda)`` and ``Lambda = p11^a q11^(1-a)``.

    Raises when the domination or sparsity hypotheses fail, or when
    ``Lambda >= 1`` (the bound degenerates).
    """
    if alpha <= 1:
        raise ValueError("high-order bound needs alpha > 1")
    if M < 1:
        raise ValueError("ratio bound M must be at least 1")
    if not 0 < rho <= 0.5:
        raise ValueError("need 0 < rho <= 1/2")
    if chain_g.mu1 > rho or chain_g.p01 > rho:
        raise ValueError("inter-chain on-probabilities exceed rho")
    tol = 1e-12
    pairs = (
        (chain_f.mu1, chain_g.mu1, "mu1"),
        (chain_f.p01, chain_g.p01, "p01"),
        (1.0 - chain_f.p11, 1.0 - chain_g.p11, "p10"),
    )
    for num, den, name in pairs:
        if num > M * den + tol:
            raise ValueError(f"ratio bound violated for {name}: {num:.3g} > {M} * {den:.3g}")
    p11, q11 = chain_f.p11, chain_g.p11
    if p11 == 0.0:
        lam = 0.0
    elif q11 == 0.0:
        lam = math.inf
    else:
        lam = p11**alpha * q11 ** (1.0 - alpha)
    if lam >= 1.0:
        raise ValueError(f"bound inapplicable: Lambda = {lam:.6g} >= 1")
    c = M ** (2.0 * alpha) / (1.0 - lam)
    x = c * rho * T
    if 5.0 * x > 700.0:
        return math.inf
    return (2.0 * alpha + 1.0) / (alpha - 1.0) * x * math.exp(5.0 * x)


# ---------------------------------------------------------------------------
# Threshold constants and the snapshot threshold T*
# ---------------------------------------------------------------------------


def h11_sq(p11, q11):
    """Squared Hellinger distance between the geometric on-period lengths:
    ``1 - sqrt(1-p11) sqrt(1-q11) / (1 - sqrt(p11 q11))``."""
    if not (0 <= p11 <= 1 and 0 <= q11 <= 1):
        raise ValueError("persistence probabilities must lie in [0, 1]")
    if p11 == 1.0 and q11 == 1.0:
        return 0.0  # identical degenerate on-periods
    return 1.0 - math.sqrt((1.0 - p11) * (1.0 - q11)) / (1.0 - math.sqrt(p11 * q11))


def i_tilde_short(u, v, p01, q01, h11_sq_value, gamma, T):
    """Threshold constant for a bounded horizon: first-snapshot term, a
    per-snapshot term, and a geometrically damped transient.

    All rate arguments are densities expressed in units of the sparsity
    scale; ``gamma`` is the effective spectral gap, in (0, 1].
    """
    if min(u, v, p01, q01, h11_sq_value) < 0:
        raise ValueError("rate arguments must be non-negative")
    if not 0 < gamma <= 1:
        raise ValueError("gamma must lie in (0, 1]")
    if T < 1:
        raise ValueError("need at least one snapshot")
    base = (math.sqrt(u) - math.sqrt(v)) ** 2
    per = (math.sqrt(p01) - math.sqrt(q01)) ** 2 + 2.0 * h11_sq_value * math.sqrt(p01 * q01)
    transient_coef = 2.0 * h11_sq_value * (gamma * math.sqrt(u * v) - math.sqrt(p01 * q01))
    if T <= 4096:
        geo = sum((1.0 - gamma) ** t for t in range(T - 1))
    else:
        # closed form of the same sum; gamma > 0 is guaranteed above
        geo = (1.0 - math.exp((T - 1) * math.log1p(-gamma))) / gamma if gamma < 1 else 1.0
    return base + per * (T - 1) + transient_coef * geo


def i_tilde_long(p01, q01, h11_sq_value):
    """Per-snapshot threshold constant for a long horizon (initial states
    forgotten): ``(sqrt(p01)-sqrt(q01))^2 + 2 h11^2 sqrt(p01 q01)``."""
    if min(p01, q01, h11_sq_value) < 0:
        raise ValueError("rate arguments must be non-negative")
    return (math.sqrt(p01) - math.sqrt(q01)) ** 2 + 2.0 * h11_sq_value * math.sqrt(p01 * q01)


class ThresholdConvention(Enum):
    """How the strong-consistency threshold is checked when searching T*.

    EXACT thresholds the exact squared Hellinger distance of the path laws
    at ``K log N / N`` (this scale reproduces the reference threshold maps);
    I_TILDE thresholds the sparse closed-form constant at ``K``.
    """

    EXACT = "exact"
    I_TILDE = "itilde"


_LINEAR_SCAN_CAP = 1024


def _i_tilde_of_chains(chain_f, chain_g, rho, T):
    gamma = 1.0 - math.sqrt(chain_f.p11 * chain_g.p11)
    if gamma == 0.0:
        gamma = 1e-300  # both persistences equal to one: fully static
    return i_tilde_short(
        chain_f.mu1 / rho,
        chain_g.mu1 / rho,
        chain_f.p01 / rho,
        chain_g.p01 / rho,
        h11_sq(chain_f.p11, chain_g.p11),
        gamma,
        T,
    )


def t_star(chain_f, chain_g, N, K, convention=ThresholdConvention.EXACT, t_max=10**6):
    """Smallest number of snapshots at which the interaction divergence
    crosses the strong-consistency threshold; None if ``t_max`` is hit.

    The search is a linear scan with early exit, switching to doubling plus
    bisection (with O(log T) evaluations) beyond 1024 snapshots.
    """
    if K < 2:
        raise ValueError("need at least two blocks")
    if isinstance(convention, str):
        convention = ThresholdConvention(convention)
    rho = math.log(N) / N

    if convention is ThresholdConvention.EXACT:
        threshold = K * rho

        def crossed(T):
            return 1.0 - math.exp(
                min(_log_hellinger_sum_pow(0.5, chain_f, chain_g, T), 0.0)
            ) >= threshold

        # linear scan streams the transfer recursion, one step per T
        r, R, *_ = _geometric_weights(0.5, chain_f, chain_g)
        z = r.copy()
        log_scale = 0.0
        for T in range(1, min(t_max, _LINEAR_SCAN_CAP) + 1):
            if T > 1:
                z = z @ R
                s = z.sum()
                if s == 0.0:
                    return T  # orthogonal supports: threshold met trivially
                log_scale += math.log(s)
                z /= s
            if 1.0 - math.exp(min(log_scale + math.log(z.sum()), 0.0)) >= threshold:
                return T
    else:
        threshold = float(K)

        def crossed(T):
            return _i_tilde_of_chains(chain_f, chain_g, rho, T) > threshold

        for T in range(1, min(t_max, _LINEAR_SCAN_CAP) + 1):
            if crossed(T):
                return T

    if t_max <= _LINEAR_SCAN_CAP:
        return None

    # doubling then bisection; relies on the divergence being nondecreasing
    # in T, which holds for stationary chains
    lo = _LINEAR_SCAN_CAP  # known not crossed
    hi = 2 * lo
    while hi < t_max and not crossed(hi):
        lo, hi = hi, 2 * hi
    hi = min(hi, t_max)
    if not crossed(hi):
        return None
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if crossed(mid):
            hi = mid
        else:
            lo = mid
    return hi


# ---------------------------------------------------------------------------
# Path statistics and on-period counting
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PathStats:
    """Summary of a binary path sufficient to determine its probability."""

    ones: int
    on_periods: int
    first: int
    last: int
    n00: int
    n01: int
    n10: int
    n11: int


def path_stats(path):
    """Transition counts, endpoints, ones and on-period count of a path."""
    x = np.asarray(path, dtype=np.int64)
    if x.ndim != 1 or x.size < 1 or np.any((x != 0) & (x != 1)):
        raise ValueError("path must be a non-empty 0/1 sequence")
    prev, cur = x[:-1], x[1:]
    n01 = int(((prev == 0) & (cur == 1)).sum())
    n10 = int(((prev == 1) & (cur == 0)).sum())
    n11 = int(((prev == 1) & (cur == 1)).sum())
    n00 = int(x.size - 1 - n01 - n10 - n11)
    return PathStats(
        ones=int(x.sum()),
        on_periods=int(x[0]) + n01,
        first=int(x[0]),
        last=int(x[-1]),
        n00=n00,
        n01=n01,
        n10=n10,
        n11=n11,
    )


def _comb0(n, k):
    return math.comb(n, k) if 0 <= k <= n else 0


def count_paths(j, t, a, b, T):
    """Number of binary paths of length ``T`` with ``j`` on-periods, ``t``
    ones, first bit ``a`` and last bit ``b``; zero when no such path exists.
    """
    if T < 1 or a not in (0, 1) or b not in (0, 1):
        raise ValueError("need T >= 1 and binary endpoints")
    if j < 0 or t < 0:
        return 0
    if j == 0:
        return 1 if (t == 0 and a == 0 and b == 0) else 0
    if t < j:
        return 0
    if j == 1:
        if (a, b) == (0, 0):
            return T - t - 1 if 1 <= t <= T - 2 else 0
        if (a, b) in ((0, 1), (1, 0)):
            return 1 if 1 <= t <= T - 1 else 0
        return 1 if t == T else 0
    return _comb0(t - 1, j - 1) * _comb0(T - t - 1, j - a - b)
