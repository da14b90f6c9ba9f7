"""Statistics of the overlap score.

For two unit vectors with inner product lambda, each of the m code
dimensions is jointly active with probability

    mu(lambda) = P(w > h, v > h),   (w, v) standard normal, corr lambda,

so the raw overlap count is Binomial(m, mu). Everything downstream
(retrieval cutoffs, error bands, normal-approximation bounds) reduces to
mu, its derivatives, and sigma = sqrt(mu(1-mu)).

mu is evaluated through Plackett's identity: the derivative of the
bivariate-normal orthant probability in the correlation is the bivariate
density at the corner,

    d mu / d lambda = exp(-h^2/(1+lambda)) / (2 pi sqrt(1-lambda^2)),

which is smooth on (-1, 1), so mu(lambda) = mu(0) + an adaptive quadrature
of the derivative from 0, with mu(0) = (1-Phi(h))^2 in closed form.
"""

import csv
import math
from dataclasses import dataclass
from enum import Enum
from typing import NamedTuple

from scipy import integrate, optimize, special

from .errors import (
    DegenerateCorrelation,
    DegenerateSigma,
    InvalidParams,
    NoSolution,
    OutOfPhaseRegion,
)

_CLAMP = 1e-9          # |lambda| beyond 1 - _CLAMP uses the closed forms
_QUAD_ABS_TOL = 1e-13
BERRY_ESSEEN_C0 = 0.4748
POISSON_REGIME_COUNT = 10.0


def threshold_h(m: int, r: float) -> float:
    """Activation threshold sqrt(2 r ln m); natural logarithm throughout."""
    if m < 2 or r <= 0:
        raise InvalidParams(f"need m >= 2 and r > 0, got m={m}, r={r}")
    return math.sqrt(2.0 * r * math.log(m))


class TailPair(NamedTuple):
    exact: float
    asymptotic: float


def normal_tail(h: float) -> TailPair:
    """Standard normal upper tail, exact (erfc) and its classic upper bound.

    The bound e^(-h^2/2) / (h sqrt(2 pi)) dominates the exact tail for every
    h > 0 and is asymptotically tight; it is +inf for h <= 0.
    """
    exact = 0.5 * special.erfc(h / math.sqrt(2.0))
    if h > 0:
        asymptotic = math.exp(-0.5 * h * h) / (h * math.sqrt(2.0 * math.pi))
    else:
        asymptotic = math.inf
    return TailPair(float(exact), asymptotic)


class SparsityEstimate(NamedTuple):
    exact: float
    asymptotic: float
    upper: float


def expected_sparsity(m: int, r: float) -> SparsityEstimate:
    """Expected support size of a mapped vector: m(1-Phi(h)) ~ m^(1-r)/sqrt(4 pi r ln m)."""
    h = threshold_h(m, r)
    exact = m * normal_tail(h).exact
    upper = m ** (1.0 - r) / math.sqrt(4.0 * math.pi * r * math.log(m))
    return SparsityEstimate(exact, upper, upper)


def mu_derivative(lam: float, h: float) -> float:
    """Plackett derivative of mu in lambda; undefined at |lambda| = 1."""
    if abs(lam) >= 1.0 - _CLAMP:
        raise DegenerateCorrelation(f"derivative undefined at lambda={lam}")
    return math.exp(-h * h / (1.0 + lam)) / (
        2.0 * math.pi * math.sqrt(1.0 - lam * lam)
    )


def mu_second_derivative(lam: float, h: float) -> float:
    """d2 mu / d lambda2 = (h^2/(1+lambda)^2 + lambda/(1-lambda^2)) * dmu."""
    dmu = mu_derivative(lam, h)
    return (h * h / (1.0 + lam) ** 2 + lam / (1.0 - lam * lam)) * dmu


def mu(lam: float, h: float) -> float:
    """Joint activation probability P(w > h, v > h) at correlation lambda."""
    if not -1.0 <= lam <= 1.0:
        raise InvalidParams(f"lambda must lie in [-1, 1], got {lam}")
    tail = normal_tail(h).exact
    if lam >= 1.0 - _CLAMP:
        return tail
    if lam <= -1.0 + _CLAMP:
        return 0.0
    mu0 = tail * tail
    if lam == 0.0:
        return mu0
    integrand = lambda t: math.exp(-h * h / (1.0 + t)) / (
        2.0 * math.pi * math.sqrt(1.0 - t * t)
    )
    val, _ = integrate.quad(
        integrand, 0.0, lam,
        epsabs=_QUAD_ABS_TOL, epsrel=_QUAD_ABS_TOL, limit=200,
    )
    return min(max(mu0 + val, 0.0), 1.0)


def sigma_of_mu(mu_value: float) -> float:
    """Per-dimension standard deviation sqrt(mu (1 - mu))."""
    return math.sqrt(max(mu_value, 0.0) * max(1.0 - mu_value, 0.0))


@dataclass(frozen=True)
class ScoreStats:
    """All per-dimension statistics at one similarity level."""

    lam: float
    h: float
    mu: float
    sigma: float
    dmu: float
    d2mu: float
    expected_count: float
    clamped: bool = False  # true when |lambda| ~ 1 forced the closed forms


def mu_sigma(lam: float, h: float, m: int) -> ScoreStats:
    """Evaluate mu, sigma, both derivatives, and the expected overlap count.

    At |lambda| within 1e-9 of 1 the closed forms mu(1) = 1 - Phi(h),
    mu(-1) = 0 are used and the derivative fields are NaN with
    ``clamped=True``; call mu_derivative directly to get the error instead.
    """
    mu_value = mu(lam, h)
    clamped = abs(lam) >= 1.0 - _CLAMP
    if clamped:
        dmu = d2mu = math.nan
    else:
        dmu = mu_derivative(lam, h)
        d2mu = mu_second_derivative(lam, h)
    return ScoreStats(
        lam=lam, h=h, mu=mu_value, sigma=sigma_of_mu(mu_value),
        dmu=dmu, d2mu=d2mu, expected_count=m * mu_value, clamped=clamped,
    )


class AsymptoticMu(NamedTuple):
    mu_approx: float
    count_approx: float


def coefficient_c(lam: float) -> float:
    """(1+lambda)^2 / (2 pi sqrt(1-lambda^2)), the tail-approximation constant."""
    if abs(lam) >= 1.0:
        raise DegenerateCorrelation(f"constant undefined at lambda={lam}")
    return (1.0 + lam) ** 2 / (2.0 * math.pi * math.sqrt(1.0 - lam * lam))


def mu_asymptotic(lam: float, m: int, r: float) -> AsymptoticMu:
    """Large-m approximation C(lambda) m^(-2r/(1+lambda)) / (2 r ln m).

    Converges only logarithmically: expect tens of percent of relative
    error at practical m. Useful for rates, not for cutoffs.
    """
    if m < 2 or r <= 0:
        raise InvalidParams(f"need m >= 2 and r > 0, got m={m}, r={r}")
    mu_approx = (
        coefficient_c(lam)
        * m ** (-2.0 * r / (1.0 + lam))
        / (2.0 * r * math.log(m))
    )
    return AsymptoticMu(mu_approx, m * mu_approx)


class PhaseRegion(Enum):
    VANISHING = "vanishing"
    BOUNDARY = "boundary"
    GAUSSIAN = "gaussian"


def phase_region(lam: float, r: float) -> PhaseRegion:
    """Classify lambda against the 2r-1 boundary of the expected count m*mu.

    Below it the expected overlap count vanishes as m grows (scores are
    almost surely zero); above it the count diverges and the normalized
    score is asymptotically standard normal.
    """
    gap = lam - (2.0 * r - 1.0)
    if abs(gap) <= 1e-12:
        return PhaseRegion.BOUNDARY
    return PhaseRegion.GAUSSIAN if gap > 0 else PhaseRegion.VANISHING


def epsilon_asymptotic(lam: float, m: int, r: float, eta: float) -> float:
    """Closed-form half-width of the unreliable similarity interval.

    eps = sqrt(2 pi) (1+lambda) (1-lambda^2)^(1/4) eta / sqrt(2 r ln m)
          * m^(-(lambda-(2r-1)) / (2 (1+lambda))),

    linear in eta and vanishing in m. Requires 2r-1 < lambda < 1 and
    lambda > 0.
    """
    if not (max(0.0, 2.0 * r - 1.0) < lam < 1.0):
        raise OutOfPhaseRegion(
            f"lambda={lam} outside (max(0, 2r-1), 1) for r={r}"
        )
    if eta < 0:
        raise InvalidParams("eta must be nonnegative")
    coeff = (
        math.sqrt(2.0 * math.pi)
        * (1.0 + lam)
        * (1.0 - lam * lam) ** 0.25
        * eta
        / math.sqrt(2.0 * r * math.log(m))
    )
    return coeff * m ** (-(lam - (2.0 * r - 1.0)) / (2.0 * (1.0 + lam)))


class EpsilonPair(NamedTuple):
    minus: float
    plus: float


def solve_epsilon_side(lam: float, m: int, r: float, eta: float, side: str) -> float:
    """Solve one side of the implicit error-band equation.

    side="minus": (mu(lam) - mu(lam - eps)) / sigma(lam - eps) * sqrt(m) = eta
    on (0, lam + 1); side="plus" solves the mirrored equation with
    lam + eps <= 1. Both left-hand sides are strictly increasing in eps, so
    a bracketing root finder converges; residuals land at solver precision.
    """
    if not (2.0 * r - 1.0 < lam < 1.0):
        raise OutOfPhaseRegion(f"lambda={lam} not inside (2r-1, 1) for r={r}")
    if eta < 0:
        raise InvalidParams("eta must be nonnegative")
    if eta == 0.0:
        return 0.0
    h = threshold_h(m, r)
    mu_lam = mu(lam, h)
    sqrt_m = math.sqrt(m)

    if side == "minus":
        def lhs(eps):
            mu_e = mu(lam - eps, h)
            s = sigma_of_mu(mu_e)
            if s == 0.0:
                return math.inf
            return (mu_lam - mu_e) / s * sqrt_m
        hi = lam + 1.0 - 1e-12
        failure = f"eta={eta} unreachable on the minus side for m={m}"
    elif side == "plus":
        def lhs(eps):
            mu_e = mu(lam + eps, h)
            return (mu_e - mu_lam) / sigma_of_mu(mu_e) * sqrt_m
        hi = 1.0 - lam
        failure = f"eta={eta} needs lambda + eps_plus > 1 for m={m}"
    else:
        raise InvalidParams(f"side must be 'minus' or 'plus', got {side!r}")

    if lhs(hi) < eta:
        raise NoSolution(failure, side=side)
    root = optimize.brentq(
        lambda e: lhs(e) - eta, 0.0, hi, xtol=1e-15, rtol=8.9e-16
    )
    return float(root)


def solve_epsilons(lam: float, m: int, r: float, eta: float) -> EpsilonPair:
    """Solve both sides of the implicit error-band equations."""
    return EpsilonPair(
        solve_epsilon_side(lam, m, r, eta, "minus"),
        solve_epsilon_side(lam, m, r, eta, "plus"),
    )


class RetrievalProbability(NamedTuple):
    gauss_approx: float
    be_bound: float


def retrieval_probability(
    lambda_cut: float, lambda_true: float, h: float, m: int
) -> RetrievalProbability:
    """Probability that a document at lambda_true clears the mu(lambda_cut) cutoff.

    Normal approximation P(N(0,1) > (mu_cut - mu_true)/sigma_true * sqrt(m)),
    valid within 1/sqrt(mu_true * m) of the true probability for every m.
    """
    if abs(lambda_cut) > 1 or abs(lambda_true) > 1 or lambda_true >= 1:
        raise InvalidParams("need |lambda_cut| <= 1 and lambda_true in [-1, 1)")
    mu_cut = mu(lambda_cut, h)
    mu_true = mu(lambda_true, h)
    s = sigma_of_mu(mu_true)
    if s == 0.0:
        raise DegenerateSigma(f"sigma vanishes at lambda_true={lambda_true}")
    z = (mu_cut - mu_true) / s * math.sqrt(m)
    gauss = float(special.ndtr(-z))  # P(N > z)
    return RetrievalProbability(gauss, 1.0 / math.sqrt(mu_true * m))


@dataclass(frozen=True)
class NormalApproxBound:
    """Berry-Esseen distance bound for the normalized overlap score."""

    c0: float
    rho: float
    bound: float


def normal_approx_bound(lam: float, h: float, m: int) -> NormalApproxBound:
    """Bound |F(t) - Phi(t)| <= 1/sqrt(mu m), via rho <= mu(1 - mu)."""
    mu_value = mu(lam, h)
    if mu_value <= 0.0:
        raise DegenerateSigma(f"mu vanishes at lambda={lam}")
    return NormalApproxBound(
        c0=BERRY_ESSEEN_C0,
        rho=mu_value * (1.0 - mu_value),
        bound=1.0 / math.sqrt(mu_value * m),
    )


@dataclass(frozen=True)
class ErrorBand:
    """Asymptotic and exact error-band widths at one similarity level."""

    lam: float
    eta: float
    m: int
    r: float
    eps_asym: float
    eps_minus: float
    eps_plus: float
    be_bound: float


def error_band(lam: float, m: int, r: float, eta: float) -> ErrorBand:
    """Bundle every error-band quantity for one (lambda, m, r, eta)."""
    eps_minus, eps_plus = solve_epsilons(lam, m, r, eta)
    try:
        eps_asym = epsilon_asymptotic(lam, m, r, eta)
    except OutOfPhaseRegion:
        eps_asym = math.nan
    h = threshold_h(m, r)
    be = 1.0 / math.sqrt(max(mu(lam - eps_minus, h), 1e-300) * m)
    return ErrorBand(
        lam=lam, eta=eta, m=m, r=r, eps_asym=eps_asym,
        eps_minus=eps_minus, eps_plus=eps_plus, be_bound=be,
    )


def tabulate(lambdas, m: int, r: float, eta: float) -> list[dict]:
    """Rows of (lambda, h, m, r, mu, sigma, eps_minus, eps_plus, be_bound).

    Feeds the accuracy-vs-m style plots; rows where the expected count
    falls below 10 are flagged as the Poisson regime, where the normal
    approximation oscillates.
    """
    h = threshold_h(m, r)
    rows = []
    for lam in lambdas:
        stats = mu_sigma(lam, h, m)
        try:
            band = error_band(lam, m, r, eta)
            eps_minus, eps_plus, be = band.eps_minus, band.eps_plus, band.be_bound
        except (OutOfPhaseRegion, NoSolution):
            eps_minus = eps_plus = be = math.nan
        rows.append({
            "lambda": lam, "h": h, "m": m, "r": r,
            "mu": stats.mu, "sigma": stats.sigma,
            "eps_minus": eps_minus, "eps_plus": eps_plus,
            "be_bound": be,
            "poisson_regime": stats.expected_count < POISSON_REGIME_COUNT,
        })
    return rows


def write_tabulation_csv(rows: list[dict], sink) -> None:
    """Write tabulate() output as CSV with a header row."""
    fields = [
        "lambda", "h", "m", "r", "mu", "sigma",
        "eps_minus", "eps_plus", "be_bound", "poisson_regime",
    ]
    own = isinstance(sink, (str, bytes)) or hasattr(sink, "__fspath__")
    fh = open(sink, "w", newline="") if own else sink
    try:
        writer = csv.DictWriter(fh, fieldnames=fields)
        writer.writeheader()
        for row in rows:
            writer.writerow({k: row[k] for k in fields})
    finally:
        if own:
            fh.close()
