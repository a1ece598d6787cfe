"""Scheme parameters and the parameter engine: capacity and size formulas,
the balls-in-bins row threshold solver, the unforgeability bound calculator,
and the sensor-node energy model."""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import NoSolutionError, ParameterError

# Default 128-bit security parameter set.
DEFAULT_T = 1024
DEFAULT_K = 25
DEFAULT_L = 256
DEFAULT_R = 25601
DEFAULT_RT = 11

# Desk-scale parameter set small enough for end-to-end runs in tests.
DESK_T = 16
DESK_K = 4
DESK_L = 256
DESK_R = 64
DESK_RT = 4


@dataclass(frozen=True)
class SchemeParams:
    """Public scheme constants.

    t    key slots per row (power of two, >= 8)
    k    revealed keys per signature
    l    private key element length in bits (fixed at 256)
    r    total rows ever issuable
    rt   rows held simultaneously
    kappa security parameter in bits (fixed at 128)
    """

    t: int
    k: int
    l: int
    r: int
    rt: int
    kappa: int = 128

    def __post_init__(self):
        if self.t < 8 or self.t & (self.t - 1):
            raise ParameterError(f"t must be a power of two >= 8, got {self.t}")
        if not 1 <= self.k <= self.t:
            raise ParameterError(f"k must be in [1, t], got {self.k}")
        if self.k * self.log_t > 256:
            raise ParameterError("k*log2(t) exceeds the 256-bit digest")
        if self.l != 256:
            raise ParameterError(f"l must be 256, got {self.l}")
        if self.kappa != 128:
            raise ParameterError(f"kappa must be 128, got {self.kappa}")
        if not 1 <= self.rt <= self.r:
            raise ParameterError(f"need 1 <= rt <= r, got rt={self.rt} r={self.r}")

    @property
    def log_t(self) -> int:
        return self.t.bit_length() - 1

    @property
    def hash_bits(self) -> int:
        """Width of the truncated message hash: k * log2(t)."""
        return self.k * self.log_t

    @property
    def window(self) -> int:
        return self.t

    @property
    def element_bytes(self) -> int:
        return self.l // 8


def default_params() -> SchemeParams:
    return SchemeParams(DEFAULT_T, DEFAULT_K, DEFAULT_L, DEFAULT_R, DEFAULT_RT)


def desk_params() -> SchemeParams:
    return SchemeParams(DESK_T, DESK_K, DESK_L, DESK_R, DESK_RT)


def message_capacity(t: int, k: int, r: int) -> int:
    """Messages signable from r rows of t keys at k keys a message:
    (r-1)*t/k + 1 (floored when k does not divide (r-1)*t)."""
    return (r - 1) * t // k + 1


def bitmap_size_bits(t: int, r: int, rt: int) -> int:
    """Signer-side bitmap footprint: rt rows of t bits plus per-row
    metadata (an active-bit count and a row number)."""
    if t < 2 or t & (t - 1):
        raise ParameterError(f"t must be a power of two, got {t}")
    return rt * (t + (t.bit_length() - 1) + math.ceil(math.log2(r)))


def public_key_store_bytes(t: int, k: int, r: int, l: int = 256) -> int:
    """Verifier storage for the usable keys: r-1 full rows plus the k keys
    of the final row that the last signature can reveal."""
    return ((r - 1) * t + k) * (l // 8)


@dataclass(frozen=True)
class RowThresholdQuery:
    """Inputs to the row threshold solver.

    load_max is the bin load targeted with high probability; t-k asks for at
    least one nearly drained row, t for at least one fully drained row.
    alpha in (0,1) smooths the estimate (closer to 1 is more conservative).
    """

    t: int
    k: int
    alpha: float = 0.999
    load_max: int | None = None  # defaults to t - k

    def __post_init__(self):
        if not 0 < self.alpha < 1:
            raise ParameterError(f"alpha must lie in (0,1), got {self.alpha}")
        if self.load_max is None:
            object.__setattr__(self, "load_max", self.t - self.k)


@dataclass(frozen=True)
class RowThresholdResult:
    rt: float
    residual: float
    regime_ratio: float
    regime_ok: bool


def _max_load(rt: float, t: int, alpha: float) -> float:
    """Balls-in-bins maximum load when rt*t - t used bits are spread over
    rt rows: m/n + sqrt(2*(m/n)*log2(n)*(1 - (1/alpha)*log2log2(n)/(2*log2(n))))."""
    m_over_n = (rt * t - t) / rt
    log_n = math.log2(rt)
    if log_n <= 0:
        return 0.0
    inner = 1.0 - (1.0 / alpha) * (math.log2(log_n) / (2.0 * log_n))
    return m_over_n + math.sqrt(2.0 * m_over_n * log_n * inner)


def solve_row_threshold(query: RowThresholdQuery) -> RowThresholdResult:
    """Solve the maximum-load equation for the number of rows rt.

    Bracketing bisection on rt in (1, 1e6); the load expression is monotone
    increasing in rt, from 0 toward t. Also reports whether the theorem's
    validity regime rt*t - t >> rt*(log2 rt)^3 holds (ratio >= 10).
    """
    t, alpha, target = query.t, query.alpha, query.load_max
    lo, hi = 1.0 + 1e-9, 1e6
    f = lambda rt: _max_load(rt, t, alpha) - target
    if f(lo) > 0 or f(hi) < 0:
        raise NoSolutionError(f"no rt in ({lo}, {hi}) reaches load {target}")
    while hi - lo > 1e-12 and abs(f((lo + hi) / 2)) >= 1e-9:
        mid = (lo + hi) / 2
        if f(mid) < 0:
            lo = mid
        else:
            hi = mid
    rt = (lo + hi) / 2
    balls = rt * t - t
    regime = rt * math.log2(rt) ** 3
    ratio = balls / regime if regime > 0 else math.inf
    return RowThresholdResult(
        rt=rt, residual=abs(f(rt)), regime_ratio=ratio, regime_ok=ratio >= 10.0
    )


def eucma_bound(t: int, k: int, L: int) -> float:
    """log2 of the unforgeability bound
    max(2^(-L/2), 2^(-k*log2(t)/2)) + 2^(-k*L/2) + (k/t)^k,
    evaluated in log space so the tiny terms do not underflow."""
    if t < 2 or t & (t - 1):
        raise ParameterError(f"t must be a power of two, got {t}")
    if L > 256:
        raise ParameterError(f"L must be at most 256, got {L}")
    log_t = t.bit_length() - 1
    terms = (-min(L, k * log_t) / 2, -k * L / 2, k * math.log2(k / t))
    top = max(terms)
    return top + math.log2(sum(2.0 ** (x - top) for x in terms))


@dataclass(frozen=True)
class EnergyModel:
    """MICAz-style energy constants: MCU joules per cycle and radio joules
    per transmitted bit."""

    joules_per_cycle: float = 4.07e-9
    joules_per_bit: float = 0.168e-6

    def __post_init__(self):
        if self.joules_per_cycle <= 0 or self.joules_per_bit <= 0:
            raise ParameterError("energy constants must be positive")


def energy_estimate(
    cycles: int, tx_bits: float, model: EnergyModel = EnergyModel()
) -> tuple[float, float, float]:
    """(signing mJ, transmission mJ, total mJ) for a signing operation that
    runs `cycles` MCU cycles and transmits `tx_bits` bits."""
    if cycles < 0 or tx_bits < 0:
        raise ParameterError("cycles and tx_bits must be nonnegative")
    sign_mj = cycles * model.joules_per_cycle * 1e3
    tx_mj = tx_bits * model.joules_per_bit * 1e3
    return sign_mj, tx_mj, sign_mj + tx_mj
