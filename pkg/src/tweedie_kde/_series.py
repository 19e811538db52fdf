"""Log-space evaluation of the compound Poisson-Gamma series core.

The positive-part kernel density factors as

    k(t) = exp(-lam - t/beta) / t * S(w),   S(w) = sum_{j>=1} exp(j*w - c_j),

with w = log(lam) + alpha*(log t - log beta) and c_j = lgamma(j+1) +
lgamma(j*alpha).  Everything in this module evaluates S in log space:
the maximizing index is located first (continuous stationarity estimate,
then an integer hill climb; the log-terms are strictly concave in j), and
the sum is expanded in both directions from the peak until terms fall
below a relative cutoff.  Terms are accumulated through a ratio
recurrence so the hot loop performs one table lookup and two multiplies
per term instead of an exp call.

Tables of c_j and of the adjacent-term ratios are cached per alpha and
grown on demand.  For very large alpha (power parameter close to 1) the
ratio tables overflow, so a plain numpy log-sum-exp fallback is used.
"""

import math

import numpy as np
from numba import njit
from scipy.special import gammaln, logsumexp

_STATUS_OK = 0
_STATUS_NONCONV = 1
_STATUS_TABLE = 2

# Ratio tables stay finite for alpha below this; beyond it the numpy
# fallback path is used (power parameter within ~0.04 of 1).
_ALPHA_FAST_MAX = 25.0

# exp(w) overflows beyond ~709; the core switches to per-term exponentials.
_W_EXP_MAX = 690.0


@njit(cache=True)
def _build_tables(alpha, jmax):
    """Tables for j = 1..jmax: log-term constants and adjacent ratios."""
    lgsum = np.empty(jmax + 2)
    up = np.empty(jmax + 2)
    dn = np.empty(jmax + 2)
    lgsum[0] = 0.0
    up[0] = 0.0
    dn[0] = 0.0
    dn[1] = 0.0
    for j in range(1, jmax + 2):
        lgsum[j] = math.lgamma(j + 1.0) + math.lgamma(j * alpha)
    for j in range(1, jmax + 1):
        up[j] = math.exp(lgsum[j] - lgsum[j + 1])
        if j >= 2:
            dn[j] = math.exp(lgsum[j] - lgsum[j - 1])
    up[jmax + 1] = 0.0
    dn[jmax + 1] = 0.0
    return lgsum, up, dn


@njit(cache=True)
def _log_series_core(w, alpha, lgsum, up, dn, cutoff, max_index):
    """log S(w) elementwise; status 1 = no convergence, 2 = table too small."""
    n = w.shape[0]
    out = np.empty(n)
    status = np.zeros(n, np.int8)
    jtab = lgsum.shape[0] - 2
    log_alpha = math.log(alpha)
    inv1a = 1.0 / (1.0 + alpha)
    for i in range(n):
        wi = w[i]
        if not np.isfinite(wi):
            if wi == -np.inf:
                out[i] = -np.inf
                continue
            status[i] = _STATUS_NONCONV
            out[i] = np.nan
            continue
        # Continuous stationarity estimate of the maximizing index.
        ex = (wi - alpha * log_alpha) * inv1a
        if ex > 21.0:  # peak beyond ~1.3e9: past any admissible index cap
            status[i] = _STATUS_NONCONV
            out[i] = np.nan
            continue
        j0 = int(math.exp(ex) + 0.5)
        if j0 < 1:
            j0 = 1
        if j0 + 1 > jtab:
            status[i] = _STATUS_TABLE
            out[i] = np.nan
            continue
        # Hill climb to the exact integer argmax (log-terms concave in j).
        f0 = j0 * wi - lgsum[j0]
        while j0 < jtab:
            f1 = (j0 + 1) * wi - lgsum[j0 + 1]
            if f1 <= f0:
                break
            j0 += 1
            f0 = f1
        if j0 >= jtab:
            status[i] = _STATUS_TABLE
            out[i] = np.nan
            continue
        while j0 > 1:
            f1 = (j0 - 1) * wi - lgsum[j0 - 1]
            if f1 <= f0:
                break
            j0 -= 1
            f0 = f1
        if j0 > max_index:
            status[i] = _STATUS_NONCONV
            out[i] = np.nan
            continue

        total = 1.0
        failed = False
        if wi <= _W_EXP_MAX:
            ew = math.exp(wi)
            r = 1.0
            j = j0
            while True:
                if j >= jtab:
                    status[i] = _STATUS_TABLE
                    failed = True
                    break
                if j >= max_index:
                    status[i] = _STATUS_NONCONV
                    failed = True
                    break
                r *= ew * up[j]
                j += 1
                total += r
                if r < cutoff:
                    break
            if not failed and j0 > 1:
                inv_ew = math.exp(-wi)
                r = 1.0
                j = j0
                while j > 1:
                    r *= inv_ew * dn[j]
                    j -= 1
                    total += r
                    if r < cutoff:
                        break
        else:
            # Rare huge-w branch: per-term exponentials relative to the peak.
            j = j0 + 1
            while True:
                if j >= jtab:
                    status[i] = _STATUS_TABLE
                    failed = True
                    break
                if j >= max_index:
                    status[i] = _STATUS_NONCONV
                    failed = True
                    break
                r = math.exp(j * wi - lgsum[j] - f0)
                total += r
                if r < cutoff:
                    break
                j += 1
            if not failed:
                j = j0 - 1
                while j >= 1:
                    r = math.exp(j * wi - lgsum[j] - f0)
                    total += r
                    if r < cutoff:
                        break
                    j -= 1
        if failed:
            out[i] = np.nan
            continue
        out[i] = f0 + math.log(total)
    return out, status


class _TableCache:
    """Per-alpha table store, grown geometrically on demand."""

    def __init__(self):
        self._tables = {}

    def get(self, alpha, jmax_needed):
        entry = self._tables.get(alpha)
        if entry is None or entry[0].shape[0] - 2 < jmax_needed:
            size = 256
            if entry is not None:
                size = entry[0].shape[0] - 2
            while size < jmax_needed:
                size *= 2
            entry = _build_tables(alpha, size)
            self._tables[alpha] = entry
        return entry


_tables = _TableCache()


def _initial_jmax(w, alpha, max_index):
    """Heuristic table size: peak estimate plus a generous expansion margin."""
    wmax = np.max(w, initial=-np.inf)
    if not np.isfinite(wmax):
        return 256
    ex = (wmax - alpha * math.log(alpha)) / (1.0 + alpha)
    jhat = math.exp(min(ex, 21.0))
    width = 14.0 * math.sqrt((jhat + 25.0) / (1.0 + alpha)) + 64.0
    return int(min(jhat + width, max_index + 2.0)) + 2


def _log_series_numpy(w, alpha, cutoff, max_index):
    """Reference path: dense log-sum-exp over an expanding index window."""
    w = np.asarray(w, dtype=float)
    jhi = 64
    while True:
        j = np.arange(1, jhi + 1, dtype=float)
        logterms = np.multiply.outer(w, j) - (gammaln(j + 1.0) + gammaln(j * alpha))
        peak = np.max(logterms, axis=-1)
        tail_ok = logterms[..., -1] < peak + math.log(cutoff)
        if np.all(tail_ok | ~np.isfinite(peak)):
            break
        if jhi >= max_index:
            raise_nonconvergence(alpha, jhi)
        jhi = min(jhi * 2, int(max_index))
    return logsumexp(logterms, axis=-1)


def raise_nonconvergence(alpha, index):
    from .errors import NonConvergence

    raise NonConvergence(
        f"series did not converge within {index} terms (alpha={alpha:g})"
    )


def log_series_sum(w, alpha, cutoff=1e-15, max_index=10**6):
    """log of sum_{j>=1} exp(j*w - lgamma(j+1) - lgamma(j*alpha)), elementwise.

    Parameters
    ----------
    w : array_like
        Log of the series argument, any shape.
    alpha : float
        Positive Gamma-shape increment of the series.
    cutoff : float
        Relative term size below which the expansion stops.
    max_index : int
        Hard cap on the series index; exceeding it raises NonConvergence.
    """
    w = np.ascontiguousarray(w, dtype=float)
    shape = w.shape
    flat = w.ravel()
    if flat.size == 0:
        return np.empty(shape)
    if alpha > _ALPHA_FAST_MAX:
        return _log_series_numpy(w, alpha, cutoff, max_index).reshape(shape)
    jmax = _initial_jmax(flat, alpha, max_index)
    for _ in range(64):
        lgsum, up, dn = _tables.get(alpha, jmax)
        out, status = _log_series_core(
            flat, alpha, lgsum, up, dn, cutoff, int(max_index)
        )
        bad = int(np.max(status, initial=0))
        if bad == _STATUS_OK:
            return out.reshape(shape)
        if bad == _STATUS_NONCONV:
            raise_nonconvergence(alpha, max_index)
        jmax = min(jmax * 2, int(max_index) + 2)
        if jmax >= int(max_index) + 2 and lgsum.shape[0] - 2 >= jmax:
            raise_nonconvergence(alpha, max_index)
    raise_nonconvergence(alpha, max_index)
