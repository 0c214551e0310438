"""Pure-Python solver kernels.

Mirrors ``_ckernels.pyx`` operation for operation; it is used when the
compiled extension is unavailable or ``TDMFAIR_PURE_PYTHON`` is set. Arrays
are 1-D float64 buffers; outputs are written in place.

Conventions: ``a = p / d**eta`` is a node's capacity supremum, ``g = d**eta``
its path-loss factor.
"""
import math

BACKEND = "python"

# shooting outcomes
LOW = -1
HIGH = 1
ORDER = 2

EQUALIZED = 0
NOT_EQUALIZED = 1

_SERIES_CUTOFF = 0.5


def rate(t, a):
    if t <= 0.0 or a <= 0.0:
        return 0.0
    return t * math.log1p(a / t)


def min_time_for_rate(c, a, max_iter):
    """Smallest ``t`` with ``t*log(1 + a/t) = c``; requires ``0 <= c < a``.

    Newton iterations from the left of the root. The rate is concave and
    increasing in ``t`` so the iterates increase monotonically.
    """
    if c <= 0.0:
        return 0.0, 0
    t = c
    it = 0
    while rate(t, a) > c and it < max_iter:
        t *= 0.5
        it += 1
    while it < max_iter:
        it += 1
        u = a / t
        f = t * math.log1p(u)
        slope = math.log1p(u) - a / (t + a)
        if slope <= 0.0:
            break
        step = (c - f) / slope
        if step <= 2.2e-16 * t:
            break
        t += step
    return t, it


def ta_equalize(a, rate_tol, max_iter, times_out):
    """Common rate under fixed powers with all frame time used.

    Bisection on the common rate ``c``; ``sum_i t_i(c) <= 1`` is the
    feasibility test. Writes the times at the feasible end of the bracket
    and returns ``(c, iterations, residual)``, the residual being the larger
    of the relative bracket width and the unused frame fraction.
    """
    n = len(a)
    hi = math.log1p(a[0])
    for i in range(1, n):
        v = math.log1p(a[i])
        if v < hi:
            hi = v
    lo = 0.0
    slack = 1.0
    it = 0
    width = 1.0
    while it < max_iter:
        it += 1
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            # c is exact to the last bit; leftover frame is rounding
            width = 0.0
            slack = 0.0
            break
        total = 0.0
        for i in range(n):
            t, _ = min_time_for_rate(mid, a[i], 200)
            total += t
        if total <= 1.0:
            lo = mid
            slack = 1.0 - total
        else:
            hi = mid
        if lo > 0.0:
            width = (hi - lo) / lo
            # a node near its rate ceiling makes the frame use very
            # sensitive to c, so the frame must be tight as well
            if width <= rate_tol and slack <= rate_tol:
                break
    for i in range(n):
        t, _ = min_time_for_rate(lo, a[i], 200)
        times_out[i] = t
    return lo, it, max(width, slack)


def h(x):
    """``1 + (x - 1) * exp(x)``, series form near 0 to avoid cancellation."""
    if x < _SERIES_CUTOFF:
        term = x * x * 0.5
        total = term
        k = 2
        while term > 1e-18 * total:
            k += 1
            term *= x / k
            total += term * (k - 1)
        return total
    return 1.0 + (x - 1.0) * math.exp(x)


def h_inverse(y, max_iter):
    """Non-negative root of ``h(x) = y`` by Newton from the right (h is convex)."""
    if y <= 0.0:
        return 0.0
    if y < math.e:
        x = math.sqrt(2.0 * y)
    else:
        x = 1.0 + math.log(y)
    for _ in range(max_iter):
        step = (h(x) - y) / (x * math.exp(x))
        if step <= 2.2e-16 * x:
            break
        x -= step
    return x


def _tapa_point(g, mu, xs):
    n = len(g)
    inv_sum = 0.0
    for i in range(n):
        x = h_inverse(mu / g[i], 200)
        xs[i] = x
        inv_sum += 1.0 / x
    c = 1.0 / inv_sum
    power = 0.0
    for i in range(n):
        power += g[i] * math.expm1(xs[i]) / xs[i]
    return c, c * power


def tapa_equalize(g, pbar, max_iter, times_out, powers_out):
    """Joint time and power equalization.

    For a common rate ``c`` the cheapest schedule minimizes
    ``sum_i g_i t_i (exp(c/t_i) - 1)`` under ``sum_i t_i = 1``; its KKT
    conditions read ``g_i h(c/t_i) = mu``. Each multiplier ``mu`` fixes every
    ``x_i = c/t_i``, then ``c`` from the time budget and the total power, which
    grows with ``mu``. Bisection on ``log mu`` meets the power budget.
    Returns ``(c, iterations, relative power mismatch)``.
    """
    n = len(g)
    xs = [0.0] * n
    it = 0
    lo = hi = 1.0
    _, p = _tapa_point(g, hi, xs)
    if p < pbar:
        while p < pbar and it < max_iter:
            lo = hi
            hi *= 16.0
            _, p = _tapa_point(g, hi, xs)
            it += 1
    else:
        while p >= pbar and it < max_iter:
            hi = lo
            lo /= 16.0
            _, p = _tapa_point(g, lo, xs)
            it += 1
    while it < max_iter:
        it += 1
        mid = math.sqrt(lo * hi)
        if not lo < mid < hi:
            break
        _, p = _tapa_point(g, mid, xs)
        if p < pbar:
            lo = mid
        else:
            hi = mid
    c, p = _tapa_point(g, lo, xs)
    for i in range(n):
        times_out[i] = c / xs[i]
        powers_out[i] = times_out[i] * g[i] * math.expm1(xs[i])
    return c, it, abs(p - pbar) / pbar


def shoot(powers, eta, length, c, d_out):
    """Walk from the pinned far node toward the sink with all ratios equal to ``c``.

    Node ``n`` sits at ``length``; each cell gets area ``rate_i / c`` and the
    next node mirrors the current one about the shared cell boundary.
    Returns ``(status, left boundary)``: LOW when ``c`` is too small (a node
    crosses the sink or the cells overshoot it), HIGH when the cells stop short
    of the sink, ORDER when two nodes would swap.
    """
    n = len(powers)
    inv_n = 1.0 / n
    d = length
    d_out[n - 1] = d
    m = length
    for i in range(n - 1, -1, -1):
        r = inv_n * math.log1p(n * powers[i] / d ** eta)
        m -= r / c
        if i > 0:
            prev = 2.0 * m - d
            if prev <= 0.0:
                return LOW, m
            if prev >= d:
                return ORDER, m
            d = prev
            d_out[i - 1] = d
    if m < 0.0:
        return LOW, m
    return HIGH, m


def np_equalize(powers, eta, length, max_iter, d_out):
    """Placement with the far node pinned that equalizes every rate per area.

    Bisection on the common value in log space. Returns
    ``(c, iterations, relative bracket width, status)``; status is
    NOT_EQUALIZED when no ordered equalizing placement exists.
    """
    it = 0
    lo = hi = 1.0
    st, _ = shoot(powers, eta, length, hi, d_out)
    if st == LOW:
        while st == LOW and it < max_iter:
            lo = hi
            hi *= 16.0
            st, _ = shoot(powers, eta, length, hi, d_out)
            it += 1
    else:
        while st != LOW and it < max_iter:
            hi = lo
            lo /= 16.0
            st, _ = shoot(powers, eta, length, lo, d_out)
            it += 1
    while it < max_iter:
        it += 1
        mid = math.sqrt(lo * hi)
        if not lo < mid < hi:
            break
        st, _ = shoot(powers, eta, length, mid, d_out)
        if st == LOW:
            lo = mid
        else:
            hi = mid
    st, _ = shoot(powers, eta, length, hi, d_out)
    width = (hi - lo) / hi
    if st != HIGH:
        return hi, it, width, NOT_EQUALIZED
    return hi, it, width, EQUALIZED


def powers_for_areas(g, areas, pbar, max_iter, powers_out):
    """Power split equalizing rate per area for fixed cells, equal time shares.

    A node with cell ``A_i`` reaches ``c * A_i`` with power
    ``(g_i/n) * expm1(n c A_i)``. Bisection on ``c`` against the budget;
    powers at the feasible end are rescaled to spend ``pbar`` exactly.
    Returns ``(c, iterations, relative bracket width)``.
    """
    n = len(g)
    inv_n = 1.0 / n

    def total(c):
        s = 0.0
        for i in range(n):
            s += g[i] * inv_n * math.expm1(n * c * areas[i])
        return s

    # one node alone spending the budget bounds the common value; every term
    # stays finite there
    hi = math.log1p(n * pbar / g[0]) / (n * areas[0])
    for i in range(1, n):
        v = math.log1p(n * pbar / g[i]) / (n * areas[i])
        if v < hi:
            hi = v
    lo = 0.0
    it = 0
    width = 1.0
    while it < max_iter:
        it += 1
        mid = 0.5 * (lo + hi)
        if not lo < mid < hi:
            width = 0.0
            break
        if total(mid) <= pbar:
            lo = mid
        else:
            hi = mid
        if lo > 0.0:
            width = (hi - lo) / lo
            if width <= 1e-15:
                break
    s = 0.0
    for i in range(n):
        powers_out[i] = g[i] * inv_n * math.expm1(n * lo * areas[i])
        s += powers_out[i]
    scale = pbar / s
    for i in range(n):
        powers_out[i] *= scale
    return lo, it, width
