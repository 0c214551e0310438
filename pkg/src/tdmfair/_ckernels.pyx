# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled solver kernels; see ``_pykernels`` for the reference semantics."""
from libc.math cimport log1p, expm1, exp, log, sqrt, pow, M_E

BACKEND = "cython"

cdef enum:
    C_LOW = -1
    C_HIGH = 1
    C_ORDER = 2

LOW = C_LOW
HIGH = C_HIGH
ORDER = C_ORDER
EQUALIZED = 0
NOT_EQUALIZED = 1

cdef double _SERIES_CUTOFF = 0.5


cdef inline double _rate(double t, double a) nogil:
    if t <= 0.0 or a <= 0.0:
        return 0.0
    return t * log1p(a / t)


def rate(double t, double a):
    return _rate(t, a)


cdef double _min_time(double c, double a, int max_iter, int* iters) nogil:
    cdef double t, u, f, slope, step
    cdef int it = 0
    if c <= 0.0:
        iters[0] = 0
        return 0.0
    t = c
    while _rate(t, a) > c and it < max_iter:
        t *= 0.5
        it += 1
    while it < max_iter:
        it += 1
        u = a / t
        f = t * log1p(u)
        slope = log1p(u) - a / (t + a)
        if slope <= 0.0:
            break
        step = (c - f) / slope
        if step <= 2.2e-16 * t:
            break
        t += step
    iters[0] = it
    return t


def min_time_for_rate(double c, double a, int max_iter):
    cdef int it = 0
    cdef double t = _min_time(c, a, max_iter, &it)
    return t, it


def ta_equalize(const double[::1] a, double rate_tol, int max_iter, double[::1] times_out):
    cdef Py_ssize_t n = a.shape[0], i
    cdef double hi = log1p(a[0]), lo = 0.0, v, mid, total, width = 1.0, slack = 1.0
    cdef int it = 0, inner = 0
    with nogil:
        for i in range(1, n):
            v = log1p(a[i])
            if v < hi:
                hi = v
        while it < max_iter:
            it += 1
            mid = 0.5 * (lo + hi)
            if mid <= lo or mid >= hi:
                width = 0.0
                slack = 0.0
                break
            total = 0.0
            for i in range(n):
                total += _min_time(mid, a[i], 200, &inner)
            if total <= 1.0:
                lo = mid
                slack = 1.0 - total
            else:
                hi = mid
            if lo > 0.0:
                width = (hi - lo) / lo
                if width <= rate_tol and slack <= rate_tol:
                    break
        for i in range(n):
            times_out[i] = _min_time(lo, a[i], 200, &inner)
    return lo, it, max(width, slack)


cdef inline double _h(double x) nogil:
    cdef double term, total
    cdef int k
    if x < _SERIES_CUTOFF:
        term = x * x * 0.5
        total = term
        k = 2
        while term > 1e-18 * total:
            k += 1
            term *= x / k
            total += term * (k - 1)
        return total
    return 1.0 + (x - 1.0) * exp(x)


def h(double x):
    return _h(x)


cdef double _h_inverse(double y, int max_iter) nogil:
    cdef double x, step
    cdef int k
    if y <= 0.0:
        return 0.0
    if y < M_E:
        x = sqrt(2.0 * y)
    else:
        x = 1.0 + log(y)
    for k in range(max_iter):
        step = (_h(x) - y) / (x * exp(x))
        if step <= 2.2e-16 * x:
            break
        x -= step
    return x


def h_inverse(double y, int max_iter):
    return _h_inverse(y, max_iter)


cdef double _tapa_point(const double[::1] g, double mu, double[::1] xs, double* power_out) nogil:
    cdef Py_ssize_t n = g.shape[0], i
    cdef double inv_sum = 0.0, c, power = 0.0, x
    for i in range(n):
        x = _h_inverse(mu / g[i], 200)
        xs[i] = x
        inv_sum += 1.0 / x
    c = 1.0 / inv_sum
    for i in range(n):
        power += g[i] * expm1(xs[i]) / xs[i]
    power_out[0] = c * power
    return c


def tapa_equalize(const double[::1] g, double pbar, int max_iter,
                  double[::1] times_out, double[::1] powers_out):
    cdef Py_ssize_t n = g.shape[0], i
    cdef double[::1] xs = times_out  # scratch; overwritten below
    cdef double lo = 1.0, hi = 1.0, mid, p = 0.0, c
    cdef int it = 0
    with nogil:
        _tapa_point(g, hi, xs, &p)
        if p < pbar:
            while p < pbar and it < max_iter:
                lo = hi
                hi *= 16.0
                _tapa_point(g, hi, xs, &p)
                it += 1
        else:
            while p >= pbar and it < max_iter:
                hi = lo
                lo /= 16.0
                _tapa_point(g, lo, xs, &p)
                it += 1
        while it < max_iter:
            it += 1
            mid = sqrt(lo * hi)
            if not (lo < mid < hi):
                break
            _tapa_point(g, mid, xs, &p)
            if p < pbar:
                lo = mid
            else:
                hi = mid
        c = _tapa_point(g, lo, xs, &p)
        for i in range(n):
            powers_out[i] = (c / xs[i]) * g[i] * expm1(xs[i])
            times_out[i] = c / xs[i]
    return c, it, abs(p - pbar) / pbar


cdef int _shoot(const double[::1] powers, double eta, double length, double c,
                double[::1] d_out, double* m_out) nogil:
    cdef Py_ssize_t n = powers.shape[0], i
    cdef double inv_n = 1.0 / n, d = length, m = length, r, prev
    d_out[n - 1] = d
    for i in range(n - 1, -1, -1):
        r = inv_n * log1p(n * powers[i] / pow(d, eta))
        m -= r / c
        if i > 0:
            prev = 2.0 * m - d
            if prev <= 0.0:
                m_out[0] = m
                return C_LOW
            if prev >= d:
                m_out[0] = m
                return C_ORDER
            d = prev
            d_out[i - 1] = d
    m_out[0] = m
    if m < 0.0:
        return C_LOW
    return C_HIGH


def shoot(const double[::1] powers, double eta, double length, double c, double[::1] d_out):
    cdef double m = 0.0
    cdef int st = _shoot(powers, eta, length, c, d_out, &m)
    return st, m


def np_equalize(const double[::1] powers, double eta, double length, int max_iter, double[::1] d_out):
    cdef double lo = 1.0, hi = 1.0, mid, m = 0.0
    cdef int it = 0, st
    with nogil:
        st = _shoot(powers, eta, length, hi, d_out, &m)
        if st == C_LOW:
            while st == C_LOW and it < max_iter:
                lo = hi
                hi *= 16.0
                st = _shoot(powers, eta, length, hi, d_out, &m)
                it += 1
        else:
            while st != C_LOW and it < max_iter:
                hi = lo
                lo /= 16.0
                st = _shoot(powers, eta, length, lo, d_out, &m)
                it += 1
        while it < max_iter:
            it += 1
            mid = sqrt(lo * hi)
            if not (lo < mid < hi):
                break
            st = _shoot(powers, eta, length, mid, d_out, &m)
            if st == C_LOW:
                lo = mid
            else:
                hi = mid
        st = _shoot(powers, eta, length, hi, d_out, &m)
    if st != C_HIGH:
        return hi, it, (hi - lo) / hi, NOT_EQUALIZED
    return hi, it, (hi - lo) / hi, EQUALIZED


cdef double _area_power(const double[::1] g, const double[::1] areas, double c) nogil:
    cdef Py_ssize_t n = g.shape[0], i
    cdef double inv_n = 1.0 / n, s = 0.0
    for i in range(n):
        s += g[i] * inv_n * expm1(n * c * areas[i])
    return s


def powers_for_areas(const double[::1] g, const double[::1] areas, double pbar, int max_iter,
                     double[::1] powers_out):
    cdef Py_ssize_t n = g.shape[0], i
    cdef double inv_n = 1.0 / n, lo = 0.0, hi, v, mid, width = 1.0, s = 0.0, scale
    cdef int it = 0
    with nogil:
        hi = log1p(n * pbar / g[0]) / (n * areas[0])
        for i in range(1, n):
            v = log1p(n * pbar / g[i]) / (n * areas[i])
            if v < hi:
                hi = v
        while it < max_iter:
            it += 1
            mid = 0.5 * (lo + hi)
            if not (lo < mid < hi):
                width = 0.0
                break
            if _area_power(g, areas, mid) <= pbar:
                lo = mid
            else:
                hi = mid
            if lo > 0.0:
                width = (hi - lo) / lo
                if width <= 1e-15:
                    break
        for i in range(n):
            powers_out[i] = g[i] * inv_n * expm1(n * lo * areas[i])
            s += powers_out[i]
        scale = pbar / s
        for i in range(n):
            powers_out[i] *= scale
    return lo, it, width
