#include "rsopf/cones.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "rsopf/error.hpp"

namespace rsopf::cones {

namespace {

double tail_norm(std::span<const double> v) {
    double s = 0.0;
    for (std::size_t i = 1; i < v.size(); ++i) s += v[i] * v[i];
    return std::sqrt(s);
}

/// t^2 - |y|^2 computed as (t - |y|)(t + |y|).
double lorentz(std::span<const double> v) {
    const double n = tail_norm(v);
    return (v[0] - n) * (v[0] + n);
}

template <class Fn>
void for_each_soc(const Layout& k, Fn&& fn) {
    std::size_t off = k.lp_dim;
    for (std::size_t b = 0; b < k.soc_dims.size(); ++b) {
        fn(b, off, k.soc_dims[b]);
        off += k.soc_dims[b];
    }
}

/// Smallest positive root of a a^2 + b a + c = 0 for c > 0, or `cap`.
double first_exit(double a, double b, double c, double cap) {
    const double scale = std::max({std::abs(a), std::abs(b), std::abs(c), 1e-300});
    if (std::abs(a) <= 1e-14 * scale) {
        if (b < 0.0) return std::min(cap, -c / b);
        return cap;
    }
    const double disc = b * b - 4.0 * a * c;
    if (disc < 0.0) return cap;  // no real root: never leaves
    const double sq = std::sqrt(disc);
    const double q = -0.5 * (b + std::copysign(sq, b));
    double r1 = q / a;
    double r2 = (q != 0.0) ? c / q : std::numeric_limits<double>::infinity();
    double best = cap;
    if (r1 > 0.0) best = std::min(best, r1);
    if (r2 > 0.0) best = std::min(best, r2);
    return best;
}

}  // namespace

std::size_t Layout::total() const {
    return lp_dim + std::accumulate(soc_dims.begin(), soc_dims.end(), std::size_t{0});
}

bool is_interior(const Layout& k, std::span<const double> x) {
    for (std::size_t i = 0; i < k.lp_dim; ++i)
        if (!(x[i] > 0.0)) return false;
    bool ok = true;
    for_each_soc(k, [&](std::size_t, std::size_t off, std::size_t dim) {
        auto v = x.subspan(off, dim);
        if (!(v[0] > 0.0) || !(lorentz(v) > 0.0)) ok = false;
    });
    return ok;
}

NtScaling nt_scaling(const Layout& k, std::span<const double> s, std::span<const double> z) {
    NtScaling w;
    w.lp.resize(k.lp_dim);
    for (std::size_t i = 0; i < k.lp_dim; ++i) {
        if (!(s[i] > 0.0) || !(z[i] > 0.0)) throw DomainError("NT scaling: point not interior");
        w.lp[i] = std::sqrt(s[i] / z[i]);
    }
    w.soc.resize(k.soc_dims.size());
    for_each_soc(k, [&](std::size_t b, std::size_t off, std::size_t dim) {
        auto sb = s.subspan(off, dim);
        auto zb = z.subspan(off, dim);
        const double sres = lorentz(sb);
        const double zres = lorentz(zb);
        if (!(sres > 0.0) || !(zres > 0.0) || !(sb[0] > 0.0) || !(zb[0] > 0.0))
            throw DomainError("NT scaling: point not interior");
        const double snorm = std::sqrt(sres);
        const double znorm = std::sqrt(zres);
        double dot = 0.0;
        for (std::size_t i = 0; i < dim; ++i) dot += (sb[i] / snorm) * (zb[i] / znorm);
        const double gamma = std::sqrt(0.5 * (1.0 + dot));
        SocScaling& sc = w.soc[b];
        sc.eta = std::sqrt(snorm / znorm);
        sc.wbar.resize(dim);
        sc.wbar[0] = (sb[0] / snorm + zb[0] / znorm) / (2.0 * gamma);
        double tail = 0.0;
        for (std::size_t i = 1; i < dim; ++i) {
            sc.wbar[i] = (sb[i] / snorm - zb[i] / znorm) / (2.0 * gamma);
            tail += sc.wbar[i] * sc.wbar[i];
        }
        // Restore wbar0^2 - |wbar1|^2 = 1 lost to rounding.
        sc.wbar[0] = std::sqrt(1.0 + tail);
    });
    return w;
}

namespace {

void soc_apply(const SocScaling& sc, std::span<const double> in, std::span<double> out, bool inverse) {
    const std::size_t dim = in.size();
    const double w0 = sc.wbar[0];
    double w1x = 0.0;
    for (std::size_t i = 1; i < dim; ++i) w1x += sc.wbar[i] * in[i];
    const double sign = inverse ? -1.0 : 1.0;
    const double factor = inverse ? 1.0 / sc.eta : sc.eta;
    const double x0 = in[0];
    // W = eta [[w0, w1'], [w1, I + w1 w1' / (1 + w0)]]; the inverse flips the sign of w1.
    const double head = w0 * x0 + sign * w1x;
    const double coef = sign * x0 + w1x / (1.0 + w0);
    out[0] = factor * head;
    for (std::size_t i = 1; i < dim; ++i) out[i] = factor * (in[i] + coef * sc.wbar[i]);
}

}  // namespace

void apply_w(const Layout& k, const NtScaling& w, std::span<const double> in, std::span<double> out) {
    for (std::size_t i = 0; i < k.lp_dim; ++i) out[i] = w.lp[i] * in[i];
    for_each_soc(k, [&](std::size_t b, std::size_t off, std::size_t dim) {
        soc_apply(w.soc[b], in.subspan(off, dim), out.subspan(off, dim), false);
    });
}

void apply_w_inv(const Layout& k, const NtScaling& w, std::span<const double> in, std::span<double> out) {
    for (std::size_t i = 0; i < k.lp_dim; ++i) out[i] = in[i] / w.lp[i];
    for_each_soc(k, [&](std::size_t b, std::size_t off, std::size_t dim) {
        soc_apply(w.soc[b], in.subspan(off, dim), out.subspan(off, dim), true);
    });
}

void product(const Layout& k, std::span<const double> a, std::span<const double> b, std::span<double> out) {
    for (std::size_t i = 0; i < k.lp_dim; ++i) out[i] = a[i] * b[i];
    for_each_soc(k, [&](std::size_t, std::size_t off, std::size_t dim) {
        double dot = 0.0;
        for (std::size_t i = 0; i < dim; ++i) dot += a[off + i] * b[off + i];
        const double a0 = a[off];
        const double b0 = b[off];
        out[off] = dot;
        for (std::size_t i = 1; i < dim; ++i) out[off + i] = a0 * b[off + i] + b0 * a[off + i];
    });
}

void divide(const Layout& k, std::span<const double> lambda, std::span<const double> d, std::span<double> out) {
    for (std::size_t i = 0; i < k.lp_dim; ++i) out[i] = d[i] / lambda[i];
    for_each_soc(k, [&](std::size_t, std::size_t off, std::size_t dim) {
        const double l0 = lambda[off];
        double l1d1 = 0.0;
        for (std::size_t i = 1; i < dim; ++i) l1d1 += lambda[off + i] * d[off + i];
        const double det = lorentz(lambda.subspan(off, dim));
        const double x0 = (l0 * d[off] - l1d1) / det;
        out[off] = x0;
        for (std::size_t i = 1; i < dim; ++i) out[off + i] = (d[off + i] - x0 * lambda[off + i]) / l0;
    });
}

void add_identity(const Layout& k, std::span<double> x, double alpha) {
    for (std::size_t i = 0; i < k.lp_dim; ++i) x[i] += alpha;
    for_each_soc(k, [&](std::size_t, std::size_t off, std::size_t) { x[off] += alpha; });
}

double max_step(const Layout& k, std::span<const double> x, std::span<const double> dx, double cap) {
    double alpha = cap;
    for (std::size_t i = 0; i < k.lp_dim; ++i)
        if (dx[i] < 0.0) alpha = std::min(alpha, -x[i] / dx[i]);
    for_each_soc(k, [&](std::size_t, std::size_t off, std::size_t dim) {
        auto xb = x.subspan(off, dim);
        auto db = dx.subspan(off, dim);
        double a = db[0] * db[0];
        double b = xb[0] * db[0];
        for (std::size_t i = 1; i < dim; ++i) {
            a -= db[i] * db[i];
            b -= xb[i] * db[i];
        }
        const double c = lorentz(xb);
        double exit = first_exit(a, 2.0 * b, c, cap);
        // The head must stay positive as well (guards the lower nappe).
        if (db[0] < 0.0) exit = std::min(exit, -xb[0] / db[0]);
        alpha = std::min(alpha, exit);
    });
    return std::max(alpha, 0.0);
}

double identity_shift(const Layout& k, std::span<const double> x) {
    double shift = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < k.lp_dim; ++i) shift = std::max(shift, -x[i]);
    for_each_soc(k, [&](std::size_t, std::size_t off, std::size_t dim) {
        shift = std::max(shift, tail_norm(x.subspan(off, dim)) - x[off]);
    });
    return shift;
}

}  // namespace rsopf::cones
