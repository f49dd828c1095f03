// Homogeneous self-dual interior-point method with Nesterov-Todd scaling
// and Mehrotra predictor-corrector steps, in the solver form
//   min c'x  s.t.  A x = b,  G x + s = h,  s in K
// where K is a product of a nonnegative orthant and second-order cones.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>

#include <Eigen/SparseCholesky>
#include <Eigen/SparseCore>

#include "rsopf/conic.hpp"
#include "rsopf/cones.hpp"
#include "rsopf/error.hpp"

namespace rsopf {

namespace {

using Eigen::VectorXd;
using SpMat = Eigen::SparseMatrix<double>;

constexpr double kSqrtHalf = 1.0 / std::numbers::sqrt2;

double inf_norm(const VectorXd& v) { return v.size() ? v.lpNorm<Eigen::Infinity>() : 0.0; }

std::span<const double> view(const VectorXd& v) { return {v.data(), static_cast<std::size_t>(v.size())}; }
std::span<double> view(VectorXd& v) { return {v.data(), static_cast<std::size_t>(v.size())}; }

/// Where a program row lands in solver form.
struct RowMap {
    bool equality = false;
    std::size_t index = 0;  ///< row of A or G
    int rotated = 0;        ///< 1 / 2 for the two rotated legs, 0 otherwise
};

struct StandardForm {
    std::size_t n = 0, p = 0, m = 0;
    SpMat A, G;
    VectorXd b, h, c;
    cones::Layout layout;
    std::vector<RowMap> rows;  // per program row
};

StandardForm to_standard(const ConicProgram& prog) {
    StandardForm sf;
    sf.n = prog.n_vars();
    sf.rows.resize(prog.row_count());

    // Equalities, then nonnegative rows, then second-order blocks.
    std::size_t eq = 0, lp = 0;
    for (const ConeBlock& b : prog.blocks()) {
        if (b.kind == ConeKind::zero) eq += b.dim;
        if (b.kind == ConeKind::nonnegative) lp += b.dim;
    }
    sf.p = eq;
    sf.layout.lp_dim = lp;
    std::size_t next_eq = 0, next_lp = 0, next_soc = lp;
    for (const ConeBlock& b : prog.blocks()) {
        switch (b.kind) {
            case ConeKind::zero:
                for (std::size_t i = 0; i < b.dim; ++i) sf.rows[b.start + i] = {true, next_eq++, 0};
                break;
            case ConeKind::nonnegative:
                for (std::size_t i = 0; i < b.dim; ++i) sf.rows[b.start + i] = {false, next_lp++, 0};
                break;
            case ConeKind::second_order:
                for (std::size_t i = 0; i < b.dim; ++i) sf.rows[b.start + i] = {false, next_soc + i, 0};
                sf.layout.soc_dims.push_back(b.dim);
                next_soc += b.dim;
                break;
            case ConeKind::rotated_second_order:
                sf.rows[b.start] = {false, next_soc, 1};
                sf.rows[b.start + 1] = {false, next_soc + 1, 2};
                for (std::size_t i = 2; i < b.dim; ++i) sf.rows[b.start + i] = {false, next_soc + i, 0};
                sf.layout.soc_dims.push_back(b.dim);
                next_soc += b.dim;
                break;
        }
    }
    sf.m = next_soc;

    // Rotated legs (u1, u2) map to (t, y0) = ((u1 + u2), (u1 - u2)) / sqrt2;
    // the map is orthogonal and symmetric.
    std::vector<Eigen::Triplet<double>> ta, tg;
    sf.b = VectorXd::Zero(static_cast<Eigen::Index>(sf.p));
    sf.h = VectorXd::Zero(static_cast<Eigen::Index>(sf.m));
    auto emit = [&](const RowMap& rm, auto&& sink) {
        if (rm.rotated == 0) {
            sink(rm.index, 1.0);
        } else if (rm.rotated == 1) {  // u1 contributes to t and y0
            sink(rm.index, kSqrtHalf);
            sink(rm.index + 1, kSqrtHalf);
        } else {  // u2 contributes to t and -y0
            sink(rm.index - 1, kSqrtHalf);
            sink(rm.index, -kSqrtHalf);
        }
    };
    for (const Triplet& t : prog.coefficients()) {
        const RowMap& rm = sf.rows[t.row];
        if (rm.equality) {
            ta.emplace_back(static_cast<int>(rm.index), static_cast<int>(t.col), t.value);
        } else {
            emit(rm, [&](std::size_t r, double f) {
                tg.emplace_back(static_cast<int>(r), static_cast<int>(t.col), f * t.value);
            });
        }
    }
    for (std::size_t r = 0; r < prog.row_count(); ++r) {
        const RowMap& rm = sf.rows[r];
        const double v = prog.rhs()[r];
        if (rm.equality) {
            sf.b[static_cast<Eigen::Index>(rm.index)] = v;
        } else {
            emit(rm, [&](std::size_t row, double f) { sf.h[static_cast<Eigen::Index>(row)] += f * v; });
        }
    }
    sf.A.resize(static_cast<Eigen::Index>(sf.p), static_cast<Eigen::Index>(sf.n));
    sf.A.setFromTriplets(ta.begin(), ta.end());
    sf.G.resize(static_cast<Eigen::Index>(sf.m), static_cast<Eigen::Index>(sf.n));
    sf.G.setFromTriplets(tg.begin(), tg.end());
    sf.c = Eigen::Map<const VectorXd>(prog.objective().data(), static_cast<Eigen::Index>(sf.n));
    return sf;
}

/// Ruiz equilibration: rows of [A; G] and columns are scaled towards unit
/// infinity norm; rows of one second-order block share a factor.
struct Scaling {
    VectorXd row_a, row_g, col;
};

Scaling equilibrate(StandardForm& sf, bool enabled) {
    Scaling sc{VectorXd::Ones(static_cast<Eigen::Index>(sf.p)), VectorXd::Ones(static_cast<Eigen::Index>(sf.m)),
               VectorXd::Ones(static_cast<Eigen::Index>(sf.n))};
    if (!enabled) return sc;
    for (int pass = 0; pass < 20; ++pass) {
        VectorXd ra = VectorXd::Zero(sf.A.rows()), rg = VectorXd::Zero(sf.G.rows()), cn = VectorXd::Zero(sf.A.cols());
        for (int k = 0; k < sf.A.outerSize(); ++k)
            for (SpMat::InnerIterator it(sf.A, k); it; ++it) {
                const double a = std::abs(it.value());
                ra[it.row()] = std::max(ra[it.row()], a);
                cn[it.col()] = std::max(cn[it.col()], a);
            }
        for (int k = 0; k < sf.G.outerSize(); ++k)
            for (SpMat::InnerIterator it(sf.G, k); it; ++it) {
                const double a = std::abs(it.value());
                rg[it.row()] = std::max(rg[it.row()], a);
                cn[it.col()] = std::max(cn[it.col()], a);
            }
        std::size_t off = sf.layout.lp_dim;
        for (std::size_t d : sf.layout.soc_dims) {
            double mx = 0.0;
            for (std::size_t i = 0; i < d; ++i) mx = std::max(mx, rg[static_cast<Eigen::Index>(off + i)]);
            for (std::size_t i = 0; i < d; ++i) rg[static_cast<Eigen::Index>(off + i)] = mx;
            off += d;
        }
        auto factor = [](double v) { return v > 0.0 ? 1.0 / std::sqrt(v) : 1.0; };
        double worst = 0.0;
        for (Eigen::Index i = 0; i < ra.size(); ++i) {
            worst = std::max(worst, std::abs(1.0 - ra[i]));
            ra[i] = factor(ra[i]);
        }
        for (Eigen::Index i = 0; i < rg.size(); ++i) {
            worst = std::max(worst, std::abs(1.0 - rg[i]));
            rg[i] = factor(rg[i]);
        }
        for (Eigen::Index i = 0; i < cn.size(); ++i) cn[i] = factor(cn[i]);
        sf.A = ra.asDiagonal() * sf.A * cn.asDiagonal();
        sf.G = rg.asDiagonal() * sf.G * cn.asDiagonal();
        sc.row_a = sc.row_a.cwiseProduct(ra);
        sc.row_g = sc.row_g.cwiseProduct(rg);
        sc.col = sc.col.cwiseProduct(cn);
        if (worst < 1e-3) break;
    }
    sf.b = sf.b.cwiseProduct(sc.row_a);
    sf.h = sf.h.cwiseProduct(sc.row_g);
    sf.c = sf.c.cwiseProduct(sc.col);
    return sc;
}

/// KKT system [[0, A', G'], [A, 0, 0], [G, 0, -W^2]] solved through the
/// reduced quasi-definite form [[G' W^-2 G + dI, A'], [A, -dI]] with
/// iterative refinement against the unregularised system.
class KktSolver {
public:
    KktSolver(const StandardForm& sf, double delta) : sf_(sf), delta0_(delta) {
        n_ = static_cast<Eigen::Index>(sf.n);
        p_ = static_cast<Eigen::Index>(sf.p);
        m_ = static_cast<Eigen::Index>(sf.m);
        Gt_ = sf.G.transpose();
    }

    /// Factors with the scaling W, raising the regularisation on breakdown.
    bool factor(const cones::NtScaling& w) {
        w_ = w;
        const auto& lay = sf_.layout;
        std::vector<Eigen::Triplet<double>> td;
        for (std::size_t i = 0; i < lay.lp_dim; ++i) td.emplace_back(int(i), int(i), 1.0 / (w.lp[i] * w.lp[i]));
        std::size_t off = lay.lp_dim;
        for (std::size_t b = 0; b < lay.soc_dims.size(); ++b) {
            const std::size_t d = lay.soc_dims[b];
            const auto& sc = w.soc[b];
            const double ie2 = 1.0 / (sc.eta * sc.eta);
            // W^-2 = eta^-2 (2 v v' - J), v = J wbar
            for (std::size_t i = 0; i < d; ++i) {
                const double vi = i == 0 ? sc.wbar[0] : -sc.wbar[i];
                for (std::size_t j = 0; j < d; ++j) {
                    const double vj = j == 0 ? sc.wbar[0] : -sc.wbar[j];
                    double v = 2.0 * vi * vj;
                    if (i == j) v += i == 0 ? -1.0 : 1.0;
                    td.emplace_back(int(off + i), int(off + j), ie2 * v);
                }
            }
            off += d;
        }
        SpMat D(m_, m_);
        D.setFromTriplets(td.begin(), td.end());
        const SpMat H = Gt_ * D * sf_.G;

        for (delta_ = delta0_; delta_ <= 1e-4; delta_ *= 100.0) {
            std::vector<Eigen::Triplet<double>> t;
            t.reserve(static_cast<std::size_t>(H.nonZeros() + sf_.A.nonZeros() + n_ + p_));
            for (int k = 0; k < H.outerSize(); ++k)
                for (SpMat::InnerIterator it(H, k); it; ++it)
                    if (it.row() >= it.col()) t.emplace_back(int(it.row()), int(it.col()), it.value());
            for (int k = 0; k < sf_.A.outerSize(); ++k)
                for (SpMat::InnerIterator it(sf_.A, k); it; ++it)
                    t.emplace_back(int(n_ + it.row()), int(it.col()), it.value());
            for (Eigen::Index i = 0; i < n_; ++i) t.emplace_back(int(i), int(i), delta_);
            for (Eigen::Index i = 0; i < p_; ++i) t.emplace_back(int(n_ + i), int(n_ + i), -delta_);
            M_.resize(n_ + p_, n_ + p_);
            M_.setFromTriplets(t.begin(), t.end());
            ldlt_.compute(M_);
            if (ldlt_.info() == Eigen::Success) return true;
        }
        return false;
    }

    /// Solves the unregularised system for rhs = [r1; r2; r3].
    VectorXd solve(const VectorXd& rhs) const {
        VectorXd u = reduced(rhs);
        const double scale = 1.0 + inf_norm(rhs);
        double last = std::numeric_limits<double>::infinity();
        for (int it = 0; it < 10; ++it) {
            const VectorXd r = rhs - apply(u);
            const double e = inf_norm(r);
            if (e <= 1e-14 * scale || !(e < 0.5 * last)) break;
            last = e;
            u += reduced(r);
        }
        return u;
    }

private:
    VectorXd w_twice(const VectorXd& v, bool inverse) const {
        VectorXd a(m_), b(m_);
        const auto& lay = sf_.layout;
        if (inverse) {
            cones::apply_w_inv(lay, w_, view(v), view(a));
            cones::apply_w_inv(lay, w_, view(a), view(b));
        } else {
            cones::apply_w(lay, w_, view(v), view(a));
            cones::apply_w(lay, w_, view(a), view(b));
        }
        return b;
    }

    VectorXd reduced(const VectorXd& rhs) const {
        const VectorXd r3 = rhs.tail(m_);
        const VectorXd dr3 = w_twice(r3, true);
        VectorXd red(n_ + p_);
        red << rhs.head(n_) + Gt_ * dr3, rhs.segment(n_, p_);
        const VectorXd xy = ldlt_.solve(red);
        VectorXd u(n_ + p_ + m_);
        u.head(n_ + p_) = xy;
        const VectorXd gx = sf_.G * xy.head(n_);
        u.tail(m_) = w_twice(gx - r3, true);
        return u;
    }

    VectorXd apply(const VectorXd& u) const {
        VectorXd out(n_ + p_ + m_);
        const VectorXd uz = u.tail(m_);
        out.head(n_) = sf_.A.transpose() * u.segment(n_, p_) + Gt_ * uz;
        out.segment(n_, p_) = sf_.A * u.head(n_);
        out.tail(m_) = sf_.G * u.head(n_) - w_twice(uz, false);
        return out;
    }

    const StandardForm& sf_;
    double delta0_, delta_ = 0.0;
    Eigen::Index n_ = 0, p_ = 0, m_ = 0;
    SpMat Gt_, M_;
    cones::NtScaling w_;
    Eigen::SimplicialLDLT<SpMat, Eigen::Lower, Eigen::AMDOrdering<int>> ldlt_;
};

struct Iterate {
    VectorXd x, y, z, s;
    double tau = 1.0, kappa = 1.0;
};

struct Metrics {
    double pres = 0, dres = 0, pcost = 0, dcost = 0, gap = 0, relgap = 0;
    double infeas_cert = std::numeric_limits<double>::infinity();
    double unbnd_cert = std::numeric_limits<double>::infinity();
    double score = std::numeric_limits<double>::infinity();
};

/// Problem data in original units used for stopping decisions.
struct Original {
    SpMat A, G;
    VectorXd b, h, c;
    double nb = 1, nh = 1, nc = 1;
};

void unscale(const Scaling& sc, const Iterate& it, VectorXd& x, VectorXd& y, VectorXd& z, VectorXd& s) {
    x = it.x.cwiseProduct(sc.col);
    y = it.y.cwiseProduct(sc.row_a);
    z = it.z.cwiseProduct(sc.row_g);
    s = it.s.cwiseQuotient(sc.row_g);
}

Metrics measure(const Original& o, const Scaling& sc, const Iterate& it) {
    VectorXd x, y, z, s;
    unscale(sc, it, x, y, z, s);
    Metrics m;
    const double tau = it.tau;
    const VectorXd ax = o.A * x;
    const VectorXd gxs = o.G * x + s;
    const VectorXd aty = o.A.transpose() * y + o.G.transpose() * z;
    m.pres = std::max(inf_norm(ax - o.b * tau) / o.nb, inf_norm(gxs - o.h * tau) / o.nh) / tau;
    m.dres = inf_norm(aty + o.c * tau) / o.nc / tau;
    const double cx = o.c.dot(x);
    const double byhz = o.b.dot(y) + o.h.dot(z);
    m.pcost = cx / tau;
    m.dcost = -byhz / tau;
    m.gap = s.dot(z) / (tau * tau);
    m.relgap = std::max(m.gap, std::abs(m.pcost - m.dcost)) / (1.0 + std::min(std::abs(m.pcost), std::abs(m.dcost)));
    if (byhz < 0.0) m.infeas_cert = inf_norm(aty) / o.nc / (-byhz);
    if (cx < 0.0) m.unbnd_cert = std::max(inf_norm(ax) / o.nb, inf_norm(gxs) / o.nh) / (-cx);
    m.score = std::max({m.pres, m.dres, m.relgap});
    return m;
}

class HsdeSolver {
public:
    HsdeSolver(const ConicProgram& prog, const SolverOptions& opt) : prog_(prog), opt_(opt) {}

    ConicSolution run() {
        const auto t0 = std::chrono::steady_clock::now();
        sf_ = to_standard(prog_);
        orig_.A = sf_.A;
        orig_.G = sf_.G;
        orig_.b = sf_.b;
        orig_.h = sf_.h;
        orig_.c = sf_.c;
        orig_.nb = std::max(1.0, inf_norm(sf_.b));
        orig_.nh = std::max(1.0, inf_norm(sf_.h));
        orig_.nc = std::max(1.0, inf_norm(sf_.c));
        scale_ = equilibrate(sf_, opt_.equilibrate);

        ConicSolution sol = iterate();
        sol.solve_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        return sol;
    }

private:
    ConicSolution iterate() {
        KktSolver kkt(sf_, 1e-9);
        const auto& lay = sf_.layout;
        const Eigen::Index n = static_cast<Eigen::Index>(sf_.n);
        const Eigen::Index p = static_cast<Eigen::Index>(sf_.p);
        const Eigen::Index m = static_cast<Eigen::Index>(sf_.m);
        const double degree = static_cast<double>(lay.degree());

        Iterate cur;
        if (!initialise(kkt, cur)) return finish(cur, SolveStatus::numerical_limit, 0);

        Iterate best = cur;
        Metrics best_m;
        VectorXd rhs1(n + p + m);
        rhs1 << -sf_.c, sf_.b, sf_.h;
        VectorXd lambda(m), tmp(m), ds(m), dsa(m), wdz(m), winvds(m), corr(m);

        int iter = 0;
        for (; iter <= opt_.max_iter; ++iter) {
            const Metrics met = measure(orig_, scale_, cur);
            if (opt_.verbose)
                std::fprintf(stderr, "%3d pcost %+.9e dcost %+.9e pres %.2e dres %.2e gap %.2e tau %.2e kap %.2e\n",
                             iter, met.pcost, met.dcost, met.pres, met.dres, met.relgap, cur.tau, cur.kappa);
            if (std::isfinite(met.score) && met.score < best_m.score) {
                best = cur;
                best_m = met;
            }
            if (met.pres <= opt_.tol && met.dres <= opt_.tol && met.relgap <= opt_.tol) {
                ConicSolution sol = finish(cur, SolveStatus::optimal, iter);
                if (sol.residuals.primal <= opt_.tol && sol.residuals.cone <= opt_.tol) return sol;
            }
            if (met.infeas_cert <= opt_.tol && cur.tau < cur.kappa)
                return finish(cur, SolveStatus::infeasible, iter);
            if (met.unbnd_cert <= opt_.tol && cur.tau < cur.kappa)
                return finish(cur, SolveStatus::unbounded, iter);
            if (iter == opt_.max_iter) break;

            // Residuals of the homogeneous embedding.
            const VectorXd r1 = sf_.A.transpose() * cur.y + sf_.G.transpose() * cur.z + sf_.c * cur.tau;
            const VectorXd r2 = sf_.A * cur.x - sf_.b * cur.tau;
            const VectorXd r3 = cur.s + sf_.G * cur.x - sf_.h * cur.tau;
            const double r4 = cur.kappa + sf_.c.dot(cur.x) + sf_.b.dot(cur.y) + sf_.h.dot(cur.z);
            const double mu = (cur.s.dot(cur.z) + cur.tau * cur.kappa) / (degree + 1.0);

            cones::NtScaling w;
            try {
                w = cones::nt_scaling(lay, view(cur.s), view(cur.z));
            } catch (const DomainError&) {
                break;
            }
            cones::apply_w(lay, w, view(cur.z), view(lambda));
            if (!kkt.factor(w)) break;

            const VectorXd u1 = kkt.solve(rhs1);
            const double den = sf_.c.dot(u1.head(n)) + sf_.b.dot(u1.segment(n, p)) +
                               sf_.h.dot(u1.tail(m)) - cur.kappa / cur.tau;

            struct Step {
                VectorXd dx, dy, dz, dsv;
                double dtau = 0, dkappa = 0;
            };
            auto direction = [&](double sigma, const VectorXd& dsvec, double dkap) {
                // W (lambda \ ds)
                cones::divide(lay, view(lambda), view(dsvec), view(tmp));
                VectorXd wl(m);
                cones::apply_w(lay, w, view(tmp), view(wl));
                VectorXd rhs2(n + p + m);
                rhs2 << -(1.0 - sigma) * r1, -(1.0 - sigma) * r2, -(1.0 - sigma) * r3 - wl;
                const VectorXd u2 = kkt.solve(rhs2);
                const double num = -(1.0 - sigma) * r4 - dkap / cur.tau -
                                   (sf_.c.dot(u2.head(n)) + sf_.b.dot(u2.segment(n, p)) + sf_.h.dot(u2.tail(m)));
                Step st;
                st.dtau = num / den;
                st.dx = u2.head(n) + st.dtau * u1.head(n);
                st.dy = u2.segment(n, p) + st.dtau * u1.segment(n, p);
                st.dz = u2.tail(m) + st.dtau * u1.tail(m);
                // ds = W (lambda \ ds - W dz)
                VectorXd wdzv(m), inner(m);
                cones::apply_w(lay, w, view(st.dz), view(wdzv));
                inner = tmp - wdzv;
                st.dsv.resize(m);
                cones::apply_w(lay, w, view(inner), view(st.dsv));
                st.dkappa = (dkap - cur.kappa * st.dtau) / cur.tau;
                return st;
            };
            auto step_length = [&](const Step& st) {
                double a = std::min(cones::max_step(lay, view(cur.s), view(st.dsv)),
                                    cones::max_step(lay, view(cur.z), view(st.dz)));
                if (st.dtau < 0.0) a = std::min(a, -cur.tau / st.dtau);
                if (st.dkappa < 0.0) a = std::min(a, -cur.kappa / st.dkappa);
                return a;
            };

            // Predictor.
            cones::product(lay, view(lambda), view(lambda), view(dsa));
            dsa = -dsa;
            const Step aff = direction(0.0, dsa, -cur.tau * cur.kappa);
            const double alpha_aff = std::min(1.0, step_length(aff));
            const double sigma = std::clamp(std::pow(1.0 - alpha_aff, 3), 0.0, 1.0);

            // Corrector.
            cones::apply_w_inv(lay, w, view(aff.dsv), view(winvds));
            cones::apply_w(lay, w, view(aff.dz), view(wdz));
            cones::product(lay, view(winvds), view(wdz), view(corr));
            ds = dsa - corr;
            cones::add_identity(lay, view(ds), sigma * mu);
            const double dkap = -cur.tau * cur.kappa - aff.dtau * aff.dkappa + sigma * mu;
            const Step st = direction(sigma, ds, dkap);
            const double alpha = std::min(1.0, 0.99 * step_length(st));
            if (!(alpha > 0.0) || !std::isfinite(alpha)) break;

            Iterate next = cur;
            next.x += alpha * st.dx;
            next.y += alpha * st.dy;
            next.z += alpha * st.dz;
            next.s += alpha * st.dsv;
            next.tau += alpha * st.dtau;
            next.kappa += alpha * st.dkappa;
            if (!next.x.allFinite() || !next.z.allFinite() || !next.s.allFinite() || !(next.tau > 0.0)) break;
            cur = std::move(next);
            // Keep the embedding bounded.
            const double norm = std::max({cur.tau, cur.kappa, 1.0});
            if (norm > 1e8) {
                const double f = 1.0 / norm;
                cur.x *= f;
                cur.y *= f;
                cur.z *= f;
                cur.s *= f;
                cur.tau *= f;
                cur.kappa *= f;
            }
        }
        ConicSolution sol = finish(best, SolveStatus::numerical_limit, iter);
        return sol;
    }

    bool initialise(KktSolver& kkt, Iterate& it) {
        const auto& lay = sf_.layout;
        const Eigen::Index n = static_cast<Eigen::Index>(sf_.n);
        const Eigen::Index p = static_cast<Eigen::Index>(sf_.p);
        const Eigen::Index m = static_cast<Eigen::Index>(sf_.m);
        cones::NtScaling ident;
        ident.lp.assign(lay.lp_dim, 1.0);
        for (std::size_t d : lay.soc_dims) {
            cones::SocScaling sc;
            sc.wbar.assign(d, 0.0);
            sc.wbar[0] = 1.0;
            ident.soc.push_back(sc);
        }
        if (!kkt.factor(ident)) return false;
        VectorXd r(n + p + m);
        r << VectorXd::Zero(n), sf_.b, sf_.h;
        VectorXd u = kkt.solve(r);
        it.x = u.head(n);
        it.s = -u.tail(m);
        double a = cones::identity_shift(lay, view(it.s));
        if (a >= -1e-8 || !cones::is_interior(lay, view(it.s))) cones::add_identity(lay, view(it.s), 1.0 + std::max(a, 0.0));

        r << -sf_.c, VectorXd::Zero(p), VectorXd::Zero(m);
        u = kkt.solve(r);
        it.y = u.segment(n, p);
        it.z = u.tail(m);
        a = cones::identity_shift(lay, view(it.z));
        if (a >= -1e-8 || !cones::is_interior(lay, view(it.z))) cones::add_identity(lay, view(it.z), 1.0 + std::max(a, 0.0));
        it.tau = 1.0;
        it.kappa = 1.0;
        return it.x.allFinite() && it.s.allFinite() && it.z.allFinite();
    }

    ConicSolution finish(const Iterate& it, SolveStatus status, int iter) {
        ConicSolution sol;
        sol.status = status;
        sol.iterations = iter;
        VectorXd x, y, z, s;
        unscale(scale_, it, x, y, z, s);
        double div = 1.0;
        if (status == SolveStatus::infeasible) {
            div = -(orig_.b.dot(y) + orig_.h.dot(z));
        } else if (status == SolveStatus::unbounded) {
            div = -orig_.c.dot(x);
        } else {
            div = it.tau;
        }
        if (!(div > 0.0)) div = 1.0;
        x /= div;
        y /= div;
        z /= div;
        s /= div;
        sol.x.assign(x.data(), x.data() + x.size());

        sol.dual.assign(prog_.row_count(), 0.0);
        for (std::size_t r = 0; r < prog_.row_count(); ++r) {
            const RowMap& rm = sf_.rows[r];
            if (rm.equality) {
                sol.dual[r] = y[static_cast<Eigen::Index>(rm.index)];
            } else if (rm.rotated == 1) {
                sol.dual[r] = kSqrtHalf * (z[Eigen::Index(rm.index)] + z[Eigen::Index(rm.index + 1)]);
            } else if (rm.rotated == 2) {
                sol.dual[r] = kSqrtHalf * (z[Eigen::Index(rm.index - 1)] - z[Eigen::Index(rm.index)]);
            } else {
                sol.dual[r] = z[static_cast<Eigen::Index>(rm.index)];
            }
        }
        sol.objective = prog_.objective_value(sol.x);
        sol.dual_objective = -(orig_.b.dot(y) + orig_.h.dot(z)) + prog_.objective_constant();

        const ResidualReport rep = check_residuals(prog_, sol.x);
        double rhs_norm = 1.0;
        for (double v : prog_.rhs()) rhs_norm = std::max(rhs_norm, std::abs(v));
        sol.residuals.primal = std::max(rep.max_equality, rep.max_nonnegative) / rhs_norm;
        sol.residuals.cone = rep.max_cone / rhs_norm;
        sol.residuals.dual = inf_norm(orig_.A.transpose() * y + orig_.G.transpose() * z + orig_.c) / orig_.nc;
        const double pc = sol.objective - prog_.objective_constant();
        const double dc = sol.dual_objective - prog_.objective_constant();
        sol.residuals.gap = std::abs(pc - dc) / (1.0 + std::min(std::abs(pc), std::abs(dc)));
        return sol;
    }

    const ConicProgram& prog_;
    SolverOptions opt_;
    StandardForm sf_;
    Original orig_;
    Scaling scale_;
};

}  // namespace

std::vector<std::string> available_backends() { return {"hsde"}; }

ConicSolution solve_conic(const ConicProgram& p, const SolverOptions& options) {
    if (options.backend != "hsde") throw BackendUnavailable("conic backend '" + options.backend + "' is not built in");
    if (!(options.tol > 0.0 && options.tol <= 1e-2)) throw DomainError("solver tolerance must lie in (0, 1e-2]");
    p.validate();
    return HsdeSolver(p, options).run();
}

ConicSolution solve_conic(const ConicProgram& p, double tol) {
    SolverOptions opt;
    opt.tol = tol;
    return solve_conic(p, opt);
}

}  // namespace rsopf
