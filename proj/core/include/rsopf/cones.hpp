#pragma once

#include <cstddef>
#include <span>
#include <vector>

/// Symmetric-cone algebra used by the interior-point backend. Vectors are
/// laid out as [nonnegative part | second-order block 1 | block 2 | ...].
namespace rsopf::cones {

struct Layout {
    std::size_t lp_dim = 0;
    std::vector<std::size_t> soc_dims;

    std::size_t total() const;
    /// Barrier degree: one per nonnegative coordinate and per second-order block.
    std::size_t degree() const { return lp_dim + soc_dims.size(); }
};

struct SocScaling {
    double eta = 1.0;
    std::vector<double> wbar;  ///< unit hyperbolic point, wbar0^2 - |wbar1|^2 = 1
};

/// Nesterov-Todd scaling W with W z = W^{-1} s = lambda.
struct NtScaling {
    std::vector<double> lp;  ///< sqrt(s / z)
    std::vector<SocScaling> soc;
};

bool is_interior(const Layout& k, std::span<const double> x);

/// Throws DomainError unless s and z are interior.
NtScaling nt_scaling(const Layout& k, std::span<const double> s, std::span<const double> z);

void apply_w(const Layout& k, const NtScaling& w, std::span<const double> in, std::span<double> out);
void apply_w_inv(const Layout& k, const NtScaling& w, std::span<const double> in, std::span<double> out);

/// Jordan product a o b.
void product(const Layout& k, std::span<const double> a, std::span<const double> b, std::span<double> out);
/// Solves lambda o out = d.
void divide(const Layout& k, std::span<const double> lambda, std::span<const double> d, std::span<double> out);

/// x += alpha e, e the cone identity.
void add_identity(const Layout& k, std::span<double> x, double alpha);

/// Largest alpha >= 0 with x + alpha dx in the cone (x interior); returns
/// `cap` if the ray never leaves the cone before `cap`.
double max_step(const Layout& k, std::span<const double> x, std::span<const double> dx, double cap = 1e10);

/// Smallest alpha such that x + alpha e lies in the cone (negative when x is
/// already interior).
double identity_shift(const Layout& k, std::span<const double> x);

}  // namespace rsopf::cones
