#pragma once

// Channel and system model for single-antenna users received by a
// multi-antenna base station with per-user MMSE filters.

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>

namespace mseregion {

using Complex = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using RVector = Eigen::VectorXd;
using RMatrix = Eigen::MatrixXd;

/// Raised for malformed or out-of-contract inputs.
class InputError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Raised when a computation that cannot fail for valid inputs does.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

namespace detail {

inline void require(bool ok, const std::string& what)
{
    if (!ok) {
        throw InputError(what);
    }
}

} // namespace detail

/// N x K channel matrix; column k is the channel vector of user k.
class ChannelSet {
public:
    explicit ChannelSet(CMatrix entries) : entries_(std::move(entries))
    {
        detail::require(entries_.rows() >= 1 && entries_.cols() >= 1,
                        "channel matrix must have at least one antenna and one user");
        detail::require(entries_.allFinite(), "channel matrix has non-finite entries");
        for (Eigen::Index k = 0; k < entries_.cols(); ++k) {
            detail::require(entries_.col(k).squaredNorm() > 0.0,
                            "channel of user " + std::to_string(k + 1) + " is all-zero");
        }
    }

    [[nodiscard]] Eigen::Index antennas() const noexcept { return entries_.rows(); }
    [[nodiscard]] Eigen::Index users() const noexcept { return entries_.cols(); }
    [[nodiscard]] const CMatrix& matrix() const noexcept { return entries_; }
    [[nodiscard]] CVector column(Eigen::Index k) const { return entries_.col(k); }

private:
    CMatrix entries_;
};

/// Noise variance per antenna and total transmit power budget.
class SystemConfig {
public:
    SystemConfig(double noise_variance, double power_budget)
        : noise_variance_(noise_variance), power_budget_(power_budget)
    {
        detail::require(std::isfinite(noise_variance_) && noise_variance_ > 0.0,
                        "noise variance must be positive");
        detail::require(std::isfinite(power_budget_) && power_budget_ > 0.0,
                        "power budget must be positive");
    }

    [[nodiscard]] double noise_variance() const noexcept { return noise_variance_; }
    [[nodiscard]] double power_budget() const noexcept { return power_budget_; }
    /// Transmit SNR P_Tx / sigma^2.
    [[nodiscard]] double snr() const noexcept { return power_budget_ / noise_variance_; }
    /// Slack allowed on the sum-power constraint.
    [[nodiscard]] double feasibility_tolerance() const noexcept { return 1e-9 * power_budget_; }

private:
    double noise_variance_;
    double power_budget_;
};

/// Nonnegative per-user uplink powers. Budget feasibility is a property of
/// the pair (allocation, config), see is_feasible().
class PowerAllocation {
public:
    explicit PowerAllocation(RVector powers) : powers_(std::move(powers))
    {
        detail::require(powers_.size() >= 1, "power allocation is empty");
        detail::require(powers_.allFinite(), "power allocation has non-finite entries");
        detail::require((powers_.array() >= 0.0).all(), "powers must be nonnegative");
    }

    static PowerAllocation zeros(Eigen::Index users) { return PowerAllocation(RVector::Zero(users)); }

    [[nodiscard]] const RVector& values() const noexcept { return powers_; }
    [[nodiscard]] Eigen::Index size() const noexcept { return powers_.size(); }
    [[nodiscard]] double operator[](Eigen::Index k) const { return powers_[k]; }
    [[nodiscard]] double total() const { return powers_.sum(); }

    [[nodiscard]] bool is_feasible(const SystemConfig& cfg) const
    {
        return total() <= cfg.power_budget() + cfg.feasibility_tolerance();
    }

private:
    RVector powers_;
};

/// Per-user MSE values, each in (0, 1].
class MseTuple {
public:
    explicit MseTuple(RVector values) : values_(std::move(values))
    {
        detail::require(values_.size() >= 1, "MSE tuple is empty");
        detail::require(values_.allFinite(), "MSE tuple has non-finite entries");
        detail::require((values_.array() > 0.0).all() && (values_.array() <= 1.0).all(),
                        "MSE values must lie in (0, 1]");
    }

    [[nodiscard]] const RVector& values() const noexcept { return values_; }
    [[nodiscard]] Eigen::Index size() const noexcept { return values_.size(); }
    [[nodiscard]] double operator[](Eigen::Index k) const { return values_[k]; }

private:
    RVector values_;
};

namespace detail {

inline void require_consistent(const ChannelSet& channels, const PowerAllocation& powers)
{
    require(channels.users() == powers.size(),
            "power allocation has " + std::to_string(powers.size()) + " entries for " +
                std::to_string(channels.users()) + " users");
}

inline void require_weights(const RVector& weights, Eigen::Index users)
{
    require(weights.size() == users, "weight vector length does not match the number of users");
    require(weights.allFinite(), "weights must be finite");
    require((weights.array() >= 0.0).all(), "weights must be nonnegative");
    require(weights.sum() > 0.0, "weights must not all be zero");
}

} // namespace detail

/// X = sigma^2 I + sum_k p_k h_k h_k^H.
inline CMatrix receive_covariance(const ChannelSet& channels, const PowerAllocation& powers,
                                  const SystemConfig& cfg)
{
    detail::require_consistent(channels, powers);
    const CMatrix& h = channels.matrix();
    CMatrix x = CMatrix::Identity(h.rows(), h.rows()) * cfg.noise_variance();
    for (Eigen::Index k = 0; k < h.cols(); ++k) {
        if (powers[k] > 0.0) {
            x.noalias() += powers[k] * h.col(k) * h.col(k).adjoint();
        }
    }
    if (!x.allFinite()) {
        throw NumericalError("receive covariance is not finite");
    }
    return x;
}

/// Quadratic forms a_ij = h_i^H X^{-1} h_j for all user pairs, obtained from a
/// single Cholesky factorization of X. The solved columns X^{-1} h_j are kept
/// so that second-order forms h_i^H X^{-2} h_j are available as well.
class CouplingMatrix {
public:
    CouplingMatrix(const ChannelSet& channels, const PowerAllocation& powers, const SystemConfig& cfg)
    {
        const CMatrix x = receive_covariance(channels, powers, cfg);
        Eigen::LLT<CMatrix> llt(x);
        if (llt.info() != Eigen::Success) {
            throw NumericalError("receive covariance is not positive definite");
        }
        solved_ = llt.solve(channels.matrix());
        a_ = channels.matrix().adjoint() * solved_;
    }

    /// a_ij = h_i^H X^{-1} h_j.
    [[nodiscard]] const CMatrix& a() const noexcept { return a_; }
    /// Columns X^{-1} h_j.
    [[nodiscard]] const CMatrix& solved() const noexcept { return solved_; }
    /// b_ij = h_i^H X^{-2} h_j.
    [[nodiscard]] CMatrix b() const { return solved_.adjoint() * solved_; }
    /// Real diagonal a_kk.
    [[nodiscard]] double a_diag(Eigen::Index k) const { return a_(k, k).real(); }

private:
    CMatrix solved_;
    CMatrix a_;
};

namespace detail {

inline RVector mse_from_coupling(const CouplingMatrix& coupling, const PowerAllocation& powers)
{
    RVector eps(powers.size());
    for (Eigen::Index k = 0; k < powers.size(); ++k) {
        eps[k] = 1.0 - powers[k] * coupling.a_diag(k);
    }
    return eps;
}

// d eps_k / d p_j = -delta_kj a_kk + p_k |a_kj|^2
inline RMatrix mse_jacobian_from_coupling(const CouplingMatrix& coupling, const PowerAllocation& powers)
{
    const Eigen::Index users = powers.size();
    RMatrix jac = coupling.a().cwiseAbs2();
    for (Eigen::Index k = 0; k < users; ++k) {
        jac.row(k) *= powers[k];
        jac(k, k) -= coupling.a_diag(k);
    }
    return jac;
}

} // namespace detail

/// eps_k = 1 - p_k h_k^H X^{-1} h_k for every user.
inline MseTuple mse_tuple(const ChannelSet& channels, const PowerAllocation& powers, const SystemConfig& cfg)
{
    const CouplingMatrix coupling(channels, powers, cfg);
    RVector eps = detail::mse_from_coupling(coupling, powers);
    // Round-off at extreme SNR can push eps_k to or below zero.
    for (Eigen::Index k = 0; k < eps.size(); ++k) {
        eps[k] = std::clamp(eps[k], std::numeric_limits<double>::min(), 1.0);
    }
    return MseTuple(std::move(eps));
}

/// Jacobian of the MSE tuple with respect to the powers, row k = grad eps_k.
inline RMatrix mse_jacobian(const ChannelSet& channels, const PowerAllocation& powers, const SystemConfig& cfg)
{
    const CouplingMatrix coupling(channels, powers, cfg);
    return detail::mse_jacobian_from_coupling(coupling, powers);
}

inline double weighted_sum_mse(const ChannelSet& channels, const PowerAllocation& powers,
                               const SystemConfig& cfg, const RVector& weights)
{
    detail::require_weights(weights, channels.users());
    return weights.dot(mse_tuple(channels, powers, cfg).values());
}

/// Gradient of sum_l w_l eps_l with respect to the powers:
/// component k is -w_k a_kk + sum_l w_l p_l |a_lk|^2.
inline RVector weighted_mse_gradient(const ChannelSet& channels, const PowerAllocation& powers,
                                     const SystemConfig& cfg, const RVector& weights)
{
    detail::require_weights(weights, channels.users());
    const CouplingMatrix coupling(channels, powers, cfg);
    return detail::mse_jacobian_from_coupling(coupling, powers).transpose() * weights;
}

/// Objective value and gradient from one factorization.
struct WeightedEvaluation {
    double objective;
    RVector gradient;
};

inline WeightedEvaluation evaluate_weighted(const ChannelSet& channels, const PowerAllocation& powers,
                                            const SystemConfig& cfg, const RVector& weights)
{
    const CouplingMatrix coupling(channels, powers, cfg);
    const RVector eps = detail::mse_from_coupling(coupling, powers);
    return {weights.dot(eps), detail::mse_jacobian_from_coupling(coupling, powers).transpose() * weights};
}

inline double sinr_from_mse(double mse)
{
    detail::require(mse > 0.0 && mse <= 1.0, "MSE must lie in (0, 1]");
    return 1.0 / mse - 1.0;
}

inline double rate_from_mse(double mse)
{
    detail::require(mse > 0.0 && mse <= 1.0, "MSE must lie in (0, 1]");
    return -std::log2(mse);
}

} // namespace mseregion
