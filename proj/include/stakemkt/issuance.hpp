#pragma once

#include <string>

namespace stakemkt {

// Annualized consensus-issuance yield curve
//
//     y(D) = cf / (sqrt(D) * (1 + k * D)),
//
// where D is total staked ETH. k = 0 gives the square-root schedule in force
// today; k > 0 damps the curve at high deposit levels. Yields are annual
// fractions (0.029 means 2.9%/yr).
struct IssuanceSchedule {
    double cf = kDefaultCf;  // curve constant, nominally 2.6 * 64
    double k = 0.0;          // per-ETH damping coefficient, >= 0

    static constexpr double kDefaultCf = 2.6 * 64.0;
    static constexpr double kTemperedK = 1.0 / 33554432.0;  // 2^-25

    static IssuanceSchedule current() { return {kDefaultCf, 0.0}; }
    static IssuanceSchedule tempered() { return {kDefaultCf, kTemperedK}; }

    // Accepts "current" or "tempered"; anything else throws.
    static IssuanceSchedule by_name(const std::string& name);

    std::string name() const;  // "current", "tempered", or "custom"

    // cf > 0 and k >= 0; throws std::invalid_argument otherwise.
    void validate() const;

    // Annual yield fraction at aggregate stake D. Throws std::domain_error
    // for non-positive D.
    double yield(double total_stake) const;

    // Analytic d(yield)/dD: -cf * (1 + 3kD) / (2 * D^(3/2) * (1 + kD)^2).
    double yield_derivative(double total_stake) const;

    bool operator==(const IssuanceSchedule&) const = default;
};

}  // namespace stakemkt
