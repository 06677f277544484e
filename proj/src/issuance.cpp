#include "stakemkt/issuance.hpp"

#include <cmath>
#include <stdexcept>

namespace stakemkt {

IssuanceSchedule IssuanceSchedule::by_name(const std::string& name) {
    if (name == "current") return current();
    if (name == "tempered") return tempered();
    throw std::invalid_argument("unknown issuance schedule '" + name +
                                "' (expected \"current\" or \"tempered\")");
}

std::string IssuanceSchedule::name() const {
    if (*this == current()) return "current";
    if (*this == tempered()) return "tempered";
    return "custom";
}

void IssuanceSchedule::validate() const {
    if (!(cf > 0.0)) throw std::invalid_argument("issuance schedule: cf must be positive");
    if (!(k >= 0.0)) throw std::invalid_argument("issuance schedule: k must be non-negative");
}

namespace {
void require_positive_stake(double total_stake) {
    if (!(total_stake > 0.0)) {
        throw std::domain_error("issuance yield: total_stake must be positive");
    }
}
}  // namespace

double IssuanceSchedule::yield(double total_stake) const {
    require_positive_stake(total_stake);
    return cf / (std::sqrt(total_stake) * (1.0 + k * total_stake));
}

double IssuanceSchedule::yield_derivative(double total_stake) const {
    require_positive_stake(total_stake);
    const double damp = 1.0 + k * total_stake;
    return -cf * (1.0 + 3.0 * k * total_stake) /
           (2.0 * total_stake * std::sqrt(total_stake) * damp * damp);
}

}  // namespace stakemkt
