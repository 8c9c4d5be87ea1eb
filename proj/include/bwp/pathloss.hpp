#pragma once

#include <cmath>
#include <stdexcept>
#include <utility>
#include <vector>

namespace bwp {

/// Path-loss function: non-negative, bounded, non-increasing, normalized to
/// l(0) = 1. Two families are supported: the power law 1/(1+x)^beta and a
/// tabulated gain curve with linear interpolation (constant beyond the last
/// sample).
class PathLoss {
public:
    enum class Family { PowerLaw, Tabulated };

    static PathLoss power_law(double beta) {
        if (!(beta >= 0.0))
            throw std::invalid_argument("PathLoss: power-law exponent must be >= 0");
        PathLoss pl;
        pl.family_ = Family::PowerLaw;
        pl.beta_ = beta;
        return pl;
    }

    /// Samples are (distance, gain) pairs with strictly increasing distances.
    static PathLoss tabulated(std::vector<std::pair<double, double>> samples) {
        if (samples.empty())
            throw std::invalid_argument("PathLoss: empty sample table");
        if (samples.front().first != 0.0 || samples.front().second != 1.0)
            throw std::invalid_argument("PathLoss: table must start at (0, 1)");
        for (std::size_t i = 0; i < samples.size(); ++i) {
            if (!(samples[i].second >= 0.0) || !(samples[i].second <= 1.0) ||
                !std::isfinite(samples[i].second))
                throw std::invalid_argument("PathLoss: gains must lie in [0, 1]");
            if (i > 0) {
                if (!(samples[i].first > samples[i - 1].first))
                    throw std::invalid_argument("PathLoss: distances must increase");
                if (samples[i].second > samples[i - 1].second)
                    throw std::invalid_argument("PathLoss: gains must be non-increasing");
            }
        }
        PathLoss pl;
        pl.family_ = Family::Tabulated;
        pl.samples_ = std::move(samples);
        return pl;
    }

    Family family() const { return family_; }
    double power_law_exponent() const { return beta_; }
    const std::vector<std::pair<double, double>>& samples() const { return samples_; }

    double operator()(double distance) const {
        if (family_ == Family::PowerLaw) {
            // (1+x)^-beta; beta = 4 is the common case, handled without pow.
            double base = 1.0 + distance;
            if (beta_ == 4.0) {
                double sq = base * base;
                return 1.0 / (sq * sq);
            }
            return std::pow(base, -beta_);
        }
        // Tabulated: linear interpolation, clamped right tail.
        const auto& s = samples_;
        if (distance <= s.front().first) return s.front().second;
        if (distance >= s.back().first) return s.back().second;
        std::size_t lo = 0, hi = s.size() - 1;
        while (hi - lo > 1) {
            std::size_t mid = (lo + hi) / 2;
            if (s[mid].first <= distance) lo = mid;
            else hi = mid;
        }
        double t = (distance - s[lo].first) / (s[hi].first - s[lo].first);
        return s[lo].second + t * (s[hi].second - s[lo].second);
    }

private:
    PathLoss() = default;

    Family family_ = Family::PowerLaw;
    double beta_ = 4.0;
    std::vector<std::pair<double, double>> samples_;
};

} // namespace bwp
