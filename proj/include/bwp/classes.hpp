#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <vector>

#include "bwp/combinatorics.hpp"

namespace bwp {

inline constexpr int kMaxChannels = 16;

/// Per-cardinality description of a symmetric system: users needing j of the
/// K bands arrive with probability p[j] and carry mean file size L[j]; the
/// actual j-subset is uniform among the binom(K,j) choices.
struct SymmetricProfile {
    int K = 1;
    std::vector<double> p; // indexed 1..K, entry 0 unused
    std::vector<double> L; // indexed 1..K, entry 0 unused

    SymmetricProfile(int K_, std::vector<double> p_by_cardinality,
                     std::vector<double> L_by_cardinality);

    bool operator==(const SymmetricProfile& o) const {
        return K == o.K && p == o.p && L == o.L;
    }
};

/// Full class configuration over the 2^K - 1 non-empty band subsets, stored
/// densely by bitmask. Immutable after construction. Subsets not mentioned at
/// construction get p = 0 (and a placeholder L = 1); zero-probability classes
/// are allowed.
class ClassProfile {
public:
    struct Entry {
        std::uint32_t subset_mask;
        double p;
        double L;
    };

    ClassProfile(int K, const std::vector<Entry>& entries);

    int K() const { return K_; }
    std::uint32_t num_classes() const { return (1u << K_) - 1; }

    double p(std::uint32_t mask) const { return p_[mask]; }
    double L(std::uint32_t mask) const { return L_[mask]; }
    const std::vector<double>& p_by_mask() const { return p_; }
    const std::vector<double>& L_by_mask() const { return L_; }

    /// True when classes of equal cardinality share p and L exactly.
    bool symmetric() const { return symmetric_; }

    /// max / min of L over classes with p > 0.
    double L_max() const { return L_max_; }
    double L_min() const { return L_min_; }

    /// The symmetric per-cardinality view this profile was expanded from, if
    /// any. Kept verbatim so that expand -> reduce is the identity; a
    /// floating-point divide/multiply round trip would not be.
    const std::optional<SymmetricProfile>& symmetric_source() const {
        return symmetric_source_;
    }

    /// Per-cardinality reduction computed arithmetically: p_j = sum of p over
    /// classes of size j, L_j from a representative class. Requires
    /// symmetric().
    SymmetricProfile reduce_symmetric() const;

private:
    friend ClassProfile expand_symmetric(const SymmetricProfile&);

    ClassProfile() = default;
    void finalize();

    int K_ = 1;
    std::vector<double> p_; // size 2^K, index by mask, [0] unused
    std::vector<double> L_;
    bool symmetric_ = false;
    double L_max_ = 1.0;
    double L_min_ = 1.0;
    std::optional<SymmetricProfile> symmetric_source_;
};

/// Expands a per-cardinality profile to the full 2^K - 1 classes with
/// p_C = p_j / binom(K, j).
ClassProfile expand_symmetric(const SymmetricProfile& sym);

/// Mean time-space load per arrival: sum_C p_C |C| L_C.
double load_factor(const ClassProfile& profile);

// ---------------------------------------------------------------------------

inline SymmetricProfile::SymmetricProfile(int K_, std::vector<double> p_by_cardinality,
                                          std::vector<double> L_by_cardinality)
    : K(K_), p(std::move(p_by_cardinality)), L(std::move(L_by_cardinality)) {
    if (K < 1 || K > kMaxChannels)
        throw std::invalid_argument("SymmetricProfile: K out of range");
    if (p.size() == static_cast<std::size_t>(K)) p.insert(p.begin(), 0.0);
    if (L.size() == static_cast<std::size_t>(K)) L.insert(L.begin(), 0.0);
    if (p.size() != static_cast<std::size_t>(K) + 1 ||
        L.size() != static_cast<std::size_t>(K) + 1)
        throw std::invalid_argument("SymmetricProfile: need K entries for p and L");
    double total = 0.0;
    for (int j = 1; j <= K; ++j) {
        if (!(p[j] >= 0.0)) throw std::invalid_argument("SymmetricProfile: p < 0");
        if (!(L[j] > 0.0)) throw std::invalid_argument("SymmetricProfile: L <= 0");
        total += p[j];
    }
    if (std::fabs(total - 1.0) > 1e-12)
        throw std::invalid_argument("SymmetricProfile: probabilities must sum to 1");
}

inline ClassProfile::ClassProfile(int K, const std::vector<Entry>& entries) {
    if (K < 1 || K > kMaxChannels)
        throw std::invalid_argument("ClassProfile: K out of range [1, 16]");
    K_ = K;
    const std::uint32_t size = 1u << K;
    p_.assign(size, 0.0);
    L_.assign(size, 1.0);
    for (const auto& e : entries) {
        if (e.subset_mask == 0 || e.subset_mask >= size)
            throw std::invalid_argument("ClassProfile: subset mask out of range");
        if (!(e.p >= 0.0)) throw std::invalid_argument("ClassProfile: p < 0");
        if (!(e.L > 0.0)) throw std::invalid_argument("ClassProfile: L <= 0");
        p_[e.subset_mask] = e.p;
        L_[e.subset_mask] = e.L;
    }
    finalize();
}

inline void ClassProfile::finalize() {
    double total = 0.0;
    for (std::uint32_t m = 1; m < p_.size(); ++m) total += p_[m];
    if (std::fabs(total - 1.0) > 1e-12)
        throw std::invalid_argument("ClassProfile: probabilities must sum to 1");

    L_max_ = 0.0;
    L_min_ = std::numeric_limits<double>::infinity();
    for (std::uint32_t m = 1; m < p_.size(); ++m) {
        if (p_[m] > 0.0) {
            L_max_ = std::max(L_max_, L_[m]);
            L_min_ = std::min(L_min_, L_[m]);
        }
    }
    if (L_max_ == 0.0) { L_max_ = 1.0; L_min_ = 1.0; }

    // Symmetry: within each cardinality, p and L identical across classes
    // with support treated strictly (a zero-probability class among positive
    // siblings breaks symmetry).
    symmetric_ = true;
    for (int j = 1; j <= K_ && symmetric_; ++j) {
        bool first = true;
        double pj = 0.0, lj = 0.0;
        for (std::uint32_t m = 1; m < p_.size(); ++m) {
            if (popcount_mask(m) != j) continue;
            if (first) { pj = p_[m]; lj = L_[m]; first = false; continue; }
            if (p_[m] != pj || (pj > 0.0 && L_[m] != lj)) { symmetric_ = false; break; }
        }
    }
}

inline ClassProfile expand_symmetric(const SymmetricProfile& sym) {
    ClassProfile cp;
    cp.K_ = sym.K;
    const std::uint32_t size = 1u << sym.K;
    cp.p_.assign(size, 0.0);
    cp.L_.assign(size, 1.0);
    for (std::uint32_t m = 1; m < size; ++m) {
        int j = popcount_mask(m);
        cp.p_[m] = sym.p[j] / double(binomial(sym.K, j));
        cp.L_[m] = sym.L[j];
    }
    cp.finalize();
    cp.symmetric_source_ = sym;
    return cp;
}

inline SymmetricProfile ClassProfile::reduce_symmetric() const {
    if (symmetric_source_) return *symmetric_source_;
    if (!symmetric_)
        throw std::invalid_argument("reduce_symmetric: profile is not symmetric");
    std::vector<double> pj(K_ + 1, 0.0), lj(K_ + 1, 1.0);
    for (int j = 1; j <= K_; ++j) {
        double total = 0.0;
        for (std::uint32_t m = 1; m < p_.size(); ++m) {
            if (popcount_mask(m) != j) continue;
            total += p_[m];
            lj[j] = L_[m];
        }
        pj[j] = total;
    }
    return SymmetricProfile(K_, pj, lj);
}

inline double load_factor(const ClassProfile& profile) {
    double acc = 0.0;
    const auto& p = profile.p_by_mask();
    const auto& L = profile.L_by_mask();
    for (std::uint32_t m = 1; m < p.size(); ++m)
        acc += p[m] * popcount_mask(m) * L[m];
    return acc;
}

} // namespace bwp
