#pragma once

// Shared vocabulary: series identifiers, directed links, edge sets,
// topology labels and the spurious/unidentified classification.

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace granger_lab {

// --- errors -----------------------------------------------------------------

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
public:
    using Error::Error;
};

class InsufficientData : public Error {
public:
    using Error::Error;
};

class RankDeficient : public Error {
public:
    using Error::Error;
};

class InvalidPair : public Error {
public:
    using Error::Error;
};

class GenerationError : public Error {
public:
    using Error::Error;
};

class OffGrid : public Error {
public:
    using Error::Error;
};

// --- series -----------------------------------------------------------------

enum class SeriesId : std::uint8_t { X = 0, Y = 1, Z = 2 };

inline constexpr std::array<SeriesId, 3> kAllSeries{SeriesId::X, SeriesId::Y, SeriesId::Z};

inline constexpr std::size_t index_of(SeriesId id) { return static_cast<std::size_t>(id); }

inline constexpr char name_of(SeriesId id) {
    switch (id) {
        case SeriesId::X: return 'X';
        case SeriesId::Y: return 'Y';
        case SeriesId::Z: return 'Z';
    }
    return '?';
}

inline SeriesId parse_series(std::string_view s) {
    if (s == "x" || s == "X") return SeriesId::X;
    if (s == "y" || s == "Y") return SeriesId::Y;
    if (s == "z" || s == "Z") return SeriesId::Z;
    throw InvalidArgument("unknown series '" + std::string(s) + "'");
}

/// Ordered real-valued samples. Never empty.
class TimeSeries {
public:
    explicit TimeSeries(std::vector<double> values) : values_(std::move(values)) {
        if (values_.empty()) throw InvalidArgument("time series must contain at least one value");
    }

    std::size_t length() const noexcept { return values_.size(); }
    std::span<const double> values() const noexcept { return values_; }
    double operator[](std::size_t t) const { return values_[t]; }

    bool all_finite() const noexcept {
        for (double v : values_)
            if (!std::isfinite(v)) return false;
        return true;
    }

    friend bool operator==(const TimeSeries&, const TimeSeries&) = default;

private:
    std::vector<double> values_;
};

/// Look-back per series: the target's own lags and one count per predictor.
struct LagSpec {
    std::size_t target_lags = 2;
    std::vector<std::size_t> predictor_lags{2, 2};

    std::size_t max_lag() const noexcept {
        std::size_t m = target_lags;
        for (auto l : predictor_lags) m = std::max(m, l);
        return m;
    }

    void validate() const {
        if (target_lags < 1) throw InvalidArgument("target lag count must be >= 1");
        for (auto l : predictor_lags)
            if (l < 1) throw InvalidArgument("predictor lag counts must be >= 1");
    }

    friend bool operator==(const LagSpec&, const LagSpec&) = default;
};

// --- links and topologies ---------------------------------------------------

struct Link {
    SeriesId cause;
    SeriesId effect;

    friend constexpr bool operator==(const Link&, const Link&) = default;
    friend constexpr auto operator<=>(const Link&, const Link&) = default;
};

inline std::string to_string(Link l) {
    return std::string{name_of(l.cause)} + "->" + name_of(l.effect);
}

inline constexpr Link kXY{SeriesId::X, SeriesId::Y};
inline constexpr Link kXZ{SeriesId::X, SeriesId::Z};
inline constexpr Link kYZ{SeriesId::Y, SeriesId::Z};

inline constexpr std::array<Link, 3> kForwardLinks{kXY, kXZ, kYZ};
inline constexpr std::array<Link, 3> kReverseLinks{Link{SeriesId::Y, SeriesId::X},
                                                   Link{SeriesId::Z, SeriesId::X},
                                                   Link{SeriesId::Z, SeriesId::Y}};

/// Subset of the three forward links {X->Y, X->Z, Y->Z}.
class EdgeSet {
public:
    constexpr EdgeSet() = default;
    constexpr EdgeSet(std::initializer_list<Link> links) {
        for (auto l : links) insert(l);
    }

    static constexpr std::optional<std::size_t> slot(Link l) {
        for (std::size_t i = 0; i < kForwardLinks.size(); ++i)
            if (kForwardLinks[i] == l) return i;
        return std::nullopt;
    }

    constexpr void insert(Link l) {
        auto s = slot(l);
        if (!s) throw InvalidArgument("only forward links X->Y, X->Z, Y->Z belong to an edge set");
        bits_ |= static_cast<std::uint8_t>(1u << *s);
    }
    constexpr void erase(Link l) {
        if (auto s = slot(l)) bits_ &= static_cast<std::uint8_t>(~(1u << *s));
    }
    constexpr void set(Link l, bool present) {
        if (present)
            insert(l);
        else
            erase(l);
    }
    constexpr bool contains(Link l) const {
        auto s = slot(l);
        return s && (bits_ >> *s) & 1u;
    }
    constexpr bool empty() const { return bits_ == 0; }
    constexpr std::size_t size() const { return std::popcount(static_cast<unsigned>(bits_)); }

    /// Links in this set that are not in `other`.
    constexpr EdgeSet minus(EdgeSet other) const {
        EdgeSet r;
        r.bits_ = static_cast<std::uint8_t>(bits_ & ~other.bits_);
        return r;
    }

    constexpr std::uint8_t bits() const { return bits_; }

    std::vector<Link> links() const {
        std::vector<Link> out;
        for (auto l : kForwardLinks)
            if (contains(l)) out.push_back(l);
        return out;
    }

    friend constexpr bool operator==(EdgeSet, EdgeSet) = default;

private:
    std::uint8_t bits_ = 0;
};

enum class TopologyKind : std::uint8_t { Complete, Driver, Indirect, Null, Other };

inline constexpr EdgeSet kCompleteEdges{kXY, kXZ, kYZ};
inline constexpr EdgeSet kDriverEdges{kXY, kXZ};
inline constexpr EdgeSet kIndirectEdges{kXY, kYZ};
inline constexpr EdgeSet kNullEdges{};

/// A named topology or an arbitrary forward edge set. The kind is always
/// derived from the edges, so Driver and {X->Y, X->Z} are the same label.
class TopologyLabel {
public:
    constexpr TopologyLabel() = default;
    constexpr explicit TopologyLabel(EdgeSet edges) : edges_(edges) {}

    static constexpr TopologyLabel complete() { return TopologyLabel{kCompleteEdges}; }
    static constexpr TopologyLabel driver() { return TopologyLabel{kDriverEdges}; }
    static constexpr TopologyLabel indirect() { return TopologyLabel{kIndirectEdges}; }
    static constexpr TopologyLabel null() { return TopologyLabel{kNullEdges}; }

    constexpr EdgeSet edges() const { return edges_; }

    constexpr TopologyKind kind() const {
        if (edges_ == kCompleteEdges) return TopologyKind::Complete;
        if (edges_ == kDriverEdges) return TopologyKind::Driver;
        if (edges_ == kIndirectEdges) return TopologyKind::Indirect;
        if (edges_ == kNullEdges) return TopologyKind::Null;
        return TopologyKind::Other;
    }

    std::string name() const {
        switch (kind()) {
            case TopologyKind::Complete: return "complete";
            case TopologyKind::Driver: return "driver";
            case TopologyKind::Indirect: return "indirect";
            case TopologyKind::Null: return "null";
            case TopologyKind::Other: break;
        }
        std::string s = "other{";
        bool first = true;
        for (auto l : edges_.links()) {
            if (!first) s += ",";
            s += to_string(l);
            first = false;
        }
        return s + "}";
    }

    friend constexpr bool operator==(TopologyLabel, TopologyLabel) = default;

private:
    EdgeSet edges_;
};

/// Generating topologies supported by the synthetic data generator.
enum class Topology : std::uint8_t { Driver, Indirect };

inline constexpr TopologyLabel label_of(Topology t) {
    return t == Topology::Driver ? TopologyLabel::driver() : TopologyLabel::indirect();
}

inline std::string to_string(Topology t) { return t == Topology::Driver ? "driver" : "indirect"; }

inline Topology parse_topology(std::string_view s) {
    if (s == "driver") return Topology::Driver;
    if (s == "indirect") return Topology::Indirect;
    throw InvalidArgument("unknown topology '" + std::string(s) + "' (expected driver|indirect)");
}

// --- test outcomes ----------------------------------------------------------

enum class Criterion : std::uint8_t { LR, Wald, Rao, LM };

inline constexpr std::array<Criterion, 4> kAllCriteria{Criterion::LR, Criterion::Wald, Criterion::Rao,
                                                       Criterion::LM};

inline std::string to_string(Criterion c) {
    switch (c) {
        case Criterion::LR: return "lr";
        case Criterion::Wald: return "wald";
        case Criterion::Rao: return "rao";
        case Criterion::LM: return "lm";
    }
    return "?";
}

inline Criterion parse_criterion(std::string_view s) {
    if (s == "lr" || s == "LR") return Criterion::LR;
    if (s == "wald" || s == "w" || s == "W" || s == "Wald") return Criterion::Wald;
    if (s == "rao" || s == "r" || s == "R" || s == "Rao") return Criterion::Rao;
    if (s == "lm" || s == "LM") return Criterion::LM;
    throw InvalidArgument("unknown criterion '" + std::string(s) + "' (expected lr|wald|rao|lm)");
}

struct TestOutcome {
    double statistic = 0.0;
    double p_value = 1.0;
    std::size_t dof_numerator = 0;
    std::optional<std::size_t> dof_denominator;
    Criterion criterion = Criterion::Wald;
    // Set when the unrestricted model fits perfectly (rss_u == 0).
    bool degenerate = false;
};

struct LinkDecision {
    Link link;
    TestOutcome outcome;
    bool decided_causal = false;
};

inline LinkDecision decide(Link link, const TestOutcome& outcome, double significance) {
    return LinkDecision{link, outcome, outcome.p_value < significance};
}

struct ClassifiedResult {
    TopologyLabel inferred;
    TopologyLabel truth;
    bool spurious = false;
    bool unidentified = false;
};

/// Link-level comparison of an inferred topology against the truth.
inline constexpr ClassifiedResult classify(TopologyLabel inferred, TopologyLabel truth) {
    return ClassifiedResult{inferred, truth, !inferred.edges().minus(truth.edges()).empty(),
                            !truth.edges().minus(inferred.edges()).empty()};
}

/// Table-1 key links: the link whose acceptance makes a result spurious and
/// whose rejection makes it unidentified, per generating topology.
struct KeyLinks {
    Link spurious;
    Link unidentified;
};

inline constexpr KeyLinks key_links(Topology t) {
    return t == Topology::Driver ? KeyLinks{kYZ, kXZ} : KeyLinks{kXZ, kYZ};
}

// --- Monte Carlo rates ------------------------------------------------------

/// Rates of spurious and unidentified causality over `iterations` samples.
/// Counts are kept so every rate is exactly count / iterations.
struct RateEstimate {
    std::size_t iterations = 0;
    std::size_t spurious_count = 0;
    std::size_t unidentified_count = 0;
    // Acceptance counts of the forward links in the final inferred edge set.
    std::array<std::size_t, 3> link_counts{};
    // Whole-topology classification, for diagnostics.
    std::size_t topology_spurious_count = 0;
    std::size_t topology_unidentified_count = 0;
    std::size_t exact_match_count = 0;
    // Iterations discarded because a fit was rank deficient.
    std::size_t failed_iterations = 0;

    static double ratio(std::size_t count, std::size_t n) {
        return n == 0 ? 0.0 : static_cast<double>(count) / static_cast<double>(n);
    }
    double spurious_rate() const { return ratio(spurious_count, iterations); }
    double unidentified_rate() const { return ratio(unidentified_count, iterations); }
    double link_rate(Link l) const {
        auto s = EdgeSet::slot(l);
        if (!s) throw InvalidArgument("per-link rates are tracked for forward links only");
        return ratio(link_counts[*s], iterations);
    }
    double topology_spurious_rate() const { return ratio(topology_spurious_count, iterations); }
    double topology_unidentified_rate() const { return ratio(topology_unidentified_count, iterations); }

    static double standard_error(double rate, std::size_t n) {
        return n == 0 ? 0.0 : std::sqrt(rate * (1.0 - rate) / static_cast<double>(n));
    }
    double se_spurious() const { return standard_error(spurious_rate(), iterations); }
    double se_unidentified() const { return standard_error(unidentified_rate(), iterations); }

    friend bool operator==(const RateEstimate&, const RateEstimate&) = default;
};

}  // namespace granger_lab
