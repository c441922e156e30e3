#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "doob/errors.hpp"

namespace doob {

/// A finite real path x_0..x_n. Never empty, every entry finite; immutable
/// after construction. n = 0 (a single point) is legal.
class Path {
public:
    explicit Path(std::vector<double> values) : values_(std::move(values)) {
        if (values_.empty()) throw empty_path();
        for (std::size_t k = 0; k < values_.size(); ++k)
            if (!std::isfinite(values_[k])) throw non_finite_entry(k);
    }
    Path(std::initializer_list<double> values) : Path(std::vector<double>(values)) {}

    /// Number of steps n (length - 1).
    std::size_t steps() const noexcept { return values_.size() - 1; }
    std::size_t size() const noexcept { return values_.size(); }
    double operator[](std::size_t k) const noexcept { return values_[k]; }
    double front() const noexcept { return values_.front(); }
    double back() const noexcept { return values_.back(); }
    std::span<const double> values() const noexcept { return values_; }

    /// Elementwise a*x + c.
    Path affine(double scale, double shift) const {
        std::vector<double> out(values_);
        for (auto& v : out) v = scale * v + shift;
        return Path(std::move(out));
    }

    friend bool operator==(const Path&, const Path&) = default;

private:
    std::vector<double> values_;
};

/// Path with all entries >= 0.
class NonnegPath {
public:
    explicit NonnegPath(Path path) : path_(std::move(path)) {
        for (std::size_t k = 0; k < path_.size(); ++k)
            if (path_[k] < 0.0)
                throw domain_error("path entry " + std::to_string(k) + " is negative");
    }
    NonnegPath(std::initializer_list<double> values) : NonnegPath(Path(values)) {}

    const Path& path() const noexcept { return path_; }
    operator const Path&() const noexcept { return path_; }

private:
    Path path_;
};

/// Nonnegative path with x_0 > 0.
class PositiveStartPath {
public:
    explicit PositiveStartPath(Path path) : path_(NonnegPath(std::move(path))) {
        if (!(path_.path().front() > 0.0))
            throw domain_error("path must start strictly above zero");
    }
    PositiveStartPath(std::initializer_list<double> values) : PositiveStartPath(Path(values)) {}

    const Path& path() const noexcept { return path_.path(); }
    operator const Path&() const noexcept { return path_.path(); }
    operator const NonnegPath&() const noexcept { return path_; }

private:
    NonnegPath path_;
};

enum class PathKind { general, nonnegative, positive_start };

inline const char* to_string(PathKind kind) {
    switch (kind) {
    case PathKind::general: return "Path";
    case PathKind::nonnegative: return "NonnegPath";
    case PathKind::positive_start: return "PositiveStartPath";
    }
    return "?";
}

/// Strongest path type the values satisfy. Throws empty_path / non_finite_entry.
inline PathKind validate(std::span<const double> raw) {
    const Path path(std::vector<double>(raw.begin(), raw.end()));
    const auto values = path.values();
    if (std::any_of(values.begin(), values.end(), [](double v) { return v < 0.0; }))
        return PathKind::general;
    return path.front() > 0.0 ? PathKind::positive_start : PathKind::nonnegative;
}

/// x̄_k = max(x_0..x_k) for k = 0..n.
inline std::vector<double> running_max(const Path& path) {
    std::vector<double> out(path.size());
    double current = path.front();
    for (std::size_t k = 0; k < path.size(); ++k) {
        current = std::max(current, path[k]);
        out[k] = current;
    }
    return out;
}

/// Δx_k = x_k - x_{k-1} for k = 1..n; element k-1 of the result holds Δx_k.
inline std::vector<double> increments(const Path& path) {
    std::vector<double> out;
    out.reserve(path.steps());
    for (std::size_t k = 1; k < path.size(); ++k) out.push_back(path[k] - path[k - 1]);
    return out;
}

/// Smallest k with x_k >= level, or nullopt when the path stays strictly below.
inline std::optional<std::size_t> first_crossing(const Path& path, double level) {
    for (std::size_t k = 0; k < path.size(); ++k)
        if (path[k] >= level) return k;
    return std::nullopt;
}

namespace detail {

inline std::string_view trim(std::string_view s) {
    constexpr std::string_view ws = " \t\r\n\f\v";
    const auto b = s.find_first_not_of(ws);
    if (b == std::string_view::npos) return {};
    return s.substr(b, s.find_last_not_of(ws) - b + 1);
}

inline double parse_real(std::string_view token, std::size_t position) {
    token = trim(token);
    if (!token.empty() && token.front() == '+') token.remove_prefix(1);
    double value = 0.0;
    const auto* end = token.data() + token.size();
    auto [ptr, ec] = std::from_chars(token.data(), end, value);
    if (token.empty() || ec != std::errc() || ptr != end)
        throw parse_error("entry " + std::to_string(position) + ": cannot parse '" +
                          std::string(token) + "' as a real number");
    return value;
}

} // namespace detail

/// Parses the path text format: one real per line, or a single
/// comma-separated line. Blank lines are skipped.
inline Path parse_path_text(std::string_view text) {
    std::vector<std::string_view> lines;
    while (!text.empty()) {
        const auto nl = text.find('\n');
        const auto line = detail::trim(text.substr(0, nl));
        if (!line.empty()) lines.push_back(line);
        if (nl == std::string_view::npos) break;
        text.remove_prefix(nl + 1);
    }

    std::vector<double> values;
    if (lines.size() == 1 && lines.front().find(',') != std::string_view::npos) {
        auto line = lines.front();
        while (true) {
            const auto comma = line.find(',');
            values.push_back(detail::parse_real(line.substr(0, comma), values.size()));
            if (comma == std::string_view::npos) break;
            line.remove_prefix(comma + 1);
        }
    } else {
        for (auto line : lines) values.push_back(detail::parse_real(line, values.size()));
    }
    return Path(std::move(values));
}

} // namespace doob
