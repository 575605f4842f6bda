#pragma once

// File formats: sample CSV (t,x,y,z), sweep and phase-space result CSVs,
// binary PPM heatmaps and key=value run manifests. Numbers are written in
// shortest round-trip form so identical results give identical bytes.

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "granger_lab/core.hpp"
#include "granger_lab/datagen.hpp"
#include "granger_lab/experiments.hpp"

namespace granger_lab::io {

class ParseError : public Error {
public:
    ParseError(const std::string& what, std::size_t row) : Error(what), row_(row) {}
    /// 1-based data row (header excluded); 0 for header and file-level errors.
    std::size_t row() const noexcept { return row_; }

private:
    std::size_t row_;
};

/// Shortest decimal string that parses back to exactly `v`.
inline std::string format_number(double v) {
    if (v == 0.0) return "0";  // folds -0
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
    if (ec != std::errc{}) throw Error("failed to format number");
    return std::string(buf, end);
}

inline double parse_number(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    if (s.empty()) throw InvalidArgument("empty numeric field");
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size())
        throw InvalidArgument("not a number: '" + std::string(s) + "'");
    return v;
}

inline std::vector<std::string_view> split(std::string_view line, char sep = ',') {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = line.find(sep, start);
        if (pos == std::string_view::npos) {
            out.push_back(line.substr(start));
            return out;
        }
        out.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
}

inline std::string strip_cr(std::string s) {
    if (!s.empty() && s.back() == '\r') s.pop_back();
    return s;
}

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open '" + path + "' for reading");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void write_file(const std::string& path, std::string_view content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot open '" + path + "' for writing");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw Error("failed writing '" + path + "'");
}

// --- samples ------------------------------------------------------------------

inline std::string sample_csv(const TrivariateSample& s) {
    std::string out = "t,x,y,z\n";
    for (std::size_t t = 0; t < s.length(); ++t) {
        out += std::to_string(t);
        out += ',';
        out += format_number(s.x[t]);
        out += ',';
        out += format_number(s.y[t]);
        out += ',';
        out += format_number(s.z[t]);
        out += '\n';
    }
    return out;
}

/// Parses `t,x,y,z` text. The truth label of the result is unknown and set to null.
/// Errors name the data row, counting from 1 after the header.
inline TrivariateSample parse_sample_csv(std::string_view text) {
    std::vector<double> x, y, z;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    bool header_seen = false;
    while (pos < text.size()) {
        auto nl = text.find('\n', pos);
        if (nl == std::string_view::npos) nl = text.size();
        std::string_view line = text.substr(pos, nl - pos);
        pos = nl + 1;
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (!header_seen) {
            if (line != "t,x,y,z") throw ParseError("expected header 't,x,y,z'", 0);
            header_seen = true;
            continue;
        }
        if (line.empty()) continue;
        const auto fields = split(line);
        if (fields.size() != 4)
            throw ParseError("row " + std::to_string(line_no - 1) + ": expected 4 fields, found " +
                                 std::to_string(fields.size()),
                             line_no - 1);
        try {
            const double vx = parse_number(fields[1]);
            const double vy = parse_number(fields[2]);
            const double vz = parse_number(fields[3]);
            if (!std::isfinite(vx) || !std::isfinite(vy) || !std::isfinite(vz))
                throw InvalidArgument("non-finite value");
            x.push_back(vx);
            y.push_back(vy);
            z.push_back(vz);
        } catch (const InvalidArgument& e) {
            throw ParseError("row " + std::to_string(line_no - 1) + ": " + e.what(), line_no - 1);
        }
    }
    if (!header_seen) throw ParseError("file is empty", 0);
    if (x.empty()) throw ParseError("no data rows", 0);
    return TrivariateSample{TimeSeries(std::move(x)), TimeSeries(std::move(y)), TimeSeries(std::move(z)),
                            TopologyLabel::null()};
}

// --- sweeps ---------------------------------------------------------------------

inline std::string significance_sweep_csv(const SweepResult& r) {
    std::string out = "alpha,criterion,spurious_rate,unidentified_rate,se_spurious,se_unidentified\n";
    for (std::size_t c = 0; c < r.criteria.size(); ++c)
        for (std::size_t i = 0; i < r.axis.size(); ++i) {
            const auto& e = r.rates[c][i];
            out += format_number(r.axis[i]) + "," + to_string(r.criteria[c]) + "," + format_number(e.spurious_rate()) +
                   "," + format_number(e.unidentified_rate()) + "," + format_number(e.se_spurious()) + "," +
                   format_number(e.se_unidentified()) + "\n";
        }
    return out;
}

/// One row per (size, criterion). The trailing columns hold two-proportion
/// p-values of this criterion against each other criterion, in the order of
/// the criteria list (empty against itself).
inline std::string sample_size_sweep_csv(const SampleSizeSweep& s) {
    const auto& r = s.result;
    std::string out = "n,criterion,spurious_rate,unidentified_rate,se_spurious,se_unidentified";
    for (auto c : r.criteria) out += ",p_spurious_vs_" + to_string(c) + ",p_unidentified_vs_" + to_string(c);
    out += "\n";
    for (std::size_t i = 0; i < r.axis.size(); ++i)
        for (std::size_t c = 0; c < r.criteria.size(); ++c) {
            const auto& e = r.rates[c][i];
            out += format_number(r.axis[i]) + "," + to_string(r.criteria[c]) + "," + format_number(e.spurious_rate()) +
                   "," + format_number(e.unidentified_rate()) + "," + format_number(e.se_spurious()) + "," +
                   format_number(e.se_unidentified());
            for (auto other : r.criteria) {
                if (other == r.criteria[c]) {
                    out += ",,";
                    continue;
                }
                const auto& cmp = s.compare(i, r.criteria[c], other).comparison;
                out += "," + format_number(cmp.spurious.p_value) + "," + format_number(cmp.unidentified.p_value);
            }
            out += "\n";
        }
    return out;
}

// --- phase spaces ---------------------------------------------------------------

inline constexpr std::string_view kPhaseHeader =
    "snr_x_db,snr_y_db,snr_z_db,topology,noise_kind,n,alpha,criterion,iterations,spurious_rate,"
    "unidentified_rate,rate_xz,rate_yz";

inline std::string phase_row(const PhaseSpaceConfig& cfg, const std::array<double, 3>& snr, const RateEstimate& r) {
    return format_number(snr[0]) + "," + format_number(snr[1]) + "," + format_number(snr[2]) + "," +
           to_string(cfg.topology) + "," + to_string(cfg.noise) + "," + std::to_string(cfg.n) + "," +
           format_number(cfg.alpha) + "," + to_string(cfg.criterion) + "," + std::to_string(r.iterations) + "," +
           format_number(r.spurious_rate()) + "," + format_number(r.unidentified_rate()) + "," +
           format_number(r.link_rate(kXZ)) + "," + format_number(r.link_rate(kYZ)) + "\n";
}

inline std::string phase_grid_csv(const PhaseGrid& g) {
    std::string out{kPhaseHeader};
    out += "\n";
    const auto& c = g.config;
    for (std::size_t ix = 0; ix < c.grids[0].size(); ++ix)
        for (std::size_t iy = 0; iy < c.grids[1].size(); ++iy)
            for (std::size_t iz = 0; iz < c.grids[2].size(); ++iz)
                out += phase_row(c, {c.grids[0][ix], c.grids[1][iy], c.grids[2][iz]}, g.at(ix, iy, iz));
    return out;
}

struct PhaseRow {
    std::array<double, 3> snr{};
    std::string topology;
    std::string noise_kind;
    std::size_t n = 0;
    double alpha = 0.0;
    std::string criterion;
    std::size_t iterations = 0;
    double spurious_rate = 0.0;
    double unidentified_rate = 0.0;
    double rate_xz = 0.0;
    double rate_yz = 0.0;

    double rate(RateKind k) const {
        switch (k) {
            case RateKind::Spurious: return spurious_rate;
            case RateKind::Unidentified: return unidentified_rate;
            case RateKind::LinkXZ: return rate_xz;
            case RateKind::LinkYZ: return rate_yz;
        }
        return 0.0;
    }
};

inline std::vector<PhaseRow> parse_phase_csv(std::string_view text) {
    std::vector<PhaseRow> rows;
    std::size_t pos = 0;
    std::size_t line_no = 0;
    while (pos < text.size()) {
        auto nl = text.find('\n', pos);
        if (nl == std::string_view::npos) nl = text.size();
        std::string_view line = text.substr(pos, nl - pos);
        pos = nl + 1;
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (line_no == 1) {
            if (line != kPhaseHeader) throw ParseError("unexpected phase-space header", 0);
            continue;
        }
        if (line.empty()) continue;
        const auto f = split(line);
        if (f.size() != 13) throw ParseError("row " + std::to_string(line_no - 1) + ": expected 13 fields", line_no - 1);
        try {
            PhaseRow r;
            r.snr = {parse_number(f[0]), parse_number(f[1]), parse_number(f[2])};
            r.topology = std::string(f[3]);
            r.noise_kind = std::string(f[4]);
            r.n = static_cast<std::size_t>(parse_number(f[5]));
            r.alpha = parse_number(f[6]);
            r.criterion = std::string(f[7]);
            r.iterations = static_cast<std::size_t>(parse_number(f[8]));
            r.spurious_rate = parse_number(f[9]);
            r.unidentified_rate = parse_number(f[10]);
            r.rate_xz = parse_number(f[11]);
            r.rate_yz = parse_number(f[12]);
            rows.push_back(std::move(r));
        } catch (const InvalidArgument& e) {
            throw ParseError("row " + std::to_string(line_no - 1) + ": " + e.what(), line_no - 1);
        }
    }
    if (line_no == 0) throw ParseError("file is empty", 0);
    return rows;
}

/// Plane through parsed phase-space rows, rows/cols ascending along the free axes.
inline Plane plane_from_rows(const std::vector<PhaseRow>& rows, SeriesId axis, double value, RateKind kind) {
    std::array<std::vector<double>, 3> axes;
    for (const auto& r : rows)
        for (std::size_t a = 0; a < 3; ++a)
            if (std::find(axes[a].begin(), axes[a].end(), r.snr[a]) == axes[a].end()) axes[a].push_back(r.snr[a]);
    for (auto& a : axes) std::sort(a.begin(), a.end());
    const std::size_t fixed_pos = grid_position(axes[index_of(axis)], value);
    const double fixed = axes[index_of(axis)][fixed_pos];

    Plane p;
    p.fixed_axis = axis;
    p.fixed_value = fixed;
    std::vector<SeriesId> free;
    for (auto s : kAllSeries)
        if (s != axis) free.push_back(s);
    p.row_axis = free[0];
    p.col_axis = free[1];
    p.row_values = axes[index_of(p.row_axis)];
    p.col_values = axes[index_of(p.col_axis)];
    p.values.assign(p.row_values.size() * p.col_values.size(), std::nan(""));
    for (const auto& r : rows) {
        if (r.snr[index_of(axis)] != fixed) continue;
        const auto ri = grid_position(p.row_values, r.snr[index_of(p.row_axis)]);
        const auto ci = grid_position(p.col_values, r.snr[index_of(p.col_axis)]);
        p.values[ri * p.col_values.size() + ci] = r.rate(kind);
    }
    for (double v : p.values)
        if (std::isnan(v)) throw InvalidArgument("phase-space file does not cover the full plane");
    return p;
}

// --- heatmaps -------------------------------------------------------------------

struct Rgb {
    std::uint8_t r = 0, g = 0, b = 0;
    friend bool operator==(Rgb, Rgb) = default;
};

/// 0 -> blue, 0.5 -> white, 1 -> red, linear in between.
inline Rgb rate_color(double rate) {
    rate = std::clamp(rate, 0.0, 1.0);
    auto channel = [](double v) { return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0)); };
    if (rate <= 0.5) {
        const std::uint8_t c = channel(2.0 * rate);
        return Rgb{c, c, 255};
    }
    const std::uint8_t c = channel(2.0 - 2.0 * rate);
    return Rgb{255, c, c};
}

/// Inverse of rate_color up to channel quantization.
inline double color_rate(Rgb c) {
    if (c.b == 255 && c.r < 255) return static_cast<double>(c.r) / 510.0;
    if (c.r == 255 && c.b < 255) return 1.0 - static_cast<double>(c.g) / 510.0;
    return 0.5;
}

struct Image {
    std::size_t width = 0;
    std::size_t height = 0;
    std::vector<Rgb> pixels;  // row-major, top row first

    Rgb at(std::size_t x, std::size_t y) const { return pixels.at(y * width + x); }
};

/// One `scale` x `scale` block per cell. Image row 0 holds the first plane row.
inline Image render_plane(const Plane& p, std::size_t scale) {
    if (scale < 1) throw InvalidArgument("scale must be >= 1");
    Image img;
    img.width = p.col_values.size() * scale;
    img.height = p.row_values.size() * scale;
    img.pixels.resize(img.width * img.height);
    for (std::size_t y = 0; y < img.height; ++y)
        for (std::size_t x = 0; x < img.width; ++x) img.pixels[y * img.width + x] = rate_color(p.at(y / scale, x / scale));
    return img;
}

inline std::string ppm_bytes(const Image& img) {
    std::string out = "P6\n" + std::to_string(img.width) + " " + std::to_string(img.height) + "\n255\n";
    out.reserve(out.size() + img.pixels.size() * 3);
    for (auto px : img.pixels) {
        out.push_back(static_cast<char>(px.r));
        out.push_back(static_cast<char>(px.g));
        out.push_back(static_cast<char>(px.b));
    }
    return out;
}

inline Image parse_ppm(std::string_view bytes) {
    std::size_t pos = 0;
    auto token = [&]() {
        while (pos < bytes.size()) {
            if (bytes[pos] == '#') {
                while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
            } else if (std::isspace(static_cast<unsigned char>(bytes[pos]))) {
                ++pos;
            } else {
                break;
            }
        }
        const std::size_t start = pos;
        while (pos < bytes.size() && !std::isspace(static_cast<unsigned char>(bytes[pos]))) ++pos;
        return std::string(bytes.substr(start, pos - start));
    };
    if (token() != "P6") throw InvalidArgument("not a binary PPM (P6) image");
    Image img;
    img.width = static_cast<std::size_t>(std::stoul(token()));
    img.height = static_cast<std::size_t>(std::stoul(token()));
    if (token() != "255") throw InvalidArgument("only 8-bit PPM images are supported");
    ++pos;  // single whitespace before the raster
    if (bytes.size() < pos + img.width * img.height * 3) throw InvalidArgument("truncated PPM raster");
    img.pixels.resize(img.width * img.height);
    for (std::size_t i = 0; i < img.pixels.size(); ++i)
        img.pixels[i] = Rgb{static_cast<std::uint8_t>(bytes[pos + 3 * i]),
                            static_cast<std::uint8_t>(bytes[pos + 3 * i + 1]),
                            static_cast<std::uint8_t>(bytes[pos + 3 * i + 2])};
    return img;
}

// --- manifests ------------------------------------------------------------------

/// Flat `key=value` lines, keys in insertion order.
class Manifest {
public:
    void set(const std::string& key, const std::string& value) {
        for (auto& [k, v] : entries_)
            if (k == key) {
                v = value;
                return;
            }
        entries_.emplace_back(key, value);
    }
    std::optional<std::string> get(const std::string& key) const {
        for (const auto& [k, v] : entries_)
            if (k == key) return v;
        return std::nullopt;
    }
    const std::vector<std::pair<std::string, std::string>>& entries() const { return entries_; }

    std::string serialize() const {
        std::string out;
        for (const auto& [k, v] : entries_) out += k + "=" + v + "\n";
        return out;
    }

    static Manifest parse(std::string_view text) {
        Manifest m;
        std::istringstream in{std::string(text)};
        std::string line;
        while (std::getline(in, line)) {
            line = strip_cr(line);
            if (line.empty() || line.front() == '#') continue;
            const auto eq = line.find('=');
            if (eq == std::string::npos) throw InvalidArgument("manifest line without '=': " + line);
            m.set(line.substr(0, eq), line.substr(eq + 1));
        }
        return m;
    }

private:
    std::vector<std::pair<std::string, std::string>> entries_;
};

}  // namespace granger_lab::io
