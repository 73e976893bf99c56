#pragma once

#include "hfc/error.hpp"

#include <json.hpp>

#include <cmath>
#include <cstdint>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace hfc {

using ojson = nlohmann::ordered_json;

struct Check {
    std::string name;
    double value = 0.0;
    double bound = 0.0;
    std::string relation = "<="; // "<=" or ">="
    bool pass = false;
};

inline Check check_le(std::string name, double value, double bound) {
    return {std::move(name), value, bound, "<=", std::isfinite(value) && value <= bound};
}
inline Check check_ge(std::string name, double value, double bound) {
    return {std::move(name), value, bound, ">=", std::isfinite(value) && value >= bound};
}

struct Series {
    std::string name;
    std::string x_label, y_label;
    std::vector<double> x, y;
    bool log_x = false, log_y = true;
};

struct ProbeReport {
    std::string probe;
    std::uint64_t seed = 0;
    ojson inputs = ojson::object();
    ojson measured = ojson::object();
    std::vector<Check> checks;
    std::vector<Series> series;
    std::optional<std::string> error_kind, error_message;
    double seconds = 0.0; // kept out of the JSON

    bool pass() const {
        if (error_kind) return false;
        for (const auto& c : checks)
            if (!c.pass) return false;
        return true;
    }

    void fail_with(const Error& e) {
        error_kind = kind_name(e.kind());
        error_message = e.what();
    }
};

/// Non-finite values become strings so the output stays valid JSON and reruns compare equal.
inline ojson num(double v) {
    if (std::isfinite(v)) return v;
    if (std::isnan(v)) return "nan";
    return v > 0 ? "inf" : "-inf";
}

inline ojson to_json(const Check& c) {
    return {{"name", c.name}, {"value", num(c.value)}, {"relation", c.relation}, {"bound", num(c.bound)}, {"pass", c.pass}};
}

inline ojson to_json(const Series& s) {
    ojson xs = ojson::array(), ys = ojson::array();
    for (double v : s.x) xs.push_back(num(v));
    for (double v : s.y) ys.push_back(num(v));
    return {{"name", s.name}, {"x_label", s.x_label}, {"y_label", s.y_label}, {"x", xs}, {"y", ys}};
}

inline ojson to_json(const ProbeReport& r) {
    ojson j;
    j["probe"] = r.probe;
    j["seed"] = r.seed;
    j["inputs"] = r.inputs;
    j["measured"] = r.measured;
    ojson cs = ojson::array();
    for (const auto& c : r.checks) cs.push_back(to_json(c));
    j["checks"] = cs;
    if (!r.series.empty()) {
        ojson ss = ojson::array();
        for (const auto& s : r.series) ss.push_back(to_json(s));
        j["series"] = ss;
    }
    if (r.error_kind) j["error"] = {{"kind", *r.error_kind}, {"message", *r.error_message}};
    j["pass"] = r.pass();
    return j;
}

struct SuiteReport {
    std::string suite;
    std::string digest;
    std::vector<ProbeReport> probes;

    bool pass() const {
        for (const auto& p : probes)
            if (!p.pass()) return false;
        return true;
    }
};

inline ojson to_json(const SuiteReport& s) {
    ojson ps = ojson::array();
    for (const auto& p : s.probes) ps.push_back(to_json(p));
    return {{"schema", "hfc.report/1"}, {"suite", s.suite}, {"inputs_digest", s.digest}, {"probes", ps}, {"pass", s.pass()}};
}

/// FNV-1a, 64 bit, as 16 hex digits.
inline std::string fnv1a_hex(const std::string& bytes, std::uint64_t h = 0xcbf29ce484222325ULL) {
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    std::ostringstream os;
    os << std::hex;
    os.width(16);
    os.fill('0');
    os << h;
    return os.str();
}

inline std::string read_text(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::Io, "cannot read " + path);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

inline void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorKind::Io, "cannot write " + path);
    out << text;
    if (!out) throw Error(ErrorKind::Io, "write failed: " + path);
}

inline std::string dump(const ojson& j) { return j.dump(2) + "\n"; }

// ---------------------------------------------------------------- plots

inline std::string series_csv(const Series& s) {
    std::ostringstream os;
    os.precision(17);
    os << s.x_label << "," << s.y_label << "\n";
    for (size_t i = 0; i < s.x.size(); ++i) os << s.x[i] << "," << s.y[i] << "\n";
    return os.str();
}

/// A bare polyline chart, log axes where requested. Nonpositive values on a log axis are dropped.
inline std::string series_svg(const Series& s) {
    const double w = 480, h = 320, m = 48;
    std::vector<std::pair<double, double>> pts;
    for (size_t i = 0; i < s.x.size() && i < s.y.size(); ++i) {
        double x = s.x[i], y = s.y[i];
        if ((s.log_x && x <= 0) || (s.log_y && y <= 0) || !std::isfinite(x) || !std::isfinite(y)) continue;
        pts.emplace_back(s.log_x ? std::log10(x) : x, s.log_y ? std::log10(y) : y);
    }
    std::ostringstream os;
    os.precision(6);
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h << "\">\n";
    os << "<rect x=\"" << m << "\" y=\"" << m / 2 << "\" width=\"" << w - 1.5 * m << "\" height=\"" << h - 1.5 * m
       << "\" fill=\"none\" stroke=\"black\"/>\n";
    os << "<text x=\"" << w / 2 << "\" y=\"" << h - 8 << "\" text-anchor=\"middle\" font-size=\"12\">"
       << (s.log_x ? "log10 " : "") << s.x_label << "</text>\n";
    os << "<text x=\"12\" y=\"" << h / 2 << "\" font-size=\"12\" transform=\"rotate(-90 12 " << h / 2 << ")\">"
       << (s.log_y ? "log10 " : "") << s.y_label << "</text>\n";
    os << "<text x=\"" << m << "\" y=\"16\" font-size=\"12\">" << s.name << "</text>\n";
    if (!pts.empty()) {
        double x0 = pts[0].first, x1 = x0, y0 = pts[0].second, y1 = y0;
        for (auto [x, y] : pts) {
            x0 = std::min(x0, x);
            x1 = std::max(x1, x);
            y0 = std::min(y0, y);
            y1 = std::max(y1, y);
        }
        if (x1 == x0) x1 = x0 + 1;
        if (y1 == y0) y1 = y0 + 1;
        os << "<polyline fill=\"none\" stroke=\"steelblue\" stroke-width=\"2\" points=\"";
        for (auto [x, y] : pts) {
            const double px = m + (x - x0) / (x1 - x0) * (w - 1.5 * m);
            const double py = m / 2 + (1.0 - (y - y0) / (y1 - y0)) * (h - 1.5 * m);
            os << px << "," << py << " ";
        }
        os << "\"/>\n";
        os << "<text x=\"" << m << "\" y=\"" << h - 24 << "\" font-size=\"10\">" << x0 << "</text>\n";
        os << "<text x=\"" << w - m << "\" y=\"" << h - 24 << "\" font-size=\"10\" text-anchor=\"end\">" << x1
           << "</text>\n";
        os << "<text x=\"" << m + 4 << "\" y=\"" << m / 2 + 12 << "\" font-size=\"10\">" << y1 << "</text>\n";
        os << "<text x=\"" << m + 4 << "\" y=\"" << h - m - 4 << "\" font-size=\"10\">" << y0 << "</text>\n";
    }
    os << "</svg>\n";
    return os.str();
}

} // namespace hfc
