#include "prefab/trace.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <charconv>
#include <numeric>
#include <string_view>

#include <json.hpp>

#include "prefab/csv.hpp"
#include "prefab/error.hpp"

namespace prefab {

std::int64_t SampleRate::to_samples(double seconds) const {
    return static_cast<std::int64_t>(std::llround(seconds * static_cast<double>(num) / static_cast<double>(den)));
}

namespace {
std::int64_t parse_int(std::string_view digits, const std::string& text) {
    std::int64_t v = 0;
    const auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), v);
    if (ec != std::errc{} || ptr != digits.data() + digits.size() || digits.empty())
        throw Error(ErrorKind::InvalidArgument, "malformed sample rate: " + text);
    return v;
}
}  // namespace

SampleRate parse_rate(const std::string& text) {
    SampleRate r;
    if (auto slash = text.find('/'); slash != std::string::npos) {
        r.num = parse_int(std::string_view(text).substr(0, slash), text);
        r.den = parse_int(std::string_view(text).substr(slash + 1), text);
    } else if (auto dot = text.find('.'); dot != std::string::npos) {
        // decimal → exact ratio over a power of ten
        const auto frac_digits = text.size() - dot - 1;
        if (frac_digits > 12) throw Error(ErrorKind::InvalidArgument, "too many decimals in sample rate: " + text);
        std::int64_t den = 1;
        for (std::size_t i = 0; i < frac_digits; ++i) den *= 10;
        std::string digits = text;
        digits.erase(dot, 1);
        r.num = parse_int(digits, text);
        r.den = den;
    } else {
        r.num = parse_int(text, text);
        r.den = 1;
    }
    if (r.num <= 0 || r.den <= 0) throw Error(ErrorKind::InvalidArgument, "sample rate must be positive: " + text);
    const auto g = std::gcd(r.num, r.den);
    r.num /= g;
    r.den /= g;
    return r;
}

std::string format_rate(SampleRate rate) {
    if (rate.den == 1) return std::to_string(rate.num);
    return std::to_string(rate.num) + "/" + std::to_string(rate.den);
}

std::vector<double> zero_baseline(std::span<const double> values) {
    if (values.empty()) throw Error(ErrorKind::EmptyTrace, "zero_baseline on empty trace");
    std::vector<double> out(values.begin(), values.end());
    const double first = values.front();
    for (auto& v : out) v -= first;
    return out;
}

std::vector<double> normalize_session(std::span<const double> values) {
    if (values.empty()) throw Error(ErrorKind::EmptyTrace, "normalize_session on empty trace");
    const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
    const double min = *lo, range = *hi - *lo;
    std::vector<double> out(values.size(), 0.0);
    if (range > 0.0) {
        for (std::size_t k = 0; k < values.size(); ++k) out[k] = (values[k] - min) / range;
        // pin the extremes; (max - min) / range can land one ulp off 1
        out[static_cast<std::size_t>(hi - values.begin())] = 1.0;
        out[static_cast<std::size_t>(lo - values.begin())] = 0.0;
    }
    return out;
}

AnnotationTrace zero_baseline(const AnnotationTrace& trace) {
    return {trace.rate, trace.t0, zero_baseline(std::span<const double>(trace.values))};
}

AnnotationTrace normalize_session(const AnnotationTrace& trace) {
    return {trace.rate, trace.t0, normalize_session(std::span<const double>(trace.values))};
}

AnnotationTrace resample(const AnnotationTrace& trace, SampleRate target) {
    if (trace.empty()) throw Error(ErrorKind::EmptyTrace, "resample on empty trace");
    if (target.num <= 0 || target.den <= 0) throw Error(ErrorKind::InvalidArgument, "target rate must be positive");
    if (target == trace.rate) return trace;

    // Output sample k sits at input position k * (in_rate / out_rate) = k * p / q,
    // evaluated in integers so grid points that coincide with input samples are exact.
    const std::int64_t p = trace.rate.num * target.den;
    const std::int64_t q = trace.rate.den * target.num;
    const auto last = static_cast<std::int64_t>(trace.size()) - 1;
    const std::int64_t count = last * q / p + 1;

    AnnotationTrace out{target, trace.t0, {}};
    out.values.reserve(static_cast<std::size_t>(count));
    for (std::int64_t k = 0; k < count; ++k) {
        const std::int64_t pos = k * p;
        const std::int64_t idx = pos / q;
        const std::int64_t rem = pos % q;
        const double a = trace.values[static_cast<std::size_t>(idx)];
        if (rem == 0) {
            out.values.push_back(a);
        } else {
            const double b = trace.values[static_cast<std::size_t>(idx + 1)];
            const double frac = static_cast<double>(rem) / static_cast<double>(q);
            out.values.push_back(a + (b - a) * frac);
        }
    }
    return out;
}

AnnotationTrace read_trace_csv(const std::filesystem::path& path, SampleRate rate) {
    const auto table = csv::read(path);
    const auto t_col = table.column("t_s");
    const auto v_col = table.column("value");
    if (t_col < 0 || v_col < 0) throw Error(ErrorKind::Parse, path.string() + ": expected columns t_s,value");
    AnnotationTrace trace{rate, 0.0, {}};
    for (const auto& row : table.rows) trace.values.push_back(row[static_cast<std::size_t>(v_col)]);
    if (trace.empty()) throw Error(ErrorKind::EmptyTrace, path.string());
    trace.t0 = table.rows.front()[static_cast<std::size_t>(t_col)];
    return trace;
}

void write_trace_csv(const std::filesystem::path& path, const AnnotationTrace& trace, const std::string& config_hash) {
    std::ofstream out(path);
    if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
    if (!config_hash.empty()) out << "# config_hash=" << config_hash << '\n';
    out << "t_s,value\n";
    for (std::size_t k = 0; k < trace.size(); ++k) {
        const double t = trace.t0 + trace.rate.to_seconds(static_cast<std::int64_t>(k));
        out << csv::format_double(t) << ',' << csv::format_double(trace.values[k]) << '\n';
    }
}

AnnotationTrace read_trace_jsonl(const std::filesystem::path& path, SampleRate rate) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::Io, "cannot open " + path.string());
    AnnotationTrace trace{rate, 0.0, {}};
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw Error(ErrorKind::Parse, path.string() + ": " + e.what());
        }
        if (first) {
            trace.t0 = j.at("t").get<double>();
            first = false;
        }
        trace.values.push_back(j.at("v").get<double>());
    }
    if (trace.empty()) throw Error(ErrorKind::EmptyTrace, path.string());
    return trace;
}

void write_trace_jsonl(const std::filesystem::path& path, const AnnotationTrace& trace) {
    std::ofstream out(path);
    if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
    for (std::size_t k = 0; k < trace.size(); ++k) {
        nlohmann::json j{{"t", trace.t0 + trace.rate.to_seconds(static_cast<std::int64_t>(k))}, {"v", trace.values[k]}};
        out << j.dump() << '\n';
    }
}

AnnotationTrace read_trace(const std::filesystem::path& path, SampleRate rate) {
    if (path.extension() == ".jsonl") return read_trace_jsonl(path, rate);
    return read_trace_csv(path, rate);
}

}  // namespace prefab
