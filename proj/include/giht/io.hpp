#pragma once

// File formats.
//
//   layout JSON    {"p": int, "groups": [[int, ...], ...]}
//   problem CSV    one sample per line: x_1,...,x_p,y (y is the last column).
//                  Blank lines and lines starting with '#' are ignored.
//   vector file    real numbers separated by whitespace or commas, any number
//                  per line; '#' starts a comment.
//   trace CSV      header "iteration,objective,iterate_change,error_to_reference,n_groups";
//                  error_to_reference is "nan" when no reference was supplied.
//
// Reals are written in shortest round-trip form, so every file parses back to
// the identical doubles.

#include "giht/groups.hpp"
#include "giht/objective.hpp"
#include "giht/solver.hpp"
#include "giht/synth.hpp"

#include <json.hpp>

#include <charconv>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace giht {

/// Malformed file contents. Carries the 1-based line number when known.
class ParseError : public InvalidArgument {
public:
    ParseError(const std::string& what, std::size_t line = 0)
        : InvalidArgument(line ? what + " (line " + std::to_string(line) + ")" : what), line_(line) {}
    [[nodiscard]] std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

/// Missing or unreadable files.
class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

namespace io {

inline std::string format_real(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, res.ptr);
}

inline double parse_real(std::string_view token, std::size_t line) {
    while (!token.empty() && std::isspace(static_cast<unsigned char>(token.front()))) token.remove_prefix(1);
    while (!token.empty() && std::isspace(static_cast<unsigned char>(token.back()))) token.remove_suffix(1);
    if (token == "nan") return std::numeric_limits<double>::quiet_NaN();
    if (token == "inf") return std::numeric_limits<double>::infinity();
    if (token == "-inf") return -std::numeric_limits<double>::infinity();
    if (!token.empty() && token.front() == '+') token.remove_prefix(1);
    double value = 0.0;
    const auto res = std::from_chars(token.data(), token.data() + token.size(), value);
    if (token.empty() || res.ec != std::errc() || res.ptr != token.data() + token.size())
        throw ParseError("expected a real number, got '" + std::string(token) + "'", line);
    return value;
}

inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void write_file(const std::filesystem::path& path, std::string_view contents) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    out << contents;
    if (!out) throw IoError("failed writing " + path.string());
}

// ---------------------------------------------------------------- layouts

inline nlohmann::json layout_to_json(const GroupLayout& layout) {
    return {{"p", layout.p()}, {"groups", layout.groups()}};
}

inline GroupLayout layout_from_json(const nlohmann::json& doc) {
    if (!doc.is_object() || !doc.contains("p") || !doc.contains("groups"))
        throw ParseError("layout JSON needs keys \"p\" and \"groups\"");
    if (!doc["p"].is_number_integer()) throw ParseError("layout JSON: \"p\" must be an integer");
    if (!doc["groups"].is_array()) throw ParseError("layout JSON: \"groups\" must be an array");
    std::vector<std::vector<Index>> groups;
    for (const auto& g : doc["groups"]) {
        if (!g.is_array()) throw ParseError("layout JSON: each group must be an array of integers");
        auto& out = groups.emplace_back();
        for (const auto& c : g) {
            if (!c.is_number_integer()) throw ParseError("layout JSON: group entries must be integers");
            out.push_back(c.get<Index>());
        }
    }
    return GroupLayout::create(doc["p"].get<Index>(), std::move(groups));
}

inline GroupLayout read_layout(const std::filesystem::path& path) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(read_file(path));
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
    return layout_from_json(doc);
}

inline void write_layout(const std::filesystem::path& path, const GroupLayout& layout) {
    write_file(path, layout_to_json(layout).dump() + "\n");
}

// ---------------------------------------------------------------- vectors

inline Vector parse_vector(std::string_view text) {
    std::vector<double> values;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const auto end = text.find('\n', pos);
        std::string_view line = text.substr(pos, end == std::string_view::npos ? std::string_view::npos : end - pos);
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
        std::size_t i = 0;
        while (i < line.size()) {
            while (i < line.size() && (std::isspace(static_cast<unsigned char>(line[i])) || line[i] == ',')) ++i;
            std::size_t j = i;
            while (j < line.size() && !std::isspace(static_cast<unsigned char>(line[j])) && line[j] != ',') ++j;
            if (j > i) values.push_back(parse_real(line.substr(i, j - i), line_no));
            i = j;
        }
        if (end == std::string_view::npos) break;
        pos = end + 1;
    }
    return Eigen::Map<const Vector>(values.data(), static_cast<Index>(values.size()));
}

inline Vector read_vector(const std::filesystem::path& path) { return parse_vector(read_file(path)); }

inline std::string format_vector(const Vector& v) {
    std::string out;
    for (Index i = 0; i < v.size(); ++i) out += format_real(v[i]) + "\n";
    return out;
}

// ---------------------------------------------------------------- problems

inline RegressionProblem parse_problem_csv(std::string_view text) {
    std::vector<std::vector<double>> rows;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos < text.size()) {
        const auto end = text.find('\n', pos);
        std::string_view line = text.substr(pos, end == std::string_view::npos ? std::string_view::npos : end - pos);
        ++line_no;
        pos = end == std::string_view::npos ? text.size() : end + 1;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (line.find_first_not_of(" \t") == std::string_view::npos || line.front() == '#') continue;
        auto& row = rows.emplace_back();
        std::size_t start = 0;
        for (;;) {
            const auto comma = line.find(',', start);
            row.push_back(parse_real(line.substr(start, comma == std::string_view::npos ? std::string_view::npos
                                                                                         : comma - start),
                                     line_no));
            if (comma == std::string_view::npos) break;
            start = comma + 1;
        }
        if (row.size() < 2) throw ParseError("problem CSV rows need at least one feature and a response", line_no);
        if (row.size() != rows.front().size())
            throw ParseError("problem CSV row has " + std::to_string(row.size()) + " columns, expected " +
                                 std::to_string(rows.front().size()),
                             line_no);
    }
    if (rows.empty()) throw ParseError("problem CSV has no data rows");
    const auto n = static_cast<Index>(rows.size());
    const auto p = static_cast<Index>(rows.front().size()) - 1;
    RowMatrix X(n, p);
    Vector y(n);
    for (Index i = 0; i < n; ++i) {
        const auto& row = rows[static_cast<std::size_t>(i)];
        for (Index j = 0; j < p; ++j) X(i, j) = row[static_cast<std::size_t>(j)];
        y[i] = row.back();
    }
    return RegressionProblem(std::move(X), std::move(y));
}

inline std::string format_problem_csv(const RegressionProblem& problem) {
    std::string out;
    for (Index i = 0; i < problem.n(); ++i) {
        for (Index j = 0; j < problem.p(); ++j) {
            out += format_real(problem.X()(i, j));
            out += ',';
        }
        out += format_real(problem.y()[i]);
        out += '\n';
    }
    return out;
}

inline RegressionProblem read_problem(const std::filesystem::path& path) {
    try {
        return parse_problem_csv(read_file(path));
    } catch (const ParseError& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
}

// ---------------------------------------------------------------- traces

inline constexpr std::string_view kTraceHeader = "iteration,objective,iterate_change,error_to_reference,n_groups";

inline std::string format_trace_csv(const IhtTrace& trace) {
    std::string out(kTraceHeader);
    out += '\n';
    for (std::size_t t = 0; t < trace.objective_values.size(); ++t) {
        out += std::to_string(t + 1) + ',' + format_real(trace.objective_values[t]) + ',' +
               format_real(trace.iterate_change[t]) + ',' +
               format_real(t < trace.error_to_reference.size() ? trace.error_to_reference[t]
                                                               : std::numeric_limits<double>::quiet_NaN()) +
               ',' + std::to_string(trace.support_history[t].size()) + '\n';
    }
    return out;
}

struct TraceRow {
    int iteration = 0;
    double objective = 0.0;
    double iterate_change = 0.0;
    double error_to_reference = 0.0;
    Index n_groups = 0;
};

inline std::vector<TraceRow> parse_trace_csv(std::string_view text) {
    std::vector<TraceRow> rows;
    std::istringstream in{std::string(text)};
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line_no == 1) {
            if (line != kTraceHeader) throw ParseError("unexpected trace CSV header", 1);
            continue;
        }
        if (line.empty()) continue;
        std::vector<std::string_view> cells;
        std::string_view rest(line);
        for (;;) {
            const auto comma = rest.find(',');
            cells.push_back(rest.substr(0, comma));
            if (comma == std::string_view::npos) break;
            rest.remove_prefix(comma + 1);
        }
        if (cells.size() != 5) throw ParseError("trace CSV rows have 5 columns", line_no);
        TraceRow row;
        row.iteration = static_cast<int>(parse_real(cells[0], line_no));
        row.objective = parse_real(cells[1], line_no);
        row.iterate_change = parse_real(cells[2], line_no);
        row.error_to_reference = parse_real(cells[3], line_no);
        row.n_groups = static_cast<Index>(parse_real(cells[4], line_no));
        rows.push_back(row);
    }
    return rows;
}

// ---------------------------------------------------------------- instances

inline nlohmann::json spec_to_json(const SynthSpec& spec) {
    nlohmann::json j = {{"M", spec.M},
                        {"B", spec.B},
                        {"overlap", spec.overlap},
                        {"k_star", spec.k_star},
                        {"kappa", spec.kappa},
                        {"noise_lambda", spec.noise_lambda},
                        {"n", spec.n},
                        {"rotate", spec.rotate},
                        {"seed", spec.seed}};
    j["k2_star"] = spec.k2_star ? nlohmann::json(*spec.k2_star) : nlohmann::json(nullptr);
    return j;
}

inline SynthSpec spec_from_json(const nlohmann::json& j) {
    SynthSpec spec;
    try {
        spec.M = j.at("M").get<Index>();
        spec.B = j.at("B").get<Index>();
        spec.overlap = j.at("overlap").get<Index>();
        spec.k_star = j.at("k_star").get<Index>();
        spec.kappa = j.at("kappa").get<double>();
        spec.noise_lambda = j.at("noise_lambda").get<double>();
        spec.n = j.at("n").get<Index>();
        spec.rotate = j.at("rotate").get<bool>();
        spec.seed = j.at("seed").get<std::uint64_t>();
        if (j.contains("k2_star") && !j["k2_star"].is_null()) spec.k2_star = j["k2_star"].get<Index>();
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("synth spec JSON: ") + e.what());
    }
    return spec;
}

/// Writes problem.csv, layout.json and meta.json (spec, seed, w*, active groups) into `dir`.
inline void save_instance(const std::filesystem::path& dir, const SynthInstance& inst, const SynthSpec& spec) {
    std::filesystem::create_directories(dir);
    write_file(dir / "problem.csv", format_problem_csv(inst.problem));
    write_layout(dir / "layout.json", inst.layout);
    std::vector<double> w(inst.w_star.data(), inst.w_star.data() + inst.w_star.size());
    nlohmann::json meta = {{"spec", spec_to_json(spec)},
                           {"seed", spec.seed},
                           {"p", inst.layout.p()},
                           {"active_groups", inst.active_groups.group_ids},
                           {"w_star", w}};
    write_file(dir / "meta.json", meta.dump(1) + "\n");
}

struct LoadedInstance {
    SynthInstance instance;
    std::optional<SynthSpec> spec;
};

inline LoadedInstance load_instance(const std::filesystem::path& dir) {
    RegressionProblem problem = read_problem(dir / "problem.csv");
    GroupLayout layout = read_layout(dir / "layout.json");
    if (layout.p() != problem.p()) throw ParseError("instance: layout and problem dimensions differ");
    Vector w_star = Vector::Zero(problem.p());
    GroupSupport active;
    std::optional<SynthSpec> spec;
    if (std::filesystem::exists(dir / "meta.json")) {
        nlohmann::json meta;
        try {
            meta = nlohmann::json::parse(read_file(dir / "meta.json"));
            const auto w = meta.at("w_star").get<std::vector<double>>();
            if (static_cast<Index>(w.size()) != problem.p()) throw ParseError("meta.json: w_star has wrong length");
            w_star = Eigen::Map<const Vector>(w.data(), problem.p());
            active = GroupSupport::from_groups(layout, meta.at("active_groups").get<std::vector<Index>>());
            if (meta.contains("spec")) spec = spec_from_json(meta["spec"]);
        } catch (const nlohmann::json::exception& e) {
            throw ParseError(std::string("meta.json: ") + e.what());
        }
    }
    return {SynthInstance{std::move(problem), std::move(layout), std::move(w_star), std::move(active)}, spec};
}

} // namespace io
} // namespace giht
