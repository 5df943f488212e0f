#include "cyclecert/netparse.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

#include <json.hpp>
#include <spdlog/spdlog.h>

#include "cyclecert/errors.hpp"

namespace cyclecert {

int Network::index_of(int bus_id) const {
    auto it = std::lower_bound(bus_ids.begin(), bus_ids.end(), bus_id);
    if (it == bus_ids.end() || *it != bus_id) {
        throw ValidationError("unknown bus " + std::to_string(bus_id));
    }
    return static_cast<int>(it - bus_ids.begin());
}

namespace {

// ---------------------------------------------------------------------------
// MATPOWER subset
// ---------------------------------------------------------------------------

struct MatrixRow {
    std::vector<double> values;
    int line = 0;
};

std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r\n");
    return s.substr(first, last - first + 1);
}

/// Drops a trailing `%` comment, ignoring `%` inside single-quoted strings.
std::string_view strip_comment(std::string_view line) {
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        if (line[i] == '\'') quoted = !quoted;
        if (line[i] == '%' && !quoted) return line.substr(0, i);
    }
    return line;
}

double parse_number(std::string_view token, int line) {
    std::string_view t = token;
    if (!t.empty() && t.front() == '+') t.remove_prefix(1);
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), value);
    if (ec != std::errc() || ptr != t.data() + t.size() || t.empty()) {
        throw ParseError("invalid number '" + std::string(token) + "'", line);
    }
    return value;
}

class MatpowerReader {
  public:
    explicit MatpowerReader(std::string_view text) : text_(text) {}

    RawCase read() {
        std::size_t pos = 0;
        int line_no = 0;
        while (pos <= text_.size()) {
            const auto end = text_.find('\n', pos);
            const auto raw = text_.substr(pos, end == std::string_view::npos ? text_.npos : end - pos);
            ++line_no;
            consume_line(strip_comment(raw), line_no);
            if (end == std::string_view::npos) break;
            pos = end + 1;
        }
        if (!current_.empty()) {
            throw ParseError("unterminated matrix 'mpc." + current_ + "'", open_line_);
        }
        return assemble();
    }

  private:
    void consume_line(std::string_view line, int line_no) {
        line = trim(line);
        if (line.empty()) return;

        if (in_cell_) {
            if (line.find('}') != std::string_view::npos) in_cell_ = false;
            return;
        }

        if (current_.empty()) {
            if (!line.starts_with("mpc.")) return;  // function header, version, etc.
            const auto eq = line.find('=');
            if (eq == std::string_view::npos) {
                throw ParseError("expected '=' after '" + std::string(line) + "'", line_no);
            }
            const std::string name(trim(line.substr(4, eq - 4)));
            std::string_view rhs = trim(line.substr(eq + 1));
            if (rhs.starts_with("[")) {
                current_ = name;
                open_line_ = line_no;
                rows_[name];
                seen_.insert(name);
                consume_matrix_text(rhs.substr(1), line_no);
            } else if (rhs.starts_with("{")) {
                in_cell_ = rhs.find('}') == std::string_view::npos;
            } else if (name == "baseMVA") {
                if (rhs.ends_with(";")) rhs.remove_suffix(1);
                base_mva_ = parse_number(trim(rhs), line_no);
            }
            return;
        }
        consume_matrix_text(line, line_no);
    }

    void consume_matrix_text(std::string_view text, int line_no) {
        const bool tracked = current_ == "bus" || current_ == "gen" || current_ == "branch";
        const auto close = text.find(']');
        std::string_view body = close == std::string_view::npos ? text : text.substr(0, close);

        std::size_t start = 0;
        while (start <= body.size()) {
            const auto semi = body.find(';', start);
            const auto row_text = body.substr(start, semi == std::string_view::npos ? body.npos : semi - start);
            if (tracked) add_row(row_text, line_no);
            if (semi == std::string_view::npos) break;
            start = semi + 1;
        }

        if (close != std::string_view::npos) {
            const auto rest = trim(text.substr(close + 1));
            if (!rest.empty() && rest != ";") {
                throw ParseError("unexpected text after ']': '" + std::string(rest) + "'", line_no);
            }
            current_.clear();
        }
    }

    void add_row(std::string_view row_text, int line_no) {
        std::vector<double> values;
        std::size_t i = 0;
        while (i < row_text.size()) {
            while (i < row_text.size() && (row_text[i] == ' ' || row_text[i] == '\t' || row_text[i] == ',' ||
                                           row_text[i] == '\r')) {
                ++i;
            }
            const auto start = i;
            while (i < row_text.size() && row_text[i] != ' ' && row_text[i] != '\t' && row_text[i] != ',' &&
                   row_text[i] != '\r') {
                ++i;
            }
            if (i > start) values.push_back(parse_number(row_text.substr(start, i - start), line_no));
        }
        if (!values.empty()) rows_[current_].push_back({std::move(values), line_no});
    }

    RawCase assemble() const {
        for (const char* required : {"bus", "branch"}) {
            if (!seen_.contains(required)) {
                throw ParseError(std::string("missing matrix 'mpc.") + required + "'", 0);
            }
        }

        RawCase raw;
        raw.base_mva = base_mva_;

        std::set<int> ids;
        for (const auto& row : rows_.at("bus")) {
            if (row.values.size() < 3) throw ParseError("bus row needs at least 3 columns", row.line);
            RawBus bus;
            bus.id = as_id(row.values[0], row.line);
            bus.type = static_cast<int>(row.values[1]);
            bus.pd_mw = row.values[2];
            if (row.values.size() > 7) bus.vm = row.values[7];
            if (!ids.insert(bus.id).second) {
                throw ParseError("duplicate bus " + std::to_string(bus.id), row.line);
            }
            raw.buses.push_back(bus);
        }
        if (raw.buses.empty()) throw ParseError("case has no buses", 0);

        if (rows_.contains("gen")) {
            for (const auto& row : rows_.at("gen")) {
                if (row.values.size() < 2) throw ParseError("gen row needs at least 2 columns", row.line);
                const bool in_service = row.values.size() <= 7 || row.values[7] > 0;
                if (!in_service) continue;
                RawGen gen{as_id(row.values[0], row.line), row.values[1]};
                if (!ids.contains(gen.bus)) {
                    throw ParseError("unknown bus " + std::to_string(gen.bus) + " in gen", row.line);
                }
                raw.gens.push_back(gen);
            }
        }

        for (const auto& row : rows_.at("branch")) {
            if (row.values.size() < 4) throw ParseError("branch row needs at least 4 columns", row.line);
            const bool in_service = row.values.size() <= 10 || row.values[10] > 0;
            if (!in_service) continue;
            RawBranch br;
            br.from = as_id(row.values[0], row.line);
            br.to = as_id(row.values[1], row.line);
            br.r = row.values[2];
            br.x = row.values[3];
            if (row.values.size() > 4) br.charging = row.values[4];
            br.line = row.line;
            for (int end : {br.from, br.to}) {
                if (!ids.contains(end)) {
                    throw ParseError("unknown bus " + std::to_string(end) + " in branch", row.line);
                }
            }
            if (!(br.x > 0.0)) throw ParseError("non-positive reactance on branch", row.line);
            raw.branches.push_back(br);
        }
        return raw;
    }

    static int as_id(double v, int line) {
        if (v != std::floor(v) || v < std::numeric_limits<int>::min() || v > std::numeric_limits<int>::max()) {
            throw ParseError("bus id must be an integer", line);
        }
        return static_cast<int>(v);
    }

    std::string_view text_;
    std::string current_;
    int open_line_ = 0;
    bool in_cell_ = false;
    double base_mva_ = 100.0;
    std::map<std::string, std::vector<MatrixRow>> rows_;
    std::set<std::string> seen_;
};

int line_of_offset(std::string_view text, std::size_t offset) {
    offset = std::min(offset, text.size());
    return 1 + static_cast<int>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(offset), '\n'));
}

}  // namespace

RawCase parse_matpower(std::string_view text) { return MatpowerReader(text).read(); }

RawCase parse_json_case(std::string_view text) {
    using nlohmann::json;
    json doc;
    try {
        doc = json::parse(text.begin(), text.end());
    } catch (const json::parse_error& e) {
        throw ParseError(e.what(), line_of_offset(text, e.byte));
    }

    RawCase raw;
    try {
        raw.base_mva = doc.value("baseMVA", 1.0);
        std::set<int> ids;
        for (const auto& b : doc.at("buses")) {
            RawBus bus;
            bus.id = b.at("id").get<int>();
            bus.vm = b.value("vm", 1.0);
            bus.pd_mw = 0.0;
            if (!ids.insert(bus.id).second) throw ParseError("duplicate bus " + std::to_string(bus.id), 0);
            raw.buses.push_back(bus);
        }
        if (raw.buses.empty()) throw ParseError("case has no buses", 0);

        for (const auto& b : doc.value("branches", json::array())) {
            if (b.value("status", 1) <= 0) continue;
            RawBranch br;
            br.from = b.at("from").get<int>();
            br.to = b.at("to").get<int>();
            if (b.contains("b")) {
                br.susceptance = b.at("b").get<double>();
                br.x = b.contains("x") ? b.at("x").get<double>() : 1.0 / *br.susceptance;
            } else {
                br.x = b.at("x").get<double>();
            }
            for (int end : {br.from, br.to}) {
                if (!ids.contains(end)) throw ParseError("unknown bus " + std::to_string(end) + " in branch", 0);
            }
            if (!(br.x > 0.0) || (br.susceptance && !(*br.susceptance > 0.0))) {
                throw ParseError("non-positive reactance on branch " + std::to_string(br.from) + "-" +
                                     std::to_string(br.to),
                                 0);
            }
            raw.branches.push_back(br);
        }

        for (const auto& inj : doc.value("injections", json::array())) {
            RawGen gen{inj.at("id").get<int>(), inj.at("p").get<double>()};
            if (!ids.contains(gen.bus)) throw ParseError("unknown bus " + std::to_string(gen.bus) + " in injection", 0);
            raw.gens.push_back(gen);
        }
    } catch (const json::exception& e) {
        throw ParseError(std::string("schema error: ") + e.what(), 0);
    }
    return raw;
}

RawCase parse_case(std::string_view text) {
    const auto first = text.find_first_not_of(" \t\r\n");
    if (first != std::string_view::npos && text[first] == '{') return parse_json_case(text);
    return parse_matpower(text);
}

RawCase read_case_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot read " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_case(buf.str());
}

Network losslessify(const RawCase& raw, const LosslessOptions& opts) {
    if (raw.buses.empty()) throw ValidationError("case has no buses");
    if (!(raw.base_mva > 0.0)) throw ValidationError("baseMVA must be positive");

    Network net;
    std::vector<const RawBus*> buses;
    for (const auto& b : raw.buses) buses.push_back(&b);
    std::sort(buses.begin(), buses.end(), [](auto* a, auto* b) { return a->id < b->id; });
    for (std::size_t i = 0; i < buses.size(); ++i) {
        if (i > 0 && buses[i]->id == buses[i - 1]->id) {
            throw ValidationError("duplicate bus " + std::to_string(buses[i]->id));
        }
        net.bus_ids.push_back(buses[i]->id);
    }
    const int n = net.n();

    net.voltage = Eigen::VectorXd::Ones(n);
    if (opts.voltage == VoltagePolicy::Case) {
        for (int i = 0; i < n; ++i) {
            if (!(buses[i]->vm > 0.0)) throw ValidationError("non-positive voltage at bus " + std::to_string(buses[i]->id));
            net.voltage[i] = buses[i]->vm;
        }
    }

    // Parallel branches collapse onto one (min, max) key.
    std::map<std::pair<int, int>, std::pair<double, int>> merged;
    for (const auto& br : raw.branches) {
        const int a = net.index_of(br.from);
        const int b = net.index_of(br.to);
        if (a == b) throw ValidationError("self-loop branch at bus " + std::to_string(br.from));
        double susceptance = 0.0;
        if (br.susceptance) {
            susceptance = *br.susceptance;
        } else {
            if (br.x == 0.0) throw ValidationError("zero reactance on branch " + std::to_string(br.from) + "-" + std::to_string(br.to));
            if (br.x < 0.0) throw ValidationError("non-positive reactance on branch " + std::to_string(br.from) + "-" + std::to_string(br.to));
            susceptance = 1.0 / br.x;
        }
        if (!(susceptance > 0.0) || !std::isfinite(susceptance)) {
            throw ValidationError("invalid susceptance on branch " + std::to_string(br.from) + "-" + std::to_string(br.to));
        }
        auto& slot = merged[{std::min(a, b), std::max(a, b)}];
        slot.first += susceptance;
        slot.second += 1;
    }
    for (const auto& [key, value] : merged) {
        const auto [a, b] = key;
        net.branches.push_back({a, b, value.first, (net.voltage[a] * net.voltage[b]) * value.first});
        if (value.second > 1) {
            net.report.merged.push_back({net.bus_ids[a], net.bus_ids[b], value.second, value.first});
            spdlog::debug("merged {} parallel branches between buses {} and {}", value.second, net.bus_ids[a],
                          net.bus_ids[b]);
        }
    }

    // Connectivity.
    std::vector<int> parent(n);
    std::iota(parent.begin(), parent.end(), 0);
    auto find = [&](int v) {
        while (parent[v] != v) v = parent[v] = parent[parent[v]];
        return v;
    };
    int groups = n;
    for (const auto& br : net.branches) {
        const int ra = find(br.source), rb = find(br.sink);
        if (ra != rb) {
            parent[ra] = rb;
            --groups;
        }
    }
    if (groups != 1) throw ValidationError("disconnected graph (" + std::to_string(groups) + " islands)");

    // Injections.
    Eigen::VectorXd generation = Eigen::VectorXd::Zero(n);
    for (const auto& g : raw.gens) generation[net.index_of(g.bus)] += g.pg_mw;
    net.injection.resize(n);
    for (int i = 0; i < n; ++i) net.injection[i] = (generation[i] - buses[i]->pd_mw) / raw.base_mva;

    const double mismatch = net.injection.sum();
    net.report.mismatch = mismatch;
    if (opts.slack_bus) {
        net.injection[net.index_of(*opts.slack_bus)] -= mismatch;
    } else if (std::abs(mismatch) > 1e-12 * std::max(1.0, net.injection.lpNorm<1>())) {
        net.report.shift_per_bus = mismatch / n;
        net.report.projected = true;
        net.injection.array() -= net.report.shift_per_bus;
    }
    return net;
}

std::string serialize_network(const Network& net) {
    nlohmann::ordered_json doc;
    doc["baseMVA"] = 1.0;
    auto& buses = doc["buses"] = nlohmann::ordered_json::array();
    for (int i = 0; i < net.n(); ++i) buses.push_back({{"id", net.bus_ids[i]}, {"vm", net.voltage[i]}});
    auto& branches = doc["branches"] = nlohmann::ordered_json::array();
    for (const auto& br : net.branches) {
        branches.push_back({{"from", net.bus_ids[br.source]},
                            {"to", net.bus_ids[br.sink]},
                            {"x", 1.0 / br.susceptance},
                            {"b", br.susceptance}});
    }
    auto& injections = doc["injections"] = nlohmann::ordered_json::array();
    for (int i = 0; i < net.n(); ++i) injections.push_back({{"id", net.bus_ids[i]}, {"p", net.injection[i]}});
    return doc.dump(2);
}

}  // namespace cyclecert
