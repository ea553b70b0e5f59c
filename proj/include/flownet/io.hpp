#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "analysis.hpp"
#include "dynamics.hpp"
#include "error.hpp"
#include "resilience.hpp"
#include "topology.hpp"
#include "types.hpp"

namespace flownet {

using json = nlohmann::ordered_json;

/// A network description as read from disk.
struct NetworkFile {
    std::string name;
    Model model;
};

namespace detail {

struct TextPosition {
    std::size_t line = 0;
    std::size_t column = 0;
};

inline TextPosition position_of(std::string_view text, std::size_t offset)
{
    TextPosition p{1, 1};
    for (std::size_t i = 0; i < offset && i < text.size(); ++i) {
        if (text[i] == '\n') {
            ++p.line;
            p.column = 1;
        } else {
            ++p.column;
        }
    }
    return p;
}

inline std::string escape_pointer_token(std::string_view token)
{
    std::string out;
    for (char c : token) {
        if (c == '~') {
            out += "~0";
        } else if (c == '/') {
            out += "~1";
        } else {
            out += c;
        }
    }
    return out;
}

/// Offsets of every value in a syntactically valid JSON text, keyed by JSON
/// pointer. Used only to anchor schema errors.
class PointerIndex
{
public:
    explicit PointerIndex(std::string_view text) : text_(text)
    {
        skip_ws();
        value("");
    }

    std::size_t offset(const std::string &pointer) const
    {
        // Walk up to the nearest indexed ancestor.
        std::string p = pointer;
        for (;;) {
            if (auto it = offsets_.find(p); it != offsets_.end()) {
                return it->second;
            }
            if (p.empty()) {
                return 0;
            }
            p.erase(p.rfind('/'));
        }
    }

private:
    void skip_ws()
    {
        while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) {
            ++pos_;
        }
    }

    std::string string_token()
    {
        std::string out;
        ++pos_; // opening quote
        while (pos_ < text_.size() && text_[pos_] != '"') {
            if (text_[pos_] == '\\') {
                ++pos_;
            }
            out += text_[pos_++];
        }
        ++pos_;
        return out;
    }

    void value(const std::string &pointer)
    {
        offsets_[pointer] = pos_;
        if (pos_ >= text_.size()) {
            return;
        }
        const char c = text_[pos_];
        if (c == '{') {
            ++pos_;
            skip_ws();
            while (pos_ < text_.size() && text_[pos_] != '}') {
                const std::string key = string_token();
                skip_ws();
                ++pos_; // ':'
                skip_ws();
                value(pointer + "/" + escape_pointer_token(key));
                skip_ws();
                if (pos_ < text_.size() && text_[pos_] == ',') {
                    ++pos_;
                    skip_ws();
                }
            }
            ++pos_;
        } else if (c == '[') {
            ++pos_;
            skip_ws();
            std::size_t index = 0;
            while (pos_ < text_.size() && text_[pos_] != ']') {
                value(pointer + "/" + std::to_string(index++));
                skip_ws();
                if (pos_ < text_.size() && text_[pos_] == ',') {
                    ++pos_;
                    skip_ws();
                }
            }
            ++pos_;
        } else if (c == '"') {
            string_token();
        } else {
            while (pos_ < text_.size() && !std::isspace(static_cast<unsigned char>(text_[pos_])) && text_[pos_] != ','
                   && text_[pos_] != ']' && text_[pos_] != '}') {
                ++pos_;
            }
        }
    }

    std::string_view text_;
    std::size_t pos_ = 0;
    std::map<std::string, std::size_t> offsets_;
};

/// Schema reader that reports the position of the offending value.
class SchemaReader
{
public:
    explicit SchemaReader(std::string_view text) : text_(text), index_(text) {}

    [[noreturn]] void fail(const std::string &pointer, const std::string &message) const
    {
        const auto p = position_of(text_, index_.offset(pointer));
        throw InputError(ErrorCode::SchemaError, message + " at " + (pointer.empty() ? "/" : pointer), p.line,
                         p.column, pointer);
    }

    const json &member(const json &obj, const std::string &pointer, const char *key) const
    {
        if (!obj.contains(key)) {
            fail(pointer, std::string("missing key \"") + key + "\"");
        }
        return obj.at(key);
    }

    void expect_object(const json &j, const std::string &pointer) const
    {
        if (!j.is_object()) {
            fail(pointer, "expected an object");
        }
    }

    void expect_array(const json &j, const std::string &pointer) const
    {
        if (!j.is_array()) {
            fail(pointer, "expected an array");
        }
    }

    void allow_keys(const json &obj, const std::string &pointer, std::initializer_list<std::string_view> keys) const
    {
        for (const auto &[key, _] : obj.items()) {
            if (std::find(keys.begin(), keys.end(), key) == keys.end()) {
                fail(pointer + "/" + escape_pointer_token(key), "unknown key \"" + key + "\"");
            }
        }
    }

    double number(const json &j, const std::string &pointer) const
    {
        if (!j.is_number()) {
            fail(pointer, "expected a number");
        }
        const double v = j.get<double>();
        if (!std::isfinite(v)) {
            fail(pointer, "expected a finite number");
        }
        return v;
    }

    double number_at(const json &obj, const std::string &pointer, const char *key) const
    {
        return number(member(obj, pointer, key), pointer + "/" + key);
    }

    /// 1-based id in 1..n, returned zero-based.
    CellIndex cell(const json &j, const std::string &pointer, std::size_t n) const
    {
        if (!j.is_number_integer()) {
            fail(pointer, "expected an integer cell id");
        }
        const auto id = j.get<long long>();
        if (id < 1 || static_cast<std::size_t>(id) > n) {
            // Well-formed but out of range: a domain error, still anchored.
            const auto p = position_of(text_, index_.offset(pointer));
            throw InputError(ErrorCode::IndexOutOfRange,
                             "cell id " + std::to_string(id) + " outside 1.." + std::to_string(n) + " at " + pointer,
                             p.line, p.column, pointer);
        }
        return static_cast<CellIndex>(id - 1);
    }

    std::string string_at(const json &obj, const std::string &pointer, const char *key) const
    {
        const auto &j = member(obj, pointer, key);
        if (!j.is_string()) {
            fail(pointer + "/" + key, "expected a string");
        }
        return j.get<std::string>();
    }

private:
    std::string_view text_;
    PointerIndex index_;
};

inline DemandFunction read_demand(const SchemaReader &r, const json &j, const std::string &ptr)
{
    r.expect_object(j, ptr);
    const auto family = r.string_at(j, ptr, "family");
    try {
        if (family == "linear") {
            r.allow_keys(j, ptr, {"family", "a"});
            return DemandFunction::linear(r.number_at(j, ptr, "a"));
        }
        if (family == "saturating_exp") {
            r.allow_keys(j, ptr, {"family", "C", "lambda"});
            return DemandFunction::saturating_exp(r.number_at(j, ptr, "C"), r.number_at(j, ptr, "lambda"));
        }
        if (family == "piecewise_linear_cap") {
            r.allow_keys(j, ptr, {"family", "a", "C"});
            return DemandFunction::piecewise_linear_cap(r.number_at(j, ptr, "a"), r.number_at(j, ptr, "C"));
        }
    } catch (const InputError &) {
        throw;
    } catch (const Error &e) {
        r.fail(ptr, e.detail());
    }
    r.fail(ptr + "/family", "unknown demand family \"" + family + "\"");
}

inline SupplyFunction read_supply(const SchemaReader &r, const json &j, const std::string &ptr)
{
    r.expect_object(j, ptr);
    const auto family = r.string_at(j, ptr, "family");
    try {
        if (family == "constant") {
            r.allow_keys(j, ptr, {"family", "s"});
            return SupplyFunction::constant(r.number_at(j, ptr, "s"));
        }
        if (family == "affine_decreasing") {
            r.allow_keys(j, ptr, {"family", "s", "b"});
            return SupplyFunction::affine_decreasing(r.number_at(j, ptr, "s"), r.number_at(j, ptr, "b"));
        }
        if (family == "unlimited") {
            r.allow_keys(j, ptr, {"family"});
            return SupplyFunction::unlimited();
        }
    } catch (const InputError &) {
        throw;
    } catch (const Error &e) {
        r.fail(ptr, e.detail());
    }
    r.fail(ptr + "/family", "unknown supply family \"" + family + "\"");
}

inline CellPair read_pair(const SchemaReader &r, const json &j, const std::string &ptr, std::size_t n,
                          std::size_t arity)
{
    if (!j.is_array() || j.size() != arity) {
        r.fail(ptr, "expected an array of " + std::to_string(arity) + " entries");
    }
    return {r.cell(j[0], ptr + "/0", n), r.cell(j[1], ptr + "/1", n)};
}

inline std::vector<CellIndex> read_cells(const SchemaReader &r, const json &doc, const char *key, std::size_t n)
{
    const std::string ptr = std::string("/") + key;
    std::vector<CellIndex> cells;
    if (!doc.contains(key)) {
        return cells;
    }
    const auto &arr = doc.at(key);
    r.expect_array(arr, ptr);
    for (std::size_t i = 0; i < arr.size(); ++i) {
        cells.push_back(r.cell(arr[i], ptr + "/" + std::to_string(i), n));
    }
    return cells;
}

inline Policy read_policy(const SchemaReader &r, const json &j, const Topology &t)
{
    const std::string ptr = "/policy";
    r.expect_object(j, ptr);
    const auto kind = r.string_at(j, ptr, "kind");
    const auto n = t.size();
    const auto nn = static_cast<Eigen::Index>(n);

    auto routing = [&]() {
        r.allow_keys(j, ptr, {"kind", "routing"});
        const auto &arr = r.member(j, ptr, "routing");
        r.expect_array(arr, ptr + "/routing");
        Matrix R = Matrix::Zero(nn, nn);
        for (std::size_t e = 0; e < arr.size(); ++e) {
            const auto p = ptr + "/routing/" + std::to_string(e);
            const auto [a, b] = read_pair(r, arr[e], p, n, 3);
            R(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) = r.number(arr[e][2], p + "/2");
        }
        return R;
    };
    auto logit = [&]() {
        r.allow_keys(j, ptr, {"kind", "alpha", "beta"});
        LogitParams params{Vector(nn), Vector(nn)};
        for (const char *key : {"alpha", "beta"}) {
            const auto &arr = r.member(j, ptr, key);
            const auto p = ptr + "/" + key;
            r.expect_array(arr, p);
            if (arr.size() != n) {
                r.fail(p, "expected " + std::to_string(n) + " entries");
            }
            Vector &v = std::string_view(key) == "alpha" ? params.alpha : params.beta;
            for (std::size_t i = 0; i < n; ++i) {
                v[static_cast<Eigen::Index>(i)] = r.number(arr[i], p + "/" + std::to_string(i));
            }
        }
        return params;
    };

    if (kind == "constant") {
        return ConstantRoutingPolicy{routing()};
    }
    if (kind == "fifo") {
        return FifoPolicy{routing()};
    }
    if (kind == "nonfifo") {
        return NonFifoPolicy{routing()};
    }
    if (kind == "logit") {
        return LogitRoutingPolicy{logit()};
    }
    if (kind == "logit_control") {
        return LogitControlPolicy{logit()};
    }
    if (kind == "dual_ascent") {
        r.allow_keys(j, ptr, {"kind", "link_costs", "outflow_costs"});
        ConvexCostSet costs;
        auto cost = [&](const json &v, const std::string &p) {
            const double c = r.number(v, p);
            if (!(c > 0.0)) {
                r.fail(p, "quadratic cost coefficient must be positive");
            }
            return ConvexCost::quadratic(c);
        };
        const auto &links = r.member(j, ptr, "link_costs");
        r.expect_array(links, ptr + "/link_costs");
        for (std::size_t e = 0; e < links.size(); ++e) {
            const auto p = ptr + "/link_costs/" + std::to_string(e);
            const auto pair = read_pair(r, links[e], p, n, 3);
            if (!costs.links.emplace(pair, cost(links[e][2], p + "/2")).second) {
                r.fail(p, "duplicate link cost");
            }
        }
        const auto &outs = r.member(j, ptr, "outflow_costs");
        r.expect_array(outs, ptr + "/outflow_costs");
        for (std::size_t e = 0; e < outs.size(); ++e) {
            const auto p = ptr + "/outflow_costs/" + std::to_string(e);
            if (!outs[e].is_array() || outs[e].size() != 2) {
                r.fail(p, "expected an array of 2 entries");
            }
            if (!costs.outflows.emplace(r.cell(outs[e][0], p + "/0", n), cost(outs[e][1], p + "/1")).second) {
                r.fail(p, "duplicate outflow cost");
            }
        }
        return DualAscentPolicy{std::move(costs)};
    }
    r.fail(ptr + "/kind", "unknown policy kind \"" + kind + "\"");
}

} // namespace detail

/// Parses a network document. Malformed JSON and schema violations raise
/// InputError with a line/column anchor; a well-formed document describing
/// an invalid network raises the corresponding domain Error.
inline NetworkFile parse_network(std::string_view text)
{
    json doc;
    try {
        doc = json::parse(text.begin(), text.end());
    } catch (const json::parse_error &e) {
        const auto p = detail::position_of(text, e.byte > 0 ? e.byte - 1 : 0);
        std::string what = e.what();
        if (auto cut = what.find("] "); cut != std::string::npos) {
            what = what.substr(cut + 2);
        }
        throw InputError(ErrorCode::ParseError, what, p.line, p.column);
    }
    const detail::SchemaReader r(text);
    r.expect_object(doc, "");
    r.allow_keys(doc, "", {"name", "cells", "adjacency", "inflow_cells", "outflow_cells", "inflow", "policy"});

    std::string name;
    if (doc.contains("name")) {
        name = r.string_at(doc, "", "name");
    }

    const auto &cells = r.member(doc, "", "cells");
    r.expect_array(cells, "/cells");
    if (cells.empty()) {
        r.fail("/cells", "network needs at least one cell");
    }
    const auto n = cells.size();
    const auto &policy_json = r.member(doc, "", "policy");
    r.expect_object(policy_json, "/policy");
    const bool dual = policy_json.contains("kind") && policy_json.at("kind") == "dual_ascent";

    std::vector<std::optional<DemandFunction>> demands(n);
    std::vector<std::optional<SupplyFunction>> supplies(n);
    std::vector<bool> seen(n, false);
    std::size_t with_supply = 0;
    std::size_t with_demand = 0;
    for (std::size_t c = 0; c < n; ++c) {
        const auto ptr = "/cells/" + std::to_string(c);
        r.expect_object(cells[c], ptr);
        r.allow_keys(cells[c], ptr, {"id", "demand", "supply"});
        const auto i = r.cell(r.member(cells[c], ptr, "id"), ptr + "/id", n);
        if (seen[i]) {
            r.fail(ptr + "/id", "cell id " + std::to_string(i + 1) + " listed twice");
        }
        seen[i] = true;
        if (cells[c].contains("demand")) {
            demands[i] = detail::read_demand(r, cells[c].at("demand"), ptr + "/demand");
            ++with_demand;
        } else if (!dual) {
            r.fail(ptr, "missing key \"demand\"");
        }
        if (cells[c].contains("supply")) {
            supplies[i] = detail::read_supply(r, cells[c].at("supply"), ptr + "/supply");
            ++with_supply;
        }
    }
    if (with_supply != 0 && with_supply != n) {
        r.fail("/cells", "supply functions must be given for every cell or for none");
    }
    if (with_demand != 0 && with_demand != n) {
        r.fail("/cells", "demand functions must be given for every cell or for none");
    }

    std::vector<CellPair> adjacency;
    if (doc.contains("adjacency")) {
        const auto &arr = doc.at("adjacency");
        r.expect_array(arr, "/adjacency");
        for (std::size_t e = 0; e < arr.size(); ++e) {
            adjacency.push_back(detail::read_pair(r, arr[e], "/adjacency/" + std::to_string(e), n, 2));
        }
    }
    const auto inflow_cells = detail::read_cells(r, doc, "inflow_cells", n);
    const auto outflow_cells = detail::read_cells(r, doc, "outflow_cells", n);

    Vector inflow = Vector::Zero(static_cast<Eigen::Index>(n));
    if (doc.contains("inflow")) {
        const auto &obj = doc.at("inflow");
        r.expect_object(obj, "/inflow");
        for (const auto &[key, value] : obj.items()) {
            const auto ptr = "/inflow/" + detail::escape_pointer_token(key);
            std::size_t used = 0;
            long long id = 0;
            try {
                id = std::stoll(key, &used);
            } catch (const std::exception &) {
                used = 0;
            }
            if (used != key.size() || id < 1 || static_cast<std::size_t>(id) > n) {
                r.fail(ptr, "inflow key \"" + key + "\" is not a cell id in 1.." + std::to_string(n));
            }
            inflow[static_cast<Eigen::Index>(id - 1)] = r.number(value, ptr);
        }
    }

    Topology topology(n, std::move(adjacency), inflow_cells, outflow_cells);
    const Policy policy = detail::read_policy(r, policy_json, topology);

    std::vector<DemandFunction> demand_list;
    if (with_demand == n) {
        for (auto &d : demands) {
            demand_list.push_back(*d);
        }
    }
    std::optional<std::vector<SupplyFunction>> supply_list;
    if (with_supply == n) {
        supply_list.emplace();
        for (auto &s : supplies) {
            supply_list->push_back(*s);
        }
    }
    return {std::move(name),
            Model(std::move(topology), std::move(demand_list), std::move(supply_list), policy, std::move(inflow))};
}

inline NetworkFile load_network(const std::string &path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw InputError(ErrorCode::IoError, "cannot open " + path, 0, 0);
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_network(buf.str());
}

// ---------------------------------------------------------------------------
// Serialization. Cell ids are 1-based; doubles use the shortest decimal form
// that reads back to the same value.
// ---------------------------------------------------------------------------

inline json number_or_null(double v)
{
    return std::isfinite(v) ? json(v) : json(nullptr);
}

inline json to_json(const Vector &v)
{
    json arr = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        arr.push_back(number_or_null(v[i]));
    }
    return arr;
}

inline json to_json(const Matrix &M)
{
    json rows = json::array();
    for (Eigen::Index i = 0; i < M.rows(); ++i) {
        rows.push_back(to_json(Vector(M.row(i).transpose())));
    }
    return rows;
}

inline json cells_to_json(const std::vector<CellIndex> &cells)
{
    json arr = json::array();
    for (auto c : cells) {
        arr.push_back(c + 1);
    }
    return arr;
}

inline json to_json(const DemandFunction &f)
{
    return std::visit(detail::overloaded{
                          [](const LinearDemand &d) { return json{{"family", "linear"}, {"a", d.slope}}; },
                          [](const SaturatingExpDemand &d) {
                              return json{{"family", "saturating_exp"}, {"C", d.capacity}, {"lambda", d.rate}};
                          },
                          [](const PiecewiseLinearCapDemand &d) {
                              return json{{"family", "piecewise_linear_cap"}, {"a", d.slope}, {"C", d.capacity}};
                          },
                      },
                      f.family());
}

inline json to_json(const SupplyFunction &f)
{
    return std::visit(detail::overloaded{
                          [](const ConstantSupply &s) { return json{{"family", "constant"}, {"s", s.level}}; },
                          [](const AffineDecreasingSupply &s) {
                              return json{{"family", "affine_decreasing"}, {"s", s.level}, {"b", s.slope}};
                          },
                          [](const UnlimitedSupply &) { return json{{"family", "unlimited"}}; },
                      },
                      f.family());
}

namespace detail {

inline json routing_to_json(const Matrix &R)
{
    json arr = json::array();
    for (Eigen::Index i = 0; i < R.rows(); ++i) {
        for (Eigen::Index j = 0; j < R.cols(); ++j) {
            if (R(i, j) != 0.0) {
                arr.push_back(json::array({i + 1, j + 1, R(i, j)}));
            }
        }
    }
    return arr;
}

inline double quadratic_coefficient(const ConvexCost &c)
{
    return std::get<QuadraticCost>(c.family()).c;
}

} // namespace detail

inline json to_json(const Policy &p)
{
    return std::visit(
        detail::overloaded{
            [](const ConstantRoutingPolicy &q) {
                return json{{"kind", "constant"}, {"routing", detail::routing_to_json(q.routing)}};
            },
            [](const FifoPolicy &q) { return json{{"kind", "fifo"}, {"routing", detail::routing_to_json(q.routing)}}; },
            [](const NonFifoPolicy &q) {
                return json{{"kind", "nonfifo"}, {"routing", detail::routing_to_json(q.routing)}};
            },
            [](const LogitRoutingPolicy &q) {
                return json{{"kind", "logit"}, {"alpha", to_json(q.params.alpha)}, {"beta", to_json(q.params.beta)}};
            },
            [](const LogitControlPolicy &q) {
                return json{
                    {"kind", "logit_control"}, {"alpha", to_json(q.params.alpha)}, {"beta", to_json(q.params.beta)}};
            },
            [](const DualAscentPolicy &q) {
                json links = json::array(), outs = json::array();
                for (const auto &[pair, cost] : q.costs.links) {
                    links.push_back(
                        json::array({pair.first + 1, pair.second + 1, detail::quadratic_coefficient(cost)}));
                }
                for (const auto &[k, cost] : q.costs.outflows) {
                    outs.push_back(json::array({k + 1, detail::quadratic_coefficient(cost)}));
                }
                return json{{"kind", "dual_ascent"}, {"link_costs", links}, {"outflow_costs", outs}};
            },
        },
        p);
}

inline json to_json(const NetworkFile &file)
{
    const auto &m = file.model;
    json doc;
    if (!file.name.empty()) {
        doc["name"] = file.name;
    }
    json cells = json::array();
    for (std::size_t i = 0; i < m.size(); ++i) {
        json cell{{"id", i + 1}};
        if (!m.demands().empty()) {
            cell["demand"] = to_json(m.demands()[i]);
        }
        if (m.has_supplies()) {
            cell["supply"] = to_json((*m.supplies())[i]);
        }
        cells.push_back(std::move(cell));
    }
    doc["cells"] = std::move(cells);
    json adjacency = json::array();
    for (const auto &[i, j] : m.topology().adjacency()) {
        adjacency.push_back(json::array({i + 1, j + 1}));
    }
    doc["adjacency"] = std::move(adjacency);
    doc["inflow_cells"] = cells_to_json(m.topology().inflow_cells());
    doc["outflow_cells"] = cells_to_json(m.topology().outflow_cells());
    json inflow = json::object();
    for (Eigen::Index i = 0; i < m.inflow().size(); ++i) {
        if (m.inflow()[i] != 0.0) {
            inflow[std::to_string(i + 1)] = m.inflow()[i];
        }
    }
    doc["inflow"] = std::move(inflow);
    doc["policy"] = to_json(m.policy());
    return doc;
}

inline std::string serialize_network(const NetworkFile &file)
{
    return to_json(file).dump(2) + "\n";
}

// Reports -------------------------------------------------------------------

inline json to_json(const Flows &f)
{
    json links = json::array();
    for (Eigen::Index i = 0; i < f.F.rows(); ++i) {
        for (Eigen::Index j = 0; j < f.F.cols(); ++j) {
            if (f.F(i, j) != 0.0) {
                links.push_back(json::array({i + 1, j + 1, f.F(i, j)}));
            }
        }
    }
    return json{{"F", links}, {"w", to_json(f.w)}};
}

inline json to_json(const EquilibriumResult &r)
{
    return json{{"method", r.method},
                {"x", to_json(r.state)},
                {"z", to_json(r.outflow)},
                {"residual", r.residual},
                {"strictly_positive", r.strictly_positive},
                {"inflow_connected", r.inflow_connected}};
}

inline json to_json(const InstabilityReport &r)
{
    return json{{"verdict", to_string(r.verdict)}, {"final_time", r.final_time},  {"final_state", to_json(r.final_state)},
                {"rate_norm", r.rate_norm},        {"tail_slope", r.tail_slope},  {"max_norm", r.max_norm},
                {"max_clamp", r.max_clamp}};
}

inline json to_json(const MonotoneReport &r)
{
    return json{{"samples", r.samples},
                {"passed", r.passed},
                {"pass_rate", r.pass_rate},
                {"worst_violation", r.worst_violation},
                {"worst_point", to_json(r.worst_point)},
                {"draws", r.draws},
                {"seed", r.seed},
                {"box", json::array({r.box_lo, r.box_hi})}};
}

inline json to_json(const JacobianReport &r)
{
    return json{{"point", to_json(r.point)},
                {"jacobian", to_json(r.jacobian)},
                {"is_metzler", r.is_metzler},
                {"transpose_is_compartmental", r.transpose_is_compartmental},
                {"is_outflow_connected_jacobian", r.is_outflow_connected_jacobian},
                {"link_threshold", r.link_threshold},
                {"worst_violation", r.worst_violation}};
}

inline json to_json(const MinCutResult &r)
{
    return json{{"value", r.value}, {"cut", cells_to_json(r.cut)}, {"trapped", cells_to_json(r.trapped)}};
}

inline json to_json(const Perturbation &p)
{
    return json{{"inflow_delta", to_json(p.inflow_delta)}, {"demand_scale", to_json(p.demand_scale)}};
}

inline json to_json(const FormulaMargin &f)
{
    return json{{"value", f.value},
                {"formula", f.formula},
                {"argmin", cells_to_json(f.argmin)},
                {"z", to_json(f.outflow)},
                {"nominal_stable", f.nominal_stable},
                {"notes", f.notes}};
}

inline json to_json(const MarginReport &r)
{
    json doc;
    doc["formula"] = r.formula ? to_json(*r.formula) : json(nullptr);
    doc["min_cut"] = r.min_cut ? to_json(*r.min_cut) : json(nullptr);
    doc["family"] = json{{"kind", to_string(r.family.kind)}, {"cells", cells_to_json(r.family.cells)}};
    doc["bracket"] = json::array({number_or_null(r.lo), number_or_null(r.hi)});
    doc["tol"] = r.tol;
    doc["complete"] = r.complete;
    doc["inconclusive_delta"] = r.inconclusive_delta ? json(*r.inconclusive_delta) : json(nullptr);
    doc["witness"] = r.witness ? to_json(*r.witness) : json(nullptr);
    json probes = json::array();
    for (const auto &p : r.probes) {
        probes.push_back(json{{"delta", p.delta},
                              {"verdict", to_string(p.verdict)},
                              {"from_zero", to_string(p.from_zero)},
                              {"from_equilibrium", p.from_equilibrium ? json(to_string(*p.from_equilibrium))
                                                                      : json(nullptr)},
                              {"horizon", p.horizon}});
    }
    doc["probes"] = std::move(probes);
    doc["notes"] = r.notes;
    return doc;
}

inline json to_json(const DualAscentSolution &s)
{
    return json{{"x", to_json(s.multipliers)},
                {"flows", to_json(s.flows)},
                {"conservation_residual", s.conservation_residual},
                {"time", s.time}};
}

} // namespace flownet
