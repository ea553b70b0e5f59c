#pragma once

#include <algorithm>
#include <cstddef>
#include <deque>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "error.hpp"
#include "types.hpp"

namespace flownet {

/// Network topology: cells, adjacency pairs, inflow-enabled cells and
/// outflow-enabled cells. Immutable once constructed.
class Topology
{
public:
    Topology() = default;

    Topology(std::size_t cells, std::vector<CellPair> adjacency, std::vector<CellIndex> inflow_cells,
             std::vector<CellIndex> outflow_cells)
        : n_(cells), adjacency_(std::move(adjacency)), inflow_(std::move(inflow_cells)),
          outflow_(std::move(outflow_cells))
    {
        if (n_ == 0) {
            throw Error(ErrorCode::IndexOutOfRange, "topology must contain at least one cell");
        }
        auto check = [this](CellIndex i, const char *what) {
            if (i >= n_) {
                throw Error(ErrorCode::IndexOutOfRange, std::string(what) + " index " + std::to_string(i + 1)
                                                            + " outside 1.." + std::to_string(n_));
            }
        };
        for (const auto &[i, j] : adjacency_) {
            check(i, "adjacency");
            check(j, "adjacency");
            if (i == j) {
                throw Error(ErrorCode::SelfLoop, "cell " + std::to_string(i + 1) + " is adjacent to itself");
            }
        }
        std::sort(adjacency_.begin(), adjacency_.end());
        if (auto dup = std::adjacent_find(adjacency_.begin(), adjacency_.end()); dup != adjacency_.end()) {
            throw Error(ErrorCode::DuplicateAdjacency, "pair (" + std::to_string(dup->first + 1) + ","
                                                           + std::to_string(dup->second + 1) + ") listed twice");
        }
        for (auto i : inflow_) {
            check(i, "inflow cell");
        }
        for (auto i : outflow_) {
            check(i, "outflow cell");
        }
        normalize(inflow_);
        normalize(outflow_);

        is_inflow_.assign(n_, false);
        is_outflow_.assign(n_, false);
        for (auto i : inflow_) {
            is_inflow_[i] = true;
        }
        for (auto i : outflow_) {
            is_outflow_[i] = true;
        }

        out_.assign(n_, {});
        in_.assign(n_, {});
        for (const auto &[i, j] : adjacency_) {
            out_[i].push_back(j);
            in_[j].push_back(i);
        }
        for (auto &v : in_) {
            std::sort(v.begin(), v.end());
        }
    }

    std::size_t size() const noexcept
    {
        return n_;
    }

    /// Sorted adjacency pairs.
    const std::vector<CellPair> &adjacency() const noexcept
    {
        return adjacency_;
    }

    const std::vector<CellIndex> &inflow_cells() const noexcept
    {
        return inflow_;
    }

    const std::vector<CellIndex> &outflow_cells() const noexcept
    {
        return outflow_;
    }

    bool is_inflow_cell(CellIndex i) const
    {
        return is_inflow_.at(i);
    }

    bool is_outflow_cell(CellIndex i) const
    {
        return is_outflow_.at(i);
    }

    bool adjacent(CellIndex i, CellIndex j) const
    {
        return std::binary_search(adjacency_.begin(), adjacency_.end(), CellPair{i, j});
    }

    /// Out-neighborhood {k : (i,k) adjacent}, sorted.
    std::span<const CellIndex> out_neighbors(CellIndex i) const
    {
        return out_.at(i);
    }

    std::span<const CellIndex> in_neighbors(CellIndex i) const
    {
        return in_.at(i);
    }

    friend bool operator==(const Topology &a, const Topology &b)
    {
        return a.n_ == b.n_ && a.adjacency_ == b.adjacency_ && a.inflow_ == b.inflow_ && a.outflow_ == b.outflow_;
    }

private:
    static void normalize(std::vector<CellIndex> &v)
    {
        std::sort(v.begin(), v.end());
        v.erase(std::unique(v.begin(), v.end()), v.end());
    }

    std::size_t n_ = 0;
    std::vector<CellPair> adjacency_;
    std::vector<CellIndex> inflow_;
    std::vector<CellIndex> outflow_;
    std::vector<bool> is_inflow_;
    std::vector<bool> is_outflow_;
    std::vector<std::vector<CellIndex>> out_;
    std::vector<std::vector<CellIndex>> in_;
};

/// Road-style digraph whose links become cells. Node 0 is the external
/// environment.
struct NodeLinkDigraph {
    std::size_t node_count = 0;
    std::vector<std::pair<std::size_t, std::size_t>> links;
};

/// Cells are the links of `g`, in order. Cell i feeds cell j when the head
/// of link i is the tail of link j and that node is not the environment.
inline Topology line_digraph(const NodeLinkDigraph &g)
{
    if (g.links.empty()) {
        throw Error(ErrorCode::EmptyDigraph, "digraph has no links");
    }
    std::set<std::pair<std::size_t, std::size_t>> seen;
    for (const auto &[tail, head] : g.links) {
        if (tail >= g.node_count || head >= g.node_count) {
            throw Error(ErrorCode::IndexOutOfRange, "link endpoint outside node range");
        }
        if (tail == head) {
            throw Error(ErrorCode::SelfLoop, "link (" + std::to_string(tail) + "," + std::to_string(head)
                                                 + ") would make a cell adjacent to itself");
        }
        if (!seen.insert({tail, head}).second) {
            throw Error(ErrorCode::DuplicateLink,
                        "link (" + std::to_string(tail) + "," + std::to_string(head) + ") listed twice");
        }
    }

    const auto m = g.links.size();
    std::vector<CellPair> adjacency;
    std::vector<CellIndex> on_ramps, off_ramps;
    for (CellIndex i = 0; i < m; ++i) {
        const auto [tail_i, head_i] = g.links[i];
        if (tail_i == 0) {
            on_ramps.push_back(i);
        }
        if (head_i == 0) {
            off_ramps.push_back(i);
            continue;
        }
        for (CellIndex j = 0; j < m; ++j) {
            if (j != i && g.links[j].first == head_i) {
                adjacency.emplace_back(i, j);
            }
        }
    }
    return Topology(m, std::move(adjacency), std::move(on_ramps), std::move(off_ramps));
}

/// Per-cell connectivity flags and their conjunction.
struct Connectivity {
    std::vector<bool> cells;
    bool all = false;
};

namespace detail {

// Reverse search from the outflow cells, skipping cells marked removed.
inline std::vector<bool> reaches_outflow(const Topology &t, const std::vector<bool> &removed)
{
    const auto n = t.size();
    std::vector<bool> reached(n, false);
    std::deque<CellIndex> queue;
    for (auto s : t.outflow_cells()) {
        if (!removed[s]) {
            reached[s] = true;
            queue.push_back(s);
        }
    }
    while (!queue.empty()) {
        const auto j = queue.front();
        queue.pop_front();
        for (auto i : t.in_neighbors(j)) {
            if (!removed[i] && !reached[i]) {
                reached[i] = true;
                queue.push_back(i);
            }
        }
    }
    return reached;
}

inline Connectivity make_connectivity(std::vector<bool> cells)
{
    const bool all = std::all_of(cells.begin(), cells.end(), [](bool b) { return b; });
    return {std::move(cells), all};
}

} // namespace detail

/// Cell i is flagged when it is an outflow cell or reaches one by a path.
inline Connectivity outflow_connectivity(const Topology &t)
{
    return detail::make_connectivity(detail::reaches_outflow(t, std::vector<bool>(t.size(), false)));
}

/// Cell i is flagged when it is an inflow cell or is reachable from one.
inline Connectivity inflow_connectivity(const Topology &t)
{
    const auto n = t.size();
    std::vector<bool> reached(n, false);
    std::deque<CellIndex> queue;
    for (auto r : t.inflow_cells()) {
        reached[r] = true;
        queue.push_back(r);
    }
    while (!queue.empty()) {
        const auto i = queue.front();
        queue.pop_front();
        for (auto j : t.out_neighbors(i)) {
            if (!reached[j]) {
                reached[j] = true;
                queue.push_back(j);
            }
        }
    }
    return detail::make_connectivity(std::move(reached));
}

/// J together with every cell that can no longer reach an outflow cell once
/// the cells of J (and their incident pairs) are removed. Sorted.
inline std::vector<CellIndex> trapped_set(const Topology &t, std::span<const CellIndex> removed_cells)
{
    std::vector<bool> removed(t.size(), false);
    for (auto j : removed_cells) {
        if (j >= t.size()) {
            throw Error(ErrorCode::IndexOutOfRange, "cut cell index outside topology");
        }
        removed[j] = true;
    }
    const auto reached = detail::reaches_outflow(t, removed);
    std::vector<CellIndex> trapped;
    for (CellIndex i = 0; i < t.size(); ++i) {
        if (removed[i] || !reached[i]) {
            trapped.push_back(i);
        }
    }
    return trapped;
}

/// Structural properties shared by every line-digraph topology.
struct LineDigraphProperties {
    bool inflow_cells_are_sources = false;
    bool outflow_cells_are_sinks = false;
    bool neighborhoods_coincide_or_disjoint = false;
    bool acyclic = false;

    bool all() const noexcept
    {
        return inflow_cells_are_sources && outflow_cells_are_sinks && neighborhoods_coincide_or_disjoint && acyclic;
    }
};

inline bool is_acyclic(const Topology &t)
{
    // Kahn's algorithm.
    const auto n = t.size();
    std::vector<std::size_t> indegree(n, 0);
    for (const auto &[i, j] : t.adjacency()) {
        ++indegree[j];
    }
    std::deque<CellIndex> ready;
    for (CellIndex i = 0; i < n; ++i) {
        if (indegree[i] == 0) {
            ready.push_back(i);
        }
    }
    std::size_t visited = 0;
    while (!ready.empty()) {
        const auto i = ready.front();
        ready.pop_front();
        ++visited;
        for (auto j : t.out_neighbors(i)) {
            if (--indegree[j] == 0) {
                ready.push_back(j);
            }
        }
    }
    return visited == n;
}

inline LineDigraphProperties line_digraph_properties(const Topology &t)
{
    LineDigraphProperties p;
    p.inflow_cells_are_sources = std::all_of(t.inflow_cells().begin(), t.inflow_cells().end(),
                                             [&](CellIndex r) { return t.in_neighbors(r).empty(); });
    p.outflow_cells_are_sinks = std::all_of(t.outflow_cells().begin(), t.outflow_cells().end(),
                                            [&](CellIndex s) { return t.out_neighbors(s).empty(); });
    p.neighborhoods_coincide_or_disjoint = true;
    for (CellIndex i = 0; i < t.size() && p.neighborhoods_coincide_or_disjoint; ++i) {
        const auto a = t.out_neighbors(i);
        for (CellIndex j = i + 1; j < t.size(); ++j) {
            const auto b = t.out_neighbors(j);
            const bool equal = std::equal(a.begin(), a.end(), b.begin(), b.end());
            std::vector<CellIndex> common;
            std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(common));
            if (!equal && !common.empty()) {
                p.neighborhoods_coincide_or_disjoint = false;
                break;
            }
        }
    }
    p.acyclic = is_acyclic(t);
    return p;
}

} // namespace flownet
