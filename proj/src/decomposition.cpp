#include "chainnet/decomposition.hpp"

#include "chainnet/errors.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>

namespace chainnet {

namespace {

using nlohmann::json;

json walk_to_json(const std::vector<TfnNode>& nodes, const Rational& volume) {
    json j;
    j["nodes"] = json::array();
    for (const TfnNode& node : nodes)
        j["nodes"].push_back(
            {{"agent", node.agent.value}, {"kind", node_kind_name(node.kind)}});
    j["t_volume"] = format_rational(volume);
    return j;
}

}  // namespace

ResidualFlow::ResidualFlow(const TradeFlowNetwork& network) {
    nodes_ = network.nodes;
    std::sort(nodes_.begin(), nodes_.end());
    nodes_.erase(std::unique(nodes_.begin(), nodes_.end()), nodes_.end());

    adjacency_.resize(nodes_.size());
    for (const TfnEdge& edge : network.edges) {
        const int from = index_of(edge.from);
        const int to = index_of(edge.to);
        if (from < 0 || to < 0)
            throw InputError("edge endpoint missing from node list: " +
                             node_label(edge.from) + "->" + node_label(edge.to));
        edge_ends_.push_back({from, to});
        residuals_.push_back(edge.capacity);
        adjacency_[from].push_back(edge_ends_.size() - 1);
    }
    for (auto& list : adjacency_)
        std::sort(list.begin(), list.end(), [this](size_t a, size_t b) {
            return edge_ends_[a].second < edge_ends_[b].second;
        });
}

int ResidualFlow::index_of(const TfnNode& node) const {
    auto it = std::lower_bound(nodes_.begin(), nodes_.end(), node);
    if (it == nodes_.end() || *it != node) return -1;
    return static_cast<int>(it - nodes_.begin());
}

std::optional<std::vector<TfnNode>> ResidualFlow::find_st_path() const {
    const int source = index_of(source_node());
    const int sink = index_of(sink_node());
    if (source < 0 || sink < 0) return std::nullopt;

    std::vector<bool> visited(nodes_.size(), false);
    std::vector<std::pair<int, size_t>> frames{{source, 0}};
    visited[source] = true;
    while (!frames.empty()) {
        auto& [node, next] = frames.back();
        if (next == adjacency_[node].size()) {
            frames.pop_back();
            continue;
        }
        const size_t edge = adjacency_[node][next++];
        if (residuals_[edge] <= 0) continue;
        const int to = edge_ends_[edge].second;
        if (visited[to]) continue;
        if (to == sink) {
            std::vector<TfnNode> path;
            path.reserve(frames.size() + 1);
            for (const auto& frame : frames) path.push_back(nodes_[frame.first]);
            path.push_back(nodes_[sink]);
            return path;
        }
        visited[to] = true;
        frames.push_back({to, 0});
    }
    return std::nullopt;
}

std::optional<std::vector<TfnNode>> ResidualFlow::find_cycle() const {
    enum Colour : unsigned char { white, grey, black };
    std::vector<Colour> colour(nodes_.size(), white);

    for (size_t root = 0; root < nodes_.size(); ++root) {
        if (colour[root] != white) continue;
        std::vector<std::pair<int, size_t>> frames{{static_cast<int>(root), 0}};
        std::vector<int> path{static_cast<int>(root)};
        colour[root] = grey;
        while (!frames.empty()) {
            auto& [node, next] = frames.back();
            if (next == adjacency_[node].size()) {
                colour[node] = black;
                frames.pop_back();
                path.pop_back();
                continue;
            }
            const size_t edge = adjacency_[node][next++];
            if (residuals_[edge] <= 0) continue;
            const int to = edge_ends_[edge].second;
            if (colour[to] == grey) {
                auto start = std::find(path.begin(), path.end(), to);
                std::vector<TfnNode> walk;
                for (auto it = start; it != path.end(); ++it) walk.push_back(nodes_[*it]);
                walk.push_back(nodes_[to]);
                return walk;
            }
            if (colour[to] == white) {
                colour[to] = grey;
                frames.push_back({to, 0});
                path.push_back(to);
            }
        }
    }
    return std::nullopt;
}

Rational ResidualFlow::extract(const std::vector<TfnNode>& walk) {
    if (walk.size() < 2) throw InputError("walk must contain at least one edge");

    std::vector<size_t> edges;
    for (size_t i = 0; i + 1 < walk.size(); ++i) {
        const int from = index_of(walk[i]);
        const int to = index_of(walk[i + 1]);
        if (from < 0 || to < 0)
            throw InputError("walk references unknown node");
        size_t found = edge_ends_.size();
        for (size_t edge : adjacency_[from])
            if (edge_ends_[edge].second == to && residuals_[edge] > 0) {
                found = edge;
                break;
            }
        if (found == edge_ends_.size())
            throw InputError("walk does not follow positive-residual edges: " +
                             node_label(walk[i]) + "->" + node_label(walk[i + 1]));
        edges.push_back(found);
    }

    Rational volume = residuals_[edges.front()];
    for (size_t edge : edges) volume = std::min(volume, residuals_[edge]);
    for (size_t edge : edges) residuals_[edge] -= volume;
    return volume;
}

Rational ResidualFlow::residual(const TfnNode& from, const TfnNode& to) const {
    const int from_id = index_of(from);
    const int to_id = index_of(to);
    if (from_id < 0 || to_id < 0) return Rational(0);
    for (size_t edge : adjacency_[from_id])
        if (edge_ends_[edge].second == to_id) return residuals_[edge];
    return Rational(0);
}

bool ResidualFlow::exhausted() const {
    return std::all_of(residuals_.begin(), residuals_.end(),
                       [](const Rational& r) { return r == 0; });
}

Decomposition decompose(const TradeFlowNetwork& network) {
    ResidualFlow residual(network);
    Decomposition result;

    while (auto path = residual.find_st_path()) {
        const Rational volume = residual.extract(*path);
        result.chains.push_back(
            {std::vector<TfnNode>(path->begin() + 1, path->end() - 1), volume});
    }
    // With no Source->Sink path left, every excess edge must be saturated;
    // the remaining residual is balanced flow through BT nodes.
    for (const TfnEdge& edge : network.edges)
        if (edge.from.kind == NodeKind::Source || edge.to.kind == NodeKind::Sink)
            if (residual.residual(edge.from, edge.to) != 0)
                throw ValidationError("chain phase left excess flow on " +
                                      node_label(edge.from) + "->" + node_label(edge.to));

    while (auto walk = residual.find_cycle()) {
        const Rational volume = residual.extract(*walk);
        result.cycles.push_back({*walk, volume});
    }
    if (!residual.exhausted())
        throw ValidationError("decomposition terminated with residual flow");
    return result;
}

std::string decomposition_to_json(const Decomposition& decomposition) {
    json doc;
    doc["chains"] = json::array();
    for (const Chain& chain : decomposition.chains)
        doc["chains"].push_back(walk_to_json(chain.nodes, chain.t_volume));
    doc["cycles"] = json::array();
    for (const Cycle& cycle : decomposition.cycles)
        doc["cycles"].push_back(walk_to_json(cycle.nodes, cycle.t_volume));
    return doc.dump(2) + "\n";
}

}  // namespace chainnet
