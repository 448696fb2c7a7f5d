#include "mtrl/gwr.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "nlohmann/json.hpp"

namespace mtrl {

using json = nlohmann::json;

void GwrParams::validate() const {
    require(eps_neighbor > 0.0f && eps_neighbor < eps_bmu && eps_bmu < 1.0f,
            "gwr params: need 0 < eps_neighbor < eps_bmu < 1");
    require(activity_threshold > 0.0f && activity_threshold <= 1.0f,
            "gwr params: activity threshold must be in (0,1]");
    require(max_edge_age >= 1, "gwr params: max edge age must be >= 1");
    require(h0 > 0.0f && h0 <= 1.0f, "gwr params: h0 must be in (0,1]");
    require(alpha_bmu > 0.0f && alpha_neighbor > 0.0f && tau_bmu > 0.0f &&
                tau_neighbor > 0.0f,
            "gwr params: habituation constants must be positive");
}

GwrParams gwr_params_action() {
    GwrParams p;
    p.activity_threshold = 0.7f;
    p.habituation_threshold = 0.2f;
    p.eps_bmu = 0.1f;
    p.eps_neighbor = 0.05f;
    p.h0 = 1.0f;
    p.alpha_bmu = 1.05f;
    p.alpha_neighbor = 1.05f;
    p.tau_bmu = 0.5f;
    p.tau_neighbor = 2.0f;
    p.max_edge_age = 80;
    return p;
}

GwrParams gwr_params_intention() {
    GwrParams p;
    p.activity_threshold = 0.9f;
    p.habituation_threshold = 0.3f;
    p.eps_bmu = 0.1f;
    p.eps_neighbor = 0.01f;
    p.h0 = 1.0f;
    p.alpha_bmu = 1.05f;
    p.alpha_neighbor = 1.05f;
    p.tau_bmu = 1.0f;
    p.tau_neighbor = 2.7f;
    p.max_edge_age = 100;
    return p;
}

GwrParams gwr_params_behavior() {
    GwrParams p;
    p.activity_threshold = 0.8f;
    p.habituation_threshold = 0.15f;
    p.eps_bmu = 0.1f;
    p.eps_neighbor = 0.01f;
    p.h0 = 1.0f;
    p.alpha_bmu = 1.05f;
    p.alpha_neighbor = 1.05f;
    p.tau_bmu = 3.3f;
    p.tau_neighbor = 14.3f;
    p.max_edge_age = 90;
    return p;
}

GwrNetwork::GwrNetwork(int dim, GwrParams params, uint64_t seed,
                       std::optional<std::pair<float, float>> init_range)
    : dim_(dim), params_(params) {
    require(dim >= 1, "gwr: input dimension must be >= 1");
    params_.validate();
    RandomStream rng(seed, "gwr-init");
    float lo = 0.0f, hi = 1.0f;
    if (init_range) {
        lo = init_range->first;
        hi = init_range->second;
        require(hi > lo, "gwr: bad init range");
    } else {
        pending_bootstrap_ = true;  // remapped around the first stimulus
    }
    for (int k = 0; k < 2; ++k) {
        Vecf w(dim);
        for (int i = 0; i < dim; ++i) w(i) = rng.uniformf(lo, hi);
        int id = insert_node(std::move(w));
        nodes_[id].habituation = params_.h0;
    }
}

const GwrNode& GwrNetwork::node(int id) const {
    auto it = nodes_.find(id);
    if (it == nodes_.end()) fail("gwr: unknown node id " + std::to_string(id));
    return it->second;
}

size_t GwrNetwork::edge_count() const {
    size_t twice = 0;
    for (const auto& [id, n] : nodes_) twice += n.edges.size();
    return twice / 2;
}

void GwrNetwork::bootstrap_if_needed(const Vecf& stimulus) {
    if (!pending_bootstrap_) return;
    pending_bootstrap_ = false;
    // placeholder weights are uniform in [0,1); shift that box onto
    // stimulus +- 0.5 per dimension
    for (auto& [id, n] : nodes_)
        n.w = stimulus.array() - 0.5f + n.w.array();
}

GwrNetwork::BmuResult GwrNetwork::find_bmus(const Vecf& stimulus) const {
    require(stimulus.size() == dim_, "gwr: stimulus width mismatch");
    require(stimulus.allFinite(), "gwr: non-finite stimulus");
    require(nodes_.size() >= 2, "gwr: need at least two nodes");
    BmuResult r;
    r.best_dist = r.second_dist = std::numeric_limits<float>::infinity();
    for (const auto& [id, n] : nodes_) {  // ascending id, so ties keep the lower id
        float d = (n.w - stimulus).norm();
        if (d < r.best_dist) {
            r.second = r.best;
            r.second_dist = r.best_dist;
            r.best = id;
            r.best_dist = d;
        } else if (d < r.second_dist) {
            r.second = id;
            r.second_dist = d;
        }
    }
    return r;
}

float GwrNetwork::activity(float distance) {
    require(distance >= 0.0f, "gwr: negative distance");
    return std::exp(-distance);
}

void GwrNetwork::add_edge(int a, int b) {
    nodes_.at(a).edges[b] = 0;
    nodes_.at(b).edges[a] = 0;
}

void GwrNetwork::remove_edge(int a, int b) {
    nodes_.at(a).edges.erase(b);
    nodes_.at(b).edges.erase(a);
}

int GwrNetwork::insert_node(Vecf w) {
    GwrNode n;
    n.id = next_id_++;
    n.w = std::move(w);
    n.habituation = params_.h0;
    int id = n.id;
    nodes_.emplace(id, std::move(n));
    return id;
}

float GwrNetwork::habituation_curve(float h0, float alpha, float tau, int t) {
    return h0 - (1.0f - std::exp(-alpha * float(t) / tau)) / alpha;
}

AdaptReport GwrNetwork::adapt(const Vecf& stimulus) {
    require(stimulus.size() == dim_, "gwr: stimulus width mismatch");
    require(stimulus.allFinite(), "gwr: non-finite stimulus");
    bootstrap_if_needed(stimulus);

    AdaptReport rep;

    // step 1: best pair, connect them with a fresh edge
    BmuResult bm = find_bmus(stimulus);
    rep.bmu = bm.best;
    rep.second = bm.second;
    rep.distance = bm.best_dist;
    add_edge(bm.best, bm.second);

    // step 2: activity of the best match
    rep.activity = activity(bm.best_dist);

    GwrNode& c = nodes_.at(bm.best);

    if (rep.activity < params_.activity_threshold &&
        c.habituation < params_.habituation_threshold) {
        // step 3: new node halfway between the best match and the stimulus,
        // wired to both winners; the direct winner edge is removed. The move
        // and habituation steps are skipped for this stimulus.
        Vecf w = (c.w + stimulus) * 0.5f;
        remove_edge(bm.best, bm.second);
        int v = insert_node(std::move(w));
        add_edge(v, bm.best);
        add_edge(v, bm.second);
        rep.inserted = true;
        rep.inserted_id = v;
    } else {
        // step 4: move the best match and its neighbors towards the stimulus
        c.w += params_.eps_bmu * c.habituation * (stimulus - c.w);
        for (auto& [k, age] : c.edges) {
            GwrNode& nk = nodes_.at(k);
            nk.w += params_.eps_neighbor * nk.habituation * (stimulus - nk.w);
        }
        // step 5: habituation decreases with firing count, never increases
        c.bmu_count += 1;
        float cand = habituation_curve(params_.h0, params_.alpha_bmu, params_.tau_bmu,
                                       c.bmu_count);
        c.habituation = std::clamp(std::min(c.habituation, cand), 0.0f, 1.0f);
        for (auto& [k, age] : c.edges) {
            GwrNode& nk = nodes_.at(k);
            nk.neighbor_count += 1;
            float ck = habituation_curve(params_.h0, params_.alpha_neighbor,
                                         params_.tau_neighbor, nk.neighbor_count);
            nk.habituation = std::clamp(std::min(nk.habituation, ck), 0.0f, 1.0f);
        }
    }

    // step 6: age the winner's edges, drop the expired ones and any node they
    // leave disconnected (never below the two-node floor)
    GwrNode& cc = nodes_.at(bm.best);
    std::vector<int> expired;
    for (auto& [k, age] : cc.edges) {
        age += 1;
        nodes_.at(k).edges.at(bm.best) = age;  // keep the mirror entry in step
        if (age > params_.max_edge_age) expired.push_back(k);
    }
    std::vector<int> orphan_candidates;
    for (int k : expired) {
        remove_edge(bm.best, k);
        ++rep.edges_removed;
        orphan_candidates.push_back(k);
    }
    if (!expired.empty()) orphan_candidates.push_back(bm.best);
    std::sort(orphan_candidates.begin(), orphan_candidates.end());
    for (int k : orphan_candidates) {
        if (nodes_.size() <= 2) break;
        auto it = nodes_.find(k);
        if (it != nodes_.end() && it->second.edges.empty()) {
            nodes_.erase(it);
            ++rep.nodes_removed;
        }
    }
    return rep;
}

uint64_t GwrNetwork::structure_hash() const {
    uint64_t h = 1469598103934665603ull;
    auto mix = [&h](uint64_t x) {
        h ^= x;
        h *= 1099511628211ull;
    };
    for (const auto& [id, n] : nodes_) {
        mix(uint64_t(id));
        for (int i = 0; i < n.w.size(); ++i) {
            uint32_t bits;
            std::memcpy(&bits, &n.w(i), 4);
            mix(bits);
        }
        uint32_t hb;
        std::memcpy(&hb, &n.habituation, 4);
        mix(hb);
        mix(uint64_t(n.bmu_count));
        mix(uint64_t(n.neighbor_count));
        for (const auto& [k, age] : n.edges) {
            mix(uint64_t(k));
            mix(uint64_t(age));
        }
    }
    return h;
}

std::string GwrNetwork::to_json() const {
    json doc;
    doc["format"] = "gwr-graph";
    doc["version"] = 1;
    doc["dim"] = dim_;
    doc["next_id"] = next_id_;
    doc["pending_bootstrap"] = pending_bootstrap_;
    json p;
    p["activity_threshold"] = params_.activity_threshold;
    p["habituation_threshold"] = params_.habituation_threshold;
    p["eps_bmu"] = params_.eps_bmu;
    p["eps_neighbor"] = params_.eps_neighbor;
    p["h0"] = params_.h0;
    p["alpha_bmu"] = params_.alpha_bmu;
    p["alpha_neighbor"] = params_.alpha_neighbor;
    p["tau_bmu"] = params_.tau_bmu;
    p["tau_neighbor"] = params_.tau_neighbor;
    p["max_edge_age"] = params_.max_edge_age;
    doc["params"] = p;
    json nodes = json::array();
    for (const auto& [id, n] : nodes_) {
        json jn;
        jn["id"] = id;
        std::vector<float> w(n.w.data(), n.w.data() + n.w.size());
        jn["w"] = w;
        jn["habituation"] = n.habituation;
        jn["bmu_count"] = n.bmu_count;
        jn["neighbor_count"] = n.neighbor_count;
        nodes.push_back(std::move(jn));
    }
    doc["nodes"] = std::move(nodes);
    json edges = json::array();
    for (const auto& [id, n] : nodes_)
        for (const auto& [k, age] : n.edges)
            if (id < k) edges.push_back({{"a", id}, {"b", k}, {"age", age}});
    doc["edges"] = std::move(edges);
    return doc.dump(2);
}

std::string GwrNetwork::to_dot() const {
    std::ostringstream os;
    os << "graph gwr {\n  node [shape=circle];\n";
    for (const auto& [id, n] : nodes_) {
        os << "  n" << id << " [label=\"" << id << "\\nh=";
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.3f", double(n.habituation));
        os << buf << "\"];\n";
    }
    for (const auto& [id, n] : nodes_)
        for (const auto& [k, age] : n.edges)
            if (id < k) os << "  n" << id << " -- n" << k << " [label=\"" << age << "\"];\n";
    os << "}\n";
    return os.str();
}

GwrNetwork GwrNetwork::from_json(const std::string& text) {
    json doc = json::parse(text);
    require(doc.value("format", "") == "gwr-graph", "gwr import: not a gwr graph document");
    require(doc.value("version", 0) == 1, "gwr import: unsupported version");
    GwrNetwork net;
    net.dim_ = doc.at("dim").get<int>();
    net.next_id_ = doc.at("next_id").get<int>();
    net.pending_bootstrap_ = doc.value("pending_bootstrap", false);
    const json& p = doc.at("params");
    net.params_.activity_threshold = p.at("activity_threshold").get<float>();
    net.params_.habituation_threshold = p.at("habituation_threshold").get<float>();
    net.params_.eps_bmu = p.at("eps_bmu").get<float>();
    net.params_.eps_neighbor = p.at("eps_neighbor").get<float>();
    net.params_.h0 = p.at("h0").get<float>();
    net.params_.alpha_bmu = p.at("alpha_bmu").get<float>();
    net.params_.alpha_neighbor = p.at("alpha_neighbor").get<float>();
    net.params_.tau_bmu = p.at("tau_bmu").get<float>();
    net.params_.tau_neighbor = p.at("tau_neighbor").get<float>();
    net.params_.max_edge_age = p.at("max_edge_age").get<int>();
    for (const auto& jn : doc.at("nodes")) {
        GwrNode n;
        n.id = jn.at("id").get<int>();
        auto w = jn.at("w").get<std::vector<float>>();
        require(int(w.size()) == net.dim_, "gwr import: node weight width mismatch");
        n.w = Eigen::Map<const Vecf>(w.data(), Eigen::Index(w.size()));
        n.habituation = jn.at("habituation").get<float>();
        n.bmu_count = jn.at("bmu_count").get<int>();
        n.neighbor_count = jn.at("neighbor_count").get<int>();
        net.nodes_.emplace(n.id, std::move(n));
    }
    for (const auto& je : doc.at("edges")) {
        int a = je.at("a").get<int>(), b = je.at("b").get<int>();
        int age = je.at("age").get<int>();
        net.nodes_.at(a).edges[b] = age;
        net.nodes_.at(b).edges[a] = age;
    }
    return net;
}

}  // namespace mtrl
