#include "langnav/scene_graph.hpp"

#include <algorithm>
#include <fstream>
#include <queue>
#include <set>

#include "langnav/errors.hpp"

namespace langnav {
namespace {

bool valid_heading(int deg) { return deg >= 0 && deg <= 330 && deg % 30 == 0; }
bool valid_elevation(int deg) { return deg == -30 || deg == 0 || deg == 30; }

std::string normalized_whitespace(const std::string& s) {
    std::string out;
    bool in_space = true;
    for (char c : s) {
        if (c == ' ' || c == '\t' || c == '\n' || c == '\r') {
            if (!in_space) out.push_back(' ');
            in_space = true;
        } else {
            out.push_back(c);
            in_space = false;
        }
    }
    while (!out.empty() && out.back() == ' ') out.pop_back();
    return out;
}

void reject_unknown_keys(const nlohmann::json& obj, std::initializer_list<const char*> allowed,
                         const std::string& where) {
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        if (std::find_if(allowed.begin(), allowed.end(),
                         [&](const char* k) { return it.key() == k; }) == allowed.end()) {
            throw DataError("scene: unknown key \"" + it.key() + "\" in " + where);
        }
    }
}

}  // namespace

SceneGraph SceneGraph::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("scene: cannot open " + path.string());
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw DataError("scene: parse error in " + path.string() + ": " + e.what());
    }
    return from_json(doc);
}

SceneGraph SceneGraph::from_json(const nlohmann::json& doc) {
    if (!doc.is_object()) throw DataError("scene: top-level document must be an object");
    reject_unknown_keys(doc, {"scan_id", "viewpoints"}, "document");

    SceneGraph g;
    g.scan_id_ = doc.at("scan_id").get<std::string>();
    for (const auto& vp_json : doc.at("viewpoints")) {
        reject_unknown_keys(vp_json, {"id", "position", "views"}, "viewpoint");
        Viewpoint vp;
        vp.id = vp_json.at("id").get<std::string>();
        const auto& pos = vp_json.at("position");
        if (!pos.is_array() || pos.size() != 3)
            throw DataError("scene: position of " + vp.id + " must be [x,y,z]");
        vp.position = {pos[0].get<double>(), pos[1].get<double>(), pos[2].get<double>()};
        for (const auto& view_json : vp_json.at("views")) {
            reject_unknown_keys(view_json,
                                {"heading_deg", "elevation_deg", "caption", "objects", "leads_to"},
                                "view of " + vp.id);
            ViewDescriptor v;
            v.heading_deg = view_json.at("heading_deg").get<int>();
            v.elevation_deg = view_json.at("elevation_deg").get<int>();
            v.caption = view_json.at("caption").get<std::string>();
            for (const auto& obj : view_json.at("objects"))
                v.objects.push_back(obj.get<std::string>());
            const auto& lt = view_json.at("leads_to");
            if (!lt.is_null()) v.leads_to = lt.get<std::string>();
            vp.views.push_back(std::move(v));
        }
        if (g.index_.count(vp.id))
            throw DataError("scene: duplicate viewpoint id \"" + vp.id + "\"");
        g.index_[vp.id] = g.viewpoints_.size();
        g.viewpoints_.push_back(std::move(vp));
    }
    g.validate();
    return g;
}

void SceneGraph::validate() const {
    for (const auto& vp : viewpoints_) {
        std::set<std::tuple<int, int, std::string>> slot_edges;
        for (const auto& v : vp.views) {
            if (!valid_heading(v.heading_deg))
                throw DataError("scene: bad heading " + std::to_string(v.heading_deg) + " at " +
                                vp.id);
            if (!valid_elevation(v.elevation_deg))
                throw DataError("scene: bad elevation " + std::to_string(v.elevation_deg) +
                                " at " + vp.id);
            if (normalized_whitespace(v.caption).empty())
                throw DataError("scene: empty caption at " + vp.id);
            if (v.leads_to) {
                if (!index_.count(*v.leads_to))
                    throw DataError("scene: dangling leads_to \"" + *v.leads_to + "\" at " +
                                    vp.id);
                if (!slot_edges.insert({v.heading_deg, v.elevation_deg, *v.leads_to}).second)
                    throw DataError("scene: duplicate (heading, elevation, leads_to) at " + vp.id);
            }
        }
    }
}

nlohmann::ordered_json SceneGraph::to_json() const {
    nlohmann::ordered_json doc;
    doc["scan_id"] = scan_id_;
    doc["viewpoints"] = nlohmann::ordered_json::array();
    for (const auto& vp : viewpoints_) {
        nlohmann::ordered_json vp_json;
        vp_json["id"] = vp.id;
        vp_json["position"] = {vp.position.x, vp.position.y, vp.position.z};
        vp_json["views"] = nlohmann::ordered_json::array();
        for (const auto& v : vp.views) {
            nlohmann::ordered_json view_json;
            view_json["heading_deg"] = v.heading_deg;
            view_json["elevation_deg"] = v.elevation_deg;
            view_json["caption"] = v.caption;
            view_json["objects"] = v.objects;
            if (v.leads_to)
                view_json["leads_to"] = *v.leads_to;
            else
                view_json["leads_to"] = nullptr;
            vp_json["views"].push_back(std::move(view_json));
        }
        doc["viewpoints"].push_back(std::move(vp_json));
    }
    return doc;
}

void SceneGraph::save(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("scene: cannot write " + path.string());
    out << to_json().dump(2) << "\n";
}

const Viewpoint& SceneGraph::viewpoint(const std::string& id) const {
    auto it = index_.find(id);
    if (it == index_.end()) throw DataError("scene: unknown viewpoint id \"" + id + "\"");
    return viewpoints_[it->second];
}

std::optional<GeodesicResult> geodesic(const SceneGraph& graph, const std::string& src,
                                       const std::string& dst) {
    graph.viewpoint(src);
    graph.viewpoint(dst);
    if (src == dst) return GeodesicResult{0.0, {src}};

    // Label-setting search whose priority is (distance, path); the path
    // component makes equal-cost ties resolve to the lexicographically
    // smallest id sequence.
    struct Label {
        double dist;
        std::vector<std::string> path;
        bool operator>(const Label& o) const {
            if (dist != o.dist) return dist > o.dist;
            return path > o.path;
        }
    };
    std::priority_queue<Label, std::vector<Label>, std::greater<Label>> queue;
    std::unordered_map<std::string, bool> done;
    queue.push({0.0, {src}});
    while (!queue.empty()) {
        Label cur = queue.top();
        queue.pop();
        const std::string& node = cur.path.back();
        if (done[node]) continue;
        done[node] = true;
        if (node == dst) return GeodesicResult{cur.dist, cur.path};
        const Viewpoint& vp = graph.viewpoint(node);
        for (const auto& view : vp.views) {
            if (!view.leads_to || done[*view.leads_to]) continue;
            Label next = cur;
            next.dist += euclidean_distance(vp.position, graph.viewpoint(*view.leads_to).position);
            next.path.push_back(*view.leads_to);
            queue.push(std::move(next));
        }
    }
    return std::nullopt;
}

std::vector<NavigableCandidate> navigable_candidates(const SceneGraph& graph,
                                                     const AgentPose& pose) {
    const Viewpoint& vp = graph.viewpoint(pose.viewpoint_id);
    std::vector<NavigableCandidate> out;
    for (int i = 0; i < static_cast<int>(vp.views.size()); ++i) {
        const ViewDescriptor& v = vp.views[i];
        if (!v.navigable()) continue;
        out.push_back({i, &v, relative_direction(pose, v)});
    }
    std::stable_sort(out.begin(), out.end(),
                     [](const NavigableCandidate& a, const NavigableCandidate& b) {
                         if (a.rel.heading_offset_deg != b.rel.heading_offset_deg)
                             return a.rel.heading_offset_deg < b.rel.heading_offset_deg;
                         if (a.rel.elevation_offset_deg != b.rel.elevation_offset_deg)
                             return a.rel.elevation_offset_deg < b.rel.elevation_offset_deg;
                         return a.view_index < b.view_index;
                     });
    return out;
}

}  // namespace langnav
