#pragma once

#include <cmath>
#include <filesystem>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

namespace langnav {

struct Vec3 {
    double x = 0, y = 0, z = 0;
};

inline double euclidean_distance(const Vec3& a, const Vec3& b) {
    const double dx = a.x - b.x, dy = a.y - b.y, dz = a.z - b.z;
    return std::sqrt(dx * dx + dy * dy + dz * dz);
}

// One slot of the discretized panorama: 12 headings x 3 elevations.
// Carries the caption/object text surrogate for the slot's image and,
// when navigable, the viewpoint the slot leads to.
struct ViewDescriptor {
    int heading_deg = 0;    // multiple of 30 in [0, 330]
    int elevation_deg = 0;  // -30, 0, or 30
    std::string caption;
    std::vector<std::string> objects;
    std::optional<std::string> leads_to;

    bool navigable() const { return leads_to.has_value(); }
};

struct Viewpoint {
    std::string id;
    Vec3 position;
    std::vector<ViewDescriptor> views;  // file order preserved
};

struct AgentPose {
    std::string viewpoint_id;
    int heading_deg = 0;
    int elevation_deg = 0;
};

// Signed offsets of a view relative to the agent pose.
// heading_offset_deg is normalized into (-180, 180]; -180 maps to +180.
struct RelativeDirection {
    int heading_offset_deg = 0;
    int elevation_offset_deg = 0;  // multiple of 30 in [-60, 60]
};

inline int normalize_heading_offset(int deg) {
    deg %= 360;
    if (deg <= -180) deg += 360;
    if (deg > 180) deg -= 360;
    return deg;
}

inline RelativeDirection relative_direction(const AgentPose& pose, int view_heading_deg,
                                            int view_elevation_deg) {
    return {normalize_heading_offset(view_heading_deg - pose.heading_deg),
            view_elevation_deg - pose.elevation_deg};
}

inline RelativeDirection relative_direction(const AgentPose& pose, const ViewDescriptor& view) {
    return relative_direction(pose, view.heading_deg, view.elevation_deg);
}

// Immutable after load; safe for concurrent reads.
class SceneGraph {
public:
    static SceneGraph load(const std::filesystem::path& path);
    static SceneGraph from_json(const nlohmann::json& doc);

    nlohmann::ordered_json to_json() const;  // canonical writer
    void save(const std::filesystem::path& path) const;

    const std::string& scan_id() const { return scan_id_; }
    std::size_t size() const { return viewpoints_.size(); }
    bool contains(const std::string& id) const { return index_.count(id) > 0; }
    const Viewpoint& viewpoint(const std::string& id) const;  // throws DataError
    const std::vector<Viewpoint>& viewpoints() const { return viewpoints_; }

private:
    std::string scan_id_;
    std::vector<Viewpoint> viewpoints_;
    std::unordered_map<std::string, std::size_t> index_;

    void validate() const;
};

struct GeodesicResult {
    double distance = 0;
    std::vector<std::string> path;  // src..dst inclusive
};

// Shortest path by summed Euclidean edge lengths over directed leads_to edges.
// Equal-cost ties resolve to the lexicographically smallest id sequence.
// Returns nullopt when dst is unreachable; throws DataError on unknown ids.
std::optional<GeodesicResult> geodesic(const SceneGraph& graph, const std::string& src,
                                       const std::string& dst);

struct NavigableCandidate {
    int view_index = 0;  // index into the viewpoint's views list
    const ViewDescriptor* view = nullptr;
    RelativeDirection rel;
};

// Views with leads_to, ordered by signed relative heading ascending,
// then elevation offset ascending, then view_index.
std::vector<NavigableCandidate> navigable_candidates(const SceneGraph& graph,
                                                     const AgentPose& pose);

}  // namespace langnav
