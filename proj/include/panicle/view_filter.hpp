#ifndef PANICLE_VIEW_FILTER_HPP
#define PANICLE_VIEW_FILTER_HPP

#include <string>
#include <vector>

#include "panicle/types.hpp"

namespace panicle {

struct ViewSet {
    std::vector<CameraPose> poses;
    std::vector<std::string> image_ids;
};

// Pose file: JSON array of {"image_id", "position": [x,y,z], "view_dir": [x,y,z]}
// records. A record may instead carry "transform": 16 row-major numbers of a
// 4x4 camera-to-world matrix; then view_dir = -(third column of the rotation).
ViewSet readPoses(const std::string& path);
void writePoses(const ViewSet& views, const std::string& path);

// Least-squares point minimizing summed squared distance to all view rays.
// Throws PipelineError when the rays are parallel (singular system) and
// UsageError for fewer than 2 poses.
Vec3 sceneCenter(const ViewSet& views);

// image_ids of views whose aim deviates from the center by at most
// max_angle_deg. A camera located exactly at the center counts as angle 0.
std::vector<std::string> filterViews(const ViewSet& views, const Vec3& center,
                                     double max_angle_deg = 20.0);

void writeKeptViews(const std::vector<std::string>& kept, const Vec3& center,
                    const std::string& path);

}  // namespace panicle

#endif
