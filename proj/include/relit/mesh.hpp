// relit is licensed under the Apache License, Version 2.0.
// SPDX: Apache-2.0

#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "relit/envmap.hpp"
#include "relit/gbuffer.hpp"
#include "relit/image.hpp"
#include "relit/render.hpp"
#include "relit/vec.hpp"

namespace relit {

// Triangle mesh in camera space (x right, y down, z forward, meters).
// One vertex per source pixel; faces wind counter-clockwise as seen from the
// camera. vertex_pixel records the source pixel of each vertex so materials
// can be looked up in the G-buffer after a ray hit.
struct TriMesh {
    struct Pixel {
        int x = 0, y = 0;
    };

    std::vector<Vec3> vertices;
    std::vector<std::array<int, 3>> faces;
    std::vector<int> vertex_labels;  // empty until a mask is projected
    std::vector<Pixel> vertex_pixel;
    int source_width = 0;   // dimensions of the depth map the mesh came from
    int source_height = 0;
};

// Back-projects each pixel center (x+0.5, y+0.5) through the intrinsics at its
// depth and connects neighboring pixels with two triangles per quad. A
// triangle is dropped when the max/min depth ratio across its vertices exceeds
// discontinuity_ratio (occlusion edges would otherwise become rubber sheets),
// or when its area falls below 1e-12.
TriMesh depth_to_mesh(const RadianceImage &depth, const Intrinsics &K,
                      double discontinuity_ratio = 1.1);

// Copies per-pixel segment ids onto the vertices. ids is row-major and must
// match the mesh's source dimensions.
TriMesh project_mask(const TriMesh &mesh, const std::vector<int> &ids, int width,
                     int height);

// Segment id of a face if all three vertices agree, -1 otherwise (or when no
// labels have been projected).
int face_segment(const TriMesh &mesh, int face);

struct Ray {
    Vec3 origin;
    Vec3 dir;  // unit length, camera frame
};

struct RayHit {
    double t = 0.0;
    int face = -1;  // -1 = miss
    double u = 0.0, v = 0.0;  // barycentric weights of face vertices 1 and 2
    bool hit() const { return face >= 0; }
};

// Closest intersection by scanning every face. Ties on t resolve to the lowest
// face index so that accelerated traversal can reproduce the result exactly.
RayHit intersect_brute_force(const TriMesh &mesh, const Ray &ray);

// Bounding volume hierarchy over the mesh faces. Intersection results are
// bit-identical to intersect_brute_force, including the tie-break rule.
class MeshBvh {
  public:
    explicit MeshBvh(const TriMesh &mesh);
    RayHit intersect(const Ray &ray) const;

  private:
    struct Node {
        Vec3 lo, hi;
        int left = -1, right = -1;    // interior children
        int first = 0, count = 0;     // leaf face range
    };
    const TriMesh &mesh_;
    std::vector<Node> nodes_;
    std::vector<int> face_order_;

    int build(std::vector<int> &faces, int begin, int end);
};

// Replaces background pixels (keep_mask < 0.5) with the mesh re-rendered under
// new_env: the camera ray is intersected with the mesh and the hit is shaded
// with the G-buffer material of its nearest vertex; misses fall back to the
// environment radiance along the ray. Foreground pixels keep their relit
// values, and the two layers are blended over a 2-pixel feather at the seam.
// keep_mask is a 1-channel image with 1 = foreground.
RadianceImage render_background(const TriMesh &mesh, const GBuffer &gbuf,
                                const RadianceImage &keep_mask,
                                const EnvironmentMap &new_env,
                                const RenderSettings &settings);

// ASCII OBJ with "v x y z" and 1-based "f i j k" records.
void save_mesh_obj(const TriMesh &mesh, const std::string &path);
TriMesh load_mesh_obj(const std::string &path);

}  // namespace relit
