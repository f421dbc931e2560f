// relit is licensed under the Apache License, Version 2.0.
// SPDX: Apache-2.0

#include "relit/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include "relit/brdf.hpp"
#include "relit/errors.hpp"
#include "relit/parallel.hpp"
#include "relit/rng.hpp"

namespace relit {

namespace {

double triangle_area(const Vec3 &a, const Vec3 &b, const Vec3 &c) {
    return 0.5 * length(cross(b - a, c - a));
}

// max/min depth ratio across three camera-space vertices.
double depth_ratio(const Vec3 &a, const Vec3 &b, const Vec3 &c) {
    double lo = std::min(a.z, std::min(b.z, c.z));
    double hi = std::max(a.z, std::max(b.z, c.z));
    return hi / lo;
}

}  // namespace

TriMesh depth_to_mesh(const RadianceImage &depth, const Intrinsics &K,
                      double discontinuity_ratio) {
    if (depth.channels() != 1)
        throw ValidationError("depth_to_mesh: depth map must have 1 channel, got " +
                              std::to_string(depth.channels()));
    if (!(std::isfinite(K.fx) && std::isfinite(K.fy) && K.fx != 0.0 && K.fy != 0.0))
        throw ValidationError("depth_to_mesh: singular intrinsic matrix");
    if (discontinuity_ratio < 1.0)
        throw ValidationError("depth_to_mesh: discontinuity_ratio must be >= 1");

    const int w = depth.width(), h = depth.height();
    TriMesh mesh;
    mesh.source_width = w;
    mesh.source_height = h;
    mesh.vertices.reserve(size_t(w) * h);
    mesh.vertex_pixel.reserve(size_t(w) * h);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            double d = depth.at(x, y, 0);
            if (!(d > 0.0) || !std::isfinite(d))
                throw ValidationError("depth_to_mesh: non-positive depth at pixel (" +
                                      std::to_string(x) + ", " + std::to_string(y) + ")");
            mesh.vertices.push_back(K.unproject(double(x), double(y), d));
            mesh.vertex_pixel.push_back({x, y});
        }
    }

    auto idx = [w](int x, int y) { return y * w + x; };
    for (int y = 0; y + 1 < h; ++y) {
        for (int x = 0; x + 1 < w; ++x) {
            int v00 = idx(x, y), v10 = idx(x + 1, y);
            int v01 = idx(x, y + 1), v11 = idx(x + 1, y + 1);
            const std::array<int, 3> candidates[2] = {{v00, v01, v10}, {v10, v01, v11}};
            for (const auto &f : candidates) {
                const Vec3 &a = mesh.vertices[f[0]];
                const Vec3 &b = mesh.vertices[f[1]];
                const Vec3 &c = mesh.vertices[f[2]];
                if (depth_ratio(a, b, c) > discontinuity_ratio) continue;
                if (triangle_area(a, b, c) < 1e-12) continue;
                mesh.faces.push_back(f);
            }
        }
    }
    return mesh;
}

TriMesh project_mask(const TriMesh &mesh, const std::vector<int> &ids, int width,
                     int height) {
    if (width != mesh.source_width || height != mesh.source_height)
        throw ValidationError("project_mask: mask is " + std::to_string(width) + "x" +
                              std::to_string(height) + " but mesh source is " +
                              std::to_string(mesh.source_width) + "x" +
                              std::to_string(mesh.source_height));
    if (ids.size() != size_t(width) * height)
        throw ValidationError("project_mask: mask id count does not match its dimensions");

    TriMesh out = mesh;
    out.vertex_labels.resize(out.vertices.size());
    for (size_t i = 0; i < out.vertices.size(); ++i) {
        const auto &px = out.vertex_pixel[i];
        out.vertex_labels[i] = ids[size_t(px.y) * width + px.x];
    }
    return out;
}

int face_segment(const TriMesh &mesh, int face) {
    if (face < 0 || size_t(face) >= mesh.faces.size())
        throw ValidationError("face_segment: face index out of range");
    if (mesh.vertex_labels.empty()) return -1;
    const auto &f = mesh.faces[face];
    int s = mesh.vertex_labels[f[0]];
    if (mesh.vertex_labels[f[1]] != s || mesh.vertex_labels[f[2]] != s) return -1;
    return s;
}

namespace {

// Moller-Trumbore, double precision. Both brute-force and BVH traversal call
// this exact routine so their hit records can be compared bitwise.
bool intersect_triangle(const Vec3 &orig, const Vec3 &dir, const Vec3 &p0,
                        const Vec3 &p1, const Vec3 &p2, double &t, double &u,
                        double &v) {
    Vec3 e1 = p1 - p0;
    Vec3 e2 = p2 - p0;
    Vec3 pvec = cross(dir, e2);
    double det = dot(e1, pvec);
    if (std::abs(det) < 1e-12) return false;
    double inv_det = 1.0 / det;
    Vec3 tvec = orig - p0;
    u = dot(tvec, pvec) * inv_det;
    if (u < 0.0 || u > 1.0) return false;
    Vec3 qvec = cross(tvec, e1);
    v = dot(dir, qvec) * inv_det;
    if (v < 0.0 || u + v > 1.0) return false;
    t = dot(e2, qvec) * inv_det;
    return t > 1e-9;
}

// Lexicographic (t, face) ordering: closer hits win, ties go to the lower face
// index. Keeping the rule in one place is what makes the two traversals agree.
bool closer(double t, int face, const RayHit &best) {
    if (!best.hit()) return true;
    if (t != best.t) return t < best.t;
    return face < best.face;
}

}  // namespace

RayHit intersect_brute_force(const TriMesh &mesh, const Ray &ray) {
    RayHit best;
    for (int fi = 0; fi < int(mesh.faces.size()); ++fi) {
        const auto &f = mesh.faces[fi];
        double t, u, v;
        if (!intersect_triangle(ray.origin, ray.dir, mesh.vertices[f[0]],
                                mesh.vertices[f[1]], mesh.vertices[f[2]], t, u, v))
            continue;
        if (closer(t, fi, best)) best = RayHit{t, fi, u, v};
    }
    return best;
}

MeshBvh::MeshBvh(const TriMesh &mesh) : mesh_(mesh) {
    face_order_.resize(mesh.faces.size());
    for (size_t i = 0; i < face_order_.size(); ++i) face_order_[i] = int(i);
    if (!face_order_.empty()) {
        nodes_.reserve(2 * face_order_.size());
        build(face_order_, 0, int(face_order_.size()));
    }
}

int MeshBvh::build(std::vector<int> &faces, int begin, int end) {
    Node node;
    node.lo = Vec3(std::numeric_limits<double>::infinity());
    node.hi = Vec3(-std::numeric_limits<double>::infinity());
    for (int i = begin; i < end; ++i) {
        for (int k : mesh_.faces[faces[i]]) {
            node.lo = min(node.lo, mesh_.vertices[k]);
            node.hi = max(node.hi, mesh_.vertices[k]);
        }
    }
    int count = end - begin;
    if (count <= 4) {
        node.first = begin;
        node.count = count;
        nodes_.push_back(node);
        return int(nodes_.size()) - 1;
    }

    Vec3 extent = node.hi - node.lo;
    int axis = 0;
    if (extent.y > extent.x) axis = 1;
    if (extent.z > (axis == 0 ? extent.x : extent.y)) axis = 2;
    auto centroid = [this, axis](int fi) {
        const auto &f = mesh_.faces[fi];
        const Vec3 c = (mesh_.vertices[f[0]] + mesh_.vertices[f[1]] + mesh_.vertices[f[2]]) *
                       (1.0 / 3.0);
        return axis == 0 ? c.x : (axis == 1 ? c.y : c.z);
    };
    int mid = begin + count / 2;
    std::nth_element(faces.begin() + begin, faces.begin() + mid, faces.begin() + end,
                     [&](int a, int b) {
                         double ca = centroid(a), cb = centroid(b);
                         if (ca != cb) return ca < cb;
                         return a < b;  // deterministic split on equal centroids
                     });

    int self = int(nodes_.size());
    nodes_.push_back(node);
    int left = build(faces, begin, mid);
    int right = build(faces, mid, end);
    nodes_[self].left = left;
    nodes_[self].right = right;
    return self;
}

RayHit MeshBvh::intersect(const Ray &ray) const {
    RayHit best;
    if (nodes_.empty()) return best;

    Vec3 inv_dir(1.0 / ray.dir.x, 1.0 / ray.dir.y, 1.0 / ray.dir.z);
    // Nodes whose entry distance equals the current best t are still visited:
    // they may contain an equal-t face with a lower index, and the tie-break
    // must see it to match the brute-force scan.
    auto slab_hit = [&](const Node &n, double &tmin_out) {
        double tmin = 0.0, tmax = std::numeric_limits<double>::infinity();
        for (int a = 0; a < 3; ++a) {
            double lo = (a == 0 ? n.lo.x : a == 1 ? n.lo.y : n.lo.z);
            double hi = (a == 0 ? n.hi.x : a == 1 ? n.hi.y : n.hi.z);
            double o = (a == 0 ? ray.origin.x : a == 1 ? ray.origin.y : ray.origin.z);
            double inv = (a == 0 ? inv_dir.x : a == 1 ? inv_dir.y : inv_dir.z);
            double t0 = (lo - o) * inv;
            double t1 = (hi - o) * inv;
            if (inv < 0.0) std::swap(t0, t1);
            tmin = std::max(tmin, t0);
            tmax = std::min(tmax, t1);
            if (tmax < tmin) return false;
        }
        tmin_out = tmin;
        return true;
    };

    std::vector<int> stack;
    stack.reserve(64);
    stack.push_back(0);
    while (!stack.empty()) {
        int ni = stack.back();
        stack.pop_back();
        const Node &node = nodes_[ni];
        double tmin;
        if (!slab_hit(node, tmin)) continue;
        if (best.hit() && tmin > best.t) continue;
        if (node.count > 0) {
            for (int i = node.first; i < node.first + node.count; ++i) {
                int fi = face_order_[i];
                const auto &f = mesh_.faces[fi];
                double t, u, v;
                if (!intersect_triangle(ray.origin, ray.dir, mesh_.vertices[f[0]],
                                        mesh_.vertices[f[1]], mesh_.vertices[f[2]], t, u,
                                        v))
                    continue;
                if (closer(t, fi, best)) best = RayHit{t, fi, u, v};
            }
        } else {
            stack.push_back(node.right);
            stack.push_back(node.left);
        }
    }
    return best;
}

namespace {

// Feather weight toward the relit foreground: 1 on foreground pixels, fading
// to 0 two pixels into the background.
double feather_alpha(const RadianceImage &keep_mask, int x, int y) {
    if (keep_mask.at(x, y, 0) >= 0.5f) return 1.0;
    double best = std::numeric_limits<double>::infinity();
    for (int dy = -2; dy <= 2; ++dy) {
        for (int dx = -2; dx <= 2; ++dx) {
            int nx = x + dx, ny = y + dy;
            if (nx < 0 || ny < 0 || nx >= keep_mask.width() || ny >= keep_mask.height())
                continue;
            if (keep_mask.at(nx, ny, 0) >= 0.5f)
                best = std::min(best, std::sqrt(double(dx * dx + dy * dy)));
        }
    }
    if (!std::isfinite(best)) return 0.0;
    return std::max(0.0, 1.0 - best / 2.0);
}

}  // namespace

RadianceImage render_background(const TriMesh &mesh, const GBuffer &gbuf,
                                const RadianceImage &keep_mask,
                                const EnvironmentMap &new_env,
                                const RenderSettings &settings) {
    settings.validate();
    const int w = gbuf.width(), h = gbuf.height();
    if (mesh.source_width != w || mesh.source_height != h)
        throw ValidationError("render_background: mesh source is " +
                              std::to_string(mesh.source_width) + "x" +
                              std::to_string(mesh.source_height) + " but G-buffer is " +
                              std::to_string(w) + "x" + std::to_string(h));
    if (keep_mask.width() != w || keep_mask.height() != h || keep_mask.channels() != 1)
        throw ValidationError("render_background: keep_mask must be " + std::to_string(w) +
                              "x" + std::to_string(h) + "x1");

    const RadianceImage relit = relight_frame(gbuf, new_env, settings);
    const MeshBvh bvh(mesh);

    RadianceImage out(w, h, 3);
    parallel_for(0, h, settings.threads, [&](int64_t yy) {
        const int y = static_cast<int>(yy);
        for (int x = 0; x < w; ++x) {
            double alpha = feather_alpha(keep_mask, x, y);
            if (alpha >= 1.0) {
                out.set_rgb(x, y, relit.rgb(x, y));
                continue;
            }

            // Camera ray through the pixel center, camera frame.
            Ray ray;
            ray.origin = Vec3(0.0);
            ray.dir = normalize(gbuf.intrinsics.unproject(double(x), double(y), 1.0));
            RayHit hit = bvh.intersect(ray);

            Vec3 bg;
            if (hit.hit()) {
                // Material comes from the nearest vertex of the hit face.
                const auto &f = mesh.faces[hit.face];
                double w0 = 1.0 - hit.u - hit.v;
                int corner = 0;
                if (hit.u > w0 && hit.u >= hit.v)
                    corner = 1;
                else if (hit.v > w0 && hit.v > hit.u)
                    corner = 2;
                const auto &px = mesh.vertex_pixel[f[corner]];

                MaterialSample mat;
                mat.albedo = gbuf.albedo.rgb(px.x, px.y);
                mat.roughness = gbuf.roughness.at(px.x, px.y);
                mat.metallic = gbuf.metallic.at(px.x, px.y);
                Vec3 n = gbuf.normal_at(px.x, px.y);
                // View vector points from the surface back along the ray,
                // expressed in the shading frame (y up, z toward camera).
                Vec3 v = normalize(Vec3(-ray.dir.x, ray.dir.y, ray.dir.z));
                Pcg32 rng = pixel_rng(settings.seed, x, y);
                bg = shade_point(mat, n, v, new_env, settings, rng);
            } else {
                // No geometry along the ray: fill with the environment.
                Vec3 d(ray.dir.x, -ray.dir.y, -ray.dir.z);
                bg = new_env.sample_radiance(d) * settings.exposure;
            }

            Vec3 fg = relit.rgb(x, y);
            out.set_rgb(x, y, fg * alpha + bg * (1.0 - alpha));
        }
    });
    return out;
}

void save_mesh_obj(const TriMesh &mesh, const std::string &path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open mesh file for writing: " + path);
    char line[128];
    for (const Vec3 &v : mesh.vertices) {
        std::snprintf(line, sizeof(line), "v %.9g %.9g %.9g\n", v.x, v.y, v.z);
        out << line;
    }
    for (const auto &f : mesh.faces) {
        std::snprintf(line, sizeof(line), "f %d %d %d\n", f[0] + 1, f[1] + 1, f[2] + 1);
        out << line;
    }
    if (!out) throw IoError("failed writing mesh file: " + path);
}

TriMesh load_mesh_obj(const std::string &path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open mesh file: " + path);
    TriMesh mesh;
    std::string line;
    while (std::getline(in, line)) {
        std::istringstream ls(line);
        std::string tag;
        if (!(ls >> tag)) continue;
        if (tag == "v") {
            Vec3 v;
            if (!(ls >> v.x >> v.y >> v.z))
                throw IoError("malformed vertex line in mesh file: " + path);
            mesh.vertices.push_back(v);
        } else if (tag == "f") {
            std::array<int, 3> f;
            if (!(ls >> f[0] >> f[1] >> f[2]))
                throw IoError("malformed face line in mesh file: " + path);
            for (int &i : f) {
                if (i < 1 || size_t(i) > mesh.vertices.size())
                    throw IoError("face index out of range in mesh file: " + path);
                i -= 1;
            }
            mesh.faces.push_back(f);
        }
    }
    return mesh;
}

}  // namespace relit
