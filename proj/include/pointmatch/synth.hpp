#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "pointmatch/core.hpp"
#include "pointmatch/rng.hpp"

namespace pointmatch {

enum class Distribution { Uniform, Clustered };

struct ClusterParams {
    int clusters = 5;
    double spread = 0.0;  // <= 0 selects min(width, height) / 10
};

/// A synthetic crowd scene: image bounds plus ground-truth annotations.
/// All points lie in [0, width) x [0, height).
struct Scene {
    int width = 0;
    int height = 0;
    PointSet gt;
    std::uint64_t seed = 0;
};

namespace detail {

inline double clamp_coord(double v, int extent) {
    const double hi = std::nextafter(static_cast<double>(extent), 0.0);
    return std::min(std::max(v, 0.0), hi);
}

}  // namespace detail

inline Scene generate_scene(int width, int height, int n_points, Distribution dist,
                            std::uint64_t seed, ClusterParams cluster = {}) {
    if (width < 1 || height < 1) throw InvalidInput("scene dimensions must be >= 1");
    if (n_points < 0) throw InvalidInput("point count must be >= 0");

    Scene scene;
    scene.width = width;
    scene.height = height;
    scene.seed = seed;
    scene.gt.points.reserve(n_points);

    Rng rng = make_rng(seed);
    if (dist == Distribution::Uniform) {
        for (int i = 0; i < n_points; ++i) {
            const double x = uniform_range(rng, 0.0, width);
            const double y = uniform_range(rng, 0.0, height);
            scene.gt.points.push_back({detail::clamp_coord(x, width), detail::clamp_coord(y, height)});
        }
    } else {
        const int k = cluster.clusters > 0 ? cluster.clusters : 1;
        const double spread =
            cluster.spread > 0.0 ? cluster.spread : std::min(width, height) / 10.0;
        std::vector<Point> centers(k);
        for (auto& c : centers) {
            c.x = uniform_range(rng, 0.0, width);
            c.y = uniform_range(rng, 0.0, height);
        }
        for (int i = 0; i < n_points; ++i) {
            const Point& c = centers[uniform_index(rng, centers.size())];
            const Vec2 z = normal_pair(rng);
            scene.gt.points.push_back({detail::clamp_coord(c.x + spread * z.x, width),
                                       detail::clamp_coord(c.y + spread * z.y, height)});
        }
    }
    return scene;
}

/// Annotation imprecision: every point is displaced by isotropic Gaussian
/// noise and clipped back into bounds. The count never changes.
inline Scene inject_jitter(const Scene& scene, double sigma, std::uint64_t seed) {
    if (sigma < 0.0) throw InvalidInput("jitter sigma must be >= 0");
    Scene out = scene;
    Rng rng = make_rng(seed);
    for (Point& p : out.gt.points) {
        const Vec2 z = normal_pair(rng);
        p.x = detail::clamp_coord(p.x + sigma * z.x, scene.width);
        p.y = detail::clamp_coord(p.y + sigma * z.y, scene.height);
    }
    return out;
}

/// Missing annotations: every point is dropped independently with the given
/// probability. Deterministic for a fixed seed.
inline Scene inject_deletions(const Scene& scene, double rate, std::uint64_t seed) {
    if (!(rate >= 0.0 && rate <= 1.0)) throw InvalidInput("deletion rate must be in [0, 1]");
    Scene out;
    out.width = scene.width;
    out.height = scene.height;
    out.seed = scene.seed;
    out.gt.points.reserve(scene.gt.size());
    Rng rng = make_rng(seed);
    for (const Point& p : scene.gt.points) {
        const double u = uniform_unit(rng);
        if (!(u < rate)) out.gt.points.push_back(p);
    }
    return out;
}

/// Gaussian-smoothed annotation map on the pixel grid.
struct DensityMap {
    int width = 0;
    int height = 0;
    double sigma = 0.0;
    std::vector<double> values;  // row-major, y * width + x

    double at(int x, int y) const { return values[static_cast<std::size_t>(y) * width + x]; }
};

/// Sum of one unit-mass Gaussian kernel per annotation, sampled at pixel
/// centers (x + 0.5, y + 0.5). Kernels are normalized analytically before any
/// boundary truncation, so mass near the image border is lost, not rescaled.
inline DensityMap render_density_map(const Scene& scene, double sigma) {
    if (!(sigma > 0.0)) throw InvalidInput("kernel sigma must be > 0");
    DensityMap map;
    map.width = scene.width;
    map.height = scene.height;
    map.sigma = sigma;
    map.values.assign(static_cast<std::size_t>(scene.width) * scene.height, 0.0);

    const double norm = 1.0 / (2.0 * 3.14159265358979323846 * sigma * sigma);
    const double inv2s2 = 1.0 / (2.0 * sigma * sigma);
    const int radius = static_cast<int>(std::ceil(8.0 * sigma));  // tail mass < 1e-14 of a kernel

    for (const Point& p : scene.gt.points) {
        const int x0 = std::max(0, static_cast<int>(std::floor(p.x)) - radius);
        const int x1 = std::min(scene.width - 1, static_cast<int>(std::floor(p.x)) + radius);
        const int y0 = std::max(0, static_cast<int>(std::floor(p.y)) - radius);
        const int y1 = std::min(scene.height - 1, static_cast<int>(std::floor(p.y)) + radius);
        for (int y = y0; y <= y1; ++y) {
            const double dy = (y + 0.5) - p.y;
            double* row = map.values.data() + static_cast<std::size_t>(y) * scene.width;
            for (int x = x0; x <= x1; ++x) {
                const double dx = (x + 0.5) - p.x;
                row[x] += norm * std::exp(-(dx * dx + dy * dy) * inv2s2);
            }
        }
    }
    return map;
}

/// The density-framework count readout: total mass on the grid.
inline double integrate_density(const DensityMap& map) {
    double s = 0.0;
    for (double v : map.values) s += v;
    return s;
}

}  // namespace pointmatch
