#include "panicle/synth.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <unordered_set>

#include "panicle/kdtree.hpp"
#include "panicle/rng.hpp"

namespace panicle::synth {

namespace {

Vec3 randomUnit(Rng& rng) {
    for (;;) {
        const Vec3 v{rng.normal(), rng.normal(), rng.normal()};
        const double n = v.norm();
        if (n > 1e-12) return v / n;
    }
}

std::array<Vec3, 3> randomRotation(Rng& rng) {
    const Vec3 a = randomUnit(rng);
    Vec3 b = randomUnit(rng);
    b = (b - a * a.dot(b));
    while (b.norm() < 1e-9) {
        b = randomUnit(rng);
        b = (b - a * a.dot(b));
    }
    b = b.normalized();
    return {a, b, a.cross(b)};
}

// Orthonormal frame with w as the third axis.
std::array<Vec3, 3> frameAround(const Vec3& w) {
    const Vec3 n = w.normalized();
    const Vec3 helper = std::abs(n.x) < 0.9 ? Vec3{1, 0, 0} : Vec3{0, 1, 0};
    const Vec3 u = n.cross(helper).normalized();
    return {u, n.cross(u), n};
}

// Natural cubic spline through the control points, chord parameterized,
// returned as a dense polyline. This is the generator's own curve; the
// measurement pipeline never sees it.
std::vector<Vec3> splinePolyline(const std::vector<Vec3>& control, int samples_per_segment) {
    const std::size_t n = control.size();
    if (n == 2) {
        std::vector<Vec3> line;
        for (int s = 0; s <= samples_per_segment; ++s)
            line.push_back(control[0] +
                           (control[1] - control[0]) * (static_cast<double>(s) / samples_per_segment));
        return line;
    }
    std::vector<double> t(n, 0.0);
    for (std::size_t i = 1; i < n; ++i) t[i] = t[i - 1] + (control[i] - control[i - 1]).norm();

    // Tridiagonal natural-spline system for second derivatives.
    std::vector<Vec3> m(n, Vec3{0, 0, 0});
    std::vector<double> a(n, 0), b(n, 0), c(n, 0);
    std::vector<Vec3> d(n, Vec3{0, 0, 0});
    for (std::size_t i = 1; i + 1 < n; ++i) {
        const double h0 = t[i] - t[i - 1], h1 = t[i + 1] - t[i];
        a[i] = h0 / 6.0;
        b[i] = (h0 + h1) / 3.0;
        c[i] = h1 / 6.0;
        d[i] = (control[i + 1] - control[i]) / h1 - (control[i] - control[i - 1]) / h0;
    }
    // Thomas algorithm on interior rows.
    for (std::size_t i = 2; i + 1 < n; ++i) {
        const double w = a[i] / b[i - 1];
        b[i] -= w * c[i - 1];
        d[i] -= d[i - 1] * w;
    }
    for (std::size_t i = n - 2; i >= 1; --i) {
        Vec3 rhs = d[i];
        if (i + 2 < n) rhs -= m[i + 1] * c[i];
        m[i] = rhs / b[i];
        if (i == 1) break;
    }

    std::vector<Vec3> poly;
    for (std::size_t seg = 0; seg + 1 < n; ++seg) {
        const double h = t[seg + 1] - t[seg];
        for (int s = (seg == 0 ? 0 : 1); s <= samples_per_segment; ++s) {
            const double x = t[seg] + h * (static_cast<double>(s) / samples_per_segment);
            const double u = t[seg + 1] - x, v = x - t[seg];
            poly.push_back(m[seg] * (u * u * u / (6.0 * h)) + m[seg + 1] * (v * v * v / (6.0 * h)) +
                           (control[seg] / h - m[seg] * (h / 6.0)) * u +
                           (control[seg + 1] / h - m[seg + 1] * (h / 6.0)) * v);
        }
    }
    return poly;
}

double polylineLength(const std::vector<Vec3>& poly) {
    double len = 0.0;
    for (std::size_t i = 1; i < poly.size(); ++i) len += (poly[i] - poly[i - 1]).norm();
    return len;
}

struct Capsule {
    Vec3 a, b;
    double radius;
};

struct Ellipsoid {
    Vec3 center;
    std::array<Vec3, 3> axes;  // orthonormal
    Vec3 semi;
};

void sampleCapsuleSide(const Capsule& cap, double density_per_cm2, Rng& rng,
                       std::vector<Vec3>& out) {
    const Vec3 axis = cap.b - cap.a;
    const double len = axis.norm();
    if (len <= 0.0) return;
    const double area = 2.0 * M_PI * cap.radius * len;
    const auto count = static_cast<std::size_t>(std::llround(density_per_cm2 * area));
    const auto frame = frameAround(axis);
    for (std::size_t i = 0; i < count; ++i) {
        const double z = rng.unit() * len;
        const double theta = rng.unit() * 2.0 * M_PI;
        const Vec3 radial = frame[0] * std::cos(theta) + frame[1] * std::sin(theta);
        out.push_back(cap.a + frame[2] * z + radial * cap.radius);
    }
}

void sampleEllipsoid(const Ellipsoid& e, double density_per_cm2, Rng& rng,
                     std::vector<Vec3>& out) {
    // Thomsen approximation of the surface area.
    const double p = 1.6075;
    const auto powp = [&](double v) { return std::pow(v, p); };
    const double ap = powp(e.semi.x), bp = powp(e.semi.y), cp = powp(e.semi.z);
    const double area = 4.0 * M_PI * std::pow((ap * bp + ap * cp + bp * cp) / 3.0, 1.0 / p);
    const auto count = static_cast<std::size_t>(std::llround(density_per_cm2 * area));
    for (std::size_t i = 0; i < count; ++i) {
        const Vec3 u = randomUnit(rng);
        const Vec3 local{u.x * e.semi.x, u.y * e.semi.y, u.z * e.semi.z};
        out.push_back(e.center + e.axes[0] * local.x + e.axes[1] * local.y +
                      e.axes[2] * local.z);
    }
}

double clampedSegmentDist(const Vec3& p, const Vec3& a, const Vec3& b) {
    const Vec3 ab = b - a;
    const double len2 = ab.squaredNorm();
    double t = len2 > 0.0 ? (p - a).dot(ab) / len2 : 0.0;
    t = std::clamp(t, 0.0, 1.0);
    return (p - (a + ab * t)).norm();
}

struct Solids {
    std::vector<Capsule> capsules;
    std::vector<Ellipsoid> ellipsoids;
};

// Occupancy of the solid union on a fixed fine lattice, counted per
// primitive bbox so only voxels near the surface union are visited.
double occupiedVolume(const Solids& solids, double pitch) {
    std::unordered_set<std::uint64_t> cells;
    constexpr std::int64_t kOffset = 1 << 20;
    const auto keyOf = [&](std::int64_t ix, std::int64_t iy, std::int64_t iz) {
        return (static_cast<std::uint64_t>(ix + kOffset) << 42) |
               (static_cast<std::uint64_t>(iy + kOffset) << 21) |
               static_cast<std::uint64_t>(iz + kOffset);
    };
    const auto cellRange = [&](double lo, double hi, std::int64_t& c0, std::int64_t& c1) {
        c0 = static_cast<std::int64_t>(std::floor(lo / pitch));
        c1 = static_cast<std::int64_t>(std::floor(hi / pitch));
    };
    const auto scan = [&](const Vec3& mn, const Vec3& mx, auto&& inside) {
        std::int64_t x0, x1, y0, y1, z0, z1;
        cellRange(mn.x, mx.x, x0, x1);
        cellRange(mn.y, mx.y, y0, y1);
        cellRange(mn.z, mx.z, z0, z1);
        for (std::int64_t ix = x0; ix <= x1; ++ix)
            for (std::int64_t iy = y0; iy <= y1; ++iy)
                for (std::int64_t iz = z0; iz <= z1; ++iz) {
                    const Vec3 center{(ix + 0.5) * pitch, (iy + 0.5) * pitch, (iz + 0.5) * pitch};
                    if (inside(center)) cells.insert(keyOf(ix, iy, iz));
                }
    };
    for (const Capsule& cap : solids.capsules) {
        Vec3 mn = cap.a, mx = cap.a;
        for (int a = 0; a < 3; ++a) {
            mn[a] = std::min(mn[a], cap.b[a]) - cap.radius;
            mx[a] = std::max(mx[a], cap.b[a]) + cap.radius;
        }
        scan(mn, mx, [&](const Vec3& p) {
            return clampedSegmentDist(p, cap.a, cap.b) <= cap.radius;
        });
    }
    for (const Ellipsoid& e : solids.ellipsoids) {
        const double r = std::max({e.semi.x, e.semi.y, e.semi.z});
        const Vec3 mn = e.center - Vec3{r, r, r}, mx = e.center + Vec3{r, r, r};
        scan(mn, mx, [&](const Vec3& p) {
            const Vec3 d = p - e.center;
            const Vec3 local{d.dot(e.axes[0]) / e.semi.x, d.dot(e.axes[1]) / e.semi.y,
                             d.dot(e.axes[2]) / e.semi.z};
            return local.squaredNorm() <= 1.0;
        });
    }
    return static_cast<double>(cells.size()) * pitch * pitch * pitch;
}

}  // namespace

Placement randomPlacement(std::uint64_t seed, double scale, double translation_span) {
    Rng rng(seed);
    Placement pose;
    pose.rotation = randomRotation(rng);
    pose.scale = scale;
    pose.translation = {rng.uniform(-translation_span, translation_span),
                        rng.uniform(-translation_span, translation_span),
                        rng.uniform(-translation_span, translation_span)};
    return pose;
}

PointCloud genLabel(const LabelSpec& spec, const Placement& pose, std::uint64_t seed) {
    if (spec.length_cm <= 0 || spec.width_cm <= 0 || spec.thickness_cm <= 0)
        throw UsageError("genLabel: plate dimensions must be positive");
    Rng rng(seed);
    const double hx = spec.length_cm / 2, hy = spec.width_cm / 2, hz = spec.thickness_cm / 2;
    // Face areas decide how many samples each of the six faces receives.
    const std::array<double, 3> face_area{4 * hy * hz, 4 * hx * hz, 4 * hx * hy};
    PointCloud cloud;
    for (int axis = 0; axis < 3; ++axis) {
        const auto count =
            static_cast<std::size_t>(std::llround(spec.density_per_cm2 * face_area[axis]));
        for (int side = -1; side <= 1; side += 2) {
            for (std::size_t i = 0; i < count; ++i) {
                Vec3 p{rng.uniform(-hx, hx), rng.uniform(-hy, hy), rng.uniform(-hz, hz)};
                p[axis] = side * std::array<double, 3>{hx, hy, hz}[axis];
                if (spec.noise_sigma_cm > 0)
                    p += Vec3{rng.normal(), rng.normal(), rng.normal()} * spec.noise_sigma_cm;
                cloud.points.push_back(pose.apply(p));
            }
        }
    }
    return cloud;
}

PanicleSpec defaultPanicleSpec(std::uint64_t seed) {
    Rng rng(Rng::mix(seed, "panicle-spec"));
    PanicleSpec spec;
    spec.seed = seed;
    // Gently arched rachis, 18-24 cm long, curving in a random plane.
    const double total = rng.uniform(18.0, 24.0);
    const double droop = rng.uniform(0.12, 0.30);  // sagitta as a fraction of length
    const double az = rng.uniform(0.0, 2.0 * M_PI);
    const Vec3 side{std::cos(az), std::sin(az), 0.0};
    const int nc = 5;
    for (int i = 0; i < nc; ++i) {
        const double u = static_cast<double>(i) / (nc - 1);
        const double bow = droop * total * (u * (1.0 - u)) * 4.0;  // parabolic bow
        spec.rachis_control_cm.push_back(Vec3{0, 0, u * total} + side * bow);
    }
    spec.branch_count = 8 + static_cast<std::size_t>(rng.below(5));
    return spec;
}

std::pair<PointCloud, GroundTruth> genPanicle(const PanicleSpec& spec,
                                              double volume_oracle_pitch_cm) {
    if (spec.rachis_control_cm.size() < 2)
        throw UsageError("genPanicle: at least 2 rachis control points required");
    if (spec.surface_density_per_cm2 <= 0 || spec.rachis_radius_cm <= 0)
        throw UsageError("genPanicle: densities and sizes must be positive");
    Rng rng(spec.seed);

    const std::vector<Vec3> rachis = splinePolyline(spec.rachis_control_cm, 200);
    GroundTruth truth;
    truth.rachis_arc_length_cm = polylineLength(rachis);

    Solids solids;
    // Rachis tube as a chain of capsules over a coarser polyline.
    const std::vector<Vec3> coarse = splinePolyline(spec.rachis_control_cm, 24);
    for (std::size_t i = 1; i < coarse.size(); ++i)
        solids.capsules.push_back({coarse[i - 1], coarse[i], spec.rachis_radius_cm});

    // Branches leave the rachis tilted off the local tangent; grains sit
    // along each branch as oriented ellipsoids.
    std::vector<double> arc(rachis.size(), 0.0);
    for (std::size_t i = 1; i < rachis.size(); ++i)
        arc[i] = arc[i - 1] + (rachis[i] - rachis[i - 1]).norm();
    const auto pointAt = [&](double s) {
        const auto it = std::lower_bound(arc.begin(), arc.end(), s);
        const std::size_t i = std::min(static_cast<std::size_t>(it - arc.begin()),
                                       rachis.size() - 1);
        return rachis[i];
    };
    const auto tangentAt = [&](double s) {
        const double ds = truth.rachis_arc_length_cm / 100.0;
        const Vec3 d = pointAt(std::min(s + ds, truth.rachis_arc_length_cm)) -
                       pointAt(std::max(s - ds, 0.0));
        return d.normalized();
    };
    for (std::size_t b = 0; b < spec.branch_count; ++b) {
        const double station = rng.uniform(0.12, 0.85) * truth.rachis_arc_length_cm;
        const Vec3 root = pointAt(station);
        const Vec3 tangent = tangentAt(station);
        const double tilt =
            rng.uniform(spec.branch_angle_min_deg, spec.branch_angle_max_deg) * M_PI / 180.0;
        const auto frame = frameAround(tangent);
        const double azim = rng.uniform(0.0, 2.0 * M_PI);
        const Vec3 lateral = frame[0] * std::cos(azim) + frame[1] * std::sin(azim);
        const Vec3 dir = (tangent * std::cos(tilt) + lateral * std::sin(tilt)).normalized();
        const double len = rng.uniform(spec.branch_length_min_cm, spec.branch_length_max_cm);
        const Vec3 tip = root + dir * len;
        solids.capsules.push_back({root, tip, spec.branch_radius_cm});

        const auto grain_frame = frameAround(dir);
        for (double g = spec.grain_spacing_cm; g <= len; g += spec.grain_spacing_cm) {
            Ellipsoid grain;
            grain.center = root + dir * g +
                           (grain_frame[0] * rng.normal() + grain_frame[1] * rng.normal()) *
                               (0.2 * spec.grain_semi_axes_cm.y);
            grain.axes = {dir, grain_frame[0], dir.cross(grain_frame[0]).normalized()};
            grain.semi = spec.grain_semi_axes_cm;
            solids.ellipsoids.push_back(grain);
        }
    }

    PointCloud cloud;
    for (const Capsule& cap : solids.capsules)
        sampleCapsuleSide(cap, spec.surface_density_per_cm2, rng, cloud.points);
    for (const Ellipsoid& e : solids.ellipsoids)
        sampleEllipsoid(e, spec.surface_density_per_cm2, rng, cloud.points);
    if (spec.noise_sigma_cm > 0)
        for (Vec3& p : cloud.points)
            p += Vec3{rng.normal(), rng.normal(), rng.normal()} * spec.noise_sigma_cm;

    if (volume_oracle_pitch_cm > 0)
        truth.occupied_volume_cm3 = occupiedVolume(solids, volume_oracle_pitch_cm);
    return {std::move(cloud), truth};
}

SynthScene genScene(const PanicleSpec& panicle_spec, const LabelSpec& label_spec,
                    const Placement& pose, std::uint64_t seed, bool with_volume_truth) {
    SynthScene scene;
    auto [panicle_cm, truth] =
        genPanicle(panicle_spec, with_volume_truth ? 0.02 : 0.0);
    truth.label_length_cm = label_spec.length_cm;
    scene.truth = truth;

    // The label hangs clear of the panicle so density clustering separates
    // the two; a random plate orientation is part of the fixture.
    Rng rng(Rng::mix(seed, "label-pose"));
    Placement label_local;
    label_local.rotation = randomRotation(rng);
    label_local.translation = Vec3{8.0, 0.0, -6.0};
    PointCloud label_cm = genLabel(label_spec, label_local, Rng::mix(seed, "label"));

    for (const Vec3& p : panicle_cm.points) scene.panicle.points.push_back(pose.apply(p));
    for (const Vec3& p : label_cm.points) scene.label.points.push_back(pose.apply(p));
    scene.scene.points = scene.panicle.points;
    scene.scene.points.insert(scene.scene.points.end(), scene.label.points.begin(),
                              scene.label.points.end());
    return scene;
}

DensityGrid genDensityGrid(const GridShape& shape, std::array<int, 3> dims, Vec3 spacing) {
    for (const int d : dims)
        if (d < 2) throw UsageError("genDensityGrid: dims must be at least 2 per axis");
    DensityGrid grid;
    grid.dims = dims;
    grid.spacing = spacing;
    grid.origin = {-0.5 * (dims[0] - 1) * spacing.x, -0.5 * (dims[1] - 1) * spacing.y,
                   -0.5 * (dims[2] - 1) * spacing.z};
    grid.values.resize(static_cast<std::size_t>(dims[0]) * dims[1] * dims[2]);

    std::unique_ptr<KdTree> tree;
    double shell = 0.0;
    if (shape.kind == GridShapeKind::Panicle) {
        auto [cloud, truth] = genPanicle(shape.panicle_spec, 0.0);
        tree = std::make_unique<KdTree>(std::move(cloud.points));
        shell = std::min({spacing.x, spacing.y, spacing.z});
    }
    for (int ix = 0; ix < dims[0]; ++ix) {
        for (int iy = 0; iy < dims[1]; ++iy) {
            for (int iz = 0; iz < dims[2]; ++iz) {
                const Vec3 p = grid.worldPos(ix, iy, iz);
                double v = 0.0;
                switch (shape.kind) {
                    case GridShapeKind::Sphere:
                        v = shape.radius - p.norm();
                        break;
                    case GridShapeKind::Box:
                        v = std::min({shape.box_half.x - std::abs(p.x),
                                      shape.box_half.y - std::abs(p.y),
                                      shape.box_half.z - std::abs(p.z)});
                        break;
                    case GridShapeKind::Panicle: {
                        const auto nearest = tree->knn(p, 1);
                        v = shell - (tree->points()[nearest[0]] - p).norm();
                        break;
                    }
                }
                grid.value(ix, iy, iz) = static_cast<float>(v);
            }
        }
    }
    return grid;
}

}  // namespace panicle::synth
