// SPDX-License-Identifier: Apache-2.0
#include "fq/synth/render.hpp"

#include <cmath>
#include <stdexcept>

namespace fq::synth {
namespace {

struct Vec2 {
    double x, y;
};

bool point_in_shape(ObjShape shape, double dx, double dy, double r) {
    switch (shape) {
        case ObjShape::kCircle:
            return dx * dx + dy * dy <= r * r;
        case ObjShape::kSquare: {
            const double h = r * 0.89;  // roughly area-matched to the circle
            return std::fabs(dx) <= h && std::fabs(dy) <= h;
        }
        case ObjShape::kTriangle: {
            // Upward-pointing triangle inscribed in radius r.
            const Vec2 a{0.0, -r};
            const Vec2 b{-0.95 * r, 0.72 * r};
            const Vec2 c{0.95 * r, 0.72 * r};
            auto cross = [](Vec2 p, Vec2 q, double px, double py) {
                return (q.x - p.x) * (py - p.y) - (q.y - p.y) * (px - p.x);
            };
            const double d1 = cross(a, b, dx, dy);
            const double d2 = cross(b, c, dx, dy);
            const double d3 = cross(c, a, dx, dy);
            const bool neg = (d1 < 0) || (d2 < 0) || (d3 < 0);
            const bool pos = (d1 > 0) || (d2 > 0) || (d3 > 0);
            return !(neg && pos);
        }
        case ObjShape::kStar: {
            // 5-point star: radius threshold oscillates with 5-fold symmetry.
            const double dist = std::sqrt(dx * dx + dy * dy);
            if (dist > r) return false;
            if (dist < 1e-9) return true;
            double theta = std::atan2(dy, dx) + 3.14159265358979323846 / 2.0;  // tip up
            const double sector = 2.0 * 3.14159265358979323846 / 5.0;
            double a = std::fmod(theta, sector);
            if (a < 0) a += sector;
            const double frac = std::fabs(a - sector / 2.0) / (sector / 2.0);  // 1 at tip
            const double inner = 0.45 * r;
            const double radius_at = inner + (r - inner) * frac;
            return dist <= radius_at;
        }
    }
    return false;
}

Rgb darken(Rgb c, double f) {
    return Rgb{static_cast<uint8_t>(c.r * f), static_cast<uint8_t>(c.g * f),
               static_cast<uint8_t>(c.b * f)};
}

}  // namespace

Image render_scene(const SceneSpec& scene, int resolution) {
    if (resolution != 32 && resolution != 64)
        throw std::runtime_error("unsupported resolution (want 32 or 64)");
    scene.validate();

    Image img;
    img.width = img.height = resolution;
    img.pixels.assign(static_cast<size_t>(resolution) * resolution * 3, 0);

    const Rgb bg = palette_rgb(scene.background);
    for (int y = 0; y < resolution; ++y)
        for (int x = 0; x < resolution; ++x) {
            uint8_t* p = img.at(x, y);
            p[0] = bg.r;
            p[1] = bg.g;
            p[2] = bg.b;
        }

    const double cell_size = resolution / 3.0;
    for (const auto& obj : scene.objects) {
        const int row = obj.cell / 3, col = obj.cell % 3;
        const double cx = (col + 0.5) * cell_size;
        const double cy = (row + 0.5) * cell_size;
        const double r = (obj.size == ObjSize::kLarge ? 0.44 : 0.27) * cell_size;
        const Rgb fill = palette_rgb(obj.color);
        const Rgb stripe = darken(fill, 0.55);
        for (int y = 0; y < resolution; ++y)
            for (int x = 0; x < resolution; ++x) {
                const double px = x + 0.5, py = y + 0.5;
                if (!point_in_shape(obj.shape, px - cx, py - cy, r)) continue;
                // Stripe rows alternate with a 2-pixel period at 32px,
                // scaling with resolution so 64px downsamples consistently.
                const bool striped = scene.texture && ((y * 32 / resolution) % 2 == 1);
                const Rgb c = striped ? stripe : fill;
                uint8_t* p = img.at(x, y);
                p[0] = c.r;
                p[1] = c.g;
                p[2] = c.b;
            }
    }
    return img;
}

Image downsample2(const Image& img) {
    check_shape(img.width % 2 == 0 && img.height % 2 == 0, "downsample2: odd size");
    Image out;
    out.width = img.width / 2;
    out.height = img.height / 2;
    out.pixels.assign(static_cast<size_t>(out.width) * out.height * 3, 0);
    for (int y = 0; y < out.height; ++y)
        for (int x = 0; x < out.width; ++x)
            for (int c = 0; c < 3; ++c) {
                const int sum = img.at(2 * x, 2 * y)[c] + img.at(2 * x + 1, 2 * y)[c] +
                                img.at(2 * x, 2 * y + 1)[c] + img.at(2 * x + 1, 2 * y + 1)[c];
                out.at(x, y)[c] = static_cast<uint8_t>((sum + 2) / 4);
            }
    return out;
}

Tensor image_to_tensor(const Image& img) {
    Tensor t({3, img.height, img.width});
    for (int c = 0; c < 3; ++c)
        for (int y = 0; y < img.height; ++y)
            for (int x = 0; x < img.width; ++x)
                t.at((static_cast<int64_t>(c) * img.height + y) * img.width + x) =
                    img.at(x, y)[c] / 255.0f;
    return t;
}

Image tensor_to_image(const Tensor& t) {
    check_shape(t.ndim() == 3 && t.dim(0) == 3, "tensor_to_image: want [3,H,W]");
    Image img;
    img.height = t.dim(1);
    img.width = t.dim(2);
    img.pixels.assign(static_cast<size_t>(img.width) * img.height * 3, 0);
    for (int c = 0; c < 3; ++c)
        for (int y = 0; y < img.height; ++y)
            for (int x = 0; x < img.width; ++x) {
                float v = t.at((static_cast<int64_t>(c) * img.height + y) * img.width + x);
                v = v < 0.0f ? 0.0f : (v > 1.0f ? 1.0f : v);
                img.at(x, y)[c] = static_cast<uint8_t>(std::lround(v * 255.0f));
            }
    return img;
}

}  // namespace fq::synth
