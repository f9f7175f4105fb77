#include "cil/plotting.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include <png.h>

#include "cil/errors.hpp"

namespace cil {

Canvas::Canvas(int width, int height, Rgb background) : width_(width), height_(height) {
    CIL_CHECK_ARG(width > 0 && height > 0, "canvas must have positive size");
    pixels_.resize(static_cast<std::size_t>(width) * height * 3);
    for (int y = 0; y < height; ++y)
        for (int x = 0; x < width; ++x) set(x, y, background);
}

void Canvas::set(int x, int y, Rgb c) {
    if (x < 0 || x >= width_ || y < 0 || y >= height_) return;
    const std::size_t i = (static_cast<std::size_t>(y) * width_ + x) * 3;
    pixels_[i] = c.r;
    pixels_[i + 1] = c.g;
    pixels_[i + 2] = c.b;
}

Rgb Canvas::at(int x, int y) const {
    CIL_CHECK_ARG(x >= 0 && x < width_ && y >= 0 && y < height_, "pixel out of range");
    const std::size_t i = (static_cast<std::size_t>(y) * width_ + x) * 3;
    return {pixels_[i], pixels_[i + 1], pixels_[i + 2]};
}

void Canvas::line(int x0, int y0, int x1, int y1, Rgb c) {
    // Bresenham
    const int dx = std::abs(x1 - x0), dy = -std::abs(y1 - y0);
    const int sx = x0 < x1 ? 1 : -1, sy = y0 < y1 ? 1 : -1;
    int err = dx + dy;
    for (;;) {
        set(x0, y0, c);
        if (x0 == x1 && y0 == y1) break;
        const int e2 = 2 * err;
        if (e2 >= dy) {
            err += dy;
            x0 += sx;
        }
        if (e2 <= dx) {
            err += dx;
            y0 += sy;
        }
    }
}

void Canvas::fill_rect(int x, int y, int w, int h, Rgb c) {
    for (int j = y; j < y + h; ++j)
        for (int i = x; i < x + w; ++i) set(i, j, c);
}

void Canvas::disc(int cx, int cy, int radius, Rgb c) {
    for (int dy = -radius; dy <= radius; ++dy)
        for (int dx = -radius; dx <= radius; ++dx)
            if (dx * dx + dy * dy <= radius * radius) set(cx + dx, cy + dy, c);
}

namespace {

// 5x7 glyphs, one byte per row, low 5 bits used.
struct Glyph {
    char ch;
    std::uint8_t rows[7];
};

constexpr Glyph kGlyphs[] = {
    {'0', {0x0e, 0x11, 0x13, 0x15, 0x19, 0x11, 0x0e}},
    {'1', {0x04, 0x0c, 0x04, 0x04, 0x04, 0x04, 0x0e}},
    {'2', {0x0e, 0x11, 0x01, 0x02, 0x04, 0x08, 0x1f}},
    {'3', {0x1f, 0x02, 0x04, 0x02, 0x01, 0x11, 0x0e}},
    {'4', {0x02, 0x06, 0x0a, 0x12, 0x1f, 0x02, 0x02}},
    {'5', {0x1f, 0x10, 0x1e, 0x01, 0x01, 0x11, 0x0e}},
    {'6', {0x06, 0x08, 0x10, 0x1e, 0x11, 0x11, 0x0e}},
    {'7', {0x1f, 0x01, 0x02, 0x04, 0x08, 0x08, 0x08}},
    {'8', {0x0e, 0x11, 0x11, 0x0e, 0x11, 0x11, 0x0e}},
    {'9', {0x0e, 0x11, 0x11, 0x0f, 0x01, 0x02, 0x0c}},
    {'.', {0x00, 0x00, 0x00, 0x00, 0x00, 0x0c, 0x0c}},
    {'-', {0x00, 0x00, 0x00, 0x1f, 0x00, 0x00, 0x00}},
};

const Glyph* find_glyph(char ch) {
    for (const auto& g : kGlyphs)
        if (g.ch == ch) return &g;
    return nullptr;
}

}  // namespace

void Canvas::text(int x, int y, const std::string& s, Rgb c) {
    int cx = x;
    for (char ch : s) {
        if (const Glyph* g = find_glyph(ch)) {
            for (int row = 0; row < 7; ++row)
                for (int col = 0; col < 5; ++col)
                    if (g->rows[row] & (1 << (4 - col))) set(cx + col, y + row, c);
        }
        cx += 6;
    }
}

void Canvas::save_png(const std::filesystem::path& path) const {
    std::FILE* fp = std::fopen(path.string().c_str(), "wb");
    if (!fp) throw Error("cannot open figure file " + path.string());

    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) {
        if (png) png_destroy_write_struct(&png, &info);
        std::fclose(fp);
        throw Error("libpng initialization failed for " + path.string());
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        std::fclose(fp);
        throw Error("libpng write failed for " + path.string());
    }

    png_init_io(png, fp);
    png_set_IHDR(png, info, static_cast<png_uint_32>(width_), static_cast<png_uint_32>(height_),
                 8, PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
                 PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    for (int y = 0; y < height_; ++y)
        png_write_row(png, const_cast<png_bytep>(pixels_.data() +
                                                 static_cast<std::size_t>(y) * width_ * 3));
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
    std::fclose(fp);
}

namespace {

constexpr Rgb kBackground{255, 255, 255};
constexpr Rgb kAxis{60, 60, 60};
constexpr Rgb kGrid{225, 225, 225};
constexpr Rgb kOld{46, 96, 188};   // blue
constexpr Rgb kNew{204, 72, 36};   // red-orange

std::string tick_label(double v) {
    char buf[32];
    if (std::abs(v) >= 100 || v == std::floor(v))
        std::snprintf(buf, sizeof(buf), "%.0f", v);
    else
        std::snprintf(buf, sizeof(buf), "%.2f", v);
    return buf;
}

}  // namespace

void render_norm_figure(const NormReport& report, const std::filesystem::path& path) {
    const Eigen::Index n_old = report.old_norms.size();
    const Eigen::Index n_new = report.new_norms.size();
    const Eigen::Index n = n_old + n_new;
    CIL_CHECK_ARG(n >= 1, "empty norm report");

    const int w = 640, h = 440;
    const int ml = 56, mr = 16, mt = 16, mb = 36;  // margins
    Canvas canvas(w, h, kBackground);

    double max_norm = 0.0;
    for (Eigen::Index i = 0; i < n_old; ++i) max_norm = std::max(max_norm, report.old_norms(i));
    for (Eigen::Index i = 0; i < n_new; ++i) max_norm = std::max(max_norm, report.new_norms(i));
    if (max_norm <= 0.0) max_norm = 1.0;
    const double y_top = max_norm * 1.05;

    const auto px = [&](Eigen::Index c) {
        if (n == 1) return ml + (w - ml - mr) / 2;
        return ml + static_cast<int>(std::lround(static_cast<double>(c) / (n - 1) *
                                                 (w - ml - mr - 1)));
    };
    const auto py = [&](double v) {
        return h - mb - static_cast<int>(std::lround(v / y_top * (h - mt - mb - 1)));
    };

    for (int t = 0; t <= 4; ++t) {
        const double v = y_top * t / 4.0;
        const int y = py(v);
        canvas.line(ml, y, w - mr, y, kGrid);
        canvas.text(6, y - 3, tick_label(v), kAxis);
    }
    canvas.line(ml, h - mb, w - mr, h - mb, kAxis);
    canvas.line(ml, mt, ml, h - mb, kAxis);

    const int x_ticks = std::min<Eigen::Index>(n, 10);
    for (int t = 0; t < x_ticks; ++t) {
        const Eigen::Index c = n == 1 ? 0 : t * (n - 1) / std::max(1, x_ticks - 1);
        canvas.line(px(c), h - mb, px(c), h - mb + 4, kAxis);
        canvas.text(px(c) - 5, h - mb + 8, tick_label(static_cast<double>(c)), kAxis);
    }

    const auto value = [&](Eigen::Index c) {
        return c < n_old ? report.old_norms(c) : report.new_norms(c - n_old);
    };
    for (Eigen::Index c = 0; c + 1 < n; ++c) {
        const Rgb color = (c + 1) < n_old ? kOld : ((c < n_old) ? kGrid : kNew);
        canvas.line(px(c), py(value(c)), px(c + 1), py(value(c + 1)), color);
    }
    for (Eigen::Index c = 0; c < n; ++c)
        canvas.disc(px(c), py(value(c)), 3, c < n_old ? kOld : kNew);

    canvas.save_png(path);
}

void render_confusion_figure(const CountMatrix& confusion, const std::filesystem::path& path) {
    const Eigen::Index n = confusion.rows();
    CIL_CHECK_ARG(n >= 1 && confusion.cols() == n, "confusion matrix must be square");

    const int border = 24;
    const int cell = std::max<int>(3, static_cast<int>(480 / n));
    const int size = static_cast<int>(n) * cell;
    Canvas canvas(size + 2 * border, size + 2 * border, kBackground);

    double max_v = 0.0;
    for (Eigen::Index r = 0; r < n; ++r)
        for (Eigen::Index c = 0; c < n; ++c)
            max_v = std::max(max_v, std::log1p(static_cast<double>(confusion(r, c))));
    if (max_v <= 0.0) max_v = 1.0;

    for (Eigen::Index r = 0; r < n; ++r) {
        for (Eigen::Index c = 0; c < n; ++c) {
            const double t = std::log1p(static_cast<double>(confusion(r, c))) / max_v;
            // dark blue to yellow
            const Rgb color{static_cast<std::uint8_t>(30 + 225 * t),
                            static_cast<std::uint8_t>(30 + 195 * t),
                            static_cast<std::uint8_t>(90 - 60 * t)};
            canvas.fill_rect(border + static_cast<int>(c) * cell,
                             border + static_cast<int>(r) * cell, cell, cell, color);
        }
    }
    canvas.line(border - 1, border - 1, border + size, border - 1, kAxis);
    canvas.line(border - 1, border - 1, border - 1, border + size, kAxis);
    canvas.line(border + size, border - 1, border + size, border + size, kAxis);
    canvas.line(border - 1, border + size, border + size, border + size, kAxis);
    canvas.text(border, border + size + 6, tick_label(static_cast<double>(n)), kAxis);

    canvas.save_png(path);
}

namespace {

std::filesystem::path step_figure_path(const std::filesystem::path& dir, const char* stem,
                                       int step) {
    return dir / (std::string(stem) + "_step" + std::to_string(step) + ".png");
}

}  // namespace

std::vector<std::filesystem::path> norm_plot(const std::vector<StepMetrics>& steps,
                                             const std::filesystem::path& dir) {
    CIL_CHECK_ARG(!steps.empty(), "no step metrics to plot");
    std::filesystem::create_directories(dir);
    std::vector<std::filesystem::path> files;
    for (const auto& m : steps) {
        auto path = step_figure_path(dir, "norms", m.step);
        render_norm_figure(m.norms, path);
        files.push_back(std::move(path));
    }
    return files;
}

std::vector<std::filesystem::path> confusion_plot(const std::vector<StepMetrics>& steps,
                                                  const std::filesystem::path& dir) {
    CIL_CHECK_ARG(!steps.empty(), "no step metrics to plot");
    std::filesystem::create_directories(dir);
    std::vector<std::filesystem::path> files;
    for (const auto& m : steps) {
        auto path = step_figure_path(dir, "confusion", m.step);
        render_confusion_figure(m.confusion, path);
        files.push_back(std::move(path));
    }
    return files;
}

}  // namespace cil
