#ifndef CIL_PLOTTING_HPP
#define CIL_PLOTTING_HPP

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "cil/metrics.hpp"

namespace cil {

struct Rgb {
    std::uint8_t r = 0, g = 0, b = 0;
};

/// Fixed-size RGB raster with just enough drawing primitives for the figure
/// renderers. Glyphs cover digits, '.', '-' for tick labels.
class Canvas {
public:
    Canvas(int width, int height, Rgb background);

    int width() const { return width_; }
    int height() const { return height_; }

    void set(int x, int y, Rgb c);
    Rgb at(int x, int y) const;
    void line(int x0, int y0, int x1, int y1, Rgb c);
    void fill_rect(int x, int y, int w, int h, Rgb c);
    void disc(int cx, int cy, int radius, Rgb c);
    void text(int x, int y, const std::string& s, Rgb c);

    void save_png(const std::filesystem::path& path) const;

private:
    int width_;
    int height_;
    std::vector<std::uint8_t> pixels_;  // RGB8, row-major
};

/// Per-class weight norms for one step, old classes vs new classes.
void render_norm_figure(const NormReport& report, const std::filesystem::path& path);

/// Heatmap of confusion counts with log(1+x) intensity.
void render_confusion_figure(const CountMatrix& confusion, const std::filesystem::path& path);

/// Writes norms_step<b>.png for every step into dir. Returns the file paths.
std::vector<std::filesystem::path> norm_plot(const std::vector<StepMetrics>& steps,
                                             const std::filesystem::path& dir);

/// Writes confusion_step<b>.png for every step into dir.
std::vector<std::filesystem::path> confusion_plot(const std::vector<StepMetrics>& steps,
                                                  const std::filesystem::path& dir);

}  // namespace cil

#endif  // CIL_PLOTTING_HPP
