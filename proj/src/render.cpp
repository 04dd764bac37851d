#include <png.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <sstream>
#include <vector>

#include "pmrt/errors.hpp"
#include "pmrt/evaluation.hpp"

namespace pmrt {

namespace {

struct Canvas {
  int width, height;
  std::vector<unsigned char> rgb;

  Canvas(int w, int h) : width(w), height(h), rgb(static_cast<size_t>(w) * h * 3, 255) {}

  void set(int x, int y, unsigned char r, unsigned char g, unsigned char b) {
    if (x < 0 || x >= width || y < 0 || y >= height) return;
    size_t at = (static_cast<size_t>(y) * width + x) * 3;
    rgb[at] = r;
    rgb[at + 1] = g;
    rgb[at + 2] = b;
  }

  void line(int x0, int y0, int x1, int y1, unsigned char r, unsigned char g,
            unsigned char b) {
    int dx = std::abs(x1 - x0), sx = x0 < x1 ? 1 : -1;
    int dy = -std::abs(y1 - y0), sy = y0 < y1 ? 1 : -1;
    int err = dx + dy;
    while (true) {
      set(x0, y0, r, g, b);
      if (x0 == x1 && y0 == y1) break;
      int e2 = 2 * err;
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

  void dot(int x, int y, unsigned char r, unsigned char g, unsigned char b) {
    for (int oy = -1; oy <= 1; ++oy)
      for (int ox = -1; ox <= 1; ++ox) set(x + ox, y + oy, r, g, b);
  }
};

void write_png(const std::string& path, const Canvas& canvas) {
  std::vector<png_bytep> rows(canvas.height);
  for (int r = 0; r < canvas.height; ++r)
    rows[r] = const_cast<png_bytep>(
        canvas.rgb.data() + static_cast<size_t>(r) * canvas.width * 3);

  FILE* fp = std::fopen(path.c_str(), "wb");
  if (!fp) throw IoError("cannot write " + path);
  png_structp png =
      png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info || setjmp(png_jmpbuf(png))) {
    if (png) png_destroy_write_struct(&png, info ? &info : nullptr);
    std::fclose(fp);
    throw IoError("png encoding failed for " + path);
  }
  png_init_io(png, fp);
  png_set_IHDR(png, info, canvas.width, canvas.height, 8, PNG_COLOR_TYPE_RGB,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  png_write_image(png, rows.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  if (std::fclose(fp) != 0) throw IoError("short write to " + path);
}

}  // namespace

std::vector<std::string> render_frames(const SkeletonSequence& seq,
                                       const std::vector<int>& frame_indices,
                                       const SkeletonTopology& topology,
                                       const std::string& out_dir,
                                       const RenderBounds& bounds, int width,
                                       int height) {
  if (seq.joint_count() != topology.joint_count())
    throw ShapeMismatch("sequence has " + std::to_string(seq.joint_count()) +
                        " joints, topology " +
                        std::to_string(topology.joint_count()));
  for (int f : frame_indices)
    if (f < 0 || f >= seq.frame_count())
      throw IndexOutOfRange("frame " + std::to_string(f) + " outside 0.." +
                            std::to_string(seq.frame_count() - 1));
  std::filesystem::create_directories(out_dir);

  // Orthographic: x right, y up, z dropped.
  auto px = [&](double x) {
    return static_cast<int>(std::lround(
        (x - bounds.x_min) / (bounds.x_max - bounds.x_min) * (width - 1)));
  };
  auto py = [&](double y) {
    return static_cast<int>(std::lround(
        (bounds.y_max - y) / (bounds.y_max - bounds.y_min) * (height - 1)));
  };

  std::vector<std::string> paths;
  for (int f : frame_indices) {
    Canvas canvas(width, height);
    for (int j = 0; j < seq.joint_count(); ++j) {
      int pj = topology.parent[j];
      if (pj == j) continue;
      canvas.line(px(seq.at(j, f, 0)), py(seq.at(j, f, 1)),
                  px(seq.at(pj, f, 0)), py(seq.at(pj, f, 1)), 50, 50, 90);
    }
    for (int j = 0; j < seq.joint_count(); ++j)
      canvas.dot(px(seq.at(j, f, 0)), py(seq.at(j, f, 1)), 200, 40, 70);

    std::ostringstream name;
    name << seq.name() << "_f" << f << ".png";
    std::string path = (std::filesystem::path(out_dir) / name.str()).string();
    write_png(path, canvas);
    paths.push_back(path);
  }
  return paths;
}

}  // namespace pmrt
