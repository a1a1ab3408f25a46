#include "ldenhancer/image_io.hpp"

#include <algorithm>
#include <cctype>
#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>
#include <string>

namespace ldenhancer {

namespace {

// 8-bit BGR(A)/gray Mat -> 1 x 3 x H x W RGB float tensor in [0, 1].
Tensor<float> from_mat(const cv::Mat& src) {
  cv::Mat bgr;
  if (src.channels() == 1) {
    cv::cvtColor(src, bgr, cv::COLOR_GRAY2BGR);
  } else if (src.channels() == 4) {
    cv::cvtColor(src, bgr, cv::COLOR_BGRA2BGR);
  } else {
    bgr = src;
  }
  cv::Mat f;
  bgr.convertTo(f, CV_32FC3, 1.0 / 255.0);
  const auto H = static_cast<std::size_t>(f.rows), W = static_cast<std::size_t>(f.cols);
  Tensor<float> t = Tensor<float>::nchw(1, 3, H, W);
  for (std::size_t y = 0; y < H; ++y) {
    const auto* row = f.ptr<cv::Vec3f>(static_cast<int>(y));
    for (std::size_t x = 0; x < W; ++x)
      for (std::size_t c = 0; c < 3; ++c) t.at(0, c, y, x) = row[x][2 - c];
  }
  return t;
}

}  // namespace

bool is_image_file(const std::filesystem::path& path) {
  std::string ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char ch) { return std::tolower(ch); });
  return ext == ".png" || ext == ".jpg" || ext == ".jpeg" || ext == ".bmp" || ext == ".tif" || ext == ".tiff" ||
         ext == ".ppm" || ext == ".pgm";
}

Tensor<float> load_image(const std::filesystem::path& path, std::size_t size) {
  const cv::Mat raw = cv::imread(path.string(), cv::IMREAD_UNCHANGED);
  if (raw.empty()) throw IoError("cannot read image " + path.string());
  if (raw.depth() != CV_8U) throw IoError("expected an 8-bit image: " + path.string());
  Tensor<float> t = from_mat(raw);
  if (size > 0 && (t.h() != size || t.w() != size)) t = resize_bilinear(t, size, size);
  return t;
}

Tensor<float> resize_bilinear(const Tensor<float>& images, std::size_t height, std::size_t width) {
  if (images.rank() != 4) throw ShapeError("resize_bilinear: expected NCHW, got " + to_string(images.dims()));
  if (height == 0 || width == 0) throw ShapeError("resize_bilinear: empty target size");
  Tensor<float> out = Tensor<float>::nchw(images.n(), images.c(), height, width);
  for (std::size_t b = 0; b < images.n(); ++b)
    for (std::size_t c = 0; c < images.c(); ++c) {
      const cv::Mat src(static_cast<int>(images.h()), static_cast<int>(images.w()), CV_32F,
                        const_cast<float*>(images.plane(b, c)));
      cv::Mat dst(static_cast<int>(height), static_cast<int>(width), CV_32F, out.plane(b, c));
      cv::resize(src, dst, dst.size(), 0, 0, cv::INTER_LINEAR);
    }
  return out;
}

void save_image(const Tensor<float>& images, const std::filesystem::path& path, std::size_t index) {
  if (images.rank() != 4 || images.c() != 3 || index >= images.n()) {
    throw ShapeError("save_image: expected N x 3 x H x W, got " + to_string(images.dims()));
  }
  const auto H = images.h(), W = images.w();
  cv::Mat out(static_cast<int>(H), static_cast<int>(W), CV_8UC3);
  for (std::size_t y = 0; y < H; ++y) {
    auto* row = out.ptr<cv::Vec3b>(static_cast<int>(y));
    for (std::size_t x = 0; x < W; ++x)
      for (std::size_t c = 0; c < 3; ++c) {
        const float v = std::clamp(images.at(index, c, y, x), 0.0f, 1.0f);
        row[x][2 - c] = static_cast<unsigned char>(std::lround(v * 255.0f));
      }
  }
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  if (!cv::imwrite(path.string(), out)) throw IoError("cannot write image " + path.string());
}

}  // namespace ldenhancer
