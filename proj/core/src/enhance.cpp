#include "ldenhancer/enhance.hpp"

#include "ldenhancer/image_io.hpp"

namespace ldenhancer {

Enhancement enhance(const Network<float>& net, const Tensor<float>& image, std::size_t iterations) {
  if (image.rank() != 4 || image.c() != 3) throw ShapeError("enhance: expected N x 3 x H x W, got " + to_string(image.dims()));
  const std::size_t S = net.config().input_size;
  const bool resized = image.h() != S || image.w() != S;
  const ForwardResult<float> r = net.forward(resized ? resize_bilinear(image, S, S) : image, Mode::kEval);
  Tensor<float> ps = r.suppression, pe = r.enhancement;
  if (resized) {
    ps = resize_bilinear(ps, image.h(), image.w());
    pe = resize_bilinear(pe, image.h(), image.w());
  }
  if (iterations == 0) iterations = net.config().iterations;
  return {interweave_adjust(image, ps, pe, iterations), r.light};
}

}  // namespace ldenhancer
