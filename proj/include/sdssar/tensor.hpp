#pragma once

#include <Eigen/Core>

#include <span>

#include "sdssar/image.hpp"

namespace sdssar {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// C x (H*W) feature map, one channel per row.
struct Tensor {
    std::size_t height = 0;
    std::size_t width = 0;
    Matrix data;

    Tensor() = default;
    Tensor(std::size_t channels, std::size_t h, std::size_t w)
        : height(h), width(w), data(Matrix::Zero(static_cast<Eigen::Index>(channels),
                                                          static_cast<Eigen::Index>(h * w))) {}

    std::size_t channels() const noexcept { return static_cast<std::size_t>(data.rows()); }
    std::size_t pixels() const noexcept { return height * width; }

    static Tensor from_raster(const Raster& r);
    Raster to_raster() const;  ///< single-channel only
};

/// Reflect-101 index (numpy "reflect"): -1 -> 1, n -> n-2. Any offset is valid.
std::size_t reflect_index(std::ptrdiff_t i, std::size_t n) noexcept;

/// Geometry of one square convolution with reflective padding and "same" output.
struct ConvGeometry {
    std::size_t in_channels = 1;
    std::size_t out_channels = 1;
    std::size_t kernel = 3;
    std::size_t dilation = 1;

    std::size_t weight_count() const noexcept {
        return out_channels * in_channels * kernel * kernel;
    }
    std::size_t param_count() const noexcept { return weight_count() + out_channels; }
};

/// Column buffer for one convolution input: (C_in * K * K) x (H * W).
Matrix im2col(const Tensor& input, const ConvGeometry& g);
/// Adjoint of im2col: accumulates columns back into a C_in x (H*W) gradient.
Tensor col2im(const Matrix& cols, const ConvGeometry& g, std::size_t height,
              std::size_t width);

/// weights: out x (in*K*K) row-major view over a flat parameter block.
using WeightMap = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                                                 Eigen::RowMajor>>;
using WeightGradMap =
    Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;

/// y = W * im2col(x) + b, with `params` laid out as weights [out][in][ky][kx]
/// followed by biases. Stores the column buffer in `columns` when given.
Tensor conv_forward(const Tensor& input, const ConvGeometry& g, std::span<const double> params,
                    Matrix* columns = nullptr);

/// Backward of conv_forward given dL/dy. Accumulates dL/dW and dL/db into
/// `grad_params` unless it is empty; returns dL/dx when `input_grad` is set
/// (an empty tensor otherwise).
Tensor conv_backward(const Matrix& columns, const Tensor& grad_output, const ConvGeometry& g,
                     std::span<const double> params, std::span<double> grad_params,
                     bool input_grad);

/// 2x2 average pooling with stride 2 (trailing odd row/col dropped). An axis
/// shorter than 2 is passed through unpooled.
Tensor avg_pool2(const Tensor& input);
Tensor avg_pool2_backward(const Tensor& grad_out, std::size_t in_height, std::size_t in_width);

}  // namespace sdssar
