#include "sdssar/tensor.hpp"

#include "sdssar/errors.hpp"

namespace sdssar {

Tensor Tensor::from_raster(const Raster& r) {
    Tensor t(1, r.height, r.width);
    for (std::size_t i = 0; i < r.size(); ++i) t.data(0, static_cast<Eigen::Index>(i)) = r.values[i];
    return t;
}

Raster Tensor::to_raster() const {
    if (channels() != 1) throw InvalidArgument("to_raster needs a single-channel tensor");
    Raster r(width, height);
    for (std::size_t i = 0; i < r.size(); ++i) r.values[i] = data(0, static_cast<Eigen::Index>(i));
    return r;
}

std::size_t reflect_index(std::ptrdiff_t i, std::size_t n) noexcept {
    if (n == 1) return 0;
    const auto period = static_cast<std::ptrdiff_t>(2 * (n - 1));
    i %= period;
    if (i < 0) i += period;
    if (i >= static_cast<std::ptrdiff_t>(n)) i = period - i;
    return static_cast<std::size_t>(i);
}

namespace {

/// Source pixel index for every (tap, output pixel).
std::vector<Eigen::Index> tap_table(const ConvGeometry& g, std::size_t h, std::size_t w) {
    const auto half = static_cast<std::ptrdiff_t>(g.kernel / 2);
    const auto dil = static_cast<std::ptrdiff_t>(g.dilation);
    std::vector<Eigen::Index> table(g.kernel * g.kernel * h * w);
    std::size_t t = 0;
    for (std::size_t ky = 0; ky < g.kernel; ++ky) {
        for (std::size_t kx = 0; kx < g.kernel; ++kx) {
            const std::ptrdiff_t dy = (static_cast<std::ptrdiff_t>(ky) - half) * dil;
            const std::ptrdiff_t dx = (static_cast<std::ptrdiff_t>(kx) - half) * dil;
            std::vector<std::size_t> cols(w);
            for (std::size_t c = 0; c < w; ++c) cols[c] = reflect_index(static_cast<std::ptrdiff_t>(c) + dx, w);
            for (std::size_t r = 0; r < h; ++r) {
                const std::size_t rr = reflect_index(static_cast<std::ptrdiff_t>(r) + dy, h);
                for (std::size_t c = 0; c < w; ++c) {
                    table[t++] = static_cast<Eigen::Index>(rr * w + cols[c]);
                }
            }
        }
    }
    return table;
}

}  // namespace

Matrix im2col(const Tensor& input, const ConvGeometry& g) {
    if (input.channels() != g.in_channels) throw InvalidArgument("im2col: channel mismatch");
    const std::size_t taps = g.kernel * g.kernel;
    const auto np = static_cast<Eigen::Index>(input.pixels());
    const auto table = tap_table(g, input.height, input.width);
    Matrix cols(static_cast<Eigen::Index>(g.in_channels * taps), np);
    for (std::size_t c = 0; c < g.in_channels; ++c) {
        const auto ci = static_cast<Eigen::Index>(c);
        for (std::size_t t = 0; t < taps; ++t) {
            const auto row = static_cast<Eigen::Index>(c * taps + t);
            const Eigen::Index* src = table.data() + t * static_cast<std::size_t>(np);
            for (Eigen::Index p = 0; p < np; ++p) cols(row, p) = input.data(ci, src[p]);
        }
    }
    return cols;
}

Tensor col2im(const Matrix& cols, const ConvGeometry& g, std::size_t height,
              std::size_t width) {
    const std::size_t taps = g.kernel * g.kernel;
    const auto np = static_cast<Eigen::Index>(height * width);
    const auto table = tap_table(g, height, width);
    Tensor out(g.in_channels, height, width);
    for (std::size_t c = 0; c < g.in_channels; ++c) {
        const auto ci = static_cast<Eigen::Index>(c);
        for (std::size_t t = 0; t < taps; ++t) {
            const auto row = static_cast<Eigen::Index>(c * taps + t);
            const Eigen::Index* dst = table.data() + t * static_cast<std::size_t>(np);
            for (Eigen::Index p = 0; p < np; ++p) out.data(ci, dst[p]) += cols(row, p);
        }
    }
    return out;
}

Tensor avg_pool2(const Tensor& input) {
    const std::size_t fy = input.height >= 2 ? 2 : 1;
    const std::size_t fx = input.width >= 2 ? 2 : 1;
    const std::size_t oh = input.height / fy;
    const std::size_t ow = input.width / fx;
    Tensor out(input.channels(), oh, ow);
    const double w = 1.0 / static_cast<double>(fy * fx);
    for (Eigen::Index c = 0; c < input.data.rows(); ++c) {
        for (std::size_t r = 0; r < oh; ++r) {
            for (std::size_t col = 0; col < ow; ++col) {
                double s = 0.0;
                for (std::size_t dy = 0; dy < fy; ++dy)
                    for (std::size_t dx = 0; dx < fx; ++dx)
                        s += input.data(c, static_cast<Eigen::Index>((r * fy + dy) * input.width + col * fx + dx));
                out.data(c, static_cast<Eigen::Index>(r * ow + col)) = s * w;
            }
        }
    }
    return out;
}

Tensor avg_pool2_backward(const Tensor& grad_out, std::size_t in_height, std::size_t in_width) {
    const std::size_t fy = in_height >= 2 ? 2 : 1;
    const std::size_t fx = in_width >= 2 ? 2 : 1;
    Tensor grad(grad_out.channels(), in_height, in_width);
    const double w = 1.0 / static_cast<double>(fy * fx);
    for (Eigen::Index c = 0; c < grad_out.data.rows(); ++c) {
        for (std::size_t r = 0; r < grad_out.height; ++r) {
            for (std::size_t col = 0; col < grad_out.width; ++col) {
                const double g = grad_out.data(c, static_cast<Eigen::Index>(r * grad_out.width + col)) * w;
                for (std::size_t dy = 0; dy < fy; ++dy)
                    for (std::size_t dx = 0; dx < fx; ++dx)
                        grad.data(c, static_cast<Eigen::Index>((r * fy + dy) * in_width + col * fx + dx)) += g;
            }
        }
    }
    return grad;
}

}  // namespace sdssar

namespace sdssar {

Tensor conv_forward(const Tensor& input, const ConvGeometry& g, std::span<const double> params,
                    Matrix* columns) {
    if (params.size() != g.param_count()) throw InvalidArgument("conv: parameter block size mismatch");
    const auto cols_in = static_cast<Eigen::Index>(g.in_channels * g.kernel * g.kernel);
    const auto outc = static_cast<Eigen::Index>(g.out_channels);
    WeightMap w(params.data(), outc, cols_in);
    Eigen::Map<const Eigen::VectorXd> b(params.data() + g.weight_count(), outc);
    Matrix cols = im2col(input, g);
    Tensor out(g.out_channels, input.height, input.width);
    out.data.noalias() = w * cols;
    out.data.colwise() += b;
    if (columns) *columns = std::move(cols);
    return out;
}

Tensor conv_backward(const Matrix& columns, const Tensor& grad_output, const ConvGeometry& g,
                     std::span<const double> params, std::span<double> grad_params,
                     bool input_grad) {
    const auto cols_in = static_cast<Eigen::Index>(g.in_channels * g.kernel * g.kernel);
    const auto outc = static_cast<Eigen::Index>(g.out_channels);
    if (!grad_params.empty()) {
        if (grad_params.size() != g.param_count()) throw InvalidArgument("conv: gradient block size mismatch");
        WeightGradMap gw(grad_params.data(), outc, cols_in);
        Eigen::Map<Eigen::VectorXd> gb(grad_params.data() + g.weight_count(), outc);
        gw.noalias() += grad_output.data * columns.transpose();
        gb += grad_output.data.rowwise().sum();
    }
    if (!input_grad) return {};
    WeightMap w(params.data(), outc, cols_in);
    Matrix grad_cols = w.transpose() * grad_output.data;
    return col2im(grad_cols, g, grad_output.height, grad_output.width);
}

}  // namespace sdssar
