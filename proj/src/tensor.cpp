#include "demn/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>

#include "demn/error.hpp"

namespace demn {

std::string_view to_string(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::dimension_mismatch: return "DimensionMismatch";
        case ErrorKind::non_finite: return "NonFinite";
        case ErrorKind::not_scalar: return "NotScalar";
        case ErrorKind::missing_column: return "MissingColumn";
        case ErrorKind::empty_sentence: return "EmptySentence";
        case ErrorKind::bad_label: return "BadLabel";
        case ErrorKind::embedding_dim_mismatch: return "EmbeddingDimMismatch";
        case ErrorKind::sidecar_length_mismatch: return "SidecarLengthMismatch";
        case ErrorKind::tag_out_of_range: return "TagOutOfRange";
        case ErrorKind::empty_feature_set: return "EmptyFeatureSet";
        case ErrorKind::width_mismatch: return "WidthMismatch";
        case ErrorKind::too_few_stories: return "TooFewStories";
        case ErrorKind::checksum_mismatch: return "ChecksumMismatch";
        case ErrorKind::unknown_story_id: return "UnknownStoryId";
        case ErrorKind::unknown_token: return "UnknownToken";
        case ErrorKind::io: return "IoError";
        case ErrorKind::bad_format: return "BadFormat";
        case ErrorKind::invalid_argument: return "InvalidArgument";
    }
    return "Error";
}

Tensor::Tensor(std::vector<std::size_t> shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
    const std::size_t n = std::accumulate(shape_.begin(), shape_.end(), std::size_t{1}, std::multiplies<>());
    if (shape_.empty() || n != data_.size())
        throw Error(ErrorKind::dimension_mismatch,
                    "shape " + shape_string() + " does not hold " + std::to_string(data_.size()) + " values");
}

Tensor::Tensor(std::size_t rows, std::size_t cols, double fill) : shape_{rows, cols}, data_(rows * cols, fill) {}

Tensor Tensor::zeros_like(const Tensor& t) { return Tensor(t.shape_, std::vector<double>(t.size(), 0.0)); }

Tensor Tensor::from_rows(std::initializer_list<std::initializer_list<double>> rows) {
    const std::size_t r = rows.size();
    const std::size_t c = r == 0 ? 0 : rows.begin()->size();
    std::vector<double> data;
    data.reserve(r * c);
    for (const auto& row : rows) {
        if (row.size() != c) throw Error(ErrorKind::dimension_mismatch, "ragged row list");
        data.insert(data.end(), row.begin(), row.end());
    }
    return Tensor({r, c}, std::move(data));
}

std::size_t Tensor::rows() const {
    if (rank() == 1) return 1;
    if (rank() != 2) throw Error(ErrorKind::dimension_mismatch, "expected a matrix, got " + shape_string());
    return shape_[0];
}

std::size_t Tensor::cols() const {
    if (rank() == 1) return shape_[0];
    if (rank() != 2) throw Error(ErrorKind::dimension_mismatch, "expected a matrix, got " + shape_string());
    return shape_[1];
}

std::span<double> Tensor::row(std::size_t r) {
    const std::size_t c = cols();
    return {data_.data() + r * c, c};
}

std::span<const double> Tensor::row(std::size_t r) const {
    const std::size_t c = cols();
    return {data_.data() + r * c, c};
}

void Tensor::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

bool Tensor::all_finite() const noexcept {
    return std::all_of(data_.begin(), data_.end(), [](double x) { return std::isfinite(x); });
}

std::string Tensor::shape_string() const {
    std::string s = "[";
    for (std::size_t i = 0; i < shape_.size(); ++i) {
        if (i) s += "x";
        s += std::to_string(shape_[i]);
    }
    return s + "]";
}

}  // namespace demn
