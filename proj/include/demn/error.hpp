#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace demn {

enum class ErrorKind {
    dimension_mismatch,
    non_finite,
    not_scalar,
    missing_column,
    empty_sentence,
    bad_label,
    embedding_dim_mismatch,
    sidecar_length_mismatch,
    tag_out_of_range,
    empty_feature_set,
    width_mismatch,
    too_few_stories,
    checksum_mismatch,
    unknown_story_id,
    unknown_token,
    io,
    bad_format,
    invalid_argument,
};

std::string_view to_string(ErrorKind kind);

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

}  // namespace demn
